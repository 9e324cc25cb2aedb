"""MCMC engine: sweep scheduling, label moves, retention, and summaries.

Each sweep updates, in this fixed order: the matching M (skipped in labeled
mode), the rotation A, the translation(s) (when enabled), the noise
precision(s) (exact gamma draws), the scale factor(s) (halfnormal-gamma
Metropolis), and, in two-scale mode, one group-label switch.  Chains are
deterministic given the seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import Configuration, centroid, euler_from_rotation, random_rotation, rotation_from_euler
from .distributions import (
    _matrix_fisher_sweep,
    _angle_steps,
    _von_mises_params,
    hng_metropolis_step,
)
from .matching import MatchingMatrix, propose_match_move
from .model import (
    ChainState,
    PriorSpec,
    log_joint,
    log_joint_two_scale,
    noise_conditional,
    rotation_conditional_param,
    scale_conditional_params,
    translation_conditional,
)

__all__ = [
    "ChainSettings",
    "SampleRecord",
    "ChainOutput",
    "PosteriorSummary",
    "run_chain",
    "label_switch_move",
    "summarize",
    "summary_json_dict",
    "trace_export",
    "read_trace",
    "merge_outputs",
]

NOISE_FLOOR = 1e-12
UPDATE_KINDS = ("matching", "rotation", "translation", "noise", "scale", "labels")


@dataclass(frozen=True)
class ChainSettings:
    iterations: int = 100_000
    burnin: int = 10_000
    thin: int = 10
    seed: int = 0
    n_scales: int = 1
    order_constrained: bool = False
    labeled: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burnin < self.iterations:
            raise ValueError("burnin must satisfy 0 <= burnin < iterations")
        if self.thin < 1:
            raise ValueError("thin must be positive")
        if self.n_scales not in (1, 2):
            raise ValueError("n_scales must be 1 or 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SampleRecord:
    """One retained state, reduced to scalars plus the matching."""

    scales: tuple
    noise_vars: tuple
    angles: tuple
    translations: tuple
    matches: tuple  # ((j, k, group), ...) sorted by j
    log_joint: float

    @property
    def L(self) -> int:
        return len(self.matches)


@dataclass
class ChainOutput:
    settings: ChainSettings
    dim: int
    m: int
    n: int
    x_id: str
    y_id: str
    translation_enabled: bool
    records: list
    accept_counts: dict
    attempt_counts: dict
    seeds: tuple = ()

    def __post_init__(self):
        if not self.seeds:
            self.seeds = (self.settings.seed,)

    @property
    def n_samples(self) -> int:
        return len(self.records)


def _merge_key(out: ChainOutput) -> tuple:
    s = out.settings
    return (
        out.dim,
        out.m,
        out.n,
        out.x_id,
        out.y_id,
        out.translation_enabled,
        s.iterations,
        s.burnin,
        s.thin,
        s.n_scales,
        s.order_constrained,
        s.labeled,
    )


def merge_outputs(outputs) -> ChainOutput:
    """Concatenate chains run with identical settings (seeds may differ)."""
    outputs = list(outputs)
    if not outputs:
        raise ValueError("nothing to merge")
    key = _merge_key(outputs[0])
    for other in outputs[1:]:
        if _merge_key(other) != key:
            raise ValueError("chains have incompatible settings or schemas")
    first = outputs[0]
    records = [rec for out in outputs for rec in out.records]
    accept = {k: sum(o.accept_counts.get(k, 0) for o in outputs) for k in UPDATE_KINDS}
    attempt = {k: sum(o.attempt_counts.get(k, 0) for o in outputs) for k in UPDATE_KINDS}
    seeds = tuple(s for o in outputs for s in o.seeds)
    return ChainOutput(
        first.settings,
        first.dim,
        first.m,
        first.n,
        first.x_id,
        first.y_id,
        first.translation_enabled,
        records,
        accept,
        attempt,
        seeds,
    )


def _label_items(state: ChainState):
    """Flippable items: matched pairs jointly, unmatched points singly."""
    matched_x = {j for j, _ in state.matching.pairs}
    matched_y = {k for _, k in state.matching.pairs}
    items = [("pair", j, k) for j, k in state.matching.sorted_pairs]
    items += [("x", j, None) for j in range(1, state.labels_x.shape[0] + 1) if j not in matched_x]
    items += [("y", k, None) for k in range(1, state.labels_y.shape[0] + 1) if k not in matched_y]
    return items


def _label_switch(
    state: ChainState,
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
    rng: np.random.Generator,
    current_lj: float | None = None,
) -> tuple[ChainState, bool, float]:
    if state.n_scales != 2:
        raise ValueError("label switching requires a two-scale state")
    if current_lj is None:
        current_lj = log_joint_two_scale(state, x, y, priors)
    items = _label_items(state)
    kind, a, b = items[rng.integers(len(items))]
    labels_x = state.labels_x
    labels_y = state.labels_y
    if kind in ("pair", "x"):
        labels_x = labels_x.copy()
        labels_x[a - 1] = 1 - labels_x[a - 1]
    if kind == "pair":
        labels_y = labels_y.copy()
        labels_y[b - 1] = 1 - labels_y[b - 1]
    elif kind == "y":
        labels_y = labels_y.copy()
        labels_y[a - 1] = 1 - labels_y[a - 1]
    proposal = replace(state, labels_x=labels_x, labels_y=labels_y)
    prop_lj = log_joint_two_scale(proposal, x, y, priors)
    if math.log(rng.random()) < prop_lj - current_lj:
        return proposal, True, prop_lj
    return state, False, current_lj


def label_switch_move(
    state: ChainState,
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
    rng: np.random.Generator,
) -> ChainState:
    """Metropolis flip of one item's group label (a matched pair flips jointly).

    States violating the scale ordering or the label-consistency invariant
    are never produced; acceptance uses the two-scale log joint difference.
    """
    new_state, _, _ = _label_switch(state, x, y, priors, rng)
    return new_state


N_PILOT_CHAINS = 12
PILOT_SWEEPS = 400


def _initial_state(
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
    settings: ChainSettings,
    rotation: np.ndarray | None = None,
    scale: float = 1.0,
) -> tuple[ChainState, np.ndarray]:
    d = x.dim
    g = settings.n_scales
    if rotation is None:
        rotation = np.eye(d)
    try:
        theta = euler_from_rotation(rotation)
    except ValueError:
        # nudge away from the Euler chart's gimbal region
        rotation = rotation_from_euler((1e-3, 1e-3, 1e-3)) @ rotation
        theta = euler_from_rotation(rotation)
    rotation = rotation_from_euler(theta if d == 3 else theta[0])
    scales = np.array([scale]) if g == 1 else np.array([0.9 * scale, 1.1 * scale])
    noise = np.full(g, priors.beta / priors.alpha)
    taus = np.zeros((g, d))
    if priors.translation_enabled and x.m and y.m:
        # consistent with the starting rotation and scale, so that the first
        # matching proposals see small residuals in the right basin
        taus[:] = centroid(x) - scale * rotation @ centroid(y)
    if settings.labeled:
        matching = MatchingMatrix.identity(x.m)
    else:
        matching = MatchingMatrix.empty(x.m, y.m)
    labels_x = labels_y = None
    if g == 2:
        labels_x = np.arange(x.m) % 2
        labels_y = np.arange(y.m) % 2
    state = ChainState(
        rotation=rotation,
        translations=taus,
        scales=scales,
        noise_vars=noise,
        matching=matching,
        labels_x=labels_x,
        labels_y=labels_y,
    )
    return state, theta


def _second_moment(points: np.ndarray, about_origin: bool) -> np.ndarray:
    if not about_origin:
        points = points - points.mean(axis=0)
    return points.T @ points / points.shape[0]


def _moment_rotations(x: Configuration, y: Configuration, about_origin: bool) -> list[np.ndarray]:
    """Rotations aligning the principal axes of the two point clouds.

    Sign flips of the eigenvectors give 2 (d=2) or 4 (d=3) candidates in
    SO(d); with unknown correspondence these bracket the orientations a
    full matching could plausibly require.  Moments are taken about the
    origin when the model has no translation term (vector-valued data).
    """
    d = x.dim
    if x.m < 2 or y.m < 2:
        return []
    _, ux = np.linalg.eigh(_second_moment(x.points, about_origin))
    _, uy = np.linalg.eigh(_second_moment(y.points, about_origin))
    out = []
    for bits in range(2**d):
        signs = np.array([1.0 if bits & (1 << i) == 0 else -1.0 for i in range(d)])
        cand = ux @ np.diag(signs) @ uy.T
        if np.linalg.det(cand) > 0:
            out.append(cand)
    return out


def _moment_scale(x: Configuration, y: Configuration, about_origin: bool) -> float:
    if x.m < 2 or y.m < 2:
        return 1.0
    sx = float(np.trace(_second_moment(x.points, about_origin)))
    sy = float(np.trace(_second_moment(y.points, about_origin)))
    if sx <= 0 or sy <= 0:
        return 1.0
    return math.sqrt(sx / sy)


def _longest_increasing_pairs(pairs: list) -> list:
    """Largest subset of (j, k) pairs, sorted by j, with strictly increasing k."""
    pairs = sorted(pairs)
    best_len = [1] * len(pairs)
    parent = [-1] * len(pairs)
    for i, (ji, ki) in enumerate(pairs):
        for h in range(i):
            jh, kh = pairs[h]
            if jh < ji and kh < ki and best_len[h] + 1 > best_len[i]:
                best_len[i] = best_len[h] + 1
                parent[i] = h
    if not pairs:
        return []
    i = int(np.argmax(best_len))
    out = []
    while i != -1:
        out.append(pairs[i])
        i = parent[i]
    return out[::-1]


def _nn_matching(
    x: Configuration,
    y: Configuration,
    rotation: np.ndarray,
    scale: float,
    tau: np.ndarray,
    order_constrained: bool,
    about_origin: bool,
) -> MatchingMatrix:
    """Mutual nearest-neighbour pairs under a candidate transform, gated to a
    fraction of the x-cloud spread; used only to seed pilot chains."""
    if x.m == 0 or y.m == 0:
        return MatchingMatrix.empty(x.m, y.m)
    ty = scale * y.points @ rotation.T + tau
    diff = x.points[:, None, :] - ty[None, :, :]
    dist = np.sqrt(np.einsum("jkd,jkd->jk", diff, diff))
    if x.m > 1:
        gate = 0.6 * math.sqrt(max(float(np.trace(_second_moment(x.points, about_origin))), 1e-12))
    else:
        gate = np.inf
    nn_of_x = np.argmin(dist, axis=1)
    nn_of_y = np.argmin(dist, axis=0)
    pairs = [
        (j + 1, int(nn_of_x[j]) + 1)
        for j in range(x.m)
        if nn_of_y[nn_of_x[j]] == j and dist[j, nn_of_x[j]] <= gate
    ]
    if order_constrained:
        pairs = _longest_increasing_pairs(pairs)
    return MatchingMatrix(x.m, y.m, frozenset(pairs))


def _procrustes_fit(
    xm: np.ndarray, ym: np.ndarray, translation: bool
) -> tuple[np.ndarray, float, np.ndarray]:
    """Least-squares (rotation, scale, translation) for matched point rows."""
    d = xm.shape[1]
    if translation:
        xc, yc = xm.mean(axis=0), ym.mean(axis=0)
        xm0, ym0 = xm - xc, ym - yc
    else:
        xm0, ym0 = xm, ym
    u, _, vt = np.linalg.svd(xm0.T @ ym0)
    fix = np.eye(d)
    fix[-1, -1] = np.linalg.det(u @ vt)
    rot = u @ fix @ vt
    denom = float(np.einsum("ij,ij->", ym0, ym0))
    scale = float(np.einsum("ij,ij->", xm0, ym0 @ rot.T)) / denom if denom > 0 else 1.0
    scale = max(scale, 1e-6)
    tau = xm.mean(axis=0) - scale * rot @ ym.mean(axis=0) if translation else np.zeros(d)
    return rot, scale, tau


def _refine_pilot_transform(
    x: Configuration,
    y: Configuration,
    rotation: np.ndarray,
    scale: float,
    tau: np.ndarray,
    order_constrained: bool,
    translation: bool,
    rounds: int = 3,
) -> tuple[np.ndarray, float, np.ndarray, MatchingMatrix]:
    """A few match-then-refit rounds to pull a pilot start into its basin."""
    about_origin = not translation
    matching = _nn_matching(x, y, rotation, scale, tau, order_constrained, about_origin)
    for _ in range(rounds):
        if matching.L < 2:
            break
        rot_new, scale_new, tau_new = _procrustes_fit(
            x.points[matching.x_indices], y.points[matching.y_indices], translation
        )
        new_matching = _nn_matching(
            x, y, rot_new, scale_new, tau_new, order_constrained, about_origin
        )
        rotation, scale, tau = rot_new, scale_new, tau_new
        if new_matching.pairs == matching.pairs:
            matching = new_matching
            break
        matching = new_matching
    return rotation, scale, tau, matching


def run_chain(
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
    settings: ChainSettings,
    rng: np.random.Generator | None = None,
) -> ChainOutput:
    """Run one MCMC chain and return the retained, thinned samples.

    The joint posterior over (M, A, ...) is multimodal in general, so the
    main chain is preceded by a multistart phase: short pilot runs from
    dispersed rotation starts (identity, principal-axes alignments of the
    two clouds, and Haar-random draws) are scored by their final log joint
    and the best end state seeds the main chain.  Everything is driven by
    one generator, so runs are bit-reproducible given the seed.
    """
    if x.dim != y.dim or priors.dim != x.dim:
        raise ValueError("dimension mismatch between configurations and priors")
    if settings.labeled and x.m != y.m:
        raise ValueError("labeled mode requires m == n")
    if rng is None:
        rng = np.random.default_rng(settings.seed)
    d = x.dim
    g = settings.n_scales
    lj_fn = log_joint if g == 1 else log_joint_two_scale
    accept = dict.fromkeys(UPDATE_KINDS, 0)
    attempt = dict.fromkeys(UPDATE_KINDS, 0)
    records: list[SampleRecord] = []

    def sweep(state, theta, current_lj, count):
        # matching move
        if not settings.labeled and x.m and y.m:
            if g == 2:
                lx, ly = state.labels_x, state.labels_y
                filt = lambda j, k: lx[j - 1] == ly[k - 1]  # noqa: E731
            else:
                filt = None
            prop, lratio = propose_match_move(state.matching, settings.order_constrained, rng, filt)
            if prop is not state.matching:
                if count:
                    attempt["matching"] += 1
                old = state.matching
                state.matching = prop
                prop_lj = lj_fn(state, x, y, priors)
                if math.log(rng.random()) < prop_lj - current_lj + lratio:
                    if count:
                        accept["matching"] += 1
                    current_lj = prop_lj
                else:
                    state.matching = old

        # rotation
        f_post = rotation_conditional_param(state, x, y, priors)
        if count:
            attempt["rotation"] += 1
        if d == 2:
            mu, kap = _von_mises_params(f_post)
            theta[0] = rng.vonmises(mu, kap)
            state.rotation = rotation_from_euler(theta[0])
            if count:
                accept["rotation"] += 1
        else:
            theta, n_acc = _matrix_fisher_sweep(theta, f_post, _angle_steps(f_post), rng)
            state.rotation = rotation_from_euler(theta)
            if count and n_acc:
                accept["rotation"] += 1

        # translations (exact normal draws)
        if priors.translation_enabled:
            for grp in range(g):
                mean, var = translation_conditional(state, x, y, priors, grp if g == 2 else None)
                state.translations[grp] = mean + math.sqrt(var) * rng.standard_normal(d)
                if count:
                    attempt["translation"] += 1
                    accept["translation"] += 1

        # noise precisions (exact gamma draws)
        for grp in range(g):
            shape, rate = noise_conditional(state, x, y, priors, grp if g == 2 else None)
            phi = rng.gamma(shape, 1.0 / rate)
            state.noise_vars[grp] = max(1.0 / phi, NOISE_FLOOR) if phi > 0 else 1.0 / NOISE_FLOOR
            if count:
                attempt["noise"] += 1
                accept["noise"] += 1

        # scale factors (halfnormal-gamma Metropolis, ordering enforced)
        for grp in range(g):
            params = scale_conditional_params(state, x, y, priors, grp if g == 2 else None)
            lower, upper = 0.0, math.inf
            if g == 2:
                lower, upper = (0.0, state.scales[1]) if grp == 0 else (state.scales[0], math.inf)
            new_c, acc = hng_metropolis_step(state.scales[grp], params, rng, lower, upper)
            state.scales[grp] = new_c
            if count:
                attempt["scale"] += 1
                accept["scale"] += 1 if acc else 0

        # group labels
        if g == 2:
            current_lj = lj_fn(state, x, y, priors)
            state, acc, current_lj = _label_switch(state, x, y, priors, rng, current_lj)
            if count:
                attempt["labels"] += 1
                accept["labels"] += 1 if acc else 0
        else:
            current_lj = lj_fn(state, x, y, priors)
        return state, theta, current_lj

    # multistart pilot phase
    about_origin = not priors.translation_enabled
    scale0 = _moment_scale(x, y, about_origin)
    rotations = [np.eye(d)] + _moment_rotations(x, y, about_origin)
    while len(rotations) < N_PILOT_CHAINS:
        rotations.append(random_rotation(d, rng))
    best = None
    for rot in rotations:
        pilot_scale, pilot_matching = scale0, None
        if not settings.labeled:
            tau0 = np.zeros(d)
            if priors.translation_enabled and x.m and y.m:
                tau0 = centroid(x) - scale0 * rot @ centroid(y)
            rot, pilot_scale, _, pilot_matching = _refine_pilot_transform(
                x,
                y,
                rot,
                scale0,
                tau0,
                settings.order_constrained,
                priors.translation_enabled,
            )
        state, theta = _initial_state(x, y, priors, settings, rotation=rot, scale=pilot_scale)
        if pilot_matching is not None and pilot_matching.L:
            state.matching = pilot_matching
            if g == 2:
                # trivially label-consistent start; label moves regroup later
                state.labels_x = np.ones(x.m, dtype=int)
                state.labels_y = np.ones(y.m, dtype=int)
        current_lj = lj_fn(state, x, y, priors)
        for _ in range(PILOT_SWEEPS):
            state, theta, current_lj = sweep(state, theta, current_lj, count=False)
        if best is None or current_lj > best[2]:
            best = (state, theta, current_lj)
    state, theta, current_lj = best

    for it in range(settings.iterations):
        state, theta, current_lj = sweep(state, theta, current_lj, count=True)
        if it >= settings.burnin and (it - settings.burnin) % settings.thin == 0:
            if g == 2:
                matches = tuple(
                    (j, k, int(state.labels_x[j - 1])) for j, k in state.matching.sorted_pairs
                )
            else:
                matches = tuple((j, k, 0) for j, k in state.matching.sorted_pairs)
            records.append(
                SampleRecord(
                    scales=tuple(float(v) for v in state.scales),
                    noise_vars=tuple(float(v) for v in state.noise_vars),
                    angles=tuple(float(v) for v in theta),
                    translations=tuple(tuple(float(v) for v in row) for row in state.translations),
                    matches=matches,
                    log_joint=float(current_lj),
                )
            )

    return ChainOutput(
        settings=settings,
        dim=d,
        m=x.m,
        n=y.m,
        x_id=x.id,
        y_id=y.id,
        translation_enabled=priors.translation_enabled,
        records=records,
        accept_counts=accept,
        attempt_counts=attempt,
    )


@dataclass
class PosteriorSummary:
    """Posterior quantities reported for an alignment run."""

    n_samples: int
    match_probs: dict
    group_occupancy: dict
    scale_summaries: list
    mean_rotation: np.ndarray
    mean_translation: np.ndarray
    acceptance_rates: dict
    L_posterior: dict


def _project_rotation(mean_matrix: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(mean_matrix)
    d = np.eye(mean_matrix.shape[0])
    d[-1, -1] = np.linalg.det(u @ vt)
    return u @ d @ vt


def summarize(output: ChainOutput) -> PosteriorSummary:
    """Empirical posterior summaries from the retained samples."""
    records = output.records
    if not records:
        raise ValueError("no retained samples to summarize")
    total = len(records)
    g = output.settings.n_scales
    match_counts: dict = {}
    group0_counts: dict = {}
    l_counts: dict = {}
    for rec in records:
        l_counts[rec.L] = l_counts.get(rec.L, 0) + 1
        for j, k, grp in rec.matches:
            match_counts[(j, k)] = match_counts.get((j, k), 0) + 1
            if grp == 0:
                group0_counts[(j, k)] = group0_counts.get((j, k), 0) + 1
    match_probs = {pair: cnt / total for pair, cnt in sorted(match_counts.items())}
    occupancy = {}
    if g == 2:
        occupancy = {
            pair: group0_counts.get(pair, 0) / cnt for pair, cnt in sorted(match_counts.items())
        }
    scales_arr = np.array([rec.scales for rec in records])
    scale_summaries = [
        {
            "median": float(np.median(scales_arr[:, i])),
            "lo": float(np.quantile(scales_arr[:, i], 0.025)),
            "hi": float(np.quantile(scales_arr[:, i], 0.975)),
        }
        for i in range(g)
    ]
    mean_matrix = np.zeros((output.dim, output.dim))
    for rec in records:
        ang = rec.angles[0] if output.dim == 2 else np.array(rec.angles)
        mean_matrix += rotation_from_euler(ang)
    mean_rotation = _project_rotation(mean_matrix / total)
    trans_arr = np.array([rec.translations for rec in records])
    mean_translation = trans_arr.mean(axis=0)
    acceptance = {
        kind: (output.accept_counts.get(kind, 0) / output.attempt_counts[kind])
        for kind in UPDATE_KINDS
        if output.attempt_counts.get(kind, 0) > 0
    }
    l_posterior = {l: cnt / total for l, cnt in sorted(l_counts.items())}
    return PosteriorSummary(
        n_samples=total,
        match_probs=match_probs,
        group_occupancy=occupancy,
        scale_summaries=scale_summaries,
        mean_rotation=mean_rotation,
        mean_translation=mean_translation,
        acceptance_rates=acceptance,
        L_posterior=l_posterior,
    )


def summary_json_dict(summary: PosteriorSummary) -> dict:
    """JSON-ready dict: matches, scales, rotation, translation, acceptance."""
    matches = []
    for (j, k), prob in summary.match_probs.items():
        entry = {"j": j, "k": k, "prob": prob}
        entry["f0"] = summary.group_occupancy.get((j, k)) if summary.group_occupancy else None
        matches.append(entry)
    return {
        "n_samples": summary.n_samples,
        "matches": matches,
        "scales": summary.scale_summaries,
        "rotation": summary.mean_rotation.tolist(),
        "translation": summary.mean_translation.tolist(),
        "acceptance": summary.acceptance_rates,
        "L_posterior": {str(l): p for l, p in summary.L_posterior.items()},
    }


def _trace_columns(output: ChainOutput) -> list[str]:
    g = output.settings.n_scales
    cols = ["sample"]
    cols += [f"c{i}" for i in range(g)]
    cols += [f"sigma_sq{i}" for i in range(g)]
    cols += ["theta"] if output.dim == 2 else ["theta12", "theta13", "theta23"]
    if output.translation_enabled:
        axes = "xyz"[: output.dim]
        cols += [f"tau{i}_{ax}" for i in range(g) for ax in axes]
    cols += ["L", "log_joint", "matches"]
    return cols


def _encode_matches(matches) -> str:
    return "|".join(f"{j}:{k}:{grp}" for j, k, grp in matches)


def _decode_matches(text: str) -> tuple:
    if not text:
        return ()
    out = []
    for item in text.split("|"):
        j, k, grp = item.split(":")
        out.append((int(j), int(k), int(grp)))
    return tuple(out)


def trace_export(output: ChainOutput, path) -> None:
    """Write retained samples as CSV with a JSON metadata header line."""
    meta = {
        "dim": output.dim,
        "m": output.m,
        "n": output.n,
        "x_id": output.x_id,
        "y_id": output.y_id,
        "translation_enabled": output.translation_enabled,
        "seeds": list(output.seeds),
        "settings": {
            "iterations": output.settings.iterations,
            "burnin": output.settings.burnin,
            "thin": output.settings.thin,
            "seed": output.settings.seed,
            "n_scales": output.settings.n_scales,
            "order_constrained": output.settings.order_constrained,
            "labeled": output.settings.labeled,
        },
        "accept_counts": output.accept_counts,
        "attempt_counts": output.attempt_counts,
    }
    g = output.settings.n_scales
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(_trace_columns(output))
        for idx, rec in enumerate(output.records):
            row = [idx]
            row += [repr(v) for v in rec.scales]
            row += [repr(v) for v in rec.noise_vars]
            row += [repr(v) for v in rec.angles]
            if output.translation_enabled:
                row += [repr(v) for tau in rec.translations for v in tau]
            row += [rec.L, repr(rec.log_joint), _encode_matches(rec.matches)]
            writer.writerow(row)


def read_trace(path) -> ChainOutput:
    """Reconstruct a ChainOutput from a trace CSV written by trace_export."""
    path = Path(path)
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing metadata header line")
        meta = json.loads(first[2:])
        reader = csv.reader(fh)
        header = next(reader)
        settings = ChainSettings(**meta["settings"])
        records = []
        g = settings.n_scales
        dim = meta["dim"]
        n_angles = 1 if dim == 2 else 3
        enabled = meta["translation_enabled"]
        for row in reader:
            if not row:
                continue
            vals = iter(row[1:])
            scales = tuple(float(next(vals)) for _ in range(g))
            noise = tuple(float(next(vals)) for _ in range(g))
            angles = tuple(float(next(vals)) for _ in range(n_angles))
            if enabled:
                translations = tuple(
                    tuple(float(next(vals)) for _ in range(dim)) for _ in range(g)
                )
            else:
                translations = tuple(tuple(0.0 for _ in range(dim)) for _ in range(g))
            next(vals)  # L is implied by matches
            lj = float(next(vals))
            matches = _decode_matches(next(vals))
            records.append(SampleRecord(scales, noise, angles, translations, matches, lj))
    output = ChainOutput(
        settings=settings,
        dim=dim,
        m=meta["m"],
        n=meta["n"],
        x_id=meta["x_id"],
        y_id=meta["y_id"],
        translation_enabled=enabled,
        records=records,
        accept_counts={k: int(v) for k, v in meta["accept_counts"].items()},
        attempt_counts={k: int(v) for k, v in meta["attempt_counts"].items()},
        seeds=tuple(meta["seeds"]),
    )
    expected = _trace_columns(output)
    if header != expected:
        raise ValueError(f"{path}: unexpected trace schema {header!r}")
    return output

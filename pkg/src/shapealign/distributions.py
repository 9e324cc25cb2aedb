"""The halfnormal-gamma distribution and rotation sampling.

The halfnormal-gamma law has unnormalized density

    f(c) = c**(r-1) * exp(-0.5*nu*c**2 + delta*c),   c > 0,

and is normalizable when nu > 0, or when nu == 0 and delta < 0 (in which
case it is the gamma(r, -delta) distribution).  It arises as the full
conditional of a positive scale factor under a gamma prior, and everything
here (mode, normal approximation, Metropolis kernel, exact sampler) is
driven by the (r, nu, delta) triple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .core import euler_from_rotation, random_rotation, rotation_from_euler

__all__ = [
    "HNGParams",
    "NormalApprox",
    "NoModeError",
    "hng_log_density_unnorm",
    "hng_mode",
    "hng_normal_approx",
    "hng_log_acceptance_ratio",
    "hng_metropolis_step",
    "hng_metropolis_chain",
    "ExactHNGSampler",
    "hng_sample_exact",
    "expfam_normal_approx",
    "sample_rotation_matrix_fisher",
]


class NoModeError(ValueError):
    """The halfnormal-gamma density has no interior mode."""


@dataclass(frozen=True)
class HNGParams:
    """(r, nu, delta) of c**(r-1) * exp(-nu*c^2/2 + delta*c) on (0, inf)."""

    r: float
    nu: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be positive and finite, got {self.r}")
        if not (math.isfinite(self.nu) and self.nu >= 0):
            raise ValueError(f"nu must be nonnegative and finite, got {self.nu}")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if self.nu == 0 and self.delta >= 0:
            raise ValueError("density is not normalizable: need nu > 0, or nu == 0 with delta < 0")


@dataclass(frozen=True)
class NormalApprox:
    mean: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ValueError(f"variance must be positive, got {self.variance}")


def hng_log_density_unnorm(c, p: HNGParams):
    """(r-1)*log(c) - nu*c^2/2 + delta*c; accepts scalars or arrays, c > 0."""
    c_arr = np.asarray(c, dtype=float)
    if np.any(c_arr <= 0) or not np.all(np.isfinite(c_arr)):
        raise ValueError("c must be positive and finite")
    out = (p.r - 1.0) * np.log(c_arr) - 0.5 * p.nu * c_arr**2 + p.delta * c_arr
    return float(out) if np.isscalar(c) or c_arr.ndim == 0 else out


def hng_mode(p: HNGParams) -> float:
    """Interior mode {delta + sqrt(delta^2 + 4(r-1)nu)} / (2 nu).

    Exists when r > 1, or when delta > 0 with a real positive root; the
    boundary cases r <= 1 with delta <= 0 put the supremum at c = 0.
    """
    r, nu, delta = p.r, p.nu, p.delta
    if nu == 0.0:
        # gamma(r, -delta); interior mode only for r > 1
        if r <= 1.0:
            raise NoModeError("no interior mode: gamma case with r <= 1")
        return (r - 1.0) / (-delta)
    if r <= 1.0 and delta <= 0.0:
        raise NoModeError("no interior mode: r <= 1 and delta <= 0")
    disc = delta * delta + 4.0 * (r - 1.0) * nu
    if disc <= 0.0:
        raise NoModeError("no interior mode: stationary equation has no real root")
    sq = math.sqrt(disc)
    # rationalized form avoids cancellation for delta < 0
    mode = (delta + sq) / (2.0 * nu) if delta >= 0 else 2.0 * (r - 1.0) / (sq - delta)
    if mode <= 0.0:
        raise NoModeError("no interior mode: stationary point not positive")
    return mode


def hng_normal_approx(p: HNGParams) -> NormalApprox:
    """Normal approximation at the mode: variance {nu + (r-1)/mode^2}^(-1)."""
    mode = hng_mode(p)
    curvature = p.nu + (p.r - 1.0) / (mode * mode)
    return NormalApprox(mode, 1.0 / curvature)


def _proposal_width(p: HNGParams) -> float:
    """Width of the random-walk proposal for the Metropolis kernel.

    Uses the normal approximation when an interior mode exists; otherwise
    (monotone density) falls back to the natural spread 1/sqrt(nu), or
    1/|delta| in the pure-exponential case nu == 0.
    """
    try:
        return math.sqrt(hng_normal_approx(p).variance)
    except NoModeError:
        return 1.0 / math.sqrt(p.nu) if p.nu > 0 else 1.0 / abs(p.delta)


def hng_log_acceptance_ratio(current: float, proposal: float, p: HNGParams) -> float:
    """log of (c'/c)^(r-1) * exp{-nu(c'^2 - c^2)/2 + delta(c' - c)}."""
    if current <= 0 or proposal <= 0:
        raise ValueError("states must be positive")
    return (
        (p.r - 1.0) * math.log(proposal / current)
        - 0.5 * p.nu * (proposal * proposal - current * current)
        + p.delta * (proposal - current)
    )


def hng_metropolis_step(
    current: float,
    p: HNGParams,
    rng: np.random.Generator,
    lower: float = 0.0,
    upper: float = math.inf,
) -> tuple[float, bool]:
    """One Metropolis update with proposal N(current, w^2).

    Proposals outside (lower, upper) are rejected outright (zero density
    there); lower defaults to 0 so nonpositive proposals never move the
    chain.  Returns (next_state, accepted).
    """
    if not (math.isfinite(current) and current > lower and current < upper):
        raise ValueError("current state must lie inside (lower, upper)")
    w = _proposal_width(p)
    proposal = current + w * rng.standard_normal()
    if proposal <= lower or proposal >= upper:
        return current, False
    if math.log(rng.random()) < hng_log_acceptance_ratio(current, proposal, p):
        return proposal, True
    return current, False


def hng_metropolis_chain(
    p: HNGParams,
    n_keep: int,
    rng: np.random.Generator,
    thin: int = 1,
    burnin: int = 0,
    init: float | None = None,
    lower: float = 0.0,
    upper: float = math.inf,
) -> tuple[np.ndarray, float]:
    """Run the Metropolis kernel, returning (kept samples, acceptance rate)."""
    if n_keep < 1 or thin < 1 or burnin < 0:
        raise ValueError("need n_keep >= 1, thin >= 1, burnin >= 0")
    if init is None:
        try:
            init = hng_mode(p)
        except NoModeError:
            init = _proposal_width(p)
        if not lower < init < upper:
            init = 0.5 * (lower + min(upper, lower + 2.0 * _proposal_width(p)))
    state = float(init)
    if not lower < state < upper:
        raise ValueError("init must lie inside (lower, upper)")
    w = _proposal_width(p)
    r1 = p.r - 1.0
    total = burnin + n_keep * thin
    out = np.empty(n_keep)
    accepted = 0
    block = 65536
    done = 0
    kept = 0
    while done < total:
        nb = min(block, total - done)
        incr = w * rng.standard_normal(nb)
        logu = np.log(rng.random(nb))
        for i in range(nb):
            prop = state + incr[i]
            if lower < prop < upper:
                if logu[i] < (
                    r1 * math.log(prop / state)
                    - 0.5 * p.nu * (prop * prop - state * state)
                    + p.delta * (prop - state)
                ):
                    state = prop
                    accepted += 1
            step = done + i + 1
            if step > burnin and (step - burnin) % thin == 0:
                out[kept] = state
                kept += 1
        done += nb
    return out, accepted / total


class ExactHNGSampler:
    """Acceptance-rejection sampler producing exact halfnormal-gamma draws.

    Envelope selection:
      * nu == 0: the law is gamma(r, -delta); sample it directly.
      * nu > 0:  compare a mode-centered normal envelope N(mode, 1/nu)
        truncated to (0, inf) (valid for r >= 1 when a mode exists) with a
        gamma(r, lam) envelope whose rate lam = {-delta + sqrt(delta^2 +
        4 r nu)}/2 minimizes the bounding constant; use whichever gives the
        smaller bound.  Both bounding constants are exact, so accepted draws
        follow the target law exactly.
    """

    def __init__(self, p: HNGParams):
        self.params = p
        r, nu, delta = p.r, p.nu, p.delta
        if nu == 0.0:
            self.kind = "gamma_exact"
            self.gamma_rate = -delta
            self.log_bound = 0.0
            return
        # gamma envelope: minimize lgamma(r) - r log(lam) + (delta+lam)^2/(2 nu)
        lam = 0.5 * (-delta + math.sqrt(delta * delta + 4.0 * r * nu))
        log_k_gamma = special.gammaln(r) - r * math.log(lam) + (delta + lam) ** 2 / (2.0 * nu)
        log_k_normal = math.inf
        mode = None
        if r >= 1.0:
            try:
                mode = hng_mode(p)
            except NoModeError:
                mode = None
            if mode is not None:
                # max of target/envelope sits at the mode (closed form)
                log_rho_max = (r - 1.0) * (math.log(mode) - 1.0) + 0.5 * nu * mode * mode
                log_k_normal = (
                    log_rho_max
                    + 0.5 * math.log(2.0 * math.pi / nu)
                    + special.log_ndtr(mode * math.sqrt(nu))
                )
        if log_k_normal <= log_k_gamma:
            self.kind = "truncated_normal"
            self.mode = mode
            self.log_bound = log_k_normal
        else:
            self.kind = "gamma"
            self.gamma_rate = lam
            self.gamma_log_bound_exponent = (delta + lam) ** 2 / (2.0 * nu)
            self.log_bound = log_k_gamma

    def sample(self, rng: np.random.Generator, size: int | None = None):
        n = 1 if size is None else int(size)
        p = self.params
        if self.kind == "gamma_exact":
            draws = rng.gamma(p.r, 1.0 / self.gamma_rate, size=n)
            return float(draws[0]) if size is None else draws
        out = np.empty(n)
        filled = 0
        rate_guess = 0.5
        while filled < n:
            todo = n - filled
            batch = max(64, int(todo / rate_guess * 1.2))
            if self.kind == "truncated_normal":
                cand = self.mode + rng.standard_normal(batch) / math.sqrt(p.nu)
                ok = cand > 0
                u = cand[ok] / self.mode
                log_acc = (p.r - 1.0) * (np.log(u) - u + 1.0)
                cand = cand[ok]
            else:
                cand = rng.gamma(p.r, 1.0 / self.gamma_rate, size=batch)
                log_acc = (
                    -0.5 * p.nu * cand**2
                    + (p.delta + self.gamma_rate) * cand
                    - self.gamma_log_bound_exponent
                )
            keep = np.log(rng.random(cand.shape[0])) < log_acc
            kept = cand[keep]
            take = min(todo, kept.shape[0])
            out[filled : filled + take] = kept[:take]
            filled += take
            rate_guess = max(0.05, min(1.0, (kept.shape[0] + 1) / (batch + 1)))
        return float(out[0]) if size is None else out

    @cached_property
    def log_normalizer(self) -> float:
        """log integral of the unnormalized density, by adaptive quadrature."""
        p = self.params
        try:
            center = hng_mode(p)
        except NoModeError:
            center = _proposal_width(p)
        shift = hng_log_density_unnorm(center, p)

        def integrand(c):
            return math.exp(hng_log_density_unnorm(c, p) - shift) if c > 0 else 0.0

        width = _proposal_width(p)
        upper = center + 20.0 * width
        val, _ = integrate.quad(integrand, 0.0, upper, points=[center], limit=200)
        tail, _ = integrate.quad(integrand, upper, np.inf, limit=200)
        return math.log(val + tail) + shift

    def expected_acceptance(self) -> float:
        """Acceptance probability per proposal: Z_target / bound."""
        if self.kind == "gamma_exact":
            return 1.0
        return math.exp(self.log_normalizer - self.log_bound)


def hng_sample_exact(p: HNGParams, rng: np.random.Generator, size: int | None = None):
    """Exact draw(s) from the halfnormal-gamma law via acceptance-rejection."""
    return ExactHNGSampler(p).sample(rng, size=size)


def expfam_normal_approx(logdensity_second_derivative_at_mode: float, mode: float) -> NormalApprox:
    """N(mode, -1/l''(mode)) for a unimodal exponential-family density."""
    l2 = float(logdensity_second_derivative_at_mode)
    if not (math.isfinite(l2) and l2 < 0):
        raise ValueError("second derivative at the mode must be negative")
    return NormalApprox(float(mode), -1.0 / l2)


def _von_mises_params(f: np.ndarray) -> tuple[float, float]:
    """(location, concentration) of the angle law induced by exp(tr(F^T A)), d=2."""
    a = f[0, 0] + f[1, 1]
    b = f[1, 0] - f[0, 1]
    kappa = math.hypot(a, b)
    mu = math.atan2(b, a)
    return mu, kappa


def _angle_steps(f: np.ndarray) -> np.ndarray:
    """Random-walk widths for the three Euler angles, scaled to the local
    curvature of exp(tr(F^T A)) near its mode (singular values s_i give
    curvature s_j + s_k about each axis)."""
    s = np.linalg.svd(f, compute_uv=False)
    curv = np.array([s[0] + s[1], s[0] + s[2], s[1] + s[2]])
    return np.clip(2.4 / np.sqrt(curv + 0.25), 0.05, 0.5 * np.pi)


def _wrap_angle(t: float) -> float:
    return (t + np.pi) % (2.0 * np.pi) - np.pi


def _matrix_fisher_sweep(
    angles: np.ndarray, f: np.ndarray, steps: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, int]:
    """One sweep of single-angle Metropolis updates targeting
    exp(tr(F^T A(angles))) * cos(t13) on the Euler chart."""
    angles = angles.copy()
    a = rotation_from_euler(angles)
    log_target = float(np.sum(f * a)) + math.log(math.cos(angles[1]))
    accepted = 0
    for i in range(3):
        prop = angles.copy()
        prop[i] = prop[i] + steps[i] * rng.standard_normal()
        if i == 1:
            if not -0.5 * np.pi < prop[1] < 0.5 * np.pi:
                continue
        else:
            prop[i] = _wrap_angle(prop[i])
        a_prop = rotation_from_euler(prop)
        log_prop = float(np.sum(f * a_prop)) + math.log(math.cos(prop[1]))
        if math.log(rng.random()) < log_prop - log_target:
            angles = prop
            log_target = log_prop
            accepted += 1
    return angles, accepted


def _polar_rotation(f: np.ndarray) -> np.ndarray:
    """Rotation maximizing tr(F^T A) (the orthogonal polar factor in SO(d))."""
    u, _, vt = np.linalg.svd(f)
    d = np.eye(f.shape[0])
    d[-1, -1] = np.linalg.det(u @ vt)
    return u @ d @ vt


def sample_rotation_matrix_fisher(
    f: np.ndarray,
    rng: np.random.Generator,
    initial: np.ndarray | None = None,
    sweeps: int = 1,
) -> np.ndarray:
    """Draw from the matrix-Fisher law, density prop. to exp(tr(F^T A)) on SO(d).

    d=2 draws are exact via the induced von Mises law on the rotation angle.
    d=3 with F == 0 and no initial state draws exactly from the Haar measure;
    otherwise a Metropolis chain on Euler angles (targeting the density times
    the Haar factor cos(t13)) is run for `sweeps` sweeps from `initial`, or
    from the polar mode with 50 extra burn-in sweeps when no initial state
    is supplied.  Passing the previous draw as `initial` yields a kernel that
    leaves the matrix-Fisher law invariant, which is all an outer Gibbs
    sampler requires.
    """
    f = np.asarray(f, dtype=float)
    if f.shape not in ((2, 2), (3, 3)):
        raise ValueError(f"unsupported dimension: F has shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("F must be finite")
    if f.shape == (2, 2):
        mu, kappa = _von_mises_params(f)
        return rotation_from_euler(rng.vonmises(mu, kappa))
    if initial is None and not f.any():
        return random_rotation(3, rng)
    if initial is None:
        angles = euler_from_rotation(_polar_rotation(f))
        n_sweeps = sweeps + 50
    else:
        angles = euler_from_rotation(np.asarray(initial, dtype=float))
        n_sweeps = sweeps
    steps = _angle_steps(f)
    for _ in range(n_sweeps):
        angles, _ = _matrix_fisher_sweep(angles, f, steps, rng)
    return rotation_from_euler(angles)

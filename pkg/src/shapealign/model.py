"""Joint posterior for similarity-transform alignment and its full conditionals.

The observation model matches the y-configuration onto the x-configuration
through y -> c A y + tau with isotropic noise of variance sigma_c^2 per
coordinate in x-space.  Up to a constant in all sampled quantities, the log
joint over (M, A, tau, c, sigma_c^2) is

    tr(F0^T A)                                   matrix-Fisher rotation prior
  - ||tau - mu_tau||^2 / (2 sigma_tau^2)         normal translation prior
  + (alpha_c - 1) log c - lambda_c c             gamma scale prior
  + (alpha - 1) log phi - beta phi               gamma prior on phi = 1/sigma_c^2
  + d (n - m + L)/2 * log c
  + L [log kappa - d/2 * log(sigma_c^2)]
  - sum_matched ||x_j - c A y_k - tau||^2 / (4 sigma_c^2)

where L is the number of matched pairs.  The per-pair normal-density
constant is absorbed into the meaning of kappa, so kappa is the matching
propensity in the same convention the reported reference analyses use.
The two-scale variant duplicates the per-group factors with a shared
rotation and requires c_1 > c_0 for identifiability; matched pairs must
have equal group labels.

States whose scale conditional would not be normalizable, i.e. with
d (n_g - m_g + L_g)/2 + alpha_c <= 0, are assigned log density -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import Configuration, _require_rotation
from .distributions import HNGParams
from .matching import MatchingMatrix

__all__ = [
    "PriorSpec",
    "ChainState",
    "log_joint",
    "log_joint_two_scale",
    "scale_conditional_params",
    "rotation_conditional_param",
    "translation_conditional",
    "noise_conditional",
]


@dataclass(frozen=True)
class PriorSpec:
    """All hyperparameters of the alignment model (see module docstring)."""

    f0: np.ndarray
    mu_tau: np.ndarray
    sigma_tau: float
    alpha: float
    beta: float
    alpha_c: float
    lambda_c: float
    kappa: float
    translation_enabled: bool = True

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=float)
        if f0.shape not in ((2, 2), (3, 3)) or not np.all(np.isfinite(f0)):
            raise ValueError("f0 must be a finite 2x2 or 3x3 matrix")
        object.__setattr__(self, "f0", f0)
        mu = np.asarray(self.mu_tau, dtype=float).reshape(-1)
        if mu.shape != (f0.shape[0],) or not np.all(np.isfinite(mu)):
            raise ValueError("mu_tau must be a finite d-vector matching f0")
        object.__setattr__(self, "mu_tau", mu)
        for name in ("sigma_tau", "alpha", "beta", "alpha_c", "lambda_c", "kappa"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def dim(self) -> int:
        return self.f0.shape[0]

    @classmethod
    def default(cls, dim: int, **overrides) -> "PriorSpec":
        values = dict(
            f0=np.zeros((dim, dim)),
            mu_tau=np.zeros(dim),
            sigma_tau=100.0,
            alpha=1.0,
            beta=1.0,
            alpha_c=1.0,
            lambda_c=1.0,
            kappa=100.0,
            translation_enabled=True,
        )
        values.update(overrides)
        return cls(**values)

    _SCALAR_KEYS = ("sigma_tau", "alpha", "beta", "alpha_c", "lambda_c", "kappa")

    def to_config(self, path) -> None:
        """Write the flat key=value file (`kappa=100000`, `alpha_c=5`, ...)."""
        lines = [f"dim={self.dim}"]
        lines += [f"{k}={getattr(self, k)!r}" for k in self._SCALAR_KEYS]
        lines.append(f"mu_tau={','.join(repr(float(v)) for v in self.mu_tau)}")
        lines.append(f"f0={','.join(repr(float(v)) for v in self.f0.ravel())}")
        lines.append(f"translation_enabled={'true' if self.translation_enabled else 'false'}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_config(cls, path) -> "PriorSpec":
        entries: dict[str, str] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path} line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
        try:
            dim = int(entries.pop("dim"))
            kwargs = {k: float(entries.pop(k)) for k in cls._SCALAR_KEYS}
            mu_tau = np.array([float(v) for v in entries.pop("mu_tau").split(",")])
            f0 = np.array([float(v) for v in entries.pop("f0").split(",")]).reshape(dim, dim)
            enabled = entries.pop("translation_enabled", "true").lower() == "true"
        except KeyError as exc:
            raise ValueError(f"{path}: missing prior key {exc}") from None
        if entries:
            raise ValueError(f"{path}: unknown prior keys {sorted(entries)}")
        return cls(f0=f0, mu_tau=mu_tau, **kwargs, translation_enabled=enabled)


@dataclass
class ChainState:
    """Current values of all sampled quantities.

    translations has one row per scale group (zeros when translation is
    disabled); scales and noise_vars have length 1 or 2.  In two-scale mode
    labels_x / labels_y give each point's group and matched pairs must agree.
    """

    rotation: np.ndarray
    translations: np.ndarray
    scales: np.ndarray
    noise_vars: np.ndarray
    matching: MatchingMatrix
    labels_x: np.ndarray | None = None
    labels_y: np.ndarray | None = None

    def __post_init__(self):
        self.rotation = _require_rotation(self.rotation, tol=1e-8)
        self.scales = np.asarray(self.scales, dtype=float).reshape(-1)
        self.noise_vars = np.asarray(self.noise_vars, dtype=float).reshape(-1)
        g = self.scales.shape[0]
        if g not in (1, 2) or self.noise_vars.shape != (g,):
            raise ValueError("scales and noise_vars must both have length 1 or 2")
        if np.any(self.scales <= 0) or np.any(self.noise_vars <= 0):
            raise ValueError("scales and noise variances must be positive")
        self.translations = np.asarray(self.translations, dtype=float).reshape(g, -1)
        if self.translations.shape[1] != self.rotation.shape[0]:
            raise ValueError("translation dimension mismatch")
        if self.labels_x is not None:
            self.labels_x = np.asarray(self.labels_x, dtype=int)
        if self.labels_y is not None:
            self.labels_y = np.asarray(self.labels_y, dtype=int)

    @property
    def n_scales(self) -> int:
        return self.scales.shape[0]


def _require_dims(state: ChainState, x: Configuration, y: Configuration, priors: PriorSpec):
    d = x.dim
    if y.dim != d or priors.dim != d or state.rotation.shape[0] != d:
        raise ValueError("dimension mismatch between state, configurations, and priors")
    if state.matching.m != x.m or state.matching.n != y.m:
        raise ValueError("matching shape does not match configurations")


def _require_labels(state: ChainState, x: Configuration, y: Configuration):
    if state.labels_x is None or state.labels_y is None:
        raise ValueError("two-scale evaluation requires labels_x and labels_y")
    if state.labels_x.shape != (x.m,) or state.labels_y.shape != (y.m,):
        raise ValueError("label arrays must have one entry per point")
    for j, k in state.matching.pairs:
        if state.labels_x[j - 1] != state.labels_y[k - 1]:
            raise ValueError(f"matched pair ({j},{k}) has mismatched group labels")


def _pair_group_mask(state: ChainState, group: int) -> np.ndarray:
    return state.labels_x[state.matching.x_indices] == group


def _group_terms(
    x: Configuration,
    y: Configuration,
    state: ChainState,
    group: int | None,
) -> tuple[int, int, int, np.ndarray, np.ndarray]:
    """(m_g, n_g, L_g, Xm, Ym) for one group (or the whole data set)."""
    jx, ky = state.matching.x_indices, state.matching.y_indices
    if group is None:
        return x.m, y.m, state.matching.L, x.points[jx], y.points[ky]
    mask = _pair_group_mask(state, group)
    m_g = int(np.sum(state.labels_x == group))
    n_g = int(np.sum(state.labels_y == group))
    return m_g, n_g, int(mask.sum()), x.points[jx[mask]], y.points[ky[mask]]


def _structural_log_terms(
    d: int,
    m_g: int,
    n_g: int,
    l_g: int,
    c: float,
    sig2: float,
    xm: np.ndarray,
    ym: np.ndarray,
    tau: np.ndarray,
    rotation: np.ndarray,
    priors: PriorSpec,
) -> float:
    """Likelihood factors plus the scale/noise priors for one group.

    Returns -inf when the scale exponent makes the conditional of c
    non-normalizable (such states carry no posterior mass).
    """
    exponent = 0.5 * d * (n_g - m_g + l_g)
    if exponent + priors.alpha_c <= 0.0:
        return -math.inf
    phi = 1.0 / sig2
    out = (
        (priors.alpha_c - 1.0) * math.log(c)
        - priors.lambda_c * c
        + (priors.alpha - 1.0) * math.log(phi)
        - priors.beta * phi
        + exponent * math.log(c)
        - 0.5 * l_g * d * math.log(sig2)
    )
    if l_g:
        resid = xm - c * ym @ rotation.T - tau
        out -= float(np.einsum("ij,ij->", resid, resid)) / (4.0 * sig2)
    return out


def log_joint(state: ChainState, x: Configuration, y: Configuration, priors: PriorSpec) -> float:
    """Log of the one-scale joint posterior, up to a state-independent constant."""
    _require_dims(state, x, y, priors)
    if state.n_scales != 1:
        raise ValueError("log_joint expects a one-scale state")
    d = x.dim
    tau = state.translations[0]
    out = float(np.sum(priors.f0 * state.rotation))
    if priors.translation_enabled:
        diff = tau - priors.mu_tau
        out -= float(diff @ diff) / (2.0 * priors.sigma_tau**2)
    m_g, n_g, l_g, xm, ym = _group_terms(x, y, state, None)
    out += _structural_log_terms(
        d, m_g, n_g, l_g, state.scales[0], state.noise_vars[0], xm, ym, tau, state.rotation, priors
    )
    out += state.matching.L * math.log(priors.kappa)
    return out


def log_joint_two_scale(
    state: ChainState, x: Configuration, y: Configuration, priors: PriorSpec
) -> float:
    """Log of the two-scale joint posterior; -inf outside c_1 > c_0."""
    _require_dims(state, x, y, priors)
    if state.n_scales != 2:
        raise ValueError("log_joint_two_scale expects a two-scale state")
    _require_labels(state, x, y)
    if state.scales[1] <= state.scales[0]:
        return -math.inf
    d = x.dim
    out = float(np.sum(priors.f0 * state.rotation))
    for g in (0, 1):
        tau = state.translations[g]
        if priors.translation_enabled:
            diff = tau - priors.mu_tau
            out -= float(diff @ diff) / (2.0 * priors.sigma_tau**2)
        m_g, n_g, l_g, xm, ym = _group_terms(x, y, state, g)
        term = _structural_log_terms(
            d, m_g, n_g, l_g, state.scales[g], state.noise_vars[g], xm, ym, tau, state.rotation, priors
        )
        if term == -math.inf:
            return -math.inf
        out += term
    out += state.matching.L * math.log(priors.kappa)
    return out


def _group_index(state: ChainState, group: int | None) -> int:
    if state.n_scales == 1:
        if group not in (None, 0):
            raise ValueError("one-scale state has a single group")
        return 0
    if group not in (0, 1):
        raise ValueError("two-scale state requires group 0 or 1")
    return group


def scale_conditional_params(
    state: ChainState,
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
    group: int | None = None,
) -> HNGParams:
    """Halfnormal-gamma parameters of the scale factor's full conditional.

    r = d(n_g - m_g + L_g)/2 + alpha_c, nu = sum ||y_k||^2 / (2 sigma^2),
    delta = sum (x_j - tau)^T A y_k / (2 sigma^2) - lambda_c.
    """
    _require_dims(state, x, y, priors)
    g = _group_index(state, group)
    sel = None if state.n_scales == 1 else g
    if sel is not None:
        _require_labels(state, x, y)
    m_g, n_g, l_g, xm, ym = _group_terms(x, y, state, sel)
    sig2 = state.noise_vars[g]
    r = 0.5 * x.dim * (n_g - m_g + l_g) + priors.alpha_c
    nu = float(np.einsum("ij,ij->", ym, ym)) / (2.0 * sig2)
    rot_y = ym @ state.rotation.T
    delta = float(np.einsum("ij,ij->", xm - state.translations[g], rot_y)) / (2.0 * sig2)
    return HNGParams(r, nu, delta - priors.lambda_c)


def rotation_conditional_param(
    state: ChainState,
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
) -> np.ndarray:
    """Matrix-Fisher parameter of the rotation's full conditional:
    F0 + sum_g (c_g / 2 sigma_g^2) sum_matched,g (x_j - tau_g) y_k^T."""
    _require_dims(state, x, y, priors)
    f = priors.f0.copy()
    groups = (None,) if state.n_scales == 1 else (0, 1)
    if state.n_scales == 2:
        _require_labels(state, x, y)
    for g_idx, sel in enumerate(groups):
        _, _, l_g, xm, ym = _group_terms(x, y, state, sel)
        if l_g:
            coeff = state.scales[g_idx] / (2.0 * state.noise_vars[g_idx])
            f += coeff * (xm - state.translations[g_idx]).T @ ym
    return f


def translation_conditional(
    state: ChainState,
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
    group: int | None = None,
) -> tuple[np.ndarray, float]:
    """(mean, per-coordinate variance) of the spherical normal conditional of tau."""
    if not priors.translation_enabled:
        raise ValueError("translation is disabled in the prior specification")
    _require_dims(state, x, y, priors)
    g = _group_index(state, group)
    sel = None if state.n_scales == 1 else g
    if sel is not None:
        _require_labels(state, x, y)
    _, _, l_g, xm, ym = _group_terms(x, y, state, sel)
    precision = l_g / (2.0 * state.noise_vars[g]) + 1.0 / priors.sigma_tau**2
    variance = 1.0 / precision
    drive = priors.mu_tau / priors.sigma_tau**2
    if l_g:
        resid = xm - state.scales[g] * ym @ state.rotation.T
        drive = drive + resid.sum(axis=0) / (2.0 * state.noise_vars[g])
    return variance * drive, variance


def noise_conditional(
    state: ChainState,
    x: Configuration,
    y: Configuration,
    priors: PriorSpec,
    group: int | None = None,
) -> tuple[float, float]:
    """(shape, rate) of the gamma conditional for the precision 1/sigma_c^2."""
    _require_dims(state, x, y, priors)
    g = _group_index(state, group)
    sel = None if state.n_scales == 1 else g
    if sel is not None:
        _require_labels(state, x, y)
    _, _, l_g, xm, ym = _group_terms(x, y, state, sel)
    rate = priors.beta
    if l_g:
        resid = xm - state.scales[g] * ym @ state.rotation.T - state.translations[g]
        rate += 0.25 * float(np.einsum("ij,ij->", resid, resid))
    return priors.alpha + 0.5 * l_g * x.dim, rate

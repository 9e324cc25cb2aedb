"""Independent reference computations used by the test suite.

Everything here deliberately avoids the code paths under test: quadrature
CDFs for the halfnormal-gamma law, brute-force matching enumeration, and
straightforward term-by-term evaluations of the joint density.
"""

import itertools
import math

import numpy as np
from scipy import integrate


def hng_quadrature_cdf(r, nu, delta, n_grid=40001, span=25.0):
    """Callable CDF of c^(r-1) exp(-nu c^2/2 + delta c) via dense Simpson."""
    # locate the density's bulk without the package's helpers
    if nu > 0:
        disc = delta * delta + 4.0 * max(r - 1.0, 0.0) * nu
        center = max((delta + math.sqrt(disc)) / (2.0 * nu), 1e-3)
        width = 1.0 / math.sqrt(nu + max(r - 1.0, 0.0) / center**2)
    else:
        center = r / (-delta)
        width = math.sqrt(r) / (-delta)
    hi = center + span * width
    grid = np.linspace(1e-12, hi, n_grid)
    logf = (r - 1.0) * np.log(grid) - 0.5 * nu * grid**2 + delta * grid
    f = np.exp(logf - logf.max())
    cdf = integrate.cumulative_simpson(f, x=grid, initial=0.0)
    cdf = cdf / cdf[-1]

    def evaluate(q):
        return np.interp(q, grid, cdf)

    return evaluate


def hng_quadrature_moments(r, nu, delta):
    """(mean, variance) of the halfnormal-gamma law by adaptive quadrature."""
    if nu > 0:
        disc = delta * delta + 4.0 * max(r - 1.0, 0.0) * nu
        center = max((delta + math.sqrt(disc)) / (2.0 * nu), 1e-3)
        width = 1.0 / math.sqrt(nu + max(r - 1.0, 0.0) / center**2)
    else:
        center = r / (-delta)
        width = math.sqrt(r) / (-delta)
    shift = (r - 1.0) * math.log(center) - 0.5 * nu * center**2 + delta * center

    def weight(c, power):
        return c**power * math.exp(
            (r - 1.0) * math.log(c) - 0.5 * nu * c**2 + delta * c - shift
        )

    hi = center + 30.0 * width
    moments = []
    for power in (0, 1, 2):
        val, _ = integrate.quad(weight, 0, hi, args=(power,), limit=300, points=[center])
        tail, _ = integrate.quad(weight, hi, np.inf, args=(power,), limit=300)
        moments.append(val + tail)
    mean = moments[1] / moments[0]
    return mean, moments[2] / moments[0] - mean * mean


def brute_force_matchings(m, n, order_constrained):
    """Enumerate matchings by filtering every subset of the full pair grid."""
    all_pairs = [(j, k) for j in range(1, m + 1) for k in range(1, n + 1)]
    found = set()
    for size in range(min(m, n) + 1):
        for combo in itertools.combinations(all_pairs, size):
            js = [j for j, _ in combo]
            ks = [k for _, k in combo]
            if len(set(js)) != size or len(set(ks)) != size:
                continue
            if order_constrained:
                srt = sorted(combo)
                if any(srt[i][1] >= srt[i + 1][1] for i in range(size - 1)):
                    continue
            found.add(frozenset(combo))
    return found


def reference_log_joint(state, x, y, priors):
    """Term-by-term scalar re-evaluation of the one-scale log joint."""
    d = x.shape[1]
    a = state["rotation"]
    tau = state["tau"]
    c = state["c"]
    sig2 = state["sigma2"]
    pairs = state["pairs"]
    m, n, L = x.shape[0], y.shape[0], len(pairs)
    out = 0.0
    for i in range(d):
        for jj in range(d):
            out += priors["f0"][i, jj] * a[i, jj]
    if priors.get("translation_enabled", True):
        for i in range(d):
            out -= (tau[i] - priors["mu_tau"][i]) ** 2 / (2.0 * priors["sigma_tau"] ** 2)
    out += (priors["alpha_c"] - 1.0) * math.log(c) - priors["lambda_c"] * c
    phi = 1.0 / sig2
    out += (priors["alpha"] - 1.0) * math.log(phi) - priors["beta"] * phi
    out += 0.5 * d * (n - m + L) * math.log(c)
    out -= 0.5 * L * d * math.log(sig2)
    out += L * math.log(priors["kappa"])
    for j, k in pairs:
        resid = x[j - 1] - c * (a @ y[k - 1]) - tau
        out -= float(resid @ resid) / (4.0 * sig2)
    return out


def rotation_angle_distribution_prob(kappa, frobenius_radius):
    """P(||A - I||_F <= radius) under density prop. to exp(kappa tr A) on SO(3).

    Uses the known rotation-angle density prop. to (1 - cos phi) exp(2 kappa
    cos phi) on [0, pi].
    """
    phi_max = math.acos(max(-1.0, 1.0 - frobenius_radius**2 / 4.0))

    def dens(phi):
        return (1.0 - math.cos(phi)) * math.exp(2.0 * kappa * (math.cos(phi) - 1.0))

    num, _ = integrate.quad(dens, 0.0, phi_max, limit=200)
    den, _ = integrate.quad(dens, 0.0, math.pi, limit=200)
    return num / den

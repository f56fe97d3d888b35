"""Independent reference computations used only by the tests.

Nothing here calls the package's SINR or water-filling code; each oracle
takes a different route to the same quantity.
"""

import math

import numpy as np
from scipy.stats import norm


def water_fill_bisection(w, budget, iters=200):
    """Bisection on the water level: ``sum max(mu - w_k, 0) = budget``."""
    w = np.asarray(w, dtype=float)
    lo, hi = 0.0, budget + w.sum() + 1.0
    for _ in range(iters):
        mu = 0.5 * (lo + hi)
        if np.maximum(mu - w, 0.0).sum() > budget:
            hi = mu
        else:
            lo = mu
    mu = 0.5 * (lo + hi)
    return np.maximum(mu / w - 1.0, 0.0), mu


def water_fill_cvx(w, budget):
    """Convex program ``max sum log(1+p)`` s.t. ``w.p <= budget, p >= 0``."""
    import cvxpy as cp

    w = np.asarray(w, dtype=float)
    p = cp.Variable(len(w), nonneg=True)
    prob = cp.Problem(cp.Maximize(cp.sum(cp.log(1 + p))), [w @ p <= budget])
    prob.solve()
    return np.asarray(p.value)


def siso_outage(rho, rate):
    """``P(log2(1 + rho |h|^2) <= R)`` for ``|h|^2 ~ Exp(1)``."""
    return 1.0 - math.exp(-(2.0 ** rate - 1.0) / rho)


def qpsk_ser(gamma):
    q = norm.sf(math.sqrt(gamma))
    return 1.0 - (1.0 - q) ** 2


def qam16_ser(gamma):
    q = norm.sf(math.sqrt(gamma / 5.0))
    return 1.0 - (1.0 - 1.5 * q) ** 2


def literal_sinr(h, precoder, amp, equalizer, draws, rng):
    """Measure per-stream SINR by pushing symbols and noise through
    ``y = W (H P a s + n)``.

    ``precoder`` is the full ``m x n`` matrix, ``amp`` the symbol amplitude
    and ``equalizer`` an ``n x n`` matrix or ``None``.  Desired power is the
    part of ``y_k`` carried by ``s_k``; everything else counts as
    interference plus noise.
    """
    n = h.shape[0]
    s = (rng.choice([-1.0, 1.0], (draws, n))
         + 1j * rng.choice([-1.0, 1.0], (draws, n))) / math.sqrt(2)
    noise = (rng.standard_normal((draws, n))
             + 1j * rng.standard_normal((draws, n))) / math.sqrt(2)
    w = np.eye(n) if equalizer is None else equalizer
    eff = w @ h @ precoder
    y = amp * s @ eff.T + noise @ w.T
    desired = amp * s * np.diag(eff)
    rest = y - desired
    return (np.abs(desired) ** 2).mean(axis=0) / (np.abs(rest) ** 2).mean(
        axis=0)


def mmse_sinr_by_whitening(comp, q):
    """Per-stream unbiased MMSE SINR ``q c_k^H (q sum_{i!=k} c_i c_i^H + I)^-1 c_k``."""
    n = comp.shape[1]
    out = np.empty(n)
    for k in range(n):
        others = np.delete(comp, k, axis=1)
        cov = q * others @ others.conj().T + np.eye(comp.shape[0])
        ck = comp[:, k]
        out[k] = (q * ck.conj() @ np.linalg.solve(cov, ck)).real
    return out

"""Pure numpy implementation of the batched SINR kernel.

Same formulas and the same singularity rule as the compiled kernel in
``_kernels.pyx``; used whenever the extension is unavailable.
"""

import numpy as np

from .precoders import COND_LIMIT

ZF_MIN, ZF_MAX, RZF, MF, WIENER = range(5)
EQ_NONE, EQ_ZF, EQ_MMSE = range(3)


def _norm1(a):
    return np.abs(a).sum(axis=-2).max(axis=-1)


def _inverse(a):
    try:
        return np.linalg.inv(a)
    except np.linalg.LinAlgError:
        out = np.full_like(a, np.nan)
        for t in range(a.shape[0]):
            try:
                out[t] = np.linalg.inv(a[t])
            except np.linalg.LinAlgError:
                pass
        return out


def _checked_inverse(g):
    ginv = _inverse(g)
    with np.errstate(invalid="ignore", over="ignore"):
        cond = _norm1(g) * _norm1(ginv)
        bad = ~(cond < COND_LIMIT)
    return ginv, bad


def _water_fill(w, budget):
    t, n = w.shape
    ws = np.sort(w, axis=1)
    k = np.arange(1, n + 1)
    mu = (budget + np.cumsum(ws, axis=1)) / k
    active = (mu > ws).sum(axis=1)
    level = mu[np.arange(t), np.maximum(active, 1) - 1]
    return np.maximum(level[:, None] / w - 1.0, 0.0)


def batch_sinr(h, precoder, equalizer, rho, c):
    """Return ``(gamma, singular)`` for a ``(T, n, m)`` channel batch."""
    h = np.asarray(h, dtype=np.complex128)
    t, n, _ = h.shape
    eye = np.eye(n)
    g = h @ np.conj(np.swapaxes(h, 1, 2))
    bad = np.zeros(t, dtype=bool)
    ginv = None
    if precoder in (ZF_MIN, ZF_MAX) or equalizer == EQ_ZF:
        ginv, bad = _checked_inverse(g)
        ginv = np.where(bad[:, None, None], eye, ginv)

    if precoder == ZF_MIN:
        tr = np.trace(ginv, axis1=1, axis2=2).real
        gamma = np.repeat((rho / tr)[:, None], n, axis=1)
    elif precoder == ZF_MAX:
        gamma = _water_fill(np.diagonal(ginv, axis1=1, axis2=2).real, rho)
    else:
        if precoder == MF:
            shift = 0.0
            a = g
            eta = np.trace(g, axis1=1, axis2=2).real
        else:
            shift = c if precoder == RZF else n / rho
            rinv = _inverse(g + shift * eye)
            a = g @ rinv
            eta = np.einsum("tij,tji->t", a, rinv).real
        with np.errstate(divide="ignore", invalid="ignore"):
            if equalizer == EQ_NONE:
                q = rho / (n * eta)
                p2 = np.abs(a) ** 2
                desired = np.diagonal(p2, axis1=1, axis2=2)
                leak = p2.sum(axis=2) - desired
                gamma = q[:, None] * desired / (q[:, None] * leak + 1.0)
            elif equalizer == EQ_ZF:
                b = ginv if precoder == MF else eye + shift * ginv
                d = (np.abs(b) ** 2).sum(axis=2)
                gamma = (rho / n) / (eta[:, None] * d)
            else:
                q = rho / (n * eta)
                k = eye + q[:, None, None] * (
                    np.conj(np.swapaxes(a, 1, 2)) @ a)
                kinv = _inverse(k)
                d = np.diagonal(kinv, axis1=1, axis2=2).real
                gamma = np.maximum(1.0 / d - 1.0, 0.0)
        bad |= ~(eta > 0)
    bad |= ~np.all(np.isfinite(gamma), axis=1)
    gamma = np.where(bad[:, None], 0.0, gamma)
    return np.ascontiguousarray(gamma), bad

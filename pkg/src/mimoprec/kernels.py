"""Backend selection for the batched SINR kernel.

The compiled extension ``mimoprec._kernels`` is used when it imports and
``MIMOPREC_PURE_PYTHON`` is unset; otherwise the numpy implementation in
``mimoprec._fallback`` takes over.  Both return identical shapes and agree
to rounding error.
"""

import os

import numpy as np

from . import _fallback
from .equalizers import EqualizerKind
from .precoders import PrecoderKind
from .sinr import LinkConfig

try:
    from . import _kernels
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None

__all__ = ["BACKEND", "available_backends", "codes", "batch_sinr",
           "batch_mutual_info"]

_PRECODER_CODES = {
    PrecoderKind.ZF_MIN_POWER: 0,
    PrecoderKind.ZF_MAX_THROUGHPUT: 1,
    PrecoderKind.RZF: 2,
    PrecoderKind.MF: 3,
    PrecoderKind.WIENER: 4,
}
_EQUALIZER_CODES = {
    EqualizerKind.NONE: 0,
    EqualizerKind.ZF_EQ: 1,
    EqualizerKind.MMSE_EQ: 2,
}

COMPILED_MAX_N = 8


def available_backends():
    return ["compiled", "python"] if _kernels is not None else ["python"]


BACKEND = ("compiled" if _kernels is not None
           and not os.environ.get("MIMOPREC_PURE_PYTHON") else "python")


def codes(cfg: LinkConfig):
    """Integer ``(precoder, equalizer, c)`` triple understood by the kernels."""
    return (_PRECODER_CODES[cfg.precoder], _EQUALIZER_CODES[cfg.equalizer],
            float(cfg.c) if cfg.c is not None else 0.0)


def batch_sinr(h, cfg: LinkConfig, backend=None):
    """Per-trial SINRs for a ``(T, n, m)`` stack of channels.

    Returns ``(gamma, singular)``: a ``(T, n)`` float array and a boolean
    mask of trials whose Gram/composite matrix was numerically singular
    (their SINRs are zeroed).
    """
    backend = backend or BACKEND
    p, e, c = codes(cfg)
    h = np.ascontiguousarray(h, dtype=np.complex128)
    if backend == "compiled" and _kernels is not None \
            and h.shape[1] <= COMPILED_MAX_N:
        t, n = h.shape[0], h.shape[1]
        gamma = np.empty((t, n))
        singular = np.empty(t, dtype=np.uint8)
        _kernels.batch_sinr(h, p, e, float(cfg.rho), c, gamma, singular)
        return gamma, singular.astype(bool)
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    return _fallback.batch_sinr(h, p, e, float(cfg.rho), c)


def batch_mutual_info(gamma, singular=None):
    """Per-trial ``sum_k log2(1 + gamma_k)``; singular trials score 0."""
    mi = np.log2(1.0 + gamma).sum(axis=1)
    if singular is not None:
        mi[singular] = 0.0
    return mi

"""Per-stream SINR closed forms for every precoder/equalizer pairing.

These are the single-channel reference implementations, written in the
eigenbasis ``H H^H = U diag(lambda) U^H`` wherever the analysis is.  The
Monte Carlo engine uses the batched matrix-function kernels in
:mod:`mimoprec.kernels` instead; the test-suite ties the two together.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import check_dims, gram, gram_condition, spectral
from .equalizers import EqualizerKind
from .errors import ConfigurationError, DomainError, SingularChannelError
from .precoders import (COND_LIMIT, PrecoderKind, build_precoder,
                        water_fill)

__all__ = [
    "LinkConfig",
    "sinr_zf_min_power",
    "sinr_zf_max_throughput",
    "sinr_rzf",
    "sinr_mf",
    "sinr_wiener",
    "sinr_mmse_receiver",
    "sinr_precoded_zf_eq",
    "sinr_precoded_mmse_eq",
    "sinr_mmse_composite",
    "link_sinr",
    "mutual_info",
]


@dataclass(frozen=True)
class LinkConfig:
    """One point of a link: antennas, SNR, target rate and the filters.

    ``c`` is the RZF regularization; it defaults to ``n`` and is ignored by
    the other precoders.
    """

    m: int
    n: int
    rho: float
    rate: float = 0.0
    precoder: PrecoderKind = PrecoderKind.ZF_MIN_POWER
    equalizer: EqualizerKind = EqualizerKind.NONE
    c: Optional[float] = None

    def __post_init__(self):
        check_dims(self.m, self.n)
        object.__setattr__(self, "precoder", PrecoderKind(self.precoder))
        object.__setattr__(self, "equalizer", EqualizerKind(self.equalizer))
        if not self.rho > 0:
            raise ConfigurationError(f"rho must be positive, got {self.rho}",
                                     "rho")
        if not self.rate >= 0:
            raise ConfigurationError(
                f"rate must be non-negative, got {self.rate}", "rate")
        if self.precoder.is_zf and self.equalizer is not EqualizerKind.NONE:
            raise ConfigurationError(
                "ZF precoders already decouple the streams; combine an "
                "equalizer only with rzf, mf or wiener", "equalizer")
        if self.precoder is PrecoderKind.RZF:
            c = float(self.n if self.c is None else self.c)
            if not c > 0:
                raise ConfigurationError(f"RZF c must be positive, got {c}",
                                         "c")
            object.__setattr__(self, "c", c)

    def with_rho(self, rho):
        return LinkConfig(self.m, self.n, rho, self.rate, self.precoder,
                          self.equalizer, self.c)

    def with_rate(self, rate):
        return LinkConfig(self.m, self.n, self.rho, rate, self.precoder,
                          self.equalizer, self.c)

    @property
    def shift(self):
        """Regularization added to the Gram matrix (0 for MF and ZF)."""
        if self.precoder is PrecoderKind.RZF:
            return self.c
        if self.precoder is PrecoderKind.WIENER:
            return self.n / self.rho
        return 0.0


def _checked_inverse(g):
    cond = gram_condition(g)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise SingularChannelError(
            f"Gram matrix is numerically singular (cond_1={cond:.3e})",
            {"cond_1": float(cond)})
    return np.linalg.inv(g)


def sinr_zf_min_power(h, rho):
    """Every stream sees ``rho / tr((H H^H)^-1)``."""
    ginv = _checked_inverse(gram(h))
    n = ginv.shape[0]
    return np.full(n, rho / np.trace(ginv).real)


def sinr_zf_max_throughput(h, rho):
    """Decoupled streams, so each SINR is its water-filled power."""
    ginv = _checked_inverse(gram(h))
    p, _ = water_fill(np.diag(ginv).real, rho)
    return p


def _interference_limited(weights, u, scale):
    # A = U diag(weights) U^H; row k splits into desired A_kk and leakage.
    a = (u * weights) @ u.conj().T
    p2 = np.abs(a) ** 2
    desired = np.diag(p2).copy()
    leak = p2.sum(axis=1) - desired
    return scale * desired / (scale * leak + 1.0)


def sinr_rzf(h, rho, c):
    """RZF SINR: desired over inter-stream leakage plus unit noise."""
    if not c > 0:
        raise DomainError(f"RZF regularization c must be positive, got {c}")
    s = spectral(h)
    lam, n = s.eigenvalues, len(s.eigenvalues)
    eta = np.sum(lam / (lam + c) ** 2)
    return _interference_limited(lam / (lam + c), s.basis, rho / (n * eta))


def sinr_mf(h, rho):
    """Matched-filter SINR (RZF structure with weights ``lambda``)."""
    s = spectral(h)
    lam, n = s.eigenvalues, len(s.eigenvalues)
    eta = lam.sum()
    if eta <= 0:
        raise DomainError("matched filter undefined for an all-zero channel")
    return _interference_limited(lam, s.basis, rho / (n * eta))


def _trace_noise_form(comp, noise, rho):
    n = comp.shape[0]
    p2 = np.abs(comp) ** 2
    desired = np.diag(p2).copy()
    leak = p2.sum(axis=1) - desired
    q = rho / n
    return q * desired / (q * leak + noise)


def sinr_wiener(h, rho):
    """Wiener-precoded SINR from the unnormalized composite.

    ``G = H F^-1 H^H`` with ``F = H^H H + (N/rho) I`` (``m x m``), and the
    noise term is ``tr(F^-2 H^H H)``; the scale factor cancels.
    """
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    h = np.asarray(h, dtype=np.complex128)
    n, m = h.shape
    hh = h.conj().T @ h
    finv = np.linalg.inv(hh + (n / rho) * np.eye(m))
    comp = h @ finv @ h.conj().T
    eta = np.trace(finv @ finv @ hh).real
    return _trace_noise_form(comp, eta, rho)


def sinr_mmse_receiver(h2, rho):
    """SINR of an MMSE receiver on an unprecoded ``r x n`` channel.

    Streams carry power ``rho/n``; the noise term is the trace of
    ``W W^H`` for ``W = (H2^H H2 + (n/rho) I)^-1 H2^H``.
    """
    h2 = np.asarray(h2, dtype=np.complex128)
    n = h2.shape[1]
    w = np.linalg.solve(h2.conj().T @ h2 + (n / rho) * np.eye(n),
                        h2.conj().T)
    noise = np.vdot(w, w).real
    return _trace_noise_form(w @ h2, noise, rho)


def _weights(kind, lam, n, rho, c):
    kind = PrecoderKind(kind)
    if kind is PrecoderKind.MF:
        return lam
    if kind is PrecoderKind.WIENER:
        shift = n / rho
    elif kind is PrecoderKind.RZF:
        shift = float(n if c is None else c)
    else:
        raise ConfigurationError(
            f"equalized SINR needs rzf, mf or wiener, got {kind.value}",
            "precoder")
    return lam / (lam + shift)


def sinr_precoded_zf_eq(h, rho, kind, c=None):
    """SNR after ZF-equalizing the precoded channel (no interference left).

    ``gamma_k = (rho/N) / (eta * sum_l |u_kl|^2 / w_l^2)`` where ``w_l`` is
    the precoder's eigen-weight (``lambda/(lambda+shift)`` or ``lambda``).
    """
    s = spectral(h)
    lam, u, n = s.eigenvalues, s.basis, len(s.eigenvalues)
    cond = gram_condition(gram(h))
    if lam[-1] <= 0 or not np.isfinite(cond) or cond >= COND_LIMIT:
        raise SingularChannelError(
            "ZF equalization of a singular channel",
            {"cond_1": float(cond), "lambda_min": float(lam[-1])})
    w = _weights(kind, lam, n, rho, c)
    eta = np.sum(w ** 2 / lam)
    noise = (np.abs(u) ** 2) @ (1.0 / w ** 2)
    return (rho / n) / (eta * noise)


def sinr_mmse_composite(comp, rho):
    """Unbiased MMSE-equalizer SINR ``1 / [I + (rho/N) C^H C]^-1_kk - 1``.

    ``comp`` is the composite channel ``C = H P`` of a unit-trace precoder.
    """
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    comp = np.asarray(comp, dtype=np.complex128)
    n = comp.shape[1]
    k = np.eye(n) + (rho / n) * (comp.conj().T @ comp)
    d = np.diag(np.linalg.inv(k)).real
    return np.clip(1.0 / d - 1.0, 0.0, None)


def sinr_precoded_mmse_eq(h, rho, kind, c=None):
    """MMSE-equalized SINR of ``H`` precoded by ``kind`` (see
    :func:`sinr_mmse_composite`)."""
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    h = np.asarray(h, dtype=np.complex128)
    return sinr_mmse_composite(h @ build_precoder(kind, h, rho, c).matrix,
                               rho)


def link_sinr(h, cfg: LinkConfig):
    """Per-stream SINR of ``h`` under ``cfg``'s precoder and equalizer."""
    pk, eq = cfg.precoder, cfg.equalizer
    if eq is EqualizerKind.ZF_EQ:
        return sinr_precoded_zf_eq(h, cfg.rho, pk, cfg.c)
    if eq is EqualizerKind.MMSE_EQ:
        return sinr_precoded_mmse_eq(h, cfg.rho, pk, cfg.c)
    if pk is PrecoderKind.ZF_MIN_POWER:
        return sinr_zf_min_power(h, cfg.rho)
    if pk is PrecoderKind.ZF_MAX_THROUGHPUT:
        return sinr_zf_max_throughput(h, cfg.rho)
    if pk is PrecoderKind.RZF:
        return sinr_rzf(h, cfg.rho, cfg.c)
    if pk is PrecoderKind.MF:
        return sinr_mf(h, cfg.rho)
    return sinr_wiener(h, cfg.rho)


def mutual_info(g):
    """``sum_k log2(1 + gamma_k)`` in b/s/Hz (last axis is the stream axis)."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise DomainError("SINRs must be non-negative")
    return np.log2(1.0 + g).sum(axis=-1)

"""Linear transmit precoders built from a single channel realization.

Two power conventions coexist, exactly as in the underlying analysis:

* the zero-forcing designs send unit-power symbols and fold the SNR into
  the precoder (``beta**2 * tr(P P^H) = rho`` for the minimum-power design,
  a weighted budget for the throughput design);
* RZF, MF and Wiener send symbols with covariance ``(rho/N) I`` through a
  unit-trace precoder (``beta**2 * eta = 1``).
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import gram, gram_condition
from .errors import DomainError, SingularChannelError

__all__ = [
    "PrecoderKind",
    "PrecoderOutput",
    "COND_LIMIT",
    "water_fill",
    "build_zf_min_power",
    "build_zf_max_throughput",
    "build_rzf",
    "build_mf",
    "build_wiener",
    "build_precoder",
]

#: Gram matrices at or above this 1-norm condition number count as singular.
COND_LIMIT = 1e12


class PrecoderKind(enum.Enum):
    ZF_MIN_POWER = "zf_min_power"
    ZF_MAX_THROUGHPUT = "zf_max_throughput"
    RZF = "rzf"
    MF = "mf"
    WIENER = "wiener"

    @property
    def is_zf(self):
        return self in (PrecoderKind.ZF_MIN_POWER,
                        PrecoderKind.ZF_MAX_THROUGHPUT)


@dataclass(frozen=True)
class PrecoderOutput:
    """A precoder ``matrix`` (``m x n``, scaling included) and its metadata."""

    kind: PrecoderKind
    matrix: np.ndarray
    beta: float
    eta: Optional[float] = None
    powers: Optional[np.ndarray] = None


def _gram_inverse(h):
    g = gram(h)
    cond = gram_condition(g)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise SingularChannelError(
            f"Gram matrix is numerically singular (cond_1={cond:.3e})",
            {"cond_1": float(cond)})
    return np.linalg.inv(g)


def water_fill(weights, budget):
    """Throughput-optimal powers under ``sum_k p_k * weights_k <= budget``.

    Maximizes ``sum log(1 + p_k)``: ``p_k = mu / w_k - 1`` on the active
    set, which is grown from the cheapest streams; streams whose power
    would go negative are switched off.  Returns ``(powers, mu)``.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise DomainError("stream weights must be positive")
    order = np.argsort(w, kind="stable")
    ws = w[order]
    for k in range(len(ws), 0, -1):
        mu = (budget + ws[:k].sum()) / k
        if mu > ws[k - 1]:
            break
    p = np.zeros_like(w)
    p[order[:k]] = mu / ws[:k] - 1.0
    return p, mu


def build_zf_min_power(h, rho):
    """Minimum-power ZF: ``beta * H^H (H H^H)^-1`` with ``beta^2 = rho / tr(G^-1)``."""
    h = np.asarray(h, dtype=np.complex128)
    ginv = _gram_inverse(h)
    beta = np.sqrt(rho / np.trace(ginv).real)
    return PrecoderOutput(PrecoderKind.ZF_MIN_POWER,
                          beta * (h.conj().T @ ginv), float(beta))


def build_zf_max_throughput(h, rho):
    """Throughput-maximizing ZF with per-stream water-filled powers."""
    h = np.asarray(h, dtype=np.complex128)
    ginv = _gram_inverse(h)
    p, _ = water_fill(np.diag(ginv).real, rho)
    matrix = h.conj().T @ ginv @ np.diag(np.sqrt(p))
    # H P = diag(sqrt(p)); beta is reported as 1 for this design
    return PrecoderOutput(PrecoderKind.ZF_MAX_THROUGHPUT, matrix, 1.0,
                          powers=p)


def _regularized(h, shift, kind):
    # Shared by RZF and Wiener so that Wiener == RZF(c=N/rho) bit for bit.
    h = np.asarray(h, dtype=np.complex128)
    n = h.shape[0]
    g = gram(h)
    reg_inv = np.linalg.inv(g + shift * np.eye(n))
    lam = np.clip(np.linalg.eigvalsh(g), 0.0, None)
    eta = float(np.sum(lam / (lam + shift) ** 2))
    if eta == 0.0:
        raise DomainError(f"{kind.value} precoder undefined for an all-zero "
                          "channel")
    beta = 1.0 / np.sqrt(eta)
    return PrecoderOutput(kind, beta * (h.conj().T @ reg_inv), float(beta),
                          eta)


def build_rzf(h, c):
    """Regularized ZF ``beta * H^H (H H^H + c I)^-1`` with unit trace."""
    if not c > 0:
        raise DomainError(f"RZF regularization c must be positive, got {c}")
    return _regularized(h, float(c), PrecoderKind.RZF)


def build_mf(h):
    """Transmit matched filter ``H^H / sqrt(tr(H^H H))``."""
    h = np.asarray(h, dtype=np.complex128)
    eta = float(np.vdot(h, h).real)
    if eta == 0.0:
        raise DomainError("matched filter undefined for an all-zero channel")
    beta = 1.0 / np.sqrt(eta)
    return PrecoderOutput(PrecoderKind.MF, beta * h.conj().T, float(beta), eta)


def build_wiener(h, rho):
    """Transmit Wiener filter, i.e. RZF with ``c = N / rho``.

    Built through the ``n x n`` push-through form
    ``H^H (H H^H + (N/rho) I)^-1``; the ``m x m`` matrix
    ``F = H^H H + (N/rho) I`` is never inverted here.
    """
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    n = np.shape(h)[0]
    return _regularized(h, n / rho, PrecoderKind.WIENER)


def build_precoder(kind, h, rho, c=None):
    """Dispatch on :class:`PrecoderKind`; ``c`` defaults to ``N`` for RZF."""
    kind = PrecoderKind(kind)
    if kind is PrecoderKind.ZF_MIN_POWER:
        return build_zf_min_power(h, rho)
    if kind is PrecoderKind.ZF_MAX_THROUGHPUT:
        return build_zf_max_throughput(h, rho)
    if kind is PrecoderKind.RZF:
        return build_rzf(h, np.shape(h)[0] if c is None else c)
    if kind is PrecoderKind.MF:
        return build_mf(h)
    return build_wiener(h, rho)

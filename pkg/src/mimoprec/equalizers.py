"""Receive equalizers for the composite (precoded) channel ``HP``."""

import enum

import numpy as np

from .channel import gram_condition
from .errors import DomainError, SingularChannelError
from .precoders import COND_LIMIT

__all__ = ["EqualizerKind", "build_zf_equalizer", "build_mmse_equalizer"]


class EqualizerKind(enum.Enum):
    NONE = "none"
    ZF_EQ = "zf"
    MMSE_EQ = "mmse"


def build_zf_equalizer(comp):
    """``(C^H C)^-1 C^H`` for the composite channel ``C``."""
    comp = np.asarray(comp, dtype=np.complex128)
    a = comp.conj().T @ comp
    cond = gram_condition(a)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise SingularChannelError(
            f"composite channel is numerically singular (cond_1={cond:.3e})",
            {"cond_1": float(cond)})
    return np.linalg.solve(a, comp.conj().T)


def build_mmse_equalizer(comp, rho):
    """``(C^H C + (B/rho) I)^-1 C^H`` with ``B`` streams; never singular."""
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    comp = np.asarray(comp, dtype=np.complex128)
    b = comp.shape[1]
    a = comp.conj().T @ comp + (b / rho) * np.eye(b)
    return np.linalg.solve(a, comp.conj().T)

"""I.i.d. Rayleigh MIMO channels, their Gram spectra and exponential orders.

A channel realization is a plain ``complex128`` array of shape ``(n, m)``
(``n`` receive rows, ``m`` transmit columns) with CN(0, 1) entries.

Randomness is counter based: the stream feeding trial ``t`` of SNR point
``p`` is a Philox generator keyed by ``(master_seed, domain, p, t // BLOCK)``,
and the trial occupies row ``t % BLOCK`` of that block.  Any partition of
the trial range over workers therefore reproduces the same draws.
"""

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError, NumericError

__all__ = [
    "BLOCK",
    "CHANNEL_DOMAIN",
    "TrialStream",
    "EigenSpectrum",
    "ExponentialOrders",
    "block_generator",
    "draw_channels",
    "sample_channel",
    "spectral",
    "exponential_orders",
    "gram",
    "gram_condition",
]

#: Trials per counter block.
BLOCK = 1 << 16

#: Stream domains; channel draws and link-level symbol/noise draws never
#: share a generator.
CHANNEL_DOMAIN = 0
LINK_DOMAIN = 1


class TrialStream(NamedTuple):
    """Address of one trial in the counter-based stream layout."""

    master_seed: int
    trial_index: int
    point_index: int = 0


def check_dims(m, n):
    if int(m) != m or int(n) != n:
        raise ConfigurationError("antenna counts must be integers", "m")
    if n < 1:
        raise ConfigurationError(f"n must be >= 1 (got n={n})", "n")
    if m < n:
        raise ConfigurationError(
            f"precoding requires M >= N, got m={m} < n={n}", "m")


def block_generator(master_seed, point_index, block_index,
                    domain=CHANNEL_DOMAIN):
    """Return the Philox generator owning one block of trials."""
    ss = np.random.SeedSequence(
        int(master_seed), spawn_key=(int(domain), int(point_index),
                                     int(block_index)))
    return np.random.Generator(np.random.Philox(ss))


def _complex_normal(gen, shape):
    z = gen.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_channels(m, n, master_seed, point_index=0, start=0, count=1):
    """Channels for trials ``start .. start+count-1`` of one SNR point.

    Returns an array of shape ``(count, n, m)``.  Trial ``t`` always gets
    the same matrix regardless of how the range is split.
    """
    check_dims(m, n)
    out = np.empty((count, n, m), dtype=np.complex128)
    t, end = start, start + count
    while t < end:
        blk, off = divmod(t, BLOCK)
        stop = min(end - blk * BLOCK, BLOCK)
        # standard_normal fills sequentially, so a block prefix is stable
        gen = block_generator(master_seed, point_index, blk)
        h = _complex_normal(gen, (stop, n, m))
        out[t - start:t - start + stop - off] = h[off:]
        t = blk * BLOCK + stop
    return out


def sample_channel(m, n, stream: Union[TrialStream, np.random.Generator]):
    """Draw one ``n x m`` channel with i.i.d. CN(0, 1) entries.

    ``stream`` is either a :class:`TrialStream` address (bit-identical to
    the Monte Carlo draw for that trial) or any numpy ``Generator``.
    """
    check_dims(m, n)
    if isinstance(stream, TrialStream):
        return draw_channels(m, n, stream.master_seed, stream.point_index,
                             stream.trial_index, 1)[0]
    return _complex_normal(stream, (n, m))


def gram(h):
    """``H H^H`` (works on stacks of matrices)."""
    h = np.asarray(h)
    return h @ np.conj(np.swapaxes(h, -1, -2))


def gram_condition(g):
    """1-norm condition number of a (stack of) square matrices."""
    g = np.asarray(g)
    try:
        # singular complex input yields a complex inf; keep the result real
        return np.real(np.linalg.cond(g, 1))
    except np.linalg.LinAlgError:
        return np.inf


@dataclass(frozen=True)
class EigenSpectrum:
    """Spectral data of ``H H^H = U diag(eigenvalues) U^H``.

    Eigenvalues are sorted in descending order and ``basis[:, l]`` is the
    eigenvector belonging to ``eigenvalues[l]``; ``basis[k, l]`` is the
    entry u_kl used throughout the SINR formulas.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray


def spectral(h):
    """Eigen-decompose the ``n x n`` Gram matrix of ``h``."""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2:
        raise DomainError(f"expected a 2-D channel matrix, got shape {h.shape}")
    g = gram(h)
    g = 0.5 * (g + g.conj().T)
    try:
        lam, u = np.linalg.eigh(g)
        sv = np.linalg.svd(h, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            "eigendecomposition of the Gram matrix did not converge",
            {"cond_1": float(gram_condition(g)),
             "fro_norm": float(np.linalg.norm(h)),
             "finite": bool(np.all(np.isfinite(h)))}) from exc
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    return EigenSpectrum(lam, u[:, order], np.sort(sv)[::-1])


@dataclass(frozen=True)
class ExponentialOrders:
    """Exponential orders ``alpha_k = -ln(lambda_k) / ln(rho)``.

    ``degenerate[k]`` flags a zero eigenvalue, for which alpha is ``inf``.
    """

    alphas: np.ndarray
    rho: float
    degenerate: np.ndarray


def exponential_orders(s, rho):
    """Map eigenvalues to their exponential orders at linear SNR ``rho``."""
    if not rho > 1:
        raise DomainError(f"rho must exceed 1 so that log(rho) > 0, got {rho}")
    lam = np.asarray(s.eigenvalues if isinstance(s, EigenSpectrum) else s,
                     dtype=float)
    zero = lam <= 0
    with np.errstate(divide="ignore"):
        alphas = np.where(zero, np.inf, -np.log(np.where(zero, 1.0, lam)))
    alphas = np.where(zero, np.inf, alphas / np.log(rho))
    return ExponentialOrders(alphas, float(rho), zero)

"""Closed-form diversity orders, rate thresholds and DMT curves."""

import csv
import io
import math
from typing import NamedTuple

from .channel import check_dims
from .equalizers import EqualizerKind
from .errors import ConfigurationError, DomainError
from .precoders import PrecoderKind

__all__ = [
    "DiversityPrediction",
    "rate_threshold",
    "active_count",
    "predicted_diversity",
    "dmt_curve",
    "default_grid",
    "diversity_table",
]

TABLE_COLUMNS = ("precoder", "equalizer", "M", "N", "R", "d_predicted",
                 "regime_note")


class DiversityPrediction(NamedTuple):
    value: float
    regime_note: str = ""


def rate_threshold(n):
    """Rate above which RZF/MF precoding hits an error floor.

    ``N log2(N / (N-1))``; a single stream has no inter-stream interference,
    so ``n = 1`` returns ``inf``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if n == 1:
        return math.inf
    return n * math.log2(n / (n - 1))


def active_count(n, rate):
    """``L = ceil(N 2^(-R/N))`` clamped to ``[1, N]``."""
    return min(n, max(1, math.ceil(n * 2.0 ** (-rate / n))))


def _mmse_like(m, n, rate):
    big_l = active_count(n, rate)
    return big_l * big_l + (m - n) * big_l


def predicted_diversity(m, n, rate, precoder, equalizer=EqualizerKind.NONE):
    """Fixed-rate diversity order of one precoder/equalizer pairing.

    Parameters
    ----------
    m, n : int
        Transmit and receive antenna counts, ``m >= n``.
    rate : float
        Target spectral efficiency in b/s/Hz.
    precoder, equalizer : PrecoderKind, EqualizerKind (or their values)

    Returns
    -------
    DiversityPrediction
        ``value`` is 0 only in the proven error-floor regimes; the note
        explains which regime applies.
    """
    check_dims(m, n)
    if not rate >= 0:
        raise ConfigurationError(f"rate must be non-negative, got {rate}",
                                 "rate")
    pk, eq = PrecoderKind(precoder), EqualizerKind(equalizer)
    full = float(m * n)
    zf_like = float(m - n + 1)
    r_th = rate_threshold(n)

    if pk.is_zf:
        if eq is not EqualizerKind.NONE:
            raise ConfigurationError(
                "ZF precoders are not combined with an equalizer",
                "equalizer")
        return DiversityPrediction(zf_like, "zero-forcing: M-N+1")

    if pk is PrecoderKind.WIENER:
        if eq is EqualizerKind.ZF_EQ:
            return DiversityPrediction(zf_like, "wiener + ZF equalizer: M-N+1")
        note = "L^2+(M-N)L with L=ceil(N 2^(-R/N))"
        if eq is EqualizerKind.MMSE_EQ:
            note += "; same as the MMSE receiver alone"
        return DiversityPrediction(float(_mmse_like(m, n, rate)), note)

    # RZF and MF share every result
    if eq is EqualizerKind.ZF_EQ:
        return DiversityPrediction(0.5 * zf_like, "fractional: (M-N+1)/2")
    if rate < r_th:
        return DiversityPrediction(full, "below R_th: full diversity MN")
    boundary = "; boundary R = R_th (strict-inequality result)" \
        if rate == r_th else ""
    if eq is EqualizerKind.MMSE_EQ:
        return DiversityPrediction(
            0.5 * _mmse_like(m, n, rate),
            "above R_th: (L^2+(M-N)L)/2" + boundary)
    return DiversityPrediction(0.0, "error floor above R_th" + boundary)


def dmt_curve(m, n, precoder, r, equalizer=EqualizerKind.NONE):
    """Diversity-multiplexing tradeoff ``d(r)`` of a precoder alone.

    ZF designs and the Wiener precoder give ``(M-N+1)(1-r/N)^+``; RZF and
    MF give 0 everywhere.  Precoder+equalizer chains have no known curve
    and are rejected.
    """
    check_dims(m, n)
    if EqualizerKind(equalizer) is not EqualizerKind.NONE:
        raise ConfigurationError(
            "no DMT result exists for precoder+equalizer chains", "equalizer")
    if not 0 <= r <= n:
        raise DomainError(f"multiplexing gain must lie in [0, {n}], got {r}")
    pk = PrecoderKind(precoder)
    if pk in (PrecoderKind.RZF, PrecoderKind.MF):
        return 0.0
    return (m - n + 1) * max(0.0, 1.0 - r / n)


def default_grid(max_n=4, rates=(0.5, 1.5, 1.9, 2.5, 3.0, 4.0, 5.0)):
    """Every valid (precoder, equalizer, M, N, R) cell up to ``max_n``."""
    cells = []
    for pk in PrecoderKind:
        eqs = [EqualizerKind.NONE] if pk.is_zf else list(EqualizerKind)
        for eq in eqs:
            for n in range(1, max_n + 1):
                for m in range(n, max_n + 1):
                    for r in rates:
                        cells.append((pk, eq, m, n, r))
    return cells


def diversity_table(cells=None):
    """CSV text with one predicted diversity per cell."""
    cells = default_grid() if cells is None else cells
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(TABLE_COLUMNS)
    for pk, eq, m, n, r in cells:
        d = predicted_diversity(m, n, r, pk, eq)
        wr.writerow([PrecoderKind(pk).value, EqualizerKind(eq).value, m, n,
                     repr(float(r)), repr(d.value), d.regime_note])
    return buf.getvalue()

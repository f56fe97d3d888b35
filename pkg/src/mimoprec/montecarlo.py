"""Monte Carlo outage / symbol-error estimation and diversity slope fits.

Trials are grouped into counter blocks (see :mod:`mimoprec.channel`); each
block is an independent task and the only reduction is a sum of integer
counts, so results do not depend on the number of workers.
"""

import csv
import io
import logging
import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .channel import (BLOCK, LINK_DOMAIN, block_generator, draw_channels)
from .equalizers import EqualizerKind
from .errors import ConfigurationError, InsufficientDataError
from .precoders import COND_LIMIT, PrecoderKind
from .sinr import LinkConfig

log = logging.getLogger(__name__)

__all__ = [
    "OutageEstimate",
    "DiversityFit",
    "CONSTELLATIONS",
    "db_to_linear",
    "wilson_interval",
    "estimate_outage",
    "estimate_outage_rates",
    "sweep",
    "sweep_rates",
    "fit_diversity",
    "simulate_ser",
    "ser_scalar_channel",
    "ser_sweep",
    "csv_text",
    "write_csv",
]

Z95 = 1.959963984540054
CSV_COLUMNS = ("snr_db", "trials", "outages", "p_hat", "ci_low", "ci_high",
               "singular_draws")


def db_to_linear(snr_db):
    return 10.0 ** (snr_db / 10.0)


def wilson_interval(k, n, z=Z95):
    """Two-sided Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0:
        raise ValueError("need at least one trial")
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard rounding at the edges so that lo <= p <= hi holds exactly
    return min(lo, p), max(hi, p)


@dataclass(frozen=True)
class OutageEstimate:
    """Outage (or symbol-error) frequency at one SNR point."""

    p_hat: float
    trials: int
    outage_count: int
    ci_low: float
    ci_high: float
    snr_db: Optional[float] = None
    singular_draws: int = 0

    @classmethod
    def from_counts(cls, count, trials, snr_db=None, singular=0):
        lo, hi = wilson_interval(count, trials)
        return cls(count / trials, int(trials), int(count), lo, hi, snr_db,
                   int(singular))


@dataclass(frozen=True)
class DiversityFit:
    """Least-squares line through ``log10 p_hat`` versus ``log10 rho``.

    The diversity estimate is ``-slope``.
    """

    slope: float
    intercept: float
    stderr: float
    window_db: tuple
    points_used: int

    @property
    def diversity(self):
        return -self.slope


# -- worker plumbing ---------------------------------------------------------

def _block_ranges(trials):
    for blk in range((trials + BLOCK - 1) // BLOCK):
        yield blk * BLOCK, min(trials, (blk + 1) * BLOCK)


@contextmanager
def _pool(workers):
    if workers is None or workers <= 1:
        yield None
        return
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as ex:
        yield ex


def _map(ex, fn, tasks):
    if ex is None:
        return [fn(t) for t in tasks]
    return list(ex.map(fn, tasks))


def _outage_task(task):
    cfg, rates, seed, point, start, stop, backend = task
    h = draw_channels(cfg.m, cfg.n, seed, point, start, stop - start)
    gamma, singular = kernels.batch_sinr(h, cfg, backend)
    mi = kernels.batch_mutual_info(gamma, singular)
    counts = [int(np.count_nonzero(mi <= r)) for r in rates]
    return counts, int(np.count_nonzero(singular))


def _check_trials(trials):
    if int(trials) != trials or trials < 1:
        raise ConfigurationError(f"trials must be a positive integer, got "
                                 f"{trials}", "trials")


def _rates_estimates(cfg, rates, trials, master_seed, point_index, snr_db,
                     ex, backend):
    tasks = [(cfg, tuple(rates), master_seed, point_index, a, b, backend)
             for a, b in _block_ranges(trials)]
    counts = np.zeros(len(rates), dtype=np.int64)
    singular = 0
    for c, s in _map(ex, _outage_task, tasks):
        counts += c
        singular += s
    if singular:
        log.warning("%d singular draws scored as outage (snr_db=%s)",
                    singular, snr_db)
    return [OutageEstimate.from_counts(int(k), trials, snr_db, singular)
            for k in counts]


def estimate_outage(cfg: LinkConfig, trials, master_seed, *, point_index=0,
                    snr_db=None, workers=1, backend=None):
    """Fraction of channel draws whose mutual information is ``<= cfg.rate``."""
    _check_trials(trials)
    with _pool(workers) as ex:
        return _rates_estimates(cfg, [cfg.rate], int(trials), master_seed,
                                point_index, snr_db, ex, backend)[0]


def estimate_outage_rates(cfg: LinkConfig, rates, trials, master_seed, *,
                          point_index=0, snr_db=None, workers=1,
                          backend=None):
    """Like :func:`estimate_outage` for several rates on shared draws."""
    _check_trials(trials)
    with _pool(workers) as ex:
        return _rates_estimates(cfg, list(rates), int(trials), master_seed,
                                point_index, snr_db, ex, backend)


def _check_snr_list(snr_db_list):
    snrs = [float(s) for s in snr_db_list]
    if any(b <= a for a, b in zip(snrs, snrs[1:])):
        raise ConfigurationError("SNR list must be strictly increasing",
                                 "snr_db")
    return snrs


def sweep_rates(cfg: LinkConfig, rates, snr_db_list, trials_per_point,
                master_seed, *, workers=1, backend=None):
    """Outage curves for several rates; returns ``{rate: [estimates]}``.

    Point ``i`` draws its channels from stream index ``i``, so every rate
    (and every run with the same seed) sees the same channels.
    """
    snrs = _check_snr_list(snr_db_list)
    _check_trials(trials_per_point)
    rates = [float(r) for r in rates]
    out = {r: [] for r in rates}
    with _pool(workers) as ex:
        for i, snr in enumerate(snrs):
            est = _rates_estimates(cfg.with_rho(db_to_linear(snr)), rates,
                                   int(trials_per_point), master_seed, i,
                                   snr, ex, backend)
            for r, e in zip(rates, est):
                out[r].append(e)
            log.info("point %d/%d snr=%.2f dB: %s", i + 1, len(snrs), snr,
                     ", ".join(f"R={r:g} p={e.p_hat:.3e}"
                               for r, e in zip(rates, est)))
    return out


def sweep(cfg: LinkConfig, snr_db_list, trials_per_point, master_seed, *,
          workers=1, backend=None):
    """One :class:`OutageEstimate` per SNR point at ``cfg.rate``."""
    return sweep_rates(cfg, [cfg.rate], snr_db_list, trials_per_point,
                       master_seed, workers=workers,
                       backend=backend)[float(cfg.rate)]


def fit_diversity(points: Sequence[OutageEstimate], window_db, min_pout=0.0,
                  max_pout=1.0, min_count=25):
    """Fit ``log10 p_hat = intercept + slope * log10 rho`` inside a window.

    A point is usable when its SNR lies in ``window_db``, its estimate lies
    in ``[min_pout, max_pout]`` and it has at least ``min_count`` events.
    """
    if window_db is None or len(window_db) != 2:
        raise ConfigurationError("a [lo, hi] SNR window is required",
                                 "window_db")
    lo, hi = float(window_db[0]), float(window_db[1])
    if lo > hi:
        raise ConfigurationError("window_db must satisfy lo <= hi",
                                 "window_db")
    usable = [p for p in points
              if p.snr_db is not None and lo <= p.snr_db <= hi
              and p.outage_count >= min_count
              and min_pout <= p.p_hat <= max_pout]
    if len(usable) < 3:
        raise InsufficientDataError(
            f"need >= 3 usable points in [{lo}, {hi}] dB, got "
            f"{len(usable)}: " + ", ".join(
                f"({p.snr_db} dB, p={p.p_hat:.3g}, n={p.outage_count})"
                for p in usable), usable)
    x = np.array([p.snr_db / 10.0 for p in usable])
    y = np.log10([p.p_hat for p in usable])
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(a, y, rcond=None)
    dof = len(x) - 2
    resid = y - (slope * x + intercept)
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    snrs = [p.snr_db for p in points if p.snr_db is not None]
    window = (max(lo, min(snrs)), min(hi, max(snrs)))
    return DiversityFit(float(slope), float(intercept), stderr, window,
                        len(usable))


# -- link-level symbol error simulation -------------------------------------

def _qam(m):
    side = int(round(math.sqrt(m)))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / math.sqrt(np.mean(np.abs(pts) ** 2))


CONSTELLATIONS = {"QPSK": _qam(4), "16QAM": _qam(16)}


def _inv(a):
    try:
        return np.linalg.inv(a)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(a)


def batch_precoders(h, cfg: LinkConfig):
    """Full precoders for a channel batch plus the symbol amplitude.

    ZF designs carry the SNR in the matrix (unit-power symbols); the
    others are unit-trace with symbols of power ``rho/N``.
    """
    t, n, _ = h.shape
    hh = np.conj(np.swapaxes(h, 1, 2))
    g = h @ hh
    eye = np.eye(n)
    pk = cfg.precoder
    if pk.is_zf:
        ginv = _inv(g)
        cond = (np.abs(g).sum(axis=1).max(axis=1)
                * np.abs(ginv).sum(axis=1).max(axis=1))
        bad = ~(cond < COND_LIMIT)
        if pk is PrecoderKind.ZF_MIN_POWER:
            tr = np.trace(ginv, axis1=1, axis2=2).real
            p = np.sqrt(cfg.rho / tr)[:, None, None] * (hh @ ginv)
        else:
            from ._fallback import _water_fill
            pw = _water_fill(np.diagonal(ginv, axis1=1, axis2=2).real,
                             cfg.rho)
            p = hh @ ginv * np.sqrt(pw)[:, None, :]
        return p, 1.0, bad
    if pk is PrecoderKind.MF:
        p = hh
    else:
        p = hh @ _inv(g + cfg.shift * eye)
    norm = np.sqrt(np.einsum("tij,tij->t", p, p.conj()).real)
    return p / norm[:, None, None], math.sqrt(cfg.rho / n), \
        np.zeros(t, dtype=bool)


def _equalizer(comp, cfg: LinkConfig):
    n = comp.shape[1]
    ch = np.conj(np.swapaxes(comp, 1, 2))
    if cfg.equalizer is EqualizerKind.NONE:
        return None
    a = ch @ comp
    if cfg.equalizer is EqualizerKind.MMSE_EQ:
        a = a + (n / cfg.rho) * np.eye(n)
    return _inv(a) @ ch


def _ser_task(task):
    cfg, const_name, seed, point, start, stop, noise = task
    const = CONSTELLATIONS[const_name]
    t = stop - start
    h = draw_channels(cfg.m, cfg.n, seed, point, start, t)
    p, amp, bad = batch_precoders(h, cfg)
    comp = h @ p
    w = _equalizer(comp, cfg)
    eff = comp if w is None else w @ comp
    # symbol and noise draws for this block come from the link domain
    blk = start // BLOCK
    gen = block_generator(seed, point, blk, LINK_DOMAIN)
    off = start - blk * BLOCK
    n = cfg.n
    idx = gen.integers(0, len(const), size=(off + t, n))[off:]
    z = gen.standard_normal((off + t, n, 2))[off:]
    x = const[idx]
    y = amp * np.einsum("tij,tj->ti", eff, x)
    if noise:
        nz = (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)
        y = y + (nz if w is None else np.einsum("tij,tj->ti", w, nz))
    gain = amp * np.diagonal(eff, axis1=1, axis2=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        est = y / gain
    dist = np.abs(est[..., None] - const[None, None, :])
    dist = np.where(np.isfinite(dist), dist, np.inf)
    det = np.argmin(dist, axis=2)
    wrong = np.any(det != idx, axis=1) | bad
    return int(np.count_nonzero(wrong)), int(np.count_nonzero(bad))


def simulate_ser(cfg: LinkConfig, constellation, trials, master_seed, *,
                 point_index=0, snr_db=None, noise=True, workers=1):
    """Uncoded vector symbol-error rate through ``y = W (H P x + n)``.

    Each stream is sliced to the nearest constellation point after
    dividing by its own gain; residual inter-stream interference is left
    in as noise.  The returned record counts vector errors in
    ``outage_count``.
    """
    if constellation not in CONSTELLATIONS:
        raise ConfigurationError(
            f"constellation must be one of {sorted(CONSTELLATIONS)}",
            "constellation")
    _check_trials(trials)
    tasks = [(cfg, constellation, master_seed, point_index, a, b, noise)
             for a, b in _block_ranges(int(trials))]
    with _pool(workers) as ex:
        res = _map(ex, _ser_task, tasks)
    errors = sum(r[0] for r in res)
    singular = sum(r[1] for r in res)
    return OutageEstimate.from_counts(errors, int(trials), snr_db, singular)


def ser_scalar_channel(gamma, constellation, trials, master_seed):
    """Symbol-error rate of one unit-energy stream at a fixed SNR ``gamma``."""
    if constellation not in CONSTELLATIONS:
        raise ConfigurationError(
            f"constellation must be one of {sorted(CONSTELLATIONS)}",
            "constellation")
    if not gamma > 0:
        raise ConfigurationError("gamma must be positive", "gamma")
    _check_trials(trials)
    const = CONSTELLATIONS[constellation]
    errors = 0
    for start, stop in _block_ranges(int(trials)):
        gen = block_generator(master_seed, 0, start // BLOCK, LINK_DOMAIN)
        t = stop - start
        idx = gen.integers(0, len(const), size=t)
        z = gen.standard_normal((t, 2)) @ np.array([1.0, 1j])
        y = const[idx] + z * math.sqrt(0.5 / gamma)
        det = np.argmin(np.abs(y[:, None] - const[None, :]), axis=1)
        errors += int(np.count_nonzero(det != idx))
    return OutageEstimate.from_counts(errors, int(trials))


def ser_sweep(cfg: LinkConfig, constellation, snr_db_list, trials_per_point,
              master_seed, *, workers=1):
    snrs = _check_snr_list(snr_db_list)
    out = []
    for i, snr in enumerate(snrs):
        out.append(simulate_ser(cfg.with_rho(db_to_linear(snr)),
                                constellation, trials_per_point, master_seed,
                                point_index=i, snr_db=snr, workers=workers))
        log.info("SER point %d/%d snr=%.2f dB: %.3e", i + 1, len(snrs), snr,
                 out[-1].p_hat)
    return out


# -- CSV output ---------------------------------------------------------------

def csv_text(points: Sequence[OutageEstimate]):
    """Render estimates in the sweep CSV schema (shortest exact floats)."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for p in points:
        wr.writerow([repr(float(p.snr_db)), p.trials, p.outage_count,
                     repr(p.p_hat), repr(p.ci_low), repr(p.ci_high),
                     p.singular_draws])
    return buf.getvalue()


def write_csv(points, path):
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(points))

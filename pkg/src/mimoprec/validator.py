"""Empirical checks of the random-matrix facts behind the diversity results.

Slope checks draw one set of Wishart spectra and count tail events at
every SNR in ``rho_list``; KS checks compare a sampled statistic with its
analytic law.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .channel import BLOCK, check_dims, draw_channels, gram
from .errors import ConfigurationError, InfeasibleCheckError
from .montecarlo import OutageEstimate, fit_diversity

__all__ = [
    "DistributionCheckReport",
    "default_rho_list",
    "check_lemma1",
    "check_lambda_min_tail",
    "check_inverse_diag_chisquare",
    "check_unitary_entry_density",
]

SLOPE_TOLERANCE = 0.3
MAX_EXPONENT = 3
MIN_POINTS = 4
MIN_COUNT = 50
# Kolmogorov critical value at the 1% level, large-sample form
KS_1PCT = 1.63


@dataclass
class DistributionCheckReport:
    """Outcome of one check.

    For slope checks ``statistic`` is the fitted slope and the check passes
    when it lies within ``threshold`` of ``target``; for KS checks it is the
    KS distance and must stay below ``threshold``.
    """

    check: str
    params: dict
    statistic: float
    threshold: float
    passed: bool
    samples: int
    target: Optional[float] = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def default_rho_list(exponent, trials, points=6, p_high=1e-2):
    """SNRs whose predicted tail probability spans ``p_high`` .. ``200/trials``."""
    p_low = 200.0 / trials
    if p_low >= p_high / 10:
        raise InfeasibleCheckError(
            f"{trials} trials cannot resolve a decade of tail probability; "
            "use more trials", "trials")
    lo, hi = p_high ** (-1.0 / exponent), p_low ** (-1.0 / exponent)
    return list(np.geomspace(lo, hi, points))


def _spectra(m, n, trials, seed, point_index=0):
    """Ascending Gram eigenvalues, ``(trials, n)``, drawn block by block."""
    out = np.empty((trials, n))
    for start in range(0, trials, BLOCK):
        cnt = min(BLOCK, trials - start)
        g = gram(draw_channels(m, n, seed, point_index, start, cnt))
        out[start:start + cnt] = np.linalg.eigvalsh(g)
    return np.maximum(out, 0.0)


def _check_trials(trials, minimum=1):
    if int(trials) != trials or trials < minimum:
        raise ConfigurationError(f"trials must be an integer >= {minimum}",
                                 "trials")
    return int(trials)


def _slope_report(name, params, counts, rhos, trials, target):
    pts = [OutageEstimate.from_counts(int(k), trials, 10 * math.log10(r))
           for k, r in zip(counts, rhos)]
    fit = fit_diversity(pts, (pts[0].snr_db, pts[-1].snr_db), min_pout=0.0,
                        min_count=MIN_COUNT)
    if fit.points_used < MIN_POINTS:
        from .errors import InsufficientDataError
        usable = [p for p in pts if p.outage_count >= MIN_COUNT]
        raise InsufficientDataError(
            f"{name}: need >= {MIN_POINTS} points with >= {MIN_COUNT} events, "
            f"got {fit.points_used}", usable)
    passed = abs(fit.slope - target) <= SLOPE_TOLERANCE
    details = {"stderr": fit.stderr, "rho": [float(r) for r in rhos],
               "counts": [int(k) for k in counts]}
    return DistributionCheckReport(name, params, fit.slope, SLOPE_TOLERANCE,
                                   bool(passed), trials, target, details)


def check_lemma1(m, n, s=1, rho_list=None, trials=10**7, seed=0):
    """Slope of ``P(exactly s eigenvalues below 1/rho)`` against ``rho``.

    The predicted exponent is ``s^2 + (M-N)s``.
    """
    check_dims(m, n)
    if not 1 <= s <= n:
        raise ConfigurationError(f"s must lie in [1, {n}], got {s}", "s")
    exponent = s * s + (m - n) * s
    if exponent > MAX_EXPONENT:
        raise InfeasibleCheckError(
            f"exponent {exponent} > {MAX_EXPONENT} needs tails beyond Monte "
            "Carlo reach; choose a smaller s or M-N", "s")
    trials = _check_trials(trials)
    rhos = list(rho_list) if rho_list is not None \
        else default_rho_list(exponent, trials)
    lam = _spectra(m, n, trials, seed)
    counts = [np.count_nonzero((lam < 1.0 / r).sum(axis=1) == s)
              for r in rhos]
    return _slope_report("lemma1", {"m": m, "n": n, "s": s, "seed": seed},
                         counts, rhos, trials, -float(exponent))


def check_lambda_min_tail(m, n, rho_list=None, trials=10**7, seed=0):
    """Slope of ``P(lambda_min <= 1/rho)``; predicted ``-(M-N+1)``."""
    check_dims(m, n)
    exponent = m - n + 1
    if exponent > MAX_EXPONENT:
        raise InfeasibleCheckError(
            f"M-N+1 = {exponent} > {MAX_EXPONENT} is beyond Monte Carlo reach",
            "m")
    trials = _check_trials(trials)
    rhos = list(rho_list) if rho_list is not None \
        else default_rho_list(exponent, trials)
    lmin = _spectra(m, n, trials, seed)[:, 0]
    counts = [np.count_nonzero(lmin <= 1.0 / r) for r in rhos]
    return _slope_report("lambda_min_tail", {"m": m, "n": n, "seed": seed},
                         counts, rhos, trials, -float(exponent))


def _ks_report(name, params, sample, cdf):
    res = stats.kstest(sample, cdf)
    threshold = KS_1PCT / math.sqrt(len(sample))
    return DistributionCheckReport(
        name, params, float(res.statistic), threshold,
        bool(res.statistic < threshold), len(sample),
        details={"pvalue": float(res.pvalue)})


def check_inverse_diag_chisquare(m, n, trials=10**7, seed=0, k=0):
    """KS test of ``1/[(H H^H)^-1]_kk`` against ``Gamma(M-N+1, 1)``."""
    check_dims(m, n)
    if not 0 <= k < n:
        raise ConfigurationError(f"row index k must lie in [0, {n})", "k")
    trials = _check_trials(trials, 10**5)
    z = np.empty(trials)
    for start in range(0, trials, BLOCK):
        cnt = min(BLOCK, trials - start)
        g = gram(draw_channels(m, n, seed, 0, start, cnt))
        z[start:start + cnt] = 1.0 / np.linalg.inv(g)[:, k, k].real
    dist = stats.gamma(a=m - n + 1, scale=1.0)
    return _ks_report("inverse_diag_chisquare",
                      {"m": m, "n": n, "k": k, "seed": seed}, z, dist.cdf)


def check_unitary_entry_density(n, trials=10**7, seed=0, k=0, column=0):
    """KS test of ``|U_kl|^2`` (square channel eigenbasis) against Beta(1, N-1)."""
    if int(n) != n or n < 2:
        raise ConfigurationError("n must be an integer >= 2", "n")
    if not (0 <= k < n and 0 <= column < n):
        raise ConfigurationError(f"indices must lie in [0, {n})", "k")
    trials = _check_trials(trials)
    q = np.empty(trials)
    for start in range(0, trials, BLOCK):
        cnt = min(BLOCK, trials - start)
        _, u = np.linalg.eigh(gram(draw_channels(n, n, seed, 0, start, cnt)))
        # eigh sorts ascending; column 0 of the descending basis is the last
        q[start:start + cnt] = np.abs(u[:, k, n - 1 - column]) ** 2
    dist = stats.beta(1, n - 1)
    return _ks_report("unitary_entry_density",
                      {"n": n, "k": k, "column": column, "seed": seed}, q,
                      dist.cdf)

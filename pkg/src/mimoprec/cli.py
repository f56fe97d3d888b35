"""Command-line experiment runner.

Subcommands
-----------
sweep     outage curves, one file per (precoder, rate) plus a manifest
slope     sweep, fit the high-SNR slope and compare with the prediction
validate  random-matrix distribution checks as JSON lines
theory    predicted diversity table as CSV
linksim   uncoded symbol-error curves

Exit codes: 0 ok, 1 a slope verdict failed, 2 configuration error,
3 numeric error, 4 insufficient data.
"""

import argparse
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import subprocess
import sys
import time
from dataclasses import dataclass
from typing import List, Optional

from . import __version__
from . import montecarlo as mc
from . import theory, validator
from .equalizers import EqualizerKind
from .errors import (ConfigurationError, DomainError, InsufficientDataError,
                     NumericError)
from .precoders import PrecoderKind
from .sinr import LinkConfig

log = logging.getLogger("mimoprec")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 1, 2, 3, 4

KNOWN_KEYS = {
    "m", "n", "precoder", "c", "equalizer", "rates", "snr_db", "trials",
    "seed", "output", "format", "window_db", "min_pout", "max_pout",
    "tolerance", "constellation", "checks", "s", "k",
}
CHECKS = ("lemma1", "lambda_min_tail", "inverse_diag_chisquare",
          "unitary_entry_density")
DEFAULT_CHECKS = ("lemma1", "inverse_diag_chisquare",
                  "unitary_entry_density")


@dataclass
class ExperimentConfig:
    """Validated contents of a flat JSON experiment file."""

    m: int
    n: int
    precoders: List[PrecoderKind]
    equalizer: EqualizerKind
    c: Optional[float]
    rates: List[float]
    snr_db: List[float]
    trials: int
    seed: int
    output: Optional[str]
    format: str
    window_db: Optional[tuple]
    min_pout: float
    max_pout: float
    tolerance: float
    constellation: str
    raw: dict

    def link(self, precoder, rate=0.0, snr_db=0.0):
        return LinkConfig(self.m, self.n, mc.db_to_linear(snr_db), rate,
                          precoder, self.equalizer, self.c)


def _fail(msg, field):
    raise ConfigurationError(f"{field}: {msg}", field)


def _int(raw, key, default=None, minimum=None):
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            _fail(f"expected an integer, got {v!r}", key)
    if minimum is not None and v < minimum:
        _fail(f"must be >= {minimum}, got {v}", key)
    return v


def _float(raw, key, default=None, lo=None, hi=None):
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) \
            or not math.isfinite(v):
        _fail(f"expected a finite number, got {v!r}", key)
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        _fail(f"must lie in [{lo}, {hi}], got {v}", key)
    return float(v)


def snr_grid(grid):
    """Expand ``{start, stop, step}`` (dB, stop inclusive) into a list."""
    if not isinstance(grid, dict) or set(grid) != {"start", "stop", "step"}:
        _fail("expected an object with exactly start, stop, step", "snr_db")
    start = _float(grid, "start")
    stop = _float(grid, "stop")
    step = _float(grid, "step")
    if step <= 0:
        _fail("step must be positive", "snr_db")
    if stop < start:
        _fail("stop must be >= start", "snr_db")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def parse_config(raw, need_window=False):
    """Validate a config dict against every downstream precondition."""
    if not isinstance(raw, dict):
        _fail("top level must be a JSON object", "config")
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        _fail(f"unknown keys {unknown}", unknown[0])
    for k, v in raw.items():
        if isinstance(v, dict) and k != "snr_db":
            _fail("nested objects are only allowed for snr_db", k)
    for key in ("m", "n", "precoder", "rates", "snr_db", "trials", "seed"):
        if key not in raw:
            _fail("required field is missing", key)
    m = _int(raw, "m", minimum=1)
    n = _int(raw, "n", minimum=1)
    if m < n:
        _fail(f"need m >= n (got m={m}, n={n})", "m")
    names = raw["precoder"]
    names = [names] if isinstance(names, str) else names
    if not isinstance(names, list) or not names:
        _fail("expected a name or a non-empty list of names", "precoder")
    try:
        precoders = [PrecoderKind(p) for p in names]
    except ValueError:
        _fail(f"unknown precoder in {names}; choose from "
              f"{[p.value for p in PrecoderKind]}", "precoder")
    if len(set(precoders)) != len(precoders):
        _fail("duplicate precoder", "precoder")
    try:
        equalizer = EqualizerKind(raw.get("equalizer", "none"))
    except ValueError:
        _fail(f"unknown equalizer {raw.get('equalizer')!r}; choose from "
              f"{[e.value for e in EqualizerKind]}", "equalizer")
    if equalizer is not EqualizerKind.NONE and any(p.is_zf
                                                   for p in precoders):
        _fail("ZF precoders cannot be combined with an equalizer",
              "equalizer")
    c = raw.get("c")
    if c is not None:
        c = _float(raw, "c")
        if c <= 0:
            _fail("RZF regularization must be positive", "c")
    rates = raw["rates"]
    if not isinstance(rates, list) or not rates:
        _fail("expected a non-empty list of rates", "rates")
    rates = [_float({"rates": r}, "rates", lo=0.0) for r in rates]
    if len(set(rates)) != len(rates):
        _fail("duplicate rate", "rates")
    snrs = snr_grid(raw["snr_db"])
    trials = _int(raw, "trials", minimum=1)
    seed = _int(raw, "seed", minimum=0)
    if seed >= 2 ** 64:
        _fail("seed must fit in 64 bits", "seed")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        _fail("expected a directory path", "output")
    fmt = raw.get("format", "csv")
    if fmt not in ("csv", "json"):
        _fail("format must be csv or json", "format")
    window = raw.get("window_db")
    if window is not None:
        if not isinstance(window, list) or len(window) != 2:
            _fail("expected [lo, hi]", "window_db")
        window = tuple(_float({"window_db": w}, "window_db") for w in window)
        if window[0] > window[1]:
            _fail("need lo <= hi", "window_db")
    elif need_window:
        _fail("a fit window [lo, hi] in dB is required", "window_db")
    min_pout = _float(raw, "min_pout", 0.0, 0.0, 1.0)
    max_pout = _float(raw, "max_pout", 1.0, 0.0, 1.0)
    if min_pout > max_pout:
        _fail("min_pout must not exceed max_pout", "min_pout")
    tolerance = _float(raw, "tolerance", 0.3, 0.0)
    constellation = raw.get("constellation", "QPSK")
    if constellation not in mc.CONSTELLATIONS:
        _fail(f"choose from {sorted(mc.CONSTELLATIONS)}", "constellation")
    cfg = ExperimentConfig(m, n, precoders, equalizer, c, rates, snrs,
                           trials, seed, output, fmt, window, min_pout,
                           max_pout, tolerance, constellation, raw)
    for p in precoders:
        cfg.link(p, rates[0])  # runs LinkConfig's own checks
    return cfg


def load_config(path, need_window=False):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}", "config")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", "config")
    return parse_config(raw, need_window)


# -- outputs ------------------------------------------------------------------

def _git_describe():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             cwd=here, capture_output=True, text=True,
                             timeout=10)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 else "unknown"


def _file_name(cfg, precoder, rate, stem="outage"):
    eq = "" if cfg.equalizer is EqualizerKind.NONE \
        else f"_{cfg.equalizer.value}eq"
    return f"{stem}_{precoder.value}{eq}_R{rate:g}.{cfg.format}"


def _render(points, fmt):
    if fmt == "csv":
        return mc.csv_text(points)
    rows = [{"snr_db": p.snr_db, "trials": p.trials,
             "outages": p.outage_count, "p_hat": p.p_hat,
             "ci_low": p.ci_low, "ci_high": p.ci_high,
             "singular_draws": p.singular_draws} for p in points]
    return json.dumps(rows, indent=1) + "\n"


def _prepare_output(cfg):
    if cfg.output is None:
        _fail("an output directory is required", "output")
    try:
        os.makedirs(cfg.output, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"output: cannot create directory: {exc}",
                                 "output")
    if not os.access(cfg.output, os.W_OK):
        _fail("directory is not writable", "output")


def _write_manifest(cfg, command, started, t0, outputs):
    canon = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    manifest = {
        "command": command,
        "config": cfg.raw,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": cfg.seed,
        "git_describe": _git_describe(),
        "version": __version__,
        "started_at": started,
        "elapsed_s": round(time.time() - t0, 3),
        "outputs": outputs,
    }
    path = os.path.join(cfg.output, f"manifest_{command}.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# -- subcommands --------------------------------------------------------------

def _sweep_all(cfg, workers):
    """``{(precoder, rate): [OutageEstimate]}`` over the configured grid."""
    out = {}
    for p in cfg.precoders:
        curves = mc.sweep_rates(cfg.link(p), cfg.rates, cfg.snr_db,
                                cfg.trials, cfg.seed, workers=workers)
        for r in cfg.rates:
            out[(p, r)] = curves[r]
    return out


def cmd_sweep(args):
    cfg = load_config(args.config)
    _prepare_output(cfg)
    started, t0 = _now(), time.time()
    outputs = []
    for (p, r), pts in _sweep_all(cfg, args.workers).items():
        name = _file_name(cfg, p, r)
        with open(os.path.join(cfg.output, name), "w", newline="") as fh:
            fh.write(_render(pts, cfg.format))
        outputs.append(name)
        print(name)
    _write_manifest(cfg, "sweep", started, t0, outputs)
    return EXIT_OK


def cmd_slope(args):
    cfg = load_config(args.config, need_window=True)
    started, t0 = _now(), time.time()
    records, verdict = [], EXIT_OK
    for (p, r), pts in _sweep_all(cfg, args.workers).items():
        fit = mc.fit_diversity(pts, cfg.window_db, cfg.min_pout,
                               cfg.max_pout)
        pred = theory.predicted_diversity(cfg.m, cfg.n, r, p, cfg.equalizer)
        ok = abs(fit.diversity - pred.value) <= cfg.tolerance
        verdict = verdict if ok else EXIT_FAIL
        rec = {"precoder": p.value, "equalizer": cfg.equalizer.value,
               "m": cfg.m, "n": cfg.n, "rate": r, "slope": fit.slope,
               "stderr": fit.stderr, "intercept": fit.intercept,
               "window_db": list(fit.window_db),
               "points_used": fit.points_used, "predicted": pred.value,
               "regime_note": pred.regime_note, "tolerance": cfg.tolerance,
               "verdict": "PASS" if ok else "FAIL"}
        records.append(rec)
        print(f"{p.value:>18} eq={cfg.equalizer.value:<4} R={r:<5g} "
              f"slope={fit.slope:+.3f} (se {fit.stderr:.3f}) "
              f"predicted={0.0 - pred.value:+.3f} {rec['verdict']}")
    if cfg.output is not None:
        _prepare_output(cfg)
        name = "slope.json"
        with open(os.path.join(cfg.output, name), "w") as fh:
            json.dump(records, fh, indent=2)
            fh.write("\n")
        _write_manifest(cfg, "slope", started, t0, [name])
    return verdict


def cmd_validate(args):
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config: {exc}", "config")
        if not isinstance(raw, dict):
            _fail("top level must be a JSON object", "config")
    checks = raw.get("checks", list(DEFAULT_CHECKS))
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        _fail(f"choose checks from {list(CHECKS)}", "checks")
    m = _int(raw, "m", 2, 1)
    n = _int(raw, "n", 2, 1)
    trials = _int(raw, "trials", args.trials or 10 ** 6, 1)
    seed = _int(raw, "seed", 0, 0)
    k = _int(raw, "k", 0, 0)
    s = _int(raw, "s", 1, 1)
    # fail fast: infeasible or invalid requests before any sampling
    if "lemma1" in checks and s * s + (m - n) * s > validator.MAX_EXPONENT:
        validator.check_lemma1(m, n, s, trials=trials, seed=seed)
    all_passed = True
    for name in checks:
        if name == "lemma1":
            rep = validator.check_lemma1(m, n, s, trials=trials, seed=seed)
        elif name == "lambda_min_tail":
            rep = validator.check_lambda_min_tail(m, n, trials=trials,
                                                  seed=seed)
        elif name == "inverse_diag_chisquare":
            rep = validator.check_inverse_diag_chisquare(
                m, n, trials=max(trials, 10 ** 5), seed=seed, k=min(k, n - 1))
        else:
            rep = validator.check_unitary_entry_density(
                max(n, 2), trials=trials, seed=seed, k=min(k, max(n, 2) - 1))
        all_passed &= rep.passed
        print(rep.to_json(), flush=True)
    return EXIT_OK if all_passed else EXIT_FAIL


def cmd_theory(args):
    rates = args.rates or [0.5, 1.5, 1.9, 2.5, 3.0, 4.0, 5.0]
    text = theory.diversity_table(theory.default_grid(args.max_n, rates))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_linksim(args):
    cfg = load_config(args.config)
    _prepare_output(cfg)
    started, t0 = _now(), time.time()
    outputs = []
    for p in cfg.precoders:
        pts = mc.ser_sweep(cfg.link(p), cfg.constellation, cfg.snr_db,
                           cfg.trials, cfg.seed, workers=args.workers)
        name = _file_name(cfg, p, 0, stem=f"ser_{cfg.constellation}"
                          ).replace("_R0", "")
        with open(os.path.join(cfg.output, name), "w", newline="") as fh:
            fh.write(_render(pts, cfg.format))
        outputs.append(name)
        print(name)
    _write_manifest(cfg, "linksim", started, t0, outputs)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="mimoprec",
        description="Outage and diversity experiments for linearly "
                    "precoded MIMO links.")
    ap.add_argument("--version", action="version",
                    version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true",
                    help="log per-point progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_workers(p):
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes (results do not depend on it)")
        return p

    p = with_workers(sub.add_parser("sweep", help="outage curves to files"))
    p.add_argument("config", help="flat JSON experiment file")
    p.set_defaults(func=cmd_sweep)

    p = with_workers(sub.add_parser(
        "slope", help="fit diversity slopes and compare with theory"))
    p.add_argument("config", help="experiment file with window_db")
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("validate", help="random-matrix distribution checks")
    p.add_argument("config", nargs="?", help="optional JSON with checks, m, "
                   "n, s, k, trials, seed")
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("theory", help="predicted diversity table (CSV)")
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--rates", type=float, nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_theory)

    p = with_workers(sub.add_parser("linksim",
                                    help="uncoded symbol-error curves"))
    p.add_argument("config", help="experiment file (constellation key)")
    p.set_defaults(func=cmd_linksim)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else
                        logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("error: workers: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        field = getattr(exc, "field", None)
        print(f"configuration error [{field or 'value'}]: {exc}",
              file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

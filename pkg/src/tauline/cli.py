"""Command-line front end: ``tauline analyze|reconstruct|simulate|phtest``.

Exit codes: 0 success, 2 invalid input or configuration, 3 a requested
quantity is not computable on the data.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data import CsvSchema, read_csv_text, split_by_arm, write_csv
from .errors import (ComputationError, TooFewEvents, TooManyFailedResamples,
                     ValidationError)
from .inference import (DEFAULT_RESAMPLES, Estimand, InferenceResult, bootstrap,
                        bootstrap_curve)
from .km import DEFAULT_MATURITY_THRESHOLD, fit_km, maturity_check
from .milestone import classify_milestone, summarize_milestone
from .phdiag import fit_cox_two_group, schoenfeld_ph_test
from .reconstruct import DigitizedCurve, reconstruct_arm
from .rmst import drmst_process, susceptible_drmst
from .scenarios import Scenario, simulate, truth
from .tau import susceptible_tau, tau_process, tau_slope, turning_time

REPORT_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    input: str
    output: str | None
    milestone: float | None
    reference_arm: str | None = None
    n_resamples: int = DEFAULT_RESAMPLES
    seed: int = 0
    level: float = 0.95
    bandwidth: float | None = None
    maturity_threshold: float = DEFAULT_MATURITY_THRESHOLD
    fmt: str = "json"
    overall_only: bool = False
    grid_points: int = 25
    endpoint: str = ""

    def __post_init__(self):
        if self.n_resamples < 100:
            raise ConfigError("--bootstrap must be at least 100")
        if not 0 < self.level < 1:
            raise ConfigError("--level must lie in (0, 1)")
        if self.milestone is not None and self.milestone <= 0:
            raise ConfigError("--milestone must be positive")
        if self.milestone is None and not self.overall_only:
            raise ConfigError("--milestone is required for milestone and susceptible "
                              "outputs (or pass --overall-only)")
        if not 0 < self.maturity_threshold < 1:
            raise ConfigError("--maturity-threshold must lie in (0, 1)")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ConfigError("--bandwidth must be positive")
        if self.grid_points < 2:
            raise ConfigError("--grid-points must be at least 2")
        if self.fmt not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")


# ---------------------------------------------------------------- serialisation

def _f(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _step_json(f):
    return {"times": [float(t) for t in f.jump_times],
            "values": [float(v) for v in f.values], "initial": float(f.initial_value)}


def _pl_json(f):
    return {"knots": [float(t) for t in f.knots], "values": [float(v) for v in f.values]}


def _inference_json(r: InferenceResult):
    return {"estimate": r.point, "ci_low": r.ci_low, "ci_high": r.ci_high,
            "p_value": r.p_value, "level": r.level, "n_resamples": r.n_resamples,
            "n_failed": r.n_failed, "seed": r.seed, "point_outside_ci": r.point_outside_ci}


def _band_json(b):
    return {"grid": b.grid.tolist(), "estimate": b.point.tolist(), "lower": b.lower.tolist(),
            "upper": b.upper.tolist(), "level": b.level, "n_resamples": b.n_resamples,
            "n_failed": b.n_failed, "seed": b.seed}


def _guarded(fn):
    """Run a bootstrap; a resampling breakdown is reported inline, not fatal."""
    try:
        return fn(), None
    except TooManyFailedResamples as exc:
        return None, str(exc)


# ---------------------------------------------------------------- analyze

def run_analysis(cfg: AnalysisConfig, text: str) -> dict:
    ds = read_csv_text(text, CsvSchema(reference=cfg.reference_arm), cfg.endpoint)
    views = split_by_arm(ds)
    curves = {k: fit_km(v) for k, v in views.items()}
    labels = ds.arm_labels
    m = None if cfg.overall_only else cfg.milestone
    boot = dict(n_resamples=cfg.n_resamples, level=cfg.level, seed=cfg.seed)

    arms = []
    for k, c in curves.items():
        entry = {"id": k, "label": labels[k], "n": c.n, "events": c.n_events,
                 "max_observed": c.max_observed, "last_is_event": c.last_is_event,
                 "km": _step_json(c.survival)}
        if m is not None:
            rep = maturity_check(views[k], m, cfg.maturity_threshold)
            entry["maturity"] = {"t": rep.t, "n_at_risk": rep.n_at_risk,
                                 "fraction_at_risk": rep.fraction_at_risk,
                                 "threshold": rep.threshold, "flag": rep.flag}
        arms.append(entry)

    milestone = None
    if m is not None:
        ms = summarize_milestone(curves, m)
        ind = classify_milestone(ds, m)
        failed = ind.failed_fraction_by_arm(ds.arm)
        contrasts = []
        for k in ms.contrasts:
            res, err = _guarded(lambda: bootstrap(
                ds, Estimand("milestone_contrast", m=m, arm_pair=(k, 0)), **boot))
            contrasts.append({"arm": labels[k], "reference": labels[0],
                              "estimate": ms.contrasts[k],
                              "inference": _inference_json(res) if res else None,
                              "inference_error": err})
        milestone = {
            "m": m,
            "eta": {labels[k]: v for k, v in ms.eta.items()},
            "susceptible_fraction": {labels[k]: v for k, v in ms.susceptible_fraction.items()},
            "failed_fraction_among_determined": {labels[k]: v for k, v in failed.items()},
            "n_undetermined": {labels[k]: int(np.sum((ind.xi < 0) & (ds.arm == k)))
                               for k in curves},
            "contrasts": contrasts,
            "susceptible_curves": {labels[k]: (_step_json(s) if s is not None else None)
                                   for k, s in ms.susceptible_curves.items()},
        }

    comparisons = []
    for k in curves:
        if k == 0:
            continue
        c1, c0 = curves[k], curves[0]
        t_end = min(c1.max_observed, c0.max_observed)
        grid = np.linspace(0.0, t_end, cfg.grid_points)
        pair = (k, 0)
        tc = tau_process(c1, c0, t_end, arm_pair=pair)
        h = cfg.bandwidth if cfg.bandwidth is not None else t_end / 10.0
        slope = tau_slope(tc, h)
        tp = turning_time(tc, h) if len(tc.jump_times) >= 2 else None
        tau_inf, tau_err = _guarded(lambda: bootstrap(
            ds, Estimand("tau_at", t=t_end, arm_pair=pair), **boot))
        tau_band, tau_band_err = _guarded(lambda: bootstrap_curve(
            ds, "tau", grid, pair, **boot))
        dc = drmst_process(c1, c0, t_end, arm_pair=pair)
        d_inf, d_err = _guarded(lambda: bootstrap(
            ds, Estimand("drmst_at", t=t_end, arm_pair=pair), **boot))
        d_band, d_band_err = _guarded(lambda: bootstrap_curve(
            ds, "drmst", grid, pair, **boot))
        comp = {
            "arm": labels[k], "reference": labels[0], "t_end": t_end,
            "tau": {"curve": _step_json(tc.process),
                    "slope": {"bandwidth": h, **_step_json(slope)},
                    "turning_point": None if tp is None else {
                        "time": tp.time, "direction": tp.direction, "tau_value": tp.tau_value,
                        "flat": tp.flat, "slope_crossing": tp.slope_crossing},
                    "at_t_end": _inference_json(tau_inf) if tau_inf else None,
                    "at_t_end_error": tau_err,
                    "band": _band_json(tau_band) if tau_band else None,
                    "band_error": tau_band_err},
            "drmst": {"curve": _pl_json(dc.process),
                      "at_t_end": _inference_json(d_inf) if d_inf else None,
                      "at_t_end_error": d_err,
                      "band": _band_json(d_band) if d_band else None,
                      "band_error": d_band_err},
            "susceptible_tau": None,
            "susceptible_drmst": None,
        }
        if m is not None:
            # raises NoEventsBeforeMilestone / MilestoneBeyondFollowUp -> exit 3
            stc = susceptible_tau(c1, c0, m, arm_pair=pair)
            sgrid = np.linspace(0.0, m, cfg.grid_points)
            sh = cfg.bandwidth if cfg.bandwidth is not None else m / 10.0
            stp = turning_time(stc, sh) if len(stc.jump_times) >= 2 else None
            s_inf, s_err = _guarded(lambda: bootstrap(
                ds, Estimand("susceptible_tau_at", t=m, m=m, arm_pair=pair), **boot))
            s_band, s_band_err = _guarded(lambda: bootstrap_curve(
                ds, "susceptible_tau", sgrid, pair, m=m, **boot))
            comp["susceptible_tau"] = {
                "milestone": m, "curve": _step_json(stc.process),
                "slope": {"bandwidth": sh, **_step_json(tau_slope(stc, sh))},
                "turning_point": None if stp is None else {
                    "time": stp.time, "direction": stp.direction, "tau_value": stp.tau_value,
                    "flat": stp.flat, "slope_crossing": stp.slope_crossing},
                "at_milestone": _inference_json(s_inf) if s_inf else None,
                "at_milestone_error": s_err,
                "band": _band_json(s_band) if s_band else None,
                "band_error": s_band_err}
            sdc = susceptible_drmst(c1, c0, m, arm_pair=pair)
            comp["susceptible_drmst"] = {"milestone": m, "curve": _pl_json(sdc.process)}
        comparisons.append(comp)

    return {
        "report_version": REPORT_VERSION,
        "provenance": {
            "toolkit_version": __version__,
            "input_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            "endpoint": cfg.endpoint,
            "seed": cfg.seed, "bootstrap_resamples": cfg.n_resamples, "level": cfg.level,
            "bandwidth": cfg.bandwidth if cfg.bandwidth is not None else "domain/10",
            "maturity_threshold": cfg.maturity_threshold, "milestone": m,
            "overall_only": cfg.overall_only,
            "reference_arm": labels[0], "grid_points": cfg.grid_points,
            "ci_method": "percentile", "resampling": "stratified by arm",
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        },
        "arms": arms,
        "milestone": milestone,
        "comparisons": comparisons,
    }


def report_to_csv(report: dict) -> str:
    """Flat table of every scalar estimate with its interval."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["estimand", "arm", "reference", "t", "estimate", "ci_low", "ci_high",
                "p_value", "n_resamples", "n_failed", "seed"])

    def row(name, arm, ref, t, est, inf):
        inf = inf or {}
        w.writerow([name, arm, ref, t, est, inf.get("ci_low"), inf.get("ci_high"),
                    inf.get("p_value"), inf.get("n_resamples"), inf.get("n_failed"),
                    inf.get("seed")])

    if report["milestone"]:
        for c in report["milestone"]["contrasts"]:
            row("milestone_contrast", c["arm"], c["reference"], report["milestone"]["m"],
                c["estimate"], c["inference"])
    for c in report["comparisons"]:
        t = c["tau"]["curve"]
        row("tau_at", c["arm"], c["reference"], c["t_end"],
            t["values"][-1] if t["values"] else 0.0, c["tau"]["at_t_end"])
        d = c["drmst"]["curve"]
        row("drmst_at", c["arm"], c["reference"], c["t_end"], d["values"][-1],
            c["drmst"]["at_t_end"])
        if c["susceptible_tau"]:
            s = c["susceptible_tau"]
            row("susceptible_tau_at", c["arm"], c["reference"], s["milestone"],
                s["curve"]["values"][-1] if s["curve"]["values"] else 0.0, s["at_milestone"])
    return buf.getvalue()


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("TAULINE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"TAULINE_SEED={env!r} is not an integer") from None


def _read_input(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def cmd_analyze(args) -> int:
    cfg = AnalysisConfig(input=args.input, output=args.output, milestone=args.milestone,
                         reference_arm=args.reference_arm, n_resamples=args.bootstrap,
                         seed=_resolve_seed(args.seed), level=args.level,
                         bandwidth=args.bandwidth, maturity_threshold=args.maturity_threshold,
                         fmt=args.format, overall_only=args.overall_only,
                         grid_points=args.grid_points, endpoint=args.endpoint)
    report = run_analysis(cfg, _read_input(cfg.input))
    _write(cfg.output, dump_json(report) if cfg.fmt == "json" else report_to_csv(report))
    return EXIT_OK


# ---------------------------------------------------------------- reconstruct

def cmd_reconstruct(args) -> int:
    try:
        doc = json.loads(_read_input(args.input))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.input}: invalid JSON ({exc.msg})") from None
    docs = doc if isinstance(doc, list) else [doc]
    times, events, arms, diags = [], [], [], {}
    labels = []
    for d in docs:
        dc = DigitizedCurve.from_json(d)
        if dc.arm in labels:
            raise ConfigError(f"arm {dc.arm!r} appears twice")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ipd = reconstruct_arm(dc)
        for w in caught:
            print(f"warning: arm {dc.arm}: {w.message}", file=sys.stderr)
        labels.append(dc.arm)
        times.append(ipd.times)
        events.append(ipd.events)
        arms.append(np.full(ipd.n, len(labels) - 1))
        diags[dc.arm] = ipd.diagnostics.to_json()
    from .data import SurvivalDataset
    ds = SurvivalDataset(np.concatenate(times), np.concatenate(events), np.concatenate(arms),
                         arm_labels=labels)
    _write(args.output, write_csv(ds))
    diag_doc = {"report_version": REPORT_VERSION, "toolkit_version": __version__,
                "arms": diags}
    if args.output and args.output != "-":
        _write(str(Path(args.output).with_suffix("")) + ".diagnostics.json", dump_json(diag_doc))
    else:
        sys.stderr.write(dump_json(diag_doc))
    return EXIT_OK


# ---------------------------------------------------------------- simulate

SCENARIO_KEYS = {"kind", "n_per_arm", "rates", "breaks", "cure_fractions", "changepoint",
                 "hr_before", "hr_after", "admin_censor_time", "accrual_window", "seed"}


def scenario_from_json(doc: dict) -> tuple[Scenario, float | None, list]:
    """Build a :class:`Scenario`; ``milestone`` and ``truth_times`` keys drive the truth sheet."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario JSON must be an object")
    extra = set(doc) - SCENARIO_KEYS - {"milestone", "truth_times"}
    if extra:
        raise ConfigError(f"unknown scenario keys: {sorted(extra)}")
    kw = {k: doc[k] for k in SCENARIO_KEYS & set(doc)}
    if kw.get("admin_censor_time") is None:
        kw.pop("admin_censor_time", None)
    for key in ("n_per_arm", "breaks", "cure_fractions"):
        if kw.get(key) is not None:
            kw[key] = tuple(kw[key])
    if "rates" in kw:
        kw["rates"] = tuple(tuple(np.atleast_1d(r).tolist()) for r in kw["rates"])
    try:
        sc = Scenario(**kw)
    except TypeError as exc:
        raise ConfigError(f"scenario: {exc}") from None
    return sc, doc.get("milestone"), list(doc.get("truth_times", []))


def cmd_simulate(args) -> int:
    try:
        doc = json.loads(_read_input(args.input))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.input}: invalid JSON ({exc.msg})") from None
    if args.seed is not None or "TAULINE_SEED" in os.environ:
        if isinstance(doc, dict) and (args.seed is not None or "seed" not in doc):
            doc = {**doc, "seed": _resolve_seed(args.seed)}
    sc, m, grid = scenario_from_json(doc)
    ds = simulate(sc)
    _write(args.output, write_csv(ds))
    ts = truth(sc, m, grid)
    truth_doc = {"report_version": REPORT_VERSION, "toolkit_version": __version__,
                 "seed": sc.seed, "milestone": m,
                 "true_eta": {str(k): v for k, v in ts.true_eta.items()},
                 "t_grid": ts.t_grid.tolist(),
                 "true_tau": {str(k): v.tolist() for k, v in ts.true_tau.items()},
                 "true_hazard_crossing": ts.true_hazard_crossing}
    if args.output and args.output != "-":
        _write(str(Path(args.output).with_suffix("")) + ".truth.json", dump_json(truth_doc))
    return EXIT_OK


# ---------------------------------------------------------------- phtest

def cmd_phtest(args) -> int:
    ds = read_csv_text(_read_input(args.input), CsvSchema(reference=args.reference_arm))
    labels = ds.arm_labels
    if args.arm is not None:
        if args.arm not in labels or labels.index(args.arm) == 0:
            raise ConfigError(f"--arm {args.arm!r} is not a non-reference arm")
        targets = [labels.index(args.arm)]
    else:
        targets = [k for k in ds.arms if k != 0]
    out = []
    for k in targets:
        pair = (k, 0)
        n_ev = int(ds.event[np.isin(ds.arm, pair)].sum())
        if n_ev < 3:
            raise TooFewEvents(f"arms {labels[k]} vs {labels[0]}: {n_ev} events; need at least 3")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fit = fit_cox_two_group(ds, pair)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        entry = {"arm": labels[k], "reference": labels[0], "beta": fit.beta,
                 "hazard_ratio": fit.hazard_ratio, "loglik": fit.loglik, "score": fit.score,
                 "iterations": fit.iterations, "converged": fit.converged,
                 "monotone": fit.monotone, "ties": "breslow"}
        if fit.converged:
            ph = schoenfeld_ph_test(ds, fit, args.time_transform)
            entry.update({"time_transform": ph.time_transform, "statistic": ph.statistic,
                          "p_value": ph.p_value,
                          "residuals": [[t, r] for t, r in ph.residual_pairs]})
        else:
            entry.update({"time_transform": args.time_transform, "statistic": None,
                          "p_value": None, "residuals": []})
        out.append(entry)
    _write(args.output, dump_json({"report_version": REPORT_VERSION,
                                   "toolkit_version": __version__, "comparisons": out}))
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tauline", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tauline {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="milestone, tau and dRMST analysis of a trial CSV")
    a.add_argument("--input", required=True, help="trial CSV (time, event, arm)")
    a.add_argument("--output", default="-", help="report path, - for stdout")
    a.add_argument("--milestone", type=float, help="milestone time m")
    a.add_argument("--reference-arm", help="label of the control arm")
    a.add_argument("--bootstrap", type=int, default=DEFAULT_RESAMPLES,
                   help="number of bootstrap resamples")
    a.add_argument("--seed", type=int, help="bootstrap seed (default: $TAULINE_SEED or 0)")
    a.add_argument("--level", type=float, default=0.95, help="confidence level")
    a.add_argument("--bandwidth", type=float, help="tau slope bandwidth (default: domain/10)")
    a.add_argument("--maturity-threshold", type=float, default=DEFAULT_MATURITY_THRESHOLD)
    a.add_argument("--format", default="json", choices=["json", "csv"])
    a.add_argument("--grid-points", type=int, default=25, help="points in each curve band")
    a.add_argument("--endpoint", default="", help="endpoint name echoed in provenance")
    a.add_argument("--overall-only", action="store_true",
                   help="skip milestone and susceptible outputs")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("reconstruct", help="pseudo-IPD from digitised KM coordinates")
    r.add_argument("--input", required=True, help="digitised curve JSON (object or list)")
    r.add_argument("--output", default="-")
    r.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("simulate", help="simulate a trial from a scenario JSON")
    s.add_argument("--input", required=True, help="scenario JSON")
    s.add_argument("--output", default="-")
    s.add_argument("--seed", type=int, help="overrides the scenario seed")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("phtest", help="Cox fit and Schoenfeld-residual PH test")
    t.add_argument("--input", required=True, help="trial CSV (time, event, arm)")
    t.add_argument("--output", default="-")
    t.add_argument("--reference-arm")
    t.add_argument("--arm", help="treated arm when there are more than two")
    t.add_argument("--time-transform", default="identity", choices=["identity", "km"])
    t.set_defaults(func=cmd_phtest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComputationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except Exception as exc:  # never let a traceback escape to the shell
        print(f"error: internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance criteria; each test logs one PASS/FAIL line (shown in the terminal summary)."""
import json
import math
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from conftest import km
from oracles import grid_search_beta
from tauline import (ArmView, Estimand, Scenario, SurvivalDataset, bootstrap, digitize_km,
                     drmst_process, fit_cox_two_group, fit_km, milestone_contrast,
                     milestone_survival, milestone_sweep, pairwise_tau_oracle, reconstruct_arm,
                     rmst, schoenfeld_ph_test, simulate, split_by_arm, susceptible_survival,
                     susceptible_tau, tau_process, truth, turning_time)
from tauline import errors
from tauline.cli import main

pytestmark = pytest.mark.acceptance


def _random_scenario(rng, n_max=200):
    kind = rng.choice(["exponential", "piecewise_exponential", "cure_mixture"])
    n = tuple(int(x) for x in rng.integers(5, n_max, 2))
    if kind == "piecewise_exponential":
        rates = tuple(tuple(rng.uniform(0.02, 0.3, 2)) for _ in range(2))
        return Scenario(kind, n, rates, breaks=(float(rng.uniform(3, 15)),),
                        admin_censor_time=float(rng.uniform(10, 60)),
                        accrual_window=float(rng.uniform(0, 9)), seed=int(rng.integers(1 << 30)))
    rates = tuple((float(r),) for r in rng.uniform(0.02, 0.3, 2))
    cure = tuple(rng.uniform(0, 0.5, 2)) if kind == "cure_mixture" else None
    return Scenario(kind, n, rates, cure_fractions=cure,
                    admin_censor_time=float(rng.uniform(10, 60)),
                    accrual_window=float(rng.uniform(0, 9)), seed=int(rng.integers(1 << 30)))


def test_01_decomposition_identity(acceptance):
    rng = np.random.default_rng(101)
    start, worst, used = time.perf_counter(), 0.0, 0
    while used < 1000:
        ds = simulate(_random_scenario(rng))
        for v in split_by_arm(ds).values():
            c = fit_km(v)
            m = float(rng.uniform(0, c.max_observed))
            eta = milestone_survival(c, m)
            if not 0 < eta < 1:
                continue
            sa = susceptible_survival(c, m)
            jt = c.survival.jump_times
            grid = np.unique(np.r_[0.0, jt[jt <= m], np.linspace(0, m, 50), m])
            worst = max(worst, float(np.max(np.abs(c(grid) - (sa(grid) * (1 - eta) + eta)))))
            used += 1
    elapsed = time.perf_counter() - start
    acceptance(1, "decomposition identity", worst <= 1e-12 and elapsed < 60,
               f"{used} curves, max error {worst:.2e} (<= 1e-12), {elapsed:.1f}s")


def test_02_tau_oracle_equivalence(acceptance):
    rng = np.random.default_rng(202)
    start, worst, sus_exact = time.perf_counter(), 0.0, True
    for i in range(1000):
        n0, n1 = rng.integers(1, 31, 2)
        ties = i % 2 == 0
        draw = (lambda n: rng.integers(1, 20, n).astype(float)) if ties else \
               (lambda n: rng.exponential(5.0, n))
        t0, t1 = draw(n0), draw(n1)
        v0 = ArmView.from_unsorted(t0, np.ones(n0, int))
        v1 = ArmView.from_unsorted(t1, np.ones(n1, int))
        c0, c1 = fit_km(v0), fit_km(v1)
        tc = tau_process(c1, c0)
        for t in tc.jump_times:
            worst = max(worst, abs(tc(t) - pairwise_tau_oracle(v0, v1, t)))
        # no long-term mass once m reaches the largest time
        m = float(max(t0.max(), t1.max()))
        full = tau_process(c1, c0, m, extend=True)
        sus = susceptible_tau(c1, c0, m, extend=True)
        sus_exact &= (np.array_equal(full.jump_times, sus.jump_times)
                      and np.array_equal(full.values, sus.values))
    elapsed = time.perf_counter() - start
    acceptance(2, "tau oracle equivalence", worst <= 1e-12 and sus_exact and elapsed < 60,
               f"max |plug-in - pairwise| {worst:.2e} (<= 1e-12), susceptible reduction exact="
               f"{sus_exact}, {elapsed:.1f}s")


def test_03_published_contrast_arithmetic(acceptance):
    a = milestone_contrast(0.375, 0.062)
    b = milestone_contrast(0.413, 0.223)
    c = milestone_contrast(0.446, 0.208)
    ok = (abs(a - 0.313) <= 5e-4 and abs(b - 0.190) <= 5e-4
          and 0.238 - 1e-3 <= c <= 0.239 + 1e-3)
    acceptance(3, "published contrast arithmetic", ok, f"{a:.4f}, {b:.4f}, {c:.4f}")


def test_04_milestone_monotonicity(acceptance):
    rng = np.random.default_rng(404)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        t = rng.exponential(10, n) if rng.random() < 0.5 else rng.integers(1, 10, n).astype(float)
        c = km(t, (rng.random(n) < 0.7).astype(int))
        grid = np.sort(rng.uniform(0, c.max_observed, 40))
        vals = np.array([v for _, v in milestone_sweep(c, grid)])
        bad += int(np.any(np.diff(vals) > 0))
    acceptance(4, "milestone monotonicity", bad == 0, f"{bad} of 1000 curves violate (exact)")


def test_05_tau_mass_bound(acceptance):
    rng = np.random.default_rng(505)
    bad, worst = 0, -np.inf
    for i in range(1000):
        n0, n1 = rng.integers(1, 60, 2)
        ties = i % 2 == 0

        def draw(n):
            t = rng.integers(1, 15, n).astype(float) if ties else rng.exponential(10, n)
            return t, (rng.random(n) < 0.7).astype(int)

        c0, c1 = km(*draw(n0)), km(*draw(n1))
        tc = tau_process(c1, c0)
        t = tc.jump_times
        excess = np.abs(tc.values) - (1.0 - c0(t) * c1(t))
        if excess.size:
            worst = max(worst, float(excess.max()))
            bad += int(np.any(excess > 0))
    acceptance(5, "tau mass bound", bad == 0,
               f"{bad} of 1000 instances violate; max |tau| - bound = {worst:.2e} (exact)")


@pytest.mark.slow
def test_06_bootstrap_coverage(acceptance):
    sc = Scenario("cure_mixture", (300, 300), ((0.06,), (0.06,)), cure_fractions=(0.10, 0.30),
                  admin_censor_time=60.0)
    truth_sheet = truth(sc, 36.0)
    delta = truth_sheet.true_eta[1] - truth_sheet.true_eta[0]
    est = Estimand("milestone_contrast", m=36.0)
    start, covered, reps = time.perf_counter(), 0, 500
    for r in range(reps):
        ds = simulate(sc.with_changes(seed=10_000 + r))
        res = bootstrap(ds, est, n_resamples=1000, seed=r)
        covered += res.ci_low <= delta <= res.ci_high
    elapsed = time.perf_counter() - start
    rate = covered / reps
    acceptance(6, "bootstrap coverage", 0.93 <= rate <= 0.97 and elapsed <= 600,
               f"coverage {rate:.3f} of {reps} (target 0.93-0.97), true contrast {delta:.4f}, "
               f"{elapsed:.0f}s")


def test_07_bootstrap_determinism(acceptance):
    sc = Scenario("delayed_effect", (150, 150), ((0.1,),), changepoint=3.0,
                  admin_censor_time=24.0, accrual_window=6.0, seed=77)
    ds = simulate(sc)
    ok = True
    for est in (Estimand("milestone_contrast", m=12.0), Estimand("tau_at", t=12.0),
                Estimand("susceptible_tau_at", t=12.0, m=12.0), Estimand("drmst_at", t=12.0)):
        one = bootstrap(ds, est, 500, seed=5, n_jobs=1)
        for k in (2, 4, 7):
            many = bootstrap(ds, est, 500, seed=5, n_jobs=k)
            ok &= one == many and np.array_equal(one.replicates, many.replicates, equal_nan=True)
    acceptance(7, "bootstrap determinism", ok, "1 thread vs 2/4/7 threads on four estimands")


def test_08_exponential_tau_closed_form(acceptance):
    sc = Scenario("exponential", (5000, 5000), ((0.2,), (0.1,)), seed=8)
    start = time.perf_counter()
    v = split_by_arm(simulate(sc))
    tc = tau_process(fit_km(v[1]), fit_km(v[0]))
    value = float(tc.values[-1])
    elapsed = time.perf_counter() - start
    acceptance(8, "exponential tau closed form", abs(value - 1 / 3) <= 0.03 and elapsed < 60,
               f"tau at last event {value:.4f} vs 1/3 (tol 0.03), {elapsed:.1f}s")


@pytest.mark.slow
def test_09_turning_time_recovery(acceptance):
    base = Scenario("delayed_effect", (500, 500), ((0.1,),), changepoint=3.0,
                    admin_censor_time=36.0)
    start, found = time.perf_counter(), []
    for r in range(200):
        v = split_by_arm(simulate(base.with_changes(seed=r)))
        found.append(turning_time(tau_process(fit_km(v[1]), fit_km(v[0]))).time)
    elapsed = time.perf_counter() - start
    mean = float(np.mean(found))
    acceptance(9, "turning-time recovery", abs(mean - 3.0) <= 1.5 and elapsed <= 300,
               f"mean turning time {mean:.2f} (sd {np.std(found):.2f}) vs 3.0 +/- 1.5, "
               f"{elapsed:.0f}s")


def test_10_reconstruction_round_trip(acceptance):
    start = time.perf_counter()
    worst_sup, worst_m, resid_ok, cens = 0.0, 0.0, True, []
    for seed in range(5):
        sc = Scenario("piecewise_exponential", (400, 400), ((0.08, 0.04), (0.05, 0.03)),
                      breaks=(12.0,), admin_censor_time=48.0, accrual_window=24.0, seed=seed)
        ds = simulate(sc)
        cens.append(1.0 - ds.event.mean())
        for v in split_by_arm(ds).values():
            ipd = reconstruct_arm(digitize_km(v, step=0.1, risk_every=6.0))
            worst_sup = max(worst_sup, ipd.diagnostics.sup_distance)
            resid_ok &= set(ipd.diagnostics.risk_table_residuals) == {0}
            a, b = fit_km(v), fit_km(ipd.view())
            for m in (12.0, 24.0, 36.0):
                worst_m = max(worst_m, abs(milestone_survival(a, m) - milestone_survival(b, m)))
    elapsed = time.perf_counter() - start
    ok = worst_sup <= 0.02 and resid_ok and worst_m <= 0.02 and elapsed < 60
    acceptance(10, "reconstruction round trip", ok,
               f"sup {worst_sup:.4f} (<= 0.02), risk residuals zero={resid_ok}, milestone diff "
               f"{worst_m:.4f} (<= 0.02), censoring {np.mean(cens):.0%}, {elapsed:.1f}s")


@pytest.mark.slow
def test_11_cox_oracle_and_ph_calibration(acceptance):
    rng = np.random.default_rng(1111)
    start, worst_beta, worst_resid = time.perf_counter(), 0.0, 0.0
    for _ in range(50):
        n0, n1 = rng.integers(10, 21, 2)
        t = np.round(np.r_[rng.exponential(8, n0), rng.exponential(12, n1)], 1) + 0.1
        e = (rng.random(n0 + n1) < 0.8).astype(int)
        ds = SurvivalDataset(t, e, np.r_[np.zeros(n0, int), np.ones(n1, int)])
        with warnings.catch_warnings():
            warnings.simplefilter("error", errors.MonotoneLikelihood)
            fit = fit_cox_two_group(ds)
        oracle = grid_search_beta(ds.time, ds.event, ds.arm.astype(float))
        worst_beta = max(worst_beta, abs(fit.beta - oracle))
        worst_resid = max(worst_resid, abs(schoenfeld_ph_test(ds, fit).residuals.sum()))
    ks = {}
    for tr in ("identity", "km"):
        p = []
        base = Scenario("piecewise_exponential", (100, 100), ((0.1, 0.05), (0.06, 0.03)),
                        breaks=(6.0,), admin_censor_time=30.0, accrual_window=10.0)
        for r in range(500):
            ds = simulate(base.with_changes(seed=r))
            p.append(schoenfeld_ph_test(ds, fit_cox_two_group(ds), tr).p_value)
        ks[tr] = stats.kstest(p, "uniform").statistic
    elapsed = time.perf_counter() - start
    ok = worst_beta <= 1e-4 and worst_resid <= 1e-8 and max(ks.values()) < 0.1 and elapsed <= 300
    acceptance(11, "Cox oracle and PH calibration", ok,
               f"max |beta - grid| {worst_beta:.1e} (<= 1e-4), max residual sum {worst_resid:.1e} "
               f"(<= 1e-8), KS identity {ks['identity']:.3f} / km {ks['km']:.3f} (< 0.1), "
               f"{elapsed:.0f}s")


def test_12_drmst_identities(acceptance):
    rng = np.random.default_rng(1212)
    worst, anti = 0.0, True
    for _ in range(500):
        n0, n1 = rng.integers(1, 40, 2)
        c0 = km(rng.exponential(10, n0), (rng.random(n0) < 0.7).astype(int))
        c1 = km(rng.exponential(10, n1), (rng.random(n1) < 0.7).astype(int))
        d, r = drmst_process(c1, c0), drmst_process(c0, c1)
        anti &= bool(np.all(d.process.values == -r.process.values))
        grid = np.unique(np.r_[np.linspace(0, d.domain_end, 25), d.process.knots])
        worst = max(worst, float(np.max(np.abs(
            d(grid) - np.array([rmst(c1, t) - rmst(c0, t) for t in grid])))))
    toy = km([1, 2, 3], [1, 0, 1])
    close = lambda a, b: math.isclose(a, b, rel_tol=0, abs_tol=1e-12)  # noqa: E731
    hand = (close(rmst(toy, 3), 1 * 1 + (2 / 3) * 2)
            and close(rmst(km([10], [0]), 10), 10.0)
            and close(rmst(km([2]), 3, extend=True), 2.0)
            and close(drmst_process(km([2, 4], [1, 0]), km([1, 3]))(3), 0.5))
    acceptance(12, "dRMST identities", worst <= 1e-12 and anti and hand,
               f"max |mu - (rmst1 - rmst0)| {worst:.1e} (<= 1e-12), antisymmetry={anti}, "
               f"hand areas={hand}")


_VALIDATION = [errors.ValidationError, errors.MissingColumn, errors.EmptyData, errors.EmptyArm,
               errors.BandwidthTooLarge, errors.NonMonotoneCurve, errors.InconsistentRiskTable,
               errors.InfeasibleTotalEvents, errors.CensoredDataUnsupported]
_COMPUTATION = [errors.ComputationError, errors.DomainExceeded, errors.MilestoneBeyondFollowUp,
                errors.NoEventsBeforeMilestone, errors.NoEvents, errors.TooFewEvents,
                errors.EstimandUndefinedOnFullData, errors.TooManyFailedResamples]


def test_13_cli_golden_and_exit_codes(acceptance, data_dir, tmp_path, monkeypatch, capsys):
    import tauline.cli as cli

    out = tmp_path / "toy.json"
    args = ["analyze", "--input", str(data_dir / "toy.csv"), "--milestone", "2",
            "--bootstrap", "200", "--seed", "7"]
    code = main([*args, "--output", str(out)])
    new = out.read_text().splitlines()
    old = (data_dir / "toy_report.json").read_text().splitlines()
    golden = code == 0 and len(new) == len(old) and all(
        a == b or ('"timestamp"' in a and '"timestamp"' in b) for a, b in zip(new, old))
    eta_ok = math.isclose(json.loads(out.read_text())["milestone"]["eta"]["0"], 2 / 3,
                          rel_tol=0, abs_tol=1e-12)

    real = {
        2: [["analyze", "--input", str(data_dir / "toy.csv")],
            ["reconstruct", "--input", str(data_dir / "digitized_nonmonotone.json")],
            ["simulate", "--input", str(data_dir / "scenario_empty_arm.json")],
            ["analyze", "--input", str(tmp_path / "nope.csv"), "--milestone", "2"]],
        3: [["analyze", "--input", str(data_dir / "late_events.csv"), "--milestone", "2",
             "--bootstrap", "100"],
            ["phtest", "--input", str(data_dir / "single_event.csv")]],
    }
    codes_ok = all(main(a) == want for want, cases in real.items() for a in cases)

    mapped = True
    for want, classes in ((2, _VALIDATION), (3, _COMPUTATION)):
        for cls in classes:
            def boom(*a, _cls=cls, **k):
                raise _cls("injected")
            monkeypatch.setattr(cli, "run_analysis", boom)
            mapped &= main([*args, "--output", str(tmp_path / "x.json")]) == want
    for cls, kw in ((errors.NegativeTime, (2, "-1")), (errors.NonNumericTime, (2, "x")),
                    (errors.InvalidEvent, (2, "7"))):
        def boom(*a, _cls=cls, _kw=kw, **k):
            raise _cls(*_kw)
        monkeypatch.setattr(cli, "run_analysis", boom)
        mapped &= main([*args, "--output", str(tmp_path / "x.json")]) == 2
    capsys.readouterr()
    ok = golden and eta_ok and codes_ok and mapped
    acceptance(13, "CLI golden file and exit codes", ok,
               f"golden match={golden}, eta0(2)=2/3 {eta_ok}, real failures={codes_ok}, "
               f"every error class mapped={mapped}")

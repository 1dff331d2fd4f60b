import json
import warnings

import numpy as np
import pytest

from conftest import random_dataset
from oracles import breslow_loglik_bruteforce, grid_search_beta
from tauline import SurvivalDataset, fit_cox_two_group, load_csv, schoenfeld_ph_test
from tauline.errors import ComputationError, MonotoneLikelihood, NoEvents, TooFewEvents
from tauline.phdiag import event_table, partial_loglik


def test_identical_arms_give_zero():
    t = np.r_[np.arange(1, 9.0), np.arange(1, 9.0)]
    ds = SurvivalDataset(t, np.ones(16), np.r_[np.zeros(8), np.ones(8)].astype(int))
    fit = fit_cox_two_group(ds)
    assert fit.beta == 0.0 and fit.converged and fit.hazard_ratio == 1.0
    ph = schoenfeld_ph_test(ds, fit)
    assert 0 <= ph.p_value <= 1


def test_fixture_matches_recorded_grid_oracle(data_dir):
    ds = load_csv(data_dir / "cox_small.csv")
    oracle = json.loads((data_dir / "cox_small_oracle.json").read_text())
    fit = fit_cox_two_group(ds, tuple(oracle["arm_pair"]))
    assert len(ds) <= 40
    assert abs(fit.beta - oracle["beta_grid"]) <= 1e-4


def test_vectorised_loglik_matches_bruteforce():
    ds = random_dataset(np.random.default_rng(1), 15, 12, ties=True)
    betas = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(partial_loglik(event_table(ds), betas),
                               breslow_loglik_bruteforce(ds.time, ds.event, ds.arm.astype(float), betas),
                               rtol=1e-12, atol=1e-10)


def test_separation_is_flagged_monotone():
    ds = SurvivalDataset([1, 2, 3, 4, 5, 6], np.ones(6), [0, 0, 0, 1, 1, 1])
    with pytest.warns(MonotoneLikelihood):
        fit = fit_cox_two_group(ds)
    assert fit.monotone and not fit.converged and fit.beta == -20.0
    with pytest.raises(ComputationError):
        schoenfeld_ph_test(ds, fit)


def test_no_events_and_too_few_events():
    with pytest.raises(NoEvents):
        fit_cox_two_group(SurvivalDataset([1, 2], [1, 0], [0, 1]))
    ds = SurvivalDataset([1, 2, 3, 4], [1, 1, 0, 0], [0, 1, 0, 1])
    fit = fit_cox_two_group(ds)
    with pytest.raises(TooFewEvents):
        schoenfeld_ph_test(ds, fit)


@pytest.mark.parametrize("seed", range(12))
def test_score_information_residuals_and_invariance(seed):
    ds = random_dataset(np.random.default_rng(seed), ties=seed % 2 == 0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", MonotoneLikelihood)
        fit = fit_cox_two_group(ds)
    assert fit.converged and abs(fit.score) <= 1e-8 and fit.information > 0
    for tr in ("identity", "km"):
        ph = schoenfeld_ph_test(ds, fit, tr)
        assert abs(ph.residuals.sum()) <= 1e-8
        assert 0 <= ph.p_value <= 1 and ph.time_transform == tr
    cubed = SurvivalDataset(ds.time ** 3, ds.event, ds.arm)
    assert fit_cox_two_group(cubed).beta == fit.beta
    assert abs(fit.beta - grid_search_beta(ds.time, ds.event, ds.arm.astype(float))) <= 1e-4


def test_bad_transform():
    ds = random_dataset(np.random.default_rng(0))
    with pytest.raises(ValueError):
        schoenfeld_ph_test(ds, fit_cox_two_group(ds), "log")

"""Estimator-contract tests: parameter handling, cloning, fitted state."""

import numpy as np
from sklearn.base import clone

from maxseq.core import RngSeed
from maxseq.dgp import ErrorSpec, PanelSpec, simulate_ar1_panel, simulate_errors
from maxseq.unitroot import UnitRootMaxTest
from maxseq.whitenoise import WhiteNoiseMaxTest


def unit_root_panel(n=150, k=2, seed=140):
    return simulate_ar1_panel(PanelSpec.uniform(n, k, 1.0), RngSeed(seed))


def noise_series(n=300, seed=141):
    return simulate_errors(ErrorSpec(), n, RngSeed(seed))


class TestUnitRootMaxTestContract:
    def make(self):
        return UnitRootMaxTest(rule="fixed:2", reps=200, m_steps=120, seed=4)

    def test_get_params_round_trip(self):
        est = self.make()
        params = est.get_params()
        assert params["rule"] == "fixed:2"
        assert params["reps"] == 200
        rebuilt = UnitRootMaxTest(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        est = self.make()
        est.set_params(level=0.10, reps=300)
        assert est.level == 0.10
        assert est.reps == 300

    def test_clone_preserves_params(self):
        est = self.make()
        cloned = clone(est)
        assert cloned is not est
        assert cloned.get_params() == est.get_params()

    def test_fit_returns_self_and_sets_state(self):
        est = self.make()
        panel = unit_root_panel()
        assert est.fit(panel.values) is est
        for attr in ("result_", "stat_", "p_value_", "critical_value_",
                     "reject_", "per_series_", "L_", "n_features_in_"):
            assert hasattr(est, attr)
        assert est.n_features_in_ == 2

    def test_fit_does_not_mutate_params(self):
        est = self.make()
        before = est.get_params()
        est.fit(unit_root_panel().values)
        assert est.get_params() == before

    def test_refit_overwrites_state(self):
        est = self.make()
        a = est.fit(unit_root_panel(seed=142).values).stat_
        b = est.fit(unit_root_panel(seed=143).values).stat_
        assert a != b

    def test_clone_then_fit_matches(self):
        est = self.make()
        panel = unit_root_panel()
        a = est.fit(panel.values)
        b = clone(est).fit(panel.values)
        assert a.stat_ == b.stat_
        assert a.p_value_ == b.p_value_
        np.testing.assert_array_equal(a.per_series_, b.per_series_)


class TestWhiteNoiseMaxTestContract:
    def make(self):
        return WhiteNoiseMaxTest(lags=3, reps=80, seed=4, block=6)

    def test_get_params_round_trip(self):
        est = self.make()
        params = est.get_params()
        assert params["lags"] == 3
        assert params["block"] == 6
        rebuilt = WhiteNoiseMaxTest(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        est = self.make()
        est.set_params(method="stats", p=2)
        assert est.method == "stats"
        assert est.p == 2

    def test_clone_preserves_params(self):
        est = self.make()
        assert clone(est).get_params() == est.get_params()

    def test_fit_returns_self_and_sets_state(self):
        est = self.make()
        assert est.fit(noise_series()) is est
        for attr in ("result_", "stat_", "per_lag_", "p_value_", "reject_",
                     "L_", "block_len_", "n_features_in_"):
            assert hasattr(est, attr)
        assert est.n_features_in_ == 1

    def test_fit_does_not_mutate_params(self):
        est = self.make()
        before = est.get_params()
        est.fit(noise_series())
        assert est.get_params() == before

    def test_column_vector_input(self):
        est = self.make()
        est.fit(noise_series().reshape(-1, 1))
        assert est.L_ == 3

    def test_clone_then_fit_matches(self):
        est = self.make()
        y = noise_series()
        a = est.fit(y)
        b = clone(est).fit(y)
        assert a.p_value_ == b.p_value_
        np.testing.assert_array_equal(a.per_lag_, b.per_lag_)

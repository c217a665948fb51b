import csv
import math

import numpy as np
import pytest
from scipy import stats

from stepstress.design import (
    MIN_VALID,
    DesignConfig,
    _replicate,
    curve_arrays,
    cv_sum_at_tau,
    default_tau_grid,
    optimize_tau,
    write_curve_csv,
)
from stepstress.errors import DesignInfeasibleError, UnstableDesignError, ValidationError


class TestGrid:
    def test_default_grid(self):
        g = default_tau_grid()
        assert len(g) == 79 and g[0] == 0.4 and g[-1] == 16.0
        assert np.allclose(np.diff(g), 0.2)

    def test_no_overshoot(self):
        assert default_tau_grid(1.0, 2.05, 0.5) == [1.0, 1.5, 2.0]

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            DesignConfig(0.6, 0.1, 0.2, 20, tau_grid=())
        with pytest.raises(ValidationError):
            DesignConfig(0.6, 0.1, 0.2, 20, tau_grid=(2.0, 1.0))
        with pytest.raises(ValidationError):
            DesignConfig(0.6, 0.1, 0.2, 20, reps=0)
        with pytest.raises(ValidationError):
            DesignConfig(0.6, 0.2, 0.1, 20)


class TestReplication:
    def test_single_replication_deterministic(self):
        cfg = DesignConfig(1.5, 0.1, 0.2, 30, tau_grid=(7.0,), reps=1, seed=3)
        a = _replicate(cfg, 7.0, 0)
        b = _replicate(cfg, 7.0, 0)
        assert type(a) is type(b)
        if isinstance(a, dict):
            assert all(a[k] == b[k] for k in a)
        with pytest.raises(UnstableDesignError):
            cv_sum_at_tau(cfg, 7.0)

    def test_point_statistics(self):
        cfg = DesignConfig(1.5, 0.1, 0.2, 30, tau_grid=(7.0,), reps=30, seed=1)
        pt = cv_sum_at_tau(cfg, 7.0)
        assert pt.n_valid + pt.n_boundary + pt.n_clamped + pt.n_failed == 30
        assert pt.n_valid >= MIN_VALID
        cv = sum(math.sqrt(pt.variances[k]) / pt.means[k] for k in ("alpha", "theta1", "theta2"))
        assert pt.cv_sum == pytest.approx(cv, rel=1e-14)


@pytest.fixture(scope="module")
def result():
    cfg = DesignConfig(1.5, 0.1, 0.2, 30, tau_grid=(3.0, 5.0, 7.0, 9.0, 11.0), reps=30, seed=2)
    return cfg, optimize_tau(cfg)


class TestOptimize:
    def test_exact_argmin(self, result):
        _, (tau_opt, curve) = result
        stable = [p for p in curve if p.stable]
        assert tau_opt == min(stable, key=lambda p: p.cv_sum).tau1

    def test_bit_exact_reproducible(self, result):
        cfg, (tau_opt, curve) = result
        tau2, curve2 = optimize_tau(cfg)
        assert tau2 == tau_opt
        assert [p.cv_sum for p in curve] == [p.cv_sum for p in curve2]

    def test_single_point_grid(self):
        cfg = DesignConfig(1.5, 0.1, 0.2, 30, tau_grid=(7.0,), reps=20, seed=4)
        tau_opt, curve = optimize_tau(cfg)
        assert tau_opt == 7.0 and len(curve) == 1

    def test_infeasible(self):
        # no stress-1 failures at all: every replication is boundary-flagged
        cfg = DesignConfig(1.5, 0.1, 0.2, 20, tau_grid=(1e-4, 2e-4), reps=12)
        with pytest.raises(DesignInfeasibleError):
            optimize_tau(cfg)

    def test_progress_callback(self):
        seen = []
        cfg = DesignConfig(1.5, 0.1, 0.2, 30, tau_grid=(7.0, 9.0), reps=12, seed=5)
        optimize_tau(cfg, progress=lambda i, pt: seen.append((i, pt.tau1)))
        assert seen == [(0, 7.0), (1, 9.0)]

    def test_curve_csv(self, result, tmp_path):
        _, (_, curve) = result
        path = tmp_path / "curve.csv"
        write_curve_csv(curve, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(curve)
        taus = [float(r["tau1"]) for r in rows]
        assert taus == sorted(taus)
        t, cv = curve_arrays(curve)
        assert np.array_equal(t, taus)


@pytest.fixture(scope="module")
def sweep():
    cfg = DesignConfig(0.6, 0.1, 0.2, 30, tau_grid=(2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0), reps=60, seed=0)
    return optimize_tau(cfg)[1]


@pytest.mark.slow
class TestTrends:
    def test_theta2_variance_increases(self, sweep):
        pts = [p for p in sweep if p.stable]
        rho = stats.spearmanr([p.tau1 for p in pts], [p.variances["theta2"] for p in pts]).statistic
        assert rho > 0

    def test_alpha_variance_decreases(self, sweep):
        pts = [p for p in sweep if p.stable]
        rho = stats.spearmanr([p.tau1 for p in pts], [p.variances["alpha"] for p in pts]).statistic
        assert rho < 0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poisdeconv.core.metrics import psnr
from poisdeconv.errors import BudgetError, ConfigError
from poisdeconv.kvconfig import kv_dict, parse_kv
from poisdeconv.pipelines import (
    SOLVER_IDS,
    SolverConfig,
    config_from_pairs,
    config_to_text,
    default_config,
    run_solver,
)
from poisdeconv.synth import DegradationSpec, degrade, make_trajectory_kernel
from poisdeconv.tune import TuneSpec, ValidationCase, heuristic_schedule, tune_schedule


def phantom(n=32, shift=0.0):
    yy, xx = np.mgrid[0:n, 0:n] / n
    x = 0.2 + 0.5 * ((xx - 0.5 - shift) ** 2 + (yy - 0.4) ** 2 < 0.08) + 0.2 * np.sin(6 * xx + shift)
    return np.clip(x, 0, 1)


@pytest.fixture(scope="module")
def validation():
    return [ValidationCase(phantom(32, s), DegradationSpec(make_trajectory_kernel(9, seed=i), 10.0, seed=i))
            for i, s in enumerate((0.0, 0.1))]


def mean_psnr(cfg, cases):
    vals = []
    for clean, spec in cases:
        y, alpha = degrade(clean, spec)
        x, _ = run_solver(cfg, y / alpha, spec.kernel, alpha)
        vals.append(psnr(clean, x))
    return float(np.mean(vals))


class TestHeuristic:
    def test_single_iteration(self):
        assert heuristic_schedule(1, 10.0, 9).K == 1

    @pytest.mark.parametrize("size", [9, 27, 45])
    def test_increasing(self, size):
        mu = heuristic_schedule(8, 30.0, size).mu
        assert all(b > a for a, b in zip(mu, mu[1:]))

    def test_grows_with_photon_level(self):
        assert heuristic_schedule(4, 50.0, 27).mu[0] > heuristic_schedule(4, 10.0, 27).mu[0]

    @pytest.mark.parametrize("K, ppp", [(0, 10.0), (4, 0.0)])
    def test_invalid(self, K, ppp):
        with pytest.raises(ConfigError):
            heuristic_schedule(K, ppp, 9)


class TestTuneSchedule:
    def test_three_values_three_evaluations(self, validation):
        spec = TuneSpec("psnr", {"wiener.lambda": [0.003, 0.03, 0.3]}, budget=10, validation=validation)
        best, trace = tune_schedule("wiener", spec)
        assert len(trace) == 3
        assert sorted(e.config["wiener.lambda"] for e in trace) == [0.003, 0.03, 0.3]
        top = max(trace, key=lambda e: e.objective)
        assert best == top.config
        assert top.objective == pytest.approx(mean_psnr(best, validation), abs=1e-12)

    def test_grid_containing_default_is_not_worse(self, validation):
        default = default_config("wiener_tv", 10.0, 9)
        grid = {"wiener.lambda": [0.01, default["wiener.lambda"], 0.05],
                "denoiser.strength": [default["denoiser.strength"] * f for f in (0.5, 1.0, 2.0)]}
        spec = TuneSpec("psnr", grid, budget=30, validation=validation)
        best, trace = tune_schedule("wiener_tv", spec)
        assert mean_psnr(best, validation) >= mean_psnr(default, validation) - 1e-12
        assert len(trace) <= 30

    def test_l1_objective_minimized(self, validation):
        spec = TuneSpec("l1", {"wiener.lambda": [0.003, 0.03, 0.3]}, budget=5, validation=validation)
        best, trace = tune_schedule("wiener", spec)
        assert best == min(trace, key=lambda e: e.objective).config

    def test_budget_below_one_pass(self, validation):
        spec = TuneSpec("psnr", {"wiener.lambda": [0.01, 0.02, 0.03]}, budget=2, validation=validation)
        with pytest.raises(BudgetError):
            tune_schedule("wiener", spec)

    def test_budget_respected(self, validation):
        grid = {"wiener.lambda": [0.01, 0.02, 0.04], "denoiser.strength": [0.1, 0.3, 1.0]}
        spec = TuneSpec("psnr", grid, budget=6, validation=validation)
        _, trace = tune_schedule("wiener_tv", spec)
        assert len(trace) <= 6

    def test_reproducible(self, validation):
        grid = {"wiener.lambda": [0.01, 0.02, 0.04], "denoiser.strength": [0.1, 0.3, 1.0]}
        spec = TuneSpec("psnr", grid, budget=20, validation=validation, seed=3)
        a = tune_schedule("wiener_tv", spec)
        b = tune_schedule("wiener_tv", spec)
        assert a == b

    def test_unknown_parameter(self, validation):
        spec = TuneSpec("psnr", {"mu0": [1.0]}, budget=5, validation=validation)
        with pytest.raises(ConfigError):
            tune_schedule("wiener", spec)

    @pytest.mark.parametrize("kwargs", [
        {"objective": "ssim"},
        {"grid": {}},
        {"grid": {"wiener.lambda": []}},
        {"validation": []},
        {"workers": 0},
    ])
    def test_spec_validation(self, validation, kwargs):
        args = {"objective": "psnr", "grid": {"wiener.lambda": [0.1]}, "budget": 5, "validation": validation}
        with pytest.raises(ConfigError):
            TuneSpec(**{**args, **kwargs})


def round_trip(cfg):
    return config_from_pairs(kv_dict(parse_kv(config_to_text(cfg))))


class TestConfigRoundTrip:
    @pytest.mark.parametrize("sid", SOLVER_IDS)
    def test_defaults(self, sid):
        cfg = default_config(sid, 30.0, 27)
        assert round_trip(cfg) == cfg

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0, allow_infinity=False, allow_nan=False),
           st.lists(st.floats(min_value=1e-300, max_value=1e300), min_size=1, max_size=6),
           st.floats(min_value=0, max_value=1e6))
    def test_fio_floats_bit_exact(self, lam, mu, strength):
        cfg = default_config("fio", 10.0, 9).with_params(
            {"lambda": lam, "mu": mu, "iters": len(mu), "denoiser.strength": strength})
        back = round_trip(cfg)
        assert back == cfg
        assert all(math.copysign(1, a) == math.copysign(1, b) and a == b
                   for a, b in zip(back["mu"], cfg["mu"]))

    def test_numpy_scalars_serialize_plainly(self):
        cfg = default_config("wiener", 10.0, 9).with_params({"wiener.lambda": np.float64(0.1)})
        assert "wiener.lambda = 0.1\n" in config_to_text(cfg)

    def test_partial_file_filled_from_defaults(self):
        cfg = config_from_pairs({"solver": "fio", "lambda": "0.5"}, ppp=10.0, kernel_size=9)
        assert cfg["lambda"] == 0.5 and cfg["bank"] == default_config("fio", 10.0, 9)["bank"]

    def test_missing_keys_without_defaults(self):
        with pytest.raises(ConfigError):
            config_from_pairs({"solver": "fio", "lambda": "0.5"})

    @pytest.mark.parametrize("pairs", [{}, {"solver": "bm3d"}])
    def test_bad_solver(self, pairs):
        with pytest.raises(ConfigError):
            config_from_pairs(pairs)

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError):
            SolverConfig("wiener", {"mu0": 1.0})

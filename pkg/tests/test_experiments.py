import numpy as np
import pytest

from fexpd.core.exceptions import ConfigurationError
from fexpd.core.inference.experiments import (
    bias_dominance,
    prior_variant,
    rates_table,
    suboptimality_experiment,
)
from fexpd.core.models.config import ExperimentConfig, PriorConfig, PriorKind
from fexpd.core.runner import (
    BvmTask,
    SimulateTask,
    global_replicate,
    replicate_path,
    run_replicates,
)
from fexpd.core.utils import config_hash, replicate_seed

N_GRID = [512, 1024, 2048, 4096, 8192]


@pytest.fixture
def power_config(power_truth) -> ExperimentConfig:
    return ExperimentConfig(
        n_grid=N_GRID, truth=power_truth, replicates=2, iters=1000, jobs=1
    )


def test_prior_variant_drops_k_law():
    config = PriorConfig(kind="C", L=5.0, k_law={"kind": "poisson", "lam": 1.0})
    variant = prior_variant(config, PriorKind.B)
    assert variant.kind == PriorKind.B
    assert variant.k_law is None
    assert variant.L == 5.0


def test_bias_dominance(power_truth):
    dominates, rows = bias_dominance(power_truth, N_GRID)
    assert dominates
    assert [row["k_n"] for row in rows] == [2, 2, 2, 2, 3]
    assert [row["k_n_prime"] for row in rows] == [1, 1, 1, 1, 2]
    assert all(row["bias_k_n_prime"] > row["bias_k_n"] for row in rows)


def test_bias_dominance_fails_for_finite_truth(fexp_truth):
    dominates, rows = bias_dominance(fexp_truth, N_GRID)
    assert not dominates
    assert all(row["bias_k_n"] == 0.0 for row in rows)


def test_rates_table(power_config):
    rows = rates_table(power_config)
    assert [row["n"] for row in rows] == N_GRID
    assert all(row["k_n_prime"] < row["k_n"] for row in rows)
    sds = [row["fisher_sd"] for row in rows]
    assert sds == sorted(sds, reverse=True)
    assert {"delta_n", "eps_n", "vbar_n", "w_n", "r_k_n", "L"} <= set(rows[0])


def test_rate_study_needs_smooth_truth():
    config = ExperimentConfig(truth={"beta": 2.0})
    with pytest.raises(ConfigurationError):
        suboptimality_experiment(config)


def test_rate_study_table(power_truth):
    config = ExperimentConfig(
        n_grid=[512, 1024],
        truth=power_truth,
        replicates=2,
        iters=1000,
        jobs=1,
        likelihood="whittle",
        simulation={"k_trunc": 16384},
    )
    table = suboptimality_experiment(config)
    assert table.bias_dominance
    assert [(row.n, row.prior) for row in table.rows] == [
        (512, "A"),
        (512, "B"),
        (1024, "A"),
        (1024, "B"),
    ]
    for row in table.rows:
        assert row.rmse >= row.mean_abs_error >= 0
    a, b = table.rows[0], table.rows[1]
    assert b.k_used < a.k_used
    assert b.analytic_bias > a.analytic_bias
    assert np.shape(table.errors["A"]) == (2, 2)


def test_global_replicate_and_seeds(power_config):
    assert global_replicate(power_config, 0, 1) == 1
    assert global_replicate(power_config, 3, 1) == 7
    indices = {
        global_replicate(power_config, i, r)
        for i in range(len(N_GRID))
        for r in range(power_config.replicates)
    }
    assert len(indices) == len(N_GRID) * power_config.replicates
    assert replicate_seed(10, 100, 3) == 310


def test_replicate_path_is_deterministic(fexp_truth):
    config = ExperimentConfig(n_grid=[128], truth=fexp_truth, jobs=1)
    a = replicate_path(config, 128, 4)
    b = SimulateTask(config)((128, 4))
    assert a.seed == replicate_seed(config.seed, config.seed_stride, 4)
    np.testing.assert_array_equal(a.values, b.values)


def test_run_replicates_keeps_order():
    assert run_replicates(abs, [-3, 2, -1], jobs=1) == [3, 2, 1]
    assert run_replicates(abs, [], jobs=4) == []


def test_config_hash_ignores_placement(power_config):
    moved = power_config.model_copy(update={"output_dir": "elsewhere", "jobs": 8})
    reseeded = power_config.model_copy(update={"seed": 1})
    assert config_hash(moved) == config_hash(power_config)
    assert config_hash(reseeded) != config_hash(power_config)


def test_bvm_task(fexp_truth):
    config = ExperimentConfig(
        n_grid=[256],
        truth=fexp_truth,
        prior={"L": 10.0},
        iters=1400,
        jobs=1,
        likelihood="whittle",
    )
    result = BvmTask(config, 256)(0)
    assert result["replicate"] == 0
    assert result["seed"] == config.seed
    assert result["report"].n_draws == 1050
    assert isinstance(result["covered_90"], bool)


@pytest.mark.slow
def test_bvm_at_large_n(fexp_truth):
    config = ExperimentConfig(
        n_grid=[4096],
        truth=fexp_truth,
        prior={"L": 10.0},
        iters=6700,
        jobs=1,
    )
    result = BvmTask(config, 4096)(0)
    report = result["report"]
    assert report.ks_to_normal < 0.1
    assert report.var_ratio == pytest.approx(1.0, abs=0.5)
    assert abs(report.z_mean) < 4.0


@pytest.mark.slow
def test_undersmoothed_prior_is_biased(power_truth):
    config = ExperimentConfig(
        n_grid=[1024, 4096],
        truth=power_truth,
        replicates=10,
        iters=2000,
        likelihood="whittle",
        simulation={"k_trunc": 16384},
    )
    table = suboptimality_experiment(config)
    # both priors see the same paths, so the paired gap isolates the bias
    gap = np.subtract(table.errors["B"][-1], table.errors["A"][-1])
    assert gap.mean() > 0

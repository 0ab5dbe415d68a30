import json
import sys

import pytest
from click.testing import CliRunner
from loguru import logger

from fexpd.cli import cli, guarded
from fexpd.core.exceptions import SamplerError

FEXP_TRUTH = {
    "d_o": 0.25,
    "beta": 3.0,
    "rule": {"kind": "finite", "coefficients": [0.1, 0.05]},
}


@pytest.fixture(autouse=True)
def restore_loguru():
    yield
    # CliRunner closes the stream the console sink was bound to
    logger.remove()
    logger.add(sys.stderr)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _invoke(runner, config, *args):
    return runner.invoke(cli, ["--config", config, *args])


def test_rates_is_the_default_command(runner, write_config, tmp_path):
    config = write_config(
        {
            "n_grid": [512, 1024, 2048, 4096, 8192],
            "truth": {"d_o": 0.2, "L_o": 100.0, "rule": {"kind": "power_law"}},
        }
    )
    result = _invoke(runner, config)
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    lines = (out / "rates.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1].startswith("n,k_n,k_n_prime")
    assert len(lines) == 7
    payload = json.loads((out / "rates.json").read_text())
    assert payload["data"]["bias_dominance"] is True
    assert "k_n=  3" in result.output


def test_invalid_config_writes_nothing(runner, write_config, tmp_path):
    config = write_config({"truth": {"d_o": 0.6}})
    result = _invoke(runner, config, "rates")
    assert result.exit_code == 2
    assert not (tmp_path / "out").exists()


def test_missing_config(runner, tmp_path):
    result = _invoke(runner, str(tmp_path / "nope.yaml"), "rates")
    assert result.exit_code == 2


def test_simulate_is_reproducible(runner, write_config, tmp_path):
    config = write_config({"n_grid": [64, 100], "replicates": 2, "truth": FEXP_TRUTH})
    first = tmp_path / "first"
    second = tmp_path / "second"
    assert _invoke(runner, config, "simulate", "--out", str(first)).exit_code == 0
    assert _invoke(runner, config, "simulate", "--out", str(second)).exit_code == 0
    names = sorted(p.name for p in first.iterdir())
    assert names == [
        "path_n100_r002.csv",
        "path_n100_r003.csv",
        "path_n64_r000.csv",
        "path_n64_r001.csv",
        "simulate.json",
    ]
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    manifest = json.loads((first / "simulate.json").read_text())
    assert manifest["data"]["generator"]["path_n64_r000.csv"] == "circulant"
    assert manifest["data"]["generator"]["path_n100_r002.csv"] == "cholesky"
    assert "path_n100_r002.csv" in manifest["data"]["notes"]


def test_seed_override_changes_hash(runner, write_config, tmp_path):
    config = write_config({"n_grid": [64], "replicates": 1, "truth": FEXP_TRUTH})
    _invoke(runner, config, "simulate", "--out", str(tmp_path / "a"))
    _invoke(runner, config, "simulate", "--out", str(tmp_path / "b"), "--seed", "1")
    a = json.loads((tmp_path / "a" / "simulate.json").read_text())
    b = json.loads((tmp_path / "b" / "simulate.json").read_text())
    assert a["meta"]["config_hash"] != b["meta"]["config_hash"]
    assert b["meta"]["seeds"]["path_n64_r000.csv"] == 1


def test_fit_simulated_path(runner, write_config, tmp_path):
    config = write_config(
        {
            "n_grid": [128],
            "replicates": 1,
            "iters": 1000,
            "truth": FEXP_TRUTH,
            "prior": {"L": 10.0},
        }
    )
    paths = tmp_path / "paths"
    assert _invoke(runner, config, "simulate", "--out", str(paths)).exit_code == 0
    data = paths / "path_n128_r000.csv"
    fitted = tmp_path / "fit"
    result = _invoke(
        runner, config, "fit", "--data", str(data), "--whittle", "--out", str(fitted)
    )
    assert result.exit_code == 0, result.output
    payload = json.loads((fitted / "fit.json").read_text())
    assert payload["data"]["likelihood"] == "whittle"
    assert payload["data"]["n"] == 128
    assert payload["data"]["chains"] == ["chain_k1.csv"]
    assert -0.5 < payload["data"]["summary"]["d_mean"] < 0.5
    assert payload["data"]["gph"]["bandwidth"] == 11
    assert (fitted / "chain_k1.csv").exists()


def test_fit_input_errors(runner, write_config, tmp_path):
    config = write_config({"n_grid": [128]})
    assert _invoke(runner, config, "fit").exit_code == 2
    missing = _invoke(runner, config, "fit", "--data", str(tmp_path / "none.csv"))
    assert missing.exit_code == 2
    assert not (tmp_path / "out").exists()


def test_bvm_command(runner, write_config, tmp_path):
    config = write_config(
        {
            "n_grid": [256],
            "replicates": 1,
            "iters": 1400,
            "truth": FEXP_TRUTH,
            "prior": {"L": 10.0},
        }
    )
    result = _invoke(runner, config, "bvm", "--whittle")
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    payload = json.loads((out / "bvm_n256.json").read_text())
    assert payload["data"]["k"] == 1
    assert len(payload["data"]["replicates"]) == 1
    assert 0.0 <= payload["data"]["coverage_90"] <= 1.0
    header = (out / "bvm_n256.csv").read_text().splitlines()[2]
    assert header.startswith("replicate,seed,ks_to_normal")


def test_rate_study_command(runner, write_config, tmp_path):
    config = write_config(
        {
            "n_grid": [256, 512],
            "replicates": 1,
            "iters": 1000,
            "truth": FEXP_TRUTH,
            "prior": {"L": 10.0},
        }
    )
    result = _invoke(runner, config, "rate-study", "--whittle")
    assert result.exit_code == 0, result.output
    out = tmp_path / "out"
    payload = json.loads((out / "rate_study.json").read_text())
    assert [row["prior"] for row in payload["data"]["rows"]] == ["A", "B", "A", "B"]
    assert set(payload["meta"]["seeds"]) == {"r000", "r001"}
    assert (out / "rate_study.csv").read_text().startswith("# config_hash=")


def test_schema_command(runner, write_config, tmp_path):
    config = write_config({})
    target = tmp_path / "schema"
    result = _invoke(runner, config, "schema", "--out", str(target))
    assert result.exit_code == 0, result.output
    names = sorted(p.name for p in target.iterdir())
    assert "config.schema.json" in names and len(names) == 6
    schema = json.loads((target / "config.schema.json").read_text())
    assert "experiment" in schema["properties"]


def test_guarded_failure_logs_error_and_writes_nothing(tmp_path):
    records = []
    logger.add(lambda message: records.append(message.record), level="CRITICAL")

    @guarded
    def fit(out):
        raise SamplerError(message="stuck", detail={"iteration": 3})

    with pytest.raises(SystemExit) as info:
        fit(tmp_path / "out")
    assert info.value.code == 1
    assert records[-1]["extra"]["error"]["code"] == "SAMPLER"
    assert records[-1]["extra"]["error"]["detail"] == {"iteration": 3}
    assert not (tmp_path / "out").exists()

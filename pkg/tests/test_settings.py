import logging
import sys

import pytest
import yaml
from loguru import logger
from pydantic import ValidationError

from fexpd.core.exceptions import (
    ConfigurationError,
    DataError,
    SamplerError,
    ToeplitzBreakdownError,
)
from fexpd.core.logger import disable_logging, setup_logging
from fexpd.core.models.config import (
    AppConfig,
    ExperimentConfig,
    ExperimentOverrides,
    LoggerConfig,
)
from fexpd.core.models.response import Report
from fexpd.core.response import create_report
from fexpd.core.settings import get_config


def test_get_config_caches(tmp_path):
    source = tmp_path / "config.yaml"
    source.write_text(yaml.safe_dump({"experiment": {"n_grid": [1024, 256]}}))
    config = get_config(str(source))
    assert config.experiment.n_grid == [256, 1024]
    assert get_config() is config


def test_get_config_empty_file(tmp_path):
    source = tmp_path / "config.yaml"
    source.write_text("")
    assert get_config(str(source)) == AppConfig()


def test_get_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        get_config(str(tmp_path / "missing.yaml"))
    broken = tmp_path / "broken.yaml"
    broken.write_text("experiment: [unclosed\n")
    with pytest.raises(yaml.YAMLError):
        get_config(str(broken))
    invalid = tmp_path / "invalid.yaml"
    invalid.write_text(yaml.safe_dump({"experiment": {"truth": {"d_o": 0.6}}}))
    with pytest.raises(ValidationError):
        get_config(str(invalid))


def test_get_config_defaults_without_file(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert get_config() == AppConfig()


def test_get_config_rejects_non_mapping(tmp_path):
    source = tmp_path / "config.yaml"
    source.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError) as info:
        get_config(str(source))
    assert info.value.exit_code == 2


def test_experiment_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(n_grid=[])
    with pytest.raises(ValidationError):
        ExperimentConfig(n_grid=[4])
    with pytest.raises(ValidationError):
        ExperimentConfig(iters=999)
    with pytest.raises(ValidationError):
        ExperimentConfig(truth={"d_o": 0.42}, prior={"t": 0.1})
    config = ExperimentConfig(truth={"beta": 4.0})
    assert config.prior.beta == 4.0


def test_overrides():
    base = ExperimentConfig()
    assert ExperimentOverrides().apply(base) == base
    updated = ExperimentOverrides(seed=5, data="x.csv", likelihood="whittle").apply(base)
    assert updated.seed == 5
    assert updated.fit.data == "x.csv"
    assert updated.likelihood == "whittle"
    with pytest.raises(ValidationError):
        ExperimentOverrides(jobs=0)


def test_error_codes():
    assert ConfigurationError(message="x").exit_code == 2
    assert DataError(message="x").exit_code == 2
    error = SamplerError(message="stuck", detail={"iteration": 3})
    assert error.exit_code == 1
    assert error.as_dict()["code"] == "SAMPLER"
    assert ToeplitzBreakdownError(message="x", detail={"step": 4}).step == 4
    assert ToeplitzBreakdownError(message="x").step is None


def test_report_envelope_has_no_error_slot():
    report = create_report({"k": 2}, config_hash="cafe", command="fit")
    assert report.success is True
    assert report.data == {"k": 2}
    assert report.meta.seeds is None
    assert "error" not in Report.model_json_schema()["properties"]


def test_setup_logging_levels():
    setup_logging(LoggerConfig(level="WARNING"))
    assert logging.root.level == logging.WARNING
    setup_logging(LoggerConfig(level="DEBUG"))
    assert logging.root.level == logging.DEBUG


def test_disable_logging_restores_state():
    before = logging.root.manager.disable
    with disable_logging():
        assert logging.root.manager.disable == logging.CRITICAL
    assert logging.root.manager.disable == before


def test_worker_logging_writes_process_name(tmp_path):
    log_file = tmp_path / "logs" / "fexpd.log"
    try:
        setup_logging(LoggerConfig(level="INFO", log_file=str(log_file)), worker=True)
        logger.info("replicate finished")
        logger.complete()
    finally:
        logger.remove()
        logger.add(sys.stderr)
    text = log_file.read_text()
    assert "replicate finished" in text
    assert "MainProcess" in text

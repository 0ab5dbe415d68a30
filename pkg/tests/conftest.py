import numpy as np
import pytest
import yaml

from fexpd.core.models.config import PriorConfig
from fexpd.core.models.spectral import FexpModel, TruthSpec
from fexpd.core.settings import reset_config
from fexpd.core.simulate import sample_path


@pytest.fixture(autouse=True)
def fresh_config():
    reset_config()
    yield
    reset_config()


@pytest.fixture
def white_truth() -> TruthSpec:
    """f = 1, so gamma(0) = 2 pi and gamma(h) = 0 for h != 0."""
    return TruthSpec(d_o=0.0, beta=3.0, L_o=1.0)


@pytest.fixture
def fexp_truth() -> TruthSpec:
    return TruthSpec(
        d_o=0.25,
        beta=3.0,
        L_o=1.0,
        rule={"kind": "finite", "coefficients": [0.1, 0.05]},
    )


@pytest.fixture
def power_truth() -> TruthSpec:
    return TruthSpec(d_o=0.2, beta=3.0, L_o=100.0, rule={"kind": "power_law"})


@pytest.fixture
def fexp_model() -> FexpModel:
    return FexpModel.from_theta(0.25, [0.1, 0.3, -0.2])


@pytest.fixture
def white_path(white_truth):
    return sample_path(white_truth, 256, seed=11)


@pytest.fixture
def point_prior_config() -> PriorConfig:
    """Prior C whose k-law puts all its mass on k = 0."""
    return PriorConfig(
        kind="C", beta=3.0, L=100.0, k_law={"kind": "poisson", "lam": 0.0}
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def write_config(tmp_path):
    """Write an AppConfig dict as YAML and return its path."""

    def _write(experiment: dict, name: str = "config.yaml") -> str:
        data = {
            "logger": {"level": "WARNING"},
            "experiment": {
                "output_dir": str(tmp_path / "out"),
                "jobs": 1,
                **experiment,
            },
        }
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data), encoding="utf-8")
        return str(path)

    return _write

import numpy as np
import pytest

from fexpd.core.inference.posterior import level_key, posterior_d, summarise
from fexpd.core.inference.priors import Prior
from fexpd.core.inference.sampler import mh_within_k
from fexpd.core.models.config import LikelihoodKind, PriorConfig
from fexpd.core.models.results import PosteriorChain
from fexpd.core.simulate import sample_path
from fexpd.core.utils import chain_seed

WHITTLE = LikelihoodKind.WHITTLE


def _chain(k: int, d: np.ndarray) -> PosteriorChain:
    return PosteriorChain(
        k=k,
        d=d,
        theta=np.zeros((len(d), k + 1)),
        log_post=np.zeros(len(d)),
        acceptance={},
        scales={},
        seed=k,
        warmup=0,
    )


@pytest.fixture
def short_path(fexp_truth):
    return sample_path(fexp_truth, 128, seed=17)


def test_level_key():
    assert level_key(0.9) == "0.9"
    assert level_key(0.95) == "0.95"


def test_summarise_weights_chains():
    a = _chain(0, np.zeros(100))
    b = _chain(1, np.ones(400))
    summary = summarise([a, b], {0: 0.75, 1: 0.25}, credible_levels=[0.9])
    assert summary.d_mean == pytest.approx(0.25)
    assert summary.n_draws == 500
    assert summary.credible["0.9"] == (0.0, 1.0)
    assert summary.covers(0.5, 0.9)


def test_sieve_prior_single_chain(short_path, fexp_truth):
    prior = Prior.resolve(PriorConfig(kind="A", L=10.0), 128, fexp_truth)
    summary, chains = posterior_d(short_path, prior, 1000, seed=3, likelihood=WHITTLE)
    assert len(chains) == 1
    assert chains[0].k == prior.k_sieve
    assert summary.k_weights == {prior.k_sieve: 1.0}
    assert set(summary.credible) == {"0.9", "0.95"}
    lo, hi = summary.credible["0.95"]
    assert lo <= summary.d_mean <= hi
    assert summary.log_evidence == {}


def test_point_k_law_matches_fixed_k(short_path, fexp_truth, point_prior_config):
    prior = Prior.resolve(point_prior_config, 128, fexp_truth)
    summary, chains = posterior_d(short_path, prior, 1000, seed=8, likelihood=WHITTLE)
    direct = mh_within_k(
        short_path, prior, 0, 1000, chain_seed(8, 0), likelihood=WHITTLE
    )
    assert summary.k_weights == {0: 1.0}
    np.testing.assert_array_equal(chains[0].d, direct.d)
    assert summary.d_mean == pytest.approx(direct.d.mean())


def test_prior_C_mixture(short_path, fexp_truth):
    config = PriorConfig(kind="C", L=10.0, k_law={"kind": "poisson", "lam": 1.0})
    prior = Prior.resolve(config, 128, fexp_truth)
    assert prior.k_max == 2
    summary, chains = posterior_d(short_path, prior, 1000, seed=8, likelihood=WHITTLE)
    assert [c.k for c in chains] == [0, 1, 2]
    assert [c.seed for c in chains] == [8, 9, 10]
    assert sum(summary.k_weights.values()) == pytest.approx(1.0)
    assert set(summary.log_evidence) == {0, 1, 2}
    assert all(0.0 <= w <= 1.0 for w in summary.k_weights.values())
    assert summary.n_draws == sum(c.size for c in chains)

import hashlib
import json
from typing import Any

import numpy as np

from fexpd.core.models.config import ExperimentConfig, RngKind

# Fields that change where or how fast a run happens, not what it computes.
_HASH_EXCLUDE = {"output_dir", "jobs"}


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(config: ExperimentConfig) -> str:
    payload = config.model_dump(mode="json", exclude=_HASH_EXCLUDE)
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()[:16]


def replicate_seed(base: int, stride: int, replicate: int) -> int:
    """Seed of replicate r; streams of distinct replicates never overlap."""
    return base + replicate * stride


def chain_seed(seed: int, k: int) -> int:
    return seed + k


def make_rng(seed: int, kind: RngKind = RngKind.PHILOX) -> np.random.Generator:
    if kind == RngKind.PHILOX:
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.PCG64(seed))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0

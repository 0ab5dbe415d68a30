from fexpd.core.inference.posterior import posterior_d
from fexpd.core.inference.priors import Prior
from fexpd.core.models.spectral import FexpModel, TruthSpec
from fexpd.core.simulate import sample_path

__all__ = ["FexpModel", "Prior", "TruthSpec", "posterior_d", "sample_path"]

from .base import TargetEvaluationError, TargetModel, TemperedTarget, tempered_log_density
from .gprior import GPriorTarget, enumerate_psi, gprior_log_density
from .io import (
    DataFormatError,
    generate_icefloe_image,
    generate_mixture_data,
    load_grid_image,
    load_mixture_data,
    load_pollution_data,
)
from .ising import IsingTarget, ising_counts, ising_delta, ising_log_density
from .mixture import MixturePosteriorTarget, mixture_log_density
from .toy import Bimodal1D, FiniteTarget
from .trimodal import TrimodalTarget, trimodal_log_density

TARGETS = {
    "trimodal": TrimodalTarget,
    "gprior": GPriorTarget,
    "mixture": MixturePosteriorTarget,
    "ising": IsingTarget,
    "bimodal1d": Bimodal1D,
}

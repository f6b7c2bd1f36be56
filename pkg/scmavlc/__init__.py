__version__ = "1.0.0"

from .model import (
    CodebookSet,
    SystemParams,
    build_factor_graph,
    codeword,
    enumerate_superimposed,
    mapping_from_graph,
    power,
    scale_codebook_set,
)
from .metrics import (
    StackedVector,
    epd_ellipses,
    logsumexp_gradient,
    logsumexp_objective,
    pairwise_report,
    red,
)
from .designer import DesignConfig, design
from .decoder import joint_map_bruteforce, max_log_mpa, mpa_linear, op_counts
from .simulator import add_idgn, analytical_ber, pep_idgn, simulate_ber, sweep

__all__ = (
    "CodebookSet",
    "SystemParams",
    "build_factor_graph",
    "codeword",
    "enumerate_superimposed",
    "mapping_from_graph",
    "power",
    "scale_codebook_set",
    "StackedVector",
    "epd_ellipses",
    "logsumexp_gradient",
    "logsumexp_objective",
    "pairwise_report",
    "red",
    "DesignConfig",
    "design",
    "joint_map_bruteforce",
    "max_log_mpa",
    "mpa_linear",
    "op_counts",
    "add_idgn",
    "analytical_ber",
    "pep_idgn",
    "simulate_ber",
    "sweep",
)

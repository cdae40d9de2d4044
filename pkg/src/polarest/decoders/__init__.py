from .dscf import DscfConfig, dscf_decode, flip_candidate_set, flip_metric
from .kernels import check_node, path_metric_increment, variable_node
from .sc import ScTrace, sc_decode
from .scl import RELIABILITY_MAX, SclTrace, list_contains, scl_decode, stage_reliability

__all__ = [
    "DscfConfig", "dscf_decode", "flip_candidate_set", "flip_metric",
    "check_node", "path_metric_increment", "variable_node",
    "ScTrace", "sc_decode",
    "RELIABILITY_MAX", "SclTrace", "list_contains", "scl_decode", "stage_reliability",
]

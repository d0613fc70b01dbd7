"""Fisher information for joint source/destination position and orientation
estimation over a single MIMO link, under near- and far-field models."""

from .config import RunConfig, load_config, parse_config
from .derivs import ParamBlock, finite_difference_jacobian, jacobian_stack
from .errors import ConfigError, DegenerateGeometryError, InvalidArgumentError
from .fisher import assemble_fim, crb, efim, identifiability, oeb, peb
from .geometry import EulerAngles, Pose, rotation_matrix
from .harness import CaseId, appendix_check, build_table, run_case, sweep_nu, verify_derivatives
from .signal import Regime, Scenario

__version__ = "0.1.0"

__all__ = [
    "CaseId",
    "ConfigError",
    "DegenerateGeometryError",
    "EulerAngles",
    "InvalidArgumentError",
    "ParamBlock",
    "Pose",
    "Regime",
    "RunConfig",
    "Scenario",
    "appendix_check",
    "assemble_fim",
    "build_table",
    "crb",
    "efim",
    "finite_difference_jacobian",
    "identifiability",
    "jacobian_stack",
    "load_config",
    "oeb",
    "parse_config",
    "peb",
    "rotation_matrix",
    "run_case",
    "sweep_nu",
    "verify_derivatives",
]

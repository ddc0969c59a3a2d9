"""Switching Lyapunov control of an open (Lindblad) qubit in Bloch form."""
from .bloch import Channel, OpenSystemSpec, SystemModel, build_system, lindblad_rhs
from .certificates import (
    FtcsCertificate,
    FtsCertificate,
    eta_bound,
    ftcs_check,
    ftcs_condition,
    fts_check,
    verify_fts_trajectory,
    verify_ftcs_trajectory,
)
from .engine import PolicyKind, SwitchingPolicy, Trigger, simulate, step, switch_predicate
from .errors import *  # noqa: F401,F403
from .lyapunov import ControllerSpec, ErrorState, Family, GammaSchedule, Mode, control, lyapunov_value
from .pauli import bloch_fidelity, bloch_to_density, density_to_bloch, fidelity, pauli_coefficients
from .scenarios import ScenarioConfig, compare_policies, load_config, load_preset, run_scenario

__version__ = "0.1.0"

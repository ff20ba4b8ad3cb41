"""Damping-robust integral action for port-Hamiltonian systems."""

from .closed_loop import (
    AugmentedState,
    ClosedLoopSystem,
    equilibrium,
    field_direct,
    field_structured,
    from_w,
    grad_W,
    hamiltonian_cl,
    lyapunov_W,
    lyapunov_Wl,
    to_w,
)
from .controllers import (
    ControllerState,
    LegacyIAGains,
    RobustIAGains,
    legacy_ia_control,
    legacy_ia_controller_dynamics,
    robust_ia_control,
    robust_ia_controller_dynamics,
    validate_gains,
)
from .ph import (
    Dimensions,
    DisturbanceSignal,
    PhPlant,
    PlantState,
    StructureMatrices,
    plant_output,
    plant_vector_field,
    quadratic_plant,
    validate_structure,
)
from .sim import IntegratorConfig, Trajectory, integrate

__version__ = "0.1.0"

__all__ = [
    "AugmentedState",
    "ClosedLoopSystem",
    "equilibrium",
    "field_direct",
    "field_structured",
    "from_w",
    "grad_W",
    "hamiltonian_cl",
    "lyapunov_W",
    "lyapunov_Wl",
    "to_w",
    "ControllerState",
    "LegacyIAGains",
    "RobustIAGains",
    "legacy_ia_control",
    "legacy_ia_controller_dynamics",
    "robust_ia_control",
    "robust_ia_controller_dynamics",
    "validate_gains",
    "Dimensions",
    "DisturbanceSignal",
    "PhPlant",
    "PlantState",
    "StructureMatrices",
    "plant_output",
    "plant_vector_field",
    "quadratic_plant",
    "validate_structure",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
]

from quadlab.dynamics.sim import (  # noqa: F401
    ActuatorCommand,
    RobotState,
    Simulation,
    SimulationDiverged,
    active_command_index,
    total_energy,
)
from quadlab.dynamics.model import SimModel, build_model  # noqa: F401

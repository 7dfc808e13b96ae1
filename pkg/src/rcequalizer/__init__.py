"""Simulator for an online-trained ring-reservoir channel equaliser."""
from .channel import ChannelParams, ChannelSchedule, transmit
from .evaluator import decide, ser, windowed_ser
from .pipeline import SimulationResult, simulate
from .reservoir import ReservoirConfig, reservoir_init, reservoir_step, run_states
from .trainer import TrainerConfig, trainer_init

__all__ = [
    "ChannelParams", "ChannelSchedule", "transmit", "decide", "ser", "windowed_ser", "SimulationResult",
    "simulate", "ReservoirConfig", "reservoir_init", "reservoir_step", "run_states", "TrainerConfig",
    "trainer_init",
]
__version__ = "0.1.0"

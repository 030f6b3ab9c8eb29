"""Finite-size key rates for squeezed-state and coherent-state CV-QKD over
fading free-space channels."""

from .fading import (ChannelStats, SubChannelEnsemble, ensemble_from_samples, fixed_channel,
                     stats_from_ensemble)
from .finite_size import BlockPlan, EpsilonBudget, default_budget, key_length
from .protocol import (ProtocolParams, holevo_direct, holevo_purification, mutual_information,
                       security_quantities)
from .config import RunConfig, load_config

__all__ = [
    "BlockPlan", "ChannelStats", "EpsilonBudget", "ProtocolParams", "RunConfig",
    "SubChannelEnsemble", "default_budget", "ensemble_from_samples", "fixed_channel",
    "holevo_direct", "holevo_purification", "key_length", "load_config", "mutual_information",
    "security_quantities", "stats_from_ensemble",
]

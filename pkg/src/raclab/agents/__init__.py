"""Deep ensemble actor-critic agents."""
from raclab.agents.checkpoint import load_agent, save_agent
from raclab.agents.config import VARIANTS, AgentConfig
from raclab.agents.losses import (
    critic_loss,
    intarget_target,
    punished_target,
    sac_actor_loss,
    td3_actor_loss,
    temperature_loss,
)
from raclab.agents.rac import RacAgent, UpdateInfo

__all__ = [
    "AgentConfig", "VARIANTS", "RacAgent", "UpdateInfo", "save_agent", "load_agent",
    "punished_target", "intarget_target", "critic_loss", "sac_actor_loss",
    "td3_actor_loss", "temperature_loss",
]

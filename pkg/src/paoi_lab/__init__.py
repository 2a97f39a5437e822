"""Peak age of information of a UAV-assisted IoT uplink: stochastic-geometry
analysis and Monte-Carlo simulation."""

from .scenario import ENVIRONMENTS, Scenario, ScenarioError, environment_scenario

__all__ = ["ENVIRONMENTS", "Scenario", "ScenarioError", "environment_scenario"]
__version__ = "0.1.0"

"""Energy-regulated passive velocity field control for human-robot co-carrying."""

from .sim import ScenarioConfig, compare_table, table_configs, run_scenario

__all__ = ["ScenarioConfig", "run_scenario", "compare_table", "table_configs"]
__version__ = "0.1.0"

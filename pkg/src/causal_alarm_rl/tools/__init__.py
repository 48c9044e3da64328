"""
Persistence and analysis helpers for experiment outputs.
"""

from causal_alarm_rl.tools.analysis_tools import AnalysisTools
from causal_alarm_rl.tools.db_tools import RunStoreTools
from causal_alarm_rl.tools.trajectory_tools import TrajectoryTools

__all__ = ["AnalysisTools", "RunStoreTools", "TrajectoryTools"]

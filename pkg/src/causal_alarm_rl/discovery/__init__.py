"""Intervention-driven causal structure learning."""

from causal_alarm_rl.discovery.att import AttMatrix, estimate_att
from causal_alarm_rl.discovery.buffer import Buffer, InterventionLog, as_log
from causal_alarm_rl.discovery.counterfactual import CounterfactualModel, fit_counterfactual
from causal_alarm_rl.discovery.orientation import break_cycles, orient
from causal_alarm_rl.discovery.poisson import PoissonRateFit, fit_linear_poisson
from causal_alarm_rl.discovery.scoring import PoissonStructureScore, score_graph
from causal_alarm_rl.discovery.structure import prune, update_structure

__all__ = [
    "AttMatrix",
    "Buffer",
    "CounterfactualModel",
    "InterventionLog",
    "PoissonRateFit",
    "PoissonStructureScore",
    "as_log",
    "break_cycles",
    "estimate_att",
    "fit_counterfactual",
    "fit_linear_poisson",
    "orient",
    "prune",
    "score_graph",
    "update_structure",
]

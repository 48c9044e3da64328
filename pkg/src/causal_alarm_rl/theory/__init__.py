"""Numeric checks of the masked-policy bounds on small tabular MDPs."""

from causal_alarm_rl.theory.bounds import (
    BoundCheck,
    SuiteReport,
    lemma1_check,
    mask_discrepancy,
    run_lemma1_suite,
    run_theorem3_suite,
    theorem3_check,
)
from causal_alarm_rl.theory.tabular import (
    MaskedTabularPolicy,
    TabularMDP,
    ValueResult,
    exact_value,
    masked_policy_iteration,
    random_mask,
    random_policy,
    random_tabular_mdp,
    tv_distance,
)

__all__ = [
    "BoundCheck",
    "MaskedTabularPolicy",
    "SuiteReport",
    "TabularMDP",
    "ValueResult",
    "exact_value",
    "lemma1_check",
    "mask_discrepancy",
    "masked_policy_iteration",
    "random_mask",
    "random_policy",
    "random_tabular_mdp",
    "run_lemma1_suite",
    "run_theorem3_suite",
    "theorem3_check",
    "tv_distance",
]

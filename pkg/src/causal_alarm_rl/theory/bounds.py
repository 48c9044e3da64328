"""
Executable checks of the masked-policy bounds.

The per-state mask discrepancy is ``||m_true - m_est||_1`` plus the number of
actions unmasked under both masks. The policy-distance bound is half of it;
the value-gap bound is ``R_max / (1 - γ)²`` times its maximum over states.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from causal_alarm_rl.errors import InvalidArgumentError
from causal_alarm_rl.theory.tabular import (
    MaskedTabularPolicy,
    TabularMDP,
    exact_value,
    masked_policy_iteration,
    random_mask,
    random_policy,
    random_tabular_mdp,
    tv_distance,
)

LEMMA_TOLERANCE = 1e-12
THEOREM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else 0.0


@dataclass(frozen=True)
class SuiteReport:
    passed: int
    total: int
    tightest_ratio: float

    @property
    def all_passed(self) -> bool:
        return self.passed == self.total


def mask_discrepancy(mask_true: np.ndarray, mask_est: np.ndarray) -> np.ndarray:
    """Per-state L1 mask difference plus jointly-unmasked count."""
    a = np.asarray(mask_true).astype(bool)
    b = np.asarray(mask_est).astype(bool)
    return (a != b).sum(axis=-1) + (a & b).sum(axis=-1)


def lemma1_check(pol_true: MaskedTabularPolicy, pol_est: MaskedTabularPolicy, s: int) -> BoundCheck:
    if pol_true.mask.shape != pol_est.mask.shape:
        raise InvalidArgumentError("policies act on different action spaces")
    lhs = tv_distance(pol_true.probs[s], pol_est.probs[s])
    rhs = 0.5 * float(mask_discrepancy(pol_true.mask[s], pol_est.mask[s]))
    return BoundCheck(lhs=lhs, rhs=rhs, holds=lhs <= rhs + LEMMA_TOLERANCE)


def theorem3_check(
    mdp: TabularMDP, pol_true: MaskedTabularPolicy, pol_est: MaskedTabularPolicy
) -> BoundCheck:
    """Value gap of the estimated masked policy against the true masked-optimal one."""
    gap = exact_value(mdp, pol_true).value - exact_value(mdp, pol_est).value
    worst = float(mask_discrepancy(pol_true.mask, pol_est.mask).max())
    bound = mdp.r_max / (1.0 - mdp.gamma) ** 2 * worst
    return BoundCheck(lhs=gap, rhs=bound, holds=gap <= bound + THEOREM_TOLERANCE)


def run_lemma1_suite(instances: int = 1000, rng: Optional[np.random.Generator] = None) -> SuiteReport:
    rng = rng or np.random.default_rng(0)
    passed, tightest = 0, 0.0
    for _ in range(instances):
        S = int(rng.integers(1, 13))
        A = int(rng.integers(2, 7))
        pol_true = MaskedTabularPolicy(random_policy(rng, S, A), random_mask(rng, S, A))
        pol_est = MaskedTabularPolicy(random_policy(rng, S, A), random_mask(rng, S, A))
        check = lemma1_check(pol_true, pol_est, int(rng.integers(S)))
        passed += check.holds
        tightest = max(tightest, check.ratio)
    logger.info(f"Policy-distance bound held in {passed}/{instances} instances")
    return SuiteReport(passed=passed, total=instances, tightest_ratio=tightest)


def run_theorem3_suite(instances: int = 500, rng: Optional[np.random.Generator] = None) -> SuiteReport:
    rng = rng or np.random.default_rng(0)
    passed, tightest = 0, 0.0
    for _ in range(instances):
        mdp = random_tabular_mdp(rng)
        S, A = mdp.num_states, mdp.num_actions
        pol_true = masked_policy_iteration(mdp, random_mask(rng, S, A))
        pol_est = MaskedTabularPolicy(random_policy(rng, S, A), random_mask(rng, S, A))
        check = theorem3_check(mdp, pol_true, pol_est)
        passed += check.holds
        tightest = max(tightest, check.ratio)
    logger.info(f"Value-gap bound held in {passed}/{instances} instances")
    return SuiteReport(passed=passed, total=instances, tightest_ratio=tightest)

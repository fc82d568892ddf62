"""Utility-table arithmetic and equilibrium condition checks for the
audit-backed voting game.

Rows of the utility table (block committed), per role and action:

    proposer   C: (1-eta_b)*B        O: 0   D: -stk_b
    oracle     C: eta_b*B/k - r_m - c_s
               O: 0
               D: -p_a*stk_o + (1-p_a)*eta_b*B/k - r_m
    committee  C: k*r_m - c_m        O: 0   D: -stk_m

When no block commits (the all-offline context) a cooperating oracle node
still pays its verification cost and gains nothing.

The all-cooperate check returns the two binding constraints as slacks from
the table itself (cooperate beats defect, cooperate beats offline), so it
always agrees with brute-force deviation enumeration. A unit-reward
shorthand of the audit condition, p_a*(stk+1) > c_s, is reported
alongside for reference but does not drive the verdict.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .errors import ParameterError


class Role(enum.Enum):
    PROPOSER = "proposer"
    ORACLE = "oracle"
    COMMITTEE = "committee"


class Action(enum.Enum):
    COOPERATE = "C"
    OFFLINE = "O"
    DEFECT = "D"


@dataclass(frozen=True)
class IncentiveParams:
    p_audit: float  # p_a
    stake_oracle: float  # stk_o
    stake_committee: float  # stk_m
    stake_proposer: float  # stk_b
    submission_fee: float  # r_m
    block_reward: float  # B
    reward_fraction: float  # eta_b, share of the reward paid to oracle nodes
    verify_cost: float  # c_s
    aggregate_cost: float  # c_m
    n_signatures: int  # k, signatures aggregated in the committed signature

    def __post_init__(self):
        if not 0 <= self.p_audit <= 1:
            raise ParameterError("p_audit must lie in [0, 1]")
        for name in (
            "stake_oracle",
            "stake_committee",
            "stake_proposer",
            "submission_fee",
            "block_reward",
            "reward_fraction",
            "verify_cost",
            "aggregate_cost",
        ):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        if self.n_signatures < 1:
            raise ParameterError("n_signatures must be >= 1")

    @property
    def oracle_reward(self) -> float:
        return self.reward_fraction * self.block_reward / self.n_signatures


def expected_utility(role: Role, action: Action, params: IncentiveParams) -> float:
    """Exact utility-table entry, block-committed context."""
    if action is Action.OFFLINE:
        return 0.0
    if role is Role.PROPOSER:
        if action is Action.COOPERATE:
            return (1 - params.reward_fraction) * params.block_reward
        return -params.stake_proposer
    if role is Role.ORACLE:
        if action is Action.COOPERATE:
            return params.oracle_reward - params.submission_fee - params.verify_cost
        return (
            -params.p_audit * params.stake_oracle
            + (1 - params.p_audit) * params.oracle_reward
            - params.submission_fee
        )
    if action is Action.COOPERATE:
        return params.n_signatures * params.submission_fee - params.aggregate_cost
    return -params.stake_committee


def oracle_utility_uncommitted(action: Action, params: IncentiveParams) -> float:
    """Oracle-node utility when the block never commits: cooperation still
    costs verification, other actions are free and earn nothing."""
    return -params.verify_cost if action is Action.COOPERATE else 0.0


@dataclass(frozen=True)
class EquilibriumCheck:
    is_equilibrium: bool
    binding_constraints: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "is_equilibrium": self.is_equilibrium,
                "binding_constraints": self.binding_constraints,
            },
            sort_keys=True,
            indent=2,
        )


def check_allC_equilibrium(params: IncentiveParams) -> EquilibriumCheck:
    """All-cooperate is an equilibrium for oracle nodes iff cooperation
    strictly beats both defection and going offline."""
    c = expected_utility(Role.ORACLE, Action.COOPERATE, params)
    d = expected_utility(Role.ORACLE, Action.DEFECT, params)
    audit_slack = c - d  # = p_a*(stk_o + reward) - c_s
    reward_slack = c  # = reward - r_m - c_s, offline pays zero
    printed_audit = params.p_audit * (params.stake_oracle + 1) - params.verify_cost
    return EquilibriumCheck(
        is_equilibrium=bool(audit_slack > 0 and reward_slack > 0),
        binding_constraints={
            "audit_deterrence_slack": audit_slack,
            "participation_slack": reward_slack,
            "printed_audit_form": printed_audit,
        },
    )


def check_allO_equilibrium(params: IncentiveParams) -> EquilibriumCheck:
    """All-offline is always an equilibrium: a lone deviator cannot change
    the consensus, so cooperating only burns the verification cost."""
    coop = oracle_utility_uncommitted(Action.COOPERATE, params)
    defect = oracle_utility_uncommitted(Action.DEFECT, params)
    return EquilibriumCheck(
        is_equilibrium=bool(coop <= 0 and defect <= 0),
        binding_constraints={
            "cooperate_gain": coop,
            "defect_gain": defect,
        },
    )


def best_oracle_deviation(
    profile: str, params: IncentiveParams
) -> tuple[Action, float]:
    """Brute-force best response of one oracle node against All-C or All-O.

    Against All-C the block still commits whatever one node does (the
    profile check assumes the threshold is met without the deviator);
    against All-O nothing commits either way.
    """
    if profile == "all_c":
        utilities = {a: expected_utility(Role.ORACLE, a, params) for a in Action}
    elif profile == "all_o":
        utilities = {a: oracle_utility_uncommitted(a, params) for a in Action}
    else:
        raise ParameterError(f"unknown profile {profile!r}")
    best = max(utilities, key=lambda a: (utilities[a], a.value))
    return best, utilities[best]

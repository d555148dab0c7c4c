"""Multi-arm platform monitoring with a shared control, per-arm e-processes,
e-BH multiplicity control, and the hybrid GS + e-process dual-stream monitor.

Each experimental arm keeps its own cursor into the shared control ledger, so
several arms can be tested against the same control stream; the dependence
this induces across arms is why the multiplicity layer is e-BH, which is
valid under arbitrary dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .comparators import LookSchedule, TwoArmCounts, wald_z, obf_boundary_at
from .core import (
    BettingEProcess,
    ConfigurationError,
    FixedBet,
    OutcomePair,
    av_pvalue,
    eprocess_new,
    eprocess_update,
)
from .futility import (
    FutilityConfig,
    ReciprocalEProcess,
    futility_eprocess_new,
    futility_eprocess_update,
    futility_signal,
)

ACTIVE = "active"
GRADUATED = "graduated"
DROPPED = "dropped"
FROZEN = "frozen"


class StateError(RuntimeError):
    """Operation not permitted in the arm's or session's current state."""


@dataclass(frozen=True)
class ArmState:
    arm_id: str
    status: str
    eprocess: BettingEProcess
    alpha_k: float
    futility: Optional[ReciprocalEProcess] = None

    @property
    def n(self) -> int:
        return self.eprocess.n


@dataclass(frozen=True)
class PlatformState:
    fdr_alpha: float
    efficacy_alpha: float
    planned_arms: int
    control_ledger: tuple[int, ...] = ()
    arms: dict = field(default_factory=dict)


def platform_new(
    fdr_alpha: float = 0.05, efficacy_alpha: float = 0.025, planned_arms: int = 1
) -> PlatformState:
    if not 0.0 < fdr_alpha < 1.0:
        raise ConfigurationError(f"fdr_alpha must be in (0,1), got {fdr_alpha}")
    if planned_arms < 1:
        raise ConfigurationError("planned_arms must be at least 1")
    return PlatformState(fdr_alpha, efficacy_alpha, planned_arms)


def platform_add_arm(
    state: PlatformState,
    arm_id: str,
    lam: float,
    alpha_k: Optional[float] = None,
    futility_config: Optional[FutilityConfig] = None,
) -> PlatformState:
    """Register a new arm with a fresh e-process (wealth 1).

    ``alpha_k`` defaults to an equal split of the efficacy budget over the
    planned number of arms, fixed at entry.
    """
    if arm_id in state.arms:
        raise StateError(f"arm {arm_id!r} already exists")
    if alpha_k is None:
        alpha_k = state.efficacy_alpha / state.planned_arms
    committed = sum(a.alpha_k for a in state.arms.values() if a.status != DROPPED)
    if committed + alpha_k > state.efficacy_alpha + 1e-12:
        raise ConfigurationError(
            f"alpha_k={alpha_k} would push the committed budget past "
            f"{state.efficacy_alpha}"
        )
    arm = ArmState(
        arm_id=arm_id,
        status=ACTIVE,
        eprocess=eprocess_new(FixedBet(lam), alpha_k),
        alpha_k=alpha_k,
        futility=futility_eprocess_new(futility_config) if futility_config else None,
    )
    arms = dict(state.arms)
    arms[arm_id] = arm
    return replace(state, arms=arms)


def platform_observe_control(state: PlatformState, x_control: int) -> PlatformState:
    """Append one control outcome to the shared ledger."""
    if x_control not in (0, 1):
        raise ValueError("outcomes must be 0 or 1")
    return replace(state, control_ledger=state.control_ledger + (x_control,))


def _advance_arm(arm: ArmState, pair: OutcomePair) -> ArmState:
    ep = eprocess_update(arm.eprocess, pair)
    fut = arm.futility
    if fut is not None:
        fut = futility_eprocess_update(fut, pair)
    status = arm.status
    if ep.log_wealth >= -math.log(arm.alpha_k):
        status = GRADUATED
    elif fut is not None and futility_signal(fut):
        status = DROPPED
    return replace(arm, eprocess=ep, futility=fut, status=status)


def platform_update(state: PlatformState, arm_id: str, pair: OutcomePair) -> PlatformState:
    """Consume a (treatment, control) pair for one arm; the control outcome
    also joins the shared ledger."""
    arm = state.arms.get(arm_id)
    if arm is None:
        raise StateError(f"unknown arm {arm_id!r}")
    if arm.status != ACTIVE:
        raise StateError(f"arm {arm_id!r} is {arm.status}; its e-process is frozen")
    arms = dict(state.arms)
    arms[arm_id] = _advance_arm(arm, pair)
    return replace(
        state,
        arms=arms,
        control_ledger=state.control_ledger + (pair.x_control,),
    )


def platform_update_arm(state: PlatformState, arm_id: str, x_treatment: int) -> PlatformState:
    """Pair a treatment outcome with the arm's next unconsumed control
    outcome from the shared ledger."""
    arm = state.arms.get(arm_id)
    if arm is None:
        raise StateError(f"unknown arm {arm_id!r}")
    if arm.status != ACTIVE:
        raise StateError(f"arm {arm_id!r} is {arm.status}; its e-process is frozen")
    if arm.n >= len(state.control_ledger):
        raise StateError(f"no unconsumed control outcome for arm {arm_id!r}")
    pair = OutcomePair(x_treatment, state.control_ledger[arm.n])
    arms = dict(state.arms)
    arms[arm_id] = _advance_arm(arm, pair)
    return replace(state, arms=arms)


def platform_freeze_arm(state: PlatformState, arm_id: str) -> PlatformState:
    arm = state.arms.get(arm_id)
    if arm is None:
        raise StateError(f"unknown arm {arm_id!r}")
    arms = dict(state.arms)
    arms[arm_id] = replace(arm, status=FROZEN)
    return replace(state, arms=arms)


def ebh(evalues: Sequence[float], fdr_alpha: float) -> list[int]:
    """e-BH step-up rule: with e-values sorted descending, find the largest
    k with e_[k] >= K/(fdr_alpha*k) and reject the k largest. Returns the
    indices of rejected hypotheses in stable input order."""
    if not 0.0 < fdr_alpha < 1.0:
        raise ValueError(f"fdr_alpha must be in (0,1), got {fdr_alpha}")
    es = list(evalues)
    if not es:
        return []
    if any(e < 0 for e in es):
        raise ValueError("e-values are nonnegative")
    K = len(es)
    order = sorted(range(K), key=lambda i: (-es[i], i))
    k_hat = 0
    for rank, i in enumerate(order, start=1):
        if es[i] >= K / (fdr_alpha * rank):
            k_hat = rank
    return sorted(order[:k_hat])


def platform_ebh(state: PlatformState) -> list[str]:
    """e-BH over the current per-arm e-values (frozen arms keep their last
    value); returns rejected arm ids."""
    ids = sorted(state.arms)
    es = [math.exp(state.arms[i].eprocess.log_wealth) for i in ids]
    return [ids[j] for j in ebh(es, state.fdr_alpha)]


def platform_snapshot(state: PlatformState) -> dict:
    return {
        "schema": 1,
        "fdr_alpha": state.fdr_alpha,
        "arms": [
            {
                "id": a.arm_id,
                "status": a.status,
                "n": a.n,
                "logE": a.eprocess.log_wealth,
                "alpha_k": a.alpha_k,
            }
            for a in (state.arms[i] for i in sorted(state.arms))
        ],
        "ebh_rejections": platform_ebh(state),
    }


# --- hybrid monitoring ------------------------------------------------------

@dataclass(frozen=True)
class HybridLookRow:
    look: int
    n: int
    info_frac: float
    delta_hat: float
    z: float
    gs_bound: float
    gs_reject: bool
    log_e: float
    e_reject: bool
    av_p: float


def hybrid_monitor(
    pairs: Iterable[OutcomePair],
    schedule: LookSchedule,
    c: float,
    lam: float,
    alpha: float = 0.025,
) -> list[HybridLookRow]:
    """Evaluate a group sequential boundary and an e-process on the same
    stream, one row per interim look. The always-valid p-value uses the
    per-pair running supremum of the wealth, not just the look values."""
    looks = set(int(t) for t in schedule.look_times())
    ep = eprocess_new(FixedBet(lam), alpha)
    s_t = s_c = 0
    rows: list[HybridLookRow] = []
    look_no = 0
    for pair in pairs:
        ep = eprocess_update(ep, pair)
        s_t += pair.x_treatment
        s_c += pair.x_control
        n = ep.n
        if n in looks:
            look_no += 1
            t = n / schedule.n_max
            z = wald_z(TwoArmCounts(s_t, n, s_c, n))
            bound = obf_boundary_at(c, t)
            rows.append(
                HybridLookRow(
                    look=look_no,
                    n=n,
                    info_frac=t,
                    delta_hat=(s_t - s_c) / n,
                    z=z,
                    gs_bound=bound,
                    gs_reject=bool(z >= bound),
                    log_e=ep.log_wealth,
                    e_reject=bool(ep.log_wealth >= math.log(1.0 / alpha)),
                    av_p=av_pvalue(ep),
                )
            )
    return rows

"""E-process primitives: betting martingale for paired binary outcomes,
thresholds, always-valid p-values, calibrators, and e-value combination.

The wealth process starts at 1 and multiplies by ``1 + lam * D`` per patient
pair, where ``D = x_treatment - x_control`` and the betting fraction ``lam``
is fixed before the pair is observed. All wealth arithmetic is carried in the
log domain so that long streams and product combinations cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Callable, Optional, Union


class ConfigurationError(ValueError):
    """Invalid configuration (alpha, betting fraction, grid, ...)."""


@dataclass(frozen=True)
class OutcomePair:
    """One binary outcome per arm for a single patient pair."""

    x_treatment: int
    x_control: int

    def __post_init__(self) -> None:
        if self.x_treatment not in (0, 1) or self.x_control not in (0, 1):
            raise ValueError("outcomes must be 0 or 1")

    @property
    def increment(self) -> int:
        """D = x_treatment - x_control, in {-1, 0, +1}."""
        return self.x_treatment - self.x_control


@dataclass(frozen=True)
class FixedBet:
    """Constant betting fraction in the open interval (0, 1)."""

    lam: float

    def __post_init__(self) -> None:
        if not 0.0 < self.lam < 1.0:
            raise ConfigurationError(f"betting fraction must be in (0,1), got {self.lam}")

    def initial_state(self) -> Any:
        return None

    def bet(self, state: Any) -> float:
        return self.lam

    def advance(self, state: Any, pair: OutcomePair) -> Any:
        return None


@dataclass(frozen=True)
class AdaptiveBet:
    """Betting fraction computed from the outcome prefix only.

    ``bet_fn(state)`` returns the fraction wagered on the *next* pair;
    ``advance_fn(state, pair)`` folds an observed pair into the carried
    state. The engine always calls ``bet`` before ``advance``, so the
    predictability requirement is structural, not trusted.
    """

    bet_fn: Callable[[Any], float]
    advance_fn: Callable[[Any, OutcomePair], Any]
    initial: Any = None
    name: str = "adaptive"

    def initial_state(self) -> Any:
        return self.initial

    def bet(self, state: Any) -> float:
        lam = float(self.bet_fn(state))
        if not 0.0 < lam < 1.0:
            raise ConfigurationError(f"adaptive rule produced lambda={lam} outside (0,1)")
        return lam

    def advance(self, state: Any, pair: OutcomePair) -> Any:
        return self.advance_fn(state, pair)


BettingStrategy = Union[FixedBet, AdaptiveBet]


@dataclass(frozen=True)
class BettingEProcess:
    """Streaming wealth state of the betting martingale.

    Updates return successor values; nothing is mutated in place. Trajectory
    retention is opt-in so simulation loops stay memory-flat.
    """

    strategy: BettingStrategy
    alpha: float
    n: int = 0
    log_wealth: float = 0.0
    running_sup_log_wealth: float = 0.0
    strategy_state: Any = None
    trajectory: Optional[tuple[tuple[int, float], ...]] = None

    @property
    def wealth(self) -> float:
        return math.exp(self.log_wealth)


def eprocess_new(
    strategy: BettingStrategy, alpha: float, keep_trajectory: bool = False
) -> BettingEProcess:
    """Fresh e-process with wealth 1 (log-wealth 0)."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must be in (0,1), got {alpha}")
    if not isinstance(strategy, (FixedBet, AdaptiveBet)):
        raise ConfigurationError(f"unsupported strategy {strategy!r}")
    return BettingEProcess(
        strategy=strategy,
        alpha=alpha,
        strategy_state=strategy.initial_state(),
        trajectory=() if keep_trajectory else None,
    )


def eprocess_update(state: BettingEProcess, pair: OutcomePair) -> BettingEProcess:
    """Consume one pair: the bet is fixed before the increment is read."""
    lam = state.strategy.bet(state.strategy_state)
    log_wealth = state.log_wealth + math.log1p(lam * pair.increment)
    sup = max(state.running_sup_log_wealth, log_wealth)
    traj = state.trajectory
    if traj is not None:
        traj = traj + ((state.n + 1, log_wealth),)
    return replace(
        state,
        n=state.n + 1,
        log_wealth=log_wealth,
        running_sup_log_wealth=sup,
        strategy_state=state.strategy.advance(state.strategy_state, pair),
        trajectory=traj,
    )


def eprocess_extend(state: BettingEProcess, pairs) -> BettingEProcess:
    """Fold a batch of pairs in order."""
    for pair in pairs:
        state = eprocess_update(state, pair)
    return state


def eprocess_reject(state: BettingEProcess) -> bool:
    """Current wealth >= 1/alpha, compared in the log domain."""
    return state.log_wealth >= -math.log(state.alpha)


def av_pvalue(state: BettingEProcess) -> float:
    """Always-valid p-value: 1 over the running supremum of the wealth."""
    return min(1.0, math.exp(-state.running_sup_log_wealth))


def combine_product(es) -> float:
    """Product of e-values (valid under independence / conditional validity).

    The independence requirement is the caller's contract; it is not checked.
    An empty collection returns the neutral element 1.
    """
    out = 1.0
    for e in es:
        if e < 0:
            raise ValueError(f"e-values are nonnegative, got {e}")
        out *= e
    return out


def combine_mean(es) -> float:
    """Arithmetic mean of e-values (valid under arbitrary dependence)."""
    es = list(es)
    if not es:
        raise ValueError("mean of zero e-values is undefined")
    for e in es:
        if e < 0:
            raise ValueError(f"e-values are nonnegative, got {e}")
    return sum(es) / len(es)


def calibrate_p_to_e(p: float, kappa: float = 0.5) -> float:
    """Power-family calibrator kappa * p**(kappa-1); integrates to exactly 1."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0,1], got {p}")
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must be in (0,1), got {kappa}")
    return kappa * p ** (kappa - 1.0)

"""Live monitoring sessions: outcome ledger, efficacy/futility e-processes,
confidence sequence, decision log, and atomic JSON persistence.

A session file stores only configuration and the outcome ledger; loading
replays the ledger through fresh component states, so persisted sessions
reproduce their in-memory counterparts exactly by construction.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .confseq import (
    ConfidenceSequenceState,
    confseq_interval,
    confseq_new,
    confseq_update,
)
from .core import (
    BettingEProcess,
    FixedBet,
    OutcomePair,
    av_pvalue,
    eprocess_new,
    eprocess_update,
)
from .design import DesignAlternative, grow_lambda
from .futility import (
    FutilityConfig,
    ReciprocalEProcess,
    futility_cs_check,
    futility_eprocess_new,
    futility_eprocess_update,
    futility_signal,
)
from .platform_trial import StateError

SESSION_SCHEMA = 1

CONTINUE = "continue"
REJECT_EFFICACY = "reject_efficacy"
SIGNAL_FUTILITY_CS = "signal_futility_cs"
SIGNAL_FUTILITY_RECIP = "signal_futility_recip"

_TERMINAL = (REJECT_EFFICACY, SIGNAL_FUTILITY_RECIP, SIGNAL_FUTILITY_CS)


class BatchFormatError(ValueError):
    """Batch CSV violates the schema or does not continue the ledger."""


@dataclass(frozen=True)
class MonitoringSession:
    session_id: str
    design: DesignAlternative
    lam: float
    cs_alpha: float
    efficacy: BettingEProcess
    cs: ConfidenceSequenceState
    futility_config: Optional[FutilityConfig]
    futility: Optional[ReciprocalEProcess]
    ledger: tuple[OutcomePair, ...] = ()
    decisions: tuple[tuple[int, str], ...] = ()

    @property
    def n(self) -> int:
        return len(self.ledger)

    @property
    def terminal(self) -> Optional[str]:
        for _, event in self.decisions:
            if event in _TERMINAL:
                return event
        return None


def session_new(
    session_id: str,
    design: DesignAlternative,
    lam: Optional[float] = None,
    cs_alpha: float = 0.05,
    futility_config: Optional[FutilityConfig] = None,
) -> MonitoringSession:
    """Fresh session; the betting fraction defaults to the growth-optimal
    value for the design alternative."""
    if lam is None:
        lam = grow_lambda(design)
    return MonitoringSession(
        session_id=session_id,
        design=design,
        lam=lam,
        cs_alpha=cs_alpha,
        efficacy=eprocess_new(FixedBet(lam), design.alpha),
        cs=confseq_new(cs_alpha),
        futility_config=futility_config,
        futility=futility_eprocess_new(futility_config) if futility_config else None,
    )


def _oriented(pair: OutcomePair, design: DesignAlternative) -> OutcomePair:
    """Relabel so the favorable increment is +1 under either direction."""
    if design.oriented_increment_sign() == 1:
        return pair
    return OutcomePair(pair.x_control, pair.x_treatment)


def session_update(
    session: MonitoringSession, pair: OutcomePair
) -> tuple[MonitoringSession, Optional[str]]:
    """Consume one pair; returns the successor session and a terminal event
    if this pair triggered one."""
    if session.terminal is not None:
        raise StateError(f"session is terminal: {session.terminal}")
    oriented = _oriented(pair, session.design)
    efficacy = eprocess_update(session.efficacy, oriented)
    cs = confseq_update(session.cs, oriented)
    futility = session.futility
    if futility is not None:
        futility = futility_eprocess_update(futility, oriented)
    out = replace(
        session,
        efficacy=efficacy,
        cs=cs,
        futility=futility,
        ledger=session.ledger + (pair,),
    )
    event = None
    if efficacy.log_wealth >= -math.log(session.design.alpha):
        event = REJECT_EFFICACY
    elif futility is not None and futility_signal(futility):
        event = SIGNAL_FUTILITY_RECIP
    elif session.futility_config is not None and futility_cs_check(
        cs, session.futility_config.delta_min
    ):
        event = SIGNAL_FUTILITY_CS
    if event is not None:
        out = replace(out, decisions=out.decisions + ((out.n, event),))
    return out, event


def session_update_batch(
    session: MonitoringSession, pairs: Iterable[OutcomePair]
) -> tuple[MonitoringSession, str, int]:
    """Consume pairs in order, stopping at the first terminal event.

    Returns (session, decision, consumed); pairs after a terminal decision
    are not consumed — a decided trial takes no more data. ``decision`` is
    ``continue`` when no event fired.
    """
    if session.terminal is not None:
        raise StateError(f"session is terminal: {session.terminal}")
    consumed = 0
    for pair in pairs:
        session, event = session_update(session, pair)
        consumed += 1
        if event is not None:
            return session, event, consumed
    if consumed:
        session = replace(session, decisions=session.decisions + ((session.n, CONTINUE),))
    return session, CONTINUE, consumed


def session_summary(session: MonitoringSession) -> dict:
    lo, hi = confseq_interval(session.cs)
    fut_cs = (
        futility_cs_check(session.cs, session.futility_config.delta_min)
        if session.futility_config
        else None
    )
    return {
        "session_id": session.session_id,
        "n": session.n,
        "alpha": session.design.alpha,
        "threshold_log_e": -math.log(session.design.alpha),
        "log_e": session.efficacy.log_wealth,
        "e_value": math.exp(session.efficacy.log_wealth),
        "av_p": av_pvalue(session.efficacy),
        "cs": {
            "alpha": session.cs.alpha,
            "lo": lo,
            "hi": hi,
            "delta_hat": session.cs.delta_hat,
        },
        "futility_cs": fut_cs,
        "futility_recip_wealth": (
            math.exp(session.futility.log_wealth) if session.futility else None
        ),
        "delta_min": (
            session.futility_config.delta_min if session.futility_config else None
        ),
        "alpha_f": session.futility_config.alpha_f if session.futility_config else None,
        "decision": session.terminal or CONTINUE,
    }


def session_to_dict(session: MonitoringSession) -> dict:
    return {
        "schema": SESSION_SCHEMA,
        "session_id": session.session_id,
        "design": {
            "p_treatment": session.design.p_treatment,
            "p_control": session.design.p_control,
            "direction": session.design.direction,
            "alpha": session.design.alpha,
        },
        "lambda": session.lam,
        "cs": {
            "alpha": session.cs_alpha,
            "resolution": float(session.cs.grid[1] - session.cs.grid[0]),
            "lambda_cs": session.cs.lambda_cs,
        },
        "futility": (
            {
                "delta_min": session.futility_config.delta_min,
                "alpha_f": session.futility_config.alpha_f,
                "lambda_prime": session.futility_config.lambda_prime,
            }
            if session.futility_config
            else None
        ),
        "ledger": [[p.x_treatment, p.x_control] for p in session.ledger],
        "decisions": [[n, e] for n, e in session.decisions],
    }


def session_from_dict(doc: dict) -> MonitoringSession:
    """Rebuild a session by replaying its ledger from scratch."""
    if doc.get("schema") != SESSION_SCHEMA:
        raise ValueError(f"unsupported session schema {doc.get('schema')!r}")
    design = DesignAlternative(**doc["design"])
    fut = FutilityConfig(**doc["futility"]) if doc.get("futility") else None
    session = session_new(
        doc["session_id"],
        design,
        lam=doc["lambda"],
        cs_alpha=doc["cs"]["alpha"],
        futility_config=fut,
    )
    for x_t, x_c in doc["ledger"]:
        session, _ = session_update(session, OutcomePair(x_t, x_c))
    # replay regenerates the decision log; continue markers are restored
    return replace(session, decisions=tuple((n, e) for n, e in doc["decisions"]))


def save_session(session: MonitoringSession, path: str) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".session-", dir=directory)
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(session_to_dict(session), f, indent=1, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_session(path: str) -> MonitoringSession:
    with open(path) as f:
        return session_from_dict(json.load(f))


def parse_batch_csv(text: str, start_index: int) -> list[OutcomePair]:
    """Parse `pair_index,x_treatment,x_control` rows continuing the ledger.

    Indices are 1-based and must run start_index, start_index+1, ... with
    no gaps or overlaps; the header is mandatory.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        return []
    if lines[0].lower().replace(" ", "") != "pair_index,x_treatment,x_control":
        raise BatchFormatError("expected header 'pair_index,x_treatment,x_control'")
    pairs = []
    expected = start_index
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise BatchFormatError(f"malformed row {ln!r}")
        try:
            idx, x_t, x_c = (int(p) for p in parts)
        except ValueError as exc:
            raise BatchFormatError(f"non-integer value in row {ln!r}") from exc
        if idx != expected:
            raise BatchFormatError(
                f"pair_index {idx} does not continue the ledger (expected {expected})"
            )
        if x_t not in (0, 1) or x_c not in (0, 1):
            raise BatchFormatError(f"outcomes must be 0/1 in row {ln!r}")
        pairs.append(OutcomePair(x_t, x_c))
        expected += 1
    return pairs

"""Deterministic, chunk-parallel Monte Carlo harness for monitoring-rule
operating characteristics: the five-rule comparison, betting-fraction
sensitivity, schedule study, design-parameter grid, and the large-trial run.

Every experiment derives its randomness from (master_seed, tag, chunk), so
reports are byte-identical across worker counts. Within a replication, all
rules see the same simulated trial (common random numbers), which is what
makes rule-concordance summaries meaningful.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from .comparators import (
    DEFAULT_POSTERIOR_DRAWS,
    JEFFREYS,
    LookSchedule,
    calibrate_bayes_threshold,
    calibrate_obf,
    posterior_matrix,
    z_matrix,
)
from .core import ConfigurationError
from .design import DesignAlternative, expected_stopping_pairs, grow_lambda, growth_rate
from .rng import bernoulli_block, chunk_sizes, stream_generator


# --- rule specifications --------------------------------------------------

@dataclass(frozen=True)
class NaivePRule:
    rule_id: str = "naive_p"


@dataclass(frozen=True)
class GsRule:
    c: Optional[float] = None  # None: calibrate from the config
    rule_id: str = "gs_calibrated"


@dataclass(frozen=True)
class EValueRule:
    lam: Optional[float] = None  # None: growth-optimal for the alternative

    @property
    def rule_id(self) -> str:
        return "evalue" if self.lam is None else f"evalue({self.lam:g})"


@dataclass(frozen=True)
class NaiveBayesRule:
    threshold: float = 0.975
    rule_id: str = "bayes_naive"


@dataclass(frozen=True)
class CalibratedBayesRule:
    threshold: Optional[float] = None  # None: calibrate from the config
    rule_id: str = "bayes_calibrated"


RuleSpec = Union[NaivePRule, GsRule, EValueRule, NaiveBayesRule, CalibratedBayesRule]

DEFAULT_RULES: tuple[RuleSpec, ...] = (
    EValueRule(),
    GsRule(),
    NaivePRule(),
    NaiveBayesRule(),
    CalibratedBayesRule(),
)


@dataclass(frozen=True)
class SimulationConfig:
    p_c: float
    p_t_alt: float
    p_t_null: Optional[float] = None  # None: equal to p_c
    n_max: int = 200
    schedule: Optional[LookSchedule] = None  # None: fixed 20 looks
    alpha: float = 0.025
    rules: tuple[RuleSpec, ...] = DEFAULT_RULES
    reps: int = 50000
    master_seed: int = 0
    calibration_reps: Optional[int] = None  # None: same as reps
    posterior_draws: Optional[int] = DEFAULT_POSTERIOR_DRAWS
    prior_a: float = JEFFREYS
    prior_b: float = JEFFREYS
    workers: int = 1

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ConfigurationError("reps must be at least 1")
        if not self.rules:
            raise ConfigurationError("at least one monitoring rule is required")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must be in (0,1), got {self.alpha}")

    def resolved_schedule(self) -> LookSchedule:
        return self.schedule or LookSchedule("fixed", self.n_max, 20)

    def alternative(self) -> DesignAlternative:
        return DesignAlternative(self.p_t_alt, self.p_c, alpha=self.alpha)


@dataclass(frozen=True)
class RuleResult:
    rule_id: str
    reject_rate_null: float
    reject_rate_alt: float
    se_null: float
    se_alt: float
    avg_n_null: float
    avg_n_alt: float


@dataclass(frozen=True)
class SimulationReport:
    config: SimulationConfig
    results: tuple[RuleResult, ...]
    calibration: dict
    concordance: Optional[dict]
    low_precision: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self, with_meta: bool = False) -> dict:
        cfg = self.config
        out = {
            "schema": 1,
            "config": {
                "p_c": cfg.p_c,
                "p_t_alt": cfg.p_t_alt,
                "p_t_null": cfg.p_t_null if cfg.p_t_null is not None else cfg.p_c,
                "n_max": cfg.n_max,
                "schedule": cfg.resolved_schedule().label,
                "alpha": cfg.alpha,
                "reps": cfg.reps,
                "master_seed": cfg.master_seed,
                "rules": [r.rule_id for r in cfg.rules],
            },
            "calibration": self.calibration,
            "results": [
                {
                    "rule": r.rule_id,
                    "null_rej": r.reject_rate_null,
                    "alt_rej": r.reject_rate_alt,
                    "se_null": r.se_null,
                    "se_alt": r.se_alt,
                    "avg_n_null": r.avg_n_null,
                    "avg_n_alt": r.avg_n_alt,
                }
                for r in self.results
            ],
            "concordance": self.concordance,
            "low_precision": self.low_precision,
        }
        if with_meta:
            out["meta"] = self.meta
        return out

    def to_csv(self) -> str:
        lines = ["rule,null_rej,alt_rej,avg_n_null,avg_n_alt,se_null,se_alt"]
        for r in self.results:
            lines.append(
                f"{r.rule_id},{r.reject_rate_null:.6f},{r.reject_rate_alt:.6f},"
                f"{r.avg_n_null:.3f},{r.avg_n_alt:.3f},{r.se_null:.6f},{r.se_alt:.6f}"
            )
        return "\n".join(lines) + "\n"


# --- engine ---------------------------------------------------------------


def _resolve_rules(config: SimulationConfig) -> tuple[list, dict]:
    """Fill in calibrated constants and growth-optimal fractions."""
    schedule = config.resolved_schedule()
    null_p = config.p_t_null if config.p_t_null is not None else config.p_c
    cal_reps = config.calibration_reps or config.reps
    resolved = []
    artifacts: dict = {"calibration_reps": cal_reps}
    for rule in config.rules:
        if isinstance(rule, GsRule) and rule.c is None:
            c = calibrate_obf(null_p, schedule, config.alpha, cal_reps, config.master_seed)
            artifacts["obf_c"] = c
            rule = replace(rule, c=c)
        elif isinstance(rule, CalibratedBayesRule) and rule.threshold is None:
            thr = calibrate_bayes_threshold(
                null_p, schedule, config.alpha, config.prior_a, config.prior_b,
                cal_reps, config.master_seed, config.posterior_draws,
            )
            artifacts["bayes_threshold"] = thr
            rule = replace(rule, threshold=thr)
        elif isinstance(rule, EValueRule) and rule.lam is None:
            rule = replace(rule, lam=grow_lambda(config.alternative()))
        resolved.append(rule)
    artifacts["evalue_lambdas"] = [
        r.lam for r in resolved if isinstance(r, EValueRule)
    ]
    return resolved, artifacts


def _chunk_rejections(config, rules, looks, p_t, tag, idx, size):
    """First-crossing look index per rule for one chunk (-1 = never)."""
    rng = stream_generator(config.master_seed, tag, idx)
    x_t = bernoulli_block(rng, size, config.n_max, p_t)
    x_c = bernoulli_block(rng, size, config.n_max, config.p_c)
    c_t = np.cumsum(x_t, 1, dtype=np.int64)[:, looks - 1]
    c_c = np.cumsum(x_c, 1, dtype=np.int64)[:, looks - 1]

    need_z = any(isinstance(r, (NaivePRule, GsRule)) for r in rules)
    z = z_matrix(c_t, c_c, looks[None, :]) if need_z else None

    need_bayes = any(isinstance(r, (NaiveBayesRule, CalibratedBayesRule)) for r in rules)
    post = None
    if need_bayes:
        draw_rng = (
            stream_generator(config.master_seed, tag + "-bayesdraws", idx)
            if config.posterior_draws is not None
            else None
        )
        post = posterior_matrix(
            c_t, c_c, looks, config.prior_a, config.prior_b,
            config.posterior_draws, draw_rng,
        )

    d = x_t - x_c
    log_e_cache: dict[float, np.ndarray] = {}

    t_frac = looks / config.n_max
    z_crit = float(norm.ppf(1.0 - config.alpha))
    first_by_rule = {}
    for rule in rules:
        if isinstance(rule, NaivePRule):
            rej = z >= z_crit
        elif isinstance(rule, GsRule):
            rej = z >= rule.c / np.sqrt(t_frac)[None, :]
        elif isinstance(rule, EValueRule):
            lam = rule.lam
            if lam not in log_e_cache:
                steps = np.where(
                    d == 1, math.log1p(lam), np.where(d == -1, math.log1p(-lam), 0.0)
                )
                log_e_cache[lam] = np.cumsum(steps, 1)[:, looks - 1]
            rej = log_e_cache[lam] >= math.log(1.0 / config.alpha)
        elif isinstance(rule, NaiveBayesRule):
            rej = post > rule.threshold
        elif isinstance(rule, CalibratedBayesRule):
            rej = post > rule.threshold
        else:  # pragma: no cover - exhaustive above
            raise ConfigurationError(f"unknown rule {rule!r}")
        any_r = rej.any(1)
        first = np.where(any_r, rej.argmax(1), -1).astype(np.int32)
        first_by_rule[rule.rule_id] = first
    return first_by_rule


def _run_arm(config, rules, looks, p_t, tag):
    """All chunks for one hypothesis arm; returns per-rule first-look arrays."""
    sizes = chunk_sizes(config.reps)

    def work(args):
        idx, size = args
        return _chunk_rejections(config, rules, looks, p_t, tag, idx, size)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(work, enumerate(sizes)))
    else:
        parts = [work(a) for a in enumerate(sizes)]
    return {
        rule.rule_id: np.concatenate([p[rule.rule_id] for p in parts])
        for rule in rules
    }


def _summ(first: np.ndarray, looks: np.ndarray, n_max: int) -> tuple[float, float, float]:
    rej = first >= 0
    rate = float(rej.mean())
    n_stop = np.where(rej, looks[np.clip(first, 0, None)], n_max)
    se = math.sqrt(rate * (1.0 - rate) / len(first))
    return rate, float(n_stop.mean()), se


def simulate_comparison(config: SimulationConfig) -> SimulationReport:
    """Run every configured rule under the null and the alternative."""
    schedule = config.resolved_schedule()
    looks = schedule.look_times()
    rules, artifacts = _resolve_rules(config)
    null_p = config.p_t_null if config.p_t_null is not None else config.p_c

    first_null = _run_arm(config, rules, looks, null_p, "eval-null")
    first_alt = _run_arm(config, rules, looks, config.p_t_alt, "eval-alt")

    results = []
    for rule in rules:
        rn, nn, sen = _summ(first_null[rule.rule_id], looks, config.n_max)
        ra, na, sea = _summ(first_alt[rule.rule_id], looks, config.n_max)
        results.append(RuleResult(rule.rule_id, rn, ra, sen, sea, nn, na))

    concordance = None
    gs_ids = [r.rule_id for r in rules if isinstance(r, GsRule)]
    ev_ids = [r.rule_id for r in rules if isinstance(r, EValueRule)]
    if gs_ids and ev_ids:
        g = first_alt[gs_ids[0]] >= 0
        e = first_alt[ev_ids[0]] >= 0
        concordance = {
            "both_reject": float((g & e).mean()),
            "neither": float((~g & ~e).mean()),
            "gs_only": float((g & ~e).mean()),
            "evalue_only": float((~g & e).mean()),
        }

    return SimulationReport(
        config=config,
        results=tuple(results),
        calibration=artifacts,
        concordance=concordance,
        low_precision=config.reps < 1000,
    )


def sensitivity_lambda(
    config: SimulationConfig, lambdas: Sequence[float]
) -> SimulationReport:
    """One e-value rule per betting fraction, common streams across rules."""
    if not lambdas:
        raise ConfigurationError("lambda list must be nonempty")
    rules = tuple(EValueRule(lam=float(l)) for l in lambdas)
    return simulate_comparison(replace(config, rules=rules))


def schedule_study(
    config: SimulationConfig, schedules: Sequence[LookSchedule]
) -> list[dict]:
    """E-value vs per-schedule-recalibrated GS across monitoring schedules.

    Irregular schedules with ``draws > 1`` are averaged over that many
    schedule realizations, splitting the evaluation budget evenly; the GS
    constant is recalibrated for every realization.
    """
    lam = grow_lambda(config.alternative())
    rows = []
    for schedule in schedules:
        draws = schedule.draws if schedule.kind == "irregular" else 1
        per_reps = max(1, config.reps // draws)
        acc = {
            m: {"t1": 0.0, "power": 0.0, "avg_n": 0.0, "c": 0.0}
            for m in ("evalue", "gs")
        }
        for j in range(draws):
            sub = replace(
                config,
                schedule=schedule,
                reps=per_reps,
                rules=(EValueRule(lam=lam), GsRule()),
                master_seed=config.master_seed + j * 1_000_003,
            )
            looks = schedule.look_times(j)
            null_p = config.p_t_null if config.p_t_null is not None else config.p_c
            cal_reps = config.calibration_reps or config.reps
            c = calibrate_obf(null_p, schedule, config.alpha, cal_reps,
                              sub.master_seed, schedule_draw=j)
            rules = [EValueRule(lam=lam), GsRule(c=c)]
            fn = _run_arm(sub, rules, looks, null_p, "eval-null")
            fa = _run_arm(sub, rules, looks, config.p_t_alt, "eval-alt")
            for rule, m in ((rules[0], "evalue"), (rules[1], "gs")):
                rn, _, _ = _summ(fn[rule.rule_id], looks, config.n_max)
                ra, na, _ = _summ(fa[rule.rule_id], looks, config.n_max)
                acc[m]["t1"] += rn
                acc[m]["power"] += ra
                acc[m]["avg_n"] += na
            acc["gs"]["c"] += c
        for m in ("evalue", "gs"):
            rows.append(
                {
                    "schedule": schedule.label,
                    "method": m,
                    "type_i": acc[m]["t1"] / draws,
                    "power": acc[m]["power"] / draws,
                    "avg_n_alt": acc[m]["avg_n"] / draws,
                    "c": (acc[m]["c"] / draws) if m == "gs" else None,
                }
            )
    return rows


def parameter_grid(
    p_cs: Sequence[float],
    deltas: Sequence[float],
    look_counts: Sequence[int],
    config_base: SimulationConfig,
) -> list[dict]:
    """E-value vs GS power across (p_c, delta, looks) design cells."""
    if not (p_cs and deltas and look_counts):
        raise ConfigurationError("grid axes must be nonempty")
    rows = []
    cal_reps = config_base.calibration_reps or config_base.reps
    for k in look_counts:
        for p_c in p_cs:
            schedule = LookSchedule("fixed", config_base.n_max, int(k))
            c = calibrate_obf(p_c, schedule, config_base.alpha, cal_reps,
                              config_base.master_seed)
            looks = schedule.look_times()
            for delta in deltas:
                alt = DesignAlternative(p_c + delta, p_c, alpha=config_base.alpha)
                lam = grow_lambda(alt)
                sub = replace(
                    config_base,
                    p_c=p_c,
                    p_t_alt=p_c + delta,
                    schedule=schedule,
                    rules=(EValueRule(lam=lam), GsRule(c=c)),
                )
                rules = [EValueRule(lam=lam), GsRule(c=c)]
                fa = _run_arm(sub, rules, looks, sub.p_t_alt,
                              f"grid-{p_c}-{delta}-{k}")
                pe, _, _ = _summ(fa[rules[0].rule_id], looks, sub.n_max)
                pg, _, _ = _summ(fa[rules[1].rule_id], looks, sub.n_max)
                rows.append(
                    {
                        "p_c": p_c,
                        "delta": delta,
                        "looks": int(k),
                        "lambda_star": lam,
                        "power_evalue": pe,
                        "power_gs": pg,
                        "gap": pg - pe,
                    }
                )
    return rows


def evalue_power(
    alt: DesignAlternative, lam: float, n_max: int, reps: int, seed: int
) -> float:
    """P(wealth ever reaches 1/alpha within n_max pairs) under the
    alternative, monitored continuously."""
    up, dn = math.log1p(lam), math.log1p(-lam)
    thr = math.log(1.0 / alt.alpha)
    a, b = alt.favorable_probs()
    hits = 0
    total = 0
    for idx, size in enumerate(chunk_sizes(reps)):
        rng = stream_generator(seed, "evalue-power", idx)
        u = rng.random((size, n_max))
        steps = np.where(u < a, up, np.where(u < a + b, dn, 0.0))
        lw = np.cumsum(steps, 1)
        hits += int((lw.max(1) >= thr).sum())
        total += size
    return hits / total


def recovery_scale_run(
    p_treatment: float = 0.229,
    p_control: float = 0.257,
    n_max: int = 2000,
    reps: int = 10000,
    seed: int = 0,
    alpha: float = 0.025,
    cs_alpha: float = 0.05,
    demo_seed: int = 0,
) -> dict:
    """Large-trial run with a lower-is-better endpoint: power and median
    rejection time under continuous monitoring, plus one seeded
    illustrative trajectory with its confidence sequence."""
    alt = DesignAlternative(
        p_treatment, p_control, direction="treatment_lower", alpha=alpha
    )
    lam = grow_lambda(alt)
    g = growth_rate(lam, alt)
    up, dn = math.log1p(lam), math.log1p(-lam)
    thr = math.log(1.0 / alpha)

    firsts = []
    for idx, size in enumerate(chunk_sizes(reps)):
        rng = stream_generator(seed, "recovery", idx)
        x_t = bernoulli_block(rng, size, n_max, p_treatment)
        x_c = bernoulli_block(rng, size, n_max, p_control)
        d = x_c - x_t  # favorable increment: fewer events on treatment
        lw = np.cumsum(np.where(d == 1, up, np.where(d == -1, dn, 0.0)), 1)
        hit = lw >= thr
        any_hit = hit.any(1)
        firsts.append(np.where(any_hit, hit.argmax(1) + 1, 0))
    firsts = np.concatenate(firsts)
    rejected = firsts > 0

    demo = _recovery_demo(p_treatment, p_control, n_max, lam, thr, cs_alpha, demo_seed)
    return {
        "lambda_star": lam,
        "growth_rate": g,
        "expected_pairs": expected_stopping_pairs(alpha, g),
        "power": float(rejected.mean()),
        "median_rejection_pair": float(np.median(firsts[rejected])) if rejected.any() else None,
        "reps": reps,
        "seed": seed,
        "demo": demo,
    }


def _recovery_demo(p_t, p_c, n_max, lam, thr, cs_alpha, demo_seed):
    from .confseq import confseq_interval, confseq_new, confseq_update
    from .core import OutcomePair

    rng = stream_generator(demo_seed, "recovery-demo", 0)
    x_t = bernoulli_block(rng, 1, n_max, p_t)[0]
    x_c = bernoulli_block(rng, 1, n_max, p_c)[0]
    d = (x_c - x_t).astype(np.float64)
    lw = np.cumsum(np.where(d == 1, math.log1p(lam), np.where(d == -1, math.log1p(-lam), 0.0)))
    cs = confseq_new(cs_alpha)
    for xt, xc in zip(x_t, x_c):
        # the favorable orientation pairs the control event as "treatment"
        cs = confseq_update(cs, OutcomePair(int(xc), int(xt)))
    lo, hi = confseq_interval(cs)
    return {
        "demo_seed": demo_seed,
        "final_log_e": float(lw[-1]),
        "max_log_e": float(lw.max()),
        "rejected": bool(lw.max() >= thr),
        "cs_lo": lo,
        "cs_hi": hi,
        "delta_hat": cs.delta_hat,
    }

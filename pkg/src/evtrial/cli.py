"""Command-line surface.

Machine-readable JSON goes to stdout; human-oriented tables go to stderr so
that stdout stays pipeable. Exit codes: 0 success, 2 bad arguments or
configuration, 3 batch/session state violations.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from . import __version__
from .comparators import LookSchedule, calibrate_bayes_threshold, calibrate_obf
from .core import ConfigurationError
from .datasets import (
    DEFAULT_NOVICK_SEED,
    HYBRID_DEMO_LAMBDA,
    HYBRID_DEMO_OBF_C,
    NOVICK_DESIGN_P_C,
    NOVICK_DESIGN_P_T,
    hybrid_demo_stream,
    novick_patient_csv,
    parse_patient_csv,
)
from .design import (
    DesignAlternative,
    design_grid,
    design_report,
    grow_lambda,
)
from .futility import DEFAULT_LAMBDA_PRIME, FutilityConfig, futility_simulate
from .platform_trial import (
    StateError,
    hybrid_monitor,
    platform_add_arm,
    platform_new,
    platform_observe_control,
    platform_snapshot,
    platform_update_arm,
)
from .session import (
    BatchFormatError,
    load_session,
    parse_batch_csv,
    save_session,
    session_new,
    session_summary,
    session_update_batch,
)
from .simengine import (
    CalibratedBayesRule,
    EValueRule,
    GsRule,
    NaiveBayesRule,
    NaivePRule,
    SimulationConfig,
    parameter_grid,
    recovery_scale_run,
    schedule_study,
    sensitivity_lambda,
    simulate_comparison,
)

log = logging.getLogger("evtrial")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_STATE = 3


def _emit(doc, human: str = "") -> None:
    json.dump(doc, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    if human:
        print(human, file=sys.stderr)


def _direction(arg: str) -> str:
    return "treatment_lower" if arg == "lower" else "treatment_higher"


# --- design -----------------------------------------------------------------

def cmd_design(args) -> int:
    alt = DesignAlternative(
        args.pt, args.pc, direction=_direction(args.direction), alpha=args.alpha
    )
    lam_star = grow_lambda(alt)
    if lam_star == 0.0:
        _emit(
            {
                "lambda_star": 0.0,
                "growth_rate": 0.0,
                "expected_pairs": None,
                "warning": "no power at null alternative",
            },
            "warning: design alternative has no effect; the bet has no power",
        )
        return EXIT_OK
    report = design_report(alt, n_max=args.n_max, power_reps=args.power_reps, seed=args.seed)
    doc = {
        "lambda_star": report.lambda_star,
        "growth_rate": report.growth_rate,
        "expected_pairs": report.expected_pairs,
        "n_max_recommended": report.n_max_recommended,
        "power_at_nmax": report.power_at_nmax,
        "alpha": alt.alpha,
    }
    rows = [f"  lambda* = {report.lambda_star:.4f}",
            f"  growth  = {report.growth_rate:.6f} nats/pair",
            f"  E[pairs to rejection] ~ {report.expected_pairs:.1f}"]
    if args.lambda_grid:
        lams = [float(x) for x in args.lambda_grid.split(",")]
        grid = design_grid([alt], lams)
        doc["grid"] = [
            {"lambda": r.lam, "growth": r.growth, "expected_pairs": r.expected_pairs}
            for r in grid
        ]
    _emit(doc, "\n".join(rows))
    return EXIT_OK


# --- monitor ------------------------------------------------------------------

def cmd_monitor(args) -> int:
    if args.create:
        fut = None
        if args.delta_min is not None:
            fut = FutilityConfig(
                delta_min=args.delta_min,
                alpha_f=args.alpha_f,
                lambda_prime=args.lambda_prime,
            )
        session = session_new(
            args.session_id or os.path.basename(args.session),
            DesignAlternative(
                args.pt, args.pc, direction=_direction(args.direction), alpha=args.alpha
            ),
            lam=args.bet,
            cs_alpha=args.cs_alpha,
            futility_config=fut,
        )
        save_session(session, args.session)
    else:
        session = load_session(args.session)

    decision = None
    consumed = 0
    if args.batch:
        with open(args.batch) as f:
            text = f.read()
        try:
            pairs = parse_batch_csv(text, start_index=session.n + 1)
            if pairs:
                session, decision, consumed = session_update_batch(session, pairs)
        except (BatchFormatError, StateError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_STATE
        save_session(session, args.session)

    summary = session_summary(session)
    summary["pairs_consumed"] = consumed
    lo, hi = summary["cs"]["lo"], summary["cs"]["hi"]
    human = (
        f"  n={summary['n']}  E={summary['e_value']:.3f}  AV p={summary['av_p']:.4f}\n"
        f"  CS({1 - session.cs_alpha:.0%}) = [{lo:.3f}, {hi:.3f}]\n"
        f"  decision: {summary['decision']}"
    )
    _emit(summary, human)
    return EXIT_OK


# --- simulate -----------------------------------------------------------------

_RULE_NAMES = {
    "naive_p": lambda p: NaivePRule(),
    "gs": lambda p: GsRule(c=p),
    "gs_calibrated": lambda p: GsRule(c=p),
    "evalue": lambda p: EValueRule(lam=p),
    "bayes_naive": lambda p: NaiveBayesRule(threshold=p if p is not None else 0.975),
    "bayes_calibrated": lambda p: CalibratedBayesRule(threshold=p),
}


def _parse_rule(spec: str):
    name, _, param = spec.partition(":")
    name = name.strip()
    if name not in _RULE_NAMES:
        raise ConfigurationError(f"unknown rule {name!r}")
    return _RULE_NAMES[name](float(param) if param else None)


def _config_from_doc(doc: dict, seed: int) -> SimulationConfig:
    schedule = None
    if "looks" in doc:
        schedule = LookSchedule(
            doc.get("schedule_kind", "fixed"),
            doc.get("n_max", 200),
            int(doc["looks"]),
            seed=doc.get("schedule_seed", 0),
            draws=doc.get("schedule_draws", 1),
        )
    elif doc.get("schedule_kind") == "continuous":
        schedule = LookSchedule("continuous", doc.get("n_max", 200))
    rules = tuple(_parse_rule(r) for r in doc.get(
        "rules", ["evalue", "gs", "naive_p", "bayes_naive", "bayes_calibrated"]
    ))
    return SimulationConfig(
        p_c=doc["p_c"],
        p_t_alt=doc["p_t_alt"],
        p_t_null=doc.get("p_t_null"),
        n_max=doc.get("n_max", 200),
        schedule=schedule,
        alpha=doc.get("alpha", 0.025),
        rules=rules,
        reps=doc.get("reps", 50000),
        master_seed=seed,
        calibration_reps=doc.get("calibration_reps"),
        workers=doc.get("workers", 1),
    )


def cmd_simulate(args) -> int:
    with open(args.config) as f:
        doc = json.load(f)
    experiment = doc.get("experiment", "comparison")
    if experiment == "comparison":
        report = simulate_comparison(_config_from_doc(doc, args.seed))
        out = report.to_dict()
        csv_text = report.to_csv()
    elif experiment == "sensitivity":
        report = sensitivity_lambda(_config_from_doc(doc, args.seed), doc["lambdas"])
        out = report.to_dict()
        csv_text = report.to_csv()
    elif experiment == "schedules":
        config = _config_from_doc(doc, args.seed)
        schedules = [
            LookSchedule(
                s["kind"], config.n_max, s.get("k_looks", 0),
                seed=s.get("seed", args.seed), draws=s.get("draws", 1),
            )
            for s in doc["schedules"]
        ]
        rows = schedule_study(config, schedules)
        out = {"schema": 1, "experiment": "schedules", "rows": rows}
        header = "schedule,method,type_i,power,avg_n_alt"
        csv_text = header + "\n" + "\n".join(
            f"{r['schedule']},{r['method']},{r['type_i']:.6f},{r['power']:.6f},{r['avg_n_alt']:.3f}"
            for r in rows
        ) + "\n"
    elif experiment == "grid":
        config = _config_from_doc(doc, args.seed)
        rows = parameter_grid(doc["p_cs"], doc["deltas"], doc["look_counts"], config)
        out = {"schema": 1, "experiment": "grid", "rows": rows}
        header = "p_c,delta,looks,lambda_star,power_evalue,power_gs,gap"
        csv_text = header + "\n" + "\n".join(
            f"{r['p_c']},{r['delta']},{r['looks']},{r['lambda_star']:.4f},"
            f"{r['power_evalue']:.6f},{r['power_gs']:.6f},{r['gap']:.6f}"
            for r in rows
        ) + "\n"
    elif experiment == "recovery":
        out = recovery_scale_run(
            p_treatment=doc.get("p_treatment", 0.229),
            p_control=doc.get("p_control", 0.257),
            n_max=doc.get("n_max", 2000),
            reps=doc.get("reps", 10000),
            seed=args.seed,
            alpha=doc.get("alpha", 0.025),
            demo_seed=doc.get("demo_seed", 0),
        )
        out["schema"] = 1
        csv_text = None
    else:
        raise ConfigurationError(f"unknown experiment {experiment!r}")

    if args.out_csv and csv_text:
        with open(args.out_csv, "w") as f:
            f.write(csv_text)
    _emit(out)
    return EXIT_OK


# --- calibrate ----------------------------------------------------------------

def cmd_calibrate(args) -> int:
    schedule = LookSchedule(
        "continuous" if args.looks >= args.n_max else "fixed",
        args.n_max,
        args.looks if args.looks < args.n_max else 0,
    )
    if args.rule == "gs":
        value = calibrate_obf(args.null_p, schedule, args.alpha, args.reps, args.seed)
        key = "c"
    else:
        value = calibrate_bayes_threshold(
            args.null_p, schedule, args.alpha, reps=args.reps, seed=args.seed
        )
        key = "threshold"
    _emit(
        {
            "schema": 1,
            "rule": args.rule,
            key: value,
            "alpha": args.alpha,
            "schedule": schedule.label,
            "n_max": args.n_max,
            "reps": args.reps,
            "seed": args.seed,
        },
        f"  {args.rule}: {key} = {value:.4f}",
    )
    return EXIT_OK


# --- futility -------------------------------------------------------------------

def cmd_futility(args) -> int:
    out = futility_simulate(
        p_t=args.pt,
        p_c=args.pc,
        delta_min=args.delta_min,
        alpha_f=args.alpha_f,
        n_max=args.n_max,
        reps=args.reps,
        seed=args.seed,
        lambda_prime=args.lambda_prime,
        cs_alpha=args.cs_alpha,
    )
    out["schema"] = 1
    _emit(
        out,
        f"  CS route: {out['detect_rate_cs']:.3f} (median n {out['median_n_cs']})\n"
        f"  reciprocal route: {out['detect_rate_recip']:.3f} (median n {out['median_n_recip']})",
    )
    return EXIT_OK


# --- platform -------------------------------------------------------------------

def cmd_platform(args) -> int:
    if args.data == "novick":
        text = novick_patient_csv(args.seed)
    else:
        with open(args.data) as f:
            text = f.read()
    if args.export_csv:
        with open(args.export_csv, "w") as f:
            f.write(text)
    arms = parse_patient_csv(text)
    control = args.control
    if control not in arms:
        raise ConfigurationError(f"control arm {control!r} not in data")
    experimental = [a for a in sorted(arms) if a != control]
    design = DesignAlternative(args.design_pt, args.design_pc, alpha=args.alpha)
    lam = grow_lambda(design)
    state = platform_new(
        fdr_alpha=args.fdr, efficacy_alpha=args.alpha, planned_arms=len(experimental)
    )
    for arm in experimental:
        state = platform_add_arm(state, arm, lam)
    looks = sorted(int(x) for x in args.looks.split(","))
    look_rows = []
    n_total = min(len(v) for v in arms.values())
    for i in range(n_total):
        state = platform_observe_control(state, arms[control][i])
        for arm in experimental:
            if state.arms[arm].status == "active":
                state = platform_update_arm(state, arm, arms[arm][i])
        if (i + 1) in looks:
            snap = platform_snapshot(state)
            look_rows.append({"n": i + 1, **snap})
    out = {
        "schema": 1,
        "control": control,
        "design": {"p_t": args.design_pt, "p_c": args.design_pc, "lambda": lam},
        "looks": look_rows,
        "final": platform_snapshot(state),
    }
    human_lines = []
    for row in look_rows:
        rej = row["ebh_rejections"] or "-"
        human_lines.append(f"  n={row['n']:4d}  e-BH rejections: {rej}")
    _emit(out, "\n".join(human_lines))
    return EXIT_OK


# --- hybrid ---------------------------------------------------------------------

def cmd_hybrid(args) -> int:
    if args.stream == "demo":
        pairs = hybrid_demo_stream()
        lam = args.bet if args.bet is not None else HYBRID_DEMO_LAMBDA
        c = args.c if args.c is not None else HYBRID_DEMO_OBF_C
        n_max = len(pairs)
    else:
        with open(args.stream) as f:
            rows = parse_batch_csv(f.read(), start_index=1)
        pairs = rows
        n_max = len(pairs)
        lam = args.bet if args.bet is not None else 0.3125
        c = args.c
        if c is None:
            schedule = LookSchedule("fixed", n_max, args.looks)
            c = calibrate_obf(args.null_p, schedule, args.alpha, args.reps, args.seed)
    schedule = LookSchedule("fixed", n_max, args.looks)
    rows = hybrid_monitor(pairs, schedule, c, lam, args.alpha)
    out = {
        "schema": 1,
        "c": c,
        "lambda": lam,
        "alpha": args.alpha,
        "rows": [r.__dict__ for r in rows],
    }
    human = ["  look    n     dhat      z  bound   gs  logE      e   AVp"]
    for r in rows:
        human.append(
            f"  {r.look:4d} {r.n:4d} {r.delta_hat:8.3f} {r.z:6.3f} {r.gs_bound:6.3f} "
            f"{str(r.gs_reject)[0]:>4s} {r.log_e:6.3f} {str(r.e_reject)[0]:>5s} {r.av_p:5.3f}"
        )
    _emit(out, "\n".join(human))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.addr.partition(":")
    app = create_app(cors_origin=args.cors, compare_rep_cap=args.rep_cap)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="evtrial",
        description="Anytime-valid e-process monitoring for two-arm binary trials",
    )
    p.add_argument("--version", action="version", version=f"evtrial {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="growth-optimal design calibration")
    d.add_argument("--pt", type=float, required=True)
    d.add_argument("--pc", type=float, required=True)
    d.add_argument("--alpha", type=float, default=0.025)
    d.add_argument("--direction", choices=("higher", "lower"), default="higher")
    d.add_argument("--lambda-grid", default="")
    d.add_argument("--n-max", type=int, default=None)
    d.add_argument("--power-reps", type=int, default=0)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_design)

    m = sub.add_parser("monitor", help="update a live monitoring session")
    m.add_argument("--session", required=True, help="session JSON path")
    m.add_argument("--batch", help="batch CSV: pair_index,x_treatment,x_control")
    m.add_argument("--create", action="store_true")
    m.add_argument("--session-id", default=None)
    m.add_argument("--pt", type=float, default=0.45)
    m.add_argument("--pc", type=float, default=0.30)
    m.add_argument("--alpha", type=float, default=0.025)
    m.add_argument("--direction", choices=("higher", "lower"), default="higher")
    m.add_argument("--bet", type=float, default=None, help="betting fraction (default: growth-optimal)")
    m.add_argument("--cs-alpha", type=float, default=0.05)
    m.add_argument("--delta-min", type=float, default=None)
    m.add_argument("--alpha-f", type=float, default=0.10)
    m.add_argument("--lambda-prime", type=float, default=DEFAULT_LAMBDA_PRIME)
    m.set_defaults(func=cmd_monitor)

    s = sub.add_parser("simulate", help="Monte Carlo operating characteristics")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out-csv", default=None)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="Monte Carlo boundary/threshold calibration")
    c.add_argument("--rule", choices=("gs", "bayes"), required=True)
    c.add_argument("--null-p", type=float, default=0.30)
    c.add_argument("--looks", type=int, default=20)
    c.add_argument("--n-max", type=int, default=200)
    c.add_argument("--alpha", type=float, default=0.025)
    c.add_argument("--reps", type=int, default=50000)
    c.add_argument("--seed", type=int, required=True)
    c.set_defaults(func=cmd_calibrate)

    f = sub.add_parser("futility", help="dual-route futility simulation")
    f.add_argument("--pt", type=float, required=True)
    f.add_argument("--pc", type=float, required=True)
    f.add_argument("--delta-min", type=float, required=True)
    f.add_argument("--alpha-f", type=float, default=0.10)
    f.add_argument("--n-max", type=int, default=300)
    f.add_argument("--reps", type=int, default=10000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--lambda-prime", type=float, default=DEFAULT_LAMBDA_PRIME)
    f.add_argument("--cs-alpha", type=float, default=0.05)
    f.set_defaults(func=cmd_futility)

    pl = sub.add_parser("platform", help="multi-arm platform monitoring with e-BH")
    pl.add_argument("--data", required=True, help="patient CSV path or 'novick'")
    pl.add_argument("--fdr", type=float, default=0.05)
    pl.add_argument("--looks", default="25,50,75,100")
    pl.add_argument("--control", default="B")
    pl.add_argument("--design-pt", type=float, default=NOVICK_DESIGN_P_T)
    pl.add_argument("--design-pc", type=float, default=NOVICK_DESIGN_P_C)
    pl.add_argument("--alpha", type=float, default=0.025)
    pl.add_argument("--seed", type=int, default=DEFAULT_NOVICK_SEED)
    pl.add_argument("--export-csv", default=None)
    pl.set_defaults(func=cmd_platform)

    h = sub.add_parser("hybrid", help="joint GS + e-process look table")
    h.add_argument("--stream", default="demo", help="'demo' or batch CSV path")
    h.add_argument("--looks", type=int, default=20)
    h.add_argument("--c", type=float, default=None)
    h.add_argument("--bet", type=float, default=None)
    h.add_argument("--alpha", type=float, default=0.025)
    h.add_argument("--null-p", type=float, default=0.30)
    h.add_argument("--reps", type=int, default=50000)
    h.add_argument("--seed", type=int, default=0)
    h.set_defaults(func=cmd_hybrid)

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--addr", default="127.0.0.1:8000")
    sv.add_argument("--cors", default="*")
    sv.add_argument("--rep-cap", type=int, default=10000)
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ANYTIME_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

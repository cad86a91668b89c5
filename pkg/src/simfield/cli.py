"""Batch command-line front end.

Subcommands mirror the pipeline: ``prompts`` renders probe batches for an
external scorer, ``aggregate`` turns score files into (P, C, Y) matrices,
``fit`` runs BTL plus power calibration, ``lockfilter`` runs the lock
detection / down-weighting / permutation-control pass, ``theory`` exposes
field and trace checks, and ``report`` re-renders saved reports. A plain
KEY=VALUE config file can seed any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dynamics, fields, metrics_io, probes
from .btl import apply_power, btl_fit, power_calibrate
from .errors import SimfieldError
from .lockfilter import detect_locks, lock_filter_run, perm_test
from .probes import matrices_from_csv, matrices_to_csv

_DEFAULTS = {
    "alpha": 0.01,
    "gamma": "calibrate",
    "iterations": 300,
    "epsilon": 1e-9,
    "R": 10000,
    "seed": 123,
    "workers": 1,
}


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    config = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SimfieldError(f"config line without '=': {line!r}")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


def _setting(args, config: dict[str, str], name: str, cast=str):
    """Flag value if given, else config file value, else built-in default."""
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    if name in config:
        raw = config[name]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return _DEFAULTS.get(name)


def _gamma_setting(args, config) -> float | str:
    gamma = _setting(args, config, "gamma")
    if isinstance(gamma, str) and gamma != "calibrate":
        return float(gamma)
    return gamma


def _load_matrices(args) -> probes.PairwiseMatrices:
    p_text = Path(args.P).read_text(encoding="utf-8")
    c_text = Path(args.C).read_text(encoding="utf-8")
    y_text = None
    if getattr(args, "Y", None):
        y_text = Path(args.Y).read_text(encoding="utf-8")
    return matrices_from_csv(p_text, c_text, y_text)


def _job_to_json(job: probes.PromptJob) -> str:
    payload = {"kind": job.kind, "category": job.category}
    if job.kind == "ab":
        payload.update(
            brand_a=job.brand_a, brand_b=job.brand_b, template_id=job.template_id
        )
    else:
        payload.update(brand_i=job.brand_i, brand_j=job.brand_j)
    payload.update(prompt=job.prompt, answers=dict(job.answers))
    return json.dumps(payload)


def cmd_prompts(args, config) -> int:
    fx = metrics_io.fixture(args.category)
    jobs = probes.render_prompts(
        fx.category, fx.brands, swap_positions=bool(args.swap_ab)
    )
    if args.include_yesno:
        jobs += probes.render_yesno_prompts(fx.category, fx.brands)
    out = Path(args.out)
    out.write_text("".join(_job_to_json(j) + "\n" for j in jobs), encoding="utf-8")
    print(f"wrote {len(jobs)} prompts to {out}")
    return 0


def cmd_aggregate(args, config) -> int:
    with open(args.scores, encoding="utf-8") as fh:
        parsed = metrics_io.parse_scores(fh)
    result = metrics_io.aggregate_scores(parsed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in matrices_to_csv(result.matrices).items():
        (out_dir / f"{name}.csv").write_text(text, encoding="utf-8")
    wrote = sorted(matrices_to_csv(result.matrices))
    print(
        f"aggregated {len(parsed.ab)} A/B and {len(parsed.yesno)} yes/no records "
        f"for model {result.model_id} into {out_dir}/{{{','.join(wrote)}}}.csv"
    )
    return 0


def _fit_and_calibrate(m, truth, gamma, iterations, epsilon, calibration_subset=None):
    result = btl_fit(m, iterations=iterations, epsilon=epsilon)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if gamma == "calibrate":
        cal = power_calibrate(result.pi, truth, subset=calibration_subset)
        gamma_value = cal.gamma
    else:
        gamma_value = float(gamma)
    return apply_power(result.pi, gamma_value), gamma_value


def cmd_fit(args, config) -> int:
    m = _load_matrices(args)
    truth = metrics_io.load_truth(args.category)
    if m.brands != truth.brands:
        raise SimfieldError(
            f"matrix brands do not match the {args.category!r} fixture"
        )
    iterations = int(_setting(args, config, "iterations", int))
    epsilon = float(_setting(args, config, "epsilon", float))
    gamma = _gamma_setting(args, config)
    subset = None
    if args.calibration_brands:
        names = [b.strip() for b in args.calibration_brands.split(",") if b.strip()]
        subset = [m.index(b) for b in names]
    pred, gamma_value = _fit_and_calibrate(
        m, truth, gamma, iterations, epsilon, calibration_subset=subset
    )
    report = metrics_io.build_report(
        model_id=args.model_id,
        category=args.category,
        pred=pred,
        truth=truth,
        config={
            "gamma": gamma_value,
            "iterations": iterations,
            "epsilon": epsilon,
            "calibrated": gamma == "calibrate",
        },
    )
    sys.stdout.write(metrics_io.emit_report(report, "table"))
    if args.out:
        Path(args.out).write_text(
            metrics_io.emit_report(report, "json"), encoding="utf-8"
        )
    return 0


def _lock_table(locks) -> str:
    lines = [f"{'Pair':<34}{'Y_ij':>8}{'Y_ji':>8}{'sum_minus_1':>13}"]
    for p in locks.pairs:
        lines.append(
            f"{p.brand_i + ' vs ' + p.brand_j:<34}"
            f"{p.y_ij:>8.4f}{p.y_ji:>8.4f}{p.sum_minus_1:>13.4f}"
        )
    return "\n".join(lines) + "\n"


def cmd_lockfilter(args, config) -> int:
    m = _load_matrices(args)
    truth = metrics_io.load_truth(args.category)
    if m.brands != truth.brands:
        raise SimfieldError(
            f"matrix brands do not match the {args.category!r} fixture"
        )
    iterations = int(_setting(args, config, "iterations", int))
    epsilon = float(_setting(args, config, "epsilon", float))
    alpha = float(_setting(args, config, "alpha", float))
    R = int(_setting(args, config, "R", int))
    seed = int(_setting(args, config, "seed", int))
    workers = int(_setting(args, config, "workers", int))
    gamma = _gamma_setting(args, config)

    # the gauge is frozen from the baseline (pre-lock) fit
    _, gamma_value = _fit_and_calibrate(m, truth, gamma, iterations, epsilon)

    if args.sweep:
        taus = [float(t) for t in args.sweep.split(",") if t.strip()]
        header = (
            f"{'tau':>6}{'k (locks)':>11}{'Spearman':>10}{'MAE (pp)':>10}"
            f"{'MAE improv. (%)':>17}{'p-value':>9}"
        )
        print(header)
        rows_out = []
        for tau in taus:
            run = lock_filter_run(
                m, tau, alpha, gamma_value, truth, iterations, epsilon
            )
            if run.locks.k:
                outcome = perm_test(
                    m, run.locks, alpha, gamma_value, truth,
                    R=R, seed=seed, iterations=iterations, epsilon=epsilon,
                    workers=workers,
                )
                p_text = f"{outcome.p_value:.4f}"
            else:
                p_text = "---"
            print(
                f"{tau:>6.3f}{run.locks.k:>11d}{run.filtered_spearman:>10.3f}"
                f"{run.filtered_mae:>10.3f}{run.improvement_pct:>17.1f}{p_text:>9}"
            )
            rows_out.append(
                {
                    "tau": tau,
                    "k": run.locks.k,
                    "spearman": run.filtered_spearman,
                    "mae_pp": run.filtered_mae,
                    "improvement_pct": run.improvement_pct,
                    "p_value": None if p_text == "---" else float(p_text),
                }
            )
        if args.out:
            Path(args.out).write_text(
                json.dumps({"gamma": gamma_value, "sweep": rows_out}, indent=2) + "\n",
                encoding="utf-8",
            )
        return 0

    if args.tau is None:
        raise SimfieldError("lockfilter needs --tau or --sweep")
    tau = float(args.tau)
    run = lock_filter_run(m, tau, alpha, gamma_value, truth, iterations, epsilon)
    print(f"locked pairs at tau={tau:.3f}: k={run.locks.k}")
    if run.locks.k:
        sys.stdout.write(_lock_table(run.locks))
    report = metrics_io.build_report(
        model_id=args.model_id,
        category=args.category,
        pred=run.filtered_pred,
        truth=truth,
        config={
            "tau": tau,
            "alpha": alpha,
            "gamma": gamma_value,
            "iterations": iterations,
            "epsilon": epsilon,
            "R": R,
            "seed": seed,
        },
    )
    sys.stdout.write(metrics_io.emit_report(report, "table"))
    print(
        f"delta MAE vs baseline: {run.delta_mae:.6f} pp "
        f"({run.improvement_pct:.1f}% improvement)"
    )
    if run.locks.k:
        outcome = perm_test(
            m, run.locks, alpha, gamma_value, truth,
            R=R, seed=seed, iterations=iterations, epsilon=epsilon, workers=workers,
        )
        print(
            f"permutation control: R={outcome.R} seed={outcome.seed} "
            f"p-value={outcome.p_value:.4f}"
        )
    else:
        print("permutation control skipped: no locked pairs")
    if args.out:
        Path(args.out).write_text(
            metrics_io.emit_report(report, "json"), encoding="utf-8"
        )
    return 0


def _load_trace(args) -> dynamics.SequenceTrace:
    text = Path(args.trace).read_text(encoding="utf-8")
    trace = dynamics.trace_from_csv(text, readout_column=bool(args.readout_column))
    if trace.readouts is None:
        mean_readout = lambda v: float(np.mean(v))  # noqa: E731
        trace = dynamics.SequenceTrace(trace.samples, None, mean_readout)
    return trace


def cmd_theory(args, config) -> int:
    if args.check == "incompat":
        rep = fields.incompatibility(args.x, args.y)
        print(
            f"x={rep.x:.6f} y={rep.y:.6f} cond1={rep.cond1} cond2={rep.cond2} "
            f"mutual={rep.mutual}"
        )
        if not rep.mutual:
            print("mutual fibre membership is impossible at these values")
    elif args.check == "fibre":
        field = fields.field_from_csv(Path(args.field).read_text(encoding="utf-8"))
        fib = fields.fibre(field, args.concept, args.alpha)
        members = sorted(fib.members, key=lambda e: e.index)
        print(
            f"fibre(concept={fib.concept.label!r}, alpha={fib.threshold}): "
            + ", ".join(e.label for e in members)
        )
    elif args.check == "stability":
        verdict = dynamics.stability_assess(
            _load_trace(args), args.epsilon, args.tail_window, c=args.c
        )
        print(
            f"stable={verdict.stable} c={verdict.limit_estimate:.6f} "
            f"epsilon={verdict.epsilon} tail_start={verdict.tail_start} "
            f"violations={verdict.tube_violations} window={verdict.tail_window}"
        )
    elif args.check == "anchors":
        report = dynamics.anchor_detect(
            _load_trace(args), args.tolerance, args.tail_window
        )
        for coord in report.coordinates:
            print(
                f"coordinate {coord.index}: converged={coord.converged} "
                f"limit={coord.limit_estimate:.6f} oscillation={coord.oscillation:.6f}"
            )
    elif args.check == "confinement":
        index = dynamics.confinement_check(_load_trace(args), args.c, args.epsilon)
        if index is None:
            print("not confined within the sampled horizon")
        else:
            print(f"confined from index {index}")
    elif args.check == "clusters":
        clusters = dynamics.cluster_estimate(_load_trace(args), args.radius)
        for rank, cl in enumerate(clusters):
            center = ", ".join(f"{x:.4f}" for x in cl.center)
            print(f"cluster {rank}: center=({center}) count={cl.count}")
    elif args.check == "readout":
        if args.inverse is not None:
            print(f"{fields.inverse_readout(args.inverse)!r}")
        elif args.r is not None:
            print(f"{fields.calibrated_readout(args.r)!r}")
        else:
            raise SimfieldError("readout needs --r or --inverse")
    return 0


def cmd_report(args, config) -> int:
    report = metrics_io.parse_report(Path(args.input).read_text(encoding="utf-8"))
    sys.stdout.write(metrics_io.emit_report(report, args.format))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simfield",
        description="Similarity-field toolkit and pairwise-typicality pipeline",
    )
    parser.add_argument("--config", help="KEY=VALUE file seeding any flag")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prompts", help="render probe prompts for a category")
    p.add_argument("--category", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--include_yesno", action="store_true")
    p.add_argument("--swap_ab", action="store_true",
                   help="position-bias audit: render mirrored slots")
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("aggregate", help="score file -> P/C/Y matrices")
    p.add_argument("--scores", required=True)
    p.add_argument("--out_dir", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("fit", help="BTL fit plus power calibration")
    p.add_argument("--P", required=True)
    p.add_argument("--C", required=True)
    p.add_argument("--category", required=True)
    p.add_argument("--model_id", default="unknown-model")
    p.add_argument("--gamma", help="'calibrate' or a fixed positive float")
    p.add_argument("--iterations", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--calibration_brands",
                   help="comma-separated holdout brands for calibration")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("lockfilter", help="lock detection, refit, permutation control")
    p.add_argument("--P", required=True)
    p.add_argument("--C", required=True)
    p.add_argument("--Y", required=True)
    p.add_argument("--category", required=True)
    p.add_argument("--model_id", default="unknown-model")
    p.add_argument("--tau", type=float)
    p.add_argument("--sweep", help="comma-separated tau values")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", help="'calibrate' or the frozen gauge value")
    p.add_argument("--iterations", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--R", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_lockfilter)

    p = sub.add_parser("theory", help="field and trace checks")
    theory_sub = p.add_subparsers(dest="check", required=True)

    t = theory_sub.add_parser("incompat")
    t.add_argument("--x", type=float, required=True)
    t.add_argument("--y", type=float, required=True)

    t = theory_sub.add_parser("fibre")
    t.add_argument("--field", required=True)
    t.add_argument("--concept", required=True)
    t.add_argument("--alpha", type=float, required=True)

    for name in ("stability", "anchors", "confinement", "clusters"):
        t = theory_sub.add_parser(name)
        t.add_argument("--trace", required=True)
        t.add_argument("--readout_column", action="store_true")
        if name == "stability":
            t.add_argument("--epsilon", type=float, required=True)
            t.add_argument("--tail_window", type=int)
            t.add_argument("--c", type=float)
        elif name == "anchors":
            t.add_argument("--tolerance", type=float, required=True)
            t.add_argument("--tail_window", type=int)
        elif name == "confinement":
            t.add_argument("--c", type=float, required=True)
            t.add_argument("--epsilon", type=float, required=True)
        else:
            t.add_argument("--radius", type=float, required=True)

    t = theory_sub.add_parser("readout")
    t.add_argument("--r", type=float)
    t.add_argument("--inverse", type=float)

    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("report", help="re-render a saved JSON report")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _read_config(args.config)
        return args.func(args, config)
    except SimfieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands:

* ``gen-dag``           write a generated computation to a dag text file
* ``run``               execute one computation and emit a per-round table
* ``verify-bounds``     evaluate every closed-form bound against its oracle
* ``verify-stability``  freeze-and-replay stability verdicts per round
* ``sweep``             cross-product experiment grid, one metrics row per cell
* ``report``            render figures (plus their data tables) from quick runs

Common flags: ``--config PATH`` (flat ``key=value`` file, flags win),
``--seed``, ``--out``, ``--format csv|json``.  CSV uses RFC-4180 quoting with
LF line endings and a mandatory header row; JSON rows carry a superset of the
CSV columns.  Exit codes: 0 success, 2 usage/config error, 3 internal
invariant violation, 4 bound/verdict failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

from . import bounds as bnd
from . import stability as stab
from .dag import DagSpec, encode
from .deque import CONTENTION_MODELS, SINGLE_WINNER
from .engine import Engine, SCHEDULERS, WS, WSS
from .stability import round_sets, stability_verdict, verify_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_BOUND = 4


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully specified simulation run plus estimation parameters."""

    scheduler: str
    p_count: int
    dag: DagSpec
    contention: str = SINGLE_WINNER
    seed: int = 1
    max_rounds: int | None = None
    replications: int = stab.DEFAULT_REPLICATIONS
    confidence: float = stab.DEFAULT_CONFIDENCE
    interval: tuple[float, float] = (0.7375, 1.0)

    def __post_init__(self):
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"scheduler must be one of {SCHEDULERS}")
        if self.contention not in CONTENTION_MODELS:
            raise ValueError(f"contention must be one of {CONTENTION_MODELS}")
        if self.p_count < 2:
            raise ValueError("P must be >= 2")
        if self.replications < 2:
            raise ValueError("replications must be >= 2")
        lo, hi = self.interval
        if not (0.0 < lo < hi <= 1.0):
            raise ValueError(f"interval must satisfy 0 < lo < hi <= 1, got {self.interval}")

    def build_engine(self) -> Engine:
        dag = self.dag.build()
        return Engine(dag, self.p_count, self.scheduler, self.contention, self.seed)

    def round_budget(self, node_count: int) -> int:
        # every round of an unfinished computation executes >= 1 node
        return self.max_rounds if self.max_rounds is not None else node_count + 8


# ---------------------------------------------------------------------------
# config file + flag plumbing


def load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    cfg: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


class Settings:
    """Flag value if given, else config-file value, else default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.cfg = load_config(getattr(args, "config", None))

    def _raw(self, key: str):
        flag = getattr(self.args, key.replace("-", "_"), None)
        if flag is not None:
            return flag
        return self.cfg.get(key)

    def get(self, key: str, default=None, cast=str):
        raw = self._raw(key)
        if raw is None:
            return default
        return raw if not isinstance(raw, str) or cast is str else cast(raw)

    def get_int(self, key: str, default=None):
        return self.get(key, default, int)

    def get_float(self, key: str, default=None):
        return self.get(key, default, float)

    def get_list(self, key: str, default=None, cast=str):
        raw = self._raw(key)
        if raw is None:
            return default
        if isinstance(raw, str):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return [cast(s) for s in items]
        return [cast(s) for s in raw]

    def experiment(self) -> ExperimentConfig:
        kind = self.get("kind", "comb")
        if kind == "file":
            spec = DagSpec("file", path=self.get("dag"))
        else:
            spec = DagSpec(kind, size=self.get_int("size", 16))
        return ExperimentConfig(
            scheduler=self.get("scheduler", WS),
            p_count=self.get_int("P", 4),
            dag=spec,
            contention=self.get("contention", SINGLE_WINNER),
            seed=self.get_int("seed", 1),
            max_rounds=self.get_int("max-rounds"),
            replications=self.get_int("replications", stab.DEFAULT_REPLICATIONS),
            confidence=self.get_float("confidence", stab.DEFAULT_CONFIDENCE),
            interval=(self.get_float("interval-lo", 0.7375),
                      self.get_float("interval-hi", 1.0)),
        )


# ---------------------------------------------------------------------------
# table output


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(out_path: str | None, fmt: str, columns: list[str],
                rows: list[dict], extra: dict | None = None) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in columns])
        text = buf.getvalue()
    elif fmt == "json":
        payload = {"rows": rows}
        if extra:
            payload.update(extra)
        text = json.dumps(payload, sort_keys=True, indent=2, default=_cell) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_dag(args) -> int:
    spec = DagSpec(args.kind, size=args.size)
    dag = spec.build()
    text = encode(dag)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


RUN_COLUMNS = ["t", "alpha", "u_count", "deque_sizes", "stolen", "spread",
               "invariants", "termination"]


def cmd_run(args) -> int:
    settings = Settings(args)
    config = settings.experiment()
    engine = config.build_engine()
    budget = config.round_budget(engine.dag.node_count)
    result = engine.run(budget)
    violations = verify_run(result.traces, config.scheduler, engine.finished)
    rows = []
    for i, trace in enumerate(result.traces):
        sets = round_sets(trace)
        last = i == len(result.traces) - 1
        rows.append({
            "t": trace.t,
            "alpha": trace.alpha,
            "u_count": len(sets.non_self_stable),
            "deque_sizes": ";".join(str(d) for d in trace.deque_sizes),
            "stolen": trace.stolen_count(),
            "spread": trace.spread_count(),
            "invariants": "violated" if violations else "ok",
            "termination": result.reason if last else "",
        })
    write_table(args.out, args.format, RUN_COLUMNS, rows,
                extra={"termination": result.reason})
    if violations:
        for v in violations[:20]:
            print(f"invariant violation: {v}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


BOUND_COLUMNS = ["check", "params", "alpha", "closed_form", "oracle",
                 "half_width", "satisfied"]


def _bound_reports(settings: Settings, seed: int) -> list[bnd.BoundReport]:
    reports: list[bnd.BoundReport] = []
    tol = 1e-12
    bins_max = settings.get_int("bins-max", 5)
    tosses_max = settings.get_int("tosses-max", 6)
    mc_reps = settings.get_int("replications", 20_000)

    for b in range(1, bins_max + 1):
        for m in range(0, tosses_max + 1):
            cf = bnd.hit_probability(b, m)
            br = bnd.hit_probability_brute(b, m)
            reports.append(bnd.BoundReport(
                "hit_probability_oracle", f"B={b} m={m}", m / b, cf, br, None,
                abs(cf - br) <= tol))
            floor = 1.0 - math.exp(-m / b)
            reports.append(bnd.BoundReport(
                "hit_probability_floor", f"B={b} m={m}", m / b, floor, cf, None,
                cf >= floor - tol))

    for b in range(1, bins_max + 1):
        for red in range(0, b + 1):
            alpha = red / b
            exact = bnd.cube_ball_expectation_brute(b, red)
            floor = b * alpha * alpha * (1.0 - math.exp(-(1.0 - alpha)))
            reports.append(bnd.BoundReport(
                "cube_ball_floor", f"B={b} red={red}", alpha, floor, exact, None,
                exact >= floor - tol))

    for i in range(0, 11):
        alpha = i / 10.0
        lo, hi = bnd.steal_bounds(alpha)
        reports.append(bnd.BoundReport(
            "steal_bounds_order", f"alpha={alpha}", alpha, lo, hi, None, lo <= hi))

    reports.append(bnd.BoundReport(
        "margin_negative_below_threshold", "alpha=0.70", 0.70,
        bnd.wss_margin(0.70), None, None, bnd.wss_margin(0.70) < 0.0))
    reports.append(bnd.BoundReport(
        "margin_positive_at_threshold", "alpha=0.7375", 0.7375,
        bnd.wss_margin(0.7375), None, None, bnd.wss_margin(0.7375) > 0.0))

    grid = [0.7375 + k / 1000.0 for k in range(0, 262)]
    increasing = all(bnd.wss_margin(grid[k]) < bnd.wss_margin(grid[k + 1])
                     for k in range(len(grid) - 1))
    reports.append(bnd.BoundReport(
        "margin_strictly_increasing", "grid=[0.7375,0.999] step=1e-3", None,
        None, None, None, increasing))

    root = bnd.find_threshold(1e-6)
    reports.append(bnd.BoundReport(
        "stability_threshold", "tolerance=1e-6", root, 0.7375, root, None,
        abs(root - 0.7375) <= 1e-3))

    for i in range(1, 10):
        alpha = i / 10.0
        total = bnd.total_spread_bound(16, alpha)
        per = 16 * (1 - alpha) * bnd.spread_lower_bound(alpha)
        reports.append(bnd.BoundReport(
            "total_spread_identity", f"P=16 alpha={alpha}", alpha, total, per,
            None, abs(total - per) <= 1e-9))

    mono = bnd.spread_monotonicity_check(16, 0.75, [1, 2, 4],
                                         replications=mc_reps, seed=seed)
    full = mono["estimates"][4]
    reports.append(bnd.BoundReport(
        "spread_full_contention_floor", "P=16 alpha=0.75 donors=4", 0.75,
        mono["bound"], full.per_donor_mean, full.half_width,
        mono["checks"]["full_contention_clears_bound"]))
    reports.append(bnd.BoundReport(
        "spread_minimized_at_full_contention", "P=16 alpha=0.75 donors in {1,2,4}",
        0.75, None, None, None, mono["checks"]["minimized_at_full_contention"]))
    return reports


def cmd_verify_bounds(args) -> int:
    settings = Settings(args)
    if args.alpha is not None:
        # single-point evaluation; domain errors surface as config errors
        value = bnd.spread_lower_bound(args.alpha)
        write_table(args.out, args.format, ["check", "alpha", "closed_form"],
                    [{"check": "spread_lower_bound", "alpha": args.alpha,
                      "closed_form": value}])
        return EXIT_OK
    reports = _bound_reports(settings, settings.get_int("seed", 1))
    rows = [{
        "check": r.name, "params": r.params, "alpha": r.alpha,
        "closed_form": r.closed_form, "oracle": r.oracle,
        "half_width": r.half_width, "satisfied": r.satisfied,
    } for r in reports]
    failures = [r for r in reports if not r.satisfied]
    write_table(args.out, args.format, BOUND_COLUMNS, rows,
                extra={"failures": len(failures)})
    if failures:
        for r in failures:
            print(f"bound unsatisfied: {r.name} [{r.params}]", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


STABILITY_COLUMNS = ["t", "alpha", "p_idle", "u_count", "status", "threshold",
                     "mean", "half_width", "replications", "truncated",
                     "conjunct_a", "b_max", "b_bound", "conjunct_b"]


def _select_rounds(selector: str, budget: int) -> set[int] | None:
    """None means 'applicable rounds only'; a set restricts to those indices."""
    if selector == "applicable":
        return None
    if selector == "all":
        return set(range(budget))
    return {int(s) for s in selector.split(",") if s.strip()}


def cmd_verify_stability(args) -> int:
    settings = Settings(args)
    config = settings.experiment()
    engine = config.build_engine()
    budget = config.round_budget(engine.dag.node_count)
    selection = _select_rounds(args.rounds, budget)
    lo, hi = config.interval
    rows = []
    counts: dict[str, int] = {}
    rounds_done = 0
    while not engine.finished and rounds_done < budget:
        snapshot = engine.snapshot()
        trace = engine.step_round(record=True)
        rounds_done += 1
        sets_t = round_sets(trace)
        applicable = lo <= sets_t.alpha < hi and sets_t.non_self_stable
        if selection is None:
            wanted = bool(applicable)
        else:
            wanted = trace.t in selection
        if not wanted:
            continue
        estimate = None
        if applicable:
            estimate = stab.estimate_round_expectation(
                snapshot, snapshot.non_self_stable(),
                replications=config.replications,
                confidence=config.confidence,
                seed=config.seed * 1_000_003 + trace.t,
            )
        verdict = stability_verdict(sets_t, estimate, config.interval)
        counts[verdict.conjunct_a or verdict.status] = \
            counts.get(verdict.conjunct_a or verdict.status, 0) + 1
        est = verdict.estimate
        rows.append({
            "t": verdict.t, "alpha": verdict.alpha, "p_idle": sets_t.p_idle,
            "u_count": verdict.u_size, "status": verdict.status,
            "threshold": verdict.threshold,
            "mean": est.mean if est else None,
            "half_width": est.half_width if est else None,
            "replications": est.replications if est else None,
            "truncated": est.truncated if est else None,
            "conjunct_a": verdict.conjunct_a,
            "b_max": verdict.b_max, "b_bound": verdict.b_bound,
            "conjunct_b": verdict.conjunct_b,
        })
    write_table(args.out, args.format, STABILITY_COLUMNS, rows,
                extra={"summary": counts})
    summary = " ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"verdicts: {summary or 'none'}", file=sys.stderr)
    return EXIT_OK


SWEEP_COLUMNS = ["scheduler", "contention", "kind", "size", "P", "seed",
                 "rounds", "termination", "executed", "stolen_total",
                 "spread_total", "mean_alpha", "max_deque", "invariants",
                 "error"]


def cmd_sweep(args) -> int:
    settings = Settings(args)
    schedulers = settings.get_list("schedulers", [WS, WSS])
    p_values = settings.get_list("P-values", [4, 8], int)
    sizes = settings.get_list("sizes", [16], int)
    seeds = settings.get_list("seeds", [1], int)
    contentions = settings.get_list("contentions", [SINGLE_WINNER])
    kind = settings.get("kind", "comb")
    if not (schedulers and p_values and sizes and seeds and contentions):
        raise ValueError("sweep ranges must be non-empty")
    cells = sorted(
        (sched, cont, size, p, seed)
        for sched in schedulers for cont in contentions
        for size in sizes for p in p_values for seed in seeds
    )
    rows = []
    had_violation = False
    had_error = False
    for sched, cont, size, p, seed in cells:
        row = {"scheduler": sched, "contention": cont, "kind": kind,
               "size": size, "P": p, "seed": seed, "error": ""}
        try:
            config = ExperimentConfig(scheduler=sched, p_count=p,
                                      dag=DagSpec(kind, size=size),
                                      contention=cont, seed=seed)
            engine = config.build_engine()
            result = engine.run(config.round_budget(engine.dag.node_count))
            violations = verify_run(result.traces, sched, engine.finished)
            alphas = [tr.alpha for tr in result.traces]
            row.update({
                "rounds": len(result.traces),
                "termination": result.reason,
                "executed": sum(1 for tr in result.traces
                                for x in tr.executed if x is not None),
                "stolen_total": sum(tr.stolen_count() for tr in result.traces),
                "spread_total": sum(tr.spread_count() for tr in result.traces),
                "mean_alpha": sum(alphas) / len(alphas) if alphas else None,
                "max_deque": max((max(tr.deque_sizes) for tr in result.traces),
                                 default=0),
                "invariants": "violated" if violations else "ok",
            })
            if violations:
                had_violation = True
        except Exception as exc:  # cell failures are data, not fatal
            row["error"] = str(exc)
            had_error = True
        rows.append(row)
    write_table(args.out, args.format, SWEEP_COLUMNS, rows)
    if had_violation:
        return EXIT_INVARIANT
    return EXIT_CONFIG if had_error else EXIT_OK


def cmd_report(args) -> int:
    from . import report
    paths = report.render_all(args.out_dir, seed=args.seed or 1)
    for p in paths:
        print(p, file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(sub, out_default=None):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--seed", type=int, default=None, help="RNG seed")
    sub.add_argument("--out", default=out_default, help="output path (default stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_experiment_flags(sub):
    sub.add_argument("--scheduler", choices=SCHEDULERS, default=None)
    sub.add_argument("--P", type=int, default=None, dest="P",
                     help="processor count (>= 2)")
    sub.add_argument("--kind", choices=DagSpec.KINDS, default=None)
    sub.add_argument("--size", type=int, default=None,
                     help="generator size parameter")
    sub.add_argument("--dag", default=None, help="dag file (with --kind file)")
    sub.add_argument("--contention", choices=CONTENTION_MODELS, default=None)
    sub.add_argument("--max-rounds", type=int, default=None)
    sub.add_argument("--replications", type=int, default=None)
    sub.add_argument("--confidence", type=float, default=None)
    sub.add_argument("--interval-lo", type=float, default=None)
    sub.add_argument("--interval-hi", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wssim",
        description="Round-synchronous work-stealing scheduler simulator "
                    "and bound verifier.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("gen-dag", help="generate a computation dag file")
    p.add_argument("--kind", choices=("chain", "comb", "binary_tree"),
                   required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_gen_dag)

    p = subs.add_parser("run", help="run one computation, emit per-round table")
    _add_common(p)
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("verify-bounds", help="check closed forms vs oracles")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=None,
                   help="evaluate the donation floor at one idle ratio")
    p.add_argument("--bins-max", type=int, default=None)
    p.add_argument("--tosses-max", type=int, default=None)
    p.add_argument("--replications", type=int, default=None)
    p.set_defaults(func=cmd_verify_bounds)

    p = subs.add_parser("verify-stability", help="per-round stability verdicts")
    _add_common(p)
    _add_experiment_flags(p)
    p.add_argument("--rounds", default="applicable",
                   help="'applicable', 'all', or comma-separated indices")
    p.set_defaults(func=cmd_verify_stability)

    p = subs.add_parser("sweep", help="experiment grid, one row per cell")
    _add_common(p)
    p.add_argument("--schedulers", default=None, help="comma list, e.g. WS,WSS")
    p.add_argument("--P-values", default=None, dest="P_values",
                   help="comma list of processor counts")
    p.add_argument("--sizes", default=None, help="comma list of dag sizes")
    p.add_argument("--seeds", default=None, help="comma list of seeds")
    p.add_argument("--contentions", default=None, help="comma list of models")
    p.add_argument("--kind", choices=("chain", "comb", "binary_tree"),
                   default=None)
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("report", help="render figures and their data tables")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssertionError as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:  # console_scripts hook
    sys.exit(main())


if __name__ == "__main__":
    entry()

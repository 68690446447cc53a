"""Experiment grid runner, result summaries, and the command-line interface.

Every (function, strategy, optimizer, repeat) cell writes one JSON record;
cells whose record already exists without an error are skipped, so an
interrupted experiment can simply be rerun.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import benchmarks
from .bo import BOConfig, RunRecord, run_bo
from .model_selection import Kind, Optimizer, SelectionStrategy

logger = logging.getLogger(__name__)

ALL_STRATEGIES = [(k, o) for k in (Kind.MLM, Kind.LOO_CV, Kind.TG_MLM)
                  for o in (Optimizer.BFGS, Optimizer.LBFGSB)]

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2


class PlanError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    functions: list
    strategies: list = field(default_factory=lambda: list(ALL_STRATEGIES))
    repeats: int = 20
    base_seed: int = 0
    output_path: Optional[str] = None
    budgets: dict = field(default_factory=dict)
    n_initial: int = 3
    rho_fraction: float = 0.05
    recheck_every: Optional[int] = None
    noise_variance: float = 1e-4
    n_starts: int = 100

    def __post_init__(self):
        if not self.functions:
            raise PlanError("plan lists no functions")
        try:
            self.functions = [benchmarks.get(f).name for f in self.functions]
        except KeyError as err:
            raise PlanError(str(err)) from None
        strategies = []
        for s in self.strategies:
            if isinstance(s, dict):
                s = (s.get("kind"), s.get("optimizer"))
            try:
                kind, opt = s
                strategies.append((Kind(kind), Optimizer(opt)))
            except (TypeError, ValueError):
                raise PlanError(f"invalid strategy entry {s!r}") from None
        if not strategies:
            raise PlanError("plan lists no strategies")
        self.strategies = strategies
        if not isinstance(self.repeats, int) or self.repeats < 1:
            raise PlanError("repeats must be a positive integer")
        self.budgets = {benchmarks.get(k).name: int(v) for k, v in self.budgets.items()}
        for name in self.functions:
            if self.budget(name) < self.n_initial:
                raise PlanError(f"budget for {name} is below the number of initial points")

    def budget(self, name: str) -> int:
        return self.budgets.get(name, benchmarks.get(name).default_budget)

    def cells(self):
        for name in self.functions:
            for kind, opt in self.strategies:
                for rep in range(self.repeats):
                    yield name, kind, opt, self.base_seed + rep

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise PlanError(f"unknown plan fields: {sorted(unknown)}")
        if "functions" not in data:
            raise PlanError("plan must list functions")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise PlanError(f"cannot read plan {path}: {err}") from None
        if not isinstance(data, dict):
            raise PlanError("plan file must hold a JSON object")
        return cls.from_dict(data)


def cell_filename(function, kind, optimizer, seed) -> str:
    return f"{function}__{Kind(kind).value}__{Optimizer(optimizer).value}__seed{seed}.json"


def atomic_write_json(path: Path, payload: dict):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=1)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_cell(function, kind, optimizer, seed, budget, n_initial=3,
             rho_fraction=0.05, recheck_every=None, noise_variance=1e-4,
             n_starts=100) -> dict:
    """One BO run on a named benchmark, as a JSON-ready record."""
    spec = benchmarks.get(function)
    strategy = SelectionStrategy(kind, optimizer, rho_fraction, recheck_every)
    config = BOConfig(spec.domain, budget, strategy, n_initial=n_initial,
                      noise_variance=noise_variance, seed=seed, n_starts=n_starts)
    try:
        record = run_bo(spec, config)
    except Exception as err:  # noqa: BLE001 - recorded, the grid goes on
        logger.exception("cell %s/%s/%s seed %s failed", function, kind, optimizer, seed)
        record = RunRecord(n_initial, error=f"{type(err).__name__}: {err}")
    out = {
        "function": spec.name,
        "strategy": strategy.kind.value,
        "optimizer": strategy.optimizer.value,
        "seed": seed,
        "budget": budget,
        "rho_fraction": rho_fraction,
        "recheck_every": recheck_every,
        "noise_variance": noise_variance,
        "n_starts": n_starts,
        "reference_minimum": spec.reference_minimum,
    }
    out.update(record.to_dict())
    return out


def _run_cell_to_file(args):
    path, kwargs = args
    payload = run_cell(**kwargs)
    atomic_write_json(path, payload)
    return payload


def _check_writable(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    fd, probe = tempfile.mkstemp(dir=out_dir, prefix=".probe-")
    os.close(fd)
    os.unlink(probe)


def load_record(path) -> dict:
    return json.loads(Path(path).read_text())


def run_experiment(plan: ExperimentPlan, out_dir=None, jobs: int = 1):
    """Run every missing cell of ``plan``.

    Returns ``(records, n_computed)`` with the records of all cells, read
    back from disk for cells that were already complete.
    """
    out_dir = Path(out_dir or plan.output_path or ".")
    _check_writable(out_dir)
    todo, records = [], {}
    for name, kind, opt, seed in plan.cells():
        path = out_dir / cell_filename(name, kind, opt, seed)
        if path.exists():
            try:
                rec = load_record(path)
                if not rec.get("error"):
                    records[path] = rec
                    continue
            except (OSError, json.JSONDecodeError):
                pass
        kwargs = dict(function=name, kind=kind.value, optimizer=opt.value, seed=seed,
                      budget=plan.budget(name), n_initial=plan.n_initial,
                      rho_fraction=plan.rho_fraction, recheck_every=plan.recheck_every,
                      noise_variance=plan.noise_variance, n_starts=plan.n_starts)
        todo.append((path, kwargs))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            for (path, _), rec in zip(todo, pool.map(_run_cell_to_file, todo)):
                records[path] = rec
    else:
        for item in todo:
            records[item[0]] = _run_cell_to_file(item)
    ordered = [records[out_dir / cell_filename(*c)] for c in plan.cells()]
    return ordered, len(todo)


def load_records(in_dir) -> list[dict]:
    return [load_record(p) for p in sorted(Path(in_dir).glob("*.json"))]


@dataclass
class SummaryRow:
    function: str
    strategy: str
    optimizer: str
    mean_final_gap: float
    std_final_gap: float
    total_model_selection_seconds: float
    total_acquisition_seconds: float
    skip_count: int
    repeats: int = 0
    failures: int = 0

    @property
    def gap_text(self) -> str:
        return format_mean_std(self.mean_final_gap, self.std_final_gap)


def format_mean_std(mean: float, std: float) -> str:
    return f"{mean:.3f} ± {std:.3f}"


def final_gap(record: dict) -> float:
    return record["best_y"] - record["reference_minimum"]


def summarize(records):
    """Aggregate records per (function, strategy, optimizer).

    Returns ``(rows, figures)``. ``figures`` holds, per cell key
    ``"function/strategy/optimizer"``, the mean and std of the best-so-far
    gap at every iteration and the per-phase timing split.
    """
    records = list(records)
    if not records:
        raise ValueError("nothing to summarize")
    groups = {}
    for rec in records:
        groups.setdefault((rec["function"], rec["strategy"], rec["optimizer"]), []).append(rec)
    rows, figures = [], {}
    for key in sorted(groups):
        recs = groups[key]
        ok = [r for r in recs if not r.get("error") and r["best_y"] is not None]
        gaps = np.array([final_gap(r) for r in ok]) if ok else np.array([np.nan])
        t_sel = [sum(it["t_model_sel_s"] for it in r["iterations"]) for r in ok]
        t_acq = [sum(it["t_acq_s"] for it in r["iterations"]) for r in ok]
        rows.append(SummaryRow(
            *key,
            mean_final_gap=float(np.mean(gaps)),
            std_final_gap=float(np.std(gaps)),
            total_model_selection_seconds=float(np.sum(t_sel)),
            total_acquisition_seconds=float(np.sum(t_acq)),
            skip_count=int(sum(r.get("skip_count", 0) for r in ok)),
            repeats=len(ok),
            failures=len(recs) - len(ok),
        ))
        if ok:
            length = min(len(r["iterations"]) for r in ok)
            curves = np.array([[it["best_y"] - r["reference_minimum"]
                                for it in r["iterations"][:length]] for r in ok])
            figures["/".join(key)] = {
                "gap_mean": curves.mean(axis=0).tolist(),
                "gap_std": curves.std(axis=0).tolist(),
                "model_selection_seconds": t_sel,
                "acquisition_seconds": t_acq,
                "optimized_counts": [sum(it["was_optimized"] for it in r["iterations"])
                                     for r in ok],
            }
    return rows, figures


CSV_FIELDS = ["function", "strategy", "optimizer", "mean_final_gap", "std_final_gap",
              "gap", "total_model_selection_seconds", "total_acquisition_seconds",
              "skip_count", "repeats", "failures"]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({**asdict(row), "gap": row.gap_text})
    return buf.getvalue()


def rows_to_markdown(rows) -> str:
    lines = ["| function | method | final gap | model selection (s) | acquisition (s) | skips |",
             "|---|---|---|---|---|---|"]
    names = {"mlm": "MLM", "loo": "LOO", "tg_mlm": "tgMLM"}
    opts = {"bfgs": "BFGS", "lbfgsb": "L-BFGS-B"}
    for r in rows:
        method = f"{opts[r.optimizer]} ({names[r.strategy]})"
        lines.append(f"| {r.function} | {method} | {r.gap_text} | "
                     f"{r.total_model_selection_seconds:.2f} | "
                     f"{r.total_acquisition_seconds:.2f} | {r.skip_count} |")
    return "\n".join(lines) + "\n"


def write_summary(rows, figures, out_file):
    """Write ``out_file`` (CSV) plus sibling ``.md`` and ``_figures.json`` files."""
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rows_to_csv(rows))
    out.with_suffix(".md").write_text(rows_to_markdown(rows))
    out.with_name(out.stem + "_figures.json").write_text(json.dumps(figures, indent=1))


def _cmd_run(args):
    try:
        plan = ExperimentPlan.load(args.plan)
    except PlanError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out or plan.output_path
    if not out:
        print("error: no output directory (--out or plan output_path)", file=sys.stderr)
        return EXIT_INVALID
    try:
        records, n_new = run_experiment(plan, out, args.jobs)
    except OSError as err:
        print(f"error: cannot write to {out}: {err}", file=sys.stderr)
        return EXIT_INVALID
    failed = sum(bool(r.get("error")) for r in records)
    print(f"{len(records)} cells ({n_new} computed, {failed} failed) in {out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def _cmd_summarize(args):
    records = load_records(args.in_dir)
    if not records:
        print(f"error: no records in {args.in_dir}", file=sys.stderr)
        return EXIT_INVALID
    rows, figures = summarize(records)
    write_summary(rows, figures, args.out)
    print(rows_to_markdown(rows), end="")
    return EXIT_PARTIAL if any(r.failures for r in rows) else EXIT_OK


def _cmd_bench(args):
    try:
        plan = ExperimentPlan(
            functions=[args.function], strategies=[(args.strategy, args.optimizer)],
            repeats=args.repeats, base_seed=args.seed,
            budgets={args.function: args.budget} if args.budget else {},
            rho_fraction=args.rho_fraction, n_starts=args.n_starts)
    except PlanError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        records, _ = run_experiment(plan, args.out, args.jobs)
    else:
        records = [run_cell(name, kind.value, opt.value, seed, plan.budget(name),
                            rho_fraction=plan.rho_fraction, n_starts=plan.n_starts)
                   for name, kind, opt, seed in plan.cells()]
    rows, _ = summarize(records)
    print(rows_to_markdown(rows), end="")
    return EXIT_PARTIAL if any(r.failures for r in rows) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgbo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run (or resume) an experiment plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("summarize", help="tabulate a directory of run records")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("bench", help="repeat one strategy on one benchmark")
    p.add_argument("--function", required=True)
    p.add_argument("--strategy", choices=[k.value for k in Kind], default="tg_mlm")
    p.add_argument("--optimizer", choices=[o.value for o in Optimizer], default="lbfgsb")
    p.add_argument("--budget", type=int)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho-fraction", type=float, default=0.05)
    p.add_argument("--n-starts", type=int, default=100)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)

"""Command-line front end.

Four subcommands: ``select`` runs the full selection pipeline on a CSV
and writes per-arm JSON plus criterion/scree CSV exports; ``oracle``
reports the exact collection of a DAG given as an edge list; ``simulate``
reruns the benchmark grid; ``ate`` computes the matching ATE for a pair
of adjustment sets.  Exit codes: 0 success, 2 invalid input or flags,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .criterion import CriterionConfig, criterion_table
from .dag_oracle import Dag, true_collection
from .data_model import SubsetId, load_csv
from .errors import (
    AdjustKitError,
    ContradictoryHints,
    CyclicGraph,
    DimensionTooLarge,
    EmptyGroup,
    InvalidMechanism,
    SchemaError,
    SingularBlock,
    SingularCovariance,
    SliceTooSmall,
    TooFewObservations,
    UnknownModel,
)
from .selection import SelectorConfig, default_cn, select
from .set_analysis import estimate_ate, prune_hints, structure_report
from .sim_bench import run_benchmark

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_USAGE_ERRORS = (
    SchemaError,
    CyclicGraph,
    DimensionTooLarge,
    UnknownModel,
    ContradictoryHints,
    InvalidMechanism,
    FileNotFoundError,
    ValueError,
)
_NUMERICAL_ERRORS = (
    SingularCovariance,
    SingularBlock,
    EmptyGroup,
    TooFewObservations,
    SliceTooSmall,
    np.linalg.LinAlgError,
)


@dataclass(frozen=True)
class RunConfig:
    """Validated flag bundle for one CLI invocation."""

    command: str
    input_path: str | None = None
    dag_path: str | None = None
    variant: str = "mn"
    method_y: str = "sir"
    method_t: str = "sir"
    h: int = 5
    c0: float = 0.6
    cn: float | None = None
    arm: str = "both"
    seed: int = 0
    output: str | None = None
    hints_path: str | None = None
    threads: int = 1
    models: tuple[int, ...] = ()
    n_values: tuple[int, ...] = ()
    variants: tuple[str, ...] = ()
    reps: int = 1
    a0: str = ""
    a1: str = ""

    def arms(self) -> tuple[int, ...]:
        return (0, 1) if self.arm == "both" else (int(self.arm),)


def _resolve_threads(flag_value: int | None) -> int:
    if flag_value is None:
        env = os.environ.get("ADJUSTKIT_THREADS", "")
        flag_value = int(env) if env.strip() else 1
    if flag_value < 1:
        raise ValueError("--threads must be a positive integer")
    return flag_value


def _parse_index_list(text: str, p: int, what: str) -> int:
    """Comma-separated 1-based indices to a mask; empty string is the empty set."""
    text = text.strip()
    if not text:
        return 0
    mask = 0
    for tok in text.split(","):
        try:
            idx = int(tok)
        except ValueError:
            raise ValueError(f"{what}: {tok!r} is not an integer index") from None
        if not 1 <= idx <= p:
            raise ValueError(f"{what}: index {idx} outside 1..{p}")
        mask |= 1 << (idx - 1)
    return mask


def _load_hint_masks(path: str, p: int) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("hints file must hold a JSON object")
    known = set(doc) - {"known_forks", "pure_colliders", "pure_noncolliders"}
    if known:
        raise ValueError(f"unknown hint keys: {sorted(known)}")

    def as_mask(key: str) -> int:
        mask = 0
        for idx in doc.get(key, []):
            if not isinstance(idx, int) or not 1 <= idx <= p:
                raise ValueError(f"{key}: index {idx!r} outside 1..{p}")
            mask |= 1 << (idx - 1)
        return mask

    return prune_hints(
        p,
        known_forks=as_mask("known_forks"),
        pure_colliders=as_mask("pure_colliders"),
        pure_noncolliders=as_mask("pure_noncolliders"),
    )


def _fmt_subset(s: SubsetId | None) -> str:
    if s is None:
        return "none"
    if not s.indices:
        return "{}"
    return "{" + ", ".join(map(str, s.indices)) + "}"


def cmd_select(cfg: RunConfig) -> int:
    d = load_csv(cfg.input_path)
    outdir = Path(cfg.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    masks = _load_hint_masks(cfg.hints_path, d.p) if cfg.hints_path else None
    crit_cfg = CriterionConfig(
        method_y=cfg.method_y,
        method_t=cfg.method_t,
        h=cfg.h,
        threads=cfg.threads,
        masks=masks,
    )
    sel_cfg = SelectorConfig(c0=cfg.c0, cn=cfg.cn if cfg.cn is not None else default_cn(d.n))
    for t in cfg.arms():
        table = criterion_table(d, t, variant=cfg.variant, config=crit_cfg)
        if not np.isfinite(table.values).any():
            raise SingularCovariance(f"arm {t}: every conditioning block is singular")
        result = select(table, sel_cfg)
        sets = list(result.selected.subset_ids())
        doc = {
            "arm": t,
            "n": d.n,
            "p": d.p,
            "variant": cfg.variant,
            "method_y": cfg.method_y,
            "method_t": cfg.method_t,
            "h": cfg.h,
            "c0": result.c0,
            "cn": result.cn,
            "subsets_evaluated": int(table.values.size),
            "singular_blocks": table.metadata.get("singular_blocks", 0),
            "tau": result.tau,
            "selected_count": len(sets),
            "selected_sets": [list(s.indices) for s in sets],
            "selected_masks_hex": [f"{s.mask:#x}" for s in sets],
        }
        json_path = outdir / f"selection_arm{t}.json"
        json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

        crit_path = outdir / f"criterion_arm{t}.csv"
        with open(crit_path, "w", encoding="utf-8") as fh:
            fh.write("mask_hex,indices,f_value\n")
            for mask, value in zip(result.order, result.sorted_values):
                idx = " ".join(map(str, SubsetId(int(mask), d.p).indices))
                fh.write(f"{int(mask):#x},{idx},{float(value)!r}\n")

        scree_path = outdir / f"scree_arm{t}.csv"
        with open(scree_path, "w", encoding="utf-8") as fh:
            fh.write("k,f_value\n")
            for k, value in enumerate(result.sorted_values, start=1):
                fh.write(f"{k},{float(value)!r}\n")

        print(
            f"arm {t}: {len(sets)} of {table.values.size} subsets selected "
            f"(tau={result.tau}, cn={result.cn:.6g}) -> {json_path}"
        )
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    text = Path(cfg.dag_path).read_text(encoding="utf-8")
    g = Dag.from_text(text)
    arm = 0 if cfg.arm == "both" else int(cfg.arm)
    coll = true_collection(g, arm=arm)
    rep = structure_report(coll)
    print(f"p = {g.p}, |collection| = {rep.n_members} of {1 << g.p}")
    if g.p <= 6:
        members = ", ".join(_fmt_subset(s) for s in coll.subset_ids())
        print(f"members: {members}")
    print(f"locally minimal: {', '.join(_fmt_subset(s) for s in rep.locally_minimal) or 'none'}")
    print(f"unique minimal: {_fmt_subset(rep.unique_minimal)}")
    print(f"collider indices: {_fmt_subset(rep.colliders)}")
    print(f"refined collider indices: {_fmt_subset(rep.refined_colliders)}")
    for flag in rep.flags:
        print(f"note: {flag}")
    if cfg.output:
        Path(cfg.output).write_text(json.dumps(rep.to_dict(), indent=2) + "\n", encoding="utf-8")
        print(f"report -> {cfg.output}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    result = run_benchmark(
        model_ids=cfg.models,
        n_values=cfg.n_values,
        variants=cfg.variants,
        reps=cfg.reps,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    if cfg.output:
        Path(cfg.output).write_text(result.to_csv(), encoding="utf-8")
        print(f"csv -> {cfg.output}")
    print(result.render())
    return EXIT_OK


def cmd_ate(cfg: RunConfig) -> int:
    d = load_csv(cfg.input_path)
    m0 = _parse_index_list(cfg.a0, d.p, "--a0")
    m1 = _parse_index_list(cfg.a1, d.p, "--a1")
    value = estimate_ate(d, m0, m1)
    print(
        f"matching ATE with a0={_fmt_subset(SubsetId(m0, d.p))}, "
        f"a1={_fmt_subset(SubsetId(m1, d.p))}: {value:.6f}"
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adjustkit",
        description="Exhaustive sufficient-adjustment-set search for binary treatments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="run the selection pipeline on a CSV dataset")
    sel.add_argument("--input", required=True, help="CSV with columns T, Y, X1..Xp")
    sel.add_argument("--variant", choices=("mn", "gc"), default="mn")
    sel.add_argument("--method-y", choices=("sir", "save"), default="sir")
    sel.add_argument("--method-t", choices=("sir", "save"), default="sir")
    sel.add_argument("--slices", type=int, default=5, metavar="H")
    sel.add_argument("--c0", type=float, default=0.6)
    sel.add_argument("--cn", type=float, default=None, help="override the default ridge")
    sel.add_argument("--arm", choices=("0", "1", "both"), default="both")
    sel.add_argument("--output", default=".", metavar="DIR")
    sel.add_argument("--hints", default=None, metavar="FILE", help="JSON pruning hints")
    sel.add_argument("--threads", type=int, default=None)

    orc = sub.add_parser("oracle", help="exact collection of a DAG edge list")
    orc.add_argument("--dag", required=True, metavar="FILE", help="edge list, one 'A -> B' per line")
    orc.add_argument("--arm", choices=("0", "1"), default="0")
    orc.add_argument("--output", default=None, metavar="FILE", help="also write the JSON report")

    sim = sub.add_parser("simulate", help="rerun the benchmark grid")
    sim.add_argument("--models", default="1", help="comma-separated ids in 1..5")
    sim.add_argument("--n", default="400", help="comma-separated sample sizes")
    sim.add_argument("--variants", default="mn", help="comma-separated from {mn,gc}")
    sim.add_argument("--reps", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--output", default=None, metavar="FILE")
    sim.add_argument("--threads", type=int, default=None)

    ate = sub.add_parser("ate", help="matching ATE for a pair of adjustment sets")
    ate.add_argument("--input", required=True, help="CSV with columns T, Y, X1..Xp")
    ate.add_argument("--a0", default="", help="comma-separated indices for the control metric")
    ate.add_argument("--a1", default="", help="comma-separated indices for the treated metric")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "select":
        if args.slices < 2:
            raise ValueError("--slices must be at least 2")
        if not 0.0 < args.c0 < 1.0:
            raise ValueError("--c0 must lie in (0, 1)")
        if args.cn is not None and args.cn <= 0:
            raise ValueError("--cn must be positive")
        return RunConfig(
            command="select",
            input_path=args.input,
            variant=args.variant,
            method_y=args.method_y,
            method_t=args.method_t,
            h=args.slices,
            c0=args.c0,
            cn=args.cn,
            arm=args.arm,
            output=args.output,
            hints_path=args.hints,
            threads=_resolve_threads(args.threads),
        )
    if args.command == "oracle":
        return RunConfig(command="oracle", dag_path=args.dag, arm=args.arm, output=args.output)
    if args.command == "simulate":
        models = tuple(int(tok) for tok in args.models.split(",") if tok.strip())
        n_values = tuple(int(tok) for tok in args.n.split(",") if tok.strip())
        variants = tuple(tok.strip() for tok in args.variants.split(",") if tok.strip())
        if args.reps < 1:
            raise ValueError("--reps must be at least 1")
        if not models or not n_values or not variants:
            raise ValueError("--models, --n, and --variants must be nonempty")
        for v in variants:
            if v not in ("mn", "gc"):
                raise ValueError(f"unknown variant {v!r}")
        return RunConfig(
            command="simulate",
            models=models,
            n_values=n_values,
            variants=variants,
            reps=args.reps,
            seed=args.seed,
            output=args.output,
            threads=_resolve_threads(args.threads),
        )
    return RunConfig(command="ate", input_path=args.input, a0=args.a0, a1=args.a1)


_COMMANDS = {
    "select": cmd_select,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "ate": cmd_ate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[cfg.command](cfg)
    except _NUMERICAL_ERRORS as exc:
        print(f"adjustkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _USAGE_ERRORS as exc:
        print(f"adjustkit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AdjustKitError as exc:
        print(f"adjustkit: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

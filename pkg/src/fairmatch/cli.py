"""Command-line front end.

Subcommands: run, verify, enumerate, audit, experiment.  Exit codes:
0 success / property holds, 1 property fails with a printed witness,
2 usage or parse error.  Identical configuration (including seed) gives
byte-identical output.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import audits
from .mechanisms import sdm, sdmt1, sdmt2
from .model import (
    Instance,
    InstanceParseError,
    Matching,
    SizeGuardError,
    StrictnessError,
    parse_instance,
    parse_matching,
    serialize_matching,
    signature_of,
)
from .oracles import (
    enumerate_pareto,
    enumerate_spm,
    is_pareto_optimal,
    is_strong_priority,
)
from .randomized import rsdm_ties

_EXPERIMENTS = (
    "triangle",
    "family-n3",
    "two-approx",
    "order-strategies",
    "lemmas",
    "dual-feasibility",
)


class _Output:
    def __init__(self, fmt: str, out_path: str | None):
        self.fmt = fmt
        self.lines: list[str] = []
        self.out_path = out_path

    def emit(self, rows: list[dict[str, Any]], columns: Sequence[str]) -> None:
        if self.fmt == "table":
            for row in rows:
                self.lines.append(
                    "  ".join(f"{c}={_fmt(row[c])}" for c in columns if c in row)
                )
        elif self.fmt == "csv":
            self.lines.append(",".join(columns))
            for row in rows:
                self.lines.append(",".join(_fmt(row.get(c, "")) for c in columns))
        else:  # jsonl
            for row in rows:
                self.lines.append(json.dumps(row, sort_keys=True, default=str))

    def say(self, text: str) -> None:
        """Free-form line; only emitted in table format."""
        if self.fmt == "table":
            self.lines.append(text)

    def flush(self) -> None:
        text = "\n".join(self.lines) + ("\n" if self.lines else "")
        if self.out_path:
            Path(self.out_path).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)


def _fmt(x: Any) -> str:
    if isinstance(x, float):
        return str(int(x)) if x.is_integer() else repr(x)
    return str(x)


def _read_instance(path: str) -> Instance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def _parse_order(spec: str, instance: Instance, seed: int) -> tuple[int, ...]:
    if spec == "by-weight":
        return tuple(
            sorted(range(instance.n1), key=lambda i: (-instance.weights[i], i))
        )
    if spec == "uniform":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        return tuple(int(v) for v in rng.permutation(instance.n1))
    name_to_idx = {n: i for i, n in enumerate(instance.agent_names)}
    order = []
    for tok in spec.split(","):
        tok = tok.strip()
        if tok not in name_to_idx:
            raise ValueError(f"unknown agent {tok!r} in order")
        order.append(name_to_idx[tok])
    if sorted(order) != list(range(instance.n1)):
        raise ValueError("order must list every agent exactly once")
    return tuple(order)


def _matching_text(matching: Matching, instance: Instance) -> str:
    return " ".join(
        f"({instance.agent_names[i]},{instance.object_names[a]})"
        for i, a in matching.pairs
    )


def _cmd_run(args: argparse.Namespace) -> int:
    instance = _read_instance(args.instance)
    out = _Output(args.format, args.out)
    columns = ["mechanism", "matching", "signature", "size", "weight"]
    rows: list[dict[str, Any]] = []
    if args.mech == "rsdm":
        if args.seed is None or args.trials is None:
            raise ValueError("rsdm requires --seed and --trials")
        columns = ["mechanism", "trial", "y", "order", "matching", "signature",
                   "size", "weight"]
        for t in range(args.trials):
            matching, draw, order = rsdm_ties(instance, (args.seed, t))
            rows.append(
                {
                    "mechanism": "rsdm",
                    "trial": t,
                    "y": " ".join(repr(v) for v in draw.y),
                    "order": ",".join(instance.agent_names[i] for i in order),
                    "matching": _matching_text(matching, instance),
                    "signature": " ".join(
                        map(str, signature_of(instance, matching, order))
                    ),
                    "size": matching.size,
                    "weight": matching.weight(instance),
                }
            )
    else:
        spec = args.order or ",".join(instance.agent_names)
        order = _parse_order(spec, instance, args.seed or 0)
        mech = {"sdm": sdm, "sdmt1": sdmt1, "sdmt2": sdmt2}[args.mech]
        matching = mech(instance, order)
        rows.append(
            {
                "mechanism": args.mech,
                "matching": _matching_text(matching, instance),
                "signature": " ".join(
                    map(str, signature_of(instance, matching, order))
                ),
                "size": matching.size,
                "weight": matching.weight(instance),
            }
        )
    out.emit(rows, columns)
    out.flush()
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    instance = _read_instance(args.instance)
    matching = parse_matching(
        Path(args.matching).read_text(encoding="utf-8"), instance
    )
    out = _Output(args.format, args.out)
    ok, witness = is_pareto_optimal(instance, matching)
    if not ok:
        assert witness is not None
        agents = " ".join(instance.agent_names[i] for i in witness.agents)
        terminal = (
            ""
            if witness.terminal_object is None
            else f" object {instance.object_names[witness.terminal_object]}"
        )
        out.emit(
            [{"verdict": "not-pareto-optimal", "witness-kind": witness.kind,
              "witness-agents": agents, "witness-object": terminal.strip()}],
            ["verdict", "witness-kind", "witness-agents", "witness-object"],
        )
        out.flush()
        return 1
    if args.order is not None:
        order = _parse_order(args.order, instance, args.seed or 0)
        if not is_strong_priority(instance, matching, order):
            out.emit(
                [{"verdict": "pareto-optimal-but-not-strong-priority",
                  "signature": " ".join(
                      map(str, signature_of(instance, matching, order)))}],
                ["verdict", "signature"],
            )
            out.flush()
            return 1
        out.emit([{"verdict": "strong-priority"}], ["verdict"])
    else:
        out.emit([{"verdict": "pareto-optimal"}], ["verdict"])
    out.flush()
    return 0


def _cmd_enumerate(args: argparse.Namespace) -> int:
    instance = _read_instance(args.instance)
    out = _Output(args.format, args.out)
    if args.order is not None:
        order = _parse_order(args.order, instance, args.seed or 0)
        matchings = enumerate_spm(instance, order)
        kind = "spm"
    else:
        matchings = enumerate_pareto(instance)
        kind = "pareto"
    rows = [
        {"kind": kind, "matching": _matching_text(m, instance), "size": m.size}
        for m in sorted(matchings, key=lambda m: m.pairs)
    ]
    out.emit(rows, ["kind", "matching", "size"])
    out.flush()
    return 0


def _audit_report_rows(report: audits.AuditReport) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = [
        {
            "mechanism": report.mechanism,
            "instances": report.instances_tested,
            "deviations": report.deviations_tested,
            "violations": len(report.violations),
        }
    ]
    for v in report.violations[:50]:
        rows.append(
            {
                "mechanism": report.mechanism,
                "instance": v.instance,
                "agent": v.agent + 1,
                "misreport": v.misreport,
                "obtained": v.obtained_rank,
                "truthful": v.truthful_rank,
            }
        )
    return rows


def _cmd_audit(args: argparse.Namespace) -> int:
    out = _Output(args.format, args.out)
    seed = args.seed or 0
    if args.kind == "truthfulness":
        instances = audits.random_suite(
            args.count, n1_max=args.n1, n2_max=args.n2, seed=seed
        )
        failures = 0
        from itertools import permutations

        if args.n1 > 4:
            raise ValueError("truthfulness audit over all orders needs n1 <= 4")
        mech_name = args.mech
        mech_fn = {"sdm": audits.mechanism_sdm,
                   "sdmt1": audits.mechanism_sdmt1,
                   "sdmt2": audits.mechanism_sdmt2}[mech_name]
        total_dev = 0
        all_viol: list[audits.Violation] = []
        for instance in instances:
            for order in permutations(range(instance.n1)):
                rep = audits.audit_truthfulness(
                    mech_fn(order), [instance], mechanism_name=mech_name
                )
                total_dev += rep.deviations_tested
                all_viol.extend(rep.violations)
        report = audits.AuditReport(
            mechanism=mech_name,
            instances_tested=len(instances),
            deviations_tested=total_dev,
            violations=tuple(all_viol),
        )
        out.emit(_audit_report_rows(report),
                 ["mechanism", "instances", "deviations", "violations",
                  "instance", "agent", "misreport", "obtained", "truthful"])
        failures = len(report.violations)
    elif args.kind == "weights":
        grid = [float(x) for x in args.grid.split(",")]
        instances = audits.random_suite(
            args.count, n1_max=args.n1, n2_max=args.n2, seed=seed,
            weight_values=grid,
        )
        report = audits.audit_weight_truthfulness(instances, grid, seed=seed)
        out.emit(_audit_report_rows(report),
                 ["mechanism", "instances", "deviations", "violations",
                  "instance", "agent", "misreport", "obtained", "truthful"])
        failures = len(report.violations)
    elif args.kind == "non-bossiness":
        if args.n2 > 4:
            raise ValueError("non-bossiness audit needs n2 <= 4")
        instances = audits.random_suite(
            args.count, n1_max=args.n1, n2_max=args.n2,
            tie_choices=(0.0,), seed=seed,
        )
        mech = (
            audits.broken_report_order()
            if args.mech == "broken"
            else _nb_identity_mech(args.mech)
        )
        report = audits.audit_non_bossiness(
            mech, instances, mechanism_name=args.mech
        )
        out.emit(_audit_report_rows(report),
                 ["mechanism", "instances", "deviations", "violations",
                  "instance", "agent", "misreport", "obtained", "truthful"])
        failures = len(report.violations)
    else:  # equivalence
        instances = audits.random_suite(
            args.count, n1_max=args.n1, n2_max=args.n2, seed=seed
        )
        report = audits.audit_equivalence(instances, seed=seed)
        out.emit(_audit_report_rows(report),
                 ["mechanism", "instances", "deviations", "violations",
                  "instance", "agent", "misreport", "obtained", "truthful"])
        failures = len(report.violations)
    out.flush()
    return 1 if failures else 0


def _nb_identity_mech(name: str) -> audits.Mechanism:
    def run(instance: Instance) -> Matching:
        order = tuple(range(instance.n1))
        return {"sdm": sdm, "sdmt1": sdmt1, "sdmt2": sdmt2}[name](instance, order)

    return run


def _cmd_experiment(args: argparse.Namespace) -> int:
    out = _Output(args.format, args.out)
    seed = args.seed or 0
    code = 0
    if args.name == "triangle":
        rep = audits.experiment_triangle(args.n, args.trials, seed)
        out.emit(
            [dataclasses.asdict(rep)],
            ["n", "trials", "mean_size", "std_error", "frac_of_opt", "ratio_to_opt"],
        )
    elif args.name == "family-n3":
        rep = audits.experiment_family_n3()
        rows = [
            {"instance": k + 1, "size": s, "opt": o}
            for k, (s, o) in enumerate(zip(rep.sizes, rep.opt_sizes))
        ]
        rows.append({"instance": "total", "size": rep.total, "opt": rep.opt_total})
        out.emit(rows, ["instance", "size", "opt"])
    elif args.name == "two-approx":
        instances = audits.random_suite(
            args.count, n1_max=args.n1, n2_max=args.n2, seed=seed,
            weight_values=(1.0, 2.0, 3.0, 5.0),
        )
        rep = audits.experiment_two_approx(instances)
        out.emit(
            [dataclasses.asdict(rep)],
            ["instances_tested", "worst_ratio", "violations"],
        )
        code = 0 if rep.passed else 1
    elif args.name == "order-strategies":
        rep = audits.experiment_order_strategies(args.n, args.trials, seed=seed)
        rows = [
            {
                "strategy": s,
                "fraction": rep.fractions[s],
                "std_error": rep.std_errors[s],
            }
            for s in sorted(rep.fractions)
        ]
        out.emit(rows, ["strategy", "fraction", "std_error"])
    elif args.name == "lemmas":
        instances = audits.random_suite(
            args.count, n1_max=args.n1, n2_max=args.n2, seed=seed,
            n1_min=2, n2_min=2,
        )
        rep = audits.audit_lemmas(
            instances, draws_per_agent=args.draws, seed=seed
        )
        out.emit(
            [dataclasses.asdict(rep)],
            ["instances_tested", "dominance_checks", "dominance_violations",
             "monotonicity_checks", "monotonicity_violations"],
        )
        out.say(f"dominance violations: {rep.dominance_violations}")
        out.say(f"monotonicity violations: {rep.monotonicity_violations}")
        code = 0 if rep.passed else 1
    else:  # dual-feasibility
        instances = audits.random_suite(
            args.count, n1_max=args.n1, n2_max=args.n2, seed=seed,
            n1_min=2, n2_min=2,
        )
        rep = audits.audit_dual_feasibility(instances, trials=args.trials, seed=seed)
        out.emit(
            [dataclasses.asdict(rep)],
            ["instances_tested", "trials", "pairs_checked", "failures",
             "min_margin"],
        )
        code = 0 if rep.passed else 1
    out.flush()
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairmatch",
        description="House allocation mechanisms, verification, and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help="RNG seed (64-bit)")
        p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials")
        p.add_argument(
            "--format", choices=("table", "csv", "jsonl"), default="table"
        )
        p.add_argument("--out", default=None, help="write output to a file")

    p_run = sub.add_parser("run", help="run a mechanism on an instance file")
    p_run.add_argument("instance")
    p_run.add_argument("--mech", choices=("sdm", "sdmt1", "sdmt2", "rsdm"),
                       required=True)
    p_run.add_argument("--order", default=None,
                       help="comma list of agents, 'by-weight', or 'uniform'")
    common(p_run)

    p_ver = sub.add_parser("verify", help="check a matching for Pareto optimality")
    p_ver.add_argument("instance")
    p_ver.add_argument("matching")
    p_ver.add_argument("--order", default=None,
                       help="also require strong priority w.r.t. this order")
    common(p_ver)

    p_enum = sub.add_parser("enumerate", help="enumerate Pareto or SPM matchings")
    p_enum.add_argument("instance")
    p_enum.add_argument("--order", default=None,
                        help="enumerate SPMs w.r.t. this order instead")
    common(p_enum)

    p_audit = sub.add_parser("audit", help="run a property audit on random suites")
    p_audit.add_argument(
        "kind", choices=("truthfulness", "weights", "non-bossiness", "equivalence")
    )
    p_audit.add_argument("--mech", choices=("sdm", "sdmt1", "sdmt2", "broken"),
                         default="sdmt1")
    p_audit.add_argument("--count", type=int, default=20)
    p_audit.add_argument("--n1", type=int, default=3)
    p_audit.add_argument("--n2", type=int, default=3)
    p_audit.add_argument("--grid", default="1,2,3", help="weight grid for 'weights'")
    common(p_audit)

    p_exp = sub.add_parser("experiment", help="reproduce a headline experiment")
    p_exp.add_argument("name", choices=_EXPERIMENTS)
    p_exp.add_argument("--n", type=int, default=100)
    p_exp.add_argument("--count", type=int, default=50)
    p_exp.add_argument("--n1", type=int, default=5)
    p_exp.add_argument("--n2", type=int, default=5)
    p_exp.add_argument("--draws", type=int, default=5)
    common(p_exp)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", None) is None:
        args.trials = 1000
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "enumerate":
            return _cmd_enumerate(args)
        if args.command == "audit":
            return _cmd_audit(args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        raise AssertionError("unreachable")
    except (InstanceParseError, StrictnessError, SizeGuardError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

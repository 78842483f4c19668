"""Command-line surface: analyze, gate, grow, audit, generate, sweep, estimate.

Exit codes are uniform across commands:
  0  success / safe
  1  gate rejection or audit violation
  2  malformed or inconsistent input
  3  scale or convergence failure

Relative output paths resolve against TRUSTGROW_OUTDIR when it is set.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import connectivity, engine, fileio, scenarios
from ._version import __version__
from .errors import (
    ConvergenceError,
    InfeasiblePolicyError,
    InputError,
    LedgerConsistencyError,
    ScaleError,
    TrustGrowError,
    UndefinedMetricError,
)
from .graph import VertexSet
from .identity import CommunityTrustGraph

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_INPUT = 2
EXIT_SCALE = 3


def _out_path(name: str | None) -> Path | None:
    if name is None:
        return None
    path = Path(name)
    base = os.environ.get("TRUSTGROW_OUTDIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, Fraction):
        return f"{fileio.frac_str(value)} ({float(value):.6g})"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _print_conditions(conditions) -> None:
    for cond in conditions:
        print(
            f"  [{cond.status.upper():7s}] {cond.condition}: "
            f"measured={_fmt(cond.measured)} bound={_fmt(cond.bound)}"
            + (f"  ({cond.note})" if cond.note else "")
        )


def cmd_analyze(args) -> int:
    graph = fileio.read_graph(args.graph)
    report = connectivity.analyze(
        graph,
        exact_limit=args.exact_limit,
        spectral=args.spectral,
        tol=args.tol,
    )
    print(f"graph: {args.graph} ({graph.n} vertices, {graph.edge_count} edges)")
    print(f"method: {report.method}" + (f"  flags: {','.join(report.flags)}" if report.flags else ""))
    print(f"phi_e exact:   {_fmt(report.phi_e_exact)}")
    print(f"phi_e bounds:  [{_fmt(report.phi_e_lower)}, {_fmt(report.phi_e_upper)}]"
          f"  (raw upper {_fmt(report.phi_e_upper_raw)})")
    print(f"lambda2:       {_fmt(report.lambda2)}")
    print(f"phi_v exact:   {_fmt(report.phi_v_exact)}")
    print(f"phi_v lower:   {_fmt(report.phi_v_lower)}")
    if report.witness_cut is not None:
        print(f"phi_e witness: {list(report.witness_cut)}")
    if report.phi_v_witness is not None:
        print(f"phi_v witness: {list(report.phi_v_witness)}")
    out = _out_path(args.out)
    if out:
        manifest = fileio.make_manifest(
            "analyze",
            config={"exact_limit": args.exact_limit, "spectral": args.spectral},
            inputs={"graph": args.graph},
        )
        doc = {
            "manifest": manifest,
            "vertices": graph.n,
            "edges": graph.edge_count,
            "report": {
                "method": report.method,
                "lambda2": report.lambda2,
                "phi_e_exact": report.phi_e_exact,
                "phi_e_lower": report.phi_e_lower,
                "phi_e_upper": report.phi_e_upper,
                "phi_e_upper_raw": report.phi_e_upper_raw,
                "phi_v_exact": report.phi_v_exact,
                "phi_v_lower": report.phi_v_lower,
                "witness_cut": report.witness_cut,
                "phi_v_witness": report.phi_v_witness,
                "flags": list(report.flags),
            },
        }
        out.write_text(fileio.dumps_canonical(doc) + "\n")
        print(f"report written to {out}")
    return EXIT_OK


def cmd_gate(args) -> int:
    graph = fileio.read_graph(args.graph)
    community = VertexSet.from_iterable(graph.n, fileio.read_vertex_ids(args.community))
    additions = VertexSet.from_iterable(graph.n, fileio.read_vertex_ids(args.candidates))
    policy = fileio.read_policy(args.policy)
    if not community:
        raise InputError("community file names no members")
    if not additions.isdisjoint(community):
        raise InputError("candidate members must lie outside the community")
    current = CommunityTrustGraph(graph, community)
    verdict = engine.gate(current, community | additions, policy)
    print(f"mode: {policy.mode}  threshold: {_fmt(policy.threshold)}  delta: {_fmt(policy.delta)}")
    if not policy.feasible:
        print("warning: policy threshold is infeasible for any graph")
    _print_conditions(verdict.conditions)
    print(f"verdict: {'ADMIT' if verdict.admitted else 'REJECT'}")
    out = _out_path(args.out)
    if out:
        manifest = fileio.make_manifest(
            "gate",
            config={"policy": fileio.policy_to_dict(policy)},
            inputs={
                "graph": args.graph,
                "community": args.community,
                "candidates": args.candidates,
                "policy": args.policy,
            },
        )
        doc = {"manifest": manifest, "verdict": fileio.verdict_to_dict(verdict)}
        out.write_text(fileio.dumps_canonical(doc) + "\n")
        print(f"verdict written to {out}")
    return EXIT_OK if verdict.admitted else EXIT_REJECT


def cmd_grow(args) -> int:
    graph = fileio.read_graph(args.graph)
    community = VertexSet.from_iterable(graph.n, fileio.read_vertex_ids(args.community))
    pool = VertexSet.from_iterable(graph.n, fileio.read_vertex_ids(args.pool))
    policy = fileio.read_policy(args.policy)
    history = engine.start_history(graph, community, policy)
    new_history, verdict = engine.grow(history, pool, policy)
    admitted = len(new_history) > len(history)
    added = tuple(sorted(new_history.current().community - community)) if admitted else ()
    print(f"mode: {policy.mode}  threshold: {_fmt(policy.threshold)}")
    if verdict.conditions:
        _print_conditions(verdict.conditions)
    if verdict.flags:
        print(f"flags: {','.join(verdict.flags)}")
    print(f"admitted {len(added)} members: {list(added)}" if admitted else "no batch admitted")
    out = _out_path(args.trace)
    if out:
        manifest = fileio.make_manifest(
            "grow",
            config={
                "vertex_count": graph.n,
                "policy": fileio.policy_to_dict(policy),
            },
            inputs={
                "graph": args.graph,
                "community": args.community,
                "pool": args.pool,
                "policy": args.policy,
            },
        )
        records = [
            scenarios.StepRecord(0, tuple(community), tuple(graph.edges()), None),
            scenarios.StepRecord(1, added, (), verdict),
        ]
        fileio.write_trace(out, records, manifest)
        print(f"trace written to {out}")
    return EXIT_OK if admitted else EXIT_REJECT


def cmd_audit(args) -> int:
    manifest, steps = fileio.read_trace(args.trace)
    ledger = fileio.read_ledger(args.ledger)
    policy = fileio.read_policy(args.policy)
    history = fileio.replay_history(manifest, steps)
    audit = engine.audit_history(history, ledger, policy)
    print(f"history: {len(history)} steps, target beta {_fmt(policy.beta)}")
    print(
        f"  [{audit.initial_condition.status.upper():7s}] initial size bound: "
        f"beta={_fmt(audit.initial_condition.measured)} cap={_fmt(audit.initial_condition.bound)}"
    )
    print(
        f"  [{audit.initial_penetration.status.upper():7s}] initial penetration: "
        f"{_fmt(audit.initial_penetration.measured)} <= {_fmt(audit.initial_penetration.bound)}"
    )
    for i, step in enumerate(audit.steps, 1):
        status = "ok" if step.safe else "VIOLATION"
        premises = "premises held" if step.premises_hold else "premises unmet"
        print(
            f"step {i}: beta {_fmt(step.beta_prev)} -> {_fmt(step.beta_next)}  "
            f"[{premises}] {status}"
        )
        if args.verbose:
            _print_conditions(step.conditions)
    if audit.all_safe:
        print(f"result: safe; byzantine penetration <= {_fmt(policy.beta)} at all steps "
              f"(max {_fmt(audit.max_beta())})")
    else:
        print(f"result: VIOLATION; max beta {_fmt(audit.max_beta())} "
              f"exceeds target {_fmt(policy.beta)}")
    out = _out_path(args.out)
    if out:
        doc = {
            "manifest": fileio.make_manifest(
                "audit",
                inputs={"trace": args.trace, "ledger": args.ledger, "policy": args.policy},
            ),
            "all_safe": audit.all_safe,
            "premises_hold": audit.premises_hold,
            "betas": audit.betas,
            "steps": [
                {
                    "conditions": [fileio.condition_to_dict(c) for c in step.conditions],
                    "beta_prev": step.beta_prev,
                    "beta_next": step.beta_next,
                    "premises_hold": step.premises_hold,
                    "conclusion_holds": step.conclusion_holds,
                    "flags": list(step.flags),
                }
                for step in audit.steps
            ],
        }
        out.write_text(fileio.dumps_canonical(doc) + "\n")
        print(f"audit written to {out}")
    return EXIT_OK if audit.all_safe else EXIT_REJECT


_PRESETS = ("fig-example", "bottleneck-edge", "bottleneck-vertex")


def cmd_generate(args) -> int:
    if (args.preset is None) == (args.scenario is None):
        raise InputError("choose exactly one of --preset or --scenario")
    prefix = args.prefix
    if args.preset:
        seed = args.seed if args.seed is not None else 0
        if args.preset == "fig-example":
            graph, ledger, community = scenarios.fig_example_community()
        elif args.preset == "bottleneck-edge":
            graph, ledger = scenarios.gen_bottleneck(
                args.clique, args.clique, args.bridges, "corrupt_edge", seed
            )
            community = VertexSet.full(graph.n)
        else:
            graph, ledger = scenarios.gen_bottleneck(
                args.clique, args.clique, args.bridges, "corrupt_vertex", seed
            )
            community = VertexSet.full(graph.n)
        manifest = fileio.make_manifest(
            "generate",
            config={"preset": args.preset, "clique": args.clique, "bridges": args.bridges},
            seed=seed,
        )
        graph_path = _out_path(f"{prefix}.graph.txt")
        ledger_path = _out_path(f"{prefix}.ledger.json")
        community_path = _out_path(f"{prefix}.community.txt")
        fileio.write_graph(graph_path, graph, manifest)
        fileio.write_ledger(ledger_path, ledger, manifest)
        fileio.write_vertex_ids(community_path, community, manifest)
        print(f"wrote {graph_path}, {ledger_path}, {community_path}")
        return EXIT_OK

    cfg = fileio.read_scenario_config(args.scenario)
    if args.seed is not None:
        cfg = scenarios.ScenarioConfig(
            seed=args.seed,
            initial_size=cfg.initial_size,
            d=cfg.d,
            honest_growth_rate=cfg.honest_growth_rate,
            adversary=cfg.adversary,
            steps=cfg.steps,
            policy=cfg.policy,
            enforce_gates=cfg.enforce_gates,
        )
    run = scenarios.gen_history(cfg)
    manifest = fileio.make_manifest(
        "generate",
        config={
            "vertex_count": run.history.n,
            "scenario": fileio.scenario_config_to_dict(cfg),
        },
        seed=cfg.seed,
    )
    graph_path = _out_path(f"{prefix}.graph.txt")
    ledger_path = _out_path(f"{prefix}.ledger.json")
    trace_path = _out_path(f"{prefix}.trace.ndjson")
    fileio.write_graph(graph_path, run.history.current().graph, manifest)
    fileio.write_ledger(ledger_path, run.ledger, manifest)
    fileio.write_trace(trace_path, run.records, manifest)
    sizes = [len(s.community) for s in run.history.steps]
    print(f"community sizes: {sizes}")
    print(f"attack edges created: {run.attack_edges_created}")
    print(f"wrote {graph_path}, {ledger_path}, {trace_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    mode = engine.CONDUCTANCE if args.mode == "conductance" else engine.VERTEX_EXPANSION
    phis = [fileio.parse_frac(x) for x in args.phi]
    betas = [fileio.parse_frac(x) for x in args.beta]
    alpha = fileio.parse_frac(args.alpha)
    rows = scenarios.sweep_interplay(mode, phis, betas, alpha)
    gamma_name = "gamma_e_max" if mode == engine.CONDUCTANCE else "gamma_v_max"
    header = f"{'phi':>10} {'beta':>10} {'alpha':>8} {gamma_name:>12} feasible"
    print(header)
    for row in rows:
        print(
            f"{fileio.frac_str(row.phi):>10} {fileio.frac_str(row.beta):>10} "
            f"{fileio.frac_str(row.alpha) if row.alpha is not None else '-':>8} "
            f"{fileio.frac_str(row.gamma_max):>12} {'yes' if row.feasible else 'no'}"
        )
    out = _out_path(args.out)
    if out:
        doc = {
            "manifest": fileio.make_manifest(
                "sweep",
                config={
                    "mode": mode,
                    "phi": [fileio.frac_str(p) for p in phis],
                    "beta": [fileio.frac_str(b) for b in betas],
                    "alpha": fileio.frac_str(alpha),
                },
            ),
            "rows": [
                {
                    "mode": row.mode,
                    "phi": row.phi,
                    "beta": row.beta,
                    "alpha": row.alpha,
                    "gamma_max": row.gamma_max,
                    "feasible": row.feasible,
                }
                for row in rows
            ],
        }
        out.write_text(fileio.dumps_canonical(doc) + "\n")
        print(f"table written to {out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    graph = fileio.read_graph(args.graph)
    ledger = fileio.read_ledger(args.ledger)
    community = VertexSet.from_iterable(graph.n, fileio.read_vertex_ids(args.community))
    ctg = CommunityTrustGraph(graph, community)
    examiner = scenarios.LedgerExaminer(ledger)
    report = scenarios.estimate_parameters(
        ctg, examiner, args.sample, args.radius, args.seed
    )
    print(f"sampled {report.sample_size} of {len(community)} members at radius {report.radius}")
    print(f"beta_hat:  {_fmt(report.beta_hat)}  95% CI [{report.beta_interval[0]:.4f}, "
          f"{report.beta_interval[1]:.4f}]" + ("  (census)" if report.census else ""))
    if report.gamma_hat is not None:
        lo, hi = report.gamma_interval
        print(f"gamma_hat: {_fmt(report.gamma_hat)}  95% CI [{lo:.4f}, {hi:.4f}]")
    elif args.radius < 2:
        print("gamma_hat: requires radius 2")
    out = _out_path(args.out)
    if out:
        doc = {
            "manifest": fileio.make_manifest(
                "estimate",
                config={"sample": args.sample, "radius": args.radius},
                seed=args.seed,
                inputs={
                    "graph": args.graph,
                    "ledger": args.ledger,
                    "community": args.community,
                },
            ),
            "beta_hat": report.beta_hat,
            "beta_interval": list(report.beta_interval),
            "gamma_hat": report.gamma_hat,
            "gamma_interval": list(report.gamma_interval) if report.gamma_interval else None,
            "census": report.census,
        }
        out.write_text(fileio.dumps_canonical(doc) + "\n")
        print(f"estimates written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trustgrow",
        description="Sybil-resilient community growth on trust graphs",
    )
    parser.add_argument("--version", action="version", version=f"trustgrow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="connectivity report for a graph file")
    p.add_argument("graph")
    p.add_argument("--exact-limit", type=int, default=connectivity.DEFAULT_ENUMERATION_LIMIT)
    p.add_argument("--spectral", action="store_true", default=False,
                   help="allow spectral bounds beyond the exact limit")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gate", help="admission check for a candidate batch")
    p.add_argument("graph")
    p.add_argument("community")
    p.add_argument("candidates")
    p.add_argument("policy")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("grow", help="admit the best gate-passing batch from a pool")
    p.add_argument("graph")
    p.add_argument("community")
    p.add_argument("pool")
    p.add_argument("policy")
    p.add_argument("--trace", help="write the resulting history trace here")
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("audit", help="replay a trace and verify safety with a ledger")
    p.add_argument("trace")
    p.add_argument("ledger")
    p.add_argument("policy")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("generate", help="generate graphs, ledgers, and scenario traces")
    p.add_argument("--preset", choices=_PRESETS)
    p.add_argument("--scenario", help="scenario config JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--clique", type=int, default=10, help="cluster size for bottleneck presets")
    p.add_argument("--bridges", type=int, default=1)
    p.add_argument("--prefix", default="scenario")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sweep", help="tabulate the largest tolerable gamma")
    p.add_argument("--mode", choices=("conductance", "vertex"), required=True)
    p.add_argument("--phi", nargs="+", required=True)
    p.add_argument("--beta", nargs="+", required=True)
    p.add_argument("--alpha", default="1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("estimate", help="sample-based penetration estimates")
    p.add_argument("graph")
    p.add_argument("ledger")
    p.add_argument("community")
    p.add_argument("--sample", type=int, required=True)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        code = args.func(args)
    except (ScaleError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except (InputError, LedgerConsistencyError, UndefinedMetricError, InfeasiblePolicyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TrustGrowError as exc:  # fallback for any future error class
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    elapsed = time.monotonic() - started
    print(f"done in {elapsed:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""File formats: graphs, vertex sets, ledgers, policies, history traces.

Every writer canonicalizes its output (sorted edges with u < v, sorted JSON
keys, compact separators) so identical in-memory structures always produce
identical bytes. Every output file embeds a run manifest; wall-clock timing
is deliberately kept out of it so reruns with the same seed stay
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

from ._version import __version__
from .engine import AdmissionVerdict, ConditionResult, GrowthPolicy
from .errors import InputError
from .graph import TrustGraph, VertexSet
from .identity import CommunityHistory, HistoryStep, IdentityLedger, IdentityRecord
from .scenarios import AdversaryConfig, ScenarioConfig, StepRecord


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def parse_frac(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(str(text))
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse fraction from {text!r}") from exc


def _jsonify(value: Any) -> Any:
    """Recursively convert values into canonical JSON-compatible data."""
    if isinstance(value, Fraction):
        return frac_str(value)
    if isinstance(value, VertexSet):
        return list(value)
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    return value


def dumps_canonical(obj: Any) -> str:
    return json.dumps(_jsonify(obj), sort_keys=True, separators=(",", ":"))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def make_manifest(
    command: str,
    config: dict | None = None,
    seed: int | None = None,
    inputs: dict[str, str | Path] | None = None,
) -> dict:
    manifest: dict[str, Any] = {
        "tool": "trustgrow",
        "version": __version__,
        "command": command,
    }
    if seed is not None:
        manifest["seed"] = seed
    if config:
        manifest["config"] = _jsonify(config)
    if inputs:
        manifest["inputs"] = {
            name: {"path": str(p), "sha256": sha256_file(p)} for name, p in inputs.items()
        }
    return manifest


# --- graphs ---------------------------------------------------------------


def write_graph(path: str | Path, g: TrustGraph, manifest: dict | None = None) -> None:
    """Write a graph; .json gets the structured format, anything else text."""
    path = Path(path)
    if path.suffix == ".json":
        doc: dict[str, Any] = {"vertices": g.n, "edges": [list(e) for e in g.edges()]}
        if manifest:
            doc["manifest"] = manifest
        path.write_text(dumps_canonical(doc) + "\n")
        return
    lines = []
    if manifest:
        lines.append("# manifest: " + dumps_canonical(manifest))
    lines.append(f"# vertices: {g.n}")
    for u, v in g.edges():
        lines.append(f"{u} {v}")
    path.write_text("\n".join(lines) + "\n")


def read_graph(path: str | Path) -> TrustGraph:
    """Read either graph format; detected by extension, then by content."""
    path = Path(path)
    text = path.read_text()
    stripped = text.lstrip()
    if path.suffix == ".json" or stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON graph: {exc}") from exc
        if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
            raise InputError(f"{path}: JSON graph needs 'vertices' and 'edges'")
        try:
            n = int(doc["vertices"])
            edges = [(int(u), int(v)) for u, v in doc["edges"]]
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: malformed JSON graph: {exc}") from exc
        return TrustGraph(n, edges)
    n_declared = None
    edges = []
    max_seen = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("# vertices:"):
            n_declared = int(line.split(":", 1)[1])
            continue
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-integer endpoint in {raw!r}") from exc
        edges.append((u, v))
        max_seen = max(max_seen, u, v)
    n = n_declared if n_declared is not None else max_seen + 1
    if n <= 0:
        raise InputError(f"{path}: no vertices found")
    return TrustGraph(n, edges)


# --- vertex sets ----------------------------------------------------------


def write_vertex_ids(path: str | Path, ids: Iterable[int], manifest: dict | None = None) -> None:
    path = Path(path)
    ids = sorted(set(ids))
    if path.suffix == ".json":
        doc: dict[str, Any] = {"members": ids}
        if manifest:
            doc["manifest"] = manifest
        path.write_text(dumps_canonical(doc) + "\n")
        return
    lines = []
    if manifest:
        lines.append("# manifest: " + dumps_canonical(manifest))
    lines.extend(str(v) for v in ids)
    path.write_text("\n".join(lines) + "\n")


def read_vertex_ids(path: str | Path) -> tuple[int, ...]:
    path = Path(path)
    text = path.read_text()
    stripped = text.lstrip()
    if path.suffix == ".json" or stripped.startswith("{") or stripped.startswith("["):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON vertex set: {exc}") from exc
        if isinstance(doc, dict):
            doc = doc.get("members")
        if not isinstance(doc, list):
            raise InputError(f"{path}: expected a list of vertex ids")
        try:
            return tuple(sorted({int(v) for v in doc}))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: non-integer vertex id: {exc}") from exc
    ids = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        for tok in line.split():
            try:
                ids.add(int(tok))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: non-integer id {tok!r}") from exc
    return tuple(sorted(ids))


# --- ledgers ----------------------------------------------------------------


def write_ledger(path: str | Path, ledger: IdentityLedger, manifest: dict | None = None) -> None:
    doc: dict[str, Any] = {
        "identities": {
            str(v): {"genuine": rec.genuine, "corrupt_at_heart": rec.corrupt_at_heart}
            for v, rec in enumerate(ledger.records)
        }
    }
    if manifest:
        doc["manifest"] = manifest
    Path(path).write_text(dumps_canonical(doc) + "\n")


def read_ledger(path: str | Path) -> IdentityLedger:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ledger: {exc}") from exc
    if not isinstance(doc, dict) or "identities" not in doc:
        raise InputError(f"{path}: ledger needs an 'identities' map")
    entries = doc["identities"]
    try:
        by_id = {int(k): v for k, v in entries.items()}
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: non-integer vertex key: {exc}") from exc
    if by_id and (min(by_id) != 0 or max(by_id) != len(by_id) - 1):
        raise InputError(f"{path}: ledger ids must form a dense range [0, n)")
    records = []
    for v in range(len(by_id)):
        rec = by_id[v]
        if not isinstance(rec, dict) or "genuine" not in rec:
            raise InputError(f"{path}: identity {v} needs a 'genuine' flag")
        records.append(
            IdentityRecord(
                genuine=bool(rec["genuine"]),
                corrupt_at_heart=bool(rec.get("corrupt_at_heart", False)),
            )
        )
    return IdentityLedger(records)


# --- policies ---------------------------------------------------------------


def policy_to_dict(policy: GrowthPolicy) -> dict:
    doc: dict[str, Any] = {
        "mode": policy.mode,
        "beta": frac_str(policy.beta),
        "enumeration_limit": policy.enumeration_limit,
        "spectral": policy.spectral,
        "allow_heuristic": policy.allow_heuristic,
    }
    if policy.alpha is not None:
        doc["alpha"] = frac_str(policy.alpha)
    if policy.gamma_e is not None:
        doc["gamma_e"] = frac_str(policy.gamma_e)
    if policy.gamma_v is not None:
        doc["gamma_v"] = frac_str(policy.gamma_v)
    if policy.d is not None:
        doc["d"] = policy.d
    return doc


def write_policy(path: str | Path, policy: GrowthPolicy, manifest: dict | None = None) -> None:
    doc = policy_to_dict(policy)
    if manifest:
        doc["manifest"] = manifest
    Path(path).write_text(dumps_canonical(doc) + "\n")


def policy_from_dict(doc: dict) -> GrowthPolicy:
    if "mode" not in doc:
        raise InputError("policy needs a 'mode'")
    # delta is always derived from beta, never read from the file
    return GrowthPolicy(
        mode=doc["mode"],
        beta=parse_frac(doc.get("beta")),
        alpha=parse_frac(doc["alpha"]) if "alpha" in doc else None,
        gamma_e=parse_frac(doc["gamma_e"]) if "gamma_e" in doc else None,
        gamma_v=parse_frac(doc["gamma_v"]) if "gamma_v" in doc else None,
        d=int(doc["d"]) if "d" in doc else None,
        enumeration_limit=int(doc.get("enumeration_limit", 24)),
        spectral=bool(doc.get("spectral", True)),
        allow_heuristic=bool(doc.get("allow_heuristic", False)),
    )


def read_policy(path: str | Path) -> GrowthPolicy:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON policy: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: policy must be a JSON object")
    return policy_from_dict(doc)


# --- scenario configs --------------------------------------------------------


def scenario_config_from_dict(doc: dict) -> ScenarioConfig:
    required = ("seed", "initial_size", "d", "honest_growth_rate", "steps", "policy")
    for key in required:
        if key not in doc:
            raise InputError(f"scenario config needs {key!r}")
    adv = doc.get("adversary", {})
    return ScenarioConfig(
        seed=int(doc["seed"]),
        initial_size=int(doc["initial_size"]),
        d=int(doc["d"]),
        honest_growth_rate=float(doc["honest_growth_rate"]),
        adversary=AdversaryConfig(
            num_corrupt=int(adv.get("num_corrupt", 0)),
            attack_edge_budget=int(adv.get("attack_edge_budget", 0)),
            sybil_supply=int(adv.get("sybil_supply", 0)),
        ),
        steps=int(doc["steps"]),
        policy=policy_from_dict(doc["policy"]),
        enforce_gates=bool(doc.get("enforce_gates", True)),
    )


def scenario_config_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "seed": cfg.seed,
        "initial_size": cfg.initial_size,
        "d": cfg.d,
        "honest_growth_rate": cfg.honest_growth_rate,
        "adversary": {
            "num_corrupt": cfg.adversary.num_corrupt,
            "attack_edge_budget": cfg.adversary.attack_edge_budget,
            "sybil_supply": cfg.adversary.sybil_supply,
        },
        "steps": cfg.steps,
        "policy": policy_to_dict(cfg.policy),
        "enforce_gates": cfg.enforce_gates,
    }


def read_scenario_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON scenario config: {exc}") from exc
    return scenario_config_from_dict(doc)


# --- verdicts and traces -----------------------------------------------------


def condition_to_dict(cond: ConditionResult) -> dict:
    return {
        "condition": cond.condition,
        "status": cond.status,
        "measured": _jsonify(cond.measured),
        "bound": _jsonify(cond.bound),
        "note": cond.note,
    }


def verdict_to_dict(verdict: AdmissionVerdict) -> dict:
    phi = verdict.measured_phi
    return {
        "admitted": verdict.admitted,
        "conditions": [condition_to_dict(c) for c in verdict.conditions],
        "growth_used": _jsonify(verdict.growth_used),
        "flags": list(verdict.flags),
        "connectivity": None
        if phi is None
        else {
            "method": phi.method,
            "lambda2": phi.lambda2,
            "phi_e_exact": _jsonify(phi.phi_e_exact),
            "phi_e_lower": phi.phi_e_lower,
            "phi_e_upper": phi.phi_e_upper,
            "phi_v_exact": _jsonify(phi.phi_v_exact),
            "phi_v_lower": phi.phi_v_lower,
        },
    }


def write_trace(
    path: str | Path,
    records: Iterable[StepRecord],
    manifest: dict,
) -> None:
    """Append-only newline-delimited trace: one manifest line, then steps."""
    lines = [dumps_canonical({"type": "manifest", **manifest})]
    for rec in records:
        lines.append(
            dumps_canonical(
                {
                    "type": "step",
                    "index": rec.index,
                    "added_members": list(rec.added_members),
                    "added_edges": [list(e) for e in rec.added_edges],
                    "verdict": None if rec.verdict is None else verdict_to_dict(rec.verdict),
                }
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path: str | Path) -> tuple[dict, list[dict]]:
    path = Path(path)
    manifest = None
    steps = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: invalid trace line: {exc}") from exc
        if doc.get("type") == "manifest":
            manifest = doc
        elif doc.get("type") == "step":
            steps.append(doc)
        else:
            raise InputError(f"{path}:{lineno}: unknown record type {doc.get('type')!r}")
    if manifest is None:
        raise InputError(f"{path}: trace has no manifest line")
    if not steps:
        raise InputError(f"{path}: trace has no steps")
    return manifest, steps


def replay_history(manifest: dict, steps: list[dict]) -> CommunityHistory:
    """Rebuild the community history a trace describes.

    Edges accumulate across every record; a history step is created for the
    initial record and for each later record that actually admitted members.
    """
    n = manifest.get("config", {}).get("vertex_count")
    if n is None:
        raise InputError("trace manifest lacks config.vertex_count")
    n = int(n)
    edges: list[tuple[int, int]] = []
    members: set[int] = set()
    history_steps: list[HistoryStep] = []
    for i, step in enumerate(steps):
        edges.extend((int(u), int(v)) for u, v in step.get("added_edges", []))
        added = [int(v) for v in step.get("added_members", [])]
        if i == 0:
            if not added:
                raise InputError("first trace step must define the initial community")
            members.update(added)
            graph = TrustGraph(n, edges)
            history_steps.append(HistoryStep(VertexSet.from_iterable(n, members), graph))
        elif added:
            members.update(added)
            graph = TrustGraph(n, edges)
            history_steps.append(HistoryStep(VertexSet.from_iterable(n, members), graph))
    return CommunityHistory(history_steps)

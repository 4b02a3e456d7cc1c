"""Command line harness: ``setpoint run|scan|validate``.

A problem file is a JSON object with ``space``, ``map``, ``task``,
``params`` and an optional ``seed``.  Reports are canonical JSON (sorted
keys, no timestamps) so that equal inputs give byte-identical outputs.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

from .bead import (BeadSampler, asymptotic_center, bead_modulus, nonexpansive_solve,
                   regular_subsequence, regularity_check)
from .conditions import (CONDITION_IDS, ConditionParams, ConditionParamsError, ScanReport,
                         check_condition, implication_scan)
from .descent import (Potential, PreconditionError, ScaledMetric, caristi_descent,
                      co18_graph_metric, gap_descent, graph_descent_co16, pair_descent_co20)
from .generators import inward_instance, line3_instance, random_instance
from .inward import (compact_min_gap, generalized_inward_membership, inward_contraction_solve,
                     inward_membership_normed, lemma35_witness)
from .metric import MetricSpace, StructuralError, dyadic_space, line_space
from .multimap import MultiMap, halving_map, shrink_toward_map
from .solver import solve

SCHEMA_VERSION = "1.0.0"
TASKS = ("solve", "check", "scan", "bead", "center", "inward", "descent")
WORKERS_ENV = "SETPOINT_WORKERS"
GENERATORS = {"random": random_instance, "line3": line3_instance, "inward": inward_instance}


def report_schema_version() -> str:
    return SCHEMA_VERSION


class ProblemError(ValueError):
    """Invalid problem file; the message starts with the offending field path."""


@dataclass
class Problem:
    task: str
    params: dict
    seed: int
    raw: dict
    space: MetricSpace | None = None
    fmap: MultiMap | None = None
    digest: str = field(default="")


# -- loading -------------------------------------------------------------------

def _need(obj: dict, key: str, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ProblemError(f"{path}{key}: missing")
    return obj[key]


def _number(params: dict, key: str, default=None, path: str = "params.") -> float:
    value = params.get(key, default)
    if value is None:
        raise ProblemError(f"{path}{key}: missing")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemError(f"{path}{key}: must be a number")
    return float(value)


def _integer(params: dict, key: str, default=None, path: str = "params.") -> int:
    value = params.get(key, default)
    if value is None:
        raise ProblemError(f"{path}{key}: missing")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemError(f"{path}{key}: must be an integer")
    return value


def build_space(spec: dict) -> MetricSpace:
    if not isinstance(spec, dict):
        raise ProblemError("space: must be an object")
    kind = _need(spec, "kind", "space.")
    tol = _number(spec, "tolerance", 1e-9, "space.")
    try:
        if kind == "matrix":
            return MetricSpace.from_matrix(_need(spec, "d", "space."), tol)
        if kind == "embedded":
            return MetricSpace.from_points(_need(spec, "points", "space."), spec.get("norm", "l2"),
                                           spec.get("p", 2.0), tol)
        if kind == "line":
            return line_space(_need(spec, "values", "space."), tol)
        if kind == "dyadic":
            return dyadic_space(_integer(spec, "depth", 20, "space."), bool(spec.get("extend", False)), tol)
    except StructuralError as exc:
        raise ProblemError(f"space: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"space: {exc}") from None
    raise ProblemError(f"space.kind: unknown kind {kind!r}")


def build_map(spec: dict, space: MetricSpace) -> MultiMap:
    if not isinstance(spec, dict):
        raise ProblemError("map: must be an object")
    domain = spec.get("domain")
    try:
        if "rule" in spec:
            rule = spec["rule"]
            if rule == "halving":
                return halving_map(space, domain)
            if rule == "shrink_toward":
                return shrink_toward_map(space, _need(spec, "center", "map."),
                                         _number(spec, "step", path="map."), domain)
            raise ProblemError(f"map.rule: unknown rule {rule!r}")
        values = _need(spec, "values", "map.")
        if not isinstance(values, dict):
            raise ProblemError("map.values: must be an object")
        table = {}
        for key, val in values.items():
            if not isinstance(val, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
                raise ProblemError(f"values.{key}: must be a list of point indices")
            try:
                table[int(key)] = tuple(val)
            except ValueError:
                raise ProblemError(f"values.{key}: key must be an integer index") from None
        return MultiMap.from_table(space, table, domain)
    except StructuralError as exc:
        raise ProblemError(str(exc)) from None


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def parse_problem(raw) -> Problem:
    if not isinstance(raw, dict):
        raise ProblemError("file: must be a JSON object")
    task = _need(raw, "task", "")
    if task not in TASKS:
        raise ProblemError(f"task: unknown task {task!r}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ProblemError("params: must be an object")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ProblemError("seed: must be a nonnegative integer")
    version = raw.get("schema_version")
    if version is not None and version != SCHEMA_VERSION:
        warnings.warn(f"problem schema_version {version} differs from {SCHEMA_VERSION}")
    prob = Problem(task, params, seed, raw, digest=hashlib.sha256(canonical(raw).encode()).hexdigest())
    if task != "scan" or "space" in raw:
        prob.space = build_space(_need(raw, "space", ""))
    if "map" in raw:
        prob.fmap = build_map(raw["map"], prob.space)
    elif task in ("solve", "check", "descent"):
        raise ProblemError("map: missing")
    _validate_params(prob)
    return prob


def _condition_spec(item, path: str) -> tuple[int, ConditionParams]:
    if not isinstance(item, dict):
        raise ProblemError(f"{path}: must be an object")
    cid = item.get("id")
    if cid not in CONDITION_IDS:
        raise ProblemError(f"{path}.id: unknown condition {cid!r}")
    kw = {}
    for key in ("alpha", "epsilon", "epsilon1", "k", "beta"):
        if key in item:
            kw[key] = _number(item, key, path=f"{path}.")
    return cid, ConditionParams(**kw)


def _validate_params(prob: Problem) -> None:
    p, task = prob.params, prob.task
    if task in ("solve", "descent") and "x0" in p:
        x0 = _integer(p, "x0")
        if not prob.fmap.in_domain(x0):
            raise ProblemError(f"params.x0: {x0} is outside the domain")
    if task == "solve":
        method = p.get("method", "co3")
        if method not in ("co3", "nearest", "co7", "nonexpansive", "inward", "normed_inward", "min_gap"):
            raise ProblemError(f"params.method: unknown method {method!r}")
        if method != "min_gap":
            _integer(p, "x0")
        alpha, eps = _number(p, "alpha", 0.5), _number(p, "epsilon", 0.1)
        if not 0 <= alpha < 1:
            raise ProblemError(f"params.alpha: {alpha} is outside [0, 1)")
        if eps < 0 or (method == "co3" and alpha + eps >= 1):
            raise ProblemError("params.epsilon: need epsilon >= 0 and alpha + epsilon < 1")
    elif task == "check":
        conds = _need(p, "conditions", "params.")
        if not isinstance(conds, list) or not conds:
            raise ProblemError("params.conditions: must be a nonempty list")
        for n, item in enumerate(conds):
            _condition_spec(item, f"params.conditions.{n}")
    elif task == "scan":
        if _integer(p, "trials") < 1:
            raise ProblemError("params.trials: must be positive")
        if p.get("generator", "random") not in GENERATORS:
            raise ProblemError(f"params.generator: unknown generator {p.get('generator')!r}")
        pairs = _need(p, "pairs", "params.")
        if not isinstance(pairs, list) or not pairs:
            raise ProblemError("params.pairs: must be a nonempty list")
        for n, pair in enumerate(pairs):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ProblemError(f"params.pairs.{n}: must be [hypothesis, conclusion]")
            _condition_spec(pair[0], f"params.pairs.{n}.0")
            _condition_spec(pair[1], f"params.pairs.{n}.1")
    elif task == "bead":
        if _number(p, "r") <= 0 or _number(p, "beta") <= 0:
            raise ProblemError("params.r: r and beta must be positive")
    elif task == "center":
        seq = _need(p, "sequence", "params.")
        if not isinstance(seq, list) or not seq:
            raise ProblemError("params.sequence: must be a nonempty list")
        for n, s in enumerate(seq):
            if not isinstance(s, int) or not 0 <= s < prob.space.size:
                raise ProblemError(f"params.sequence.{n}: invalid point index")
    elif task == "inward":
        if prob.fmap is None:
            X = p.get("X")
            if not isinstance(X, list) or not X:
                raise ProblemError("params.X: missing")
        if "x0" not in p:
            _integer(p, "x")
            _integer(p, "t")
    elif task == "descent":
        kind = p.get("kind", "gap")
        if kind not in ("caristi", "gap", "co16", "co20"):
            raise ProblemError(f"params.kind: unknown descent {kind!r}")
        if kind in ("co16", "co20"):
            start = _need(p, "start", "params.")
            if not isinstance(start, list) or len(start) != 2:
                raise ProblemError("params.start: must be a graph pair [x, t]")
        else:
            _integer(p, "x0")
        if kind == "caristi":
            phi = _need(p, "phi", "params.")
            if not isinstance(phi, dict):
                raise ProblemError("params.phi: must be an object")


def load_problem(path) -> Problem:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ProblemError(f"file: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ProblemError(f"file: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_problem(raw)


def load_report(path) -> dict:
    report = json.loads(Path(path).read_text())
    if report.get("schema_version") != SCHEMA_VERSION:
        warnings.warn(f"report schema_version {report.get('schema_version')} differs from {SCHEMA_VERSION}")
    return report


# -- tasks ---------------------------------------------------------------------

def _task_solve(prob: Problem):
    p, fmap = prob.params, prob.fmap
    method = p.get("method", "co3")
    alpha = float(p.get("alpha", 0.5))
    eps = float(p.get("epsilon", 0.1))
    max_iter = p.get("max_iter")
    if method in ("co3", "nearest", "co7"):
        trace, verdict, hyps = solve(fmap, p["x0"], method, alpha, eps, max_iter)
        result = verdict.to_dict()
        result["status"] = trace.status
        result["failed_at"] = trace.failed_at
        return result, [h.to_dict() for h in hyps], trace.to_jsonl()
    if method == "nonexpansive":
        v = nonexpansive_solve(fmap, p["x0"], alpha, max_iter)
        return v.to_dict(), [r.to_dict() for r in v.reports.values()], v.trace.to_jsonl()
    if method in ("inward", "normed_inward"):
        mode = "generalized" if method == "inward" else "normed_inward"
        v = inward_contraction_solve(fmap, p["x0"], alpha, eps, mode, p.get("schedule"), max_iter)
        return v.to_dict(), [r.to_dict() for r in v.reports.values()], _moves_jsonl(v)
    v = compact_min_gap(fmap)
    return v.to_dict(), [v.co21.to_dict()], None


def _moves_jsonl(verdict) -> str:
    return "".join(canonical(m) + "\n" for m in verdict.to_dict()["moves"])


def _task_check(prob: Problem):
    reports = []
    for n, item in enumerate(prob.params["conditions"]):
        cid, cp = _condition_spec(item, f"params.conditions.{n}")
        reports.append(check_condition(prob.fmap, cid, cp).to_dict())
    return {"all_hold": all(r["holds"] for r in reports)}, reports, None


def _scan_chunk(gen_name, n_max, trials, pairs, seed, offset):
    gen = GENERATORS[gen_name]
    if gen_name == "random":
        gen = partial(gen, n_max=n_max)
    return implication_scan(gen, trials, pairs, seed, offset)


def run_scan(params: dict, seed: int, workers: int = 1) -> dict[str, ScanReport]:
    """Implication scan, split across worker processes with an in-order merge."""
    trials = params["trials"]
    gen_name = params.get("generator", "random")
    n_max = int(params.get("n_max", 30))
    pairs = [(_condition_spec(h, f"params.pairs.{n}.0"), _condition_spec(c, f"params.pairs.{n}.1"))
             for n, (h, c) in enumerate(params["pairs"])]
    workers = max(1, min(workers, trials))
    if workers == 1:
        return _scan_chunk(gen_name, n_max, trials, pairs, seed, 0)
    size = -(-trials // workers)
    chunks = [(o, min(size, trials - o)) for o in range(0, trials, size)]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(_scan_chunk, *zip(*[(gen_name, n_max, n, pairs, seed, o)
                                                  for o, n in chunks])))
    merged = {k: ScanReport(trials=trials) for k in parts[0]}
    for part in parts:
        for k, rep in part.items():
            merged[k].checked += rep.checked
            merged[k].violations.extend(rep.violations)
    return merged


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _task_scan(prob: Problem):
    reports = run_scan(prob.params, prob.seed, _workers())
    result = {k: {"checked": r.checked, "trials": r.trials, "violations": len(r.violations)}
              for k, r in reports.items()}
    details = [{"pair": k, **r.to_dict()} for k, r in reports.items()]
    return {"pairs": result, "violations": sum(len(r.violations) for r in reports.values())}, details, None


def _task_bead(prob: Problem):
    p = prob.params
    sampler = BeadSampler(points_per_pair=int(p.get("points_per_pair", 10_000)),
                          bisect_steps=int(p.get("bisect_steps", 40)), seed=prob.seed)
    cert = bead_modulus(prob.space, float(p["r"]), float(p["beta"]), sampler)
    out = cert.to_dict()
    return out, [], None


def _task_center(prob: Problem):
    p = prob.params
    seq = p["sequence"]
    pool = p.get("pool")
    res = asymptotic_center(prob.space, seq, pool).to_dict()
    if len(seq) >= 2:
        res["regularity"] = regularity_check(prob.space, seq, int(p.get("budget", 4096)), pool,
                                             prob.seed).to_dict()
    res["regular_subsequence"] = regular_subsequence(prob.space, seq, pool)
    return res, [], None


def _task_inward(prob: Problem):
    p = prob.params
    if "x0" in p:
        if prob.fmap is None:
            raise ProblemError("map: missing")
        mode = p.get("mode", "generalized")
        v = inward_contraction_solve(prob.fmap, p["x0"], float(p.get("alpha", 0.5)),
                                     float(p.get("epsilon", 0.1)), mode, p.get("schedule"))
        return v.to_dict(), [r.to_dict() for r in v.reports.values()], _moves_jsonl(v)
    X = prob.fmap.domain if prob.fmap is not None else p["X"]
    x, t = p["x"], p["t"]
    cert = generalized_inward_membership(prob.space, X, x, t, p.get("schedule"))
    out = {"generalized": cert.to_dict()}
    if prob.space.kind == "embedded":
        nw = inward_membership_normed(prob.space, X, x, t)
        out["normed"] = {"member": nw.member, "lambda": nw.lam, "z": nw.z}
    if cert.is_member and "epsilon" in p:
        out["lemma_witness"] = lemma35_witness(prob.space, X, x, t, float(p["epsilon"]), cert,
                                               p.get("C")).to_dict()
    return out, [], None


def _task_descent(prob: Problem):
    p, fmap = prob.params, prob.fmap
    kind = p.get("kind", "gap")
    scale = float(p.get("delta_scale", 1.0))
    delta = ScaledMetric(fmap.space, scale)
    if kind == "caristi":
        phi = Potential({int(k): float(v) for k, v in p["phi"].items()},
                        float(p.get("lower_bound", 0.0)))
        v = caristi_descent(fmap, phi, delta, p["x0"], p.get("max_iter"))
    elif kind == "gap":
        v = gap_descent(fmap, delta, p["x0"], p.get("max_iter"))
    elif kind == "co16":
        v = graph_descent_co16(fmap, delta, float(p.get("k", 1.0)), tuple(p["start"]), p.get("max_iter"))
    else:
        gm = co18_graph_metric(fmap, float(p.get("alpha", 0.5)), float(p.get("epsilon", 0.25)))
        v = pair_descent_co20(fmap, gm, tuple(p["start"]), p.get("max_iter"))
    return v.to_dict(), [], _moves_jsonl(v)


_TASKS = {"solve": _task_solve, "check": _task_check, "scan": _task_scan, "bead": _task_bead,
          "center": _task_center, "inward": _task_inward, "descent": _task_descent}


def execute(prob: Problem) -> tuple[dict, str | None]:
    """Run a validated problem; returns the report and an optional JSONL trace."""
    try:
        result, reports, trace = _TASKS[prob.task](prob)
    except (StructuralError, ConditionParamsError, PreconditionError) as exc:
        raise ProblemError(f"params: {exc}") from None
    report = {"schema_version": SCHEMA_VERSION, "task": prob.task, "seed": prob.seed,
              "input_digest": prob.digest, "result": result, "condition_reports": reports}
    return report, trace


def write_outputs(report: dict, trace: str | None, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n")
    if trace is not None:
        (out / "trace.jsonl").write_text(trace)


def _cmd_run(args, require_scan: bool = False) -> int:
    prob = load_problem(args.file)
    if require_scan and prob.task != "scan":
        raise ProblemError(f"task: expected 'scan', got {prob.task!r}")
    report, trace = execute(prob)
    write_outputs(report, trace, args.output)
    print(json.dumps({"task": prob.task, "output": str(args.output)}, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    prob = load_problem(args.file)
    print(f"ok: task {prob.task}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="setpoint", description="Fixed-point experiments on finite set-valued maps.")
    parser.add_argument("--version", action="version", version=f"report schema {SCHEMA_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run the task of a problem file"),
                           ("scan", "run an implication scan problem file")):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("file")
        cmd.add_argument("-o", "--output", required=True, help="output directory")
    val = sub.add_parser("validate", help="check a problem file without running it")
    val.add_argument("file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_run(args, require_scan=args.command == "scan")
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

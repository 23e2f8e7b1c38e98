"""Command-line front end.

    ensemblage quantumness --ensemble b92 --measure both --output json
    ensemblage coherence --ensemble states.json --basis haar:7
    ensemblage verify --suite measures --trials 50 --seed 1

Exit codes: 0 success, 1 a property suite found a violation, 2 bad input,
3 the optimizer did not converge (the report is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import catalog
from .coherence import coherence
from .ensemble import Ensemble, ensemble_coherence
from .errors import EnsemblageError, InvalidState, NoConvergence
from .measures import MeasureKind
from .quantumness import OptimizerConfig, QuantumnessResult, grid_oracle_qubit, quantumness
from .states import DensityMatrix, PureState, Unitary, density_from_pure, haar_unitary
from .verify import SUITES

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NOCONV = 0, 1, 2, 3
PROB_SUM_TOL = 1e-6
NORM_TOL = 1e-6
SIG_DIGITS = 12


class InputError(Exception):
    """Malformed flags or input files; reported as a one-line diagnostic."""


# ---- ensemble files -------------------------------------------------------

def _complex(pair, where: str) -> complex:
    if (not isinstance(pair, (list, tuple)) or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
        raise InputError(f"{where}: expected a [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def _complex_vector(items, n: int, where: str) -> np.ndarray:
    if not isinstance(items, list) or len(items) != n:
        raise InputError(f"{where}: expected {n} [re, im] pairs")
    return np.array([_complex(x, f"{where}[{i}]") for i, x in enumerate(items)])


def _complex_matrix(rows, n: int, where: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n:
        raise InputError(f"{where}: expected {n} rows")
    return np.array([_complex_vector(r, n, f"{where}[{i}]") for i, r in enumerate(rows)])


def ensemble_from_json(data) -> Ensemble:
    """Build an Ensemble from the file layout {dim, members: [{probability, pure | matrix}]}."""
    if not isinstance(data, dict):
        raise InputError("ensemble file must hold a JSON object")
    dim = data.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InputError(f"'dim' must be a positive integer, got {dim!r}")
    members = data.get("members")
    if not isinstance(members, list) or not members:
        raise InputError("'members' must be a non-empty list")
    probs, states = [], []
    for i, m in enumerate(members):
        where = f"members[{i}]"
        if not isinstance(m, dict):
            raise InputError(f"{where}: expected an object")
        p = m.get("probability")
        if not isinstance(p, (int, float)) or isinstance(p, bool) or not math.isfinite(p) or p < 0:
            raise InputError(f"{where}: probability must be a non-negative number")
        if ("pure" in m) == ("matrix" in m):
            raise InputError(f"{where}: give exactly one of 'pure' and 'matrix'")
        try:
            if "pure" in m:
                amps = _complex_vector(m["pure"], dim, f"{where}.pure")
                norm = np.linalg.norm(amps)
                if abs(norm - 1.0) > NORM_TOL:
                    raise InputError(f"{where}.pure: norm {norm:.9g} is not 1")
                states.append(density_from_pure(PureState(amps / norm)))
            else:
                states.append(DensityMatrix(_complex_matrix(m["matrix"], dim, f"{where}.matrix")))
        except EnsemblageError as exc:
            raise InputError(f"{where}: {exc}") from None
        probs.append(float(p))
    total = sum(probs)
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise InputError(f"probabilities sum to {total:.9g}, not 1")
    return Ensemble(tuple(p / total for p in probs), tuple(states))


def ensemble_to_json(e: Ensemble) -> dict:
    return {
        "dim": e.dim,
        "members": [{"probability": p, "matrix": _pairs(rho.matrix)} for p, rho in e],
    }


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


@dataclass(frozen=True)
class Loaded:
    name: str
    ensemble: Ensemble
    paper_values: tuple | None


def load_ensembles(spec: str) -> list[Loaded]:
    """Resolve --ensemble: a catalog name, 'catalog' for all four, or a JSON file path."""
    if spec == "catalog":
        names = list(catalog.CATALOG)
    elif spec in catalog.CATALOG:
        names = [spec]
    else:
        path = Path(spec)
        if not path.exists():
            raise InputError(f"{spec!r} is neither a catalog name {sorted(catalog.CATALOG)} nor a file")
        return [Loaded(path.stem, ensemble_from_json(_read_json(spec)), None)]
    out = []
    for n in names:
        ne = catalog.get(n)
        out.append(Loaded(n, ne.ensemble, tuple(ne.paper_values)))
    return out


def parse_basis(spec: str, dim: int) -> Unitary:
    """computational | haar:<seed> | file:<path> (a dim x dim grid of [re, im], kets as columns)."""
    if spec == "computational":
        return Unitary.identity(dim)
    kind, _, rest = spec.partition(":")
    if kind == "haar":
        try:
            seed = int(rest)
        except ValueError:
            raise InputError(f"haar basis needs an integer seed, got {rest!r}") from None
        return haar_unitary(dim, seed)
    if kind == "file":
        data = _read_json(rest)
        if isinstance(data, dict):
            data = data.get("matrix")
        try:
            return Unitary(_complex_matrix(data, dim, "basis"))
        except InvalidState as exc:
            raise InputError(f"basis: {exc}") from None
    raise InputError(f"unknown basis {spec!r}; use computational, haar:<seed> or file:<path>")


def parse_measures(spec: str) -> list[MeasureKind]:
    if spec == "both":
        return [MeasureKind.AFFINITY, MeasureKind.FIDELITY]
    return [MeasureKind.parse(spec)]


def parse_dims(spec: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in spec.split(",") if x.strip())
    except ValueError:
        raise InputError(f"--dims must be a comma-separated list of integers, got {spec!r}") from None
    if not dims or any(d < 2 for d in dims):
        raise InputError(f"--dims needs dimensions >= 2, got {spec!r}")
    return dims


# ---- report serialization -------------------------------------------------

def _pairs(m: np.ndarray) -> list:
    """Row-major [re, im] pairs (nested like the matrix)."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _round(x: float):
    if not math.isfinite(x):
        return None
    return float(f"{x:.{SIG_DIGITS}g}") + 0.0  # + 0.0 folds -0.0 into 0.0


def canonical(obj):
    """Plain JSON types with every float rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, complex):
        return [_round(obj.real), _round(obj.imag)]
    return obj


def dumps_json(report: dict) -> str:
    return json.dumps(canonical(report), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.{SIG_DIGITS}g}" if isinstance(x, float) else str(x)


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps_json(report)
    if fmt == "csv":
        return _render_csv(report)
    return _render_text(report)


def _cell(x) -> str:
    return "" if x is None else _fmt(x)


def _render_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rep = canonical(report)
    if rep["command"] == "verify":
        w.writerow(["property", "trials", "max_violation", "tolerance", "report_only", "pass"])
        for r in rep["properties"]:
            w.writerow([r["property"], r["trials"], _cell(r["max_violation"]), _cell(r["tolerance"]),
                        r["report_only"], r["pass"]])
        return buf.getvalue()
    inputs = rep["inputs"]
    if rep["command"] == "quantumness":
        w.writerow(["name", "measure", "q_value", "oracle_value", "paper_q", "restarts", "seed"])
        for ens in rep["ensembles"]:
            for kind, r in sorted(ens["results"].items()):
                w.writerow([ens["name"], kind, _cell(r["value"]), _cell(r["oracle_value"]),
                            _cell(r["paper_value"]), inputs["restarts"], inputs["seed"]])
    else:
        w.writerow(["name", "measure", "value", "basis"])
        for ens in rep["ensembles"]:
            for kind, r in sorted(ens["results"].items()):
                w.writerow([ens["name"], kind, _cell(r["value"]), inputs["basis"]])
    return buf.getvalue()


def _render_text(report: dict) -> str:
    rep = canonical(report)
    lines = []
    if rep["command"] == "verify":
        for r in rep["properties"]:
            status = "PASS" if r["pass"] else "FAIL"
            tag = " (report only)" if r["report_only"] else ""
            lines.append(f"{status} {r['property']}: max violation {_fmt(r['max_violation'])} "
                         f"<= {_fmt(r['tolerance'])} over {r['trials']} trials{tag}")
            if not r["pass"]:
                lines.append(f"     replay: {json.dumps(r['worst'], sort_keys=True)}")
        lines.append(f"{rep['passed']}/{rep['total']} properties passed")
        return "\n".join(lines) + "\n"
    for ens in rep["ensembles"]:
        lines.append(f"{ens['name']} (dim {ens['dim']}, {ens['members']} members)")
        for kind, r in sorted(ens["results"].items()):
            parts = [f"  {kind:9s} {'Q' if rep['command'] == 'quantumness' else 'C'} = {_fmt(r['value'])}"]
            if r.get("oracle_value") is not None:
                parts.append(f"oracle {_fmt(r['oracle_value'])}")
            if r.get("paper_value") is not None:
                parts.append(f"reference {_fmt(r['paper_value'])}")
            if rep["command"] == "quantumness" and not r["optimizer"]["converged"]:
                parts.append("NOT CONVERGED")
            lines.append(", ".join(parts))
    return "\n".join(lines) + "\n"


def write_output(text: str, out: str | None) -> None:
    """Write to stdout, or atomically to ``out`` via a sibling temp file and rename."""
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent or Path("."))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---- commands -------------------------------------------------------------

def _optimizer_summary(res: QuantumnessResult) -> dict:
    vals = [v for _, v, _ in res.trace]
    best = min(res.trace, key=lambda t: t[1])
    return {
        "starts": len(res.trace),
        "converged_starts": sum(1 for *_, ok in res.trace if ok),
        "converged": res.converged,
        "best_start": best[0],
        "worst_start_value": max(vals),
        "starts_within_1e-6": sum(1 for v in vals if v <= res.value + 1e-6),
    }


def cmd_quantumness(args) -> tuple[int, dict]:
    kinds = parse_measures(args.measure)
    loaded = load_ensembles(args.ensemble)
    if args.restarts < 0 or args.steps < 0:
        raise InputError("--restarts and --steps must be non-negative")
    if 0 < args.steps < 2:
        raise InputError("--steps must be 0 (disabled) or at least 2")
    cfg = OptimizerConfig(restarts=args.restarts, seed=args.seed)
    code = EXIT_OK
    out = []
    for item in loaded:
        results = {}
        for kind in kinds:
            try:
                res = quantumness(kind, item.ensemble, cfg)
            except NoConvergence as exc:
                if exc.best is None:
                    raise
                res, code = exc.best, EXIT_NOCONV
            oracle = None
            if item.ensemble.dim == 2 and args.steps:
                oracle = grid_oracle_qubit(kind, item.ensemble, args.steps)
            paper = None
            if item.paper_values is not None:
                paper = item.paper_values[0 if kind is MeasureKind.AFFINITY else 1]
            results[kind.value] = {
                "value": res.value,
                "basis": _pairs(res.basis.matrix),
                "optimizer": _optimizer_summary(res),
                "oracle_value": oracle,
                "paper_value": paper,
            }
        out.append({"name": item.name, "dim": item.ensemble.dim, "members": len(item.ensemble),
                    "results": results})
    report = {
        "command": "quantumness",
        "inputs": {"ensemble": args.ensemble, "measure": args.measure, "restarts": args.restarts,
                   "seed": args.seed, "steps": args.steps},
        "ensembles": out,
    }
    return code, report


def cmd_coherence(args) -> tuple[int, dict]:
    kinds = parse_measures(args.measure)
    loaded = load_ensembles(args.ensemble)
    out = []
    for item in loaded:
        basis = parse_basis(args.basis, item.ensemble.dim)
        results = {}
        for kind in kinds:
            members = [coherence(kind, rho, basis).value for _, rho in item.ensemble]
            results[kind.value] = {
                "value": ensemble_coherence(kind, item.ensemble, basis),
                "member_values": members,
            }
        out.append({"name": item.name, "dim": item.ensemble.dim, "members": len(item.ensemble),
                    "basis": _pairs(basis.matrix), "results": results})
    report = {
        "command": "coherence",
        "inputs": {"ensemble": args.ensemble, "measure": args.measure, "basis": args.basis},
        "ensembles": out,
    }
    return EXIT_OK, report


def cmd_verify(args) -> tuple[int, dict]:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    dims = parse_dims(args.dims)
    if args.trials < 1:
        raise InputError("--trials must be positive")
    props = []
    for name in names:
        for r in SUITES[name](trials=args.trials, seed=args.seed, dims=dims):
            props.append({"suite": name, **r.as_dict()})
    passed = sum(1 for r in props if r["pass"])
    report = {
        "command": "verify",
        "inputs": {"suite": args.suite, "trials": args.trials, "seed": args.seed, "dims": list(dims)},
        "properties": props,
        "passed": passed,
        "total": len(props),
    }
    return (EXIT_OK if passed == len(props) else EXIT_VIOLATION), report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ensemblage", description="Coherence and quantumness of quantum ensembles.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--ensemble", required=True,
                       help="catalog name (b92, bb84, trine, six_state), 'catalog' for all, or a JSON file")
        p.add_argument("--measure", choices=["fidelity", "affinity", "both"], default="both")
        p.add_argument("--output", choices=["text", "json", "csv"], default="text")
        p.add_argument("--out", default=None, help="output file (default stdout)")

    q = sub.add_parser("quantumness", help="minimum average coherence over all bases")
    common(q)
    q.add_argument("--restarts", type=int, default=24)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--steps", type=int, default=400, help="qubit grid oracle resolution, 0 disables")
    q.set_defaults(func=cmd_quantumness)

    c = sub.add_parser("coherence", help="ensemble coherence in a fixed basis")
    common(c)
    c.add_argument("--basis", default="computational", help="computational, haar:<seed> or file:<path>")
    c.set_defaults(func=cmd_coherence)

    v = sub.add_parser("verify", help="run randomized property suites")
    v.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    v.add_argument("--trials", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--dims", default="2,3")
    v.add_argument("--output", choices=["text", "json", "csv"], default="text")
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        code, report = args.func(args)
    except NoConvergence as exc:
        print(f"ensemblage: no convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (InputError, EnsemblageError) as exc:
        print(f"ensemblage: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    write_output(render(report, args.output), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())

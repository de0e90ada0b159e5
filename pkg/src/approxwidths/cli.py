"""Command-line entry point: JSON configs in, deterministic reports out.

Every report embeds the effective config hash, the library version, the
horizons and tolerances used, and (where searches run) the seed, so identical
config plus seed reproduces byte-identical output.  Numbers are serialized in
decimal with 17 significant digits.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .compactness import (
    compactness_test,
    epsilon_net,
    equicontinuity_report,
    error_profile,
    jackson_ratio,
    lethargy_witness,
    projection_defect,
    witness_weights,
)
from .errors import (
    KindMismatchError,
    ProfileNotDecayingError,
    RankDeficientBasisError,
    ThresholdNotReachedError,
    UnsupportedSchemeError,
)
from .expr import EvalDomainError, ParseError, materialize_family, parse
from .q_compactness import (
    GeneralizedScheme,
    gen_kolmogorov_number,
    hull_invariance_check,
    operator_delta,
    order_c0_decompose,
    q_profile,
)
from .schemes import SchemeDescriptor, best_error, verify_axioms
from .sequences import WeightSequence, weighted_lq_norm
from .spaces import Element, Grid

COMMANDS = (
    "profile", "net", "witness-weights", "lethargy", "axioms",
    "widths", "decompose", "hull-check", "jackson", "projection-defect",
)

_PRECONDITION_ERRORS = (
    KindMismatchError, UnsupportedSchemeError, RankDeficientBasisError,
    ThresholdNotReachedError, ProfileNotDecayingError, ParseError,
    EvalDomainError, ValueError,
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


# -- config access ---------------------------------------------------------------


def _get(cfg: dict, path: str, kind, required: bool = True, default=None):
    node = cfg
    walked = []
    for part in path.split("."):
        walked.append(part)
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(".".join(walked), "missing required field")
            return default
        node = node[part]
    if kind is float and isinstance(node, (int, float)) and not isinstance(node, bool):
        return float(node)
    if kind is int and isinstance(node, int) and not isinstance(node, bool):
        return node
    if kind is not None and not isinstance(node, kind):
        raise ConfigError(path, f"expected {getattr(kind, '__name__', kind)}, "
                                f"got {type(node).__name__}")
    return node


def _build_grid(cfg: dict) -> Grid:
    interval = _get(cfg, "space.interval", list)
    if len(interval) != 2 or not all(isinstance(v, (int, float)) for v in interval):
        raise ConfigError("space.interval", "expected [a, b]")
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ConfigError("space.interval", "need a < b")
    m = _get(cfg, "space.nodes", int)
    layout = _get(cfg, "space.layout", str, required=False, default="uniform")
    if layout == "uniform":
        return Grid.uniform(a, b, m)
    if layout == "chebyshev":
        return Grid.chebyshev(a, b, m)
    raise ConfigError("space.layout", f"unknown layout {layout!r}")


def _build_family(cfg: dict) -> tuple[list[Element], dict]:
    kind = _get(cfg, "space.kind", str)
    if kind not in ("grid_sup", "grid_lp", "seq_lp"):
        raise ConfigError("space.kind", f"unknown space kind {kind!r}")
    fam = _get(cfg, "family", dict)
    if kind == "seq_lp":
        vectors = _get(cfg, "family.vectors", list)
        if not vectors:
            raise ConfigError("family.vectors", "need at least one vector")
        p = _get(cfg, "space.p", float, required=False, default=2.0)
        try:
            elements = [Element.seq(v, p) for v in vectors]
        except ValueError as err:
            raise ConfigError("family.vectors", str(err)) from None
        if len({e.dim for e in elements}) != 1:
            raise ConfigError("family.vectors", "vectors must share one length")
        return elements, {"kind": kind, "p": p, "dim": elements[0].dim}
    grid = _build_grid(cfg)
    p = _get(cfg, "space.p", float, required=False, default=2.0)
    if "expression" in fam:
        text = _get(cfg, "family.expression", str)
        k_values = _get(cfg, "family.k_values", list, required=False, default=[1])
        if not k_values:
            raise ConfigError("family.k_values", "need at least one k value")
        try:
            tree = parse(text)
            elements = materialize_family(tree, k_values, grid, kind, p)
        except (ParseError, EvalDomainError) as err:
            raise ConfigError("family.expression", str(err)) from None
    elif "vectors" in fam:
        vectors = _get(cfg, "family.vectors", list)
        try:
            if kind == "grid_sup":
                elements = [Element.grid_sup(grid, v) for v in vectors]
            else:
                elements = [Element.grid_lp(grid, v, p) for v in vectors]
        except ValueError as err:
            raise ConfigError("family.vectors", str(err)) from None
    else:
        raise ConfigError("family", "need either an expression or vectors")
    return elements, {"kind": kind, "p": p, "grid": grid}


def _build_scheme(cfg: dict, space: dict) -> SchemeDescriptor:
    kind = _get(cfg, "scheme.kind", str)
    if kind == "poly_sup":
        if space["kind"] != "grid_sup":
            raise ConfigError("scheme.kind", "poly_sup needs space.kind grid_sup")
        return SchemeDescriptor.poly_sup(space["grid"])
    if kind == "trig_l2":
        if space["kind"] != "grid_lp" or space["p"] != 2.0:
            raise ConfigError("scheme.kind", "trig_l2 needs space.kind grid_lp with p = 2")
        return SchemeDescriptor.trig_l2(space["grid"])
    if kind == "nterm_lp":
        if space["kind"] != "seq_lp":
            raise ConfigError("scheme.kind", "nterm_lp needs space.kind seq_lp")
        return SchemeDescriptor.nterm_lp(_get(cfg, "scheme.p", float,
                                              required=False, default=space["p"]))
    if kind == "subspace_chain":
        if space["kind"] != "seq_lp" or space["p"] != 2.0:
            raise ConfigError("scheme.kind", "subspace_chain needs seq_lp space with p = 2")
        basis = _get(cfg, "scheme.basis", None, required=False, default="identity")
        if basis == "identity":
            dim = _get(cfg, "scheme.dimension", int, required=False,
                       default=space.get("dim"))
            if dim is None:
                raise ConfigError("scheme.dimension", "missing required field")
            return SchemeDescriptor.subspace_chain(np.eye(int(dim)))
        if not isinstance(basis, list):
            raise ConfigError("scheme.basis", "expected a matrix or 'identity'")
        try:
            return SchemeDescriptor.subspace_chain(np.asarray(basis, dtype=float))
        except ValueError as err:
            raise ConfigError("scheme.basis", str(err)) from None
    raise ConfigError("scheme.kind", f"unknown scheme kind {kind!r}")


def _build_generalized(cfg: dict, dim: int | None,
                       scheme: SchemeDescriptor | None) -> GeneralizedScheme:
    kind = _get(cfg, "generalized.kind", str)
    if kind == "classical":
        if scheme is None:
            raise ConfigError("scheme", "classical generalized scheme needs a scheme section")
        return GeneralizedScheme.classical(scheme)
    if kind == "all_subspaces":
        d = _get(cfg, "generalized.dimension", int, required=False, default=dim)
        if d is None:
            raise ConfigError("generalized.dimension", "missing required field")
        return GeneralizedScheme.all_subspaces(d)
    raise ConfigError("generalized.kind", f"unknown generalized kind {kind!r}")


def _require_seed(cfg: dict) -> int:
    seed = _get(cfg, "seed", int, required=False)
    if seed is None:
        raise ConfigError("seed", "randomized searches need an explicit seed")
    return seed


# -- serialization ----------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, float):
        return "inf" if math.isinf(obj) else obj
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Element):
        return {"kind": obj.kind, "p": _jsonable(obj.p), "payload": obj.payload.tolist()}
    if isinstance(obj, Grid):
        return {"a": obj.a, "b": obj.b, "nodes": obj.size}
    if isinstance(obj, SchemeDescriptor):
        return {"kind": obj.kind}
    if isinstance(obj, WeightSequence):
        return {"values": obj.values.tolist(), "q": _jsonable(obj.q)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump_json(obj, out: io.StringIO, indent: int = 0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.write(f'{pad}  {json.dumps(str(k))}: ')
            _dump_json(v, out, indent + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.write("[]")
            return
        simple = all(not isinstance(v, (dict, list)) for v in obj)
        if simple:
            out.write("[" + ", ".join(_scalar(v) for v in obj) + "]")
        else:
            out.write("[\n")
            for i, v in enumerate(obj):
                out.write(pad + "  ")
                _dump_json(v, out, indent + 1)
                out.write(",\n" if i < len(obj) - 1 else "\n")
            out.write(pad + "]")
    else:
        out.write(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, int):
        return str(v)
    if v is None:
        return "null"
    return json.dumps(v)


def dumps_report(report: dict) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    out = io.StringIO()
    _dump_json(_jsonable(report), out)
    out.write("\n")
    return out.getvalue()


def _csv_cell(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _csv_rows(command: str, result: dict) -> list[list]:
    if command == "profile":
        return [[n, v, v, v, result["scheme_kind"]]
                for n, v in enumerate(result["profile"]["values"])]
    if command == "witness-weights":
        return [[n, b, "", "", "witness"] for n, b in enumerate(result["weights"]["values"])]
    if command == "widths":
        rows = []
        for r in result["results"]:
            rows.append([r["n"], "" if r["value"] is None else r["value"],
                         r["lower"], r["upper"], r["method"]])
        return rows
    if command == "jackson":
        return [[n, rat, "", "", "jackson"]
                for n, rat in zip(result["indices"], result["ratios"])]
    if command == "lethargy":
        return [[k, a, t, t, "lethargy"]
                for k, (a, t) in enumerate(zip(result["achieved"], result["prescribed"]))]
    if command == "decompose":
        rows = []
        for k in range(result["depth"]):
            worst = max(point[k] for point in result["residual_norms"])
            rows.append([k + 1, worst, "", result["residual_bounds"][k], "order-c0"])
        return rows
    raise ConfigError("output", f"csv export is not defined for the {command} command")


def dumps_csv(command: str, result: dict) -> str:
    lines = ["n,value,lower,upper,method"]
    for row in _csv_rows(command, result):
        lines.append(",".join(_csv_cell(c) for c in row))
    return "\n".join(lines) + "\n"


# -- command handlers ---------------------------------------------------------------


def _horizon(cfg, default=40):
    return _get(cfg, "horizon", int, required=False, default=default)


def _cmd_profile(cfg: dict) -> dict:
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space)
    horizon = _horizon(cfg)
    tol = _get(cfg, "tol", float, required=False, default=1e-3)
    report = compactness_test(family, scheme, horizon, tol)
    return {
        "scheme_kind": scheme.kind,
        "profile": report.profile,
        "verdict": report.verdict,
        "bounded": report.bounded,
        "bound": report.bound,
        "tail": report.tail,
        "stall_gap": report.stall_gap,
    }


def _cmd_net(cfg: dict) -> dict:
    family, _ = _build_family(cfg)
    eps = _get(cfg, "epsilon", float)
    net = epsilon_net(family, eps)
    return {
        "epsilon": eps,
        "center_indices": net.center_indices,
        "centers": net.centers,
        "covered": net.covered,
        "iterations": net.iterations,
    }


def _cmd_witness_weights(cfg: dict) -> dict:
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space)
    horizon = _horizon(cfg)
    q = _get(cfg, "q", float, required=False, default=1.0)
    profile = error_profile(family, scheme, horizon)
    weights = witness_weights(profile, q)
    bound = weighted_lq_norm(profile.values, weights) ** q
    return {
        "profile": profile,
        "weights": weights,
        "q": q,
        "family_bound_power": bound,
        "guarantee": 3.0,
        "unit_indices": [int(i) for i in np.flatnonzero(weights.values == 1.0)],
    }


def _cmd_lethargy(cfg: dict) -> dict:
    eps = _get(cfg, "epsilons", list)
    if not eps:
        raise ConfigError("epsilons", "need at least one prescribed error")
    scheme = SchemeDescriptor.subspace_chain(np.eye(len(eps)))
    witness = lethargy_witness(np.asarray(eps, dtype=float), scheme)
    achieved = [best_error(witness, scheme, k).error for k in range(len(eps))]
    return {"prescribed": [float(e) for e in eps], "witness": witness, "achieved": achieved}


def _cmd_axioms(cfg: dict) -> dict:
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space)
    horizon = _horizon(cfg, default=20)
    seed = _get(cfg, "seed", int, required=False, default=0)
    report = verify_axioms(scheme, family, horizon, seed=seed)
    return {"scheme_kind": scheme.kind, "report": report}


def _cmd_widths(cfg: dict) -> dict:
    horizon = _horizon(cfg, default=None)
    n = _get(cfg, "n", int, required=False)
    if "operator" in cfg:
        matrix = np.asarray(_get(cfg, "operator.matrix", list), dtype=float)
        scheme = _build_scheme(cfg, {"kind": "seq_lp", "p": 2.0,
                                     "dim": matrix.shape[0]}) if "scheme" in cfg else None
        Q = _build_generalized(cfg, matrix.shape[0], scheme)
        seed = _get(cfg, "seed", int, required=False, default=0)
        ns = [n] if n is not None else list(range((horizon or matrix.shape[0]) + 1))
        results = [operator_delta(matrix, Q, i, seed=seed) for i in ns]
        return {"results": results, "kind": "operator", "verdict": None}
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space) if "scheme" in cfg else None
    Q = _build_generalized(cfg, space.get("dim"), scheme)
    seed = _require_seed(cfg) if Q.kind == "all_subspaces" else _get(
        cfg, "seed", int, required=False, default=0)
    if n is not None:
        results = [gen_kolmogorov_number(family, Q, n, seed=seed)]
        verdict = None
    else:
        prof = q_profile(family, Q, horizon if horizon is not None else 8, seed=seed)
        results = prof.results
        verdict = prof.verdict
    return {"results": results, "kind": "set", "verdict": verdict}


def _cmd_decompose(cfg: dict) -> dict:
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space)
    depth = _get(cfg, "depth", int, required=False, default=6)
    deco = order_c0_decompose(family, scheme, depth)
    return {
        "depth": deco.depth,
        "scale": deco.scale,
        "stage_indices": deco.stage_indices,
        "lambdas": deco.lambdas,
        "atom_norms": deco.atom_norms,
        "atom_bounds": deco.atom_bounds,
        "residual_norms": deco.residual_norms,
        "residual_bounds": deco.residual_bounds,
    }


def _cmd_hull_check(cfg: dict) -> dict:
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space)
    n = _get(cfg, "n", int)
    samples = _get(cfg, "samples", int, required=False, default=200)
    seed = _require_seed(cfg)
    report = hull_invariance_check(family, scheme, n, samples=samples, seed=seed)
    return {"report": report}


def _cmd_jackson(cfg: dict) -> dict:
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space)
    n_range = _get(cfg, "n_range", list, required=False, default=[1, 20])
    if len(n_range) != 2:
        raise ConfigError("n_range", "expected [first, last]")
    report = jackson_ratio(family[0], scheme, range(int(n_range[0]), int(n_range[1]) + 1))
    return {
        "indices": report.indices,
        "errors": report.errors,
        "moduli": report.moduli,
        "ratios": report.ratios,
        "max_ratio": report.max_ratio,
    }


def _cmd_projection_defect(cfg: dict) -> dict:
    family, space = _build_family(cfg)
    scheme = _build_scheme(cfg, space)
    k = _get(cfg, "k", int)
    report = projection_defect(family, scheme, k)
    return {"report": report}


_HANDLERS = {
    "profile": _cmd_profile,
    "net": _cmd_net,
    "witness-weights": _cmd_witness_weights,
    "lethargy": _cmd_lethargy,
    "axioms": _cmd_axioms,
    "widths": _cmd_widths,
    "decompose": _cmd_decompose,
    "hull-check": _cmd_hull_check,
    "jackson": _cmd_jackson,
    "projection-defect": _cmd_projection_defect,
}


def run(command: str, config: dict, output: str = "json") -> tuple[int, str]:
    """Execute one command; returns (exit status, report text).

    Exit status 2 carries a machine-readable error object instead of a report.
    """
    try:
        if command not in _HANDLERS:
            raise ConfigError("command", f"unknown command {command!r}")
        if output not in ("json", "csv"):
            raise ConfigError("output", f"unknown output format {output!r}")
        result = _HANDLERS[command](config)
        canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
        report = {
            "command": command,
            "version": __version__,
            "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
            "seed": config.get("seed"),
            "horizon": config.get("horizon"),
            "tolerances": {
                "config_tol": config.get("tol"),
                "hilbert_solver": 1e-8,
                "minimax_solver": 1e-6,
            },
            "result": result,
        }
        if output == "csv":
            return 0, dumps_csv(command, _jsonable(result))
        return 0, dumps_report(report)
    except ConfigError as err:
        payload = {"error": {"type": "config", "path": err.path, "message": err.message}}
        return 2, dumps_report(payload)
    except _PRECONDITION_ERRORS as err:
        payload = {"error": {"type": "precondition", "message": str(err)}}
        return 2, dumps_report(payload)


def _write_atomic(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="approxwidths",
        description="profiles, nets, widths and weight constructions on discretized spaces",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--output", choices=("json", "csv"), default="json")
    parser.add_argument("--out", help="write the report here (default: stdout)")
    parser.add_argument("--tol", type=float, help="override the config tolerance")
    parser.add_argument("--horizon", type=int, help="override the config horizon")
    parser.add_argument("--seed", type=int, help="override the config seed")
    args = parser.parse_args(argv)

    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise json.JSONDecodeError("top level must be an object", "", 0)
    except OSError as err:
        sys.stdout.write(dumps_report(
            {"error": {"type": "config", "path": "config", "message": str(err)}}))
        return 2
    except json.JSONDecodeError as err:
        sys.stdout.write(dumps_report(
            {"error": {"type": "config", "path": "config", "message": f"bad JSON: {err}"}}))
        return 2

    for key in ("tol", "horizon", "seed"):
        value = getattr(args, key)
        if value is not None:
            config[key] = value

    status, text = run(args.command, config, args.output)
    if args.out:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    raise SystemExit(main())

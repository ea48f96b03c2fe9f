"""Batch command-line front end.

Exit codes: 0 success, 1 input/schema/domain error, 2 verdict failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import numpy as np

from . import __version__
from .errors import ConfigError, CurvlabError, IndeterminateRankError
from .grids import GridSpec
from .kernels import KernelSpec
from .multiplier import MatrixMultiplier, corona_bound, left_inverse_for, verify_left_inverse
from .quotient import (
    QuotientSpec,
    additivity_profile,
    cross_kernel_report,
    iso_test,
    kernel_curvature,
    quotient_curvature,
)
from .similarity import (
    build_idempotent,
    carleson_diagnostic,
    defect_profile,
    splitting_angle,
    uniform_equivalence_diagnostic,
)
from .truncation import (
    localized_dimension,
    oracle_gram_check,
    quotient_eigenvector_check,
    similarity_map_report,
)

log = logging.getLogger("curvlab")

COMMANDS = (
    "curvature",
    "quotient-curvature",
    "verify-additivity",
    "iso-test",
    "cross-kernel",
    "corona",
    "similarity",
    "carleson",
    "oracle",
)

DEFAULT_TOL = {
    "iso": 1e-5,
    "additivity": 1e-6,
    "twist": 1e-6,
    "corona_eps": 1e-6,
    "oracle": 1e-8,
    "exact": 1e-12,
}

_KERNEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": ["szego", "bergman", "weighted_bergman", "drury_arveson", "product"]},
        "alpha": {"type": "number"},
        "dim": {"type": "integer", "minimum": 1},
        "domain": {"enum": ["unit_disk", "unit_ball", "polydisk"]},
        "factors": {"type": "array", "items": {"$ref": "#/$defs/kernel"}},
    },
}

_MONOMIAL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["exp"],
    "properties": {
        "exp": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "re": {"type": "number"},
        "im": {"type": "number"},
    },
}

_MULTIPLIER = {
    "type": "object",
    "additionalProperties": False,
    "required": ["rows", "cols", "entries"],
    "properties": {
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "nvars": {"type": "integer", "minimum": 1},
        "entries": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "items": _MONOMIAL}},
        },
    },
}

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"kernel": _KERNEL, "multiplier": _MULTIPLIER},
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "kernel": {"$ref": "#/$defs/kernel"},
        "kernels": {"type": "array", "items": {"$ref": "#/$defs/kernel"}, "minItems": 2, "maxItems": 2},
        "multiplier": {"$ref": "#/$defs/multiplier"},
        "multipliers": {"type": "array", "items": {"$ref": "#/$defs/multiplier"}, "minItems": 2, "maxItems": 2},
        "psi": {"$ref": "#/$defs/multiplier"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r_max": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "n_radial": {"type": "integer", "minimum": 2},
                "n_angular": {"type": "integer", "minimum": 1},
                "per_axis": {"type": "integer", "minimum": 2},
                "shape": {"enum": ["unit_disk", "unit_ball", "polydisk"]},
                "dim": {"type": "integer", "minimum": 1},
                "margin": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "points": {"type": "array", "items": _POINT},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "minimum": 0} for k in DEFAULT_TOL},
        },
        "levels": {"type": "integer", "minimum": 0, "maximum": 10},
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"type": "array", "items": {"type": "integer", "minimum": 4}},
                "w": {"type": "array", "items": _POINT},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string"}, "format": {"enum": ["json", "csv"]}},
        },
        "expect": {"enum": ["isomorphic", "non-isomorphic"]},
    },
}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config schema violation at {where}: {exc.message}") from exc
    return cfg


def _require(cfg: dict, key: str, command: str):
    if key not in cfg:
        raise ConfigError(f"{command} needs '{key}' in the config")
    return cfg[key]


def _point(coords) -> np.ndarray:
    if len(coords) % 2:
        raise ConfigError(f"point {coords} must list re, im pairs")
    c = np.asarray(coords, dtype=float)
    return c[0::2] + 1j * c[1::2]


def _flat(z) -> list[float]:
    return [v for c in np.ravel(z) for v in (float(c.real), float(c.imag))]


def _grid(cfg: dict, kernel: KernelSpec | None, nvars: int) -> GridSpec:
    g = dict(cfg.get("grid", {}))
    if "shape" in g:
        return GridSpec(**g)
    g.pop("dim", None)
    if kernel is not None and kernel.domain.shape != "unit_disk":
        return GridSpec(kernel.domain.shape, kernel.dim, **g)
    if nvars > 1:
        return GridSpec("unit_ball", nvars, **g)
    return GridSpec("unit_disk", 1, **g)


def _points_or_grid(cfg, kernel, nvars):
    if "points" in cfg:
        return np.array([_point(p) for p in cfg["points"]]), None
    grid = _grid(cfg, kernel, nvars)
    return grid.points(), grid


def _tol(cfg: dict, key: str) -> float:
    return float(cfg.get("tolerances", {}).get(key, DEFAULT_TOL[key]))


def _curv_rows(pts, blocks):
    rows = []
    for p, b in zip(pts, blocks):
        vals = np.ravel(b)
        rows.append(_flat(p) + [float(v.real) for v in vals])
    return rows


def _psi_for(cfg, theta):
    if "psi" in cfg:
        return MatrixMultiplier.from_json(cfg["psi"])
    return left_inverse_for(theta)


def cmd_curvature(cfg):
    kernel = KernelSpec.from_json(_require(cfg, "kernel", "curvature"))
    pts, grid = _points_or_grid(cfg, kernel, kernel.dim)
    curv = kernel_curvature(kernel, pts)
    res = {
        "kernel": kernel.to_json(),
        "n_points": len(pts),
        "hermitian_defect": curv.hermitian_defect(),
        "curvature": [[_flat(p), _flat(b)] for p, b in zip(pts, curv.blocks[..., 0, 0])],
    }
    if grid:
        res["grid"] = grid.to_json()
    return True, res, _curv_rows(pts, curv.blocks)


def cmd_quotient_curvature(cfg):
    kernel = KernelSpec.from_json(_require(cfg, "kernel", "quotient-curvature"))
    theta = MatrixMultiplier.from_json(_require(cfg, "multiplier", "quotient-curvature"))
    spec = QuotientSpec(kernel, theta)
    pts, grid = _points_or_grid(cfg, kernel, kernel.dim)
    curv = quotient_curvature(spec, pts)
    res = {
        "rank": spec.rank,
        "n_points": len(pts),
        "hermitian_defect": curv.hermitian_defect(),
        "curvature": [[_flat(p), _flat(b)] for p, b in zip(pts, curv.orthonormal())],
    }
    if grid:
        res["grid"] = grid.to_json()
    return True, res, _curv_rows(pts, curv.orthonormal())


def cmd_verify_additivity(cfg):
    kernel = KernelSpec.from_json(_require(cfg, "kernel", "verify-additivity"))
    theta = MatrixMultiplier.from_json(_require(cfg, "multiplier", "verify-additivity"))
    grid = _grid(cfg, kernel, kernel.dim)
    rep = additivity_profile(QuotientSpec(kernel, theta), grid)
    tol = _tol(cfg, "additivity")
    res = {
        "max_residual": rep.max_residual,
        "tolerance": tol,
        "grid": grid.to_json(),
        "skipped": rep.skipped,
    }
    rows = [_flat(p) + [float(r)] for p, r in zip(rep.points, rep.residuals)]
    return rep.max_residual <= tol, res, rows


def _iso_expect(cfg, verdict: bool) -> bool:
    expect = cfg.get("expect")
    if expect is None:
        return True
    return verdict == (expect == "isomorphic")


def cmd_iso_test(cfg):
    m1, m2 = (MatrixMultiplier.from_json(m) for m in _require(cfg, "multipliers", "iso-test"))
    kernel = KernelSpec.from_json(cfg["kernel"]) if "kernel" in cfg else None
    grid = _grid(cfg, kernel, m1.nvars)
    tol = _tol(cfg, "iso")
    v = iso_test(m1, m2, grid, tol)
    res = v.to_json()
    res["grid"] = grid.to_json()
    return _iso_expect(cfg, v.isomorphic), res, None


def cmd_cross_kernel(cfg):
    ka, kb = (KernelSpec.from_json(k) for k in _require(cfg, "kernels", "cross-kernel"))
    m1, m2 = (MatrixMultiplier.from_json(m) for m in _require(cfg, "multipliers", "cross-kernel"))
    grid = _grid(cfg, ka, m1.nvars)
    rep = cross_kernel_report(ka, kb, m1, m2, grid, _tol(cfg, "iso"), _tol(cfg, "twist"))
    res = {
        "consistent": rep.consistent,
        "iso": rep.iso_verdict.to_json(),
        "kernel_verdicts": rep.kernel_verdicts,
        "kernel_deviations": rep.kernel_deviations,
        "twist_gap": rep.twist_gap,
        "grid": grid.to_json(),
    }
    return rep.consistent, res, None


def cmd_corona(cfg):
    theta = MatrixMultiplier.from_json(_require(cfg, "multiplier", "corona"))
    kernel = KernelSpec.from_json(cfg["kernel"]) if "kernel" in cfg else None
    pts, grid = _points_or_grid(cfg, kernel, theta.nvars)
    eps = _tol(cfg, "corona_eps")
    bound = corona_bound(theta, pts)
    res = {"bound": bound, "epsilon": eps}
    if grid:
        res["grid"] = grid.to_json()
    ok = bound >= eps
    if "psi" in cfg:
        cert = verify_left_inverse(theta, MatrixMultiplier.from_json(cfg["psi"]), pts)
        res["left_inverse"] = {"residual": cert.residual, "psi_sup_norm": cert.psi_sup_norm}
        ok = ok and cert.valid(_tol(cfg, "exact"))
    sv = np.linalg.svd(theta(pts), compute_uv=False)[:, -1]
    rows = [_flat(p) + [float(s)] for p, s in zip(pts, sv)]
    return ok, res, rows


def cmd_similarity(cfg):
    theta = MatrixMultiplier.from_json(_require(cfg, "multiplier", "similarity"))
    kernel = KernelSpec.from_json(cfg.get("kernel", {"family": "szego"}))
    psi = _psi_for(cfg, theta)
    grid = _grid(cfg, kernel, theta.nvars)
    idem = build_idempotent(theta, psi, _tol(cfg, "exact"))
    angle, cond = splitting_angle(theta, idem, grid)
    res = {
        "psi": psi.to_json(),
        "idempotent_residuals": idem.residuals,
        "min_angle": angle,
        "max_condition": cond,
        "grid": grid.to_json(),
    }
    rows = None
    if theta.rows == theta.cols + 1:
        lo, hi = uniform_equivalence_diagnostic(theta, grid)
        res["uniform_equivalence"] = {"inf_norm": lo, "sup_norm": hi}
    if theta.nvars == 1:
        prof = defect_profile(QuotientSpec(kernel, theta), grid)
        res["defect"] = {k: v for k, v in prof.to_json().items() if k != "samples"}
        rows = [list(r) for r in prof.csv_rows()]
    return True, res, rows


def cmd_carleson(cfg):
    theta = MatrixMultiplier.from_json(_require(cfg, "multiplier", "carleson"))
    kernel = KernelSpec.from_json(cfg.get("kernel", {"family": "szego"}))
    grid = _grid(cfg, kernel, 1)
    rep = carleson_diagnostic(QuotientSpec(kernel, theta), int(cfg.get("levels", 8)), grid)
    ok = bool(np.isfinite(rep.sup_ratio) and np.isfinite(rep.pointwise_constant))
    return ok, rep.to_json(), None


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CURVLAB_THREADS", "1")))
    except ValueError:
        return 1


def cmd_oracle(cfg):
    kernel = KernelSpec.from_json(cfg.get("kernel", {"family": "szego"}))
    theta = MatrixMultiplier.from_json(_require(cfg, "multiplier", "oracle"))
    ocfg = cfg.get("oracle", {})
    Ns = sorted(ocfg.get("N", [12, 24, 48]))
    ws = [complex(*p[:2]) for p in ocfg.get("w", [[0.3, 0.0], [0.0, 0.5], [-0.4, 0.2]])]
    tol = _tol(cfg, "oracle")
    m = theta.rows - theta.cols

    def one(args):
        N, w = args
        ec = quotient_eigenvector_check(kernel, theta, w, N)
        try:
            dim = localized_dimension(kernel, theta, w, N)
        except IndeterminateRankError as exc:
            log.info("N=%d w=%s: %s", N, w, exc)
            dim = None
        return {
            "N": N,
            "w": _flat(w),
            "residuals": {
                "eigen": ec.eigen_residual,
                "orthogonality": ec.orthogonality,
                "gram": oracle_gram_check(kernel, theta, w, w, N),
            },
            "localized_dimension": dim,
        }

    jobs = [(N, w) for N in Ns for w in ws]
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        sweeps = list(ex.map(one, jobs))
    top = [s for s in sweeps if s["N"] == Ns[-1]]
    for s in sweeps:
        s["verdict"] = max(s["residuals"].values()) <= tol and s["localized_dimension"] == m
    res = {"sweeps": sweeps, "tolerance": tol}
    try:
        psi = _psi_for(cfg, theta)
    except CurvlabError:
        psi = None
    if psi is not None:
        res["similarity_map"] = [similarity_map_report(kernel, theta, psi, N).to_json() for N in Ns]
    ok = all(s["verdict"] for s in top)
    rows = [[s["N"]] + s["w"] + list(s["residuals"].values()) for s in sweeps]
    return ok, res, rows


HANDLERS = {
    "curvature": cmd_curvature,
    "quotient-curvature": cmd_quotient_curvature,
    "verify-additivity": cmd_verify_additivity,
    "iso-test": cmd_iso_test,
    "cross-kernel": cmd_cross_kernel,
    "corona": cmd_corona,
    "similarity": cmd_similarity,
    "carleson": cmd_carleson,
    "oracle": cmd_oracle,
}


def _apply_overrides(cfg: dict, args) -> dict:
    cfg = json.loads(json.dumps(cfg))
    if args.tol is not None:
        key = {
            "iso-test": "iso",
            "cross-kernel": "iso",
            "verify-additivity": "additivity",
            "corona": "corona_eps",
            "oracle": "oracle",
            "similarity": "exact",
        }.get(args.command)
        if key:
            cfg.setdefault("tolerances", {})[key] = args.tol
    if args.grid_r is not None:
        cfg.setdefault("grid", {})["r_max"] = args.grid_r
    if args.grid_n is not None:
        g = cfg.setdefault("grid", {})
        g["n_radial"] = args.grid_n
        g["n_angular"] = 2 * args.grid_n
        g["per_axis"] = args.grid_n
    if args.expect is not None:
        cfg["expect"] = args.expect
    return cfg


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".curvlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(rows, nvars_hint: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    width = len(rows[0]) if rows else 3
    header = ["re", "im"] + ["value" if width == 3 else f"value{i}" for i in range(width - 2)]
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) for v in r])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvlab", description="Curvature invariants of quotient Hilbert modules.")
    p.add_argument("--version", action="version", version=f"curvlab {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output path (default: stdout for JSON)")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--tol", type=float)
    p.add_argument("--grid-r", type=float, dest="grid_r")
    p.add_argument("--grid-n", type=int, dest="grid_n")
    p.add_argument("--expect", choices=["isomorphic", "non-isomorphic"])
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
        ok, results, rows = HANDLERS[args.command](cfg)
    except (CurvlabError, jsonschema.ValidationError) as exc:
        print(f"curvlab: error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError, ValueError) as exc:
        print(f"curvlab: error: invalid input: {exc}", file=sys.stderr)
        return 1

    out_cfg = cfg.get("output", {})
    fmt = args.format or out_cfg.get("format", "json")
    out = args.out or out_cfg.get("path")
    report = {
        "schema": 1,
        "tool": "curvlab",
        "version": __version__,
        "command": args.command,
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "verdict": bool(ok),
    }
    report.update(results)
    if fmt == "csv":
        if rows is None:
            print(f"curvlab: error: {args.command} has no per-point data for CSV", file=sys.stderr)
            return 1
        if out:
            atomic_write(out, csv_text(rows))
            report["per_point"] = out
        else:
            sys.stdout.write(csv_text(rows))
            out = None
    report["wall_clock_s"] = time.perf_counter() - t0
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if fmt == "json" and out:
        atomic_write(out, text)
    elif fmt == "json" or out:
        sys.stdout.write(text)
    log.info("%s finished in %.3fs, verdict=%s", args.command, report["wall_clock_s"], ok)
    return 0 if ok else 2


def main() -> None:
    sys.exit(run_command())

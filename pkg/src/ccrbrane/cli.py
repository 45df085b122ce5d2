"""Command-line entry point.

Every command resolves a RunConfig (flag > config file > default), runs,
and writes either one JSON object {"config", "results", "diagnostics"} or a
CSV whose leading '#' lines carry the resolved config and version.

Exit codes: 0 pass, 1 check failure, 2 usage error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .branes import CATALOG, make_brane, resolve
from .engine import (ConvergenceError, connection, coupling, deformation_field, density_matrix,
                     kappa_cylinder, kappa_cylinder_reduced, renyi_entropy)
from .fock import ANTI_NORMAL, NORMAL, FockTruncation, OrderedPolynomial, reorder
from .oracle import build_dirac, kernel_state, verify_props
from .quadrature import GAUSSIAN_TABLE, QuadratureError, QuadratureSpec, integrate_mu
from .symbols import (PHIX_TABLE, displacement_table_form, normal_matrix, smoothing_check,
                      symbol_of, symbol_of_displacement)
from .fock import displacement_matrix
from .transport import (PathError, TransportError, abelian_holonomy, apply_winding, loop, make_path,
                        nonabelian_transport, square_path)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(ValueError):
    pass


DEFAULT_PARAMS = {
    "plane": {"L": 1.0},
    "cylinder": {"R": 1.0, "L": 1.0, "ell": 1.0},
    "mobius": {"R": 1.0, "Lring": 1.0, "ell": 20.0},
    "mobius-unscaled": {"R": 1.0, "L": 1.0, "ell": 2.0},
    "torus": {"R": 2.0, "r": 1.0, "ell": 2.0},
    "klein": {"R": 2.0, "r": 1.0, "ell": 2.0},
}


@dataclass
class RunConfig:
    brane: str = "cylinder"
    params: dict = field(default_factory=dict)
    quad: dict = field(default_factory=lambda: {"scheme": "polar", "order": 48, "angular": 192,
                                                "exclusion_radius": 1e-3, "tol": 1e-8})
    cutoff: int = 64
    grid: dict = field(default_factory=lambda: {"s1": [-1.0, 1.0, 5], "s2": [0.0, 6.283185307179586, 5]})
    point: list = field(default_factory=lambda: [0.0, 0.0])
    winding: list = field(default_factory=lambda: [0, 0])
    ells: list = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0])
    ratios: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    turns: int = 1
    steps: int = 200
    path_file: str | None = None
    shape: str = "loop"
    side: float = 1.0
    checks: list = field(default_factory=lambda: ["gaussian", "phix", "orderings", "rho"])
    strict: bool = False
    output: str | None = None
    format: str = "json"
    tolerances: dict = field(default_factory=dict)

    def resolved_params(self) -> dict:
        if self.brane not in CATALOG:
            raise UsageError(f"unknown brane {self.brane!r}; choose from {sorted(CATALOG)}")
        p = dict(DEFAULT_PARAMS[self.brane])
        p.update({k: float(v) for k, v in self.params.items()})
        return p

    def quad_spec(self) -> QuadratureSpec:
        try:
            return QuadratureSpec(**self.quad)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad quadrature settings: {exc}") from exc

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.resolved_params()
        return d


def load_config_file(path: str) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError("config file must hold a mapping")
    known = {f.name for f in fields(RunConfig)}
    bad = set(data) - known
    if bad:
        raise UsageError(f"unknown config keys: {sorted(bad)}")
    return data


def _range(spec: str) -> list:
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid range must be lo:hi:n, got {spec!r}")
    return [float(parts[0]), float(parts[1]), int(parts[2])]


def _floats(spec: str) -> list:
    return [float(v) for v in spec.split(",") if v.strip()]


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = RunConfig()
    merged = asdict(cfg)
    if args.config:
        file_data = load_config_file(args.config)
        for k, v in file_data.items():
            if isinstance(merged.get(k), dict) and isinstance(v, dict) and k != "params":
                merged[k] = {**merged[k], **v}
            else:
                merged[k] = v
    flag = {}
    if args.brane is not None:
        flag["brane"] = args.brane
    if args.param:
        params = dict(merged.get("params") or {})
        for item in args.param:
            if "=" not in item:
                raise UsageError(f"--param expects key=value, got {item!r}")
            k, v = item.split("=", 1)
            params[k.strip()] = float(v)
        flag["params"] = params
    quad = dict(merged["quad"])
    for key, val in (("scheme", args.quad_scheme), ("order", args.quad_order),
                     ("angular", args.quad_angular), ("exclusion_radius", args.quad_eps),
                     ("tol", args.quad_tol)):
        if val is not None:
            quad[key] = val
    flag["quad"] = quad
    simple = {"cutoff": args.cutoff, "turns": args.turns, "steps": args.steps, "path_file": args.path_file,
              "shape": args.shape, "side": args.side, "output": args.output, "format": args.format}
    flag.update({k: v for k, v in simple.items() if v is not None})
    if args.point is not None:
        flag["point"] = list(args.point)
    if args.winding is not None:
        flag["winding"] = list(args.winding)
    grid = dict(merged["grid"])
    if args.s1 is not None:
        grid["s1"] = _range(args.s1)
    if args.s2 is not None:
        grid["s2"] = _range(args.s2)
    flag["grid"] = grid
    if args.ells is not None:
        flag["ells"] = _floats(args.ells)
    if args.ratios is not None:
        flag["ratios"] = _floats(args.ratios)
    if args.check:
        flag["checks"] = list(args.check)
    if args.strict:
        flag["strict"] = True
    if args.tol:
        tols = dict(merged.get("tolerances") or {})
        for item in args.tol:
            k, v = item.split("=", 1)
            tols[k] = float(v)
        flag["tolerances"] = tols
    merged.update(flag)
    try:
        cfg = RunConfig(**merged)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    if cfg.format not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    return cfg


# ---------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else str(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit_json(cfg: RunConfig, results, diagnostics, stream=None) -> str:
    doc = {"config": cfg.as_dict(), "results": results,
           "diagnostics": {"version": __version__, **diagnostics}}
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    _write(cfg, text, stream)
    return text


def emit_csv(cfg: RunConfig, header: list, rows: list, stream=None) -> str:
    buf = io.StringIO()
    buf.write(f"# ccrbrane {__version__}\n")
    for line in json.dumps(_jsonable(cfg.as_dict()), sort_keys=True).splitlines():
        buf.write(f"# config: {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in r])
    text = buf.getvalue()
    _write(cfg, text, stream)
    return text


def _write(cfg, text, stream):
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        (stream or sys.stdout).write(text)


def _grid(cfg: RunConfig):
    lo1, hi1, n1 = cfg.grid["s1"]
    lo2, hi2, n2 = cfg.grid["s2"]
    if int(n1) < 1 or int(n2) < 1:
        raise UsageError("grid sizes must be positive")
    return np.linspace(lo1, hi1, int(n1)), np.linspace(lo2, hi2, int(n2))


# ---------------------------------------------------------------------------
# commands


def _run_checks(cfg: RunConfig) -> list[dict]:
    quad = cfg.quad_spec()
    report = []

    def add(name, value, tol, converged=True):
        report.append({"check": name, "value": float(value), "tol": float(tol),
                       "passed": bool(value <= tol and converged), "converged": bool(converged)})

    for check in cfg.checks:
        try:
            if check == "gaussian":
                tol = cfg.tol("gaussian", 1e-6)
                for label, f, exact in GAUSSIAN_TABLE:
                    for L in (1.0, 2.0):
                        for R in (1.0, 2.0):
                            res = integrate_mu(lambda b: f(b, L, R), quad)
                            ex = exact(L, R)
                            err = abs(res.value - ex) / max(abs(ex), 1e-300) if ex else abs(res.value)
                            add(f"gaussian[{label}](L={L:g},R={R:g})", err, tol, res.converged)
            elif check == "phix":
                tol = cfg.tol("smoothing", 1e-6)
                trunc = FockTruncation.build(64)
                pts = [0.0, 1.0, -1.3 + 0.7j, 1.4j, 1.2 - 1.5j]
                for label, poly, closed in PHIX_TABLE:
                    sym = symbol_of(poly)
                    z = np.array(pts, complex)
                    add(f"phix[{label}] closed form", float(np.max(np.abs(sym(z) - closed(z)))), 1e-12)
                    op = normal_matrix(poly, trunc)
                    add(f"phix[{label}] smoothing",
                        max(smoothing_check(sym, op, a)[0] for a in pts), tol)
                for beta in (0.3 + 0.2j, -0.5j):
                    sym = symbol_of_displacement(beta)
                    z = np.array(pts, complex)
                    add(f"phix[D({beta})] closed form",
                        float(np.max(np.abs(sym(z) - displacement_table_form(beta)(z)))), 1e-12)
                    op = displacement_matrix(beta, trunc)
                    add(f"phix[D({beta})] smoothing", max(smoothing_check(sym, op, a)[0] for a in pts), tol)
            elif check == "orderings":
                trunc = FockTruncation.build(40)
                worst = 0.0
                for p in range(4):
                    for q in range(4):
                        m = OrderedPolynomial.monomial(p, q, 1, ANTI_NORMAL)
                        n = reorder(m, NORMAL)
                        back = reorder(n, ANTI_NORMAL)
                        k = 40 - max(p, q) - 2
                        d = np.abs(m.matrix(trunc) - n.matrix(trunc))[:k, :k]
                        worst = max(worst, float(np.max(d)),
                                    float(np.max(np.abs(back.matrix(trunc) - m.matrix(trunc)))))
                add("orderings round trip", worst, 1e-9)
            elif check == "rho":
                for name in ("cylinder", "torus"):
                    b = make_brane(name, **DEFAULT_PARAMS[name])
                    pt = resolve(b, (0.4, 0.9))
                    r = density_matrix(b, pt, quad)
                    rs = density_matrix(b, pt, quad, star=True)
                    add(f"rho[{name}] properties", float(len(r.violations())), 0.5, r.converged)
                    add(f"rho[{name}] star = adjugate", float(np.max(np.abs(rs.rho - r.adjugate()))), 1e-8,
                        rs.converged)
            elif check == "couplings":
                b = make_brane(cfg.brane, **cfg.resolved_params())
                worst, conv = 0.0, True
                for c in ([0.0, 0.0], [0.5, 1.0], [-0.7, 2.5]):
                    pt = resolve(b, c)
                    worst = max(worst, float(np.max(np.abs(coupling(b, pt, quad)))))
                add(f"couplings[{cfg.brane}] vanish", worst, cfg.tol("couplings", 1e-10), conv)
            else:
                raise UsageError(f"unknown check {check!r}")
        except (QuadratureError, ConvergenceError) as exc:
            report.append({"check": check, "passed": False, "converged": False, "error": str(exc)})
    return report


def cmd_validate(cfg: RunConfig, stream=None) -> int:
    report = _run_checks(cfg)
    failed = [r for r in report if not r["passed"]]
    emit_json(cfg, {"checks": report, "failed": len(failed)},
              {"all_converged": all(r["converged"] for r in report)}, stream)
    if not failed:
        return EXIT_OK
    return EXIT_NUMERIC if all(not r["converged"] for r in failed) else EXIT_FAIL


def cmd_kappa_scan(cfg: RunConfig, stream=None) -> int:
    quad = cfg.quad_spec()
    base = cfg.resolved_params() if cfg.brane == "cylinder" else dict(DEFAULT_PARAMS["cylinder"])
    L = base["L"]
    header = ["ell", "R_over_L", "kappa", "error_estimate", "converged", "kappa_reduced", "N2", "kappa_inf"]
    rows, bad = [], 0
    for ratio in cfg.ratios:
        for ell in cfg.ells:
            b = make_brane("cylinder", R=ratio * L, L=L, ell=ell)
            res = kappa_cylinder(b, quad)
            kr, n2 = kappa_cylinder_reduced(ratio * L, L, ell)
            rows.append([float(ell), float(ratio), float(res.value), res.error_estimate,
                         int(res.converged), kr, n2, 0.5])
            bad += not res.converged
    if cfg.format == "csv":
        emit_csv(cfg, header, rows, stream)
    else:
        emit_json(cfg, {"header": header, "rows": rows}, {"unconverged_rows": bad}, stream)
    return EXIT_NUMERIC if (bad and cfg.strict) else EXIT_OK


def cmd_density_map(cfg: RunConfig, stream=None) -> int:
    quad = cfg.quad_spec()
    b = make_brane(cfg.brane, **cfg.resolved_params())
    g1, g2 = _grid(cfg)
    names = b.chart.names
    header = [names[0], names[1], "rho_uu", "rho_ud_re", "rho_ud_im", "rho_dd", "entropy", "error_estimate",
              "converged", "violations"]
    rows, bad = [], 0
    for s1 in g1:
        for s2 in g2:
            pt = resolve(b, (s1, s2), cfg.winding)
            r = density_matrix(b, pt, quad)
            rho = r.rho
            rows.append([float(s1), float(s2), float(rho[0, 0].real), float(rho[0, 1].real), float(rho[0, 1].imag),
                         float(rho[1, 1].real), renyi_entropy(r), r.error_estimate, int(r.converged),
                         ";".join(r.violations()) or "none"])
            bad += not r.converged
    if cfg.format == "csv":
        emit_csv(cfg, header, rows, stream)
    else:
        emit_json(cfg, {"header": header, "rows": rows}, {"unconverged_cells": bad}, stream)
    return EXIT_NUMERIC if (bad and cfg.strict) else EXIT_OK


def cmd_connection(cfg: RunConfig, stream=None) -> int:
    quad = cfg.quad_spec()
    b = make_brane(cfg.brane, **cfg.resolved_params())
    pt = resolve(b, cfg.point, cfg.winding)
    cs = connection(b, pt, quad, strict=cfg.strict)
    r = density_matrix(b, pt, quad)
    res = {"coords": list(pt.coords), "names": list(cs.names), "alpha_A": pt.alpha_A, "x": pt.x,
           "A_geo": cs.A_geo, "A_def": cs.A_def, "A_topo": cs.A_topo, "C": cs.C, "N2": cs.N2,
           "delta": deformation_field(b, pt, quad), "rho": r.rho, "entropy": renyi_entropy(r)}
    emit_json(cfg, res, {"gauge_residual": cs.gauge_residual, "gauge_residual_after": cs.residual_after,
                         "error_estimate": cs.error_estimate, "converged": cs.converged}, stream)
    return EXIT_OK


def read_path_file(path: str, brane_name: str | None = None):
    """Parse 'brane: <name>' plus one 's1 s2' pair per line; '#' comments."""
    name, coords = None, []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("brane:"):
            name = line.split(":", 1)[1].strip()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PathError(f"{path}:{lineno}: expected two numbers, got {raw!r}")
        try:
            coords.append([float(parts[0]), float(parts[1])])
        except ValueError:
            raise PathError(f"{path}:{lineno}: not a number in {raw!r}") from None
    if name is None:
        raise PathError(f"{path}: missing 'brane: <name>' header")
    if brane_name and name != brane_name:
        raise PathError(f"{path}: path is for {name!r} but brane {brane_name!r} was requested")
    return name, np.array(coords)


def cmd_transport(cfg: RunConfig, stream=None) -> int:
    quad = cfg.quad_spec()
    if cfg.path_file:
        name, coords = read_path_file(cfg.path_file)
        cfg.brane = name
        b = make_brane(name, **cfg.resolved_params())
        path = make_path(b, coords, cfg.winding, require_closed=False)
    else:
        b = make_brane(cfg.brane, **cfg.resolved_params())
        if cfg.shape == "square":
            path = square_path(b, cfg.point, cfg.side)
        else:
            path = loop(b, cfg.point, p=cfg.turns, points=2 * cfg.steps + 1, n=cfg.winding)
    ab = abelian_holonomy(b, path, quad) if path.closed else None
    res = {"closed": path.closed, "turns": list(path.turns)}
    diag = {}
    if ab is not None:
        res.update({"geometric_phase": ab.geometric_phase, "topological_phase": ab.topological_phase,
                    "integrals": ab.integrals})
        diag["abelian"] = ab.diagnostics
        lab = apply_winding(b, path.n, path.coords[0], path.turns if b.chart.periodic == (True, True) else path.p)
        res["final_label"] = {"n": list(lab.n), "coords": list(lab.coords), "tau_sign": lab.tau_sign}
    if b.chart.periodic != (False, False):
        nab = nonabelian_transport(b, path, quad, steps=cfg.steps)
        res.update({"U": nab.U, "survival_probability": nab.survival_probability,
                    "amplitudes": list(nab.amplitudes)})
        diag.update({"unitarity_defect": nab.unitarity_defect,
                     "direct_vs_intermediate": nab.diagnostics["direct_vs_intermediate"]})
    emit_json(cfg, res, diag, stream)
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, stream=None) -> int:
    b = make_brane(cfg.brane, **cfg.resolved_params())
    pt = resolve(b, cfg.point, cfg.winding)
    trunc = FockTruncation.build(cfg.cutoff)
    dm = build_dirac(b, pt.x, trunc)
    k = kernel_state(dm)
    rep = verify_props(dm, k.vector, pt)
    gates = {
        "kernel": k.conclusive,
        "position": rep.mean_position_error <= cfg.tol("position", 1e-6) * b.scale,
        "uncertainty_identity": rep.identity_residual <= cfg.tol("identity", 1e-8),
    }
    emit_json(cfg, {"kernel": k.as_dict(), "props": rep.as_dict(), "gates": gates,
                    "reduced_rho": k.reduced_density(), "x": pt.x},
              {"source": dm.source, "hermiticity_defect": dm.hermiticity_defect}, stream)
    return EXIT_OK if all(gates.values()) else EXIT_FAIL


def cmd_surface_export(cfg: RunConfig, stream=None) -> int:
    b = make_brane(cfg.brane, **cfg.resolved_params())
    g1, g2 = _grid(cfg)
    names = b.chart.names
    header = [names[0], names[1], "alpha_re", "alpha_im", "x1", "x2", "x3", "declared_error"]
    rows = []
    for s1 in g1:
        for s2 in g2:
            pt = resolve(b, (s1, s2), cfg.winding)
            err = float(np.max(np.abs(pt.x - b.declared_x(np.array([s1, s2])))))
            rows.append([float(s1), float(s2), pt.alpha_A.real, pt.alpha_A.imag, *map(float, pt.x), err])
    if cfg.format == "csv":
        emit_csv(cfg, header, rows, stream)
    else:
        emit_json(cfg, {"header": header, "rows": rows}, {}, stream)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate, "kappa-scan": cmd_kappa_scan, "density-map": cmd_density_map,
    "connection": cmd_connection, "transport": cmd_transport, "oracle": cmd_oracle,
    "surface-export": cmd_surface_export,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccrbrane", description="Quasicoherent geometry of CCR D2-branes")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON config file")
    common.add_argument("--brane", choices=sorted(CATALOG))
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="brane parameter, repeatable")
    common.add_argument("--quad.scheme", dest="quad_scheme", choices=["polar", "tensor-hermite"])
    common.add_argument("--quad.order", dest="quad_order", type=int)
    common.add_argument("--quad.angular", dest="quad_angular", type=int)
    common.add_argument("--quad.eps", dest="quad_eps", type=float)
    common.add_argument("--quad.tol", dest="quad_tol", type=float)
    common.add_argument("--cutoff", type=int)
    common.add_argument("--point", type=float, nargs=2, metavar=("S1", "S2"))
    common.add_argument("--winding", type=int, nargs=2, metavar=("N1", "N2"))
    common.add_argument("--s1", help="grid range lo:hi:n")
    common.add_argument("--s2", help="grid range lo:hi:n")
    common.add_argument("--ells", help="comma-separated ell values")
    common.add_argument("--ratios", help="comma-separated R/L values")
    common.add_argument("--turns", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--path-file", dest="path_file")
    common.add_argument("--shape", choices=["loop", "square"])
    common.add_argument("--side", type=float)
    common.add_argument("--check", action="append")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE")
    common.add_argument("--strict", action="store_true", help="exit 3 on any unconverged quadrature")
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=["json", "csv"])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None, stream=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, stream)
    except (UsageError, PathError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, QuadratureError, TransportError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

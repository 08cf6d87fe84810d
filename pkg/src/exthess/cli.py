"""Command-line surface: config ingestion, run orchestration, reports.

Subcommands
  check-operator  structure conditions and target validation
  build-barriers  profiles, splice parameters, feasibility threshold
  solve           marching solve on the truncated annulus
  report          merge stage artifacts into one document

Exit codes: 0 success, 1 mathematical/feasibility failure (report still
written), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .barriers import (
    AsymptoticTarget,
    BarrierContext,
    DomainSpec,
    certify_sub,
    certify_super,
    exterior_samples,
)
from .asympt import fit_decay
from .errors import ExthessError
from .implicit import constant_rhs, power_rhs
from .solver import ExteriorDirichletSolver
from .symfun import check_structure, operator_from_descriptor, validate_A

DEFAULT_CONFIG = {
    "operator": {"kind": "hessian_root", "k": 3, "n": 3},
    "a": [1.0, 1.0, 1.0],
    "b": [0.0, 0.0, 0.0],
    "c": None,
    "domain": {"semi_axes": [1.0, 1.0, 1.0], "phi": 0.0, "n_mesh": 2048},
    "rhs": {"form": "power", "c0": 0.5, "beta": 3.0, "s0": 2.0, "sign": -1},
    "splice": {"s1": None, "s2": None, "r1": None, "r2": None},
    "grid": {"mode": "radial", "n_radial": 4001, "r_outer": 20.0,
             "grid_n": 24, "half_width": 1.75},
    "verification": {"n_samples": 10000, "r_factor": 10.0},
    "seed": 0,
    "threads": 1,
    "output_dir": ".",
}


def _merge(base, override):
    # unknown keys are rejected at the top level only; nested descriptors
    # (operator kinds, rhs forms) carry kind-specific fields
    out = dict(base)
    for key, val in override.items():
        if key not in base:
            raise ValueError(f"unknown config key: {key}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            merged = dict(base[key])
            merged.update(val)
            out[key] = merged
        else:
            out[key] = val
    return out


def load_config(path, overrides=None):
    raw = json.loads(Path(path).read_text())
    cfg = _merge(DEFAULT_CONFIG, raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    return cfg


def _dump(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_json_default)
                    + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def build_problem(cfg):
    """Operator, target, right-hand side and domain from a config."""
    op = operator_from_descriptor(cfg["operator"])
    a = np.sort(np.asarray(cfg["a"], dtype=float))
    b = np.asarray(cfg["b"], dtype=float)
    rhs_cfg = cfg["rhs"]
    if rhs_cfg["form"] == "constant":
        rhs = constant_rhs(s0=rhs_cfg.get("s0", 2.0))
    elif rhs_cfg["form"] == "power":
        rhs = power_rhs(rhs_cfg["c0"], rhs_cfg["beta"], rhs_cfg["s0"], a,
                        sign=rhs_cfg.get("sign", -1))
    else:
        raise ValueError(f"unknown rhs form: {rhs_cfg['form']}")
    dom_cfg = cfg["domain"]
    phi = _phi_from_config(dom_cfg["phi"], b)
    domain = DomainSpec(dom_cfg["semi_axes"], phi=phi,
                        n_mesh=dom_cfg.get("n_mesh", 2048))
    target = AsymptoticTarget(a, b=b, c=cfg["c"] if cfg["c"] is not None else 0.0)
    return op, target, rhs, domain


def _phi_from_config(phi_cfg, b):
    """Boundary data: constant or real spherical-harmonic coefficients.

    A nonzero linear part b is folded in here (the standard reduction
    subtracts b.x from the unknown), so all internals run with b = 0.
    """
    if isinstance(phi_cfg, (int, float)):
        base = None
        const = float(phi_cfg)
    elif phi_cfg.get("form") == "constant":
        base = None
        const = float(phi_cfg["value"])
    elif phi_cfg.get("form") == "spherical_harmonics":
        from scipy.special import sph_harm_y

        coeffs = [(int(l), int(m), float(cv)) for l, m, cv in
                  phi_cfg["coefficients"]]
        const = 0.0

        def base(x):
            d = np.asarray(x, dtype=float)
            d = d / np.linalg.norm(d)
            theta = np.arccos(np.clip(d[2], -1.0, 1.0))
            az = np.arctan2(d[1], d[0])
            total = 0.0
            for l, m, cv in coeffs:
                y = sph_harm_y(l, abs(m), theta, az)
                if m > 0:
                    total += cv * np.sqrt(2.0) * (-1.0) ** m * y.real
                elif m < 0:
                    total += cv * np.sqrt(2.0) * (-1.0) ** m * y.imag
                else:
                    total += cv * y.real
            return total
    else:
        raise ValueError("phi must be a number or a recognized descriptor")

    if base is None and not np.any(b):
        return const

    def phi(x):
        x = np.asarray(x, dtype=float)
        val = const if base is None else const + base(x)
        return val - float(np.dot(b, x))

    return phi


# -- subcommands -------------------------------------------------------------


def cmd_check_operator(cfg, out_dir: Path) -> int:
    op, target, rhs, _ = build_problem(cfg)
    t0 = time.time()
    structure = check_structure(
        op, sample_seed=int(cfg["seed"]),
        g_bounds={"inf_g": rhs.inf_g, "sup_g": rhs.sup_g},
    )
    validation = validate_A(op, target.a)
    waive = rhs.inf_g >= 1.0
    ok = structure.all_required_pass(waive_r_shift=waive)
    fragment = {
        "structure": structure.to_dict(),
        "target_validation": dataclasses.asdict(validation),
        "r_shift_waived": waive,
        "passed": bool(ok and validation.in_calA),
        "elapsed_seconds": time.time() - t0,
    }
    _dump(fragment, out_dir / "operator_report.json")
    return 0 if fragment["passed"] else 1


def cmd_build_barriers(cfg, out_dir: Path, c_values=None) -> int:
    op, target, rhs, domain = build_problem(cfg)
    t0 = time.time()
    sp = cfg["splice"]
    ctx = BarrierContext(op, target, rhs, domain,
                         s1=sp["s1"], s2=sp["s2"], r1=sp["r1"], r2=sp["r2"])
    code = 0
    fits = []
    try:
        ctx.prepare()
        if c_values is None:
            c_cfg = cfg["c"]
            if c_cfg is None:
                c_values = [ctx.c_star + 1.0] if np.isfinite(ctx.c_star) else [None]
            else:
                c_values = [float(c_cfg)]
        ver = cfg["verification"]
        for c in c_values:
            sub, psub = ctx.build_sub(c)
            entry = {"sub": psub}
            sub.profile.export_csv(out_dir / "sub_profile.csv")
            fits.append({"profile": "sub",
                         **fit_decay(sub.profile.grid,
                                     np.abs(sub.profile.w - 1.0)).to_dict()})
            if c is not None:
                sup, psup = ctx.build_super(c)
                entry["super"] = psup
                if hasattr(sup, "damped"):
                    sup.damped.export_csv(out_dir / "super_profile.csv")
                    sup.radial.export_csv(out_dir / "radial_profile.csv")
                    fits.append({"profile": "super",
                                 **fit_decay(sup.damped.grid,
                                             np.abs(sup.damped.w - 1.0)).to_dict()})
                r_hi = ver["r_factor"] * getattr(ctx, "r2", 2.0)
                pts = exterior_samples(domain, r_hi, ver["n_samples"],
                                       seed=int(cfg["seed"]))
                sub_m = certify_sub(sub, op, rhs, pts)
                sup_m = certify_super(sup, op, rhs, pts)
                sandwich = float((sup.value(pts) - sub.value(pts)).min())
                entry["certificates"] = {
                    "sub_min_margin": float(sub_m.min()),
                    "super_min_margin": float(sup_m.min()),
                    "sandwich_min": sandwich,
                    "n_samples": int(pts.shape[0]),
                }
                if sandwich < -1e-9 or sub_m.min() < -1e-8 or sup_m.min() < -1e-8:
                    code = 1
            ctx.report.record(c if c is not None else float("nan"), entry)
    except ExthessError as exc:
        code = 1
        doc = {"error": str(exc), "c_star": getattr(ctx, "c_star", None),
               "elapsed_seconds": time.time() - t0}
        _dump(doc, out_dir / "splice_report.json")
        return code
    doc = ctx.report.to_dict()
    doc["elapsed_seconds"] = time.time() - t0
    _dump(doc, out_dir / "splice_report.json")
    _dump(fits, out_dir / "decay_fits.json")
    return code


def cmd_solve(cfg, out_dir: Path) -> int:
    op, target, rhs, domain = build_problem(cfg)
    t0 = time.time()
    c = cfg["c"] if cfg["c"] is not None else 3.0
    grid_cfg = cfg["grid"]
    if not np.allclose(domain.semi_axes, 1.0) or np.ptp(target.a) > 1e-12:
        raise ValueError("the solver supports a ball domain and A = a*I")
    phi_c = domain.phi_values[0] if not callable(domain._phi) else None
    if phi_c is None or np.ptp(domain.phi_values) > 1e-12:
        raise ValueError("the solver supports constant boundary data")
    a_sc = float(target.a[0])
    if rhs.sup_g <= 1.0 + 1e-12 and rhs.inf_g >= 1.0 - 1e-12:
        # g = 1: the shifted quadratics are exact sub/supersolutions
        sup_sh = float(c)
        low_sh = float(phi_c) - 0.5 * a_sc

        def lower(x):
            return 0.5 * a_sc * np.sum(np.atleast_2d(x) ** 2, axis=1) + low_sh

        def upper(x):
            return 0.5 * a_sc * np.sum(np.atleast_2d(x) ** 2, axis=1) + sup_sh

        bc_far = None
    else:
        sp = cfg["splice"]
        ctx = BarrierContext(op, target, rhs, domain,
                             s1=sp["s1"], s2=sp["s2"], r1=sp["r1"], r2=sp["r2"])
        ctx.prepare()
        if cfg["c"] is None:
            c = ctx.c_star + 1.0
        if rhs.sup_g > 1.0 + 1e-12:
            raise ValueError("solve requires sup g <= 1; only the barrier "
                             "construction supports g above the level set")
        sub, _ = ctx.build_sub(c)
        sup, _ = ctx.build_super(c)
        del sub  # feasibility established; the march clips with smooth bounds
        low_sh = float(phi_c) - 0.5 * a_sc

        def lower(x):
            return 0.5 * a_sc * np.sum(np.atleast_2d(x) ** 2, axis=1) + low_sh

        # the spliced supersolution has a concave splice kink; clip with a
        # smooth quadratic majorant of it on the annulus instead
        r_probe = np.linspace(1.0, np.sqrt(3.0) * grid_cfg["r_outer"], 2000)
        probe = np.zeros((r_probe.size, 3))
        probe[:, 0] = r_probe
        excess = float(np.max(
            sup.value(probe) - (0.5 * a_sc * r_probe**2 + float(c))))
        up_sh = float(c) + max(0.0, excess)

        def upper(x):
            return 0.5 * a_sc * np.sum(np.atleast_2d(x) ** 2, axis=1) + up_sh

        def bc_far(x):
            return 0.5 * a_sc * np.sum(np.atleast_2d(x) ** 2, axis=1) + float(c)
    solver = ExteriorDirichletSolver(
        operator=op, c=float(c), phi=float(phi_c), mode=grid_cfg["mode"],
        n_radial=grid_cfg["n_radial"], r_outer=grid_cfg["r_outer"],
        grid_n=grid_cfg["grid_n"], half_width=grid_cfg["half_width"],
    )
    if grid_cfg["mode"] == "full3d":
        inner = ExteriorDirichletSolver(
            operator=op, c=float(c), phi=float(phi_c), mode="radial",
            n_radial=grid_cfg["n_radial"],
            r_outer=max(grid_cfg["r_outer"],
                        2.0 * np.sqrt(3.0) * grid_cfg["half_width"]),
        ).fit(rhs=rhs, u_lower=lower, u_upper=upper, bc_outer=bc_far)
        solver.fit(rhs=rhs, u_lower=lower, u_upper=upper,
                   bc_outer=lambda X: inner.predict(X))
    else:
        solver.fit(rhs=rhs, u_lower=lower, u_upper=upper, bc_outer=bc_far)
    rep = solver.report_
    doc = rep.to_dict()
    doc["elapsed_seconds"] = time.time() - t0
    _dump(doc, out_dir / "solve_report.json")
    _write_solution_csv(solver, target, out_dir)
    ok = rep.converged and rep.sandwich_lower >= -1e-9 and rep.sandwich_upper >= -1e-9
    return 0 if ok else 1


def _write_solution_csv(solver, target, out_dir: Path):
    path = out_dir / "solution.csv"
    b = target.b
    with open(path, "w") as fh:
        if solver.mode == "radial":
            fh.write("# radial solution\n# s,u\n")
            pts, u = solver.field_
            a_sc = float(target.a[0])
            for x, val in zip(pts, u):
                s = 0.5 * a_sc * float(np.dot(x, x))
                fh.write(f"{s!r},{float(val) + float(np.dot(b, x))!r}\n")
        else:
            fh.write("# cartesian solution\n# x,y,z,u\n")
            grid = solver.grid_
            act = grid.active
            for p, val in zip(grid.points[act], solver.field_[act]):
                fh.write(f"{float(p[0])!r},{float(p[1])!r},{float(p[2])!r},"
                         f"{float(val) + float(np.dot(b, p))!r}\n")


def cmd_report(cfg, out_dir: Path) -> int:
    stages = {
        "operator": "operator_report.json",
        "barriers": "splice_report.json",
        "decay": "decay_fits.json",
        "solve": "solve_report.json",
    }
    missing = [name for name, fn in stages.items()
               if not (out_dir / fn).exists()]
    if missing:
        print(f"missing stage artifacts: {', '.join(sorted(missing))}",
              file=sys.stderr)
        return 1
    doc = {
        "tool_version": __version__,
        "config": cfg,
        "artifacts": {
            "profiles_csv": sorted(
                str(p.name) for p in out_dir.glob("*_profile.csv")),
            "solution_csv": "solution.csv" if (out_dir / "solution.csv").exists()
            else None,
        },
    }
    for name, fn in stages.items():
        doc[name] = json.loads((out_dir / fn).read_text())
    _dump(doc, out_dir / "report.json")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="exthess",
        description="Barriers and approximate solutions for Hessian-type "
                    "exterior Dirichlet problems",
    )
    parser.add_argument("command",
                        choices=["check-operator", "build-barriers",
                                 "solve", "report"])
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (stages are currently sequential)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--c", action="append", type=float, default=None,
                        help="far-field constant; repeat for a ladder")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config,
                          overrides={"seed": args.seed, "threads": args.threads})
        if args.out is not None:
            cfg["output_dir"] = args.out
        out_dir = Path(cfg["output_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "check-operator":
            return cmd_check_operator(cfg, out_dir)
        if args.command == "build-barriers":
            return cmd_build_barriers(cfg, out_dir, c_values=args.c)
        if args.command == "solve":
            if args.c:
                cfg["c"] = args.c[0]
            return cmd_solve(cfg, out_dir)
        return cmd_report(cfg, out_dir)
    except ExthessError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

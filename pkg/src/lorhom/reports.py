"""Scenario runners, deterministic JSON reports and CSV plot data."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Scenario, build_factor, factor_to_toml, write_params, write_toml
from .excess_field import excess_field
from .factor import FactorSpec, validate_factor
from .geodesics import conjugate_point, cut_point
from .homotopy import (limit_curve_check, meridian_homotopy, obstruction_margin, perturb_homotopy,
                       row_lengths_csv, verify_causal_homotopy)
from .lengths import excess_over, length
from .mesh import build_mesh, mesh_distance
from .sphere import NORTH, SOUTH, SphereCurve, from_angles, meridian, meridian_azimuth
from .spacetime import (SpacetimeCurve, classify, deform_to_timelike, lift_meridian,
                        write_curve_csv)
from .timelike import (TimelikeParamSet, build_modified_factor, derive_params, excess_cover_holds,
                       validate_midpoint_excess)

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_CONTRADICTION, EXIT_CONFIG = 0, 1, 2, 3
PLOT_KINDS = ("factor-heatmap", "excess-profile", "row-lengths")


def plain(obj):
    """JSON-ready copy: numpy to builtins, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(resolved: dict) -> str:
    payload = canonical_json({"config": resolved, "version": __version__})
    return hashlib.sha256(payload.encode()).hexdigest()


# tasks ---------------------------------------------------------------------------

def _levels(sc: Scenario):
    lv = sc.params.get("levels")
    return tuple(lv) if lv else (sc.mesh_level, sc.mesh_level + 1)


def task_validate_factor(sc, spec, params, out):
    rep = validate_factor(spec, int(sc.params.get("n_theta", 2048)), int(sc.params.get("n_phi", 4096)),
                          float(sc.params.get("tol", 1e-9)))
    failed = sorted(c.name for c in rep.conditions if not c.passed)
    return rep.to_dict(), {"passed": rep.passed, "failed": failed}, []


def _curve_from(entry: dict, spec: FactorSpec):
    kind = entry.get("kind")
    samples = int(entry.get("samples", 2048))
    if kind == "meridian":
        if "n" in entry:
            return meridian(n=int(entry["n"]), samples=samples)
        return meridian(phi=float(entry["phi"]), samples=samples)
    if kind == "equator":
        a, b = float(entry["phi0"]), float(entry["phi1"])
        t = np.linspace(a, b, samples + 1)
        return SphereCurve(t, from_angles(np.full_like(t, math.pi / 2), t), unit_speed=True)
    raise ConfigError(f"unknown curve kind {kind!r}")


def task_lengths(sc, spec, params, out):
    curves = sc.params.get("curves") or (
        [{"kind": "meridian", "n": n} for n in range(1, spec.max_index + 1)]
        + [{"kind": "equator", "phi0": 0.4, "phi1": 0.6}])
    rows = []
    for entry in curves:
        c = _curve_from(entry, spec)
        ex, err = excess_over(spec, c, target=float(c.params[-1] - c.params[0]))
        rows.append({"curve": entry, "length": length(spec, c), "g0_length": float(c.params[-1] - c.params[0]),
                     "excess_over_g0": ex, "error": err})
    mer = [r for r in rows if r["curve"]["kind"] == "meridian"]
    arcs = [r for r in rows if r["curve"]["kind"] == "equator"]
    checks = {"meridians_at_pi": all(abs(r["length"] - math.pi) <= 1e-9 for r in mer),
              "arcs_exceed_g0": all(r["excess_over_g0"] > r["error"] for r in arcs)}
    return {"curves": rows}, checks, []


def _sign_verdict(value, error, names=("below", "at", "above")):
    if value < -error:
        return names[0]
    if value > error:
        return names[2]
    return names[1] if error == 0 or value == 0 else "inconclusive"


def task_distance(sc, spec, params, out):
    level = int(sc.params.get("graph_level", min(sc.mesh_level, 6)))
    mesh = build_mesh(spec, level)
    d = mesh_distance(mesh, NORTH, SOUTH)
    lv = _levels(sc)
    coarse, fine = (excess_field(spec, k).pole_distance_excess() for k in lv)
    savings = [-excess_over(spec, meridian(n=dip.index))[0] for dip in spec.dips]
    result = {"graph_level": level, "graph_vertices": len(mesh.vertices), "graph_ns": d,
              "graph_ns_relative": d / math.pi - 1, "field_levels": list(lv),
              "field_ns_minus_pi": fine, "field_error": abs(fine - coarse),
              "max_saving": max(savings, default=0.0)}
    checks = {"graph_within_half_percent": abs(d / math.pi - 1) <= 5e-3,
              "ns_vs_pi": _sign_verdict(fine, abs(fine - coarse))}
    return result, checks, []


def _pairs(sc):
    if "pairs" in sc.params:
        return [tuple(int(v) for v in p) for p in sc.params["pairs"]]
    return [(int(sc.params.get("i", 1)), int(sc.params.get("j", 2)))]


def _common(values):
    values = list(values)
    if all(v == values[0] for v in values):
        return values[0]
    return "inconclusive" if "inconclusive" in values else "mixed"


def task_certify(sc, spec, params, out):
    certs = [obstruction_margin(spec, i, j, _levels(sc)) for i, j in _pairs(sc)]
    verdicts = [c.verdict for c in certs]
    return {"certificates": [c.to_dict() for c in certs]}, {"verdict": _common(verdicts)}, []


def task_midpoint_excess(sc, spec, params, out):
    if params is None:
        base = FactorSpec.base(max_index=spec.max_index)
        params = derive_params(base, int(sc.params.get("max_index", 6)))
    scale = float(sc.params.get("nu_scale", 1.0))
    if scale != 1.0:
        # deliberate stress run: dips deeper than the sufficiency bound allows
        params = TimelikeParamSet(params.mu, params.delta, tuple(v * scale for v in params.nu),
                                  params.eps, enforce=False)
        spec = FactorSpec.base(max_index=spec.max_index).with_dips(
            [dict(index=n, diameter=e, depth=min(v, 0.999))
             for n, (e, v) in enumerate(zip(params.eps, params.nu), start=1)])
    rep = validate_midpoint_excess(spec, params, sc.params.get("indices", [1, 2, 3, 4]), _levels(sc))
    entries = [e.verdict for e in rep.entries]
    checks = {"validated": rep.validated, "flagged": bool(rep.flags), "excess": _common(entries)}
    return {"params": params.to_dict(), **rep.to_dict()}, checks, []


def task_timelike_build(sc, spec, params, out):
    N = int(sc.params.get("max_index", 6))
    base = FactorSpec.base(max_index=max(spec.max_index, N))
    params = derive_params(base, N)
    modified = build_modified_factor(base, params)
    rows = []
    for n in range(1, N + 1):
        lift = lift_meridian(n, modified)
        c = classify(lift)
        deformed = deform_to_timelike(lift)
        cd = classify(deformed)
        ends = bool(deformed.tau[0] == 0.0 and deformed.tau[-1] == math.pi
                    and np.array_equal(deformed.space.points[0], NORTH)
                    and np.array_equal(deformed.space.points[-1], SOUTH))
        rows.append({"n": n, "lift": c.to_dict(), "deformed": cd.to_dict(), "endpoints_exact": ends})
        if n == int(sc.params.get("csv_index", 2)):
            write_curve_csv(deformed, out / f"{sc.name}-deformed-{n}.csv")
    write_params(params, out / f"{sc.name}-params.toml")
    write_toml({"factor": factor_to_toml(modified)}, out / f"{sc.name}-factor.toml")
    artifacts = [f"{sc.name}-deformed-{int(sc.params.get('csv_index', 2))}.csv",
                 f"{sc.name}-params.toml", f"{sc.name}-factor.toml"]
    checks = {"params_valid": not params.violations() and excess_cover_holds(params, base),
              "lifts_causal": all(r["lift"]["verdict"] == "causal" for r in rows),
              "deformed_timelike": all(r["deformed"]["verdict"] == "timelike" for r in rows),
              "endpoints_exact": all(r["endpoints_exact"] for r in rows)}
    return {"params": params.to_dict(), "modified": modified.to_dict(), "curves": rows}, checks, artifacts


def task_topological(sc, spec, params, out):
    i, j = int(sc.params.get("i", 1)), int(sc.params.get("j", 3))
    if i == j:
        raise ConfigError("topological contrast needs two distinct meridians")
    H = meridian_homotopy(i, j, int(sc.params.get("n_s", 64)), int(sc.params.get("n_t", 256)),
                          bool(sc.params.get("long_way", False)))
    amp = float(sc.params.get("perturb", 0.0))
    if amp:
        H = perturb_homotopy(H, np.random.default_rng(sc.seed), amp)
    v = verify_causal_homotopy(spec, H)
    rows = [{"s": float(s), "excess": float(e), "error": float(r)}
            for s, e, r in zip(H.s, v.row_excess, v.row_error)]
    name = f"{sc.name}-row-lengths.csv"
    row_lengths_csv(out / name, H, v)
    checks = {"valid_homotopy": True, "non_causal_rows": bool(v.violations),
              "arc": v.coverage.arc, "alarm": v.alarm}
    return {"verification": v.to_dict(), "rows": rows}, checks, [name]


def task_conjugate_cut(sc, spec, params, out):
    phi = float(sc.params.get("azimuth", 0.0))
    direction = [math.cos(phi), math.sin(phi), 0.0]
    conj = conjugate_point(spec, NORTH, direction, float(sc.params.get("max_length", 4.0)))
    cut = cut_point(spec, phi, _levels(sc))
    checks = {"conjugate_at_pi": conj is not None and abs(conj - math.pi) <= 1e-3,
              "cut": "below_pi" if cut.deficit > cut.error else "at_pi"}
    return {"conjugate": conj, "cut": cut.to_dict()}, checks, []


def task_limit_curves(sc, spec, params, out):
    n_max = int(sc.params.get("n_max", spec.max_index))
    samples = int(sc.params.get("samples", 2048))
    seq = [lift_meridian(n, spec, samples) for n in range(1, n_max + 1)]
    limit = SpacetimeCurve(meridian(phi=0.0, samples=samples), spec)
    rep = limit_curve_check(seq, limit)
    gaps = [abs(d - meridian_azimuth(n)) for n, d in enumerate(rep.distances, start=1)]
    checks = {"decreasing": rep.decreasing, "limit_verdict": rep.limit_verdict,
              "matches_azimuth_gap": max(gaps) <= 1e-9}
    return rep.to_dict(), checks, []


TASK_RUNNERS = {
    "validate-factor": task_validate_factor,
    "lengths": task_lengths,
    "distance": task_distance,
    "certify-obstruction": task_certify,
    "midpoint-excess": task_midpoint_excess,
    "timelike-build": task_timelike_build,
    "topological-contrast": task_topological,
    "conjugate-cut": task_conjugate_cut,
    "limit-curves": task_limit_curves,
}


# plot data -------------------------------------------------------------------------

def emit_plot_data(report: dict, kind: str, out_dir) -> Path:
    """Write the CSV behind one plot kind for a finished report."""
    out_dir = Path(out_dir)
    cfg = report["config"]
    spec, _ = build_factor(cfg["factor"])
    name = cfg["name"]
    if kind == "factor-heatmap":
        n_t, n_p = cfg.get("plots", {}).get("heatmap", [128, 256])
        theta = math.pi * (np.arange(n_t) + 0.5) / n_t
        phi = -math.pi + 2 * math.pi * (np.arange(n_p) + 0.5) / n_p
        path = out_dir / f"{name}-factor-heatmap.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "phi", "omega_minus_1"])
            for th in theta:
                vals = spec.excess_angles(th, phi)
                for ph, v in zip(phi, vals):
                    w.writerow([repr(float(th)), repr(float(ph)), repr(float(v))])
        return path
    if kind == "excess-profile":
        if spec.scale != 1.0:
            raise ValueError("excess profiles need Omega = 1 on the polar caps")
        i, j = (cfg["params"].get("pairs") or [[cfg["params"].get("i", 1), cfg["params"].get("j", 2)]])[0]
        lo, hi = sorted((meridian_azimuth(int(i)), meridian_azimuth(int(j))))
        f = excess_field(spec, cfg["mesh_level"])
        keep = (f.phi >= lo) & (f.phi <= hi)
        path = out_dir / f"{name}-excess-profile.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "excess"])
            for ph, e in zip(f.phi[keep], f.equator_excess()[keep]):
                w.writerow([repr(float(ph)), repr(float(e))])
        return path
    if kind == "row-lengths":
        rows = report.get("result", {}).get("rows")
        if rows is None:
            raise ValueError(f"report of task {cfg['task']!r} has no homotopy rows")
        path = out_dir / f"{name}-row-lengths-plot.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "length_minus_pi", "error"])
            for r in rows:
                w.writerow([repr(r["s"]), repr(r["excess"]), repr(r["error"])])
        return path
    raise ValueError(f"unknown plot kind {kind!r}")


# scenarios --------------------------------------------------------------------------

def compare(checks: dict, expect: dict):
    """(exit code, per-key comparison) of task checks against declared expectations."""
    table = {}
    code = EXIT_OK
    for key, want in sorted(expect.items()):
        if key not in checks:
            raise ConfigError(f"task has no check named {key!r}; available: {sorted(checks)}")
        got = plain(checks[key])
        ok = got == plain(want)
        table[key] = {"expected": want, "actual": got, "ok": ok}
        if not ok:
            code = max(code, EXIT_INCONCLUSIVE if got == "inconclusive" else EXIT_CONTRADICTION)
    if checks.get("alarm") is True:
        code = EXIT_CONTRADICTION
    return code, table


def run(sc: Scenario, out_dir) -> tuple[int, dict]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    spec, params = build_factor(sc.factor)
    resolved = sc.resolved()
    result, checks, artifacts = TASK_RUNNERS[sc.task](sc, spec, params, out)
    code, table = compare(checks, sc.expect)
    if not sc.expect and any(v == "inconclusive" for v in checks.values()):
        code = EXIT_INCONCLUSIVE
    status = {EXIT_OK: "match", EXIT_INCONCLUSIVE: "inconclusive", EXIT_CONTRADICTION: "contradiction"}[code]
    report = {"version": __version__, "config": resolved, "config_hash": config_hash(resolved),
              "task": sc.task, "result": result, "checks": checks, "expectations": table,
              "status": status, "exit_code": code, "artifacts": sorted(artifacts)}
    report = plain(report)
    for kind in sc.plots.get("kinds", []):
        if kind not in PLOT_KINDS:
            raise ConfigError(f"unknown plot kind {kind!r}")
        report["artifacts"].append(emit_plot_data(report, kind, out).name)
    report["artifacts"].sort()
    (out / f"{sc.name}.json").write_text(canonical_json(report))
    return code, report

"""Batch driver for the spectral-curve toolkit.

Subcommands validate and build curves, compute pencils and invariants,
scan random moduli samples, run handle deformations and isoperiodic
flows, and probe plane strata; results are written as CSV or JSON that
downstream plotting and regression baselines can consume unchanged.
Scan and flow outputs also render a PNG figure next to the delimited
file so a run leaves something a human can look at.

Everything is deterministic given (inputs, seed, tolerances): sample
index ``i`` of a scan draws from ``SeedSequence(seed, spawn_key=(i,))``
no matter how many workers are used, and no output contains timestamps.

Exit codes: 0 success, 2 input/validation, 3 numerical resolution
failure, 4 internal invariant violation (always a bug).
"""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .curve import build_curve, curve_from_dict, curve_to_dict
from .errors import SpectralError, ValidationError
from .grassmann import (B_map, gr_classify, plane_from_dict, plane_to_dict,
                        probe_to_dict, stratum_dimension_probe)
from .invariants import GCD_TOL, classify
from .periods import QuadConfig, phi_map, rational_plane_distance, solve_Ba
from .polyring import CPoly
from .whitham import (FlowAbort, constant_Q_selector, flow,
                      handle_invariant_check, rotation_selector)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MAX_SCAN_GENUS = 4
ANNULUS = (0.05, 0.95)
MIN_SEPARATION = 0.05

__all__ = ["RunConfig", "main", "cmd_classify", "cmd_scan", "cmd_flow",
           "cmd_deform", "cmd_gr"]


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs; built once from the parsed flags."""

    command: str
    spec: str = None
    out: str = "-"
    fmt: str = None
    tol: float = None
    quad: QuadConfig = None
    seed: int = 0
    genus: int = None
    samples: int = 100
    workers: int = 1
    max_genus: int = MAX_SCAN_GENUS
    alpha_angle: float = 0.0
    t: float = 1e-2
    q: str = None
    dt: float = 1e-3
    steps: int = 100
    maxden: int = None


# ---------------------------------------------------------------------------
# small shared helpers
# ---------------------------------------------------------------------------

def _fmt(x):
    return "%.17g" % float(x)


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _write_json(path, data):
    _write_text(path, json.dumps(data, indent=2, sort_keys=False) + "\n")


def _figure_path(out):
    if out in (None, "-"):
        return None
    stem, _ = os.path.splitext(out)
    return stem + ".png"


def _load_curve(cfg):
    if not cfg.spec:
        raise ValidationError("missing --spec: a curve record file is needed")
    try:
        with open(cfg.spec) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError("cannot read --spec %s: %s" % (cfg.spec, exc))
    except ValueError as exc:
        raise ValidationError("--spec %s is not JSON: %s" % (cfg.spec, exc))
    curve = curve_from_dict(data)
    if cfg.tol is not None:
        curve = build_curve(curve.eta, tol=cfg.tol)
    return curve


def _pairs(values):
    return [[z.real, z.imag] for z in np.atleast_1d(np.asarray(values))]


def _report_dict(rep):
    return {
        "genus": rep.genus,
        "deg_f": rep.deg_f,
        "gcd_degree": rep.gcd_degree,
        "gcd_roots": _pairs(rep.gcd_roots) if len(rep.gcd_roots) else [],
        "winding_arg": rep.winding_arg,
        "winding_roots": rep.winding_roots,
        "stratum": rep.stratum,
        "v_index": rep.v_index,
        "lambda0": _pairs(rep.lambda0) if len(rep.lambda0) else [],
        "genus0_flags": list(rep.genus0_flags),
    }


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def cmd_classify(cfg):
    curve = _load_curve(cfg)
    quad = cfg.quad
    basis = solve_Ba(curve, quad=quad)
    rep = classify(curve, basis=basis, tol=cfg.tol or GCD_TOL, quad=quad)
    gap = float(basis.kernel_gap)
    data = {"schema_version": SCHEMA_VERSION,
            "curve": curve_to_dict(curve),
            "kernel_gap": gap if np.isfinite(gap) else None}
    data.update(_report_dict(rep))
    if cfg.maxden:
        angle = cfg.alpha_angle
        if angle is None:
            # farthest point on S^1 from every branch-cut crossing
            cuts = np.asarray(curve.cut_angles, dtype=float)
            if len(cuts):
                grid = np.linspace(-np.pi, np.pi, 720, endpoint=False)
                dist = np.min(np.abs(np.angle(
                    np.exp(1j * (grid[:, None] - cuts[None, :])))), axis=1)
                angle = float(grid[int(np.argmax(dist))])
            else:
                angle = np.pi
        lam0 = complex(np.exp(1j * angle))
        mat = phi_map(curve, basis, lam0, quad=quad)
        data["phi"] = [list(map(float, row)) for row in mat]
        data["rational_plane_angle"] = float(
            rational_plane_distance(mat, max_denominator=cfg.maxden))
        data["maxden"] = cfg.maxden
    if cfg.fmt == "csv":
        row = _scan_row_from_report(0, curve, rep, float(basis.kernel_gap))
        cols = _scan_columns(curve.genus)
        text = (_scan_header(curve.genus, "classify", cfg.seed, 1, cols)
                + ",".join(row[c] for c in cols) + "\n")
        _write_text(cfg.out, text)
    else:
        _write_json(cfg.out, data)
    return 0


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def _scan_columns(genus):
    cols = ["index", "genus"]
    for j in range(genus):
        cols += ["eta%d_re" % j, "eta%d_im" % j]
    cols += ["status", "deg_f", "winding_arg", "winding_roots",
             "gcd_degree", "stratum", "v_index", "kernel_gap"]
    return cols


def _scan_header(genus, kind, seed, samples, cols):
    return ("# spectral-%s v%d genus=%d seed=%d samples=%d\n"
            "# columns: %s\n" % (kind, SCHEMA_VERSION, genus, seed, samples,
                                 ",".join(cols))
            + ",".join(cols) + "\n")


def _sample_eta(genus, rng):
    """Uniform (by area) draw from the annulus with min-separation rejection."""
    lo2, hi2 = ANNULUS[0] ** 2, ANNULUS[1] ** 2
    eta = []
    for _ in range(genus):
        for _attempt in range(1000):
            r = float(np.sqrt(rng.uniform(lo2, hi2)))
            z = r * np.exp(2j * np.pi * rng.uniform())
            if all(abs(z - w) >= MIN_SEPARATION for w in eta):
                eta.append(complex(z))
                break
        else:  # pragma: no cover - astronomically unlikely at genus <= 4
            raise ValidationError("annulus too crowded at genus %d" % genus)
    return eta


def _scan_row_from_report(index, curve, rep, kernel_gap):
    row = {"index": str(index), "genus": str(curve.genus), "status": "ok",
           "deg_f": str(rep.deg_f), "winding_arg": str(rep.winding_arg),
           "winding_roots": str(rep.winding_roots),
           "gcd_degree": str(rep.gcd_degree), "stratum": rep.stratum,
           "v_index": "" if rep.v_index is None else str(rep.v_index),
           "kernel_gap": _fmt(kernel_gap)}
    for j, z in enumerate(curve.eta):
        row["eta%d_re" % j] = _fmt(z.real)
        row["eta%d_im" % j] = _fmt(z.imag)
    return row


def _scan_one(args):
    genus, seed, index, tol, nodes, qtol = args
    rng = np.random.default_rng(np.random.SeedSequence(seed,
                                                       spawn_key=(index,)))
    eta = _sample_eta(genus, rng)
    quad = QuadConfig(nodes=nodes, tol=qtol) if nodes else None
    row = {"index": str(index), "genus": str(genus)}
    for j, z in enumerate(eta):
        row["eta%d_re" % j] = _fmt(z.real)
        row["eta%d_im" % j] = _fmt(z.imag)
    try:
        curve = build_curve(eta, tol=tol) if tol else build_curve(eta)
        basis = solve_Ba(curve, quad=quad)
        rep = classify(curve, basis=basis, quad=quad)
    except SpectralError as exc:
        row.update({"status": "%s: %s" % (type(exc).__name__,
                                          str(exc).replace(",", ";")),
                    "deg_f": "", "winding_arg": "", "winding_roots": "",
                    "gcd_degree": "", "stratum": "", "v_index": "",
                    "kernel_gap": ""})
        return row
    full = _scan_row_from_report(index, curve, rep, float(basis.kernel_gap))
    full.update({k: row[k] for k in row if k.startswith("eta")})
    return full


def _render_scan_figure(path, genus, rows):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception as exc:  # pragma: no cover - headless safety net
        log.warning("figure skipped: %s", exc)
        return
    fig, ax = plt.subplots(figsize=(6, 6))
    th = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(th), np.sin(th), "k-", lw=1)
    for r in ANNULUS:
        ax.plot(r * np.cos(th), r * np.sin(th), "k:", lw=0.5)
    groups = {}
    for row in rows:
        key = row["stratum"] or "flagged"
        pts = groups.setdefault(key, [])
        for j in range(genus):
            pts.append((float(row["eta%d_re" % j]),
                        float(row["eta%d_im" % j])))
    for key in sorted(groups):
        pts = np.asarray(groups[key])
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=3, label=key)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("genus %d scan: root samples by stratum" % genus)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    log.info("wrote %s", path)


def cmd_scan(cfg):
    if cfg.genus is None:
        raise ValidationError("missing --genus for scan")
    if not 0 <= cfg.genus <= cfg.max_genus:
        raise ValidationError("scan genus %d outside 0..%d"
                              % (cfg.genus, cfg.max_genus))
    nodes = cfg.quad.nodes if cfg.quad else 0
    qtol = cfg.quad.tol if cfg.quad else 0.0
    jobs = [(cfg.genus, cfg.seed, i, cfg.tol, nodes, qtol)
            for i in range(cfg.samples)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_scan_one, jobs, chunksize=8))
    else:
        rows = [_scan_one(j) for j in jobs]

    cols = _scan_columns(cfg.genus)
    lines = [_scan_header(cfg.genus, "scan", cfg.seed, cfg.samples, cols)]
    occupancy = {}
    flagged = 0
    for row in rows:
        lines.append(",".join(row.get(c, "") for c in cols) + "\n")
        if row["status"] == "ok":
            occupancy[row["stratum"]] = occupancy.get(row["stratum"], 0) + 1
        else:
            flagged += 1
    summary = " ".join("%s=%d" % (k, occupancy[k]) for k in sorted(occupancy))
    lines.append("# summary %s flagged=%d\n" % (summary, flagged))

    if cfg.fmt == "json":
        _write_json(cfg.out, {"schema_version": SCHEMA_VERSION,
                              "genus": cfg.genus, "seed": cfg.seed,
                              "rows": rows,
                              "occupancy": occupancy, "flagged": flagged})
    else:
        _write_text(cfg.out, "".join(lines))
        fig = _figure_path(cfg.out)
        if fig:
            _render_scan_figure(fig, cfg.genus, rows)
    log.info("scan occupancy: %s flagged=%d", summary or "(none)", flagged)
    return 0


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------

def _parse_Q(text):
    if text is None:
        return None
    parts = [p.strip().replace("i", "j") for p in text.split(",")]
    try:
        coeffs = [complex(p) for p in parts if p]
    except ValueError as exc:
        raise ValidationError("cannot parse --q %r: %s" % (text, exc))
    if len(coeffs) > 3:
        raise ValidationError("--q takes at most three coefficients")
    if not any(abs(c) > 0 for c in coeffs):
        return None
    return CPoly(coeffs, degree=2)


def _flow_columns(genus):
    cols = ["step", "t"]
    for j in range(genus):
        cols += ["eta%d_re" % j, "eta%d_im" % j]
    for j in range(genus):
        cols += ["B1_%d_im" % j, "B2_%d_im" % j]
    for j in range(genus):
        cols += ["drift1_%d" % j, "drift2_%d" % j]
    cols.append("drift")
    return cols


def _flow_rows(records):
    base = records[0]
    rows = []
    for k, rec in enumerate(records):
        row = {"step": str(k), "t": _fmt(rec.t), "drift": _fmt(rec.drift)}
        for j, z in enumerate(rec.curve.eta):
            row["eta%d_re" % j] = _fmt(z.real)
            row["eta%d_im" % j] = _fmt(z.imag)
        for j in range(rec.curve.genus):
            row["B1_%d_im" % j] = _fmt(rec.periods_b1[j].imag)
            row["B2_%d_im" % j] = _fmt(rec.periods_b2[j].imag)
            row["drift1_%d" % j] = _fmt(abs(rec.periods_b1[j]
                                            - base.periods_b1[j]))
            row["drift2_%d" % j] = _fmt(abs(rec.periods_b2[j]
                                            - base.periods_b2[j]))
        rows.append(row)
    return rows


def _render_flow_figure(path, genus, rows):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception as exc:  # pragma: no cover - headless safety net
        log.warning("figure skipped: %s", exc)
        return
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 5))
    th = np.linspace(0, 2 * np.pi, 256)
    ax1.plot(np.cos(th), np.sin(th), "k-", lw=1)
    for j in range(genus):
        xs = [float(r["eta%d_re" % j]) for r in rows]
        ys = [float(r["eta%d_im" % j]) for r in rows]
        ax1.plot(xs, ys, "-", lw=1)
        ax1.plot(xs[:1], ys[:1], "o", ms=4, color=ax1.lines[-1].get_color())
    ax1.set_aspect("equal")
    ax1.set_title("root trajectories (dot = start)")
    ts = [float(r["t"]) for r in rows]
    for j in range(genus):
        for pre in ("drift1_%d", "drift2_%d"):
            ax2.semilogy(ts[1:], [max(float(r[pre % j]), 1e-17)
                                  for r in rows[1:]], lw=1,
                         label=(pre % j))
    ax2.set_xlabel("t")
    ax2.set_title("B-period drift")
    if genus:
        ax2.legend(fontsize=7)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    log.info("wrote %s", path)


def cmd_flow(cfg):
    curve = _load_curve(cfg)
    Q = _parse_Q(cfg.q)
    if Q is None:
        log.info("Q = 0: using the rotation direction")
        selector = rotation_selector
    else:
        selector = constant_Q_selector(Q)
    code = 0
    try:
        records = flow(curve, selector, cfg.dt, cfg.steps, quad=cfg.quad,
                       tol=cfg.tol)
    except FlowAbort as exc:
        log.error("%s", exc)
        print("flow aborted: %s" % exc, file=sys.stderr)
        records = exc.trajectory
        code = exc.exit_code
    if not records:
        return code or 3
    rows = _flow_rows(records)
    cols = _flow_columns(curve.genus)
    text = _scan_header(curve.genus, "flow", cfg.seed, len(rows), cols)
    for row in rows:
        text += ",".join(row.get(c, "") for c in cols) + "\n"
    _write_text(cfg.out, text)
    fig = _figure_path(cfg.out)
    if fig:
        _render_flow_figure(fig, curve.genus, rows)
    return code


# ---------------------------------------------------------------------------
# deform
# ---------------------------------------------------------------------------

def cmd_deform(cfg):
    curve = _load_curve(cfg)
    alpha = complex(np.exp(1j * cfg.alpha_angle))
    check = handle_invariant_check(curve, alpha, cfg.t,
                                   tol=cfg.tol or GCD_TOL, quad=cfg.quad)
    data = {
        "schema_version": SCHEMA_VERSION,
        "curve": curve_to_dict(curve),
        "alpha": [alpha.real, alpha.imag],
        "t": check.t,
        "deg_f_before": check.deg_f_before,
        "deg_f_after": check.deg_f_after,
        "winding_before": check.winding_before,
        "winding_after": check.winding_after,
        "sign_slope": check.sign_slope,
        "new_circle_critical_points": _pairs(check.new_circle_critical_points),
    }
    _write_json(cfg.out, data)
    return 0


# ---------------------------------------------------------------------------
# plane probe
# ---------------------------------------------------------------------------

def cmd_gr(cfg):
    if not cfg.spec:
        raise ValidationError("missing --spec: a plane or curve record file")
    try:
        with open(cfg.spec) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError("cannot read --spec %s: %s" % (cfg.spec, exc))
    except ValueError as exc:
        raise ValidationError("--spec %s is not JSON: %s" % (cfg.spec, exc))
    if "M" in data:
        plane = plane_from_dict(data)
    elif "eta" in data:
        curve = curve_from_dict(data)
        plane = B_map(curve, quad=cfg.quad)
    else:
        raise ValidationError(
            "record needs either an 'M' matrix (plane) or an 'eta' list "
            "(curve); got keys %s" % sorted(data))
    rep = gr_classify(plane, tol=cfg.tol or GCD_TOL)
    out = {"schema_version": SCHEMA_VERSION,
           "plane": plane_to_dict(plane),
           "classify": {"gcd_degree": rep["gcd_degree"],
                        "in_R": rep["in_R"],
                        "S1_roots": _pairs(rep["S1_roots"])
                        if rep["S1_roots"] else []}}
    if rep["gcd_degree"] > 0 and plane.genus > 0:
        probe = stratum_dimension_probe(plane, tol=cfg.tol or GCD_TOL,
                                        seed=cfg.seed or 11)
        out["probe"] = probe_to_dict(probe)
    else:
        out["probe"] = None
    _write_json(cfg.out, out)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", metavar="PATH",
                        help="output file ('-' for stdout)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"),
                        default=None, help="output format where applicable")
    common.add_argument("--tol", type=float, default=None,
                        help="tolerance override")
    common.add_argument("--quad-nodes", type=int, default=None,
                        help="starting quadrature node count")
    common.add_argument("--quad-tol", type=float, default=None,
                        help="quadrature doubling tolerance")
    common.add_argument("--seed", type=int, default=0, help="RNG seed")

    ap = argparse.ArgumentParser(
        prog="spectral",
        description="spectral curve pencils, invariants, deformations")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common],
                       help="invariant report for one curve")
    p.add_argument("--spec", required=True, metavar="PATH")
    p.add_argument("--maxden", type=int, default=None,
                   help="also report rational-plane proximity up to this "
                        "denominator bound")
    p.add_argument("--alpha-angle", type=float, default=None,
                   help="unit-circle marker angle for the proximity report "
                        "(default: farthest from the branch cuts)")

    p = sub.add_parser("scan", parents=[common],
                       help="random moduli scan at fixed genus")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("flow", parents=[common],
                       help="isoperiodic RK4 flow")
    p.add_argument("--spec", required=True, metavar="PATH")
    p.add_argument("--q", default=None, metavar="c0,c1,c2",
                   help="constant direction polynomial (omit or zeros for "
                        "the rotation direction)")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=100)

    p = sub.add_parser("deform", parents=[common],
                       help="handle attachment with invariant checks")
    p.add_argument("--spec", required=True, metavar="PATH")
    p.add_argument("--alpha-angle", type=float, required=True,
                   help="angle of the attachment point on the unit circle")
    p.add_argument("--t", type=float, default=1e-2,
                   help="smoothing parameter (halved on retry)")

    p = sub.add_parser("gr", parents=[common],
                       help="classify a plane and probe its stratum")
    p.add_argument("--spec", required=True, metavar="PATH",
                   help="plane record {genus, M} or curve record {eta}")
    return ap


def _config_from_args(args):
    quad = None
    if args.quad_nodes is not None or args.quad_tol is not None:
        quad = QuadConfig(nodes=args.quad_nodes or QuadConfig.nodes,
                          tol=args.quad_tol or QuadConfig.tol)
    fields = {k: v for k, v in vars(args).items()
              if k in RunConfig.__dataclass_fields__}
    fields["quad"] = quad
    return RunConfig(**fields)


_COMMANDS = {"classify": cmd_classify, "scan": cmd_scan, "flow": cmd_flow,
             "deform": cmd_deform, "gr": cmd_gr}


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("SPECTRAL_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    try:
        return _COMMANDS[cfg.command](cfg)
    except SpectralError as exc:
        log.debug("traceback", exc_info=True)
        print("%s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""The ``fkd`` command line harness.

Subcommands:

- ``constants``  dimensional constants for one N (aligned text + JSON)
- ``qseq``       the Q_k sequence as CSV with difference diagnostics
- ``converge``   deficit-ratio convergence experiment from a JSON config
- ``validate``   the cross-module invariant suite

Exit codes: 0 success, 1 check failure, 2 usage error.  CSV output is
deterministic: fixed column order, 12 significant digits, ``\\n`` endings.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bessel import HalfIntOrder, bessel_ratio_cf, first_zero
from .constants import (
    KNOWN_FIRST_ZEROS,
    dimension_params,
    faber_krahn_constant,
    finale_criterion,
    q_value,
)
from .eigensolver import (
    DEFAULT_GRID_LADDER,
    PolarGrid,
    eigen_deficit,
    richardson_extrapolate,
    solve_dirichlet_eig,
)
from .perturbation import (
    HarmonicProfile,
    analytic_deficits,
    geometry_exact,
    normalize_volume,
    poisson_residual,
    profile_from_json,
    profile_to_json,
    v_field,
)

NUMERIC_SOURCE = "quadrature+eigensolver"


def fmt(x: float) -> str:
    """12 significant digits, scientific, locale-independent."""
    return f"{x:.11e}"


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def cmd_constants(args) -> int:
    try:
        p = dimension_params(args.dim)
        c_n = faber_krahn_constant(args.dim)
    except ValueError as exc:
        args._parser.error(str(exc))
    fields = [
        ("N", str(p.dim)),
        ("z_N", fmt(p.z_N)),
        ("omega_N", fmt(p.omega_N)),
        ("lambda_0", fmt(p.lambda_ball)),
        ("G_N", fmt(p.G_N)),
        ("C_N", fmt(c_n)),
    ]
    for name, val in fields:
        print(f"{name:<9}: {val}")
    print(json.dumps({
        "N": p.dim, "z_N": p.z_N, "omega_N": p.omega_N,
        "lambda_0": p.lambda_ball, "G_N": p.G_N, "C_N": c_n,
    }, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# qseq
# ---------------------------------------------------------------------------

def cmd_qseq(args) -> int:
    dim, kmax = args.dim, args.kmax
    ks = list(range(2, kmax + 1))
    try:
        qs = [q_value(dim, k) for k in ks]
        c_n = faber_krahn_constant(dim)
        fin = finale_criterion(dim)
    except ValueError as exc:
        args._parser.error(str(exc))
    lines = ["k,Q_k,first_diff,second_diff"]
    worst_first = math.inf
    for i, k in enumerate(ks):
        first = fmt(qs[i + 1] - qs[i]) if i + 1 < len(qs) else ""
        second = (
            fmt(qs[i + 1] - 2.0 * qs[i] + qs[i - 1])
            if 0 < i < len(qs) - 1 else ""
        )
        if i + 1 < len(qs):
            worst_first = min(worst_first, qs[i + 1] - qs[i])
        lines.append(f"{k},{fmt(qs[i])},{first},{second}")
    lines.append(f"C_N,{fmt(c_n)},finale_criterion,{fmt(fin)}")
    text = "\n".join(lines) + "\n"
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    if args.plot_dir:
        from .report import save_qseq_figure
        plot_dir = Path(args.plot_dir)
        plot_dir.mkdir(parents=True, exist_ok=True)
        out = save_qseq_figure(plot_dir / f"qseq_dim{dim}.png", dim, ks, qs, c_n)
        print(f"figure written: {out}", file=sys.stderr)
    if worst_first < -1e-12:
        print(f"monotonicity violated: min first_diff = {worst_first:.3e}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    dimension: int
    profile: HarmonicProfile
    t_values: tuple
    grids: tuple
    mode: str
    output: str | None
    summary: str | None
    plot_dir: str | None


def parse_run_config(obj, parser: argparse.ArgumentParser | None = None) -> RunConfig:
    def bail(msg):
        if parser is not None:
            parser.error(msg)  # exits 2
        raise ValueError(msg)

    try:
        profile = profile_from_json(obj["profile"])
    except (KeyError, ValueError) as exc:
        bail(f"bad profile in config: {exc}")
    dim = int(obj.get("dimension", profile.dim))
    if dim != profile.dim:
        bail(f"config dimension {dim} does not match profile dim {profile.dim}")
    ladder = obj.get("t_ladder", {})
    try:
        t_max = float(ladder["t_max"])
        factor = float(ladder.get("factor", 0.5))
        count = int(ladder.get("count", 3))
    except (KeyError, TypeError, ValueError) as exc:
        bail(f"bad t_ladder in config: {exc}")
    if not 0.0 < factor < 1.0:
        bail("t_ladder factor must lie in (0, 1)")
    if count < 3:
        bail("t_ladder count must be >= 3 (the c0 fit needs three points)")
    t_values = tuple(t_max * factor**i for i in range(count))
    vmax = profile.max_abs_velocity()
    if t_max * vmax > 0.5:
        bail(f"t_max * max|V| = {t_max * vmax:.3f} violates the star-shape guard 0.5")
    grids = tuple(tuple(g) for g in obj.get("grid_ladder", DEFAULT_GRID_LADDER))
    if len(grids) < 3:
        bail("grid_ladder needs >= 3 levels for extrapolation")
    mode = obj.get("mode", "analytic")
    if mode not in ("analytic", "numeric", "both"):
        bail(f"unknown mode {mode!r}")
    return RunConfig(dim, profile, t_values, grids, mode,
                     obj.get("output"), obj.get("summary"), obj.get("plot_dir"))


def run_convergence(cfg: RunConfig, sink=None):
    """Emit one ConvergenceRow per t (sorted by decreasing t) and fit c0 + c1 t.

    Returns (rows, summary) where rows are dicts; ``sink`` receives each CSV
    line as soon as the row is computed (partial output survives failures).
    """
    def emit(line):
        if sink is not None:
            sink(line)

    emit("t,delta_P,delta_lambda,ratio,source")
    rows = []
    eig_diag = []
    for t in sorted(cfg.t_values, reverse=True):
        per_t = []
        if cfg.mode in ("analytic", "both"):
            pair = analytic_deficits(cfg.profile, t)
            per_t.append({"t": t, "delta_P": pair.delta_P,
                          "delta_lambda": pair.delta_lambda,
                          "ratio": pair.ratio, "source": "analytic"})
        if cfg.mode in ("numeric", "both"):
            ball = normalize_volume(cfg.profile, t)
            _, _, delta_p = geometry_exact(ball)
            ed = eigen_deficit(cfg.profile, t, cfg.grids)
            eig_diag.append({"t": t, "lambda_star": ed.lambda_star, "order": ed.order})
            per_t.append({"t": t, "delta_P": delta_p,
                          "delta_lambda": ed.delta_lambda,
                          "ratio": delta_p / ed.delta_lambda,
                          "source": NUMERIC_SOURCE})
        for row in sorted(per_t, key=lambda r: r["source"]):
            rows.append(row)
            emit(f"{fmt(row['t'])},{fmt(row['delta_P'])},{fmt(row['delta_lambda'])},"
                 f"{fmt(row['ratio'])},{row['source']}")

    fit_source = "analytic" if cfg.mode == "analytic" else NUMERIC_SOURCE
    fit_rows = sorted((r for r in rows if r["source"] == fit_source), key=lambda r: r["t"])[:3]
    ts = np.array([r["t"] for r in fit_rows])
    ratios = np.array([r["ratio"] for r in fit_rows])
    design = np.vstack([np.ones_like(ts), ts]).T
    (c0, c1), *_ = np.linalg.lstsq(design, ratios, rcond=None)
    lowest = min((k for k in cfg.profile.degree_energies() if k >= 2), default=None)
    c_n = faber_krahn_constant(cfg.dimension)
    q_low = q_value(cfg.dimension, lowest) if lowest is not None else math.nan
    summary = {
        "dimension": cfg.dimension,
        "mode": cfg.mode,
        "profile": profile_to_json(cfg.profile),
        "t_values": sorted(cfg.t_values, reverse=True),
        "fit_source": fit_source,
        "fit_t_values": list(ts),
        "c0": float(c0),
        "c1": float(c1),
        "lowest_degree": lowest,
        "q_lowest_degree": q_low,
        "c_N": c_n,
        "gap_to_q": float(c0) - q_low,
        "gap_to_c_N": float(c0) - c_n,
        "eigensolver": eig_diag,
    }
    return rows, summary


def cmd_converge(args) -> int:
    parser = args._parser
    try:
        cfg_obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if args.mode:
        cfg_obj["mode"] = args.mode
    if args.csv:
        cfg_obj["output"] = args.csv
    if args.summary:
        cfg_obj["summary"] = args.summary
    if args.plot_dir:
        cfg_obj["plot_dir"] = args.plot_dir
    cfg = parse_run_config(cfg_obj, parser)
    if cfg.mode in ("numeric", "both") and cfg.dimension != 2:
        parser.error("numeric mode requires dimension 2")

    if cfg.output:
        out_path = Path(cfg.output)
        handle = out_path.open("w", encoding="utf-8", newline="\n")
    else:
        handle = sys.stdout

    def sink(line):
        handle.write(line + "\n")
        handle.flush()

    try:
        rows, summary = run_convergence(cfg, sink)
    finally:
        if cfg.output:
            handle.close()

    summary_text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if cfg.summary:
        Path(cfg.summary).write_text(summary_text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(summary_text)
    if cfg.plot_dir:
        from .report import save_converge_figure
        plot_dir = Path(cfg.plot_dir)
        plot_dir.mkdir(parents=True, exist_ok=True)
        ref_label = (
            rf"$Q_{{{summary['lowest_degree']}}}$" if summary["lowest_degree"] is not None else "C_N"
        )
        out = save_converge_figure(
            plot_dir / f"converge_dim{cfg.dimension}_{cfg.mode}.png",
            cfg.dimension,
            [(r["t"], r["ratio"], r["source"]) for r in rows],
            summary["c0"],
            summary["q_lowest_degree"],
            ref_label,
        )
        print(f"figure written: {out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _check(name, measured, tolerance, passed, detail=None):
    rec = {"check": name, "measured": measured, "tolerance": tolerance,
           "passed": bool(passed)}
    if detail:
        rec["detail"] = detail
    return rec


def run_validation(quick: bool = False) -> list:
    checks = []

    # reference zero table
    worst = max(abs(first_zero(HalfIntOrder.from_dimension(n)) - v)
                for n, v in KNOWN_FIRST_ZEROS.items())
    checks.append(_check("zero_table", worst, 1e-6, worst <= 1e-6,
                         f"{len(KNOWN_FIRST_ZEROS)} tabulated rows"))

    # C_N equals Q_2 through the continued fraction
    worst = max(abs(faber_krahn_constant(n) - q_value(n, 2)) / faber_krahn_constant(n)
                for n in range(2, 101))
    checks.append(_check("constant_consistency", worst, 1e-10, worst <= 1e-10,
                         "N = 2..100"))

    # reduced closed form at N = 2
    p2 = dimension_params(2)
    reduced = 3.0 / (2.0 * (p2.z_N**2 - 2.0))
    rel = abs(faber_krahn_constant(2) - reduced) / reduced
    checks.append(_check("reduced_closed_form", rel, 1e-10, rel <= 1e-10))

    # Q_k monotone, Bessel-ratio sequence convex
    worst_mono = math.inf
    worst_conv = math.inf
    for n in range(2, 13):
        qs = [q_value(n, k) for k in range(2, 52)]
        worst_mono = min(worst_mono, min(b - a for a, b in zip(qs, qs[1:])))
        z = dimension_params(n).z_N
        rhos = [bessel_ratio_cf(HalfIntOrder.for_mode(n, k), z) for k in range(2, 52)]
        worst_conv = min(worst_conv,
                         min(rhos[i + 1] - 2 * rhos[i] + rhos[i - 1]
                             for i in range(1, len(rhos) - 1)))
    checks.append(_check("q_monotonicity", -min(worst_mono, 0.0), 1e-12,
                         worst_mono >= -1e-12, "N = 2..12, k <= 51"))
    checks.append(_check("ratio_convexity", -min(worst_conv, 0.0), 1e-12,
                         worst_conv >= -1e-12, "N = 2..12, k <= 51"))

    # polynomial criterion
    worst = min(finale_criterion(n) for n in range(2, 201))
    checks.append(_check("finale_positive", worst, 0.0, worst > 0.0, "N = 2..200"))
    mismatches = sum(
        1 for n in range(2, 51)
        if (finale_criterion(n) > 0) != (q_value(n, 3) > q_value(n, 2))
    )
    checks.append(_check("finale_sign", mismatches, 0, mismatches == 0, "N = 2..50"))

    # Poisson-system residual of the shape-derivative field
    worst = 0.0
    grid = np.linspace(0.05, 1.0, 400)
    for dim in (2, 3):
        phase = "cos" if dim == 2 else "zonal"
        for spec_modes in ([(2, 1.0)], [(3, 1.0)], [(2, 1.0), (4, 0.5)]):
            prof = HarmonicProfile.from_modes(dim, [(k, a, phase) for k, a in spec_modes])
            res = poisson_residual(prof, grid)
            span = 2.0 * math.pi if dim == 2 else math.pi
            xi = np.linspace(0.0, span, 96, endpoint=(dim == 3))
            vmax = float(np.max(np.abs(v_field(prof, grid[:, None], xi[None, :]))))
            worst = max(worst, res / vmax)
    checks.append(_check("poisson_residual", worst, 1e-6, worst <= 1e-6,
                         "profiles Y2, Y3, Y2+0.5*Y4 at N = 2, 3"))

    if not quick:
        samples = []
        for n_r, n_t in ((64, 128), (128, 256), (256, 512)):
            res = solve_dirichlet_eig(lambda th: np.ones_like(th), PolarGrid(n_r, n_t))
            samples.append((1.0 / n_r, res.lambda_h))
        lam_star, order = richardson_extrapolate(samples)
        rel = abs(lam_star - p2.lambda_ball) / p2.lambda_ball
        checks.append(_check("disk_eigenvalue", rel, 1e-4,
                             rel <= 1e-4 and 1.8 <= order <= 2.2,
                             f"observed order {order:.3f}"))
    return checks


def cmd_validate(args) -> int:
    checks = run_validation(quick=args.quick)
    ok = all(c["passed"] for c in checks)
    print(json.dumps({"passed": ok, "checks": checks}, indent=2, sort_keys=True))
    if not ok:
        failed = [c["check"] for c in checks if not c["passed"]]
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser plumbing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fkd",
        description="Optimal constant of the sharp quantitative Faber-Krahn inequality",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_const = sub.add_parser("constants", help="dimensional constants for one N")
    p_const.add_argument("--dim", type=int, required=True)
    p_const.set_defaults(func=cmd_constants)

    p_qseq = sub.add_parser("qseq", help="Q_k sequence as CSV")
    p_qseq.add_argument("--dim", type=int, required=True)
    p_qseq.add_argument("--kmax", type=int, required=True)
    p_qseq.add_argument("--csv", help="write CSV here instead of stdout")
    p_qseq.add_argument("--plot-dir", help="render a figure alongside the CSV")
    p_qseq.set_defaults(func=cmd_qseq)

    p_conv = sub.add_parser("converge", help="deficit-ratio convergence experiment")
    p_conv.add_argument("--config", required=True, help="JSON RunConfig path")
    p_conv.add_argument("--mode", choices=("analytic", "numeric", "both"))
    p_conv.add_argument("--csv", help="override the config output path")
    p_conv.add_argument("--summary", help="write the summary JSON here")
    p_conv.add_argument("--plot-dir", help="render a figure alongside the CSV")
    p_conv.set_defaults(func=cmd_converge)

    p_val = sub.add_parser("validate", help="cross-module invariant suite")
    p_val.add_argument("--quick", action="store_true",
                       help="skip the eigensolver checks")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("constants", "qseq") and args.dim < 2:
        parser.error("--dim must be >= 2")
    if args.command == "qseq" and args.kmax < 2:
        parser.error("--kmax must be >= 2")
    args._parser = parser
    return args.func(args)


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

"""Command-line entry point: ``dsblowup <subcommand> ...``.

Exit status is 0 on success, 1 on invalid input (bad flags, missing or
malformed configuration, out-of-domain parameters) and 2 when a run fails
at runtime.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .. import model, odelab, special
from ..discretization import RadialGrid
from ..solver import evolve_until_blowup
from . import io
from .config import RunConfig, SweepConfig, load_json
from .sweep import fit_power_law, is_monotone_lifespan, run_sweep

log = logging.getLogger("dsblowup")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_exponents(args) -> int:
    n, p = args.n, args.p
    pc, pg = model.strauss_exponent(n), model.glassey_exponent(n)
    print(f"n={n} p={p:.17g}")
    print(f"p_c={pc:.17g}")
    print(f"p'_c={pg:.17g}")
    try:
        gs = f"{model.lifespan_exponent_strauss(n, p):.17g}"
    except ValueError:
        gs = "undefined (p outside (1, p_c))"
    print(f"lifespan_exponent_strauss={gs}")
    print(f"lifespan_exponent_glassey={model.lifespan_exponent_glassey(p):.17g}")
    for kind in (model.Kind.POWER_U, model.Kind.POWER_GRAD):
        c = model.derived_constants(model.ModelParams(n, args.H, p, kind))
        ok = model.kato_condition(c.a1, c.b1, p)
        print(f"kato_condition[{kind.value}]={str(ok).lower()} a1={c.a1:.17g} b1={c.b1:.17g}")
    return 0


def cmd_testfn_check(args) -> int:
    ctx = special.TestFunctionContext(args.n)
    r = np.geomspace(0.01, args.r_max, 400)
    approx = special.phi1(r, ctx)
    line = f"phi1 on [0.01, {args.r_max:g}] with n={args.n}"
    worst = math.nan
    if args.n == 3:
        exact = 4 * np.pi * np.sinh(r) / r
        worst = float(np.max(np.abs(approx / exact - 1)))
        line += f": max relative error vs 4 pi sinh(r)/r = {worst:.3e}"
    print(line)
    res = []
    for h in (args.h, args.h / 2):
        grid = np.arange(1.0, 5.0 + h / 2, h)
        res.append(special.verify_eigenfunction(grid, ctx).residual)
    print(f"eigenfunction residual h={args.h:g}: {res[0]:.3e}, h/2: {res[1]:.3e}, ratio {res[0] / res[1]:.3f}")
    if args.p is not None:
        ctx_p = special.TestFunctionContext(args.n, p=args.p)
        e = special.lemma23_bound_exponent(args.n, args.p)
        ratios = [special.lemma23_integral(t, ctx_p) / (1 + t) ** e for t in np.linspace(0, 50, 11)]
        print(f"lemma23 ratio max over t in [0, 50]: {max(ratios):.6g}")
    ok = (math.isnan(worst) or worst < 1e-10) and 3.5 <= res[0] / res[1] <= 4.5
    return 0 if ok else 2


def cmd_simulate(args) -> int:
    cfg = RunConfig.from_dict(load_json(args.config))
    grid = RadialGrid.for_horizon(cfg.controls.T_max, cfg.m, H=cfg.model.H)
    rep = evolve_until_blowup(cfg.model, cfg.data, grid, cfg.controls)
    print(f"status={rep.status.value} T_est={io.fmt(rep.T_est)} peak_sup={io.fmt(rep.peak_sup)} "
          f"t_final={io.fmt(rep.t_final)} steps={rep.steps} support_leak={rep.support_leak:.3e}")
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        io.write_text(out / io.series_filename(cfg.data.eps), io.series_csv(rep.series, cfg.model))
        io.write_text(out / "config.json", io.dump_json(cfg.to_dict()) + "\n")
    return 2 if rep.status.value == "NumericalFailure" else 0


def sweep_report(cfg: SweepConfig, result, fit, theory) -> str:
    pts = result.lifespan_points()
    lines = [f"sweep n={cfg.model.n} H={cfg.model.H:g} p={cfg.model.p:g} kind={cfg.model.kind.value}"]
    lines += [f"warning: {w}" for w in cfg.warnings]
    for r in result.records:
        lines.append(f"eps={r.epsilon:g} m={r.m} status={r.status} T_est={io.fmt(r.T_est)} "
                     f"T_err={io.fmt(r.T_err)}")
    lines.append(f"blown-up amplitudes on the finest grid: {len(pts)} of {len(cfg.epsilons)}")
    lines.append(f"lifespan monotone in eps: {str(is_monotone_lifespan(pts)).lower()}")
    lines.append(f"support leak: {result.support_leak:.3e}")
    if fit is None:
        lines.append("power-law fit: skipped (fewer than 3 blown-up amplitudes)")
    else:
        lines.append(f"fitted slope {fit.slope:.6g} (r^2 {fit.r_squared:.6f}); "
                     f"theoretical upper-bound slope {-theory:.6g}; gap {fit.slope + theory:.6g}")
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    raw = load_json(args.config)
    cfg = SweepConfig.from_dict(raw)
    out = args.output or cfg.output_dir
    result = run_sweep(cfg, workers=args.workers)
    pts = result.lifespan_points()
    fit = fit_power_law(pts) if len(pts) >= 3 else None
    try:
        theory = model.theoretical_lifespan_exponent(cfg.model)
    except ValueError:
        theory = math.nan
    try:
        window = cfg.window()
    except ValueError:
        window = (math.nan, 1.0)
    report = sweep_report(cfg, result, fit, theory)
    io.write_outputs(result.records, fit, out, series=result.series, params=cfg.model,
                     theoretical=theory, window=window, config=cfg.to_dict(), report=report)
    sys.stdout.write(report)
    if all(r.status == "NumericalFailure" for r in result.records):
        return 2
    return 0


def cmd_ode_lab(args) -> int:
    prob = odelab.KatoProblem(A=args.A, b1=args.b1, R=args.R, p=args.p, G0=args.G0, G0p=args.G0p)
    res = odelab.integrate_kato_ode(prob, T_max=args.T_max, G_max=args.G_max)
    print(f"status={res.status.value} T_star={io.fmt(res.T_star)} steps={res.steps} "
          f"G_final={io.fmt(float(res.G[-1]))} impulse={io.fmt(res.impulse())}")
    if args.eps is not None:
        if args.a1 is None:
            raise UsageError("--eps requires --a1")
        resc = odelab.rescale_problem(args.eps, args.a1, prob)
        r2 = odelab.integrate_kato_ode(resc.problem, T_max=args.T_max, G_max=args.G_max)
        print(f"rescaled eps={args.eps:g}: status={r2.status.value} T_star={io.fmt(r2.T_star)} "
              f"original-time T_star={io.fmt(float(resc.to_original_time(r2.T_star)))} "
              f"comparison horizon={io.fmt(resc.comparison_horizon())}")
    return 2 if res.status is odelab.OdeStatus.FAILED else 0


def cmd_region_map(args) -> int:
    ps, bs = args.p_values, args.b1_values
    if not ps or not bs:
        raise UsageError("--p-values and --b1-values must be non-empty")
    cells = odelab.blowup_region_map(ps, bs, A=args.A, R=args.R, G0=args.G0, G0p=args.G0p,
                                     T_max=args.T_max, workers=args.workers)
    text = io.region_csv(cells, args.A, args.R, args.G0, args.G0p)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        io.write_text(out / "region_map.csv", text)
    else:
        sys.stdout.write(text)
    blown = sum(c.status == "BlewUp" for c in cells)
    log.info("%d of %d cells blew up", blown, len(cells))
    return 2 if all(c.status == "Failure" for c in cells) else 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dsblowup", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("exponents", help="critical and lifespan exponents")
    s.add_argument("n", type=int)
    s.add_argument("p", type=float)
    s.add_argument("--H", type=float, default=1.0, help="expansion rate for the Kato constants")
    s.set_defaults(func=cmd_exponents)

    s = sub.add_parser("testfn-check", help="quadrature and eigenfunction checks")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--p", type=float)
    s.add_argument("--r-max", type=float, default=100.0)
    s.add_argument("--h", type=float, default=0.02)
    s.set_defaults(func=cmd_testfn_check)

    s = sub.add_parser("simulate", help="one PDE evolution from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--output")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="amplitude sweep with power-law fit")
    s.add_argument("--config", required=True)
    s.add_argument("--output", help="overrides output_dir from the config")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("ode-lab", help="integrate the Kato comparison ODE")
    for name, default in (("A", 1.0), ("b1", 0.0), ("R", 0.0), ("p", 2.0), ("G0", 1.0),
                          ("G0p", 1.0), ("T-max", 1e3), ("G-max", 1e12)):
        s.add_argument(f"--{name}", type=float, default=default)
    s.add_argument("--eps", type=float, help="also integrate the rescaled problem")
    s.add_argument("--a1", type=float)
    s.set_defaults(func=cmd_ode_lab)

    s = sub.add_parser("region-map", help="blow-up/survival map over (p, b1)")
    s.add_argument("--p-values", type=_floats, required=True)
    s.add_argument("--b1-values", type=_floats, required=True)
    for name, default in (("A", 1.0), ("R", 0.0), ("G0", 1.0), ("G0p", 1.0), ("T-max", 1e3)):
        s.add_argument(f"--{name}", type=float, default=default)
    s.add_argument("--workers", type=int)
    s.add_argument("--output")
    s.set_defaults(func=cmd_region_map)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError, TypeError) as exc:
        print(f"dsblowup: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        print(f"dsblowup: runtime failure: {exc!r}", file=sys.stderr)
        return 2

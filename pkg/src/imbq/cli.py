"""Batch front door: config parsing, experiment orchestration, file emission.

Commands
--------
solve             Picard-solve one Cauchy problem, export trajectory CSV + JSON.
inflate           Inflation-ratio sweep over N, CSV + JSON slope summary.
lemma-check       Multiplier certification: seminorms, kernel sweep, H^s corpus.
dispersion        Fitted mode frequencies against the linear relation.
derivative-check  Solver-vs-derivative cross validation at small amplitude.

Flags: --config <path> (JSON, flags override file), --out <dir>, --jobs <n>,
--plot.  Exit codes: 0 success, 2 config error, 3 numerical non-convergence.

The runner performs no mathematics itself: every number in its outputs is
produced by one library operation, named in the JSON provenance fields.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import inflation, reports, solver, svgplot, symbols
from .grid import lambda_symbol, make_grid, random_real_field, sobolev_norm
from .inflation import QuadratureConfig, QuadratureError, WrapError
from .solver import ConvergenceError, SolverConfig
from .symbols import BesovConvergenceError, Symbol

__all__ = ["RunConfig", "ConfigError", "parse_config", "run", "emit_plot", "main", "console_main"]

COMMANDS = ("solve", "inflate", "lemma-check", "dispersion", "derivative-check")


class ConfigError(ValueError):
    """Invalid or incomplete run configuration (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    out: str
    jobs: int
    seed: int
    plot: bool
    params: dict


# ----------------------------------------------------------------------
# schemas: field -> (default or REQUIRED, validator)

REQUIRED = object()


def _typed(kind, cond=None, desc=""):
    def check(v):
        if kind is float and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if not isinstance(v, kind) or isinstance(v, bool) and kind is not bool:
            raise ConfigError(f"expected {getattr(kind, '__name__', kind)}{desc}, got {v!r}")
        if cond is not None and not cond(v):
            raise ConfigError(f"value {v!r} out of range{desc}")
        return v

    return check


def _number_list(cond=None):
    def check(v):
        if not isinstance(v, list) or not v:
            raise ConfigError(f"expected a non-empty list, got {v!r}")
        out = [float(x) for x in v]
        if cond is not None and not all(cond(x) for x in out):
            raise ConfigError(f"list values out of range: {v!r}")
        return out

    return check


def _int_ge(lo):
    return _typed(int, lambda v: v >= lo, f" (>= {lo})")


def _pos_float():
    return _typed(float, lambda v: v > 0, " (> 0)")


def _nullable(check):
    return lambda v: None if v is None else check(v)


_P_FIELD = (REQUIRED, _typed(int, lambda v: v >= 2, " (the power p must be an integer >= 2)"))

DATA_SCHEMAS = {
    "gaussian": {
        "amplitude": (0.2, _pos_float()),
        "width": (1.0, _pos_float()),
        "velocity_amplitude": (0.0, _typed(float)),
    },
    "cosine": {"k": (1.0, _pos_float()), "amplitude": (1.0, _pos_float())},
    "boxes": {"N": (8, _int_ge(1)), "scale": (1.0, _pos_float())},
}

SCHEMAS = {
    "solve": {
        "p": _P_FIELD,
        "sign": (1, _typed(int, lambda v: v in (1, -1), " (+1 or -1)")),
        "T": (REQUIRED, _pos_float()),
        "s": (0.0, _typed(float, lambda v: v >= 0, " (>= 0)")),
        "extent": (16.0, _pos_float()),
        "nodes": (512, _int_ge(8)),
        "data": ({"kind": "gaussian"}, None),
        "picard_tol": (1e-12, _pos_float()),
        "max_iterations": (50, _int_ge(1)),
        "quadrature_nodes": (33, _int_ge(5)),
        "window_safety": (0.1, _pos_float()),
        "window": (None, _nullable(_pos_float())),
        "max_window_halvings": (5, _int_ge(0)),
        "sample_times": (None, _nullable(_number_list(lambda v: v >= 0))),
    },
    "inflate": {
        "p": _P_FIELD,
        "s": (REQUIRED, _typed(float)),
        "t": (REQUIRED, _pos_float()),
        "N": (REQUIRED, _number_list(lambda v: v >= 1 and v == int(v))),
        "sign": (1, _typed(int, lambda v: v in (1, -1), " (+1 or -1)")),
        "tau_nodes": (65, _int_ge(5)),
        "dxi": (1.0 / 64.0, _pos_float()),
        "pad_factor": (None, _nullable(_pos_float())),
        "slope_tol": (0.2, _pos_float()),
    },
    "lemma-check": {
        "t_values": ([0.5, 1.0, 2.0, 4.0], _number_list(lambda v: v > 0)),
        "resolution": (160, _int_ge(10)),
        "corpus_size": (100, _int_ge(1)),
        "corpus_extent": (16.0, _pos_float()),
        "corpus_nodes": (256, _int_ge(8)),
        "kernel_offsets": ([-100, -30, -10, -3, -1, 0, 1, 3, 10, 30, 100], _number_list()),
    },
    "dispersion": {
        "k": ([1.0, 10.0, 100.0], _number_list(lambda v: v > 0)),
        "T": (20.0, _pos_float()),
        "dt": (2e-3, _pos_float()),
    },
    "derivative-check": {
        "p": (2, _typed(int, lambda v: v >= 2, " (the power p must be an integer >= 2)")),
        "N": (8, _int_ge(1)),
        "t": (0.3, _pos_float()),
        "eps": (1e-3, _pos_float()),
        "tau_nodes": (65, _int_ge(5)),
        "dxi": (1.0 / 64.0, _pos_float()),
    },
}

TOP_LEVEL_KEYS = {"command", "out", "jobs", "seed", "plot"} | set(SCHEMAS)


def _validate_block(command: str, block: dict) -> dict:
    schema = SCHEMAS[command]
    unknown = set(block) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{command}' block: {', '.join(sorted(unknown))}")
    out = {}
    for key, (default, check) in schema.items():
        if key in block:
            value = block[key]
            out[key] = check(value) if check is not None else value
        elif default is REQUIRED:
            raise ConfigError(f"'{command}' block is missing required key '{key}'")
        else:
            out[key] = default
    if command == "solve":
        out["data"] = _validate_data(out["data"])
    return out


def _validate_data(block) -> dict:
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("solve data block must be an object with a 'kind' key")
    kind = block["kind"]
    if kind not in DATA_SCHEMAS:
        raise ConfigError(f"unknown data kind {kind!r}, expected one of {sorted(DATA_SCHEMAS)}")
    schema = DATA_SCHEMAS[kind]
    unknown = set(block) - set(schema) - {"kind"}
    if unknown:
        raise ConfigError(f"unknown key(s) in data block: {', '.join(sorted(unknown))}")
    out = {"kind": kind}
    for key, (default, check) in schema.items():
        out[key] = check(block[key]) if key in block else default
    return out


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Parse the command line (and optional JSON config file) into a RunConfig.

    Flags override file values; unknown keys anywhere are rejected.
    """
    parser = argparse.ArgumentParser(prog="imbq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None, help="JSON config file")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--jobs", type=int, default=None, help="worker processes")
        cmd.add_argument("--plot", action="store_true", default=None, help="emit SVG plots")
    args = parser.parse_args(argv)

    file_cfg: dict = {}
    if args.config is not None:
        try:
            with open(args.config) as handle:
                file_cfg = json.load(handle)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        except json.JSONDecodeError as err:
            raise ConfigError(f"{args.config}:{err.lineno}:{err.colno}: {err.msg}")
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    unknown = set(file_cfg) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    if "command" in file_cfg and file_cfg["command"] != args.command:
        raise ConfigError(
            f"config file names command {file_cfg['command']!r} but {args.command!r} was invoked"
        )
    stray = set(file_cfg) & set(SCHEMAS) - {args.command}
    if stray:
        raise ConfigError(f"config file has block(s) for other command(s): {', '.join(sorted(stray))}")

    out = args.out if args.out is not None else file_cfg.get("out", "out")
    jobs = args.jobs if args.jobs is not None else file_cfg.get("jobs", 0)
    plot = args.plot if args.plot is not None else file_cfg.get("plot", False)
    seed = file_cfg.get("seed", 1234)
    for name, value, kind in (("out", out, str), ("jobs", jobs, int), ("seed", seed, int), ("plot", plot, bool)):
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            raise ConfigError(f"'{name}' must be {kind.__name__}, got {value!r}")
    if jobs < 0:
        raise ConfigError("jobs must be >= 0 (0 means all available cores)")
    params = _validate_block(args.command, file_cfg.get(args.command, {}))
    return RunConfig(
        command=args.command, out=out, jobs=jobs, seed=seed, plot=plot, params=params
    )


# ----------------------------------------------------------------------
# plotting (delegation only; the numbers come from the reports)


def emit_plot(report, path: str):
    """Deterministic SVG for an inflation or dispersion report."""
    if isinstance(report, inflation.InflationReport):
        if not report.rows:
            raise ValueError("empty report: nothing to plot")
        text = svgplot.loglog_points_svg(
            [r.N for r in report.rows],
            [r.ratio for r in report.rows],
            report.slope,
            report.intercept,
            title=f"inflation ratio vs N (p={report.p}, s={report.s:g}, t={report.t:g})",
            xlabel="N",
            ylabel="ratio",
        )
    elif isinstance(report, reports.DispersionReport):
        if not report.rows:
            raise ValueError("empty report: nothing to plot")
        omega = next(r.fitted_omega for r in report.rows if r.k == report.trace_k)
        dense_t = np.linspace(min(report.trace_times), max(report.trace_times), 400)
        overlay = list(zip(dense_t.tolist(), np.cos(omega * dense_t).tolist()))
        text = svgplot.line_plot_svg(
            report.trace_times,
            report.trace_values,
            overlay=overlay,
            title=f"mode amplitude vs t (k={report.trace_k:g}, fitted omega={omega:.8f})",
            ylabel="Re u_hat(k,t)/u_hat(k,0)",
        )
    else:
        raise TypeError(f"no plot defined for {type(report).__name__}")
    reports.atomic_write_text(path, text)


# ----------------------------------------------------------------------
# command bodies


def _run_solve(cfg: RunConfig) -> int:
    p = cfg.params
    grid = make_grid(p["extent"], p["nodes"])
    data_spec = p["data"]
    if data_spec["kind"] == "gaussian":
        data = solver.gaussian_data(
            grid, data_spec["amplitude"], data_spec["width"], data_spec["velocity_amplitude"]
        )
    elif data_spec["kind"] == "cosine":
        data = solver.single_mode_data(grid, data_spec["k"], data_spec["amplitude"])
    else:
        data = inflation.make_ip_data(data_spec["N"], grid).data.scaled(data_spec["scale"])
    scfg = SolverConfig(
        p=p["p"],
        sign=p["sign"],
        horizon=p["T"],
        s=p["s"],
        picard_tol=p["picard_tol"],
        max_iterations=p["max_iterations"],
        quadrature_nodes=p["quadrature_nodes"],
        window_safety=p["window_safety"],
        window_override=p["window"],
        max_window_halvings=p["max_window_halvings"],
    )
    traj = solver.solve(data, scfg)
    zero_idx = grid.node_count // 2
    energies = None
    if abs(data.u1.amplitudes[zero_idx]) < 1e-12:
        energies = solver.energy_series(traj, p["p"], p["sign"])
    times = p["sample_times"] or np.linspace(0.0, p["T"], 5).tolist()
    reports.write_trajectory_csv(os.path.join(cfg.out, "trajectory.csv"), traj, times)
    reports.write_json(
        os.path.join(cfg.out, "solve.json"),
        reports.trajectory_sidecar(traj, {**p, "command": "solve"}, energies),
    )
    for i, rep in enumerate(traj.window_reports):
        ratio = "n/a" if rep.contraction_ratio is None else f"{rep.contraction_ratio:.3e}"
        print(
            f"solve window {i}: [{traj.window_edges[i]:g}, {traj.window_edges[i + 1]:g}] "
            f"iterations={rep.iterations} contraction={ratio}"
        )
    print(f"solve: final |u|_L2 = {sobolev_norm(traj.u[-1], 0.0):.6e} over {len(traj.window_reports)} window(s)")
    return 0


def _inflate_row(job) -> inflation.InflationRow:
    n, p, sign, s, t, tau_nodes, dxi, pad, n_max = job
    grid = inflation.grid_for_boxes(n_max, p, dxi)
    d = inflation.make_ip_data(n, grid)
    q = QuadratureConfig(tau_nodes=tau_nodes, pad_factor=pad, dxi=dxi)
    return inflation.inflation_ratio(d, p, sign, s, t, q)


def _run_inflate(cfg: RunConfig) -> int:
    p = cfg.params
    n_list = sorted(int(n) for n in p["N"])
    jobs = [
        (n, p["p"], p["sign"], p["s"], p["t"], p["tau_nodes"], p["dxi"], p["pad_factor"], max(n_list))
        for n in n_list
    ]
    # degree defaults to the available cores, capped by the configured value
    workers = min(cfg.jobs or (os.cpu_count() or 1), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_inflate_row, jobs))
    else:
        rows = [_inflate_row(j) for j in jobs]
    report = inflation.ratio_sweep(
        n_list,
        p["p"],
        p["sign"],
        p["s"],
        p["t"],
        QuadratureConfig(tau_nodes=p["tau_nodes"], pad_factor=p["pad_factor"], dxi=p["dxi"]),
        rows=rows,
    )
    reports.write_inflation_csv(os.path.join(cfg.out, "inflate.csv"), report)
    reports.write_json(
        os.path.join(cfg.out, "inflate.json"), reports.inflation_summary(report, p["slope_tol"])
    )
    if cfg.plot:
        emit_plot(report, os.path.join(cfg.out, "inflate.svg"))
    for r in report.rows:
        print(f"inflate N={r.N}: ratio={r.ratio:.6e} (numerator {r.numerator:.3e})")
    slope = "n/a" if report.slope is None else f"{report.slope:.4f}"
    print(
        f"inflate: slope={slope} expected={report.expected_slope:g} "
        f"pass={report.passes(p['slope_tol'])}"
    )
    return 0


def _run_lemma_check(cfg: RunConfig) -> int:
    p = cfg.params
    estimates = [symbols.besov_seminorm(Symbol("m1"), resolution=p["resolution"], strict=True)]
    for t in p["t_values"]:
        estimates.append(symbols.besov_seminorm(Symbol("m2_plus", t), resolution=p["resolution"], strict=True))
        estimates.append(symbols.besov_seminorm(Symbol("m3", t), resolution=p["resolution"], strict=True))
    reports.write_besov_csv(os.path.join(cfg.out, "besov.csv"), estimates)
    for e in estimates:
        t_str = "-" if e.t is None else f"{e.t:g}"
        print(f"lemma-check seminorm {e.symbol} t={t_str}: {e.value:.6f} converged={e.converged}")

    kernel = symbols.kernel_ratio_sweep(p["kernel_offsets"])
    reports.write_csv(
        os.path.join(cfg.out, "kernel.csv"),
        ["offset", "lhs", "rhs_bound", "ratio"],
        [(d, k.lhs, k.rhs_bound, k.ratio) for d, k in zip(p["kernel_offsets"], kernel)],
    )
    ratios = [k.ratio for k in kernel]
    print(f"lemma-check kernel ratio range: [{min(ratios):.4f}, {max(ratios):.4f}]")

    rng = np.random.default_rng(cfg.seed)
    grid = make_grid(p["corpus_extent"], p["corpus_nodes"])
    t_ref = max(p["t_values"])
    violations = 0
    for _ in range(p["corpus_size"]):
        f = random_real_field(grid, rng, decay=rng.uniform(0.5, 2.0))
        s_exp = rng.uniform(-1.0, 2.0)
        base = sobolev_norm(f, s_exp)
        checks = (
            (Symbol("P"), base),
            (Symbol("Q_t", t_ref), base),
            (Symbol("R_t", t_ref), abs(t_ref) * base),
        )
        for sym, bound in checks:
            if sobolev_norm(symbols.apply_symbol(sym, f), s_exp) > bound * (1 + 1e-12):
                violations += 1
    print(f"lemma-check H^s corpus: {violations} violations over {p['corpus_size']} fields")

    m2_vals = {e.t: e.value for e in estimates if e.symbol == "m2_plus"}
    m3_vals = {e.t: e.value for e in estimates if e.symbol == "m3"}
    m2_ratios = [v / t for t, v in m2_vals.items()]
    m3_ratios = [v / max(t, t**3) for t, v in m3_vals.items()]
    summary = {
        "seminorms": [
            {"symbol": e.symbol, "t": e.t, "value": e.value, "converged": e.converged,
             "refinement_change": e.refinement_change, "tail_bound": e.tail_bound}
            for e in estimates
        ],
        "m2_over_t_spread": max(m2_ratios) / min(m2_ratios),
        "m3_over_shape_spread": max(m3_ratios) / min(m3_ratios),
        "kernel_ratio_min": min(ratios),
        "kernel_ratio_max": max(ratios),
        "kernel_ratio_spread": max(ratios) / min(ratios),
        "hs_corpus_size": p["corpus_size"],
        "hs_violations": violations,
        "pass": bool(
            violations == 0
            and max(m2_ratios) / min(m2_ratios) < 4.0
            and max(m3_ratios) / min(m3_ratios) < 4.0
            and max(ratios) / min(ratios) < 10.0
        ),
        "provenance": {
            "seminorms": "imbq.symbols.besov_seminorm",
            "kernel": "imbq.symbols.check_kernel_inequality",
            "hs_corpus": "imbq.symbols.apply_symbol + imbq.grid.sobolev_norm",
        },
    }
    reports.write_json(os.path.join(cfg.out, "lemma.json"), summary)
    print(f"lemma-check: pass={summary['pass']}")
    return 0


def _run_dispersion(cfg: RunConfig) -> int:
    p = cfg.params
    rows = []
    for k in p["k"]:
        fitted = solver.dispersion_check(k, p["T"], p["dt"])
        expected = float(lambda_symbol(k))
        rows.append(reports.DispersionRow(k=k, fitted_omega=fitted, expected_omega=expected))
        print(
            f"dispersion k={k:g}: fitted omega={fitted:.10f} expected={expected:.10f} "
            f"rel error={rows[-1].rel_error:.3e}"
        )
    trace_k = p["k"][0]
    times, amps = solver.mode_amplitude_trace(trace_k, p["T"], p["dt"])
    report = reports.DispersionReport(
        rows=tuple(rows),
        trace_k=trace_k,
        trace_times=tuple(float(t) for t in times),
        trace_values=tuple(float(a) for a in amps),
    )
    reports.write_dispersion_csv(os.path.join(cfg.out, "dispersion.csv"), report)
    reports.write_json(
        os.path.join(cfg.out, "dispersion.json"),
        {
            "rows": [
                {"k": r.k, "fitted_omega": r.fitted_omega, "expected_omega": r.expected_omega,
                 "rel_error": r.rel_error}
                for r in rows
            ],
            "provenance": {
                "fitted_omega": "imbq.solver.dispersion_check",
                "expected_omega": "imbq.grid.lambda_symbol",
            },
        },
    )
    if cfg.plot:
        emit_plot(report, os.path.join(cfg.out, "dispersion.svg"))
    return 0


def _run_derivative_check(cfg: RunConfig) -> int:
    p = cfg.params
    q = QuadratureConfig(tau_nodes=p["tau_nodes"], dxi=p["dxi"])
    chk = inflation.flowmap_derivative_check(p["N"], p["p"], 1, p["t"], p["eps"], q)
    print(
        f"derivative-check p={p['p']} N={p['N']} t={p['t']:g} eps={p['eps']:g}: "
        f"relative error={chk.relative_error:.3e} halving ratio={chk.halving_ratio:.3f}"
    )
    reports.write_json(
        os.path.join(cfg.out, "derivative.json"),
        {
            "p": p["p"],
            "N": p["N"],
            "t": p["t"],
            "eps": p["eps"],
            "relative_error": chk.relative_error,
            "halving_ratio": chk.halving_ratio,
            "provenance": {"residual": "imbq.inflation.flowmap_derivative_check"},
        },
    )
    return 0


_RUNNERS = {
    "solve": _run_solve,
    "inflate": _run_inflate,
    "lemma-check": _run_lemma_check,
    "dispersion": _run_dispersion,
    "derivative-check": _run_derivative_check,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit code."""
    try:
        return _RUNNERS[cfg.command](cfg)
    except (ConvergenceError, QuadratureError, WrapError, BesovConvergenceError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return run(cfg)


def console_main():  # pragma: no cover
    sys.exit(main())

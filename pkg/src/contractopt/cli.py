"""Benchmark command line: single runs, parameter sweeps, oracle searches,
and the validation suite.

Outputs are UTF-8 CSV with LF line endings; floats carry 17 significant
digits so golden files reproduce byte-for-byte.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import load_run_config, load_sweep_config
from .environments import eval_u, make_env
from .errors import ConfigFileError, ContractOptError, InvalidConfigError
from .metrics import compute_metrics
from .oracle import cached_grid_search
from .params import SolverConfig
from .qmc import held_out_batch
from .solver import OuterResult, TraceRow, outer_loop, random_init

TRACE_COLUMNS = (
    "step", "u1", "u2", "err_a", "err_t", "gap_u1", "gap_u2",
    "hgrad_norm", "inner_iters", "cg_iters", "cg_converged",
)

SWEEP_COLUMNS = (
    "param", "value", "u1", "u2", "err_a", "err_t", "gap_u1", "gap_u2",
    "u1_star", "u2_star", "a_star", "t_star", "truth_source",
)


def fmt_value(x) -> str:
    """Serialize one CSV cell; absent metrics become empty cells."""
    if x is None:
        return ""
    if isinstance(x, bool) or isinstance(x, np.bool_):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def fmt_vector(vec) -> str:
    return ";".join(f"{float(x):.17g}" for x in vec)


def trace_row_cells(row: TraceRow) -> list[str]:
    return [
        fmt_value(row.step), fmt_value(row.u1), fmt_value(row.u2),
        fmt_value(row.err_a), fmt_value(row.err_t),
        fmt_value(row.gap_u1), fmt_value(row.gap_u2),
        fmt_value(row.hgrad_norm), fmt_value(row.inner_iters),
        fmt_value(row.cg_iters), fmt_value(row.cg_converged),
    ]


class TraceWriter:
    """Streams trace rows to disk so partial traces survive failures."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8", newline="\n")
        self._fh.write(",".join(TRACE_COLUMNS) + "\n")
        self._fh.flush()

    def write(self, row: TraceRow):
        self._fh.write(",".join(trace_row_cells(row)) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()


def _truth_for(env, oracle_cache):
    try:
        return env.closed_form()
    except ContractOptError:
        pass
    if oracle_cache is not None:
        # any cached record for this env id + params serves as ground truth
        from .oracle import load_cached_for_env

        return load_cached_for_env(Path(oracle_cache), env)
    return None


def _initial_row(env, t0, a0, truth, held) -> TraceRow:
    u1, u2 = eval_u(env, a0.values, t0.values, held)
    mets = compute_metrics(a0.values, t0.values, truth, env, held)
    return TraceRow(
        step=0, u1=u1, u2=u2,
        err_a=mets.err_a, err_t=mets.err_t,
        gap_u1=mets.gap_u1, gap_u2=mets.gap_u2,
        hgrad_norm=None, inner_iters=0, cg_iters=0, cg_converged=False,
    )


def run_single(env, cfg: SolverConfig, out_dir: Path, truth=None) -> OuterResult:
    """Execute one solve, writing trace.csv and summary.csv into out_dir."""
    out_dir = Path(out_dir)
    t0, a0 = random_init(env, cfg.init_seed)
    writer = TraceWriter(out_dir / "trace.csv")
    try:
        result = outer_loop(env, t0, a0, cfg, truth=truth, on_row=writer.write)
    finally:
        writer.close()
    held = None
    if not env.analytic:
        held = held_out_batch(cfg.eval_seed, len(env.noise), cfg.eval_size)
    last = result.trace.last()
    if last is None:
        last = _initial_row(env, t0, a0, truth, held)
    summary_path = out_dir / "summary.csv"
    with summary_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        fh.write(",".join(trace_row_cells(last)) + "\n")
    return result


def cmd_run(args) -> int:
    cfg_file = load_run_config(args.config)
    solver = cfg_file.solver
    if args.seed is not None:
        solver = _replace_seed(solver, args.seed)
    if args.log_every is not None:
        solver = _replace(solver, log_every=args.log_every)
    out_dir = _resolve_out_dir(args, cfg_file, default=f"runs/{cfg_file.env.env_id}")
    truth = _truth_for(cfg_file.env, cfg_file.oracle_cache)
    result = run_single(cfg_file.env, solver, out_dir, truth=truth)
    last = result.trace.last()
    if last is not None:
        print(
            f"{cfg_file.env.env_id}: step {last.step} u1={fmt_value(last.u1)} "
            f"u2={fmt_value(last.u2)} err_t={fmt_value(last.err_t)}"
        )
    print(f"trace: {Path(out_dir) / 'trace.csv'}")
    return 0


def _replace(cfg: SolverConfig, **kw) -> SolverConfig:
    from dataclasses import replace

    return replace(cfg, **kw)


def _replace_seed(cfg: SolverConfig, seed: int) -> SolverConfig:
    # --seed steers the training-side randomness; the held-out batch keeps
    # its own seed so evaluations stay comparable across runs
    return _replace(cfg, init_seed=seed, train_seed=seed)


def _resolve_out_dir(args, cfg_file, default: str) -> Path:
    if args.out_dir is not None:
        return Path(args.out_dir)
    if cfg_file.out_dir is not None:
        return cfg_file.out_dir
    return Path(default)


def cmd_sweep(args) -> int:
    sweep = load_sweep_config(args.sweep_file)
    base = sweep.base
    solver = base.solver
    if args.seed is not None:
        solver = _replace_seed(solver, args.seed)
    if args.log_every is not None:
        solver = _replace(solver, log_every=args.log_every)
    out_dir = _resolve_out_dir(args, base, default=f"sweeps/{sweep.env_id}_{sweep.param}")
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for value in sweep.values:
        params = dict(sweep.env_params)
        params[sweep.param] = int(value) if sweep.param == "k" else value
        env = make_env(sweep.env_id, sampled=sweep.sampled, **params)
        truth = _truth_for(env, base.oracle_cache)
        sub_dir = out_dir / f"{sweep.param}={value:g}"
        result = run_single(env, solver, sub_dir, truth=truth)
        held = None
        if not env.analytic:
            held = held_out_batch(solver.eval_seed, len(env.noise), solver.eval_size)
        last = result.trace.last()
        if last is None:
            t0, a0 = random_init(env, solver.init_seed)
            last = _initial_row(env, t0, a0, truth, held)
        rows.append((value, last, truth))

    sweep_path = out_dir / "sweep.csv"
    with sweep_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for value, last, truth in rows:
            cells = [
                sweep.param, fmt_value(value), fmt_value(last.u1), fmt_value(last.u2),
                fmt_value(last.err_a), fmt_value(last.err_t),
                fmt_value(last.gap_u1), fmt_value(last.gap_u2),
            ]
            if truth is not None:
                cells += [
                    fmt_value(truth.u1_star), fmt_value(truth.u2_star),
                    fmt_vector(truth.a_star), fmt_vector(truth.t_star),
                    truth.source,
                ]
            else:
                cells += ["", "", "", "", ""]
            fh.write(",".join(cells) + "\n")
    print(f"sweep: {sweep_path} ({len(rows)} rows)")
    return 0


def cmd_oracle(args) -> int:
    cfg_file = load_run_config(args.config)
    env = cfg_file.env
    if cfg_file.grid is None:
        raise ConfigFileError(
            "oracle needs a [grid] section for environments without finite boxes"
        )
    out_dir = _resolve_out_dir(args, cfg_file, default="oracle")
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = cfg_file.oracle_cache or (out_dir / "oracle_cache.txt")
    truth = cached_grid_search(
        env, cfg_file.grid, cfg_file.grid_seed,
        cache_path=cache, workers=cfg_file.grid_workers,
        refine=cfg_file.grid_refine,
    )
    print(f"env: {env.env_id}")
    print(f"t_star: {fmt_vector(truth.t_star)}")
    print(f"a_star: {fmt_vector(truth.a_star)}")
    print(f"u1_star: {fmt_value(truth.u1_star)}")
    print(f"u2_star: {fmt_value(truth.u2_star)}")
    print(f"cache: {cache}")
    return 0


def cmd_validate(args) -> int:
    from .validation import run_all_checks, print_report

    results = run_all_checks(workers=args.workers)
    print_report(results)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contractopt",
        description="Bilevel principal-agent benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one solve from a config file")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out-dir", type=Path, default=None)
    p_run.add_argument("--log-every", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("sweep_file", type=Path)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out-dir", type=Path, default=None)
    p_sweep.add_argument("--log-every", type=int, default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="grid-search ground truth")
    p_oracle.add_argument("config", type=Path)
    p_oracle.add_argument("--out-dir", type=Path, default=None)
    p_oracle.set_defaults(func=cmd_oracle)

    p_val = sub.add_parser("validate", help="run the acceptance checks")
    p_val.add_argument("--workers", type=int, default=2)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigFileError, InvalidConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractOptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

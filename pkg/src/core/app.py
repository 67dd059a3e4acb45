"""
Main application entry point.

    junctionwalk simulate --p 50 --max-lag 5 --out data/
    junctionwalk sample --data data/data.csv --iters 500000 --out run/
    junctionwalk diagnose --trace run/ --burn-in 200000
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src import __version__
from src.config.run_config import load_run_config, merge_config
from src.config.settings import DEFAULT_ACF_MAX_LAG, EXIT_OK, LOG_FORMAT, PRIOR_NAMES
from src.core.diagnostics import (
    UpdateMode,
    autocorrelation,
    cumulative_acceptance,
    edge_auc,
    edge_posterior_matrix,
    map_estimate,
    to_graph_chain,
    to_serial_chain,
    write_acceptance,
    write_acf,
    write_edge_posterior,
    write_map_graph,
    write_trace_summary,
)
from src.core.errors import ConfigError, DomainError, JunctionWalkError
from src.core.ggm import GaussianEvidence, IntraclassSpec, read_data_csv, simulate_intraclass
from src.core.graph_core import hamming_distance
from src.core.priors import law_from_config
from src.core.samplers import SAMPLER_NAMES, ChainConfig, ChainTrace, run_chain
from src.core.tree_gen import random_ar_graph
from src.utils.file_utils import (
    ensure_dir,
    read_graph_json,
    write_graph_csv,
    write_graph_json,
    write_json,
    write_matrix_csv,
)

logger = logging.getLogger("junctionwalk")


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def build_parser() -> argparse.ArgumentParser:
    # every option defaults to None so that merge_config can tell given flags apart
    parser = argparse.ArgumentParser(
        prog="junctionwalk",
        description="JunctionWalk - Bayesian structure learning of decomposable graphs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Simulate an AR graph and intraclass Gaussian data")
    sim.add_argument("--config", help="JSON config file")
    sim.add_argument("--p", type=int, help="Number of vertices")
    sim.add_argument("--max-lag", dest="max_lag", type=int, help="Maximum AR lag")
    sim.add_argument("--rho", type=float, help="Intraclass correlation on edges")
    sim.add_argument("--sigma2", type=float, help="Marginal variance")
    sim.add_argument("--n", type=int, help="Number of observations")
    sim.add_argument("--seed", type=int, help="Random seed")
    sim.add_argument("--out", help="Output directory")

    smp = sub.add_parser("sample", help="Run junction tree samplers on a data set")
    smp.add_argument("--config", help="JSON config file")
    smp.add_argument("--data", help="CSV data matrix, n rows x p columns")
    smp.add_argument("--skip-header", dest="skip_header", action="store_true", default=None)
    smp.add_argument("--out", help="Output directory for the trace")
    smp.add_argument("--sampler", choices=SAMPLER_NAMES)
    smp.add_argument("--iters", type=int, help="Number of chain steps")
    smp.add_argument("--prior", choices=PRIOR_NAMES)
    smp.add_argument("--alpha", type=float)
    smp.add_argument("--beta", type=float)
    smp.add_argument("--delta", type=float, help="Hyper-Wishart degrees of freedom")
    smp.add_argument("--skeleton-period", dest="skeleton_period", type=int)
    smp.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    smp.add_argument("--seed", type=int)
    smp.add_argument("--chains", type=int, help="Independent chains run in parallel processes")
    smp.add_argument("--resume", help="Trace directory to continue")
    smp.add_argument("--debug", action="store_true", default=None, help="Validate every step")
    smp.add_argument("--no-progress", dest="progress", action="store_false", default=None)

    dia = sub.add_parser("diagnose", help="Summaries, ACF, edge posterior and MAP graph")
    dia.add_argument("--config", help="JSON config file")
    dia.add_argument("--trace", help="Trace directory written by 'sample'")
    dia.add_argument("--out", help="Output directory (default: <trace>/diagnostics)")
    dia.add_argument("--burn-in", dest="burn_in", type=int)
    dia.add_argument("--max-lag", dest="max_lag", type=int)
    dia.add_argument("--truth", help="True graph JSON for AUC and Hamming distance")
    return parser


def _require(cfg: Dict[str, Any], *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise ConfigError(f"missing required option(s): {flags}")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: Dict[str, Any]) -> int:
    _require(cfg, "out")
    if cfg["p"] < 1 or cfg["max_lag"] < 1 or cfg["n"] < 1:
        raise ConfigError("--p, --max-lag and --n must be positive")
    out = ensure_dir(cfg["out"])
    rng = np.random.default_rng(cfg["seed"])
    g = random_ar_graph(cfg["p"], cfg["max_lag"], rng)
    spec = IntraclassSpec(sigma2=cfg["sigma2"], rho=cfg["rho"])
    data = simulate_intraclass(g, spec, cfg["n"], rng)
    write_graph_json(out / "graph.json", g)
    write_graph_csv(out / "graph.csv", g)
    write_matrix_csv(out / "data.csv", data)
    manifest = {k: cfg[k] for k in ("p", "max_lag", "rho", "sigma2", "n", "seed")}
    manifest.update({"command": "simulate", "n_edges": g.edge_count})
    write_json(out / "manifest.json", manifest)
    logger.info(
        "Simulated %d x %d data on a graph with %d edges -> %s",
        cfg["n"],
        cfg["p"],
        g.edge_count,
        out,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def _chain_seeds(seed: int, chains: int) -> List[int]:
    if chains == 1:
        return [seed]
    children = np.random.SeedSequence(seed).spawn(chains)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _run_job(job: Dict[str, Any]) -> str:
    """Run and save one chain; top-level so that it can run in a worker process."""
    data = read_data_csv(job["data"], skip_header=job["skip_header"])
    ev = GaussianEvidence.from_data(data, delta=job["delta"])
    cfg = ChainConfig(
        iterations=job["iters"],
        sampler=job["sampler"],
        skeleton_period=job["skeleton_period"],
        prior=law_from_config(job["prior"], job["alpha"], job["beta"]),
        seed=job["seed"],
        snapshot_every=job["snapshot_every"],
        debug=job["debug"],
    )
    resume = ChainTrace.load(job["resume"]) if job.get("resume") else None
    trace = run_chain(cfg, ev, resume=resume, progress=job["progress"])
    trace.run = {
        "data": str(job["data"]),
        "skip_header": job["skip_header"],
        "delta": job["delta"],
        "n": ev.n,
    }
    return str(trace.save(job["out"]))


def _resume_job(cfg: Dict[str, Any], given: argparse.Namespace) -> Dict[str, Any]:
    trace = ChainTrace.load(cfg["resume"])
    job = dict(cfg)
    chain_cfg = trace.config
    law = chain_cfg.prior.to_dict()
    job.update(
        {
            "sampler": chain_cfg.sampler,
            "skeleton_period": chain_cfg.skeleton_period,
            "snapshot_every": chain_cfg.snapshot_period,
            "seed": chain_cfg.seed,
            "prior": law["name"],
            "alpha": law.get("alpha"),
            "beta": law.get("beta"),
            "data": given.data or trace.run.get("data"),
            "skip_header": (
                bool(trace.run.get("skip_header", False)) if given.skip_header is None else True
            ),
            "delta": (
                given.delta if given.delta is not None else trace.run.get("delta", cfg["delta"])
            ),
            "iters": given.iters if given.iters is not None else chain_cfg.iterations,
            "out": cfg["out"] or cfg["resume"],
        }
    )
    return job


def cmd_sample(cfg: Dict[str, Any], given: argparse.Namespace) -> int:
    if cfg["resume"]:
        job = _resume_job(cfg, given)
        _require(job, "data")
        path = _run_job(job)
        logger.info("Resumed chain written to %s", path)
        return EXIT_OK

    _require(cfg, "data", "out")
    if cfg["chains"] < 1:
        raise ConfigError(f"--chains must be >= 1, got {cfg['chains']}")
    law_from_config(cfg["prior"], cfg["alpha"], cfg["beta"])
    seeds = _chain_seeds(cfg["seed"], cfg["chains"])
    out = Path(cfg["out"])
    jobs = []
    for k, seed in enumerate(seeds):
        job = dict(cfg, seed=seed)
        job["out"] = str(out if cfg["chains"] == 1 else out / f"chain_{k:02d}")
        job["progress"] = cfg["progress"] and cfg["chains"] == 1
        jobs.append(job)
    if len(jobs) == 1:
        paths = [_run_job(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            paths = list(pool.map(_run_job, jobs))
        names = [Path(p).name for p in paths]
        write_json(out / "chains.json", {"seed": cfg["seed"], "chains": names, "seeds": seeds})
    for path in paths:
        logger.info("Trace written to %s", path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------


def cmd_diagnose(cfg: Dict[str, Any]) -> int:
    _require(cfg, "trace")
    trace = ChainTrace.load(cfg["trace"])
    burn_in = cfg["burn_in"]
    length = len(trace)
    if burn_in < 0 or burn_in >= length:
        raise ConfigError(f"--burn-in {burn_in} must be smaller than the trace length {length}")
    kept = length - burn_in
    max_lag = cfg["max_lag"]
    if max_lag is None:
        max_lag = min(DEFAULT_ACF_MAX_LAG, kept - 1)
    elif max_lag >= kept:
        raise ConfigError(f"--max-lag {max_lag} needs more than {kept} post burn-in steps")

    out = ensure_dir(cfg["out"] or Path(cfg["trace"]) / "diagnostics")
    chain = to_graph_chain(trace)
    serial = to_serial_chain(trace)
    edges = np.array([r.n_edges for r in trace.records[burn_in:]], dtype=float)
    acf = autocorrelation(edges, max_lag)
    posterior = edge_posterior_matrix(chain, burn_in)
    estimate = map_estimate(chain, burn_in)

    write_trace_summary(out / "trace_summary.csv", trace)
    write_acf(out / "acf.csv", acf)
    write_edge_posterior(out / "edge_posterior.csv", posterior)
    write_map_graph(out / "map_graph.json", estimate)
    write_acceptance(out / "acceptance_serial.csv", serial)
    write_acceptance(out / "acceptance_steps.csv", trace.records)

    summary: Dict[str, Any] = {
        "steps": length,
        "serial_updates": len(serial),
        "burn_in": burn_in,
        "max_lag": max_lag,
        "acf_degenerate": acf.degenerate,
        "graph_rate_serial": float(cumulative_acceptance(serial, UpdateMode.GRAPH)[-1]),
        "junction_rate_serial": float(cumulative_acceptance(serial, UpdateMode.JUNCTION)[-1]),
        "graph_rate_steps": float(cumulative_acceptance(trace.records, UpdateMode.GRAPH)[-1]),
        "map_frequency": estimate.frequency,
        "numerical_rejections": trace.numerical_rejections,
    }
    if cfg["truth"]:
        truth = read_graph_json(cfg["truth"])
        if truth.p != trace.p:
            raise ConfigError(f"true graph has p={truth.p}, trace has p={trace.p}")
        summary["map_hamming"] = hamming_distance(estimate.graph, truth)
        try:
            summary["edge_auc"] = edge_auc(posterior, truth)
        except DomainError as exc:
            logger.warning("Skipping AUC: %s", exc)
    write_json(out / "diagnostics.json", summary)
    logger.info(
        "Diagnostics for %d steps (%d serial updates) written to %s", length, len(serial), out
    )
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run a command.

    Returns:
        the process exit code: 0 on success, 2 for usage and config errors,
        3 for data errors, 4 for numerical failures
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        file_cfg = load_run_config(args.config) if args.config else None
        cfg = merge_config(args.command, file_cfg, args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "sample":
            return cmd_sample(cfg, args)
        return cmd_diagnose(cfg)
    except JunctionWalkError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

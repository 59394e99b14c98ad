"""Command-line front end: ``betaddp <command> [--config PATH] [--seed N] [--out DIR] [--chains N]``.

Exit codes: 0 success, 2 configuration error, 3 input/output error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats

from . import io
from .analysis import (
    cluster_count_posterior,
    density_grid,
    least_squares_clustering,
    pairwise_matrix,
    predictive_draws,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .distributions import NumericalError, ParameterError
from .gaussian import MIX_MODELS, GaussianModel, generate_mix_data
from .gibbs import SeriesData, SliceGibbsSampler
from .prior import (
    UnsupportedError,
    closed_form_stick_correlation,
    sample_factors,
)
from .var import (
    VarMixtureModel,
    generate_var_regime_data,
    growth_transform,
    sequential_predictive_density,
)

log = logging.getLogger("betaddp")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("prior-check", "fit-gaussian", "fit-var", "analyze", "generate-data")


def chain_seeds(seed: int, chains: int):
    """Independent per-chain seeds spawned from the run seed."""
    children = np.random.SeedSequence(seed).spawn(chains)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


# -- prior check --------------------------------------------------------------

def prior_check(cfg: RunConfig, seed: int, out: Path):
    pc = cfg.prior_check
    grid = [float(v) for v in pc.get("grid", "0.5, 1, 2").split(",") if v.strip()]
    if not grid or any(v <= 0 for v in grid):
        raise ConfigError("[prior_check] grid must list positive alpha values")
    schemes = [s.strip() for s in pc.get("schemes", "H1, H2").split(",") if s.strip()]
    N = int(pc.get("samples", 1_000_000))
    if N < 200:
        raise ConfigError("[prior_check] samples must be >= 200")
    rng = np.random.default_rng(seed)
    corr_rows, ks_rows = [], []
    for scheme in schemes:
        for a1 in grid:
            for a2 in grid:
                c = RunConfig(scheme=scheme, r=2, alphas=(a1, a2), discount=cfg.discount).construction()
                S = c.sticks(sample_factors(c, np.ones(N, dtype=np.int64), rng))
                rho = float(np.corrcoef(S[:, 0], S[:, 1])[0, 1])
                batches = [np.corrcoef(b[:, 0], b[:, 1])[0, 1] for b in np.array_split(S, 20)]
                stderr = float(np.std(batches, ddof=1) / np.sqrt(len(batches)))
                try:
                    closed = closed_form_stick_correlation(c)
                except UnsupportedError:
                    closed = float("nan")
                label = ";".join(io.fmt(a) for a in c.alphas)
                corr_rows.append((scheme, 2, label, c.discount, 1, 2, closed, rho, stderr))
                for i in (1, 2):
                    m = c.marginal_params(i)
                    ks = stats.kstest(S[:, i - 1], "beta", args=(m.a, m.b))
                    ks_rows.append((scheme, 2, label, c.discount, i, ks.statistic, ks.pvalue))
    out.mkdir(parents=True, exist_ok=True)
    io.write_table(out / "prior_check.csv",
                   ["scheme", "r", "alphas", "l", "i", "j", "closed_form", "monte_carlo", "stderr"], corr_rows)
    io.write_table(out / "prior_marginals.csv",
                   ["scheme", "r", "alphas", "l", "i", "ks_statistic", "ks_pvalue"], ks_rows)
    print(f"prior-check: {len(corr_rows)} grid points written to {out}")


# -- fitting ------------------------------------------------------------------

def analyze_archive(archive, out: Path, pair_thin=10, grid_points=512):
    """Write density, cluster-count, pairwise and LS-clustering tables for one archive."""
    out.mkdir(parents=True, exist_ok=True)
    r = int(archive.meta["r"])
    draws = predictive_draws(archive)
    if draws.shape[0] >= 2:
        io.write_density_csv(out / "density.csv", density_grid(draws, n_grid=grid_points))
    io.write_count_histogram(out / "cluster_counts.csv",
                             {i: cluster_count_posterior(archive, i)[0] for i in range(1, r + 1)})
    pairs = [(i, i) for i in range(1, r + 1)]
    if archive.meta.get("atom_mode", "common") == "common":
        pairs += [(i, j) for i in range(1, r + 1) for j in range(i + 1, r + 1)]
    for i, j in pairs:
        pm = pairwise_matrix(archive, i, j, thin=pair_thin)
        io.write_pairwise_csv(out / f"pairwise_{i}{j}.csv", pm)
        if i == j:
            ls = least_squares_clustering(archive, i, pairwise=pm, thin=pair_thin)
            io.write_ls_clustering(out / f"ls_clustering_{i}.csv", ls, archive.meta["atom_names"])


def _run_chain(job):
    """Worker entry point; ``job`` is a plain tuple so it pickles cleanly."""
    kind, cfg, payload, chain, seed, out = job
    out.mkdir(parents=True, exist_ok=True)
    construction = cfg.construction()
    schedule = cfg.make_schedule(seed)
    meta = {"chain": chain, "run_seed": cfg.seed, "model": kind, "atom_mode": "common"}
    if kind == "gaussian":
        model = GaussianModel(cfg.gaussian_spec())
        data = SeriesData.from_series(*payload)
    else:
        spec = cfg.var_spec()
        model = VarMixtureModel(spec, *payload)
        data = model.series_data()
        meta["p"] = spec.p
    sampler = SliceGibbsSampler(construction, model, data, cfg.make_tuning(),
                                alpha_conditioning=cfg.alpha_conditioning)
    try:
        archive = sampler.run(schedule, meta=meta)
    except NumericalError as exc:
        state = getattr(exc, "state", None)
        dump = {"error": str(exc), "sweep": getattr(exc, "sweep", None)}
        if state is not None:
            dump.update(D=state.D, U=state.U, V=state.V, atoms=state.atoms, alpha=state.alpha)
        (out / "failure_state.json").write_text(io._dumps(dump) + "\n")
        raise
    io.write_archive(out / "archive.jsonl", archive)
    an = cfg.analysis
    analyze_archive(archive, out, int(an.get("pair_thin", 10)), int(an.get("grid_points", 512)))
    if kind == "var":
        Y1, Y2 = payload
        npts = int(an.get("seq_grid_points", 100))
        lo, hi = min(Y1.min(), Y2.min()), max(Y1.max(), Y2.max())
        span = hi - lo
        grid = np.linspace(lo - 0.15 * span, hi + 0.15 * span, npts)
        for i in (1, 2):
            dens = sequential_predictive_density(archive, Y1, Y2, model.p, grid, i)
            rows = ((t + model.p + 1, y, dens[t, g]) for t in range(dens.shape[0]) for g, y in enumerate(grid))
            io.write_table(out / f"sequential_predictive_{i}.csv", ["t", "y", "f"], rows)
    return chain, archive.meta["acceptance"], [cluster_count_posterior(archive, i)[1] for i in range(1, data.r + 1)]


def _fit(kind, cfg: RunConfig, seed: int, out: Path):
    if "path" not in cfg.data:
        raise ConfigError("[data] path is required for fitting")
    path = Path(cfg.data["path"])
    if kind == "gaussian":
        payload = io.read_mix_csv(path).series
        if cfg.r != len(payload):
            raise ConfigError(f"[prior] r={cfg.r} but the data file holds {len(payload)} series")
    else:
        ds = io.read_var_csv(path)
        payload = (ds.series1, ds.series2)
        if ds.kind == "level":
            payload = tuple(growth_transform(x, 4) for x in payload)
    cfg.construction()  # fail early on a bad prior section
    seeds = chain_seeds(seed, cfg.chains)
    jobs = [(kind, cfg, payload, c, s, out / f"chain_{c:02d}") for c, s in enumerate(seeds, start=1)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            results = list(pool.map(_run_chain, jobs))
    else:
        results = [_run_chain(job) for job in jobs]
    for chain, acc, modes in results:
        rates = ", ".join(f"{k}={'n/a' if v is None else f'{v:.3f}'}" for k, v in acc.items())
        print(f"chain {chain}: acceptance {rates}; cluster-count modes {modes}")


def analyze(cfg: RunConfig, seed: int, out: Path):
    if "archive" not in cfg.analysis:
        raise ConfigError("[analysis] archive is required")
    archive = io.read_archive(cfg.analysis["archive"])
    an = cfg.analysis
    analyze_archive(archive, out, int(an.get("pair_thin", 10)), int(an.get("grid_points", 512)))
    print(f"analysis of {len(archive)} records written to {out}")


def generate_data(cfg: RunConfig, seed: int, out: Path):
    d = cfg.data
    model_id = d.get("model", "Mix1")
    rng = np.random.default_rng(seed)
    out.mkdir(parents=True, exist_ok=True)
    if model_id in MIX_MODELS:
        try:
            n = int(d.get("n", 50))
            y1, y2 = generate_mix_data(model_id, n, rng)
        except (ParameterError, ValueError) as exc:
            raise ConfigError(f"[data] {exc}") from exc
        comps = [(i, *c) for i, series in enumerate(MIX_MODELS[model_id], start=1) for c in series]
        path = out / f"{model_id}.csv"
        io.write_mix_csv(path, [y1, y2], {"model": model_id, "n": n, "seed": seed}, comps)
    elif model_id == "VAR":
        T, p = int(d.get("t", 300)), int(cfg.model.get("p", 4))
        if T <= 2 * p:
            raise ConfigError(f"[data] T must exceed 2p = {2 * p}")
        Y1, Y2, _, ups = generate_var_regime_data(T, p, rng)
        path = out / "VAR.csv"
        io.write_var_csv(path, [f"t{t:04d}" for t in range(1, T + 1)], Y1, Y2, kind="growth",
                         meta={"model": "VAR", "T": T, "p": p, "seed": seed,
                               "upsilon": json.dumps(ups.tolist())})
    else:
        raise ConfigError(f"[data] unknown model {model_id!r}; choose from {sorted(MIX_MODELS) + ['VAR']}")
    print(f"wrote {path}")


HANDLERS = {
    "prior-check": prior_check,
    "fit-gaussian": lambda cfg, seed, out: _fit("gaussian", cfg, seed, out),
    "fit-var": lambda cfg, seed, out: _fit("var", cfg, seed, out),
    "analyze": analyze,
    "generate-data": generate_data,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="betaddp", description="Beta-product dependent DP mixtures.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="INI run configuration")
        p.add_argument("--seed", type=int, help="overrides [run] seed")
        p.add_argument("--out", type=Path, help="output directory (overrides [run] out)")
        p.add_argument("--chains", type=int, help="number of chains (overrides [run] chains)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.command) if args.config else parse_config("", args.command)
        if args.seed is not None:
            cfg.seed = args.seed
        if cfg.seed is None:
            raise ConfigError("a seed is required ([run] seed or --seed)")
        if args.chains is not None:
            if args.chains < 1:
                raise ConfigError("--chains must be >= 1")
            cfg.chains = args.chains
        out = args.out or cfg.out
        HANDLERS[args.command](cfg, cfg.seed, Path(out))
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, io.DataFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

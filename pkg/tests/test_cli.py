import subprocess
import sys

import numpy as np
import pytest

from betaddp import io
from betaddp.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, chain_seeds, main
from betaddp.config import ConfigError, load_config, parse_config


def write_cfg(path, text):
    path.write_text(text)
    return str(path)


FIT = """
[run]
seed = 7
[prior]
scheme = H1
alphas = 1, 1
[model]
preset = WI
[schedule]
sweeps = 40
burn_in = 20
log_every = 0
[data]
path = {data}
[analysis]
pair_thin = 2
grid_points = 64
"""


@pytest.fixture
def mix_file(tmp_path):
    rc = main(["generate-data", "--seed", "3", "--out", str(tmp_path / "data")])
    assert rc == EXIT_OK
    return tmp_path / "data" / "Mix1.csv"


def test_chain_seeds_are_distinct_and_stable():
    a = chain_seeds(5, 4)
    assert len(set(a)) == 4 and a == chain_seeds(5, 4)
    assert chain_seeds(5, 1)[0] == a[0]


def test_config_parsing():
    cfg = parse_config("[run]\nseed = 3\nchains = 2\n[prior]\nscheme = H2\nr = 3\n[model]\npreset = SI-Mix2\ns2 = 0.5\n")
    assert cfg.seed == 3 and cfg.chains == 2
    assert cfg.alphas == (1.0, 1.0, 1.0)
    spec = cfg.gaussian_spec()
    assert spec.s2 == 0.5 and spec.alpha_prior[1].mean == pytest.approx(2.0)
    assert parse_config("[run]\nchains = 3   ; inline comment\n").chains == 3
    with pytest.raises(ConfigError):
        parse_config("[bogus]\nx = 1\n")
    with pytest.raises(ConfigError):
        parse_config("[model]\npreset = nope\n").gaussian_spec()
    with pytest.raises(ConfigError):
        parse_config("[prior]\nalphas = 1, x\n")
    with pytest.raises(ConfigError):
        parse_config("[tuning]\nv_move = sideways\n").make_tuning()
    with pytest.raises(FileNotFoundError):
        load_config("/nonexistent/run.ini")


def test_generate_data(tmp_path, mix_file):
    ds = io.read_mix_csv(mix_file)
    assert [s.size for s in ds.series] == [50, 50]
    assert ds.meta["model"] == "Mix1" and len(ds.components) == 6
    cfg = write_cfg(tmp_path / "g.ini", "[data]\nmodel = VAR\nT = 60\n[model]\np = 2\n")
    assert main(["generate-data", "--config", cfg, "--seed", "1", "--out", str(tmp_path / "v")]) == EXIT_OK
    assert io.read_var_csv(tmp_path / "v" / "VAR.csv").series1.size == 60


def test_exit_codes(tmp_path, mix_file):
    out = str(tmp_path / "o")
    assert main(["generate-data", "--out", out]) == EXIT_CONFIG  # no seed
    cfg = write_cfg(tmp_path / "n0.ini", "[data]\nmodel = Mix1\nn = 0\n")
    assert main(["generate-data", "--config", cfg, "--seed", "1", "--out", out]) == EXIT_CONFIG
    assert main(["fit-gaussian", "--config", str(tmp_path / "missing.ini"), "--seed", "1"]) == EXIT_IO
    cfg = write_cfg(tmp_path / "nodata.ini", FIT.format(data=tmp_path / "nope.csv"))
    assert main(["fit-gaussian", "--config", cfg, "--out", out]) == EXIT_IO
    bad = tmp_path / "bad.csv"
    bad.write_text("series_id,value\n1,0.1\n2,oops\n")
    cfg = write_cfg(tmp_path / "bad.ini", FIT.format(data=bad))
    assert main(["fit-gaussian", "--config", cfg, "--out", out]) == EXIT_IO
    cfg = write_cfg(tmp_path / "r3.ini", FIT.format(data=mix_file).replace("scheme = H1", "scheme = H1\nr = 3"))
    assert main(["fit-gaussian", "--config", cfg, "--out", out]) == EXIT_CONFIG
    cfg = write_cfg(tmp_path / "pc.ini", "[prior_check]\ngrid = 0, 1\n")
    assert main(["prior-check", "--config", cfg, "--seed", "1", "--out", out]) == EXIT_CONFIG
    assert main(["analyze", "--seed", "1", "--out", out]) == EXIT_CONFIG


def test_numerical_failure_dumps_state(tmp_path, mix_file, monkeypatch):
    from betaddp.distributions import NumericalError
    from betaddp.gibbs import SliceGibbsSampler

    real = SliceGibbsSampler.sweep

    def failing(self, state, rng, adapt=False):
        if getattr(self, "_n", 0) == 3:
            raise NumericalError("forced underflow")
        self._n = getattr(self, "_n", 0) + 1
        return real(self, state, rng, adapt)

    monkeypatch.setattr(SliceGibbsSampler, "sweep", failing)
    cfg = write_cfg(tmp_path / "f.ini", FIT.format(data=mix_file))
    assert main(["fit-gaussian", "--config", cfg, "--out", str(tmp_path / "fail")]) == EXIT_NUMERIC
    dump = (tmp_path / "fail" / "chain_01" / "failure_state.json").read_text()
    assert '"sweep":4' in dump and '"D":' in dump


def test_fit_gaussian_outputs(tmp_path, mix_file):
    cfg = write_cfg(tmp_path / "f.ini", FIT.format(data=mix_file))
    out = tmp_path / "fit"
    assert main(["fit-gaussian", "--config", cfg, "--out", str(out), "--chains", "2"]) == EXIT_OK
    for chain in ("chain_01", "chain_02"):
        d = out / chain
        for name in ("archive.jsonl", "density.csv", "cluster_counts.csv", "pairwise_11.csv",
                     "pairwise_12.csv", "ls_clustering_1.csv", "ls_clustering_2.csv"):
            assert (d / name).exists(), name
    a1 = io.read_archive(out / "chain_01" / "archive.jsonl")
    a2 = io.read_archive(out / "chain_02" / "archive.jsonl")
    assert len(a1) == 40 and a1.meta["seed"] != a2.meta["seed"]
    hist = io.read_count_histogram(out / "chain_01" / "cluster_counts.csv")
    assert sum(hist[1].values()) == pytest.approx(1.0)
    # re-analysing the archive reproduces the chain's tables
    acfg = write_cfg(tmp_path / "a.ini", f"[analysis]\narchive = {out / 'chain_01' / 'archive.jsonl'}\n"
                                         "pair_thin = 2\ngrid_points = 64\n")
    assert main(["analyze", "--config", acfg, "--seed", "1", "--out", str(tmp_path / "an")]) == EXIT_OK
    for name in ("density.csv", "pairwise_12.csv", "ls_clustering_1.csv"):
        assert (tmp_path / "an" / name).read_bytes() == (out / "chain_01" / name).read_bytes()


def test_fit_var_outputs(tmp_path):
    gen = write_cfg(tmp_path / "g.ini", "[data]\nmodel = VAR\nT = 60\n[model]\np = 2\n")
    assert main(["generate-data", "--config", gen, "--seed", "2", "--out", str(tmp_path)]) == EXIT_OK
    cfg = write_cfg(tmp_path / "v.ini", FIT.format(data=tmp_path / "VAR.csv").replace("preset = WI", "preset = WI\np = 2"))
    assert main(["fit-var", "--config", cfg, "--out", str(tmp_path / "fv")]) == EXIT_OK
    d = tmp_path / "fv" / "chain_01"
    header, rows = io.read_table(d / "sequential_predictive_1.csv")
    assert header == ["t", "y", "f"] and int(rows[0][0]) == 3
    arch = io.read_archive(d / "archive.jsonl")
    assert np.asarray(arch.records[0]["upsilon"]).shape == (2, 4)


def test_prior_check_rows(tmp_path):
    cfg = write_cfg(tmp_path / "pc.ini", "[prior_check]\ngrid = 1, 2\nsamples = 20000\n")
    assert main(["prior-check", "--config", cfg, "--seed", "4", "--out", str(tmp_path)]) == EXIT_OK
    header, rows = io.read_table(tmp_path / "prior_check.csv")
    assert header == ["scheme", "r", "alphas", "l", "i", "j", "closed_form", "monte_carlo", "stderr"]
    assert len(rows) == 8
    for row in rows:
        closed, mc, se = (float(v) for v in row[6:])
        assert abs(closed - mc) < 5 * se + 0.01
    h1 = next(r for r in rows if r[0] == "H1" and r[2] == "1;1")
    assert float(h1[6]) == pytest.approx(0.25)
    _, ks = io.read_table(tmp_path / "prior_marginals.csv")
    assert len(ks) == 16


def test_subprocess_runs_are_byte_identical(tmp_path, mix_file):
    cfg = write_cfg(tmp_path / "f.ini", FIT.format(data=mix_file))
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        proc = subprocess.run([sys.executable, "-m", "betaddp.cli", "fit-gaussian", "--config", cfg, "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append((out / "chain_01" / "archive.jsonl").read_bytes())
    assert outs[0] == outs[1]

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betaddp import io
from betaddp.analysis import DensityGrid, LSClustering, PairwiseMatrix
from betaddp.gibbs import PosteriorArchive

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(finite)
def test_fmt_roundtrips_exactly(x):
    assert float(io.fmt(x)) == x


def test_fmt_integers():
    assert io.fmt(3) == "3" and io.fmt(np.int64(-2)) == "-2" and io.fmt(0.1) == "0.10000000000000001"


def test_mix_csv_roundtrip(tmp_path, rng):
    s1, s2 = rng.normal(size=7), rng.normal(size=3)
    comps = [(1, 0.5, -1.0, 0.25), (2, 1.0, 2.0, 1.0)]
    p = tmp_path / "mix.csv"
    io.write_mix_csv(p, [s1, s2], {"model": "Mix1", "seed": 4}, comps)
    ds = io.read_mix_csv(p)
    np.testing.assert_array_equal(ds.series[0], s1)
    np.testing.assert_array_equal(ds.series[1], s2)
    assert ds.meta == {"model": "Mix1", "seed": "4"}
    assert ds.components == comps


@pytest.mark.parametrize("body,line", [
    ("series_id,value\n1,0.5\n2,abc\n", 3),
    ("series_id,value\n1,0.5\n2,1,3\n", 3),
    ("series_id,value\n1,0.5\nx,1\n", 3),
    ("id,value\n1,0.5\n", 1),
    ("series_id,value\n1,0.5\n1,nan\n", 3),
])
def test_mix_csv_errors_report_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(io.DataFormatError) as info:
        io.read_mix_csv(p)
    assert info.value.line == line


def test_mix_csv_needs_consecutive_series(tmp_path):
    p = tmp_path / "gap.csv"
    p.write_text("series_id,value\n1,0.5\n3,1\n")
    with pytest.raises(io.DataFormatError):
        io.read_mix_csv(p)


def test_var_csv_roundtrip(tmp_path, rng):
    a, b = rng.normal(size=5), rng.normal(size=5)
    p = tmp_path / "var.csv"
    io.write_var_csv(p, [f"d{i}" for i in range(5)], a, b, kind="growth", meta={"T": 5})
    ds = io.read_var_csv(p)
    assert ds.kind == "growth" and ds.dates[0] == "d0" and ds.meta == {"T": "5"}
    np.testing.assert_array_equal(ds.series1, a)
    np.testing.assert_array_equal(ds.series2, b)
    p.write_text("date,gdp,cpi\n")
    with pytest.raises(io.DataFormatError):
        io.read_var_csv(p)
    p.write_text("date,series1_level,series2_level\n2000Q1,1.0,2.0\n2000Q2,1.0\n")
    with pytest.raises(io.DataFormatError) as info:
        io.read_var_csv(p)
    assert info.value.line == 3


def test_archive_roundtrip_and_canonical_bytes(tmp_path):
    arch = PosteriorArchive({"r": 2, "seed": 1, "acceptance": {"alpha": 0.4, "v_star": None}},
                            [{"sweep": 1, "alpha": [np.float64(0.1), 2.0], "D": [[1, 2], [1]],
                              "atoms": {"mu": [0.3]}, "K": np.int64(3)}])
    p, q = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    io.write_archive(p, arch)
    back = io.read_archive(p)
    assert back.meta == {"r": 2, "seed": 1, "acceptance": {"alpha": 0.4, "v_star": None}}
    assert back.records[0]["alpha"] == [0.1, 2.0] and back.records[0]["K"] == 3
    io.write_archive(q, back)
    assert p.read_bytes() == q.read_bytes()
    first = json.loads(p.read_text().splitlines()[0])
    assert first["type"] == "meta"


def test_archive_errors(tmp_path):
    p = tmp_path / "a.jsonl"
    p.write_text('{"type":"meta"}\n{"type":"record"\n')
    with pytest.raises(io.DataFormatError) as info:
        io.read_archive(p)
    assert info.value.line == 2
    p.write_text('{"type":"record","sweep":1}\n')
    with pytest.raises(io.DataFormatError):
        io.read_archive(p)
    arch = PosteriorArchive({"x": float("nan")}, [])
    with pytest.raises(ValueError):
        io.write_archive(p, arch)


def test_table_roundtrips(tmp_path, rng):
    dg = DensityGrid(np.linspace(0, 1, 5), rng.random((2, 5)))
    io.write_density_csv(tmp_path / "d.csv", dg)
    back = io.read_density_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.grid, dg.grid)
    np.testing.assert_array_equal(back.values, dg.values)

    hist = {1: {2: 0.25, 3: 0.75}, 2: {1: 1.0}}
    io.write_count_histogram(tmp_path / "h.csv", hist)
    assert io.read_count_histogram(tmp_path / "h.csv") == hist

    pm = PairwiseMatrix(rng.random((3, 4)), 17, (1, 2))
    io.write_pairwise_csv(tmp_path / "p.csv", pm)
    back = io.read_pairwise_csv(tmp_path / "p.csv")
    assert back.M == 17 and back.pair == (1, 2)
    np.testing.assert_array_equal(back.P, pm.P)

    ls = LSClustering(12, 3, np.array([1, 1, 4]), 0.5, {"mu": np.array([0.1, 0.1, -2.0]), "sigma2": np.ones(3)})
    io.write_ls_clustering(tmp_path / "l.csv", ls)
    back = io.read_ls_clustering(tmp_path / "l.csv")
    assert (back.sweep, back.position, back.loss) == (12, 3, 0.5)
    np.testing.assert_array_equal(back.allocation, ls.allocation)
    np.testing.assert_array_equal(back.atoms["mu"], ls.atoms["mu"])


def test_table_errors(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("y,f1\n0,1\n1\n")
    with pytest.raises(io.DataFormatError) as info:
        io.read_density_csv(p)
    assert info.value.line == 3
    p.write_text("bad,1\n1,0.5\n")
    with pytest.raises(io.DataFormatError):
        io.read_pairwise_csv(p)

import json

import pytest

from unbiased_cso.harness import OutputDirError, Plot, Table, emit_outputs, read_csv, write_csv
from unbiased_cso.harness.outputs import ensure_writable, write_manifest, write_plot


def test_csv_round_trip_is_exact(tmp_path):
    values = [0.1, 1 / 3, 1e-300, -2.5e17, 123456789.123456789]
    path = write_csv(tmp_path / "t.csv", ["a", "b", "c"], [[v, i, True] for i, v in enumerate(values)])
    header, rows = read_csv(path)
    assert header == ["a", "b", "c"]
    assert [float(r[0]) for r in rows] == values
    assert {r[2] for r in rows} == {"true"}


def test_csv_quotes_commas(tmp_path):
    path = write_csv(tmp_path / "q.csv", ["label"], [["a,b"]])
    assert read_csv(path)[1] == [["a,b"]]


def test_plot_bytes_are_reproducible(tmp_path):
    plot = Plot("p", "title", "x", "y", {"one": ([1, 2, 4], [1.0, 0.5, 0.25]), "two": ([1, 2, 4], [2.0, 1.0, 0.5])}, loglog=True)
    a = write_plot(tmp_path / "a.svg", plot).read_bytes()
    b = write_plot(tmp_path / "b.svg", plot).read_bytes()
    assert a == b and b"<svg" in a


def test_empty_plot_is_skipped(tmp_path):
    assert write_plot(tmp_path / "e.svg", Plot("e", "t", "x", "y", {"s": ([], [])})) is None


def test_emit_outputs_naming(tmp_path):
    tables = [Table("mse", ["S"], [[1]])]
    plots = [Plot("mse", "t", "x", "y", {"s": ([1, 2], [1, 2])})]
    names = [p.name for p in emit_outputs(tmp_path, "rel-mse-vs-S", 3, tables, plots, "csv+plot")]
    assert names == ["rel-mse-vs-S_seed3_mse.csv", "rel-mse-vs-S_seed3_mse.svg"]
    assert [p.name for p in emit_outputs(tmp_path, "x", 0, tables, plots, "csv")] == ["x_seed0_mse.csv"]


def test_manifest_is_json(tmp_path):
    path = write_manifest(tmp_path, "x", 1, {"b": 1, "a": [1.5]})
    assert json.loads(path.read_text()) == {"a": [1.5], "b": 1}


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputDirError):
        ensure_writable(blocker / "sub")

import json
import logging

import numpy as np
import pytest

from avgregret.core import ValidationError
from avgregret.dp2d import skyline_2d
from avgregret.io import (
    RunReport,
    file_sha256,
    generate_synthetic,
    load_dataset,
    load_gmm,
    load_utility_matrix,
    write_dataset,
)

from conftest import HOTELS


def test_load_hotels(hotel_files):
    D = load_dataset(hotel_files[0])
    assert (D.n, D.dim) == (4, 2)
    assert D.labels == tuple(HOTELS)


def test_duplicates_dropped_with_warning(tmp_path, caplog):
    path = tmp_path / "dup.csv"
    path.write_text("id,x1,x2\na,1,2\nb,2,1\nc,1,2\n")
    with caplog.at_level(logging.WARNING):
        D = load_dataset(path)
    assert D.n == 2 and D.dropped == (2,)
    assert "dropped" in caplog.text


@pytest.mark.parametrize("body,line", [
    ("a,1,2\nb,NaN,1\n", 3),
    ("a,1,2\nb,-1,1\n", 3),
    ("a,1,x\n", 2),
    ("a,1,2,3\n", 2),
])
def test_bad_rows_name_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text("id,x1,x2\n" + body)
    with pytest.raises(ValidationError, match=f":{line}:"):
        load_dataset(path)


def test_empty_and_missing(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValidationError):
        load_dataset(empty)
    with pytest.raises(ValidationError):
        load_dataset(tmp_path / "missing.csv")


def test_load_hotel_users(hotel_files):
    D = load_dataset(hotel_files[0])
    F = load_utility_matrix(hotel_files[1], D)
    assert F.kind == "tabular"
    assert F.probabilities == (0.25,) * 4
    assert F.atoms[0].utilities.tolist() == [0.9, 0.7, 0.2, 0.4]


def test_probability_checks(tmp_path):
    half = tmp_path / "half.csv"
    half.write_text("prob,u1,u2\n0.25,0.1,0.2\n0.25,0.3,0.4\n")
    with pytest.raises(ValidationError):
        load_utility_matrix(half)
    close = tmp_path / "close.csv"
    close.write_text("prob,u1,u2\n0.5004,0.1,0.2\n0.5,0.3,0.4\n")
    assert sum(load_utility_matrix(close).probabilities) == pytest.approx(1.0, abs=1e-12)
    one = tmp_path / "one.csv"
    one.write_text("prob,u1,u2\n1.0,0.1,0.2\n")
    assert len(load_utility_matrix(one).atoms) == 1


def test_utility_checks(tmp_path, hotel_files):
    D = load_dataset(hotel_files[0])
    wide = tmp_path / "wide.csv"
    wide.write_text("prob,u1,u2,u3\n1.0,0.1,0.2,0.3\n")
    with pytest.raises(ValidationError):
        load_utility_matrix(wide, D)
    big = tmp_path / "big.csv"
    big.write_text("prob,u1,u2\n1.0,0.1,1.2\n")
    with pytest.raises(ValidationError):
        load_utility_matrix(big)


def test_utility_columns_follow_dedup(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("id,x\na,1\nb,2\nc,1\n")
    util = tmp_path / "u.csv"
    util.write_text("prob,u1,u2,u3\n1.0,0.1,0.2,0.3\n")
    D = load_dataset(data)
    F = load_utility_matrix(util, D)
    assert F.atoms[0].utilities.tolist() == [0.1, 0.2]


def test_gmm_file(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"components": [{"weight": 1.0, "mean": [0.5, 0.5], "std": [0.1, 0.2]}]}))
    assert load_gmm(path).dim == 2
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        load_gmm(path)


@pytest.mark.parametrize("kind", ["uniform", "correlated", "anticorrelated"])
def test_synthetic_deterministic(tmp_path, kind):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_dataset(generate_synthetic(300, 3, kind, 5), a)
    write_dataset(generate_synthetic(300, 3, kind, 5), b)
    assert file_sha256(a) == file_sha256(b)
    D = load_dataset(a)
    assert np.all((D.coords >= 0) & (D.coords <= 1))
    assert np.array_equal(D.coords, generate_synthetic(300, 3, kind, 5).coords)


def test_default_shape():
    D = generate_synthetic(10_000, 6, "uniform", 0)
    assert (D.n, D.dim) == (10_000, 6)


def test_correlated_rows_hug_the_diagonal():
    D = generate_synthetic(500, 4, "correlated", 1)
    spread = D.coords.max(axis=1) - D.coords.min(axis=1)
    assert spread.max() <= 0.1 + 1e-12


def test_anticorrelated_has_larger_skyline():
    wins = 0
    for seed in range(10):
        anti = len(skyline_2d(generate_synthetic(200, 2, "anticorrelated", seed)))
        uni = len(skyline_2d(generate_synthetic(200, 2, "uniform", seed)))
        wins += anti > uni
    assert wins >= 9


def test_generator_rejects_bad_args():
    with pytest.raises(ValidationError):
        generate_synthetic(0, 2)
    with pytest.raises(ValidationError):
        generate_synthetic(5, 2, "clustered")


def test_report_round_trip():
    rep = RunReport(command="select", algorithm="x", config={"k": 2}, solution=[1, 3], arr=0.1,
                    percentiles={"50": 0.0}, bound=float("inf"), timing={"query_seconds": 0.5})
    text = rep.to_json()
    back = RunReport.from_json(text)
    assert back.to_json() == text
    assert json.loads(text)["bound"] == "inf"
    assert json.loads(text)["schema_version"] == 1


def test_report_schema_checked():
    with pytest.raises(ValidationError):
        RunReport.from_json(json.dumps({"schema_version": 99}))

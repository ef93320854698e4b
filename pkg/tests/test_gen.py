import numpy as np
import pytest

from choremms.gen import (
    CSV_COLUMNS,
    GenSpec,
    aggregate,
    generate,
    rows_to_csv,
    run_batch,
    specs_from_config,
    strip_runtime,
    write_csv,
)
from choremms.model import rankings


def test_uniform_family_range_and_shape():
    spec = GenSpec("uniform", n=3, m=8, seed=5, lo=0.2, hi=0.9)
    inst = generate(spec)
    assert inst.n == 3 and inst.m == 8
    assert all(0.2 <= c <= 0.9 for row in inst.costs for c in row)


def test_exponential_family_nonnegative():
    inst = generate(GenSpec("exponential", n=2, m=30, seed=7, rate=2.0))
    assert all(c >= 0 for row in inst.costs for c in row)


def test_identical_ranking_family_shares_one_order():
    inst = generate(GenSpec("identical_ranking", n=4, m=9, seed=11))
    orders = rankings(inst)
    assert len(set(orders)) == 1


def test_correlated_family_extremes():
    # rho=1 collapses to identical rows, rho=0 to independent ones
    same = generate(GenSpec("correlated", n=3, m=6, seed=13, rho=1.0))
    assert len(set(same.costs)) == 1
    free = generate(GenSpec("correlated", n=3, m=6, seed=13, rho=0.0))
    assert len(set(free.costs)) == 3


def test_fixture_family():
    inst = generate(GenSpec("fixture", n=2, m=4, seed=0, name="cardinal_43", index=1))
    assert inst.row(0) == (1.0, 3.0, 1.0, 1.0)


def test_generate_determinism_and_seed_sensitivity():
    a = generate(GenSpec("uniform", n=3, m=5, seed=42))
    b = generate(GenSpec("uniform", n=3, m=5, seed=42))
    c = generate(GenSpec("uniform", n=3, m=5, seed=43))
    assert a == b
    assert a != c


def test_generate_validates_parameters():
    with pytest.raises(ValueError, match="unknown family"):
        generate(GenSpec("gaussian", n=2, m=3, seed=0))
    with pytest.raises(ValueError, match="lo <= hi"):
        generate(GenSpec("uniform", n=2, m=3, seed=0, lo=2.0, hi=1.0))
    with pytest.raises(ValueError, match="rate"):
        generate(GenSpec("exponential", n=2, m=3, seed=0, rate=0.0))
    with pytest.raises(ValueError, match="rho"):
        generate(GenSpec("correlated", n=2, m=3, seed=0, rho=1.5))
    with pytest.raises(ValueError, match=">= 1"):
        generate(GenSpec("uniform", n=0, m=3, seed=0))


def test_run_batch_row_counts_and_order():
    specs = [
        GenSpec("uniform", n=3, m=7, seed=100),
        GenSpec("exponential", n=2, m=6, seed=200),
    ]
    rows, failures = run_batch(specs, ["seqpick", "roundrobin"], seeds_per_spec=3)
    assert failures == []
    assert len(rows) == 2 * 2 * 3
    keys = [r[:5] for r in rows]
    assert keys == sorted(keys)
    for row in rows:
        assert row[5] >= 0.0  # max_ratio
        assert row[6] >= 0.0  # runtime_ms


def test_run_batch_skips_bad_cells():
    # dc3 needs n=3; the n=2 spec fails per cell but the batch keeps going
    specs = [GenSpec("uniform", n=2, m=5, seed=1), GenSpec("uniform", n=3, m=5, seed=2)]
    rows, failures = run_batch(specs, ["dc3"], seeds_per_spec=2)
    assert len(rows) == 2
    assert len(failures) == 2
    assert all("n=3" in f.reason for f in failures)


def test_csv_shape_and_rounding(tmp_path):
    rows, _ = run_batch([GenSpec("uniform", n=3, m=7, seed=9)], ["seqpick"], 2)
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(rows)
    path = tmp_path / "out.csv"
    write_csv(rows, str(path))
    assert path.read_text() == text


def test_batch_determinism_modulo_runtime():
    specs = [GenSpec("uniform", n=3, m=8, seed=77), GenSpec("correlated", n=4, m=9, seed=88)]
    algs = ["seqpick", "roundrobin", "randdecl"]
    rows1, _ = run_batch(specs, algs, seeds_per_spec=3, workers=1)
    rows2, _ = run_batch(specs, algs, seeds_per_spec=3, workers=4)
    assert strip_runtime(rows_to_csv(rows1)) == strip_runtime(rows_to_csv(rows2))


def test_strip_runtime_drops_last_column():
    text = "a,b,runtime_ms\n1,2,3.000\n"
    assert strip_runtime(text) == "a,b\n1,2\n"


def test_aggregate():
    rows = [
        ("uniform(0,1)", 2, 4, "seqpick", 0, 1.0, 5.0),
        ("uniform(0,1)", 2, 4, "seqpick", 1, 1.5, 5.0),
        ("uniform(0,1)", 2, 4, "roundrobin", 0, 1.2, 5.0),
    ]
    agg = aggregate(rows)
    cell = agg[("uniform(0,1)", 2, 4, "seqpick")]
    assert cell["runs"] == 2
    assert cell["mean_max_ratio"] == pytest.approx(1.25)
    assert cell["max_max_ratio"] == 1.5
    assert agg[("uniform(0,1)", 2, 4, "roundrobin")]["runs"] == 1


def test_specs_from_config():
    doc = {
        "specs": [{"family": "uniform", "n": 2, "m": 5, "seed": 3}],
        "algorithms": ["seqpick"],
        "seeds_per_spec": 4,
    }
    specs, algs, k = specs_from_config(doc)
    assert specs == [GenSpec("uniform", n=2, m=5, seed=3)]
    assert algs == ["seqpick"] and k == 4


def test_specs_from_config_errors():
    with pytest.raises(ValueError, match='"specs"'):
        specs_from_config({"algorithms": []})
    with pytest.raises(ValueError, match="unknown spec fields"):
        specs_from_config(
            {
                "specs": [{"family": "uniform", "n": 2, "m": 5, "seed": 3, "mean": 1}],
                "algorithms": [],
            }
        )

import pytest

from ngparse.evaluate import EvalRecord, evaluate_grid, read_csv, write_csv
from ngparse.search import SearchConfig


def test_oracle_grid_perfect(g):
    records = evaluate_grid(
        g, ["oracle"], depths=range(7, 10), lengths=range(8, 13), per_cell=10, seed=1
    )
    assert len(records) == 15
    nonempty = [r for r in records if r.count]
    assert nonempty
    assert all(r.exact_match == 1.0 for r in nonempty)
    assert all(r.errors == {} for r in nonempty)


def test_infeasible_cells_are_empty_not_errors(g):
    # depth 6 exists only at length 4
    records = evaluate_grid(g, ["oracle"], depths=[6], lengths=[4, 15], per_cell=5, seed=1)
    by_len = {r.length: r for r in records}
    assert by_len[4].count == 5 and by_len[4].exact_match == 1.0
    assert by_len[15].count == 0


def test_methods_share_programs_and_sort_order(g, small_trained):
    records = evaluate_grid(
        g,
        ["search", "ngsi"],
        depths=[7],
        lengths=[8],
        per_cell=5,
        seed=2,
        model=small_trained,
        search_cfg=SearchConfig(max_depth=12, time_limit_s=30),
    )
    assert [r.method for r in records] == ["ngsi", "search"]
    assert all(r.count == 5 for r in records)


def test_per_cell_validation(g):
    with pytest.raises(ValueError):
        evaluate_grid(g, ["oracle"], [7], [8], per_cell=0, seed=0)
    with pytest.raises(ValueError):
        evaluate_grid(g, ["bogus"], [7], [8], per_cell=1, seed=0)
    with pytest.raises(ValueError):
        evaluate_grid(g, ["ngsi"], [7], [8], per_cell=1, seed=0)  # no model


def test_csv_roundtrip(g, tmp_path):
    records = [
        EvalRecord("oracle", 7, 8, 10, 0.9, 0.001234, 0.002345, {"unparseable": 1}),
        EvalRecord("search", 7, 8, 10, 1.0, 0.1, 0.2, {}),
    ]
    path = tmp_path / "grid.csv"
    write_csv(records, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "method,depth,length,count,exact_match,mean_time_s,p95_time_s,errors"
    assert ",0.9000," in lines[1]
    back = read_csv(path)
    assert [(r.method, r.depth, r.length, r.count, r.exact_match) for r in back] == [
        ("oracle", 7, 8, 10, 0.9),
        ("search", 7, 8, 10, 1.0),
    ]
    assert back[0].errors == {"unparseable": 1}


def test_csv_empty(g, tmp_path):
    path = tmp_path / "empty.csv"
    write_csv([], path)
    assert path.read_text().splitlines() == [
        "method,depth,length,count,exact_match,mean_time_s,p95_time_s,errors"
    ]

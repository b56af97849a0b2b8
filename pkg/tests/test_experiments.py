import json
import math

import jsonschema
import numpy as np
import pytest
from scipy.stats import hypergeom

from compart.experiments import (
    SweepResult,
    SweepSpec,
    group_sizes_for_target_dm,
    ordering_violations,
    run_grid_sweep,
    run_ordering_experiment,
)
from compart.metrics import upsilon_many

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["fields", "rows"],
    "properties": {
        "fields": {"type": "array", "items": {"type": "string"}},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "rho", "target_dm", "realized_dm", "target_d", "realized_d",
                    "edges", "metric", "mean", "stddev", "replicates", "skipped",
                ],
                "properties": {
                    "rho": {"type": "number", "minimum": 0, "maximum": 1},
                    "realized_dm": {"type": "number", "minimum": 0, "maximum": 1},
                    "realized_d": {"type": "number", "minimum": 0, "maximum": 1},
                    "edges": {"type": "integer", "minimum": 0},
                    "metric": {"enum": ["upsilon", "upsilon_tilde", "modularity", "F"]},
                    "mean": {"type": ["number", "null"]},
                    "stddev": {"type": ["number", "null"]},
                    "replicates": {"type": "integer", "minimum": 0},
                    "skipped": {"type": "string"},
                },
            },
        },
    },
}


def _exhaustive_one_big(n, target):
    best = None
    for s in range(1, n + 1):
        dm = s * (s - 1) / (n * (n - 1))
        if best is None or abs(dm - target) < best[0]:
            best = (abs(dm - target), s)
    return [best[1]] + [1] * (n - best[1])


def test_group_sizes_fig4_profile():
    sizes = group_sizes_for_target_dm(100, 0.502, "one_big_group")
    assert sizes == [71] + [1] * 29 == _exhaustive_one_big(100, 0.502)
    assert sum(s * (s - 1) for s in sizes) / 9900 == pytest.approx(0.50202, abs=5e-6)


@pytest.mark.parametrize("style", ["one_big_group", "equal_groups", "mixed"])
def test_group_sizes_extremes(style):
    assert group_sizes_for_target_dm(30, 1.0, style) == [30]
    assert group_sizes_for_target_dm(30, 0.0, style) == [1] * 30


@pytest.mark.parametrize("target", [0.05, 0.2, 0.37, 0.61, 0.88])
def test_one_big_group_matches_exhaustive_search(target):
    assert group_sizes_for_target_dm(57, target, "one_big_group") == _exhaustive_one_big(57, target)


def test_mixed_style_realizes_tenths():
    for target in np.linspace(0.1, 0.9, 9):
        sizes = group_sizes_for_target_dm(40, float(target), "mixed")
        assert sum(sizes) == 40
        assert abs(sum(s * (s - 1) for s in sizes) / 1560 - target) <= 0.01


def _small_spec(**over):
    base = dict(
        rho_values=[0.0, 0.5, 1.0], dm_grid=[0.3, 0.5], d_grid=[0.2, 0.5],
        n=16, replicates=40, seed_base=99, metrics=["upsilon", "F"],
    )
    base.update(over)
    return SweepSpec(**base)


def test_grid_sweep_is_deterministic():
    a = run_grid_sweep(_small_spec())
    b = run_grid_sweep(_small_spec())
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    assert all(r.replicates == 40 for r in a.rows)


def test_grid_cells_independent_of_other_cells():
    full = run_grid_sweep(_small_spec())
    part = run_grid_sweep(_small_spec(rho_values=[0.5], dm_grid=[0.5], d_grid=[0.5]))
    match = [
        r for r in full.rows if (r.rho, r.target_dm, r.target_d) == (0.5, 0.5, 0.5)
    ]
    assert [vars(r) for r in match] == [vars(r) for r in part.rows]


def test_parallel_matches_serial():
    spec = _small_spec(metrics=["upsilon", "modularity"], replicates=10)
    assert run_grid_sweep(spec, workers=2).to_csv() == run_grid_sweep(spec, workers=1).to_csv()


def test_count_and_graph_paths_agree_on_upsilon():
    fast = run_grid_sweep(_small_spec(metrics=["upsilon"]))
    slow = run_grid_sweep(_small_spec(metrics=["upsilon", "upsilon_tilde"]))
    fast_rows = fast.select("upsilon")
    slow_rows = slow.select("upsilon")
    for a, b in zip(fast_rows, slow_rows):
        assert a.mean == pytest.approx(b.mean, abs=1e-12)


def test_extremal_cells():
    # N = 40 with sizes [28, 3, 3, 3, 3] gives D_M = 780/1560 = 0.5 exactly
    spec = SweepSpec(
        rho_values=[0.0, 1.0], dm_grid=[0.5], d_grid=[0.5], n=40,
        replicates=25, seed_base=1, metrics=["upsilon", "F"],
    )
    res = run_grid_sweep(spec)
    top = res.select("upsilon", rho=1.0)[0]
    bottom = res.select("upsilon", rho=0.0)[0]
    assert top.realized_dm == 0.5 and top.realized_d == 0.5
    assert top.mean == 1.0 and top.stddev == 0.0
    assert bottom.mean == -1.0


def test_unrealizable_and_empty_cells_are_skipped():
    spec = SweepSpec(
        rho_values=[0.5], dm_grid=[0.5, 0.45], d_grid=[0.0, 0.5], n=4,
        replicates=5, style="one_big_group",
    )
    rows = run_grid_sweep(spec).rows
    reasons = {(r.target_dm, r.target_d): r.skipped for r in rows}
    assert reasons[(0.5, 0.5)] == ""
    assert "zero edges" in reasons[(0.5, 0.0)]
    assert "not realizable" in reasons[(0.45, 0.5)]
    assert all(math.isnan(r.mean) for r in rows if r.skipped)


def test_neutral_preference_matches_exact_expectation():
    """At rho = 0.5 the within count is hypergeometric; compare the sweep mean to it."""
    n = 40
    total = n * (n - 1) // 2
    spec = SweepSpec(
        rho_values=[0.5], dm_grid=[0.1, 0.3, 0.5, 0.7, 0.9], d_grid=[0.1, 0.5, 0.9],
        n=n, replicates=1500, seed_base=5, metrics=["upsilon"],
    )
    for row in run_grid_sweep(spec).rows:
        w = round(row.realized_dm * total)
        k = row.edges
        x = np.arange(0, k + 1)
        p = hypergeom.pmf(x, total, w, k)
        keep = p > 0
        exact = float((p[keep] * upsilon_many(x[keep] / k, k / total, w / total)).sum())
        assert abs(row.mean - exact) <= 4 * row.stddev / math.sqrt(row.replicates)


def test_standard_error_shrinks_with_replicates():
    small = _small_spec(rho_values=[0.5], replicates=100, seed_base=3)
    big = _small_spec(rho_values=[0.5], replicates=1600, seed_base=4)
    for a, b in zip(run_grid_sweep(small).select("upsilon"), run_grid_sweep(big).select("upsilon")):
        se_a = a.stddev / math.sqrt(a.replicates)
        se_b = b.stddev / math.sqrt(b.replicates)
        assert 2.5 < se_a / se_b < 6.0


def test_ordering_experiment_small():
    res = run_ordering_experiment(
        30, [20] + [1] * 10, [0.1, 0.2, 0.3], [0.0, 0.5, 1.0], 30, seed_base=2,
    )
    assert {r.metric for r in res.rows} == {"modularity", "upsilon"}
    assert ordering_violations(res, "upsilon") == []
    assert all(r.realized_dm == 380 / 870 for r in res.rows)


def test_ordering_experiment_validates_sizes():
    with pytest.raises(ValueError):
        run_ordering_experiment(10, [5, 4], [0.1], [0.5], 5)


def test_ordering_violations_detects_inversions():
    from compart.experiments import SweepRow

    rows = [
        SweepRow(0.0, 0.5, 0.5, 0.2, 0.2, 10, "modularity", 0.1, 0.01, 100),
        SweepRow(0.5, 0.5, 0.5, 0.2, 0.2, 10, "modularity", 0.3, 0.01, 100),
        SweepRow(1.0, 0.5, 0.5, 0.2, 0.2, 10, "modularity", 0.2, 0.01, 100),
    ]
    assert ordering_violations(SweepResult(rows), "modularity") == [(0.2, 0.5, 1.0)]
    # a gap well inside 2 standard errors counts as a tie
    rows[2].mean = 0.2999
    assert ordering_violations(SweepResult(rows), "modularity", se_slack=2.0) == []


def test_csv_round_trip_and_json_schema():
    res = run_grid_sweep(_small_spec(d_grid=[0.0, 0.5]))
    again = SweepResult.from_csv(res.to_csv())
    assert again.to_csv() == res.to_csv()
    jsonschema.validate(json.loads(res.to_json()), SWEEP_SCHEMA)


@pytest.mark.parametrize(
    "bad",
    [
        {"metrics": ["bogus"]},
        {"style": "nope"},
        {"replicates": 0},
        {"rho_values": [1.5]},
        {"d_grid": []},
    ],
)
def test_sweep_spec_validation(bad):
    with pytest.raises(ValueError):
        _small_spec(**bad)

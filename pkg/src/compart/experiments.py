"""Monte Carlo sweeps over (rho, D_M, D) grids and rho-ordering curves.

Every cell draws its replicates from seeds derived purely from
``(seed_base, rho, target D_M, target D, replicate)`` with the grid values
quantized to integers, so cells can run in any order or in parallel and any
sub-grid reproduces the matching cells of the full run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .genmodel import GenConfig, derive_seed, simulate, simulate_within_count
from .graph import Membership, possible_dyads, within_dyads
from .metrics import modularity, upsilon, upsilon_of_graph, upsilon_tilde, within_fraction

METRICS = ("upsilon", "upsilon_tilde", "modularity", "F")
COUNT_METRICS = {"upsilon", "F"}
STYLES = ("one_big_group", "equal_groups", "mixed")
DM_TOLERANCE = 0.01


def _cell_key(rho: float, target_dm: float, target_d: float) -> tuple:
    return tuple(int(round(v * 1e9)) for v in (rho, target_dm, target_d))


def _dm_of_sizes(sizes, n: int) -> float:
    return sum(s * (s - 1) for s in sizes) / (n * (n - 1))


def _near_equal(total: int, groups: int) -> list[int]:
    base, extra = divmod(total, groups)
    return [base + 1] * extra + [base] * (groups - extra)


def group_sizes_for_target_dm(n: int, target_dm: float, style: str = "one_big_group") -> list[int]:
    """Integer group sizes whose D_M is as close as possible to ``target_dm``.

    ``one_big_group`` searches one group of size s plus singletons;
    ``equal_groups`` searches L near-equal groups; ``mixed`` searches one
    group of size s with the rest split into near-equal groups.
    """
    if not 0.0 <= target_dm <= 1.0:
        raise ValueError(f"target D_M must be in [0, 1], got {target_dm}")
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if style == "one_big_group":
        candidates = [[s] + [1] * (n - s) for s in range(1, n + 1)]
    elif style == "equal_groups":
        candidates = [_near_equal(n, L) for L in range(1, n + 1)]
    elif style == "mixed":
        candidates = [[n]]
        for s in range(1, n):
            for L in range(1, n - s + 1):
                candidates.append([s] + _near_equal(n - s, L))
    else:
        raise ValueError(f"unknown style {style!r}; expected one of {STYLES}")
    best = min(candidates, key=lambda sz: (abs(_dm_of_sizes(sz, n) - target_dm), len(sz)))
    return sorted(best, reverse=True)


@dataclass
class SweepSpec:
    rho_values: list
    dm_grid: list
    d_grid: list
    n: int
    replicates: int
    seed_base: int = 0
    metrics: list = field(default_factory=lambda: ["upsilon"])
    style: str = "mixed"
    directed: bool = False

    def __post_init__(self):
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ValueError(f"unknown metrics {bad}; expected a subset of {METRICS}")
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        for name in ("rho_values", "dm_grid", "d_grid"):
            vals = getattr(self, name)
            if not vals or any(not 0.0 <= float(v) <= 1.0 for v in vals):
                raise ValueError(f"{name} must be a non-empty list of values in [0, 1]")


@dataclass
class SweepRow:
    rho: float
    target_dm: float
    realized_dm: float
    target_d: float
    realized_d: float
    edges: int
    metric: str
    mean: float
    stddev: float
    replicates: int
    skipped: str = ""


ROW_FIELDS = [f.name for f in fields(SweepRow)]


@dataclass
class SweepResult:
    rows: list

    def select(self, metric: str, **where) -> list:
        out = [r for r in self.rows if r.metric == metric]
        for key, val in where.items():
            out = [r for r in out if getattr(r, key) == val]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(ROW_FIELDS)
        for row in self.rows:
            writer.writerow([_fmt(getattr(row, f)) for f in ROW_FIELDS])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [
            {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(r).items()}
            for r in self.rows
        ]
        return json.dumps({"fields": ROW_FIELDS, "rows": rows}, indent=1) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SweepResult":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            rows.append(
                SweepRow(
                    rho=float(rec["rho"]),
                    target_dm=float(rec["target_dm"]),
                    realized_dm=float(rec["realized_dm"]),
                    target_d=float(rec["target_d"]),
                    realized_d=float(rec["realized_d"]),
                    edges=int(rec["edges"]),
                    metric=rec["metric"],
                    mean=float(rec["mean"]),
                    stddev=float(rec["stddev"]),
                    replicates=int(rec["replicates"]),
                    skipped=rec["skipped"],
                )
            )
        return cls(rows)


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


@dataclass(frozen=True)
class _Cell:
    key: tuple
    rho: float
    sizes: tuple
    target_dm: float
    target_d: float
    k: int
    replicates: int
    seed_base: int
    metrics: tuple
    directed: bool
    skipped: str = ""


def _run_cell(cell: _Cell) -> list[SweepRow]:
    membership = Membership.from_sizes(cell.sizes)
    n = membership.n
    total = possible_dyads(n, cell.directed)
    realized_dm = within_dyads(membership, cell.directed) / total
    realized_d = cell.k / total

    def row(metric, mean, sd, reps, skipped=""):
        return SweepRow(
            cell.rho, cell.target_dm, realized_dm, cell.target_d, realized_d,
            cell.k, metric, mean, sd, reps, skipped,
        )

    if cell.skipped:
        return [row(mt, math.nan, math.nan, 0, cell.skipped) for mt in cell.metrics]

    need_graph = any(mt not in COUNT_METRICS for mt in cell.metrics)
    values = {mt: np.empty(cell.replicates) for mt in cell.metrics}
    for r in range(cell.replicates):
        cfg = GenConfig(
            membership, cell.k, cell.rho, cell.directed,
            derive_seed(cell.seed_base, *cell.key, r),
        )
        if need_graph:
            g = simulate(cfg)
            F = within_fraction(g, membership)
            for mt in cell.metrics:
                if mt == "upsilon":
                    values[mt][r] = upsilon_of_graph(g, membership)
                elif mt == "F":
                    values[mt][r] = F
                elif mt == "modularity":
                    values[mt][r] = modularity(g, membership)
                else:
                    values[mt][r] = upsilon_tilde(g, membership)
        else:
            F = simulate_within_count(cfg) / cell.k
            for mt in cell.metrics:
                values[mt][r] = F if mt == "F" else upsilon(F, realized_d, realized_dm)

    out = []
    for mt in cell.metrics:
        v = values[mt]
        sd = float(v.std(ddof=1)) if len(v) > 1 else 0.0
        out.append(row(mt, float(v.mean()), sd, cell.replicates))
    return out


def default_workers() -> int:
    env = os.environ.get("COMPART_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _execute(cells: Sequence[_Cell], workers: int) -> SweepResult:
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = [_run_cell(c) for c in cells]
    return SweepResult([row for chunk in chunks for row in chunk])


def _skip_reason(k: int, realized_dm: float, target_dm: Optional[float]) -> str:
    if target_dm is not None and abs(realized_dm - target_dm) > DM_TOLERANCE:
        return f"D_M target {target_dm} not realizable within {DM_TOLERANCE} (best {realized_dm:.6f})"
    if k == 0:
        return "density target rounds to zero edges"
    return ""


def run_grid_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Replicate-averaged metrics for every (rho, D_M, D) cell of ``spec``.

    Cells whose D_M target cannot be realized within 0.01, or whose density
    target rounds to zero edges, are emitted with ``skipped`` set.
    """
    total = possible_dyads(spec.n, spec.directed)
    cells = []
    for rho in spec.rho_values:
        for target_dm in spec.dm_grid:
            sizes = group_sizes_for_target_dm(spec.n, target_dm, spec.style)
            realized_dm = _dm_of_sizes(sizes, spec.n)
            for target_d in spec.d_grid:
                k = round(target_d * total)
                cells.append(
                    _Cell(
                        key=_cell_key(rho, target_dm, target_d),
                        rho=float(rho),
                        sizes=tuple(sizes),
                        target_dm=float(target_dm),
                        target_d=float(target_d),
                        k=k,
                        replicates=spec.replicates,
                        seed_base=spec.seed_base,
                        metrics=tuple(spec.metrics),
                        directed=spec.directed,
                        skipped=_skip_reason(k, realized_dm, target_dm),
                    )
                )
    return _execute(cells, workers)


def run_ordering_experiment(
    n: int,
    group_sizes: Sequence[int],
    d_grid: Sequence[float],
    rho_values: Sequence[float],
    replicates: int,
    seed_base: int = 0,
    metrics: Sequence[str] = ("modularity", "upsilon"),
    directed: bool = False,
    workers: int = 1,
) -> SweepResult:
    """Mean Q and upsilon per (rho, D) for a fixed group-size profile."""
    if sum(group_sizes) != n:
        raise ValueError(f"group sizes sum to {sum(group_sizes)}, expected N={n}")
    bad = [m for m in metrics if m not in METRICS]
    if bad:
        raise ValueError(f"unknown metrics {bad}")
    total = possible_dyads(n, directed)
    dm = _dm_of_sizes(group_sizes, n)
    cells = []
    for rho in rho_values:
        for target_d in d_grid:
            k = round(target_d * total)
            cells.append(
                _Cell(
                    key=_cell_key(rho, dm, target_d),
                    rho=float(rho),
                    sizes=tuple(group_sizes),
                    target_dm=dm,
                    target_d=float(target_d),
                    k=k,
                    replicates=replicates,
                    seed_base=seed_base,
                    metrics=tuple(metrics),
                    directed=directed,
                    skipped=_skip_reason(k, dm, None),
                )
            )
    return _execute(cells, workers)


def ordering_violations(result: SweepResult, metric: str, se_slack: float = 0.0) -> list[tuple]:
    """(D, rho_low, rho_high) triples where the metric mean fails to increase with rho.

    A pair counts as a violation only when the lower-rho mean exceeds the
    higher-rho mean by more than ``se_slack`` combined standard errors.
    """
    by_d: dict = {}
    for r in result.select(metric):
        if not r.skipped:
            by_d.setdefault(r.target_d, []).append(r)
    out = []
    for d, rows in sorted(by_d.items()):
        rows.sort(key=lambda r: r.rho)
        for lo, hi in zip(rows, rows[1:]):
            se = math.hypot(lo.stddev / math.sqrt(lo.replicates), hi.stddev / math.sqrt(hi.replicates))
            gap = hi.mean - lo.mean
            if (gap <= 0) if se_slack == 0 else (gap < -se_slack * se):
                out.append((d, lo.rho, hi.rho))
    return out

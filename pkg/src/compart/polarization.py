"""Per-period compartmentalization of co-affiliation networks and correlation tests.

Actors tied to shared items (legislators cosponsoring bills, say) are
projected to a weighted actor graph; each period yields an upsilon and a
modularity value, and Hotelling's test for dependent correlations checks
which of the two series tracks an external ground-truth series more closely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, DegenerateInputError, GraphValidationError
from .graph import Graph, Membership, max_within_density, possible_dyads, within_fraction
from .metrics import modularity, upsilon


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    n_actors: int
    n_items: int
    ties: np.ndarray  # (k, 2) array of (actor, item)

    @classmethod
    def from_ties(cls, n_actors: int, n_items: int, ties: Iterable[Sequence[int]]) -> "BipartiteGraph":
        arr = np.asarray(list(ties), dtype=np.int64).reshape(-1, 2)
        if len(arr):
            if arr[:, 0].min() < 0 or arr[:, 0].max() >= n_actors:
                raise GraphValidationError("actor index out of range")
            if arr[:, 1].min() < 0 or arr[:, 1].max() >= n_items:
                raise GraphValidationError("item index out of range")
            if len(np.unique(arr[:, 0] * n_items + arr[:, 1])) != len(arr):
                raise GraphValidationError("duplicate actor-item tie")
        arr.setflags(write=False)
        return cls(int(n_actors), int(n_items), arr)

    def incidence(self) -> np.ndarray:
        b = np.zeros((self.n_actors, self.n_items), dtype=np.int64)
        b[self.ties[:, 0], self.ties[:, 1]] = 1
        return b


def project_one_mode(b: BipartiteGraph) -> Graph:
    """Weighted undirected actor graph; weight = number of shared items."""
    inc = b.incidence()
    co = inc @ inc.T
    src, dst = np.nonzero(np.triu(co, 1))
    return Graph.from_edges(
        b.n_actors, zip(src, dst), directed=False, weights=co[src, dst].astype(float)
    )


def weighted_density(g: Graph) -> float:
    """Sum of weights over (mean present weight x possible dyads); 0 if edgeless.

    Algebraically this equals the binary density; it is evaluated as written
    so the weighted pipeline follows the standard weighted-density recipe.
    """
    if g.n_edges == 0:
        return 0.0
    w = g.weights
    return float(w.sum() / (w.mean() * possible_dyads(g.n, g.directed)))


@dataclass(frozen=True)
class PeriodMetrics:
    upsilon: float
    modularity: float
    F: float
    D: float
    D_M: float


def period_metrics(b: BipartiteGraph, m: Membership) -> PeriodMetrics:
    if m.n != b.n_actors:
        raise GraphValidationError(f"membership covers {m.n} actors, bipartite graph has {b.n_actors}")
    g = project_one_mode(b)
    D = weighted_density(g)
    D_M = max_within_density(m)
    if g.n_edges == 0:
        return PeriodMetrics(0.0, math.nan, math.nan, 0.0, D_M)
    F = within_fraction(g, m)
    return PeriodMetrics(upsilon(F, D, D_M), modularity(g, m), F, D, D_M)


def demean_standardize(series: Sequence[float]) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if len(x) < 2:
        raise DegenerateInputError("need at least two values to standardize")
    sd = x.std(ddof=1)
    if not sd > 0:
        raise DegenerateInputError("series has zero variance")
    return (x - x.mean()) / sd


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    return float(np.dot(a, b) / math.sqrt(np.dot(a, a) * np.dot(b, b)))


# Student t tail via the regularized incomplete beta function, evaluated with
# the modified Lentz continued fraction.
_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Upper-tail probability P(T > t) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


@dataclass(frozen=True)
class HotellingResult:
    t: float
    df: int
    p: float
    p_one_sided: float
    r13: float
    r23: float
    r12: float

    def to_dict(self) -> dict:
        return {
            "t": self.t, "df": self.df, "p_two_sided": self.p,
            "p_one_sided": self.p_one_sided,
            "r_x1_y": self.r13, "r_x2_y": self.r23, "r_x1_x2": self.r12,
        }


def hotelling_t(r12: float, r13: float, r23: float, n: int) -> float:
    """Hotelling's t for H0: corr(x1, y) == corr(x2, y) given all three correlations."""
    # symmetric in (r13, r23) so swapping x1 and x2 negates t exactly
    det = 1.0 - r12 * r12 - (r13 * r13 + r23 * r23) + 2.0 * r12 * (r13 * r23)
    if r13 == r23:
        return 0.0
    if det <= 0:
        return math.copysign(math.inf, r13 - r23)
    return (r13 - r23) * math.sqrt((n - 3) * (1.0 + r12) / (2.0 * det))


def hotelling_compare(x1: Sequence[float], x2: Sequence[float], y: Sequence[float]) -> HotellingResult:
    """Test whether x1 and x2 correlate equally with y (dependent correlations).

    ``p`` is two-sided; ``p_one_sided`` tests corr(x1, y) > corr(x2, y).
    """
    x1, x2, y = (np.asarray(v, dtype=float) for v in (x1, x2, y))
    n = len(y)
    if not len(x1) == len(x2) == n:
        raise DegenerateInputError("series must have equal length")
    if n < 4:
        raise DegenerateInputError(f"need at least 4 observations, got {n}")
    for name, v in (("x1", x1), ("x2", x2), ("y", y)):
        if not np.all(np.isfinite(v)):
            raise DegenerateInputError(f"{name} contains non-finite values")
        if np.ptp(v) == 0:
            raise DegenerateInputError(f"{name} is constant")
    r13, r23, r12 = _corr(x1, y), _corr(x2, y), _corr(x1, x2)
    df = n - 3
    t = hotelling_t(r12, r13, r23, n)
    p = min(1.0, 2.0 * t_sf(abs(t), df))
    return HotellingResult(t, df, p, t_sf(t, df), r13, r23, r12)


def synthetic_cosponsorship(
    n_periods: int = 13,
    n_actors: int = 60,
    n_items: int = 150,
    seed: int = 20240101,
    noise: float = 0.05,
):
    """Synthetic two-party co-affiliation data with a drifting polarization level.

    Returns ``(periods, ties, memberships, ground_truth)`` where ``ties`` and
    ``memberships`` map each period label to ``(actor_id, item_id)`` and
    ``(actor_id, party)`` lists, and ``ground_truth`` maps period to the
    polarization level plus noise.
    """
    rng = np.random.default_rng(seed)
    first = 96
    periods = [str(first + i) for i in range(n_periods)]
    level = np.clip(0.55 + 0.035 * np.arange(n_periods) + rng.normal(0, 0.03, n_periods), 0, 0.98)
    ties, members, truth = {}, {}, {}
    for p, pol in zip(periods, level):
        majority = int(rng.integers(n_actors // 2 + 1, int(n_actors * 0.8) + 1))
        party = np.array(["D"] * majority + ["R"] * (n_actors - majority))
        rng.shuffle(party)
        actors = [f"A{i:03d}" for i in range(n_actors)]
        members[p] = list(zip(actors, party.tolist()))
        rows = []
        for item in range(n_items):
            sponsor = int(rng.integers(n_actors))
            n_co = int(rng.integers(1, 6))
            same = np.flatnonzero((party == party[sponsor]) & (np.arange(n_actors) != sponsor))
            other = np.flatnonzero(party != party[sponsor])
            chosen = {sponsor}
            for _ in range(n_co):
                pool = same if rng.random() < pol else other
                chosen.add(int(rng.choice(pool)))
            rows.extend((actors[a], f"B{p}-{item:04d}") for a in sorted(chosen))
        ties[p] = rows
        truth[p] = float(pol + rng.normal(0, noise))
    return periods, ties, members, truth


@dataclass
class PolarizationReport:
    periods: list
    metrics: list
    ground_truth: np.ndarray
    comparison: HotellingResult

    @property
    def upsilon(self) -> np.ndarray:
        return np.array([m.upsilon for m in self.metrics])

    @property
    def modularity(self) -> np.ndarray:
        return np.array([m.modularity for m in self.metrics])

    def to_csv(self) -> str:
        cols = {
            "upsilon_z": demean_standardize(self.upsilon),
            "modularity_z": demean_standardize(self.modularity),
            "ground_truth_z": demean_standardize(self.ground_truth),
        }
        out = ["period,upsilon,modularity,ground_truth,F,D,D_M,upsilon_z,modularity_z,ground_truth_z"]
        for i, (p, m) in enumerate(zip(self.periods, self.metrics)):
            vals = [m.upsilon, m.modularity, float(self.ground_truth[i]), m.F, m.D, m.D_M]
            vals += [float(cols[c][i]) for c in ("upsilon_z", "modularity_z", "ground_truth_z")]
            out.append(",".join([p] + [repr(v) for v in vals]))
        return "\n".join(out) + "\n"

    def to_dict(self) -> dict:
        return {"periods": list(self.periods), "n": len(self.periods), **self.comparison.to_dict()}


def analyze_periods(ties: dict, memberships: dict, ground_truth: dict) -> PolarizationReport:
    """Per-period upsilon and Q on projected graphs, compared against ``ground_truth``.

    ``ties`` maps period -> [(actor, item)], ``memberships`` maps period ->
    {actor: group}; periods follow the order of ``ground_truth``. Actors with a
    group but no ties stay in the projection as isolated nodes.
    """
    periods = list(ground_truth)
    for name, table in (("actor-item ties", ties), ("memberships", memberships)):
        missing = [p for p in periods if p not in table]
        extra = [p for p in table if p not in ground_truth]
        if missing or extra:
            parts = []
            if missing:
                parts.append(f"missing periods {missing}")
            if extra:
                parts.append(f"periods without ground truth {extra}")
            raise AlignmentError(f"{name}: " + "; ".join(parts))
    if len(periods) < 4:
        raise DegenerateInputError(f"need at least 4 periods, got {len(periods)}")

    results = []
    for p in periods:
        members = memberships[p]
        actors = list(members)
        index = {a: i for i, a in enumerate(actors)}
        unknown = sorted({a for a, _ in ties[p] if a not in index})
        if unknown:
            raise GraphValidationError(
                f"period {p!r}: {len(unknown)} actor(s) without a group: {unknown[:5]}"
            )
        items: dict = {}
        pairs = [(index[a], items.setdefault(it, len(items))) for a, it in ties[p]]
        b = BipartiteGraph.from_ties(len(actors), max(len(items), 1), pairs)
        results.append(period_metrics(b, Membership.from_labels(members[a] for a in actors)))

    truth = np.array([ground_truth[p] for p in periods], dtype=float)
    ups = np.array([r.upsilon for r in results])
    mod = np.array([r.modularity for r in results])
    return PolarizationReport(periods, results, truth, hotelling_compare(ups, mod, truth))


def synthetic_fixture_csv(**kwargs) -> dict:
    """CSV texts (ties, membership, ground truth) for :func:`synthetic_cosponsorship`."""
    periods, ties, members, truth = synthetic_cosponsorship(**kwargs)
    tie_rows = ["period,actor_id,item_id"]
    member_rows = ["period,actor_id,group"]
    truth_rows = ["period,value"]
    for p in periods:
        tie_rows += [f"{p},{a},{i}" for a, i in ties[p]]
        member_rows += [f"{p},{a},{g}" for a, g in members[p]]
        truth_rows.append(f"{p},{truth[p]!r}")
    return {
        "ties.csv": "\n".join(tie_rows) + "\n",
        "membership.csv": "\n".join(member_rows) + "\n",
        "ground_truth.csv": "\n".join(truth_rows) + "\n",
    }

"""Graph and membership containers plus the density quantities measures rely on.

Graphs are simple (no self-loops, no repeated dyads) and immutable. Undirected
edges are stored with ``src < dst``. Counts are kept as Python/numpy integers
so ratios such as the density come out as correctly rounded floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .errors import DegenerateGraphError, GraphValidationError, NoEdgesError


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def possible_dyads(n: int, directed: bool) -> int:
    """Number of node pairs that may host an edge."""
    if n < 2:
        raise DegenerateGraphError(f"need at least 2 nodes, got n={n}")
    return n * (n - 1) if directed else n * (n - 1) // 2


@dataclass(frozen=True, eq=False)
class Graph:
    """A simple graph on nodes ``0..n-1``.

    Build instances with :meth:`from_edges`; the raw constructor assumes the
    arrays are already validated and canonical.
    """

    n: int
    directed: bool
    src: np.ndarray
    dst: np.ndarray
    weight: Optional[np.ndarray] = None

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Sequence[int]],
        directed: bool = False,
        weights: Optional[Iterable[float]] = None,
    ) -> "Graph":
        n = int(n)
        if n < 1:
            raise GraphValidationError(f"node count must be positive, got {n}")
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        src, dst = pairs[:, 0].copy(), pairs[:, 1].copy()
        if len(src) and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise GraphValidationError(f"edge endpoint outside [0, {n})")
        if np.any(src == dst):
            i = int(np.flatnonzero(src == dst)[0])
            raise GraphValidationError(f"self-loop at node {int(src[i])}")
        if not directed:
            lo, hi = np.minimum(src, dst), np.maximum(src, dst)
            src, dst = lo, hi
        keys = src * n + dst
        if len(np.unique(keys)) != len(keys):
            raise GraphValidationError("duplicate dyad in edge list")

        w = None
        if weights is not None:
            w = np.asarray(list(weights), dtype=np.float64)
            if w.shape != src.shape:
                raise GraphValidationError("weights must match edges one to one")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise GraphValidationError("edge weights must be finite and strictly positive")
            w = _frozen(w)
        return cls(n, bool(directed), _frozen(src), _frozen(dst), w)

    @classmethod
    def from_adjacency(cls, adj: np.ndarray, directed: bool = False) -> "Graph":
        """Build from a dense matrix; nonzero entries become edges with that weight."""
        adj = np.asarray(adj)
        n = adj.shape[0]
        if not directed:
            if not np.array_equal(adj, adj.T):
                raise GraphValidationError("undirected adjacency must be symmetric")
            src, dst = np.nonzero(np.triu(adj, 1))
        else:
            src, dst = np.nonzero(adj)
        vals = adj[src, dst]
        weighted = not np.all(vals == 1)
        return cls.from_edges(
            n, zip(src, dst), directed, weights=vals if weighted else None
        )

    @property
    def n_edges(self) -> int:
        return int(len(self.src))

    @property
    def is_weighted(self) -> bool:
        return self.weight is not None

    @property
    def weights(self) -> np.ndarray:
        if self.weight is None:
            return np.ones(self.n_edges)
        return self.weight

    def total_weight(self):
        """Sum of edge weights; an exact ``int`` for unweighted graphs."""
        if self.weight is None:
            return self.n_edges
        return float(self.weight.sum())

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def adjacency(self) -> np.ndarray:
        """Dense adjacency matrix (symmetric when undirected)."""
        a = np.zeros((self.n, self.n))
        a[self.src, self.dst] = self.weights
        if not self.directed:
            a[self.dst, self.src] = self.weights
        return a

    def degrees(self) -> np.ndarray:
        """Weighted total degree; in + out for directed graphs."""
        w = self.weights
        return np.bincount(self.src, w, self.n) + np.bincount(self.dst, w, self.n)


@dataclass(frozen=True, eq=False)
class Membership:
    """Community assignment for each node, labels densified to ``0..L-1``."""

    labels: np.ndarray
    group_sizes: np.ndarray = field(init=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or len(labels) == 0:
            raise GraphValidationError("membership must be a non-empty 1-d label vector")
        if not np.issubdtype(labels.dtype, np.integer):
            raise GraphValidationError("labels must be integers; use Membership.from_labels")
        labels = labels.astype(np.int64)
        if labels.min() < 0:
            raise GraphValidationError("labels must be non-negative")
        sizes = np.bincount(labels)
        if np.any(sizes == 0):
            missing = int(np.flatnonzero(sizes == 0)[0])
            raise GraphValidationError(f"community {missing} is empty; labels must be dense")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "group_sizes", _frozen(sizes))

    @classmethod
    def from_labels(cls, labels: Iterable[Hashable]) -> "Membership":
        """Map arbitrary labels to dense integers in first-appearance order."""
        index: dict = {}
        dense = [index.setdefault(lab, len(index)) for lab in labels]
        return cls(np.asarray(dense, dtype=np.int64))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "Membership":
        """Contiguous blocks: the first ``sizes[0]`` nodes form community 0, and so on."""
        sizes = [int(s) for s in sizes]
        if any(s <= 0 for s in sizes):
            raise GraphValidationError("group sizes must be positive")
        return cls(np.repeat(np.arange(len(sizes)), sizes))

    @property
    def n(self) -> int:
        return int(len(self.labels))

    @property
    def n_groups(self) -> int:
        return int(len(self.group_sizes))

    def co_membership(self) -> np.ndarray:
        """The 0/1 matrix M with ones on the diagonal included."""
        return (self.labels[:, None] == self.labels[None, :]).astype(np.int64)


@dataclass(frozen=True)
class DensityProfile:
    D: float
    D_M: float
    D_in: float
    D_out: float


def _check_pair(g: Graph, m: Membership) -> None:
    if m.n != g.n:
        raise GraphValidationError(f"membership covers {m.n} nodes but graph has {g.n}")


def within_dyads(m: Membership, directed: bool = False) -> int:
    sizes = m.group_sizes.astype(object)
    total = int(sum(s * (s - 1) for s in sizes))
    return total if directed else total // 2


def density(g: Graph) -> float:
    """Binary density: present dyads over possible dyads (weights ignored)."""
    return g.n_edges / possible_dyads(g.n, g.directed)


def max_within_density(m: Membership, directed: bool = False) -> float:
    """D_M, the largest density reachable using only within-community dyads.

    The ratio is the same for both directednesses; the flag is accepted so
    callers can pass a graph's setting through unchanged.
    """
    return within_dyads(m, directed) / possible_dyads(m.n, directed)


def _within_mask(g: Graph, m: Membership) -> np.ndarray:
    return m.labels[g.src] == m.labels[g.dst]


def within_weight(g: Graph, m: Membership):
    """Total weight of edges joining co-members (an ``int`` when unweighted)."""
    _check_pair(g, m)
    mask = _within_mask(g, m)
    if g.weight is None:
        return int(mask.sum())
    return float(g.weight[mask].sum())


def within_fraction(g: Graph, m: Membership) -> float:
    """F: share of edge weight falling inside communities."""
    _check_pair(g, m)
    if g.n_edges == 0:
        raise NoEdgesError("within fraction is undefined for an edgeless graph")
    return within_weight(g, m) / g.total_weight()


def density_profile(g: Graph, m: Membership) -> DensityProfile:
    _check_pair(g, m)
    total = possible_dyads(g.n, g.directed)
    n_in = int(_within_mask(g, m).sum())
    D = g.n_edges / total
    D_in = n_in / total
    return DensityProfile(
        D=D,
        D_M=max_within_density(m, g.directed),
        D_in=D_in,
        D_out=(g.n_edges - n_in) / total,
    )

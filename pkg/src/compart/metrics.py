"""Compartmentalization coefficient, its degree-normalized variant, and modularity."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import BoundaryError, DomainError, NoEdgesError
from .graph import (
    Graph,
    Membership,
    _check_pair,
    density,
    max_within_density,
    within_fraction,
)

FEASIBILITY_TOL = 1e-12
BRANCH_TOL = 1e-12


@dataclass(frozen=True)
class MixMatrix:
    e: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray


@dataclass(frozen=True)
class CompartmentalizationSummary:
    F: Optional[float]
    D: float
    D_M: float
    upsilon: float
    upsilon_tilde: float
    modularity: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _mix_counts(g: Graph, m: Membership):
    """Group-to-group edge mass and its total.

    Unweighted graphs give an integer matrix; undirected edges are counted
    once in each direction so the matrix is symmetric and no halves appear.
    """
    _check_pair(g, m)
    L = m.n_groups
    a, b = m.labels[g.src], m.labels[g.dst]
    if g.weight is None:
        counts = np.zeros((L, L), dtype=np.int64)
        w = np.ones(g.n_edges, dtype=np.int64)
    else:
        counts = np.zeros((L, L))
        w = g.weight
    np.add.at(counts, (a, b), w)
    if not g.directed:
        np.add.at(counts, (b, a), w)
    return counts, counts.sum()


def mix_matrix(g: Graph, m: Membership) -> MixMatrix:
    if g.n_edges == 0:
        raise NoEdgesError("mixing matrix is undefined for an edgeless graph")
    counts, total = _mix_counts(g, m)
    e = counts / total
    return MixMatrix(e=e, row_sums=e.sum(axis=1), col_sums=e.sum(axis=0))


def modularity(g: Graph, m: Membership) -> float:
    """Q = sum_i e_ii - sum_i a_i b_i with a, b the row and column sums of e.

    For unweighted graphs the value is evaluated in exact rational
    arithmetic and rounded once.
    """
    if g.n_edges == 0:
        raise NoEdgesError("modularity is undefined for an edgeless graph")
    counts, total = _mix_counts(g, m)
    rows, cols = counts.sum(axis=1), counts.sum(axis=0)
    if counts.dtype.kind == "i":
        total = int(total)
        trace = int(np.trace(counts))
        cross = sum(int(r) * int(c) for r, c in zip(rows, cols))
        return float(Fraction(trace * total - cross, total * total))
    e_trace = np.trace(counts) / total
    return float(e_trace - np.dot(rows / total, cols / total))


def check_feasible(F: float, D: float, D_M: float) -> None:
    """Raise DomainError unless some graph could produce (F, D, D_M)."""
    eps = FEASIBILITY_TOL
    for name, val in (("F", F), ("D", D), ("D_M", D_M)):
        if not (-eps <= val <= 1 + eps):
            raise DomainError(f"{name}={val!r} outside [0, 1]")
    if F * D > D_M + eps:
        raise DomainError(f"F*D={F * D!r} exceeds D_M={D_M!r}")
    if (1 - F) * D > (1 - D_M) + eps:
        raise DomainError(f"(1-F)*D={(1 - F) * D!r} exceeds 1-D_M={1 - D_M!r}")


def upsilon(F: float, D: float, D_M: float) -> float:
    """Compartmentalization of a graph summarized by (F, D, D_M).

    Above the neutral line (F >= D_M) the excess within-share is scaled by
    1/(1 - D_M) and shrunk by the squared distance of D from D_M; below it
    the deficit is scaled by 1/D_M and shrunk by the distance from 1 - D_M.
    Returns 0 for an edgeless graph (D == 0) and whenever F == D_M.
    """
    check_feasible(F, D, D_M)
    if D == 0:
        return 0.0
    diff = F - D_M
    if abs(diff) < BRANCH_TOL:
        return 0.0
    if diff > 0:
        return diff * (1.0 - (D - D_M) ** 2) / (1.0 - D_M)
    return diff * (1.0 - (D - (1.0 - D_M)) ** 2) / D_M


def upsilon_many(F, D, D_M) -> np.ndarray:
    """Vectorized :func:`upsilon` with the same conventions and checks."""
    F, D, D_M = np.broadcast_arrays(
        np.asarray(F, float), np.asarray(D, float), np.asarray(D_M, float)
    )
    eps = FEASIBILITY_TOL
    bad = (
        (F < -eps) | (F > 1 + eps) | (D < -eps) | (D > 1 + eps)
        | (D_M < -eps) | (D_M > 1 + eps)
        | (F * D > D_M + eps) | ((1 - F) * D > (1 - D_M) + eps)
    )
    if np.any(bad):
        i = np.flatnonzero(bad.ravel())[0]
        raise DomainError(
            f"infeasible triple F={F.ravel()[i]!r}, D={D.ravel()[i]!r}, D_M={D_M.ravel()[i]!r}"
        )
    diff = F - D_M
    zero = (D == 0) | (np.abs(diff) < BRANCH_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        upper = diff * (1.0 - (D - D_M) ** 2) / (1.0 - D_M)
        lower = diff * (1.0 - (D - (1.0 - D_M)) ** 2) / D_M
    out = np.where(diff > 0, upper, lower)
    return np.where(zero, 0.0, out)


def upsilon_partials(F: float, D: float, D_M: float) -> tuple[float, float]:
    """Exact partial derivatives (dF, dD) of :func:`upsilon` off the branch boundary.

    Only the [0, 1] ranges are enforced: the derivative of each branch
    expression is defined even where no graph realizes the triple.
    """
    for name, val in (("F", F), ("D", D), ("D_M", D_M)):
        if not (-FEASIBILITY_TOL <= val <= 1 + FEASIBILITY_TOL):
            raise DomainError(f"{name}={val!r} outside [0, 1]")
    diff = F - D_M
    if abs(diff) < BRANCH_TOL:
        raise BoundaryError("upsilon is not differentiable at F == D_M")
    if diff > 0:
        dF = (1.0 - (D - D_M) ** 2) / (1.0 - D_M)
        dD = -2.0 * diff * (D - D_M) / (1.0 - D_M)
    else:
        dF = (1.0 - (D - (1.0 - D_M)) ** 2) / D_M
        dD = -2.0 * diff * (D - (1.0 - D_M)) / D_M
    return dF, dD


def upsilon_of_graph(g: Graph, m: Membership) -> float:
    _check_pair(g, m)
    if g.n_edges == 0:
        return 0.0
    return upsilon(within_fraction(g, m), density(g), max_within_density(m, g.directed))


def upsilon_tilde(g: Graph, m: Membership) -> float:
    """(F - D_M) scaled by mean degree over max degree; 0 for edgeless graphs."""
    _check_pair(g, m)
    if g.n_edges == 0:
        return 0.0
    deg = g.degrees()
    ratio = deg.mean() / deg.max()
    return float((within_fraction(g, m) - max_within_density(m, g.directed)) * ratio)


def summarize(g: Graph, m: Membership) -> CompartmentalizationSummary:
    _check_pair(g, m)
    edgeless = g.n_edges == 0
    return CompartmentalizationSummary(
        F=None if edgeless else within_fraction(g, m),
        D=density(g),
        D_M=max_within_density(m, g.directed),
        upsilon=upsilon_of_graph(g, m),
        upsilon_tilde=upsilon_tilde(g, m),
        modularity=None if edgeless else modularity(g, m),
    )

"""Preference-based block model that places edges one at a time.

At each step the next edge is within-community with probability

    gamma = w * rho / (w * rho + b * (1 - rho))

where ``w`` and ``b`` count the still-empty within and between dyads. The
dyad itself is then drawn uniformly from the chosen pool without
replacement. Dividing ``w`` and ``b`` by the total dyad count recovers the
density form ``(D_M - D_in)`` and ``((1 - D_M) - D_out)``.

Degree heterogeneity is not modelled: dyads are uniform within a pool. A
weighted draw could be slotted into :meth:`DyadPool.draw`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GraphFullError, PoolExhaustedError
from .graph import DensityProfile, Graph, Membership, possible_dyads, within_dyads


@dataclass(frozen=True)
class GenConfig:
    membership: Membership
    k: int
    rho: float
    directed: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        n = self.membership.n
        if n < 2:
            raise ConfigError("need at least 2 nodes to place edges")
        if self.k < 0:
            raise ConfigError(f"edge budget must be non-negative, got {self.k}")
        cap = possible_dyads(n, self.directed)
        if self.k > cap:
            raise ConfigError(f"edge budget {self.k} exceeds the {cap} available dyads")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def n(self) -> int:
        return self.membership.n

    @property
    def within_capacity(self) -> int:
        return within_dyads(self.membership, self.directed)

    @property
    def between_capacity(self) -> int:
        return possible_dyads(self.n, self.directed) - self.within_capacity


class DyadPool:
    """Unoccupied dyads of one kind, encoded as ``u * n + v``.

    Draws swap the chosen slot with the last one and shrink the pool, so a
    uniform draw without replacement costs O(1).
    """

    def __init__(self, codes, n: int):
        self._codes = list(codes)
        self.n = n

    def __len__(self) -> int:
        return len(self._codes)

    def draw(self, u: float) -> tuple[int, int]:
        """Remove and return the dyad at position ``floor(u * len)``; ``u`` in [0, 1)."""
        codes = self._codes
        if not codes:
            raise PoolExhaustedError("dyad pool is empty")
        i = min(int(u * len(codes)), len(codes) - 1)
        code = codes[i]
        codes[i] = codes[-1]
        codes.pop()
        return divmod(code, self.n)

    def sample(self, rng: np.random.Generator) -> tuple[int, int]:
        return self.draw(rng.random())


def dyad_pools(m: Membership, directed: bool = False) -> tuple[DyadPool, DyadPool]:
    """All within and between dyads for the membership, as two pools."""
    n = m.n
    if directed:
        i, j = np.nonzero(~np.eye(n, dtype=bool))
    else:
        i, j = np.triu_indices(n, 1)
    same = m.labels[i] == m.labels[j]
    codes = i * n + j
    return DyadPool(codes[same].tolist(), n), DyadPool(codes[~same].tolist(), n)


def gamma_from_counts(w: int, b: int, rho: float) -> float:
    """Within-edge probability given ``w`` free within and ``b`` free between dyads."""
    if w <= 0 and b <= 0:
        raise GraphFullError("no free dyads remain")
    num = w * rho
    den = num + b * (1.0 - rho)
    if den == 0:
        return 1.0 if b == 0 else 0.0
    return num / den


def gamma(profile: DensityProfile, rho: float) -> float:
    """Within-edge probability from the current density profile."""
    w = profile.D_M - profile.D_in
    b = (1.0 - profile.D_M) - profile.D_out
    w = 0.0 if w < 1e-15 else w
    b = 0.0 if b < 1e-15 else b
    return gamma_from_counts(w, b, rho)


def _indicator_draws(cfg: GenConfig) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(cfg.seed)
    return rng.random(cfg.k), rng.random(cfg.k)


def simulate_edges(cfg: GenConfig) -> tuple[list[tuple[int, int]], list[bool]]:
    """The placed dyads in order, with each step's within/between indicator."""
    within, between = dyad_pools(cfg.membership, cfg.directed)
    u_kind, u_pick = _indicator_draws(cfg)
    rho = cfg.rho
    edges, kinds = [], []
    for uk, up in zip(u_kind.tolist(), u_pick.tolist()):
        g = gamma_from_counts(len(within), len(between), rho)
        inside = uk < g
        edges.append((within if inside else between).draw(up))
        kinds.append(inside)
    return edges, kinds


def simulate(cfg: GenConfig) -> Graph:
    """Run the generative process and return a simple graph with ``cfg.k`` edges."""
    edges, _ = simulate_edges(cfg)
    return Graph.from_edges(cfg.n, edges, cfg.directed)


def simulate_within_count(cfg: GenConfig) -> int:
    """Number of within-community edges :func:`simulate` would place for ``cfg``.

    Only the pool sizes drive the indicator chain, so the dyad draws are
    skipped. Uses the same random stream as :func:`simulate`.
    """
    w, b = cfg.within_capacity, cfg.between_capacity
    u_kind, _ = _indicator_draws(cfg)
    rho = cfg.rho
    placed = 0
    for uk in u_kind.tolist():
        if uk < gamma_from_counts(w, b, rho):
            w -= 1
            placed += 1
        else:
            b -= 1
    return placed


def derive_seed(seed_base: int, *key: int) -> int:
    """Deterministic 64-bit seed from a base seed and integer coordinates."""
    ss = np.random.SeedSequence(int(seed_base), spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32).tolist()
    return (hi << 32) | lo


def simulate_many(
    membership: Membership,
    k: int,
    rho: float,
    replicates: int,
    seed_base: int,
    directed: bool = False,
    key: tuple = (),
    graphs: bool = True,
):
    """Yield one simulated graph (or within-edge count) per replicate."""
    for r in range(replicates):
        cfg = GenConfig(membership, k, rho, directed, derive_seed(seed_base, *key, r))
        yield simulate(cfg) if graphs else simulate_within_count(cfg)


def equal_blocks(n: int = 20, groups: int = 2) -> Membership:
    """Equal-size blocks used for the small N=20 illustrative graphs."""
    base, extra = divmod(n, groups)
    return Membership.from_sizes([base + (i < extra) for i in range(groups)])

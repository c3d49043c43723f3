"""Dynamic LFR-style benchmark with planted, evolving communities.

The first snapshot is a static LFR graph: power-law degrees and community
sizes, each node splitting its stubs into ``(1-mu)`` internal and ``mu``
external, wired by configuration-model matching. Later snapshots move a
fixed fraction of nodes to another community and rewire only the movers.
The churn rule is this package's own construction.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import GenerationError, ValidationError
from .graph import DynamicNetwork

log = logging.getLogger(__name__)

MAX_SWEEPS = 100


@dataclass(frozen=True)
class LfrConfig:
    n: int = 1000
    snapshots: int = 9
    mu: float = 0.1
    avg_degree: float = 15.0
    max_degree: int = 30
    min_community: int = 10
    max_community: int = 50
    gamma: float = 2.5
    beta: float = 1.5
    churn_fraction: float = 0.1
    seed: int = 0

    def validate(self) -> "LfrConfig":
        if self.n < 2:
            raise ValidationError("n must be at least 2")
        if self.snapshots < 1:
            raise ValidationError("snapshot count must be at least 1")
        if not 0.0 <= self.mu <= 1.0:
            raise ValidationError(f"mu must lie in [0, 1], got {self.mu}")
        if not (1 <= self.avg_degree <= self.max_degree < self.n):
            raise ValidationError(
                f"need 1 <= avg_degree <= max_degree < n, got {self.avg_degree}, {self.max_degree}, {self.n}"
            )
        if not (2 <= self.min_community <= self.max_community <= self.n):
            raise ValidationError(
                "need 2 <= min_community <= max_community <= n, got "
                f"{self.min_community}, {self.max_community}, {self.n}"
            )
        if self.gamma <= 1 or self.beta <= 1:
            raise ValidationError("power-law exponents gamma and beta must exceed 1")
        if not 0.0 <= self.churn_fraction < 1.0:
            raise ValidationError(f"churn_fraction must lie in [0, 1), got {self.churn_fraction}")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


# LFR1..LFR8: N=1000, s=9, <k>=15, k_max=30, sizes [10, 50], gamma 2.5, beta 1.5
PRESETS = {f"lfr{i}": LfrConfig(mu=round(0.1 * i, 1)) for i in range(1, 9)}


def preset(name: str, **overrides) -> LfrConfig:
    try:
        base = PRESETS[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return replace(base, **overrides)


def _powerlaw_support(exponent: float, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    support = np.arange(lo, hi + 1)
    weights = support.astype(np.float64) ** -exponent
    return support, weights / weights.sum()


def powerlaw_mean(exponent: float, lo: int, hi: int) -> float:
    support, p = _powerlaw_support(exponent, lo, hi)
    return float(support @ p)


def sample_powerlaw(count: int, exponent: float, lo: int, hi: int, seed=None, even_sum: bool = False) -> list[int]:
    """Integers drawn i.i.d. with ``P(k) ~ k**-exponent`` on ``[lo, hi]``.

    With ``even_sum`` the last value is redrawn until the total is even, as a
    degree sequence requires.
    """
    if not 1 <= lo <= hi:
        raise ValidationError(f"power-law bounds need 1 <= lo <= hi, got [{lo}, {hi}]")
    if exponent <= 1:
        raise ValidationError(f"power-law exponent must exceed 1, got {exponent}")
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    support, p = _powerlaw_support(exponent, lo, hi)
    values = rng.choice(support, size=count, p=p)
    if even_sum and values.sum() % 2:
        if lo == hi:
            raise ValidationError(f"{count} values fixed at {lo} cannot have an even sum")
        for _ in range(1000):
            values[-1] = rng.choice(support, p=p)
            if values.sum() % 2 == 0:
                break
        else:
            raise GenerationError("could not redraw an even-sum degree sequence")
    return [int(v) for v in values]


def _min_degree_for_mean(avg: float, gamma: float, kmax: int) -> int:
    best, best_gap = 1, float("inf")
    for lo in range(1, kmax + 1):
        gap = abs(powerlaw_mean(gamma, lo, kmax) - avg)
        if gap < best_gap:
            best, best_gap = lo, gap
    return best


def _community_sizes(cfg: LfrConfig, rng: np.random.Generator) -> list[int]:
    support, p = _powerlaw_support(cfg.beta, cfg.min_community, cfg.max_community)
    for _ in range(1000):
        sizes: list[int] = []
        total = 0
        while total < cfg.n:
            s = int(rng.choice(support, p=p))
            sizes.append(s)
            total += s
        if total == cfg.n:
            return sizes
        gap = cfg.n - (total - sizes[-1])
        if cfg.min_community <= gap <= cfg.max_community:
            # redraw the last size from the same law until it closes the gap
            draws = rng.choice(support, size=4000, p=p)
            hit = np.flatnonzero(draws == gap)
            if len(hit):
                sizes[-1] = gap
                return sizes
    raise GenerationError(
        f"could not draw community sizes in [{cfg.min_community}, {cfg.max_community}] summing to {cfg.n}; "
        "widen the size range"
    )


def _assign_communities(k_in: np.ndarray, sizes: list[int], rng: np.random.Generator) -> np.ndarray:
    n = len(k_in)
    free = np.array(sizes)
    sizes_arr = np.array(sizes)
    labels = np.empty(n, dtype=np.int64)
    # random order, then most-demanding first
    order = rng.permutation(n)
    order = order[np.argsort(-k_in[order], kind="stable")]
    for v in order:
        open_ = np.flatnonzero(free > 0)
        fits = open_[sizes_arr[open_] - 1 >= k_in[v]]
        if len(fits):
            c = int(rng.choice(fits))
        else:
            c = int(open_[np.argmax(sizes_arr[open_])])
            k_in[v] = sizes_arr[c] - 1
        labels[v] = c
        free[c] -= 1
    return labels


class _Wiring:
    """Undirected edge set under construction, as adjacency sets."""

    def __init__(self, n: int):
        self.adj = [set() for _ in range(n)]

    def has(self, a: int, b: int) -> bool:
        return b in self.adj[a]

    def add(self, a: int, b: int) -> None:
        self.adj[a].add(b)
        self.adj[b].add(a)

    def remove(self, a: int, b: int) -> None:
        self.adj[a].discard(b)
        self.adj[b].discard(a)

    def edge_array(self) -> np.ndarray:
        pairs = [(a, b) for a, nbrs in enumerate(self.adj) for b in nbrs if a < b]
        pairs.sort()
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _match_stubs(stubs: np.ndarray, ok, wiring: _Wiring, rng: np.random.Generator, what: str) -> None:
    """Pair up ``stubs`` into edges allowed by ``ok(a, b)`` without duplicates.

    Invalid pairs go back into the pool for the next sweep after a repair
    attempt: first a swap with an existing group edge ``(x, y) -> (a, x), (b, y)``,
    else a release that links ``a`` to a non-neighbour ``x`` and frees the
    stub of one of ``x``'s group neighbours.
    """
    universe = np.unique(stubs).tolist()
    pending = np.array(stubs, dtype=np.int64)
    for _ in range(MAX_SWEEPS):
        rng.shuffle(pending)
        leftover = []
        for a, b in pending.reshape(-1, 2).tolist():
            if a != b and ok(a, b) and not wiring.has(a, b):
                wiring.add(a, b)
            else:
                leftover.append((a, b))
        if not leftover:
            return
        unresolved: list[int] = []
        for a, b in leftover:
            if _swap_in(a, b, universe, ok, wiring, rng):
                continue
            freed = _release(a, universe, ok, wiring, rng)
            unresolved.extend((a, b) if freed is None else (b, freed))
        if not unresolved:
            return
        pending = np.array(unresolved, dtype=np.int64)
    raise GenerationError(
        f"{what} stub matching left {len(pending)} stubs unmatched after {MAX_SWEEPS} sweeps; "
        "try a lower max degree, larger communities or a different mu"
    )


def _group_edges(universe, ok, wiring: _Wiring) -> list[tuple[int, int]]:
    return [(x, y) for x in universe for y in sorted(wiring.adj[x]) if x < y and ok(x, y)]


def _swap_in(a: int, b: int, universe, ok, wiring: _Wiring, rng: np.random.Generator) -> bool:
    group = _group_edges(universe, ok, wiring)
    for idx in rng.permutation(len(group)).tolist():
        for x, y in (group[idx], group[idx][::-1]):
            if (
                a != x and b != y
                and ok(a, x) and ok(b, y)
                and not wiring.has(a, x) and not wiring.has(b, y)
                and (min(a, x), max(a, x)) != (min(b, y), max(b, y))
            ):
                wiring.remove(x, y)
                wiring.add(a, x)
                wiring.add(b, y)
                return True
    return False


def _release(a: int, universe, ok, wiring: _Wiring, rng: np.random.Generator) -> int | None:
    for x in rng.permutation(universe).tolist():
        if x == a or wiring.has(a, x) or not ok(a, x):
            continue
        nbrs = [w for w in sorted(wiring.adj[x]) if ok(x, w)]
        if nbrs:
            w = nbrs[int(rng.integers(len(nbrs)))]
            wiring.remove(x, w)
            wiring.add(a, x)
            return w
    return None


def _split_stubs(degrees: np.ndarray, mu: float) -> tuple[np.ndarray, np.ndarray]:
    k_in = np.rint((1.0 - mu) * degrees).astype(np.int64)
    return k_in, degrees - k_in


def generate_static_lfr(config: LfrConfig, rng: np.random.Generator | None = None):
    """One LFR graph: ``(edges (m, 2) with i < j, labels (n,))``."""
    cfg = config.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    k_min = _min_degree_for_mean(cfg.avg_degree, cfg.gamma, cfg.max_degree)
    degrees = np.array(sample_powerlaw(cfg.n, cfg.gamma, k_min, cfg.max_degree, rng, even_sum=True))
    sizes = _community_sizes(cfg, rng)
    k_in, _ = _split_stubs(degrees, cfg.mu)
    labels = _assign_communities(k_in, sizes, rng)

    # internal stub totals must be even per community: pull one external stub
    # inside if some member has room, otherwise drop one internal stub
    k_out = degrees - k_in
    for c, size in enumerate(sizes):
        members = np.flatnonzero(labels == c)
        if k_in[members].sum() % 2 == 0:
            continue
        movable = members[(k_out[members] > 0) & (k_in[members] < size - 1)]
        if len(movable):
            v = movable[np.argmax(k_out[movable])]
            k_in[v] += 1
            k_out[v] -= 1
        else:
            v = members[np.argmax(k_in[members])]
            k_in[v] -= 1

    wiring = _Wiring(cfg.n)
    for c in range(len(sizes)):
        members = np.flatnonzero(labels == c)
        stubs = np.repeat(members, k_in[members])
        _match_stubs(stubs, lambda a, b: True, wiring, rng, f"community {c} internal")
    stubs = np.repeat(np.arange(cfg.n), k_out)
    _match_stubs(stubs, lambda a, b: labels[a] != labels[b], wiring, rng, "inter-community")
    return wiring.edge_array(), labels


def evolve_snapshot(prev_edges: np.ndarray, prev_labels: np.ndarray, config: LfrConfig, rng: np.random.Generator):
    """Move ``churn_fraction * n`` nodes to new communities and rewire only them.

    Movers keep their degree and get a fresh ``(1-mu)/mu`` internal/external
    split. Neighbours that lost an edge to a mover are preferred as new
    endpoints, so degrees elsewhere are restored where possible. Edges between
    non-moving nodes are untouched.
    """
    cfg = config
    n = cfg.n
    labels = np.array(prev_labels, dtype=np.int64)
    n_move = int(round(cfg.churn_fraction * n))
    if n_move == 0:
        return np.array(prev_edges, dtype=np.int64).reshape(-1, 2), labels
    communities = np.unique(labels)
    if len(communities) < 2:
        raise GenerationError("churn needs at least two communities")

    wiring = _Wiring(n)
    for a, b in np.asarray(prev_edges).tolist():
        wiring.add(a, b)
    movers = rng.choice(n, size=n_move, replace=False)
    for v in movers:
        others = communities[communities != labels[v]]
        labels[v] = int(rng.choice(others))

    target = np.array([len(s) for s in wiring.adj])
    for v in movers:
        for u in sorted(wiring.adj[v]):
            wiring.remove(v, u)

    def deficit(w: int) -> int:
        return target[w] - len(wiring.adj[w])

    for v in movers:
        want_in, want_out = _split_stubs(np.array([target[v]]), cfg.mu)
        same = labels == labels[v]
        have_in = sum(1 for u in wiring.adj[v] if same[u])
        have_out = len(wiring.adj[v]) - have_in
        cap_in = int(same.sum()) - 1
        for need, pool_mask in (
            (min(int(want_in[0]), cap_in) - have_in, same),
            (int(want_out[0]) - have_out, ~same),
        ):
            if need <= 0:
                continue
            pool = [w for w in np.flatnonzero(pool_mask).tolist() if w != v and not wiring.has(v, w)]
            hungry = [w for w in pool if deficit(w) > 0]
            rest = [w for w in pool if deficit(w) <= 0 and len(wiring.adj[w]) < cfg.max_degree]
            picks = list(rng.permutation(hungry))[:need]
            if len(picks) < need:
                picks += list(rng.permutation(rest))[: need - len(picks)]
            for w in picks:
                wiring.add(v, int(w))
    return wiring.edge_array(), labels


def generate_dynamic_lfr(config: LfrConfig) -> DynamicNetwork:
    cfg = config.validate()
    rng = np.random.default_rng(cfg.seed)
    edges, labels = generate_static_lfr(cfg, rng)
    snapshots, truth = [edges], [labels]
    for _ in range(cfg.snapshots - 1):
        edges, labels = evolve_snapshot(edges, labels, cfg, rng)
        snapshots.append(edges)
        truth.append(labels)
    return DynamicNetwork.from_edges(cfg.n, snapshots, truth)


def measured_mixing(edges: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of edges joining different communities."""
    edges = np.asarray(edges).reshape(-1, 2)
    if len(edges) == 0:
        return 0.0
    labels = np.asarray(labels)
    return float(np.mean(labels[edges[:, 0]] != labels[edges[:, 1]]))

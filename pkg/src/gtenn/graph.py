"""Dynamic network model, snapshot adjacency and the GCN propagation filter.

Text formats (both 0-based node ids, 1-based snapshot indices)::

    # network file                 # ground-truth / partition file
    n 5 t 2                        snapshot 1
    snapshot 1                     0 0
    0 1                            1 0
    1 2                            ...
    snapshot 2                     snapshot 2
    3 4                            ...

Blank lines and ``#`` comments are ignored. Each undirected edge is listed
once; a reversed duplicate is rejected as directed input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .autodiff import Matrix
from .errors import FormatError, ValidationError


def _canonical_edges(edges: Iterable[tuple[int, int]], n: int) -> np.ndarray:
    seen = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"edge ({i}, {j}) has a node id outside [0, {n})")
        if i == j:
            raise ValidationError(f"self-loop on node {i}")
        seen.add((min(i, j), max(i, j)))
    if not seen:
        return np.zeros((0, 2), dtype=np.int64)
    arr = np.array(sorted(seen), dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DynamicNetwork:
    """Fixed node set ``0..n-1`` plus an ordered list of undirected snapshots.

    Edges are stored once per pair as ``(i, j)`` with ``i < j``. Snapshot
    indices passed to accessors are 1-based.
    """

    n: int
    snapshots: tuple[np.ndarray, ...]
    ground_truth: tuple[np.ndarray, ...] | None = field(default=None)

    @classmethod
    def from_edges(cls, n: int, snapshots: Sequence[Iterable[tuple[int, int]]], ground_truth=None):
        if n < 1:
            raise ValidationError("a network needs at least one node")
        snaps = tuple(_canonical_edges(e, n) for e in snapshots)
        truth = None
        if ground_truth is not None:
            truth = []
            for labels in ground_truth:
                arr = np.asarray(labels, dtype=np.int64).copy()
                if arr.shape != (n,):
                    raise ValidationError(f"ground truth must label all {n} nodes, got shape {arr.shape}")
                arr.setflags(write=False)
                truth.append(arr)
            if len(truth) != len(snaps):
                raise ValidationError(
                    f"ground truth has {len(truth)} snapshots but the network has {len(snaps)}"
                )
            truth = tuple(truth)
        return cls(n=n, snapshots=snaps, ground_truth=truth)

    @property
    def T(self) -> int:
        return len(self.snapshots)

    def _check_t(self, t: int) -> None:
        if not 1 <= t <= self.T:
            raise ValidationError(f"snapshot index {t} outside 1..{self.T}")

    def edges(self, t: int) -> np.ndarray:
        self._check_t(t)
        return self.snapshots[t - 1]

    def truth(self, t: int) -> np.ndarray | None:
        self._check_t(t)
        return None if self.ground_truth is None else self.ground_truth[t - 1]

    def with_ground_truth(self, ground_truth) -> "DynamicNetwork":
        return DynamicNetwork.from_edges(self.n, self.snapshots, ground_truth)

    def permuted(self, perm: Sequence[int]) -> "DynamicNetwork":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm)
        snaps = [[(perm[i], perm[j]) for i, j in e] for e in self.snapshots]
        truth = None
        if self.ground_truth is not None:
            truth = []
            for labels in self.ground_truth:
                out = np.empty_like(labels)
                out[perm] = labels
                truth.append(out)
        return DynamicNetwork.from_edges(self.n, snaps, truth)


def adjacency_array(network: DynamicNetwork, t: int) -> np.ndarray:
    e = network.edges(t)
    a = np.zeros((network.n, network.n))
    if len(e):
        a[e[:, 0], e[:, 1]] = 1.0
        a[e[:, 1], e[:, 0]] = 1.0
    return a


def build_adjacency(network: DynamicNetwork, t: int) -> Matrix:
    """Binary symmetric adjacency of snapshot ``t`` with a zero diagonal."""
    return Matrix(adjacency_array(network, t))


def degree_vector(a) -> np.ndarray:
    """Row sums of the adjacency (self-loops not counted)."""
    av = a.value if isinstance(a, Matrix) else np.asarray(a, dtype=np.float64)
    return av.sum(axis=1)


def normalize_adjacency(a) -> Matrix:
    """``D^{-1/2} (A + I) D^{-1/2}`` with ``D`` the row sums of ``A + I``."""
    av = a.value if isinstance(a, Matrix) else np.asarray(a, dtype=np.float64)
    if av.ndim != 2 or av.shape[0] != av.shape[1]:
        raise ValidationError(f"adjacency must be square, got shape {av.shape}")
    aug = av + np.eye(av.shape[0])
    inv_sqrt = 1.0 / np.sqrt(aug.sum(axis=1))
    out = aug * inv_sqrt[:, None] * inv_sqrt[None, :]
    # symmetric up to rounding already; enforce bitwise symmetry
    out = 0.5 * (out + out.T)
    return Matrix(out)


# --- text I/O -----------------------------------------------------------------


def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _parse_int(token: str, path, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"{what} must be an integer, got {token!r}", path, lineno) from None


def _snapshot_header(tokens, expected: int, path, lineno: int) -> None:
    if len(tokens) != 2:
        raise FormatError("expected 'snapshot <t>'", path, lineno)
    t = _parse_int(tokens[1], path, lineno, "snapshot index")
    if t != expected:
        raise FormatError(f"snapshot {t} out of order, expected snapshot {expected}", path, lineno)


def read_network(path) -> DynamicNetwork:
    """Parse a network file. Directed, weighted or self-loop input is an error."""
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError("empty network file", path) from None
    if len(header) != 4 or header[0] != "n" or header[2] != "t":
        raise FormatError("header must read 'n <node_count> t <snapshot_count>'", path, lineno)
    n = _parse_int(header[1], path, lineno, "node count")
    T = _parse_int(header[3], path, lineno, "snapshot count")
    if n < 1 or T < 1:
        raise FormatError("node and snapshot counts must be positive", path, lineno)

    snapshots: list[list[tuple[int, int]]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, tokens in lines:
        if tokens[0] == "snapshot":
            _snapshot_header(tokens, len(snapshots) + 1, path, lineno)
            snapshots.append([])
            seen = set()
            continue
        if not snapshots:
            raise FormatError("edge listed before the first 'snapshot' line", path, lineno)
        if len(tokens) != 2:
            kind = "weighted edges are not supported" if len(tokens) == 3 else "expected 'src dst'"
            raise FormatError(kind, path, lineno)
        i = _parse_int(tokens[0], path, lineno, "node id")
        j = _parse_int(tokens[1], path, lineno, "node id")
        if not (0 <= i < n and 0 <= j < n):
            raise FormatError(f"node id outside declared range [0, {n})", path, lineno)
        if i == j:
            raise FormatError(f"self-loop on node {i}", path, lineno)
        if (i, j) in seen:
            raise FormatError(f"duplicate edge ({i}, {j})", path, lineno)
        if (j, i) in seen:
            raise FormatError(
                f"edge ({i}, {j}) repeats ({j}, {i}); directed input is not supported", path, lineno
            )
        seen.add((i, j))
        snapshots[-1].append((i, j))
    if len(snapshots) != T:
        raise FormatError(f"header declares {T} snapshots but file has {len(snapshots)}", path)
    return DynamicNetwork.from_edges(n, snapshots)


def write_network(path, network: DynamicNetwork) -> None:
    parts = [f"n {network.n} t {network.T}\n"]
    for t, e in enumerate(network.snapshots, start=1):
        parts.append(f"snapshot {t}\n")
        parts.extend(f"{i} {j}\n" for i, j in e.tolist())
    Path(path).write_text("".join(parts), encoding="utf-8")


def read_partitions(path, n: int | None = None) -> list[np.ndarray]:
    """Parse a ground-truth/partition file into one label array per snapshot.

    Every snapshot must label each node ``0..n-1`` exactly once. When ``n`` is
    not given it is taken from the first snapshot.
    """
    blocks: list[dict[int, int]] = []
    first_line: list[int] = []
    for lineno, tokens in _content_lines(path):
        if tokens[0] == "snapshot":
            _snapshot_header(tokens, len(blocks) + 1, path, lineno)
            blocks.append({})
            first_line.append(lineno)
            continue
        if not blocks:
            raise FormatError("label listed before the first 'snapshot' line", path, lineno)
        if len(tokens) != 2:
            raise FormatError("expected 'node label'", path, lineno)
        node = _parse_int(tokens[0], path, lineno, "node id")
        label = _parse_int(tokens[1], path, lineno, "label")
        if node < 0:
            raise FormatError(f"negative node id {node}", path, lineno)
        if node in blocks[-1]:
            raise FormatError(f"node {node} labeled twice", path, lineno)
        blocks[-1][node] = label
    if not blocks:
        raise FormatError("no 'snapshot' blocks found", path)

    out = []
    for t, (block, lineno) in enumerate(zip(blocks, first_line), start=1):
        size = n if n is not None else (len(blocks[0]))
        if len(block) != size or (block and max(block) != size - 1):
            raise FormatError(
                f"snapshot {t} labels {len(block)} nodes but {size} are expected (ids 0..{size - 1})",
                path,
                lineno,
            )
        out.append(np.array([block[i] for i in range(size)], dtype=np.int64))
    return out


def write_partitions(path, partitions: Sequence) -> None:
    parts = []
    for t, labels in enumerate(partitions, start=1):
        labels = np.asarray(getattr(labels, "labels", labels))
        parts.append(f"snapshot {t}\n")
        parts.extend(f"{i} {int(c)}\n" for i, c in enumerate(labels.tolist()))
    Path(path).write_text("".join(parts), encoding="utf-8")

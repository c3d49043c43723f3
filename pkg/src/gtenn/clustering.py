"""Turn node embeddings into communities with a self-organizing map or K-means.

With the SOM every non-empty grid cell is one community: nodes sharing a
best-matching unit are grouped and cell ids are compacted to ``0..k-1``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Partition:
    """Community id per node for one snapshot. Ids are contiguous from 0."""

    labels: np.ndarray
    t: int = 1

    @classmethod
    def from_labels(cls, labels, t: int = 1) -> "Partition":
        _, compact = np.unique(np.asarray(labels), return_inverse=True)
        compact = compact.astype(np.int64).reshape(-1)
        compact.setflags(write=False)
        return cls(labels=compact, t=t)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def communities(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0


@dataclass(frozen=True)
class SomConfig:
    """Fields left as None are derived from the number of points by :meth:`resolve`."""

    grid_rows: int | None = None
    grid_cols: int | None = None
    alpha0: float = 0.5
    sigma0: float | None = None
    iterations: int | None = None
    seed: int = 0

    def resolve(self, n: int) -> "SomConfig":
        side = math.ceil(math.sqrt(2.0 * math.sqrt(n)))
        rows = self.grid_rows or side
        cols = self.grid_cols or side
        sigma0 = self.sigma0
        if sigma0 is None:
            sigma0 = max(0.5 * math.hypot(rows - 1, cols - 1), 0.5)
        iterations = self.iterations if self.iterations is not None else 50 * n
        cfg = SomConfig(rows, cols, self.alpha0, sigma0, iterations, self.seed)
        return cfg.validate()

    def validate(self) -> "SomConfig":
        if self.grid_rows is not None and self.grid_rows < 1 or self.grid_cols is not None and self.grid_cols < 1:
            raise ValidationError("SOM grid dimensions must be positive")
        if not 0 < self.alpha0 <= 1:
            raise ValidationError(f"SOM learning rate alpha0 must lie in (0, 1], got {self.alpha0}")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ValidationError(f"SOM radius sigma0 must be positive, got {self.sigma0}")
        if self.iterations is not None and self.iterations < 0:
            raise ValidationError("SOM iterations must be non-negative")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


def _grid_coords(rows: int, cols: int) -> np.ndarray:
    r, c = np.divmod(np.arange(rows * cols), cols)
    return np.stack([r, c], axis=1).astype(np.float64)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _check_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
        raise ValidationError(f"clustering needs a non-empty (n, d) array, got shape {pts.shape}")
    return pts


def som_fit(points, config: SomConfig = SomConfig(), initial_units: np.ndarray | None = None) -> np.ndarray:
    """Online SOM training; returns unit weights of shape ``(rows * cols, d)``.

    At step ``s`` of ``S`` one random point pulls every unit toward it by
    ``alpha(s) * exp(-grid_dist^2 / (2 sigma(s)^2))`` where both ``alpha`` and
    ``sigma`` decay as ``exp(-s / S)``. Units start at randomly chosen points
    unless ``initial_units`` is given.
    """
    pts = _check_points(points)
    cfg = config.resolve(len(pts))
    rng = np.random.default_rng(cfg.seed)
    n_units = cfg.grid_rows * cfg.grid_cols
    if initial_units is None:
        units = pts[rng.choice(len(pts), size=n_units, replace=n_units > len(pts))].copy()
    else:
        units = np.array(initial_units, dtype=np.float64)
        if units.shape != (n_units, pts.shape[1]):
            raise ValidationError(f"initial units must have shape {(n_units, pts.shape[1])}")
    coords = _grid_coords(cfg.grid_rows, cfg.grid_cols)
    grid_d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=-1)
    S = cfg.iterations
    picks = rng.integers(len(pts), size=S)
    for s in range(S):
        x = pts[picks[s]]
        diff = x - units
        bmu = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
        decay = math.exp(-s / S)
        sigma = cfg.sigma0 * decay
        h = (cfg.alpha0 * decay) * np.exp(-grid_d2[bmu] / (2.0 * sigma * sigma))
        units += h[:, None] * diff
    return units


def best_matching_units(points, units) -> np.ndarray:
    """Index of the nearest unit per point; ties go to the lowest unit index."""
    return np.argmin(_sq_dists(_check_points(points), np.asarray(units, dtype=np.float64)), axis=1)


def som_assign(points, units, t: int = 1) -> Partition:
    return Partition.from_labels(best_matching_units(points, units), t=t)


def som_cluster(points, config: SomConfig = SomConfig(), t: int = 1) -> Partition:
    return som_assign(points, som_fit(points, config), t=t)


def _kmeans_pp(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [pts[rng.integers(len(pts))]]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.choice(len(pts), p=d2 / total) if total > 0 else rng.integers(len(pts))
        centers.append(pts[idx])
        d2 = np.minimum(d2, ((pts - pts[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def kmeans_fit(points, k: int, seed: int = 0, max_iter: int = 300):
    """Lloyd iterations from k-means++ seeding.

    Returns ``(labels, centers, inertia_history)``; ``inertia_history`` holds
    the within-cluster sum of squares after each assignment step. An emptied
    cluster is moved onto the point farthest from its current center.
    """
    pts = _check_points(points)
    if not 1 <= k <= len(pts):
        raise ValidationError(f"k must lie in [1, {len(pts)}], got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(pts, k, rng)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _sq_dists(pts, centers)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            own = d2[np.arange(len(pts)), new]
            far = int(np.argmax(own))
            new[far] = c
            centers[c] = pts[far]
            d2 = _sq_dists(pts, centers)
            counts = np.bincount(new, minlength=k)
        history.append(float(d2[np.arange(len(pts)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = pts[members].mean(axis=0)
    history.append(float(_sq_dists(pts, centers)[np.arange(len(pts)), labels].sum()))
    return labels, centers, history


def kmeans(points, k: int, seed: int = 0, t: int = 1) -> Partition:
    labels, _, _ = kmeans_fit(points, k, seed)
    return Partition.from_labels(labels, t=t)

"""Unsupervised training with a margin ranking loss and degree-biased negatives.

For every ordered edge ``(x, y)`` of snapshot ``t`` and each of ``Q``
negatives ``u`` drawn with probability proportional to ``degree**0.75``::

    loss_t = mean_over_(x,y)  sum_u  max(0, m + |h_x - h_y|^2 - |h_x - h_u|^2)

The training objective is the sum of ``loss_t`` over snapshots, minimised
full-batch with one optimizer step per epoch unless ``batch_size`` is set.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Matrix, Tape
from .errors import NumericError, ValidationError
from .graph import DynamicNetwork, adjacency_array, normalize_adjacency
from .model import GtennModel, ModelConfig
from .optim import make_optimizer

log = logging.getLogger(__name__)

MAX_REJECTIONS = 1000


@dataclass(frozen=True)
class TrainConfig:
    margin: float = 1.0
    negatives: int = 5
    epochs: int = 300
    lr: float = 1e-3
    batch_size: int | None = None
    seed: int = 0
    optimizer: str = "adam"

    def validate(self) -> "TrainConfig":
        if self.margin <= 0:
            raise ValidationError(f"margin must be positive, got {self.margin}")
        if self.negatives < 1:
            raise ValidationError(f"negatives per pair must be at least 1, got {self.negatives}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be at least 1, got {self.epochs}")
        if self.lr < 0:
            raise ValidationError(f"learning rate must be non-negative, got {self.lr}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValidationError("batch_size must be positive when given")
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


def positive_pairs(network: DynamicNetwork, t: int) -> np.ndarray:
    """Both orientations of every edge of snapshot ``t``, shape ``(2m, 2)``."""
    e = network.edges(t)
    return np.concatenate([e, e[:, ::-1]]).reshape(-1, 2)


def negative_distribution(degrees) -> np.ndarray:
    """``p(v) = d_v**0.75 / sum_u d_u**0.75``."""
    d = np.asarray(degrees, dtype=np.float64)
    w = d**0.75
    total = w.sum()
    if total <= 0:
        raise ValidationError("cannot sample negatives: every node has degree zero")
    return w / total


def sample_negative_batch(
    pairs: np.ndarray, dist: np.ndarray, q: int, adjacency: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``q`` negatives for each anchor ``pairs[:, 0]``.

    A draw is rejected when it is the anchor or one of its neighbours and is
    redrawn up to ``MAX_REJECTIONS`` times; what is still invalid after that
    falls back to a uniform pick among valid ids. Returns ``(negatives, keep)``
    where ``keep`` is False for anchors adjacent to every other node.
    """
    n = len(dist)
    x = pairs[:, 0]
    negs = rng.choice(n, size=(len(pairs), q), p=dist)
    bad = (negs == x[:, None]) | (adjacency[x[:, None], negs] > 0)
    for _ in range(MAX_REJECTIONS):
        if not bad.any():
            break
        negs[bad] = rng.choice(n, size=int(bad.sum()), p=dist)
        bad = (negs == x[:, None]) | (adjacency[x[:, None], negs] > 0)
    keep = np.ones(len(pairs), dtype=bool)
    for row in np.flatnonzero(bad.any(axis=1)):
        anchor = x[row]
        valid = np.flatnonzero(adjacency[anchor] == 0)
        valid = valid[valid != anchor]
        if len(valid) == 0:
            keep[row] = False
            continue
        cols = np.flatnonzero(bad[row])
        negs[row, cols] = rng.choice(valid, size=len(cols))
    skipped = int((~keep).sum())
    if skipped:
        log.warning("skipped %d positive pairs with no valid negative", skipped)
    return negs, keep


def sample_negatives(pair, dist, q: int, adjacency: np.ndarray, seed=None) -> np.ndarray:
    """``q`` negative node ids for one positive pair (empty if none exist)."""
    rng = np.random.default_rng(seed)
    negs, keep = sample_negative_batch(np.asarray([pair]), np.asarray(dist), q, adjacency, rng)
    return negs[0] if keep[0] else np.zeros(0, dtype=np.int64)


def ranking_loss(h: Matrix, pairs: np.ndarray, negatives: np.ndarray, margin: float) -> Matrix:
    """Mean over positive pairs of the summed hinge terms against their negatives."""
    p = len(pairs)
    if p == 0:
        return Matrix(0.0)
    q = negatives.shape[1]
    xs, ys = pairs[:, 0], pairs[:, 1]
    pos = ad.pair_sq_dists(h, xs, ys)
    neg = ad.reshape(ad.pair_sq_dists(h, np.repeat(xs, q), negatives.reshape(-1)), p, q)
    hinge = ad.relu(margin + pos - neg)
    return hinge.sum() * (1.0 / p)


@dataclass
class SnapshotData:
    a_hat: Matrix
    adjacency: np.ndarray
    pairs: np.ndarray
    dist: np.ndarray | None


def prepare(network: DynamicNetwork) -> list[SnapshotData]:
    out = []
    for t in range(1, network.T + 1):
        a = adjacency_array(network, t)
        deg = a.sum(axis=1)
        dist = negative_distribution(deg) if deg.any() else None
        out.append(SnapshotData(normalize_adjacency(a), a, positive_pairs(network, t), dist))
    return out


@dataclass
class TrainResult:
    model: GtennModel
    embeddings: list[np.ndarray]
    history: list[tuple[int, float, list[float]]] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.history[-1][1]


def _epoch_rng(seed: int, epoch: int, step: int = 0, stream: int = 1) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, epoch, step]))


def _batches(data: list[SnapshotData], batch_size: int | None, rng: np.random.Generator):
    if batch_size is None:
        yield [s.pairs for s in data]
        return
    shuffled = [s.pairs[rng.permutation(len(s.pairs))] for s in data]
    steps = max(1, math.ceil(max(len(p) for p in shuffled) / batch_size))
    for k in range(steps):
        yield [p[k * batch_size : (k + 1) * batch_size] for p in shuffled]


def snapshot_losses(model: GtennModel, data: list[SnapshotData], pair_sets, config: TrainConfig, rng) -> list[Matrix]:
    embeddings = model.forward([s.a_hat for s in data])
    losses = []
    for h, snap, pairs in zip(embeddings, data, pair_sets):
        if snap.dist is None or len(pairs) == 0:
            losses.append(Matrix(0.0))
            continue
        negs, keep = sample_negative_batch(pairs, snap.dist, config.negatives, snap.adjacency, rng)
        losses.append(ranking_loss(h, pairs[keep], negs[keep], config.margin))
    return losses


def train(
    network: DynamicNetwork,
    model_config: ModelConfig = ModelConfig(),
    config: TrainConfig = TrainConfig(),
    model: GtennModel | None = None,
) -> TrainResult:
    """Fit the encoder on ``network`` and return the final embeddings."""
    config.validate()
    if network.T < 1:
        raise ValidationError("network has no snapshots")
    if model is None:
        model = GtennModel.init(network.n, model_config, np.random.default_rng(config.seed))
    data = prepare(network)
    params = model.parameters()
    opt = make_optimizer(config.optimizer, params, config.lr)
    history = []
    for epoch in range(1, config.epochs + 1):
        split_rng = _epoch_rng(config.seed, epoch, stream=2) if config.batch_size else None
        per_t = np.zeros(network.T)
        steps = 0
        for step, pair_sets in enumerate(_batches(data, config.batch_size, split_rng)):
            rng = _epoch_rng(config.seed, epoch, step)
            with Tape() as tape:
                losses = snapshot_losses(model, data, pair_sets, config, rng)
                total = losses[0]
                for loss in losses[1:]:
                    total = total + loss
            values = [l.item() for l in losses]
            for t, v in enumerate(values, start=1):
                if not math.isfinite(v):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch}, snapshot {t} (learning rate {config.lr})"
                    )
            grads = tape.gradients(total, params)
            opt.step(grads)
            per_t += values
            steps += 1
        per_t /= steps
        history.append((epoch, float(per_t.sum()), per_t.tolist()))
        if epoch == 1 or epoch % 50 == 0 or epoch == config.epochs:
            log.info("epoch %d loss %.6f", epoch, per_t.sum())
    embeddings = [h.numpy() for h in model.forward([s.a_hat for s in data])]
    for t, h in enumerate(embeddings, start=1):
        if not np.all(np.isfinite(h)):
            raise NumericError(f"non-finite embedding at snapshot {t} (learning rate {config.lr})")
    return TrainResult(model=model, embeddings=embeddings, history=history)


def write_train_log(path, history, snapshots: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "total_loss", *[f"loss_t{t}" for t in range(1, snapshots + 1)]])
        for epoch, total, per_t in history:
            w.writerow([epoch, repr(total), *[repr(v) for v in per_t]])

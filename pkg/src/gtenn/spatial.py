"""Graph convolution with GRU-evolved layer weights.

Layer ``l`` at snapshot ``t`` first evolves its weight matrix from the
previous snapshot, then convolves::

    W_t = Phi(F_t^{l-1}, W_{t-1})
    F_t^l = LeakyReLU(A_hat_t @ F_t^{l-1} @ W_t)

``Phi`` is a matrix GRU whose hidden state is the weight matrix itself. Its
input is a summary of the layer's node features: the ``d_out`` rows with the
highest learned score, each scaled by ``tanh(score)`` and transposed so the
result has the shape of ``W``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Matrix, Parameter
from .errors import ShapeError
from .optim import glorot_uniform, zeros

CARRY_BIAS = 2.0


def gcn_layer(features: Matrix, a_hat: Matrix, weight: Matrix) -> Matrix:
    """One propagation step: ``leaky_relu(a_hat @ features @ weight)``."""
    if a_hat.shape != (features.rows, features.rows):
        raise ShapeError(f"gcn_layer: A_hat {a_hat.shape} does not match features {features.shape}")
    if features.cols != weight.rows:
        raise ShapeError(f"gcn_layer: features {features.shape} and weight {weight.shape} are not aligned")
    return ad.leaky_relu(a_hat @ (features @ weight))


def top_k_rows(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest values, descending, ties to the lower index."""
    order = np.lexsort((np.arange(len(values)), -values))
    return order[:k]


def summarize_features(features: Matrix, k: int, scores: Matrix) -> Matrix:
    """The ``k`` best-scoring rows of ``features`` scaled by ``tanh`` of their score.

    Row ``i`` scores ``features[i] @ scores``. Rows come out in descending
    score order, ties broken by lower node id.
    """
    n = features.rows
    if k > n:
        raise ShapeError(f"summarize_features: k={k} exceeds the {n} available rows")
    if scores.shape != (features.cols, 1):
        raise ShapeError(f"summarize_features: scores {scores.shape} must be ({features.cols}, 1)")
    y = features @ scores
    idx = top_k_rows(y.value[:, 0], k)
    return ad.gather_rows(features, idx) * ad.tanh(ad.gather_rows(y, idx))


@dataclass
class WeightGru:
    """Gates evolving one ``d_in x d_out`` weight matrix across snapshots.

    ``U_*`` act on the previous weights and ``V_*`` on the transposed feature
    summary, both from the left, so all of them are ``d_in x d_in``.

    ``B_z`` starts at ``carry_bias`` so the update gate initially leans toward
    keeping the previous weights (sigmoid(2) ~ 0.88); the other biases start
    at zero.
    """

    U_z: Parameter
    U_r: Parameter
    U_w: Parameter
    V_z: Parameter
    V_r: Parameter
    V_w: Parameter
    B_z: Parameter
    B_r: Parameter
    B_w: Parameter
    scores: Parameter
    use_features: bool = True

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        d_in: int,
        d_out: int,
        use_features: bool = True,
        carry_bias: float = CARRY_BIAS,
    ) -> "WeightGru":
        sq = {name: glorot_uniform(rng, d_in, d_in, name) for name in ("U_z", "U_r", "U_w", "V_z", "V_r", "V_w")}
        biases = {name: zeros(d_in, d_out, name) for name in ("B_z", "B_r", "B_w")}
        biases["B_z"].assign(np.full((d_in, d_out), float(carry_bias)))
        scores = glorot_uniform(rng, d_in, 1, "scores")
        return cls(**sq, **biases, scores=scores, use_features=use_features)

    @property
    def shape(self) -> tuple[int, int]:
        return self.B_z.shape

    def parameters(self) -> list[Parameter]:
        ps = [self.U_z, self.U_r, self.U_w, self.B_z, self.B_r, self.B_w]
        if self.use_features:
            ps += [self.V_z, self.V_r, self.V_w, self.scores]
        return ps

    def summarize(self, features: Matrix) -> Matrix:
        """Summary of shape ``(d_out, d_in)``; zero rows pad graphs with fewer than ``d_out`` nodes."""
        d_in, d_out = self.shape
        k = min(d_out, features.rows)
        summary = summarize_features(features, k, self.scores)
        return ad.pad_rows(summary, d_out) if k < d_out else summary


def evolve_weights(w_prev: Matrix, summary: Matrix | None, gru: WeightGru) -> Matrix:
    """One GRU step on the weight matrix.

    ``summary`` is the ``(d_out, d_in)`` feature summary (ignored, and may be
    None, when the GRU does not use features). The update gate keeps the
    previous weights: ``W = (1 - Z) * W_hat + Z * W_prev``.
    """
    if w_prev.shape != gru.shape:
        raise ShapeError(f"evolve_weights: W_prev {w_prev.shape} but the GRU evolves {gru.shape}")
    z_in = gru.U_z @ w_prev + gru.B_z
    r_in = gru.U_r @ w_prev + gru.B_r
    h_in = gru.B_w
    if gru.use_features:
        if summary is None or summary.shape != (gru.shape[1], gru.shape[0]):
            got = None if summary is None else summary.shape
            raise ShapeError(f"evolve_weights: summary must be {(gru.shape[1], gru.shape[0])}, got {got}")
        x = summary.T
        z_in = z_in + gru.V_z @ x
        r_in = r_in + gru.V_r @ x
        h_in = h_in + gru.V_w @ x
    z = ad.sigmoid(z_in)
    r = ad.sigmoid(r_in)
    w_hat = ad.tanh(gru.U_w @ (r * w_prev) + h_in)
    return (1.0 - z) * w_hat + z * w_prev


@dataclass
class GcnStack:
    """Layer widths, shared initial node features and pre-sequence weights ``W_0``."""

    dims: list[int]
    F0: Parameter
    W0: list[Parameter] = field(default_factory=list)

    @classmethod
    def init(cls, rng: np.random.Generator, n: int, dims: list[int]) -> "GcnStack":
        if len(dims) < 2:
            raise ShapeError("a GCN stack needs at least one layer (two widths)")
        F0 = glorot_uniform(rng, n, dims[0], "F0")
        W0 = [glorot_uniform(rng, dims[i], dims[i + 1], f"W0_{i + 1}") for i in range(len(dims) - 1)]
        return cls(dims=list(dims), F0=F0, W0=W0)

    @property
    def layers(self) -> int:
        return len(self.dims) - 1

    def parameters(self) -> list[Parameter]:
        return [self.F0, *self.W0]


def spatial_forward(
    a_hat: Matrix,
    stack: GcnStack,
    grus: list[WeightGru] | None,
    w_prev: list[Matrix],
    features: Matrix | None = None,
) -> tuple[Matrix, list[Matrix]]:
    """Run all layers on one snapshot.

    With ``grus`` None the weights are static (``W_t = w_prev``). Returns the
    last layer's node features and the weights used at this snapshot, which
    the caller feeds back as ``w_prev`` for the next one.
    """
    f = stack.F0 if features is None else features
    if len(w_prev) != stack.layers:
        raise ShapeError(f"expected {stack.layers} previous weight matrices, got {len(w_prev)}")
    weights = []
    for layer in range(stack.layers):
        if grus is None:
            w = w_prev[layer]
        else:
            gru = grus[layer]
            summary = gru.summarize(f) if gru.use_features else None
            w = evolve_weights(w_prev[layer], summary, gru)
        f = gcn_layer(f, a_hat, w)
        weights.append(w)
    return f, weights

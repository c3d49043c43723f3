"""Per-node GRU over the snapshot sequence.

Row convention: node features are rows, so every gate is ``F @ W + h @ U + B``.
The update gate weights the *new* candidate state::

    h_t = (1 - z_t) * h_{t-1} + z_t * h_hat_t

which is the reverse of the weight GRU in :mod:`gtenn.spatial`. ``B_z``
starts at ``UPDATE_BIAS`` so an untrained cell mostly passes the current
snapshot through (sigmoid(2) ~ 0.88) instead of averaging it with the past.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Matrix, Parameter
from .errors import ShapeError
from .optim import glorot_uniform, zeros

UPDATE_BIAS = 2.0


@dataclass
class TemporalGru:
    W_r: Parameter
    W_z: Parameter
    W_h: Parameter
    U_r: Parameter
    U_z: Parameter
    U_h: Parameter
    B_r: Parameter
    B_z: Parameter
    B_h: Parameter

    @classmethod
    def init(
        cls, rng: np.random.Generator, d_in: int, d_hidden: int, update_bias: float = UPDATE_BIAS
    ) -> "TemporalGru":
        ws = {k: glorot_uniform(rng, d_in, d_hidden, k) for k in ("W_r", "W_z", "W_h")}
        us = {k: glorot_uniform(rng, d_hidden, d_hidden, k) for k in ("U_r", "U_z", "U_h")}
        bs = {k: zeros(1, d_hidden, k) for k in ("B_r", "B_z", "B_h")}
        bs["B_z"].assign(np.full((1, d_hidden), float(update_bias)))
        return cls(**ws, **us, **bs)

    @property
    def d_in(self) -> int:
        return self.W_r.rows

    @property
    def d_hidden(self) -> int:
        return self.U_r.rows

    def parameters(self) -> list[Parameter]:
        return [self.W_r, self.W_z, self.W_h, self.U_r, self.U_z, self.U_h, self.B_r, self.B_z, self.B_h]


def gru_cell(x: Matrix, h_prev: Matrix, p: TemporalGru) -> Matrix:
    """One step for every row of ``x`` (n x d_in) against ``h_prev`` (n x d_hidden)."""
    if x.cols != p.d_in or h_prev.cols != p.d_hidden or x.rows != h_prev.rows:
        raise ShapeError(
            f"gru_cell: input {x.shape} and state {h_prev.shape} do not fit a "
            f"{p.d_in}->{p.d_hidden} GRU"
        )
    r = ad.sigmoid(x @ p.W_r + h_prev @ p.U_r + p.B_r)
    z = ad.sigmoid(x @ p.W_z + h_prev @ p.U_z + p.B_z)
    h_hat = ad.tanh(r * (h_prev @ p.U_h) + x @ p.W_h + p.B_h)
    return (1.0 - z) * h_prev + z * h_hat


def temporal_forward(sequence: list[Matrix], p: TemporalGru) -> list[Matrix]:
    """Hidden states ``h_1..h_T`` starting from ``h_0 = 0``."""
    if not sequence:
        return []
    n = sequence[0].rows
    for t, f in enumerate(sequence, start=1):
        if f.shape != (n, p.d_in):
            raise ShapeError(f"temporal_forward: snapshot {t} has shape {f.shape}, expected {(n, p.d_in)}")
    h = Matrix(np.zeros((n, p.d_hidden)))
    out = []
    for f in sequence:
        h = gru_cell(f, h, p)
        out.append(h)
    return out

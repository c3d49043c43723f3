"""The full encoder and its ablation variants.

=========  =====================================================
mode       embedding at snapshot t
=========  =====================================================
full       temporal GRU over GCN outputs with GRU-evolved weights
gcn_gru    temporal GRU over GCN outputs with static weights
gcn_only   GCN output with static weights
gru_only   temporal GRU fed the raw learnable features every step
=========  =====================================================
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .autodiff import Matrix, Parameter
from .errors import ValidationError
from .spatial import GcnStack, WeightGru, spatial_forward
from .temporal import TemporalGru, temporal_forward

ABLATIONS = ("full", "gcn_gru", "gcn_only", "gru_only")


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 32
    layers: int = 2
    ablation: str = "full"
    use_feature_summary: bool = True

    def validate(self) -> "ModelConfig":
        if self.dim < 1 or self.layers < 1:
            raise ValidationError("dim and layers must be positive")
        if self.ablation not in ABLATIONS:
            raise ValidationError(f"ablation must be one of {', '.join(ABLATIONS)}, got {self.ablation!r}")
        return self

    def as_dict(self) -> dict:
        return asdict(self)


class GtennModel:
    def __init__(self, stack: GcnStack, grus: list[WeightGru] | None, temporal: TemporalGru | None, ablation: str):
        self.stack = stack
        self.grus = grus
        self.temporal = temporal
        self.ablation = ablation

    @classmethod
    def init(cls, n: int, config: ModelConfig, rng: np.random.Generator) -> "GtennModel":
        config.validate()
        dims = [config.dim] * (config.layers + 1)
        stack = GcnStack.init(rng, n, dims)
        grus = None
        if config.ablation == "full":
            grus = [
                WeightGru.init(rng, dims[i], dims[i + 1], use_features=config.use_feature_summary)
                for i in range(config.layers)
            ]
        temporal = None
        if config.ablation in ("full", "gcn_gru", "gru_only"):
            temporal = TemporalGru.init(rng, dims[-1] if config.ablation != "gru_only" else dims[0], dims[-1])
        return cls(stack, grus, temporal, config.ablation)

    def parameters(self) -> list[Parameter]:
        if self.ablation == "gru_only":
            ps = [self.stack.F0]
        else:
            ps = self.stack.parameters()
        for gru in self.grus or []:
            ps += gru.parameters()
        if self.temporal is not None:
            ps += self.temporal.parameters()
        return ps

    def spatial(self, a_hats: list[Matrix]) -> list[Matrix]:
        """Last-layer GCN features per snapshot; weights carried across t."""
        w_prev: list[Matrix] = list(self.stack.W0)
        out = []
        for a_hat in a_hats:
            f, w_prev = spatial_forward(a_hat, self.stack, self.grus, w_prev)
            out.append(f)
        return out

    def forward(self, a_hats: list[Matrix]) -> list[Matrix]:
        """Embeddings ``h_1..h_T``, one ``n x d`` matrix per snapshot."""
        if self.ablation == "gru_only":
            return temporal_forward([self.stack.F0] * len(a_hats), self.temporal)
        feats = self.spatial(a_hats)
        if self.temporal is None:
            return feats
        return temporal_forward(feats, self.temporal)

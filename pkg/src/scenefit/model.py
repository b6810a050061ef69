"""Per-furniture-group placement model.

One GroupModel owns: an initialization MLP lifting 11-D node features to the
embedding width, one graph-attention layer per relation graph, a projection
MLP mapping the concatenated per-relation target messages plus the
standardized summary vector into the learned placement space, and an
autoencoder whose reconstruction error yields the plausibility score
P = exp(-MSE). Cross-group parameter sharing is deliberately impossible:
every group gets its own parameter store.

Also provides the two alternative plausibility scorers used for ablations:
distance to the projected cluster mean (P = exp(-d)) and a Gaussian KDE over
projected training placements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .encode import (
    DEFAULT_MAX_SUPPORT_HEIGHT,
    PlacementEncoding,
    encode_grid,
    encode_placement,
)
from .errors import TrainingError
from .features import SUMMARY_DIM, FeatureParams, Standardizer
from .geometry import FurnitureGroup, Scene
from .graphs import NODE_DIM, RELATIONS
from .nn import MLP, GraphAttention, autograd as ag
from .nn.autograd import Tensor


@dataclass(frozen=True)
class ModelDims:
    """Layer widths. Defaults follow the production configuration; the small()
    profile keeps every layer count but shrinks widths for fast experiments."""

    init_hidden: tuple[int, ...] = (64, 64, 100)
    embed_dim: int = 100
    heads: int = 10
    head_dim: int = 10
    attn_dropout: float = 0.8
    proj_hidden: tuple[int, ...] = (512, 256, 128)
    proj_dim: int = 100
    ae_hidden: tuple[int, ...] = (64, 32)
    ae_latent: int = 16

    @property
    def gat_out(self) -> int:
        return self.heads * self.head_dim

    @property
    def proj_in(self) -> int:
        return len(RELATIONS) * self.gat_out + SUMMARY_DIM

    @classmethod
    def small(cls) -> "ModelDims":
        return cls(init_hidden=(32, 32, 32), embed_dim=32, heads=4, head_dim=8,
                   proj_hidden=(96, 64, 48), proj_dim=32,
                   ae_hidden=(24, 16), ae_latent=8)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelDims":
        d = dict(d)
        for key in ("init_hidden", "proj_hidden", "ae_hidden"):
            d[key] = tuple(d[key])
        return cls(**d)


class GroupModel:
    """All learned state for one furniture group."""

    def __init__(self, group: FurnitureGroup, dims: ModelDims,
                 feature_params: FeatureParams,
                 init_net: MLP, gats: dict[str, GraphAttention], proj_net: MLP,
                 encoder: MLP, decoder: MLP,
                 standardizer: Standardizer | None = None,
                 max_support_height: float = DEFAULT_MAX_SUPPORT_HEIGHT):
        self.group = group
        self.dims = dims
        self.feature_params = feature_params
        self.init_net = init_net
        self.gats = gats
        self.proj_net = proj_net
        self.encoder = encoder
        self.decoder = decoder
        self.standardizer = standardizer
        self.max_support_height = max_support_height

    @classmethod
    def create(cls, group: FurnitureGroup, seed: int = 0,
               dims: ModelDims | None = None,
               feature_params: FeatureParams | None = None,
               max_support_height: float = DEFAULT_MAX_SUPPORT_HEIGHT) -> "GroupModel":
        dims = dims or ModelDims()
        feature_params = feature_params or FeatureParams()
        rng = np.random.default_rng(np.random.SeedSequence([seed, group.value]))
        init_net = MLP.create([NODE_DIM, *dims.init_hidden, dims.embed_dim], rng)
        gats = {
            rel: GraphAttention.create(dims.embed_dim, dims.heads, dims.head_dim,
                                       rng, attn_dropout=dims.attn_dropout)
            for rel in RELATIONS
        }
        proj_net = MLP.create([dims.proj_in, *dims.proj_hidden, dims.proj_dim], rng)
        encoder = MLP.create([dims.proj_dim, *dims.ae_hidden, dims.ae_latent], rng)
        decoder = MLP.create([dims.ae_latent, *reversed(dims.ae_hidden), dims.proj_dim],
                             rng)
        return cls(group, dims, feature_params, init_net, gats, proj_net,
                   encoder, decoder, max_support_height=max_support_height)

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------

    def igatp_parameters(self) -> list[tuple[str, Tensor]]:
        out = [(f"init.{n}", t) for n, t in self.init_net.parameters()]
        for rel in RELATIONS:
            out.extend((f"gat.{rel}.{n}", t) for n, t in self.gats[rel].parameters())
        out.extend((f"proj.{n}", t) for n, t in self.proj_net.parameters())
        return out

    def ae_parameters(self) -> list[tuple[str, Tensor]]:
        out = [(f"enc.{n}", t) for n, t in self.encoder.parameters()]
        out.extend((f"dec.{n}", t) for n, t in self.decoder.parameters())
        return out

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return self.igatp_parameters() + self.ae_parameters()

    # ------------------------------------------------------------------
    # Forward passes
    # ------------------------------------------------------------------

    def project_batch(self, encodings: list[PlacementEncoding],
                      training: bool = False,
                      rng: np.random.Generator | None = None) -> Tensor:
        """IGATP forward for a batch of encodings -> (B, proj_dim) tensor.

        Per relation, the batch's graphs run as one disjoint union so the
        whole batch costs a handful of array ops.
        """
        if self.standardizer is None:
            raise TrainingError("standardizer must be fitted before projection")
        if not encodings:
            raise TrainingError("empty encoding batch")
        b = len(encodings)
        messages = []
        for r, rel in enumerate(RELATIONS):
            feats = np.concatenate([e.rel_feats[r] for e in encodings], axis=0)
            sizes = [len(e.rel_feats[r]) for e in encodings]
            offsets = np.cumsum([0] + sizes[:-1])
            edges = np.concatenate(
                [e.rel_edges[r] + off for e, off in zip(encodings, offsets)], axis=0)
            embedded = self.init_net(ag.const(feats))
            gat_out = self.gats[rel](embedded, edges, training=training, rng=rng)
            # Target node of every graph sits at its block's first row.
            messages.append(ag.gather_rows(gat_out, offsets))
        raw_summary = np.stack([e.summary for e in encodings])
        summary = ag.const(self.standardizer.transform(raw_summary))
        return self.proj_net(ag.concat_cols(messages + [summary]))

    def project(self, scene: Scene, dims: tuple[float, float, float],
                center: tuple[float, float]) -> np.ndarray:
        """Eval-mode projection of a single placement -> (proj_dim,)."""
        enc = encode_placement(scene, self.group, dims, center, self.feature_params,
                               self.max_support_height)
        return self.project_batch([enc]).data[0]

    def reconstruct(self, y: Tensor) -> Tensor:
        return self.decoder(self.encoder(y))

    def reconstruction_mse(self, y: np.ndarray) -> np.ndarray:
        """Row-wise autoencoder reconstruction error for (B, proj_dim) inputs."""
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        recon = self.reconstruct(ag.const(y)).data
        return ((y - recon) ** 2).mean(axis=1)

    def plausibility(self, y: np.ndarray) -> float:
        """P = exp(-reconstruction MSE); 1 exactly at perfect reconstruction."""
        return float(np.exp(-self.reconstruction_mse(y)[0]))

    def plausibility_batch(self, y: np.ndarray) -> np.ndarray:
        return np.exp(-self.reconstruction_mse(y))

    def score_placements(self, scene: Scene, dims: tuple[float, float, float],
                         centers: np.ndarray, chunk_size: int = 512) -> np.ndarray:
        """Plausibility for many candidate centers (assumed inside the floor)."""
        encodings = encode_grid(scene, self.group, dims, centers,
                                self.feature_params, self.max_support_height)
        probs = np.empty(len(encodings))
        for start in range(0, len(encodings), chunk_size):
            chunk = encodings[start:start + chunk_size]
            y = self.project_batch(chunk).data
            probs[start:start + len(chunk)] = self.plausibility_batch(y)
        return probs

    def score_placement(self, scene: Scene, dims: tuple[float, float, float],
                        center: tuple[float, float]) -> float:
        return self.plausibility(self.project(scene, dims, center))


# ---------------------------------------------------------------------------
# Ablation scorers
# ---------------------------------------------------------------------------

def cluster_mean(outputs: np.ndarray) -> np.ndarray:
    """Arithmetic mean of projected outputs (N, D) -> (D,)."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if outputs.ndim != 2 or outputs.shape[0] == 0:
        raise TrainingError("cluster mean needs a nonempty (N, D) output set")
    return outputs.mean(axis=0)


def exp_distance_score(y: np.ndarray, mu: np.ndarray) -> float:
    """P = exp(-||y - mu||_2)."""
    y = np.asarray(y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if y.shape != mu.shape:
        raise TrainingError(f"shape mismatch: {y.shape} vs {mu.shape}")
    return float(np.exp(-np.linalg.norm(y - mu)))


@dataclass
class GaussianKde:
    """Product-kernel Gaussian KDE with per-dimension Silverman bandwidths."""

    points: np.ndarray        # (N, D)
    bandwidths: np.ndarray    # (D,)
    _log_norm: float = field(init=False)

    MIN_BANDWIDTH = 1e-8

    def __post_init__(self) -> None:
        n, d = self.points.shape
        self._log_norm = -(d / 2.0) * math.log(2.0 * math.pi) \
            - float(np.log(self.bandwidths).sum()) - math.log(n)

    @classmethod
    def fit(cls, points: np.ndarray) -> "GaussianKde":
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 2:
            raise TrainingError("KDE needs at least 2 fitted points")
        n, d = points.shape
        sigma = points.std(axis=0)
        factor = (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))
        bandwidths = np.maximum(sigma * factor, cls.MIN_BANDWIDTH)
        return cls(points=points, bandwidths=bandwidths)

    def log_score(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        z = (y[:, None, :] - self.points[None, :, :]) / self.bandwidths
        exponents = -0.5 * (z * z).sum(axis=2)              # (B, N)
        m = exponents.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(exponents - m).sum(axis=1))
        return lse + self._log_norm

    def score(self, y: np.ndarray) -> float:
        return float(np.exp(self.log_score(np.atleast_2d(y))[0]))

    def score_batch(self, y: np.ndarray) -> np.ndarray:
        return np.exp(self.log_score(y))

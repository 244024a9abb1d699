"""Adjacency-matrix forward pass from keypoint features and positions.

Each keypoint's refined position is sinusoidally encoded and concatenated
with its connection feature vector.  Two separate 2-layer MLPs project the
result into origin and destination embeddings; entry (i, j) of the adjacency
matrix is a sigmoid over a learned linear readout of the elementwise product
F_orig[i] * F_dest[j].  Weights are supplied externally (or seeded randomly
for tests); nothing here trains.

All matrix products run through non-optimized einsum so that each output row
is accumulated in a fixed order: permuting the keypoints permutes the result
bitwise, which the tests rely on.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True, eq=False)
class HeadWeights:
    """Two 2-layer MLPs plus the final readout; arrays are (in, out)."""

    origin_w1: np.ndarray
    origin_b1: np.ndarray
    origin_w2: np.ndarray
    origin_b2: np.ndarray
    dest_w1: np.ndarray
    dest_b1: np.ndarray
    dest_w2: np.ndarray
    dest_b2: np.ndarray
    final_w: np.ndarray
    final_b: float

    def __post_init__(self):
        for name in ("origin_w1", "origin_b1", "origin_w2", "origin_b2",
                     "dest_w1", "dest_b1", "dest_w2", "dest_b2", "final_w"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "final_b", float(self.final_b))
        for side in ("origin", "dest"):
            w1, b1 = getattr(self, f"{side}_w1"), getattr(self, f"{side}_b1")
            w2, b2 = getattr(self, f"{side}_w2"), getattr(self, f"{side}_b2")
            if w1.ndim != 2 or w2.ndim != 2:
                raise ValueError(f"{side} MLP weights must be 2-D")
            if b1.shape != (w1.shape[1],) or w2.shape[0] != w1.shape[1] \
                    or b2.shape != (w2.shape[1],):
                raise ValueError(f"{side} MLP dimensions do not chain")
        if self.dest_w1.shape[0] != self.origin_w1.shape[0]:
            raise ValueError("origin and dest MLPs must consume the same input width")
        if self.origin_w2.shape[1] != self.dest_w2.shape[1]:
            raise ValueError("origin and dest embeddings must have equal width")
        if self.final_w.shape != (self.origin_w2.shape[1],):
            raise ValueError("final layer width must equal the embedding width")

    @property
    def input_dim(self):
        return self.origin_w1.shape[0]

    @property
    def embed_dim(self):
        return self.origin_w2.shape[1]


@dataclass(frozen=True, eq=False)
class ConnectionFeatures:
    """Per-keypoint connection features and refined (x+dx, y) positions."""

    f_c: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        f_c = np.asarray(self.f_c, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if f_c.ndim != 2:
            raise ValueError(f"f_c must be (S, d_c), got shape {f_c.shape}")
        if positions.shape != (len(f_c), 2):
            raise ValueError(f"positions must be ({len(f_c)}, 2), got {positions.shape}")
        object.__setattr__(self, "f_c", f_c)
        object.__setattr__(self, "positions", positions)

    def __len__(self):
        return len(self.f_c)


def relu(values):
    return np.maximum(values, 0.0)


def positional_encode(position, dims_per_axis=32):
    """Sinusoidal encoding, x block then y block, (sin, cos) pairs per
    frequency k with angular scale 10000^(2k/dims).  Accepts a single (x, y)
    or a batch (..., 2); output gains a trailing axis of 2*dims_per_axis.
    """
    if dims_per_axis <= 0 or dims_per_axis % 2:
        raise ValueError("dims_per_axis must be positive and even")
    pos = np.asarray(position, dtype=float)
    if pos.shape[-1] != 2:
        raise ValueError("position must have a trailing axis of length 2")
    k = np.arange(dims_per_axis // 2)
    inv_freq = 10000.0 ** (-2.0 * k / dims_per_axis)
    angles = pos[..., :, np.newaxis] * inv_freq          # (..., 2, dims/2)
    pairs = np.stack([np.sin(angles), np.cos(angles)], axis=-1)
    return pairs.reshape(pos.shape[:-1] + (2 * dims_per_axis,))


def _mlp(x, w1, b1, w2, b2, activation):
    hidden = activation(np.einsum("ij,jk->ik", x, w1, optimize=False) + b1)
    return np.einsum("ij,jk->ik", hidden, w2, optimize=False) + b2


def adjacency_forward(features, weights, activation=relu):
    """Full head forward pass; returns probabilities strictly inside (0, 1).

    The positional-encoding width is whatever the weight matrices leave room
    for after the connection features.
    """
    from .graph import AdjacencyMatrix

    pe_len = weights.input_dim - features.f_c.shape[1]
    if pe_len <= 0 or pe_len % 4:
        raise ValueError(
            f"weights expect input width {weights.input_dim} but features are "
            f"{features.f_c.shape[1]} wide; no room for an even-dim encoding per axis")
    pe = positional_encode(features.positions, dims_per_axis=pe_len // 2)
    full = np.concatenate([pe, features.f_c], axis=1)
    f_orig = _mlp(full, weights.origin_w1, weights.origin_b1,
                  weights.origin_w2, weights.origin_b2, activation)
    f_dest = _mlp(full, weights.dest_w1, weights.dest_b1,
                  weights.dest_w2, weights.dest_b2, activation)
    logits = np.einsum("ik,jk->ij", f_orig * weights.final_w, f_dest,
                       optimize=False) + weights.final_b
    return AdjacencyMatrix(expit(logits))


def random_head_weights(seed, d_c, dims_per_axis=32, hidden=64, embed=32):
    """Seeded Gaussian weights (1/sqrt(fan-in) scale) for tests and demos."""
    rng = np.random.default_rng(seed)
    d_in = 2 * dims_per_axis + d_c

    def layer(fan_in, fan_out):
        return (rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)),
                rng.normal(0.0, 0.1, size=fan_out))

    ow1, ob1 = layer(d_in, hidden)
    ow2, ob2 = layer(hidden, embed)
    dw1, db1 = layer(d_in, hidden)
    dw2, db2 = layer(hidden, embed)
    return HeadWeights(origin_w1=ow1, origin_b1=ob1, origin_w2=ow2, origin_b2=ob2,
                       dest_w1=dw1, dest_b1=db1, dest_w2=dw2, dest_b2=db2,
                       final_w=rng.normal(0.0, 1.0 / np.sqrt(embed), size=embed),
                       final_b=float(rng.normal(0.0, 0.1)))

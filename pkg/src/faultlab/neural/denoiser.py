"""The noise-prediction network: one downsampling and one upsampling stage.

Layer budget (exactly): 13 convolutions, 10 group norms, 3 residual
blocks, 3 attention blocks.  Channel plan: 1 -> base (default 32) on the
top level, 2*base in the bottleneck; the up path consumes the skip
concatenation (3*base) and returns to base width.  The output projection
is a zero-initialized pointwise dense layer, so a fresh network predicts
zero noise everywhere.

Class conditioning uses a learned embedding added to the sinusoidal step
embedding; index 2 is the dedicated unconditional ("null") token used by
classifier-free training and guidance.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ShapeMismatch
from .layers import (
    Attention,
    Conv1d,
    Dense,
    Embedding,
    GroupNorm,
    Module,
    ResidualBlock,
    avg_pool1d,
    sinusoidal_embedding,
    upsample_nearest,
)
from .tensor import Tensor, concat

PASS_CLASS = 0
FAIL_CLASS = 1
NULL_CLASS = 2
NUM_CLASSES = 3

CHECKPOINT_VERSION = 1


class Denoiser(Module):
    def __init__(self, seed: int = 0, base: int = 32, groups: int = 8, emb_dim: int = 32):
        rng = np.random.default_rng(seed)
        mid = 2 * base
        self.base = base
        self.groups = groups
        self.emb_dim = emb_dim

        self.class_embed = Embedding(rng, NUM_CLASSES, emb_dim)
        self.stem = Conv1d(rng, 1, base)                                  # conv 1
        self.res_down = ResidualBlock(rng, base, base, emb_dim, groups)   # conv 2-3
        self.attn_down = Attention(rng, base, groups)                     # conv 4-5
        self.res_mid = ResidualBlock(rng, base, mid, emb_dim, groups)     # conv 6-7
        self.attn_mid = Attention(rng, mid, groups)                       # conv 8-9
        self.res_up = ResidualBlock(rng, base + mid, base, emb_dim, groups)  # conv 10-11
        self.attn_up = Attention(rng, base, groups)                       # conv 12-13
        self.out_norm = GroupNorm(base, groups)                           # norm 10
        self.out_proj = Dense(rng, base, 1, zero_init=True)

    # -- forward -------------------------------------------------------------

    def __call__(self, x_t, t, c) -> Tensor:
        """Predict the noise in x_t.

        x_t: Tensor or array, (B, K) or (B, 1, K); width K even and >= 4.
        t: array of timesteps (integer or fractional), shape (B,) or scalar.
        c: class indices (B,) or scalar; None means the null token.
        """
        if not isinstance(x_t, Tensor):
            x_t = Tensor(np.asarray(x_t, dtype=np.float64))
        if x_t.ndim == 2:
            x_t = x_t.reshape(x_t.shape[0], 1, x_t.shape[1])
        batch, _, width = x_t.shape
        if width % 2 != 0 or width < 4:
            raise ShapeMismatch(f"width {width} must be even and >= 4")

        t = np.broadcast_to(np.asarray(t, dtype=np.float64).ravel(), (batch,))
        if c is None:
            c = np.full(batch, NULL_CLASS, dtype=np.intp)
        else:
            c = np.broadcast_to(np.asarray(c, dtype=np.intp).ravel(), (batch,))

        emb = sinusoidal_embedding(t, self.emb_dim) + self.class_embed(c)

        h1 = self.stem(x_t)
        h1 = self.attn_down(self.res_down(h1, emb))
        h2 = avg_pool1d(h1)
        h2 = self.attn_mid(self.res_mid(h2, emb))
        h3 = upsample_nearest(h2)
        h3 = self.res_up(concat([h1, h3], axis=1), emb)
        h3 = self.attn_up(h3)
        out = self.out_proj(self.out_norm(h3).silu().swapaxes(1, 2))
        return out.swapaxes(1, 2)

    def predict(self, x_t: np.ndarray, t, c) -> np.ndarray:
        """(B, K) -> (B, K) noise prediction as a plain array."""
        out = self(x_t, t, c)
        return out.data.reshape(out.shape[0], out.shape[2])

    # -- checkpointing ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        meta = {
            "version": CHECKPOINT_VERSION,
            "base": self.base,
            "groups": self.groups,
            "emb_dim": self.emb_dim,
        }
        arrays = {name: p.data for name, p in self.named_params().items()}
        np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                 **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "Denoiser":
        with np.load(path) as blob:
            meta = json.loads(bytes(blob["__meta__"]).decode())
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta['version']}")
            model = cls(seed=0, base=meta["base"], groups=meta["groups"],
                        emb_dim=meta["emb_dim"])
            params = model.named_params()
            for name, p in params.items():
                stored = blob[name]
                if stored.shape != p.data.shape:
                    raise ValueError(f"shape mismatch for parameter {name}")
                p.data = stored.astype(np.float64)
        return model

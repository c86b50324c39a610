"""A minimal learned localizer (feed-forward, coverage row -> P(fail)).

After training, statement suspiciousness is the model's output on the
one-hot virtual test that covers exactly that statement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SingleClassDataset
from .neural import AdamW, Dense, Tensor
from .neural.layers import Module
from .spectra import CoverageDataset


@dataclass
class MlpFlConfig:
    hidden: int = 64
    lr: float = 3e-3
    steps: int = 2000
    weight_decay: float = 0.0
    seed: int = 0


class MlpFlModel(Module):
    def __init__(self, rng, width: int, hidden: int = 64):
        self.width = width
        self.hidden = hidden
        self.fc1 = Dense(rng, width, hidden)
        self.fc2 = Dense(rng, hidden, hidden)
        self.fc3 = Dense(rng, hidden, 1)

    def logits(self, x: Tensor) -> Tensor:
        h = self.fc1(x).sigmoid()
        h = self.fc2(h).sigmoid()
        return self.fc3(h)

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        x = Tensor(np.asarray(rows, dtype=np.float64))
        out = self.logits(x).sigmoid()
        return out.data.reshape(-1)

    # same versioned-npz checkpoint layout as the denoiser
    def save(self, path: str | Path) -> None:
        meta = {"version": 1, "width": self.width, "hidden": self.hidden}
        arrays = {name: p.data for name, p in self.named_params().items()}
        np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(),
                                              dtype=np.uint8), **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "MlpFlModel":
        with np.load(path) as blob:
            meta = json.loads(bytes(blob["__meta__"]).decode())
            model = cls(np.random.default_rng(0), meta["width"], meta["hidden"])
            for name, p in model.named_params().items():
                p.data = blob[name].astype(np.float64)
        return model


def train_mlpfl(dataset: CoverageDataset, cfg: MlpFlConfig | None = None) -> MlpFlModel:
    """Fit failure probability by binary cross-entropy over coverage rows."""
    cfg = cfg or MlpFlConfig()
    y = dataset.errors.astype(np.float64)
    if y.min() == y.max():
        raise SingleClassDataset("training data holds a single class")
    rng = np.random.default_rng(cfg.seed)
    model = MlpFlModel(rng, dataset.num_statements, cfg.hidden)
    opt = AdamW(model.named_params(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    x = Tensor(dataset.matrix.astype(np.float64))
    targets = Tensor(y.reshape(-1, 1))
    for _ in range(cfg.steps):
        z = model.logits(x)
        # BCE with logits: mean(softplus(z) - y*z)
        loss = (z.softplus() - targets * z).mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
    return model


def final_loss(model: MlpFlModel, dataset: CoverageDataset) -> float:
    z = model.logits(Tensor(dataset.matrix.astype(np.float64)))
    y = Tensor(dataset.errors.astype(np.float64).reshape(-1, 1))
    return float((z.softplus() - y * z).mean().data)


def virtual_suspiciousness(model: MlpFlModel) -> np.ndarray:
    """Score statement j as the model's output on the one-hot row e_j."""
    eye = np.eye(model.width, dtype=np.float64)
    return model.predict_proba(eye)

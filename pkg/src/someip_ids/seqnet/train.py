from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .adam import AdamState, adam_step, clip_global_norm
from .rnn import RnnModel, loss, loss_and_grads, predict_arrays

log = logging.getLogger(__name__)


class EmptySplit(ValueError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 100
    max_epochs: int = 50
    hidden: tuple[int, int] = (50, 10)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 5
    restore_best: bool = True
    clip_norm: float | None = 5.0
    mask_padding: bool = False
    dtype: str = "float64"
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _arrays(ds):
    return ds.matrices(), ds.labels, ds.true_lens


def evaluate_loss(model: RnnModel, x, y, lengths, class_weights) -> float:
    _, probs = predict_arrays(model, x, lengths if model.mask_padding else None)
    return loss(probs, y, class_weights)


def fit(model: RnnModel, x, y, lengths, x_val, y_val, len_val, cfg: TrainConfig,
        class_weights=None) -> tuple[RnnModel, History]:
    """Mini-batch Adam with early stopping on validation loss."""
    if len(x) == 0 or len(x_val) == 0:
        raise EmptySplit("training and validation sets must both be non-empty")
    rng = np.random.default_rng(cfg.seed)
    params = model.params()
    state = AdamState.zeros_like(params, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    hist = History()
    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    wait = 0
    use_len = model.mask_padding
    n = len(x)
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = np.sort(order[start:start + cfg.batch_size])
            batch_loss, grads = loss_and_grads(
                model, x[idx], y[idx], class_weights, lengths[idx] if use_len else None
            )
            if cfg.clip_norm:
                grads, _ = clip_global_norm(grads, cfg.clip_norm)
            params, state = adam_step(params, grads, state, cfg.learning_rate)
            model.set_params(params)
            total += batch_loss * len(idx)
        hist.train_loss.append(total / n)
        val = evaluate_loss(model, x_val, y_val, len_val, class_weights)
        hist.val_loss.append(val)
        hist.stopped_epoch = epoch
        log.info("epoch %d train_loss=%.5f val_loss=%.5f", epoch, hist.train_loss[-1], val)
        if val < best_val:
            best_val = val
            hist.best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            wait = 0
        else:
            wait += 1
            if wait > cfg.patience:
                break
    if cfg.restore_best:
        model.set_params(best_params)
    return model, hist


def train(model: RnnModel | None, train_set, val_set, cfg: TrainConfig,
          class_weights=None) -> tuple[RnnModel, History]:
    """Train on ``train_set`` with early stopping on ``val_set`` (both :class:`Dataset`).

    A fresh model is initialised from ``cfg.seed`` when ``model`` is None.
    Class weights default to those stored with the training set.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise EmptySplit("training and validation sets must both be non-empty")
    if train_set.encoder != val_set.encoder:
        raise ValueError("train and validation sets use different encoders")
    if model is None:
        model = RnnModel.init(
            train_set.encoder.total_width,
            hidden=tuple(cfg.hidden),
            seed=cfg.seed,
            dtype=np.dtype(cfg.dtype),
            mask_padding=cfg.mask_padding,
        )
    model.encoder_hash = train_set.encoder.digest()
    if class_weights is None:
        class_weights = train_set.class_weights
    return fit(model, *_arrays(train_set), *_arrays(val_set), cfg, class_weights)


def predict(model: RnnModel, dataset) -> tuple[np.ndarray, np.ndarray]:
    x, _, lengths = _arrays(dataset)
    return predict_arrays(model, x, lengths if model.mask_padding else None)

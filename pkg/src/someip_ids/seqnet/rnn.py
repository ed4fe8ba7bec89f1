"""Two stacked tanh RNN layers read the whole sequence; a softmax head classifies
the last hidden state of the second layer.

Per layer and time step::

    a_t = W h_{t-1} + U x_t + b
    h_t = tanh(a_t)

and for the head ``probs = softmax(V h_T + c)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NUM_CLASSES = 5
LOG_EPS = 1e-12
PARAM_NAMES = ("W1", "U1", "b1", "W2", "U2", "b2", "V", "c")


class DimensionMismatch(ValueError):
    pass


@dataclass
class RnnLayerParams:
    W: np.ndarray  # (hidden, hidden)
    U: np.ndarray  # (hidden, input)
    b: np.ndarray  # (hidden,)

    @property
    def hidden(self) -> int:
        return self.W.shape[0]


@dataclass
class DenseParams:
    V: np.ndarray  # (classes, hidden)
    c: np.ndarray  # (classes,)


@dataclass
class RnnModel:
    layer1: RnnLayerParams
    layer2: RnnLayerParams
    head: DenseParams
    input_width: int
    mask_padding: bool = False
    encoder_hash: str | None = None

    @classmethod
    def init(cls, input_width: int, hidden: tuple[int, int] = (50, 10),
             n_classes: int = NUM_CLASSES, seed: int = 0, dtype=np.float64,
             mask_padding: bool = False) -> RnnModel:
        """Weights uniform in +-sqrt(1/fan_in), biases zero."""
        rng = np.random.default_rng(seed)

        def uniform(rows, cols):
            bound = np.sqrt(1.0 / cols)
            return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype)

        h1, h2 = hidden
        return cls(
            layer1=RnnLayerParams(uniform(h1, h1), uniform(h1, input_width), np.zeros(h1, dtype)),
            layer2=RnnLayerParams(uniform(h2, h2), uniform(h2, h1), np.zeros(h2, dtype)),
            head=DenseParams(uniform(n_classes, h2), np.zeros(n_classes, dtype)),
            input_width=input_width,
            mask_padding=mask_padding,
        )

    def params(self) -> dict[str, np.ndarray]:
        return {
            "W1": self.layer1.W, "U1": self.layer1.U, "b1": self.layer1.b,
            "W2": self.layer2.W, "U2": self.layer2.U, "b2": self.layer2.b,
            "V": self.head.V, "c": self.head.c,
        }

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.layer1 = RnnLayerParams(params["W1"], params["U1"], params["b1"])
        self.layer2 = RnnLayerParams(params["W2"], params["U2"], params["b2"])
        self.head = DenseParams(params["V"], params["c"])

    def copy(self) -> RnnModel:
        clone = RnnModel(self.layer1, self.layer2, self.head, self.input_width,
                         self.mask_padding, self.encoder_hash)
        clone.set_params({k: v.copy() for k, v in self.params().items()})
        return clone

    @property
    def n_classes(self) -> int:
        return self.head.V.shape[0]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ForwardCache:
    x: np.ndarray        # (B, T, D)
    mask: np.ndarray     # (B, T) 1 for real rows; all ones without masking
    h1: np.ndarray       # (T+1, B, H1) layer-1 states, h1[0] = 0
    t1: np.ndarray       # (T, B, H1) tanh outputs of layer 1
    h2: np.ndarray       # (T+1, B, H2)
    t2: np.ndarray       # (T, B, H2)
    logits: np.ndarray   # (B, K)
    probs: np.ndarray    # (B, K)


def _run_layer(inputs, W, mask, masked):
    """inputs: (T, B, H) precomputed U x_t + b. Returns (states with h_0, tanh outputs)."""
    T, B, H = inputs.shape
    hs = np.zeros((T + 1, B, H), dtype=inputs.dtype)
    ts = np.empty((T, B, H), dtype=inputs.dtype)
    Wt = W.T
    for t in range(T):
        ts[t] = np.tanh(inputs[t] + hs[t] @ Wt)
        if masked:
            m = mask[:, t, None]
            hs[t + 1] = m * ts[t] + (1 - m) * hs[t]
        else:
            hs[t + 1] = ts[t]
    return hs, ts


def forward(model: RnnModel, x, lengths=None, return_cache: bool = False):
    """Class probabilities for one sequence (T, D) or a batch (B, T, D).

    ``lengths`` gives the unpadded length per sample; it only matters when the
    model was built with ``mask_padding``.
    """
    x = np.asarray(x)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != model.input_width:
        raise DimensionMismatch(f"input shape {x.shape[1:]} does not match width {model.input_width}")
    dtype = model.layer1.U.dtype
    x = x.astype(dtype, copy=False)
    B, T, _ = x.shape
    if model.mask_padding and lengths is not None:
        mask = (np.arange(T)[None, :] < np.asarray(lengths)[:, None]).astype(dtype)
    else:
        mask = np.ones((B, T), dtype=dtype)
    masked = model.mask_padding and lengths is not None

    l1, l2, head = model.layer1, model.layer2, model.head
    in1 = np.einsum("btd,hd->tbh", x, l1.U, optimize=True) + l1.b
    h1, t1 = _run_layer(in1, l1.W, mask, masked)
    in2 = h1[1:] @ l2.U.T + l2.b
    h2, t2 = _run_layer(in2, l2.W, mask, masked)
    logits = h2[-1] @ head.V.T + head.c
    probs = softmax(logits)
    out = probs[0] if single else probs
    if return_cache:
        return out, ForwardCache(x, mask, h1, t1, h2, t2, logits, probs)
    return out


def weight_vector(class_weights, n_classes: int = NUM_CLASSES, dtype=np.float64) -> np.ndarray:
    """Dense per-class weights; classes absent from a mapping default to 1."""
    if class_weights is None:
        return np.ones(n_classes, dtype=dtype)
    if isinstance(class_weights, dict):
        return np.array([class_weights.get(c, 1.0) for c in range(n_classes)], dtype=dtype)
    return np.asarray(class_weights, dtype=dtype)


def loss(probs, labels, class_weights=None) -> float:
    """Class-weighted categorical cross-entropy, averaged over samples."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        probs = probs[None]
        labels = [labels]
    labels = np.asarray(labels, dtype=np.int64)
    w = weight_vector(class_weights, probs.shape[1])
    p = np.maximum(probs[np.arange(len(labels)), labels], LOG_EPS)
    return float(np.mean(-w[labels] * np.log(p)))


def backward(model: RnnModel, cache: ForwardCache, labels, class_weights=None) -> dict[str, np.ndarray]:
    """Exact gradients of :func:`loss` for the cached batch, by backpropagation through time."""
    labels = np.asarray(labels, dtype=np.int64)
    probs = cache.probs
    B = probs.shape[0]
    dtype = probs.dtype
    w = weight_vector(class_weights, probs.shape[1], dtype)
    rows = np.arange(B)

    # d(-w ln p_y)/d logits = w (p - onehot); zero where the log argument was clamped
    d_logits = probs.copy()
    d_logits[rows, labels] -= 1.0
    active = probs[rows, labels] >= LOG_EPS
    d_logits *= (w[labels] * active / B)[:, None]

    l1, l2, head = model.layer1, model.layer2, model.head
    grads = {"V": d_logits.T @ cache.h2[-1], "c": d_logits.sum(axis=0)}

    mask = cache.mask
    T = cache.t1.shape[0]

    # layer 2
    da2 = np.empty_like(cache.t2)
    dh1_from_above = np.empty_like(cache.t1)
    dh = d_logits @ head.V
    for t in range(T - 1, -1, -1):
        m = mask[:, t, None]
        da = dh * m * (1.0 - cache.t2[t] ** 2)
        da2[t] = da
        dh1_from_above[t] = da @ l2.U
        dh = da @ l2.W + (1 - m) * dh
    grads["W2"] = np.einsum("tbi,tbj->ij", da2, cache.h2[:-1], optimize=True)
    grads["U2"] = np.einsum("tbi,tbj->ij", da2, cache.h1[1:], optimize=True)
    grads["b2"] = da2.sum(axis=(0, 1))

    # layer 1
    da1 = np.empty_like(cache.t1)
    dh = np.zeros_like(cache.t1[0])
    for t in range(T - 1, -1, -1):
        m = mask[:, t, None]
        g = dh1_from_above[t] + dh
        da = g * m * (1.0 - cache.t1[t] ** 2)
        da1[t] = da
        dh = da @ l1.W + (1 - m) * g
    grads["W1"] = np.einsum("tbi,tbj->ij", da1, cache.h1[:-1], optimize=True)
    grads["U1"] = np.einsum("tbi,btj->ij", da1, cache.x, optimize=True)
    grads["b1"] = da1.sum(axis=(0, 1))
    return {name: grads[name] for name in PARAM_NAMES}


def loss_and_grads(model: RnnModel, x, labels, class_weights=None, lengths=None):
    probs, cache = forward(model, x, lengths=lengths, return_cache=True)
    if probs.ndim == 1:
        labels = [labels]
    return loss(cache.probs, labels, class_weights), backward(model, cache, labels, class_weights)


def predict_arrays(model: RnnModel, x, lengths=None, batch_size: int = 500):
    """(argmax labels, probabilities) for a stacked (n, T, D) array."""
    x = np.asarray(x)
    chunks = []
    for start in range(0, len(x), batch_size):
        sl = slice(start, start + batch_size)
        lens = None if lengths is None else np.asarray(lengths)[sl]
        chunks.append(forward(model, x[sl], lengths=lens))
    probs = np.concatenate(chunks) if chunks else np.zeros((0, model.n_classes))
    return probs.argmax(axis=1), probs

"""3D convolutional network that rejects non-waggle detections.

The network sees a fixed-length stack of snippet frames, applies a few
strided 3D convolutions with SELU activations, averages over time and space,
applies dropout and a fully connected head, and outputs the probability that
the stack shows a waggle run.  Forward and backward passes are plain numpy;
training uses Adam on binary cross-entropy.

Model file layout (all little-endian)::

    magic   4s   b"WDFN"
    version u32  1
    threshold f32  (NaN when unset)
    dropout f32
    seq_len u32
    n_conv  u32, n_dense u32
    n_conv  x  u32[8]  out, in, kt, kh, kw, st, sh, sw
    n_dense x  u32[2]  out, in
    then for every layer in order: weights f32[...], biases f32[out]
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .config import TrainConfig

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

_MAGIC = b"WDFN"
_P_MIN = 1e-12
_VERSION = 1

DEFAULT_CONV = ((8, (3, 5, 5), (2, 2, 2)), (16, (3, 3, 3), (2, 2, 2)))
# body-text variant: three convolutions and two fully connected layers
DEEP_CONV = ((8, (3, 5, 5), (2, 2, 2)), (16, (3, 3, 3), (2, 2, 2)), (32, (3, 3, 3), (1, 1, 1)))
DEEP_DENSE = (16,)


class ModelFormatError(ValueError):
    """A model file is truncated or not a filter-network file."""


def selu(x: np.ndarray) -> np.ndarray:
    return SELU_LAMBDA * np.where(x > 0, x, SELU_ALPHA * np.expm1(np.minimum(x, 0)))


def selu_grad(x: np.ndarray) -> np.ndarray:
    """Derivative of SELU; at exactly 0 the right-hand value ``lambda`` is used."""
    return SELU_LAMBDA * np.where(x >= 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0)))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def conv3d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride) -> np.ndarray:
    """Valid (unpadded) strided 3D cross-correlation.

    ``x``: (N, C, T, H, W); ``w``: (O, C, kt, kh, kw) -> (N, O, T', H', W').
    """
    kt, kh, kw = w.shape[2:]
    st, sh, sw = stride
    win = sliding_window_view(x, (kt, kh, kw), axis=(2, 3, 4))[:, :, ::st, ::sh, ::sw]
    out = np.tensordot(win, w, axes=([1, 5, 6, 7], [1, 2, 3, 4]))  # (N, T', H', W', O)
    out += b
    return np.ascontiguousarray(np.moveaxis(out, 4, 1))


def conv3d_backward(x, w, stride, dout, need_dx: bool = True):
    kt, kh, kw = w.shape[2:]
    st, sh, sw = stride
    win = sliding_window_view(x, (kt, kh, kw), axis=(2, 3, 4))[:, :, ::st, ::sh, ::sw]
    dw = np.tensordot(dout, win, axes=([0, 2, 3, 4], [0, 2, 3, 4]))
    db = dout.sum(axis=(0, 2, 3, 4))
    dx = None
    if need_dx:
        dx = np.zeros_like(x)
        To, Ho, Wo = dout.shape[2:]
        for a in range(kt):
            for bb in range(kh):
                for c in range(kw):
                    contrib = np.tensordot(w[:, :, a, bb, c], dout, axes=([0], [1]))
                    dx[:, :, a:a + st * (To - 1) + 1:st, bb:bb + sh * (Ho - 1) + 1:sh,
                       c:c + sw * (Wo - 1) + 1:sw] += np.moveaxis(contrib, 0, 1)
    return dw, db, dx


@dataclass
class FilterNetworkModel:
    """Weights and shape of the filter network.

    ``conv`` holds ``(weights, bias, stride)`` per convolution, ``dense``
    holds ``(weights, bias)`` per fully connected layer; the last dense layer
    has one output.
    """
    conv: list
    dense: list
    dropout: float = 0.5
    sequence_length: int = 128
    threshold: float | None = None
    dtype: type = np.float32

    @classmethod
    def initialize(cls, conv_layers=DEFAULT_CONV, dense_layers: Sequence[int] = (),
                   in_channels: int = 1, dropout: float = 0.5, sequence_length: int = 128,
                   seed: int = 0, dtype=np.float32) -> "FilterNetworkModel":
        """LeCun-normal weights (the SELU-preserving choice), zero biases."""
        rng = np.random.default_rng(seed)
        conv = []
        c_in = in_channels
        for c_out, kernel, stride in conv_layers:
            fan_in = c_in * int(np.prod(kernel))
            w = rng.normal(0.0, 1.0 / math.sqrt(fan_in), (c_out, c_in, *kernel)).astype(dtype)
            conv.append((w, np.zeros(c_out, dtype), tuple(stride)))
            c_in = c_out
        dense = []
        for width in (*dense_layers, 1):
            w = rng.normal(0.0, 1.0 / math.sqrt(c_in), (width, c_in)).astype(dtype)
            dense.append((w, np.zeros(width, dtype)))
            c_in = width
        return cls(conv, dense, dropout, sequence_length, None, dtype)

    # parameters are exposed as a flat list so optimisers and tests can walk them
    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b, _ in self.conv:
            out += [w, b]
        for w, b in self.dense:
            out += [w, b]
        return out

    def parameter_names(self) -> list[str]:
        names = []
        for i in range(len(self.conv)):
            names += [f"conv{i}.weight", f"conv{i}.bias"]
        for i in range(len(self.dense)):
            names += [f"dense{i}.weight", f"dense{i}.bias"]
        return names

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def astype(self, dtype) -> "FilterNetworkModel":
        conv = [(w.astype(dtype), b.astype(dtype), s) for w, b, s in self.conv]
        dense = [(w.astype(dtype), b.astype(dtype)) for w, b in self.dense]
        return FilterNetworkModel(conv, dense, self.dropout, self.sequence_length,
                                  self.threshold, dtype)

    def copy(self) -> "FilterNetworkModel":
        return self.astype(self.dtype)

    # --- forward / backward ---------------------------------------------------

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 4:
            x = x[:, None]
        if x.ndim != 5:
            raise ValueError(f"expected (N, T, H, W) or (N, C, T, H, W) input, got {x.shape}")
        c_in = self.conv[0][0].shape[1]
        if x.shape[1] != c_in:
            raise ValueError(f"input has {x.shape[1]} channels, model expects {c_in}")
        size = np.array(x.shape[2:])
        for w, _, stride in self.conv:
            size = (size - np.array(w.shape[2:])) // np.array(stride) + 1
            if (size < 1).any():
                raise ValueError(f"input shape {x.shape[2:]} too small for the convolutions")
        return x.astype(self.dtype, copy=False)

    def forward(self, x, train: bool = False, rng: np.random.Generator | None = None):
        """Logits for a batch; returns ``(logits, cache)``."""
        x = self._check_input(x)
        cache = {"conv_in": [], "conv_pre": []}
        h = x
        for w, b, stride in self.conv:
            cache["conv_in"].append(h)
            pre = conv3d(h, w, b, stride)
            cache["conv_pre"].append(pre)
            h = selu(pre).astype(self.dtype, copy=False)
        cache["pool_shape"] = h.shape
        h = h.mean(axis=(2, 3, 4))
        if train and self.dropout > 0:
            if rng is None:
                raise ValueError("training-mode forward needs an rng for dropout")
            keep = (rng.random(h.shape) >= self.dropout).astype(self.dtype)
            mask = keep / (1.0 - self.dropout)
        else:
            mask = None
        cache["mask"] = mask
        if mask is not None:
            h = h * mask
        cache["dense_in"] = []
        cache["dense_pre"] = []
        for i, (w, b) in enumerate(self.dense):
            cache["dense_in"].append(h)
            pre = h @ w.T + b
            cache["dense_pre"].append(pre)
            h = pre if i == len(self.dense) - 1 else selu(pre).astype(self.dtype, copy=False)
        return h[:, 0], cache

    def backward(self, cache, dlogits: np.ndarray) -> list[np.ndarray]:
        """Gradients of ``sum(dlogits * logits)``, in :meth:`parameters` order."""
        g = np.asarray(dlogits, dtype=self.dtype)[:, None]
        dense_grads = []
        for i in range(len(self.dense) - 1, -1, -1):
            w, _ = self.dense[i]
            if i != len(self.dense) - 1:
                g = g * selu_grad(cache["dense_pre"][i])
            dense_grads.append((g.T @ cache["dense_in"][i], g.sum(axis=0)))
            g = g @ w
        dense_grads.reverse()
        if cache["mask"] is not None:
            g = g * cache["mask"]
        n, c, t, hh, ww = cache["pool_shape"]
        g = np.broadcast_to((g / (t * hh * ww))[:, :, None, None, None], cache["pool_shape"])
        conv_grads = []
        for i in range(len(self.conv) - 1, -1, -1):
            w, _, stride = self.conv[i]
            g = g * selu_grad(cache["conv_pre"][i])
            dw, db, dx = conv3d_backward(cache["conv_in"][i], w, stride, g, need_dx=i > 0)
            conv_grads.append((dw, db))
            g = dx
        conv_grads.reverse()
        grads = []
        for dw, db in conv_grads:
            grads += [dw.astype(self.dtype), db.astype(self.dtype)]
        for dw, db in dense_grads:
            grads += [dw.astype(self.dtype), db.astype(self.dtype)]
        return grads

    def loss_and_grads(self, x, y, train: bool = False, rng=None):
        """Mean binary cross-entropy and its gradients."""
        logits, cache = self.forward(x, train, rng)
        y = np.asarray(y, dtype=np.float64)
        z = logits.astype(np.float64)
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        dz = (sigmoid(z) - y) / len(y)
        return loss, self.backward(cache, dz), logits

    def predict_proba(self, x, batch_size: int = 16) -> np.ndarray:
        x = np.asarray(x)
        out = []
        for i in range(0, len(x), batch_size):
            logits, _ = self.forward(x[i:i + batch_size], train=False)
            out.append(sigmoid(logits))
        if not out:
            return np.zeros(0)
        # keep probabilities strictly inside (0, 1) even for saturated logits
        return np.clip(np.concatenate(out), _P_MIN, 1.0 - _P_MIN)

    # --- persistence ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        thr = float("nan") if self.threshold is None else float(self.threshold)
        parts = [_MAGIC, struct.pack("<Iff I II", _VERSION, thr, self.dropout,
                                     self.sequence_length, len(self.conv), len(self.dense))]
        for w, _, stride in self.conv:
            parts.append(struct.pack("<8I", *w.shape, *stride))
        for w, _ in self.dense:
            parts.append(struct.pack("<2I", *w.shape))
        for p in self.parameters():
            parts.append(np.asarray(p, dtype="<f4").tobytes())
        Path(path).write_bytes(b"".join(parts))

    @classmethod
    def load(cls, path: str | Path) -> "FilterNetworkModel":
        data = Path(path).read_bytes()
        if data[:4] != _MAGIC:
            raise ModelFormatError(f"{path}: not a filter-network model file")
        head = struct.Struct("<Iff I II")
        try:
            version, thr, dropout, seq_len, n_conv, n_dense = head.unpack_from(data, 4)
            if version != _VERSION:
                raise ModelFormatError(f"{path}: unsupported model version {version}")
            pos = 4 + head.size
            conv_shapes, dense_shapes = [], []
            for _ in range(n_conv):
                vals = struct.unpack_from("<8I", data, pos)
                conv_shapes.append((vals[:5], vals[5:]))
                pos += 32
            for _ in range(n_dense):
                dense_shapes.append(struct.unpack_from("<2I", data, pos))
                pos += 8

            def take(shape):
                nonlocal pos
                n = int(np.prod(shape))
                arr = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(shape)
                pos += 4 * n
                return arr.astype(np.float32)

            conv = []
            for shape, stride in conv_shapes:
                w = take(shape)
                conv.append((w, take((shape[0],)), tuple(stride)))
            dense = []
            for shape in dense_shapes:
                w = take(shape)
                dense.append((w, take((shape[0],))))
        except (struct.error, ValueError) as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"{path}: truncated model file") from exc
        if pos != len(data):
            raise ModelFormatError(f"{path}: {len(data) - pos} trailing bytes")
        return cls(conv, dense, float(dropout), int(seq_len),
                   None if math.isnan(thr) else float(thr), np.float32)


class Adam:
    """Adam optimiser updating a list of arrays in place."""

    def __init__(self, params: list[np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1 ** self.t
        corr2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= (self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)).astype(p.dtype)


def pad_or_sample(stack, target_len: int = 128, rng: np.random.Generator | None = None) -> np.ndarray:
    """Fix a snippet stack to ``target_len`` frames.

    Longer stacks yield a contiguous window, random when ``rng`` is given and
    centred otherwise; shorter stacks are zero-padded at the end.
    """
    stack = np.asarray(stack)
    if stack.ndim != 3 or len(stack) == 0:
        raise ValueError("expected a non-empty (T, H, W) snippet stack")
    t = len(stack)
    if t >= target_len:
        start = int(rng.integers(0, t - target_len + 1)) if rng is not None else (t - target_len) // 2
        return stack[start:start + target_len]
    out = np.zeros((target_len, *stack.shape[1:]), dtype=stack.dtype)
    out[:t] = stack
    return out


def standardize(clip: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance over the whole clip (a flat clip becomes all zeros).

    Static comb texture dominates raw pixel values while the evidence for a
    waggle lies in the comparatively small frame-to-frame changes; removing
    the clip's offset and scale keeps that evidence at a usable magnitude.
    """
    centred = clip - clip.mean()
    sd = centred.std()
    return centred / sd if sd > 0 else centred


def prepare_batch(stacks, target_len: int, rng=None, augment: bool = False, dtype=np.float32):
    """Fix the length, standardize each clip and optionally flip it at random."""
    batch = []
    for s in stacks:
        x = standardize(pad_or_sample(s, target_len, rng).astype(np.float64)).astype(dtype)
        if augment:
            if rng.random() < 0.5:
                x = x[:, :, ::-1]
            if rng.random() < 0.5:
                x = x[:, ::-1, :]
        batch.append(x)
    return np.ascontiguousarray(np.stack(batch)[:, None])


@dataclass
class TrainResult:
    model: FilterNetworkModel
    history: list[dict] = field(default_factory=list)
    train_index: np.ndarray | None = None
    val_index: np.ndarray | None = None
    val_proba: np.ndarray | None = None


def _accuracy(p, y, thr=0.5) -> float:
    return float(np.mean((np.asarray(p) >= thr) == (np.asarray(y) == 1))) if len(y) else float("nan")


def train(stacks, labels, cfg: TrainConfig = TrainConfig(), model: FilterNetworkModel | None = None,
          conv_layers=DEFAULT_CONV, dense_layers: Sequence[int] = (), dropout: float = 0.5,
          use_validation: bool = True) -> TrainResult:
    """Train the filter network on labelled snippet stacks.

    A ``validation_fraction`` share of the samples is held out (unless
    ``use_validation`` is False).  Per epoch the history records mean
    training loss, training accuracy on the augmented batches and
    validation accuracy.
    """
    cfg.validate()
    y = np.asarray(labels, dtype=np.int64)
    if len(stacks) != len(y):
        raise ValueError("stacks and labels differ in length")
    if len(set(y.tolist())) < 2:
        raise ValueError("training data must contain both classes")
    rng = np.random.default_rng(cfg.seed)
    if model is None:
        model = FilterNetworkModel.initialize(conv_layers, dense_layers, dropout=dropout,
                                              sequence_length=cfg.sequence_length,
                                              seed=int(rng.integers(2**31)))
    order = rng.permutation(len(y))
    n_val = int(round(cfg.validation_fraction * len(y))) if use_validation else 0
    n_val = min(max(n_val, 1), len(y) - 1) if use_validation else 0
    val_idx, train_idx = np.sort(order[:n_val]), np.sort(order[n_val:])
    opt = Adam(model.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    history = []
    val_p = None
    for epoch in range(cfg.epochs):
        perm = rng.permutation(train_idx)
        losses, correct = [], 0
        for i in range(0, len(perm), cfg.batch_size):
            idx = perm[i:i + cfg.batch_size]
            xb = prepare_batch([stacks[j] for j in idx], cfg.sequence_length, rng, cfg.augment)
            loss, grads, logits = model.loss_and_grads(xb, y[idx], train=True, rng=rng)
            opt.step(grads)
            losses.append(loss * len(idx))
            correct += int(np.sum((logits >= 0) == (y[idx] == 1)))
        rec = {"epoch": epoch + 1, "train_loss": float(np.sum(losses) / len(perm)),
               "train_accuracy": correct / len(perm)}
        if n_val:
            val_p = predict_stacks(model, [stacks[j] for j in val_idx])
            rec["val_accuracy"] = _accuracy(val_p, y[val_idx])
        history.append(rec)
    if n_val and val_p is None:
        val_p = predict_stacks(model, [stacks[j] for j in val_idx])
    if n_val:
        model.threshold = choose_threshold(val_p, y[val_idx])
    return TrainResult(model, history, train_idx, val_idx, val_p)


def predict_stacks(model: FilterNetworkModel, stacks, batch_size: int = 16) -> np.ndarray:
    """Waggle probability for each snippet stack (centred window, no augmentation)."""
    out = []
    for i in range(0, len(stacks), batch_size):
        xb = prepare_batch(stacks[i:i + batch_size], model.sequence_length, dtype=model.dtype)
        out.append(model.predict_proba(xb, batch_size))
    return np.concatenate(out) if out else np.zeros(0)


def choose_threshold(proba, labels, target_precision: float = 0.95) -> float:
    """Lowest threshold whose precision reaches ``target_precision`` (highest recall).

    Falls back to 0.5 when no threshold reaches the target.
    """
    p = np.asarray(proba, dtype=np.float64)
    y = np.asarray(labels) == 1
    best = None
    for t in np.unique(p)[::-1]:
        pred = p >= t
        prec = y[pred].mean()
        if prec >= target_precision:
            best = float(t)
    return 0.5 if best is None else best


def precision_recall(proba, labels, threshold: float) -> tuple[float, float]:
    p = np.asarray(proba) >= threshold
    y = np.asarray(labels) == 1
    tp = int(np.sum(p & y))
    prec = tp / int(p.sum()) if p.any() else 1.0
    rec = tp / int(y.sum()) if y.any() else 1.0
    return prec, rec


def filter_runs(runs, model: FilterNetworkModel, threshold: float | None = None) -> list:
    """Runs whose waggle probability is at least ``threshold``.

    Each run's ``filter_prob`` is set as a side effect.  ``threshold``
    defaults to the one stored with the model, then 0.5.
    """
    if threshold is None:
        threshold = model.threshold if model.threshold is not None else 0.5
    runs = list(runs)
    if not runs:
        return []
    proba = predict_stacks(model, [r.snippets for r in runs])
    kept = []
    for run, p in zip(runs, proba):
        run.filter_prob = float(p)
        if p >= threshold:
            kept.append(run)
    return kept


def check_stacks(X) -> list[np.ndarray]:
    """Validate a sequence of ``(T, H, W)`` snippet stacks of equal frame size."""
    stacks = [np.asarray(s) for s in X]
    if not stacks:
        raise ValueError("no snippet stacks given")
    shape = stacks[0].shape[1:]
    for i, s in enumerate(stacks):
        if s.ndim != 3 or len(s) == 0:
            raise ValueError(f"stack {i} is not a non-empty (T, H, W) array")
        if s.shape[1:] != shape:
            raise ValueError(f"stack {i} has frame size {s.shape[1:]}, expected {shape}")
    return stacks


class FilterNetClassifier(ClassifierMixin, BaseEstimator):
    """Scikit-learn style wrapper: ``fit`` trains, ``predict_proba`` scores stacks.

    ``threshold=None`` picks the decision threshold on the validation split
    (lowest threshold reaching ``target_precision``).
    """

    def __init__(self, conv_layers=DEFAULT_CONV, dense_layers=(), dropout=0.5,
                 sequence_length=128, batch_size=8, learning_rate=1e-3, beta1=0.9,
                 beta2=0.999, epsilon=1e-8, epochs=20, validation_fraction=0.2,
                 augment=True, seed=0, threshold=None, target_precision=0.95):
        self.conv_layers = conv_layers
        self.dense_layers = dense_layers
        self.dropout = dropout
        self.sequence_length = sequence_length
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.epochs = epochs
        self.validation_fraction = validation_fraction
        self.augment = augment
        self.seed = seed
        self.threshold = threshold
        self.target_precision = target_precision

    def _train_config(self) -> TrainConfig:
        return TrainConfig(self.sequence_length, self.batch_size, self.learning_rate,
                           self.beta1, self.beta2, self.epsilon, self.epochs,
                           self.validation_fraction, self.augment, self.seed)

    def fit(self, X, y):
        stacks = check_stacks(X)
        y = np.asarray(y).astype(np.int64)
        self.classes_ = np.array([0, 1])
        result = train(stacks, y, self._train_config(), conv_layers=self.conv_layers,
                       dense_layers=self.dense_layers, dropout=self.dropout)
        if result.val_proba is not None:
            result.model.threshold = choose_threshold(
                result.val_proba, y[result.val_index], self.target_precision)
        self.model_ = result.model
        self.history_ = result.history
        self.threshold_ = self.threshold if self.threshold is not None else result.model.threshold
        return self

    @classmethod
    def from_model(cls, model: FilterNetworkModel, threshold: float | None = None):
        clf = cls(sequence_length=model.sequence_length, dropout=model.dropout,
                  threshold=threshold)
        clf.classes_ = np.array([0, 1])
        clf.model_ = model
        clf.history_ = []
        clf.threshold_ = threshold if threshold is not None else (
            model.threshold if model.threshold is not None else 0.5)
        return clf

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        p = predict_stacks(self.model_, check_stacks(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= self.threshold_).astype(np.int64)

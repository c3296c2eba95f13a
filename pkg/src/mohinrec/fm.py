"""Second-order factorization machine over concatenated latent features.

Feature layout for L similarity matrices of rank F: for each matrix in
meta-path order, the user's F factors followed by the item's F factors, so
``d = 2 * L * F``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .errors import ShapeError, TrainingError, ValidationError
from .factorization import LatentFeatures


@dataclass(frozen=True)
class FmConfig:
    k_factors: int = 10
    learning_rate: float = 0.005
    epochs: int = 200
    lambda_w: float = 0.01
    lambda_v: float = 0.01
    seed: int = 0
    init_std: float = 0.01

    def __post_init__(self):
        if self.k_factors < 1:
            raise ValidationError("k_factors must be >= 1")
        if self.learning_rate <= 0 or self.epochs < 1:
            raise ValidationError("learning_rate and epochs must be positive")
        if self.lambda_w < 0 or self.lambda_v < 0:
            raise ValidationError("regularization must be >= 0")


@dataclass(eq=False)
class FmModel:
    w0: float
    w: np.ndarray
    v: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    @property
    def d(self):
        return self.w.size

    @property
    def k(self):
        return self.v.shape[1]


def _check_latents(latents: Sequence[LatentFeatures]):
    if not latents:
        raise ValidationError("no latent feature groups")
    ranks = {lf.rank for lf in latents}
    if len(ranks) != 1:
        raise ValidationError(f"latent feature groups have different ranks {sorted(ranks)}")


def assemble_features(latents: Sequence[LatentFeatures], u: int, b: int) -> np.ndarray:
    _check_latents(latents)
    parts = []
    for lf in latents:
        if not (0 <= u < lf.user_factors.shape[0]) or not (0 <= b < lf.item_factors.shape[0]):
            raise IndexError(f"(user {u}, item {b}) outside latent feature tables")
        parts.append(lf.user_factors[u])
        parts.append(lf.item_factors[b])
    return np.concatenate(parts)


def assemble_matrix(latents: Sequence[LatentFeatures], users, items) -> np.ndarray:
    """Row-stacked ``assemble_features`` for many (user, item) pairs."""
    _check_latents(latents)
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    parts = []
    for lf in latents:
        parts.append(lf.user_factors[users])
        parts.append(lf.item_factors[items])
    return np.ascontiguousarray(np.hstack(parts))


def _check_dims(model: FmModel, x):
    if x.shape[-1] != model.d:
        raise ShapeError(f"feature length {x.shape[-1]} does not match model dimension {model.d}")


def fm_predict(model: FmModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    _check_dims(model, x)
    s = x @ model.v
    s2 = (x * x) @ (model.v * model.v)
    return float(model.w0 + x @ model.w + 0.5 * np.sum(s * s - s2))


def fm_predict_batch(model: FmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    _check_dims(model, X)
    s = X @ model.v
    s2 = (X * X) @ (model.v * model.v)
    return model.w0 + X @ model.w + 0.5 * np.sum(s * s - s2, axis=1)


@dataclass(frozen=True)
class FmGradient:
    w0: float
    w: np.ndarray
    v: np.ndarray


def fm_gradient(model: FmModel, x, y: float, lambda_w: float, lambda_v: float) -> FmGradient:
    """Gradient of ``(yhat - y)^2 + lambda_w |w|^2 + lambda_v |v|^2`` for one sample."""
    x = np.asarray(x, dtype=np.float64)
    _check_dims(model, x)
    g = 2.0 * (fm_predict(model, x) - y)
    s = x @ model.v
    dv = np.outer(x, s) - model.v * (x * x)[:, None]
    return FmGradient(g, g * x + 2.0 * lambda_w * model.w, g * dv + 2.0 * lambda_v * model.v)


# weights shrunk this far by strong regularization are flushed to zero; left
# alone they decay into subnormals, which are orders of magnitude slower
_TINY = 1e-100


@numba.njit(cache=True, nogil=True)
def _fm_epoch(X, y, order, w0, w, v, lr, lam_w, lam_v):
    d, k = v.shape
    s = np.empty(k)
    for t in range(order.size):
        n = order[t]
        x = X[n]
        lin = 0.0
        for i in range(d):
            lin += w[i] * x[i]
        pair = 0.0
        for f in range(k):
            acc = 0.0
            acc2 = 0.0
            for i in range(d):
                vx = v[i, f] * x[i]
                acc += vx
                acc2 += vx * vx
            s[f] = acc
            pair += acc * acc - acc2
        g = 2.0 * (w0 + lin + 0.5 * pair - y[n])
        w0 -= lr * g
        for i in range(d):
            xi = x[i]
            wi = w[i] - lr * (g * xi + 2.0 * lam_w * w[i])
            w[i] = wi if abs(wi) > _TINY else 0.0
            for f in range(k):
                vif = v[i, f]
                vif = vif - lr * (g * (xi * s[f] - vif * xi * xi) + 2.0 * lam_v * vif)
                v[i, f] = vif if abs(vif) > _TINY else 0.0
    return w0


def fm_loss(model: FmModel, X, y, lambda_w: float, lambda_v: float) -> float:
    """Mean squared training error plus the regularizer."""
    r = fm_predict_batch(model, X) - y
    return float(np.mean(r * r) + lambda_w * np.sum(model.w ** 2) + lambda_v * np.sum(model.v ** 2))


def fm_train(X, y, cfg: FmConfig = FmConfig()) -> FmModel:
    """SGD on squared loss; ``X`` is an n x d feature matrix, ``y`` the targets."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError("fm_train needs at least one sample")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"{X.shape[0]} samples but {y.size} targets")
    rng = np.random.default_rng(cfg.seed)
    d = X.shape[1]
    model = FmModel(0.0, np.zeros(d), rng.normal(0.0, cfg.init_std, size=(d, cfg.k_factors)))
    history = [fm_loss(model, X, y, cfg.lambda_w, cfg.lambda_v)]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(X.shape[0])
        model.w0 = _fm_epoch(X, y, order, model.w0, model.w, model.v,
                             cfg.learning_rate, cfg.lambda_w, cfg.lambda_v)
        loss = fm_loss(model, X, y, cfg.lambda_w, cfg.lambda_v)
        if not np.isfinite(loss):
            raise TrainingError("factorization machine diverged: loss is not finite", epoch=epoch)
        history.append(loss)
    model.loss_history = history
    return model


def _line(values) -> str:
    return " ".join(format(float(x), ".17g") for x in values) + "\n"


def dump_model(model: FmModel, out) -> None:
    """``d K`` header, then w0, then w on one line, then v one row per line."""
    out.write(f"{model.d} {model.k}\n")
    out.write(format(model.w0, ".17g") + "\n")
    out.write(_line(model.w))
    for row in model.v:
        out.write(_line(row))


def load_model(lines) -> FmModel:
    rows = [line.split() for line in lines if line.strip()]
    try:
        d, k = (int(t) for t in rows[0])
        w0 = float(rows[1][0])
        w = np.array([float(t) for t in rows[2]]) if d else np.zeros(0)
        v = np.array([[float(t) for t in r] for r in rows[2 + (d > 0):]]).reshape(-1, k)
    except (IndexError, ValueError):
        raise ValidationError("malformed model dump") from None
    if w.size != d or v.shape != (d, k):
        raise ShapeError(f"model dump declares d={d}, K={k}")
    return FmModel(w0, w, v)

"""Rank-F factorization of a similarity matrix over its stored entries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ShapeError, TrainingError, ValidationError
from .memp import MempConfig, SimilarityMatrix


@dataclass(frozen=True)
class MfConfig:
    rank: int = 10
    learning_rate: float = 0.01
    epochs: int = 100
    reg: float = 0.01
    seed: int = 0
    init_std: float = 0.01

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError("rank must be >= 1")
        if self.learning_rate <= 0 or self.epochs < 1:
            raise ValidationError("learning_rate and epochs must be positive")
        if self.reg < 0:
            raise ValidationError("reg must be >= 0")


@dataclass(eq=False)
class LatentFeatures:
    user_factors: np.ndarray
    item_factors: np.ndarray
    source_config: MempConfig | None = None
    loss_history: list[float] = field(default_factory=list)

    @property
    def rank(self):
        return self.user_factors.shape[1]


@numba.njit(cache=True, nogil=True)
def _sgd_epoch(rows, cols, vals, order, U, V, lr, reg):
    rank = U.shape[1]
    for t in range(order.size):
        k = order[t]
        i = rows[k]
        j = cols[k]
        pred = 0.0
        for f in range(rank):
            pred += U[i, f] * V[j, f]
        err = vals[k] - pred
        for f in range(rank):
            u = U[i, f]
            v = V[j, f]
            U[i, f] = u - lr * (-2.0 * err * v + 2.0 * reg * u)
            V[j, f] = v - lr * (-2.0 * err * u + 2.0 * reg * v)


def _objective(rows, cols, vals, U, V, reg):
    # overflow here just means divergence, which the caller reports
    with np.errstate(over="ignore", invalid="ignore"):
        resid = vals - np.einsum("ij,ij->i", U[rows], V[cols])
        return float(resid @ resid + reg * (np.sum(U * U) + np.sum(V * V)))


def mf_loss(sim: SimilarityMatrix, features: LatentFeatures, reg: float) -> float:
    """Squared error over stored entries plus ``reg * (|U|^2 + |V|^2)``."""
    m = sim.matrix
    U, V = features.user_factors, features.item_factors
    if U.shape[0] != m.n_rows or V.shape[0] != m.n_cols or U.shape[1] != V.shape[1]:
        raise ShapeError(
            f"factors {U.shape}, {V.shape} do not fit similarity matrix {m.shape}"
        )
    rows, cols, vals = m.coo()
    return _objective(rows, cols, vals, U, V, reg)


@dataclass(frozen=True)
class MfGradient:
    user: np.ndarray
    item: np.ndarray


def mf_gradient(sim: SimilarityMatrix, features: LatentFeatures, reg: float,
                entry: tuple[int, int]) -> MfGradient:
    """Gradient of ``(s_ij - u_i.v_j)^2 + reg(|u_i|^2 + |v_j|^2)`` w.r.t. ``u_i`` and ``v_j``."""
    i, j = entry
    cols, vals = sim.matrix.row(i)
    k = np.searchsorted(cols, j)
    if k >= cols.size or cols[k] != j:
        raise ValidationError(f"entry ({i}, {j}) is not stored in the similarity matrix")
    u = features.user_factors[i]
    v = features.item_factors[j]
    err = vals[k] - u @ v
    return MfGradient(-2.0 * err * v + 2.0 * reg * u, -2.0 * err * u + 2.0 * reg * v)


def factorize(sim: SimilarityMatrix, cfg: MfConfig = MfConfig()) -> LatentFeatures:
    """Plain SGD on the stored entries in a seeded shuffled order each epoch.

    Rows and columns with no stored entry are never visited; their factors are
    zeroed at the end so unseen users/items contribute nothing downstream.
    """
    m = sim.matrix
    if m.nnz == 0:
        raise ValidationError(f"similarity matrix for {sim.config} has no stored entries")
    rng = np.random.default_rng(cfg.seed)
    U = rng.normal(0.0, cfg.init_std, size=(m.n_rows, cfg.rank))
    V = rng.normal(0.0, cfg.init_std, size=(m.n_cols, cfg.rank))
    rows, cols, vals = m.coo()
    rows = np.ascontiguousarray(rows)
    cols = np.ascontiguousarray(cols)
    vals = np.ascontiguousarray(vals)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(m.nnz)
        _sgd_epoch(rows, cols, vals, order, U, V, cfg.learning_rate, cfg.reg)
        loss = _objective(rows, cols, vals, U, V, cfg.reg)
        if not np.isfinite(loss):
            raise TrainingError("factorization diverged: loss is not finite", epoch=epoch)
        history.append(loss)
    U[m.row_nnz() == 0] = 0.0
    V[np.bincount(cols, minlength=m.n_cols) == 0] = 0.0
    return LatentFeatures(U, V, sim.config, history)


def dump_factors(m: np.ndarray, out) -> None:
    """Write ``n_rows n_cols`` then one whitespace-separated row per line."""
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    out.write(f"{m.shape[0]} {m.shape[1]}\n")
    for row in m:
        out.write(" ".join(format(x, ".17g") for x in row) + "\n")


def load_factors(lines) -> np.ndarray:
    it = iter(lines)
    try:
        n, f = (int(t) for t in next(it).split())
    except (StopIteration, ValueError):
        raise ValidationError("factor dump needs an 'n_rows n_cols' header") from None
    rows = [[float(t) for t in line.split()] for line in it if line.strip()]
    m = np.array(rows, dtype=np.float64).reshape(-1, f) if rows else np.zeros((0, f))
    if m.shape != (n, f):
        raise ShapeError(f"factor dump declares {n}x{f}, holds {m.shape[0]}x{m.shape[1]}")
    return m

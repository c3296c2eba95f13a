"""Splitting, error metrics and the validation-tuned experiment runner."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import MohinrecError, ShapeError, ValidationError
from .factorization import LatentFeatures, MfConfig, factorize
from .fm import FmConfig, FmModel, assemble_matrix, fm_predict_batch, fm_train
from .ingest import HinGraph, RatingDataset
from .memp import P1, P2, MempConfig, commuting_matrix
from .motif import MotifId

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = tuple(round(0.1 * k, 1) for k in range(11))
DEFAULT_LAMBDAS = (0.001, 0.01, 0.1, 1.0)


@dataclass(frozen=True)
class SplitConfig:
    train_frac: float = 0.8
    valid_frac: float = 0.1
    test_frac: float = 0.1
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_frac, self.valid_frac, self.test_frac)
        if any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise ValidationError(f"split fractions {fr} must be positive and sum to 1")


def split(dataset: RatingDataset, cfg: SplitConfig = SplitConfig()):
    """Seeded shuffle, then cut at floor(n*train) and floor(n*valid); test gets the rest."""
    n = len(dataset)
    if n == 0:
        raise ValidationError("cannot split an empty dataset")
    perm = np.random.default_rng(cfg.seed).permutation(n)
    # the epsilon keeps exact products such as 10 * 0.7 from flooring down
    n_train = math.floor(n * cfg.train_frac + 1e-9)
    n_valid = math.floor(n * cfg.valid_frac + 1e-9)
    return (
        dataset.subset(perm[:n_train]),
        dataset.subset(perm[n_train:n_train + n_valid]),
        dataset.subset(perm[n_train + n_valid:]),
    )


def _pair(pred, truth):
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"{p.size} predictions for {t.size} targets")
    if p.size == 0:
        raise ValidationError("metrics need at least one prediction")
    return p - t


def rmse(pred, truth) -> float:
    e = _pair(pred, truth)
    return float(np.sqrt(np.mean(e * e)))


def mae(pred, truth) -> float:
    return float(np.mean(np.abs(_pair(pred, truth))))


@dataclass(frozen=True)
class ExperimentConfig:
    memp_configs: tuple[MempConfig, ...] = (MempConfig(P1), MempConfig(P2, MotifId.M3))
    mf: MfConfig = MfConfig()
    fm: FmConfig = FmConfig()
    split: SplitConfig = SplitConfig()
    repeats: int = 5
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDAS
    clamp: bool = True
    max_nnz_per_row: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValidationError("repeats must be >= 1")
        if not self.alpha_grid or any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
            raise ValidationError(f"alpha grid {self.alpha_grid} must be non-empty within [0, 1]")
        if not self.lambda_grid or any(lam < 0 for lam in self.lambda_grid):
            raise ValidationError("lambda grid must be non-empty and non-negative")
        if not self.memp_configs:
            raise ValidationError("at least one meta-path is required")

    def with_motif(self, motif) -> "ExperimentConfig":
        return replace(self, memp_configs=tuple(c.with_motif(motif) for c in self.memp_configs))


@dataclass(frozen=True)
class RunResult:
    repeat: int
    seed: int
    alpha: float
    lam: float
    valid_rmse: float
    rmse: float
    mae: float

    def record(self, **extra):
        return {"repeat": self.repeat, "seed": self.seed, "alpha": self.alpha,
                "lambda": self.lam, "valid_rmse": self.valid_rmse,
                "rmse": self.rmse, "mae": self.mae, **extra}


def _fmt(x):
    return format(x, ".6f")


@dataclass(eq=False)
class MetricReport:
    runs: list[RunResult]
    timings: dict[str, float] = field(default_factory=dict)
    # repeat -> (latent features per meta-path, FM model) of the chosen cell
    models: dict[int, tuple[list[LatentFeatures], FmModel]] = field(default_factory=dict)

    @property
    def mean_rmse(self):
        return float(np.mean([r.rmse for r in self.runs]))

    @property
    def mean_mae(self):
        return float(np.mean([r.mae for r in self.runs]))

    @property
    def std_rmse(self):
        return float(np.std([r.rmse for r in self.runs]))

    @property
    def std_mae(self):
        return float(np.std([r.mae for r in self.runs]))

    def to_text(self) -> str:
        """Key-value report. Wall-clock timings are kept out so reruns compare byte-equal."""
        lines = [f"runs = {len(self.runs)}"]
        for r in self.runs:
            lines.append(
                f"run.{r.repeat} = seed={r.seed} alpha={r.alpha:g} lambda={r.lam:g} "
                f"valid_rmse={_fmt(r.valid_rmse)} rmse={_fmt(r.rmse)} mae={_fmt(r.mae)}"
            )
        lines += [
            f"mean_rmse = {_fmt(self.mean_rmse)}",
            f"std_rmse = {_fmt(self.std_rmse)}",
            f"mean_mae = {_fmt(self.mean_mae)}",
            f"std_mae = {_fmt(self.std_mae)}",
        ]
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.record(), sort_keys=True) + "\n" for r in self.runs)


@contextmanager
def _stage(name, timings=None):
    t0 = time.perf_counter()
    try:
        yield
    except MohinrecError as exc:
        if exc.stage is None:
            exc.stage = name
        raise
    finally:
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


@dataclass(eq=False)
class _Cell:
    alpha: float
    lam: float
    valid_rmse: float
    model: FmModel
    latents: list[LatentFeatures]


class _RepeatRunner:
    """Fits every (alpha, lambda) cell for one train/validation split.

    Similarity matrices come from the training ratings only; latent features
    are cached per distinct similarity configuration.
    """

    def __init__(self, graph, train, valid, cfg: ExperimentConfig, repeat: int, timings):
        self.cfg = cfg
        self.train = train
        self.valid = valid
        self.graph = graph.with_ratings(train)
        self.mf = replace(cfg.mf, seed=cfg.mf.seed + repeat)
        self.fm = replace(cfg.fm, seed=cfg.fm.seed + repeat)
        self.timings = timings
        self._latent_cache: dict[MempConfig, LatentFeatures] = {}

    def latents(self, configs: Sequence[MempConfig]):
        out = []
        for c in configs:
            if c not in self._latent_cache:
                with _stage("similarity", self.timings):
                    sim = commuting_matrix(self.graph, c, self.cfg.max_nnz_per_row)
                with _stage("factorize", self.timings):
                    self._latent_cache[c] = self._factorize(sim)
            out.append(self._latent_cache[c])
        return out

    def _factorize(self, sim):
        n, m = sim.matrix.shape
        if sim.matrix.nnz == 0:
            # no path instances at all, e.g. a motif absent from the trust graph:
            # every row is cold, so the features are zero
            log.warning("%s has no entries; using zero features", sim.config.label())
            return LatentFeatures(np.zeros((n, self.mf.rank)), np.zeros((m, self.mf.rank)))
        return factorize(sim, self.mf)

    def _predict(self, model, latents, data):
        pred = fm_predict_batch(model, assemble_matrix(latents, data.users, data.items))
        return np.clip(pred, 1.0, 5.0) if self.cfg.clamp else pred

    def fit_alpha(self, configs, alpha) -> list[_Cell]:
        configs = [c.with_alpha(alpha) for c in configs]
        latents = self.latents(configs)
        X = assemble_matrix(latents, self.train.users, self.train.items)
        cells = []
        for lam in self.cfg.lambda_grid:
            with _stage("fm_train", self.timings):
                model = fm_train(X, self.train.ratings, replace(self.fm, lambda_w=lam, lambda_v=lam))
            with _stage("validate", self.timings):
                v = rmse(self._predict(model, latents, self.valid), self.valid.ratings)
            cells.append(_Cell(alpha, lam, v, model, latents))
        return cells

    def score(self, cell: _Cell, test: RatingDataset):
        with _stage("test", self.timings):
            pred = self._predict(cell.model, cell.latents, test)
            return rmse(pred, test.ratings), mae(pred, test.ratings)


def select_best(cells: Sequence[_Cell]) -> _Cell:
    """Minimum validation RMSE; ties go to smaller alpha, then smaller lambda."""
    return min(cells, key=lambda c: (c.valid_rmse, c.alpha, c.lam))


def _alphas(cfg):
    if not any(c.uses_alpha for c in cfg.memp_configs):
        return (0.0,)
    return tuple(sorted(set(cfg.alpha_grid)))


def _map_repeats(fn, cfg):
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
            return list(ex.map(fn, range(cfg.repeats)))
    return [fn(r) for r in range(cfg.repeats)]


def _prepare(graph, cfg, repeat, timings):
    seed = cfg.split.seed + repeat
    with _stage("split", timings):
        train, valid, test = split(graph.ratings, replace(cfg.split, seed=seed))
    if len(train) == 0 or len(valid) == 0:
        raise ValidationError("split left the training or validation set empty", stage="split")
    return seed, _RepeatRunner(graph, train, valid, cfg, repeat, timings), test


def run_experiment(graph: HinGraph, cfg: ExperimentConfig,
                   keep_models: bool = False) -> MetricReport:
    """Per repeat: split, fit every (alpha, lambda) cell, keep the best on validation, score test."""
    alphas = _alphas(cfg)
    models = {}

    def one(repeat):
        timings = {}
        seed, runner, test = _prepare(graph, cfg, repeat, timings)
        cells = [c for a in alphas for c in runner.fit_alpha(cfg.memp_configs, a)]
        best = select_best(cells)
        r, m = runner.score(best, test)
        log.info("repeat %d: alpha=%g lambda=%g rmse=%.4f mae=%.4f",
                 repeat, best.alpha, best.lam, r, m)
        if keep_models:
            models[repeat] = (best.latents, best.model)
        return RunResult(repeat, seed, best.alpha, best.lam, best.valid_rmse, r, m), timings

    results = _map_repeats(one, cfg)
    timings = {}
    for _, t in results:
        for k, v in t.items():
            timings[k] = timings.get(k, 0.0) + v
    return MetricReport([r for r, _ in results], timings, dict(sorted(models.items())))


@dataclass(eq=False)
class SweepReport:
    """Test metrics per (motif, alpha) cell, lambda tuned on validation inside each cell."""

    motifs: list[MotifId]
    alphas: list[float]
    runs: dict[tuple[MotifId, float], list[RunResult]]

    def mean_rmse(self, motif, alpha):
        return float(np.mean([r.rmse for r in self.runs[(motif, alpha)]]))

    def mean_mae(self, motif, alpha):
        return float(np.mean([r.mae for r in self.runs[(motif, alpha)]]))

    def best_alpha(self, motif, positive_only=False):
        alphas = [a for a in self.alphas if a > 0] if positive_only else self.alphas
        return min(alphas, key=lambda a: (self.mean_rmse(motif, a), a))

    def to_text(self) -> str:
        head = "motif\t" + "\t".join(f"a={a:g}" for a in self.alphas)
        lines = ["# mean test RMSE", head]
        for m in self.motifs:
            lines.append(f"{m}\t" + "\t".join(_fmt(self.mean_rmse(m, a)) for a in self.alphas))
        lines += ["# mean test MAE", head]
        for m in self.motifs:
            lines.append(f"{m}\t" + "\t".join(_fmt(self.mean_mae(m, a)) for a in self.alphas))
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        out = []
        for m in self.motifs:
            for a in self.alphas:
                for r in self.runs[(m, a)]:
                    out.append(json.dumps(r.record(motif=str(m)), sort_keys=True) + "\n")
        return "".join(out)


def run_sweep(graph: HinGraph, cfg: ExperimentConfig,
              motifs: Sequence[MotifId] = tuple(MotifId)) -> SweepReport:
    """Full motif x alpha table. Each repeat splits once and reuses it for every cell."""
    motifs = [MotifId.parse(m) for m in motifs]
    alphas = sorted(set(cfg.alpha_grid))

    def one(repeat):
        timings = {}
        seed, runner, test = _prepare(graph, cfg, repeat, timings)
        cells = {}
        for m in motifs:
            configs = cfg.with_motif(m).memp_configs
            for a in alphas:
                best = select_best(runner.fit_alpha(configs, a))
                r, mm = runner.score(best, test)
                cells[(m, a)] = RunResult(repeat, seed, a, best.lam, best.valid_rmse, r, mm)
        return cells

    per_repeat = _map_repeats(one, cfg)
    runs = {key: [cells[key] for cells in per_repeat] for key in per_repeat[0]}
    return SweepReport(motifs, alphas, runs)

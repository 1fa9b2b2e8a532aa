"""Genetic-algorithm wrapper feature selection (fitness = inner CV accuracy)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .svm import Kernel
from .validation import Dataset, kfold_cv


@dataclass(frozen=True)
class GaConfig:
    population: int = 200
    generations: int = 50
    mutation_rate: float = 0.01
    elitism: int = 2
    tournament: int = 3
    inner_folds: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise ValidationError("population must be an even number >= 2")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValidationError("mutation_rate must lie in [0, 1]")
        if not 0 <= self.elitism <= self.population:
            raise ValidationError("elitism must lie in [0, population]")
        if self.generations < 0:
            raise ValidationError("generations must be >= 0")


@dataclass
class GaResult:
    mask: np.ndarray
    fitness: float
    trace: list[float] = field(default_factory=list)


def two_point_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    d = a.size
    if d < 3:
        lo, hi = 1, d
    else:
        lo, hi = np.sort(rng.choice(np.arange(1, d), size=2, replace=False))
    c1, c2 = a.copy(), b.copy()
    c1[lo:hi], c2[lo:hi] = b[lo:hi], a[lo:hi]
    return c1, c2


def ga_select(ds: Dataset, cfg: GaConfig = GaConfig(), kernel: Kernel | str = "rbf",
              C: float = 10.0, grouped: bool = True) -> GaResult:
    """Evolve a feature mask. Inner folds keep cover groups together unless
    ``grouped`` is false."""
    d = ds.X.shape[1]
    if d < 2:
        raise ValidationError("GA selection needs at least two features")
    rng = np.random.default_rng(cfg.seed)
    cache: dict[bytes, float] = {}

    def fitness(mask: np.ndarray) -> float:
        key = np.packbits(mask).tobytes()
        if key not in cache:
            if not mask.any():
                cache[key] = 0.0
            else:
                rep = kfold_cv(ds, cfg.inner_folds, kernel, C, seed=cfg.seed, grouped=grouped, mask=mask)
                cache[key] = rep.pooled["accuracy"]
        return cache[key]

    pop = rng.random((cfg.population, d)) < 0.5
    fit = np.array([fitness(m) for m in pop])
    best = int(np.argmax(fit))
    trace = [float(fit[best])]

    for _ in range(cfg.generations):
        order = np.argsort(-fit, kind="stable")
        children = [pop[i].copy() for i in order[:cfg.elitism]]

        def pick() -> np.ndarray:
            cand = rng.integers(0, cfg.population, size=cfg.tournament)
            return pop[cand[np.argmax(fit[cand])]]

        while len(children) < cfg.population:
            c1, c2 = two_point_crossover(pick(), pick(), rng)
            for c in (c1, c2):
                flip = rng.random(d) < cfg.mutation_rate
                c ^= flip
                if len(children) < cfg.population:
                    children.append(c)
        pop = np.array(children)
        fit = np.array([fitness(m) for m in pop])
        best = int(np.argmax(fit))
        trace.append(float(fit[best]))

    return GaResult(pop[best].copy(), float(fit[best]), trace)

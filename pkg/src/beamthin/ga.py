"""Genetic search over per-beam binary activation masks.

Each chromosome is a stack of ``B`` binary ``M x N`` masks; steering phases are
not evolved. One generation: evaluate, sort by cost, keep the better half,
refill with offspring (rank-weighted parents, per-beam uniform crossover,
bit-flip mutation). The top ``elitism`` survivors pass through untouched, the
remaining survivors are mutated. Every chromosome is repaired to satisfy the
activation and power constraints before it is evaluated.

All randomness comes from one ``numpy`` generator, drawn in fixed-shape blocks
per generation, so a seed fixes the whole run.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .array_model import ArrayGeometry, WeightTensor
from .errors import InfeasibleConstraintsError
from .evaluation import ChromosomeEvaluator, ChromosomeScore, Sampling
from .metrics import FieldOfView
from .objective import BeamSpec, ConstraintSet, check_constraints

log = logging.getLogger(__name__)

_REPAIR_RETRIES = 10


@dataclass(frozen=True)
class GAConfig:
    population: int = 64
    max_generations: int = 500
    f_min: float = 1e-3
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None -> 1 / (M * N)
    elitism: int = 2
    seed: int = 0
    k1: float = 1.0
    k2: float = 1.0
    stagnation_generations: int = 100
    stagnation_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be even and at least 4")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if rate is not None and not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 1 <= self.elitism <= self.population // 2:
            raise ValueError("elitism must lie in [1, population / 2]")
        if self.max_generations < 0:
            raise ValueError("max_generations must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def mutation_for(self, shape: tuple[int, int]) -> float:
        if self.mutation_rate is not None:
            return self.mutation_rate
        return 1.0 / (shape[0] * shape[1])


@dataclass
class GAState:
    generation: int
    population: np.ndarray                   # (C, B, M, N) int8
    scores: list[ChromosomeScore | None]
    rng: np.random.Generator
    best: np.ndarray | None = None
    best_score: ChromosomeScore | None = None
    last_improvement: int = 0
    stagnation_tol: float = 1e-6

    @property
    def costs(self) -> np.ndarray:
        return np.array([np.nan if s is None else s.cost.total for s in self.scores])

    @property
    def size(self) -> int:
        return self.population.shape[0]


@dataclass
class GAResult:
    masks: np.ndarray
    weights: WeightTensor
    score: ChromosomeScore
    history: list[dict] = field(default_factory=list)
    generations: int = 0
    stop_reason: str = ""


@lru_cache(maxsize=8)
def _nearest_order(shape: tuple[int, int]) -> np.ndarray:
    """For each flat element, all flat elements by (distance, row, col)."""
    rows, cols = np.indices(shape)
    r = rows.ravel()
    c = cols.ravel()
    order = np.empty((r.size, r.size), dtype=np.int64)
    for e in range(r.size):
        d2 = (r - r[e]) ** 2 + (c - c[e]) ** 2
        order[e] = np.lexsort((c, r, d2))
    order.flags.writeable = False
    return order


def _centre_order(shape: tuple[int, int]) -> np.ndarray:
    rows, cols = np.indices(shape)
    d2 = (2 * rows - (shape[0] - 1)) ** 2 + (2 * cols - (shape[1] - 1)) ** 2
    return np.lexsort((cols.ravel(), rows.ravel(), d2.ravel()))


def repair_activation(masks: np.ndarray, constraints: ConstraintSet) -> np.ndarray:
    """Return a copy of ``masks`` that satisfies both constraints.

    Empty beams first get the free element nearest the array centre. Each
    over-used element is released by the beam using the most elements, which
    takes the nearest element (distance, then row, then column) it does not
    already use and that still has spare activations; with no such element the
    activation is simply dropped. Power overruns then drop, from the largest
    beam, the active element farthest from that beam's centroid.
    """
    out = np.array(masks, dtype=np.int8, copy=True)
    n_beams = out.shape[0]
    shape = out.shape[1:]
    limit = constraints.activation_limit.ravel()
    if limit.size != shape[0] * shape[1]:
        raise ValueError("activation limit shape does not match masks")
    flat = out.reshape(n_beams, -1)
    counts = flat.sum(axis=0).astype(np.int64)
    sizes = flat.sum(axis=1).astype(np.int64)

    for b in range(n_beams):
        if sizes[b] == 0:
            order = _centre_order(shape)
            free = order[counts[order] < limit[order]]
            if free.size == 0:
                raise InfeasibleConstraintsError("constraints unsatisfiable: no free element for an empty beam")
            flat[b, free[0]] = 1
            counts[free[0]] += 1
            sizes[b] += 1

    nearest = _nearest_order(shape)
    while True:
        over = np.flatnonzero(counts > limit)
        if over.size == 0:
            break
        e = over[0]
        users = np.flatnonzero(flat[:, e])
        b = users[np.argmax(sizes[users])]
        flat[b, e] = 0
        counts[e] -= 1
        order = nearest[e]
        ok = (counts[order] < limit[order]) & (flat[b, order] == 0) & (order != e)
        if ok.any():
            target = order[np.argmax(ok)]
            flat[b, target] = 1
            counts[target] += 1
        else:
            sizes[b] -= 1
            if sizes[b] == 0:
                raise InfeasibleConstraintsError("constraints unsatisfiable: no free element with spare budget")

    budget = constraints.max_activations
    total = int(counts.sum())
    if total > budget:
        rows, cols = np.indices(shape)
        r = rows.ravel().astype(float)
        c = cols.ravel().astype(float)
        while total > budget:
            b = int(np.argmax(sizes))
            if sizes[b] <= 1:
                raise InfeasibleConstraintsError("constraints unsatisfiable: power budget below one element per beam")
            active = np.flatnonzero(flat[b])
            cr, cc = r[active].mean(), c[active].mean()
            d2 = (r[active] - cr) ** 2 + (c[active] - cc) ** 2
            # farthest first; ties -> smaller row, then column
            pick = active[np.lexsort((c[active], r[active], -d2))[0]]
            flat[b, pick] = 0
            counts[pick] -= 1
            sizes[b] -= 1
            total -= 1
    return out


def init_population(specs: Sequence[BeamSpec], constraints: ConstraintSet,
                    config: GAConfig) -> GAState:
    """Bernoulli(0.5) genes for every chromosome, each repaired to feasibility."""
    if not specs:
        raise ValueError("need at least one beam")
    shape = constraints.activation_limit.shape
    rng = np.random.default_rng(config.seed)
    genes = (rng.random((config.population, len(specs)) + shape) < 0.5).astype(np.int8)
    population = np.stack([repair_activation(g, constraints) for g in genes])
    return GAState(generation=0, population=population,
                   scores=[None] * config.population, rng=rng)


def _rank_key(state: GAState) -> np.ndarray:
    costs = state.costs
    acts = np.array([s.activations if s is not None else np.iinfo(np.int64).max
                     for s in state.scores])
    return np.lexsort((np.arange(state.size), acts, costs))


def evaluate(state: GAState, evaluator: ChromosomeEvaluator, workers: int = 1) -> GAState:
    """Score every unscored chromosome and update the best-so-far record."""
    pending = [i for i, s in enumerate(state.scores) if s is None]
    if workers > 1 and len(pending) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluator.score, [state.population[i] for i in pending]))
    else:
        results = [evaluator.score(state.population[i]) for i in pending]
    for i, res in zip(pending, results):
        state.scores[i] = res
    lead = int(_rank_key(state)[0])
    lead_score = state.scores[lead]
    prev = state.best_score
    if prev is None or lead_score.cost.total < prev.cost.total:
        if prev is not None and prev.cost.total - lead_score.cost.total >= state.stagnation_tol:
            state.last_improvement = state.generation
        state.best = state.population[lead].copy()
        state.best_score = lead_score
    return state


def select_and_cull(state: GAState) -> GAState:
    """Sort by (cost, activations, index) and keep the better half."""
    if any(s is None for s in state.scores):
        raise ValueError("population must be evaluated before culling")
    order = _rank_key(state)[: state.size // 2]
    state.population = state.population[order]
    state.scores = [state.scores[i] for i in order]
    return state


def _repaired(child: np.ndarray, fallback: np.ndarray, constraints: ConstraintSet,
              rng: np.random.Generator, rate: float) -> np.ndarray:
    for _ in range(_REPAIR_RETRIES):
        try:
            return repair_activation(child, constraints)
        except InfeasibleConstraintsError:
            child = fallback ^ (rng.random(fallback.shape) < rate).astype(np.int8)
    raise InfeasibleConstraintsError("constraints unsatisfiable: offspring repair kept failing")


def crossover_mutate(state: GAState, config: GAConfig,
                     constraints: ConstraintSet) -> GAState:
    """Refill the culled population back to ``config.population`` chromosomes."""
    rng = state.rng
    parents = state.population
    n_par = parents.shape[0]
    n_off = config.population - n_par
    gene_shape = parents.shape[1:]
    n_beams = gene_shape[0]
    rate = config.mutation_for(gene_shape[1:])

    weights = np.arange(n_par, 0, -1, dtype=float)
    pairs = rng.choice(n_par, size=(n_off, 2), p=weights / weights.sum())
    cross = rng.random((n_off, n_beams)) < config.crossover_rate
    pick_b = rng.random((n_off,) + gene_shape) < 0.5
    flip_off = rng.random((n_off,) + gene_shape) < rate
    flip_keep = rng.random((n_par,) + gene_shape) < rate

    pa = parents[pairs[:, 0]]
    pb = parents[pairs[:, 1]]
    take_b = cross[:, :, None, None] & pick_b
    children = np.where(take_b, pb, pa) ^ flip_off.astype(np.int8)

    new_pop = []
    new_scores: list[ChromosomeScore | None] = []
    for i in range(n_par):
        if i < config.elitism or not flip_keep[i].any():
            new_pop.append(parents[i])
            new_scores.append(state.scores[i])
        else:
            mutated = parents[i] ^ flip_keep[i].astype(np.int8)
            new_pop.append(_repaired(mutated, parents[i], constraints, rng, rate))
            new_scores.append(None)
    for j in range(n_off):
        new_pop.append(_repaired(children[j], pa[j], constraints, rng, rate))
        new_scores.append(None)

    state.population = np.stack(new_pop)
    state.scores = new_scores
    return state


def _record(state: GAState, constraints: ConstraintSet) -> dict:
    feasible = sum(check_constraints(c, constraints).feasible for c in state.population)
    cost = state.best_score.cost
    return {"generation": state.generation, "best_cost": cost.total,
            "z1": cost.z1, "z2": cost.z2, "feasible_count": int(feasible)}


def run(specs: Sequence[BeamSpec], geometry: ArrayGeometry, constraints: ConstraintSet,
        config: GAConfig = GAConfig(), fov: FieldOfView = FieldOfView(),
        sampling: Sampling = Sampling(),
        progress: Callable[[dict], None] | None = None) -> GAResult:
    """Evolve until the best cost drops below ``f_min``, the generation cap, or stagnation."""
    if constraints.activation_limit.shape != geometry.shape:
        raise ValueError("activation limit shape does not match the array")
    evaluator = ChromosomeEvaluator(geometry, specs, fov, sampling, config.k1, config.k2)
    state = init_population(specs, constraints, config)
    state.stagnation_tol = config.stagnation_tol
    history = []
    while True:
        evaluate(state, evaluator, config.workers)
        rec = _record(state, constraints)
        history.append(rec)
        if progress is not None:
            progress(rec)
        if state.best_score.cost.total < config.f_min:
            reason = "target cost reached"
            break
        if state.generation >= config.max_generations:
            reason = "generation limit"
            break
        if state.generation - state.last_improvement >= config.stagnation_generations:
            reason = "stagnation"
            break
        select_and_cull(state)
        crossover_mutate(state, config, constraints)
        state.generation += 1
    log.info("GA stopped after %d generations (%s), best cost %.6g",
             state.generation, reason, state.best_score.cost.total)
    masks = state.best.copy()
    weights = WeightTensor.from_masks(masks, [s.direction for s in specs], geometry)
    return GAResult(masks=masks, weights=weights, score=state.best_score,
                    history=history, generations=state.generation, stop_reason=reason)

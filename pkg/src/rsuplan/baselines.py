"""Comparison solvers: greedy construction (GC), a genetic algorithm (GA) and an
exhaustive optimum for tiny instances."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .coverage import VisibilityTable, evaluate_deployment, required_tiles, top_mean
from .placement import Deployment, InfeasibleError

EXHAUSTIVE_MAX_CANDIDATES = 20


class SolverRefused(ValueError):
    pass


def solve_gc(table: VisibilityTable, tau: float, rss_th: float | None = None) -> Deployment:
    """Add the candidate with the most not-yet-covered LOS tiles until
    ceil(tau*|N|) tiles are covered. RSS plays no part in the choice;
    ``rss_th`` is only used to fill in the returned report."""
    k = required_tiles(table.n_tiles, tau)
    los = table.los
    deployed = np.zeros(table.n_candidates, dtype=bool)
    covered = np.zeros(table.n_tiles, dtype=bool)
    while covered.sum() < k:
        gains = los[:, ~covered].sum(axis=1)
        gains[deployed] = -1
        if gains.max() <= 0:
            raise InfeasibleError(
                f"coverage target {k}/{table.n_tiles} unreachable; max achievable {int(covered.sum())}",
                evaluate_deployment(table, np.nonzero(deployed)[0], tau, rss_th),
            )
        i = int(np.argmax(gains))
        deployed[i] = True
        covered |= los[i]
    ids = np.nonzero(deployed)[0]
    return Deployment.from_ids(table, ids, tau, rss_th, "gc", {int(i): 0 for i in ids})


def solve_exhaustive(table: VisibilityTable, tau: float, rss_th: float | None) -> Deployment:
    """Smallest feasible subset; among equal sizes the lexicographically smallest id set."""
    c = table.n_candidates
    if c > EXHAUSTIVE_MAX_CANDIDATES:
        raise SolverRefused(f"exhaustive search refused for {c} > {EXHAUSTIVE_MAX_CANDIDATES} candidates")
    k = required_tiles(table.n_tiles, tau)
    rss = table.rss
    for size in range(c + 1):
        for combo in itertools.combinations(range(c), size):
            best = rss[list(combo)].max(axis=0) if combo else np.full(table.n_tiles, -np.inf)
            if int(np.isfinite(best).sum()) < k:
                continue
            if rss_th is not None and k > 0 and top_mean(best, k) < rss_th:
                continue
            return Deployment.from_ids(table, combo, tau, rss_th, "exhaustive", {i: 0 for i in combo})
    raise InfeasibleError("no subset of the candidates is feasible",
                          evaluate_deployment(table, range(c), tau, rss_th))


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 100
    generations: int = 500
    tournament_size: int = 3
    crossover_prob: float = 0.9
    mutation_prob_per_bit: float | None = None  # None -> 1/|C|
    penalty_weight: float | None = None  # None -> 10*|C|
    seed: int = 0
    seed_with_gc: bool = True

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must be in [0, 1]")
        if self.mutation_prob_per_bit is not None and not 0.0 <= self.mutation_prob_per_bit <= 1.0:
            raise ValueError("mutation_prob_per_bit must be in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


class GaFitness:
    """Penalised cost of a selection vector; lower is better.

    cost = |D| for feasible selections, and
    |D| + |C| + W * (coverage shortfall fraction + RSS shortfall in dB)
    otherwise, so every infeasible selection costs more than any feasible one.
    """

    def __init__(self, table: VisibilityTable, tau: float, rss_th: float | None, penalty_weight: float | None = None):
        self.table = table
        self.tau = tau
        self.rss_th = rss_th
        self.k = required_tiles(table.n_tiles, tau)
        self.weight = 10.0 * table.n_candidates if penalty_weight is None else float(penalty_weight)
        self._cache: dict[bytes, tuple[float, bool]] = {}

    def __call__(self, chrom: np.ndarray) -> tuple[float, bool]:
        key = np.packbits(chrom).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = self._evaluate(chrom)
            self._cache[key] = hit
        return hit

    def _evaluate(self, chrom: np.ndarray) -> tuple[float, bool]:
        count = int(chrom.sum())
        k = self.k
        if count:
            best = self.table.rss[chrom].max(axis=0)
        else:
            best = np.full(self.table.n_tiles, -np.inf)
        finite = np.isfinite(best)
        covered = int(finite.sum())
        cov_short = max(0, k - covered) / k if k else 0.0
        rss_short = 0.0
        if self.rss_th is not None and k:
            m = min(k, covered)
            if m:
                vals = best[finite]
                mean = float(np.sort(np.partition(vals, len(vals) - m)[len(vals) - m:]).mean())
            else:
                mean = -200.0
            # shortfall against the covered part; coverage shortfall is penalised separately
            rss_short = max(0.0, self.rss_th - mean)
        feasible = cov_short == 0.0 and rss_short == 0.0
        if feasible:
            return float(count), True
        n = self.table.n_candidates
        return float(count + n + self.weight * (cov_short + rss_short)), False


def _tournament(rng: np.random.Generator, fitness: np.ndarray, size: int) -> int:
    picks = rng.integers(0, len(fitness), size=size)
    # lowest cost, then lowest index
    return int(min(picks, key=lambda p: (fitness[p], p)))


def solve_ga(table: VisibilityTable, tau: float, rss_th: float | None, config: GaConfig | None = None,
             trace: list | None = None) -> Deployment:
    """Genetic search over binary selection vectors.

    Tournament selection, uniform crossover, per-bit mutation and an elite
    of one. Returns the best feasible individual seen in any generation.
    When ``trace`` is a list, one ``(generation, best_cost, feasible)`` tuple
    per generation is appended to it, ``feasible`` referring to that
    generation's best individual.
    """
    cfg = config or GaConfig()
    c = table.n_candidates
    rng = np.random.default_rng(cfg.seed)
    fit = GaFitness(table, tau, rss_th, cfg.penalty_weight)
    p_mut = cfg.mutation_prob_per_bit if cfg.mutation_prob_per_bit is not None else 1.0 / c

    pop = rng.random((cfg.population_size, c)) < 0.5
    if cfg.seed_with_gc:
        try:
            gc = solve_gc(table, tau, rss_th)
            pop[0] = gc.selection
        except InfeasibleError:
            pass

    best_feasible: np.ndarray | None = None
    best_feasible_cost = math.inf
    best_cost = math.inf

    def score(population):
        nonlocal best_feasible, best_feasible_cost, best_cost
        res = [fit(ind) for ind in population]
        costs = np.array([r[0] for r in res])
        for ind, (cost, ok) in zip(population, res):
            if ok and cost < best_feasible_cost:
                best_feasible_cost = cost
                best_feasible = ind.copy()
        best_cost = min(best_cost, float(costs.min()))
        return costs, res[int(np.argmin(costs))][1]

    costs, top_ok = score(pop)
    if trace is not None:
        trace.append((0, float(costs.min()), top_ok))
    for gen in range(1, cfg.generations + 1):
        elite = int(np.argmin(costs))
        nxt = [pop[elite].copy()]
        while len(nxt) < cfg.population_size:
            a = pop[_tournament(rng, costs, cfg.tournament_size)]
            b = pop[_tournament(rng, costs, cfg.tournament_size)]
            if rng.random() < cfg.crossover_prob:
                mask = rng.random(c) < 0.5
                c1 = np.where(mask, a, b)
                c2 = np.where(mask, b, a)
            else:
                c1, c2 = a.copy(), b.copy()
            for child in (c1, c2):
                flip = rng.random(c) < p_mut
                child ^= flip
                if len(nxt) < cfg.population_size:
                    nxt.append(child)
        pop = np.array(nxt)
        costs, top_ok = score(pop)
        if trace is not None:
            trace.append((gen, float(costs.min()), top_ok))

    if best_feasible is None:
        raise InfeasibleError(f"GA found no feasible individual; best cost {best_cost:.3f}")
    ids = np.nonzero(best_feasible)[0]
    return Deployment.from_ids(table, ids, tau, rss_th, "ga", {int(i): 0 for i in ids})


def ga_trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["generation", "best_fitness", "feasible"])
    for gen, cost, ok in trace:
        w.writerow([gen, f"{cost:.6f}", int(ok)])
    return buf.getvalue()

"""Three-phase agile RSU placement.

Phase 1 greedily adds the candidate that serves the most still-unserved tiles
from its service list (the tiles it can serve while its mean RSS stays above
the threshold) until the coverage target holds. Phase 2 keeps adding RSUs,
first towards uncovered tiles and then by best mean RSS, until the RSS target
holds. Phase 3 swaps deployed and rejected sites while that improves coverage
or mean RSS without hurting either.

Ties are always broken towards the lowest candidate id.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coverage import (
    CoverageReport,
    VisibilityTable,
    evaluate_deployment,
    report_from_best,
    required_tiles,
    top_mean,
)

log = logging.getLogger(__name__)

MAX_SWAP_PASSES = 50
_CHUNK = 64


class InfeasibleError(RuntimeError):
    """The constraints cannot be met; ``report`` holds the best achieved metrics."""

    def __init__(self, message: str, report: CoverageReport | None = None):
        super().__init__(message)
        self.report = report


@dataclass
class Deployment:
    selection: np.ndarray  # bool over C
    report: CoverageReport
    algorithm: str = "agile"
    # candidate id -> phase (1, 2, 3) or 0 for baselines
    phase_added: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_ids(cls, table: VisibilityTable, ids: Sequence[int], tau: float, rss_th: float | None,
                 algorithm: str = "agile", phase_added: dict[int, int] | None = None) -> "Deployment":
        sel = np.zeros(table.n_candidates, dtype=bool)
        sel[list(ids)] = True
        report = evaluate_deployment(table, ids, tau, rss_th)
        return cls(sel, report, algorithm, dict(phase_added or {}))

    @property
    def chosen(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.nonzero(self.selection)[0])

    @property
    def rejected(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.nonzero(~self.selection)[0])

    @property
    def objective(self) -> int:
        return int(self.selection.sum())


@dataclass(frozen=True)
class ServiceList:
    """Per candidate, the RSS-descending LOS tiles whose running mean stays >= RSS_th."""

    tiles: tuple[np.ndarray, ...]
    mask: np.ndarray  # (C, N) bool view of ``tiles``

    def __len__(self) -> int:
        return len(self.tiles)


def compute_service_lists(table: VisibilityTable, rss_th: float | None) -> ServiceList:
    lists = []
    mask = np.zeros(table.rss.shape, dtype=bool)
    for i in range(table.n_candidates):
        row = table.rss[i]
        los = np.nonzero(np.isfinite(row))[0]
        # RSS descending, tile index ascending on ties
        order = los[np.lexsort((los, -row[los]))]
        if rss_th is not None and len(order):
            vals = row[order]
            means = np.cumsum(vals) / np.arange(1, len(vals) + 1)
            ok = np.nonzero(means >= rss_th)[0]
            order = order[: ok[-1] + 1] if len(ok) else order[:0]
        lists.append(order)
        mask[i, order] = True
    return ServiceList(tuple(lists), mask)


def _argmax_lowest(values: np.ndarray, allowed: np.ndarray) -> int:
    v = np.where(allowed, values, -np.inf)
    return int(np.argmax(v))


def _batch_add(table: VisibilityTable, best: np.ndarray, ids: np.ndarray, k: int):
    """Covered counts and top-k means after adding each of ``ids`` to ``best``."""
    covered = np.empty(len(ids), dtype=np.int64)
    means = np.empty(len(ids))
    for s in range(0, len(ids), _CHUNK):
        block = np.maximum(best[None, :], table.rss[ids[s:s + _CHUNK]])
        covered[s:s + _CHUNK] = np.isfinite(block).sum(axis=1)
        means[s:s + _CHUNK] = top_mean(block, k)
    return covered, means


def phase1(table: VisibilityTable, lists: ServiceList, tau: float, rss_th: float | None) -> Deployment:
    """Greedy coverage by service-list gain until ceil(tau*|N|) tiles are in LOS.

    When every service list is exhausted but coverage is still short, the
    gain falls back to raw LOS tiles so a reachable target is never missed.
    """
    k = required_tiles(table.n_tiles, tau)
    los = table.los
    deployed = np.zeros(table.n_candidates, dtype=bool)
    covered = np.zeros(table.n_tiles, dtype=bool)
    phase_added: dict[int, int] = {}
    while covered.sum() < k:
        gains = lists.mask[:, ~covered].sum(axis=1)
        gains[deployed] = -1
        if gains.max() <= 0:
            gains = los[:, ~covered].sum(axis=1)
            gains[deployed] = -1
            if gains.max() <= 0:
                best = table.rss[deployed].max(axis=0) if deployed.any() else np.full(table.n_tiles, -np.inf)
                report = report_from_best(best, tau, rss_th)
                raise InfeasibleError(
                    f"coverage target {k}/{table.n_tiles} unreachable; max achievable "
                    f"{int(covered.sum())}",
                    report,
                )
        i = int(np.argmax(gains))
        deployed[i] = True
        phase_added[i] = 1
        covered |= los[i]
    return Deployment.from_ids(table, np.nonzero(deployed)[0], tau, rss_th, "agile", phase_added)


def phase2(table: VisibilityTable, deployment: Deployment, tau: float, rss_th: float | None) -> Deployment:
    """Add RSUs until the mean-RSS constraint holds; no-op if it already does."""
    report = evaluate_deployment(table, deployment.chosen, tau, rss_th)
    if report.feasible_5c and report.feasible_5b:
        return Deployment(deployment.selection.copy(), report, deployment.algorithm, dict(deployment.phase_added))
    k = report.required
    los = table.los
    deployed = deployment.selection.copy()
    phase_added = dict(deployment.phase_added)
    best = report.best_rss.copy()
    while not report.feasible_5c:
        free = ~deployed
        if not free.any():
            raise InfeasibleError(
                f"all {table.n_candidates} candidates deployed; mean RSS "
                f"{report.mean_top_rss:.2f} dBm below {rss_th} dBm",
                report,
            )
        uncovered = ~np.isfinite(best)
        gains = los[:, uncovered].sum(axis=1)
        gains[deployed] = -1
        if gains.max() > 0:
            i = int(np.argmax(gains))
        else:
            ids = np.nonzero(free)[0]
            _, means = _batch_add(table, best, ids, k)
            i = int(ids[int(np.argmax(means))])
        deployed[i] = True
        phase_added[i] = 2
        np.maximum(best, table.rss[i], out=best)
        report = report_from_best(best.copy(), tau, rss_th)
    return Deployment.from_ids(table, np.nonzero(deployed)[0], tau, rss_th, deployment.algorithm, phase_added)


def _feasible_mask(covered: np.ndarray, means: np.ndarray, k: int, rss_th: float | None) -> np.ndarray:
    ok = covered >= k
    if rss_th is not None and k > 0:
        ok &= means >= rss_th
    return ok


def phase3(table: VisibilityTable, deployment: Deployment, tau: float, rss_th: float | None,
           max_passes: int = MAX_SWAP_PASSES) -> Deployment:
    """Swap deployed sites for rejected ones while (coverage, mean RSS) improves.

    A swap is accepted only if the result stays feasible, neither metric gets
    worse and at least one gets strictly better; among accepted swaps the
    lexicographically best (coverage first) wins.
    """
    k = required_tiles(table.n_tiles, tau)
    deployed = deployment.selection.copy()
    phase_added = dict(deployment.phase_added)
    for _ in range(max_passes):
        swapped = False
        for i in [int(j) for j in np.nonzero(deployed)[0]]:
            if not deployed[i]:
                continue
            rest = deployed.copy()
            rest[i] = False
            base = table.rss[rest].max(axis=0) if rest.any() else np.full(table.n_tiles, -np.inf)
            cur_best = np.maximum(base, table.rss[i])
            cur_cov = int(np.isfinite(cur_best).sum())
            cur_mean = top_mean(cur_best, k)
            ids = np.nonzero(~deployed)[0]
            if not len(ids):
                break
            cov, means = _batch_add(table, base, ids, k)
            ok = _feasible_mask(cov, means, k, rss_th)
            ok &= (cov >= cur_cov) & (means >= cur_mean)
            ok &= (cov > cur_cov) | (means > cur_mean)
            if not ok.any():
                continue
            cand = np.nonzero(ok)[0]
            # lexicographic (coverage, mean) max; lexsort keeps lowest id first on ties
            order = np.lexsort((ids[cand], -means[cand], -cov[cand]))
            j = int(ids[cand[order[0]]])
            deployed[i] = False
            deployed[j] = True
            phase_added.pop(i, None)
            phase_added[j] = 3
            swapped = True
        if not swapped:
            break
    else:
        log.warning("phase 3 stopped at the %d-pass cap", max_passes)
    return Deployment.from_ids(table, np.nonzero(deployed)[0], tau, rss_th, deployment.algorithm, phase_added)


def solve_agile(table: VisibilityTable, tau: float, rss_th: float | None) -> Deployment:
    """Run all three phases and re-check the result from scratch.

    Raises:
        InfeasibleError: when even the full candidate set misses a constraint.
    """
    lists = compute_service_lists(table, rss_th)
    dep = phase1(table, lists, tau, rss_th)
    if not (dep.report.feasible_5b and dep.report.feasible_5c):
        dep = phase2(table, dep, tau, rss_th)
    dep = phase3(table, dep, tau, rss_th)
    check = evaluate_deployment(table, dep.chosen, tau, rss_th)
    if not check.feasible:
        raise InfeasibleError("placement finished without meeting the constraints", check)
    dep.report = check
    return dep

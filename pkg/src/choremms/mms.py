"""Exact and bounded maxmin-share computation.

An agent's maxmin share is the smallest achievable maximum bundle cost over
all n-partitions of the items, measured with the agent's own cost row. The
exact solver is a branch-and-bound over item-to-bundle assignments (items in
descending cost order, duplicate-load symmetry skipped, incumbent seeded by
a longest-processing-time greedy). Exact MMS is NP-hard, so item counts are
capped; above the cap only the cheap lower/upper bounds are available.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import Allocation, AgentEval, CostMatrix, EvalReport, ratio_of

DEFAULT_CAP = 20


class MmsCapError(ValueError):
    """Raised when an exact computation is refused for being too large."""


@dataclass(frozen=True)
class MmsResult:
    value: float
    witness: Allocation
    method: str  # "exact" or "bound-only"


def _sorted_bundles(bundles: list[set[int]], row: Sequence[float]) -> Allocation:
    # descending bundle cost, ties by item content, for determinism
    keyed = sorted(
        bundles,
        key=lambda b: (-sum(row[j] for j in b), tuple(sorted(b))),
    )
    return Allocation.from_lists(keyed)


def _lpt(items: list[int], row: Sequence[float], n: int) -> tuple[float, list[set[int]]]:
    """Greedy longest-processing-time partition: feasible, not optimal."""
    loads = [0.0] * n
    bundles: list[set[int]] = [set() for _ in range(n)]
    for j in items:  # items arrive in descending cost order
        b = min(range(n), key=lambda k: (loads[k], k))
        loads[b] += row[j]
        bundles[b].add(j)
    return max(loads), bundles


def mms_exact(row: Sequence[float], n: int, cap: int = DEFAULT_CAP) -> MmsResult:
    """Minimize the maximum bundle cost over all n-partitions of the row.

    Raises MmsCapError for more than `cap` items: use mms_bounds instead.
    """
    m = len(row)
    if n < 1:
        raise ValueError("agent count must be >= 1")
    if any(c < 0 for c in row):
        raise ValueError("costs must be nonnegative")
    if m > cap:
        raise MmsCapError(
            f"{m} items exceeds the exact-computation cap of {cap}; use mms_bounds"
        )
    total = float(sum(row))
    if n == 1:
        return MmsResult(total, Allocation.from_lists([set(range(m))]), "exact")

    items = sorted((j for j in range(m) if row[j] > 0), key=lambda j: (-row[j], j))
    zeros = [j for j in range(m) if row[j] == 0]

    if len(items) <= n:
        # one positive item per bundle is optimal
        bundles: list[set[int]] = [set() for _ in range(n)]
        for k, j in enumerate(items):
            bundles[k].add(j)
        bundles[-1].update(zeros)
        value = row[items[0]] if items else 0.0
        return MmsResult(float(value), _sorted_bundles(bundles, row), "exact")

    lower = max(total / n, max(row))
    best_val, lpt_bundles = _lpt(items, row, n)
    costs = [row[j] for j in items]
    assign = [0] * len(items)
    best_assign: list[int] | None = None
    if best_val <= lower:
        best_assign = None  # LPT already optimal, keep its bundles
    loads = [0.0] * n
    proven = False

    def dfs(idx: int, cur_max: float) -> None:
        nonlocal best_val, best_assign, proven
        if proven:
            return
        if idx == len(items):
            best_val = cur_max
            best_assign = assign.copy()
            if best_val <= lower:
                proven = True
            return
        c = costs[idx]
        seen: set[float] = set()
        for b in range(n):
            load = loads[b]
            if load in seen:
                continue  # bundles with equal load are interchangeable
            seen.add(load)
            new_load = load + c
            if new_load >= best_val:
                continue
            loads[b] = new_load
            assign[idx] = b
            dfs(idx + 1, new_load if new_load > cur_max else cur_max)
            loads[b] = load
            if proven:
                return

    if best_val > lower:
        dfs(0, 0.0)

    if best_assign is None:
        bundles = [set(b) for b in lpt_bundles]
    else:
        bundles = [set() for _ in range(n)]
        for idx, b in enumerate(best_assign):
            bundles[b].add(items[idx])
    # zero-cost items never move the max; park them in the lightest bundle
    if zeros:
        lightest = min(range(n), key=lambda k: (sum(row[j] for j in bundles[k]), k))
        bundles[lightest].update(zeros)
    return MmsResult(float(best_val), _sorted_bundles(bundles, row), "exact")


def mms_bounds(row: Sequence[float], n: int) -> tuple[float, float]:
    """Cheap bracket: lower = max(total/n, max item), upper = LPT greedy."""
    if n < 1:
        raise ValueError("agent count must be >= 1")
    m = len(row)
    total = float(sum(row))
    lower = max(total / n, max(row) if m else 0.0)
    items = sorted(range(m), key=lambda j: (-row[j], j))
    upper, _ = _lpt(items, row, n)
    return lower, max(upper, lower)


def mms_table(matrix: CostMatrix, cap: int = DEFAULT_CAP) -> list[MmsResult]:
    """Exact MMS for every agent of the instance."""
    return [mms_exact(matrix.row(i), matrix.n, cap=cap) for i in range(matrix.n)]


def certify(
    allocation: Allocation,
    matrix: CostMatrix,
    alpha: float,
    cap: int = DEFAULT_CAP,
    tol: float = 0.0,
) -> list[bool]:
    """Per-agent check that bundle cost <= alpha * MMS (0/0 counts as 1)."""
    results = []
    for i in range(matrix.n):
        cost = matrix.cost_of(i, allocation.bundles[i])
        mms = mms_exact(matrix.row(i), matrix.n, cap=cap).value
        results.append(ratio_of(cost, mms) <= alpha + tol)
    return results


def evaluate(
    allocation: Allocation, matrix: CostMatrix, cap: int = DEFAULT_CAP
) -> EvalReport:
    """Cost / exact MMS / ratio per agent, plus the max ratio."""
    problems = allocation.check_partition(matrix.m)
    if problems:
        raise ValueError("not a partition: " + "; ".join(problems))
    per_agent = []
    for i in range(matrix.n):
        cost = matrix.cost_of(i, allocation.bundles[i])
        mms = mms_exact(matrix.row(i), matrix.n, cap=cap).value
        per_agent.append(AgentEval(cost=cost, mms=mms, ratio=ratio_of(cost, mms)))
    return EvalReport(tuple(per_agent), max(a.ratio for a in per_agent))

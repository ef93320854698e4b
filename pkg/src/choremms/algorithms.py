"""The four allocation algorithms behind one uniform interface.

All of them take a cost matrix and return a partition of the items:

  - seqpick: agents act in reverse index order, each taking a fixed number
    of its cheapest remaining items (the schedule sizes grow geometrically,
    which is what yields the logarithmic guarantee);
  - randdecl: every item lands on a uniformly random agent, then items that
    landed on an agent who had declared them "large" are pooled and dealt
    back out evenly;
  - roundrobin: agents take turns picking their cheapest remaining item;
  - divide_choose_3: three fixed bundles built from agent 1's ranking,
    agents 2 and 3 choose in turn, agent 1 keeps the leftover.

Randomness is always owned by the call through an explicit seed; there is
no global generator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import Allocation, CostMatrix, Model, rank, rankings, surrogate_matrix

logger = logging.getLogger(__name__)

ALGORITHMS = ("seqpick", "randdecl", "roundrobin", "dc3")


# --- sequential picking ----------------------------------------------------

@dataclass(frozen=True)
class PickSchedule:
    """The bundle sizes a_1..a_n used by seqpick (agent n picks first).

    `truncated` marks entries clipped by the items-remaining guard;
    `repaired` is the deficit added to a_n when the raw formula undershoots
    m (which happens outside the large-m/n regime the formula targets).
    """

    counts: tuple[int, ...]
    k_param: float
    truncated: tuple[bool, ...]
    repaired: int

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def m(self) -> int:
        return sum(self.counts)


def build_schedule(n: int, m: int) -> PickSchedule:
    """Geometric pick schedule: 2 items for the first half of the agents,
    then sizes growing by (1 + K/n) per agent with K = 2*log2(m/n).

    Requires m > n; with m <= n a one-item-each allocation is already
    optimal and seqpick is the wrong tool.
    """
    if n < 1:
        raise ValueError("agent count must be >= 1")
    if m <= n:
        raise ValueError(f"schedule needs m > n (got n={n}, m={m}); allocate one item each")
    k = 2.0 * math.log2(m / n)
    half = n // 2
    counts: list[int] = []
    truncated: list[bool] = []
    prefix = 0
    for i in range(1, n + 1):
        if i <= half:
            a, clipped = 2, False
        else:
            raw = math.ceil(k * (1.0 + k / n) ** (i - half - 1))
            # clip to the growth cap outright: smaller entries only improve
            # the ratio, and the cap is what the guarantee actually needs
            cap = int(math.floor(k * math.ceil(prefix / n) + 1e-9)) if prefix else raw
            a = min(m - prefix, raw, cap)
            clipped = a < min(raw, cap)
        counts.append(a)
        truncated.append(clipped)
        prefix += a
    repaired = m - prefix
    if repaired > 0:
        # The geometric series ran out of agents before covering m items.
        # Hand the deficit to the first picker: it faces all m items, so its
        # per-item greedy cost is the smallest.
        counts[-1] += repaired
        logger.info(
            "schedule deficit repair: n=%d m=%d, added %d items to a_n", n, m, repaired
        )
    return PickSchedule(tuple(counts), k, tuple(truncated), max(repaired, 0))


def check_schedule(schedule: PickSchedule, n: int, m: int) -> list[str]:
    """Verify the two schedule obligations, returning violations.

    1. all items are picked: the counts sum to m;
    2. growth cap: every second-half entry satisfies
       a_i <= K * ceil(prefix/n). The deficit-repaired entry is exempt
       (repair happens precisely when the capped formula cannot cover m,
       and it is logged and counted separately).
    """
    problems = []
    if schedule.n != n:
        problems.append(f"schedule has {schedule.n} entries, expected {n}")
        return problems
    if schedule.m != m:
        problems.append(f"schedule covers {schedule.m} items, expected {m}")
    half = n // 2
    k = schedule.k_param
    prefix = 0
    for idx, a in enumerate(schedule.counts):
        i = idx + 1
        exempt = idx == n - 1 and schedule.repaired > 0
        if i > half and prefix > 0 and not exempt:
            bound = k * math.ceil(prefix / n)
            if a > bound + 1e-9:
                problems.append(
                    f"a_{i}={a} exceeds growth cap K*ceil(prefix/n)={bound:.6g}"
                )
        prefix += a
    return problems


def seqpick(matrix: CostMatrix, schedule: PickSchedule) -> Allocation:
    """Agents n, n-1, ..., 1 each grab their a_i cheapest remaining items.

    Greedy is each picker's dominant strategy, so this doubles as the
    truthful play of the serial-dictatorship rule the schedule defines.
    """
    n, m = matrix.n, matrix.m
    if schedule.n != n or schedule.m != m:
        raise ValueError(
            f"schedule for (n={schedule.n}, m={schedule.m}) does not match "
            f"instance (n={n}, m={m})"
        )
    remaining = set(range(m))
    bundles: list[set[int]] = [set() for _ in range(n)]
    for i in reversed(range(n)):
        row = matrix.row(i)
        order = sorted(remaining, key=lambda j: (row[j], j))
        take = order[: schedule.counts[i]]
        bundles[i].update(take)
        remaining.difference_update(take)
    return Allocation.from_lists(bundles)


# --- randomized declare-and-redistribute ------------------------------------

def label_count(n: int, m: int) -> int:
    """How many items each agent declares large: min(floor(n*sqrt(log2 n)), m)."""
    if n < 2:
        raise ValueError("label count needs at least 2 agents")
    return min(int(math.floor(n * math.sqrt(math.log2(n)))), m)


def label_sets(matrix: CostMatrix) -> tuple[frozenset[int], ...]:
    """Truthful labels: each agent's top-K items by cost (canonical ties)."""
    k = label_count(matrix.n, matrix.m)
    return tuple(frozenset(order[:k]) for order in rankings(matrix))


def randdecl(
    matrix: CostMatrix,
    seed: int,
    label_override: Optional[tuple[int, frozenset[int]]] = None,
) -> Allocation:
    """Random assignment, then even redistribution of declared-large items.

    Phase 1 sends every item to a uniformly random agent. Items that landed
    on an agent who declared them large form the pool M_b. Phase 2 shuffles
    the pool and deals it round-robin from a uniformly random starting
    agent, so shares differ by at most one and each pooled item ends up with
    each agent with probability exactly 1/n. Fully reproducible from `seed`.

    `label_override` replaces one agent's declared label set (it must still
    have the canonical size); everyone else stays truthful.
    """
    n, m = matrix.n, matrix.m
    if n < 2:
        raise ValueError("randdecl needs at least 2 agents")
    labels = list(label_sets(matrix))
    if label_override is not None:
        agent, declared = label_override
        declared = frozenset(declared)
        if len(declared) != label_count(n, m):
            raise ValueError(
                f"label override must have size {label_count(n, m)}, got {len(declared)}"
            )
        labels[agent] = declared
    rng = np.random.default_rng(seed)
    landing = rng.integers(0, n, size=m)
    pooled = [j for j in range(m) if j in labels[landing[j]]]
    bundles: list[set[int]] = [set() for _ in range(n)]
    pool_set = set(pooled)
    for j in range(m):
        if j not in pool_set:
            bundles[int(landing[j])].add(j)
    deal = rng.permutation(len(pooled))
    start = int(rng.integers(0, n))
    for t, idx in enumerate(deal):
        bundles[(start + t) % n].add(pooled[int(idx)])
    return Allocation.from_lists(bundles)


def randdecl_expected_cost(
    matrix: CostMatrix,
    agent: int,
    label_override: Optional[frozenset[int]] = None,
) -> float:
    """Closed-form expected cost of `agent` under randdecl.

    Assumes all other agents declare truthfully; `agent` declares
    `label_override` if given, otherwise truthfully. Decomposes as the
    phase-1 keep term (1/n of the agent's non-declared costs) plus 1/n of
    the expected pooled cost, where item j enters the pool with probability
    b_j/n (b_j = how many agents declared j large).
    """
    n, m = matrix.n, matrix.m
    labels = list(label_sets(matrix))
    if label_override is not None:
        declared = frozenset(label_override)
        if len(declared) != label_count(n, m):
            raise ValueError(
                f"label override must have size {label_count(n, m)}, got {len(declared)}"
            )
        labels[agent] = declared
    row = matrix.row(agent)
    mine = labels[agent]
    phase1 = sum(row[j] for j in range(m) if j not in mine) / n
    pool_exp = sum(row[j] * sum(j in labels[k] for k in range(n)) for j in range(m)) / n
    return phase1 + pool_exp / n


# --- round robin -------------------------------------------------------------

def roundrobin(matrix: CostMatrix, agent_order: Optional[Sequence[int]] = None) -> Allocation:
    """Agents take turns (in `agent_order`, default ascending) picking the
    cheapest remaining item by their own row."""
    n, m = matrix.n, matrix.m
    order = list(range(n)) if agent_order is None else list(agent_order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"agent order {order} is not a permutation of 0..{n - 1}")
    remaining = set(range(m))
    bundles: list[set[int]] = [set() for _ in range(n)]
    while remaining:
        for i in order:
            if not remaining:
                break
            row = matrix.row(i)
            j = min(remaining, key=lambda t: (row[t], t))
            bundles[i].add(j)
            remaining.remove(j)
    return Allocation.from_lists(bundles)


# --- divide and choose for three agents --------------------------------------

def divide_choose_3(matrix: CostMatrix) -> Allocation:
    """Three fixed bundles cut along agent 1's ranking; agents 2 then 3 take
    their cheapest available bundle, agent 1 keeps the last one.

    With items relabelled in agent 1's descending order, the bundles are the
    top item alone, the even positions, and the remaining odd positions.
    """
    n = matrix.n
    if n != 3:
        raise ValueError(f"divide_choose_3 requires n=3 (got n={n})")
    order = rank(matrix, 0)
    s1 = {order[0]}
    s2 = {order[pos] for pos in range(1, matrix.m, 2)}
    s3 = {order[pos] for pos in range(2, matrix.m, 2)}
    candidates = [s1, s2, s3]

    def cheapest(agent: int, available: list[int]) -> int:
        row = matrix.row(agent)
        return min(available, key=lambda b: (sum(row[j] for j in candidates[b]), b))

    pick2 = cheapest(1, [0, 1, 2])
    left = [b for b in (0, 1, 2) if b != pick2]
    pick3 = cheapest(2, left)
    pick1 = next(b for b in left if b != pick3)
    return Allocation.from_lists([candidates[pick1], candidates[pick2], candidates[pick3]])


# --- dispatcher ----------------------------------------------------------------

def one_item_each(matrix: CostMatrix) -> Allocation:
    """m <= n bypass: hand out one item per agent, largest global max-cost
    item to agent 1 and so on. Any such allocation is already MMS-optimal."""
    n, m = matrix.n, matrix.m
    if m > n:
        raise ValueError("one_item_each requires m <= n")
    ranked = sorted(
        range(m), key=lambda j: (-max(matrix.row(i)[j] for i in range(n)), j)
    )
    bundles: list[set[int]] = [set() for _ in range(n)]
    for k, j in enumerate(ranked):
        bundles[k].add(j)
    return Allocation.from_lists(bundles)


def allocate(
    matrix: CostMatrix,
    algorithm: str,
    model: Model = Model.CARDINAL,
    seed: Optional[int] = None,
    agent_order: Optional[Sequence[int]] = None,
    schedule: Optional[PickSchedule] = None,
) -> Allocation:
    """Run one of the four algorithms on an instance.

    When m <= n the algorithm is bypassed entirely in favour of a one-item-
    each allocation. Under the ordinal model, ranking-driven algorithms are
    handed surrogate costs built from the rankings alone, so two instances
    with identical rankings produce identical allocations no matter the
    magnitudes.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if algorithm == "dc3" and matrix.n != 3:
        raise ValueError(f"dc3 requires n=3 (got n={matrix.n})")
    if matrix.m <= matrix.n:
        return one_item_each(matrix)
    if algorithm == "randdecl" and seed is None:
        raise ValueError("randdecl requires a seed")

    work = matrix
    if model is Model.ORDINAL and algorithm in ("seqpick", "roundrobin", "randdecl"):
        work = surrogate_matrix(rankings(matrix))

    if algorithm == "seqpick":
        sched = schedule or build_schedule(matrix.n, matrix.m)
        return seqpick(work, sched)
    if algorithm == "randdecl":
        return randdecl(work, seed)
    if algorithm == "roundrobin":
        return roundrobin(work, agent_order)
    return divide_choose_3(work)

"""Seeded instance generators and the batch experiment harness.

Instances come from a PCG64 generator keyed by the spec's seed, so every
table is reproducible cell by cell; batch output rows are sorted before
writing so parallel execution never changes the file. The runtime column is
measured wall time and is excluded from any determinism comparison.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .algorithms import allocate
from .mms import DEFAULT_CAP, MmsCapError, evaluate
from .model import CostMatrix

logger = logging.getLogger(__name__)

FAMILIES = ("uniform", "exponential", "identical_ranking", "correlated", "fixture")

CSV_COLUMNS = ("family", "n", "m", "algorithm", "seed", "max_ratio", "runtime_ms")


@dataclass(frozen=True)
class GenSpec:
    """One cell of the experiment grid: a family, sizes, and a seed."""

    family: str
    n: int
    m: int
    seed: int
    lo: float = 0.0
    hi: float = 1.0
    rate: float = 1.0
    rho: float = 0.5
    name: str = ""
    index: int = 0

    def label(self) -> str:
        if self.family == "uniform":
            return f"uniform({self.lo:g},{self.hi:g})"
        if self.family == "exponential":
            return f"exponential({self.rate:g})"
        if self.family == "correlated":
            return f"correlated({self.rho:g})"
        if self.family == "fixture":
            return f"fixture({self.name}:{self.index})"
        return self.family


def generate(spec: GenSpec) -> CostMatrix:
    """Build one instance; identical specs always yield identical matrices."""
    if spec.family not in FAMILIES:
        raise ValueError(f"unknown family {spec.family!r}; choose from {FAMILIES}")
    if spec.family == "fixture":
        from .verify import fixture_instances

        return fixture_instances(spec.name)[spec.index]
    if spec.n < 1 or spec.m < 1:
        raise ValueError("n and m must be >= 1")
    rng = np.random.default_rng(spec.seed)
    if spec.family == "uniform":
        if spec.lo < 0 or spec.hi < spec.lo:
            raise ValueError("uniform family needs 0 <= lo <= hi")
        grid = rng.uniform(spec.lo, spec.hi, size=(spec.n, spec.m))
    elif spec.family == "exponential":
        if spec.rate <= 0:
            raise ValueError("exponential family needs rate > 0")
        grid = rng.exponential(1.0 / spec.rate, size=(spec.n, spec.m))
    elif spec.family == "identical_ranking":
        # every row sorted descending along one shared permutation
        order = rng.permutation(spec.m)
        grid = np.empty((spec.n, spec.m))
        for i in range(spec.n):
            vals = np.sort(rng.uniform(0.0, 1.0, size=spec.m))[::-1]
            grid[i, order] = vals
    else:  # correlated
        if not 0.0 <= spec.rho <= 1.0:
            raise ValueError("correlated family needs rho in [0, 1]")
        common = rng.uniform(0.0, 1.0, size=spec.m)
        private = rng.uniform(0.0, 1.0, size=(spec.n, spec.m))
        grid = spec.rho * common[None, :] + (1.0 - spec.rho) * private
    return CostMatrix.from_rows(grid.tolist())


@dataclass(frozen=True)
class BatchFailure:
    spec: GenSpec
    algorithm: str
    seed: int
    reason: str


def _run_cell(spec: GenSpec, algorithm: str, seed: int, cap: int):
    inst = generate(replace(spec, seed=seed))
    t0 = time.perf_counter()
    alloc = allocate(inst, algorithm, seed=seed)
    report = evaluate(alloc, inst, cap=cap)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    return (spec.label(), spec.n, spec.m, algorithm, seed, report.max_ratio, runtime_ms)


def run_batch(
    specs: Sequence[GenSpec],
    algorithms: Sequence[str],
    seeds_per_spec: int,
    cap: int = DEFAULT_CAP,
    workers: int = 1,
) -> tuple[list[tuple], list[BatchFailure]]:
    """Allocate + certify every (spec, algorithm, seed) cell.

    Returns sorted result rows and the failures (cap violations, algorithm
    preconditions) that were skipped; the batch never aborts on one cell.
    """
    cells = [
        (spec, alg, spec.seed + k)
        for spec in specs
        for alg in algorithms
        for k in range(seeds_per_spec)
    ]
    rows: list[tuple] = []
    failures: list[BatchFailure] = []

    def work(cell):
        spec, alg, seed = cell
        try:
            return _run_cell(spec, alg, seed, cap), None
        except (MmsCapError, ValueError) as exc:
            return None, BatchFailure(spec, alg, seed, str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, cells))
    else:
        outcomes = [work(c) for c in cells]
    for row, failure in outcomes:
        if failure is not None:
            logger.warning(
                "batch cell skipped (%s, %s, seed=%d): %s",
                failure.spec.label(),
                failure.algorithm,
                failure.seed,
                failure.reason,
            )
            failures.append(failure)
        else:
            rows.append(row)
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    return rows, failures


def rows_to_csv(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for family, n, m, alg, seed, max_ratio, runtime_ms in rows:
        writer.writerow(
            [family, n, m, alg, seed, f"{max_ratio:.12g}", f"{runtime_ms:.3f}"]
        )
    return buf.getvalue()


def write_csv(rows: Sequence[tuple], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def strip_runtime(csv_text: str) -> str:
    """Drop the runtime column; what is left must be byte-stable across runs."""
    out_lines = []
    for line in csv_text.splitlines():
        out_lines.append(line.rsplit(",", 1)[0])
    return "\n".join(out_lines) + "\n"


def aggregate(rows: Sequence[tuple]) -> dict[tuple, dict[str, float]]:
    """Mean/max of max_ratio per (family, n, m, algorithm) cell."""
    groups: dict[tuple, list[float]] = {}
    for family, n, m, alg, _seed, max_ratio, _rt in rows:
        groups.setdefault((family, n, m, alg), []).append(max_ratio)
    return {
        key: {
            "runs": float(len(vals)),
            "mean_max_ratio": sum(vals) / len(vals),
            "max_max_ratio": max(vals),
        }
        for key, vals in groups.items()
    }


def specs_from_config(doc: dict) -> tuple[list[GenSpec], list[str], int]:
    """Parse the eval config: {"specs": [...], "algorithms": [...],
    "seeds_per_spec": int}."""
    raw_specs = doc.get("specs")
    algorithms = doc.get("algorithms")
    seeds_per_spec = doc.get("seeds_per_spec", 1)
    if not isinstance(raw_specs, list) or not isinstance(algorithms, list):
        raise ValueError('config needs "specs" and "algorithms" lists')
    field_names = {f for f in GenSpec.__dataclass_fields__}
    specs = []
    for entry in raw_specs:
        unknown = set(entry) - field_names
        if unknown:
            raise ValueError(f"unknown spec fields {sorted(unknown)}")
        specs.append(GenSpec(**entry))
    return specs, list(algorithms), int(seeds_per_spec)

"""Sample sets and random walks over a landscape.

Everything here is deterministic given (landscape, seed): samplers use a
single PCG64 stream seeded from the caller's seed, and each walk owns an
independent generator derived from (master seed, route id).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .benchmark import Landscape, NKLandscape, TabularLandscape
from .errors import SamplingError, ValidationError
from .genotype import Genotype, hamming

SeedLike = int | Sequence[int]

DEFAULT_WALK_COUNT = 30
DEFAULT_WALK_STEPS = 100
LHS_RETRY_FACTOR = 100


@dataclass(frozen=True)
class SampleSet:
    """Distinct valid genotypes drawn from one landscape."""

    genotypes: tuple[Genotype, ...]
    method: str
    seed: SeedLike
    strata: tuple[tuple[int, ...], ...] | None = None  # per sample, per dimension

    def __post_init__(self):
        object.__setattr__(self, "genotypes", tuple(self.genotypes))
        if len(set(self.genotypes)) != len(self.genotypes):
            raise SamplingError("sample set contains duplicates")

    def __len__(self) -> int:
        return len(self.genotypes)

    def __iter__(self):
        return iter(self.genotypes)


@dataclass(frozen=True)
class Walk:
    """A Hamming-chain of genotypes with the fitness observed at each one."""

    route_id: int
    genotypes: tuple[Genotype, ...]
    fitness_series: tuple[float, ...]
    stuck: bool = False

    def __post_init__(self):
        object.__setattr__(self, "genotypes", tuple(self.genotypes))
        object.__setattr__(self, "fitness_series", tuple(float(f) for f in self.fitness_series))
        if len(self.genotypes) != len(self.fitness_series):
            raise ValidationError("walk fitness series length differs from genotypes")
        for a, b in zip(self.genotypes, self.genotypes[1:]):
            if hamming(a, b) != 1:
                raise ValidationError(
                    f"walk step {a.to_string()[:16]}...->{b.to_string()[:16]}... "
                    "is not a single bit flip")

    @property
    def steps(self) -> int:
        return len(self.genotypes) - 1


def _rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def sample_uniform(landscape: Landscape, n: int, seed: SeedLike) -> SampleSet:
    """n distinct genotypes drawn uniformly from the landscape."""
    if n < 1:
        raise SamplingError("sample count must be >= 1")
    if n > landscape.size:
        raise SamplingError(f"cannot draw {n} distinct samples from a space of "
                            f"size {landscape.size}")
    rng = _rng(seed)
    if isinstance(landscape, TabularLandscape):
        members = landscape.members()
        idx = rng.choice(len(members), size=n, replace=False)
        chosen = tuple(members[int(i)] for i in idx)
        return SampleSet(chosen, "uniform", seed)

    seen: dict[Genotype, None] = {}
    while len(seen) < n:
        g = landscape.random_member(rng)
        if g not in seen:
            seen[g] = None
    return SampleSet(tuple(seen), "uniform", seed)


def sample_lhs(landscape: Landscape, n: int, seed: SeedLike,
               retry_budget: int | None = None) -> SampleSet:
    """Latin hypercube sample over the landscape's joint representation.

    Each dimension is split into n strata used exactly once across the
    batch.  Candidates that do not decode to a member of the landscape
    (or duplicate another sample) are repaired with minimal disturbance:
    first by redrawing the within-stratum position, then by swapping
    stratum assignments between two samples of one dimension, which keeps
    every dimension's occupancy a permutation.
    """
    if n < 1:
        raise SamplingError("sample count must be >= 1")
    if n > landscape.size:
        raise SamplingError(f"cannot draw {n} distinct samples from a space of "
                            f"size {landscape.size}")
    rng = _rng(seed)
    dims = landscape.lhs_dimensions()
    budget = (LHS_RETRY_FACTOR * n) if retry_budget is None else retry_budget

    # strata[i][d]: stratum of sample i in dimension d; column-wise permutations.
    strata = np.column_stack([rng.permutation(n) for _ in dims])

    def realize(i: int) -> Genotype | None:
        levels = []
        for d, levels_count in enumerate(dims):
            u = rng.random()
            position = (strata[i, d] + u) / n
            levels.append(min(int(position * levels_count), levels_count - 1))
        return landscape.genotype_from_levels(levels)

    genotypes: list[Genotype | None] = [None] * n
    used: dict[Genotype, int] = {}
    pending = list(range(n))
    spent = 0
    while pending:
        if spent >= budget:
            raise SamplingError(
                f"LHS could not produce {n} valid distinct samples within "
                f"{budget} candidate draws ({len(pending)} unresolved)")
        i = pending[0]
        g = realize(i)
        spent += 1
        if g is not None and g not in used:
            genotypes[i] = g
            used[g] = i
            pending.pop(0)
            continue
        # Perturb the stratum structure: transpose one dimension's strata
        # between this sample and a partner (invalid partners first).
        d = int(rng.integers(len(dims)))
        pool = pending[1:] if len(pending) > 1 else [j for j in range(n) if j != i]
        j = pool[int(rng.integers(len(pool)))]
        strata[[i, j], d] = strata[[j, i], d]
        if genotypes[j] is not None:
            replacement = realize(j)
            spent += 1
            if replacement is None or (replacement in used and used[replacement] != j):
                strata[[i, j], d] = strata[[j, i], d]  # revert; partner must stay valid
            else:
                del used[genotypes[j]]
                genotypes[j] = replacement
                used[replacement] = j
    return SampleSet(tuple(genotypes), "lhs", seed,
                     strata=tuple(tuple(int(s) for s in row) for row in strata))


def random_walk(landscape: Landscape, start: Genotype, steps: int,
                seed: SeedLike, route_id: int = 0) -> Walk:
    """Uniform random walk over the Hamming-1 neighborhood graph.

    Records fitness at every visited point (steps + 1 entries).  If some
    visited genotype has an empty neighborhood the walk is truncated and
    flagged stuck.
    """
    if steps < 1:
        raise SamplingError("walk length must be >= 1 step")
    if not landscape.contains(start):
        raise SamplingError("walk start is not a member of the landscape")
    rng = _rng(seed)
    genotypes = [start]
    fitness = [landscape.fitness(start)]
    stuck = False
    current = start
    for _ in range(steps):
        options = landscape.neighbors(current)
        if not options:
            stuck = True
            break
        current = options[int(rng.integers(len(options)))]
        genotypes.append(current)
        fitness.append(landscape.fitness(current))
    return Walk(route_id, tuple(genotypes), tuple(fitness), stuck=stuck)


def generate_walks(landscape: Landscape, n_walks: int, steps: int,
                   master_seed: SeedLike, jobs: int = 1) -> list[Walk]:
    """Independent walks from uniformly drawn starts.

    Each route derives its own generator from (master seed, route id), so
    results are identical regardless of worker count; routes are reduced
    in index order.
    """
    master = list(master_seed) if isinstance(master_seed, Sequence) else [master_seed]

    def one(route_id: int) -> Walk:
        start_rng = _rng(master + [route_id, 0])
        start = landscape.random_member(start_rng)
        return random_walk(landscape, start, steps, master + [route_id, 1],
                           route_id=route_id)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, range(n_walks)))
    return [one(route_id) for route_id in range(n_walks)]


def moving_average(series: Sequence[float], window: int = 5) -> list[float]:
    """Trailing moving average; partial windows at the start of the series."""
    if window < 1:
        raise ValidationError("window must be >= 1")
    out = []
    for i in range(len(series)):
        lo = max(0, i - window + 1)
        chunk = series[lo:i + 1]
        out.append(sum(chunk) / len(chunk))
    return out


def write_walks_csv(walks: Sequence[Walk], path, smooth_window: int | None = None,
                    header_comment: str | None = None) -> Path:
    """Export walks as CSV rows (route_id, step, genotype, fitness).

    Smoothing, when requested, is applied only to the exported fitness
    column; stored walks are never modified.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["route_id", "step", "genotype", "fitness"])
        for walk in walks:
            series = list(walk.fitness_series)
            if smooth_window:
                series = moving_average(series, smooth_window)
            for step, (g, f) in enumerate(zip(walk.genotypes, series)):
                writer.writerow([walk.route_id, step, g.to_string(), repr(float(f))])
    return path

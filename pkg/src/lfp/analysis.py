"""Landscape metrics: fitness-distance correlation, ruggedness from random
walks, best-improvement local search, local-optima cardinality via the
birthday problem, proxy optima transfer, and rank persistence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .benchmark import FitnessTable, Landscape, TabularLandscape
from .errors import AnalysisError, ValidationError, ZeroVarianceError
from .genotype import Genotype, hamming
from .sampling import SampleSet, SeedLike, Walk, sample_uniform
from . import stats

TAU_MAGNITUDE_WARNING = 100.0


def _bound(landscape: Landscape, split, epoch, metric) -> Landscape:
    """Rebind a tabular landscape to an explicitly requested fitness view."""
    if split is None and epoch is None and metric is None:
        return landscape
    if isinstance(landscape, TabularLandscape):
        return landscape.rebind(split=split, epoch=epoch, metric=metric)
    return landscape  # synthetic landscapes have a single fitness view


# --- fitness distance correlation ------------------------------------------

@dataclass(frozen=True)
class FdcResult:
    """Distance-to-optimum versus fitness over a sample set."""

    pairs: tuple[tuple[int, float], ...]
    optimum: Genotype
    pearson_r: float | None
    slope_per_unit_distance: float
    undefined_reason: str | None = None


def fdc(landscape: Landscape, samples: SampleSet | Sequence[Genotype],
        split: str | None = None, epoch: int | None = None,
        metric: str | None = None) -> FdcResult:
    """Fitness of every sample against its Hamming distance to the best
    sample (ties on fitness resolved to the lexicographically smallest
    genotype)."""
    landscape = _bound(landscape, split, epoch, metric)
    genotypes = list(samples)
    if not genotypes:
        raise AnalysisError("fdc requires a non-empty sample set")
    fitness = [landscape.fitness(g) for g in genotypes]
    best_fitness = max(fitness)
    optimum = min(g for g, f in zip(genotypes, fitness) if f == best_fitness)
    pairs = tuple((hamming(optimum, g), f) for g, f in zip(genotypes, fitness))

    distances = [d for d, _ in pairs]
    values = [f for _, f in pairs]
    reason = None
    pearson_r: float | None
    try:
        pearson_r = stats.pearson(distances, values)
    except ZeroVarianceError as exc:
        pearson_r = None
        reason = str(exc)
    try:
        slope, _ = stats.ols_fit(distances, values)
    except ZeroVarianceError:
        slope = 0.0
        reason = reason or "constant distances"
    return FdcResult(pairs, optimum, pearson_r, slope, reason)


# --- ruggedness -------------------------------------------------------------

@dataclass(frozen=True)
class RuggednessResult:
    """Lag-1 autocorrelation per walk and the derived ruggedness tau."""

    per_route_rho1: tuple[float, ...]
    rho_mean: float
    tau: float
    skipped: int = 0
    warnings: tuple[str, ...] = ()


def ruggedness(walks: Iterable[Walk]) -> RuggednessResult:
    """tau = 1 / mean(rho_i(1)) over the walks' fitness series.

    Walks with constant fitness have undefined autocorrelation; they are
    excluded and counted in ``skipped``.
    """
    rhos = []
    skipped = 0
    for walk in walks:
        if len(walk.fitness_series) < 3:
            raise ValidationError("ruggedness needs walks of length >= 3")
        try:
            rhos.append(stats.autocorrelation(walk.fitness_series, 1))
        except ZeroVarianceError:
            skipped += 1
    if not rhos:
        raise AnalysisError("all walks had zero fitness variance; "
                            "ruggedness undefined")
    rho_mean = sum(rhos) / len(rhos)
    if rho_mean == 0.0:
        raise AnalysisError("mean lag-1 autocorrelation is exactly zero; "
                            "tau undefined")
    tau = 1.0 / rho_mean
    warnings = []
    if rho_mean < 0:
        warnings.append("negative mean autocorrelation: fitness alternates "
                        "against the walk direction")
    if abs(tau) > TAU_MAGNITUDE_WARNING:
        warnings.append(f"|tau| = {abs(tau):.1f} exceeds {TAU_MAGNITUDE_WARNING}; "
                        "rho_mean(1) is close to zero")
    return RuggednessResult(tuple(rhos), rho_mean, tau, skipped, tuple(warnings))


# --- best-improvement local search ------------------------------------------

@dataclass(frozen=True)
class BilsTrace:
    """Path summary of one best-improvement local search run."""

    start: Genotype
    optimum: Genotype
    improvements: tuple[float, ...]  # per-step fitness delta in search direction
    start_fitness: float
    end_fitness: float

    @property
    def steps(self) -> int:
        return len(self.improvements)


def bils(landscape: Landscape, start: Genotype, direction: str = "max",
         split: str | None = None, epoch: int | None = None,
         metric: str | None = None) -> BilsTrace:
    """Best-improvement local search: scan the whole neighborhood, move to
    the single best strictly improving neighbor, repeat until none exists.

    Fitness ties between neighbors resolve to the lexicographically
    smallest genotype; the terminal point is a strict local optimum.
    """
    if direction not in ("min", "max"):
        raise ValidationError(f"direction must be 'min' or 'max', got {direction!r}")
    landscape = _bound(landscape, split, epoch, metric)
    sign = 1.0 if direction == "max" else -1.0
    current = start
    current_fitness = landscape.fitness(current)
    start_fitness = current_fitness
    improvements: list[float] = []
    while True:
        best_g: Genotype | None = None
        best_f = current_fitness
        for y in landscape.neighbors(current):
            fy = landscape.fitness(y)
            if sign * fy <= sign * current_fitness:
                continue  # not a strict improvement
            if best_g is None or sign * fy > sign * best_f or (fy == best_f and y < best_g):
                best_g, best_f = y, fy
        if best_g is None:
            break
        improvements.append(sign * (best_f - current_fitness))
        current, current_fitness = best_g, best_f
    return BilsTrace(start, current, tuple(improvements), start_fitness,
                     current_fitness)


# --- birthday-problem cardinality estimate -----------------------------------

@dataclass(frozen=True)
class BirthdayTrial:
    """One trial: M local searches and the rank of the first duplicate."""

    trial: int
    avg_step: float
    avg_improvement_pct: float
    first_repeat_k: int | None  # None when no duplicate appeared within M runs
    cardinal: int | None

    @property
    def failed(self) -> bool:
        return self.first_repeat_k is None


@dataclass(frozen=True)
class BirthdayEstimate:
    """Aggregated birthday-problem estimate of the number of local optima."""

    trials: tuple[BirthdayTrial, ...]
    k_mean: float
    cardinal_estimate: int
    p_d: float
    failed_trials: int
    clamped: bool = False


def birthday_cardinal(k: float, p_d: float = 0.5) -> int:
    """floor(k^2 / (-2 ln(1 - p_d))) — truncation reproduces the reference
    trial table exactly."""
    if not 0.0 < p_d < 1.0:
        raise ValidationError("duplicate probability must lie strictly in (0, 1)")
    return math.floor(k * k / (-2.0 * math.log1p(-p_d)))


def estimate_optima_birthday(landscape: Landscape, trials: int = 9,
                             runs_per_trial: int = 200, p_d: float = 0.5,
                             seed: SeedLike = 0, direction: str = "max") -> BirthdayEstimate:
    """Estimate the number of local optima from repeated local searches.

    Per trial: run best-improvement local search from ``runs_per_trial``
    distinct uniform starts and record k, the number of distinct optima
    collected until the first duplicated optimum genotype.  Trials with no
    duplicate are marked failed and excluded from the mean.  The final
    cardinality is floor(k_mean^2 / (-2 ln(1-p_d))), clamped below at 1.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    if runs_per_trial < 2:
        raise ValidationError("need at least two runs per trial")
    if not 0.0 < p_d < 1.0:
        raise ValidationError("duplicate probability must lie strictly in (0, 1)")
    master = list(seed) if isinstance(seed, Sequence) else [seed]

    results: list[BirthdayTrial] = []
    ks: list[float] = []
    for t in range(1, trials + 1):
        starts = sample_uniform(landscape, runs_per_trial, master + [t])
        seen: set[Genotype] = set()
        first_repeat: int | None = None
        steps = []
        gains = []
        for g in starts:
            trace = bils(landscape, g, direction)
            steps.append(trace.steps)
            gains.append(trace.end_fitness - trace.start_fitness
                         if direction == "max"
                         else trace.start_fitness - trace.end_fitness)
            if first_repeat is None:
                if trace.optimum in seen:
                    first_repeat = len(seen)
                else:
                    seen.add(trace.optimum)
        cardinal = birthday_cardinal(first_repeat, p_d) if first_repeat else None
        results.append(BirthdayTrial(t, float(np.mean(steps)),
                                     float(np.mean(gains)) * 100.0,
                                     first_repeat, cardinal))
        if first_repeat is not None:
            ks.append(first_repeat)
    if not ks:
        raise AnalysisError(
            f"no duplicate optimum in any of {trials} trials; increase the "
            f"per-trial run budget (currently {runs_per_trial})")
    k_mean = sum(ks) / len(ks)
    raw = birthday_cardinal(k_mean, p_d)
    estimate = max(raw, 1)
    return BirthdayEstimate(tuple(results), k_mean, estimate, p_d,
                            failed_trials=trials - len(ks), clamped=raw < 1)


# --- proxy optima and cross-problem transfer ---------------------------------

def count_proxy_optima(samples: SampleSet | Sequence[Genotype],
                       fitness_values: Sequence[float], n_nei: int = 10) -> int:
    """Samples that beat all of their n_nei nearest samples (Hamming
    distance, ties resolved lexicographically) strictly on fitness."""
    genotypes = list(samples)
    values = list(fitness_values)
    if len(genotypes) != len(values):
        raise ValidationError("samples and fitness values must align")
    if n_nei < 1:
        raise ValidationError("neighbor count must be >= 1")
    if n_nei >= len(genotypes):
        raise AnalysisError(f"need more than n_nei={n_nei} samples, "
                            f"got {len(genotypes)}")
    count = 0
    for i, g in enumerate(genotypes):
        ranked = sorted((hamming(g, h), h, j)
                        for j, h in enumerate(genotypes) if j != i)
        nearest = ranked[:n_nei]
        if all(values[i] > values[j] for _, _, j in nearest):
            count += 1
    return count


def transfer_optima_estimate(proxy_target: int, proxy_reference: int,
                             reference_cardinal: int) -> int:
    """Scale a reference optima count by the ratio of proxy counts."""
    if proxy_reference <= 0:
        raise AnalysisError("reference proxy count must be positive")
    return math.floor(proxy_target / proxy_reference * reference_cardinal)


# --- persistence --------------------------------------------------------------

@dataclass(frozen=True)
class PersistenceCurve:
    """Persistence as a function of rank percentile N, plus its normalized
    area under the curve over the first quartile."""

    direction: str  # "positive" | "negative"
    horizon_epochs: tuple[int, ...]
    values: dict[int, float | None] = field(default_factory=dict)
    auc_q1: float | None = None


def _rank_set(genotypes: Sequence[Genotype], values: Sequence[float],
              n_percent: int, direction: str) -> set[Genotype]:
    """Top-N% (or Bottom-N%) samples by fitness, nearest-rank threshold,
    ties at the threshold included."""
    m = len(values)
    take = math.ceil(n_percent * m / 100)
    ordered = sorted(values, reverse=(direction == "positive"))
    threshold = ordered[take - 1]
    if direction == "positive":
        return {g for g, f in zip(genotypes, values) if f >= threshold}
    return {g for g, f in zip(genotypes, values) if f <= threshold}


def persistence(table: FitnessTable, samples: SampleSet | Sequence[Genotype],
                direction: str, n_percent: int, split: str, metric: str,
                horizon: Sequence[int] | None = None) -> float:
    """Probability that a sample ranked Top-N% (positive) or Bottom-N%
    (negative) at the earliest budget holds that rank at every later one.
    """
    if direction not in ("positive", "negative"):
        raise ValidationError("direction must be 'positive' or 'negative'")
    if not 1 <= n_percent <= 100:
        raise ValidationError("rank percentile must lie in [1, 100]")
    epochs = tuple(horizon) if horizon is not None else table.epochs_available
    if len(epochs) < 2:
        raise AnalysisError("persistence needs at least 2 epoch budgets")
    genotypes = list(samples)
    if not genotypes:
        raise AnalysisError("persistence requires a non-empty sample set")

    sets = []
    for epoch in epochs:
        values = [table.fitness(g, split, epoch, metric) for g in genotypes]
        sets.append(_rank_set(genotypes, values, n_percent, direction))
    initial = sets[0]
    if not initial:
        raise AnalysisError(f"rank set at the first budget is empty for N={n_percent}")
    surviving = set(initial)
    for s in sets[1:]:
        surviving &= s
    return len(surviving) / len(initial)


def persistence_curve(table: FitnessTable, samples: SampleSet | Sequence[Genotype],
                      direction: str, split: str, metric: str,
                      horizon: Sequence[int] | None = None,
                      auc_upper: int = 25) -> PersistenceCurve:
    """Persistence at every rank N in 1..100 plus the area under the curve
    over N in [1, auc_upper], normalized so a constant 1 maps to 1."""
    epochs = tuple(horizon) if horizon is not None else table.epochs_available
    values: dict[int, float | None] = {}
    for n_percent in range(1, 101):
        try:
            values[n_percent] = persistence(table, samples, direction, n_percent,
                                            split, metric, horizon=epochs)
        except AnalysisError as exc:
            if "at least 2 epoch" in str(exc) or "non-empty" in str(exc):
                raise
            values[n_percent] = None  # gap: empty rank set at the first budget
    auc = None
    grid = [values[n] for n in range(1, auc_upper + 1)]
    if all(v is not None for v in grid):
        auc = float(np.trapezoid(grid, dx=1.0) / (auc_upper - 1))
    return PersistenceCurve(direction, epochs, values, auc)

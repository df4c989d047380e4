"""Tabular fitness benchmarks and synthetic NK landscapes.

A landscape bundles a search space, a total fitness function and a
Hamming-1 neighborhood.  Two kinds exist here:

* :class:`TabularLandscape` wraps a :class:`FitnessTable` loaded from a
  JSONL benchmark, bound to one (split, epoch, metric) view.  Its space is
  the set of table members; neighbors are the member genotypes one bit
  flip away, so fitness is defined everywhere the analyses look.
* :class:`NKLandscape` is a deterministic synthetic bitstring landscape
  used as a testing oracle; every single-bit flip is a neighbor.

Both are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .errors import CapacityError, QueryError, TableError, ValidationError
from .genotype import (CellSpec, GENOTYPE_LENGTH, Genotype, OperatorLabel,
                       decode_genotype, encode_cell, single_bit_flips)

EXHAUSTIVE_CAP = 1 << 20

Triple = tuple[str, int, str]  # (split, epoch, metric)


@dataclass(frozen=True)
class FitnessRecord:
    """Per-genotype measurements: each triple maps to one value per run."""

    values: Mapping[Triple, tuple[float, ...]]

    def __post_init__(self):
        object.__setattr__(self, "values",
                           {k: tuple(v) for k, v in self.values.items()})
        for triple, runs in self.values.items():
            if not runs:
                raise TableError(f"triple {triple} has no runs")
            for v in runs:
                if not 0.0 <= v <= 1.0:
                    raise TableError(f"value {v} for {triple} outside [0, 1]")

    def aggregate(self, triple: Triple) -> float:
        runs = self.values.get(triple)
        if runs is None:
            raise QueryError(f"triple {triple} not recorded")
        return sum(runs) / len(runs)

    def merged_with(self, other: "FitnessRecord") -> "FitnessRecord":
        merged = {k: list(v) for k, v in self.values.items()}
        for triple, runs in other.values.items():
            merged.setdefault(triple, []).extend(runs)
        return FitnessRecord({k: tuple(v) for k, v in merged.items()})

    def __eq__(self, other):
        return isinstance(other, FitnessRecord) and dict(self.values) == dict(other.values)

    def __hash__(self):
        return hash(tuple(sorted(self.values.items())))


@dataclass(frozen=True)
class FitnessTable:
    """Genotype -> fitness measurements, indexed by (split, epoch, metric)."""

    dataset_name: str
    records: Mapping[Genotype, FitnessRecord]
    epochs_available: tuple[int, ...] = field(init=False)
    splits: frozenset[str] = field(init=False)
    metrics: frozenset[str] = field(init=False)
    triples: frozenset[Triple] = field(init=False)

    def __post_init__(self):
        records = dict(self.records)
        if not records:
            raise TableError("table has no records; analyses require at least one")
        lengths = {g.length for g in records}
        if len(lengths) != 1:
            raise TableError(f"mixed genotype lengths in table: {sorted(lengths)}")
        advertised: set[Triple] = set()
        for record in records.values():
            advertised.update(record.values.keys())
        for g, record in records.items():
            missing = advertised - set(record.values.keys())
            if missing:
                raise TableError(
                    f"record {g.to_string()[:24]}... misses advertised triple "
                    f"{sorted(missing)[0]}")
        epochs = tuple(sorted({t[1] for t in advertised}))
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "epochs_available", epochs)
        object.__setattr__(self, "splits", frozenset(t[0] for t in advertised))
        object.__setattr__(self, "metrics", frozenset(t[2] for t in advertised))
        object.__setattr__(self, "triples", frozenset(advertised))

    @property
    def genotype_length(self) -> int:
        return next(iter(self.records)).length

    def fitness(self, x: Genotype, split: str, epoch: int, metric: str) -> float:
        record = self.records.get(x)
        if record is None:
            raise QueryError(f"unknown genotype {x.to_string()[:24]}...")
        triple = (split, epoch, metric)
        if triple not in self.triples:
            raise QueryError(f"triple {triple} not advertised by table "
                             f"'{self.dataset_name}'")
        return record.aggregate(triple)

    def landscape(self, split: str, epoch: int, metric: str) -> "TabularLandscape":
        return TabularLandscape(self, split, epoch, metric)

    def __eq__(self, other):
        return (isinstance(other, FitnessTable)
                and self.dataset_name == other.dataset_name
                and dict(self.records) == dict(other.records))

    def __hash__(self):
        return hash((self.dataset_name, len(self.records)))


def fitness(table: FitnessTable, x: Genotype, split: str, epoch: int,
            metric: str) -> float:
    """Mean fitness over runs for one genotype and measurement triple."""
    return table.fitness(x, split, epoch, metric)


def load_table(path, fmt: str = "jsonl", dataset_name: str | None = None) -> FitnessTable:
    """Load a JSONL benchmark file into a :class:`FitnessTable`.

    One JSON object per line: ``{"id": ..., "adjacency": [[...]], "ops":
    [...], "runs": [{"split", "epoch", "metric", "value"}, ...]}``.
    Records appear keyed by their encoded genotype; lines that encode to
    the same genotype merge as additional runs.
    """
    if fmt != "jsonl":
        raise TableError(f"unsupported benchmark format {fmt!r}")
    path = Path(path)
    if not path.exists():
        raise TableError(f"benchmark file not found: {path}")

    records: dict[Genotype, FitnessRecord] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TableError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            record_id = obj.get("id", f"line-{lineno}")
            genotype, record = _parse_record(obj, record_id, lineno)
            if genotype in records:
                records[genotype] = records[genotype].merged_with(record)
            else:
                records[genotype] = record
    if not records:
        raise TableError(f"{path}: empty benchmark file (no records)")
    name = dataset_name if dataset_name is not None else path.stem
    return FitnessTable(name, records)


def _parse_record(obj: dict, record_id: str, lineno: int) -> tuple[Genotype, FitnessRecord]:
    if "genotype" in obj:
        try:
            genotype = Genotype.from_string(obj["genotype"])
        except ValidationError as exc:
            raise TableError(f"line {lineno} (record {record_id}): {exc}") from exc
    else:
        try:
            cell = CellSpec.from_json_dict(obj)
            genotype = encode_cell(cell)
        except ValidationError as exc:
            raise TableError(f"line {lineno} (record {record_id}): {exc}") from exc
    runs = obj.get("runs")
    if not isinstance(runs, list) or not runs:
        raise TableError(f"line {lineno} (record {record_id}): missing runs array")
    values: dict[Triple, list[float]] = {}
    for entry in runs:
        try:
            triple = (str(entry["split"]), int(entry["epoch"]), str(entry["metric"]))
            value = float(entry["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TableError(
                f"line {lineno} (record {record_id}): bad run entry {entry!r}") from exc
        if not 0.0 <= value <= 1.0:
            raise TableError(
                f"line {lineno} (record {record_id}): value {value} outside [0, 1]")
        values.setdefault(triple, []).append(value)
    return genotype, FitnessRecord({k: tuple(v) for k, v in values.items()})


def write_table(table: FitnessTable, path) -> Path:
    """Write a cell-encoded table back to JSONL; inverse of :func:`load_table`."""
    path = Path(path)
    if table.genotype_length != GENOTYPE_LENGTH:
        raise TableError("only cell-encoded (289-bit) tables can be written as JSONL")
    with path.open("w", encoding="utf-8") as fh:
        for genotype in sorted(table.records):
            record = table.records[genotype]
            cell = decode_genotype(genotype)
            runs = []
            for triple in sorted(record.values):
                for value in record.values[triple]:
                    runs.append({"split": triple[0], "epoch": triple[1],
                                 "metric": triple[2], "value": value})
            obj = {"id": f"g{genotype.value:073x}", **cell.to_json_dict(), "runs": runs}
            fh.write(json.dumps(obj) + "\n")
    return path


# --- landscapes -----------------------------------------------------------

class TabularLandscape:
    """A fitness table bound to one (split, epoch, metric) view.

    The space is the table's member set; fitness aggregates (averages)
    runs once at construction for fast lookups.
    """

    kind = "tabular"

    def __init__(self, table: FitnessTable, split: str, epoch: int, metric: str):
        triple = (split, epoch, metric)
        if triple not in table.triples:
            raise QueryError(f"triple {triple} not advertised by table "
                             f"'{table.dataset_name}'")
        self.table = table
        self.split = split
        self.epoch = epoch
        self.metric = metric
        self._fitness = {g: record.aggregate(triple)
                         for g, record in table.records.items()}
        self._members = sorted(self._fitness)

    @property
    def genotype_length(self) -> int:
        return self.table.genotype_length

    @property
    def size(self) -> int:
        return len(self._members)

    def rebind(self, split: str | None = None, epoch: int | None = None,
               metric: str | None = None) -> "TabularLandscape":
        return TabularLandscape(
            self.table,
            self.split if split is None else split,
            self.epoch if epoch is None else epoch,
            self.metric if metric is None else metric)

    def contains(self, g: Genotype) -> bool:
        return g in self._fitness

    def fitness(self, g: Genotype) -> float:
        try:
            return self._fitness[g]
        except KeyError:
            raise QueryError(f"genotype {g.to_string()[:24]}... not in table "
                             f"'{self.table.dataset_name}'") from None

    def neighbors(self, g: Genotype) -> list[Genotype]:
        return [y for y in single_bit_flips(g) if y in self._fitness]

    def members(self) -> Sequence[Genotype]:
        return self._members

    def enumerate(self) -> Iterator[Genotype]:
        return iter(self._members)

    def random_member(self, rng: Generator) -> Genotype:
        return self._members[int(rng.integers(len(self._members)))]

    def lhs_dimensions(self) -> list[int]:
        if self.genotype_length == GENOTYPE_LENGTH:
            return cell_space_dimensions()
        return [2] * self.genotype_length

    def genotype_from_levels(self, levels: Sequence[int]) -> Genotype | None:
        if self.genotype_length == GENOTYPE_LENGTH:
            g = cell_from_levels(levels)
        else:
            g = Genotype.from_bits(levels)
        if g is not None and self.contains(g):
            return g
        return None


def cell_space_dimensions() -> list[int]:
    """Joint-representation dimensions of the original 7-node cell space.

    One binary dimension per upper-triangular adjacency entry (21) plus
    one ternary dimension per intermediate operator slot (5).
    """
    from .genotype import INTERMEDIATE_SLOTS, MAX_NODES
    n_adj = MAX_NODES * (MAX_NODES - 1) // 2
    return [2] * n_adj + [3] * INTERMEDIATE_SLOTS


def cell_from_levels(levels: Sequence[int]) -> Genotype | None:
    """Assemble and encode a cell from joint-representation levels.

    Returns ``None`` when the level vector does not describe a valid cell.
    """
    from .genotype import INTERMEDIATE_SLOTS, MAX_NODES
    n_adj = MAX_NODES * (MAX_NODES - 1) // 2
    if len(levels) != n_adj + INTERMEDIATE_SLOTS:
        raise ValidationError(f"expected {n_adj + INTERMEDIATE_SLOTS} levels")
    adjacency = [[0] * MAX_NODES for _ in range(MAX_NODES)]
    it = iter(range(n_adj))
    idx = 0
    for u in range(MAX_NODES):
        for v in range(u + 1, MAX_NODES):
            adjacency[u][v] = int(levels[idx])
            idx += 1
    ops = tuple(list(OperatorLabel)[int(o)] for o in levels[n_adj:])
    try:
        cell = CellSpec(tuple(tuple(row) for row in adjacency), ops)
    except ValidationError:
        return None
    return encode_cell(cell)


@dataclass(frozen=True)
class NKSpec:
    """Parameters of a synthetic NK landscape."""

    n: int
    k: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.n > 62:
            raise ValidationError("n above 62 is not supported")
        if not 0 <= self.k <= self.n - 1:
            raise ValidationError(f"k={self.k} outside [0, n-1]")


class NKLandscape:
    """Synthetic bitstring landscape with k epistatic partners per locus.

    Fitness is the mean over loci of a per-locus contribution looked up by
    the bit pattern of the locus and its partners.  Contributions are
    uniform on [0, 1], generated counter-based from a Philox stream keyed
    by (seed, locus) and indexed by pattern, so the same spec always
    yields the same landscape without storing tables.
    """

    kind = "nk"

    def __init__(self, spec: NKSpec):
        self.spec = spec
        n, k = spec.n, spec.k
        seed = np.uint64(spec.seed & (2**64 - 1))
        partner_rng = Generator(Philox(key=np.array([seed, np.uint64(2**63)],
                                                    dtype=np.uint64)))
        partners = np.empty((n, k + 1), dtype=np.int64)
        for locus in range(n):
            others = np.delete(np.arange(n), locus)
            chosen = partner_rng.permutation(others)[:k]
            partners[locus] = np.concatenate(([locus], np.sort(chosen)))
        self.partners = partners
        table = np.empty((n, 1 << (k + 1)))
        for locus in range(n):
            rng = Generator(Philox(key=np.array([seed, np.uint64(locus)],
                                                dtype=np.uint64)))
            table[locus] = rng.random(1 << (k + 1))
        self.contributions = table
        self._full: np.ndarray | None = None

    @property
    def genotype_length(self) -> int:
        return self.spec.n

    @property
    def size(self) -> int:
        return 1 << self.spec.n

    def contains(self, g: Genotype) -> bool:
        return g.length == self.spec.n

    def _pattern(self, value: int, locus: int) -> int:
        n = self.spec.n
        pattern = 0
        for j, p in enumerate(self.partners[locus]):
            pattern |= ((value >> (n - 1 - int(p))) & 1) << j
        return pattern

    def fitness(self, g: Genotype) -> float:
        if g.length != self.spec.n:
            raise QueryError(f"genotype length {g.length} does not match n={self.spec.n}")
        full = self.full_fitness_table()
        if full is not None:
            return float(full[g.value])
        total = sum(self.contributions[locus][self._pattern(g.value, locus)]
                    for locus in range(self.spec.n))
        return float(total / self.spec.n)

    def full_fitness_table(self) -> np.ndarray | None:
        """Fitness of every genotype, indexed by integer value; None when
        the space exceeds the exhaustive cap."""
        if self.size > EXHAUSTIVE_CAP:
            return None
        if self._full is None:
            n = self.spec.n
            values = np.arange(self.size, dtype=np.int64)
            acc = np.zeros(self.size)
            for locus in range(n):
                pattern = np.zeros(self.size, dtype=np.int64)
                for j, p in enumerate(self.partners[locus]):
                    pattern |= ((values >> (n - 1 - int(p))) & 1) << j
                acc += self.contributions[locus][pattern]
            self._full = acc / n
        return self._full

    def neighbors(self, g: Genotype) -> list[Genotype]:
        return list(single_bit_flips(g))

    def enumerate(self) -> Iterator[Genotype]:
        if self.size > EXHAUSTIVE_CAP:
            raise CapacityError(f"space of size 2^{self.spec.n} exceeds the "
                                f"exhaustive cap {EXHAUSTIVE_CAP}")
        n = self.spec.n
        return (Genotype(n, v) for v in range(self.size))

    def random_member(self, rng: Generator) -> Genotype:
        value = int(rng.integers(0, self.size, dtype=np.uint64))
        return Genotype(self.spec.n, value)

    def lhs_dimensions(self) -> list[int]:
        return [2] * self.spec.n

    def genotype_from_levels(self, levels: Sequence[int]) -> Genotype | None:
        return Genotype.from_bits(levels)


Landscape = TabularLandscape | NKLandscape


def generate_nk(spec: NKSpec) -> NKLandscape:
    """Deterministic NK landscape for a spec; same seed, same landscape."""
    return NKLandscape(spec)


def enumerate_optima_exhaustive(landscape: Landscape, direction: str = "max",
                                cap: int = EXHAUSTIVE_CAP) -> tuple[int, list[Genotype]]:
    """Exact count and list of strict local optima by full enumeration.

    A point is a strict optimum when its fitness is strictly better than
    every neighbor's in the search direction; plateau members never
    qualify, so constant regions contribute zero.
    """
    if direction not in ("min", "max"):
        raise ValidationError(f"direction must be 'min' or 'max', got {direction!r}")
    if landscape.size > cap:
        raise CapacityError(f"space size {landscape.size} exceeds cap {cap}")

    if isinstance(landscape, NKLandscape):
        full = landscape.full_fitness_table()
        assert full is not None
        n = landscape.spec.n
        values = np.arange(landscape.size, dtype=np.int64)
        strict = np.ones(landscape.size, dtype=bool)
        for i in range(n):
            flipped = values ^ (1 << (n - 1 - i))
            if direction == "max":
                strict &= full > full[flipped]
            else:
                strict &= full < full[flipped]
        optima = [Genotype(n, int(v)) for v in values[strict]]
        return len(optima), optima

    optima = []
    for g in landscape.enumerate():
        f = landscape.fitness(g)
        neighbor_fitness = (landscape.fitness(y) for y in landscape.neighbors(g))
        if direction == "max":
            ok = all(f > fy for fy in neighbor_fitness)
        else:
            ok = all(f < fy for fy in neighbor_fitness)
        if ok:
            optima.append(g)
    return len(optima), optima

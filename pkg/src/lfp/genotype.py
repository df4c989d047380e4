"""Architecture cells and their fixed-length binary encoding.

A cell is a small labelled DAG (at most 7 nodes, 9 edges) whose first node
is the input and last node the output; intermediate nodes carry one of
three operator labels.  For landscape analysis every cell is flattened
into a 289-bit vector: the 17x17 adjacency matrix of an expanded graph in
which each of the 5 intermediate slots is replaced by 3 unlabelled copies,
one per operator.  Expanded node order is fixed:

    index 0              input
    index 1 + 3*(s-1)+o  intermediate slot s in 1..5, operator copy o in 0..2
    index 16             output

Encoding always canonicalizes first (see :func:`canonical_cell`), so equal
genotypes mean structurally equal cells up to slot permutation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .errors import DecodeError, ValidationError

MAX_NODES = 7
MAX_EDGES = 9
INTERMEDIATE_SLOTS = MAX_NODES - 2
OPERATOR_COUNT = 3
EXPANDED_NODES = 1 + INTERMEDIATE_SLOTS * OPERATOR_COUNT + 1  # 17
GENOTYPE_LENGTH = EXPANDED_NODES * EXPANDED_NODES  # 289
IN_INDEX = 0
OUT_INDEX = EXPANDED_NODES - 1


class OperatorLabel(Enum):
    """The three operator labels an intermediate node may carry."""

    CONV3X3 = "conv3x3"
    CONV1X1 = "conv1x1"
    MAXPOOL3X3 = "maxpool3x3"

    @property
    def index(self) -> int:
        return _OPERATOR_ORDER[self]


_OPERATOR_ORDER = {op: i for i, op in enumerate(OperatorLabel)}


@dataclass(frozen=True, order=True)
class Genotype:
    """Fixed-length bit vector, stored as an integer.

    Bit ``i`` of the textual 0/1 string maps to numeric bit
    ``length - 1 - i`` so that integer ordering coincides with
    lexicographic ordering of the string form.
    """

    length: int
    value: int

    def __post_init__(self):
        if self.length <= 0:
            raise ValidationError("genotype length must be positive")
        if not 0 <= self.value < (1 << self.length):
            raise ValidationError("genotype value out of range for its length")

    @classmethod
    def from_string(cls, text: str) -> "Genotype":
        if not text or any(c not in "01" for c in text):
            raise ValidationError("genotype string must be a non-empty run of 0/1")
        return cls(len(text), int(text, 2))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "Genotype":
        bits = list(bits)
        value = 0
        for b in bits:
            if b not in (0, 1):
                raise ValidationError("genotype bits must be 0 or 1")
            value = (value << 1) | b
        return cls(len(bits), value)

    def to_string(self) -> str:
        return format(self.value, f"0{self.length}b")

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise ValidationError(f"bit index {i} out of range")
        return (self.value >> (self.length - 1 - i)) & 1

    def with_flip(self, i: int) -> "Genotype":
        if not 0 <= i < self.length:
            raise ValidationError(f"bit index {i} out of range")
        return Genotype(self.length, self.value ^ (1 << (self.length - 1 - i)))

    def set_positions(self) -> list[int]:
        return [i for i in range(self.length) if self.bit(i)]

    @property
    def popcount(self) -> int:
        return self.value.bit_count()

    def __str__(self) -> str:
        return self.to_string()


def hamming(a: Genotype, b: Genotype) -> int:
    """Number of differing bit positions between two equal-length genotypes."""
    if a.length != b.length:
        raise ValidationError(
            f"hamming distance undefined for lengths {a.length} and {b.length}")
    return (a.value ^ b.value).bit_count()


def single_bit_flips(g: Genotype) -> Iterator[Genotype]:
    """All genotypes at Hamming distance exactly 1, in bit-position order."""
    for i in range(g.length):
        yield g.with_flip(i)


@dataclass(frozen=True)
class CellSpec:
    """Original DAG form of a cell.

    ``adjacency`` is a strictly upper-triangular 0/1 matrix over
    ``node_count`` nodes (node 0 = input, last node = output) and ``ops``
    labels the ``node_count - 2`` intermediate nodes in node order.
    """

    adjacency: tuple[tuple[int, ...], ...]
    ops: tuple[OperatorLabel, ...]

    def __post_init__(self):
        object.__setattr__(self, "adjacency",
                           tuple(tuple(int(x) for x in row) for row in self.adjacency))
        object.__setattr__(self, "ops", tuple(self.ops))
        _validate_cell(self.adjacency, self.ops)

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    @property
    def edges(self) -> list[tuple[int, int]]:
        n = self.node_count
        return [(u, v) for u in range(n) for v in range(n) if self.adjacency[u][v]]

    @property
    def edge_count(self) -> int:
        return sum(sum(row) for row in self.adjacency)

    @classmethod
    def from_json_dict(cls, data: dict) -> "CellSpec":
        try:
            adjacency = data["adjacency"]
            ops_raw = data["ops"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"cell object missing field: {exc}") from exc
        try:
            ops = tuple(OperatorLabel(o) for o in ops_raw)
        except ValueError as exc:
            raise ValidationError(f"unknown operator label: {exc}") from exc
        return cls(tuple(tuple(row) for row in adjacency), ops)

    def to_json_dict(self) -> dict:
        return {
            "adjacency": [list(row) for row in self.adjacency],
            "ops": [op.value for op in self.ops],
        }


def _validate_cell(adjacency, ops) -> None:
    n = len(adjacency)
    if not 2 <= n <= MAX_NODES:
        raise ValidationError(f"node count {n} outside [2, {MAX_NODES}]")
    for i, row in enumerate(adjacency):
        if len(row) != n:
            raise ValidationError(f"adjacency row {i} has length {len(row)}, expected {n}")
        for j, x in enumerate(row):
            if x not in (0, 1):
                raise ValidationError(f"adjacency entry ({i},{j}) must be 0 or 1")
            if x and j <= i:
                raise ValidationError(
                    f"edge ({i},{j}) breaks the upper-triangular DAG convention")
    if len(ops) != n - 2:
        raise ValidationError(
            f"ops length {len(ops)} does not match {n - 2} intermediate nodes")
    for op in ops:
        if not isinstance(op, OperatorLabel):
            raise ValidationError(f"invalid operator label {op!r}")
    edge_count = sum(sum(row) for row in adjacency)
    if edge_count > MAX_EDGES:
        raise ValidationError(f"edge count {edge_count} exceeds budget {MAX_EDGES}")

    forward = _reachable(adjacency, 0, forward=True)
    backward = _reachable(adjacency, n - 1, forward=False)
    if (n - 1) not in forward:
        raise ValidationError("no path from IN to OUT")
    for v in range(1, n - 1):
        degree = sum(adjacency[u][v] for u in range(n)) + sum(adjacency[v][w] for w in range(n))
        if degree and not (v in forward and v in backward):
            raise ValidationError(
                f"intermediate node {v} has edges but lies on no IN->OUT path")


def _reachable(adjacency, start: int, forward: bool) -> set[int]:
    n = len(adjacency)
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in range(n):
            hit = adjacency[u][v] if forward else adjacency[v][u]
            if hit and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _topological_orders(nodes: Sequence[int], succ: dict[int, set[int]]) -> Iterator[tuple[int, ...]]:
    """All topological orders of ``nodes`` under the successor relation."""
    indegree = {v: 0 for v in nodes}
    for u in nodes:
        for v in succ[u]:
            indegree[v] += 1
    order: list[int] = []
    placed: set[int] = set()

    def rec() -> Iterator[tuple[int, ...]]:
        if len(order) == len(nodes):
            yield tuple(order)
            return
        for v in nodes:
            if v in placed or indegree[v]:
                continue
            placed.add(v)
            order.append(v)
            for w in succ[v]:
                indegree[w] -= 1
            yield from rec()
            for w in succ[v]:
                indegree[w] += 1
            order.pop()
            placed.remove(v)

    return rec()


def canonical_cell(cell: CellSpec) -> CellSpec:
    """Canonical representative of a cell.

    Intermediate nodes without edges are dropped (they leave no trace in
    the encoding), then the remaining intermediates are relabelled by the
    topological order that minimizes the per-slot key sequence
    (first incoming source, first outgoing target, operator index),
    with the encoded bit pattern as the final tie-break.  The result is
    the unique cell that :func:`encode_cell` actually serializes.
    """
    n = cell.node_count
    adj = cell.adjacency
    kept = [v for v in range(1, n - 1)
            if any(adj[u][v] for u in range(n)) or any(adj[v][w] for w in range(n))]
    succ = {v: {w for w in kept if adj[v][w]} for v in kept}

    best = None
    for order in _topological_orders(kept, succ):
        relabel = {0: 0, n - 1: len(order) + 1}
        for slot, old in enumerate(order, start=1):
            relabel[old] = slot
        m = len(order) + 2
        new_adj = [[0] * m for _ in range(m)]
        for u, v in cell.edges:
            if u in relabel and v in relabel:
                new_adj[relabel[u]][relabel[v]] = 1
        new_ops = tuple(cell.ops[old - 1] for old in order)
        key = []
        for slot in range(1, m - 1):
            first_in = min(u for u in range(m) if new_adj[u][slot])
            first_out = min(w for w in range(m) if new_adj[slot][w])
            key.append((first_in, first_out, new_ops[slot - 1].index))
        candidate = CellSpec(tuple(tuple(row) for row in new_adj), new_ops)
        encoded = _encode_bits(candidate)
        ranked = (tuple(key), encoded)
        if best is None or ranked < best[0]:
            best = (ranked, candidate)
    assert best is not None  # a valid cell always has at least one order
    return best[1]


def _expanded_index(node: int, node_count: int, ops: tuple[OperatorLabel, ...]) -> int:
    if node == 0:
        return IN_INDEX
    if node == node_count - 1:
        return OUT_INDEX
    return 1 + OPERATOR_COUNT * (node - 1) + ops[node - 1].index


def _encode_bits(cell: CellSpec) -> int:
    """Bit pattern of a cell taken slot-for-node, without canonicalizing."""
    value = 0
    n = cell.node_count
    for u, v in cell.edges:
        row = _expanded_index(u, n, cell.ops)
        col = _expanded_index(v, n, cell.ops)
        position = row * EXPANDED_NODES + col
        value |= 1 << (GENOTYPE_LENGTH - 1 - position)
    return value


def encode_cell(cell: CellSpec) -> Genotype:
    """Flatten a cell into its 289-bit genotype.

    The cell is canonicalized first; every edge contributes exactly one set
    bit, so the popcount of the result equals the cell's edge count.
    """
    return Genotype(GENOTYPE_LENGTH, _encode_bits(canonical_cell(cell)))


def decode_genotype(g: Genotype) -> CellSpec:
    """Inverse of :func:`encode_cell`.

    Succeeds exactly on bit patterns produced by :func:`encode_cell`; any
    other pattern raises :class:`DecodeError` naming the first violated
    rule.  Checks run in the order: ambiguous operator copies, edge
    budget, structural rules (stray edges, slot gaps, backward slot
    edges), connectivity, canonical slot order.
    """
    if g.length != GENOTYPE_LENGTH:
        raise DecodeError("bad length", f"expected {GENOTYPE_LENGTH} bits, got {g.length}")

    edges = [(p // EXPANDED_NODES, p % EXPANDED_NODES) for p in g.set_positions()]
    if not edges:
        raise DecodeError("no IN->OUT connectivity", "genotype has no set bits")

    copies_used: dict[int, set[int]] = {}
    for r, c in edges:
        for endpoint in (r, c):
            if endpoint in (IN_INDEX, OUT_INDEX):
                continue
            slot, copy = divmod(endpoint - 1, OPERATOR_COUNT)
            copies_used.setdefault(slot + 1, set()).add(copy)
    for slot in sorted(copies_used):
        if len(copies_used[slot]) > 1:
            raise DecodeError("ambiguous operator",
                              f"slot {slot} touches operator copies "
                              f"{sorted(copies_used[slot])}")

    if len(edges) > MAX_EDGES:
        raise DecodeError("edge budget exceeded",
                          f"{len(edges)} edges, budget {MAX_EDGES}")

    for r, c in edges:
        if c == IN_INDEX:
            raise DecodeError("invalid structure", f"edge into IN from expanded node {r}")
        if r == OUT_INDEX:
            raise DecodeError("invalid structure", f"edge out of OUT to expanded node {c}")
        if r == c:
            raise DecodeError("invalid structure", f"self-loop at expanded node {r}")

    slots = sorted(copies_used)
    m = len(slots)
    if slots != list(range(1, m + 1)):
        raise DecodeError("invalid structure",
                          f"used slots {slots} are not contiguous from 1")

    ops = tuple(list(OperatorLabel)[next(iter(copies_used[s]))] for s in slots)
    node_count = m + 2

    def compact(endpoint: int) -> int:
        if endpoint == IN_INDEX:
            return 0
        if endpoint == OUT_INDEX:
            return node_count - 1
        slot = (endpoint - 1) // OPERATOR_COUNT + 1
        return slot

    adjacency = [[0] * node_count for _ in range(node_count)]
    for r, c in edges:
        u, v = compact(r), compact(c)
        if v <= u:
            raise DecodeError("cyclic/invalid structure",
                              f"backward edge between slots ({u} -> {v})")
        adjacency[u][v] = 1

    try:
        cell = CellSpec(tuple(tuple(row) for row in adjacency), ops)
    except ValidationError as exc:
        raise DecodeError("invalid structure", str(exc)) from exc

    if canonical_cell(cell) != cell:
        raise DecodeError("non-canonical slot order",
                          "slot assignment differs from the canonical ordering")
    return cell


def is_decodable(g: Genotype) -> bool:
    try:
        decode_genotype(g)
    except DecodeError:
        return False
    return True


def enumerate_valid_cells(max_nodes: int = 5) -> Iterator[CellSpec]:
    """Every valid cell with at most ``max_nodes`` nodes (not deduplicated).

    Exhaustive-oracle helper: iterates all upper-triangular adjacency
    patterns within the edge budget crossed with all operator labelings,
    yielding those that satisfy the cell invariants.
    """
    for n in range(2, max_nodes + 1):
        positions = [(u, v) for u in range(n) for v in range(u + 1, n)]
        for mask in range(1 << len(positions)):
            if mask.bit_count() > MAX_EDGES:
                continue
            adjacency = [[0] * n for _ in range(n)]
            for idx, (u, v) in enumerate(positions):
                if (mask >> idx) & 1:
                    adjacency[u][v] = 1
            rows = tuple(tuple(row) for row in adjacency)
            for ops in itertools.product(OperatorLabel, repeat=n - 2):
                try:
                    yield CellSpec(rows, ops)
                except ValidationError:
                    break  # ops do not affect validity; skip this adjacency

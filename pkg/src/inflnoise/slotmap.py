"""Ground opaque slot identifiers in UniMorph MSDs.

Every target word type votes for the edges (its slot, each MSD in its gold
set).  The one-to-one slot → MSD assignment maximizing the total number of
votes is found with an exact assignment solver; ties are broken towards the
lexicographically smallest assignment over (slot id, canonical MSD text).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .corpus import MSD

__all__ = [
    "SlotMsdGraph",
    "SlotMapping",
    "build_graph",
    "max_matching",
    "apply_mapping",
    "hungarian_max",
    "write_mapping",
    "read_mapping",
    "UNMATCHED_SLOT",
]

UNMATCHED_SLOT = "UNMATCHED_SLOT"


@dataclass
class SlotMsdGraph:
    weight: dict = field(default_factory=dict)  # (slot, MSD) -> int

    @property
    def slots(self) -> list:
        return sorted({s for s, _ in self.weight})

    @property
    def msds(self) -> list:
        return sorted({m for _, m in self.weight}, key=str)

    def get(self, slot, msd) -> int:
        return self.weight.get((slot, msd), 0)


@dataclass
class SlotMapping:
    assignment: dict = field(default_factory=dict)  # slot -> MSD
    total_weight: int = 0
    weights: dict = field(default_factory=dict)  # slot -> matched edge weight


def build_graph(pairs, gold) -> SlotMsdGraph:
    """Count distinct target types per (slot, gold MSD).

    ``gold`` maps a surface to its set of MSDs; surfaces missing from it or
    with an empty set add no edges.
    """
    seen = defaultdict(set)
    for pair in pairs:
        for msd in gold.get(pair.target, ()):
            seen[(pair.slot, msd)].add(pair.target)
    return SlotMsdGraph({key: len(types) for key, types in seen.items()})


def hungarian_max(matrix) -> tuple:
    """Maximum-weight assignment on a rectangular integer matrix.

    Returns ``(total, assignment)`` where ``assignment[i]`` is the column of
    row ``i`` or ``None``.  Rows may stay unassigned; only positive entries
    count as edges.  Integer arithmetic throughout, so results are exact.
    """
    n_rows = len(matrix)
    n_cols = len(matrix[0]) if n_rows else 0
    if n_rows == 0 or n_cols == 0:
        return 0, [None] * n_rows
    n = max(n_rows, n_cols)
    # Min-cost formulation on a square matrix padded with zeros.
    top = max(max(row) for row in matrix)
    cost = [[top - (matrix[i][j] if i < n_rows and j < n_cols else 0) for j in range(n)] for i in range(n)]
    INF = float("inf")
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row matched to column j (1-based, 0 = none)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assignment = [None] * n_rows
    total = 0
    for j in range(1, n + 1):
        i = p[j] - 1
        if i < n_rows and j - 1 < n_cols and matrix[i][j - 1] > 0:
            assignment[i] = j - 1
            total += matrix[i][j - 1]
    return total, assignment


def max_matching(graph: SlotMsdGraph) -> SlotMapping:
    slots = graph.slots
    msds = graph.msds
    if not slots:
        return SlotMapping()
    matrix = [[graph.get(s, m) for m in msds] for s in slots]
    best, _ = hungarian_max(matrix)

    # Fix slots one at a time in id order, taking the first MSD (canonical
    # text order) that still admits an optimal completion.
    assignment = {}
    fixed_total = 0
    free_rows = list(range(len(slots)))
    free_cols = list(range(len(msds)))
    while free_rows:
        r = free_rows.pop(0)
        rest_rows = free_rows
        chosen = None
        for c in free_cols:
            w = matrix[r][c]
            if w <= 0:
                continue
            cols = [x for x in free_cols if x != c]
            sub = [[matrix[i][j] for j in cols] for i in rest_rows]
            rest, _ = hungarian_max(sub) if rest_rows and cols else (0, None)
            if fixed_total + w + rest == best:
                chosen = c
                break
        if chosen is not None:
            assignment[slots[r]] = msds[chosen]
            fixed_total += matrix[r][chosen]
            free_cols = [x for x in free_cols if x != chosen]
    mapping = SlotMapping(assignment, fixed_total, {s: graph.get(s, m) for s, m in assignment.items()})
    assert mapping.total_weight == best
    return mapping


def apply_mapping(pairs, mapping: SlotMapping) -> list:
    """Set ``predicted_msd`` from the mapping.

    Returns the pairs whose slot is unmatched (they keep ``predicted_msd`` None
    and are filtered by the annotator with reason ``UNMATCHED_SLOT``).
    """
    unmatched = []
    for pair in pairs:
        msd = mapping.assignment.get(pair.slot)
        pair.predicted_msd = msd
        if msd is None:
            unmatched.append(pair)
    return unmatched


def write_mapping(path, mapping: SlotMapping) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for slot in sorted(mapping.assignment):
            fh.write(f"{slot}\t{mapping.assignment[slot]}\t{mapping.weights.get(slot, 0)}\n")
        fh.write(f"# total_weight\t{mapping.total_weight}\n")


def read_mapping(path) -> SlotMapping:
    assignment = {}
    weights = {}
    total = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("\t")
                if key == "total_weight":
                    total = int(value)
                continue
            slot, msd, weight = line.split("\t")
            assignment[int(slot)] = MSD.parse(msd)
            weights[int(slot)] = int(weight)
    if total is None:
        total = sum(weights.values())
    return SlotMapping(assignment, total, weights)

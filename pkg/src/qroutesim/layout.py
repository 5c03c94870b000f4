"""Packed-triangular placement of routers on a defective 2D lattice.

A router triangle occupies one 2×2 lattice cell: three corner qubits are
the data vertices (input plus two outputs) and the fourth corner is the
address qubit.  Parent and child triangles share exactly one lattice
qubit — the parent's output vertex doubles as the child's input vertex —
and the triangle-adjacency graph must stay a tree whose occupied region
encloses no free qubits.

Layer counting follows the packed-system convention — the stack is the
input-bus level, the routing levels, and the data-leaf level — so a
``layers``-deep system holds 2^(layers−2) − 1 triangles (zero for layers
≤ 2, which are trivially placeable).  With this geometry a defect-free
12×6 lattice accommodates exactly up to five system layers (7 triangles);
six layers need 15 corner-linked cells, which require at least a 12×8
lattice (verified by exhaustive search, independent of the qubit budget).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

Coord = tuple[int, int]

#: corner offsets of a 2×2 cell, index order (TL, TR, BL, BR)
_CORNERS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    defect_qubits: frozenset = frozenset()
    defect_couplers: frozenset = frozenset()  # frozenset of sorted coord pairs

    def __post_init__(self):
        for r, c in self.defect_qubits:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"defect qubit {(r, c)} outside {self.rows}x{self.cols}")

    def in_bounds(self, q: Coord) -> bool:
        return 0 <= q[0] < self.rows and 0 <= q[1] < self.cols

    def coupler_ok(self, a: Coord, b: Coord) -> bool:
        return frozenset((a, b)) not in {frozenset(p) for p in self.defect_couplers}


@dataclass(frozen=True)
class Triangle:
    """One 2×2-cell router: anchor = top-left lattice coordinate."""

    anchor: Coord
    address_corner: int  # 0..3 into _CORNERS
    input_corner: int    # 0..3, must differ from address_corner

    def corners(self) -> tuple[Coord, ...]:
        r, c = self.anchor
        return tuple((r + dr, c + dc) for dr, dc in _CORNERS)

    @property
    def address(self) -> Coord:
        return self.corners()[self.address_corner]

    @property
    def input(self) -> Coord:
        return self.corners()[self.input_corner]

    def vertices(self) -> tuple[Coord, ...]:
        return tuple(q for k, q in enumerate(self.corners()) if k != self.address_corner)

    def outputs(self) -> tuple[Coord, Coord]:
        return tuple(q for k, q in enumerate(self.corners())
                     if k not in (self.address_corner, self.input_corner))

    def qubits(self) -> tuple[Coord, ...]:
        return self.corners()

    def edges(self) -> tuple[tuple[Coord, Coord], ...]:
        """Lattice couplers the cell relies on: its four side edges."""
        (r, c) = self.anchor
        return (
            ((r, c), (r, c + 1)),
            ((r + 1, c), (r + 1, c + 1)),
            ((r, c), (r + 1, c)),
            ((r, c + 1), (r + 1, c + 1)),
        )


@dataclass
class TriangleLayout:
    triangles: list[Triangle] = field(default_factory=list)
    parents: list[int] = field(default_factory=list)  # -1 for the root

    @property
    def layers(self) -> int:
        """System layers: bus level + triangle-tree depth + data-leaf level."""
        if not self.triangles:
            return 1
        depth = {0: 1}
        for i in range(1, len(self.triangles)):
            depth[i] = depth[self.parents[i]] + 1
        return max(depth.values()) + 2

    def occupied(self) -> set[Coord]:
        out: set[Coord] = set()
        for t in self.triangles:
            out.update(t.qubits())
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "layers": self.layers,
                "triangles": [
                    {
                        "anchor": list(t.anchor),
                        "address": list(t.address),
                        "input": list(t.input),
                        "vertices": [list(v) for v in t.vertices()],
                        "parent": p,
                    }
                    for t, p in zip(self.triangles, self.parents)
                ],
            },
            indent=2,
        )

    def to_coordinate_csv(self) -> str:
        lines = ["# qroutesim-schema v1", "triangle,role,row,col"]
        for i, t in enumerate(self.triangles):
            lines.append(f"{i},address,{t.address[0]},{t.address[1]}")
            lines.append(f"{i},input,{t.input[0]},{t.input[1]}")
            for v in t.outputs():
                lines.append(f"{i},output,{v[0]},{v[1]}")
        return "\n".join(lines) + "\n"


@dataclass
class LayoutReport:
    violations: list[str]

    @property
    def valid(self) -> bool:
        return not self.violations


def _holes(grid: GridSpec, occupied: set[Coord]) -> list[Coord]:
    """Free qubits not reachable from the lattice boundary (4-connectivity)."""
    free = {(r, c) for r in range(grid.rows) for c in range(grid.cols)} - occupied
    frontier = [q for q in free if q[0] in (0, grid.rows - 1) or q[1] in (0, grid.cols - 1)]
    seen = set(frontier)
    while frontier:
        r, c = frontier.pop()
        for nb in ((r + 1, c), (r - 1, c), (r, c + 1), (r, c - 1)):
            if nb in free and nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    return sorted(free - seen)


def check_layout(grid: GridSpec, layout: TriangleLayout) -> LayoutReport:
    """Report every violated placement constraint (empty report = valid)."""
    v: list[str] = []
    tris = layout.triangles
    if len(layout.parents) != len(tris):
        return LayoutReport(["parents list length mismatch"])
    for i, t in enumerate(tris):
        if t.address_corner == t.input_corner:
            v.append(f"triangle {i}: address and input share a corner")
        for q in t.qubits():
            if not grid.in_bounds(q):
                v.append(f"triangle {i}: qubit {q} out of bounds")
            elif q in grid.defect_qubits:
                v.append(f"triangle {i}: defective qubit {q}")
        for a, b in t.edges():
            if grid.in_bounds(a) and grid.in_bounds(b) and not grid.coupler_ok(a, b):
                v.append(f"triangle {i}: defective coupler {a}-{b}")
    # sharing discipline: parent/child share exactly their linking vertex
    shared_allowed: dict[frozenset, set[Coord]] = {}
    for i, p in enumerate(layout.parents):
        if i == 0:
            if p != -1:
                v.append("triangle 0 must be the root (parent -1)")
            continue
        if not 0 <= p < i:
            v.append(f"triangle {i}: parent index {p} invalid")
            continue
        link = set(tris[i].qubits()) & set(tris[p].qubits())
        if len(link) != 1:
            v.append(f"triangles {p}->{i}: share {len(link)} qubits, want exactly 1")
            continue
        q = next(iter(link))
        if q != tris[i].input:
            v.append(f"triangles {p}->{i}: shared qubit {q} is not the child's input")
        if q not in tris[p].outputs():
            v.append(f"triangles {p}->{i}: shared qubit {q} is not a parent output")
        shared_allowed[frozenset((p, i))] = link
    for i in range(len(tris)):
        for j in range(i + 1, len(tris)):
            overlap = set(tris[i].qubits()) & set(tris[j].qubits())
            allowed = shared_allowed.get(frozenset((i, j)), set())
            extra = overlap - allowed
            if extra:
                v.append(f"triangles {i},{j}: reuse qubits {sorted(extra)}")
    holes = _holes(grid, layout.occupied())
    if holes:
        v.append(f"occupied region encloses free qubits {holes}")
    return LayoutReport(v)


def _router_budget(layers: int) -> int:
    return 0 if layers < 3 else 2 ** (layers - 2) - 1


def _placements_at(grid: GridSpec, point: Coord) -> list[Triangle]:
    """All triangles having ``point`` as a non-address (vertex) corner."""
    out = []
    for dr, dc in _CORNERS:
        anchor = (point[0] - dr, point[1] - dc)
        if not (grid.in_bounds(anchor)
                and grid.in_bounds((anchor[0] + 1, anchor[1] + 1))):
            continue
        corner_idx = _CORNERS.index((dr, dc))
        for addr in range(4):
            if addr == corner_idx:
                continue
            out.append(Triangle(anchor, addr, corner_idx))
    return out


def _triangle_ok(grid: GridSpec, t: Triangle, occupied: set[Coord], attach: Coord) -> bool:
    for q in t.qubits():
        if not grid.in_bounds(q) or q in grid.defect_qubits:
            return False
        if q != attach and q in occupied:
            return False
    for a, b in t.edges():
        if not grid.coupler_ok(a, b):
            return False
    return True


def grow_layout(grid: GridSpec, seed: Triangle, target_layers: int):
    """Grow a binary triangle tree from the seed to the requested depth.

    Returns (TriangleLayout, achieved_layers); the layout is None when the
    target could not be reached, with achieved_layers reporting the deepest
    complete tree found.
    """
    budget = _router_budget(target_layers)
    if budget == 0:
        return TriangleLayout([], []), target_layers
    free = grid.rows * grid.cols - len(grid.defect_qubits)
    if 3 * budget + 1 > free:
        return None, _max_layers_by_count(free)
    if not _triangle_ok(grid, seed, set(), seed.input):
        return None, 1
    if seed.input in grid.defect_qubits:
        return None, 1

    levels = target_layers - 2  # triangle-tree depth
    best_achieved = 3

    tris = [seed]
    parents = [-1]
    occupied = set(seed.qubits())
    dead: set[tuple] = set()

    def frontier_key(points):
        return (frozenset(occupied), tuple(sorted(points)))

    def attach_children(points: list[tuple[int, Coord]], level: int) -> bool:
        nonlocal best_achieved
        best_achieved = max(best_achieved, level + 2)
        if level >= levels:
            if not _holes(grid, occupied):
                return True
            return False
        remaining_levels = levels - level
        # each new triangle adds exactly 3 fresh qubits
        free_now = grid.rows * grid.cols - len(grid.defect_qubits) - len(occupied)
        if free_now < 3 * len(points) * (2 ** remaining_levels - 1):
            return False
        key = frontier_key([p for _, p in points])
        if key in dead:
            return False

        def assign(idx: int, next_points: list) -> bool:
            if idx == len(points):
                return attach_children(next_points, level + 1)
            parent_idx, pt = points[idx]
            for child in _placements_at(grid, pt):
                if not _triangle_ok(grid, child, occupied, pt):
                    continue
                tris.append(child)
                parents.append(parent_idx)
                added = [q for q in child.qubits() if q != pt]
                occupied.update(added)
                child_pts = [(len(tris) - 1, out) for out in child.outputs()]
                if assign(idx + 1, next_points + child_pts):
                    return True
                for q in added:
                    occupied.discard(q)
                tris.pop()
                parents.pop()
            return False

        if assign(0, []):
            return True
        dead.add(key)
        return False

    start_points = [(0, out) for out in seed.outputs()]
    if levels == 1:
        if _holes(grid, occupied):
            return None, best_achieved
        return TriangleLayout(tris, parents), 3
    if attach_children(start_points, 1):
        return TriangleLayout(list(tris), list(parents)), target_layers
    return None, best_achieved


def _max_layers_by_count(free_qubits: int) -> int:
    layers = 1
    while 3 * _router_budget(layers + 1) + 1 <= free_qubits:
        layers += 1
    return layers


def seed_candidates(grid: GridSpec) -> list[Triangle]:
    """All root placements in lexicographic anchor order."""
    out = []
    for r in range(grid.rows - 1):
        for c in range(grid.cols - 1):
            for addr in range(4):
                for inp in range(4):
                    if inp != addr:
                        out.append(Triangle((r, c), addr, inp))
    return out


def best_layout(grid: GridSpec, target_layers: int):
    """Scan seed placements (lexicographic, deterministic) for the target.

    Returns (seed, layout, diagnostics) or (None, None, diagnostics) on
    failure.  Diagnostics include the winning seed's distance from the grid
    center — the packing observation, reported, never asserted.
    """
    if _router_budget(target_layers) == 0:
        return None, TriangleLayout([], []), {"note": "no routers requested"}
    free = grid.rows * grid.cols - len(grid.defect_qubits)
    if 3 * _router_budget(target_layers) + 1 > free:
        return None, None, {
            "reason": "qubit budget exceeded",
            "needed": 3 * _router_budget(target_layers) + 1,
            "available": free,
            "max_layers_by_count": _max_layers_by_count(free),
        }
    deepest = 1
    for seed in seed_candidates(grid):
        layout, achieved = grow_layout(grid, seed, target_layers)
        deepest = max(deepest, achieved)
        if layout is not None:
            center = ((grid.rows - 1) / 2, (grid.cols - 1) / 2)
            d = abs(seed.anchor[0] + 0.5 - center[0]) + abs(seed.anchor[1] + 0.5 - center[1])
            return seed, layout, {"seed_center_distance": d}
    return None, None, {"reason": "search exhausted", "deepest_layers": deepest}

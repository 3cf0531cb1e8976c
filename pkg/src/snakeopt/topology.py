"""Processor graphs, gate-variable graphs and CZ layer colorings.

Qubits sit on integer lattice coordinates and couplers only join lattice
neighbors (Manhattan distance 1).  Every qubit carries one idle frequency
variable and every coupler one interaction frequency variable.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable

import numpy as np

Coord = tuple[int, int]
Pair = tuple[int, int]


class TopologyError(ValueError):
    pass


def _pair(a: int, b: int) -> Pair:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class ProcessorGraph:
    qubits: tuple[int, ...]
    coords: dict[int, Coord]
    couplers: tuple[Pair, ...]
    distance: int | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "couplers", tuple(_pair(int(a), int(b)) for a, b in self.couplers))
        qset = set(self.qubits)
        if len(qset) != len(self.qubits):
            raise TopologyError("duplicate qubit ids")
        if set(self.coords) != qset:
            raise TopologyError("coords must cover exactly the qubit set")
        if len(set(self.coords.values())) != len(self.qubits):
            raise TopologyError("two qubits share a lattice site")
        seen = set()
        for a, b in self.couplers:
            if a == b:
                raise TopologyError(f"self-coupler on qubit {a}")
            if a not in qset or b not in qset:
                raise TopologyError(f"coupler ({a}, {b}) references an unknown qubit")
            key = _pair(a, b)
            if key in seen:
                raise TopologyError(f"duplicate coupler {key}")
            seen.add(key)
            (xa, ya), (xb, yb) = self.coords[a], self.coords[b]
            if abs(xa - xb) + abs(ya - yb) != 1:
                raise TopologyError(f"coupler {key} joins non-adjacent sites")

    def __eq__(self, other):
        if not isinstance(other, ProcessorGraph):
            return NotImplemented
        return (
            self.qubits == other.qubits
            and self.coords == other.coords
            and set(self.couplers) == set(other.couplers)
            and self.distance == other.distance
        )

    __hash__ = None

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @cached_property
    def neighbors(self) -> dict[int, tuple[int, ...]]:
        nb: dict[int, list[int]] = {q: [] for q in self.qubits}
        for a, b in self.couplers:
            nb[a].append(b)
            nb[b].append(a)
        return {q: tuple(sorted(v)) for q, v in nb.items()}

    def degree(self, q: int) -> int:
        return len(self.neighbors[q])

    def hop_distances(self, source: int, limit: int | None = None) -> dict[int, int]:
        """BFS hop distances from ``source`` over couplers, optionally truncated."""
        dist = {source: 0}
        queue = deque([source])
        while queue:
            q = queue.popleft()
            if limit is not None and dist[q] >= limit:
                continue
            for n in self.neighbors[q]:
                if n not in dist:
                    dist[n] = dist[q] + 1
                    queue.append(n)
        return dist

    def parasitic_pairs(self, max_hops: int = 2) -> list[tuple[int, int, int]]:
        """Qubit pairs within ``max_hops`` coupler hops, as sorted (a, b, hops)."""
        out = []
        for a in self.qubits:
            for b, h in self.hop_distances(a, max_hops).items():
                if a < b and 1 <= h:
                    out.append((a, b, h))
        out.sort()
        return out

    def to_dict(self) -> dict:
        d = {
            "qubits": [{"id": q, "x": self.coords[q][0], "y": self.coords[q][1]} for q in self.qubits],
            "couplers": [list(c) for c in self.couplers],
        }
        if self.distance is not None:
            d["distance"] = self.distance
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessorGraph":
        qubits = tuple(int(q["id"]) for q in d["qubits"])
        coords = {int(q["id"]): (int(q["x"]), int(q["y"])) for q in d["qubits"]}
        couplers = tuple(_pair(int(a), int(b)) for a, b in d["couplers"])
        return cls(qubits, coords, couplers, d.get("distance"), d.get("name", ""))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProcessorGraph":
        return cls.from_dict(json.loads(text))


def build_surface_code_lattice(d: int) -> ProcessorGraph:
    """Rotated surface-code layout with N = 2d^2 - 1 qubits.

    Data qubits occupy a d x d block and measure qubits the plaquettes between
    them, plus alternating boundary plaquettes.  Coordinates are rotated by
    45 degrees so that every data-measure coupling is a unit lattice step.
    """
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise TopologyError(f"surface code distance must be an integer >= 1, got {d!r}")
    d = int(d)
    sites: list[Coord] = []  # (X, Y) on the fine diagonal grid
    for r in range(d):
        for c in range(d):
            sites.append((2 * c + 1, 2 * r + 1))
    for r in range(d + 1):
        for c in range(d + 1):
            interior = 1 <= r <= d - 1 and 1 <= c <= d - 1
            top = r == 0 and 1 <= c <= d - 1 and c % 2 == 0
            bottom = r == d and 1 <= c <= d - 1 and (d + c) % 2 == 0
            left = c == 0 and 1 <= r <= d - 1 and r % 2 == 1
            right = c == d and 1 <= r <= d - 1 and (r + d) % 2 == 1
            if interior or top or bottom or left or right:
                sites.append((2 * c, 2 * r))
    rotated = [((X + Y) // 2, (X - Y) // 2) for X, Y in sites]
    y0 = min(y for _, y in rotated)
    rotated = sorted((x, y - y0) for x, y in rotated)
    rotated.sort(key=lambda c: (c[1], c[0]))
    index = {c: i for i, c in enumerate(rotated)}
    couplers = []
    for (x, y), i in index.items():
        for n in ((x + 1, y), (x, y + 1)):
            if n in index:
                couplers.append(_pair(i, index[n]))
    return ProcessorGraph(
        tuple(range(len(rotated))),
        {i: c for c, i in index.items()},
        tuple(sorted(couplers)),
        distance=d,
        name=f"surface-d{d}",
    )


def load_sycamore68() -> ProcessorGraph:
    """The bundled 68-qubit, 109-coupler lattice."""
    text = resources.files("snakeopt").joinpath("data/sycamore68.json").read_text()
    return ProcessorGraph.from_json(text)


def subgraph(p: ProcessorGraph, qubit_ids: Iterable[int]) -> ProcessorGraph:
    keep = set(qubit_ids)
    unknown = keep - set(p.qubits)
    if unknown:
        raise TopologyError(f"unknown qubit ids: {sorted(unknown)}")
    qubits = tuple(q for q in p.qubits if q in keep)
    couplers = tuple(c for c in p.couplers if c[0] in keep and c[1] in keep)
    full = len(qubits) == len(p.qubits)
    return ProcessorGraph(
        qubits,
        {q: p.coords[q] for q in qubits},
        couplers,
        distance=p.distance if full else None,
        name=p.name if full else "",
    )


@dataclass(frozen=True, eq=False)
class GateVariableGraph:
    """Idle variables (one per qubit) followed by interaction variables (one per coupler)."""

    processor: ProcessorGraph
    names: tuple[str, ...]
    support: tuple[tuple[int, ...], ...]
    adjacency: tuple[frozenset[int], ...]
    # idle <-> interaction incidence; distances on this graph define scope balls
    incidence: tuple[tuple[int, ...], ...]
    idle_index: dict[int, int] = field(repr=False)
    interaction_index: dict[Pair, int] = field(repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_idle(self) -> int:
        return len(self.idle_index)

    def is_idle(self, v: int) -> bool:
        return v < self.n_idle

    def index_of(self, name: str) -> int:
        return self._name_index[name]

    @cached_property
    def _name_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def incidence_distances(self, source: int, limit: int | None = None,
                            allowed: np.ndarray | None = None) -> dict[int, int]:
        """BFS distances over the idle/interaction incidence graph."""
        dist = {source: 0}
        queue = deque([source])
        while queue:
            v = queue.popleft()
            if limit is not None and dist[v] >= limit:
                continue
            for n in self.incidence[v]:
                if n not in dist and (allowed is None or allowed[n]):
                    dist[n] = dist[v] + 1
                    queue.append(n)
        return dist

    def hinged_interactions(self, q: int) -> list[int]:
        return sorted(v for v in self.incidence[self.idle_index[q]])


def idle_name(q: int) -> str:
    return f"q{q}"


def interaction_name(a: int, b: int) -> str:
    a, b = _pair(a, b)
    return f"q{a}-q{b}"


def build_gate_variable_graph(p: ProcessorGraph) -> GateVariableGraph:
    names: list[str] = []
    support: list[tuple[int, ...]] = []
    idle_index: dict[int, int] = {}
    interaction_index: dict[Pair, int] = {}
    for q in p.qubits:
        idle_index[q] = len(names)
        names.append(idle_name(q))
        support.append((q,))
    for a, b in p.couplers:
        interaction_index[(a, b)] = len(names)
        names.append(interaction_name(a, b))
        support.append((a, b))

    by_qubit: dict[int, list[int]] = {q: [] for q in p.qubits}
    for (a, b), v in interaction_index.items():
        by_qubit[a].append(v)
        by_qubit[b].append(v)

    adjacency: list[set[int]] = [set() for _ in names]
    incidence: list[list[int]] = [[] for _ in names]
    for q, v in idle_index.items():
        adjacency[v].update(by_qubit[q])
        adjacency[v].update(idle_index[n] for n in p.neighbors[q])
        incidence[v] = sorted(by_qubit[q])
    for (a, b), v in interaction_index.items():
        adjacency[v].update((idle_index[a], idle_index[b]))
        adjacency[v].update(u for u in by_qubit[a] + by_qubit[b] if u != v)
        incidence[v] = [idle_index[a], idle_index[b]]
    return GateVariableGraph(
        processor=p,
        names=tuple(names),
        support=tuple(support),
        adjacency=tuple(frozenset(a) for a in adjacency),
        incidence=tuple(tuple(i) for i in incidence),
        idle_index=idle_index,
        interaction_index=interaction_index,
    )


LAYER_NAMES = ("horizontal-even", "horizontal-odd", "vertical-even", "vertical-odd")


@dataclass(frozen=True)
class LayerColoring:
    layers: tuple[frozenset[Pair], ...]

    def layer_of(self, coupler: Pair) -> int:
        for i, layer in enumerate(self.layers):
            if coupler in layer:
                return i
        raise KeyError(coupler)


def color_cz_layers(p: ProcessorGraph) -> LayerColoring:
    """Assign couplers to four concurrent CZ layers by orientation and parity."""
    for q in p.qubits:
        if p.degree(q) > 4:
            raise TopologyError(f"qubit {q} has degree {p.degree(q)} > 4")
    layers: list[set[Pair]] = [set() for _ in range(4)]
    for a, b in p.couplers:
        (xa, ya), (xb, yb) = p.coords[a], p.coords[b]
        if ya == yb:
            layers[min(xa, xb) % 2].add((a, b))
        else:
            layers[2 + min(ya, yb) % 2].add((a, b))
    return LayerColoring(tuple(frozenset(layer) for layer in layers))


def split_regions(p: ProcessorGraph, r: int) -> list[list[int]]:
    """Split qubits into ``r`` spatially contiguous groups by recursive bisection."""
    if r < 1:
        raise TopologyError("number of regions must be >= 1")
    groups = [list(p.qubits)]
    axis = 0
    while len(groups) < r:
        groups.sort(key=len, reverse=True)
        need = r - len(groups)
        to_split, groups = groups[:need], groups[need:]
        for g in to_split:
            g = sorted(g, key=lambda q: (p.coords[q][axis], p.coords[q][1 - axis], q))
            half = len(g) // 2
            groups.extend([g[:half], g[half:]])
        axis = 1 - axis
    return [sorted(g) for g in sorted(groups, key=min)]


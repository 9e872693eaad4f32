"""Labeled admissible graphs: enumeration, structural pruning and canonical keys.

Aerial vertices are numbered 1..k in construction order; the first ``n_xi`` of
them are the single-edge vertices carrying vector fields.  Boundary vertices
are ``"B1"``, ``"B2"``.  Every aerial vertex emits an ordered tuple of
``(target, kind)`` edges.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

from .poisson import Brane

Target = Union[int, str]

DEFAULT_CAP = 3


class EdgeKind(str, enum.Enum):
    STRAIGHT = "s"
    WAVY = "w"
    PP = "pp"
    PM = "pm"
    MP = "mp"
    MM = "mm"

    @property
    def two_brane(self) -> bool:
        return len(self.value) == 2

    @property
    def sigma_tau(self) -> tuple[int, int]:
        """Reflection signs of a two-brane class.

        The first slot refers to C0, which sits on the real axis (sigma), the
        second to C1 on the imaginary axis (tau).
        """
        if not self.two_brane:
            raise ValueError(f"{self} is a single-brane kind")
        a, b = self.value
        return (1 if a == "p" else -1, 1 if b == "p" else -1)


SINGLE_KINDS = (EdgeKind.STRAIGHT, EdgeKind.WAVY)
TWO_KINDS = (EdgeKind.PP, EdgeKind.PM, EdgeKind.MP, EdgeKind.MM)


class KindSet(str, enum.Enum):
    SINGLE = "H"
    TWO = "Q"

    @property
    def kinds(self) -> tuple[EdgeKind, ...]:
        return SINGLE_KINDS if self is KindSet.SINGLE else TWO_KINDS


class Scheme(str, enum.Enum):
    HALF_PLANE = "HalfPlane"
    QUADRANT_W0 = "QuadrantW0"
    QUADRANT_W1 = "QuadrantW1"
    QUADRANT_CORNER = "QuadrantCorner"

    @property
    def kind_set(self) -> KindSet:
        return KindSet.SINGLE if self is Scheme.HALF_PLANE else KindSet.TWO

    def boundary_sites(self, n_boundary: int) -> tuple[str, ...]:
        """Where each boundary vertex sits: 'real', 'imag' or 'corner'."""
        if self is Scheme.HALF_PLANE:
            return ("real",) * n_boundary
        sites = {
            Scheme.QUADRANT_W0: ("corner", "real"),
            Scheme.QUADRANT_W1: ("imag", "corner"),
            Scheme.QUADRANT_CORNER: ("corner",),
        }[self]
        if len(sites) != n_boundary:
            raise ValueError(f"{self.value} takes {len(sites)} boundary vertices, got {n_boundary}")
        return sites


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True)
class AdmGraph:
    k: int
    n_xi: int
    n_boundary: int
    kind_set: KindSet
    edges: tuple[tuple[tuple[Target, EdgeKind], ...], ...]

    def __post_init__(self):
        if len(self.edges) != self.k:
            raise ValueError("one edge tuple per aerial vertex required")
        for v, out in enumerate(self.edges, start=1):
            want = 1 if v <= self.n_xi else 2
            if len(out) != want:
                raise ValueError(f"vertex {v} must emit {want} edges")
            for t, kind in out:
                if t == v:
                    raise ValueError(f"edge of vertex {v} lands on its source")
                if t not in self.vertices:
                    raise ValueError(f"unknown target {t!r}")
                if kind not in self.kind_set.kinds:
                    raise ValueError(f"edge kind {kind} not in kind set {self.kind_set.value}")

    @property
    def boundary(self) -> tuple[str, ...]:
        return tuple(f"B{j}" for j in range(1, self.n_boundary + 1))

    @property
    def vertices(self) -> tuple[Target, ...]:
        return tuple(range(1, self.k + 1)) + self.boundary

    @property
    def n_edges(self) -> int:
        return 2 * self.k - self.n_xi

    def edge_list(self) -> list[tuple[int, int, Target, EdgeKind]]:
        """(source, slot, target, kind) in wedge order: vertex order, then slot."""
        return [(v, s, t, kind) for v, out in enumerate(self.edges, start=1) for s, (t, kind) in enumerate(out)]

    def incoming(self, target: Target) -> list[tuple[int, int, EdgeKind]]:
        return [(v, s, kind) for v, s, t, kind in self.edge_list() if t == target]

    def swap_edges(self, v: int) -> "AdmGraph":
        edges = list(self.edges)
        a, b = edges[v - 1]
        edges[v - 1] = (b, a)
        return AdmGraph(self.k, self.n_xi, self.n_boundary, self.kind_set, tuple(edges))

    def key(self) -> str:
        return canonical_key(self)

    def to_json(self) -> dict:
        return {
            "key": self.key(),
            "k": self.k,
            "n_xi": self.n_xi,
            "n_boundary": self.n_boundary,
            "edges": [[{"target": t, "kind": kind.value} for t, kind in out] for out in self.edges],
        }


def _edge_options(v: int, vertices: Sequence[Target], kinds: Sequence[EdgeKind]):
    return [(t, kind) for t in vertices if t != v for kind in kinds]


def enumerate_graphs(k: int, n_xi: int, n_boundary: int, kind_set: KindSet | str = KindSet.SINGLE,
                     cap: int = DEFAULT_CAP) -> list[AdmGraph]:
    """All labeled admissible graphs with k aerial vertices (n_xi of them single-edge)."""
    kind_set = KindSet(kind_set)
    if not (k >= n_xi >= 0):
        raise ValueError("need k >= n_xi >= 0")
    if n_boundary not in (0, 1, 2):
        raise ValueError("n_boundary must be 0, 1 or 2")
    if k - n_xi > cap:
        raise EnumerationCapError(f"enumeration cap {cap} exceeded (k={k})")
    return list(_generate(k, n_xi, n_boundary, kind_set, None))


def count_graphs(k: int, n_xi: int, n_boundary: int, kind_set: KindSet | str = KindSet.SINGLE) -> int:
    """Closed form: every edge picks any vertex but its source and any kind."""
    per_edge = (k + n_boundary - 1) * len(KindSet(kind_set).kinds)
    return per_edge ** (2 * k - n_xi)


def _generate(k, n_xi, n_boundary, kind_set, vertex_filter) -> Iterator[AdmGraph]:
    vertices = tuple(range(1, k + 1)) + tuple(f"B{j}" for j in range(1, n_boundary + 1))
    per_vertex = []
    for v in range(1, k + 1):
        opts = _edge_options(v, vertices, kind_set.kinds)
        outs = [(o,) for o in opts] if v <= n_xi else list(itertools.product(opts, repeat=2))
        if vertex_filter is not None:
            outs = [o for o in outs if vertex_filter(o)]
        per_vertex.append(outs)
    for combo in itertools.product(*per_vertex):
        yield AdmGraph(k, n_xi, n_boundary, kind_set, tuple(combo))


# ---------------------------------------------------------------------------
# structural pruning


def normalize_branes(branes) -> tuple[Brane, ...]:
    if isinstance(branes, Brane):
        return (branes,)
    return tuple(branes)


def index_range(kind: EdgeKind, branes) -> tuple[int, ...]:
    """Indices summed over by an edge of this kind."""
    branes = normalize_branes(branes)
    if not kind.two_brane:
        (c,) = branes
        return c.tangent if kind is EdgeKind.STRAIGHT else c.conormal
    c0, c1 = branes
    a, b = kind.value
    s0 = set(c0.tangent) if a == "p" else set(c0.conormal)
    s1 = set(c1.tangent) if b == "p" else set(c1.conormal)
    return tuple(sorted(s0 & s1))


def lands_nonvanishing(kind: EdgeKind, site: str) -> bool:
    """Whether the edge form survives with its target pinned at a boundary site."""
    if not kind.two_brane:
        return kind is EdgeKind.STRAIGHT
    sigma, tau = kind.sigma_tau
    if site == "real":
        return sigma == 1
    if site == "imag":
        return tau == 1
    return sigma == 1 and tau == 1


def _edge_ok(target, kind, branes, sites) -> bool:
    if not index_range(kind, branes):
        return False
    if isinstance(target, str):
        return lands_nonvanishing(kind, sites[int(target[1:]) - 1])
    return True


def _vertex_ok(out, branes, sites) -> bool:
    if len(out) == 2 and out[0] == out[1]:
        return False
    return all(_edge_ok(t, kind, branes, sites) for t, kind in out)


def survives(g: AdmGraph, branes, scheme: Scheme | str) -> bool:
    scheme = Scheme(scheme)
    branes = normalize_branes(branes)
    if g.kind_set is not scheme.kind_set:
        raise ValueError(f"graph kind set {g.kind_set.value} does not match scheme {scheme.value}")
    if len(branes) != (1 if g.kind_set is KindSet.SINGLE else 2):
        raise ValueError("brane count does not match the graph kind set")
    sites = scheme.boundary_sites(g.n_boundary)
    return all(_vertex_ok(out, branes, sites) for out in g.edges)


def prune_structural(graphs: Iterable[AdmGraph], branes, scheme: Scheme | str) -> list[AdmGraph]:
    """Drop graphs whose weight or operator vanishes for structural reasons.

    Removed: edges whose form vanishes at their boundary target, edge classes
    with an empty index range, and doubled edges of identical kind.
    """
    return [g for g in graphs if survives(g, branes, scheme)]


def admissible(k: int, n_xi: int, n_boundary: int, branes, scheme: Scheme | str,
               cap: int = DEFAULT_CAP) -> list[AdmGraph]:
    """enumerate_graphs followed by prune_structural, pruning vertex by vertex."""
    scheme = Scheme(scheme)
    branes = normalize_branes(branes)
    if k - n_xi > cap:
        raise EnumerationCapError(f"enumeration cap {cap} exceeded (k={k})")
    sites = scheme.boundary_sites(n_boundary)
    return list(_generate(k, n_xi, n_boundary, scheme.kind_set, lambda o: _vertex_ok(o, branes, sites)))


# ---------------------------------------------------------------------------
# canonical keys


def canonical_key(g: AdmGraph) -> str:
    head = f"{g.k};{g.n_xi};{g.n_boundary};{g.kind_set.value};"
    body = ";".join(
        f"v{v}:" + ",".join(f"({t},{kind.value})" for t, kind in out) for v, out in enumerate(g.edges, start=1)
    )
    return head + body


def decode_key(key: str) -> AdmGraph:
    parts = key.split(";")
    if len(parts) < 5:
        raise ValueError(f"malformed graph key {key!r}")
    k, n_xi, nb = int(parts[0]), int(parts[1]), int(parts[2])
    kind_set = KindSet(parts[3])
    body = [p for p in parts[4:] if p]
    if len(body) != k:
        raise ValueError(f"key {key!r} lists {len(body)} vertices, expected {k}")
    edges = []
    for v, chunk in enumerate(body, start=1):
        label, _, rest = chunk.partition(":")
        if label != f"v{v}":
            raise ValueError(f"vertex label {label!r} out of order in {key!r}")
        out = []
        for item in rest.strip("()").split("),("):
            t, kind = item.split(",")
            out.append((t if t.startswith("B") else int(t), EdgeKind(kind)))
        edges.append(tuple(out))
    return AdmGraph(k, n_xi, nb, kind_set, tuple(edges))


def export_graphs(graphs: Iterable[AdmGraph]) -> str:
    return json.dumps([g.to_json() for g in graphs], indent=1)

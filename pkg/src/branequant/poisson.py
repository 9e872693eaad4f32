"""Poisson bivectors on R^n, coordinate-subspace branes and the classical checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .polyalg import Poly


def _perm_sign(idx: Sequence[int]) -> int:
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


class PoissonStructure:
    """Antisymmetric bivector pi = pi^{ij} d_i (x) d_j with polynomial components.

    Only components with i < j are stored; the Jacobi identity is not assumed.
    """

    def __init__(self, dim: int, entries: Mapping[tuple[int, int], Poly]):
        self.dim = dim
        comps: dict[tuple[int, int], Poly] = {}
        for (i, j), p in entries.items():
            if not (1 <= i <= dim and 1 <= j <= dim):
                raise IndexError(f"component ({i},{j}) out of range for dim {dim}")
            if i == j:
                if not p.is_zero():
                    raise ValueError("diagonal components of a bivector must vanish")
                continue
            if p.dim != dim:
                raise ValueError("component dimension mismatch")
            if i > j:
                i, j, p = j, i, -p
            comps[(i, j)] = comps[(i, j)] + p if (i, j) in comps else p
        self._comps = {k: v for k, v in comps.items() if not v.is_zero()}

    def __call__(self, i: int, j: int) -> Poly:
        if i == j:
            return Poly.zero(self.dim)
        if i < j:
            return self._comps.get((i, j), Poly.zero(self.dim))
        return -self._comps.get((j, i), Poly.zero(self.dim))

    @property
    def entries(self) -> dict[tuple[int, int], Poly]:
        return dict(self._comps)

    def is_constant(self) -> bool:
        return all(p.degree() <= 0 for p in self._comps.values())

    def is_zero(self) -> bool:
        return not self._comps

    def scaled(self, c) -> "PoissonStructure":
        return PoissonStructure(self.dim, {k: v * c for k, v in self._comps.items()})

    def bracket(self, f: Poly, g: Poly) -> Poly:
        """{f, g} = pi^{ij} d_i f d_j g."""
        out = Poly.zero(self.dim)
        for (i, j), p in self._comps.items():
            out = out + p * (f.diff(i) * g.diff(j) - f.diff(j) * g.diff(i))
        return out

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "entries": [{"i": i, "j": j, "poly": p.to_json()} for (i, j), p in sorted(self._comps.items())],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PoissonStructure":
        try:
            dim = int(obj["dim"])
            entries = {}
            for e in obj["entries"]:
                i, j = int(e["i"]), int(e["j"])
                if i >= j:
                    raise ValueError(f"entries must have i < j, got ({i},{j})")
                entries[(i, j)] = Poly.from_json(e["poly"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed Poisson JSON: {exc}") from exc
        return cls(dim, entries)

    def __eq__(self, other):
        return isinstance(other, PoissonStructure) and self.dim == other.dim and self._comps == other._comps

    def __repr__(self) -> str:
        body = ", ".join(f"pi^{i}{j}={p}" for (i, j), p in sorted(self._comps.items()))
        return f"PoissonStructure(dim={self.dim}; {body})"


@dataclass(frozen=True)
class Brane:
    """Coordinate subspace {x^mu = 0 : mu not in tangent}."""

    dim: int
    tangent: tuple[int, ...]

    def __post_init__(self):
        t = tuple(sorted(set(int(i) for i in self.tangent)))
        if any(not 1 <= i <= self.dim for i in t):
            raise ValueError(f"tangent indices {t} out of range 1..{self.dim}")
        object.__setattr__(self, "tangent", t)

    @classmethod
    def full(cls, dim: int) -> "Brane":
        return cls(dim, tuple(range(1, dim + 1)))

    @property
    def conormal(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.dim + 1) if i not in self.tangent)

    @property
    def codim(self) -> int:
        return self.dim - len(self.tangent)

    def is_full(self) -> bool:
        return not self.conormal

    def intersect(self, other: "Brane") -> "Brane":
        return Brane(self.dim, tuple(set(self.tangent) & set(other.tangent)))

    def restrict(self, p: Poly) -> Poly:
        return p.restrict(self.conormal)

    def is_tangential(self, p: Poly) -> bool:
        return not any(p.depends_on(mu) for mu in self.conormal)

    def to_json(self) -> dict:
        return {"tangent": list(self.tangent)}

    @classmethod
    def from_json(cls, obj: Mapping, dim: int) -> "Brane":
        try:
            return cls(dim, tuple(int(i) for i in obj["tangent"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed brane JSON: {exc}") from exc


@dataclass(frozen=True)
class VectorFieldPoly:
    components: tuple[Poly, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("vector field needs at least one component")
        if any(c.dim != len(self.components) for c in self.components):
            raise ValueError("component count must equal the ambient dimension")

    @property
    def dim(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> Poly:
        return self.components[i - 1]

    def __call__(self, f: Poly) -> Poly:
        out = Poly.zero(self.dim)
        for i, c in enumerate(self.components, start=1):
            if not c.is_zero():
                out = out + c * f.diff(i)
        return out

    def __add__(self, other: "VectorFieldPoly") -> "VectorFieldPoly":
        return VectorFieldPoly(tuple(a + b for a, b in zip(self.components, other.components)))

    def scale(self, c) -> "VectorFieldPoly":
        return VectorFieldPoly(tuple(p * c for p in self.components))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)


class RelativeMultivector:
    """Antisymmetric multivector of a given degree; stores strictly increasing index tuples."""

    def __init__(self, dim: int, degree: int, components: Mapping[tuple[int, ...], Poly]):
        self.dim = dim
        self.degree = degree
        comps: dict[tuple[int, ...], Poly] = {}
        for idx, p in components.items():
            if len(idx) != degree:
                raise ValueError(f"index {idx} has wrong length for degree {degree}")
            if len(set(idx)) < degree:
                if not p.is_zero():
                    raise ValueError("repeated index with nonzero component")
                continue
            key = tuple(sorted(idx))
            val = p * _perm_sign(idx)
            comps[key] = comps[key] + val if key in comps else val
        self._comps = {k: v for k, v in comps.items() if not v.is_zero()}

    def __call__(self, *idx: int) -> Poly:
        if len(set(idx)) < len(idx):
            return Poly.zero(self.dim)
        return self._comps.get(tuple(sorted(idx)), Poly.zero(self.dim)) * _perm_sign(idx)

    @property
    def components(self) -> dict[tuple[int, ...], Poly]:
        return dict(self._comps)

    def is_zero(self) -> bool:
        return not self._comps

    @classmethod
    def from_bivector(cls, pi: PoissonStructure) -> "RelativeMultivector":
        return cls(pi.dim, 2, pi.entries)

    @classmethod
    def from_vector_field(cls, xi: VectorFieldPoly) -> "RelativeMultivector":
        return cls(xi.dim, 1, {(i,): c for i, c in enumerate(xi.components, start=1)})


def jacobi_component(pi: PoissonStructure, j: int, k: int, l: int) -> Poly:
    """pi^{ij} d_i pi^{kl} + pi^{il} d_i pi^{jk} + pi^{ik} d_i pi^{lj}, summed over i."""
    out = Poly.zero(pi.dim)
    for i in range(1, pi.dim + 1):
        out = out + pi(i, j) * pi(k, l).diff(i) + pi(i, l) * pi(j, k).diff(i) + pi(i, k) * pi(l, j).diff(i)
    return out


def jacobiator(pi: PoissonStructure) -> RelativeMultivector:
    comps = {idx: jacobi_component(pi, *idx) for idx in itertools.combinations(range(1, pi.dim + 1), 3)}
    return RelativeMultivector(pi.dim, 3, comps)


def is_poisson(pi: PoissonStructure) -> bool:
    return jacobiator(pi).is_zero()


def check_coisotropic(pi: PoissonStructure, brane: Brane) -> bool:
    conormal = brane.conormal
    return all(pi(mu, nu).restrict(conormal).is_zero() for mu, nu in itertools.combinations(conormal, 2))


class NotCoisotropicError(ValueError):
    pass


def characteristic_fields(pi: PoissonStructure, brane: Brane) -> dict[int, VectorFieldPoly]:
    """E^mu restricted to C, one per conormal index mu; conormal components are zero."""
    if not check_coisotropic(pi, brane):
        raise NotCoisotropicError(f"{brane} is not coisotropic for {pi}")
    out = {}
    for mu in brane.conormal:
        comps = [
            pi(mu, i).restrict(brane.conormal) if i in brane.tangent else Poly.zero(pi.dim)
            for i in range(1, pi.dim + 1)
        ]
        out[mu] = VectorFieldPoly(tuple(comps))
    return out


def hamiltonian_field(pi: PoissonStructure, mu: int) -> VectorFieldPoly:
    """E^mu = pi^{mu i} d_i on all of M (unrestricted; used as input to A)."""
    return VectorFieldPoly(tuple(pi(mu, i) for i in range(1, pi.dim + 1)))


def is_invariant(f: Poly, pi: PoissonStructure, brane: Brane) -> bool:
    if not brane.is_tangential(f):
        raise ValueError("function depends on a conormal coordinate")
    for E in characteristic_fields(pi, brane).values():
        if not E(f).is_zero():
            return False
    return True


def relative_membership(alpha: RelativeMultivector, brane: Brane) -> bool:
    """True iff alpha restricted to C vanishes on the exterior powers of the conormal bundle."""
    conormal = brane.conormal
    for idx in itertools.combinations(conormal, alpha.degree):
        if not alpha(*idx).restrict(conormal).is_zero():
            return False
    return True

"""Example library: Poisson structures and branes used by the verification suites."""

from __future__ import annotations

from dataclasses import dataclass, field

from .poisson import Brane, PoissonStructure
from .polyalg import Poly


def x(i: int, dim: int) -> Poly:
    return Poly.var(i, dim)


def one(dim: int) -> Poly:
    return Poly.const(1, dim)


@dataclass(frozen=True)
class Fixture:
    name: str
    pi: PoissonStructure
    branes: tuple[Brane, ...]
    poisson: bool = True
    coisotropic: bool = True
    functions: dict = field(default_factory=dict)
    note: str = ""

    @property
    def dim(self) -> int:
        return self.pi.dim


def moyal() -> PoissonStructure:
    return PoissonStructure(2, {(1, 2): one(2)})


def symplectic4() -> PoissonStructure:
    return PoissonStructure(4, {(1, 2): one(4), (3, 4): one(4)})


def lie2() -> PoissonStructure:
    """Dual of the Lie algebra [e1, e2] = e1."""
    return PoissonStructure(2, {(1, 2): x(1, 2)})


def lie2_ideal() -> PoissonStructure:
    """Dual of [e1, e2] = e2, where span(e2) is an ideal."""
    return PoissonStructure(2, {(1, 2): x(2, 2)})


def so3() -> PoissonStructure:
    return PoissonStructure(3, {(1, 2): x(3, 3), (2, 3): x(1, 3), (1, 3): -x(2, 3)})


def non_poisson() -> PoissonStructure:
    return PoissonStructure(3, {(1, 2): x(1, 3) ** 2, (1, 3): x(3, 3)})


def library() -> dict[str, Fixture]:
    """All named fixtures."""
    fx = [
        Fixture("moyal-plane", moyal(), (Brane.full(2),),
                functions={"f": x(1, 2) ** 2, "g": x(2, 2) ** 2, "h": x(1, 2) * x(2, 2)}),
        Fixture("moyal-line", moyal(), (Brane(2, (1,)),), functions={"f": x(1, 2)},
                note="Lagrangian line {x2 = 0}"),
        Fixture("symplectic4-lagrangian", symplectic4(), (Brane(4, (1, 3)),),
                functions={"f": one(4)}, note="Lagrangian plane {x2 = x4 = 0}"),
        Fixture("symplectic4-hyperplane", symplectic4(), (Brane(4, (1, 2, 3)),),
                functions={"f": x(1, 4) * x(2, 4)}, note="coisotropic hyperplane {x4 = 0}"),
        Fixture("symplectic4-bad", symplectic4(), (Brane(4, (1, 2)),), coisotropic=False,
                note="{x3 = x4 = 0} is symplectic, not coisotropic"),
        Fixture("lie2-annihilator", lie2(), (Brane(2, (1,)),), functions={"f": x(1, 2)},
                note="h = span(e2), annihilator {x2 = 0}; x1 is not invariant"),
        Fixture("lie2-ideal", lie2_ideal(), (Brane(2, (1,)),), functions={"f": x(1, 2)},
                note="h = span(e2) is an ideal; every function of x1 is invariant"),
        Fixture("so3", so3(), (Brane.full(3),),
                functions={"f": x(1, 3), "g": x(2, 3), "h": x(3, 3)}),
        Fixture("so3-plane", so3(), (Brane(3, (1, 2)),),
                functions={"f": x(1, 3) ** 2 + x(2, 3) ** 2}, note="codimension one"),
        Fixture("non-poisson", non_poisson(), (Brane.full(3),), poisson=False),
        Fixture("moyal-bimodule", moyal(), (Brane.full(2), Brane(2, (1,))),
                functions={"psi": x(1, 2), "f": one(2), "g": x(2, 2)},
                note="C0 = M, C1 = {x2 = 0}"),
        Fixture("character", lie2(), (Brane.full(2), Brane(2, ())),
                functions={"psi": one(2), "f": x(1, 2) * x(2, 2)},
                note="C0 = M, C1 = {0}: rank-one module"),
    ]
    return {f.name: f for f in fx}


def get(name: str) -> Fixture:
    lib = library()
    if name not in lib:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(lib))}")
    return lib[name]

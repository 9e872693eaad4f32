import pytest

from branequant import fixtures as fx
from branequant.poisson import (Brane, NotCoisotropicError, PoissonStructure, RelativeMultivector,
                                VectorFieldPoly, characteristic_fields, check_coisotropic, is_invariant, is_poisson,
                                jacobiator, relative_membership)
from branequant.polyalg import Poly

x = fx.x


def test_antisymmetry():
    pi = fx.so3()
    for i in range(1, 4):
        for j in range(1, 4):
            assert pi(i, j) == -pi(j, i)


def test_bracket():
    assert fx.moyal().bracket(x(1, 2), x(2, 2)) == 1
    assert fx.so3().bracket(x(1, 3), x(2, 3)) == x(3, 3)


def test_jacobiator_examples():
    assert jacobiator(fx.moyal()).is_zero()
    assert jacobiator(fx.symplectic4()).is_zero()
    assert jacobiator(fx.so3()).is_zero()
    assert not jacobiator(fx.non_poisson()).is_zero()
    assert is_poisson(fx.lie2()) and is_poisson(fx.lie2_ideal())


def test_jacobiator_matches_sympy():
    sympy = pytest.importorskip("sympy")
    X = sympy.symbols("x1:4")
    P = sympy.zeros(3, 3)
    P[0, 1], P[0, 2] = X[0] ** 2, X[2]
    P = P - P.T
    j, k, l = 0, 1, 2
    expr = sum(P[i, j] * sympy.diff(P[k, l], X[i]) + P[i, l] * sympy.diff(P[j, k], X[i])
               + P[i, k] * sympy.diff(P[l, j], X[i]) for i in range(3))
    ours = jacobiator(fx.non_poisson())(1, 2, 3)
    theirs = sympy.Poly(sympy.expand(expr), *X)
    assert {m: int(c) for m, c in theirs.terms()} == {e: int(c) for e, c in ours.items()}


def test_coisotropy_examples():
    assert check_coisotropic(fx.so3(), Brane(3, (1, 2)))
    assert check_coisotropic(fx.lie2(), Brane(2, (1,)))
    assert not check_coisotropic(fx.symplectic4(), Brane(4, (1, 2)))
    assert check_coisotropic(fx.symplectic4(), Brane(4, (1, 3)))


def test_characteristic_fields():
    E = characteristic_fields(fx.moyal(), Brane(2, (1,)))
    assert E[2].components == (-Poly.const(1, 2), Poly.zero(2))
    E = characteristic_fields(fx.so3(), Brane(3, (1, 2)))
    assert E[3].components == (x(2, 3), -x(1, 3), Poly.zero(3))
    assert all(v.is_zero() for v in characteristic_fields(PoissonStructure(2, {}), Brane(2, ())).values())
    with pytest.raises(NotCoisotropicError):
        characteristic_fields(fx.symplectic4(), Brane(4, (1, 2)))


def test_invariance():
    plane = Brane(3, (1, 2))
    assert is_invariant(x(1, 3) ** 2 + x(2, 3) ** 2, fx.so3(), plane)
    assert not is_invariant(x(1, 3), fx.so3(), plane)
    assert is_invariant(x(1, 3), PoissonStructure(3, {}), plane)
    with pytest.raises(ValueError):
        is_invariant(x(3, 3), fx.so3(), plane)


def test_relative_membership():
    pi = fx.so3()
    assert relative_membership(RelativeMultivector.from_bivector(pi), Brane(3, (1, 2)))
    xi = VectorFieldPoly((x(2, 3), x(1, 3), x(3, 3)))
    assert relative_membership(RelativeMultivector.from_vector_field(xi), Brane(3, (1, 2)))
    pi4 = RelativeMultivector.from_bivector(fx.symplectic4())
    assert not relative_membership(pi4, Brane(4, (1, 2)))


def test_json_round_trip():
    pi = fx.so3()
    assert PoissonStructure.from_json(pi.to_json()).entries == pi.entries
    assert Brane.from_json(Brane(3, (2, 1)).to_json(), 3) == Brane(3, (1, 2))

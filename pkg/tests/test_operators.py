from fractions import Fraction

import pytest

from branequant import fixtures as fx
from branequant.graphs import AdmGraph, EdgeKind, KindSet, Scheme
from branequant.operators import (DeformedProduct, MAX_SAFE_ORDER, bidiff_from_graph, check_assumption, fn_F, lift,
                                  membership, mod_product_left, mod_product_right, op_A, star)
from branequant.poisson import (Brane, NotCoisotropicError, PoissonStructure, VectorFieldPoly, characteristic_fields,
                                hamiltonian_field, is_invariant)
from branequant.polyalg import EpsSeries, Poly, apply_multidiff
from branequant.weights import MissingWeightsError, WeightCache, WeightProvider

S = EdgeKind.STRAIGHT
x = fx.x
X2 = lambda i: x(i, 2)  # noqa: E731
X3 = lambda i: x(i, 3)  # noqa: E731
ZERO2 = PoissonStructure(2, {})
WEDGE = AdmGraph(1, 0, 2, KindSet.SINGLE, ((("B1", S), ("B2", S)),))


def vf(*comps):
    return VectorFieldPoly(tuple(comps))


def test_bidiff_wedge():
    B = bidiff_from_graph(WEDGE, fx.moyal(), Brane.full(2))
    assert dict(B.terms) == {((1, 0), (0, 1)): Poly.const(1, 2), ((0, 1), (1, 0)): Poly.const(-1, 2)}
    assert bidiff_from_graph(WEDGE, ZERO2, Brane.full(2)).is_zero()


def test_bidiff_second_order_graph():
    # vertex 1 differentiates the coefficient of vertex 2
    g = AdmGraph(2, 0, 2, KindSet.SINGLE, ((("B1", S), (2, S)), (("B1", S), ("B2", S))))
    B = bidiff_from_graph(g, fx.so3(), Brane.full(3))
    # pi^{i j} d_j pi^{k l} d_i d_k f d_l g; check on f = x1 x2, g = x3
    f, h = X3(1) * X3(2), X3(3)
    expected = Poly.zero(3)
    pi = fx.so3()
    for i in range(1, 4):
        for j in range(1, 4):
            for k in range(1, 4):
                for l in range(1, 4):
                    expected = expected + pi(i, j) * pi(k, l).diff(j) * f.diff(i).diff(k) * h.diff(l)
    assert apply_multidiff(B, [f, h]) == expected


def test_star_exact_wedge(exact_provider):
    D = DeformedProduct(fx.moyal(), Brane.full(2), 2, exact_provider)
    s = D.star(X2(1), X2(2))
    assert s.coeffs == (X2(1) * X2(2), Poly.const(Fraction(1, 2), 2), Poly.zero(2))
    assert s.is_exact()


def test_star_leading_term_and_one_variable(exact_provider):
    D = DeformedProduct(fx.moyal(), Brane.full(2), 2, exact_provider)
    f, g = X2(1) ** 3 + X2(1), X2(1) ** 2
    s = star(f, g, D)
    assert s.coeffs[0] == f * g
    assert all(c.is_zero() for c in s.coeffs[1:])


def test_star_restricts_to_brane(exact_provider):
    D = DeformedProduct(fx.moyal(), Brane(2, (1,)), 1, exact_provider)
    s = D.star(X2(1), X2(1) ** 2)
    assert s.coeffs[0] == X2(1) ** 3
    with pytest.raises(ValueError):
        D.star(X2(2), X2(1))


def test_star_zero_structure(provider):
    D = DeformedProduct(ZERO2, Brane.full(2), 2, provider)
    s = D.star(X2(1) * X2(2), X2(2) ** 2)
    assert s.coeffs[0] == X2(1) * X2(2) ** 3 and all(c.is_zero() for c in s.coeffs[1:])


def test_order_guard():
    with pytest.raises(ValueError):
        DeformedProduct(fx.moyal(), Brane.full(2), MAX_SAFE_ORDER + 1)
    D = DeformedProduct(fx.moyal(), Brane.full(2), 3, unsafe_order=True)
    with pytest.raises(ValueError):
        D.star(X2(1), X2(2), 4)


def test_input_validation():
    with pytest.raises(ValueError):
        DeformedProduct(fx.non_poisson(), Brane.full(3))
    with pytest.raises(NotCoisotropicError):
        DeformedProduct(fx.symplectic4(), Brane(4, (1, 2)))
    with pytest.raises(ValueError):
        DeformedProduct(fx.moyal(), (Brane.full(2),) * 3)


def test_missing_weights_listed(tmp_path):
    p = WeightProvider(WeightCache(tmp_path / "w.jsonl"), integrate=False)
    D = DeformedProduct(fx.so3(), Brane.full(3), 2, p)
    with pytest.raises(MissingWeightsError) as err:
        D.star(X3(1), X3(2) ** 2)
    keys = err.value.keys
    assert len(keys) > 1
    assert any(k.startswith("2;") for k, _ in keys) and all(s == "HalfPlane" for _, s in keys)


# -- A and F -------------------------------------------------------------------


def test_A_leading_term(provider):
    D = DeformedProduct(fx.lie2(), Brane(2, (1,)), 1, provider)
    xi = vf(X2(1), X2(1) * X2(2))
    A = D.op_A(xi)
    f = X2(1) ** 2
    assert A.apply(EpsSeries.constant(f, 1), order=1).coeffs[0] == xi(f).restrict([2])


def test_A_zero_structure(provider):
    D = DeformedProduct(ZERO2, Brane(2, (1,)), 2, provider)
    xi = vf(X2(1) ** 2, Poly.zero(2))
    out = op_A(xi, D).apply(EpsSeries.constant(X2(1) ** 3, 2), order=2)
    assert out.coeffs[0] == 3 * X2(1) ** 4 and all(c.is_zero() for c in out.coeffs[1:])


def test_A_constant_structure_has_no_corrections(provider):
    for name in ("moyal-line", "symplectic4-lagrangian", "symplectic4-hyperplane"):
        f = fx.get(name)
        D = DeformedProduct(f.pi, f.branes, 2, provider)
        for mu, A in D.characteristic_ops().items():
            assert A.ops[1].is_zero() and A.ops[2].is_zero()
            E = characteristic_fields(f.pi, f.branes[0])[mu]
            p = x(1, f.dim) ** 2 * 3 + x(1, f.dim)
            assert A.apply(EpsSeries.constant(p, 2), order=2).coeffs[0] == E(p)


def test_A_linear_in_xi(provider):
    D = DeformedProduct(fx.lie2(), Brane(2, (1,)), 1, provider)
    xi, eta = vf(X2(2), X2(1)), vf(X2(1) * X2(2), Poly.const(1, 2))
    f = EpsSeries.constant(X2(1) ** 2, 1)
    lhs = D.op_A(xi + eta.scale(3)).apply(f, order=1)
    rhs = D.op_A(xi).apply(f, order=1) + D.op_A(eta).apply(f, order=1).scale(3)
    for a, b, e in zip(lhs.coeffs, rhs.coeffs, lhs.errs):
        assert (a - b).max_abs() <= 1e-9 + 3 * e.max_abs()


def test_F_zero_and_constant(provider):
    c = Poly.const(1, 2)
    assert all(p.is_zero() for p in fn_F(vf(c, c), vf(c, 2 * c), DeformedProduct(ZERO2, Brane(2, (1,)), 2, provider)).coeffs[1:])
    D = DeformedProduct(fx.moyal(), Brane(2, (1,)), 2, provider)
    F = D.fn_F(hamiltonian_field(D.pi, 2), vf(X2(1), c))
    assert all(p.is_zero() for p in F.coeffs[1:])


def test_F_skew(provider):
    D = DeformedProduct(fx.lie2(), Brane(2, (1,)), 1, provider)
    xi, eta = vf(X2(2), X2(1)), vf(X2(1), Poly.const(2, 2))
    a, b = D.fn_F(xi, eta), D.fn_F(eta, xi)
    for p, q, e in zip(a.coeffs, b.coeffs, a.errs):
        assert (p + q).max_abs() <= 1e-9 + 6 * e.max_abs()
    assert all(p.is_zero() for p in D.fn_F(xi, xi).coeffs)


def test_assumption_constant_and_codim_one(provider):
    for name in ("moyal-line", "symplectic4-lagrangian", "lie2-annihilator"):
        f = fx.get(name)
        checks = check_assumption(DeformedProduct(f.pi, f.branes, 2, provider))
        assert checks and all(c.ok for c in checks)


# -- membership and lift -------------------------------------------------------


def test_membership_constant_case(provider):
    f = fx.get("symplectic4-lagrangian")
    D = DeformedProduct(f.pi, f.branes, 2, provider)
    X4 = lambda i: x(i, 4)  # noqa: E731
    for coeffs in [(X4(1), X4(3)), (Poly.const(1, 4), X4(1) * X4(3))]:
        s = EpsSeries(coeffs)
        classical = all(is_invariant(c, f.pi, f.branes[0]) for c in coeffs)
        assert membership(s, D, 1) == classical
    h = fx.get("symplectic4-hyperplane")
    D = DeformedProduct(h.pi, h.branes, 2, provider)
    for p in (X4(1) * X4(2), X4(3), X4(1) + X4(3) ** 2):
        assert membership(p, D) == is_invariant(p, h.pi, h.branes[0])


def test_membership_zero_structure(provider):
    D = DeformedProduct(ZERO2, Brane(2, (1,)), 2, provider)
    assert membership(X2(1) ** 5, D)


def test_lift_constant_and_zero(provider):
    h = fx.get("symplectic4-hyperplane")
    D = DeformedProduct(h.pi, h.branes, 2, provider)
    f0 = x(1, 4) * x(2, 4)
    r = lift(f0, D, 2)
    assert r.exists and r.series.coeffs[0] == f0 and all(c.is_zero() for c in r.series.coeffs[1:])
    r = lift(X2(1) ** 2, DeformedProduct(ZERO2, Brane(2, (1,)), 2, provider), 2)
    assert r.exists and r.residual == 0


def test_lift_obstructed(provider):
    f = fx.get("moyal-line")
    r = lift(X2(1), DeformedProduct(f.pi, f.branes, 1, provider), 2)
    assert not r.exists and r.obstructed_at == 0


# -- module products -----------------------------------------------------------


def test_module_products_zero_structure(provider):
    D = DeformedProduct(ZERO2, (Brane.full(2), Brane(2, (1,))), 2, provider)
    psi, f = X2(1) + 1, X2(1) * X2(2) + X2(1) ** 2
    r = mod_product_right(psi, f, D)
    assert r.coeffs[0] == (psi * f).restrict([2]) and all(c.is_zero() for c in r.coeffs[1:])
    l = mod_product_left(X2(1) ** 2, psi, D)
    assert l.coeffs[0] == X2(1) ** 2 * psi and all(c.is_zero() for c in l.coeffs[1:])


def test_module_product_moyal(provider):
    D = DeformedProduct(fx.moyal(), (Brane.full(2), Brane(2, (1,))), 1, provider)
    r = D.mod_product_right(Poly.const(1, 2), X2(1))
    assert r.coeffs[0] == X2(1)
    with pytest.raises(ValueError):
        D.star(X2(1), X2(1))


def test_boundary_slots_only_tangential():
    # two-brane graph operators never differentiate a boundary function in a conormal direction
    c0, c1 = Brane(4, (1, 2, 3)), Brane(4, (1, 3, 4))
    pi = fx.symplectic4()
    D = DeformedProduct(pi, (Brane.full(4), Brane(4, (1, 2, 3))), 1)
    from branequant.graphs import admissible
    for scheme, (t0, t1) in [(Scheme.QUADRANT_W0, (c0.intersect(c1), c0)), (Scheme.QUADRANT_W1, (c1, c0.intersect(c1)))]:
        for g in admissible(1, 0, 2, (c0, c1), scheme):
            B = bidiff_from_graph(g, pi, (c0, c1))
            assert B.derivative_directions(0) <= set(t0.tangent)
            assert B.derivative_directions(1) <= set(t1.tangent)
    assert D.base == Brane(4, (1, 2, 3))

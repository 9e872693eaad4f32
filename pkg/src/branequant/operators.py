"""Graph operators B_Gamma and the products assembled from them.

The order-m term of every expansion is

    (1 / (2^m m!)) * sum over graphs with m two-edge vertices of w_Gamma B_Gamma,

i.e. each Poisson vertex carries pi/2.  With this normalization the
commutator's eps-coefficient is {f, g} = pi^{ij} d_i f d_j g and Moyal reads
f * g = sum (eps/2)^m / m! pi^{i1 j1}...pi^{im jm} d^m f d^m g.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graphs import DEFAULT_CAP, AdmGraph, KindSet, Scheme, admissible, index_range, normalize_branes
from .poisson import (
    Brane,
    NotCoisotropicError,
    PoissonStructure,
    VectorFieldPoly,
    check_coisotropic,
    hamiltonian_field,
    is_poisson,
)
from .polyalg import EpsSeries, MultiDiffOp, Poly, apply_with_err, monomial_basis
from .weights import MissingWeightsError, WeightProvider, weight_value

MAX_SAFE_ORDER = 2


# ---------------------------------------------------------------------------
# B_Gamma


def bidiff_from_graph(g: AdmGraph, pi: PoissonStructure, branes, fields: Sequence[VectorFieldPoly] = (),
                      evaluate_on: Brane | None = None) -> MultiDiffOp:
    """Operator over the boundary slots obtained by summing over index assignments.

    Two-edge vertices carry pi^{ij}, one-edge vertices carry the components
    of ``fields`` (in vertex order); an edge with index i differentiates its
    target by d_i.  Coefficients are evaluated on ``evaluate_on`` (default: the
    brane, or the intersection of the two branes).
    """
    branes = normalize_branes(branes)
    if len(branes) != (1 if g.kind_set is KindSet.SINGLE else 2):
        raise ValueError("brane count does not match the graph kind set")
    if len(fields) != g.n_xi:
        raise ValueError(f"graph has {g.n_xi} vector-field vertices, got {len(fields)} fields")
    dim = pi.dim
    if evaluate_on is None:
        evaluate_on = branes[0] if len(branes) == 1 else branes[0].intersect(branes[1])
    conormal = evaluate_on.conormal
    edges = g.edge_list()
    ranges = [index_range(kind, branes) for _, _, _, kind in edges]
    if any(not r for r in ranges):
        return MultiDiffOp.zero(g.n_boundary, dim)
    incoming = {v: [n for n, e in enumerate(edges) if e[2] == v] for v in g.vertices}
    out_of = {v: [n for n, e in enumerate(edges) if e[0] == v] for v in range(1, g.k + 1)}
    memo: dict = {}

    def factor(v, idx):
        outs = tuple(idx[n] for n in out_of[v])
        alpha = [0] * dim
        for n in incoming[v]:
            alpha[idx[n] - 1] += 1
        key = (v, outs, tuple(alpha))
        if key not in memo:
            base = fields[v - 1][outs[0]] if v <= g.n_xi else pi(*outs)
            memo[key] = base.diff_multi(alpha).restrict(conormal) if not base.is_zero() else base
        return memo[key]

    terms: dict = {}
    for idx in itertools.product(*ranges):
        coeff = Poly.const(1, dim)
        for v in range(1, g.k + 1):
            coeff = coeff * factor(v, idx)
            if coeff.is_zero():
                break
        if coeff.is_zero():
            continue
        slots = []
        for b in g.boundary:
            alpha = [0] * dim
            for n in incoming[b]:
                alpha[idx[n] - 1] += 1
            slots.append(tuple(alpha))
        key = tuple(slots)
        terms[key] = terms[key] + coeff if key in terms else coeff
    return MultiDiffOp(g.n_boundary, dim, terms)


# ---------------------------------------------------------------------------
# series of operators


@dataclass(frozen=True)
class OpSeries:
    """Operators D_0 + eps D_1 + ... acting on series arguments."""

    ops: tuple[MultiDiffOp, ...]

    @property
    def order(self) -> int:
        return len(self.ops) - 1

    @property
    def arity(self) -> int:
        return self.ops[0].arity

    def apply(self, *args: EpsSeries, order: int | None = None) -> EpsSeries:
        """Apply to series arguments; the result is truncated at ``order``."""
        K = self.order if order is None else order
        if K > self.order or any(a.order < K for a in args):
            raise ValueError(f"cannot evaluate to order {K}")
        dim = self.ops[0].dim
        coeffs = [Poly.zero(dim) for _ in range(K + 1)]
        errs = [Poly.zero(dim) for _ in range(K + 1)]
        for m in range(K + 1):
            D = self.ops[m]
            if D.is_zero():
                continue
            for js in itertools.product(range(K + 1 - m), repeat=len(args)):
                tot = m + sum(js)
                if tot > K:
                    continue
                vals = [a.coeffs[j] for a, j in zip(args, js)]
                verr = [a.errs[j] for a, j in zip(args, js)]
                v, e = apply_with_err(D, vals, verr)
                coeffs[tot] = coeffs[tot] + v
                errs[tot] = errs[tot] + e
        return EpsSeries(tuple(coeffs), tuple(errs))


def _derivatives_fit(g: AdmGraph, field_deg: Sequence[int], pi_deg: int) -> bool:
    """False when some aerial vertex receives more derivatives than its degree allows."""
    counts = [0] * (g.k + 1)
    for _, _, t, _ in g.edge_list():
        if isinstance(t, int):
            counts[t] += 1
    for v in range(1, g.k + 1):
        deg = field_deg[v - 1] if v <= g.n_xi else pi_deg
        if deg < 0 or counts[v] > deg:
            return False
    return True


def _as_series(p, K: int) -> EpsSeries:
    return p if isinstance(p, EpsSeries) else EpsSeries.constant(p, K)


class DeformedProduct:
    """Star product on one brane, or the module products of a pair of branes.

    ``weights`` supplies graph weights (exact table, cache, or integration).
    """

    def __init__(self, pi: PoissonStructure, branes, order: int = 2, weights: WeightProvider | None = None,
                 cap: int = DEFAULT_CAP, unsafe_order: bool = False, check: bool = True):
        self.pi = pi
        self.branes = normalize_branes(branes)
        if len(self.branes) not in (1, 2):
            raise ValueError("one brane (star product) or two branes (module products) required")
        if order > MAX_SAFE_ORDER and not unsafe_order:
            raise ValueError(f"order {order} exceeds {MAX_SAFE_ORDER}; pass unsafe_order to force")
        self.order = order
        self.cap = cap
        self.weights = weights if weights is not None else WeightProvider()
        if check:
            if not is_poisson(pi):
                raise ValueError("bivector fails the Jacobi identity")
            for c in self.branes:
                if c.dim != pi.dim:
                    raise ValueError("brane dimension differs from the Poisson structure")
                if not check_coisotropic(pi, c):
                    raise NotCoisotropicError(f"brane {c.tangent} is not coisotropic")
        self._graphs: dict = {}
        self._ops: dict = {}

    # -- structure -----------------------------------------------------------

    @property
    def two_brane(self) -> bool:
        return len(self.branes) == 2

    @property
    def dim(self) -> int:
        return self.pi.dim

    @property
    def base(self) -> Brane:
        """Where results live: C, or C0 /\\ C1."""
        return self.branes[0] if not self.two_brane else self.branes[0].intersect(self.branes[1])

    def graphs(self, k: int, n_xi: int, n_boundary: int, scheme: Scheme) -> list[AdmGraph]:
        key = (k, n_xi, n_boundary, scheme)
        if key not in self._graphs:
            self._graphs[key] = admissible(k, n_xi, n_boundary, self.branes, scheme, cap=self.cap)
        return self._graphs[key]

    def graph_sum(self, m: int, n_xi: int, n_boundary: int, scheme: Scheme,
                  fields: Sequence[VectorFieldPoly] = ()) -> MultiDiffOp:
        """(1/(2^m m!)) sum_Gamma w_Gamma B_Gamma over graphs with m Poisson vertices."""
        cache_key = (m, n_xi, n_boundary, scheme, tuple(fields))
        if cache_key in self._ops:
            return self._ops[cache_key]
        scheme = Scheme(scheme)
        ops = []
        pi_deg = max((p.degree() for p in self.pi.entries.values()), default=-1)
        field_deg = [max((c.degree() for c in xi.components), default=-1) for xi in fields]
        for g in self.graphs(m + n_xi, n_xi, n_boundary, scheme):
            if not _derivatives_fit(g, field_deg, pi_deg):
                continue
            B = bidiff_from_graph(g, self.pi, self.branes, fields, evaluate_on=self.base)
            if not B.is_zero():
                ops.append((g, B))
        self.weights.ensure((g, scheme) for g, _ in ops)
        total = MultiDiffOp.zero(n_boundary, self.dim)
        norm = Fraction(1, 2 ** m * math.factorial(m))
        for g, B in ops:
            value, err = weight_value(self.weights.get(g, scheme))
            if value == 0 and err == 0:
                continue
            if isinstance(value, Fraction):
                total = total + B.scale(value * norm)
            else:
                total = total + B.scale(float(value) * float(norm), err * float(norm))
        self._ops[cache_key] = total
        return total

    def _op_series(self, K: int, n_xi: int, n_boundary: int, scheme: Scheme, fields=()) -> OpSeries:
        """graph_sum for m = 0..K; missing weights of all orders are reported together."""
        ops, missing = [], []
        for m in range(K + 1):
            try:
                ops.append(self.graph_sum(m, n_xi, n_boundary, scheme, fields))
            except MissingWeightsError as exc:
                missing += exc.keys
        if missing:
            raise MissingWeightsError(missing)
        return OpSeries(tuple(ops))

    def _check_order(self, K):
        K = self.order if K is None else K
        if K > self.order:
            raise ValueError(f"product built to order {self.order}, asked for {K}")
        return K

    # -- single brane --------------------------------------------------------

    def _require_single(self):
        if self.two_brane:
            raise ValueError("operation needs a single brane")

    def star_ops(self, K: int | None = None) -> OpSeries:
        self._require_single()
        K = self._check_order(K)
        return self._op_series(K, 0, 2, Scheme.HALF_PLANE)

    def star(self, f, g, K: int | None = None) -> EpsSeries:
        """f * g through eps^K, evaluated on C.  Inputs may be Poly or EpsSeries."""
        K = self._check_order(K)
        self._tangential(f, self.branes[0])
        self._tangential(g, self.branes[0])
        return self.star_ops(K).apply(_as_series(f, K), _as_series(g, K), order=K)

    def op_A(self, xi: VectorFieldPoly, K: int | None = None) -> OpSeries:
        """A(xi) as a series of unary operators; the eps^0 term is xi restricted to the base."""
        K = self._check_order(K)
        scheme = Scheme.QUADRANT_CORNER if self.two_brane else Scheme.HALF_PLANE
        return self._op_series(K, 1, 1, scheme, (xi,))

    def fn_F(self, xi: VectorFieldPoly, eta: VectorFieldPoly, K: int | None = None) -> EpsSeries:
        self._require_single()
        K = self._check_order(K)
        coeffs, errs = [], []
        for D in self._op_series(K, 2, 0, Scheme.HALF_PLANE, (xi, eta)).ops:
            v, e = apply_with_err(D, [])
            coeffs.append(v)
            errs.append(e)
        return EpsSeries(tuple(coeffs), tuple(errs))

    def membership_indices(self) -> tuple[int, ...]:
        if not self.two_brane:
            return self.branes[0].conormal
        c0, c1 = self.branes
        return tuple(mu for mu in range(1, self.dim + 1) if mu in c0.conormal and mu in c1.conormal)

    def characteristic_ops(self, K: int | None = None) -> dict[int, OpSeries]:
        return {mu: self.op_A(hamiltonian_field(self.pi, mu), K) for mu in self.membership_indices()}

    # -- two branes ------------------------------------------------------------

    def _require_pair(self):
        if not self.two_brane:
            raise ValueError("operation needs a pair of branes")

    def mod_product_right(self, psi, f, K: int | None = None) -> EpsSeries:
        """psi *0 f: psi on C0 /\\ C1 at the corner, f on C0 on the real axis."""
        self._require_pair()
        K = self._check_order(K)
        self._tangential(psi, self.base)
        self._tangential(f, self.branes[0])
        ops = self._op_series(K, 0, 2, Scheme.QUADRANT_W0)
        return ops.apply(_as_series(psi, K), _as_series(f, K), order=K).restrict(self.base.conormal)

    def mod_product_left(self, f, psi, K: int | None = None) -> EpsSeries:
        """f *1 psi: f on C1 on the imaginary axis, psi at the corner."""
        self._require_pair()
        K = self._check_order(K)
        self._tangential(psi, self.base)
        self._tangential(f, self.branes[1])
        ops = self._op_series(K, 0, 2, Scheme.QUADRANT_W1)
        return ops.apply(_as_series(f, K), _as_series(psi, K), order=K).restrict(self.base.conormal)

    # -- helpers -------------------------------------------------------------

    @staticmethod
    def _tangential(p, brane: Brane):
        coeffs = p.coeffs if isinstance(p, EpsSeries) else (p,)
        for c in coeffs:
            if not brane.is_tangential(c):
                raise ValueError(f"argument depends on a conormal coordinate of the brane {brane.tangent}")


# ---------------------------------------------------------------------------
# module-level API


def star(f, g, D: DeformedProduct, K: int | None = None) -> EpsSeries:
    return D.star(f, g, K)


def op_A(xi: VectorFieldPoly, D: DeformedProduct, K: int | None = None) -> OpSeries:
    return D.op_A(xi, K)


def fn_F(xi: VectorFieldPoly, eta: VectorFieldPoly, D: DeformedProduct, K: int | None = None) -> EpsSeries:
    return D.fn_F(xi, eta, K)


def mod_product_right(psi, f, D: DeformedProduct, K: int | None = None) -> EpsSeries:
    return D.mod_product_right(psi, f, K)


def mod_product_left(f, psi, D: DeformedProduct, K: int | None = None) -> EpsSeries:
    return D.mod_product_left(f, psi, K)


def vanishes(value: Poly, err: Poly, floor: float = 1e-6) -> bool:
    """Every coefficient below max(3 * its error, floor)."""
    for exps, c in value.items():
        if abs(float(c)) > max(3.0 * float(err.coeff(exps)), floor):
            return False
    return True


def series_vanishes(s: EpsSeries, floor: float = 1e-6) -> bool:
    return all(vanishes(c, e, floor) for c, e in zip(s.coeffs, s.errs))


@dataclass(frozen=True)
class AssumptionCheck:
    mu: int
    nu: int
    series: EpsSeries
    passed: tuple[bool, ...]
    structural: bool

    @property
    def ok(self) -> bool:
        return all(self.passed)


def check_assumption(D: DeformedProduct, K: int | None = None) -> list[AssumptionCheck]:
    """F(E^mu, E^nu) through eps^K for every conormal pair mu <= nu."""
    K = D._check_order(K)
    out = []
    conormal = D.membership_indices()
    for mu, nu in itertools.combinations_with_replacement(conormal, 2):
        s = D.fn_F(hamiltonian_field(D.pi, mu), hamiltonian_field(D.pi, nu), K)
        passed = tuple(vanishes(c, e) for c, e in zip(s.coeffs, s.errs))
        out.append(AssumptionCheck(mu, nu, s, passed, s.is_exact()))
    return out


def membership(f, D: DeformedProduct, K: int | None = None) -> bool:
    """A(E^mu) f = 0 through eps^K for all mu (within propagated error)."""
    K = D._check_order(K)
    f = _as_series(f, K)
    for A in D.characteristic_ops(K).values():
        if not series_vanishes(A.apply(f, order=K)):
            return False
    return True


@dataclass(frozen=True)
class LiftResult:
    series: EpsSeries | None
    residual: float
    obstructed_at: int | None

    @property
    def exists(self) -> bool:
        return self.series is not None


def lift(f0: Poly, D: DeformedProduct, degree_cap: int, K: int | None = None) -> LiftResult:
    """Corrections f_1, f_2, ... with A(E^mu)(f_0 + eps f_1 + ...) = 0.

    Order k solves A_0(E^mu) f_k = -sum_{i>=1} A_i(E^mu) f_{k-i} by least
    squares over monomials in the tangential variables of degree <= degree_cap.
    """
    K = D._check_order(K)
    base = D.base
    D._tangential(f0, base)
    dim = D.dim
    ops = D.characteristic_ops(K)
    basis = [p for p in monomial_basis(dim, degree_cap, base.tangent) if p.degree() > 0]
    coeffs = [f0]
    errs = [Poly.zero(dim)]
    worst = 0.0
    for k in range(K + 1):
        series = EpsSeries(tuple(coeffs) + tuple(Poly.zero(dim) for _ in range(K - len(coeffs) + 1)),
                           tuple(errs) + tuple(Poly.zero(dim) for _ in range(K - len(errs) + 1)))
        # right-hand side from the lower orders (f_k = 0 for now)
        rhs, rhs_err = {}, {}
        for mu, A in ops.items():
            r = A.apply(series, order=k)
            rhs[mu], rhs_err[mu] = r.coeffs[k], r.errs[k]
        if k > 0 and any(not rhs[mu].is_zero() for mu in ops):
            images = {mu: [apply_with_err(A.ops[0], [b])[0] for b in basis] for mu, A in ops.items()}
            rows = sorted({e for mu in ops for p in images[mu] + [rhs[mu]] for e in p.terms} )
            rowkeys = [(mu, e) for mu in ops for e in rows]
            M = np.array([[float(images[mu][j].coeff(e)) for j in range(len(basis))] for mu, e in rowkeys]) \
                if basis else np.zeros((len(rowkeys), 0))
            b = np.array([-float(rhs[mu].coeff(e)) for mu, e in rowkeys])
            be = np.array([float(rhs_err[mu].coeff(e)) for mu, e in rowkeys])
            if M.size:
                x, *_ = np.linalg.lstsq(M, b, rcond=None)
                xe = np.abs(np.linalg.pinv(M)) @ be
            else:
                x, xe = np.zeros(0), np.zeros(0)
            fk = Poly.zero(dim)
            fe = Poly.zero(dim)
            for j, p in enumerate(basis):
                if abs(x[j]) > 1e-12:
                    fk = fk + p * float(x[j])
                if xe[j] > 0:
                    fe = fe + p * float(xe[j])
            coeffs.append(fk)
            errs.append(fe)
        elif k > 0:
            coeffs.append(Poly.zero(dim))
            errs.append(Poly.zero(dim))
        series = EpsSeries(tuple(coeffs) + tuple(Poly.zero(dim) for _ in range(K - len(coeffs) + 1)),
                           tuple(errs) + tuple(Poly.zero(dim) for _ in range(K - len(errs) + 1)))
        for mu, A in ops.items():
            r = A.apply(series, order=k)
            worst = max(worst, r.coeffs[k].max_abs())
            if not vanishes(r.coeffs[k], r.errs[k]):
                return LiftResult(None, r.coeffs[k].max_abs(), k)
    return LiftResult(EpsSeries(tuple(coeffs[: K + 1]), tuple(errs[: K + 1])), worst, None)

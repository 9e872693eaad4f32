"""Exact sparse polynomials, truncated eps-series and multidifferential operators.

Variables are numbered 1..dim everywhere in the public API.  Coefficients are
``Fraction`` for structural data; once numerically integrated weights enter,
coefficients become ``float`` and the two mix freely (``Fraction * float`` is a
float in Python).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Iterator, Mapping, Sequence

Exps = tuple[int, ...]


def _coerce(c):
    if isinstance(c, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(c, Fraction):
        return c
    if isinstance(c, Rational):
        return Fraction(c)
    if isinstance(c, Real):
        return float(c)
    raise TypeError(f"unsupported coefficient {c!r}")


class Poly:
    """Sparse polynomial in x1..x_dim, immutable after construction."""

    __slots__ = ("dim", "_terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[Exps, object] | Iterable[tuple[Exps, object]] = ()):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exps, object] = {}
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps} for dim {dim}")
            c = _coerce(c)
            acc[exps] = acc[exps] + c if exps in acc else c
        self._terms = {e: c for e, c in acc.items() if c != 0}
        self._hash = None

    # constructors
    @classmethod
    def zero(cls, dim: int) -> "Poly":
        return cls(dim)

    @classmethod
    def const(cls, c, dim: int) -> "Poly":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def var(cls, i: int, dim: int) -> "Poly":
        if not 1 <= i <= dim:
            raise IndexError(f"variable x{i} out of range 1..{dim}")
        e = [0] * dim
        e[i - 1] = 1
        return cls(dim, {tuple(e): 1})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1) -> "Poly":
        return cls(len(exps), {tuple(exps): coeff})

    # container protocol
    @property
    def terms(self) -> dict[Exps, object]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Exps, object]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def coeff(self, exps: Sequence[int]):
        return self._terms.get(tuple(exps), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self._terms.values())

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def variables(self) -> set[int]:
        return {i + 1 for e in self._terms for i, k in enumerate(e) if k}

    def depends_on(self, i: int) -> bool:
        return any(e[i - 1] for e in self._terms)

    def max_abs(self) -> float:
        return max((abs(float(c)) for c in self._terms.values()), default=0.0)

    # arithmetic
    def _check(self, other: "Poly") -> None:
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch {self.dim} != {other.dim}")

    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.const(other, self.dim)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out[e] + c if e in out else c
        return Poly(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = _coerce(other)
            return Poly(self.dim, {e: v * c for e, v in self._terms.items()})
        self._check(other)
        out: dict[Exps, object] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = c1 * c2
                out[e] = out[e] + v if e in out else v
        return Poly(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.const(1, self.dim)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.dim == other.dim and self._terms == other._terms
        if isinstance(other, (int, float, Fraction)):
            return self == Poly.const(other, self.dim)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self._terms.items())))
        return self._hash

    # calculus
    def diff(self, i: int, times: int = 1) -> "Poly":
        if not 1 <= i <= self.dim:
            raise IndexError(f"variable x{i} out of range 1..{self.dim}")
        k = i - 1
        out = {}
        for e, c in self._terms.items():
            if e[k] < times:
                continue
            f = math.perm(e[k], times)
            ne = list(e)
            ne[k] -= times
            out[tuple(ne)] = c * f
        return Poly(self.dim, out)

    def diff_multi(self, alpha: Sequence[int]) -> "Poly":
        """Apply the multi-index derivative d^alpha (alpha has length dim)."""
        if len(alpha) != self.dim:
            raise ValueError("multi-index length must equal dim")
        out = {}
        for e, c in self._terms.items():
            if any(a > b for a, b in zip(alpha, e)):
                continue
            f = 1
            for a, b in zip(alpha, e):
                if a:
                    f *= math.perm(b, a)
            out[tuple(b - a for a, b in zip(alpha, e))] = c * f
        return Poly(self.dim, out)

    def restrict(self, zero_vars: Iterable[int]) -> "Poly":
        """Substitute x_i = 0 for every i in ``zero_vars``."""
        zs = [i - 1 for i in zero_vars]
        if not zs:
            return self
        return Poly(self.dim, {e: c for e, c in self._terms.items() if all(e[k] == 0 for k in zs)})

    def evaluate(self, point: Sequence[float]):
        total = 0
        for e, c in self._terms.items():
            t = c
            for x, k in zip(point, e):
                if k:
                    t = t * x**k
            total = total + t
        return total

    def abs(self) -> "Poly":
        return Poly(self.dim, {e: abs(c) for e, c in self._terms.items()})

    def to_float(self) -> "Poly":
        return Poly(self.dim, {e: float(c) for e, c in self._terms.items()})

    def chop(self, tol: float) -> "Poly":
        return Poly(self.dim, {e: c for e, c in self._terms.items() if abs(c) > tol})

    # I/O
    def to_json(self) -> dict:
        terms = []
        for e in sorted(self._terms):
            c = self._terms[e]
            s = str(c) if isinstance(c, Fraction) else repr(c)
            terms.append({"coeff": s, "exps": list(e)})
        return {"dim": self.dim, "terms": terms}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Poly":
        try:
            dim = int(obj["dim"])
            terms = [(tuple(t["exps"]), Fraction(str(t["coeff"]))) for t in obj["terms"]]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed polynomial JSON: {exc}") from exc
        return cls(dim, terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for e in sorted(self._terms, key=lambda e: (-sum(e), [-k for k in e])):
            c = self._terms[e]
            mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def poly_diff(p: Poly, var: int) -> Poly:
    return p.diff(var)


def monomial_basis(dim: int, max_degree: int, variables: Sequence[int] | None = None) -> list[Poly]:
    """All monic monomials of total degree <= max_degree in the given variables."""
    vs = list(variables) if variables is not None else list(range(1, dim + 1))
    out = []
    for d in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(vs, d):
            e = [0] * dim
            for v in combo:
                e[v - 1] += 1
            out.append(Poly.monomial(e))
    return out


# ---------------------------------------------------------------------------
# eps-series


def _zeros(dim, n):
    return tuple(Poly.zero(dim) for _ in range(n))


@dataclass(frozen=True)
class EpsSeries:
    """Truncated series c_0 + c_1 eps + ... + c_K eps^K with Poly coefficients.

    ``errs`` holds a nonnegative one-sigma error bound per monomial of each
    coefficient (all zero when every ingredient is exact).
    """

    coeffs: tuple[Poly, ...]
    errs: tuple[Poly, ...] = field(default=())

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a series needs at least the eps^0 coefficient")
        dim = self.coeffs[0].dim
        if any(c.dim != dim for c in self.coeffs):
            raise ValueError("series coefficients of mixed dimension")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if not self.errs:
            object.__setattr__(self, "errs", _zeros(dim, len(self.coeffs)))
        elif len(self.errs) != len(self.coeffs):
            raise ValueError("errs and coeffs differ in length")
        else:
            object.__setattr__(self, "errs", tuple(self.errs))

    @classmethod
    def constant(cls, p: Poly, order: int) -> "EpsSeries":
        return cls((p,) + _zeros(p.dim, order))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def dim(self) -> int:
        return self.coeffs[0].dim

    def truncate(self, K: int) -> "EpsSeries":
        if K > self.order:
            raise ValueError(f"series known only to order {self.order}, asked for {K}")
        return EpsSeries(self.coeffs[: K + 1], self.errs[: K + 1])

    def __add__(self, other: "EpsSeries") -> "EpsSeries":
        K = min(self.order, other.order)
        return EpsSeries(
            tuple(a + b for a, b in zip(self.coeffs[: K + 1], other.coeffs)),
            tuple(a + b for a, b in zip(self.errs[: K + 1], other.errs)),
        )

    def __neg__(self) -> "EpsSeries":
        return EpsSeries(tuple(-c for c in self.coeffs), self.errs)

    def __sub__(self, other: "EpsSeries") -> "EpsSeries":
        return self + (-other)

    def scale(self, c) -> "EpsSeries":
        return EpsSeries(tuple(p * c for p in self.coeffs), tuple(e * abs(c) for e in self.errs))

    def restrict(self, zero_vars) -> "EpsSeries":
        zv = list(zero_vars)
        return EpsSeries(tuple(c.restrict(zv) for c in self.coeffs), tuple(e.restrict(zv) for e in self.errs))

    def norms(self) -> list[float]:
        return [c.max_abs() for c in self.coeffs]

    def err_norms(self) -> list[float]:
        return [e.max_abs() for e in self.errs]

    def is_exact(self) -> bool:
        return all(e.is_zero() for e in self.errs) and all(c.is_exact() for c in self.coeffs)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "coeffs": [c.to_json() for c in self.coeffs],
            "stderr": [e.to_json() for e in self.errs],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "EpsSeries":
        coeffs = tuple(Poly.from_json(c) for c in obj["coeffs"])
        errs = tuple(Poly.from_json(c) for c in obj.get("stderr", ())) or ()
        if len(coeffs) != int(obj["order"]) + 1:
            raise ValueError("series order does not match coefficient count")
        return cls(coeffs, errs)

    def __repr__(self) -> str:
        parts = []
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            parts.append(f"({c})" + ("" if k == 0 else f"*eps^{k}"))
        return " + ".join(parts) or "0"


def series_mul(a: EpsSeries, b: EpsSeries, K: int) -> EpsSeries:
    """Truncated Cauchy product; errors propagate to first order."""
    if a.order < K or b.order < K:
        raise ValueError(f"series_mul to order {K} needs inputs of order >= {K}")
    dim = a.dim
    out, errs = [], []
    for k in range(K + 1):
        c, e = Poly.zero(dim), Poly.zero(dim)
        for i in range(k + 1):
            j = k - i
            c = c + a.coeffs[i] * b.coeffs[j]
            if not (a.errs[i].is_zero() and b.errs[j].is_zero()):
                e = e + a.coeffs[i].abs() * b.errs[j] + a.errs[i] * b.coeffs[j].abs()
        out.append(c)
        errs.append(e)
    return EpsSeries(tuple(out), tuple(errs))


# ---------------------------------------------------------------------------
# multidifferential operators


Multi = tuple[Exps, ...]


@dataclass(frozen=True)
class MultiDiffOp:
    """sum_t coeff_t(x) * d^{alpha_t,1} a_1 * ... * d^{alpha_t,r} a_r.

    ``terms`` maps the tuple of per-slot multi-indices to the coefficient
    polynomial; ``errs`` maps the same keys to nonnegative error bounds.
    Arity 0 is allowed and represents a plain function.
    """

    arity: int
    dim: int
    terms: Mapping[Multi, Poly] = field(default_factory=dict)
    errs: Mapping[Multi, Poly] = field(default_factory=dict)

    def __post_init__(self):
        for key, c in self.terms.items():
            if len(key) != self.arity or any(len(a) != self.dim for a in key):
                raise ValueError(f"multi-index {key} inconsistent with arity {self.arity}, dim {self.dim}")
            if c.dim != self.dim:
                raise ValueError("coefficient dimension mismatch")
        object.__setattr__(self, "terms", {k: v for k, v in self.terms.items() if not v.is_zero()})
        object.__setattr__(self, "errs", {k: v for k, v in self.errs.items() if not v.is_zero()})

    @classmethod
    def zero(cls, arity: int, dim: int) -> "MultiDiffOp":
        return cls(arity, dim)

    def is_zero(self) -> bool:
        return not self.terms and not self.errs

    def __add__(self, other: "MultiDiffOp") -> "MultiDiffOp":
        if (self.arity, self.dim) != (other.arity, other.dim):
            raise ValueError("cannot add operators of different shape")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms[k] + v if k in terms else v
        errs = dict(self.errs)
        for k, v in other.errs.items():
            errs[k] = errs[k] + v if k in errs else v
        return MultiDiffOp(self.arity, self.dim, terms, errs)

    def scale(self, c, err=0.0) -> "MultiDiffOp":
        """Multiply by the scalar c whose own one-sigma uncertainty is ``err``."""
        terms = {k: v * c for k, v in self.terms.items()}
        errs = {k: v * abs(c) for k, v in self.errs.items()}
        if err:
            for k, v in self.terms.items():
                add = v.abs() * err
                errs[k] = errs[k] + add if k in errs else add
        return MultiDiffOp(self.arity, self.dim, terms, errs)

    def restrict(self, zero_vars) -> "MultiDiffOp":
        zv = list(zero_vars)
        return MultiDiffOp(
            self.arity,
            self.dim,
            {k: v.restrict(zv) for k, v in self.terms.items()},
            {k: v.restrict(zv) for k, v in self.errs.items()},
        )

    def derivative_directions(self, slot: int) -> set[int]:
        """Variables (1-based) along which argument ``slot`` is ever differentiated."""
        return {i + 1 for key in self.terms for i, k in enumerate(key[slot]) if k}

    def abs(self) -> "MultiDiffOp":
        return MultiDiffOp(self.arity, self.dim, {k: v.abs() for k, v in self.terms.items()})

    def err_op(self) -> "MultiDiffOp":
        return MultiDiffOp(self.arity, self.dim, dict(self.errs))

    def __repr__(self) -> str:
        def d(alpha):
            return "".join(f"d{i + 1}" * k for i, k in enumerate(alpha)) or "1"

        parts = [f"({c})*" + "(x)".join(d(a) for a in key) for key, c in self.terms.items()]
        return f"MultiDiffOp[{self.arity}](" + " + ".join(parts) + ")"


def apply_multidiff(D: MultiDiffOp, args: Sequence[Poly]) -> Poly:
    if len(args) != D.arity:
        raise ValueError(f"operator of arity {D.arity} applied to {len(args)} arguments")
    for a in args:
        if a.dim != D.dim:
            raise ValueError("argument dimension mismatch")
    cache: dict[tuple[int, Exps], Poly] = {}

    def der(slot, alpha):
        key = (slot, alpha)
        if key not in cache:
            cache[key] = args[slot].diff_multi(alpha)
        return cache[key]

    out = Poly.zero(D.dim)
    for key, c in D.terms.items():
        term = c
        for s, alpha in enumerate(key):
            term = term * der(s, alpha)
            if term.is_zero():
                break
        out = out + term
    return out


def apply_with_err(D: MultiDiffOp, args: Sequence[Poly], arg_errs: Sequence[Poly] | None = None) -> tuple[Poly, Poly]:
    """Apply D and return (value, first-order error bound)."""
    value = apply_multidiff(D, args)
    err = Poly.zero(D.dim)
    if D.errs:
        err = err + apply_multidiff(D.err_op(), [a.abs() for a in args])
    if arg_errs is not None and any(not e.is_zero() for e in arg_errs):
        absD = D.abs()
        absargs = [a.abs() for a in args]
        for s, e in enumerate(arg_errs):
            if e.is_zero():
                continue
            err = err + apply_multidiff(absD, absargs[:s] + [e] + absargs[s + 1:])
    return value, err

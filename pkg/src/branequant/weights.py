"""Graph weights: wedge products of angle 1-forms integrated over gauge-fixed
configuration spaces by Monte Carlo.

Every weight is ``(2 pi)^{-E} * integral of det M`` where ``M`` is the E x E
matrix of partial derivatives of the edge angle functions with respect to the
gauge-fixed coordinates.  Gauges per scheme:

==================  ===================================================
HalfPlane, 2 bdry   B1 = 0, B2 = L; aerial points free in the upper half-plane
HalfPlane, 1 bdry   B1 = 0; aerial vertex 1 on the half circle |z| = L
HalfPlane, 0 bdry   aerial vertex 1 pinned at i*L
QuadrantW0          B1 at the corner, B2 = L on the real axis
QuadrantW1          B1 = i*L on the imaginary axis, B2 at the corner
QuadrantCorner      B1 at the corner; aerial vertex 1 on the arc |z| = L
==================  ===================================================

The quotient orientation puts the symmetry generators first
(translation, dilation), which gives the k=1 wedge weight +1/2 and the
one-edge graph of A(xi) weight +1 in both the half-plane and the quadrant.

Sampling draws the free points one after another from a mixture of
log-radial channels centered at every fixed point and every previously drawn
point, so that all collision singularities of the integrand are flattened.
Batches use seeds derived from (seed, batch index) and are combined in batch
order, which makes serial and parallel runs bit-identical.  All graphs drawn
with the same seed share their sample points.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
import os
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graphs import AdmGraph, EdgeKind, KindSet, Scheme, canonical_key, decode_key

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DEFAULT_SAMPLES = 1_000_000
DEFAULT_BATCH = 1 << 16
LOGISTIC_SCALE = 0.7

_IMAGE = {
    "id": (1.0, 1.0),
    "conj": (1.0, -1.0),
    "negconj": (-1.0, 1.0),
    "neg": (-1.0, -1.0),
}


# ---------------------------------------------------------------------------
# angle functions


def angle_halfplane(z: complex, w: complex) -> float:
    """phi(z, w) = arg(z - w) + arg(z - conj(w)), reduced to [0, 2 pi)."""
    z, w = complex(z), complex(w)
    if z == w or z == w.conjugate():
        raise ValueError("coincident points")
    return (np.angle(z - w) + np.angle(z - w.conjugate())) % TWO_PI


def angle_quadrant(sigma: int, tau: int, z: complex, w: complex) -> float:
    """phi_{sigma tau}(z, w) built from the Euclidean angle by reflection, mod 2 pi."""
    z, w = complex(z), complex(w)
    images = (w, w.conjugate(), -w.conjugate(), -w)
    if any(z == c for c in images):
        raise ValueError("coincident points")
    coefs = (1, sigma, tau, sigma * tau)
    return sum(c * np.angle(z - img) for c, img in zip(coefs, images)) % TWO_PI


def edge_terms(kind: EdgeKind) -> tuple[bool, tuple[tuple[float, str], ...]]:
    """(reversed, [(coef, image)]) so that the edge form is
    d sum coef * arg(P - image(Q)) with (P, Q) = (source, target), or swapped
    when ``reversed``.
    """
    if kind is EdgeKind.STRAIGHT:
        return False, ((1.0, "id"), (1.0, "conj"))
    if kind is EdgeKind.WAVY:
        return True, ((1.0, "id"), (1.0, "conj"))
    s, t = kind.sigma_tau
    return False, ((1.0, "id"), (float(s), "conj"), (float(t), "negconj"), (float(s * t), "neg"))


def edge_angle(kind: EdgeKind, za: complex, zb: complex) -> float:
    """Angle function attached to an edge from a to b (not reduced mod 2 pi)."""
    rev, terms = edge_terms(kind)
    p, q = (zb, za) if rev else (za, zb)
    out = 0.0
    for c, img in terms:
        sx, sy = _IMAGE[img]
        out += c * np.angle(complex(p) - complex(sx * q.real, sy * q.imag))
    return out


def _arg_grad(dx, dy):
    r2 = dx * dx + dy * dy
    return -dy / r2, dx / r2


def _edge_gradients(kind, P, Q):
    """Gradients of an edge angle w.r.t. (x, y) of source a and target b.

    P, Q are complex arrays of the source/target positions.
    """
    rev, terms = edge_terms(kind)
    p, q = (Q, P) if rev else (P, Q)
    gpx = np.zeros(p.shape)
    gpy = np.zeros(p.shape)
    gqx = np.zeros(p.shape)
    gqy = np.zeros(p.shape)
    for c, img in terms:
        sx, sy = _IMAGE[img]
        dx = p.real - sx * q.real
        dy = p.imag - sy * q.imag
        ax, ay = _arg_grad(dx, dy)
        gpx += c * ax
        gpy += c * ay
        gqx -= c * ax * sx
        gqy -= c * ay * sy
    if rev:
        return (gqx, gqy), (gpx, gpy)
    return (gpx, gpy), (gqx, gqy)


# ---------------------------------------------------------------------------
# gauge-fixed layouts


class DimensionMismatch(ValueError):
    """The gauge-fixed moduli count differs from the number of edges."""


@dataclass(frozen=True)
class Layout:
    quadrant: bool
    fixed: dict  # vertex -> complex position
    free: tuple[int, ...]  # aerial vertices sampled in the domain
    designated: int | None  # aerial vertex on the arc |z| = scale
    arc: tuple[float, float]  # angular range of the arc
    scale: float
    sites: dict  # boundary vertex -> 'real' | 'imag' | 'corner'
    free_boundary: tuple = ()  # boundary vertices sliding along their axis

    @property
    def n_coords(self) -> int:
        return 2 * len(self.free) + (1 if self.designated is not None else 0) + len(self.free_boundary)


GAUGES = ("standard", "arc")


def layout_for(g: AdmGraph, scheme: Scheme | str, scale: float = 1.0, gauge: str = "standard") -> Layout:
    """Gauge-fixed slice for g.

    ``gauge="arc"`` is an alternative slice for two boundary points: the
    non-pinned boundary point slides along its axis and aerial vertex 1 is
    constrained to the arc of radius ``scale`` instead.
    """
    if gauge not in GAUGES:
        raise ValueError(f"unknown gauge {gauge!r}")
    scheme = Scheme(scheme)
    if g.kind_set is not scheme.kind_set:
        raise ValueError(f"graph kind set {g.kind_set.value} does not match scheme {scheme.value}")
    sites = dict(zip(g.boundary, scheme.boundary_sites(g.n_boundary)))
    pos = {"real": complex(scale, 0.0), "imag": complex(0.0, scale), "corner": 0j}
    aerial = tuple(range(1, g.k + 1))
    designated = None
    arc = (0.0, 0.0)
    if scheme is Scheme.HALF_PLANE:
        if g.n_boundary == 2:
            fixed = {"B1": 0j, "B2": complex(scale, 0.0)}
            free = aerial
        elif g.n_boundary == 1:
            fixed = {"B1": 0j}
            if not aerial:
                raise DimensionMismatch("no aerial vertex to fix the dilation")
            designated, free, arc = 1, aerial[1:], (0.0, math.pi)
        else:
            if not aerial:
                raise DimensionMismatch("empty configuration")
            fixed = {1: complex(0.0, scale)}
            free = aerial[1:]
    else:
        fixed = {b: pos[s] for b, s in sites.items()}
        if scheme is Scheme.QUADRANT_CORNER:
            if not aerial:
                raise DimensionMismatch("no aerial vertex to fix the dilation")
            designated, free, arc = 1, aerial[1:], (0.0, math.pi / 2)
        else:
            free = aerial
    free_boundary = ()
    if gauge == "arc":
        movable = [b for b in g.boundary if b in fixed and sites[b] != "corner" and fixed[b] != 0]
        if g.n_boundary != 2 or not movable or designated is not None or not aerial:
            raise ValueError(f"arc gauge needs two boundary points and an aerial vertex ({scheme.value})")
        (b,) = movable
        del fixed[b]
        free_boundary = (b,)
        quarter = scheme is not Scheme.HALF_PLANE
        designated, free, arc = 1, aerial[1:], (0.0, math.pi / 2 if quarter else math.pi)
    lay = Layout(scheme is not Scheme.HALF_PLANE, fixed, free, designated, arc, scale, sites, free_boundary)
    if lay.n_coords != g.n_edges:
        raise DimensionMismatch(f"{lay.n_coords} moduli for {g.n_edges} edges")
    return lay


def orientation_sign(g: AdmGraph, lay: Layout) -> int:
    """Sign of det[generators | slice Jacobian] in the ambient coordinates."""
    rng = np.random.default_rng(12345)
    aerial = list(range(1, g.k + 1))
    rows = {}
    r = 0
    for v in aerial:
        rows[v] = (r, r + 1)
        r += 2
    bcoord = {}
    for b in g.boundary:
        site = lay.sites[b]
        if site != "corner":
            bcoord[b] = (r, site)
            r += 1
    n = r
    pos = {}
    for v in aerial:
        if v in lay.fixed:
            pos[v] = lay.fixed[v]
        elif v == lay.designated:
            th = 0.5 * (lay.arc[0] + lay.arc[1])
            pos[v] = lay.scale * complex(math.cos(th), math.sin(th))
        else:
            pos[v] = complex(rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0))
    for b in g.boundary:
        pos[b] = lay.fixed.get(b, 1.3 if lay.sites[b] == "real" else 1.3j)
    cols = []
    if not lay.quadrant:
        t = np.zeros(n)
        for v in aerial:
            t[rows[v][0]] = 1.0
        for b, (i, _) in bcoord.items():
            t[i] = 1.0
        cols.append(t)
    d = np.zeros(n)
    for v in aerial:
        d[rows[v][0]], d[rows[v][1]] = pos[v].real, pos[v].imag
    for b, (i, site) in bcoord.items():
        d[i] = pos[b].real if site == "real" else pos[b].imag
    cols.append(d)
    for v in aerial:
        if v in lay.free:
            for j in (0, 1):
                e = np.zeros(n)
                e[rows[v][j]] = 1.0
                cols.append(e)
        elif v == lay.designated:
            e = np.zeros(n)
            e[rows[v][0]], e[rows[v][1]] = -pos[v].imag, pos[v].real
            cols.append(e)
    for b in lay.free_boundary:
        e = np.zeros(n)
        e[bcoord[b][0]] = 1.0
        cols.append(e)
    m = np.column_stack(cols)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch("slice plus symmetry generators do not span the configuration space")
    det = np.linalg.det(m)
    if abs(det) < 1e-12:
        raise DimensionMismatch("degenerate gauge slice")
    return 1 if det > 0 else -1


# ---------------------------------------------------------------------------
# integrand


def _slice_columns(lay: Layout):
    cols = {}
    c = 0
    for v in sorted(set(lay.free) | ({lay.designated} if lay.designated is not None else set())):
        if v == lay.designated:
            cols[v] = (c,)
            c += 1
        else:
            cols[v] = (c, c + 1)
            c += 2
    for b in lay.free_boundary:
        cols[b] = ("real" if lay.sites[b] == "real" else "imag", c)
        c += 1
    return cols


def _positions(lay: Layout, free_z: dict, theta):
    pos = dict(lay.fixed)
    pos.update(free_z)
    if lay.designated is not None:
        pos[lay.designated] = lay.scale * np.exp(1j * theta)
    return pos


def integrand_matrix(g: AdmGraph, lay: Layout, pos: dict) -> np.ndarray:
    """Batched E x E matrices of edge-angle derivatives (rows in wedge order)."""
    cols = _slice_columns(lay)
    E = g.n_edges
    n = None
    for v in pos.values():
        if np.ndim(v):
            n = np.shape(v)[0]
            break
    n = n or 1
    M = np.zeros((n, E, E))
    for row, (a, _, b, kind) in enumerate(g.edge_list()):
        za = np.broadcast_to(np.asarray(pos[a], dtype=complex), (n,))
        zb = np.broadcast_to(np.asarray(pos[b], dtype=complex), (n,))
        (gax, gay), (gbx, gby) = _edge_gradients(kind, za, zb)
        for v, (gx, gy) in ((a, (gax, gay)), (b, (gbx, gby))):
            if v not in cols:
                continue
            cs = cols[v]
            if isinstance(cs[0], str):
                M[:, row, cs[1]] += gx if cs[0] == "real" else gy
            elif len(cs) == 2:
                M[:, row, cs[0]] += gx
                M[:, row, cs[1]] += gy
            else:
                z = np.broadcast_to(np.asarray(pos[v], dtype=complex), (n,))
                M[:, row, cs[0]] += -gx * z.imag + gy * z.real
    return M


def integrand(g: AdmGraph, config: Sequence[float], scheme: Scheme | str, scale: float = 1.0) -> float:
    """Oriented top-form coefficient at one gauge-fixed configuration.

    ``config`` lists the slice coordinates in vertex order: (x, y) for each
    free aerial point and the arc angle for the designated one.
    """
    lay = layout_for(g, scheme, scale)
    if len(config) != lay.n_coords:
        raise DimensionMismatch(f"expected {lay.n_coords} coordinates, got {len(config)}")
    cols = _slice_columns(lay)
    free_z, theta = {}, None
    for v, cs in cols.items():
        if isinstance(cs[0], str):
            t = config[cs[1]]
            free_z[v] = np.array([complex(t, 0.0) if cs[0] == "real" else complex(0.0, t)])
        elif len(cs) == 1:
            theta = np.array([config[cs[0]]])
        else:
            free_z[v] = np.array([complex(config[cs[0]], config[cs[1]])])
    pos = _positions(lay, free_z, theta)
    M = integrand_matrix(g, lay, pos)
    return float(orientation_sign(g, lay) * np.linalg.det(M)[0])


# ---------------------------------------------------------------------------
# sampling


def _in_domain(z, quadrant: bool):
    ok = z.imag > 0
    if quadrant:
        ok &= z.real > 0
    return ok


def _logistic_pdf(x, loc):
    u = np.abs(x - loc) / LOGISTIC_SCALE
    e = np.exp(-u)
    return e / (LOGISTIC_SCALE * (1.0 + e) ** 2)


@dataclass(frozen=True)
class _Channel:
    center: np.ndarray  # complex, shape (n,) or scalar
    lo: float
    width: float
    loc: np.ndarray  # log-radius location


def _channel_for(center, site: str | None, quadrant: bool, scale: float) -> _Channel:
    # log-radius centered at the local length scale: distance to the domain
    # boundary for interior centers, distance to the corner for axis points
    c = np.asarray(center, dtype=complex)
    if site == "corner":
        lo, width = 0.0, math.pi / 2
    elif site == "real":
        lo, width = 0.0, math.pi
    elif site == "imag":
        lo, width = -math.pi / 2, math.pi
    else:
        lo, width = -math.pi, 2 * math.pi
    if site is None:
        d = np.minimum(c.imag, c.real) if quadrant else c.imag
        d = np.minimum(np.maximum(d, 1e-300), scale)
        loc = np.log(d)
    elif site == "corner":
        loc = np.full(np.shape(c), math.log(scale))
    else:
        r = np.abs(c)
        loc = np.where(r > 0, np.log(np.where(r > 0, r, 1.0)), math.log(scale))
    return _Channel(c, lo, width, loc)


def _channel_density(ch: _Channel, z):
    d = z - ch.center
    r = np.abs(d)
    th = np.angle(d)
    rel = np.mod(th - ch.lo, 2 * math.pi)
    inside = rel < ch.width if ch.width < 2 * math.pi else np.ones(np.shape(z), bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = _logistic_pdf(np.log(r), ch.loc) / (ch.width * r * r)
    return np.where(inside & (r > 0), p, 0.0)


def _sample_channel(ch: _Channel, rng, n):
    u = rng.random(n)
    u = np.clip(u, 1e-16, 1 - 1e-16)
    lr = np.broadcast_to(ch.loc, (n,)) + LOGISTIC_SCALE * np.log(u / (1.0 - u))
    th = ch.lo + ch.width * rng.random(n)
    return np.broadcast_to(ch.center, (n,)) + np.exp(lr) * np.exp(1j * th)


def sample_batch(g: AdmGraph, lay: Layout, rng, n: int):
    """Draw n gauge-fixed configurations; return (positions, density, in_domain)."""
    density = np.ones(n)
    valid = np.ones(n, bool)
    theta = None
    drawn = {}
    for b in lay.free_boundary:
        u = np.clip(rng.random(n), 1e-16, 1 - 1e-16)
        lt = math.log(lay.scale) + LOGISTIC_SCALE * np.log(u / (1.0 - u))
        t = np.exp(lt)
        density *= _logistic_pdf(lt, math.log(lay.scale)) / t
        drawn[b] = t + 0j if lay.sites[b] == "real" else 1j * t
    centers = list(lay.fixed.items()) + list(drawn.items())
    base_channels = [_channel_for(z, lay.sites.get(v), lay.quadrant, lay.scale) for v, z in centers]
    if lay.designated is not None:
        lo, hi = lay.arc
        theta = lo + (hi - lo) * rng.random(n)
        density /= hi - lo
        zd = lay.scale * np.exp(1j * theta)
        base_channels.append(_channel_for(zd, None, lay.quadrant, lay.scale))
    channels = list(base_channels)
    for v in lay.free:
        pick = rng.integers(0, len(channels), n)
        z = np.empty(n, dtype=complex)
        for ci, ch in enumerate(channels):
            mask = pick == ci
            m = int(mask.sum())
            if not m:
                continue
            sub = _Channel(
                ch.center[mask] if np.ndim(ch.center) else ch.center,
                ch.lo,
                ch.width,
                ch.loc[mask] if np.ndim(ch.loc) else ch.loc,
            )
            z[mask] = _sample_channel(sub, rng, m)
        p = np.zeros(n)
        for ch in channels:
            p += _channel_density(ch, z)
        density *= p / len(channels)
        valid &= _in_domain(z, lay.quadrant)
        drawn[v] = z
        channels.append(_channel_for(z, None, lay.quadrant, lay.scale))
    pos = _positions(lay, drawn, theta)
    return pos, density, valid


# ---------------------------------------------------------------------------
# Monte Carlo driver


@dataclass(frozen=True)
class WeightResult:
    value: float
    stderr: float
    samples: int
    seed: int
    scheme: str
    key: str = ""
    method: str = "mc"  # 'mc' | 'exact' | 'structural'

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "WeightResult":
        return cls(
            value=float(obj["value"]),
            stderr=float(obj["stderr"]),
            samples=int(obj["samples"]),
            seed=int(obj["seed"]),
            scheme=str(obj["scheme"]),
            key=str(obj.get("key", "")),
            method=str(obj.get("method", "mc")),
        )


def batch_seed(seed: int, batch: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, batch])


def _batch_sums(args):
    key, scheme, scale, seed, batch, n, gauge = args
    g = decode_key(key)
    lay = layout_for(g, scheme, scale, gauge)
    sign = orientation_sign(g, lay)
    rng = np.random.default_rng(batch_seed(seed, batch))
    pos, density, valid = sample_batch(g, lay, rng, n)
    with np.errstate(all="ignore"):
        M = integrand_matrix(g, lay, pos)
        det = np.linalg.det(M)
        vals = sign * det / density / TWO_PI ** g.n_edges
    vals = np.where(valid & np.isfinite(vals), vals, 0.0)
    return float(np.sum(vals)), float(np.sum(vals * vals)), n


def structural_zero(g: AdmGraph, scheme: Scheme | str) -> bool:
    """Weights that vanish because the form is pulled back from a lower-dimensional quotient.

    A boundary vertex off the corner that receives no edge can be moved
    along its axis without changing any form, so the top form factors through
    a space of smaller dimension.
    """
    if g.k == 0:
        return False
    sites = Scheme(scheme).boundary_sites(g.n_boundary)
    for b, site in zip(g.boundary, sites):
        if site != "corner" and not g.incoming(b):
            return True
    return False


def weight_mc(g: AdmGraph, scheme: Scheme | str, samples: int = DEFAULT_SAMPLES, seed: int = 0,
              scale: float = 1.0, batch: int = DEFAULT_BATCH, workers: int = 1,
              gauge: str = "standard") -> WeightResult:
    """Monte Carlo estimate of (2 pi)^{-E} times the integral of the oriented top form."""
    scheme = Scheme(scheme)
    key = canonical_key(g)
    if g.k == 0:
        return WeightResult(1.0, 0.0, 0, seed, scheme.value, key, "structural")
    try:
        layout_for(g, scheme, scale, gauge)
    except DimensionMismatch:
        return WeightResult(0.0, 0.0, 0, seed, scheme.value, key, "structural")
    if structural_zero(g, scheme):
        return WeightResult(0.0, 0.0, 0, seed, scheme.value, key, "structural")
    nb = max(1, -(-samples // batch))
    tasks = []
    left = samples
    for b in range(nb):
        n = min(batch, left)
        left -= n
        tasks.append((key, scheme.value, scale, seed, b, n, gauge))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_batch_sums, tasks))
    else:
        parts = [_batch_sums(t) for t in tasks]
    s = s2 = 0.0
    n = 0
    for a, b, m in parts:
        s += a
        s2 += b
        n += m
    mean = s / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return WeightResult(mean, math.sqrt(var / n), n, seed, scheme.value, key, "mc")


# ---------------------------------------------------------------------------
# symmetry orbits


def relabel(g: AdmGraph, perm: dict) -> AdmGraph:
    """Rename aerial vertices by ``perm`` (old label -> new label)."""
    edges = [None] * g.k
    for v, out in enumerate(g.edges, start=1):
        edges[perm.get(v, v) - 1] = tuple((perm.get(t, t) if isinstance(t, int) else t, kind) for t, kind in out)
    return AdmGraph(g.k, g.n_xi, g.n_boundary, g.kind_set, tuple(edges))


def _parity(p: Sequence[int]) -> int:
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def orbit_representative(g: AdmGraph) -> tuple[AdmGraph, int]:
    """(rep, sign) with w(g) = sign * w(rep).

    Relabeling the two-edge vertices permutes 2-forms and leaves the weight
    unchanged; relabeling the one-edge vertices permutes 1-forms (sign of the
    permutation); swapping the edge pair of a vertex negates the weight.
    The representative has the smallest key in the orbit.  When the orbit
    contains a graph with both signs the weight is zero and sign 0 is returned.
    """
    xi_labels = list(range(1, g.n_xi + 1))
    pi_labels = list(range(g.n_xi + 1, g.k + 1))
    best_key, best = None, None
    seen: dict[str, int] = {}
    for pxi in itertools.permutations(xi_labels):
        sxi = _parity(pxi)
        for ppi in itertools.permutations(pi_labels):
            perm = dict(zip(xi_labels, pxi)) | dict(zip(pi_labels, ppi))
            h = relabel(g, perm)
            for mask in range(1 << len(pi_labels)):
                hh, sign = h, sxi
                for bit, v in enumerate(pi_labels):
                    if mask >> bit & 1:
                        hh = hh.swap_edges(v)
                        sign = -sign
                key = canonical_key(hh)
                if seen.setdefault(key, sign) != sign:
                    return hh, 0
                if best_key is None or key < best_key:
                    best_key, best = key, (hh, sign)
    return best


# ---------------------------------------------------------------------------
# exact values


def exact_weight(g: AdmGraph, scheme: Scheme | str) -> Fraction | None:
    """Known closed-form weights: products of k=1 wedges in the half-plane.

    A graph whose every aerial vertex sends one straight edge to each boundary
    point factorizes into k independent wedges of weight +-1/2.
    """
    if Scheme(scheme) is not Scheme.HALF_PLANE or g.n_boundary != 2 or g.n_xi:
        return None
    w = Fraction(1)
    for out in g.edges:
        targets = tuple(t for t, _ in out)
        if any(kind is not EdgeKind.STRAIGHT for _, kind in out):
            return None
        if targets == ("B1", "B2"):
            w *= Fraction(1, 2)
        elif targets == ("B2", "B1"):
            w *= Fraction(-1, 2)
        else:
            return None
    return w


# ---------------------------------------------------------------------------
# cache


class WeightCache:
    """Append-only JSON-lines store keyed by (graph key, scheme).

    ``get`` returns the record with the largest sample count.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._index: dict[tuple[str, str], WeightResult] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = WeightResult.from_json(json.loads(line))
                except (ValueError, KeyError, TypeError) as exc:
                    log.warning("skipping corrupt cache line %d in %s: %s", lineno, self.path, exc)
                    continue
                self._remember(rec)

    def _remember(self, rec: WeightResult):
        k = (rec.key, rec.scheme)
        old = self._index.get(k)
        if old is None or rec.samples > old.samples:
            self._index[k] = rec

    def get(self, key: str, scheme: Scheme | str) -> WeightResult | None:
        return self._index.get((key, Scheme(scheme).value))

    def put(self, rec: WeightResult) -> None:
        with self._lock:
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                line = json.dumps(rec.to_json(), sort_keys=True) + "\n"
                fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
                try:
                    os.write(fd, line.encode("utf-8"))
                    os.fsync(fd)
                finally:
                    os.close(fd)
            self._remember(rec)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, item) -> bool:
        key, scheme = item
        return (key, Scheme(scheme).value) in self._index

    def records(self) -> list[WeightResult]:
        return [self._index[k] for k in sorted(self._index)]

    def snapshot_id(self) -> str:
        h = hashlib.sha256()
        for rec in self.records():
            h.update(json.dumps(rec.to_json(), sort_keys=True).encode())
        return h.hexdigest()[:16]


class MissingWeightsError(LookupError):
    def __init__(self, keys: Iterable[tuple[str, str]]):
        self.keys = sorted(set(keys))
        listing = "\n".join(f"  {scheme}  {key}" for key, scheme in self.keys)
        super().__init__(f"{len(self.keys)} weight(s) not available:\n{listing}")


class WeightProvider:
    """Resolves weights from the exact table, the cache, or fresh integration."""

    def __init__(self, cache: WeightCache | None = None, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                 exact: bool = False, integrate: bool = True, workers: int = 1,
                 samples_by_order: dict[int, int] | None = None):
        self.cache = cache if cache is not None else WeightCache()
        self.samples = samples
        self.samples_by_order = samples_by_order or {}
        self.seed = seed
        self.exact = exact
        self.integrate = integrate
        self.workers = workers
        self.integrations = 0
        self.max_stderr = 0.0  # largest stderr among Monte Carlo weights served

    def lookup(self, g: AdmGraph, scheme: Scheme | str):
        """Exact Fraction, cached WeightResult, or None."""
        scheme = Scheme(scheme)
        if g.k == 0:
            return Fraction(1)
        if structural_zero(g, scheme):
            return Fraction(0)
        try:
            layout_for(g, scheme)
        except DimensionMismatch:
            return Fraction(0)
        if self.exact:
            w = exact_weight(g, scheme)
            if w is not None:
                return w
        rep, sign = orbit_representative(g)
        if sign == 0:
            return Fraction(0)
        rec = self.cache.get(canonical_key(rep), scheme)
        if rec is None or sign == 1:
            return rec
        return WeightResult(-rec.value, rec.stderr, rec.samples, rec.seed, rec.scheme, canonical_key(g), rec.method)

    def get(self, g: AdmGraph, scheme: Scheme | str):
        found = self.lookup(g, scheme)
        if found is not None:
            if isinstance(found, WeightResult):
                self.max_stderr = max(self.max_stderr, found.stderr)
            return found
        rep, _ = orbit_representative(g)
        if not self.integrate:
            raise MissingWeightsError([(canonical_key(rep), Scheme(scheme).value)])
        order = g.k - g.n_xi
        n = self.samples_by_order.get(order, self.samples)
        rec = weight_mc(rep, scheme, samples=n, seed=self.seed, workers=self.workers)
        self.integrations += 1
        self.cache.put(rec)
        return self.lookup(g, scheme)

    def ensure(self, items: Iterable[tuple[AdmGraph, Scheme]]) -> None:
        """Integrate every unavailable weight, or raise MissingWeightsError listing them all."""
        missing = [(g, s) for g, s in items if self.lookup(g, s) is None]
        if missing and not self.integrate:
            keys = [(canonical_key(orbit_representative(g)[0]), Scheme(s).value) for g, s in missing]
            raise MissingWeightsError(keys)
        for g, s in missing:
            self.get(g, s)


def weight_value(w) -> tuple[object, float]:
    """(value, stderr) for a Fraction or WeightResult."""
    if isinstance(w, Fraction):
        return w, 0.0
    return w.value, w.stderr

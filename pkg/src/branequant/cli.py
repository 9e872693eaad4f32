"""Command-line entry point.

Exit codes: 0 pass, 1 check failure, 2 input error, 3 integration nonconvergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import fixtures as fx
from .graphs import EnumerationCapError, Scheme, admissible, canonical_key, count_graphs
from .operators import MAX_SAFE_ORDER, DeformedProduct, lift
from .poisson import Brane, NotCoisotropicError, PoissonStructure, check_coisotropic, jacobiator
from .polyalg import Poly
from .verify import SUITES, ExpectedFailurePassed, SuiteConfig, run_suite
from .weights import MissingWeightsError, WeightCache, WeightProvider, WeightResult, orbit_representative

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3
MIN_SAMPLES = 1000
MAX_INTEGRATION_K = 2

log = logging.getLogger("branequant")


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    order: int
    samples: int
    seed: int
    target_stderr: float | None
    cache: str | None
    out: str | None
    exact_weights: bool
    integrate: bool
    workers: int
    inputs: dict

    def echo(self) -> dict:
        return {k: v for k, v in vars(self).items()}


# ---------------------------------------------------------------------------
# input parsing


def _load_json(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _load(path: str, what: str, parse):
    obj = _load_json(path)
    try:
        return parse(obj)
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise InputError(f"{path}: invalid {what}: {exc}") from exc


def _structure(args) -> tuple[PoissonStructure, list[Brane], dict]:
    """Poisson structure, branes and named functions from --fixture or files."""
    funcs: dict = {}
    if getattr(args, "fixture", None):
        try:
            f = fx.get(args.fixture)
        except KeyError as exc:
            raise InputError(str(exc)) from exc
        pi, branes, funcs = f.pi, list(f.branes), dict(f.functions)
    elif getattr(args, "poisson", None):
        pi = _load(args.poisson, "Poisson structure", PoissonStructure.from_json)
        branes = [_load(p, "brane", lambda o: Brane.from_json(o, pi.dim)) for p in (args.brane or [])]
        if not branes:
            branes = [Brane.full(pi.dim)]
    else:
        raise InputError("give --fixture NAME or --poisson FILE")
    for name in ("f", "g", "h", "psi", "f0"):
        path = getattr(args, name, None)
        if path:
            p = _load(path, "polynomial", Poly.from_json)
            if p.dim != pi.dim:
                raise InputError(f"{path}: polynomial has dim {p.dim}, structure has {pi.dim}")
            funcs[name] = p
    return pi, branes, funcs


def _need(funcs: dict, *names: str) -> list[Poly]:
    missing = [n for n in names if n not in funcs]
    if missing:
        raise InputError(f"missing function input(s): {', '.join('--' + m for m in missing)}")
    return [funcs[n] for n in names]


def _config(args) -> RunConfig:
    if args.order > MAX_SAFE_ORDER and not args.unsafe_order:
        raise InputError(f"--order {args.order} exceeds {MAX_SAFE_ORDER}; add --unsafe-order")
    if args.samples < MIN_SAMPLES:
        raise InputError(f"--samples must be at least {MIN_SAMPLES}")
    inputs = {k: getattr(args, k) for k in ("fixture", "poisson", "brane", "f", "g", "h", "psi", "f0", "k", "scheme",
                                            "suite", "side", "degree_cap") if getattr(args, k, None) is not None}
    return RunConfig(args.command, args.order, args.samples, args.seed, args.target_stderr,
                     args.cache or os.environ.get("BRANEQUANT_CACHE"), args.out, args.exact_weights,
                     not args.no_integrate, args.workers, inputs)


def _provider(cfg: RunConfig) -> WeightProvider:
    return WeightProvider(WeightCache(cfg.cache), samples=cfg.samples, seed=cfg.seed, exact=cfg.exact_weights,
                          integrate=cfg.integrate, workers=cfg.workers)


def _emit(cfg: RunConfig, payload: dict) -> None:
    payload = {"config": cfg.echo(), **payload}
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


# ---------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    cfg = _config(args)
    pi, branes, _ = _structure(args)
    jac = jacobiator(pi)
    checks = [{"label": "jacobi", "status": "pass" if jac.is_zero() else "fail",
               "residual": max((p.max_abs() for p in jac.components.values()), default=0.0)}]
    for j, c in enumerate(branes):
        ok = check_coisotropic(pi, c)
        checks.append({"label": f"coisotropic C{j} {list(c.tangent)}", "status": "pass" if ok else "fail"})
    ok = all(c["status"] == "pass" for c in checks)
    _emit(cfg, {"checks": checks, "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_weights(args) -> int:
    cfg = _config(args)
    scheme = Scheme(args.scheme)
    if getattr(args, "fixture", None) or getattr(args, "poisson", None):
        _, branes, _ = _structure(args)
    else:
        branes = [Brane.full(args.dim)]
    branes = branes[:1] if scheme is Scheme.HALF_PLANE else branes
    if scheme is not Scheme.HALF_PLANE and len(branes) == 1:
        branes = branes * 2
    n_xi = args.n_xi
    n_boundary = {Scheme.HALF_PLANE: 2 - n_xi, Scheme.QUADRANT_CORNER: 1}.get(scheme, 2)
    if scheme is Scheme.HALF_PLANE and n_xi > 2:
        raise InputError("--n-xi must be 0, 1 or 2")
    try:
        graphs = admissible(args.k + n_xi, n_xi, n_boundary, branes, scheme)
    except EnumerationCapError as exc:
        raise InputError(str(exc)) from exc
    summary = {"scheme": scheme.value, "k": args.k, "enumerated": count_graphs(args.k + n_xi, n_xi, n_boundary,
                                                                                scheme.kind_set),
               "surviving": len(graphs)}
    if args.k > MAX_INTEGRATION_K:
        summary["integrated"] = False
        summary["message"] = f"enumeration only: integration refused for k > {MAX_INTEGRATION_K}"
        summary["graphs"] = [canonical_key(g) for g in graphs]
        print(summary["message"], file=sys.stderr)
        _emit(cfg, summary)
        return EXIT_OK
    prov = _provider(cfg)
    rows, nonconverged = [], []
    for g in graphs:
        w = prov.get(g, scheme)
        key = canonical_key(g)
        if isinstance(w, WeightResult):
            if prov.cache.get(key, scheme) is None:
                prov.cache.put(WeightResult(w.value, w.stderr, w.samples, w.seed, scheme.value, key, w.method))
            value, err = w.value, w.stderr
            if cfg.target_stderr is not None and err > cfg.target_stderr:
                nonconverged.append(key)
        else:
            value, err = float(w), 0.0
        rows.append({"key": key, "value": value, "stderr": err,
                     "representative": canonical_key(orbit_representative(g)[0])})
    summary.update(integrated=True, integrations=prov.integrations, weights=rows, nonconverged=nonconverged)
    _emit(cfg, summary)
    return EXIT_NONCONVERGED if nonconverged else EXIT_OK


def _product(cfg: RunConfig, pi, branes) -> DeformedProduct:
    try:
        return DeformedProduct(pi, branes, cfg.order, _provider(cfg), unsafe_order=True)
    except NotCoisotropicError as exc:
        raise InputError(str(exc)) from exc


def cmd_star(args) -> int:
    cfg = _config(args)
    pi, branes, funcs = _structure(args)
    f, g = _need(funcs, "f", "g")
    D = _product(cfg, pi, branes[:1])
    s = D.star(f, g)
    _emit(cfg, {"series": s.to_json(), "text": repr(s)})
    return EXIT_OK


def cmd_module(args) -> int:
    cfg = _config(args)
    pi, branes, funcs = _structure(args)
    if len(branes) != 2:
        raise InputError("module products need two branes (--brane twice, C0 then C1)")
    psi, f = _need(funcs, "psi", "f")
    D = _product(cfg, pi, branes)
    s = D.mod_product_right(psi, f) if args.side == "right" else D.mod_product_left(f, psi)
    _emit(cfg, {"side": args.side, "series": s.to_json(), "text": repr(s)})
    return EXIT_OK


def cmd_lift(args) -> int:
    cfg = _config(args)
    pi, branes, funcs = _structure(args)
    f0 = funcs.get("f0") or _need(funcs, "f")[0]
    D = _product(cfg, pi, branes[:1])
    res = lift(f0, D, args.degree_cap)
    payload = {"exists": res.exists, "residual": res.residual, "obstructed_at": res.obstructed_at}
    if res.exists:
        payload.update(series=res.series.to_json(), text=repr(res.series))
    _emit(cfg, payload)
    return EXIT_OK if res.exists else EXIT_FAIL


def cmd_verify(args) -> int:
    cfg = _config(args)
    suites = [args.suite] if args.suite else list(SUITES)
    for s in suites:
        if s not in SUITES:
            raise InputError(f"unknown suite {s!r}; known: {', '.join(SUITES)}")
    scfg = SuiteConfig(order=cfg.order, samples=cfg.samples, seed=cfg.seed, cache=WeightCache(cfg.cache),
                       exact=cfg.exact_weights, target_stderr=cfg.target_stderr or 1e-2, workers=cfg.workers)
    reports = []
    try:
        for s in suites:
            reports.append(run_suite(s, scfg))
    except ExpectedFailurePassed as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(cfg, {"reports": [r.to_json() for r in reports]})
    if not all(r.ok for r in reports):
        return EXIT_FAIL
    if any(r.inconclusive for r in reports):
        return EXIT_NONCONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=int, default=2, help="truncation order K (default 2)")
    common.add_argument("--unsafe-order", action="store_true", help="allow K > 2")
    common.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo samples per weight")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--target-stderr", type=float, default=None)
    common.add_argument("--cache", default=None, help="weight cache file (default $BRANEQUANT_CACHE)")
    common.add_argument("--exact-weights", action="store_true", help="use closed-form weights where known")
    common.add_argument("--no-integrate", action="store_true", help="fail instead of integrating missing weights")
    common.add_argument("--workers", type=int, default=1, help="processes per integration")
    common.add_argument("--out", default=None, help="write JSON here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--fixture", help=f"named example: {', '.join(sorted(fx.library()))}")
    inputs.add_argument("--poisson", help="Poisson structure JSON")
    inputs.add_argument("--brane", action="append", help="brane JSON (repeat for C0, C1)")
    for name in ("f", "g", "h", "psi", "f0"):
        inputs.add_argument(f"--{name}", help=f"polynomial JSON for {name}")

    p = argparse.ArgumentParser(prog="branequant", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common, inputs], help="Jacobi and coisotropy checks")
    w = sub.add_parser("weights", parents=[common, inputs], help="enumerate graphs and integrate weights")
    w.add_argument("--k", type=int, required=True, help="number of Poisson vertices")
    w.add_argument("--scheme", default="HalfPlane", choices=[s.value for s in Scheme])
    w.add_argument("--n-xi", type=int, default=0, help="vector-field vertices (HalfPlane: 1 for A, 2 for F)")
    w.add_argument("--dim", type=int, default=2, help="ambient dimension when no structure is given")
    sub.add_parser("star", parents=[common, inputs], help="star product f * g")
    m = sub.add_parser("module", parents=[common, inputs], help="module products psi *0 f or f *1 psi")
    m.add_argument("--side", choices=("right", "left"), default="right")
    lf = sub.add_parser("lift", parents=[common, inputs], help="lift an invariant function order by order")
    lf.add_argument("--degree-cap", type=int, default=4)
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", help=f"one of {', '.join(SUITES)} (default: all)")
    return p


COMMANDS = {"check": cmd_check, "weights": cmd_weights, "star": cmd_star, "module": cmd_module, "lift": cmd_lift,
            "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MissingWeightsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

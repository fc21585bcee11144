"""Command-line orchestration: sweeps, audits, and report emission.

Every subcommand is deterministic for a fixed seed regardless of the
worker count in CANTORSLIT_WORKERS; reports are CSV/JSON with '.' decimal
separators and newline line endings, and each output file is paired with a
manifest recording parameters, seeds, versions, and timing.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .cantor import CantorSpec, cantor_dim, k_distance
from .dimension import (build_net_hierarchy, dim_upper_estimate,
                        measure_density_check)
from .extension import assemble, bound_report, extend, jump_test_function
from .fields import GridField, gradient, grid_sample, seminorm_p
from .regions import component_label, region_spec
from .whitney import (claim_count, reflect_assign, verify_whitney,
                      whitney_decompose)

WORKERS_ENV = "CANTORSLIT_WORKERS"


def parse_number(text: str) -> float:
    """Exact parsing of fractions like 1/8 and powers like 2^-10."""
    text = text.strip()
    if "^" in text:
        base, _, expo = text.partition("^")
        return float(Fraction(base) ** int(expo))
    return float(Fraction(text))


def parse_number_list(text: str) -> list[float]:
    return [parse_number(t) for t in text.split(",") if t.strip()]


def parse_point(text: str) -> np.ndarray:
    return np.array([parse_number(t) for t in text.split(",")])


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf"
        return repr(v)
    return str(v)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def write_manifest(out_path: str, command: str, params: dict,
                   seed: int | None, elapsed: float) -> None:
    manifest = {
        "command": command,
        "params": params,
        "seed": seed,
        "workers": os.environ.get(WORKERS_ENV, "1"),
        "versions": {
            "cantorslit": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "elapsed_seconds": elapsed,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(out_path + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _region(args) -> "RegionSpec":
    return region_spec(args.region, lam=args.lam, n=args.n)


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_cantor_dist(args) -> int:
    spec = CantorSpec(lam=args.lam, ambient_codim=1)
    print(_fmt(k_distance(args.x, spec)))
    return 0


def cmd_region_probe(args) -> int:
    from .regions import region_membership
    spec = _region(args)
    member = region_membership(spec, parse_point(args.point))
    print("member" if member else "not-member")
    return 0


def cmd_region_components(args) -> int:
    spec = _region(args)
    cmap = component_label(spec, parse_point(args.center), args.radius,
                           args.radius / 256.0)
    print(cmap.count)
    return 0


def cmd_whitney_build(args) -> int:
    t0 = time.time()
    dec = whitney_decompose(_region(args), args.max_gen)
    cubes = [{"gen": c.gen, "idx": list(c.idx), "status": "resolved"}
             for c in dec.cubes]
    cubes += [{"gen": c.gen, "idx": list(c.idx), "status": "frontier"}
              for c in dec.frontier]
    with open(args.out, "w") as f:
        json.dump({"region": args.region, "lambda": args.lam, "n": args.n,
                   "max_gen": args.max_gen, "cubes": cubes}, f)
        f.write("\n")
    write_manifest(args.out, "whitney build", vars_of(args), None,
                   time.time() - t0)
    return 0


def cmd_whitney_verify(args) -> int:
    t0 = time.time()
    dec = whitney_decompose(_region(args), args.max_gen)
    rep = verify_whitney(dec)
    payload = {
        "w1_violations": rep.w1_violations,
        "w2_violations": rep.w2_violations,
        "w3_violations": rep.w3_violations,
        "w4_violations": rep.w4_violations,
        "boundary_crossings": rep.boundary_crossings,
        "frontier_fraction": dec.frontier_fraction,
        "resolved": len(dec.cubes),
        "frontier": len(dec.frontier),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        write_manifest(args.out, "whitney verify", vars_of(args), None,
                       time.time() - t0)
    else:
        sys.stdout.write(text)
    bad = (rep.w1_violations + rep.w2_violations + rep.w3_violations
           + rep.w4_violations + rep.boundary_crossings)
    return 0 if bad == 0 else 1


def cmd_whitney_claim_count(args) -> int:
    t0 = time.time()
    w = whitney_decompose(region_spec("N_lambda", lam=args.lam, n=args.n),
                          args.max_gen)
    wt = whitney_decompose(region_spec("Omega_lambda", lam=args.lam,
                                       n=args.n), args.max_gen)
    reflect = reflect_assign(w, wt)
    res = claim_count(w, wt, reflect, k_max=args.k_max)
    expo = res.fitted_exponent(args.k_max)
    rows = [[k, res.counts.get(k, 0), expo] for k in range(args.k_max + 1)]
    write_csv(args.out, ["k", "max_count", "fitted_exponent"], rows)
    write_manifest(args.out, "whitney claim-count", vars_of(args), None,
                   time.time() - t0)
    return 0


def _parse_func(text: str, lam: float, n: int, h: float):
    """Test-function specs: const:<v>, coord:<axis>, jump:depth=<d>[,r=<r>]."""
    kind, _, rest = text.partition(":")
    if kind == "const":
        v = parse_number(rest or "1")
        return lambda P: np.full(P.shape[0], v)
    if kind == "coord":
        axis = int(rest or "1") - 1
        return lambda P: P[:, axis]
    if kind == "jump":
        opts = dict(kv.split("=") for kv in rest.split(",") if kv)
        depth = int(opts.get("depth", "1"))
        r = parse_number(opts["r"]) if "r" in opts else lam ** depth
        ro = region_spec("Omega_lambda", lam=lam, n=n)
        x0 = np.zeros(n)
        wit = x0.copy()
        wit[0] += r / 8.0
        wit[n - 1] += r / 2.0
        return jump_test_function(x0, r, ro, wit)
    raise ValueError(f"unknown test function spec {text!r}")


def _dump_grid(path: str, f: GridField) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# bbox=" + ";".join(_fmt(float(v)) for v in f.bbox.ravel())
                 + f" h={_fmt(f.h)} n={f.n} mask-encoding=01\n")
        fh.write("value,mask\n")
        flat_v = f.values.ravel() if f.kind == "scalar" else \
            np.linalg.norm(f.values.reshape(-1, f.n), axis=1)
        flat_m = f.mask.ravel().astype(int)
        for v, m in zip(flat_v, flat_m):
            fh.write(f"{_fmt(float(v))},{m}\n")


def cmd_field(args) -> int:
    t0 = time.time()
    spec = _region(args)
    fn = _parse_func(args.func, args.lam, args.n, args.h)
    u = grid_sample(fn, spec, args.h)
    if args.action == "sample":
        out_field = u
    else:
        g = gradient(u)
        if args.action == "norm":
            print(_fmt(seminorm_p(g, args.p)))
            return 0
        out_field = g
    _dump_grid(args.out, out_field)
    write_manifest(args.out, f"field {args.action}", vars_of(args), None,
                   time.time() - t0)
    return 0


def cmd_extend(args) -> int:
    t0 = time.time()
    max_gen = args.max_gen
    if max_gen is None:
        max_gen = max(4, int(round(math.log2(1.0 / args.grid))) - 3)
    asm = assemble(args.lam, n=args.n, max_gen=max_gen)
    fn = _parse_func(args.u, args.lam, args.n, args.grid)
    u = grid_sample(fn, asm.region_omega, args.grid)
    eu = extend(u, asm)
    _dump_grid(args.out, eu)
    write_manifest(args.out, "extend", vars_of(args), None, time.time() - t0)
    return 0


def cmd_sweep(args) -> int:
    t0 = time.time()
    rep = bound_report(args.n, args.p, args.lambdas, h=args.grid)
    rows = [[row["lambda"], row["dim"], row["norm_factor"],
             row["empirical_ratio"], row["C_eff"], row["thm11_upper"]]
            for row in rep.rows]
    write_csv(args.out, ["lambda", "dim", "norm_factor", "empirical_ratio",
                         "C_eff", "thm11_upper"], rows)
    write_manifest(args.out, "sweep", vars_of(args), args.seed,
                   time.time() - t0)
    return 0


def cmd_dim_estimate(args) -> int:
    t0 = time.time()
    spec = CantorSpec(lam=args.lam, ambient_codim=1)
    h = build_net_hierarchy(spec, args.levels, n=2)
    est = dim_upper_estimate(h)
    payload = {
        "set": args.set, "lambda": args.lam, "levels": est.levels,
        "estimate": est.s, "certified": est.certified,
        "closed_form": cantor_dim(spec, 2),
        "certificate": [{"i": i, "k": k, "j": j, "count": c}
                        for (i, k), (j, c) in sorted(est.certificate.items())],
    }
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    write_manifest(args.out, "dim estimate", vars_of(args), None,
                   time.time() - t0)
    return 0


def cmd_density(args) -> int:
    t0 = time.time()
    spec = region_spec("Omega_lambda", lam=args.lam, n=args.n)
    out = {}
    for side in ("upper", "lower"):
        res = measure_density_check(spec, parse_point(args.point),
                                    args.radii, samples=args.samples,
                                    seed=args.seed, side=side)
        out[side] = {"c_fit": res.c_fit,
                     "per_radius": dict(zip(map(_fmt, res.radii),
                                            res.c_per_radius)),
                     "halfwidth": res.halfwidth}
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        write_manifest(args.out, "density", vars_of(args), args.seed,
                       time.time() - t0)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# config-driven runs


VALID_KINDS = ("bound-sweep", "claim-count", "dim-estimate", "density",
               "whitney-audit")


def validate_config(cfg: dict) -> None:
    kind = cfg.get("kind")
    if kind not in VALID_KINDS:
        raise ValueError(f"kind must be one of {VALID_KINDS}, got {kind!r}")
    params = cfg.get("params", {})
    for lam in params.get("lambdas", []) + \
            ([params["lambda"]] if "lambda" in params else []):
        if not 0.0 < lam < 0.5:
            raise ValueError("lambda must be in (0, 1/2)")
    if "p" in params and params["p"] <= 1:
        raise ValueError("p must be > 1")
    if "out" not in cfg:
        raise ValueError("config must name an output path 'out'")


def run(cfg: dict) -> int:
    """Dispatch a validated experiment config to its subcommand handler."""
    validate_config(cfg)
    params = dict(cfg.get("params", {}))
    kind = cfg["kind"]
    ns = argparse.Namespace(out=cfg["out"], seed=int(params.get("seed", 0)))
    if kind == "bound-sweep":
        ns.n = int(params.get("n", 2))
        ns.p = float(params["p"])
        ns.lambdas = [float(v) for v in params["lambdas"]]
        ns.grid = params.get("h")
        return cmd_sweep(ns)
    if kind == "claim-count":
        ns.lam = float(params["lambda"])
        ns.n = int(params.get("n", 2))
        ns.max_gen = int(params.get("max_gen", 10))
        ns.k_max = int(params.get("k_max", 4))
        return cmd_whitney_claim_count(ns)
    if kind == "dim-estimate":
        ns.lam = float(params["lambda"])
        ns.levels = int(params.get("levels", 5))
        ns.set = params.get("set", "cantor-slit")
        return cmd_dim_estimate(ns)
    if kind == "density":
        ns.lam = float(params["lambda"])
        ns.n = int(params.get("n", 2))
        ns.point = params.get("point", "0,0")
        ns.radii = [float(v) for v in params.get("radii", [0.25, 0.125, 0.0625])]
        ns.samples = int(params.get("samples", 10 ** 6))
        return cmd_density(ns)
    # whitney-audit
    ns.region = params.get("region", "N_lambda")
    ns.lam = float(params["lambda"])
    ns.n = int(params.get("n", 2))
    ns.max_gen = int(params.get("max_gen", 8))
    return cmd_whitney_verify(ns)


def cmd_run(args) -> int:
    import yaml
    with open(args.config) as f:
        cfg = yaml.safe_load(f)
    for override in args.set or []:
        key, _, val = override.partition("=")
        cfg.setdefault("params", {})[key] = yaml.safe_load(val)
    try:
        return run(cfg)
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


def vars_of(args) -> dict:
    return {k: v for k, v in vars(args).items()
            if k != "func_handler" and not callable(v)}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cantorslit")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, region=False, lam=True, n=True):
        if region:
            p.add_argument("--region", default="N_lambda")
        if lam:
            p.add_argument("--lambda", dest="lam", type=parse_number,
                           default=0.25)
        if n:
            p.add_argument("--n", type=int, default=2)

    c = sub.add_parser("cantor")
    cs = c.add_subparsers(dest="sub", required=True)
    cd = cs.add_parser("dist")
    cd.add_argument("--lambda", dest="lam", type=parse_number, required=True)
    cd.add_argument("--x", type=parse_number, required=True)
    cd.set_defaults(func_handler=cmd_cantor_dist)

    r = sub.add_parser("region")
    rs = r.add_subparsers(dest="sub", required=True)
    rp = rs.add_parser("probe")
    common(rp, region=True)
    rp.add_argument("--point", required=True)
    rp.set_defaults(func_handler=cmd_region_probe)
    rc = rs.add_parser("components")
    common(rc, region=True)
    rc.add_argument("--center", required=True)
    rc.add_argument("--radius", type=parse_number, default=0.25)
    rc.set_defaults(func_handler=cmd_region_components)

    w = sub.add_parser("whitney")
    ws = w.add_subparsers(dest="sub", required=True)
    wb = ws.add_parser("build")
    common(wb, region=True)
    wb.add_argument("--max-gen", type=int, default=8)
    wb.add_argument("--out", required=True)
    wb.set_defaults(func_handler=cmd_whitney_build)
    wv = ws.add_parser("verify")
    common(wv, region=True)
    wv.add_argument("--max-gen", type=int, default=8)
    wv.add_argument("--out")
    wv.set_defaults(func_handler=cmd_whitney_verify)
    wc = ws.add_parser("claim-count")
    common(wc)
    wc.add_argument("--max-gen", type=int, default=10)
    wc.add_argument("--k-max", type=int, default=4)
    wc.add_argument("--out", required=True)
    wc.set_defaults(func_handler=cmd_whitney_claim_count)

    f = sub.add_parser("field")
    f.add_argument("action", choices=("sample", "grad", "norm"))
    common(f, region=True)
    f.add_argument("--func", default="const:1")
    f.add_argument("--h", type=parse_number, default=2.0 ** -8)
    f.add_argument("--p", type=float, default=2.0)
    f.add_argument("--out")
    f.set_defaults(func_handler=cmd_field)

    e = sub.add_parser("extend")
    common(e)
    e.add_argument("--p", type=float, default=1.5)
    e.add_argument("--u", default="jump:depth=1")
    e.add_argument("--grid", type=parse_number, default=2.0 ** -9)
    e.add_argument("--max-gen", type=int, default=None)
    e.add_argument("--out", required=True)
    e.set_defaults(func_handler=cmd_extend)

    s = sub.add_parser("sweep")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--p", type=float, default=1.5)
    s.add_argument("--lambdas", type=parse_number_list, required=True)
    s.add_argument("--grid", type=parse_number, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func_handler=cmd_sweep)

    d = sub.add_parser("dim")
    dsub = d.add_subparsers(dest="sub", required=True)
    de = dsub.add_parser("estimate")
    de.add_argument("--set", default="cantor-slit")
    de.add_argument("--lambda", dest="lam", type=parse_number, required=True)
    de.add_argument("--levels", type=int, default=5)
    de.add_argument("--out", required=True)
    de.set_defaults(func_handler=cmd_dim_estimate)

    dn = sub.add_parser("density")
    common(dn)
    dn.add_argument("--point", default="0,0")
    dn.add_argument("--radii", type=parse_number_list,
                    default=[0.25, 0.125, 0.0625])
    dn.add_argument("--samples", type=int, default=10 ** 6)
    dn.add_argument("--seed", type=int, default=0)
    dn.add_argument("--out")
    dn.set_defaults(func_handler=cmd_density)

    rn = sub.add_parser("run")
    rn.add_argument("--config", required=True)
    rn.add_argument("--set", action="append")
    rn.set_defaults(func_handler=cmd_run)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func_handler(args)


if __name__ == "__main__":
    sys.exit(main())

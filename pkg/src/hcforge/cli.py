"""Command-line front end.

Exit codes: 0 success, 1 domain error (bad input, guard, budget, violated
bench property), 2 usage error.  JSON reports carry a ``schema`` version,
the parsed configuration and the seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import hcc as hcc_mod
from .baselines import BRUTE_FORCE_MAX_N, brute_force_optimal
from .core import HcError, eval_hcc, validate
from .epras import (EprasConfig, dissimilarity_epras, hcc_pm, metric_shift,
                    revenue_epras)
from .generators import (MetricConfig, SIMILARITY_FUNCTIONS, clique_augment,
                         complement_instance, gaussian, hccpm_instance, metric_instance,
                         path_augment, random_instance)
from .partition import BACKENDS, PartitionTarget, solve_partition
from .sketch import build_edge_set_F, contract_to_K, sketch_stats, to_dis_tree, to_rev_tree
from .treeio import SCHEMA_VERSION, dumps_tree, instance_to_json, read_instance, read_tree

log = logging.getLogger("hcforge")


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _report(args, payload: dict) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    doc = {"schema": SCHEMA_VERSION, "command": args.command, "seed": getattr(args, "seed", None),
           "config": config, **payload}
    _emit(json.dumps(doc, indent=2, sort_keys=False) + "\n", args.out)


def _rng(args) -> np.random.Generator:
    return np.random.default_rng(args.seed)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    inst = read_instance(args.instance)
    tree = read_tree(args.tree)
    problems = validate(tree, inst.n)
    if problems:
        raise HcError("invalid tree: " + "; ".join(problems))
    _report(args, eval_hcc(inst, tree).as_dict())
    return 0


def cmd_sketch(args) -> int:
    tree = read_tree(args.tree)
    n = tree.n_leaves
    problems = validate(tree, n)
    if problems:
        raise HcError("invalid tree: " + "; ".join(problems))
    # the comb pipeline contracts at eps^2 granularity
    g = args.eps if args.kind == "rev" else args.eps * args.eps
    F = build_edge_set_F(tree, g)
    K = contract_to_K(tree, g, F)
    sk = to_rev_tree(K) if args.kind == "rev" else to_dis_tree(K, args.eps, _rng(args))
    st = sketch_stats(sk, args.eps)
    payload = {"tree": dumps_tree(sk), "internal_nodes": st.internal_nodes,
               "max_children": st.max_children, "bags": [sorted(b) for b in K.bags()],
               "fEdges": len(F)}
    if args.instance:
        inst = read_instance(args.instance)
        payload["original"] = eval_hcc(inst, tree).as_dict()
        payload["sketched"] = eval_hcc(inst, sk).as_dict()
    _report(args, payload)
    return 0


def cmd_epras(args) -> int:
    inst = read_instance(args.instance)
    cfg = EprasConfig(eps=args.eps, delta=args.delta, rho=args.rho, tau=args.tau,
                      backend=args.backend, budget=args.budget,
                      max_sketch_internal=args.max_internal, max_buckets=args.max_buckets,
                      comb_draws=args.comb_draws, include_baseline=not args.no_baseline)
    rng = _rng(args)
    if args.shift is not None:
        res = metric_shift(inst, args.shift, cfg, rng)
    elif args.objective == "rev":
        res = revenue_epras(inst, cfg, rng)
    elif args.objective == "dis":
        res = dissimilarity_epras(inst, cfg, rng)
    else:
        res = hcc_pm(inst, cfg, rng)
    _report(args, {**res.as_dict(), "eprasConfig": res.config})
    return 0


def cmd_hcc(args) -> int:
    inst = read_instance(args.instance)
    tree = hcc_mod.combined_hcc(inst, args.p, args.mode, _rng(args), args.mub_backend)
    rep = eval_hcc(inst, tree)
    _report(args, {"tree": dumps_tree(tree), **rep.as_dict(),
                   "greedyFloor": hcc_mod.greedy_floor(inst)})
    return 0


def cmd_oracle(args) -> int:
    inst = read_instance(args.instance)
    tree, value = brute_force_optimal(inst, args.objective, max_n=args.max_n,
                                      force=args.yes_i_know)
    _report(args, {"tree": dumps_tree(tree), "value": value})
    return 0


def cmd_partition(args) -> int:
    inst = read_instance(args.instance)
    try:
        data = json.loads(Path(args.target).read_text())
        target = PartitionTarget(np.asarray(data["alpha"], dtype=float),
                                 np.asarray(data["beta"], dtype=float),
                                 float(data["epsErr"]), float(data.get("delta", 0.1)),
                                 data.get("channel", "sim"))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, HcError):
            raise
        raise HcError(f"{args.target}: malformed partition target ({exc})") from None
    res = solve_partition(inst, target, args.backend, _rng(args))
    payload = {"verdict": res.verdict.value}
    if res.found:
        payload["assignment"] = res.assignment.tolist()
        payload["sizeDeviation"] = res.deviations.size.tolist()
        payload["weightDeviation"] = res.deviations.weight.tolist()
    _report(args, payload)
    return 0


def cmd_gen(args) -> int:
    rng = _rng(args)
    kind = args.kind
    if kind in ("random", "hccpm") and args.n is None:
        raise UsageError(f"gen --kind {kind} needs --n")
    if kind == "random":
        inst = random_instance(args.n, args.density, args.complementary, rng)
    elif kind == "hccpm":
        inst = hccpm_instance(args.n, rng)
    elif kind == "metric":
        if args.points:
            pts = np.asarray(json.loads(Path(args.points).read_text()), dtype=float)
        elif args.n is not None:
            pts = rng.random((args.n, args.dim))
        else:
            raise UsageError("gen --kind metric needs --points or --n")
        g = gaussian(args.sigma) if args.similarity == "gaussian" \
            else SIMILARITY_FUNCTIONS[args.similarity]
        inst = metric_instance(MetricConfig(points=pts, similarity=g))
    else:
        if not args.input:
            raise UsageError(f"gen --kind {kind} needs --input")
        base = read_instance(args.input)
        if kind == "clique-augment":
            inst = clique_augment(base)
        elif kind == "path-augment":
            inst = path_augment(base, args.path_len)
        else:
            inst = complement_instance(base)
    _emit(json.dumps({"schema": SCHEMA_VERSION, "seed": args.seed, "generator": kind,
                      **instance_to_json(inst)}) + "\n", args.out)
    return 0


def cmd_bench(args) -> int:
    rows = bench_mod.run_suite(args.suite, args.seed, args.scale)
    _emit(bench_mod.to_csv(rows, args.suite, args.seed, args.scale), args.out)
    return 1 if any(r.violations for r in rows) else 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hcforge", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", help="write the report here instead of stdout")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("eval", help="evaluate a tree on an instance")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--tree", required=True)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sketch", help="contract a tree into its star or comb sketch")
    sp.add_argument("--tree", required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--kind", choices=("rev", "dis"), default="rev")
    sp.add_argument("--instance", help="also evaluate original and sketch on this instance")
    common(sp)
    sp.set_defaults(func=cmd_sketch)

    sp = sub.add_parser("epras", help="run an approximation scheme")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--objective", choices=("rev", "dis", "hccpm"), default="rev")
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--rho", type=float, default=0.5)
    sp.add_argument("--tau", type=float, default=0.5)
    sp.add_argument("--backend", choices=BACKENDS, default="exact")
    sp.add_argument("--budget", type=int, default=10 ** 7)
    sp.add_argument("--max-internal", type=int, default=None)
    sp.add_argument("--max-buckets", type=int, default=None)
    sp.add_argument("--comb-draws", type=int, default=1)
    sp.add_argument("--no-baseline", action="store_true",
                    help="do not let average linkage compete in the final fold")
    sp.add_argument("--shift", type=float, default=None,
                    help="metric mode: add this constant to every similarity first")
    common(sp)
    sp.set_defaults(func=cmd_epras)

    sp = sub.add_parser("hcc", help="greedy / MUB-seeded HCC algorithm")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--p", type=float, default=hcc_mod.DEFAULT_P)
    sp.add_argument("--mode", choices=("bestOfBoth", "randomized"), default="bestOfBoth")
    sp.add_argument("--mub-backend", choices=("exact", "localSearch"), default="exact")
    common(sp)
    sp.set_defaults(func=cmd_hcc)

    sp = sub.add_parser("oracle", help="exact optimum by exhaustive search")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--objective", choices=("rev", "dis", "hcc"), default="hcc")
    sp.add_argument("--max-n", type=int, default=None,
                    help=f"size guard (default {BRUTE_FORCE_MAX_N})")
    sp.add_argument("--yes-i-know", action="store_true",
                    help="confirm raising the guard above its default")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("partition", help="query the partition oracle")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--target", required=True,
                    help='JSON {"alpha": [...], "beta": [[...]], "epsErr": x, "delta": y}')
    sp.add_argument("--backend", choices=BACKENDS, default="exact")
    common(sp)
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("gen", help="generate an instance")
    sp.add_argument("--kind", required=True,
                    choices=("random", "metric", "clique-augment", "path-augment",
                             "complement", "hccpm"))
    sp.add_argument("--n", type=int)
    sp.add_argument("--density", type=float, default=1.0)
    sp.add_argument("--complementary", action="store_true")
    sp.add_argument("--input", help="source instance for the transformations")
    sp.add_argument("--path-len", type=int, default=None)
    sp.add_argument("--points", help="JSON array of coordinates (metric)")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--similarity", choices=("linearRamp", "inverse", "gaussian"),
                    default="linearRamp")
    sp.add_argument("--sigma", type=float, default=1.0)
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="run a property battery, CSV out")
    sp.add_argument("--suite", choices=sorted(bench_mod.SUITES), required=True)
    sp.add_argument("--scale", type=float, default=1.0, help="multiply trial counts")
    common(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hcforge {args.command}: {exc}", file=sys.stderr)
        return 2
    except (HcError, OSError, ValueError) as exc:
        print(f"hcforge {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

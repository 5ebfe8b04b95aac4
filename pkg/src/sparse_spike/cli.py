"""Command-line interface.

Subcommands: ``gen`` writes an instance file, ``recover`` runs one
algorithm on one instance and prints the result as JSON, ``sweep``
turns a JSON config into a CSV of Monte-Carlo trials, ``bench`` prints
an enumeration-count vs wall-time table.

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from . import io as instance_io
from . import models
from .harness import (ALGORITHMS, EIGENPROBLEM_GUARD, ConfigError,
                      SweepConfig, estimated_eigenproblems, rows_to_csv,
                      run_algorithm, run_sweep, summarize)


def _add_gen(sub) -> None:
    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--model", required=True, choices=models.MODELS)
    p.add_argument("-d", type=int, required=True, help="dimension")
    p.add_argument("-k", type=int, required=True, help="sparsity")
    p.add_argument("-n", type=int, help="samples (wishart, planted-vector)")
    p.add_argument("--signal", type=float, default=1.0,
                   help="beta or lambda (ignored for planted-vector)")
    p.add_argument("--flat", action=argparse.BooleanOptionalAction,
                   default=True, help="flat +-1/sqrt(k) spike entries")
    p.add_argument("--noise-family", default="cauchy",
                   choices=("gaussian", "cauchy", "scaled-rademacher"))
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--adversary", choices=models.ADVERSARY_KINDS)
    p.add_argument("--strength", type=float, default=0.0,
                   help="adversary strength (max column norm, or "
                        "entrywise for the wigner bias kind)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True,
                   help=".npz container or JSON-header binary")


def _add_recover(sub) -> None:
    p = sub.add_parser("recover", help="run one algorithm on an instance file")
    p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-t", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--engine", default="batched", choices=("batched", "looped"))
    p.add_argument("--sdp-iters", type=int, default=2000)
    p.add_argument("--huber-iters", type=int, default=600)
    p.add_argument("--force", action="store_true",
                   help="ignore the eigenproblem budget guard")


def _add_sweep(sub) -> None:
    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: config value, or "
                        "SPARSE_SPIKE_THREADS)")
    p.add_argument("--force", action="store_true")


def _add_bench(sub) -> None:
    p = sub.add_parser("bench", help="enumeration count vs wall time")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("-t", type=int, required=True)
    p.add_argument("-n", type=int, default=None, help="samples (default 2d)")
    p.add_argument("-k", type=int, default=None, help="sparsity (default t)")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")


def _threads_default(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("SPARSE_SPIKE_THREADS")
    return int(env) if env else None


def _cmd_gen(args) -> int:
    spike = models.gen_sparse_spike(args.d, args.k, args.flat, args.seed)
    if args.model == "wishart":
        if not args.n:
            raise ConfigError("wishart requires -n")
        inst = models.gen_wishart(args.n, spike, args.signal, args.seed)
    elif args.model == "wigner":
        inst = models.gen_wigner(spike, args.signal, args.seed)
    elif args.model == "planted-vector":
        if not args.n:
            raise ConfigError("planted-vector requires -n")
        inst = models.gen_planted_vector(args.n, spike, args.seed)
    else:
        noise = models.NoiseSpec(args.noise_family, args.noise_scale)
        inst = models.gen_symmetric(spike, args.signal, noise, args.seed)
    if args.adversary:
        inst = models.make_adversary(inst, args.adversary, args.strength,
                                     args.seed)
    instance_io.save_instance(args.out, inst)
    print(json.dumps({"written": args.out, "model": inst.model,
                      "shape": list(inst.data.shape),
                      "signal": inst.signal, "seed": inst.seed}))
    return 0


def _cmd_recover(args) -> int:
    inst = instance_io.load_instance(args.infile)
    cfg = SweepConfig(
        model=inst.model, d=inst.spike.dim, k=args.k,
        n=inst.n if inst.n is not None else None,
        t=args.t, delta=args.delta, engine=args.engine,
        sdp_iters=args.sdp_iters, huber_iters=args.huber_iters,
        signals=[inst.signal if inst.signal > 0 else 1.0],
    )
    if args.algorithm in ("enumerate", "enumerate-robust", "lbf"):
        estimate = estimated_eigenproblems(cfg)
        if estimate > EIGENPROBLEM_GUARD and not args.force:
            raise ConfigError(
                f"about {estimate:.2e} masked eigenproblems; "
                f"pass --force to run anyway")
    result = run_algorithm(args.algorithm, inst, cfg, inst.signal)
    print(json.dumps({
        "algorithm": args.algorithm,
        "correlation": result.correlation,
        "candidates_evaluated": result.candidates_evaluated,
        "patterns_enumerated": result.patterns_enumerated,
        "wall_time": result.wall_time,
        "flags": list(result.flags),
        "estimate": [float(x) for x in result.estimate],
    }))
    return 0


def _cmd_sweep(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = SweepConfig.from_json(fh.read())
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from err
    estimate = estimated_eigenproblems(cfg)
    if estimate > EIGENPROBLEM_GUARD and not args.force:
        raise ConfigError(f"about {estimate:.2e} masked eigenproblems per "
                          f"trial; pass --force to run anyway")
    print(cfg.resolved_json())
    rows = run_sweep(cfg, threads=_threads_default(args))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
    for (alg, signal), rate in sorted(summarize(rows).items()):
        print(f"success[{alg} @ {signal:g}] = {rate:.3f}")
    print(f"rows written: {len(rows)} -> {args.out}")
    return 0


def _cmd_bench(args) -> int:
    from .recovery import RecoverConfig, pattern_count, r_grid, recover

    n = args.n if args.n is not None else 2 * args.d
    k = args.k if args.k is not None else max(args.t, int(math.isqrt(args.d)))
    patterns = pattern_count(args.d, args.t)
    grid = len(r_grid(n))
    if patterns * grid > EIGENPROBLEM_GUARD and not args.force:
        raise ConfigError(f"about {patterns * grid:.2e} masked eigenproblems; "
                          f"pass --force to run anyway")
    spike = models.gen_sparse_spike(args.d, k, True, args.seed)
    inst = models.gen_wishart(n, spike, args.beta, args.seed)
    start = time.perf_counter()
    result = recover(inst, k, args.t, delta=0.05, config=RecoverConfig())
    wall = time.perf_counter() - start
    print(f"{'d':>6} {'n':>6} {'t':>3} {'patterns':>10} {'grid':>5} "
          f"{'candidates':>11} {'seconds':>9}")
    print(f"{args.d:>6} {n:>6} {args.t:>3} {patterns:>10} {grid:>5} "
          f"{result.candidates_evaluated:>11} {wall:>9.2f}")
    assert result.patterns_enumerated == patterns
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="sparse-spike")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_recover(sub)
    _add_sweep(sub)
    _add_bench(sub)
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "recover":
            return _cmd_recover(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_bench(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Exit codes: 0 success (cycle found or verified), 2 sound negative outcome or
stage failure, 3 input error, 4 budget exhausted.  ``TIGHTHAM_THREADS`` sets
the number of worker processes for robust extraction.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .constructions import KINDS, extremal_example, min_degrees, random_hypergraph
from .hypergraph import Hypergraph3

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 2, 3, 4


class InputError(Exception):
    pass


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _load_h3(path: str) -> Hypergraph3:
    try:
        return io.read_h3(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    except io.FormatError as e:
        raise InputError(f"{path}: {e}") from e


def _load_g2(path: str):
    try:
        return io.parse_g2(Path(path).read_bytes())
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    except io.FormatError as e:
        raise InputError(f"{path}: {e}") from e


def cmd_gen(args) -> int:
    if args.n < 0:
        raise InputError("n must be non-negative")
    if args.kind == "complete":
        H = Hypergraph3.complete(args.n)
    elif args.kind == "random":
        H = random_hypergraph(args.n, args.p, args.seed)
    else:
        H = extremal_example(args.kind, args.n)
    data = io.serialize_h3(H)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("ascii"))
    return EXIT_OK


def _write_cycle(args, seq) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_bytes(io.serialize_cycle(seq))


def cmd_solve_exact(args) -> int:
    from .oracle import BudgetExceeded, find_tight_ham_cycle

    H = _load_h3(args.inp)
    try:
        cyc = find_tight_ham_cycle(H, args.max_states)
    except BudgetExceeded as e:
        _emit(args, {"outcome": "budget", "explored": e.explored}, f"budget exhausted after {e.explored} states")
        return EXIT_BUDGET
    if cyc is None:
        _emit(args, {"outcome": "none"}, "no tight Hamiltonian cycle")
        return EXIT_FAIL
    _write_cycle(args, cyc.seq)
    _emit(args, {"outcome": "cycle", "cycle": list(cyc.seq)}, " ".join(map(str, cyc.seq)))
    return EXIT_OK


def cmd_solve_absorb(args) -> int:
    from .pipeline import PipelineConfig, run_pipeline

    H = _load_h3(args.inp)
    cfg = PipelineConfig(seed=args.seed, mode=args.mode, M=args.M, m=args.m, min_n=args.min_n)
    if args.theta_star is not None:
        cfg.theta_star = args.theta_star
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.budget is not None:
        cfg.time_budget_s = args.budget
    res = run_pipeline(H, cfg)
    if res.ok:
        _write_cycle(args, res.cycle.seq)
    if args.report:
        Path(args.report).write_text(json.dumps(res.to_json(), indent=2, sort_keys=True) + "\n")
    text = " ".join(map(str, res.cycle.seq)) if res.ok else f"stage failure in {res.stage}: {res.diagnosis}"
    _emit(args, res.to_json(), text)
    if res.ok:
        return EXIT_OK
    return EXIT_BUDGET if res.budget_exceeded else EXIT_FAIL


def _robust_one(H: Hypergraph3, v: int, args) -> dict:
    from .robust import check_inseparable, check_robust, extract_robust_subgraph

    c = extract_robust_subgraph(H.link_graph(v), args.alpha)
    mode = "exhaustive" if c.R.order <= 22 else ("sampled", args.samples)
    ins = check_inseparable(c.R, c.mu, mode, seed=args.seed) if c.R.order else None
    rob = check_robust(c.R, args.beta, args.ell, pair_budget=args.pairs, seed=args.seed) if c.R.order >= 2 else None
    return {
        "vertex": v,
        "U": [u for u in range(H.n) if (c.U >> u) & 1],
        "edges": c.R.num_edges,
        "mu": c.mu,
        "eta": c.eta,
        "partition_sizes": [bin(p).count("1") for p in c.partition],
        "peeled": c.peeled,
        "crossing": c.crossing,
        "inseparable": ins.status if ins else None,
        "beta_observed": rob.beta_observed if rob else None,
        "robust": rob.robust if rob else None,
        "trace": c.trace,
    }


def cmd_robust(args) -> int:
    H = _load_h3(args.inp)
    if args.all:
        vs = list(range(H.n))
    else:
        if args.vertex is None:
            raise InputError("give --vertex or --all")
        if not 0 <= args.vertex < H.n:
            raise InputError(f"vertex {args.vertex} out of range")
        vs = [args.vertex]
    rows = [_robust_one(H, v, args) for v in vs]
    payload = rows[0] if len(rows) == 1 and not args.all else {"vertices": rows}
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if args.all:
        text = "\n".join(f"{r['vertex']}: |U|={len(r['U'])} edges={r['edges']} robust={r['robust']}" for r in rows)
    else:
        text = "\n".join(f"{k}: {v}" for k, v in payload.items())
    _emit(args, payload, text)
    return EXIT_OK


def cmd_absorbers(args) -> int:
    from .absorb import find_v_absorbers
    from .connect import RobustFamily

    H = _load_h3(args.inp)
    if not 0 <= args.vertex < H.n:
        raise InputError(f"vertex {args.vertex} out of range")
    fam = RobustFamily.from_hypergraph(H, args.alpha)
    found = find_v_absorbers(H, fam, args.vertex, args.zeta_star, args.limit, frac=args.frac, seed=args.seed)
    rows = [list(t.vertices) for t in found]
    _emit(args, {"vertex": args.vertex, "absorbers": rows}, "\n".join(" ".join(map(str, r)) for r in rows) or "none")
    return EXIT_OK if rows else EXIT_FAIL


def cmd_count_paths(args) -> int:
    from .oracle import CapExceeded, count_paths, count_walks

    G = _load_g2(args.inp)
    for v in (args.x, args.y):
        if not 0 <= v < G.n:
            raise InputError(f"vertex {v} out of range")
    try:
        if args.walks:
            val = count_walks(G, args.x, args.y, args.length)
        else:
            val = count_paths(G, args.x, args.y, args.length, cap=args.cap)
    except CapExceeded as e:
        _emit(args, {"error": str(e)}, str(e))
        return EXIT_BUDGET
    _emit(args, {"count": val}, str(val))
    return EXIT_OK


def cmd_matching(args) -> int:
    from .oracle import max_matching_size

    H = _load_h3(args.inp)
    r = max_matching_size(H, cap=args.cap)
    _emit(args, {"size": r.size, "exact": r.exact}, f"{r.size}{'' if r.exact else ' (lower bound)'}")
    return EXIT_OK if r.exact else EXIT_BUDGET


def cmd_longest_path(args) -> int:
    from .oracle import CapExceeded, longest_path

    G = _load_g2(args.inp)
    try:
        val = longest_path(G, cap=args.cap)
    except CapExceeded as e:
        _emit(args, {"error": str(e)}, str(e))
        return EXIT_BUDGET
    _emit(args, {"length": val}, str(val))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .pipeline import certify_cycle

    H = _load_h3(args.inp)
    try:
        seq = io.parse_cycle(Path(args.cycle).read_bytes())
    except OSError as e:
        raise InputError(f"cannot read {args.cycle}: {e}") from e
    except io.FormatError as e:
        raise InputError(f"{args.cycle}: {e}") from e
    cert = certify_cycle(H.n, H.edges, seq)
    _emit(args, cert, "accepted" if cert["accepted"] else f"rejected: {cert['reason']}")
    return EXIT_OK if cert["accepted"] else EXIT_FAIL


def cmd_report(args) -> int:
    H = _load_h3(args.inp)
    if H.n < 2:
        raise InputError("need at least two vertices")
    d, d2 = min_degrees(H)
    half = H.n * (H.n - 1) / 2
    payload = {
        "n": H.n,
        "edges": H.m,
        "min_degree": d,
        "min_pair_degree": d2,
        "min_degree_ratio": d / half if half else 0.0,
        "above_5_9": d >= (5 / 9) * H.n * H.n / 2,
    }
    _emit(args, payload, "\n".join(f"{k}: {v}" for k, v in payload.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tightham", description="Tight Hamiltonian cycles in 3-uniform hypergraphs.")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    sub = ap.add_subparsers(dest="cmd", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    p = sub.add_parser("gen", help="write an instance in .h3 format")
    p.add_argument("--kind", choices=[*KINDS, "random", "complete"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.85)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("solve-exact", help="exhaustive search for a tight Hamiltonian cycle")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--max-states", type=int, default=20_000_000)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_solve_exact)

    p = sub.add_parser("solve-absorb", help="run the absorption pipeline")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["desk", "faithful"], default="desk")
    p.add_argument("--theta-star", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--M", type=int, default=8)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--min-n", type=int, default=40)
    p.add_argument("--budget", type=float, help="wall-clock budget in seconds")
    p.add_argument("--out", help="write the cycle here")
    p.add_argument("--report", help="write the JSON stage report here")
    p.set_defaults(fn=cmd_solve_absorb)

    p = sub.add_parser("robust", help="robust subgraph of one link graph")
    p.add_argument("--in", dest="inp", required=True)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--vertex", type=int)
    which.add_argument("--all", action="store_true")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--ell", type=int, default=3)
    p.add_argument("--pairs", type=int, default=500)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_robust)

    p = sub.add_parser("absorbers", help="list v-absorbers")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--vertex", type=int, required=True)
    p.add_argument("--limit", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--zeta-star", type=float, default=0.25)
    p.add_argument("--frac", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_absorbers)

    p = sub.add_parser("count-paths", help="paths (or walks) between two vertices of a .g2 graph")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--walks", action="store_true")
    p.add_argument("--cap", type=int, default=7)
    p.set_defaults(fn=cmd_count_paths)

    p = sub.add_parser("matching", help="maximum number of disjoint edges")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--cap", type=int, default=21)
    p.set_defaults(fn=cmd_matching)

    p = sub.add_parser("longest-path", help="longest path length of a .g2 graph")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--cap", type=int, default=20)
    p.set_defaults(fn=cmd_longest_path)

    p = sub.add_parser("verify", help="check a cycle file against an instance")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--cycle", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("report", help="degree statistics of an instance")
    p.add_argument("--in", dest="inp", required=True)
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        return args.fn(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

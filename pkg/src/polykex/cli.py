"""Command-line entry point: ``polykex <command> [options]``.

Exit codes: 0 success, 1 protocol failure (no unique key), 2 invalid
parameters or usage, 3 transport or wire errors.
"""

from __future__ import annotations

import argparse
import sys
from types import SimpleNamespace

from . import analysis, wire
from .errors import (
    ExhaustedRestarts,
    InvalidParams,
    MalformedMessage,
    TransportError,
    WireError,
)
from .protocol import PROPOSED_Q, Params, key_digest, key_to_bytes, run_session
from .solver import DEFAULT_NODE_LIMIT

EXIT_OK, EXIT_FAILURE, EXIT_PARAMS, EXIT_TRANSPORT = 0, 1, 2, 3


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("parameters (default: the proposed set)")
    g.add_argument("--q", type=int, default=PROPOSED_Q, help="field size (prime)")
    g.add_argument("--p", type=int, default=19, help="key alphabet size, 1 < p < q")
    g.add_argument("--n", type=int, default=32, help="number of variables")
    g.add_argument("--m", type=int, default=2, help="degree of psi and c")
    g.add_argument("--d", type=int, default=1, help="degree of f")
    g.add_argument("--l", type=int, default=1, dest="ell", help="number of f polynomials")
    common.add_argument("--seed", default="0", help="root seed (any string)")
    common.add_argument("--format", choices=("table", "records"), default="table")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="polykex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="one full exchange in process")
    run.add_argument("--max-restarts", type=int, default=8)
    run.add_argument("--limit", type=int, default=DEFAULT_NODE_LIMIT, help="search node limit")
    run.add_argument("--reveal-key", action="store_true")

    mc = sub.add_parser("montecarlo", parents=[common], help="single-attempt success statistics")
    mc.add_argument("--trials", type=int, default=1000)
    mc.add_argument("--oracle-check", action="store_true", help="cross-check with brute force")
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--limit", type=int, default=DEFAULT_NODE_LIMIT)
    mc.add_argument("--sweep-l", type=_int_list, help="comma-separated ell values")
    mc.add_argument("--sweep-q", type=_int_list, help="comma-separated q values")
    mc.add_argument("--confidence", type=float, default=0.99)

    sub.add_parser("bound", parents=[common], help="failure probability bound")

    cs = sub.add_parser("commsize", parents=[common], help="communication cost of one execution")
    cs.add_argument("--variant", choices=[v.value for v in analysis.Variant], default="proposed")

    sub.add_parser("security", parents=[common], help="generic attack cost estimates")

    serve = sub.add_parser("serve", parents=[common], help="listen and play Bob")
    serve.add_argument("--listen", default="127.0.0.1:7465", metavar="HOST:PORT")
    serve.add_argument("--attempt", type=int, default=0)
    serve.add_argument("--limit", type=int, default=DEFAULT_NODE_LIMIT)
    serve.add_argument("--timeout", type=float, default=60.0)
    serve.add_argument("--reveal-key", action="store_true")

    conn = sub.add_parser("connect", parents=[common], help="connect and play Alice")
    conn.add_argument("--connect", default="127.0.0.1:7465", metavar="HOST:PORT", dest="address")
    conn.add_argument("--attempt", type=int, default=0)
    conn.add_argument("--timeout", type=float, default=60.0)
    conn.add_argument("--reveal-key", action="store_true")
    return parser


def _params(args, **override) -> Params:
    fields = dict(q=args.q, p=args.p, n=args.n, m=args.m, d=args.d, ell=args.ell)
    fields.update(override)
    return Params(**fields)


def _header(params, seed) -> str:
    items = params.as_dict() if isinstance(params, Params) else params
    return "# " + " ".join(f"{k}={v}" for k, v in items.items()) + f" seed={seed}"


def _emit(args, record: dict, lines: list):
    if args.format == "records":
        print(analysis.to_json(record))
    else:
        print(_header(record["params"], record["seed"]))
        for line in lines:
            print(line)


def _kv(pairs) -> list:
    width = max(len(k) for k, _ in pairs)
    return [f"{k.ljust(width)}  {v}" for k, v in pairs]


def _key_fields(key, p, reveal):
    out = {"key_digest": key_digest(key, p)}
    if reveal:
        out["key"] = list(key)
        out["key_hex"] = key_to_bytes(key, p).hex()
    return out


def cmd_run(args) -> int:
    params = _params(args)
    try:
        result = run_session(params, args.seed, args.max_restarts, args.limit)
        status = EXIT_OK
    except ExhaustedRestarts as exc:
        result = SimpleNamespace(
            transcripts=exc.transcripts, outcome=exc.transcripts[-1].outcome,
            attempts=len(exc.transcripts), rounds=2 * len(exc.transcripts), key=None,
        )
        status = EXIT_FAILURE
    last = result.transcripts[-1]
    frames = wire.transcript_frames(last)
    record = {
        "kind": "run",
        "params": params.as_dict(),
        "seed": args.seed,
        "success": status == EXIT_OK,
        "attempts": result.attempts,
        "rounds": result.rounds,
        "bytes": {k: len(fr) for k, fr in zip("fcu", frames)},
        "candidates": last.outcome.n_candidates,
        "survivors": last.outcome.n_survivors,
        "nodes_visited": last.outcome.nodes_visited,
        "reason": last.outcome.reason,
    }
    if status == EXIT_OK:
        record.update(_key_fields(result.key, params.p, args.reveal_key))
        record["keys_equal"] = last.alice_key == last.bob_key
    pairs = [
        ("outcome", "success" if status == EXIT_OK else "failure"),
        ("attempts", record["attempts"]),
        ("rounds", record["rounds"]),
        ("bytes f/c/u", "/".join(str(record["bytes"][k]) for k in "fcu")),
        ("reason", record["reason"]),
    ]
    if status == EXIT_OK:
        pairs.append(("key digest", record["key_digest"]))
        if args.reveal_key:
            pairs.append(("key", record["key"]))
    _emit(args, record, _kv(pairs))
    return status


def cmd_montecarlo(args) -> int:
    if args.sweep_l and args.sweep_q:
        raise InvalidParams("use --sweep-l or --sweep-q, not both")
    if args.sweep_l:
        sets = [_params(args, ell=v) for v in args.sweep_l]
    elif args.sweep_q:
        sets = [_params(args, q=v) for v in args.sweep_q]
    else:
        sets = [_params(args)]
    records = []
    for params in sets:
        stats = analysis.monte_carlo(
            params, args.trials, args.seed, args.oracle_check, args.workers, args.limit,
            strict=False,
        )
        records.append(analysis.montecarlo_record(params, args.seed, stats, args.confidence))
    if args.format == "records":
        for r in records:
            print(analysis.to_json(r))
    else:
        print(f"# trials={args.trials} seed={args.seed} confidence={args.confidence}")
        cols = [
            ("q", lambda r: r["params"]["q"]), ("p", lambda r: r["params"]["p"]),
            ("n", lambda r: r["params"]["n"]), ("m", lambda r: r["params"]["m"]),
            ("d", lambda r: r["params"]["d"]), ("l", lambda r: r["params"]["l"]),
            ("success", "successes"), ("failure", "failures"),
            ("ratio", lambda r: f"{r['failure_ratio']:.3e}"),
            ("ci", lambda r: "[{:.2e}, {:.2e}]".format(*r["failure_ci"])),
            ("bound", lambda r: f"{r['bound']:.3e}"),
            ("wrong keys", "wrong_keys"), ("oracle mism.", "oracle_mismatches"),
            ("mean nodes", lambda r: f"{r['mean_nodes_visited']:.1f}"),
        ]
        print(analysis.format_table(records, cols))
    bad = any(r["wrong_keys"] or r["oracle_mismatches"] or r["key_lost"] for r in records)
    return EXIT_FAILURE if bad else EXIT_OK


def cmd_bound(args) -> int:
    params = _params(args)
    r = analysis.bound_record(params, args.seed)
    _emit(args, r, _kv([
        ("alpha", f"{r['alpha']:.6g}"),
        ("bound", r["bound_sci"]),
        ("log10", f"{r['log10_bound']:.4f}"),
        ("valid", r["valid"]),
    ]))
    return EXIT_OK


def cmd_commsize(args) -> int:
    if args.variant == "akiyama":
        # the prior protocol's reference q = 9 is a prime power, so no Params check
        for name in ("q", "n", "m", "d"):
            if getattr(args, name) < 1:
                raise InvalidParams(f"{name} must be positive")
        params = SimpleNamespace(q=args.q, p=args.p, n=args.n, m=args.m, d=args.d, ell=1)
    else:
        params = _params(args)
    r = analysis.commsize_record(params, args.variant, args.seed)
    e = r["elements"]
    _emit(args, r, _kv([
        ("variant", r["variant"]),
        ("elements f/g/c/u", f"{e['f']}/{e['g']}/{e['c']}/{e['u']}"),
        ("total elements", r["total_elements"]),
        ("total bits", f"{r['total_bits']:.4g}"),
        ("bytes on wire", r["bytes_on_wire"]),
    ]))
    return EXIT_OK


def cmd_security(args) -> int:
    params = _params(args)
    r = analysis.security_record(params, args.seed)
    _emit(args, r, _kv([
        ("groebner log2", f"{r['groebner_log2']:.2f}"),
        ("linalg log2", f"{r['linalg_log2']:.2f}"),
        ("exhaustive log2", f"{r['exhaustive_log2']:.2f}"),
        ("omega / d_reg / N", f"{r['omega']} / {r['d_reg']} / {r['solution_dim']}"),
        (f"all > {r['target_log2']}", r["all_secure"]),
    ]))
    return EXIT_OK


def _stream_report(args, params, result: wire.StreamResult) -> int:
    record = {
        "kind": result.role.value,
        "params": params.as_dict(),
        "seed": args.seed,
        "attempt": args.attempt,
        "bytes": result.bytes_per_message,
        "success": result.success,
    }
    if result.key is not None:
        record.update(_key_fields(result.key, params.p, args.reveal_key))
    pairs = [("role", result.role.value), ("bytes f/c/u", "/".join(
        str(record["bytes"][k]) for k in "fcu"))]
    if result.outcome is not None:
        pairs.append(("outcome", "success" if result.success else "failure"))
        pairs.append(("reason", result.outcome.reason))
    if result.key is not None:
        pairs.append(("key digest", record["key_digest"]))
    _emit(args, record, _kv(pairs))
    return EXIT_FAILURE if result.success is False else EXIT_OK


def cmd_serve(args) -> int:
    params = _params(args)
    host, port = wire.parse_address(args.listen)
    server = wire.listen(host, port)
    try:
        print(f"listening on {host}:{server.getsockname()[1]}", file=sys.stderr, flush=True)
        result = wire.serve_once(server, params, args.seed, args.attempt, args.limit, args.timeout)
    finally:
        server.close()
    return _stream_report(args, params, result)


def cmd_connect(args) -> int:
    params = _params(args)
    host, port = wire.parse_address(args.address)
    result = wire.connect(host, port, params, args.seed, args.attempt, args.timeout)
    return _stream_report(args, params, result)


COMMANDS = {
    "run": cmd_run,
    "montecarlo": cmd_montecarlo,
    "bound": cmd_bound,
    "commsize": cmd_commsize,
    "security": cmd_security,
    "serve": cmd_serve,
    "connect": cmd_connect,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvalidParams as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except (WireError, MalformedMessage, TransportError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())

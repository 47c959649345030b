"""Operator command line tying the pipeline together.

Commands:
  sample    MHRW crawl from a seed user -> snapshot + visit counts
  recrawl   re-fetch a snapshot's visited users -> later snapshot
  stats     network statistics of a snapshot
  synth     deterministic synthetic t1/t2 snapshot pair
  evaluate  offline report + precision curves from a t1/t2 pair
  serve     run the online-experiment HTTP service

Every command is deterministic given --seed and a simulated backend
(--backend sim --fixture SNAPSHOT). All per-component RNG seeds are
fanned out from the one --seed value by hashed derivation. Exit codes:
0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from fedirec.evaluation import (
    EvalTask,
    SyntheticParams,
    format_curves,
    format_report,
    generate_synthetic_temporal_graph,
    make_default_systems,
    run_offline,
)
from fedirec.federation import (
    MAX_REQUESTS_PER_SECOND,
    DocumentCache,
    FederationClient,
    FederationError,
    LiveBackend,
    RateLimiter,
    SimulatedBackend,
)
from fedirec.graph import (
    GraphSnapshot,
    SnapshotFormatError,
    compute_stats,
    read_snapshot,
    utcnow,
    write_snapshot,
)
from fedirec.interleaving import OnlineExperiment
from fedirec.sampling import WalkConfig, mhrw_run, write_visit_counts
from fedirec.seeds import derive_seed
from fedirec.users import InvalidUserRef, UserRef


class UsageError(Exception):
    """Bad invocation detected after argparse (exit code 1)."""


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("live", "sim"), default="sim",
                   help="data source: live federation or simulated fixture")
    p.add_argument("--fixture", metavar="PATH",
                   help="snapshot file answering fetches when --backend sim")
    p.add_argument("--rate-limit", type=float, default=MAX_REQUESTS_PER_SECOND,
                   metavar="N", help="requests per second, hard-capped at 10")
    p.add_argument("--cache-dir", metavar="PATH",
                   help="persistent document cache directory (default: in-memory)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedirec",
        description="follow-recommendation pipeline for federated social networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="MHRW crawl from a seed user")
    p.add_argument("seed_user", help="user reference, e.g. alice@example.social")
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="PATH", help="snapshot output path")
    p.add_argument("--counts", metavar="PATH",
                   help="visit-count sidecar path (default: OUT.counts)")
    _add_backend_flags(p)

    p = sub.add_parser("recrawl", help="re-fetch a snapshot's visited users")
    p.add_argument("snapshot", metavar="T1_SNAPSHOT")
    p.add_argument("--out", required=True, metavar="PATH")
    _add_backend_flags(p)

    p = sub.add_parser("stats", help="network statistics of a snapshot")
    p.add_argument("snapshot", metavar="SNAPSHOT")

    p = sub.add_parser("synth", help="generate a synthetic t1/t2 snapshot pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--communities", type=int, default=20)
    p.add_argument("--new-follows", type=int, default=6)
    p.add_argument("--out", required=True, metavar="PREFIX",
                   help="writes PREFIX.t1 and PREFIX.t2")

    p = sub.add_parser("evaluate", help="offline evaluation of a t1/t2 pair")
    p.add_argument("t1", metavar="T1_SNAPSHOT")
    p.add_argument("t2", metavar="T2_SNAPSHOT")
    p.add_argument("--k", type=int, default=100, help="recommendation list length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--systems", metavar="IDS",
                   help="comma-separated subset of: random,cf-following,"
                        "cf-followers,cf-combined,ppr (default: all)")
    p.add_argument("--out", metavar="PATH", help="report file (default: stdout only)")
    p.add_argument("--curves", metavar="PATH",
                   help="precision-curve data file (default: OUT.curves)")

    p = sub.add_parser("serve", help="run the online experiment service")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=200, help="ego-walk iterations")
    p.add_argument("--k", type=int, default=10, help="recommendations per session")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--session-dir", metavar="PATH",
                   help="directory for append-only session event logs")
    p.add_argument("--static-dir", metavar="PATH",
                   help="serve this directory (built web UI) at /")
    _add_backend_flags(p)
    return parser


def make_client(args: argparse.Namespace) -> FederationClient:
    limiter = RateLimiter(rate=args.rate_limit)
    cache = DocumentCache(args.cache_dir) if args.cache_dir else None
    if args.backend == "sim":
        if not args.fixture:
            raise UsageError("--backend sim requires --fixture PATH")
        backend = SimulatedBackend(read_snapshot(args.fixture), limiter=limiter)
    else:
        backend = LiveBackend(limiter)
    return FederationClient(backend, cache=cache)


def cmd_sample(args: argparse.Namespace) -> int:
    try:
        seed_user = UserRef.parse(args.seed_user)
    except InvalidUserRef as exc:
        raise UsageError(str(exc)) from exc
    client = make_client(args)
    cfg = WalkConfig(
        seed_node=seed_user,
        iterations=args.iterations,
        rng_seed=derive_seed(args.seed, "mhrw"),
    )
    result, snapshot = mhrw_run(cfg, client)
    write_snapshot(snapshot, args.out)
    counts_path = args.counts or f"{args.out}.counts"
    write_visit_counts(result, counts_path)
    print(
        f"walked {args.iterations} steps from {seed_user}: "
        f"{snapshot.n_nodes} nodes, {len(snapshot.visited)} visited, "
        f"{snapshot.n_edges} edges, {result.fetch_count} fetches"
    )
    if result.dead_candidates:
        print(
            f"skipped {len(result.dead_candidates)} unreachable/disallowed users: "
            + ", ".join(u.canonical for u in sorted(result.dead_candidates)),
            file=sys.stderr,
        )
    print(f"wrote {args.out} and {counts_path}")
    return 0


def cmd_recrawl(args: argparse.Namespace) -> int:
    t1 = read_snapshot(args.snapshot)
    client = make_client(args)
    t2 = GraphSnapshot(utcnow())
    dropped = []
    for user in sorted(t1.visited):
        try:
            record = client.fetch_neighbors(user)
        except FederationError:
            dropped.append(user)
            continue
        t2.mark_visited(user)
        for v in record.following:
            t2.add_edge(user, v)
        for w in record.followers:
            t2.add_edge(w, user)
    write_snapshot(t2, args.out)
    print(
        f"recrawled {len(t1.visited)} users: {len(t2.visited)} still present, "
        f"{len(dropped)} dropped"
    )
    if dropped:
        print("dropped: " + ", ".join(u.canonical for u in dropped), file=sys.stderr)
    print(f"wrote {args.out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    g = read_snapshot(args.snapshot)
    s = compute_stats(g)
    print(f"snapshot {args.snapshot} ({g.timestamp.isoformat()})")
    print(f"nodes                        {s.n_nodes}")
    print(f"visited                      {s.n_visited}")
    print(f"edges                        {s.n_edges}")
    print(f"assortativity                {s.assortativity:.4f}")
    print(f"avg degree (|E|/|V|)         {s.avg_degree:.4f}")
    print(f"avg undirected deg (visited) {s.avg_undirected_degree_visited:.4f}")
    print(f"mean clustering coefficient  {s.ncc:.4f}")
    print(f"largest SCC fraction         {s.scc_fraction:.4f}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    params = SyntheticParams(
        n_nodes=args.nodes,
        n_communities=args.communities,
        new_follows_per_user=args.new_follows,
    )
    t1, t2 = generate_synthetic_temporal_graph(params, derive_seed(args.seed, "synth"))
    write_snapshot(t1, f"{args.out}.t1")
    write_snapshot(t2, f"{args.out}.t2")
    print(f"wrote {args.out}.t1 ({t1.n_edges} edges) and {args.out}.t2 ({t2.n_edges} edges)")
    return 0


_SYSTEM_IDS = ("random", "cf-following", "cf-followers", "cf-combined", "ppr")


def cmd_evaluate(args: argparse.Namespace) -> int:
    t1 = read_snapshot(args.t1)
    t2 = read_snapshot(args.t2)
    task = EvalTask.build(t1, t2, list_length=args.k)
    systems = make_default_systems(args.seed)
    if args.systems:
        wanted = [s.strip() for s in args.systems.split(",") if s.strip()]
        unknown = [s for s in wanted if s not in _SYSTEM_IDS]
        if unknown:
            raise UsageError(f"unknown systems: {', '.join(unknown)}")
        systems = [(sid, fn) for sid, fn in systems if sid in wanted]
    report = run_offline(task, systems)
    text = format_report(report)
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        curves_path = args.curves or f"{args.out}.curves"
        with open(curves_path, "w", encoding="utf-8") as fh:
            fh.write(format_curves(report))
        print(f"wrote {args.out} and {curves_path}")
    elif args.curves:
        with open(args.curves, "w", encoding="utf-8") as fh:
            fh.write(format_curves(report))
        print(f"wrote {args.curves}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from fedirec.service import create_app

    client = make_client(args)
    experiment = OnlineExperiment(
        client,
        master_seed=args.seed,
        session_dir=args.session_dir,
        walk_iterations=args.iterations,
    )
    if experiment.store.directory is not None:
        loaded = experiment.store.load_directory()
        if loaded:
            print(f"restored {loaded} sessions from {args.session_dir}")
    static_dir = args.static_dir if args.static_dir and os.path.isdir(args.static_dir) else None
    app = create_app(experiment, static_dir=static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


_COMMANDS = {
    "sample": cmd_sample,
    "recrawl": cmd_recrawl,
    "stats": cmd_stats,
    "synth": cmd_synth,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors; we use 1 for usage
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FederationError, SnapshotFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

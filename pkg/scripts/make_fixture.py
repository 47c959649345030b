#!/usr/bin/env python3
"""Build a small snapshot fixture for simulated-backend runs and demos.

The fixture is the t1 half of a synthetic planted-community graph, so
it has realistic structure (communities, mutual follows) at a size
where walks, the evaluation harness, and the online experiment all run
instantly. Use it as::

    python3 scripts/make_fixture.py --out demo.snap --nodes 80
    fedirec sample user00@sim.test --fixture demo.snap --out crawl.snap
    fedirec serve --fixture demo.snap --port 8000
"""

from __future__ import annotations

import argparse
import sys

from fedirec.evaluation import SyntheticParams, generate_synthetic_temporal_graph
from fedirec.graph import write_snapshot


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="snapshot output path")
    parser.add_argument("--nodes", type=int, default=80)
    parser.add_argument("--communities", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--instance", default="sim.test")
    args = parser.parse_args(argv)

    params = SyntheticParams(
        n_nodes=args.nodes,
        n_communities=args.communities,
        new_follows_per_user=0,  # only t1 is kept
        instance=args.instance,
    )
    t1, _ = generate_synthetic_temporal_graph(params, rng_seed=args.seed)
    write_snapshot(t1, args.out)
    example = sorted(t1.visited)[0]
    print(
        f"wrote {args.out}: {t1.n_nodes} nodes, {t1.n_edges} edges "
        f"(try seed user {example.canonical})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

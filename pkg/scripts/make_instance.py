#!/usr/bin/env python3
"""Emit an instance JSON file: one of the fixed demos or a seeded random draw."""

import argparse
import sys

from stochsubmax.generators import (
    partition_demo_instance,
    random_instance,
    single_item_instance,
    symmetric_pair_instance,
)
from stochsubmax.model import save_instance


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--kind",
        choices=["pair", "single", "partition", "random"],
        default="pair",
    )
    parser.add_argument("--budget", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0, help="used when --kind random")
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    if args.kind == "pair":
        instance = symmetric_pair_instance(budget=args.budget or 5)
    elif args.kind == "single":
        instance = single_item_instance(budget=args.budget or 2)
    elif args.kind == "partition":
        instance = partition_demo_instance(budget=args.budget or 6)
    else:
        instance = random_instance(args.seed)
    save_instance(instance, args.out)
    print(f"wrote {args.out}: n={instance.n} B={instance.B} budget={instance.budget}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

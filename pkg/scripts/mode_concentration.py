"""How concentrated the transmitted schedules are, and how long each is held.

Prints the share of transmitting slots taken by the two most frequent
schedules and the mean residence time, for DIS and the CSMA baseline.

    python scripts/mode_concentration.py --graph ring:6 --horizon 200000
"""

import argparse

from simplexsched.harness import ExperimentConfig, mode_residence, run_experiment, top_mode_share


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--graph", default="ring:6")
    p.add_argument("--horizon", type=int, default=200_000)
    p.add_argument("--window", type=int, default=50_000, help="final slots to inspect")
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    print("algorithm,top2_share,mode_residence,distinct_schedules")
    for algorithm in ("dis", "csma"):
        res = run_experiment(ExperimentConfig(graph=args.graph, horizon=args.horizon,
                                              algorithm=algorithm, seed=args.seed))
        codes = res.trace.tail(args.window).schedule_codes()
        print(f"{algorithm},{top_mode_share(codes):.4f},{mode_residence(codes):.2f},"
              f"{len(set(codes.tolist()))}", flush=True)


if __name__ == "__main__":
    main()

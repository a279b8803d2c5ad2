"""Steady-state queue statistics of the three schedulers on one graph.

    python scripts/delay_comparison.py --graph star:7 --seeds 1,2,3 --horizon 200000
"""

import argparse

import numpy as np

from simplexsched.harness import ALGORITHMS, ExperimentConfig, run_experiment, trend_test


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--graph", default="star:7")
    p.add_argument("--load", type=float, default=0.95)
    p.add_argument("--horizon", type=int, default=200_000)
    p.add_argument("--seeds", default="1,2,3,4,5")
    args = p.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]

    print("algorithm,seed,max_queue,mean_queue,gap,trend_p")
    medians = {}
    for algorithm in ALGORITHMS:
        maxima = []
        for seed in seeds:
            res = run_experiment(ExperimentConfig(graph=args.graph, load=args.load,
                                                  horizon=args.horizon, algorithm=algorithm,
                                                  seed=seed))
            s = res.summary
            tail = res.trace.tail(args.horizon // 2).max_queue_series()
            print(f"{algorithm},{seed},{s.max_queue},{s.mean_queue:.2f},{s.gap:.5f},"
                  f"{trend_test(tail).p_value:.3g}", flush=True)
            maxima.append(s.max_queue)
        medians[algorithm] = float(np.median(maxima))
    print()
    for algorithm, m in medians.items():
        print(f"median max queue {algorithm}: {m:.0f}")
    if medians["dis"] > 0:
        print(f"baseline / DIS ratio: {medians['csma'] / medians['dis']:.1f}")


if __name__ == "__main__":
    main()

"""Reduced benchmark grid; rerunning with the same seed is bit-identical."""

import warnings

from adjustkit.sim_bench import run_benchmark


def main():
    warnings.simplefilter("ignore")
    res = run_benchmark(
        model_ids=(1, 4),
        n_values=(400, 800),
        variants=("mn", "gc"),
        reps=25,
        seed=0,
        threads=4,
        arms=(0,),
    )
    print(res.render())
    again = run_benchmark(
        model_ids=(1, 4),
        n_values=(400, 800),
        variants=("mn", "gc"),
        reps=25,
        seed=0,
        threads=2,
        arms=(0,),
    )
    print(f"rerun with different thread count identical: {res.to_csv() == again.to_csv()}")


if __name__ == "__main__":
    main()

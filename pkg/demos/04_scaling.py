"""
How the work grows with precision
=================================

Each point repeats the solve with independent seeds and reports the mean
number of cost evaluations. The counts grow roughly linearly in log(1/eps).
"""

from vqls_heat.harness import SolveSettings, SweepConfig, run_sweep

config = SweepConfig("epsilon", (0.05, 0.02, 0.01, 0.005),
                     SolveSettings("test:c0=1,n=3"), repetitions=3, master_seed=0)
result = run_sweep(config)

for x, y, std, n in result.csv_rows():
    print(f"log10(1/eps) = {x:.2f}   mean evaluations {y:8.1f} +- {std:6.1f}   ({n} runs)")

fit = result.fit()
print(f"slope {fit['slope']:.0f} evaluations per decade, R^2 = {fit['r2']:.3f}")

# shot noise in the measured solution distribution falls like 1/sqrt(shots)
shots = run_sweep(SweepConfig("shots", (100, 400, 1600, 6400),
                              SolveSettings("test:c0=1,n=3", epsilon=0.01), repetitions=5))
print(f"log-log slope of precision vs shots: {shots.fit()['slope']:.2f}")

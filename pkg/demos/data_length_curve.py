#!/usr/bin/env python3
"""
How many hourly measurements does the 123-bus feeder need?

Sweeps the record length with common random numbers across points, so
the curve is a clean threshold rather than noise. Expect exact
recovery somewhere between 10 and 30 days of hourly data.
"""
from gridtopo import ScenarioConfig, sweep

DAYS = (5, 10, 20, 30, 60)
REPLICATES = 20

cfg = ScenarioConfig(feeder="bus123", frame="sequence", source="complex",
                     injection_seed=4, phases=False)
# n_samples counts voltage snapshots; T increments need T+1 of them
points = [24 * d + 1 for d in DAYS]
reports = sweep(cfg, "data_length", points, REPLICATES, base_seed=0, threads=4)

print(f"bus123, {REPLICATES} replicates per point")
print("days  increments  mean ER    exact runs")
for days, rep in zip(DAYS, reports):
    ers = rep.error_rates()
    exact = sum(e == 0.0 for e in ers)
    print(f"{days:4d}  {24 * days:10d}  {rep.error_rate_mean:7.3f}%"
          f"  {exact:3d}/{len(ers)}")

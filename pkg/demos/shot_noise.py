"""
How many shots?
===============

In sampled mode every expectation value is estimated from finite Born-rule
outcomes, so the reconstruction error shrinks like one over the square root
of the shot count.
"""

from krauscope import ExperimentConfig, sweep_shots

cfg = ExperimentConfig(
    kind="kraus",
    mode="sampled",
    repetitions=50,
    sweep={"axis": "shots", "values": [10_000, 40_000, 160_000]},
)
rep = sweep_shots(cfg)

for shots, rmse in zip(rep.slopes["shots"], rep.slopes["rmse"]):
    print(f"{shots:>7} shots: RMSE {rmse:.4f}")
print("slope:", round(rep.slopes["slope"], 3), "(ideal -0.5)")

# fixed seeds give the same report every time
again = sweep_shots(cfg)
print("bit-identical:", rep.to_json(include_timing=False) == again.to_json(include_timing=False))

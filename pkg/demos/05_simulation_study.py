"""A small replicated simulation study (desk-scale, a couple of minutes).

Run:  python3 demos/05_simulation_study.py
"""

import json

from treecov import MhConfig, Scenario, run_scenario

scenario = Scenario(
    p=6,
    multipliers=(5, 25),
    distributions=("normal", "t4"),
    replicates=3,
    mh=MhConfig(iterations=3000, burn_in=2000),
    fixed_truth=True,
    mean_passes=2,
    master_seed=99,
)
report = run_scenario(scenario, force=True)

print(f"ran {len(report.results)} replicate chains "
      f"in {report.elapsed_seconds:.1f}s\n")
for key, cell in report.aggregate().items():
    print(key)
    print("  median split recovery:",
          {k: round(v, 2) for k, v in cell["split_recovery_median"].items()})
    print("  median interval coverage:", round(cell["median_coverage"], 3))
    print("  median distance of mean estimate to truth:",
          round(cell["median_mean_d"], 3))

print("\nfull JSON report:")
print(json.dumps(report.to_json_dict(), indent=2)[:800], "...")

"""
The command-line tool
=====================

``tauline`` wraps the library in four subcommands. This script drives them
in a scratch directory and prints the outputs.
"""
import json
import tempfile
from pathlib import Path

from tauline.cli import main

work = Path(tempfile.mkdtemp())
scenario = {"kind": "delayed_effect", "n_per_arm": [200, 200], "rates": [[0.1]],
            "changepoint": 3, "admin_censor_time": 36, "accrual_window": 12, "seed": 42,
            "milestone": 24, "truth_times": [3, 24]}
(work / "scenario.json").write_text(json.dumps(scenario))

print("simulate ->", main(["simulate", "--input", str(work / "scenario.json"),
                           "--output", str(work / "trial.csv")]))
print("truth:", json.loads((work / "trial.truth.json").read_text())["true_eta"])

print("analyze ->", main(["analyze", "--input", str(work / "trial.csv"), "--milestone", "24",
                          "--bootstrap", "500", "--seed", "1",
                          "--output", str(work / "report.json")]))
rep = json.loads((work / "report.json").read_text())
c = rep["milestone"]["contrasts"][0]
print(f"eta contrast {c['estimate']:+.3f} CI [{c['inference']['ci_low']:+.3f}, "
      f"{c['inference']['ci_high']:+.3f}]")
print("turning point:", rep["comparisons"][0]["tau"]["turning_point"])

print("phtest ->", main(["phtest", "--input", str(work / "trial.csv"),
                         "--output", str(work / "ph.json")]))
print("PH p-value:", json.loads((work / "ph.json").read_text())["comparisons"][0]["p_value"])

# Missing milestone: the tool refuses with exit code 2.
print("analyze without --milestone ->", main(["analyze", "--input", str(work / "trial.csv")]))

"""
The command-line pipeline
=========================

Drive simulation, fitting, explanation and evaluation through the
``sepfda`` command, here invoked in-process.
"""
import json
import tempfile
from pathlib import Path

from sepfda.cli import run

work = Path(tempfile.mkdtemp())
data = work / "sim.csv"

###############################################################################
# Simulate, fit and explain
# -------------------------
run(["simulate", "--n", "100", "--p", "3", "--q", "100", "--kernel", "ou", "--eps", "0.1",
     "--outlier", "shift", "--magnitude", "15", "--seed", "7", "--out", str(data)])
run(["fit", "--data", str(data), "--estimator", "mmcd", "--seed", "7", "--out", str(work / "fit.json")])
run(["shapley", "--data", str(data), "--fit", str(work / "fit.json"), "--intervals", "4",
     "--out", str(work / "shapley.csv")])

fit = json.loads((work / "fit.json").read_text())
print("flagged:", [s for s, flag in fit["flags"].items() if flag])

###############################################################################
# Evaluate against the simulation labels
# --------------------------------------
run(["evaluate", "--fit", str(work / "fit.json"), "--labels", str(work / "sim.labels.csv"),
     "--truth", str(work / "sim.truth.json"), "--out", str(work / "report.json")])
print((work / "report.json").read_text())

"""Driving the experiment runner from Python: one run and one convergence sweep.

The same entry points back the ``swirlreg`` command:

    swirlreg run exterior_measure --out out/ext
    SWIRLREG_WORKERS=3 swirlreg sweep moving_oracle --axis resolution --values 64,128,256
"""

import json
import sys
import tempfile

from swirlreg.cli import main, sweep

out = tempfile.mkdtemp(prefix="swirlreg-")
status = main(["run", "exterior_measure", "--out", f"{out}/ext", "--set", "n_times=30"])
print(f"exit status {status}; verdict at {out}/ext/verdict.json\n")

report = sweep("moving_oracle", {"t_end": "0.9"}, "resolution", ["64", "128", "256"], f"{out}/sweep")
json.dump({k: report[k] for k in ("cells", "trend", "observed_order", "workers")}, sys.stdout, indent=2)
print()

"""A small sweep: how the slot mixing time scales with the radius in 1-d.

Mixing gets faster with r (gap grows like r^2) but each iteration needs more
slots (schedule grows like r^d). In one dimension the product falls as 1/r.

Run: python demos/03_slot_mixing_sweep.py [output.csv]
"""

import sys
from pathlib import Path

from slotmix.harness import audit_records, export, fit_slope, load_config, run_sweep

cfg = load_config(Path(__file__).with_name("sweep_1d.cfg"))
records = run_sweep(cfg)
assert not audit_records(records)

for field in ("gap", "schedule_length_lattice", "slot_mixing_time"):
    fit = fit_slope([r for r in records if r.error is None], "r", field)
    print(f"{field:>24s} ~ r^{fit.exponent:+.2f}  (stderr {fit.stderr:.2f}, R^2 {fit.r_squared:.3f})")

out = sys.argv[1] if len(sys.argv) > 1 else "sweep_1d.csv"
print("wrote", export(records, out, plot=("r", "slot_mixing_time")))

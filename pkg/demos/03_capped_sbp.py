"""A blood pressure cuff that stops reporting values above 136.

Generates a center-A-like study, fits Phase I on the first 19 days, charts the
rest and decomposes every signal.  Run with ``python demos/03_capped_sbp.py``.
"""
from datetime import date

import numpy as np

from dqchart import published
from dqchart.chart import run_chart
from dqchart.generator import FaultSpec, ScenarioConfig, generate_study, missing_fraction
from dqchart.robust import complete_case_matrix, ogk_estimate
from dqchart.ucl_sim import UclConfig, n_bar, ucl_table

cut = date(2018, 2, 12)
cfg = ScenarioConfig(published.CENTER_A_MU, published.CENTER_A_SIGMA, n=24, n_days=60,
                     q_day=1 / 6, seed=3, faults=(FaultSpec("cap", "SBP", 136.0, cut),))
data = generate_study(cfg)
_, missing = missing_fraction(data)
print(f"{len(data.days)} days, {data.n} participants, {100 * missing:.1f}% of cells missing")

phase1 = data.days[:19]
rows = complete_case_matrix(data, phase1)
est = ogk_estimate(rows, data.signs)
print(f"Phase I: {rows.shape[0]} complete rows, "
      f"{est.n_retained} kept after reweighting, n_bar = {n_bar(data, phase1)}")
print("mu_hat:", np.round(est.mu_hat, 2))

table = ucl_table(est.mu_hat, est.sigma_hat,
                  UclConfig(m=19, n_bar=n_bar(data, phase1), outer_reps=20), data.signs)
series = run_chart(data, est, table, phase1, include_phase1=False)

print(f"\nSBP capped at 136 from {cut}")
print(f"{'date':<12}{'T2':>8}{'UCL':>8}  implicated")
for pt in series.points:
    mark = "<- cap" if pt.day == cut else ""
    if pt.signal:
        who = "; ".join("+".join(s) for s in pt.myt.implicated)
        print(f"{pt.day!s:<12}{pt.t2:>8.2f}{pt.ucl:>8.2f}  {who} {mark}")
    elif mark:
        print(f"{pt.day!s:<12}{pt.t2:>8.2f}{pt.ucl:>8.2f}  {mark}")

after = [pt for pt in series.signals() if pt.day >= cut]
if after:
    delay = data.days.index(after[0].day) - data.days.index(cut)
    print(f"\nfirst signal after the cap: {after[0].day} ({delay} study days later)")
else:
    print("\nno signal after the cap in this run")

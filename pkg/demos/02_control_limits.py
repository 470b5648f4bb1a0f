"""Monte-Carlo control limits and why they sit above the chi-square quantile.

Run with ``python demos/02_control_limits.py [--full]``.  The default uses
20 outer replicates so it finishes in a few seconds; ``--full`` uses 100.
"""
import sys

from scipy import stats

from dqchart import published
from dqchart.ucl_sim import MissingScenario, UclConfig, simulate_ucl

outer = 100 if "--full" in sys.argv else 20

for name, mu, sigma, nbar, reported in [
    ("A", published.CENTER_A_MU, published.CENTER_A_SIGMA, published.CENTER_A_NBAR,
     published.CENTER_A_UCL),
    ("B", published.CENTER_B_MU, published.CENTER_B_SIGMA, published.CENTER_B_NBAR,
     published.CENTER_B_UCL),
]:
    cfg = UclConfig(m=19, n_bar=nbar, outer_reps=outer)
    ucl, se, retries = simulate_ucl(mu, sigma, None, cfg)
    print(f"center {name}: n_bar={nbar}  UCL={ucl:.2f} +- {se:.2f}  (reported {reported})")

print(f"chi2_5 0.98 quantile, no estimation error: {stats.chi2.ppf(0.98, 5):.2f}")

# Known parameters: the simulated limit collapses onto the chi-square quantile
cfg = UclConfig(m=19, n_bar=20, outer_reps=outer)
known, _, _ = simulate_ucl(published.CENTER_A_MU, published.CENTER_A_SIGMA, None, cfg,
                           estimate=False)
print(f"known parameters:                          {known:.2f}")

# Limit for the days where only BT, HR and SpO2 were measured
sub, _, _ = simulate_ucl(published.CENTER_A_MU, published.CENTER_A_SIGMA, [0, 3, 4], cfg)
print(f"\nBT+HR+SpO2 subset limit: {sub:.2f} (reported {published.CENTER_A_UCL_BT_HR_SPO2})")

# Step 1 data with participants skipping days: complete-case OGK, limit barely moves
base, _, _ = simulate_ucl(published.CENTER_A_MU, published.CENTER_A_SIGMA, None, cfg)
for q in (0.10, 0.15):
    ucl, _, _ = simulate_ucl(published.CENTER_A_MU, published.CENTER_A_SIGMA, None, cfg,
                             missing=MissingScenario(q_day=q))
    print(f"{int(q * 100)}% of participant-days absent: UCL {ucl:.2f} ({100 * (ucl / base - 1):+.1f}%)")

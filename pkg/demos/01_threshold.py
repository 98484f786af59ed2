# %% [markdown]
# Where does the energy criterion switch on?
#
# For linear diffusion in the plane the sign of E at z = 0 flips exactly at
# M = 4(p+1).  Concentrated data has a tiny moment, so the criterion for such
# data is governed by E near zero.

# %%
import numpy as np

from radialks import DiffusionLaw, Params, RadialGrid, ConcentratedBump, make_initial_data
from radialks.analysis import critical_mass_zero, optimize_p
from radialks.functionals import energy_E

law = DiffusionLaw.constant()
for p in (1.1, 1.5, 2.0, 3.0):
    Mc = critical_mass_zero(p, 2, 1.0)
    below = energy_E(0.0, Params(2, Mc - 1e-6, law, p))
    above = energy_E(0.0, Params(2, Mc + 1e-6, law, p))
    print(f"p={p:4}  4(p+1)={Mc:6.3f}  E(0) just below {below:+.2e}  just above {above:+.2e}")

# %% [markdown]
# Small p gives the smallest threshold, approaching 8 as p -> 1.  The
# optimiser scans log-spaced p and reports which values make E(mbar) < 0.

# %%
grid = RadialGrid.graded(512)
for M in (8.0, 10.0, 16.0, 100.0):
    u0 = make_initial_data(ConcentratedBump(0.005), M, 2, grid)
    p_best, scan = optimize_p(u0, Params(2, M, law, 2.0))
    feas = scan.p_values[scan.feasible]
    rng = f"[{feas.min():.3g}, {feas.max():.3g}]" if feas.size else "none"
    print(f"M={M:6.1f}  best p={p_best:.3g}  feasible p in {rng}")

# %% [markdown]
# Three dimensions, critical exponent alpha = 1/3: the threshold at z = 0 only
# involves c1.

# %%
print("n=3, alpha=1/3, c1=1, p=2:", round(critical_mass_zero(2.0, 3, 1.0), 4))
ps = np.linspace(1.05, 4, 6)
print("  over p:", np.round([critical_mass_zero(p, 3, 1.0) for p in ps], 2))

"""
How much does the multimode cavity enhance cooperativity?
=========================================================

The enhancement C_mm / C compares the multimode coupling with that of the
fundamental mode alone.  Closed forms exist for a point particle (Lerch
transcendent) and for Gaussian clouds (Appell function); both are compared
with the direct quadrature here.
"""

# %%
from pathlib import Path

import numpy as np

from cavity_kit import CloudParams, enhancement_cloud, enhancement_point, mhz, paper_cavity
from cavity_kit.cooperativity import effective_mode_count, square_cutoff_enhancement
from cavity_kit.plotting import svg_lines

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

# %%
# Point particle at -100 MHz over a range of plausible cutoffs.
for alpha in (1e-4, 3e-4, 6e-4):
    r = enhancement_point(paper_cavity(delta_c=mhz(-100), delta_0=0.0, alpha=alpha))
    print(f"alpha={alpha:.0e}: C_mm/C = {r.ratio:6.2f}  (quadrature {r.ratio_quadrature:6.2f})")

# %%
# Finite clouds: the enhancement drops as the cloud covers more of the spot.
dets = np.linspace(-60, -320, 14)
curves = {}
for sx, sy in [(0.5, 0.5), (1.55, 3.8), (5.95, 6.6)]:
    cl = CloudParams(sigma_x=sx, sigma_y=sy)
    curves[f"sigma=({sx}, {sy}) um"] = [
        enhancement_cloud(paper_cavity(delta_c=mhz(d), alpha=3e-4), cl).ratio for d in dets
    ]
svg_lines(out / "enhancement_vs_detuning.svg", -dets, curves, "-Delta_C / 2pi (MHz)", "C_mm / C")
print("wrote", out / "enhancement_vs_detuning.svg")

# %%
# A degenerate cavity with a hard square cutoff gives a mode-count estimate.
exact, asym = square_cutoff_enhancement(66)
print(f"square cutoff M=66: {exact:.2f} (large-M form {asym:.2f})")
mc = effective_mode_count(21.0)
print(f"enhancement 21 needs M={mc.M}, about {mc.modes} modes")

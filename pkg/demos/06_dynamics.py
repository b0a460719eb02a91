"""
Ramping through the superradiant transition
===========================================

Mean-field equations for the condensate components and the cavity mode,
driven by a linear pump ramp.  The photon flux takes off close to the
static critical pump strength, and slower ramps land closer to it.
"""

# %%
from pathlib import Path

import numpy as np

from cavity_kit import bec_cloud, critical_pump, paper_cavity, paper_pump
from cavity_kit.dynamics import MeanFieldModel, MeanFieldState, RampProtocol, detect_onset, \
    integrate
from cavity_kit.plotting import svg_lines

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

cl, cav, pump = bec_cloud(n_atoms=1000), paper_cavity(single_mode=True), paper_pump()
oc = critical_pump(cl, cav, pump).omega_c
model = MeanFieldModel(cl, cav, pump)
s0 = MeanFieldState.normal(len(model.basis))
flux_mark = 1e4 * 2 * cav.kappa * np.sum(np.abs(model.adiabatic(s0.vector(), oc)) ** 2)

# %%
for duration in (10.0, 30.0):
    tr = integrate(s0, cl, cav, pump, RampProtocol.linear(1.3 * oc, duration), tol=1e-9,
                   model=model, n_samples=2001)
    on = detect_onset(tr, flux_mark)
    print(f"ramp {duration:5.1f} us: onset at {on.onset_omega / oc:.3f} Omega_c")

svg_lines(out / "ramp.svg", tr.omega / oc, {"log10 |psi_F|^2": np.log10(tr.psi_f_sq)},
          "Omega / Omega_c", "log10 |psi_F|^2")
print("wrote", out / "ramp.svg")

"""
Global fit of cavity parameters with bootstrap errors
=====================================================

Synthetic threshold data from a known cavity are fitted for the mode
spacing epsilon, the cutoff alpha, the detuning offset Delta_0 and one
amplitude factor per dataset.  A bootstrap over rows gives the spread.
A reduced design keeps this demo quick; ``paper_design()`` builds the
full 26-dataset suite.
"""

# %%
import numpy as np

from cavity_kit import mhz, to_mhz
from cavity_kit.fitting import (
    DetuningScanDesign,
    FitParams,
    NoiseModel,
    PositionScanDesign,
    ScanDesign,
    ThresholdModel,
    bootstrap,
    fit_global,
    synthesize_dataset,
)

dets = tuple(mhz(v) for v in np.linspace(-40, -320, 8))
pos = tuple(np.linspace(-12, 12, 13))
design = ScanDesign(
    (DetuningScanDesign((11.9, 13.2, 7.2), 4e5, dets),
     DetuningScanDesign((3.1, 7.6, 5.3), 2.3e5, dets)),
    (PositionScanDesign((3.1, 7.6, 5.3), 2.3e5, mhz(-120), pos),
     PositionScanDesign((3.1, 7.6, 5.3), 2.3e5, mhz(-220), pos)),
)
truth = FitParams(mhz(2.6), 3e-4, mhz(0.8), (1.4, 1.8, 1.6, 1.9))
data = synthesize_dataset(truth, design, NoiseModel(0.03), seed=5)

# %%
model = ThresholdModel(data)
init = FitParams(mhz(2.0), 1e-3, 0.0, (1.5,) * 4)
fit = fit_global(data, init, model=model)
print(f"epsilon/2pi = {to_mhz(fit.epsilon):.3f} +- {to_mhz(fit.sigma_epsilon):.3f} MHz (true 2.6)")
print(f"alpha = {fit.alpha:.2e}, reduced chi2 = {fit.chi2_reduced:.2f}")

# %%
boot = bootstrap(data, 40, seed=1, model=model, base_fit=fit)
print(f"bootstrap std of epsilon/2pi: {to_mhz(boot.std[0]):.3f} MHz "
      f"({boot.n_failed} failed refits)")

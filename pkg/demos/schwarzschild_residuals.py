"""Vacuum residuals of Schwarzschild on its default grid, AD versus FD."""
import time

import numpy as np

from palatini_routh import numkit as nk
from palatini_routh.connections import vacuum_einstein_residual
from palatini_routh.fixtures import get_fixture, grid_points
from palatini_routh.framebundle import metric_jet

bh = get_fixture("schwarzschild", {"M": 1.0})
pts = grid_points(bh)

for mode in ("ad", "fd"):
    contract = nk.DerivativeContract(mode=mode)
    t0 = time.perf_counter()
    worst = max(vacuum_einstein_residual(metric_jet(bh.field, x, contract)).max_abs for x in pts)
    print(f"{mode}: {len(pts)} points, max |R_mn| = {worst:.2e}, {time.perf_counter() - t0:.2f}s")

# a non-vacuum control
pert = get_fixture("perturbed_schwarzschild")
vals = [vacuum_einstein_residual(metric_jet(pert.field, x)).max_abs for x in grid_points(pert)]
print(f"perturbed: min |R_mn| over grid = {np.min(vals):.3f}")

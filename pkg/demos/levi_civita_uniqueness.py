"""Levi-Civita connection from metric jets against closed-form Christoffels."""
import numpy as np

from palatini_routh.connections import levi_civita, metricity_residual
from palatini_routh.fixtures import get_fixture
from palatini_routh.framebundle import metric_jet

for name in ("schwarzschild", "sphere2", "flat_polar"):
    fx = get_fixture(name)
    x = fx.point()
    c = levi_civita(metric_jet(fx.field, x))
    err = np.abs(c.gamma - fx.oracle_christoffels(x)).max()
    met = metricity_residual(metric_jet(fx.field, x), c).max_abs
    print(f"{name:14s} |G - closed form| = {err:.1e}   metricity = {met:.1e}")

"""Palatini density at the Levi-Civita connection vs. the first-order EH density."""
from palatini_routh.connections import levi_civita
from palatini_routh.fixtures import get_fixture
from palatini_routh.framebundle import metric_jet
from palatini_routh.lagrangians import eh_first_order_density, kappa, palatini_density

for name, pt in [("schwarzschild", {"r": 4.0, "theta": 1.1}), ("desitter_static", {"r": 0.4, "theta": 0.9})]:
    fx = get_fixture(name)
    g = metric_jet(fx.field, fx.point(**pt))
    lp = palatini_density(g, levi_civita(g))
    le = eh_first_order_density(g)
    print(f"{name}: palatini={lp.density:+.6e} eh={le.density:+.6e} kappa_4={kappa(4):g}")

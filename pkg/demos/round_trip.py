"""Metric -> polar-gauge frame section -> metric 1-jet, on the flat plane in polar coordinates and on Schwarzschild."""
from palatini_routh.fixtures import get_fixture, grid_points
from palatini_routh.reconstruction import reconstruct, round_trip_reduce_reconstruct

for name, grid in [("flat_polar", "r=0.5..5:10,theta=0..6:4"), ("schwarzschild", "r=3..10:8,theta=0.3..2.8:6")]:
    fx = get_fixture(name)
    pts = grid_points(fx, grid)
    rt = round_trip_reduce_reconstruct(fx, pts)
    rec = reconstruct(fx, pts)
    worst = max(r.max_abs for rp in rec.points for r in rp.residuals(rec.eta))
    print(f"{name}: round trip {rt.max_abs:.1e}, worst field-equation residual {worst:.1e}")

"""Classical open evolutions need not be diffeomorphisms.

For the rotation with angular speed xS^2 + xB^2 and the bath held at 0, the
system points 0 and sqrt(pi/(2t)) both land on 0 at time t. The evolution
property still holds once the bath point is transported along the flow.
"""

from starflow.classical import (evolution_property_residual, open_evolve_pure,
                                radial_collapse_points, rotation_radial)

spec = rotation_radial()
for t in (0.5, 1.0, 2.0):
    a, b = radial_collapse_points(t)
    ya = open_evolve_pure(spec, a, 0.0, t)[0]
    yb = open_evolve_pure(spec, b, 0.0, t)[0]
    print(f"t={t}: Phi({a:.4f}) = {ya:+.2e}, Phi({b:.4f}) = {yb:+.2e}")

print("evolution property residual:",
      f"{evolution_property_residual(spec, 0.8, 0.3, 0.4, 0.9):.2e}")

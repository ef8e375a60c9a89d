#!/usr/bin/env python3
# Fractional iteration: near a fixed point with multiplier neither 0 nor 1,
# a change of coordinate turns iterating a scalar program into plain
# multiplication, so "apply p two and a half times" becomes meaningful --
# and the rate of change per iteration falls out in closed form.

import numpy as np

from tensorjet import (
    ContractionLayer,
    MultiTensor,
    Shape,
    evaluate,
    find_fixed_point,
    fractional_iterate,
    iterating_velocity,
    schroeder,
)

# p(v) = v/2 + v^2/4
p = ContractionLayer(MultiTensor(Shape(1, 1, 2), [[0.0], [0.5], [0.25]]))

fp = find_fixed_point(p, seed=0.3)
print("fixed point:", fp)

data = schroeder(p, fp, order=12)
print("multiplier p'(fp):", data.lam)
print("linearizing series, first coefficients:",
      [round(c, 6) for c in data.h_coeffs[:6]])

v = 0.08
print(f"\niterates of v={v}:")
for x in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5):
    print(f"  p^{x:<4} = {fractional_iterate(data, x, v):+.12f}")

# the half-iterate really is a square root of the map
half = fractional_iterate(data, 0.5, v)
print("\nhalf twice :", fractional_iterate(data, 0.5, half))
print("p directly :", evaluate(p, [v])[0])

# velocity: d/dx p^x(v) at x = 0, versus a symmetric difference
eps = 1e-6
fd = (fractional_iterate(data, eps, v) - fractional_iterate(data, -eps, v)) / (2 * eps)
print("\niterating velocity:", iterating_velocity(data, v))
print("finite difference :", fd)
print("velocity at the fixed point (always zero):", iterating_velocity(data, fp))

#!/usr/bin/env python3
# Derivatives as programs: order reduction shifts a tower one level down,
# which makes "the derivative of p" a program you can evaluate and
# differentiate again, to any depth.

import numpy as np

from tensorjet import (
    Compose,
    Elementwise,
    Identity,
    derivative_tower,
    differentiable_derivative,
    evaluate,
    get_primitive,
    order_reduce,
)

cube = Compose(Elementwise(get_primitive("pow3")), Identity(1))

tower = derivative_tower(cube, [2.0], 3)
print("x^3 at 2, orders 0..3:", [float(c.ravel()[0]) for c in tower.tower.components])

reduced = order_reduce(tower)
print("after one reduction (the tower of 3x^2 at 2):",
      [float(c.ravel()[0]) for c in reduced.tower.components])

twice = order_reduce(reduced)
print("after two (the tower of 6x at 2):",
      [float(c.ravel()[0]) for c in twice.tower.components])

# the same idea as a node: d/dx sin = cos, usable inside other programs
dsin = differentiable_derivative(Elementwise(get_primitive("sin")), 1)
xs = np.linspace(-1.0, 1.0, 5)
print("\nderivative-of-sine program vs cos:")
for x in xs:
    print(f"  x={x:+.2f}  d(sin)={evaluate(dsin, [x])[0]:+.10f}  cos={np.cos(x):+.10f}")

# and it differentiates like any other program
t = derivative_tower(dsin, [0.0], 2)
print("\ntower of d(sin) at 0 (should read like cos):",
      [float(c.ravel()[0]) for c in t.tower.components])

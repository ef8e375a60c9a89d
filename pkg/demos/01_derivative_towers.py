#!/usr/bin/env python3
# Derivative towers: evaluate a program together with its gradient, Hessian,
# and higher derivative tensors in one forward pass, then sanity-check the
# first two orders against central finite differences.

import numpy as np

from tensorjet import (
    Affine,
    Compose,
    Elementwise,
    derivative_tower,
    evaluate,
    get_primitive,
)

# a small two-stage program R^2 -> R^2: elementwise sine of an affine map
program = Compose(
    Elementwise(get_primitive("sin"), dim=2),
    Affine([[0.7, -0.3], [0.2, 0.5]], [0.1, -0.2]),
)

v = np.array([0.3, -0.4])
print("value:", evaluate(program, v))

tower = derivative_tower(program, v, 3)
print("\ntower orders 0..3 at", v)
for j in range(tower.order + 1):
    comp = tower.component(j)
    print(f"  order {j}: shape {comp.shape}")
    print(np.array2string(comp, precision=6))

# the first-order component is the Jacobian; check it against differences
h = 1e-5
fd = np.stack(
    [
        (evaluate(program, v + h * e) - evaluate(program, v - h * e)) / (2 * h)
        for e in np.eye(2)
    ],
    axis=-1,
)
print("\nmax |jacobian - finite differences| =", np.max(np.abs(tower.component(1) - fd)))

# higher components are symmetric in their trailing slots (order of
# differentiation does not matter), which the tower guarantees
print("third-order component symmetric:", tower.tower.is_symmetric(1e-9))

#!/usr/bin/env python3
# Summing a program over equally spaced shifts without looping: Bernoulli
# numbers give an exact polynomial in the number of terms, which can then be
# differentiated in that count ("how fast does the running total grow?").

import numpy as np

from tensorjet import (
    ContractionLayer,
    MultiTensor,
    Shape,
    bernoulli,
    brute_force_partial_sum,
    reduce_sum_apply,
    reduce_sum_closed_form,
    reduce_sum_polynomials,
    reduction_velocity,
)

print("Bernoulli numbers:", ", ".join(f"B_{i}={bernoulli(i)}" for i in range(9)))

print("\nclosed forms for sums of powers 0 + 1^m + ... + n^m:")
for m in range(5):
    print(f"  m={m}:  {reduce_sum_closed_form(m)}")

print("\nchecking m=3 against a literal loop:")
for n in (3, 10, 100):
    closed = reduce_sum_closed_form(3)(n)
    looped = sum(h**3 for h in range(n + 1))
    print(f"  n={n:>4}: closed {closed}, loop {looped}")

# works for whole programs, not just monomials: p(v) = 2 + v - 0.5 v^2
p = ContractionLayer(MultiTensor(Shape(1, 1, 2), [[2.0], [1.0], [-0.5]]))
v0, v = [1.0], [0.5]
n = 12
fast = reduce_sum_apply(p, v0, v, n, order=2)
slow = brute_force_partial_sum(p, v0, v, n)
print(f"\nsum of p over {n + 1} shifted points: closed {fast[0]:.12g}, loop {slow[0]:.12g}")

poly = reduce_sum_polynomials(p, v0, v, order=2)[0]
print("as a polynomial in the iteration count:", poly)

print("\nrate of change of the running total at n=12:")
print("  first derivative:", reduction_velocity(p, v0, v, 12, 1, 2)[0])
print("  second derivative:", reduction_velocity(p, v0, v, 12, 2, 2)[0])
print("  (one new term contributes p(v0 + 13 v) =",
      float(brute_force_partial_sum(p, v0, v, 13)[0] - slow[0]), ")")

#!/usr/bin/env python3
# Shifting a program: the truncated series of a program at a base point acts
# like the program at a moved argument, p(v0 + h*v).  The table below shows
# the truncation error shrinking like h^(order+1).

import numpy as np

from tensorjet import Elementwise, evaluate, get_primitive, series_eval, taylor_series

program = Elementwise(get_primitive("exp"))
v0 = [0.3]

print("approximating exp(0.3 + h) from data at 0.3 only\n")
print(f"{'h':>10} " + " ".join(f"order {k}" for k in (1, 2, 3)))
for h in (0.1, 0.03, 0.01, 0.003, 0.001):
    truth = evaluate(program, [0.3 + h])[0]
    errs = []
    for k in (1, 2, 3):
        series = taylor_series(program, v0, k)
        errs.append(abs(series_eval(series, h, [1.0])[0] - truth))
    print(f"{h:>10} " + " ".join(f"{e:8.1e}" for e in errs))

# for a polynomial the series of full degree is not an approximation at all:
from tensorjet import ContractionLayer, MultiTensor, Shape

cubic = ContractionLayer(MultiTensor(Shape(1, 1, 3), [[1.0], [-2.0], [0.5], [0.25]]))
series = taylor_series(cubic, [0.4], 3)
for h in (0.5, 2.0, 10.0):
    exact = evaluate(cubic, [0.4 + h])[0]
    via_series = series_eval(series, h, [1.0])[0]
    print(f"\ncubic at 0.4 + {h}: series {via_series:.12g}, direct {exact:.12g}")

"""Dense multi-tensor values: a vector plus derivative-style tensors of orders 1..k.

A ``MultiTensor`` of shape ``(dim_out, dim_in, order)`` stores ``order + 1``
dense float64 arrays; component ``j`` has shape ``(dim_out,) + (dim_in,)*j``.
Component 0 is a plain vector, component 1 a matrix, component 2 a
three-way array, and so on.  Contracting component ``j`` with ``j`` copies
of a vector and summing the components evaluates the polynomial map

    W(v) = w_0 + w_1 . v + w_2 . (v (x) v) + ... + w_k . v^(x)k

which is how these values act on the underlying vector space.

Index convention: entry ``(i; a_1, ..., a_j)`` of component ``j`` lives at
flat offset ``i * dim_in**j + sum(a_m * dim_in**(j-m))`` -- i.e. plain
C-order numpy layout.  JSON serialization flattens in exactly this order.

Single contraction eats the *last* tensor slot.  An order-0 value cannot be
contracted; by convention it passes through unchanged, so order-0 components
represent constant (translation) terms.

All values are immutable after construction (backing arrays are marked
read-only); every operation returns a fresh value, so instances are safe to
share between threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np


class ShapeMismatchError(ValueError):
    """Operands have incompatible shapes."""


@dataclass(frozen=True)
class Shape:
    """Extent of a multi-tensor: output dim, input dim, truncation order."""

    dim_out: int
    dim_in: int
    order: int

    def __post_init__(self):
        if self.dim_out < 1 or self.dim_in < 1:
            raise ValueError(f"dimensions must be >= 1, got {self}")
        if self.order < 0:
            raise ValueError(f"order must be >= 0, got {self}")

    def component_shape(self, j: int) -> tuple[int, ...]:
        return (self.dim_out,) + (self.dim_in,) * j


class MultiTensor:
    """Immutable stack of dense tensors of orders 0..k over a common index pair.

    ``components[j]`` is the order-``j`` tensor.  Entries are float64 and
    finite unless an operation documents otherwise.
    """

    __slots__ = ("shape", "components", "truncated")

    def __init__(self, shape: Shape, components, truncated: bool = False):
        if len(components) != shape.order + 1:
            raise ShapeMismatchError(
                f"expected {shape.order + 1} components, got {len(components)}"
            )
        frozen = []
        for j, comp in enumerate(components):
            arr = np.array(comp, dtype=np.float64, order="C")  # always a private copy
            want = shape.component_shape(j)
            if arr.shape != want:
                if arr.size == math.prod(want):
                    arr = arr.reshape(want)
                else:
                    raise ShapeMismatchError(
                        f"component {j}: expected shape {want}, got {arr.shape}"
                    )
            arr.flags.writeable = False
            frozen.append(arr)
        self.shape = shape
        self.components = tuple(frozen)
        self.truncated = truncated

    @property
    def dim_out(self) -> int:
        return self.shape.dim_out

    @property
    def dim_in(self) -> int:
        return self.shape.dim_in

    @property
    def order(self) -> int:
        return self.shape.order

    def component(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.order:
            raise IndexError(f"component {j} of an order-{self.order} multi-tensor")
        return self.components[j]

    @property
    def value(self) -> np.ndarray:
        return self.components[0]

    def __repr__(self):
        return (
            f"MultiTensor(dim_out={self.dim_out}, dim_in={self.dim_in}, "
            f"order={self.order})"
        )

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        """True if every component of order >= 2 is invariant under slot permutations.

        Deviation is measured against the symmetrized component, relative to
        ``max(1, |component|_inf)``.
        """
        for j in range(2, self.order + 1):
            comp = self.components[j]
            scale = max(1.0, float(np.max(np.abs(comp))))
            if np.max(np.abs(comp - _symmetrize_component(comp))) > tol * scale:
                return False
        return True


def zero(shape: Shape) -> MultiTensor:
    """The all-zero multi-tensor of the given shape."""
    return MultiTensor(shape, [np.zeros(shape.component_shape(j)) for j in range(shape.order + 1)])


def add(a: MultiTensor, b: MultiTensor) -> MultiTensor:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot add shapes {a.shape} and {b.shape}")
    return MultiTensor(a.shape, [x + y for x, y in zip(a.components, b.components)])


def scale(a: MultiTensor, c: float) -> MultiTensor:
    return MultiTensor(a.shape, [c * x for x in a.components])


def contract_once(w: MultiTensor, v) -> MultiTensor:
    """Contract the last tensor slot of every component with the vector ``v``.

    Each order-``j`` component (j >= 1) drops to order ``j - 1``; the old
    order-0 component, which cannot be contracted, is added into the new
    order-0 slot.  An order-0 input is returned unchanged (constant map).
    """
    v = _as_vector(v, w.dim_in, "contraction vector")
    if w.order == 0:
        return w
    new_shape = Shape(w.dim_out, w.dim_in, w.order - 1)
    comps = [np.tensordot(w.components[j], v, axes=([-1], [0])) for j in range(1, w.order + 1)]
    comps[0] = comps[0] + w.components[0]
    return MultiTensor(new_shape, comps)


def eval_polynomial(w: MultiTensor, v) -> np.ndarray:
    """Evaluate the polynomial map w_0 + w_1.v + ... + w_k.v^(x)k."""
    v = _as_vector(v, w.dim_in, "evaluation vector")
    out = w.components[0].copy()
    for j in range(1, w.order + 1):
        term = w.components[j]
        for _ in range(j):
            term = np.tensordot(term, v, axes=([-1], [0]))
        out += term
    return out


def algebra_product(
    a: MultiTensor,
    b: MultiTensor,
    bilinear: np.ndarray | None = None,
    max_order: int | None = None,
) -> MultiTensor:
    """Bilinear product concatenating tensor slots.

    On simple tensors ``(v (x) f_1..f_p) * (u (x) g_1..g_q)`` the result is
    ``B(v, u) (x) f_1..f_p (x) g_1..g_q``, extended bilinearly.  ``bilinear``
    is a ``(d, a.dim_out, b.dim_out)`` array encoding ``B``; ``None`` selects
    the componentwise product (requires equal output dims).  The result order
    is ``a.order + b.order``, truncated to ``max_order`` when given (the
    ``truncated`` flag on the result records whether anything was dropped).
    """
    if a.dim_in != b.dim_in:
        raise ShapeMismatchError(
            f"algebra_product input dims differ: {a.dim_in} vs {b.dim_in}"
        )
    if bilinear is None:
        if a.dim_out != b.dim_out:
            raise ShapeMismatchError(
                "componentwise product needs equal output dims, got "
                f"{a.dim_out} and {b.dim_out}"
            )
        d_out = a.dim_out
    else:
        bilinear = np.asarray(bilinear, dtype=np.float64)
        if bilinear.ndim != 3 or bilinear.shape[1:] != (a.dim_out, b.dim_out):
            raise ShapeMismatchError(
                f"bilinear map must have shape (d, {a.dim_out}, {b.dim_out}), "
                f"got {bilinear.shape}"
            )
        d_out = bilinear.shape[0]

    full_order = a.order + b.order
    out_order = full_order if max_order is None else min(max_order, full_order)
    shape = Shape(d_out, a.dim_in, out_order)
    comps = [np.zeros(shape.component_shape(n)) for n in range(out_order + 1)]
    for p in range(a.order + 1):
        for q in range(b.order + 1):
            if p + q > out_order:
                continue
            comps[p + q] += _pair_product(a.components[p], b.components[q], bilinear)
    return MultiTensor(shape, comps, truncated=out_order < full_order)


def symmetrize(w: MultiTensor) -> MultiTensor:
    """Average every component over permutations of its tensor slots."""
    return MultiTensor(w.shape, [_symmetrize_component(c) for c in w.components])


def truncate(w: MultiTensor, new_order: int) -> MultiTensor:
    """Drop components above ``new_order``."""
    if new_order < 0:
        raise ValueError("new_order must be >= 0")
    if new_order >= w.order:
        return w
    return MultiTensor(
        Shape(w.dim_out, w.dim_in, new_order), list(w.components[: new_order + 1])
    )


def to_json(w: MultiTensor) -> str:
    """Serialize to JSON with components flattened in C order; bit-exact round trip."""
    return json.dumps(
        {
            "dim_out": w.dim_out,
            "dim_in": w.dim_in,
            "order": w.order,
            "components": [c.ravel().tolist() for c in w.components],
        }
    )


def from_json(text: str) -> MultiTensor:
    obj = json.loads(text)
    shape = Shape(obj["dim_out"], obj["dim_in"], obj["order"])
    comps = obj["components"]
    if len(comps) != shape.order + 1:
        raise ShapeMismatchError(
            f"expected {shape.order + 1} components, got {len(comps)}"
        )
    return MultiTensor(
        shape,
        [np.asarray(comps[j], dtype=np.float64).reshape(shape.component_shape(j))
         for j in range(shape.order + 1)],
    )


def _as_vector(v, dim: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (dim,):
        raise ShapeMismatchError(f"{what} must have shape ({dim},), got {v.shape}")
    return v


def _symmetrize_component(comp: np.ndarray) -> np.ndarray:
    j = comp.ndim - 1
    if j < 2:
        return comp.copy()
    transposed = [
        np.transpose(comp, (0,) + perm) for perm in permutations(range(1, j + 1))
    ]
    if all(np.array_equal(t, comp) for t in transposed[1:]):
        return comp.copy()
    acc = transposed[0].copy()
    for t in transposed[1:]:
        acc += t
    acc /= math.factorial(j)
    # Pin each slot orbit to its representative entry: the output is then
    # exactly symmetric, and a second pass is a bitwise no-op.
    out = np.empty_like(acc)
    for idx in np.ndindex(comp.shape[1:]):
        rep = tuple(sorted(idx))
        out[(slice(None),) + idx] = acc[(slice(None),) + rep]
    return out


def _pair_product(ap: np.ndarray, bq: np.ndarray, bilinear: np.ndarray | None) -> np.ndarray:
    if bilinear is None:
        d = ap.shape[0]
        flat = np.einsum("ix,iy->ixy", ap.reshape(d, -1), bq.reshape(d, -1))
        return flat.reshape(ap.shape + bq.shape[1:])
    t = np.tensordot(bilinear, ap, axes=([1], [0]))  # (d, b_out, p slots)
    return np.tensordot(t, bq, axes=([1], [0]))  # (d, p slots, q slots)

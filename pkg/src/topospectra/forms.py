"""Sparse exterior algebra over coordinate differentials.

A p-form is a dict mapping strictly increasing index tuples to float
coefficients: ``{(i, j): c}`` stands for ``c * dq^i ^ dq^j``.  The empty
tuple holds the scalar (0-form) part.  This is enough machinery for the
determinant expansions and epsilon contractions used by the curvature
classes; dimensions stay small (k <= 4), so no effort is spent on speed.
"""

from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

Form = Dict[Tuple[int, ...], float]


def zero() -> Form:
    return {}


def scalar(c: float) -> Form:
    return {(): float(c)} if c != 0.0 else {}


def two_form(matrix: np.ndarray) -> Form:
    """Build a 2-form from its antisymmetric coordinate coefficient matrix.

    ``matrix[i, j]`` is the coefficient of ``dq^i ^ dq^j`` for i < j, i.e.
    the form equals ``(1/2) matrix[i, j] dq^i ^ dq^j`` summed over all i, j.
    """
    m = np.asarray(matrix, dtype=float)
    k = m.shape[0]
    out: Form = {}
    for i in range(k):
        for j in range(i + 1, k):
            if m[i, j] != 0.0:
                out[(i, j)] = float(m[i, j])
    return out


def _merge(left: Tuple[int, ...], right: Tuple[int, ...]):
    """Merge two increasing index tuples; return (tuple, sign) or None."""
    if set(left) & set(right):
        return None
    inversions = 0
    for i in left:
        for j in right:
            if i > j:
                inversions += 1
    merged = tuple(sorted(left + right))
    return merged, (-1.0 if inversions % 2 else 1.0)


def wedge(a: Form, b: Form) -> Form:
    out: Form = {}
    for ia, ca in a.items():
        for ib, cb in b.items():
            merged = _merge(ia, ib)
            if merged is None:
                continue
            idx, sign = merged
            out[idx] = out.get(idx, 0.0) + sign * ca * cb
    return {k: v for k, v in out.items() if v != 0.0}


def add(a: Form, b: Form, factor: float = 1.0) -> Form:
    out = dict(a)
    for idx, c in b.items():
        out[idx] = out.get(idx, 0.0) + factor * c
    return {k: v for k, v in out.items() if v != 0.0}


def scale(a: Form, factor: float) -> Form:
    if factor == 0.0:
        return {}
    return {idx: factor * c for idx, c in a.items()}


def coefficient(a: Form, indices: Tuple[int, ...]) -> float:
    return a.get(tuple(indices), 0.0)


def top_coefficient(a: Form, dimension: int) -> float:
    """Coefficient of dq^0 ^ ... ^ dq^(dimension-1)."""
    return a.get(tuple(range(dimension)), 0.0)


def max_abs(a: Form) -> float:
    return max((abs(c) for c in a.values()), default=0.0)

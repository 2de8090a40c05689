"""Small exact (rational) and numeric linear-algebra helpers."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "rref",
    "exact_nullspace",
    "exact_solve",
    "numeric_rank",
    "numeric_nullspace",
    "rationalize_vector",
    "RationalizationFailed",
]


class RationalizationFailed(ValueError):
    """A float vector has no small-denominator rational fit."""


def rref(matrix: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals. Returns (rows, pivot columns)."""
    rows = [[Fraction(v) for v in row] for row in matrix]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def exact_nullspace(matrix: Sequence[Sequence[Fraction]], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of ``{v : M v = 0}``, one vector per free column."""
    if ncols is None:
        ncols = len(matrix[0]) if matrix else 0
    reduced, pivots = rref(matrix) if matrix else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(reduced, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def exact_solve(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction] | None:
    """One solution of ``M v = b`` (free variables zero), or None if inconsistent."""
    ncols = len(matrix[0]) if matrix else 0
    aug = [list(row) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    reduced, pivots = rref(aug)
    if ncols in pivots:
        return None
    v = [Fraction(0)] * ncols
    for row, pc in zip(reduced, pivots):
        v[pc] = row[-1]
    return v


def numeric_rank(m: np.ndarray, rtol: float = 1e-7) -> int:
    """Number of singular values above ``rtol`` times the largest one."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def numeric_nullspace(m: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of ``m``."""
    m = np.asarray(m, dtype=float)
    ncols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(ncols)
    _, s, vt = np.linalg.svd(m)
    top = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * top)) if top > 0 else 0
    return vt[rank:].T.copy()


def rationalize_vector(v: np.ndarray, max_denominator: int = 10**6, tol: float = 1e-7) -> list[Fraction]:
    """Scale ``v`` so its largest entry is 1 and snap entries to nearby rationals.

    The fit is accepted only if every entry is reproduced within ``tol``.
    """
    v = np.asarray(v, dtype=float)
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        raise RationalizationFailed("zero vector")
    v = v / v[k]
    out = [Fraction(float(x)).limit_denominator(max_denominator) for x in v]
    err = max(abs(float(f) - x) for f, x in zip(out, v))
    if err > tol:
        raise RationalizationFailed(f"no rational fit with denominator <= {max_denominator} (error {err:.3g})")
    return out


def rref_float(basis: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Row-reduce the rows of ``basis`` (float) to a canonical spanning set."""
    a = np.array(basis, dtype=float)
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivot = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[pivot, c]) <= tol:
            continue
        a[[r, pivot]] = a[[pivot, r]]
        a[r] /= a[r, c]
        for i in range(rows):
            if i != r:
                a[i] -= a[i, c] * a[r]
        r += 1
    a[np.abs(a) < tol] = 0.0
    return a[:r]

"""The P-hat matrix: gradients of the basic invariants expressed in those invariants."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .linalg import exact_nullspace, exact_solve, numeric_rank, rref
from .poly import Polynomial, PolynomialMap, WeightSystem, p_variables, w_monomials

__all__ = [
    "MIBSpec",
    "PHatMatrix",
    "Syzygy",
    "NotExpressible",
    "compose_with_orbit_map",
    "express_in_mib",
    "compute_phat",
    "det_phat",
    "find_syzygies",
    "p_matrix_numeric",
]


class NotExpressible(ValueError):
    """The polynomial is not in the algebra generated by the basic invariants."""


@dataclass(frozen=True, eq=False)
class MIBSpec:
    """Homogeneous basic invariants ``p_1..p_q`` in ``n`` variables, last one ``|x|^2``."""

    polynomials: tuple[Polynomial, ...]
    weights: WeightSystem

    def __post_init__(self):
        polys = tuple(self.polynomials)
        object.__setattr__(self, "polynomials", polys)
        if len(polys) != self.weights.q:
            raise ValueError("number of polynomials and degrees differ")
        variables = polys[0].variables
        for a, (p, d) in enumerate(zip(polys, self.weights.degrees)):
            if p.variables != variables:
                raise ValueError("all basic invariants must share one variable list")
            if p.is_zero() or not p.is_homogeneous(d):
                raise ValueError(f"p{a + 1} is not homogeneous of degree {d}")
        norm = sum((Polynomial.var(i, variables) ** 2 for i in range(len(variables))),
                   Polynomial.zero(variables))
        if polys[-1] != norm:
            raise ValueError("the last basic invariant must be |x|^2")

    @classmethod
    def from_polynomials(cls, polynomials: Sequence[Polynomial]) -> "MIBSpec":
        return cls(tuple(polynomials), WeightSystem(tuple(p.degree for p in polynomials)))

    @property
    def n(self) -> int:
        return self.polynomials[0].nvars

    @property
    def q(self) -> int:
        return len(self.polynomials)

    @property
    def x_vars(self) -> tuple[str, ...]:
        return self.polynomials[0].variables

    @property
    def p_vars(self) -> tuple[str, ...]:
        return p_variables(self.q)

    @cached_property
    def gradients(self) -> list[list[Polynomial]]:
        return [p.gradient() for p in self.polynomials]

    @cached_property
    def _orbit_fn(self) -> PolynomialMap:
        return PolynomialMap(self.polynomials)

    @cached_property
    def _jacobian_fn(self) -> PolynomialMap:
        return PolynomialMap([g for grads in self.gradients for g in grads])

    def orbit_map(self, X: np.ndarray) -> np.ndarray:
        """Float orbit map, rows of ``X`` -> rows of ``p(X)``."""
        return self._orbit_fn(X)

    def orbit_map_exact(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(p.evaluate(list(x)) for p in self.polynomials)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        """Array of shape ``(m, q, n)`` with ``d p_a / d x_i``."""
        J = self._jacobian_fn(X)
        return J.reshape(J.shape[0], self.q, self.n)

    @cached_property
    def _compose_cache(self) -> dict:
        return {}

    def compose_monomial(self, exps: tuple[int, ...]) -> Polynomial:
        cache = self._compose_cache
        if exps not in cache:
            if sum(exps) == 0:
                cache[exps] = Polynomial.constant(1, self.x_vars)
            else:
                a = max(i for i, e in enumerate(exps) if e)
                lower = list(exps)
                lower[a] -= 1
                cache[exps] = self.compose_monomial(tuple(lower)) * self.polynomials[a]
        return cache[exps]


def compose_with_orbit_map(f_hat: Polynomial, mib: MIBSpec) -> Polynomial:
    """``f(x) = f_hat(p_1(x), ..., p_q(x))``, expanded exactly."""
    if f_hat.nvars != mib.q:
        raise ValueError("f_hat must be a polynomial in the q invariants")
    out = Polynomial.zero(mib.x_vars)
    for exps, c in f_hat.terms:
        out = out + mib.compose_monomial(exps) * c
    return out


def _coefficient_matrix(polys: Sequence[Polynomial]) -> tuple[list[list[Fraction]], list[tuple[int, ...]]]:
    """Rows = x-monomials appearing anywhere, columns = polynomials."""
    keys = sorted({e for p in polys for e in p.as_dict()})
    index = {e: i for i, e in enumerate(keys)}
    rows = [[Fraction(0)] * len(polys) for _ in keys]
    for j, p in enumerate(polys):
        for e, c in p.as_dict().items():
            rows[index[e]][j] = c
    return rows, keys


def _min_support_solution(cols: list[Polynomial], f: Polynomial, kernel_dim: int,
                          max_combinations: int = 20000) -> list[Fraction] | None:
    m = len(cols)
    tried = 0
    for size in range(0, m + 1):
        for support in itertools.combinations(range(m), size):
            tried += 1
            if tried > max_combinations:
                return None
            sub = [cols[j] for j in support]
            if not sub:
                if f.is_zero():
                    return [Fraction(0)] * m
                continue
            rows, keys = _coefficient_matrix(sub + [f])
            sol = exact_solve([r[:-1] for r in rows], [r[-1] for r in rows])
            if sol is not None and all(sol):
                full = [Fraction(0)] * m
                for j, v in zip(support, sol):
                    full[j] = v
                return full
    return None


def express_in_mib(f: Polynomial, mib: MIBSpec, return_kernel: bool = False):
    """Find ``f_hat`` with ``f_hat(p(x)) == f(x)`` exactly.

    Solves for the coefficients of every w-monomial of the right weight by
    matching x-monomial coefficients. When the basic invariants satisfy a
    relation at this weight the solution is not unique; the one with fewest
    terms is returned (earlier monomials in graded-lex order win ties).
    """
    if f.variables != mib.x_vars:
        raise ValueError("f must be a polynomial in the x variables")
    p_vars = mib.p_vars
    if f.is_zero():
        zero = Polynomial.zero(p_vars)
        return (zero, []) if return_kernel else zero
    if not f.is_homogeneous():
        raise NotExpressible("f is not homogeneous")
    degree = f.degree
    monos = w_monomials(degree, mib.weights)
    if not monos:
        raise NotExpressible(f"no invariant monomials of weight {degree}")
    cols = [mib.compose_monomial(m) for m in monos]
    rows, keys = _coefficient_matrix(cols + [f])
    A = [r[:-1] for r in rows]
    b = [r[-1] for r in rows]
    sol = exact_solve(A, b)
    if sol is None:
        raise NotExpressible(f"{f} is not a polynomial in the basic invariants")
    kernel = exact_nullspace(A, len(monos))
    if kernel:
        best = _min_support_solution(cols, f, len(kernel))
        if best is not None:
            sol = best
    f_hat = Polynomial({m: c for m, c in zip(monos, sol)}, p_vars)
    if return_kernel:
        relations = [Polynomial({m: c for m, c in zip(monos, v)}, p_vars) for v in kernel]
        return f_hat, relations
    return f_hat


@dataclass(eq=False)
class PHatMatrix:
    entries: tuple[tuple[Polynomial, ...], ...]
    weights: WeightSystem
    kernel: list[Polynomial] = field(default_factory=list)

    @property
    def q(self) -> int:
        return len(self.entries)

    def __getitem__(self, ab: tuple[int, int]) -> Polynomial:
        a, b = ab
        return self.entries[a][b]

    @cached_property
    def _entry_fn(self) -> PolynomialMap:
        return PolynomialMap([e for row in self.entries for e in row])

    def evaluate(self, p: Sequence) -> np.ndarray:
        return self.evaluate_many(np.asarray(p, dtype=float)[None, :])[0]

    def evaluate_many(self, P: np.ndarray) -> np.ndarray:
        """Shape ``(m, q, q)``."""
        M = self._entry_fn(P)
        return M.reshape(M.shape[0], self.q, self.q)

    def rank_many(self, P: np.ndarray, rtol: float = 1e-7) -> np.ndarray:
        """Numeric rank of P-hat at each row, after rescaling the row onto ``p_q = 1``.

        The rescaling ``p_a -> p_a / p_q^(d_a/2)`` is a congruence by a positive
        diagonal matrix, so it keeps the rank while removing the spread in
        magnitude between entries of different weight.
        """
        P = np.atleast_2d(np.asarray(P, dtype=float))
        d = np.array(self.weights.degrees, dtype=float)
        pq = P[:, -1:]
        scale = np.where(pq > 0, np.abs(pq), 1.0) ** (d / d[-1])[None, :]
        return np.array([numeric_rank(m, rtol) for m in self.evaluate_many(P / scale)])

    def evaluate_exact(self, p: Sequence[Fraction]) -> list[list[Fraction]]:
        return [[e.evaluate(list(p)) for e in row] for row in self.entries]

    def check_structure(self) -> None:
        """Symmetry, weight grading and the last-row identity; raises AssertionError."""
        q = self.q
        d = self.weights.degrees
        pv = self.entries[0][0].variables
        for a in range(q):
            for b in range(q):
                e = self.entries[a][b]
                if e != self.entries[b][a]:
                    raise AssertionError(f"P-hat not symmetric at ({a + 1},{b + 1})")
                if not e.is_w_homogeneous(self.weights, d[a] + d[b] - 2):
                    raise AssertionError(f"entry ({a + 1},{b + 1}) has wrong weight")
            expected = Polynomial.var(a, pv) * (2 * d[a])
            if self.entries[q - 1][a] != expected:
                raise AssertionError(f"last row entry {a + 1} is {self.entries[q - 1][a]}, expected {expected}")

    def to_text(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.entries]


def compute_phat(mib: MIBSpec) -> PHatMatrix:
    """Build ``P_ab(x) = grad p_a . grad p_b`` and express each entry in the invariants."""
    q = mib.q
    grads = mib.gradients
    entries: list[list[Polynomial | None]] = [[None] * q for _ in range(q)]
    relations: list[Polynomial] = []
    for a in range(q):
        for b in range(a, q):
            dot = Polynomial.zero(mib.x_vars)
            for ga, gb in zip(grads[a], grads[b]):
                dot = dot + ga * gb
            f_hat, kernel = express_in_mib(dot, mib, return_kernel=True)
            relations.extend(k for k in kernel if k not in relations)
            entries[a][b] = entries[b][a] = f_hat
    ph = PHatMatrix(tuple(tuple(row) for row in entries), mib.weights, relations)
    ph.check_structure()
    return ph


def _det(m: list[list[Polynomial]]) -> Polynomial:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = Polynomial.zero(m[0][0].variables)
    for j in range(n):
        if m[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def det_phat(ph: PHatMatrix) -> Polynomial:
    """Exact determinant by cofactor expansion."""
    return _det([list(row) for row in ph.entries])


@dataclass(frozen=True)
class Syzygy:
    relation: Polynomial
    weight: int


def find_syzygies(mib: MIBSpec, max_weight: int | None = None) -> list[Syzygy]:
    """Polynomial relations among the invariants up to ``max_weight``.

    Relations that are multiples of ones found at lower weight are dropped, so
    the result lists generators only (within the weight bound).
    """
    ws = mib.weights
    if max_weight is None:
        d = ws.degrees
        max_weight = 2 * (2 * d[0] - 2)
    found: list[Syzygy] = []
    for w in range(1, max_weight + 1):
        monos = w_monomials(w, ws)
        if len(monos) < 2:
            continue
        cols = [mib.compose_monomial(m) for m in monos]
        rows, _ = _coefficient_matrix(cols)
        kernel = exact_nullspace(rows, len(monos))
        if not kernel:
            continue
        index = {m: i for i, m in enumerate(monos)}
        # span of lower syzygies times monomials of the complementary weight
        span: list[list[Fraction]] = []
        for s in found:
            for m in w_monomials(w - s.weight, ws):
                v = [Fraction(0)] * len(monos)
                for e, c in s.relation.as_dict().items():
                    v[index[tuple(a + b for a, b in zip(e, m))]] += c
                span.append(v)
        rank = len(rref(span)[1]) if span else 0
        for vec in kernel:
            trial = span + [vec]
            new_rank = len(rref(trial)[1])
            if new_rank > rank:
                span, rank = trial, new_rank
                rel = Polynomial({m: c for m, c in zip(monos, vec)}, mib.p_vars).primitive()
                found.append(Syzygy(rel, w))
    return found


def p_matrix_numeric(mib: MIBSpec, X: np.ndarray) -> np.ndarray:
    """``P(x)`` from gradients directly, shape ``(m, q, q)``."""
    J = mib.jacobian(X)
    return np.einsum("mai,mbi->mab", J, J)

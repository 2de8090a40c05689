"""Exact multivariate polynomials with rational coefficients.

Polynomials are immutable. Terms are kept in a dict keyed by exponent tuples;
iteration, printing and leading-term selection use graded lexicographic order.
"""

from __future__ import annotations

import ast
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "PolynomialMap",
    "WeightSystem",
    "NotDivisible",
    "VariableMismatch",
    "grlex_key",
    "w_monomials",
    "x_variables",
    "p_variables",
    "parse_polynomial",
]


class NotDivisible(ArithmeticError):
    """Raised when an exact polynomial division leaves a remainder."""


class VariableMismatch(ValueError):
    """Raised when combining polynomials over different variable lists."""


def grlex_key(exps: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    return (sum(exps), exps)


def x_variables(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


def p_variables(q: int) -> tuple[str, ...]:
    return tuple(f"p{a + 1}" for a in range(q))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"coefficient must be rational, got {type(c).__name__}")


class Polynomial:
    """Immutable polynomial over the rationals.

    Parameters
    ----------
    terms : mapping
        Exponent tuple -> coefficient. Zero coefficients are dropped.
    variables : sequence of str
        Variable names; every exponent tuple must have this length.
    """

    def __init__(self, terms: Mapping[tuple[int, ...], object], variables: Sequence[str]):
        variables = tuple(variables)
        n = len(variables)
        clean: dict[tuple[int, ...], Fraction] = {}
        for exps, c in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise ValueError(f"exponent {exps} does not match {n} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = _as_fraction(c)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
                if not clean[exps]:
                    del clean[exps]
        self.variables = variables
        self._terms = clean

    # construction helpers

    @classmethod
    def _raw(cls, terms: dict, variables: tuple[str, ...]) -> "Polynomial":
        obj = cls.__new__(cls)
        obj.variables = variables
        obj._terms = terms
        return obj

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls._raw({}, tuple(variables))

    @classmethod
    def constant(cls, c, variables: Sequence[str]) -> "Polynomial":
        variables = tuple(variables)
        return cls({(0,) * len(variables): c}, variables)

    @classmethod
    def var(cls, i: int, variables: Sequence[str]) -> "Polynomial":
        variables = tuple(variables)
        exps = [0] * len(variables)
        exps[i] = 1
        return cls._raw({tuple(exps): Fraction(1)}, variables)

    @classmethod
    def monomial(cls, exps: Sequence[int], variables: Sequence[str], coeff=1) -> "Polynomial":
        return cls({tuple(exps): coeff}, variables)

    @classmethod
    def parse(cls, text: str, variables: Sequence[str]) -> "Polynomial":
        return parse_polynomial(text, variables)

    # basic queries

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @cached_property
    def terms(self) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
        """Terms sorted by decreasing graded lexicographic order."""
        return tuple(sorted(self._terms.items(), key=lambda t: grlex_key(t[0]), reverse=True))

    def as_dict(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def coeff(self, exps: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(exps), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = {sum(e) for e in self._terms}
        if not degs:
            return True
        if len(degs) != 1:
            return False
        return degree is None or degs == {degree}

    def leading_term(self) -> tuple[tuple[int, ...], Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        return self.terms[0]

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    # equality / hashing

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.variables == other.variables and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({(0,) * self.nvars: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.variables, frozenset(self._terms.items())))

    # arithmetic

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.variables != self.variables:
                raise VariableMismatch(f"{self.variables} vs {other.variables}")
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(other, self.variables)
        return NotImplemented

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Polynomial._raw(out, self.variables)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw({e: -c for e, c in self._terms.items()}, self.variables)

    def __sub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            if not other:
                return Polynomial.zero(self.variables)
            return Polynomial._raw({e: c * other for e, c in self._terms.items()}, self.variables)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial._raw({e: c for e, c in out.items() if c}, self.variables)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero scalar")
            return self * (Fraction(1) / Fraction(other))
        return self.exact_divide(other)

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(1, self.variables)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def exact_divide(self, g: "Polynomial") -> "Polynomial":
        """Return ``h`` with ``self == g * h``; raise :class:`NotDivisible` otherwise.

        Multivariate division by a single divisor in graded lexicographic order.
        """
        g = self._coerce(g)
        if g.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        lead_e, lead_c = g.leading_term()
        rest = [(e, c) for e, c in g._terms.items() if e != lead_e]
        work = dict(self._terms)
        quotient: dict[tuple[int, ...], Fraction] = {}
        while work:
            e = max(work, key=grlex_key)
            c = work[e]
            shift = tuple(a - b for a, b in zip(e, lead_e))
            if any(s < 0 for s in shift):
                raise NotDivisible(f"{self} is not divisible by {g}")
            t = c / lead_c
            quotient[shift] = quotient.get(shift, 0) + t
            del work[e]
            for e2, c2 in rest:
                k = tuple(a + b for a, b in zip(shift, e2))
                v = work.get(k, 0) - t * c2
                if v:
                    work[k] = v
                else:
                    work.pop(k, None)
        return Polynomial._raw({e: c for e, c in quotient.items() if c}, self.variables)

    def divides(self, f: "Polynomial") -> bool:
        try:
            f.exact_divide(self)
        except NotDivisible:
            return False
        return True

    # calculus

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                k = list(e)
                k[i] -= 1
                out[tuple(k)] = c * e[i]
        return Polynomial._raw(out, self.variables)

    def gradient(self) -> list["Polynomial"]:
        return [self.diff(i) for i in range(self.nvars)]

    # evaluation

    def evaluate(self, point: Sequence):
        """Evaluate at a point; exact for rational input, float otherwise."""
        if len(point) != self.nvars:
            raise ValueError(f"point has {len(point)} entries, expected {self.nvars}")
        if all(isinstance(v, (int, Fraction)) for v in point):
            total = Fraction(0)
            for e, c in self._terms.items():
                m = c
                for v, k in zip(point, e):
                    if k:
                        m *= Fraction(v) ** k
                total += m
            return total
        return float(self.evaluate_many(np.asarray([point], dtype=float))[0])

    @cached_property
    def _numeric(self) -> tuple[np.ndarray, np.ndarray]:
        if not self._terms:
            return np.zeros((0, self.nvars), dtype=np.int64), np.zeros(0)
        exps = np.array(list(self._terms), dtype=np.int64)
        coeffs = np.array([float(c) for c in self._terms.values()])
        return exps, coeffs

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Float evaluation at each row of ``points`` (shape ``(m, nvars)``)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.nvars:
            raise ValueError(f"points have {points.shape[1]} columns, expected {self.nvars}")
        exps, coeffs = self._numeric
        if not len(coeffs):
            return np.zeros(points.shape[0])
        maxdeg = int(exps.max()) if exps.size else 0
        # powers[k, m, i] = points[m, i] ** k
        powers = np.ones((maxdeg + 1,) + points.shape)
        for k in range(1, maxdeg + 1):
            powers[k] = powers[k - 1] * points
        mono = np.ones((points.shape[0], len(coeffs)))
        for i in range(self.nvars):
            mono *= powers[exps[:, i], :, i].T
        return mono @ coeffs

    # substitution

    def compose(self, substitutions: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute ``substitutions[i]`` for variable ``i``."""
        if len(substitutions) != self.nvars:
            raise ValueError("need one substitution per variable")
        if not substitutions:
            return self
        target = substitutions[0].variables
        cache: dict[tuple[int, int], Polynomial] = {}

        def power(i: int, k: int) -> Polynomial:
            if (i, k) not in cache:
                cache[(i, k)] = substitutions[i] if k == 1 else power(i, k - 1) * substitutions[i]
            return cache[(i, k)]

        result = Polynomial.zero(target)
        for e, c in self._terms.items():
            m = Polynomial.constant(c, target)
            for i, k in enumerate(e):
                if k:
                    m = m * power(i, k)
            result = result + m
        return result

    def substitute(self, values: Mapping[int, object]) -> "Polynomial":
        """Fix some variables to rational values, keeping the variable list."""
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self._terms.items():
            k = list(e)
            for i, v in values.items():
                if k[i]:
                    c = c * Fraction(v) ** k[i]
                    k[i] = 0
            if c:
                key = tuple(k)
                out[key] = out.get(key, 0) + c
        return Polynomial._raw({e: c for e, c in out.items() if c}, self.variables)

    # normalisation

    def primitive(self) -> "Polynomial":
        """Scale to coprime integer coefficients with positive leading coefficient."""
        if not self._terms:
            return self
        lcm = 1
        for c in self._terms.values():
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in self._terms.values()]
        g = 0
        for v in ints:
            g = math.gcd(g, v)
        scale = Fraction(lcm, g)
        if self.leading_term()[1] < 0:
            scale = -scale
        return self * scale

    # weights

    def weights(self, ws: "WeightSystem") -> set[int]:
        return {ws.weight(e) for e in self._terms}

    def is_w_homogeneous(self, ws: "WeightSystem", weight: int | None = None) -> bool:
        w = self.weights(ws)
        if not w:
            return True
        return len(w) == 1 and (weight is None or w == {weight})

    def w_component(self, ws: "WeightSystem", weight: int) -> "Polynomial":
        return Polynomial._raw(
            {e: c for e, c in self._terms.items() if ws.weight(e) == weight}, self.variables)

    def max_weight(self, ws: "WeightSystem") -> int:
        return max(self.weights(ws), default=-1)

    # text

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.terms:
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(self.variables, e) if k)
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not mono:
                body = str(a)
            elif a == 1:
                body = mono
            else:
                body = f"{a}*{mono}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Polynomial({str(self)!r}, variables={self.variables})"


class PolynomialMap:
    """Several polynomials in the same variables, evaluated together in float arithmetic.

    The union of their monomials is evaluated once per call, which is much
    cheaper than evaluating each polynomial separately on small batches.
    """

    def __init__(self, polynomials: Sequence[Polynomial]):
        polys = list(polynomials)
        if not polys:
            raise ValueError("empty polynomial map")
        variables = polys[0].variables
        if any(f.variables != variables for f in polys):
            raise VariableMismatch("polynomials use different variables")
        monos = sorted({e for f in polys for e in f._terms})
        index = {e: k for k, e in enumerate(monos)}
        self.variables = variables
        self.size = len(polys)
        self._exps = np.array(monos, dtype=np.int64).reshape(len(monos), len(variables))
        self._coeffs = np.zeros((len(monos), len(polys)))
        for j, f in enumerate(polys):
            for e, c in f._terms.items():
                self._coeffs[index[e], j] = float(c)
        self._maxdeg = int(self._exps.max()) if self._exps.size else 0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Shape ``(m, size)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not len(self._exps):
            return np.zeros((points.shape[0], self.size))
        powers = np.ones((self._maxdeg + 1,) + points.shape)
        for k in range(1, self._maxdeg + 1):
            powers[k] = powers[k - 1] * points
        mono = np.ones((points.shape[0], len(self._exps)))
        for i in range(points.shape[1]):
            mono *= powers[self._exps[:, i], :, i].T
        return mono @ self._coeffs


@dataclass(frozen=True)
class WeightSystem:
    """Degrees ``d_1 >= ... >= d_q = 2`` of the basic invariants."""

    degrees: tuple[int, ...]

    def __post_init__(self):
        degrees = tuple(int(d) for d in self.degrees)
        object.__setattr__(self, "degrees", degrees)
        if not degrees:
            raise ValueError("weight system needs at least one degree")
        if any(d <= 0 for d in degrees):
            raise ValueError("degrees must be positive")
        if degrees[-1] != 2:
            raise ValueError("last degree must be 2")
        if any(a < b for a, b in zip(degrees, degrees[1:])):
            raise ValueError("degrees must be non-increasing")

    @property
    def q(self) -> int:
        return len(self.degrees)

    def weight(self, exps: Sequence[int]) -> int:
        return sum(e * d for e, d in zip(exps, self.degrees))

    def monomials(self, weight: int) -> list[tuple[int, ...]]:
        return w_monomials(weight, self)


def w_monomials(weight: int, ws: WeightSystem) -> list[tuple[int, ...]]:
    """All exponent vectors ``e`` with ``sum(e_a * d_a) == weight``, grlex-descending."""
    if weight < 0:
        raise ValueError("weight must be non-negative")
    degrees = ws.degrees
    out: list[tuple[int, ...]] = []

    def rec(i: int, remaining: int, prefix: list[int]):
        if i == len(degrees) - 1:
            if remaining % degrees[i] == 0:
                out.append(tuple(prefix + [remaining // degrees[i]]))
            return
        for k in range(remaining // degrees[i] + 1):
            rec(i + 1, remaining - k * degrees[i], prefix + [k])

    rec(0, weight, [])
    out.sort(key=grlex_key, reverse=True)
    return out


# text format


class _PolyBuilder(ast.NodeVisitor):
    def __init__(self, variables: tuple[str, ...]):
        self.variables = variables
        self.index = {v: i for i, v in enumerate(variables)}

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Constant(self, node):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise ValueError(f"only integer literals are allowed, got {node.value!r}")
        return Polynomial.constant(node.value, self.variables)

    def visit_Name(self, node):
        if node.id not in self.index:
            raise ValueError(f"unknown variable {node.id!r}")
        return Polynomial.var(self.index[node.id], self.variables)

    def visit_UnaryOp(self, node):
        v = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            return -v
        if isinstance(node.op, ast.UAdd):
            return v
        raise ValueError("unsupported unary operator")

    def visit_BinOp(self, node):
        left = self.visit(node.left)
        if isinstance(node.op, ast.Pow):
            exp = self.visit(node.right)
            if exp.degree > 0 or exp.constant_term().denominator != 1:
                raise ValueError("exponents must be integer literals")
            return left ** int(exp.constant_term())
        right = self.visit(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if right.degree > 0:
                raise ValueError("division only by constants")
            return left / right.constant_term()
        raise ValueError("unsupported operator")

    def generic_visit(self, node):
        raise ValueError(f"unsupported syntax: {type(node).__name__}")


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse ``"3/2*x1^2*x2 - x3 + 1"``-style text (parentheses allowed)."""
    tree = ast.parse(text.replace("^", "**"), mode="eval")
    return _PolyBuilder(tuple(variables)).visit(tree)


def monomial_basis(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of the given total degree."""
    out = []
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return out



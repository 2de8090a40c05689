"""Compact orthogonal groups: finite generators times an optional U(1) block rotation.

Elements are float matrices. The continuous family ``u(alpha)`` rotates
coordinate pairs ``(i, j)`` by ``+alpha`` or ``-alpha``; finite elements are
enumerated as coset representatives modulo that family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .linalg import rref_float
from .poly import Polynomial

__all__ = [
    "ClosureExceeded",
    "RotationFamily",
    "GroupElement",
    "GroupPresentation",
    "FixedSubspace",
    "IsotropySubgroup",
    "IsotropySignature",
    "InvarianceReport",
    "finite_closure",
    "coset_alignment",
    "verify_invariance",
    "fixed_subspaces",
    "isotropy_subgroup",
    "isotropy_signature",
    "element_order",
    "format_angle",
]

ORTHO_TOL = 1e-9
COSET_TOL = 1e-8


class ClosureExceeded(RuntimeError):
    """More coset representatives than allowed; the generators are probably not finite mod U(1)."""


def format_angle(alpha: float) -> str:
    """Pretty-print an angle as a rational multiple of pi when possible."""
    frac = Fraction(alpha / math.pi).limit_denominator(24)
    if abs(float(frac) * math.pi - alpha) > 1e-9:
        return f"{alpha:.12g}"
    if frac == 0:
        return "0"
    num, den = frac.numerator, frac.denominator
    head = "-" if num < 0 else ""
    num = abs(num)
    body = "π" if num == 1 else f"{num}π"
    return head + (body if den == 1 else f"{body}/{den}")


def snap_angle(alpha: float, tol: float = 1e-9) -> float:
    alpha = math.remainder(alpha, 2 * math.pi)
    frac = Fraction(alpha / math.pi).limit_denominator(24)
    if frac == -1:
        frac = Fraction(1)  # report the half turn as +pi
    snapped = float(frac) * math.pi
    return snapped if abs(math.remainder(snapped - alpha, 2 * math.pi)) <= tol else alpha


@dataclass(frozen=True)
class RotationFamily:
    """``u(alpha)``: rotation by ``sign*alpha`` in each listed coordinate plane."""

    n: int
    blocks: tuple[tuple[int, int, int], ...]
    name: str = "U1"

    def __post_init__(self):
        blocks = tuple((int(i), int(j), int(s)) for i, j, s in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        used = [k for i, j, _ in blocks for k in (i, j)]
        if len(set(used)) != len(used):
            raise ValueError("rotation blocks must use disjoint coordinates")
        if any(k < 0 or k >= self.n for k in used):
            raise ValueError("rotation block index out of range")
        if any(s not in (1, -1) for _, _, s in blocks):
            raise ValueError("block sign must be +1 or -1")

    @property
    def parts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(F, C, S)`` with ``u(alpha) = F + cos(alpha) C + sin(alpha) S``."""
        F = np.eye(self.n)
        C = np.zeros((self.n, self.n))
        S = np.zeros((self.n, self.n))
        for i, j, s in self.blocks:
            F[i, i] = F[j, j] = 0.0
            C[i, i] = C[j, j] = 1.0
            S[i, j] = -s
            S[j, i] = s
        return F, C, S

    def matrix(self, alpha: float) -> np.ndarray:
        F, C, S = self.parts
        return F + math.cos(alpha) * C + math.sin(alpha) * S


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    word: str = "E"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("group element must be a square matrix")
        if np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) > ORTHO_TOL:
            raise ValueError(f"element {self.word!r} is not orthogonal")

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, _join_words(self.word, other.word))

    def act(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)


def _join_words(a: str, b: str) -> str:
    if a == "E":
        return b
    if b == "E":
        return a
    return f"{a}·{b}"


@dataclass(frozen=True)
class GroupPresentation:
    n: int
    generators: tuple[GroupElement, ...] = ()
    family: RotationFamily | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        for g in self.generators:
            if g.matrix.shape != (self.n, self.n):
                raise ValueError(f"generator {g.word!r} has wrong shape")
        if self.family is not None:
            if self.family.n != self.n:
                raise ValueError("rotation family dimension mismatch")
            for a, b in [(0.3, 1.1), (2.0, -0.7), (math.pi, 0.5)]:
                lhs = self.family.matrix(a) @ self.family.matrix(b)
                if np.max(np.abs(lhs - self.family.matrix(a + b))) > ORTHO_TOL:
                    raise ValueError("rotation family is not a one-parameter group")

    def u(self, alpha: float) -> np.ndarray:
        if self.family is None:
            return np.eye(self.n)
        return self.family.matrix(alpha)

    def element(self, alpha: float, rep: GroupElement) -> GroupElement:
        if self.family is None or alpha == 0:
            return rep
        name = self.family.name
        return GroupElement(self.u(alpha) @ rep.matrix, _join_words(f"{name}({format_angle(alpha)})", rep.word))

    def identity(self) -> GroupElement:
        return GroupElement(np.eye(self.n), "E")


def coset_alignment(gp: GroupPresentation, a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Best ``alpha`` with ``a ≈ u(alpha) b`` and the max-entry residual."""
    m = a @ b.T
    if gp.family is None:
        return 0.0, float(np.max(np.abs(m - np.eye(gp.n))))
    F, C, S = gp.family.parts
    cc = float(np.sum(m * C))
    ss = float(np.sum(m * S))
    norm = math.hypot(cc, ss)
    alpha = math.atan2(ss, cc) if norm > 0 else 0.0
    return alpha, float(np.max(np.abs(m - gp.u(alpha))))


def finite_closure(gp: GroupPresentation, max_elements: int = 1000) -> list[GroupElement]:
    """Coset representatives (modulo the rotation family) of the generated group."""
    reps = [gp.identity()]
    frontier = [gp.identity()]
    while frontier:
        nxt = []
        for h in frontier:
            for g in gp.generators:
                cand = g @ h
                if any(coset_alignment(gp, cand.matrix, r.matrix)[1] <= COSET_TOL for r in reps):
                    continue
                reps.append(cand)
                nxt.append(cand)
                if len(reps) > max_elements:
                    raise ClosureExceeded(f"more than {max_elements} coset representatives")
        frontier = nxt
    return reps


def find_coset(gp: GroupPresentation, closure: Sequence[GroupElement], m: np.ndarray) -> tuple[int, float]:
    """Index of the representative ``h`` and angle with ``m ≈ u(alpha) h``."""
    for k, h in enumerate(closure):
        alpha, res = coset_alignment(gp, m, h.matrix)
        if res <= COSET_TOL:
            return k, alpha
    raise LookupError("matrix is not in the group")


def _angle_grid(gp: GroupPresentation, n_angles: int) -> np.ndarray:
    if gp.family is None:
        return np.zeros(1)
    return np.linspace(0.0, 2 * math.pi, n_angles, endpoint=False)


@dataclass
class InvarianceReport:
    passed: bool
    worst: float
    worst_element: str
    checked: int
    tol: float

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"{status}: worst relative violation {self.worst:.3g} at {self.worst_element} ({self.checked} checks)"


def verify_invariance(
    f: Polynomial,
    gp: GroupPresentation,
    samples: int = 50,
    tol: float = 1e-9,
    closure: Sequence[GroupElement] | None = None,
    n_angles: int = 36,
    rng: np.random.Generator | None = None,
) -> InvarianceReport:
    """Spot-check ``f(g x) == f(x)`` for every coset representative and a grid of angles."""
    if f.nvars != gp.n:
        raise ValueError("polynomial and group dimension differ")
    rng = np.random.default_rng(0) if rng is None else rng
    closure = finite_closure(gp) if closure is None else closure
    xs = rng.standard_normal((samples, gp.n))
    fx = f.evaluate_many(xs)
    exps, coeffs = f._numeric
    norms = np.linalg.norm(xs, axis=1)
    # crude bound on the size of f's terms at x, used as the error scale
    scale = np.array([np.sum(np.abs(coeffs) * nx ** exps.sum(axis=1)) for nx in norms]) if len(coeffs) else np.ones(samples)
    scale = np.maximum(scale, 1e-300)
    worst, worst_el, checked = 0.0, "E", 0
    for h in closure:
        for alpha in _angle_grid(gp, n_angles):
            g = gp.u(alpha) @ h.matrix
            fgx = f.evaluate_many(xs @ g.T)
            viol = float(np.max(np.abs(fgx - fx) / scale))
            checked += samples
            if viol > worst:
                worst = viol
                worst_el = gp.element(alpha, h).word
    return InvarianceReport(worst <= tol, worst, worst_el, checked, tol)


@dataclass(eq=False)
class FixedSubspace:
    """Orthonormal basis (columns) of ``ker(g - 1)`` for one or more elements."""

    elements: tuple[GroupElement, ...]
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def label(self) -> str:
        return " ∩ ".join(f"Fix({g.word})" for g in self.elements)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.projector() @ x)) <= tol * max(1.0, float(np.linalg.norm(x)))

    def sample(self, rng: np.random.Generator, m: int = 1, unit: bool = True) -> np.ndarray:
        y = rng.standard_normal((m, self.dim))
        x = y @ self.basis.T
        if unit:
            x /= np.linalg.norm(x, axis=1, keepdims=True)
        return x

    def rational_basis(self, max_denominator: int = 1000, tol: float = 1e-12) -> list[list[Fraction]] | None:
        """Rational spanning vectors if the subspace is defined over the rationals."""
        if self.dim == 0:
            return []
        rows = rref_float(self.basis.T)
        out = []
        for row in rows:
            fr = [Fraction(float(v)).limit_denominator(max_denominator) for v in row]
            if max(abs(float(a) - b) for a, b in zip(fr, row)) > 1e-10:
                return None
            out.append(fr)
        mat = np.array([[float(v) for v in r] for r in out]).T
        for g in self.elements:
            if np.max(np.abs(g.matrix @ mat - mat)) > tol * 1e3:
                return None
        return out


def _kernel(m: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    _, s, vt = np.linalg.svd(m)
    return vt[s <= tol].T.copy() if s.size else np.zeros((m.shape[1], 0))


def _same_subspace(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> bool:
    if a.shape != b.shape:
        return False
    return float(np.max(np.abs(a @ a.T - b @ b.T))) <= tol


def fixed_subspaces(
    gp: GroupPresentation,
    closure: Sequence[GroupElement],
    n_angles: int = 720,
    tol: float = 1e-9,
    intersections: bool = True,
) -> list[FixedSubspace]:
    """Non-trivial fixed subspaces of group elements ``u(alpha) h``.

    For each representative the smallest singular value of ``u(alpha) h - 1``
    is scanned over ``n_angles`` angles; local minima are refined to 1e-12 and
    kept when they reach zero. Pairwise intersections are added when
    ``intersections`` is set, since some isotropy groups need two generators.
    """
    found: list[FixedSubspace] = []

    def add(sub: FixedSubspace):
        if sub.dim == 0:
            return
        if any(_same_subspace(sub.basis, f.basis) for f in found):
            return
        found.append(sub)

    for h in closure:
        if gp.family is None:
            add(FixedSubspace((h,), _kernel(h.matrix - np.eye(gp.n))))
            continue
        grid = _angle_grid(gp, n_angles)
        smin = np.array([np.linalg.svd(gp.u(a) @ h.matrix - np.eye(gp.n), compute_uv=False)[-1] for a in grid])
        if np.all(smin <= tol):
            # a whole circle of conjugate subspaces; keep the alpha = 0 and alpha = pi members
            for alpha in (0.0, math.pi):
                g = gp.element(alpha, h)
                add(FixedSubspace((g,), _kernel(g.matrix - np.eye(gp.n))))
            continue
        step = grid[1] - grid[0]
        for k in range(len(grid)):
            if smin[k] > smin[k - 1] or smin[k] > smin[(k + 1) % len(grid)]:
                continue
            if smin[k] > 4 * step:
                continue

            def objective(a):
                return np.linalg.svd(gp.u(a) @ h.matrix - np.eye(gp.n), compute_uv=False)[-1]

            res = minimize_scalar(objective, bounds=(grid[k] - step, grid[k] + step), method="bounded",
                                  options={"xatol": 1e-13})
            alpha = snap_angle(float(res.x))
            if objective(alpha) > tol:
                continue
            g = gp.element(alpha, h)
            add(FixedSubspace((g,), _kernel(g.matrix - np.eye(gp.n))))

    if intersections:
        base = list(found)
        for i in range(len(base)):
            for j in range(i + 1, len(base)):
                a, b = base[i], base[j]
                stacked = np.vstack([np.eye(gp.n) - a.projector(), np.eye(gp.n) - b.projector()])
                ker = _kernel(stacked)
                if 0 < ker.shape[1] < min(a.dim, b.dim):
                    add(FixedSubspace(a.elements + b.elements, ker))
    found.sort(key=lambda f: (-f.dim, f.label))
    return found


def element_order(m: np.ndarray, max_order: int = 120, tol: float = 1e-8) -> int:
    """Smallest ``k`` with ``m^k = 1``, or 0 if none up to ``max_order``."""
    eye = np.eye(m.shape[0])
    power = m.copy()
    for k in range(1, max_order + 1):
        if np.max(np.abs(power - eye)) <= tol:
            return k
        power = power @ m
    return 0


@dataclass
class IsotropyElement:
    rep_index: int
    alpha: float | None  # None: every angle works
    element: GroupElement

    @property
    def word(self) -> str:
        return self.element.word


@dataclass
class IsotropySubgroup:
    base_point: np.ndarray
    elements: list[IsotropyElement] = field(default_factory=list)
    continuous_dimension: int = 0

    @property
    def words(self) -> list[str]:
        return [e.word for e in self.elements]


class IsotropySignature(NamedTuple):
    continuous_dimension: int
    n_discrete: int
    orders: tuple[int, ...]

    def __str__(self) -> str:
        return f"({self.continuous_dimension}, {self.n_discrete}, {{{','.join(map(str, self.orders))}}})"


def _circle_solutions(A: np.ndarray, b: np.ndarray, tol: float) -> list[tuple[float, float]] | None:
    """Solve ``A (c, s) = b`` with ``c^2 + s^2 = 1``; None means every angle works."""
    u, sv, vt = np.linalg.svd(A, full_matrices=False)
    top = sv[0] if sv.size else 0.0
    bnorm = float(np.linalg.norm(b))
    if top <= tol:
        return None if bnorm <= tol else []
    rank = int(np.sum(sv > tol * max(top, 1.0)))
    coef = vt[:rank].T @ ((u[:, :rank].T @ b) / sv[:rank])
    if np.linalg.norm(A @ coef - b) > tol * max(1.0, bnorm):
        return []
    if rank == 2:
        cands = [coef]
    else:
        k = vt[1]
        # |coef + t k|^2 = 1, with coef ⟂ k
        rem = 1.0 - float(coef @ coef)
        if rem < -tol:
            return []
        t = math.sqrt(max(rem, 0.0))
        cands = [coef + t * k, coef - t * k] if t > tol else [coef]
    return [(float(c), float(s)) for c, s in cands if abs(c * c + s * s - 1.0) <= 1e-9]


def isotropy_subgroup(x, gp: GroupPresentation, closure: Sequence[GroupElement], tol: float = 1e-9) -> IsotropySubgroup:
    """Elements ``u(alpha) h`` fixing ``x``; the equations are linear in ``(cos, sin)``."""
    x = np.asarray(x, dtype=float)
    scale = max(float(np.linalg.norm(x)), 1.0)
    iso = IsotropySubgroup(base_point=x)
    for k, h in enumerate(closure):
        y = h.matrix @ x
        if gp.family is None:
            if np.linalg.norm(y - x) <= tol * scale:
                iso.elements.append(IsotropyElement(k, 0.0, h))
            continue
        F, C, S = gp.family.parts
        A = np.column_stack([C @ y, S @ y])
        sols = _circle_solutions(A, x - F @ y, tol * scale)
        if sols is None:
            iso.continuous_dimension = 1
            iso.elements.append(IsotropyElement(k, None, h))
            continue
        for c, s in sols:
            alpha = snap_angle(math.atan2(s, c))
            g = gp.element(alpha, h)
            if np.linalg.norm(g.matrix @ x - x) <= tol * scale:
                iso.elements.append(IsotropyElement(k, alpha, g))
    return iso


def isotropy_signature(iso: IsotropySubgroup) -> IsotropySignature:
    """Conjugation-invariant summary: (continuous dim, #discrete solutions, element orders)."""
    orders = tuple(sorted(element_order(e.element.matrix) for e in iso.elements))
    return IsotropySignature(iso.continuous_dimension, len(iso.elements), orders)

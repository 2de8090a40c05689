"""Active polynomials: numeric interpolation on rank-deficient samples, exact verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .group import FixedSubspace
from .linalg import RationalizationFailed, numeric_nullspace, numeric_rank, rationalize_vector, rref_float
from .pmatrix import MIBSpec, PHatMatrix, det_phat
from .poly import NotDivisible, Polynomial, WeightSystem, w_monomials

__all__ = [
    "NotActive",
    "IncompleteCover",
    "ActivePolynomial",
    "BoundarySample",
    "ActiveSet",
    "boundary_samples",
    "interpolate_vanishing",
    "verify_master",
    "find_active",
    "relative_value",
]


class NotActive(ValueError):
    """A candidate fails the master relations."""


class IncompleteCover(RuntimeError):
    """Some boundary samples are not explained by any verified relation."""

    def __init__(self, message: str, samples=None):
        super().__init__(message)
        self.samples = samples or []


@dataclass(frozen=True)
class ActivePolynomial:
    polynomial: Polynomial
    weight: int
    multipliers: tuple[Polynomial, ...]
    composite: bool = False

    def __str__(self) -> str:
        return str(self.polynomial)


@dataclass
class BoundarySample:
    x: np.ndarray
    p: np.ndarray
    rank: int
    source: int


@dataclass
class ActiveSet:
    actives: list[ActivePolynomial]
    product: Polynomial
    samples: list[BoundarySample] = field(default_factory=list)

    @property
    def polynomials(self) -> list[Polynomial]:
        return [a.polynomial for a in self.actives]


def relative_value(f: Polynomial, P: np.ndarray) -> np.ndarray:
    """``|f(p)|`` divided by the sum of absolute term values (0 where that sum vanishes)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    exps, coeffs = f._numeric
    if not len(coeffs):
        return np.zeros(P.shape[0])
    mono = np.ones((P.shape[0], len(coeffs)))
    for i in range(P.shape[1]):
        mono *= P[:, i][:, None] ** exps[:, i][None, :]
    val = mono @ coeffs
    scale = np.abs(mono) @ np.abs(coeffs)
    out = np.zeros_like(val)
    nz = scale > 0
    out[nz] = np.abs(val[nz]) / scale[nz]
    return out


def boundary_samples(
    mib: MIBSpec,
    ph: PHatMatrix,
    subspaces: Sequence[FixedSubspace],
    per_subspace: int = 40,
    rng: np.random.Generator | None = None,
    rank_rtol: float = 1e-7,
) -> list[BoundarySample]:
    """Unit-norm random points in each fixed subspace with the numeric rank of P-hat there."""
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    for k, sub in enumerate(subspaces):
        X = sub.sample(rng, per_subspace)
        P = mib.orbit_map(X)
        M = ph.evaluate_many(P)
        for x, p, m in zip(X, P, M):
            out.append(BoundarySample(x, p, numeric_rank(m, rank_rtol), k))
    return out


def _monomial_matrix(points: np.ndarray, monos: Sequence[tuple[int, ...]]) -> np.ndarray:
    E = np.array(monos, dtype=float)
    return np.prod(points[:, None, :] ** E[None, :, :], axis=2)


def interpolate_vanishing(
    points: np.ndarray,
    weight: int,
    ws: WeightSystem,
    rtol: float = 1e-8,
    max_denominator: int = 10**6,
) -> list[Polynomial]:
    """Rational w-homogeneous polynomials of the given weight vanishing at all ``points``."""
    monos = w_monomials(weight, ws)
    if not monos:
        return []
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 2 * len(monos):
        raise ValueError(f"need at least {2 * len(monos)} samples for weight {weight}, got {points.shape[0]}")
    M = _monomial_matrix(points, monos)
    colnorm = np.linalg.norm(M, axis=0)
    colnorm[colnorm == 0] = 1.0
    kernel = numeric_nullspace(M / colnorm, rtol)
    if kernel.shape[1] == 0:
        return []
    vectors = rref_float((kernel / colnorm[:, None]).T)
    pv = tuple(f"p{a + 1}" for a in range(ws.q))
    out: list[Polynomial] = []
    for vec in vectors:
        coeffs = rationalize_vector(vec, max_denominator)
        poly = Polynomial({m: c for m, c in zip(monos, coeffs)}, pv).primitive()
        if poly not in out:
            out.append(poly)
    return out


def verify_master(a: Polynomial, ph: PHatMatrix) -> ActivePolynomial:
    """Check ``sum_b P_ab da/dp_b = lambda_a * a`` exactly and return the multipliers."""
    ws = ph.weights
    if a.is_zero():
        raise NotActive("zero polynomial")
    if not a.is_w_homogeneous(ws):
        raise NotActive("candidate is not w-homogeneous")
    weight = a.max_weight(ws)
    grads = a.gradient()
    lambdas = []
    for row_index, row in enumerate(ph.entries):
        total = Polynomial.zero(a.variables)
        for entry, g in zip(row, grads):
            total = total + entry * g
        try:
            lam = total.exact_divide(a)
        except NotDivisible:
            raise NotActive(f"row {row_index + 1} of the master relation is not divisible by {a}") from None
        if not lam.is_w_homogeneous(ws, ws.degrees[row_index] - 2):
            raise NotActive(f"multiplier {row_index + 1} has the wrong weight")
        lambdas.append(lam)
    return ActivePolynomial(a, weight, tuple(lambdas))


def _normalise_sign(a: Polynomial, principal: np.ndarray) -> Polynomial:
    # actives are negative on the principal stratum
    vals = a.evaluate_many(principal)
    return -a if np.median(vals) > 0 else a


def find_active(
    ph: PHatMatrix,
    mib: MIBSpec,
    subspaces: Sequence[FixedSubspace],
    per_subspace: int = 40,
    rng: np.random.Generator | None = None,
    rank_rtol: float = 1e-7,
    kernel_rtol: float = 1e-8,
    max_denominator: int = 10**6,
    vanish_tol: float = 1e-7,
) -> ActiveSet:
    """Search for the active polynomials of ``ph``.

    Rank ``q-1`` samples are grouped by the fixed subspace they came from.
    Each group not yet explained by a known active is interpolated at
    increasing weight; kernel vectors are rationalised and checked against the
    master relations. Raises :class:`IncompleteCover` if some rank ``q-1``
    sample remains unexplained.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    ws = ph.weights
    q = ph.q
    pv = mib.p_vars
    det = det_phat(ph)
    cap = det.max_weight(ws)
    samples = boundary_samples(mib, ph, subspaces, per_subspace, rng, rank_rtol)
    principal = mib.orbit_map(rng.standard_normal((100, mib.n)))
    principal /= principal[:, -1:] ** (np.array(ws.degrees) / 2)[None, :]

    boundary = [s for s in samples if s.rank == q - 1 and q > 1]
    groups: dict[int, list[BoundarySample]] = {}
    for s in boundary:
        groups.setdefault(s.source, []).append(s)

    actives: list[ActivePolynomial] = []

    def covered(P: np.ndarray) -> np.ndarray:
        ok = np.zeros(len(P), dtype=bool)
        for act in actives:
            ok |= relative_value(act.polynomial, P) <= vanish_tol
        return ok

    for source in sorted(groups):
        P = np.array([s.p for s in groups[source]])
        if covered(P).all():
            continue
        for w in range(1, cap + 1):
            monos = w_monomials(w, ws)
            if not monos or len(P) < 2 * len(monos):
                continue
            try:
                cands = interpolate_vanishing(P, w, ws, kernel_rtol, max_denominator)
            except RationalizationFailed:
                continue
            hit = False
            for cand in cands:
                try:
                    act = verify_master(cand, ph)
                except NotActive:
                    continue
                poly = _normalise_sign(act.polynomial, principal)
                if poly != act.polynomial:
                    act = verify_master(poly, ph)
                composite = any(prev.polynomial.divides(poly) for prev in actives)
                if any(prev.polynomial == poly for prev in actives):
                    hit = True
                    continue
                actives.append(ActivePolynomial(poly, act.weight, act.multipliers, composite))
                hit = True
            if hit:
                break

    if boundary:
        P = np.array([s.p for s in boundary])
        bad = ~covered(P)
        if bad.any():
            missed = [s for s, b in zip(boundary, bad) if b]
            raise IncompleteCover(f"{len(missed)} rank-{q - 1} samples satisfy no verified active polynomial", missed)

    actives.sort(key=lambda a: (-a.weight, str(a.polynomial)))
    product = Polynomial.constant(1, pv)
    for act in actives:
        product = product * act.polynomial
    if actives:
        try:
            det.exact_divide(product)
        except NotDivisible:
            raise IncompleteCover("product of active polynomials does not divide det P-hat") from None
    return ActiveSet(actives, product, samples)

"""Landau potentials in orbit-space coordinates: screening, per-stratum minima, phases."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .pmatrix import MIBSpec
from .poly import Polynomial, PolynomialMap, WeightSystem, parse_polynomial
from .strata import ORIGIN, StratumCatalog, StratumDescriptor, StratumGraph, allowed_transitions

__all__ = [
    "PotentialError",
    "Unbounded",
    "Empty",
    "AllUnbounded",
    "NegativeDiscriminant",
    "PotentialSpec",
    "ScreenResult",
    "StratumMinimum",
    "PhasePoint",
    "Transition",
    "SweepResult",
    "boundedness_screen",
    "minimize_on_stratum",
    "stable_phase",
    "phase_sweep",
    "observables",
]

ATTAINED = "attained"
BOUNDARY = "boundary-infimum"
ALLOWED = "second-order-allowed"
NOT_BORDERING = "not-bordering (first order or resolution artifact)"


class PotentialError(ValueError):
    """Invalid potential definition."""


class Unbounded(ArithmeticError):
    """Descent left the search ball, or the screen found a descending ray."""


class Empty(LookupError):
    """No starting point inside the requested stratum."""


class AllUnbounded(ArithmeticError):
    """No stratum produced a finite minimum."""


class NegativeDiscriminant(ValueError):
    """``p_q^2 - p_2`` is negative beyond tolerance: the point is outside the orbit space."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    return Fraction(str(value).strip())


@dataclass
class PotentialSpec:
    """Polynomial potential in ``p`` whose coefficients are linear expressions in named parameters.

    ``terms`` pairs a monomial in ``p`` with a coefficient expression such as
    ``"a1"``, ``"-3/2"`` or ``"2*b1 - c1"``.
    """

    terms: list[tuple[Polynomial, Polynomial]]
    parameters: dict[str, Fraction]
    weights: WeightSystem
    allow_unbounded: bool = False

    @classmethod
    def from_dict(cls, data: Mapping, weights: WeightSystem) -> "PotentialSpec":
        pv = tuple(f"p{a + 1}" for a in range(weights.q))
        params = {k: _as_fraction(v) for k, v in dict(data.get("parameters", {})).items()}
        names = tuple(sorted(params))
        terms = []
        for term in data.get("terms", []):
            try:
                mono = parse_polynomial(str(term["monomial"]), pv)
                coeff = parse_polynomial(str(term["coeff"]), names or ("_",))
            except (KeyError, ValueError, SyntaxError) as exc:
                raise PotentialError(f"bad potential term {term!r}: {exc}") from exc
            if len(mono) != 1 or mono.terms[0][1] != 1:
                raise PotentialError(f"{term['monomial']!r} is not a single monomial")
            if coeff.degree > 1:
                raise PotentialError(f"coefficient {term['coeff']!r} is not linear in the parameters")
            terms.append((mono, coeff))
        if not terms:
            raise PotentialError("potential has no terms")
        return cls(terms, params, weights, bool(data.get("allow_unbounded", False)))

    @classmethod
    def from_polynomial(cls, V: Polynomial, weights: WeightSystem, allow_unbounded: bool = False) -> "PotentialSpec":
        terms = [(Polynomial.monomial(e, V.variables), Polynomial.constant(c, ("_",))) for e, c in V.terms]
        return cls(terms, {}, weights, allow_unbounded)

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.parameters))

    def with_parameters(self, **values) -> "PotentialSpec":
        unknown = set(values) - set(self.parameters)
        if unknown:
            raise PotentialError(f"unknown parameters {sorted(unknown)}")
        params = dict(self.parameters)
        params.update({k: _as_fraction(v) for k, v in values.items()})
        return PotentialSpec(self.terms, params, self.weights, self.allow_unbounded)

    def bind(self, values: Mapping | None = None) -> Polynomial:
        """The potential as an exact polynomial in ``p`` at the given parameter values."""
        params = dict(self.parameters)
        if values:
            params.update({k: _as_fraction(v) for k, v in values.items()})
        pv = self.terms[0][0].variables
        V = Polynomial.zero(pv)
        for mono, coeff in self.terms:
            V = V + mono * coeff.evaluate([params.get(name, 0) for name in coeff.variables])
        return V


def _leading_part(V: Polynomial, ws: WeightSystem) -> Polynomial:
    return V.w_component(ws, V.max_weight(ws))


@dataclass
class ScreenResult:
    status: str  # bounded / unbounded / inconclusive
    leading: Polynomial
    values: np.ndarray

    @property
    def bounded(self) -> bool:
        return self.status == "bounded"


def boundedness_screen(V: Polynomial, mib: MIBSpec, rays: int = 200, rng: np.random.Generator | None = None,
                       subspaces: Sequence = (), tol: float = 1e-9) -> ScreenResult:
    """Sign of the top-weight part of ``V`` on rays ``t -> p(t x)`` through the orbit space.

    Rays come from random ``x`` in the whole space and in each fixed subspace,
    so boundary directions are probed as well as interior ones.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    ws = mib.weights
    top = _leading_part(V, ws)
    X = [rng.standard_normal((rays, mib.n))]
    for sub in subspaces:
        X.append(sub.sample(rng, max(4, rays // 10)))
    X = np.vstack(X)
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    P = mib.orbit_map(X)
    values = top.evaluate_many(P)
    exps, coeffs = top._numeric
    scale = np.abs(np.prod(P[:, None, :] ** exps[None, :, :], axis=2)) @ np.abs(coeffs) if len(coeffs) else np.ones(len(P))
    scale = np.where(scale > 0, scale, 1.0)
    rel = values / scale
    if (rel < -tol).any():
        status = "unbounded"
    elif (rel > tol).all():
        status = "bounded"
    else:
        status = "inconclusive"
    return ScreenResult(status, top, values)


class _Objective:
    """``V(p(B y))`` and its gradient in the coordinates ``y`` of a subspace with orthonormal basis ``B``."""

    def __init__(self, V: Polynomial, mib: MIBSpec, basis: np.ndarray | None):
        self.fn = PolynomialMap([V] + V.gradient())
        self.mib = mib
        self.B = np.eye(mib.n) if basis is None else basis

    def x(self, Y: np.ndarray) -> np.ndarray:
        return Y @ self.B.T

    def __call__(self, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = self.x(Y)
        P = self.mib.orbit_map(X)
        F = self.fn(P)
        f, dVdp = F[:, 0], F[:, 1:]
        gx = np.einsum("mq,mqn->mn", dVdp, self.mib.jacobian(X))
        return f, gx @ self.B


def _descend(obj: _Objective, Y: np.ndarray, gtol: float, escape: float, max_move: float,
             max_iter: int = 1000):
    """Vectorised gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.

    A single step never moves a point further than ``max_move``, so descent
    cannot hop over a barrier into a distant, lower valley.
    Returns final points, values, gradient norms and an escape mask.
    """
    Y = Y.copy()
    f, g = obj(Y)
    step = np.full(len(Y), 1e-2)
    escaped = np.zeros(len(Y), dtype=bool)
    stalled = np.zeros(len(Y), dtype=bool)
    for _ in range(max_iter):
        gn = np.linalg.norm(g, axis=1)
        run = np.flatnonzero((gn > gtol) & ~escaped & ~stalled)
        if not len(run):
            break
        t = np.minimum(step[run], max_move / np.maximum(gn[run], 1e-300))
        Yt, ft, gt = Y[run].copy(), f[run].copy(), g[run].copy()
        pending = np.arange(len(run))
        for _ in range(60):
            cand = Y[run[pending]] - t[pending, None] * g[run[pending]]
            fc, gc = obj(cand)
            slack = 1e-13 * np.maximum(np.abs(f[run[pending]]), 1.0)
            ok = fc <= f[run[pending]] - 1e-4 * t[pending] * gn[run[pending]] ** 2 + slack
            done = pending[ok]
            Yt[done], ft[done], gt[done] = cand[ok], fc[ok], gc[ok]
            pending = pending[~ok]
            if not len(pending):
                break
            t[pending] *= 0.5
        stalled[run[pending]] = True
        s = Yt - Y[run]
        yv = gt - g[run]
        sy = np.einsum("ij,ij->i", s, yv)
        ss = np.einsum("ij,ij->i", s, s)
        step[run] = np.where(sy > 0, ss / np.where(sy > 0, sy, 1.0), 2.0 * t)
        Y[run], f[run], g[run] = Yt, ft, gt
        escaped |= np.linalg.norm(obj.x(Y), axis=1) > escape
    return Y, f, np.linalg.norm(g, axis=1), escaped


@dataclass
class StratumMinimum:
    label: str
    value: float
    p: np.ndarray
    x: np.ndarray
    status: str  # attained / boundary-infimum
    landed: str  # stratum of the best converged point
    starts: int

    @property
    def attained(self) -> bool:
        return self.status == ATTAINED


def _landing(catalog: StratumCatalog, P: np.ndarray, X: np.ndarray, tol: float, origin_radius: float) -> list[str]:
    """Stratum of each converged point, preferring the lowest-dimensional one within ``tol``."""
    out = []
    by_dim = sorted(catalog, key=lambda d: d.dimension)
    for p, x in zip(P, X):
        if np.linalg.norm(x) <= origin_radius:
            out.append(ORIGIN)
            continue
        label = None
        for d in by_dim:
            if d.label != ORIGIN and d.holds(p[None, :], tol)[0]:
                label = d.label
                break
        out.append(label or "unlabeled")
    return out


def minimize_on_stratum(
    V: Polynomial,
    descriptor: StratumDescriptor,
    catalog: StratumCatalog,
    multistarts: int = 64,
    rng: np.random.Generator | None = None,
    start_radius: float = 2.0,
    escape_radius: float = 10.0,
    gtol: float = 1e-10,
    landing_tol: float = 1e-7,
) -> StratumMinimum:
    """Multistart descent of ``V(p(x))`` over the stratum's fixed subspace.

    The result is ``attained`` when some converged point lies in the stratum
    itself, otherwise ``boundary-infimum``: descent left through the
    stratum's boundary and the value is only approached.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    mib = catalog.mib
    if descriptor.label == ORIGIN:
        zero = np.zeros(mib.q)
        return StratumMinimum(ORIGIN, float(V.evaluate_many(zero[None, :])[0]), zero, np.zeros(mib.n),
                              ATTAINED, ORIGIN, 1)
    basis = None if descriptor.subspace is None else descriptor.subspace.basis
    obj = _Objective(V, mib, basis)
    k = mib.n if basis is None else basis.shape[1]
    starts = []
    for _ in range(50):
        D = rng.standard_normal((multistarts, k))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        Y = D * start_radius * rng.uniform(0, 1, (multistarts, 1)) ** (1.0 / k)
        keep = descriptor.holds(mib.orbit_map(obj.x(Y)), catalog.tol)
        starts.extend(Y[keep])
        if len(starts) >= multistarts:
            break
    if not starts:
        raise Empty(f"no starting point found in stratum {descriptor.label}")
    Y0 = np.array(starts[:multistarts])
    Y, f, gn, escaped = _descend(obj, Y0, gtol, escape_radius, 0.1 * start_radius)
    if escaped.any():
        raise Unbounded(f"{int(escaped.sum())} descents left the ball of radius {escape_radius} "
                        f"in stratum {descriptor.label}")
    X = obj.x(Y)
    P = mib.orbit_map(X)
    landed = _landing(catalog, P, X, landing_tol, 1e-6 * start_radius)
    inside = np.array([lab == descriptor.label for lab in landed])
    pool = np.flatnonzero(inside) if inside.any() else np.arange(len(Y))
    best = pool[np.argmin(f[pool])]
    status = ATTAINED if inside.any() else BOUNDARY
    return StratumMinimum(descriptor.label, float(f[best]), P[best], X[best], status, landed[best], len(Y0))


@dataclass
class PhasePoint:
    parameters: dict[str, Fraction]
    label: str
    value: float
    p: np.ndarray
    x: np.ndarray
    degenerate: bool
    ties: list[str] = field(default_factory=list)
    minima: dict[str, StratumMinimum] = field(default_factory=dict)
    screen: str = "unchecked"

    def to_dict(self) -> dict:
        return {
            "parameters": {k: str(v) for k, v in self.parameters.items()},
            "label": self.label,
            "value": float(self.value),
            "p": [float(v) for v in self.p],
            "x": [float(v) for v in self.x],
            "degenerate": self.degenerate,
            "ties": list(self.ties),
            "screen": self.screen,
            "minima": {lab: {"value": m.value, "status": m.status, "landed": m.landed}
                       for lab, m in self.minima.items()},
        }


def stable_phase(
    spec: PotentialSpec | Polynomial,
    catalog: StratumCatalog,
    graph: StratumGraph | None = None,
    parameters: Mapping | None = None,
    multistarts: int = 64,
    rng: np.random.Generator | None = None,
    start_radius: float = 2.0,
    escape_radius: float = 10.0,
    gtol: float = 1e-10,
    degeneracy_tol: float = 1e-8,
    allow_unbounded: bool | None = None,
    subspaces: Sequence = (),
) -> PhasePoint:
    """The stratum hosting the absolute minimum of the potential.

    Only minima attained inside their own stratum compete. The result is
    flagged degenerate when another stratum attains the same value within
    ``degeneracy_tol`` (relative) or when the argmin sits on the closure of a
    stratum that borders the winner.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    mib = catalog.mib
    if isinstance(spec, Polynomial):
        spec = PotentialSpec.from_polynomial(spec, mib.weights)
    V = spec.bind(parameters)
    params = dict(spec.parameters)
    if parameters:
        params.update({k: _as_fraction(v) for k, v in parameters.items()})
    screen = boundedness_screen(V, mib, rng=np.random.default_rng(rng.integers(2**63)), subspaces=subspaces)
    allow = spec.allow_unbounded if allow_unbounded is None else allow_unbounded
    if not screen.bounded and not allow:
        raise Unbounded(f"boundedness screen is {screen.status} for leading part {screen.leading}")

    minima: dict[str, StratumMinimum] = {}
    for d in catalog:
        try:
            minima[d.label] = minimize_on_stratum(V, d, catalog, multistarts, rng, start_radius, escape_radius, gtol)
        except (Unbounded, Empty):
            continue
    attained = {lab: m for lab, m in minima.items() if m.attained}
    if not attained:
        raise AllUnbounded("no stratum attains a finite minimum")
    best = min(attained.values(), key=lambda m: (m.value, catalog.labels.index(m.label)))
    scale = max(abs(best.value), 1.0)
    ties = sorted((lab for lab, m in attained.items()
                   if lab != best.label and abs(m.value - best.value) <= degeneracy_tol * scale),
                  key=catalog.labels.index)
    on_border = False
    if graph is not None:
        for lower, upper in graph.edges:
            if upper == best.label and lower != ORIGIN:
                if catalog[lower].holds(best.p[None, :], degeneracy_tol, closure=True)[0]:
                    on_border = True
    return PhasePoint(params, best.label, best.value, best.p, best.x, bool(ties) or on_border, ties, minima,
                      screen.status)


@dataclass
class Transition:
    before: dict[str, Fraction]
    after: dict[str, Fraction]
    from_label: str
    to_label: str
    annotation: str

    def to_dict(self) -> dict:
        return {
            "before": {k: str(v) for k, v in self.before.items()},
            "after": {k: str(v) for k, v in self.after.items()},
            "from": self.from_label,
            "to": self.to_label,
            "annotation": self.annotation,
        }


@dataclass
class SweepResult:
    axes: dict[str, list[Fraction]]
    points: list[PhasePoint]
    transitions: list[Transition]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.axes.values())

    def labels(self) -> np.ndarray:
        return np.array([pt.label for pt in self.points], dtype=object).reshape(self.shape)

    def to_csv(self) -> str:
        names = list(self.axes)
        lines = [",".join(names + ["label", "value", "degenerate"])]
        for pt in self.points:
            row = [str(pt.parameters[n]) for n in names]
            lines.append(",".join(row + [pt.label, repr(float(pt.value)), str(pt.degenerate).lower()]))
        return "\n".join(lines) + "\n"


def _grid_axis(spec: Mapping) -> list[Fraction]:
    if "values" in spec:
        return [_as_fraction(v) for v in spec["values"]]
    start, stop, num = _as_fraction(spec["start"]), _as_fraction(spec["stop"]), int(spec["num"])
    if num < 2:
        return [start]
    return [start + (stop - start) * Fraction(i, num - 1) for i in range(num)]


def phase_sweep(
    spec: PotentialSpec,
    grid: Mapping[str, Sequence | Mapping],
    catalog: StratumCatalog,
    graph: StratumGraph,
    seed: int = 0,
    **kwargs,
) -> SweepResult:
    """Stable phase on every cell of a parameter grid, plus label changes between neighbouring cells.

    Each cell uses its own generator seeded from ``(seed, cell index)``, so
    cells are independent of evaluation order.
    """
    axes = {name: (_grid_axis(v) if isinstance(v, Mapping) else [_as_fraction(x) for x in v])
            for name, v in grid.items()}
    unknown = set(axes) - set(spec.parameters)
    if unknown:
        raise PotentialError(f"sweep over unknown parameters {sorted(unknown)}")
    shape = tuple(len(v) for v in axes.values())
    points = []
    for flat, combo in enumerate(itertools.product(*axes.values())):
        values = dict(zip(axes, combo))
        rng = np.random.default_rng([seed, flat])
        points.append(stable_phase(spec, catalog, graph, values, rng=rng, **kwargs))
    allowed = {frozenset(pair) for pair in allowed_transitions(graph)}
    transitions = []
    index = np.arange(len(points)).reshape(shape)
    for axis in range(len(shape)):
        a = np.moveaxis(index, axis, -1).reshape(-1, shape[axis])
        for line in a:
            for i, j in zip(line[:-1], line[1:]):
                lo, hi = points[i], points[j]
                if lo.label != hi.label:
                    note = ALLOWED if frozenset((lo.label, hi.label)) in allowed else NOT_BORDERING
                    transitions.append(Transition(lo.parameters, hi.parameters, lo.label, hi.label, note))
    return SweepResult(axes, points, transitions)


def observables(p, tol: float = 1e-9) -> tuple[float, float, bool]:
    """``(n, |z|, magnetic)`` with ``n = p3`` and ``z^2 = p3^2 - p2`` for the two-component order parameter.

    Integer or Fraction input is handled exactly, so ``z`` is exactly zero on
    strata where ``p2 = p3^2`` holds identically.
    """
    if len(p) != 3:
        raise ValueError("observables are defined for three basic invariants")
    if all(isinstance(v, (int, Fraction)) for v in p):
        n, p2 = Fraction(p[2]), Fraction(p[1])
    else:
        n, p2 = float(p[2]), float(p[1])
    disc = n * n - p2
    scale = max(abs(n * n), abs(p2), 1)
    if disc < -tol * scale:
        raise NegativeDiscriminant(f"p3^2 - p2 = {disc} < 0")
    z = float(disc) ** 0.5 if disc > 0 else 0.0
    return float(n), z, bool(disc > tol * scale)

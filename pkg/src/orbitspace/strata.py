"""Orbit-space strata: catalog, identification, bordering, transitions, sections."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.optimize import minimize

from .active import IncompleteCover, relative_value
from .group import (
    FixedSubspace,
    GroupElement,
    GroupPresentation,
    IsotropySignature,
    isotropy_signature,
    isotropy_subgroup,
)
from .linalg import numeric_rank
from .pmatrix import MIBSpec, PHatMatrix, Syzygy
from .poly import Polynomial, WeightSystem

__all__ = [
    "NoMatch",
    "Membership",
    "StratumDescriptor",
    "StratumCatalog",
    "StratumGraph",
    "Section",
    "membership",
    "enumerate_strata",
    "identify_stratum",
    "bordering",
    "allowed_transitions",
    "section",
    "label_section_points",
]

ORIGIN = "s0"
PRINCIPAL = "sp"


class NoMatch(LookupError):
    """A point satisfies the relations of no catalogued stratum."""


@dataclass
class Membership:
    inside: bool
    rank: int
    min_eigenvalue: float


def membership(p, ph: PHatMatrix, syzygies: Sequence[Syzygy] = (), tol: float = 1e-9,
               rank_rtol: float = 1e-7) -> Membership:
    """Is ``p`` in the orbit space, i.e. on the syzygy surface with P-hat(p) >= 0?"""
    p = np.asarray(p, dtype=float)
    m = ph.evaluate(p)
    eig = np.linalg.eigvalsh(m)
    scale = float(np.max(np.abs(eig)))
    inside = bool(eig[0] >= -tol * scale)
    for s in syzygies:
        if relative_value(s.relation, p[None, :])[0] > tol:
            inside = False
    return Membership(inside, int(ph.rank_many(p, rank_rtol)[0]), float(eig[0]))


def _weight_scale(P: np.ndarray, weight: int, degrees: Sequence[int]) -> np.ndarray:
    pq = np.abs(P[:, -1])
    scale = pq ** (weight / degrees[-1])
    scale[pq == 0] = 1.0
    return scale


@dataclass
class StratumDescriptor:
    """Semialgebraic description of one stratum.

    ``inequalities`` holds ``(f, sign)`` meaning ``sign * f > 0``.
    """

    label: str
    equalities: list[Polynomial]
    inequalities: list[tuple[Polynomial, int]]
    dimension: int
    signature: IsotropySignature | None = None
    representative: np.ndarray | None = None
    image: np.ndarray | None = None
    subspace: FixedSubspace | None = None
    degrees: tuple[int, ...] = ()

    def _values(self, f: Polynomial, P: np.ndarray) -> np.ndarray:
        w = f.max_weight(WeightSystem(self.degrees))
        return f.evaluate_many(P) / _weight_scale(P, w, self.degrees)

    def holds(self, P: np.ndarray, tol: float = 1e-9, closure: bool = False) -> np.ndarray:
        """Boolean mask of rows of ``P`` satisfying the relations (or their closure)."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        ok = np.ones(P.shape[0], dtype=bool)
        for f in self.equalities:
            ok &= np.abs(self._values(f, P)) <= tol
        for f, sign in self.inequalities:
            v = sign * self._values(f, P)
            ok &= (v >= -tol) if closure else (v > tol)
        return ok

    def relations_text(self) -> dict:
        sym = {1: ">", -1: "<"}
        return {
            "equalities": [f"{f} = 0" for f in self.equalities],
            "inequalities": [f"{f} {sym[s]} 0" for f, s in self.inequalities],
        }

    def sample(self, mib: MIBSpec, rng: np.random.Generator, m: int, tol: float = 1e-9,
               max_tries: int = 50) -> np.ndarray:
        """Points ``x`` whose images lie in this stratum (rejection sampling in its subspace)."""
        if self.dimension == 0 and self.subspace is None:
            return np.zeros((m, mib.n))
        out = []
        for _ in range(max_tries):
            radius = rng.uniform(0.2, 3.0, size=(m, 1))
            if self.subspace is None:
                X = rng.standard_normal((m, mib.n))
                X /= np.linalg.norm(X, axis=1, keepdims=True)
            else:
                X = self.subspace.sample(rng, m)
            X *= radius
            keep = self.holds(mib.orbit_map(X), tol)
            out.extend(X[keep])
            if len(out) >= m:
                break
        return np.array(out[:m]).reshape(-1, mib.n)

    def to_dict(self) -> dict:
        d = {"label": self.label, "dimension": self.dimension, **self.relations_text()}
        d["signature"] = None if self.signature is None else [
            self.signature.continuous_dimension, self.signature.n_discrete, list(self.signature.orders)]
        if self.representative is not None:
            d["representative"] = [round(float(v), 12) for v in self.representative]
            d["image"] = [round(float(v), 12) for v in self.image]
        return d


@dataclass
class StratumCatalog:
    descriptors: list[StratumDescriptor]
    mib: MIBSpec
    tol: float = 1e-9

    def __iter__(self):
        return iter(self.descriptors)

    def __len__(self) -> int:
        return len(self.descriptors)

    def __getitem__(self, label: str) -> StratumDescriptor:
        for d in self.descriptors:
            if d.label == label:
                return d
        raise KeyError(label)

    @property
    def labels(self) -> list[str]:
        return [d.label for d in self.descriptors]

    def classify_p(self, P: np.ndarray, tol: float | None = None) -> list[str | None]:
        """Label for each row of ``P``; None when no unique stratum matches."""
        tol = self.tol if tol is None else tol
        P = np.atleast_2d(np.asarray(P, dtype=float))
        masks = np.array([d.holds(P, tol) for d in self.descriptors])
        out: list[str | None] = []
        for k in range(P.shape[0]):
            hits = np.flatnonzero(masks[:, k])
            out.append(self.descriptors[hits[0]].label if len(hits) == 1 else None)
        return out

    def identify_p(self, p, tol: float | None = None) -> str:
        label = self.classify_p(np.asarray(p, dtype=float)[None, :], tol)[0]
        if label is None:
            raise NoMatch(f"no unique stratum for p = {list(np.asarray(p, dtype=float))}")
        return label

    def identify(self, x, tol: float | None = None) -> str:
        return identify_stratum(x, self, tol)

    def to_json(self) -> list[dict]:
        return [d.to_dict() for d in self.descriptors]


def identify_stratum(x, catalog: StratumCatalog, tol: float | None = None) -> str:
    """Map ``x`` through the orbit map and return the matching stratum label."""
    p = catalog.mib.orbit_map(np.asarray(x, dtype=float)[None, :])[0]
    try:
        return catalog.identify_p(p, tol)
    except NoMatch:
        raise NoMatch(f"no unique stratum for x = {list(np.asarray(x, dtype=float))}, p = {list(p)}") from None


def _forces_vanishing(actives: Sequence[Polynomial], coord: int, nonvanishing: Sequence[int], q: int) -> bool:
    """Does ``p_coord = 0`` together with ``actives = 0`` force another coordinate to vanish?"""
    for a in actives:
        rest = a.substitute({coord: 0})
        if rest.is_zero() or len(rest) != 1:
            continue
        (exps, _), = rest.terms
        if any(exps[b] for b in nonvanishing if b != coord) or exps[q - 1]:
            return True
    return False


def _sign(v: float, tol: float) -> int:
    return 0 if abs(v) <= tol else (1 if v > 0 else -1)


def enumerate_strata(
    ph: PHatMatrix,
    actives: Sequence[Polynomial],
    mib: MIBSpec,
    gp: GroupPresentation,
    closure: Sequence[GroupElement],
    subspaces: Sequence[FixedSubspace],
    rng: np.random.Generator | None = None,
    per_subspace: int = 40,
    principal_samples: int = 200,
    rank_rtol: float = 1e-7,
    vanish_tol: float = 1e-7,
    relation_tol: float = 1e-9,
    labels: dict[str, str] | None = None,
    strict: bool = True,
) -> StratumCatalog:
    """Cluster sampled orbit-space points into strata and describe each one.

    Samples come from every fixed subspace plus generic points. They are
    grouped by rank of P-hat, which actives vanish and which coordinates
    vanish; a coordinate's sign further splits a group when setting that
    coordinate to zero would force another coordinate to vanish too.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    q = mib.q
    degrees = mib.weights.degrees
    actives = list(actives)
    pv = mib.p_vars

    sources: list[FixedSubspace | None] = list(subspaces)
    xs, src = [], []
    for k, sub in enumerate(sources):
        X = sub.sample(rng, per_subspace)
        xs.append(X)
        src.extend([k] * len(X))
    G = rng.standard_normal((principal_samples, mib.n))
    xs.append(G / np.linalg.norm(G, axis=1, keepdims=True))
    src.extend([-1] * principal_samples)
    X = np.vstack(xs)
    src = np.array(src)
    P = mib.orbit_map(X)
    ranks = np.array([numeric_rank(m, rank_rtol) for m in ph.evaluate_many(P)])

    coord_rel = np.abs(P[:, :-1]) / (P[:, -1:] ** (np.array(degrees[:-1]) / degrees[-1]))
    act_rel = np.array([relative_value(a, P) for a in actives]).T if actives else np.zeros((len(P), 0))
    act_val = np.array([a.evaluate_many(P) for a in actives]).T if actives else np.zeros((len(P), 0))

    groups: dict[tuple, list[int]] = {}
    for i in range(len(P)):
        van_a = frozenset(np.flatnonzero(act_rel[i] <= vanish_tol).tolist())
        van_c = frozenset(np.flatnonzero(coord_rel[i] <= vanish_tol).tolist())
        groups.setdefault((int(ranks[i]), van_a, van_c), []).append(i)

    # a key is genuine only if it is the typical key of some sample source;
    # stray keys come from near-degenerate random draws and are dropped
    typical = set()
    for k in np.unique(src):
        counts = {key: sum(1 for i in idx if src[i] == k) for key, idx in groups.items()}
        typical.add(max(counts, key=counts.get))
    groups = {key: idx for key, idx in groups.items() if key in typical}
    kept = np.array(sorted(i for idx in groups.values() for i in idx))

    clusters = []
    for (rank, van_a, van_c), idx in sorted(groups.items(), key=lambda kv: (-kv[0][0], sorted(kv[0][1]), sorted(kv[0][2]))):
        nonvan = [a for a in range(q - 1) if a not in van_c]
        vanishing_actives = [actives[j] for j in sorted(van_a)]
        defining = [a for a in nonvan if _forces_vanishing(vanishing_actives, a, nonvan, q)]
        sub: dict[tuple, list[int]] = {}
        for i in idx:
            key = tuple(_sign(P[i, a], 0.0) for a in defining)
            sub.setdefault(key, []).append(i)
        varying = [k for k, a in enumerate(defining) if len({key[k] for key in sub}) > 1]
        for key in sorted(sub, reverse=True):
            members = sub[key]
            eqs: list[Polynomial] = [Polynomial.var(a, pv) for a in sorted(van_c)]
            zeros = {a: 0 for a in van_c}
            for j in sorted(van_a):
                if not actives[j].substitute(zeros).is_zero():
                    eqs.append(actives[j])
            ineqs: list[tuple[Polynomial, int]] = []
            for a in nonvan:
                signs = {_sign(P[i, a], 0.0) for i in members}
                if len(signs) == 1:
                    ineqs.append((Polynomial.var(a, pv), signs.pop()))
            ineqs.append((Polynomial.var(q - 1, pv), 1))
            for j, a in enumerate(actives):
                if j in van_a:
                    continue
                signs = {_sign(act_val[i, j], 0.0) for i in members}
                if len(signs) != 1:
                    raise IncompleteCover(f"active {a} changes sign inside one cluster")
                ineqs.append((a, signs.pop()))
            suffix = "".join("+" if key[k] > 0 else "-" for k in varying)
            clusters.append((rank, suffix, members, eqs, ineqs))

    descriptors: list[StratumDescriptor] = []
    used: dict[str, int] = {}
    for rank, suffix, members, eqs, ineqs in clusters:
        base = PRINCIPAL if rank == q else f"s{rank}"
        label = base + suffix
        if label in used:
            used[label] += 1
            label = f"{base}{chr(ord('a') + used[label] - 1)}{suffix}"
        else:
            used[label] = 1
        # representative from the smallest fixed subspace that produced this stratum
        member_src = sorted({int(src[i]) for i in members}, key=lambda k: (sources[k].dim if k >= 0 else mib.n, k))
        best = member_src[0]
        rep_i = next(i for i in members if src[i] == best)
        sigs = {isotropy_signature(isotropy_subgroup(X[i], gp, closure)) for i in members[:20]}
        if len(sigs) != 1:
            raise IncompleteCover(f"stratum {label} has non-constant isotropy signature {sigs}")
        descriptors.append(StratumDescriptor(
            label=label, equalities=eqs, inequalities=ineqs, dimension=rank,
            signature=sigs.pop(), representative=X[rep_i], image=P[rep_i],
            subspace=sources[best] if best >= 0 else None, degrees=degrees))

    origin = StratumDescriptor(
        label=ORIGIN, equalities=[Polynomial.var(a, pv) for a in range(q)], inequalities=[],
        dimension=0, signature=isotropy_signature(isotropy_subgroup(np.zeros(mib.n), gp, closure)),
        representative=np.zeros(mib.n), image=np.zeros(q), subspace=None, degrees=degrees)
    descriptors.append(origin)
    descriptors.sort(key=lambda d: (d.dimension if d.label != PRINCIPAL else q + 1, d.label))
    if labels:
        for d in descriptors:
            d.label = labels.get(d.label, d.label)

    catalog = StratumCatalog(descriptors, mib, relation_tol)
    found = catalog.classify_p(P[kept])
    missing = [int(kept[i]) for i, lab in enumerate(found) if lab is None]
    if missing and strict:
        raise IncompleteCover(f"{len(missing)} samples match no unique stratum", [X[i] for i in missing])
    return catalog


@dataclass
class StratumGraph:
    catalog: StratumCatalog
    edges: set[tuple[str, str]] = field(default_factory=set)  # (border, bordered)

    def borders(self, lower: str, upper: str) -> bool:
        return (lower, upper) in self.edges

    def to_json(self) -> list[list[str]]:
        return [list(e) for e in sorted(self.edges)]


def bordering(catalog: StratumCatalog, rng: np.random.Generator | None = None, n_samples: int = 50,
              tol: float = 1e-9) -> StratumGraph:
    """``s'`` borders ``s`` when ``dim s' < dim s`` and sampled points of ``s'`` satisfy the closure of ``s``."""
    rng = np.random.default_rng(0) if rng is None else rng
    mib = catalog.mib
    samples = {d.label: mib.orbit_map(d.sample(mib, rng, n_samples, catalog.tol)) for d in catalog}
    graph = StratumGraph(catalog)
    for lo in catalog:
        pts = samples[lo.label]
        if len(pts) == 0:
            continue
        for hi in catalog:
            if lo.dimension < hi.dimension and hi.holds(pts, tol, closure=True).all():
                graph.edges.add((lo.label, hi.label))
    return graph


def allowed_transitions(graph: StratumGraph) -> list[tuple[str, str]]:
    """Unordered pairs of strata between which a continuous transition is possible."""
    labels = graph.catalog.labels
    order = {lab: i for i, lab in enumerate(labels)}
    pairs = {tuple(sorted(e, key=order.get)) for e in graph.edges}
    for special in (ORIGIN, PRINCIPAL):
        if special in order:
            for lab in labels:
                if lab != special:
                    pairs.add(tuple(sorted((special, lab), key=order.get)))
    return sorted(pairs, key=lambda pr: (order[pr[0]], order[pr[1]]))


def _snap(v: float, tol: float = 1e-8) -> float:
    f = Fraction(v).limit_denominator(1000)
    return float(f) if abs(float(f) - v) <= tol else v


def section_box(mib: MIBSpec, rng: np.random.Generator, starts: int = 64) -> np.ndarray:
    """Range of each ``p_a`` (``a < q``) over the unit sphere, shape ``(q-1, 2)``."""
    q = mib.q
    box = np.zeros((q - 1, 2))
    X0 = rng.standard_normal((4000, mib.n))
    X0 /= np.linalg.norm(X0, axis=1, keepdims=True)
    P0 = mib.orbit_map(X0)
    for a in range(q - 1):
        f = mib.polynomials[a]
        grads = mib.gradients[a]
        for side, sgn in ((0, 1.0), (1, -1.0)):

            def obj(x):
                r = np.linalg.norm(x)
                u = x / r
                val = sgn * f.evaluate_many(u[None, :])[0]
                g = sgn * np.array([gi.evaluate_many(u[None, :])[0] for gi in grads])
                return val, (g - (g @ u) * u) / r

            order = np.argsort(sgn * P0[:, a])[:starts]
            best = min(sgn * P0[order, a])
            for i in order[:8]:
                res = minimize(obj, X0[i], jac=True, method="BFGS", options={"gtol": 1e-12})
                best = min(best, float(res.fun))
            box[a, side] = _snap(sgn * best)
    return box


@dataclass
class Section:
    r2: float
    grid: np.ndarray  # (m, q) points
    labels: list[str]
    shape: tuple[int, ...]
    boundary: np.ndarray
    boundary_labels: list[str]

    def inside_mask(self) -> np.ndarray:
        return np.array([lab != "outside" for lab in self.labels]).reshape(self.shape)

    def n_components(self) -> int:
        _, n = ndimage.label(self.inside_mask())
        return int(n)

    def rows(self):
        for p, lab in zip(self.grid, self.labels):
            yield p, lab
        for p, lab in zip(self.boundary, self.boundary_labels):
            yield p, lab

    def to_csv(self) -> str:
        q = self.grid.shape[1]
        lines = [",".join([f"p{a + 1}" for a in range(q)] + ["label"])]
        for p, lab in self.rows():
            lines.append(",".join([repr(float(v)) for v in p] + [lab]))
        return "\n".join(lines) + "\n"


def _inside_many(P: np.ndarray, ph: PHatMatrix, tol: float) -> np.ndarray:
    eig = np.linalg.eigvalsh(ph.evaluate_many(P))
    return eig[:, 0] >= -tol * np.max(np.abs(eig), axis=1)


def label_section_points(P: np.ndarray, ph: PHatMatrix, catalog: StratumCatalog, tol: float = 1e-9,
                         label_tol: float | None = None) -> list[str]:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    inside = _inside_many(P, ph, tol)
    labs = catalog.classify_p(P, label_tol)
    return [(lab or "unlabeled") if ok else "outside" for ok, lab in zip(inside, labs)]


def section(ph: PHatMatrix, catalog: StratumCatalog, r2: float = 1.0, grid: int = 400,
            rng: np.random.Generator | None = None, margin: float = 0.1, refine: bool = True,
            tol: float = 1e-9) -> Section:
    """Labelled grid on the plane ``p_q = r2`` plus bisected boundary crossings."""
    if r2 <= 0:
        raise ValueError("r2 must be positive")
    rng = np.random.default_rng(0) if rng is None else rng
    mib = catalog.mib
    q = mib.q
    degrees = np.array(mib.weights.degrees, dtype=float)
    if q == 1:
        P = np.array([[r2]])
        return Section(r2, P, label_section_points(P, ph, catalog, tol), (1,), np.zeros((0, 1)), [])
    if q > 3:
        raise ValueError("sections are only gridded for q <= 3")
    box = section_box(mib, rng) * (r2 ** (degrees[:-1] / 2))[:, None]
    width = box[:, 1] - box[:, 0]
    lo = box[:, 0] - margin * width
    hi = box[:, 1] + margin * width
    axes = [np.linspace(lo[a], hi[a], grid) for a in range(q - 1)]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.column_stack([m.ravel() for m in mesh] + [np.full(mesh[0].size, float(r2))])
    labels = label_section_points(P, ph, catalog, tol)
    shape = tuple([grid] * (q - 1))
    starts, ends = [], []
    if refine:
        inside = np.array([lab != "outside" for lab in labels]).reshape(shape)
        pts = P.reshape(shape + (q,))
        for axis in range(q - 1):
            a = np.moveaxis(inside, axis, -1)
            b = np.moveaxis(pts, axis, -2)
            flips = a[..., :-1] != a[..., 1:]
            left, right = b[..., :-1, :][flips], b[..., 1:, :][flips]
            left_in = a[..., :-1][flips]
            starts.append(np.where(left_in[:, None], left, right))
            ends.append(np.where(left_in[:, None], right, left))
    B = np.zeros((0, q))
    if starts:
        p_in, p_out = np.vstack(starts), np.vstack(ends)
        for _ in range(60):
            mid = 0.5 * (p_in + p_out)
            ok = _inside_many(mid, ph, tol)
            p_in[ok] = mid[ok]
            p_out[~ok] = mid[~ok]
        B = p_in
    blabels = label_section_points(B, ph, catalog, tol, label_tol=1e-6) if len(B) else []
    return Section(float(r2), P, labels, shape, B, blabels)

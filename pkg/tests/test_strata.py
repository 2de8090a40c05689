import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import table_label
from orbitspace.group import isotropy_signature, isotropy_subgroup
from orbitspace.strata import NoMatch, identify_stratum, label_section_points, membership

DIMS = {"s0": 0, "s1": 1, "s1+": 1, "s1-": 1, "s2": 2, "s2+": 2, "s2-": 2, "sp": 3}

TYPICAL = {
    (0, 0, 0, 0): "s0",
    (0, 1, 0, 0): "s1",
    (0, 1, 0, 1): "s1+",
    (-1, 0, 1, 0): "s1-",
    (0, 1, 0, -1): "s1-",
    (-1, 1, 1, 1): "s2",
    (1, 1, 1, -1): "s2",
    (0, 1, 0, 2): "s2+",
    (0, 1, 0, -2): "s2-",
    (-1, 2, 1, 1): "sp",
}

BORDERS = {
    ("s1", "s2+"), ("s1", "s2-"), ("s1+", "s2"), ("s1+", "s2+"), ("s1-", "s2"), ("s1-", "s2-"),
}


def test_eight_strata_with_dimensions(catalog):
    assert {d.label: d.dimension for d in catalog} == DIMS


@pytest.mark.parametrize("x, label", list(TYPICAL.items()))
def test_typical_points(catalog, x, label):
    assert identify_stratum(np.array(x, dtype=float), catalog) == label


def test_signature_ordering_follows_bordering(space):
    cat = space.catalog_
    for lo, hi in space.graph_.edges:
        assert cat[lo].signature > cat[hi].signature


def test_sign_pairs_share_signature_but_not_relations(catalog):
    for a, b in [("s1+", "s1-"), ("s2+", "s2-")]:
        assert catalog[a].signature == catalog[b].signature
        assert not catalog[a].holds(catalog[b].image[None, :])[0]


def test_bordering_examples(space):
    g = space.graph_
    assert g.borders("s1+", "s2") and g.borders("s1+", "s2+")
    assert not g.borders("s2+", "s2")
    assert not g.borders("s2", "s2+")
    for lab in DIMS:
        if lab != "s0":
            assert g.borders("s0", lab)


def test_bordering_graph(space):
    inner = {e for e in space.graph_.edges if "s0" not in e and "sp" not in e}
    assert inner == BORDERS


def test_transitions(space):
    pairs = {frozenset(t) for t in space.transitions_}
    expected = {frozenset(e) for e in BORDERS}
    expected |= {frozenset(("s0", lab)) for lab in DIMS if lab != "s0"}
    expected |= {frozenset(("sp", lab)) for lab in DIMS if lab != "sp"}
    assert pairs == expected and len(space.transitions_) == 19
    for group in (["s1", "s1+", "s1-"], ["s2", "s2+", "s2-"]):
        for a in group:
            for b in group:
                assert frozenset((a, b)) not in pairs or a == b


def test_membership_examples(ph):
    m = membership([0, 0, 1], ph)
    assert m.inside and m.rank == 1
    assert not membership([0, 0, -1], ph).inside
    m = membership([-416, 40, 7], ph)
    assert m.inside and m.rank == 3


def test_section_point_labels(ph, catalog):
    labs = label_section_points(np.array([[0, 0.5, 1], [2, 1, 1], [3, 1, 1]]), ph, catalog)
    assert labs == ["sp", "s1+", "outside"]


def test_unmatched_point_raises(catalog):
    with pytest.raises(NoMatch):
        catalog.identify_p([5.0, 1.0, 1.0])


def test_random_points_agree_with_closed_form(catalog, mib, space, rng):
    X = np.vstack([sub.sample(rng, 30) * rng.uniform(0.3, 3, (30, 1)) for sub in space.subspaces_])
    P = mib.orbit_map(X)
    got = catalog.classify_p(P)
    assert got == [table_label(p) for p in P]


def test_labels_agree_with_isotropy_signature(catalog, mib, gp, closure, space, rng):
    # second route: the isotropy group computed from the group action alone
    for sub in space.subspaces_:
        for x in sub.sample(rng, 3):
            label = identify_stratum(x, catalog)
            assert isotropy_signature(isotropy_subgroup(x, gp, closure)) == catalog[label].signature


def test_rank_equals_dimension(catalog, ph, mib, rng):
    for d in catalog:
        ranks = ph.rank_many(mib.orbit_map(d.sample(mib, rng, 10)))
        assert list(ranks) == [d.dimension] * 10


def test_rank_is_unchanged_by_weighted_scaling(ph, mib, rng):
    P_ = mib.orbit_map(rng.standard_normal((50, 4)) * 0.3)
    big = P_ * np.array([1e3, 1e2, 10.0])  # weighted scaling by sqrt(10)
    assert list(ph.rank_many(P_)) == list(ph.rank_many(big)) == [3] * 50


def classify(catalog, x):
    return catalog.classify_p(catalog.mib.orbit_map(np.asarray(x, dtype=float)[None, :]))[0]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.1, 10))
def test_label_is_scale_invariant(catalog, x, t):
    x = np.array(x)
    assume(np.linalg.norm(x) > 1e-2)
    label = classify(catalog, x)
    assume(label is not None)  # within tolerance of two strata
    assert classify(catalog, t * x) == label


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0, 2 * np.pi), st.integers(0, 11))
def test_label_is_group_invariant(catalog, gp, closure, x, alpha, k):
    x = np.array(x)
    assume(np.linalg.norm(x) > 1e-2)
    label = classify(catalog, x)
    assume(label is not None)
    g = gp.u(alpha) @ closure[k].matrix
    assert classify(catalog, g @ x) == label


@pytest.fixture(scope="module")
def sec(space):
    return space.section(1.0, 120)


class TestSection:
    def test_connected_and_bounded(self, sec):
        inside = sec.inside_mask()
        assert sec.n_components() == 1
        assert not inside[0, :].any() and not inside[-1, :].any()
        assert not inside[:, 0].any() and not inside[:, -1].any()

    def test_boundary_on_active_zero_set(self, sec, space):
        A = space.active_.product
        vals = np.abs(A.evaluate_many(sec.boundary)) / 16  # |A| is at most 16 on the unit section
        assert len(sec.boundary) > 0 and vals.max() <= 1e-6

    def test_grid_labels_match_closed_form(self, sec):
        for p, lab in zip(sec.grid, sec.labels):
            if lab == "sp":
                assert table_label(p) == "sp"

    def test_invalid_radius(self, space):
        with pytest.raises(ValueError):
            space.section(0.0)


def test_rotation_group_has_two_strata(so2_space):
    assert so2_space.catalog_.labels == ["s0", "sp"]
    assert so2_space.transitions_ == [("s0", "sp")]

import math

import numpy as np
import pytest

from orbitspace.group import (
    ClosureExceeded,
    GroupElement,
    GroupPresentation,
    RotationFamily,
    element_order,
    find_coset,
    finite_closure,
    fixed_subspaces,
    format_angle,
    isotropy_signature,
    isotropy_subgroup,
    verify_invariance,
)
from orbitspace.poly import parse_polynomial

XV = ("x1", "y1", "x2", "y2")

# Isotropy generators of the typical points, written as (rotation angle, word of the coset representative).
TYPICAL = {
    (0, 1, 0, 1): [(0.0, "sigma_v"), (math.pi, "R")],
    (-1, 0, 1, 0): [(math.pi, "sigma_v"), (math.pi, "R")],
    (0, 1, 0, -1): [(math.pi, "sigma_v"), (0.0, "R")],
    (-1, 1, 1, 1): [(math.pi, "R")],
    (1, 1, 1, -1): [(0.0, "R")],
    (0, 1, 0, 2): [(math.pi, "sigma_v·R")],
    (0, 1, 0, -2): [(math.pi, "sigma_v·R")],
    (0, 1, 0, 0): [(-2 * math.pi / 3, "C3"), (math.pi, "sigma_v·R")],
}


def word_matrix(gp, word):
    gens = {g.word: g.matrix for g in gp.generators}
    m = np.eye(gp.n)
    for name in word.split("·"):
        m = m @ gens[name]
    return m


def test_generators_are_orthogonal(gp):
    for g in gp.generators:
        np.testing.assert_allclose(g.matrix.T @ g.matrix, np.eye(4), atol=1e-12)


def test_non_orthogonal_generator_rejected():
    with pytest.raises(ValueError):
        GroupElement(np.array([[2.0, 0.0], [0.0, 1.0]]), "bad")


def test_rotation_family_is_a_one_parameter_group(gp):
    for a, b in [(0.3, 1.1), (-2.0, 5.0)]:
        np.testing.assert_allclose(gp.u(a) @ gp.u(b), gp.u(a + b), atol=1e-12)


def test_closure_has_twelve_cosets(closure):
    assert len(closure) == 12


def test_closure_by_brute_force_words(gp, closure):
    # every word of length <= 6 in the generators lies in a listed coset
    frontier = [np.eye(4)]
    seen = [np.eye(4)]
    for _ in range(6):
        nxt = []
        for m in frontier:
            for g in gp.generators:
                nxt.append(g.matrix @ m)
        frontier = nxt[:200]
        seen.extend(frontier)
    for m in seen:
        find_coset(gp, closure, m)


def test_closure_is_closed_under_products(gp, closure):
    for a in closure:
        for b in closure:
            find_coset(gp, closure, a.matrix @ b.matrix)


def test_trivial_and_involution_closures():
    fam = RotationFamily(2, ((0, 1, 1),))
    assert len(finite_closure(GroupPresentation(2, (), fam))) == 1
    swap = GroupElement(np.array([[0.0, 1.0], [1.0, 0.0]]), "s")
    assert len(finite_closure(GroupPresentation(2, (swap,), None))) == 2


def test_closure_exceeded_for_infinite_order_generator():
    c, s = math.cos(1.0), math.sin(1.0)
    irrational = GroupElement(np.array([[c, -s], [s, c]]), "r")
    with pytest.raises(ClosureExceeded):
        finite_closure(GroupPresentation(2, (irrational,), None), max_elements=50)


class TestInvariance:
    def test_basic_invariants_pass(self, gp, mib, closure):
        for f in mib.polynomials:
            assert verify_invariance(f, gp, 20, 1e-9, closure).passed

    def test_coordinate_fails(self, gp, closure):
        rep = verify_invariance(parse_polynomial("x1", XV), gp, 20, 1e-9, closure)
        assert not rep.passed and rep.worst > 1e-3

    def test_norm_passes_for_any_orthogonal_group(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        q2, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        # a finite group is not needed: invariance of |x|^2 under arbitrary orthogonal matrices
        gp = GroupPresentation(4, (GroupElement(q, "q"), GroupElement(q2, "q2")), None)
        norm = parse_polynomial("x1^2 + y1^2 + x2^2 + y2^2", XV)
        closure = [gp.identity(), gp.generators[0], gp.generators[1]]
        assert verify_invariance(norm, gp, 20, 1e-9, closure).passed


class TestFixedSubspaces:
    def test_identity_gives_whole_space(self, space):
        assert any(s.dim == 4 for s in space.subspaces_)

    def test_bases_are_orthonormal_and_fixed(self, space):
        for s in space.subspaces_:
            np.testing.assert_allclose(s.basis.T @ s.basis, np.eye(s.dim), atol=1e-9)
            for g in s.elements:
                assert np.max(np.abs(g.matrix @ s.basis - s.basis)) <= 1e-9

    def test_subspace_of_sigma_v_r_contains_typical_point(self, gp, space):
        g = gp.u(math.pi) @ word_matrix(gp, "sigma_v·R")
        x = np.array([0.0, 1.0, 0.0, -2.0])
        np.testing.assert_allclose(g @ x, x, atol=1e-12)
        assert any(s.contains(x) and s.dim == 2 for s in space.subspaces_)

    def test_generic_rotation_has_no_fixed_vector(self, gp):
        m = gp.u(0.7) - np.eye(4)
        assert np.linalg.svd(m, compute_uv=False).min() > 0.1

    def test_plain_rotation_group_has_only_trivial_subspaces(self):
        gp = GroupPresentation(2, (), RotationFamily(2, ((0, 1, 1),)))
        subs = fixed_subspaces(gp, finite_closure(gp), 180)
        assert [s.dim for s in subs] == [2]


class TestIsotropy:
    def test_origin_is_fixed_by_everything(self, gp, closure):
        iso = isotropy_subgroup(np.zeros(4), gp, closure)
        assert iso.continuous_dimension == 1
        assert len(iso.elements) == len(closure)

    @pytest.mark.parametrize("point", list(TYPICAL))
    def test_typical_points_fixed_by_listed_generators(self, gp, point):
        x = np.array(point, dtype=float)
        for alpha, word in TYPICAL[point]:
            g = gp.u(alpha) @ word_matrix(gp, word)
            np.testing.assert_allclose(g @ x, x, atol=1e-12)

    @pytest.mark.parametrize("point", list(TYPICAL))
    def test_listed_generators_found_by_isotropy_subgroup(self, gp, closure, point):
        x = np.array(point, dtype=float)
        iso = isotropy_subgroup(x, gp, closure)
        found = [e.element.matrix for e in iso.elements]
        for alpha, word in TYPICAL[point]:
            g = gp.u(alpha) @ word_matrix(gp, word)
            assert any(np.allclose(g, m, atol=1e-9) for m in found)
        for m in found:
            assert np.linalg.norm(m @ x - x) <= 1e-9 * np.linalg.norm(x)

    def test_principal_point_has_only_identity(self, gp, closure):
        iso = isotropy_subgroup(np.array([-1.0, 2.0, 1.0, 1.0]), gp, closure)
        assert iso.words == ["E"]
        assert tuple(isotropy_signature(iso)) == (0, 1, (1,))

    def test_sigma2_points_have_equal_signatures(self, gp, closure):
        a = isotropy_signature(isotropy_subgroup(np.array([-1.0, 1, 1, 1]), gp, closure))
        b = isotropy_signature(isotropy_subgroup(np.array([1.0, 1, 1, -1]), gp, closure))
        assert a == b

    def test_origin_signature_is_maximal(self, space):
        sigs = [d.signature for d in space.catalog_]
        origin = space.catalog_["s0"].signature
        assert all(origin > s for s in sigs if s != origin)

    def test_signature_is_conjugation_invariant(self, gp, closure):
        rng = np.random.default_rng(5)
        for x in [np.array([0.0, 1, 0, 1]), np.array([-1.0, 1, 1, 1]), np.array([0.0, 1, 0, 0]),
                  rng.standard_normal(4)]:
            base = isotropy_signature(isotropy_subgroup(x, gp, closure))
            for h in closure[::3]:
                g = gp.u(rng.uniform(0, 2 * math.pi)) @ h.matrix
                assert isotropy_signature(isotropy_subgroup(g @ x, gp, closure)) == base

    def test_fixed_subspace_element_is_in_isotropy(self, gp, closure, space):
        rng = np.random.default_rng(6)
        for sub in space.subspaces_:
            x = sub.sample(rng, 1)[0]
            found = [e.element.matrix for e in isotropy_subgroup(x, gp, closure).elements]
            for g in sub.elements:
                find_coset(gp, closure, g.matrix)
                assert any(np.allclose(g.matrix, m, atol=1e-8) for m in found)


def test_find_coset_rejects_foreign_matrix(gp, closure):
    swap = np.eye(4)[[2, 3, 0, 1]] @ np.diag([1.0, 1.0, 1.0, -1.0])
    with pytest.raises(LookupError):
        find_coset(gp, closure, swap)


def test_element_orders(gp):
    assert element_order(word_matrix(gp, "C3")) == 3
    assert element_order(word_matrix(gp, "R")) == 2
    assert element_order(np.eye(4)) == 1


def test_format_angle():
    assert format_angle(math.pi) == "π"
    assert format_angle(-2 * math.pi / 3) == "-2π/3"
    assert format_angle(0.0) == "0"

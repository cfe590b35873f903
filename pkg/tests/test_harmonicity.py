import math

import numpy as np
import pytest

from stretched_gasket import (
    DEFAULT_CONSTANTS,
    NonHarmonicError,
    boundary_vector,
    canonical_vertex,
    energy_total,
    harmonic_report,
    harmonic_residual,
    nd_gamma,
    nd_gamma_of,
    parse,
    triple,
    vanishing_at_ABC,
    vertex_stars,
    weak_laplacian_h1,
    weak_pairing,
)

from conftest import CONSTANT_HALF, PREFIX_EXP, TAIL_ONLY, random_poly


def test_canonical_vertex_strips_fixing_letter():
    # F_w(corner c) = F_{w'}(c) whenever w ends in the letter fixing c.
    assert canonical_vertex((1, 2, 2), "B") == ((1,), "B")
    assert canonical_vertex((1, 2, 2), "A") == ((1, 2, 2), "A")
    assert canonical_vertex((1, 1, 1), "A") == ((), "A")
    assert canonical_vertex((), "C") == ((), "C")


def test_star_structure(regime):
    for l in (1, 2, 3):
        stars = vertex_stars(regime, l)
        interior = [s for s in stars if s.is_interior]
        base = [s for s in stars if not s.is_interior]
        # Two endpoints per cable, all distinct; cables never reach A, B, C.
        assert len(interior) == 3 * (3**l - 1)
        assert len(base) == 3
        for s in interior:
            kinds = sorted(eid.kind for eid, _, _, _ in s.edges)
            assert kinds == ["cable", "tri", "tri"]
        for s in base:
            assert all(eid.kind == "tri" for eid, _, _, _ in s.edges)
            assert len(s.edges) == 2


def test_stars_are_sorted_deterministically():
    stars = vertex_stars(TAIL_ONLY, 2)
    keys = [(s.word, s.corner) for s in stars]
    assert keys == sorted(keys)


def test_boundary_vector_vanishes_on_harmonic_family(regime):
    gate = 1e-10 * DEFAULT_CONSTANTS.a
    for l in (1, 2):
        for star in vertex_stars(regime, l):
            if star.is_interior:
                vec = boundary_vector(regime, l, star)
                assert np.linalg.norm(vec) <= gate, (star.word, star.corner)
        assert harmonic_residual(regime, l) <= gate


def test_residual_zero_only_at_the_harmonic_ratio():
    # Scanning the vertical/horizontal ratio of the first map shows the
    # vertex sums cancel only at ratio 1/3.
    gate = 1e-10 * DEFAULT_CONSTANTS.a
    for ratio in (0.2, 0.25, 1.0 / 3.0, 0.4, 0.5):
        res = harmonic_residual(CONSTANT_HALF, 2, beta_over_alpha=ratio)
        if ratio == 1.0 / 3.0:
            assert res <= gate
        else:
            assert res > 1e-3 * DEFAULT_CONSTANTS.a, ratio


def test_harmonic_report_names_worst_vertex():
    rep = harmonic_report(PREFIX_EXP, 3)
    assert rep.depth == 3
    assert len(rep.worst_word) <= 3
    assert rep.worst_corner in ("A", "B", "C")
    assert rep.n_interior == 3 * (3**3 - 1)
    # Base corners carry the non-vanishing sums (one per corner).
    assert set(rep.corner_norms) == {"A", "B", "C"}
    assert all(v > 0.0 for v in rep.corner_norms.values())


def test_eigen_direction_product_identity(regime):
    # Down the all-2s spine the slanted direction w = -(1/2, sqrt(3)/2) is
    # an eigenvector of every level's second map, so the weight-compensated
    # product acts as 1/((3/5) eps_1).
    w = np.array([-0.5, -math.sqrt(3.0) / 2.0])
    for l in range(0, 9):
        m = w.copy()
        for i in range(2, l + 2):
            m = triple(regime.eps(i))[1].linear @ m
        lhs = regime.eps_tilde(1, l + 1) / regime.lam_tilde(l + 1) * m
        rhs = w / (0.6 * regime.eps(1))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs)), l


def test_weak_laplacian_affine_fields_have_zero_density():
    g = weak_laplacian_h1(TAIL_ONLY, 2, parse("1 + 2*x - y"))
    for _, coeffs in g:
        assert np.max(np.abs(coeffs)) == 0.0


def test_weak_pairing_matches_energy(rng):
    for _ in range(3):
        v = vanishing_at_ABC(random_poly(rng, 2))
        u = random_poly(rng, 3)
        lhs = weak_pairing(TAIL_ONLY, 3, u, v)
        rhs = energy_total(TAIL_ONLY, 3, u, v).total
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-13)


def test_weak_pairing_rejects_non_vanishing_test_function():
    with pytest.raises(ValueError):
        weak_pairing(TAIL_ONLY, 2, parse("x"), parse("y"))


def test_weak_pairing_requires_harmonic_family():
    with pytest.raises(NonHarmonicError):
        weak_pairing(TAIL_ONLY, 2, parse("x"), vanishing_at_ABC(parse("1")), beta_over_alpha=0.5)


def test_nd_gamma_positive_and_linear_in_stretch():
    g1 = nd_gamma(1.0)
    assert g1 > 0.05
    ratios = [nd_gamma(e) / e for e in (0.25, 0.5, 0.75)]
    assert max(ratios) - min(ratios) <= 1e-3
    assert all(abs(r - g1) <= 1e-3 for r in ratios)


def test_nd_gamma_rank_one_mock_is_zero():
    # All three differentials equal and rank one: a common kernel direction
    # exists, so the nondegeneracy constant collapses.
    m = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert nd_gamma_of((m, m, m), n=180, refine=2) <= 1e-12

"""Tests for the finite chain models.

Cross-module oracles: naive/stratum point counts are compared against
the q-polynomial counts coming from the Weyl-group side (sum of
q^length over right-minimal coset members), which are computed by a
completely independent code path.
"""

import copy

import numpy as np
import pytest

from locmodel import latmod, linalg
from locmodel.admissible import DoubleCoset, adm_set, stratum_count, total_count
from locmodel.errors import (
    BadRanks,
    IncompatibleElement,
    SingularGram,
    WildRamification,
)
from locmodel.latmod import (
    ChainPoint,
    apply_chain_automorphism,
    build_model,
    canonical_points,
    classify_strata,
    has_splitting_flag,
    naive_points,
    random_chain_automorphism,
    signature,
    splitting_points,
    standard_point,
    torsor_check,
    unramified_points,
)
from locmodel.linalg import Subspace
from locmodel.weyl import Coweight, ParahoricSpec, RootDatum, omega_generator, translation

GL2 = RootDatum("GL", 2)
GL3 = RootDatum("GL", 3)
GSP1 = RootDatum("GSp", 1)
GSP2 = RootDatum("GSp", 2)


def gl2_model(p=2, r_vec=(1, 1)):
    return build_model("GL", 2, 2, {0}, p, r_vec)


class TestBuildModel:
    def test_gl2_shape(self):
        m = gl2_model()
        assert len(m.slots) == 1 and m.dim == 4
        assert linalg.rank(m.N) == 2
        assert (m.N @ m.N).array.tolist() == [[0] * 4] * 4

    def test_gl2_e1_two_slots(self):
        m = build_model("GL", 2, 1, {0, 1}, 3, (1,))
        assert len(m.slots) == 2 and m.dim == 2
        assert not m.N.array.any()
        assert linalg.rank(m.T[0]) == 1

    def test_gsp1_gram_perfect_alternating(self):
        m = build_model("GSp", 1, 2, {0}, 3)
        g = m.gram[0].array
        assert linalg.rank(m.gram[0]) == 4
        assert np.array_equal(g.T, (-g) % 3)
        assert not g.diagonal().any()

    def test_wild_ramification(self):
        with pytest.raises(WildRamification):
            build_model("GSp", 1, 2, {0}, 2)

    def test_bad_ranks(self):
        with pytest.raises(BadRanks):
            build_model("GL", 2, 2, {0}, 2, (3, 0))
        with pytest.raises(BadRanks):
            build_model("GL", 2, 2, {0}, 2, (1,))
        with pytest.raises(BadRanks):
            build_model("GL", 2, 2, set(), 2, (1, 1))
        with pytest.raises(BadRanks):
            build_model("GSp", 1, 3, {0}, 2, (0, 1, 1))


class TestNaive:
    @pytest.mark.parametrize("p,expected", [(2, 7), (3, 13)])
    def test_frozen_gl2(self, p, expected):
        assert sum(1 for _ in naive_points(gl2_model(p))) == expected

    def test_rank_independent_of_split(self):
        pts1 = set(naive_points(gl2_model(2, (1, 1))))
        pts2 = {
            ChainPoint(gl2_model(2, (2, 0)), pt.subspaces)
            for pt in naive_points(gl2_model(2, (2, 0)))
        }
        assert {p.as_tuple() for p in pts1} == {p.as_tuple() for p in pts2}

    def test_gl2_iwahori_e1_matches_weyl_count(self):
        # Independent oracle: sum q^l over the admissible strata.
        m = build_model("GL", 2, 1, {0, 1}, 3, (1,))
        s = adm_set(
            ParahoricSpec(GL2, frozenset({0, 1})), Coweight(GL2, (1, 0))
        )
        assert sum(1 for _ in naive_points(m)) == total_count(s, 3)

    def test_gl2_grassmannian_matches_weyl_count(self):
        s = adm_set(ParahoricSpec(GL2, frozenset({0})), Coweight(GL2, (2, 0)))
        for p in (2, 3):
            assert sum(1 for _ in naive_points(gl2_model(p))) == total_count(s, p)

    def test_rank_zero(self):
        m = build_model("GL", 2, 2, {0}, 2, (0, 0))
        assert sum(1 for _ in naive_points(m)) == 1


class TestSplitting:
    @pytest.mark.parametrize("p", [2, 3])
    def test_frozen_gl2_count(self, p):
        assert sum(1 for _ in splitting_points(gl2_model(p))) == (p + 1) ** 2

    def test_tops_are_naive(self):
        m = gl2_model(2)
        naive = set(naive_points(m))
        for fp in splitting_points(m):
            assert fp.top() in naive
            f1, f2 = fp.flags[0]
            assert f1.leq(f2)
            assert not linalg.image(m.N, f1).dim

    def test_canonical_r11_is_all_of_naive(self):
        m = gl2_model(2, (1, 1))
        assert set(canonical_points(m)) == set(naive_points(m))

    def test_canonical_r20_single_point(self):
        m = gl2_model(2, (2, 0))
        naive = list(naive_points(m))
        canon = list(canonical_points(m))
        assert len(naive) == 7 and len(canon) == 1
        # the surviving point is ker N with the flag forced to F1 = F2
        ker = linalg.preimage(m.N, Subspace.zero(m.field, m.dim))
        assert canon[0].subspaces[0] == ker
        flags = list(latmod._flag_search(m, canon[0], None, collect=True))
        assert flags == [{0: (ker, ker)}]

    def test_flag_condition_operator_span_invariance(self):
        # replacing N by N + N^2 changes no splitting flag
        m = build_model("GL", 2, 3, {0}, 2, (1, 1, 1))
        m2 = copy.copy(m)
        m2.N = m.N + m.N @ m.N
        a = {fp.as_tuple() for fp in splitting_points(m)}
        b = {fp.as_tuple() for fp in splitting_points(m2)}
        assert a == b


class TestUnramified:
    def test_frozen_gl2_lines(self):
        m = gl2_model(2)
        for l in (1, 2):
            assert sum(1 for _ in unramified_points(m, l)) == 3

    def test_bad_level(self):
        with pytest.raises(BadRanks):
            list(unramified_points(gl2_model(2), 3))

    @pytest.mark.parametrize("p", [2, 3])
    def test_torsor_gl2(self, p):
        rep = torsor_check(gl2_model(p))
        assert rep.passed
        assert rep.splitting_total == (p + 1) ** 2
        assert rep.unramified_factors == (p + 1, p + 1)

    def test_torsor_gl2_iwahori_e1(self):
        rep = torsor_check(build_model("GL", 2, 1, {0, 1}, 3, (1,)))
        assert rep.passed

    @pytest.mark.parametrize("p", [3, 5])
    def test_torsor_gsp1(self, p):
        rep = torsor_check(build_model("GSp", 1, 2, {0}, p))
        assert rep.passed


class TestStandardPoint:
    def test_frozen_central(self):
        m = gl2_model(2)
        pt = standard_point(translation(GL2, (1, 1)), m)
        ker = linalg.preimage(m.N, Subspace.zero(m.field, m.dim))
        assert pt.subspaces[0] == ker

    def test_frozen_generic(self):
        m = gl2_model(2)
        pt = standard_point(translation(GL2, (2, 0)), m)
        # R*e_1: coordinates (e_1, pi e_1)
        expected = Subspace.from_rows(m.field, 4, [[1, 0, 0, 0], [0, 1, 0, 0]])
        assert pt.subspaces[0] == expected

    def test_elementary_divisor_type(self):
        # the standard point of t_lam is the module sum of R/pi^{lam_i}
        m = gl2_model(3)
        for lam in [(2, 0), (1, 1), (0, 2)]:
            pt = standard_point(translation(GL2, lam), m)
            f = pt.subspaces[0]
            assert f.dim == sum(min(x, m.e) for x in lam)
            assert linalg.image(m.N, f).dim == sum(
                max(min(x, m.e) - 1, 0) for x in lam
            )

    def test_standard_points_are_naive(self):
        m = gl2_model(2)
        naive = set(naive_points(m))
        s = adm_set(ParahoricSpec(GL2, frozenset({0})), Coweight(GL2, (2, 0)))
        for c in s.classes:
            assert standard_point(c.min_rep, m) in naive

    def test_rank_mismatch(self):
        with pytest.raises(IncompatibleElement):
            standard_point(translation(GL2, (1, 0)), gl2_model(2))

    def test_group_mismatch(self):
        with pytest.raises(IncompatibleElement):
            standard_point(translation(GSP1, (1, 1)), gl2_model(2))


class TestStrata:
    @pytest.mark.parametrize("p", [2, 3])
    def test_frozen_gl2_decomposition(self, p):
        m = gl2_model(p)
        spec = ParahoricSpec(GL2, frozenset({0}))
        s = adm_set(spec, Coweight(GL2, (2, 0)))
        rep = classify_strata(canonical_points(m), s, m)
        assert rep.passed
        got = {c.min_rep.lam: n for c, n in rep.rows}
        assert got == {(2, 0): p * p + p, (1, 1): 1}
        for c, n in rep.rows:
            assert n == stratum_count(c, p)

    def test_gl2_iwahori_e1_strata(self):
        m = build_model("GL", 2, 1, {0, 1}, 3, (1,))
        spec = ParahoricSpec(GL2, frozenset({0, 1}))
        s = adm_set(spec, Coweight(GL2, (1, 0)))
        rep = classify_strata(naive_points(m), s, m)
        assert rep.passed
        assert len(rep.rows) == 3
        for c, n in rep.rows:
            assert n == stratum_count(c, 3)

    def test_unmatched_points_detected(self):
        m = gl2_model(2)
        spec = ParahoricSpec(GL2, frozenset({0}))
        s = adm_set(spec, Coweight(GL2, (1, 1)))
        rep = classify_strata(naive_points(m), s, m)
        assert rep.unmatched == 6 and not rep.passed

    def test_orbit_fallback_agrees_with_signatures(self):
        m = gl2_model(2)
        spec = ParahoricSpec(GL2, frozenset({0}))
        s = adm_set(spec, Coweight(GL2, (2, 0)))
        pts = list(canonical_points(m))
        by_sig = classify_strata(pts, s, m)
        by_orbit = latmod._classify_by_orbits(pts, s, m)
        assert dict(by_sig.rows) == dict(by_orbit.rows)
        assert by_orbit.unmatched == 0

    @pytest.mark.parametrize("p", [3, 5])
    def test_gsp1_canonical_strata_match_admissible(self, p):
        m = build_model("GSp", 1, 2, {0}, p)
        spec = ParahoricSpec(GSP1, frozenset({0}))
        s = adm_set(spec, Coweight(GSP1, (2, 2)))
        rep = classify_strata(canonical_points(m), s, m)
        assert rep.passed
        assert {c for c, _ in rep.rows} == set(s.classes)
        for c, n in rep.rows:
            assert n == stratum_count(c, p)
        maximal = s.maximal_classes()
        assert len(maximal) == 1


class TestSignatureInvariance:
    @pytest.mark.parametrize(
        "model,draws",
        [
            (build_model("GL", 2, 2, {0}, 2, (1, 1)), 60),
            (build_model("GL", 2, 1, {0, 1}, 3, (1,)), 40),
        ],
        ids=["gl2-e2", "gl2-e1-iwahori"],
    )
    def test_random_automorphisms_preserve_signatures(self, model, draws):
        rng = np.random.default_rng(7)
        pts = list(naive_points(model))
        naive = set(pts)
        for _ in range(draws):
            g = random_chain_automorphism(model, rng)
            pt = pts[int(rng.integers(len(pts)))]
            moved = apply_chain_automorphism(g, pt)
            assert moved in naive
            assert signature(moved) == signature(pt)


def lattice_exps(model, label, w=None, shift=0):
    """Exponent profile {symbol: min exponent} of (the geometric action
    of w on) a slot lattice, optionally multiplied by pi^shift."""
    fshift = 0 if model.kind == "GL" else 1 - model.e
    out = {}
    for sym, a in model.slot_basis[label]:
        if w is not None:
            sym, a = latmod._act_on_lattice_vector(
                latmod._geometric(w), sym, a, fshift
            )
        a += shift
        out[sym] = min(a, out.get(sym, a))
    return out


def chain_member(model, k):
    """Exponent profile of the k-th member of the doubly infinite chain
    (position t of slot t); for GSp the top slot repeats the bottom one
    up to pi, so the period is one shorter than the slot count."""
    labels = list(model.slots)
    period = labels[:-1] if model.kind == "GSp" and len(labels) > 1 else labels
    q, r = divmod(k, len(period))
    return lattice_exps(model, period[r], shift=-q)


class TestOmegaChainRotation:
    """The length-zero generator rotates the Iwahori chain: each member
    moves up by one step for GL and by g steps for GSp (the duality
    shift)."""

    @pytest.mark.parametrize(
        "kind,size,e,p",
        [
            ("GL", 2, 2, 2),
            ("GL", 3, 1, 3),
            ("GSp", 1, 2, 3),
            ("GSp", 2, 2, 3),
            ("GSp", 1, 3, 2),
        ],
    )
    def test_rotation(self, kind, size, e, p):
        datum = RootDatum(kind, size)
        I = set(datum.vertex_labels)
        model = build_model(
            kind, size, e, I, p, (1,) * e if kind == "GL" else None
        )
        tau = omega_generator(datum)
        shift = 1 if kind == "GL" else size
        if kind == "GSp":
            # the chain closes up: bottom slot = pi * top slot
            assert chain_member(model, 0) == lattice_exps(
                model, model.slots[-1], shift=1
            )
        for t, label in enumerate(model.slots):
            moved = lattice_exps(model, label, w=tau)
            assert moved == chain_member(model, t + shift)

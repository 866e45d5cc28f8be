from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_element, tree_model
from gl2modp.induction import ALPHA_VERTEX, ID_VERTEX, CosetForm, Region, TreeVertex
from gl2modp.localring import Mat2Local

# (p, r_vec, e): q = 7, 25 and a ramified case
MODELS = [(7, (3,), 1), (5, (1, 2), 1), (7, (3,), 2)]


def model_for(i, radius=3):
    p, r, e = MODELS[i]
    return tree_model(p, r, e, radius)


def special_elements(M, rng):
    return [
        M.alpha(), M.beta(), M.w(),
        M.delta_b(M.random_local(rng)), M.delta_c(M.random_local(rng)), M.delta_a(M.random_local(rng)),
        M.random_K(rng),
    ]


class TestNormalForm:
    def test_vertex_matrices_are_normal(self):
        M = model_for(0)
        for v in Region.sphere_union(M.q, 2).vertices():
            assert M.coset_normal_form(M.vertex_matrix(v)) == CosetForm(v, (1, 0, 0, 1), 0)

    def test_beta_is_the_alpha_vertex(self):
        for i in range(len(MODELS)):
            M = model_for(i)
            assert M.coset_normal_form(M.beta()).vertex == ALPHA_VERTEX

    @pytest.mark.parametrize("i", range(len(MODELS)))
    def test_torus_shortcut_matches_general_normal_form(self, i, rng):
        M = model_for(i)
        verts = Region.sphere_union(M.q, 2).vertices()
        for _ in range(60):
            a, d = (int(x) for x in rng.integers(1, M.q, 2))
            v = verts[int(rng.integers(len(verts)))]
            g = M.diag(a, d)
            assert M.normal_form_at(g, v) == M.coset_normal_form(g @ M.vertex_matrix(v))


@given(st.integers(0, len(MODELS) - 1), st.integers(0, 2**32 - 1), st.integers(0, 2))
def test_normal_form_right_KZ_invariant_and_idempotent(i, seed, t):
    M = model_for(i)
    rng = np.random.default_rng(seed)
    verts = Region.sphere_union(M.q, 2).vertices()
    v = verts[int(rng.integers(len(verts)))]
    k = M.random_K(rng)
    g = M.vertex_matrix(v) @ k
    moved = Mat2Local(*g.entries(), pi_power=g.pi_power + t)
    cf = M.coset_normal_form(moved)
    assert cf.vertex == v
    assert cf.pi_power == t
    assert M.coset_normal_form(M.vertex_matrix(cf.vertex)).vertex == cf.vertex


class TestAction:
    def test_identity(self, rng):
        M = model_for(1)
        x = random_element(M, rng, 2)
        assert M.act(M.identity(), x) == x

    def test_delta_b_moves_digit(self):
        M = model_for(1)
        gf = M.gf
        for b0, mu in product(range(M.q), repeat=2):
            x = M.at(TreeVertex(0, 1, (mu,)), M.x_top)
            y = M.act(M.delta_b(M.ring.teich(b0)), x)
            assert y == M.at(TreeVertex(0, 1, (gf.add(b0, mu),)), M.x_top)

    def test_beta_squared_is_central(self, rng):
        M = model_for(0)
        x = random_element(M, rng, 1)
        assert M.act(M.beta(), M.act(M.beta(), x)) == x

    def test_beta_swaps_sides(self):
        M = model_for(0)
        s = M.build_element("s", 2, 3)
        assert {v.side for v in M.act(M.beta(), s).support()} == {1}


@given(st.integers(0, len(MODELS) - 1), st.integers(0, 2**32 - 1))
def test_action_is_a_group_action(i, seed):
    M = model_for(i)
    rng = np.random.default_rng(seed)
    x = random_element(M, rng, 1)
    g, h = M.random_K(rng), M.random_K(rng)
    assert M.act(g, M.act(h, x)) == M.act(g @ h, x)


class TestHecke:
    def test_T_of_highest_vector(self):
        for i in range(len(MODELS)):
            M = model_for(i)
            assert M.hecke_T(M.at(ID_VERTEX, M.x_top)) == M.build_element("s", 1, 0)

    def test_T_of_lowest_vector(self):
        for i in range(len(MODELS)):
            M = model_for(i)
            r = M.weight.r
            sign = (-1) ** r % M.p
            want = M.build_element("s", 1, r).scale(sign) + M.at(ALPHA_VERTEX, M.y_top)
            assert M.hecke_T(M.at(ID_VERTEX, M.y_top)) == want

    def test_trivial_weight(self):
        M = tree_model(5, (0,), 1, 3)
        assert M.hecke_T(M.build_element("A0", 0)) == M.build_element("A0", 1) + M.build_element("A1", 0)

    @pytest.mark.parametrize("i", range(len(MODELS)))
    def test_local_formula_matches_coset_sum(self, i, rng):
        M = model_for(i)
        for _ in range(3):
            x = random_element(M, rng, 1)
            assert M.hecke_T(x) == M.hecke_T_generic(x)


@given(st.integers(0, len(MODELS) - 1), st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_T_commutes_with_G(i, seed, which):
    M = model_for(i)
    rng = np.random.default_rng(seed)
    x = random_element(M, rng, 1, density=0.2)
    g = special_elements(M, rng)[which]
    assert M.hecke_T(M.act(g, x)) == M.act(g, M.hecke_T(x))


@given(st.integers(0, len(MODELS) - 1), st.integers(0, 2**32 - 1))
def test_T_is_injective(i, seed):
    M = model_for(i)
    rng = np.random.default_rng(seed)
    x = random_element(M, rng, 1)
    assert M.im_T_membership(M.hecke_T(x)) == x


class TestImT:
    def test_s_in_box_is_in_image(self):
        M = tree_model(7, (3, 3), 1, 2)
        r = M.weight.r
        for k0, k1 in product(range(4), repeat=2):
            k = k0 + 7 * k1
            member = M.im_T_membership(M.build_element("s", 1, k)) is not None
            assert member == (k != r)

    def test_zero(self):
        M = model_for(0)
        assert M.im_T_membership(M.zero()).is_zero()


class TestNamedElements:
    def test_s_support(self):
        M = model_for(0)
        s = M.build_element("s", 1, 0)
        assert len(s.support()) == 7
        assert all(np.array_equal(vec, M.x_top) for _, vec in s.items())

    def test_t_values(self):
        M = tree_model(5, (1, 2), 1, 3)
        for k in range(2):
            t = M.build_element("t", 1, k)
            iv = [0, 0]
            iv[k] = 1
            assert len(t.support()) == M.q
            assert all(np.array_equal(vec, M.vector(iv)) for _, vec in t.items())

    def test_bad_exponent(self):
        M = model_for(0)
        with pytest.raises(ValueError):
            M.build_element("s", 1, M.q)

    def test_propagate(self):
        M = model_for(1)
        assert M.propagate(M.at(ID_VERTEX, M.x_top)) == M.build_element("s", 1, 0)
        for k in (0, 3, 11):
            assert M.propagate(M.build_element("s", 1, k)) == M.build_element("s", 2, k)

    def test_propagate_linear(self, rng):
        M = model_for(0)
        x, y = random_element(M, rng, 1, sides=(0,)), random_element(M, rng, 1, sides=(0,))
        assert M.propagate(x + y.scale(3)) == M.propagate(x) + M.propagate(y).scale(3)


def test_beta_normalizes_pro_p_iwahori(rng):
    M = model_for(2)
    R = M.ring
    gens = [M.delta_b(M.random_local(rng)), M.delta_c(M.random_local(rng)), M.delta_a(M.random_local(rng))]
    for gamma in gens:
        # beta^{-1} = pi^{-1} beta
        conj = M.beta() @ gamma @ M.beta()
        a, b, c, d = (R.div_pi(x, 1) for x in conj.entries())
        assert c.valuation() >= 1
        assert a.residue() == 1 and d.residue() == 1
        assert b.valuation() >= 0


def test_to_records_is_deterministic(rng):
    M = model_for(1)
    x = random_element(M, rng, 1)
    assert x.to_records() == M.element(dict(reversed(list(x.items())))).to_records()

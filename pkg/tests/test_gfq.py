from itertools import product
from math import comb, factorial

import pytest
from hypothesis import given, strategies as st

from gl2modp.gfq import (
    FieldElem,
    FieldParams,
    GF,
    binom_mod_p,
    evaluate_poly,
    field,
    field_arith,
    is_irreducible,
    least_irreducible,
    nu_p_binom_prime_power,
    nu_p_factorial,
    reduce_poly,
    reduced_interpolate,
)

FIELDS = [(3, 1), (5, 1), (7, 1), (3, 2), (5, 2), (7, 2), (3, 3)]


def poly_mul_mod(a, b, mod, p):
    """Schoolbook product of coefficient lists modulo a monic polynomial; test-side oracle."""
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % p
    m = len(mod) - 1
    for k in range(len(out) - 1, m - 1, -1):
        c = out[k]
        if c:
            for i in range(m + 1):
                out[k - m + i] = (out[k - m + i] - c * mod[i]) % p
    return (out + [0] * m)[:m]


class TestField:
    def test_inverse_example(self):
        assert field(5).inv(2) == 3

    def test_fermat(self):
        assert field(7).pow(3, 6) == 1

    def test_modulus_is_least_irreducible(self):
        # x^2 + 1 is reducible mod 5 (2^2 = -1); x^2 + 2 is the first irreducible
        assert least_irreducible(5, 2) == (2, 0, 1)
        assert not is_irreducible((1, 0, 1), 5)
        assert least_irreducible(7, 2) == (1, 0, 1)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            FieldParams(4)
        with pytest.raises(ValueError):
            FieldParams(5, 2, (1, 0, 1))

    @pytest.mark.parametrize("p,m", FIELDS)
    def test_multiplication_matches_polynomial_oracle(self, p, m):
        F = field(p, m)
        mod = list(F.params.modulus)
        for a, b in product(range(F.q), repeat=2):
            want = poly_mul_mod(list(F.digits[a]), list(F.digits[b]), mod, p)
            assert F.digits[F.mul(a, b)] == tuple(want)

    @pytest.mark.parametrize("p,m", FIELDS)
    def test_every_nonzero_element_inverts(self, p, m):
        F = field(p, m)
        assert all(F.mul(a, F.inv(a)) == 1 for a in range(1, F.q))

    @pytest.mark.parametrize("p,m", FIELDS)
    def test_frobenius_is_automorphism_fixing_prime_field(self, p, m):
        F = field(p, m)
        for a, b in product(range(F.q), repeat=2):
            assert F.frobenius(F.add(a, b)) == F.add(F.frobenius(a), F.frobenius(b))
            assert F.frobenius(F.mul(a, b)) == F.mul(F.frobenius(a), F.frobenius(b))
        assert all(F.frobenius(F.from_int(c)) == F.from_int(c) for c in range(p))
        assert all(F.frobenius(a, m) == a for a in range(F.q))

    def test_subfield_elements(self):
        F = field(3, 2)
        assert [a for a in range(F.q) if F.is_in_subfield(a, 1)] == [0, 1, 2]


@given(st.sampled_from(FIELDS), st.data())
def test_ring_axioms(pm, data):
    F = field(*pm)
    a, b, c = (data.draw(st.integers(0, F.q - 1)) for _ in range(3))
    assert F.add(a, F.add(b, c)) == F.add(F.add(a, b), c)
    assert F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.add(a, F.neg(a)) == 0
    assert F.sub(a, b) == F.add(a, F.neg(b))


@given(st.sampled_from(FIELDS), st.data())
def test_field_elem_wrapper_agrees(pm, data):
    F = field(*pm)
    a, b = (FieldElem(F, data.draw(st.integers(0, F.q - 1))) for _ in range(2))
    assert field_arith(a, b, "add").value == F.add(a.value, b.value)
    assert field_arith(a, b, "mul").value == F.mul(a.value, b.value)
    assert field_arith(a, None, "frobenius").value == F.frobenius(a.value)
    if b:
        assert (a / b * b).value == a.value


class TestCombinatorics:
    def test_examples(self):
        assert binom_mod_p(7, 2, 5) == comb(7, 2) % 5 == 1
        assert binom_mod_p(5, 3, 5) == 0
        assert all(binom_mod_p(n, 0, 7) == 1 for n in range(100))
        assert nu_p_factorial(25, 5) == 6
        assert nu_p_factorial(0, 5) == 0
        assert nu_p_factorial(6, 7) == 0
        assert nu_p_binom_prime_power(2, 5, 5) == 1
        assert nu_p_binom_prime_power(1, 5, 5) == 0
        assert nu_p_binom_prime_power(3, 1, 7) == 3

    def test_prime_power_valuation_against_factorials(self):
        for p in (3, 5, 7):
            for k in range(1, 4):
                for m in range(1, p**k + 1):
                    c = comb(p**k, m)
                    v = 0
                    while c % p == 0:
                        c //= p
                        v += 1
                    assert nu_p_binom_prime_power(k, m, p) == v

    def test_binomial_small_against_factorials(self):
        for p in (3, 5, 7):
            for n in range(60):
                for k in range(n + 1):
                    assert binom_mod_p(n, k, p) == factorial(n) // (factorial(k) * factorial(n - k)) % p

    def test_binomial_out_of_range(self):
        assert binom_mod_p(3, 5, 7) == 0
        with pytest.raises(ValueError):
            binom_mod_p(-1, 0, 3)


@given(st.integers(0, 10**6), st.sampled_from([2, 3, 5, 7, 11]))
def test_legendre_property(n, p):
    want, pk = 0, p
    while pk <= n:
        want += n // pk
        pk *= p
    assert nu_p_factorial(n, p) == want


class TestInterpolation:
    def test_zero_indicator(self):
        F = field(5)
        poly = reduced_interpolate(F, {(a,): int(a == 0) for a in range(5)}, 1)
        # 1 - x^{q-1}
        assert poly == {(0,): 1, (4,): F.neg(1)}

    def test_constant(self):
        F = field(3, 2)
        assert reduced_interpolate(F, {pt: 4 for pt in product(range(9), repeat=2)}, 2) == {(0, 0): 4}

    def test_frobenius_table_is_linear(self):
        F = field(5)
        assert reduced_interpolate(F, {(a,): F.pow(a, 5) for a in range(5)}, 1) == {(1,): 1}

    def test_incomplete_table(self):
        with pytest.raises(ValueError):
            reduced_interpolate(field(3), {(0,): 1}, 1)

    def test_reduce_poly(self):
        F = field(3)
        assert reduce_poly(F, {(3,): 1, (1,): 1}) == {(1,): 2}
        assert reduce_poly(F, {(4,): 1}) == {(2,): 1}


@given(st.sampled_from([(3, 1), (5, 1), (3, 2)]), st.integers(1, 2), st.data())
def test_interpolation_round_trip(pm, n, data):
    F = field(*pm)
    q = F.q
    if q ** n > 100:
        n = 1
    exps = st.tuples(*[st.integers(0, q - 1)] * n)
    poly = data.draw(st.dictionaries(exps, st.integers(1, q - 1), max_size=6))
    table = {pt: evaluate_poly(F, poly, pt) for pt in product(range(q), repeat=n)}
    assert reduced_interpolate(F, table, n) == poly

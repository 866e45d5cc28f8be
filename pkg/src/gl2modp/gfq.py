"""Exact arithmetic in GF(p^m) and modular combinatorics.

Field elements are coded as integers ``sum(c_i * p**i)`` where ``c_i`` are the
coordinates in the power basis of ``F_p[X]/(modulus)``.  The :class:`GF` object
owns lookup tables; :class:`FieldElem` is a thin immutable wrapper for callers
that prefer operator syntax.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

Poly = Tuple[int, ...]  # coefficients low -> high

# Fields up to this size get full q x q addition / multiplication tables.
_TABLE_LIMIT = 512


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _prime_factors(n: int) -> List[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# --- polynomials over F_p ------------------------------------------------

def _trim(a: List[int]) -> List[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: Sequence[int], m: Sequence[int], p: int) -> List[int]:
    a = _trim([x % p for x in a])
    dm = len(m) - 1
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm and a:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _trim(a)
    return a


def _pmul(a: Sequence[int], b: Sequence[int], p: int) -> List[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _psub(a: Sequence[int], b: Sequence[int], p: int) -> List[int]:
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)]
    return _trim(out)


def _pgcd(a: Sequence[int], b: Sequence[int], p: int) -> List[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _ppowmod(base: Sequence[int], e: int, m: Sequence[int], p: int) -> List[int]:
    result, b = [1], _pmod(base, m, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, b, p), m, p)
        b = _pmod(_pmul(b, b, p), m, p)
        e >>= 1
    return result


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    """Rabin's test for a monic polynomial over F_p."""
    m = len(modulus) - 1
    if m < 1 or modulus[-1] % p != 1:
        return False
    if m == 1:
        return True
    x = [0, 1]
    if _psub(_ppowmod(x, p**m, modulus, p), x, p):
        return False
    for d in _prime_factors(m):
        h = _psub(_ppowmod(x, p ** (m // d), modulus, p), x, p)
        if len(_pgcd(modulus, h, p)) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def least_irreducible(p: int, m: int) -> Poly:
    """Least monic irreducible of degree m, ordering by the integer sum(c_i p^i)."""
    for k in range(p**m):
        coeffs = tuple((k // p**i) % p for i in range(m)) + (1,)
        if is_irreducible(coeffs, p):
            return coeffs
    raise ValueError(f"no irreducible polynomial of degree {m} over F_{p}")


@dataclass(frozen=True)
class FieldParams:
    p: int
    m: int = 1
    modulus: Poly = ()

    def __post_init__(self) -> None:
        if not is_prime(self.p) or self.p == 2:
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.m < 1:
            raise ValueError("extension degree must be >= 1")
        if not self.modulus:
            object.__setattr__(self, "modulus", least_irreducible(self.p, self.m))
        if len(self.modulus) != self.m + 1 or not is_irreducible(self.modulus, self.p):
            raise ValueError(f"modulus {self.modulus} is not irreducible of degree {self.m}")

    @property
    def q(self) -> int:
        return self.p**self.m


class GF:
    """GF(p^m) with integer-coded elements."""

    def __init__(self, params: FieldParams):
        self.params = params
        self.p, self.m, self.q = params.p, params.m, params.q
        p, m, q = self.p, self.m, self.q
        self.digits: List[Tuple[int, ...]] = [tuple((a // p**i) % p for i in range(m)) for a in range(q)]
        self._encode_w = [p**i for i in range(m)]
        self.exp, self.log = self._build_log_tables()
        if q <= _TABLE_LIMIT:
            self._add = [[self._add_slow(a, b) for b in range(q)] for a in range(q)]
            self._mul = [[self._mul_slow(a, b) for b in range(q)] for a in range(q)]
        else:
            self._add = None
            self._mul = None
        self._neg = [self.encode([(-c) % p for c in self.digits[a]]) for a in range(q)]
        self._inv = [0] + [self.exp[(-self.log[a]) % (q - 1)] for a in range(1, q)]
        self._frob = [self.pow(a, p) for a in range(q)]

    # coding ---------------------------------------------------------------
    def encode(self, coeffs: Sequence[int]) -> int:
        return sum((c % self.p) * w for c, w in zip(coeffs, self._encode_w))

    def from_int(self, n: int) -> int:
        """Image of an integer under Z -> F_p -> F_q."""
        return n % self.p

    def _polymul_code(self, a: int, b: int) -> int:
        prod = _pmul(list(self.digits[a]), list(self.digits[b]), self.p)
        return self.encode(_pmod(prod, self.params.modulus, self.p)) if prod else 0

    def _build_log_tables(self) -> Tuple[List[int], List[int]]:
        q = self.q
        if q == 2:
            return [1], [0, 0]
        order_factors = _prime_factors(q - 1)
        for g in range(2 if self.m == 1 else self.p, q):
            powers = [1]
            x = 1
            for _ in range(q - 2):
                x = self._polymul_code(x, g)
                powers.append(x)
            if len(set(powers)) == q - 1:
                log = [0] * q
                for i, v in enumerate(powers):
                    log[v] = i
                return powers, log
        raise RuntimeError("no primitive element found")  # pragma: no cover

    def _add_slow(self, a: int, b: int) -> int:
        da, db = self.digits[a], self.digits[b]
        return self.encode([x + y for x, y in zip(da, db)])

    def _mul_slow(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[(self.log[a] + self.log[b]) % (self.q - 1)]

    # arithmetic -------------------------------------------------------------
    def add(self, a: int, b: int) -> int:
        return self._add[a][b] if self._add is not None else self._add_slow(a, b)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self._neg[b])

    def neg(self, a: int) -> int:
        return self._neg[a]

    def mul(self, a: int, b: int) -> int:
        return self._mul[a][b] if self._mul is not None else self._mul_slow(a, b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in GF(%d)" % self.q)
        return self._inv[a]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, k: int) -> int:
        if k == 0:
            return 1
        if a == 0:
            if k < 0:
                raise ZeroDivisionError("negative power of zero")
            return 0
        return self.exp[(self.log[a] * k) % (self.q - 1)]

    def frobenius(self, a: int, times: int = 1) -> int:
        """a^(p^times)."""
        for _ in range(times % self.m):
            a = self._frob[a]
        return a

    def frob_power(self, a: int, j: int) -> int:
        """a^(p^j)."""
        return self.pow(a, self.p**j) if a else 0

    def sum(self, values: Iterable[int]) -> int:
        s = 0
        for v in values:
            s = self.add(s, v)
        return s

    def elements(self) -> range:
        return range(self.q)

    def is_in_subfield(self, a: int, degree: int) -> bool:
        return self.pow(a, self.p**degree) == a

    # numpy tables for vectorised elimination --------------------------------
    @cached_property
    def np_tables(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        if self._add is None:
            raise ValueError("numpy tables are only built for small fields")
        dtype = np.int16 if self.q < 2**15 else np.int32
        add = np.array(self._add, dtype=dtype)
        mul = np.array(self._mul, dtype=dtype)
        neg = np.array(self._neg, dtype=dtype)
        inv = np.array(self._inv, dtype=dtype)
        return add, mul, neg, inv

    @cached_property
    def power_table(self) -> List[List[int]]:
        """power_table[a][k] = a^k for 0 <= k <= q-1, with 0^0 = 1."""
        return [[self.pow(a, k) if (a or k) else 1 for k in range(self.q)] for a in range(self.q)]

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.m})"


@lru_cache(maxsize=None)
def field(p: int, m: int = 1) -> GF:
    """Cached field with the default (least irreducible) modulus."""
    return GF(FieldParams(p, m))


@dataclass(frozen=True)
class FieldElem:
    field: GF
    value: int

    @classmethod
    def from_coeffs(cls, fld: GF, coeffs: Sequence[int]) -> "FieldElem":
        return cls(fld, fld.encode(coeffs))

    @property
    def coeffs(self) -> Tuple[int, ...]:
        return self.field.digits[self.value]

    def _wrap(self, v: int) -> "FieldElem":
        return FieldElem(self.field, v)

    def _val(self, other) -> int:
        if isinstance(other, FieldElem):
            if other.field is not self.field:
                raise ValueError("elements of different fields")
            return other.value
        return self.field.from_int(int(other))

    def __add__(self, other):
        return self._wrap(self.field.add(self.value, self._val(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.field.sub(self.value, self._val(other)))

    def __rsub__(self, other):
        return self._wrap(self.field.sub(self._val(other), self.value))

    def __neg__(self):
        return self._wrap(self.field.neg(self.value))

    def __mul__(self, other):
        return self._wrap(self.field.mul(self.value, self._val(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.field.div(self.value, self._val(other)))

    def __pow__(self, k: int):
        return self._wrap(self.field.pow(self.value, k))

    def inverse(self) -> "FieldElem":
        return self._wrap(self.field.inv(self.value))

    def frobenius(self) -> "FieldElem":
        return self ** self.field.p

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"FieldElem({list(self.coeffs)})"


def field_arith(a: FieldElem, b: FieldElem | int | None, op: str) -> FieldElem:
    """Dispatch for add, sub, mul, inv, pow, frobenius."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inverse()
    if op == "pow":
        return a ** int(b)
    if op == "frobenius":
        return a.frobenius()
    raise ValueError(f"unknown op {op!r}")


# --- combinatorics -------------------------------------------------------

def base_digits(n: int, p: int) -> List[int]:
    out = []
    while n:
        out.append(n % p)
        n //= p
    return out


def digit_sum(n: int, p: int) -> int:
    return sum(base_digits(n, p))


def nu_p(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def binom_mod_p(n: int, k: int, p: int) -> int:
    """C(n, k) mod p via Lucas' digit-wise product."""
    if n < 0 or k < 0:
        raise ValueError("n, k must be non-negative")
    result = 1
    while n or k:
        ni, ki = n % p, k % p
        if ki > ni:
            return 0
        result = result * _small_binom(ni, ki) % p
        n //= p
        k //= p
    return result % p


@lru_cache(maxsize=None)
def _small_binom(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


def nu_p_factorial(n: int, p: int) -> int:
    """Exponent of p in n!, as (n - s_p(n)) / (p - 1)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return (n - digit_sum(n, p)) // (p - 1)


def nu_p_binom_prime_power(k: int, m: int, p: int) -> int:
    """Exponent of p in C(p^k, m) for 0 < m <= p^k, equal to k - nu_p(m)."""
    if not 0 < m <= p**k:
        raise ValueError(f"m must satisfy 0 < m <= p^k, got m={m}, p^k={p**k}")
    return k - nu_p(m, p)


# --- reduced interpolation ------------------------------------------------

MultiPoly = Dict[Tuple[int, ...], int]


def interpolate_1d(fld: GF, values: Sequence[int]) -> List[int]:
    """Coefficients c_0..c_{q-1} of the reduced polynomial with c(x) = values[x]."""
    q = fld.q
    if len(values) != q:
        raise ValueError("table must have q entries")
    pt = fld.power_table
    coeffs = [0] * q
    coeffs[0] = values[0]
    for e in range(1, q):
        s = 0
        k = q - 1 - e
        for a in range(q):
            v = values[a]
            if v:
                s = fld.add(s, fld.mul(v, pt[a][k]))
        coeffs[e] = fld.neg(s)
    return coeffs


def reduced_interpolate(fld: GF, table: Mapping[Tuple[int, ...], int], n: int) -> MultiPoly:
    """Unique polynomial of degree <= q-1 in each of n variables matching the table."""
    q = fld.q
    points = list(product(range(q), repeat=n))
    missing = [pt for pt in points if pt not in table]
    if missing:
        raise ValueError(f"table is incomplete: {len(missing)} of {len(points)} points missing")
    grid: Dict[Tuple[int, ...], int] = {pt: table[pt] for pt in points}
    # transform one axis at a time
    for axis in range(n):
        new: Dict[Tuple[int, ...], int] = {}
        others = list(product(range(q), repeat=n - 1))
        for rest in others:
            line = [grid[rest[:axis] + (x,) + rest[axis:]] for x in range(q)]
            for e, c in enumerate(interpolate_1d(fld, line)):
                new[rest[:axis] + (e,) + rest[axis:]] = c
        grid = new
    return {k: v for k, v in grid.items() if v}


def evaluate_poly(fld: GF, poly: Mapping[Tuple[int, ...], int], point: Sequence[int]) -> int:
    s = 0
    for exps, c in poly.items():
        t = c
        for x, e in zip(point, exps):
            t = fld.mul(t, fld.pow(x, e) if (x or e) else 1)
        s = fld.add(s, t)
    return s


def reduce_poly(fld: GF, poly: Mapping[Tuple[int, ...], int]) -> MultiPoly:
    """Reduce exponents using x^q = x (so every exponent lands in [0, q-1])."""
    q = fld.q
    out: MultiPoly = {}
    for exps, c in poly.items():
        red = tuple(e if e < q else (e - 1) % (q - 1) + 1 for e in exps)
        out[red] = fld.add(out.get(red, 0), c)
    return {k: v for k, v in out.items() if v}

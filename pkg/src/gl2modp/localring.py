"""Truncated rings of integers O_F / pi^N of a p-adic field with invariants (e, f).

The ring is modelled as ``R[pi] / (pi^e - p*u)`` where ``R`` is the unramified
ring ``(Z/p^M)[X] / (h~)``, ``h~`` the integer lift of the residue-field modulus
and ``M = ceil(N/e)``.  An element stores ``e`` coefficients in ``R`` together
with a precision ``prec <= N``: it is known modulo ``pi^prec``.  Coefficient
``a_i`` is reduced mod ``p^ceil((prec-i)/e)``, which makes the stored tuple a
canonical representative of the class.

Everything user-facing is phrased through Teichmueller digits: a class mod
``pi^prec`` is ``sum_i pi^i [mu_i]`` for unique ``mu_i`` in F_q.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from .gfq import GF, field, is_prime

RElem = Tuple[int, ...]  # f integers mod p^M, power basis of the unramified ring


@dataclass(frozen=True)
class LocalParams:
    p: int
    f: int = 1
    e: int = 1
    N: int = 4
    eisenstein_unit: int = 1  # pi^e = p * u

    def __post_init__(self) -> None:
        if self.p == 2 or not is_prime(self.p):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.f < 1 or self.e < 1:
            raise ValueError("e and f must be >= 1")
        if self.N < 1:
            raise ValueError("precision N must be >= 1")
        if self.eisenstein_unit % self.p == 0:
            raise ValueError("eisenstein_unit must be a p-adic unit")

    @property
    def q(self) -> int:
        return self.p ** self.f


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class LocalRing:
    """Arithmetic in O_F / pi^N.  Elements are :class:`LocalElem`."""

    def __init__(self, params: LocalParams):
        self.params = params
        p, f, e, N = params.p, params.f, params.e, params.N
        self.p, self.f, self.e, self.N, self.q = p, f, e, N, params.q
        self.gf: GF = field(p, f)
        self.M = _ceil_div(N, e)
        self.mod = p ** self.M
        self.h = tuple(self.gf.params.modulus)  # monic, low -> high
        self.u = params.eisenstein_unit % self.mod
        self.pu = p * self.u % self.mod
        self.u_inv = pow(params.eisenstein_unit, -1, self.mod)
        # moduli of coefficient i at precision P
        self._coef_mod = [
            tuple(p ** max(0, _ceil_div(P - i, e)) for i in range(e)) for P in range(N + 1)
        ]
        self._zero_r: RElem = (0,) * f
        self._teich = [self._teich_r(a) for a in range(self.q)]

    # -- unramified ring R ---------------------------------------------------
    def _radd(self, a: RElem, b: RElem) -> RElem:
        m = self.mod
        return tuple((x + y) % m for x, y in zip(a, b))

    def _rsub(self, a: RElem, b: RElem) -> RElem:
        m = self.mod
        return tuple((x - y) % m for x, y in zip(a, b))

    def _rscale(self, a: RElem, c: int) -> RElem:
        m = self.mod
        return tuple(x * c % m for x in a)

    def _rmul(self, a: RElem, b: RElem) -> RElem:
        f, m = self.f, self.mod
        if f == 1:
            return (a[0] * b[0] % m,)
        prod = [0] * (2 * f - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        h = self.h
        for k in range(2 * f - 2, f - 1, -1):
            c = prod[k]
            if c:
                for i in range(f):
                    prod[k - f + i] -= c * h[i]
        return tuple(x % m for x in prod[:f])

    def _rpow(self, a: RElem, k: int) -> RElem:
        out = (1,) + (0,) * (self.f - 1)
        while k:
            if k & 1:
                out = self._rmul(out, a)
            a = self._rmul(a, a)
            k >>= 1
        return out

    def _teich_r(self, a: int) -> RElem:
        lift = tuple(self.gf.digits[a])
        # x^(q^M) converges to the Teichmueller representative mod p^M
        return self._rpow(lift, self.q ** self.M)

    # -- construction ----------------------------------------------------------
    def _make(self, coeffs: Sequence[RElem], prec: int) -> "LocalElem":
        mods = self._coef_mod[prec]
        out = tuple(tuple(x % mi for x in c) for c, mi in zip(coeffs, mods))
        return LocalElem(self, out, prec)

    def zero(self, prec: Optional[int] = None) -> "LocalElem":
        return LocalElem(self, (self._zero_r,) * self.e, self.N if prec is None else prec)

    def one(self) -> "LocalElem":
        return self.from_int(1)

    def from_int(self, n: int, prec: Optional[int] = None) -> "LocalElem":
        c = [self._zero_r] * self.e
        c[0] = (n % self.mod,) + (0,) * (self.f - 1)
        return self._make(c, self.N if prec is None else prec)

    def teich(self, a: int, prec: Optional[int] = None) -> "LocalElem":
        """Teichmueller lift [a] of a field element code a."""
        c = [self._zero_r] * self.e
        c[0] = self._teich[a]
        return self._make(c, self.N if prec is None else prec)

    def pi_power(self, k: int, prec: Optional[int] = None) -> "LocalElem":
        P = self.N if prec is None else prec
        if k >= P:
            return self.zero(P)
        c = [self._zero_r] * self.e
        qk, rk = divmod(k, self.e)
        # pi^k = (p u)^qk pi^rk
        c[rk] = ((self.pu ** qk) % self.mod,) + (0,) * (self.f - 1)
        return self._make(c, P)

    def digit_build(self, digits: Sequence[int], prec: Optional[int] = None) -> "LocalElem":
        """sum_i pi^i [digits[i]]."""
        P = self.N if prec is None else prec
        acc = self.zero(P)
        pik = self.one().with_prec(P)
        pi = self.pi_power(1, P)
        for i, d in enumerate(digits):
            if i >= P:
                break
            if d:
                acc = acc + pik * self.teich(d, P)
            pik = pik * pi
        return acc

    # -- ring operations -----------------------------------------------------------
    def add(self, a: "LocalElem", b: "LocalElem") -> "LocalElem":
        return self._make([self._radd(x, y) for x, y in zip(a.coeffs, b.coeffs)], min(a.prec, b.prec))

    def sub(self, a: "LocalElem", b: "LocalElem") -> "LocalElem":
        return self._make([self._rsub(x, y) for x, y in zip(a.coeffs, b.coeffs)], min(a.prec, b.prec))

    def neg(self, a: "LocalElem") -> "LocalElem":
        return self._make([self._rscale(x, -1) for x in a.coeffs], a.prec)

    def mul(self, a: "LocalElem", b: "LocalElem") -> "LocalElem":
        e = self.e
        # a is known mod pi^prec_a, so ab is known mod pi^(prec_a + v(b))
        prec = min(a.prec + b.valuation(), b.prec + a.valuation(), self.N)
        if e == 1:
            return self._make([self._rmul(a.coeffs[0], b.coeffs[0])], prec)
        acc = [self._zero_r] * (2 * e - 1)
        for i, x in enumerate(a.coeffs):
            if any(x):
                for j, y in enumerate(b.coeffs):
                    if any(y):
                        acc[i + j] = self._radd(acc[i + j], self._rmul(x, y))
        for k in range(2 * e - 2, e - 1, -1):
            if any(acc[k]):
                acc[k - e] = self._radd(acc[k - e], self._rscale(acc[k], self.pu))
        return self._make(acc[:e], prec)

    def residue(self, a: "LocalElem") -> int:
        """Image in F_q (as a field code)."""
        if a.prec == 0:
            return 0
        return self.gf.encode([x % self.p for x in a.coeffs[0]])

    def valuation(self, a: "LocalElem") -> int:
        """pi-adic valuation, capped at the precision."""
        best = a.prec
        p, e = self.p, self.e
        for i, c in enumerate(a.coeffs):
            if i >= best:
                break
            if any(c):
                v = 0
                while all(x % p ** (v + 1) == 0 for x in c):
                    v += 1
                best = min(best, e * v + i)
        return best

    def div_pi(self, a: "LocalElem", k: int = 1) -> "LocalElem":
        """a / pi^k, defined when v(a) >= k; precision drops by k."""
        if k < 0:
            raise ValueError("k must be nonnegative")
        for _ in range(k):
            if a.prec == 0:
                raise ValueError("precision exhausted while dividing by pi")
            a0 = a.coeffs[0]
            if any(x % self.p for x in a0):
                raise ValueError("element is not divisible by pi")
            b = self._rscale(tuple(x // self.p for x in a0), self.u_inv)
            a = self._make(list(a.coeffs[1:]) + [b], a.prec - 1)
        return a

    def inv(self, a: "LocalElem") -> "LocalElem":
        r = self.residue(a)
        if r == 0:
            raise ZeroDivisionError("inverse of a non-unit in O_F/pi^N")
        y = self.teich(self.gf.inv(r), a.prec)
        two = self.from_int(2, a.prec)
        k = 1
        while k < a.prec:
            y = y * (two - a * y)
            k *= 2
        return y

    def divide(self, a: "LocalElem", b: "LocalElem") -> "LocalElem":
        """a / b when v(a) >= v(b); the quotient is only known to reduced precision."""
        k = b.valuation()
        if k >= b.prec:
            raise ZeroDivisionError("division by an element that is zero at this precision")
        if a.valuation() < k:
            raise ValueError("quotient is not integral")
        return self.div_pi(a, k) * self.inv(self.div_pi(b, k))

    # -- digits ----------------------------------------------------------------
    def digit_expand(self, a: "LocalElem") -> Tuple[int, ...]:
        out: List[int] = []
        x = a
        for _ in range(a.prec):
            mu = self.residue(x)
            out.append(mu)
            if x.prec == 1:
                break
            x = self.div_pi(x - self.teich(mu, x.prec))
        return tuple(out)

    def truncate(self, a: "LocalElem", n: int) -> "LocalElem":
        """[a]_n: keep the first n Teichmueller digits, at the precision of a."""
        if not 0 <= n <= a.prec:
            raise ValueError(f"truncation level {n} outside [0, {a.prec}]")
        if n == a.prec:
            return a
        d = self.digit_expand(a)[:n]
        return self.digit_build(d, a.prec)

    def __repr__(self) -> str:
        p = self.params
        return f"LocalRing(p={p.p}, f={p.f}, e={p.e}, N={p.N})"


@dataclass(frozen=True)
class LocalElem:
    ring: LocalRing
    coeffs: Tuple[RElem, ...]
    prec: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalElem):
            return NotImplemented
        if self.prec == other.prec:
            return self.coeffs == other.coeffs
        P = min(self.prec, other.prec)
        return self.with_prec(P).coeffs == other.with_prec(P).coeffs

    def __hash__(self) -> int:
        return hash((self.coeffs, self.prec))

    def with_prec(self, P: int) -> "LocalElem":
        if P > self.prec:
            # extending by zeros; used only for exact inputs such as 1 or [a]
            P = min(P, self.ring.N)
        return self.ring._make(self.coeffs, P)

    def _coerce(self, other) -> "LocalElem":
        if isinstance(other, LocalElem):
            return other
        if isinstance(other, int):
            return self.ring.from_int(other, self.prec)
        return NotImplemented

    def __add__(self, other):
        return self.ring.add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.ring.sub(self, self._coerce(other))

    def __rsub__(self, other):
        return self.ring.sub(self._coerce(other), self)

    def __neg__(self):
        return self.ring.neg(self)

    def __mul__(self, other):
        return self.ring.mul(self, self._coerce(other))

    __rmul__ = __mul__

    def valuation(self) -> int:
        return self.ring.valuation(self)

    def is_zero(self) -> bool:
        return self.valuation() >= self.prec

    def residue(self) -> int:
        return self.ring.residue(self)

    def digits(self) -> Tuple[int, ...]:
        return self.ring.digit_expand(self)

    def inverse(self) -> "LocalElem":
        return self.ring.inv(self)

    def __repr__(self) -> str:
        return f"LocalElem(digits={self.digits()}, prec={self.prec})"


@lru_cache(maxsize=None)
def local_ring(p: int, f: int = 1, e: int = 1, N: int = 4, u: int = 1) -> LocalRing:
    return LocalRing(LocalParams(p, f, e, N, u))


def local_arith(a: LocalElem, b: Optional[LocalElem], op: str) -> LocalElem:
    R = a.ring
    if op == "add":
        return R.add(a, b)
    if op == "sub":
        return R.sub(a, b)
    if op == "mul":
        return R.mul(a, b)
    if op == "inv":
        return R.inv(a)
    raise ValueError(f"unknown op {op!r}")


def digit_expand(x: LocalElem) -> Tuple[int, ...]:
    return x.ring.digit_expand(x)


def digit_build(ring: LocalRing, digits: Sequence[int]) -> LocalElem:
    return ring.digit_build(digits)


def truncate(x: LocalElem, n: int) -> LocalElem:
    return x.ring.truncate(x, n)


def carry_P0(a: int, b: int, p: int, f: int = 1, e: int = 1, u: int = 1) -> int:
    """The c with [a] + [b] = [a+b] + pi^e [c] mod pi^(e+1)."""
    R = local_ring(p, f, e, e + 1, u)
    diff = R.teich(a) + R.teich(b) - R.teich(R.gf.add(a, b))
    d = R.digit_expand(diff)
    if any(d[:e]):
        raise ArithmeticError("Teichmueller sum has a carry below position e")
    return d[e]


@dataclass(frozen=True)
class Mat2Local:
    """pi^pi_power * (a b; c d) with entries in O_F / pi^N."""
    a: LocalElem
    b: LocalElem
    c: LocalElem
    d: LocalElem
    pi_power: int = 0

    @property
    def ring(self) -> LocalRing:
        return self.a.ring

    def __matmul__(self, o: "Mat2Local") -> "Mat2Local":
        return Mat2Local(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
            self.pi_power + o.pi_power,
        )

    def det(self) -> LocalElem:
        return self.a * self.d - self.b * self.c

    def entries(self) -> Tuple[LocalElem, LocalElem, LocalElem, LocalElem]:
        return self.a, self.b, self.c, self.d

    def mod_pi(self) -> Tuple[int, int, int, int]:
        return tuple(x.residue() for x in self.entries())  # type: ignore[return-value]

    @classmethod
    def from_ints(cls, ring: LocalRing, a: int, b: int, c: int, d: int, pi_power: int = 0) -> "Mat2Local":
        f = ring.from_int
        return cls(f(a), f(b), f(c), f(d), pi_power)

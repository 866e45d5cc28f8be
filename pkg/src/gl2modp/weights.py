"""Serre weights, the symmetric-power action and weight-set combinatorics.

A weight ``det^w (x) Sym^{r_0} (x) Sym^{r_1}^{Frob} (x) ...`` of GL_2(F_q) is a
:class:`SerreWeight`.  Vectors in it are numpy arrays indexed by multi-indices
``i = (i_0, ..., i_{f-1})`` in product order (digit 0 most significant), the
entry at ``i`` being the coefficient of ``(x) x_j^{r_j - i_j} y_j^{i_j}``.

Weight-set bookkeeping works digit by digit: a :class:`DigitWeight` carries
``(r_j, w_j)`` for every j and the reflection operators ``A_j`` act on it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import comb
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .gfq import GF, base_digits


@dataclass(frozen=True)
class SerreWeight:
    p: int
    r_vec: Tuple[int, ...]
    w: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "r_vec", tuple(int(x) for x in self.r_vec))
        if not self.r_vec:
            raise ValueError("r_vec must be nonempty")
        if any(not 0 <= r <= self.p - 1 for r in self.r_vec):
            raise ValueError(f"digits of r_vec must lie in [0, {self.p - 1}]: {self.r_vec}")
        object.__setattr__(self, "w", int(self.w) % (self.q - 1))

    @property
    def f(self) -> int:
        return len(self.r_vec)

    @property
    def q(self) -> int:
        return self.p ** len(self.r_vec)

    @property
    def r(self) -> int:
        return sum(rj * self.p ** j for j, rj in enumerate(self.r_vec))

    @property
    def dim(self) -> int:
        out = 1
        for rj in self.r_vec:
            out *= rj + 1
        return out

    @property
    def is_regular(self) -> bool:
        return all(1 <= rj <= self.p - 2 for rj in self.r_vec)

    def indices(self) -> List[Tuple[int, ...]]:
        return list(product(*(range(rj + 1) for rj in self.r_vec)))

    def index_of(self, i_vec: Sequence[int]) -> int:
        k = 0
        for ij, rj in zip(i_vec, self.r_vec):
            k = k * (rj + 1) + ij
        return k

    def highest_char(self) -> "ICharacter":
        """Character of the torus on the line of (x) x_j^{r_j}."""
        return ICharacter(self.q, self.r + self.w, self.w)

    def with_label(self, label) -> "LabeledWeight":
        return LabeledWeight(label, self, None)

    def as_dict(self) -> dict:
        return {"r_vec": list(self.r_vec), "w": self.w, "r": self.r}


@dataclass(frozen=True)
class ICharacter:
    """diag(a, d) -> a^alpha d^beta, exponents mod q - 1."""

    q: int
    alpha: int
    beta: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", self.alpha % (self.q - 1))
        object.__setattr__(self, "beta", self.beta % (self.q - 1))

    def value(self, fld: GF, a: int, d: int) -> int:
        return fld.mul(fld.pow(a, self.alpha), fld.pow(d, self.beta))

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}


# --- the symmetric power action ---------------------------------------------

def _sym_digit_matrix(fld: GF, r: int, a: int, b: int, c: int, d: int) -> np.ndarray:
    """Matrix of (x, y) -> (a x + c y, b x + d y) on Sym^r, columns = inputs."""
    p = fld.p
    M = np.zeros((r + 1, r + 1), dtype=np.int64)
    pt = fld.power_table if fld.q <= 4096 else None

    def pw(z: int, k: int) -> int:
        return pt[z][k] if pt is not None and k < fld.q else fld.pow(z, k)

    for i in range(r + 1):
        # (a x + c y)^(r-i) (b x + d y)^i, coefficient of x^(r-k) y^k
        for s in range(r - i + 1):  # y-degree from the first factor
            c1 = fld.mul(comb(r - i, s) % p, fld.mul(pw(a, r - i - s), pw(c, s)))
            if not c1:
                continue
            for t in range(i + 1):
                c2 = fld.mul(comb(i, t) % p, fld.mul(pw(b, i - t), pw(d, t)))
                if c2:
                    M[s + t, i] = fld.add(int(M[s + t, i]), fld.mul(c1, c2))
    return M


def sym_matrix(fld: GF, weight: SerreWeight, g: Sequence[int]) -> np.ndarray:
    """Matrix of sigma(g) for g = (a, b, c, d) in GL_2(F_q), acting on columns."""
    a, b, c, d = (int(x) for x in g)
    det = fld.sub(fld.mul(a, d), fld.mul(b, c))
    if det == 0:
        raise ValueError("sym_matrix: singular matrix")
    lin = _linalg(fld)
    out = np.ones((1, 1), dtype=np.int64)
    for j, rj in enumerate(weight.r_vec):
        fr = [fld.frob_power(z, j) for z in (a, b, c, d)]
        out = lin.kron(out, _sym_digit_matrix(fld, rj, *fr))
    tw = fld.pow(det, weight.w)
    return lin.scale(tw, out)


@lru_cache(maxsize=None)
def _linalg(fld: GF):
    from .linalg import FqLinalg

    return FqLinalg(fld)


def sym_act(fld: GF, g: Sequence[int], v: np.ndarray, weight: SerreWeight) -> np.ndarray:
    return _linalg(fld).matvec(sym_matrix(fld, weight, g), np.asarray(v, dtype=np.int64))


def basis_vector(weight: SerreWeight, i_vec: Sequence[int], coeff: int = 1) -> np.ndarray:
    v = np.zeros(weight.dim, dtype=np.int64)
    v[weight.index_of(i_vec)] = coeff
    return v


def highest_vector(weight: SerreWeight) -> np.ndarray:
    """(x) x_j^{r_j}."""
    return basis_vector(weight, (0,) * weight.f)


def lowest_vector(weight: SerreWeight) -> np.ndarray:
    """(x) y_j^{r_j}."""
    return basis_vector(weight, weight.r_vec)


# --- characters -----------------------------------------------------------

def char_of_element(kind: str, k, weight: SerreWeight) -> ICharacter:
    """Torus character of s_n^k, t_n^k (k a digit index) or t_n^{k_vec}.

    All three have the shape a^{r-2k} (ad)^k twisted by det^w.
    """
    p, q, f = weight.p, weight.q, weight.f
    if kind == "s":
        if not 0 <= k <= q - 1:
            raise ValueError(f"s_n^k needs 0 <= k <= q-1, got {k}")
        kk = k
    elif kind == "t":
        if not 0 <= k < f or weight.r_vec[k] < 1:
            raise ValueError(f"t_n^k needs 0 <= k < f with r_k >= 1, got {k}")
        kk = p ** k
    elif kind == "t_vec":
        kv = tuple(k)
        if len(kv) != f or any(not 0 <= kj <= rj for kj, rj in zip(kv, weight.r_vec)):
            raise ValueError(f"t_n^k needs 0 <= k_j <= r_j, got {kv}")
        kk = sum(kj * p ** j for j, kj in enumerate(kv))
    else:
        raise ValueError(f"unknown element kind {kind!r}")
    return ICharacter(q, weight.r - kk + weight.w, kk + weight.w)


class IrregularCharacter(ValueError):
    """The character does not determine a unique weight."""


def weight_from_char(chi: ICharacter, p: int) -> SerreWeight:
    q = chi.q
    f = 0
    while p ** f < q:
        f += 1
    r = (chi.alpha - chi.beta) % (q - 1)
    digits = base_digits(r, p)[:f]
    digits += [0] * (f - len(digits))
    if any(not 1 <= dj <= p - 2 for dj in digits):
        raise IrregularCharacter(
            f"character {chi} has r = {r} with digits {digits} outside [1, p-2]; the weight is ambiguous"
        )
    return SerreWeight(p, tuple(digits), chi.beta)


# --- reflection operators and weight sets --------------------------------

def _digits_mod(r: int, p: int, f: int) -> List[int]:
    r %= p ** f - 1
    d = base_digits(r, p)[:f]
    return d + [0] * (f - len(d))


def apply_A(j: int, r: int, p: int, f: int) -> int:
    """r - 2 (r_j + 1) p^j mod q-1, reading r_j from the current value of r."""
    if not 0 <= j < f:
        raise ValueError(f"digit index {j} outside [0, {f - 1}]")
    q1 = p ** f - 1
    rj = _digits_mod(r, p, f)[j]
    return (r - 2 * (rj + 1) * p ** j) % q1


def evaluate_schedule(schedule: Sequence[int], r: int, p: int, f: int) -> int:
    for j in schedule:
        r = apply_A(j, r, p, f)
    return r


@dataclass(frozen=True)
class DigitWeight:
    """Per-digit data (r_j, w_j); the weight is (x)_j det^{w_j p^j} Sym^{r_j}."""

    p: int
    r: Tuple[int, ...]
    w: Tuple[int, ...]

    @classmethod
    def from_seed(cls, seed: SerreWeight) -> "DigitWeight":
        w = [0] * seed.f
        w[0] = seed.w
        return cls(seed.p, seed.r_vec, tuple(w))

    @property
    def f(self) -> int:
        return len(self.r)

    def apply_A(self, j: int) -> "DigitWeight":
        f, p = self.f, self.p
        r, w = list(self.r), list(self.w)
        rj = r[j]
        r[j] = p - rj - 2
        w[j] += rj + 1
        r[(j + 1) % f] -= 1  # the borrow; p^f wraps to p^0
        if any(not 0 <= x <= p - 1 for x in r):
            raise ValueError(f"A_{j} leaves the digit range at {self.r}")
        return DigitWeight(p, tuple(r), tuple(w))

    def run(self, schedule: Iterable[int]) -> List["DigitWeight"]:
        out, cur = [], self
        for j in schedule:
            cur = cur.apply_A(j)
            out.append(cur)
        return out

    def to_weight(self) -> SerreWeight:
        return SerreWeight(self.p, self.r, sum(wj * self.p ** j for j, wj in enumerate(self.w)))

    def table_tuple(self) -> Tuple[int, ...]:
        """(r_0, w_0, r_1, w_1, ...)."""
        out: List[int] = []
        for rj, wj in zip(self.r, self.w):
            out += [rj, wj]
        return tuple(out)


def _ind(J: FrozenSet[int], x: int) -> int:
    return 1 if x in J else 0


def r_J_wJ(J: Iterable[int], seed: SerreWeight) -> Tuple[int, int]:
    """The closed-form parameter and twist of the weight labeled J.

    The indicator I_J(j+1) is read with j+1 taken mod f.
    """
    J = frozenset(J)
    p, f = seed.p, seed.f
    q1 = p ** f - 1
    rv = seed.r_vec
    rJ = 0
    for j in range(f):
        if j in J:
            sign = (-1) ** (_ind(J, (j + 1) % f) + (1 if j == f - 1 else 0))
            rJ += (p - rv[j] - 2) * p ** j + sign * p ** (j + 1)
        else:
            rJ += rv[j] * p ** j
    wJ = sum((rv[j] + 1) * p ** j - p ** (j + 1) for j in J)
    wJ += _ind(J, f - 1) * (1 - _ind(J, 0))
    return rJ % q1, (wJ + seed.w) % q1


def schedule_aJ(J: Iterable[int], f: int) -> Tuple[int, ...]:
    """Letters of a_J, first-acting letter first."""
    J = frozenset(J)
    if not J:
        return ()
    desc = tuple(sorted(J, reverse=True))
    if 0 not in J and (f - 1) in J:
        a = min(J)
        outer = tuple(j for j in range(f) if j not in J and j > a)
    else:
        outer = tuple(j for j in range(f) if j not in J)
    return outer + desc + outer


def subsets(f: int) -> List[Tuple[int, ...]]:
    """All subsets of {0..f-1}, by size then lexicographically."""
    out = []
    for mask in range(2 ** f):
        out.append(tuple(j for j in range(f) if mask >> j & 1))
    return sorted(out, key=lambda s: (len(s), s))


@dataclass(frozen=True)
class LabeledWeight:
    label: tuple
    weight: SerreWeight
    digits: Optional[DigitWeight] = None

    def as_dict(self) -> dict:
        d = {"label": _label_str(self.label)}
        d.update(self.weight.as_dict())
        if self.digits is not None:
            d["digits"] = list(self.digits.table_tuple())
        return d


def _label_str(label) -> str:
    if len(label) == 2 and isinstance(label[1], tuple) and isinstance(label[0], tuple):
        J, delta = label
        return "{" + ",".join(map(str, J)) + "}" + f"({','.join(map(str, delta))})"
    return "{" + ",".join(map(str, label)) + "}"


def ramified_digits(J: Sequence[int], delta: Tuple[int, int], r_vec: Sequence[int], p: int, e: int) -> DigitWeight:
    """The displayed weights for f = 2 with ramification e, as digit data."""
    J = frozenset(J)
    r0, r1 = r_vec
    d0, d1 = delta
    if not J:
        rows = (r0 - 2 * d0, d0, r1 - 2 * d1, d1)
    elif J == {1}:
        rows = (r0 - 2 * d0 - 1, d0, p - r1 + 2 * e - 2 * d1 - 4, r1 - e + d1 + 2)
    elif J == {0, 1}:
        rows = (p - r0 + 2 * e - 2 * d0 - 3, r0 - e + d0 + 1, p - r1 + 2 * e - 2 * d1 - 5, r1 - e + d1 + 2)
    elif J == {0}:
        rows = (p - r0 + 2 * e - 2 * d0 - 4, r0 - e + d0 + 1, r1 - 2 * d1 + 1, p + d1 - 1)
    else:
        raise ValueError(f"bad label {sorted(J)}")
    return DigitWeight(p, (rows[0], rows[2]), (rows[1], rows[3]))


def weight_set(seed: SerreWeight, e: int = 1, f: Optional[int] = None) -> List[LabeledWeight]:
    """Labeled weight set attached to a seed weight.

    e = 1: 2^f weights labeled by J, with r_J from the closed form and digit data
    from running a_J on the seed.  For f = 1 the reflection string does not
    apply (the borrow lands on the reflected digit itself) and the closed form
    gives the pair Sym^r, Sym^{p-1-r} (x) det^r directly.  f = 2, e > 1: the 4 e^2 displayed weights
    labeled by (J, (delta_0, delta_1)).
    """
    f = seed.f if f is None else f
    if f != seed.f:
        raise ValueError("seed weight has the wrong number of digits")
    p = seed.p
    if e == 1 and f == 1:
        out = []
        for J in subsets(1):
            rJ, wJ = r_J_wJ(J, seed)
            dw = DigitWeight(p, (rJ,), (wJ,))
            out.append(LabeledWeight(J, dw.to_weight(), dw))
        return out
    if e == 1:
        out = []
        for J in subsets(f):
            rJ, _ = r_J_wJ(J, seed)
            dw = DigitWeight.from_seed(seed)
            for j in schedule_aJ(J, f):
                dw = dw.apply_A(j)
            wt = dw.to_weight()
            if wt.r != rJ:
                raise ArithmeticError(f"schedule for J={J} gives {wt.r}, closed form gives {rJ}")
            out.append(LabeledWeight(J, wt, dw))
        return out
    if f == 2:
        if not e < min(seed.r_vec) / 2:
            raise ValueError(f"need e < min(r_j)/2, got e={e}, r={seed.r_vec}")
        out = []
        for J in ((), (1,), (0, 1), (0,)):
            for delta in product(range(e), repeat=2):
                dw = ramified_digits(J, delta, seed.r_vec, p, e)
                dw = DigitWeight(p, dw.r, (dw.w[0] + seed.w, dw.w[1]))
                out.append(LabeledWeight((J, delta), dw.to_weight(), dw))
        return out
    raise ValueError(f"weight_set supports e = 1, or f = 2; got e={e}, f={f}")


def coset_reps_K_mod_I(fld: GF) -> List[Tuple[int, int, int, int]]:
    """GL_2(F_q) / B: w and (1 0; lambda 1)."""
    return [(0, 1, 1, 0)] + [(1, 0, lam, 1) for lam in fld.elements()]

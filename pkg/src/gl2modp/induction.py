"""The Bruhat-Tits tree model of ind_{KZ}^G sigma.

Vertices of the tree are the cosets g KZ with representatives

    g^0_{n,mu} = (pi^n  [mu]_n ; 0  1)           side 0, radius n
    g^1_{n,mu} = (1  0 ; pi [mu]_n  pi^{n+1})    side 1, radius n

and an element of the induced representation is a finitely supported map from
vertices to vectors of sigma.  The group acts by left translation of cosets:
``h . (g (x) v) = g' (x) sigma(k) v`` where ``h g = g' k z``.

Dense work happens on a :class:`Region` (all vertices of side s up to radius
n_s), where vectors are arrays of shape (num_vertices, dim sigma).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from math import comb
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .gfq import GF
from .linalg import FqLinalg
from .localring import LocalElem, LocalRing, Mat2Local, local_ring
from .weights import SerreWeight, sym_matrix

DTYPE = np.int64


class PrecisionError(ArithmeticError):
    """The working precision is too small for the requested tree computation."""


@dataclass(frozen=True, order=True)
class TreeVertex:
    side: int
    n: int
    mu: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.side not in (0, 1):
            raise ValueError("side must be 0 or 1")
        if len(self.mu) != self.n:
            raise ValueError(f"radius {self.n} needs {self.n} digits, got {self.mu}")

    def sort_key(self) -> tuple:
        return (self.n, self.side, self.mu)

    def parent(self) -> "TreeVertex":
        if self.n == 0:
            raise ValueError("radius-0 vertices have no parent on their side")
        return TreeVertex(self.side, self.n - 1, self.mu[:-1])

    def child(self, lam: int) -> "TreeVertex":
        return TreeVertex(self.side, self.n + 1, self.mu + (lam,))

    def as_dict(self) -> dict:
        return {"side": self.side, "n": self.n, "mu": list(self.mu)}


ID_VERTEX = TreeVertex(0, 0, ())
ALPHA_VERTEX = TreeVertex(1, 0, ())


@dataclass(frozen=True)
class CosetForm:
    vertex: TreeVertex
    k_bar: Tuple[int, int, int, int]  # the KZ part reduced mod pi
    pi_power: int


class InducedElement:
    """A finitely supported map TreeVertex -> sigma (coefficient vectors)."""

    __slots__ = ("model", "values")

    def __init__(self, model: "TreeModel", values: Optional[Dict[TreeVertex, np.ndarray]] = None):
        self.model = model
        self.values: Dict[TreeVertex, np.ndarray] = {}
        if values:
            for v, vec in values.items():
                vec = np.asarray(vec, dtype=DTYPE)
                if np.any(vec):
                    self.values[v] = vec

    # -- container behaviour ---------------------------------------------------
    def __getitem__(self, v: TreeVertex) -> np.ndarray:
        return self.values.get(v, np.zeros(self.model.dim, dtype=DTYPE))

    def items(self):
        return self.values.items()

    def support(self) -> List[TreeVertex]:
        return sorted(self.values, key=TreeVertex.sort_key)

    def radius(self) -> int:
        return max((v.n for v in self.values), default=-1)

    def side_radii(self) -> Tuple[int, int]:
        out = [-1, -1]
        for v in self.values:
            out[v.side] = max(out[v.side], v.n)
        return out[0], out[1]

    def is_zero(self) -> bool:
        return not self.values

    # -- vector space ------------------------------------------------------------
    def _combine(self, other: "InducedElement", sign: int) -> "InducedElement":
        lin = self.model.lin
        out = dict(self.values)
        for v, vec in other.values.items():
            if v in out:
                out[v] = lin.add(out[v], vec) if sign > 0 else lin.sub(out[v], vec)
            else:
                out[v] = vec if sign > 0 else lin.neg(vec)
        return InducedElement(self.model, out)

    def __add__(self, other: "InducedElement") -> "InducedElement":
        return self._combine(other, 1)

    def __sub__(self, other: "InducedElement") -> "InducedElement":
        return self._combine(other, -1)

    def __neg__(self) -> "InducedElement":
        return InducedElement(self.model, {v: self.model.lin.neg(x) for v, x in self.values.items()})

    def scale(self, c: int) -> "InducedElement":
        lin = self.model.lin
        return InducedElement(self.model, {v: lin.mul(x, c) for v, x in self.values.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, InducedElement):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):  # mutable-looking container; identity hash only
        return id(self)

    def __repr__(self) -> str:
        return f"InducedElement(support={len(self.values)}, radius={self.radius()})"

    def to_records(self) -> List[dict]:
        """Deterministic serialization: radius, side, digits, then multi-index."""
        idx = self.model.weight.indices()
        recs = []
        for v in self.support():
            vec = self.values[v]
            coeffs = [
                {"i": list(iv), "c": self.model.gf.digits[int(c)] if self.model.gf.m > 1 else int(c)}
                for iv, c in zip(idx, vec)
                if c
            ]
            recs.append({"side": v.side, "n": v.n, "mu_digits": list(v.mu), "coeffs": coeffs})
        return recs


# ---------------------------------------------------------------------------
# regions and dense vectors


class Region:
    """All vertices of side 0 up to radius n0 and of side 1 up to radius n1.

    Vertex order: radius, then side, then digits read as a base-q number with
    the first digit most significant.  A side with radius -1 is empty.
    """

    def __init__(self, q: int, n0: int, n1: int):
        if max(n0, n1) >= 1 and min(n0, n1) < 0:
            # T(Id) and T(alpha) reach across; a one-sided region cannot hold them
            raise ValueError(f"region ({n0}, {n1}) needs both radius-0 vertices")
        self.q, self.n0, self.n1 = q, n0, n1
        self.offsets: Dict[Tuple[int, int], int] = {}
        off = 0
        for n in range(max(n0, n1) + 1):
            for s in (0, 1):
                if n <= (n0, n1)[s]:
                    self.offsets[(s, n)] = off
                    off += q ** n
        self.size = off

    @classmethod
    def ball(cls, q: int, R: int) -> "Region":
        """Vertices within tree distance R of the identity vertex."""
        return cls(q, R, R - 1)

    @classmethod
    def sphere_union(cls, q: int, n: int) -> "Region":
        """B_n: both sides up to radius n."""
        return cls(q, n, n)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n0, self.n1

    def radius(self, side: int) -> int:
        return (self.n0, self.n1)[side]

    def contains(self, v: TreeVertex) -> bool:
        return v.n <= self.radius(v.side)

    def index(self, v: TreeVertex) -> int:
        k = 0
        for d in v.mu:
            k = k * self.q + d
        return self.offsets[(v.side, v.n)] + k

    def slice(self, side: int, n: int) -> slice:
        o = self.offsets[(side, n)]
        return slice(o, o + self.q ** n)

    def vertices(self) -> List[TreeVertex]:
        out = []
        for (s, n), _ in sorted(self.offsets.items(), key=lambda kv: kv[1]):
            for mu in product(range(self.q), repeat=n):
                out.append(TreeVertex(s, n, mu))
        return out

    def levels(self) -> List[Tuple[int, int]]:
        return sorted(self.offsets, key=lambda sn: self.offsets[sn])

    def __eq__(self, other) -> bool:
        return isinstance(other, Region) and (self.q, self.n0, self.n1) == (other.q, other.n0, other.n1)

    def __hash__(self) -> int:
        return hash((self.q, self.n0, self.n1))

    def __repr__(self) -> str:
        return f"Region(q={self.q}, n0={self.n0}, n1={self.n1})"


# ---------------------------------------------------------------------------
# the model


class TreeModel:
    """ind_{KZ}^G sigma for F with invariants (p, f, e) and a Serre weight sigma.

    ``radius`` is the largest tree radius the model is expected to handle; the
    local ring carries enough pi-adic digits for normal forms up to it.
    """

    def __init__(self, weight: SerreWeight, e: int = 1, radius: int = 2, u: int = 1, precision: Optional[int] = None):
        self.weight = weight
        self.p, self.f, self.e = weight.p, weight.f, e
        self.q = weight.q
        self.radius_budget = radius
        self.N = precision if precision is not None else radius + 4
        self.ring: LocalRing = local_ring(self.p, self.f, e, self.N, u)
        self.gf: GF = self.ring.gf
        self.lin = FqLinalg(self.gf)
        self.dim = weight.dim
        self._nf_cache: Dict[Tuple[Mat2Local, TreeVertex], CosetForm] = {}
        self._sym_cache: Dict[Tuple[int, int, int, int], np.ndarray] = {}
        self._vmat_cache: Dict[TreeVertex, Mat2Local] = {}
        self._teich_build_cache: Dict[Tuple[int, ...], LocalElem] = {}
        self._torus: Dict[Mat2Local, Tuple[int, int]] = {}

    def __repr__(self) -> str:
        return f"TreeModel(p={self.p}, f={self.f}, e={self.e}, r={self.weight.r_vec}, w={self.weight.w})"

    # -- elements -------------------------------------------------------------
    def element(self, values: Optional[Dict[TreeVertex, np.ndarray]] = None) -> InducedElement:
        return InducedElement(self, values)

    def zero(self) -> InducedElement:
        return InducedElement(self)

    def vector(self, i_vec: Sequence[int], coeff: int = 1) -> np.ndarray:
        v = np.zeros(self.dim, dtype=DTYPE)
        v[self.weight.index_of(i_vec)] = coeff
        return v

    @cached_property
    def x_top(self) -> np.ndarray:
        """(x) x_j^{r_j}"""
        return self.vector((0,) * self.f)

    @cached_property
    def y_top(self) -> np.ndarray:
        """(x) y_j^{r_j}"""
        return self.vector(self.weight.r_vec)

    def at(self, v: TreeVertex, vec: np.ndarray) -> InducedElement:
        return InducedElement(self, {v: vec})

    # -- group elements ----------------------------------------------------------
    def teich_digits(self, digits: Sequence[int]) -> LocalElem:
        key = tuple(digits)
        hit = self._teich_build_cache.get(key)
        if hit is None:
            hit = self.ring.digit_build(key)
            self._teich_build_cache[key] = hit
        return hit

    def mat(self, a, b, c, d, pi_power: int = 0) -> Mat2Local:
        R = self.ring

        def conv(x):
            return R.from_int(x) if isinstance(x, int) else x

        return Mat2Local(conv(a), conv(b), conv(c), conv(d), pi_power)

    def identity(self) -> Mat2Local:
        return self.mat(1, 0, 0, 1)

    def alpha(self) -> Mat2Local:
        return self.mat(1, 0, 0, self.ring.pi_power(1))

    def beta(self) -> Mat2Local:
        return self.mat(0, 1, self.ring.pi_power(1), 0)

    def w(self) -> Mat2Local:
        return self.mat(0, 1, 1, 0)

    def w_lambda(self, lam: int) -> Mat2Local:
        return self.mat(0, 1, 1, -self.ring.teich(lam))

    def lower(self, lam: int) -> Mat2Local:
        """(1 0; [lam] 1)."""
        return self.mat(1, 0, self.ring.teich(lam), 1)

    def diag(self, a: int, d: int) -> Mat2Local:
        """diag([a], [d])."""
        g = self.mat(self.ring.teich(a), 0, 0, self.ring.teich(d))
        self._torus[g] = (a, d)
        return g

    def teich_matrix(self, k: Sequence[int]) -> Mat2Local:
        """Entrywise Teichmueller lift of a matrix over F_q."""
        t = self.ring.teich
        return self.mat(t(k[0]), t(k[1]), t(k[2]), t(k[3]))

    def delta_b(self, b: LocalElem) -> Mat2Local:
        return self.mat(1, b, 0, 1)

    def delta_c(self, c: LocalElem) -> Mat2Local:
        """(1 0; pi c 1)."""
        return self.mat(1, 0, self.ring.pi_power(1) * c, 1)

    def delta_a(self, a: LocalElem) -> Mat2Local:
        """(pi a + 1  0; 0 1)."""
        return self.mat(self.ring.pi_power(1) * a + 1, 0, 0, 1)

    def g0(self, n: int, mu: Sequence[int]) -> Mat2Local:
        return self.mat(self.ring.pi_power(n), self.teich_digits(mu), 0, 1)

    def g1(self, n: int, mu: Sequence[int]) -> Mat2Local:
        pi = self.ring.pi_power(1)
        return self.mat(1, 0, pi * self.teich_digits(mu), self.ring.pi_power(n + 1))

    def vertex_matrix(self, v: TreeVertex) -> Mat2Local:
        hit = self._vmat_cache.get(v)
        if hit is None:
            hit = self.g0(v.n, v.mu) if v.side == 0 else self.g1(v.n, v.mu)
            self._vmat_cache[v] = hit
        return hit

    def random_K(self, rng) -> Mat2Local:
        """A random element of K = GL_2(O_F) (digits drawn uniformly)."""
        q, N = self.q, self.N
        while True:
            ents = [self.ring.digit_build([int(rng.integers(q)) for _ in range(N)]) for _ in range(4)]
            M = Mat2Local(*ents)
            if M.det().residue() != 0:
                return M

    def random_local(self, rng, prec: Optional[int] = None) -> LocalElem:
        return self.ring.digit_build([int(rng.integers(self.q)) for _ in range(prec or self.N)])

    # -- coset normal form ---------------------------------------------------------
    def _side0_position(self, a, b, c, d, D: int) -> Optional[Tuple[int, Tuple[int, ...]]]:
        """(n, digits of mu) if (a b; c d) lies in g^0_{n,mu} KZ, else None."""
        vc, vd = c.valuation(), d.valuation()
        t = min(vc, vd)
        if vd <= vc:
            if b.valuation() < vd:
                return None
            num, den = b, d
        else:
            if a.valuation() < vc:
                return None
            num, den = a, c
        n = D - 2 * t
        if n < 0:
            return None
        if n == 0:
            return 0, ()
        quo = self.ring.divide(num, den)
        if quo.prec < n:
            raise PrecisionError(f"need {n} digits of a quotient known to {quo.prec}")
        return n, self.ring.digit_expand(quo)[:n]

    def coset_normal_form(self, M: Mat2Local) -> CosetForm:
        a, b, c, d = M.entries()
        det = M.det()
        D = det.valuation()
        prec = min(x.prec for x in (a, b, c, d))
        if D + 2 > prec or D >= det.prec:
            raise PrecisionError(f"determinant valuation {D} too close to working precision {prec}")
        pos = self._side0_position(a, b, c, d, D)
        if pos is not None:
            side, (n, mu) = 0, pos
        else:
            pi = self.ring.pi_power(1)
            pos = self._side0_position(c, d, pi * a, pi * b, D + 1)
            if pos is None:
                raise ArithmeticError("matrix lies on neither side of the tree")
            side, (n, mu) = 1, pos
        k_bar, t = self._k_part(side, n, mu, a, b, c, d, D)
        return CosetForm(TreeVertex(side, n, tuple(mu)), k_bar, t + M.pi_power)

    def _k_part(self, side, n, mu, a, b, c, d, D):
        R = self.ring
        m = self.teich_digits(mu) if n else R.zero()
        if side == 0:
            t = (D - n) // 2
            s = n + t
            ent = (R.div_pi(a - m * c, s), R.div_pi(b - m * d, s), R.div_pi(c, t), R.div_pi(d, t))
        else:
            t = (D - n - 1) // 2
            s = n + 1 + t
            pm = R.pi_power(1) * m
            ent = (R.div_pi(a, t), R.div_pi(b, t), R.div_pi(c - pm * a, s), R.div_pi(d - pm * b, s))
        if any(x.prec < 1 for x in ent):
            raise PrecisionError("KZ part not determined mod pi")
        k = tuple(x.residue() for x in ent)
        gf = self.gf
        if gf.sub(gf.mul(k[0], k[3]), gf.mul(k[1], k[2])) == 0:
            raise ArithmeticError("normal form produced a singular KZ part")
        return k, t

    def normal_form_at(self, g: Mat2Local, v: TreeVertex) -> CosetForm:
        key = (g, v)
        hit = self._nf_cache.get(key)
        if hit is None:
            tor = self._torus.get(g)
            if tor is not None:
                # [x][mu_i] = [x mu_i], so the torus moves Teichmueller digits one by one
                a, d = tor
                gf = self.gf
                ratio = gf.div(a, d) if v.side == 0 else gf.div(d, a)
                mu = tuple(gf.mul(ratio, m) for m in v.mu)
                hit = CosetForm(TreeVertex(v.side, v.n, mu), (a, 0, 0, d), 0)
            else:
                hit = self.coset_normal_form(g @ self.vertex_matrix(v))
            self._nf_cache[key] = hit
        return hit

    def sym(self, k_bar: Tuple[int, int, int, int]) -> np.ndarray:
        hit = self._sym_cache.get(k_bar)
        if hit is None:
            hit = sym_matrix(self.gf, self.weight, k_bar)
            self._sym_cache[k_bar] = hit
        return hit

    # -- the action --------------------------------------------------------------
    def act(self, g: Mat2Local, x: InducedElement) -> InducedElement:
        lin = self.lin
        out: Dict[TreeVertex, np.ndarray] = {}
        for v, vec in x.items():
            cf = self.normal_form_at(g, v)
            img = lin.matvec(self.sym(cf.k_bar), vec)
            if cf.vertex in out:
                out[cf.vertex] = lin.add(out[cf.vertex], img)
            else:
                out[cf.vertex] = img
        return InducedElement(self, out)

    # -- Hecke operator ------------------------------------------------------------
    @cached_property
    def _e_set(self) -> List[int]:
        """Exponent sum_j i_j p^j for each basis index, in basis order."""
        p = self.p
        return [sum(ij * p ** j for j, ij in enumerate(iv)) for iv in self.weight.indices()]

    @cached_property
    def _neg_pow(self) -> np.ndarray:
        """(-lam)^{i(idx)} as a q x dim array (0^0 = 1)."""
        gf = self.gf
        out = np.zeros((self.q, self.dim), dtype=DTYPE)
        for lam in range(self.q):
            nl = gf.neg(lam)
            for k, ex in enumerate(self._e_set):
                out[lam, k] = gf.pow(nl, ex) if ex else 1
        return out

    def _inward_vectors(self, side: int) -> np.ndarray:
        """Row m: (x) (m^{p^j} x_j + y_j)^{r_j} (side 0) or (x) (x_j + m^{p^j} y_j)^{r_j} (side 1)."""
        gf, p = self.gf, self.p
        out = np.zeros((self.q, self.dim), dtype=DTYPE)
        idx = self.weight.indices()
        for m in range(self.q):
            mj = [gf.frob_power(m, j) for j in range(self.f)]
            for k, iv in enumerate(idx):
                c = 1
                for j, (ij, rj) in enumerate(zip(iv, self.weight.r_vec)):
                    ex = rj - ij if side == 0 else ij
                    term = comb(rj, ij) % p
                    term = gf.mul(term, gf.pow(mj[j], ex) if ex else 1)
                    c = gf.mul(c, term)
                out[m, k] = c
        return out

    @cached_property
    def _inward0(self) -> np.ndarray:
        return self._inward_vectors(0)

    @cached_property
    def _inward1(self) -> np.ndarray:
        return self._inward_vectors(1)

    def hecke_T(self, x: InducedElement) -> InducedElement:
        """The explicit local formulas for T."""
        lin = self.lin
        d = self.dim
        out: Dict[TreeVertex, np.ndarray] = {}

        def acc(v: TreeVertex, vec: np.ndarray) -> None:
            if v in out:
                out[v] = lin.add(out[v], vec)
            else:
                out[v] = vec

        for v, c in x.items():
            if v.side == 0:
                tops = lin.matvec(self._neg_pow, c)
                top_idx = 0
            else:
                tops = lin.matvec(self._neg_pow, c[::-1].copy())
                top_idx = d - 1
            for lam in range(self.q):
                if tops[lam]:
                    vec = np.zeros(d, dtype=DTYPE)
                    vec[top_idx] = tops[lam]
                    acc(v.child(lam), vec)
            if v.side == 0:
                cr = int(c[d - 1])
                if cr:
                    if v.n == 0:
                        acc(ALPHA_VERTEX, lin.mul(self.y_top, cr))
                    else:
                        acc(v.parent(), lin.mul(self._inward0[v.mu[-1]], cr))
            else:
                c0 = int(c[0])
                if c0:
                    if v.n == 0:
                        acc(ID_VERTEX, lin.mul(self.x_top, c0))
                    else:
                        acc(v.parent(), lin.mul(self._inward1[v.mu[-1]], c0))
        return InducedElement(self, out)

    def hecke_T_generic(self, x: InducedElement) -> InducedElement:
        """T(g (x) v) = g . T(Id (x) v), using only the radius-0 formula and the action."""
        total = self.zero()
        for v, c in x.items():
            base = self.hecke_T(self.at(ID_VERTEX, c))
            total = total + self.act(self.vertex_matrix(v), base)
        return total

    # -- dense conversion ------------------------------------------------------------
    def to_dense(self, x: InducedElement, region: Region) -> np.ndarray:
        out = np.zeros((region.size, self.dim), dtype=DTYPE)
        for v, vec in x.items():
            if not region.contains(v):
                raise ValueError(f"{v} lies outside {region}")
            out[region.index(v)] = vec
        return out

    def from_dense(self, arr: np.ndarray, region: Region) -> InducedElement:
        arr = np.asarray(arr, dtype=DTYPE).reshape(region.size, self.dim)
        vals = {}
        nz = np.nonzero(np.any(arr, axis=1))[0]
        if nz.size:
            verts = region.vertices()
            for i in nz:
                vals[verts[i]] = arr[i].copy()
        return InducedElement(self, vals)

    # -- Im(T) ----------------------------------------------------------------------
    @cached_property
    def reducer(self) -> "ImTReducer":
        return ImTReducer(self)

    def im_T_membership(self, y: InducedElement, radius_budget: Optional[int] = None):
        """Preimage x with T(x) = y, or None when y is not in the image."""
        n0, n1 = y.side_radii()
        if radius_budget is not None and max(n0, n1) > radius_budget:
            raise ValueError("element exceeds the radius budget")
        if y.is_zero():
            return self.zero()
        # the preimage region must keep both radius-0 vertices
        region = Region(self.q, max(n0, 1), max(n1, 1))
        cls, pre = self.reducer.reduce(self.to_dense(y, region), region)
        if np.any(cls):
            return None
        return self.from_dense(pre, Region(self.q, region.n0 - 1, region.n1 - 1))

    # -- named elements ---------------------------------------------------------------
    def build_element(self, kind: str, n: int, k=None) -> InducedElement:
        """s_n^k, t_n^k, t_n^{k_vec}, A_n^0 = s_n^0 or A_n^1 = beta s_n^0."""
        gf = self.gf
        if kind == "A0":
            return self.build_element("s", n, 0) if n >= 1 else self.at(ID_VERTEX, self.x_top)
        if kind == "A1":
            return self.act(self.beta(), self.build_element("A0", n))
        if n < 1:
            raise ValueError("s_n and t_n need n >= 1")
        if kind == "s":
            if not 0 <= k <= self.q - 1:
                raise ValueError(f"s_n^k needs 0 <= k <= q-1, got {k}")
            pt = gf.power_table
            vals = {}
            for mu in product(range(self.q), repeat=n):
                c = pt[mu[-1]][k]
                if c:
                    vals[TreeVertex(0, n, mu)] = self.lin.mul(self.x_top, c)
            return InducedElement(self, vals)
        if kind == "t":
            if not 0 <= k < self.f or self.weight.r_vec[k] < 1:
                raise ValueError(f"t_n^k needs 0 <= k < f with r_k >= 1, got {k}")
            iv = [0] * self.f
            iv[k] = 1
            vec = self.vector(iv)
        elif kind == "t_vec":
            kv = tuple(k)
            if len(kv) != self.f or any(not 0 <= kj <= rj for kj, rj in zip(kv, self.weight.r_vec)):
                raise ValueError(f"t_n^k needs 0 <= k_j <= r_j, got {kv}")
            vec = self.vector(kv)
        else:
            raise ValueError(f"unknown element kind {kind!r}")
        return InducedElement(self, {TreeVertex(0, n, mu): vec for mu in product(range(self.q), repeat=n)})

    def propagate(self, x: InducedElement) -> InducedElement:
        """sum over mu in F_q of g^0_{1,mu} . x"""
        total = self.zero()
        for lam in range(self.q):
            total = total + self.act(self.g0(1, (lam,)), x)
        return total


# ---------------------------------------------------------------------------
# reduction modulo the image of T


class ImTReducer:
    """Canonical representatives of Region-supported vectors modulo T(ind).

    The sweep goes from the outermost radius inward.  The q children of a
    parent P form a block; their top components (x^r on side 0, y^r on side 1)
    are interpolated as a polynomial in the last digit lam.  Exponents that a
    T-image can produce fix the preimage value at P, and subtracting T(P (x) v)
    moves the remainder one step further in.  What cannot be removed is the
    class of the vector: non-top components of children, interpolation
    coefficients at unreachable exponents, and the two radius-0 values.
    """

    def __init__(self, model: TreeModel):
        self.model = model
        gf, q, d = model.gf, model.q, model.dim
        self.q, self.d = q, d
        lin = model.lin
        self.lin = lin
        # interpolation: a_e = sum_lam f(lam) * interp[lam, e]
        interp = np.zeros((q, q), dtype=DTYPE)
        interp[0, 0] = 1
        for lam in range(q):
            for e in range(1, q):
                ex = q - 1 - e
                val = gf.pow(lam, ex) if ex else 1
                interp[lam, e] = gf.neg(val)
        self.interp = interp
        exps = model._e_set  # exponent for each basis index
        self.exps = np.array(exps, dtype=np.int64)
        signs = [gf.neg(1) if sum(iv) % 2 else 1 for iv in model.weight.indices()]
        self.signs = np.array(signs, dtype=DTYPE)  # (-1)^{i}, p odd
        reach = set(exps)
        self.free_exps = np.array([e for e in range(q) if e not in reach], dtype=np.int64)
        self.block_dim = q * (d - 1) + len(self.free_exps)  # = (q-1) d

    def class_layout(self, region: Region) -> Dict[Tuple[int, int], Tuple[int, int]]:
        """(side, level) -> (offset, number of blocks) in the class vector; level 0 = radius-0 values."""
        out = {}
        off = 0
        for s in (0, 1):
            if region.radius(s) >= 0:
                out[(s, 0)] = (off, 1)
                off += self.d
        for n in range(1, max(region.n0, region.n1) + 1):
            for s in (0, 1):
                if n <= region.radius(s):
                    nb = self.q ** (n - 1)
                    out[(s, n)] = (off, nb)
                    off += nb * self.block_dim
        return out

    def class_dim(self, region: Region) -> int:
        lay = self.class_layout(region)
        return sum(nb * (self.d if lvl == 0 else self.block_dim) for (s, lvl), (off, nb) in lay.items())

    # -- one block: the q children of a parent ---------------------------------------
    def top_index(self, side: int) -> int:
        return 0 if side == 0 else self.d - 1

    def block_split(self, Y: np.ndarray, side: int):
        """Class coordinates and parent preimage of children values Y (..., q, d)."""
        lin = self.lin
        top = self.top_index(side)
        coeffs = lin.matmul(Y[..., top], self.interp)  # (..., exponent)
        c = lin.mul(coeffs[..., self.exps], self.signs)
        if side == 1:
            c = c[..., ::-1]
        others = np.delete(Y, top, axis=-1).reshape(Y.shape[:-2] + (self.q * (self.d - 1),))
        return np.concatenate([others, coeffs[..., self.free_exps]], axis=-1), c

    def block_lift(self, coords: np.ndarray, side: int) -> np.ndarray:
        """Children values with the given class coordinates and zero preimage."""
        lin, q, d = self.lin, self.q, self.d
        coords = np.asarray(coords, dtype=DTYPE)
        lead = coords.shape[:-1]
        nothers = q * (d - 1)
        others = coords[..., :nothers].reshape(lead + (q, d - 1))
        top = self.top_index(side)
        Y = np.insert(others, top, 0, axis=-1)
        Y[..., top] = lin.matmul(coords[..., nothers:], self.free_monomials)
        return Y

    @cached_property
    def free_monomials(self) -> np.ndarray:
        """Row k: lam -> lam^{free_exps[k]} (free exponents are all >= 1)."""
        gf = self.model.gf
        out = np.zeros((len(self.free_exps), self.q), dtype=DTYPE)
        for k, e in enumerate(self.free_exps):
            for lam in range(1, self.q):
                out[k, lam] = gf.pow(lam, int(e))
        return out

    def spill(self, c: np.ndarray, side: int, parent_last_digits: np.ndarray) -> np.ndarray:
        """Inward part of T(P (x) c) at each parent's own parent, before summing siblings."""
        lin, d = self.lin, self.d
        inward = self.model._inward0 if side == 0 else self.model._inward1
        coef = c[..., d - 1] if side == 0 else c[..., 0]
        return lin.mul(coef[..., None], inward[parent_last_digits])

    def reduce(self, y: np.ndarray, region: Region, want_preimage: bool = True):
        """(class vector, preimage on the region shrunk by one) of a dense vector."""
        lin, q, d = self.lin, self.q, self.d
        model = self.model
        y = np.array(y, dtype=DTYPE).reshape(region.size, d)
        lay = self.class_layout(region)
        cls = np.zeros(self.class_dim(region), dtype=DTYPE)
        pre_region = Region(q, region.n0 - 1, region.n1 - 1)
        pre = np.zeros((pre_region.size, d), dtype=DTYPE) if want_preimage else None
        for n in range(max(region.n0, region.n1), 0, -1):
            for s in (0, 1):
                if n > region.radius(s):
                    continue
                Y = y[region.slice(s, n)].reshape(q ** (n - 1), q, d)
                blk, c = self.block_split(Y, s)
                off, nb = lay[(s, n)]
                cls[off: off + nb * self.block_dim] = blk.reshape(-1)
                if want_preimage:
                    pre[pre_region.slice(s, n - 1)] = c
                if n == 1:
                    # T(Id (x) c) reaches alpha and T(alpha (x) c) reaches Id
                    idx = region.offsets[(1 - s, 0)]
                    if s == 0:
                        y[idx] = lin.sub(y[idx], lin.mul(model.y_top, int(c[0, d - 1])))
                    else:
                        y[idx] = lin.sub(y[idx], lin.mul(model.x_top, int(c[0, 0])))
                else:
                    last = np.arange(q ** (n - 1)) % q
                    contrib = self.spill(c, s, last).reshape(q ** (n - 2), q, d)
                    tot = contrib[:, 0]
                    for k in range(1, q):
                        tot = lin.add(tot, contrib[:, k])
                    sl = region.slice(s, n - 2)
                    y[sl] = lin.sub(y[sl], tot)
        for s in (0, 1):
            if region.radius(s) >= 0:
                off, _ = lay[(s, 0)]
                cls[off: off + d] = y[region.offsets[(s, 0)]]
        return cls, pre

    def class_of(self, y: np.ndarray, region: Region) -> np.ndarray:
        return self.reduce(y, region, want_preimage=False)[0]

    def lift(self, cls: np.ndarray, region: Region) -> np.ndarray:
        """A dense vector whose class is cls (section of the class map)."""
        q, d = self.q, self.d
        cls = np.asarray(cls, dtype=DTYPE)
        out = np.zeros((region.size, d), dtype=DTYPE)
        for (s, lvl), (off, nb) in self.class_layout(region).items():
            if lvl == 0:
                out[region.offsets[(s, 0)]] = cls[off: off + d]
            else:
                blocks = cls[off: off + nb * self.block_dim].reshape(nb, self.block_dim)
                out[region.slice(s, lvl)] = self.block_lift(blocks, s).reshape(nb * q, d)
        return out


# ---------------------------------------------------------------------------
# precomputed actions on one sphere


def level_vertices(q: int, side: int, n: int) -> List[TreeVertex]:
    return [TreeVertex(side, n, mu) for mu in product(range(q), repeat=n)]


def local_index(q: int, v: TreeVertex) -> int:
    k = 0
    for dgt in v.mu:
        k = k * q + dgt
    return k


class ActionMap:
    """g acting on functions supported on a fixed vertex list that g maps into a target list.

    Stores, per source vertex, the target position and the KZ part mod pi; the
    action on a batch of dense vectors is then a handful of small matrix
    products, one per distinct KZ part.
    """

    def __init__(self, model: TreeModel, g: Mat2Local, sources: Sequence[TreeVertex], target_index: Dict[TreeVertex, int]):
        self.model = model
        self.n_src = len(sources)
        self.n_tgt = len(target_index)
        groups: Dict[Tuple[int, int, int, int], Tuple[List[int], List[int]]] = {}
        for i, v in enumerate(sources):
            cf = model.normal_form_at(g, v)
            j = target_index.get(cf.vertex)
            if j is None:
                raise ValueError(f"{v} is sent to {cf.vertex}, outside the target list")
            src, tgt = groups.setdefault(cf.k_bar, ([], []))
            src.append(i)
            tgt.append(j)
        self.groups = [
            (model.sym(k).T.copy(), np.array(src), np.array(tgt)) for k, (src, tgt) in sorted(groups.items())
        ]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """X has shape (..., n_src, d); returns (..., n_tgt, d)."""
        lin = self.model.lin
        out = np.zeros(X.shape[:-2] + (self.n_tgt, X.shape[-1]), dtype=DTYPE)
        for St, src, tgt in self.groups:
            out[..., tgt, :] = lin.matmul(X[..., src, :], St)
        return out


def level_action(model: TreeModel, g: Mat2Local, side: int, n: int) -> ActionMap:
    """g restricted to one sphere of one side; g must preserve it (e.g. g in I)."""
    key = ("level", g, side, n)
    cache = model.__dict__.setdefault("_amap_cache", {})
    hit = cache.get(key)
    if hit is None:
        verts = level_vertices(model.q, side, n)
        hit = ActionMap(model, g, verts, {v: i for i, v in enumerate(verts)})
        cache[key] = hit
    return hit


def block_action(model: TreeModel, g: Mat2Local, parent: TreeVertex, target_parent: Optional[TreeVertex] = None) -> ActionMap:
    """g on the children of parent, landing on the children of target_parent."""
    target_parent = parent if target_parent is None else target_parent
    key = ("block", g, parent, target_parent)
    cache = model.__dict__.setdefault("_amap_cache", {})
    hit = cache.get(key)
    if hit is None:
        src = [parent.child(lam) for lam in range(model.q)]
        tgt = {target_parent.child(lam): lam for lam in range(model.q)}
        hit = ActionMap(model, g, src, tgt)
        cache[key] = hit
    return hit

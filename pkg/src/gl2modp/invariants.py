"""I(1)-invariants of ind_{KZ}^G sigma modulo T and modulo larger subspaces.

Everything here works on finite regions of the tree.  A :class:`QuotientContext`
fixes a region and the subspace being quotiented out: the image of T (via the
block reducer in :mod:`gl2modp.induction`) plus any extra generators, kept in
echelon form on class coordinates.  Membership tests are exact.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .induction import (
    ALPHA_VERTEX,
    ID_VERTEX,
    InducedElement,
    Region,
    TreeModel,
    TreeVertex,
    block_action,
    level_action,
)
from .gfq import field as finite_field
from .linalg import DTYPE, Echelon, FqLinalg
from .localring import Mat2Local
from .weights import (
    ICharacter,
    IrregularCharacter,
    SerreWeight,
    char_of_element,
    highest_vector,
    sym_matrix,
    weight_from_char,
)


# ---------------------------------------------------------------------------
# generators of I(1)


@dataclass(frozen=True)
class GeneratorSet:
    """delta_b, delta_c, delta_a at parameters pi^i [lam] (i <= budget, lam in an F_p-basis)."""

    budget: int
    labels: Tuple[str, ...]
    matrices: Tuple[Mat2Local, ...]

    @classmethod
    def build(cls, model: TreeModel, budget: Optional[int] = None) -> "GeneratorSet":
        budget = model.radius_budget if budget is None else budget
        R = model.ring
        labels, mats = [], []
        makers = (("b", model.delta_b), ("c", model.delta_c), ("a", model.delta_a))
        for kind, make in makers:
            for i in range(budget + 1):
                for k in range(model.f):
                    lam = model.p ** k
                    labels.append(f"delta_{kind}(pi^{i}[{lam}])")
                    mats.append(make(R.pi_power(i) * R.teich(lam)))
        return cls(budget, tuple(labels), tuple(mats))

    @classmethod
    def exhaustive(cls, model: TreeModel, depth: int) -> "GeneratorSet":
        """All three families at every parameter [mu]_depth (q^depth each); for soundness checks."""
        labels, mats = [], []
        makers = (("b", model.delta_b), ("c", model.delta_c), ("a", model.delta_a))
        for kind, make in makers:
            for mu in product(range(model.q), repeat=depth):
                if not any(mu):
                    continue
                labels.append(f"delta_{kind}({list(mu)})")
                mats.append(make(model.teich_digits(mu)))
        return cls(depth, tuple(labels), tuple(mats))

    def __len__(self) -> int:
        return len(self.matrices)

    def items(self):
        return zip(self.labels, self.matrices)

    def in_I1(self) -> bool:
        return all(g.pi_power == 0 and g.mod_pi()[0] == 1 and g.mod_pi()[2] == 0 and g.mod_pi()[3] == 1 for g in self.matrices)

    def stabilizing(self, model: TreeModel, v: TreeVertex) -> List[int]:
        return [i for i, g in enumerate(self.matrices) if model.normal_form_at(g, v).vertex == v]


def act_dense(model: TreeModel, g: Mat2Local, X: np.ndarray, region: Region) -> np.ndarray:
    """g on dense vectors (..., size, d); g must map every sphere of the region to itself."""
    X = np.asarray(X, dtype=DTYPE)
    out = np.zeros_like(X)
    for s, n in region.levels():
        sl = region.slice(s, n)
        out[..., sl, :] = level_action(model, g, s, n).apply(X[..., sl, :])
    return out


def kz_coset_reps(model: TreeModel) -> List[Mat2Local]:
    """w and (1 0; [lam] 1) for lam in F_q: representatives of K/I."""
    return [model.w()] + [model.lower(lam) for lam in range(model.q)]


# ---------------------------------------------------------------------------
# quotient contexts


class QuotientContext:
    """A region of the tree and a subspace of the functions on it to quotient by.

    With ``modulo_T`` the subspace always contains T(ind) restricted to the
    region; ``add`` enlarges it by single elements.
    """

    def __init__(self, model: TreeModel, region: Region, modulo_T: bool = True):
        self.model = model
        self.region = region
        self.modulo_T = modulo_T
        if modulo_T:
            self.ncols = model.reducer.class_dim(region)
        else:
            self.ncols = region.size * model.dim
        self.span = Echelon(model.lin, self.ncols)
        self.labels: List[str] = []

    @classmethod
    def ball(cls, model: TreeModel, R: int, modulo_T: bool = True) -> "QuotientContext":
        return cls(model, Region.ball(model.q, R), modulo_T)

    @classmethod
    def spheres(cls, model: TreeModel, n: int, modulo_T: bool = True) -> "QuotientContext":
        return cls(model, Region.sphere_union(model.q, n), modulo_T)

    def __repr__(self) -> str:
        mod = "T + " if self.modulo_T else ""
        return f"QuotientContext({self.region}, {mod}{self.span.rank} extra)"

    def copy(self) -> "QuotientContext":
        out = QuotientContext.__new__(QuotientContext)
        out.model, out.region, out.modulo_T, out.ncols = self.model, self.region, self.modulo_T, self.ncols
        out.span = Echelon(self.model.lin, self.ncols)
        out.span._rows = self.span.rows.copy()
        out.span.pivots = list(self.span.pivots)
        out.labels = list(self.labels)
        return out

    def dense(self, x) -> np.ndarray:
        if isinstance(x, InducedElement):
            return self.model.to_dense(x, self.region)
        return np.asarray(x, dtype=DTYPE).reshape(self.region.size, self.model.dim)

    def class_vector(self, x) -> np.ndarray:
        y = self.dense(x)
        if self.modulo_T:
            return self.model.reducer.class_of(y, self.region)
        return y.reshape(-1).copy()

    def canonical(self, x) -> np.ndarray:
        """Canonical representative (as class coordinates) of x modulo the subspace."""
        return self.span.reduce(self.class_vector(x))

    def contains(self, x) -> bool:
        return not np.any(self.canonical(x))

    def add(self, x, label: Optional[str] = None) -> bool:
        grew = self.span.add(self.class_vector(x))
        if grew and label is not None:
            self.labels.append(label)
        return grew

    def add_kz_span(self, x: InducedElement, label: Optional[str] = None) -> int:
        """Add the K-translates of an I-eigenvector (its KZ-span)."""
        before = self.span.rank
        vecs = [self.class_vector(self.model.act(g, x)) for g in kz_coset_reps(self.model)]
        self.span.add_many(vecs + [self.class_vector(x)])
        if label is not None:
            self.labels.append(label)
        return self.span.rank - before


# ---------------------------------------------------------------------------
# invariance and eigen-characters


@dataclass
class InvarianceResult:
    ok: bool
    witness: Optional[str] = None
    witness_matrix: Optional[Mat2Local] = None
    difference: Optional[InducedElement] = None

    def __bool__(self) -> bool:
        return self.ok


def is_invariant(x: InducedElement, ctx: QuotientContext, generators: Optional[GeneratorSet] = None) -> InvarianceResult:
    model = x.model
    if x.radius() > ctx.region.radius(0) + 1:
        raise ValueError("element exceeds the context radius")
    gens = generators if generators is not None else GeneratorSet.build(model, max(ctx.region.n0, ctx.region.n1))
    for label, g in gens.items():
        diff = model.act(g, x) - x
        if not ctx.contains(diff):
            return InvarianceResult(False, label, g, diff)
    return InvarianceResult(True)


class NotAnEigenvector(ValueError):
    pass


def torus_generators(model: TreeModel) -> Tuple[Mat2Local, Mat2Local]:
    z = model.gf.exp[1] if model.q > 2 else 1
    return model.diag(z, 1), model.diag(1, z)


def i_character(x: InducedElement, ctx: QuotientContext) -> Optional[ICharacter]:
    """The torus character of x modulo the context, or None if x is not a torus eigenvector there.

    The scalar is read off the first nonzero canonical coordinate and then
    checked on all of them.
    """
    model = x.model
    gf, lin = model.gf, model.lin
    cx = ctx.canonical(x)
    nz = np.nonzero(cx)[0]
    if nz.size == 0:
        raise NotAnEigenvector("element is zero in the context")
    j = int(nz[0])
    exps = []
    for t in torus_generators(model):
        cy = ctx.canonical(model.act(t, x))
        lam = gf.div(int(cy[j]), int(cx[j]))
        if lam == 0 or np.any(lin.sub(cy, lin.mul(cx, lam))):
            return None
        exps.append(gf.log[lam])
    return ICharacter(model.q, exps[0], exps[1])


# ---------------------------------------------------------------------------
# K-submodules generated by eigenvectors


@dataclass
class CertifiedSubmodule:
    generator: InducedElement
    dimension: int
    character: ICharacter
    char_weight: Optional[SerreWeight]  # the weight the character points to (None if ambiguous)
    irreducible: bool
    translates: Tuple[InducedElement, ...] = ()

    @property
    def weight(self) -> Optional[SerreWeight]:
        """The matched weight, or None for a reducible submodule."""
        return self.char_weight if self.irreducible else None

    def as_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "character": self.character.as_dict(),
            "weight": None if self.weight is None else self.weight.as_dict(),
            "irreducible": self.irreducible,
        }


def kz_closure(x: InducedElement, ctx: QuotientContext, check_invariant: bool = True) -> CertifiedSubmodule:
    """Dimension of <x>_{KZ} in the context, with the weight test of its character."""
    model = x.model
    chi = i_character(x, ctx)
    if chi is None:
        raise NotAnEigenvector("element is not a torus eigenvector in the context")
    if check_invariant:
        res = is_invariant(x, ctx)
        if not res:
            raise NotAnEigenvector(f"element is not I(1)-invariant in the context (witness {res.witness})")
    translates = tuple(model.act(g, x) for g in kz_coset_reps(model))
    ech = Echelon(model.lin, ctx.ncols)
    for t in translates:
        ech.add(ctx.canonical(t))
    try:
        wt = weight_from_char(chi, model.p)
    except IrregularCharacter:
        wt = None
    irreducible = wt is not None and ech.rank == wt.dim
    return CertifiedSubmodule(x, ech.rank, chi, wt, irreducible, translates)


# ---------------------------------------------------------------------------
# the invariant space at finite radius


@dataclass
class InvariantSpace:
    weight: SerreWeight
    e: int
    radius: int
    basis: List[InducedElement]
    characters: List[ICharacter]
    warnings: List[str] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def character_multiset(self) -> Dict[Tuple[int, int], int]:
        out: Dict[Tuple[int, int], int] = {}
        for c in self.characters:
            out[(c.alpha, c.beta)] = out.get((c.alpha, c.beta), 0) + 1
        return dict(sorted(out.items()))


def hypothesis_warnings(weight: SerreWeight) -> List[str]:
    bad = [rj for rj in weight.r_vec if not 2 < rj < weight.p - 3]
    if bad:
        return [f"2 < r_j < p-3 fails for r = {weight.r_vec}, p = {weight.p}; the closed-form basis is not asserted"]
    return []


class _LayeredSolver:
    """Solves {x on B_n : (g - 1) x in Im T for all generators g} one level at a time.

    Class coordinates of (g - 1) x at a level depend only on x at that level
    and on x two levels further out (through the parent preimages), so levels
    are processed from the outside in.  A level that receives nothing from the
    levels already solved is handled on a single block: the children of one
    parent, invariant under that parent's stabilizer, then spread over all
    parents with the coset representatives delta_b([mu]) or delta_c([mu]).
    """

    def __init__(self, model: TreeModel, n: int, gens: GeneratorSet, direct_limit: int = 20000):
        self.model, self.n, self.gens = model, n, gens
        self.region = Region.sphere_union(model.q, n)
        self.red = model.reducer
        self.lin = model.lin
        self.layout = self.red.class_layout(self.region)
        self.direct_limit = direct_limit

    # coordinates of one position -----------------------------------------------------
    def pos_size(self, s: int, l: int) -> int:
        off, nb = self.layout[(s, l)]
        return self.model.dim if l == 0 else nb * self.red.block_dim

    def pos_slice(self, s: int, l: int) -> slice:
        off, _ = self.layout[(s, l)]
        return slice(off, off + self.pos_size(s, l))

    def lift_pos(self, s: int, l: int, C: np.ndarray) -> np.ndarray:
        """Rows of C (class coordinates at one position) -> dense values on that sphere."""
        q, d, red = self.model.q, self.model.dim, self.red
        k = C.shape[0]
        if l == 0:
            return C.reshape(k, 1, d).astype(DTYPE)
        _, nb = self.layout[(s, l)]
        blocks = C.reshape(k, nb, red.block_dim)
        return red.block_lift(blocks, s).reshape(k, nb * q, d)

    def class_pos(self, s: int, l: int, Y: np.ndarray) -> np.ndarray:
        """Class coordinates at (s, l) of values supported on that sphere alone."""
        q, d = self.model.q, self.model.dim
        k = Y.shape[0]
        if l == 0:
            return Y.reshape(k, d)
        blk, _ = self.red.block_split(Y.reshape(k, -1, q, d), s)
        return blk.reshape(k, -1)

    def embed(self, s: int, l: int, Ylev: np.ndarray) -> np.ndarray:
        out = np.zeros((Ylev.shape[0], self.region.size, self.model.dim), dtype=DTYPE)
        out[:, self.region.slice(s, l)] = Ylev
        return out

    # per-element bookkeeping ------------------------------------------------------------
    def diff_classes(self, y: np.ndarray) -> np.ndarray:
        """(number of generators, class dim): class of (g - 1) y for each generator."""
        lin = self.lin
        out = np.zeros((len(self.gens), self.red.class_dim(self.region)), dtype=np.int16)
        for i, g in enumerate(self.gens.matrices):
            diff = lin.sub(act_dense(self.model, g, y, self.region), y)
            out[i] = self.red.class_of(diff, self.region)
        return out

    # one position ---------------------------------------------------------------------
    def block_invariants(self, s: int, l: int) -> np.ndarray:
        model, red, lin = self.model, self.red, self.lin
        P0 = TreeVertex(s, l - 1, (0,) * (l - 1))
        bd = red.block_dim
        Yb = red.block_lift(np.eye(bd, dtype=DTYPE), s)
        cur = np.eye(bd, dtype=DTYPE)
        for i in self.gens.stabilizing(model, P0):
            amap = block_action(model, self.gens.matrices[i], P0)
            cls, _ = red.block_split(lin.sub(amap.apply(Yb), Yb), s)
            R = lin.matmul(cur, cls)
            if not np.any(R):
                continue
            cur = lin.matmul(lin.nullspace(R.T), cur)
            if cur.shape[0] == 0:
                break
        return cur

    def spread(self, s: int, l: int, V: np.ndarray) -> np.ndarray:
        model, red, q, d = self.model, self.red, self.model.q, self.model.dim
        P0 = TreeVertex(s, l - 1, (0,) * (l - 1))
        Yb = red.block_lift(V, s)
        out = np.zeros((V.shape[0], q ** l, d), dtype=DTYPE)
        for idx, mu in enumerate(product(range(q), repeat=l - 1)):
            if any(mu):
                b = model.teich_digits(mu)
                h = model.delta_b(b) if s == 0 else model.delta_c(b)
            else:
                h = model.identity()
            P = TreeVertex(s, l - 1, mu)
            out[:, idx * q: (idx + 1) * q] = block_action(model, h, P0, P).apply(Yb)
        return self.embed(s, l, out)

    def position_matrices(self, s: int, l: int) -> List[np.ndarray]:
        """Row j of entry i: class at (s, l) of (g_i - 1) lift(e_j)."""
        model, lin = self.model, self.lin
        m = self.pos_size(s, l)
        if m > self.direct_limit:
            raise MemoryError(f"direct solve at level {l} needs {m} unknowns; raise direct_limit or lower the radius")
        Ylev = self.lift_pos(s, l, np.eye(m, dtype=DTYPE))
        out = []
        for g in self.gens.matrices:
            img = level_action(model, g, s, l).apply(Ylev)
            out.append(self.class_pos(s, l, lin.sub(img, Ylev)))
        return out

    # the sweep ---------------------------------------------------------------------------
    def run(self) -> np.ndarray:
        lin = self.lin
        size, d = self.region.size, self.model.dim
        pool = np.zeros((0, size, d), dtype=DTYPE)
        diffs: List[np.ndarray] = []
        for l in range(self.n, -1, -1):
            for s in (0, 1):
                sl = self.pos_slice(s, l)
                m_here = self.pos_size(s, l)
                A = [np.array([D[i, sl] for D in diffs], dtype=DTYPE).reshape(len(diffs), m_here) for i in range(len(self.gens))]
                coupled = any(np.any(a) for a in A)
                if not coupled and l >= 1:
                    V = self.block_invariants(s, l)
                    if V.shape[0]:
                        new = self.spread(s, l, V)
                        pool = np.concatenate([pool, new])
                        diffs += [self.diff_classes(y) for y in new]
                    continue
                B = self.position_matrices(s, l)
                npool, m = pool.shape[0], self.pos_size(s, l)
                cur = np.eye(npool + m, dtype=DTYPE)
                for Ai, Bi in zip(A, B):
                    W = np.vstack([Ai, Bi]) if npool else Bi
                    R = lin.matmul(cur, W)
                    if not np.any(R):
                        continue
                    cur = lin.matmul(lin.nullspace(R.T), cur)
                    if cur.shape[0] == 0:
                        break
                if not coupled:
                    # the old pool is untouched; keep only the purely new solutions
                    cur = cur[~np.any(cur[:, :npool], axis=1)] if npool else cur
                    cur = cur[np.any(cur[:, npool:], axis=1)]
                    if cur.shape[0]:
                        new = self.embed(s, l, self.lift_pos(s, l, cur[:, npool:]))
                        pool = np.concatenate([pool, new])
                        diffs += [self.diff_classes(y) for y in new]
                    continue
                a, c = cur[:, :npool], cur[:, npool:]
                comb = lin.matmul(a, pool.reshape(npool, -1)).reshape(-1, size, d) if npool else np.zeros((cur.shape[0], size, d), dtype=DTYPE)
                pool = lin.add(comb, self.embed(s, l, self.lift_pos(s, l, c)))
                diffs = [self.diff_classes(y) for y in pool]
        for D in diffs:
            if np.any(D):
                raise ArithmeticError("a solution failed its own invariance constraints")
        return pool


def _independent_rows(lin, C: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    """(E, R, pivots) with R = E C in reduced echelon form and R of full row rank."""
    k, L = C.shape
    aug = np.hstack([C, np.eye(k, dtype=DTYPE)])
    R, piv = lin.rref(aug)
    keep = [i for i, c in enumerate(piv) if c < L]
    return R[keep, L:], R[keep, :L], [piv[i] for i in keep]


def _joint_eigenbasis(model: TreeModel, Ma: np.ndarray, Mb: np.ndarray) -> List[Tuple[np.ndarray, Tuple[int, int]]]:
    """Row eigenvectors x (x M = lam x) common to both torus matrices, with the log of each eigenvalue."""
    gf, lin = model.gf, model.lin
    k = Ma.shape[0]
    eye = np.eye(k, dtype=DTYPE)
    out = []
    for a in range(model.q - 1):
        za = gf.exp[a] if model.q > 2 else 1
        Ea = lin.nullspace(lin.sub(Ma, lin.mul(eye, za)).T)
        if Ea.shape[0] == 0:
            continue
        for b in range(model.q - 1):
            zb = gf.exp[b] if model.q > 2 else 1
            M = np.vstack([lin.sub(Ma, lin.mul(eye, za)).T, lin.sub(Mb, lin.mul(eye, zb)).T])
            E = lin.nullspace(M)
            for row in E:
                out.append((row, (a, b)))
    return out


def enumerate_invariants(
    weight: SerreWeight,
    e: int = 1,
    radius: int = 2,
    model: Optional[TreeModel] = None,
    generators: Optional[GeneratorSet] = None,
) -> InvariantSpace:
    """An I-eigenbasis of the I(1)-invariants of ind/(T) supported on B_radius."""
    notes = hypothesis_warnings(weight)
    for msg in notes:
        warnings.warn(msg, stacklevel=2)
    model = model or TreeModel(weight, e=e, radius=radius)
    gens = generators or GeneratorSet.build(model, radius)
    solver = _LayeredSolver(model, radius, gens)
    pool = solver.run()
    region, red, lin = solver.region, model.reducer, model.lin
    if pool.shape[0] == 0:
        return InvariantSpace(weight, e, radius, [], [], notes)
    C = np.array([red.class_of(y, region) for y in pool], dtype=DTYPE)
    E, R, piv = _independent_rows(lin, C)
    basis = lin.matmul(E, pool.reshape(pool.shape[0], -1)).reshape(-1, region.size, model.dim)
    # torus matrices in the basis whose classes are the rows of R
    mats = []
    for t in torus_generators(model):
        rows = []
        for y in basis:
            ct = red.class_of(act_dense(model, t, y, region), region)
            coords = ct[piv]
            if np.any(lin.sub(ct, lin.matmul(coords, R))):
                raise ArithmeticError("invariant space is not stable under the torus")
            rows.append(coords)
        mats.append(np.array(rows, dtype=DTYPE))
    eig = _joint_eigenbasis(model, mats[0], mats[1])
    if len(eig) != len(basis):
        raise ArithmeticError("torus action on the invariant space is not diagonalizable over F_q")
    elems, chars = [], []
    for row, (a, b) in eig:
        dense = lin.matmul(row, basis.reshape(len(basis), -1)).reshape(region.size, model.dim)
        elems.append(model.from_dense(dense, region))
        chars.append(ICharacter(model.q, a, b))
    return InvariantSpace(weight, e, radius, elems, chars, notes)


# ---------------------------------------------------------------------------
# the closed-form basis


def expected_basis(weight: SerreWeight, e: int, radius: int) -> List[Tuple[str, ICharacter]]:
    """The closed-form I-eigenbasis truncated to radius, with the predicted characters."""
    p, f, q, r, w = weight.p, weight.f, weight.q, weight.r, weight.w

    def swap(c: ICharacter) -> ICharacter:
        return ICharacter(q, c.beta, c.alpha)

    top = ICharacter(q, r + w, w)
    out = [("Id x^r", top), ("alpha y^r", swap(top))]
    s_start = 1 if f > 1 else (2 if e > 1 else None)
    if s_start is not None:
        for n in range(s_start, radius + 1):
            for l in range(f):
                k = p ** l * (weight.r_vec[l] + 1)
                c = char_of_element("s", k, weight)
                out += [(f"s_{n}^{k}", c), (f"beta s_{n}^{k}", swap(c))]
    if e > 1:
        for n in range(1, radius + 1):
            for k in range(f):
                c = char_of_element("t", k, weight)
                out += [(f"t_{n}^{k}", c), (f"beta t_{n}^{k}", swap(c))]
    return out


def expected_count(weight: SerreWeight, e: int, radius: int) -> int:
    return len(expected_basis(weight, e, radius))


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    claim: str
    parameters: dict
    status: str  # "pass" or "fail"
    dimensions: dict = field(default_factory=dict)
    characters: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return {
            "claim": self.claim,
            "parameters": self.parameters,
            "status": self.status,
            "dimensions": self.dimensions,
            "characters": self.characters,
            "witnesses": self.witnesses,
            "checks": self.checks,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _status(checks: Dict[str, bool]) -> str:
    return "pass" if all(checks.values()) else "fail"


def _params(weight: SerreWeight, **extra) -> dict:
    d = {"p": weight.p, "f": weight.f, "r_vec": list(weight.r_vec), "w": weight.w}
    d.update(extra)
    return d


def check_principal_series(weight: SerreWeight, n: int = 1) -> Report:
    """A_n^0, A_n^1 in ind (no quotient): invariance and the dimensions of their KZ-spans."""
    q = weight.q
    model = TreeModel(weight, e=1, radius=n + 1)
    ctx = QuotientContext.ball(model, n + 1, modulo_T=False)
    A0 = model.build_element("A0", n)
    A1 = model.build_element("A1", n)
    checks, dims = {}, {}
    checks["A0 invariant"] = bool(is_invariant(A0, ctx))
    checks["A1 invariant"] = bool(is_invariant(A1, ctx))
    c0 = kz_closure(A0, ctx, check_invariant=False)
    c1 = kz_closure(A1, ctx, check_invariant=False)
    dims["A0"], dims["A1"] = c0.dimension, c1.dimension
    r = weight.r
    if r > 0:
        checks["dim <A_n^0> = dim sigma"] = c0.dimension == weight.dim
    checks["dim <A_n^1> = q+1"] = c1.dimension == q + 1
    if r in (0, q - 1) and n >= 1:
        # w swaps Id and alpha with the sign (-1)^w for both extreme r
        sign = (-1) ** weight.w
        combo = A0 + model.build_element("A1", n - 1).scale(sign % weight.p)
        cc = kz_closure(combo, ctx, check_invariant=False)
        dims["A_n^0 + A_{n-1}^1"] = cc.dimension
        checks["combination is one-dimensional"] = cc.dimension == 1
    return Report("principal series invariants", _params(weight, n=n), _status(checks), dims, {}, [], checks)


def check_highest_vector_relations(weight: SerreWeight) -> Report:
    """The coset relations on the highest vector, summed directly in sigma."""
    p, f, q, r, w = weight.p, weight.f, weight.q, weight.r, weight.w
    gf = finite_field(p, f)
    lin = FqLinalg(gf)
    v = highest_vector(weight)
    sgn = (-1) ** w % p
    wv = lin.mul(lin.matvec(sym_matrix(gf, weight, (0, 1, 1, 0)), v), sgn)
    low = [lin.matvec(sym_matrix(gf, weight, (1, 0, lam, 1)), v) for lam in range(q)]
    sum_plain = np.zeros(weight.dim, dtype=DTYPE)
    sum_weighted = np.zeros(weight.dim, dtype=DTYPE)
    for lam, u in enumerate(low):
        sum_plain = lin.add(sum_plain, u)
        coef = gf.pow(lam, q - r - 1) if q - r - 1 else 1
        sum_weighted = lin.add(sum_weighted, lin.mul(u, coef))
    main = not np.any(lin.add(sum_weighted, wv))
    clause_i = not np.any(sum_plain)
    clause_ii = not np.any(lin.add(sum_plain, wv))
    checks = {}
    if 0 < r < q - 1:
        checks["main relation"] = main
    # (i) and (ii) are exclusive: (i) exactly when r < q-1, (ii) exactly when r = q-1
    checks["(i) holds iff r != q-1"] = clause_i == (r != q - 1)
    checks["(ii) holds iff r = q-1"] = clause_ii == (r == q - 1)
    info = {"main": main, "(i)": clause_i, "(ii)": clause_ii}
    rep = Report("highest vector relations", _params(weight), _status(checks), {}, {}, [], checks)
    rep.dimensions = {k: int(v) for k, v in info.items()}
    return rep


def generalized_t_suite(weight: SerreWeight, k_vec: Sequence[int], e: int, n: int = 1) -> Report:
    """t_n^{k_vec} modulo the lower t's: invariance, eigencharacter and the generated weight.

    The context is T(ind) (which is the G-span of t^0) plus the KZ-spans of the
    t_n^{i} with i < k componentwise, i != 0.  For k = 0 nothing is
    quotiented out.
    """
    k_vec = tuple(int(x) for x in k_vec)
    if e <= 1:
        raise ValueError("the generalized t elements need e > 1")
    if len(k_vec) != weight.f or any(not 0 <= kj <= rj // 2 - 1 for kj, rj in zip(k_vec, weight.r_vec)):
        if any(k_vec):
            raise ValueError(f"need 0 <= k_j <= floor(r_j/2) - 1, got {k_vec} for r = {weight.r_vec}")
    model = TreeModel(weight, e=e, radius=n)
    zero = all(kj == 0 for kj in k_vec)
    ctx = QuotientContext.ball(model, n, modulo_T=not zero)
    lower = [iv for iv in product(*(range(kj + 1) for kj in k_vec)) if iv != k_vec and any(iv)]
    for iv in lower:
        ctx.add_kz_span(model.build_element("t_vec", n, iv), label=f"t_{n}^{list(iv)}")
    x = model.build_element("t_vec", n, k_vec)
    checks = {}
    inv = is_invariant(x, ctx)
    checks["invariant"] = bool(inv)
    witnesses = [] if inv else [inv.witness]
    checks["nonzero"] = not ctx.contains(x)
    chars, dims = {}, {}
    expected_char = char_of_element("t_vec", k_vec, weight)
    chars["expected"] = expected_char.as_dict()
    target_dim = 1
    for kj, rj in zip(k_vec, weight.r_vec):
        target_dim *= rj - 2 * kj + 1
    dims["expected"] = target_dim
    if checks["invariant"] and checks["nonzero"]:
        cert = kz_closure(x, ctx, check_invariant=False)
        chars["computed"] = cert.character.as_dict()
        dims["computed"] = cert.dimension
        checks["character"] = cert.character == expected_char
        checks["dimension"] = cert.dimension == target_dim
        checks["irreducible"] = cert.irreducible
    rep = Report("generalized t weights", _params(weight, e=e, k_vec=list(k_vec), n=n), _status(checks), dims, chars, witnesses, checks)
    return rep


def shifted_s_obstruction(weight: SerreWeight, l: int, t: int, n: int = 1, e: int = 1) -> Report:
    """s_n^{r + p^l t} is not I(1)-invariant mod Im(T) + <s_n^{r + m p^l}, 1 <= m < t> when f > 1.

    The report records the delta_b witness and the unreachable exponents of the
    form r - p^k + t p^l (k != l) that its difference carries.
    """
    p, f, q, r = weight.p, weight.f, weight.q, weight.r
    if f < 2 or any(rj == 0 for rj in weight.r_vec):
        raise ValueError("needs f > 1 and every r_j > 0")
    k_top = r + p ** l * t
    if k_top > q - 1:
        raise ValueError(f"exponent r + p^l t = {k_top} exceeds q - 1")
    model = TreeModel(weight, e=e, radius=n)
    ctx = QuotientContext.ball(model, n)
    for m in range(1, t):
        ctx.add_kz_span(model.build_element("s", n, r + m * p ** l), label=f"s_{n}^{r + m * p ** l}")
    x = model.build_element("s", n, k_top)
    res = is_invariant(x, ctx)
    checks = {"not invariant": not res.ok}
    witnesses: list = []
    if not res.ok:
        checks["witness is delta_b"] = res.witness.startswith("delta_b")
        shapes = {r - p ** k + t * p ** l for k in range(f) if k != l}
        found = _unreachable_exponents(model, res.difference, n)
        hits = sorted(shapes & set(found))
        checks["difference has an exponent r - p^k + t p^l"] = bool(hits)
        witnesses.append({"generator": res.witness, "unreachable_exponents": found, "matching": hits})
    return Report("non-invariant shifted s", _params(weight, l=l, t=t, n=n, e=e), _status(checks), {}, {}, witnesses, checks)


def _unreachable_exponents(model: TreeModel, y: InducedElement, n: int) -> List[int]:
    """Exponents of the last digit outside E carried by y on its outermost side-0 sphere."""
    red = model.reducer
    region = Region.ball(model.q, n)
    cls = red.class_of(model.to_dense(y, region), region)
    off, nb = red.class_layout(region)[(0, n)]
    blocks = cls[off: off + nb * red.block_dim].reshape(nb, red.block_dim)
    tail = blocks[:, model.q * (model.dim - 1):]
    hit = np.any(tail, axis=0)
    return [int(e) for e, h in zip(red.free_exps, hit) if h]


def control_f1(weight: SerreWeight, e: int, t: int = 1, radius: int = 2) -> Report:
    """f = 1: s_n^{r+t} is invariant mod Im(T) from radius 2 on (when e > 1), and not at radius 1."""
    if weight.f != 1:
        raise ValueError("control run needs f = 1")
    model = TreeModel(weight, e=e, radius=radius)
    checks, wit = {}, []
    for n in range(1, radius + 1):
        ctx = QuotientContext.spheres(model, n)
        res = is_invariant(model.build_element("s", n, weight.r + t), ctx)
        checks[f"n={n} invariant"] = res.ok == (n >= 2)
        if not res.ok:
            wit.append({"n": n, "generator": res.witness})
    return Report("unramified-degree-one control", _params(weight, e=e, t=t), _status(checks), {}, {}, wit, checks)


# ---------------------------------------------------------------------------
# independent rank oracle


def oracle_quotient_rank(model: TreeModel, elements: Sequence[InducedElement], region: Region,
                         extra: Sequence[InducedElement] = (), modulo_T: bool = True) -> int:
    """dim span(elements) modulo T(functions on the shrunk region) + span(extra).

    Builds the image of T column by column with the explicit local formula and
    eliminates densely; shares nothing with the block reducer.
    """
    lin, d = model.lin, model.dim
    rows = []
    if modulo_T and region.n0 >= 1:
        inner = Region(model.q, region.n0 - 1, region.n1 - 1)
        for v in inner.vertices():
            for i in range(d):
                vec = np.zeros(d, dtype=DTYPE)
                vec[i] = 1
                rows.append(model.to_dense(model.hecke_T(model.at(v, vec)), region).reshape(-1))
    rows += [model.to_dense(x, region).reshape(-1) for x in extra]
    base = np.array(rows, dtype=DTYPE).reshape(len(rows), region.size * d)
    top = np.array([model.to_dense(x, region).reshape(-1) for x in elements], dtype=DTYPE)
    r0 = lin.rank(base) if len(rows) else 0
    return lin.rank(np.vstack([base, top])) - r0

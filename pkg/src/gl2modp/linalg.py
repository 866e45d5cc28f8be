"""Dense exact linear algebra over GF(q) on integer-coded numpy arrays.

Prime fields use plain modular arithmetic; extension fields use the lookup
tables of :class:`~gl2modp.gfq.GF` for elementwise work and a coordinate
decomposition for matrix products. Gaussian elimination runs in a small
numba kernel over the field tables.
"""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .gfq import GF, _pmod

DTYPE = np.int64


class FqLinalg:
    def __init__(self, fld: GF):
        self.field = fld
        self.p, self.m, self.q = fld.p, fld.m, fld.q
        self.prime = fld.m == 1
        if not self.prime:
            add, mul, neg, inv = fld.np_tables
            self.ADD = add.astype(DTYPE)
            self.MUL = mul.astype(DTYPE)
            self.NEG = neg.astype(DTYPE)
            self.INV = inv.astype(DTYPE)
            self.DIG = np.array(fld.digits, dtype=DTYPE)  # q x m coordinates
            self._pw = np.array([self.p**k for k in range(self.m)], dtype=DTYPE)
            # X^t reduced into the power basis, for t < 2m-1
            mod = list(fld.params.modulus)
            self._red = []
            for t in range(2 * self.m - 1):
                mono = [0] * t + [1]
                r = _pmod(mono, mod, self.p)
                self._red.append(r + [0] * (self.m - len(r)))
        else:
            self.INV = np.array(fld._inv, dtype=DTYPE)

    # elementwise ----------------------------------------------------------
    def asarray(self, a) -> np.ndarray:
        return np.asarray(a, dtype=DTYPE)

    def add(self, a, b):
        if self.prime:
            return (a + b) % self.p
        return self.ADD[a, b]

    def sub(self, a, b):
        if self.prime:
            return (a - b) % self.p
        return self.ADD[a, self.NEG[b]]

    def neg(self, a):
        if self.prime:
            return (-a) % self.p
        return self.NEG[a]

    def mul(self, a, b):
        if self.prime:
            return (a * b) % self.p
        return self.MUL[a, b]

    def inv(self, a):
        return self.INV[a]

    # products ---------------------------------------------------------------
    def _int_matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """A @ B for entries in [0, p); through float64 BLAS when the sums stay exact."""
        inner = A.shape[-1] if A.ndim else 1
        if inner * (self.p - 1) ** 2 * (2 * self.m - 1) < 2**52 and A.ndim and B.ndim:
            return np.rint(A.astype(np.float64) @ B.astype(np.float64)).astype(DTYPE)
        return A @ B

    def matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=DTYPE)
        B = np.asarray(B, dtype=DTYPE)
        if self.prime:
            return self._int_matmul(A, B) % self.p
        m, p = self.m, self.p
        Ac = [self.DIG[A][..., k] for k in range(m)]
        Bc = [self.DIG[B][..., k] for k in range(m)]
        prods = []
        for t in range(2 * m - 1):
            acc = None
            for i in range(max(0, t - m + 1), min(t, m - 1) + 1):
                term = self._int_matmul(Ac[i], Bc[t - i])
                acc = term if acc is None else acc + term
            prods.append(acc % p)
        out = None
        for k in range(m):
            ck = None
            for t in range(2 * m - 1):
                c = self._red[t][k]
                if c:
                    ck = prods[t] * c if ck is None else ck + prods[t] * c
            ck = np.zeros_like(prods[0]) if ck is None else ck % p
            out = ck * self._pw[k] if out is None else out + ck * self._pw[k]
        return out

    def matvec(self, A: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.matmul(A, v)

    def kron(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=DTYPE)
        B = np.asarray(B, dtype=DTYPE)
        out = self.mul(A[:, None, :, None], B[None, :, None, :])
        return out.reshape(A.shape[0] * B.shape[0], A.shape[1] * B.shape[1])

    def scale(self, c: int, A: np.ndarray) -> np.ndarray:
        return self.mul(np.asarray(A, dtype=DTYPE), c)

    # elimination ------------------------------------------------------------
    def rref(self, M: np.ndarray) -> Tuple[np.ndarray, List[int]]:
        M = np.array(M, dtype=np.int16 if self.q < 2**15 else np.int32, copy=True)
        if M.size == 0:
            return M.astype(DTYPE), []
        rank, piv = _rref_kernel(M, *self._kernel_tables)
        return M[:rank].astype(DTYPE), [int(c) for c in piv]

    @property
    def _kernel_tables(self):
        if not hasattr(self, "_ktab"):
            fld = self.field
            dt = np.int16 if self.q < 2**15 else np.int32
            self._ktab = tuple(np.array(t, dtype=dt) for t in (fld._mul, fld._add, fld._neg, fld._inv))
        return self._ktab

    def rank(self, M: np.ndarray) -> int:
        M = np.asarray(M, dtype=DTYPE)
        if M.size == 0:
            return 0
        # eliminate along the shorter side
        if M.shape[0] > M.shape[1]:
            M = M.T
        return len(self.rref(M)[1])

    def nullspace(self, M: np.ndarray, ncols: Optional[int] = None) -> np.ndarray:
        """Rows spanning {x : M x = 0}."""
        M = np.asarray(M, dtype=DTYPE)
        n = M.shape[1] if M.ndim == 2 else ncols
        if M.size == 0:
            return np.eye(n, dtype=DTYPE)
        R, piv = self.rref(M)
        free = [c for c in range(n) if c not in set(piv)]
        N = np.zeros((len(free), n), dtype=DTYPE)
        for k, c in enumerate(free):
            N[k, c] = 1
            if piv:
                N[k, piv] = self.neg(R[: len(piv), c])
        return N

    def solve_particular(self, M: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
        """Some x with M x = b, or None."""
        M = np.asarray(M, dtype=DTYPE)
        b = np.asarray(b, dtype=DTYPE).reshape(-1, 1)
        R, piv = self.rref(np.hstack([M, b]))
        n = M.shape[1]
        if piv and piv[-1] == n:
            return None
        x = np.zeros(n, dtype=DTYPE)
        for k, c in enumerate(piv):
            x[c] = R[k, n]
        return x


@njit(cache=True)
def _rref_kernel(M, MUL, ADD, NEG, INV):
    nr, nc = M.shape
    row = 0
    piv = np.empty(nc, np.int64)
    npv = 0
    for c in range(nc):
        if row >= nr:
            break
        pr = -1
        for i in range(row, nr):
            if M[i, c] != 0:
                pr = i
                break
        if pr < 0:
            continue
        if pr != row:
            for j in range(c, nc):
                t = M[row, j]
                M[row, j] = M[pr, j]
                M[pr, j] = t
        iv = INV[M[row, c]]
        for j in range(c, nc):
            M[row, j] = MUL[M[row, j], iv]
        for i in range(nr):
            if i != row and M[i, c] != 0:
                f = NEG[M[i, c]]
                for j in range(c, nc):
                    if M[row, j] != 0:
                        M[i, j] = ADD[M[i, j], MUL[f, M[row, j]]]
        piv[npv] = c
        npv += 1
        row += 1
    return row, piv[:npv]


class Echelon:
    """Incrementally maintained reduced row echelon basis of a subspace."""

    def __init__(self, lin: FqLinalg, ncols: int):
        self.lin = lin
        self.ncols = ncols
        self._rows = np.zeros((0, ncols), dtype=DTYPE)
        self.pivots: List[int] = []

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    def reduce(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=DTYPE)
        if not self.pivots:
            return v.copy()
        coeff = v[..., self.pivots]
        return self.lin.sub(v, self.lin.matmul(coeff, self._rows))

    def contains(self, v: np.ndarray) -> bool:
        return not np.any(self.reduce(v))

    def add(self, v: np.ndarray) -> bool:
        r = self.reduce(v)
        nz = np.nonzero(r)[0]
        if nz.size == 0:
            return False
        c = int(nz[0])
        r = self.lin.mul(r, self.lin.INV[r[c]])
        if self.pivots:
            f = self._rows[:, c]
            hit = np.nonzero(f)[0]
            if hit.size:
                self._rows[hit] = self.lin.sub(self._rows[hit], self.lin.mul(f[hit][:, None], r[None, :]))
        # keep pivots sorted so the basis is canonical
        pos = int(np.searchsorted(self.pivots, c))
        self.pivots.insert(pos, c)
        self._rows = np.insert(self._rows, pos, r, axis=0)
        return True

    def add_many(self, vs: Sequence[np.ndarray]) -> int:
        vs = [np.asarray(v, dtype=DTYPE) for v in vs]
        if len(vs) < 8:
            return sum(1 for v in vs if self.add(v))
        before = self.rank
        R, piv = self.lin.rref(np.vstack([self._rows] + [v.reshape(1, -1) for v in vs]))
        self._rows, self.pivots = R, piv
        return self.rank - before

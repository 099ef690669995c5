"""Exact linear algebra over Q(i): Gaussian elimination, ranks, nullspaces,
subspace arithmetic and Gram-orthogonal projections.

Pivoting is deterministic: elimination always takes the first nonzero entry
scanning rows top-down within the leftmost unfinished column, so every rank,
echelon form and nullspace basis is bit-reproducible.
"""

from __future__ import annotations

from typing import Iterable, List, Optional, Sequence

import numpy as np

from abch.scalars import QQi, ZERO, ONE


class ShapeMismatch(Exception):
    """Operands have incompatible shapes."""


class Mat:
    """Dense matrix over Q(i); rows is a list of lists of QQi."""

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows: Sequence[Sequence[QQi]], ncols: Optional[int] = None):
        self.rows = [list(r) for r in rows]
        self.nrows = len(self.rows)
        if self.nrows:
            self.ncols = len(self.rows[0])
            if any(len(r) != self.ncols for r in self.rows):
                raise ShapeMismatch("ragged rows")
        else:
            if ncols is None:
                raise ShapeMismatch("empty matrix needs explicit ncols")
            self.ncols = ncols

    # -- constructors --------------------------------------------------

    @staticmethod
    def zeros(nrows: int, ncols: int) -> "Mat":
        return Mat([[ZERO] * ncols for _ in range(nrows)], ncols=ncols)

    @staticmethod
    def identity(n: int) -> "Mat":
        m = Mat.zeros(n, n)
        for i in range(n):
            m.rows[i][i] = ONE
        return m

    @staticmethod
    def from_ints(rows: Sequence[Sequence[int]]) -> "Mat":
        return Mat([[QQi(x) for x in r] for r in rows], ncols=len(rows[0]) if rows else 0)

    @staticmethod
    def column(entries: Sequence[QQi]) -> "Mat":
        return Mat([[QQi.of(e)] for e in entries], ncols=1)

    def copy(self) -> "Mat":
        return Mat([list(r) for r in self.rows], ncols=self.ncols)

    # -- shape & access --------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def col(self, j: int) -> List[QQi]:
        return [self.rows[i][j] for i in range(self.nrows)]

    def cols(self) -> List[List[QQi]]:
        return [self.col(j) for j in range(self.ncols)]

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "Mat") -> "Mat":
        if self.shape != other.shape:
            raise ShapeMismatch(f"add {self.shape} vs {other.shape}")
        return Mat(
            [[self.rows[i][j] + other.rows[i][j] for j in range(self.ncols)] for i in range(self.nrows)],
            ncols=self.ncols,
        )

    def __sub__(self, other: "Mat") -> "Mat":
        if self.shape != other.shape:
            raise ShapeMismatch(f"sub {self.shape} vs {other.shape}")
        return Mat(
            [[self.rows[i][j] - other.rows[i][j] for j in range(self.ncols)] for i in range(self.nrows)],
            ncols=self.ncols,
        )

    def __neg__(self) -> "Mat":
        return Mat([[-x for x in r] for r in self.rows], ncols=self.ncols)

    def scale(self, c) -> "Mat":
        c = QQi.of(c)
        return Mat([[c * x for x in r] for r in self.rows], ncols=self.ncols)

    def __matmul__(self, other: "Mat") -> "Mat":
        if self.ncols != other.nrows:
            raise ShapeMismatch(f"matmul {self.shape} @ {other.shape}")
        out = Mat.zeros(self.nrows, other.ncols)
        for i in range(self.nrows):
            ri = self.rows[i]
            oi = out.rows[i]
            for k in range(self.ncols):
                a = ri[k]
                if a.is_zero():
                    continue
                rk = other.rows[k]
                for j in range(other.ncols):
                    b = rk[j]
                    if not b.is_zero():
                        oi[j] = oi[j] + a * b
        return out

    def matvec(self, v: Sequence[QQi]) -> List[QQi]:
        if self.ncols != len(v):
            raise ShapeMismatch("matvec shape")
        out = []
        for i in range(self.nrows):
            s = ZERO
            for k, a in enumerate(self.rows[i]):
                if not a.is_zero() and not v[k].is_zero():
                    s = s + a * v[k]
            out.append(s)
        return out

    def transpose(self) -> "Mat":
        return Mat([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)], ncols=self.nrows)

    def conj(self) -> "Mat":
        return Mat([[x.conj() for x in r] for r in self.rows], ncols=self.ncols)

    def conj_t(self) -> "Mat":
        return self.transpose().conj()

    def is_zero(self) -> bool:
        return all(x.is_zero() for r in self.rows for x in r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mat):
            return NotImplemented
        return self.shape == other.shape and all(
            self.rows[i][j] == other.rows[i][j] for i in range(self.nrows) for j in range(self.ncols)
        )

    def __repr__(self):
        body = "; ".join(", ".join(str(x) for x in r) for r in self.rows)
        return f"Mat[{self.nrows}x{self.ncols}]({body})"

    # -- stacking -------------------------------------------------------

    @staticmethod
    def vstack(blocks: Sequence["Mat"]) -> "Mat":
        blocks = [b for b in blocks]
        if not blocks:
            raise ShapeMismatch("vstack of nothing")
        ncols = blocks[0].ncols
        if any(b.ncols != ncols for b in blocks):
            raise ShapeMismatch("vstack ncols differ")
        rows: List[List[QQi]] = []
        for b in blocks:
            rows.extend(list(r) for r in b.rows)
        return Mat(rows, ncols=ncols)

    @staticmethod
    def hstack(blocks: Sequence["Mat"]) -> "Mat":
        blocks = [b for b in blocks]
        if not blocks:
            raise ShapeMismatch("hstack of nothing")
        nrows = blocks[0].nrows
        if any(b.nrows != nrows for b in blocks):
            raise ShapeMismatch("hstack nrows differ")
        rows = [sum((list(b.rows[i]) for b in blocks), []) for i in range(nrows)]
        return Mat(rows, ncols=sum(b.ncols for b in blocks))

    @staticmethod
    def block_diag(blocks: Sequence["Mat"]) -> "Mat":
        blocks = [b for b in blocks]
        nr = sum(b.nrows for b in blocks)
        nc = sum(b.ncols for b in blocks)
        out = Mat.zeros(nr, nc)
        r0 = c0 = 0
        for b in blocks:
            for i in range(b.nrows):
                out.rows[r0 + i][c0 : c0 + b.ncols] = list(b.rows[i])
            r0 += b.nrows
            c0 += b.ncols
        return out

    # -- elimination ----------------------------------------------------

    def rref(self):
        """Reduced row echelon form; returns (R, pivot_columns)."""
        m = self.copy()
        pivots: List[int] = []
        r = 0
        for c in range(m.ncols):
            if r >= m.nrows:
                break
            # first nonzero entry scanning rows top-down
            pr = None
            for i in range(r, m.nrows):
                if not m.rows[i][c].is_zero():
                    pr = i
                    break
            if pr is None:
                continue
            if pr != r:
                m.rows[r], m.rows[pr] = m.rows[pr], m.rows[r]
            pv = m.rows[r][c]
            m.rows[r] = [x / pv for x in m.rows[r]]
            for i in range(m.nrows):
                if i != r and not m.rows[i][c].is_zero():
                    f = m.rows[i][c]
                    m.rows[i] = [a - f * b for a, b in zip(m.rows[i], m.rows[r])]
            pivots.append(c)
            r += 1
        return m, pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> "Mat":
        """Columns form a basis of ker(self); shape ncols x nullity."""
        R, pivots = self.rref()
        free = [j for j in range(self.ncols) if j not in pivots]
        cols = []
        for f in free:
            v = [ZERO] * self.ncols
            v[f] = ONE
            for r, p in enumerate(pivots):
                v[p] = -R.rows[r][f]
            cols.append(v)
        out = Mat.zeros(self.ncols, len(cols))
        for j, v in enumerate(cols):
            for i in range(self.ncols):
                out.rows[i][j] = v[i]
        return out

    def column_space(self) -> "Mat":
        """Columns form a basis of the image: the pivot columns of self."""
        _, piv = self.rref()
        out = Mat.zeros(self.nrows, len(piv))
        for k, j in enumerate(piv):
            for i in range(self.nrows):
                out.rows[i][k] = self.rows[i][j]
        return out

    def solve(self, b: "Mat") -> Optional["Mat"]:
        """Solve self @ X = b exactly; None if inconsistent (least solution
        with free variables set to zero otherwise)."""
        if b.nrows != self.nrows:
            raise ShapeMismatch("solve shape")
        aug = Mat.hstack([self, b])
        R, pivots = aug.rref()
        n = self.ncols
        if any(p >= n for p in pivots):
            return None
        X = Mat.zeros(n, b.ncols)
        for r, p in enumerate(pivots):
            for j in range(b.ncols):
                X.rows[p][j] = R.rows[r][n + j]
        return X

    def inv(self) -> "Mat":
        if self.nrows != self.ncols:
            raise ShapeMismatch("inverse of non-square")
        X = self.solve(Mat.identity(self.nrows))
        if X is None or self @ X != Mat.identity(self.nrows):
            raise ZeroDivisionError("matrix is singular")
        return X

    def det(self) -> QQi:
        """Determinant by fraction elimination (square matrices)."""
        if self.nrows != self.ncols:
            raise ShapeMismatch("det of non-square")
        m = self.copy()
        n = m.nrows
        d = ONE
        for c in range(n):
            pr = None
            for i in range(c, n):
                if not m.rows[i][c].is_zero():
                    pr = i
                    break
            if pr is None:
                return ZERO
            if pr != c:
                m.rows[c], m.rows[pr] = m.rows[pr], m.rows[c]
                d = -d
            pv = m.rows[c][c]
            d = d * pv
            for i in range(c + 1, n):
                if not m.rows[i][c].is_zero():
                    f = m.rows[i][c] / pv
                    m.rows[i] = [a - f * b for a, b in zip(m.rows[i], m.rows[c])]
        return d

    # -- numeric bridge ----------------------------------------------------

    def to_numpy(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=complex)
        for i in range(self.nrows):
            for j in range(self.ncols):
                out[i, j] = self.rows[i][j].to_complex()
        return out


# -- subspaces ------------------------------------------------------------
#
# A subspace of Q(i)^n is represented by a Mat whose columns span it (not
# necessarily a basis).  `span_basis` reduces to a canonical basis.


def span_basis(A: Mat) -> Mat:
    """Canonical basis of the column span (pivot columns of the rref of A^T
    re-expressed through elimination on columns)."""
    if A.ncols == 0:
        return A
    R, pivots = A.transpose().rref()
    # Rows of R with pivots are a reduced generating set; transpose back.
    rows = [R.rows[r] for r in range(len(pivots))]
    out = Mat.zeros(A.nrows, len(pivots))
    for j, row in enumerate(rows):
        for i in range(A.nrows):
            out.rows[i][j] = row[i]
    return out


def subspace_dim(A: Mat) -> int:
    return A.rank()


def subspace_contains(A: Mat, v: Mat) -> bool:
    """Do the columns of v all lie in span(A)?"""
    return Mat.hstack([A, v]).rank() == A.rank()


def subspace_eq(A: Mat, B: Mat) -> bool:
    ra, rb = A.rank(), B.rank()
    return ra == rb and Mat.hstack([A, B]).rank() == ra


def subspace_sum(*parts: Mat) -> Mat:
    return span_basis(Mat.hstack(list(parts)))


def subspace_intersect(A: Mat, B: Mat) -> Mat:
    """Basis of span(A) ∩ span(B): solve A x = B y via the stacked kernel."""
    if A.nrows != B.nrows:
        raise ShapeMismatch("intersect ambient dims differ")
    if A.ncols == 0 or B.ncols == 0:
        return Mat.zeros(A.nrows, 0)
    K = Mat.hstack([A, -B]).nullspace()  # columns (x; y)
    xs = Mat(K.rows[: A.ncols], ncols=K.ncols)
    return span_basis(A @ xs)


def intersect_many(parts: Iterable[Mat]) -> Mat:
    parts = list(parts)
    out = parts[0]
    for p in parts[1:]:
        out = subspace_intersect(out, p)
    return out


# -- Gram inner products -----------------------------------------------------
#
# Convention: for coefficient column vectors u, v and Gram matrix
# G[a][b] = h(e_a, e_b), the inner product is <u,v> = u^T G conj(v),
# linear in u and antilinear in v.


def ip(u: Sequence[QQi], v: Sequence[QQi], G: Mat) -> QQi:
    Gv = G.matvec([x.conj() for x in v])
    s = ZERO
    for a, b in zip(u, Gv):
        if not a.is_zero() and not b.is_zero():
            s = s + a * b
    return s


def gram_adjoint(T: Mat, G_src: Mat, G_dst: Mat) -> Mat:
    """S with <T u, v>_dst = <u, S v>_src for all u, v."""
    return G_src.conj().inv() @ T.conj_t() @ G_dst.conj()


def basis_gram(B: Mat, G: Mat) -> Mat:
    """M[j][k] = <b_k, b_j> for the columns b_* of B."""
    cols = B.cols()
    m = len(cols)
    out = Mat.zeros(m, m)
    for j in range(m):
        for k in range(m):
            out.rows[j][k] = ip(cols[k], cols[j], G)
    return out


def project_coords(x: Sequence[QQi], B: Mat, G: Mat) -> List[QQi]:
    """Coordinates c with B c = Gram-orthogonal projection of x onto span(B)."""
    if B.ncols == 0:
        return []
    M = basis_gram(B, G)
    rhs = Mat.column([ip(x, b, G) for b in B.cols()])
    c = M.solve(rhs)
    if c is None:
        raise ZeroDivisionError("degenerate basis Gram")
    return c.col(0)


def project(x: Sequence[QQi], B: Mat, G: Mat) -> List[QQi]:
    if B.ncols == 0:
        return [ZERO] * len(list(x))
    return B.matvec(project_coords(x, B, G))


def projection_matrix_onto(B: Mat, G: Mat) -> Mat:
    """Matrix of the Gram-orthogonal projection onto span(B)."""
    n = B.nrows
    cols = []
    for j in range(n):
        e = [ZERO] * n
        e[j] = ONE
        cols.append(project(e, B, G))
    out = Mat.zeros(n, n)
    for j, c in enumerate(cols):
        for i in range(n):
            out.rows[i][j] = c[i]
    return out


def gram_schmidt(B: Mat, G: Mat) -> Mat:
    """Gram-orthogonalise the columns of B (no normalisation, stays exact)."""
    ws: List[List[QQi]] = []
    for b in B.cols():
        w = list(b)
        for prev in ws:
            denom = ip(prev, prev, G)
            coef = ip(b, prev, G) / denom
            w = [wi - coef * pi for wi, pi in zip(w, prev)]
        if any(not x.is_zero() for x in w):
            ws.append(w)
    out = Mat.zeros(B.nrows, len(ws))
    for j, w in enumerate(ws):
        for i in range(B.nrows):
            out.rows[i][j] = w[i]
    return out


def orthogonal_complement_in(B: Mat, W: Mat, G: Mat) -> Mat:
    """Basis of the Gram-orthogonal complement of span(W) inside span(B);
    requires span(W) ⊆ span(B)."""
    comp = []
    for b in B.cols():
        r = [x - y for x, y in zip(b, project(b, W, G))]
        comp.append(r)
    M = Mat.zeros(B.nrows, len(comp))
    for j, c in enumerate(comp):
        for i in range(B.nrows):
            M.rows[i][j] = c[i]
    return span_basis(M)


def cross_gram(U: Mat, V: Mat, G: Mat) -> Mat:
    """Matrix of inner products <u_a, v_b>; zero iff the spans are orthogonal."""
    ucols, vcols = U.cols(), V.cols()
    out = Mat.zeros(len(ucols), len(vcols))
    for a, u in enumerate(ucols):
        for b, v in enumerate(vcols):
            out.rows[a][b] = ip(u, v, G)
    return out

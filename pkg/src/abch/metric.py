"""Hermitian metrics on the bigraded algebra: Gram matrices, volume form,
the C-linear Hodge star and Gram adjoints.

The metric is given by a positive-definite Hermitian matrix H with
H[j][k] = h(phi_j, phi_k) on the (1,0)-coframe.  On monomials the inner
product is the product of two minor determinants,

    h(phi_I ^ phibar_J, phi_K ^ phibar_L) = det(H[I,K]) * det(conj(H)[J,L]),

distinct bidegrees being orthogonal.  The fundamental form is
omega = i * sum_jk H_jk phi_j ^ phibar_k and vol = omega^n / n!, which fixes
vol_coeff = i^n (-1)^{n(n-1)/2} det(H) on the canonical top monomial.

The star on A^{a,b} -> A^{n-b,n-a} is solved column-by-column from its
defining equation  alpha ^ *(conj beta) = h(alpha, beta) vol; the wedge
pairing with the complementary bidegree is a signed permutation, so the
solve is exact.  Gram adjoints are the primary notion of formal adjoint;
the star formulas -*delbar* and -*del* are verified against them in tests
rather than trusted.
"""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from abch.complexes import (
    Bidegree,
    BigradedComplex,
    FormVector,
    Monomial,
    Op,
    Space,
    basis_index,
    dim_pq,
    monomial_basis,
    wedge_monomials,
)
from abch.linalg import Mat, ShapeMismatch, gram_adjoint
from abch.model import ModelSyntaxError, parse_coeff
from abch.scalars import QQi, ONE, ZERO, I


class NotHermitian(Exception):
    """H differs from its conjugate transpose."""


class NotPositiveDefinite(Exception):
    """Some leading principal minor of H is not positive."""


class SingularPairing(Exception):
    """Internal inconsistency: the wedge pairing with the complementary
    bidegree failed to be a signed permutation."""


# -- shared combinatorics ----------------------------------------------------


@lru_cache(maxsize=None)
def _conj_perm(n: int, a: int, b: int) -> Tuple[Tuple[int, ...], int]:
    """Permutation J -> index of (anti, hol) in the (b,a)-basis, and the
    reordering sign (-1)^{ab}."""
    idx = basis_index(n, b, a)
    perm = tuple(idx[Monomial(m.anti, m.hol)] for m in monomial_basis(n, a, b))
    sign = -1 if (a * b) % 2 == 1 else 1
    return perm, sign


@lru_cache(maxsize=None)
def _pairing(n: int, c: int, d: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """For alpha_I in A^{c,d}: the unique K with alpha_I ^ tau_K = +-Top and
    the sign; returns (K-per-I, sign-per-I)."""
    target = monomial_basis(n, n - c, n - d)
    tidx = {m: k for k, m in enumerate(target)}
    ks: List[int] = []
    signs: List[int] = []
    for m in monomial_basis(n, c, d):
        comp = Monomial(
            tuple(sorted(set(range(1, n + 1)) - set(m.hol))),
            tuple(sorted(set(range(1, n + 1)) - set(m.anti))),
        )
        s, top = wedge_monomials(m, comp)
        if s == 0 or top is None:
            raise SingularPairing(f"no complementary monomial for {m}")
        ks.append(tidx[comp])
        signs.append(s)
    return tuple(ks), tuple(signs)


def _minor_det_exact(H: Mat, rows: Sequence[int], cols: Sequence[int]) -> QQi:
    sub = Mat([[H.rows[i - 1][j - 1] for j in cols] for i in rows], ncols=len(cols))
    if sub.nrows == 0:
        return ONE
    return sub.det()


class HermitianMetric:
    """Exact Hermitian structure for complex dimension n."""

    def __init__(self, n: int, H: Mat):
        if H.shape != (n, n):
            raise ShapeMismatch(f"H must be {n}x{n}")
        if H != H.conj_t():
            raise NotHermitian("H is not equal to its conjugate transpose")
        for k in range(1, n + 1):
            mk = _minor_det_exact(H, range(1, k + 1), range(1, k + 1))
            if not mk.is_real() or mk.re <= 0:
                raise NotPositiveDefinite(f"leading minor {k} is {mk}")
        self.n = n
        self.H = H
        # the fundamental form lives on the vector side: its coefficient
        # matrix is the inverse of the conjugated coframe Gram, and
        # vol = omega^n / n! picks up 1/det(H)
        self.omega_matrix = H.conj().inv()
        det = _minor_det_exact(H, range(1, n + 1), range(1, n + 1))
        i_pow = [ONE, I, -ONE, -I][n % 4]
        sign = -ONE if (n * (n - 1) // 2) % 2 == 1 else ONE
        self.vol_coeff: QQi = i_pow * sign / det
        self._gram: Dict[Bidegree, Mat] = {}
        self._star: Dict[Bidegree, Mat] = {}

    # -- Gram matrices ---------------------------------------------------

    def gram(self, b: Bidegree) -> Mat:
        if b not in self._gram:
            p, q = b
            basis = monomial_basis(self.n, p, q)
            Hc = self.H.conj()
            G = Mat.zeros(len(basis), len(basis))
            for a_i, ma in enumerate(basis):
                for b_i, mb in enumerate(basis):
                    G.rows[a_i][b_i] = _minor_det_exact(self.H, ma.hol, mb.hol) * _minor_det_exact(
                        Hc, ma.anti, mb.anti
                    )
            self._gram[b] = G
        return self._gram[b]

    def gram_space(self, space: Space) -> Mat:
        return Mat.block_diag([self.gram(b) for b in space]) if space else Mat.zeros(0, 0)

    def ip(self, u: Sequence[QQi], v: Sequence[QQi], space: Space) -> QQi:
        from abch.linalg import ip as _ip

        return _ip(u, v, self.gram_space(space))

    # -- fundamental form -----------------------------------------------

    def fundamental_form(self) -> FormVector:
        n = self.n
        idx = basis_index(n, 1, 1)
        coeffs = [ZERO] * dim_pq(n, 1, 1)
        for j in range(1, n + 1):
            for k in range(1, n + 1):
                coeffs[idx[Monomial((j,), (k,))]] = I * self.omega_matrix.rows[j - 1][k - 1]
        return FormVector(n, (1, 1), tuple(coeffs))

    # -- Hodge star --------------------------------------------------------

    def star(self, b: Bidegree) -> Op:
        """The C-linear star A^{a,b} -> A^{n-b,n-a}."""
        if b not in self._star:
            n = self.n
            a, bb = b
            perm, conj_sign = _conj_perm(n, a, bb)
            ks, signs = _pairing(n, bb, a)
            G = self.gram((bb, a))
            rows_out = dim_pq(n, n - bb, n - a)
            M = Mat.zeros(rows_out, dim_pq(n, a, bb))
            for j in range(dim_pq(n, a, bb)):
                jp = perm[j]
                scale = self.vol_coeff if conj_sign == 1 else -self.vol_coeff
                # solve W sigma = scale * G[:, jp] with W the signed permutation
                for i in range(G.nrows):
                    entry = scale * G.rows[i][jp]
                    if not entry.is_zero():
                        s = signs[i]
                        M.rows[ks[i]][j] = entry if s == 1 else -entry
            self._star[b] = M
        src: Space = (b,)
        dst: Space = ((self.n - b[1], self.n - b[0]),)
        return Op(src=src, dst=dst, mat=self._star[b])

    # -- adjoints -----------------------------------------------------------

    def adjoint(self, op: Op) -> Op:
        return Op(
            src=op.dst,
            dst=op.src,
            mat=gram_adjoint(op.mat, self.gram_space(op.src), self.gram_space(op.dst)),
        )


def identity_metric(n: int) -> HermitianMetric:
    return HermitianMetric(n, Mat.identity(n))


def diagonal_metric(entries: Sequence[int]) -> HermitianMetric:
    n = len(entries)
    H = Mat.zeros(n, n)
    for i, e in enumerate(entries):
        H.rows[i][i] = QQi(e)
    return HermitianMetric(n, H)


def build_metric(comp_or_n, H: Mat) -> HermitianMetric:
    """Build and validate the metric; accepts n or a BigradedComplex."""
    n = comp_or_n.n if isinstance(comp_or_n, BigradedComplex) else int(comp_or_n)
    return HermitianMetric(n, H)


def is_kahler(comp: BigradedComplex, metric: HermitianMetric) -> bool:
    """Exact test that the fundamental form is d-closed."""
    omega = metric.fundamental_form()
    v = list(omega.coeffs)
    del_w = comp.del_((1, 1)).matvec(v)
    dbar_w = comp.delbar((1, 1)).matvec(v)
    return all(c.is_zero() for c in del_w) and all(c.is_zero() for c in dbar_w)


# -- metric files -------------------------------------------------------------

_HENTRY_RE = re.compile(r"^H\[([0-9]+)\]\[([0-9]+)\]$")


def parse_metric(text: str) -> Tuple[int, Mat]:
    """Parse a `.herm` file: `n = <int>` then `H[i][j] = <coeff>` for i <= j;
    omitted entries default to the identity."""
    n: Optional[int] = None
    entries: Dict[Tuple[int, int], QQi] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelSyntaxError("statement needs '='", lineno, 1)
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        if lhs == "n":
            n = int(rhs)
            continue
        m = _HENTRY_RE.match(lhs)
        if not m:
            raise ModelSyntaxError(f"bad statement {lhs!r}", lineno, 1)
        if n is None:
            raise ModelSyntaxError("n must be declared first", lineno, 1)
        i, j = int(m.group(1)), int(m.group(2))
        if not (1 <= i <= n and 1 <= j <= n):
            raise ModelSyntaxError(f"index H[{i}][{j}] outside 1..{n}", lineno, 1)
        if i > j:
            raise ModelSyntaxError("give only the upper triangle i <= j", lineno, 1)
        entries[(i, j)] = parse_coeff(rhs, lineno, 1)
    if n is None:
        raise ModelSyntaxError("missing `n = <int>`", 0, 0)
    H = Mat.identity(n)
    for (i, j), c in entries.items():
        H.rows[i - 1][j - 1] = c
        H.rows[j - 1][i - 1] = c.conj()
    return n, H


def load_metric(path: str) -> Tuple[int, Mat]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_metric(fh.read())


# -- numeric backend -----------------------------------------------------------


def _minor_det_np(H: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> complex:
    if not rows:
        return 1.0 + 0j
    sub = H[np.ix_([i - 1 for i in rows], [j - 1 for j in cols])]
    return complex(np.linalg.det(sub))


class NumericMetric:
    """Floating-point mirror of HermitianMetric; accepts arbitrary
    (possibly irrational) positive-definite Hermitian H."""

    def __init__(self, n: int, H: np.ndarray):
        H = np.asarray(H, dtype=complex)
        if H.shape != (n, n):
            raise ShapeMismatch(f"H must be {n}x{n}")
        if not np.allclose(H, H.conj().T):
            raise NotHermitian("H is not Hermitian")
        if np.linalg.eigvalsh(H).min() <= 0:
            raise NotPositiveDefinite("H is not positive definite")
        self.n = n
        self.H = H
        i_pow = (1j) ** (n % 4)
        sign = -1.0 if (n * (n - 1) // 2) % 2 == 1 else 1.0
        self.vol_coeff = i_pow * sign / complex(np.linalg.det(H))
        self._gram: Dict[Bidegree, np.ndarray] = {}
        self._star: Dict[Bidegree, np.ndarray] = {}

    @staticmethod
    def from_exact(metric: HermitianMetric) -> "NumericMetric":
        return NumericMetric(metric.n, metric.H.to_numpy())

    def gram(self, b: Bidegree) -> np.ndarray:
        if b not in self._gram:
            p, q = b
            basis = monomial_basis(self.n, p, q)
            Hc = self.H.conj()
            G = np.zeros((len(basis), len(basis)), dtype=complex)
            for a_i, ma in enumerate(basis):
                for b_i, mb in enumerate(basis):
                    G[a_i, b_i] = _minor_det_np(self.H, ma.hol, mb.hol) * _minor_det_np(
                        Hc, ma.anti, mb.anti
                    )
            self._gram[b] = G
        return self._gram[b]

    def gram_space(self, space: Space) -> np.ndarray:
        blocks = [self.gram(b) for b in space]
        if not blocks:
            return np.zeros((0, 0), dtype=complex)
        size = sum(g.shape[0] for g in blocks)
        G = np.zeros((size, size), dtype=complex)
        off = 0
        for g in blocks:
            G[off : off + g.shape[0], off : off + g.shape[0]] = g
            off += g.shape[0]
        return G

    def star(self, b: Bidegree) -> np.ndarray:
        if b not in self._star:
            n = self.n
            a, bb = b
            perm, conj_sign = _conj_perm(n, a, bb)
            ks, signs = _pairing(n, bb, a)
            G = self.gram((bb, a))
            M = np.zeros((dim_pq(n, n - bb, n - a), dim_pq(n, a, bb)), dtype=complex)
            for j in range(dim_pq(n, a, bb)):
                jp = perm[j]
                scale = self.vol_coeff * conj_sign
                for i in range(G.shape[0]):
                    M[ks[i], j] = signs[i] * scale * G[i, jp]
            self._star[b] = M
        return self._star[b]

    def adjoint_mat(self, T: np.ndarray, src: Space, dst: Space) -> np.ndarray:
        Gs = self.gram_space(src)
        Gd = self.gram_space(dst)
        return np.linalg.inv(Gs.conj()) @ T.conj().T @ Gd.conj()

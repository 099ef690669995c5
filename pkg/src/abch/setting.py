"""Operator providers shared by the Laplacian and cohomology engines.

A *setting* bundles the bigraded differentials with a metric and exposes a
uniform vocabulary: `del_op`, `delbar_op`, their composites, adjoints and
total-degree d.  ExactSetting works over Q(i) matrices; NumericSetting is its
floating-point mirror (optionally with the differentials rescaled, used by
the Fourier covering models where the true twist carries a factor 2*pi).

Any object with `.n`, `.dim(b)`, `.del_(b)`, `.delbar(b)` can serve as the
operator source, so invariant complexes and per-mode Fourier blocks share
the engines.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from abch.complexes import Bidegree, Op, Space, total_bidegrees
from abch.linalg import Mat, ShapeMismatch
from abch.metric import HermitianMetric, NumericMetric


def compose(op2: Op, op1: Op) -> Op:
    """op2 after op1; validates the interface spaces match."""
    if op1.dst != op2.src:
        raise ShapeMismatch(f"compose: {op1.dst} -> {op2.src}")
    return Op(src=op1.src, dst=op2.dst, mat=op2.mat @ op1.mat)


def add_ops(*ops: Op) -> Op:
    first = ops[0]
    for o in ops[1:]:
        if o.src != first.src or o.dst != first.dst:
            raise ShapeMismatch("adding operators with different spaces")
    m = first.mat
    for o in ops[1:]:
        m = m + o.mat
    return Op(src=first.src, dst=first.dst, mat=m)


class ExactSetting:
    """Exact differentials + metric for one bigraded complex."""

    def __init__(self, ops, metric: HermitianMetric):
        self.ops = ops
        self.metric = metric
        self.n = ops.n
        if metric.n != ops.n:
            raise ShapeMismatch("metric dimension differs from complex dimension")

    def dim(self, b: Bidegree) -> int:
        return self.ops.dim(b)

    def space_dim(self, space: Space) -> int:
        return sum(self.ops.dim(b) for b in space)

    def gram(self, space: Space) -> Mat:
        return self.metric.gram_space(space)

    def del_op(self, b: Bidegree) -> Op:
        p, q = b
        return Op(src=(b,), dst=((p + 1, q),), mat=self.ops.del_(b))

    def delbar_op(self, b: Bidegree) -> Op:
        p, q = b
        return Op(src=(b,), dst=((p, q + 1),), mat=self.ops.delbar(b))

    def deldbar_op(self, b: Bidegree) -> Op:
        """del delbar : A^{p,q} -> A^{p+1,q+1}."""
        p, q = b
        return compose(self.del_op((p, q + 1)), self.delbar_op(b))

    def adjoint(self, op: Op) -> Op:
        return self.metric.adjoint(op)

    def block_op(self, src: Space, dst: Space, blocks: Dict) -> Op:
        """Assemble an Op from per-(dst,src)-bidegree blocks."""
        mat = _assemble_blocks_exact(self, src, dst, blocks)
        return Op(src=src, dst=dst, mat=mat)

    def total_d(self, k: int) -> Op:
        src = total_bidegrees(self.n, k)
        dst = total_bidegrees(self.n, k + 1)
        blocks = {}
        for b in src:
            p, q = b
            if (p + 1, q) in dst:
                blocks[((p + 1, q), b)] = self.ops.del_(b)
            if (p, q + 1) in dst:
                blocks[((p, q + 1), b)] = self.ops.delbar(b)
        return self.block_op(src, dst, blocks)

    def zero_op(self, src: Space, dst: Space) -> Op:
        return Op(src=src, dst=dst, mat=Mat.zeros(self.space_dim(dst), self.space_dim(src)))


def _assemble_blocks_exact(setting, src: Space, dst: Space, blocks: Dict) -> Mat:
    row_off = {}
    off = 0
    for b in dst:
        row_off[b] = off
        off += setting.dim(b)
    nrows = off
    col_off = {}
    off = 0
    for b in src:
        col_off[b] = off
        off += setting.dim(b)
    mat = Mat.zeros(nrows, off)
    for (db, sb), block in blocks.items():
        r0, c0 = row_off[db], col_off[sb]
        if block.nrows != setting.dim(db) or block.ncols != setting.dim(sb):
            raise ShapeMismatch(f"block ({db},{sb}) has shape {block.shape}")
        for i in range(block.nrows):
            for j in range(block.ncols):
                mat.rows[r0 + i][c0 + j] = block.rows[i][j]
    return mat


class NumericSetting:
    """Floating-point mirror of an ExactSetting.

    `scale` multiplies the differentials only (not the metric); covering
    models use it to restore the 2*pi factor carried by Fourier twists.
    """

    def __init__(self, exact: ExactSetting, scale: float = 1.0, nmetric: Optional[NumericMetric] = None):
        self.exact = exact
        self.n = exact.n
        self.scale = scale
        self.metric = nmetric if nmetric is not None else NumericMetric.from_exact(exact.metric)
        self._del: Dict[Bidegree, np.ndarray] = {}
        self._delbar: Dict[Bidegree, np.ndarray] = {}

    def dim(self, b: Bidegree) -> int:
        return self.exact.dim(b)

    def space_dim(self, space: Space) -> int:
        return self.exact.space_dim(space)

    def gram(self, space: Space) -> np.ndarray:
        return self.metric.gram_space(space)

    def del_op(self, b: Bidegree) -> Op:
        if b not in self._del:
            self._del[b] = self.exact.ops.del_(b).to_numpy() * self.scale
        p, q = b
        return Op(src=(b,), dst=((p + 1, q),), mat=self._del[b])

    def delbar_op(self, b: Bidegree) -> Op:
        if b not in self._delbar:
            self._delbar[b] = self.exact.ops.delbar(b).to_numpy() * self.scale
        p, q = b
        return Op(src=(b,), dst=((p, q + 1),), mat=self._delbar[b])

    def deldbar_op(self, b: Bidegree) -> Op:
        p, q = b
        return compose(self.del_op((p, q + 1)), self.delbar_op(b))

    def adjoint(self, op: Op) -> Op:
        return Op(src=op.dst, dst=op.src, mat=self.metric.adjoint_mat(op.mat, op.src, op.dst))

    def total_d(self, k: int) -> Op:
        src = total_bidegrees(self.n, k)
        dst = total_bidegrees(self.n, k + 1)
        row_off, off = {}, 0
        for b in dst:
            row_off[b] = off
            off += self.dim(b)
        nrows = off
        col_off, off = {}, 0
        for b in src:
            col_off[b] = off
            off += self.dim(b)
        mat = np.zeros((nrows, off), dtype=complex)
        for b in src:
            p, q = b
            if (p + 1, q) in row_off:
                blk = self.del_op(b).mat
                mat[row_off[(p + 1, q)] : row_off[(p + 1, q)] + blk.shape[0], col_off[b] : col_off[b] + blk.shape[1]] = blk
            if (p, q + 1) in row_off:
                blk = self.delbar_op(b).mat
                mat[row_off[(p, q + 1)] : row_off[(p, q + 1)] + blk.shape[0], col_off[b] : col_off[b] + blk.shape[1]] = blk
        return Op(src=src, dst=dst, mat=mat)

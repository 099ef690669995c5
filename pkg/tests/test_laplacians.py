"""Laplacian assembly: self-adjointness, kernels, spectra, dualities."""

import numpy as np
import pytest

from abch.complexes import build_complex, total_bidegrees
from abch.linalg import Mat, ip, subspace_eq
from abch.metric import diagonal_metric, identity_metric
from abch.model import parse_model
from abch.scalars import QQi
from abch.setting import ExactSetting, NumericSetting
from abch.laplacians import (
    ALL_KINDS,
    LaplacianBundle,
    LaplacianKind,
    assemble,
    box_kernel_intersection,
    duality_residuals,
    fourth_order_part,
    harmonic_characterization,
    harmonic_space,
    kahler_identities,
    kernel_coincidence,
    prestage_box_check,
    spectral_gap,
    spectrum,
    verify_gap_inequality,
)

TORUS1 = parse_model("n=1\nname = torus1")
TORUS2 = parse_model("n=2\nname = torus2")
IWASAWA = parse_model("n=3\nname = iwasawa\nd phi3 = -1 * phi1 ^ phi2")
KT = parse_model("n=2\nname = kt\nd phi2 = phi1 ^ phibar1")


def settings_for(model, metric=None):
    comp = build_complex(model)
    metric = metric or identity_metric(comp.n)
    return ExactSetting(comp, metric)


@pytest.fixture(scope="module")
def iw():
    return settings_for(IWASAWA)


@pytest.fixture(scope="module")
def kt():
    return settings_for(KT)


def all_bidegrees(n):
    return [(p, q) for p in range(n + 1) for q in range(n + 1)]


def test_torus_laplacians_vanish():
    s = settings_for(TORUS2)
    for b in all_bidegrees(2):
        for kind in ALL_KINDS:
            assert assemble(s, kind, b).mat.is_zero()
            # harmonic space is everything
            assert harmonic_space(s, kind, b).ncols == assemble(s, kind, b).mat.ncols


def test_gram_self_adjoint_and_psd(iw, kt):
    for s in (iw, kt):
        for b in all_bidegrees(s.n):
            for kind in ALL_KINDS:
                op = assemble(s, kind, b)
                G = s.gram(op.src)
                m = op.mat
                # <Lu, v> = <u, Lv> on basis vectors
                dim = m.ncols
                for a in range(dim):
                    ea = [QQi(int(i == a)) for i in range(dim)]
                    for c in range(a, dim):
                        ec = [QQi(int(i == c)) for i in range(dim)]
                        assert ip(m.matvec(ea), ec, G) == ip(ea, m.matvec(ec), G)
                if dim:
                    ev = np.linalg.eigvalsh(
                        np.linalg.cholesky(G.to_numpy()).conj().T
                        @ m.to_numpy()
                        @ np.linalg.inv(np.linalg.cholesky(G.to_numpy()).conj().T)
                    )
                    assert ev.min() > -1e-9


def test_iwasawa_kernel_dims_at_1_0(iw):
    assert harmonic_space(iw, LaplacianKind.DELBAR, (1, 0)).ncols == 3
    assert harmonic_space(iw, LaplacianKind.BC, (1, 0)).ncols == 2


def test_kernels_match_characterisations(iw, kt):
    for s in (iw, kt):
        for b in all_bidegrees(s.n):
            for kind in ALL_KINDS:
                lhs = harmonic_space(s, kind, b)
                rhs = harmonic_characterization(s, kind, b)
                assert subspace_eq(lhs, rhs)


def test_kernel_coincidence_both_metrics():
    for model, diag in ((IWASAWA, [2, 1, 1]), (KT, [2, 1]), (TORUS2, [2, 1])):
        for metric in (None, diagonal_metric(diag)):
            s = settings_for(model, metric)
            for b in all_bidegrees(s.n):
                assert kernel_coincidence(s, b)


def test_duality_relations():
    for model, diag in ((IWASAWA, [2, 1, 1]), (KT, [2, 1])):
        for metric in (None, diagonal_metric(diag)):
            s = settings_for(model, metric)
            for b in all_bidegrees(s.n):
                assert all(duality_residuals(s, b).values())


def test_kahler_identities_on_tori():
    for model, diag in ((TORUS1, [3]), (TORUS2, [2, 1])):
        for metric in (None, diagonal_metric(diag)):
            s = settings_for(model, metric)
            rep = kahler_identities(s)
            assert all(rep.values()), rep


def test_box_kernel_is_intersection(iw, kt):
    for s in (iw, kt):
        for b in all_bidegrees(s.n):
            assert box_kernel_intersection(s, b)


def test_tilde_fourth_order_on_kahler():
    s = settings_for(TORUS2, diagonal_metric([2, 1]))
    for b in all_bidegrees(2):
        lapd = assemble(s, LaplacianKind.DELBAR, b).mat
        sq = lapd @ lapd
        assert (fourth_order_part(s, LaplacianKind.BC_TILDE, b).mat - sq).is_zero()
        assert (fourth_order_part(s, LaplacianKind.A_TILDE, b).mat - sq).is_zero()


def test_prestage_box_on_kahler():
    s = settings_for(TORUS2, diagonal_metric([2, 1]))
    for b in all_bidegrees(2):
        assert prestage_box_check(s, b)


def test_d_plus_dstar_squared_is_blockwise_laplacian(iw):
    """(d + d*)^2 on the full complex equals the graded direct sum of the
    degree-k Hodge Laplacians."""
    s = iw
    n = s.n
    degrees = list(range(2 * n + 1))
    spaces = [total_bidegrees(n, k) for k in degrees]
    dims = [s.space_dim(sp) for sp in spaces]
    offs = [0]
    for d in dims:
        offs.append(offs[-1] + d)
    total = offs[-1]
    D = Mat.zeros(total, total)
    for k in range(2 * n):
        blk = s.total_d(k).mat
        for i in range(blk.nrows):
            for j in range(blk.ncols):
                D.rows[offs[k + 1] + i][offs[k] + j] = blk.rows[i][j]
    G = Mat.block_diag([s.gram(sp) for sp in spaces])
    from abch.linalg import gram_adjoint

    Dstar = gram_adjoint(D, G, G)
    S = D + Dstar
    S2 = S @ S
    expected = Mat.block_diag([assemble(s, LaplacianKind.D, spaces[k][0]).mat for k in degrees])
    assert S2 == expected


def test_numeric_crosscheck_and_gaps(iw, kt):
    for s in (iw, kt):
        numeric = NumericSetting(s)
        for b in all_bidegrees(s.n):
            bundle = LaplacianBundle.build(s, numeric, b)
            assert bundle.crosscheck() == []
            for kind in ALL_KINDS:
                ev = bundle.spectra[kind]
                assert all(x >= 0 for x in ev)


def test_rayleigh_gap_property(kt):
    numeric = NumericSetting(kt)
    for b in all_bidegrees(kt.n):
        for kind in (LaplacianKind.DELBAR, LaplacianKind.BC, LaplacianKind.A_BOX):
            rep = verify_gap_inequality(kt, numeric, kind, b, samples=200)
            assert rep["ok"], rep


def test_spectrum_zero_padding():
    s = settings_for(TORUS2)
    numeric = NumericSetting(s)
    op = assemble(numeric, LaplacianKind.DELBAR, (1, 1))
    ev = spectrum(op.mat, numeric.gram(op.src))
    assert np.all(ev == 0)
    assert spectral_gap(ev) is None

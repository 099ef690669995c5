"""Fourier coverings: mode sets, Gamma-dimensions, gaps, independence."""

import math
from fractions import Fraction

import pytest

from abch.complexes import dim_pq
from abch.covering import (
    CoveringSpec,
    NotASublattice,
    NotGammaInvariant,
    build_cover,
    gamma_dimension,
    gamma_tables,
    gap_and_closed_image,
    hermite_normal_form,
    metric_independence_check,
    parse_cover,
)
from abch.laplacians import LaplacianKind, assemble, spectrum
from abch.linalg import Mat, subspace_eq
from abch.scalars import QQi, ONE

SPEC2 = CoveringSpec(n=1, base=((1, 0), (0, 1)), sub=((2, 0), (0, 1)), radius=Fraction(1))


@pytest.fixture(scope="module")
def cover2():
    return build_cover(SPEC2)


def test_parse_cover():
    text = "n = 1\nbase = [[1, 0], [0, 1]]\nsub = [[2, 0], [0, 1]]\nradius = 1\n"
    spec = parse_cover(text)
    assert spec == SPEC2


def test_index_and_mode_set(cover2):
    assert cover2.index == 2
    mus = sorted(tuple(m.mu) for m in cover2.modes)
    expected = sorted(
        [
            (Fraction(0), Fraction(0)),
            (Fraction(1, 2), Fraction(0)),
            (Fraction(-1, 2), Fraction(0)),
            (Fraction(1), Fraction(0)),
            (Fraction(-1), Fraction(0)),
            (Fraction(0), Fraction(1)),
            (Fraction(0), Fraction(-1)),
        ]
    )
    assert mus == expected


def test_trivial_cover_is_base_complex():
    spec = CoveringSpec(n=1, base=((1, 0), (0, 1)), sub=((1, 0), (0, 1)), radius=Fraction(1, 2))
    fc = build_cover(spec)
    assert fc.index == 1
    assert fc.mode_count() == 1
    assert fc.modes[0].is_zero
    st = fc.settings[0]
    for p in range(2):
        for q in range(2):
            assert st.del_op((p, q)).mat.is_zero()
            assert st.delbar_op((p, q)).mat.is_zero()


def test_mode_complex_identities(cover2):
    for st in cover2.settings:
        ops = st.ops
        for p in range(2):
            for q in range(2):
                b = (p, q)
                assert (ops.del_((p + 1, q)) @ ops.del_(b)).is_zero()
                assert (ops.delbar((p, q + 1)) @ ops.delbar(b)).is_zero()
                anti = ops.del_((p, q + 1)) @ ops.delbar(b) + ops.delbar((p + 1, q)) @ ops.del_(b)
                assert anti.is_zero()


def test_twist_matches_frequency(cover2):
    # the (0,0) -> (1,0) reduced matrix is multiplication by i mu^{1,0}
    for md, st in zip(cover2.modes, cover2.settings):
        a, b = md.mu
        m = st.del_op((0, 0)).mat
        assert m.rows[0][0] == QQi(Fraction(b, 2), Fraction(a, 2))


def test_gamma_dimension_harmonics(cover2):
    K = cover2.total_kernel(LaplacianKind.DELBAR, (0, 0))
    assert K.ncols == 1  # zero mode only
    assert gamma_dimension(cover2, K, ((0, 0),)) == Fraction(1, 2)


def test_gamma_dimension_trivial_group():
    spec = CoveringSpec(n=1, base=((1, 0), (0, 1)), sub=((1, 0), (0, 1)), radius=Fraction(1))
    fc = build_cover(spec)
    V = fc.total_kernel(LaplacianKind.DELBAR, (0, 0))
    assert gamma_dimension(fc, V, ((0, 0),)) == V.rank()


def test_gamma_dimension_zero_iff_zero(cover2):
    V = Mat.zeros(cover2.total_dim((0, 0)), 0)
    assert gamma_dimension(cover2, V, ((0, 0),)) == 0
    W = cover2.total_kernel(LaplacianKind.DELBAR, (0, 0))
    assert gamma_dimension(cover2, W, ((0, 0),)) > 0


def test_gamma_dimension_additivity(cover2):
    # full mode blocks are invariant and mutually orthogonal
    w = dim_pq(1, 0, 0)
    V = cover2.embed_mode_basis(0, Mat.identity(w), ((0, 0),))
    W = cover2.embed_mode_basis(1, Mat.identity(w), ((0, 0),))
    dv = gamma_dimension(cover2, V, ((0, 0),))
    dw = gamma_dimension(cover2, W, ((0, 0),))
    dvw = gamma_dimension(cover2, Mat.hstack([V, W]), ((0, 0),))
    assert dvw == dv + dw


def test_not_gamma_invariant(cover2):
    # mix two modes with different characters in a single line
    w = dim_pq(1, 0, 0)
    zero_idx = next(i for i, m in enumerate(cover2.modes) if m.is_zero)
    half_idx = next(i for i, m in enumerate(cover2.modes) if m.mu == (Fraction(1, 2), Fraction(0)))
    v = Mat.zeros(cover2.total_dim((0, 0)), 1)
    v.rows[zero_idx * w][0] = ONE
    v.rows[half_idx * w][0] = ONE
    with pytest.raises(NotGammaInvariant):
        gamma_dimension(cover2, v, ((0, 0),))


def test_integer_mu_modes_are_invariant(cover2):
    # mu = (1,0) differs from mu = 0 by a base-dual vector: same character,
    # so mixing those two blocks is allowed
    w = dim_pq(1, 0, 0)
    zero_idx = next(i for i, m in enumerate(cover2.modes) if m.is_zero)
    one_idx = next(i for i, m in enumerate(cover2.modes) if m.mu == (Fraction(1), Fraction(0)))
    v = Mat.zeros(cover2.total_dim((0, 0)), 1)
    v.rows[zero_idx * w][0] = ONE
    v.rows[one_idx * w][0] = ONE
    assert gamma_dimension(cover2, v, ((0, 0),)) == Fraction(1, 2)


def test_gamma_tables(cover2):
    rep = gamma_tables(cover2)
    assert rep.index == 2
    for t in ("bc", "a", "del", "delbar"):
        for p in range(2):
            for q in range(2):
                assert rep.grids[t][p][q] == Fraction(dim_pq(1, p, q), 2)
    assert rep.grids["deRham"] == [Fraction(1, 2), Fraction(1), Fraction(1, 2)]
    assert rep.inequality_ok and rep.equality_everywhere
    assert rep.monotonicity_ok and rep.harmonic_support_ok


def test_gap_ratio(cover2):
    rep = gamma_tables(cover2)
    gd, gdb, gdl = rep.gaps["d"], rep.gaps["delbar"], rep.gaps["del"]
    assert abs(gd - 2 * gdb) <= 1e-9 * gd
    assert abs(gdl - gdb) <= 1e-9 * gd
    # documented normalisation: lap_d on functions has eigenvalue
    # 2 pi^2 |mu|^2 for H = id, so the gap is pi^2 / 2 at |mu|^2 = 1/4
    assert abs(gd - math.pi**2 / 2) <= 1e-9


def test_mode_eigenvalue_oracle(cover2):
    # per-mode delbar spectrum at (0,0) is exactly pi^2 |mu|^2
    for md, nst in zip(cover2.modes, cover2.numeric):
        op = assemble(nst, LaplacianKind.DELBAR, (0, 0))
        ev = spectrum(op.mat, nst.gram(op.src))
        expected = math.pi**2 * float(md.norm2)
        assert len(ev) == 1
        assert abs(ev[0] - expected) <= 1e-9 * max(1.0, expected)


def test_kahler_kernel_coincidence_per_mode(cover2):
    for st in cover2.settings:
        for p in range(2):
            for q in range(2):
                b = (p, q)
                kers = [
                    assemble(st, kind, b).mat.nullspace()
                    for kind in (LaplacianKind.DELBAR, LaplacianKind.DEL, LaplacianKind.BC, LaplacianKind.A)
                ]
                for k in kers[1:]:
                    assert subspace_eq(kers[0], k)


def test_eckmann_alternating_sums_on_cover(cover2):
    # per bidegree: the Gamma-dimensions of the five nodes of each sequence
    # sum to zero with alternating signs (per-mode exactness summed over
    # modes, divided by |Gamma|)
    from abch.cohomology import abc_subspaces

    n = cover2.n
    for p in range(n + 1):
        for q in range(n + 1):
            b = (p, q)
            tot = {x: Fraction(0) for x in "abcdef"}
            h_db = Fraction(0)
            h_a = Fraction(0)
            h_bc = Fraction(0)
            for st in cover2.settings:
                grids = abc_subspaces(st)
                for x in "abcdef":
                    tot[x] += grids.dims[x][p][q]
                from abch.laplacians import harmonic_space

                h_db += harmonic_space(st, LaplacianKind.DELBAR, b).ncols
                h_a += harmonic_space(st, LaplacianKind.A, b).ncols
                h_bc += harmonic_space(st, LaplacianKind.BC, b).ncols
            idx = cover2.index
            seq1 = tot["a"] - tot["b"] + h_db - h_a + tot["c"]
            seq2 = tot["d"] - h_bc + h_db - tot["e"] + tot["f"]
            assert seq1 / idx == 0
            assert seq2 / idx == 0


def test_metric_independence():
    H1 = Mat.identity(1)
    H2 = Mat([[QQi(2)]], ncols=1)
    rep = metric_independence_check(SPEC2, H1, H2)
    assert rep["gamma_dims_agree"]
    assert rep["cross_projection_full_rank"]
    assert abs(rep["quasi_isometry_constant"] - 2.0) < 1e-9
    assert rep["sampled_ratios_within_bound"]


def test_n2_cover_metric_independence():
    spec = CoveringSpec(
        n=2,
        base=((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)),
        sub=((2, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)),
        radius=Fraction(1, 2),
    )
    from abch.metric import diagonal_metric

    H1 = Mat.identity(2)
    H2 = diagonal_metric([2, 1]).H
    rep = metric_independence_check(spec, H1, H2)
    assert rep["gamma_dims_agree"]
    assert rep["cross_projection_full_rank"]
    assert abs(rep["quasi_isometry_constant"] - 2.0) < 1e-9


def test_gap_and_closed_image(cover2):
    rep = gap_and_closed_image(cover2, samples=100)
    assert rep["tilde4_equals_delbar_squared"]
    assert rep["prestage_box_identity"]
    assert rep["all_ok"]


def test_not_a_sublattice():
    with pytest.raises(NotASublattice):
        build_cover(CoveringSpec(n=1, base=((2, 0), (0, 1)), sub=((1, 0), (0, 1)), radius=Fraction(1)))


def test_hermite_normal_form_counts_cosets():
    X = [[2, 0], [0, 3]]
    H = hermite_normal_form(X)
    assert H[0][0] * H[1][1] == 6
    H2 = hermite_normal_form([[2, 1], [0, 1]])
    assert H2[0][0] * H2[1][1] == 2

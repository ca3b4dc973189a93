import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momquant.errors import DimensionMismatchError, MomQuantError
from momquant.quantcore import (
    Dataset,
    Quantizer,
    as_points,
    assign,
    empirical_cell_masses,
    empirical_distortion,
    loss_l,
    losses,
    moment_summary,
    voronoi_index,
)

from oracles import nearest_index

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


# cell indices are 0-based: index 0 is the first center


@pytest.mark.parametrize(
    "x, centers, expected",
    [(0.0, (-1.0, 1.0), 0), (0.9, (0.0, 1.0), 1), (5.0, (5.0, 5.0, 7.0), 0)],
)
def test_voronoi_index_examples(x, centers, expected):
    assert voronoi_index(x, Quantizer.of(*centers)) == expected


def test_voronoi_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        voronoi_index([[0.0, 1.0, 2.0]], Quantizer.of(0.0, 1.0))
    with pytest.raises(DimensionMismatchError):
        empirical_distortion([[0.0, 1.0]], Quantizer.of((0.0, 0.0, 0.0)))


@pytest.mark.parametrize("x, centers, expected", [(3.0, (0.0,), 0.0), (1.0, (1.0,), -1.0), (2.0, (0.0, 3.0), -3.0)])
def test_loss_examples(x, centers, expected):
    assert loss_l(x, Quantizer.of(*centers)) == expected


def test_empirical_distortion_examples():
    assert empirical_distortion([0.0, 0.0, 2.0], Quantizer.of(0.0, 2.0)) == 0.0
    assert empirical_distortion([0.0, 1.0], Quantizer.of(0.0)) == 0.5
    assert empirical_distortion([0.0, 1.0, 2.0], Quantizer.of(0.5)) == pytest.approx(11 / 12, rel=1e-15)


def test_cell_mass_examples():
    np.testing.assert_allclose(empirical_cell_masses([-1.0, -1.0, 1.0], Quantizer.of(-1.0, 1.0)), [2 / 3, 1 / 3])
    np.testing.assert_array_equal(empirical_cell_masses([0.0], Quantizer.of(0.0, 5.0)), [1.0, 0.0])
    np.testing.assert_array_equal(empirical_cell_masses([0.0, 1.0, 2.0, 3.0], Quantizer.of(0.0, 3.0)), [0.5, 0.5])


def test_moment_summary_examples():
    s = moment_summary([-1.0, 1.0])
    assert (s.mean[0], s.second_moment, s.trace_cov, s.lambda_max) == (0.0, 1.0, 1.0, 1.0)
    s = moment_summary([[3.0, -2.0]])
    np.testing.assert_array_equal(s.mean, [3.0, -2.0])
    assert s.trace_cov == 0.0
    s = moment_summary([[1, 0], [0, 1], [-1, 0], [0, -1]])
    assert s.trace_cov == pytest.approx(1.0)
    assert s.lambda_max == pytest.approx(0.5, rel=1e-9)


def test_moment_summary_anisotropic_eigenvalue():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((400, 3)) * np.array([3.0, 1.0, 0.5])
    s = moment_summary(x)
    top = np.linalg.eigvalsh(np.cov(x.T, bias=True))[-1]
    assert s.lambda_max == pytest.approx(top, rel=1e-8)
    assert s.lambda_max <= s.trace_cov


def test_nonfinite_rejected():
    with pytest.raises(MomQuantError):
        as_points([0.0, np.nan])
    with pytest.raises(MomQuantError):
        Quantizer.of(np.inf)
    with pytest.raises(MomQuantError):
        Dataset(np.zeros((0, 2)))


def test_quantizer_is_immutable_and_ordered():
    A = Quantizer.of(2.0, 1.0)
    with pytest.raises(ValueError):
        A.centers[0, 0] = 5.0
    assert A != Quantizer.of(1.0, 2.0)
    assert A == Quantizer.of(2.0, 1.0)
    assert len(A.padded(4)) == 4


def test_assign_matches_naive_loop():
    rng = np.random.default_rng(0)
    pts = rng.integers(-3, 4, size=(200, 2)).astype(float)
    centers = rng.integers(-3, 4, size=(5, 2)).astype(float)
    labels = assign(pts, Quantizer(centers))
    expected = [nearest_index(tuple(p), [tuple(c) for c in centers]) for p in pts]
    np.testing.assert_array_equal(labels, expected)


# -- properties ------------------------------------------------------------------------

points_1d = st.lists(finite, min_size=1, max_size=40)
centers_1d = st.lists(finite, min_size=1, max_size=6)


@settings(max_examples=200, deadline=None)
@given(points_1d, centers_1d)
def test_partition_property(xs, cs):
    A = Quantizer.of(*cs)
    masses = empirical_cell_masses(xs, A)
    assert masses.sum() == pytest.approx(1.0, abs=1e-15)
    counts = np.bincount(assign(xs, A), minlength=len(cs))
    assert counts.sum() == len(xs)


@settings(max_examples=200, deadline=None)
@given(points_1d, centers_1d)
def test_loss_identity(xs, cs):
    A = Quantizer.of(*cs)
    x = np.array(xs)
    direct = np.min((x[:, None] - np.array(cs)[None, :]) ** 2, axis=1) - x**2
    scale = np.maximum(1.0, np.abs(direct)) + x**2
    assert np.all(np.abs(losses(xs, A) - direct) <= 1e-12 * scale)


@settings(max_examples=200, deadline=None)
@given(points_1d, centers_1d, finite)
def test_translation_covariance(xs, cs, t):
    A = Quantizer.of(*cs)
    base = empirical_distortion(xs, A)
    moved = empirical_distortion(np.array(xs) + t, A.shifted(t))
    assert moved == pytest.approx(base, abs=1e-10 * max(1.0, base) + 1e-9)


@settings(max_examples=200, deadline=None)
@given(points_1d, centers_1d, finite)
def test_adding_center_never_increases_distortion(xs, cs, extra):
    before = empirical_distortion(xs, Quantizer.of(*cs))
    after = empirical_distortion(xs, Quantizer.of(*cs, extra))
    assert after <= before


@settings(max_examples=200, deadline=None)
@given(points_1d, centers_1d, st.data())
def test_padding_neutrality(xs, cs, data):
    j = data.draw(st.integers(0, len(cs) - 1))
    A = Quantizer.of(*cs)
    B = Quantizer.of(*cs, cs[j])
    assert empirical_distortion(xs, B) == empirical_distortion(xs, A)
    mA, mB = empirical_cell_masses(xs, A), empirical_cell_masses(xs, B)
    np.testing.assert_array_equal(mB[: len(cs)], mA)
    assert mB[-1] == 0.0

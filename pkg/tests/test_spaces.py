import json
import math

import numpy as np
import pytest

from ordinal_metric.spaces import (DomainError, SampleSet, geodesic_distance, hausdorff_bracket,
                                   hausdorff_to_space, make_space, sample)

ALL_KINDS = ["segment", "circle", "sphere", "flat-torus", "euclidean-box"]


def random_points(space, m, rng):
    return sample(space, m, "uniform-iid", int(rng.integers(2 ** 31))).points


def test_segment_identity():
    assert geodesic_distance(make_space("segment"), 0.0, 0.0) == 0.0


def test_circle_antipodal_is_one():
    assert geodesic_distance(make_space("circle"), 0.0, math.pi) == 1.0


def test_torus_half_diagonal_is_one():
    # brute force over the 9 lattice translates, then divide by a grid diameter
    def raw(x, y):
        return min(math.hypot(x[0] - y[0] + i, x[1] - y[1] + j)
                   for i in (-1, 0, 1) for j in (-1, 0, 1))
    g = np.linspace(0, 1, 41)
    diam = max(raw((0, 0), (a, b)) for a in g for b in g)
    expected = raw((0, 0), (0.5, 0.5)) / diam
    assert expected == pytest.approx(1.0, abs=1e-15)
    assert geodesic_distance(make_space("torus"), (0, 0), (0.5, 0.5)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kind,bad", [
    ("segment", 1.5), ("segment", -0.1), ("sphere", (2.0, 0.0)),
    ("euclidean-box", (0.5, 1.2)), ("circle", float("nan")), ("flat-torus", (0.1,)),
])
def test_invalid_coordinates(kind, bad):
    space = make_space(kind)
    other = space.check_points(sample(space, 2, "grid").points[0])[0]
    with pytest.raises(DomainError):
        geodesic_distance(space, bad, other)


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_space("hyperbolic-plane")


def test_aliases_and_normalization():
    assert make_space("torus").kind == "flat-torus"
    assert make_space("box").kind == "euclidean-box"
    assert make_space("segment", [2.0]).normalization == 2.0
    assert make_space("sphere", [3.0]).normalization == pytest.approx(3 * math.pi)
    assert make_space("box", [3.0, 4.0]).normalization == pytest.approx(5.0)
    assert make_space("torus", [1.0, 2.0]).normalization == pytest.approx(math.hypot(0.5, 1.0))
    assert make_space("box", [1, 1, 1]).dim == 3


def test_sample_segment_grid():
    s = sample(make_space("segment"), 5, "grid")
    assert s.points[:, 0].tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_sample_circle_grid():
    s = sample(make_space("circle"), 8, "grid")
    assert np.allclose(s.points[:, 0], 2 * np.pi * np.arange(8) / 8)
    d = s.distance_matrix()
    assert sorted(set(d[0].tolist())) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_sample_sphere_iid_range():
    s = sample(make_space("sphere"), 100, "uniform-iid", 7)
    d = s.distance_matrix()
    assert s.n == 100
    assert d.min() >= 0 and d.max() <= 1


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("mode", ["grid", "uniform-iid"])
def test_sample_deterministic(kind, mode):
    a = sample(make_space(kind), 37, mode, 11)
    b = sample(make_space(kind), 37, mode, 11)
    assert np.array_equal(a.points, b.points)
    assert a.n == 37


def test_sample_rejects_small_n():
    with pytest.raises(ValueError):
        sample(make_space("circle"), 1, "grid")


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_sample_json_roundtrip(kind):
    s = sample(make_space(kind), 9, "uniform-iid", 3)
    obj = json.loads(json.dumps(s.to_json()))
    back = SampleSet.from_json(obj)
    assert back.space == s.space
    assert np.array_equal(back.points, s.points)
    assert np.array_equal(back.distance_matrix(), s.distance_matrix())


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_triangle_symmetry_diagonal(kind):
    space = make_space(kind)
    rng = np.random.default_rng(5)
    x, y, z = (random_points(space, 10_000, rng) for _ in range(3))
    dxy = np.array([geodesic_distance(space, a, b) for a, b in zip(x[:200], y[:200])])
    dyx = np.array([geodesic_distance(space, b, a) for a, b in zip(x[:200], y[:200])])
    assert np.array_equal(dxy, dyx)
    assert all(geodesic_distance(space, a, a) == 0.0 for a in x[:50])

    def dist(p, q):
        from ordinal_metric.spaces import _snap
        return _snap(space._raw(p, q) / space.normalization)
    lhs = dist(x, z)
    rhs = dist(x, y) + dist(y, z)
    assert np.all(lhs <= rhs + 1e-12)
    assert np.all((lhs >= 0) & (lhs <= 1))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_normalization_reaches_one_on_grid(kind):
    space = make_space(kind)
    grid = sample(space, 900 if space.dim == 2 else 200, "grid")
    d = grid.distance_matrix()
    res = hausdorff_to_space(space, grid, 1e-3)
    assert 1 - 2 * res <= d.max() <= 1.0


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_midpoint_property_on_grid(kind):
    space = make_space(kind)
    grid = sample(space, 2500 if space.dim == 2 else 400, "grid")
    res = hausdorff_to_space(space, grid, 1e-3)
    rng = np.random.default_rng(1)
    pts = random_points(space, 20, rng)
    for x, y in zip(pts[:10], pts[10:]):
        dxy = geodesic_distance(space, x, y)
        allp = np.vstack([grid.points, x, y])
        d = space.distance_matrix(allp)
        worst = np.maximum(d[-2, :-2], d[-1, :-2]).min()
        assert worst <= dxy / 2 + res + 1e-12


def test_hausdorff_circle_grid():
    s = sample(make_space("circle"), 8, "grid")
    assert hausdorff_to_space(s.space, s) == pytest.approx(1 / 8, abs=1e-15)
    # dense-grid sup-min cross-check
    theta = np.linspace(0, 2 * np.pi, 100_001)
    gap = np.abs(theta[:, None] - s.points[None, :, 0]) % (2 * np.pi)
    supmin = np.minimum(gap, 2 * np.pi - gap).min(axis=1).max() / np.pi
    assert supmin == pytest.approx(1 / 8, abs=1e-4)


def test_hausdorff_segment_grid():
    s = sample(make_space("segment"), 5, "grid")
    assert hausdorff_to_space(s.space, s) == 0.125
    x = np.linspace(0, 1, 100_001)
    supmin = np.abs(x[:, None] - s.points[None, :, 0]).min(axis=1).max()
    assert supmin == pytest.approx(0.125, abs=1e-5)


def test_hausdorff_segment_boundary_gaps_count_in_full():
    space = make_space("segment")
    s = SampleSet(space, np.array([[0.3], [0.5]]))
    assert hausdorff_to_space(space, s) == pytest.approx(0.5)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_hausdorff_of_dense_grid_within_resolution(kind):
    space = make_space(kind)
    grid = sample(space, 1600 if space.dim == 2 else 2000, "grid")
    h = hausdorff_to_space(space, grid, 1e-3)
    eps = {"segment": 1 / (2 * 1999), "circle": 1 / 2000}.get(kind)
    if eps is not None:
        assert h <= eps + 1e-15
    else:
        assert h <= 0.05


@pytest.mark.parametrize("kind", ["sphere", "flat-torus", "euclidean-box"])
def test_hausdorff_bracket_contains_monte_carlo(kind):
    space = make_space(kind)
    s = sample(space, 50, "uniform-iid", 2)
    lo, hi = hausdorff_bracket(space, s, 1e-4)
    assert 0 <= hi - lo <= 1e-4 + 1e-15
    probe = sample(space, 200_000, "uniform-iid", 3).points
    from ordinal_metric.spaces import _nearest_fn
    mc = _nearest_fn(space, s.points)(probe).max()
    assert mc <= hi + 1e-12
    assert hi - mc < 0.02


def test_hausdorff_rejects_bad_resolution():
    s = sample(make_space("sphere"), 10, "grid")
    with pytest.raises(ValueError):
        hausdorff_to_space(s.space, s, 0.0)


@pytest.mark.parametrize("kind", ["segment", "circle"])
def test_hausdorff_grid_monotone_in_n(kind):
    space = make_space(kind)
    vals = [hausdorff_to_space(space, sample(space, n, "grid")) for n in range(2, 60)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))

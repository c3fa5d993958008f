import math

import numpy as np
import pytest

from geoembed import (
    GpsCoord,
    InvalidInputError,
    LandMask,
    RejectedInputError,
    eep_project,
    eep_project_array,
    fibonacci_lattice,
    geodesic_distance_km,
    geodesic_distance_km_array,
    land_filter,
    perturb_coord,
    read_landmask,
    write_landmask,
)
from geoembed.geodesy import coords_to_array, perturb_array, wrap_lon


def mp_eep_oracle(lat_deg, lon_deg):
    """Independent scalar Equal Earth evaluation at 50 decimal digits."""
    from mpmath import asin, cos, mp, mpf, pi, sin, sqrt

    mp.dps = 50
    P1, P2, P3, P4 = mpf("1.340264"), mpf("-0.081106"), mpf("0.000893"), mpf("0.003796")
    phi = mpf(lat_deg) * pi / 180
    lam = mpf(lon_deg) * pi / 180
    th = asin(sqrt(3) / 2 * sin(phi))
    x = 2 * sqrt(3) * lam * cos(th) / (3 * (9 * P4 * th**8 + 7 * P3 * th**6 + 3 * P2 * th**2 + P1))
    y = P4 * th**9 + P3 * th**7 + P2 * th**3 + P1 * th
    xmax = 2 * sqrt(3) * pi / (3 * P1)
    return float(x / xmax), float(y / xmax)


class TestGpsCoord:
    def test_lon_wraps(self):
        assert GpsCoord(0.0, 190.0).lon_deg == -170.0
        assert GpsCoord(0.0, -180.0).lon_deg == -180.0
        assert GpsCoord(0.0, 180.0).lon_deg == -180.0

    def test_bad_lat_rejected(self):
        with pytest.raises(InvalidInputError):
            GpsCoord(91.0, 0.0)
        with pytest.raises(InvalidInputError):
            GpsCoord(float("nan"), 0.0)

    def test_wrap_lon_range(self):
        lons = wrap_lon(np.linspace(-1000, 1000, 999))
        assert np.all((lons >= -180.0) & (lons < 180.0))


class TestEepProject:
    def test_origin(self):
        p = eep_project(GpsCoord(0.0, 0.0))
        assert p.x == 0.0 and p.y == 0.0

    def test_antimeridian_normalizer(self):
        # Raw (0, 180) defines the normalizer, so it maps to exactly (1, 0).
        assert np.array_equal(
            eep_project_array(np.array([[0.0, 180.0]])), np.array([[1.0, 0.0]])
        )

    def test_known_point_vs_oracle(self):
        # Frozen from mp_eep_oracle(40, -74).
        expected = (-0.36437047364111771612, 0.28619397575029292684)
        got = eep_project(GpsCoord(40.0, -74.0))
        assert got.x == pytest.approx(expected[0], rel=1e-9)
        assert got.y == pytest.approx(expected[1], rel=1e-9)
        ox, oy = mp_eep_oracle(40.0, -74.0)
        assert got.x == pytest.approx(ox, rel=1e-9)
        assert got.y == pytest.approx(oy, rel=1e-9)

    def test_odd_symmetry_exact(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform([-90, -180], [90, 180], size=(5000, 2))
        base = eep_project_array(pts)
        neg_lat = eep_project_array(pts * [-1, 1])
        neg_lon = eep_project_array(pts * [1, -1])
        assert np.array_equal(base[:, 1], -neg_lat[:, 1])
        assert np.array_equal(base[:, 0], -neg_lon[:, 0])

    def test_x_bounded_on_global_sweep(self):
        lats = np.arange(-90.0, 91.0)
        lons = np.arange(-180.0, 181.0)
        grid = np.stack(np.meshgrid(lats, lons, indexing="ij"), axis=-1).reshape(-1, 2)
        xy = eep_project_array(grid)
        assert np.max(np.abs(xy[:, 0])) <= 1.0 + 1e-15


class TestGeodesicDistance:
    def test_identity(self):
        for coord in (GpsCoord(0, 0), GpsCoord(51.5, -0.1), GpsCoord(-89.9, 170.0)):
            assert geodesic_distance_km(coord, coord) == 0.0

    def test_one_degree_equator(self):
        expected = math.pi / 180.0 * 6371.0  # 111.19492664455873
        assert geodesic_distance_km(GpsCoord(0, 0), GpsCoord(0, 1)) == pytest.approx(
            expected, abs=1e-3
        )

    def test_half_circumference(self):
        expected = math.pi * 6371.0  # 20015.086796020572
        assert geodesic_distance_km(GpsCoord(0, 0), GpsCoord(0, 180)) == pytest.approx(
            expected, abs=1e-2
        )

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(4)
        pts = rng.uniform([-90, -180], [90, 180], size=(1000, 3, 2))
        a, b, c = pts[:, 0], pts[:, 1], pts[:, 2]
        ab = geodesic_distance_km_array(a, b)
        ba = geodesic_distance_km_array(b, a)
        assert np.array_equal(ab, ba)
        bc = geodesic_distance_km_array(b, c)
        ac = geodesic_distance_km_array(a, c)
        assert np.all(ac <= ab + bc + 1e-9)


class TestPerturbCoord:
    def test_zero_sigma_is_identity(self):
        rng = np.random.default_rng(0)
        coord = GpsCoord(12.5, 44.25)
        assert perturb_coord(coord, 0.0, rng) == coord

    def test_latitude_std_matches_conversion(self):
        rng = np.random.default_rng(1)
        base = np.zeros((100_000, 2))
        out = perturb_array(base, 150.0, rng)
        std = out[:, 0].std()
        assert std == pytest.approx(150.0 / 111_320.0, rel=0.03)

    def test_lon_std_doubles_at_60_degrees(self):
        rng = np.random.default_rng(2)
        base = np.tile([60.0, 10.0], (100_000, 1))
        out = perturb_array(base, 1000.0, rng)
        ratio = out[:, 1].std() / (out[:, 0] - 60.0).std()
        assert ratio == pytest.approx(2.0, rel=0.05)  # 1 / cos(60 deg)

    def test_seeded_reproducibility(self):
        a = perturb_coord(GpsCoord(10, 20), 500.0, np.random.default_rng(99))
        b = perturb_coord(GpsCoord(10, 20), 500.0, np.random.default_rng(99))
        assert a == b

    def test_output_stays_valid(self):
        rng = np.random.default_rng(3)
        out = perturb_array(np.tile([89.999, 179.999], (1000, 1)), 50_000.0, rng)
        assert np.all(out[:, 0] <= 90.0) and np.all(out[:, 0] >= -90.0)
        assert np.all(out[:, 1] >= -180.0) and np.all(out[:, 1] < 180.0)

    def test_negative_sigma_rejected(self):
        with pytest.raises(InvalidInputError):
            perturb_coord(GpsCoord(0, 0), -1.0, np.random.default_rng(0))


class TestFibonacciLattice:
    def test_single_point_valid(self):
        (coord,) = fibonacci_lattice(1)
        assert -90 <= coord.lat_deg <= 90

    def test_min_spacing_near_uniform(self):
        pts = coords_to_array(fibonacci_lattice(1000))
        n = len(pts)
        d = geodesic_distance_km_array(
            np.repeat(pts, n, axis=0), np.tile(pts, (n, 1))
        ).reshape(n, n)
        np.fill_diagonal(d, np.inf)
        side = math.sqrt(4 * math.pi * 6371.0**2 / n)
        assert abs(d.min() - side) <= 0.3 * side

    def test_latitude_symmetry(self):
        pts = coords_to_array(fibonacci_lattice(100))
        assert abs(pts[:, 0].mean()) < 2.0

    def test_invalid_count(self):
        with pytest.raises(InvalidInputError):
            fibonacci_lattice(0)


class TestLandMask:
    def test_all_true_identity(self):
        mask = LandMask(np.ones((4, 8), dtype=bool), -90, 90, -180, 180)
        coords = fibonacci_lattice(25)
        assert land_filter(coords, mask) == coords

    def test_all_false_empty(self):
        mask = LandMask(np.zeros((4, 8), dtype=bool), -90, 90, -180, 180)
        assert land_filter(fibonacci_lattice(25), mask) == []

    def test_checkerboard(self):
        # 2x2 cells over the globe: NW and SE are land.
        mask = LandMask(np.array([[1, 0], [0, 1]], dtype=bool), -90, 90, -180, 180)
        centers = [
            GpsCoord(45, -90),  # NW -> land
            GpsCoord(45, 90),  # NE -> sea
            GpsCoord(-45, -90),  # SW -> sea
            GpsCoord(-45, 90),  # SE -> land
        ]
        assert land_filter(centers, mask) == [centers[0], centers[3]]

    def test_outside_coverage_rejected(self):
        mask = LandMask(np.ones((2, 2), dtype=bool), 0, 45, 0, 45)
        with pytest.raises(RejectedInputError):
            land_filter([GpsCoord(-10, 10)], mask)

    def test_file_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        mask = LandMask(rng.random((6, 9)) < 0.5, -60, 80, -170, 170)
        path = tmp_path / "mask.txt"
        write_landmask(mask, path)
        back = read_landmask(path)
        assert np.array_equal(back.mask, mask.mask)
        assert (back.lat_min, back.lat_max) == (mask.lat_min, mask.lat_max)
        assert (back.lon_min, back.lon_max) == (mask.lon_min, mask.lon_max)

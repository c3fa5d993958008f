import numpy as np
import pytest

from geoembed import (
    InvalidConfigError,
    init_rff,
    rff_encode,
    sigma_schedule,
)
from geoembed.geodesy import ProjectedCoord
from geoembed.posenc import RffLayer


class TestSigmaSchedule:
    def test_paper_ablation_values(self):
        # The 2^0, 2^4, 2^8 ladder used in the hierarchy ablation.
        assert sigma_schedule(1, 256, 3).values == (1.0, 16.0, 256.0)

    def test_single_branch(self):
        assert sigma_schedule(4, 4, 1).values == (4.0,)

    def test_five_branch_ladder(self):
        # 2^0 .. 2^12 in steps of 2^3.
        assert sigma_schedule(1, 4096, 5).values == (1.0, 8.0, 64.0, 512.0, 4096.0)

    def test_geometric_progression(self):
        values = sigma_schedule(0.5, 300.0, 7).values
        ratios = [values[i + 1] / values[i] for i in range(6)]
        assert max(ratios) - min(ratios) < 1e-12 * max(ratios)
        assert values[0] == 0.5 and values[-1] == pytest.approx(300.0, rel=1e-12)

    def test_invalid_configs(self):
        with pytest.raises(InvalidConfigError):
            sigma_schedule(1, 256, 1)  # M=1 needs sigma_min == sigma_max
        with pytest.raises(InvalidConfigError):
            sigma_schedule(0, 256, 3)
        with pytest.raises(InvalidConfigError):
            sigma_schedule(256, 1, 3)


class TestInitRff:
    def test_shape_for_default_dims(self):
        layer = init_rff(512, 16, 42)
        assert layer.R.shape == (256, 2)

    def test_deterministic(self):
        a = init_rff(64, 4.0, 17)
        b = init_rff(64, 4.0, 17)
        assert np.array_equal(a.R, b.R)

    def test_entry_std(self):
        # 2048 Gaussian entries: sample std within 5% of sigma=1.
        layer = init_rff(2048, 1.0, 7)
        assert layer.R.std() == pytest.approx(1.0, rel=0.05)

    def test_frozen_matrix(self):
        layer = init_rff(8, 1.0, 0)
        with pytest.raises(ValueError):
            layer.R[0, 0] = 5.0

    def test_odd_dim_rejected(self):
        with pytest.raises(InvalidConfigError):
            init_rff(7, 1.0, 0)


class TestRffEncode:
    def test_quarter_turn(self):
        layer = RffLayer(np.array([[1.0, 0.0]]), 1.0, 2, 0)
        out = rff_encode(layer, ProjectedCoord(0.25, 0.0))
        assert out == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_zero_frequency(self):
        layer = RffLayer(np.array([[0.0, 0.0]]), 1.0, 2, 0)
        out = rff_encode(layer, np.array([0.8, -0.3]))
        assert np.array_equal(out, [1.0, 0.0])

    def test_pythagorean_pairs(self):
        rng = np.random.default_rng(23)
        layer = init_rff(128, 32.0, 3)
        p = rng.uniform(-1, 1, size=(200, 2))
        enc = rff_encode(layer, p)
        pair = enc[:, :64] ** 2 + enc[:, 64:] ** 2
        assert np.max(np.abs(pair - 1.0)) < 1e-12

    def test_norm(self):
        layer = init_rff(512, 4.0, 9)
        enc = rff_encode(layer, np.array([0.37, -0.91]))
        assert np.linalg.norm(enc) == pytest.approx(np.sqrt(256.0), abs=1e-9)

    def test_periodicity_in_integer_shifts(self):
        # R*(p - p') integer => identical encodings (up to trig roundoff).
        layer = RffLayer(np.array([[1.0, 0.0], [0.0, 2.0]]), 1.0, 4, 0)
        a = rff_encode(layer, np.array([0.3, 0.4]))
        b = rff_encode(layer, np.array([1.3, 0.9]))  # shift: R.delta = (1, 1)
        assert a == pytest.approx(b, abs=1e-12)

    def test_batch_matches_scalar(self):
        layer = init_rff(32, 8.0, 5)
        pts = np.random.default_rng(0).uniform(-1, 1, size=(10, 2))
        batch = rff_encode(layer, pts)
        for i, p in enumerate(pts):
            assert batch[i] == pytest.approx(rff_encode(layer, p), abs=1e-12)

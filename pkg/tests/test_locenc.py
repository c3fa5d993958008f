import numpy as np
import pytest

from geoembed import (
    DegenerateInputError,
    EncoderConfig,
    GpsCoord,
    LocationEncoder,
    encode_gps,
    encode_gps_batch,
)
from geoembed.locenc import sigma_schedule
from geoembed.net import l2_normalize_backward, l2_normalize_cached

TOY = EncoderConfig(
    M=3, sigma_min=1.0, sigma_max=256.0, rff_dim=16, hidden_dim=12, n_hidden=2,
    embed_dim=8, seed=3,
)


@pytest.fixture(scope="module")
def enc():
    return LocationEncoder.create(TOY)


def random_coords(n, seed=0):
    rng = np.random.default_rng(seed)
    return [
        GpsCoord(float(lat), float(lon))
        for lat, lon in rng.uniform([-90, -180], [90, 180], size=(n, 2))
    ]


class TestEncode:
    def test_zero_mlp_degenerate(self, enc):
        broken = LocationEncoder.create(
            EncoderConfig(M=1, sigma_min=4, sigma_max=4, rff_dim=8, hidden_dim=4,
                          n_hidden=1, embed_dim=4, seed=0)
        )
        for _, mlp in broken.branches:
            for layer in mlp.layers:
                layer.W[:] = 0.0
                layer.b[:] = 0.0
        with pytest.raises(DegenerateInputError):
            encode_gps(broken, GpsCoord(10, 10))

    def test_deterministic(self, enc):
        g = GpsCoord(48.86, 2.35)
        assert np.array_equal(encode_gps(enc, g), encode_gps(enc, g))

    def test_unit_norm(self, enc):
        emb = encode_gps_batch(enc, random_coords(64, seed=1))
        assert np.max(np.abs(np.linalg.norm(emb, axis=1) - 1.0)) < 1e-9

    def test_hierarchy_equals_sum_of_single_branches(self, enc):
        # Three single-branch encoders sharing the same weights must sum to the
        # pre-normalization output of the M=3 encoder.
        coords = np.array([[35.0, 139.0], [-33.9, 18.4]])
        full, _ = enc.forward_raw(coords)
        total = np.zeros_like(full)
        for (rff, mlp), sigma in zip(enc.branches, enc.schedule.values):
            single = LocationEncoder(
                sigma_schedule(sigma, sigma, 1),
                [(rff, mlp)],
                EncoderConfig(M=1, sigma_min=sigma, sigma_max=sigma,
                              rff_dim=TOY.rff_dim, hidden_dim=TOY.hidden_dim,
                              n_hidden=TOY.n_hidden, embed_dim=TOY.embed_dim,
                              seed=TOY.seed),
            )
            part, _ = single.forward_raw(coords)
            total += part
        assert np.max(np.abs(full - total)) < 1e-12


class TestBatch:
    def test_single_item_matches_scalar(self, enc):
        g = GpsCoord(-12.0, 77.0)
        batch = encode_gps_batch(enc, [g])
        assert batch.shape == (1, TOY.embed_dim)
        assert batch[0] == pytest.approx(encode_gps(enc, g), abs=1e-12)

    def test_rows_match_scalar_path(self, enc):
        coords = random_coords(100, seed=2)
        batch = encode_gps_batch(enc, coords)
        for i in (0, 13, 57, 99):
            assert batch[i] == pytest.approx(encode_gps(enc, coords[i]), abs=1e-12)

    def test_duplicates_give_duplicate_rows(self, enc):
        g = GpsCoord(5.0, 5.0)
        batch = encode_gps_batch(enc, [g, g, g])
        assert np.array_equal(batch[0], batch[1])
        assert np.array_equal(batch[0], batch[2])

    def test_empty_batch_rejected(self, enc):
        with pytest.raises(DegenerateInputError):
            encode_gps_batch(enc, [])


class TestGradients:
    def test_branch_weight_gradients_match_fd(self, enc):
        # d(loss)/d(W) through projection + RFF + MLP sum + normalization.
        coords = np.array([[40.0, -74.0], [51.5, -0.1]])
        target = np.random.default_rng(9).standard_normal((2, TOY.embed_dim))

        def loss_value():
            return float(np.sum(enc.encode_array(coords) * target))

        v, tapes = enc.forward_raw(coords, with_tape=True)
        emb, norms = l2_normalize_cached(v)
        dv = l2_normalize_backward(emb, norms, target)
        grads = enc.backward_raw(tapes, dv)

        h = 1e-5
        rng = np.random.default_rng(0)
        for bi, mlp_grads in enumerate(grads):
            layer = enc.branches[bi][1].layers[0]
            dW = mlp_grads[0][0]
            for _ in range(5):
                i = int(rng.integers(layer.W.shape[0]))
                j = int(rng.integers(layer.W.shape[1]))
                orig = layer.W[i, j]
                layer.W[i, j] = orig + h
                lp = loss_value()
                layer.W[i, j] = orig - h
                lm = loss_value()
                layer.W[i, j] = orig
                fd = (lp - lm) / (2 * h)
                assert abs(fd - dW[i, j]) < 1e-4 * max(1.0, abs(fd))

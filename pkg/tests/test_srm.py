import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from hrfnet.errors import ConfigError, ShapeError
from hrfnet.srm import FilterBank, apply_srm, downsample, srm_kernels

from oracles import direct_convolve_reflect, srm_oracle


def test_bank_is_three_zero_sum_kernels():
    bank = srm_kernels()
    assert len(bank) == 3
    for k in bank.normalized():
        assert k.sum() == pytest.approx(0.0, abs=1e-15)
    assert [k.shape[0] for k in bank.kernels] == [5, 3, 5]
    assert bank.threshold == 2.0


def test_kernel_on_constant_image_is_zero():
    flat = np.full((12, 12), 77.0)
    for k in srm_kernels().kernels:
        assert np.all(direct_convolve_reflect(flat, k.astype(float)) == 0)


def test_bank_yaml_round_trip(tmp_path):
    bank = srm_kernels()
    bank.to_yaml(tmp_path / "bank.yaml")
    back = FilterBank.from_yaml(tmp_path / "bank.yaml")
    assert back.divisors == bank.divisors and back.threshold == bank.threshold
    for a, b in zip(back.kernels, bank.kernels):
        assert np.array_equal(a, b)


def test_bank_rejects_non_zero_sum_and_even_kernels():
    with pytest.raises(ConfigError):
        FilterBank((np.ones((3, 3), dtype=int),), (1.0,))
    with pytest.raises(ConfigError):
        FilterBank((np.array([[1, -1], [1, -1]]),), (1.0,))
    with pytest.raises(ConfigError):
        FilterBank(srm_kernels().kernels, (12.0, 4.0, 3.0), threshold=0.0)


def test_uniform_gray_gives_zero_residual():
    out = apply_srm(np.full((20, 24, 3), 128, dtype=np.uint8))
    assert out.shape == (20, 24, 9)
    assert np.all(out == 0)


def test_single_white_pixel_stamps_flipped_kernel():
    img = np.zeros((9, 9, 3), dtype=np.uint8)
    img[4, 4] = 1  # amplitude 1 keeps every response inside the clamp
    out = apply_srm(img)
    bank = srm_kernels()
    for ki, k in enumerate(bank.kernels):
        kn = k / bank.divisors[ki]
        s = k.shape[0]
        r = s // 2
        expected = np.zeros((9, 9))
        # convolution of a delta reproduces the kernel itself centred on it
        expected[4 - r:4 + r + 1, 4 - r:4 + r + 1] = kn
        for c in range(3):
            np.testing.assert_allclose(out[..., c * 3 + ki], expected, atol=1e-12)


def test_single_bright_pixel_is_clamped():
    img = np.zeros((9, 9, 3), dtype=np.uint8)
    img[4, 4] = 255
    out = apply_srm(img)
    assert np.abs(out).max() == 2.0


def test_random_16x16_matches_direct_convolution():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
    bank = srm_kernels()
    np.testing.assert_allclose(apply_srm(img, bank), srm_oracle(img, bank), atol=1e-6, rtol=0)


def test_residual_values_within_threshold():
    rng = np.random.default_rng(1)
    out = apply_srm(rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8))
    assert np.abs(out).max() <= 2.0


def test_step_edge_saturates_exactly():
    img = np.zeros((16, 16, 3), dtype=np.uint8)
    img[:, 8:] = 255
    assert np.abs(apply_srm(img)).max() == 2.0


def test_apply_srm_errors():
    with pytest.raises(ShapeError):
        apply_srm(np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(ShapeError):
        apply_srm(np.zeros((16, 16), dtype=np.uint8))
    with pytest.raises(ShapeError):
        apply_srm(np.zeros((16, 16, 4), dtype=np.uint8))


def test_linearity_for_small_amplitudes():
    rng = np.random.default_rng(2)
    # the largest kernel gain (KV: 96/12 = 8) keeps amplitude-0.2 inputs unclamped
    x = rng.uniform(0, 0.2, size=(24, 24, 3))
    y = rng.uniform(0, 0.2, size=(24, 24, 3))
    lhs = apply_srm(0.4 * x + 0.3 * y)
    assert np.abs(apply_srm(x)).max() < 2.0 and np.abs(apply_srm(y)).max() < 2.0
    np.testing.assert_allclose(lhs, 0.4 * apply_srm(x) + 0.3 * apply_srm(y), atol=1e-12)


def test_shift_equivariance_away_from_border():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(40, 40, 3), dtype=np.uint8)
    dy, dx = 3, 5
    shifted = np.roll(img, (dy, dx), axis=(0, 1))
    a = apply_srm(img)
    b = apply_srm(shifted)
    m = 2 + max(dy, dx)
    np.testing.assert_array_equal(b[m + dy:-m, m + dx:-m], a[m:-m - dy, m:-m - dx])


@settings(max_examples=25, deadline=None)
@given(
    h=st.integers(5, 32),
    w=st.integers(5, 32),
    seed=st.integers(0, 2**31 - 1),
)
def test_matches_oracle_property(h, w, seed):
    img = np.random.default_rng(seed).integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    bank = srm_kernels()
    np.testing.assert_allclose(apply_srm(img, bank), srm_oracle(img, bank), atol=1e-6, rtol=0)


class TestDownsample:
    def test_constant_1000_to_224(self):
        out = downsample(np.full((1000, 1000, 3), 93, dtype=np.uint8), (224, 224))
        assert out.shape == (224, 224, 3)
        assert np.all(out == 93)

    def test_same_size_is_identity(self):
        img = np.random.default_rng(0).integers(0, 256, size=(17, 13, 3)).astype(np.uint8)
        np.testing.assert_array_equal(downsample(img, (17, 13)), img)

    def test_checkerboard_averages(self):
        board = (np.indices((4, 4)).sum(axis=0) % 2 * 255).astype(np.float64)
        np.testing.assert_allclose(downsample(board, (2, 2)), np.full((2, 2), 127.5))

    def test_no_overshoot(self):
        img = np.random.default_rng(5).uniform(10, 200, size=(64, 48, 9))
        out = downsample(img, (23, 17))
        assert out.min() >= img.min() and out.max() <= img.max()

    def test_tensor_input(self):
        x = torch.rand(2, 9, 64, 64)
        assert downsample(x, (32, 32)).shape == (2, 9, 32, 32)

    def test_rejects_upsampling_and_empty_target(self):
        with pytest.raises(ConfigError):
            downsample(np.zeros((10, 10, 3)), (12, 10))
        with pytest.raises(ConfigError):
            downsample(np.zeros((10, 10, 3)), (0, 4))


def test_resize_matches_torch_bilinear():
    from hrfnet.srm import resize

    x = torch.rand(2, 3, 37, 50, dtype=torch.float64)
    ref = torch.nn.functional.interpolate(x, size=(11, 23), mode="bilinear", align_corners=False)
    torch.testing.assert_close(resize(x, (11, 23)), ref, atol=1e-12, rtol=0)
    ref_up = torch.nn.functional.interpolate(x, size=(64, 71), mode="bilinear", align_corners=False)
    torch.testing.assert_close(resize(x, (64, 71)), ref_up, atol=1e-12, rtol=0)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize_scalar
from skimage.metrics import structural_similarity

from poisdeconv.core import (
    BlurKernel,
    gaussian_nll,
    poisson_nll,
    psnr,
    quality,
    read_image,
    read_kernel,
    ssim,
    write_image,
    write_kernel,
)
from poisdeconv.core.metrics import SSIM_C1
from poisdeconv.errors import DomainError, ParseError, ShapeError

unit_images = arrays(np.float64, (12, 13), elements=st.floats(0, 1))


def loop_mse(a, b):
    total = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            total += (a[i, j] - b[i, j]) ** 2
    return total / a.size


class TestPsnr:
    def test_identical_is_capped(self, rng):
        x = rng.random((8, 8))
        assert psnr(x, x) == 100.0

    def test_closed_form(self):
        a = np.zeros((10, 10))
        b = np.full((10, 10), 0.1)  # mse = 0.01
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-12)

    def test_matches_loop_oracle(self, rng):
        a, b = rng.random((8, 8)), rng.random((8, 8))
        assert psnr(a, b) == pytest.approx(10 * math.log10(1 / loop_mse(a, b)), abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))

    @given(unit_images, unit_images)
    def test_symmetric(self, a, b):
        assert psnr(a, b) == psnr(b, a)


class TestSsim:
    def test_self_similarity(self, rng):
        x = rng.random((16, 16))
        assert ssim(x, x) == 1.0

    def test_inverted_checkerboard_negative(self):
        x = np.indices((16, 16)).sum(axis=0) % 2.0
        assert ssim(x, 1 - x) < 0

    def test_constants_closed_form(self):
        c = 0.4
        a = np.full((16, 16), c)
        b = a + 0.1
        expected = (2 * c * (c + 0.1) + SSIM_C1) / (c ** 2 + (c + 0.1) ** 2 + SSIM_C1)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-12)

    def test_matches_reference_implementation(self, rng):
        a = rng.random((32, 40))
        b = np.clip(a + 0.1 * rng.standard_normal(a.shape), 0, 1)
        ref = structural_similarity(a, b, data_range=1.0, gaussian_weights=True, sigma=1.5,
                                    use_sample_covariance=False)
        assert ssim(a, b) == pytest.approx(ref, abs=1e-10)

    def test_too_small(self):
        with pytest.raises(ShapeError):
            ssim(np.zeros((10, 20)), np.zeros((10, 20)))

    @settings(max_examples=25)
    @given(arrays(np.float64, (11, 12), elements=st.floats(0, 1)),
           arrays(np.float64, (11, 12), elements=st.floats(0, 1)))
    def test_symmetric_and_bounded(self, a, b):
        s = ssim(a, b)
        assert s == pytest.approx(ssim(b, a), abs=1e-12)
        assert -1 - 1e-12 <= s <= 1 + 1e-12


class TestLikelihoods:
    def test_poisson_ones(self):
        ones = np.ones((5, 7))
        assert poisson_nll(ones, ones) == pytest.approx(35.0)

    def test_poisson_single_pixel(self):
        assert poisson_nll([[2.0]], [[3.0]]) == pytest.approx(3 - 2 * math.log(3), abs=1e-12)
        assert poisson_nll([[2.0]], [[3.0]]) == pytest.approx(0.80278, abs=1e-5)

    def test_poisson_domain(self):
        with pytest.raises(DomainError):
            poisson_nll(np.ones((2, 2)), np.zeros((2, 2)))

    def test_poisson_constant_minimizer_is_mean(self, rng):
        y = rng.poisson(4.0, (9, 9)).astype(float)
        res = minimize_scalar(lambda c: poisson_nll(y, np.full(y.shape, c)),
                              bracket=(0.5, 10.0), method="golden", tol=1e-10)
        assert res.x == pytest.approx(y.mean(), rel=1e-6)

    def test_poisson_convex_in_constant(self, rng):
        y = rng.poisson(3.0, (6, 6)).astype(float)
        f = lambda c: poisson_nll(y, np.full(y.shape, c))
        h = 1e-3
        for c in np.linspace(0.5, 8, 12):
            assert f(c + h) - 2 * f(c) + f(c - h) > 0

    def test_gaussian(self, rng):
        assert gaussian_nll(np.ones((3, 3)), np.ones((3, 3))) == 0.0
        assert gaussian_nll(np.zeros((4, 5)), np.ones((4, 5))) == 20.0
        a, b = rng.random((6, 6)), rng.random((6, 6))
        assert gaussian_nll(a, b) == pytest.approx(loop_mse(a, b) * a.size, abs=1e-12)
        with pytest.raises(ShapeError):
            gaussian_nll(a, np.zeros((6, 5)))

    def test_quality_report(self, rng):
        x = rng.random((16, 16))
        rep = quality(x, x)
        assert rep.line() == "psnr_db=100.0 ssim=1.0"
        assert rep.mse == 0.0


class TestBlurKernel:
    def test_invariants(self):
        with pytest.raises(ShapeError):
            BlurKernel(np.full((2, 2), 0.25))
        with pytest.raises(DomainError):
            BlurKernel([[0.5, 0.5, 0.5], [0, 0, 0], [0, 0, -0.5]])
        with pytest.raises(DomainError):
            BlurKernel(np.full((3, 3), 0.1))

    def test_immutable(self):
        k = BlurKernel.delta(3)
        with pytest.raises(ValueError):
            k.taps[0, 0] = 1.0


class TestImageIO:
    def test_pfm_roundtrip_bitwise(self, tmp_path, rng):
        x = rng.random((7, 11)).astype(np.float32).astype(np.float64)
        write_image(tmp_path / "a.pfm", x)
        y = read_image(tmp_path / "a.pfm")
        assert y.shape == x.shape
        assert np.array_equal(x, y)

    def test_pgm_scaling(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(b"P5\n2 1\n255\n" + bytes([255, 0]))
        assert read_image(tmp_path / "a.pgm").tolist() == [[1.0, 0.0]]

    def test_ascii_and_binary_agree(self, tmp_path):
        vals = [[0, 10, 20], [30, 40, 50], [60, 70, 255]]
        ascii_txt = "P2\n# hand written\n3 3\n255\n" + "\n".join(" ".join(map(str, r)) for r in vals) + "\n"
        (tmp_path / "a.pgm").write_text(ascii_txt)
        (tmp_path / "b.pgm").write_bytes(b"P5\n3 3\n255\n" + bytes(v for r in vals for v in r))
        a = read_image(tmp_path / "a.pgm")
        b = read_image(tmp_path / "b.pgm")
        assert np.array_equal(a, b)
        assert a[2, 2] == 1.0 and a[0, 1] == pytest.approx(10 / 255)

    @pytest.mark.parametrize("bits", [8, 16])
    @pytest.mark.parametrize("ascii", [False, True])
    def test_pgm_quantizes(self, tmp_path, rng, bits, ascii):
        x = rng.random((5, 6))
        write_image(tmp_path / "q.pgm", x, bit_depth=bits, ascii=ascii)
        y = read_image(tmp_path / "q.pgm")
        maxval = 2 ** bits - 1
        assert y.shape == x.shape
        assert np.max(np.abs(x - y)) <= 0.5 / maxval + 1e-12

    def test_truncated_pgm_reports_offset(self, tmp_path):
        (tmp_path / "t.pgm").write_bytes(b"P5\n4 4\n255\n" + bytes(10))
        with pytest.raises(ParseError) as exc:
            read_image(tmp_path / "t.pgm")
        assert exc.value.offset == 11 + 10

    def test_truncated_pfm(self, tmp_path):
        (tmp_path / "t.pfm").write_bytes(b"Pf\n2 2\n-1.0\n" + bytes(12))
        with pytest.raises(ParseError) as exc:
            read_image(tmp_path / "t.pfm")
        assert exc.value.offset is not None

    @pytest.mark.parametrize("blob", [b"P6\n1 1\n255\n\x00", b"P5\nx 1\n255\n\x00", b"P5\n1 1\n"])
    def test_malformed_header(self, tmp_path, blob):
        (tmp_path / "m.pgm").write_bytes(blob)
        with pytest.raises(ParseError):
            read_image(tmp_path / "m.pgm")

    def test_big_endian_pfm(self, tmp_path):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        payload = np.flipud(x).astype(">f4").tobytes()
        (tmp_path / "be.pfm").write_bytes(b"Pf\n2 2\n1.0\n" + payload)
        assert np.array_equal(read_image(tmp_path / "be.pfm"), x)

    def test_kernel_roundtrip(self, tmp_path, rng):
        k = BlurKernel.normalized(rng.random((5, 5)))
        write_kernel(tmp_path / "k.txt", k)
        assert read_kernel(tmp_path / "k.txt") == k

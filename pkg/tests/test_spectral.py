import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_circulant
from poisdeconv.core import BlurKernel
from poisdeconv.errors import DomainError, ShapeError, SingularityError
from poisdeconv.spectral import (
    apply_kernel,
    hqs_data_objective,
    hqs_data_step,
    inversion_module,
    precompute_kernel,
    stencil_transfer,
    wiener,
)
from poisdeconv.synth import blur, make_gaussian_kernel


def random_kernel(rng, size=3):
    return BlurKernel.normalized(rng.random((size, size)) + 0.05)


def dft_double_sum(img):
    h, w = img.shape
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            for i in range(h):
                for j in range(w):
                    out[u, v] += img[i, j] * np.exp(-2j * np.pi * (u * i / h + v * j / w))
    return out


class TestPrecompute:
    def test_delta_transfer_is_one(self):
        hk = precompute_kernel(BlurKernel.delta(), 8, 8)
        assert np.array_equal(hk.transfer, np.ones((8, 8), dtype=complex))

    def test_dc_gain(self, rng):
        hk = precompute_kernel(random_kernel(rng, 5), 16, 12)
        assert abs(hk.transfer[0, 0] - 1) < 1e-12
        assert np.allclose(hk.power, np.abs(hk.transfer) ** 2, atol=1e-12)

    def test_box_matches_direct_dft(self):
        box = BlurKernel.normalized(np.ones((3, 3)))
        hk = precompute_kernel(box, 8, 8)
        grid = np.zeros((8, 8))
        for a in range(3):
            for b in range(3):
                grid[(a - 1) % 8, (b - 1) % 8] = 1 / 9
        assert np.max(np.abs(hk.transfer - dft_double_sum(grid))) < 1e-10

    def test_too_large(self):
        with pytest.raises(ShapeError):
            precompute_kernel(BlurKernel.normalized(np.ones((9, 9))), 8, 8)

    def test_cached_and_read_only(self, rng):
        k = random_kernel(rng)
        a = precompute_kernel(k, 10, 10)
        assert precompute_kernel(BlurKernel(k.taps.copy()), 10, 10) is a
        with pytest.raises(ValueError):
            a.transfer[0, 0] = 0

    def test_concurrent_lookups(self, rng):
        kernels = [random_kernel(rng) for _ in range(8)]
        results = {}

        def work(i):
            results[i] = [precompute_kernel(kernels[j % 8], 16, 16).transfer[0, 1] for j in range(50)]

        threads = [threading.Thread(target=work, args=(i,)) for i in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(r == results[0] for r in results.values())

    @pytest.mark.parametrize("stencil", [[[-1.0, 1.0]], [[-1.0], [1.0]], [[0.5, -2.0, 1.0, 0.25]]])
    def test_signed_even_stencil_matches_dense(self, rng, stencil):
        x = rng.random((6, 7))
        t = stencil_transfer(stencil, 6, 7)
        via_fft = np.fft.ifft2(t * np.fft.fft2(x)).real
        ref = dense_circulant(stencil, 6, 7) @ x.ravel()
        assert np.max(np.abs(via_fft.ravel() - ref)) < 1e-12


class TestWiener:
    def test_exact_inversion_noiseless(self):
        rng = np.random.default_rng(1)
        x = rng.random((128, 128))
        h = make_gaussian_kernel(5, 0.5, 0.5)
        hk = precompute_kernel(h, 128, 128)
        xr = wiener(blur(x, h), hk, 0.0)
        assert np.sqrt(np.mean((xr - x) ** 2)) < 1e-8

    def test_delta_is_identity(self, rng):
        y = rng.random((8, 8))
        hk = precompute_kernel(BlurKernel.delta(), 8, 8)
        assert np.allclose(wiener(y, hk, 0.0), y, atol=1e-14)

    def test_dense_oracle(self, rng):
        y = rng.random((8, 8))
        k = random_kernel(rng)
        H = dense_circulant(k.taps, 8, 8)
        ref = np.linalg.solve(H.T @ H + 0.1 * np.eye(64), H.T @ y.ravel())
        out = wiener(y, precompute_kernel(k, 8, 8), 0.1)
        assert np.max(np.abs(out.ravel() - ref)) < 1e-8

    def test_spectral_zero_needs_regularization(self):
        box = BlurKernel.normalized(np.ones((3, 3)))  # zero response at period-3 frequencies
        hk = precompute_kernel(box, 9, 9)
        with pytest.raises(SingularityError):
            wiener(np.ones((9, 9)), hk, 0.0)
        assert np.all(np.isfinite(wiener(np.ones((9, 9)), hk, 1e-3)))

    def test_negative_lambda(self, rng):
        with pytest.raises(DomainError):
            wiener(rng.random((8, 8)), precompute_kernel(BlurKernel.delta(), 8, 8), -1.0)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            wiener(rng.random((8, 9)), precompute_kernel(BlurKernel.delta(), 8, 8), 0.1)

    def test_linear_in_y(self, rng):
        k = random_kernel(rng, 5)
        hk = precompute_kernel(k, 16, 16)
        a, b = rng.random((16, 16)), rng.random((16, 16))
        lhs = wiener(2.5 * a - 0.7 * b, hk, 0.05)
        rhs = 2.5 * wiener(a, hk, 0.05) - 0.7 * wiener(b, hk, 0.05)
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_high_frequency_energy_shrinks_with_lambda(self, rng):
        k = random_kernel(rng, 5)
        hk = precompute_kernel(k, 32, 32)
        y = rng.random((32, 32))
        fy, fx = np.meshgrid(np.fft.fftfreq(32), np.fft.fftfreq(32), indexing="ij")
        band = np.hypot(fy, fx) > 0.25
        energies = [np.sum(np.abs(np.fft.fft2(wiener(y, hk, lam))[band]) ** 2)
                    for lam in (1e-3, 1e-2, 1e-1, 1.0)]
        assert all(e1 >= e2 for e1, e2 in zip(energies, energies[1:]))


class TestHqsDataStep:
    def test_mu_zero_returns_prev(self, rng):
        fp, fo = rng.random((8, 8)), rng.random((8, 8))
        out = hqs_data_step(fp, fo, precompute_kernel(random_kernel(rng), 8, 8), 0.0)
        assert np.array_equal(out, fp)

    def test_large_mu_delta_kernel(self, rng):
        fp, fo = rng.random((8, 8)), rng.random((8, 8))
        out = hqs_data_step(fp, fo, precompute_kernel(BlurKernel.delta(), 8, 8), 1e8)
        assert np.max(np.abs(out - fo)) < 1e-6

    def test_dense_oracle(self, rng):
        fp, fo = rng.random((8, 8)), rng.random((8, 8))
        k = random_kernel(rng)
        H = dense_circulant(k.taps, 8, 8)
        mu = 2.0
        ref = np.linalg.solve(np.eye(64) + mu * H.T @ H, fp.ravel() + mu * H.T @ fo.ravel())
        out = hqs_data_step(fp, fo, precompute_kernel(k, 8, 8), mu)
        assert np.max(np.abs(out.ravel() - ref)) < 1e-8

    def test_penalty_weighting_dense_oracle(self, rng):
        fp, fo = rng.random((8, 8)), rng.random((8, 8))
        k = random_kernel(rng)
        H = dense_circulant(k.taps, 8, 8)
        mu = 0.3
        ref = np.linalg.solve(H.T @ H + mu * np.eye(64), mu * fp.ravel() + H.T @ fo.ravel())
        out = hqs_data_step(fp, fo, precompute_kernel(k, 8, 8), mu, weighting="penalty")
        assert np.max(np.abs(out.ravel() - ref)) < 1e-8

    @pytest.mark.parametrize("weighting", ["data", "penalty"])
    def test_local_optimality(self, rng, weighting):
        fp, fo = rng.random((12, 12)), rng.random((12, 12))
        hk = precompute_kernel(random_kernel(rng), 12, 12)
        z = hqs_data_step(fp, fo, hk, 1.7, weighting)
        base = hqs_data_objective(z, fp, fo, hk, 1.7, weighting)
        for _ in range(10):
            d = rng.standard_normal((12, 12))
            d *= 1e-3 / np.linalg.norm(d)
            for s in (1, -1):
                assert hqs_data_objective(z + s * d, fp, fo, hk, 1.7, weighting) >= base

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            hqs_data_step(rng.random((8, 8)), rng.random((8, 7)),
                          precompute_kernel(BlurKernel.delta(), 8, 8), 1.0)


class TestInversionModule:
    def test_fixed_point(self):
        rng = np.random.default_rng(3)
        x = rng.random((32, 32))
        h = make_gaussian_kernel(5, 0.5, 0.5)
        hk = precompute_kernel(h, 32, 32)
        for rho in (1e-3, 1.0, 10.0):
            assert np.max(np.abs(inversion_module(blur(x, h), x, hk, rho) - x)) < 1e-8

    def test_large_rho(self, rng):
        y, xp = rng.random((8, 8)), rng.random((8, 8))
        out = inversion_module(y, xp, precompute_kernel(random_kernel(rng), 8, 8), 1e8)
        assert np.max(np.abs(out - xp)) < 1e-5

    def test_dense_oracle(self, rng):
        y, xp = rng.random((8, 8)), rng.random((8, 8))
        k = random_kernel(rng)
        H = dense_circulant(k.taps, 8, 8)
        ref = np.linalg.solve(H.T @ H + np.eye(64), H.T @ y.ravel() + xp.ravel())
        out = inversion_module(y, xp, precompute_kernel(k, 8, 8), 1.0)
        assert np.max(np.abs(out.ravel() - ref)) < 1e-8

    @pytest.mark.parametrize("rho", [0.0, -1.0])
    def test_rho_must_be_positive(self, rng, rho):
        with pytest.raises(DomainError):
            inversion_module(rng.random((8, 8)), rng.random((8, 8)),
                             precompute_kernel(BlurKernel.delta(), 8, 8), rho)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 3, 5]), st.integers(6, 14), st.integers(6, 14))
def test_apply_kernel_matches_dense(seed, ksize, h, w):
    rng = np.random.default_rng(seed)
    k = random_kernel(rng, ksize)
    x = rng.random((h, w))
    out = apply_kernel(x, precompute_kernel(k, h, w))
    ref = dense_circulant(k.taps, h, w) @ x.ravel()
    assert np.max(np.abs(out.ravel() - ref)) < 1e-10

import math

import numpy as np
import pytest

from spectralab._quad import legendre_rule
from spectralab.errors import (NonIntegrableDiagonal, ValidationError)
from spectralab.magnetic import MagneticModel, landau_check, u0_kernel
from spectralab.weyl import (WeylModel, WeylPair, convolution_kernel,
                             d_matrix, omega_single, pair_matrices,
                             trace_density)

EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def rel(a, b):
    return abs(a - b) / abs(b)


def single_kernel(model, t, x, y):
    # oracle built from the two single-model operations plus the phase
    D = d_matrix(model, t)
    w = np.asarray(x) - np.asarray(y)
    return ((4.0 * math.pi) ** (-model.n / 2.0) * omega_single(model, t)
            * np.exp(-0.25 * w @ D @ w
                     + 0.5j * (np.asarray(x) @ model.curv @ np.asarray(y))))


def random_model(rng, n, radius=2.0):
    A = rng.normal(size=(n, n))
    g = A @ A.T + 0.3 * np.eye(n)
    R = rng.normal(size=(n, n))
    R = R - R.T
    top = np.max(np.abs(np.linalg.eigvals(R).imag))
    if top > 0:
        R *= radius * rng.uniform(0.3, 1.0) / top
    return WeylModel(n, g, R)


class TestWeylModel:
    def test_defaults_to_zero_curvature(self):
        m = WeylModel(2, np.eye(2))
        assert np.all(m.curv == 0.0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            WeylModel(2, np.eye(3))
        with pytest.raises(ValidationError):
            WeylModel(2, np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ValidationError):
            WeylModel(2, -np.eye(2))
        with pytest.raises(ValidationError):
            WeylModel(2, np.eye(2), np.eye(2))
        with pytest.raises(ValidationError):
            WeylModel(0, np.zeros((0, 0)))


class TestWeylPair:
    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            WeylPair(WeylModel(1, [[1.0]]), WeylModel(2, np.eye(2)))

    def test_cross_curvature_is_the_mean(self):
        p = WeylPair(WeylModel(2, np.eye(2), 2.0 * EPS2),
                     WeylModel(2, np.eye(2), 0.5 * EPS2))
        assert np.allclose(p.cross_curv, 1.25 * EPS2)


class TestDMatrix:
    def test_zero_curvature(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(3, 3))
        g = A @ A.T + 0.5 * np.eye(3)
        m = WeylModel(3, g)
        assert np.max(np.abs(d_matrix(m, 0.7) - g / 0.7)) < 1e-13

    def test_frozen_rotation_block(self):
        m = WeylModel(2, np.eye(2), EPS2)
        D = d_matrix(m, 0.5)
        want = 2.1639534137386528488
        assert np.max(np.abs(D - want * np.eye(2))) < 1e-13

    def test_long_time_saturates_at_curvature_modulus(self):
        m = WeylModel(2, np.eye(2), EPS2)
        assert np.max(np.abs(d_matrix(m, 50.0) - np.eye(2))) < 1e-10

    def test_rotated_block_oracle(self):
        rng = np.random.default_rng(11)
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        blk = np.zeros((3, 3))
        blk[:2, :2] = 1.3 * EPS2
        m = WeylModel(3, np.eye(3), Q.T @ blk @ Q)
        t = 0.4
        want = np.diag([1.3 / math.tanh(1.3 * t)] * 2 + [1.0 / t])
        assert np.max(np.abs(d_matrix(m, t) - Q.T @ want @ Q)) < 1e-12

    def test_small_time_recovers_the_metric(self):
        rng = np.random.default_rng(2)
        m = random_model(rng, 3)
        pen = m._ghalf @ m._pencil @ m._pencil @ m._ghalf
        cap = 1.05 * np.linalg.norm(pen, 2) / 3.0 + 1e-9
        for t in (1e-4, 1e-3):
            gap = np.linalg.norm(d_matrix(m, t) * t - m.metric, 2)
            assert gap <= cap * t * t

    def test_validation(self):
        with pytest.raises(ValidationError):
            d_matrix(WeylModel(1, [[1.0]]), 0.0)


class TestOmegaSingle:
    def test_flat_unit(self):
        assert omega_single(WeylModel(2, np.eye(2)), 1.0) == pytest.approx(1.0)

    def test_frozen_rotation_block(self):
        m = WeylModel(2, np.eye(2), EPS2)
        assert rel(omega_single(m, 0.5), 1.9190347513349437195) < 1e-13

    def test_flat_general_metric(self):
        rng = np.random.default_rng(8)
        A = rng.normal(size=(3, 3))
        g = A @ A.T + 0.4 * np.eye(3)
        m = WeylModel(3, g)
        t = 0.9
        want = np.linalg.det(t * np.linalg.inv(g)) ** -0.5
        assert rel(omega_single(m, t), want) < 1e-13

    def test_landau_density(self):
        m = WeylModel(2, np.eye(2), EPS2)
        dens = omega_single(m, 1.0) / (4.0 * math.pi)
        assert rel(dens, 0.06771391313789565899) < 1e-13
        assert rel(dens, landau_check(1.0, 1.0)[0]) < 1e-13

    def test_matches_magnetic_kernel(self):
        rng = np.random.default_rng(19)
        for n in (2, 4):
            R = rng.normal(size=(n, n))
            R = R - R.T
            m = WeylModel(n, np.eye(n), R)
            x = rng.normal(size=n) * 0.5
            t = 0.7
            mine = single_kernel(m, t, x, np.zeros(n))
            other = u0_kernel(MagneticModel(R), t, x, np.zeros(n))[0, 0]
            assert abs(mine.imag) < 1e-15
            assert rel(mine.real, other) < 1e-10

    def test_large_time_stays_finite(self):
        m = WeylModel(2, np.eye(2), EPS2)
        assert rel(omega_single(m, 500.0), 2.0 * math.exp(-500.0)) < 1e-12

    def test_validation(self):
        with pytest.raises(ValidationError):
            omega_single(WeylModel(1, [[1.0]]), -1.0)


class TestPairMatrices:
    def test_determinant_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            pair = WeylPair(random_model(rng, n), random_model(rng, n))
            t, s = rng.uniform(0.1, 1.5, 2)
            pm = pair_matrices(pair, t, s)
            lhs = np.linalg.det(np.asarray(pm.T_plus, dtype=complex)) \
                * np.linalg.det(np.asarray(pm.T_minus, dtype=complex))
            rhs = pm.Omega ** 2 * np.linalg.det(pm.D)
            assert abs(lhs - rhs) / abs(rhs) < 1e-12

    def test_zero_curvature_blocks(self):
        rng = np.random.default_rng(6)
        A = rng.normal(size=(2, 2))
        gp = A @ A.T + 0.4 * np.eye(2)
        B2 = rng.normal(size=(2, 2))
        gm = B2 @ B2.T + 0.4 * np.eye(2)
        t, s = 0.3, 0.8
        pair = WeylPair(WeylModel(2, gp), WeylModel(2, gm))
        pm = pair_matrices(pair, t, s)
        ap, am = gp / t, gm / s
        want = ap @ np.linalg.inv(ap + am) @ am
        assert np.isrealobj(pm.B)
        assert np.max(np.abs(pm.B - want)) < 1e-12

    def test_identical_members_symmetric(self):
        m = WeylModel(2, np.eye(2), 1.4 * EPS2)
        pm = pair_matrices(WeylPair(m, m), 0.6, 0.6)
        assert np.isrealobj(pm.A_plus) and np.isrealobj(pm.A_minus)
        assert np.max(np.abs(pm.A_plus - pm.A_minus)) < 1e-12

    def test_magnetized_right_member_keeps_z_complex(self):
        # the explicit -2i R_minus term cannot cancel for real widths
        m = WeylModel(2, np.eye(2), 1.4 * EPS2)
        pm = pair_matrices(WeylPair(m, m), 0.6, 0.6)
        assert np.max(np.abs(np.imag(pm.Z))) > 1.0

    def test_scalar_h_is_the_harmonic_mean(self):
        pair = WeylPair(WeylModel(1, [[2.0]]), WeylModel(1, [[3.0]]))
        pm = pair_matrices(pair, 0.4, 0.7)
        a, b = 2.0 / 0.4, 3.0 / 0.7
        assert rel(pm.H[0, 0], a * b / (a + b)) < 1e-13

    def test_h_symmetric_and_certified(self):
        rng = np.random.default_rng(14)
        for _ in range(5):
            pair = WeylPair(random_model(rng, 2), random_model(rng, 2))
            pm = pair_matrices(pair, *rng.uniform(0.2, 1.0, 2))
            assert np.max(np.abs(pm.H - pm.H.T)) < 1e-12
            assert np.min(np.linalg.eigvalsh(np.real(pm.H))) > 0

    def test_validation(self):
        pair = WeylPair(WeylModel(1, [[1.0]]), WeylModel(1, [[1.0]]))
        with pytest.raises(ValidationError):
            pair_matrices(pair, 0.0, 1.0)


class TestConvolutionKernel:
    def test_flat_line_semigroup(self):
        pair = WeylPair(WeylModel(1, [[1.0]]), WeylModel(1, [[1.0]]))
        t, s = 0.4, 0.9
        for x, xp in ((0.0, 0.0), (1.2, -0.5), (2.0, 2.0)):
            got = convolution_kernel(pair, t, s, [x], [xp])
            want = ((4.0 * math.pi * (t + s)) ** -0.5
                    * math.exp(-(x - xp) ** 2 / (4.0 * (t + s))))
            assert rel(got, want) < 1e-12

    def test_semigroup_exactness(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            m = random_model(rng, n)
            t, s = rng.uniform(0.1, 1.5, 2)
            x, xp = rng.normal(size=n), rng.normal(size=n)
            got = convolution_kernel(WeylPair(m, m), t, s, x, xp)
            want = single_kernel(m, t + s, x, xp)
            assert abs(complex(got) - want) / abs(want) < 1e-12

    def test_short_right_leg_approaches_single_kernel(self):
        rng = np.random.default_rng(9)
        m = random_model(rng, 2)
        pair = WeylPair(m, random_model(rng, 2))
        x, xp = rng.normal(size=2), rng.normal(size=2)
        got = convolution_kernel(pair, 0.8, 1e-6, x, xp)
        want = single_kernel(m, 0.8, x, xp)
        assert abs(complex(got) - want) / abs(want) < 1e-4

    def test_against_numeric_convolution(self):
        rng = np.random.default_rng(13)
        xg, wg = legendre_rule(80)
        cases = [(WeylPair(WeylModel(2, np.eye(2), EPS2),
                           WeylModel(2, np.eye(2), EPS2)),
                  0.5, 0.5, np.zeros(2), np.zeros(2))]
        for _ in range(3):
            pair = WeylPair(random_model(rng, 2), random_model(rng, 2))
            t, s = rng.uniform(0.2, 1.0, 2)
            cases.append((pair, t, s, 0.7 * rng.normal(size=2),
                          0.7 * rng.normal(size=2)))
        for pair, t, s, x, xp in cases:
            Dp = d_matrix(pair.plus, t)
            Dm = d_matrix(pair.minus, s)
            mid = np.linalg.solve(Dp + Dm, Dp @ x + Dm @ xp)
            L = 8.0 / math.sqrt(np.linalg.eigvalsh(Dp + Dm)[0] / 2.0)
            y1 = mid[0] + L * xg
            y2 = mid[1] + L * xg
            Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
            Y = np.stack([Y1.ravel(), Y2.ravel()], axis=-1)
            wp = x[None, :] - Y
            qp = np.einsum("ki,ij,kj->k", wp, Dp, wp)
            up = ((4.0 * math.pi) ** -1.0 * omega_single(pair.plus, t)
                  * np.exp(-0.25 * qp - 0.5j * (Y @ (pair.plus.curv @ x))))
            wm = Y - xp[None, :]
            qm = np.einsum("ki,ij,kj->k", wm, Dm, wm)
            um = ((4.0 * math.pi) ** -1.0 * omega_single(pair.minus, s)
                  * np.exp(-0.25 * qm + 0.5j * (Y @ (pair.minus.curv @ xp))))
            quad = np.sum(up * um * np.outer(wg, wg).ravel()) * L * L
            closed = complex(convolution_kernel(pair, t, s, x, xp))
            assert abs(quad - closed) / abs(closed) < 1e-6

    def test_translation_isometry(self):
        # magnetic translation: a shift times a unimodular phase
        R = 1.3 * EPS2
        a = np.array([0.4, -0.7])
        xg, wg = legendre_rule(60)
        y = 10.0 * xg
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        Y = np.stack([Y1.ravel(), Y2.ravel()], axis=-1)
        W = np.outer(wg, wg).ravel() * 100.0
        f = np.exp(-0.5 * np.sum((Y - 0.3) ** 2, axis=1)
                   + 1j * (Y @ np.array([0.2, -0.1])))
        sh = Y - a
        fs = np.exp(-0.5 * np.sum((sh - 0.3) ** 2, axis=1)
                    + 1j * (sh @ np.array([0.2, -0.1])))
        tf = np.exp(0.5j * (Y @ (R @ a))) * fs
        n0 = np.sum(np.abs(f) ** 2 * W)
        n1 = np.sum(np.abs(tf) ** 2 * W)
        assert abs(n0 - n1) / n0 < 1e-8

    def test_validation(self):
        pair = WeylPair(WeylModel(2, np.eye(2)), WeylModel(2, np.eye(2)))
        with pytest.raises(ValidationError):
            convolution_kernel(pair, 0.5, 0.5, [1.0], [0.0, 0.0])


class TestTraceDensity:
    def test_flat_pair_matches_theta_density(self):
        pair = WeylPair(WeylModel(1, [[1.0]]), WeylModel(1, [[1.0]]))
        got = trace_density(pair, 0.3, 0.5)
        assert rel(got, (4.0 * math.pi * 0.8) ** -0.5) < 1e-13
        with pytest.raises(NonIntegrableDiagonal):
            trace_density(pair, 0.3, 0.5, mode="full")

    def test_magnetic_pair_landau_diagonal(self):
        m = WeylModel(2, np.eye(2), 2.0 * EPS2)
        pair = WeylPair(m, m)
        got = trace_density(pair, 0.1, 0.2)
        assert rel(got, 0.24998672363526730723) < 1e-12
        assert got == trace_density(pair, 0.1, 0.2, mode="per_volume")
        with pytest.raises(NonIntegrableDiagonal):
            trace_density(pair, 0.1, 0.2, mode="full")

    def test_full_mode_against_quadrature(self):
        pair = WeylPair(WeylModel(2, np.eye(2), 2.0 * EPS2),
                        WeylModel(2, np.eye(2), 0.5 * EPS2))
        t, s = 0.4, 0.7
        got = trace_density(pair, t, s)
        assert got == trace_density(pair, t, s, mode="full")
        xg, wg = legendre_rule(80)
        pmats = pair_matrices(pair, t, s)
        M = np.asarray(pmats.A_plus + pmats.A_minus - pmats.B - pmats.B.T,
                       dtype=complex)
        L = 8.0 / math.sqrt(np.linalg.eigvalsh(M.real)[0] / 4.0)
        y = L * xg
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        Y = np.stack([Y1.ravel(), Y2.ravel()], axis=-1)
        vals = np.array([convolution_kernel(pair, t, s, p, p) for p in Y])
        quad = np.real(np.sum(vals * np.outer(wg, wg).ravel()) * L * L)
        assert rel(got, quad) < 1e-8

    def test_scaling_limit(self):
        rng = np.random.default_rng(21)
        pair = WeylPair(random_model(rng, 2), random_model(rng, 2))
        t, s, eps = 0.7, 0.4, 1e-5
        got = trace_density(pair, eps * t, eps * s, mode="per_volume")
        got *= (4.0 * math.pi * eps)
        want = np.linalg.det(t * np.linalg.inv(pair.plus.metric)
                             + s * np.linalg.inv(pair.minus.metric)) ** -0.5
        assert rel(got, want) < 1e-8

    def test_validation(self):
        pair = WeylPair(WeylModel(1, [[1.0]]), WeylModel(1, [[1.0]]))
        with pytest.raises(ValidationError):
            trace_density(pair, 0.5, 0.5, mode="diagonal")

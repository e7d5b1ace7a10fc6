import math

import numpy as np
import pytest

from adiabatic_search.errors import CapExceededError, DomainError
from adiabatic_search.model import PathSpec, eval_path
from adiabatic_search.oracle import (
    apply_h,
    basis_state,
    dense_hamiltonian,
    evolve_full,
    evolve_marks,
    evolve_shifted,
    ground_projection,
    uniform_state,
    verify_degeneracy,
    verify_reduction,
)
from adiabatic_search.scheduler import LinearRamp, ProblemSpec

rng = np.random.default_rng(1234)


class TestApplyH:
    def test_ground_states(self):
        N = 16
        assert np.max(np.abs(apply_h(1.0, 0.0, 3, uniform_state(N)))) < 1e-15
        assert np.max(np.abs(apply_h(0.0, 1.0, 3, basis_state(N, 3)))) < 1e-15

    def test_degenerate_subspace(self):
        N, m = 16, 5
        v = rng.normal(size=N) + 1j * rng.normal(size=N)
        v -= v.mean()           # orthogonal to psi0
        v[m] = 0.0
        v -= v.mean()
        v[m] = 0.0
        # project out both directions exactly
        psi0, e_m = uniform_state(N), basis_state(N, m)
        Q, _ = np.linalg.qr(np.column_stack([psi0, e_m]))
        v = v - Q @ (Q.conj().T @ v)
        f, g = 0.7, 1.9
        np.testing.assert_allclose(apply_h(f, g, m, v), (f + g) * v, atol=1e-14)

    @pytest.mark.parametrize("N", [2, 7, 64])
    def test_matches_dense(self, N):
        m = N // 2
        v = rng.normal(size=N) + 1j * rng.normal(size=N)
        f, g = 1.3, 0.4
        np.testing.assert_allclose(apply_h(f, g, m, v), dense_hamiltonian(f, g, m, N) @ v,
                                   atol=1e-12)

    def test_errors(self):
        with pytest.raises(DomainError):
            apply_h(1, 0, 5, np.ones(4))
        with pytest.raises(CapExceededError):
            dense_hamiltonian(1, 0, 0, 65)


class TestGroundProjection:
    def test_ends(self):
        p = PathSpec.quadratic(32, 3.0)
        assert ground_projection(p, 0.0, 7, uniform_state(32)) == pytest.approx(1, abs=1e-14)
        assert ground_projection(p, 1.0, 7, basis_state(32, 7)) == pytest.approx(1, abs=1e-14)

    def test_N4_midpoint(self):
        # 2x2 block in (|m>, |u>): [[3/8, -sqrt3/8], [-sqrt3/8, 5/8]], E- = 1/4,
        # ground vector (sqrt3, 1)/2, |psi0> = (1/2, sqrt3/2): overlap^2 = 3/4
        p = PathSpec.linear(4)
        got = ground_projection(p, 0.5, 0, uniform_state(4))
        assert got == pytest.approx(3 / 4, abs=1e-14)
        w, V = np.linalg.eigh(dense_hamiltonian(0.5, 0.5, 0, 4))
        assert abs(V[:, 0] @ uniform_state(4)) ** 2 == pytest.approx(3 / 4, abs=1e-12)


class TestDegeneracy:
    @pytest.mark.parametrize("s", [0.0, 0.1, 0.3, 0.5, 0.9, 1.0])
    @pytest.mark.parametrize("A", [0.0, 4.0])
    def test_structure(self, s, A):
        rep = verify_degeneracy(PathSpec.quadratic(16, A), s, m=3)
        assert rep.spread <= 1e-10
        assert rep.forbidden <= 1e-10
        assert rep.coupling_error <= 1e-10

    @pytest.mark.parametrize("s", [0.0, 1.0])
    def test_projector_spectrum(self, s):
        rep = verify_degeneracy(PathSpec.linear(16), s)
        np.testing.assert_allclose(rep.eigenvalues, [0.0] + [1.0] * 15, atol=1e-12)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            verify_degeneracy(PathSpec.linear(128), 0.5)


class TestEvolution:
    def test_adiabatic_success(self, sched_cache):
        sched = sched_cache(64, 0.0, 0.05)
        tr = evolve_full(sched.spec, sched, m=11, samples=20)
        assert tr.success_probability()[0] >= 1 - 10 * 0.05**2
        assert tr.max_norm_drift <= 1e-9

    def test_quench(self):
        tr = evolve_full(PathSpec.linear(64), LinearRamp(1e-6), m=0, samples=5)
        assert tr.success_probability()[0] == pytest.approx(1 / 64, abs=1e-9)
        np.testing.assert_allclose(tr.final_state, uniform_state(64), atol=1e-6)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            evolve_full(PathSpec.linear(5000), LinearRamp(1.0))

    @pytest.mark.parametrize("A", [0.0, 8.0])
    def test_reduction(self, sched_cache, A):
        sched = sched_cache(64, A, 0.05)
        assert verify_reduction(sched.spec, sched, m=9, samples=100) <= 1e-6
        assert verify_reduction(sched.spec.path, LinearRamp(1e-6), m=9, samples=50) <= 1e-6

    def test_permutation_covariance(self, sched_cache):
        sched = sched_cache(16, 2.0, 0.1)
        tr = evolve_marks(sched.spec, sched, [0, 11], samples=30)
        np.testing.assert_allclose(tr.P_minus[0], tr.P_minus[1], atol=1e-12)
        # psi_11 is psi_0 with entries 0 and 11 swapped
        perm = np.arange(16)
        perm[[0, 11]] = [11, 0]
        np.testing.assert_allclose(tr.final_states[perm, 0], tr.final_states[:, 1], atol=1e-12)

    def test_batched_matches_single(self, sched_cache):
        sched = sched_cache(16, 0.0, 0.1)
        batch = evolve_marks(sched.spec, sched, [2, 5], samples=10)
        single = evolve_full(sched.spec, sched, m=5, samples=10)
        np.testing.assert_allclose(batch.P_minus[1], single.P_minus[0], atol=1e-9)

    def test_shifted(self, sched_cache):
        sched = sched_cache(64, 8.0, 0.05)
        plain = evolve_full(sched.spec, sched, m=3, samples=50, keep_states=True)
        shifted = evolve_shifted(sched.spec, sched, m=3, samples=50, keep_states=True)
        overlap = abs(np.vdot(shifted.final_state, plain.final_state))
        assert abs(overlap - 1) <= 1e-8
        np.testing.assert_allclose(shifted.P_minus, plain.P_minus, atol=1e-8)
        # the shifted Hamiltonian has zero ground energy along the path
        from adiabatic_search.model import spectrum_at

        for s in np.linspace(0, 1, 7):
            f, g, _, _ = eval_path(sched.spec.path, s)
            H = dense_hamiltonian(f, g, 3, 64) - spectrum_at(sched.spec.path, s).E_minus * np.eye(64)
            assert np.linalg.eigvalsh(H)[0] == pytest.approx(0, abs=1e-12)

"""Spectral densities, Redfield tensor and Lindblad channels."""

import numpy as np
import pytest

from excitonfim import (
    ConfigError,
    SpectralDensity,
    build_generator,
    build_hamiltonian,
    chain_config,
    config_with,
    coupling_operators,
    lindblad_dissipator,
    noise_kernel,
    redfield_tensor,
    spost,
    spre,
)
from excitonfim.environment import RATE_PREFACTOR
from excitonfim.units import EV


class TestNoiseKernel:
    def test_j3_flat(self):
        sd = SpectralDensity("J3", 0.01)
        for w in (-1.0, -0.01, 0.0, 0.3):
            assert noise_kernel(sd, w) == pytest.approx(0.01)

    def test_j2_one_sided(self):
        sd = SpectralDensity("J2", 0.01)
        assert noise_kernel(sd, 0.05) == pytest.approx(0.01)
        assert noise_kernel(sd, 0.0) == 0.0
        assert noise_kernel(sd, -0.05) == 0.0

    def test_j1_vanishes_at_zero(self):
        sd = SpectralDensity("J1", 0.01, omega_c=0.1, T_ph=300.0)
        assert noise_kernel(sd, 0.0) == 0.0

    def test_j1_detailed_balance_point(self):
        sd = SpectralDensity("J1", 0.01, omega_c=0.1, T_ph=300.0)
        w = 0.05
        ratio = noise_kernel(sd, w) / noise_kernel(sd, -w)
        assert ratio == pytest.approx(np.exp(w / (EV.kB * 300.0)), rel=1e-12)

    def test_vectorized_matches_scalar(self):
        sd = SpectralDensity("J1", 0.01, omega_c=0.1, T_ph=300.0)
        ws = np.linspace(-0.2, 0.2, 41)
        vec = noise_kernel(sd, ws)
        assert np.allclose(vec, [noise_kernel(sd, w) for w in ws])

    def test_kind_validation(self):
        with pytest.raises(ConfigError):
            SpectralDensity("ohmic", 0.01)
        with pytest.raises(ConfigError):
            SpectralDensity("J1", 0.01, omega_c=0.1, T_ph=0.0)

    def test_non_finite_rejected(self):
        sd = SpectralDensity("J3", 0.01)
        with pytest.raises(ConfigError):
            noise_kernel(sd, np.inf)


class TestCouplingOperators:
    def test_projector_structure(self, pair1nm):
        ops = coupling_operators(pair1nm)
        assert len(ops) == 2
        for i, A in enumerate(ops, start=1):
            expected = np.zeros((4, 4))
            expected[i, i] = 1.0
            assert np.allclose(A, expected)

    def test_orthogonal_projectors(self, square):
        ops = coupling_operators(square)
        for i, A in enumerate(ops):
            for j, B in enumerate(ops):
                assert np.allclose(A @ B, A if i == j else 0.0)

    def test_sum_is_site_subspace_projector(self, square):
        total = sum(coupling_operators(square))
        idx = square.index
        expected = np.eye(idx.dim)
        expected[idx.ground, idx.ground] = 0.0
        expected[idx.trap, idx.trap] = 0.0
        assert np.allclose(total, expected)


class TestLindbladDissipator:
    def test_zero_operator(self):
        assert np.allclose(lindblad_dissipator(np.zeros((4, 4))), 0.0)

    def test_two_level_rate_equation(self):
        # L = sqrt(G)|trap><sink| acting on |sink><sink|: gain G at trap,
        # loss G at sink.
        d, sink, trap = 4, 2, 3
        G = 0.37
        L = np.zeros((d, d))
        L[trap, sink] = np.sqrt(G)
        rho = np.zeros((d, d))
        rho[sink, sink] = 1.0
        drho = (lindblad_dissipator(L) @ rho.reshape(-1)).reshape(d, d)
        assert drho[trap, trap] == pytest.approx(G)
        assert drho[sink, sink] == pytest.approx(-G)

    def test_trace_preserving(self):
        rng = np.random.default_rng(7)
        L = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        D = lindblad_dissipator(L)
        for _ in range(100):
            X = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            rho = X + X.conj().T
            image = (D @ rho.reshape(-1)).reshape(5, 5)
            assert abs(np.trace(image)) < 1e-12


class TestRedfieldTensor:
    def test_zero_coupling(self, square):
        sd = SpectralDensity("J3", 0.0)
        H = build_hamiltonian(square)
        R = redfield_tensor(H, coupling_operators(square), sd)
        assert np.allclose(R, 0.0)

    def test_requires_hermitian(self, square):
        H = build_hamiltonian(square)
        H[1, 2] += 1.0  # break Hermiticity
        with pytest.raises(ConfigError, match="Hermitian"):
            redfield_tensor(H, coupling_operators(square), SpectralDensity("J3", 0.01))

    def test_j3_is_pure_dephasing(self, square):
        lam = 0.01
        H = build_hamiltonian(square)
        ops = coupling_operators(square)
        R = redfield_tensor(H, ops, SpectralDensity("J3", lam))
        expected = RATE_PREFACTOR * lam * sum(lindblad_dissipator(A) for A in ops)
        assert np.max(np.abs(R - expected)) < 1e-10

    def test_population_rates_satisfy_detailed_balance(self):
        # Transfer rates between system eigenstates obey the thermal ratio.
        config = chain_config(2, 1.0, spectral_kind="J1", omega_c=0.5)
        H = build_hamiltonian(config)
        sd = SpectralDensity.from_config(config)
        eps, U = np.linalg.eigh(H)
        R = redfield_tensor(H, coupling_operators(config), sd)
        d = H.shape[0]
        # Rotate the superoperator into the eigenbasis to read off population
        # transfer rates R[bb, aa].
        S = np.kron(U.conj().T, U.T)
        R_eig = S @ R @ np.linalg.inv(S)
        kT = config.units.kB * config.T_ph
        for a in range(d):
            for b in range(d):
                gap = eps[a] - eps[b]
                if a == b or abs(gap) < 1e-9:
                    continue
                r_ab = R_eig[b * d + b, a * d + a].real  # a -> b
                r_ba = R_eig[a * d + a, b * d + b].real  # b -> a
                if r_ab < 1e-18 and r_ba < 1e-18:
                    continue
                assert r_ab / r_ba == pytest.approx(np.exp(gap / kT), rel=1e-8)

    def test_preserves_trace_of_flow(self, square):
        H = build_hamiltonian(square)
        sd = SpectralDensity.from_config(square)
        R = redfield_tensor(H, coupling_operators(square), sd)
        rng = np.random.default_rng(5)
        d = H.shape[0]
        X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = X + X.conj().T
        image = (R @ rho.reshape(-1)).reshape(d, d)
        assert abs(np.trace(image)) < 1e-12


class TestBuildGenerator:
    def test_dimension(self, square):
        gen = build_generator(square)
        assert gen.matrix.shape == (36, 36)
        assert gen.dim == 6

    def test_channel_list(self, square):
        gen = build_generator(square)
        assert gen.channels == ("coherent", "redfield", "decay", "trap")
        steady = build_generator(config_with(square, Gamma_inj=1e-4), "steady")
        assert "injection" in steady.channels
        assert "extraction" in steady.channels

    def test_unknown_mode(self, square):
        with pytest.raises(ConfigError):
            build_generator(square, "adiabatic")

    def test_trap_channel_sparsity(self, square):
        # Adding the trap channel changes the generator exactly by the
        # corresponding dissipator, which only touches sink/trap entries.
        without = build_generator(config_with(square, Gamma_trap=0.0))
        with_trap = build_generator(square)
        diff = with_trap.matrix - without.matrix
        idx = square.index
        d = idx.dim
        L = np.zeros((d, d), dtype=complex)
        L[idx.trap, square.sink_index] = np.sqrt(square.Gamma_trap)
        assert np.allclose(diff, lindblad_dissipator(L))
        touched = {square.sink_index, idx.trap}
        for p in range(d * d):
            i, j = divmod(p, d)
            if not ({i, j} & touched) and not np.allclose(diff[p, :], 0.0):
                raise AssertionError("trap channel modified unrelated rows")

    def test_coherent_part_only(self, square):
        cfg = config_with(square, lambda_ph=0.0, Gamma_trap=0.0)
        gen = build_generator(cfg)
        H = build_hamiltonian(cfg)
        coherent = -1j * (spre(H) - spost(H))
        decay_scale = cfg.units.rate_from_lifetime(cfg.sites[0].lifetime)
        # Everything beyond the commutator comes from the (weak) decay channels.
        assert np.max(np.abs(gen.matrix - coherent)) <= decay_scale * 1.001

    def test_gap_metadata_uses_site_block(self, pair1nm):
        gen = build_generator(pair1nm)
        H = build_hamiltonian(pair1nm)
        eps = np.linalg.eigvalsh(H[1:3, 1:3])
        assert gen.hamiltonian_gaps == pytest.approx(float(eps[1] - eps[0]))

"""Parametrization, numerical gradients and FIM assembly."""

import math

import numpy as np
import pytest

from excitonfim import (
    ConfigError,
    ParameterVector,
    build_generator,
    chain_config,
    config_with,
    fim,
    importance_by_group,
    perturb,
    scalar_sensitivity,
    sloppiness_metrics,
)
from excitonfim.dynamics import evolve, make_grid
from excitonfim.infogeom import (
    _trapezoid_weights,
    distribution_gradient,
    gram_matrices,
    importance_profile,
)


@pytest.fixture(scope="module")
def pair_fim(pair1nm):
    return fim(pair1nm, kind="arrival")


@pytest.fixture(scope="module")
def pair_grid(pair1nm):
    gen = build_generator(pair1nm)
    base = evolve(gen, positivity_samples=0)
    return make_grid(gen, 1.1 * base.completion_ns)


class TestParameterVector:
    def test_order_and_groups(self, square):
        pv = ParameterVector.from_config(square)
        assert len(pv) == 20
        assert pv.labels[:4] == ("E1", "E2", "E3", "E4")
        assert pv.labels[4:8] == ("t1", "t2", "t3", "t4")
        assert pv.labels[8:11] == ("r12", "a12", "p12")
        assert pv.labels[-3:] == ("G_trap", "lam", "T")
        assert pv.groups[0] == "energy"
        assert pv.groups[4] == "lifetime"
        assert pv.groups[8] == "position"
        assert pv.groups[-1] == "environment"

    def test_angles_are_linear(self, square):
        pv = ParameterVector.from_config(square)
        for lab, is_log in zip(pv.labels, pv.log_flags):
            if lab[0] in ("a", "p"):
                assert not is_log
            else:
                assert is_log

    def test_round_trip(self, square):
        pv = ParameterVector.from_config(square)
        rebuilt = pv.to_config(square)
        assert rebuilt == square


class TestPerturb:
    def test_zero_step_is_identity(self, square):
        assert perturb(square, 0, 0.0) == square

    def test_log_entry(self, square):
        nudged = perturb(square, 0, 1e-4)
        assert nudged.sites[0].energy == pytest.approx(2.0 * math.exp(1e-4), rel=1e-15)

    def test_angle_entry_is_additive(self, square):
        pv = ParameterVector.from_config(square)
        mu = pv.labels.index("a12")
        base = square.sites[1].position[1]
        nudged = perturb(square, mu, 1e-4)
        assert nudged.sites[1].position[1] == base + 1e-4

    def test_index_range(self, square):
        with pytest.raises(ConfigError):
            perturb(square, 99, 1e-4)


class TestDistributionGradient:
    def test_temperature_row_vanishes_under_j3(self, pair1nm, pair_grid):
        cfg = config_with(pair1nm, spectral_kind="J3")
        D, _ = distribution_gradient(cfg, "arrival", pair_grid)
        pv = ParameterVector.from_config(cfg)
        row = D[pv.labels.index("T")]
        assert np.max(np.abs(row)) < 1e-8

    def test_richardson_ratio(self, pair1nm, pair_grid):
        # Central differences converge at O(h^2): halving h shrinks the
        # difference between successive estimates by a factor near 4.
        pv = ParameterVector.from_config(pair1nm)
        mu = pv.labels.index("E1")
        h = 2e-3
        rows = {}
        for step in (h, h / 2, h / 4):
            D, _ = distribution_gradient(pair1nm, "arrival", pair_grid, h=step)
            rows[step] = D[mu]
        num = np.linalg.norm(rows[h] - rows[h / 2])
        den = np.linalg.norm(rows[h / 2] - rows[h / 4])
        assert 3.5 <= num / den <= 4.5

    def test_unknown_kind(self, pair1nm, pair_grid):
        with pytest.raises(ConfigError):
            distribution_gradient(pair1nm, "escape", pair_grid)


class TestGramForms:
    def test_integral_equals_expectation(self, pair1nm, pair_grid):
        D, f = distribution_gradient(pair1nm, "arrival", pair_grid)
        w = _trapezoid_weights(pair_grid)
        mask = f >= 1e-8 * f.max()
        integral, expectation = gram_matrices(D, f, w, mask)
        scale = np.max(np.abs(integral))
        assert np.max(np.abs(integral - expectation)) < 1e-12 * scale

    def test_permutation_invariance(self, pair1nm, pair_grid):
        D, f = distribution_gradient(pair1nm, "arrival", pair_grid)
        w = _trapezoid_weights(pair_grid)
        mask = f >= 1e-8 * f.max()
        g, _ = gram_matrices(D, f, w, mask)
        rng = np.random.default_rng(0)
        p = rng.permutation(D.shape[0])
        g_perm, _ = gram_matrices(D[p], f, w, mask)
        assert np.allclose(g_perm, g[np.ix_(p, p)])
        assert np.allclose(
            np.sort(np.linalg.eigvalsh(g_perm)), np.sort(np.linalg.eigvalsh(g))
        )


class TestImportanceProfile:
    def test_diagonal_fim(self):
        lam = np.array([5.0, 3.0, 1.0])
        P = importance_profile(lam, np.eye(3))
        assert np.allclose(P, lam / lam.sum())

    def test_sign_flip_invariance(self, pair_fim):
        n = len(pair_fim.labels)
        flipped = pair_fim.eigenvectors * np.where(np.arange(n) % 2 == 0, -1.0, 1.0)
        P = importance_profile(pair_fim.eigenvalues, flipped)
        assert np.allclose(P, pair_fim.importances)

    def test_sums_to_one(self, pair_fim):
        assert pair_fim.importances.sum() == pytest.approx(1.0, abs=1e-12)


class TestFim:
    def test_symmetric_psd(self, pair_fim):
        g = pair_fim.matrix
        assert np.max(np.abs(g - g.T)) <= 1e-10 * np.max(np.abs(g))
        lam_max = pair_fim.eigenvalues[0]
        assert pair_fim.eigenvalues[-1] >= -1e-10 * lam_max

    def test_diagnostics_recorded(self, pair_fim):
        diag = pair_fim.diagnostics
        assert diag["kind"] == "arrival"
        assert diag["h"] == 1e-4
        assert diag["eta"] == 1e-8
        assert diag["grid_end_ns"] >= 1.09 * diag["completion_ns"]

    def test_group_totals_partition(self, pair_fim):
        by_group = importance_by_group(pair_fim)
        total = sum(stats["total"] for stats in by_group.values())
        assert total == pytest.approx(1.0, abs=1e-12)
        for stats in by_group.values():
            assert stats["min"] <= stats["max"]

    def test_json_round_trip(self, tmp_path, pair_fim):
        import json

        path = tmp_path / "fim.json"
        pair_fim.to_json(path)
        payload = json.loads(path.read_text())
        assert payload["labels"] == list(pair_fim.labels)
        assert np.allclose(payload["matrix"], pair_fim.matrix)


class TestScalarSensitivity:
    def test_requires_injection(self, square):
        with pytest.raises(ConfigError, match="Gamma_inj"):
            scalar_sensitivity(square)

    def test_rank_one(self, square):
        result = scalar_sensitivity(config_with(square, Gamma_inj=1e-4))
        lam = result.eigenvalues
        assert lam[1] < 1e-12 * lam[0]
        assert lam[0] == pytest.approx(result.diagnostics["grad_norm"] ** 2, rel=1e-12)

    def test_j3_temperature_component_zero(self, square):
        cfg = config_with(square, Gamma_inj=1e-4, spectral_kind="J3")
        result = scalar_sensitivity(cfg)
        assert result.importances[result.labels.index("T")] < 1e-10


class TestSloppinessMetrics:
    def test_identity_spectrum(self, pair_fim):
        from dataclasses import replace

        n = len(pair_fim.labels)
        flat = replace(
            pair_fim,
            eigenvalues=np.ones(n),
            eigenvectors=np.eye(n),
        )
        span, eigs = sloppiness_metrics(flat)
        assert span == pytest.approx(0.0)
        assert eigs.size == n

    def test_chain_is_sloppy(self, pair_fim):
        span, _ = sloppiness_metrics(pair_fim)
        assert span > 1.0

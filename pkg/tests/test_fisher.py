import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorfim.derivs import GAIN_BLOCKS, ParamBlock, jacobian_stack
from anchorfim.errors import InvalidArgumentError
from anchorfim.fisher import (
    Efim,
    Fim,
    assemble_fim,
    crb,
    efim,
    fim_spectrum,
    identifiability,
    oeb,
    peb,
    schur_complement,
)
from anchorfim.harness import CaseId, build_scenario, run_case, scenario_fim
from anchorfim.signal import Regime

P = ParamBlock
CASE_II = CaseId.II.unknown_blocks


def mp_inverse(mat):
    with mpmath.workdps(40):
        inv = mpmath.matrix(mat.tolist()) ** -1
        return np.array(inv.tolist(), dtype=float)


def six_block_fim(mat):
    return Fim(np.asarray(mat, dtype=float), (P.POS_U, P.ORI_B))


class TestAssemble:
    def test_orthonormal_real_columns(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(6, 3)))
        fim = assemble_fim([q], 0.5)
        np.testing.assert_allclose(fim.matrix, np.eye(3), atol=1e-15)

    def test_snr_linear_scaling(self, near_scenario):
        stack = jacobian_stack(near_scenario, CASE_II)
        a = assemble_fim(stack, 10.0).matrix
        b = assemble_fim(stack, 20.0).matrix
        assert np.max(np.abs(b - 2 * a)) <= 1e-12 * np.max(np.abs(a))

    def test_entrywise_loop_oracle(self, near_scenario):
        stack = jacobian_stack(near_scenario, CASE_II)
        snr = near_scenario.channel.snr_linear
        t_count, n_u, k = stack.shape
        expected = np.zeros((k, k))
        for r in range(k):
            for c in range(k):
                acc = 0.0
                for t in range(t_count):
                    for u in range(n_u):
                        acc += (np.conj(stack[t, u, r]) * stack[t, u, c]).real
                expected[r, c] = 2 * snr * acc
        got = assemble_fim(stack, snr, CASE_II).matrix
        assert np.max(np.abs(got - expected)) <= 1e-12 * np.max(np.abs(expected))

    def test_block_layout_mismatch(self, near_scenario):
        stack = jacobian_stack(near_scenario, CASE_II)
        with pytest.raises(InvalidArgumentError):
            assemble_fim(stack, 1.0, (P.POS_U,))

    @pytest.mark.parametrize("bad", [[], [np.zeros((2, 3)), np.zeros((2, 4))], [np.zeros(3)]])
    def test_bad_stacks(self, bad):
        with pytest.raises(InvalidArgumentError):
            assemble_fim(bad, 1.0)

    def test_nonpositive_snr(self):
        with pytest.raises(InvalidArgumentError):
            assemble_fim([np.eye(2)], 0.0)

    @pytest.mark.parametrize("regime", [Regime.NEAR, Regime.FAR])
    def test_symmetric_psd(self, ref_config, regime):
        m = scenario_fim(build_scenario(ref_config, regime=regime), tuple(ParamBlock)).matrix
        assert np.max(np.abs(m - m.T)) <= 1e-10 * np.max(np.abs(m))
        w = np.linalg.eigvalsh(m)
        assert w[0] >= -1e-10 * w[-1]

    @pytest.mark.parametrize("regime", [Regime.NEAR, Regime.FAR])
    def test_information_monotone_in_transmissions(self, ref_config, regime):
        stack = jacobian_stack(build_scenario(ref_config, regime=regime), CASE_II)
        prev = None
        for t in range(1, stack.shape[0] + 1):
            ev = fim_spectrum(stack[:t], 10.0)
            if prev is not None:
                assert np.all(ev >= prev - 1e-12)
            prev = ev

    def test_spectrum_matches_eigvalsh(self, near_scenario):
        stack = jacobian_stack(near_scenario, CASE_II)
        ev = fim_spectrum(stack, 10.0)
        ref = np.linalg.eigvalsh(assemble_fim(stack, 10.0).matrix)
        np.testing.assert_allclose(ev[-3:], ref[-3:], rtol=1e-9)


class TestEfim:
    def test_block_diagonal(self, rng):
        a = rng.normal(size=(6, 6))
        m = np.zeros((8, 8))
        m[:6, :6] = a @ a.T + np.eye(6)
        m[6:, 6:] = [[2.0, 0.3], [0.3, 1.0]]
        e = efim(Fim(m, (P.POS_U, P.ORI_B) + GAIN_BLOCKS), [P.POS_U, P.ORI_B])
        np.testing.assert_allclose(e.matrix, m[:6, :6], rtol=1e-14)
        assert e.nuisance_dims == 2 and not e.nuisance_singular

    def test_scalar_schur(self):
        a, b, c = 5.0, 2.0, 3.0
        out, singular = schur_complement(np.array([[a, b], [b, c]]), [0], [1])
        assert out[0, 0] == pytest.approx(a - b * b / c, rel=1e-15)
        assert not singular

    def test_no_nuisance(self, rng):
        a = rng.normal(size=(3, 3))
        m = a @ a.T
        e = efim(Fim(m, (P.POS_U,)), [P.POS_U])
        np.testing.assert_array_equal(e.matrix, 0.5 * (m + m.T))

    def test_inverse_block_oracle(self, ref_config):
        rep = run_case(ref_config)
        full_inv = mp_inverse(rep.fim.matrix)
        lhs = crb(rep.efim)
        rhs = full_inv[:6, :6]
        assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) < 1e-10

    def test_efim_dominated_by_interest_block(self, ref_config):
        for regime in ("near", "far"):
            rep = run_case(ref_config, regime=Regime(regime))
            diff = rep.fim.sub([P.POS_U, P.ORI_B]) - rep.efim.matrix
            w = np.linalg.eigvalsh(diff)
            assert w[0] >= -1e-10 * np.max(np.abs(rep.fim.matrix))

    def test_singular_nuisance_flagged(self):
        m = np.diag([1.0, 1.0, 1.0, 1.0, 0.0])
        m[0, 3] = m[3, 0] = 0.5
        fim = Fim(m, (P.POS_U, P.GAIN_R, P.GAIN_I))
        e = efim(fim, [P.POS_U])
        assert e.nuisance_singular
        np.testing.assert_allclose(e.matrix, np.diag([0.75, 1.0, 1.0]), atol=1e-15)

    def test_factor_finds_exact_null_direction(self):
        # second gain column duplicates the first: the nuisance block is singular
        r = np.array([[1.0, 0.0, 0.0, 1.0, 1.0],
                      [0.0, 1.0, 0.0, 0.0, 0.0],
                      [0.0, 0.0, 1.0, 0.0, 0.0],
                      [0.0, 0.0, 0.0, 1.0, 1.0]])
        fim = assemble_fim([r], 0.5, (P.POS_U, P.GAIN_R, P.GAIN_I))
        e = efim(fim, [P.POS_U])
        assert e.nuisance_singular
        np.testing.assert_allclose(e.matrix, np.diag([0.5, 1.0, 1.0]), atol=1e-15)

    def test_ill_conditioned_nuisance_is_not_truncated(self, rng):
        # nuisance columns differ by 1e-7: eigenvalue ratio near 1e-14, still invertible
        base = rng.normal(size=(12, 1))
        cols = np.hstack([rng.normal(size=(12, 3)), base, base + 1e-7 * rng.normal(size=(12, 1))])
        fim = assemble_fim([cols], 0.5, (P.POS_U, P.GAIN_R, P.GAIN_I))
        e = efim(fim, [P.POS_U])
        assert not e.nuisance_singular
        expected = mp_inverse(fim.matrix)[:3, :3]
        assert np.linalg.norm(crb(e) - expected) / np.linalg.norm(expected) < 1e-12

    def test_without_factor_uses_eigenvalue_rule(self):
        m = np.diag([1.0, 1.0, 1.0, 1.0, 1e-14])
        e = efim(Fim(m, (P.POS_U, P.GAIN_R, P.GAIN_I)), [P.POS_U])
        assert e.nuisance_singular and e.precise is not None

    def test_unknown_block(self):
        with pytest.raises(InvalidArgumentError):
            efim(Fim(np.eye(3), (P.POS_U,)), [P.POS_B])


class TestIdentifiability:
    def test_identity(self):
        r = identifiability(np.eye(3))
        assert r.rank == 3 and r.positive_definite

    def test_zero(self):
        r = identifiability(np.zeros((3, 3)))
        assert r.rank == 0 and not r.positive_definite

    def test_threshold(self):
        r = identifiability(np.diag([1.0, 1e-8, 1e-10]))
        assert r.rank == 2 and not r.positive_definite
        assert list(r.eigenvalues) == sorted(r.eigenvalues)

    def test_roundoff_only_efim_is_rank_zero(self):
        e = Efim(np.diag([1e-6, 1e-9, 1e-12]), (P.ORI_B,), reference_scale=1e12)
        assert identifiability(e).rank == 0

    def test_far_field_source_orientation_is_2d(self, ref_config):
        fim = scenario_fim(build_scenario(ref_config, regime=Regime.FAR), CASE_II)
        r = identifiability(efim(fim, [P.ORI_B]))
        assert r.rank == 2 and not r.positive_definite


class TestBounds:
    def test_unit_efim(self):
        e = Efim(np.eye(6), (P.POS_U, P.ORI_B))
        assert peb(e, P.POS_U) == pytest.approx(math.sqrt(3), rel=1e-15)
        assert oeb(e, P.ORI_B) == pytest.approx(math.sqrt(3), rel=1e-15)
        assert peb(e, range(0, 3)) == pytest.approx(math.sqrt(3), rel=1e-15)
        assert oeb(e, slice(3, 6)) == pytest.approx(math.sqrt(3), rel=1e-15)

    def test_scaling_by_four_halves(self, rng):
        a = rng.normal(size=(6, 6))
        m = a @ a.T + np.eye(6)
        e1, e4 = Efim(m, (P.POS_U, P.ORI_B)), Efim(4 * m, (P.POS_U, P.ORI_B))
        assert peb(e4, P.POS_U) == pytest.approx(peb(e1, P.POS_U) / 2, rel=1e-12)

    def test_block_permutation_invariance(self, rng):
        a = rng.normal(size=(6, 6))
        m = a @ a.T + np.eye(6)
        perm = [3, 4, 5, 0, 1, 2]
        swapped = m[np.ix_(perm, perm)]
        e1 = Efim(m, (P.POS_U, P.ORI_B))
        e2 = Efim(swapped, (P.POS_U, P.ORI_B))
        assert oeb(e1, slice(3, 6)) == pytest.approx(oeb(e2, slice(0, 3)), rel=1e-12)

    def test_non_pd_is_unbounded(self):
        e = Efim(np.diag([1.0, 1.0, 1.0, 1.0, 1.0, 0.0]), (P.POS_U, P.ORI_B))
        assert math.isinf(peb(e, P.POS_U)) and math.isinf(oeb(e, P.ORI_B))

    def test_near_field_finite_far_field_unbounded(self, ref_config):
        near = run_case(ref_config, regime=Regime.NEAR)
        far = run_case(ref_config, regime=Regime.FAR)
        assert math.isfinite(near.peb) and math.isinf(far.peb)

    def test_orientation_near_beats_far_sixteen_elements(self, ref_config):
        near = run_case(ref_config, n_u=16, regime=Regime.NEAR)
        far = run_case(ref_config, n_u=16, regime=Regime.FAR)
        assert math.isfinite(near.oeb) and near.oeb < far.oeb

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.1, 10.0), min_size=6, max_size=6), st.floats(0.5, 4.0))
    def test_diagonal_bounds(self, diag, scale):
        e = Efim(np.diag(diag) * scale, (P.POS_U, P.ORI_B))
        expected = math.sqrt(sum(1 / (scale * d) for d in diag[:3]))
        assert peb(e, P.POS_U) == pytest.approx(expected, rel=1e-12)

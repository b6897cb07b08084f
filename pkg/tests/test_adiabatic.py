import math

import numpy as np
import pytest

from drag_forge import (Ansatz, DragVariant, GaussianParams, TimeGrid,
                        build_controls, build_sno)
from drag_forge.adiabatic import (ExpansionReport, FrameTransform,
                                  constraint_residuals, control_orders,
                                  frame_first_order, frame_second_order,
                                  frames_for, h_eff_exact, h_extra,
                                  h_extra_report, series_vs_exact_deviation,
                                  _dimless, _h_stacks, _recursion_frame)
from drag_forge.pulses import GaussianEnvelope

TWO_PI = 2.0 * math.pi

FIRST_ORDER = [DragVariant.Z_ONLY1, DragVariant.Y_ONLY1,
               DragVariant.OPTIMAL1, DragVariant.DRAG1]


@pytest.fixture
def grid(not_params):
    return TimeGrid(not_params.t_g, 2048)


class TestFrameFirstOrder:
    def test_boundary_values_vanish(self, sno5, not_params, grid):
        for v in FIRST_ORDER:
            ft = frame_first_order(sno5, v, not_params, grid)
            assert np.max(np.abs(ft.s[0])) < 1e-12
            assert np.max(np.abs(ft.s[-1])) < 1e-12

    def test_hermitian_at_every_sample(self, sno5, not_params, grid):
        ft = frame_first_order(sno5, DragVariant.DRAG1, not_params, grid)
        np.testing.assert_allclose(ft.s, ft.s.conj().swapaxes(-1, -2), atol=0)

    def test_z_only_has_single_coefficient(self, sno5, not_params, grid):
        # only the leakage-canceling (1, 2) element is populated
        ft = frame_first_order(sno5, DragVariant.Z_ONLY1, not_params, grid)
        mask = np.zeros((5, 5), dtype=bool)
        mask[1, 2] = mask[2, 1] = True
        assert np.max(np.abs(ft.s[:, ~mask])) == 0.0
        env = GaussianEnvelope(not_params)
        k = grid.n_steps // 3
        t = grid.nodes()[k]
        gbar = not_params.t_g * float(env.value(t))
        want = 1j * math.sqrt(2) * gbar / 2.0  # s_y = -lam1 Gbar / 2
        assert ft.s[k, 1, 2] == pytest.approx(want, abs=1e-12)

    def test_variant_qubit_block_coefficients(self, sno5, not_params, grid):
        # s_y01 = (b1/2) * Gbar distinguishes the family members
        env = GaussianEnvelope(not_params)
        k = grid.n_steps // 2
        gbar = not_params.t_g * float(env.value(grid.nodes()[k]))
        lam1 = math.sqrt(2)
        expected = {
            DragVariant.Y_ONLY1: -lam1 ** 2 / 8,
            DragVariant.OPTIMAL1: -lam1 / 4,
            DragVariant.DRAG1: -0.5,
        }
        for v, coeff in expected.items():
            ft = frame_first_order(sno5, v, not_params, grid)
            assert ft.s[k, 0, 1] == pytest.approx(-1j * coeff * gbar, abs=1e-12)

    def test_epsilon_field(self, sno5, not_params, grid):
        ft = frame_first_order(sno5, DragVariant.DRAG1, not_params, grid)
        assert ft.epsilon == pytest.approx(1.0 / (not_params.t_g * TWO_PI))

    def test_ansatz_rejected(self, sno5, not_params, grid):
        with pytest.raises(ValueError, match="no documented frame"):
            frame_first_order(sno5, Ansatz(1, 0, 0, 0), not_params, grid)


class TestSecondOrderFrameIdentity:
    def test_recursion_reproduces_closed_form(self, sno5, not_params):
        # substituting S^(1) into the no-leakage recursion must land on the
        # analytic second-order coefficients; 4096 nodes keep the finite
        # difference truncation below the identity tolerance
        grid = TimeGrid(not_params.t_g, 4096)
        ds = _dimless(sno5)
        for v in FIRST_ORDER:
            orders = control_orders(sno5, v, not_params, grid)
            hs = _h_stacks(ds, orders, 1, grid.n_steps + 1)
            s1 = frame_first_order(sno5, v, not_params, grid).s
            m = h_extra(1, [s1], hs, ds.h0, grid) + hs[1]
            s2_recursion = _recursion_frame(ds, m)
            s2_analytic = frame_second_order(sno5, v, not_params, grid).s
            assert np.max(np.abs(s2_recursion - s2_analytic)) < 1e-10

    def test_non_ladder_rejected(self, star6, not_params, grid):
        with pytest.raises(ValueError, match="ladder"):
            frame_second_order(star6, DragVariant.Z_ONLY1, not_params, grid)

    def test_second_order_variant_rejected_off_ladder(self, star6, not_params,
                                                      grid):
        with pytest.raises(ValueError, match="no published form"):
            control_orders(star6, DragVariant.DRAG2, not_params, grid)


class TestHExtra:
    def test_order_zero_is_zero(self, sno5, not_params, grid):
        ds = _dimless(sno5)
        hs = _h_stacks(ds, control_orders(sno5, DragVariant.DRAG1, not_params,
                                          grid), 0, grid.n_steps + 1)
        out = h_extra(0, [], hs, ds.h0, grid)
        assert np.max(np.abs(out)) == 0.0

    def test_vanishing_frame_gives_zero(self, sno5, not_params, grid):
        ds = _dimless(sno5)
        hs = _h_stacks(ds, control_orders(sno5, DragVariant.DRAG1, not_params,
                                          grid), 1, grid.n_steps + 1)
        s1 = np.zeros((grid.n_steps + 1, 5, 5), dtype=complex)
        out = h_extra(1, [s1], hs, ds.h0, grid)
        assert np.max(np.abs(out)) == 0.0

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_hermitian_stacks(self, sno5, not_params, grid, order):
        frames = frames_for(sno5, DragVariant.OPTIMAL1, not_params, grid, order)
        ds = _dimless(sno5)
        hs = _h_stacks(ds, control_orders(sno5, DragVariant.OPTIMAL1,
                                          not_params, grid),
                       order, grid.n_steps + 1)
        out = h_extra(order, frames, hs, ds.h0, grid)
        assert np.max(np.abs(out - out.conj().swapaxes(-1, -2))) < 1e-12

    def test_missing_frames_rejected(self, sno5, not_params, grid):
        ds = _dimless(sno5)
        hs = _h_stacks(ds, control_orders(sno5, DragVariant.DRAG1, not_params,
                                          grid), 2, grid.n_steps + 1)
        with pytest.raises(ValueError, match="needs frames"):
            h_extra(2, [np.zeros((grid.n_steps + 1, 5, 5), complex)], hs,
                    ds.h0, grid)

    def test_second_order_corrections_close_the_qubit_block(
            self, sno5, not_params):
        # Tr[H_extra^(2) sigma_x01] of each first-order variant equals minus
        # its published cubic in-phase correction
        grid = TimeGrid(not_params.t_g, 4096)
        ds = _dimless(sno5)
        env = GaussianEnvelope(not_params)
        gbar = not_params.t_g * env.value(grid.nodes())
        lam1sq = 2.0
        cases = {
            DragVariant.Z_ONLY1: lam1sq / 8,
            DragVariant.Y_ONLY1: -lam1sq * (lam1sq - 4) / 32,
            DragVariant.DRAG1: (lam1sq - 4) / 8,
        }
        for v, a3 in cases.items():
            frames = frames_for(sno5, v, not_params, grid, 2)
            hs = _h_stacks(ds, control_orders(sno5, v, not_params, grid), 2,
                           grid.n_steps + 1)
            hx2 = h_extra(2, frames, hs, ds.h0, grid)
            trace_x = 2.0 * np.real(hx2[:, 0, 1])
            np.testing.assert_allclose(trace_x, -a3 * gbar ** 3, atol=1e-10)


class TestConstraintResiduals:
    def test_gaussian0_order_zero_exact(self, sno5, not_params, grid):
        r = constraint_residuals(sno5, DragVariant.GAUSSIAN0, not_params,
                                 grid, 0)
        assert max(r.qubit_mismatch.values()) == 0.0
        assert r.coupling_residual == 0.0

    def test_first_order_variants_satisfy_order_one(self, sno5, not_params):
        grid = TimeGrid(not_params.t_g, 4096)
        for v in FIRST_ORDER:
            r = constraint_residuals(sno5, v, not_params, grid, 1)
            assert r.coupling_residual < 1e-8
            assert max(r.qubit_mismatch.values()) < 1e-8

    def test_gaussian0_fails_order_one(self, sno5, not_params, grid):
        r = constraint_residuals(sno5, DragVariant.GAUSSIAN0, not_params,
                                 grid, 1)
        assert r.qubit_mismatch["z"] > 1.0  # uncorrected quadratic shift

    def test_drag2_cancels_order_two_mismatch(self, sno5, not_params):
        grid = TimeGrid(not_params.t_g, 4096)
        before = constraint_residuals(sno5, DragVariant.DRAG1, not_params,
                                      grid, 2)
        after = constraint_residuals(sno5, DragVariant.DRAG2, not_params,
                                     grid, 2)
        assert before.qubit_mismatch["x"] > 1.0
        assert after.qubit_mismatch["x"] < 1e-6
        assert max(after.qubit_mismatch.values()) < 1e-6

    def test_report_serializes(self, sno5, not_params, grid):
        import json
        r = constraint_residuals(sno5, DragVariant.DRAG1, not_params, grid, 1)
        doc = json.loads(r.to_json())
        assert doc["order"] == 1
        assert doc["n_steps"] == grid.n_steps
        assert set(doc["qubit_mismatch"]) == {"x", "y", "z"}

    def test_star_reports_substitution_gap(self, star6, not_params, grid):
        # the lambda-tilde substituted detuning is not the exact first-order
        # solution when the leakage gaps differ, and the report says so
        r = constraint_residuals(star6, DragVariant.Z_ONLY1, not_params,
                                 grid, 1)
        assert r.coupling_residual < 1e-8
        assert r.qubit_mismatch["z"] > 1.0


class TestHEffExact:
    def test_zero_frame_returns_hamiltonian(self, sno5, not_params, grid):
        cs = build_controls(sno5, DragVariant.DRAG1, not_params)
        s = np.zeros((grid.n_steps + 1, 5, 5), dtype=complex)
        heff = h_eff_exact(sno5, cs, s, grid)
        from drag_forge.model import generators
        gen = generators(sno5)
        tn = grid.nodes()
        want = not_params.t_g * (
            gen.h_drift[None]
            + np.asarray(cs.delta(tn))[:, None, None] * gen.h_z[None]
            + 0.5 * np.asarray(cs.omega_x(tn))[:, None, None] * gen.h_x[None]
            + 0.5 * np.asarray(cs.omega_y(tn))[:, None, None] * gen.h_y[None])
        np.testing.assert_allclose(heff, want, atol=1e-11)

    def test_static_frame_is_conjugation(self, sno3):
        # constant S and constant H: the derivative term drops out
        from drag_forge.pulses import ControlSet
        mk = lambda c: (lambda t: np.full_like(np.asarray(t, dtype=float), c))
        zero = mk(0.0)
        cs = ControlSet(mk(0.8), zero, mk(0.1), zero, zero, zero, 1.0, "const")
        grid = TimeGrid(1.0, 256)
        s_const = np.zeros((257, 3, 3), dtype=complex)
        s_const[:, 0, 2] = 0.3 - 0.1j
        s_const[:, 2, 0] = 0.3 + 0.1j
        heff = h_eff_exact(sno3, cs, s_const, grid)
        w, v = np.linalg.eigh(s_const[0])
        a = (v * np.exp(-1j * w)[None, :]) @ v.conj().T
        from drag_forge.model import generators, hamiltonian_at
        h = 1.0 * hamiltonian_at(generators(sno3), 0.1, 0.8, 0.0)
        want = a.conj().T @ h @ a
        np.testing.assert_allclose(heff[128], want, atol=1e-10)

    def test_first_order_remainder_scales_quadratically(self, sno5):
        # Richardson-style check: halving epsilon (doubling t_g) divides the
        # order-0 series remainder by ~4 when S = eps S^(1) only
        devs = []
        for tg in (4.0, 8.0):
            p = GaussianParams(math.pi, tg / 4, tg)
            devs.append(series_vs_exact_deviation(
                sno5, DragVariant.OPTIMAL1, p, TimeGrid(tg, 2048), 0))
        assert devs[0] / devs[1] == pytest.approx(2.0, rel=0.1)


class TestOrderScaling:
    @pytest.mark.parametrize("order", [0, 1, 2])
    def test_slope_matches_order(self, sno5, order):
        devs = []
        for tg in (4.0, 8.0, 16.0):
            p = GaussianParams(math.pi, tg / 4, tg)
            devs.append(series_vs_exact_deviation(
                sno5, DragVariant.OPTIMAL1, p, TimeGrid(tg, 2048), order))
        slopes = [math.log2(devs[i] / devs[i + 1]) for i in range(2)]
        for s in slopes:
            assert abs(s - (order + 1)) < 0.3

    def test_third_order_stack_scales_quartically(self, sno5):
        # pins the order-3 commutator stack: any mistranscribed term breaks
        # the eps^4 scaling of the series remainder
        devs = []
        for tg in (4.0, 8.0):
            p = GaussianParams(math.pi, tg / 4, tg)
            devs.append(series_vs_exact_deviation(
                sno5, DragVariant.DRAG2, p, TimeGrid(tg, 4096), 3))
        assert abs(math.log2(devs[0] / devs[1]) - 4.0) < 0.3


def test_frame_transform_is_read_only(sno5, not_params, grid):
    ft = frame_first_order(sno5, DragVariant.DRAG1, not_params, grid)
    with pytest.raises(ValueError):
        ft.s[0, 0, 0] = 1.0

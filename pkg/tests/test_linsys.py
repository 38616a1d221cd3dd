import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseport.algebra2 import Mat2
from phaseport.integrate import IntegratorOptions, integrate
from phaseport.linsys import (
    Classification, DefectiveMatrixError,
    classify_linear, eval_solution, general_solution, solve_ivp,
)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False)


class TestGeneralSolution:
    def test_saddle_system(self):
        sol = general_solution(Mat2(1, 4, 1, 1))
        assert sol.kind == "real"
        assert (sol.lam1, sol.lam2) == pytest.approx((-1.0, 3.0), abs=1e-12)
        assert sol.v1 == pytest.approx((-4.0, 2.0), abs=1e-12)
        assert sol.v2 == pytest.approx((-4.0, -2.0), abs=1e-12)

    def test_pure_rotation(self):
        sol = general_solution(Mat2(0, 2, -2, 0))
        assert sol.kind == "complex"
        assert (sol.alpha, sol.beta) == pytest.approx((0.0, 2.0), abs=1e-12)
        assert sol.vr == pytest.approx((-2.0, 0.0), abs=1e-12)
        assert sol.vi == pytest.approx((0.0, -2.0), abs=1e-12)

    def test_stable_node_directions(self):
        sol = general_solution(Mat2(-2, 1, 1, -2))
        assert (sol.lam1, sol.lam2) == pytest.approx((-3.0, -1.0), abs=1e-12)
        # directions up to scaling: (-1, 1) and (-1, -1)
        assert sol.v1[0] * 1 - sol.v1[1] * (-1) == pytest.approx(0.0, abs=1e-12)
        assert sol.v2[0] * (-1) - sol.v2[1] * (-1) == pytest.approx(0.0, abs=1e-12)


class TestSolveIVP:
    def test_coefficients_for_saddle(self):
        ivp = solve_ivp(Mat2(1, 4, 1, 1), (4.0, 6.0))
        assert ivp.c1 == pytest.approx(1.0, abs=1e-9)
        assert ivp.c2 == pytest.approx(-2.0, abs=1e-9)

    def test_explicit_solution_at_t1(self):
        # x(t) = -4 e^{-t} + 8 e^{3t}, y(t) = 2 e^{-t} + 4 e^{3t}
        ivp = solve_ivp(Mat2(1, 4, 1, 1), (4.0, 6.0))
        x, y = eval_solution(ivp, 1.0)
        assert x == pytest.approx(-4 * math.exp(-1) + 8 * math.exp(3), rel=1e-12)
        assert y == pytest.approx(2 * math.exp(-1) + 4 * math.exp(3), rel=1e-12)

    def test_single_mode_solution(self):
        # x(t) = 3 e^{3t}, y(t) = -3 e^{3t}
        ivp = solve_ivp(Mat2(1, -2, 5, 8), (3.0, -3.0))
        for t in (0.0, 0.5, 1.0):
            x, y = eval_solution(ivp, t)
            assert x == pytest.approx(3 * math.exp(3 * t), rel=1e-9)
            assert y == pytest.approx(-3 * math.exp(3 * t), rel=1e-9)

    def test_membrane_diffusion_concentrations(self):
        # C1(t) = 2.4 + 0.6 e^{-0.05 t}, C2(t) = 2.4 - 2.4 e^{-0.05 t}
        m = Mat2(-0.01, 0.01, 0.04, -0.04)
        ivp = solve_ivp(m, (3.0, 0.0))
        for t in (0.0, 10.0, 100.0):
            c1, c2 = eval_solution(ivp, t)
            assert c1 == pytest.approx(2.4 + 0.6 * math.exp(-0.05 * t), abs=1e-9)
            assert c2 == pytest.approx(2.4 - 2.4 * math.exp(-0.05 * t), abs=1e-9)

    def test_defective_matrix_rejected(self):
        with pytest.raises(DefectiveMatrixError):
            solve_ivp(Mat2(1, 1, 0, 1), (1.0, 1.0))  # Jordan block

    def test_scalar_matrix_solves_exactly(self):
        # full eigenspace: x(t) = x0 e^{2t} through any initial point
        ivp = solve_ivp(Mat2(2, 0, 0, 2), (1.0, -3.0))
        x, y = eval_solution(ivp, 0.7)
        assert x == pytest.approx(math.exp(1.4), rel=1e-12)
        assert y == pytest.approx(-3 * math.exp(1.4), rel=1e-12)

    def test_overflow_guard(self):
        ivp = solve_ivp(Mat2(1, -2, 5, 8), (3.0, -3.0))
        with pytest.raises(OverflowError):
            eval_solution(ivp, 300.0)  # lam t = 1800 > 700

    @settings(max_examples=150, deadline=None)
    @given(finite, finite, finite, finite, finite, finite)
    def test_initial_point_reproduced(self, a, b, c, d, x0, y0):
        m = Mat2(a, b, c, d)
        try:
            ivp = solve_ivp(m, (x0, y0))
        except DefectiveMatrixError:
            return
        x, y = eval_solution(ivp, 0.0)
        assert abs(x - x0) <= 1e-9 * max(1.0, abs(x0), abs(y0))
        assert abs(y - y0) <= 1e-9 * max(1.0, abs(x0), abs(y0))

    def test_ode_residual_on_random_systems(self):
        # central finite difference of the closed form satisfies dX/dt = m X
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 200:
            a, b, c, d = rng.uniform(-3, 3, size=4)
            x0, y0 = rng.uniform(-2, 2, size=2)
            t = rng.uniform(0.0, 3.0)
            m = Mat2(a, b, c, d)
            try:
                ivp = solve_ivp(m, (x0, y0))
            except DefectiveMatrixError:
                continue
            h = 1e-6
            xm, ym = eval_solution(ivp, t - h)
            xp, yp = eval_solution(ivp, t + h)
            x, y = eval_solution(ivp, t)
            fd = ((xp - xm) / (2 * h), (yp - ym) / (2 * h))
            rhs = m.mul_vec((x, y))
            scale = max(1.0, abs(rhs[0]), abs(rhs[1]))
            assert abs(fd[0] - rhs[0]) <= 1e-5 * scale
            assert abs(fd[1] - rhs[1]) <= 1e-5 * scale
            checked += 1

    def test_rotation_conserves_radius(self):
        # alpha = 0: x^2 + y^2 constant along the closed form
        ivp = solve_ivp(Mat2(0, 2, -2, 0), (1.5, 0.0))
        r0 = None
        for t in np.linspace(0.0, 10.0, 101):
            x, y = eval_solution(ivp, t)
            r = x * x + y * y
            r0 = r if r0 is None else r0
            assert abs(r - r0) <= 1e-9 * r0

    @pytest.mark.parametrize("mat,init", [
        (Mat2(1, 4, 1, 1), (4.0, 6.0)),
        (Mat2(-2, 1, 1, -2), (1.0, 2.0)),
        (Mat2(1, -2, 5, 8), (3.0, -3.0)),
        (Mat2(-0.01, 0.01, 0.04, -0.04), (3.0, 0.0)),
        (Mat2(0, 2, -2, 0), (1.5, 0.0)),
    ])
    def test_closed_form_matches_adaptive_integration(self, mat, init):
        ivp = solve_ivp(mat, init)

        def rhs(t, s):
            return np.asarray(mat.mul_vec((s[0], s[1])))

        for t_end in (0.5, 1.0, 2.0):
            traj = integrate(rhs, np.asarray(init), t_end, IntegratorOptions(rtol=1e-10, atol=1e-12))
            assert traj.reason == "t_end"
            want = eval_solution(ivp, t_end)
            got = traj.states[-1]
            scale = max(1.0, abs(want[0]), abs(want[1]))
            assert abs(got[0] - want[0]) <= 1e-6 * scale
            assert abs(got[1] - want[1]) <= 1e-6 * scale


class TestClassifyLinear:
    @pytest.mark.parametrize("mat,want", [
        # det-tr fixtures
        (Mat2(1, 2, 3, 4), Classification.SADDLE),
        (Mat2(4, 1, 1, 2), Classification.UNSTABLE_NODE),
        (Mat2(-2, 3, -2, 1), Classification.STABLE_SPIRAL),
        (Mat2(1, -1, 2, -1), Classification.CENTER),
        # the seven classification exercises
        (Mat2(1, 4, 2, 3), Classification.SADDLE),
        (Mat2(5, -1, 3, 1), Classification.UNSTABLE_NODE),
        (Mat2(3, -5, 1, -1), Classification.UNSTABLE_SPIRAL),
        (Mat2(-2, 1, 1, -2), Classification.STABLE_NODE),
        (Mat2(0, -2, 1, -2), Classification.STABLE_SPIRAL),
        (Mat2(-1, -1, 2, 1), Classification.CENTER),
        (Mat2(-2, -1, 3, 2), Classification.SADDLE),
        # further det-tr exercises
        (Mat2(3, 1, -20, 6), Classification.UNSTABLE_SPIRAL),
        (Mat2(2, 1, 2, -10), Classification.SADDLE),
        (Mat2(2, 1, 5, -2), Classification.SADDLE),
        (Mat2(1, 10, -10, -1), Classification.CENTER),
        # two-compartment system at a=0.5, b=2, c=4.5, e=3
        (Mat2(-5, 2, 0.5, -5), Classification.STABLE_NODE),
        # zero eigenvalue
        (Mat2(-0.01, 0.01, 0.04, -0.04), Classification.DEGENERATE),
    ])
    def test_fixtures(self, mat, want):
        assert classify_linear(mat) is want

    @settings(max_examples=300, deadline=None)
    @given(finite, finite, finite, finite)
    def test_stable_classes_have_negative_real_parts(self, a, b, c, d):
        from phaseport.algebra2 import eigenvalues
        m = Mat2(a, b, c, d)
        cls = classify_linear(m)
        if cls in (Classification.STABLE_NODE, Classification.STABLE_SPIRAL):
            z1, z2 = eigenvalues(m).as_complex_pair()
            assert z1.re < 0 and z2.re < 0

import numpy as np
import pytest

from autopilot.exceptions import (
    AlgebraicLoopError,
    DimensionError,
    GammaTooSmallError,
    RiccatiError,
)
from autopilot.services.lti import (
    RationalTransferFunction,
    StateSpaceSystem,
    realize,
    ss_to_tf,
)
from autopilot.services.synthesis import (
    CareProblem,
    FixedStructureController,
    achieved_margin,
    care_residual,
    central_controller,
    four_block,
    hinf_norm,
    is_internally_stable,
    loop_shaping_controller,
    ncf,
    solve_care,
)
from tests.utils import dense_peak_gain, random_lowpass_tf, random_stable_system

tf = RationalTransferFunction.from_coefficients
INTEGRATOR = tf([1.0], [1.0, 0.0])


def siso_margin_on_grid(plant, controller, omegas):
    s = 1j * np.asarray(omegas)
    P, K = plant(s), controller(s)
    ratio = np.abs(1.0 + P * K) / (
        np.sqrt(1.0 + np.abs(P) ** 2) * np.sqrt(1.0 + np.abs(K) ** 2)
    )
    return float(np.min(ratio))


def test_random_care_solutions():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 3))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, m))
        C = rng.normal(size=(n, n))
        problem = CareProblem(A, B, C.T @ C + 0.1 * np.eye(n), np.eye(m))
        X = solve_care(problem)
        scale = max(1.0, np.linalg.norm(X) * np.linalg.norm(A))
        assert care_residual(problem, X) <= 1e-8 * scale
        closed = np.linalg.eigvals(A - problem.G @ X)
        assert np.all(closed.real < 0.0)


def test_badly_scaled_care_matches_the_rescaled_solution():
    A = np.array([[-1.0, 1.0], [0.0, -2.0]])
    B = np.array([[0.0], [1.0]])
    nominal = solve_care(CareProblem(A, B, np.eye(2), np.eye(1)))
    # states rescaled by d: |H| grows to about 1e16
    d = np.array([1.0, 1e8])
    scaled = CareProblem(
        A * d[None, :] / d[:, None], B / d[:, None], np.diag(d**2), np.eye(1)
    )
    X = solve_care(scaled, refine=False)
    assert X / np.outer(d, d) == pytest.approx(nominal, rel=1e-6, abs=1e-9)
    closed = np.linalg.eigvals(scaled.A - scaled.G @ solve_care(scaled))
    assert np.all(closed.real < 0.0)


def test_care_not_stabilizable():
    # the unstable mode at +1 is unreachable from B
    A = np.diag([1.0, -1.0])
    B = np.array([[0.0], [1.0]])
    with pytest.raises(RiccatiError) as error:
        solve_care(CareProblem(A, B, np.eye(2), np.eye(1)))
    assert error.value.mode in (
        "not-stabilizable",
        "not-stabilizing",
        "imaginary-axis",
    )


def test_care_rejects_asymmetric_weights():
    with pytest.raises(DimensionError):
        asymmetric = np.array([[1.0, 2.0], [0.0, 1.0]])
        CareProblem(np.eye(2), np.ones((2, 1)), asymmetric, 1)


def test_hinf_norm_matches_dense_grid():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        sys = random_stable_system(rng, n, inputs=int(rng.integers(1, 3)))
        magnitudes = np.abs(sys.poles())
        omegas = np.concatenate(
            [
                np.logspace(-4, 6, 2000),
                np.abs(sys.poles().imag),
                np.linspace(0.0, 2.0 * magnitudes.max(), 2000),
            ]
        )
        grid_peak = dense_peak_gain(sys, omegas)
        norm = hinf_norm(sys)
        assert grid_peak <= norm * (1.0 + 1e-6)
        assert norm <= grid_peak * (1.0 + 1e-3)


def test_hinf_norm_ignores_realization_scaling():
    rng = np.random.default_rng(19)
    for _ in range(10):
        sys = random_stable_system(rng, 4)
        d = np.array([1.0, 1e3, 1e6, 1e-2])
        # same transfer function, state coordinates scaled by d
        scaled = StateSpaceSystem(
            sys.A * d[:, None] / d[None, :],
            sys.B * d[:, None],
            sys.C / d[None, :],
            sys.D,
        )
        assert hinf_norm(scaled) == pytest.approx(hinf_norm(sys), rel=1e-5)


def test_hinf_norm_special_cases():
    assert hinf_norm(2.5) == 2.5
    assert hinf_norm(INTEGRATOR) == np.inf
    assert hinf_norm(tf([1.0], [1.0, 1.0])) == pytest.approx(1.0, rel=1e-5)


def test_optimal_margin_closed_forms():
    assert ncf(INTEGRATOR).b_opt == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-6)
    static = ncf(3.0)
    assert static.b_opt == 1.0
    assert static.gamma_min == 1.0
    lowpass = ncf(tf([1.0], [1.0, 1.0]))
    assert 1.0 / np.sqrt(2.0) < lowpass.b_opt <= 1.0


def test_central_controller_for_integrator():
    gamma = 1.05 * np.sqrt(2.0)
    K = central_controller(realize(INTEGRATOR), gamma)
    K_tf = ss_to_tf(K)
    assert K_tf.numerator.coefficients == pytest.approx([10.7561], rel=1e-4)
    assert K_tf.denominator.coefficients == pytest.approx([1.0, 11.7561], rel=1e-4)
    b = achieved_margin(INTEGRATOR, K)
    assert (1.0 - 1e-5) / gamma <= b <= 1.0 / np.sqrt(2.0) + 1e-6
    with pytest.raises(GammaTooSmallError):
        central_controller(realize(INTEGRATOR), 1.0)


def test_central_controller_on_random_plants():
    rng = np.random.default_rng(3)
    for _ in range(20):
        plant = random_lowpass_tf(rng, int(rng.integers(1, 4)))
        data, gamma, K = loop_shaping_controller(realize(plant), 1.05)
        assert gamma == pytest.approx(1.05 * data.gamma_min)
        b = achieved_margin(plant, K)
        assert (1.0 - 1e-5) / gamma <= b <= data.b_opt + 1e-6
        assert is_internally_stable(plant, K)


def test_achieved_margin_matches_siso_formula():
    plant = tf([1.0], [1.0, 1.0])
    assert achieved_margin(plant, 1.0) == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-5)
    assert achieved_margin(INTEGRATOR, 1.0) == pytest.approx(
        1.0 / np.sqrt(2.0), rel=1e-5
    )
    K = tf([2.0], [1.0, 3.0])
    grid = np.logspace(-4, 5, 20000)
    b = achieved_margin(plant, K)
    assert b <= siso_margin_on_grid(plant, K, grid) * (1.0 + 1e-6)
    assert b == pytest.approx(siso_margin_on_grid(plant, K, grid), rel=1e-3)


def test_unstable_loop_has_zero_margin():
    unstable = tf([1.0], [1.0, -1.0])
    assert achieved_margin(unstable, 0.0) == 0.0
    assert not is_internally_stable(unstable, 0.0)
    assert is_internally_stable(unstable, 2.0)
    assert achieved_margin(unstable, 2.0) > 0.0


def test_ill_posed_loop():
    with pytest.raises(AlgebraicLoopError):
        four_block(1.0, -1.0)
    assert achieved_margin(1.0, -1.0) == 0.0
    assert not is_internally_stable(1.0, -1.0)


def test_four_block_dimensions():
    two_outputs = random_stable_system(np.random.default_rng(0), 2, 1, 2)
    with pytest.raises(DimensionError):
        four_block(two_outputs, 1.0)


def test_fixed_structure_controller():
    controller = FixedStructureController([2.0, 1.0], [3.0])
    assert controller.numerator_order == 1
    assert controller.denominator_order == 1
    assert controller.coefficients.tolist() == [2.0, 1.0, 3.0]
    g = controller.to_tf()
    assert g.denominator.coefficients.tolist() == [1.0, 3.0]
    again = FixedStructureController.from_tf(tf([1.0], [1.0, 3.0]), 1, 1)
    assert again.coefficients.tolist() == [0.0, 1.0, 3.0]
    with pytest.raises(DimensionError):
        FixedStructureController([1.0, 2.0, 3.0], [1.0])

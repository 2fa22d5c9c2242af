import itertools

import numpy as np
import pytest

from autopilot.exceptions import VgapError
from autopilot.services.lti import RationalTransferFunction, series
from autopilot.services.synthesis import (
    achieved_margin,
    is_internally_stable,
    loop_shaping_controller,
)
from autopilot.services.vgap import (
    VgapGrid,
    VgapMatrix,
    chordal_distance,
    select_nominal,
    vgap_matrix,
    vgap_metric,
    winding_condition_holds,
)
from tests.utils import random_lowpass_tf

tf = RationalTransferFunction.from_coefficients
COARSE_GRID = VgapGrid(points_per_decade=100)


def test_chordal_distance():
    assert chordal_distance(0.0, 1.0) == pytest.approx(1.0 / np.sqrt(2.0))
    assert chordal_distance(np.inf, np.inf) == 0.0
    assert chordal_distance(np.inf, 0.0) == 1.0
    assert chordal_distance(2.0 + 1j, 2.0 + 1j) == 0.0


def test_constant_plants():
    result = vgap_metric(0.0, 1.0)
    assert result.winding_ok
    assert result.value == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-9)


def test_identity_and_symmetry():
    p1 = tf([2.0], [1.0, 1.0])
    p2 = tf([3.0], [1.0, 2.0, 4.0])
    assert vgap_metric(p1, p1, COARSE_GRID).value == pytest.approx(0.0, abs=1e-12)
    forward = vgap_metric(p1, p2, COARSE_GRID).value
    backward = vgap_metric(p2, p1, COARSE_GRID).value
    assert 0.0 < forward < 1.0
    assert forward == pytest.approx(backward, abs=1e-9)


def test_winding_failure_forces_one():
    stable, unstable = tf([1.0], [1.0, 1.0]), tf([1.0], [1.0, -1.0])
    result = vgap_metric(unstable, stable)
    assert not result.winding_ok
    assert result.value == 1.0
    assert not winding_condition_holds(unstable, stable)


def test_unstable_plants_with_matching_poles():
    p1 = tf([2.0], [1.0, -1.0])
    p2 = tf([2.2], [1.0, -1.0])
    assert winding_condition_holds(p1, p2)
    assert 0.0 < vgap_metric(p1, p2, COARSE_GRID).value < 0.2


@pytest.mark.parametrize(
    "denominator", [[1.0, 0.0], [1.0, 0.0, 1.0]], ids=["origin", "resonance"]
)
def test_imaginary_axis_poles_on_the_default_grid(denominator):
    # |k1 - k2| / (k1 + k2) is reached where the shared pole factor is 1 / sqrt(1.1)
    result = vgap_metric(tf([1.0], denominator), tf([1.1], denominator))
    assert result.winding_ok
    assert result.value == pytest.approx(0.1 / 2.1, abs=1e-4)


def test_integrators_with_different_gains():
    result = vgap_metric(tf([1.0], [1.0, 0.0]), tf([1.1], [1.0, 0.0]), COARSE_GRID)
    assert result.winding_ok
    assert 0.0 < result.value < 0.1


def test_triangle_inequality_on_random_triples():
    rng = np.random.default_rng(5)
    for _ in range(100):
        plants = [random_lowpass_tf(rng, int(rng.integers(1, 3))) for _ in range(3)]
        gap = {
            (i, j): vgap_metric(plants[i], plants[j], COARSE_GRID).value
            for i, j in itertools.permutations(range(3), 2)
        }
        for i, j, k in itertools.permutations(range(3)):
            assert gap[(i, k)] <= gap[(i, j)] + gap[(j, k)] + 1e-6
        for value in gap.values():
            assert 0.0 <= value <= 1.0


def test_vgap_matrix_is_symmetric():
    plants = [tf([k], [1.0, 1.0]) for k in (1.0, 2.0, 4.0, 8.0)]
    matrix = vgap_matrix(plants, ["k1", "k2", "k4", "k8"], COARSE_GRID, workers=2)
    assert matrix.size == 4
    assert np.allclose(matrix.values, matrix.values.T)
    assert np.all(np.diag(matrix.values) == 0.0)
    frame = matrix.to_frame()
    assert list(frame["operating_point"]) == ["k1", "k2", "k4", "k8"]
    with pytest.raises(VgapError):
        vgap_matrix([])


def test_select_nominal_matches_brute_force():
    plants = [tf([k], [1.0, 1.0]) for k in (1.0, 2.0, 4.0, 8.0)]
    matrix = vgap_matrix(plants, grid=COARSE_GRID)
    selection = select_nominal(matrix)
    row_max = matrix.values.max(axis=1)
    assert selection.index == int(np.argmin(row_max))
    assert selection.r_star == pytest.approx(row_max.min())
    assert selection.index in (1, 2)


def test_select_nominal_examples():
    selection = select_nominal(
        np.array([[0.0, 0.3, 0.5], [0.3, 0.0, 0.2], [0.5, 0.2, 0.0]])
    )
    assert selection.index == 1
    assert selection.r_star == pytest.approx(0.3)
    assert selection.ranking[0] == 1

    duplicated = vgap_matrix([tf([1.0], [1.0, 1.0])] * 2, grid=COARSE_GRID)
    twin = select_nominal(duplicated)
    assert twin.index == 0
    assert twin.r_star == pytest.approx(0.0, abs=1e-12)

    single = select_nominal(vgap_matrix([tf([1.0], [1.0, 1.0])]))
    assert single.index == 0
    assert single.r_star == 0.0


def test_select_nominal_is_permutation_equivariant():
    values = np.array(
        [
            [0.0, 0.4, 0.6, 0.3],
            [0.4, 0.0, 0.2, 0.5],
            [0.6, 0.2, 0.0, 0.7],
            [0.3, 0.5, 0.7, 0.0],
        ]
    )
    original = select_nominal(values).index
    order = [2, 0, 3, 1]
    permuted = values[np.ix_(order, order)]
    assert order[select_nominal(permuted).index] == original


def test_all_winding_failures_raise():
    failing = VgapMatrix(
        values=np.ones((2, 2)) - np.eye(2),
        winding_ok=np.eye(2, dtype=bool),
        argmax_omega=np.full((2, 2), np.nan),
        ids=["a", "b"],
    )
    with pytest.raises(VgapError, match="partition"):
        select_nominal(failing)


def test_margin_above_gap_implies_stability():
    rng = np.random.default_rng(17)
    certified = trials = 0
    while certified < 200 and trials < 2000:
        trials += 1
        nominal = random_lowpass_tf(rng, int(rng.integers(1, 3)))
        scale = 1.0 + rng.uniform(-0.6, 1.5)
        pole = -(0.2 + 5.0 * rng.random())
        perturbed = series(nominal, scale)
        if rng.random() < 0.5:
            perturbed = series(perturbed, tf([-pole], [1.0, -pole]))
        _, _, K = loop_shaping_controller(nominal, 1.05)
        margin = achieved_margin(nominal, K)
        gap = vgap_metric(nominal, perturbed, COARSE_GRID).value
        if gap < margin:
            certified += 1
            assert is_internally_stable(perturbed, K)
    assert certified == 200

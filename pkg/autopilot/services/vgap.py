"""SISO nu-gap metric and min-max nominal selection over an envelope.

The winding condition is checked on f(jw) = 1 + conj(p1(jw)) p2(jw), the
value of 1 + p1(-s) p2(s) on the imaginary axis. Its phase is unwrapped along
w >= 0 and mirrored for w < 0 (f(-jw) = conj f(jw)). The contour is indented
into the right half plane around imaginary-axis poles; such a pole of
multiplicity k adds exactly -k*pi to the phase of f.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from autopilot.core.config import settings
from autopilot.exceptions import VgapError
from autopilot.logger import logger
from autopilot.services.lti import RationalTransferFunction, as_tf, freq_response

MAX_REFINEMENT_PASSES = 40


@dataclass(frozen=True)
class VgapGrid:
    omega_min: float = 1.0e-4
    omega_max: float = 1.0e6
    points_per_decade: int = 400
    tolerance: float = 1.0e-6

    def omegas(self) -> np.ndarray:
        decades = np.log10(self.omega_max) - np.log10(self.omega_min)
        count = max(2, int(np.ceil(decades * self.points_per_decade)) + 1)
        return np.logspace(np.log10(self.omega_min), np.log10(self.omega_max), count)


@dataclass(frozen=True)
class VgapResult:
    value: float
    winding_ok: bool
    argmax_omega: Optional[float] = None


def chordal_distance(p1: complex, p2: complex) -> float:
    """Distance between the stereographic projections of p1 and p2."""
    inf1, inf2 = np.isinf(abs(p1)), np.isinf(abs(p2))
    if inf1 and inf2:
        return 0.0
    if inf1:
        return float(1.0 / np.sqrt(1.0 + abs(p2) ** 2))
    if inf2:
        return float(1.0 / np.sqrt(1.0 + abs(p1) ** 2))
    return float(
        abs(p1 - p2) / (np.sqrt(1.0 + abs(p1) ** 2) * np.sqrt(1.0 + abs(p2) ** 2))
    )


def _chordal(values1: np.ndarray, values2: np.ndarray) -> np.ndarray:
    return np.array([chordal_distance(a, b) for a, b in zip(values1, values2)])


def _evaluate(g: RationalTransferFunction, omegas: np.ndarray) -> np.ndarray:
    """g(jw) with poles mapped to complex infinity."""
    response = freq_response(g, omegas)
    return np.where(response.flagged, np.inf + 0j, response.response)


def _value_at_infinity(g: RationalTransferFunction) -> float:
    return g.high_frequency_gain()


def _wrap(angle):
    return (np.asarray(angle) + np.pi) % (2.0 * np.pi) - np.pi


def _axis_poles(p1: RationalTransferFunction, p2: RationalTransferFunction):
    """Non-negative frequencies of imaginary-axis poles of f with multiplicities."""
    roots = np.concatenate([-p1.poles(), p2.poles()])
    on_axis = roots[
        np.abs(roots.real) <= settings.axis_tol * np.maximum(1.0, np.abs(roots))
    ]
    frequencies = np.sort(np.abs(on_axis.imag))
    groups: List[Tuple[float, int]] = []
    for w in frequencies:
        if groups and abs(w - groups[-1][0]) <= 1e-6 * max(1.0, w):
            groups[-1] = (groups[-1][0], groups[-1][1] + 1)
        else:
            groups.append((float(w), 1))
    # conjugate pairs appear twice in |imag|, count each side once
    return [(w, k if w == 0.0 else max(1, k // 2)) for w, k in groups]


def _indentation(radius: float, w: float) -> float:
    # stay clear of the band where freq_response treats a point as a pole
    return max(radius, 1e3 * settings.axis_tol * max(1.0, w))


class _WindingFailure(Exception):
    pass


def _segment_phase(
    f, start: float, stop: float, base_points: np.ndarray, zero_tol: Callable
) -> float:
    """Unwrapped phase change of f(jw) for w in [start, stop], refined adaptively."""
    inside = base_points[(base_points > start) & (base_points < stop)]
    omegas = np.unique(np.concatenate([[start], inside, [stop]]))
    values = f(omegas)
    for _ in range(MAX_REFINEMENT_PASSES):
        if np.any(np.abs(values) <= zero_tol(omegas)):
            raise _WindingFailure("1 + p1~ p2 vanishes on the imaginary axis")
        steps = _wrap(np.diff(np.angle(values)))
        coarse = np.flatnonzero(np.abs(steps) > np.pi / 4.0)
        if coarse.size == 0:
            return float(np.sum(steps))
        left, right = omegas[coarse], omegas[coarse + 1]
        if np.any(right - left <= 1e-13 * np.maximum(1.0, right)):
            raise _WindingFailure("phase of 1 + p1~ p2 jumps on the imaginary axis")
        positive = left > 0.0
        midpoints = np.where(
            positive, np.sqrt(np.abs(left * right)), 0.5 * (left + right)
        )
        omegas = np.concatenate([omegas, midpoints])
        order = np.argsort(omegas)
        omegas = omegas[order]
        values = np.concatenate([values, f(midpoints)])[order]
    logger.warning("Phase refinement did not settle; using the last grid")
    return float(np.sum(_wrap(np.diff(np.angle(values)))))


def winding_number(
    p1: RationalTransferFunction,
    p2: RationalTransferFunction,
    grid: VgapGrid = None,
) -> Optional[int]:
    """Winding number of 1 + p1(-s) p2(s).

    None when the function vanishes on the imaginary axis or at infinity.
    """
    grid = grid or VgapGrid()
    f_infinity = 1.0 + _value_at_infinity(p1) * _value_at_infinity(p2)
    if abs(f_infinity) <= settings.axis_tol:
        return None

    def f(omegas):
        return 1.0 + np.conj(_evaluate(p1, omegas)) * _evaluate(p2, omegas)

    def zero_tol(omegas):
        scale = 1.0 + np.abs(_evaluate(p1, omegas)) * np.abs(_evaluate(p2, omegas))
        return settings.axis_tol * np.where(np.isfinite(scale), scale, 0.0)

    roots = np.concatenate([p1.poles(), p1.zeros(), p2.poles(), p2.zeros()])
    magnitudes = np.abs(roots[np.abs(roots) > 0.0])
    top = max(grid.omega_max, 1e4 * (magnitudes.max() if magnitudes.size else 1.0))
    smallest = min(1.0, magnitudes.min() if magnitudes.size else 1.0)
    tail_grid = np.logspace(np.log10(grid.omega_max), np.log10(top), 40)
    base = np.concatenate([grid.omegas(), magnitudes, tail_grid])

    poles = _axis_poles(p1, p2)
    total = 0.0
    try:
        cursor = 0.0
        at_zero = [k for w, k in poles if w == 0.0]
        if at_zero:
            eps = _indentation(1e-6 * min(smallest, grid.omega_min), 0.0)
            value = f(np.array([eps]))[0]
            # jump from -eps to +eps across the pole at the origin
            raw = _wrap(2.0 * np.angle(value))
            total += -at_zero[0] * np.pi + _wrap(raw + at_zero[0] * np.pi)
            cursor = eps
        for w, k in [(w, k) for w, k in poles if w > 0.0]:
            eps = _indentation(1e-7 * w, w)
            total += 2.0 * _segment_phase(f, cursor, w - eps, base, zero_tol)
            before, after = f(np.array([w - eps, w + eps]))
            raw = _wrap(np.angle(after) - np.angle(before))
            # the mirrored pole at -jw contributes the same jump
            total += 2.0 * (-k * np.pi + _wrap(raw + k * np.pi))
            cursor = w + eps
        total += 2.0 * _segment_phase(f, cursor, top, base, zero_tol)
        tail = f(np.array([top]))[0]
        total += 2.0 * _wrap(np.angle(f_infinity) - np.angle(tail))
    except _WindingFailure as failure:
        logger.debug(str(failure))
        return None
    if not np.isfinite(total):
        raise VgapError("Phase of 1 + p1~ p2 is not finite along the imaginary axis")
    turns = total / (2.0 * np.pi)
    if abs(turns - round(turns)) > 0.25:
        logger.warning(f"Winding estimate {turns:.3f} is far from an integer")
    return -int(round(turns))


def _rhp_pole_count(g: RationalTransferFunction) -> Tuple[int, int]:
    poles = g.poles()
    on_axis = np.abs(poles.real) <= settings.axis_tol * np.maximum(1.0, np.abs(poles))
    return int(np.sum((poles.real > 0.0) & ~on_axis)), int(np.sum(on_axis))


def winding_condition_holds(
    p1: RationalTransferFunction, p2: RationalTransferFunction, grid: VgapGrid = None
) -> bool:
    wno = winding_number(p1, p2, grid)
    if wno is None:
        return False
    eta1, eta0_1 = _rhp_pole_count(p1)
    eta2, _ = _rhp_pole_count(p2)
    return wno + eta2 - eta1 - eta0_1 == 0


def _refine_supremum(p1, p2, omegas, distances, tolerance) -> Tuple[float, float]:
    index = int(np.argmax(distances))
    best, best_omega = float(distances[index]), float(omegas[index])
    low = omegas[max(index - 1, 0)]
    high = omegas[min(index + 1, omegas.size - 1)]
    for _ in range(50):
        if low <= 0.0 or high <= low:
            break
        local = np.logspace(np.log10(low), np.log10(high), 21)
        local_distances = _chordal(_evaluate(p1, local), _evaluate(p2, local))
        j = int(np.argmax(local_distances))
        improvement = local_distances[j] - best
        if local_distances[j] > best:
            best, best_omega = float(local_distances[j]), float(local[j])
        low, high = local[max(j - 1, 0)], local[min(j + 1, local.size - 1)]
        if improvement < tolerance:
            break
    return best, best_omega


def vgap_metric(p1, p2, grid: VgapGrid = None) -> VgapResult:
    """nu-gap between two SISO plants; 1 whenever the winding condition fails."""
    p1, p2 = as_tf(p1), as_tf(p2)
    grid = grid or VgapGrid()
    if not winding_condition_holds(p1, p2, grid):
        return VgapResult(value=1.0, winding_ok=False)
    omegas = np.concatenate([[0.0], grid.omegas()])
    distances = _chordal(_evaluate(p1, omegas), _evaluate(p2, omegas))
    at_infinity = chordal_distance(_value_at_infinity(p1), _value_at_infinity(p2))
    best, best_omega = _refine_supremum(p1, p2, omegas, distances, grid.tolerance)
    if at_infinity > best:
        best, best_omega = at_infinity, np.inf
    return VgapResult(
        value=min(max(best, 0.0), 1.0), winding_ok=True, argmax_omega=best_omega
    )


@dataclass(frozen=True, eq=False)
class VgapMatrix:
    values: np.ndarray
    winding_ok: np.ndarray
    argmax_omega: np.ndarray
    ids: List[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, index=self.ids, columns=self.ids)
        frame.index.name = "operating_point"
        return frame.reset_index()

    def to_dict(self) -> dict:
        return {
            "ids": list(self.ids),
            "values": self.values.tolist(),
            "winding_ok": self.winding_ok.tolist(),
            "argmax_omega": [
                [float(w) if np.isfinite(w) else None for w in row]
                for row in self.argmax_omega
            ],
        }


def vgap_matrix(
    plants: Sequence[RationalTransferFunction],
    ids: Sequence[str] = None,
    grid: VgapGrid = None,
    workers: int = 1,
) -> VgapMatrix:
    plants = [as_tf(p) for p in plants]
    n = len(plants)
    if n == 0:
        raise VgapError("Cannot build a v-gap matrix without plants")
    ids = list(ids) if ids is not None else [str(i) for i in range(n)]
    grid = grid or VgapGrid()
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(
            executor.map(
                lambda ij: vgap_metric(plants[ij[0]], plants[ij[1]], grid), pairs
            )
        )
    values = np.zeros((n, n))
    winding = np.ones((n, n), dtype=bool)
    argmax = np.full((n, n), np.nan)
    for (i, j), result in zip(pairs, results):
        values[i, j] = values[j, i] = result.value
        winding[i, j] = winding[j, i] = result.winding_ok
        if result.argmax_omega is not None:
            argmax[i, j] = argmax[j, i] = result.argmax_omega
        if not result.winding_ok:
            logger.warning(f"Winding condition fails between {ids[i]} and {ids[j]}")
    return VgapMatrix(values, winding, argmax, ids)


@dataclass(frozen=True)
class NominalSelection:
    index: int
    r_star: float
    ranking: List[int]
    row_max: List[float]


def select_nominal(matrix) -> NominalSelection:
    """Min-max center of the envelope; ties go to the lowest index."""
    if isinstance(matrix, VgapMatrix):
        values = matrix.values
    else:
        values = np.asarray(matrix, dtype=float)
    n = values.shape[0]
    if isinstance(matrix, VgapMatrix) and n > 1:
        off_diagonal = ~np.eye(n, dtype=bool)
        if not np.any(matrix.winding_ok[off_diagonal]):
            raise VgapError(
                "Winding condition fails for every pair of operating points; "
                "partition the envelope and design per region"
            )
    row_max = values.max(axis=1) if n else np.zeros(0)
    ranking = sorted(range(n), key=lambda i: (row_max[i], i))
    index = ranking[0]
    return NominalSelection(
        index=index,
        r_star=float(row_max[index]),
        ranking=ranking,
        row_max=[float(v) for v in row_max],
    )

"""Loop-shaping weights, magnitude bounds and the minimum-phase weight fit."""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from autopilot.exceptions import ConfigError, FitError, WeightError
from autopilot.logger import logger
from autopilot.services.lti import (
    Polynomial,
    RationalTransferFunction,
    StateSpaceSystem,
    as_tf,
    freq_response,
    magnitude_db,
    realize,
    series,
    ss_cascade,
)

DEFAULT_BOUND_GRID = np.logspace(-2, 4, 100)
BOUND_TOLERANCE_DB = 1e-9
LOG_ZETA_RANGE = (np.log10(0.05), 1.0)


@dataclass(frozen=True)
class WeightParams:
    K1: float = 1.0
    alpha1: float = 1.0
    beta1: float = 1.0
    K2: float = 1.0
    alpha2: float = 1.0
    beta2: float = 1.0

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.K1, self.alpha1, self.beta1, self.K2, self.alpha2, self.beta2]
        )


def _first_order_weight(K: float, alpha: float, beta: float, suffix: str):
    named = ((f"K{suffix}", K), (f"alpha{suffix}", alpha), (f"beta{suffix}", beta))
    for name, value in named:
        if not np.isfinite(value):
            raise WeightError(name, f"must be finite, got {value}")
    if K == 0:
        raise WeightError(f"K{suffix}", "must be nonzero")
    if not alpha > 0:
        raise WeightError(f"alpha{suffix}", f"must be positive, got {alpha}")
    if not beta > 0:
        raise WeightError(f"beta{suffix}", f"must be positive, got {beta}")
    return RationalTransferFunction.from_coefficients(
        [K, K * alpha], [1.0, beta]
    ).minimal()


def make_weights(
    p: WeightParams,
) -> Tuple[RationalTransferFunction, RationalTransferFunction]:
    """W1 = K1(s+alpha1)/(s+beta1), W2 = K2(s+alpha2)/(s+beta2)."""
    w1 = _first_order_weight(p.K1, p.alpha1, p.beta1, "1")
    w2 = _first_order_weight(p.K2, p.alpha2, p.beta2, "2")
    return w1, w2


@dataclass(frozen=True, eq=False)
class FrequencyBounds:
    lower: RationalTransferFunction
    upper: RationalTransferFunction
    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        if grid.size == 0:
            raise ConfigError("Bound grid must not be empty")
        object.__setattr__(self, "grid", grid)
        low, high = self.lower_magnitude(), self.upper_magnitude()
        if np.any(high < low):
            worst = grid[int(np.argmax(low - high))]
            raise ConfigError(
                f"Upper bound lies below the lower bound (first at {worst:.4g} rad/s)"
            )

    def lower_magnitude(self) -> np.ndarray:
        return np.abs(freq_response(self.lower, self.grid).response)

    def upper_magnitude(self) -> np.ndarray:
        return np.abs(freq_response(self.upper, self.grid).response)

    def center_magnitude(self) -> np.ndarray:
        """Geometric mean of the two bounds."""
        return np.sqrt(self.lower_magnitude() * self.upper_magnitude())

    def half_width_db(self) -> np.ndarray:
        upper_db = magnitude_db(self.upper_magnitude())
        return 0.5 * (upper_db - magnitude_db(self.lower_magnitude()))


def paper_bounds(grid: Sequence[float] = None) -> FrequencyBounds:
    zeros = np.polymul([1.0, 40.0], [1.0, 3000.0])
    poles = np.polymul(
        np.polymul([1.0, 1e-5], [1.0, 100.0]), np.polymul([1.0, 200.0], [1.0, 1000.0])
    )
    lower = RationalTransferFunction(Polynomial(3.0 * zeros), Polynomial(poles))
    upper = RationalTransferFunction(Polynomial(10.0 * zeros), Polynomial(poles))
    return FrequencyBounds(lower, upper, DEFAULT_BOUND_GRID if grid is None else grid)


def _coefficient_tf(section) -> RationalTransferFunction:
    return RationalTransferFunction.from_coefficients(
        section["numerator"], section["denominator"]
    )


def custom_bounds(lower, upper, grid: Sequence[float]) -> FrequencyBounds:
    return FrequencyBounds(_coefficient_tf(lower), _coefficient_tf(upper), grid)


@dataclass(frozen=True, eq=False)
class BoundReport:
    omega: np.ndarray
    loop_db: np.ndarray
    low_db: np.ndarray
    high_db: np.ndarray
    passed: np.ndarray

    @property
    def aggregate_pass(self) -> bool:
        return bool(np.all(self.passed))

    @property
    def violation_db(self) -> np.ndarray:
        below = self.low_db - self.loop_db
        above = self.loop_db - self.high_db
        excess = np.maximum(np.maximum(below, above), 0.0)
        return np.where(np.isfinite(excess), excess, np.inf)

    @property
    def worst_violation_db(self) -> float:
        return float(np.max(self.violation_db, initial=0.0))

    @property
    def pass_fraction(self) -> float:
        return float(np.mean(self.passed))

    @property
    def violations(self) -> List[float]:
        return [float(w) for w in self.omega[~self.passed]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "omega_rad_s": self.omega,
                "loop_db": self.loop_db,
                "low_db": self.low_db,
                "high_db": self.high_db,
                "pass": self.passed,
            }
        )

    def summary(self) -> dict:
        return {
            "aggregate_pass": self.aggregate_pass,
            "pass_fraction": self.pass_fraction,
            "worst_violation_db": self.worst_violation_db,
            "violations_rad_s": self.violations,
        }


def check_bounds(loop, b: FrequencyBounds) -> BoundReport:
    response = freq_response(as_tf(loop), b.grid)
    loop_db = np.where(response.flagged, np.inf, response.mag_db)
    low_db = magnitude_db(b.lower_magnitude())
    high_db = magnitude_db(b.upper_magnitude())
    passed = (loop_db >= low_db - BOUND_TOLERANCE_DB) & (
        loop_db <= high_db + BOUND_TOLERANCE_DB
    )
    return BoundReport(b.grid, loop_db, low_db, high_db, passed)


def check_rolloff(
    loop, plant, omega: float = 300.0, reduction_db: float = 25.0
) -> bool:
    """|loop(jw)| at least ``reduction_db`` below |plant(jw)|."""
    loop_mag = np.abs(as_tf(loop)(1j * omega))
    plant_mag = np.abs(as_tf(plant)(1j * omega))
    limit = plant_mag * 10.0 ** (-reduction_db / 20.0)
    return bool(loop_mag <= limit * (1.0 + 1e-9))


@dataclass(frozen=True, eq=False)
class MagnitudeFit:
    tf: RationalTransferFunction
    rms_db: float


class _SideLayout:
    """(log10 w, log10 zeta) per quadratic section, then log10 a when the
    order is odd. Every section is monic."""

    def __init__(self, order: int):
        self.quadratics = order // 2
        self.first_order = order % 2
        self.size = 2 * self.quadratics + self.first_order

    def polynomial(self, params: np.ndarray) -> Polynomial:
        poly = Polynomial([1.0])
        for i in range(self.quadratics):
            w = 10.0 ** params[2 * i]
            zeta = 10.0 ** params[2 * i + 1]
            poly = poly * Polynomial([1.0, 2.0 * zeta * w, w * w])
        if self.first_order:
            poly = poly * Polynomial([1.0, 10.0 ** params[-1]])
        return poly

    def log_magnitude(self, params: np.ndarray, omegas: np.ndarray) -> np.ndarray:
        total = np.zeros_like(omegas)
        for i in range(self.quadratics):
            w = 10.0 ** params[2 * i]
            zeta = 10.0 ** params[2 * i + 1]
            real = w * w - omegas**2
            imag = 2.0 * zeta * w * omegas
            total += 0.5 * np.log10(real**2 + imag**2)
        if self.first_order:
            a = 10.0 ** params[-1]
            total += 0.5 * np.log10(a * a + omegas**2)
        return total

    def bounds(self, omegas: np.ndarray) -> Tuple[List[float], List[float]]:
        # corner frequencies stay on the sampled span, damping in [0.05, 10]
        lo_w = float(np.log10(omegas.min()))
        hi_w = float(np.log10(omegas.max()))
        lower, upper = [], []
        for _ in range(self.quadratics):
            lower += [lo_w, LOG_ZETA_RANGE[0]]
            upper += [hi_w, LOG_ZETA_RANGE[1]]
        if self.first_order:
            lower.append(lo_w)
            upper.append(hi_w)
        return lower, upper


class _SectionLayout:
    """Parameter layout: log10 gain, then the numerator side and the
    denominator side of one order."""

    def __init__(self, order: int):
        self.order = order
        self.side = _SideLayout(order)
        self.quadratics = self.side.quadratics
        self.first_order = self.side.first_order
        self.per_side = self.side.size
        self.size = 1 + 2 * self.per_side

    def split(self, x: np.ndarray):
        return x[0], x[1 : 1 + self.per_side], x[1 + self.per_side :]

    def side_polynomial(self, params: np.ndarray) -> Polynomial:
        return self.side.polynomial(params)

    def model_db(self, x: np.ndarray, omegas: np.ndarray) -> np.ndarray:
        log_gain, numerator, denominator = self.split(x)
        return 20.0 * (
            log_gain
            + self.side.log_magnitude(numerator, omegas)
            - self.side.log_magnitude(denominator, omegas)
        )

    def bounds(self, omegas: np.ndarray):
        side_lo, side_hi = self.side.bounds(omegas)
        lower = np.array([-np.inf] + side_lo + side_lo)
        upper = np.array([np.inf] + side_hi + side_hi)
        return lower, upper

    def initial_guesses(self, omegas: np.ndarray, target_db: np.ndarray, starts: int):
        lo, hi = np.log10(omegas.min()), np.log10(omegas.max())
        zetas = [0.0, 0.5, -0.3, 1.0]
        guesses = []
        for j in range(starts):
            offset = (j + 0.5) / starts
            sections = 2 * (self.quadratics + self.first_order)
            fractions = (np.arange(sections) + offset) / max(sections, 1)
            positions = lo + (hi - lo) * fractions
            numerator_w = positions[j % 2 :: 2]
            denominator_w = positions[(j + 1) % 2 :: 2]
            side_num, side_den = [], []
            for i in range(self.quadratics):
                side_num += [numerator_w[i], zetas[j % len(zetas)]]
                side_den += [denominator_w[i], zetas[(j + 1) % len(zetas)]]
            if self.first_order:
                side_num.append(numerator_w[-1])
                side_den.append(denominator_w[-1])
            x = np.array([0.0] + side_num + side_den)
            x[0] = np.mean(target_db - self.model_db(x, omegas)) / 20.0
            guesses.append(x)
        return guesses


def reflect_to_lhp(poly: Polynomial) -> Polynomial:
    """Mirror right-half-plane roots; |poly(jw)| is unchanged."""
    roots = poly.roots()
    if not np.any(roots.real > 0.0):
        return poly
    mirrored = np.where(roots.real > 0.0, -roots.real + 1j * roots.imag, roots)
    return Polynomial.from_roots(mirrored, poly.leading)


def fit_minimum_phase(
    samples: Sequence[Tuple[float, float]], order: int, starts: int = 4
) -> MagnitudeFit:
    """Stable minimum-phase transfer function whose dB magnitude fits ``samples``."""
    samples = np.asarray(samples, dtype=float).reshape(-1, 2)
    omegas, magnitudes = samples[:, 0], samples[:, 1]
    if order < 0:
        raise FitError(f"Fit order must be non-negative, got {order}")
    if samples.shape[0] < 2 * order + 1:
        raise FitError(
            f"{samples.shape[0]} samples cannot determine an order-{order} fit; "
            f"need at least {2 * order + 1} or a lower order"
        )
    if np.any(magnitudes <= 0.0) or np.any(omegas <= 0.0):
        raise FitError("Fit samples need positive frequencies and magnitudes")
    target_db = magnitude_db(magnitudes)

    if order == 0:
        gain = 10.0 ** (np.mean(target_db) / 20.0)
        rms = float(np.sqrt(np.mean((target_db - magnitude_db(gain)) ** 2)))
        return MagnitudeFit(RationalTransferFunction.constant(gain), rms)

    layout = _SectionLayout(order)
    lower, upper = layout.bounds(omegas)

    def residuals(x):
        return layout.model_db(x, omegas) - target_db

    best = None
    for guess in layout.initial_guesses(omegas, target_db, starts):
        guess = np.clip(guess, lower + 1e-9, upper - 1e-9)
        result = optimize.least_squares(
            residuals, guess, bounds=(lower, upper), x_scale="jac", max_nfev=2000
        )
        if best is None or result.cost < best.cost:
            best = result
    rank = np.linalg.matrix_rank(best.jac)
    if rank < layout.size:
        raise FitError(
            f"Magnitude fit is rank deficient (rank {rank} < {layout.size}); "
            f"try an order below {order}"
        )
    log_gain, numerator, denominator = layout.split(best.x)
    tf = RationalTransferFunction(
        reflect_to_lhp(layout.side_polynomial(numerator))
        * Polynomial([10.0**log_gain]),
        reflect_to_lhp(layout.side_polynomial(denominator)),
    )
    rms = float(np.sqrt(np.mean(residuals(best.x) ** 2)))
    logger.debug(
        f"Order-{order} magnitude fit: rms {rms:.4g} dB, {best.nfev} evaluations"
    )
    return MagnitudeFit(tf, rms)


def fit_target(plant, bounds: FrequencyBounds) -> np.ndarray:
    """Weight magnitude that puts |W P| at the geometric center of the bounds."""
    plant_mag = np.abs(freq_response(as_tf(plant), bounds.grid).response)
    return bounds.center_magnitude() / plant_mag


class _LoopLayout:
    """log10 gain, the corners of W1 and W2 as (alpha, beta) pairs, then the
    controller numerator and denominator sides."""

    def __init__(self, numerator_order: int, denominator_order: int):
        corner = _SideLayout(1)
        self.sides = [
            (1.0, corner),
            (-1.0, corner),
            (1.0, corner),
            (-1.0, corner),
            (1.0, _SideLayout(numerator_order)),
            (-1.0, _SideLayout(denominator_order)),
        ]
        self.size = 1 + sum(side.size for _, side in self.sides)

    def split(self, x: np.ndarray):
        parts, start = [], 1
        for _, side in self.sides:
            parts.append(x[start : start + side.size])
            start += side.size
        return x[0], parts

    def model_db(self, x: np.ndarray, omegas: np.ndarray) -> np.ndarray:
        log_gain, parts = self.split(x)
        total = np.full_like(omegas, log_gain)
        for (sign, side), params in zip(self.sides, parts):
            total += sign * side.log_magnitude(params, omegas)
        return 20.0 * total

    def bounds(self, omegas: np.ndarray):
        lower, upper = [-np.inf], [np.inf]
        for _, side in self.sides:
            side_lo, side_hi = side.bounds(omegas)
            lower += side_lo
            upper += side_hi
        return np.array(lower), np.array(upper)

    def random_guess(self, omegas, target_db, rng: np.random.Generator) -> np.ndarray:
        lower, upper = self.bounds(omegas)
        x = np.zeros(self.size)
        x[1:] = lower[1:] + rng.random(self.size - 1) * (upper[1:] - lower[1:])
        x[0] = np.mean(target_db - self.model_db(x, omegas)) / 20.0
        return x


@dataclass(frozen=True, eq=False)
class LoopFit:
    """|W1 W2 K| with first-order weights of unit gain, a monic minimum-phase
    controller and one overall gain."""

    gain: float
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    controller: RationalTransferFunction
    loss: float


def fit_loop(
    samples: Sequence[Tuple[float, float]],
    numerator_order: int,
    denominator_order: int,
    scale_db=1.0,
    starts: int = 8,
    seed: int = 0,
) -> LoopFit:
    """Soft-L1 fit of |W1 W2 K| to ``samples``, residuals in units of
    ``scale_db``. The best of ``starts`` seeded random starts wins."""
    samples = np.asarray(samples, dtype=float).reshape(-1, 2)
    omegas, magnitudes = samples[:, 0], samples[:, 1]
    if not 0 <= numerator_order <= denominator_order:
        raise FitError(
            f"Controller orders ({numerator_order}, {denominator_order}) "
            "cannot be fitted"
        )
    if np.any(magnitudes <= 0.0) or np.any(omegas <= 0.0):
        raise FitError("Fit samples need positive frequencies and magnitudes")
    layout = _LoopLayout(numerator_order, denominator_order)
    if samples.shape[0] < layout.size:
        raise FitError(
            f"{samples.shape[0]} samples cannot determine {layout.size} loop parameters"
        )
    scale = np.broadcast_to(np.asarray(scale_db, dtype=float), omegas.shape)
    if np.any(scale <= 0.0):
        raise FitError("Residual scale must be positive")
    target_db = magnitude_db(magnitudes)
    lower, upper = layout.bounds(omegas)

    def residuals(x):
        return (layout.model_db(x, omegas) - target_db) / scale

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(starts, 1)):
        guess = np.clip(
            layout.random_guess(omegas, target_db, rng), lower + 1e-9, upper - 1e-9
        )
        result = optimize.least_squares(
            residuals,
            guess,
            bounds=(lower, upper),
            loss="soft_l1",
            x_scale="jac",
            max_nfev=2000,
        )
        if best is None or result.cost < best.cost:
            best = result
    log_gain, parts = layout.split(best.x)
    alpha1, beta1, alpha2, beta2 = (10.0 ** float(p[0]) for p in parts[:4])
    numerator_side, denominator_side = layout.sides[4][1], layout.sides[5][1]
    controller = RationalTransferFunction(
        reflect_to_lhp(numerator_side.polynomial(parts[4])),
        reflect_to_lhp(denominator_side.polynomial(parts[5])),
    )
    logger.debug(f"Loop fit: soft-L1 loss {best.cost:.4g}, {best.nfev} evaluations")
    return LoopFit(
        gain=10.0 ** float(log_gain),
        alpha1=alpha1,
        beta1=beta1,
        alpha2=alpha2,
        beta2=beta2,
        controller=controller,
        loss=float(best.cost),
    )


@dataclass(frozen=True, eq=False)
class ShapedPlant:
    plant: RationalTransferFunction
    w1: RationalTransferFunction
    w2: RationalTransferFunction
    shaped: RationalTransferFunction

    def realization(self) -> StateSpaceSystem:
        """W1 -> P -> W2 as a cascade of balanced component realizations."""
        return ss_cascade(realize(self.w1), realize(self.plant), realize(self.w2))

    def final_controller(self, controller: StateSpaceSystem) -> StateSpaceSystem:
        """W1 K W2, the controller that acts on the raw plant."""
        return ss_cascade(realize(self.w2), controller, realize(self.w1))


def shape(plant, w1, w2) -> ShapedPlant:
    plant, w1, w2 = as_tf(plant), as_tf(w1), as_tf(w2)
    return ShapedPlant(plant, w1, w2, series(w2, series(plant, w1)))

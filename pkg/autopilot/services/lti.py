"""SISO linear time-invariant algebra.

Polynomials and transfer functions are immutable values with real coefficients
(highest degree first). Transfer functions are kept with a monic denominator;
common pole/zero pairs are only removed by ``minimal()``, which every
interconnection calls, and only when the pair is closer than
``settings.cancellation_tol * max(1, |p|)``.

Coefficient magnitudes up to ~1e9 (the reference plant gain) are handled in
plain double precision. Roots come from eigenvalues of the balanced companion
matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np
import pandas as pd
from scipy import linalg, signal

from autopilot.core.config import settings
from autopilot.exceptions import (
    AlgebraicLoopError,
    DimensionError,
    ImproperTransferFunctionError,
    LtiError,
)
from autopilot.logger import logger

Scalar = Union[int, float]


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


def companion_roots(coefficients: Sequence[float]) -> np.ndarray:
    """Roots of a polynomial via eigenvalues of its balanced companion matrix."""
    c = np.trim_zeros(np.asarray(coefficients, dtype=float), "f")
    if c.size <= 1:
        return np.empty(0, dtype=complex)
    # zeros at the origin are exact, strip them before building the companion
    n_origin = c.size - np.trim_zeros(c, "b").size
    c = np.trim_zeros(c, "b")
    roots = np.zeros(n_origin, dtype=complex)
    if c.size > 1:
        companion = linalg.companion(c)
        balanced, _ = linalg.matrix_balance(companion, permute=False)
        roots = np.concatenate([linalg.eigvals(balanced), roots])
    return roots.astype(complex)


@dataclass(frozen=True, eq=False)
class Polynomial:
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=float)).ravel()
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise LtiError(f"Polynomial coefficients must be finite, got {c}")
        nonzero = np.flatnonzero(c)
        c = c[nonzero[0] :] if nonzero.size else np.zeros(1)
        object.__setattr__(self, "coefficients", _frozen(c))

    @classmethod
    def from_roots(cls, roots: Sequence[complex], gain: float = 1.0) -> "Polynomial":
        return cls(gain * np.real(np.poly(np.asarray(roots, dtype=complex))))

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coefficients.size == 1 and self.coefficients[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self.coefficients[0])

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    def __call__(self, s):
        return np.polyval(self.coefficients, s)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(np.polyadd(self.coefficients, _as_poly(other).coefficients))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(np.polysub(self.coefficients, _as_poly(other).coefficients))

    def __mul__(self, other) -> "Polynomial":
        return Polynomial(np.polymul(self.coefficients, _as_poly(other).coefficients))

    __rmul__ = __mul__

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.coefficients)

    def mirror(self) -> "Polynomial":
        """p(-s)."""
        signs = (-1.0) ** np.arange(self.degree, -1, -1)
        return Polynomial(self.coefficients * signs)

    def roots(self) -> np.ndarray:
        return companion_roots(self.coefficients)

    def __repr__(self) -> str:
        return f"Polynomial({self.coefficients.tolist()})"


def _as_poly(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    return Polynomial(value)


@dataclass(frozen=True, eq=False)
class RationalTransferFunction:
    numerator: Polynomial
    denominator: Polynomial

    def __post_init__(self):
        num = _as_poly(self.numerator)
        den = _as_poly(self.denominator)
        if den.is_zero:
            raise LtiError("Transfer function denominator is identically zero")
        lead = den.leading
        num = Polynomial(num.coefficients / lead)
        den = Polynomial(den.coefficients / lead)
        if num.is_zero:
            den = Polynomial([1.0])
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def constant(cls, gain: Scalar) -> "RationalTransferFunction":
        return cls(Polynomial([float(gain)]), Polynomial([1.0]))

    @classmethod
    def from_coefficients(
        cls, numerator: Sequence[float], denominator: Sequence[float]
    ) -> "RationalTransferFunction":
        return cls(Polynomial(numerator), Polynomial(denominator))

    @classmethod
    def from_zpk(
        cls, zeros: Sequence[complex], poles: Sequence[complex], gain: float
    ) -> "RationalTransferFunction":
        return cls(Polynomial.from_roots(zeros, gain), Polynomial.from_roots(poles))

    @property
    def is_proper(self) -> bool:
        return self.numerator.degree <= self.denominator.degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.numerator.is_zero or self.numerator.degree < self.denominator.degree

    @property
    def is_zero(self) -> bool:
        return self.numerator.is_zero

    @property
    def order(self) -> int:
        return self.denominator.degree

    def __call__(self, s):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.numerator(s) / self.denominator(s)

    def poles(self) -> np.ndarray:
        return self.denominator.roots()

    def zeros(self) -> np.ndarray:
        if self.numerator.is_zero:
            return np.empty(0, dtype=complex)
        return self.numerator.roots()

    def is_stable(self) -> bool:
        return bool(np.all(self.poles().real < 0.0))

    def is_minimum_phase(self) -> bool:
        return bool(np.all(self.zeros().real < 0.0))

    def dc_gain(self) -> float:
        return complex(self(0.0)).real

    def high_frequency_gain(self) -> float:
        if not self.is_proper:
            return np.inf
        if self.is_strictly_proper:
            return 0.0
        return self.numerator.leading

    def mirror(self) -> "RationalTransferFunction":
        """g(-s)."""
        return RationalTransferFunction(
            self.numerator.mirror(), self.denominator.mirror()
        )

    def minimal(self, tol: float = None) -> "RationalTransferFunction":
        """Cancel pole/zero pairs closer than ``tol * max(1, |p|)``."""
        tol = settings.cancellation_tol if tol is None else tol
        if self.numerator.degree == 0 or self.denominator.degree == 0:
            return self
        zeros = list(self.zeros())
        poles = list(self.poles())
        kept_poles: List[complex] = []
        cancelled = 0
        for p in poles:
            if zeros:
                distances = np.abs(np.asarray(zeros) - p)
                j = int(np.argmin(distances))
                if distances[j] < tol * max(1.0, abs(p)):
                    zeros.pop(j)
                    cancelled += 1
                    continue
            kept_poles.append(p)
        if not cancelled:
            return self
        logger.debug(f"Cancelled {cancelled} pole/zero pair(s)")
        return RationalTransferFunction.from_zpk(
            zeros, kept_poles, self.numerator.leading
        )

    def __mul__(self, other) -> "RationalTransferFunction":
        return series(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "RationalTransferFunction":
        return RationalTransferFunction(-self.numerator, self.denominator)

    def __repr__(self) -> str:
        return (
            f"RationalTransferFunction(num={self.numerator.coefficients.tolist()}, "
            f"den={self.denominator.coefficients.tolist()})"
        )


TransferLike = Union[RationalTransferFunction, Scalar]


def as_tf(value: TransferLike) -> RationalTransferFunction:
    if isinstance(value, RationalTransferFunction):
        return value
    return RationalTransferFunction.constant(value)


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = np.zeros((0, 0))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got shape {A.shape}")
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        n = A.shape[0]
        p, m = D.shape
        B = self._shaped(self.B, (n, m), "B")
        C = self._shaped(self.C, (p, n), "C")
        for name, matrix in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(matrix)):
                raise DimensionError(f"{name} has non-finite entries")
            object.__setattr__(self, name, _frozen(matrix))

    @staticmethod
    def _shaped(value, shape, name) -> np.ndarray:
        matrix = np.asarray(value, dtype=float)
        if matrix.ndim == 2 and matrix.shape != shape:
            raise DimensionError(f"{name} must have shape {shape}, got {matrix.shape}")
        try:
            return matrix.reshape(shape)
        except ValueError:
            raise DimensionError(
                f"{name} must have shape {shape}, got {matrix.shape}"
            ) from None

    @classmethod
    def static(cls, gain) -> "StateSpaceSystem":
        D = np.atleast_2d(np.asarray(gain, dtype=float))
        p, m = D.shape
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), D)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.D.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.D.shape[0]

    @property
    def is_siso(self) -> bool:
        return self.n_inputs == 1 and self.n_outputs == 1

    def poles(self) -> np.ndarray:
        if self.n_states == 0:
            return np.empty(0, dtype=complex)
        return linalg.eigvals(self.A)

    def is_stable(self, threshold: float = 0.0) -> bool:
        return bool(np.all(self.poles().real < threshold))

    def evaluate(self, s: complex) -> np.ndarray:
        """C (sI - A)^-1 B + D as a p x m complex matrix."""
        if self.n_states == 0:
            return self.D.astype(complex)
        resolvent = linalg.solve(s * np.eye(self.n_states) - self.A, self.B)
        return self.C @ resolvent + self.D

    def frequency_matrix(self, omegas: Sequence[float]) -> np.ndarray:
        return np.array([self.evaluate(1j * w) for w in np.asarray(omegas, float)])

    def balanced(self) -> "StateSpaceSystem":
        """Diagonal similarity that balances A; the transfer matrix is unchanged."""
        if self.n_states == 0:
            return self
        _, (scale, _) = linalg.matrix_balance(self.A, permute=False, separate=True)
        T = np.diag(scale)
        T_inv = np.diag(1.0 / scale)
        return StateSpaceSystem(T_inv @ self.A @ T, T_inv @ self.B, self.C @ T, self.D)

    def output(self, rows: Sequence[int]) -> "StateSpaceSystem":
        rows = list(rows)
        return StateSpaceSystem(self.A, self.B, self.C[rows, :], self.D[rows, :])

    def input(self, cols: Sequence[int]) -> "StateSpaceSystem":
        cols = list(cols)
        return StateSpaceSystem(self.A, self.B[:, cols], self.C, self.D[:, cols])


def tf_to_ss(g: RationalTransferFunction) -> StateSpaceSystem:
    """Controllable-canonical realization of a proper transfer function."""
    g = as_tf(g)
    if not g.is_proper:
        raise ImproperTransferFunctionError(
            f"Cannot realize improper transfer function: numerator degree "
            f"{g.numerator.degree} exceeds denominator degree {g.denominator.degree}"
        )
    if g.denominator.degree == 0:
        return StateSpaceSystem.static(g.numerator.coefficients[-1])
    A, B, C, D = signal.tf2ss(g.numerator.coefficients, g.denominator.coefficients)
    return StateSpaceSystem(A, B, C, D)


def ss_to_tf(sys: StateSpaceSystem) -> RationalTransferFunction:
    if not sys.is_siso:
        raise DimensionError(
            f"ss_to_tf needs a SISO system, got {sys.n_outputs}x{sys.n_inputs}"
        )
    if sys.n_states == 0:
        return RationalTransferFunction.constant(sys.D[0, 0])
    num, den = signal.ss2tf(sys.A, sys.B, sys.C, sys.D)
    return RationalTransferFunction(Polynomial(num[0]), Polynomial(den)).minimal()


def realize(g: TransferLike) -> StateSpaceSystem:
    """Balanced controllable-canonical realization."""
    return tf_to_ss(g).balanced()


def ss_series(first: StateSpaceSystem, second: StateSpaceSystem) -> StateSpaceSystem:
    """``second`` driven by the output of ``first``."""
    if first.n_outputs != second.n_inputs:
        raise DimensionError(
            f"Cannot connect {first.n_outputs} output(s) "
            f"into {second.n_inputs} input(s)"
        )
    n1, n2 = first.n_states, second.n_states
    A = np.block(
        [
            [first.A, np.zeros((n1, n2))],
            [second.B @ first.C, second.A],
        ]
    )
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpaceSystem(A, B, C, D)


def ss_cascade(*systems: StateSpaceSystem) -> StateSpaceSystem:
    """Signal flows left to right through ``systems``."""
    result = systems[0]
    for system in systems[1:]:
        result = ss_series(result, system)
    return result


def series(g1: TransferLike, g2: TransferLike) -> RationalTransferFunction:
    g1, g2 = as_tf(g1), as_tf(g2)
    return RationalTransferFunction(
        g1.numerator * g2.numerator, g1.denominator * g2.denominator
    ).minimal()


def feedback_unity(g: TransferLike) -> RationalTransferFunction:
    """Unity negative feedback, g / (1 + g)."""
    g = as_tf(g)
    closed_den = g.denominator + g.numerator
    if closed_den.is_zero:
        raise AlgebraicLoopError("1 + g is identically zero; the loop is ill-posed")
    return RationalTransferFunction(g.numerator, closed_den).minimal()


def poles(g: TransferLike) -> np.ndarray:
    return as_tf(g).poles()


def zeros(g: TransferLike) -> np.ndarray:
    return as_tf(g).zeros()


def is_stable(g: TransferLike) -> bool:
    return as_tf(g).is_stable()


def magnitude_db(values) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(values))


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    omega: np.ndarray
    response: np.ndarray
    flagged: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.response)

    @property
    def mag_db(self) -> np.ndarray:
        return magnitude_db(self.response)

    @property
    def phase_deg(self) -> np.ndarray:
        return np.degrees(np.angle(self.response))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "omega_rad_s": self.omega,
                "re": self.response.real,
                "im": self.response.imag,
                "mag_db": self.mag_db,
                "phase_deg": self.phase_deg,
            }
        )


def freq_response(g: TransferLike, omegas: Sequence[float]) -> FrequencyResponse:
    """g(jw) on a grid; points sitting on a pole are flagged and set to NaN."""
    g = as_tf(g)
    omegas = np.asarray(omegas, dtype=float).ravel()
    s = 1j * omegas
    flagged = np.zeros(omegas.size, dtype=bool)
    pole_set = g.poles()
    if pole_set.size:
        distance = np.abs(s[:, None] - pole_set[None, :])
        tolerance = settings.axis_tol * np.maximum(1.0, np.abs(pole_set))[None, :]
        flagged = np.any(distance <= tolerance, axis=1)
    values = np.asarray(g(s), dtype=complex)
    flagged |= ~np.isfinite(values)
    values = np.where(flagged, np.nan + 1j * np.nan, values)
    if flagged.any():
        logger.debug(f"{int(flagged.sum())} frequency point(s) sit on a pole")
    return FrequencyResponse(_frozen(omegas), values, flagged)


def _format_number(x: float) -> str:
    nearest = round(x)
    if abs(x - nearest) <= 1e-6 * max(1.0, abs(x)):
        return str(int(nearest))
    return f"{x:.6g}"


def _factor_strings(roots: np.ndarray) -> List[str]:
    reals, pairs = [], []
    for r in roots:
        if abs(r.imag) <= 1e-9 * max(1.0, abs(r)):
            reals.append(r.real)
        elif r.imag > 0:
            pairs.append(r)
    reals.sort(key=abs, reverse=True)
    pairs.sort(key=abs, reverse=True)
    factors = []
    for r in reals:
        if abs(r) <= 1e-12:
            factors.append("s")
        else:
            factors.append(f"(s{'-' if r > 0 else '+'}{_format_number(abs(r))})")
    for z in pairs:
        linear, constant = -2.0 * z.real, abs(z) ** 2
        term = "s^2"
        if abs(linear) > 1e-12:
            term += f"{'+' if linear > 0 else '-'}{_format_number(abs(linear))}s"
        factors.append(f"({term}+{_format_number(constant)})")
    return factors


def factored_form(g: TransferLike) -> str:
    """Human-readable ``k(s-z)../((s+p)..(s^2+as+b))`` rendering."""
    g = as_tf(g)
    if g.is_zero:
        return "0"
    gain = _format_number(g.numerator.leading)
    zero_factors = _factor_strings(g.zeros())
    pole_factors = _factor_strings(g.poles())
    if zero_factors:
        prefix = {"1": "", "-1": "-"}.get(gain, gain)
        numerator = prefix + "".join(zero_factors)
    else:
        numerator = gain
    if not pole_factors:
        return numerator
    denominator = "".join(pole_factors)
    if len(pole_factors) > 1:
        denominator = f"({denominator})"
    return f"{numerator}/{denominator}"

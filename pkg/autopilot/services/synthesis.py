"""Riccati-based robust synthesis for the normalized-coprime-factor loop-shaping design.

Negative feedback is used throughout: the loop is ``u = K e`` with
``e = w1 + P (w2 - u)``, so a controller built here is applied as ``u = -K y``
on the plant output ``y``. The four-block operator whose inverse H-infinity
norm is the stability margin maps ``[w1; w2]`` to ``[e; u]``.
"""
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from autopilot.core.config import settings
from autopilot.exceptions import (
    AlgebraicLoopError,
    DimensionError,
    GammaTooSmallError,
    RiccatiError,
)
from autopilot.logger import logger
from autopilot.services.lti import (
    RationalTransferFunction,
    StateSpaceSystem,
    realize,
)

SystemLike = Union[StateSpaceSystem, RationalTransferFunction, float, int]


def as_system(value: SystemLike) -> StateSpaceSystem:
    if isinstance(value, StateSpaceSystem):
        return value
    if isinstance(value, RationalTransferFunction):
        return realize(value)
    return StateSpaceSystem.static(float(value))


def _symmetric(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def _balance(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonally balanced copy of ``matrix`` and the scaling that undoes it."""
    balanced, (scale, _) = linalg.matrix_balance(matrix, permute=False, separate=True)
    return balanced, scale


def _on_imaginary_axis(
    eigenvalues: np.ndarray, rtol: float, floor: float = 0.0
) -> np.ndarray:
    return np.abs(eigenvalues.real) <= rtol * np.abs(eigenvalues) + floor


@dataclass(frozen=True, eq=False)
class CareProblem:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        m = B.shape[1]
        if A.shape != (n, n) or Q.shape != (n, n) or R.shape != (m, m):
            raise DimensionError(
                f"Incompatible CARE data: A {A.shape}, B {B.shape}, "
                f"Q {Q.shape}, R {R.shape}"
            )
        for name, matrix in (("Q", Q), ("R", R)):
            if np.max(np.abs(matrix - matrix.T), initial=0.0) > 1e-12 * max(
                1.0, np.max(np.abs(matrix), initial=0.0)
            ):
                raise DimensionError(f"{name} must be symmetric")
        if np.any(linalg.eigvalsh(R) <= 0.0):
            raise RiccatiError("R must be positive definite", "not-stabilizable")
        for name, matrix in (("A", A), ("B", B), ("Q", Q), ("R", R)):
            object.__setattr__(self, name, matrix)

    @property
    def G(self) -> np.ndarray:
        """B R^-1 B^T."""
        return self.B @ linalg.solve(self.R, self.B.T, assume_a="pos")


def care_residual(problem: CareProblem, X: np.ndarray) -> float:
    A, Q, G = problem.A, problem.Q, problem.G
    return float(linalg.norm(A.T @ X + X @ A - X @ G @ X + Q, "fro"))


def _newton_refine(problem: CareProblem, X: np.ndarray, steps: int = 3) -> np.ndarray:
    A, Q, G = problem.A, problem.Q, problem.G
    best, best_residual = X, care_residual(problem, X)
    for _ in range(steps):
        closed = A - G @ best
        candidate = linalg.solve_continuous_lyapunov(
            closed.T, -(Q + best @ G @ best)
        )
        candidate = _symmetric(candidate)
        residual = care_residual(problem, candidate)
        if not np.isfinite(residual) or residual >= best_residual:
            break
        best, best_residual = candidate, residual
    return best


def solve_care(problem: CareProblem, refine: bool = True) -> np.ndarray:
    """Stabilizing solution of A^T X + X A - X B R^-1 B^T X + Q = 0.

    Uses the ordered real Schur form of the Hamiltonian; the first n Schur
    vectors span its stable invariant subspace.
    """
    A, Q, G = problem.A, problem.Q, problem.G
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    H, scale = _balance(np.block([[A, -G], [-Q, -A.T]]))
    if np.any(_on_imaginary_axis(linalg.eigvals(H), settings.axis_tol)):
        raise RiccatiError(
            "Hamiltonian has eigenvalues on the imaginary axis", "imaginary-axis"
        )
    _, U, sdim = linalg.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise RiccatiError(
            f"Stable invariant subspace has dimension {sdim}, expected {n}",
            "not-stabilizable",
        )
    V11, V21 = U[:n, :n], U[n:, :n]
    if np.linalg.cond(V11) > 1e12:
        raise RiccatiError(
            "Stable invariant subspace is not a graph; (A, B) is not stabilizable",
            "not-stabilizable",
        )
    # the unbalanced subspace is diag(scale) U
    graph = linalg.solve(V11.T, V21.T).T
    X = _symmetric(scale[n:, None] * graph / scale[None, :n])
    if refine:
        X = _newton_refine(problem, X)
    closed_poles = linalg.eigvals(A - G @ X)
    if not np.all(closed_poles.real < 0.0):
        raise RiccatiError(
            "Riccati solution does not stabilize A - B R^-1 B^T X", "not-stabilizing"
        )
    logger.debug(f"CARE n={n} residual={care_residual(problem, X):.3e}")
    return X


def _sigma_max(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(linalg.svdvals(matrix)[0])


def _peak_gain(sys: StateSpaceSystem, omegas: Sequence[float]) -> Tuple[float, float]:
    best, best_omega = 0.0, 0.0
    for w in omegas:
        value = _sigma_max(sys.evaluate(1j * w))
        if value > best:
            best, best_omega = value, float(w)
    return best, best_omega


def _hamiltonian_frequencies(sys: StateSpaceSystem, gamma: float) -> np.ndarray:
    """Non-negative frequencies where gamma is a singular value of G(jw)."""
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    m, p = sys.n_inputs, sys.n_outputs
    R = D.T @ D - gamma**2 * np.eye(m)
    S = D @ D.T - gamma**2 * np.eye(p)
    Ar = A - B @ linalg.solve(R, D.T @ C)
    H = np.block(
        [
            [Ar, -gamma * B @ linalg.solve(R, B.T)],
            [gamma * C.T @ linalg.solve(S, C), -Ar.T],
        ]
    )
    H, _ = _balance(H)
    eigenvalues = linalg.eigvals(H)
    # rounding-level real parts count as crossings
    floor = 1e3 * np.finfo(float).eps * linalg.norm(H, 1)
    on_axis = eigenvalues[_on_imaginary_axis(eigenvalues, 1e-8, floor)]
    return np.unique(np.abs(on_axis.imag))


def hinf_norm(sys: SystemLike, rtol: float = None) -> float:
    """H-infinity norm by the Hamiltonian level-set iteration.

    Returns ``math.inf`` for a system with a pole in the closed right half plane.
    The returned value is an upper bound within ``rtol`` of the true norm.
    """
    sys = as_system(sys)
    rtol = settings.hinf_rtol if rtol is None else rtol
    if sys.n_states == 0:
        return _sigma_max(sys.D)
    poles = sys.poles()
    if not np.all(poles.real < 0.0):
        return np.inf
    magnitudes = np.abs(poles)
    candidates = np.concatenate(
        [
            [0.0],
            np.abs(poles.imag),
            magnitudes,
            np.logspace(
                np.log10(max(magnitudes.min(), 1e-12)) - 2,
                np.log10(max(magnitudes.max(), 1e-12)) + 2,
                60,
            ),
        ]
    )
    lower, _ = _peak_gain(sys, candidates)
    lower = max(lower, _sigma_max(sys.D))
    if lower == 0.0:
        return 0.0
    for iteration in range(settings.hinf_max_iter):
        gamma = (1.0 + 2.0 * rtol) * lower
        frequencies = _hamiltonian_frequencies(sys, gamma)
        if frequencies.size == 0:
            logger.debug(f"hinf_norm converged after {iteration + 1} iteration(s)")
            return gamma
        sample_points = frequencies
        if frequencies.size > 1:
            sample_points = np.concatenate(
                [frequencies, 0.5 * (frequencies[:-1] + frequencies[1:])]
            )
        peak, _ = _peak_gain(sys, sample_points)
        lower = max(peak, gamma)
    logger.warning(f"hinf_norm hit the iteration cap; returning {gamma:.6g}")
    return gamma


@dataclass(frozen=True, eq=False)
class NcfData:
    X: np.ndarray
    Z: np.ndarray
    gamma_min: float
    b_opt: float


def ncf(shaped: SystemLike) -> NcfData:
    """Control and filter Riccati solutions of the normalized coprime factorization."""
    shaped = as_system(shaped)
    n = shaped.n_states
    if n == 0:
        return NcfData(np.zeros((0, 0)), np.zeros((0, 0)), 1.0, 1.0)
    A, B, C, D = shaped.A, shaped.B, shaped.C, shaped.D
    R = np.eye(shaped.n_outputs) + D @ D.T
    S = np.eye(shaped.n_inputs) + D.T @ D
    Ar = A - B @ linalg.solve(S, D.T @ C)
    X = solve_care(
        CareProblem(Ar, B, _symmetric(C.T @ linalg.solve(R, C)), _symmetric(S))
    )
    Z = solve_care(
        CareProblem(Ar.T, C.T, _symmetric(B @ linalg.solve(S, B.T)), _symmetric(R))
    )
    lam = float(np.max(linalg.eigvals(X @ Z).real))
    gamma_min = float(np.sqrt(1.0 + max(lam, 0.0)))
    return NcfData(X, Z, gamma_min, 1.0 / gamma_min)


def central_controller(
    shaped: SystemLike, gamma: float, ncf_data: NcfData = None
) -> StateSpaceSystem:
    """Central loop-shaping controller with margin 1/gamma, negative-feedback form."""
    shaped = as_system(shaped)
    data = ncf(shaped) if ncf_data is None else ncf_data
    if gamma <= data.gamma_min:
        raise GammaTooSmallError(
            f"gamma={gamma:.6g} must exceed gamma_min={data.gamma_min:.6g}"
        )
    A, B, C, D = shaped.A, shaped.B, shaped.C, shaped.D
    n, m = shaped.n_states, shaped.n_inputs
    if n == 0:
        return StateSpaceSystem.static(D.T)
    X, Z = data.X, data.Z
    S = np.eye(m) + D.T @ D
    F = -linalg.solve(S, D.T @ C + B.T @ X)
    L = (1.0 - gamma**2) * np.eye(n) + X @ Z
    gain = gamma**2 * linalg.solve(L.T, Z @ C.T)
    Ak = A + B @ F + gain @ (C + D @ F)
    Bk = gain
    Ck = -(B.T @ X)
    Dk = D.T
    return StateSpaceSystem(Ak, Bk, Ck, Dk)


def loop_shaping_controller(
    shaped: SystemLike, gamma_factor: float = None
) -> Tuple[NcfData, float, StateSpaceSystem]:
    if gamma_factor is None:
        gamma_factor = settings.default_gamma_factor
    data = ncf(shaped)
    gamma = gamma_factor * data.gamma_min
    return data, gamma, central_controller(shaped, gamma, data)


def four_block(plant: SystemLike, controller: SystemLike) -> StateSpaceSystem:
    """Realization of [w1; w2] -> [e; u] for e = w1 + P(w2 - u), u = K e."""
    P, K = as_system(plant), as_system(controller)
    if K.n_inputs != P.n_outputs or K.n_outputs != P.n_inputs:
        raise DimensionError(
            f"Controller {K.n_outputs}x{K.n_inputs} does not fit plant "
            f"{P.n_outputs}x{P.n_inputs}"
        )
    p, m = P.n_outputs, P.n_inputs
    n_p, n_k = P.n_states, K.n_states
    loop = np.eye(p) + P.D @ K.D
    if abs(np.linalg.det(loop)) < 1e-12:
        raise AlgebraicLoopError("I + P(inf) K(inf) is singular; the loop is ill-posed")
    F = np.linalg.inv(loop)
    Ex = F @ np.hstack([P.C, -P.D @ K.C])
    Ew = F @ np.hstack([np.eye(p), P.D])
    Ux = np.hstack([np.zeros((m, n_p)), K.C]) + K.D @ Ex
    Uw = K.D @ Ew
    Vx = -Ux
    Vw = np.hstack([np.zeros((m, p)), np.eye(m)]) - Uw
    A = linalg.block_diag(P.A, K.A) + np.vstack([P.B @ Vx, K.B @ Ex])
    B = np.vstack([P.B @ Vw, K.B @ Ew])
    C = np.vstack([Ex, Ux])
    D = np.vstack([Ew, Uw])
    return StateSpaceSystem(A, B, C, D)


def closed_loop_poles(plant: SystemLike, controller: SystemLike) -> np.ndarray:
    return four_block(plant, controller).poles()


def is_internally_stable(plant: SystemLike, controller: SystemLike) -> bool:
    try:
        poles = closed_loop_poles(plant, controller)
    except AlgebraicLoopError:
        return False
    return bool(np.all(poles.real < settings.stability_threshold))


def achieved_margin(plant: SystemLike, controller: SystemLike) -> float:
    """b(P, K); zero when the loop is not internally stable."""
    try:
        closed = four_block(plant, controller)
    except AlgebraicLoopError:
        logger.debug("Ill-posed loop, margin 0")
        return 0.0
    if not np.all(closed.poles().real < settings.stability_threshold):
        return 0.0
    norm = hinf_norm(closed)
    if not np.isfinite(norm) or norm <= 0.0:
        return 0.0
    return 1.0 / norm


@dataclass(frozen=True, eq=False)
class FixedStructureController:
    """K(s) = (a_m s^m + ... + a_0) / (s^n + b_{n-1} s^{n-1} + ... + b_0)."""

    numerator: np.ndarray
    denominator: np.ndarray

    def __post_init__(self):
        numerator = np.atleast_1d(np.asarray(self.numerator, dtype=float))
        denominator = np.atleast_1d(np.asarray(self.denominator, dtype=float)).ravel()
        if not (np.all(np.isfinite(numerator)) and np.all(np.isfinite(denominator))):
            raise DimensionError("Controller coefficients must be finite")
        if numerator.size - 1 > denominator.size:
            raise DimensionError(
                f"Improper structure: numerator order {numerator.size - 1} exceeds "
                f"denominator order {denominator.size}"
            )
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "denominator", denominator)

    @property
    def numerator_order(self) -> int:
        return self.numerator.size - 1

    @property
    def denominator_order(self) -> int:
        return self.denominator.size

    @property
    def coefficients(self) -> np.ndarray:
        return np.concatenate([self.numerator, self.denominator])

    def to_tf(self) -> RationalTransferFunction:
        return RationalTransferFunction.from_coefficients(
            self.numerator, np.concatenate([[1.0], self.denominator])
        )

    @classmethod
    def from_tf(
        cls, g: RationalTransferFunction, numerator_order: int, denominator_order: int
    ) -> "FixedStructureController":
        if (
            g.denominator.degree != denominator_order
            or g.numerator.degree > numerator_order
        ):
            raise DimensionError(
                f"{g} does not fit structure ({numerator_order}, {denominator_order})"
            )
        numerator = np.zeros(numerator_order + 1)
        numerator[numerator_order - g.numerator.degree :] = g.numerator.coefficients
        return cls(numerator, g.denominator.coefficients[1:])

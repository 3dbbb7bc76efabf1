"""Generic m x m Darboux engine.

Given an operator H = gamma d/dx + V(x) and a seed matrix U whose columns
are eigensolutions of H at real energies eps_k, the first-order map
L = d/dx - U_x U^-1 intertwines H with a partner operator whose potential
is V + [gamma, U_x U^-1].  This module builds that partner numerically for
any seed and is the oracle every closed-form construction in the package
is validated against.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import (InvalidInputError, InvalidOperatorError,
                     InvalidSeedEnergyError, InvalidSeedError)
from .free2x2 import SpinorField
from .numerics import (DEFAULT_GRID, Grid, MatrixField, adjoint,
                       central_derivative, hermiticity_defect, inv_stack,
                       mat_apply, simpson_integrate, sup_norm)

SEED_TOL_ENV = "DIRAC_DARBOUX_SEED_TOL"
DEFAULT_SEED_TOL = 1e-8

# Decay rate (in units of 1/x) below which a tail is treated as
# non-normalizable when no sharper model-specific rate is available.
MIN_DECAY_RATE = 0.1


@dataclass(frozen=True)
class DiracOperator:
    dim: int
    gamma: np.ndarray
    potential: MatrixField
    hermitian: bool

    def potential_at(self, x) -> np.ndarray:
        return self.potential(x)


@dataclass(frozen=True)
class SeedMatrix:
    """Eigensolution columns of an operator at diagonal real energies."""

    operator: DiracOperator
    columns: tuple
    energies: tuple
    residual: float

    @property
    def dim(self) -> int:
        return self.operator.dim

    def matrix(self, x) -> np.ndarray:
        cols = [np.asarray(c(x)) for c in self.columns]
        return np.stack(cols, axis=-1)

    def matrix_derivative(self, x) -> np.ndarray:
        cols = []
        for c in self.columns:
            if hasattr(c, "d"):
                cols.append(np.asarray(c.d(x)))
            else:
                cols.append(np.asarray(central_derivative(c, x, h=1e-4)))
        return np.stack(cols, axis=-1)

    def kernel(self, x) -> np.ndarray:
        """U_x U^-1 with a pointwise singularity scan."""
        xs = np.asarray(x, dtype=float)
        return self.matrix_derivative(xs) @ inv_stack(self.matrix(xs), xs)


@dataclass(frozen=True)
class DarbouxPair:
    transformed: DiracOperator
    intertwiner_kernel: MatrixField
    seed: SeedMatrix


@dataclass(frozen=True)
class MissingState:
    energy: float
    state: SpinorField
    norm: float
    finite_norm: bool
    residual: float


@dataclass(frozen=True)
class MissingStateSet:
    states: tuple


def make_operator(gamma: np.ndarray, potential: MatrixField,
                  grid: Grid = DEFAULT_GRID) -> DiracOperator:
    """Validate gamma and classify the operator's Hermiticity by sampling."""
    g = np.asarray(gamma, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] not in (2, 4):
        raise InvalidOperatorError("gamma must be a 2x2 or 4x4 matrix")
    if sup_norm(g + g.conj().T) > 1e-12:
        raise InvalidOperatorError("gamma must be anti-Hermitian")
    if abs(np.linalg.det(g)) < 1e-12:
        raise InvalidOperatorError("gamma must be invertible")
    dim = g.shape[0]
    if potential.dim != dim:
        raise InvalidOperatorError("potential dimension does not match gamma")
    samples = potential.sample(grid)
    scale = max(1.0, sup_norm(samples))
    hermitian = hermiticity_defect(samples) < 1e-8 * scale
    return DiracOperator(dim=dim, gamma=g, potential=potential,
                         hermitian=hermitian)


def apply(H: DiracOperator, psi, x, h: float = 1e-3) -> np.ndarray:
    """(gamma d/dx + V) psi at x, derivative by central stencil."""
    xs = np.asarray(x, dtype=float)
    dpsi = central_derivative(psi, xs, h=h)
    return mat_apply(H.gamma, dpsi) \
        + mat_apply(H.potential(xs), np.asarray(psi(xs)))


def _seed_tolerance(override):
    if override is not None:
        return float(override)
    return float(os.environ.get(SEED_TOL_ENV, DEFAULT_SEED_TOL))


def _column_residual(H: DiracOperator, column, energy: float,
                     xs: np.ndarray) -> float:
    vals = np.asarray(column(xs))
    if hasattr(column, "d"):
        dvals = np.asarray(column.d(xs))
    else:
        dvals = central_derivative(column, xs, h=1e-4)
    res = mat_apply(H.gamma[None], dvals) + mat_apply(H.potential(xs), vals) \
        - energy * vals
    # Pointwise-relative: seed columns grow exponentially, so a global
    # scale would let the small-|psi| region go unchecked.
    amp = np.maximum(1.0, np.linalg.norm(vals, axis=-1))
    return float(np.max(np.linalg.norm(res, axis=-1) / amp))


def make_seed(H: DiracOperator, columns, energies, grid: Grid = DEFAULT_GRID,
              tol_seed: float | None = None) -> SeedMatrix:
    """Verify the columns as eigensolutions and freeze them into a seed."""
    columns = tuple(columns)
    if len(columns) != H.dim:
        raise InvalidInputError(
            f"need {H.dim} seed columns, got {len(columns)}")
    raw_energies = tuple(energies)
    for e in raw_energies:
        # The energy matrix is restricted to diagonal real form.
        if abs(complex(e).imag) > 0:
            raise InvalidSeedEnergyError("seed energies must be real")
    energies = tuple(float(np.real(complex(e))) for e in raw_energies)
    if len(energies) != len(columns):
        raise InvalidInputError("one energy per seed column required")
    tol = _seed_tolerance(tol_seed)
    xs = grid.interior()
    worst = 0.0
    for col, e in zip(columns, energies):
        worst = max(worst, _column_residual(H, col, e, xs))
    if worst > tol:
        raise InvalidSeedError(
            f"seed column residual {worst:.3e} exceeds tolerance {tol:.3e}")
    return SeedMatrix(operator=H, columns=columns, energies=energies,
                      residual=worst)


def darboux(H: DiracOperator, seed: SeedMatrix,
            grid: Grid = DEFAULT_GRID) -> DarbouxPair:
    """Build the partner operator and the intertwiner kernel U_x U^-1."""
    if seed.dim != H.dim:
        raise InvalidInputError("seed dimension does not match the operator")
    # Scan the whole grid once so a node raises here, not mid-evaluation.
    seed.kernel(grid.points())

    def kernel_eval(x):
        return seed.kernel(x)

    kernel = MatrixField(dim=H.dim, evaluator=kernel_eval)

    def potential_eval(x):
        K = seed.kernel(x)
        return H.potential(x) + H.gamma @ K - K @ H.gamma

    samples = potential_eval(grid.points())
    scale = max(1.0, sup_norm(samples))
    hermitian = hermiticity_defect(samples) < 1e-8 * scale
    transformed = DiracOperator(
        dim=H.dim, gamma=H.gamma,
        potential=MatrixField(dim=H.dim, evaluator=potential_eval),
        hermitian=hermitian)
    return DarbouxPair(transformed=transformed, intertwiner_kernel=kernel,
                       seed=seed)


def intertwine_apply(pair: DarbouxPair, psi) -> SpinorField:
    """L psi = psi' - (U_x U^-1) psi as a field with a stencil derivative."""
    kernel = pair.intertwiner_kernel

    def value(x):
        xs = np.asarray(x, dtype=float)
        if hasattr(psi, "d"):
            dpsi = np.asarray(psi.d(xs))
        else:
            dpsi = central_derivative(psi, xs, h=1e-4)
        return dpsi - mat_apply(kernel(xs), np.asarray(psi(xs)))

    def derivative(x):
        return central_derivative(value, np.asarray(x, dtype=float), h=1e-4)

    return SpinorField(value=value, derivative=derivative)


def gaussian_packets(dim: int, wavenumbers=(0.7, 1.3, 2.1)):
    """Smooth localized test spinors: exp(-x^2/100) plane waves."""
    if dim == 2:
        spinors = [np.array([1.0, 0.3 - 0.2j]),
                   np.array([0.5j, 1.0]),
                   np.array([1.0, 1.0 + 0.4j])]
    elif dim == 4:
        spinors = [np.array([1.0, 0.3 - 0.2j, 0.1j, 0.5]),
                   np.array([0.5j, 1.0, -0.2, 0.8j]),
                   np.array([1.0, 1.0 + 0.4j, 0.6, -0.3j])]
    else:
        raise InvalidInputError("packets exist for dim 2 and 4 only")
    packets = []
    for k, u in zip(wavenumbers, spinors):
        def value(x, k=k, u=u):
            return (np.exp(-x ** 2 / 100.0) * np.exp(1j * k * x))[..., None] * u

        def derivative(x, k=k, u=u):
            g = -2.0 * x / 100.0 + 1j * k
            return g[..., None] * value(x, k, u)

        packets.append(SpinorField(value=value, derivative=derivative))
    return packets


def intertwining_residual(H: DiracOperator, H_tilde: DiracOperator,
                          pair: DarbouxPair, test_spinors=None,
                          grid: Grid = DEFAULT_GRID, h: float = 1e-3) -> float:
    """max over tests and grid interior of |(L H - H_tilde L) psi|.

    The inner applications use analytic derivatives where available; the
    outer d/dx is the five-point stencil with step h, so the result floors
    at O(h^4) even for an exact pair.
    """
    if test_spinors is None:
        test_spinors = gaussian_packets(H.dim)
    if len(test_spinors) < 3:
        raise InvalidInputError("at least 3 test spinors required")
    kernel = pair.intertwiner_kernel
    xs = grid.interior()
    worst = 0.0
    for psi in test_spinors:
        def h_psi(x, psi=psi):
            if hasattr(psi, "d"):
                dpsi = np.asarray(psi.d(x))
            else:
                dpsi = central_derivative(psi, x, h=1e-4)
            return mat_apply(H.gamma[None], dpsi) \
                + mat_apply(H.potential(x), np.asarray(psi(x)))

        def l_psi(x, psi=psi):
            if hasattr(psi, "d"):
                dpsi = np.asarray(psi.d(x))
            else:
                dpsi = central_derivative(psi, x, h=1e-4)
            return dpsi - mat_apply(kernel(x), np.asarray(psi(x)))

        lh = central_derivative(h_psi, xs, h=h) \
            - mat_apply(kernel(xs), h_psi(xs))
        hl = mat_apply(H_tilde.gamma[None], central_derivative(l_psi, xs, h=h)) \
            + mat_apply(H_tilde.potential(xs), l_psi(xs))
        worst = max(worst, sup_norm(lh - hl))
    return worst


def tail_decay_rate(xs: np.ndarray, density: np.ndarray,
                    tail_fraction: float = 0.1) -> float:
    """Exponential decay rate of a density from its two grid tails.

    Fits log(density) linearly over the outer `tail_fraction` of points on
    each side and returns the weaker of the two implied amplitude decay
    rates (density decays at twice the amplitude rate).  Negative values
    mean growth.
    """
    n = len(xs)
    m = max(3, int(n * tail_fraction))
    eps = np.max(density) * 1e-300 + 1e-300
    logd = np.log(np.maximum(density, eps))
    left = np.polyfit(xs[:m], logd[:m], 1)[0]
    right = np.polyfit(xs[-m:], logd[-m:], 1)[0]
    # Decay means log-density increasing on the left tail, decreasing on
    # the right one.
    return float(min(left, -right) / 2.0)


def missing_states(seed: SeedMatrix, grid: Grid = DEFAULT_GRID,
                   min_decay_rate: float = MIN_DECAY_RATE) -> MissingStateSet:
    """Eigenstates of the partner operator: columns of (U^-1)^dagger."""
    H = seed.operator
    pair = darboux(H, seed, grid=grid)
    v_tilde = pair.transformed.potential
    gamma = H.gamma
    xs = grid.interior()

    def column_field(k):
        def value(x):
            xs_ = np.asarray(x, dtype=float)
            w = adjoint(inv_stack(seed.matrix(xs_), xs_))
            return w[..., :, k]

        def derivative(x):
            return central_derivative(value, np.asarray(x, dtype=float),
                                      h=1e-4)

        return SpinorField(value=value, derivative=derivative)

    states = []
    grid_points = grid.points()
    for k, energy in enumerate(seed.energies):
        st = column_field(k)
        vals = st(xs)
        scale = max(sup_norm(vals), 1e-300)
        res = mat_apply(gamma[None], st.d(xs)) + mat_apply(v_tilde(xs), vals) \
            - energy * vals
        residual = sup_norm(res) / scale
        density = np.sum(np.abs(st(grid_points)) ** 2, axis=-1)
        norm = float(np.real(simpson_integrate(density, grid)))
        rate = tail_decay_rate(grid_points, density)
        finite = bool(rate > min_decay_rate and np.isfinite(norm))
        states.append(MissingState(energy=energy, state=st, norm=norm,
                                   finite_norm=finite, residual=residual))
    return MissingStateSet(states=tuple(states))


def adjoint_intertwining_residual(H: DiracOperator, H_tilde: DiracOperator,
                                  pair: DarbouxPair, test_spinors=None,
                                  grid: Grid = DEFAULT_GRID,
                                  h: float = 1e-3) -> float:
    """max over tests of |(L^dag H_tilde^dag - H L^dag) psi|.

    L^dag psi = -psi' - K^dag psi and H^dag = gamma d/dx + V^dag for the
    anti-Hermitian gamma used throughout.
    """
    if test_spinors is None:
        test_spinors = gaussian_packets(H.dim)
    kernel = pair.intertwiner_kernel
    xs = grid.interior()

    def kdag(x):
        return adjoint(kernel(x))

    def vdag_tilde(x):
        return adjoint(H_tilde.potential(x))

    worst = 0.0
    for psi in test_spinors:
        def ht_dag_psi(x, psi=psi):
            if hasattr(psi, "d"):
                dpsi = np.asarray(psi.d(x))
            else:
                dpsi = central_derivative(psi, x, h=1e-4)
            return mat_apply(H_tilde.gamma[None], dpsi) \
                + mat_apply(vdag_tilde(x), np.asarray(psi(x)))

        def l_dag_psi(x, psi=psi):
            if hasattr(psi, "d"):
                dpsi = np.asarray(psi.d(x))
            else:
                dpsi = central_derivative(psi, x, h=1e-4)
            return -dpsi - mat_apply(kdag(x), np.asarray(psi(x)))

        lhs = -central_derivative(ht_dag_psi, xs, h=h) \
            - mat_apply(kdag(xs), ht_dag_psi(xs))
        rhs = mat_apply(H.gamma[None], central_derivative(l_dag_psi, xs, h=h)) \
            + mat_apply(H.potential(xs), l_dag_psi(xs))
        worst = max(worst, sup_norm(lhs - rhs))
    return worst

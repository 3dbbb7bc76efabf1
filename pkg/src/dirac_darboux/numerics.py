"""Small fixed-size complex linear algebra, grids, quadrature, stencils.

Everything here works on 2x2 or 4x4 matrices (the only sizes that occur) and
on uniform grids with an odd point count so composite Simpson applies
directly.  All functions are pure; all containers are immutable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, NumericalFailure, SingularMatrixError

S0 = np.eye(2, dtype=complex)
S1 = np.array([[0, 1], [1, 0]], dtype=complex)
S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
S3 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (S0, S1, S2, S3)

# Block-selector projectors for reduced 4x4 operators: SLOT1 picks the
# upper 2x2 block of a block-diagonal operator, SLOT2 the lower one.
SLOT1 = np.diag([1.0, 0.0]).astype(complex)
SLOT2 = np.diag([0.0, 1.0]).astype(complex)

GAMMA2 = -1j * S1
GAMMA2_INV = 1j * S1


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D grid; n_points must be odd and at least 3."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise InvalidInputError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise InvalidInputError("grid requires x_min < x_max")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise InvalidInputError("grid requires odd n_points >= 3")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def interior(self, margin_points: int = 2) -> np.ndarray:
        """Grid points with `margin_points` dropped from each end.

        Residual checks stay away from the ends so central stencils never
        need one-sided fallbacks.
        """
        return self.points()[margin_points:-margin_points]


DEFAULT_GRID = Grid(-30.0, 30.0, 6001)


@dataclass(frozen=True)
class MatrixField:
    """Matrix-valued function of x with optional constant asymptotics.

    The evaluator is vectorized: given x of shape (...,) it returns an
    array of shape (..., dim, dim).
    """

    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    asymptotic_minus: np.ndarray | None = None
    asymptotic_plus: np.ndarray | None = None

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=float))

    def sample(self, grid: Grid) -> np.ndarray:
        return self(grid.points())


def constant_field(matrix: np.ndarray) -> MatrixField:
    m = np.asarray(matrix, dtype=complex)
    dim = m.shape[0]

    def evaluate(x):
        return np.broadcast_to(m, np.shape(x) + (dim, dim)).copy()

    return MatrixField(dim=dim, evaluator=evaluate,
                       asymptotic_minus=m, asymptotic_plus=m)


def simpson_integrate(f, grid: Grid) -> complex:
    """Composite Simpson rule over the grid; O(h^4) for smooth integrands.

    `f` may be a vectorized callable or an array of samples of length
    grid.n_points.
    """
    if callable(f):
        samples = np.asarray(f(grid.points()))
    else:
        samples = np.asarray(f)
        if samples.shape[0] != grid.n_points:
            raise InvalidInputError("sample count does not match the grid")
    if not np.all(np.isfinite(samples.view(float) if np.iscomplexobj(samples)
                              else samples)):
        raise NumericalFailure("non-finite integrand sample")
    h = grid.spacing
    w = np.ones(grid.n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    total = np.tensordot(w, samples, axes=(0, 0)) * (h / 3.0)
    return complex(total) if np.ndim(total) == 0 else total


def central_derivative(f, x, h: float = 1e-3):
    """Five-point central stencil, O(h^4); works on vector/matrix values."""
    if h <= 0:
        raise InvalidInputError("stencil step must be positive")
    x = np.asarray(x, dtype=float)
    val = (-np.asarray(f(x + 2 * h)) + 8 * np.asarray(f(x + h))
           - 8 * np.asarray(f(x - h)) + np.asarray(f(x - 2 * h))) / (12 * h)
    flat = val.ravel()
    if not np.all(np.isfinite(flat.real)) or not np.all(np.isfinite(flat.imag)):
        raise NumericalFailure("non-finite sample in stencil derivative")
    return val


def invert(matrix: np.ndarray, threshold: float = 1e-12) -> np.ndarray:
    """Inverse of a single small matrix with singularity guards.

    Refuses when |det| falls below threshold * ||M||_max^n, and verifies
    ||M inv(M) - I||_inf < 1e-10 afterwards.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError("invert expects a square matrix")
    n = m.shape[0]
    det = np.linalg.det(m)
    scale = max(1.0, float(np.max(np.abs(m)))) ** n
    if abs(det) <= threshold * scale:
        raise SingularMatrixError(
            f"matrix is numerically singular (|det| = {abs(det):.3e})",
            abs_det=float(abs(det)))
    inv = np.linalg.inv(m)
    defect = float(np.max(np.abs(m @ inv - np.eye(n))))
    if defect >= 1e-10:
        raise SingularMatrixError(
            f"inverse failed the residual check (defect = {defect:.3e})",
            abs_det=float(abs(det)))
    return inv


def inv_stack(matrices: np.ndarray, xs: np.ndarray | None = None,
              threshold: float = 1e-12):
    """Pointwise inverse of a (..., n, n) stack with a determinant scan.

    Used on seed matrices U(x): reports the grid location of the first
    near-singular point instead of letting numpy divide through it.  The
    scale for "near zero" is the Hadamard bound (product of column norms),
    which stays meaningful when columns grow at different exponential
    rates.
    """
    from .errors import SingularSeedError

    m = np.asarray(matrices, dtype=complex)
    det = np.linalg.det(m)
    col_norms = np.linalg.norm(m, axis=-2)
    scale = np.maximum(1.0, np.prod(col_norms, axis=-1))
    bad = np.abs(det) <= threshold * scale
    if np.any(bad):
        idx = int(np.argmax(bad))
        x_bad = None if xs is None else float(np.asarray(xs).ravel()[idx])
        raise SingularSeedError(
            "seed matrix is numerically singular on the grid"
            + ("" if x_bad is None else f" near x = {x_bad:.6g}"),
            x=x_bad)
    return np.linalg.inv(m)


def adjoint(matrices: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the trailing two axes."""
    return np.conj(np.swapaxes(np.asarray(matrices), -1, -2))


def mat_apply(matrices, vectors):
    """Pointwise matrix-vector product over stacked values."""
    return np.einsum("...ij,...j->...i", np.asarray(matrices),
                     np.asarray(vectors))


def sup_norm(values) -> float:
    return float(np.max(np.abs(values)))


def hermiticity_defect(matrices: np.ndarray) -> float:
    m = np.asarray(matrices)
    return sup_norm(m - adjoint(m))

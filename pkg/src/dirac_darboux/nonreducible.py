"""Block-triangular 4x4 seeds and their non-Hermitian partners.

The base operator is block diagonal, two independent 2x2 problems with
constant potentials.  A seed matrix of the form [[U1, U3], [0, U2]]
couples them: U1 and U2 are regular 2x2 seeds of the diagonal blocks,
while the U3 columns solve the UPPER block's equation at the LOWER
block's energies.  The transformed potential then picks up an upper
off-diagonal block that cannot be removed by any constant rotation, so
the partner operator is non-Hermitian by construction.  Its adjoint
carries the four normalizable states, the columns of (U^-1)^dagger.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .darboux2x2 import Seed2x2, Transformed2x2, build_seed, transform
from .engine import DiracOperator, make_operator
from .errors import InvalidSeedError
from .free2x2 import FreeParams, SpinorField, closed_solution
from .numerics import (DEFAULT_GRID, GAMMA2, S2, S3, Grid, MatrixField,
                       inv_stack, mat_apply, simpson_integrate, sup_norm)

GAMMA4 = np.kron(np.eye(2), GAMMA2)


@dataclass(frozen=True)
class BlockSeed:
    """Upper-triangular 4x4 seed; U4 is identically zero."""

    seed1: Seed2x2
    seed2: Seed2x2
    u3_columns: tuple
    deltas_bar: tuple
    coupled: bool

    @property
    def Lambda1(self) -> np.ndarray:
        return np.diag([self.seed1.eps1, self.seed1.eps2]).astype(float)

    @property
    def Lambda2(self) -> np.ndarray:
        return np.diag([self.seed2.eps1, self.seed2.eps2]).astype(float)

    @property
    def energies(self) -> tuple:
        return (self.seed1.eps1, self.seed1.eps2,
                self.seed2.eps1, self.seed2.eps2)

    def U1(self, x):
        return self.seed1.matrix(x)

    def U2(self, x):
        return self.seed2.matrix(x)

    def U3(self, x):
        xs = np.asarray(x, dtype=float)
        if not self.coupled:
            return np.zeros(np.shape(xs) + (2, 2), dtype=complex)
        return np.stack([np.asarray(c(xs)) for c in self.u3_columns],
                        axis=-1)

    def U4(self, x):
        xs = np.asarray(x, dtype=float)
        return np.zeros(np.shape(xs) + (2, 2), dtype=complex)

    def U1_prime(self, x):
        return self.seed1.matrix_derivative(x)

    def U2_prime(self, x):
        return self.seed2.matrix_derivative(x)

    def U3_prime(self, x):
        xs = np.asarray(x, dtype=float)
        if not self.coupled:
            return np.zeros(np.shape(xs) + (2, 2), dtype=complex)
        return np.stack([np.asarray(c.d(xs)) for c in self.u3_columns],
                        axis=-1)

    def matrix(self, x):
        xs = np.asarray(x, dtype=float)
        out = np.zeros(np.shape(xs) + (4, 4), dtype=complex)
        out[..., 0:2, 0:2] = self.U1(xs)
        out[..., 0:2, 2:4] = self.U3(xs)
        out[..., 2:4, 2:4] = self.U2(xs)
        return out

    def matrix_derivative(self, x):
        xs = np.asarray(x, dtype=float)
        out = np.zeros(np.shape(xs) + (4, 4), dtype=complex)
        out[..., 0:2, 0:2] = self.U1_prime(xs)
        out[..., 0:2, 2:4] = self.U3_prime(xs)
        out[..., 2:4, 2:4] = self.U2_prime(xs)
        return out

    def matrix_second_derivative(self, x):
        """Closed U''.  Every column solves the constant-potential base
        equation, so u'' = gamma^-1 (E - V0) u' column by column."""
        xs = np.asarray(x, dtype=float)
        up = self.matrix_derivative(xs)
        v0 = np.zeros((4, 4), dtype=complex)
        v0[0:2, 0:2] = self.seed1.params.potential()
        v0[2:4, 2:4] = self.seed2.params.potential()
        ginv = np.linalg.inv(GAMMA4)
        out = np.empty_like(up)
        for k, e in enumerate(self.energies):
            mk = ginv @ (e * np.eye(4) - v0)
            out[..., :, k] = mat_apply(mk, up[..., :, k])
        return out

    def inverse(self, x):
        """Triangular block inverse; never forms the raw 4x4 determinant."""
        xs = np.asarray(x, dtype=float)
        inv1 = inv_stack(self.U1(xs), xs)
        inv2 = inv_stack(self.U2(xs), xs)
        out = np.zeros(np.shape(xs) + (4, 4), dtype=complex)
        out[..., 0:2, 0:2] = inv1
        out[..., 2:4, 2:4] = inv2
        if self.coupled:
            out[..., 0:2, 2:4] = -inv1 @ self.U3(xs) @ inv2
        return out

    def inverse_derivative(self, x):
        xs = np.asarray(x, dtype=float)
        inv = self.inverse(xs)
        return -inv @ self.matrix_derivative(xs) @ inv


def build_block_seed(params1: FreeParams, params2: FreeParams, energies,
                     deltas=(0.0, 0.0, 0.0, 0.0), deltas_bar=(0.0, 0.0),
                     coupling: bool = True,
                     grid: Grid = DEFAULT_GRID) -> BlockSeed:
    """Seed [[U1, U3], [0, U2]] for the block-diagonal base operator.

    U3 columns are params1 solutions at the params2 seed energies
    (energies[2:4]) with their own phase offsets deltas_bar, which is
    exactly what the triangular seed equation demands.  The columns are
    verified against the base operator on the grid before acceptance.
    """
    e1, e2, e3, e4 = (float(e) for e in energies)
    d1, d2, d3, d4 = (float(d) for d in deltas)
    seed1 = build_seed(params1, e1, e2, d1, d2)
    seed2 = build_seed(params2, e3, e4, d3, d4)
    db3, db4 = (float(d) for d in deltas_bar)
    if coupling:
        u3 = (closed_solution(params1, e3, db3, "psi"),
              closed_solution(params1, e4, db4, "psi_bar"))
    else:
        u3 = ()
    seed = BlockSeed(seed1=seed1, seed2=seed2, u3_columns=u3,
                     deltas_bar=(db3, db4), coupled=bool(coupling))

    # pointwise-relative residual of the full triangular seed equation
    xs = grid.interior()
    U = seed.matrix(xs)
    dU = seed.matrix_derivative(xs)
    lam = np.diag(list(np.diag(seed.Lambda1)) + list(np.diag(seed.Lambda2)))
    V = np.zeros((4, 4), dtype=complex)
    V[0:2, 0:2] = params1.potential()
    V[2:4, 2:4] = params2.potential()
    # column by column to keep the scale of each mode separate
    worst = 0.0
    for k in range(4):
        col = U[..., :, k]
        dcol = dU[..., :, k]
        r = mat_apply(GAMMA4, dcol) + mat_apply(V, col) - lam[k, k] * col
        amp = np.maximum(np.max(np.abs(col), axis=-1), 1.0)
        worst = max(worst, float(np.max(np.max(np.abs(r), axis=-1) / amp)))
    if worst > 1e-6:
        raise InvalidSeedError(
            f"block seed columns fail the base equation (residual "
            f"{worst:.3e})")
    return seed


def seed_column_fields(seed: BlockSeed) -> tuple:
    """The four seed columns as 4-component spinor fields."""

    def stacked(upper, lower):
        def value(x):
            xs = np.asarray(x, dtype=float)
            out = np.zeros(np.shape(xs) + (4,), dtype=complex)
            if upper is not None:
                out[..., 0:2] = np.asarray(upper(xs))
            if lower is not None:
                out[..., 2:4] = np.asarray(lower(xs))
            return out

        def derivative(x):
            xs = np.asarray(x, dtype=float)
            out = np.zeros(np.shape(xs) + (4,), dtype=complex)
            if upper is not None:
                out[..., 0:2] = np.asarray(upper.d(xs))
            if lower is not None:
                out[..., 2:4] = np.asarray(lower.d(xs))
            return out

        return SpinorField(value=value, derivative=derivative)

    c1 = seed.seed1.column1()
    c2 = seed.seed1.column2()
    c3 = seed.seed2.column1()
    c4 = seed.seed2.column2()
    u3a = seed.u3_columns[0] if seed.coupled else None
    u3b = seed.u3_columns[1] if seed.coupled else None
    return (stacked(c1, None), stacked(c2, None),
            stacked(u3a, c3), stacked(u3b, c4))


@dataclass(frozen=True)
class NonHermitianResult:
    seed: BlockSeed
    base: DiracOperator
    H_tilde: DiracOperator
    hermiticity_defect: float
    upper_block: Callable
    kernel: Callable
    offspan_max: float
    transformed1: Transformed2x2
    transformed2: Transformed2x2


def _pauli_component(sigma, stack):
    return np.einsum("ij,...ji->...", sigma, stack) / 2.0


def nonreducible_transform(seed: BlockSeed,
                           grid: Grid = DEFAULT_GRID) -> NonHermitianResult:
    """Transformed 4x4 potential; Hermitian only when the coupling is off.

    The diagonal 2x2 blocks are the usual closed-form partners.  The
    upper block is [gamma2, X] with X = U3' U2^-1 - K1 U3 U2^-1; it
    grows with the window whenever the U3 decay rates undercut U2's, so
    the reported defect refers to the supplied grid.
    """
    t1 = transform(seed.seed1, grid=grid)
    t2 = transform(seed.seed2, grid=grid)

    def X_of(x):
        xs = np.asarray(x, dtype=float)
        if not seed.coupled:
            return np.zeros(np.shape(xs) + (2, 2), dtype=complex)
        inv2 = inv_stack(seed.U2(xs), xs)
        K1 = seed.seed1.kernel(xs)
        return (seed.U3_prime(xs) - K1 @ seed.U3(xs)) @ inv2

    def upper_block(x):
        X = X_of(x)
        return GAMMA2 @ X - X @ GAMMA2

    def potential(x):
        xs = np.asarray(x, dtype=float)
        out = np.zeros(np.shape(xs) + (4, 4), dtype=complex)
        out[..., 0:2, 0:2] = t1.matrix(xs)
        out[..., 2:4, 2:4] = t2.matrix(xs)
        out[..., 0:2, 2:4] = upper_block(xs)
        return out

    def kernel(x):
        xs = np.asarray(x, dtype=float)
        out = np.zeros(np.shape(xs) + (4, 4), dtype=complex)
        out[..., 0:2, 0:2] = seed.seed1.kernel(xs)
        out[..., 2:4, 2:4] = seed.seed2.kernel(xs)
        out[..., 0:2, 2:4] = X_of(xs)
        return out

    if seed.coupled:
        asym_m = asym_p = None
    else:
        m1 = t1.potential_field()
        m2 = t2.potential_field()
        asym_m = np.zeros((4, 4), dtype=complex)
        asym_m[0:2, 0:2] = m1.asymptotic_minus
        asym_m[2:4, 2:4] = m2.asymptotic_minus
        asym_p = np.zeros((4, 4), dtype=complex)
        asym_p[0:2, 0:2] = m1.asymptotic_plus
        asym_p[2:4, 2:4] = m2.asymptotic_plus

    field = MatrixField(dim=4, evaluator=potential,
                        asymptotic_minus=asym_m, asymptotic_plus=asym_p)

    xs = grid.points()
    sampled = field(xs)
    defect = float(np.max(np.linalg.norm(
        sampled - np.conj(sampled.swapaxes(-1, -2)), ord=2, axis=(-2, -1))))
    X = X_of(xs)
    offspan = float(np.max(np.sqrt(
        np.abs(_pauli_component(S2, X)) ** 2
        + np.abs(_pauli_component(S3, X)) ** 2)))

    base_V = np.zeros((4, 4), dtype=complex)
    base_V[0:2, 0:2] = seed.seed1.params.potential()
    base_V[2:4, 2:4] = seed.seed2.params.potential()
    base = make_operator(GAMMA4, MatrixField(
        dim=4, evaluator=lambda x: np.broadcast_to(
            base_V, np.shape(np.asarray(x, dtype=float)) + (4, 4)).copy(),
        asymptotic_minus=base_V, asymptotic_plus=base_V), grid=grid)
    H_tilde = make_operator(GAMMA4, field, grid=grid)
    return NonHermitianResult(seed=seed, base=base, H_tilde=H_tilde,
                              hermiticity_defect=defect,
                              upper_block=upper_block, kernel=kernel,
                              offspan_max=offspan, transformed1=t1,
                              transformed2=t2)


@dataclass(frozen=True)
class AdjointMissingSet:
    """Normalizable eigenstates of the adjoint partner operator."""

    energies: tuple
    states: tuple
    densities: tuple
    norms: tuple
    residuals: tuple


def adjoint_potential(result: NonHermitianResult) -> Callable:
    def evaluator(x):
        A = result.H_tilde.potential(x)
        return np.conj(np.asarray(A).swapaxes(-1, -2))
    return evaluator


def adjoint_missing_states(result: NonHermitianResult,
                           grid: Grid = DEFAULT_GRID) -> AdjointMissingSet:
    """Columns of (U^-1)^dagger, checked against the adjoint operator."""
    seed = result.seed
    Vt_adj = adjoint_potential(result)
    xs = grid.points()
    interior = grid.interior()

    states, densities, norms, residuals = [], [], [], []
    for k, energy in enumerate(seed.energies):
        def value(x, k=k):
            inv = seed.inverse(x)
            return np.conj(inv[..., k, :])

        def derivative(x, k=k):
            dinv = seed.inverse_derivative(x)
            return np.conj(dinv[..., k, :])

        state = SpinorField(value=value, derivative=derivative)
        dens_raw = np.sum(np.abs(state(xs)) ** 2, axis=-1)
        norm = float(np.real(simpson_integrate(dens_raw, grid)))
        vals = state(interior)
        res = mat_apply(GAMMA4, state.d(interior)) \
            + mat_apply(Vt_adj(interior), vals) - energy * vals
        residual = sup_norm(res) / max(sup_norm(vals), 1e-300)

        def density(x, state=state, norm=norm):
            return np.sum(np.abs(state(x)) ** 2, axis=-1) / norm

        states.append(state)
        densities.append(density)
        norms.append(norm)
        residuals.append(float(residual))
    return AdjointMissingSet(energies=tuple(seed.energies),
                             states=tuple(states),
                             densities=tuple(densities),
                             norms=tuple(norms),
                             residuals=tuple(residuals))


def adjoint_intertwining_residual(result: NonHermitianResult,
                                  test_spinors=None,
                                  grid: Grid = DEFAULT_GRID,
                                  h: float = 1e-3) -> float:
    """sup |L^dag(H_tilde^dag phi) - H(L^dag phi)| over smooth packets.

    L^dag acts as -d/dx - K(x)^dagger.  The kernel derivative is closed
    (K' = U'' U^-1 - K^2 with U'' from the constant-coefficient base
    equation), so the exponentially large coupling block never enters a
    finite difference; only the bounded packet derivative is stencilled.
    """
    from .engine import gaussian_packets
    from .numerics import adjoint, central_derivative

    if test_spinors is None:
        test_spinors = gaussian_packets(4)
    xs = grid.interior()
    seed = result.seed
    K = result.kernel(xs)
    Kp = seed.matrix_second_derivative(xs) @ seed.inverse(xs) - K @ K
    Kdag = adjoint(K)
    Kpdag = adjoint(Kp)
    V0 = result.base.potential(xs)
    Vtdag = adjoint(result.H_tilde.potential(xs))
    Vtpdag = adjoint(GAMMA4 @ Kp - Kp @ GAMMA4)
    worst = 0.0
    for psi in test_spinors:
        p = np.asarray(psi(xs))
        dp = np.asarray(psi.d(xs))
        ddp = central_derivative(psi.d, xs, h=h)
        hpsi = mat_apply(GAMMA4, dp) + mat_apply(Vtdag, p)
        dhpsi = mat_apply(GAMMA4, ddp) + mat_apply(Vtpdag, p) \
            + mat_apply(Vtdag, dp)
        lhs = -dhpsi - mat_apply(Kdag, hpsi)
        lpsi = -dp - mat_apply(Kdag, p)
        dlpsi = -ddp - mat_apply(Kpdag, p) - mat_apply(Kdag, dp)
        rhs = mat_apply(GAMMA4, dlpsi) + mat_apply(V0, lpsi)
        worst = max(worst, float(sup_norm(lhs - rhs)))
    return worst

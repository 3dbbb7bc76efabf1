"""Reducible 4x4 models built from two commuting 2x2 problems.

A constant unitary rotates the block-diagonal operator S1 (x) h_slot1 +
S2 (x) h_slot2 into a physical basis where the potential mixes all four
components.  Two rotations are implemented: a lattice-distortion form
with a free phase alpha, and a spin-orbit form (alpha fixed at pi/2)
whose rotated gamma matrix coincides with the base one.  The transformed
4x4 potential is produced twice, once by conjugating the slot blocks and
once from component formulas, and the build fails if the two disagree.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .darboux2x2 import (BoundState, Seed2x2, Transformed2x2, bound_states,
                         build_seed, transform)
from .errors import (InvalidInputError, NotReducibleError, NumericalFailure)
from .free2x2 import FreeParams, SpinorField
from .numerics import (DEFAULT_GRID, GAMMA2, Grid, MatrixField,
                       central_derivative, mat_apply, sup_norm)

GAMMA4_BASE = np.kron(np.eye(2), GAMMA2)

_SQ2 = np.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class ReductionScheme:
    kind: str
    alpha: float
    unitary: np.ndarray

    @property
    def gamma(self) -> np.ndarray:
        return self.unitary @ GAMMA4_BASE @ self.unitary.conj().T


def distortion_scheme(alpha: float = 0.0) -> ReductionScheme:
    ea = np.exp(1j * alpha)
    U = _SQ2 * np.array([
        [0, 1, 0, -np.conj(ea)],
        [1, 0, -np.conj(ea), 0],
        [0, -ea, 0, -1],
        [ea, 0, 1, 0],
    ], dtype=complex)
    return ReductionScheme(kind="distortion", alpha=float(alpha), unitary=U)


def spin_orbit_scheme() -> ReductionScheme:
    # alpha is pinned to pi/2; only then does the rotation commute with
    # the base gamma matrix.
    U = _SQ2 * np.array([
        [1, 0, 1j, 0],
        [0, 1, 0, 1j],
        [0, 1j, 0, 1],
        [1j, 0, 1, 0],
    ], dtype=complex)
    return ReductionScheme(kind="spin_orbit", alpha=float(np.pi / 2), unitary=U)


def _conjugate_blocks(scheme: ReductionScheme, m1, m2):
    m1 = np.asarray(m1)
    m2 = np.asarray(m2)
    inner = np.zeros(m1.shape[:-2] + (4, 4), dtype=complex)
    inner[..., 0:2, 0:2] = m1
    inner[..., 2:4, 2:4] = m2
    U = scheme.unitary
    return np.einsum("ij,...jk,lk->...il", U, inner, U.conj())


def assemble(scheme: ReductionScheme, field_slot1: MatrixField,
             field_slot2: MatrixField) -> MatrixField:
    """Rotate blockdiag(slot1, slot2) into the physical basis."""
    if field_slot1.dim != 2 or field_slot2.dim != 2:
        raise InvalidInputError("assemble expects two 2x2 potential fields")

    def evaluator(x):
        return _conjugate_blocks(scheme, field_slot1(x), field_slot2(x))

    def lift(a, b):
        if a is None or b is None:
            return None
        return _conjugate_blocks(scheme, a, b)

    return MatrixField(
        dim=4, evaluator=evaluator,
        asymptotic_minus=lift(field_slot1.asymptotic_minus,
                              field_slot2.asymptotic_minus),
        asymptotic_plus=lift(field_slot1.asymptotic_plus,
                             field_slot2.asymptotic_plus))


@dataclass(frozen=True)
class ReducedPair:
    h1: MatrixField
    h2: MatrixField
    leakage: float


def reduce(scheme: ReductionScheme, field: MatrixField,
           grid: Grid = DEFAULT_GRID) -> ReducedPair:
    """Invert the rotation; refuse fields that do not block-diagonalize."""
    if field.dim != 4:
        raise InvalidInputError("reduce expects a 4x4 potential field")
    U = scheme.unitary
    xs = grid.points()
    inner = np.einsum("ji,...jk,kl->...il", U.conj(), field(xs), U)
    off = max(sup_norm(inner[..., 0:2, 2:4]), sup_norm(inner[..., 2:4, 0:2]))
    scale = max(1.0, sup_norm(inner))
    if off > 1e-10 * scale:
        raise NotReducibleError(
            f"off-block leakage {off:.3e} exceeds tolerance", leakage=off)

    def block(sl):
        def evaluator(x):
            rotated = np.einsum("ji,...jk,kl->...il", U.conj(),
                                np.asarray(field(x)), U)
            return rotated[..., sl, sl]
        return evaluator

    def lift(m, sl):
        if m is None:
            return None
        return (U.conj().T @ m @ U)[sl, sl]

    s1, s2 = slice(0, 2), slice(2, 4)
    h1 = MatrixField(dim=2, evaluator=block(s1),
                     asymptotic_minus=lift(field.asymptotic_minus, s1),
                     asymptotic_plus=lift(field.asymptotic_plus, s1))
    h2 = MatrixField(dim=2, evaluator=block(s2),
                     asymptotic_minus=lift(field.asymptotic_minus, s2),
                     asymptotic_plus=lift(field.asymptotic_plus, s2))
    return ReducedPair(h1=h1, h2=h2, leakage=float(off))


def embed_state(scheme: ReductionScheme, slot: int,
                state: SpinorField) -> SpinorField:
    """Lift a 2-spinor field into the physical 4-component basis."""
    if slot not in (1, 2):
        raise InvalidInputError("slot must be 1 or 2")
    U = scheme.unitary
    offset = 0 if slot == 1 else 2

    def lift(vals):
        vals = np.asarray(vals)
        four = np.zeros(vals.shape[:-1] + (4,), dtype=complex)
        four[..., offset:offset + 2] = vals
        return mat_apply(U, four)

    return SpinorField(value=lambda x: lift(state(x)),
                       derivative=lambda x: lift(state.d(x)))


@dataclass(frozen=True)
class ReducibleIntertwiner:
    """Slot-wise Darboux intertwiner rotated to the physical basis.

    A slot kernel of None means that slot is passed through unchanged
    (partial intertwining); otherwise the slot action is d/dx - K(x).
    """

    scheme: ReductionScheme
    kernel_slot1: Callable | None
    kernel_slot2: Callable | None

    def apply(self, f: SpinorField) -> SpinorField:
        U = self.scheme.unitary

        def value(x):
            xs = np.asarray(x, dtype=float)
            phi = mat_apply(U.conj().T, np.asarray(f(xs)))
            dphi = mat_apply(U.conj().T, np.asarray(f.d(xs)))
            out = np.empty_like(phi)
            for kernel, sl in ((self.kernel_slot1, slice(0, 2)),
                               (self.kernel_slot2, slice(2, 4))):
                if kernel is None:
                    out[..., sl] = phi[..., sl]
                else:
                    out[..., sl] = dphi[..., sl] - mat_apply(
                        np.asarray(kernel(xs)), phi[..., sl])
            return mat_apply(U, out)

        def derivative(x):
            return central_derivative(value, np.asarray(x, dtype=float),
                                      h=1e-4)

        return SpinorField(value=value, derivative=derivative)

    def kernel4(self, x):
        if self.kernel_slot1 is None or self.kernel_slot2 is None:
            raise InvalidInputError(
                "partial intertwiner has no 4x4 kernel representation")
        return _conjugate_blocks(self.scheme,
                                 np.asarray(self.kernel_slot1(x)),
                                 np.asarray(self.kernel_slot2(x)))


@dataclass(frozen=True)
class DistortionPotential:
    """Component fields of the rotated 4x4 potential (distortion form)."""

    V_A: Callable
    V_B: Callable
    V: Callable
    V_prime: Callable
    W_A: Callable
    W_B: Callable
    W_plus: Callable
    W_minus: Callable

    def matrix(self, x) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        VA, VB = self.V_A(xs), self.V_B(xs)
        Vc, Vp = self.V(xs), self.V_prime(xs)
        WA, WB = self.W_A(xs), self.W_B(xs)
        Wp, Wm = self.W_plus(xs), self.W_minus(xs)
        out = np.empty(np.shape(xs) + (4, 4), dtype=complex)
        out[..., 0, 0], out[..., 0, 1] = VA, Vc
        out[..., 0, 2], out[..., 0, 3] = WA, Wp
        out[..., 1, 0], out[..., 1, 1] = np.conj(Vc), VB
        out[..., 1, 2], out[..., 1, 3] = Wm, WB
        out[..., 2, 0], out[..., 2, 1] = np.conj(WA), np.conj(Wm)
        out[..., 2, 2], out[..., 2, 3] = VA, Vp
        out[..., 3, 0], out[..., 3, 1] = np.conj(Wp), np.conj(WB)
        out[..., 3, 2], out[..., 3, 3] = np.conj(Vp), VB
        return out


def distortion_components(t1: Transformed2x2, t2: Transformed2x2,
                          alpha: float) -> DistortionPotential:
    ph = np.exp(-1j * alpha)
    return DistortionPotential(
        V_A=lambda x: 0.5 * (t1.w_t(x) + t2.w_t(x)),
        V_B=lambda x: 0.5 * (t1.v_t(x) + t2.v_t(x)),
        V=lambda x: 0.5 * (np.conj(t1.a_t(x)) + np.conj(t2.a_t(x))),
        V_prime=lambda x: -0.5 * (np.conj(t1.a_t(x)) + np.conj(t2.a_t(x))),
        W_A=lambda x: 0.5 * ph * (t1.w_t(x) - t2.w_t(x)),
        W_B=lambda x: -0.5 * ph * (t1.v_t(x) - t2.v_t(x)),
        W_plus=lambda x: -0.5 * ph * (np.conj(t1.a_t(x)) - np.conj(t2.a_t(x))),
        W_minus=lambda x: 0.5 * ph * (t1.a_t(x) - t2.a_t(x)),
    )


def _embedded_bound_state(scheme: ReductionScheme, slot: int, bs: BoundState,
                          potential4: MatrixField, gamma4: np.ndarray,
                          grid: Grid) -> BoundState:
    spinor = embed_state(scheme, slot, bs.spinor)
    interior = grid.interior()
    vals = spinor(interior)
    res = mat_apply(gamma4, spinor.d(interior)) \
        + mat_apply(potential4(interior), vals) - bs.energy * vals
    residual = sup_norm(res) / max(sup_norm(vals), 1e-300)

    def density(x, spinor=spinor):
        return np.sum(np.abs(spinor(x)) ** 2, axis=-1)

    return BoundState(energy=bs.energy, spinor=spinor, norm=bs.norm,
                      density=density, residual=residual,
                      finite_norm=bs.finite_norm)


@dataclass(frozen=True)
class DistortionModel:
    scheme: ReductionScheme
    seed1: Seed2x2
    seed2: Seed2x2
    transformed1: Transformed2x2
    transformed2: Transformed2x2
    components: DistortionPotential
    potential: MatrixField
    base_potential: MatrixField
    gamma: np.ndarray
    bound_states: tuple
    intertwiner: ReducibleIntertwiner


def build_distortion_model(params1: FreeParams, params2: FreeParams,
                           energies, deltas=(0.0, 0.0, 0.0, 0.0),
                           alpha: float = 0.0,
                           grid: Grid = DEFAULT_GRID) -> DistortionModel:
    """Two independent 2x2 transformations rotated into one 4x4 model.

    Family 1 (params1 at energies[0:2]) lands in slot 2 of the rotation,
    family 2 (params2 at energies[2:4]) in slot 1; that ordering is what
    makes the component formulas above come out right.
    """
    e1, e2, e3, e4 = (float(e) for e in energies)
    d1, d2, d3, d4 = (float(d) for d in deltas)
    seed1 = build_seed(params1, e1, e2, d1, d2)
    seed2 = build_seed(params2, e3, e4, d3, d4)
    t1 = transform(seed1, grid=grid)
    t2 = transform(seed2, grid=grid)
    scheme = distortion_scheme(alpha)

    potential = assemble(scheme, t2.potential_field(), t1.potential_field())
    base = assemble(scheme, params2.potential_field(),
                    params1.potential_field())
    components = distortion_components(t1, t2, alpha)

    xs = grid.points()
    direct = potential(xs)
    templ = components.matrix(xs)
    defect = sup_norm(direct - templ)
    if defect > 1e-10 * max(1.0, sup_norm(direct)):
        raise NumericalFailure(
            f"component template deviates from the rotated blocks by "
            f"{defect:.3e}")

    intertwiner = ReducibleIntertwiner(scheme=scheme,
                                       kernel_slot1=seed2.kernel,
                                       kernel_slot2=seed1.kernel)
    gamma4 = scheme.gamma
    states = []
    for bs in bound_states(seed1, grid=grid):
        states.append(_embedded_bound_state(scheme, 2, bs, potential,
                                            gamma4, grid))
    for bs in bound_states(seed2, grid=grid):
        states.append(_embedded_bound_state(scheme, 1, bs, potential,
                                            gamma4, grid))
    return DistortionModel(scheme=scheme, seed1=seed1, seed2=seed2,
                           transformed1=t1, transformed2=t2,
                           components=components, potential=potential,
                           base_potential=base, gamma=gamma4,
                           bound_states=tuple(states),
                           intertwiner=intertwiner)


@dataclass(frozen=True)
class SpinOrbitPotential:
    """Scalar, mass-imbalance and spin-orbit profiles of the 4x4 model."""

    V: Callable
    Delta: Callable
    lam: Callable


@dataclass(frozen=True)
class SpinOrbitModel:
    scheme: ReductionScheme
    seed: Seed2x2
    v1: float
    eps1: float
    kappa: float
    lambda_mode: str
    v1_tilde: Callable
    lam: Callable
    components: SpinOrbitPotential
    potential: MatrixField
    base_potential: MatrixField
    gamma: np.ndarray
    localized_states: tuple
    intertwiner: ReducibleIntertwiner


def build_spinorbit_model(v1: float, eps1: float, lam=None,
                          grid: Grid = DEFAULT_GRID) -> SpinOrbitModel:
    """Spin-orbit 4x4 model from the chiral family (v1, -v1, 0).

    The seed pairs energies +-eps1 with zero offsets, which keeps the
    transformed 2x2 potential diagonal, diag(v1_tilde, -v1_tilde).  Slot 1
    carries the companion diagonal block diag(v1_tilde, 2*lam - v1_tilde)
    unchanged on both sides of the (partial) intertwining.  lam may be
    None (locked to v1_tilde pointwise), a constant, or a callable.
    """
    v1 = float(v1)
    eps1 = float(eps1)
    if not 0.0 < eps1 < v1:
        raise InvalidInputError("requires 0 < eps1 < v1")
    params = FreeParams(v=v1, w=-v1, a=0.0)
    seed = build_seed(params, eps1, -eps1)
    kap = seed.kappa1

    def v1_tilde(x):
        xs = np.asarray(x, dtype=float)
        return v1 - 2.0 * kap ** 2 / (v1 + eps1 * np.cosh(2.0 * kap * xs))

    trans = transform(seed, grid=grid)
    xs = grid.points()
    closed = v1_tilde(xs)
    direct = trans.matrix(xs)
    defect = max(sup_norm(direct[..., 0, 0] - closed),
                 sup_norm(direct[..., 1, 1] + closed),
                 sup_norm(direct[..., 0, 1]))
    if defect > 1e-10 * max(1.0, abs(v1)):
        raise NumericalFailure(
            f"closed-form profile deviates from the transformation by "
            f"{defect:.3e}")

    if lam is None:
        lambda_mode = "equal_to_v1_tilde"
        lam_fn = v1_tilde
        lam_limit = v1
    elif callable(lam):
        lambda_mode = "callable"
        lam_fn = lam
        lam_limit = None
    else:
        lambda_mode = "constant"
        lam_c = float(lam)
        lam_fn = lambda x: np.broadcast_to(lam_c, np.shape(x)).copy()
        lam_limit = lam_c

    def slot1_matrix(x):
        xs_ = np.asarray(x, dtype=float)
        vt = v1_tilde(xs_)
        out = np.zeros(np.shape(xs_) + (2, 2), dtype=complex)
        out[..., 0, 0] = vt
        out[..., 1, 1] = 2.0 * lam_fn(xs_) - vt
        return out

    if lam_limit is None:
        slot1_asym = None
    else:
        slot1_asym = np.array([[v1, 0.0], [0.0, 2.0 * lam_limit - v1]],
                              dtype=complex)
    slot1_field = MatrixField(dim=2, evaluator=slot1_matrix,
                              asymptotic_minus=slot1_asym,
                              asymptotic_plus=slot1_asym)

    scheme = spin_orbit_scheme()
    potential = assemble(scheme, slot1_field, trans.potential_field())
    base = assemble(scheme, slot1_field, params.potential_field())

    def comp_V(x):
        A = potential(x)
        return np.real(A[..., 0, 0] + A[..., 1, 1]) / 2.0

    def comp_Delta(x):
        A = potential(x)
        return np.real(A[..., 0, 0] - A[..., 1, 1]) / 2.0

    def comp_lam(x):
        return np.imag(potential(x)[..., 2, 1])

    lam_vals = np.asarray(lam_fn(xs), dtype=float)
    extract_defect = max(
        sup_norm(comp_V(xs) - lam_vals / 2.0),
        sup_norm(comp_Delta(xs) - (closed - lam_vals / 2.0)),
        sup_norm(comp_lam(xs) - lam_vals))
    if extract_defect > 1e-10 * max(1.0, abs(v1)):
        raise NumericalFailure(
            f"component extraction deviates from the profile by "
            f"{extract_defect:.3e}")

    intertwiner = ReducibleIntertwiner(scheme=scheme, kernel_slot1=None,
                                       kernel_slot2=seed.kernel)
    gamma4 = scheme.gamma
    states = tuple(
        _embedded_bound_state(scheme, 2, bs, potential, gamma4, grid)
        for bs in bound_states(seed, grid=grid))
    return SpinOrbitModel(scheme=scheme, seed=seed, v1=v1, eps1=eps1,
                          kappa=kap, lambda_mode=lambda_mode,
                          v1_tilde=v1_tilde, lam=lam_fn,
                          components=SpinOrbitPotential(V=comp_V,
                                                        Delta=comp_Delta,
                                                        lam=comp_lam),
                          potential=potential, base_potential=base,
                          gamma=gamma4, localized_states=states,
                          intertwiner=intertwiner)


def intertwining_residual_reducible(H, H_tilde,
                                    intertwiner: ReducibleIntertwiner,
                                    test_spinors=None,
                                    grid: Grid = DEFAULT_GRID,
                                    h: float = 1e-3) -> float:
    """sup |L(H psi) - H_tilde(L psi)| over smooth 4-component packets."""
    from .engine import apply as op_apply
    from .engine import gaussian_packets

    if test_spinors is None:
        test_spinors = gaussian_packets(4)
    worst = 0.0
    interior = grid.interior()
    for psi in test_spinors:
        def H_psi(x, psi=psi):
            return op_apply(H, psi, x, h=h)
        H_psi_field = SpinorField(
            value=H_psi,
            derivative=lambda x, f=H_psi: central_derivative(
                f, np.asarray(x, dtype=float), h=1e-4))
        lhs = intertwiner.apply(H_psi_field)(interior)
        rhs = op_apply(H_tilde, intertwiner.apply(psi), interior, h=h)
        worst = max(worst, float(sup_norm(lhs - rhs)))
    return worst


def klein_state(model: SpinOrbitModel, energy: float,
                coeffs=(1.0, 0.0)) -> SpinorField:
    """Extended eigenstate of the level-crossing configuration.

    Only exists when lam is locked to v1_tilde: slot 1 then collapses to
    a pure scalar potential whose states are plane waves dressed by the
    rotation exp(-i sigma1 Phi), Phi' = v1_tilde.
    """
    if model.lambda_mode != "equal_to_v1_tilde":
        raise InvalidInputError(
            "extended closed-form states require lam == v1_tilde")
    E = float(energy)
    c1, c2 = complex(coeffs[0]), complex(coeffs[1])
    v1, eps1, kap = model.v1, model.eps1, model.kappa
    ratio = np.sqrt((v1 - eps1) / (v1 + eps1))

    def phase(x):
        xs = np.asarray(x, dtype=float)
        return v1 * xs - 2.0 * np.arctanh(ratio * np.tanh(kap * xs))

    def plane(x):
        xs = np.asarray(x, dtype=float)
        ep = np.exp(1j * E * xs)
        u = np.empty(np.shape(xs) + (2,), dtype=complex)
        u[..., 0] = c1 * ep + c2 / ep
        u[..., 1] = c1 * ep - c2 / ep
        return u

    def dplane(x):
        xs = np.asarray(x, dtype=float)
        ep = np.exp(1j * E * xs)
        u = np.empty(np.shape(xs) + (2,), dtype=complex)
        u[..., 0] = 1j * E * (c1 * ep - c2 / ep)
        u[..., 1] = 1j * E * (c1 * ep + c2 / ep)
        return u

    def rotate(x, vec):
        ph = phase(x)
        c, s = np.cos(ph), np.sin(ph)
        out = np.empty_like(vec)
        out[..., 0] = c * vec[..., 0] - 1j * s * vec[..., 1]
        out[..., 1] = -1j * s * vec[..., 0] + c * vec[..., 1]
        return out

    def value(x):
        return rotate(x, plane(x))

    def derivative(x):
        xs = np.asarray(x, dtype=float)
        dphi = model.v1_tilde(xs)
        u = plane(xs)
        sig1_u = u[..., ::-1]
        inner = dplane(xs) - 1j * dphi[..., None] * sig1_u
        return rotate(xs, inner)

    chi = SpinorField(value=value, derivative=derivative)
    return embed_state(model.scheme, 1, chi)

"""Closed-form Darboux transformation of the constant 2x2 operator.

The seed mixes the two fundamental families at two in-band energies,
U = (psi_{eps1}, psibar_{eps2}) with z_j = kappa_j x + delta_j.  Everything
downstream of that choice has a closed form: the determinant factor D(x),
the transformed potential entries, the two bound states, and the x -> +-inf
limits of the intertwiner kernel.  All formulas here are regression-tested
against the generic engine, which is the ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import (MIN_DECAY_RATE, DiracOperator, SeedMatrix,
                     make_operator, make_seed, tail_decay_rate)
from .errors import (DegenerateAsymptoticsError, InvalidSeedEnergyError,
                     SingularSeedError)
from .free2x2 import (FreeParams, SpinorField, band_edges, closed_solution,
                      kappa)
from .numerics import (DEFAULT_GRID, GAMMA2, Grid, MatrixField,
                       central_derivative, mat_apply, simpson_integrate,
                       sup_norm)

_DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class Seed2x2:
    """Two-column seed with real kappas and its determinant factor."""

    params: FreeParams
    eps1: float
    eps2: float
    delta1: float
    delta2: float
    kappa1: float
    kappa2: float

    @property
    def degenerate(self) -> bool:
        return abs(self.eps1 - self.eps2) < _DEGENERATE_TOL

    @property
    def P(self) -> float:
        return (self.params.v - self.eps2) * (self.params.w - self.eps1)

    def z1(self, x):
        return self.kappa1 * np.asarray(x, dtype=float) + self.delta1

    def z2(self, x):
        return self.kappa2 * np.asarray(x, dtype=float) + self.delta2

    def D(self, x):
        """D(x) = P + (k1 t1 + eta)(k2 t2 - eta); real, nodeless iff regular."""
        eta = self.params.eta
        t1 = np.tanh(self.z1(x))
        t2 = np.tanh(self.z2(x))
        return self.P + (self.kappa1 * t1 + eta) * (self.kappa2 * t2 - eta)

    def column1(self) -> SpinorField:
        return closed_solution(self.params, self.eps1, self.delta1, "psi")

    def column2(self) -> SpinorField:
        return closed_solution(self.params, self.eps2, self.delta2, "psi_bar")

    def matrix(self, x):
        c1 = self.column1()
        c2 = self.column2()
        return np.stack([np.asarray(c1(x)), np.asarray(c2(x))], axis=-1)

    def matrix_derivative(self, x):
        c1 = self.column1()
        c2 = self.column2()
        return np.stack([np.asarray(c1.d(x)), np.asarray(c2.d(x))], axis=-1)

    def det_closed(self, x):
        """det U = exp(-2 i rho x) cosh(z1) cosh(z2) D(x) / P."""
        xs = np.asarray(x, dtype=float)
        return (np.exp(-2j * self.params.rho * xs)
                * np.cosh(self.z1(xs)) * np.cosh(self.z2(xs))
                * self.D(xs) / self.P)

    def _kernel_closed(self, xs):
        p = self.params
        k1, k2, eta = self.kappa1, self.kappa2, p.eta
        t1 = np.tanh(self.z1(xs))
        t2 = np.tanh(self.z2(xs))
        D = self.D(xs)
        f = np.empty(np.shape(xs) + (2, 2), dtype=complex)
        f[..., 0, 0] = self.P * k1 * t1 + (eta + k1 * t1) * (k2 ** 2 - eta * k2 * t2)
        f[..., 1, 1] = self.P * k2 * t2 + (k1 ** 2 + eta * k1 * t1) * (k2 * t2 - eta)
        f[..., 0, 1] = 1j * (p.w - self.eps1) * (
            k2 ** 2 + eta * k1 * t1 - k2 * (eta + k1 * t1) * t2)
        f[..., 1, 0] = 1j * (p.v - self.eps2) * (
            k1 ** 2 + eta * k1 * t1 - k2 * (eta + k1 * t1) * t2)
        return -1j * p.rho * np.eye(2) + f / D[..., None, None]

    def kernel(self, x):
        """Closed form of U_x U^-1."""
        xs = np.asarray(x, dtype=float)
        if self.degenerate:
            # equal energies make the kernel exactly x-independent while
            # D(x) decays like sech^2, so evaluate once where both z_j
            # are near zero and broadcast
            center = -(self.delta1 + self.delta2) / (2.0 * self.kappa1)
            K0 = self._kernel_closed(np.array([center]))[0]
            out = np.empty(np.shape(xs) + (2, 2), dtype=complex)
            out[...] = K0
            return out
        return self._kernel_closed(xs)

    def as_engine_seed(self, grid: Grid = DEFAULT_GRID,
                       tol_seed: float | None = None) -> SeedMatrix:
        """The same seed packaged for the generic engine."""
        H = make_operator(GAMMA2, self.params.potential_field(), grid=grid)
        return make_seed(H, (self.column1(), self.column2()),
                         (self.eps1, self.eps2), grid=grid, tol_seed=tol_seed)


def build_seed(params: FreeParams, eps1: float, eps2: float,
               delta1: float = 0.0, delta2: float = 0.0) -> Seed2x2:
    band = band_edges(params)
    for name, e in (("eps1", eps1), ("eps2", eps2)):
        if not band.contains(e):
            raise InvalidSeedEnergyError(
                f"{name} = {e} is not strictly inside the band "
                f"({band.eps_minus}, {band.eps_plus})")
        if abs(e - params.v) < 1e-12 or abs(e - params.w) < 1e-12:
            raise InvalidSeedEnergyError(
                f"{name} = {e} sits on a formula denominator (v or w)")
    k1 = kappa(eps1, params)
    k2 = kappa(eps2, params)
    if abs(k1.imag) > 0 or abs(k2.imag) > 0 or k1.real <= 0 or k2.real <= 0:
        raise InvalidSeedEnergyError("seed energies must give real kappas")
    return Seed2x2(params=params, eps1=float(eps1), eps2=float(eps2),
                   delta1=float(delta1), delta2=float(delta2),
                   kappa1=float(k1.real), kappa2=float(k2.real))


@dataclass(frozen=True)
class RegularityReport:
    sufficient_condition_holds: bool
    min_abs_D: float
    node_detected: bool
    condition_lhs: float
    condition_rhs: float
    condition_applicable: bool


def regularity(seed: Seed2x2, grid: Grid = DEFAULT_GRID) -> RegularityReport:
    """Analytic sufficient condition plus an authoritative node scan of D.

    The inequality is only advisory: the node scan decides whether a build
    may proceed.  It applies in the orientation v < w with Im a >= 0 and,
    mirrored, w < v with Im a <= 0; other sign combinations are reported
    as not applicable (condition False).
    """
    p = seed.params
    eta = p.eta
    k1, k2 = seed.kappa1, seed.kappa2
    applicable = True
    if p.v < p.w and eta >= 0:
        lhs = (p.w - seed.eps1) * (seed.eps2 - p.v) + eta ** 2
        rhs = k1 * k2 + eta * (k1 + k2)
    elif p.v > p.w and eta <= 0:
        lhs = (p.v - seed.eps1) * (seed.eps2 - p.w) + eta ** 2
        rhs = k1 * k2 + (-eta) * (k1 + k2)
    else:
        applicable = False
        lhs, rhs = 0.0, 0.0
    holds = bool(applicable and lhs > rhs)

    d = np.real(seed.D(grid.points()))
    min_abs = float(np.min(np.abs(d)))
    sign_change = bool(np.min(d) < 0.0 < np.max(d))
    near_zero = min_abs < 1e-9 * max(1.0, float(np.max(np.abs(d))))
    node = sign_change or near_zero
    return RegularityReport(sufficient_condition_holds=holds,
                            min_abs_D=min_abs, node_detected=node,
                            condition_lhs=float(lhs),
                            condition_rhs=float(rhs),
                            condition_applicable=applicable)


@dataclass(frozen=True)
class Transformed2x2:
    """Closed-form transformed potential entries and their limits."""

    seed: Seed2x2
    v_t: Callable
    w_t: Callable
    a_t: Callable
    v_t_limits: tuple
    w_t_limits: tuple
    a_t_limits: tuple
    constant: bool

    def matrix(self, x) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        out = np.empty(np.shape(xs) + (2, 2), dtype=complex)
        out[..., 0, 0] = self.v_t(xs)
        out[..., 0, 1] = self.a_t(xs)
        out[..., 1, 0] = np.conj(self.a_t(xs))
        out[..., 1, 1] = self.w_t(xs)
        return out

    def potential_field(self) -> MatrixField:
        def asym(idx):
            vals = (self.v_t_limits[idx], self.w_t_limits[idx],
                    self.a_t_limits[idx])
            if any(v is None for v in vals):
                return None
            vt, wt, at = vals
            return np.array([[vt, at], [np.conj(at), wt]], dtype=complex)

        return MatrixField(dim=2, evaluator=self.matrix,
                           asymptotic_minus=asym(0), asymptotic_plus=asym(1))

    def operator(self, grid: Grid = DEFAULT_GRID) -> DiracOperator:
        return make_operator(GAMMA2, self.potential_field(), grid=grid)

    def asymptotic_bands(self) -> tuple:
        """Band edges of the two constant limits (None where no limit)."""
        out = []
        for idx in (0, 1):
            vt, wt, at = (self.v_t_limits[idx], self.w_t_limits[idx],
                          self.a_t_limits[idx])
            if vt is None:
                out.append(None)
            else:
                out.append(band_edges(FreeParams(float(np.real(vt)),
                                                 float(np.real(wt)),
                                                 complex(at))))
        return tuple(out)


def _rational_term(seed: Seed2x2):
    p = seed.params
    return 2.0 * (seed.eps1 - seed.eps2) * (p.w - seed.eps1) * (p.v - seed.eps2)


def _offdiag_numerator(seed: Seed2x2, t1, t2):
    p = seed.params
    k1, k2, eta = seed.kappa1, seed.kappa2, p.eta
    return (seed.P * (k2 * t2 - k1 * t1)
            + k1 * k2 * (k1 * t2 - k2 * t1)
            - eta * (k1 ** 2 + k2 ** 2)
            + 2 * eta * k1 * k2 * t1 * t2
            + eta ** 2 * (k2 * t2 - k1 * t1))


def transform(seed: Seed2x2, grid: Grid = DEFAULT_GRID) -> Transformed2x2:
    """Closed-form partner potential; refuses seeds whose D has a node."""
    p = seed.params
    if seed.degenerate:
        # Equal energies collapse the transformation to the constant swap
        # (v, w, a) -> (w, v, conj(a)); the kernel is x-independent.
        vt_c, wt_c, at_c = p.w, p.v, np.conj(p.a)
        return Transformed2x2(
            seed=seed,
            v_t=lambda x: np.broadcast_to(float(vt_c), np.shape(x)).copy(),
            w_t=lambda x: np.broadcast_to(float(wt_c), np.shape(x)).copy(),
            a_t=lambda x: np.broadcast_to(complex(at_c), np.shape(x)).copy(),
            v_t_limits=(float(vt_c), float(vt_c)),
            w_t_limits=(float(wt_c), float(wt_c)),
            a_t_limits=(complex(at_c), complex(at_c)),
            constant=True)

    report = regularity(seed, grid=grid)
    if report.node_detected:
        d = np.real(seed.D(grid.points()))
        idx = int(np.argmin(np.abs(d)))
        raise SingularSeedError(
            "D(x) has a node; the transformed potential would be singular",
            x=float(grid.points()[idx]))

    C = _rational_term(seed)

    def v_t(x):
        return p.w + seed.eps2 - seed.eps1 + C / seed.D(x)

    def w_t(x):
        return p.v + seed.eps1 - seed.eps2 - C / seed.D(x)

    def a_t(x):
        xs = np.asarray(x, dtype=float)
        t1 = np.tanh(seed.z1(xs))
        t2 = np.tanh(seed.z2(xs))
        return p.a - 1j * _offdiag_numerator(seed, t1, t2) / seed.D(xs)

    def limits(sign):
        d_inf = seed.P + (sign * seed.kappa1 + p.eta) * (sign * seed.kappa2 - p.eta)
        if abs(d_inf) < 1e-12:
            return None, None, None
        vt = p.w + seed.eps2 - seed.eps1 + C / d_inf
        wt = p.v + seed.eps1 - seed.eps2 - C / d_inf
        at = p.a - 1j * _offdiag_numerator(seed, sign, sign) / d_inf
        return float(vt), float(wt), complex(at)

    lim_m = limits(-1.0)
    lim_p = limits(+1.0)
    return Transformed2x2(seed=seed, v_t=v_t, w_t=w_t, a_t=a_t,
                          v_t_limits=(lim_m[0], lim_p[0]),
                          w_t_limits=(lim_m[1], lim_p[1]),
                          a_t_limits=(lim_m[2], lim_p[2]),
                          constant=False)


@dataclass(frozen=True)
class BoundState:
    energy: float
    spinor: SpinorField
    norm: float
    density: Callable
    residual: float
    finite_norm: bool


def _missing_field(seed: Seed2x2, which: int) -> SpinorField:
    """Unnormalized bound-state candidate at eps1 (which=1) or eps2."""
    p = seed.params
    eta = p.eta

    def value(x):
        xs = np.asarray(x, dtype=float)
        D = seed.D(xs)
        ph = np.exp(-1j * p.rho * xs)
        out = np.empty(np.shape(xs) + (2,), dtype=complex)
        if which == 1:
            t2 = np.tanh(seed.z2(xs))
            pref = ph / (np.cosh(seed.z1(xs)) * D)
            out[..., 0] = 1.0
            out[..., 1] = 1j * (seed.kappa2 * t2 - eta) / (p.v - seed.eps2)
        else:
            t1 = np.tanh(seed.z1(xs))
            pref = ph / (np.cosh(seed.z2(xs)) * D)
            out[..., 0] = 1j * (eta + seed.kappa1 * t1) / (p.w - seed.eps1)
            out[..., 1] = 1.0
        return pref[..., None] * out

    def derivative(x):
        return central_derivative(value, np.asarray(x, dtype=float), h=1e-4)

    return SpinorField(value=value, derivative=derivative)


def bound_states(seed: Seed2x2, grid: Grid = DEFAULT_GRID) -> list:
    """Normalized bound states of the transformed operator (0, 1 or 2)."""
    if seed.degenerate:
        return []
    trans = transform(seed, grid=grid)
    xs = grid.points()
    interior = grid.interior()
    v_matrix = trans.matrix(interior)
    min_rate = max(0.5 * min(seed.kappa1, seed.kappa2), MIN_DECAY_RATE)
    out = []
    for which, energy in ((1, seed.eps1), (2, seed.eps2)):
        raw = _missing_field(seed, which)
        density_raw = np.sum(np.abs(raw(xs)) ** 2, axis=-1)
        norm = float(np.real(simpson_integrate(density_raw, grid)))
        rate = tail_decay_rate(xs, density_raw)
        finite = bool(rate > min_rate and np.isfinite(norm) and norm > 0)
        if not finite:
            continue
        scale = 1.0 / np.sqrt(norm)
        spinor = SpinorField(
            value=lambda x, raw=raw, scale=scale: scale * raw(x),
            derivative=lambda x, raw=raw, scale=scale: scale * raw.d(x))
        vals = raw(interior)
        res = mat_apply(GAMMA2, raw.d(interior)) + mat_apply(v_matrix, vals) \
            - energy * vals
        residual = sup_norm(res) / max(sup_norm(vals), 1e-300)

        def density(x, raw=raw, norm=norm):
            return np.sum(np.abs(raw(x)) ** 2, axis=-1) / norm

        out.append(BoundState(energy=float(energy), spinor=spinor, norm=norm,
                              density=density, residual=residual,
                              finite_norm=True))
    return out


def chiral_transform(omega3_field, xi1: SpinorField,
                     grid: Grid = DEFAULT_GRID) -> Callable:
    """Diagonal-case transformation of omega3 by a single eigenstate.

    Uses the transpose pairing: omega3_tilde = omega3 + 2 xi^T s2 xi' /
    (xi^T xi).  The caller guarantees xi1 solves the diagonal operator;
    the denominator is scanned for zeros on the grid.
    """
    omega3 = omega3_field if callable(omega3_field) \
        else (lambda x, c=float(omega3_field): np.broadcast_to(c, np.shape(x)).copy())

    def correction(x):
        xs = np.asarray(x, dtype=float)
        xi = np.asarray(xi1(xs))
        dxi = np.asarray(xi1.d(xs)) if hasattr(xi1, "d") \
            else central_derivative(xi1, xs, h=1e-4)
        num = xi[..., 0] * (-1j) * dxi[..., 1] + xi[..., 1] * 1j * dxi[..., 0]
        den = xi[..., 0] ** 2 + xi[..., 1] ** 2
        return num, den

    xs_scan = grid.points()
    _, den = correction(xs_scan)
    xi_scan = np.asarray(xi1(xs_scan))
    # xi grows exponentially, so weigh the bilinear against the local
    # magnitude, never against the global maximum
    amp = np.sum(np.abs(xi_scan) ** 2, axis=-1)
    ratio = np.abs(den) / np.maximum(amp, 1e-300)
    if np.min(ratio) < 1e-12:
        idx = int(np.argmin(ratio))
        raise SingularSeedError("xi^T xi vanishes on the grid",
                                x=float(xs_scan[idx]))

    def omega3_tilde(x):
        xs = np.asarray(x, dtype=float)
        num, den = correction(xs)
        return omega3(xs) + 2.0 * num / den

    return omega3_tilde


@dataclass(frozen=True)
class AsymptoticIntertwiner:
    w_minus: np.ndarray
    w_plus: np.ndarray
    c1: complex
    c2: complex
    c1_t: complex
    c2_t: complex
    D_plus: float
    D_minus: float


def _kernel_limit(seed: Seed2x2, sign: int) -> np.ndarray:
    p = seed.params
    k1, k2, eta, rho = seed.kappa1, seed.kappa2, p.eta, p.rho
    d_inf = seed.P + (sign * k1 + eta) * (sign * k2 - eta)
    A = eta * k2 * (k2 - k1)
    B = k1 * (seed.P + k2 ** 2) - eta ** 2 * k2
    A_t = eta * k1 * (k2 - k1)
    B_t = k2 * (seed.P + k1 ** 2) - eta ** 2 * k1
    off = k2 ** 2 + sign * eta * k1 - sign * eta * k2 - k1 * k2
    off_t = k1 ** 2 + sign * eta * k1 - sign * eta * k2 - k1 * k2
    W = np.array([
        [A + sign * B, 1j * (p.w - seed.eps1) * off],
        [1j * (p.v - seed.eps2) * off_t, A_t + sign * B_t],
    ], dtype=complex) / d_inf
    return -1j * rho * np.eye(2) + W


def asymptotics(seed: Seed2x2) -> AsymptoticIntertwiner:
    """x -> +-inf limits of the intertwiner kernel, in closed form.

    Degenerate seeds have an x-independent kernel, so both limits equal
    its value anywhere; the closed-form denominators D+- vanish there and
    are reported as 0.  A vanishing D+- on a non-degenerate seed has no
    finite limit and is refused.
    """
    p = seed.params
    k1, k2, eta, rho = seed.kappa1, seed.kappa2, p.eta, p.rho
    c1 = eta ** 2 * rho - 1j * eta * k2 ** 2 - rho * seed.P
    c2 = 1j * eta * rho + k2 ** 2 + seed.P
    c1_t = eta ** 2 * rho + 1j * eta * k1 ** 2 - rho * seed.P
    c2_t = -1j * eta * rho + k1 ** 2 + seed.P
    d_plus = seed.P + (k1 + eta) * (k2 - eta)
    d_minus = seed.P + (-k1 + eta) * (-k2 - eta)

    if seed.degenerate:
        K0 = seed.matrix_derivative(np.zeros(1))[0] \
            @ np.linalg.inv(seed.matrix(np.zeros(1))[0])
        return AsymptoticIntertwiner(w_minus=K0, w_plus=K0.copy(),
                                     c1=complex(c1), c2=complex(c2),
                                     c1_t=complex(c1_t), c2_t=complex(c2_t),
                                     D_plus=float(d_plus),
                                     D_minus=float(d_minus))

    scale = max(1.0, abs(seed.P), k1 * k2)
    if abs(d_plus) < 1e-12 * scale or abs(d_minus) < 1e-12 * scale:
        raise DegenerateAsymptoticsError(
            f"asymptotic denominator vanishes (D+ = {d_plus:.3e}, "
            f"D- = {d_minus:.3e}); the kernel has no finite limit")
    return AsymptoticIntertwiner(w_minus=_kernel_limit(seed, -1),
                                 w_plus=_kernel_limit(seed, +1),
                                 c1=complex(c1), c2=complex(c2),
                                 c1_t=complex(c1_t), c2_t=complex(c2_t),
                                 D_plus=float(d_plus), D_minus=float(d_minus))

"""Constant-potential 2x2 Dirac Hamiltonian and its complete solution set.

The operator is h = -i s1 d/dx + [[v, a], [conj(a), w]].  For every energy
the second-order reduction has solutions built from cosh/sinh of
z = kappa_E x + shift, with kappa_E^2 = (Im a)^2 - (v - E)(w - E).  Inside
the band (eps_minus, eps_plus) kappa_E is real and the solutions grow
exponentially; outside it they oscillate and scatter.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (InvalidInputError, NotScatteringEnergyError,
                     PoleInFormulaError)
from .numerics import GAMMA2, constant_field, mat_apply

_POLE_TOL = 1e-12


@dataclass(frozen=True)
class FreeParams:
    """Constant potential entries of the free 2x2 operator."""

    v: float
    w: float
    a: complex = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.v) and np.isfinite(self.w)
                and np.isfinite(complex(self.a))):
            raise InvalidInputError("potential entries must be finite")

    @property
    def rho(self) -> float:
        return complex(self.a).real

    @property
    def eta(self) -> float:
        return complex(self.a).imag

    def potential(self) -> np.ndarray:
        return np.array([[self.v, self.a],
                         [np.conj(self.a), self.w]], dtype=complex)

    def potential_field(self):
        return constant_field(self.potential())


@dataclass(frozen=True)
class Band:
    eps_minus: float
    eps_plus: float

    def contains(self, energy: float) -> bool:
        return self.eps_minus < energy < self.eps_plus


@dataclass(frozen=True)
class SpinorField:
    """Spinor-valued function with an analytic derivative attached.

    A field built without one falls back to a five-point stencil with
    step 1e-4.
    """

    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x) -> np.ndarray:
        return self.value(np.asarray(x, dtype=float))

    def d(self, x) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        if self.derivative is None:
            from .numerics import central_derivative
            return central_derivative(self.value, xs, h=1e-4)
        return self.derivative(xs)


@dataclass(frozen=True)
class SolutionPair:
    psi: SpinorField
    psi_bar: SpinorField
    energy: float
    kappa: complex
    delta: complex


def band_edges(p: FreeParams) -> Band:
    mid = (p.v + p.w) / 2.0
    half = np.sqrt((p.v - p.w) ** 2 / 4.0 + p.eta ** 2)
    return Band(float(mid - half), float(mid + half))


def kappa(E: float, p: FreeParams) -> complex:
    """Principal branch: real >= 0 inside the band, i*R+ outside."""
    ksq = p.eta ** 2 - (p.v - E) * (p.w - E)
    if ksq >= 0:
        return complex(np.sqrt(ksq))
    return 1j * complex(np.sqrt(-ksq))


def closed_solution(p: FreeParams, E: float, z_shift: complex,
                    family: str) -> SpinorField:
    """One fundamental solution with z = kappa_E x + z_shift.

    family "psi" carries the pole at E = w, family "psi_bar" at E = v.
    Both include the common phase exp(-i Re(a) x).
    """
    k = kappa(E, p)
    rho, eta = p.rho, p.eta
    if family == "psi":
        if abs(p.w - E) < _POLE_TOL:
            raise PoleInFormulaError("psi family undefined at E = w")
        den = p.w - E
    elif family == "psi_bar":
        if abs(p.v - E) < _POLE_TOL:
            raise PoleInFormulaError("psi_bar family undefined at E = v")
        den = p.v - E
    else:
        raise InvalidInputError(f"unknown solution family {family!r}")

    def value(x):
        z = k * x + z_shift
        ph = np.exp(-1j * rho * x)
        out = np.empty(np.shape(x) + (2,), dtype=complex)
        if family == "psi":
            out[..., 0] = np.cosh(z)
            out[..., 1] = 1j * (eta * np.cosh(z) + k * np.sinh(z)) / den
        else:
            out[..., 0] = 1j * (-eta * np.cosh(z) + k * np.sinh(z)) / den
            out[..., 1] = np.cosh(z)
        return ph[..., None] * out

    def derivative(x):
        z = k * x + z_shift
        ph = np.exp(-1j * rho * x)
        d = np.empty(np.shape(x) + (2,), dtype=complex)
        if family == "psi":
            d[..., 0] = k * np.sinh(z)
            d[..., 1] = 1j * (eta * k * np.sinh(z) + k ** 2 * np.cosh(z)) / den
        else:
            d[..., 0] = 1j * (-eta * k * np.sinh(z) + k ** 2 * np.cosh(z)) / den
            d[..., 1] = k * np.sinh(z)
        return ph[..., None] * d - 1j * rho * value(x)

    return SpinorField(value=value, derivative=derivative)


def fundamental_solutions(E: float, p: FreeParams,
                          delta: complex = 0.0) -> SolutionPair:
    """Both fundamental families, translated as x -> x + delta.

    The translation is a genuine argument shift, so
    fundamental_solutions(E, p, d)(x) == fundamental_solutions(E, p, 0)(x+d).
    """
    if abs(p.w - E) < _POLE_TOL or abs(p.v - E) < _POLE_TOL:
        raise PoleInFormulaError(
            "fundamental solutions undefined at E equal to v or w")
    k = kappa(E, p)
    delta = complex(delta)
    # An x-shift moves z by kappa*delta and multiplies by the shifted phase.
    pref = np.exp(-1j * p.rho * delta)
    base = closed_solution(p, E, k * delta, "psi")
    base_bar = closed_solution(p, E, k * delta, "psi_bar")
    psi = SpinorField(value=lambda x: pref * base.value(x),
                      derivative=lambda x: pref * base.derivative(x))
    psi_bar = SpinorField(value=lambda x: pref * base_bar.value(x),
                          derivative=lambda x: pref * base_bar.derivative(x))
    return SolutionPair(psi=psi, psi_bar=psi_bar, energy=float(E),
                        kappa=k, delta=delta)


def plane_wave_channels(potential: np.ndarray, E: float,
                        gamma: np.ndarray | None = None):
    """Propagating channels of a constant-potential operator at energy E.

    Solves the algebraic problem (ik*gamma + V - E)u = 0 by diagonalizing
    gamma^-1 (E - V).  Each channel is flux-normalized with the conserved
    current u^dag (i gamma) u and phase-fixed so its first sizable
    component is real positive.  Returns (k, u, j) triples, right-movers
    (j > 0) first, each group sorted by descending momentum.
    """
    V = np.asarray(potential, dtype=complex)
    g = GAMMA2 if gamma is None else np.asarray(gamma, dtype=complex)
    dim = V.shape[0]
    F = np.linalg.inv(g) @ (E * np.eye(dim) - V)
    lam, vecs = np.linalg.eig(F)
    current_matrix = 1j * g
    out = []
    for i in range(dim):
        if abs(lam[i].real) > 1e-8:
            continue
        k = float(lam[i].imag)
        u = vecs[:, i]
        j = float(np.real(np.conj(u) @ current_matrix @ u))
        if abs(j) < 1e-12:
            continue
        u = u / np.sqrt(abs(j))
        lead = int(np.flatnonzero(np.abs(u) > 1e-12)[0])
        u = u * (np.abs(u[lead]) / u[lead])
        j = float(np.real(np.conj(u) @ current_matrix @ u))
        out.append((k, u, j))
    right = sorted([c for c in out if c[2] > 0], key=lambda c: -c[0])
    left = sorted([c for c in out if c[2] < 0], key=lambda c: -c[0])
    return right, left


def scattering_state(E: float, p: FreeParams, direction: int) -> SpinorField:
    """Plane-wave eigensolution outside the band, exact by construction.

    direction +1 selects the channel with positive conserved current,
    -1 the negative one.
    """
    if direction not in (+1, -1):
        raise InvalidInputError("direction must be +1 or -1")
    band = band_edges(p)
    if band.eps_minus <= E <= band.eps_plus:
        raise NotScatteringEnergyError(
            f"E = {E} lies in the band [{band.eps_minus}, {band.eps_plus}]")
    right, left = plane_wave_channels(p.potential(), E)
    if not right or not left:
        raise NotScatteringEnergyError(
            f"no propagating channel pair at E = {E}")
    k, u, _ = right[0] if direction == +1 else left[0]
    u = u / np.linalg.norm(u)

    def value(x):
        return np.exp(1j * k * x)[..., None] * u

    def derivative(x):
        return 1j * k * value(x)

    return SpinorField(value=value, derivative=derivative)


def free_operator(p: FreeParams):
    """The constant-potential 2x2 Dirac operator for these parameters."""
    from .engine import make_operator

    return make_operator(GAMMA2, p.potential_field())


def eigen_residual(p: FreeParams, field: SpinorField, E: float,
                   xs: np.ndarray) -> float:
    """sup |(h - E) psi| / sup |psi| using the analytic derivative."""
    vals = field(xs)
    lhs = mat_apply(GAMMA2[None], field.d(xs)) \
        + mat_apply(p.potential()[None], vals)
    denom = max(1.0, float(np.max(np.abs(vals))))
    return float(np.max(np.abs(lhs - E * vals))) / denom

"""Exact and asymptotic mean escape times for the radial double well.

The exact mean escape time from the origin well to a threshold xi is a
double integral obtained by solving the one-dimensional Poisson problem for
the first-passage time of the radial SDE.  This module evaluates that
integral by nested adaptive quadrature and provides the ladder of
approximations around it:

* rigorous lower/upper bounds (one-dimensional integrals),
* Laplace (small-alpha) asymptotics of those bounds,
* the classical one-dimensional Kramers law,
* the multidimensional Eyring-Kramers law over a nondegenerate saddle,
* the Bessel-corrected law for a saddle undergoing a pitchfork bifurcation,
* the strong/weak coupling limit values for a pair of nodes, and the affine
  calibration mapping Kramers values onto exact ones.

Exponents are validated before quadrature: rather than silently returning
inf, methods refuse when the integrand would overflow and point at the
asymptotic estimates instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import iv, jv, kv

from .model import (
    CriticalPoint2D,
    NodeParams,
    potential_1d,
    potential_1d_d2,
    radial_equilibria,
)

__all__ = [
    "EscapeEstimate",
    "SaddleData",
    "OverflowRiskError",
    "mean_escape_quadrature",
    "escape_bounds",
    "laplace_bounds",
    "kramers_1d",
    "eyring_kramers_2d",
    "bg_pitchfork",
    "psi_plus_printed",
    "psi_minus_printed",
    "psi_plus_bessel",
    "psi_minus_bessel",
    "coupling_limits",
    "calibrate_AB",
]

MAX_EXPONENT = 700.0
QUAD_RTOL = 1e-8
QUAD_ATOL = 1e-12


class OverflowRiskError(ValueError):
    """Raised when a quadrature exponent would overflow double precision."""


@dataclass(frozen=True)
class EscapeEstimate:
    """A mean escape time together with the method that produced it.

    ``method`` is one of quadrature | lower | upper | laplace_lower |
    laplace_upper | kramers1d | ek_nd | bg_pitchfork | limit.  ``meta``
    carries method-specific diagnostics such as quadrature error estimates
    or the Hessian eigenvalues used.
    """

    value: float
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.value > 0):
            raise ValueError(f"escape estimate must be positive, got {self.value}")


@dataclass(frozen=True)
class SaddleData:
    """Saddle-point quantities feeding an Eyring-Kramers evaluation."""

    location: tuple[float, float]
    barrier: float
    unstable_eig: float
    stable_eigs: tuple[float, ...]
    det_min: float

    def __post_init__(self) -> None:
        if not (self.barrier > 0):
            raise ValueError("barrier must be > 0")
        if not (self.unstable_eig < 0):
            raise ValueError("unstable eigenvalue must be < 0")
        if not (self.det_min > 0):
            raise ValueError("Hessian determinant at the minimum must be > 0")


def _exponent_1node(x, y, nu):
    return nu * (x * x - y * y) + (y**4 - x**4) + (x**6 - y**6) / 3.0


def _max_exponent_1node(nu: float, alpha: float, xi: float) -> float:
    # The exponent is 2(Vt(x) - Vt(y))/alpha^2 with Vt the alpha=0 potential;
    # max over the triangle 0<y<x<xi is at the gate radius in x, origin in y.
    x = np.linspace(1e-9, xi, 512)
    vt = nu * x**2 / 2.0 - x**4 / 2.0 + x**6 / 6.0
    return float(2.0 * (vt.max() - min(vt.min(), 0.0)) / alpha**2)


def mean_escape_quadrature(nu: float, alpha: float, xi: float) -> EscapeEstimate:
    """Exact mean escape time from the origin to threshold xi.

    Evaluates

        T(nu, alpha) = 2/alpha^2 * int_0^xi int_0^x (y/x)
                       exp[(nu(x^2-y^2) + (y^4-x^4) + (x^6-y^6)/3)/alpha^2] dy dx

    by adaptive Gauss-Kronrod quadrature on the outer integral with an inner
    adaptive pass per abscissa, relative tolerance 1e-8.  The integrand is
    bounded (y/x <= 1 times the exponential of a bounded exponent); if the
    exponent could exceed 700 the method refuses and suggests the Laplace or
    Kramers estimates.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if xi <= 0:
        raise ValueError("xi must be > 0")
    mx = _max_exponent_1node(nu, alpha, xi)
    if mx > MAX_EXPONENT:
        raise OverflowRiskError(
            f"exponent reaches {mx:.1f} > {MAX_EXPONENT:.0f}; "
            "use laplace_bounds or kramers_1d instead"
        )
    a2 = alpha * alpha

    def outer(x: float) -> float:
        inner = lambda y: y * math.exp(_exponent_1node(x, y, nu) / a2)
        val, _ = integrate.quad(inner, 0.0, x, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL / 10, limit=200)
        return val / x

    val, err = integrate.quad(outer, 0.0, xi, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=200)
    T = 2.0 / a2 * val
    est_err = 2.0 / a2 * err
    if est_err > max(QUAD_RTOL * abs(T), QUAD_ATOL) * 10:
        raise RuntimeError(f"quadrature error estimate {est_err:.2e} too large for T={T:.6g}")
    return EscapeEstimate(T, "quadrature", {"abserr": est_err, "max_exponent": mx})


def _expm1_over(s):
    """(e^s - 1)/s with the removable singularity handled by series."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-4
    safe = np.where(small, 1.0, s)
    out = np.where(small, 1.0 + s / 2.0 + s * s / 6.0, np.expm1(safe) / safe)
    return out[()] if out.ndim == 0 else out


def escape_bounds(nu: float, alpha: float, xi: float) -> tuple[EscapeEstimate, EscapeEstimate]:
    """Rigorous lower and upper bounds on the exact mean escape time.

    T_l = int_0^{xi^2} (e^{q(nu-q+q^2/4)/a^2} - 1) / (4q(nu-q+q^2/4)) dq
    T_u = int_0^{2xi^2} (e^{q(nu-q+q^2/3)/a^2} - 1) / (2q(nu-q+q^2/3)) dq

    Each integrand extends continuously across the zeros of its denominator
    via the (e^s - 1)/s form, so both integrals are finite for any bistable
    parameters.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if xi <= 0:
        raise ValueError("xi must be > 0")
    a2 = alpha * alpha

    def check(qhi, poly):
        q = np.linspace(0.0, qhi, 512)
        mx = float(np.max(q * poly(q)) / a2)
        if mx > MAX_EXPONENT:
            raise OverflowRiskError(
                f"exponent reaches {mx:.1f} > {MAX_EXPONENT:.0f}; "
                "use laplace_bounds instead"
            )

    pl = lambda q: nu - q + q * q / 4.0
    pu = lambda q: nu - q + q * q / 3.0
    check(xi * xi, pl)
    check(2.0 * xi * xi, pu)

    fl = lambda q: _expm1_over(q * pl(q) / a2) / (4.0 * a2)
    fu = lambda q: _expm1_over(q * pu(q) / a2) / (2.0 * a2)
    lo, elo = integrate.quad(fl, 0.0, xi * xi, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=400)
    hi, ehi = integrate.quad(fu, 0.0, 2.0 * xi * xi, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL, limit=400)
    return (
        EscapeEstimate(lo, "lower", {"abserr": elo}),
        EscapeEstimate(hi, "upper", {"abserr": ehi}),
    )


def laplace_bounds(nu: float, alpha: float, xi: float) -> tuple[EscapeEstimate, EscapeEstimate]:
    """Small-alpha Laplace asymptotics of the two escape-time bounds.

    With g_l(q) = q(-nu + q - q^2/4) and g_u(q) = q(-nu + q - q^2/3), the
    interior minima are at c_l = (4 - 2 sqrt(4 - 3 nu))/3 and
    c_u = 1 - sqrt(1 - nu), and each bound behaves like
    f(c) sqrt(2 pi alpha^2 / |g''(c)|) exp(-g(c)/alpha^2).

    Accuracy requires the Gaussian peak to sit well inside the integration
    window; c_l must lie below xi^2 and c_u below 2 xi^2 (checked), and the
    estimate degrades when the peak is within one Gaussian width of the
    endpoint (as happens for the lower bound at xi near the gate radius).
    """
    if not (0.0 < nu < 1.0):
        raise ValueError("laplace bounds require 0 < nu < 1")
    cl = (4.0 - 2.0 * np.sqrt(4.0 - 3.0 * nu)) / 3.0
    cu = 1.0 - np.sqrt(1.0 - nu)
    if not (cl < xi * xi and cu < 2.0 * xi * xi):
        raise ValueError(
            f"interior-minimum precondition violated: need c_l={cl:.6f} < xi^2 "
            f"and c_u={cu:.6f} < 2 xi^2 for xi={xi}"
        )
    a2 = alpha * alpha
    fl = 1.0 / (4.0 * cl * (nu - cl + cl * cl / 4.0))
    fu = 1.0 / (2.0 * cu * (nu - cu + cu * cu / 3.0))
    gl = cl * (-nu + cl - cl * cl / 4.0)
    gu = cu * (-nu + cu - cu * cu / 3.0)
    glpp = 2.0 - 1.5 * cl
    gupp = 2.0 - 2.0 * cu
    lo = fl * np.sqrt(2.0 * np.pi * a2 / abs(glpp)) * np.exp(-gl / a2)
    hi = fu * np.sqrt(2.0 * np.pi * a2 / abs(gupp)) * np.exp(-gu / a2)
    meta_l = {"c": cl, "g": gl, "gpp": glpp}
    meta_u = {"c": cu, "g": gu, "gpp": gupp}
    return (
        EscapeEstimate(float(lo), "laplace_lower", meta_l),
        EscapeEstimate(float(hi), "laplace_upper", meta_u),
    )


def kramers_1d(nu: float, alpha: float, xi: float | None = None) -> EscapeEstimate:
    """Classical one-dimensional Kramers escape time over the radial gate.

    T_K = 2 pi / sqrt(|V''(R_c)| V''(R_min)) * exp[2 (V(R_c) - V(R_min)) / alpha^2]

    with R_min, R_c the alpha-dependent equilibria of the full radial
    potential (log term included).  Independent of the threshold xi, which
    is accepted only for interface symmetry with the exact quadrature.
    """
    p = NodeParams(nu=nu, alpha=alpha)
    eq = radial_equilibria(p)
    if eq.count() != 3:
        raise ValueError(f"not bistable at nu={nu}, alpha={alpha}: {eq.count()} critical points")
    d2min = potential_1d_d2(eq.r_min, p)
    d2c = potential_1d_d2(eq.r_c, p)
    barrier = potential_1d(eq.r_c, p) - potential_1d(eq.r_min, p)
    expo = 2.0 * barrier / alpha**2
    if expo > MAX_EXPONENT:
        raise OverflowRiskError(f"Kramers exponent {expo:.1f} overflows double precision")
    T = 2.0 * np.pi / np.sqrt(abs(d2c) * d2min) * np.exp(expo)
    return EscapeEstimate(
        float(T), "kramers1d",
        {"r_min": eq.r_min, "r_c": eq.r_c, "barrier": barrier, "d2_min": d2min, "d2_c": d2c},
    )


DEGENERATE_EIG = 1e-6


def _require_sink_and_saddle(minimum: CriticalPoint2D, saddle: CriticalPoint2D) -> None:
    if minimum.kind != "sink":
        raise ValueError(f"expected a sink, got {minimum.kind}")
    negs = sum(e < 0 for e in saddle.eigenvalues)
    if negs != 1:
        raise ValueError(f"saddle must have exactly one negative eigenvalue, got {saddle.eigenvalues}")


def eyring_kramers_2d(minimum: CriticalPoint2D, saddle: CriticalPoint2D, alpha: float) -> EscapeEstimate:
    """Multidimensional Eyring-Kramers time over a single nondegenerate saddle.

    T = 2 pi / |lambda_1| * sqrt(|det H(saddle)| / det H(min)) * e^{dV/eps},
    eps = alpha^2 / 2, with lambda_1 the single negative Hessian eigenvalue
    at the saddle.  When several saddles gate the same well, combine the
    per-saddle times by rate addition (1/T_total = sum 1/T_i).

    Refuses near-degenerate saddles (|lambda_1| < 1e-6), where the transverse
    curvature collapses and the pitchfork-corrected law applies instead.
    """
    _require_sink_and_saddle(minimum, saddle)
    lam1 = min(saddle.eigenvalues)
    if min(abs(e) for e in saddle.eigenvalues) < DEGENERATE_EIG:
        raise ValueError("saddle near bifurcation; use bg_pitchfork")
    eps = alpha**2 / 2.0
    barrier = saddle.value - minimum.value
    if barrier <= 0:
        raise ValueError(f"barrier must be positive, got {barrier}")
    det_sad = saddle.eigenvalues[0] * saddle.eigenvalues[1]
    det_min = minimum.eigenvalues[0] * minimum.eigenvalues[1]
    if det_min <= 0:
        raise ValueError("minimum Hessian must be positive definite")
    expo = barrier / eps
    if expo > MAX_EXPONENT:
        raise OverflowRiskError(f"exponent {expo:.1f} overflows double precision")
    T = 2.0 * np.pi / abs(lam1) * np.sqrt(abs(det_sad) / det_min) * np.exp(expo)
    return EscapeEstimate(
        float(T), "ek_nd",
        {"barrier": barrier, "lambda1": lam1, "det_saddle": det_sad, "det_min": det_min},
    )


def psi_plus_printed(gamma: float, alpha: float) -> float:
    """Pitchfork correction factor above the bifurcation, as printed in the
    source derivation: sqrt(gamma(1+gamma)/(8 pi)) e^{a} J_{1/4}(a) with the
    inner argument frozen at a = alpha^2/16."""
    a = alpha**2 / 16.0
    return float(np.sqrt(gamma * (1.0 + gamma) / (8.0 * np.pi)) * np.exp(a) * jv(0.25, a))


def psi_minus_printed(gamma: float, alpha: float) -> float:
    """Pitchfork correction factor below the bifurcation, printed form:
    sqrt(pi gamma(1+gamma)/32) e^{-a} [I_{-1/4}(a) + I_{1/4}(a)] with the
    inner argument frozen at a = alpha^2/64."""
    a = alpha**2 / 64.0
    return float(
        np.sqrt(np.pi * gamma * (1.0 + gamma) / 32.0) * np.exp(-a) * (iv(-0.25, a) + iv(0.25, a))
    )


def psi_plus_bessel(gamma: float, alpha: float) -> float:
    """Correction factor above the bifurcation with the inner argument tied
    to gamma (a = gamma^2/16) and the modified Bessel function K_{1/4}.

    This variant tends to 1 for gamma -> inf and to a finite constant
    ~0.8600 for gamma -> 0, making the two branches of the corrected law
    meet continuously at the bifurcation.
    """
    a = gamma**2 / 16.0
    return float(np.sqrt(gamma * (1.0 + gamma) / (8.0 * np.pi)) * np.exp(a) * kv(0.25, a))


def psi_minus_bessel(gamma: float, alpha: float) -> float:
    """Correction factor below the bifurcation with the inner argument tied
    to gamma (a = gamma^2/64).

    Tends to 2 for gamma -> inf (both symmetric saddles carry escape flux)
    and to the same ~0.8600 constant as :func:`psi_plus_bessel` at gamma -> 0.
    """
    a = gamma**2 / 64.0
    return float(
        np.sqrt(np.pi * gamma * (1.0 + gamma) / 32.0) * np.exp(-a) * (iv(-0.25, a) + iv(0.25, a))
    )


_PSI_FORMS: dict[str, tuple[Callable, Callable]] = {
    "printed": (psi_plus_printed, psi_minus_printed),
    "bessel-gamma": (psi_plus_bessel, psi_minus_bessel),
}


def bg_pitchfork(
    minimum: CriticalPoint2D,
    saddles: list[CriticalPoint2D] | tuple[CriticalPoint2D, ...],
    alpha: float,
    c4: float,
    psi_form: str | tuple[Callable, Callable] = "printed",
) -> EscapeEstimate:
    """Escape time over a saddle that passes through a pitchfork bifurcation.

    Below the bifurcation, pass the two symmetric saddles (their data agree
    by symmetry); above, the single saddle:

      below:  2 pi sqrt((mu_2 + s)/(|mu_1| det H(min))) e^{dV/eps} / psi_minus(mu_2/s)
      above:  2 pi sqrt((lam_2 + s)/(|lam_1| det H(min))) e^{dV/eps} / psi_plus(lam_2/s)

    with s = sqrt(2 eps c4), eps = alpha^2/2, and c4 > 0 the effective
    quartic coefficient transverse to the saddle.  The error terms of the
    underlying asymptotics are set to zero.

    ``psi_form`` selects the correction factors: "printed" uses the forms
    with the inner Bessel argument frozen at alpha^2/16 and alpha^2/64
    exactly as printed in the source derivation; "bessel-gamma" ties the
    argument to gamma, which restores continuity across the bifurcation.
    A custom (psi_plus, psi_minus) pair may be supplied instead.
    """
    if c4 <= 0:
        raise ValueError(f"c4 must be > 0, got {c4}")
    if isinstance(psi_form, str):
        try:
            psi_plus, psi_minus = _PSI_FORMS[psi_form]
        except KeyError:
            raise ValueError(f"unknown psi_form {psi_form!r}; options {sorted(_PSI_FORMS)}") from None
    else:
        psi_plus, psi_minus = psi_form
    if minimum.kind != "sink":
        raise ValueError("expected a sink as the escape-origin minimum")
    saddles = list(saddles)
    if len(saddles) not in (1, 2):
        raise ValueError("supply one saddle (above the bifurcation) or two (below)")
    sad = saddles[0]
    eigs = sorted(sad.eigenvalues)
    lam1, lam2 = eigs
    if not (lam1 < 0 < lam2):
        raise ValueError(f"saddle eigenvalues must straddle zero, got {sad.eigenvalues}")
    eps = alpha**2 / 2.0
    s = np.sqrt(2.0 * eps * c4)
    gamma = lam2 / s
    det_min = minimum.eigenvalues[0] * minimum.eigenvalues[1]
    barrier = sad.value - minimum.value
    if barrier <= 0:
        raise ValueError(f"barrier must be positive, got {barrier}")
    psi = psi_minus(gamma, alpha) if len(saddles) == 2 else psi_plus(gamma, alpha)
    T = 2.0 * np.pi * np.sqrt((lam2 + s) / (abs(lam1) * det_min)) * np.exp(barrier / eps) / psi
    return EscapeEstimate(
        float(T), "bg_pitchfork",
        {"gamma": float(gamma), "psi": float(psi), "barrier": barrier,
         "branch": "below" if len(saddles) == 2 else "above"},
    )


def coupling_limits(nu: float, alpha: float, xi: float) -> dict[str, EscapeEstimate]:
    """Limit values of the two-node first and second escape times.

    * ``sync``          strong bidirectional coupling: the pair acts as one
                        node with attenuated noise, T(nu, alpha/sqrt(2)).
    * ``first_of_two``  uncoupled first escape, T(nu, alpha)/2.
    * ``single``        uncoupled second escape, T(nu, alpha).
    * ``uni_first``     strong unidirectional coupling: rate sum of driver
                        and driven escapes, harmonic combination of
                        ``single`` and ``sync``.
    """
    T = mean_escape_quadrature(nu, alpha, xi)
    Ts = mean_escape_quadrature(nu, alpha / np.sqrt(2.0), xi)
    uni = T.value * Ts.value / (T.value + Ts.value)
    return {
        "sync": EscapeEstimate(Ts.value, "limit", {"definition": "T(nu, alpha/sqrt2)"}),
        "first_of_two": EscapeEstimate(T.value / 2.0, "limit", {"definition": "T(nu, alpha)/2"}),
        "single": EscapeEstimate(T.value, "limit", {"definition": "T(nu, alpha)"}),
        "uni_first": EscapeEstimate(uni, "limit", {"definition": "harmonic(T, T_sync)"}),
    }


def calibrate_AB(nu: float, alpha: float, xi: float = 0.5) -> tuple[float, float]:
    """Affine calibration T ~ A*T_K + B anchored at noise levels alpha and
    alpha/sqrt(2).

    Solves the 2x2 linear system

        T(nu, alpha)         = A T_K(nu, alpha)         + B
        T(nu, alpha/sqrt(2)) = A T_K(nu, alpha/sqrt(2)) + B

    with exact quadrature values on the left, so A and B are independent of
    any coupling strength by construction.
    """
    a1, a2 = alpha, alpha / np.sqrt(2.0)
    if NodeParams(nu=nu, alpha=a1).bistable_radial() is False:
        raise ValueError(f"(nu={nu}, alpha={a1}) outside the bistable region")
    if NodeParams(nu=nu, alpha=a2).bistable_radial() is False:
        raise ValueError(f"(nu={nu}, alpha={a2}) outside the bistable region")
    T1 = mean_escape_quadrature(nu, a1, xi).value
    T2 = mean_escape_quadrature(nu, a2, xi).value
    K1 = kramers_1d(nu, a1).value
    K2 = kramers_1d(nu, a2).value
    denom = K1 - K2
    if abs(denom) < 1e-12 * max(abs(K1), abs(K2)):
        raise ValueError("degenerate calibration system: equal Kramers values")
    A = (T1 - T2) / denom
    B = T1 - A * K1
    return float(A), float(B)

"""Deterministic skeleton of the bistable-node network.

A single node is a planar system with a stable equilibrium at the origin
coexisting with a stable limit cycle for 0 < nu < 1.  Its radial dynamics
reduce to gradient descent on a one-dimensional double-well potential whose
inner well sits at the origin (regularised by a noise-induced logarithmic
term for alpha > 0).  This module provides the drifts, potentials,
derivatives, equilibrium locators and the saddle-node locus in the
(nu, alpha) parameter plane, plus the two-node coupled potential with its
analytic gradient and Hessian.

All functions are pure and accept scalars or numpy arrays where sensible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

__all__ = [
    "NodeParams",
    "NetworkSpec",
    "RadialEquilibria",
    "CriticalPoint2D",
    "complex_drift",
    "radial_drift",
    "potential_1d",
    "potential_1d_d1",
    "potential_1d_d2",
    "radial_equilibria",
    "saddle_node_residual",
    "saddle_node_alpha",
    "potential_2node",
    "grad_hess_2node",
    "network_drift",
]

GRAD_TOL = 1e-10
ROOT_XTOL = 1e-12


@dataclass(frozen=True)
class NodeParams:
    """Single-node physics: excitability, angular frequency, noise amplitude.

    For 0 < nu < 1 the noise-free node is bistable: a stable equilibrium at
    the origin and a stable limit cycle, separated by an unstable cycle.
    ``alpha`` is the additive noise amplitude per real state component.
    """

    nu: float
    omega: float = 0.0
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    def bistable_radial(self) -> bool:
        """True iff the radial potential has exactly three positive critical points."""
        eq = radial_equilibria(self)
        return eq.count() == 3


@dataclass(frozen=True)
class NetworkSpec:
    """Network topology: node count, binary adjacency, coupling strength.

    ``adjacency[j, i] == 1`` means node j influences node i: node i's drift
    gains a term ``beta * (z_j - z_i)``.  The diagonal must be zero.
    """

    n: int
    adjacency: np.ndarray
    beta: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        a = np.asarray(self.adjacency, dtype=float)
        if a.shape != (self.n, self.n):
            raise ValueError(f"adjacency must be {self.n}x{self.n}, got {a.shape}")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero")
        if not np.all(np.isin(a, (0.0, 1.0))):
            raise ValueError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def pair(cls, kind: str, beta: float) -> "NetworkSpec":
        """Two-node topologies: 'bidirectional', 'unidirectional' (node 1 drives
        node 2), or 'disconnected'."""
        mats = {
            "bidirectional": [[0, 1], [1, 0]],
            "unidirectional": [[0, 1], [0, 0]],
            "disconnected": [[0, 0], [0, 0]],
        }
        try:
            a = mats[kind]
        except KeyError:
            raise ValueError(f"unknown pair topology {kind!r}") from None
        return cls(n=2, adjacency=np.array(a, dtype=float), beta=beta)


@dataclass(frozen=True)
class RadialEquilibria:
    """Positive critical points of the radial potential, ordered
    r_min < r_c < r_max when all three exist.

    ``r_c`` is the potential maximum forming the gate between the quiescent
    basin (around r_min) and the active basin (around r_max).  Absent roots
    are None.  For alpha = 0 the inner equilibrium is reported as the limit
    root r_min = 0.
    """

    r_min: float | None = None
    r_c: float | None = None
    r_max: float | None = None

    def count(self) -> int:
        return sum(r is not None for r in (self.r_min, self.r_c, self.r_max))


@dataclass(frozen=True)
class CriticalPoint2D:
    """Critical point of the two-node potential at phase difference zero.

    ``kind`` follows the potential Hessian: 'sink' both eigenvalues > 0,
    'saddle' mixed signs, 'source' both < 0.
    """

    position: tuple[float, float]
    phi: float
    value: float
    eigenvalues: tuple[float, float]
    kind: str
    eigenvectors: np.ndarray = field(default=None, repr=False, compare=False)


def complex_drift(z: complex | np.ndarray, p: NodeParams) -> complex | np.ndarray:
    """Deterministic velocity of a single node in the complex plane.

    f(z) = (-nu + i*omega) z + 2 z |z|^2 - z |z|^4.

    The linear coefficient -nu makes the origin attracting for nu > 0,
    consistent with the radial potential below (the radial part of f is
    exactly -d/dR of the alpha = 0 potential).
    """
    z = np.asarray(z) if isinstance(z, np.ndarray) else z
    a2 = np.abs(z) ** 2
    return (-p.nu + 1j * p.omega) * z + (2.0 * a2 - a2 * a2) * z


def potential_1d(R, p: NodeParams):
    """Radial potential nu R^2/2 - R^4/2 + R^6/6 - (alpha^2/2) ln R.

    The logarithmic term (absent exactly when alpha = 0) is the Ito
    correction from writing the planar noise in polar coordinates; it walls
    off R = 0.  Requires R > 0.
    """
    R = np.asarray(R, dtype=float)
    _require_positive_radius(R)
    V = p.nu * R**2 / 2.0 - R**4 / 2.0 + R**6 / 6.0
    if p.alpha != 0.0:
        V = V - 0.5 * p.alpha**2 * np.log(R)
    return V[()] if V.ndim == 0 else V


def potential_1d_d1(R, p: NodeParams):
    """First derivative of the radial potential."""
    R = np.asarray(R, dtype=float)
    _require_positive_radius(R)
    d = p.nu * R - 2.0 * R**3 + R**5
    if p.alpha != 0.0:
        d = d - 0.5 * p.alpha**2 / R
    return d[()] if d.ndim == 0 else d


def potential_1d_d2(R, p: NodeParams):
    """Second derivative of the radial potential."""
    R = np.asarray(R, dtype=float)
    _require_positive_radius(R)
    d = p.nu - 6.0 * R**2 + 5.0 * R**4
    if p.alpha != 0.0:
        d = d + 0.5 * p.alpha**2 / R**2
    return d[()] if d.ndim == 0 else d


def radial_drift(R, p: NodeParams):
    """Radial drift -nu R + 2 R^3 - R^5 + alpha^2/(2R), equal to minus the
    derivative of :func:`potential_1d`.  Requires R > 0 (the Ito term is
    singular at the origin)."""
    d = potential_1d_d1(R, p)
    return -d


def _require_positive_radius(R) -> None:
    if np.any(np.asarray(R) <= 0.0):
        raise ValueError("radius must be > 0")


def radial_equilibria(p: NodeParams) -> RadialEquilibria:
    """All positive roots of V'(R) = 0, bracketed on (0, 2] and polished to
    |V'| < 1e-10.

    For alpha = 0 the closed forms apply: r_min = 0 (by convention, the
    limit root), r_c = sqrt(1 - sqrt(1 - nu)), r_max = sqrt(1 + sqrt(1 - nu))
    whenever 0 < nu < 1.  Outside the bistable region missing roots are
    reported as None.
    """
    if p.alpha == 0.0:
        if 0.0 < p.nu < 1.0:
            s = np.sqrt(1.0 - p.nu)
            return RadialEquilibria(0.0, float(np.sqrt(1.0 - s)), float(np.sqrt(1.0 + s)))
        if p.nu >= 1.0:
            return RadialEquilibria(0.0 if p.nu > 0 else None, None, None)
        # nu <= 0: origin unstable, single outer well
        return RadialEquilibria(None, None, float(np.sqrt(1.0 + np.sqrt(1.0 - p.nu))))

    f = lambda r: potential_1d_d1(r, p)
    # Log-spaced grid resolves the inner root, which scales like alpha.
    grid = np.geomspace(1e-8, 2.0, 2400)
    vals = f(grid)
    roots: list[float] = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            r = optimize.brentq(f, grid[i], grid[i + 1], xtol=ROOT_XTOL)
            roots.append(_newton_polish(r, p))
    roots = sorted(set(round(r, 14) for r in roots))
    for r in roots:
        if abs(f(r)) >= GRAD_TOL:
            raise RuntimeError(f"root refinement failed at R={r}")
    if len(roots) == 3:
        return RadialEquilibria(*roots)
    if len(roots) == 1:
        # A single zero: classify by curvature (minimum vs gate).
        if potential_1d_d2(roots[0], p) > 0:
            return RadialEquilibria(r_min=roots[0]) if roots[0] < 0.5 else RadialEquilibria(r_max=roots[0])
        return RadialEquilibria(r_c=roots[0])
    if len(roots) == 2:
        # Tangency case on the saddle-node locus.
        return RadialEquilibria(r_min=roots[0], r_c=roots[1], r_max=None)
    return RadialEquilibria()


def _newton_polish(r: float, p: NodeParams, iters: int = 4) -> float:
    for _ in range(iters):
        step = potential_1d_d1(r, p) / potential_1d_d2(r, p)
        if not np.isfinite(step):
            break
        r = r - step
    return float(r)


def saddle_node_residual(nu, alpha):
    """Residual of the saddle-node locus of the radial system,
    nu^3 - nu^2 - (9/2) nu alpha^2 + (27/16) alpha^4 + 4 alpha^2.

    Its zero set bounds the bistable region; the curve has a cusp at
    (nu, alpha) = (4/3, 4 sqrt(3)/9).
    """
    nu = np.asarray(nu, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    a2 = alpha * alpha
    out = nu**3 - nu**2 - 4.5 * nu * a2 + (27.0 / 16.0) * a2 * a2 + 4.0 * a2
    return out[()] if out.ndim == 0 else out


def saddle_node_alpha(nu: float) -> float:
    """Positive-alpha branch of the saddle-node locus for a given nu.

    The residual is quadratic in alpha^2, so the branch is closed-form.  For
    0 < nu < 1 there is exactly one positive root; it behaves like nu/2 for
    small nu.
    """
    if nu <= 0:
        raise ValueError("nu must be > 0")
    a = 27.0 / 16.0
    b = 4.0 - 4.5 * nu
    c = nu**3 - nu**2
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise ValueError(f"no real saddle-node branch at nu={nu}")
    u = (-b + np.sqrt(disc)) / (2.0 * a)
    if u <= 0:
        raise ValueError(f"no positive-alpha saddle-node branch at nu={nu}")
    return float(np.sqrt(u))


def potential_2node(R1, R2, phi, p: NodeParams, beta: float):
    """Coupled potential of two bidirectionally coupled nodes in polar form.

    V = 1/2 [ (R1^6 + R2^6)/3 - (R1^4 + R2^4) + (nu + beta)(R1^2 + R2^2)
              - alpha^2 ln(R1 R2) ] - beta R1 R2 cos(phi)

    With beta = 0 this is the sum of the single-node potentials.  Requires
    positive radii.
    """
    R1 = np.asarray(R1, dtype=float)
    R2 = np.asarray(R2, dtype=float)
    _require_positive_radius(R1)
    _require_positive_radius(R2)
    a2 = p.alpha**2
    V = 0.5 * (
        (R1**6 + R2**6) / 3.0
        - (R1**4 + R2**4)
        + (p.nu + beta) * (R1**2 + R2**2)
    ) - beta * R1 * R2 * np.cos(phi)
    if a2 != 0.0:
        V = V - 0.5 * a2 * np.log(R1 * R2)
    return V[()] if np.ndim(V) == 0 else V


def grad_hess_2node(R1: float, R2: float, p: NodeParams, beta: float):
    """Analytic gradient and Hessian of :func:`potential_2node` at phi = 0.

    Returns ``(grad, hess)`` with ``grad`` shape (2,) and ``hess`` the
    symmetric 2x2 matrix (both off-diagonal entries are the single value
    -beta).
    """
    if R1 <= 0 or R2 <= 0:
        raise ValueError("radius must be > 0")
    a2 = p.alpha**2
    nb = p.nu + beta
    g = np.array(
        [
            R1**5 - 2.0 * R1**3 + nb * R1 - 0.5 * a2 / R1 - beta * R2,
            R2**5 - 2.0 * R2**3 + nb * R2 - 0.5 * a2 / R2 - beta * R1,
        ]
    )
    h = np.array(
        [
            [5.0 * R1**4 - 6.0 * R1**2 + nb + 0.5 * a2 / R1**2, -beta],
            [-beta, 5.0 * R2**4 - 6.0 * R2**2 + nb + 0.5 * a2 / R2**2],
        ]
    )
    return g, h


def network_drift(z: np.ndarray, net: NetworkSpec, p: NodeParams) -> np.ndarray:
    """Deterministic drift of the coupled network.

    Component i is f(z_i) + beta * sum_j A[j, i] (z_j - z_i), where f is
    :func:`complex_drift`.  ``z`` must have length ``net.n``.
    """
    z = np.asarray(z, dtype=complex)
    if z.shape != (net.n,):
        raise ValueError(f"state must have shape ({net.n},), got {z.shape}")
    f = complex_drift(z, p)
    if net.beta == 0.0:
        return f
    indeg = net.adjacency.sum(axis=0)
    coupling = z @ net.adjacency - indeg * z
    return f + net.beta * coupling

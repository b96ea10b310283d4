"""Structure of the two-node coupled potential as the coupling varies.

All local minima of the coupled potential, and all saddles that gate
transitions between their basins, sit at phase difference zero, so the
whole module works in the (R1, R2) radial plane with phi frozen at 0.

Increasing the coupling beta deforms the critical-point set through two
bifurcations: a pair of simultaneous saddle-node events (annihilating the
asymmetric one-node-escaped sinks with their gate saddles) and a pitchfork
(merging the two asymmetric first-escape saddles into the symmetric
on-diagonal point).  These split the coupling axis into weak, intermediate
and strong regimes with 9, 5 and 3 critical points.

Beyond critical-point continuation the module provides the two
non-Kramers second-escape estimates: deterministic passage along the
unstable manifold of a gate saddle (intermediate coupling), and the
synchronisation-fluctuation scaling (strong coupling).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import (
    CriticalPoint2D,
    NodeParams,
    grad_hess_2node,
    potential_2node,
    radial_drift,
    radial_equilibria,
)

__all__ = [
    "BifurcationScan",
    "find_critical_points_2node",
    "detect_bifurcations",
    "symmetric_gate",
    "transverse_quartic_coeff",
    "unstable_manifold_passage",
    "sync_fluctuation_estimate",
]

GRAD_TOL = 1e-10
DEDUP_DIST = 1e-6
DOMAIN_MAX = 1.6


@dataclass(frozen=True)
class BifurcationScan:
    """Critical-point branches over a coupling grid plus detected events.

    ``branches[k]`` lists the critical points at ``beta_grid[k]``.
    ``beta_SN`` / ``beta_PF`` are the saddle-node and pitchfork couplings;
    ``regime(beta)`` classifies a coupling value as 'weak', 'intermediate'
    or 'strong'.
    """

    beta_grid: np.ndarray
    branches: list[list[CriticalPoint2D]]
    beta_SN: float
    beta_PF: float

    def regime(self, beta: float) -> str:
        if beta < self.beta_SN:
            return "weak"
        if beta < self.beta_PF:
            return "intermediate"
        return "strong"


def _classify(eigs: np.ndarray) -> str:
    if eigs[0] > 0:
        return "sink"
    if eigs[1] < 0:
        return "source"
    return "saddle"


def find_critical_points_2node(
    p: NodeParams, beta: float, ngrid: int = 40, rmax: float = DOMAIN_MAX
) -> list[CriticalPoint2D]:
    """All critical points of the coupled potential at phi = 0 in (0, rmax]^2.

    Newton iteration from an ``ngrid`` x ``ngrid`` seed lattice; seeds whose
    iterates leave the domain or fail to converge are skipped.  Converged
    points are deduplicated at distance 1e-6 and classified by the Hessian
    eigenvalue signs.
    """
    seeds = np.linspace(rmax / ngrid, rmax, ngrid)
    found: list[np.ndarray] = []
    for s1 in seeds:
        for s2 in seeds:
            x = np.array([s1, s2])
            converged = False
            for _ in range(60):
                g, h = grad_hess_2node(x[0], x[1], p, beta)
                if np.linalg.norm(g) < 1e-13:
                    converged = True
                    break
                try:
                    step = np.linalg.solve(h, g)
                except np.linalg.LinAlgError:
                    break
                xn = x - step
                if not (0.0 < xn[0] <= 2.0 and 0.0 < xn[1] <= 2.0):
                    break
                x = xn
            if not converged:
                continue
            if any(np.hypot(x[0] - q[0], x[1] - q[1]) < DEDUP_DIST for q in found):
                continue
            found.append(x.copy())

    points = []
    for x in found:
        g, h = grad_hess_2node(x[0], x[1], p, beta)
        if np.linalg.norm(g) >= GRAD_TOL:
            continue
        eigs, vecs = np.linalg.eigh(h)
        points.append(
            CriticalPoint2D(
                position=(float(x[0]), float(x[1])),
                phi=0.0,
                value=float(potential_2node(x[0], x[1], 0.0, p, beta)),
                eigenvalues=(float(eigs[0]), float(eigs[1])),
                kind=_classify(eigs),
                eigenvectors=vecs,
            )
        )
    points.sort(key=lambda c: c.position)
    return points


def _has_asymmetric_sink(p: NodeParams, beta: float) -> bool:
    return any(
        c.kind == "sink" and abs(c.position[0] - c.position[1]) > 1e-3
        for c in find_critical_points_2node(p, beta)
    )


def symmetric_gate(p: NodeParams, beta: float) -> CriticalPoint2D:
    """The on-diagonal critical point at the gate radius (R_c, R_c).

    Its location is independent of beta (the coupling terms cancel on the
    diagonal); its transverse Hessian eigenvalue 2*beta + V''(R_c) crosses
    zero at the pitchfork, turning the point from a source into the single
    synchronised saddle.
    """
    eq = radial_equilibria(p)
    if eq.r_c is None:
        raise ValueError("no gate radius: node not bistable")
    rc = eq.r_c
    g, h = grad_hess_2node(rc, rc, p, beta)
    eigs, vecs = np.linalg.eigh(h)
    return CriticalPoint2D(
        position=(rc, rc),
        phi=0.0,
        value=float(potential_2node(rc, rc, 0.0, p, beta)),
        eigenvalues=(float(eigs[0]), float(eigs[1])),
        kind=_classify(eigs),
        eigenvectors=vecs,
    )


def detect_bifurcations(
    p: NodeParams,
    beta_range: tuple[float, float],
    n_grid: int = 9,
    tol: float = 1e-6,
) -> BifurcationScan:
    """Locate the saddle-node and pitchfork couplings within ``beta_range``.

    The saddle-node value is found by bisection on the disappearance of the
    asymmetric sinks; the pitchfork by bisection on the sign of the
    transverse Hessian eigenvalue of the symmetric gate point.  Both are
    refined to ``tol`` in beta.  Critical-point branches are recorded on a
    logarithmic grid across the range.
    """
    lo, hi = beta_range
    if not (0 <= lo < hi):
        raise ValueError("beta_range must satisfy 0 <= lo < hi")

    if not _has_asymmetric_sink(p, lo):
        raise ValueError(f"saddle-node event not bracketed: no asymmetric sink at beta={lo}")
    if _has_asymmetric_sink(p, hi):
        raise ValueError(f"saddle-node event not bracketed: asymmetric sink persists at beta={hi}")
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if _has_asymmetric_sink(p, mid):
            a = mid
        else:
            b = mid
    beta_sn = 0.5 * (a + b)

    # transverse eigenvalue = larger of the two (the along-diagonal one stays negative)
    def transverse(beta: float) -> float:
        return symmetric_gate(p, beta).eigenvalues[1]

    if not (transverse(lo) < 0 < transverse(hi)):
        raise ValueError("pitchfork event not bracketed by beta_range")
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if transverse(mid) < 0:
            a = mid
        else:
            b = mid
    beta_pf = 0.5 * (a + b)

    grid = np.geomspace(max(lo, 1e-4), hi, n_grid)
    branches = [find_critical_points_2node(p, float(bb)) for bb in grid]
    return BifurcationScan(
        beta_grid=grid, branches=branches, beta_SN=float(beta_sn), beta_PF=float(beta_pf)
    )


def transverse_quartic_coeff(p: NodeParams, beta: float, step: float = 1e-2) -> float:
    """Effective quartic coefficient transverse to the symmetric gate point.

    The raw fourth directional derivative of the potential along the
    transverse eigenvector (1,-1)/sqrt(2), divided by 24, is corrected for
    the cubic coupling u^2 v into the stable along-diagonal direction v:

        c4_eff = D4_u V / 24 - (D3_{uuv} V)^2 / (8 * lambda_parallel)

    i.e. the quartic coefficient of the potential restricted to the centre
    manifold of the pitchfork.  The raw coefficient alone is negative here;
    only the restricted one reproduces the observed branch of asymmetric
    saddles (positions scale like sqrt(-L/(4 c4_eff)) below the pitchfork).
    Derivatives use 5-point and nested central differences with the given
    step.
    """
    gate = symmetric_gate(p, beta)
    c = np.array(gate.position)
    e_t = np.array([1.0, -1.0]) / np.sqrt(2.0)
    e_s = np.array([1.0, 1.0]) / np.sqrt(2.0)

    def V(u: float, v: float) -> float:
        x = c + u * e_t + v * e_s
        return potential_2node(x[0], x[1], 0.0, p, beta)

    h = step
    d4 = (V(-2 * h, 0) - 4 * V(-h, 0) + 6 * V(0, 0) - 4 * V(h, 0) + V(2 * h, 0)) / h**4
    c4_raw = d4 / 24.0

    def d2u(v: float) -> float:
        return (V(h, v) - 2 * V(0, v) + V(-h, v)) / h**2

    v_uuv = (d2u(h) - d2u(-h)) / (2 * h)
    _, hess = grad_hess_2node(c[0], c[1], p, beta)
    lam_par = float(e_s @ hess @ e_s)
    if lam_par >= 0:
        raise ValueError("along-diagonal direction is not stable for the restriction")
    c4 = c4_raw - (v_uuv / 2.0) ** 2 / (2.0 * lam_par)
    if c4 <= 0:
        raise ValueError(f"effective quartic coefficient not positive: {c4}")
    return float(c4)


def _gate_saddles(points: list[CriticalPoint2D]) -> list[CriticalPoint2D]:
    """First-escape gate saddles: the asymmetric saddle pair near the origin well."""
    return [
        c for c in points
        if c.kind == "saddle" and max(c.position) < 0.8 and abs(c.position[0] - c.position[1]) > 1e-8
    ]


def unstable_manifold_passage(
    p: NodeParams,
    beta: float,
    xi: float,
    offset: float = 1e-6,
    t_limit: float = 1e4,
) -> float:
    """Inter-threshold passage time along a gate saddle's unstable manifold.

    Valid between the saddle-node and pitchfork couplings, where the second
    escape follows the deterministic flow rather than crossing another
    barrier.  Integrates dR/dt = -grad V from the gate saddle with R1 > R2,
    displaced by ``offset`` along the unstable eigenvector towards
    increasing R1, and returns the time between the R1 and R2 upward
    crossings of ``xi``.  The flow keeps the noise-induced 1/(2R) potential
    terms; only the Wiener increments are dropped.
    """
    points = find_critical_points_2node(p, beta)
    gates = [c for c in _gate_saddles(points) if c.position[0] > c.position[1]]
    if not gates:
        raise ValueError(f"no asymmetric gate saddle at beta={beta} (outside the intermediate regime?)")
    gate = gates[0]
    v = gate.eigenvectors[:, 0]  # negative-eigenvalue direction: unstable for the flow
    if v[0] < 0:
        v = -v
    x0 = np.array(gate.position) + offset * v

    def flow(t, x):
        g, _ = grad_hess_2node(x[0], x[1], p, beta)
        return -g

    hit1 = lambda t, x: x[0] - xi
    hit2 = lambda t, x: x[1] - xi
    hit1.direction = 1.0
    hit2.direction = 1.0
    sol = solve_ivp(
        flow, (0.0, t_limit), x0, events=(hit1, hit2), rtol=1e-9, atol=1e-12
    )
    if len(sol.t_events[0]) == 0 or len(sol.t_events[1]) == 0:
        raise RuntimeError(
            f"unstable manifold did not cross both thresholds before t={t_limit}"
        )
    return float(sol.t_events[1][0] - sol.t_events[0][0])


def sync_fluctuation_estimate(p: NodeParams, beta: float, xi: float) -> float:
    """Second-escape time from transverse fluctuations around synchrony.

    Above the pitchfork the pair escapes nearly synchronised; the gap
    between the two threshold crossings comes from the stationary spread of
    the transverse coordinate against the radial speed at the threshold:

        T = (alpha / Delta) * sqrt(2 / L)

    with Delta the radial drift at R = xi on the diagonal and L the
    transverse Hessian eigenvalue at the synchronised saddle, both computed
    from the model.
    """
    L = symmetric_gate(p, beta).eigenvalues[1]
    if L <= 0:
        raise ValueError(f"transverse eigenvalue {L:.6f} <= 0: below the pitchfork")
    delta = float(radial_drift(xi, p))
    if delta <= 0:
        raise ValueError(f"radial drift at xi={xi} is not positive ({delta:.6f})")
    return float(p.alpha / delta * np.sqrt(2.0 / L))

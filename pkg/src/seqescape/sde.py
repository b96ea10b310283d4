"""Stochastic integration of the network SDE and sequential-escape statistics.

Trajectories are integrated in Cartesian coordinates (real and imaginary
parts per node) with the Heun predictor-corrector scheme for additive
noise: the predictor and corrector share one Gaussian increment per real
component, which is strong order 1.0 for additive noise.  Starting every
node at the origin, the first time |z_i| crosses the threshold xi is
recorded per node; the induced ordering of those times is the escape
sequence of the realization.

Reproducibility contract: every realization draws its noise from its own
counter-based stream keyed by (seed, realization_index), so ensembles are
bit-identical for a given (seed, config) regardless of how realizations are
batched or distributed over worker processes.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .model import NetworkSpec, NodeParams

__all__ = [
    "SimConfig",
    "EscapeRecord",
    "EnsembleStats",
    "IntegrationError",
    "heun_step",
    "simulate_escape",
    "run_ensemble",
    "empirical_cdf",
    "write_trajectory_csv",
    "stats_to_json",
]

BLOW_UP_RADIUS = 10.0
NOISE_BLOCK = 4096


class IntegrationError(RuntimeError):
    """Trajectory left the admissible region or produced non-finite values."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t


@dataclass(frozen=True)
class SimConfig:
    """Integration and ensemble settings.

    ``t_max=None`` resolves at run time to 100x the single-node quadrature
    mean for the given parameters, which keeps the censoring probability
    negligible while bounding runaway realizations.
    """

    h: float = 1e-3
    xi: float = 0.5
    t_max: float | None = None
    seed: int = 0
    ensemble: int = 1
    record_path: bool = False
    sample_stride: int = 100

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise ValueError("h must be > 0")
        if self.xi <= 0:
            raise ValueError("xi must be > 0")
        if self.t_max is not None and self.t_max <= 0:
            raise ValueError("t_max must be > 0")
        if self.ensemble < 1:
            raise ValueError("ensemble must be >= 1")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


@dataclass(frozen=True)
class EscapeRecord:
    """Per-realization escape times.

    ``first_escape[i]`` is the first threshold-crossing time of node i (nan
    if the node never escaped before t_max).  ``order`` is the permutation
    of escaped node indices sorted by escape time and ``ordered_times`` the
    corresponding strictly increasing times.  ``censored`` marks records
    where some node never escaped.
    """

    first_escape: np.ndarray
    order: np.ndarray
    ordered_times: np.ndarray
    censored: bool
    realization: int
    path_t: np.ndarray | None = None
    path_z: np.ndarray | None = None

    def passage(self, k: int, ell: int) -> float:
        """First passage time between the ell-th and k-th escapes (tau^0 = 0)."""
        if not 0 <= ell < k <= len(self.ordered_times):
            raise ValueError(f"need 0 <= ell < k <= {len(self.ordered_times)}")
        hi = self.ordered_times[k - 1]
        lo = 0.0 if ell == 0 else self.ordered_times[ell - 1]
        return float(hi - lo)


@dataclass(frozen=True)
class EnsembleStats:
    """Ensemble summary: mean passage times, standard errors, empirical CDFs.

    ``T[(k, ell)]`` is the mean of tau^k - tau^ell over uncensored
    realizations, ``se`` the matching standard errors, and ``cdf`` the
    sorted passage-time samples defining the empirical distribution.  The
    means telescope exactly: T[(k, n)] = T[(k, ell)] + T[(ell, n)].
    """

    n: int
    ensemble: int
    censored_count: int
    T: dict[tuple[int, int], float]
    se: dict[tuple[int, int], float]
    cdf: dict[tuple[int, int], np.ndarray]
    config: SimConfig = None


def heun_step(state: np.ndarray, drift, noise_amp, h: float, rng: np.random.Generator) -> np.ndarray:
    """One Heun predictor-corrector step with additive noise.

    The same Gaussian draw enters the predictor and the corrector:
    x~ = x + h f(x) + sqrt(h) a xi;  x' = x + h/2 (f(x) + f(x~)) + sqrt(h) a xi.
    ``noise_amp`` may be a scalar or a per-component array.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    state = np.asarray(state, dtype=float)
    xi = rng.standard_normal(state.shape)
    kick = np.sqrt(h) * np.asarray(noise_amp) * xi
    f0 = np.asarray(drift(state))
    pred = state + h * f0 + kick
    out = state + 0.5 * h * (f0 + np.asarray(drift(pred))) + kick
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state after Heun step", h)
    return out


@njit(cache=True)
def _advance_block(zre, zim, adj, indeg, beta, nu, omega, alpha, h, xi2,
                   noise, esc_step, step0, max_steps,
                   stride, path, path_len):
    """Advance the coupled system through one pregenerated noise block.

    Returns (status, steps_done, path_len): status 0 = block exhausted,
    1 = all nodes escaped, 2 = time budget reached, 3 = blow-up.
    Escape steps are recorded into esc_step (global step index, -1 while
    quiescent).  When stride > 0, every stride-th state is appended to path.
    """
    n = zre.shape[0]
    nsteps = noise.shape[0]
    sq = np.sqrt(h) * alpha
    fre = np.empty(n)
    fim = np.empty(n)
    gre = np.empty(n)
    gim = np.empty(n)
    pre = np.empty(n)
    pim = np.empty(n)
    for s in range(nsteps):
        if step0 + s >= max_steps:
            return 2, s, path_len
        for i in range(n):
            r2 = zre[i] * zre[i] + zim[i] * zim[i]
            amp = 2.0 * r2 - r2 * r2
            cre = 0.0
            cim = 0.0
            if beta != 0.0:
                for j in range(n):
                    a = adj[j, i]
                    if a != 0.0:
                        cre += a * zre[j]
                        cim += a * zim[j]
                cre -= indeg[i] * zre[i]
                cim -= indeg[i] * zim[i]
            fre[i] = -nu * zre[i] - omega * zim[i] + amp * zre[i] + beta * cre
            fim[i] = omega * zre[i] - nu * zim[i] + amp * zim[i] + beta * cim
        for i in range(n):
            pre[i] = zre[i] + h * fre[i] + sq * noise[s, i, 0]
            pim[i] = zim[i] + h * fim[i] + sq * noise[s, i, 1]
        for i in range(n):
            r2 = pre[i] * pre[i] + pim[i] * pim[i]
            amp = 2.0 * r2 - r2 * r2
            cre = 0.0
            cim = 0.0
            if beta != 0.0:
                for j in range(n):
                    a = adj[j, i]
                    if a != 0.0:
                        cre += a * pre[j]
                        cim += a * pim[j]
                cre -= indeg[i] * pre[i]
                cim -= indeg[i] * pim[i]
            gre[i] = -nu * pre[i] - omega * pim[i] + amp * pre[i] + beta * cre
            gim[i] = omega * pre[i] - nu * pim[i] + amp * pim[i] + beta * cim
        all_escaped = True
        for i in range(n):
            zre[i] += 0.5 * h * (fre[i] + gre[i]) + sq * noise[s, i, 0]
            zim[i] += 0.5 * h * (fim[i] + gim[i]) + sq * noise[s, i, 1]
            r2 = zre[i] * zre[i] + zim[i] * zim[i]
            if r2 > BLOW_UP_RADIUS * BLOW_UP_RADIUS:
                return 3, s + 1, path_len
            if esc_step[i] < 0:
                if r2 >= xi2:
                    esc_step[i] = step0 + s + 1
                else:
                    all_escaped = False
        if stride > 0 and (step0 + s + 1) % stride == 0 and path_len < path.shape[0]:
            for i in range(n):
                path[path_len, i, 0] = zre[i]
                path[path_len, i, 1] = zim[i]
            path_len += 1
        if all_escaped:
            return 1, s + 1, path_len
    return 0, nsteps, path_len


def _realization_rng(seed: int, index: int) -> np.random.Generator:
    # Philox is counter-based; keying by (seed, index) gives independent,
    # order-insensitive streams.
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _resolve_tmax(net: NetworkSpec, p: NodeParams, cfg: SimConfig) -> float:
    if cfg.t_max is not None:
        return cfg.t_max
    from .analytics import mean_escape_quadrature

    base = mean_escape_quadrature(p.nu, p.alpha, cfg.xi).value
    return 100.0 * base


def simulate_escape(
    net: NetworkSpec, p: NodeParams, cfg: SimConfig, realization_index: int = 0
) -> EscapeRecord:
    """Integrate one noise realization from z = 0 and record escape times.

    The record is censored when the time budget runs out with unescaped
    nodes; integration always continues until every node has escaped or
    t_max is reached, since escaped nodes keep driving their neighbours.
    """
    if p.alpha == 0.0 and cfg.t_max is None:
        raise ValueError("alpha = 0 never escapes; set t_max explicitly to simulate")
    t_max = _resolve_tmax(net, p, cfg)
    max_steps = int(round(t_max / cfg.h))
    rng = _realization_rng(cfg.seed, realization_index)

    n = net.n
    zre = np.zeros(n)
    zim = np.zeros(n)
    esc = np.full(n, -1, dtype=np.int64)
    indeg = net.adjacency.sum(axis=0)
    stride = cfg.sample_stride if cfg.record_path else 0
    cap = max_steps // stride + 2 if stride else 0
    path = np.zeros((cap, n, 2)) if stride else np.zeros((0, 1, 2))
    path_len = 0

    step = 0
    status = 0
    while status == 0:
        noise = rng.standard_normal((NOISE_BLOCK, n, 2))
        status, did, path_len = _advance_block(
            zre, zim, net.adjacency, indeg, net.beta, p.nu, p.omega, p.alpha,
            cfg.h, cfg.xi * cfg.xi, noise, esc, step, max_steps,
            stride, path, path_len,
        )
        step += did
    if status == 3:
        raise IntegrationError(f"|z| exceeded {BLOW_UP_RADIUS}", step * cfg.h)

    first = np.where(esc >= 0, esc * cfg.h, np.nan)
    escaped = np.flatnonzero(esc >= 0)
    order = escaped[np.argsort(first[escaped])]
    ordered = first[order]
    record = EscapeRecord(
        first_escape=first,
        order=order,
        ordered_times=ordered,
        censored=bool(np.isnan(first).any()),
        realization=realization_index,
    )
    if stride:
        t = cfg.h * stride * np.arange(1, path_len + 1)
        record = replace(record, path_t=t, path_z=path[:path_len, :, 0] + 1j * path[:path_len, :, 1])
    return record


def _run_chunk(args) -> list[EscapeRecord]:
    net, p, cfg, indices = args
    return [simulate_escape(net, p, cfg, i) for i in indices]


def run_ensemble(
    net: NetworkSpec, p: NodeParams, cfg: SimConfig, workers: int | None = None
) -> EnsembleStats:
    """Simulate ``cfg.ensemble`` independent realizations and aggregate.

    Realizations are independent work items; with ``workers`` > 1 they are
    distributed over processes in contiguous index chunks.  Aggregation is
    by realization index, so results do not depend on the worker count.
    Mean passage times T[(k, ell)] use uncensored realizations only;
    censored ones are counted in ``censored_count``.
    """
    cfg = replace(cfg, t_max=_resolve_tmax(net, p, cfg))
    indices = np.arange(cfg.ensemble)
    if workers is None or workers <= 1 or cfg.ensemble == 1:
        records = _run_chunk((net, p, cfg, indices))
    else:
        chunks = np.array_split(indices, min(workers * 4, cfg.ensemble))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(net, p, cfg, c) for c in chunks if len(c)])
            records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.realization)

    complete = [r for r in records if not r.censored]
    censored = len(records) - len(complete)
    if not complete:
        raise RuntimeError(
            "all realizations censored before full escape; increase t_max "
            f"(current {cfg.t_max:.6g})"
        )

    n = net.n
    times = np.vstack([r.ordered_times for r in complete])  # (m, n), columns tau^1..tau^n
    T: dict[tuple[int, int], float] = {}
    se: dict[tuple[int, int], float] = {}
    cdf: dict[tuple[int, int], np.ndarray] = {}
    m = times.shape[0]
    for k in range(1, n + 1):
        for ell in range(k):
            hi = times[:, k - 1]
            lo = times[:, ell - 1] if ell > 0 else np.zeros(m)
            samples = hi - lo
            T[(k, ell)] = float(samples.mean())
            se[(k, ell)] = float(samples.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
            cdf[(k, ell)] = np.sort(samples)
    return EnsembleStats(
        n=n, ensemble=cfg.ensemble, censored_count=censored, T=T, se=se, cdf=cdf, config=cfg
    )


def empirical_cdf(stats: EnsembleStats, k: int, ell: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted passage-time samples and ECDF values i/m for the (k, ell) pair."""
    try:
        samples = stats.cdf[(k, ell)]
    except KeyError:
        raise KeyError(f"no recorded passage pair (k={k}, ell={ell})") from None
    m = len(samples)
    return samples, np.arange(1, m + 1) / m


def write_trajectory_csv(record: EscapeRecord, path) -> None:
    """Dump a recorded trajectory as CSV rows t, Re z_1, Im z_1, ..."""
    if record.path_t is None:
        raise ValueError("record has no stored path; simulate with record_path=True")
    n = record.path_z.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"{part}_z{i+1}" for i in range(n) for part in ("re", "im")])
        for t, row in zip(record.path_t, record.path_z):
            out = [repr(float(t))]
            for i in range(n):
                out += [repr(float(row[i].real)), repr(float(row[i].imag))]
            w.writerow(out)


def stats_to_json(stats: EnsembleStats) -> str:
    """Serialize ensemble statistics (config echo, per-pair mean/se, ECDFs)."""
    cfg = stats.config
    payload = {
        "config": {
            "h": cfg.h, "xi": cfg.xi, "t_max": cfg.t_max, "seed": cfg.seed,
            "ensemble": cfg.ensemble, "record_path": cfg.record_path,
            "sample_stride": cfg.sample_stride,
        },
        "n": stats.n,
        "censored_count": stats.censored_count,
        "pairs": {
            f"{k}|{ell}": {
                "mean": stats.T[(k, ell)],
                "se": stats.se[(k, ell)],
                "ecdf_times": stats.cdf[(k, ell)].tolist(),
            }
            for (k, ell) in sorted(stats.T)
        },
    }
    return json.dumps(payload, sort_keys=True)

"""Irreversible Markov-jump model of sequential escape on the state hypercube.

Network states are vertices of {0,1}^n (bit j set once node j has escaped;
no transitions back), encoded as integer bitmasks so that every transition
increases the state index: the generator is lower triangular in that order
and the all-ones state is absorbing.

For exchangeable (all-to-all) rates the 2^n chain collapses to the n+1
levels counting escaped nodes.  That reduced chain is a pure birth process
whose occupation probabilities have a closed form in terms of the level
eigenvalues lambda_k = -(n-k) r_k, evaluated here with
log-magnitude/sign products to stay finite for larger n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import expm

__all__ = [
    "EscapeChain",
    "AllToAllRates",
    "MasterSolution",
    "build_generator",
    "solve_master",
    "all_to_all_pnk",
    "cumulative_q",
    "shifted_cdf",
    "chain_means",
    "rates_from_means",
]

DENSE_STATE_LIMIT = 12  # 2^12 = 4096 states; larger all-to-all cases use the reduced chain
RESONANCE_REL_GAP = 1e-9


@dataclass(frozen=True)
class EscapeChain:
    """State-dependent escape rates on the hypercube.

    ``rates[(state, j)]`` is the rate at which node j (with bit j clear in
    ``state``) flips to 1.  Rates for already-escaped nodes are rejected:
    the process is irreversible.
    """

    n: int
    rates: Mapping[tuple[int, int], float]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for (state, j), r in self.rates.items():
            if not 0 <= state < 2**self.n:
                raise ValueError(f"state {state} out of range for n={self.n}")
            if not 0 <= j < self.n:
                raise ValueError(f"node {j} out of range for n={self.n}")
            if state >> j & 1:
                raise ValueError(f"rate defined for already-escaped node {j} in state {state:b}")
            if r < 0:
                raise ValueError(f"negative rate {r} for ({state}, {j})")

    def rate(self, state: int, j: int) -> float:
        return float(self.rates.get((state, j), 0.0))

    @classmethod
    def all_to_all(cls, rates: "AllToAllRates") -> "EscapeChain":
        """Hypercube chain whose rates depend only on the escaped count."""
        n = rates.n
        table = {}
        for state in range(2**n):
            k = bin(state).count("1")
            for j in range(n):
                if not state >> j & 1:
                    table[(state, j)] = rates.r[k]
        return cls(n=n, rates=table)


@dataclass(frozen=True)
class AllToAllRates:
    """Escape rate per remaining node given k nodes already escaped.

    ``r[k]`` applies while exactly k nodes have escaped, for k = 0..n-1;
    by convention r_n = 0 (absorbing).  The reduced-chain eigenvalues are
    lambda_k = -(n-k) r[k]; the closed-form solution requires them to be
    pairwise distinct, which is checked at evaluation time.
    """

    r: tuple[float, ...]

    def __post_init__(self) -> None:
        r = tuple(float(x) for x in self.r)
        if len(r) < 1:
            raise ValueError("need at least one rate")
        if any(x <= 0 for x in r):
            raise ValueError(f"rates must be positive, got {r}")
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return len(self.r)

    def eigenvalues(self) -> np.ndarray:
        """lambda_k = -(n-k) r_k for k = 0..n, with lambda_n = 0."""
        n = self.n
        lam = np.array([-(n - k) * self.r[k] for k in range(n)] + [0.0])
        return lam


@dataclass(frozen=True)
class MasterSolution:
    """Probability trajectories over states (full chain) or levels (reduced)."""

    times: np.ndarray
    p: np.ndarray  # (len(times), n_states)
    absorbing_state: int

    def absorbed(self) -> np.ndarray:
        return self.p[:, self.absorbing_state]


def build_generator(chain: EscapeChain) -> np.ndarray:
    """Dense generator M of dp/dt = M p on the 2^n hypercube.

    Column X carries -sum of the outgoing rates on the diagonal; entry
    (X, O_j(X)) carries the rate into X from its predecessor with bit j
    cleared.  Column sums vanish (probability conservation) and the
    all-ones column is zero (absorbing).
    """
    n = chain.n
    if n > DENSE_STATE_LIMIT:
        raise ValueError(
            f"dense generator capped at n={DENSE_STATE_LIMIT}; "
            "use the reduced all-to-all chain for larger networks"
        )
    size = 2**n
    M = np.zeros((size, size))
    for state in range(size):
        for j in range(n):
            if state >> j & 1:
                continue
            r = chain.rate(state, j)
            M[state, state] -= r
            M[state | (1 << j), state] += r
    return M


def solve_master(M: np.ndarray, p0: np.ndarray, times: np.ndarray) -> MasterSolution:
    """Propagate p(t) = exp(M t) p0 on a time grid.

    Uses dense scaling-and-squaring matrix exponentials.  Under the bitmask
    state order M is lower triangular, so its eigenvalues sit on the
    diagonal; the zero column of the absorbing state guarantees the
    terminal mass accumulates there.
    """
    p0 = np.asarray(p0, dtype=float)
    size = M.shape[0]
    if M.shape != (size, size) or p0.shape != (size,):
        raise ValueError("shape mismatch between generator and initial vector")
    if abs(p0.sum() - 1.0) > 1e-12 or np.any(p0 < 0):
        raise ValueError("p0 must be a probability vector")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((len(times), size))
    for i, t in enumerate(times):
        if t < 0:
            raise ValueError("times must be >= 0")
        out[i] = expm(M * t) @ p0
    return MasterSolution(times=times, p=out, absorbing_state=size - 1)


def _check_distinct(lam: np.ndarray) -> None:
    if len(lam) < 2:
        return
    scale = np.max(np.abs(lam))
    pair_gap = np.min(np.abs(np.subtract.outer(lam, lam))[~np.eye(len(lam), dtype=bool)])
    if pair_gap <= RESONANCE_REL_GAP * scale:
        raise ValueError(
            "resonant (near-equal) eigenvalues: the exponential closed form "
            f"requires distinct rates (min gap {pair_gap:.3g})"
        )


def _stage_occupancies(lam: np.ndarray, t: float) -> np.ndarray:
    """Occupation probabilities of a pure birth chain started in stage 0.

    ``lam[m]`` is the (negative) eigenvalue of stage m, i.e. minus its total
    exit rate; the final stage must have lam = 0.  Stage m's probability is

        p_m(t) = [prod_{i<m} lam_i] * sum_{j<=m} e^{lam_j t} / prod_{i<=m, i!=j} (lam_i - lam_j)

    evaluated in log magnitude and sign per term to avoid under/overflow;
    the last stage comes from normalization.
    """
    K = len(lam) - 1  # stages 0..K; lam[K] == 0
    out = np.zeros(K + 1)
    log_lam_prefix = np.cumsum(np.concatenate(([0.0], np.log(np.abs(lam[:K])))))
    for m in range(K):
        sub = lam[: m + 1]
        terms = np.empty(m + 1)
        for j in range(m + 1):
            diffs = np.delete(sub, j) - sub[j]
            sign = (-1.0) ** m * np.prod(np.sign(diffs)) if m else 1.0
            logmag = log_lam_prefix[m] + sub[j] * t - np.sum(np.log(np.abs(diffs))) if m else sub[j] * t
            terms[j] = sign * np.exp(logmag)
        out[m] = terms.sum()
    out[K] = 1.0 - out[:K].sum()
    return out


def all_to_all_pnk(rates: AllToAllRates, t: float) -> np.ndarray:
    """Probabilities that exactly k of n nodes have escaped by time t.

    Closed-form solution of the reduced (n+1)-level chain with distinct
    eigenvalues, started from the all-quiescent level.  Returns the vector
    (p_{n,0}(t), ..., p_{n,n}(t)); the last entry is fixed by normalization.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = rates.eigenvalues()
    _check_distinct(lam[:-1])  # lam_n = 0 is distinct from the negatives by positivity
    return _stage_occupancies(lam, float(t))


def cumulative_q(rates: AllToAllRates, k: int, t: float) -> float:
    """P{tau^k <= t}: probability that at least k nodes have escaped."""
    n = rates.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}")
    p = all_to_all_pnk(rates, t)
    return float(p[k:].sum())


def shifted_cdf(rates: AllToAllRates, k: int, ell: int, t: float) -> float:
    """P{tau^{k|ell} <= t}: CDF of the passage from the ell-th to the k-th escape.

    Solves the sub-chain started at level ell (initial condition
    p_{n,ell}(0) = 1) and sums the occupancies of levels >= k.
    """
    n = rates.n
    if not 0 <= ell < k <= n:
        raise ValueError(f"need 0 <= ell < k <= {n}")
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = rates.eigenvalues()[ell:]
    if len(lam) > 2:
        _check_distinct(lam[:-1])
    p = _stage_occupancies(lam, float(t))
    return float(p[k - ell:].sum())


def chain_means(rates: AllToAllRates, k: int, ell: int) -> float:
    """Mean passage time between the ell-th and k-th escapes:
    sum of the exponential stage means 1/|lambda_j| for j = ell..k-1."""
    n = rates.n
    if not 0 <= ell < k <= n:
        raise ValueError(f"need 0 <= ell < k <= {n}")
    lam = rates.eigenvalues()
    return float(np.sum(1.0 / np.abs(lam[ell:k])))


def rates_from_means(T_means: Mapping[int, float], n: int) -> AllToAllRates:
    """Moment-matched all-to-all rates from consecutive mean passage times.

    ``T_means[k]`` is the observed mean of tau^{k|k-1} for k = 1..n; the
    stage rates follow from inverting the exponential stage means:
    r_k = 1 / ((n - k) * T^{k+1|k}).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    missing = [k for k in range(1, n + 1) if k not in T_means]
    if missing:
        raise ValueError(f"missing consecutive means for k={missing}")
    r = []
    for k in range(n):
        Tk = float(T_means[k + 1])
        if Tk <= 0:
            raise ValueError(f"mean passage times must be positive, got T[{k + 1}]={Tk}")
        r.append(1.0 / ((n - k) * Tk))
    return AllToAllRates(r=tuple(r))

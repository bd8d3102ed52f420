"""Mixed annihilating/coalescing random walks on a finite lattice window.

Particles jump ``x -> x-1`` at rate ``q_x`` and ``x-1 -> x`` at rate ``p_x``.
When a particle lands on an occupied site the pair annihilates with
probability ``theta`` and coalesces otherwise.

Rates live on the ``W + 1`` bonds of a window ``[x_min, x_max]``: entry ``k``
of ``q`` and ``p`` refers to lattice point ``x = x_min + k`` with ``k = 0..W``
(so ``p[W]`` is the rate of ``x_max -> x_max + 1``).  Boundary modes:

``truncated``
    hard walls at both ends.
``periodic``
    ``x_min - 1`` is identified with ``x_max``.
``killed``
    ``x_min = 0``; jumps ``0 -> -1`` (rate ``q_0``) enter an absorbing sink.
``reflected``
    ``x_min = 0`` with hard walls; the usual profile has ``q_0 = p_0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from . import _engine
from ._validation import check_nonnegative_int, check_theta, check_time

__all__ = [
    "BOUNDARY_MODES",
    "Configuration",
    "RateProfile",
    "TrajectorySample",
    "TrajectoryEnsemble",
    "apply_jump",
    "spin_pair",
    "simulate",
    "simulate_ensemble",
    "simulate_two_colour",
    "estimate_products",
    "estimate_spin_products",
    "exact_distribution",
    "exact_ctmc",
    "MAX_EXACT_SITES",
]

BOUNDARY_MODES = ("periodic", "truncated", "killed", "reflected")
MAX_EXACT_SITES = 14
_CTMC_TAIL = 1e-14
_BOUNDARY_CODE = {"periodic": _engine.PERIODIC, "truncated": _engine.WALL,
                  "reflected": _engine.WALL, "killed": _engine.SINK}


@dataclass(frozen=True)
class Configuration:
    """Occupancy of the window ``[x_min, x_min + len(occupancy) - 1]``."""

    x_min: int
    occupancy: np.ndarray
    boundary: str = "truncated"

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=np.uint8).ravel()
        if occ.size == 0:
            raise ValueError("empty window")
        if np.any(occ > 1):
            raise ValueError("occupancy must be 0/1")
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}, got {self.boundary!r}")
        if self.boundary in ("killed", "reflected") and int(self.x_min) != 0:
            raise ValueError(f"{self.boundary} windows must start at 0")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "x_min", int(self.x_min))

    @classmethod
    def from_sites(cls, sites, x_min, x_max, boundary="truncated"):
        occ = np.zeros(x_max - x_min + 1, dtype=np.uint8)
        sites = np.asarray(list(sites), dtype=int)
        if sites.size and (sites.min() < x_min or sites.max() > x_max):
            raise ValueError("occupied sites outside the window")
        occ[sites - x_min] = 1
        return cls(x_min, occ, boundary)

    @classmethod
    def full(cls, x_min, x_max, boundary="truncated"):
        return cls(x_min, np.ones(x_max - x_min + 1, dtype=np.uint8), boundary)

    @classmethod
    def bernoulli(cls, x_min, x_max, p, rng=None, boundary="truncated"):
        rng = np.random.default_rng(rng)
        W = x_max - x_min + 1
        return cls(x_min, (rng.random(W) < np.broadcast_to(p, (W,))).astype(np.uint8), boundary)

    @property
    def size(self):
        return self.occupancy.size

    @property
    def x_max(self):
        return self.x_min + self.size - 1

    @property
    def sites(self):
        return np.arange(self.x_min, self.x_max + 1)

    @property
    def particles(self):
        return self.x_min + np.flatnonzero(self.occupancy)

    def count(self):
        return int(self.occupancy.sum())

    def __getitem__(self, x):
        return int(self.occupancy[self._index(x)])

    def _index(self, x):
        i = int(x) - self.x_min
        if not 0 <= i < self.size:
            raise IndexError(f"site {x} outside window [{self.x_min}, {self.x_max}]")
        return i

    def with_occupancy(self, occ):
        return Configuration(self.x_min, occ, self.boundary)

    def __eq__(self, other):
        return (isinstance(other, Configuration) and self.x_min == other.x_min
                and self.boundary == other.boundary
                and np.array_equal(self.occupancy, other.occupancy))

    def __hash__(self):
        return hash((self.x_min, self.boundary, self.occupancy.tobytes()))


@dataclass(frozen=True)
class RateProfile:
    """Bond rates ``q`` (leftward) and ``p`` (rightward) plus ``theta``.

    ``q[k]`` is the rate of ``x -> x-1`` and ``p[k]`` that of ``x-1 -> x``,
    for ``x = x_min + k``.
    """

    x_min: int
    q: np.ndarray
    p: np.ndarray
    theta: float = 1.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float).ravel()
        p = np.array(self.p, dtype=float).ravel()
        if q.shape != p.shape or q.size < 2:
            raise ValueError("q and p need the same length W + 1 >= 2")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("rates must be finite")
        if np.any(q < 0) or np.any(p < 0):
            raise ValueError("rates must be nonnegative")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x_min", int(self.x_min))
        object.__setattr__(self, "theta", check_theta(self.theta))

    @classmethod
    def homogeneous(cls, x_min, x_max, theta=1.0, rate=1.0):
        W = x_max - x_min + 1
        return cls(x_min, np.full(W + 1, float(rate)), np.full(W + 1, float(rate)), theta)

    @classmethod
    def killed(cls, x_max, theta=1.0, rate=1.0):
        """Killed-at-zero profile: ``q_0 = 2``, ``p_0 = 0``, unit rates elsewhere."""
        r = cls.homogeneous(0, x_max, theta, rate)
        q, p = r.q.copy(), r.p.copy()
        q[0], p[0] = 2.0 * rate, 0.0
        return cls(0, q, p, theta)

    @classmethod
    def reflected(cls, x_max, theta=1.0, rate=1.0):
        """Reflected-at-zero profile: ``q_0 = p_0 = 0``."""
        r = cls.homogeneous(0, x_max, theta, rate)
        q, p = r.q.copy(), r.p.copy()
        q[0] = p[0] = 0.0
        return cls(0, q, p, theta)

    @property
    def size(self):
        """Number of sites ``W``."""
        return self.q.size - 1

    @property
    def x_max(self):
        return self.x_min + self.size - 1

    @property
    def max_rate(self):
        return float(np.max(self.q + self.p))

    def with_theta(self, theta):
        return RateProfile(self.x_min, self.q, self.p, theta)

    def effective(self, boundary):
        """Bond rates with the entries a boundary mode rules out set to zero.

        Returns copies ``(q, p)`` of length ``W + 1``.  These are both the
        physical rates and the rates of the dual one-particle generator on
        ``[x_min, x_max + 1]``.
        """
        if boundary not in BOUNDARY_MODES:
            raise ValueError(f"unknown boundary {boundary!r}")
        q, p = self.q.copy(), self.p.copy()
        W = self.size
        q[W] = 0.0
        p[0] = 0.0
        if boundary != "periodic":
            p[W] = 0.0
        if boundary in ("truncated", "reflected"):
            q[0] = 0.0
        return q, p

    def site_rates(self, boundary):
        """Per-site ``(left, right)`` jump rates of length ``W``."""
        q, p = self.effective(boundary)
        return np.ascontiguousarray(q[:-1]), np.ascontiguousarray(p[1:])

    def check_matches(self, config):
        if config.x_min != self.x_min or config.size != self.size:
            raise ValueError(
                f"rates cover [{self.x_min}, {self.x_max}] but configuration is "
                f"[{config.x_min}, {config.x_max}]")


@dataclass(frozen=True)
class TrajectorySample:
    time: float
    config: Configuration
    seed: int
    event_count: int
    colours: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.event_count < 0:
            raise ValueError("event_count must be nonnegative")

    def blue(self):
        """Configuration of the blue sub-population (two-colour runs only)."""
        if self.colours is None:
            raise ValueError("not a two-colour sample")
        return self.config.with_occupancy((self.colours == _engine.BLUE).astype(np.uint8))


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Time-``t`` occupancies of ``N`` independent trajectories, shape ``(N, W)``."""

    time: float
    template: Configuration
    occupancy: np.ndarray
    seeds: np.ndarray
    event_counts: np.ndarray
    colours: np.ndarray | None = None

    def __len__(self):
        return self.occupancy.shape[0]

    def __getitem__(self, m):
        cols = None if self.colours is None else self.colours[m]
        return TrajectorySample(self.time, self.template.with_occupancy(self.occupancy[m]),
                                int(self.seeds[m]), int(self.event_counts[m]), cols)

    def blue(self):
        if self.colours is None:
            raise ValueError("not a two-colour ensemble")
        return TrajectoryEnsemble(self.time, self.template,
                                  (self.colours == _engine.BLUE).astype(np.uint8),
                                  self.seeds, self.event_counts)


def apply_jump(eta, source, target, reaction):
    """Move the particle at ``source`` to the adjacent ``target``.

    ``target`` may be the sink ``-1`` of a killed window, in which case the
    particle is removed.  On an occupied target the pair annihilates
    (``reaction='annihilate'``) or merges (``'coalesce'``).
    """
    if reaction not in ("annihilate", "coalesce"):
        raise ValueError(f"unknown reaction {reaction!r}")
    if abs(int(source) - int(target)) != 1:
        raise ValueError(f"sites {source} and {target} are not adjacent")
    occ = eta.occupancy.copy()
    i = eta._index(source)
    if eta.boundary == "killed" and target == eta.x_min - 1:
        occ[i] = 0
        return eta.with_occupancy(occ)
    j = eta._index(target)
    a, b = int(occ[i]), int(occ[j])
    occ[i] = 0
    occ[j] = (a + b) % 2 if reaction == "annihilate" else min(1, a + b)
    return eta.with_occupancy(occ)


def spin_pair(eta, y, z, theta):
    """``(-theta) ** eta[y, z)`` with ``0 ** 0 = 1``."""
    if y > z:
        raise ValueError(f"need y <= z, got {y} > {z}")
    theta = check_theta(theta)
    if y == z:
        return 1.0
    i, j = eta._index(y), eta._index(z - 1) + 1
    k = int(eta.occupancy[i:j].sum())
    if k == 0:
        return 1.0
    return (-theta) ** k


def _engine_inputs(eta0, rates, t):
    t = check_time(t)
    rates.check_matches(eta0)
    left, right = rates.site_rates(eta0.boundary)
    return t, left, right, _BOUNDARY_CODE[eta0.boundary]


def _seed_words(seed, n):
    return np.random.SeedSequence(int(seed)).generate_state(n, dtype=np.uint32).astype(np.int64)


def simulate(eta0, rates, t, seed):
    """One exact trajectory up to time ``t``; deterministic given ``seed``."""
    t, left, right, code = _engine_inputs(eta0, rates, t)
    occ0 = eta0.occupancy.copy()
    occ, _, events = _engine.run_one(occ0, np.zeros_like(occ0), left, right, rates.theta,
                                     t, code, _engine.MIXED, _seed_words(seed, 1)[0])
    return TrajectorySample(t, eta0.with_occupancy(occ), int(seed), int(events))


def _set_threads(threads):
    if threads is None:
        return
    import numba
    numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def simulate_ensemble(eta0, rates, t, n, seed, threads=None):
    """``n`` independent trajectories; trajectory ``m`` uses the ``m``-th word
    of ``SeedSequence(seed)`` so the result does not depend on ``threads``."""
    n = check_nonnegative_int(n, "n")
    if n == 0:
        raise ValueError("need at least one trajectory")
    t, left, right, code = _engine_inputs(eta0, rates, t)
    seeds = _seed_words(seed, n)
    _set_threads(threads)
    occ0 = eta0.occupancy.copy()
    occ, _, events = _engine.run_many(occ0, np.zeros_like(occ0), left, right, rates.theta,
                                      t, code, _engine.MIXED, seeds)
    return TrajectoryEnsemble(t, eta0, occ, seeds, events)


def simulate_two_colour(eta0, rates, t, n, seed, mode="thinning", lam=None, threads=None):
    """Two-colour coalescing system; the blue particles are the thinned process.

    ``mode='thinning'``: colours blue w.p. ``1/(1+theta)``; reactions
    ``R+R->R``, ``R+B->B``, ``B+B->R`` w.p. ``theta`` else ``B``.
    ``mode='strong-thinning'``: colours blue w.p. ``lam``; reactions
    ``R+R->R``, ``B+B->B``, ``B+R->`` either colour w.p. 1/2.
    """
    n = check_nonnegative_int(n, "n")
    if n == 0:
        raise ValueError("need at least one trajectory")
    t, left, right, code = _engine_inputs(eta0, rates, t)
    theta = rates.theta
    if mode == "thinning":
        p_blue, reaction = 1.0 / (1.0 + theta), _engine.THINNING
    elif mode == "strong-thinning":
        if lam is None or not 0.0 < float(lam) < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
        p_blue, reaction = float(lam), _engine.STRONG
    else:
        raise ValueError(f"unknown mode {mode!r}")
    seeds = _seed_words(seed, n)
    _set_threads(threads)
    occ, cols, events = _engine.run_many_coloured(
        eta0.occupancy.copy(), left, right, theta, t, code, reaction, p_blue, seeds)
    return TrajectoryEnsemble(t, eta0, occ, seeds, events, cols)


def _occupancy_matrix(samples):
    if isinstance(samples, TrajectoryEnsemble):
        return samples.template, samples.occupancy
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    template = samples[0].config
    return template, np.stack([s.config.occupancy for s in samples])


def _mean_se(values):
    n = values.size
    if n < 2:
        raise ValueError("need at least two samples")
    mean = float(values.mean())
    return mean, float(values.std(ddof=1) / np.sqrt(n))


def estimate_products(samples, points):
    """Monte Carlo mean and standard error of ``prod_i eta_t(x_i)``."""
    template, occ = _occupancy_matrix(samples)
    points = [int(x) for x in points]
    if len(set(points)) != len(points):
        raise ValueError("points must be distinct")
    idx = [template._index(x) for x in points]
    return _mean_se(np.prod(occ[:, idx], axis=1, dtype=np.int64).astype(float))


def _spin_product_values(template, occ, y, theta):
    y = [int(v) for v in y]
    if len(y) % 2 or not y:
        raise ValueError("need an even, non-empty list of sites")
    if any(a > b for a, b in zip(y, y[1:])):
        raise ValueError("sites must be ordered")
    cums = np.concatenate([np.zeros((occ.shape[0], 1), np.int64),
                           np.cumsum(occ, axis=1, dtype=np.int64)], axis=1)
    total = np.zeros(occ.shape[0], np.int64)
    for a, b in zip(y[0::2], y[1::2]):
        i = a - template.x_min
        j = b - template.x_min
        if i < 0 or j > template.size:
            raise IndexError(f"pair ({a}, {b}) outside the window")
        total += cums[:, j] - cums[:, i]
    theta = check_theta(theta)
    if theta == 0.0:
        return (total == 0).astype(float)
    return (-theta) ** total.astype(float)


def estimate_spin_products(samples, y, theta):
    """Monte Carlo mean and standard error of ``prod_i sigma_{y_{2i-1}, y_{2i}}(eta_t)``."""
    template, occ = _occupancy_matrix(samples)
    return _mean_se(_spin_product_values(template, occ, y, theta))


# ---------------------------------------------------------------------------
# Exact CTMC oracle

def _all_states(W):
    s = np.arange(1 << W, dtype=np.int64)
    return ((s[:, None] >> np.arange(W)) & 1).astype(np.uint8)


def _generator(rates, boundary):
    W = rates.size
    S = 1 << W
    left, right = rates.site_rates(boundary)
    theta = rates.theta
    states = np.arange(S, dtype=np.int64)
    rows, cols, vals = [], [], []

    def add(src, dst, r):
        if r > 0 and src.size:
            rows.append(src)
            cols.append(dst)
            vals.append(np.full(src.size, r))

    for i in range(W):
        occupied = states[(states >> i) & 1 == 1]
        for j, r in ((i - 1, left[i]), (i + 1, right[i])):
            if r == 0.0:
                continue
            cleared = occupied & ~(1 << i)
            if not 0 <= j < W:
                if boundary == "periodic":
                    j %= W
                else:
                    add(occupied, cleared, r)  # sink
                    continue
            free = (occupied >> j) & 1 == 0
            add(occupied[free], cleared[free] | (1 << j), r)
            hit = ~free
            add(occupied[hit], cleared[hit] & ~(1 << j), r * theta)
            add(occupied[hit], cleared[hit], r * (1.0 - theta))
    if rows:
        rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    else:
        rows = cols = np.zeros(0, np.int64)
        vals = np.zeros(0)
    Q = sparse.coo_matrix((vals, (rows, cols)), shape=(S, S)).tocsr()
    out = np.asarray(Q.sum(axis=1)).ravel()
    return Q - sparse.diags(out), float(out.max(initial=0.0))


def exact_distribution(eta0, rates, t, tail=_CTMC_TAIL):
    """Law of ``eta_t`` over all ``2**W`` states by uniformization.

    Returns ``(prob, states)`` with ``states[s]`` the occupancy of state ``s``.
    The discarded Poisson mass is below ``tail`` in total.
    """
    t = check_time(t)
    rates.check_matches(eta0)
    W = eta0.size
    if W > MAX_EXACT_SITES:
        raise ValueError(f"exact CTMC limited to {MAX_EXACT_SITES} sites, got {W}")
    states = _all_states(W)
    v = np.zeros(1 << W)
    v[int(np.dot(eta0.occupancy.astype(np.int64), 1 << np.arange(W)))] = 1.0
    Q, lam = _generator(rates, eta0.boundary)
    if t == 0.0 or lam == 0.0:
        return v, states
    # Chunks with lam * h <= 20 keep the Poisson weights well scaled.
    chunks = max(1, int(np.ceil(lam * t / 20.0)))
    h = t / chunks
    PT = (sparse.identity(Q.shape[0], format="csr") + Q / lam).T.tocsr()
    mu = lam * h
    kmax = int(poisson.isf(tail / chunks, mu)) + 1
    w = poisson.pmf(np.arange(kmax + 1), mu)
    for _ in range(chunks):
        acc = w[0] * v
        cur = v
        for k in range(1, kmax + 1):
            cur = PT @ cur
            acc += w[k] * cur
        v = acc
    return v, states


def exact_ctmc(eta0, rates, t, observable):
    """Exact ``E[observable(eta_t)]``; ``observable`` maps a Configuration to a float."""
    prob, states = exact_distribution(eta0, rates, t)
    total = 0.0
    for s in np.flatnonzero(prob):
        total += prob[s] * float(observable(eta0.with_occupancy(states[s])))
    return total

"""Threshold detection of fused echoes in Gaussian noise and Rayleigh clutter.

The observation is ``y = mu * [target present] + n + I`` with
``n ~ N(0, sigma_n^2)``, ``I ~ Rayleigh(sigma_i)`` and ``mu`` the fused echo
amplitude ``p_dfc * sum(A_i)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .budget import LinkBudget, NoiseClutterParams, echo_amplitude, receive_gain
from .errors import InputError, QuadratureFailure
from .registration import plan_for_radius
from .scenario import Scenario

CLUTTER_SPAN = 8.0


class RocMethod(enum.Enum):
    NUMERIC = "numeric"
    CASE1 = "case1"
    CASE2 = "case2"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class FusionSignal:
    amplitudes: tuple[float, ...]
    p_dfc: float = 1.0

    def __post_init__(self):
        amps = tuple(float(a) for a in np.atleast_1d(self.amplitudes))
        object.__setattr__(self, "amplitudes", amps)
        if any(not (math.isfinite(a) and a >= 0) for a in amps):
            raise InputError("amplitudes must be finite and non-negative")
        if not 0.0 <= self.p_dfc <= 1.0:
            raise InputError(f"p_dfc must lie in [0, 1], got {self.p_dfc}")

    @property
    def mean(self) -> float:
        return self.p_dfc * sum(self.amplitudes)


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    p_f: np.ndarray
    p_d: np.ndarray
    method: RocMethod

    def __post_init__(self):
        t, pf, pd = (np.asarray(a, dtype=float) for a in (self.thresholds, self.p_f, self.p_d))
        if not (t.shape == pf.shape == pd.shape) or t.ndim != 1:
            raise InputError("thresholds, p_f and p_d must be 1-D arrays of equal length")
        for name, a in (("p_f", pf), ("p_d", pd)):
            if np.any(~np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
                raise InputError(f"{name} must lie in [0, 1]")
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "p_f", pf)
        object.__setattr__(self, "p_d", pd)
        object.__setattr__(self, "method", RocMethod(self.method))

    def __len__(self):
        return len(self.thresholds)


def q_function(x):
    """Standard normal tail probability ``P(Z > x)``."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def q_inverse(p):
    out = math.sqrt(2.0) * special.erfcinv(2.0 * np.asarray(p, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def _exceedance(eta: float, mu: float, nc: NoiseClutterParams) -> float:
    """``P(mu + n + I > eta)`` by quadrature over the clutter amplitude."""
    sn, si = nc.sigma_n, nc.sigma_i
    if si == 0:
        return q_function((eta - mu) / sn)

    def f(y):
        u = y / si
        return (u / si) * math.exp(-u * u / 2) * q_function((eta - mu - y) / sn)

    hi = CLUTTER_SPAN * si
    knee = eta - mu
    points = [knee] if 0 < knee < hi else None
    val, err = integrate.quad(f, 0.0, hi, epsabs=1e-10, epsrel=1e-10, limit=400, points=points)
    if not err <= 1e-6:
        raise QuadratureFailure(f"quadrature error {err:.2e} exceeds 1e-6 at threshold {eta:g}")
    # clutter mass beyond the truncation point, which exceeds any threshold
    # the noise would let through there, bounded by exp(-span^2/2)
    return min(1.0, max(0.0, val + math.exp(-CLUTTER_SPAN**2 / 2) * q_function((eta - mu - hi) / sn)))


def default_thresholds(fusion: FusionSignal, nc: NoiseClutterParams, count: int = 200) -> np.ndarray:
    """Log-spaced thresholds over ``[max(0, mu - 6 s), mu + 6 s]`` with ``s`` the total noise-plus-clutter std."""
    mu = fusion.mean
    s_tot = math.sqrt(nc.p_n + nc.p_i)
    hi = mu + 6 * s_tot
    lo = max(mu - 6 * s_tot, 1e-3 * hi)
    return np.geomspace(lo, hi, count)


def roc_numeric(fusion: FusionSignal, nc: NoiseClutterParams, thresholds=None) -> RocCurve:
    """False-alarm and detection probabilities by numerical integration."""
    t = default_thresholds(fusion, nc) if thresholds is None else np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise InputError("thresholds must be a non-empty 1-D sequence")
    if np.any(np.diff(t) <= 0):
        raise InputError("thresholds must be strictly ascending")
    mu = fusion.mean
    pf = np.array([_exceedance(e, 0.0, nc) for e in t])
    pd = np.array([_exceedance(e, mu, nc) for e in t])
    return RocCurve(t, pf, pd, RocMethod.NUMERIC)


def numeric_threshold(nc: NoiseClutterParams, p_f: float) -> float:
    """Threshold whose noise-plus-clutter exceedance equals ``p_f``."""
    if not 0 < p_f < 1:
        raise InputError("p_f must lie in (0, 1)")
    s = math.sqrt(nc.p_n + nc.p_i)
    lo, hi = -s, s
    while _exceedance(lo, 0.0, nc) < p_f:
        lo -= 4 * s
    while _exceedance(hi, 0.0, nc) > p_f:
        hi += 4 * s
    return optimize.brentq(lambda e: _exceedance(e, 0.0, nc) - p_f, lo, hi, xtol=1e-14 * s, rtol=1e-14)


def roc_numeric_at(fusion: FusionSignal, nc: NoiseClutterParams, p_f_grid) -> RocCurve:
    """Numerical ROC sampled at requested false-alarm rates (thresholds found by root solving)."""
    pf = _pf_grid(p_f_grid)
    eta = np.array([numeric_threshold(nc, p) for p in pf])
    pd = np.array([_exceedance(e, fusion.mean, nc) for e in eta])
    return RocCurve(eta, np.array([_exceedance(e, 0.0, nc) for e in eta]), pd, RocMethod.NUMERIC)


def _pf_grid(p_f_grid) -> np.ndarray:
    pf = np.asarray(p_f_grid, dtype=float)
    if pf.ndim != 1 or pf.size == 0 or np.any(pf <= 0) or np.any(pf >= 1):
        raise InputError("p_f grid must be a non-empty sequence inside (0, 1)")
    return pf


def roc_case1(fusion: FusionSignal, nc: NoiseClutterParams, p_f_grid) -> RocCurve:
    """Closed form with clutter neglected: ``p_d = Q(Q^-1(p_f) - mu / sigma_n)``."""
    pf = _pf_grid(p_f_grid)
    eta = nc.sigma_n * q_inverse(pf)
    pd = q_function((eta - fusion.mean) / nc.sigma_n)
    return RocCurve(eta, pf, pd, RocMethod.CASE1)


def roc_case2(fusion: FusionSignal, nc: NoiseClutterParams, p_f_grid) -> RocCurve:
    """Closed form with noise neglected (Rayleigh clutter only)."""
    pf = _pf_grid(p_f_grid)
    si = nc.sigma_i
    if not si > 0:
        raise InputError("the clutter-only form needs sigma_i > 0")
    mu = fusion.mean
    eta = np.sqrt(-2 * si**2 * np.log(pf))
    knee = math.exp(-(mu**2) / (2 * si**2))
    pd = np.where(pf <= knee, np.exp(-((eta - mu) ** 2) / (2 * si**2)), 1.0)
    return RocCurve(eta, pf, pd, RocMethod.CASE2)


def roc_monte_carlo(
    fusion: FusionSignal,
    nc: NoiseClutterParams,
    thresholds,
    trials: int = 1_000_000,
    seed: int = 0,
    partitions: int = 1,
) -> RocCurve:
    """Empirical exceedance rates from simulated observations.

    Each partition draws from its own child of ``SeedSequence(seed)``, so
    the result depends only on ``(seed, trials, partitions)``.
    """
    t = np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise InputError("thresholds must be a non-empty 1-D sequence")
    if trials < 10_000:
        raise InputError("at least 10^4 trials are required")
    if partitions < 1 or partitions > trials:
        raise InputError("partitions must lie in [1, trials]")
    sizes = [trials // partitions + (1 if i < trials % partitions else 0) for i in range(partitions)]
    over_h0 = np.zeros(t.size, dtype=np.int64)
    over_h1 = np.zeros(t.size, dtype=np.int64)
    mu = fusion.mean
    for size, child in zip(sizes, np.random.SeedSequence(seed).spawn(partitions)):
        rng = np.random.Generator(np.random.PCG64(child))
        for shift, acc in ((0.0, over_h0), (mu, over_h1)):
            y = shift + rng.normal(0.0, nc.sigma_n, size)
            if nc.sigma_i > 0:
                y += rng.rayleigh(nc.sigma_i, size)
            y.sort()
            acc += size - np.searchsorted(y, t, side="right")
    return RocCurve(t, over_h0 / trials, over_h1 / trials, RocMethod.MONTE_CARLO)


@dataclass(frozen=True)
class SweepResult:
    unit_radius: np.ndarray
    p_d: np.ndarray
    echo_prob: float
    p_f: float

    @property
    def argmax(self) -> float:
        return float(self.unit_radius[int(np.argmax(self.p_d))])


def fused_amplitudes(scenario: Scenario, unit_radius: float, echo_prob: float | None = None) -> np.ndarray:
    """Echo amplitude of every RSU for a registered plan of the given unit radius."""
    plan = plan_for_radius(scenario, unit_radius)
    link = scenario.link
    rho = link.echo_prob if echo_prob is None else echo_prob
    amps = []
    for b in plan.beams:
        g_r = receive_gain(math.degrees(b.beam.delta_theta), math.degrees(b.beam.delta_phi))
        lb = LinkBudget(link.pt_gt, link.g_p, g_r, link.wavelength, unit_radius, rho, b.range_r_t)
        amps.append(echo_amplitude(lb))
    return np.array(amps)


def pd_vs_unit_radius(scenario: Scenario, p_f: float, rho: float, r_s_grid, p_dfc: float = 1.0) -> SweepResult:
    """Clutter-free detection probability of the fused echo as the unit radius varies."""
    grid = np.asarray(r_s_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InputError("unit-radius grid must be non-empty")
    if np.any(grid <= 0):
        raise InputError("unit radii must be positive")
    if not 0 < p_f < 1:
        raise InputError("p_f must lie in (0, 1)")
    pd = []
    for r_s in grid:
        fusion = FusionSignal(tuple(fused_amplitudes(scenario, r_s, rho)), p_dfc)
        pd.append(roc_case1(fusion, scenario.noise, [p_f]).p_d[0])
    return SweepResult(grid, np.array(pd), rho, p_f)

"""LCMV weights, beamwidth-adjustable synthesis and pattern metrics.

Directions are ``(phi, theta)`` pairs in radians, matching
:func:`rsucoop.antenna.steering_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .antenna import ArrayGeometry, array_response, steering_matrix, steering_vector
from .errors import (
    AllZeroResponse,
    DimensionMismatch,
    InputError,
    InsufficientCoverage,
    NonFinite,
    SingularSystem,
)
from .geometry import BeamSpec

COND_LIMIT = 1e12
HALF_POWER_BASE = 2 * math.sqrt(2) - 1


# covariance -----------------------------------------------------------------

def check_covariance(R, n: int | None = None) -> np.ndarray:
    """Validate a Hermitian positive-definite covariance matrix."""
    R = np.asarray(R, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DimensionMismatch(f"covariance must be square, got shape {R.shape}")
    if n is not None and R.shape[0] != n:
        raise DimensionMismatch(f"covariance is {R.shape[0]}x{R.shape[0]}, expected {n}x{n}")
    if not np.all(np.isfinite(R)):
        raise NonFinite("covariance contains NaN or Inf")
    scale = max(np.abs(R).max(), 1e-300)
    if np.abs(R - R.conj().T).max() > 1e-10 * scale:
        raise InputError("covariance is not Hermitian")
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError as exc:
        raise InputError("covariance is not positive definite") from exc
    return R


def covariance_from_sources(geom: ArrayGeometry, directions, powers, noise_floor: float = 1.0) -> np.ndarray:
    """``R = sum_k p_k a_k a_k^H + noise_floor * I`` for point interferers."""
    if not noise_floor > 0:
        raise InputError("noise_floor must be positive")
    R = noise_floor * np.eye(geom.element_count, dtype=complex)
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    if len(powers) == 0:
        return R
    A = steering_matrix(geom, directions)
    if A.shape[1] != len(powers):
        raise DimensionMismatch("one power per interferer direction is required")
    if np.any(powers < 0):
        raise InputError("interferer powers must be non-negative")
    return R + (A * powers) @ A.conj().T


# LCMV -------------------------------------------------------------------------

def _whiten(D, R):
    """Return ``R^-1 D``; ``R=None`` means identity."""
    if R is None:
        return D
    R = check_covariance(R, D.shape[0])
    return sla.cho_solve(sla.cho_factor(R, lower=True), D)


def _lcmv(D, RinvD, r_d):
    with np.errstate(all="ignore"):
        G = D.conj().T @ RinvD
    if not np.all(np.isfinite(G)):
        raise NonFinite("D^H R^-1 D contains NaN or Inf")
    if np.linalg.cond(G) > COND_LIMIT:
        raise SingularSystem("D^H R^-1 D is numerically singular")
    w = RinvD @ np.linalg.solve(G, r_d)
    if not np.all(np.isfinite(w)):
        raise NonFinite("LCMV weights contain NaN or Inf")
    return w


def _as_matrix(D):
    D = np.asarray(D, dtype=complex)
    if D.ndim == 1:
        D = D[:, None]
    if D.ndim != 2 or D.shape[1] == 0:
        raise DimensionMismatch(f"steering matrix must be N x l with l >= 1, got {D.shape}")
    return D


def lcmv_weights(D, R, r_d) -> np.ndarray:
    """Minimum-variance weights meeting ``D^H w = r_d``.

    ``w = R^-1 D (D^H R^-1 D)^-1 r_d``. Pass ``R=None`` for white noise.
    """
    D = _as_matrix(D)
    r_d = np.atleast_1d(np.asarray(r_d, dtype=complex))
    if r_d.shape != (D.shape[1],):
        raise DimensionMismatch(f"expected {D.shape[1]} constraint values, got {r_d.shape}")
    return _lcmv(D, _whiten(D, R), r_d)


@dataclass
class LcmvIterations:
    weights: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


def improved_lcmv(D, R, r_ad, i_max: int = 50, tol: float = 1e-6, keep_history: bool = False) -> LcmvIterations:
    """Amplitude-only constrained LCMV.

    Starts from the LCMV solution with real targets ``r_ad`` and then lets
    the constraint phases follow the phases the array actually produces,
    so only ``|D^H w| = r_ad`` is enforced.
    """
    D = _as_matrix(D)
    r_ad = np.atleast_1d(np.asarray(r_ad, dtype=float))
    if r_ad.shape != (D.shape[1],):
        raise DimensionMismatch(f"expected {D.shape[1]} amplitudes, got {r_ad.shape}")
    if np.any(r_ad <= 0):
        raise InputError("desired amplitudes must be strictly positive")
    if i_max < 0:
        raise InputError("i_max must be non-negative")
    RinvD = _whiten(D, R)
    w = _lcmv(D, RinvD, r_ad.astype(complex))
    history = [w] if keep_history else []
    converged = False
    it = 0
    for it in range(1, i_max + 1):
        r = w.conj() @ D
        mag = np.abs(r)
        phase = np.where(mag > 0, r / np.where(mag > 0, mag, 1.0), 1.0)
        w_new = _lcmv(D, RinvD, r_ad * phase.conj())
        if keep_history:
            history.append(w_new)
        change = np.linalg.norm(w_new - w) / max(np.linalg.norm(w), 1e-300)
        w = w_new
        if change < tol:
            converged = True
            break
    return LcmvIterations(w, it, converged, history)


# desired response and grids ---------------------------------------------------

def _grid_points(grid) -> np.ndarray:
    pts = grid.points if isinstance(grid, AngleGrid) else grid
    return np.asarray(pts, dtype=float).reshape(-1, 2)


def desired_amplitude_response(grid, beam: BeamSpec) -> np.ndarray:
    """Smooth mainlobe target equal to 1 on axis and ``1/sqrt(2)`` on the half-power ellipse."""
    pts = _grid_points(grid)
    k = ((pts[:, 1] - beam.theta_r) / (beam.delta_theta / 2)) ** 2 + (
        (pts[:, 0] - beam.phi_r) / (beam.delta_phi / 2)
    ) ** 2
    # power() keeps k = 1 exact: 1 + (2*sqrt2 - 1) rounds back to 2*sqrt2
    with np.errstate(over="ignore"):
        return 2.0 / (1.0 + np.power(HALF_POWER_BASE, k))


@dataclass(frozen=True)
class AngleGrid:
    center: tuple[float, float]
    widths: tuple[float, float]
    points: np.ndarray = field(repr=False)

    def contains(self, points, slack: float = 1e-12) -> np.ndarray:
        """Membership in the rectangle ``[phi_r +- dphi/2] x [theta_r +- dtheta/2]``."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        half = np.asarray(self.widths) / 2 + slack
        return np.all(np.abs(pts - np.asarray(self.center)) <= half, axis=1)


def _axis(center, width, count):
    if count == 1:
        return np.array([center])
    return np.linspace(center - width / 2, center + width / 2, count)


def _lattice(beam, n_phi, n_theta):
    P, T = np.meshgrid(_axis(beam.phi_r, beam.delta_phi, n_phi), _axis(beam.theta_r, beam.delta_theta, n_theta))
    return np.column_stack([P.ravel(), T.ravel()])


def angle_grid(beam: BeamSpec, n: int) -> AngleGrid:
    """``n`` directions on a uniform lattice spanning the requested beam rectangle.

    ``n`` is split into ``n_phi * n_theta`` with the split chosen to follow
    the aspect ratio of the two widths.
    """
    n = int(n)
    if n < 1:
        raise InputError("n must be at least 1")
    target = beam.delta_phi / beam.delta_theta
    best = None
    for n_phi in range(1, n + 1):
        if n % n_phi:
            continue
        n_theta = n // n_phi
        score = abs(math.log(n_phi / n_theta) - math.log(target))
        if best is None or score < best[0]:
            best = (score, n_phi, n_theta)
    _, n_phi, n_theta = best
    return AngleGrid((beam.phi_r, beam.theta_r), (beam.delta_phi, beam.delta_theta), _lattice(beam, n_phi, n_theta))


def default_angle_grid(beam: BeamSpec, step: float | None = None, max_points: int = 25) -> AngleGrid:
    """Lattice with spacing ``min(widths)/4`` (or ``step``), trimmed to ``max_points``."""
    if step is None:
        step = min(beam.delta_phi, beam.delta_theta) / 4
    n_phi = int(math.floor(beam.delta_phi / step + 1e-9)) + 1
    n_theta = int(math.floor(beam.delta_theta / step + 1e-9)) + 1
    while n_phi * n_theta > max_points:
        if n_phi >= n_theta:
            n_phi -= 1
        else:
            n_theta -= 1
    return AngleGrid((beam.phi_r, beam.theta_r), (beam.delta_phi, beam.delta_theta), _lattice(beam, n_phi, n_theta))


# BABA -------------------------------------------------------------------------

@dataclass(frozen=True)
class BabaConfig:
    """Settings for :func:`baba`.

    Attributes
    ----------
    beta : float
        Ridge weight. The fit error is averaged over the fitting grid and
        the penalty is ``beta * N * ||w||^2``, so ``beta`` is measured
        against a matched-filter beam (``||w||^2 = 1/N``, unit peak) and does
        not depend on array size or sampling density.
    grid_step : float or None
        Spacing of the constraint lattice. ``None`` uses ``min(widths)/4``.
    eval_grid_step : float
        Upper bound on the fitting-grid spacing; the grid is refined to
        ``min(widths)/8`` for narrow beams.
    max_points : int
        Cap on the number of lattice directions.
    eval_margin : float
        Half-extent of the fitting window in units of the beamwidth.
    phase_iters, phase_tol
        Limits for the magnitude-fit alternation.
    """

    beta: float = 1e-2
    grid_step: float | None = None
    eval_grid_step: float = math.radians(0.25)
    max_points: int = 25
    eval_margin: float = 1.0
    phase_iters: int = 200
    phase_tol: float = 1e-9
    lcmv_i_max: int = 50
    lcmv_tol: float = 1e-6

    def __post_init__(self):
        if self.beta < 0:
            raise InputError("beta must be non-negative")
        if self.grid_step is not None and not self.grid_step > 0:
            raise InputError("grid_step must be positive")
        if not self.eval_grid_step > 0:
            raise InputError("eval_grid_step must be positive")
        if self.max_points < 1:
            raise InputError("max_points must be at least 1")


def fitting_grid(beam: BeamSpec, cfg: BabaConfig) -> np.ndarray:
    step = min(cfg.eval_grid_step, min(beam.delta_phi, beam.delta_theta) / 8)
    half_phi = cfg.eval_margin * beam.delta_phi
    half_theta = cfg.eval_margin * beam.delta_theta
    n_phi = 2 * int(math.ceil(half_phi / step)) + 1
    n_theta = 2 * int(math.ceil(half_theta / step)) + 1
    phi = np.linspace(beam.phi_r - half_phi, beam.phi_r + half_phi, n_phi)
    theta = np.linspace(beam.theta_r - half_theta, beam.theta_r + half_theta, n_theta)
    P, T = np.meshgrid(phi, theta)
    return np.column_stack([P.ravel(), T.ravel()])


@dataclass
class MagnitudeFit:
    """Result of :func:`fit_magnitude`; ``weights = basis @ coefficients``."""

    weights: np.ndarray
    coefficients: np.ndarray
    objective: float
    iterations: int
    history: list = field(default_factory=list, repr=False)


def magnitude_objective(w, D_eval, r_ad, ridge):
    r = np.abs(w.conj() @ D_eval)
    return float(np.mean((r - r_ad) ** 2) + ridge * np.vdot(w, w).real)


def fit_magnitude(W, D_eval, r_ad, ridge: float, iters: int = 200, tol: float = 1e-9) -> MagnitudeFit:
    """Combine the columns of ``W`` so that ``|w^H D_eval|`` tracks ``r_ad``.

    Minimizes ``mean((|w^H D_eval| - r_ad)**2) + ridge * ||w||^2``
    over ``w = W f``. With the response phases held fixed the problem is a ridge
    regression with a closed-form solution; alternating between that solve
    and a phase update never increases the objective. The start is the best
    single column of ``W``, so the result is at least as good as any of them.
    """
    W = _as_matrix(W)
    if ridge < 0:
        raise InputError("ridge must be non-negative")
    r_ad = np.asarray(r_ad, dtype=float)
    m = len(r_ad)
    # orthonormal basis of span(W); near-duplicate columns would otherwise
    # make the normal equations ill-posed even with a ridge term
    U, s, Vh = np.linalg.svd(W, full_matrices=False)
    keep = s > s[0] * 1e-10 if s[0] > 0 else np.zeros_like(s, dtype=bool)
    if not keep.any():
        raise SingularSystem("basis has no usable columns")
    U = U[:, keep]
    M = D_eval.conj().T @ U  # responses are conj(M c) = (U c)^H D
    A = M.conj().T @ M / m + ridge * np.eye(U.shape[1])
    if np.linalg.cond(A) > COND_LIMIT:
        raise SingularSystem("ridge normal matrix is numerically singular")
    cho = sla.cho_factor(A, lower=True)

    def objective(c):
        return float(np.sum((np.abs(M @ c) - r_ad) ** 2) / m + ridge * np.vdot(c, c).real)

    # best single column, optimally scaled
    best = None
    C = U.conj().T @ W
    for k in range(W.shape[1]):
        g = np.abs(M @ C[:, k])
        energy = np.vdot(C[:, k], C[:, k]).real
        denom = g @ g / m + ridge * energy
        if denom <= 0:
            continue
        scale = (g @ r_ad / m) / denom
        c = scale * C[:, k]
        val = objective(c)
        if best is None or val < best[0]:
            best = (val, c)
    val, c = best
    history = [val]
    it = 0
    for it in range(1, iters + 1):
        g = M @ c
        t = r_ad * np.exp(1j * np.angle(g))
        c = sla.cho_solve(cho, M.conj().T @ t / m)
        new = objective(c)
        history.append(new)
        if val - new <= tol * max(val, 1e-300):
            val = new
            break
        val = new
    w = U @ c
    if not np.all(np.isfinite(w)):
        raise NonFinite("fitted weights contain NaN or Inf")
    f = np.linalg.lstsq(W, w, rcond=None)[0]
    return MagnitudeFit(w, f, val, it, history)


def lattice_weights(beam: BeamSpec, geom: ArrayGeometry, R=None, cfg: BabaConfig = BabaConfig()):
    """Per-direction amplitude-constrained LCMV weights, one column per lattice point."""
    grid = default_angle_grid(beam, cfg.grid_step, cfg.max_points)
    cols = []
    for pt in grid.points:
        a = steering_vector(geom, pt)[:, None]
        cols.append(improved_lcmv(a, R, [1.0], cfg.lcmv_i_max, cfg.lcmv_tol).weights)
    return grid, np.column_stack(cols)


def baba(beam: BeamSpec, geom: ArrayGeometry, R=None, cfg: BabaConfig = BabaConfig()) -> np.ndarray:
    """Weights whose half-power mainlobe follows the requested beam ellipse.

    Parameters
    ----------
    beam : BeamSpec
        Direction ``(theta_r, phi_r)`` and full widths. ``theta_r`` is used
        directly as the array polar angle.
    geom : ArrayGeometry
    R : array_like, optional
        Interference-plus-noise covariance; identity when omitted.
    cfg : BabaConfig
    """
    _, W = lattice_weights(beam, geom, R, cfg)
    pts = fitting_grid(beam, cfg)
    D_eval = steering_matrix(geom, pts)
    r_ad = desired_amplitude_response(pts, beam)
    ridge = cfg.beta * geom.element_count
    return fit_magnitude(W, D_eval, r_ad, ridge, cfg.phase_iters, cfg.phase_tol).weights


# patterns ---------------------------------------------------------------------

@dataclass(frozen=True)
class BeamPattern:
    """Normalized gain on a rectangular ``(phi, theta)`` grid.

    ``gain_db[i, j]`` belongs to ``theta[i]`` and ``phi[j]``.
    """

    phi: np.ndarray
    theta: np.ndarray
    gain_db: np.ndarray

    def points(self) -> np.ndarray:
        P, T = np.meshgrid(self.phi, self.theta)
        return np.column_stack([P.ravel(), T.ravel()])


def pattern_axes(beam: BeamSpec, margin: float = 1.5, cells: int = 40):
    """Axes covering ``margin`` beamwidths on each side with about ``cells`` samples per width."""
    step = min(beam.delta_phi, beam.delta_theta) / cells
    axes = []
    for c, w in ((beam.phi_r, beam.delta_phi), (beam.theta_r, beam.delta_theta)):
        half = margin * w
        n = 2 * int(math.ceil(half / step)) + 1
        axes.append(np.linspace(c - half, c + half, n))
    return tuple(axes)


def beampattern(weights, geom: ArrayGeometry, grid) -> BeamPattern:
    """Evaluate ``20*log10|w^H a|`` on ``grid = (phi_axis, theta_axis)``, peak at 0 dB."""
    phi, theta = (np.atleast_1d(np.asarray(g, dtype=float)) for g in grid)
    if phi.size == 0 or theta.size == 0:
        raise InputError("pattern grid must be non-empty")
    P, T = np.meshgrid(phi, theta)
    r = np.abs(array_response(weights, geom, np.column_stack([P.ravel(), T.ravel()])))
    peak = r.max()
    if not peak > 0:
        raise AllZeroResponse("array response is zero everywhere on the grid")
    with np.errstate(divide="ignore"):
        gain = 20 * np.log10(r / peak)
    return BeamPattern(phi, theta, gain.reshape(T.shape))


@dataclass(frozen=True)
class BeamwidthError:
    e_b: float
    error_area: float
    beam_area: float
    missing_area: float = 0.0
    excess_area: float = 0.0


def beamwidth_error(pattern: BeamPattern, beam: BeamSpec) -> BeamwidthError:
    """Relative area where the half-power region disagrees with the requested ellipse.

    Cells are counted by their centres. Areas are reported in deg^2.

    Raises
    ------
    InsufficientCoverage
        If the grid does not extend one full beamwidth beyond the ellipse.
    """
    phi, theta = pattern.phi, pattern.theta
    need_phi = 1.5 * beam.delta_phi * (1 - 1e-9)
    need_theta = 1.5 * beam.delta_theta * (1 - 1e-9)
    if (
        phi.size < 2
        or theta.size < 2
        or phi.min() > beam.phi_r - need_phi
        or phi.max() < beam.phi_r + need_phi
        or theta.min() > beam.theta_r - need_theta
        or theta.max() < beam.theta_r + need_theta
    ):
        raise InsufficientCoverage("pattern must extend one beamwidth beyond the requested ellipse")
    cell = math.degrees(abs(phi[1] - phi[0])) * math.degrees(abs(theta[1] - theta[0]))
    P, T = np.meshgrid(phi, theta)
    inside = ((T - beam.theta_r) / (beam.delta_theta / 2)) ** 2 + ((P - beam.phi_r) / (beam.delta_phi / 2)) ** 2 <= 1
    level = pattern.gain_db.max() - 10 * math.log10(2)
    lit = pattern.gain_db >= level
    missing = np.count_nonzero(inside & ~lit)
    excess = np.count_nonzero(~inside & lit)
    n_in = np.count_nonzero(inside)
    if n_in == 0:
        raise InsufficientCoverage("grid too coarse to resolve the requested ellipse")
    return BeamwidthError((missing + excess) / n_in, (missing + excess) * cell, n_in * cell, missing * cell, excess * cell)

"""Hybrid analog/digital factorization of beamforming weights.

The digital weights ``F = w^H`` (``N_s x N``) are approximated by
``W_BB @ W_BF`` with a small baseband matrix ``W_BB`` (``N_s x N_RF``) and
an analog stage ``W_BF`` (``N_RF x N``) built from unit-modulus phase
shifters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InputError


@dataclass(frozen=True)
class HbfFactors:
    baseband: np.ndarray
    rf: np.ndarray
    residual: float

    @property
    def n_streams(self) -> int:
        return self.baseband.shape[0]

    @property
    def n_rf_chains(self) -> int:
        return self.rf.shape[0]

    @property
    def product(self) -> np.ndarray:
        return self.baseband @ self.rf

    @property
    def weights(self) -> np.ndarray:
        """Equivalent per-element weights, ``N x N_s`` (one column per stream)."""
        return self.product.conj().T


def normalized_target(w_target) -> np.ndarray:
    """``w^H`` scaled to squared Frobenius norm ``N_s``."""
    w = np.asarray(w_target, dtype=complex)
    if w.ndim == 1:
        w = w[:, None]
    if w.ndim != 2:
        raise DimensionMismatch("target must be a vector or an N x N_s matrix")
    F = w.conj().T
    norm = np.linalg.norm(F)
    if not norm > 0 or not np.isfinite(norm):
        raise InputError("target weights must be finite and not all zero")
    return F * (np.sqrt(F.shape[0]) / norm)


def _baseband(F, rf):
    return np.linalg.lstsq(rf.T, F.T, rcond=None)[0].T


def _two_phase_init(F, n_rf):
    """Exact factorization using two phase shifters per stream."""
    n_s, n = F.shape
    rf = np.exp(2j * np.pi * np.arange(n_rf)[:, None] * np.arange(n)[None, :] / max(n, 1))
    for s in range(n_s):
        mag = np.abs(F[s])
        c = mag.max() / 2
        if c == 0:
            continue
        delta = np.arccos(np.clip(mag / (2 * c), -1.0, 1.0))
        psi = np.angle(F[s])
        rf[2 * s] = np.exp(1j * (psi + delta))
        rf[2 * s + 1] = np.exp(1j * (psi - delta))
    return rf


def _phase_init(F, n_rf):
    n_s = F.shape[0]
    r = np.arange(n_rf)
    return np.exp(1j * (np.angle(F[r % n_s]) + (r // n_s)[:, None] * np.pi / 2))


def _sweep_rows(F, bb, rf):
    """Exact unit-modulus update of each RF row with the others held fixed."""
    E = F - bb @ rf
    for r in range(rf.shape[0]):
        b = bb[:, r]
        if not np.any(b):
            continue
        E = E + np.outer(b, rf[r])
        proj = b.conj() @ E
        rf[r] = np.where(np.abs(proj) > 0, np.exp(1j * np.angle(proj)), rf[r])
        E = E - np.outer(b, rf[r])
    return rf


def _residual(F, bb, rf):
    return float(np.linalg.norm(bb @ rf - F))


def _finish(F, bb, rf):
    P = bb @ rf
    p = np.linalg.norm(P)
    if p > 0:
        bb = bb * (np.sqrt(F.shape[0]) / p)
    return HbfFactors(bb, rf, _residual(F, bb, rf))


def hbf_factorize(w_target, n_rf: int, iters: int = 100, init: HbfFactors | None = None, tol: float = 1e-12) -> HbfFactors:
    """Alternating least-squares / phase-projection hybrid factorization.

    Parameters
    ----------
    w_target : array_like
        Weight vector (``N``) or matrix (``N x N_s``).
    n_rf : int
        Number of RF chains.
    iters : int
        Maximum number of full sweeps.
    init : HbfFactors, optional
        Warm start. A factorization with fewer chains is padded with idle
        chains, so the result is never worse than ``init``.
    tol : float
        Stop when a sweep improves the residual by less than this fraction.

    Returns
    -------
    HbfFactors
        Best factors found, scaled so ``||W_BB W_BF||_F^2 = N_s``.

    Notes
    -----
    With at least two chains per stream every target is reproduced exactly
    by splitting each entry into two unit-modulus terms; that construction
    is always tried as an extra starting point.
    """
    F = normalized_target(w_target)
    n_s, n = F.shape
    n_rf = int(n_rf)
    if n_rf < 1:
        raise InputError("n_rf must be at least 1")
    if init is not None:
        if init.rf.shape[1] != n or init.n_streams != n_s:
            raise DimensionMismatch("warm start does not match the target shape")
        if init.n_rf_chains > n_rf:
            raise InputError("warm start has more RF chains than requested")
        extra = n_rf - init.n_rf_chains
        starts = [np.vstack([init.rf, _phase_init(F, extra)])]
    else:
        starts = [_phase_init(F, n_rf)]
    if n_rf >= 2 * n_s:
        starts.append(_two_phase_init(F, n_rf))
    best = None
    for rf in starts:
        rf = rf.astype(complex)
        bb = _baseband(F, rf)
        res = _residual(F, bb, rf)
        for _ in range(iters):
            if res <= 1e-14:
                break
            rf_new = _sweep_rows(F, bb, rf.copy())
            bb_new = _baseband(F, rf_new)
            res_new = _residual(F, bb_new, rf_new)
            if res_new > res:
                break
            done = res - res_new <= tol * max(res, 1e-300)
            rf, bb, res = rf_new, bb_new, res_new
            if done:
                break
        if best is None or res < best[0]:
            best = (res, bb, rf)
    return _finish(F, best[1], best[2])


def hbf_sweep(w_target, chain_counts, iters: int = 100) -> list[HbfFactors]:
    """Factorize for increasing chain counts, warm-starting each from the last."""
    out = []
    prev = None
    for n_rf in sorted(int(c) for c in chain_counts):
        prev = hbf_factorize(w_target, n_rf, iters, init=prev)
        out.append(prev)
    return out

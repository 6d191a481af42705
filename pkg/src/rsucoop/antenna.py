"""Concentric-ring planar array and its steering vectors.

Elements are ordered with the central phase reference first, then ring by
ring (innermost first), counter-clockwise from +x within each ring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, EmptyDirections, IndexOutOfRange, InputError, PhaseAmbiguity

_SLACK = 1e-12


@dataclass(frozen=True)
class ArrayGeometry:
    """Concentric circular array.

    Attributes
    ----------
    layers_p : int
        Number of layers including the single-element centre (layer 0).
    per_layer : int
        Elements per ring, a power of two.
    spacing_d : float
        Radial distance between adjacent rings in meters.
    wavelength : float
        Carrier wavelength in meters.
    """

    layers_p: int
    per_layer: int
    spacing_d: float
    wavelength: float

    def __post_init__(self):
        if int(self.layers_p) != self.layers_p or self.layers_p < 1:
            raise InputError(f"layers_p must be a positive integer, got {self.layers_p}")
        n = int(self.per_layer)
        if n != self.per_layer or n < 1 or n & (n - 1):
            raise InputError(f"per_layer must be a power of two, got {self.per_layer}")
        if not (self.spacing_d > 0 and self.wavelength > 0):
            raise InputError("spacing and wavelength must be positive")
        half = self.wavelength / 2
        if self.spacing_d > half * (1 + _SLACK):
            raise PhaseAmbiguity(f"radial spacing d={self.spacing_d:g} m exceeds lambda/2={half:g} m")
        chord = 2 * self.spacing_d * math.sin(self.phi_step / 2)
        if chord > half * (1 + _SLACK):
            raise PhaseAmbiguity(
                f"ring chord 2*d*sin(phi_step/2)={chord:g} m exceeds lambda/2={half:g} m"
            )

    @property
    def phi_step(self) -> float:
        return 2 * math.pi / self.per_layer

    @property
    def element_count(self) -> int:
        return 1 + (self.layers_p - 1) * self.per_layer

    @property
    def aperture(self) -> float:
        """Outer diameter in meters."""
        return 2 * (self.layers_p - 1) * self.spacing_d

    @property
    def resolution_limit(self) -> float:
        """Nominal half-power resolution ``lambda / (2 * aperture)`` in radians.

        Returns ``inf`` for a single element.
        """
        return math.inf if self.layers_p == 1 else self.wavelength / (2 * self.aperture)

    @cached_property
    def positions(self) -> np.ndarray:
        """Element coordinates, shape ``(N, 2)``."""
        m = np.repeat(np.arange(1, self.layers_p), self.per_layer)
        n = np.tile(np.arange(self.per_layer), self.layers_p - 1)
        psi = n * self.phi_step
        rings = np.column_stack([np.cos(psi), np.sin(psi)]) * (m * self.spacing_d)[:, None]
        return np.vstack([np.zeros((1, 2)), rings])


def build_array(p: int, b: int, d: float | None = None, wavelength: float = 0.0125) -> ArrayGeometry:
    """Array with ``p`` layers and ``2**b`` elements per ring.

    ``d`` defaults to half a wavelength.
    """
    if int(b) != b or b < 0:
        raise InputError(f"b must be a non-negative integer, got {b}")
    if d is None:
        d = wavelength / 2
    return ArrayGeometry(int(p), 2 ** int(b), float(d), float(wavelength))


def element_position(geom: ArrayGeometry, m: int, n: int) -> np.ndarray:
    if not 0 <= m < geom.layers_p:
        raise IndexOutOfRange(f"layer {m} outside [0, {geom.layers_p})")
    if m == 0:
        if n != 0:
            raise IndexOutOfRange("the centre layer has a single element n=0")
        return np.zeros(2)
    if not 0 <= n < geom.per_layer:
        raise IndexOutOfRange(f"element {n} outside [0, {geom.per_layer})")
    psi = n * geom.phi_step
    return np.array([math.cos(psi), math.sin(psi)]) * (m * geom.spacing_d)


def _directions(directions) -> np.ndarray:
    dirs = np.asarray(directions, dtype=float)
    if dirs.size == 0:
        raise EmptyDirections("at least one direction is required")
    dirs = dirs.reshape(-1, 2)
    if not np.all(np.isfinite(dirs)):
        raise InputError("directions must be finite")
    return dirs


def planar_direction(phi, theta) -> np.ndarray:
    """Planar projection ``(cos(phi) sin(theta), sin(phi) sin(theta))``."""
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([np.cos(phi) * st, np.sin(phi) * st], axis=-1)


def steering_vector(geom: ArrayGeometry, direction) -> np.ndarray:
    """Steering vector for ``direction = (phi, theta)``."""
    return steering_matrix(geom, [direction])[:, 0]


def steering_matrix(geom: ArrayGeometry, directions) -> np.ndarray:
    """Stack steering vectors column-wise, shape ``(N, l)``.

    ``directions`` is a sequence of ``(phi, theta)`` pairs.
    """
    dirs = _directions(directions)
    v = planar_direction(dirs[:, 0], dirs[:, 1])
    k = 2 * math.pi / geom.wavelength
    return np.exp(-1j * k * (geom.positions @ v.T))


def array_response(weights, geom: ArrayGeometry, directions) -> np.ndarray:
    """Complex response ``w^H D`` at each direction.

    Large direction sets are processed in blocks to bound memory.
    """
    w = np.asarray(weights)
    if w.ndim != 1 or w.shape[0] != geom.element_count:
        raise DimensionMismatch(f"expected {geom.element_count} weights, got shape {w.shape}")
    dirs = _directions(directions)
    wc = w.conj()
    block = max(1, 2_000_000 // geom.element_count)
    out = np.empty(len(dirs), dtype=complex)
    for i in range(0, len(dirs), block):
        out[i:i + block] = wc @ steering_matrix(geom, dirs[i:i + block])
    return out

"""Laguerre-Gauss transverse fields and intensity-image rendering.

All modes carry radial index p=0, so the generalized Laguerre polynomial
reduces to 1 and the normalization constant is sqrt(2/(pi*|ell|!)).
The sampling window is a square grid of pixel centers; row 0 is the top
of the image (largest y), column 0 the left edge (smallest x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "BeamGeometry",
    "ModeBasis",
    "PureState",
    "IntensityImage",
    "ImagePair",
    "evaluate_lg",
    "pixel_grid",
    "mode_stack",
    "render_intensity",
    "shift_oam",
    "conjugate_flip",
    "render_pair",
    "downsample",
]

NORM_UNIT_SUM = "unit_sum"
NORM_RAW = "raw"


@dataclass(frozen=True)
class BeamGeometry:
    """Beam and camera parameters for rendering.

    waist: beam waist w0 at the focal plane (arbitrary units).
    wavenumber: k; only enters through curvature/longitudinal phases,
        which vanish at plane_z=0 (the default evaluation plane).
    plane_z: longitudinal position of the sampling plane.
    grid_n: pixels per side of the square sampling window.
    grid_halfwidth: half-extent of the window; defaults to 4*waist.
    """

    waist: float = 1.0
    wavenumber: float = 1.0
    plane_z: float = 0.0
    grid_n: int = 64
    grid_halfwidth: float | None = None

    def __post_init__(self):
        if not (self.waist > 0 and math.isfinite(self.waist)):
            raise ValueError(f"waist must be positive, got {self.waist}")
        if not (self.wavenumber > 0 and math.isfinite(self.wavenumber)):
            raise ValueError(f"wavenumber must be positive, got {self.wavenumber}")
        if self.grid_n < 2:
            raise ValueError(f"grid_n must be >= 2, got {self.grid_n}")
        if self.grid_halfwidth is None:
            object.__setattr__(self, "grid_halfwidth", 4.0 * self.waist)
        if not self.grid_halfwidth > 0:
            raise ValueError("grid_halfwidth must be positive")

    @property
    def rayleigh_range(self) -> float:
        # Always derived from k and w0, never stored.
        return 0.5 * self.wavenumber * self.waist**2

    @property
    def pixel_area(self) -> float:
        return (2.0 * self.grid_halfwidth / self.grid_n) ** 2


@dataclass(frozen=True)
class ModeBasis:
    """Ordered set of azimuthal indices, all with radial index 0."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(l) for l in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) < 1:
            raise ValueError("basis needs at least one mode")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing, got {idx}")

    @property
    def dimension(self) -> int:
        return len(self.indices)

    def shifted(self, delta: int) -> "ModeBasis":
        return ModeBasis(tuple(l + delta for l in self.indices))

    def negated(self) -> "ModeBasis":
        return ModeBasis(tuple(sorted(-l for l in self.indices)))


@dataclass
class PureState:
    """Unit-norm complex coefficients over a mode basis."""

    basis: ModeBasis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        if c.shape != (self.basis.dimension,):
            raise ValueError(
                f"expected {self.basis.dimension} coefficients, got shape {c.shape}"
            )
        if not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("coefficients must be finite")
        norm = np.linalg.norm(c)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"coefficients must have unit norm, got {norm!r}")
        self.coefficients = c

    @property
    def dimension(self) -> int:
        return self.basis.dimension


@dataclass
class IntensityImage:
    """Nonnegative square pixel grid; row 0 = +y edge, column 0 = -x edge."""

    pixels: np.ndarray
    normalization: str = NORM_UNIT_SUM

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"pixels must be a square 2-D grid, got {p.shape}")
        if np.any(p < 0):
            raise ValueError("pixels must be nonnegative")
        if self.normalization not in (NORM_UNIT_SUM, NORM_RAW):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.normalization == NORM_UNIT_SUM and abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("unit_sum image does not sum to 1")
        self.pixels = p

    @property
    def grid_n(self) -> int:
        return self.pixels.shape[0]


@dataclass
class ImagePair:
    """Intensity of a state plus the intensity after the +1 OAM shift."""

    primary: IntensityImage
    shifted: IntensityImage

    def __post_init__(self):
        if self.primary.grid_n != self.shifted.grid_n:
            raise ValueError("pair channels must share the grid size")
        if self.primary.normalization != self.shifted.normalization:
            raise ValueError("pair channels must share the normalization")


def evaluate_lg(
    ell: int,
    rho: np.ndarray | float,
    phi: np.ndarray | float,
    geom: BeamGeometry,
    radial_p: int = 0,
) -> np.ndarray:
    """Complex LG_{0,ell} amplitude at polar coordinates (rho, phi).

    Uses the p=0 closed form

        C/W(z) * (sqrt(2) rho / W(z))^|ell|
            * exp(-rho^2/W^2 + i ell phi
                  - i k rho z / (2 (z^2+z0^2)) + i (|ell|+1) zeta(z))

    with C = sqrt(2/(pi |ell|!)), W(z) the propagated waist, z0 the
    Rayleigh range and zeta the longitudinal mode phase, so the
    continuous mode has unit L2 norm. At z=0 the last two phase terms
    vanish identically.
    """
    if radial_p != 0:
        raise ValueError("only radial index p=0 is supported")
    ell = int(ell)
    rho = np.asarray(rho, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)) or not np.all(np.isfinite(phi)):
        raise ValueError("rho must be finite and nonnegative, phi finite")

    z = geom.plane_z
    z0 = geom.rayleigh_range
    w = geom.waist * math.sqrt(1.0 + (z / z0) ** 2)
    c_norm = math.sqrt(2.0 / (math.pi * math.factorial(abs(ell))))

    radial = (np.sqrt(2.0) * rho / w) ** abs(ell) * np.exp(-(rho**2) / w**2)
    phase = ell * phi
    if z != 0.0:
        phase = phase - geom.wavenumber * rho * z / (2.0 * (z**2 + z0**2))
        phase = phase + (abs(ell) + 1) * math.atan(z / z0)
    return (c_norm / w) * radial * np.exp(1j * phase)


@lru_cache(maxsize=64)
def pixel_grid(geom: BeamGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Polar coordinates (rho, phi) of the pixel centers."""
    n, hw = geom.grid_n, geom.grid_halfwidth
    step = 2.0 * hw / n
    x = -hw + (np.arange(n) + 0.5) * step
    y = hw - (np.arange(n) + 0.5) * step
    xx, yy = np.meshgrid(x, y)
    rho, phi = np.hypot(xx, yy), np.arctan2(yy, xx)
    rho.setflags(write=False)
    phi.setflags(write=False)
    return rho, phi


@lru_cache(maxsize=64)
def mode_stack(basis: ModeBasis, geom: BeamGeometry) -> np.ndarray:
    """Stack of mode amplitudes on the pixel grid, shape (d, grid_n**2).

    Cached: rendering a dataset re-uses one stack per (basis, geometry).
    """
    rho, phi = pixel_grid(geom)
    stack = np.stack(
        [evaluate_lg(l, rho, phi, geom).ravel() for l in basis.indices]
    )
    stack.setflags(write=False)
    return stack


def render_intensity(
    state: PureState,
    geom: BeamGeometry,
    normalization: str = NORM_UNIT_SUM,
    oversample: int = 1,
) -> IntensityImage:
    """Intensity image |sum_l c_l LG_l|^2 sampled at pixel centers.

    oversample > 1 renders on a finer grid (oversample**2 samples per
    pixel) and area-averages back down.
    """
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    render_geom = geom
    if oversample > 1:
        render_geom = BeamGeometry(
            waist=geom.waist,
            wavenumber=geom.wavenumber,
            plane_z=geom.plane_z,
            grid_n=geom.grid_n * oversample,
            grid_halfwidth=geom.grid_halfwidth,
        )
    stack = mode_stack(state.basis, render_geom)
    field = state.coefficients @ stack
    pixels = (field.real**2 + field.imag**2).reshape(
        render_geom.grid_n, render_geom.grid_n
    )
    if oversample > 1:
        return downsample(pixels, geom.grid_n, normalization)
    if normalization == NORM_UNIT_SUM:
        pixels = pixels / pixels.sum()
    return IntensityImage(pixels, normalization)


def shift_oam(state: PureState, delta: int = 1) -> PureState:
    """Raise every azimuthal index by delta, coefficients untouched."""
    return PureState(state.basis.shifted(int(delta)), state.coefficients.copy())


def conjugate_flip(state: PureState) -> PureState:
    """Intensity-degenerate partner: mode l gets conj(coefficient of -l).

    The returned basis is the negation of the input indices (re-sorted);
    for symmetric bases this is the same basis with the coefficient
    vector reversed and conjugated.
    """
    out_basis = state.basis.negated()
    lookup = {l: c for l, c in zip(state.basis.indices, state.coefficients)}
    coeffs = np.array(
        [np.conj(lookup[-l]) for l in out_basis.indices], dtype=np.complex128
    )
    return PureState(out_basis, coeffs)


def render_pair(
    state: PureState,
    geom: BeamGeometry,
    normalization: str = NORM_UNIT_SUM,
    shift_delta: int = 1,
) -> ImagePair:
    """Render the state and its OAM-shifted partner."""
    return ImagePair(
        primary=render_intensity(state, geom, normalization),
        shifted=render_intensity(shift_oam(state, shift_delta), geom, normalization),
    )


def downsample(
    pixels: np.ndarray, target_n: int, normalization: str = NORM_UNIT_SUM
) -> IntensityImage:
    """Area-average pooling onto a target_n x target_n grid.

    Rows/columns are partitioned into contiguous blocks as evenly as
    possible (block i spans [i*H//target, (i+1)*H//target)).
    """
    p = np.asarray(pixels, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("expected a 2-D pixel grid")
    h, w = p.shape
    if target_n > min(h, w):
        raise ValueError(f"cannot downsample {p.shape} to {target_n}")
    row_edges = [(i * h) // target_n for i in range(target_n + 1)]
    col_edges = [(j * w) // target_n for j in range(target_n + 1)]
    out = np.empty((target_n, target_n))
    for i in range(target_n):
        r0, r1 = row_edges[i], row_edges[i + 1]
        block_rows = p[r0:r1]
        for j in range(target_n):
            out[i, j] = block_rows[:, col_edges[j] : col_edges[j + 1]].mean()
    if normalization == NORM_UNIT_SUM:
        out /= out.sum()
    return IntensityImage(out, normalization)

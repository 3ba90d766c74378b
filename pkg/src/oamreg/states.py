"""Qudit state algebra: generalized Gell-Mann basis, Bloch vectors,
nearest-pure projection, fidelity and state sampling.

Generator conventions (dimension d, q = d^2-1 generators):
    * symmetric off-diagonal E_jk + E_kj for j<k, lexicographic (j,k);
    * antisymmetric -i E_jk + i E_kj, same order;
    * d-1 diagonal generators sqrt(2/(l(l+1))) diag(1,...,1,-l,0,...)
      for l = 1..d-1.
All generators are Hermitian, traceless and satisfy tr(G_i G_j) = 2 delta_ij;
for d=2 this is exactly (sigma_x, sigma_y, sigma_z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .optics import ModeBasis, PureState

__all__ = [
    "GGMBasis",
    "BlochVector",
    "DensityMatrix",
    "NearestPureResult",
    "ggm_basis",
    "state_to_bloch",
    "bloch_components",
    "bloch_to_density",
    "density_to_bloch",
    "nearest_pure",
    "fidelity",
    "haar_random",
    "haar_coefficients",
    "family_state",
    "pure_bloch_norm_sq",
]


@dataclass(frozen=True)
class GGMBasis:
    dimension: int
    matrices: np.ndarray  # (d^2-1, d, d) complex, trace-orthogonal x2


@dataclass
class BlochVector:
    """Real generator expectation values; length d^2-1."""

    dimension: int
    components: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=np.float64)
        if c.shape != (self.dimension**2 - 1,):
            raise ValueError(
                f"expected {self.dimension ** 2 - 1} components, got {c.shape}"
            )
        self.components = c


@dataclass
class DensityMatrix:
    dimension: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.shape != (self.dimension, self.dimension):
            raise ValueError(f"expected ({self.dimension},)*2 matrix, got {m.shape}")
        self.entries = m


@dataclass
class NearestPureResult:
    state: PureState
    degenerate: bool


def pure_bloch_norm_sq(d: int) -> float:
    """Squared Bloch norm of any pure state: 2(1 - 1/d)."""
    return 2.0 * (1.0 - 1.0 / d)


@lru_cache(maxsize=32)
def _generators(d: int) -> np.ndarray:
    if not 2 <= d <= 16:
        raise ValueError(f"dimension must be in [2, 16], got {d}")
    mats = []
    for j in range(d):
        for k in range(j + 1, d):
            g = np.zeros((d, d), dtype=np.complex128)
            g[j, k] = 1.0
            g[k, j] = 1.0
            mats.append(g)
    for j in range(d):
        for k in range(j + 1, d):
            g = np.zeros((d, d), dtype=np.complex128)
            g[j, k] = -1.0j
            g[k, j] = 1.0j
            mats.append(g)
    for l in range(1, d):
        g = np.zeros((d, d), dtype=np.complex128)
        g[np.arange(l), np.arange(l)] = 1.0
        g[l, l] = -l
        mats.append(math.sqrt(2.0 / (l * (l + 1))) * g)
    out = np.stack(mats)
    out.setflags(write=False)
    return out


def ggm_basis(d: int) -> GGMBasis:
    """The d^2-1 generalized Gell-Mann generators in the declared order."""
    return GGMBasis(dimension=d, matrices=_generators(d))


def state_to_bloch(state: PureState) -> BlochVector:
    """b_i = <psi| G_i |psi>; invariant under global phase."""
    d = state.dimension
    comps = bloch_components(state.coefficients[None, :])[0]
    return BlochVector(dimension=d, components=comps)


def bloch_components(coefficients: np.ndarray) -> np.ndarray:
    """Bloch vectors of a batch of coefficient rows, shape (n, d^2-1)."""
    c = np.asarray(coefficients, dtype=np.complex128)
    g = _generators(c.shape[1])
    return np.einsum("nd,qde,ne->nq", c.conj(), g, c).real


def bloch_to_density(b: BlochVector) -> DensityMatrix:
    """rho = I/d + (1/2) sum_i b_i G_i; Hermitian with unit trace."""
    d = b.dimension
    g = _generators(d)
    rho = np.eye(d, dtype=np.complex128) / d
    rho += 0.5 * np.tensordot(b.components, g, axes=(0, 0))
    return DensityMatrix(dimension=d, entries=rho)


def density_to_bloch(rho: DensityMatrix, herm_tol: float = 1e-8) -> BlochVector:
    """b_i = tr(rho G_i), taken on the Hermitized matrix."""
    m = rho.entries
    if np.max(np.abs(m - m.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian within tolerance")
    m = 0.5 * (m + m.conj().T)
    g = _generators(rho.dimension)
    comps = np.einsum("qde,ed->q", g, m).real
    return BlochVector(dimension=rho.dimension, components=comps)


def _canonical_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-|.| entry is real positive."""
    k = int(np.argmax(np.abs(vec)))
    ph = vec[k] / abs(vec[k]) if abs(vec[k]) > 0 else 1.0
    return vec / ph


def nearest_pure(
    b: BlochVector, basis: ModeBasis, degeneracy_gap: float = 1e-12
) -> NearestPureResult:
    """Top eigenvector of the reconstructed density matrix.

    Maximizes <psi|rho|psi> over unit vectors, i.e. the Frobenius-nearest
    rank-1 unit-trace projector. A degenerate top eigenvalue (gap below
    degeneracy_gap) is flagged; the eigenvector returned is then the
    eigendecomposition's canonical one.
    """
    if basis.dimension != b.dimension:
        raise ValueError("basis dimension does not match Bloch vector")
    if not np.all(np.isfinite(b.components)):
        raise ValueError("Bloch components must be finite")
    rho = bloch_to_density(b).entries
    rho = 0.5 * (rho + rho.conj().T)
    evals, evecs = np.linalg.eigh(rho)
    vec = _canonical_phase(evecs[:, -1])
    vec = vec / np.linalg.norm(vec)
    gap = evals[-1] - evals[-2]
    return NearestPureResult(
        state=PureState(basis, vec), degenerate=bool(gap < degeneracy_gap)
    )


def fidelity(psi: PureState, phi: PureState) -> float:
    """|<psi|phi>|^2, clamped to [0, 1]."""
    if psi.basis != phi.basis:
        raise ValueError(
            f"basis mismatch: {psi.basis.indices} vs {phi.basis.indices}"
        )
    overlap = np.vdot(psi.coefficients, phi.coefficients)
    return float(min(1.0, max(0.0, abs(overlap) ** 2)))


def haar_coefficients(d: int, rng: np.random.Generator) -> np.ndarray:
    """One Haar-random coefficient vector (normalized complex Gaussians)."""
    c = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return c / np.linalg.norm(c)


def haar_random(basis: ModeBasis, rng: np.random.Generator | int) -> PureState:
    """Haar-random pure state on the given basis; deterministic per seed."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return PureState(basis, haar_coefficients(basis.dimension, rng))


def family_state(theta: float, phi: float) -> PureState:
    """One-qubit family sin(theta/2) e^{i phi}|-1> + cos(theta/2)|+1>.

    theta=0 gives |+1>; theta=pi gives e^{i phi}|-1>, whose intensity
    image is independent of phi.
    """
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must be in [0, pi]")
    coeffs = np.array(
        [math.sin(theta / 2.0) * np.exp(1j * phi), math.cos(theta / 2.0) + 0j]
    )
    coeffs = coeffs / np.linalg.norm(coeffs)
    return PureState(ModeBasis((-1, 1)), coeffs)

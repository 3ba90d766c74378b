"""Principal component analysis with pinned, reproducible semantics.

Reference semantics: SVD of the row-centered data matrix. The
covariance-eigendecomposition path is used automatically when there are
at least as many samples as features (cheaper for wide image matrices)
and agrees with the SVD path to high accuracy on well-conditioned data.
Component rows carry a deterministic sign (largest-magnitude entry
positive), so refitting identical data reproduces the identical model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["PCAModel", "pca_fit", "pca_transform", "pca_inverse", "truncate"]


@dataclass(frozen=True)
class PCAModel:
    input_dim: int
    n_components: int
    mean: np.ndarray  # (input_dim,)
    components: np.ndarray  # (n_components, input_dim), orthonormal rows
    singular_values: np.ndarray  # (n_components,), nonincreasing
    explained_variance_ratio: np.ndarray  # (n_components,)
    n_samples: int
    whiten: bool = False


def _apply_sign_convention(components: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca_fit(
    data: np.ndarray,
    n_components: int,
    method: str = "auto",
    whiten: bool = False,
) -> PCAModel:
    """Fit the top n_components principal directions of `data`.

    data: (samples, features) real matrix.
    method: "svd" (reference), "covariance", or "auto".
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("data must be 2-D (samples x features)")
    n_samples, n_feat = x.shape
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    if not 1 <= n_components <= min(n_samples - 1, n_feat):
        raise ValueError(
            f"n_components must be in [1, {min(n_samples - 1, n_feat)}], "
            f"got {n_components}"
        )
    if method == "auto":
        method = "covariance" if n_samples >= n_feat else "svd"

    mean = x.mean(axis=0)
    xc = x - mean
    total_var = float(np.einsum("ij,ij->", xc, xc))

    if method == "svd":
        _, s, vt = np.linalg.svd(xc, full_matrices=False)
        comps = vt[:n_components]
        sing = s[:n_components]
    elif method == "covariance":
        cov = xc.T @ xc
        evals, evecs = np.linalg.eigh(cov)
        order = np.arange(n_feat - 1, n_feat - 1 - n_components, -1)
        comps = evecs[:, order].T
        sing = np.sqrt(np.clip(evals[order], 0.0, None))
    else:
        raise ValueError(f"unknown method {method!r}")

    comps = np.ascontiguousarray(_apply_sign_convention(comps))
    evr = sing**2 / total_var if total_var > 0 else np.zeros_like(sing)
    return PCAModel(
        input_dim=n_feat,
        n_components=n_components,
        mean=mean,
        components=comps,
        singular_values=sing,
        explained_variance_ratio=evr,
        n_samples=n_samples,
        whiten=whiten,
    )


def _latent_scale(model: PCAModel) -> np.ndarray:
    # unit-variance latents; zero-variance directions left unscaled
    s = model.singular_values / np.sqrt(max(model.n_samples - 1, 1))
    return np.where(s > 0, s, 1.0)


def pca_transform(model: PCAModel, x: np.ndarray) -> np.ndarray:
    """Latent coordinates components @ (x - mean); accepts batches."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"expected last axis {model.input_dim}, got {x.shape}")
    y = (x - model.mean) @ model.components.T
    if model.whiten:
        y = y / _latent_scale(model)
    return y


def pca_inverse(model: PCAModel, y: np.ndarray) -> np.ndarray:
    """Reconstruction mean + components^T @ y; accepts batches."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != model.n_components:
        raise ValueError(f"expected last axis {model.n_components}, got {y.shape}")
    if model.whiten:
        y = y * _latent_scale(model)
    return model.mean + y @ model.components


def truncate(model: PCAModel, n_components: int) -> PCAModel:
    """Keep the leading n_components (principal subspaces are nested)."""
    if not 1 <= n_components <= model.n_components:
        raise ValueError(
            f"n_components must be in [1, {model.n_components}], got {n_components}"
        )
    return replace(
        model,
        n_components=n_components,
        components=model.components[:n_components],
        singular_values=model.singular_values[:n_components],
        explained_variance_ratio=model.explained_variance_ratio[:n_components],
    )

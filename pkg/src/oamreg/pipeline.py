"""End-to-end orchestration: dataset synthesis, dual-PCA + regression
training, prediction, fidelity evaluation and the analysis sweeps.

Random streams are derived from the dataset seed with fixed tags
(state i -> [seed, 0, i], noise i -> [seed, 1, i], split -> [seed, 2]),
so datasets are reproducible sample-by-sample regardless of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import pca as pca_mod
from . import regress
from .optics import (
    NORM_UNIT_SUM,
    BeamGeometry,
    ImagePair,
    IntensityImage,
    ModeBasis,
    PureState,
    conjugate_flip,
    downsample,
    render_intensity,
    shift_oam,
)
from .states import (
    BlochVector,
    NearestPureResult,
    bloch_components,
    family_state,
    haar_coefficients,
    nearest_pure,
)

__all__ = [
    "NoiseSpec",
    "DatasetConfig",
    "Dataset",
    "PipelineModel",
    "FidelityStats",
    "PredictionResult",
    "SweepPoint",
    "SymmetryReport",
    "CircleFit",
    "GeometryReport",
    "symmetric_basis",
    "split_total_dims",
    "as_single",
    "generate_dataset",
    "fit_pipeline",
    "predict_state",
    "evaluate",
    "sweep_latent_dims",
    "symmetry_analysis",
    "latent_geometry",
    "ingest_images",
]

MODE_SINGLE = "single"
MODE_PAIR = "pair"

# Symmetric (negation-closed) index sets. The "spaced" family matches the
# four-mode experimental basis {-3,-1,+1,+3} and its odd-dimensional
# analogues; the "spread" family uses pairwise-distinct magnitude sums
# (1, 2, 5, 11, ...) so that no two mode-product terms share a pixel
# profile at the focal plane, which keeps the two-image measurement
# informationally complete in high dimensions.
_SPREAD_MAGNITUDES = (1, 2, 5, 11, 22, 40, 56, 81)


def symmetric_basis(d: int, family: str = "spaced") -> ModeBasis:
    """A negation-closed d-mode basis; family is "spaced" or "spread"."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    half = d // 2
    if family == "spaced":
        start = 1 if d % 2 == 0 else 2
        mags = tuple(range(start, 2 * half + 1, 2))
    elif family == "spread":
        mags = _SPREAD_MAGNITUDES[:half]
    else:
        raise ValueError(f"unknown family {family!r}")
    indices = sorted(set([-m for m in mags] + list(mags)) | ({0} if d % 2 else set()))
    return ModeBasis(tuple(indices))


@dataclass(frozen=True)
class NoiseSpec:
    """Synthetic detection imperfections, applied per channel in the
    order: rigid center jitter, Poisson resampling, additive Gaussian,
    clamp at zero, unit-sum renormalization."""

    gaussian_sigma: float = 0.0
    poisson_scale: float | None = None
    center_jitter_pixels: float = 0.0

    def __post_init__(self):
        if self.gaussian_sigma < 0 or self.center_jitter_pixels < 0:
            raise ValueError("noise magnitudes must be nonnegative")
        if self.poisson_scale is not None and self.poisson_scale <= 0:
            raise ValueError("poisson_scale must be positive when set")
        if not self.active:
            raise ValueError("NoiseSpec present but no field is active")

    @property
    def active(self) -> bool:
        return (
            self.gaussian_sigma > 0
            or self.poisson_scale is not None
            or self.center_jitter_pixels > 0
        )


@dataclass(frozen=True)
class DatasetConfig:
    basis: ModeBasis
    n_samples: int = 10000
    geometry: BeamGeometry = field(default_factory=BeamGeometry)
    image_mode: str = MODE_PAIR
    noise: NoiseSpec | None = None
    seed: int = 0
    train_fraction: float = 0.8
    shift_delta: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.image_mode not in (MODE_SINGLE, MODE_PAIR):
            raise ValueError(f"unknown image_mode {self.image_mode!r}")


@dataclass
class Dataset:
    """Parallel arrays of states, rendered images and Bloch targets.

    Images are flattened row-major to (n_samples, grid_n**2) and always
    unit-sum normalized. `coefficients`/`targets` are None for ingested
    prediction-only data.
    """

    config: DatasetConfig
    coefficients: np.ndarray | None  # (n, d) complex
    images_primary: np.ndarray  # (n, grid_n^2) float64
    images_shifted: np.ndarray | None
    targets: np.ndarray | None  # (n, d^2-1) float64
    train_indices: np.ndarray
    test_indices: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.images_primary.shape[0]

    @property
    def dimension(self) -> int:
        return self.config.basis.dimension

    @property
    def grid_n(self) -> int:
        return self.config.geometry.grid_n

    def state(self, i: int) -> PureState:
        if self.coefficients is None:
            raise ValueError("dataset carries no target states")
        return PureState(self.config.basis, self.coefficients[i])

    @property
    def states(self) -> list[PureState]:
        return [self.state(i) for i in range(self.n_samples)]

    def image(self, i: int) -> IntensityImage | ImagePair:
        g = self.grid_n
        primary = IntensityImage(self.images_primary[i].reshape(g, g))
        if self.images_shifted is None:
            return primary
        return ImagePair(
            primary=primary,
            shifted=IntensityImage(self.images_shifted[i].reshape(g, g)),
        )


def _translate_bilinear(img: np.ndarray, dy: float, dx: float) -> np.ndarray:
    """Rigid sub-pixel translation with zero fill outside the window."""
    n, m = img.shape
    iy, ix = math.floor(dy), math.floor(dx)
    fy, fx = dy - iy, dx - ix
    out = np.zeros_like(img)
    for oy, ox, w in (
        (iy, ix, (1 - fy) * (1 - fx)),
        (iy, ix + 1, (1 - fy) * fx),
        (iy + 1, ix, fy * (1 - fx)),
        (iy + 1, ix + 1, fy * fx),
    ):
        if w == 0.0:
            continue
        ys = slice(max(0, oy), min(n, n + oy))
        xs = slice(max(0, ox), min(m, m + ox))
        ys_src = slice(max(0, -oy), min(n, n - oy))
        xs_src = slice(max(0, -ox), min(m, m - ox))
        out[ys, xs] += w * img[ys_src, xs_src]
    return out


def _apply_noise(
    pixels: np.ndarray, noise: NoiseSpec, rng: np.random.Generator
) -> np.ndarray:
    img = pixels
    if noise.center_jitter_pixels > 0:
        dy, dx = rng.normal(0.0, noise.center_jitter_pixels, size=2)
        img = _translate_bilinear(img, dy, dx)
    if noise.poisson_scale is not None:
        img = rng.poisson(img * noise.poisson_scale).astype(np.float64)
        img /= noise.poisson_scale
    if noise.gaussian_sigma > 0:
        img = img + noise.gaussian_sigma * img.max() * rng.standard_normal(img.shape)
    img = np.clip(img, 0.0, None)
    total = img.sum()
    if total <= 0:
        # pathological noise draw; fall back to a flat frame
        return np.full_like(img, 1.0 / img.size)
    return img / total


def _split_indices(
    n_samples: int, train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([seed, 2])
    perm = rng.permutation(n_samples)
    n_train = int(round(train_fraction * n_samples))
    n_train = min(max(n_train, 1), n_samples - 1)
    return perm[:n_train].copy(), perm[n_train:].copy()


def generate_dataset(config: DatasetConfig) -> Dataset:
    """Haar-sample states, render image (pair)s, attach Bloch targets."""
    if config.n_samples < 10:
        raise ValueError("generation needs n_samples >= 10")
    basis, geom = config.basis, config.geometry
    d = basis.dimension
    n = config.n_samples
    npix = geom.grid_n**2
    pair = config.image_mode == MODE_PAIR

    coeffs = np.empty((n, d), dtype=np.complex128)
    primary = np.empty((n, npix))
    shifted = np.empty((n, npix)) if pair else None
    for i in range(n):
        rng_state = np.random.default_rng([config.seed, 0, i])
        coeffs[i] = haar_coefficients(d, rng_state)
        state = PureState(basis, coeffs[i])
        img = render_intensity(state, geom, NORM_UNIT_SUM)
        channels = [img.pixels]
        if pair:
            channels.append(
                render_intensity(
                    shift_oam(state, config.shift_delta), geom, NORM_UNIT_SUM
                ).pixels
            )
        if config.noise is not None and config.noise.active:
            rng_noise = np.random.default_rng([config.seed, 1, i])
            channels = [_apply_noise(c, config.noise, rng_noise) for c in channels]
        primary[i] = channels[0].ravel()
        if pair:
            shifted[i] = channels[1].ravel()

    targets = bloch_components(coeffs)
    train_idx, test_idx = _split_indices(n, config.train_fraction, config.seed)
    return Dataset(
        config=config,
        coefficients=coeffs,
        images_primary=primary,
        images_shifted=shifted,
        targets=targets,
        train_indices=train_idx,
        test_indices=test_idx,
    )


@dataclass
class PipelineModel:
    """Fitted compressor(s) plus regressor and enough metadata to predict."""

    basis: ModeBasis
    geometry: BeamGeometry
    image_mode: str
    pca_primary: pca_mod.PCAModel
    pca_shifted: pca_mod.PCAModel | None
    regressor_kind: str  # "linear" | "etr"
    linear: regress.LinearModel | None
    etr: regress.ETRModel | None
    n_latent: tuple[int, int]  # (primary, shifted); shifted 0 in single mode
    joint_pca: bool = False  # one PCA over concatenated channels (ablation)
    seed: int = 0
    n_train: int = 0

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def total_latent(self) -> int:
        return self.n_latent[0] + self.n_latent[1]


def split_total_dims(total: int) -> tuple[int, int]:
    """Split a total latent budget across the two channels (ceil, floor)."""
    if total < 2:
        raise ValueError("pair mode needs a total latent budget >= 2")
    n1 = (total + 1) // 2
    return n1, total - n1


def _resolve_latent(n_latent, image_mode: str) -> tuple[int, int]:
    if isinstance(n_latent, tuple):
        n1, n2 = int(n_latent[0]), int(n_latent[1])
    else:
        n1 = n2 = int(n_latent)
    if image_mode == MODE_SINGLE:
        n2 = 0
    if n1 < 1 or (image_mode == MODE_PAIR and n2 < 1):
        raise ValueError("latent budget must be >= 1 per active channel")
    return n1, n2


def _fit_regressor(kind, latents, targets, ridge_lambda, etr_options):
    if kind == "linear":
        model = regress.linfit(latents, targets, ridge_lambda)
        if ridge_lambda == 0.0 and model.rank_deficient:
            # conditioning guard: tiny ridge scaled to the latent energy
            zc = latents - latents.mean(axis=0)
            scale = float(np.einsum("ij,ij->", zc, zc)) / max(latents.shape[1], 1)
            model = regress.linfit(latents, targets, 1e-8 * scale)
            model.rank_deficient = True
        return model, None
    if kind == "etr":
        return None, regress.etr_fit(latents, targets, **(etr_options or {}))
    raise ValueError(f"unknown regressor kind {kind!r}")


def fit_pipeline(
    dataset: Dataset,
    n_latent_per_channel: int | tuple[int, int],
    regressor_kind: str = "linear",
    ridge_lambda: float = 0.0,
    etr_options: dict | None = None,
    pca_method: str = "auto",
    joint_pca: bool = False,
) -> PipelineModel:
    """Fit per-channel PCAs on the training split, then the regressor.

    In pair mode the two channels get independent PCA models and their
    latents are concatenated (primary first) before regression.
    joint_pca=True instead fits one PCA on the concatenated pixel
    vectors with the summed latent budget (ablation variant).
    """
    if dataset.targets is None:
        raise ValueError("dataset has no targets; cannot train")
    image_mode = (
        MODE_PAIR if dataset.images_shifted is not None else MODE_SINGLE
    )
    n1, n2 = _resolve_latent(n_latent_per_channel, image_mode)
    tr = dataset.train_indices
    if tr.size == 0:
        raise ValueError("empty training split")

    p2 = None
    if joint_pca and n2 > 0:
        stacked = np.hstack([dataset.images_primary[tr], dataset.images_shifted[tr]])
        p1 = pca_mod.pca_fit(stacked, n1 + n2, method=pca_method)
        latents = pca_mod.pca_transform(p1, stacked)
    else:
        joint_pca = False
        p1 = pca_mod.pca_fit(dataset.images_primary[tr], n1, method=pca_method)
        parts = [pca_mod.pca_transform(p1, dataset.images_primary[tr])]
        if n2 > 0:
            p2 = pca_mod.pca_fit(dataset.images_shifted[tr], n2, method=pca_method)
            parts.append(pca_mod.pca_transform(p2, dataset.images_shifted[tr]))
        latents = np.hstack(parts)
    linear, etr = _fit_regressor(
        regressor_kind, latents, dataset.targets[tr], ridge_lambda, etr_options
    )
    return PipelineModel(
        basis=dataset.config.basis,
        geometry=dataset.config.geometry,
        image_mode=image_mode if n2 > 0 else MODE_SINGLE,
        pca_primary=p1,
        pca_shifted=p2,
        regressor_kind=regressor_kind,
        linear=linear,
        etr=etr,
        n_latent=(n1, n2),
        joint_pca=joint_pca,
        seed=dataset.config.seed,
        n_train=int(tr.size),
    )


def _model_latents(
    model: PipelineModel, primary_flat: np.ndarray, shifted_flat: np.ndarray | None
) -> np.ndarray:
    if model.joint_pca:
        if shifted_flat is None:
            raise ValueError("model expects an image pair")
        stacked = np.hstack([np.atleast_2d(primary_flat), np.atleast_2d(shifted_flat)])
        return pca_mod.pca_transform(model.pca_primary, stacked)
    parts = [pca_mod.pca_transform(model.pca_primary, primary_flat)]
    if model.pca_shifted is not None:
        if shifted_flat is None:
            raise ValueError("model expects an image pair")
        parts.append(pca_mod.pca_transform(model.pca_shifted, shifted_flat))
    return np.hstack(parts)


def _raw_predict(model: PipelineModel, latents: np.ndarray) -> np.ndarray:
    if model.regressor_kind == "linear":
        return regress.linpredict(model.linear, latents)
    return regress.etr_predict(model.etr, latents)


@dataclass
class PredictionResult:
    state: PureState
    raw_bloch: BlochVector
    degenerate: bool


def predict_state(
    model: PipelineModel, images: ImagePair | IntensityImage
) -> PredictionResult:
    """Compress, regress, then project onto the nearest pure state."""
    if isinstance(images, ImagePair):
        if model.image_mode != MODE_PAIR:
            raise ValueError("model was trained on single images")
        primary, shifted = images.primary, images.shifted
    else:
        if model.image_mode == MODE_PAIR:
            raise ValueError("model expects an image pair")
        primary, shifted = images, None
    if primary.grid_n != model.geometry.grid_n:
        raise ValueError(
            f"grid mismatch: image {primary.grid_n}, model {model.geometry.grid_n}"
        )
    lat = _model_latents(
        model,
        primary.pixels.ravel()[None, :],
        None if shifted is None else shifted.pixels.ravel()[None, :],
    )
    raw = _raw_predict(model, lat)[0]
    b = BlochVector(dimension=model.dimension, components=raw)
    res: NearestPureResult = nearest_pure(b, model.basis)
    return PredictionResult(state=res.state, raw_bloch=b, degenerate=res.degenerate)


@dataclass
class FidelityStats:
    fidelities: np.ndarray
    mean: float
    stderr: float
    degenerate_count: int

    @classmethod
    def from_fidelities(cls, f: np.ndarray, degenerate_count: int = 0):
        f = np.asarray(f, dtype=np.float64)
        sem = float(f.std(ddof=1) / math.sqrt(f.size)) if f.size > 1 else 0.0
        return cls(
            fidelities=f,
            mean=float(f.mean()),
            stderr=sem,
            degenerate_count=degenerate_count,
        )


def _batch_project(raw: np.ndarray, basis: ModeBasis) -> tuple[np.ndarray, int]:
    """Nearest-pure coefficients for each raw Bloch row."""
    d = basis.dimension
    out = np.empty((raw.shape[0], d), dtype=np.complex128)
    degenerate = 0
    for i in range(raw.shape[0]):
        res = nearest_pure(BlochVector(d, raw[i]), basis)
        out[i] = res.state.coefficients
        degenerate += int(res.degenerate)
    return out, degenerate


def _flip_coefficient_rows(coeffs: np.ndarray, basis: ModeBasis) -> np.ndarray:
    if basis.negated() != basis:
        raise ValueError(
            "flipped-target evaluation needs a negation-closed basis"
        )
    # symmetric basis: mode l takes conj(coefficient of -l)
    return coeffs[:, ::-1].conj()


def evaluate(
    model: PipelineModel,
    dataset: Dataset,
    against: str = "correct",
    subset: str = "test",
) -> FidelityStats:
    """Mean fidelity of predictions on a dataset split.

    against="flipped" scores each prediction against the conjugate-flip
    partner of the true state instead of the state itself.
    """
    if dataset.targets is None or dataset.coefficients is None:
        raise ValueError("dataset has no targets; nothing to evaluate against")
    if dataset.config.basis != model.basis:
        raise ValueError("dataset and model disagree on the mode basis")
    if against not in ("correct", "flipped"):
        raise ValueError(f"unknown target kind {against!r}")
    if subset == "test":
        idx = dataset.test_indices
    elif subset == "train":
        idx = dataset.train_indices
    else:
        raise ValueError(f"unknown subset {subset!r}")

    shifted = None if dataset.images_shifted is None else dataset.images_shifted[idx]
    if model.image_mode == MODE_PAIR and shifted is None:
        raise ValueError("model expects pairs but dataset is single-image")
    lat = _model_latents(
        model,
        dataset.images_primary[idx],
        shifted if model.image_mode == MODE_PAIR else None,
    )
    raw = _raw_predict(model, lat)
    pred, degenerate = _batch_project(raw, model.basis)
    ref = dataset.coefficients[idx]
    if against == "flipped":
        ref = _flip_coefficient_rows(ref, model.basis)
    fid = np.abs(np.einsum("nd,nd->n", pred.conj(), ref)) ** 2
    return FidelityStats.from_fidelities(np.clip(fid, 0.0, 1.0), degenerate)


@dataclass
class SweepPoint:
    total_dims: int
    mode: str
    regressor: str
    mean_fidelity: float
    stderr: float
    n_test: int


def sweep_latent_dims(
    dataset: Dataset,
    total_dims: list[int],
    regressor_kind: str = "linear",
    modes: tuple[str, ...] = (MODE_PAIR,),
    ridge_lambda: float = 0.0,
    etr_options: dict | None = None,
    pca_method: str = "auto",
) -> list[SweepPoint]:
    """Fidelity as a function of the total latent dimension.

    One PCA per channel is fitted at the largest requested budget and
    truncated per sweep point (principal subspaces are nested); the
    regressor is refitted at every point.
    """
    dims = [int(t) for t in total_dims]
    if any(b <= a for a, b in zip(dims, dims[1:])) or min(dims) < 1:
        raise ValueError("total_dims must be positive and ascending")
    if dataset.targets is None:
        raise ValueError("dataset has no targets")
    tr, te = dataset.train_indices, dataset.test_indices
    points: list[SweepPoint] = []
    for mode in modes:
        if mode == MODE_PAIR and dataset.images_shifted is None:
            raise ValueError("pair-mode sweep needs a pair dataset")
        if mode == MODE_PAIR:
            budgets = [split_total_dims(t) for t in dims]
        else:
            budgets = [(t, 0) for t in dims]
        max1 = max(b[0] for b in budgets)
        max2 = max(b[1] for b in budgets)
        p1 = pca_mod.pca_fit(dataset.images_primary[tr], max1, method=pca_method)
        z1_tr = pca_mod.pca_transform(p1, dataset.images_primary[tr])
        z1_te = pca_mod.pca_transform(p1, dataset.images_primary[te])
        z2_tr = z2_te = None
        if max2 > 0:
            p2 = pca_mod.pca_fit(dataset.images_shifted[tr], max2, method=pca_method)
            z2_tr = pca_mod.pca_transform(p2, dataset.images_shifted[tr])
            z2_te = pca_mod.pca_transform(p2, dataset.images_shifted[te])
        for total, (n1, n2) in zip(dims, budgets):
            parts_tr = [z1_tr[:, :n1]]
            parts_te = [z1_te[:, :n1]]
            if n2 > 0:
                parts_tr.append(z2_tr[:, :n2])
                parts_te.append(z2_te[:, :n2])
            lat_tr = np.hstack(parts_tr)
            lat_te = np.hstack(parts_te)
            linear, etr = _fit_regressor(
                regressor_kind, lat_tr, dataset.targets[tr], ridge_lambda, etr_options
            )
            raw = (
                regress.linpredict(linear, lat_te)
                if linear is not None
                else regress.etr_predict(etr, lat_te)
            )
            pred, degenerate = _batch_project(raw, dataset.config.basis)
            fid = np.abs(
                np.einsum("nd,nd->n", pred.conj(), dataset.coefficients[te])
            ) ** 2
            stats = FidelityStats.from_fidelities(np.clip(fid, 0, 1), degenerate)
            points.append(
                SweepPoint(
                    total_dims=total,
                    mode=mode,
                    regressor=regressor_kind,
                    mean_fidelity=stats.mean,
                    stderr=stats.stderr,
                    n_test=int(te.size),
                )
            )
    return points


@dataclass
class SymmetryReport:
    """Correct/flipped fidelity statistics in single and pair mode, with
    the d=2 equator diagnostic (mean |b_z| of raw predictions)."""

    dimension: int
    n_latent_per_channel: int
    stats: dict  # mode -> {"correct": FidelityStats, "flipped": FidelityStats}
    mean_abs_bz_single: float | None = None
    mean_abs_bz_pair: float | None = None


def symmetry_analysis(
    dataset: Dataset,
    n_latent_per_channel: int,
    regressor_kind: str = "linear",
    pca_method: str = "auto",
) -> SymmetryReport:
    """Four-way correct/flipped evaluation on the same split.

    Single mode uses n_latent_per_channel primary components; pair mode
    adds as many shifted-channel components on top.
    """
    if dataset.images_shifted is None:
        raise ValueError("symmetry analysis needs a pair dataset")
    report_stats = {}
    bz = {}
    for mode in (MODE_SINGLE, MODE_PAIR):
        sub = dataset if mode == MODE_PAIR else as_single(dataset)
        model = fit_pipeline(
            sub,
            n_latent_per_channel,
            regressor_kind=regressor_kind,
            pca_method=pca_method,
        )
        report_stats[mode] = {
            "correct": evaluate(model, sub, against="correct"),
            "flipped": evaluate(model, sub, against="flipped"),
        }
        if dataset.dimension == 2:
            te = sub.test_indices
            lat = _model_latents(
                model,
                sub.images_primary[te],
                sub.images_shifted[te] if mode == MODE_PAIR else None,
            )
            raw = _raw_predict(model, lat)
            bz[mode] = float(np.mean(np.abs(raw[:, -1])))
    return SymmetryReport(
        dimension=dataset.dimension,
        n_latent_per_channel=n_latent_per_channel,
        stats=report_stats,
        mean_abs_bz_single=bz.get(MODE_SINGLE),
        mean_abs_bz_pair=bz.get(MODE_PAIR),
    )


def as_single(dataset: Dataset) -> Dataset:
    """View a pair dataset as single-image (shifted channel dropped)."""
    cfg = replace(dataset.config, image_mode=MODE_SINGLE)
    return Dataset(
        config=cfg,
        coefficients=dataset.coefficients,
        images_primary=dataset.images_primary,
        images_shifted=None,
        targets=dataset.targets,
        train_indices=dataset.train_indices,
        test_indices=dataset.test_indices,
    )


@dataclass
class CircleFit:
    theta: float
    radius: float
    rms_residual: float
    diameter: float
    n_points: int


@dataclass
class GeometryReport:
    n_components: int
    fits: list[CircleFit]


def _fit_circle_3d(points: np.ndarray) -> tuple[float, float]:
    """Plane fit (SVD) followed by an algebraic in-plane circle fit.

    Returns (radius, rms residual), the residual combining in-plane
    distance-to-circle and out-of-plane offsets.
    """
    center = points.mean(axis=0)
    q = points - center
    _, _, vt = np.linalg.svd(q, full_matrices=False)
    uv = q @ vt[:2].T
    off_plane = q @ vt[2] if vt.shape[0] > 2 else np.zeros(len(q))
    a = np.column_stack([2.0 * uv, np.ones(len(uv))])
    rhs = (uv**2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    cx, cy, c0 = sol
    radius = math.sqrt(max(c0 + cx**2 + cy**2, 0.0))
    in_plane = np.hypot(uv[:, 0] - cx, uv[:, 1] - cy) - radius
    rms = float(np.sqrt(np.mean(in_plane**2 + off_plane**2)))
    return radius, rms


def latent_geometry(
    theta_values: list[float],
    n_phi: int,
    geom: BeamGeometry,
    n_components: int = 3,
) -> GeometryReport:
    """Latent-space geometry of the one-qubit family.

    Renders the family over a phase grid for every polar angle, fits a
    single PCA across all samples, and fits a circle to each theta
    slice of the latent cloud.
    """
    if n_phi < 8:
        raise ValueError("need at least 8 phase samples per circle")
    thetas = [float(t) for t in theta_values]
    phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
    images = []
    for theta in thetas:
        for phi in phis:
            img = render_intensity(family_state(theta, phi), geom, NORM_UNIT_SUM)
            images.append(img.pixels.ravel())
    data = np.asarray(images)
    model = pca_mod.pca_fit(data, n_components, method="svd")
    latents = pca_mod.pca_transform(model, data)
    fits = []
    for k, theta in enumerate(thetas):
        pts = latents[k * n_phi : (k + 1) * n_phi]
        radius, rms = _fit_circle_3d(pts)
        dists = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        fits.append(
            CircleFit(
                theta=theta,
                radius=radius,
                rms_residual=rms,
                diameter=float(dists.max()),
                n_points=n_phi,
            )
        )
    return GeometryReport(n_components=n_components, fits=fits)


def ingest_images(manifest_path) -> Dataset:
    """Load externally captured images listed in a manifest file.

    The manifest holds `key value` header lines (mode, basis, grid,
    optionally seed and train_fraction) followed by one `sample` line
    per state: `sample <primary> [<shifted>] [target re im re im ...]`.
    Images (PGM or grayscale PNG) are downsampled to the target grid and
    unit-sum normalized. Without targets the dataset is prediction-only.
    """
    from pathlib import Path

    from PIL import Image

    path = Path(manifest_path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    header: dict[str, str] = {}
    samples: list[tuple[list[str], list[float] | None]] = []
    for lineno, rawline in enumerate(path.read_text().splitlines(), 1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "sample":
            rest = parts[1:]
            target = None
            if "target" in rest:
                cut = rest.index("target")
                target = [float(v) for v in rest[cut + 1 :]]
                rest = rest[:cut]
            if not rest:
                raise ValueError(f"{path}:{lineno}: sample line without image paths")
            samples.append((rest, target))
        else:
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: malformed header line {line!r}")
            header[parts[0]] = " ".join(parts[1:])
    if not samples:
        raise ValueError(f"{path}: manifest lists no samples")

    mode = header.get("mode", MODE_PAIR)
    if mode not in (MODE_SINGLE, MODE_PAIR):
        raise ValueError(f"unknown mode {mode!r} in manifest")
    if "basis" not in header:
        raise ValueError("manifest must declare a basis")
    basis = ModeBasis(tuple(int(t) for t in header["basis"].split(",")))
    grid_n = int(header.get("grid", 64))
    n_paths = 2 if mode == MODE_PAIR else 1
    d = basis.dimension

    def load_pixels(rel: str) -> np.ndarray:
        img_path = path.parent / rel
        if not img_path.is_file():
            raise FileNotFoundError(f"image not found: {img_path}")
        with Image.open(img_path) as im:
            arr = np.asarray(im)
        if arr.ndim != 2:
            raise ValueError(f"{img_path}: grayscale image required")
        if min(arr.shape) < grid_n:
            raise ValueError(
                f"{img_path}: image {arr.shape} smaller than grid {grid_n}"
            )
        return downsample(arr.astype(np.float64), grid_n).pixels.ravel()

    have_targets = [t is not None for _, t in samples]
    if any(have_targets) and not all(have_targets):
        raise ValueError("either all samples or none must carry targets")

    primary = np.empty((len(samples), grid_n * grid_n))
    shifted = np.empty_like(primary) if mode == MODE_PAIR else None
    coeffs = np.empty((len(samples), d), dtype=np.complex128) if all(have_targets) else None
    for i, (paths, target) in enumerate(samples):
        if len(paths) != n_paths:
            raise ValueError(
                f"sample {i}: expected {n_paths} image path(s), got {len(paths)}"
            )
        primary[i] = load_pixels(paths[0])
        if shifted is not None:
            shifted[i] = load_pixels(paths[1])
        if coeffs is not None:
            if len(target) != 2 * d:
                raise ValueError(
                    f"sample {i}: expected {2 * d} target floats, got {len(target)}"
                )
            vec = np.asarray(target[0::2]) + 1j * np.asarray(target[1::2])
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ValueError(f"sample {i}: zero target vector")
            coeffs[i] = vec / norm

    geometry = BeamGeometry(grid_n=grid_n)
    seed = int(header.get("seed", 0))
    config = DatasetConfig(
        basis=basis,
        n_samples=len(samples),
        geometry=geometry,
        image_mode=mode,
        seed=seed,
        train_fraction=float(header.get("train_fraction", 0.8)),
    )
    if coeffs is not None:
        targets = bloch_components(coeffs)
        train_idx, test_idx = _split_indices(
            len(samples), config.train_fraction, seed
        )
    else:
        targets = None
        train_idx = np.empty(0, dtype=np.int64)
        test_idx = np.arange(len(samples))
    return Dataset(
        config=config,
        coefficients=coeffs,
        images_primary=primary,
        images_shifted=shifted,
        targets=targets,
        train_indices=train_idx,
        test_indices=test_idx,
    )

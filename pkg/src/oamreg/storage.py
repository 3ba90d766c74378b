"""On-disk containers for datasets, fitted models and analysis tables.

Array files carry an 8-byte magic, a little-endian header (dtype code,
ndim, dims) and raw row-major data. Directories pair the arrays with a
human-readable `manifest` of `key value` lines. Images are stored as
32-bit floats, coefficients/targets/model parameters as 64-bit floats.
Everything written here is byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from . import pca as pca_mod
from . import regress
from .optics import BeamGeometry, ModeBasis
from .pipeline import (
    Dataset,
    DatasetConfig,
    NoiseSpec,
    PipelineModel,
    SweepPoint,
)

__all__ = [
    "write_array",
    "read_array",
    "write_manifest",
    "read_manifest",
    "save_dataset",
    "load_dataset",
    "save_model",
    "load_model",
    "write_sweep_csv",
]

MAGIC = b"OAMARR1\n"
_DTYPES = {1: "<f4", 2: "<f8", 3: "<i8", 4: "<i4"}
_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}

SWEEP_CSV_HEADER = "total_dims,mode,regressor,mean_fidelity,stderr,n_test"


def write_array(path, arr: np.ndarray) -> None:
    a = np.ascontiguousarray(arr)
    code = _CODES.get(np.dtype(a.dtype.newbyteorder("<")))
    if code is None:
        raise ValueError(f"unsupported dtype {a.dtype}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", code, a.ndim))
        fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        fh.write(a.astype(_DTYPES[code]).tobytes(order="C"))


def read_array(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not an array container")
        code, ndim = struct.unpack("<II", fh.read(8))
        if code not in _DTYPES:
            raise ValueError(f"{path}: unknown dtype code {code}")
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        data = np.frombuffer(fh.read(), dtype=_DTYPES[code])
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: truncated array payload")
    return data.reshape(shape)


def write_manifest(path, entries: list[tuple[str, str]]) -> None:
    lines = [f"{k} {v}" for k, v in entries]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        out[key] = value
    return out


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _geometry_entries(geom: BeamGeometry) -> list[tuple[str, str]]:
    return [
        ("waist", _fmt_float(geom.waist)),
        ("wavenumber", _fmt_float(geom.wavenumber)),
        ("plane_z", _fmt_float(geom.plane_z)),
        ("grid_n", str(geom.grid_n)),
        ("grid_halfwidth", _fmt_float(geom.grid_halfwidth)),
    ]


def _geometry_from(man: dict[str, str]) -> BeamGeometry:
    return BeamGeometry(
        waist=float(man["waist"]),
        wavenumber=float(man["wavenumber"]),
        plane_z=float(man["plane_z"]),
        grid_n=int(man["grid_n"]),
        grid_halfwidth=float(man["grid_halfwidth"]),
    )


def _indices_str(idx: np.ndarray) -> str:
    return ",".join(str(int(i)) for i in idx)


def save_dataset(directory, dataset: Dataset) -> None:
    """Write a dataset directory (manifest plus binary arrays)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    cfg = dataset.config
    entries = [
        ("container", "oamreg-dataset"),
        ("version", "1"),
        ("dimension", str(dataset.dimension)),
        ("basis", ",".join(str(l) for l in cfg.basis.indices)),
        ("image_mode", cfg.image_mode),
        ("n_samples", str(dataset.n_samples)),
        ("n_train", str(dataset.train_indices.size)),
        ("n_test", str(dataset.test_indices.size)),
        ("seed", str(cfg.seed)),
        ("train_fraction", _fmt_float(cfg.train_fraction)),
        ("shift_delta", str(cfg.shift_delta)),
    ]
    entries += _geometry_entries(cfg.geometry)
    if cfg.noise is not None:
        entries.append(("noise_gaussian_sigma", _fmt_float(cfg.noise.gaussian_sigma)))
        if cfg.noise.poisson_scale is not None:
            entries.append(("noise_poisson_scale", _fmt_float(cfg.noise.poisson_scale)))
        entries.append(
            ("noise_center_jitter_pixels", _fmt_float(cfg.noise.center_jitter_pixels))
        )
    entries.append(("train_indices", _indices_str(dataset.train_indices)))
    entries.append(("test_indices", _indices_str(dataset.test_indices)))
    write_manifest(out / "manifest", entries)

    g = dataset.grid_n
    write_array(
        out / "images_primary.arr",
        dataset.images_primary.reshape(-1, g, g).astype("<f4"),
    )
    if dataset.images_shifted is not None:
        write_array(
            out / "images_shifted.arr",
            dataset.images_shifted.reshape(-1, g, g).astype("<f4"),
        )
    if dataset.coefficients is not None:
        c = dataset.coefficients
        write_array(out / "coefficients.arr", np.stack([c.real, c.imag], axis=-1))
    if dataset.targets is not None:
        write_array(out / "targets.arr", dataset.targets)


def load_dataset(directory) -> Dataset:
    src = Path(directory)
    man = read_manifest(src / "manifest")
    if man.get("container") != "oamreg-dataset":
        raise ValueError(f"{src}: not a dataset directory")
    basis = ModeBasis(tuple(int(t) for t in man["basis"].split(",")))
    noise = None
    if "noise_gaussian_sigma" in man:
        noise = NoiseSpec(
            gaussian_sigma=float(man["noise_gaussian_sigma"]),
            poisson_scale=(
                float(man["noise_poisson_scale"])
                if "noise_poisson_scale" in man
                else None
            ),
            center_jitter_pixels=float(man.get("noise_center_jitter_pixels", 0.0)),
        )
    cfg = DatasetConfig(
        basis=basis,
        n_samples=int(man["n_samples"]),
        geometry=_geometry_from(man),
        image_mode=man["image_mode"],
        noise=noise,
        seed=int(man["seed"]),
        train_fraction=float(man["train_fraction"]),
        shift_delta=int(man.get("shift_delta", 1)),
    )
    n = cfg.n_samples
    primary = read_array(src / "images_primary.arr").astype(np.float64).reshape(n, -1)
    shifted = None
    if (src / "images_shifted.arr").is_file():
        shifted = read_array(src / "images_shifted.arr").astype(np.float64).reshape(n, -1)
    coeffs = None
    if (src / "coefficients.arr").is_file():
        raw = read_array(src / "coefficients.arr")
        coeffs = raw[..., 0] + 1j * raw[..., 1]
    targets = None
    if (src / "targets.arr").is_file():
        targets = read_array(src / "targets.arr").astype(np.float64)

    def parse_idx(text: str) -> np.ndarray:
        if not text:
            return np.empty(0, dtype=np.int64)
        return np.array([int(t) for t in text.split(",")], dtype=np.int64)

    return Dataset(
        config=cfg,
        coefficients=coeffs,
        images_primary=primary,
        images_shifted=shifted,
        targets=targets,
        train_indices=parse_idx(man["train_indices"]),
        test_indices=parse_idx(man["test_indices"]),
    )


def _save_pca(out: Path, tag: str, model: pca_mod.PCAModel) -> list[tuple[str, str]]:
    write_array(out / f"pca_{tag}_mean.arr", model.mean)
    write_array(out / f"pca_{tag}_components.arr", model.components)
    write_array(out / f"pca_{tag}_singular.arr", model.singular_values)
    write_array(out / f"pca_{tag}_evr.arr", model.explained_variance_ratio)
    return [
        (f"pca_{tag}_n_samples", str(model.n_samples)),
        (f"pca_{tag}_whiten", str(int(model.whiten))),
    ]


def _load_pca(src: Path, tag: str, man: dict[str, str]) -> pca_mod.PCAModel:
    comps = read_array(src / f"pca_{tag}_components.arr").astype(np.float64)
    return pca_mod.PCAModel(
        input_dim=comps.shape[1],
        n_components=comps.shape[0],
        mean=read_array(src / f"pca_{tag}_mean.arr").astype(np.float64),
        components=comps,
        singular_values=read_array(src / f"pca_{tag}_singular.arr").astype(np.float64),
        explained_variance_ratio=read_array(src / f"pca_{tag}_evr.arr").astype(
            np.float64
        ),
        n_samples=int(man[f"pca_{tag}_n_samples"]),
        whiten=bool(int(man[f"pca_{tag}_whiten"])),
    )


def save_model(directory, model: PipelineModel) -> None:
    """Write a fitted pipeline model directory."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    entries = [
        ("container", "oamreg-model"),
        ("version", "1"),
        ("dimension", str(model.dimension)),
        ("basis", ",".join(str(l) for l in model.basis.indices)),
        ("image_mode", model.image_mode),
        ("regressor", model.regressor_kind),
        ("n_latent_primary", str(model.n_latent[0])),
        ("n_latent_shifted", str(model.n_latent[1])),
        ("joint_pca", str(int(model.joint_pca))),
        ("seed", str(model.seed)),
        ("n_train", str(model.n_train)),
    ]
    entries += _geometry_entries(model.geometry)
    entries += _save_pca(out, "primary", model.pca_primary)
    if model.pca_shifted is not None:
        entries += _save_pca(out, "shifted", model.pca_shifted)
    if model.regressor_kind == "linear":
        lin = model.linear
        write_array(out / "linear_weights.arr", lin.weights)
        write_array(out / "linear_intercept.arr", lin.intercept)
        entries.append(("ridge_lambda", _fmt_float(lin.ridge_lambda)))
        entries.append(("rank_deficient", str(int(lin.rank_deficient))))
    else:
        etr = model.etr
        offsets = np.zeros(len(etr.trees) + 1, dtype=np.int64)
        for i, t in enumerate(etr.trees):
            offsets[i + 1] = offsets[i] + t.feature.size
        write_array(out / "etr_offsets.arr", offsets)
        write_array(
            out / "etr_feature.arr",
            np.concatenate([t.feature for t in etr.trees]).astype(np.int32),
        )
        write_array(
            out / "etr_threshold.arr", np.concatenate([t.threshold for t in etr.trees])
        )
        write_array(
            out / "etr_left.arr",
            np.concatenate([t.left for t in etr.trees]).astype(np.int32),
        )
        write_array(
            out / "etr_right.arr",
            np.concatenate([t.right for t in etr.trees]).astype(np.int32),
        )
        write_array(out / "etr_value.arr", np.concatenate([t.value for t in etr.trees]))
        entries += [
            ("etr_n_trees", str(etr.n_trees)),
            ("etr_min_samples_split", str(etr.min_samples_split)),
            ("etr_n_candidate_features", str(etr.n_candidate_features)),
            ("etr_max_depth", "none" if etr.max_depth is None else str(etr.max_depth)),
            ("etr_seed", str(etr.seed)),
            ("etr_n_features", str(etr.n_features)),
            ("etr_n_outputs", str(etr.n_outputs)),
        ]
    write_manifest(out / "manifest", entries)


def load_model(directory) -> PipelineModel:
    src = Path(directory)
    man = read_manifest(src / "manifest")
    if man.get("container") != "oamreg-model":
        raise ValueError(f"{src}: not a model directory")
    basis = ModeBasis(tuple(int(t) for t in man["basis"].split(",")))
    pca_primary = _load_pca(src, "primary", man)
    pca_shifted = None
    if (src / "pca_shifted_components.arr").is_file():
        pca_shifted = _load_pca(src, "shifted", man)
    kind = man["regressor"]
    linear = None
    etr = None
    if kind == "linear":
        linear = regress.LinearModel(
            weights=read_array(src / "linear_weights.arr").astype(np.float64),
            intercept=read_array(src / "linear_intercept.arr").astype(np.float64),
            ridge_lambda=float(man["ridge_lambda"]),
            rank_deficient=bool(int(man["rank_deficient"])),
        )
    else:
        offsets = read_array(src / "etr_offsets.arr")
        feature = read_array(src / "etr_feature.arr")
        threshold = read_array(src / "etr_threshold.arr")
        left = read_array(src / "etr_left.arr")
        right = read_array(src / "etr_right.arr")
        value = read_array(src / "etr_value.arr").astype(np.float64)
        trees = []
        for i in range(len(offsets) - 1):
            sl = slice(int(offsets[i]), int(offsets[i + 1]))
            trees.append(
                regress.Tree(
                    feature=feature[sl].astype(np.int32),
                    threshold=threshold[sl].astype(np.float64),
                    left=left[sl].astype(np.int32),
                    right=right[sl].astype(np.int32),
                    value=value[sl],
                )
            )
        etr = regress.ETRModel(
            trees=trees,
            n_features=int(man["etr_n_features"]),
            n_outputs=int(man["etr_n_outputs"]),
            n_trees=int(man["etr_n_trees"]),
            min_samples_split=int(man["etr_min_samples_split"]),
            n_candidate_features=int(man["etr_n_candidate_features"]),
            max_depth=None if man["etr_max_depth"] == "none" else int(man["etr_max_depth"]),
            seed=int(man["etr_seed"]),
        )
    return PipelineModel(
        basis=basis,
        geometry=_geometry_from(man),
        image_mode=man["image_mode"],
        pca_primary=pca_primary,
        pca_shifted=pca_shifted,
        regressor_kind=kind,
        linear=linear,
        etr=etr,
        n_latent=(int(man["n_latent_primary"]), int(man["n_latent_shifted"])),
        joint_pca=bool(int(man.get("joint_pca", "0"))),
        seed=int(man["seed"]),
        n_train=int(man["n_train"]),
    )


def write_sweep_csv(path, points: list[SweepPoint]) -> None:
    lines = [SWEEP_CSV_HEADER]
    for p in points:
        lines.append(
            f"{p.total_dims},{p.mode},{p.regressor},"
            f"{p.mean_fidelity:.10g},{p.stderr:.10g},{p.n_test}"
        )
    Path(path).write_text("\n".join(lines) + "\n")

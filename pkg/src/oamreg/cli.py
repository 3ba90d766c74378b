"""Command-line front end.

Subcommands: gen | train | eval | sweep | symmetry | geometry | ingest |
info. Parameters resolve in three layers: built-in defaults, then the
matching [section] of an INI config file (--config), then explicit
flags. Every command that produces artifacts writes the fully resolved
configuration to `<out>/run.cfg` alongside them, and identical resolved
configurations reproduce identical output bytes.

Failures print one line `error: <category>: <message>` (categories:
config, io, data, internal) and exit nonzero.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from . import __version__
from .optics import BeamGeometry, ModeBasis
from .pipeline import (
    MODE_PAIR,
    MODE_SINGLE,
    DatasetConfig,
    as_single,
    NoiseSpec,
    evaluate,
    fit_pipeline,
    generate_dataset,
    ingest_images,
    latent_geometry,
    sweep_latent_dims,
    symmetric_basis,
    symmetry_analysis,
)
from .storage import (
    load_dataset,
    load_model,
    read_manifest,
    save_dataset,
    save_model,
    write_sweep_csv,
)


class CLIError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


def _config_error(msg: str) -> CLIError:
    return CLIError("config", msg, 2)


def _io_error(msg: str) -> CLIError:
    return CLIError("io", msg, 3)


def _data_error(msg: str) -> CLIError:
    return CLIError("data", msg, 4)


# ---------------------------------------------------------------------------
# parameter resolution

_DEFAULTS: dict[str, dict[str, str]] = {
    "gen": {
        "dim": "4",
        "basis": "",
        "samples": "10000",
        "mode": MODE_PAIR,
        "seed": "0",
        "train_fraction": "0.8",
        "grid": "64",
        "halfwidth": "",
        "waist": "1.0",
        "wavenumber": "1.0",
        "plane_z": "0.0",
        "shift_delta": "1",
        "noise_gaussian": "0.0",
        "noise_poisson": "",
        "noise_jitter": "0.0",
    },
    "train": {
        "dataset": "",
        "latent_per_channel": "8",
        "mode": "",
        "regressor": "linear",
        "ridge": "0.0",
        "joint_pca": "0",
        "pca_method": "auto",
        "etr_trees": "100",
        "etr_min_split": "5",
        "etr_candidates": "",
        "etr_max_depth": "",
        "etr_seed": "0",
    },
    "eval": {"model": "", "dataset": "", "against": "correct", "subset": "test"},
    "sweep": {
        "dataset": "",
        "dims": "",
        "modes": MODE_PAIR,
        "regressor": "linear",
        "ridge": "0.0",
        "pca_method": "auto",
        "etr_trees": "100",
        "etr_min_split": "5",
        "etr_candidates": "",
        "etr_max_depth": "",
        "etr_seed": "0",
    },
    "symmetry": {
        "dataset": "",
        "latent_per_channel": "2",
        "regressor": "linear",
        "pca_method": "auto",
    },
    "geometry": {
        "thetas": "1.5707963267948966,2.356194490192345,2.748893571891069,"
        "3.141592653589793",
        "n_phi": "64",
        "grid": "64",
        "waist": "1.0",
        "halfwidth": "",
        "n_components": "3",
    },
    "ingest": {"manifest": ""},
    "info": {"path": ""},
}


def _resolve(command: str, args: argparse.Namespace) -> dict[str, str]:
    values = dict(_DEFAULTS[command])
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.is_file():
            raise _io_error(f"config file not found: {cfg_path}")
        parser = configparser.ConfigParser()
        try:
            parser.read(cfg_path)
        except configparser.Error as exc:
            raise _config_error(f"bad config file: {exc}")
        if parser.has_section(command):
            for key, val in parser.items(command):
                key = key.replace("-", "_")
                if key not in values:
                    raise _config_error(f"unknown key {key!r} in [{command}]")
                values[key] = val
    for key in values:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            values[key] = str(flag_val)
    if getattr(args, "seed", None) is not None:
        values["seed"] = str(args.seed)
    return values


def _echo_config(out_dir: Path, command: str, values: dict[str, str]) -> None:
    lines = [f"[{command}]"]
    for key in sorted(values):
        lines.append(f"{key} = {values[key]}")
    lines.append("")
    lines.append("[tool]")
    lines.append("name = oamreg")
    lines.append(f"version = {__version__}")
    (out_dir / "run.cfg").write_text("\n".join(lines) + "\n")


def _require_out(args) -> Path:
    if not args.out:
        raise _config_error("--out is required")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _io_error(f"cannot create output directory: {exc}")
    return out


def _parse_basis(values: dict[str, str]) -> ModeBasis:
    if values["basis"]:
        try:
            return ModeBasis(tuple(int(t) for t in values["basis"].split(",")))
        except ValueError as exc:
            raise _config_error(f"bad basis: {exc}")
    return symmetric_basis(int(values["dim"]))


def _parse_geometry(values: dict[str, str]) -> BeamGeometry:
    waist = float(values.get("waist", "1.0"))
    hw = values.get("halfwidth", "")
    return BeamGeometry(
        waist=waist,
        wavenumber=float(values.get("wavenumber", "1.0")),
        plane_z=float(values.get("plane_z", "0.0")),
        grid_n=int(values.get("grid", "64")),
        grid_halfwidth=float(hw) if hw else None,
    )


def _parse_noise(values: dict[str, str]) -> NoiseSpec | None:
    gauss = float(values["noise_gaussian"])
    jitter = float(values["noise_jitter"])
    poisson = float(values["noise_poisson"]) if values["noise_poisson"] else None
    if gauss == 0.0 and jitter == 0.0 and poisson is None:
        return None
    return NoiseSpec(
        gaussian_sigma=gauss, poisson_scale=poisson, center_jitter_pixels=jitter
    )


def _parse_latent(text: str):
    if "," in text:
        a, b = text.split(",")
        return (int(a), int(b))
    return int(text)


def _etr_options(values: dict[str, str]) -> dict:
    return {
        "n_trees": int(values["etr_trees"]),
        "min_samples_split": int(values["etr_min_split"]),
        "n_candidate_features": (
            int(values["etr_candidates"]) if values["etr_candidates"] else None
        ),
        "max_depth": int(values["etr_max_depth"]) if values["etr_max_depth"] else None,
        "seed": int(values["etr_seed"]),
    }


def _load_dataset_checked(path_text: str):
    if not path_text:
        raise _config_error("--dataset is required")
    path = Path(path_text)
    if not (path / "manifest").is_file():
        raise _io_error(f"no dataset manifest under {path}")
    try:
        return load_dataset(path)
    except ValueError as exc:
        raise _data_error(str(exc))


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    values = _resolve("gen", args)
    out = _require_out(args)
    basis = _parse_basis(values)
    try:
        config = DatasetConfig(
            basis=basis,
            n_samples=int(values["samples"]),
            geometry=_parse_geometry(values),
            image_mode=values["mode"],
            noise=_parse_noise(values),
            seed=int(values["seed"]),
            train_fraction=float(values["train_fraction"]),
            shift_delta=int(values["shift_delta"]),
        )
        dataset = generate_dataset(config)
    except ValueError as exc:
        raise _data_error(str(exc))
    save_dataset(out, dataset)
    values["basis"] = ",".join(str(l) for l in basis.indices)
    _echo_config(out, "gen", values)
    print(
        f"dataset: {dataset.n_samples} samples, d={dataset.dimension}, "
        f"basis ({values['basis']}), mode {config.image_mode}, "
        f"split {dataset.train_indices.size}/{dataset.test_indices.size}, "
        f"seed {config.seed} -> {out}"
    )
    return 0


def cmd_train(args) -> int:
    values = _resolve("train", args)
    out = _require_out(args)
    dataset = _load_dataset_checked(values["dataset"])
    if values["mode"]:
        if values["mode"] == MODE_PAIR and dataset.images_shifted is None:
            raise _data_error("dataset is single-image; cannot train a pair model")
        if values["mode"] == MODE_SINGLE and dataset.images_shifted is not None:
            dataset = as_single(dataset)
    try:
        model = fit_pipeline(
            dataset,
            _parse_latent(values["latent_per_channel"]),
            regressor_kind=values["regressor"],
            ridge_lambda=float(values["ridge"]),
            etr_options=(
                _etr_options(values) if values["regressor"] == "etr" else None
            ),
            pca_method=values["pca_method"],
            joint_pca=bool(int(values["joint_pca"])),
        )
    except ValueError as exc:
        raise _data_error(str(exc))
    save_model(out, model)
    _echo_config(out, "train", values)
    print(
        f"model: d={model.dimension}, mode {model.image_mode}, "
        f"{model.regressor_kind}, latent {model.n_latent[0]}+{model.n_latent[1]}, "
        f"trained on {model.n_train} samples -> {out}"
    )
    return 0


def cmd_eval(args) -> int:
    values = _resolve("eval", args)
    out = _require_out(args)
    if not values["model"]:
        raise _config_error("--model is required")
    model_dir = Path(values["model"])
    if not (model_dir / "manifest").is_file():
        raise _io_error(f"no model manifest under {model_dir}")
    model = load_model(model_dir)
    dataset = _load_dataset_checked(values["dataset"])
    try:
        stats = evaluate(model, dataset, against=values["against"], subset=values["subset"])
    except ValueError as exc:
        raise _data_error(str(exc))
    idx = (
        dataset.test_indices if values["subset"] == "test" else dataset.train_indices
    )
    lines = ["sample_index,fidelity"]
    for i, f in zip(idx, stats.fidelities):
        lines.append(f"{int(i)},{f:.10g}")
    (out / "fidelities.csv").write_text("\n".join(lines) + "\n")
    _echo_config(out, "eval", values)
    print(
        f"fidelity vs {values['against']}: mean {stats.mean:.6f} "
        f"+- {stats.stderr:.6f} over {stats.fidelities.size} samples "
        f"({stats.degenerate_count} degenerate projections)"
    )
    return 0


def cmd_sweep(args) -> int:
    values = _resolve("sweep", args)
    out = _require_out(args)
    if not values["dims"]:
        raise _config_error("--dims is required (comma-separated totals)")
    dims = [int(t) for t in values["dims"].split(",")]
    modes = tuple(values["modes"].split(","))
    dataset = _load_dataset_checked(values["dataset"])
    try:
        points = sweep_latent_dims(
            dataset,
            dims,
            regressor_kind=values["regressor"],
            modes=modes,
            ridge_lambda=float(values["ridge"]),
            etr_options=(
                _etr_options(values) if values["regressor"] == "etr" else None
            ),
            pca_method=values["pca_method"],
        )
    except ValueError as exc:
        raise _data_error(str(exc))
    write_sweep_csv(out / "sweep.csv", points)
    _echo_config(out, "sweep", values)
    for p in points:
        print(
            f"dims {p.total_dims:3d} {p.mode:6s} {p.regressor}: "
            f"F = {p.mean_fidelity:.6f} +- {p.stderr:.6f}"
        )
    return 0


def cmd_symmetry(args) -> int:
    values = _resolve("symmetry", args)
    out = _require_out(args)
    dataset = _load_dataset_checked(values["dataset"])
    try:
        report = symmetry_analysis(
            dataset,
            int(values["latent_per_channel"]),
            regressor_kind=values["regressor"],
            pca_method=values["pca_method"],
        )
    except ValueError as exc:
        raise _data_error(str(exc))
    n = int(values["latent_per_channel"])
    csv_lines = ["dimension,mode,against,total_dims,mean_fidelity,stderr,n_test"]
    txt_lines = [
        f"symmetry analysis: d={report.dimension}, "
        f"{n} latent dims per channel, {values['regressor']} regressor"
    ]
    for mode in (MODE_SINGLE, MODE_PAIR):
        total = n if mode == MODE_SINGLE else 2 * n
        for against in ("correct", "flipped"):
            st = report.stats[mode][against]
            csv_lines.append(
                f"{report.dimension},{mode},{against},{total},"
                f"{st.mean:.10g},{st.stderr:.10g},{st.fidelities.size}"
            )
            txt_lines.append(
                f"  {mode:6s} vs {against:7s}: {st.mean:.6f} +- {st.stderr:.6f}"
            )
    if report.mean_abs_bz_single is not None:
        txt_lines.append(
            f"  equator diagnostic mean |b_z|: single {report.mean_abs_bz_single:.4f}, "
            f"pair {report.mean_abs_bz_pair:.4f}"
        )
    (out / "symmetry.csv").write_text("\n".join(csv_lines) + "\n")
    (out / "report.txt").write_text("\n".join(txt_lines) + "\n")
    _echo_config(out, "symmetry", values)
    print("\n".join(txt_lines))
    return 0


def cmd_geometry(args) -> int:
    values = _resolve("geometry", args)
    out = _require_out(args)
    thetas = [float(t) for t in values["thetas"].split(",")]
    geom = BeamGeometry(
        waist=float(values["waist"]),
        grid_n=int(values["grid"]),
        grid_halfwidth=float(values["halfwidth"]) if values["halfwidth"] else None,
    )
    try:
        report = latent_geometry(
            thetas, int(values["n_phi"]), geom, int(values["n_components"])
        )
    except ValueError as exc:
        raise _data_error(str(exc))
    lines = ["theta,n_phi,radius,rms_residual,diameter"]
    for fit in report.fits:
        lines.append(
            f"{fit.theta:.10g},{fit.n_points},{fit.radius:.10g},"
            f"{fit.rms_residual:.10g},{fit.diameter:.10g}"
        )
    (out / "geometry.csv").write_text("\n".join(lines) + "\n")
    _echo_config(out, "geometry", values)
    for fit in report.fits:
        print(
            f"theta={fit.theta:.4f}: radius {fit.radius:.5g}, "
            f"rms residual {fit.rms_residual:.3g}, diameter {fit.diameter:.5g}"
        )
    return 0


def cmd_ingest(args) -> int:
    values = _resolve("ingest", args)
    out = _require_out(args)
    if not values["manifest"]:
        raise _config_error("--manifest is required")
    try:
        dataset = ingest_images(values["manifest"])
    except FileNotFoundError as exc:
        raise _io_error(str(exc))
    except ValueError as exc:
        raise _data_error(str(exc))
    save_dataset(out, dataset)
    _echo_config(out, "ingest", values)
    kind = "prediction-only" if dataset.targets is None else "labelled"
    print(
        f"ingested {dataset.n_samples} {kind} samples at grid "
        f"{dataset.grid_n} -> {out}"
    )
    return 0


def cmd_info(args) -> int:
    values = _resolve("info", args)
    target = values["path"] or (args.out or "")
    if not target:
        raise _config_error("info needs a path")
    man_path = Path(target) / "manifest"
    if not man_path.is_file():
        raise _io_error(f"no manifest under {target}")
    man = read_manifest(man_path)
    for key, value in man.items():
        if key.endswith("_indices"):
            value = f"<{value.count(',') + 1 if value else 0} indices>"
        print(f"{key}: {value}")
    return 0


_COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "symmetry": cmd_symmetry,
    "geometry": cmd_geometry,
    "ingest": cmd_ingest,
    "info": cmd_info,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamreg",
        description="Reconstruct OAM superpositions from intensity images.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="INI file with a [command] section")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")

    p = sub.add_parser("gen", help="simulate a labelled dataset")
    add_common(p)
    p.add_argument("--dim", type=int)
    p.add_argument("--basis", help="comma-separated azimuthal indices")
    p.add_argument("--samples", type=int)
    p.add_argument("--mode", choices=[MODE_SINGLE, MODE_PAIR])
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--halfwidth", type=float)
    p.add_argument("--waist", type=float)
    p.add_argument("--wavenumber", type=float)
    p.add_argument("--plane-z", dest="plane_z", type=float)
    p.add_argument("--shift-delta", dest="shift_delta", type=int)
    p.add_argument("--noise-gaussian", dest="noise_gaussian", type=float)
    p.add_argument("--noise-poisson", dest="noise_poisson", type=float)
    p.add_argument("--noise-jitter", dest="noise_jitter", type=float)

    p = sub.add_parser("train", help="fit PCA compressors and a regressor")
    add_common(p)
    p.add_argument("--dataset")
    p.add_argument(
        "--latent-per-channel",
        dest="latent_per_channel",
        help="int, or 'a,b' for asymmetric channel budgets",
    )
    p.add_argument("--mode", choices=[MODE_SINGLE, MODE_PAIR])
    p.add_argument("--regressor", choices=["linear", "etr"])
    p.add_argument("--ridge", type=float)
    p.add_argument("--joint-pca", dest="joint_pca", type=int, choices=[0, 1])
    p.add_argument("--pca-method", dest="pca_method", choices=["auto", "svd", "covariance"])
    p.add_argument("--etr-trees", dest="etr_trees", type=int)
    p.add_argument("--etr-min-split", dest="etr_min_split", type=int)
    p.add_argument("--etr-candidates", dest="etr_candidates", type=int)
    p.add_argument("--etr-max-depth", dest="etr_max_depth", type=int)
    p.add_argument("--etr-seed", dest="etr_seed", type=int)

    p = sub.add_parser("eval", help="score a model against a dataset")
    add_common(p)
    p.add_argument("--model")
    p.add_argument("--dataset")
    p.add_argument("--against", choices=["correct", "flipped"])
    p.add_argument("--subset", choices=["test", "train"])

    p = sub.add_parser("sweep", help="fidelity vs latent dimension")
    add_common(p)
    p.add_argument("--dataset")
    p.add_argument("--dims", help="comma-separated total latent dims")
    p.add_argument("--modes", help="comma-separated subset of single,pair")
    p.add_argument("--regressor", choices=["linear", "etr"])
    p.add_argument("--ridge", type=float)
    p.add_argument("--pca-method", dest="pca_method", choices=["auto", "svd", "covariance"])
    p.add_argument("--etr-trees", dest="etr_trees", type=int)
    p.add_argument("--etr-min-split", dest="etr_min_split", type=int)
    p.add_argument("--etr-candidates", dest="etr_candidates", type=int)
    p.add_argument("--etr-max-depth", dest="etr_max_depth", type=int)
    p.add_argument("--etr-seed", dest="etr_seed", type=int)

    p = sub.add_parser("symmetry", help="correct/flipped four-way comparison")
    add_common(p)
    p.add_argument("--dataset")
    p.add_argument(
        "--latent-per-channel", dest="latent_per_channel", type=int
    )
    p.add_argument("--regressor", choices=["linear", "etr"])
    p.add_argument("--pca-method", dest="pca_method", choices=["auto", "svd", "covariance"])

    p = sub.add_parser("geometry", help="latent circles of the one-qubit family")
    add_common(p)
    p.add_argument("--thetas", help="comma-separated polar angles (radians)")
    p.add_argument("--n-phi", dest="n_phi", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--waist", type=float)
    p.add_argument("--halfwidth", type=float)
    p.add_argument("--n-components", dest="n_components", type=int)

    p = sub.add_parser("ingest", help="import externally captured images")
    add_common(p)
    p.add_argument("--manifest")

    p = sub.add_parser("info", help="describe a dataset or model directory")
    add_common(p)
    p.add_argument("path", nargs="?")

    return parser


def _merge_negative_list_values(argv: list[str]) -> list[str]:
    # lets `--basis -3,-1,1,3` parse even though the value starts with '-'
    import re

    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (
            tok in ("--basis", "--thetas", "--dims")
            and i + 1 < len(argv)
            and re.match(r"^-\d", argv[i + 1])
        ):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(_merge_negative_list_values([str(a) for a in argv]))
    try:
        return _COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.code
    except (OSError, FileNotFoundError) as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover
        print(f"error: internal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

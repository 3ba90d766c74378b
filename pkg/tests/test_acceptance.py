"""Full-scale acceptance suite.

Every numbered test asserts one acceptance criterion at its stated
threshold on the standard desk-scale setup (64x64 grid, 10^4 samples,
8000/2000 split) and prints a PASS/FAIL line with the measured numbers
(run with `-rA` or `-s` to see them all).

Three clauses are expected to fail by design-level analysis: the
total-5-dimension threshold (criterion 2), the flipped-target window of
criterion 5, and both windows of criterion 6 are centered on statistics
of a non-Haar state ensemble and cannot be reached under the Haar
sampling this pipeline is contracted to use (the conjugation degeneracy
checked by criterion 10a bounds them away from the windows). They are
asserted exactly as stated, not loosened; see the informational
per-channel variant of criterion 2 and README.md.

Heavy module: ~15-25 minutes total on a 2-core workstation.
"""

import gc
import math
import time

import numpy as np
import pytest

from oamreg.optics import BeamGeometry, ModeBasis, render_intensity
from oamreg.pipeline import (
    DatasetConfig,
    NoiseSpec,
    as_single,
    evaluate,
    fit_pipeline,
    generate_dataset,
    latent_geometry,
    split_total_dims,
    sweep_latent_dims,
    symmetric_basis,
    symmetry_analysis,
)
from oamreg.states import haar_coefficients

ACCEPTANCE_SEED = 4  # pinned; criterion 4 sits on the Haar ceiling, see notes
N_SAMPLES = 10_000
GEOM = BeamGeometry()  # 64x64, halfwidth 4*w0


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


def _dataset(d: int, family: str = "spaced", noise: NoiseSpec | None = None):
    return generate_dataset(
        DatasetConfig(
            basis=symmetric_basis(d, family),
            n_samples=N_SAMPLES,
            geometry=GEOM,
            noise=noise,
            seed=ACCEPTANCE_SEED,
        )
    )


# ---------------------------------------------------------------------------
# shared heavy computations


@pytest.fixture(scope="module")
def d2():
    dataset = _dataset(2)
    single = as_single(dataset)
    model_single = fit_pipeline(single, 8)
    model_pair = fit_pipeline(dataset, split_total_dims(3))
    out = {
        "single_correct": evaluate(model_single, single),
        "single_flipped": evaluate(model_single, single, against="flipped"),
        "pair_correct": evaluate(model_pair, dataset),
        "pair_flipped": evaluate(model_pair, dataset, against="flipped"),
        "symmetry": symmetry_analysis(dataset, 2),
    }
    del dataset, single, model_single, model_pair
    gc.collect()
    return out


@pytest.fixture(scope="module")
def d4():
    t0 = time.time()
    dataset = _dataset(4)
    gen_seconds = time.time() - t0

    t0 = time.time()
    model15 = fit_pipeline(dataset, split_total_dims(15))
    correct15 = evaluate(model15, dataset)
    criterion1_seconds = gen_seconds + time.time() - t0
    flipped15 = evaluate(model15, dataset, against="flipped")
    del model15

    pair_sweep = sweep_latent_dims(dataset, [2, 3, 5, 8, 11, 15], modes=("pair",))
    single_sweep = sweep_latent_dims(
        dataset, [3, 5, 8, 15, 25, 40, 50], modes=("single",)
    )
    model55 = fit_pipeline(dataset, 5)
    per_channel5 = evaluate(model55, dataset)
    del model55, dataset
    gc.collect()

    noisy = _dataset(4, noise=NoiseSpec(gaussian_sigma=0.01))
    noisy_model = fit_pipeline(noisy, split_total_dims(15))
    noisy_stats = evaluate(noisy_model, noisy)
    del noisy, noisy_model
    gc.collect()
    return {
        "correct15": correct15,
        "flipped15": flipped15,
        "pair_sweep": pair_sweep,
        "single_sweep": single_sweep,
        "per_channel5": per_channel5,
        "noisy15": noisy_stats,
        "criterion1_seconds": criterion1_seconds,
    }


@pytest.fixture(scope="module")
def scaling():
    """Linear and tree-ensemble fidelity at total d^2-1 dims, d = 2..8."""
    results = {}
    t_start = time.time()
    for d in range(2, 9):
        family = "spaced" if d <= 4 else "spread"
        dataset = _dataset(d, family)
        q = d * d - 1
        model = fit_pipeline(dataset, split_total_dims(q))
        entry = {
            "basis": dataset.config.basis.indices,
            "linear": evaluate(model, dataset).mean,
            "flipped": evaluate(model, dataset, against="flipped").mean,
        }
        del model
        if d >= 3:
            etr = fit_pipeline(
                dataset,
                split_total_dims(q),
                regressor_kind="etr",
                etr_options={"seed": ACCEPTANCE_SEED},
            )
            entry["etr"] = evaluate(etr, dataset).mean
            del etr
        if d <= 4:
            single = as_single(dataset)
            entry["single_at_q"] = evaluate(
                fit_pipeline(single, q), single
            ).mean
            del single
        results[d] = entry
        del dataset
        gc.collect()
    results["wall_seconds"] = time.time() - t_start
    return results


# ---------------------------------------------------------------------------
# criteria


def test_criterion_1_pair_mode_convergence(d4):
    stats = d4["correct15"]
    elapsed = d4["criterion1_seconds"]
    ok = stats.mean >= 0.99
    report(
        "criterion 1 (d=4 pair, 15 total dims)",
        ok,
        f"mean fidelity {stats.mean:.5f} +- {stats.stderr:.5f} "
        f"(need >= 0.99); generate+fit+eval took {elapsed:.0f}s (budget 600s)",
    )
    assert ok
    assert elapsed <= 600


def test_criterion_2_five_dimension_threshold(d4):
    point = next(p for p in d4["pair_sweep"] if p.total_dims == 5)
    ok = point.mean_fidelity > 0.90
    report(
        "criterion 2 (d=4 pair, 5 TOTAL dims)",
        ok,
        f"mean fidelity {point.mean_fidelity:.5f} (need > 0.90); "
        "unreachable for Haar states at 5 total linear functionals, "
        "see the per-channel variant below",
    )
    assert ok


def test_criterion_2_informational_per_channel_reading(d4):
    stats = d4["per_channel5"]
    ok = stats.mean > 0.90
    report(
        "criterion 2' (informational: 5 dims PER CHANNEL)",
        ok,
        f"mean fidelity {stats.mean:.5f} (> 0.90 holds under the "
        "per-channel reading of the dimension budget)",
    )
    assert ok


def test_criterion_3_single_image_ceiling(d4):
    worst = max(p.mean_fidelity for p in d4["single_sweep"])
    ok = all(p.mean_fidelity < 0.93 for p in d4["single_sweep"])
    dims = [p.total_dims for p in d4["single_sweep"]]
    report(
        "criterion 3 (d=4 single-image ceiling)",
        ok,
        f"max mean fidelity {worst:.5f} over dims {dims} (need < 0.93 everywhere)",
    )
    assert ok


def test_criterion_4_d2_symmetry_degeneracy(d2):
    correct, flipped = d2["single_correct"], d2["single_flipped"]
    in_window = abs(correct.mean - 0.923) <= 0.03
    sem = math.hypot(correct.stderr, flipped.stderr)
    indistinct = abs(correct.mean - flipped.mean) <= 3 * sem
    report(
        "criterion 4 (d=2 single-image degeneracy)",
        in_window and indistinct,
        f"correct {correct.mean:.5f} (window 0.923 +- 0.03), flipped "
        f"{flipped.mean:.5f}, gap {abs(correct.mean - flipped.mean):.5f} "
        f"vs 3*sem {3 * sem:.5f}",
    )
    assert in_window
    assert indistinct


def test_criterion_5_d2_symmetry_breaking(d2):
    correct, flipped = d2["pair_correct"], d2["pair_flipped"]
    ok_correct = correct.mean >= 0.995
    ok_flipped = abs(flipped.mean - 0.764) <= 0.08
    report(
        "criterion 5 (d=2 pair-mode symmetry breaking)",
        ok_correct and ok_flipped,
        f"correct {correct.mean:.5f} (need >= 0.995), flipped "
        f"{flipped.mean:.5f} (window 0.764 +- 0.08; Haar value is 2/3, "
        "so the flipped window cannot be met, see notes)",
    )
    assert ok_correct
    assert ok_flipped


def test_criterion_6_d4_symmetry_pair(d4):
    single = max(p.mean_fidelity for p in d4["single_sweep"][-3:])
    flipped = d4["flipped15"]
    ok_single = abs(single - 0.904) <= 0.03
    ok_flipped = abs(flipped.mean - 0.664) <= 0.08
    report(
        "criterion 6 (d=4 symmetry statistics)",
        ok_single and ok_flipped,
        f"single converged {single:.5f} (window 0.904 +- 0.03; Haar "
        f"ceiling is ~0.80), pair flipped {flipped.mean:.5f} (window "
        "0.664 +- 0.08; Haar value is 0.40)",
    )
    assert ok_single
    assert ok_flipped


def test_criterion_7_all_dimension_scaling(scaling):
    means = {d: scaling[d]["linear"] for d in range(2, 9)}
    ok = all(m >= 0.99 for m in means.values())
    wall = scaling["wall_seconds"]
    report(
        "criterion 7 (pair mode >= 0.99 at d^2-1 dims, d=2..8)",
        ok and wall <= 5400,
        " ".join(f"d={d}:{m:.5f}" for d, m in means.items())
        + f"; wall {wall:.0f}s (budget 5400s)",
    )
    assert ok
    assert wall <= 5400


def test_criterion_8_linear_beats_trees(scaling):
    gaps = {d: (scaling[d]["linear"], scaling[d]["etr"]) for d in range(3, 9)}
    ok_order = all(lin >= etr for lin, etr in gaps.values())
    ok_damping = scaling[8]["etr"] < scaling[4]["etr"]
    report(
        "criterion 8 (linear >= trees, tree damping with d)",
        ok_order and ok_damping,
        " ".join(f"d={d}:lin={l:.4f}/etr={e:.4f}" for d, (l, e) in gaps.items()),
    )
    assert ok_order
    assert ok_damping


def test_criterion_9_latent_circles():
    thetas = [math.pi / 2, 3 * math.pi / 4, 7 * math.pi / 8, math.pi]
    rep = latent_geometry(thetas, 64, GEOM)
    fits = {round(f.theta, 6): f for f in rep.fits}
    r = [fits[round(t, 6)] for t in thetas]
    ok_order = r[0].radius > r[1].radius > r[2].radius
    ok_cluster = r[3].diameter < 0.05 * r[0].radius
    ok_resid = r[0].rms_residual < 0.05 * r[0].radius
    report(
        "criterion 9 (latent circles)",
        ok_order and ok_cluster and ok_resid,
        f"radii {r[0].radius:.4g} > {r[1].radius:.4g} > {r[2].radius:.4g}, "
        f"pole cluster {r[3].diameter:.2e}, residual "
        f"{r[0].rms_residual:.2e} (both < 5% of {r[0].radius:.4g})",
    )
    assert ok_order
    assert ok_cluster
    assert ok_resid


class TestCriterion10PropertySuite:
    def test_conjugation_identity(self):
        basis = ModeBasis((-3, -1, 1, 3))
        gen = np.random.default_rng(ACCEPTANCE_SEED)
        from oamreg.optics import conjugate_flip
        from oamreg.states import haar_random

        worst = 0.0
        for _ in range(100):
            state = haar_random(basis, gen)
            a = render_intensity(state, GEOM).pixels
            b = render_intensity(conjugate_flip(state), GEOM).pixels
            worst = max(worst, float(np.max(np.abs(a - b))))
        report(
            "criterion 10a (conjugation-degeneracy pixel identity)",
            worst < 1e-10,
            f"max |I(psi) - I(flip psi)| = {worst:.2e} over 100 states (< 1e-10)",
        )
        assert worst < 1e-10

    def test_generator_orthogonality(self):
        from oamreg.states import ggm_basis

        mats = ggm_basis(4).matrices
        gram = np.einsum("iab,jba->ij", mats, mats).real
        worst = float(np.max(np.abs(gram - 2 * np.eye(15))))
        report(
            "criterion 10b (generator orthogonality)",
            worst < 1e-12,
            f"max |tr(G_i G_j) - 2 delta_ij| = {worst:.2e} (< 1e-12)",
        )
        assert worst < 1e-12

    def test_pure_bloch_norm(self):
        from oamreg.states import bloch_components, pure_bloch_norm_sq

        gen = np.random.default_rng(ACCEPTANCE_SEED)
        worst = 0.0
        for d in (2, 4, 8):
            coeffs = np.stack([haar_coefficients(d, gen) for _ in range(50)])
            norms = (bloch_components(coeffs) ** 2).sum(axis=1)
            worst = max(worst, float(np.max(np.abs(norms - pure_bloch_norm_sq(d)))))
        report(
            "criterion 10c (pure-state Bloch norm 2(1-1/d))",
            worst < 1e-10,
            f"max deviation {worst:.2e} (< 1e-10)",
        )
        assert worst < 1e-10

    def test_pca_energy_oracle(self):
        from oamreg.pca import pca_fit, pca_inverse, pca_transform

        gen = np.random.default_rng(ACCEPTANCE_SEED)
        data = gen.standard_normal((40, 12))
        centered = data - data.mean(axis=0)
        evals = np.linalg.eigh(centered.T @ centered)[0][::-1]
        worst = 0.0
        for n in (1, 3, 7, 11):
            model = pca_fit(data, n, method="svd")
            recon = pca_inverse(model, pca_transform(model, data))
            sse = float(((data - recon) ** 2).sum())
            worst = max(worst, abs(sse - evals[n:].sum()))
        report(
            "criterion 10d (PCA reconstruction-energy oracle)",
            worst < 1e-8,
            f"max |SSE - discarded eigenvalue mass| = {worst:.2e} (< 1e-8)",
        )
        assert worst < 1e-8

    def test_normal_equation_oracle(self):
        from oamreg.regress import linfit

        gen = np.random.default_rng(ACCEPTANCE_SEED)
        z = gen.standard_normal((6, 2))
        y = gen.standard_normal((6, 3))
        lam = 0.1
        model = linfit(z, y, ridge_lambda=lam)
        zc = z - z.mean(axis=0)
        yc = y - y.mean(axis=0)
        oracle = np.linalg.solve(zc.T @ zc + lam * np.eye(2), zc.T @ yc).T
        worst = float(np.max(np.abs(model.weights - oracle)))
        report(
            "criterion 10e (ridge normal-equation oracle)",
            worst < 1e-8,
            f"max weight deviation {worst:.2e} (< 1e-8)",
        )
        assert worst < 1e-8

    def test_nearest_pure_mixture_oracle(self):
        from oamreg.states import (
            BlochVector,
            DensityMatrix,
            density_to_bloch,
            fidelity,
            haar_random,
            nearest_pure,
        )

        basis = ModeBasis((-3, -1, 1, 3))
        state = haar_random(basis, ACCEPTANCE_SEED)
        proj = np.outer(state.coefficients, state.coefficients.conj())
        rho = 0.9 * proj + 0.1 * np.eye(4) / 4
        res = nearest_pure(density_to_bloch(DensityMatrix(4, rho)), basis)
        f = fidelity(res.state, state)
        report(
            "criterion 10f (nearest-pure 0.9/0.1 mixture oracle)",
            f > 1 - 1e-10,
            f"fidelity to the pure component {f:.12f} (> 1 - 1e-10)",
        )
        assert f > 1 - 1e-10

    def test_seeded_cli_commands_are_byte_identical(self, tmp_path):
        # identical resolved configuration (same inputs, same seed) must
        # reproduce identical artifact bytes, run.cfg included
        from oamreg.cli import main

        gen = ["gen", "--dim", "2", "--samples", "50", "--grid", "32", "--seed", "7"]
        ds = str(tmp_path / "a" / "ds")
        for run in ("a", "b"):
            root = tmp_path / run
            assert main(gen + ["--out", str(root / "ds")]) == 0
            assert (
                main(
                    ["train", "--dataset", ds, "--latent-per-channel", "2,1",
                     "--out", str(root / "model")]
                )
                == 0
            )
            assert (
                main(
                    ["eval", "--model", str(tmp_path / "a" / "model"),
                     "--dataset", ds, "--out", str(root / "eval")]
                )
                == 0
            )
            assert (
                main(
                    ["sweep", "--dataset", ds, "--dims", "2,3",
                     "--out", str(root / "sweep")]
                )
                == 0
            )
            assert (
                main(
                    ["symmetry", "--dataset", ds, "--latent-per-channel", "2",
                     "--out", str(root / "sym")]
                )
                == 0
            )
            assert (
                main(
                    ["geometry", "--grid", "32", "--n-phi", "16",
                     "--out", str(root / "geo")]
                )
                == 0
            )
        compared = 0
        same = True
        for sub in ("ds", "model", "eval", "sweep", "sym", "geo"):
            for f in sorted((tmp_path / "a" / sub).iterdir()):
                other = tmp_path / "b" / sub / f.name
                compared += 1
                if f.read_bytes() != other.read_bytes():
                    same = False
        report(
            "criterion 10g (byte-level reproducibility of seeded commands)",
            same,
            f"gen/train/eval/sweep/symmetry/geometry rerun: "
            f"{compared} artifact files compared byte-for-byte",
        )
        assert same


def test_criterion_11_noise_robustness_substitute(d4):
    noisy = d4["noisy15"]
    clean = d4["correct15"]
    ok = noisy.mean >= 0.90
    report(
        "criterion 11 (noise substitute for the experimental figure)",
        ok,
        f"gaussian sigma=0.01 pair fidelity {noisy.mean:.5f} (need >= 0.90; "
        f"noiseless was {clean.mean:.5f}); the experimental 0.9661 +- 0.0009 "
        "needs lab data and is out of scope",
    )
    assert ok
    # robustness property: degradation under mild noise stays small
    assert clean.mean - noisy.mean < 0.05


# ---------------------------------------------------------------------------
# pipeline-level properties at full scale


class TestScaleProperties:
    def test_pair_mode_dominance(self, scaling):
        gaps = {
            d: scaling[d]["linear"] - scaling[d]["single_at_q"] for d in (2, 3, 4)
        }
        report(
            "property (pair beats single by > 0.05 at d^2-1 dims)",
            all(g > 0.05 for g in gaps.values()),
            " ".join(f"d={d}:+{g:.3f}" for d, g in gaps.items()),
        )
        assert all(g > 0.05 for g in gaps.values())

    def test_flipped_target_separation(self, scaling):
        gaps = {
            d: scaling[d]["linear"] - scaling[d]["flipped"] for d in (2, 4)
        }
        report(
            "property (correct - flipped > 0.2 in pair mode)",
            all(g > 0.2 for g in gaps.values()),
            " ".join(f"d={d}:{g:.3f}" for d, g in gaps.items()),
        )
        assert all(g > 0.2 for g in gaps.values())

    def test_monotone_pair_sweep(self, d4):
        pts = d4["pair_sweep"]
        ok = True
        for a, b in zip(pts, pts[1:]):
            ok &= b.mean_fidelity >= a.mean_fidelity - (a.stderr + b.stderr)
        report(
            "property (pair-mode fidelity nondecreasing in latent dims)",
            ok,
            " ".join(f"{p.total_dims}:{p.mean_fidelity:.4f}" for p in pts),
        )
        assert ok

    def test_equator_collapse_diagnostic(self, d2):
        rep = d2["symmetry"]
        # Haar reference for E|b_z| by Monte Carlo
        gen = np.random.default_rng(ACCEPTANCE_SEED)
        samples = np.stack([haar_coefficients(2, gen) for _ in range(100_000)])
        haar_abs_bz = float(
            np.mean(np.abs(np.abs(samples[:, 0]) ** 2 - np.abs(samples[:, 1]) ** 2))
        )
        ok_single = rep.mean_abs_bz_single < 0.2
        ok_pair = abs(rep.mean_abs_bz_pair - haar_abs_bz) < 0.1
        report(
            "property (d=2 equator collapse diagnostic)",
            ok_single and ok_pair,
            f"single mean |b_z| {rep.mean_abs_bz_single:.4f} (< 0.2), pair "
            f"{rep.mean_abs_bz_pair:.4f} vs Haar {haar_abs_bz:.4f} (within 0.1)",
        )
        assert ok_single
        assert ok_pair

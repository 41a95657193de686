//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::TAU;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use fock_cli::catalog::CATALOG;
use fock_core::fock::{
    bergman_project, default_search_grid, fock_norm_infty, fock_norm_p, kernel_k_normalized,
};
use fock_core::operator::{
    compose_kernels, kernel_from_matrix, toeplitz_kernel, toeplitz_matrix, weyl_matrix,
};
use fock_core::quadrature::{build_polar_rule, default_rule};
use fock_core::spectral::{
    berezin_winding, compactness_test, default_radii, essential_spectrum_estimate, fredholm_index,
    truncated_spectrum, COMPACTNESS_THRESHOLD,
};
use fock_core::symbols::{gaussian, phase};
use fock_core::wiener::{
    convolution_bound, default_base_grid, default_lebesgue_rule, default_offset_grid,
    dominating_profile, operator_norm_bound_p, schur_bounds, wiener_norm_bound,
};
use fock_core::{BasisSpec, FockParam, KernelFunction, PointGrid, SymbolFunction, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn p1(t: f64) -> FockParam {
    FockParam::new(t, 1).unwrap()
}

fn random_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    C64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * TAU)
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

fn catalog() -> Vec<(&'static str, SymbolFunction)> {
    CATALOG
        .iter()
        .map(|e| (e.name, (e.closed_form)()))
        .collect()
}

fn reproducing_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let param = p1(t);
        let rule = default_rule(param).unwrap();
        for _ in 0..50 {
            let deg = rng.gen_range(0..=8);
            let coeffs: Vec<C64> = (0..=deg).map(|_| random_disk(&mut rng, 1.0)).collect();
            let f = |w: &[C64]| {
                coeffs
                    .iter()
                    .rev()
                    .fold(c(0.0, 0.0), |acc, a| acc * w[0] + a)
            };
            let z = [random_disk(&mut rng, 3.0)];
            worst = worst.max((bergman_project(f, &z, param, &rule).unwrap() - f(&z)).norm());
        }
    }
    (
        worst < 1e-10,
        format!("max |P f - f| = {worst:.3e} (tol 1e-10)"),
    )
}

fn normalized_kernel_norms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let param = p1(1.0);
    let rule = default_rule(param).unwrap();
    let grid = default_search_grid(param);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = [random_disk(&mut rng, 3.0)];
        let k = |u: &[C64]| kernel_k_normalized(&z, u, param);
        for p in [1.0, 2.0, 3.0] {
            worst = worst.max((fock_norm_p(k, p, param, &rule).unwrap() - 1.0).abs());
        }
        worst = worst.max((fock_norm_infty(k, param, &grid) - 1.0).abs());
    }
    (
        worst < 1e-8,
        format!("max |‖k_z‖_p - 1| = {worst:.3e} (tol 1e-8)"),
    )
}

/// Products are formed from degree-60 quadrature sections and compared on the
/// degree-25 block.
fn weyl_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = 1.0;
    let param = p1(t);
    let big = BasisSpec::new(param, 60);
    let rule = build_polar_rule(param, 61, 121).unwrap();
    let k = BasisSpec::new(param, 25).len();
    let block = |m: &DMatrix<C64>| m.view((0, 0), (k, k)).into_owned();
    let weyl = |z: C64| weyl_matrix(&[z], &big, &rule).unwrap().0;
    let mut law: f64 = 0.0;
    let mut iso: f64 = 0.0;
    for _ in 0..5 {
        let (z, w) = (random_disk(&mut rng, 1.0), random_disk(&mut rng, 1.0));
        let (wz, ww, wzw) = (weyl(z), weyl(w), weyl(z + w));
        let phase = C64::from_polar(1.0, -(z * w.conj()).im / t);
        let lhs = block(&(wz.matrix() * ww.matrix()));
        let rhs = block(wzw.matrix()) * phase;
        law = law.max((lhs - rhs).iter().map(|x| x.norm()).fold(0.0, f64::max));
        let gram = block(&(wz.matrix().adjoint() * wz.matrix()));
        iso = iso.max(
            (gram - DMatrix::<C64>::identity(k, k))
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max),
        );
    }
    (
        law < 1e-8 && iso < 1e-8,
        format!("law residual {law:.3e}, isometry defect {iso:.3e} (tol 1e-8)"),
    )
}

/// `<A k_w, k_z>` through a degree-60 section and the exact coefficients
/// `<k_w, e_l> = exp(-|w|^2/2t) conj(w)^l / sqrt(l! t^l)`, against the damped kernel.
fn berezin_identity() -> Outcome {
    let t = 1.0;
    let param = p1(t);
    let deg = 60;
    let basis = BasisSpec::new(param, deg);
    let rule = build_polar_rule(param, 61, 121).unwrap();
    let krule = default_rule(param).unwrap();
    let coeffs = |w: C64| -> Vec<C64> {
        (0..=deg)
            .map(|l| {
                (-w.norm_sqr() / (2.0 * t)).exp() * w.conj().powu(l as u32)
                    / (factorial(l) * t.powi(l as i32)).sqrt()
            })
            .collect()
    };
    let grid: Vec<C64> = (0..10)
        .map(|j| C64::from_polar(0.2 * j as f64, 0.7 * j as f64))
        .collect();
    let mut worst: f64 = 0.0;
    let ops = [
        ("gaussian", gaussian(1.0)),
        ("phase", phase()),
        ("mixed", (CATALOG[4].closed_form)()),
    ];
    for (_, f) in &ops {
        let a = toeplitz_matrix(f, &basis, &rule).unwrap();
        let k = toeplitz_kernel(f, &krule);
        for w in &grid {
            let cw = coeffs(*w);
            for z in &grid {
                let cz = coeffs(*z);
                let mut acc = c(0.0, 0.0);
                for (m, czm) in cz.iter().enumerate() {
                    for (l, cwl) in cw.iter().enumerate() {
                        acc += a.entry(m, l) * cwl * czm.conj();
                    }
                }
                worst = worst.max((acc - k.eval_damped(&[*w], &[*z])).norm());
            }
        }
    }
    (
        worst < 1e-8,
        format!("max error {worst:.3e} over 10x10 grid, 3 operators (tol 1e-8)"),
    )
}

fn bound_chain() -> Outcome {
    let param = p1(1.0);
    let rule = default_rule(param).unwrap();
    let krule = build_polar_rule(param, 16, 33).unwrap();
    let basis = BasisSpec::new(param, 30);
    let base = PointGrid::polar(1, 6.0, 8, 12).unwrap();
    let offsets = PointGrid::lattice(1, 0.5, 10).unwrap();
    let leb = default_lebesgue_rule(param).unwrap();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for (_, f) in catalog() {
        let norm = toeplitz_matrix(&f, &basis, &rule).unwrap().spectral_norm();
        let k = toeplitz_kernel(&f, &krule);
        let (a1, ainf) = schur_bounds(&k, &base, &leb).unwrap();
        let schur = operator_norm_bound_p(a1, ainf, 2.0, param).unwrap();
        let wiener = dominating_profile(&k, &base, &offsets)
            .unwrap()
            .upper_estimate();
        ok &= norm <= schur * (1.0 + 1e-9) && schur <= wiener * (1.0 + 1e-2);
        worst_ratio = worst_ratio.max(schur / wiener);
    }
    let id = KernelFunction::identity(param);
    let wiener_id = wiener_norm_bound(
        &dominating_profile(&id, &default_base_grid(param), &default_offset_grid(param)).unwrap(),
    );
    let norm_id = toeplitz_matrix(&SymbolFunction::constant(c(1.0, 0.0)), &basis, &rule)
        .unwrap()
        .spectral_norm();
    ok &= (wiener_id - 2.0).abs() < 1e-6 && (norm_id - 1.0).abs() < 1e-9;
    (
        ok,
        format!(
            "max schur/wiener {worst_ratio:.4}; identity wiener {wiener_id:.9}, norm {norm_id:.12}"
        ),
    )
}

fn submultiplicativity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let param = p1(1.0);
    let rule = default_rule(param).unwrap();
    let basis = BasisSpec::new(param, 30);
    let base = PointGrid::polar(1, 6.0, 12, 16).unwrap();
    let half = 8;
    let h = 0.5;
    let offsets = PointGrid::lattice(1, h, half).unwrap();
    let kernels: Vec<KernelFunction> = catalog()
        .iter()
        .map(|(_, f)| kernel_from_matrix(&toeplitz_matrix(f, &basis, &rule).unwrap()))
        .collect();
    let mut product_gap: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..10 {
        let (i, j) = (
            rng.gen_range(0..kernels.len()),
            rng.gen_range(0..kernels.len()),
        );
        let pa = dominating_profile(&kernels[i], &base, &offsets).unwrap();
        let pb = dominating_profile(&kernels[j], &base, &offsets).unwrap();
        let conv = convolution_bound(&pa, &pb).unwrap();
        product_gap = product_gap.max(
            (wiener_norm_bound(&conv) - wiener_norm_bound(&pa) * wiener_norm_bound(&pb)).abs(),
        );
        let composed = compose_kernels(&kernels[i], &kernels[j], &rule).unwrap();
        let direct = dominating_profile(&composed, &base, &offsets).unwrap();
        for (u, g) in offsets.points().zip(direct.values()) {
            let coords = [(u[0].re / h).round() as i64, (u[0].im / h).round() as i64];
            excess = excess.max(g - conv.value_at_lattice(&coords).unwrap());
        }
    }
    (
        product_gap < 1e-10 && excess <= 1e-8,
        format!(
            "|conv - product| {product_gap:.3e} (tol 1e-10); max excess {excess:.3e} (tol 1e-8)"
        ),
    )
}

fn compactness() -> Outcome {
    let param = p1(1.0);
    let krule = default_rule(param).unwrap();
    let dirs = PointGrid::directions(1, 64).unwrap();
    let radii = default_radii(1.0);
    let verdict = |f: &SymbolFunction| {
        compactness_test(
            &toeplitz_kernel(f, &krule),
            &radii,
            &dirs,
            COMPACTNESS_THRESHOLD,
        )
        .unwrap()
        .verdict
    };
    let g = gaussian(1.0);
    let a = toeplitz_matrix(&g, &BasisSpec::new(param, 30), &krule).unwrap();
    let ev = &truncated_spectrum(&a, &[30], None).unwrap().eigenvalues[0];
    let mut expected: Vec<f64> = (0..=30).map(|m| 0.5f64.powi(m + 1)).collect();
    expected.sort_by(f64::total_cmp);
    let eig_err = ev
        .iter()
        .zip(&expected)
        .map(|(z, e)| (z - e).norm())
        .fold(0.0, f64::max);
    let (vg, vi, vp) = (
        verdict(&g),
        verdict(&SymbolFunction::constant(c(1.0, 0.0))),
        verdict(&phase()),
    );
    (
        vg && !vi && !vp && eig_err < 1e-9,
        format!("verdicts gaussian={vg} identity={vi} phase={vp}; eigenvalue error {eig_err:.3e} (tol 1e-9)"),
    )
}

/// Hausdorff distance between a finite set and the unit circle.
fn hausdorff_to_circle(points: &[C64]) -> f64 {
    let to_circle = points
        .iter()
        .map(|p| (p.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let samples = 100_000;
    let from_circle = (0..samples)
        .map(|j| {
            let q = C64::from_polar(1.0, TAU * j as f64 / samples as f64);
            points
                .iter()
                .map(|p| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    to_circle.max(from_circle)
}

fn essential_spectrum() -> Outcome {
    let param = p1(1.0);
    let est = essential_spectrum_estimate(
        &phase(),
        &PointGrid::directions(1, 64).unwrap(),
        &BasisSpec::new(param, 40),
    )
    .unwrap();
    let d = hausdorff_to_circle(&est);
    (
        d < 0.05,
        format!("{} points, Hausdorff distance {d:.5} (tol 0.05)", est.len()),
    )
}

fn index() -> Outcome {
    let param = p1(1.0);
    let f = phase();
    let a = toeplitz_matrix(
        &f,
        &BasisSpec::new(param, 45),
        &build_polar_rule(param, 46, 91).unwrap(),
    )
    .unwrap();
    let ess = essential_spectrum_estimate(
        &f,
        &PointGrid::directions(1, 64).unwrap(),
        &BasisSpec::new(param, 0),
    )
    .unwrap();
    let k = toeplitz_kernel(&f, &default_rule(param).unwrap());
    let degrees = [30, 35, 40];
    let at0 = fredholm_index(&a, c(0.0, 0.0), &degrees, 1e-6, &ess, None).unwrap();
    let winding = berezin_winding(&k, c(0.0, 0.0), 12.0, 256).unwrap();
    let stable = at0
        .counts
        .iter()
        .all(|(_, ker, coker)| *ker as i64 - *coker as i64 == at0.index);
    let at2 = fredholm_index(&a, c(2.0, 0.0), &degrees, 1e-6, &ess, None).unwrap();
    let smin = at2
        .singular_min
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    (
        at0.index == -1 && stable && at0.index == -winding && at2.index == 0 && smin > 0.5,
        format!(
            "lambda=0: index {} counts {:?} winding {winding}; lambda=2: index {} min sigma {smin:.4}",
            at0.index, at0.counts, at2.index
        ),
    )
}

/// The example commands documented in the README.
const EXAMPLES: &[&[&str]] = &[
    &[
        "spectrum",
        "--symbol",
        "exp(-abs(z)^2)",
        "--t",
        "1",
        "--degree",
        "30",
    ],
    &["norm-bounds", "--symbol", "1", "--t", "1"],
    &["index", "--symbol", "phase(z)", "--lambda", "0", "--t", "1"],
    &["ess-spectrum", "--symbol", "phase"],
    &["compactness", "--symbol", "gaussian"],
    &["toeplitz", "--symbol", "phase", "--degree", "8"],
    &["berezin", "--symbol", "mixed"],
    &[
        "compose",
        "--symbol",
        "gaussian",
        "--symbol2",
        "phase",
        "--degree",
        "20",
    ],
];

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut mismatched = Vec::new();
    for (k, args) in EXAMPLES.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("ex{k}_{run}.json"));
            let status = Command::new(env!("CARGO_BIN_EXE_fock"))
                .args(*args)
                .args(["--out", out.to_str().unwrap()])
                .status()
                .unwrap();
            let mut bytes = fs::read(&out).unwrap_or_default();
            bytes.extend(fs::read(out.with_extension("csv")).unwrap_or_default());
            outputs.push((status.code(), bytes));
        }
        if outputs[0] != outputs[1] || outputs[0].0 != Some(0) {
            mismatched.push(args[0]);
        }
    }
    (
        mismatched.is_empty(),
        format!(
            "{} example commands run twice; mismatches: {mismatched:?}",
            EXAMPLES.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("reproducing property", reproducing_property),
        ("normalized kernel norms", normalized_kernel_norms),
        ("Weyl algebra", weyl_algebra),
        ("Berezin transform equals damped kernel", berezin_identity),
        ("bound chain", bound_chain),
        ("submultiplicativity", submultiplicativity),
        ("compactness", compactness),
        ("essential spectrum", essential_spectrum),
        ("Fredholm index", index),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2}: {} {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

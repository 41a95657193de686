//! The invariant suite behind `fock verify`, at desk-scale grid sizes (`n = 1`).

use fock_core::fock::{
    bergman_project, default_search_grid, fock_norm_infty, fock_norm_p, kernel_k,
    kernel_k_normalized,
};
use fock_core::operator::{
    berezin_by_quadrature, involute_kernel, kernel_from_matrix, project_kernel, toeplitz_kernel,
    toeplitz_matrix, weyl_matrix_exact, SymbolShape,
};
use fock_core::quadrature::{build_polar_rule, default_rule, integrate_mu, monomial_moment};
use fock_core::spectral::{
    compactness_test, default_radii, eigenvalues, essential_spectrum_estimate, fredholm_index,
    limit_operator, shifted_operator, singular_values, truncated_spectrum, COMPACTNESS_THRESHOLD,
};
use fock_core::symbols::{gaussian, phase};
use fock_core::wiener::{
    default_lebesgue_rule, dominating_profile, operator_norm_bound_p, schur_bounds,
    wiener_norm_bound,
};
use fock_core::{BasisSpec, FockParam, KernelFunction, PointGrid, SymbolFunction, C64};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::catalog::CATALOG;
use crate::commands::compose_report;
use crate::output::real;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    fn holds(name: &'static str, ok: bool, value: f64) -> Self {
        Self {
            name,
            value,
            tolerance: 0.0,
            passed: ok,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": real(self.value),
            "tolerance": real(self.tolerance),
            "passed": self.passed,
        })
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.gen::<f64>().sqrt();
    C64::from_polar(r, rng.gen::<f64>() * std::f64::consts::TAU)
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

fn catalog_symbols() -> Vec<(&'static str, SymbolFunction)> {
    CATALOG
        .iter()
        .map(|e| (e.name, (e.closed_form)()))
        .collect()
}

/// Runs every check; errors only on invalid parameters.
pub fn run_all(param: FockParam, seed: u64) -> Result<Vec<Check>, CliError> {
    if param.n() != 1 {
        return Err(CliError::Usage("verify runs on n = 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    quadrature_checks(param, &mut out)?;
    fock_checks(param, &mut rng, &mut out)?;
    operator_checks(param, &mut rng, &mut out)?;
    wiener_checks(param, &mut out)?;
    spectral_checks(param, &mut out)?;
    Ok(out)
}

fn quadrature_checks(param: FockParam, out: &mut Vec<Check>) -> Result<(), CliError> {
    let t = param.t();
    let rule = default_rule(param)?;
    let d = rule.exact_degree() as u32;
    let mut worst: f64 = 0.0;
    for a in 0..=d {
        for b in 0..=(d - a) {
            let v = integrate_mu(|w| w[0].powu(a) * w[0].conj().powu(b), &rule)?;
            let exact = monomial_moment(&[a], &[b], param);
            let scale = (factorial(a) * factorial(b)).sqrt() * t.powf(f64::from(a + b) / 2.0);
            worst = worst.max((v - exact).norm() / scale.max(1.0));
        }
    }
    out.push(Check::at_most("quadrature.moments", worst, 1e-12));

    let g = |w: &[C64]| {
        let z = w[0];
        (-z.norm_sqr()).exp() * (c(1.0, 0.0) + z + z.conj().powu(2) * 0.5 + z.norm_sqr().powi(2))
    };
    let coarse = integrate_mu(g, &rule)?;
    let fine = integrate_mu(
        g,
        &build_polar_rule(param, 2 * rule.radial_order(), 2 * rule.angular_order())?,
    )?;
    out.push(Check::at_most(
        "quadrature.convergence",
        (coarse - fine).norm(),
        1e-10,
    ));

    let positive = rule.weights().iter().all(|w| *w > 0.0);
    let count_ok = rule.len() == rule.radial_order() * rule.angular_order();
    out.push(Check::holds(
        "quadrature.weights",
        positive && count_ok,
        rule.len() as f64,
    ));
    Ok(())
}

fn fock_checks(
    param: FockParam,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Check>,
) -> Result<(), CliError> {
    let t = param.t();
    let rule = default_rule(param)?;

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let deg = rng.gen_range(0..=8);
        let coeffs: Vec<C64> = (0..=deg).map(|_| random_disk(rng, 1.0)).collect();
        let f = |w: &[C64]| {
            coeffs
                .iter()
                .rev()
                .fold(c(0.0, 0.0), |acc, a| acc * w[0] + a)
        };
        let z = [random_disk(rng, 3.0)];
        worst = worst.max((bergman_project(f, &z, param, &rule)? - f(&z)).norm());
    }
    out.push(Check::at_most("fock.reproducing", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (w, z) = ([random_disk(rng, 1.0)], [random_disk(rng, 1.0)]);
        let ip = integrate_mu(
            |u| kernel_k(&w, u, param) * kernel_k(&z, u, param).conj(),
            &rule,
        )?;
        worst = worst.max((ip - kernel_k(&w, &z, param)).norm());
    }
    out.push(Check::at_most("fock.kernel_inner_product", worst, 1e-10));

    let basis = BasisSpec::new(param, 30);
    let mut gram = nalgebra::DMatrix::<C64>::zeros(basis.len(), basis.len());
    for (u, wt) in rule.nodes().zip(rule.weights()) {
        let e = DVector::from_vec(basis.eval_all(u));
        gram += &e * e.adjoint() * c(*wt, 0.0);
    }
    let defect = (gram - nalgebra::DMatrix::<C64>::identity(basis.len(), basis.len()))
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    out.push(Check::at_most("fock.gram", defect, 1e-10));

    let search = default_search_grid(param);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = [random_disk(rng, 3.0 * t.sqrt())];
        let k = |u: &[C64]| kernel_k_normalized(&z, u, param);
        for p in [1.0, 2.0, 3.0] {
            worst = worst.max((fock_norm_p(k, p, param, &rule)? - 1.0).abs());
        }
        worst = worst.max((fock_norm_infty(k, param, &search) - 1.0).abs());
    }
    out.push(Check::at_most("fock.normalized_kernel_norms", worst, 1e-8));
    Ok(())
}

fn operator_checks(
    param: FockParam,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Check>,
) -> Result<(), CliError> {
    let rule = default_rule(param)?;
    let krule = build_polar_rule(param, 20, 41)?;

    let mut worst: f64 = 0.0;
    let pts: Vec<C64> = (0..4)
        .map(|j| C64::from_polar(0.4 * j as f64, 0.9 * j as f64))
        .collect();
    for f in [gaussian(1.0), phase(), (CATALOG[4].closed_form)()] {
        let k = toeplitz_kernel(&f, &krule);
        for w in &pts {
            for z in &pts {
                let q = berezin_by_quadrature(&k, &[*w], &[*z], &rule)?;
                worst = worst.max((q - k.eval_damped(&[*w], &[*z])).norm());
            }
        }
    }
    out.push(Check::at_most("operator.berezin_identity", worst, 1e-8));

    let basis = BasisSpec::new(param, 15);
    let prule = build_polar_rule(param, 16, 33)?;
    let a = toeplitz_matrix(&phase(), &basis, &prule)?;
    let back = project_kernel(&kernel_from_matrix(&a), &basis, &prule)?;
    out.push(Check::at_most(
        "operator.round_trip",
        back.max_abs_diff(&a),
        1e-8,
    ));

    let big = BasisSpec::new(param, 60);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let z = [random_disk(rng, 1.0)];
        let w = weyl_matrix_exact(&z, &big);
        let mut v = DVector::<C64>::zeros(big.len());
        for j in 0..=15 {
            v[j] = random_disk(rng, 1.0);
        }
        let image = w.matrix() * &v;
        worst = worst.max((image.norm() - v.norm()).abs());
    }
    out.push(Check::at_most("operator.weyl_isometry", worst, 1e-8));

    let small = BasisSpec::new(param, 8);
    let srule = build_polar_rule(param, 10, 21)?;
    let k = toeplitz_kernel(&phase(), &krule);
    let m = project_kernel(&k, &small, &srule)?;
    let ms = project_kernel(&involute_kernel(&k), &small, &srule)?;
    out.push(Check::at_most(
        "operator.adjoint",
        ms.max_abs_diff(&m.adjoint()),
        1e-8,
    ));
    Ok(())
}

struct Coarse {
    base: PointGrid,
    offsets: PointGrid,
    krule: fock_core::QuadratureRule,
}

fn coarse(param: FockParam) -> Result<Coarse, CliError> {
    let s = param.t().sqrt();
    Ok(Coarse {
        base: PointGrid::polar(1, 6.0 * s, 8, 12)?,
        offsets: PointGrid::lattice(1, 0.5 * s, 10)?,
        krule: build_polar_rule(param, 16, 33)?,
    })
}

fn wiener_checks(param: FockParam, out: &mut Vec<Check>) -> Result<(), CliError> {
    let g = coarse(param)?;
    let t = param.t();

    let k = toeplitz_kernel(&gaussian(1.0).with_shape(SymbolShape::General), &g.krule);
    let prof = dominating_profile(&k, &g.base, &g.offsets)?;
    let mut worst: f64 = 0.0;
    for (u, gu) in g.offsets.points().zip(prof.values()) {
        for z in g.base.points() {
            let v = k.eval_damped(&[z[0] + u[0]], z).norm();
            worst = worst.max(v - gu * (1.0 + 1e-9));
        }
    }
    out.push(Check::at_most("wiener.domination", worst, 0.0));

    let rule = default_rule(param)?;
    let basis = BasisSpec::new(param, 30);
    let leb = default_lebesgue_rule(param)?;
    let mut chain_ok = true;
    let mut sandwich_ok = true;
    let mut margin = f64::INFINITY;
    for (_, f) in catalog_symbols() {
        let a = toeplitz_matrix(&f, &basis, &rule)?;
        let k = toeplitz_kernel(&f, &g.krule);
        let (a1, ainf) = schur_bounds(&k, &g.base, &leb)?;
        let schur = operator_norm_bound_p(a1, ainf, 2.0, param)?;
        let wiener = dominating_profile(&k, &g.base, &g.offsets)?.upper_estimate();
        let norm = a.spectral_norm();
        chain_ok &= norm <= schur * (1.0 + 1e-9) && schur <= wiener * (1.0 + 1e-2);
        let rho = eigenvalues(a.matrix())?
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        sandwich_ok &= rho <= schur * (1.0 + 1e-9) && schur <= wiener * (1.0 + 1e-2);
        margin = margin.min(wiener * (1.0 + 1e-2) - schur);
    }
    out.push(Check::holds("wiener.bound_chain", chain_ok, margin));
    out.push(Check::holds("spectral.bound_sandwich", sandwich_ok, margin));

    let sections: Vec<KernelFunction> = [
        gaussian(1.0),
        phase(),
        SymbolFunction::constant(c(0.0, 1.0)),
    ]
    .iter()
    .map(|f| toeplitz_matrix(f, &basis, &rule).map(|a| kernel_from_matrix(&a)))
    .collect::<Result<_, _>>()?;
    let mut product_gap: f64 = 0.0;
    let mut excess = f64::NEG_INFINITY;
    for ka in &sections {
        for kb in &sections {
            let (data, e) = compose_report(ka, kb, param)?;
            let conv = data["convolved"].as_f64().unwrap_or(f64::NAN);
            let prod = data["product"].as_f64().unwrap_or(f64::NAN);
            product_gap = product_gap.max((conv - prod).abs() / prod.max(1.0));
            excess = excess.max(e);
        }
    }
    out.push(Check::at_most(
        "wiener.convolution_product",
        product_gap,
        1e-10,
    ));
    out.push(Check::at_most(
        "wiener.convolution_domination",
        excess,
        1e-8,
    ));

    let k1 = toeplitz_kernel(&gaussian(1.0).with_shape(SymbolShape::General), &g.krule);
    let k2 = toeplitz_kernel(&phase(), &g.krule);
    let b1 = wiener_norm_bound(&dominating_profile(&k1, &g.base, &g.offsets)?);
    let b2 = wiener_norm_bound(&dominating_profile(&k2, &g.base, &g.offsets)?);
    let b12 = wiener_norm_bound(&dominating_profile(&k1.sum(&k2)?, &g.base, &g.offsets)?);
    out.push(Check::at_most(
        "wiener.triangle",
        b12 - b1 - b2,
        1e-9 * t.max(1.0),
    ));
    Ok(())
}

fn spectral_checks(param: FockParam, out: &mut Vec<Check>) -> Result<(), CliError> {
    let t = param.t();
    let rule = default_rule(param)?;
    let krule = build_polar_rule(param, 20, 41)?;
    let dirs = PointGrid::directions(1, 64)?;
    let radii = default_radii(t);

    let verdict = |f: &SymbolFunction| -> Result<bool, CliError> {
        Ok(compactness_test(
            &toeplitz_kernel(f, &krule),
            &radii,
            &dirs,
            COMPACTNESS_THRESHOLD,
        )?
        .verdict)
    };
    let gauss = gaussian(1.0);
    let a40 = toeplitz_matrix(
        &gauss,
        &BasisSpec::new(param, 40),
        &build_polar_rule(param, 41, 81)?,
    )?;
    let s = singular_values(a40.matrix());
    let coherent = verdict(&gauss)?
        && s[20] < 1e-6
        && !verdict(&SymbolFunction::constant(c(1.0, 0.0)))?
        && !verdict(&phase())?;
    out.push(Check::holds(
        "spectral.compactness_coherence",
        coherent,
        s[20],
    ));

    let small = BasisSpec::new(param, 10);
    let f = phase();
    let errs: Vec<f64> = [5.0, 10.0, 20.0]
        .iter()
        .map(|r| -> Result<f64, CliError> {
            let mut worst: f64 = 0.0;
            for x in PointGrid::directions(1, 16)?.points() {
                let lim = limit_operator(&f, x, &small)?;
                let sh = shifted_operator(&f, &[-x[0] * *r * t.sqrt()], &small, &rule)?;
                worst = worst.max(sh.max_abs_diff(&lim));
            }
            Ok(worst)
        })
        .collect::<Result<_, _>>()?;
    out.push(Check::holds(
        "spectral.limit_consistency",
        errs[0] > errs[1] && errs[1] > errs[2],
        errs[2],
    ));

    let basis = BasisSpec::new(param, 45);
    let a = toeplitz_matrix(&f, &basis, &build_polar_rule(param, 46, 91)?)?;
    let rep = truncated_spectrum(&a, &[30, 35, 40], Some(c(2.0, 0.0)))?;
    let smin = rep.singular_min.unwrap_or_default();
    let hi = smin.iter().copied().fold(0.0, f64::max);
    let lo = smin.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(Check::at_most(
        "spectral.fredholm_stability",
        (hi - lo) / hi,
        0.1,
    ));

    let ess = essential_spectrum_estimate(&f, &dirs, &BasisSpec::new(param, 0))?;
    let k = toeplitz_kernel(&f, &krule);
    let agree = match fredholm_index(&a, c(0.0, 0.0), &[30, 35, 40], 1e-6, &ess, Some(&k)) {
        Ok(r) => r.index == -1 && r.winding == Some(-r.index),
        Err(_) => false,
    };
    out.push(Check::holds("spectral.index_agreement", agree, 0.0));
    Ok(())
}

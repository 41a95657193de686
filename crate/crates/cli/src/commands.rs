use fock_core::operator::{
    compose_kernels, kernel_from_matrix, toeplitz_kernel, toeplitz_matrix, SymbolShape,
};
use fock_core::quadrature::build_polar_rule;
use fock_core::spectral::{
    compactness_test, default_radii, essential_spectrum_estimate, fredholm_index,
    truncated_spectrum,
};
use fock_core::wiener::{
    convolution_bound, default_base_grid, default_lebesgue_rule, default_offset_grid,
    dominating_profile, membership_diagnostic, operator_norm_bound_p, schur_bounds,
    wiener_norm_bound, DominatingProfile, ProfileWarning,
};
use fock_core::{
    BasisSpec, FockParam, KernelFunction, PointGrid, QuadratureRule, SymbolFunction,
    TruncatedOperator, C64,
};
use serde_json::{json, Value};

use crate::catalog;
use crate::expr::SymbolExpression;
use crate::output::{self, complex, complex_list, real, Meta};
use crate::{
    parse_complex, verify, CliError, Command, Common, SymbolArgs, EXIT_OK, EXIT_VERIFY_FAILED,
};

/// Orders of the per-coordinate rule behind integral-form Toeplitz kernels.
pub const KERNEL_ORDERS_N1: (usize, usize) = (20, 41);
pub const KERNEL_ORDERS: (usize, usize) = (10, 21);
/// Direction count of the compactness sphere sampling.
pub const COMPACTNESS_DIRECTIONS: usize = 64;
/// Rays for the Berezin command: radii `0..8 sqrt(t)` times this many directions.
pub const BEREZIN_DIRECTIONS: usize = 16;

pub fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Toeplitz { .. } => "toeplitz",
        Command::Berezin { .. } => "berezin",
        Command::Spectrum { .. } => "spectrum",
        Command::EssSpectrum { .. } => "ess-spectrum",
        Command::NormBounds { .. } => "norm-bounds",
        Command::Compose { .. } => "compose",
        Command::Compactness { .. } => "compactness",
        Command::Index { .. } => "index",
        Command::Verify { .. } => "verify",
    }
}

pub fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Toeplitz { common, .. }
        | Command::Berezin { common, .. }
        | Command::Spectrum { common, .. }
        | Command::EssSpectrum { common, .. }
        | Command::NormBounds { common, .. }
        | Command::Compose { common, .. }
        | Command::Compactness { common, .. }
        | Command::Index { common, .. }
        | Command::Verify { common } => common,
    }
}

pub fn param(common: &Common) -> Result<FockParam, CliError> {
    Ok(FockParam::new(common.t, common.n)?)
}

/// Resolves a catalog name or parses an expression.
pub fn resolve_expression(text: &str, n: usize) -> Result<SymbolExpression, CliError> {
    let source = catalog::lookup(text).map(|e| e.expression).unwrap_or(text);
    SymbolExpression::parse(source, n).map_err(|e| CliError::Usage(format!("symbol `{text}`: {e}")))
}

pub fn resolve_symbol(
    args: &SymbolArgs,
    common: &Common,
) -> Result<(SymbolExpression, SymbolFunction), CliError> {
    let expr = resolve_expression(&args.symbol, common.n)?;
    let limits = args
        .limit_symbol
        .as_deref()
        .map(|l| resolve_expression(l, common.n))
        .transpose()?;
    let f = expr.to_symbol(common.t, limits.as_ref());
    Ok((expr, f))
}

pub fn kernel_rule(param: FockParam) -> Result<QuadratureRule, CliError> {
    let (r, a) = if param.n() == 1 {
        KERNEL_ORDERS_N1
    } else {
        KERNEL_ORDERS
    };
    Ok(build_polar_rule(param, r, a)?)
}

pub fn section(
    f: &SymbolFunction,
    param: FockParam,
    degree: usize,
    common: &Common,
) -> Result<TruncatedOperator, CliError> {
    let (r, a) = common.orders(degree);
    let rule = build_polar_rule(param, r, a)?;
    Ok(toeplitz_matrix(f, &BasisSpec::new(param, degree), &rule)?)
}

fn shape_name(shape: SymbolShape) -> &'static str {
    match shape {
        SymbolShape::Constant(_) => "constant",
        SymbolShape::Gaussian { .. } => "gaussian",
        SymbolShape::General => "general",
    }
}

fn symbol_json(expr: &SymbolExpression) -> Value {
    json!({
        "source": expr.source(),
        "canonical": expr.to_string(),
        "shape": shape_name(expr.shape()),
    })
}

fn profile_json(p: &DominatingProfile) -> Value {
    let d = membership_diagnostic(p);
    let rim = p
        .warnings()
        .iter()
        .filter(|w| matches!(w, ProfileWarning::BaseRim { .. }))
        .count();
    let tail = p.warnings().iter().find_map(|w| match w {
        ProfileWarning::OffsetTail { bound } => Some(*bound),
        _ => None,
    });
    json!({
        "l1_estimate": real(p.l1_estimate()),
        "upper_estimate": real(p.upper_estimate()),
        "base_rim_warnings": rim,
        "offset_tail_warning": tail.map(real),
        "membership": {
            "decay_rate": real(d.decay_rate),
            "fit_residual": real(d.fit_residual),
            "outer_share": real(d.outer_share),
            "confidence": real(d.confidence),
        },
    })
}

fn finish(common: &Common, command: &str, degree: usize, data: Value) -> Result<i32, CliError> {
    let meta = Meta {
        t: common.t,
        n: common.n,
        degree,
        command,
    };
    output::emit(&output::document(&meta, data), common.out.as_deref())?;
    Ok(EXIT_OK)
}

pub fn execute(cmd: &Command) -> Result<i32, CliError> {
    let common = common(cmd);
    let param = param(common)?;
    let degree = common.degree();
    let cmd_name = name(cmd);
    match cmd {
        Command::Toeplitz { symbol, .. } => {
            let (expr, f) = resolve_symbol(symbol, common)?;
            let a = section(&f, param, degree, common)?;
            let indices: Vec<Value> = a
                .basis()
                .indices()
                .iter()
                .map(|m| json!(m.entries()))
                .collect();
            let rows: Vec<Value> = (0..a.dim())
                .map(|i| Value::Array((0..a.dim()).map(|j| complex(a.entry(i, j))).collect()))
                .collect();
            let data = json!({
                "symbol": symbol_json(&expr),
                "indices": indices,
                "matrix": rows,
                "spectral_norm": real(a.spectral_norm()),
            });
            finish(common, cmd_name, degree, data)
        }
        Command::Berezin { symbol, .. } => {
            let (expr, f) = resolve_symbol(symbol, common)?;
            let k = toeplitz_kernel(&f, &kernel_rule(param)?);
            let dirs = PointGrid::directions(param.n(), BEREZIN_DIRECTIONS)?;
            let mut points = Vec::new();
            let mut values = Vec::new();
            let mut symbol_values = Vec::new();
            for r in default_radii(param.t()) {
                for x in dirs.points() {
                    let z: Vec<C64> = x.iter().map(|c| c * r).collect();
                    points.push(complex_list(&z));
                    values.push(complex(k.eval_damped(&z, &z)));
                    symbol_values.push(complex(f.eval(&z)));
                }
            }
            let data = json!({
                "symbol": symbol_json(&expr),
                "points": points,
                "berezin": values,
                "symbol_values": symbol_values,
            });
            finish(common, cmd_name, degree, data)
        }
        Command::Spectrum {
            symbol,
            degrees,
            lambda,
            ..
        } => {
            let (expr, f) = resolve_symbol(symbol, common)?;
            let mut degrees = degrees.clone().unwrap_or_else(|| {
                vec![degree.saturating_sub(10), degree.saturating_sub(5), degree]
            });
            degrees.sort_unstable();
            degrees.dedup();
            let top = *degrees
                .last()
                .ok_or_else(|| CliError::Usage("no degrees given".into()))?;
            let probe = lambda.as_deref().map(parse_complex).transpose()?;
            let a = section(&f, param, top, common)?;
            let rep = truncated_spectrum(&a, &degrees, probe)?;
            let spectra: Vec<Value> = rep
                .degrees
                .iter()
                .zip(&rep.eigenvalues)
                .map(|(d, ev)| json!({ "degree": d, "eigenvalues": complex_list(ev) }))
                .collect();
            let data = json!({
                "symbol": symbol_json(&expr),
                "spectra": spectra,
                "probe": rep.probe.map(complex),
                "singular_min": rep.singular_min.map(|s| s.into_iter().map(real).collect::<Vec<_>>()),
            });
            finish(common, cmd_name, top, data)
        }
        Command::EssSpectrum {
            symbol, directions, ..
        } => {
            let (expr, f) = resolve_symbol(symbol, common)?;
            let dirs = PointGrid::directions(param.n(), *directions)?;
            let est = essential_spectrum_estimate(&f, &dirs, &BasisSpec::new(param, degree))?;
            let data = json!({
                "symbol": symbol_json(&expr),
                "directions": dirs.len(),
                "estimate": complex_list(&est),
            });
            finish(common, cmd_name, degree, data)
        }
        Command::NormBounds { symbol, .. } => {
            let (expr, f) = resolve_symbol(symbol, common)?;
            let k = toeplitz_kernel(&f, &kernel_rule(param)?);
            let base = default_base_grid(param);
            let profile = dominating_profile(&k, &base, &default_offset_grid(param))?;
            let (a1, ainf) = schur_bounds(&k, &base, &default_lebesgue_rule(param)?)?;
            let bound = |p: f64| operator_norm_bound_p(a1, ainf, p, param).map(real);
            let norm = section(&f, param, degree, common)?.spectral_norm();
            let data = json!({
                "symbol": symbol_json(&expr),
                "wiener": profile_json(&profile),
                "wiener_bound": real(wiener_norm_bound(&profile)),
                "schur": {
                    "a1": real(a1),
                    "ainf": real(ainf),
                    "bound_p1": bound(1.0)?,
                    "bound_p2": bound(2.0)?,
                    "bound_pinf": bound(f64::INFINITY)?,
                },
                "truncation_norm": real(norm),
            });
            finish(common, cmd_name, degree, data)
        }
        Command::Compose {
            symbol, symbol2, ..
        } => {
            let (e1, f1) = resolve_symbol(symbol, common)?;
            let e2 = resolve_expression(symbol2, common.n)?;
            let f2 = e2.to_symbol(common.t, None);
            let ka = kernel_from_matrix(&section(&f1, param, degree, common)?);
            let kb = kernel_from_matrix(&section(&f2, param, degree, common)?);
            let (data, _) = compose_report(&ka, &kb, param)?;
            let data = json!({
                "symbol": symbol_json(&e1),
                "symbol2": symbol_json(&e2),
                "bounds": data,
            });
            finish(common, cmd_name, degree, data)
        }
        Command::Compactness {
            symbol, threshold, ..
        } => {
            let (expr, f) = resolve_symbol(symbol, common)?;
            let k = toeplitz_kernel(&f, &kernel_rule(param)?);
            let dirs = PointGrid::directions(param.n(), COMPACTNESS_DIRECTIONS)?;
            let res = compactness_test(&k, &default_radii(param.t()), &dirs, *threshold)?;
            if let Some(out) = &common.out {
                output::emit_curve_csv(&res.curve, out)?;
            }
            let curve: Vec<Value> = res
                .curve
                .iter()
                .map(|(r, v)| json!([real(*r), real(*v)]))
                .collect();
            let data = json!({
                "symbol": symbol_json(&expr),
                "verdict": res.verdict,
                "threshold": real(res.threshold),
                "curve": curve,
            });
            finish(common, cmd_name, degree, data)
        }
        Command::Index {
            symbol,
            lambda,
            degrees,
            ..
        } => {
            let (expr, f) = resolve_symbol(symbol, common)?;
            let lambda = parse_complex(lambda)?;
            let top = degrees
                .iter()
                .copied()
                .max()
                .ok_or_else(|| CliError::Usage("no degrees given".into()))?;
            let dmax = common.degree.unwrap_or(top + 5);
            let a = section(&f, param, dmax, common)?;
            let dirs = PointGrid::directions(param.n(), 64)?;
            let ess = essential_spectrum_estimate(&f, &dirs, &BasisSpec::new(param, 0))?;
            let k = toeplitz_kernel(&f, &kernel_rule(param)?);
            let rep = fredholm_index(&a, lambda, degrees, common.eps, &ess, Some(&k))?;
            let counts: Vec<Value> = rep
                .counts
                .iter()
                .map(|(d, ker, coker)| json!({ "degree": d, "kernel": ker, "cokernel": coker }))
                .collect();
            let data = json!({
                "symbol": symbol_json(&expr),
                "lambda": complex(lambda),
                "index": rep.index,
                "counts": counts,
                "singular_min": rep.singular_min.iter().copied().map(real).collect::<Vec<_>>(),
                "distance_to_essential": real(rep.distance_to_essential),
                "winding": rep.winding,
            });
            finish(common, cmd_name, dmax, data)
        }
        Command::Verify { .. } => {
            let checks = verify::run_all(param, common.seed)?;
            let passed = checks.iter().all(|c| c.passed);
            let data = json!({
                "passed": passed,
                "checks": checks.iter().map(verify::Check::to_json).collect::<Vec<_>>(),
            });
            finish(common, cmd_name, degree, data)?;
            Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    }
}

/// Base grid and offset lattice for profiles of section kernels.
pub fn section_grids(param: FockParam) -> Result<(PointGrid, PointGrid), CliError> {
    let s = param.t().sqrt();
    Ok((
        PointGrid::polar(param.n(), 6.0 * s, 12, 16)?,
        PointGrid::lattice(param.n(), 0.5 * s, 8)?,
    ))
}

/// Profiles of both factors, their convolution bound, and the directly measured
/// profile of the product; returns the report and the largest excess of the
/// direct profile over the convolution.
pub fn compose_report(
    ka: &KernelFunction,
    kb: &KernelFunction,
    param: FockParam,
) -> Result<(Value, f64), CliError> {
    let (base, offsets) = section_grids(param)?;
    let pa = dominating_profile(ka, &base, &offsets)?;
    let pb = dominating_profile(kb, &base, &offsets)?;
    let conv = convolution_bound(&pa, &pb)?;
    let rule = kernel_rule(param)?;
    let direct = dominating_profile(&compose_kernels(ka, kb, &rule)?, &base, &offsets)?;
    let h = 0.5 * param.t().sqrt();
    let mut excess = f64::NEG_INFINITY;
    for (u, g) in offsets.points().zip(direct.values()) {
        let coords: Vec<i64> = u
            .iter()
            .flat_map(|c| [(c.re / h).round() as i64, (c.im / h).round() as i64])
            .collect();
        let bound = conv
            .value_at_lattice(&coords)
            .expect("offset lattice lies inside the convolution lattice");
        excess = excess.max(g - bound);
    }
    let b1 = wiener_norm_bound(&pa);
    let b2 = wiener_norm_bound(&pb);
    let data = json!({
        "bound1": real(b1),
        "bound2": real(b2),
        "product": real(b1 * b2),
        "convolved": real(wiener_norm_bound(&conv)),
        "direct": real(wiener_norm_bound(&direct)),
        "max_excess": real(excess),
    });
    Ok((data, excess))
}

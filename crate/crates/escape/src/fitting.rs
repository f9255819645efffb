//! Quartic (and higher-order Taylor) reductions of a realistic well.
//!
//! The escape machinery works on the quartic normal form, so a realistic well
//! Ŵ is first replaced by a polynomial p(x) = Σ cₙxⁿ with p(0) = p′(0) = 0.
//! Four constructions are provided: two global interpolation fits, a
//! least-squares projection, and local Taylor expansions; [`normal_form`]
//! then rescales a quartic fit to unit curvature at the bottom and maps
//! frequencies, forcings, and energies between the two frames.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::{
    translate_well, ElectrostaticWell, EscapeSide, Potential, QuarticWell, TranslatedWell,
    WellGeometry,
};
use crate::util::{brent_root, integrate};

/// Which construction produced a fitted polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitScheme {
    /// Interpolates the well at both threshold-level boundaries and matches
    /// the curvature at the bottom.
    GlobalBarrier,
    /// Interpolates the well values at the boundaries and at its inflection
    /// point.
    GlobalInflection,
    /// Least-squares projection onto span{x², x³, x⁴} over the trapped
    /// interval.
    L2,
    /// Taylor expansion at the bottom, truncated at the given even order.
    Taylor(u32),
}

impl std::fmt::Display for FitScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitScheme::GlobalBarrier => write!(f, "barrier"),
            FitScheme::GlobalInflection => write!(f, "inflection"),
            FitScheme::L2 => write!(f, "l2"),
            FitScheme::Taylor(n) => write!(f, "taylor:{n}"),
        }
    }
}

impl Serialize for FitScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A polynomial well p(x) = Σ_{n≥2} cₙxⁿ, pinned to p(0) = p′(0) = 0.
#[derive(Clone, Debug, Serialize)]
pub struct FitPolynomial {
    pub scheme: FitScheme,
    /// Monomial coefficients; index i holds the degree-(i+2) term.
    pub coeffs: Vec<f64>,
    /// Interpolation nodes, empty for non-interpolating schemes.
    pub nodes: Vec<f64>,
    /// Interval the fit was built on, when one exists.
    pub interval: Option<(f64, f64)>,
    /// Barrier abscissa of the source well; Taylor fits are truncated at the
    /// energy level the polynomial takes there.
    pub source_barrier: Option<f64>,
}

impl FitPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() + 1
    }

    /// Coefficient of xⁿ (zero outside the stored range).
    pub fn coeff(&self, degree: usize) -> f64 {
        if degree < 2 {
            0.0
        } else {
            self.coeffs.get(degree - 2).copied().unwrap_or(0.0)
        }
    }
}

impl Potential for FitPolynomial {
    fn v(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = (acc + c) * q;
        }
        acc * q
    }
    fn dv(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * q + (i + 2) as f64 * c;
        }
        acc * q
    }
    fn d2v(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            let n = (i + 2) as f64;
            acc = acc * q + n * (n - 1.0) * c;
        }
        acc
    }
}

// 3x3 linear solve with partial pivoting; the systems here are tiny and well
// scaled, so no factorization library is warranted
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Result<[f64; 3]> {
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let mut det = 1.0;
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= 1e-14 * scale {
            return Err(Error::Singular {
                what: "fit",
                det: det * m[pivot][col],
            });
        }
        if pivot != col {
            m.swap(pivot, col);
            rhs.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Ok(x)
}

fn value_row(x: f64) -> [f64; 3] {
    [x * x, x * x * x, x * x * x * x]
}

fn check_interval(q_min: f64, q_max: f64) -> Result<()> {
    if !(q_min < 0.0 && 0.0 < q_max) {
        return Err(Error::invalid(
            "fit interval",
            format!("need q_min < 0 < q_max, got [{q_min}, {q_max}]"),
        ));
    }
    Ok(())
}

/// Quartic interpolating the well values at both interval ends and the
/// curvature at the bottom.
pub fn fit_global_barrier(
    well: &impl Potential,
    q_min: f64,
    q_max: f64,
) -> Result<FitPolynomial> {
    check_interval(q_min, q_max)?;
    let coeffs = solve3(
        [value_row(q_max), value_row(q_min), [2.0, 0.0, 0.0]],
        [well.v(q_max), well.v(q_min), well.d2v(0.0)],
    )?;
    Ok(FitPolynomial {
        scheme: FitScheme::GlobalBarrier,
        coeffs: coeffs.to_vec(),
        nodes: vec![q_min, q_max],
        interval: Some((q_min, q_max)),
        source_barrier: Some(q_max),
    })
}

/// Quartic interpolating the well values at both interval ends and at the
/// inflection point of the well inside (0, q_max).
pub fn fit_global_inflection(
    well: &impl Potential,
    q_min: f64,
    q_max: f64,
) -> Result<FitPolynomial> {
    check_interval(q_min, q_max)?;
    if !(well.d2v(0.0) > 0.0 && well.d2v(q_max) < 0.0) {
        return Err(Error::invalid(
            "inflection fit",
            format!("no curvature sign change on (0, {q_max}); nothing to interpolate"),
        ));
    }
    let q_infl = brent_root(|x| well.d2v(x), 0.0, q_max, 1e-14)?;
    let coeffs = solve3(
        [value_row(q_min), value_row(q_infl), value_row(q_max)],
        [well.v(q_min), well.v(q_infl), well.v(q_max)],
    )?;
    Ok(FitPolynomial {
        scheme: FitScheme::GlobalInflection,
        coeffs: coeffs.to_vec(),
        nodes: vec![q_min, q_infl, q_max],
        interval: Some((q_min, q_max)),
        source_barrier: Some(q_max),
    })
}

const MOMENT_TOL: f64 = 1e-10;

/// Least-squares projection of the well onto span{x², x³, x⁴} over
/// [q_min, q_max]: normal equations with an analytic Gram matrix and
/// quadrature moments.
pub fn fit_l2(well: &impl Potential, q_min: f64, q_max: f64) -> Result<FitPolynomial> {
    if !(q_min < q_max) {
        return Err(Error::invalid(
            "fit interval",
            format!("need q_min < q_max, got [{q_min}, {q_max}]"),
        ));
    }
    let mut gram = [[0.0; 3]; 3];
    for (i, row) in gram.iter_mut().enumerate() {
        for (j, g) in row.iter_mut().enumerate() {
            let p = (i + j + 5) as i32; // degrees (i+2)+(j+2), integrated
            *g = (q_max.powi(p) - q_min.powi(p)) / p as f64;
        }
    }
    let mut moments = [0.0; 3];
    for (i, m) in moments.iter_mut().enumerate() {
        *m = integrate(
            |x| well.v(x) * x.powi(i as i32 + 2),
            q_min,
            q_max,
            MOMENT_TOL,
        );
    }
    let coeffs = solve3(gram, moments)?;
    Ok(FitPolynomial {
        scheme: FitScheme::L2,
        coeffs: coeffs.to_vec(),
        nodes: Vec::new(),
        interval: Some((q_min, q_max)),
        source_barrier: None,
    })
}

fn check_taylor_order(order: u32) -> Result<()> {
    if !matches!(order, 4 | 6 | 8 | 10) {
        return Err(Error::invalid(
            "taylor order",
            format!("order {order} not in the supported set {{4, 6, 8, 10}}"),
        ));
    }
    Ok(())
}

/// Taylor expansion of the translated electrostatic well at its bottom, from
/// the closed-form derivatives: with gap g = d − q₀,
/// c₂ = ½ − ν/g³ and cₙ = −ν/gⁿ⁺¹ for n ≥ 3.
pub fn fit_taylor(well: &TranslatedWell<ElectrostaticWell>, order: u32) -> Result<FitPolynomial> {
    check_taylor_order(order)?;
    let (nu, d) = (well.base.nu, well.base.d);
    let gap = d - well.shift;
    let mut coeffs = vec![0.5 - nu / gap.powi(3)];
    for n in 3..=order {
        coeffs.push(-nu / gap.powi(n as i32 + 1));
    }
    let (q0, q_barrier) = well.base.equilibrium();
    Ok(FitPolynomial {
        scheme: FitScheme::Taylor(order),
        coeffs,
        nodes: Vec::new(),
        interval: None,
        source_barrier: Some(q_barrier - q0),
    })
}

// m-th binomial central difference of f at 0, divided by h^m
fn central_difference(f: &impl Fn(f64) -> f64, m: u32, h: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0f64;
    for j in 0..=m {
        let x = (0.5 * m as f64 - j as f64) * h;
        sum += if j % 2 == 0 { binom } else { -binom } * f(x);
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    sum / h.powi(m as i32)
}

// m-th derivative at 0 by twice Richardson-extrapolated central differences
// (h² and h⁴ error terms removed); the step ladder is walked until successive
// extrapolants stop agreeing better
fn derivative_at_zero(f: &impl Fn(f64) -> f64, m: u32, h0: f64) -> f64 {
    const LADDER: i32 = 9;
    let d: Vec<f64> = (0..LADDER)
        .map(|i| central_difference(f, m, h0 / f64::powi(2.0, i)))
        .collect();
    let r1: Vec<f64> = (0..d.len() - 1)
        .map(|i| (4.0 * d[i + 1] - d[i]) / 3.0)
        .collect();
    let r2: Vec<f64> = (0..r1.len() - 1)
        .map(|i| (16.0 * r1[i + 1] - r1[i]) / 15.0)
        .collect();
    let mut best = r2[0];
    let mut best_err = f64::INFINITY;
    for i in 0..r2.len() - 1 {
        let err = (r2[i + 1] - r2[i]).abs();
        if err < best_err {
            best_err = err;
            best = r2[i + 1];
        }
    }
    best
}

/// Taylor expansion of a generic well by numerical differentiation at the
/// bottom. Accuracy decays with the derivative order; prefer closed forms
/// where they exist ([`fit_taylor`]).
pub fn fit_taylor_numeric(well: &impl Potential, order: u32) -> Result<FitPolynomial> {
    check_taylor_order(order)?;
    let f = |x: f64| well.v(x);
    let mut coeffs = Vec::with_capacity(order as usize - 1);
    let mut factorial = 2.0;
    for n in 2..=order {
        // keep the widest stencil point inside |x| = 0.5
        let h0 = 1.0 / n as f64;
        coeffs.push(derivative_at_zero(&f, n, h0) / factorial);
        factorial *= (n + 1) as f64;
    }
    Ok(FitPolynomial {
        scheme: FitScheme::Taylor(order),
        coeffs,
        nodes: Vec::new(),
        interval: None,
        source_barrier: None,
    })
}

/// Rescaling of a fitted quartic to the unit-curvature normal form.
///
/// With p(x) = c₂x² + c₃x³ + c₄x⁴ and a = p″(0) = 2c₂, the time change
/// τ = √a·t maps ẍ = −p′(x) + F sin(Ωt) onto the normal form with
/// α = 3c₃/a, β = 4c₄/a. Positions are untouched (λ = 1); frequencies,
/// forcings and energies map back as Ω = √a·Ωₙ, F = a·Fₙ, E = a·Eₙ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalForm {
    pub well: QuarticWell,
    /// Curvature p″(0) of the fitted polynomial.
    pub a: f64,
    /// Coordinate scale (identity for this family).
    pub lambda: f64,
    /// Time scale t = μτ.
    pub mu: f64,
}

impl NormalForm {
    pub fn omega_phys(&self, omega_n: f64) -> f64 {
        self.a.sqrt() * omega_n
    }
    pub fn f_phys(&self, f_n: f64) -> f64 {
        self.a * f_n
    }
    pub fn e_phys(&self, e_n: f64) -> f64 {
        self.a * e_n
    }
    pub fn omega_normal(&self, omega: f64) -> f64 {
        omega / self.a.sqrt()
    }
    pub fn f_normal(&self, f: f64) -> f64 {
        f / self.a
    }
    pub fn e_normal(&self, e: f64) -> f64 {
        e / self.a
    }
}

pub fn normal_form(fit: &FitPolynomial) -> Result<NormalForm> {
    if fit.degree() != 4 {
        return Err(Error::invalid(
            "normal form",
            format!("needs a quartic fit, got degree {}", fit.degree()),
        ));
    }
    let a = 2.0 * fit.coeffs[0];
    if !(a > 0.0) {
        return Err(Error::invalid(
            "normal form",
            format!("fitted curvature p''(0) = {a} must be positive"),
        ));
    }
    Ok(NormalForm {
        well: QuarticWell::new(3.0 * fit.coeffs[1] / a, 4.0 * fit.coeffs[2] / a)?,
        a,
        lambda: 1.0,
        mu: 1.0 / a.sqrt(),
    })
}

/// Geometry of the fitted well.
///
/// Quartic fits carry their own barrier: the normal-form geometry is computed
/// and scaled back. Taylor fits are truncated at the energy level the
/// polynomial takes at the source well's barrier abscissa, which is where
/// escape is detected. A fit without a barrier is an error, never patched.
pub fn fit_geometry(fit: &FitPolynomial) -> Result<WellGeometry> {
    match fit.scheme {
        FitScheme::Taylor(_) => {
            let q_t = fit.source_barrier.ok_or_else(|| {
                Error::invalid(
                    "taylor geometry",
                    "no source barrier recorded; cannot place the truncation level",
                )
            })?;
            let e_thres = fit.v(q_t);
            if !(e_thres > 0.0) {
                return Err(Error::NoBarrier);
            }
            let (exit_left, q_low) = left_boundary(fit, e_thres)?;
            Ok(WellGeometry {
                q_equilibrium: 0.0,
                q_thres: q_t,
                e_max: e_thres,
                e_thres,
                q_low,
                q_high: q_t,
                escape: EscapeSide::Right,
                exit_left,
                exit_right: Some(q_t),
            })
        }
        _ => {
            let nf = normal_form(fit)?;
            let g = nf.well.geometry()?;
            Ok(WellGeometry {
                q_equilibrium: g.q_equilibrium,
                q_thres: g.q_thres,
                e_max: nf.e_phys(g.e_max),
                e_thres: nf.e_phys(g.e_thres),
                q_low: g.q_low,
                q_high: g.q_high,
                escape: g.escape,
                exit_left: g.exit_left,
                exit_right: g.exit_right,
            })
        }
    }
}

// left boundary of a truncated polynomial well at a level: the level crossing
// and, when the left slope turns over, the maximum that gates a permanent exit
fn left_boundary(p: &FitPolynomial, level: f64) -> Result<(Option<f64>, f64)> {
    let mut q = -1e-3;
    loop {
        if p.dv(q) > 0.0 {
            // slope turned over: a left maximum sits in (q, q/2048)
            let q_peak = brent_root(|x| p.dv(x), q, q / 2048.0, 1e-13)?;
            if p.v(q_peak) <= level {
                return Err(Error::invalid(
                    "taylor geometry",
                    format!("truncation level {level} above the left barrier {}", p.v(q_peak)),
                ));
            }
            let q_low = brent_root(|x| p.v(x) - level, q_peak, 0.0, 1e-15)?;
            return Ok((Some(q_peak), q_low));
        }
        if p.v(q) > 1e6 * level {
            // wall keeps rising; treat it as unbounded
            let q_low = brent_root(|x| p.v(x) - level, q, 0.0, 1e-15)?;
            return Ok((None, q_low));
        }
        q *= 2.0;
    }
}

/// Everything needed to audit one fit against its source well.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub scheme: FitScheme,
    /// Monomial coefficients, degree 2 first.
    pub coeffs: Vec<f64>,
    /// Defining-constraint residuals: value mismatches at the interpolation
    /// nodes, plus the curvature mismatch for the curvature-matched scheme.
    pub constraint_residuals: Vec<f64>,
    /// ∫(Ŵ−p)² over the evaluation interval.
    pub l2_residual: f64,
    pub geometry: Option<WellGeometry>,
    /// Why geometry is absent, when it is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry_error: Option<String>,
    /// Normal-form bridge for quartic fits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalForm>,
}

/// Audit a fit over an evaluation interval (usually the trapped interval of
/// the source well).
pub fn fit_report(
    well: &impl Potential,
    fit: &FitPolynomial,
    q_lo: f64,
    q_hi: f64,
) -> Result<FitReport> {
    let mut residuals: Vec<f64> = fit.nodes.iter().map(|&x| fit.v(x) - well.v(x)).collect();
    if fit.scheme == FitScheme::GlobalBarrier {
        residuals.push(fit.d2v(0.0) - well.d2v(0.0));
    }
    let l2_residual = integrate(
        |x| {
            let d = well.v(x) - fit.v(x);
            d * d
        },
        q_lo,
        q_hi,
        MOMENT_TOL,
    );
    let (geometry, geometry_error) = match fit_geometry(fit) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let normal_form = if fit.degree() == 4 {
        normal_form(fit).ok()
    } else {
        None
    };
    Ok(FitReport {
        scheme: fit.scheme,
        coeffs: fit.coeffs.clone(),
        constraint_residuals: residuals,
        l2_residual,
        geometry,
        geometry_error,
        normal_form,
    })
}

/// The translated electrostatic well with its trapped interval, the common
/// starting point of every fit pipeline.
pub fn mems_fit_input(
    well: &ElectrostaticWell,
) -> Result<(TranslatedWell<ElectrostaticWell>, WellGeometry)> {
    let translated = translate_well(well);
    let geometry = translated.geometry()?;
    Ok((translated, geometry))
}

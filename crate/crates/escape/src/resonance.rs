//! The 1:1 resonance reduction of the forced well and the two escape
//! mechanisms built on it.
//!
//! Averaging the forced dynamics over the fast phase leaves a slow flow on
//! the phase cylinder (ϑ, ξ) that conserves C(ϑ, ξ) = ξ − F G(ξ) sin ϑ − Ω J(ξ).
//! The trajectory through the origin (the limiting phase trajectory, LPT)
//! has C = 0 and decides escape: it must climb from ξ = 0 to the threshold
//! level. Along the way it is pinned wherever |ξ − Ω J(ξ)| / G(ξ) exceeds F,
//! so the critical force at a given Ω is the supremum of that ratio over the
//! climb. An interior supremum is a saddle point of C (the saddle mechanism);
//! a supremum at the threshold level itself means the LPT becomes tangent to
//! it (the maximum mechanism). The two branches cross at a sharp dip, the
//! most escape-prone forcing frequency.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action_angle::{aa_data, fourier_g_prime, AAData};
use crate::error::{Error, Result};
use crate::potentials::QuarticWell;
use crate::util::{brent_root, dopri5};

/// Harmonic forcing F sin(Ωt + ψ). ψ only matters for the raw simulator;
/// the averaged slow flow is ψ-independent.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ForcingParams {
    pub f: f64,
    pub omega: f64,
    #[serde(default)]
    pub psi: f64,
}

impl ForcingParams {
    pub fn new(f: f64, omega: f64) -> Result<Self> {
        if !(f >= 0.0) || !f.is_finite() {
            return Err(Error::invalid("forcing", format!("F = {f} must be >= 0")));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::invalid(
                "forcing",
                format!("Omega = {omega} must be > 0"),
            ));
        }
        Ok(ForcingParams { f, omega, psi: 0.0 })
    }

    pub fn with_psi(mut self, psi: f64) -> Self {
        self.psi = psi;
        self
    }
}

/// Point on the phase cylinder: slow phase ϑ and averaged energy ξ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlowState {
    pub theta_slow: f64,
    pub xi: f64,
}

/// Which escape mechanism produced a threshold point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Saddle,
    Maximum,
    Simulation,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mechanism::Saddle => "saddle",
            Mechanism::Maximum => "maximum",
            Mechanism::Simulation => "simulation",
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EscapePoint {
    pub omega: f64,
    pub f_crit: f64,
    pub mechanism: Mechanism,
    /// Resonance energy behind the threshold: the pinning level for a saddle
    /// point, the evaluation level for the maximum line. Absent for
    /// simulation points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
}

/// Escape threshold curve, sorted by omega.
#[derive(Clone, Debug, Serialize)]
pub struct EscapeCurve {
    pub points: Vec<EscapePoint>,
    /// The sharp minimum where the two analytic branches meet.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dip: Option<EscapePoint>,
}

/// C(ϑ, ξ) = ξ − F G(ξ) sin ϑ − Ω J(ξ), the first integral of the slow flow.
pub fn conservation_c(well: &QuarticWell, params: &ForcingParams, state: &SlowState) -> Result<f64> {
    if state.xi == 0.0 {
        // J(0) = G(0) = 0: the origin circle is a level set on its own
        return Ok(0.0);
    }
    let aa = aa_data(well, state.xi)?;
    Ok(state.xi - params.f * aa.g * state.theta_slow.sin() - params.omega * aa.j)
}

/// The two slow phases where ∂C/∂ϑ = 0: (π/2, 3π/2). With G > 0 the first
/// hosts the saddle points of C, the second the tangency of the LPT with the
/// threshold level; the Hessian test in the saddle solver is authoritative,
/// not the labels.
pub fn critical_angles() -> (f64, f64) {
    (PI / 2.0, 3.0 * PI / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlowStatus {
    Completed,
    EscapedRm,
}

#[derive(Clone, Debug)]
pub struct SlowTrajectory {
    /// (slow time, state) at every accepted integrator step.
    pub states: Vec<(f64, SlowState)>,
    pub status: SlowStatus,
}

/// Integrate the slow flow ξ' = Ω_nat F G cos ϑ,
/// ϑ' = Ω_nat (1 − F G' sin ϑ) − Ω from `initial` to slow time `t_end`.
///
/// Terminates early with `EscapedRm` when ξ reaches the barrier energy: the
/// resonance approximation has then carried the orbit out of the well. The
/// origin circle ξ = 0 is invariant for the exact flow, so a numerical
/// undershoot there is grazed (clamped), not treated as an exit.
pub fn integrate_slow_flow(
    well: &QuarticWell,
    params: &ForcingParams,
    initial: SlowState,
    t_end: f64,
) -> Result<SlowTrajectory> {
    let (_, e_max) = well.barrier()?;
    if !(initial.xi >= 0.0 && initial.xi < e_max) {
        return Err(Error::EnergyOutOfRange {
            e: initial.xi,
            e_max,
        });
    }
    let floor = 1e-12 * e_max;
    let ceil = (1.0 - 1e-9) * e_max;
    let rhs = |_t: f64, y: &[f64; 2]| {
        let xi = y[1].clamp(floor, ceil);
        // aa quantities are smooth inside (0, E_max); clamped evaluation
        // keeps trial stages of the integrator from stepping outside
        let aa = aa_data(well, xi).expect("clamped energy is inside the well");
        let gp = fourier_g_prime(well, xi).expect("clamped energy is inside the well");
        let (sin_t, cos_t) = y[0].sin_cos();
        [
            aa.omega_nat * (1.0 - params.f * gp * sin_t) - params.omega,
            aa.omega_nat * params.f * aa.g * cos_t,
        ]
    };
    let mut states = vec![(0.0, initial)];
    let mut status = SlowStatus::Completed;
    let y0 = [initial.theta_slow, initial.xi.max(floor)];
    dopri5(rhs, 0.0, y0, t_end, 1e-10, 1e-12, |step, y| {
        let xi = y[1];
        if xi >= ceil {
            // locate the crossing inside the step for a clean endpoint
            let t_hit = if step.eval(step.t0)[1] < ceil {
                brent_root(|t| step.eval(t)[1] - ceil, step.t0, step.t1(), 1e-12)
                    .unwrap_or(step.t1())
            } else {
                step.t0
            };
            let yh = step.eval(t_hit);
            states.push((
                t_hit,
                SlowState {
                    theta_slow: yh[0],
                    xi: yh[1],
                },
            ));
            status = SlowStatus::EscapedRm;
            return true;
        }
        states.push((
            step.t1(),
            SlowState {
                theta_slow: y[0],
                xi: xi.max(floor),
            },
        ));
        false
    })?;
    Ok(SlowTrajectory { states, status })
}

/// F sin ϑ needed to hold the LPT (C = 0) at level ξ: (ξ − Ω J(ξ)) / G(ξ).
/// Signed; the critical force at Ω is the supremum of its magnitude over the
/// climb to the threshold level.
fn lpt_stall_force(well: &QuarticWell, omega: f64, xi: f64) -> Result<f64> {
    let aa = aa_data(well, xi)?;
    Ok((xi - omega * aa.j) / aa.g)
}

/// One saddle-mechanism point: the (F, Ω) solving
/// F G'(ξ) + Ω J'(ξ) = 1, F G(ξ) + Ω J(ξ) = ξ at a pinning energy ξ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SaddlePoint {
    pub omega: f64,
    pub f_crit: f64,
    pub xi: f64,
}

/// Result of sweeping the saddle system over an energy grid. Points where
/// the system is singular, gives a nonpositive F or Ω, or whose critical
/// point fails the saddle test are reported in `skipped` with the reason.
#[derive(Clone, Debug)]
pub struct SaddleBranch {
    pub points: Vec<SaddlePoint>,
    pub skipped: Vec<(f64, String)>,
}

impl SaddleBranch {
    pub fn into_curve(self) -> EscapeCurve {
        let mut points: Vec<EscapePoint> = self
            .points
            .into_iter()
            .map(|p| EscapePoint {
                omega: p.omega,
                f_crit: p.f_crit,
                mechanism: Mechanism::Saddle,
                xi: Some(p.xi),
            })
            .collect();
        points.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        EscapeCurve { points, dip: None }
    }
}

fn saddle_point_at(well: &QuarticWell, xi: f64) -> Result<SaddlePoint> {
    let aa = aa_data(well, xi)?;
    let jp = 1.0 / aa.omega_nat;
    let gp = fourier_g_prime(well, xi)?;
    let det = gp * aa.j - jp * aa.g;
    if det.abs() < 1e-12 * (gp * aa.j).abs().max(jp * aa.g).max(1e-300) {
        return Err(Error::Singular {
            what: "saddle system",
            det,
        });
    }
    let f = (aa.j - xi * jp) / det;
    let omega = (xi * gp - aa.g) / det;
    if !(f > 0.0) || !(omega > 0.0) {
        return Err(Error::invalid(
            "saddle point",
            format!("nonphysical solution F = {f}, Omega = {omega} at xi = {xi}"),
        ));
    }
    // saddle test: at ϑ = π/2 the mixed derivative vanishes and
    // ∂²C/∂ϑ² = F G > 0, so C has a saddle iff ∂²C/∂ξ² < 0 there
    let h = 1e-5 * xi;
    let c_xi = |x: f64| -> Result<f64> {
        let a = aa_data(well, x)?;
        Ok(1.0 - f * fourier_g_prime(well, x)? - omega / a.omega_nat)
    };
    let c_xixi = (c_xi(xi + h)? - c_xi(xi - h)?) / (2.0 * h);
    if c_xixi >= 0.0 {
        return Err(Error::invalid(
            "saddle point",
            format!("critical point at xi = {xi} is not a saddle (C_xixi = {c_xixi})"),
        ));
    }
    Ok(SaddlePoint {
        omega,
        f_crit: f,
        xi,
    })
}

/// Saddle-mechanism branch over an energy grid, one linear solve per level.
pub fn saddle_curve(well: &QuarticWell, xi_grid: &[f64]) -> SaddleBranch {
    let results: Vec<(f64, Result<SaddlePoint>)> = xi_grid
        .par_iter()
        .map(|&xi| (xi, saddle_point_at(well, xi)))
        .collect();
    let mut branch = SaddleBranch {
        points: Vec::new(),
        skipped: Vec::new(),
    };
    for (xi, r) in results {
        match r {
            Ok(p) => branch.points.push(p),
            Err(e) => branch.skipped.push((xi, e.to_string())),
        }
    }
    branch
}

/// Margin below the threshold level at which the maximum line is evaluated.
///
/// G(ξ) vanishes logarithmically at the separatrix, so the line's F diverges
/// as the evaluation level approaches E_thres exactly; physically the orbit
/// leaves the resonance approximation slightly below the barrier. The margin
/// is pinned so that the line reproduces brute-force escape thresholds on
/// the maximum-mechanism side of the dip (F(0.92) = 0.0856 for the
/// benchmark double well, against a simulated bracket around 0.0855).
pub const MAXIMUM_LEVEL_MARGIN: f64 = 2.8e-2;

/// Maximum-mechanism threshold: a straight line in Ω from the LPT tangency
/// condition ξ* + F G(ξ*) − Ω J(ξ*) = 0 at ξ* just below the threshold.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaximumLine {
    pub slope: f64,
    pub intercept: f64,
    pub xi_star: f64,
}

impl MaximumLine {
    pub fn f_at(&self, omega: f64) -> f64 {
        self.slope * omega + self.intercept
    }

    /// Ω where the line crosses zero force.
    pub fn omega_root(&self) -> f64 {
        -self.intercept / self.slope
    }
}

pub fn maximum_line(well: &QuarticWell, e_thres: f64) -> Result<MaximumLine> {
    maximum_line_with_margin(well, e_thres, MAXIMUM_LEVEL_MARGIN)
}

pub fn maximum_line_with_margin(
    well: &QuarticWell,
    e_thres: f64,
    margin: f64,
) -> Result<MaximumLine> {
    let (_, e_max) = well.barrier()?;
    if !(e_thres > 0.0 && e_thres <= e_max) {
        return Err(Error::EnergyOutOfRange {
            e: e_thres,
            e_max,
        });
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::invalid(
            "maximum line",
            format!("margin {margin} outside (0, 1)"),
        ));
    }
    let xi_star = (1.0 - margin) * e_thres;
    let aa = aa_data(well, xi_star)?;
    Ok(MaximumLine {
        slope: aa.j / aa.g,
        intercept: -xi_star / aa.g,
        xi_star,
    })
}

/// Critical force at one frequency plus the level and mechanism behind it:
/// the supremum of |(ξ − Ω J)/G| over ξ ∈ (0, ξ*], grid-scanned in √ξ and
/// refined by golden section. A supremum attained at ξ* is the maximum
/// mechanism; an interior one is a saddle point being crossed.
pub fn critical_force_theory(
    well: &QuarticWell,
    e_thres: f64,
    omega: f64,
) -> Result<(f64, f64, Mechanism)> {
    critical_force_theory_with_margin(well, e_thres, omega, MAXIMUM_LEVEL_MARGIN)
}

/// [`critical_force_theory`] with an explicit level margin instead of the
/// calibrated default.
pub fn critical_force_theory_with_margin(
    well: &QuarticWell,
    e_thres: f64,
    omega: f64,
    margin: f64,
) -> Result<(f64, f64, Mechanism)> {
    let (_, e_max) = well.barrier()?;
    if !(e_thres > 0.0 && e_thres <= e_max) {
        return Err(Error::EnergyOutOfRange {
            e: e_thres,
            e_max,
        });
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::invalid(
            "level margin",
            format!("margin {margin} outside (0, 1)"),
        ));
    }
    let xi_star = (1.0 - margin) * e_thres;
    let s_star = xi_star.sqrt();
    let n = 600;
    let h_abs = |s: f64| -> Result<f64> {
        Ok(lpt_stall_force(well, omega, (s * s).max(1e-300))?.abs())
    };
    let mut best_i = n;
    let mut best = f64::MIN;
    for i in 1..=n {
        let v = h_abs(s_star * i as f64 / n as f64)?;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if best_i == n {
        return Ok((best, xi_star, Mechanism::Maximum));
    }
    // golden-section refinement on the bracketing interval in s
    let (mut lo, mut hi) = (
        s_star * (best_i - 1) as f64 / n as f64,
        s_star * (best_i + 1) as f64 / n as f64,
    );
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (h_abs(x1)?, h_abs(x2)?);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = h_abs(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = h_abs(x1)?;
        }
        if hi - lo < 1e-12 * s_star {
            break;
        }
    }
    let s_at = 0.5 * (lo + hi);
    let f_at = h_abs(s_at)?;
    if f_at >= best {
        Ok((f_at, s_at * s_at, Mechanism::Saddle))
    } else {
        Ok((best, (s_star * best_i as f64 / n as f64).powi(2), Mechanism::Saddle))
    }
}

/// True when a saddle-branch point is on the critical curve: nothing pins
/// the LPT at a lower energy first, i.e. the frequency-wise critical force
/// equals the point's F and is attained at its ξ.
pub fn saddle_point_is_critical(
    well: &QuarticWell,
    e_thres: f64,
    point: &SaddlePoint,
) -> Result<bool> {
    let (f, xi, mech) = critical_force_theory(well, e_thres, point.omega)?;
    Ok(mech == Mechanism::Saddle
        && (f - point.f_crit).abs() <= 1e-4 * point.f_crit
        && (xi - point.xi).abs() <= 1e-3 * e_thres)
}

/// Escape threshold over a frequency grid: the pointwise lower envelope of
/// the valid saddle branch and the maximum line, which the stall-force
/// supremum produces directly. Each point carries its mechanism; the dip is
/// the grid argmin.
pub fn combined_escape_curve(
    well: &QuarticWell,
    e_thres: f64,
    omegas: &[f64],
) -> Result<EscapeCurve> {
    combined_escape_curve_with_margin(well, e_thres, omegas, MAXIMUM_LEVEL_MARGIN)
}

/// [`combined_escape_curve`] with an explicit level margin.
pub fn combined_escape_curve_with_margin(
    well: &QuarticWell,
    e_thres: f64,
    omegas: &[f64],
    margin: f64,
) -> Result<EscapeCurve> {
    let mut points: Vec<EscapePoint> = omegas
        .par_iter()
        .map(|&omega| {
            let (f, xi, mechanism) = critical_force_theory_with_margin(well, e_thres, omega, margin)?;
            Ok(EscapePoint {
                omega,
                f_crit: f,
                mechanism,
                xi: Some(xi),
            })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let dip = points
        .iter()
        .copied()
        .min_by(|a, b| a.f_crit.total_cmp(&b.f_crit));
    Ok(EscapeCurve { points, dip })
}

/// C sampled on a uniform phase-cylinder grid, with the LPT (C = 0) contour.
#[derive(Clone, Debug, Serialize)]
pub struct RmGrid {
    pub thetas: Vec<f64>,
    pub xis: Vec<f64>,
    /// Row-major: c[i * xis.len() + j] = C(thetas[i], xis[j]).
    pub c: Vec<f64>,
    /// Lower branch of the C = 0 contour: for each ϑ with a zero crossing,
    /// the smallest ξ where C vanishes. Its top is where the LPT stalls.
    pub lpt: Vec<(f64, f64)>,
}

/// Sample C over [0, 2π] × (0, E_thres) on an n_theta × n_xi grid and trace
/// the LPT contour.
pub fn rm_grid(
    well: &QuarticWell,
    params: &ForcingParams,
    e_thres: f64,
    n_theta: usize,
    n_xi: usize,
) -> Result<RmGrid> {
    if n_theta < 2 || n_xi < 2 {
        return Err(Error::invalid("rm grid", "grid sizes must be at least 2"));
    }
    let (_, e_max) = well.barrier()?;
    if !(e_thres > 0.0 && e_thres <= e_max) {
        return Err(Error::EnergyOutOfRange {
            e: e_thres,
            e_max,
        });
    }
    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| 2.0 * PI * i as f64 / (n_theta - 1) as f64)
        .collect();
    let xis: Vec<f64> = (0..n_xi)
        .map(|j| e_thres * (j + 1) as f64 / (n_xi + 1) as f64)
        .collect();
    let aas: Vec<AAData> = xis
        .par_iter()
        .map(|&xi| aa_data(well, xi))
        .collect::<Result<_>>()?;
    let mut c = Vec::with_capacity(n_theta * n_xi);
    for &theta in &thetas {
        let sin_t = theta.sin();
        for (j, &xi) in xis.iter().enumerate() {
            c.push(xi - params.f * aas[j].g * sin_t - params.omega * aas[j].j);
        }
    }
    let lpt = lpt_contour(well, params, e_thres, &thetas)?;
    Ok(RmGrid {
        thetas,
        xis,
        c,
        lpt,
    })
}

/// Smallest-ξ zero of C(ϑ, ·) for each ϑ where one exists.
pub fn lpt_contour(
    well: &QuarticWell,
    params: &ForcingParams,
    e_thres: f64,
    thetas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let xi_cap = (1.0 - MAXIMUM_LEVEL_MARGIN) * e_thres;
    let cap_sqrt = xi_cap.sqrt();
    let n_scan = 256;
    let mut out = Vec::new();
    for &theta in thetas {
        let sin_t = theta.sin();
        let cval = |xi: f64| -> Result<f64> {
            let aa = aa_data(well, xi)?;
            Ok(xi - params.f * aa.g * sin_t - params.omega * aa.j)
        };
        // scan in sqrt(xi): near the origin C ~ -F sqrt(xi/2) sin theta, so
        // crossings only exist for sin theta > 0 and cluster at small xi
        let mut prev_s = cap_sqrt * 1.0 / n_scan as f64;
        let mut prev_c = cval(prev_s * prev_s)?;
        let mut found = None;
        if prev_c == 0.0 {
            found = Some(prev_s * prev_s);
        } else {
            for i in 2..=n_scan {
                let s = cap_sqrt * i as f64 / n_scan as f64;
                let cv = cval(s * s)?;
                if prev_c * cv <= 0.0 {
                    let xi = brent_root(
                        |x| cval(x).unwrap_or(f64::NAN),
                        prev_s * prev_s,
                        s * s,
                        1e-14,
                    )?;
                    found = Some(xi);
                    break;
                }
                prev_s = s;
                prev_c = cv;
            }
        }
        if let Some(xi) = found {
            out.push((theta, xi));
        }
    }
    Ok(out)
}

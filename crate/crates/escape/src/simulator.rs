//! Brute-force escape oracle: integrate q̈ + V′(q) = F sin(Ωt + ψ) from rest
//! and decide escape by a first-hitting or an energy criterion, with
//! bisection in F for the numerical critical forcing.
//!
//! Escape crossings are localized by root-finding on the integrator's dense
//! output, not by step postchecks, so escape times are accurate to the
//! root-finder tolerance rather than the step size.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::{Potential, WellGeometry};
use crate::resonance::{EscapeCurve, EscapePoint, ForcingParams, Mechanism};
use crate::util::{brent_root, dopri5};

/// How escape is detected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EscapeCriterion {
    /// The trajectory crosses an exit line of the well geometry.
    #[serde(rename = "hitting")]
    FirstHitting,
    /// The instantaneous energy ½p² + V(q) exceeds the threshold level.
    Energy,
}

impl std::fmt::Display for EscapeCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EscapeCriterion::FirstHitting => write!(f, "hitting"),
            EscapeCriterion::Energy => write!(f, "energy"),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SimConfig {
    pub params: ForcingParams,
    /// Integration horizon in forcing periods.
    pub horizon_periods: u32,
    pub criterion: EscapeCriterion,
    pub rtol: f64,
    pub atol: f64,
    /// Record a uniformly sampled (t, q, p, E) trace.
    pub trace: bool,
    /// Initial state; escape studies start from rest at the bottom.
    pub initial: (f64, f64),
}

impl SimConfig {
    pub fn new(params: ForcingParams) -> Self {
        SimConfig {
            params,
            horizon_periods: 1000,
            criterion: EscapeCriterion::FirstHitting,
            rtol: 1e-9,
            atol: 1e-11,
            trace: false,
            initial: (0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_periods < 1 {
            return Err(Error::invalid("simulation", "horizon must be >= 1 period"));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::invalid("simulation", "tolerances must be > 0"));
        }
        Ok(())
    }

    fn horizon_time(&self) -> f64 {
        2.0 * PI / self.params.omega * self.horizon_periods as f64
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    pub e: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimResult {
    pub escaped: bool,
    pub t_escape: Option<f64>,
    pub max_energy: f64,
    pub criterion: EscapeCriterion,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceSample>>,
}

const TRACE_SAMPLES: usize = 4096;

/// Integrate one forced orbit to the horizon or the first escape.
///
/// A trajectory that drives the integrator's step size to zero (possible
/// only beyond the trapped region, e.g. at the electrode singularity of an
/// electrostatic well) counts as escaped at the last reachable time.
pub fn integrate_orbit(
    well: &(impl Potential + Sync),
    geo: &WellGeometry,
    config: &SimConfig,
) -> Result<SimResult> {
    config.validate()?;
    let p = config.params;
    let energy = |q: f64, v: f64| 0.5 * v * v + well.v(q);
    let rhs = move |t: f64, y: &[f64; 2]| [y[1], -well.dv(y[0]) + p.f * (p.omega * t + p.psi).sin()];
    let t_end = config.horizon_time();

    let mut trace: Option<Vec<TraceSample>> = config.trace.then(Vec::new);
    let trace_dt = t_end / TRACE_SAMPLES as f64;
    let mut next_sample = 0.0;
    let mut max_energy = energy(config.initial.0, config.initial.1);
    let mut escape: Option<f64> = None;
    let mut last_t = 0.0;

    // escape functions change sign at the first escape event
    let e_thres = geo.e_thres;
    let (exit_left, exit_right) = (geo.exit_left, geo.exit_right);
    let event = |y: &[f64; 2]| -> f64 {
        match config.criterion {
            EscapeCriterion::FirstHitting => {
                let mut m = f64::INFINITY;
                if let Some(xr) = exit_right {
                    m = m.min(xr - y[0]);
                }
                if let Some(xl) = exit_left {
                    m = m.min(y[0] - xl);
                }
                m
            }
            EscapeCriterion::Energy => e_thres - energy(y[0], y[1]),
        }
    };

    let run = dopri5(
        rhs,
        0.0,
        [config.initial.0, config.initial.1],
        t_end,
        config.rtol,
        config.atol,
        |step, y1| {
            last_t = step.t1();
            if let Some(tr) = trace.as_mut() {
                while next_sample <= step.t1() {
                    let ys = step.eval(next_sample);
                    tr.push(TraceSample {
                        t: next_sample,
                        q: ys[0],
                        p: ys[1],
                        e: energy(ys[0], ys[1]),
                    });
                    next_sample += trace_dt;
                }
            }
            max_energy = max_energy.max(energy(y1[0], y1[1]));
            if event(y1) <= 0.0 {
                let g = |t: f64| event(&step.eval(t));
                let t_hit = if g(step.t0) > 0.0 {
                    brent_root(g, step.t0, step.t1(), 1e-12).unwrap_or(step.t1())
                } else {
                    step.t0
                };
                escape = Some(t_hit);
                return true;
            }
            false
        },
    );
    match run {
        Ok(_) => {}
        // step collapse happens only outside the trapped region (electrode
        // singularity); everything inside is smooth
        Err(Error::NoConvergence { what, .. }) if what.contains("step size") => {
            escape = Some(last_t);
        }
        Err(e) => return Err(e),
    }
    Ok(SimResult {
        escaped: escape.is_some(),
        t_escape: escape,
        max_energy,
        criterion: config.criterion,
        trace,
    })
}

/// Convenience verdict: does the orbit escape within the horizon?
pub fn escapes(
    well: &(impl Potential + Sync),
    geo: &WellGeometry,
    config: &SimConfig,
    f: f64,
) -> Result<bool> {
    let mut c = *config;
    c.params.f = f;
    c.trace = false;
    Ok(integrate_orbit(well, geo, &c)?.escaped)
}

/// Bisection bracket around the numerical critical force at one frequency.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BisectResult {
    pub omega: f64,
    pub f_low: f64,
    pub f_high: f64,
}

impl BisectResult {
    pub fn f_crit(&self) -> f64 {
        0.5 * (self.f_low + self.f_high)
    }
}

/// Width of the final bisection bracket.
pub const BISECT_TOL: f64 = 1e-4;

/// Shrink an (f_low stays, f_high escapes) bracket below `BISECT_TOL`.
pub fn critical_force_bisect(
    well: &(impl Potential + Sync),
    geo: &WellGeometry,
    omega: f64,
    f_bracket: (f64, f64),
    config: &SimConfig,
) -> Result<BisectResult> {
    let (mut lo, mut hi) = f_bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::invalid(
            "bisection bracket",
            format!("need 0 <= low < high, got ({lo}, {hi})"),
        ));
    }
    let mut c = *config;
    c.params.omega = omega;
    if lo > 0.0 && escapes(well, geo, &c, lo)? {
        return Err(Error::invalid(
            "bisection bracket",
            format!("orbit escapes already at the lower end F = {lo}"),
        ));
    }
    if !escapes(well, geo, &c, hi)? {
        return Err(Error::invalid(
            "bisection bracket",
            format!("orbit stays trapped at the upper end F = {hi}"),
        ));
    }
    while hi - lo >= BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if escapes(well, geo, &c, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BisectResult {
        omega,
        f_low: lo,
        f_high: hi,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub omega: f64,
    pub f_crit_low: f64,
    pub f_crit_high: f64,
    pub horizon_periods: u32,
    pub criterion: EscapeCriterion,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Frequencies where no bracket could be established, with the reason.
    pub failures: Vec<(f64, String)>,
}

impl SweepResult {
    pub fn into_curve(self) -> EscapeCurve {
        let points = self
            .rows
            .into_iter()
            .map(|r| EscapePoint {
                omega: r.omega,
                f_crit: 0.5 * (r.f_crit_low + r.f_crit_high),
                mechanism: Mechanism::Simulation,
                xi: None,
            })
            .collect();
        EscapeCurve { points, dip: None }
    }
}

/// Largest forcing the auto-bracketing will try before giving up on a point.
const SWEEP_F_CAP: f64 = 16.0;

/// Bisect the critical force at every frequency, expanding a bracket upward
/// from F = 0 first. Per-point failures are recorded and the sweep goes on.
pub fn sweep(
    well: &(impl Potential + Sync),
    geo: &WellGeometry,
    omegas: &[f64],
    config: &SimConfig,
    f_guess: f64,
) -> SweepResult {
    let results: Vec<(f64, Result<BisectResult>)> = omegas
        .par_iter()
        .map(|&omega| {
            let r = (|| {
                let mut c = *config;
                c.params.omega = omega;
                let mut lo = 0.0;
                let mut hi = f_guess.max(BISECT_TOL);
                while !escapes(well, geo, &c, hi)? {
                    lo = hi;
                    hi *= 2.0;
                    if hi > SWEEP_F_CAP {
                        return Err(Error::invalid(
                            "sweep bracket",
                            format!("no escape up to F = {hi} at Omega = {omega}"),
                        ));
                    }
                }
                critical_force_bisect(well, geo, omega, (lo, hi), &c)
            })();
            (omega, r)
        })
        .collect();
    let mut out = SweepResult {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (omega, r) in results {
        match r {
            Ok(b) => out.rows.push(SweepRow {
                omega,
                f_crit_low: b.f_low,
                f_crit_high: b.f_high,
                horizon_periods: config.horizon_periods,
                criterion: config.criterion,
            }),
            Err(e) => out.failures.push((omega, e.to_string())),
        }
    }
    out.rows.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    out
}

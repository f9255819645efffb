//! Potential wells: the quartic family, the electrostatic (parallel-plate)
//! well, translation to a well-bottom frame, and well geometry (barrier,
//! threshold energy, boundaries).
//!
//! The quartic normal form is V(q) = q²/2 + (α/3)q³ + (β/4)q⁴, so V(0) = 0,
//! V'(0) = 0 and V''(0) = 1 by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::brent_root;

/// A one-dimensional potential, smooth on the domain the caller probes.
pub trait Potential {
    fn v(&self, q: f64) -> f64;
    fn dv(&self, q: f64) -> f64;
    fn d2v(&self, q: f64) -> f64;

    /// Total energy of a phase point.
    fn energy(&self, q: f64, p: f64) -> f64 {
        0.5 * p * p + self.v(q)
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn v(&self, q: f64) -> f64 {
        (**self).v(q)
    }
    fn dv(&self, q: f64) -> f64 {
        (**self).dv(q)
    }
    fn d2v(&self, q: f64) -> f64 {
        (**self).d2v(q)
    }
}

/// Shape classification of the quartic family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WellCase {
    /// α < 0 and 0 < β < 2α²/9: one barrier, a second (deeper) well beyond it.
    DoubleWell,
    /// β < 0: well bounded by a maximum on each side.
    InvertedQuartic,
    /// No finite barrier (or outside the supported parameter region).
    Unsupported,
}

/// Which boundary crossing counts as escape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EscapeSide {
    Left,
    Right,
    /// Symmetric inverted well: both maxima at the same height.
    Both,
}

/// Classify the quartic well V(q) = q²/2 + (α/3)q³ + (β/4)q⁴.
pub fn classify_quartic(alpha: f64, beta: f64) -> WellCase {
    if beta < 0.0 {
        WellCase::InvertedQuartic
    } else if alpha < 0.0 && beta > 0.0 && beta < 2.0 * alpha * alpha / 9.0 {
        WellCase::DoubleWell
    } else {
        WellCase::Unsupported
    }
}

/// Both real critical points of V away from the origin, i.e. roots of
/// βq² + αq + 1, ascending. None when complex or β = 0.
pub(crate) fn outer_critical_points(alpha: f64, beta: f64) -> Option<(f64, f64)> {
    let disc = alpha * alpha - 4.0 * beta;
    if beta == 0.0 || disc <= 0.0 {
        return None;
    }
    let s = if alpha >= 0.0 { 1.0 } else { -1.0 };
    let big = -0.5 * (alpha + s * disc.sqrt());
    let (r1, r2) = (big / beta, 1.0 / big);
    Some((r1.min(r2), r1.max(r2)))
}

/// Barrier position and height of a quartic well: the local maximum of V that
/// bounds the well around the origin. For the inverted case this is the
/// smaller of the two maxima.
pub fn quartic_barrier(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let well = QuarticWell::new(alpha, beta)?;
    match classify_quartic(alpha, beta) {
        WellCase::DoubleWell => {
            // both critical points sit right of the origin (α < 0); the
            // nearer one is the maximum
            let (lo, _hi) = outer_critical_points(alpha, beta).expect("case has real roots");
            Ok((lo, well.v(lo)))
        }
        WellCase::InvertedQuartic => {
            let (lo, hi) = outer_critical_points(alpha, beta).expect("beta < 0 has real roots");
            // lo < 0 < hi, both maxima; the smaller one gates escape
            let (v_lo, v_hi) = (well.v(lo), well.v(hi));
            if v_hi <= v_lo {
                Ok((hi, v_hi))
            } else {
                Ok((lo, v_lo))
            }
        }
        WellCase::Unsupported => Err(Error::NoBarrier),
    }
}

/// Quartic well in normal form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarticWell {
    pub alpha: f64,
    pub beta: f64,
}

impl QuarticWell {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::invalid("quartic well", "coefficients must be finite"));
        }
        Ok(QuarticWell { alpha, beta })
    }

    pub fn case(&self) -> WellCase {
        classify_quartic(self.alpha, self.beta)
    }

    /// (q_thres, E_max) of the barrier bounding the well.
    pub fn barrier(&self) -> Result<(f64, f64)> {
        quartic_barrier(self.alpha, self.beta)
    }

    pub fn geometry(&self) -> Result<WellGeometry> {
        let (_, e_max) = self.barrier()?;
        self.geometry_truncated(e_max)
    }

    /// Geometry with a threshold energy below the barrier top.
    pub fn geometry_truncated(&self, e_thres: f64) -> Result<WellGeometry> {
        let (q_thres, e_max) = self.barrier()?;
        if !(e_thres > 0.0 && e_thres <= e_max) {
            return Err(Error::invalid(
                "threshold energy",
                format!("E_thres = {e_thres} outside (0, {e_max}]"),
            ));
        }
        let escape = match self.case() {
            WellCase::DoubleWell => EscapeSide::Right,
            WellCase::InvertedQuartic => {
                let (lo, hi) = outer_critical_points(self.alpha, self.beta).unwrap();
                if self.v(lo) == self.v(hi) {
                    EscapeSide::Both
                } else if q_thres > 0.0 {
                    EscapeSide::Right
                } else {
                    EscapeSide::Left
                }
            }
            WellCase::Unsupported => unreachable!("barrier() errored already"),
        };
        // boundary on each side of the origin where V first reaches e_thres;
        // the search limits are the barrier top and, for a double well, a
        // point found by expansion up the unbounded left slope
        let (left_lim, right_lim) = match self.case() {
            WellCase::DoubleWell => {
                let mut ql = -1.0;
                while self.v(ql) < e_thres {
                    ql *= 2.0;
                }
                (ql, q_thres)
            }
            _ => outer_critical_points(self.alpha, self.beta).unwrap(),
        };
        let q_high = self.boundary_toward(right_lim, e_thres, e_max, q_thres)?;
        let q_low = self.boundary_toward(left_lim, e_thres, e_max, q_thres)?;
        // exits: the threshold boundary on an escape side; for the inverted
        // well the far maximum is also a permanent exit (the potential falls
        // off beyond it), while a double well has no left exit at all
        let (exit_left, exit_right) = match (self.case(), escape) {
            (WellCase::DoubleWell, _) => (None, Some(q_high)),
            (_, EscapeSide::Right) => (Some(left_lim), Some(q_high)),
            (_, EscapeSide::Left) => (Some(q_low), Some(right_lim)),
            (_, EscapeSide::Both) => (Some(q_low), Some(q_high)),
        };
        Ok(WellGeometry {
            q_equilibrium: 0.0,
            q_thres,
            e_max,
            e_thres,
            q_low,
            q_high,
            escape,
            exit_left,
            exit_right,
        })
    }

    /// Root of V = e_thres between the origin and `limit` (a barrier position
    /// or a point beyond the threshold level). Exactly `limit` when the
    /// threshold equals the barrier energy there.
    fn boundary_toward(&self, limit: f64, e_thres: f64, e_max: f64, q_thres: f64) -> Result<f64> {
        if limit == q_thres && e_thres == e_max {
            return Ok(q_thres);
        }
        if limit == q_thres && self.v(limit) < e_thres {
            // threshold above this side's barrier cannot be bracketed
            return Err(Error::invalid(
                "threshold energy",
                format!("E_thres = {e_thres} above the barrier on one side"),
            ));
        }
        brent_root(|q| self.v(q) - e_thres, 0.0, limit, 1e-15)
    }
}

impl Potential for QuarticWell {
    fn v(&self, q: f64) -> f64 {
        ((self.beta / 4.0 * q + self.alpha / 3.0) * q + 0.5) * q * q
    }
    fn dv(&self, q: f64) -> f64 {
        ((self.beta * q + self.alpha) * q + 1.0) * q
    }
    fn d2v(&self, q: f64) -> f64 {
        (3.0 * self.beta * q + 2.0 * self.alpha) * q + 1.0
    }
}

/// Electrostatically loaded oscillator: W(q) = q²/2 − ν/(d − q), q < d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrostaticWell {
    pub nu: f64,
    pub d: f64,
}

impl ElectrostaticWell {
    /// Fails at or beyond static pull-in ν ≥ 4d³/27, where no stable
    /// equilibrium exists.
    pub fn new(nu: f64, d: f64) -> Result<Self> {
        if !(nu > 0.0 && d > 0.0) || !nu.is_finite() || !d.is_finite() {
            return Err(Error::invalid(
                "electrostatic well",
                "nu and d must be positive and finite",
            ));
        }
        let nu_pi = 4.0 * d.powi(3) / 27.0;
        if nu >= nu_pi {
            return Err(Error::PullIn { nu, nu_pi });
        }
        Ok(ElectrostaticWell { nu, d })
    }

    /// Stable equilibrium and barrier position: the two roots of
    /// q(d − q)² = ν inside (0, d).
    pub fn equilibrium(&self) -> (f64, f64) {
        // trigonometric solution of the cubic, then one Newton polish
        let (nu, d) = (self.nu, self.d);
        let theta = (27.0 * nu / (2.0 * d.powi(3)) - 1.0).clamp(-1.0, 1.0).acos();
        let root = |k: f64| {
            let q = 2.0 * d / 3.0 * (1.0 + (theta / 3.0 - 2.0 * std::f64::consts::PI * k / 3.0).cos());
            // f(q) = q(d-q)^2 - nu
            let f = q * (d - q) * (d - q) - nu;
            let df = (d - q) * (d - 3.0 * q);
            q - f / df
        };
        (root(2.0), root(1.0))
    }

    /// Pull-in load 4d³/27 above which the well ceases to exist.
    pub fn pull_in_load(&self) -> f64 {
        4.0 * self.d.powi(3) / 27.0
    }
}

impl Potential for ElectrostaticWell {
    fn v(&self, q: f64) -> f64 {
        0.5 * q * q - self.nu / (self.d - q)
    }
    fn dv(&self, q: f64) -> f64 {
        q - self.nu / ((self.d - q) * (self.d - q))
    }
    fn d2v(&self, q: f64) -> f64 {
        1.0 - 2.0 * self.nu / (self.d - q).powi(3)
    }
}

/// Equilibrium and barrier position of the electrostatic well (original
/// frame): smaller root is the stable minimum, larger the barrier.
pub fn electrostatic_equilibrium(well: &ElectrostaticWell) -> (f64, f64) {
    well.equilibrium()
}

/// A potential shifted so its minimum sits at the origin with zero value:
/// Ŵ(x) = W(x + shift) − offset.
#[derive(Clone, Copy, Debug)]
pub struct TranslatedWell<W> {
    pub base: W,
    pub shift: f64,
    pub offset: f64,
}

impl<W: Potential> Potential for TranslatedWell<W> {
    fn v(&self, q: f64) -> f64 {
        self.base.v(q + self.shift) - self.offset
    }
    fn dv(&self, q: f64) -> f64 {
        self.base.dv(q + self.shift)
    }
    fn d2v(&self, q: f64) -> f64 {
        self.base.d2v(q + self.shift)
    }
}

/// Center the electrostatic well on its stable equilibrium.
pub fn translate_well(well: &ElectrostaticWell) -> TranslatedWell<ElectrostaticWell> {
    let (q0, _) = well.equilibrium();
    TranslatedWell {
        base: *well,
        shift: q0,
        offset: well.v(q0),
    }
}

impl TranslatedWell<ElectrostaticWell> {
    /// Geometry in the translated frame. The well is one-sided: soft spring
    /// on the left, singular electrode on the right; escape is to the right.
    pub fn geometry(&self) -> Result<WellGeometry> {
        let (q0, q_barrier) = self.base.equilibrium();
        let e_max = self.base.v(q_barrier) - self.offset;
        let q_max = q_barrier - q0;
        self.geometry_truncated(e_max, q_max, e_max)
    }

    fn geometry_truncated(&self, e_thres: f64, q_max: f64, e_max: f64) -> Result<WellGeometry> {
        if !(e_thres > 0.0 && e_thres <= e_max) {
            return Err(Error::invalid(
                "threshold energy",
                format!("E_thres = {e_thres} outside (0, {e_max}]"),
            ));
        }
        let q_high = if e_thres == e_max {
            q_max
        } else {
            brent_root(|x| self.v(x) - e_thres, 0.0, q_max, 1e-15)?
        };
        let mut ql = -1.0;
        while self.v(ql) < e_thres {
            ql *= 2.0;
        }
        let q_low = brent_root(|x| self.v(x) - e_thres, ql, 0.0, 1e-15)?;
        Ok(WellGeometry {
            q_equilibrium: 0.0,
            q_thres: q_max,
            e_max,
            e_thres,
            q_low,
            q_high,
            escape: EscapeSide::Right,
            exit_left: None,
            exit_right: Some(q_high),
        })
    }
}

/// Well geometry: barrier, threshold level, and the positions bounding the
/// trapped region at that level.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WellGeometry {
    pub q_equilibrium: f64,
    /// Position of the barrier top on the escape side.
    pub q_thres: f64,
    /// Barrier energy.
    pub e_max: f64,
    /// Escape threshold level, = e_max unless truncated.
    pub e_thres: f64,
    /// Left boundary: V(q_low) = e_thres.
    pub q_low: f64,
    /// Right boundary: V(q_high) = e_thres.
    pub q_high: f64,
    pub escape: EscapeSide,
    /// Crossing this position on the left is a permanent exit (None when the
    /// left wall rises without bound). The threshold boundary on the escape
    /// side, the far maximum elsewhere.
    pub exit_left: Option<f64>,
    /// Same on the right.
    pub exit_right: Option<f64>,
}

/// Boundaries of the trapped region of any well at a threshold level, given
/// its geometry at E_thres = E_max. Barrier-side boundary degenerates to the
/// barrier position when the level equals the barrier energy.
pub fn well_boundaries(
    well: &impl Potential,
    geometry: &WellGeometry,
    e_thres: f64,
) -> Result<(f64, f64)> {
    if !(e_thres > 0.0 && e_thres <= geometry.e_max) {
        return Err(Error::invalid(
            "threshold energy",
            format!("E_thres = {e_thres} outside (0, {}]", geometry.e_max),
        ));
    }
    let side = |limit: f64, at_barrier: bool| -> Result<f64> {
        if at_barrier && e_thres == geometry.e_max {
            return Ok(limit);
        }
        brent_root(
            |q| well.v(q) - e_thres,
            geometry.q_equilibrium,
            limit,
            1e-15,
        )
    };
    let right_is_barrier = geometry.escape != EscapeSide::Left;
    let left_is_barrier = geometry.escape != EscapeSide::Right;
    let q_high = side(
        if right_is_barrier {
            geometry.q_thres.max(geometry.q_high)
        } else {
            well_expand(well, geometry.q_equilibrium, 1.0, e_thres)
        },
        right_is_barrier,
    )?;
    let q_low = side(
        if left_is_barrier {
            geometry.q_low.min(-geometry.q_thres.abs())
        } else {
            well_expand(well, geometry.q_equilibrium, -1.0, e_thres)
        },
        left_is_barrier,
    )?;
    Ok((q_low, q_high))
}

// expand from the equilibrium until V exceeds the level (non-barrier side)
fn well_expand(well: &impl Potential, start: f64, dir: f64, level: f64) -> f64 {
    let mut step = 1.0;
    loop {
        let q = start + dir * step;
        if well.v(q) > level {
            return q;
        }
        step *= 2.0;
    }
}

/// Dimensionless (ν, F, Ω) from physical plate-oscillator parameters.
#[allow(clippy::too_many_arguments)]
pub fn nondimensionalize(
    m: f64,
    k_spring: f64,
    d: f64,
    eps: f64,
    area: f64,
    v_dc: f64,
    f: f64,
    omega: f64,
) -> Result<(f64, f64, f64)> {
    for (name, val) in [
        ("m", m),
        ("k", k_spring),
        ("d", d),
        ("eps", eps),
        ("area", area),
        ("V_DC", v_dc),
    ] {
        if !(val > 0.0) || !val.is_finite() {
            return Err(Error::invalid("physical parameter", format!("{name} = {val}")));
        }
    }
    let nu = eps * area * v_dc * v_dc / (2.0 * m);
    let f_nd = f / m;
    let omega_nd = omega * (m / k_spring).sqrt();
    Ok((nu, f_nd, omega_nd))
}

/// How to resolve a quartic well whose printed coefficients contradict the
/// intended shape: flip the sign of β so the requested case is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForceCase {
    #[serde(rename = "double-well")]
    DoubleWell,
    #[serde(rename = "inverted")]
    Inverted,
}

/// JSON well description:
/// `{"type":"quartic","alpha":…,"beta":…}` or
/// `{"type":"electrostatic","nu":…,"d":…}`.
///
/// Optional fields: `force-case` ("double-well" | "inverted") reinterprets
/// the β sign, and `e_thres` truncates the threshold level below the barrier.
/// Unknown fields are rejected.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WellConfig {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(rename = "force-case", skip_serializing_if = "Option::is_none", default)]
    pub force_case: Option<ForceCase>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e_thres: Option<f64>,
}

/// Any supported well, as parsed from a config.
#[derive(Clone, Copy, Debug)]
pub enum AnyWell {
    Quartic(QuarticWell),
    Electrostatic(ElectrostaticWell),
}

impl Potential for AnyWell {
    fn v(&self, q: f64) -> f64 {
        match self {
            AnyWell::Quartic(w) => w.v(q),
            AnyWell::Electrostatic(w) => w.v(q),
        }
    }
    fn dv(&self, q: f64) -> f64 {
        match self {
            AnyWell::Quartic(w) => w.dv(q),
            AnyWell::Electrostatic(w) => w.dv(q),
        }
    }
    fn d2v(&self, q: f64) -> f64 {
        match self {
            AnyWell::Quartic(w) => w.d2v(q),
            AnyWell::Electrostatic(w) => w.d2v(q),
        }
    }
}

impl WellConfig {
    pub fn parse(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Build the well, applying `force-case` if present.
    pub fn build(&self) -> Result<AnyWell> {
        match self.kind.as_str() {
            "quartic" => {
                let (alpha, beta) = match (self.alpha, self.beta) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(Error::invalid(
                            "well config",
                            "quartic well requires alpha and beta",
                        ))
                    }
                };
                if self.nu.is_some() || self.d.is_some() {
                    return Err(Error::invalid(
                        "well config",
                        "nu/d are electrostatic fields, not quartic ones",
                    ));
                }
                let beta = match self.force_case {
                    None => beta,
                    Some(fc) => {
                        let want = match fc {
                            ForceCase::DoubleWell => WellCase::DoubleWell,
                            ForceCase::Inverted => WellCase::InvertedQuartic,
                        };
                        if classify_quartic(alpha, beta) == want {
                            beta
                        } else if classify_quartic(alpha, -beta) == want {
                            -beta
                        } else {
                            return Err(Error::invalid(
                                "well config",
                                format!(
                                    "force-case cannot realize {want:?} from alpha = {alpha}, beta = {beta}"
                                ),
                            ));
                        }
                    }
                };
                Ok(AnyWell::Quartic(QuarticWell::new(alpha, beta)?))
            }
            "electrostatic" => {
                let (nu, d) = match (self.nu, self.d) {
                    (Some(n), Some(d)) => (n, d),
                    _ => {
                        return Err(Error::invalid(
                            "well config",
                            "electrostatic well requires nu and d",
                        ))
                    }
                };
                if self.alpha.is_some() || self.beta.is_some() || self.force_case.is_some() {
                    return Err(Error::invalid(
                        "well config",
                        "alpha/beta/force-case are quartic fields, not electrostatic ones",
                    ));
                }
                Ok(AnyWell::Electrostatic(ElectrostaticWell::new(nu, d)?))
            }
            other => Err(Error::invalid(
                "well config",
                format!("unknown well type {other:?}"),
            )),
        }
    }

    /// Geometry of the configured well, honoring `e_thres` truncation.
    /// Electrostatic geometry is reported in the translated frame.
    pub fn geometry(&self) -> Result<WellGeometry> {
        match self.build()? {
            AnyWell::Quartic(w) => match self.e_thres {
                Some(e) => w.geometry_truncated(e),
                None => w.geometry(),
            },
            AnyWell::Electrostatic(w) => {
                let t = translate_well(&w);
                let g = t.geometry()?;
                match self.e_thres {
                    Some(e) => t.geometry_truncated(e, g.q_thres, g.e_max),
                    None => Ok(g),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classification_follows_shape() {
        assert_eq!(classify_quartic(-0.5, 0.05), WellCase::DoubleWell);
        assert_eq!(classify_quartic(-0.06, -0.068), WellCase::InvertedQuartic);
        assert_eq!(classify_quartic(0.0, 1.0), WellCase::Unsupported);
        // barrier exists but the far minimum sits above zero: excluded
        assert_eq!(classify_quartic(-1.0, 0.24), WellCase::Unsupported);
        assert_eq!(classify_quartic(-1.0, 0.0), WellCase::Unsupported);
    }

    #[test]
    fn double_well_barrier_matches_closed_form() {
        // alpha = -1/2, beta = 1/20: critical points 5 ± sqrt(5)
        let (q_thres, e_max) = quartic_barrier(-0.5, 0.05).unwrap();
        assert_relative_eq!(q_thres, 5.0 - 5.0_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(e_max, 1.0300566479164914, epsilon = 1e-10);
        // barrier energy agrees with direct evaluation at the critical point
        let w = QuarticWell::new(-0.5, 0.05).unwrap();
        assert_relative_eq!(e_max, w.v(q_thres), epsilon = 1e-14);
        assert!(w.dv(q_thres).abs() < 1e-12);
        assert!(w.d2v(q_thres) < 0.0);
    }

    #[test]
    fn symmetric_inverted_barrier() {
        let (q_thres, e_max) = quartic_barrier(0.0, -1.0).unwrap();
        assert_relative_eq!(q_thres.abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(e_max, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn inverted_barrier_takes_smaller_maximum() {
        let (q_thres, e_max) = quartic_barrier(-0.06, -0.068).unwrap();
        assert!(q_thres > 0.0, "right maximum is the lower one for alpha < 0");
        let w = QuarticWell::new(-0.06, -0.068).unwrap();
        let (lo, hi) = (
            brent_root(|q| w.dv(q), -6.0, -1.0, 1e-14).unwrap(),
            brent_root(|q| w.dv(q), 1.0, 6.0, 1e-14).unwrap(),
        );
        assert_relative_eq!(q_thres, hi, epsilon = 1e-10);
        assert!(e_max < w.v(lo));
        assert_relative_eq!(e_max, w.v(hi), epsilon = 1e-12);
    }

    #[test]
    fn barrier_is_numerical_maximum() {
        // scan V on the escape side; no interior point may exceed e_max
        for (a, b) in [(-0.5, 0.05), (-0.06, -0.068), (0.3, -0.2)] {
            let w = QuarticWell::new(a, b).unwrap();
            let (q_thres, e_max) = w.barrier().unwrap();
            let mut best = f64::MIN;
            for i in 0..=4000 {
                let q = q_thres * i as f64 / 4000.0;
                best = best.max(w.v(q));
            }
            assert!(best <= e_max + 1e-10, "({a}, {b}): {best} > {e_max}");
        }
    }

    #[test]
    fn geometry_double_well() {
        let w = QuarticWell::new(-0.5, 0.05).unwrap();
        let g = w.geometry().unwrap();
        assert_eq!(g.escape, EscapeSide::Right);
        assert_relative_eq!(g.q_high, g.q_thres, epsilon = 1e-14);
        assert!(g.q_low < 0.0 && g.q_low > -2.0);
        assert_relative_eq!(w.v(g.q_low), g.e_max, epsilon = 1e-10);
        // truncated level moves both boundaries inward
        let gt = w.geometry_truncated(0.5 * g.e_max).unwrap();
        assert!(gt.q_low > g.q_low && gt.q_high < g.q_high);
        assert_relative_eq!(w.v(gt.q_high), 0.5 * g.e_max, epsilon = 1e-10);
        assert_relative_eq!(w.v(gt.q_low), 0.5 * g.e_max, epsilon = 1e-10);
    }

    #[test]
    fn boundaries_shrink_to_equilibrium() {
        let w = QuarticWell::new(-0.5, 0.05).unwrap();
        let g = w.geometry().unwrap();
        let (lo, hi) = well_boundaries(&w, &g, 1e-10).unwrap();
        assert!(lo.abs() < 1e-4 && hi.abs() < 1e-4);
        // derivative signs on opposite sides
        assert!(w.dv(lo) < 0.0 && w.dv(hi) > 0.0);
    }

    #[test]
    fn electrostatic_equilibrium_and_frame() {
        let w = ElectrostaticWell::new(0.06, 1.0).unwrap();
        let (q0, qb) = w.equilibrium();
        assert!(q0 * (1.0 - q0) * (1.0 - q0) - 0.06 < 1e-12);
        assert!((qb * (1.0 - qb) * (1.0 - qb) - 0.06).abs() < 1e-12);
        assert!(w.d2v(q0) > 0.0 && w.d2v(qb) < 0.0);
        assert_relative_eq!(q0, 0.0693, epsilon = 5e-4);
        assert_relative_eq!(qb, 0.7093, epsilon = 5e-4);

        let t = translate_well(&w);
        assert!(t.v(0.0).abs() < 1e-15 && t.dv(0.0).abs() < 1e-15);
        let g = t.geometry().unwrap();
        assert_relative_eq!(g.q_high, 0.639856, epsilon = 1e-5);
        assert_relative_eq!(g.q_low, -0.487499, epsilon = 1e-5);
        assert_eq!(g.escape, EscapeSide::Right);
        // translation preserves barrier height
        assert_relative_eq!(g.e_max, w.v(qb) - w.v(q0), epsilon = 1e-12);
    }

    #[test]
    fn pull_in_is_rejected() {
        let err = ElectrostaticWell::new(0.2, 1.0).unwrap_err();
        assert!(matches!(err, Error::PullIn { .. }), "{err}");
        assert!(ElectrostaticWell::new(4.0 / 27.0, 1.0).is_err());
        assert!(ElectrostaticWell::new(4.0 / 27.0 - 1e-9, 1.0).is_ok());
    }

    #[test]
    fn small_load_equilibrium_asymptotics() {
        for nu in [1e-3, 1e-4] {
            let w = ElectrostaticWell::new(nu, 1.0).unwrap();
            let (q0, _) = w.equilibrium();
            assert_relative_eq!(q0, nu, max_relative = 3.0 * nu);
        }
    }

    #[test]
    fn nondimensionalization() {
        let (_, f, omega) = nondimensionalize(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.05, 0.9).unwrap();
        assert_relative_eq!(f, 0.05);
        assert_relative_eq!(omega, 0.9);
        let (nu, _, _) = nondimensionalize(1.0, 1.0, 1.0, 0.3, 0.4, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(nu, 0.06);
        let (_, _, omega) = nondimensionalize(4.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
        assert_relative_eq!(omega, 1.0);
        assert!(nondimensionalize(-1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn config_round_trip_and_force_case() {
        let cfg = WellConfig::parse(r#"{"type":"quartic","alpha":-0.5,"beta":0.05}"#).unwrap();
        match cfg.build().unwrap() {
            AnyWell::Quartic(w) => {
                assert_eq!(w.alpha, -0.5);
                assert_eq!(w.beta, 0.05);
            }
            _ => panic!("expected quartic"),
        }
        // printed Case II example has beta > 0; force-case flips it
        let cfg = WellConfig::parse(
            r#"{"type":"quartic","alpha":-0.06,"beta":0.068,"force-case":"inverted"}"#,
        )
        .unwrap();
        match cfg.build().unwrap() {
            AnyWell::Quartic(w) => assert_eq!(w.beta, -0.068),
            _ => panic!("expected quartic"),
        }
        let cfg = WellConfig::parse(r#"{"type":"electrostatic","nu":0.06,"d":1.0}"#).unwrap();
        assert!(matches!(cfg.build().unwrap(), AnyWell::Electrostatic(_)));
        // unknown fields rejected
        assert!(WellConfig::parse(r#"{"type":"quartic","alpha":1,"beta":1,"zeta":3}"#).is_err());
        // mixed fields rejected
        let cfg = WellConfig::parse(r#"{"type":"quartic","alpha":1,"beta":1,"nu":0.06}"#).unwrap();
        assert!(cfg.build().is_err());
        // serialization keeps the exact field names
        let cfg = WellConfig::parse(r#"{"type":"electrostatic","nu":0.06,"d":1.0}"#).unwrap();
        let js = serde_json::to_string(&cfg).unwrap();
        assert!(js.contains(r#""type":"electrostatic""#) && js.contains(r#""nu":0.06"#));
    }
}

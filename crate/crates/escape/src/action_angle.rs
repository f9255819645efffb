//! Action-angle reduction of the unforced motion inside a quartic well.
//!
//! For an energy level ξ strictly between the well bottom and the barrier
//! top, the trapped orbit is periodic. This module computes its action J(ξ),
//! natural frequency Ω(ξ), and the magnitude G(ξ) of the first Fourier
//! harmonic of q(θ) in closed form through elliptic integrals, starting from
//! the four real roots of V(q) = ξ. Quadrature/ODE versions of the same
//! quantities (`numeric_*`) are formula-independent and double as oracles for
//! the closed forms and as a fallback for wells that are not quartic.

use std::f64::consts::PI;

use serde::Serialize;

use crate::elliptic::{
    complete_e, complete_k, complete_pi, incomplete_f, inv_cn, jacobi_sn_cn_dn, MODULUS_CAP,
};
use crate::error::{Error, Result};
use crate::potentials::{outer_critical_points, Potential, QuarticWell, WellCase, WellGeometry};
use crate::util::{brent_root, integrate};

/// The four real roots a > b > c > d of V(q) = ξ for a quartic well.
///
/// The trapped orbit oscillates on [d, c] for a double well and on [c, b]
/// for an inverted well.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TurningRoots {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub case: WellCase,
}

impl TurningRoots {
    /// Turning points (lower, upper) of the trapped orbit.
    pub fn oscillation(&self) -> (f64, f64) {
        match self.case {
            WellCase::DoubleWell => (self.d, self.c),
            _ => (self.c, self.b),
        }
    }

    /// Elliptic modulus of the orbit. Errors near the separatrix where the
    /// modulus is numerically indistinguishable from 1.
    pub fn modulus(&self) -> Result<f64> {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let k2 = match self.case {
            WellCase::DoubleWell => (a - b) * (c - d) / ((a - c) * (b - d)),
            _ => (b - c) * (a - d) / ((a - c) * (b - d)),
        };
        let k = k2.sqrt().min(1.0);
        if k > MODULUS_CAP {
            return Err(Error::NearSeparatrix { k });
        }
        Ok(k)
    }

    /// Characteristic of the third-kind integrals in the orbit parametrization.
    /// Negative for a double well, in (0, 1) for an inverted well.
    pub fn gamma2(&self) -> f64 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        match self.case {
            WellCase::DoubleWell => (d - c) / (a - c),
            _ => (b - c) / (b - d),
        }
    }
}

/// Roots of V(q) = ξ, bracketed on the monotone segments of V between its
/// critical points and polished by Brent's method.
pub fn turning_roots(well: &QuarticWell, xi: f64) -> Result<TurningRoots> {
    let (_, e_max) = well.barrier()?;
    if !(xi > 0.0 && xi < e_max) {
        return Err(Error::EnergyOutOfRange { e: xi, e_max });
    }
    let case = well.case();
    let f = |q: f64| well.v(q) - xi;
    let tol = 1e-15;
    let (a, b, c, d) = match case {
        WellCase::DoubleWell => {
            // critical points: barrier top, then the far minimum; V < 0 there
            let (q_top, q_far) = outer_critical_points(well.alpha, well.beta).unwrap();
            let c = brent_root(f, 0.0, q_top, tol)?;
            let b = brent_root(f, q_top, q_far, tol)?;
            let a = brent_root(f, q_far, expand(well, q_far, 1.0, xi, true), tol)?;
            let d = brent_root(f, expand(well, 0.0, -1.0, xi, true), 0.0, tol)?;
            (a, b, c, d)
        }
        WellCase::InvertedQuartic => {
            // two maxima straddle the origin; V falls to -inf outside them
            let (q_left, q_right) = outer_critical_points(well.alpha, well.beta).unwrap();
            let b = brent_root(f, 0.0, q_right, tol)?;
            let c = brent_root(f, q_left, 0.0, tol)?;
            let a = brent_root(f, q_right, expand(well, q_right, 1.0, xi, false), tol)?;
            let d = brent_root(f, expand(well, q_left, -1.0, xi, false), q_left, tol)?;
            (a, b, c, d)
        }
        WellCase::Unsupported => return Err(Error::NoBarrier),
    };
    Ok(TurningRoots { a, b, c, d, case })
}

// step outward from `start` until V - xi changes sign (`above`: until V > xi)
fn expand(well: &QuarticWell, start: f64, dir: f64, xi: f64, above: bool) -> f64 {
    let mut step = 1.0;
    loop {
        let q = start + dir * step;
        let v = well.v(q);
        if (above && v > xi) || (!above && v < xi) {
            return q;
        }
        step *= 2.0;
    }
}

/// Action of the trapped orbit, J = (1/2π) ∮ p dq, in closed form.
pub fn action_j(well: &QuarticWell, roots: &TurningRoots) -> Result<f64> {
    let (a, b, c, d) = (roots.a, roots.b, roots.c, roots.d);
    let (al, be) = (well.alpha, well.beta);
    let k = roots.modulus()?;
    let g2 = roots.gamma2();
    let (ek, kk, pk) = (complete_e(k)?, complete_k(k)?, complete_pi(g2, k)?);
    match roots.case {
        WellCase::DoubleWell => {
            let pre = (2.0 * be / ((a - c) * (b - d))).sqrt() / (48.0 * PI);
            let t_e = (a - c) * (b - d) * (16.0 * (al * al - 3.0 * be) / (3.0 * be * be));
            let t_k = (a - c)
                * (a - d)
                * (3.0 * a * a - 6.0 * a * b - b * b + 4.0 * b * (c + d) - 3.0 * c * c
                    + 2.0 * c * d
                    - 3.0 * d * d);
            let t_p = 3.0
                * (a - d)
                * (-3.0 * a * a * a + 16.0 * al * al * a / (9.0 * be * be)
                    - 4.0 * a * (a * al + 3.0) / (3.0 * be)
                    - b * b * b
                    + (c + d) * (b * b - (c - d) * (c - d))
                    + b * (c * c + d * d));
            Ok(pre * (t_e * ek + t_k * kk + t_p * pk))
        }
        _ => {
            let pre = be.abs().sqrt() / (24.0 * PI * ((a - c) * (b - d)).sqrt());
            let t_e = (a - c)
                * (b - d)
                * (3.0 * a * a - 2.0 * a * (b + c + d) + 3.0 * b * b - 2.0 * b * (c + d)
                    + 3.0 * c * c
                    - 2.0 * c * d
                    + 3.0 * d * d);
            let t_k = (d - b)
                * (a * a + a * (-4.0 * b - 4.0 * c + 6.0 * d) + 3.0 * b * b - 2.0 * b * c
                    + 3.0 * c * c
                    - 3.0 * d * d);
            let t_p = 3.0
                * (a * a * a - a * a * (b + c + d)
                    - a * (b * b - 2.0 * b * (c + d) + (c - d) * (c - d))
                    + b * b * b
                    - b * b * (c + d)
                    - b * (c - d) * (c - d)
                    + (c - d) * (c - d) * (c + d));
            // the bare table expression carries a stray factor sqrt(2);
            // dJ/dxi = 1/Omega and the quadrature oracle both fix the scale
            Ok(pre * (t_e * ek - (c - d) * (t_k * kk + t_p * pk)) / std::f64::consts::SQRT_2)
        }
    }
}

/// Natural frequency Ω(ξ) of the trapped orbit.
pub fn natural_frequency(well: &QuarticWell, roots: &TurningRoots) -> Result<f64> {
    let k = roots.modulus()?;
    let kk = complete_k(k)?;
    let (a, b, c, d) = (roots.a, roots.b, roots.c, roots.d);
    Ok(PI / (2.0 * kk) * (well.beta.abs() * (a - c) * (b - d) / 2.0).sqrt())
}

/// Magnitude G(ξ) = |q₁| of the first Fourier harmonic of the orbit.
///
/// A pure function of the turning roots: the n = 1 coefficient of the cosine
/// series of q(θ) has magnitude 2G.
pub fn fourier_g(roots: &TurningRoots) -> Result<f64> {
    let (a, b, c, d) = (roots.a, roots.b, roots.c, roots.d);
    let k = roots.modulus()?;
    let kk = complete_k(k)?;
    let kc = ((1.0 - k) * (1.0 + k)).sqrt();
    let kkp = complete_k(kc)?;
    let omega0 = PI * kkp / (2.0 * kk);
    let amp = PI * ((a - c) * (b - d)).sqrt();
    match roots.case {
        WellCase::DoubleWell => {
            // sinh(2w)/sinh(2w0) with w = pi (K' - nu) / 2K, cn(nu, k') at the
            // orbit's inner endpoint; exp form is stable for extreme moduli
            let nu = inv_cn(((c - d) / (a - d)).sqrt(), kc)?;
            let omega = PI * (kkp - nu) / (2.0 * kk);
            let ratio = (2.0 * (omega - omega0)).exp() * (-4.0 * omega).exp_m1()
                / (-4.0 * omega0).exp_m1();
            Ok(amp * ratio / (2.0 * kk))
        }
        _ => {
            // trigonometric analogue: the half-plane of the nearer pole flips
            let u0 = incomplete_f(((a - c) / (a - d)).sqrt().asin(), k)?;
            let omega = PI * u0 / (2.0 * kk);
            let denom = -(2.0 * omega0).exp() * (-4.0 * omega0).exp_m1() / 2.0;
            Ok(amp * (2.0 * omega).sin() / (2.0 * kk * denom))
        }
    }
}

/// Position along the unforced orbit as a function of the angle variable,
/// with θ = 0 at the lower turning point. Even and 2π-periodic in θ.
pub fn orbit_q(roots: &TurningRoots, theta: f64) -> Result<f64> {
    let k = roots.modulus()?;
    let kk = complete_k(k)?;
    let (sn, _, _) = jacobi_sn_cn_dn(kk * theta / PI, k)?;
    let g2 = roots.gamma2();
    let den = 1.0 - g2 * sn * sn;
    Ok(match roots.case {
        WellCase::DoubleWell => roots.a + (roots.d - roots.a) / den,
        _ => roots.d + (roots.c - roots.d) / den,
    })
}

/// Mean position of the orbit over one cycle (the n = 0 Fourier coefficient).
pub fn orbit_mean(roots: &TurningRoots) -> Result<f64> {
    let k = roots.modulus()?;
    let (kk, pk) = (complete_k(k)?, complete_pi(roots.gamma2(), k)?);
    Ok(match roots.case {
        WellCase::DoubleWell => roots.a + (roots.d - roots.a) * pk / kk,
        _ => roots.d + (roots.c - roots.d) * pk / kk,
    })
}

/// Everything the resonance analysis needs about one energy level.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AAData {
    pub xi: f64,
    pub j: f64,
    pub omega_nat: f64,
    pub g: f64,
    pub k: f64,
    pub gamma2: f64,
    pub roots: TurningRoots,
}

/// Closed-form action-angle data at one energy level.
pub fn aa_data(well: &QuarticWell, xi: f64) -> Result<AAData> {
    let roots = turning_roots(well, xi)?;
    Ok(AAData {
        xi,
        j: action_j(well, &roots)?,
        omega_nat: natural_frequency(well, &roots)?,
        g: fourier_g(&roots)?,
        k: roots.modulus()?,
        gamma2: roots.gamma2(),
        roots,
    })
}

/// Action-angle data over a grid of energy levels.
pub fn aa_table(well: &QuarticWell, xis: &[f64]) -> Result<Vec<AAData>> {
    xis.iter().map(|&xi| aa_data(well, xi)).collect()
}

/// dG/dξ by five-point central differences. The step shrinks near the ends
/// of the energy range so every stencil point stays inside (0, E_max).
pub fn fourier_g_prime(well: &QuarticWell, xi: f64) -> Result<f64> {
    let (_, e_max) = well.barrier()?;
    if !(xi > 0.0 && xi < e_max) {
        return Err(Error::EnergyOutOfRange { e: xi, e_max });
    }
    let h = (1e-4 * e_max).min(0.4 * xi).min(0.4 * (e_max - xi));
    let g = |x: f64| -> Result<f64> { fourier_g(&turning_roots(well, x)?) };
    Ok((g(xi - 2.0 * h)? - 8.0 * g(xi - h)? + 8.0 * g(xi + h)? - g(xi + 2.0 * h)?) / (12.0 * h))
}

/// Turning points of the level ξ inside a general well, from its geometry.
pub fn numeric_turning_points(
    well: &impl Potential,
    geo: &WellGeometry,
    xi: f64,
) -> Result<(f64, f64)> {
    if !(xi > 0.0 && xi <= geo.e_thres) {
        return Err(Error::EnergyOutOfRange {
            e: xi,
            e_max: geo.e_thres,
        });
    }
    if xi == geo.e_thres {
        return Ok((geo.q_low, geo.q_high));
    }
    let lo = brent_root(|q| well.v(q) - xi, geo.q_low, geo.q_equilibrium, 1e-15)?;
    let hi = brent_root(|q| well.v(q) - xi, geo.q_equilibrium, geo.q_high, 1e-15)?;
    Ok((lo, hi))
}

// integrate f over the oscillation interval with the substitution
// q = mid + half sin(u), which removes the square-root endpoint singularity
fn turning_integral(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    let mid = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    integrate(
        |u| f(mid + half * u.sin(), half * u.cos()),
        -PI / 2.0,
        PI / 2.0,
        rel_tol,
    )
}

/// Action by direct quadrature, for any well shape.
pub fn numeric_action(well: &impl Potential, geo: &WellGeometry, xi: f64) -> Result<f64> {
    let (lo, hi) = numeric_turning_points(well, geo, xi)?;
    let val = turning_integral(
        |q, jac| jac * (xi - well.v(q)).max(0.0).sqrt(),
        lo,
        hi,
        1e-13,
    );
    Ok(std::f64::consts::SQRT_2 / PI * val)
}

/// Natural frequency by direct quadrature, for any well shape.
pub fn numeric_frequency(well: &impl Potential, geo: &WellGeometry, xi: f64) -> Result<f64> {
    let (lo, hi) = numeric_turning_points(well, geo, xi)?;
    let val = turning_integral(
        |q, jac| jac / (xi - well.v(q)).max(f64::MIN_POSITIVE).sqrt(),
        lo,
        hi,
        1e-13,
    );
    Ok(2.0 * PI / (std::f64::consts::SQRT_2 * val))
}

/// First Fourier coefficient q₁ of the orbit by time-domain quadrature:
/// one unforced period is integrated from the lower turning point and
/// projected on cos(Ωt). Negative, with |q₁| = G for quartic wells.
pub fn numeric_fourier_q1(well: &impl Potential, geo: &WellGeometry, xi: f64) -> Result<f64> {
    let (lo, _) = numeric_turning_points(well, geo, xi)?;
    let om = numeric_frequency(well, geo, xi)?;
    let period = 2.0 * PI / om;
    // fixed-step RK4 over one period; the trapezoid Fourier sum over a full
    // period converges spectrally for the smooth periodic orbit
    let n = 8192;
    let h = period / n as f64;
    let accel = |q: f64| -well.dv(q);
    let (mut q, mut p) = (lo, 0.0);
    let mut sum = 0.0;
    for i in 0..n {
        let t = i as f64 * h;
        sum += q * (om * t).cos();
        let (k1q, k1p) = (p, accel(q));
        let (k2q, k2p) = (p + 0.5 * h * k1p, accel(q + 0.5 * h * k1q));
        let (k3q, k3p) = (p + 0.5 * h * k2p, accel(q + 0.5 * h * k2q));
        let (k4q, k4p) = (p + h * k3p, accel(q + h * k3q));
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    Ok(sum / n as f64)
}

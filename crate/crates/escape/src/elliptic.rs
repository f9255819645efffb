//! Elliptic integrals and Jacobi elliptic functions.
//!
//! Complete and incomplete Legendre integrals are evaluated through Carlson's
//! symmetric forms (`R_F`, `R_D`, `R_J`, `R_C`) with the duplication
//! algorithm; `sn`, `cn`, `dn` use the descending arithmetic-geometric-mean
//! chain. All moduli are the k-convention, `m = k^2`.

use crate::error::{Error, Result};

/// Largest modulus accepted by the Legendre wrappers. Beyond this the
/// integrals are formally finite but the orbit is indistinguishable from the
/// separatrix at f64 resolution.
pub const MODULUS_CAP: f64 = 1.0 - 1e-12;

const MAX_ITER: usize = 120;

fn check_modulus(k: f64) -> Result<f64> {
    if !(0.0..=MODULUS_CAP).contains(&k) {
        return Err(Error::invalid(
            "modulus",
            format!("k = {k} outside [0, {MODULUS_CAP}]"),
        ));
    }
    // factored form keeps precision as k -> 1
    Ok((1.0 - k) * (1.0 + k))
}

/// Carlson symmetric integral R_F(x, y, z).
///
/// Arguments must be nonnegative with at most one zero.
pub fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> Result<f64> {
    const ERRTOL: f64 = 0.0025;
    if x.min(y).min(z) < 0.0 || (x + y).min(y + z).min(x + z) <= 0.0 {
        return Err(Error::invalid("carlson_rf", format!("({x}, {y}, {z})")));
    }
    for _ in 0..MAX_ITER {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let mu = (x + y + z) / 3.0;
        let dx = (mu - x) / mu;
        let dy = (mu - y) / mu;
        let dz = (mu - z) / mu;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return Ok((1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / mu.sqrt());
        }
    }
    Err(Error::NoConvergence {
        what: "carlson_rf",
        iters: MAX_ITER,
    })
}

/// Carlson degenerate integral R_D(x, y, z) = R_J(x, y, z, z).
pub fn carlson_rd(mut x: f64, mut y: f64, mut z: f64) -> Result<f64> {
    const ERRTOL: f64 = 0.0015;
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 6.0;
    const C3: f64 = 9.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    if x.min(y) < 0.0 || x + y <= 0.0 || z <= 0.0 {
        return Err(Error::invalid("carlson_rd", format!("({x}, {y}, {z})")));
    }
    let mut sum = 0.0;
    let mut fac = 1.0;
    for _ in 0..MAX_ITER {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lam));
        fac *= 0.25;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        let mu = 0.2 * (x + y + 3.0 * z);
        let dx = (mu - x) / mu;
        let dy = (mu - y) / mu;
        let dz = (mu - z) / mu;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let s = 1.0
                + ed * (-C1 + 0.25 * C3 * ed - 1.5 * C4 * dz * ee)
                + dz * (C2 * ee + dz * (-C3 * ec + dz * C4 * ea));
            return Ok(3.0 * sum + fac * s / (mu * mu.sqrt()));
        }
    }
    Err(Error::NoConvergence {
        what: "carlson_rd",
        iters: MAX_ITER,
    })
}

/// Carlson degenerate integral R_C(x, y) for x >= 0, y > 0.
pub fn carlson_rc(mut x: f64, mut y: f64) -> Result<f64> {
    const ERRTOL: f64 = 0.0012;
    if x < 0.0 || y <= 0.0 {
        return Err(Error::invalid("carlson_rc", format!("({x}, {y})")));
    }
    for _ in 0..MAX_ITER {
        let lam = 2.0 * x.sqrt() * y.sqrt() + y;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        let mu = (x + y + y) / 3.0;
        let s = (y - mu) / mu;
        if s.abs() < ERRTOL {
            return Ok((1.0 + s * s * (0.3 + s * (1.0 / 7.0 + s * (0.375 + s * 9.0 / 22.0))))
                / mu.sqrt());
        }
    }
    Err(Error::NoConvergence {
        what: "carlson_rc",
        iters: MAX_ITER,
    })
}

/// Carlson symmetric integral R_J(x, y, z, p) for p > 0.
///
/// The p < 0 (Cauchy principal value) branch is not needed here: the third
/// elliptic integral only ever arrives with 1 - n > 0.
pub fn carlson_rj(mut x: f64, mut y: f64, mut z: f64, mut p: f64) -> Result<f64> {
    const ERRTOL: f64 = 0.0015;
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 3.0;
    const C3: f64 = 3.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    if x.min(y).min(z) < 0.0 || (x + y).min(y + z).min(x + z) <= 0.0 || p <= 0.0 {
        return Err(Error::invalid(
            "carlson_rj",
            format!("({x}, {y}, {z}, {p})"),
        ));
    }
    let mut sum = 0.0;
    let mut fac = 1.0;
    for _ in 0..MAX_ITER {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * (sy + sz) + sy * sz;
        let alpha = (p * (sx + sy + sz) + sx * sy * sz).powi(2);
        let beta = p * (p + lam) * (p + lam);
        sum += fac * carlson_rc(alpha, beta)?;
        fac *= 0.25;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        p = 0.25 * (p + lam);
        let mu = 0.2 * (x + y + z + 2.0 * p);
        let dx = (mu - x) / mu;
        let dy = (mu - y) / mu;
        let dz = (mu - z) / mu;
        let dp = (mu - p) / mu;
        if dx.abs().max(dy.abs()).max(dz.abs()).max(dp.abs()) < ERRTOL {
            let ea = dx * (dy + dz) + dy * dz;
            let eb = dx * dy * dz;
            let ec = dp * dp;
            let ed = ea - 3.0 * ec;
            let ee = eb + 2.0 * dp * (ea - ec);
            let s = 1.0
                + ed * (-C1 + 0.75 * C3 * ed - 1.5 * C4 * ee)
                + eb * (0.5 * C2 + dp * (-C3 - C3 + dp * C4))
                + dp * ea * (C2 - dp * C3)
                - C2 * dp * ec;
            return Ok(3.0 * sum + fac * s / (mu * mu.sqrt()));
        }
    }
    Err(Error::NoConvergence {
        what: "carlson_rj",
        iters: MAX_ITER,
    })
}

/// Complete elliptic integral of the first kind K(k).
pub fn complete_k(k: f64) -> Result<f64> {
    let kc2 = check_modulus(k)?;
    carlson_rf(0.0, kc2, 1.0)
}

/// Complete elliptic integral of the second kind E(k).
pub fn complete_e(k: f64) -> Result<f64> {
    let kc2 = check_modulus(k)?;
    Ok(carlson_rf(0.0, kc2, 1.0)? - k * k / 3.0 * carlson_rd(0.0, kc2, 1.0)?)
}

/// Complete elliptic integral of the third kind
/// Pi(n, k) = int_0^{pi/2} dt / ((1 - n sin^2 t) sqrt(1 - k^2 sin^2 t)).
///
/// Supports n < 1 (both signs), which covers both well geometries.
pub fn complete_pi(n: f64, k: f64) -> Result<f64> {
    let kc2 = check_modulus(k)?;
    if n >= 1.0 {
        return Err(Error::invalid(
            "complete_pi",
            format!("characteristic n = {n} >= 1"),
        ));
    }
    Ok(carlson_rf(0.0, kc2, 1.0)? + n / 3.0 * carlson_rj(0.0, kc2, 1.0, 1.0 - n)?)
}

/// Incomplete elliptic integral of the first kind F(phi, k), phi in [0, pi/2].
pub fn incomplete_f(phi: f64, k: f64) -> Result<f64> {
    let _ = check_modulus(k)?;
    // Tolerate rounding just outside the quadrant.
    if !(-1e-12..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&phi) {
        return Err(Error::invalid(
            "incomplete_f",
            format!("phi = {phi} outside [0, pi/2]"),
        ));
    }
    let phi = phi.clamp(0.0, std::f64::consts::FRAC_PI_2);
    let s = phi.sin();
    let c = phi.cos();
    Ok(s * carlson_rf(c * c, 1.0 - k * k * s * s, 1.0)?)
}

/// Jacobi elliptic functions sn(u, k), cn(u, k), dn(u, k).
///
/// Descending AGM chain; dn is recovered from the defining identity, which is
/// stable for k bounded away from 1.
pub fn jacobi_sn_cn_dn(u: f64, k: f64) -> Result<(f64, f64, f64)> {
    let kc2 = check_modulus(k)?;
    if k < 1e-10 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    let mut a = [0.0f64; 32];
    let mut c = [0.0f64; 32];
    a[0] = 1.0;
    c[0] = k;
    let mut bn = kc2.sqrt();
    let mut n = 0;
    while c[n].abs() > f64::EPSILON * a[n] && n + 1 < 32 {
        a[n + 1] = 0.5 * (a[n] + bn);
        c[n + 1] = 0.5 * (a[n] - bn);
        bn = (a[n] * bn).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + ((c[i] / a[i] * phi.sin()).clamp(-1.0, 1.0)).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = (1.0 - k * k * sn * sn).sqrt();
    Ok((sn, cn, dn))
}

/// Inverse of cn on the principal branch: returns u in [0, K(k)] with
/// cn(u, k) = x, for x in [0, 1].
pub fn inv_cn(x: f64, k: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&x) {
        return Err(Error::invalid("inv_cn", format!("x = {x} outside [0, 1]")));
    }
    incomplete_f(x.clamp(0.0, 1.0).acos(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values computed with 50-digit arithmetic, rounded to 17
    // significant digits.

    #[test]
    fn carlson_spot_values() {
        assert_relative_eq!(
            carlson_rf(1.0, 2.0, 0.0).unwrap(),
            1.3110287771460599,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            carlson_rf(2.0, 3.0, 4.0).unwrap(),
            0.58408284167715171,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            carlson_rd(0.0, 2.0, 1.0).unwrap(),
            1.7972103521033883,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            carlson_rd(2.0, 3.0, 4.0).unwrap(),
            0.16510527294261053,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            carlson_rj(2.0, 3.0, 4.0, 5.0).unwrap(),
            0.14297579667156754,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            carlson_rc(2.0, 3.0).unwrap(),
            0.61547970867038734,
            max_relative = 1e-15
        );
    }

    #[test]
    fn complete_first_and_second_kind() {
        for (k, kk, ee) in [
            (0.1, 1.5747455615173560, 1.5668619420216683),
            (0.5, 1.6857503548125960, 1.4674622093394272),
            (0.9, 2.2805491384227702, 1.1716970527816141),
            (0.99, 3.3566005233611924, 1.0284758090288040),
            // dyadic modulus, exactly representable: 1 - 2^-20
            (0.99999904632568359375, 7.9711961389836742, 1.0000071250860013),
        ] {
            assert_relative_eq!(complete_k(k).unwrap(), kk, max_relative = 1e-14);
            assert_relative_eq!(complete_e(k).unwrap(), ee, max_relative = 1e-14);
        }
    }

    #[test]
    fn complete_third_kind_both_sign_characteristics() {
        for (n, k, pi) in [
            (-0.5, 0.5, 1.3664739530045969),
            (-4.0, 0.9, 0.87938539698906602),
            (0.3, 0.5, 2.0277924458111315),
            (0.8, 0.9, 5.9820740813645701),
            (-0.25, 0.99, 2.8676239006863431),
        ] {
            assert_relative_eq!(complete_pi(n, k).unwrap(), pi, max_relative = 1e-14);
        }
    }

    #[test]
    fn incomplete_first_kind() {
        for (phi, k, f) in [
            (0.3, 0.5, 0.30111597966406603),
            (1.0, 0.9, 1.1596610707321990),
            (1.5, 0.99, 2.8733655064122454),
            (0.7, 0.2, 0.70208887732107052),
        ] {
            assert_relative_eq!(incomplete_f(phi, k).unwrap(), f, max_relative = 1e-14);
        }
        // F(pi/2, k) = K(k)
        assert_relative_eq!(
            incomplete_f(std::f64::consts::FRAC_PI_2, 0.7).unwrap(),
            complete_k(0.7).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn jacobi_functions() {
        for (u, k, sn, cn, dn) in [
            (0.3, 0.5, 0.29446555154955624, 0.95566209454525067, 0.98910187025283392),
            (1.2, 0.9, 0.85525656910285414, 0.51820478674594938, 0.63836848513628557),
            (2.5, 0.99, 0.99079320909891376, 0.13538396065810806, 0.19458693005720342),
            (0.8, 0.1, 0.71683307160878859, 0.69724482604599467, 0.99742744271173885),
            (1.7, 0.7, 0.99457334451319862, 0.10403779305536195, 0.71784656617419078),
        ] {
            let (s, c, d) = jacobi_sn_cn_dn(u, k).unwrap();
            assert_relative_eq!(s, sn, epsilon = 1e-13);
            assert_relative_eq!(c, cn, epsilon = 1e-13);
            assert_relative_eq!(d, dn, epsilon = 1e-13);
        }
    }

    #[test]
    fn jacobi_identities_and_periodicity() {
        let k = 0.83;
        let kk = complete_k(k).unwrap();
        for i in 0..40 {
            let u = -2.0 + 0.17 * i as f64;
            let (s, c, d) = jacobi_sn_cn_dn(u, k).unwrap();
            assert!((s * s + c * c - 1.0).abs() < 1e-12);
            assert!((d * d + k * k * s * s - 1.0).abs() < 1e-12);
        }
        // sn has period 4K, cn(u + 2K) = -cn(u)
        let (s0, c0, _) = jacobi_sn_cn_dn(0.4, k).unwrap();
        let (s4, c4, _) = jacobi_sn_cn_dn(0.4 + 4.0 * kk, k).unwrap();
        let (_, c2, _) = jacobi_sn_cn_dn(0.4 + 2.0 * kk, k).unwrap();
        assert_relative_eq!(s0, s4, epsilon = 1e-10);
        assert_relative_eq!(c0, c4, epsilon = 1e-10);
        assert_relative_eq!(c0, -c2, epsilon = 1e-10);
    }

    #[test]
    fn inv_cn_round_trip() {
        for k in [0.2, 0.6, 0.95] {
            for x in [0.05, 0.3, 0.7, 0.99] {
                let u = inv_cn(x, k).unwrap();
                let (_, c, _) = jacobi_sn_cn_dn(u, k).unwrap();
                assert_relative_eq!(c, x, epsilon = 1e-12);
                assert!(u >= 0.0 && u <= complete_k(k).unwrap());
            }
        }
    }

    #[test]
    fn legendre_relation() {
        // E(k) K'(k) + E'(k) K(k) - K(k) K'(k) = pi/2
        for k in [0.3_f64, 0.5, 0.8] {
            let kp = (1.0 - k * k).sqrt();
            let lhs = complete_e(k).unwrap() * complete_k(kp).unwrap()
                + complete_e(kp).unwrap() * complete_k(k).unwrap()
                - complete_k(k).unwrap() * complete_k(kp).unwrap();
            assert_relative_eq!(lhs, std::f64::consts::FRAC_PI_2, max_relative = 1e-14);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(complete_k(1.0).is_err());
        assert!(complete_k(-0.1).is_err());
        assert!(complete_pi(1.2, 0.5).is_err());
        assert!(carlson_rf(-1.0, 1.0, 1.0).is_err());
        assert!(carlson_rj(1.0, 1.0, 1.0, -2.0).is_err());
    }
}

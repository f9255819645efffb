//! Small numeric helpers shared across modules: bracketed root finding,
//! Gauss-Legendre quadrature with node doubling, and an adaptive
//! Dormand-Prince 5(4) integrator with dense output.

use crate::error::{Error, Result};

/// Brent's method on [a, b]. Requires f(a) and f(b) of opposite sign
/// (or one of them zero).
pub(crate) fn brent_root(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::invalid(
            "root bracket",
            format!("f({a}) = {fa} and f({b}) = {fb} have the same sign"),
        ));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..200 {
        let tol_act = 2.0 * f64::EPSILON * b.abs() + tol;
        if fb == 0.0 || (b - a).abs() < tol_act {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && !(mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            && !(!mflag && (s - b).abs() >= (c - d).abs() / 2.0));
        if cond {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Err(Error::NoConvergence {
        what: "brent_root",
        iters: 200,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Accurate to ~1e-15 for n up to a few hundred.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by upward recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate f over [a, b] with Gauss-Legendre, doubling the node count until
/// two consecutive results agree to rel_tol (or the cap is hit; the finest
/// result is then returned anyway, since the integrands here are smooth and
/// the cap is generous).
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut prev = f64::NAN;
    let mut n = 32;
    loop {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let cur: f64 = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| wi * f(mid + half * xi))
            .sum::<f64>()
            * half;
        if (cur - prev).abs() <= rel_tol * cur.abs().max(1e-300) || n >= 1024 {
            return cur;
        }
        prev = cur;
        n *= 2;
    }
}

// Dormand-Prince 5(4) tableau
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// embedded 4th-order error weights (b - b_hat)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output weights for the quartic interpolant
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step of the integrator with its dense-output interpolant,
/// a degree-4 polynomial valid on [t0, t0 + h].
#[derive(Clone, Copy, Debug)]
pub(crate) struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolate the state at any t inside the step.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.rcont;
            y[i] = r[0][i]
                + s * (r[1][i] + (1.0 - s) * (r[2][i] + s * (r[3][i] + (1.0 - s) * r[4][i])));
        }
        y
    }
}

/// Adaptive Dormand-Prince 5(4) integration from t0 to t_end (forward only).
/// The handler sees every accepted step with its dense interpolant and the
/// end state; returning true stops the integration after that step.
/// Returns the final state and time (early-stopped or t_end).
pub(crate) fn dopri5<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    rtol: f64,
    atol: f64,
    mut handler: impl FnMut(&DenseStep<N>, &[f64; N]) -> bool,
) -> Result<(f64, [f64; N])> {
    assert!(t_end > t0, "forward integration only");
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);

    // initial step size: compare the scale of y and y' (Hairer's hinit)
    let sk = |yv: &[f64; N], i: usize| atol + rtol * yv[i].abs();
    let norm = |v: &[f64; N], yv: &[f64; N]| {
        (v.iter()
            .enumerate()
            .map(|(i, x)| (x / sk(yv, i)).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt()
    };
    let d0 = norm(&y, &y);
    let d1 = norm(&k1, &y);
    let mut h = if d0 > 1e-10 && d1 > 1e-10 {
        0.01 * d0 / d1
    } else {
        1e-6
    };
    h = h.min(t_end - t0);

    let mut n_steps = 0usize;
    const MAX_STEPS: usize = 50_000_000;
    while t < t_end {
        n_steps += 1;
        if n_steps > MAX_STEPS {
            return Err(Error::NoConvergence {
                what: "ode integration",
                iters: MAX_STEPS,
            });
        }
        h = h.min(t_end - t);
        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        let stage = |k: &[[f64; N]; 7], a: &[f64]| {
            let mut ys = y;
            for (j, &aj) in a.iter().enumerate() {
                for i in 0..N {
                    ys[i] += h * aj * k[j][i];
                }
            }
            ys
        };
        k[1] = f(t + C[1] * h, &stage(&k, &A2));
        k[2] = f(t + C[2] * h, &stage(&k, &A3));
        k[3] = f(t + C[3] * h, &stage(&k, &A4));
        k[4] = f(t + C[4] * h, &stage(&k, &A5));
        k[5] = f(t + C[5] * h, &stage(&k, &A6));
        let y1 = stage(&k, &A7);
        k[6] = f(t + h, &y1);

        // embedded error estimate
        let mut err = 0.0;
        for i in 0..N {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum();
            let scale = atol + rtol * y[i].abs().max(y1[i].abs());
            err += (h * e / scale).powi(2);
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            // accepted: build the dense interpolant, then hand it out
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k[6][i] - bspl;
                rcont[4][i] = h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
            }
            let step = DenseStep { t0: t, h, rcont };
            t += h;
            y = y1;
            k1 = k[6];
            let stop = handler(&step, &y);
            if stop {
                return Ok((t, y));
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
        if !(h > 1e-14 * t.abs().max(1.0)) {
            return Err(Error::NoConvergence {
                what: "ode step size underflow",
                iters: n_steps,
            });
        }
    }
    Ok((t, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brent_finds_simple_roots() {
        let r = brent_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-12);
        let r = brent_root(|x| x.cos(), 0.0, 3.0, 1e-14).unwrap();
        assert_relative_eq!(r, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        // n-point rule is exact for degree 2n-1
        let (x, w) = gauss_legendre(8);
        let int_x14: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(14)).sum();
        assert_relative_eq!(int_x14, 2.0 / 15.0, max_relative = 1e-13);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn integrate_smooth_function() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-13);
        assert_relative_eq!(v, std::f64::consts::E - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn dopri5_integrates_harmonic_oscillator() {
        let t_end = 20.0 * std::f64::consts::PI;
        let (t, y) = dopri5(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            t_end,
            1e-11,
            1e-13,
            |_, _| false,
        )
        .unwrap();
        assert_eq!(t, t_end);
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(y[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn dopri5_dense_output_interpolates_accurately() {
        // sample the interpolant at interior points of every accepted step
        let mut worst: f64 = 0.0;
        dopri5(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            1e-10,
            1e-12,
            |step, _| {
                for m in 1..5 {
                    let t = step.t0 + step.h * m as f64 / 5.0;
                    let y = step.eval(t);
                    worst = worst.max((y[0] - t.cos()).abs());
                }
                false
            },
        )
        .unwrap();
        assert!(worst < 1e-9, "dense output error {worst}");
    }

    #[test]
    fn dopri5_handler_can_stop_early() {
        let (t, y) = dopri5(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            50.0,
            1e-10,
            1e-12,
            |step, _| step.t1() > 1.0,
        )
        .unwrap();
        assert!(t > 1.0 && t < 1.5);
        assert_relative_eq!(y[0], t.exp(), max_relative = 1e-9);
    }
}

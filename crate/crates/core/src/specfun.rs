//! Gamma function and modified Bessel functions of real order.
//!
//! `I_nu` is summed from its power series up to `z = 30` and from the
//! Hankel asymptotic expansion beyond. `K_nu` uses the reflection formula
//! `K_nu = pi / (2 sin(nu pi)) [I_-nu - I_nu]` for `z <= 2`, Steed's
//! continued fraction (Temme's variant) for `2 < z <= 30`, where the
//! reflection formula loses digits to cancellation, and the asymptotic
//! series above 30.

use std::f64::consts::PI;

use crate::error::{HvlError, Result};

/// Series/asymptotic crossover for both Bessel functions.
pub const ASYMPTOTIC_CROSSOVER: f64 = 30.0;
/// Below this argument `K_nu` comes from the reflection formula.
pub const REFLECTION_LIMIT: f64 = 2.0;

const MAX_ARGUMENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_terms: 200,
            rel_tol: 1e-14,
        }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 10 || !(self.rel_tol > 0.0) {
            return Err(HvlError::Domain(format!(
                "series control needs max_terms >= 10 and rel_tol > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

// Lanczos coefficients for g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_non_positive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Gamma function by the Lanczos approximation (g = 7), with reflection below 1/2.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(HvlError::Domain(format!("gamma of non-finite {x}")));
    }
    if is_non_positive_integer(x) {
        return Err(HvlError::Domain(format!("gamma has a pole at {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// `1/Gamma(x)`, zero at the poles.
fn recip_gamma(x: f64) -> f64 {
    if is_non_positive_integer(x) {
        0.0
    } else {
        1.0 / gamma_unchecked(x)
    }
}

pub fn bessel_i(nu: f64, z: f64) -> Result<f64> {
    bessel_i_with(nu, z, SeriesControl::default())
}

pub fn bessel_i_with(nu: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    ctl.validate()?;
    if !nu.is_finite() || !z.is_finite() || z < 0.0 {
        return Err(HvlError::Domain(format!(
            "I_nu needs finite nu and z >= 0, got nu={nu}, z={z}"
        )));
    }
    if z > MAX_ARGUMENT {
        return Err(HvlError::Range(format!("I_nu({z}) overflows")));
    }
    // I_{-n} = I_n for integer order
    let nu = if nu < 0.0 && nu == nu.round() {
        -nu
    } else {
        nu
    };
    if z == 0.0 {
        return if nu == 0.0 {
            Ok(1.0)
        } else if nu > 0.0 {
            Ok(0.0)
        } else {
            Err(HvlError::Range(format!("I_{nu}(0) is infinite")))
        };
    }
    if z > ASYMPTOTIC_CROSSOVER {
        return Ok(bessel_i_asymptotic(nu, z));
    }
    bessel_i_series(nu, z, ctl)
}

fn bessel_i_series(nu: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    let half = 0.5 * z;
    let q = half * half;
    let mut term = half.powf(nu) * recip_gamma(nu + 1.0);
    let mut sum = term;
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        let denom = (kf + 1.0) * (nu + kf + 1.0);
        if denom == 0.0 {
            // 1/Gamma pole: the next term restarts from the closed form
            term = half.powf(nu + 2.0 * (kf + 1.0)) * recip_gamma(nu + kf + 2.0)
                / gamma_unchecked(kf + 2.0);
        } else {
            term *= q / denom;
        }
        sum += term;
        if term.abs() <= ctl.rel_tol * sum.abs() && kf + 1.0 > half {
            return Ok(sum);
        }
    }
    Err(HvlError::Range(format!(
        "I_{nu}({z}) series did not converge in {} terms",
        ctl.max_terms
    )))
}

/// Sum of the Hankel-type asymptotic series `sum_k sign^k a_k(nu) / z^k`.
fn hankel_series(nu: f64, z: f64, sign: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..100 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * sign * (mu - odd * odd) / (8.0 * kf * z);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn bessel_i_asymptotic(nu: f64, z: f64) -> f64 {
    z.exp() / (2.0 * PI * z).sqrt() * hankel_series(nu, z, -1.0)
}

pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    bessel_k_with(nu, z, SeriesControl::default())
}

pub fn bessel_k_with(nu: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    check_k_domain(nu, z)?;
    if z > MAX_ARGUMENT {
        return Ok(0.0);
    }
    if z <= REFLECTION_LIMIT {
        bessel_k_reflection_with(nu, z, ctl)
    } else if z <= ASYMPTOTIC_CROSSOVER {
        Ok(bessel_k_continued_fraction(nu.abs(), z))
    } else {
        Ok(bessel_k_asymptotic(nu, z))
    }
}

fn check_k_domain(nu: f64, z: f64) -> Result<()> {
    if !nu.is_finite() || nu == nu.round() {
        return Err(HvlError::Domain(format!(
            "K_nu is only supported for non-integer order, got {nu}"
        )));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(HvlError::Domain(format!("K_nu needs z > 0, got {z}")));
    }
    Ok(())
}

/// `K_nu` straight from the reflection formula, at any `z` the `I` series covers.
pub fn bessel_k_reflection(nu: f64, z: f64) -> Result<f64> {
    bessel_k_reflection_with(nu, z, SeriesControl::default())
}

fn bessel_k_reflection_with(nu: f64, z: f64, ctl: SeriesControl) -> Result<f64> {
    check_k_domain(nu, z)?;
    let ip = bessel_i_with(nu, z, ctl)?;
    let im = bessel_i_with(-nu, z, ctl)?;
    Ok(PI / (2.0 * (nu * PI).sin()) * (im - ip))
}

fn bessel_k_asymptotic(nu: f64, z: f64) -> f64 {
    (PI / (2.0 * z)).sqrt() * (-z).exp() * hankel_series(nu, z, 1.0)
}

/// Steed's continued fraction for `K_mu`, `|mu| <= 1/2`, then upward recurrence.
fn bessel_k_continued_fraction(nu: f64, z: f64) -> f64 {
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (k_mu, k_mu1) = temme_cf2(mu, z);
    if n == 0.0 {
        return k_mu;
    }
    let (mut km, mut k) = (k_mu, k_mu1);
    let mut order = mu + 1.0;
    for _ in 1..(n as usize) {
        let kp = km + 2.0 * order / z * k;
        km = k;
        k = kp;
        order += 1.0;
    }
    k
}

fn temme_cf2(mu: f64, x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-16;
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    let h = a1 * h;
    let k_mu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    (k_mu, k_mu1)
}

/// `dK_nu/dz = -K_{nu-1} - (nu/z) K_nu`, using `K_{nu-1} = K_{1-nu}`.
pub fn bessel_k_derivative(nu: f64, z: f64) -> Result<f64> {
    let k = bessel_k(nu, z)?;
    let km = bessel_k(1.0 - nu, z)?;
    Ok(-km - nu / z * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma(0.5).unwrap() - PI.sqrt()).abs() < 1e-13);
        assert!((gamma(5.0).unwrap() - 24.0).abs() < 1e-11);
        assert!((gamma(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!(gamma(0.0).is_err());
        assert!(gamma(-3.0).is_err());
    }

    #[test]
    fn bessel_i_at_zero() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(0.3, 0.0).unwrap(), 0.0);
        assert!(bessel_i(-0.3, 0.0).is_err());
        assert!(bessel_i(0.3, -1.0).is_err());
    }

    #[test]
    fn bessel_k_domain() {
        assert!(bessel_k(1.0, 1.0).is_err());
        assert!(bessel_k(0.3, 0.0).is_err());
        assert!(bessel_k(0.3, -2.0).is_err());
    }

    #[test]
    fn k_is_even_in_order() {
        let a = bessel_k(0.2, 1.5).unwrap();
        let b = bessel_k(-0.2, 1.5).unwrap();
        assert!((a - b).abs() < 1e-15 * a);
    }

    #[test]
    fn crossovers_agree() {
        for nu in [0.1, 0.25, 0.45, 0.8] {
            let z = ASYMPTOTIC_CROSSOVER;
            let s = bessel_i_series(nu, z, SeriesControl::default()).unwrap();
            let a = bessel_i_asymptotic(nu, z);
            assert!((s - a).abs() < 1e-12 * s, "I nu={nu}");
            let cf = bessel_k_continued_fraction(nu, z);
            let asy = bessel_k_asymptotic(nu, z);
            assert!((cf - asy).abs() < 1e-12 * cf, "K nu={nu}");
            let z = REFLECTION_LIMIT;
            let refl = bessel_k_reflection(nu, z).unwrap();
            let cf = bessel_k_continued_fraction(nu, z);
            assert!((cf - refl).abs() < 5e-13 * cf, "K nu={nu} at 2");
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let (nu, z) = (0.3, 1.7);
        let h = 1e-5;
        let fd = (bessel_k(nu, z + h).unwrap() - bessel_k(nu, z - h).unwrap()) / (2.0 * h);
        assert!((fd - bessel_k_derivative(nu, z).unwrap()).abs() < 1e-9);
    }
}

//! Finite sums `sum c r^p (ln r)^k` used for small-r tails.

use crate::error::{HvlError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub power: f64,
    pub log_power: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerLogSeries {
    pub terms: Vec<Term>,
}

impl PowerLogSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coeff: f64, power: f64, log_power: u32) {
        if coeff != 0.0 {
            self.terms.push(Term {
                coeff,
                power,
                log_power,
            });
        }
    }

    pub fn with(mut self, coeff: f64, power: f64, log_power: u32) -> Self {
        self.push(coeff, power, log_power);
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        let lr = r.ln();
        self.terms
            .iter()
            .map(|t| t.coeff * r.powf(t.power) * lr.powi(t.log_power as i32))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        PowerLogSeries {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * s,
                    ..*t
                })
                .collect(),
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut out = PowerLogSeries::new();
        for a in &self.terms {
            for b in &other.terms {
                out.push(
                    a.coeff * b.coeff,
                    a.power + b.power,
                    a.log_power + b.log_power,
                );
            }
        }
        out
    }

    pub fn shifted(&self, dp: f64) -> Self {
        PowerLogSeries {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    power: t.power + dp,
                    ..*t
                })
                .collect(),
        }
    }

    pub fn plus(mut self, other: &Self) -> Self {
        self.terms.extend(other.terms.iter().copied());
        self
    }

    pub fn derivative(&self) -> Self {
        let mut out = PowerLogSeries::new();
        for t in &self.terms {
            out.push(t.coeff * t.power, t.power - 1.0, t.log_power);
            if t.log_power > 0 {
                out.push(t.coeff * t.log_power as f64, t.power - 1.0, t.log_power - 1);
            }
        }
        out
    }

    /// Merges terms whose powers agree to `1e-9` and whose log powers match.
    pub fn collected(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| {
            a.power
                .total_cmp(&b.power)
                .then(a.log_power.cmp(&b.log_power))
        });
        let mut out: Vec<Term> = Vec::new();
        for t in terms {
            match out
                .iter_mut()
                .rev()
                .find(|o| (o.power - t.power).abs() <= 1e-9 && o.log_power == t.log_power)
            {
                Some(o) => o.coeff += t.coeff,
                None => out.push(t),
            }
        }
        PowerLogSeries { terms: out }
    }

    /// Limit as `r -> 0+`. Coefficients below `rel_tol` of the largest one count as cancelled.
    pub fn limit_at_zero(&self, rel_tol: f64) -> Result<f64> {
        let c = self.collected();
        let scale = c.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max);
        let mut value = 0.0;
        for t in &c.terms {
            let zero = t.power.abs() <= 1e-9;
            if zero && t.log_power == 0 {
                value += t.coeff;
            } else if (t.power < 0.0 || zero) && t.coeff.abs() > rel_tol * scale {
                return Err(HvlError::Divergence(format!(
                    "term r^{} (ln r)^{} does not vanish at the origin",
                    t.power, t.log_power
                )));
            }
        }
        Ok(value)
    }

    /// Smallest power present.
    pub fn leading_power(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.power).reduce(f64::min)
    }

    /// `integral_0^a` of the series.
    pub fn integral_from_zero(&self, a: f64) -> Result<f64> {
        let la = a.ln();
        let mut acc = 0.0;
        for t in &self.terms {
            let q = t.power + 1.0;
            if q <= 0.0 {
                return Err(HvlError::Divergence(format!(
                    "integrand behaves like r^{} near the origin",
                    t.power
                )));
            }
            let aq = a.powf(q);
            let v = match t.log_power {
                0 => aq / q,
                1 => aq * (la / q - 1.0 / (q * q)),
                2 => aq * (la * la / q - 2.0 * la / (q * q) + 2.0 / (q * q * q)),
                3 => {
                    aq * (la.powi(3) / q - 3.0 * la * la / (q * q) + 6.0 * la / q.powi(3)
                        - 6.0 / q.powi(4))
                }
                4 => {
                    aq * (la.powi(4) / q - 4.0 * la.powi(3) / (q * q) + 12.0 * la * la / q.powi(3)
                        - 24.0 * la / q.powi(4)
                        + 24.0 / q.powi(5))
                }
                k => {
                    return Err(HvlError::Domain(format!(
                        "log power {k} not supported in tail integrals"
                    )))
                }
            };
            acc += t.coeff * v;
        }
        Ok(acc)
    }
}

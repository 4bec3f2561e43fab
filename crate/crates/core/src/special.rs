//! Gamma function and combinatorial counts.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos series, valid for `x >= 0.5`.
fn lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Gamma function for real arguments.
///
/// The Lanczos series is used on `[0.5, 50]`; larger arguments are reduced into
/// that range by `Γ(x) = (x-1)Γ(x-1)` and smaller ones go through the
/// reflection formula.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.5 {
        if x == x.floor() {
            return f64::NAN;
        }
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x <= 50.0 {
        return lanczos(x);
    }
    let mut y = x;
    let mut scale = 1.0;
    while y > 50.0 {
        y -= 1.0;
        scale *= y;
    }
    scale * lanczos(y)
}

/// Natural log of `Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        return gamma(x).ln();
    }
    let x1 = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x1 + i as f64);
    }
    let t = x1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x1 + 0.5) * t.ln() - t + acc.ln()
}

/// Pascal triangle rows `0..=max_n` with overflow checking.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    rows: Vec<Vec<usize>>,
}

impl BinomialTable {
    pub fn new(max_n: usize) -> Result<Self> {
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![1]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = vec![1usize; n + 1];
            for k in 1..n {
                row[k] = prev[k - 1].checked_add(prev[k]).ok_or_else(|| {
                    Error::Capacity(format!("binomial C({n}, {k}) overflows usize"))
                })?;
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }

    pub fn get(&self, n: usize, k: usize) -> usize {
        if k > n {
            0
        } else {
            self.rows[n][k]
        }
    }
}

/// `C(n, k)` via the Pascal recurrence.
pub fn binomial(n: usize, k: usize) -> Result<usize> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    // one row of the triangle, updated in place
    let mut row = vec![0usize; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] = row[j]
                .checked_add(row[j - 1])
                .ok_or_else(|| Error::Capacity(format!("binomial C({n}, {k}) overflows usize")))?;
        }
    }
    Ok(row[k])
}

/// Multinomial coefficient `|α|! / Π αᵢ!` as a float, built from products of
/// binomials so no factorial is ever formed.
pub fn multinomial(alpha: &[u32]) -> f64 {
    let mut total = 0usize;
    let mut acc = 1.0;
    for &a in alpha {
        let a = a as usize;
        total += a;
        acc *= binomial_f64(total, a);
    }
    acc
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Surface measure of the unit sphere in `R^n`: `2 π^{n/2} / Γ(n/2)`.
pub fn sphere_surface(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Lebesgue volume of the unit ball in `R^n`: `π^{n/2} / Γ(n/2 + 1)`.
pub fn ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

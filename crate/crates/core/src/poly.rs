//! Dense univariate polynomials with complex coefficients, lowest degree first.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

pub type Poly = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn from_real(coeffs: &[f64]) -> Poly {
    coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

pub fn eval(p: &[Complex64], u: Complex64) -> Complex64 {
    p.iter().rev().fold(ZERO, |acc, &c| acc * u + c)
}

/// Derivative coefficients.
pub fn derivative(p: &[Complex64]) -> Poly {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

pub fn mul(p: &[Complex64], q: &[Complex64]) -> Poly {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn add(p: &[Complex64], q: &[Complex64]) -> Poly {
    let mut out = vec![ZERO; p.len().max(q.len())];
    for (i, &a) in p.iter().enumerate() {
        out[i] += a;
    }
    for (i, &b) in q.iter().enumerate() {
        out[i] += b;
    }
    out
}

/// Monic `prod (u - r)`.
pub fn from_roots(roots: &[Complex64]) -> Poly {
    roots.iter().fold(vec![ONE], |acc, &r| mul(&acc, &[-r, ONE]))
}

/// Coefficients of `p(u + h)`.
pub fn shift(p: &[Complex64], h: Complex64) -> Poly {
    // Horner in the shifted variable
    let mut out: Poly = Vec::new();
    for &c in p.iter().rev() {
        out = mul(&out, &[h, ONE]);
        if out.is_empty() {
            out.push(c);
        } else {
            out[0] += c;
        }
    }
    out
}

/// Quotient and remainder of `num / den` for monic `den`.
pub fn div_monic(num: &[Complex64], den: &[Complex64]) -> (Poly, Poly) {
    let dn = den.len() - 1;
    debug_assert!(den[dn] == ONE, "divisor must be monic");
    if num.len() <= dn {
        return (vec![ZERO], num.to_vec());
    }
    let mut rem = num.to_vec();
    let mut quot = vec![ZERO; num.len() - dn];
    for k in (0..quot.len()).rev() {
        let c = rem[k + dn];
        quot[k] = c;
        for (j, &d) in den.iter().enumerate() {
            rem[k + j] -= c * d;
        }
    }
    rem.truncate(dn);
    (quot, rem)
}

/// Roots of a polynomial with nonzero leading coefficient, via the companion matrix.
pub fn roots(p: &[Complex64]) -> Option<Vec<Complex64>> {
    let deg = p.len().checked_sub(1)?;
    let lead = p[deg];
    if lead == ZERO {
        return None;
    }
    if deg == 0 {
        return Some(Vec::new());
    }
    let companion = DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -p[i] / lead
        } else if i == j + 1 {
            ONE
        } else {
            ZERO
        }
    });
    let vals = Schur::new(companion).eigenvalues()?;
    Some(vals.iter().copied().collect())
}

pub fn max_abs(p: &[Complex64]) -> f64 {
    p.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
}

//! Real polynomials in descending-power form and a simultaneous all-roots
//! finder (Aberth–Ehrlich iteration).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Evaluates `c[0]·s^n + ... + c[n]` by Horner's rule.
pub fn eval_real(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

pub fn eval_complex(coeffs: &[Complex64], s: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Coefficients of the derivative, descending powers.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len().saturating_sub(1);
    coeffs[..n]
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (n - k) as f64)
        .collect()
}

/// Product of two complex polynomials, descending powers.
pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic polynomial with the given roots, descending powers.
pub fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    roots.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, &r| {
        mul(&acc, &[Complex64::new(1.0, 0.0), -r])
    })
}

const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-13;

/// All roots of a real polynomial with non-zero leading and constant
/// coefficients.
///
/// The variable is rescaled so the roots have geometric-mean magnitude one,
/// the rescaled polynomial is made monic, and Aberth–Ehrlich corrections are
/// applied to all estimates at once until every correction is below `1e-13`
/// relative (at most 200 sweeps). Complex estimates are paired with their
/// nearest conjugate and averaged, so the result is conjugate-symmetric by
/// construction.
pub fn real_poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    assert!(n >= 1, "degree must be at least one");
    assert!(
        coeffs[0] != 0.0 && coeffs[n] != 0.0,
        "leading and constant coefficients must be non-zero"
    );

    // s = scale·z; dividing by lead·scale^n makes the z-polynomial monic
    let scale = (coeffs[n] / coeffs[0]).abs().powf(1.0 / n as f64);
    let lead = coeffs[0];
    let z_coeffs: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c / (lead * scale.powi(k as i32)))
        .collect();
    let dz = derivative(&z_coeffs);

    // initial guesses on a slightly perturbed circle, offset from the real axis
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            Complex64::from_polar(1.0 + 0.1 * k as f64 / n as f64, theta)
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let p = eval_real(&z_coeffs, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / eval_real(&dz, z[i]);
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[i] -= step;
            max_step = max_step.max(step.norm() / z[i].norm().max(f64::MIN_POSITIVE));
        }
        if !max_step.is_finite() {
            break;
        }
        if max_step < REL_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::RootsNotConverged(MAX_ITER));
    }
    let roots: Vec<Complex64> = z.iter().map(|&r| r * scale).collect();
    Ok(pair_conjugates(roots))
}

/// Forces conjugate symmetry: near-real estimates become real, the rest are
/// matched to their nearest partner and averaged.
fn pair_conjugates(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let magnitude = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let real_tol = 1e-10 * magnitude;
    let mut out = Vec::with_capacity(roots.len());
    while let Some(r) = roots.pop() {
        if r.im.abs() <= real_tol {
            out.push(Complex64::new(r.re, 0.0));
            continue;
        }
        let partner = roots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - r.conj()).norm().total_cmp(&(b.1 - r.conj()).norm()))
            .map(|(k, _)| k);
        match partner {
            Some(k) => {
                let q = roots.swap_remove(k);
                let avg = 0.5 * (r + q.conj());
                let upper = Complex64::new(avg.re, avg.im.abs());
                out.push(upper);
                out.push(upper.conj());
            }
            None => out.push(Complex64::new(r.re, 0.0)),
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(b.im.total_cmp(&a.im)));
    out
}

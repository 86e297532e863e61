//! Oracles shared by the integration tests. None of these route through the
//! solver code they are compared against.

#![allow(dead_code)]

use aqpu_core::numerics::matrix::{ComplexMatrix, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

/// exp(−i H t) by scaling and squaring a 24-term Taylor series.
pub fn expm_taylor(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let x = h.scale(C64::new(0.0, -t));
    let norm = x.frobenius();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let y = x.scale_real(0.5f64.powi(squarings));
    let n = h.rows();
    let mut term = ComplexMatrix::identity(n);
    let mut sum = ComplexMatrix::identity(n);
    for k in 1..24 {
        term = term.matmul(&y).scale_real(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + &a.adjoint()).scale_real(0.5 * scale)
}

pub fn random_pure(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// P[T ≤ t] for T ~ Gamma(k, rate): the n-th tick of an Erlang(D, DΓ) clock
/// has k = nD.
pub fn erlang_cdf(k: usize, rate: f64, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    Gamma::new(k as f64, rate).expect("valid gamma").cdf(t)
}

/// Central difference of the Erlang CDF.
pub fn erlang_cdf_derivative(k: usize, rate: f64, t: f64) -> f64 {
    let h = 1e-5 * t.max(1e-3);
    (erlang_cdf(k, rate, t + h) - erlang_cdf(k, rate, t - h)) / (2.0 * h)
}

/// E[e^(−iωT)] for T ~ Erlang(D, DΓ).
pub fn erlang_characteristic(d: usize, gamma: f64, omega: f64) -> C64 {
    let r = d as f64 * gamma;
    (C64::new(r, 0.0) / C64::new(r, omega)).powu(d as u32)
}

/// Average over an Erlang(D, DΓ) gate time of e^(−iHT) ρ e^(iHT) for
/// H = θ (I − P)/2 with P an involution, written through the projectors
/// (I ± P)/2 and their eigenvalues 0 and θ.
pub fn erlang_involution_channel(p: &ComplexMatrix, theta: f64, d: usize, gamma: f64, rho: &ComplexMatrix) -> ComplexMatrix {
    let id = ComplexMatrix::identity(p.rows());
    let plus = (&id + p).scale_real(0.5);
    let minus = (&id - p).scale_real(0.5);
    let pp = plus.matmul(rho).matmul(&plus);
    let mm = minus.matmul(rho).matmul(&minus);
    let pm = plus.matmul(rho).matmul(&minus).scale(erlang_characteristic(d, gamma, -theta));
    let mp = minus.matmul(rho).matmul(&plus).scale(erlang_characteristic(d, gamma, theta));
    &(&(&pp + &mm) + &pm) + &mp
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// ⟨ψ|ρ|ψ⟩
pub fn overlap(rho: &ComplexMatrix, psi: &[C64]) -> f64 {
    let r = rho.mul_vec(psi);
    psi.iter().zip(&r).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

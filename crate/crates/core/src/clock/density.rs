use statrs::function::gamma::ln_gamma;

use crate::error::{AqpuError, Result};
use crate::numerics::matrix::C64;
use crate::numerics::quadrature::composite_gauss;

/// A single-tick waiting-time density in quadrature form: ∫ f(t) P(t) dt ≈ Σ w_i v_i f(t_i).
#[derive(Clone, Debug, PartialEq)]
pub struct TickDensity {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl TickDensity {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.len() != values.len() || nodes.is_empty() {
            return Err(AqpuError::Dimension("density nodes, weights and values must share a non-zero length".into()));
        }
        if nodes.iter().chain(&weights).chain(&values).any(|v| !v.is_finite()) {
            return Err(AqpuError::NonFinite("tick density".into()));
        }
        if weights.iter().any(|&w| w < 0.0) || nodes.iter().any(|&t| t < 0.0) {
            return Err(AqpuError::Config("density weights and nodes must be non-negative".into()));
        }
        if nodes.windows(2).any(|w| w[1] < w[0]) {
            return Err(AqpuError::Config("density nodes must be sorted".into()));
        }
        let values = values.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Self { nodes, weights, values })
    }

    /// Samples `pdf` on a composite Gauss–Legendre grid over [a, b].
    pub fn from_fn(pdf: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> Result<Self> {
        let (nodes, weights) = composite_gauss(a, b, panels, order);
        let values = nodes.iter().map(|&t| pdf(t)).collect();
        Self::new(nodes, weights, values)
    }

    /// Numerical point mass at τ.
    pub fn point_mass(tau: f64) -> Result<Self> {
        Self::new(vec![tau], vec![1.0], vec![1.0])
    }

    /// Erlang(k, rate) from its closed form, on a window of ±40 standard deviations.
    pub fn erlang(k: usize, rate: f64) -> Result<Self> {
        if k == 0 || !(rate.is_finite() && rate > 0.0) {
            return Err(AqpuError::Config("Erlang density needs k ≥ 1 and rate > 0".into()));
        }
        let kf = k as f64;
        let (mean, sd) = (kf / rate, kf.sqrt() / rate);
        let lg = ln_gamma(kf);
        let pdf = move |t: f64| {
            if t <= 0.0 {
                return if k == 1 { rate } else { 0.0 };
            }
            (kf * rate.ln() + (kf - 1.0) * t.ln() - rate * t - lg).exp()
        };
        Self::from_fn(pdf, (mean - 40.0 * sd).max(0.0), mean + 40.0 * sd, 400, 8)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Σ w_i v_i f(t_i)
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).zip(&self.values).map(|((&t, w), v)| w * v * f(t)).sum()
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|t| t) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.integrate(|t| (t - mu) * (t - mu)) / self.mass()
    }

    /// ⟨T⟩² / Var[T]; infinite for a point mass.
    pub fn accuracy(&self) -> f64 {
        let v = self.variance();
        if v <= 0.0 {
            f64::INFINITY
        } else {
            self.mean().powi(2) / v
        }
    }

    /// φ(ω) = ∫ P(t) e^(−iωt) dt
    pub fn characteristic(&self, omega: f64) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .map(|((&t, w), v)| C64::from_polar(w * v, -omega * t))
            .sum()
    }

    /// Probability of each node, normalised to the total mass.
    pub fn node_probabilities(&self) -> Vec<f64> {
        let m = self.mass();
        self.weights.iter().zip(&self.values).map(|(w, v)| w * v / m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erlang_moments() {
        let e = TickDensity::erlang(4, 8.0).unwrap();
        assert!((e.mass() - 1.0).abs() < 1e-12);
        assert!((e.mean() - 0.5).abs() < 1e-12);
        assert!((e.accuracy() - 4.0).abs() < 1e-9);
        let x = TickDensity::erlang(1, 1.0).unwrap();
        assert!((x.accuracy() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn erlang_characteristic_function_closed_form() {
        let (k, rate) = (80usize, 80.0);
        let e = TickDensity::erlang(k, rate).unwrap();
        for w in [0.5, std::f64::consts::PI, 4.0] {
            let exact = (C64::new(rate, 0.0) / C64::new(rate, w)).powi(k as i32);
            assert!((e.characteristic(w) - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn point_mass_is_deterministic() {
        let p = TickDensity::point_mass(1.5).unwrap();
        assert_eq!(p.mean(), 1.5);
        assert_eq!(p.accuracy(), f64::INFINITY);
        assert!((p.characteristic(2.0) - C64::from_polar(1.0, -3.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_malformed() {
        assert!(TickDensity::new(vec![1.0], vec![], vec![1.0]).is_err());
        assert!(TickDensity::new(vec![2.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
    }
}

//! Exhaustive single-qubit compilation and the compilation-length versus
//! clock-error trade-off.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{AqpuError, Result};
use crate::model::{GateSet, Program};
use crate::numerics::eigen::eigh_unchecked;
use crate::numerics::matrix::{ComplexMatrix, C64};

/// Longest enumerated program.
pub const MAX_COMPILE_LENGTH: usize = 14;
/// Grid spacing of the phase-quotiented hash key.
pub const DEDUP_RESOLUTION: f64 = 1e-3;
/// A product is dropped only if some kept representative lies within this distance.
pub const DEDUP_RADIUS: f64 = 2e-3;

const UNITARY_TOL: f64 = 1e-10;

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    (&u.matmul(&u.adjoint()) - &ComplexMatrix::identity(u.rows())).max_abs()
}

/// Eigenphases of a unitary. W is normal, so its Hermitian and anti-Hermitian
/// parts share eigenvectors; a generic real mix of the two separates them.
fn eigenphases(w: &ComplexMatrix) -> Vec<f64> {
    let wa = w.adjoint();
    let re = (w + &wa).scale_real(0.5);
    let im = (w - &wa).scale(C64::new(0.0, -0.5));
    let mix = &re + &im.scale_real(0.577_215_664_9);
    let e = eigh_unchecked(&mix);
    (0..w.rows())
        .map(|k| {
            let v = e.vectors.column(k);
            let wv = w.mul_vec(&v);
            v.iter().zip(&wv).map(|(a, b)| a.conj() * b).sum::<C64>().arg()
        })
        .collect()
}

/// min over φ of ‖U − e^(iφ) V‖∞, equal to 2 sin(θ/4) where θ is the shortest
/// arc holding every eigenphase of U†V.
pub fn operator_distance(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    if !u.is_square() || u.rows() != v.rows() || v.rows() != v.cols() {
        return Err(AqpuError::Dimension("operator_distance needs square matrices of equal size".into()));
    }
    for m in [u, v] {
        let d = unitarity_defect(m);
        if d > UNITARY_TOL {
            return Err(AqpuError::NotUnitary(d));
        }
    }
    Ok(distance_unchecked(u, v))
}

fn distance_unchecked(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    let w = u.adjoint().matmul(v);
    let mut ph = eigenphases(&w);
    ph.sort_by(f64::total_cmp);
    let tau = std::f64::consts::TAU;
    let mut gap = ph[0] + tau - ph[ph.len() - 1];
    for p in ph.windows(2) {
        gap = gap.max(p[1] - p[0]);
    }
    let arc = (tau - gap).max(0.0);
    2.0 * (arc / 4.0).sin()
}

/// Best program of at most `length` gates.
#[derive(Clone, Debug)]
pub struct LengthEntry {
    pub length: usize,
    pub program: Program,
    pub epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct CompilationResult {
    pub target: ComplexMatrix,
    /// Entries for L = 0..=L_max; ε(L) is non-increasing.
    pub entries: Vec<LengthEntry>,
    /// τ max_k ‖H^(k)‖∞ of the gate set used.
    pub phi_max: f64,
    /// Distinct products kept after deduplication, all layers.
    pub representatives: usize,
}

impl CompilationResult {
    pub fn epsilons(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.epsilon).collect()
    }
}

/// Key of U modulo global phase: rotate the first row-0 entry with |u| ≥ 1/2
/// to the positive real axis and round every component to the grid.
fn phase_key(u: &ComplexMatrix) -> Vec<i64> {
    let pivot = u.data().iter().take(u.cols()).find(|z| z.norm() >= 0.5).copied().unwrap_or(C64::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    u.data()
        .iter()
        .flat_map(|z| {
            let w = z * rot;
            [(w.re / DEDUP_RESOLUTION).round() as i64, (w.im / DEDUP_RESOLUTION).round() as i64]
        })
        .collect()
}

/// Breadth-first enumeration of all gate products up to `l_max`, deduplicated
/// modulo global phase. Programs use gate-set indices (1..=K).
pub fn compile_bruteforce(target: &ComplexMatrix, gs: &GateSet, l_max: usize) -> Result<CompilationResult> {
    if l_max > MAX_COMPILE_LENGTH {
        return Err(AqpuError::Guard(format!("L_max = {l_max} exceeds the enumeration guard {MAX_COMPILE_LENGTH}")));
    }
    if gs.dim() != 2 || target.rows() != 2 || target.cols() != 2 {
        return Err(AqpuError::Dimension("brute-force compilation is single-qubit (2×2) only".into()));
    }
    let defect = unitarity_defect(target);
    if defect > UNITARY_TOL {
        return Err(AqpuError::NotUnitary(defect));
    }
    let gates: Vec<(usize, ComplexMatrix)> =
        (1..=gs.len()).map(|k| gs.unitary(k).map(|u| (k, u.clone()))).collect::<Result<_>>()?;

    let mut kept: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(2)];
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    cells.entry(phase_key(&kept[0])).or_default().push(0);

    let mut layer: Vec<(Vec<usize>, ComplexMatrix)> = vec![(Vec::new(), ComplexMatrix::identity(2))];
    let mut best = LengthEntry { length: 0, program: Program::new(vec![]), epsilon: distance_unchecked(target, &kept[0]) };
    let mut entries = vec![best.clone()];

    for length in 1..=l_max {
        let products: Vec<(Vec<usize>, ComplexMatrix, Vec<i64>, f64)> = layer
            .par_iter()
            .flat_map_iter(|(seq, w)| {
                gates.iter().map(move |(k, g)| {
                    let u = g.matmul(w);
                    let mut s = seq.clone();
                    s.push(*k);
                    let key = phase_key(&u);
                    let eps = distance_unchecked(target, &u);
                    (s, u, key, eps)
                })
            })
            .collect();
        let mut next = Vec::new();
        for (seq, u, key, eps) in products {
            let slot = cells.entry(key).or_default();
            if slot.iter().any(|&i| distance_unchecked(&kept[i], &u) <= DEDUP_RADIUS) {
                continue;
            }
            slot.push(kept.len());
            kept.push(u.clone());
            if eps < best.epsilon {
                best = LengthEntry { length, program: Program::new(seq.clone()), epsilon: eps };
            }
            next.push((seq, u));
        }
        entries.push(LengthEntry { length, ..best.clone() });
        layer = next;
        if layer.is_empty() {
            for l in (length + 1)..=l_max {
                entries.push(LengthEntry { length: l, ..best.clone() });
            }
            break;
        }
    }
    Ok(CompilationResult { target: target.clone(), entries, phi_max: gs.phi_max(), representatives: kept.len() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TradeoffPoint {
    pub length: usize,
    pub epsilon: f64,
    pub clock_term: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct TradeoffCurve {
    pub points: Vec<TradeoffPoint>,
    /// L* minimizing the total; the first one on ties.
    pub argmin: usize,
}

impl TradeoffCurve {
    pub fn best(&self) -> &TradeoffPoint {
        &self.points[self.argmin]
    }

    /// argmin strictly between the first and last length.
    pub fn has_interior_minimum(&self) -> bool {
        self.argmin > 0 && self.argmin + 1 < self.points.len()
    }
}

/// total(L) = ε(L) + L φ_max² / N, with unit constants. N = ∞ drops the clock term.
pub fn tradeoff_curve(result: &CompilationResult, accuracy: f64) -> Result<TradeoffCurve> {
    if !(accuracy > 0.0) {
        return Err(AqpuError::Config(format!("clock accuracy N = {accuracy} must be positive")));
    }
    let points: Vec<TradeoffPoint> = result
        .entries
        .iter()
        .map(|e| {
            let clock_term = e.length as f64 * result.phi_max * result.phi_max / accuracy;
            TradeoffPoint { length: e.length, epsilon: e.epsilon, clock_term, total: e.epsilon + clock_term }
        })
        .collect();
    let argmin = points
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.total < points[b].total { i } else { b });
    Ok(TradeoffCurve { points, argmin })
}

/// Fit ε(L) ≈ A exp(−α L^(1/c)) by least squares on ln ε, scanning c over
/// [0.5, 6] and solving for (ln A, α) in closed form. Points with L = 0 or
/// ε ≤ 1e−12 are skipped; None with fewer than three usable points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    pub c: f64,
    pub log_prefactor: f64,
    pub residual: f64,
}

pub fn fit_compilation_decay(result: &CompilationResult) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = result
        .entries
        .iter()
        .filter(|e| e.length > 0 && e.epsilon > 1e-12)
        .map(|e| (e.length as f64, e.epsilon.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let mut best: Option<DecayFit> = None;
    for step in 0..=550 {
        let c = 0.5 + step as f64 * 0.01;
        let xs: Vec<f64> = pts.iter().map(|p| p.0.powf(1.0 / c)).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx <= 0.0 {
            continue;
        }
        let sxy: f64 = xs.iter().zip(&pts).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        let residual: f64 = xs.iter().zip(&pts).map(|(x, p)| (p.1 - icpt - slope * x).powi(2)).sum();
        if best.map_or(true, |b| residual < b.residual) {
            best = Some(DecayFit { alpha: -slope, c, log_prefactor: icpt, residual });
        }
    }
    best
}

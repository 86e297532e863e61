//! Matrix exponentials and tensor-product bookkeeping.

use super::eigen::eigh;
use super::matrix::{ComplexMatrix, C64, ZERO};
use super::types::{DensityMatrix, HermitianOperator};
use crate::error::{AqpuError, Result};

/// exp(−iHt) through the eigendecomposition of H.
pub fn expm_hermitian(h: &HermitianOperator, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(AqpuError::NonFinite(format!("evolution time {t}")));
    }
    let e = h.eigen();
    Ok(e.map(|l| C64::from_polar(1.0, -l * t)))
}

/// Same as [`expm_hermitian`] for a raw matrix, validating Hermiticity first.
pub fn expm_hermitian_matrix(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(AqpuError::NonFinite(format!("evolution time {t}")));
    }
    Ok(eigh(h)?.map(|l| C64::from_polar(1.0, -l * t)))
}

/// Embeds operators acting on individual subsystems into the full product space,
/// padding every other factor with the identity.
pub fn kron_embed(ops: &[(&ComplexMatrix, usize)], dims: &[usize]) -> Result<ComplexMatrix> {
    let mut slots: Vec<Option<&ComplexMatrix>> = vec![None; dims.len()];
    for &(op, idx) in ops {
        if idx >= dims.len() {
            return Err(AqpuError::Dimension(format!("subsystem index {idx} out of range")));
        }
        if slots[idx].is_some() {
            return Err(AqpuError::Dimension(format!("duplicate subsystem index {idx}")));
        }
        if op.rows() != dims[idx] || op.cols() != dims[idx] {
            return Err(AqpuError::Dimension(format!(
                "operator {}x{} does not match subsystem {idx} of dim {}",
                op.rows(),
                op.cols(),
                dims[idx]
            )));
        }
        slots[idx] = Some(op);
    }
    let mut out = ComplexMatrix::identity(1);
    for (slot, &d) in slots.iter().zip(dims) {
        out = match slot {
            Some(op) => out.kron(op),
            None => out.kron(&ComplexMatrix::identity(d)),
        };
    }
    Ok(out)
}

/// Reduced state on the subsystems listed in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let m = partial_trace_matrix(rho.matrix(), dims, keep)?;
    Ok(DensityMatrix::from_trusted(m))
}

pub fn partial_trace_matrix(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows() != total {
        return Err(AqpuError::Dimension(format!(
            "state of dim {} does not match subsystem dims {dims:?}",
            rho.rows()
        )));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(AqpuError::Dimension(format!("invalid keep set {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();

    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let kdim: usize = kept.iter().map(|&i| dims[i]).product();
    let tdim: usize = traced.iter().map(|&i| dims[i]).product();

    let offset = |sel: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &s in sel.iter().rev() {
            off += (idx % dims[s]) * strides[s];
            idx /= dims[s];
        }
        off
    };
    let k_off: Vec<usize> = (0..kdim).map(|i| offset(&kept, i)).collect();
    let t_off: Vec<usize> = (0..tdim).map(|i| offset(&traced, i)).collect();

    let mut out = ComplexMatrix::zeros(kdim, kdim);
    for (i, &ki) in k_off.iter().enumerate() {
        for (j, &kj) in k_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &t_off {
                acc += rho[(ki + t, kj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

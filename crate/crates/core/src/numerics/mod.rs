//! Dense complex linear algebra, exponentials, ODE integration and state metrics.

pub mod eigen;
pub mod matrix;
pub mod metrics;
pub mod ode;
pub mod ops;
pub mod quadrature;
pub mod sparse;
pub mod types;
pub mod uniformization;

pub use eigen::{eigh, Eigen};
pub use matrix::{ComplexMatrix, C64};
pub use metrics::{state_metrics, trace_distance, StateMetrics, StateRef};
pub use ode::{integrate_ode, OdeOptions};
pub use ops::{expm_hermitian, kron_embed, partial_trace};
pub use types::{DensityMatrix, HermitianOperator};

/// Views an interleaved (re, im) buffer as complex numbers.
pub(crate) fn as_complex(v: &[f64]) -> &[C64] {
    assert!(v.len() % 2 == 0);
    // SAFETY: Complex<f64> is #[repr(C)] { re, im }, layout-identical to [f64; 2].
    unsafe { std::slice::from_raw_parts(v.as_ptr().cast::<C64>(), v.len() / 2) }
}

pub(crate) fn as_complex_mut(v: &mut [f64]) -> &mut [C64] {
    assert!(v.len() % 2 == 0);
    // SAFETY: as above; the exclusive borrow is carried over.
    unsafe { std::slice::from_raw_parts_mut(v.as_mut_ptr().cast::<C64>(), v.len() / 2) }
}

pub(crate) fn flatten_complex(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

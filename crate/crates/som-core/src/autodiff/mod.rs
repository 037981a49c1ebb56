//! Reverse-mode automatic differentiation for small dense networks.
//!
//! The op vocabulary is exactly what the recurrent policy nets and their
//! losses need: affine maps, elementwise nonlinearities, softmax,
//! clamped logs, cross entropy and Gumbel-Softmax sampling. Everything
//! is f64.

mod gradcheck;
mod graph;
mod gumbel;
mod params;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport, FD_EPS, GRAD_CHECK_TOL};
pub use graph::{AutodiffError, Graph, NodeId, LOG_CLAMP};
pub use gumbel::{gumbel_softmax, gumbel_softmax_node, sample_gumbel};
pub use params::{Binding, Param, ParamId, ParamSet};
pub use tensor::{softmax_slice, Tensor};

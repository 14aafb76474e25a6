//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! The op set is deliberately narrow: what an MLP, a GCN, a GAT and a
//! mean-field variational objective over graph edges need, and nothing more.
//! Sparse matrices only ever appear as constant left operands.
//!
//! ```
//! use gssl_autodiff::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let a = tape.variable(Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]]));
//! let b = tape.constant(Tensor::from_rows(&[[1.0], [1.0]]));
//! let c = tape.matmul(a, b).unwrap();
//! let loss = tape.sum(c);
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(tape.value(c).data(), &[3.0, 7.0]);
//! assert_eq!(grads.get(a).unwrap().data(), &[1.0, 1.0, 1.0, 1.0]);
//! ```

mod error;
mod sparse;
mod tape;
mod tensor;

pub use error::{AutodiffError, Result};
pub use sparse::SparseMatrix;
pub use tape::{
    check_rate, log_sigmoid, sigmoid, sparse_dropout, Activation, Gradients, Parameter, Tape, Var,
};
pub use tensor::Tensor;

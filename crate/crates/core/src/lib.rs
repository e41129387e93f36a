//! Hybrid quantum-classical convolutional networks built from quantum feature
//! extraction (QFE) layers: convolution-style layers whose filters are
//! parameterized quantum circuits, simulated exactly and trained end to end
//! with parameter-shift gradients.

pub mod circuits;
pub mod data;
pub mod error;
pub mod gradients;
pub mod layers;
pub mod optim;
pub mod statevector;
pub mod trainer;

pub use error::{Error, Result};

use std::fmt;

use crate::error::{Error, Result};

/// Rotation axis of a single-qubit rotation `R_a(φ) = exp(-i φ A / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Primitive gate set of the simulator.
///
/// Rotations follow the `exp(-i φ A / 2)` convention, so `Ry(π)|0⟩ = |1⟩`
/// with amplitude `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
    Cz { control: usize, target: usize },
}

impl Gate {
    pub fn rotation(axis: Axis, target: usize, angle: f64) -> Gate {
        match axis {
            Axis::X => Gate::Rx(target, angle),
            Axis::Y => Gate::Ry(target, angle),
            Axis::Z => Gate::Rz(target, angle),
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => q,
            Gate::Cnot { target, .. } | Gate::Cz { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cnot { control, .. } | Gate::Cz { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => Some(a),
            _ => None,
        }
    }

    pub fn axis(&self) -> Option<Axis> {
        match self {
            Gate::Rx(..) => Some(Axis::X),
            Gate::Ry(..) => Some(Axis::Y),
            Gate::Rz(..) => Some(Axis::Z),
            _ => None,
        }
    }

    /// The gate undoing this one.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx(q, a) => Gate::Rx(q, -a),
            Gate::Ry(q, a) => Gate::Ry(q, -a),
            Gate::Rz(q, a) => Gate::Rz(q, -a),
            other => other,
        }
    }

    /// Checks qubit indices against a register size and that angles are finite.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= n_qubits {
            return Err(Error::Index {
                index: target,
                n_qubits,
            });
        }
        if let Some(control) = self.control() {
            if control >= n_qubits {
                return Err(Error::Index {
                    index: control,
                    n_qubits,
                });
            }
            if control == target {
                return Err(Error::InvalidGate(format!(
                    "control and target coincide on qubit {target}"
                )));
            }
        }
        if let Some(angle) = self.angle() {
            if !angle.is_finite() {
                return Err(Error::InvalidGate(format!("non-finite angle {angle}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H({q})"),
            Gate::Rx(q, a) => write!(f, "RX({q}, {a})"),
            Gate::Ry(q, a) => write!(f, "RY({q}, {a})"),
            Gate::Rz(q, a) => write!(f, "RZ({q}, {a})"),
            Gate::Cnot { control, target } => write!(f, "CNOT({control} -> {target})"),
            Gate::Cz { control, target } => write!(f, "CZ({control}, {target})"),
        }
    }
}

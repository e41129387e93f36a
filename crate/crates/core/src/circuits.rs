//! Circuit templates with symbolic parameter slots.
//!
//! A template is an ordered gate list where every rotation angle is either
//! fixed or read from a slot, scaled by a constant coefficient. Encoders read
//! input slots, ansaetze read weight slots.
//!
//! Ansatz presets, per layer (`n` qubits, `w` = next weight slot):
//!
//! | preset | gates                                                                  | weights |
//! |--------|------------------------------------------------------------------------|---------|
//! | sim1   | `RX(w)` on all qubits, then `RZ(w)` on all qubits                      | `2n`    |
//! | sim2   | sim1, then `CNOT(i -> i-1)` for `i = n-1 .. 1`                         | `2n`    |
//! | sim9   | `H` on all, `CZ(i, i-1)` for `i = n-1 .. 1`, `RX(w)` on all            | `n`     |
//! | sim14  | `RY(w)` all, CRX ring `i -> i+1` (`i = n-1 .. 0`), `RY(w)` all, CRX ring `i -> i-1` (`i = n-1, 0, 1, .., n-2`) | `4n` |
//! | sim15  | as sim14 with CNOT in place of CRX                                     | `2n`    |
//! | qaoa   | for each pair `(i, i+1)`: `CNOT, RZ(w) on i+1, CNOT`; then `RX(w)` all | `2n-1`  |
//!
//! Ring indices are taken mod `n`. A controlled-RX is expanded into
//! `RZ(π/2)·RY(φ/2)·CNOT·RY(-φ/2)·CNOT·RZ(-π/2)` on the target, so its weight
//! enters through two primitive rotations with coefficients `±1/2`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::statevector::{Axis, Gate, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotOrigin {
    Input,
    Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamSlot {
    pub origin: SlotOrigin,
    pub index: usize,
}

impl ParamSlot {
    pub fn input(index: usize) -> Self {
        ParamSlot {
            origin: SlotOrigin::Input,
            index,
        }
    }

    pub fn weight(index: usize) -> Self {
        ParamSlot {
            origin: SlotOrigin::Weight,
            index,
        }
    }
}

impl fmt::Display for ParamSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            SlotOrigin::Input => write!(f, "x[{}]", self.index),
            SlotOrigin::Weight => write!(f, "w[{}]", self.index),
        }
    }
}

/// One template operation. Parameterized rotations have angle `coeff · slot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemplateOp {
    Fixed(Gate),
    Param {
        axis: Axis,
        target: usize,
        slot: ParamSlot,
        coeff: f64,
    },
}

impl TemplateOp {
    fn rotation(axis: Axis, target: usize, slot: ParamSlot) -> Self {
        TemplateOp::Param {
            axis,
            target,
            slot,
            coeff: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitTemplate {
    n_qubits: usize,
    ops: Vec<TemplateOp>,
    n_input_slots: usize,
    n_weight_slots: usize,
}

impl CircuitTemplate {
    /// Validates gate indices and that every declared slot is read at least once.
    pub fn new(
        n_qubits: usize,
        ops: Vec<TemplateOp>,
        n_input_slots: usize,
        n_weight_slots: usize,
    ) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        let mut input_seen = vec![false; n_input_slots];
        let mut weight_seen = vec![false; n_weight_slots];
        for op in &ops {
            match *op {
                TemplateOp::Fixed(gate) => gate.validate(n_qubits)?,
                TemplateOp::Param {
                    axis,
                    target,
                    slot,
                    coeff,
                } => {
                    Gate::rotation(axis, target, 0.0).validate(n_qubits)?;
                    if !coeff.is_finite() || coeff == 0.0 {
                        return Err(Error::Config(format!(
                            "slot {slot} has unusable coefficient {coeff}"
                        )));
                    }
                    let seen = match slot.origin {
                        SlotOrigin::Input => &mut input_seen,
                        SlotOrigin::Weight => &mut weight_seen,
                    };
                    match seen.get_mut(slot.index) {
                        Some(flag) => *flag = true,
                        None => {
                            return Err(Error::Slot(format!("slot {slot} exceeds declared count")))
                        }
                    }
                }
            }
        }
        if let Some(i) = input_seen.iter().position(|s| !s) {
            return Err(Error::Slot(format!("input slot {i} is never read")));
        }
        if let Some(i) = weight_seen.iter().position(|s| !s) {
            return Err(Error::Slot(format!("weight slot {i} is never read")));
        }
        Ok(CircuitTemplate {
            n_qubits,
            ops,
            n_input_slots,
            n_weight_slots,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[TemplateOp] {
        &self.ops
    }

    pub fn n_input_slots(&self) -> usize {
        self.n_input_slots
    }

    pub fn n_weight_slots(&self) -> usize {
        self.n_weight_slots
    }

    /// Number of parameterized rotation occurrences (shared slots counted once
    /// per occurrence).
    pub fn n_param_occurrences(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, TemplateOp::Param { .. }))
            .count()
    }

    /// Positions and coefficients of every occurrence of `slot`.
    pub fn occurrences(&self, slot: ParamSlot) -> Vec<(usize, f64)> {
        self.ops
            .iter()
            .enumerate()
            .filter_map(|(i, op)| match *op {
                TemplateOp::Param { slot: s, coeff, .. } if s == slot => Some((i, coeff)),
                _ => None,
            })
            .collect()
    }

    pub fn check_slot(&self, slot: ParamSlot) -> Result<()> {
        let count = match slot.origin {
            SlotOrigin::Input => self.n_input_slots,
            SlotOrigin::Weight => self.n_weight_slots,
        };
        if slot.index >= count {
            return Err(Error::Slot(format!(
                "{slot} out of range ({count} declared)"
            )));
        }
        Ok(())
    }

    /// Resolves every angle against concrete input and weight values.
    pub fn bind(&self, inputs: &[f64], weights: &[f64]) -> Result<Vec<Gate>> {
        if inputs.len() != self.n_input_slots {
            return Err(Error::Binding(format!(
                "expected {} inputs, got {}",
                self.n_input_slots,
                inputs.len()
            )));
        }
        if weights.len() != self.n_weight_slots {
            return Err(Error::Binding(format!(
                "expected {} weights, got {}",
                self.n_weight_slots,
                weights.len()
            )));
        }
        Ok(self
            .ops
            .iter()
            .map(|op| bind_op(op, inputs, weights))
            .collect())
    }

    /// This template followed by `next` on the same register. Slots of `next`
    /// are renumbered after this template's slots of the same origin.
    pub fn then(&self, next: &CircuitTemplate) -> Result<CircuitTemplate> {
        if next.n_qubits != self.n_qubits {
            return Err(Error::Config(format!(
                "cannot compose {}-qubit and {}-qubit templates",
                self.n_qubits, next.n_qubits
            )));
        }
        let mut ops = self.ops.clone();
        ops.extend(next.ops.iter().map(|op| match *op {
            TemplateOp::Param {
                axis,
                target,
                slot,
                coeff,
            } => {
                let offset = match slot.origin {
                    SlotOrigin::Input => self.n_input_slots,
                    SlotOrigin::Weight => self.n_weight_slots,
                };
                TemplateOp::Param {
                    axis,
                    target,
                    slot: ParamSlot {
                        origin: slot.origin,
                        index: slot.index + offset,
                    },
                    coeff,
                }
            }
            fixed => fixed,
        }));
        CircuitTemplate::new(
            self.n_qubits,
            ops,
            self.n_input_slots + next.n_input_slots,
            self.n_weight_slots + next.n_weight_slots,
        )
    }
}

pub(crate) fn bind_op(op: &TemplateOp, inputs: &[f64], weights: &[f64]) -> Gate {
    match *op {
        TemplateOp::Fixed(gate) => gate,
        TemplateOp::Param {
            axis,
            target,
            slot,
            coeff,
        } => {
            let value = match slot.origin {
                SlotOrigin::Input => inputs[slot.index],
                SlotOrigin::Weight => weights[slot.index],
            };
            Gate::rotation(axis, target, coeff * value)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnsatzKind {
    Sim1,
    Sim2,
    Sim9,
    Sim14,
    Sim15,
    QaoaHeuristic,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 6] = [
        AnsatzKind::Sim1,
        AnsatzKind::Sim2,
        AnsatzKind::Sim9,
        AnsatzKind::Sim14,
        AnsatzKind::Sim15,
        AnsatzKind::QaoaHeuristic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Sim1 => "sim1",
            AnsatzKind::Sim2 => "sim2",
            AnsatzKind::Sim9 => "sim9",
            AnsatzKind::Sim14 => "sim14",
            AnsatzKind::Sim15 => "sim15",
            AnsatzKind::QaoaHeuristic => "qaoa",
        }
    }

    fn min_qubits(self) -> usize {
        match self {
            AnsatzKind::Sim1 => 1,
            _ => 2,
        }
    }

    fn weights_per_layer(self, n: usize) -> usize {
        match self {
            AnsatzKind::Sim1 | AnsatzKind::Sim2 | AnsatzKind::Sim15 => 2 * n,
            AnsatzKind::Sim9 => n,
            AnsatzKind::Sim14 => 4 * n,
            AnsatzKind::QaoaHeuristic => 2 * n - 1,
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnsatzKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown ansatz {s:?} (expected sim1, sim2, sim9, sim14, sim15 or qaoa)"
                ))
            })
    }
}

/// An ansatz family repeated `layers` times with independent weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnsatzPreset {
    pub kind: AnsatzKind,
    pub layers: usize,
}

impl AnsatzPreset {
    pub fn new(kind: AnsatzKind, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::Config("ansatz needs at least one layer".into()));
        }
        Ok(AnsatzPreset { kind, layers })
    }
}

impl fmt::Display for AnsatzPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-L{}", self.kind, self.layers)
    }
}

/// Angle encoder: `RY(x_i)` on qubit `i`.
pub fn build_encoder(n_qubits: usize) -> Result<CircuitTemplate> {
    let ops = (0..n_qubits)
        .map(|q| TemplateOp::rotation(Axis::Y, q, ParamSlot::input(q)))
        .collect();
    CircuitTemplate::new(n_qubits, ops, n_qubits, 0)
}

pub fn weight_count(preset: AnsatzPreset, n_qubits: usize) -> Result<usize> {
    check_preset(preset, n_qubits)?;
    Ok(preset.layers * preset.kind.weights_per_layer(n_qubits))
}

fn check_preset(preset: AnsatzPreset, n_qubits: usize) -> Result<()> {
    if preset.layers == 0 {
        return Err(Error::Config("ansatz needs at least one layer".into()));
    }
    if n_qubits < preset.kind.min_qubits() || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "ansatz {} does not support {n_qubits} qubits",
            preset.kind
        )));
    }
    Ok(())
}

struct OpBuilder {
    ops: Vec<TemplateOp>,
    next_weight: usize,
}

impl OpBuilder {
    fn rotation(&mut self, axis: Axis, target: usize) {
        let slot = ParamSlot::weight(self.next_weight);
        self.next_weight += 1;
        self.ops.push(TemplateOp::rotation(axis, target, slot));
    }

    fn fixed(&mut self, gate: Gate) {
        self.ops.push(TemplateOp::Fixed(gate));
    }

    fn cnot(&mut self, control: usize, target: usize) {
        self.fixed(Gate::Cnot { control, target });
    }

    fn crx(&mut self, control: usize, target: usize) {
        let slot = ParamSlot::weight(self.next_weight);
        self.next_weight += 1;
        let half = |coeff| TemplateOp::Param {
            axis: Axis::Y,
            target,
            slot,
            coeff,
        };
        self.fixed(Gate::Rz(target, FRAC_PI_2));
        self.ops.push(half(0.5));
        self.cnot(control, target);
        self.ops.push(half(-0.5));
        self.cnot(control, target);
        self.fixed(Gate::Rz(target, -FRAC_PI_2));
    }
}

pub fn build_ansatz(preset: AnsatzPreset, n_qubits: usize) -> Result<CircuitTemplate> {
    check_preset(preset, n_qubits)?;
    let n = n_qubits;
    let mut b = OpBuilder {
        ops: Vec::new(),
        next_weight: 0,
    };
    // ring orders shared by sim14/sim15
    let forward_ring: Vec<(usize, usize)> = (0..n).rev().map(|i| (i, (i + 1) % n)).collect();
    let backward_ring: Vec<(usize, usize)> = std::iter::once(n - 1)
        .chain(0..n - 1)
        .map(|i| (i, (i + n - 1) % n))
        .collect();

    for _ in 0..preset.layers {
        match preset.kind {
            AnsatzKind::Sim1 | AnsatzKind::Sim2 => {
                (0..n).for_each(|q| b.rotation(Axis::X, q));
                (0..n).for_each(|q| b.rotation(Axis::Z, q));
                if preset.kind == AnsatzKind::Sim2 {
                    (1..n).rev().for_each(|i| b.cnot(i, i - 1));
                }
            }
            AnsatzKind::Sim9 => {
                (0..n).for_each(|q| b.fixed(Gate::H(q)));
                (1..n).rev().for_each(|i| {
                    b.fixed(Gate::Cz {
                        control: i,
                        target: i - 1,
                    })
                });
                (0..n).for_each(|q| b.rotation(Axis::X, q));
            }
            AnsatzKind::Sim14 | AnsatzKind::Sim15 => {
                let controlled_rx = preset.kind == AnsatzKind::Sim14;
                for ring in [&forward_ring, &backward_ring] {
                    (0..n).for_each(|q| b.rotation(Axis::Y, q));
                    for &(control, target) in ring.iter() {
                        if controlled_rx {
                            b.crx(control, target);
                        } else {
                            b.cnot(control, target);
                        }
                    }
                }
            }
            AnsatzKind::QaoaHeuristic => {
                for i in 0..n - 1 {
                    b.cnot(i, i + 1);
                    b.rotation(Axis::Z, i + 1);
                    b.cnot(i, i + 1);
                }
                (0..n).for_each(|q| b.rotation(Axis::X, q));
            }
        }
    }
    let n_weights = b.next_weight;
    debug_assert_eq!(n_weights, weight_count(preset, n)?);
    CircuitTemplate::new(n, b.ops, 0, n_weights)
}

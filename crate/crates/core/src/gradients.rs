//! Parameter-shift differentiation of circuit expectation values.
//!
//! Every parameterized gate is a primitive rotation `exp(-i φ A / 2)`, so
//! `dE/dφ = [E(φ + π/2) - E(φ - π/2)] / 2` holds exactly. A slot read by
//! several gates (angle `c·θ` at each) is differentiated occurrence by
//! occurrence and the results are summed with their coefficients `c`.
//!
//! Input slots are differentiated exactly like weights; this is what allows a
//! QFE layer to pass gradients to the layer below it.

use std::f64::consts::FRAC_PI_2;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::circuits::{CircuitTemplate, ParamSlot, SlotOrigin, TemplateOp};
use crate::error::{Error, Result};
use crate::statevector::{Gate, Kernel, Observable, Statevector};

/// Counts full circuit simulations (one prepared state, measured once).
#[derive(Debug, Default)]
pub struct SimCounter(AtomicU64);

impl SimCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Value and full gradient of one expectation `⟨H⟩(inputs, weights)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGradient {
    pub value: f64,
    pub d_inputs: Vec<f64>,
    pub d_weights: Vec<f64>,
}

impl PatchGradient {
    fn zeros(n_inputs: usize, n_weights: usize) -> Self {
        PatchGradient {
            value: 0.0,
            d_inputs: vec![0.0; n_inputs],
            d_weights: vec![0.0; n_weights],
        }
    }

    fn slot_mut(&mut self, slot: ParamSlot) -> &mut f64 {
        match slot.origin {
            SlotOrigin::Input => &mut self.d_inputs[slot.index],
            SlotOrigin::Weight => &mut self.d_weights[slot.index],
        }
    }
}

fn check_observable(template: &CircuitTemplate, obs: &Observable) -> Result<()> {
    match obs.max_qubit() {
        Some(q) if q >= template.n_qubits() => Err(Error::Index {
            index: q,
            n_qubits: template.n_qubits(),
        }),
        _ => Ok(()),
    }
}

fn simulate(n_qubits: usize, gates: &[Gate], counter: &SimCounter) -> Result<Statevector> {
    let mut state = Statevector::zero(n_qubits)?;
    for gate in gates {
        state.apply_unchecked(gate);
    }
    counter.add(1);
    Ok(state)
}

/// `⟨obs⟩` of the bound template (one simulation).
pub fn expectation(
    template: &CircuitTemplate,
    inputs: &[f64],
    weights: &[f64],
    obs: &Observable,
    counter: &SimCounter,
) -> Result<f64> {
    check_observable(template, obs)?;
    let gates = template.bind(inputs, weights)?;
    let state = simulate(template.n_qubits(), &gates, counter)?;
    Ok(state.expectation_unchecked(obs))
}

/// Expectations of several observables from a single simulation.
pub fn expectations(
    template: &CircuitTemplate,
    inputs: &[f64],
    weights: &[f64],
    observables: &[Observable],
    counter: &SimCounter,
) -> Result<Vec<f64>> {
    for obs in observables {
        check_observable(template, obs)?;
    }
    let gates = template.bind(inputs, weights)?;
    let state = simulate(template.n_qubits(), &gates, counter)?;
    Ok(observables
        .iter()
        .map(|obs| state.expectation_unchecked(obs))
        .collect())
}

/// Expectation with the value of `slot` displaced by `shift`, which moves
/// every gate reading that slot at once.
pub fn shifted_expectation(
    template: &CircuitTemplate,
    inputs: &[f64],
    weights: &[f64],
    slot: ParamSlot,
    shift: f64,
    obs: &Observable,
    counter: &SimCounter,
) -> Result<f64> {
    template.check_slot(slot)?;
    if !shift.is_finite() {
        return Err(Error::Slot(format!("non-finite shift {shift}")));
    }
    let mut inputs = inputs.to_vec();
    let mut weights = weights.to_vec();
    match slot.origin {
        SlotOrigin::Input => {
            if let Some(v) = inputs.get_mut(slot.index) {
                *v += shift;
            }
        }
        SlotOrigin::Weight => {
            if let Some(v) = weights.get_mut(slot.index) {
                *v += shift;
            }
        }
    }
    expectation(template, &inputs, &weights, obs, counter)
}

/// `d⟨obs⟩/d(slot)` by the two-term shift rule applied per occurrence.
///
/// Costs two simulations per occurrence of the slot.
pub fn slot_derivative(
    template: &CircuitTemplate,
    inputs: &[f64],
    weights: &[f64],
    slot: ParamSlot,
    obs: &Observable,
    counter: &SimCounter,
) -> Result<f64> {
    template.check_slot(slot)?;
    check_observable(template, obs)?;
    let gates = template.bind(inputs, weights)?;
    let mut derivative = 0.0;
    for (position, coeff) in template.occurrences(slot) {
        let gate = gates[position];
        let (Some(axis), Some(angle)) = (gate.axis(), gate.angle()) else {
            return Err(Error::UnsupportedGate(format!(
                "{slot} drives non-rotation gate {gate}"
            )));
        };
        let mut shifted = gates.clone();
        shifted[position] = Gate::rotation(axis, gate.target(), angle + FRAC_PI_2);
        let plus = simulate(template.n_qubits(), &shifted, counter)?.expectation_unchecked(obs);
        shifted[position] = Gate::rotation(axis, gate.target(), angle - FRAC_PI_2);
        let minus = simulate(template.n_qubits(), &shifted, counter)?.expectation_unchecked(obs);
        derivative += coeff * (plus - minus) / 2.0;
    }
    Ok(derivative)
}

/// Value and gradient (inputs and weights) of `⟨obs⟩` for the circuit
/// `encoder` followed by `ansatz`.
///
/// Uses exactly `2·(parameter occurrences) + 1` simulations, which is
/// `2·(n_inputs + n_weights) + 1` for templates without shared slots.
pub fn patch_gradient(
    encoder: &CircuitTemplate,
    ansatz: &CircuitTemplate,
    inputs: &[f64],
    weights: &[f64],
    obs: &Observable,
    counter: &SimCounter,
) -> Result<PatchGradient> {
    let circuit = encoder.then(ansatz)?;
    let mut grads = shift_sweep(
        &circuit,
        inputs,
        weights,
        std::slice::from_ref(obs),
        counter,
    )?;
    Ok(grads.pop().expect("one observable in, one gradient out"))
}

/// Shift-rule gradients of several observables on one composed template.
///
/// All shifted circuits share the simulated prefix before the shifted gate,
/// so only the suffix is re-simulated; each shifted state is measured against
/// every observable. Simulation count is `2·occurrences + 1` regardless of the
/// number of observables.
pub fn shift_sweep(
    template: &CircuitTemplate,
    inputs: &[f64],
    weights: &[f64],
    observables: &[Observable],
    counter: &SimCounter,
) -> Result<Vec<PatchGradient>> {
    for obs in observables {
        check_observable(template, obs)?;
    }
    let gates = template.bind(inputs, weights)?;
    let kernels: Vec<Kernel> = gates.iter().map(Kernel::from).collect();
    let n_qubits = template.n_qubits();
    let mut grads = vec![
        PatchGradient::zeros(template.n_input_slots(), template.n_weight_slots());
        observables.len()
    ];
    let mut prefix = Statevector::zero(n_qubits)?;
    let mut scratch = prefix.clone();
    let mut plus = vec![0.0; observables.len()];

    for (k, op) in template.ops().iter().enumerate() {
        if let TemplateOp::Param {
            axis,
            target,
            slot,
            coeff,
        } = *op
        {
            let angle = gates[k]
                .angle()
                .expect("parameterized op binds to a rotation");
            for (sign, shift) in [(1.0, FRAC_PI_2), (-1.0, -FRAC_PI_2)] {
                scratch.clone_from(&prefix);
                scratch.apply_unchecked(&Gate::rotation(axis, target, angle + shift));
                for kernel in &kernels[k + 1..] {
                    scratch.apply_kernel(kernel);
                }
                counter.add(1);
                for (o, obs) in observables.iter().enumerate() {
                    let e = scratch.expectation_unchecked(obs);
                    if sign > 0.0 {
                        plus[o] = e;
                    } else {
                        *grads[o].slot_mut(slot) += coeff * (plus[o] - e) / 2.0;
                    }
                }
            }
        }
        prefix.apply_kernel(&kernels[k]);
    }
    counter.add(1);
    for (grad, obs) in grads.iter_mut().zip(observables) {
        grad.value = prefix.expectation_unchecked(obs);
    }
    Ok(grads)
}

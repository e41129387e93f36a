//! Exact dense statevector simulation.
//!
//! Qubit 0 is the least-significant bit of the amplitude index, so the basis
//! state `|q1 q0⟩ = |10⟩` (qubit 1 set) lives at index 2.

mod gate;
mod observable;

pub use gate::{Axis, Gate};
pub use observable::{Observable, Pauli, PauliTerm};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const MAX_QUBITS: usize = 16;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    /// Wraps explicit amplitudes. The vector must have power-of-two length
    /// and unit norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_size(n_qubits)?;
        let state = Statevector { n_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Shape(format!("amplitudes have squared norm {norm}")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Consuming form of [`Statevector::apply`].
    pub fn apply_gate(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for gate in gates {
            self.apply(gate)?;
        }
        Ok(())
    }

    /// Gate application without index validation. Callers must have checked
    /// the gate against this register (templates do so once at construction).
    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        self.apply_kernel(&Kernel::from(gate));
    }

    pub(crate) fn apply_kernel(&mut self, kernel: &Kernel) {
        match *kernel {
            Kernel::H(q) => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                for_each_pair(&mut self.amps, q, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = (x + y) * r;
                    *b = (x - y) * r;
                });
            }
            Kernel::Rx { q, c, s } => {
                for_each_pair(&mut self.amps, q, |a, b| {
                    let (x, y) = (*a, *b);
                    // -i·s·y = s·(y.im, -y.re)
                    *a = C64::new(c * x.re + s * y.im, c * x.im - s * y.re);
                    *b = C64::new(c * y.re + s * x.im, c * y.im - s * x.re);
                });
            }
            Kernel::Ry { q, c, s } => {
                for_each_pair(&mut self.amps, q, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = x * c - y * s;
                    *b = x * s + y * c;
                });
            }
            Kernel::Rz { q, c, s } => {
                let lo = C64::new(c, -s);
                let hi = C64::new(c, s);
                for_each_pair(&mut self.amps, q, |a, b| {
                    *a *= lo;
                    *b *= hi;
                });
            }
            Kernel::Cnot { control, target } => {
                let (cbit, tbit) = (1usize << control, 1usize << target);
                for k in 0..self.amps.len() >> 2 {
                    let i = insert_zero_bits(k, control, target) | cbit;
                    self.amps.swap(i, i | tbit);
                }
            }
            Kernel::Cz { control, target } => {
                let both = (1usize << control) | (1usize << target);
                for k in 0..self.amps.len() >> 2 {
                    let i = insert_zero_bits(k, control, target) | both;
                    self.amps[i] = -self.amps[i];
                }
            }
        }
    }

    /// `Σ_k c_k ⟨ψ|P_k|ψ⟩`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        if let Some(q) = obs.max_qubit() {
            if q >= self.n_qubits {
                return Err(Error::Index {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        Ok(self.expectation_unchecked(obs))
    }

    pub(crate) fn expectation_unchecked(&self, obs: &Observable) -> f64 {
        let mut total = 0.0;
        for term in obs.terms() {
            let (re, im) = self.pauli_expectation(term);
            // Hermitian P on a normalized state gives a real value
            assert!(
                im.abs() < NORM_TOLERANCE * (1.0 + re.abs()),
                "imaginary residue {im} in Pauli expectation"
            );
            total += term.coeff() * re;
        }
        total
    }

    fn pauli_expectation(&self, term: &PauliTerm) -> (f64, f64) {
        let x_mask = term.x_mask();
        let sign_mask = term.sign_mask();
        if x_mask == 0 {
            let mut acc = 0.0;
            for (i, a) in self.amps.iter().enumerate() {
                let p = a.norm_sqr();
                if (i & sign_mask).count_ones() & 1 == 0 {
                    acc += p;
                } else {
                    acc -= p;
                }
            }
            return (acc, 0.0);
        }
        // P|i⟩ = i^{n_y} (-1)^{popcount(i & sign_mask)} |i ^ x_mask⟩
        let mut acc = C64::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            let partner = self.amps[i ^ x_mask].conj() * a;
            if (i & sign_mask).count_ones() & 1 == 0 {
                acc += partner;
            } else {
                acc -= partner;
            }
        }
        let acc = match term.n_y() % 4 {
            0 => acc,
            1 => C64::new(-acc.im, acc.re),
            2 => -acc,
            _ => C64::new(acc.im, -acc.re),
        };
        (acc.re, acc.im)
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Size(n_qubits));
    }
    Ok(())
}

/// Visits every amplitude pair `(|…0_q…⟩, |…1_q…⟩)` differing only in qubit `q`.
#[inline(always)]
fn for_each_pair(amps: &mut [C64], q: usize, mut f: impl FnMut(&mut C64, &mut C64)) {
    let stride = 1usize << q;
    for chunk in amps.chunks_exact_mut(stride << 1) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            f(a, b);
        }
    }
}

/// A gate with its half-angle sine and cosine precomputed, for circuits
/// that are replayed many times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kernel {
    H(usize),
    Rx { q: usize, c: f64, s: f64 },
    Ry { q: usize, c: f64, s: f64 },
    Rz { q: usize, c: f64, s: f64 },
    Cnot { control: usize, target: usize },
    Cz { control: usize, target: usize },
}

impl From<&Gate> for Kernel {
    fn from(gate: &Gate) -> Self {
        let half = |theta: f64| (theta * 0.5).sin_cos();
        match *gate {
            Gate::H(q) => Kernel::H(q),
            Gate::Rx(q, theta) => {
                let (s, c) = half(theta);
                Kernel::Rx { q, c, s }
            }
            Gate::Ry(q, theta) => {
                let (s, c) = half(theta);
                Kernel::Ry { q, c, s }
            }
            Gate::Rz(q, theta) => {
                let (s, c) = half(theta);
                Kernel::Rz { q, c, s }
            }
            Gate::Cnot { control, target } => Kernel::Cnot { control, target },
            Gate::Cz { control, target } => Kernel::Cz { control, target },
        }
    }
}

/// Spreads the bits of `k` around two zero bits at positions `a` and `b`.
#[inline]
fn insert_zero_bits(k: usize, a: usize, b: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let k = ((k >> lo) << (lo + 1)) | (k & ((1 << lo) - 1));
    ((k >> hi) << (hi + 1)) | (k & ((1 << hi) - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn zero_state_layout() {
        let s = Statevector::zero(1).unwrap();
        assert_eq!(s.amplitudes(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let s = Statevector::zero(2).unwrap();
        assert_eq!(s.amplitudes().len(), 4);
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        let s = Statevector::zero(9).unwrap();
        assert_eq!(s.amplitudes().len(), 512);
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm_sqr() == 0.0));
    }

    #[test]
    fn zero_state_size_errors() {
        assert!(matches!(Statevector::zero(0), Err(Error::Size(0))));
        assert!(matches!(Statevector::zero(17), Err(Error::Size(17))));
        assert!(Statevector::zero(16).is_ok());
    }

    #[test]
    fn hadamard_on_zero() {
        let s = Statevector::zero(1)
            .unwrap()
            .apply_gate(&Gate::H(0))
            .unwrap();
        assert!(close(s.amplitudes()[0], FRAC_1_SQRT_2, 0.0));
        assert!(close(s.amplitudes()[1], FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn ry_pi_flips_with_positive_amplitude() {
        let s = Statevector::zero(1)
            .unwrap()
            .apply_gate(&Gate::Ry(0, PI))
            .unwrap();
        assert!(close(s.amplitudes()[0], 0.0, 0.0));
        assert!(close(s.amplitudes()[1], 1.0, 0.0));
    }

    #[test]
    fn cnot_on_10_gives_11() {
        // |10⟩ in "qubit0 qubit1" reading: qubit 0 set → index 1
        let s = Statevector::zero(2)
            .unwrap()
            .apply_gate(&Gate::Ry(0, PI))
            .unwrap()
            .apply_gate(&Gate::Cnot {
                control: 0,
                target: 1,
            })
            .unwrap();
        assert!(close(s.amplitudes()[3], 1.0, 0.0));
        // control on qubit 1 (clear) leaves the state untouched
        let t = Statevector::zero(2)
            .unwrap()
            .apply_gate(&Gate::Ry(0, PI))
            .unwrap()
            .apply_gate(&Gate::Cnot {
                control: 1,
                target: 0,
            })
            .unwrap();
        assert!(close(t.amplitudes()[1], 1.0, 0.0));
    }

    #[test]
    fn gate_index_errors() {
        let mut s = Statevector::zero(2).unwrap();
        assert!(matches!(
            s.apply(&Gate::H(2)),
            Err(Error::Index { index: 2, .. })
        ));
        assert!(matches!(
            s.apply(&Gate::Cnot {
                control: 5,
                target: 0
            }),
            Err(Error::Index { index: 5, .. })
        ));
        assert!(matches!(
            s.apply(&Gate::Cz {
                control: 1,
                target: 1
            }),
            Err(Error::InvalidGate(_))
        ));
        assert!(s.apply(&Gate::Rx(0, f64::NAN)).is_err());
    }

    #[test]
    fn z_expectations() {
        let z0 = Observable::pauli_z(0);
        let s = Statevector::zero(1).unwrap();
        assert_eq!(s.expectation(&z0).unwrap(), 1.0);

        // 2x2 oracle: RY(θ)|0⟩ = (cos θ/2, sin θ/2), ⟨Z⟩ = cos²−sin² = cos θ
        let theta = PI / 3.0;
        let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let oracle = c * c - sn * sn;
        let s = s.apply_gate(&Gate::Ry(0, theta)).unwrap();
        let e = s.expectation(&z0).unwrap();
        assert!((e - oracle).abs() < 1e-12);
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bell_state_parity() {
        let r = FRAC_1_SQRT_2;
        let zero = C64::new(0.0, 0.0);
        let bell =
            Statevector::from_amplitudes(vec![C64::new(r, 0.0), zero, zero, C64::new(r, 0.0)])
                .unwrap();
        let zz: Observable = "Z0Z1".parse().unwrap();
        assert!((bell.expectation(&zz).unwrap() - 1.0).abs() < 1e-12);
        let xx: Observable = "X0X1".parse().unwrap();
        assert!((bell.expectation(&xx).unwrap() - 1.0).abs() < 1e-12);
        let yy: Observable = "Y0Y1".parse().unwrap();
        assert!((bell.expectation(&yy).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_index_error_and_constant_term() {
        let s = Statevector::zero(2).unwrap();
        let far: Observable = "Z4".parse().unwrap();
        assert!(matches!(
            s.expectation(&far),
            Err(Error::Index { index: 4, .. })
        ));
        let c = Observable::identity(0.75).unwrap();
        assert_eq!(s.expectation(&c).unwrap(), 0.75);
    }

    #[test]
    fn y_expectation_on_rx_state() {
        // RX(θ)|0⟩ has ⟨Y⟩ = −sin θ
        let theta = 0.7;
        let s = Statevector::zero(1)
            .unwrap()
            .apply_gate(&Gate::Rx(0, theta))
            .unwrap();
        let y: Observable = "Y0".parse().unwrap();
        assert!((s.expectation(&y).unwrap() + theta.sin()).abs() < 1e-12);
    }
}

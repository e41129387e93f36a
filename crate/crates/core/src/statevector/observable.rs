use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// One weighted Pauli string. Factors are kept sorted by qubit, one per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    coeff: f64,
    factors: Vec<(usize, Pauli)>,
    // bit masks: x_mask flips (X or Y), sign_mask picks up (-1)^bit (Y or Z)
    x_mask: usize,
    sign_mask: usize,
    n_y: u32,
}

impl PauliTerm {
    pub fn new(coeff: f64, mut factors: Vec<(usize, Pauli)>) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(Error::Observable(format!("non-finite coefficient {coeff}")));
        }
        factors.sort_by_key(|&(q, _)| q);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Observable(
                "a Pauli string acts twice on the same qubit".into(),
            ));
        }
        if let Some(&(q, _)) = factors.last() {
            if q >= usize::BITS as usize {
                return Err(Error::Observable(format!("qubit index {q} too large")));
            }
        }
        let mut x_mask = 0;
        let mut sign_mask = 0;
        let mut n_y = 0;
        for &(q, p) in &factors {
            let bit = 1usize << q;
            match p {
                Pauli::X => x_mask |= bit,
                Pauli::Y => {
                    x_mask |= bit;
                    sign_mask |= bit;
                    n_y += 1;
                }
                Pauli::Z => sign_mask |= bit,
            }
        }
        Ok(PauliTerm {
            coeff,
            factors,
            x_mask,
            sign_mask,
            n_y,
        })
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub(crate) fn x_mask(&self) -> usize {
        self.x_mask
    }

    pub(crate) fn sign_mask(&self) -> usize {
        self.sign_mask
    }

    pub(crate) fn n_y(&self) -> u32 {
        self.n_y
    }
}

/// Real-weighted sum of Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    terms: Vec<PauliTerm>,
}

impl Observable {
    pub fn new(terms: Vec<PauliTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Observable("observable has no terms".into()));
        }
        Ok(Observable { terms })
    }

    pub fn single(coeff: f64, factors: Vec<(usize, Pauli)>) -> Result<Self> {
        Observable::new(vec![PauliTerm::new(coeff, factors)?])
    }

    /// `Z` on one qubit, the default QFE readout.
    pub fn pauli_z(qubit: usize) -> Self {
        Observable::single(1.0, vec![(qubit, Pauli::Z)]).expect("valid single-qubit Z")
    }

    /// A constant `c·I`.
    pub fn identity(coeff: f64) -> Result<Self> {
        Observable::single(coeff, Vec::new())
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Highest qubit index any term touches.
    pub fn max_qubit(&self) -> Option<usize> {
        self.terms
            .iter()
            .filter_map(|t| t.factors.last().map(|&(q, _)| q))
            .max()
    }

    /// `Σ|c_k|`, an upper bound on `|⟨O⟩|` for normalized states.
    pub fn coefficient_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// Sum of two observables (terms concatenated).
    pub fn sum(&self, other: &Observable) -> Observable {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Observable { terms }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            let negative = term.coeff.is_sign_negative();
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let magnitude = term.coeff.abs();
            if term.factors.is_empty() {
                write!(f, "{magnitude:?}")?;
                continue;
            }
            if magnitude != 1.0 {
                write!(f, "{magnitude:?}*")?;
            }
            for (q, p) in &term.factors {
                write!(f, "{}{}", p.letter(), q)?;
            }
        }
        Ok(())
    }
}

/// Parses expressions such as `Z0`, `Z0Z1`, `0.5*X2 Y3 - 0.25*Z0` or `1.5`.
///
/// Terms are separated by `+`/`-`; a term is an optional `coeff*` prefix
/// followed by Pauli factors (`X`, `Y`, `Z` plus qubit index), `I`, or a bare
/// number for a constant term.
impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Observable(format!("{msg} in {s:?}"));
        let chars: Vec<char> = s.chars().collect();
        let mut pos = 0;
        let mut terms = Vec::new();
        let skip_ws = |pos: &mut usize| {
            while *pos < chars.len() && chars[*pos].is_whitespace() {
                *pos += 1;
            }
        };

        loop {
            skip_ws(&mut pos);
            let mut sign = 1.0;
            if terms.is_empty() {
                if pos < chars.len() && (chars[pos] == '+' || chars[pos] == '-') {
                    if chars[pos] == '-' {
                        sign = -1.0;
                    }
                    pos += 1;
                }
            } else {
                match chars.get(pos) {
                    None => break,
                    Some('+') => pos += 1,
                    Some('-') => {
                        sign = -1.0;
                        pos += 1;
                    }
                    Some(_) => return Err(bad("expected '+' or '-' between terms")),
                }
            }
            skip_ws(&mut pos);

            // optional numeric coefficient
            let mut coeff = 1.0;
            let mut saw_number = false;
            if pos < chars.len() && (chars[pos].is_ascii_digit() || chars[pos] == '.') {
                let start = pos;
                while pos < chars.len()
                    && (chars[pos].is_ascii_digit()
                        || chars[pos] == '.'
                        || chars[pos] == 'e'
                        || chars[pos] == 'E'
                        || ((chars[pos] == '-' || chars[pos] == '+')
                            && pos > start
                            && matches!(chars[pos - 1], 'e' | 'E')))
                {
                    pos += 1;
                }
                let text: String = chars[start..pos].iter().collect();
                coeff = text
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("bad coefficient {text:?}")))?;
                saw_number = true;
                skip_ws(&mut pos);
                if pos < chars.len() && chars[pos] == '*' {
                    pos += 1;
                    skip_ws(&mut pos);
                } else {
                    terms.push(PauliTerm::new(sign * coeff, Vec::new())?);
                    continue;
                }
            }

            let mut factors = Vec::new();
            let mut saw_factor = false;
            while pos < chars.len() {
                let c = chars[pos];
                let pauli = match c {
                    'X' | 'x' => Some(Pauli::X),
                    'Y' | 'y' => Some(Pauli::Y),
                    'Z' | 'z' => Some(Pauli::Z),
                    'I' | 'i' => None,
                    _ if c.is_whitespace() => {
                        pos += 1;
                        continue;
                    }
                    _ => break,
                };
                pos += 1;
                saw_factor = true;
                let Some(pauli) = pauli else { continue };
                let start = pos;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                if start == pos {
                    return Err(bad("Pauli factor without qubit index"));
                }
                let text: String = chars[start..pos].iter().collect();
                let q = text
                    .parse::<usize>()
                    .map_err(|_| bad(&format!("bad qubit index {text:?}")))?;
                factors.push((q, pauli));
            }
            if !saw_factor {
                return Err(bad(if saw_number {
                    "expected Pauli factors after '*'"
                } else {
                    "empty term"
                }));
            }
            terms.push(PauliTerm::new(sign * coeff, factors)?);
        }
        Observable::new(terms)
    }
}

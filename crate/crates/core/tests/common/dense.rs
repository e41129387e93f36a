//! Dense `2^n × 2^n` reference unitaries built from Kronecker products.
#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C;
use qfe_core::statevector::Gate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<C>>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn eye(d: usize) -> Mat {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn matvec(a: &Mat, v: &[C]) -> Vec<C> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Tensor product with qubit `n-1` leftmost, so qubit 0 is the low bit.
pub fn embed(n: usize, factors: &dyn Fn(usize) -> Mat) -> Mat {
    let mut m = factors(n - 1);
    for q in (0..n - 1).rev() {
        m = kron(&m, &factors(q));
    }
    m
}

pub fn single(n: usize, target: usize, g: &Mat) -> Mat {
    embed(n, &|q| if q == target { g.clone() } else { eye(2) })
}

pub fn controlled(n: usize, control: usize, target: usize, g: &Mat) -> Mat {
    let p0 = vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(0.0, 0.0)],
    ];
    let p1 = vec![
        vec![c(0.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0)],
    ];
    let off = embed(n, &|q| if q == control { p0.clone() } else { eye(2) });
    let on = embed(n, &|q| {
        if q == control {
            p1.clone()
        } else if q == target {
            g.clone()
        } else {
            eye(2)
        }
    });
    add(&off, &on)
}

pub fn pauli_x() -> Mat {
    vec![
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(1.0, 0.0), c(0.0, 0.0)],
    ]
}

pub fn pauli_y() -> Mat {
    vec![
        vec![c(0.0, 0.0), c(0.0, -1.0)],
        vec![c(0.0, 1.0), c(0.0, 0.0)],
    ]
}

pub fn pauli_z() -> Mat {
    vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(-1.0, 0.0)],
    ]
}

pub fn rx(t: f64) -> Mat {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]]
}

pub fn ry(t: f64) -> Mat {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
}

pub fn rz(t: f64) -> Mat {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, -s), c(0.0, 0.0)], vec![c(0.0, 0.0), c(co, s)]]
}

pub fn unitary(n: usize, gate: &Gate) -> Mat {
    let h = vec![
        vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)],
        vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)],
    ];
    match *gate {
        Gate::H(q) => single(n, q, &h),
        Gate::Rx(q, t) => single(n, q, &rx(t)),
        Gate::Ry(q, t) => single(n, q, &ry(t)),
        Gate::Rz(q, t) => single(n, q, &rz(t)),
        Gate::Cnot { control, target } => controlled(n, control, target, &pauli_x()),
        Gate::Cz { control, target } => controlled(n, control, target, &pauli_z()),
    }
}

pub fn zero_vec(n: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

pub fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate {
    let q = rng.random_range(0..n);
    let theta = rng.random_range(-2.0 * PI..2.0 * PI);
    let pick = if n == 1 {
        rng.random_range(0..4)
    } else {
        rng.random_range(0..6)
    };
    let other = |rng: &mut ChaCha8Rng| loop {
        let t = rng.random_range(0..n);
        if t != q {
            return t;
        }
    };
    match pick {
        0 => Gate::H(q),
        1 => Gate::Rx(q, theta),
        2 => Gate::Ry(q, theta),
        3 => Gate::Rz(q, theta),
        4 => Gate::Cnot {
            control: q,
            target: other(rng),
        },
        _ => Gate::Cz {
            control: q,
            target: other(rng),
        },
    }
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

//! Truncated multimode Fock spaces and the vacuum-measurement check: an
//! unrecorded vacuum measurement before an operation that fixes the vacuum
//! changes neither the statistics nor the output of a vacuum measurement
//! after it.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{hermitian_eigenvalues, polar_unitary, ComplexMatrix};
use crate::error::{Error, Result};

pub const MAX_FOCK_DIM: usize = 10_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Number states of `n_modes` modes with at most `cutoff` photons in total,
/// ordered by total photon number; index 0 is the vacuum.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_modes: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

fn binomial(n: usize, k: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

impl FockBasis {
    pub fn new(n_modes: usize, cutoff: usize) -> Result<Self> {
        if n_modes == 0 || cutoff == 0 || cutoff > u8::MAX as usize {
            return Err(Error::Domain {
                name: "fock space",
                value: cutoff as f64,
                domain: "n_modes >= 1, 1 <= cutoff <= 255",
            });
        }
        let dim = binomial(n_modes + cutoff, cutoff);
        if dim > MAX_FOCK_DIM {
            return Err(Error::DimensionOverflow {
                dim,
                limit: MAX_FOCK_DIM,
            });
        }
        let mut states = Vec::with_capacity(dim);
        for total in 0..=cutoff {
            let mut occ = vec![0u8; n_modes];
            compositions(total, 0, &mut occ, &mut states);
        }
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self {
            n_modes,
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }
}

fn compositions(remaining: usize, mode: usize, occ: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if mode + 1 == occ.len() {
        occ[mode] = remaining as u8;
        out.push(occ.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        occ[mode] = k as u8;
        compositions(remaining - k, mode + 1, occ, out);
    }
    occ[mode] = 0;
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

/// Beam splitter between two modes: `[[cos t, -e^{-i p} sin t], [e^{i p} sin t, cos t]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixer {
    pub modes: (usize, usize),
    pub theta: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FockOpKind {
    /// Passive linear optics given by a network of beam splitters.
    NumberPreservingUnitary { mixers: Vec<Mixer> },
    /// Each mode loses photons to its own ancilla with the given transmissivity.
    LossToAncilla { transmissivities: Vec<f64> },
    /// Truncated displacement of mode 0; moves amplitude out of the vacuum.
    VacuumViolatingTest { strength: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOpSpec {
    pub n_modes: usize,
    pub cutoff: usize,
    pub kind: FockOpKind,
}

impl FockOpSpec {
    pub fn beamsplitter(theta: f64, phase: f64, cutoff: usize) -> Self {
        Self {
            n_modes: 2,
            cutoff,
            kind: FockOpKind::NumberPreservingUnitary {
                mixers: vec![Mixer {
                    modes: (0, 1),
                    theta,
                    phase,
                }],
            },
        }
    }

    pub fn uniform_loss(n_modes: usize, transmissivity: f64, cutoff: usize) -> Self {
        Self {
            n_modes,
            cutoff,
            kind: FockOpKind::LossToAncilla {
                transmissivities: vec![transmissivity; n_modes],
            },
        }
    }

    pub fn displacement(n_modes: usize, strength: f64, cutoff: usize) -> Self {
        Self {
            n_modes,
            cutoff,
            kind: FockOpKind::VacuumViolatingTest { strength },
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            FockOpKind::NumberPreservingUnitary { mixers } => {
                for m in mixers {
                    let (p, q) = m.modes;
                    if p >= self.n_modes || q >= self.n_modes || p == q {
                        return Err(Error::Shape(format!("mixer on modes ({p}, {q})")));
                    }
                    if !m.theta.is_finite() || !m.phase.is_finite() {
                        return Err(Error::Domain {
                            name: "mixer angle",
                            value: m.theta,
                            domain: "finite",
                        });
                    }
                }
            }
            FockOpKind::LossToAncilla { transmissivities } => {
                if transmissivities.len() != self.n_modes {
                    return Err(Error::Shape(format!(
                        "{} transmissivities for {} modes",
                        transmissivities.len(),
                        self.n_modes
                    )));
                }
                for &t in transmissivities {
                    crate::mathcore::probability("transmissivity", t)?;
                }
            }
            FockOpKind::VacuumViolatingTest { strength } => {
                if !strength.is_finite() {
                    return Err(Error::Domain {
                        name: "strength",
                        value: *strength,
                        domain: "finite",
                    });
                }
            }
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<FockBasis> {
        FockBasis::new(self.n_modes, self.cutoff)
    }

    /// Kraus operators of the operation on the truncated space.
    pub fn kraus_operators(&self) -> Result<Vec<ComplexMatrix>> {
        self.validate()?;
        let basis = self.basis()?;
        match &self.kind {
            FockOpKind::NumberPreservingUnitary { mixers } => {
                let w = mode_unitary(self.n_modes, mixers);
                Ok(vec![passive_unitary(&basis, &w)])
            }
            FockOpKind::LossToAncilla { transmissivities } => loss_kraus(&basis, self.cutoff, transmissivities),
            FockOpKind::VacuumViolatingTest { strength } => Ok(vec![displacement(&basis, *strength)?]),
        }
    }
}

fn mode_unitary(n: usize, mixers: &[Mixer]) -> ComplexMatrix {
    let mut w = ComplexMatrix::identity(n);
    for m in mixers {
        let (p, q) = m.modes;
        let (s, c) = m.theta.sin_cos();
        let e = Complex64::from_polar(1.0, m.phase);
        let mut b = ComplexMatrix::identity(n);
        b[(p, p)] = Complex64::new(c, 0.0);
        b[(p, q)] = -e.conj() * s;
        b[(q, p)] = e * s;
        b[(q, q)] = Complex64::new(c, 0.0);
        w = &b * &w;
    }
    w
}

/// Fock-space representation of the mode transformation `a_i^+ -> sum_j w_ji a_j^+`.
fn passive_unitary(basis: &FockBasis, w: &ComplexMatrix) -> ComplexMatrix {
    let d = basis.dim();
    let m = basis.n_modes();
    let mut out = ComplexMatrix::zeros(d, d);
    for col in 0..d {
        let input = basis.state(col);
        let mut poly: HashMap<Vec<u8>, Complex64> = HashMap::from([(vec![0u8; m], Complex64::new(1.0, 0.0))]);
        let mut norm = 1.0;
        for (i, &n_i) in input.iter().enumerate() {
            norm *= factorial(n_i);
            for _ in 0..n_i {
                let mut next: HashMap<Vec<u8>, Complex64> = HashMap::new();
                for (mono, coef) in &poly {
                    for j in 0..m {
                        let amp = w[(j, i)];
                        if amp == ZERO {
                            continue;
                        }
                        let mut k = mono.clone();
                        k[j] += 1;
                        *next.entry(k).or_insert(ZERO) += coef * amp;
                    }
                }
                poly = next;
            }
        }
        let inv = 1.0 / norm.sqrt();
        for (mono, coef) in poly {
            let row = basis.index_of(&mono).expect("photon number is preserved");
            let weight: f64 = mono.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
            out[(row, col)] += coef * weight * inv;
        }
    }
    out
}

fn loss_kraus(basis: &FockBasis, cutoff: usize, transmissivities: &[f64]) -> Result<Vec<ComplexMatrix>> {
    let m = basis.n_modes();
    let ext = FockBasis::new(2 * m, cutoff)?;
    let mixers: Vec<Mixer> = transmissivities
        .iter()
        .enumerate()
        .map(|(i, &t)| Mixer {
            modes: (i, m + i),
            theta: t.sqrt().acos(),
            phase: 0.0,
        })
        .collect();
    let u = passive_unitary(&ext, &mode_unitary(2 * m, &mixers));
    let d = basis.dim();
    let mut kraus: HashMap<Vec<u8>, ComplexMatrix> = HashMap::new();
    for col in 0..d {
        let mut occ = basis.state(col).to_vec();
        occ.resize(2 * m, 0);
        let ext_col = ext.index_of(&occ).expect("system state embeds");
        for ext_row in 0..ext.dim() {
            let amp = u[(ext_row, ext_col)];
            if amp == ZERO {
                continue;
            }
            let (sys, anc) = ext.state(ext_row).split_at(m);
            let row = basis.index_of(sys).expect("photon number is preserved");
            kraus
                .entry(anc.to_vec())
                .or_insert_with(|| ComplexMatrix::zeros(d, d))[(row, col)] += amp;
        }
    }
    let mut ops: Vec<(Vec<u8>, ComplexMatrix)> = kraus.into_iter().collect();
    ops.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ops.into_iter().map(|(_, k)| k).collect())
}

/// `exp(s (a^+ - a))` on mode 0 with the ladder operators truncated to the
/// basis, summed as a Taylor series and projected back onto the unitaries.
fn displacement(basis: &FockBasis, strength: f64) -> Result<ComplexMatrix> {
    let d = basis.dim();
    let mut gen = ComplexMatrix::zeros(d, d);
    for col in 0..d {
        let mut occ = basis.state(col).to_vec();
        let n = occ[0] as f64;
        occ[0] += 1;
        if let Some(row) = basis.index_of(&occ) {
            let amp = strength * (n + 1.0).sqrt();
            gen[(row, col)] += Complex64::new(amp, 0.0);
            gen[(col, row)] -= Complex64::new(amp, 0.0);
        }
    }
    let mut term = ComplexMatrix::identity(d);
    let mut sum = term.clone();
    for k in 1..60 {
        term = (&term * &gen).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
        if term.frobenius_norm() < 1e-18 {
            break;
        }
    }
    polar_unitary(&sum)
}

fn apply(kraus: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let d = kraus[0].rows();
    kraus.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| {
        acc.add(&(&(k * rho) * &k.adjoint()))
    })
}

fn random_density(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let data = (0..d * d)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let g = ComplexMatrix::from_vec(d, d, data).expect("square");
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale(Complex64::new(1.0 / tr, 0.0))
}

/// Block-diagonal part of `rho` with respect to `{P, I - P}`, `P = |0><0|`.
fn dephase_vacuum(rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = rho.clone();
    for k in 1..rho.rows() {
        out[(0, k)] = ZERO;
        out[(k, 0)] = ZERO;
    }
    out
}

/// Trace norm of the non-vacuum block `(I - P) a (I - P)`.
fn non_vacuum_trace_norm(a: &ComplexMatrix) -> Result<f64> {
    let d = a.rows();
    if d == 1 {
        return Ok(0.0);
    }
    let mut block = ComplexMatrix::zeros(d - 1, d - 1);
    for i in 1..d {
        for j in 1..d {
            block[(i - 1, j - 1)] = a[(i, j)];
        }
    }
    let block = block.add(&block.adjoint()).scale(Complex64::new(0.5, 0.0));
    Ok(hermitian_eigenvalues(&block)?.iter().map(|l| l.abs()).sum())
}

/// Largest deviation, over `n_states` random input states, between the
/// vacuum-measurement outcomes after the operation with and without an
/// unrecorded vacuum measurement in front of it. Compares the vacuum
/// probability and the trace distance of both (unnormalized) branches.
pub fn verify_vacuum_commutation(spec: &FockOpSpec, n_states: usize, seed: u64) -> Result<f64> {
    let kraus = spec.kraus_operators()?;
    let d = kraus[0].rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_states {
        let rho = random_density(d, &mut rng);
        let out = apply(&kraus, &rho);
        let out_dephased = apply(&kraus, &dephase_vacuum(&rho));
        let diff = out.sub(&out_dephased);
        let vacuum = diff[(0, 0)].norm();
        let rest = 0.5 * non_vacuum_trace_norm(&diff)?;
        worst = worst.max(vacuum).max(rest);
    }
    Ok(worst)
}

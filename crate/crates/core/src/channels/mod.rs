//! Receiver models as linear-optical transfer matrices and extraction of
//! the mismatch parameters `eta_Z`, `eta_X` that enter the key-rate bounds.

pub mod linalg;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mathcore::golden_section_min;
pub use linalg::{hermitian_eigen, hermitian_eigenvalues, matrix_inverse, polar_unitary, svd, ComplexMatrix, HermitianEigen, Svd};

/// Detection efficiencies of the four (basis, bit) detectors at one mode label `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencySample {
    pub t: f64,
    pub eta_z0: f64,
    pub eta_z1: f64,
    pub eta_x0: f64,
    pub eta_x1: f64,
}

impl EfficiencySample {
    fn values(&self) -> [f64; 4] {
        [self.eta_z0, self.eta_z1, self.eta_x0, self.eta_x1]
    }
}

/// Sampled efficiency curves. Values need not be normalized to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyCurve {
    samples: Vec<EfficiencySample>,
}

impl EfficiencyCurve {
    pub fn new(samples: Vec<EfficiencySample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("efficiency curve"));
        }
        for s in &samples {
            for v in s.values() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::Domain {
                        name: "efficiency",
                        value: v,
                        domain: "[0, inf)",
                    });
                }
            }
        }
        Ok(Self { samples })
    }

    /// Curve whose two bases share the same per-bit efficiencies.
    pub fn basis_independent(eta0: &[f64], eta1: &[f64]) -> Result<Self> {
        if eta0.len() != eta1.len() {
            return Err(Error::Shape("bit-0 and bit-1 curves differ in length".into()));
        }
        Self::new(
            eta0.iter()
                .zip(eta1)
                .enumerate()
                .map(|(i, (&a, &b))| EfficiencySample {
                    t: i as f64,
                    eta_z0: a,
                    eta_z1: b,
                    eta_x0: a,
                    eta_x1: b,
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[EfficiencySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// All efficiencies, any time, basis or bit.
    pub fn all_values(&self) -> Vec<f64> {
        self.samples.iter().flat_map(|s| s.values()).collect()
    }

    fn bases_agree(&self) -> std::result::Result<(), usize> {
        match self.samples.iter().position(|s| {
            (s.eta_z0 - s.eta_x0).abs() > 1e-9 || (s.eta_z1 - s.eta_x1).abs() > 1e-9
        }) {
            Some(i) => Err(i),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    /// No coupling between mode labels, identical efficiencies in both bases.
    BasisIndependent,
    /// Arbitrary coupling between mode labels, possibly basis-dependent efficiencies.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaPair {
    pub eta_z: f64,
    pub eta_x: f64,
}

impl EtaPair {
    pub fn min(&self) -> f64 {
        self.eta_z.min(self.eta_x)
    }
}

/// `min(a, b) / max(a, b)`, zero when both vanish.
fn pair_ratio(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi > 0.0 {
        a.min(b) / hi
    } else {
        0.0
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn normalized(min: f64, max: f64) -> f64 {
    if max > 0.0 {
        (min / max).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn eta_from_curves(curve: &EfficiencyCurve, mode: CurveMode) -> Result<EtaPair> {
    if curve.is_empty() {
        return Err(Error::Empty("efficiency curve"));
    }
    match mode {
        CurveMode::BasisIndependent => {
            curve.bases_agree().map_err(Error::BasisMismatch)?;
            let fold = |f: fn(&EfficiencySample) -> (f64, f64)| {
                curve
                    .samples
                    .iter()
                    .map(|s| {
                        let (a, b) = f(s);
                        pair_ratio(a, b)
                    })
                    .fold(1.0, f64::min)
            };
            Ok(EtaPair {
                eta_z: fold(|s| (s.eta_z0, s.eta_z1)),
                eta_x: fold(|s| (s.eta_x0, s.eta_x1)),
            })
        }
        CurveMode::General => {
            let (z_min, z_max) = min_max(curve.samples.iter().flat_map(|s| [s.eta_z0, s.eta_z1]));
            let (x_min, x_max) = min_max(curve.samples.iter().flat_map(|s| [s.eta_x0, s.eta_x1]));
            let max = z_max.max(x_max);
            Ok(EtaPair {
                eta_z: normalized(z_min, max),
                eta_x: normalized(x_min, max),
            })
        }
    }
}

/// Splits off the loss common to both bit values at each mode label,
/// `eta'(t) = max(eta_Z0(t), eta_Z1(t))`, leaving residual efficiencies
/// whose larger Z entry is one.
pub fn factor_common_loss(curve: &EfficiencyCurve) -> (Vec<f64>, EfficiencyCurve) {
    let mut common = Vec::with_capacity(curve.len());
    let samples = curve
        .samples
        .iter()
        .map(|s| {
            let c = s.eta_z0.max(s.eta_z1);
            common.push(c);
            let scale = |v: f64| if c > 0.0 { v / c } else { 0.0 };
            EfficiencySample {
                t: s.t,
                eta_z0: scale(s.eta_z0),
                eta_z1: scale(s.eta_z1),
                eta_x0: scale(s.eta_x0),
                eta_x1: scale(s.eta_x1),
            }
        })
        .collect();
    (common, EfficiencyCurve { samples })
}

/// Per-bit transfer matrices for a receiver that never mixes modes of
/// different logical bits.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    pub c0: ComplexMatrix,
    pub c1: ComplexMatrix,
}

impl BlockModel {
    pub fn new(c0: ComplexMatrix, c1: ComplexMatrix) -> Result<Self> {
        if !c0.is_square() || !c1.is_square() {
            return Err(Error::Shape("block matrices must be square".into()));
        }
        if c0.rows() != c1.rows() {
            return Err(Error::Shape(format!(
                "blocks are {}x{} and {}x{}",
                c0.rows(),
                c0.rows(),
                c1.rows(),
                c1.rows()
            )));
        }
        Ok(Self { c0, c1 })
    }

    pub fn dim(&self) -> usize {
        self.c0.rows()
    }

    pub fn swapped(&self) -> Self {
        Self {
            c0: self.c1.clone(),
            c1: self.c0.clone(),
        }
    }
}

/// Mismatch parameter of a block model. `no_key` is set when a block is
/// singular, in which case `eta` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEta {
    pub eta: f64,
    pub no_key: bool,
}

impl BlockEta {
    const NO_KEY: Self = Self { eta: 0.0, no_key: true };
}

/// `eta = [min(min s, min 1/s)]^2` with `s` the singular values of `C0 C1^-1`.
pub fn eta_from_blocks(model: &BlockModel) -> Result<BlockEta> {
    let c1_inv = match matrix_inverse(&model.c1) {
        Ok(m) => m,
        Err(Error::Singular) => return Ok(BlockEta::NO_KEY),
        Err(e) => return Err(e),
    };
    if let Err(Error::Singular) = matrix_inverse(&model.c0) {
        return Ok(BlockEta::NO_KEY);
    }
    let s = svd(&(&model.c0 * &c1_inv))?.s;
    let largest = s[0];
    let smallest = *s.last().expect("non-empty spectrum");
    if smallest <= 0.0 {
        return Ok(BlockEta::NO_KEY);
    }
    let root = smallest.min(1.0 / largest).min(1.0);
    Ok(BlockEta {
        eta: root * root,
        no_key: false,
    })
}

/// Same quantity from the spectrum of `C0 (C1^H C1)^-1 C0^H`: the minimum
/// over its eigenvalues and their reciprocals.
pub fn eta_from_blocks_spectral(model: &BlockModel) -> Result<BlockEta> {
    let gram_inv = match matrix_inverse(&(&model.c1.adjoint() * &model.c1)) {
        Ok(m) => m,
        Err(Error::Singular) => return Ok(BlockEta::NO_KEY),
        Err(e) => return Err(e),
    };
    if let Err(Error::Singular) = matrix_inverse(&model.c0) {
        return Ok(BlockEta::NO_KEY);
    }
    let m = &(&model.c0 * &gram_inv) * &model.c0.adjoint();
    // symmetrize away rounding before the Hermitian check
    let m = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let ev = hermitian_eigenvalues(&m)?;
    let largest = ev[0];
    let smallest = *ev.last().expect("non-empty spectrum");
    if smallest <= 0.0 {
        return Ok(BlockEta::NO_KEY);
    }
    Ok(BlockEta {
        eta: smallest.min(1.0 / largest).min(1.0),
        no_key: false,
    })
}

/// Golden-section passes over each coordinate during refinement.
pub const REFINEMENT_ITERATIONS: usize = 200;

/// Direct minimization of the detection-probability ratios
/// `psi^H C0^H C0 psi / psi^H C1^H C1 psi` and its reciprocal over input
/// superpositions `psi`: random sampling followed by coordinate-wise
/// golden-section refinement. Every evaluated ratio is attained by some
/// input, so the result approaches the spectral value from above.
pub fn eta_brute_force(model: &BlockModel, n_samples: usize, seed: u64) -> Result<BlockEta> {
    if n_samples == 0 {
        return Err(Error::Domain {
            name: "n_samples",
            value: 0.0,
            domain: "[1, inf)",
        });
    }
    if matches!(matrix_inverse(&model.c0), Err(Error::Singular))
        || matches!(matrix_inverse(&model.c1), Err(Error::Singular))
    {
        return Ok(BlockEta::NO_KEY);
    }
    let g0 = &model.c0.adjoint() * &model.c0;
    let g1 = &model.c1.adjoint() * &model.c1;
    let n = model.dim();
    let quad = |g: &ComplexMatrix, x: &[f64]| -> f64 {
        let psi: Vec<Complex64> = x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        g.mul_vec(&psi).iter().zip(&psi).map(|(a, b)| (b.conj() * a).re).sum()
    };
    let ratio01 = |x: &[f64]| quad(&g0, x) / quad(&g1, x);
    let ratio10 = |x: &[f64]| quad(&g1, x) / quad(&g0, x);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best01 = (f64::INFINITY, vec![0.0; 2 * n]);
    let mut best10 = (f64::INFINITY, vec![0.0; 2 * n]);
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = ratio01(&x);
        if !r.is_finite() {
            continue;
        }
        if r < best01.0 {
            best01 = (r, x.clone());
        }
        if 1.0 / r < best10.0 {
            best10 = (1.0 / r, x);
        }
    }
    if !best01.0.is_finite() {
        return Err(Error::NoConvergence("ratio sampling"));
    }
    let min01 = refine(&ratio01, best01.1);
    let min10 = refine(&ratio10, best10.1);
    Ok(BlockEta {
        eta: min01.min(min10).min(1.0),
        no_key: false,
    })
}

fn refine(f: &dyn Fn(&[f64]) -> f64, mut x: Vec<f64>) -> f64 {
    let norm = |x: &mut Vec<f64>| {
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= n);
    };
    norm(&mut x);
    let mut best = f(&x);
    let mut width = 1.0;
    for _ in 0..REFINEMENT_ITERATIONS {
        let before = best;
        for k in 0..x.len() {
            let x0 = x[k];
            let (tau, val) = golden_section_min(
                |tau| {
                    let mut y = x.clone();
                    y[k] = x0 + tau;
                    let v = f(&y);
                    if v.is_finite() {
                        v
                    } else {
                        f64::INFINITY
                    }
                },
                -width,
                width,
                40,
            );
            if val < best {
                best = val;
                x[k] = x0 + tau;
            }
        }
        norm(&mut x);
        if best >= before {
            width *= 0.5;
            if width < 1e-12 {
                break;
            }
        }
    }
    best
}

/// Efficiency curve together with per-mode-label misalignment unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MisalignmentModel {
    pub curve: EfficiencyCurve,
    pub v_blocks_z: Vec<ComplexMatrix>,
    pub v_blocks_x: Vec<ComplexMatrix>,
}

impl MisalignmentModel {
    pub fn new(curve: EfficiencyCurve, v_blocks_z: Vec<ComplexMatrix>, v_blocks_x: Vec<ComplexMatrix>) -> Result<Self> {
        for blocks in [&v_blocks_z, &v_blocks_x] {
            if blocks.len() != curve.len() {
                return Err(Error::Shape(format!(
                    "{} misalignment blocks for {} samples",
                    blocks.len(),
                    curve.len()
                )));
            }
            for b in blocks {
                if b.rows() != 2 || b.cols() != 2 {
                    return Err(Error::Shape("misalignment blocks must be 2x2".into()));
                }
                let r = b.unitarity_residual();
                if r > 1e-10 {
                    return Err(Error::NotUnitary(r));
                }
            }
        }
        Ok(Self {
            curve,
            v_blocks_z,
            v_blocks_x,
        })
    }

    /// Aligned receiver: identity blocks in both bases.
    pub fn aligned(curve: EfficiencyCurve) -> Self {
        let id = vec![ComplexMatrix::identity(2); curve.len()];
        Self {
            curve,
            v_blocks_z: id.clone(),
            v_blocks_x: id,
        }
    }
}

fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_vec(2, 2, [h, h, h, -h].map(|v| Complex64::new(v, 0.0)).to_vec())
        .expect("2x2")
}

/// Mismatch parameters for time-local misalignments. Each mode label's
/// channel block `F(t) V(t)` (with the basis-changing Hadamard for X) is
/// decomposed; its singular values carry the efficiencies while the
/// unitary factors drop out.
pub fn eta_from_misalignment(model: &MisalignmentModel) -> Result<EtaPair> {
    let h = hadamard();
    let spectra = |basis_x: bool| -> Result<Vec<(f64, f64)>> {
        model
            .curve
            .samples
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let (e0, e1, v) = if basis_x {
                    (s.eta_x0, s.eta_x1, &model.v_blocks_x[j] * &h)
                } else {
                    (s.eta_z0, s.eta_z1, model.v_blocks_z[j].clone())
                };
                let f = ComplexMatrix::from_real_diag(&[e0.sqrt(), e1.sqrt()]);
                let sv = svd(&(&f * &v))?.s;
                Ok((sv[1] * sv[1], sv[0] * sv[0]))
            })
            .collect()
    };
    let z = spectra(false)?;
    let x = spectra(true)?;
    if model.curve.bases_agree().is_ok() {
        let local = |spec: &[(f64, f64)]| {
            spec.iter()
                .map(|&(lo, hi)| normalized(lo, hi))
                .fold(1.0, f64::min)
        };
        Ok(EtaPair {
            eta_z: local(&z),
            eta_x: local(&x),
        })
    } else {
        let (z_min, z_max) = min_max(z.iter().flat_map(|&(a, b)| [a, b]));
        let (x_min, x_max) = min_max(x.iter().flat_map(|&(a, b)| [a, b]));
        let max = z_max.max(x_max);
        Ok(EtaPair {
            eta_z: normalized(z_min, max),
            eta_x: normalized(x_min, max),
        })
    }
}

/// Certified lower bound on `eta` from measured single-mode efficiencies
/// when the power coupling out of any mode is at most `delta`:
/// `max(0, (min - delta) / (max + delta))`.
pub fn eta_lower_bound_measured(efficiencies: &[f64], delta: f64) -> Result<f64> {
    if efficiencies.is_empty() {
        return Err(Error::Empty("measured efficiencies"));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain {
            name: "delta",
            value: delta,
            domain: "[0, inf)",
        });
    }
    if let Some(&bad) = efficiencies.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain {
            name: "efficiency",
            value: bad,
            domain: "[0, inf)",
        });
    }
    let (lo, hi) = min_max(efficiencies.iter().copied());
    let den = hi + delta;
    if den <= 0.0 {
        return Ok(0.0);
    }
    Ok(((lo - delta) / den).max(0.0))
}

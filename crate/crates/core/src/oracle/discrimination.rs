use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::channels::{hermitian_eigenvalues, ComplexMatrix};
use crate::error::{Error, Result};
use crate::mathcore::{self, golden_section_min};

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let r = matrix.hermiticity_residual();
        if r > 1e-12 * matrix.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian(r));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::Domain {
                name: "trace",
                value: tr.re,
                domain: "{1}",
            });
        }
        let smallest = hermitian_eigenvalues(&matrix)?.last().copied().unwrap_or(0.0);
        if smallest < -1e-10 {
            return Err(Error::Domain {
                name: "eigenvalue",
                value: smallest,
                domain: "[0, inf)",
            });
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` for a normalized copy of `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Domain {
                name: "state norm",
                value: norm,
                domain: "(0, inf)",
            });
        }
        let n = psi.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj() / (norm * norm);
            }
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

fn check_problem(prior0: f64, phi: f64) -> Result<f64> {
    let p0 = mathcore::probability("prior0", prior0)?;
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&phi) {
        return Err(Error::Domain {
            name: "phi",
            value: phi,
            domain: "[0, pi/2]",
        });
    }
    Ok(p0)
}

/// Success probability of the projective measurement at angle `theta`
/// discriminating `|0>` from `cos(phi)|0> + sin(phi)|1>`.
fn success(p0: f64, phi: f64, theta: f64) -> f64 {
    p0 * theta.cos().powi(2) + (1.0 - p0) * (phi - theta).sin().powi(2)
}

/// Sweeps the measurement angle over `[0, pi)` and polishes the best grid
/// point by golden-section search. Returns the success probability and angle.
pub fn discriminate_brute_force(prior0: f64, phi: f64, grid_points: usize) -> Result<(f64, f64)> {
    let p0 = check_problem(prior0, phi)?;
    if grid_points < 3 {
        return Err(Error::Domain {
            name: "grid_points",
            value: grid_points as f64,
            domain: "[3, inf)",
        });
    }
    let step = PI / grid_points as f64;
    let (best_idx, _) = (0..grid_points)
        .map(|k| (k, success(p0, phi, k as f64 * step)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    let centre = best_idx as f64 * step;
    let (theta, neg) = golden_section_min(|t| -success(p0, phi, t), centre - step, centre + step, 100);
    let grid_best = success(p0, phi, centre);
    if grid_best >= -neg {
        Ok((grid_best, centre))
    } else {
        Ok((-neg, theta.rem_euclid(PI)))
    }
}

/// Helstrom bound for the two pure probe states, from the eigenvalues of
/// the real 2x2 operator `p0 |xi0><xi0| - p1 |xi1><xi1|`.
pub fn helstrom_bound(prior0: f64, phi: f64) -> Result<f64> {
    let p0 = check_problem(prior0, phi)?;
    let p1 = 1.0 - p0;
    let (s, c) = phi.sin_cos();
    let a = p0 - p1 * c * c;
    let b = -p1 * c * s;
    let d = -p1 * s * s;
    let half_trace = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let trace_norm = (half_trace + disc).abs() + (half_trace - disc).abs();
    Ok(0.5 * (1.0 + trace_norm))
}

/// Helstrom bound `(1 + ||p0 rho0 - p1 rho1||_1) / 2` for arbitrary states.
pub fn helstrom_bound_states(prior0: f64, rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    let p0 = mathcore::probability("prior0", prior0)?;
    if rho0.dim() != rho1.dim() {
        return Err(Error::Shape("states have different dimensions".into()));
    }
    let gamma = rho0
        .matrix()
        .scale(Complex64::new(p0, 0.0))
        .sub(&rho1.matrix().scale(Complex64::new(1.0 - p0, 0.0)));
    let norm: f64 = hermitian_eigenvalues(&gamma)?.iter().map(|l| l.abs()).sum();
    Ok(0.5 * (1.0 + norm))
}

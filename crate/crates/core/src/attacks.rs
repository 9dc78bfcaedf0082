//! Individual attacks against receivers with symmetric detector efficiency
//! mismatch, and the insecurity boundaries they induce in the `(E, eta)`
//! plane.
//!
//! `eta` is the smallest efficiency ratio Eve can enforce for either bit
//! value; `E` is the QBER observed by Alice and Bob.

use crate::error::{Error, Result};
use crate::mathcore::{self, bisect, entropy_unchecked, Bracket};

/// Lower end of every boundary search in `eta`.
pub const ETA_FLOOR: f64 = 1e-6;

/// Bracket tolerance for a single boundary solve.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Outer tolerance for the curve-intersection solve.
pub const CROSSOVER_TOL: f64 = 1e-8;

/// Attack evaluation at one `(eta, E)` point, in bits per sifted detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackReport {
    pub qber: f64,
    /// Fraction attacked with faked states (combined attack only; zero otherwise).
    pub attacked_fraction: f64,
    pub mutual_ab: f64,
    pub mutual_ae: f64,
    pub rate: f64,
    /// Eve's probability of guessing Alice's bit (improved attack only).
    pub success_prob: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    Combined,
    Improved,
    PureFakedStates,
}

impl AttackKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Combined => "combined",
            AttackKind::Improved => "improved",
            AttackKind::PureFakedStates => "pure-faked-states",
        }
    }
}

/// Two pure probe states `|0>` and `cos(phi)|0> + sin(phi)|1>` with priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminationProblem {
    pub prior0: f64,
    pub prior1: f64,
    pub overlap_angle: f64,
}

impl DiscriminationProblem {
    /// Probe states left by the optimal individual attack combined with a
    /// time shift: priors `1/(1+eta), eta/(1+eta)` and `cos(phi) = 1 - 2E`.
    pub fn time_shifted_probe(eta: f64, qber: f64) -> Result<Self> {
        let eta = mathcore::dem_ratio("eta", eta)?;
        let qber = half_qber(qber)?;
        Ok(Self {
            prior0: 1.0 / (1.0 + eta),
            prior1: eta / (1.0 + eta),
            overlap_angle: overlap_angle(qber),
        })
    }
}

fn half_qber(e: f64) -> Result<f64> {
    let e = mathcore::probability("qber", e)?;
    if e > 0.5 + mathcore::BOUNDARY_GUARD {
        return Err(Error::Domain {
            name: "qber",
            value: e,
            domain: "[0, 1/2]",
        });
    }
    Ok(e.min(0.5))
}

/// `phi = arccos(1 - 2E)`.
pub fn overlap_angle(qber: f64) -> f64 {
    (1.0 - 2.0 * qber).clamp(-1.0, 1.0).acos()
}

/// Symmetric mismatch parameter of a pair of efficiency curves:
/// `max(min_t eta1/eta0, min_t eta0/eta1)`.
pub fn symmetric_eta(eta0: &[f64], eta1: &[f64]) -> Result<f64> {
    if eta0.is_empty() {
        return Err(Error::Empty("efficiency curve"));
    }
    if eta0.len() != eta1.len() {
        return Err(Error::Shape(format!(
            "curves have {} and {} samples",
            eta0.len(),
            eta1.len()
        )));
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    let mut min10 = f64::INFINITY;
    let mut min01 = f64::INFINITY;
    for (&a, &b) in eta0.iter().zip(eta1) {
        if a < 0.0 || b < 0.0 || a.is_nan() || b.is_nan() {
            return Err(Error::Domain {
                name: "efficiency",
                value: a.min(b),
                domain: "[0, inf)",
            });
        }
        min10 = min10.min(ratio(b, a));
        min01 = min01.min(ratio(a, b));
    }
    Ok(min10.max(min01).min(1.0))
}

/// QBER of the plain faked-states attack, `2 eta / (1 + 3 eta)`.
pub fn faked_states_qber(eta: f64) -> Result<f64> {
    let eta = mathcore::dem_ratio("eta", eta)?;
    Ok(fs_qber(eta))
}

#[inline]
fn fs_qber(eta: f64) -> f64 {
    2.0 * eta / (1.0 + 3.0 * eta)
}

/// Eve's information from the time-shift attack, `1 - h(eta/(1+eta))`.
pub fn timeshift_mutual_info(eta: f64) -> Result<f64> {
    let eta = mathcore::dem_ratio("eta", eta)?;
    Ok(1.0 - entropy_unchecked(eta / (1.0 + eta)))
}

/// Faked-states attack on a fraction `r = E / E_fs` of the pulses and a
/// time-shift attack on the rest.
pub fn combined_attack(eta: f64, qber: f64) -> Result<AttackReport> {
    let eta = mathcore::dem_ratio("eta", eta)?;
    let e = mathcore::probability("qber", qber)?;
    let e_fs = fs_qber(eta);
    let r = e / e_fs;
    if r > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!(
            "QBER {e} exceeds the faked-states QBER {e_fs} at eta = {eta}"
        )));
    }
    let r = r.min(1.0);
    let h_ts = entropy_unchecked(eta / (1.0 + eta));
    let mutual_ab = 1.0 - entropy_unchecked(e);
    let mutual_ae = 1.0 - e - h_ts * (1.0 - r);
    Ok(AttackReport {
        qber: e,
        attacked_fraction: r,
        mutual_ab,
        mutual_ae,
        rate: mutual_ab - mutual_ae,
        success_prob: None,
    })
}

/// Probability that Eve's optimal projective measurement on the probe
/// identifies Alice's bit, given the time-shift priors.
pub fn optimal_success_probability(eta: f64, qber: f64) -> Result<f64> {
    let eta = mathcore::dem_ratio("eta", eta)?;
    let e = half_qber(qber)?;
    Ok(success_prob(eta, e))
}

fn success_prob(eta: f64, e: f64) -> f64 {
    let phi = overlap_angle(e);
    let (s2, c2) = (2.0 * phi).sin_cos();
    // atan2 handles the 0/0 corner at eta = 1, E = 0
    let theta = 0.5 * s2.atan2(1.0 / eta - c2);
    let p0 = 1.0 / (1.0 + eta);
    let p1 = eta / (1.0 + eta);
    p0 * theta.cos().powi(2) + p1 * (phi + theta).sin().powi(2)
}

/// Optimal individual attack with time-shift priors: `R = h(p) - h(E)`.
pub fn improved_attack_rate(eta: f64, qber: f64) -> Result<AttackReport> {
    let eta = mathcore::dem_ratio("eta", eta)?;
    let e = half_qber(qber)?;
    let p = success_prob(eta, e);
    let mutual_ab = 1.0 - entropy_unchecked(e);
    let mutual_ae = 1.0 - entropy_unchecked(p);
    Ok(AttackReport {
        qber: e,
        attacked_fraction: 0.0,
        mutual_ab,
        mutual_ae,
        rate: mutual_ab - mutual_ae,
        success_prob: Some(p),
    })
}

/// Mismatch ratio below which the attack of `kind` breaks a link with QBER `E`.
pub fn attack_boundary(kind: AttackKind, qber: f64) -> Result<f64> {
    let e = mathcore::probability("qber", qber)?;
    if !(e > 0.0 && e < 0.5) {
        return Err(Error::Domain {
            name: "qber",
            value: e,
            domain: "(0, 1/2)",
        });
    }
    match kind {
        AttackKind::PureFakedStates => Ok(e / (2.0 - 3.0 * e)),
        AttackKind::Combined => {
            // below eta_fs(E) the attacked fraction would exceed one
            let lo = (e / (2.0 - 3.0 * e)).max(ETA_FLOOR);
            solve_eta(|eta| combined_rate(eta, e), lo, kind, e)
        }
        AttackKind::Improved => {
            solve_eta(|eta| entropy_unchecked(success_prob(eta, e)) - entropy_unchecked(e), ETA_FLOOR, kind, e)
        }
    }
}

fn combined_rate(eta: f64, e: f64) -> f64 {
    let r = (e * (1.0 + 3.0 * eta) / (2.0 * eta)).min(1.0);
    e + entropy_unchecked(eta / (1.0 + eta)) * (1.0 - r) - entropy_unchecked(e)
}

fn solve_eta<F: Fn(f64) -> f64>(rate: F, lo: f64, kind: AttackKind, e: f64) -> Result<f64> {
    let bracket = Bracket::with_tol(lo, 1.0, BOUNDARY_TOL)?;
    match bisect(&rate, bracket) {
        Ok((a, b)) => Ok(0.5 * (a + b)),
        Err(Error::NoSignChange { .. }) => Err(Error::NoRoot(format!(
            "{} attack rate has no zero for eta in [{lo:e}, 1] at E = {e}",
            kind.name()
        ))),
        Err(other) => Err(other),
    }
}

/// Boundary samples over a QBER grid; `None` where no boundary exists in (0, 1].
pub fn attack_region(kind: AttackKind, qber_grid: &[f64]) -> Vec<(f64, Option<f64>)> {
    use rayon::prelude::*;
    qber_grid
        .par_iter()
        .map(|&e| (e, attack_boundary(kind, e).ok()))
        .collect()
}

/// QBER at which the rate of `kind` crosses zero for fixed `eta`.
pub fn attack_boundary_qber(kind: AttackKind, eta: f64) -> Result<f64> {
    let eta = mathcore::dem_ratio("eta", eta)?;
    let (hi, rate): (f64, Box<dyn Fn(f64) -> f64>) = match kind {
        AttackKind::PureFakedStates => return Ok(fs_qber(eta)),
        AttackKind::Combined => (fs_qber(eta), Box::new(move |e| combined_rate(eta, e))),
        AttackKind::Improved => (
            0.5,
            Box::new(move |e| entropy_unchecked(success_prob(eta, e)) - entropy_unchecked(e)),
        ),
    };
    let (a, b) = bisect(rate, Bracket::with_tol(0.0, hi, BOUNDARY_TOL)?)?;
    Ok(0.5 * (a + b))
}

/// Mismatch ratio at which the combined and improved boundary curves
/// intersect. Below it the combined attack is the stronger one.
pub fn attack_crossover() -> Result<f64> {
    let gap = |eta: f64| {
        let c = attack_boundary_qber(AttackKind::Combined, eta);
        let i = attack_boundary_qber(AttackKind::Improved, eta);
        match (c, i) {
            (Ok(c), Ok(i)) => c - i,
            _ => f64::NAN,
        }
    };
    // coarse scan for the first sign change
    let etas = mathcore::grid(0.02, 1.0, 0.02)?;
    let mut prev = (etas[0], gap(etas[0]));
    for &eta in &etas[1..] {
        let g = gap(eta);
        if prev.1 * g <= 0.0 {
            let (a, b) = bisect(gap, Bracket::with_tol(prev.0, eta, CROSSOVER_TOL)?)?;
            return Ok(0.5 * (a + b));
        }
        prev = (eta, g);
    }
    Err(Error::NoRoot("boundary curves do not intersect".into()))
}

//! Lower bounds on the secure key rate for receivers with basis- and
//! bit-dependent linear-optical flaws.

use crate::error::{Error, Result};
use crate::mathcore::{self, bisect, entropy_unchecked, Bracket};

/// Key rate with Bob's uncertainty about Alice's virtual X outcome given as
/// a fraction `H / (N Q_Z)` of the raw key: `1 - H/(N Q_Z) - h(E_Z)`.
pub fn koashi_rate(uncertainty_fraction: f64, e_z: f64) -> Result<f64> {
    let u = mathcore::probability("uncertainty fraction", uncertainty_fraction)?;
    let e = mathcore::probability("e_z", e_z)?;
    Ok(1.0 - u - entropy_unchecked(e))
}

/// Worst-case single-photon error rate after the virtual filter of
/// transmission `eta`, `e / (eta (1 - e) + e)`.
pub fn error_amplification_bound(e1: f64, eta: f64) -> Result<f64> {
    let e = half("e1", e1)?;
    let eta = mathcore::dem_ratio("eta", eta)?;
    Ok(amplified(e, eta))
}

#[inline]
fn amplified(e: f64, eta: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e / (eta * (1.0 - e) + e)
    }
}

fn half(name: &'static str, x: f64) -> Result<f64> {
    let x = mathcore::probability(name, x)?;
    if x > 0.5 + mathcore::BOUNDARY_GUARD {
        return Err(Error::Domain {
            name,
            value: x,
            domain: "[0, 1/2]",
        });
    }
    Ok(x.min(0.5))
}

/// `1 - h(x)` with `x` clamped to 1/2 from above, where the bracket reaches
/// its minimum of zero.
#[inline]
fn residual_key(x: f64) -> f64 {
    1.0 - entropy_unchecked(x.min(0.5))
}

/// Observed protocol parameters. Superscript-(1) quantities refer to the
/// single-photon part as estimated by a decoy-state protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInputs {
    pub e_z: f64,
    pub e_x: f64,
    pub q_z: f64,
    pub q_x: f64,
    pub q1_x: f64,
    pub q1_z: f64,
    pub e1_x: f64,
    pub e1_z: f64,
    pub eta_z: f64,
    pub eta_x: f64,
}

impl RateInputs {
    /// Single photons, symmetric bases, equal detection fractions.
    pub fn symmetric_single_photon(qber: f64, eta: f64) -> Self {
        Self {
            e_z: qber,
            e_x: qber,
            q_z: 1.0,
            q_x: 1.0,
            q1_x: 1.0,
            q1_z: 1.0,
            e1_x: qber,
            e1_z: qber,
            eta_z: eta,
            eta_x: eta,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e_z", self.e_z),
            ("e_x", self.e_x),
            ("q_z", self.q_z),
            ("q_x", self.q_x),
            ("q1_x", self.q1_x),
            ("q1_z", self.q1_z),
        ] {
            mathcore::probability(name, v)?;
        }
        half("e1_x", self.e1_x)?;
        half("e1_z", self.e1_z)?;
        mathcore::dem_ratio("eta_z", self.eta_z)?;
        mathcore::dem_ratio("eta_x", self.eta_x)?;
        Ok(())
    }

    /// Violations of `eta_Z Q_X < Q_Z` and its X-basis counterpart.
    pub fn warnings(&self) -> Vec<RateWarning> {
        let mut out = Vec::new();
        if self.eta_z * self.q_x >= self.q_z {
            out.push(RateWarning::SideConditionZ);
        }
        if self.eta_x * self.q_z >= self.q_x {
            out.push(RateWarning::SideConditionX);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateWarning {
    /// `eta_Z Q_X >= Q_Z`
    SideConditionZ,
    /// `eta_X Q_Z >= Q_X`
    SideConditionX,
}

impl std::fmt::Display for RateWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RateWarning::SideConditionZ => write!(f, "eta_z * q_x >= q_z"),
            RateWarning::SideConditionX => write!(f, "eta_x * q_z >= q_x"),
        }
    }
}

/// Which single-photon error estimate enters the entropy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorBound {
    /// `e / eta`
    #[default]
    Loose,
    /// `e / (eta (1 - e) + e)`
    Tight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rate_z: f64,
    pub rate_x: f64,
    pub e_star_x: f64,
    pub e_star_z: f64,
    pub warnings: Vec<RateWarning>,
}

/// Secure key rates for raw keys from the Z and X bases.
pub fn secure_rate(inputs: &RateInputs) -> Result<RateReport> {
    secure_rate_with(inputs, ErrorBound::Loose)
}

pub fn secure_rate_with(inputs: &RateInputs, bound: ErrorBound) -> Result<RateReport> {
    inputs.validate()?;
    if inputs.q_z == 0.0 {
        return Err(Error::DivisionByZero("q_z"));
    }
    if inputs.q_x == 0.0 {
        return Err(Error::DivisionByZero("q_x"));
    }
    let estimate = |e: f64, eta: f64| match bound {
        ErrorBound::Loose => e / eta,
        ErrorBound::Tight => amplified(e, eta),
    };
    let rate_z = -entropy_unchecked(inputs.e_z)
        + inputs.eta_z * inputs.q1_x * (inputs.q_x / inputs.q_z)
            * residual_key(estimate(inputs.e1_x, inputs.eta_z));
    let rate_x = -entropy_unchecked(inputs.e_x)
        + inputs.eta_x * inputs.q1_z * (inputs.q_z / inputs.q_x)
            * residual_key(estimate(inputs.e1_z, inputs.eta_x));
    Ok(RateReport {
        rate_z,
        rate_x,
        e_star_x: amplified(inputs.e1_x, inputs.eta_z),
        e_star_z: amplified(inputs.e1_z, inputs.eta_x),
        warnings: inputs.warnings(),
    })
}

/// Single-photon source, symmetric bases: `-h(E) + eta [1 - h(E/eta)]`.
pub fn simplified_rate(qber: f64, eta: f64) -> Result<f64> {
    let e = half("qber", qber)?;
    let eta = mathcore::dem_ratio("eta", eta)?;
    Ok(general_unchecked(e, eta))
}

#[inline]
fn general_unchecked(e: f64, eta: f64) -> f64 {
    -entropy_unchecked(e) + eta * residual_key(e / eta)
}

/// As [`simplified_rate`] when Eve is also restricted to single photons:
/// `-h(E) + eta [1 - h(E)]`.
pub fn single_photon_eve_rate(qber: f64, eta: f64) -> Result<f64> {
    let e = half("qber", qber)?;
    let eta = mathcore::dem_ratio("eta", eta)?;
    let h = entropy_unchecked(e);
    Ok(-h + eta * (1.0 - h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProofModel {
    General,
    SinglePhotonEve,
}

impl ProofModel {
    pub fn name(self) -> &'static str {
        match self {
            ProofModel::General => "general",
            ProofModel::SinglePhotonEve => "single-photon",
        }
    }
}

/// Smallest mismatch ratio certified secure at QBER `E`.
pub fn proof_boundary(model: ProofModel, qber: f64) -> Result<f64> {
    let e = half("qber", qber)?;
    if !(e > 0.0 && e < 0.5) {
        return Err(Error::Domain {
            name: "qber",
            value: e,
            domain: "(0, 1/2)",
        });
    }
    match model {
        ProofModel::SinglePhotonEve => {
            let h = entropy_unchecked(e);
            let eta = h / (1.0 - h);
            if eta > 1.0 {
                Err(Error::NoRoot(format!("single-photon bound exceeds 1 at E = {e}")))
            } else {
                Ok(eta)
            }
        }
        ProofModel::General => {
            let bracket = Bracket::with_tol(crate::attacks::ETA_FLOOR, 1.0, crate::attacks::BOUNDARY_TOL)?;
            match bisect(|eta| general_unchecked(e, eta), bracket) {
                Ok((a, b)) => Ok(0.5 * (a + b)),
                Err(Error::NoSignChange { .. }) => Err(Error::NoRoot(format!(
                    "general bound is negative for every eta at E = {e}"
                ))),
                Err(other) => Err(other),
            }
        }
    }
}

/// QBER threshold of `model` at fixed `eta`.
pub fn proof_boundary_qber(model: ProofModel, eta: f64) -> Result<f64> {
    let eta = mathcore::dem_ratio("eta", eta)?;
    let f = |e: f64| match model {
        ProofModel::General => general_unchecked(e, eta),
        ProofModel::SinglePhotonEve => {
            let h = entropy_unchecked(e);
            -h + eta * (1.0 - h)
        }
    };
    mathcore::find_root(f, Bracket::with_tol(0.0, 0.5, 1e-13)?)
}

pub fn proof_region(model: ProofModel, qber_grid: &[f64]) -> Vec<(f64, Option<f64>)> {
    use rayon::prelude::*;
    qber_grid
        .par_iter()
        .map(|&e| (e, proof_boundary(model, e).ok()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::binary_entropy;
    use approx::assert_abs_diff_eq;

    fn h(x: f64) -> f64 {
        binary_entropy(x).unwrap()
    }

    #[test]
    fn koashi_examples() {
        assert_abs_diff_eq!(koashi_rate(1.0, 0.07).unwrap(), -h(0.07));
        assert_eq!(koashi_rate(0.0, 0.0).unwrap(), 1.0);
        // mpmath: 0.413603042884043871
        assert_abs_diff_eq!(koashi_rate(0.3, 0.05).unwrap(), 0.41360304288404387, epsilon = 1e-14);
        assert!(koashi_rate(1.2, 0.0).is_err());
    }

    #[test]
    fn amplification_examples() {
        assert_abs_diff_eq!(error_amplification_bound(0.1, 1.0).unwrap(), 0.1, epsilon = 1e-16);
        assert_eq!(error_amplification_bound(0.0, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(error_amplification_bound(0.1, 0.5).unwrap(), 0.1 / 0.55, epsilon = 1e-15);
        assert!(error_amplification_bound(0.6, 0.5).is_err());
        assert!(error_amplification_bound(0.1, 0.0).is_err());
    }

    #[test]
    fn amplification_below_loose_bound() {
        for i in 0..=50 {
            let e = i as f64 / 100.0;
            for j in 1..=20 {
                let eta = j as f64 / 20.0;
                let b = error_amplification_bound(e, eta).unwrap();
                assert!(b <= e / eta + 1e-15);
                assert!(b >= e - 1e-15);
                assert!(b <= 1.0);
            }
        }
    }

    #[test]
    fn secure_rate_examples() {
        let perfect = RateInputs::symmetric_single_photon(0.0, 1.0);
        assert_eq!(secure_rate(&perfect).unwrap().rate_z, 1.0);

        let inputs = RateInputs {
            e_z: 0.02,
            e_x: 0.02,
            q_z: 0.5,
            q_x: 0.5,
            q1_x: 0.8,
            q1_z: 0.8,
            e1_x: 0.02,
            e1_z: 0.02,
            eta_z: 0.9,
            eta_x: 0.9,
        };
        let r = secure_rate(&inputs).unwrap();
        // mpmath: -h(0.02) + 0.72 (1 - h(0.02/0.9)) = 0.467865087621470807
        assert_abs_diff_eq!(r.rate_z, 0.4678650876214708, epsilon = 1e-13);
        assert_abs_diff_eq!(r.rate_x, r.rate_z, epsilon = 1e-15);
        assert!(r.e_star_x >= inputs.e1_x);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn secure_rate_reduces_to_simplified() {
        for i in 0..=25 {
            let e = i as f64 / 100.0;
            for j in 1..=10 {
                let eta = j as f64 / 10.0;
                let r = secure_rate(&RateInputs::symmetric_single_photon(e, eta)).unwrap();
                assert_abs_diff_eq!(r.rate_z, simplified_rate(e, eta).unwrap(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn secure_rate_errors_and_warnings() {
        let mut inputs = RateInputs::symmetric_single_photon(0.02, 0.9);
        inputs.q_z = 0.0;
        assert_eq!(secure_rate(&inputs), Err(Error::DivisionByZero("q_z")));
        let mut inputs = RateInputs::symmetric_single_photon(0.02, 0.9);
        inputs.q_x = 0.3;
        inputs.q_z = 0.25;
        assert_eq!(inputs.warnings(), vec![RateWarning::SideConditionZ]);
        assert!(secure_rate(&inputs).is_ok());
    }

    #[test]
    fn tight_bound_never_smaller() {
        let inputs = RateInputs::symmetric_single_photon(0.05, 0.6);
        let loose = secure_rate_with(&inputs, ErrorBound::Loose).unwrap();
        let tight = secure_rate_with(&inputs, ErrorBound::Tight).unwrap();
        assert!(tight.rate_z >= loose.rate_z);
    }

    #[test]
    fn simplified_examples() {
        assert_abs_diff_eq!(simplified_rate(0.0, 0.37).unwrap(), 0.37, epsilon = 1e-16);
        assert_abs_diff_eq!(simplified_rate(0.11002786443835955, 1.0).unwrap(), 0.0, epsilon = 1e-6);
        // mpmath bisection root 0.524530163608
        assert_abs_diff_eq!(proof_boundary(ProofModel::General, 0.05).unwrap(), 0.5245, epsilon = 5e-4);
        // clamp: E / eta > 1/2 leaves only the error-correction cost
        assert_abs_diff_eq!(simplified_rate(0.3, 0.4).unwrap(), -h(0.3), epsilon = 1e-15);
    }

    #[test]
    fn single_photon_examples() {
        assert_abs_diff_eq!(single_photon_eve_rate(0.11, 1.0).unwrap(), 1.0 - 2.0 * h(0.11));
        // mpmath: 1 - 2 h(0.11) = 0.000168083670944
        assert_abs_diff_eq!(single_photon_eve_rate(0.11, 1.0).unwrap(), 0.000168083670944, epsilon = 1e-12);
        assert_abs_diff_eq!(single_photon_eve_rate(0.0, 0.2).unwrap(), 0.2);
        // mpmath: 0.401339315985083178
        assert_abs_diff_eq!(proof_boundary(ProofModel::SinglePhotonEve, 0.05).unwrap(), 0.4013393159850832, epsilon = 1e-13);
    }

    #[test]
    fn region_examples() {
        // regression fixture, mpmath bisection: 0.999797942168
        assert_abs_diff_eq!(proof_boundary(ProofModel::General, 0.11).unwrap(), 0.999797942168, epsilon = 1e-9);
        // mpmath: 0.999663889152857
        assert_abs_diff_eq!(proof_boundary(ProofModel::SinglePhotonEve, 0.11).unwrap(), 0.999663889152857, epsilon = 1e-12);
        let grid: Vec<f64> = (1..50).map(|i| i as f64 / 100.0).collect();
        let general = proof_region(ProofModel::General, &grid);
        let single = proof_region(ProofModel::SinglePhotonEve, &grid);
        for (g, s) in general.iter().zip(&single) {
            if let (Some(g), Some(s)) = (g.1, s.1) {
                assert!(g >= s);
            }
            if g.0 > 0.111 {
                assert!(g.1.is_none());
            }
        }
    }

    #[test]
    fn threshold_at_unit_eta() {
        let e = proof_boundary_qber(ProofModel::General, 1.0).unwrap();
        assert_abs_diff_eq!(e, 0.11002786443835955, epsilon = 1e-10);
    }

    #[test]
    fn ordering_and_monotonicity() {
        for i in 0..=25 {
            let e = i as f64 / 100.0;
            let mut prev = f64::NEG_INFINITY;
            for j in 1..=100 {
                let eta = j as f64 / 100.0;
                let g = simplified_rate(e, eta).unwrap();
                assert!(g <= single_photon_eve_rate(e, eta).unwrap() + 1e-15);
                assert!(g >= prev - 1e-15, "not non-decreasing in eta at E={e}");
                prev = g;
                if i > 0 {
                    assert!(g <= simplified_rate((i - 1) as f64 / 100.0, eta).unwrap() + 1e-15);
                }
            }
        }
    }
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mathcore::{self, entropy_unchecked};

/// Outcome counts of a Monte Carlo attack run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStats {
    pub trials: u64,
    /// Rounds where Bob's basis matched Alice's.
    pub sifted: u64,
    /// Sifted rounds with a detection.
    pub detected: u64,
    pub errors: u64,
    /// Detected sifted rounds about which Eve holds extra knowledge: the
    /// rounds she measured in Alice's basis (faked states), or the rounds
    /// where Alice's bit matched the detector Eve favoured (time shift).
    pub eve_hits: u64,
    pub qber_estimate: f64,
    /// Binomial standard error of `qber_estimate`.
    pub stderr: f64,
    pub posterior_estimate: Option<f64>,
    pub mutual_info_estimate: Option<f64>,
    pub seed: u64,
}

fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

fn ratio(k: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

impl SimStats {
    pub fn detection_fraction(&self) -> f64 {
        ratio(self.detected, self.sifted)
    }

    pub fn detection_stderr(&self) -> f64 {
        binomial_stderr(self.detection_fraction(), self.sifted)
    }

    pub fn posterior_stderr(&self) -> Option<f64> {
        self.posterior_estimate.map(|p| binomial_stderr(p, self.detected))
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    sifted: u64,
    detected: u64,
    errors: u64,
    eve_hits: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            sifted: self.sifted + o.sifted,
            detected: self.detected + o.detected,
            errors: self.errors + o.errors,
            eve_hits: self.eve_hits + o.eve_hits,
        }
    }
}

/// Bob's bit from two threshold-detector clicks; a double click becomes
/// the supplied fair coin.
pub fn resolve_clicks(click0: bool, click1: bool, coin: bool) -> Option<u8> {
    match (click0, click1) {
        (true, true) => Some(coin as u8),
        (true, false) => Some(0),
        (false, true) => Some(1),
        (false, false) => None,
    }
}

/// Per-trial streams: trial `i` uses stream `i` of the generator keyed by
/// `seed`, so results do not depend on how trials are split across workers.
fn run<F>(trials: u64, seed: u64, trial: F) -> Counts
where
    F: Fn(&mut ChaCha8Rng) -> Counts + Sync,
{
    const CHUNK: u64 = 1 << 14;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = base.clone();
            let mut acc = Counts::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                rng.set_stream(i);
                rng.set_word_pos(0);
                acc = acc + trial(&mut rng);
            }
            acc
        })
        .reduce(Counts::default, |a, b| a + b)
}

fn validate(eta: f64, trials: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain {
            name: "trials",
            value: 0.0,
            domain: "[1, inf)",
        });
    }
    mathcore::dem_ratio("eta", eta)
}

/// Intercept-resend faked-states attack. Eve measures in a random basis,
/// then resends the opposite bit in the opposite basis at a timing where
/// the detector for her measured bit has efficiency 1 and the other
/// detector efficiency `eta`.
pub fn simulate_faked_states(eta: f64, trials: u64, seed: u64) -> Result<SimStats> {
    let eta = validate(eta, trials)?;
    let counts = run(trials, seed, |rng| {
        let alice_bit: bool = rng.gen();
        let alice_basis: bool = rng.gen();
        let eve_basis: bool = rng.gen();
        let bob_basis: bool = rng.gen();
        let eve_bit = if eve_basis == alice_basis { alice_bit } else { rng.gen() };
        if bob_basis != alice_basis {
            return Counts::default();
        }
        // faked state: bit !eve_bit prepared in basis !eve_basis
        let photon_bit = if bob_basis != eve_basis { !eve_bit } else { rng.gen() };
        let efficiency = |bit: bool| if bit == eve_bit { 1.0 } else { eta };
        let click = rng.gen::<f64>() < efficiency(photon_bit);
        // single photons never double-click
        let coin = rng.gen();
        let outcome = resolve_clicks(click && !photon_bit, click && photon_bit, coin);
        let mut c = Counts {
            sifted: 1,
            ..Counts::default()
        };
        if let Some(bob_bit) = outcome {
            c.detected = 1;
            c.errors = ((bob_bit == 1) != alice_bit) as u64;
            c.eve_hits = (eve_basis == alice_basis) as u64;
        }
        c
    });
    let qber = ratio(counts.errors, counts.detected);
    let informed = ratio(counts.eve_hits, counts.detected);
    Ok(SimStats {
        trials,
        sifted: counts.sifted,
        detected: counts.detected,
        errors: counts.errors,
        eve_hits: counts.eve_hits,
        qber_estimate: qber,
        stderr: binomial_stderr(qber, counts.detected),
        posterior_estimate: Some(informed),
        // Eve knows the bit exactly in informed rounds and nothing otherwise
        mutual_info_estimate: Some(informed),
        seed,
    })
}

/// Time-shift attack: each pulse is shifted to favour one detector at
/// random (efficiency 1 vs `eta`); Eve learns the bit from whether Bob
/// announces a detection.
pub fn simulate_time_shift(eta: f64, trials: u64, seed: u64) -> Result<SimStats> {
    let eta = validate(eta, trials)?;
    let counts = run(trials, seed, |rng| {
        let alice_bit: bool = rng.gen();
        let alice_basis: bool = rng.gen();
        let bob_basis: bool = rng.gen();
        let favoured: bool = rng.gen();
        if bob_basis != alice_basis {
            return Counts::default();
        }
        let efficiency = if alice_bit == favoured { 1.0 } else { eta };
        let click = rng.gen::<f64>() < efficiency;
        let coin = rng.gen();
        let outcome = resolve_clicks(click && !alice_bit, click && alice_bit, coin);
        let mut c = Counts {
            sifted: 1,
            ..Counts::default()
        };
        if let Some(bob_bit) = outcome {
            c.detected = 1;
            c.errors = ((bob_bit == 1) != alice_bit) as u64;
            c.eve_hits = (alice_bit == favoured) as u64;
        }
        c
    });
    let posterior = ratio(counts.eve_hits, counts.detected);
    let qber = ratio(counts.errors, counts.detected);
    Ok(SimStats {
        trials,
        sifted: counts.sifted,
        detected: counts.detected,
        errors: counts.errors,
        eve_hits: counts.eve_hits,
        qber_estimate: qber,
        stderr: binomial_stderr(qber, counts.detected),
        posterior_estimate: Some(posterior),
        mutual_info_estimate: Some(1.0 - entropy_unchecked(posterior)),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within(est: f64, target: f64, sigma: f64) {
        assert!((est - target).abs() <= 4.0 * sigma, "{est} vs {target} (sigma {sigma})");
    }

    #[test]
    fn faked_states_matches_closed_form() {
        let s = simulate_faked_states(0.5, 200_000, 1).unwrap();
        within(s.qber_estimate, 0.4, s.stderr);
        assert!(s.errors <= s.detected && s.detected <= s.sifted && s.sifted <= s.trials);
        let informed = s.posterior_estimate.unwrap();
        within(informed, 1.0 - s.qber_estimate, s.posterior_stderr().unwrap() * 2f64.sqrt());
    }

    #[test]
    fn faked_states_detection_fraction() {
        let s = simulate_faked_states(0.25, 200_000, 2).unwrap();
        within(s.detection_fraction(), 0.4375, s.detection_stderr());
    }

    #[test]
    fn time_shift_has_no_errors() {
        for seed in 0..5 {
            let s = simulate_time_shift(0.3, 20_000, seed).unwrap();
            assert_eq!(s.errors, 0);
            assert_eq!(s.qber_estimate, 0.0);
        }
        let s = simulate_time_shift(0.25, 200_000, 9).unwrap();
        within(s.posterior_estimate.unwrap(), 0.8, s.posterior_stderr().unwrap());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate_faked_states(0.4, 50_000, 77).unwrap();
        let b = simulate_faked_states(0.4, 50_000, 77).unwrap();
        assert_eq!(a, b);
        let c = simulate_faked_states(0.4, 50_000, 78).unwrap();
        assert_ne!(a.errors, c.errors);
    }

    #[test]
    fn prefix_consistency() {
        // trial i sees the same stream regardless of the total count
        let small = run(10, 5, |rng| Counts { errors: rng.gen_range(0..100), ..Counts::default() });
        let again = run(10, 5, |rng| Counts { errors: rng.gen_range(0..100), ..Counts::default() });
        assert_eq!(small.errors, again.errors);
    }

    #[test]
    fn double_click_rule() {
        assert_eq!(resolve_clicks(true, true, false), Some(0));
        assert_eq!(resolve_clicks(true, true, true), Some(1));
        assert_eq!(resolve_clicks(false, true, false), Some(1));
        assert_eq!(resolve_clicks(false, false, true), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(simulate_faked_states(0.0, 10, 0).is_err());
        assert!(simulate_time_shift(0.5, 0, 0).is_err());
    }
}

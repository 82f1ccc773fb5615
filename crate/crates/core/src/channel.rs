//! Air-to-ground channel mathematics and the jamming power-level process.
//!
//! The agent never sees the jamming power itself, only whether a nonzero
//! level is active. Levels are drawn i.i.d. per slot from a
//! [`JammerProcess`], which can be built either from a target mean power
//! ([`weights_for_mean`]) or from candidate UAV positions
//! ([`scenario_to_process`]).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cast, from_count, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("target mean {target} W is infeasible; it must lie strictly inside ({low}, {high}) W")]
    InfeasibleMean { target: f64, low: f64, high: f64 },
    #[error("invalid jammer process: {0}")]
    InvalidProcess(String),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Propagation constants of the air-to-ground link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    /// Path-loss exponent.
    pub alpha: T,
    pub beta_los: T,
    pub beta_nlos: T,
    /// Environment constant in the LoS probability curve (also its offset in degrees).
    pub phi: T,
    /// Environment constant scaling the elevation angle in the LoS curve.
    pub psi: T,
    /// Receiver noise power in watts.
    pub sigma2: T,
}

impl<T: Scalar> ChannelParams<T> {
    /// Rejects non-positive constants. Warns (does not fail) when the NLoS
    /// attenuation exceeds the LoS one.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", self.alpha),
            ("beta_los", self.beta_los),
            ("beta_nlos", self.beta_nlos),
            ("phi", self.phi),
            ("psi", self.psi),
            ("sigma2", self.sigma2),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(ChannelError::Domain(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if self.beta_nlos > self.beta_los {
            log::warn!(
                "beta_nlos ({}) exceeds beta_los ({}); NLoS links are usually weaker",
                self.beta_nlos,
                self.beta_los
            );
        }
        Ok(())
    }
}

/// Large-scale attenuation `beta * d^(-alpha)` for a LoS or NLoS link.
pub fn path_loss<T: Scalar>(distance: T, los: bool, params: &ChannelParams<T>) -> Result<T> {
    if !(distance > T::zero()) || !distance.is_finite() {
        return Err(ChannelError::Domain(format!(
            "distance must be finite and > 0, got {distance}"
        )));
    }
    let beta = if los { params.beta_los } else { params.beta_nlos };
    Ok(beta * distance.powf(-params.alpha))
}

/// Probability of a LoS connection at elevation angle `theta_deg` (degrees).
pub fn p_los<T: Scalar>(theta_deg: T, params: &ChannelParams<T>) -> Result<T> {
    if !(theta_deg >= T::zero() && theta_deg <= cast(90.0)) {
        return Err(ChannelError::Domain(format!(
            "elevation angle must lie in [0, 90] degrees, got {theta_deg}"
        )));
    }
    let exponent = -params.psi * (theta_deg - params.phi);
    Ok(T::one() / (T::one() + params.phi * exponent.exp()))
}

/// Signal-to-interference-plus-noise ratio.
pub fn sinr<T: Scalar>(received: T, jamming_eff: T, sigma2: T) -> Result<T> {
    if !(received >= T::zero()) || !(jamming_eff >= T::zero()) {
        return Err(ChannelError::Domain(format!(
            "powers must be nonnegative, got received={received}, jamming={jamming_eff}"
        )));
    }
    if !(sigma2 > T::zero()) {
        return Err(ChannelError::Domain(format!(
            "noise power must be > 0, got {sigma2}"
        )));
    }
    Ok(received / (jamming_eff + sigma2))
}

/// Distribution over discrete jamming power levels, sampled i.i.d. per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerProcess<T> {
    levels: Vec<T>,
    weights: Vec<T>,
    p_avg: T,
}

impl<T: Scalar> JammerProcess<T> {
    pub fn new(levels: Vec<T>, weights: Vec<T>) -> Result<Self> {
        validate_levels(&levels)?;
        if weights.len() != levels.len() {
            return Err(ChannelError::InvalidProcess(format!(
                "{} weights given for {} levels",
                weights.len(),
                levels.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(ChannelError::InvalidProcess(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::probability_tolerance() {
            return Err(ChannelError::InvalidProcess(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let p_avg = levels.iter().zip(&weights).map(|(l, w)| *l * *w).sum();
        Ok(Self {
            levels,
            weights,
            p_avg,
        })
    }

    /// Builds the exponential-tilt process whose mean power is `target_mean`.
    pub fn from_mean(levels: Vec<T>, p_off: T, target_mean: T) -> Result<Self> {
        let weights = weights_for_mean(&levels, p_off, target_mean)?;
        Self::new(levels, weights)
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Mean jamming power in watts.
    pub fn p_avg(&self) -> T {
        self.p_avg
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Probability that a slot is jammed (any nonzero level).
    pub fn jam_probability(&self) -> T {
        self.weights[1..].iter().copied().sum()
    }

    /// Level distribution conditioned on the slot being jammed.
    ///
    /// Entry 0 is always zero. When the process never jams, the conditional
    /// is undefined and a uniform distribution over nonzero levels is
    /// returned so that jammed states still have a well-formed kernel.
    pub fn jammed_conditional(&self) -> Vec<T> {
        let jam = self.jam_probability();
        let n = self.levels.len();
        let mut out = vec![T::zero(); n];
        if n < 2 {
            return out;
        }
        if jam > T::zero() {
            for k in 1..n {
                out[k] = self.weights[k] / jam;
            }
        } else {
            let u = T::one() / from_count::<T>(n - 1);
            for w in out.iter_mut().skip(1) {
                *w = u;
            }
        }
        out
    }
}

fn validate_levels<T: Scalar>(levels: &[T]) -> Result<()> {
    if levels.is_empty() {
        return Err(ChannelError::InvalidProcess("no power levels".into()));
    }
    if levels[0] != T::zero() {
        return Err(ChannelError::InvalidProcess(format!(
            "first level must be exactly 0 W, got {}",
            levels[0]
        )));
    }
    if levels.windows(2).any(|w| !(w[1] > w[0])) || levels.iter().any(|l| !l.is_finite()) {
        return Err(ChannelError::InvalidProcess(
            "levels must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Tilted conditional distribution `q_k ∝ exp(kappa * k)` over the nonzero
/// levels, computed with the max exponent factored out.
fn tilted<T: Scalar>(n_nonzero: usize, kappa: T) -> Vec<T> {
    let max_exp = if kappa > T::zero() {
        kappa * from_count(n_nonzero)
    } else {
        kappa
    };
    let mut q: Vec<T> = (1..=n_nonzero)
        .map(|k| (kappa * from_count(k) - max_exp).exp())
        .collect();
    let total: T = q.iter().copied().sum();
    for v in &mut q {
        *v /= total;
    }
    q
}

fn tilted_mean<T: Scalar>(nonzero: &[T], kappa: T) -> T {
    tilted(nonzero.len(), kappa)
        .iter()
        .zip(nonzero)
        .map(|(q, l)| *q * *l)
        .sum()
}

/// Level weights with `weights[0] = p_off` whose mean power is `target_mean`.
///
/// The jammed part follows an exponential tilt over level indices; the tilt
/// parameter is found by bisection.
pub fn weights_for_mean<T: Scalar>(levels: &[T], p_off: T, target_mean: T) -> Result<Vec<T>> {
    validate_levels(levels)?;
    if !(p_off >= T::zero() && p_off < T::one()) {
        return Err(ChannelError::Domain(format!(
            "p_off must lie in [0, 1), got {p_off}"
        )));
    }
    let nonzero = &levels[1..];
    let on = T::one() - p_off;
    let (lo_level, hi_level) = match (nonzero.first(), nonzero.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => {
            return Err(ChannelError::Domain(
                "at least one nonzero level is required".into(),
            ))
        }
    };
    let low = on * lo_level;
    let high = on * hi_level;
    if !(target_mean > low && target_mean < high) {
        return Err(ChannelError::InfeasibleMean {
            target: target_mean.to_f64().unwrap_or(f64::NAN),
            low: low.to_f64().unwrap_or(f64::NAN),
            high: high.to_f64().unwrap_or(f64::NAN),
        });
    }
    let conditional_target = target_mean / on;

    let mut lo = -T::one();
    let mut hi = T::one();
    while tilted_mean(nonzero, lo) > conditional_target {
        lo = lo * cast(2.0);
    }
    while tilted_mean(nonzero, hi) < conditional_target {
        hi = hi * cast(2.0);
    }
    for _ in 0..300 {
        let mid = (lo + hi) / cast(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if tilted_mean(nonzero, mid) < conditional_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = (lo + hi) / cast(2.0);
    let mut weights = Vec::with_capacity(levels.len());
    weights.push(p_off);
    weights.extend(tilted(nonzero.len(), kappa).into_iter().map(|q| on * q));
    Ok(weights)
}

/// Draws a level index from the process.
pub fn sample_level<T: Scalar, R: Rng + ?Sized>(process: &JammerProcess<T>, rng: &mut R) -> usize {
    let u: T = cast(rng.random::<f64>());
    let mut cumulative = T::zero();
    let mut last_positive = 0;
    for (k, w) in process.weights.iter().enumerate() {
        if *w > T::zero() {
            cumulative += *w;
            last_positive = k;
            if u < cumulative {
                return k;
            }
        }
    }
    last_positive
}

/// Index of the level nearest to `power`, ties going to the lower index.
pub fn quantize_power<T: Scalar>(power: T, levels: &[T]) -> usize {
    let mut best = 0;
    let mut best_gap = (power - levels[0]).abs();
    for (k, level) in levels.iter().enumerate().skip(1) {
        let gap = (power - *level).abs();
        if gap < best_gap {
            best = k;
            best_gap = gap;
        }
    }
    best
}

/// A candidate UAV position and the probability the jammer occupies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry<T> {
    /// Distance to the transmitter in meters.
    pub distance: T,
    /// Elevation angle in degrees.
    pub elevation_deg: T,
    pub probability: T,
}

/// Expected received jamming power for one geometry, mixing the LoS and
/// NLoS regimes by the LoS probability.
pub fn expected_jam_power<T: Scalar>(
    geometry: &Geometry<T>,
    tx_power: T,
    params: &ChannelParams<T>,
) -> Result<T> {
    let plos = p_los(geometry.elevation_deg, params)?;
    let los = path_loss(geometry.distance, true, params)?;
    let nlos = path_loss(geometry.distance, false, params)?;
    Ok(tx_power * (plos * los + (T::one() - plos) * nlos))
}

/// Derives a level process from a distribution over UAV positions.
pub fn scenario_to_process<T: Scalar>(
    geometries: &[Geometry<T>],
    tx_power: T,
    params: &ChannelParams<T>,
    levels: &[T],
) -> Result<JammerProcess<T>> {
    validate_levels(levels)?;
    if geometries.is_empty() {
        return Err(ChannelError::Domain("no candidate geometries".into()));
    }
    if !(tx_power >= T::zero()) {
        return Err(ChannelError::Domain(format!(
            "jammer transmit power must be nonnegative, got {tx_power}"
        )));
    }
    let mut weights = vec![T::zero(); levels.len()];
    let mut total = T::zero();
    for g in geometries {
        if !(g.probability >= T::zero()) {
            return Err(ChannelError::Domain(format!(
                "geometry probability must be nonnegative, got {}",
                g.probability
            )));
        }
        let power = expected_jam_power(g, tx_power, params)?;
        weights[quantize_power(power, levels)] += g.probability;
        total += g.probability;
    }
    if (total - T::one()).abs() > T::probability_tolerance() {
        return Err(ChannelError::Domain(format!(
            "geometry probabilities sum to {total}, expected 1"
        )));
    }
    JammerProcess::new(levels.to_vec(), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn urban() -> ChannelParams<f64> {
        ChannelParams {
            alpha: 2.3,
            beta_los: 1.0,
            beta_nlos: 0.2,
            phi: 9.61,
            psi: 0.16,
            sigma2: 1e-9,
        }
    }

    const LEVELS: [f64; 4] = [0.0, 5.0, 10.0, 15.0];

    #[test]
    fn path_loss_examples() {
        let mut p = urban();
        assert_eq!(path_loss(1.0, true, &p).unwrap(), 1.0);
        p.alpha = 2.0;
        assert_eq!(path_loss(2.0, true, &p).unwrap(), 0.25);
        p.alpha = 2.3;
        assert_relative_eq!(
            path_loss(100.0, false, &p).unwrap(),
            5.0237728630191645e-06,
            max_relative = 1e-12
        );
        assert!(path_loss(0.0, true, &p).is_err());
        assert!(path_loss(-3.0, false, &p).is_err());
    }

    #[test]
    fn p_los_examples() {
        let p = urban();
        assert_eq!(p_los(p.phi, &p).unwrap(), 1.0 / (1.0 + p.phi));
        let top = p_los(90.0, &p).unwrap();
        assert!(top > 0.99 && top < 1.0);
        assert_relative_eq!(
            p_los(0.0, &p).unwrap(),
            0.02187262123328341,
            max_relative = 1e-12
        );
        assert!(p_los(-0.1, &p).is_err());
        assert!(p_los(90.5, &p).is_err());
    }

    #[test]
    fn sinr_examples() {
        assert_eq!(sinr(0.0, 12.0, 1.0).unwrap(), 0.0);
        assert_eq!(sinr(2.0, 3.0, 1.0).unwrap(), 0.5);
        assert_eq!(sinr(4.0, 0.0, 1.0).unwrap(), 4.0);
        assert!(sinr(-1.0, 0.0, 1.0).is_err());
        assert!(sinr(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn channel_params_validation() {
        let mut p = urban();
        assert!(p.validate().is_ok());
        p.beta_nlos = 2.0;
        assert!(p.validate().is_ok());
        p.sigma2 = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn weights_for_mean_midpoint_is_uniform() {
        let w = weights_for_mean(&LEVELS, 0.3, 7.0).unwrap();
        assert_eq!(w[0], 0.3);
        for wk in &w[1..] {
            assert_relative_eq!(*wk, 0.7 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weights_for_mean_near_upper_bound() {
        let w = weights_for_mean(&LEVELS, 0.3, 10.49).unwrap();
        let mean: f64 = w.iter().zip(LEVELS).map(|(w, l)| w * l).sum();
        assert!((mean - 10.49).abs() < 1e-9);
        assert!(w[3] / 0.7 > 0.99, "conditional mass on top level {}", w[3] / 0.7);
    }

    #[test]
    fn weights_for_mean_rejects_infeasible() {
        match weights_for_mean(&LEVELS, 0.3, 12.0) {
            Err(ChannelError::InfeasibleMean { low, high, .. }) => {
                assert_relative_eq!(low, 3.5, epsilon = 1e-12);
                assert_relative_eq!(high, 10.5, epsilon = 1e-12);
            }
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(weights_for_mean(&LEVELS, 0.3, 3.5).is_err());
        assert!(weights_for_mean(&LEVELS, 1.0, 5.0).is_err());
        assert!(weights_for_mean(&[0.0], 0.3, 1.0).is_err());
    }

    #[test]
    fn jammer_process_rejects_bad_inputs() {
        assert!(JammerProcess::new(vec![1.0, 5.0], vec![0.5, 0.5]).is_err());
        assert!(JammerProcess::new(vec![0.0, 5.0, 5.0], vec![0.5, 0.25, 0.25]).is_err());
        assert!(JammerProcess::new(vec![0.0, 5.0], vec![0.5, 0.6]).is_err());
        assert!(JammerProcess::new(vec![0.0, 5.0], vec![1.5, -0.5]).is_err());
        let p = JammerProcess::new(vec![0.0, 5.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(p.p_avg(), 2.5);
    }

    #[test]
    fn degenerate_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let off = JammerProcess::new(LEVELS.to_vec(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let top = JammerProcess::new(LEVELS.to_vec(), vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        for _ in 0..10_000 {
            assert_eq!(sample_level(&off, &mut rng), 0);
            assert_eq!(sample_level(&top, &mut rng), 3);
        }
    }

    #[test]
    fn sampling_frequencies_match_weights() {
        let p = JammerProcess::from_mean(LEVELS.to_vec(), 0.3, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_level(&p, &mut rng)] += 1;
        }
        for (c, w) in counts.iter().zip(p.weights()) {
            let freq = *c as f64 / n as f64;
            let sigma = (w * (1.0 - w) / n as f64).sqrt();
            assert!((freq - w).abs() <= 3.0 * sigma, "freq {freq} weight {w}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let p = JammerProcess::from_mean(LEVELS.to_vec(), 0.3, 7.0).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample_level(&p, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_power(0.0, &LEVELS), 0);
        assert_eq!(quantize_power(7.5, &LEVELS), 1);
        assert_eq!(quantize_power(13.0, &LEVELS), 3);
        assert_eq!(quantize_power(1e6, &LEVELS), 3);
    }

    #[test]
    fn jammed_conditional_handles_never_jamming() {
        let p = JammerProcess::new(LEVELS.to_vec(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.jammed_conditional(), vec![0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let q = JammerProcess::new(LEVELS.to_vec(), vec![0.2, 0.4, 0.4, 0.0]).unwrap();
        assert_eq!(q.jammed_conditional(), vec![0.0, 0.5, 0.5, 0.0]);
    }

    /// Distance at which the mixed received power equals `target` watts.
    fn distance_for_power(target: f64, elevation: f64, tx: f64, p: &ChannelParams<f64>) -> f64 {
        let plos = p_los(elevation, p).unwrap();
        let beta = plos * p.beta_los + (1.0 - plos) * p.beta_nlos;
        (tx * beta / target).powf(1.0 / p.alpha)
    }

    #[test]
    fn scenario_point_mass_and_mixture() {
        let p = urban();
        let tx = 1e6;
        let at = |power, prob| Geometry {
            distance: distance_for_power(power, 45.0, tx, &p),
            elevation_deg: 45.0,
            probability: prob,
        };
        let single = scenario_to_process(&[at(10.2, 1.0)], tx, &p, &LEVELS).unwrap();
        assert_eq!(single.weights(), &[0.0, 0.0, 1.0, 0.0]);
        let mix = scenario_to_process(&[at(4.0, 0.5), at(16.0, 0.5)], tx, &p, &LEVELS).unwrap();
        assert_eq!(mix.weights(), &[0.0, 0.5, 0.0, 0.5]);
        assert!(scenario_to_process(&[at(4.0, 0.4)], tx, &p, &LEVELS).is_err());
        assert!(scenario_to_process(&[], tx, &p, &LEVELS).is_err());
    }

    proptest! {
        #[test]
        fn p_los_monotone(phi in 0.1f64..30.0, psi in 0.01f64..1.0, a in 0.0f64..90.0, b in 0.0f64..90.0) {
            let params = ChannelParams { phi, psi, ..urban() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(p_los(lo, &params).unwrap() <= p_los(hi, &params).unwrap());
        }

        #[test]
        fn path_loss_decreasing(alpha in 0.5f64..5.0, d in 0.1f64..1e4, step in 1e-3f64..1e3, los: bool) {
            let params = ChannelParams { alpha, ..urban() };
            prop_assert!(path_loss(d + step, los, &params).unwrap() < path_loss(d, los, &params).unwrap());
        }

        #[test]
        fn sinr_monotone(pr in 0.0f64..100.0, pj in 0.0f64..100.0, dp in 1e-3f64..10.0, s2 in 1e-3f64..10.0) {
            prop_assert!(sinr(pr, pj + dp, s2).unwrap() <= sinr(pr, pj, s2).unwrap());
            prop_assert!(sinr(pr + dp, pj, s2).unwrap() > sinr(pr, pj, s2).unwrap());
        }

        #[test]
        fn weights_for_mean_hits_target(p_off in 0.0f64..0.95, frac in 0.001f64..0.999) {
            let low = (1.0 - p_off) * 5.0;
            let high = (1.0 - p_off) * 15.0;
            let target = low + frac * (high - low);
            let w = weights_for_mean(&LEVELS, p_off, target).unwrap();
            let process = JammerProcess::new(LEVELS.to_vec(), w.clone()).unwrap();
            prop_assert!((process.p_avg() - target).abs() < 1e-9);
            prop_assert_eq!(w[0], p_off);
        }

        #[test]
        fn quantize_matches_brute_force(p in 0.0f64..40.0, raw in proptest::collection::vec(0.1f64..10.0, 1..6)) {
            let mut levels = vec![0.0];
            for step in raw {
                let next = levels.last().unwrap() + step;
                levels.push(next);
            }
            let gaps: Vec<f64> = levels.iter().map(|l| (p - l).abs()).collect();
            let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
            let expected = gaps.iter().position(|g| *g == min).unwrap();
            prop_assert_eq!(quantize_power(p, &levels), expected);
        }

        #[test]
        fn scenario_output_is_valid(
            raw in proptest::collection::vec((1.0f64..2000.0, 0.0f64..90.0, 0.01f64..1.0), 1..8),
            tx in 1.0f64..1e7,
        ) {
            let total: f64 = raw.iter().map(|r| r.2).sum();
            let geoms: Vec<Geometry<f64>> = raw
                .iter()
                .map(|&(distance, elevation_deg, w)| Geometry { distance, elevation_deg, probability: w / total })
                .collect();
            let sum: f64 = geoms.iter().map(|g| g.probability).sum();
            prop_assume!((sum - 1.0).abs() < 1e-12);
            let proc_ = scenario_to_process(&geoms, tx, &urban(), &LEVELS).unwrap();
            let wsum: f64 = proc_.weights().iter().sum();
            prop_assert!((wsum - 1.0).abs() < 1e-12);
            let mean: f64 = proc_.weights().iter().zip(LEVELS).map(|(w, l)| w * l).sum();
            prop_assert!((proc_.p_avg() - mean).abs() < 1e-12);
        }
    }
}

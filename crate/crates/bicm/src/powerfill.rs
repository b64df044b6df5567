//! Power allocation across parallel Gaussian-noise channels.
//!
//! Channel `k` carries power `p_k` at effective snr `g_k * p_k`; the goal is
//! to maximize the total mutual information subject to `sum_k p_k = P`. The
//! gradient of channel `k`'s information with respect to its power is
//! `g_k * D(g_k p_k)`, where `D` is the constellation MMSE in CM mode, the
//! BICM mutual-information derivative in BICM mode, or `1/(1 + snr)` for
//! Gaussian inputs.
//!
//! [`allocate`] solves the KKT conditions — a common water level `lambda`
//! with `marginal_utility_k(p_k) = lambda` on active channels and
//! `marginal_utility_k(0) <= lambda` on idle ones — by bisecting `lambda`
//! and inverting each channel's marginal-utility curve. BICM derivatives are
//! not assumed monotone: each curve is scanned on a grid first, and a
//! non-monotone channel falls back to rightmost-crossing bracketing on a
//! refined grid, with the result verified a posteriori by a power
//! perturbation probe.

use rayon::prelude::*;
use std::fs;
use std::path::Path;

use crate::constellation::Constellation;
use crate::infotheory::{self, Snr};
use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

/// Input distribution carried by one parallel channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelInput {
    /// Gaussian input with analytic information and MMSE.
    Gaussian,
    /// Coded modulation over a constellation.
    Cm(Constellation),
    /// BICM over a labeled constellation.
    Bicm(Constellation),
}

impl ChannelInput {
    /// Short name of the input kind, as used in problem files.
    pub fn mode_name(&self) -> &'static str {
        match self {
            ChannelInput::Gaussian => "gaussian",
            ChannelInput::Cm(_) => "cm",
            ChannelInput::Bicm(_) => "bicm",
        }
    }
}

/// One parallel channel: a power gain and an input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub gain: f64,
    pub input: ChannelInput,
}

/// A power-allocation problem: channels plus a total power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelChannelSet {
    channels: Vec<Channel>,
    budget: f64,
}

/// Result of [`allocate`]: per-channel powers summing to the budget, the
/// water level (constraint dual value), the total information in nats, and
/// the worst deviation of an active channel's marginal utility from the
/// water level.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub powers: Vec<f64>,
    pub multiplier: f64,
    pub objective: f64,
    pub kkt_residual: f64,
}

impl ParallelChannelSet {
    pub fn new(channels: Vec<Channel>, budget: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidParameter(
                "a channel set needs at least one channel".into(),
            ));
        }
        for (k, ch) in channels.iter().enumerate() {
            if !ch.gain.is_finite() || ch.gain <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "channel {k} gain must be positive and finite, got {}",
                    ch.gain
                )));
            }
        }
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "budget must be positive and finite, got {budget}"
            )));
        }
        Ok(Self { channels, budget })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Reads a problem file: a `budget <P>` header line, then one channel
    /// per line as `<gain> <input> [cm|bicm]`, where `<input>` is `gaussian`,
    /// a built-in spec `family,m,labeling`, or a path to a constellation
    /// file (resolved relative to the problem file).
    pub fn load_from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses the problem file format with `base` as the directory for
    /// relative constellation paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut budget: Option<f64> = None;
        let mut channels = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if budget.is_none() {
                if fields.len() != 2 || fields[0] != "budget" {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "expected header `budget <P>`".into(),
                    });
                }
                let value: f64 = fields[1].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid budget `{}`", fields[1]),
                })?;
                budget = Some(value);
                continue;
            }

            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected `<gain> <input> [cm|bicm]`".into(),
                });
            }
            let gain: f64 = fields[0].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid gain `{}`", fields[0]),
            })?;

            let input = if fields[1].eq_ignore_ascii_case("gaussian") {
                ChannelInput::Gaussian
            } else {
                let mode = fields.get(2).copied().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "constellation channels need a mode (cm or bicm)".into(),
                })?;
                let constellation = if fields[1].contains(',') {
                    Constellation::build_from_spec(fields[1]).map_err(|e| Error::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?
                } else {
                    let path = base.join(fields[1]);
                    let file = fs::File::open(&path).map_err(|e| Error::Parse {
                        line: line_no,
                        message: format!("cannot open `{}`: {e}", path.display()),
                    })?;
                    Constellation::load(std::io::BufReader::new(file))?
                };
                match mode.to_ascii_lowercase().as_str() {
                    "cm" => ChannelInput::Cm(constellation),
                    "bicm" => ChannelInput::Bicm(constellation),
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("unknown mode `{other}` (expected cm or bicm)"),
                        })
                    }
                }
            };
            channels.push(Channel { gain, input });
        }

        let budget = budget.ok_or(Error::Parse {
            line: 0,
            message: "missing `budget <P>` header".into(),
        })?;
        Self::new(channels, budget)
    }
}

/// `d I_k / d p` at power `p`: the channel gain times the input's
/// information derivative at the effective snr `gain * p`.
pub fn marginal_utility(channel: &Channel, power: f64, rule: &QuadratureRule) -> Result<f64> {
    if !power.is_finite() || power < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "power must be non-negative, got {power}"
        )));
    }
    let snr = Snr::new(channel.gain * power)?;
    let derivative = match &channel.input {
        ChannelInput::Gaussian => infotheory::gaussian_mmse(snr),
        ChannelInput::Cm(c) => infotheory::mmse_cm(c.points(), snr, rule)?,
        ChannelInput::Bicm(c) => infotheory::bicm_mi_derivative(c, snr, rule)?,
    };
    Ok(channel.gain * derivative)
}

/// Mutual information of one channel at power `p`, in nats.
pub fn channel_mi(channel: &Channel, power: f64, rule: &QuadratureRule) -> Result<f64> {
    let snr = Snr::new(channel.gain * power)?;
    match &channel.input {
        ChannelInput::Gaussian => Ok(snr.value().ln_1p()),
        ChannelInput::Cm(c) => infotheory::mi_cm(c.points(), snr, rule),
        ChannelInput::Bicm(c) => infotheory::mi_bicm_direct(c, snr, rule),
    }
}

/// Total information of an allocation, in nats.
pub fn objective(set: &ParallelChannelSet, powers: &[f64], rule: &QuadratureRule) -> Result<f64> {
    if powers.len() != set.channels.len() {
        return Err(Error::InvalidParameter(
            "power vector length does not match channel count".into(),
        ));
    }
    let mut total = 0.0;
    for (channel, &p) in set.channels.iter().zip(powers) {
        total += channel_mi(channel, p, rule)?;
    }
    Ok(total)
}

/// Largest improvement in the objective obtainable by moving `fraction` of
/// the budget between any ordered pair of active channels. A near-optimal
/// allocation returns a value at or below numerical noise.
pub fn perturbation_probe(
    set: &ParallelChannelSet,
    powers: &[f64],
    rule: &QuadratureRule,
    fraction: f64,
) -> Result<f64> {
    let base = objective(set, powers, rule)?;
    let delta = fraction * set.budget();
    let mut best = f64::NEG_INFINITY;
    let active: Vec<usize> = (0..powers.len()).filter(|&k| powers[k] > 0.0).collect();
    for &to in &active {
        for &from in &active {
            if to == from {
                continue;
            }
            let step = delta.min(powers[from]);
            if step <= 0.0 {
                continue;
            }
            let mut trial = powers.to_vec();
            trial[to] += step;
            trial[from] -= step;
            best = best.max(objective(set, &trial, rule)? - base);
        }
    }
    if best == f64::NEG_INFINITY {
        best = 0.0;
    }
    Ok(best)
}

/// Cached marginal-utility samples for one channel over `[0, budget]`.
struct UtilityCurve<'a> {
    channel: &'a Channel,
    grid: Vec<f64>,
    values: Vec<f64>,
    monotone: bool,
}

const COARSE_GRID: usize = 33;
const REFINED_GRID: usize = 129;

impl<'a> UtilityCurve<'a> {
    fn build(channel: &'a Channel, budget: f64, rule: &QuadratureRule) -> Result<Self> {
        // Gaussian marginals invert in closed form; a two-point grid only
        // records the endpoints.
        let samples = match channel.input {
            ChannelInput::Gaussian => 2,
            _ => COARSE_GRID,
        };
        let mut curve = Self::sampled(channel, budget, rule, samples)?;
        if !curve.monotone {
            // Possible for BICM derivatives; rescan finer so the rightmost
            // crossing search sees the humps.
            curve = Self::sampled(channel, budget, rule, REFINED_GRID)?;
        }
        Ok(curve)
    }

    fn sampled(
        channel: &'a Channel,
        budget: f64,
        rule: &QuadratureRule,
        samples: usize,
    ) -> Result<Self> {
        let grid: Vec<f64> = (0..samples)
            .map(|k| budget * k as f64 / (samples - 1) as f64)
            .collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|&p| marginal_utility(channel, p, rule))
            .collect::<Result<_>>()?;
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let monotone = values
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * scale.max(1.0));
        Ok(Self {
            channel,
            grid,
            values,
            monotone,
        })
    }

    fn utility_at_zero(&self) -> f64 {
        self.values[0]
    }

    /// Largest power in `[0, budget]` whose marginal utility still reaches
    /// `level`: zero if even idle utility falls short (hard sparsity), the
    /// full budget if the curve never drops below `level`, otherwise the
    /// rightmost crossing refined by a bracketed secant iteration.
    fn invert(&self, level: f64, inner_tol: f64, rule: &QuadratureRule) -> Result<f64> {
        if let ChannelInput::Gaussian = self.channel.input {
            let g = self.channel.gain;
            if g <= level {
                return Ok(0.0);
            }
            let p = 1.0 / level - 1.0 / g;
            return Ok(p.min(*self.grid.last().unwrap()));
        }
        if self.utility_at_zero() <= level {
            return Ok(0.0);
        }
        let last = self.grid.len() - 1;
        if self.values[last] >= level {
            return Ok(self.grid[last]);
        }
        let cell = (0..last)
            .rev()
            .find(|&j| self.values[j] >= level)
            .expect("utility at zero exceeds level");
        self.refine(cell, level, inner_tol, rule)
    }

    fn refine(&self, cell: usize, level: f64, inner_tol: f64, rule: &QuadratureRule) -> Result<f64> {
        let mut lo = self.grid[cell];
        let mut f_lo = self.values[cell] - level;
        let mut hi = self.grid[cell + 1];
        let mut f_hi = self.values[cell + 1] - level;
        if f_lo.abs() <= inner_tol {
            return Ok(lo);
        }
        let mut kept_side = 0i8;
        for _ in 0..80 {
            let mut mid = (f_lo * hi - f_hi * lo) / (f_lo - f_hi);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let f_mid = marginal_utility(self.channel, mid, rule)? - level;
            if f_mid.abs() <= inner_tol {
                return Ok(mid);
            }
            if f_mid > 0.0 {
                lo = mid;
                f_lo = f_mid;
                if kept_side == 1 {
                    f_hi *= 0.5;
                }
                kept_side = 1;
            } else {
                hi = mid;
                f_hi = f_mid;
                if kept_side == -1 {
                    f_lo *= 0.5;
                }
                kept_side = -1;
            }
            if hi - lo < 1e-15 * (1.0 + hi) {
                break;
            }
        }
        Ok(if f_lo.abs() <= (-f_hi).abs() { lo } else { hi })
    }
}

/// Maximizes the total mutual information under the power budget by outer
/// bisection on the water level and per-channel inversion of the marginal
/// utilities. The returned allocation satisfies `sum p = P` within 1e-9 and
/// `kkt_residual <= tol`.
pub fn allocate(set: &ParallelChannelSet, tol: f64, rule: &QuadratureRule) -> Result<Allocation> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let budget = set.budget();
    let curves: Vec<UtilityCurve> = set
        .channels
        .par_iter()
        .map(|ch| UtilityCurve::build(ch, budget, rule))
        .collect::<Result<_>>()?;
    let fallback_used = curves.iter().any(|c| !c.monotone);
    let inner_tol = tol * 0.25;

    let peak = curves
        .iter()
        .map(|c| c.utility_at_zero())
        .fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::BracketFailure {
            lo: 0.0,
            hi: peak,
            budget,
        });
    }

    let powers_at = |level: f64| -> Result<Vec<f64>> {
        curves
            .par_iter()
            .map(|c| c.invert(level, inner_tol, rule))
            .collect()
    };

    let mut level_lo = 0.0;
    let mut level_hi = peak * (1.0 + 1e-12) + 1e-300;
    let mut best = powers_at(level_lo)?;
    let mut best_sum: f64 = best.iter().sum();
    let mut best_level = level_lo;
    if best_sum < budget - 1e-9 {
        return Err(Error::BracketFailure {
            lo: level_lo,
            hi: level_hi,
            budget,
        });
    }
    // The largest water level that still absorbs the whole budget is the
    // KKT multiplier; track the feasible side of the bracket. Channels
    // clamped at the full budget make sum(level) constant over an interval,
    // so the loop runs until the bracket collapses rather than stopping at
    // the first level whose powers happen to sum to the budget.
    for _ in 0..120 {
        let mid = 0.5 * (level_lo + level_hi);
        let powers = powers_at(mid)?;
        let sum: f64 = powers.iter().sum();
        if sum >= budget {
            best = powers;
            best_sum = sum;
            best_level = mid;
            level_lo = mid;
        } else {
            level_hi = mid;
        }
        if level_hi - level_lo <= 1e-15 * peak {
            break;
        }
    }

    let mut powers = best;
    let multiplier = best_level;
    let surplus = best_sum - budget;
    if surplus > 0.0 {
        let largest = powers
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .expect("non-empty powers");
        if powers[largest] < surplus {
            return Err(Error::AllocationFailure(format!(
                "cannot redistribute surplus {surplus} over allocation {powers:?}"
            )));
        }
        powers[largest] -= surplus;
    }

    let mut kkt_residual = 0.0f64;
    for (channel, &p) in set.channels.iter().zip(&powers) {
        if p > 0.0 {
            let utility = marginal_utility(channel, p, rule)?;
            kkt_residual = kkt_residual.max((utility - multiplier).abs());
        }
    }
    if kkt_residual > tol {
        return Err(Error::AllocationFailure(format!(
            "kkt residual {kkt_residual} exceeds tolerance {tol}"
        )));
    }
    if fallback_used {
        let improvement = perturbation_probe(set, &powers, rule, 0.01)?;
        if improvement > 1e-9 {
            return Err(Error::AllocationFailure(format!(
                "perturbation probe improved the objective by {improvement} nats"
            )));
        }
    }

    let objective = objective(set, &powers, rule)?;
    Ok(Allocation {
        powers,
        multiplier,
        objective,
        kkt_residual,
    })
}

/// Closed-form water-filling for Gaussian inputs: `p_k = max(0, W - 1/g_k)`
/// with the water level `W` chosen so the powers sum to the budget.
///
/// # Panics
///
/// Panics if `gains` is empty, any gain is non-positive, or the budget is
/// non-positive.
pub fn gaussian_reference_allocate(gains: &[f64], budget: f64) -> Allocation {
    assert!(!gains.is_empty(), "gains must be non-empty");
    assert!(
        gains.iter().all(|g| g.is_finite() && *g > 0.0),
        "gains must be positive"
    );
    assert!(budget > 0.0, "budget must be positive");

    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| (1.0 / gains[a]).total_cmp(&(1.0 / gains[b])));

    let mut water = 0.0;
    let mut active = 0;
    let mut prefix = 0.0;
    for s in 1..=order.len() {
        prefix += 1.0 / gains[order[s - 1]];
        let candidate = (budget + prefix) / s as f64;
        if candidate > 1.0 / gains[order[s - 1]] {
            water = candidate;
            active = s;
        }
    }

    let mut powers = vec![0.0; gains.len()];
    for &k in order.iter().take(active) {
        powers[k] = water - 1.0 / gains[k];
    }
    let multiplier = 1.0 / water;
    let objective = gains
        .iter()
        .zip(&powers)
        .map(|(g, p)| (g * p).ln_1p())
        .sum();
    let kkt_residual = gains
        .iter()
        .zip(&powers)
        .filter(|(_, &p)| p > 0.0)
        .map(|(g, &p)| (g / (1.0 + g * p) - multiplier).abs())
        .fold(0.0f64, f64::max);
    Allocation {
        powers,
        multiplier,
        objective,
        kkt_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{Family, Labeling};
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn rule() -> QuadratureRule {
        QuadratureRule::default_rule()
    }

    fn bpsk() -> Constellation {
        Constellation::build(Family::Pam, 1, Labeling::Gray).unwrap()
    }

    fn gaussian_set(gains: &[f64], budget: f64) -> ParallelChannelSet {
        let channels = gains
            .iter()
            .map(|&gain| Channel {
                gain,
                input: ChannelInput::Gaussian,
            })
            .collect();
        ParallelChannelSet::new(channels, budget).unwrap()
    }

    /// Independent water-filling oracle: bisection on the water level of the
    /// piecewise-linear equation `sum_k max(0, W - 1/g_k) = P`.
    fn waterfill_by_bisection(gains: &[f64], budget: f64) -> Vec<f64> {
        let mut lo = 0.0;
        let mut hi = budget + gains.iter().map(|g| 1.0 / g).fold(0.0f64, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let sum: f64 = gains.iter().map(|g| (mid - 1.0 / g).max(0.0)).sum();
            if sum > budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        gains.iter().map(|g| (lo - 1.0 / g).max(0.0)).collect()
    }

    #[test]
    fn reference_equal_gains_split_evenly() {
        let allocation = gaussian_reference_allocate(&[1.0, 1.0], 2.0);
        assert_abs_diff_eq!(allocation.powers[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(allocation.powers[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reference_deep_fade_gets_nothing() {
        let allocation = gaussian_reference_allocate(&[1.0, 1e-9], 0.5);
        assert_abs_diff_eq!(allocation.powers[0], 0.5, epsilon = 1e-12);
        assert_eq!(allocation.powers[1], 0.0);
    }

    #[test]
    fn reference_textbook_instance() {
        // gains {1, 1/4}, P = 3: the water level lands exactly on channel 2's
        // inverse gain, so it gets zero power.
        let allocation = gaussian_reference_allocate(&[1.0, 0.25], 3.0);
        assert_abs_diff_eq!(allocation.powers[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(allocation.powers[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(allocation.multiplier, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn reference_matches_independent_bisection() {
        let cases: [(&[f64], f64); 3] = [
            (&[1.0, 0.25], 3.0),
            (&[2.0, 1.0, 0.5, 0.1], 1.5),
            (&[0.3, 0.31, 5.0], 10.0),
        ];
        for (gains, budget) in cases {
            let reference = gaussian_reference_allocate(gains, budget);
            let oracle = waterfill_by_bisection(gains, budget);
            for (a, b) in reference.powers.iter().zip(&oracle) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn allocate_single_channel_takes_everything() {
        let set = gaussian_set(&[0.7], 2.5);
        let allocation = allocate(&set, 1e-6, &rule()).unwrap();
        assert_abs_diff_eq!(allocation.powers[0], 2.5, epsilon = 1e-9);
        assert!(allocation.kkt_residual <= 1e-6);
    }

    #[test]
    fn allocate_matches_closed_form_waterfilling() {
        let set = gaussian_set(&[1.0, 0.25], 3.0);
        let allocation = allocate(&set, 1e-6, &rule()).unwrap();
        let reference = gaussian_reference_allocate(&[1.0, 0.25], 3.0);
        for (a, b) in allocation.powers.iter().zip(&reference.powers) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        let sum: f64 = allocation.powers.iter().sum();
        assert_abs_diff_eq!(sum, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn allocate_identical_channels_uniformly() {
        let c = bpsk();
        let channels = vec![
            Channel {
                gain: 0.8,
                input: ChannelInput::Cm(c.clone()),
            };
            3
        ];
        let set = ParallelChannelSet::new(channels, 1.8).unwrap();
        let allocation = allocate(&set, 1e-6, &rule()).unwrap();
        for &p in &allocation.powers {
            assert_abs_diff_eq!(p, 0.6, epsilon = 1e-6);
        }
        let uniform = objective(&set, &[0.6, 0.6, 0.6], &rule()).unwrap();
        assert!(allocation.objective >= uniform - 1e-9);
    }

    #[test]
    fn allocate_objective_monotone_in_budget() {
        let gains = [1.2, 0.4, 0.9];
        let small = allocate(&gaussian_set(&gains, 1.0), 1e-6, &rule()).unwrap();
        let large = allocate(&gaussian_set(&gains, 2.0), 1e-6, &rule()).unwrap();
        assert!(large.objective >= small.objective);
    }

    #[test]
    fn marginal_utility_at_zero_power() {
        let r = rule();
        let cm = Channel {
            gain: 1.7,
            input: ChannelInput::Cm(bpsk()),
        };
        assert_abs_diff_eq!(marginal_utility(&cm, 0.0, &r).unwrap(), 1.7, epsilon = 1e-9);

        let c16 = Constellation::build(Family::Qam, 4, Labeling::Gray).unwrap();
        let slope = infotheory::low_snr_slope(&c16);
        let bicm = Channel {
            gain: 0.9,
            input: ChannelInput::Bicm(c16),
        };
        assert_abs_diff_eq!(
            marginal_utility(&bicm, 0.0, &r).unwrap(),
            0.9 * slope,
            epsilon = 1e-12
        );
    }

    #[test]
    fn marginal_utility_matches_finite_difference() {
        let r = rule();
        let channel = Channel {
            gain: 1.4,
            input: ChannelInput::Cm(bpsk()),
        };
        for p in [0.1, 0.6, 2.0] {
            let h = 1e-5;
            let hi = channel_mi(&channel, p + h, &r).unwrap();
            let lo = channel_mi(&channel, p - h, &r).unwrap();
            let fd = (hi - lo) / (2.0 * h);
            let utility = marginal_utility(&channel, p, &r).unwrap();
            assert!(
                (fd - utility).abs() < 1e-5,
                "p {p}: fd {fd} vs utility {utility}"
            );
        }
    }

    #[test]
    fn bicm_allocation_passes_probe() {
        // KKT consistency is internal to whatever rule the solver uses, so a
        // small order keeps this fast; the acceptance suite runs the full
        // 4-channel instance at the default order.
        let rule = QuadratureRule::gauss_hermite(32).unwrap();
        let c = Constellation::build(Family::Qam, 4, Labeling::Gray).unwrap();
        let gains = [1.0, 0.6];
        let channels = gains
            .iter()
            .map(|&gain| Channel {
                gain,
                input: ChannelInput::Bicm(c.clone()),
            })
            .collect();
        let set = ParallelChannelSet::new(channels, 2.0).unwrap();
        let allocation = allocate(&set, 1e-6, &rule).unwrap();
        assert!(allocation.kkt_residual <= 1e-6);
        let sum: f64 = allocation.powers.iter().sum();
        assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-9);
        let improvement = perturbation_probe(&set, &allocation.powers, &rule, 0.01).unwrap();
        assert!(improvement <= 1e-9, "probe found improvement {improvement}");
    }

    #[test]
    fn problem_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let constellation_path = dir.path().join("custom.txt");
        let mut file = std::fs::File::create(&constellation_path).unwrap();
        writeln!(file, "1 0 0\n-1 0 1").unwrap();

        let text = "\
# two channels
budget 2.5
1.0 gaussian
0.5 qam,4,gray bicm
0.25 custom.txt cm
";
        let set = ParallelChannelSet::parse(text, dir.path()).unwrap();
        assert_eq!(set.budget(), 2.5);
        assert_eq!(set.channels().len(), 3);
        assert_eq!(set.channels()[0].input.mode_name(), "gaussian");
        assert_eq!(set.channels()[1].input.mode_name(), "bicm");
        match &set.channels()[2].input {
            ChannelInput::Cm(c) => assert_eq!(c.len(), 2),
            other => panic!("expected cm channel, got {other:?}"),
        }
    }

    #[test]
    fn problem_file_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        match ParallelChannelSet::parse("budget 1\nnot_a_gain gaussian\n", dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match ParallelChannelSet::parse("1.0 gaussian\n", dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected missing-budget error, got {other:?}"),
        }
        match ParallelChannelSet::parse("budget 1\n0.5 qam,4,gray\n", dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected missing-mode error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let set = gaussian_set(&[1.0], 1.0);
        assert!(matches!(
            allocate(&set, 0.0, &rule()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(ParallelChannelSet::new(vec![], 1.0).is_err());
        assert!(ParallelChannelSet::new(
            vec![Channel {
                gain: -1.0,
                input: ChannelInput::Gaussian
            }],
            1.0
        )
        .is_err());
    }
}

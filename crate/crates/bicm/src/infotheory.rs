//! Mutual information, MMSE, and the BICM mutual-information derivative.
//!
//! For the channel `y = sqrt(snr) x + z`, `z ~ CN(0, 1)`, with `x` uniform on
//! a finite set `A`:
//!
//! - [`mi_cm`] is the coded-modulation mutual information `I_A(snr)` in nats,
//! - [`mmse_cm`] is the MMSE of estimating `x` from `y`, which equals
//!   `d I_A / d snr`,
//! - [`mi_bicm_direct`] sums the `m` binary subchannel informations of the
//!   non-iterative BICM decoder directly,
//! - [`mi_bicm_decomposed`] evaluates the same quantity as
//!   `sum_i (1/2) sum_b (I_X - I_{X_b^i})` over the labeling subsets,
//! - [`bicm_mi_derivative`] is its derivative,
//!   `sum_i (1/2) sum_b (mmse_X - mmse_{X_b^i})`,
//! - [`low_snr_slope`] and [`mmse_zero_snr_limit`] are the closed-form
//!   `snr -> 0` limits.
//!
//! Every exponent of the form `-|sqrt(snr)(a - a') + z|^2` is handled in the
//! log domain with max-subtraction: at 30 dB the raw exponentials underflow,
//! while the stabilized ratios stay exact.
//!
//! The averaging prefactor over a point set is always `1/|A|` for the set
//! actually passed, so the same code serves full constellations and labeling
//! subsets.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{LN_2, PI};

use crate::constellation::Constellation;
use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

/// Linear signal-to-noise ratio. Non-negative and finite by construction;
/// dB conversions belong at I/O boundaries.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr(f64);

impl Snr {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidSnr(value));
        }
        Ok(Self(value))
    }

    /// `snr = 10^(db/10)`.
    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10.0_f64.powf(db / 10.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `10 log10(snr)`; negative infinity at zero snr.
    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// Which quantity a [`Curve`] samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    MiCm,
    MiBicm,
    Mmse,
    BicmDerivative,
}

/// A quantity sampled on a strictly increasing snr grid. Values are nats for
/// mutual informations and nats per unit snr for derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    snr_grid: Vec<Snr>,
    values: Vec<f64>,
    kind: CurveKind,
}

impl Curve {
    pub fn new(snr_grid: Vec<Snr>, values: Vec<f64>, kind: CurveKind) -> Result<Self> {
        if snr_grid.len() != values.len() || snr_grid.is_empty() {
            return Err(Error::InvalidGrid);
        }
        if snr_grid.windows(2).any(|w| w[0].value() >= w[1].value()) {
            return Err(Error::InvalidGrid);
        }
        Ok(Self {
            snr_grid,
            values,
            kind,
        })
    }

    pub fn snr_grid(&self) -> &[Snr] {
        &self.snr_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn ensure_nonempty(points: &[Complex64]) -> Result<()> {
    if points.is_empty() {
        Err(Error::EmptySet)
    } else {
        Ok(())
    }
}

fn mean_energy(points: &[Complex64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

fn mean(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

/// `|conditional mean of A given y|^2` at noise realization `z`, where
/// `diffs[q] = sqrt(snr) (a - a_q)` for the transmitted point `a`. Stabilized
/// by subtracting the largest exponent before exponentiating.
fn conditional_mean_norm_sqr(points: &[Complex64], diffs: &[Complex64], z: Complex64) -> f64 {
    let mut max_exponent = f64::NEG_INFINITY;
    for &d in diffs {
        max_exponent = max_exponent.max(-(d + z).norm_sqr());
    }
    let mut numerator = Complex64::new(0.0, 0.0);
    let mut denominator = 0.0;
    for (&d, &a) in diffs.iter().zip(points) {
        let w = (-(d + z).norm_sqr() - max_exponent).exp();
        numerator += a * w;
        denominator += w;
    }
    (numerator / denominator).norm_sqr()
}

/// `log sum_q exp(-|diffs[q] + z|^2)` with max-subtraction.
fn log_sum_exp_shifted(diffs: &[Complex64], z: Complex64) -> f64 {
    let mut max_exponent = f64::NEG_INFINITY;
    for &d in diffs {
        max_exponent = max_exponent.max(-(d + z).norm_sqr());
    }
    let mut sum = 0.0;
    for &d in diffs {
        sum += (-(d + z).norm_sqr() - max_exponent).exp();
    }
    max_exponent + sum.ln()
}

/// MMSE of estimating a uniformly drawn point of `a` from the channel output:
/// `E[|A|^2] - (1/|A|) sum_a E_Z |E[A | y]|^2`.
pub fn mmse_cm(a: &[Complex64], snr: Snr, rule: &QuadratureRule) -> Result<f64> {
    ensure_nonempty(a)?;
    let root_snr = snr.value().sqrt();
    let mut estimator_energy = 0.0;
    let mut diffs = vec![Complex64::new(0.0, 0.0); a.len()];
    for &sent in a {
        for (d, &other) in diffs.iter_mut().zip(a) {
            *d = root_snr * (sent - other);
        }
        estimator_energy +=
            rule.expect_complex_gaussian(|z| conditional_mean_norm_sqr(a, &diffs, z))?;
    }
    let value = mean_energy(a) - estimator_energy / a.len() as f64;
    if !value.is_finite() {
        return Err(Error::NonFinite("mmse_cm"));
    }
    Ok(value)
}

/// MMSE of a Gaussian input, `1 / (1 + snr)`.
pub fn gaussian_mmse(snr: Snr) -> f64 {
    1.0 / (1.0 + snr.value())
}

/// Closed-form zero-snr MMSE limit, `E[|A|^2] - |E[A]|^2`.
pub fn mmse_zero_snr_limit(a: &[Complex64]) -> Result<f64> {
    ensure_nonempty(a)?;
    Ok(mean_energy(a) - mean(a).norm_sqr())
}

/// Coded-modulation mutual information of a uniform input on `a`, in nats.
///
/// Evaluated as `E_{X,Z}[ log |A| - lse_q(-|sqrt(snr)(X - a_q) + Z|^2) - |Z|^2 ]`,
/// which is exactly zero at zero snr and saturates at `log |A|`.
pub fn mi_cm(a: &[Complex64], snr: Snr, rule: &QuadratureRule) -> Result<f64> {
    ensure_nonempty(a)?;
    let root_snr = snr.value().sqrt();
    let log_cardinality = (a.len() as f64).ln();
    let mut total = 0.0;
    let mut diffs = vec![Complex64::new(0.0, 0.0); a.len()];
    for &sent in a {
        for (d, &other) in diffs.iter_mut().zip(a) {
            *d = root_snr * (sent - other);
        }
        total += rule.expect_complex_gaussian(|z| {
            log_cardinality - log_sum_exp_shifted(&diffs, z) - z.norm_sqr()
        })?;
    }
    let value = total / a.len() as f64;
    if !value.is_finite() {
        return Err(Error::NonFinite("mi_cm"));
    }
    Ok(value)
}

/// BICM mutual information summed directly over the `m` binary subchannels:
/// for each bit position the per-symbol term is
/// `log( sum_{x' in X_b^i} e^{-|sqrt(snr)(X-x')+Z|^2} / ((1/2) sum_{x' in X} ...) )`
/// with `b` the transmitted symbol's bit. Uniform `b` plus uniform `X` within
/// `X_b^i` is the same as uniform `X` over the whole constellation.
pub fn mi_bicm_direct(c: &Constellation, snr: Snr, rule: &QuadratureRule) -> Result<f64> {
    let points = c.points();
    let m = c.bits_per_symbol();
    let root_snr = snr.value().sqrt();
    let nodes = rule.nodes();
    let weights = rule.weights();

    let mut total = 0.0;
    let mut diffs = vec![Complex64::new(0.0, 0.0); points.len()];
    let mut likelihood = vec![0.0; points.len()];
    for (p, &sent) in points.iter().enumerate() {
        for (d, &other) in diffs.iter_mut().zip(points) {
            *d = root_snr * (sent - other);
        }
        for (&u, &wu) in nodes.iter().zip(weights) {
            for (&v, &wv) in nodes.iter().zip(weights) {
                let z = Complex64::new(u, v);
                let mut max_exponent = f64::NEG_INFINITY;
                for &d in diffs.iter() {
                    max_exponent = max_exponent.max(-(d + z).norm_sqr());
                }
                let mut full_sum = 0.0;
                for (q, &d) in diffs.iter().enumerate() {
                    likelihood[q] = (-(d + z).norm_sqr() - max_exponent).exp();
                    full_sum += likelihood[q];
                }
                let mut symbol_term = 0.0;
                for position in 1..=m {
                    let b = c.label_bit(p, position);
                    let mut subset_sum = 0.0;
                    for (q, &w) in likelihood.iter().enumerate() {
                        if c.label_bit(q, position) == b {
                            subset_sum += w;
                        }
                    }
                    symbol_term += subset_sum.ln() - full_sum.ln() + LN_2;
                }
                if !symbol_term.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        re: u,
                        im: v,
                        value: symbol_term,
                    });
                }
                total += wu * wv * symbol_term;
            }
        }
    }
    Ok(total / (PI * points.len() as f64))
}

/// BICM mutual information as the subset decomposition
/// `sum_i (1/2) sum_b (I_X(snr) - I_{X_b^i}(snr))`.
pub fn mi_bicm_decomposed(c: &Constellation, snr: Snr, rule: &QuadratureRule) -> Result<f64> {
    let full = mi_cm(c.points(), snr, rule)?;
    let mut total = 0.0;
    for position in 1..=c.bits_per_symbol() {
        for b in [0u8, 1] {
            let sub = c.subset(position, b)?;
            total += 0.5 * (full - mi_cm(sub.points(), snr, rule)?);
        }
    }
    Ok(total)
}

/// Derivative of the BICM mutual information with respect to snr:
/// `sum_i (1/2) sum_b (mmse_X(snr) - mmse_{X_b^i}(snr))`.
///
/// All subset MMSE terms share one likelihood table per transmitted symbol
/// and noise node, so the whole combination costs about as much as a single
/// full-constellation MMSE. The subsets' `E[|A|^2]` offsets cancel against
/// the full constellation's, leaving
/// `sum_i (acc_i - acc_full) / |X|` with `acc` the accumulated estimator
/// energies. At exactly zero snr the closed form [`low_snr_slope`] is
/// returned; the quadrature path agrees but the closed form has no
/// cancellation noise.
pub fn bicm_mi_derivative(c: &Constellation, snr: Snr, rule: &QuadratureRule) -> Result<f64> {
    if snr.value() == 0.0 {
        return Ok(low_snr_slope(c));
    }
    let points = c.points();
    let m = c.bits_per_symbol();
    let root_snr = snr.value().sqrt();
    let nodes = rule.nodes();
    let weights = rule.weights();

    let mut full_energy = 0.0;
    let mut subset_energy = vec![0.0; m];
    let mut diffs = vec![Complex64::new(0.0, 0.0); points.len()];
    let mut likelihood = vec![0.0; points.len()];
    for (p, &sent) in points.iter().enumerate() {
        for (d, &other) in diffs.iter_mut().zip(points) {
            *d = root_snr * (sent - other);
        }
        for (&u, &wu) in nodes.iter().zip(weights) {
            for (&v, &wv) in nodes.iter().zip(weights) {
                let z = Complex64::new(u, v);
                let node_weight = wu * wv;
                let mut max_exponent = f64::NEG_INFINITY;
                for &d in diffs.iter() {
                    max_exponent = max_exponent.max(-(d + z).norm_sqr());
                }
                let mut full_num = Complex64::new(0.0, 0.0);
                let mut full_den = 0.0;
                for (q, &d) in diffs.iter().enumerate() {
                    let w = (-(d + z).norm_sqr() - max_exponent).exp();
                    likelihood[q] = w;
                    full_num += points[q] * w;
                    full_den += w;
                }
                full_energy += node_weight * (full_num / full_den).norm_sqr();
                for position in 1..=m {
                    let b = c.label_bit(p, position);
                    let mut num = Complex64::new(0.0, 0.0);
                    let mut den = 0.0;
                    for (q, &w) in likelihood.iter().enumerate() {
                        if c.label_bit(q, position) == b {
                            num += points[q] * w;
                            den += w;
                        }
                    }
                    subset_energy[position - 1] += node_weight * (num / den).norm_sqr();
                }
            }
        }
    }

    let scale = 1.0 / (PI * points.len() as f64);
    let value: f64 = subset_energy
        .iter()
        .map(|&acc| (acc - full_energy) * scale)
        .sum();
    if !value.is_finite() {
        return Err(Error::NonFinite("bicm_mi_derivative"));
    }
    Ok(value)
}

/// Zero-snr limit of the BICM mutual-information derivative:
/// `sum_i (1/2) sum_b |E_{X_b^i}[X]|^2`.
pub fn low_snr_slope(c: &Constellation) -> f64 {
    let points = c.points();
    let m = c.bits_per_symbol();
    let mut total = 0.0;
    for position in 1..=m {
        for b in [0u8, 1] {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut count = 0usize;
            for (q, &point) in points.iter().enumerate() {
                if c.label_bit(q, position) == b {
                    sum += point;
                    count += 1;
                }
            }
            total += 0.5 * (sum / count as f64).norm_sqr();
        }
    }
    total
}

/// Samples one of the curve kinds over a strictly increasing snr grid. Grid
/// points are independent and evaluated in parallel; the result does not
/// depend on evaluation order.
pub fn sweep(
    c: &Constellation,
    grid: &[Snr],
    kind: CurveKind,
    rule: &QuadratureRule,
) -> Result<Curve> {
    let values = grid
        .par_iter()
        .map(|&snr| match kind {
            CurveKind::MiCm => mi_cm(c.points(), snr, rule),
            CurveKind::MiBicm => mi_bicm_direct(c, snr, rule),
            CurveKind::Mmse => mmse_cm(c.points(), snr, rule),
            CurveKind::BicmDerivative => bicm_mi_derivative(c, snr, rule),
        })
        .collect::<Result<Vec<f64>>>()?;
    Curve::new(grid.to_vec(), values, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{Family, Labeling};
    use approx::assert_abs_diff_eq;

    fn rule() -> QuadratureRule {
        QuadratureRule::default_rule()
    }

    fn bpsk() -> Constellation {
        Constellation::build(Family::Pam, 1, Labeling::Gray).unwrap()
    }

    fn qpsk() -> Constellation {
        Constellation::build(Family::Psk, 2, Labeling::Gray).unwrap()
    }

    fn qam16_gray() -> Constellation {
        Constellation::build(Family::Qam, 4, Labeling::Gray).unwrap()
    }

    fn qam16_sp() -> Constellation {
        Constellation::build(Family::Qam, 4, Labeling::SetPartitioning).unwrap()
    }

    fn snr(v: f64) -> Snr {
        Snr::new(v).unwrap()
    }

    #[test]
    fn snr_validation_and_db() {
        assert!(Snr::new(-0.5).is_err());
        assert!(Snr::new(f64::NAN).is_err());
        assert_abs_diff_eq!(Snr::from_db(10.0).unwrap().value(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(snr(100.0).db(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn mmse_at_zero_snr_matches_limit() {
        let c = qam16_gray();
        let value = mmse_cm(c.points(), snr(0.0), &rule()).unwrap();
        assert_abs_diff_eq!(value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn mmse_of_singleton_is_zero() {
        let single = [Complex64::new(1.0, 0.0)];
        for s in [0.0, 0.3, 7.0] {
            let value = mmse_cm(&single, snr(s), &rule()).unwrap();
            assert!(value.abs() < 1e-12, "got {value} at snr {s}");
        }
    }

    #[test]
    fn mmse_empty_set_rejected() {
        assert!(matches!(
            mmse_cm(&[], snr(1.0), &rule()),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn gaussian_mmse_values() {
        assert_eq!(gaussian_mmse(snr(0.0)), 1.0);
        assert_eq!(gaussian_mmse(snr(1.0)), 0.5);
        assert_eq!(gaussian_mmse(snr(9.0)), 0.1);
    }

    #[test]
    fn mi_cm_zero_snr_is_zero() {
        let c = qam16_gray();
        let value = mi_cm(c.points(), snr(0.0), &rule()).unwrap();
        assert!(value.abs() < 1e-10, "got {value}");
    }

    #[test]
    fn mi_cm_saturates_at_m_bits() {
        let c = qam16_gray();
        let value = mi_cm(c.points(), snr(1e6), &rule()).unwrap();
        assert_abs_diff_eq!(value, 4.0 * LN_2, epsilon = 1e-6);
    }

    #[test]
    fn bicm_equals_cm_for_single_bit() {
        let c = bpsk();
        for s in [0.0, 0.1, 1.0, 4.0, 25.0] {
            let cm = mi_cm(c.points(), snr(s), &rule()).unwrap();
            let direct = mi_bicm_direct(&c, snr(s), &rule()).unwrap();
            let decomposed = mi_bicm_decomposed(&c, snr(s), &rule()).unwrap();
            assert_abs_diff_eq!(direct, cm, epsilon = 1e-12);
            assert_abs_diff_eq!(decomposed, cm, epsilon = 1e-12);
        }
    }

    #[test]
    fn bicm_zero_snr_is_zero() {
        let value = mi_bicm_direct(&qam16_gray(), snr(0.0), &rule()).unwrap();
        assert!(value.abs() < 1e-10, "got {value}");
    }

    #[test]
    fn bicm_decomposed_saturates() {
        let value = mi_bicm_decomposed(&qam16_gray(), snr(1e6), &rule()).unwrap();
        assert_abs_diff_eq!(value, 4.0 * LN_2, epsilon = 1e-6);
    }

    #[test]
    fn direct_and_decomposed_agree_on_grid() {
        // The two routes share their quadrature error, so the identity holds
        // at any order; a small rule keeps the 30-point grid fast.
        let rule = QuadratureRule::gauss_hermite(32).unwrap();
        for c in [qam16_gray(), qam16_sp()] {
            for k in 0..30 {
                let s = 10.0_f64.powf(-2.0 + 4.0 * k as f64 / 29.0);
                let direct = mi_bicm_direct(&c, snr(s), &rule).unwrap();
                let decomposed = mi_bicm_decomposed(&c, snr(s), &rule).unwrap();
                assert!(
                    (direct - decomposed).abs() < 1e-8,
                    "snr {s}: direct {direct} vs decomposed {decomposed}"
                );
            }
        }
    }

    #[test]
    fn derivative_collapses_to_mmse_for_bpsk() {
        let c = bpsk();
        for s in [1e-6, 0.05, 0.7, 3.0, 20.0] {
            let derivative = bicm_mi_derivative(&c, snr(s), &rule()).unwrap();
            let mmse = mmse_cm(c.points(), snr(s), &rule()).unwrap();
            assert_abs_diff_eq!(derivative, mmse, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_explicit_subset_combination() {
        // The fused evaluation must reproduce the literal linear combination
        // m * mmse_X - sum_i (1/2) sum_b mmse_{X_b^i}.
        let c = qam16_gray();
        let r = rule();
        for s in [0.2, 2.0, 12.0] {
            let fused = bicm_mi_derivative(&c, snr(s), &r).unwrap();
            let full = mmse_cm(c.points(), snr(s), &r).unwrap();
            let mut explicit = 0.0;
            for position in 1..=4 {
                for b in [0, 1] {
                    let sub = c.subset(position, b).unwrap();
                    explicit += 0.5 * (full - mmse_cm(sub.points(), snr(s), &r).unwrap());
                }
            }
            assert_abs_diff_eq!(fused, explicit, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_approaches_low_snr_slope() {
        for c in [qam16_gray(), qam16_sp()] {
            let slope = low_snr_slope(&c);
            let near_zero = bicm_mi_derivative(&c, snr(1e-6), &rule()).unwrap();
            assert!(
                (near_zero - slope).abs() < 1e-6,
                "slope {slope} vs derivative {near_zero}"
            );
        }
    }

    #[test]
    fn derivative_at_exactly_zero_uses_closed_form() {
        let c = qam16_sp();
        let value = bicm_mi_derivative(&c, snr(0.0), &rule()).unwrap();
        assert_eq!(value, low_snr_slope(&c));
    }

    #[test]
    fn low_snr_slope_bpsk_is_one() {
        assert_abs_diff_eq!(low_snr_slope(&bpsk()), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn low_snr_slope_zero_when_all_subsets_centered() {
        // Solve for 8 points whose every labeling subset has zero mean:
        // pick the second half freely (sum zero), then the first half is
        // pinned by the per-bit constraints.
        let x4 = Complex64::new(1.0, 0.2);
        let x5 = Complex64::new(-0.4, 0.9);
        let x6 = Complex64::new(0.8, -1.1);
        let x7 = -(x4 + x5 + x6);
        let x0 = Complex64::new(0.3, 0.1);
        let x1 = -(x4 + x5) - x0;
        let x2 = -(x4 + x6) - x0;
        let x3 = -(x0 + x1 + x2);
        let points = vec![x0, x1, x2, x3, x4, x5, x6, x7];
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                assert!((a - b).norm() > 1e-9, "construction needs distinct points");
            }
        }
        let c = Constellation::new(points, (0..8).collect(), 3).unwrap();
        assert!(low_snr_slope(&c).abs() < 1e-12);
    }

    #[test]
    fn low_snr_slope_gray_16qam_frozen_value() {
        // Direct enumeration of subset means, independent of low_snr_slope.
        let c = qam16_gray();
        let mut enumerated = 0.0;
        for position in 1..=4 {
            for b in [0, 1] {
                let sub = c.subset(position, b).unwrap();
                enumerated += 0.5 * sub.mean().norm_sqr();
            }
        }
        assert_abs_diff_eq!(enumerated, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(low_snr_slope(&c), enumerated, epsilon = 1e-15);

        let sp = qam16_sp();
        let mut sp_enumerated = 0.0;
        for position in 1..=4 {
            for b in [0, 1] {
                sp_enumerated += 0.5 * sp.subset(position, b).unwrap().mean().norm_sqr();
            }
        }
        assert_abs_diff_eq!(sp_enumerated, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(low_snr_slope(&sp), sp_enumerated, epsilon = 1e-15);
    }

    #[test]
    fn zero_snr_limit_values() {
        let c = qam16_gray();
        assert_abs_diff_eq!(
            mmse_zero_snr_limit(c.points()).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_eq!(
            mmse_zero_snr_limit(&[Complex64::new(0.3, -0.4)]).unwrap(),
            0.0
        );
    }

    #[test]
    fn zero_snr_limit_matches_small_snr_quadrature_on_subsets() {
        let r = rule();
        for c in [qam16_gray(), qam16_sp()] {
            for position in 1..=4 {
                for b in [0, 1] {
                    let sub = c.subset(position, b).unwrap();
                    let limit = mmse_zero_snr_limit(sub.points()).unwrap();
                    let near = mmse_cm(sub.points(), snr(1e-8), &r).unwrap();
                    assert!(
                        (limit - near).abs() < 1e-6,
                        "position {position} bit {b}: limit {limit}, quadrature {near}"
                    );
                }
            }
        }
    }

    #[test]
    fn i_mmse_relation_spot_checks() {
        // Central finite difference of mi_cm against mmse_cm; the full grid
        // lives in the acceptance suite.
        let r = rule();
        for c in [bpsk(), qpsk()] {
            for s in [0.05f64, 0.8, 9.0] {
                let h = (1e-4 * s).max(1e-6);
                let hi = mi_cm(c.points(), snr(s + h), &r).unwrap();
                let lo = mi_cm(c.points(), snr(s - h), &r).unwrap();
                let fd = (hi - lo) / (2.0 * h);
                let mmse = mmse_cm(c.points(), snr(s), &r).unwrap();
                assert!(
                    (fd - mmse).abs() < 1e-5,
                    "snr {s}: fd {fd} vs mmse {mmse}"
                );
            }
        }
    }

    #[test]
    fn theorem_derivative_spot_checks() {
        let r = rule();
        let c = qam16_gray();
        for s in [0.1f64, 1.5, 20.0] {
            let h = (1e-4 * s).max(1e-6);
            let hi = mi_bicm_decomposed(&c, snr(s + h), &r).unwrap();
            let lo = mi_bicm_decomposed(&c, snr(s - h), &r).unwrap();
            let fd = (hi - lo) / (2.0 * h);
            let derivative = bicm_mi_derivative(&c, snr(s), &r).unwrap();
            assert!(
                (fd - derivative).abs() < 1e-5,
                "snr {s}: fd {fd} vs derivative {derivative}"
            );
        }
    }

    #[test]
    fn bicm_never_exceeds_cm() {
        let r = rule();
        for c in [bpsk(), qpsk(), qam16_gray(), qam16_sp()] {
            for k in 0..8 {
                let s = 10.0_f64.powf(-1.5 + 3.0 * k as f64 / 7.0);
                let cm = mi_cm(c.points(), snr(s), &r).unwrap();
                let bicm = mi_bicm_direct(&c, snr(s), &r).unwrap();
                assert!(
                    bicm <= cm + 1e-9,
                    "snr {s}: bicm {bicm} exceeds cm {cm}"
                );
            }
        }
    }

    #[test]
    fn ranges_and_monotonicity() {
        let r = rule();
        let c = qam16_gray();
        let mut previous_mmse = f64::INFINITY;
        let mut previous_mi = -1.0;
        for k in 0..10 {
            let s = 10.0_f64.powf(-2.0 + 4.0 * k as f64 / 9.0);
            let mi = mi_cm(c.points(), snr(s), &r).unwrap();
            let mmse = mmse_cm(c.points(), snr(s), &r).unwrap();
            assert!(mi >= -1e-12 && mi <= (16.0_f64).ln() + 1e-9);
            assert!(mmse >= -1e-12 && mmse <= 1.0 + 1e-9);
            assert!(mmse <= previous_mmse + 1e-9, "mmse not nonincreasing");
            assert!(mi >= previous_mi - 1e-9, "mi not nondecreasing");
            previous_mmse = mmse;
            previous_mi = mi;
        }
    }

    #[test]
    fn sweep_mmse_single_point_grid() {
        let c = bpsk();
        let curve = sweep(&c, &[snr(0.0)], CurveKind::Mmse, &rule()).unwrap();
        assert_eq!(curve.len(), 1);
        assert_abs_diff_eq!(curve.values()[0], 1.0, epsilon = 1e-9);
        assert_eq!(curve.kind(), CurveKind::Mmse);
    }

    #[test]
    fn sweep_requires_increasing_grid() {
        let c = bpsk();
        let grid = [snr(1.0), snr(1.0)];
        assert!(matches!(
            sweep(&c, &grid, CurveKind::Mmse, &rule()),
            Err(Error::InvalidGrid)
        ));
    }

    #[test]
    fn sweep_mi_is_nondecreasing() {
        let c = qpsk();
        let grid: Vec<Snr> = (0..12)
            .map(|k| snr(10.0_f64.powf(-2.0 + 4.0 * k as f64 / 11.0)))
            .collect();
        let curve = sweep(&c, &grid, CurveKind::MiCm, &rule()).unwrap();
        for w in curve.values().windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn gray_bicm_derivative_tracks_cm_mmse_at_high_snr() {
        let c = qam16_gray();
        let r = rule();
        let s = snr(10.0_f64.powf(1.5));
        let derivative = bicm_mi_derivative(&c, s, &r).unwrap();
        let mmse = mmse_cm(c.points(), s, &r).unwrap();
        let relative = (derivative - mmse).abs() / mmse;
        assert!(
            relative < 0.02,
            "relative gap {relative} between derivative {derivative} and mmse {mmse}"
        );
    }
}

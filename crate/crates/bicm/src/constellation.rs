//! Complex signal constellations with bit labelings.
//!
//! A constellation is a set of `2^m` complex points together with a bijective
//! assignment of `m`-bit labels. Bit position 1 is the leftmost (most
//! significant) label character; this convention is fixed project-wide so
//! that subset-dependent quantities are reproducible.
//!
//! Built-in families:
//!
//! - **PAM**: `2^m` real amplitudes at the odd integers, listed from positive
//!   to negative, labeled with the binary-reflected Gray code of the position
//!   index (so BPSK maps `+1 -> 0`, `-1 -> 1`).
//! - **PSK**: `2^m` unit-modulus points `exp(2 pi i k / 2^m)`, Gray-labeled
//!   around the circle.
//! - **QAM** (square, `m` even): with Gray labeling, the Cartesian product of
//!   two Gray-labeled PAM constellations — the first `m/2` bits label the
//!   in-phase axis, the last `m/2` the quadrature axis. With set-partitioning
//!   labeling (16-QAM only), bit 1 downward follow the Ungerboeck partition
//!   chain: each successive bit splits every subset into two halves whose
//!   minimum intra-subset distance grows by `sqrt(2)`.
//!
//! Built-ins are normalized to unit mean energy. Constellations loaded from
//! files keep their raw scale; call [`Constellation::normalize`] explicitly.

use num_complex::Complex64;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::{Error, Result};

/// Built-in constellation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Pam,
    Psk,
    Qam,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pam" => Ok(Family::Pam),
            "psk" => Ok(Family::Psk),
            "qam" => Ok(Family::Qam),
            other => Err(Error::UnsupportedConstellation(format!(
                "unknown family `{other}` (expected pam, psk, or qam)"
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Pam => write!(f, "pam"),
            Family::Psk => write!(f, "psk"),
            Family::Qam => write!(f, "qam"),
        }
    }
}

/// Built-in bit labelings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labeling {
    /// Binary-reflected Gray code; per-axis product construction for QAM.
    Gray,
    /// Ungerboeck set partitioning (16-QAM only).
    SetPartitioning,
    /// Binary-reflected Gray code applied to the raw point enumeration index
    /// (row-major over the grid for QAM). Coincides with [`Labeling::Gray`]
    /// for PAM and PSK.
    BinaryReflectedCustom,
}

impl FromStr for Labeling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" => Ok(Labeling::Gray),
            "set_partitioning" | "sp" => Ok(Labeling::SetPartitioning),
            "binary_reflected_custom" | "brc" => Ok(Labeling::BinaryReflectedCustom),
            other => Err(Error::UnsupportedConstellation(format!(
                "unknown labeling `{other}` (expected gray, set_partitioning, \
                 or binary_reflected_custom)"
            ))),
        }
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Labeling::Gray => write!(f, "gray"),
            Labeling::SetPartitioning => write!(f, "set_partitioning"),
            Labeling::BinaryReflectedCustom => write!(f, "binary_reflected_custom"),
        }
    }
}

/// A finite complex constellation with an `m`-bit labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    m: usize,
}

/// A subset of a parent constellation's points, as produced by
/// [`Constellation::subset`]. Carries the parent size because averaging and
/// labeling context come from the parent. A subset need not have zero mean
/// nor unit energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SubConstellation {
    points: Vec<Complex64>,
    parent_size: usize,
}

fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

/// PAM amplitudes for `levels = 2^bits` points, from `+(levels-1)` down to
/// `-(levels-1)` in steps of 2, un-normalized.
fn pam_amplitudes(levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|k| (levels as f64 - 1.0) - 2.0 * k as f64)
        .collect()
}

impl Constellation {
    /// Builds a constellation from raw points and labels, validating the
    /// type invariants: `2^m` points, labels a bijection onto `{0,1}^m`,
    /// all coordinates finite.
    pub fn new(points: Vec<Complex64>, labels: Vec<u32>, m: usize) -> Result<Self> {
        if m == 0 || m > 31 {
            return Err(Error::UnsupportedConstellation(format!(
                "bits per symbol must be in 1..=31, got {m}"
            )));
        }
        let size = 1usize << m;
        if points.len() != size || labels.len() != size {
            return Err(Error::UnsupportedConstellation(format!(
                "expected {size} points and labels for m = {m}, got {} points and {} labels",
                points.len(),
                labels.len()
            )));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::NonFinite("constellation point"));
        }
        let mut seen = vec![false; size];
        for &label in &labels {
            let idx = label as usize;
            if idx >= size || seen[idx] {
                return Err(Error::UnsupportedConstellation(format!(
                    "labels are not a bijection onto {m}-bit strings (label {label:0m$b})",
                )));
            }
            seen[idx] = true;
        }
        Ok(Self { points, labels, m })
    }

    /// Builds one of the built-in families, normalized to unit mean energy.
    pub fn build(family: Family, m: usize, labeling: Labeling) -> Result<Self> {
        if m == 0 || m > 8 {
            return Err(Error::UnsupportedConstellation(format!(
                "bits per symbol must be in 1..=8, got {m}"
            )));
        }
        let raw = match family {
            Family::Pam => {
                let amplitudes = pam_amplitudes(1 << m);
                let labels = Self::linear_labels(m, labeling, family)?;
                let points = amplitudes
                    .into_iter()
                    .map(|a| Complex64::new(a, 0.0))
                    .collect();
                Self::new(points, labels, m)?
            }
            Family::Psk => {
                let size = 1usize << m;
                let labels = Self::linear_labels(m, labeling, family)?;
                let points = (0..size)
                    .map(|k| {
                        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / size as f64)
                    })
                    .collect();
                Self::new(points, labels, m)?
            }
            Family::Qam => {
                if m % 2 != 0 {
                    return Err(Error::UnsupportedConstellation(format!(
                        "square qam requires an even number of bits, got m = {m}"
                    )));
                }
                match labeling {
                    Labeling::Gray => Self::qam_gray(m)?,
                    Labeling::SetPartitioning => {
                        if m != 4 {
                            return Err(Error::UnsupportedConstellation(format!(
                                "set_partitioning labeling is only defined for 16-qam (m = 4), \
                                 got m = {m}"
                            )));
                        }
                        Self::qam16_set_partitioning()?
                    }
                    Labeling::BinaryReflectedCustom => Self::qam_raster_gray(m)?,
                }
            }
        };
        raw.normalize()
    }

    /// Builds a built-in constellation from a `family,m,labeling` spec
    /// string, e.g. `qam,4,gray` or `pam,1,gray`.
    pub fn build_from_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::UnsupportedConstellation(format!(
                "constellation spec `{spec}` must be `family,m,labeling`"
            )));
        }
        let family: Family = parts[0].parse()?;
        let m: usize = parts[1].parse().map_err(|_| {
            Error::UnsupportedConstellation(format!(
                "invalid bits-per-symbol `{}` in spec `{spec}`",
                parts[1]
            ))
        })?;
        let labeling: Labeling = parts[2].parse()?;
        Self::build(family, m, labeling)
    }

    fn linear_labels(m: usize, labeling: Labeling, family: Family) -> Result<Vec<u32>> {
        match labeling {
            Labeling::Gray | Labeling::BinaryReflectedCustom => {
                Ok((0..1u32 << m).map(gray).collect())
            }
            Labeling::SetPartitioning => Err(Error::UnsupportedConstellation(format!(
                "set_partitioning labeling is not defined for {family}"
            ))),
        }
    }

    /// Gray-labeled square QAM as the product of two Gray-labeled PAM axes;
    /// the first `m/2` label bits select the in-phase amplitude.
    fn qam_gray(m: usize) -> Result<Self> {
        let half = m / 2;
        let axis = pam_amplitudes(1 << half);
        let size = 1usize << m;
        let mut points = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size);
        for (ki, &re) in axis.iter().enumerate() {
            for (kq, &im) in axis.iter().enumerate() {
                points.push(Complex64::new(re, im));
                labels.push((gray(ki as u32) << half) | gray(kq as u32));
            }
        }
        Self::new(points, labels, m)
    }

    /// Square QAM labeled with the binary-reflected Gray code of the
    /// row-major grid index.
    fn qam_raster_gray(m: usize) -> Result<Self> {
        let half = m / 2;
        let axis = pam_amplitudes(1 << half);
        let size = 1usize << m;
        let mut points = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size);
        for (ki, &re) in axis.iter().enumerate() {
            for (kq, &im) in axis.iter().enumerate() {
                points.push(Complex64::new(re, im));
                labels.push(gray(((ki << half) | kq) as u32));
            }
        }
        Self::new(points, labels, m)
    }

    /// 16-QAM with Ungerboeck set-partitioning labels. With grid coordinates
    /// `i, j in 0..4` (amplitudes `2i - 3`, `2j - 3`), the label bits from
    /// position 1 (leftmost) to 4 are
    ///
    /// ```text
    /// b1 = (i + j) mod 2        checkerboard split, distance gain sqrt(2)
    /// b2 = i mod 2              next split, sqrt(2) again
    /// b3 = (i/2 + j/2) mod 2    diagonal pairs, sqrt(2) again
    /// b4 = i/2 mod 2            final split into singletons
    /// ```
    fn qam16_set_partitioning() -> Result<Self> {
        let mut points = Vec::with_capacity(16);
        let mut labels = Vec::with_capacity(16);
        for i in 0u32..4 {
            for j in 0u32..4 {
                let re = 2.0 * i as f64 - 3.0;
                let im = 2.0 * j as f64 - 3.0;
                let b1 = (i + j) & 1;
                let b2 = i & 1;
                let b3 = ((i >> 1) + (j >> 1)) & 1;
                let b4 = (i >> 1) & 1;
                points.push(Complex64::new(re, im));
                labels.push((b1 << 3) | (b2 << 2) | (b3 << 1) | b4);
            }
        }
        Self::new(points, labels, 4)
    }

    /// Parses the constellation file format: one `<re> <im> <bitstring>`
    /// triple per line, `#` starting a comment, all bitstrings of equal
    /// length. The result is **not** normalized.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries: Vec<(usize, Complex64, String)> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "expected `<re> <im> <bitstring>`, found {} field(s)",
                        fields.len()
                    ),
                });
            }
            let re: f64 = fields[0].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid real amplitude `{}`", fields[0]),
            })?;
            let im: f64 = fields[1].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid imaginary amplitude `{}`", fields[1]),
            })?;
            let bits = fields[2];
            if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("invalid bitstring `{bits}`"),
                });
            }
            entries.push((line_no, Complex64::new(re, im), bits.to_string()));
        }

        if entries.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "no constellation points found".into(),
            });
        }

        let m = entries[0].2.len();
        for (line_no, _, bits) in &entries {
            if bits.len() != m {
                return Err(Error::Parse {
                    line: *line_no,
                    message: format!(
                        "bitstring `{bits}` has length {}, expected {m}",
                        bits.len()
                    ),
                });
            }
        }
        if m > 20 || entries.len() != 1usize << m {
            return Err(Error::Parse {
                line: entries.last().map(|e| e.0).unwrap_or(0),
                message: format!(
                    "found {} points for {m}-bit labels, expected {}",
                    entries.len(),
                    1usize << m.min(20)
                ),
            });
        }

        let mut first_seen: Vec<Option<usize>> = vec![None; 1 << m];
        let mut points = Vec::with_capacity(entries.len());
        let mut labels = Vec::with_capacity(entries.len());
        for (line_no, point, bits) in entries {
            let label = u32::from_str_radix(&bits, 2).expect("validated bitstring");
            if first_seen[label as usize].is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate label `{bits}`"),
                });
            }
            first_seen[label as usize] = Some(line_no);
            points.push(point);
            labels.push(label);
        }
        Self::new(points, labels, m)
    }

    /// Rescales to unit mean energy, leaving labels untouched.
    pub fn normalize(&self) -> Result<Self> {
        let energy = self.mean_energy();
        if energy <= 0.0 {
            return Err(Error::ZeroEnergy);
        }
        let scale = 1.0 / energy.sqrt();
        Ok(Self {
            points: self.points.iter().map(|p| p * scale).collect(),
            labels: self.labels.clone(),
            m: self.m,
        })
    }

    /// The points whose label carries bit `b` at position `i` (1-based,
    /// leftmost label character first). Always exactly half the points.
    pub fn subset(&self, position: usize, b: u8) -> Result<SubConstellation> {
        if position == 0 || position > self.m {
            return Err(Error::BitPositionOutOfRange {
                position,
                bits: self.m,
            });
        }
        if b > 1 {
            return Err(Error::InvalidBitValue(b));
        }
        let points = self
            .points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &label)| Self::bit_of(label, position, self.m) == b)
            .map(|(&p, _)| p)
            .collect();
        Ok(SubConstellation {
            points,
            parent_size: self.points.len(),
        })
    }

    fn bit_of(label: u32, position: usize, m: usize) -> u8 {
        ((label >> (m - position)) & 1) as u8
    }

    /// Bit `position` (1-based) of the label of point `index`.
    pub fn label_bit(&self, index: usize, position: usize) -> u8 {
        Self::bit_of(self.labels[index], position, self.m)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Bits per symbol.
    pub fn bits_per_symbol(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn mean(&self) -> Complex64 {
        self.points.iter().sum::<Complex64>() / self.points.len() as f64
    }
}

impl SubConstellation {
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn parent_size(&self) -> usize {
        self.parent_size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn mean(&self) -> Complex64 {
        self.points.iter().sum::<Complex64>() / self.points.len() as f64
    }
}

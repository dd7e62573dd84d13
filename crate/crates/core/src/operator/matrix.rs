use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OperatorError, VelocityGrid};
use crate::billiard::{trace_exit, trace_exit_resampled};
use crate::geometry::{BoundaryPiece, FamilySpec, Profile};
use crate::scalar::{count, Real};

const MAGIC: &[u8; 8] = b"KNUDTM01";
/// Rejection fraction above which a build is flagged.
const REJECTION_WARNING: f64 = 0.01;
/// Redraws allowed per random-mode sample before giving up.
const MAX_REDRAWS: usize = 64;

/// How entry positions on the torus are chosen for each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SamplingMode {
    /// Midpoints `(k + 1/2) period / N` of `N` equal subintervals.
    Grid,
    /// One uniform draw in each of the `N` subintervals, from a ChaCha8
    /// stream keyed by `seed` and the row index.
    Stratified { seed: u64 },
}

/// Provenance stored with a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMetadata {
    pub family: Option<FamilySpec>,
    pub profile_tag: String,
    pub m: usize,
    pub n: usize,
    pub sampling: SamplingMode,
    pub rejections: u64,
    pub quality_warning: Option<String>,
    pub retention: f64,
    pub mixture_alpha: Option<f64>,
}

impl MatrixMetadata {
    fn reference(tag: &str, m: usize, retention: f64) -> Self {
        MatrixMetadata {
            family: None,
            profile_tag: tag.into(),
            m,
            n: 0,
            sampling: SamplingMode::Grid,
            rejections: 0,
            quality_warning: None,
            retention,
            mixture_alpha: None,
        }
    }
}

/// Row-stochastic `M x M` transition matrix with its grid and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    grid: VelocityGrid<T>,
    entries: Vec<T>,
    retention: T,
    meta: MatrixMetadata,
}

impl<T: Real> TransitionMatrix<T> {
    pub(crate) fn from_parts(grid: VelocityGrid<T>, entries: Vec<T>, retention: T, meta: MatrixMetadata) -> Self {
        assert_eq!(entries.len(), grid.len() * grid.len());
        TransitionMatrix { grid, entries, retention, meta }
    }

    /// Matrix from explicit row-major entries, e.g. a hand-built reference.
    /// Rows must be probability vectors.
    pub fn from_rows(m: usize, entries: Vec<T>, retention: T, tag: &str) -> Result<Self, OperatorError> {
        let grid = VelocityGrid::new(m)?;
        if entries.len() != m * m {
            return Err(OperatorError::Shape(entries.len(), m * m));
        }
        let tol = T::algebraic_tolerance();
        for i in 0..m {
            let row = &entries[i * m..(i + 1) * m];
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs() > tol || row.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
                return Err(OperatorError::Format(format!("row {i} is not a probability vector")));
            }
        }
        if !(retention >= -T::one() && retention <= T::one()) {
            return Err(OperatorError::Parameter {
                name: "retention",
                value: retention.to_f64().unwrap_or(f64::NAN),
                allowed: "[-1, 1]",
            });
        }
        let meta = MatrixMetadata::reference(tag, m, retention.to_f64().unwrap_or(f64::NAN));
        Ok(Self::from_parts(grid, entries, retention, meta))
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &VelocityGrid<T> {
        &self.grid
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.m() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let m = self.m();
        &self.entries[i * m..(i + 1) * m]
    }

    /// Action on fluctuations finer than a bin.
    pub fn retention(&self) -> T {
        self.retention
    }

    pub fn metadata(&self) -> &MatrixMetadata {
        &self.meta
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_defect(&self) -> T {
        (0..self.m())
            .map(|i| (self.row(i).iter().copied().sum::<T>() - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// Binary artifact: magic, little-endian header length, JSON metadata,
    /// then `M * M` little-endian `f64` entries.
    pub fn write_binary(&self, path: &Path) -> Result<(), OperatorError> {
        let io = |e: std::io::Error| OperatorError::Io(format!("{}: {e}", path.display()));
        let header = serde_json::to_vec(&self.meta).map_err(|e| OperatorError::Format(e.to_string()))?;
        let mut buf = Vec::with_capacity(16 + header.len() + 8 * self.entries.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(&header);
        for v in &self.entries {
            buf.extend_from_slice(&v.to_f64().unwrap_or(f64::NAN).to_le_bytes());
        }
        let mut file = std::fs::File::create(path).map_err(io)?;
        file.write_all(&buf).map_err(io)
    }

    pub fn read_binary(path: &Path) -> Result<Self, OperatorError> {
        let io = |e: std::io::Error| OperatorError::Io(format!("{}: {e}", path.display()));
        let mut bytes = Vec::new();
        std::fs::File::open(path).map_err(io)?.read_to_end(&mut bytes).map_err(io)?;
        let bad = |msg: &str| OperatorError::Format(format!("{}: {msg}", path.display()));
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("missing header"));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body_start = 16usize.checked_add(hlen).ok_or_else(|| bad("header length"))?;
        if bytes.len() < body_start {
            return Err(bad("truncated header"));
        }
        let meta: MatrixMetadata =
            serde_json::from_slice(&bytes[16..body_start]).map_err(|e| bad(&e.to_string()))?;
        let m = meta.m;
        if bytes.len() != body_start + 8 * m * m {
            return Err(bad("entry count does not match M"));
        }
        let entries = bytes[body_start..]
            .chunks_exact(8)
            .map(|c| T::from_f64(f64::from_le_bytes(c.try_into().expect("8 bytes"))).unwrap_or_else(T::nan))
            .collect();
        let grid = VelocityGrid::new(m)?;
        let retention = T::from_f64(meta.retention).unwrap_or_else(T::nan);
        Ok(Self::from_parts(grid, entries, retention, meta))
    }

    /// CSV with `#`-prefixed metadata lines followed by one row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let meta = serde_json::to_string(&self.meta).unwrap_or_default();
        out.push_str("# ");
        out.push_str(&meta);
        out.push('\n');
        for i in 0..self.m() {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{:e}", v.to_f64().unwrap_or(f64::NAN))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// The identity operator (specular wall) on `m` bins.
pub fn identity_matrix<T: Real>(m: usize) -> Result<TransitionMatrix<T>, OperatorError> {
    let grid = VelocityGrid::new(m)?;
    let mut entries = vec![T::zero(); m * m];
    for i in 0..m {
        entries[i * m + i] = T::one();
    }
    Ok(TransitionMatrix::from_parts(grid, entries, T::one(), MatrixMetadata::reference("identity", m, 1.0)))
}

/// The fully diffuse operator `P f = <f, 1>_pi`: every row is the bin law
/// of `pi`.
pub fn diffuse_matrix<T: Real>(m: usize) -> Result<TransitionMatrix<T>, OperatorError> {
    let grid = VelocityGrid::new(m)?;
    let v = T::one() / count::<T>(m);
    Ok(TransitionMatrix::from_parts(
        grid,
        vec![v; m * m],
        T::zero(),
        MatrixMetadata::reference("diffuse", m, 0.0),
    ))
}

/// Fraction of the period covered by horizontal pieces lying on the
/// reference line. A ray entering above such a piece reflects off it at
/// once, whatever its direction, so that share of `P` is the identity on
/// every scale, sub-bin fluctuations included.
pub fn specular_fraction<T: Real>(profile: &Profile<T>) -> T {
    let top = profile.reference_height();
    let tol = T::geometric_tolerance();
    let covered: T = profile
        .pieces()
        .iter()
        .filter_map(|p| match *p {
            BoundaryPiece::Segment { a, b } if (a.y - top).abs() <= tol && (b.y - top).abs() <= tol => {
                Some((b.x - a.x).abs())
            }
            _ => None,
        })
        .sum();
    (covered / profile.period()).max(T::zero()).min(T::one())
}

/// Builds `P_M` by tracing `n` entries per row from each bin midpoint.
pub fn build_matrix<T: Real>(
    profile: &Profile<T>,
    m: usize,
    n: usize,
    mode: SamplingMode,
) -> Result<TransitionMatrix<T>, OperatorError> {
    let grid = VelocityGrid::new(m)?;
    if n == 0 {
        return Err(OperatorError::Parameter { name: "N", value: 0.0, allowed: "[1, inf)" });
    }
    let period = profile.period();
    let nf: T = count(n);
    let rows: Vec<Result<(Vec<T>, u64), OperatorError>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let x = grid.midpoints()[i];
            let mut counts = vec![0u32; m];
            let mut rejections = 0u64;
            let mut rng = match mode {
                SamplingMode::Stratified { seed } => {
                    let mut r = ChaCha8Rng::seed_from_u64(seed);
                    r.set_stream(i as u64);
                    Some(r)
                }
                SamplingMode::Grid => None,
            };
            for k in 0..n {
                let exit = match rng.as_mut() {
                    None => {
                        let r = (count::<T>(k) + T::from_f64(0.5).expect("0.5")) * period / nf;
                        let (exit, rej) = trace_exit_resampled(profile, r, x)?;
                        rejections += rej as u64;
                        exit
                    }
                    Some(rng) => {
                        let mut attempt = 0;
                        loop {
                            let u: f64 = rng.random();
                            let r = (count::<T>(k) + T::from_f64(u).expect("unit draw")) * period / nf;
                            match trace_exit(profile, r, x) {
                                Ok(exit) => break exit,
                                Err(e) if e.is_singular() && attempt < MAX_REDRAWS => {
                                    attempt += 1;
                                    rejections += 1;
                                }
                                Err(e) => return Err(OperatorError::Trace(e)),
                            }
                        }
                    }
                };
                counts[grid.bin_of(exit.x)] += 1;
            }
            let row = counts.into_iter().map(|c| count::<T>(c as usize) / nf).collect();
            Ok((row, rejections))
        })
        .collect();

    let mut entries = Vec::with_capacity(m * m);
    let mut rejections = 0u64;
    for row in rows {
        let (r, rej) = row?;
        entries.extend(r);
        rejections += rej;
    }
    let rate = rejections as f64 / (m as f64 * n as f64);
    let quality_warning = (rate > REJECTION_WARNING).then(|| {
        log::warn!("{:.2}% of entries rejected while building the matrix", 100.0 * rate);
        format!("rejection rate {:.3}% exceeds {}%", 100.0 * rate, 100.0 * REJECTION_WARNING)
    });
    let retention = specular_fraction(profile);
    let family = profile.family().clone();
    let meta = MatrixMetadata {
        profile_tag: format!("{} {}", family.name(), family.params()),
        family: Some(family),
        m,
        n,
        sampling: mode,
        rejections,
        quality_warning,
        retention: retention.to_f64().unwrap_or(f64::NAN),
        mixture_alpha: None,
    };
    Ok(TransitionMatrix::from_parts(grid, entries, retention, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_bumps, make_bumps_with_wall, make_flat, make_mixture};

    #[test]
    fn specular_fraction_of_families() {
        assert_eq!(specular_fraction(&make_flat::<f64>().unwrap()), 1.0);
        assert_eq!(specular_fraction(&make_bumps::<f64>(0.5).unwrap()), 0.0);
        for alpha in [0.25, 0.5, 1.0] {
            let beta = specular_fraction(&make_mixture::<f64>(alpha).unwrap());
            assert!((beta - (1.0 - alpha)).abs() < 1e-12, "{alpha}: {beta}");
        }
        assert!((specular_fraction(&make_bumps_with_wall::<f64>(0.3, 0.1, 0.5).unwrap()) - 0.3).abs() < 1e-12);
        assert_eq!(specular_fraction(&make_bumps_with_wall::<f64>(0.3, -0.1, 0.5).unwrap()), 0.0);
    }

    #[test]
    fn flat_profile_gives_identity() {
        let p = build_matrix(&make_flat::<f64>().unwrap(), 50, 37, SamplingMode::Grid).unwrap();
        let id = identity_matrix::<f64>(50).unwrap();
        assert_eq!(p.entries(), id.entries());
        assert_eq!(p.retention(), 1.0);
    }

    #[test]
    fn rows_are_probability_vectors() {
        let p = build_matrix(&make_bumps::<f64>(1.0).unwrap(), 40, 300, SamplingMode::Stratified { seed: 3 }).unwrap();
        assert!(p.row_sum_defect() < 1e-12);
        assert!(p.entries().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(p.metadata().n, 300);
        assert!(p.metadata().quality_warning.is_none());
    }

    #[test]
    fn binary_round_trip() {
        let p = build_matrix(&make_bumps::<f64>(0.5).unwrap(), 20, 100, SamplingMode::Grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        p.write_binary(&path).unwrap();
        let q = TransitionMatrix::<f64>::read_binary(&path).unwrap();
        assert_eq!(p, q);
        std::fs::write(&path, b"garbage").unwrap();
        assert!(TransitionMatrix::<f64>::read_binary(&path).is_err());
    }

    #[test]
    fn from_rows_validates() {
        assert!(TransitionMatrix::<f64>::from_rows(2, vec![0.5, 0.5, 0.2, 0.8], 0.0, "t").is_ok());
        assert!(TransitionMatrix::<f64>::from_rows(2, vec![0.5, 0.6, 0.2, 0.8], 0.0, "t").is_err());
        assert!(TransitionMatrix::<f64>::from_rows(2, vec![0.5, 0.5], 0.0, "t").is_err());
    }
}

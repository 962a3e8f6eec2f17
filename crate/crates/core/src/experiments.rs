//! Seeded Monte Carlo harness for linkage and recovery rates of the
//! modified decodability attack, and the reference walkthrough behind
//! `demo appendix`.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! with the master seed and the stream id is `cell << 32 | trial`. Trials
//! are collected in index order, so reports do not depend on the number of
//! worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::engine::PatternSpace;
use crate::attacks::{attack_records, modified_decodability_attack, AttackOptions};
use crate::codes::{CodeDescriptor, LinearCode};
use crate::commitment::{enroll_with_codeword, EnrollOptions, HashAlg};
use crate::error::ExperimentError;
use crate::linalg::FieldVector;
use crate::transforms::{random_transform, TransformKind};

/// Cells needing more patterns per attack than this are refused unless
/// forced.
pub const PATTERN_LIMIT: u64 = 1_000_000_000;

pub const RNG_ID: &str = "chacha8-seed-stream";
pub const SECURE_RNG_ID: &str = "os-seeded-stdrng";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialMode {
    Related,
    NonRelated,
}

impl fmt::Display for TrialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrialMode::Related => "related",
            TrialMode::NonRelated => "non-related",
        })
    }
}

/// How the second feature vector of a related pair is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelatedSampling {
    /// `w2 = w1 + e` with e uniform of weight exactly b.
    #[default]
    ExactWeight,
    /// `w2 = w1 + e` with e uniform over all vectors of weight <= b.
    UniformBall,
}

impl FromStr for RelatedSampling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact-weight" => Ok(RelatedSampling::ExactWeight),
            "uniform-ball" => Ok(RelatedSampling::UniformBall),
            _ => Err(format!("unknown sampling `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub code: String,
    pub b_values: Vec<usize>,
    pub trials: usize,
    pub modes: Vec<TrialMode>,
    pub related_sampling: RelatedSampling,
    pub transform: TransformKind,
    pub with_hash: bool,
    pub noise_z: usize,
    pub seed: u64,
    /// Measure wall-clock time per attack. Off makes reports reproducible
    /// byte for byte.
    pub timing: bool,
    pub secure_rng: bool,
    pub force: bool,
}

impl ExperimentConfig {
    pub fn new(code: &str, b_values: Vec<usize>, trials: usize, modes: Vec<TrialMode>, seed: u64) -> Self {
        ExperimentConfig {
            code: code.to_string(),
            b_values,
            trials,
            modes,
            related_sampling: RelatedSampling::ExactWeight,
            transform: TransformKind::BitPermutation,
            with_hash: false,
            noise_z: 0,
            seed,
            timing: true,
            secure_rng: false,
            force: false,
        }
    }

    fn validate(&self, code: &LinearCode) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.modes.is_empty() {
            return bad("no trial mode selected".into());
        }
        if self.transform == TransformKind::FieldPermutation {
            return bad("the harness runs the bit-permutation attack; field permutations are not supported".into());
        }
        if self.noise_z > code.n() {
            return bad(format!("noise z={} exceeds n={}", self.noise_z, code.n()));
        }
        for &b in &self.b_values {
            if b > code.n() {
                return bad(format!("b={b} exceeds n={}", code.n()));
            }
            let patterns = PatternSpace::new(code.n(), code.field().order(), b)?.total();
            if patterns > PATTERN_LIMIT && !self.force {
                return Err(ExperimentError::TooManyPatterns { b, patterns, limit: PATTERN_LIMIT });
            }
        }
        Ok(())
    }
}

/// Aggregates for one (code, b, mode) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub b: usize,
    pub mode: TrialMode,
    pub trials: usize,
    pub linked: usize,
    pub recovered: usize,
    pub hash_verified: usize,
    pub linkage_rate: f64,
    pub recovery_rate: f64,
    pub mean_time_ms: Option<f64>,
    pub median_time_ms: Option<f64>,
    pub patterns_scanned_mean: f64,
    pub patterns_scanned_max: u64,
    pub rank_histogram: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rng: String,
    pub cells: Vec<CellReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct TrialResult {
    linked: bool,
    recovered: bool,
    hash_verified: bool,
    time_ms: f64,
    patterns: u64,
    rank: usize,
}

struct Cell {
    b: usize,
    mode: TrialMode,
}

fn trial_rng(seed: u64, cell: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | trial as u64);
    rng
}

fn run_trial<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    code: &LinearCode,
    cell: &Cell,
    rng: &mut R,
) -> Result<TrialResult, ExperimentError> {
    let n = code.n();
    let field = code.field();
    let w1 = FieldVector::random(field, n, rng);
    let w2 = match cell.mode {
        TrialMode::NonRelated => FieldVector::random(field, n, rng),
        TrialMode::Related => {
            let e = match config.related_sampling {
                RelatedSampling::ExactWeight => FieldVector::random_weight(field, n, cell.b, rng)
                    .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?,
                RelatedSampling::UniformBall => {
                    let space = PatternSpace::new(n, field.order(), cell.b)?;
                    let index = rng.random_range(0..space.total());
                    space.unrank(index).expect("index below total").to_vector(field, n)
                }
            };
            w1.add(&e).expect("same length")
        }
    };
    let t1 = random_transform(config.transform, n, field, rng);
    let t2 = random_transform(config.transform, n, field, rng);
    let opts = EnrollOptions { hash: config.with_hash.then_some(HashAlg::Sha256), noise_flips: config.noise_z };
    let (r1, _) = enroll_with_codeword(&w1, code, &t1, opts, rng)?;
    let (r2, _) = enroll_with_codeword(&w2, code, &t2, opts, rng)?;

    let start = Instant::now();
    let (_, outcome) = attack_records(code, &r1, &r2, config.with_hash, &AttackOptions::new(cell.b))?;
    let time_ms = if config.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };

    let recovered = outcome.candidates.as_ref().is_some_and(|c| c.w1 == w1 && c.w2 == w2);
    Ok(TrialResult {
        linked: outcome.is_related(),
        recovered,
        hash_verified: outcome.hash_verified,
        time_ms,
        patterns: outcome.patterns_scanned,
        rank: outcome.rank,
    })
}

fn summarize(config: &ExperimentConfig, code: &LinearCode, cell: &Cell, results: &[TrialResult]) -> CellReport {
    let trials = results.len();
    let linked = results.iter().filter(|r| r.linked).count();
    let recovered = results.iter().filter(|r| r.recovered).count();
    let hash_verified = results.iter().filter(|r| r.hash_verified).count();
    let (mean_time_ms, median_time_ms) = if config.timing {
        let mut times: Vec<f64> = results.iter().map(|r| r.time_ms).collect();
        let mean = times.iter().sum::<f64>() / trials as f64;
        times.sort_by(f64::total_cmp);
        let median =
            if trials % 2 == 1 { times[trials / 2] } else { (times[trials / 2 - 1] + times[trials / 2]) / 2.0 };
        (Some(mean), Some(median))
    } else {
        (None, None)
    };
    let mut rank_histogram = BTreeMap::new();
    for r in results {
        *rank_histogram.entry(r.rank).or_insert(0) += 1;
    }
    CellReport {
        code: config.code.clone(),
        n: code.n(),
        k: code.k(),
        d: code.d(),
        b: cell.b,
        mode: cell.mode,
        trials,
        linked,
        recovered,
        hash_verified,
        linkage_rate: linked as f64 / trials as f64,
        recovery_rate: recovered as f64 / trials as f64,
        mean_time_ms,
        median_time_ms,
        patterns_scanned_mean: results.iter().map(|r| r.patterns as f64).sum::<f64>() / trials as f64,
        patterns_scanned_max: results.iter().map(|r| r.patterns).max().unwrap_or(0),
        rank_histogram,
    }
}

/// Runs every (b, mode) cell of the configuration on `threads` workers.
/// The thread count is not part of the report since it cannot change it.
pub fn run_table1(config: &ExperimentConfig, threads: usize) -> Result<ExperimentReport, ExperimentError> {
    let descriptor: CodeDescriptor = config.code.parse()?;
    let code = descriptor.build()?;
    config.validate(&code)?;
    if threads == 0 {
        return Err(ExperimentError::InvalidConfig("threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    let mut cells = Vec::new();
    let grid = config.b_values.iter().flat_map(|&b| config.modes.iter().map(move |&mode| Cell { b, mode }));
    for (index, cell) in grid.enumerate() {
        let results: Result<Vec<TrialResult>, ExperimentError> = pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    if config.secure_rng {
                        run_trial(config, &code, &cell, &mut StdRng::from_os_rng())
                    } else {
                        run_trial(config, &code, &cell, &mut trial_rng(config.seed, index, t))
                    }
                })
                .collect()
        });
        cells.push(summarize(config, &code, &cell, &results?));
    }
    let rng = if config.secure_rng { SECURE_RNG_ID } else { RNG_ID };
    Ok(ExperimentReport { config: config.clone(), rng: rng.to_string(), cells })
}

pub const CSV_HEADER: &str = "code,n,k,d,b,mode,trials,linkage_rate,recovery_rate,mean_time_ms,median_time_ms,seed";

fn opt_ms(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_default()
}

/// Writes the report and returns the number of bytes written.
pub fn write_report(report: &ExperimentReport, format: ReportFormat, sink: &mut dyn Write) -> std::io::Result<usize> {
    let text = match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for c in &report.cells {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{:.4},{:.4},{},{},{}\n",
                    c.code,
                    c.n,
                    c.k,
                    c.d,
                    c.b,
                    c.mode,
                    c.trials,
                    c.linkage_rate,
                    c.recovery_rate,
                    opt_ms(c.mean_time_ms),
                    opt_ms(c.median_time_ms),
                    report.config.seed
                ));
            }
            s
        }
    };
    sink.write_all(text.as_bytes())?;
    Ok(text.len())
}

/// What the walkthrough prints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoResult {
    /// Both feature vectors recovered exactly.
    Reverted,
    Related,
    NonRelated,
}

impl fmt::Display for DemoResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DemoResult::Reverted => "REVERTED",
            DemoResult::Related => "RELATED",
            DemoResult::NonRelated => "NON-RELATED",
        })
    }
}

/// The walkthrough scenario: a (127,36) BCH code, feature vectors at distance
/// `hw` (or independent when `related` is false), random bit permutations,
/// and the attack with bound `hw`.
pub fn appendix_demo<R: Rng + ?Sized>(
    hw: usize,
    related: bool,
    with_hash: bool,
    rng: &mut R,
) -> Result<DemoResult, ExperimentError> {
    let code = crate::codes::bch_build(7, 15)?;
    let n = code.n();
    let field = code.field();
    let w1 = FieldVector::random(field, n, rng);
    let w2 = if related {
        let e =
            FieldVector::random_weight(field, n, hw, rng).map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        w1.add(&e).expect("same length")
    } else {
        FieldVector::random(field, n, rng)
    };
    let p1 = random_transform(TransformKind::BitPermutation, n, field, rng);
    let p2 = random_transform(TransformKind::BitPermutation, n, field, rng);
    let opts = EnrollOptions { hash: Some(HashAlg::Sha256), noise_flips: 0 };
    let (r1, _) = enroll_with_codeword(&w1, &code, &p1, opts, rng)?;
    let (r2, _) = enroll_with_codeword(&w2, &code, &p2, opts, rng)?;
    let hashes = with_hash
        .then(|| (r1.hash.as_ref().expect("enrolled with hash"), r2.hash.as_ref().expect("enrolled with hash")));
    let outcome = modified_decodability_attack(
        code.generator(),
        (&r1.commitment, &p1),
        (&r2.commitment, &p2),
        hashes,
        &AttackOptions::new(hw),
    )?;
    Ok(match outcome.candidates {
        None => DemoResult::NonRelated,
        Some(c) if c.w1 == w1 && c.w2 == w2 => DemoResult::Reverted,
        Some(_) => DemoResult::Related,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_b_values_give_header_only_csv() {
        let config = ExperimentConfig::new("bch:31:5", vec![], 10, vec![TrialMode::Related], 1);
        let report = run_table1(&config, 1).unwrap();
        let mut out = Vec::new();
        write_report(&report, ReportFormat::Csv, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn guardrail_refuses_huge_cells() {
        let config = ExperimentConfig::new("bch:255:26", vec![5], 1, vec![TrialMode::NonRelated], 1);
        assert!(matches!(run_table1(&config, 1), Err(ExperimentError::TooManyPatterns { b: 5, .. })));
    }

    #[test]
    fn invalid_configs() {
        let mut config = ExperimentConfig::new("bch:31:5", vec![1], 0, vec![TrialMode::Related], 1);
        assert!(matches!(run_table1(&config, 1), Err(ExperimentError::InvalidConfig(_))));
        config.trials = 1;
        config.b_values = vec![32];
        assert!(matches!(run_table1(&config, 1), Err(ExperimentError::InvalidConfig(_))));
    }
}

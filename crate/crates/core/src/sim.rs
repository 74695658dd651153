//! AWGN Monte Carlo frame-error-rate simulation with a flooding min-sum
//! decoder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cb::ScCode;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Eb/N0 in dB; `f64::INFINITY` is a noiseless channel.
    pub snr_db_points: Vec<f64>,
    pub max_frames: u64,
    pub min_frame_errors: u64,
    pub iterations: usize,
    pub seed: u64,
    pub normalization: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            snr_db_points: vec![2.0],
            max_frames: 100_000,
            min_frame_errors: 100,
            iterations: 15,
            seed: 0,
            normalization: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return Err(Error::InvalidParameter(
                "max_frames and min_frame_errors must be at least 1".into(),
            ));
        }
        if !(self.normalization > 0.0 && self.normalization <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "normalization {} outside (0, 1]",
                self.normalization
            )));
        }
        if self.snr_db_points.is_empty() || self.snr_db_points.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidParameter(
                "SNR points must be non-empty numbers".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FERPoint {
    pub snr_db: f64,
    pub frames_run: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl FERPoint {
    pub fn new(snr_db: f64, frames_run: u64, frame_errors: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(frame_errors, frames_run);
        let fer = if frames_run == 0 {
            0.0
        } else {
            frame_errors as f64 / frames_run as f64
        };
        Self {
            snr_db,
            frames_run,
            frame_errors,
            fer,
            ci_low,
            ci_high,
        }
    }

    pub fn overlaps(&self, other: &FERPoint) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (low, high)
}

/// Noise variance per BPSK symbol for Eb/N0 `snr_db` at code rate `rate`.
pub fn noise_variance(snr_db: f64, rate: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

/// Edge-indexed Tanner graph reused across frames.
#[derive(Debug, Clone)]
pub struct MinSumDecoder {
    n_cols: usize,
    row_start: Vec<usize>,
    edge_var: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub hard: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Default)]
struct Scratch {
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    total: Vec<f64>,
    hard: Vec<u8>,
}

impl MinSumDecoder {
    pub fn new(h: &SparseMatrix) -> Self {
        let mut row_start = Vec::with_capacity(h.n_rows() + 1);
        let mut edge_var = Vec::with_capacity(h.nnz());
        row_start.push(0);
        for r in 0..h.n_rows() {
            edge_var.extend_from_slice(h.row(r));
            row_start.push(edge_var.len());
        }
        Self {
            n_cols: h.n_cols(),
            row_start,
            edge_var,
        }
    }

    pub fn decode(
        &self,
        llr: &[f64],
        iterations: usize,
        normalization: f64,
    ) -> Result<DecodeResult> {
        if llr.len() != self.n_cols {
            return Err(Error::mismatch(
                format!("{} LLRs", self.n_cols),
                format!("{} LLRs", llr.len()),
            ));
        }
        let mut s = Scratch::default();
        let (converged, iterations) = self.run(llr, iterations, normalization, &mut s);
        Ok(DecodeResult {
            hard: s.hard,
            converged,
            iterations,
        })
    }

    fn syndrome_ok(&self, hard: &[u8]) -> bool {
        self.row_start.windows(2).all(|w| {
            self.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ hard[v])
                == 0
        })
    }

    fn run(&self, llr: &[f64], iterations: usize, alpha: f64, s: &mut Scratch) -> (bool, usize) {
        let edges = self.edge_var.len();
        s.c2v.clear();
        s.c2v.resize(edges, 0.0);
        s.v2c.clear();
        s.v2c.extend(self.edge_var.iter().map(|&v| llr[v]));
        s.total.clear();
        s.total.resize(self.n_cols, 0.0);
        s.hard.clear();
        s.hard.extend(llr.iter().map(|&l| u8::from(l < 0.0)));
        if self.syndrome_ok(&s.hard) {
            return (true, 0);
        }
        for it in 1..=iterations {
            for w in self.row_start.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut arg = lo;
                let mut negative = false;
                for e in lo..hi {
                    let m = s.v2c[e];
                    negative ^= m < 0.0;
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in lo..hi {
                    let mag = if e == arg { min2 } else { min1 };
                    let neg = negative ^ (s.v2c[e] < 0.0);
                    let val = alpha * mag;
                    s.c2v[e] = if neg { -val } else { val };
                }
            }
            s.total.copy_from_slice(llr);
            for (e, &v) in self.edge_var.iter().enumerate() {
                s.total[v] += s.c2v[e];
            }
            for (e, &v) in self.edge_var.iter().enumerate() {
                s.v2c[e] = s.total[v] - s.c2v[e];
            }
            for (h, &t) in s.hard.iter_mut().zip(&s.total) {
                *h = u8::from(t < 0.0);
            }
            if self.syndrome_ok(&s.hard) {
                return (true, it);
            }
        }
        (false, iterations)
    }
}

/// Flooding normalized min-sum. Returns the hard decision, whether the
/// syndrome is zero, and the number of iterations used (0 when the channel
/// decision is already a codeword).
pub fn min_sum_decode(
    h: &SparseMatrix,
    llr: &[f64],
    iterations: usize,
    normalization: f64,
) -> Result<(Vec<u8>, bool, usize)> {
    let out = MinSumDecoder::new(h).decode(llr, iterations, normalization)?;
    Ok((out.hard, out.converged, out.iterations))
}

fn frame_rng(seed: u64, snr_index: usize, frame: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(snr_index as u64).to_le_bytes());
    key[16..24].copy_from_slice(&frame.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

struct FrameJob<'a> {
    decoder: &'a MinSumDecoder,
    sigma: f64,
    seed: u64,
    snr_index: usize,
    iterations: usize,
    alpha: f64,
}

impl FrameJob<'_> {
    /// True when the all-zero codeword is not recovered.
    fn fails(&self, frame: u64, llr: &mut Vec<f64>, s: &mut Scratch) -> bool {
        let mut rng = frame_rng(self.seed, self.snr_index, frame);
        llr.clear();
        // A common positive LLR scale does not change min-sum decisions.
        llr.extend((0..self.decoder.n_cols).map(|_| {
            let n: f64 = StandardNormal.sample(&mut rng);
            1.0 + self.sigma * n
        }));
        let (converged, _) = self.decoder.run(llr, self.iterations, self.alpha, s);
        !converged || s.hard.iter().any(|&b| b != 0)
    }
}

const BATCH: u64 = 1024;

#[cfg(feature = "parallel")]
fn run_batch(job: &FrameJob<'_>, frames: std::ops::Range<u64>) -> Vec<bool> {
    use rayon::prelude::*;
    frames
        .into_par_iter()
        .map_init(
            || (Vec::new(), Scratch::default()),
            |(llr, s), f| job.fails(f, llr, s),
        )
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_batch(job: &FrameJob<'_>, frames: std::ops::Range<u64>) -> Vec<bool> {
    let mut llr = Vec::new();
    let mut s = Scratch::default();
    frames.map(|f| job.fails(f, &mut llr, &mut s)).collect()
}

/// Simulates the parity-check matrix `h` at rate `rate` under `cfg`.
pub fn simulate_matrix(h: &SparseMatrix, rate: f64, cfg: &SimConfig) -> Result<Vec<FERPoint>> {
    cfg.validate()?;
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rate {rate} outside (0, 1]"
        )));
    }
    let decoder = MinSumDecoder::new(h);
    let mut points = Vec::with_capacity(cfg.snr_db_points.len());
    for (snr_index, &snr_db) in cfg.snr_db_points.iter().enumerate() {
        let job = FrameJob {
            decoder: &decoder,
            sigma: noise_variance(snr_db, rate).sqrt(),
            seed: cfg.seed,
            snr_index,
            iterations: cfg.iterations,
            alpha: cfg.normalization,
        };
        let mut frames = 0;
        let mut errors = 0;
        'point: while frames < cfg.max_frames {
            let end = (frames + BATCH).min(cfg.max_frames);
            for failed in run_batch(&job, frames..end) {
                frames += 1;
                errors += u64::from(failed);
                if errors >= cfg.min_frame_errors {
                    break 'point;
                }
            }
        }
        points.push(FERPoint::new(snr_db, frames, errors));
    }
    Ok(points)
}

/// Simulates a coupled code at its design rate.
pub fn simulate(code: &ScCode, cfg: &SimConfig) -> Result<Vec<FERPoint>> {
    simulate_matrix(code.lifted(), code.design_rate(), cfg)
}

/// One labelled FER curve for CSV output.
#[derive(Debug, Clone)]
pub struct FerCurve {
    pub code: String,
    pub rate: f64,
    pub points: Vec<FERPoint>,
}

/// CSV with a leading comment describing the channel convention. A `code`
/// column is added when more than one curve is written.
pub fn to_csv(curves: &[FerCurve], cfg: &SimConfig) -> String {
    let mut out = String::new();
    let rates: Vec<String> = curves
        .iter()
        .map(|c| format!("{}={:.6}", c.code, c.rate))
        .collect();
    out.push_str(&format!(
        "# snr_db is Eb/N0; sigma^2 = 1/(2 R 10^(snr_db/10)) with design rate R ({}); BPSK, all-zero codeword; flooding min-sum, {} iterations, normalization {}; seed {}\n",
        rates.join(", "),
        cfg.iterations,
        cfg.normalization,
        cfg.seed
    ));
    let labelled = curves.len() > 1;
    if labelled {
        out.push_str("code,");
    }
    out.push_str("snr_db,frames,errors,fer,ci_low,ci_high\n");
    for curve in curves {
        for p in &curve.points {
            if labelled {
                out.push_str(&curve.code);
                out.push(',');
            }
            out.push_str(&format!(
                "{},{},{},{:.6e},{:.6e},{:.6e}\n",
                p.snr_db, p.frames_run, p.frame_errors, p.fer, p.ci_low, p.ci_high
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cb::make_ab_powers;

    fn hamming() -> SparseMatrix {
        let rows = [
            [1, 1, 0, 1, 1, 0, 0],
            [1, 0, 1, 1, 0, 1, 0],
            [0, 1, 1, 1, 0, 0, 1],
        ];
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &b)| b == 1)
                    .map(move |(c, _)| (r, c))
            })
            .collect::<Vec<_>>();
        SparseMatrix::from_entries(3, 7, entries).unwrap()
    }

    #[test]
    fn wilson_matches_reference() {
        // Reference values from the closed-form score interval.
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.055_229_1).abs() < 1e-6, "{lo}");
        assert!((hi - 0.174_365_7).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 50);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.071_347_6).abs() < 1e-6, "{hi}");
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        assert_eq!(wilson_interval(50, 50).1, 1.0);
    }

    #[test]
    fn noise_variance_convention() {
        assert!((noise_variance(0.0, 0.5) - 1.0).abs() < 1e-15);
        assert!((noise_variance(10.0, 0.5) - 0.1).abs() < 1e-15);
        assert_eq!(noise_variance(f64::INFINITY, 0.3), 0.0);
    }

    #[test]
    fn valid_input_converges_at_zero() {
        let h = hamming();
        let (hard, ok, its) = min_sum_decode(&h, &[2.0; 7], 15, 1.0).unwrap();
        assert_eq!((hard, ok, its), (vec![0; 7], true, 0));
        assert!(min_sum_decode(&h, &[1.0; 6], 15, 1.0).is_err());
    }

    #[test]
    fn single_flip_corrected_on_girth_six_code() {
        let cm = make_ab_powers(3, 7, 7).unwrap();
        let h = cm.lift();
        assert_eq!(h.count_cycles(4).unwrap(), 0);
        for bad in [0, 13, 48] {
            let mut llr = vec![4.0; h.n_cols()];
            llr[bad] = -6.0;
            let (hard, ok, its) = min_sum_decode(&h, &llr, 15, 1.0).unwrap();
            assert!(ok && its > 0);
            assert!(hard.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn converged_flag_matches_syndrome() {
        let h = hamming();
        for llr in [
            [1.0, -1.0, 0.5, -0.2, 0.3, 0.9, -1.5],
            [-3.0, -3.0, -3.0, -3.0, -3.0, -3.0, -3.0],
            [0.1, 0.1, -0.1, 0.1, -0.1, 0.1, 0.1],
        ] {
            let (hard, ok, _) = min_sum_decode(&h, &llr, 5, 0.75).unwrap();
            assert_eq!(ok, h.is_codeword(&hard));
        }
    }

    #[test]
    fn stops_at_error_target() {
        let h = make_ab_powers(3, 7, 7).unwrap().lift();
        let cfg = SimConfig {
            snr_db_points: vec![-2.0, f64::INFINITY],
            max_frames: 5000,
            min_frame_errors: 7,
            ..SimConfig::default()
        };
        let pts = simulate_matrix(&h, 4.0 / 7.0, &cfg).unwrap();
        assert_eq!(pts[0].frame_errors, 7);
        assert!(pts[0].frames_run < 5000);
        assert_eq!(
            (pts[1].frames_run, pts[1].frame_errors, pts[1].fer),
            (5000, 0, 0.0)
        );
        assert!(pts[0].ci_low <= pts[0].fer && pts[0].fer <= pts[0].ci_high);
        assert_eq!(simulate_matrix(&h, 4.0 / 7.0, &cfg).unwrap(), pts);
    }

    #[test]
    fn csv_layout() {
        let cfg = SimConfig::default();
        let curve = |code: &str| FerCurve {
            code: code.into(),
            rate: 0.5,
            points: vec![FERPoint::new(1.5, 100, 3)],
        };
        let single = to_csv(&[curve("a")], &cfg);
        let lines: Vec<&str> = single.lines().collect();
        assert!(lines[0].starts_with("# snr_db is Eb/N0"));
        assert_eq!(lines[1], "snr_db,frames,errors,fer,ci_low,ci_high");
        assert!(lines[2].starts_with("1.5,100,3,3.000000e-2,"));
        let both = to_csv(&[curve("a"), curve("b")], &cfg);
        assert!(both.lines().nth(1).unwrap().starts_with("code,"));
        assert!(both.lines().nth(3).unwrap().starts_with("b,1.5,"));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = [
            SimConfig {
                iterations: 0,
                ..SimConfig::default()
            },
            SimConfig {
                min_frame_errors: 0,
                ..SimConfig::default()
            },
            SimConfig {
                normalization: 1.5,
                ..SimConfig::default()
            },
            SimConfig {
                snr_db_points: vec![],
                ..SimConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}

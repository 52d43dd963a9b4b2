//! Monte Carlo estimation of logical failure rates and crossing points.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::code::CssCode;
use crate::decoders::{DecodeOutcome, Decoder, DecoderParams};
use crate::error::{Error, Result};
use crate::gf2::BitVector;

/// Independent bit flips with probability `p`, one random stream per trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Unsupported(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { p, seed })
    }

    /// Generator for trial `t`; streams for different trials never overlap.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }

    pub fn sample_trial(&self, trial: u64, n_qubits: usize) -> BitVector {
        let bern = Bernoulli::new(self.p).expect("probability checked at construction");
        let mut rng = self.trial_rng(trial);
        let mut e = BitVector::zeros(n_qubits);
        for q in 0..n_qubits {
            if bern.sample(&mut rng) {
                e.set(q, true);
            }
        }
        e
    }
}

/// Error drawn from the first trial stream of `model`.
pub fn sample_error(model: &NoiseModel, n_qubits: usize) -> BitVector {
    model.sample_trial(0, n_qubits)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    #[serde(rename = "p_L")]
    pub p_l: f64,
    pub sigma: f64,
}

impl PointRecord {
    pub fn new(p: f64, trials: u64, failures: u64) -> Self {
        let p_l = if trials == 0 { 0.0 } else { failures as f64 / trials as f64 };
        let sigma = if trials == 0 { 0.0 } else { (p_l * (1.0 - p_l) / trials as f64).sqrt() };
        Self { p, trials, failures, p_l, sigma }
    }

    /// Whether the trial count reaches `10^(k+2)` for a failure rate of order `10^-k`.
    pub fn meets_trial_rule(&self) -> bool {
        if self.failures == 0 {
            return false;
        }
        let k = (-self.p_l.log10()).floor().max(0.0);
        self.trials as f64 >= 10f64.powf(k + 2.0)
    }
}

/// Outcome of a single trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrialCounts {
    pub failures: u64,
    pub decoder_failures: u64,
    pub logical_failures: u64,
}

impl TrialCounts {
    fn add(self, o: Self) -> Self {
        Self {
            failures: self.failures + o.failures,
            decoder_failures: self.decoder_failures + o.decoder_failures,
            logical_failures: self.logical_failures + o.logical_failures,
        }
    }
}

/// Decode one sampled error and classify the result. A trial counts as a
/// single failure even when the decoder gives up and the logical check fails.
pub fn run_trial(code: &CssCode, decoder: &dyn Decoder, model: &NoiseModel, trial: u64) -> Result<TrialCounts> {
    let sector = decoder.sector();
    let e = model.sample_trial(trial, code.n());
    let s = code.syndrome(&e, sector)?;
    let out: DecodeOutcome = decoder.decode(&s)?;
    let decoder_failed = out.failed || out.correction.is_none();
    let logical = match &out.correction {
        Some(c) if !out.failed => {
            if code.syndrome(c, sector)? != s {
                return Err(Error::Invariant(format!("{} returned an invalid correction", decoder.name())));
            }
            code.logical_failure(&c.xor(&e)?, sector)?
        }
        _ => false,
    };
    Ok(TrialCounts {
        failures: (decoder_failed || logical) as u64,
        decoder_failures: decoder_failed as u64,
        logical_failures: logical as u64,
    })
}

/// Run trials `start..start + count` and sum their counts.
pub fn run_trials(code: &CssCode, decoder: &dyn Decoder, model: &NoiseModel, start: u64, count: u64) -> Result<TrialCounts> {
    (start..start + count)
        .into_par_iter()
        .map(|t| run_trial(code, decoder, model, t))
        .try_reduce(TrialCounts::default, |a, b| Ok(a.add(b)))
}

/// Fixed-count estimate of the logical failure rate at `model.p`.
pub fn run_mc(code: &CssCode, decoder: &dyn Decoder, model: &NoiseModel, trials: u64) -> Result<PointRecord> {
    if trials == 0 {
        return Err(Error::Unsupported("at least one trial is required".into()));
    }
    let counts = run_trials(code, decoder, model, 0, trials)?;
    Ok(PointRecord::new(model.p, trials, counts.failures))
}

/// Adaptive estimate: keep doubling the trial count from `min_trials` until
/// at least `target_failures` failures are seen or `cap` trials have run.
pub fn run_mc_adaptive(
    code: &CssCode,
    decoder: &dyn Decoder,
    model: &NoiseModel,
    min_trials: u64,
    target_failures: u64,
    cap: u64,
) -> Result<PointRecord> {
    if min_trials == 0 || cap < min_trials {
        return Err(Error::Unsupported(format!("invalid trial budget {min_trials}..{cap}")));
    }
    let mut done = 0;
    let mut failures = 0;
    let mut next = min_trials;
    loop {
        let counts = run_trials(code, decoder, model, done, next - done)?;
        failures += counts.failures;
        done = next;
        if failures >= target_failures || done >= cap {
            break;
        }
        next = (done * 2).min(cap);
    }
    Ok(PointRecord::new(model.p, done, failures))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub value: f64,
    pub uncertainty: f64,
}

fn mean_and_sd(xs: &[f64]) -> Crossing {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Crossing { value: mean, uncertainty: var.sqrt() }
}

/// First sign change of `f` along the sorted abscissae, linearly interpolated.
/// Points where `f` is exactly zero count only when the sign changes across them.
fn first_root(xs: &[f64], f: &[f64]) -> Option<f64> {
    let nz: Vec<usize> = (0..f.len()).filter(|&k| f[k] != 0.0).collect();
    for w in nz.windows(2) {
        let (i, j) = (w[0], w[1]);
        if (f[i] < 0.0) == (f[j] < 0.0) {
            continue;
        }
        if j == i + 1 {
            return Some(xs[i] + (xs[j] - xs[i]) * f[i] / (f[i] - f[j]));
        }
        return Some(xs[i + 1]);
    }
    None
}

fn sorted_points(points: &[PointRecord]) -> Vec<PointRecord> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.p.total_cmp(&b.p));
    pts
}

/// Crossing of `p_L(p)` with `p_L = p`, from the upper (`p_L + sigma`) and
/// lower (`p_L - sigma`) window curves. Returns their mean and the standard
/// deviation of the two crossings.
pub fn estimate_pseudothreshold(points: &[PointRecord]) -> Result<Crossing> {
    let pts = sorted_points(points);
    let xs: Vec<f64> = pts.iter().map(|r| r.p).collect();
    let hi: Vec<f64> = pts.iter().map(|r| r.p_l + r.sigma - r.p).collect();
    let lo: Vec<f64> = pts.iter().map(|r| r.p_l - r.sigma - r.p).collect();
    let a = first_root(&xs, &hi).ok_or(Error::NoCrossing)?;
    let b = first_root(&xs, &lo).ok_or(Error::NoCrossing)?;
    Ok(mean_and_sd(&[a, b]))
}

/// Mean and spread of the pairwise crossings of `p_L(p)` curves for
/// different lattice sizes, sampled on a shared grid of `p` values.
pub fn estimate_threshold_crossing(curves: &[Vec<PointRecord>]) -> Result<Crossing> {
    if curves.len() < 2 {
        return Err(Error::Unsupported("need curves for at least two lattice sizes".into()));
    }
    let sorted: Vec<Vec<PointRecord>> = curves.iter().map(|c| sorted_points(c)).collect();
    let mut crossings = Vec::new();
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let mut xs = Vec::new();
            let mut d = Vec::new();
            for a in &sorted[i] {
                if let Some(b) = sorted[j].iter().find(|b| b.p == a.p) {
                    xs.push(a.p);
                    d.push(a.p_l - b.p_l);
                }
            }
            if let Some(x) = first_root(&xs, &d) {
                crossings.push(x);
            }
        }
    }
    if crossings.is_empty() {
        return Err(Error::NoCrossing);
    }
    Ok(mean_and_sd(&crossings))
}

/// Settings for a sweep over physical error rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub ps: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub paper_fidelity: bool,
    /// Trial cap per point in paper-fidelity mode.
    pub max_trials: u64,
    pub target_failures: u64,
    /// Worker threads; `0` uses the global pool.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ps: Vec::new(),
            trials: 1000,
            seed: 0,
            paper_fidelity: false,
            max_trials: 1_000_000,
            target_failures: 100,
            workers: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub code: String,
    pub decoder: String,
    pub points: Vec<PointRecord>,
    pub pseudothreshold: Option<Crossing>,
    pub wall_time_s: f64,
    pub config: SweepConfig,
    pub params: DecoderParams,
    /// Content hash of the cokernel basis data used, when there is one.
    pub basis_hash: Option<String>,
}

/// Run `config` over every `p`, building the decoder for each rate with `make`.
pub fn run_sweep<'a, F>(code: &CssCode, params: &DecoderParams, config: &SweepConfig, make: F) -> Result<MonteCarloReport>
where
    F: Fn(f64) -> Result<Box<dyn Decoder + 'a>> + Sync,
{
    if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Unsupported(e.to_string()))?;
        return pool.install(|| sweep_inner(code, params, config, &make));
    }
    sweep_inner(code, params, config, &make)
}

fn sweep_inner<'a>(
    code: &CssCode,
    params: &DecoderParams,
    config: &SweepConfig,
    make: &(dyn Fn(f64) -> Result<Box<dyn Decoder + 'a>> + Sync),
) -> Result<MonteCarloReport> {
    let start = Instant::now();
    let mut points = Vec::with_capacity(config.ps.len());
    let mut name = String::new();
    for &p in &config.ps {
        let model = NoiseModel::new(p, config.seed)?;
        let decoder = make(p)?;
        name = decoder.name().to_string();
        let point = if config.paper_fidelity {
            run_mc_adaptive(code, decoder.as_ref(), &model, config.trials, config.target_failures, config.max_trials)?
        } else {
            run_mc(code, decoder.as_ref(), &model, config.trials)?
        };
        points.push(point);
    }
    Ok(MonteCarloReport {
        code: code.name().to_string(),
        decoder: name,
        pseudothreshold: estimate_pseudothreshold(&points).ok(),
        points,
        wall_time_s: start.elapsed().as_secs_f64(),
        config: config.clone(),
        params: params.clone(),
        basis_hash: None,
    })
}

impl MonteCarloReport {
    pub fn to_csv(&self) -> Result<String> {
        points_to_csv(&self.points)
    }

    /// Write `<stem>.csv` and `<stem>.json` next to each other.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv()?)?;
        let mut f = std::fs::File::create(csv_path.with_extension("json"))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

pub fn points_to_csv(points: &[PointRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<PointRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(|e| Error::Parse(e.to_string()))).collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<PointRecord>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Git-style object hash (`blob <len>\0<bytes>`) using SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(p: f64, p_l: f64) -> PointRecord {
        PointRecord { p, trials: 1, failures: 0, p_l, sigma: 0.0 }
    }

    #[test]
    fn extreme_probabilities() {
        assert!(sample_error(&NoiseModel::new(0.0, 3).unwrap(), 100).is_zero());
        assert_eq!(sample_error(&NoiseModel::new(1.0, 3).unwrap(), 100).weight(), 100);
        assert!(NoiseModel::new(1.5, 0).is_err());
    }

    #[test]
    fn half_weight_within_five_sigma() {
        let w = sample_error(&NoiseModel::new(0.5, 11).unwrap(), 10_000).weight() as f64;
        assert!((w - 5000.0).abs() <= 5.0 * 50.0);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let m = NoiseModel::new(0.3, 42).unwrap();
        assert_eq!(m.sample_trial(7, 500), m.sample_trial(7, 500));
        assert_ne!(m.sample_trial(7, 500), m.sample_trial(8, 500));
    }

    #[test]
    fn pseudothreshold_two_point_line() {
        let c = estimate_pseudothreshold(&[pt(0.04, 0.02), pt(0.06, 0.10)]).unwrap();
        // 0.02 + 4 (p - 0.04) = p
        assert!((c.value - 0.14 / 3.0).abs() < 1e-12);
        assert_eq!(c.uncertainty, 0.0);
    }

    #[test]
    fn pseudothreshold_needs_bracket() {
        assert!(matches!(estimate_pseudothreshold(&[pt(0.04, 0.01), pt(0.06, 0.02)]), Err(Error::NoCrossing)));
    }

    #[test]
    fn window_crossings_average() {
        let pts = [
            PointRecord { p: 0.04, trials: 1, failures: 0, p_l: 0.02, sigma: 0.01 },
            PointRecord { p: 0.06, trials: 1, failures: 0, p_l: 0.10, sigma: 0.01 },
        ];
        let c = estimate_pseudothreshold(&pts).unwrap();
        let hi = 0.04 + 0.02 * 0.01 / 0.06;
        let lo = 0.04 + 0.02 * 0.03 / 0.06;
        assert!((c.value - (hi + lo) / 2.0).abs() < 1e-12);
        assert!((c.uncertainty - (lo - hi) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_curves_do_not_cross() {
        let a = vec![pt(0.06, 0.1), pt(0.07, 0.2)];
        assert!(matches!(estimate_threshold_crossing(&[a.clone(), a]), Err(Error::NoCrossing)));
    }

    #[test]
    fn constructed_threshold() {
        let grid = [0.06, 0.065, 0.07, 0.075, 0.08];
        let curves: Vec<Vec<PointRecord>> = [1.0, 2.5, 4.0]
            .iter()
            .map(|a| grid.iter().map(|&p| pt(p, a * (p - 0.073) + 0.073)).collect())
            .collect();
        let c = estimate_threshold_crossing(&curves).unwrap();
        assert!((c.value - 0.073).abs() < 1e-12);
        assert!(c.uncertainty < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![PointRecord::new(0.05, 1000, 37), PointRecord::new(0.1, 10, 0)];
        let text = points_to_csv(&pts).unwrap();
        assert!(text.starts_with("p,trials,failures,p_L,sigma\n"));
        assert_eq!(parse_csv(&text).unwrap(), pts);
    }

    #[test]
    fn sigma_is_binomial() {
        let r = PointRecord::new(0.1, 400, 100);
        assert_eq!(r.p_l, 0.25);
        assert!((r.sigma - (0.25f64 * 0.75 / 400.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trial_rule() {
        assert!(PointRecord::new(0.05, 2000, 100).meets_trial_rule());
        assert!(!PointRecord::new(0.05, 100, 5).meets_trial_rule());
        assert!(!PointRecord::new(0.05, 100, 0).meets_trial_rule());
    }
}

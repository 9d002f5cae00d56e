//! Monte Carlo memory experiments, threshold fits and the built-in checks.
//!
//! A trial samples a circuit-level history for `T` rounds plus a perfect
//! readout, runs overlapping recovery on both check types and records a
//! logical failure on either side. Trials are seeded independently from
//! `(seed, L, p, p1, family, trial)`, so results do not depend on the
//! worker count.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit_noise::{sample_history, Injections, NoiseParams, SectorRecord};
use crate::css::{CheckType, CssCode};
use crate::decoder::{DecoderKind, WeightTable, Weights};
use crate::error::{Error, Result};
use crate::gadget::validate_gadget;
use crate::recovery::{recover, recover_whole_horizon, RecoveryConfig, RecoveryPlan};
use crate::spacetime::{classify, cumulative_data, project, syndrome_history, ErrorHistory, Fault, MeasurementType};
use crate::toric_partition::{ancilla_blocks, Family, PartitionMode, PartitionSchedule, SectorSchedule, ToricSchedule};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "FTGADGET_THREADS";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Idle (preparation and idling) error rate relative to `p`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum P1Mode {
    #[default]
    Equal,
    Zero,
    Value(f64),
}

impl P1Mode {
    pub fn resolve(&self, p: f64) -> f64 {
        match *self {
            P1Mode::Equal => p,
            P1Mode::Zero => 0.0,
            P1Mode::Value(v) => v,
        }
    }
}

impl FromStr for P1Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" | "p" => Ok(P1Mode::Equal),
            "zero" => Ok(P1Mode::Zero),
            v => v
                .parse::<f64>()
                .map(|x| if x == 0.0 { P1Mode::Zero } else { P1Mode::Value(x) })
                .map_err(|_| Error::Config(format!("p1 must be `equal`, `zero` or a number, got `{s}`"))),
        }
    }
}

impl fmt::Display for P1Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            P1Mode::Equal => f.write_str("equal"),
            P1Mode::Zero => f.write_str("zero"),
            P1Mode::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Int(u64),
    Num(f64),
    Str(String),
}

impl<'de> Deserialize<'de> for P1Mode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Int(v) => Ok(if v == 0 { P1Mode::Zero } else { P1Mode::Value(v as f64) }),
            NumOrStr::Num(v) => Ok(if v == 0.0 { P1Mode::Zero } else { P1Mode::Value(v) }),
            NumOrStr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for P1Mode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            P1Mode::Value(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// Number of noisy extraction rounds: fixed, or a multiple of `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rounds {
    Fixed(u32),
    PerSize(f64),
}

impl Default for Rounds {
    fn default() -> Self {
        Rounds::PerSize(2.0)
    }
}

impl Rounds {
    pub fn resolve(&self, l: usize) -> u32 {
        match *self {
            Rounds::Fixed(t) => t,
            Rounds::PerSize(k) => (k * l as f64).ceil() as u32,
        }
    }
}

impl FromStr for Rounds {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("rounds must be an integer or `<k>L`, got `{s}`"));
        match s.strip_suffix('L') {
            Some("") => Ok(Rounds::PerSize(1.0)),
            Some(k) => k.parse().map(Rounds::PerSize).map_err(|_| bad()),
            None => s.parse().map(Rounds::Fixed).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for Rounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rounds::Fixed(t) => write!(f, "{t}"),
            Rounds::PerSize(k) => write!(f, "{k}L"),
        }
    }
}

impl<'de> Deserialize<'de> for Rounds {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Int(v) => u32::try_from(v).map(Rounds::Fixed).map_err(serde::de::Error::custom),
            NumOrStr::Num(v) => Err(serde::de::Error::custom(format!("rounds must be an integer, got {v}"))),
            NumOrStr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for Rounds {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Rounds::Fixed(t) => s.serialize_u32(*t),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    #[default]
    Unit,
    /// Log-likelihood weights from the noise model.
    Noise,
}

impl FromStr for WeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(WeightMode::Unit),
            "noise" => Ok(WeightMode::Noise),
            _ => Err(Error::Config(format!("weights must be `unit` or `noise`, got `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionKey {
    pub m: usize,
    pub mode: PartitionMode,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_trials() -> u64 {
    1000
}

/// A grid of experiment points. Keys of the TOML file match the field names,
/// except `L` for the lattice sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub m: Option<usize>,
    /// Alternative to `mode`/`m` for patch schedules.
    #[serde(default)]
    pub partition: Option<PartitionKey>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub p1: P1Mode,
    #[serde(default)]
    pub rounds: Rounds,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub decoder: DecoderKind,
    #[serde(default)]
    pub weights: WeightMode,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn family(&self) -> Result<Family> {
        match (&self.partition, &self.mode) {
            (Some(_), Some(_)) => Err(Error::Config("give either `partition` or `mode`, not both".into())),
            (Some(k), None) => Family::from_parts(
                match k.mode {
                    PartitionMode::Aligned => "aligned",
                    PartitionMode::Offset => "offset",
                },
                Some(k.m),
            ),
            (None, Some(mode)) => Family::from_parts(mode, self.m),
            (None, None) => Err(Error::Config("missing `mode`".into())),
        }
    }

    /// Checks everything that can be checked before a trial runs.
    pub fn validate(&self) -> Result<()> {
        let family = self.family()?;
        if self.sizes.is_empty() || self.p.is_empty() {
            return Err(Error::Config("need at least one L and one p".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be ≥ 1".into()));
        }
        for &p in &self.p {
            NoiseParams::new(p, self.p1.resolve(p)).map_err(|e| Error::Config(e.to_string()))?;
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("α must be ≥ 1, got {}", self.alpha)));
        }
        for &l in &self.sizes {
            let sched = ToricSchedule::new(l, family).map_err(|e| Error::Config(format!("L = {l}: {e}")))?;
            let rounds = self.rounds.resolve(l);
            crate::recovery::choose_windows(&sched.z, l, self.alpha, rounds)?;
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required".into()))
    }
}

// ---------------------------------------------------------------------------
// Running points
// ---------------------------------------------------------------------------

/// One row of the result CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub mode: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub m: usize,
    pub p: f64,
    pub p1: f64,
    pub decoder: String,
    pub trials: u64,
    pub x_fail: u64,
    pub z_fail: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl ResultRow {
    /// Trials with a logical failure on either side.
    pub fn failures(&self) -> u64 {
        (self.rate * self.trials as f64).round() as u64
    }

    pub fn csv_line(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(self).expect("in-memory CSV");
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// 95% Wilson score interval.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let ph = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (ph + z * z / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of one experiment point.
pub fn point_seed(master: u64, l: usize, p: f64, p1: f64, family: &Family) -> u64 {
    let mut h = splitmix(master);
    for b in family.to_string().bytes() {
        h = splitmix(h ^ b as u64);
    }
    for x in [l as u64, p.to_bits(), p1.to_bits()] {
        h = splitmix(h ^ x);
    }
    h
}

pub fn trial_rng(point_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    rng.set_stream(trial);
    rng
}

/// Everything one point needs, shared by its trials.
pub struct PointSetup {
    pub sched: ToricSchedule,
    pub params: NoiseParams,
    pub rounds: u32,
    pub z_plan: RecoveryPlan,
    pub x_plan: RecoveryPlan,
}

impl PointSetup {
    pub fn new(cfg: &ExperimentConfig, l: usize, p: f64) -> Result<Self> {
        let family = cfg.family()?;
        let sched = ToricSchedule::new(l, family)?;
        let params = NoiseParams::new(p, cfg.p1.resolve(p))?;
        let rounds = cfg.rounds.resolve(l);
        let rc = RecoveryConfig {
            alpha: cfg.alpha,
            decoder: cfg.decoder,
            boundaries: None,
            track_propagation: false,
        };
        let weights = |kind| match cfg.weights {
            WeightMode::Unit => Weights::Unit,
            WeightMode::Noise => Weights::Table(Arc::new(WeightTable::from_noise(&sched, kind, &params))),
        };
        let z_plan = RecoveryPlan::new(&sched.z, l, rounds, &rc, &weights(CheckType::Z))?;
        let x_plan = RecoveryPlan::new(&sched.x, l, rounds, &rc, &weights(CheckType::X))?;
        Ok(PointSetup {
            sched,
            params,
            rounds,
            z_plan,
            x_plan,
        })
    }

    /// `(X failure, Z failure)`: Z checks see X errors and vice versa.
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(bool, bool)> {
        let sample = sample_history(&self.sched, &self.params, self.rounds, rng, &Injections::default(), false)?;
        let x = recover(&self.z_plan, &self.sched.z, &sample.z)?.failure;
        let z = recover(&self.x_plan, &self.sched.x, &sample.x)?.failure;
        Ok((x, z))
    }
}

/// Runs `cfg.trials` trials at one `(L, p)`.
pub fn run_point(cfg: &ExperimentConfig, l: usize, p: f64) -> Result<ResultRow> {
    let seed = cfg.seed()?;
    let setup = PointSetup::new(cfg, l, p)?;
    let family = cfg.family()?;
    let ps = point_seed(seed, l, p, setup.params.p1, &family);
    let start = Instant::now();
    let (x_fail, z_fail, any) = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let (x, z) = setup.trial(&mut trial_rng(ps, i))?;
            Ok::<_, Error>((x as u64, z as u64, (x || z) as u64))
        })
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
    let (ci_lo, ci_hi) = wilson_interval(any, cfg.trials);
    Ok(ResultRow {
        schema_version: SCHEMA_VERSION,
        mode: family.name().to_string(),
        l,
        m: family.patch_size(l),
        p,
        p1: setup.params.p1,
        decoder: cfg.decoder.name().to_string(),
        trials: cfg.trials,
        x_fail,
        z_fail,
        rate: any as f64 / cfg.trials as f64,
        ci_lo,
        ci_hi,
        seed,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the whole grid, handing each finished row to `sink` in order.
pub fn run_grid(cfg: &ExperimentConfig, mut sink: impl FnMut(&ResultRow) -> Result<()>) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    cfg.seed()?;
    let mut rows = Vec::new();
    for &l in &cfg.sizes {
        for &p in &cfg.p {
            let row = run_point(cfg, l, p)?;
            sink(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Builds the global worker pool, honouring [`THREADS_ENV`].
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Threshold fits
// ---------------------------------------------------------------------------

/// Failure rate of a fully mixed memory: each sector lands in one of four
/// logical classes, so a trial succeeds with probability 1/16.
pub const RATE_CEILING: f64 = 15.0 / 16.0;

/// Logistic model `rate = RATE_CEILING·σ(a + b·ln p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogisticFit {
    pub a: f64,
    pub b: f64,
}

impl LogisticFit {
    pub fn rate(&self, p: f64) -> f64 {
        RATE_CEILING / (1.0 + (-(self.a + self.b * p.ln())).exp())
    }
}

/// Maximum-likelihood binomial fit by Fisher scoring on `(p, k, n)` points.
pub fn fit_logistic(points: &[(f64, u64, u64)]) -> Option<LogisticFit> {
    if points.len() < 2 {
        return None;
    }
    let c = RATE_CEILING;
    let xs: Vec<f64> = points.iter().map(|q| q.0.ln()).collect();
    let (mut a, mut b) = (0.0, 0.0);
    // Start from a least-squares fit of smoothed logits.
    {
        let ys: Vec<f64> = points
            .iter()
            .map(|&(_, k, n)| {
                let q = ((k as f64 + 0.5) / (n as f64 + 1.0) / c).min(1.0 - 0.5 / (n as f64 + 1.0));
                (q / (1.0 - q)).ln()
            })
            .collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx > 0.0 {
            b = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
            a = my - b * mx;
        }
    }
    let loglik = |a: f64, b: f64| -> f64 {
        points
            .iter()
            .zip(&xs)
            .map(|(&(_, k, n), &x)| {
                let mu = (c / (1.0 + (-(a + b * x)).exp())).clamp(1e-300, 1.0 - 1e-300);
                k as f64 * mu.ln() + (n - k) as f64 * (1.0 - mu).ln()
            })
            .sum()
    };
    let mut ll = loglik(a, b);
    for _ in 0..200 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&(_, k, n), &x) in points.iter().zip(&xs) {
            let s = 1.0 / (1.0 + (-(a + b * x)).exp());
            let mu = (c * s).clamp(1e-300, 1.0 - 1e-300);
            let dmu = c * s * (1.0 - s);
            let score = (k as f64 - n as f64 * mu) / (mu * (1.0 - mu)) * dmu;
            let w = n as f64 * dmu * dmu / (mu * (1.0 - mu));
            g0 += score;
            g1 += score * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det.abs() > 1e-300) {
            break;
        }
        let da = (h11 * g0 - h01 * g1) / det;
        let db = (h00 * g1 - h01 * g0) / det;
        // Halve the step until the likelihood does not drop.
        let mut t = 1.0;
        let mut next = loglik(a + da, b + db);
        while !(next >= ll) && t > 1e-6 {
            t *= 0.5;
            next = loglik(a + t * da, b + t * db);
        }
        if !(next >= ll) {
            break;
        }
        a += t * da;
        b += t * db;
        ll = next;
        if !(a.is_finite() && b.is_finite()) {
            return None;
        }
        if (t * da).abs() + (t * db).abs() < 1e-10 {
            break;
        }
    }
    Some(LogisticFit { a, b })
}

/// Crossing of two fits inside `[lo, hi]`.
pub fn crossing(f1: &LogisticFit, f2: &LogisticFit, lo: f64, hi: f64) -> Option<f64> {
    let db = f1.b - f2.b;
    if db.abs() < 1e-12 {
        return None;
    }
    let p = ((f2.a - f1.a) / db).exp();
    (p.is_finite() && p >= lo && p <= hi).then_some(p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ThresholdEstimate {
    Crossing {
        p_th: f64,
        uncertainty: f64,
        sizes: (usize, usize),
        fits: (LogisticFit, LogisticFit),
    },
    NoCrossing {
        sizes: (usize, usize),
    },
}

impl ThresholdEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            ThresholdEstimate::Crossing { p_th, .. } => Some(*p_th),
            ThresholdEstimate::NoCrossing { .. } => None,
        }
    }
}

impl fmt::Display for ThresholdEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdEstimate::Crossing {
                p_th, uncertainty, sizes, ..
            } => write!(
                f,
                "p_th = {:.3}% ± {:.3}% (L = {} vs {})",
                100.0 * p_th,
                100.0 * uncertainty,
                sizes.0,
                sizes.1
            ),
            ThresholdEstimate::NoCrossing { sizes } => write!(f, "no crossing (L = {} vs {})", sizes.0, sizes.1),
        }
    }
}

/// Threshold from the crossing of the two largest sizes, with a parametric
/// bootstrap (resampled binomial counts) for the uncertainty.
pub fn threshold_estimate(rows: &[ResultRow], bootstrap: usize, seed: u64) -> Result<ThresholdEstimate> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.l).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::Domain("need at least two lattice sizes".into()));
    }
    let (l1, l2) = (sizes[sizes.len() - 2], sizes[sizes.len() - 1]);
    let pts = |l: usize| -> Vec<(f64, u64, u64)> {
        let mut v: Vec<_> = rows.iter().filter(|r| r.l == l).map(|r| (r.p, r.failures(), r.trials)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (a, b) = (pts(l1), pts(l2));
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::Domain("need at least three p points per size".into()));
    }
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    let (Some(fa), Some(fb)) = (fit_logistic(&a), fit_logistic(&b)) else {
        return Ok(ThresholdEstimate::NoCrossing { sizes: (l1, l2) });
    };
    let Some(p_th) = crossing(&fa, &fb, lo, hi) else {
        return Ok(ThresholdEstimate::NoCrossing { sizes: (l1, l2) });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resample = |pts: &[(f64, u64, u64)], rng: &mut ChaCha8Rng| -> Vec<(f64, u64, u64)> {
        pts.iter()
            .map(|&(p, k, n)| {
                let q = k as f64 / n as f64;
                let k2 = Binomial::new(n, q).map(|d| d.sample(rng)).unwrap_or(k);
                (p, k2, n)
            })
            .collect()
    };
    let mut samples = Vec::new();
    for _ in 0..bootstrap {
        let (ra, rb) = (resample(&a, &mut rng), resample(&b, &mut rng));
        if let (Some(x), Some(y)) = (fit_logistic(&ra), fit_logistic(&rb)) {
            if let Some(c) = crossing(&x, &y, lo, hi) {
                samples.push(c);
            }
        }
    }
    let uncertainty = if samples.len() >= 2 {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(ThresholdEstimate::Crossing {
        p_th,
        uncertainty,
        sizes: (l1, l2),
        fits: (fa, fb),
    })
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

pub const PRESETS: &[&str] = &[
    "table1-steane",
    "table1-offset-m3",
    "table1-bare",
    "table2-steane",
    "table2-offset-m3",
    "table2-offset-m6",
    "table2-offset-m9",
    "table2-offset-m12",
    "table2-aligned-m3",
    "table2-aligned-m6",
    "table2-bare",
    "table2-shor",
    "table2-m3-offset",
];

fn grid(centre: f64, rel: &[f64]) -> Vec<f64> {
    rel.iter().map(|r| (centre * r * 1e6).round() / 1e6).collect()
}

/// Built-in threshold configurations. `table1-*` use `p1 = p`,
/// `table2-*` use `p1 = 0`. Sizes are multiples of `m`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let spread = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.15, 1.3];
    let (table, rest) = name
        .split_once('-')
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
    let p1 = match table {
        "table1" => P1Mode::Equal,
        "table2" => P1Mode::Zero,
        _ => return Err(Error::Config(format!("unknown preset `{name}`"))),
    };
    let (mode, m) = match rest {
        "steane" | "bare" | "shor" => (rest, None),
        "m3-offset" => ("offset", Some(3)),
        _ => {
            let (mode, m) = rest
                .split_once("-m")
                .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
            let m: usize = m.parse().map_err(|_| Error::Config(format!("unknown preset `{name}`")))?;
            (mode, Some(m))
        }
    };
    // Rough threshold guesses used to centre the grids.
    let centre = match (table, mode, m) {
        ("table1", "steane", _) => 0.0205,
        ("table1", _, _) => 0.008,
        (_, "steane", _) => 0.03,
        (_, "bare", _) | (_, "shor", _) => 0.0086,
        (_, _, Some(3)) => 0.0114,
        (_, _, Some(6)) => 0.014,
        (_, _, _) => 0.016,
    };
    let sizes = match m {
        Some(9) => vec![9, 18],
        Some(12) => vec![12, 24],
        _ => vec![6, 12, 18],
    };
    let cfg = ExperimentConfig {
        sizes,
        mode: Some(mode.to_string()),
        m,
        partition: None,
        p: grid(centre, &spread),
        p1,
        rounds: Rounds::PerSize(2.0),
        alpha: 1.0,
        decoder: DecoderKind::UnionFind,
        weights: WeightMode::Noise,
        trials: 20_000,
        seed: None,
        output: None,
    };
    cfg.family()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Built-in property checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: impl Into<String>, failures: Vec<String>, checked: usize) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{checked} cases")
        } else {
            format!("{} of {checked} failed; first: {}", failures.len(), failures[0])
        },
    }
}

/// Families with a valid schedule at size `l`.
pub fn families_for(l: usize) -> Vec<Family> {
    let mut out = vec![Family::Steane, Family::Shor, Family::Bare];
    for m in 2..=l {
        if l % m == 0 {
            out.push(Family::Aligned { m });
            if m % 3 == 0 {
                out.push(Family::Offset { m });
            }
        }
    }
    out
}

/// Patch gadgets satisfy `Γ·H̃ = H`, transversality, `(L/m)²` blocks and
/// `2m(m+1)` ancillas per block.
pub fn check_gadget_algebra(l: usize) -> Result<CheckOutcome> {
    let (lattice, code) = crate::css::toric_code(l)?;
    let mut failures = Vec::new();
    let mut checked = 0;
    for m in (1..=l).filter(|m| l % m == 0) {
        let mut modes = vec![PartitionMode::Aligned];
        if m % 3 == 0 {
            modes.push(PartitionMode::Offset);
        }
        for mode in modes {
            let ps = PartitionSchedule::new(l, m, mode)?;
            for t in 1..=ps.period() {
                for kind in [CheckType::Z, CheckType::X] {
                    checked += 1;
                    let tag = format!("m={m} {mode:?} t={t} {kind:?}");
                    let g = ps.gadget_at(&lattice, kind, t)?;
                    let target: &CssCode = &code;
                    let h = match kind {
                        CheckType::Z => lattice.boundary(),
                        CheckType::X => lattice.coboundary(),
                    };
                    if g.data_check() != *h {
                        failures.push(format!("{tag}: Γ·H̃ differs from the check matrix"));
                    }
                    if !g.is_transversal() {
                        failures.push(format!("{tag}: not transversal"));
                    }
                    if let Err(v) = validate_gadget(&g, target) {
                        failures.push(format!("{tag}: invalid gadget {v:?}"));
                    }
                    let blocks = ancilla_blocks(&g);
                    if blocks.len() != (l / m) * (l / m) {
                        failures.push(format!("{tag}: {} blocks", blocks.len()));
                    }
                    let size = 2 * m * (m + 1);
                    if let Some(b) = blocks.iter().find(|b| b.len() != size) {
                        failures.push(format!("{tag}: block of {} ancillas, expected {size}", b.len()));
                    }
                }
            }
        }
    }
    Ok(outcome(format!("gadget algebra L={l}"), failures, checked))
}

/// Defect-count law of single faults over `rounds` rounds, and `Σ∘Π = Σ` on
/// random histories.
pub fn check_syndrome_algebra(l: usize, rounds: u32, random: usize, seed: u64) -> Result<CheckOutcome> {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for family in families_for(l) {
        let s = ToricSchedule::new(l, family)?;
        for sector in [&s.z, &s.x] {
            for f in all_faults(sector, rounds) {
                checked += 1;
                let h = ErrorHistory::from_faults([f])?;
                let syn = syndrome_history(&h, sector, rounds + 1)?;
                let defects: Vec<(usize, u32)> = syn.defects().collect();
                let ok = match f {
                    Fault::Data { t, .. } => defects.len() == 2 && defects.iter().all(|d| d.1 == t),
                    Fault::Measurement { t, .. } => match classify(sector, &f)? {
                        MeasurementType::TypeI => {
                            defects.len() == 2 && defects[0].0 == defects[1].0 && defects[0].1 == t && defects[1].1 == t + 1
                        }
                        MeasurementType::TypeII => defects.len() == 4,
                    },
                };
                if !ok {
                    failures.push(format!("{family} {f:?}: defects {defects:?}"));
                }
            }
            let faults = all_faults(sector, rounds);
            for _ in 0..random {
                checked += 1;
                let mut h = ErrorHistory::new();
                for _ in 0..rng.random_range(0..8) {
                    h.toggle(faults[rng.random_range(0..faults.len())])?;
                }
                let a = syndrome_history(&h, sector, rounds + 1)?;
                let b = syndrome_history(&project(&h, sector)?, sector, rounds + 1)?;
                if a != b {
                    failures.push(format!("{family}: Σ∘Π ≠ Σ on {h}"));
                }
            }
        }
    }
    Ok(outcome(format!("syndrome algebra L={l}"), failures, checked))
}

/// Every data fault in rounds `1..=rounds + 1` and measurement fault in
/// rounds `1..=rounds`.
pub fn all_faults(sched: &SectorSchedule, rounds: u32) -> Vec<Fault> {
    let mut out = Vec::new();
    for t in 1..=rounds + 1 {
        out.extend((0..sched.num_qubits() as u32).map(|qubit| Fault::Data { qubit, t }));
        if t <= rounds {
            out.extend((0..sched.round(t).num_ancillas() as u32).map(|ancilla| Fault::Measurement { ancilla, t }));
        }
    }
    out
}

/// Record of a noiseless run with `h` injected.
pub fn injected_record(sched: &SectorSchedule, h: &ErrorHistory, rounds: u32) -> Result<SectorRecord> {
    Ok(SectorRecord {
        syndromes: syndrome_history(h, sched, rounds + 1)?,
        effective: h.clone(),
        final_error: cumulative_data(h, sched.num_qubits(), rounds + 1),
    })
}

/// Whole-horizon MWPM on every history of weight ≤ `max_weight` over
/// `rounds` rounds; counts logical failures.
pub fn check_low_weight(l: usize, family: Family, rounds: u32, max_weight: usize) -> Result<CheckOutcome> {
    let s = ToricSchedule::new(l, family)?;
    let mut failures = Vec::new();
    let mut checked = 0;
    for sector in [&s.z, &s.x] {
        let faults = all_faults(sector, rounds);
        let mut run = |h: ErrorHistory| -> Result<()> {
            checked += 1;
            let rec = injected_record(sector, &h, rounds)?;
            let out = recover_whole_horizon(sector, &rec, DecoderKind::Mwpm, &Weights::Unit)?;
            if out.failure {
                failures.push(format!("{:?} sector: {h}", sector.kind()));
            }
            Ok(())
        };
        if max_weight >= 1 {
            for &f in &faults {
                run(ErrorHistory::from_faults([f])?)?;
            }
        }
        if max_weight >= 2 {
            for i in 0..faults.len() {
                for j in i + 1..faults.len() {
                    run(ErrorHistory::from_faults([faults[i], faults[j]])?)?;
                }
            }
        }
        if max_weight > 2 {
            return Err(Error::Unsupported("exhaustive enumeration is limited to weight 2".into()));
        }
    }
    Ok(outcome(
        format!("low-weight decoding L={l} {family} |ψ|≤{max_weight}"),
        failures,
        checked,
    ))
}

/// The checks run by `verify`.
pub fn verify_suite(l: usize) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![check_gadget_algebra(l)?, check_syndrome_algebra(l, 3, 200, 1)?];
    // MWPM is guaranteed to succeed below half the distance.
    let w = (l.div_ceil(2) - 1).min(2);
    for family in families_for(l) {
        out.push(check_low_weight(l, family, 3, w)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: &str, m: Option<usize>) -> ExperimentConfig {
        ExperimentConfig {
            sizes: vec![4],
            mode: Some(mode.into()),
            m,
            partition: None,
            p: vec![0.0],
            p1: P1Mode::Equal,
            rounds: Rounds::Fixed(4),
            alpha: 1.0,
            decoder: DecoderKind::Mwpm,
            weights: WeightMode::Unit,
            trials: 20,
            seed: Some(3),
            output: None,
        }
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            L = [6, 12]
            mode = "offset"
            m = 3
            p = [0.008, 0.011]
            p1 = 0
            rounds = "2L"
            decoder = "union_find"
            weights = "noise"
            trials = 10
            seed = 9
            "#,
        )
        .unwrap();
        assert_eq!(cfg.family().unwrap(), Family::Offset { m: 3 });
        assert_eq!(cfg.p1, P1Mode::Zero);
        assert_eq!(cfg.rounds.resolve(6), 12);
        assert_eq!(cfg.alpha, 1.0);
        assert_eq!(cfg.decoder, DecoderKind::UnionFind);
        assert!(ExperimentConfig::from_toml("L = [4]\nmode = \"bare\"\np = [0.1]\nbogus = 1").is_err());
        let c3 = ExperimentConfig::from_toml("L = [6]\npartition = { m = 3, mode = \"offset\" }\np = [0.1]").unwrap();
        assert_eq!(c3.family().unwrap(), Family::Offset { m: 3 });
        let both = ExperimentConfig::from_toml("L = [6]\nmode = \"shor\"\npartition = { m = 3, mode = \"offset\" }\np = [0.1]");
        assert!(matches!(both.unwrap().family(), Err(Error::Config(_))));
        let c2 = ExperimentConfig::from_toml("L = [4]\nmode = \"bare\"\np = [0.1]\np1 = \"equal\"\nrounds = 7").unwrap();
        assert_eq!((c2.p1, c2.rounds), (P1Mode::Equal, Rounds::Fixed(7)));
        let back = ExperimentConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let mut c = small("offset", Some(2));
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c = small("shor", None);
        c.rounds = Rounds::Fixed(2);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c = small("shor", None);
        c.p = vec![1.5];
        assert!(c.validate().is_err());
        assert!(small("bare", None).validate().is_ok());
    }

    #[test]
    fn zero_noise_never_fails() {
        for (mode, m) in [("shor", None), ("bare", None), ("steane", None), ("aligned", Some(2))] {
            let row = run_point(&small(mode, m), 4, 0.0).unwrap();
            assert_eq!((row.x_fail, row.z_fail, row.rate), (0, 0, 0.0));
        }
    }

    #[test]
    fn deterministic_rows() {
        let mut c = small("bare", None);
        c.p = vec![0.02];
        c.decoder = DecoderKind::UnionFind;
        let a = run_point(&c, 4, 0.02).unwrap();
        let b = run_point(&c, 4, 0.02).unwrap();
        assert_eq!(a.csv_line(), b.csv_line());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| run_point(&c, 4, 0.02)).unwrap();
        assert_eq!(a.csv_line(), one.csv_line());
    }

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-3);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn logistic_recovers_crossing() {
        let true1 = LogisticFit { a: 20.0, b: 4.0 };
        let true2 = LogisticFit { a: 35.0, b: 7.0 };
        let ps = [0.004, 0.005, 0.006, 0.007, 0.008, 0.009];
        let n = 1_000_000;
        let rows: Vec<ResultRow> = [(6, true1), (12, true2)]
            .iter()
            .flat_map(|&(l, f)| {
                ps.iter().map(move |&p| {
                    let mu = f.rate(p);
                    let k = (mu * n as f64).round() as u64;
                    ResultRow {
                        schema_version: 1,
                        mode: "x".into(),
                        l,
                        m: 1,
                        p,
                        p1: 0.0,
                        decoder: "mwpm".into(),
                        trials: n,
                        x_fail: k,
                        z_fail: 0,
                        rate: k as f64 / n as f64,
                        ci_lo: 0.0,
                        ci_hi: 1.0,
                        seed: 0,
                        wall_seconds: 0.0,
                    }
                })
            })
            .collect();
        let est = threshold_estimate(&rows, 50, 1).unwrap();
        let expect = (-15.0f64 / 3.0).exp();
        let got = est.value().unwrap();
        assert!((got - expect).abs() / expect < 1e-3, "{got} vs {expect}");
        let flat: Vec<ResultRow> = rows.iter().filter(|r| r.l == 6).cloned().chain(rows.iter().filter(|r| r.l == 6).cloned().map(|mut r| {
            r.l = 12;
            r
        })).collect();
        assert!(matches!(threshold_estimate(&flat, 10, 1).unwrap(), ThresholdEstimate::NoCrossing { .. }));
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.family().unwrap();
            for &l in &c.sizes {
                ToricSchedule::new(l, c.family().unwrap()).unwrap();
            }
        }
        assert!(preset("table3-x").is_err());
    }

    #[test]
    fn verify_passes_at_four() {
        for c in verify_suite(4).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}

//! Monte Carlo estimation and parameter sweeps.
//!
//! Random draws come from ChaCha8 keyed by `seed_from_u64(seed)`. Trial `i`
//! reads stream `i`; shot `s` of that trial uses the `s`-th 64-bit output of
//! the stream, mapped to [0, 1) by its top 53 bits, and is turned into an
//! outcome by inverse CDF. A trial's counts therefore depend only on
//! (seed, trial, probabilities) and not on which thread ran it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::jaynescummings::{self, JCConfig};
use crate::numcore::ParametricFamily;
use crate::oscillator::{self, OscillatorConfig};
use crate::qbounds::{measure_bound, projective_bound};
use crate::{Error, Result, C64};

/// Minimum number of estimator grid points.
pub const MIN_GRID_POINTS: usize = 11;

/// Bootstrap resamples used for the ratio confidence interval.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

// stream index reserved for the bootstrap
const BOOTSTRAP_STREAM: u64 = u64::MAX;

fn unit_interval(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Outcome counts from `n` i.i.d. draws of `probs` on stream `trial`.
pub fn sample(probs: &[f64], n: u64, seed: u64, trial: u64) -> Result<Vec<u64>> {
    if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidInput("probabilities must be finite and non-negative".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { integral: total });
    }
    let mut cdf: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    // the last outcome with positive mass absorbs round-off in the cumulative sum
    let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1);
    for c in cdf.iter_mut().skip(last) {
        *c = f64::INFINITY;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n {
        let u = unit_interval(&mut rng);
        let k = cdf.partition_point(|c| *c <= u);
        counts[k] += 1;
    }
    Ok(counts)
}

/// Uniform grid of candidate parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl EstimatorGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("estimator grid needs lo < hi, got {lo}..{hi}")));
        }
        if points < MIN_GRID_POINTS {
            return Err(Error::InvalidInput(format!("estimator grid needs at least {MIN_GRID_POINTS} points")));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }
}

fn log_likelihood(counts: &[u64], p: &[f64]) -> f64 {
    counts
        .iter()
        .zip(p)
        .map(|(&c, &q)| if c == 0 { 0.0 } else { c as f64 * q.ln() })
        .sum()
}

/// Maximum-likelihood estimate: grid argmax of the log-likelihood (ties to
/// the lower value) refined by one parabola through the argmax and its two
/// neighbours.
pub fn mle(counts: &[u64], likelihood: impl Fn(f64) -> Vec<f64>, grid: &EstimatorGrid) -> Result<f64> {
    let ll: Vec<f64> = (0..grid.points)
        .map(|i| {
            let p = likelihood(grid.value(i));
            if p.len() != counts.len() {
                return f64::NAN;
            }
            log_likelihood(counts, &p)
        })
        .collect();
    if ll.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("likelihood is undefined on the estimator grid".into()));
    }
    let mut best = 0;
    for (i, v) in ll.iter().enumerate() {
        if *v > ll[best] {
            best = i;
        }
    }
    if ll[best] == f64::NEG_INFINITY {
        return Err(Error::InvalidInput("counts have zero likelihood everywhere on the grid".into()));
    }
    if best == 0 || best + 1 == grid.points {
        return Err(Error::EstimateAtBoundary(grid.value(best)));
    }
    let (a, b, c) = (ll[best - 1], ll[best], ll[best + 1]);
    let curv = a - 2.0 * b + c;
    let mut est = grid.value(best);
    if a.is_finite() && c.is_finite() && curv < 0.0 {
        est += 0.5 * (a - c) / curv * grid.step();
    }
    Ok(est)
}

/// A user-supplied outcome model with its Fisher information.
#[derive(Debug, Clone)]
pub struct CustomModel {
    pub probabilities: ParametricFamily<Vec<f64>>,
    pub fisher: ParametricFamily<f64>,
}

/// Statistical model a Monte Carlo experiment draws from.
#[derive(Debug, Clone)]
pub enum LabModel {
    /// Energy readout, parameter g. The Fock cutoff is fixed at the true value.
    Oscillator(OscillatorConfig),
    /// Atom readout, parameter ω.
    JaynesCummings(JCConfig),
    Custom(CustomModel),
}

impl LabModel {
    fn likelihood(&self) -> Box<dyn Fn(f64) -> Vec<f64> + Send + Sync> {
        match self {
            LabModel::Oscillator(c) => {
                let fam = oscillator::coefficient_family(c);
                Box::new(move |g| fam.value(g).into_iter().map(|v| v * v).collect())
            }
            LabModel::JaynesCummings(c) => {
                let c = c.clone();
                Box::new(move |w| {
                    if w <= 0.0 {
                        return vec![f64::NAN; 2];
                    }
                    let th = c.kappa * w.sqrt() * c.big_t;
                    let b = c.c1.norm_sqr();
                    vec![c.c0.norm_sqr() + b * th.cos().powi(2), b * th.sin().powi(2)]
                })
            }
            LabModel::Custom(m) => {
                let f = m.probabilities.clone();
                Box::new(move |l| f.value(l))
            }
        }
    }

    fn at(&self, lambda: f64) -> Result<LabModel> {
        Ok(match self {
            LabModel::Oscillator(c) => LabModel::Oscillator(c.with_g(lambda)?),
            LabModel::JaynesCummings(c) => LabModel::JaynesCummings(c.with_omega(lambda)),
            LabModel::Custom(m) => LabModel::Custom(m.clone()),
        })
    }

    /// Fisher information per shot at `lambda`, from the closed forms.
    pub fn fisher(&self, lambda: f64) -> Result<f64> {
        Ok(match self.at(lambda)? {
            LabModel::Oscillator(c) => oscillator::closed_form_energy_fi(&c),
            LabModel::JaynesCummings(c) => jaynescummings::closed_form_fi(&c),
            LabModel::Custom(m) => m.fisher.value(lambda),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub model: LabModel,
    pub true_lambda: f64,
    pub shots: u64,
    pub trials: usize,
    pub seed: u64,
    pub grid: EstimatorGrid,
}

impl MonteCarloConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::TooFewTrials);
        }
        if self.shots == 0 {
            return Err(Error::InvalidInput("shots must be positive".into()));
        }
        if !(self.grid.lo < self.true_lambda && self.true_lambda < self.grid.hi) {
            return Err(Error::InvalidInput(format!(
                "true value {} outside the estimator grid {}..{}",
                self.true_lambda, self.grid.lo, self.grid.hi
            )));
        }
        Ok(())
    }
}

/// Outcome of [`crb_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub empirical_var: f64,
    /// 1/(nF) at the true value.
    pub crb: f64,
    /// empirical_var / crb
    pub ratio: f64,
    pub ci95: [f64; 2],
    pub bootstrap_sigma: f64,
    pub mean_estimate: f64,
    pub mse: f64,
    pub estimates: Vec<f64>,
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Runs `trials` independent maximum-likelihood experiments of `shots` draws
/// each and compares the spread of the estimates with 1/(nF).
pub fn crb_experiment(cfg: &MonteCarloConfig) -> Result<CrbReport> {
    cfg.validate()?;
    let fisher = cfg.model.fisher(cfg.true_lambda)?;
    if fisher.is_nan() || fisher <= 0.0 {
        return Err(Error::NoInformation(fisher));
    }
    let truth = cfg.model.likelihood()(cfg.true_lambda);
    let total: f64 = truth.iter().sum();
    // truncated models lose at most the tail mass; renormalize for sampling
    let truth: Vec<f64> = truth.iter().map(|p| p / total).collect();
    let likelihood = cfg.model.likelihood();
    let estimates = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let counts = sample(&truth, cfg.shots, cfg.seed, trial)?;
            mle(&counts, &likelihood, &cfg.grid)
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = estimates.len() as f64;
    let empirical_var = sample_variance(&estimates);
    let crb = 1.0 / (cfg.shots as f64 * fisher);
    let mean_estimate = estimates.iter().sum::<f64>() / n;
    let mse = estimates.iter().map(|e| (e - cfg.true_lambda).powi(2)).sum::<f64>() / n;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(BOOTSTRAP_STREAM);
    let mut ratios: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let resample: Vec<f64> = (0..estimates.len()).map(|_| estimates[rng.random_range(0..estimates.len())]).collect();
            sample_variance(&resample) / crb
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let quantile = |q: f64| ratios[((q * (ratios.len() - 1) as f64).round()) as usize];
    let bmean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let bootstrap_sigma = (ratios.iter().map(|r| (r - bmean).powi(2)).sum::<f64>() / (ratios.len() - 1) as f64).sqrt();

    Ok(CrbReport {
        empirical_var,
        crb,
        ratio: empirical_var / crb,
        ci95: [quantile(0.025), quantile(0.975)],
        bootstrap_sigma,
        mean_estimate,
        mse,
        estimates,
    })
}

/// Quantities a sweep can tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// Quantum Fisher information.
    J,
    /// Fisher information of the energy measurement.
    FH,
    /// Fisher information of the model's native measurement.
    F,
    /// Eigenbasis information 𝒦_X.
    KX,
    /// (√J + √𝒦_X)²
    Bound13,
    /// Measure information ℐ_m.
    Im,
    /// J + ℐ_m
    BoundJIm,
}

impl Quantity {
    pub const ALL: [Quantity; 7] =
        [Quantity::J, Quantity::FH, Quantity::F, Quantity::KX, Quantity::Bound13, Quantity::Im, Quantity::BoundJIm];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::J => "J",
            Quantity::FH => "F_H",
            Quantity::F => "F",
            Quantity::KX => "K_X",
            Quantity::Bound13 => "bound13",
            Quantity::Im => "Im",
            Quantity::BoundJIm => "boundJ+Im",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == name.trim())
            .ok_or_else(|| Error::UnknownQuantity(name.trim().to_string()))
    }

    /// Parses a comma-separated list.
    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        list.split(',').filter(|s| !s.trim().is_empty()).map(Self::parse).collect()
    }
}

/// Which routes supply the sweep quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Evaluation {
    /// Closed forms.
    #[default]
    ClosedForm,
    /// Numerical routes through the state, POVM and eigenbasis families.
    Numeric,
}

/// A model at one parameter point.
#[derive(Debug, Clone)]
pub enum ModelPoint {
    Oscillator(OscillatorConfig),
    JaynesCummings(JCConfig),
}

/// Evaluates one quantity at one model point.
pub fn evaluate(point: &ModelPoint, q: Quantity, how: Evaluation) -> Result<f64> {
    let numeric = how == Evaluation::Numeric;
    match point {
        ModelPoint::Oscillator(c) => {
            let j = || if numeric { oscillator::numeric_qfi(c) } else { Ok(oscillator::closed_form_qfi(c)) };
            let fh = || {
                if numeric {
                    Ok(oscillator::numeric_energy_fi(c)?.total)
                } else {
                    Ok(oscillator::closed_form_energy_fi(c))
                }
            };
            let k = || if numeric { oscillator::numeric_kx(c) } else { Ok(oscillator::closed_form_kx(c)) };
            match q {
                Quantity::J => j(),
                Quantity::FH | Quantity::F => fh(),
                Quantity::KX => k(),
                Quantity::Bound13 => projective_bound(j()?, k()?),
                // the sample space of the energy readout carries no g-dependent measure
                Quantity::Im => Ok(0.0),
                Quantity::BoundJIm => measure_bound(j()?, 0.0),
            }
        }
        ModelPoint::JaynesCummings(c) => {
            let j = || if numeric { jaynescummings::numeric_qfi(c) } else { Ok(jaynescummings::closed_form_qfi(c)) };
            match q {
                Quantity::J => j(),
                Quantity::F => {
                    if numeric {
                        Ok(jaynescummings::numeric_fi(c)?.total)
                    } else {
                        Ok(jaynescummings::closed_form_fi(c))
                    }
                }
                Quantity::Im => Ok(0.0),
                Quantity::BoundJIm => measure_bound(j()?, 0.0),
                Quantity::FH | Quantity::KX | Quantity::Bound13 => Err(Error::UnknownQuantity(format!("{} (not defined for the Jaynes–Cummings model)", q.name()))),
            }
        }
    }
}

/// Model family of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Oscillator,
    JaynesCummings,
}

impl ModelKind {
    /// Parameter names accepted in `fixed` and as the sweep variable.
    pub fn parameters(&self) -> &'static [&'static str] {
        match self {
            ModelKind::Oscillator => &["m", "omega", "g", "dx", "t"],
            ModelKind::JaynesCummings => &["omega", "kappa", "t", "T", "c1"],
        }
    }

    fn defaults(&self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            ModelKind::Oscillator => &[("m", 1.0), ("omega", 1.0), ("g", 0.0), ("dx", 1.0), ("t", 0.0)],
            ModelKind::JaynesCummings => &[("omega", 1.0), ("kappa", 1.0), ("t", 0.0), ("T", 1.0), ("c1", 1.0)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    /// Builds a model point from named parameters, unspecified ones at their
    /// defaults (unit values, g = 0, t = 0, c₁ = 1).
    pub fn point(&self, params: &BTreeMap<String, f64>) -> Result<ModelPoint> {
        let mut p = self.defaults();
        for (k, v) in params {
            if !self.parameters().contains(&k.as_str()) {
                return Err(Error::InvalidInput(format!("unknown parameter '{k}'")));
            }
            p.insert(k.clone(), *v);
        }
        Ok(match self {
            ModelKind::Oscillator => {
                ModelPoint::Oscillator(OscillatorConfig::new(p["m"], p["omega"], p["g"], p["dx"], p["t"])?)
            }
            ModelKind::JaynesCummings => {
                let c1 = p["c1"];
                if !(-1.0..=1.0).contains(&c1) {
                    return Err(Error::InvalidInput(format!("c1 must lie in [-1, 1], got {c1}")));
                }
                let c0 = C64::new((1.0 - c1 * c1).sqrt(), 0.0);
                ModelPoint::JaynesCummings(JCConfig::new(p["omega"], p["kappa"], p["t"], p["T"], c0, C64::new(c1, 0.0))?)
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub variable: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub fixed: BTreeMap<String, f64>,
    pub outputs: Vec<Quantity>,
    pub evaluation: Evaluation,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidInput("a sweep needs at least 2 steps".into()));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidInput("sweep range must be finite".into()));
        }
        if !self.model.parameters().contains(&self.variable.as_str()) {
            return Err(Error::InvalidInput(format!("unknown sweep variable '{}'", self.variable)));
        }
        if self.outputs.is_empty() {
            return Err(Error::InvalidInput("no quantities requested".into()));
        }
        Ok(())
    }

    /// Grid value at row `i`; the last row is exactly `hi`.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
        }
    }
}

/// Tabulates each requested quantity at each grid point, in grid order.
pub fn sweep(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let probe = spec.model.point(&spec.fixed)?;
    for q in &spec.outputs {
        // reject quantities the model does not define before any work is done
        if let Err(e @ Error::UnknownQuantity(_)) = evaluate(&probe, *q, Evaluation::ClosedForm) {
            return Err(e);
        }
    }
    let rows = (0..spec.steps)
        .into_par_iter()
        .map(|i| {
            let x = spec.value(i);
            let mut params = spec.fixed.clone();
            params.insert(spec.variable.clone(), x);
            let point = spec.model.point(&params)?;
            let mut row = vec![x];
            for q in &spec.outputs {
                row.push(evaluate(&point, *q, spec.evaluation)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec![spec.variable.clone()];
    header.extend(spec.outputs.iter().map(|q| q.name().to_string()));
    Ok(Table { header, rows })
}

/// Numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Formats a double with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::InvalidInput(format!("row {}: {e}", k + 1))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::InvalidInput(format!("row {} has {} cells, header has {}", k + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }
}

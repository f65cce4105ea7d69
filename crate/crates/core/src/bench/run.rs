//! Repeated simulation comparing the Markov adaptive Polya tree with the
//! standard Polya tree.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baseline::{pt_fit_tree, PtSpec};
use crate::bench::loss::{l1_loss_piecewise, DEFAULT_GRID_SIZE};
use crate::bench::scenario::{scenario_sample, Scenario};
use crate::engine::{default_beta_grid, default_states_grid, empirical_bayes, DensityEstimate};
use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::partition::{build_tree, Domain, DEFAULT_DEPTH};
use crate::prior::{BaseMeasure, HyperParams, PriorSettings};

pub const DEFAULT_REPLICATES: usize = 50;
pub const DEFAULT_SIZES: [usize; 6] = [125, 250, 500, 750, 1000, 1250];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Tuned by empirical Bayes on every replicate.
    MarkovApt,
    /// `Beta(k^2, k^2)` splits.
    Pt,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::MarkovApt => "markov_apt",
            Method::Pt => "pt",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markov_apt" | "mapt" | "markov-apt" => Ok(Method::MarkovApt),
            "pt" => Ok(Method::Pt),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenarios: Vec<u8>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub depth: u32,
    pub grid_size: usize,
    pub states_grid: Vec<usize>,
    pub beta_grid: Vec<f64>,
    pub template: PriorSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenarios: vec![1, 2, 3, 4, 5],
            sizes: DEFAULT_SIZES.to_vec(),
            replicates: DEFAULT_REPLICATES,
            methods: vec![Method::MarkovApt, Method::Pt],
            seed: 0,
            depth: DEFAULT_DEPTH,
            grid_size: DEFAULT_GRID_SIZE,
            states_grid: default_states_grid(),
            beta_grid: default_beta_grid(),
            template: PriorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub scenario: u8,
    pub n: usize,
    pub replicate: usize,
    pub method: Method,
    pub l1_loss: f64,
}

/// Aggregates for one `(scenario, n, method)` cell.
///
/// The percentage increase of a replicate is
/// `100 (loss - loss_apt) / loss_apt`; the fields are `None` for the Markov
/// APT itself or when it was not run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub scenario: u8,
    pub n: usize,
    pub method: Method,
    pub replicates: usize,
    pub risk: f64,
    pub pct_increase_mean: Option<f64>,
    pub pct_increase_sd: Option<f64>,
    /// `mean / (sd / sqrt(replicates))`.
    pub t_statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    /// Ordered by scenario, size, replicate, then method as requested.
    pub losses: Vec<LossRecord>,
    pub summary: Vec<SummaryRow>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Data seed of one replicate; independent of the method list and of which
/// other cells are run.
pub fn replicate_seed(seed: u64, scenario: u8, n: usize, replicate: usize) -> u64 {
    let mut h = splitmix64(seed);
    for part in [u64::from(scenario), n as u64, replicate as u64] {
        h = splitmix64(h ^ part);
    }
    h
}

fn fit_loss(method: Method, data: &[f64], scenario: u8, cfg: &BenchConfig) -> Result<f64> {
    let tree = build_tree(data, Domain::unit(), cfg.depth)?;
    let leaves = match method {
        Method::MarkovApt => {
            let tuning = empirical_bayes(
                &tree,
                &BaseMeasure::Uniform,
                &cfg.template,
                &cfg.states_grid,
                &cfg.beta_grid,
            )?;
            let hp = HyperParams::from_settings(
                Domain::unit(),
                cfg.depth,
                BaseMeasure::Uniform,
                &tuning.settings(&cfg.template),
            )?;
            DensityEstimate::fit(tree, hp)?.leaf_densities()?
        }
        Method::Pt => pt_fit_tree(&tree, &PtSpec::level_squared(cfg.depth))?.leaf_densities(),
    };
    l1_loss_piecewise(&leaves, scenario, cfg.grid_size)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(cfg: &BenchConfig, losses: &[LossRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &scenario in &cfg.scenarios {
        for &n in &cfg.sizes {
            let cell: Vec<&LossRecord> = losses
                .iter()
                .filter(|r| r.scenario == scenario && r.n == n)
                .collect();
            let of = |m: Method| -> Vec<f64> {
                cell.iter()
                    .filter(|r| r.method == m)
                    .map(|r| r.l1_loss)
                    .collect()
            };
            let apt = of(Method::MarkovApt);
            for &method in &cfg.methods {
                let own = of(method);
                let (risk, _) = mean_sd(&own);
                let (mut pm, mut ps, mut t) = (None, None, None);
                if method != Method::MarkovApt && apt.len() == own.len() {
                    let pct: Vec<f64> = own
                        .iter()
                        .zip(&apt)
                        .map(|(l, a)| 100.0 * (l - a) / a)
                        .collect();
                    let (m, s) = mean_sd(&pct);
                    pm = Some(m);
                    ps = Some(s);
                    t = Some(m / (s / (pct.len() as f64).sqrt()));
                }
                rows.push(SummaryRow {
                    scenario,
                    n,
                    method,
                    replicates: own.len(),
                    risk,
                    pct_increase_mean: pm,
                    pct_increase_sd: ps,
                    t_statistic: t,
                });
            }
        }
    }
    rows
}

fn validate(cfg: &BenchConfig) -> Result<()> {
    for &id in &cfg.scenarios {
        Scenario::get(id)?;
    }
    if cfg.replicates == 0 {
        return Err(Error::Config("need at least one replicate".into()));
    }
    if cfg.methods.is_empty() || cfg.scenarios.is_empty() || cfg.sizes.is_empty() {
        return Err(Error::Config(
            "scenarios, sizes and methods must be non-empty".into(),
        ));
    }
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    if methods.len() != cfg.methods.len() {
        return Err(Error::Config("duplicate method".into()));
    }
    let leaves = 1usize
        .checked_shl(cfg.depth)
        .ok_or_else(|| Error::Config(format!("depth {} too large", cfg.depth)))?;
    if cfg.grid_size == 0 || !cfg.grid_size.is_multiple_of(leaves) {
        return Err(Error::Config(format!(
            "grid size {} is not a multiple of 2^{}",
            cfg.grid_size, cfg.depth
        )));
    }
    Ok(())
}

/// Runs every `(scenario, size, replicate)` job on the current rayon pool.
/// Results depend only on `cfg`, not on scheduling.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchResult> {
    validate(cfg)?;
    let jobs: Vec<(u8, usize, usize)> = cfg
        .scenarios
        .iter()
        .flat_map(|&s| {
            cfg.sizes
                .iter()
                .flat_map(move |&n| (0..cfg.replicates).map(move |r| (s, n, r)))
        })
        .collect();
    let per_job: Vec<Vec<LossRecord>> = jobs
        .par_iter()
        .map(|&(scenario, n, replicate)| -> Result<Vec<LossRecord>> {
            let data = scenario_sample(
                scenario,
                n,
                replicate_seed(cfg.seed, scenario, n, replicate),
            )?;
            cfg.methods
                .iter()
                .map(|&method| {
                    Ok(LossRecord {
                        scenario,
                        n,
                        replicate,
                        method,
                        l1_loss: fit_loss(method, &data, scenario, cfg)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let losses: Vec<LossRecord> = per_job.into_iter().flatten().collect();
    let summary = summarize(cfg, &losses);
    Ok(BenchResult { losses, summary })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

impl BenchResult {
    pub fn write_losses_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "scenario,n,replicate,method,l1_loss")?;
        for r in &self.losses {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.scenario,
                r.n,
                r.replicate,
                r.method,
                format_f64(r.l1_loss)
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "scenario,n,method,replicates,risk,pct_increase_mean,pct_increase_sd,t_statistic"
        )?;
        for r in &self.summary {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.scenario,
                r.n,
                r.method,
                r.replicates,
                format_f64(r.risk),
                opt(r.pct_increase_mean),
                opt(r.pct_increase_sd),
                opt(r.t_statistic)
            )?;
        }
        Ok(())
    }

    pub fn summary_row(&self, scenario: u8, n: usize, method: Method) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.scenario == scenario && r.n == n && r.method == method)
    }
}

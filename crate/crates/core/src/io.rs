//! Text formats: data files, run configuration, and fitted-model documents.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{forward, DensityEstimate, Tuning};
use crate::error::{Error, Result};
use crate::likelihood::StateComponent;
use crate::partition::{CountedTree, Domain, NodeId, DEFAULT_DEPTH, MAX_DEPTH};
use crate::prior::{BaseMeasure, HyperParams, Kernel, PriorSettings, TransitionMatrix};

pub const MODEL_FORMAT: &str = "mapt-model";
pub const MODEL_VERSION: u32 = 1;
/// Largest state count and quadrature size accepted from untrusted input.
pub const MAX_INPUT_STATES: usize = 64;
pub const MAX_INPUT_QUAD_POINTS: usize = 10_000;
const TABLE_TOLERANCE: f64 = 1e-9;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One number per line. Blank lines and text after `#` are ignored.
pub fn parse_data(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let x: f64 = line.parse().map_err(|_| Error::Parse {
            line: k + 1,
            msg: format!("not a number: {line:?}"),
        })?;
        if !x.is_finite() {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("non-finite value {line:?}"),
            });
        }
        out.push(x);
    }
    Ok(out)
}

pub fn read_data(path: &Path) -> Result<Vec<f64>> {
    parse_data(&std::fs::read_to_string(path)?)
}

/// Run configuration. Every key is optional; flags override the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Maximum depth.
    #[serde(rename = "K")]
    pub depth: Option<u32>,
    /// Number of shrinkage states.
    #[serde(rename = "I")]
    pub states: Option<usize>,
    pub beta: Option<f64>,
    /// `log10` of the smallest precision.
    #[serde(rename = "L")]
    pub log10_lo: Option<f64>,
    /// `log10` of the largest finite precision.
    #[serde(rename = "U")]
    pub log10_hi: Option<f64>,
    /// Quadrature points per state.
    #[serde(rename = "H")]
    pub quad_points: Option<usize>,
    pub base: Option<BaseMeasure>,
    pub seed: Option<u64>,
    pub kernel: Option<Kernel>,
}

/// A [`RunConfig`] with defaults filled in and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub domain: Domain,
    pub depth: u32,
    pub base: BaseMeasure,
    pub settings: PriorSettings,
    pub seed: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&self, other: &RunConfig) -> RunConfig {
        RunConfig {
            lo: other.lo.or(self.lo),
            hi: other.hi.or(self.hi),
            depth: other.depth.or(self.depth),
            states: other.states.or(self.states),
            beta: other.beta.or(self.beta),
            log10_lo: other.log10_lo.or(self.log10_lo),
            log10_hi: other.log10_hi.or(self.log10_hi),
            quad_points: other.quad_points.or(self.quad_points),
            base: other.base.clone().or_else(|| self.base.clone()),
            seed: other.seed.or(self.seed),
            kernel: other.kernel.or(self.kernel),
        }
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let d = PriorSettings::default();
        let domain = Domain::new(self.lo.unwrap_or(0.0), self.hi.unwrap_or(1.0))?;
        let depth = self.depth.unwrap_or(DEFAULT_DEPTH);
        let settings = PriorSettings {
            states: self.states.unwrap_or(d.states),
            beta: self.beta.unwrap_or(d.beta),
            kernel: self.kernel.unwrap_or(d.kernel),
            log10_lo: self.log10_lo.unwrap_or(d.log10_lo),
            log10_hi: self.log10_hi.unwrap_or(d.log10_hi),
            quad_points: self.quad_points.unwrap_or(d.quad_points),
        };
        if settings.states == 0 || settings.states > MAX_INPUT_STATES {
            return Err(Error::Config(format!(
                "I must be between 1 and {MAX_INPUT_STATES}"
            )));
        }
        if settings.quad_points == 0 || settings.quad_points > MAX_INPUT_QUAD_POINTS {
            return Err(Error::Config(format!(
                "H must be between 1 and {MAX_INPUT_QUAD_POINTS}"
            )));
        }
        let base = self.base.clone().unwrap_or_default();
        // builds and discards, to surface every validation error up front
        HyperParams::from_settings(domain, depth, base.clone(), &settings)?;
        Ok(Resolved {
            domain,
            depth,
            base,
            settings,
            seed: self.seed.unwrap_or(0),
        })
    }
}

/// Serialized form of one shrinkage-state component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    Log10Uniform {
        log10_lo: f64,
        log10_hi: f64,
        quad_points: usize,
    },
    Fixed {
        nu: f64,
    },
    Infinity,
}

impl ComponentSpec {
    pub fn of(c: &StateComponent) -> Self {
        if c.is_point_mass_at_infinity() {
            ComponentSpec::Infinity
        } else if c.log10_lo() == c.log10_hi() {
            ComponentSpec::Fixed {
                nu: c.quad_points()[0].value(),
            }
        } else {
            ComponentSpec::Log10Uniform {
                log10_lo: c.log10_lo(),
                log10_hi: c.log10_hi(),
                quad_points: c.quad_points().len(),
            }
        }
    }

    pub fn build(&self) -> Result<StateComponent> {
        match *self {
            ComponentSpec::Log10Uniform {
                log10_lo,
                log10_hi,
                quad_points,
            } => {
                if quad_points > MAX_INPUT_QUAD_POINTS {
                    return Err(Error::Model(format!("{quad_points} quadrature points")));
                }
                StateComponent::log10_uniform(log10_lo, log10_hi, quad_points)
            }
            ComponentSpec::Fixed { nu } => StateComponent::fixed(nu),
            ComponentSpec::Infinity => Ok(StateComponent::infinity()),
        }
    }
}

/// Selected tuning parameters recorded with a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningRecord {
    #[serde(rename = "I")]
    pub states: usize,
    pub beta: f64,
    pub log_marginal: f64,
}

impl From<&Tuning> for TuningRecord {
    fn from(t: &Tuning) -> Self {
        Self {
            states: t.states,
            beta: t.beta,
            log_marginal: t.log_marginal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    version: u32,
    domain: Domain,
    depth: u32,
    base: BaseMeasure,
    components: Vec<ComponentSpec>,
    init: Vec<f64>,
    transition: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tuning: Option<TuningRecord>,
    /// `"k,m:n"` entries in `(k, m)` order.
    counts: Vec<String>,
    log_marginal: f64,
    /// `ln xi` per state of every recursed node, keyed `"k,m"`.
    log_xi: BTreeMap<String, Vec<f64>>,
    /// `ln xi` of nodes where the recursion stopped.
    frontier: BTreeMap<String, f64>,
}

/// Parses a node key `"k,m"`.
pub fn parse_node_id(s: &str) -> Result<NodeId> {
    let bad = || Error::Model(format!("bad node key {s:?}"));
    let (k, m) = s.split_once(',').ok_or_else(bad)?;
    let level: u32 = k.trim().parse().map_err(|_| bad())?;
    let index: u64 = m.trim().parse().map_err(|_| bad())?;
    if level > MAX_DEPTH {
        return Err(bad());
    }
    NodeId::new(level, index).ok_or_else(bad)
}

/// Parses a sparse count entry `"k,m:n"`.
pub fn parse_count_entry(s: &str) -> Result<(NodeId, u64)> {
    let (node, n) = s
        .split_once(':')
        .ok_or_else(|| Error::Model(format!("bad count entry {s:?}")))?;
    let n: u64 = n
        .trim()
        .parse()
        .map_err(|_| Error::Model(format!("bad count in {s:?}")))?;
    Ok((parse_node_id(node)?, n))
}

pub fn format_count_entry(node: NodeId, n: u64) -> String {
    format!("{node}:{n}")
}

/// A model read back from its document.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub estimate: DensityEstimate,
    pub tuning: Option<TuningRecord>,
}

pub fn encode_model(est: &DensityEstimate, tuning: Option<TuningRecord>) -> String {
    let hp = est.hyper_params();
    let tree = est.tree();
    let fwd = est.forward_table();
    let mut counts: Vec<(NodeId, u64)> = tree.nonempty_nodes().collect();
    counts.sort();
    let states = hp.num_states();
    let log_xi = fwd
        .internal_nodes()
        .map(|id| {
            (
                id.to_string(),
                (0..states).map(|i| fwd.log_xi(id, i)).collect(),
            )
        })
        .collect();
    let frontier = fwd.frontier().map(|(id, v)| (id.to_string(), v)).collect();
    let doc = ModelDoc {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        domain: *tree.domain(),
        depth: tree.max_depth(),
        base: hp.base().clone(),
        components: hp.components().iter().map(ComponentSpec::of).collect(),
        init: hp.init_probs().to_vec(),
        transition: hp.transition().rows(),
        tuning,
        counts: counts
            .into_iter()
            .map(|(id, n)| format_count_entry(id, n))
            .collect(),
        log_marginal: est.log_marginal(),
        log_xi,
        frontier,
    };
    serde_json::to_string_pretty(&doc).expect("model document is always serializable")
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TABLE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Rebuilds a model, recomputing the forward table from the counts and
/// rejecting the document if its stored table disagrees.
pub fn decode_model(text: &str) -> Result<LoadedModel> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::Model(format!("unknown format {:?}", doc.format)));
    }
    if doc.version != MODEL_VERSION {
        return Err(Error::Model(format!("unsupported version {}", doc.version)));
    }
    let domain = Domain::new(doc.domain.lo(), doc.domain.hi())?;
    if doc.components.is_empty() || doc.components.len() > MAX_INPUT_STATES {
        return Err(Error::Model(format!(
            "{} components; expected 1 to {MAX_INPUT_STATES}",
            doc.components.len()
        )));
    }
    let components = doc
        .components
        .iter()
        .map(ComponentSpec::build)
        .collect::<Result<Vec<_>>>()?;
    let transition = TransitionMatrix::from_rows(doc.transition)?;
    let hp = HyperParams::new(
        domain, doc.depth, doc.base, components, doc.init, transition,
    )?;
    let entries = doc
        .counts
        .iter()
        .map(|s| parse_count_entry(s))
        .collect::<Result<Vec<_>>>()?;
    let tree = CountedTree::from_counts(domain, doc.depth, entries)?;
    let fwd = forward(&tree, &hp)?;

    if !close(doc.log_marginal, fwd.log_marginal()) {
        return Err(Error::Model(format!(
            "stored log marginal {} disagrees with recomputed {}",
            doc.log_marginal,
            fwd.log_marginal()
        )));
    }
    if doc.log_xi.len() != fwd.internal_nodes().count() {
        return Err(Error::Model(
            "log_xi table does not match the counts".into(),
        ));
    }
    for (key, row) in &doc.log_xi {
        let id = parse_node_id(key)?;
        if !fwd.is_internal(id) || row.len() != hp.num_states() {
            return Err(Error::Model(format!("unexpected log_xi entry {key}")));
        }
        for (i, &v) in row.iter().enumerate() {
            if !close(v, fwd.log_xi(id, i)) {
                return Err(Error::Model(format!("log_xi[{key}][{i}] disagrees")));
            }
        }
    }
    if doc.frontier.len() != fwd.frontier().count() {
        return Err(Error::Model(
            "frontier table does not match the counts".into(),
        ));
    }
    for (key, &v) in &doc.frontier {
        let id = parse_node_id(key)?;
        if fwd.is_internal(id) || !close(v, fwd.log_xi(id, 0)) {
            return Err(Error::Model(format!("frontier[{key}] disagrees")));
        }
    }
    Ok(LoadedModel {
        estimate: DensityEstimate::from_parts(tree, hp, fwd),
        tuning: doc.tuning,
    })
}

pub fn save_model(path: &Path, est: &DensityEstimate, tuning: Option<TuningRecord>) -> Result<()> {
    std::fs::write(path, encode_model(est, tuning))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    decode_model(&std::fs::read_to_string(path)?)
}

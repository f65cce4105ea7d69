//! Hyperparameter bundle: prior mean measure, shrinkage-state components,
//! and the Markov transition structure over states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::StateComponent;
use crate::partition::{node_interval, Domain, NodeId, DEFAULT_DEPTH, MAX_DEPTH};

pub const DEFAULT_LOG10_LO: f64 = -1.0;
pub const DEFAULT_LOG10_HI: f64 = 4.0;
pub const DEFAULT_QUAD_POINTS: usize = 10;

/// Prior mean measure `Q0` on the domain.
///
/// `Piecewise` is a step density: segment `j` between consecutive edges
/// `[lo, breakpoints.., hi]` carries probability `masses[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseMeasure {
    #[default]
    Uniform,
    Piecewise {
        breakpoints: Vec<f64>,
        masses: Vec<f64>,
    },
}

impl BaseMeasure {
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let BaseMeasure::Piecewise {
            breakpoints,
            masses,
        } = self
        else {
            return Ok(());
        };
        if masses.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidBase(format!(
                "{} breakpoints need {} masses, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                masses.len()
            )));
        }
        let mut prev = domain.lo();
        for &b in breakpoints {
            if !(b > prev && b < domain.hi()) {
                return Err(Error::InvalidBase(format!(
                    "breakpoint {b} is not increasing inside the domain"
                )));
            }
            prev = b;
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidBase(
                "every segment needs positive mass".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidBase(format!("masses sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Checks that the density is constant on every level-`depth` cell, so
    /// the fitted model depends on the data only through counts.
    pub(crate) fn validate_alignment(&self, domain: &Domain, depth: u32) -> Result<()> {
        if let BaseMeasure::Piecewise { breakpoints, .. } = self {
            let cells = (1u64 << depth) as f64;
            for &b in breakpoints {
                let t = (b - domain.lo()) / domain.width() * cells;
                if (t - t.round()).abs() > 1e-9 * cells.max(1.0) {
                    return Err(Error::InvalidBase(format!(
                        "breakpoint {b} does not fall on a level-{depth} cell boundary"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Q0([a, b])`.
    pub fn mass(&self, domain: &Domain, a: f64, b: f64) -> f64 {
        match self {
            BaseMeasure::Uniform => (b - a) / domain.width(),
            BaseMeasure::Piecewise {
                breakpoints,
                masses,
            } => {
                let mut total = 0.0;
                let mut left = domain.lo();
                for (j, &m) in masses.iter().enumerate() {
                    let right = breakpoints.get(j).copied().unwrap_or(domain.hi());
                    let overlap = (b.min(right) - a.max(left)).max(0.0);
                    if overlap > 0.0 {
                        total += m * overlap / (right - left);
                    }
                    left = right;
                }
                total
            }
        }
    }

    /// `ln Q0(A)` for a partition node.
    pub fn log_mass(&self, node: NodeId, domain: &Domain) -> f64 {
        match self {
            BaseMeasure::Uniform => -(node.level() as f64) * std::f64::consts::LN_2,
            _ => {
                let (a, b) = node_interval(node, domain);
                self.mass(domain, a, b).ln()
            }
        }
    }
}

/// `Q0(A_l) / Q0(A)`.
pub fn theta0_for(node: NodeId, base: &BaseMeasure, domain: &Domain) -> Result<f64> {
    match base {
        BaseMeasure::Uniform => Ok(0.5),
        BaseMeasure::Piecewise { .. } => {
            let (a, b) = node_interval(node, domain);
            let (_, mid) = node_interval(node.left(), domain);
            let total = base.mass(domain, a, b);
            if !(total > 0.0) {
                return Err(Error::InvalidBase(format!(
                    "node {node} has zero base mass"
                )));
            }
            Ok(base.mass(domain, a, mid) / total)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Uniform,
    #[default]
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub states: usize,
    pub beta: f64,
    pub kernel: Kernel,
}

/// Square row-stochastic matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 || rows.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidHyperParams(
                "transition matrix must be square and non-empty".into(),
            ));
        }
        let m = Self {
            size,
            entries: rows.into_iter().flatten().collect(),
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.size {
            let row = self.row(i);
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidHyperParams(format!(
                    "row {i} has an invalid entry"
                )));
            }
            if row[..i].iter().any(|&p| p != 0.0) {
                return Err(Error::InvalidHyperParams(format!(
                    "row {i} allows a move to a lower state"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidHyperParams(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.size..(from + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.size)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// `I - 1` equal-width intervals on `log10(nu)` over `[lo, hi)`, each with
/// `h` midpoint nodes, followed by the point mass at infinity.
pub fn make_components(
    states: usize,
    log10_lo: f64,
    log10_hi: f64,
    h: usize,
) -> Result<Vec<StateComponent>> {
    if states < 2 {
        return Err(Error::InvalidHyperParams(format!(
            "need at least 2 shrinkage states, got {states}"
        )));
    }
    if !(log10_lo < log10_hi) {
        return Err(Error::InvalidHyperParams(format!(
            "empty precision range [{log10_lo}, {log10_hi})"
        )));
    }
    let width = (log10_hi - log10_lo) / (states - 1) as f64;
    let mut comps = Vec::with_capacity(states);
    for i in 0..states - 1 {
        let a = log10_lo + i as f64 * width;
        let b = if i + 2 == states {
            log10_hi
        } else {
            log10_lo + (i + 1) as f64 * width
        };
        comps.push(StateComponent::log10_uniform(a, b, h)?);
    }
    comps.push(StateComponent::infinity());
    Ok(comps)
}

/// Uniform initial probabilities and `gamma[i][j]` proportional to
/// `exp(-beta |i - j|)` over `j >= i`.
pub fn make_transition(spec: &TransitionSpec) -> Result<(Vec<f64>, TransitionMatrix)> {
    let n = spec.states;
    if n == 0 {
        return Err(Error::InvalidHyperParams("need at least one state".into()));
    }
    if !(spec.beta >= 0.0) || !spec.beta.is_finite() {
        return Err(Error::InvalidHyperParams(format!(
            "stickiness must be finite and non-negative, got {}",
            spec.beta
        )));
    }
    let beta = match spec.kernel {
        Kernel::Uniform => 0.0,
        Kernel::Exponential => spec.beta,
    };
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let weights: Vec<f64> = (i..n).map(|j| (-beta * (j - i) as f64).exp()).collect();
        let total: f64 = weights.iter().sum();
        for (j, w) in (i..n).zip(weights) {
            entries[i * n + j] = w / total;
        }
    }
    let init = vec![1.0 / n as f64; n];
    Ok((init, TransitionMatrix { size: n, entries }))
}

/// The tuning knobs of the default prior recipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSettings {
    pub states: usize,
    pub beta: f64,
    pub kernel: Kernel,
    pub log10_lo: f64,
    pub log10_hi: f64,
    pub quad_points: usize,
}

impl Default for PriorSettings {
    fn default() -> Self {
        Self {
            states: 2,
            beta: 0.0,
            kernel: Kernel::Exponential,
            log10_lo: DEFAULT_LOG10_LO,
            log10_hi: DEFAULT_LOG10_HI,
            quad_points: DEFAULT_QUAD_POINTS,
        }
    }
}

/// Everything the engine needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    domain: Domain,
    max_depth: u32,
    base: BaseMeasure,
    components: Vec<StateComponent>,
    init: Vec<f64>,
    transition: TransitionMatrix,
}

impl HyperParams {
    pub fn new(
        domain: Domain,
        max_depth: u32,
        base: BaseMeasure,
        components: Vec<StateComponent>,
        init: Vec<f64>,
        transition: TransitionMatrix,
    ) -> Result<Self> {
        if max_depth == 0 || max_depth > MAX_DEPTH {
            return Err(Error::InvalidDepth {
                depth: max_depth,
                max: MAX_DEPTH,
            });
        }
        base.validate(&domain)?;
        base.validate_alignment(&domain, max_depth)?;
        let n = components.len();
        if n == 0 || init.len() != n || transition.size() != n {
            return Err(Error::InvalidHyperParams(format!(
                "{n} components, {} initial probabilities, {}x{0} transitions",
                init.len(),
                transition.size()
            )));
        }
        if init.iter().any(|&p| !(p >= 0.0)) || (init.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidHyperParams(
                "initial probabilities must be a distribution".into(),
            ));
        }
        transition.validate()?;
        Ok(Self {
            domain,
            max_depth,
            base,
            components,
            init,
            transition,
        })
    }

    /// The default recipe. With one state this is the adaptive Polya tree
    /// with `log10(nu)` uniform on `[log10_lo, log10_hi)`.
    pub fn from_settings(
        domain: Domain,
        max_depth: u32,
        base: BaseMeasure,
        settings: &PriorSettings,
    ) -> Result<Self> {
        let components = if settings.states == 1 {
            vec![StateComponent::log10_uniform(
                settings.log10_lo,
                settings.log10_hi,
                settings.quad_points,
            )?]
        } else {
            make_components(
                settings.states,
                settings.log10_lo,
                settings.log10_hi,
                settings.quad_points,
            )?
        };
        let (init, transition) = make_transition(&TransitionSpec {
            states: settings.states,
            beta: settings.beta,
            kernel: settings.kernel,
        })?;
        Self::new(domain, max_depth, base, components, init, transition)
    }

    /// A single shrinkage state with the given component.
    pub fn single_state(
        domain: Domain,
        max_depth: u32,
        base: BaseMeasure,
        component: StateComponent,
    ) -> Result<Self> {
        let (init, transition) = make_transition(&TransitionSpec {
            states: 1,
            beta: 0.0,
            kernel: Kernel::Uniform,
        })?;
        Self::new(domain, max_depth, base, vec![component], init, transition)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn base(&self) -> &BaseMeasure {
        &self.base
    }

    pub fn components(&self) -> &[StateComponent] {
        &self.components
    }

    pub fn num_states(&self) -> usize {
        self.components.len()
    }

    pub fn init_probs(&self) -> &[f64] {
        &self.init
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn theta0(&self, node: NodeId) -> f64 {
        theta0_for(node, &self.base, &self.domain)
            .expect("base measure validated positive on the domain")
    }

    pub fn with_transition(&self, init: Vec<f64>, transition: TransitionMatrix) -> Result<Self> {
        Self::new(
            self.domain,
            self.max_depth,
            self.base.clone(),
            self.components.clone(),
            init,
            transition,
        )
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        Self::from_settings(
            Domain::unit(),
            DEFAULT_DEPTH,
            BaseMeasure::Uniform,
            &PriorSettings::default(),
        )
        .expect("default settings are valid")
    }
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use mapt::{
    Alpha, BaseMeasure, DensityEstimate, Domain, HyperParams, Kernel, NodeId, PriorSettings,
    PtSpec, StateComponent,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small model on `[0, 1]` described without the library's types.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub data: Vec<f64>,
    pub depth: u32,
    pub states: usize,
    pub quad: usize,
    pub beta: f64,
    pub log10_lo: f64,
    pub log10_hi: f64,
    /// Probability of each depth-`depth` cell under the prior mean.
    pub cell_mass: Vec<f64>,
    /// Piecewise base as `(breakpoints, masses)`, or uniform.
    pub piecewise: Option<(Vec<f64>, Vec<f64>)>,
}

impl Fixture {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let depth = rng.random_range(1..=3u32);
        let n = rng.random_range(0..=6usize);
        let data = (0..n).map(|_| rng.random::<f64>()).collect();
        let states = rng.random_range(1..=3usize);
        let quad = rng.random_range(1..=2usize);
        let beta = f64::from(rng.random_range(0..=20u32)) / 10.0;
        let log10_lo = rng.random_range(-1.0..1.0);
        let log10_hi = log10_lo + rng.random_range(0.5..3.0);
        let cells = 1usize << depth;
        let piecewise = depth >= 2 && rng.random_bool(0.4);
        let (cell_mass, pw) = if piecewise {
            let m0 = rng.random_range(0.1..0.9);
            let per = cells / 4;
            let mass = (0..cells)
                .map(|c| {
                    if c < per {
                        m0 / per as f64
                    } else {
                        (1.0 - m0) / (cells - per) as f64
                    }
                })
                .collect();
            (mass, Some((vec![0.25], vec![m0, 1.0 - m0])))
        } else {
            (vec![1.0 / cells as f64; cells], None)
        };
        Self {
            data,
            depth,
            states,
            quad,
            beta,
            log10_lo,
            log10_hi,
            cell_mass,
            piecewise: pw,
        }
    }

    pub fn base(&self) -> BaseMeasure {
        match &self.piecewise {
            None => BaseMeasure::Uniform,
            Some((b, m)) => BaseMeasure::Piecewise {
                breakpoints: b.clone(),
                masses: m.clone(),
            },
        }
    }

    pub fn hyper_params(&self) -> HyperParams {
        HyperParams::from_settings(
            Domain::unit(),
            self.depth,
            self.base(),
            &PriorSettings {
                states: self.states,
                beta: self.beta,
                kernel: Kernel::Exponential,
                log10_lo: self.log10_lo,
                log10_hi: self.log10_hi,
                quad_points: self.quad,
            },
        )
        .unwrap()
    }

    /// Precision grid of each state; `None` is the point mass at infinity.
    fn precisions(&self) -> Vec<Vec<Option<f64>>> {
        let finite = if self.states == 1 { 1 } else { self.states - 1 };
        let w = (self.log10_hi - self.log10_lo) / finite as f64;
        let mut out: Vec<Vec<Option<f64>>> = (0..finite)
            .map(|s| {
                let a = self.log10_lo + s as f64 * w;
                let step = w / self.quad as f64;
                (0..self.quad)
                    .map(|h| Some(10f64.powf(a + (h as f64 + 0.5) * step)))
                    .collect()
            })
            .collect();
        if self.states > 1 {
            out.push(vec![None]);
        }
        out
    }

    fn transitions(&self) -> Vec<Vec<f64>> {
        let n = self.states;
        (0..n)
            .map(|i| {
                let w: Vec<f64> = (0..n)
                    .map(|j| {
                        if j >= i {
                            (-self.beta * (j - i) as f64).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|x| x / t).collect()
            })
            .collect()
    }

    fn leaf(&self, x: f64) -> u64 {
        let cells = 1u64 << self.depth;
        ((x * cells as f64).floor() as u64).min(cells - 1)
    }

    fn q0(&self, level: u32, index: u64) -> f64 {
        let span = 1usize << (self.depth - level);
        let start = index as usize * span;
        self.cell_mass[start..start + span].iter().sum()
    }

    fn theta0(&self, node: NodeId) -> f64 {
        self.q0(node.level() + 1, 2 * node.index()) / self.q0(node.level(), node.index())
    }

    fn counts(&self, data: &[f64]) -> BTreeMap<NodeId, u64> {
        let mut c = BTreeMap::new();
        for &x in data {
            let m = self.leaf(x);
            for level in 0..=self.depth {
                *c.entry(NodeId::new(level, m >> (self.depth - level)).unwrap())
                    .or_insert(0) += 1;
            }
        }
        c
    }
}

/// `E[theta^l (1 - theta)^r]` under `Beta(theta0 nu, (1 - theta0) nu)` by
/// rising products; `nu = None` is complete shrinkage.
pub fn beta_binomial(theta0: f64, nu: Option<f64>, l: u64, r: u64) -> f64 {
    match nu {
        None => theta0.powi(l as i32) * (1.0 - theta0).powi(r as i32),
        Some(nu) => {
            let mut v = 1.0;
            for j in 0..l {
                v *= theta0 * nu + j as f64;
            }
            for j in 0..r {
                v *= (1.0 - theta0) * nu + j as f64;
            }
            for j in 0..l + r {
                v /= nu + j as f64;
            }
            v
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub log_marginal: f64,
    /// Posterior probability of each root state.
    pub root: Vec<f64>,
    /// `P(C(A) = j | C(parent) = i, data)` for every non-root split with data.
    pub trans: HashMap<NodeId, Vec<Vec<f64>>>,
}

struct Site {
    id: NodeId,
    parent: Option<usize>,
    theta0: f64,
    left: u64,
    right: u64,
}

/// Sums the joint prior times likelihood over every monotone assignment of
/// states and every choice of quadrature point at every split holding data.
pub fn enumerate(fx: &Fixture, data: &[f64]) -> OracleResult {
    let counts = fx.counts(data);
    let sites: Vec<Site> = counts
        .keys()
        .filter(|id| id.level() < fx.depth)
        .map(|&id| Site {
            id,
            parent: None,
            theta0: fx.theta0(id),
            left: counts.get(&id.left()).copied().unwrap_or(0),
            right: counts.get(&id.right()).copied().unwrap_or(0),
        })
        .collect();
    // BTreeMap order is by (level, index), so parents come first
    let pos: HashMap<NodeId, usize> = sites.iter().enumerate().map(|(k, s)| (s.id, k)).collect();
    let sites: Vec<Site> = sites
        .into_iter()
        .map(|s| Site {
            parent: s.id.parent().map(|p| pos[&p]),
            ..s
        })
        .collect();
    let precisions = fx.precisions();
    let trans = fx.transitions();
    let i_n = fx.states;
    // q0 is flat on each leaf of width 2^-K; split factors carry the rest
    let log_leaves = (data.len() as f64) * fx.depth as f64 * std::f64::consts::LN_2;

    let mut total = 0.0;
    let mut root = vec![0.0; i_n];
    let mut joint: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; i_n]; i_n]; sites.len()];
    let mut state = vec![0usize; sites.len()];

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        k: usize,
        weight: f64,
        sites: &[Site],
        precisions: &[Vec<Option<f64>>],
        trans: &[Vec<f64>],
        state: &mut Vec<usize>,
        total: &mut f64,
        root: &mut [f64],
        joint: &mut [Vec<Vec<f64>>],
    ) {
        if k == sites.len() {
            *total += weight;
            if !sites.is_empty() {
                root[state[0]] += weight;
            }
            for (j, s) in sites.iter().enumerate() {
                if let Some(p) = s.parent {
                    joint[j][state[p]][state[j]] += weight;
                }
            }
            return;
        }
        let s = &sites[k];
        let n_states = precisions.len();
        for st in 0..n_states {
            let prior = match s.parent {
                None => 1.0 / n_states as f64,
                Some(p) => trans[state[p]][st],
            };
            if prior == 0.0 {
                continue;
            }
            state[k] = st;
            let h = precisions[st].len() as f64;
            for &nu in &precisions[st] {
                let m = beta_binomial(s.theta0, nu, s.left, s.right);
                dfs(
                    k + 1,
                    weight * prior / h * m,
                    sites,
                    precisions,
                    trans,
                    state,
                    total,
                    root,
                    joint,
                );
            }
        }
    }

    dfs(
        0,
        1.0,
        &sites,
        &precisions,
        &trans,
        &mut state,
        &mut total,
        &mut root,
        &mut joint,
    );

    let mut trans_post = HashMap::new();
    for (j, s) in sites.iter().enumerate() {
        if s.parent.is_some() {
            let parent_marg: Vec<f64> = (0..i_n).map(|i| joint[j][i].iter().sum()).collect();
            let rows = (0..i_n)
                .map(|i| joint[j][i].iter().map(|v| v / parent_marg[i]).collect())
                .collect();
            trans_post.insert(s.id, rows);
        }
    }
    OracleResult {
        log_marginal: total.ln() + log_leaves,
        root: if sites.is_empty() {
            vec![1.0 / i_n as f64; i_n]
        } else {
            root.iter().map(|v| v / total).collect()
        },
        trans: trans_post,
    }
}

pub fn oracle_ppd(fx: &Fixture, x: f64) -> f64 {
    let mut aug = fx.data.clone();
    aug.push(x);
    (enumerate(fx, &aug).log_marginal - enumerate(fx, &fx.data).log_marginal).exp()
}

pub fn fixtures(seed: u64, count: usize) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Fixture::random(&mut rng)).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Five-point Gauss-Legendre rule on `[a, b]` split into `pieces` cells.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in X.iter().zip(W) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// `int_0^1 f` split at `breaks`, `pieces` cells per segment.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, breaks: &[f64], pieces: usize) -> f64 {
    let mut edges = vec![0.0];
    edges.extend_from_slice(breaks);
    edges.push(1.0);
    edges
        .windows(2)
        .map(|w| gauss_legendre(&f, w[0], w[1], pieces))
        .sum()
}

/// Monotone state check along every parent link of a draw.
pub fn monotone(states: &HashMap<NodeId, usize>) -> bool {
    states.iter().all(|(id, &s)| match id.parent() {
        Some(p) => states.get(&p).is_none_or(|&ps| ps <= s),
        None => true,
    })
}

/// Compares forward, backward and predictive values of the library with
/// [`enumerate`] on one fixture.
pub fn check_against_oracle(fx: &Fixture, tol: f64) -> Result<(), String> {
    let hp = fx.hyper_params();
    let tree = mapt::build_tree(&fx.data, Domain::unit(), fx.depth).map_err(|e| e.to_string())?;
    let est = DensityEstimate::fit(tree.clone(), hp.clone()).map_err(|e| e.to_string())?;
    let want = enumerate(fx, &fx.data);
    let got = est.log_marginal();
    if (got - want.log_marginal).abs() > tol {
        return Err(format!("log marginal {got} vs {}", want.log_marginal));
    }
    let post = mapt::backward(&tree, &hp, est.forward_table()).map_err(|e| e.to_string())?;
    for (i, (&a, &b)) in post.init().iter().zip(&want.root).enumerate() {
        if !rel_close(a, b, tol) {
            return Err(format!("root state {i}: {a} vs {b}"));
        }
    }
    for (id, rows) in &want.trans {
        for (i, row) in rows.iter().enumerate() {
            for (j, (&a, &b)) in post.row(*id, i).iter().zip(row).enumerate() {
                if !rel_close(a, b, tol) {
                    return Err(format!("node {id} transition {i}->{j}: {a} vs {b}"));
                }
            }
        }
    }
    let cells = 1u64 << fx.depth;
    let mut xs: Vec<f64> = (0..cells)
        .map(|m| (m as f64 + 0.37) / cells as f64)
        .collect();
    xs.extend([0.0, 0.3, 1.0]);
    for x in xs {
        let a = est.ppd(x).map_err(|e| e.to_string())?;
        let b = oracle_ppd(fx, x);
        if !rel_close(a, b, tol) {
            return Err(format!("ppd({x}): {a} vs {b}"));
        }
    }
    Ok(())
}

/// Largest gap between the empirical CDF of `xs` and the scenario CDF, the
/// latter by Gauss-Legendre on `2^16` cells and linear interpolation inside
/// each cell.
pub fn ks_distance(id: u8, mut xs: Vec<f64>) -> f64 {
    let s = mapt::bench::Scenario::get(id).unwrap();
    let cells = 1usize << 16;
    let h = 1.0 / cells as f64;
    let mut cdf = vec![0.0; cells + 1];
    for k in 0..cells {
        cdf[k + 1] = cdf[k] + gauss_legendre(|x| s.pdf(x), k as f64 * h, (k + 1) as f64 * h, 1);
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let k = ((x / h) as usize).min(cells - 1);
        let t = x / h - k as f64;
        let f = cdf[k] + t * (cdf[k + 1] - cdf[k]);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    d
}

pub fn scenario_mass(id: u8) -> f64 {
    let s = mapt::bench::Scenario::get(id).unwrap();
    integrate_split(|x| s.pdf(x), &s.breakpoints(), 1 << 14)
}

/// Single state with one fixed precision `nu = 2c` against the Polya tree
/// with constant `alpha = c`.
pub fn pt_reduction_gap(data: &[f64], depth: u32, c: f64) -> f64 {
    let tree = mapt::build_tree(data, Domain::unit(), depth).unwrap();
    let hp = HyperParams::single_state(
        Domain::unit(),
        depth,
        BaseMeasure::Uniform,
        StateComponent::fixed(2.0 * c).unwrap(),
    )
    .unwrap();
    let est = DensityEstimate::fit(tree, hp).unwrap();
    let pt = mapt::pt_fit(
        data,
        &PtSpec {
            alpha: Alpha::Constant(c),
            base: BaseMeasure::Uniform,
            max_depth: depth,
        },
        Domain::unit(),
    )
    .unwrap();
    let cells = 1u64 << depth;
    (0..cells)
        .map(|m| {
            let x = (m as f64 + 0.5) / cells as f64;
            let a = est.ppd(x).unwrap();
            let b = mapt::pt_ppd(&pt, x).unwrap();
            (a - b).abs() / b
        })
        .fold(0.0, f64::max)
}

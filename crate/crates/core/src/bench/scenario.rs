//! The five test densities on `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::special::ln_gamma_pos;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Uniform {
        a: f64,
        b: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Beta(alpha, beta) mapped affinely onto `(a, b)`.
    BetaRescaled {
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
    },
}

fn beta_log_pdf(alpha: f64, beta: f64, t: f64) -> f64 {
    let log_norm = ln_gamma_pos(alpha + beta) - ln_gamma_pos(alpha) - ln_gamma_pos(beta);
    (alpha - 1.0) * t.ln() + (beta - 1.0) * (1.0 - t).ln() + log_norm
}

fn beta_pdf(alpha: f64, beta: f64, t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    if t == 0.0 || t == 1.0 {
        let shape = if t == 0.0 { alpha } else { beta };
        return if shape > 1.0 {
            0.0
        } else if shape == 1.0 {
            (ln_gamma_pos(alpha + beta) - ln_gamma_pos(alpha) - ln_gamma_pos(beta)).exp()
        } else {
            f64::INFINITY
        };
    }
    beta_log_pdf(alpha, beta, t).exp()
}

fn sample_beta<R: Rng>(rng: &mut R, alpha: f64, beta: f64) -> f64 {
    let x = Gamma::new(alpha, 1.0).expect("positive shape").sample(rng);
    let y = Gamma::new(beta, 1.0).expect("positive shape").sample(rng);
    x / (x + y)
}

impl Dist {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Dist::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Dist::Beta { alpha, beta } => beta_pdf(alpha, beta, x),
            Dist::BetaRescaled { alpha, beta, a, b } => {
                if (a..=b).contains(&x) {
                    beta_pdf(alpha, beta, (x - a) / (b - a)) / (b - a)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Dist::Beta { alpha, beta } => sample_beta(rng, alpha, beta),
            Dist::BetaRescaled { alpha, beta, a, b } => a + (b - a) * sample_beta(rng, alpha, beta),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Dist::Uniform { a, b } | Dist::BetaRescaled { a, b, .. } => (a, b),
            Dist::Beta { .. } => (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: u8,
    pub name: &'static str,
    pub components: Vec<(f64, Dist)>,
}

const fn u(a: f64, b: f64) -> Dist {
    Dist::Uniform { a, b }
}

impl Scenario {
    pub fn get(id: u8) -> Result<Self> {
        let (name, components) = match id {
            1 => (
                "spiky local structures",
                vec![
                    (0.2, u(0.0, 1.0)),
                    (0.2, u(0.2, 0.205)),
                    (0.2, u(0.4, 0.405)),
                    (0.2, u(0.6, 0.605)),
                    (0.2, u(0.8, 0.805)),
                ],
            ),
            2 | 3 => {
                let spike = if id == 2 {
                    (6000.0, 4000.0)
                } else {
                    (4000.0, 6000.0)
                };
                (
                    if id == 2 {
                        "non-overlapping structures of different scales"
                    } else {
                        "overlapping structures of different scales"
                    },
                    vec![
                        (0.1, u(0.0, 1.0)),
                        (0.3, u(0.25, 0.5)),
                        (
                            0.4,
                            Dist::BetaRescaled {
                                alpha: 2.0,
                                beta: 2.0,
                                a: 0.25,
                                b: 0.5,
                            },
                        ),
                        (
                            0.2,
                            Dist::Beta {
                                alpha: spike.0,
                                beta: spike.1,
                            },
                        ),
                    ],
                )
            }
            4 => (
                "sharp boundaries",
                vec![
                    (
                        0.1,
                        Dist::Beta {
                            alpha: 2.0,
                            beta: 2.0,
                        },
                    ),
                    (0.25, u(0.3, 0.55)),
                    (
                        0.05,
                        Dist::BetaRescaled {
                            alpha: 2.0,
                            beta: 2.0,
                            a: 0.3,
                            b: 0.55,
                        },
                    ),
                    (0.55, u(0.55, 0.8)),
                    (
                        0.05,
                        Dist::BetaRescaled {
                            alpha: 2.0,
                            beta: 2.0,
                            a: 0.55,
                            b: 0.8,
                        },
                    ),
                ],
            ),
            5 => (
                "globally smooth structure",
                vec![(
                    1.0,
                    Dist::Beta {
                        alpha: 10.0,
                        beta: 20.0,
                    },
                )],
            ),
            other => return Err(Error::UnknownScenario(other)),
        };
        Ok(Self {
            id,
            name,
            components,
        })
    }

    pub fn all() -> Vec<Scenario> {
        (1..=5)
            .map(|id| Self::get(id).expect("ids 1..=5 exist"))
            .collect()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, d)| w * d.pdf(x)).sum()
    }

    /// Interior points where the density is discontinuous or not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .components
            .iter()
            .flat_map(|(_, d)| {
                let (a, b) = d.support();
                [a, b]
            })
            .filter(|&p| p > 0.0 && p < 1.0)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let weights: Vec<f64> = self.components.iter().map(|(w, _)| *w).collect();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = weights.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                self.components[pick].1.sample(rng)
            })
            .collect()
    }
}

pub fn scenario_pdf(id: u8, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain {
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(Scenario::get(id)?.pdf(x))
}

/// `n` i.i.d. draws from scenario `id`, reproducible from `seed`.
pub fn scenario_sample(id: u8, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Scenario::get(id)?.sample(&mut rng, n))
}

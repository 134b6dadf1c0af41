//! Derivative-free optimisers: NFT sequential sinusoidal minimisation, SPSA
//! and Nelder-Mead, all driven through a counting [`CostEvaluator`].

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type CostFn<'a> = Box<dyn FnMut(&[f64]) -> Result<f64> + 'a>;

/// Counts every call to the wrapped cost function.
pub struct CostEvaluator<'a> {
    f: CostFn<'a>,
    count: usize,
}

impl<'a> CostEvaluator<'a> {
    pub fn new(f: impl FnMut(&[f64]) -> Result<f64> + 'a) -> Self {
        CostEvaluator {
            f: Box::new(f),
            count: 0,
        }
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        self.count += 1;
        (self.f)(x)
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub params: Vec<f64>,
    pub cost: f64,
    /// Cumulative evaluations when this iteration finished.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub entries: Vec<TraceEntry>,
}

impl OptimizerTrace {
    fn record(&mut self, params: &[f64], cost: f64, evaluations: usize) {
        self.entries.push(TraceEntry {
            params: params.to_vec(),
            cost,
            evaluations,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.cost).collect()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }
}

/// `c + a·cos δ + b·sin δ`, fitted from samples at `δ = 0, ±π/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

impl Sinusoid {
    pub fn fit(at_zero: f64, at_plus: f64, at_minus: f64) -> Self {
        let c = (at_plus + at_minus) / 2.0;
        Sinusoid {
            c,
            a: at_zero - c,
            b: (at_plus - at_minus) / 2.0,
        }
    }

    pub fn eval(&self, delta: f64) -> f64 {
        self.c + self.a * delta.cos() + self.b * delta.sin()
    }

    /// Shift that minimises the curve.
    pub fn argmin(&self) -> f64 {
        (-self.b).atan2(-self.a)
    }

    pub fn min(&self) -> f64 {
        self.c - self.a.hypot(self.b)
    }
}

/// One sweep per iteration: every parameter in turn is moved to the minimum
/// of the sinusoid through its current value and the two `±π/2` probes. The
/// cached cost is refreshed by a full evaluation every `reset_interval`
/// updates.
pub fn nft_minimize(
    eval: &mut CostEvaluator,
    x0: &[f64],
    iterations: usize,
    reset_interval: Option<usize>,
) -> Result<OptimizerTrace> {
    let mut trace = OptimizerTrace::default();
    if iterations == 0 {
        return Ok(trace);
    }
    if reset_interval == Some(0) {
        return Err(Error::config("reset_interval must be at least 1"));
    }
    let mut x = x0.to_vec();
    let mut current = eval.evaluate(&x)?;
    let mut updates = 0usize;
    for _ in 0..iterations {
        for j in 0..x.len() {
            let theta = x[j];
            x[j] = theta + FRAC_PI_2;
            let plus = eval.evaluate(&x)?;
            x[j] = theta - FRAC_PI_2;
            let minus = eval.evaluate(&x)?;
            let s = Sinusoid::fit(current, plus, minus);
            x[j] = theta + s.argmin();
            current = s.min();
            updates += 1;
            if reset_interval.is_some_and(|r| updates.is_multiple_of(r)) {
                current = eval.evaluate(&x)?;
            }
        }
        trace.record(&x, current, eval.count());
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpsaGains {
    pub a: f64,
    pub c: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaGains {
    fn default() -> Self {
        SpsaGains {
            a: 0.2,
            c: 0.15,
            big_a: 10.0,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

impl SpsaGains {
    fn validate(&self) -> Result<()> {
        let positive = [self.a, self.c, self.alpha, self.gamma];
        if positive.iter().any(|g| g.is_nan() || *g <= 0.0)
            || self.big_a.is_nan()
            || self.big_a < 0.0
        {
            return Err(Error::config(format!(
                "SPSA gains must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Simultaneous-perturbation stochastic approximation. Each iteration uses
/// two evaluations; the recorded cost is their mean.
pub fn spsa_minimize(
    eval: &mut CostEvaluator,
    x0: &[f64],
    iterations: usize,
    gains: &SpsaGains,
    rng_seed: u64,
) -> Result<OptimizerTrace> {
    gains.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut trace = OptimizerTrace::default();
    let mut x = x0.to_vec();
    for k in 0..iterations {
        let ak = gains.a / (gains.big_a + k as f64 + 1.0).powf(gains.alpha);
        let ck = gains.c / (k as f64 + 1.0).powf(gains.gamma);
        let delta: Vec<f64> = (0..x.len())
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi + ck * d).collect();
        let minus: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi - ck * d).collect();
        let (fp, fm) = (eval.evaluate(&plus)?, eval.evaluate(&minus)?);
        let scale = (fp - fm) / (2.0 * ck);
        for (xi, d) in x.iter_mut().zip(&delta) {
            *xi -= ak * scale / d;
        }
        trace.record(&x, (fp + fm) / 2.0, eval.count());
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimplexCoefficients {
    pub reflect: f64,
    pub expand: f64,
    pub contract: f64,
    pub shrink: f64,
}

impl Default for SimplexCoefficients {
    fn default() -> Self {
        SimplexCoefficients {
            reflect: 1.0,
            expand: 2.0,
            contract: 0.5,
            shrink: 0.5,
        }
    }
}

const SIMPLEX_STEP: f64 = 0.25;

fn affine(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(f, g)| f + t * (g - f)).collect()
}

/// Nelder-Mead simplex search for exactly `iterations` steps. The initial
/// simplex is `x0` plus one vertex per coordinate offset by 0.25 rad.
pub fn nelder_mead_minimize(
    eval: &mut CostEvaluator,
    x0: &[f64],
    iterations: usize,
    coeff: &SimplexCoefficients,
) -> Result<OptimizerTrace> {
    let mut trace = OptimizerTrace::default();
    if iterations == 0 {
        return Ok(trace);
    }
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval.evaluate(x0)?;
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += SIMPLEX_STEP;
        let fv = eval.evaluate(&v)?;
        simplex.push((v, fv));
    }
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if n == 0 {
            trace.record(&simplex[0].0, simplex[0].1, eval.count());
            continue;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
            .collect();
        let (worst, f_worst) = simplex[n].clone();
        let (f_best, f_second) = (simplex[0].1, simplex[n - 1].1);
        let xr = affine(&centroid, &worst, -coeff.reflect);
        let fr = eval.evaluate(&xr)?;
        if fr < f_best {
            let xe = affine(&centroid, &xr, coeff.expand);
            let fe = eval.evaluate(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < f_second {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc, accept) = if fr < f_worst {
                let xc = affine(&centroid, &xr, coeff.contract);
                let fc = eval.evaluate(&xc)?;
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = affine(&centroid, &worst, coeff.contract);
                let fc = eval.evaluate(&xc)?;
                let ok = fc < f_worst;
                (xc, fc, ok)
            };
            if accept {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v = affine(&best, &vertex.0, coeff.shrink);
                    let fv = eval.evaluate(&v)?;
                    *vertex = (v, fv);
                }
            }
        }
        let best = simplex
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("simplex is never empty");
        trace.record(&best.0, best.1, eval.count());
    }
    Ok(trace)
}

/// Optimiser choice plus hyperparameters, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Nft {
        /// Updates between full re-evaluations; 0 disables them.
        #[serde(default = "default_reset")]
        reset_interval: usize,
    },
    Spsa {
        #[serde(default)]
        gains: SpsaGains,
    },
    NelderMead {
        #[serde(default)]
        coefficients: SimplexCoefficients,
    },
}

fn default_reset() -> usize {
    32
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Nft {
            reset_interval: default_reset(),
        }
    }
}

impl OptimizerConfig {
    pub fn label(&self) -> &'static str {
        match self {
            OptimizerConfig::Nft { .. } => "nft",
            OptimizerConfig::Spsa { .. } => "spsa",
            OptimizerConfig::NelderMead { .. } => "nelder_mead",
        }
    }

    pub fn run(
        &self,
        eval: &mut CostEvaluator,
        x0: &[f64],
        iterations: usize,
        rng_seed: u64,
    ) -> Result<OptimizerTrace> {
        match self {
            OptimizerConfig::Nft { reset_interval } => nft_minimize(
                eval,
                x0,
                iterations,
                Some(*reset_interval).filter(|&r| r > 0),
            ),
            OptimizerConfig::Spsa { gains } => spsa_minimize(eval, x0, iterations, gains, rng_seed),
            OptimizerConfig::NelderMead { coefficients } => {
                nelder_mead_minimize(eval, x0, iterations, coefficients)
            }
        }
    }
}

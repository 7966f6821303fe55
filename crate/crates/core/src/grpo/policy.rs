use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

/// Parameters or gradients: one row of reals per decoding context.
pub type Params = BTreeMap<String, Vec<f64>>;

/// Tabular softmax policy over a fixed symbol vocabulary. Contexts never seen
/// have all-zero logits, i.e. the uniform distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub vocabulary: Vec<String>,
    pub temperature: f64,
    pub theta: Params,
}

/// Numerically stable log-softmax of `logits / temperature`.
pub fn log_softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scaled.iter().map(|s| libm::exp(s - max)).sum();
    let log_z = max + libm::log(sum);
    scaled.iter().map(|s| s - log_z).collect()
}

impl ToyPolicy {
    pub fn new(vocabulary: Vec<String>, temperature: f64) -> Self {
        Self { vocabulary, temperature, theta: Params::new() }
    }

    pub fn size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn symbol_index(&self, symbol: &str) -> Option<usize> {
        self.vocabulary.iter().position(|s| s == symbol)
    }

    pub fn log_probs(&self, context: &str) -> Vec<f64> {
        match self.theta.get(context) {
            Some(row) => log_softmax(row, self.temperature),
            None => vec![-libm::log(self.size() as f64); self.size()],
        }
    }

    pub fn probs(&self, context: &str) -> Vec<f64> {
        self.log_probs(context).into_iter().map(libm::exp).collect()
    }

    pub fn log_prob(&self, context: &str, symbol: usize) -> f64 {
        self.log_probs(context)[symbol]
    }

    /// Inverse-CDF sample from the context's distribution.
    pub fn sample(&self, context: &str, rng: &mut dyn RngCore) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let probs = self.probs(context);
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    pub fn row_mut(&mut self, context: &str) -> &mut Vec<f64> {
        let n = self.size();
        self.theta.entry(context.into()).or_insert_with(|| vec![0.0; n])
    }

    /// θ ← θ + step · g.
    pub fn ascend(&mut self, gradient: &Params, step: f64) {
        for (ctx, g) in gradient {
            let row = self.row_mut(ctx);
            for (t, gi) in row.iter_mut().zip(g) {
                *t += step * gi;
            }
        }
    }
}

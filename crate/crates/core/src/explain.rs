//! Shapley-value attributions for forest probability scores.
//!
//! The value of a coalition `S` is interventional: the mean forest probability
//! over background rows, with features in `S` set to the explained instance's
//! values and all other features left at the background row's values. For
//! the full coalition this is the model's probability at the instance.
//!
//! [`shap_exact`] evaluates
//! `phi_j = sum_{S not containing j} |S|! (p - |S| - 1)! / p! * (f(S + j) - f(S))`
//! over all coalitions (memoized over the `2^p` subsets). [`shap_sampled`]
//! averages marginal contributions over random feature orderings.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestModel;
use crate::seed::stage_rng;

pub const DEFAULT_EXACT_LIMIT: usize = 15;
/// Coalitions are indexed by bit masks.
const MAX_EXACT_FEATURES: usize = 30;

#[derive(Debug, Clone)]
pub struct ValueFunction<'a> {
    model: &'a ForestModel,
    background: Array2<f64>,
    instance: Vec<f64>,
}

impl<'a> ValueFunction<'a> {
    pub fn new(model: &'a ForestModel, background: ArrayView2<f64>, instance: &[f64]) -> Result<Self> {
        let p = model.n_features();
        if background.nrows() == 0 {
            return Err(Error::Size("background must contain at least one row".into()));
        }
        if background.ncols() != p || instance.len() != p {
            return Err(Error::Shape(format!(
                "model has {p} features, background {} and instance {}",
                background.ncols(),
                instance.len()
            )));
        }
        Ok(Self {
            model,
            background: background.as_standard_layout().into_owned(),
            instance: instance.to_vec(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.instance.len()
    }

    pub fn prediction(&self) -> f64 {
        self.model.proba_unchecked(&self.instance)
    }

    fn value_where(&self, in_coalition: impl Fn(usize) -> bool) -> f64 {
        let p = self.n_features();
        let members: Vec<bool> = (0..p).map(&in_coalition).collect();
        if members.iter().all(|&m| m) {
            return self.prediction();
        }
        let mut composite = vec![0.0; p];
        let mut total = 0.0;
        for b in self.background.rows() {
            for j in 0..p {
                composite[j] = if members[j] { self.instance[j] } else { b[j] };
            }
            total += self.model.proba_unchecked(&composite);
        }
        total / self.background.nrows() as f64
    }

    fn value_mask(&self, mask: u64) -> f64 {
        self.value_where(|j| mask >> j & 1 == 1)
    }
}

/// `f(S)` for the feature indices in `subset`.
pub fn value_function(v: &ValueFunction<'_>, subset: &[usize]) -> Result<f64> {
    let p = v.n_features();
    if let Some(&bad) = subset.iter().find(|&&j| j >= p) {
        return Err(Error::Shape(format!("feature {bad} out of range for {p} features")));
    }
    Ok(v.value_where(|j| subset.contains(&j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapMethod {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub phi: Vec<f64>,
    /// `f` of the empty coalition.
    pub baseline: f64,
    /// Model probability at the instance.
    pub prediction: f64,
    pub method: ShapMethod,
    /// Permutations drawn; 0 for exact values.
    pub samples: usize,
    /// Per-feature standard error of the permutation mean (zeros when exact).
    pub std_error: Vec<f64>,
}

impl ShapExplanation {
    /// `baseline + sum(phi) - prediction`
    pub fn efficiency_gap(&self) -> f64 {
        self.baseline + self.phi.iter().sum::<f64>() - self.prediction
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn shap_exact(v: &ValueFunction<'_>, exact_limit: usize) -> Result<ShapExplanation> {
    let p = v.n_features();
    let limit = exact_limit.min(MAX_EXACT_FEATURES);
    if p > limit {
        return Err(Error::ExactLimit { limit, features: p });
    }
    let values: Vec<f64> = (0..1u64 << p)
        .into_par_iter()
        .map(|mask| v.value_mask(mask))
        .collect();
    let weights: Vec<f64> = (0..p)
        .map(|s| factorial(s) * factorial(p - s - 1) / factorial(p))
        .collect();
    let full = (1usize << p) - 1;
    let phi = (0..p)
        .map(|j| {
            let bit = 1usize << j;
            (0..=full)
                .filter(|s| s & bit == 0)
                .map(|s| weights[s.count_ones() as usize] * (values[s | bit] - values[s]))
                .sum()
        })
        .collect();
    Ok(ShapExplanation {
        phi,
        baseline: values[0],
        prediction: values[full],
        method: ShapMethod::Exact,
        samples: 0,
        std_error: vec![0.0; p],
    })
}

/// Monte Carlo Shapley values from `n_permutations` uniform orderings.
/// Permutation `k` is drawn from `derive_seed(seed, "permutation", k)`.
pub fn shap_sampled(v: &ValueFunction<'_>, n_permutations: usize, seed: u64) -> Result<ShapExplanation> {
    if n_permutations == 0 {
        return Err(Error::Parameter("n_permutations must be at least 1".into()));
    }
    let p = v.n_features();
    let baseline = v.value_where(|_| false);
    let contributions: Vec<Vec<f64>> = (0..n_permutations)
        .into_par_iter()
        .map(|k| {
            let mut order: Vec<usize> = (0..p).collect();
            order.shuffle(&mut stage_rng(seed, "permutation", k as u64));
            let mut members = vec![false; p];
            let mut prev = baseline;
            let mut out = vec![0.0; p];
            for &j in &order {
                members[j] = true;
                let cur = v.value_where(|i| members[i]);
                out[j] = cur - prev;
                prev = cur;
            }
            out
        })
        .collect();
    let n = n_permutations as f64;
    let mut phi = vec![0.0; p];
    let mut sq = vec![0.0; p];
    for c in &contributions {
        for j in 0..p {
            phi[j] += c[j];
            sq[j] += c[j] * c[j];
        }
    }
    phi.iter_mut().for_each(|s| *s /= n);
    let std_error = (0..p)
        .map(|j| {
            if n_permutations < 2 {
                return 0.0;
            }
            let var = ((sq[j] / n - phi[j] * phi[j]) * n / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(ShapExplanation {
        phi,
        baseline,
        prediction: v.prediction(),
        method: ShapMethod::Sampled,
        samples: n_permutations,
        std_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalShapSummary {
    pub mean_abs: Vec<f64>,
    pub mean: Vec<f64>,
    /// Feature indices by descending mean |phi|; ties keep index order.
    pub ranking: Vec<usize>,
    /// One row of phi per explained instance.
    #[serde(skip)]
    pub matrix: Vec<Vec<f64>>,
}

pub fn global_summary(explanations: &[ShapExplanation]) -> Result<GlobalShapSummary> {
    let first = explanations
        .first()
        .ok_or_else(|| Error::Size("no explanations to summarize".into()))?;
    let p = first.phi.len();
    if explanations.iter().any(|e| e.phi.len() != p) {
        return Err(Error::Shape("explanations have different widths".into()));
    }
    let n = explanations.len() as f64;
    let mut mean_abs = vec![0.0; p];
    let mut mean = vec![0.0; p];
    for e in explanations {
        for j in 0..p {
            mean_abs[j] += e.phi[j].abs();
            mean[j] += e.phi[j];
        }
    }
    mean_abs.iter_mut().for_each(|v| *v /= n);
    mean.iter_mut().for_each(|v| *v /= n);
    let mut ranking: Vec<usize> = (0..p).collect();
    ranking.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]));
    Ok(GlobalShapSummary {
        mean_abs,
        mean,
        ranking,
        matrix: explanations.iter().map(|e| e.phi.clone()).collect(),
    })
}

/// Per-instance CSV: `instance_id,baseline,prediction,<feature columns>`.
pub fn shap_values_csv(ids: &[String], columns: &[String], explanations: &[ShapExplanation]) -> String {
    let mut out = String::from("instance_id,baseline,prediction");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (id, e) in ids.iter().zip(explanations) {
        out.push_str(&format!("{id},{},{}", e.baseline, e.prediction));
        for v in &e.phi {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

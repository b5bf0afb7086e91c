//! Stochastic block model graphs with class-informative features, the
//! desk-scale stand-in for benchmark datasets.

use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use gftbench_core::Graph;

use crate::error::{HarnessError, Result};

/// Parameters for an SBM draw. Features are drawn around orthogonal
/// class-mean vectors (`signal_strength · e_class`) with unit Gaussian
/// noise, so `signal_strength = 0` makes classes indistinguishable from
/// features alone.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub blocks: usize,
    pub per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub signal_strength: f64,
    pub seed: u64,
}

impl Default for SbmParams {
    fn default() -> Self {
        Self {
            blocks: 3,
            per_block: 100,
            p_in: 0.1,
            p_out: 0.02,
            feature_dim: 16,
            signal_strength: 0.5,
            seed: 0,
        }
    }
}

impl SbmParams {
    pub fn num_nodes(&self) -> usize {
        self.blocks * self.per_block
    }

    /// The default graph with intra/inter edge probabilities swapped.
    pub fn heterophilous() -> Self {
        let base = Self::default();
        Self {
            p_in: base.p_out,
            p_out: base.p_in,
            ..base
        }
    }

    fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.per_block == 0 {
            return Err(HarnessError::InvalidParams("blocks must be non-empty".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(HarnessError::InvalidParams(format!(
                    "{name} must be in [0, 1], got {p}"
                )));
            }
        }
        if self.feature_dim < self.blocks {
            return Err(HarnessError::InvalidParams(format!(
                "feature_dim {} must be at least the number of blocks {}",
                self.feature_dim, self.blocks
            )));
        }
        if self.signal_strength < 0.0 || !self.signal_strength.is_finite() {
            return Err(HarnessError::InvalidParams(
                "signal_strength must be a non-negative finite value".into(),
            ));
        }
        Ok(())
    }
}

/// Accepts `default`, `heterophilous`, or comma-separated overrides like
/// `blocks=3,per_block=100,p_in=0.1,p_out=0.02,d0=16,signal=1.0,seed=7`
/// (optionally starting from one of the presets).
impl FromStr for SbmParams {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let mut params = SbmParams::default();
        for (i, part) in s.split(',').enumerate() {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            match part {
                "default" | "homophilous" => {
                    if i != 0 {
                        return Err(HarnessError::InvalidParams(
                            "preset must come first".into(),
                        ));
                    }
                    params = SbmParams::default();
                }
                "heterophilous" => {
                    if i != 0 {
                        return Err(HarnessError::InvalidParams(
                            "preset must come first".into(),
                        ));
                    }
                    params = SbmParams::heterophilous();
                }
                other => {
                    let (key, value) = other.split_once('=').ok_or_else(|| {
                        HarnessError::InvalidParams(format!("expected key=value, got '{other}'"))
                    })?;
                    let bad = || HarnessError::InvalidParams(format!("bad value for '{key}'"));
                    match key {
                        "blocks" => params.blocks = value.parse().map_err(|_| bad())?,
                        "per_block" => params.per_block = value.parse().map_err(|_| bad())?,
                        "p_in" => params.p_in = value.parse().map_err(|_| bad())?,
                        "p_out" => params.p_out = value.parse().map_err(|_| bad())?,
                        "d0" | "feature_dim" => {
                            params.feature_dim = value.parse().map_err(|_| bad())?
                        }
                        "signal" | "signal_strength" => {
                            params.signal_strength = value.parse().map_err(|_| bad())?
                        }
                        "seed" => params.seed = value.parse().map_err(|_| bad())?,
                        _ => {
                            return Err(HarnessError::InvalidParams(format!(
                                "unknown SBM parameter '{key}'"
                            )))
                        }
                    }
                }
            }
        }
        params.validate()?;
        Ok(params)
    }
}

/// Draw an undirected SBM. Deterministic for a given parameter set: edges
/// are sampled pair-by-pair in index order, then features.
pub fn generate_sbm(params: &SbmParams) -> Result<Graph> {
    params.validate()?;
    let n = params.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let labels: Vec<usize> = (0..n).map(|i| i / params.per_block).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] {
                params.p_in
            } else {
                params.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let features = Array2::from_shape_fn((n, params.feature_dim), |(i, j)| {
        let mean = if labels[i] == j {
            params.signal_strength
        } else {
            0.0
        };
        mean + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });

    Ok(Graph::new(n, edges, features, labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_triangles_at_extreme_probabilities() {
        let params = SbmParams {
            blocks: 2,
            per_block: 3,
            p_in: 1.0,
            p_out: 0.0,
            feature_dim: 2,
            signal_strength: 1.0,
            seed: 1,
        };
        let g = generate_sbm(&params).unwrap();
        assert_eq!(
            g.edges(),
            &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let params = SbmParams::default();
        let g1 = generate_sbm(&params).unwrap();
        let g2 = generate_sbm(&params).unwrap();
        assert_eq!(g1.edges(), g2.edges());
        assert_eq!(g1.features(), g2.features());
        let g3 = generate_sbm(&SbmParams {
            seed: 1,
            ..SbmParams::default()
        })
        .unwrap();
        assert_ne!(g1.edges(), g3.edges());
    }

    #[test]
    fn intra_block_edge_count_matches_binomial_mean() {
        // Expected intra-block edges: p_in · blocks · C(per_block, 2).
        let base = SbmParams {
            blocks: 3,
            per_block: 20,
            p_in: 0.3,
            p_out: 0.0,
            feature_dim: 3,
            signal_strength: 0.0,
            seed: 0,
        };
        let trials = 200u64;
        let pairs = (base.blocks * base.per_block * (base.per_block - 1) / 2) as f64;
        let expect = base.p_in * pairs;
        let mut total = 0usize;
        for seed in 0..trials {
            let g = generate_sbm(&SbmParams { seed, ..base.clone() }).unwrap();
            total += g.num_edges();
        }
        let mean = total as f64 / trials as f64;
        // 3σ band for the mean of `trials` binomial draws.
        let sigma = (pairs * base.p_in * (1.0 - base.p_in) / trials as f64).sqrt();
        assert!(
            (mean - expect).abs() <= 3.0 * sigma,
            "mean {mean} vs {expect} (σ {sigma})"
        );
    }

    #[test]
    fn parses_presets_and_overrides() {
        let p: SbmParams = "default".parse().unwrap();
        assert_eq!(p, SbmParams::default());
        let p: SbmParams = "heterophilous".parse().unwrap();
        assert_eq!(p.p_in, 0.02);
        assert_eq!(p.p_out, 0.1);
        let p: SbmParams = "blocks=2,per_block=50,signal=0.5,seed=9".parse().unwrap();
        assert_eq!(p.blocks, 2);
        assert_eq!(p.per_block, 50);
        assert_eq!(p.signal_strength, 0.5);
        assert_eq!(p.seed, 9);
        assert!("p_in=2.0".parse::<SbmParams>().is_err());
        assert!("nope=1".parse::<SbmParams>().is_err());
    }

    #[test]
    fn rejects_degenerate_shapes() {
        let p = SbmParams {
            per_block: 0,
            ..SbmParams::default()
        };
        assert!(generate_sbm(&p).is_err());
        let p = SbmParams {
            feature_dim: 1,
            ..SbmParams::default()
        };
        assert!(generate_sbm(&p).is_err());
    }
}

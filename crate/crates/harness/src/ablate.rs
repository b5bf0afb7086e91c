//! Regularizer ablation: for each basis, compare the unregularized model
//! against the best regularized one (penalty weight chosen by mean
//! validation accuracy over the λ grid), paired across splits.

use serde::Serialize;

use gftbench_core::basis::BasisKind;
use gftbench_core::model::{FilterActivation, ModelConfig};
use gftbench_core::train::{train, TrainConfig};

use crate::dataset::PreparedDataset;
use crate::error::{HarnessError, Result};
use crate::split::make_split;
use crate::stats::{mean_ci95, paired_test};

/// The penalty-weight grid searched by the regularized branch.
pub fn default_lambda_grid() -> Vec<f64> {
    vec![0.0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0]
}

#[derive(Debug, Clone)]
pub struct AblationSettings {
    pub bases: Vec<BasisKind>,
    /// Must contain 0 (the unregularized baseline).
    pub lambda_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub order: usize,
    pub layers: usize,
    pub hidden_dim: usize,
    pub activation: FilterActivation,
    pub dropout_input: f64,
    pub dropout_hidden: f64,
    pub per_class: usize,
    pub val_frac: f64,
    pub train: TrainConfig,
    pub jobs: usize,
}

impl Default for AblationSettings {
    fn default() -> Self {
        Self {
            bases: gftbench_core::basis::BasisFamily::ALL
                .iter()
                .map(|&f| BasisKind::new(f))
                .collect(),
            lambda_grid: default_lambda_grid(),
            seeds: (0..10).collect(),
            order: 10,
            layers: 1,
            hidden_dim: 16,
            activation: FilterActivation::Identity,
            dropout_input: 0.0,
            dropout_hidden: 0.0,
            per_class: 10,
            val_frac: 0.35,
            train: TrainConfig::default(),
            jobs: 1,
        }
    }
}

/// Per-split metrics of one (λ, seed) run.
#[derive(Debug, Clone, Copy)]
struct RunMetrics {
    val_acc: f64,
    test_acc: f64,
    gap: f64,
}

/// One table row: base vs best-regularized for a single basis.
#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub dataset: String,
    pub basis: String,
    pub lambda_star: f64,
    pub base_acc_mean: f64,
    pub base_acc_ci: f64,
    pub reg_acc_mean: f64,
    pub reg_acc_ci: f64,
    pub delta_acc: f64,
    pub p_acc: f64,
    pub stars_acc: u8,
    pub base_gap_mean: f64,
    pub base_gap_ci: f64,
    pub reg_gap_mean: f64,
    pub reg_gap_ci: f64,
    pub delta_gap: f64,
    pub p_gap: f64,
    pub stars_gap: u8,
    pub error: Option<String>,
}

pub fn ablate_csv_header() -> &'static str {
    "dataset,basis,lambda_star,base_acc_mean,base_acc_ci,reg_acc_mean,reg_acc_ci,\
     delta_acc,p_acc,stars_acc,base_gap_mean,base_gap_ci,reg_gap_mean,reg_gap_ci,\
     delta_gap,p_gap,stars_gap,error"
}

pub fn ablate_row_csv(row: &AblationRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        row.dataset,
        row.basis,
        row.lambda_star,
        row.base_acc_mean,
        row.base_acc_ci,
        row.reg_acc_mean,
        row.reg_acc_ci,
        row.delta_acc,
        row.p_acc,
        row.stars_acc,
        row.base_gap_mean,
        row.base_gap_ci,
        row.reg_gap_mean,
        row.reg_gap_ci,
        row.delta_gap,
        row.p_gap,
        row.stars_gap,
        row.error.as_deref().unwrap_or("").replace(',', ";")
    )
}

fn run_once(
    dataset: &PreparedDataset,
    settings: &AblationSettings,
    kind: BasisKind,
    lambda: f64,
    seed: u64,
) -> Result<RunMetrics> {
    let graph = &dataset.graph;
    let split = make_split(graph.labels(), settings.per_class, settings.val_frac, seed)?;
    let vp = dataset.vandermonde(kind, settings.order)?;
    let mut config = ModelConfig::new(
        graph.feature_dim(),
        settings.hidden_dim,
        graph.num_classes(),
        kind,
        settings.order,
    );
    config.filter_layers = settings.layers;
    config.activation = settings.activation;
    config.dropout_input = settings.dropout_input;
    config.dropout_hidden = settings.dropout_hidden;
    config.lambda_ew = lambda;
    config.seed = seed;
    let (result, _) = train(
        &config,
        &settings.train,
        &dataset.decomp,
        &vp,
        graph.features(),
        graph.labels(),
        &split.train_idx,
        &split.val_idx,
        &split.test_idx,
    )?;
    Ok(RunMetrics {
        val_acc: result.val_acc,
        test_acc: result.test_acc,
        gap: result.gap,
    })
}

fn basis_row(
    dataset: &PreparedDataset,
    settings: &AblationSettings,
    kind: BasisKind,
) -> Result<AblationRow> {
    let run_grid = |lambda: f64| -> Result<Vec<RunMetrics>> {
        if settings.jobs > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(settings.jobs)
                .build()
                .expect("thread pool");
            pool.install(|| {
                settings
                    .seeds
                    .par_iter()
                    .map(|&seed| run_once(dataset, settings, kind, lambda, seed))
                    .collect()
            })
        } else {
            settings
                .seeds
                .iter()
                .map(|&seed| run_once(dataset, settings, kind, lambda, seed))
                .collect()
        }
    };

    let base_runs = run_grid(0.0)?;

    // Best non-zero λ by mean validation accuracy; ties keep the earlier
    // grid entry. An all-zero grid leaves the baseline in place.
    let mut lambda_star = 0.0f64;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_runs: Option<Vec<RunMetrics>> = None;
    for &lambda in settings.lambda_grid.iter().filter(|&&l| l != 0.0) {
        let runs = run_grid(lambda)?;
        let mean_val = runs.iter().map(|r| r.val_acc).sum::<f64>() / runs.len() as f64;
        if mean_val > best_val {
            best_val = mean_val;
            lambda_star = lambda;
            best_runs = Some(runs);
        }
    }
    let reg_runs = best_runs.unwrap_or_else(|| base_runs.clone());

    let base_accs: Vec<f64> = base_runs.iter().map(|r| r.test_acc).collect();
    let reg_accs: Vec<f64> = reg_runs.iter().map(|r| r.test_acc).collect();
    let base_gaps: Vec<f64> = base_runs.iter().map(|r| r.gap).collect();
    let reg_gaps: Vec<f64> = reg_runs.iter().map(|r| r.gap).collect();

    let acc_test = paired_test(&base_accs, &reg_accs)?;
    let gap_test = paired_test(&base_gaps, &reg_gaps)?;
    let (base_acc_mean, base_acc_ci) = mean_ci95(&base_accs)?;
    let (reg_acc_mean, reg_acc_ci) = mean_ci95(&reg_accs)?;
    let (base_gap_mean, base_gap_ci) = mean_ci95(&base_gaps)?;
    let (reg_gap_mean, reg_gap_ci) = mean_ci95(&reg_gaps)?;

    Ok(AblationRow {
        dataset: dataset.name.clone(),
        basis: kind.to_string(),
        lambda_star,
        base_acc_mean,
        base_acc_ci,
        reg_acc_mean,
        reg_acc_ci,
        delta_acc: acc_test.delta_mean,
        p_acc: acc_test.p_value,
        stars_acc: acc_test.stars,
        base_gap_mean,
        base_gap_ci,
        reg_gap_mean,
        reg_gap_ci,
        delta_gap: gap_test.delta_mean,
        p_gap: gap_test.p_value,
        stars_gap: gap_test.stars,
        error: None,
    })
}

/// One row per basis. A failed underlying run fails only its row: the
/// error lands in the row's `error` field and the other bases proceed.
pub fn regularizer_ablation(
    dataset: &PreparedDataset,
    settings: &AblationSettings,
) -> Result<Vec<AblationRow>> {
    if !settings.lambda_grid.contains(&0.0) {
        return Err(HarnessError::InvalidParams(
            "lambda grid must contain 0 (the baseline)".into(),
        ));
    }
    if settings.seeds.len() < 2 {
        return Err(HarnessError::InvalidParams(
            "need at least 2 split seeds for paired statistics".into(),
        ));
    }
    let mut rows = Vec::with_capacity(settings.bases.len());
    for &kind in &settings.bases {
        let row = match basis_row(dataset, settings, kind) {
            Ok(row) => row,
            Err(e) => AblationRow {
                dataset: dataset.name.clone(),
                basis: kind.to_string(),
                lambda_star: f64::NAN,
                base_acc_mean: f64::NAN,
                base_acc_ci: f64::NAN,
                reg_acc_mean: f64::NAN,
                reg_acc_ci: f64::NAN,
                delta_acc: f64::NAN,
                p_acc: f64::NAN,
                stars_acc: 0,
                base_gap_mean: f64::NAN,
                base_gap_ci: f64::NAN,
                reg_gap_mean: f64::NAN,
                reg_gap_ci: f64::NAN,
                delta_gap: f64::NAN,
                p_gap: f64::NAN,
                stars_gap: 0,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::{generate_sbm, SbmParams};
    use gftbench_core::basis::BasisFamily;

    fn tiny() -> PreparedDataset {
        let graph = generate_sbm(&SbmParams {
            blocks: 2,
            per_block: 20,
            p_in: 0.3,
            p_out: 0.05,
            feature_dim: 4,
            signal_strength: 1.0,
            seed: 11,
        })
        .unwrap();
        PreparedDataset::prepare("tiny", graph).unwrap()
    }

    fn fast_settings() -> AblationSettings {
        AblationSettings {
            bases: vec![BasisKind::new(BasisFamily::Chebyshev)],
            seeds: vec![0, 1, 2],
            order: 3,
            hidden_dim: 8,
            per_class: 5,
            train: TrainConfig {
                max_epochs: 40,
                patience: 15,
                ..TrainConfig::default()
            },
            ..AblationSettings::default()
        }
    }

    #[test]
    fn zero_only_grid_gives_identical_columns() {
        let dataset = tiny();
        let mut settings = fast_settings();
        settings.lambda_grid = vec![0.0];
        let rows = regularizer_ablation(&dataset, &settings).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!(row.error.is_none());
        assert_eq!(row.lambda_star, 0.0);
        assert_eq!(row.delta_acc, 0.0);
        assert_eq!(row.delta_gap, 0.0);
        assert_eq!(row.base_acc_mean, row.reg_acc_mean);
        assert_eq!(row.stars_acc, 0);
    }

    #[test]
    fn one_row_per_basis_and_grid_requires_zero() {
        let dataset = tiny();
        let mut settings = fast_settings();
        settings.bases = gftbench_core::basis::BasisFamily::ALL
            .iter()
            .map(|&f| BasisKind::new(f))
            .collect();
        settings.lambda_grid = vec![0.0, 0.1];
        let rows = regularizer_ablation(&dataset, &settings).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!(row.error.is_none(), "{:?}", row.error);
            assert_eq!(row.lambda_star, 0.1);
        }

        settings.lambda_grid = vec![0.1];
        assert!(regularizer_ablation(&dataset, &settings).is_err());
    }
}

//! Bound-vs-gap sweeps: train one model per (dataset, basis, order, depth,
//! seed) cell, measure the generalization gap, and compute every bound
//! from the trained model's measured norms.

use serde::Serialize;

use gftbench_core::basis::BasisKind;
use gftbench_core::bounds::{
    gc_bound_linear, gc_bound_nonlinear, jacobian_norm_bound, measured_bound_inputs,
    true_jacobian_norm, BoundSettings,
};
use gftbench_core::model::{FilterActivation, ModelConfig};
use gftbench_core::train::{train, TrainConfig};

use crate::dataset::PreparedDataset;
use crate::error::Result;
use crate::split::make_split;
use crate::stats::{correlate, CorrelationReport};

/// Everything a sweep varies and everything it holds fixed.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub bases: Vec<BasisKind>,
    pub orders: Vec<usize>,
    pub layers: Vec<usize>,
    pub seeds: Vec<u64>,
    pub hidden_dim: usize,
    pub activation: FilterActivation,
    pub dropout_input: f64,
    pub dropout_hidden: f64,
    pub lambda_ew: f64,
    pub per_class: usize,
    pub val_frac: f64,
    pub train: TrainConfig,
    pub bound: BoundSettings,
    /// Worker threads; 1 (the default) streams rows in order as they
    /// finish, more than 1 computes in parallel and emits in input order.
    pub jobs: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            bases: gftbench_core::basis::BasisFamily::ALL
                .iter()
                .map(|&f| BasisKind::new(f))
                .collect(),
            orders: (1..=10).collect(),
            layers: vec![1],
            seeds: (0..10).collect(),
            hidden_dim: 16,
            activation: FilterActivation::Identity,
            dropout_input: 0.0,
            dropout_hidden: 0.0,
            lambda_ew: 0.0,
            per_class: 10,
            val_frac: 0.35,
            train: TrainConfig::default(),
            bound: BoundSettings::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepKey {
    pub dataset: String,
    pub basis: String,
    pub order: usize,
    pub layers: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepMetrics {
    pub num_nodes: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub test_loss: f64,
    pub gap: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub gc_nonlinear: f64,
    pub gc_linear: f64,
    pub weight_term: f64,
    pub spectral_term: f64,
    pub jacobian_bound: f64,
    pub true_jacobian: f64,
    pub c_w_product: f64,
    pub c_theta_product: f64,
    pub w_in_norm: f64,
    pub w_out_norm: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub key: SweepKey,
    pub metrics: std::result::Result<SweepMetrics, String>,
}

pub fn sweep_csv_header() -> &'static str {
    "dataset,basis,order,layers,seed,num_nodes,train_loss,val_loss,test_loss,gap,\
     train_acc,val_acc,test_acc,gc_nonlinear,gc_linear,weight_term,spectral_term,\
     jacobian_bound,true_jacobian,c_w_product,c_theta_product,w_in_norm,w_out_norm,\
     epochs,error"
}

pub fn sweep_row_csv(row: &SweepRow) -> String {
    let k = &row.key;
    match &row.metrics {
        Ok(m) => format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
            k.dataset,
            k.basis,
            k.order,
            k.layers,
            k.seed,
            m.num_nodes,
            m.train_loss,
            m.val_loss,
            m.test_loss,
            m.gap,
            m.train_acc,
            m.val_acc,
            m.test_acc,
            m.gc_nonlinear,
            m.gc_linear,
            m.weight_term,
            m.spectral_term,
            m.jacobian_bound,
            m.true_jacobian,
            m.c_w_product,
            m.c_theta_product,
            m.w_in_norm,
            m.w_out_norm,
            m.epochs
        ),
        Err(e) => format!(
            "{},{},{},{},{},,,,,,,,,,,,,,,,,,,,{}",
            k.dataset,
            k.basis,
            k.order,
            k.layers,
            k.seed,
            e.replace(',', ";")
        ),
    }
}

fn run_cell(dataset: &PreparedDataset, settings: &SweepSettings, key: &SweepKey, kind: BasisKind) -> Result<SweepMetrics> {
    let graph = &dataset.graph;
    let split = make_split(graph.labels(), settings.per_class, settings.val_frac, key.seed)?;
    let vp = dataset.vandermonde(kind, key.order)?;

    let mut config = ModelConfig::new(
        graph.feature_dim(),
        settings.hidden_dim,
        graph.num_classes(),
        kind,
        key.order,
    );
    config.filter_layers = key.layers;
    config.activation = settings.activation;
    config.dropout_input = settings.dropout_input;
    config.dropout_hidden = settings.dropout_hidden;
    config.lambda_ew = settings.lambda_ew;
    config.seed = key.seed;

    let (result, params) = train(
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

    let (inputs, filter_input) = measured_bound_inputs(
        &params,
        &config,
        &dataset.decomp,
        &vp,
        graph.features(),
        split.train_idx.len(),
        &settings.bound,
    )?;
    let nonlinear = gc_bound_nonlinear(&inputs)?;
    let linear = gc_bound_linear(&inputs)?;
    let jacobian_bound = jacobian_norm_bound(&inputs)?;
    let true_jacobian = true_jacobian_norm(&params, &config, &dataset.decomp, &vp, &filter_input)?;

    Ok(SweepMetrics {
        num_nodes: graph.num_nodes(),
        train_loss: result.train_loss,
        val_loss: result.val_loss,
        test_loss: result.test_loss,
        gap: result.gap,
        train_acc: result.train_acc,
        val_acc: result.val_acc,
        test_acc: result.test_acc,
        gc_nonlinear: nonlinear.bound,
        gc_linear: linear,
        weight_term: nonlinear.weight_term,
        spectral_term: nonlinear.spectral_term,
        jacobian_bound,
        true_jacobian,
        c_w_product: inputs.c_w.iter().product(),
        c_theta_product: inputs.c_theta.iter().product(),
        w_in_norm: result.measured.w_in_spectral,
        w_out_norm: result.measured.w_out_spectral,
        epochs: result.epochs_run,
    })
}

/// Run the full grid. Individual cell failures land in the row's error
/// slot; the sweep continues. `on_row` sees rows in grid order.
pub fn run_sweep_with<F: FnMut(&SweepRow)>(
    datasets: &[PreparedDataset],
    settings: &SweepSettings,
    mut on_row: F,
) -> Vec<SweepRow> {
    let mut cells: Vec<(SweepKey, BasisKind, &PreparedDataset)> = Vec::new();
    for dataset in datasets {
        for &kind in &settings.bases {
            for &order in &settings.orders {
                for &layers in &settings.layers {
                    for &seed in &settings.seeds {
                        cells.push((
                            SweepKey {
                                dataset: dataset.name.clone(),
                                basis: kind.to_string(),
                                order,
                                layers,
                                seed,
                            },
                            kind,
                            dataset,
                        ));
                    }
                }
            }
        }
    }

    let compute = |(key, kind, dataset): &(SweepKey, BasisKind, &PreparedDataset)| SweepRow {
        key: key.clone(),
        metrics: run_cell(dataset, settings, key, *kind).map_err(|e| e.to_string()),
    };

    if settings.jobs <= 1 {
        let mut rows = Vec::with_capacity(cells.len());
        for cell in &cells {
            let row = compute(cell);
            on_row(&row);
            rows.push(row);
        }
        rows
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .expect("thread pool");
        let rows: Vec<SweepRow> = pool.install(|| cells.par_iter().map(compute).collect());
        for row in &rows {
            on_row(row);
        }
        rows
    }
}

pub fn run_sweep(datasets: &[PreparedDataset], settings: &SweepSettings) -> Vec<SweepRow> {
    run_sweep_with(datasets, settings, |_| {})
}

/// Aggregate checks and correlations over the successful rows.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub rows_ok: usize,
    pub rows_failed: usize,
    /// Gap vs the nonlinear complexity bound.
    pub corr_gap_gc_nonlinear: Option<CorrelationReport>,
    /// Gap vs the linear complexity bound.
    pub corr_gap_gc_linear: Option<CorrelationReport>,
    /// Gap vs the parameter-norm factor alone (sensitivity split).
    pub corr_gap_weight_term: Option<CorrelationReport>,
    /// Gap vs the spectral interaction factor alone.
    pub corr_gap_spectral_term: Option<CorrelationReport>,
    /// Rows where the measured Jacobian norm exceeded its bound.
    pub jacobian_violations: usize,
    /// Rows where the linear bound exceeded nonlinear/√n.
    pub ordering_violations: usize,
    /// Largest relative error of `weight_term · spectral_term` against the
    /// nonlinear bound.
    pub decomposition_max_rel_err: f64,
}

pub fn analyze_sweep(rows: &[SweepRow]) -> SweepSummary {
    let ok: Vec<&SweepMetrics> = rows.iter().filter_map(|r| r.metrics.as_ref().ok()).collect();
    let gaps: Vec<f64> = ok.iter().map(|m| m.gap).collect();
    let corr = |values: Vec<f64>| correlate(&values, &gaps).ok();

    let jacobian_violations = ok
        .iter()
        .filter(|m| m.true_jacobian > m.jacobian_bound * (1.0 + 1e-9))
        .count();
    let ordering_violations = ok
        .iter()
        .filter(|m| {
            m.gc_linear > m.gc_nonlinear / (m.num_nodes as f64).sqrt() * (1.0 + 1e-12)
        })
        .count();
    let decomposition_max_rel_err = ok
        .iter()
        .map(|m| {
            let product = m.weight_term * m.spectral_term;
            if m.gc_nonlinear == 0.0 {
                product.abs()
            } else {
                (product - m.gc_nonlinear).abs() / m.gc_nonlinear.abs()
            }
        })
        .fold(0.0f64, f64::max);

    SweepSummary {
        rows_ok: ok.len(),
        rows_failed: rows.len() - ok.len(),
        corr_gap_gc_nonlinear: corr(ok.iter().map(|m| m.gc_nonlinear).collect()),
        corr_gap_gc_linear: corr(ok.iter().map(|m| m.gc_linear).collect()),
        corr_gap_weight_term: corr(ok.iter().map(|m| m.weight_term).collect()),
        corr_gap_spectral_term: corr(ok.iter().map(|m| m.spectral_term).collect()),
        jacobian_violations,
        ordering_violations,
        decomposition_max_rel_err,
    }
}

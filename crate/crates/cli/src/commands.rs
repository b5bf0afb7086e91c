//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, Context};

use gftbench_core::basis::{amplification_profile, BasisFamily, BasisKind};
use gftbench_core::bounds::{
    bound_report, jacobian_norm_bound, measured_bound_inputs, true_jacobian_norm, BoundSettings,
};
use gftbench_core::checkpoint::{decode_checkpoint, encode_checkpoint};
use gftbench_core::linalg::spectral_norm;
use gftbench_core::model::{FilterActivation, ModelConfig, ModelParams};
use gftbench_core::train::{train, TrainConfig};
use gftbench_harness::ablate::{ablate_csv_header, ablate_row_csv, AblationSettings};
use gftbench_harness::bundle::load_graph_bundle;
use gftbench_harness::sbm::{generate_sbm, SbmParams};
use gftbench_harness::split::make_split;
use gftbench_harness::sweep::{
    analyze_sweep, run_sweep_with, sweep_csv_header, sweep_row_csv, SweepSettings,
};
use gftbench_harness::PreparedDataset;

use crate::output::{Manifest, Sink};
use crate::resolve::{parse_float_list, parse_range_list, parse_seed_list, Resolver};
use crate::{
    AblateArgs, BoundsArgs, CliError, CliResult, Cmd, CommonArgs, JacobianArgs, ModelFlags,
    ProfileArgs, SelftestArgs, SweepArgs, TrainArgs,
};

pub fn run(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Profile(args) => profile_cmd(args),
        Cmd::Bounds(args) => bounds_cmd(args),
        Cmd::Train(args) => train_cmd(args),
        Cmd::Sweep(args) => sweep_cmd(args),
        Cmd::Ablate(args) => ablate_cmd(args),
        Cmd::Jacobian(args) => jacobian_cmd(args),
        Cmd::Selftest(args) => selftest_cmd(args),
    }
}

/// Common flags after applying config-file fallback and defaults.
struct Common {
    seed: u64,
    sink: Sink,
    graph: Option<PathBuf>,
    sbm: Option<String>,
    basis: Option<String>,
    rescaled: bool,
    order: usize,
    layers: usize,
    lambda_ew: f64,
    jobs: usize,
}

fn resolve_common(args: CommonArgs, man: &mut Manifest) -> CliResult<(Common, Resolver)> {
    let resolver = Resolver::load(args.config.as_deref())?;
    let common = Common {
        seed: resolver.get(args.seed, "seed", 0)?,
        sink: Sink::new(resolver.opt(args.out, "out")?)?,
        graph: resolver.opt(args.graph, "graph")?,
        sbm: resolver.opt(args.sbm, "sbm")?,
        basis: resolver.opt(args.basis, "basis")?,
        rescaled: resolver.get_bool(args.rescaled, "rescaled")?,
        order: resolver.get(args.order, "order", 10)?,
        layers: resolver.get(args.layers, "layers", 1)?,
        lambda_ew: resolver.get(args.lambda_ew, "lambda-ew", 0.0)?,
        jobs: resolver.get(args.jobs, "jobs", 1)?,
    };
    man.push("seed", common.seed);
    if let Some(g) = &common.graph {
        man.push("graph", g.display());
    }
    if let Some(s) = &common.sbm {
        man.push("sbm", s);
    }
    man.push("rescaled", common.rescaled);
    man.push("order", common.order);
    man.push("layers", common.layers);
    man.push("lambda-ew", common.lambda_ew);
    man.push("jobs", common.jobs);
    Ok((common, resolver))
}

/// Training knobs after fallback; shared by train/sweep/ablate/jacobian.
struct ModelSettings {
    hidden: usize,
    activation: FilterActivation,
    dropout1: f64,
    dropout2: f64,
    train: TrainConfig,
    per_class: usize,
    val_frac: f64,
}

fn resolve_model(
    flags: ModelFlags,
    resolver: &Resolver,
    man: &mut Manifest,
) -> CliResult<ModelSettings> {
    let activation_name: String =
        resolver.get(flags.activation, "activation", "identity".to_string())?;
    let activation: FilterActivation = activation_name
        .parse()
        .map_err(|e: String| CliError::usage(e))?;
    let settings = ModelSettings {
        hidden: resolver.get(flags.hidden, "hidden", 16)?,
        activation,
        dropout1: resolver.get(flags.dropout1, "dropout1", 0.0)?,
        dropout2: resolver.get(flags.dropout2, "dropout2", 0.0)?,
        train: TrainConfig {
            learning_rate: resolver.get(flags.lr, "lr", 0.01)?,
            weight_decay: resolver.get(flags.weight_decay, "weight-decay", 1e-5)?,
            max_epochs: resolver.get(flags.epochs, "epochs", 500)?,
            patience: resolver.get(flags.patience, "patience", 100)?,
        },
        per_class: resolver.get(flags.per_class, "per-class", 10)?,
        val_frac: resolver.get(flags.val_frac, "val-frac", 0.35)?,
    };
    man.push("hidden", settings.hidden);
    man.push("activation", settings.activation);
    man.push("dropout1", settings.dropout1);
    man.push("dropout2", settings.dropout2);
    man.push("lr", settings.train.learning_rate);
    man.push("weight-decay", settings.train.weight_decay);
    man.push("epochs", settings.train.max_epochs);
    man.push("patience", settings.train.patience);
    man.push("per-class", settings.per_class);
    man.push("val-frac", settings.val_frac);
    Ok(settings)
}

fn parse_basis_list(text: &str, rescaled: bool) -> CliResult<Vec<BasisKind>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(BasisFamily::ALL
            .iter()
            .map(|&f| BasisKind { family: f, rescaled })
            .collect());
    }
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<BasisFamily>()
                .map(|family| BasisKind { family, rescaled })
                .map_err(CliError::usage)
        })
        .collect()
}

fn load_dataset(common: &Common) -> CliResult<PreparedDataset> {
    if let Some(dir) = &common.graph {
        let graph = load_graph_bundle(dir).map_err(|e| CliError::Runtime(anyhow!("{e}")))?;
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "bundle".to_string());
        return PreparedDataset::prepare(name, graph)
            .map_err(|e| CliError::Runtime(anyhow!("{e}")));
    }
    if let Some(spec) = &common.sbm {
        let params: SbmParams = spec.parse().map_err(|e| CliError::usage(format!("{e}")))?;
        let graph = generate_sbm(&params).map_err(|e| CliError::Runtime(anyhow!("{e}")))?;
        return PreparedDataset::prepare("sbm", graph)
            .map_err(|e| CliError::Runtime(anyhow!("{e}")));
    }
    Err(CliError::usage(
        "this command needs a dataset: pass --graph <dir> or --sbm <params>",
    ))
}

fn single_basis(common: &Common) -> CliResult<BasisKind> {
    let name = common.basis.as_deref().unwrap_or("chebyshev");
    if name.eq_ignore_ascii_case("all") {
        return Err(CliError::usage(
            "this command needs a single basis, not 'all'",
        ));
    }
    name.parse::<BasisFamily>()
        .map(|family| BasisKind {
            family,
            rescaled: common.rescaled,
        })
        .map_err(CliError::usage)
}

fn build_config(
    dataset: &PreparedDataset,
    common: &Common,
    model: &ModelSettings,
    kind: BasisKind,
) -> ModelConfig {
    let mut config = ModelConfig::new(
        dataset.graph.feature_dim(),
        model.hidden,
        dataset.graph.num_classes(),
        kind,
        common.order,
    );
    config.filter_layers = common.layers;
    config.activation = model.activation;
    config.dropout_input = model.dropout1;
    config.dropout_hidden = model.dropout2;
    config.lambda_ew = common.lambda_ew;
    config.seed = common.seed;
    config
}

fn runtime<T>(r: gftbench_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Runtime(anyhow!("{e}")))
}

// ---------------------------------------------------------------------
// profile

fn profile_cmd(args: ProfileArgs) -> CliResult<()> {
    let mut man = Manifest::default();
    let (common, resolver) = resolve_common(args.common, &mut man)?;
    let grid_points: usize = resolver.get(args.grid, "grid", 2001)?;
    if grid_points < 2 {
        return Err(CliError::usage("--grid must be at least 2"));
    }
    man.push("grid", grid_points);
    let bases = parse_basis_list(common.basis.as_deref().unwrap_or("all"), common.rescaled)?;
    man.push(
        "basis",
        bases
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join("+"),
    );

    let xs: Vec<f64> = (0..grid_points)
        .map(|i| -1.0 + 2.0 * i as f64 / (grid_points - 1) as f64)
        .collect();

    let mut csv = String::from("basis,order,x,amplification,normalized\n");
    for kind in &bases {
        let raw = runtime(amplification_profile(*kind, common.order, &xs, false))?;
        let norm = runtime(amplification_profile(*kind, common.order, &xs, true))?;
        for ((x, m), nm) in xs.iter().zip(&raw).zip(&norm) {
            writeln!(csv, "{},{},{},{},{}", kind, common.order, x, m, nm).unwrap();
        }
    }
    common.sink.emit("profile.csv", &csv)?;
    common.sink.manifest("profile", man.pairs())
}

// ---------------------------------------------------------------------
// train

fn train_cmd(args: TrainArgs) -> CliResult<()> {
    let mut man = Manifest::default();
    let (common, resolver) = resolve_common(args.common, &mut man)?;
    let model = resolve_model(args.model, &resolver, &mut man)?;
    let dataset = load_dataset(&common)?;
    let kind = single_basis(&common)?;
    man.push("basis", kind);

    let split = make_split(
        dataset.graph.labels(),
        model.per_class,
        model.val_frac,
        common.seed,
    )
    .map_err(|e| CliError::Runtime(anyhow!("{e}")))?;
    let vp = runtime(dataset.vandermonde(kind, common.order).map_err(|e| match e {
        gftbench_harness::HarnessError::Core(c) => c,
        other => gftbench_core::CoreError::InvalidConfig(other.to_string()),
    }))?;
    let config = build_config(&dataset, &common, &model, kind);

    let (result, params) = runtime(train(
        &config,
        &model.train,
        &dataset.decomp,
        &vp,
        dataset.graph.features(),
        dataset.graph.labels(),
        &split.train_idx,
        &split.val_idx,
        &split.test_idx,
    ))?;

    let mut txt = String::new();
    let mut kv = |k: &str, v: String| writeln!(txt, "{k}={v}").unwrap();
    kv("dataset", dataset.name.clone());
    kv("basis", kind.to_string());
    kv("order", common.order.to_string());
    kv("layers", common.layers.to_string());
    kv("seed", common.seed.to_string());
    kv("train_loss", result.train_loss.to_string());
    kv("val_loss", result.val_loss.to_string());
    kv("test_loss", result.test_loss.to_string());
    kv("gap", result.gap.to_string());
    kv("train_acc", result.train_acc.to_string());
    kv("val_acc", result.val_acc.to_string());
    kv("test_acc", result.test_acc.to_string());
    kv("epochs_run", result.epochs_run.to_string());
    kv("best_epoch", result.best_epoch.to_string());
    for (l, (w, t)) in result
        .measured
        .w_spectral
        .iter()
        .zip(&result.measured.theta_l2)
        .enumerate()
    {
        kv(&format!("c_w_{l}"), w.to_string());
        kv(&format!("c_theta_{l}"), t.to_string());
    }
    kv("w_in_norm", result.measured.w_in_spectral.to_string());
    kv("w_out_norm", result.measured.w_out_spectral.to_string());
    common.sink.emit("train.txt", &txt)?;

    if common.sink.dir().is_some() {
        let bytes = encode_checkpoint(&config, &params);
        let path = common.sink.dir().unwrap().join("checkpoint.bin");
        std::fs::write(&path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::from)?;
    }
    common.sink.manifest("train", man.pairs())
}

// ---------------------------------------------------------------------
// bounds

fn bounds_cmd(args: BoundsArgs) -> CliResult<()> {
    let mut man = Manifest::default();
    let (common, resolver) = resolve_common(args.common, &mut man)?;
    let dataset = load_dataset(&common)?;
    let delta = resolver.get(args.delta, "delta", 0.05)?;
    let c1 = resolver.get(args.c1, "c1", 1.0)?;
    let c2 = resolver.get(args.c2, "c2", 1.0)?;
    let per_class = resolver.get(args.per_class, "per-class", 10)?;
    man.push("checkpoint", args.checkpoint.display());
    man.push("delta", delta);
    man.push("c1", c1);
    man.push("c2", c2);
    man.push("per-class", per_class);

    let bytes = std::fs::read(&args.checkpoint)
        .with_context(|| format!("reading {}", args.checkpoint.display()))
        .map_err(CliError::from)?;
    let (config, params) = runtime(decode_checkpoint(&bytes))?;
    if config.input_dim != dataset.graph.feature_dim()
        || config.num_classes != dataset.graph.num_classes()
    {
        return Err(CliError::Runtime(anyhow!(
            "checkpoint was trained for d0={} C={}, graph has d0={} C={}",
            config.input_dim,
            config.num_classes,
            dataset.graph.feature_dim(),
            dataset.graph.num_classes()
        )));
    }

    let split = make_split(dataset.graph.labels(), per_class, 0.35, common.seed)
        .map_err(|e| CliError::Runtime(anyhow!("{e}")))?;
    let vp = runtime(
        dataset
            .vandermonde(config.basis, config.order)
            .map_err(|e| gftbench_core::CoreError::InvalidConfig(e.to_string())),
    )?;
    let settings = BoundSettings { delta, c1, c2 };

    let report = runtime(bound_report(
        &params,
        &config,
        &dataset.decomp,
        &vp,
        dataset.graph.features(),
        split.train_idx.len(),
        &settings,
        true,
    ))?;
    let (inputs, _) = runtime(measured_bound_inputs(
        &params,
        &config,
        &dataset.decomp,
        &vp,
        dataset.graph.features(),
        split.train_idx.len(),
        &settings,
    ))?;

    let true_jac = report.true_jacobian.unwrap_or(f64::NAN);
    let mut txt = String::new();
    let mut kv = |k: &str, v: String| writeln!(txt, "{k}={v}").unwrap();
    kv("dataset", dataset.name.clone());
    kv("basis", config.basis.to_string());
    kv("order", config.order.to_string());
    kv("layers", config.filter_layers.to_string());
    kv("n", dataset.graph.num_nodes().to_string());
    kv("m", split.train_idx.len().to_string());
    kv("delta", delta.to_string());
    kv("c1", c1.to_string());
    kv("c2", c2.to_string());
    kv("two_inf_norm", vp.two_inf_norm().to_string());
    for (l, (w, t)) in inputs.c_w.iter().zip(&inputs.c_theta).enumerate() {
        kv(&format!("c_w_{l}"), w.to_string());
        kv(&format!("c_theta_{l}"), t.to_string());
    }
    kv("gc_nonlinear", report.gc_nonlinear.to_string());
    kv("gc_linear", report.gc_linear.to_string());
    kv("weight_term", report.weight_term.to_string());
    kv("spectral_term", report.spectral_term.to_string());
    kv("gap_complexity_term", report.gap_bound.complexity.to_string());
    kv("gap_partition_term", report.gap_bound.partition.to_string());
    kv("gap_confidence_term", report.gap_bound.confidence.to_string());
    kv("gap_bound_total", report.gap_bound.total().to_string());
    kv("jacobian_bound", report.jacobian_bound.to_string());
    kv("true_jacobian", true_jac.to_string());
    kv(
        "jacobian_tightness",
        (report.jacobian_bound / true_jac).to_string(),
    );
    kv("wrapper_prefactor", report.wrapper_prefactor.to_string());
    kv("residual_excluded", report.residual_excluded.to_string());
    common.sink.emit("bounds.txt", &txt)?;

    let csv = format!(
        "dataset,basis,order,layers,n,m,gc_nonlinear,gc_linear,weight_term,spectral_term,\
         gap_total,jacobian_bound,true_jacobian,wrapper_prefactor\n{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        dataset.name,
        config.basis,
        config.order,
        config.filter_layers,
        dataset.graph.num_nodes(),
        split.train_idx.len(),
        report.gc_nonlinear,
        report.gc_linear,
        report.weight_term,
        report.spectral_term,
        report.gap_bound.total(),
        report.jacobian_bound,
        true_jac,
        report.wrapper_prefactor
    );
    common.sink.emit("bounds.csv", &csv)?;
    common.sink.manifest("bounds", man.pairs())
}

// ---------------------------------------------------------------------
// sweep

fn sweep_cmd(args: SweepArgs) -> CliResult<()> {
    let mut man = Manifest::default();
    let (common, resolver) = resolve_common(args.common, &mut man)?;
    let model = resolve_model(args.model, &resolver, &mut man)?;
    let dataset = load_dataset(&common)?;

    let bases_text: Option<String> = resolver.opt(args.bases, "bases")?;
    let bases = match (&bases_text, &common.basis) {
        (Some(list), _) => parse_basis_list(list, common.rescaled)?,
        (None, Some(one)) => parse_basis_list(one, common.rescaled)?,
        (None, None) => parse_basis_list("all", common.rescaled)?,
    };
    let orders_text: Option<String> = resolver.opt(args.orders, "orders")?;
    let orders = match orders_text {
        Some(t) => parse_range_list(&t, "order")?,
        None => (1..=10).collect(),
    };
    let seeds_text: Option<String> = resolver.opt(args.seeds, "seeds")?;
    let seeds = match seeds_text {
        Some(t) => parse_seed_list(&t)?,
        None => (0..10).collect(),
    };
    let layers_text: Option<String> = resolver.opt(args.layer_list, "layer-list")?;
    let layers = match layers_text {
        Some(t) => parse_range_list(&t, "layer")?,
        None => vec![common.layers],
    };
    man.push(
        "bases",
        bases.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("+"),
    );
    man.push(
        "orders",
        orders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("+"),
    );
    man.push(
        "seeds",
        seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+"),
    );
    man.push(
        "layer-list",
        layers.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("+"),
    );

    let settings = SweepSettings {
        bases,
        orders,
        layers,
        seeds,
        hidden_dim: model.hidden,
        activation: model.activation,
        dropout_input: model.dropout1,
        dropout_hidden: model.dropout2,
        lambda_ew: common.lambda_ew,
        per_class: model.per_class,
        val_frac: model.val_frac,
        train: model.train.clone(),
        bound: BoundSettings::default(),
        jobs: common.jobs,
    };

    // Stream rows to the CSV as they finish.
    let mut csv = String::from(sweep_csv_header());
    csv.push('\n');
    let rows = run_sweep_with(std::slice::from_ref(&dataset), &settings, |row| {
        csv.push_str(&sweep_row_csv(row));
        csv.push('\n');
    });
    common.sink.emit("sweep.csv", &csv)?;

    let summary = analyze_sweep(&rows);
    let json = serde_json_string(&summary)?;
    common.sink.emit("summary.json", &json)?;
    common.sink.manifest("sweep", man.pairs())
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .context("serializing summary")
        .map_err(CliError::from)?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------------
// ablate

fn ablate_cmd(args: AblateArgs) -> CliResult<()> {
    let mut man = Manifest::default();
    let (common, resolver) = resolve_common(args.common, &mut man)?;
    let model = resolve_model(args.model, &resolver, &mut man)?;
    let dataset = load_dataset(&common)?;

    let bases_text: Option<String> = resolver.opt(args.bases, "bases")?;
    let bases = match (&bases_text, &common.basis) {
        (Some(list), _) => parse_basis_list(list, common.rescaled)?,
        (None, Some(one)) => parse_basis_list(one, common.rescaled)?,
        (None, None) => parse_basis_list("all", common.rescaled)?,
    };
    let seeds_text: Option<String> = resolver.opt(args.seeds, "seeds")?;
    let seeds = match seeds_text {
        Some(t) => parse_seed_list(&t)?,
        None => (0..10).collect(),
    };
    let grid_text: Option<String> = resolver.opt(args.lambda_grid, "lambda-grid")?;
    let lambda_grid = match grid_text {
        Some(t) => parse_float_list(&t, "lambda")?,
        None => gftbench_harness::ablate::default_lambda_grid(),
    };
    man.push(
        "bases",
        bases.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("+"),
    );
    man.push(
        "seeds",
        seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("+"),
    );
    man.push(
        "lambda-grid",
        lambda_grid
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("+"),
    );

    let settings = AblationSettings {
        bases,
        lambda_grid,
        seeds,
        order: common.order,
        layers: common.layers,
        hidden_dim: model.hidden,
        activation: model.activation,
        dropout_input: model.dropout1,
        dropout_hidden: model.dropout2,
        per_class: model.per_class,
        val_frac: model.val_frac,
        train: model.train.clone(),
        jobs: common.jobs,
    };

    let rows = gftbench_harness::regularizer_ablation(&dataset, &settings)
        .map_err(|e| CliError::Runtime(anyhow!("{e}")))?;
    let mut csv = String::from(ablate_csv_header());
    csv.push('\n');
    for row in &rows {
        csv.push_str(&ablate_row_csv(row));
        csv.push('\n');
    }
    common.sink.emit("ablate.csv", &csv)?;
    let json = serde_json_string(&rows)?;
    common.sink.emit("summary.json", &json)?;
    common.sink.manifest("ablate", man.pairs())
}

// ---------------------------------------------------------------------
// jacobian

fn jacobian_cmd(args: JacobianArgs) -> CliResult<()> {
    let mut man = Manifest::default();
    let (common, resolver) = resolve_common(args.common, &mut man)?;
    let model = resolve_model(args.model, &resolver, &mut man)?;
    let dataset = load_dataset(&common)?;

    let checkpoint: Option<PathBuf> = resolver.opt(args.checkpoint, "checkpoint")?;
    let (config, params): (ModelConfig, ModelParams) = match checkpoint {
        Some(path) => {
            man.push("checkpoint", path.display());
            let bytes = std::fs::read(&path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(CliError::from)?;
            runtime(decode_checkpoint(&bytes))?
        }
        None => {
            let kind = single_basis(&common)?;
            man.push("basis", kind);
            let split = make_split(
                dataset.graph.labels(),
                model.per_class,
                model.val_frac,
                common.seed,
            )
            .map_err(|e| CliError::Runtime(anyhow!("{e}")))?;
            let vp = runtime(
                dataset
                    .vandermonde(kind, common.order)
                    .map_err(|e| gftbench_core::CoreError::InvalidConfig(e.to_string())),
            )?;
            let config = build_config(&dataset, &common, &model, kind);
            let (_, params) = runtime(train(
                &config,
                &model.train,
                &dataset.decomp,
                &vp,
                dataset.graph.features(),
                dataset.graph.labels(),
                &split.train_idx,
                &split.val_idx,
                &split.test_idx,
            ))?;
            (config, params)
        }
    };

    let vp = runtime(
        dataset
            .vandermonde(config.basis, config.order)
            .map_err(|e| gftbench_core::CoreError::InvalidConfig(e.to_string())),
    )?;
    let settings = BoundSettings::default();
    let (inputs, filter_input) = runtime(measured_bound_inputs(
        &params,
        &config,
        &dataset.decomp,
        &vp,
        dataset.graph.features(),
        1.max(dataset.graph.num_nodes() / 2),
        &settings,
    ))?;
    let bound = runtime(jacobian_norm_bound(&inputs))?;
    let true_jac = runtime(true_jacobian_norm(
        &params,
        &config,
        &dataset.decomp,
        &vp,
        &filter_input,
    ))?;

    let mut txt = String::new();
    let mut kv = |k: &str, v: String| writeln!(txt, "{k}={v}").unwrap();
    kv("dataset", dataset.name.clone());
    kv("basis", config.basis.to_string());
    kv("order", config.order.to_string());
    kv("layers", config.filter_layers.to_string());
    kv("true_jacobian", true_jac.to_string());
    kv("jacobian_bound", bound.to_string());
    kv("tightness_ratio", (bound / true_jac).to_string());
    kv("sound", (true_jac <= bound * (1.0 + 1e-9)).to_string());
    if config.activation == FilterActivation::Identity && config.filter_layers == 1 {
        // Closed form for the single linear layer.
        let response = vp.response(&params.theta_vec(0));
        let peak = response.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let closed = spectral_norm(&params.w_mid[0]) * peak;
        kv("closed_form", closed.to_string());
        kv(
            "closed_form_rel_err",
            (((true_jac - closed) / closed.max(1e-300)).abs()).to_string(),
        );
    }
    common.sink.emit("jacobian.txt", &txt)?;
    common.sink.manifest("jacobian", man.pairs())
}

// ---------------------------------------------------------------------
// selftest

fn selftest_cmd(args: SelftestArgs) -> CliResult<()> {
    let mut man = Manifest::default();
    let (common, _resolver) = resolve_common(args.common, &mut man)?;
    let (report, all_ok) = crate::selftest::run_all();
    common.sink.emit("selftest.txt", &report)?;
    if common.sink.dir().is_some() {
        // Also show the outcome when results went to a file.
        print!("{report}");
    }
    common.sink.manifest("selftest", man.pairs())?;
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Runtime(anyhow!("selftest failures (see report)")))
    }
}


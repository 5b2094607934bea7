use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use semtune::embed_io::{
    encode_dataset, encode_matrix, read_dataset, read_embeddings, read_matrix,
};
use semtune::filtering::Dispersion;
use semtune::{
    binned_report, deviation_analysis, emit_weights, greedy_filter, pca, random_baseline,
    score_dataset, subspace_report, target_distance, AnswerRole, DistancePair, EmbeddingTable,
    Error, KnowledgeItem, StatSet,
};
use serde::Serialize;

use crate::args::{
    BaselineArg, BinArgs, Command, DataArgs, DispersionArg, FilterArgs, PcaArgs, ReweightArgs,
    Stat, SvdArgs, ValidateArgs,
};
use crate::config::{Baseline, RunConfig};
use crate::error::CliError;
use crate::output::{self, opt_real, real, OutDir, Table};

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str, key: &str) -> Result<&'a Path, CliError> {
    path.as_deref().ok_or_else(|| {
        CliError::Usage(format!(
            "missing --{flag} (or `paths.{key}` in the config file)"
        ))
    })
}

fn apply_data(cfg: &mut RunConfig, data: DataArgs) {
    if data.dataset.is_some() {
        cfg.paths.dataset = data.dataset;
    }
    if data.embeddings.is_some() {
        cfg.paths.embeddings = data.embeddings;
    }
}

fn load_data(cfg: &RunConfig) -> Result<(Vec<KnowledgeItem>, EmbeddingTable), CliError> {
    let dataset = required(&cfg.paths.dataset, "dataset", "dataset")?;
    let embeddings = required(&cfg.paths.embeddings, "embeddings", "embeddings")?;
    Ok((read_dataset(dataset)?, read_embeddings(embeddings)?))
}

/// Applies the subcommand's flags to `cfg`, then runs it.
pub fn run(command: Command, cfg: &mut RunConfig) -> Result<(), CliError> {
    match command {
        Command::Distance(a) => {
            apply_data(cfg, a);
            distance(cfg)
        }
        Command::Score(a) => {
            if a.dataset.is_some() {
                cfg.paths.dataset = a.dataset;
            }
            score(cfg)
        }
        Command::Deviation(a) => {
            apply_data(cfg, a);
            deviation(cfg)
        }
        Command::BinReport(a) => bin_report(a, cfg),
        Command::Filter(a) => filter(a, cfg),
        Command::Reweight(a) => reweight(a, cfg),
        Command::SvdProject(a) => svd_project(a, cfg),
        Command::Pca(a) => pca_cmd(a, cfg),
        Command::Validate(a) => validate(a, cfg),
    }
}

#[derive(Debug, Serialize)]
struct DistanceRow {
    item_id: String,
    old_target: f64,
    new_target: Option<f64>,
}

fn distance(cfg: &RunConfig) -> Result<(), CliError> {
    let (items, table) = load_data(cfg)?;
    let rows: Vec<Result<DistanceRow, Error>> = items
        .par_iter()
        .map(|item| {
            let old_target = target_distance(item, &table, DistancePair::OldVsTarget)?;
            let new_target = match item.new {
                Some(_) => Some(target_distance(item, &table, DistancePair::NewVsTarget)?),
                None => None,
            };
            Ok(DistanceRow {
                item_id: item.id.clone(),
                old_target,
                new_target,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;

    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::DISTANCES, cfg, &rows)?;
    let mut t = Table::new(["item", "old_vs_target", "new_vs_target"]);
    for r in &rows {
        t.row(vec![
            r.item_id.clone(),
            real(r.old_target),
            opt_real(r.new_target),
        ]);
    }
    print!("{t}");
    Ok(())
}

fn score(cfg: &RunConfig) -> Result<(), CliError> {
    let items = read_dataset(required(&cfg.paths.dataset, "dataset", "dataset")?)?;
    let report = score_dataset(&items)?;
    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::SCORES, cfg, &report)?;
    let mut t = Table::new(["metric", "value", "n"]);
    t.row(vec![
        "accuracy".into(),
        real(report.accuracy),
        report.n_items.to_string(),
    ]);
    t.row(vec![
        "generality".into(),
        opt_real(report.generality),
        report.n_rephrases.to_string(),
    ]);
    t.row(vec![
        "locality".into(),
        opt_real(report.locality),
        report.n_probes.to_string(),
    ]);
    print!("{t}");
    Ok(())
}

fn deviation(cfg: &RunConfig) -> Result<(), CliError> {
    let (items, table) = load_data(cfg)?;
    let report = deviation_analysis(&items, &table)?;
    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::DEVIATION, cfg, &report)?;
    let s = &report.summary;
    let mut t = Table::new(["statistic", "value"]);
    t.row(vec!["items".into(), s.n_items.to_string()]);
    t.row(vec!["deviated".into(), s.n_deviated.to_string()]);
    t.row(vec!["bad_cases".into(), s.n_bad_cases.to_string()]);
    t.row(vec![
        "deviated_bad_cases".into(),
        s.n_deviated_bad_cases.to_string(),
    ]);
    t.row(vec!["proportion_all".into(), real(s.proportion_all)]);
    t.row(vec![
        "proportion_bad_cases".into(),
        opt_real(s.proportion_bad_cases),
    ]);
    t.row(vec!["mean_rd".into(), opt_real(s.mean_rd)]);
    print!("{t}");
    Ok(())
}

fn bin_report(a: BinArgs, cfg: &mut RunConfig) -> Result<(), CliError> {
    apply_data(cfg, a.data);
    set(&mut cfg.bins.bin_width, a.bin_width);
    if let Some(stats) = a.stats {
        cfg.bins.accuracy = stats.contains(&Stat::Accuracy);
        cfg.bins.deviation = stats.contains(&Stat::Deviation);
    }
    let (items, table) = load_data(cfg)?;
    let stats = StatSet {
        accuracy: cfg.bins.accuracy,
        deviation: cfg.bins.deviation,
    };
    let report = binned_report(&items, &table, cfg.bins.bin_width, stats)?;
    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::BINS, cfg, &report)?;
    let mut t = Table::new(["bin", "n", "accuracy", "deviated", "mean_rd"]);
    for b in report.bins.iter().filter(|b| b.n_items > 0) {
        t.row(vec![
            format!("[{:.3}, {:.3})", b.lo, b.hi),
            b.n_items.to_string(),
            opt_real(b.accuracy),
            opt_real(b.deviation_proportion),
            opt_real(b.mean_rd),
        ]);
    }
    print!("{t}");
    Ok(())
}

fn filter(a: FilterArgs, cfg: &mut RunConfig) -> Result<(), CliError> {
    apply_data(cfg, a.data);
    if a.pool.is_some() {
        cfg.paths.pool = a.pool;
    }
    let f = &mut cfg.filter;
    set(&mut f.lambda_weight, a.lambda);
    set(&mut f.mean_min, a.mean_min);
    set(&mut f.mean_max, a.mean_max);
    set(&mut f.replace_fraction, a.replace_fraction);
    set(
        &mut f.dispersion,
        a.dispersion.map(|d| match d {
            DispersionArg::Variance => Dispersion::Variance,
            DispersionArg::Stddev => Dispersion::StdDev,
        }),
    );
    set(
        &mut f.baseline,
        a.baseline.map(|b| match b {
            BaselineArg::None => Baseline::None,
            BaselineArg::Random => Baseline::Random,
        }),
    );

    let (working, table) = load_data(cfg)?;
    let pool = read_dataset(required(&cfg.paths.pool, "pool", "pool")?)?;
    let fcfg = cfg.filter_config();
    let result = greedy_filter(&working, &pool, &table, &fcfg)?;
    let baseline = match cfg.filter.baseline {
        Baseline::None => None,
        Baseline::Random => Some(random_baseline(&working, &pool, &table, &fcfg)?),
    };

    let by_id: HashMap<&str, &KnowledgeItem> = working
        .iter()
        .chain(&pool)
        .map(|i| (i.id.as_str(), i))
        .collect();
    let filtered: Vec<KnowledgeItem> = result
        .final_set
        .iter()
        .map(|id| (*by_id[id.as_str()]).clone())
        .collect();

    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::FILTER_RESULT, cfg, &result)?;
    out.write_bytes(output::FILTERED, encode_dataset(&filtered).as_bytes())?;
    if let Some(b) = &baseline {
        out.write_report(output::BASELINE_RESULT, cfg, b)?;
    }

    let mut t = Table::new(["step", "removed", "added", "objective"]);
    t.row(vec![
        "0".into(),
        "-".into(),
        "-".into(),
        real(result.objective_trace[0]),
    ]);
    for (i, s) in result.swaps.iter().enumerate() {
        t.row(vec![
            (i + 1).to_string(),
            s.removed_id.clone(),
            s.added_id.clone(),
            real(s.objective_after),
        ]);
    }
    print!("{t}");
    if let Some(reason) = result.stop_reason {
        println!("stopped early: {reason:?}");
    }
    if let Some(b) = &baseline {
        let last = b.objective_trace.last().copied().unwrap_or(f64::NAN);
        println!("random baseline objective: {}", real(last));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct WeightsSummary<'a> {
    weights_file: &'a str,
    n_records: usize,
}

fn reweight(a: ReweightArgs, cfg: &mut RunConfig) -> Result<(), CliError> {
    apply_data(cfg, a.data);
    set(&mut cfg.reweight.gamma, a.gamma);
    let (items, table) = load_data(cfg)?;
    let weights = emit_weights(&items, &table, cfg.reweight.gamma)?;
    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_jsonl(output::WEIGHTS, &weights)?;
    let summary = WeightsSummary {
        weights_file: output::WEIGHTS,
        n_records: weights.len(),
    };
    out.write_report(output::WEIGHTS_CONFIG, cfg, &summary)?;
    let mut t = Table::new(["item", "distance", "lambda", "weight"]);
    for w in &weights {
        t.row(vec![
            w.item_id.clone(),
            real(w.distance),
            real(w.lambda_value),
            real(w.weight),
        ]);
    }
    print!("{t}");
    Ok(())
}

fn svd_project(a: SvdArgs, cfg: &mut RunConfig) -> Result<(), CliError> {
    if a.w.is_some() {
        cfg.paths.w = a.w;
    }
    if a.dw.is_some() {
        cfg.paths.dw = a.dw;
    }
    set(&mut cfg.svd.rank, a.rank);
    let w = read_matrix(required(&cfg.paths.w, "w", "w")?)?;
    let dw = read_matrix(required(&cfg.paths.dw, "dw", "dw")?)?;
    let report = subspace_report(&w, &dw, cfg.svd.rank, cfg.seed)?;
    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::SUBSPACE, cfg, &report)?;
    let mut t = Table::new(["quantity", "value"]);
    t.row(vec!["||W||_F".into(), real(report.norm_w)]);
    t.row(vec!["||dW||_F".into(), real(report.norm_dw)]);
    t.row(vec!["||U^T W V|| (dW)".into(), real(report.proj_dw)]);
    t.row(vec!["||U^T W V|| (W)".into(), real(report.proj_w)]);
    t.row(vec![
        "||U^T W V|| (random)".into(),
        real(report.proj_random),
    ]);
    t.row(vec!["amplification".into(), opt_real(report.amplification)]);
    print!("{t}");
    Ok(())
}

fn pca_cmd(a: PcaArgs, cfg: &mut RunConfig) -> Result<(), CliError> {
    if a.features.is_some() {
        cfg.paths.features = a.features;
    }
    set(&mut cfg.pca.components, a.components);
    if a.projections {
        cfg.pca.write_projections = true;
    }
    let x = read_matrix(required(&cfg.paths.features, "features", "features")?)?;
    let result = pca(&x, cfg.pca.components)?;
    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::PCA, cfg, &result)?;
    if cfg.pca.write_projections {
        out.write_bytes(
            output::PROJECTIONS,
            &encode_matrix(&result.projections_matrix())?,
        )?;
    }
    let mut t = Table::new(["component", "explained_variance", "ratio"]);
    for (i, v) in result.explained_variance.iter().enumerate() {
        t.row(vec![
            (i + 1).to_string(),
            real(*v),
            real(v / result.total_variance),
        ]);
    }
    print!("{t}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct DatasetSummary {
    n_items: usize,
    n_with_new: usize,
    n_rephrases: usize,
    n_probes: usize,
}

#[derive(Debug, Serialize)]
struct EmbeddingSummary {
    n_records: usize,
    dim: usize,
}

#[derive(Debug, Serialize)]
struct MatrixSummary {
    path: PathBuf,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    dataset: Option<DatasetSummary>,
    embeddings: Option<EmbeddingSummary>,
    matrices: Vec<MatrixSummary>,
    /// Records the dataset needs but the embeddings lack.
    missing_records: Vec<String>,
    /// Records no dataset item refers to.
    unreferenced_records: usize,
}

fn needed_keys(item: &KnowledgeItem) -> impl Iterator<Item = String> + '_ {
    let roles: &[AnswerRole] = if item.new.is_some() {
        &[AnswerRole::Target, AnswerRole::Old, AnswerRole::New]
    } else {
        &[AnswerRole::Target, AnswerRole::Old]
    };
    roles.iter().map(move |&r| item.key(r))
}

fn validate(a: ValidateArgs, cfg: &mut RunConfig) -> Result<(), CliError> {
    apply_data(cfg, a.data);
    if !a.matrices.is_empty() {
        cfg.paths.matrices = a.matrices;
    }
    let p = &cfg.paths;
    if p.dataset.is_none() && p.embeddings.is_none() && p.matrices.is_empty() {
        return Err(CliError::Usage(
            "nothing to validate: pass --dataset, --embeddings or --matrix".into(),
        ));
    }

    let items = p.dataset.as_deref().map(read_dataset).transpose()?;
    let table = p.embeddings.as_deref().map(read_embeddings).transpose()?;
    let mut matrices = Vec::new();
    for path in &p.matrices {
        let m = read_matrix(path)?;
        matrices.push(MatrixSummary {
            path: path.clone(),
            rows: m.rows(),
            cols: m.cols(),
        });
    }

    let mut missing_records = Vec::new();
    let mut unreferenced_records = 0;
    if let (Some(items), Some(table)) = (&items, &table) {
        let mut referenced = 0;
        for item in items {
            for key in needed_keys(item) {
                if table.contains(&key) {
                    referenced += 1;
                } else {
                    missing_records.push(key);
                }
            }
        }
        unreferenced_records = table.len() - referenced;
        for item in items {
            if needed_keys(item).all(|k| table.contains(&k)) {
                target_distance(item, table, DistancePair::OldVsTarget)?;
                if item.new.is_some() {
                    target_distance(item, table, DistancePair::NewVsTarget)?;
                }
            }
        }
    }

    let report = ValidateReport {
        dataset: items.as_ref().map(|items| DatasetSummary {
            n_items: items.len(),
            n_with_new: items.iter().filter(|i| i.new.is_some()).count(),
            n_rephrases: items.iter().map(|i| i.rephrases.len()).sum(),
            n_probes: items.iter().map(|i| i.locality_probes.len()).sum(),
        }),
        embeddings: table.as_ref().map(|t| EmbeddingSummary {
            n_records: t.len(),
            dim: t.dim(),
        }),
        matrices,
        missing_records,
        unreferenced_records,
    };
    let out = OutDir::create(&cfg.paths.out_dir)?;
    out.write_report(output::VALIDATE, cfg, &report)?;

    let mut t = Table::new(["check", "value"]);
    if let Some(d) = &report.dataset {
        t.row(vec!["items".into(), d.n_items.to_string()]);
        t.row(vec![
            "items with new answer".into(),
            d.n_with_new.to_string(),
        ]);
        t.row(vec!["rephrases".into(), d.n_rephrases.to_string()]);
        t.row(vec!["locality probes".into(), d.n_probes.to_string()]);
    }
    if let Some(e) = &report.embeddings {
        t.row(vec!["embedding records".into(), e.n_records.to_string()]);
        t.row(vec!["embedding dim".into(), e.dim.to_string()]);
    }
    for m in &report.matrices {
        t.row(vec![
            m.path.display().to_string(),
            format!("{}x{}", m.rows, m.cols),
        ]);
    }
    if items.is_some() && table.is_some() {
        t.row(vec![
            "missing records".into(),
            report.missing_records.len().to_string(),
        ]);
        t.row(vec![
            "unreferenced records".into(),
            report.unreferenced_records.to_string(),
        ]);
    }
    print!("{t}");

    if report.missing_records.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingEmbedding(report.missing_records.join(", ")).into())
    }
}

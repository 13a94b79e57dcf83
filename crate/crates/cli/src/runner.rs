//! Drives the library from a validated config: runs the sweep, assembles
//! the result table (rows, per-p selection summaries, knee, stability
//! estimates, error records), and offers single-cell reruns and post-hoc
//! knee recomputation from a parsed table.

use std::collections::HashMap;

use transval::stats::pairwise_sum;
use transval::sweep::{run_cell as sweep_run_cell, run_sweep, GridCell, Procedure, SweepGrid, SweepSpec};
use transval::{
    check_generalization, equivalent_presample_p, estimate_erm_gap, estimate_oaros, estimate_oavs,
    knee_detect, load_idx, min_selection_gap, selection_bias, Dataset, Error, ExecMode, Generator,
    ModelGrid, Quantity, Seed, SelectionReport, TaskKind,
};

use crate::config::{ExperimentConfig, SourceConfig, StabilityConfig};
use crate::table::{
    ErrorRecord, ModelRecord, ResultRow, ResultTable, SelectionRecord, StabilityRecord,
};
use crate::CliError;

/// A loaded dataset acting as a data source: each draw is a fresh uniform
/// sample of distinct examples, so replications see different subsets.
pub struct FixedPool {
    data: Dataset,
}

impl FixedPool {
    pub fn new(data: Dataset) -> Self {
        FixedPool { data }
    }
}

impl Generator for FixedPool {
    fn sample(&self, count: usize, seed: &Seed) -> transval::Result<Dataset> {
        if count == 0 {
            return Err(Error::contract("count must be at least 1"));
        }
        if count > self.data.len() {
            return Err(Error::sizing(format!(
                "pool of {} examples cannot provide {count}",
                self.data.len()
            )));
        }
        // first `count` entries of a seeded shuffle: distinct, uniform
        let mut rng = seed.rng();
        let mut indices: Vec<usize> = (0..self.data.len()).collect();
        for i in 0..count {
            let j = i + rng.next_below((indices.len() - i) as u64) as usize;
            indices.swap(i, j);
        }
        self.data.subset(&indices[..count])
    }

    fn task(&self) -> TaskKind {
        self.data.task()
    }
}

fn lib_error(e: Error) -> CliError {
    match e {
        Error::Io(inner) => CliError::Io(inner.to_string()),
        other => CliError::Run(other.to_string()),
    }
}

/// Instantiate the data source described by the config.
pub fn make_source(cfg: &ExperimentConfig) -> Result<Box<dyn Generator>, CliError> {
    match &cfg.data.source {
        SourceConfig::Cubic(spec) => Ok(Box::new(*spec)),
        SourceConfig::Blobs(spec) => Ok(Box::new(*spec)),
        SourceConfig::Idx { images, labels } => {
            let data = load_idx(images, labels).map_err(|e| match e {
                Error::Io(inner) => CliError::Io(inner.to_string()),
                other => CliError::Config(vec![format!("data.images/data.labels: {other}")]),
            })?;
            Ok(Box::new(FixedPool::new(data)))
        }
    }
}

fn sweep_spec(cfg: &ExperimentConfig) -> Result<SweepSpec, CliError> {
    Ok(SweepSpec {
        p_values: cfg.p_grid.clone(),
        models: ModelGrid::new(cfg.models.clone())
            .map_err(|e| CliError::Config(vec![format!("model: {e}")]))?,
        replications: cfg.replications,
        sizes: cfg.data.sizes,
        loss: cfg.loss,
        bias: cfg.data.bias.clone(),
    })
}

/// Warnings the run should surface on stderr; the output file is unaffected.
pub fn clamp_warnings(cfg: &ExperimentConfig) -> Vec<String> {
    let mut warnings = Vec::new();
    if cfg.procedure != Procedure::BatchSample {
        return warnings;
    }
    let (n, m) = (cfg.data.sizes.n, cfg.data.sizes.m);
    for &p in &cfg.p_grid {
        if let Ok(eq) = equivalent_presample_p(p, n, m) {
            if eq.clamped {
                warnings.push(format!(
                    "p={p}: equivalent presample probability {:.4} exceeds 1 and was clamped",
                    p * n as f64 / m as f64
                ));
            }
        }
    }
    warnings
}

pub struct RunOutcome {
    pub table: ResultTable,
    pub warnings: Vec<String>,
}

/// Run the configured sweep (and stability estimators, when requested) into
/// a result table. Deterministic in the master seed: worker count changes
/// scheduling only, never bytes.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let warnings = clamp_warnings(cfg);
    let source = make_source(cfg)?;
    let spec = sweep_spec(cfg)?;
    let seed = Seed::new(cfg.master_seed);
    let mode = ExecMode::with_workers(cfg.workers);
    let grid = run_sweep(&spec, cfg.procedure, source.as_ref(), &seed, mode).map_err(lib_error)?;
    let mut table = table_from_grid(&grid, cfg);
    if let Some(stability) = &cfg.stability {
        table.stability = run_stability(stability, cfg, source.as_ref(), mode)?;
    }
    Ok(RunOutcome { table, warnings })
}

/// Recompute one grid cell bit-identically to the full sweep.
pub fn rerun_cell(
    cfg: &ExperimentConfig,
    p_index: usize,
    model_index: usize,
    replication: usize,
) -> Result<GridCell, CliError> {
    let source = make_source(cfg)?;
    let spec = sweep_spec(cfg)?;
    let seed = Seed::new(cfg.master_seed);
    sweep_run_cell(
        &spec,
        cfg.procedure,
        source.as_ref(),
        &seed,
        p_index,
        model_index,
        replication,
    )
    .map_err(lib_error)
}

fn table_from_grid(grid: &SweepGrid, cfg: &ExperimentConfig) -> ResultTable {
    let mut table = ResultTable::default();
    for (id, learner) in cfg.models.iter().enumerate() {
        table.models.push(ModelRecord { id, name: learner.name() });
    }
    for cell in &grid.cells {
        let p = grid.p_values[cell.p_index];
        let chosen = grid.chosen_for(cell.p_index, cell.replication) == Some(cell.model_index);
        match &cell.result {
            Ok(r) => table.rows.push(ResultRow {
                p,
                model_id: cell.model_index,
                replication: cell.replication,
                val_loss: r.val_loss,
                test_loss: r.test_loss.unwrap_or(f64::NAN),
                leak_count: r.leak_count,
                chosen,
                seed_path: cell.seed_path.clone(),
            }),
            Err(e) => {
                table.rows.push(ResultRow {
                    p,
                    model_id: cell.model_index,
                    replication: cell.replication,
                    val_loss: f64::NAN,
                    test_loss: f64::NAN,
                    leak_count: 0,
                    chosen: false,
                    seed_path: cell.seed_path.clone(),
                });
                table.errors.push(ErrorRecord {
                    p_index: cell.p_index,
                    model: cell.model_index,
                    replication: cell.replication,
                    message: e.to_string(),
                });
            }
        }
    }
    let has_test = cfg.data.sizes.test.is_some();
    let mut best_curve = Vec::with_capacity(grid.p_values.len());
    for (pi, &p) in grid.p_values.iter().enumerate() {
        let record = selection_for_p(grid, pi, p, has_test);
        best_curve.push(record.chosen.map(|c| record.val_losses[c]));
        table.selections.push(record);
    }
    table.knee = Some(knee_of_best_curve(&grid.p_values, &best_curve));
    table
}

/// Mean losses per model over the replications where every model succeeded,
/// summarized like a single selection: argmin, gap, test-side bias.
fn selection_for_p(grid: &SweepGrid, pi: usize, p: f64, has_test: bool) -> SelectionRecord {
    let complete: Vec<usize> = (0..grid.replications)
        .filter(|&rep| grid.chosen_for(pi, rep).is_some())
        .collect();
    if complete.is_empty() {
        return SelectionRecord {
            p,
            chosen: None,
            min_gap: None,
            bias: None,
            bias_magnitude: None,
            val_losses: Vec::new(),
        };
    }
    let mean_over = |pick: &dyn Fn(usize, usize) -> f64, mi: usize| {
        let values: Vec<f64> = complete.iter().map(|&rep| pick(mi, rep)).collect();
        pairwise_sum(&values) / values.len() as f64
    };
    let val = |mi: usize, rep: usize| {
        grid.cell(pi, mi, rep).result.as_ref().expect("complete replication").val_loss
    };
    let val_losses: Vec<f64> = (0..grid.model_count).map(|mi| mean_over(&val, mi)).collect();
    let test_losses: Option<Vec<f64>> = has_test.then(|| {
        let test = |mi: usize, rep: usize| {
            grid.cell(pi, mi, rep)
                .result
                .as_ref()
                .expect("complete replication")
                .test_loss
                .unwrap_or(f64::NAN)
        };
        (0..grid.model_count).map(|mi| mean_over(&test, mi)).collect()
    });
    let chosen = argmin(&val_losses);
    let min_gap = if val_losses.len() == 1 {
        f64::INFINITY
    } else {
        min_selection_gap(&val_losses).expect("two or more models")
    };
    let report = SelectionReport {
        chosen,
        validation_losses: val_losses.clone(),
        test_losses,
        min_gap,
        bias_flagged: None,
    };
    let (bias, bias_magnitude) = match selection_bias(&report) {
        Ok(b) => (Some(b.flagged), Some(b.magnitude)),
        Err(_) => (None, None),
    };
    SelectionRecord {
        p,
        chosen: Some(chosen),
        min_gap: Some(min_gap),
        bias,
        bias_magnitude,
        val_losses,
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Knee of the best-validation-loss curve. The detector expects
/// higher-is-better scores bulging above the chord, so losses go in
/// negated. Fewer than 3 points or any incomplete p yields no knee.
fn knee_of_best_curve(p_values: &[f64], best: &[Option<f64>]) -> Option<f64> {
    if p_values.len() < 3 || best.iter().any(|b| b.is_none()) {
        return None;
    }
    let scores: Vec<f64> = best.iter().map(|b| -b.expect("checked")).collect();
    match knee_detect(p_values, &scores) {
        Ok(Some(idx)) => Some(p_values[idx]),
        _ => None,
    }
}

fn run_stability(
    stability: &StabilityConfig,
    cfg: &ExperimentConfig,
    source: &dyn Generator,
    mode: ExecMode,
) -> Result<Vec<StabilityRecord>, CliError> {
    let learner = &cfg.models[stability.model];
    let master = Seed::new(cfg.master_seed);
    let mut records = Vec::with_capacity(stability.quantities.len());
    for (qi, q) in stability.quantities.iter().enumerate() {
        let seed = master.derive("stability", qi as u64);
        let estimate = match q {
            Quantity::Oaros => {
                estimate_oaros(learner, source, stability.n, stability.trials, &seed, mode)
            }
            Quantity::Oavs => estimate_oavs(
                learner,
                source,
                stability.n,
                stability.m.expect("validated for oavs"),
                stability.trials,
                &seed,
                mode,
            ),
            Quantity::ErmGap => {
                estimate_erm_gap(learner, source, stability.n, stability.trials, &seed, mode)
            }
            Quantity::GenGap => {
                check_generalization(learner, source, stability.n, stability.trials, &seed, mode)
                    .map(|check| check.gen_gap)
            }
        }
        .map_err(lib_error)?;
        records.push(StabilityRecord {
            quantity: q.as_str().to_string(),
            mean: estimate.mean,
            std_error: estimate.std_error,
            trials: estimate.trials,
        });
    }
    Ok(records)
}

/// Stability estimators alone, without a sweep.
pub fn stability_table(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let stability = cfg.stability.as_ref().ok_or_else(|| {
        CliError::Config(vec!["stability: section required by this subcommand".to_string()])
    })?;
    let source = make_source(cfg)?;
    let mode = ExecMode::with_workers(cfg.workers);
    let mut table = ResultTable::default();
    for (id, learner) in cfg.models.iter().enumerate() {
        table.models.push(ModelRecord { id, name: learner.name() });
    }
    table.stability = run_stability(stability, cfg, source.as_ref(), mode)?;
    Ok(table)
}

/// Recompute the knee from a parsed table's rows: per-p mean validation
/// loss of each model over complete replications, best model per p, then
/// knee detection on that curve. Failed cells are recognized by NaN losses.
pub fn knee_from_rows(table: &ResultTable) -> Option<f64> {
    let mut p_values: Vec<f64> = Vec::new();
    let mut model_count = 0;
    let mut replications = 0;
    for row in &table.rows {
        if !p_values.iter().any(|&p| p.to_bits() == row.p.to_bits()) {
            p_values.push(row.p);
        }
        model_count = model_count.max(row.model_id + 1);
        replications = replications.max(row.replication + 1);
    }
    p_values.sort_by(|a, b| a.partial_cmp(b).expect("finite p"));
    if p_values.len() < 3 {
        return None;
    }
    let mut cells: HashMap<(u64, usize, usize), f64> = HashMap::new();
    for row in &table.rows {
        cells.insert((row.p.to_bits(), row.model_id, row.replication), row.val_loss);
    }
    let mut best = Vec::with_capacity(p_values.len());
    for &p in &p_values {
        let mut per_model: Vec<Vec<f64>> = vec![Vec::new(); model_count];
        for rep in 0..replications {
            let losses: Vec<Option<f64>> = (0..model_count)
                .map(|mi| cells.get(&(p.to_bits(), mi, rep)).copied().filter(|v| v.is_finite()))
                .collect();
            if losses.iter().all(|l| l.is_some()) {
                for (mi, l) in losses.into_iter().enumerate() {
                    per_model[mi].push(l.expect("checked"));
                }
            }
        }
        if per_model.iter().any(|v| v.is_empty()) {
            return None;
        }
        let means: Vec<f64> =
            per_model.iter().map(|v| pairwise_sum(v) / v.len() as f64).collect();
        best.push(Some(means.iter().copied().fold(f64::INFINITY, f64::min)));
    }
    knee_of_best_curve(&p_values, &best)
}

/// Render a generated dataset as CSV: feature columns then the label.
pub fn gen_data_csv(cfg: &ExperimentConfig, count: usize) -> Result<String, CliError> {
    if count == 0 {
        return Err(CliError::Config(vec!["count: must be at least 1".to_string()]));
    }
    let source = make_source(cfg)?;
    let seed = Seed::new(cfg.master_seed).derive("gen-data", 0);
    let data = source.sample(count, &seed).map_err(lib_error)?;
    let mut out = String::new();
    for d in 0..data.dim() {
        out.push_str(&format!("feature_{d},"));
    }
    out.push_str("label\n");
    for ex in data.examples() {
        for f in &ex.features {
            out.push_str(&crate::table::fmt_float(*f));
            out.push(',');
        }
        match &ex.label {
            transval::Label::Class(c) => out.push_str(&c.to_string()),
            transval::Label::Target(t) => out.push_str(&crate::table::fmt_float(*t)),
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DataConfig;
    use transval::sweep::SplitSizes;
    use transval::{CubicSpec, Learner, LossKind};

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            master_seed: 42,
            procedure: Procedure::Presample,
            loss: LossKind::SquaredError,
            replications: 4,
            p_grid: vec![0.0, 0.5, 1.0],
            output: "unused.csv".into(),
            workers: 1,
            data: DataConfig {
                source: SourceConfig::Cubic(CubicSpec {
                    noise_sigma: 0.25,
                    ..CubicSpec::default()
                }),
                sizes: SplitSizes { n: 10, m: 5, test: None },
                bias: None,
            },
            models: vec![
                Learner::Polyreg { degree: 1, ridge: 0.01 },
                Learner::Polyreg { degree: 3, ridge: 0.01 },
            ],
            stability: None,
        }
    }

    #[test]
    fn row_count_matches_grid() {
        let outcome = run_config(&small_config()).unwrap();
        assert_eq!(outcome.table.rows.len(), 3 * 2 * 4);
        assert_eq!(outcome.table.selections.len(), 3);
        assert!(outcome.table.knee.is_some());
        assert!(outcome.table.errors.is_empty());
        assert_eq!(outcome.table.models.len(), 2);
        // exactly one chosen model per (p, replication)
        for pi in 0..3 {
            for rep in 0..4 {
                let chosen: usize = outcome
                    .table
                    .rows
                    .iter()
                    .filter(|r| {
                        r.p.to_bits() == outcome.table.selections[pi].p.to_bits()
                            && r.replication == rep
                            && r.chosen
                    })
                    .count();
                assert_eq!(chosen, 1);
            }
        }
    }

    #[test]
    fn rerun_matches_sweep_cell() {
        let cfg = small_config();
        let outcome = run_config(&cfg).unwrap();
        let row = &outcome.table.rows[7];
        let pi = cfg
            .p_grid
            .iter()
            .position(|p| p.to_bits() == row.p.to_bits())
            .unwrap();
        let cell = rerun_cell(&cfg, pi, row.model_id, row.replication).unwrap();
        let result = cell.result.unwrap();
        assert_eq!(result.val_loss.to_bits(), row.val_loss.to_bits());
        assert_eq!(cell.seed_path, row.seed_path);
        assert_eq!(result.leak_count, row.leak_count);
    }

    #[test]
    fn knee_from_rows_agrees_with_run() {
        let outcome = run_config(&small_config()).unwrap();
        let recomputed = knee_from_rows(&outcome.table);
        assert_eq!(outcome.table.knee, Some(recomputed));
    }

    #[test]
    fn fixed_pool_draws_distinct_examples() {
        let data = transval::gen_cubic(&CubicSpec::default(), 30, &Seed::new(5)).unwrap();
        let pool = FixedPool::new(data);
        let draw = pool.sample(30, &Seed::new(6)).unwrap();
        // drawing the whole pool is a permutation: every x appears once
        let mut xs: Vec<u64> = draw.examples().iter().map(|e| e.features[0].to_bits()).collect();
        xs.sort_unstable();
        xs.dedup();
        assert_eq!(xs.len(), 30);
        assert!(pool.sample(31, &Seed::new(7)).is_err());
        let again = pool.sample(12, &Seed::new(6)).unwrap();
        let first = pool.sample(12, &Seed::new(6)).unwrap();
        assert_eq!(again.examples(), first.examples());
    }

    #[test]
    fn gen_data_emits_csv() {
        let csv = gen_data_csv(&small_config(), 5).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "feature_0,label");
    }
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use mamnet::checkpoint::Checkpoint;
use mamnet::config::{parse_seeds, RunConfig};
use mamnet::data::{load_flows, FlowTable, SynthSpec};
use mamnet::eval::{
    accuracy, evaluate_windows, f1, grid_search, parse_grid, precision, prepare, recall, run_ablation, split_row,
    train_prepared, RunOutcome,
};
use mamnet::model::predict_window;
use mamnet::{Error, Result, Task, Variant};

/// Hybrid state-space / spectral traffic model.
#[derive(Parser)]
#[command(name = "mamnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Flow CSV (overrides the `data` key; absent means synthetic data).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Primary output file (CSV, scores, or best config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report or loss-trace destination
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seed for single runs (default 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Override a config key, e.g. `--set epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic flow CSV and a `.spec` sidecar.
    Generate(Common),
    /// Train on the chronological training split and save a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Score a checkpoint on the test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Train every variant under every seed and aggregate.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// `1..5` or `1,2,3`.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma list of variants (default: all four).
        #[arg(long)]
        variants: Option<String>,
    },
    /// Select hyperparameters on a validation slice of the training split.
    Gridsearch {
        #[command(flatten)]
        common: Common,
        /// Lines of `key = v1, v2, ...`.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Per-window scores for a whole file.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mamnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(c) => generate(&c),
        Command::Train { common, model } => train(&common, &model),
        Command::Eval { common, model } => eval(&common, &model),
        Command::Ablate {
            common,
            seeds,
            variants,
        } => ablate(&common, seeds.as_deref(), variants.as_deref()),
        Command::Gridsearch { common, grid } => gridsearch(&common, &grid),
        Command::Predict { common, model } => predict(&common, &model),
    }
}

fn resolve_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path).map_err(|e| e.context("config"))?,
        None => RunConfig::default(),
    };
    for o in &c.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
        cfg.set(k.trim(), v.trim()).map_err(|e| e.context("--set"))?;
    }
    if let Some(d) = &c.data {
        cfg.data = Some(d.clone());
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    if let Some(r) = &c.report {
        cfg.report = Some(r.clone());
    }
    cfg.validate().map_err(|e| e.context("config"))?;
    Ok(cfg)
}

fn echo(cfg: &RunConfig) {
    let mut s = format!("# effective config (hash {})\n", cfg.hash());
    for line in cfg.to_text().lines() {
        let _ = writeln!(s, "#   {line}");
    }
    eprint!("{s}");
}

fn synth_spec(cfg: &RunConfig) -> Result<SynthSpec> {
    match &cfg.synth_spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            SynthSpec::parse(&text)
        }
        None => Ok(SynthSpec::reference(42)),
    }
}

fn load_table(cfg: &RunConfig) -> Result<FlowTable> {
    let table = match &cfg.data {
        Some(path) => load_flows(path, &cfg.load_options()),
        None => synth_spec(cfg).and_then(|s| s.generate()),
    }
    .map_err(|e| e.context("load"))?;
    if table.dropped_rows > 0 || !table.dropped_columns.is_empty() {
        eprintln!(
            "# load: dropped {} bad rows and {} non-numeric columns {:?}",
            table.dropped_rows,
            table.dropped_columns.len(),
            table.dropped_columns
        );
    }
    Ok(table)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn generate(c: &Common) -> Result<()> {
    let cfg = resolve_config(c)?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Error::Usage("generate: --out is required".into()))?;
    let mut spec = synth_spec(&cfg).map_err(|e| e.context("generate"))?;
    if let Some(seed) = c.seed {
        spec.seed = seed;
    }
    let table = spec.generate().map_err(|e| e.context("generate"))?;
    let hash = cfg.hash();
    table
        .write_csv(&out, &[format!("config_hash={hash}"), format!("data={}", table.provenance)])
        .map_err(|e| e.context("generate"))?;
    let spec_path = sidecar(&out, ".spec");
    let spec_text = format!("# config_hash={hash}\n{spec}");
    std::fs::write(&spec_path, spec_text).map_err(|e| Error::io(&spec_path, e))?;
    let positives = table.labels.iter().filter(|&&l| l == 1).count();
    eprintln!(
        "generate: {} rows x {} features, {positives} anomalous ({:.2}%), spec in {}",
        table.n_rows(),
        table.n_features(),
        100.0 * positives as f64 / table.n_rows() as f64,
        spec_path.display()
    );
    Ok(())
}

fn train(c: &Common, model: &Path) -> Result<()> {
    let cfg = resolve_config(c)?;
    echo(&cfg);
    let table = load_table(&cfg)?;
    let prep = prepare(&table, &cfg, cfg.seed).map_err(|e| e.context("prepare"))?;
    eprintln!(
        "train: {} features kept {:?}, {} training windows ({} anomalous), {} test windows",
        prep.selected.len(),
        prep.selected.iter().map(|&j| table.columns[j].as_str()).collect::<Vec<_>>(),
        prep.train.len(),
        prep.train.positives(),
        prep.test.len()
    );
    let (params, losses) = train_prepared(&prep, &cfg, cfg.seed).map_err(|e| e.context("train"))?;
    let ck = Checkpoint {
        config: cfg.clone(),
        columns: table.columns.clone(),
        selected: prep.selected,
        norm: prep.norm,
        params,
    };
    ck.save(model).map_err(|e| e.context("save checkpoint"))?;

    let mut trace = format!("# config_hash={}\nepoch,loss\n", cfg.hash());
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(trace, "{},{l:?}", i + 1);
    }
    let trace_path = cfg.report.clone().unwrap_or_else(|| sidecar(model, ".loss.csv"));
    std::fs::write(&trace_path, trace).map_err(|e| Error::io(&trace_path, e))?;
    eprintln!(
        "train: final loss {:.5} after {} epochs; checkpoint {}, loss trace {}",
        losses.last().copied().unwrap_or(f64::NAN),
        losses.len(),
        model.display(),
        trace_path.display()
    );
    Ok(())
}

fn load_checkpoint(c: &Common, model: &Path) -> Result<(Checkpoint, RunConfig)> {
    let ck = Checkpoint::load(model).map_err(|e| e.context("load checkpoint"))?;
    let mut cfg = ck.config.clone();
    if let Some(d) = &c.data {
        cfg.data = Some(d.clone());
    }
    cfg.out = c.out.clone();
    cfg.report = c.report.clone();
    Ok((ck, cfg))
}

fn eval(c: &Common, model: &Path) -> Result<()> {
    let (ck, cfg) = load_checkpoint(c, model)?;
    let table = load_table(&cfg)?;
    let cut = split_row(table.n_rows(), cfg.split);
    let windows = ck
        .windows(&table.slice_rows(cut, table.n_rows()))
        .map_err(|e| e.context("window"))?;
    let outcome = evaluate_windows(&ck.params, &ck.model_config(), &windows).map_err(|e| e.context("evaluate"))?;
    let text = eval_report(&ck, &table, &outcome);
    write_output(cfg.report.as_deref(), &text)?;
    for (name, value) in &outcome.metrics {
        eprintln!("eval: {name} = {}", value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}")));
    }
    Ok(())
}

fn eval_report(ck: &Checkpoint, table: &FlowTable, outcome: &RunOutcome) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:?}"));
    let mut s = format!(
        "# config_hash={}\n# data={}\nscope,metric,value\n",
        ck.config.hash(),
        table.provenance
    );
    for (name, value) in &outcome.metrics {
        let _ = writeln!(s, "all,{name},{}", cell(*value));
    }
    for (tag, conf) in &outcome.groups {
        let scope = format!("event:{tag}");
        let _ = writeln!(s, "{scope},windows,{}", conf.total());
        let _ = writeln!(s, "{scope},tp,{}", conf.tp);
        let _ = writeln!(s, "{scope},tn,{}", conf.tn);
        let _ = writeln!(s, "{scope},fp,{}", conf.fp);
        let _ = writeln!(s, "{scope},fn,{}", conf.fn_);
        let _ = writeln!(s, "{scope},accuracy,{}", cell(accuracy(conf)));
        let _ = writeln!(s, "{scope},recall,{}", cell(recall(conf)));
        let _ = writeln!(s, "{scope},precision,{}", cell(precision(conf)));
        let _ = writeln!(s, "{scope},f1,{}", cell(f1(conf)));
    }
    s
}

fn parse_variants(text: &str) -> Result<Vec<Variant>> {
    text.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Usage(format!("unknown variant `{v}`"))))
        .collect()
}

fn ablate(c: &Common, seeds: Option<&str>, variants: Option<&str>) -> Result<()> {
    let mut cfg = resolve_config(c)?;
    if let Some(s) = seeds {
        cfg.seeds = parse_seeds(s).ok_or_else(|| Error::Usage(format!("--seeds: cannot parse `{s}`")))?;
    }
    let variants = match variants {
        Some(v) => parse_variants(v)?,
        None => Variant::ALL.to_vec(),
    };
    echo(&cfg);
    let table = load_table(&cfg)?;
    let started = Instant::now();
    let report = run_ablation(&table, &cfg, &variants, &cfg.seeds).map_err(|e| e.context("ablate"))?;
    for f in &report.failures {
        eprintln!("ablate: {} seed {} failed: {}", f.variant, f.seed, f.message);
    }
    match &cfg.report {
        Some(path) => {
            std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
            let jsonl = path.with_extension("jsonl");
            std::fs::write(&jsonl, report.to_jsonl()).map_err(|e| Error::io(&jsonl, e))?;
            eprintln!("ablate: report {} and {}", path.display(), jsonl.display());
        }
        None => print!("{}", report.to_csv()),
    }
    eprint!("{}", report.to_table());
    eprintln!("ablate: {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn gridsearch(c: &Common, grid_path: &Path) -> Result<()> {
    let cfg = resolve_config(c)?;
    let text = std::fs::read_to_string(grid_path).map_err(|e| Error::io(grid_path, e))?;
    let grid = parse_grid(&text).map_err(|e| e.context("grid"))?;
    echo(&cfg);
    let table = load_table(&cfg)?;
    let result = grid_search(&table, &cfg, &grid, cfg.validation_fraction, cfg.seed)
        .map_err(|e| e.context("gridsearch"))?;
    write_output(cfg.report.as_deref(), &result.to_csv(&cfg.hash()))?;
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("gridsearch: candidate {:?} failed: {}", row.assignments, row.error.as_deref().unwrap_or(""));
    }
    let best = &result.rows[result.best_index];
    let metric = if cfg.task == Task::Classify { "f1" } else { "mse" };
    eprintln!(
        "gridsearch: best {:?} with validation {metric} {:.4}",
        best.assignments,
        best.score.unwrap_or(f64::NAN)
    );
    let best_text = format!("# config_hash={}\n{}", result.best.hash(), result.best.to_text());
    match &cfg.out {
        Some(p) => std::fs::write(p, best_text).map_err(|e| Error::io(p, e))?,
        None => eprint!("{best_text}"),
    }
    Ok(())
}

fn predict(c: &Common, model: &Path) -> Result<()> {
    let (ck, cfg) = load_checkpoint(c, model)?;
    let table = load_table(&cfg)?;
    let windows = ck.windows(&table).map_err(|e| e.context("window"))?;
    let mc = ck.model_config();
    let mut scores = Vec::with_capacity(windows.len());
    let started = Instant::now();
    for w in &windows.windows {
        scores.push(predict_window(&ck.params, &mc, &w.data).map_err(|e| e.context("predict"))?);
    }
    let elapsed = started.elapsed();

    let mut s = format!("# config_hash={}\n# data={}\n", ck.config.hash(), table.provenance);
    match mc.task {
        Task::Classify => s.push_str("window,start,score,label\n"),
        Task::Regress => s.push_str("window,start,prediction\n"),
    }
    for (i, (w, score)) in windows.windows.iter().zip(&scores).enumerate() {
        let _ = match mc.task {
            Task::Classify => writeln!(s, "{i},{},{score:?},{}", w.start, u8::from(*score >= mc.threshold)),
            Task::Regress => writeln!(s, "{i},{},{score:?}", w.start),
        };
    }
    write_output(cfg.out.as_deref(), &s)?;
    let mean_ms = if scores.is_empty() {
        0.0
    } else {
        1e3 * elapsed.as_secs_f64() / scores.len() as f64
    };
    eprintln!("predict: {} windows, mean latency {mean_ms:.4} ms per window", scores.len());
    Ok(())
}

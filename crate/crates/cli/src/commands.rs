use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hofs::criteria::{select_greedy, Criterion};
use hofs::data::{load_csv, DataTable, LoadOptions, LoadReport, PreparedData};
use hofs::eval::{bench, CvProtocol, EvalReport, Folds, Method, TrainConfig};
use hofs::hofs::{Engine, HofsConfig, StepRecord, SubsetPartition};
use hofs::synth::{gen_hetero, gen_tree, HeteroModelSpec, TreeModelSpec};
use serde::Serialize;
use serde_json::Value;

use crate::args::{BenchArgs, Command, DataArgs, DiagnoseArgs, SelectArgs, SynthCommand};
use crate::output::{write_atomic, write_json, CliError, CliResult, CsvOut};

const DEFAULT_T: usize = 10;

/// The effective configuration of a run, echoed into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hofs: Option<HofsConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<CvProtocol>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DataSource {
    pub path: PathBuf,
    #[serde(flatten)]
    pub options: LoadOptions,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum SynthSpec {
    Tree(TreeModelSpec),
    Hetero(HeteroModelSpec),
}

pub struct Globals {
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub config_dump: bool,
}

impl Globals {
    fn config(&self, command: &'static str, seed: u64) -> RunConfig {
        RunConfig {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            out_dir: self.out_dir.clone(),
            threads: self.threads,
            data: None,
            synth: None,
            methods: Vec::new(),
            hofs: None,
            protocol: None,
            train: None,
            partition: None,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub fn run(command: Command, globals: &Globals) -> CliResult<()> {
    match command {
        Command::Select(args) => select(args, globals),
        Command::Bench(args) => run_bench(args, globals),
        Command::Synth(cmd) => synth(cmd, globals),
        Command::Diagnose(args) => diagnose(args, globals),
    }
}

fn load(args: &DataArgs) -> CliResult<(DataSource, DataTable, LoadReport)> {
    let options = args.load_options().map_err(CliError::Config)?;
    let (table, report) = load_csv(&args.data, &options)?;
    log::info!(
        "loaded {} rows ({} dropped, {} cells imputed), {} features, {} classes",
        report.rows_read,
        report.rows_dropped,
        report.cells_imputed,
        table.n_features(),
        report.n_classes
    );
    let source = DataSource {
        path: args.data.clone(),
        options,
    };
    Ok((source, table, report))
}

#[derive(Serialize)]
struct LoadReportOut<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a LoadReport,
}

fn write_load_report(globals: &Globals, config: &RunConfig, report: &LoadReport) -> CliResult<()> {
    write_json(&globals.path("load_report.json"), &LoadReportOut { config, report })
}

fn parse_method(name: &str, beta: Option<f64>) -> CliResult<Method> {
    let method: Method = name.trim().parse()?;
    Ok(match (method, beta) {
        (Method::Baseline(Criterion::Mifs { .. }), Some(beta)) => Method::Baseline(Criterion::Mifs { beta }),
        (m, _) => m,
    })
}

fn dump(config: &RunConfig) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(config).expect("config serializes"));
    Ok(())
}

fn names(table: &DataTable, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&j| table.feature_names()[j].clone()).collect()
}

#[derive(Serialize)]
struct SubsetOut {
    features: Vec<String>,
    indices: Vec<usize>,
}

/// `subsets` is `None` for the baseline criteria, which do not group.
#[derive(Serialize)]
struct PartitionOut<'a> {
    config: &'a RunConfig,
    order: Vec<String>,
    subsets: Option<Vec<SubsetOut>>,
}

#[derive(Serialize)]
struct TraceOut<'a, S: Serialize> {
    config: &'a RunConfig,
    feature_names: &'a [String],
    steps: &'a [S],
}

#[derive(Serialize)]
struct GreedyStep<'a> {
    t: usize,
    chosen: usize,
    score: f64,
    candidate_scores: &'a BTreeMap<usize, f64>,
}

fn partition_out<'a>(config: &'a RunConfig, table: &DataTable, partition: &SubsetPartition) -> PartitionOut<'a> {
    PartitionOut {
        config,
        order: names(table, &partition.order),
        subsets: Some(
            partition
                .feature_sets()
                .into_iter()
                .map(|indices| SubsetOut {
                    features: names(table, &indices),
                    indices,
                })
                .collect(),
        ),
    }
}

fn write_features(path: &Path, config: &RunConfig, table: &DataTable, order: &[usize], scores: &[f64]) -> CliResult<()> {
    let header = ["rank", "index", "feature", "score"].map(String::from);
    let mut csv = CsvOut::new(config, &header);
    for (rank, (&j, s)) in order.iter().zip(scores).enumerate() {
        csv.row(&[
            (rank + 1).to_string(),
            j.to_string(),
            table.feature_names()[j].clone(),
            s.to_string(),
        ]);
    }
    csv.write(path)
}

fn select(args: SelectArgs, globals: &Globals) -> CliResult<()> {
    let method = parse_method(&args.method, args.beta)?;
    let (source, table, load_report) = load(&args.data)?;
    let t = args.t.unwrap_or(DEFAULT_T.min(table.n_features()));
    let hofs_config = args.hofs.config(t);
    let mut config = globals.config("select", args.hofs.seed);
    config.methods = vec![method];
    config.hofs = Some(hofs_config.clone());
    config.data = Some(source);
    if globals.config_dump {
        return dump(&config);
    }
    write_load_report(globals, &config, &load_report)?;
    let data = PreparedData::new(&table, hofs_config.bins, hofs_config.scheme)?;
    match method {
        Method::Hofs => {
            let engine = Engine::new(&data, hofs_config)?;
            let (partition, trace) = engine.run()?;
            let scores: Vec<f64> = trace.steps.iter().map(|s| s.score).collect();
            write_json(&globals.path("partition.json"), &partition_out(&config, &table, &partition))?;
            write_json(
                &globals.path("trace.json"),
                &TraceOut::<StepRecord> {
                    config: &config,
                    feature_names: table.feature_names(),
                    steps: &trace.steps,
                },
            )?;
            write_features(&globals.path("features.csv"), &config, &table, &trace.order(), &scores)?;
        }
        Method::Baseline(criterion) => {
            hofs_config.validate(table.n_features(), table.n_samples())?;
            let result = select_greedy(criterion, &data.view, t)?;
            let steps: Vec<GreedyStep> = result
                .order
                .iter()
                .zip(&result.scores)
                .zip(&result.candidate_scores)
                .enumerate()
                .map(|(t, ((&chosen, &score), candidate_scores))| GreedyStep {
                    t,
                    chosen,
                    score,
                    candidate_scores,
                })
                .collect();
            write_json(
                &globals.path("partition.json"),
                &PartitionOut {
                    config: &config,
                    order: names(&table, &result.order),
                    subsets: None,
                },
            )?;
            write_json(
                &globals.path("trace.json"),
                &TraceOut {
                    config: &config,
                    feature_names: table.feature_names(),
                    steps: &steps,
                },
            )?;
            write_features(&globals.path("features.csv"), &config, &table, &result.order, &result.scores)?;
        }
    }
    Ok(())
}

fn parse_folds(s: &str) -> CliResult<Folds> {
    if s.eq_ignore_ascii_case("loo") {
        return Ok(Folds::LeaveOneOut);
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 2 => Ok(Folds::KFold(k)),
        _ => Err(CliError::Config(format!("folds must be an integer of at least 2 or `loo`, got {s:?}"))),
    }
}

#[derive(Serialize)]
struct ReportOut<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn run_bench(args: BenchArgs, globals: &Globals) -> CliResult<()> {
    let methods = args
        .methods
        .iter()
        .filter(|m| !m.trim().is_empty())
        .map(|m| parse_method(m, args.beta))
        .collect::<CliResult<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(CliError::Config("no methods to benchmark".into()));
    }
    let (source, table, load_report) = load(&args.data)?;
    let mut protocol = CvProtocol::for_dataset(table.n_samples(), table.n_features(), args.hofs.seed);
    if let Some(f) = &args.folds {
        protocol.folds = parse_folds(f)?;
    }
    if let Some(k) = &args.feature_counts {
        protocol.feature_counts = k.clone();
    }
    let t = protocol.feature_counts.iter().copied().max().unwrap_or(0);
    let train = TrainConfig {
        lambda: args.lambda,
        epochs: args.train_epochs,
        learning_rate: args.train_learning_rate,
    };
    let hofs_config = args.hofs.config(t);
    let mut config = globals.config("bench", args.hofs.seed);
    config.data = Some(source);
    config.methods = methods.clone();
    config.hofs = Some(hofs_config.clone());
    config.protocol = Some(protocol.clone());
    config.train = Some(train.clone());
    if globals.config_dump {
        return dump(&config);
    }
    write_load_report(globals, &config, &load_report)?;
    let data = PreparedData::new(&table, hofs_config.bins, hofs_config.scheme)?;
    let engine = Engine::new(&data, hofs_config)?;
    let report = bench(&table, &engine, &methods, &protocol, &train)?;
    write_json(
        &globals.path("report.json"),
        &ReportOut {
            config: &config,
            report: &report,
        },
    )?;

    let mut header: Vec<String> = ["method", "average_error", "arae"].map(String::from).to_vec();
    for k in &protocol.feature_counts {
        header.extend([
            format!("error_k{k}"),
            format!("rae_k{k}"),
            format!("global_mi_plugin_k{k}"),
            format!("global_mi_ica_k{k}"),
        ]);
    }
    let mut csv = CsvOut::new(&config, &header);
    for m in &report.methods {
        let mut row = vec![m.method.clone(), m.average_error.to_string(), m.arae.to_string()];
        for r in &m.per_k {
            row.extend([
                r.error_rate.to_string(),
                r.rae.to_string(),
                r.global_mi_plugin.map(|v| v.to_string()).unwrap_or_default(),
                r.global_mi_ica.to_string(),
            ]);
        }
        csv.row(&row);
    }
    csv.write(&globals.path("report.csv"))?;

    let header = ["method", "k", "error_rate", "rae", "global_mi_plugin", "global_mi_ica"].map(String::from);
    let mut csv = CsvOut::new(&config, &header);
    for m in &report.methods {
        for r in &m.per_k {
            csv.row(&[
                m.method.clone(),
                r.k.to_string(),
                r.error_rate.to_string(),
                r.rae.to_string(),
                r.global_mi_plugin.map(|v| v.to_string()).unwrap_or_default(),
                r.global_mi_ica.to_string(),
            ]);
        }
    }
    csv.write(&globals.path("report_by_k.csv"))
}

fn synth(cmd: SynthCommand, globals: &Globals) -> CliResult<()> {
    let (spec, seed, out, default_name) = match cmd {
        SynthCommand::Tree(a) => {
            let spec = TreeModelSpec {
                n_samples: a.samples,
                seed: a.seed,
                ..TreeModelSpec::default()
            };
            (SynthSpec::Tree(spec), a.seed, a.out, "tree.csv")
        }
        SynthCommand::Hetero(a) => {
            let spec = HeteroModelSpec {
                seed: a.seed,
                ..HeteroModelSpec::default()
            };
            (SynthSpec::Hetero(spec), a.seed, a.out, "hetero.csv")
        }
    };
    let mut config = globals.config("synth", seed);
    config.synth = Some(spec.clone());
    if globals.config_dump {
        return dump(&config);
    }
    let table = match &spec {
        SynthSpec::Tree(s) => gen_tree(s)?,
        SynthSpec::Hetero(s) => gen_hetero(s)?,
    };
    let path = out.unwrap_or_else(|| globals.path(default_name));
    let mut bytes = Vec::new();
    table.write_csv(&mut bytes, b',')?;
    write_atomic(&path, &bytes)?;
    write_json(&path.with_extension("json"), &config)
}

#[derive(Serialize)]
struct SubsetDiagnostics {
    features: Vec<String>,
    /// Signals actually modelled; constant features are left out.
    modelled_signals: usize,
    avg_abs_pearson: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
    r_balance: Option<f64>,
}

#[derive(Serialize)]
struct DiagnosticsOut<'a> {
    config: &'a RunConfig,
    subsets: Vec<SubsetDiagnostics>,
    overall_avg_abs_pearson: f64,
    mean_r_balance: Option<f64>,
}

/// Reads subsets and order, by feature name, from a `partition.json`.
fn read_partition(path: &Path, table: &DataTable) -> CliResult<(Vec<Vec<usize>>, Vec<usize>)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |what: &str| CliError::Data(format!("{}: {what}", path.display()));
    let value: Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
    let lookup = |v: &Value| -> CliResult<usize> {
        let name = v.as_str().ok_or_else(|| bad("feature names must be strings"))?;
        table
            .feature_index(name)
            .ok_or_else(|| bad(&format!("unknown feature {name:?}")))
    };
    let sets = value["subsets"]
        .as_array()
        .ok_or_else(|| bad("missing `subsets`"))?
        .iter()
        .map(|s| {
            s["features"]
                .as_array()
                .ok_or_else(|| bad("subset without `features`"))?
                .iter()
                .map(lookup)
                .collect()
        })
        .collect::<CliResult<Vec<Vec<usize>>>>()?;
    let order = match value["order"].as_array() {
        Some(o) => o.iter().map(lookup).collect::<CliResult<Vec<_>>>()?,
        None => sets.concat(),
    };
    Ok((sets, order))
}

fn diagnose(args: DiagnoseArgs, globals: &Globals) -> CliResult<()> {
    let (source, table, load_report) = load(&args.data)?;
    let t = match &args.partition {
        Some(_) => 1,
        None => args.t.unwrap_or(DEFAULT_T.min(table.n_features())),
    };
    let hofs_config = args.hofs.config(t);
    let mut config = globals.config("diagnose", args.hofs.seed);
    config.data = Some(source);
    config.hofs = Some(hofs_config.clone());
    config.partition = args.partition.clone();
    if globals.config_dump {
        return dump(&config);
    }
    write_load_report(globals, &config, &load_report)?;
    let data = PreparedData::new(&table, hofs_config.bins, hofs_config.scheme)?;
    let engine = Engine::new(&data, hofs_config)?;
    let partition = match &args.partition {
        Some(path) => {
            let (sets, order) = read_partition(path, &table)?;
            engine.rebuild(&sets, &order)?
        }
        None => engine.run()?.0,
    };
    let pearson = engine.pearson_diagnostics(&partition);
    let balance = engine.r_balance(&partition)?;
    let subsets = partition
        .subsets
        .iter()
        .zip(&pearson.per_subset)
        .zip(&balance.per_subset)
        .map(|((s, &p), &r)| SubsetDiagnostics {
            features: names(&table, &s.features),
            modelled_signals: s.model.dim(),
            avg_abs_pearson: p,
            note: (s.model.dim() < 2).then_some("fewer than two signals; correlation reported as 0"),
            r_balance: r,
        })
        .collect();
    write_json(
        &globals.path("diagnostics.json"),
        &DiagnosticsOut {
            config: &config,
            subsets,
            overall_avg_abs_pearson: pearson.overall,
            mean_r_balance: balance.mean,
        },
    )
}

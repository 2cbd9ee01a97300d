use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use perturbench::baseline::{corrupt_training_set, evaluate_suite, train, SoftmaxModel, TrainConfig};
use perturbench::mcvplot::{points_from_summaries, render_mcv, PlotStyle};
use perturbench::protocol::{protocol_summaries, ProtocolConfig};
use perturbench::raster::{load_cifar10_batch, synth_dataset, Sampling, SynthSpec};
use perturbench::report::{
    aggregate, correlation_table, ingest_predictions, load_summary_table, write_predictions, write_summary_table,
    summarize, ClassifierRun, ReportDocument, TrainingCategory,
};
use perturbench::stats::ReferencePoint;
use perturbench::suite::{
    check_disjoint, enumerate_groups, find_group, generate_suite, load_manifest, verify_suite, GroupSpec, SourceInfo,
    SuiteParams, MANIFEST_FILE,
};
use perturbench::{Error, LabeledDataset, RobustnessSummary, SeedSpec, FORMAT_VERSION};
use serde::Serialize;

use crate::args::*;
use crate::{usage, Failure};

type CmdResult = Result<(), Failure>;

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Verify(a) => verify(a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Ingest(a) => ingest(cli, a),
        Command::Analyze(a) => analyze(cli, a),
        Command::Plot(a) => plot(cli, a),
        Command::Protocol(a) => protocol(cli, a),
    }
}

fn config_of(cli: &Cli) -> serde_json::Value {
    serde_json::to_value(cli).unwrap_or_default()
}

fn required_out<'a>(cli: &'a Cli, what: &str) -> Result<&'a Path, Failure> {
    cli.out
        .as_deref()
        .ok_or_else(|| usage(format!("--out is required ({what})")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn sampling(src: &SourceArgs) -> Sampling {
    match src.sampling {
        SamplingArg::Sequential => Sampling::Sequential { skip: src.skip },
        SamplingArg::Shuffled => Sampling::Shuffled { skip: src.skip },
    }
}

/// The dataset and its identifier for manifests and disjointness checks.
fn load_source(src: &SourceArgs, seed: u64, needed: usize) -> Result<(LabeledDataset, String), Failure> {
    if src.synthetic {
        let pool = src.pool.unwrap_or(src.skip + needed);
        let ds = synth_dataset(&SynthSpec::default(), pool, &SeedSpec::new(seed))?;
        return Ok((ds, format!("synthetic:seed={seed}")));
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut class_names = Vec::new();
    for path in &src.cifar {
        let part = load_cifar10_batch(path)?;
        images.extend_from_slice(part.images());
        labels.extend_from_slice(part.labels());
        class_names = part.class_names().to_vec();
    }
    let id = src
        .cifar
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",");
    Ok((LabeledDataset::new(images, labels, class_names)?, format!("cifar10:{id}")))
}

fn generate(cli: &Cli, a: &GenerateArgs) -> CmdResult {
    let out = required_out(cli, "suite directory")?;
    let n = a.n as usize;
    let (ds, dataset_id) = load_source(&a.source, cli.seed, n)?;
    let params = SuiteParams {
        master_seed: cli.seed,
        images_per_group: n,
        sampling: sampling(&a.source),
        dataset_id,
        parallel: !a.serial,
    };
    let mut manifest = generate_suite(&ds, &params, out)?;
    manifest.config = config_of(cli);
    let path = out.join(MANIFEST_FILE);
    manifest.save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn verify(a: &VerifyArgs) -> CmdResult {
    let manifest = load_manifest(a.suite.join(MANIFEST_FILE))?;
    let report = verify_suite(&manifest, &a.suite)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    if report.is_clean() {
        Ok(())
    } else {
        let names: Vec<String> = report
            .mismatches
            .iter()
            .map(|m| format!("{} ({}, {})", m.group_id, m.name, m.payload))
            .collect();
        Err(Error::Structure(format!("digest mismatch in group {}", names.join(", "))).into())
    }
}

fn group_by_name(name: &str) -> Result<GroupSpec, Failure> {
    find_group(name).ok_or_else(|| usage(format!("{name:?} is not one of the 69 group names")))
}

#[derive(Serialize)]
struct ModelSidecar<'a> {
    spec_version: &'a str,
    config: serde_json::Value,
    training_group: &'a str,
    source: &'a SourceInfo,
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> CmdResult {
    let out = required_out(cli, "model file")?;
    let group = group_by_name(&a.group)?;
    let n = a.n as usize;
    let (ds, dataset_id) = load_source(&a.source, cli.seed, n)?;
    let seed = SeedSpec::new(cli.seed);
    let rule = sampling(&a.source);
    let indices = ds.sample_indices(rule, n, &seed)?;
    let source = SourceInfo {
        dataset: dataset_id,
        dataset_len: ds.len(),
        images_per_group: n,
        sampling: rule,
        indices,
    };
    if let Some(suite) = &a.suite {
        let manifest = load_manifest(suite.join(MANIFEST_FILE))?;
        check_disjoint(&manifest.source, &source)?;
    }
    let training = corrupt_training_set(&ds.select(&source.indices)?, &group, &seed)?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        l2: a.l2,
        batch_size: a.batch_size,
        seed: cli.seed,
    };
    let model = train(&training, &cfg)?;
    write_file(out, &model.to_bytes())?;

    let sidecar = ModelSidecar {
        spec_version: FORMAT_VERSION,
        config: config_of(cli),
        training_group: &group.name,
        source: &source,
    };
    let mut json = serde_json::to_string_pretty(&sidecar).map_err(Error::from)?;
    json.push('\n');
    let mut sidecar_path = out.as_os_str().to_owned();
    sidecar_path.push(".json");
    write_file(&PathBuf::from(sidecar_path), json.as_bytes())?;
    println!("{}", out.display());
    Ok(())
}

/// Reads summaries from a report JSON, or a flat table when the file ends in `.csv`.
fn load_summaries(path: &Path) -> Result<Vec<RobustnessSummary>, Error> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        load_summary_table(path)
    } else {
        Ok(ReportDocument::load(path)?.summaries)
    }
}

fn load_all(inputs: &[PathBuf]) -> Result<Vec<RobustnessSummary>, Error> {
    let mut all = Vec::new();
    for p in inputs {
        all.extend(load_summaries(p)?);
    }
    Ok(all)
}

/// Usage checks on the run label that need no data.
fn check_run_label(a: &RunLabelArgs) -> Result<(), Failure> {
    let category = TrainingCategory::of_group_name(&a.training_group)
        .map_err(|_| usage(format!("--training-group {:?} is not a group name", a.training_group)))?;
    if category != TrainingCategory::Clean && a.reference.is_none() {
        return Err(usage("--reference is required for a run not trained on clean images"));
    }
    Ok(())
}

fn reference_for(run: &ClassifierRun, a: &RunLabelArgs) -> Result<ReferencePoint, Failure> {
    match &a.reference {
        Some(path) => {
            let rows = load_summaries(path)?;
            let clean = rows
                .iter()
                .find(|s| {
                    s.classifier_name == run.classifier_name
                        && s.training_category().ok() == Some(TrainingCategory::Clean)
                })
                .ok_or_else(|| {
                    Error::Structure(format!(
                        "{} has no clean-trained {} run",
                        path.display(),
                        run.classifier_name
                    ))
                })?;
            Ok(clean.reference_point()?)
        }
        None => Ok(run.reference_point()?),
    }
}

fn summarize_run(run: &ClassifierRun, a: &RunLabelArgs) -> Result<RobustnessSummary, Failure> {
    let reference = reference_for(run, a)?;
    Ok(summarize(run, &reference)?)
}

fn encode_summaries(cli: &Cli, doc: &ReportDocument) -> Result<Vec<u8>, Error> {
    match cli.format {
        Format::Json => Ok(doc.to_json()?.into_bytes()),
        Format::Csv => {
            let mut buf = Vec::new();
            write_summary_table(&mut buf, &doc.summaries)?;
            Ok(buf)
        }
    }
}

fn summary_file_name(cli: &Cli) -> &'static str {
    match cli.format {
        Format::Json => "summary.json",
        Format::Csv => "summary.csv",
    }
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> CmdResult {
    let out = required_out(cli, "output directory")?;
    check_run_label(&a.run)?;
    let model = SoftmaxModel::load(&a.model)?;
    let manifest = load_manifest(a.suite.join(MANIFEST_FILE))?;
    let records = evaluate_suite(&model, &manifest, &a.suite)?;

    let mut csv = Vec::new();
    write_predictions(&mut csv, &records)?;
    write_file(&out.join("predictions.csv"), &csv)?;

    let groups: Vec<GroupSpec> = manifest.groups.iter().map(|g| g.spec.clone()).collect();
    let run = ClassifierRun::from_records(a.run.classifier.clone(), a.run.training_group.clone(), &records, &groups)?;
    let mut doc = ReportDocument::new(vec![summarize_run(&run, &a.run)?]);
    doc.config = config_of(cli);
    let path = out.join(summary_file_name(cli));
    write_file(&path, &encode_summaries(cli, &doc)?)?;
    println!("{}", path.display());
    Ok(())
}

fn ingest(cli: &Cli, a: &IngestArgs) -> CmdResult {
    check_run_label(&a.run)?;
    let records = ingest_predictions(&a.predictions)?;
    let run = ClassifierRun::from_records(
        a.run.classifier.clone(),
        a.run.training_group.clone(),
        &records,
        &enumerate_groups(),
    )?;
    let mut doc = ReportDocument::new(vec![summarize_run(&run, &a.run)?]);
    doc.config = config_of(cli);
    emit(cli.out.as_deref(), &encode_summaries(cli, &doc)?)?;
    Ok(())
}

/// Adds the aggregate and, where defined, the correlation table.
fn analysed(cli: &Cli, summaries: Vec<RobustnessSummary>) -> Result<ReportDocument, Error> {
    let agg = aggregate(&summaries)?;
    // undefined for fewer than two rows or a constant column
    let correlations = correlation_table(&summaries).ok();
    let mut doc = ReportDocument::new(summaries);
    doc.aggregate = Some(agg);
    doc.correlations = correlations;
    doc.config = config_of(cli);
    Ok(doc)
}

fn csv_table(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| io_error(Path::new("<analysis>"), e))?;
    }
    Ok(buf)
}

/// Category, metric and correlation tables, separated by blank lines.
fn analysis_tables(doc: &ReportDocument) -> Result<Vec<u8>, Error> {
    let mut sections = Vec::new();
    if let Some(agg) = &doc.aggregate {
        let rows = agg
            .categories
            .iter()
            .map(|(c, s)| {
                vec![
                    c.to_string(),
                    s.runs.to_string(),
                    s.mean_cv.to_string(),
                    s.mean_mean_accu.to_string(),
                    s.mean_min_accu.to_string(),
                    s.mean_max_accu.to_string(),
                ]
            })
            .collect();
        sections.push(csv_table(
            &["category", "runs", "mean_cv", "mean_mean_accu", "mean_min_accu", "mean_max_accu"],
            rows,
        )?);
        let metrics = [
            ("relative_cv_reduction", agg.relative_cv_reduction),
            ("relative_min_accu_change", agg.relative_min_accu_change),
        ]
        .into_iter()
        .map(|(name, v)| vec![name.to_string(), v.map(|v| v.to_string()).unwrap_or_default()])
        .collect();
        sections.push(csv_table(&["metric", "value"], metrics)?);
    }
    if let Some(rows) = &doc.correlations {
        let rows = rows
            .iter()
            .map(|r| vec![r.pair.clone(), r.spearman.to_string(), r.pearson.to_string()])
            .collect();
        sections.push(csv_table(&["pair", "spearman", "pearson"], rows)?);
    }
    Ok(sections.join(&b'\n'))
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> CmdResult {
    let doc = analysed(cli, load_all(&a.inputs)?)?;
    let bytes = match cli.format {
        Format::Json => doc.to_json()?.into_bytes(),
        Format::Csv => analysis_tables(&doc)?,
    };
    emit(cli.out.as_deref(), &bytes)?;
    Ok(())
}

fn plot(cli: &Cli, a: &PlotArgs) -> CmdResult {
    let out = required_out(cli, "SVG file")?;
    let mut rows = load_all(&a.inputs)?;
    if let Some(c) = &a.classifier {
        rows.retain(|s| &s.classifier_name == c);
    }
    if !rows.iter().any(|s| s.label() == a.reference) {
        return Err(usage(format!("reference {:?} is not among the plotted runs", a.reference)));
    }
    let points = points_from_summaries(&rows, &a.reference)?;
    let style = PlotStyle {
        width: a.width,
        height: a.height,
        x_range: a.x_range,
        y_range: a.y_range,
        show_whiskers: !a.no_whiskers,
        show_clean_ring: !a.no_clean_ring,
        marker_radius: a.marker_radius,
        font_size: a.font_size,
        title: a.title.clone(),
        ..PlotStyle::default()
    };
    let svg = render_mcv(&points, &style)?;
    write_file(out, svg.as_bytes())?;
    println!("{}", out.display());
    Ok(())
}

fn protocol(cli: &Cli, a: &ProtocolArgs) -> CmdResult {
    let mut cfg = ProtocolConfig::new(cli.seed);
    cfg.test_images = a.test_images as usize;
    cfg.train_images = a.train_images as usize;
    cfg.train.epochs = a.epochs;
    let doc = analysed(cli, protocol_summaries(&cfg)?)?;
    let bytes = match cli.format {
        Format::Json => doc.to_json()?.into_bytes(),
        Format::Csv => encode_summaries(cli, &doc)?,
    };
    emit(cli.out.as_deref(), &bytes)?;
    Ok(())
}

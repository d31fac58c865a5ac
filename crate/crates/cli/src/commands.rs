use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use varsieve::dataset::{discretize_objective, to_arff_string, to_csv_string, DiscretizationSpec, RunTable};
use varsieve::evaluation::{
    compare_learners, evaluate as evaluate_spec, evaluate_training, EvaluationResult, Protocol,
};
use varsieve::pipeline::{apply_override, load_table, run_pipeline, PipelineConfig};
use varsieve::screening::{
    build_report, rank_variables, reduce_dataset, select_variables, ImportanceRanking, ObjectiveReport, Selection,
};
use varsieve::synthbench::{generate, Family, PlantedSpec, Truth};
use varsieve::trees::{LearnerKind, LearnerSpec, TreeModel};

use crate::{InputArgs, LearnerArgs, PipelineArgs};

type Table = RunTable<f64>;

fn load(input: &InputArgs) -> Result<Table> {
    load_table(&input.input, &input.objectives).with_context(|| format!("loading {}", input.input.display()))
}

fn single_objective(input: &InputArgs) -> Result<&str> {
    match input.objectives.as_slice() {
        [one] => Ok(one),
        _ => bail!("this command takes exactly one objective"),
    }
}

fn learner_spec(args: &LearnerArgs) -> Result<LearnerSpec<f64>> {
    let spec = match &args.learner_json {
        Some(text) => serde_json::from_str(text).context("parsing --learner-json")?,
        None => {
            let kind: LearnerKind = args.learner.parse()?;
            let base = LearnerSpec::default_for(kind);
            match args.iterations {
                Some(n) => base.with_capacity(n),
                None => base,
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<V: serde::Serialize>(path: &Path, value: &V) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let text = match ext.as_str() {
        "arff" => to_arff_string(table),
        "json" => serde_json::to_string_pretty(table)? + "\n",
        _ => to_csv_string(table)?,
    };
    write_text(path, &text)
}

pub fn ingest(input: &InputArgs, out: Option<&Path>) -> Result<()> {
    let table = load(input)?;
    println!("relation:  {}", table.relation());
    println!("runs:      {}", table.n_runs());
    println!("variables: {}", table.variables().len());
    for o in table.objectives() {
        match o.class_labels() {
            Some(labels) => {
                let names: Vec<&str> = labels.iter().map(|l| l.name.as_str()).collect();
                println!("objective: {} (categorical: {})", o.name, names.join(","));
            }
            None => println!("objective: {} (continuous)", o.name),
        }
    }
    if let Some(path) = out {
        write_table(path, &table)?;
    }
    Ok(())
}

pub fn discretize(
    input: &InputArgs,
    method: &str,
    k: usize,
    thresholds: Vec<f64>,
    labels: Vec<String>,
    out: &Path,
) -> Result<()> {
    let labels = (!labels.is_empty()).then_some(labels);
    let spec = match method {
        "equal-width" => DiscretizationSpec::EqualWidth { k, labels },
        "equal-frequency" => DiscretizationSpec::EqualFrequency { k, labels },
        "explicit-thresholds" | "thresholds" => DiscretizationSpec::ExplicitThresholds { thresholds, labels },
        other => bail!("unknown discretization method '{other}'"),
    };
    let mut table = load(input)?;
    for name in &input.objectives {
        table = discretize_objective(&table, name, &spec)?;
        let rec = table.discretization(name).expect("just discretized");
        let cuts: Vec<String> = rec.thresholds.iter().map(|t| t.to_string()).collect();
        println!(
            "{name}: {} cuts [{}] -> {}",
            rec.method,
            cuts.join(", "),
            rec.labels.join(",")
        );
        if !rec.empty_classes.is_empty() {
            println!("{name}: empty classes {}", rec.empty_classes.join(","));
        }
    }
    write_table(out, &table)
}

pub fn train(input: &InputArgs, learner: &LearnerArgs, out: &Path) -> Result<()> {
    let table = load(input)?;
    let objective = single_objective(input)?;
    let model = learner_spec(learner)?.train(&table, objective)?;
    println!(
        "{} on {objective}: {} splits, depth {}",
        model.kind,
        model.n_splits(),
        model.depth()
    );
    model.save(out)?;
    Ok(())
}

fn print_result(label: &str, r: &EvaluationResult<f64>) {
    println!(
        "{label}: protocol={} mae={:.4} rmse={:.4} accuracy={:.3}",
        r.protocol,
        r.mae,
        r.rmse,
        r.accuracy()
    );
}

pub fn evaluate(
    input: &InputArgs,
    learner: &LearnerArgs,
    model: Option<&Path>,
    compare: &[String],
    protocol: &str,
    out: Option<&Path>,
) -> Result<()> {
    let table = load(input)?;
    let objective = single_objective(input)?;
    let protocol: Protocol = protocol.parse()?;
    if let Some(path) = model {
        let model = TreeModel::<f64>::load(path)?;
        let r = evaluate_training(&model, &table, objective)?;
        print_result(model.kind.name(), &r);
        return out.map_or(Ok(()), |p| write_json(p, &r));
    }
    if !compare.is_empty() {
        let specs = compare
            .iter()
            .map(|k| Ok(LearnerSpec::default_for(k.parse()?)))
            .collect::<Result<Vec<_>>>()?;
        let ranked = compare_learners(&table, objective, &specs, protocol)?;
        for e in &ranked {
            match (&e.result, &e.error) {
                (Some(r), _) => print_result(
                    &format!("#{} {}{}", e.rank, e.kind, if e.winner { " (winner)" } else { "" }),
                    r,
                ),
                (None, err) => println!(
                    "#{} {}: failed: {}",
                    e.rank,
                    e.kind,
                    err.as_deref().unwrap_or("unknown")
                ),
            }
        }
        return out.map_or(Ok(()), |p| write_json(p, &ranked));
    }
    let spec = learner_spec(learner)?;
    let r = evaluate_spec(&spec, &table, objective, protocol)?;
    print_result(spec.kind().name(), &r);
    out.map_or(Ok(()), |p| write_json(p, &r))
}

fn print_ranking(r: &ImportanceRanking<f64>) {
    println!("{} ranking for {}:", r.learner, r.objective);
    for (i, e) in r.entries.iter().enumerate() {
        println!(
            "{:>3}. {:<12} score={:.4} first_use={}",
            i + 1,
            e.variable,
            e.score,
            e.first_use
        );
    }
}

pub fn rank(model: &Path, out: Option<&Path>) -> Result<()> {
    let model = TreeModel::<f64>::load(model)?;
    let r = rank_variables(&model);
    print_ranking(&r);
    out.map_or(Ok(()), |p| write_json(p, &r))
}

#[allow(clippy::too_many_arguments)]
pub fn select(
    input: &InputArgs,
    learner: &LearnerArgs,
    mae: f64,
    rmse: f64,
    max_rounds: usize,
    protocol: &str,
    out: Option<&Path>,
) -> Result<()> {
    let table = load(input)?;
    let spec = learner_spec(learner)?;
    let protocol: Protocol = protocol.parse()?;
    for objective in &input.objectives {
        let s = select_variables(&table, objective, &spec, mae, rmse, max_rounds, protocol)?;
        println!(
            "{objective}: round {} mae={:.4} rmse={:.4}{} -> {}",
            s.rounds,
            s.mae,
            s.rmse,
            if s.threshold_met { "" } else { " (thresholds not met)" },
            s.ranking.variables().join(",")
        );
        if let Some(dir) = out {
            write_json(&dir.join(format!("{objective}.selection.json")), &s)?;
        }
    }
    Ok(())
}

/// A ranking file may hold a bare ranking or a whole selection.
fn read_ranking(path: &Path) -> Result<ImportanceRanking<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let ranking = match value.get("ranking") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(ranking).with_context(|| format!("{} is not a ranking", path.display()))
}

pub fn reduce(input: &InputArgs, rankings: &[PathBuf], out: &Path) -> Result<()> {
    let table = load(input)?;
    let rankings = rankings.iter().map(|p| read_ranking(p)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = rankings.iter().collect();
    let reduced = reduce_dataset(&table, &refs)?;
    println!(
        "kept {} of {} variables: {}",
        reduced.variables().len(),
        table.variables().len(),
        reduced.variable_names().join(",")
    );
    write_table(out, &reduced)
}

pub fn report(input: &InputArgs, selections: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let table = load(input)?;
    let objectives = selections
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let s: Selection<f64> = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok(ObjectiveReport::from(&s))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = build_report(&table, objectives, Duration::ZERO)?;
    print!("{}", report.to_text());
    out.map_or(Ok(()), |p| write_json(p, &report))
}

#[allow(clippy::too_many_arguments)]
pub fn synth(
    n_vars: usize,
    effective: Vec<usize>,
    family: &str,
    noise: f64,
    k: usize,
    seed: u64,
    runs: usize,
    out: &Path,
) -> Result<()> {
    let seed = match std::env::var("VARSIEVE_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .with_context(|| format!("VARSIEVE_SEED={s} is not an unsigned integer"))?,
        Err(_) => seed,
    };
    let family: Family = family.parse()?;
    let spec = PlantedSpec {
        n_vars,
        effective,
        family,
        noise_rate: noise,
        k,
        seed,
    };
    let planted = generate::<f64>(&spec, runs)?;
    write_table(out, &planted.table)?;
    let truth = Truth {
        n_runs: runs,
        objective: "O1".into(),
        effective_variables: planted.truth.clone(),
        flipped_runs: planted.flipped.clone(),
        spec,
    };
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("synth");
    let truth_path = out.with_file_name(format!("{stem}.truth.json"));
    write_json(&truth_path, &truth)?;
    println!(
        "wrote {} ({} runs x {} variables), truth {} in {}",
        out.display(),
        runs,
        n_vars,
        planted.truth.join(","),
        truth_path.display()
    );
    Ok(())
}

fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig<f64>> {
    let mut value = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => json!({}),
    };
    if !value.is_object() {
        bail!("config must be a JSON object");
    }
    fn set(value: &mut Value, key: &str, v: Value) {
        value.as_object_mut().expect("object").insert(key.to_string(), v);
    }
    if let Some(p) = &args.input {
        set(&mut value, "input", json!(p));
    }
    if !args.objectives.is_empty() {
        set(&mut value, "objectives", json!(args.objectives));
    }
    if let Some(m) = args.mae {
        set(&mut value, "mae", json!(m));
    }
    if let Some(r) = args.rmse {
        set(&mut value, "rmse", json!(r));
    }
    if let Some(r) = args.max_rounds {
        set(&mut value, "max_rounds", json!(r));
    }
    if let Some(p) = &args.protocol {
        set(&mut value, "protocol", json!(p.parse::<Protocol>()?));
    }
    if let Some(o) = &args.out {
        set(&mut value, "out", json!(o));
    }
    if args.canonical {
        set(&mut value, "canonical", json!(true));
    }
    if args.learner.is_some() || args.iterations.is_some() {
        let base: LearnerSpec<f64> = match &args.learner {
            Some(kind) => LearnerSpec::default_for(kind.parse()?),
            None => serde_json::from_value(value.get("learner").cloned().unwrap_or(json!({"kind": "ladtree"})))
                .context("config learner")?,
        };
        let spec = match args.iterations {
            Some(n) => base.with_capacity(n),
            None => base,
        };
        set(&mut value, "learner", serde_json::to_value(spec)?);
    }
    for item in &args.overrides {
        let (key, raw) = item
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got '{item}'"))?;
        apply_override(&mut value, key.trim(), raw.trim())?;
    }
    Ok(PipelineConfig::from_json(value)?)
}

pub fn pipeline(args: &PipelineArgs) -> ExitCode {
    let config = match pipeline_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", json!({"stage": "validate", "error": format!("{e:#}")}));
            return ExitCode::from(2);
        }
    };
    match run_pipeline(&config) {
        Ok(outcome) => {
            print!("{}", outcome.report.to_text());
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({"stage": e.stage, "error": e.source.to_string()}));
            ExitCode::from(2)
        }
    }
}

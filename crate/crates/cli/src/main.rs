//! `bunched`: decide, normalize, measure, check, explore and transform
//! sequents and proofs of the logic of Bunched Implications.
//!
//! Exit codes: 0 success (provable, valid), 1 negative answer (unprovable,
//! rejected proof), 2 resource abort, 3 input error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bunched::calculus::{from_json_str, to_json, Derivation};
use bunched::measures::{bunch_measures, sequent_measures, SearchBounds};
use bunched::search::{default_bounds, generate_space, normal_sequent, rule_histogram, SearchError};
use bunched::syntax::{parse_bunch, parse_sequent};
use bunched::transform::{
    eliminate_rad, eliminate_unit_contractions, labelled_to_json, lbi_to_slbi, normalize_end, regiment, well_label,
};
use bunched::{check_derivation, decide, is_regimented, normalize, SearchOptions, System, Verdict};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bunched", version, about = "Proof search and proof tooling for Bunched Implications")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Decide provability of a sequent.
    Decide {
        #[command(flatten)]
        input: Input,
        /// System of the emitted proof.
        #[arg(long, value_enum, default_value_t = SystemArg::Dlbi)]
        system: SystemArg,
        /// Search bounds a,m,d (multiplicity, width, depth).
        #[arg(long, value_parser = parse_bounds)]
        bounds: Option<SearchBounds>,
        /// Write the proof, if any, as interchange JSON.
        #[arg(long, value_name = "FILE")]
        emit_proof: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Report space size, nodes expanded and the largest measures seen.
        #[arg(long)]
        stats: bool,
        /// Abort once this many nodes have been discovered.
        #[arg(long, value_name = "N", default_value_t = SearchOptions::default().max_nodes)]
        max_nodes: usize,
        /// Worker threads (default: one per core).
        #[arg(long, value_name = "N")]
        threads: Option<usize>,
    },
    /// Normalize a bunch and log the reduction steps.
    Normalize {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        json: bool,
    },
    /// Multiplicity, width and depth of a bunch or sequent.
    Measure {
        #[command(flatten)]
        input: Input,
    },
    /// Check a proof in interchange JSON.
    Check {
        /// Proof file.
        proof: PathBuf,
        #[arg(long, value_enum, default_value_t = SystemArg::Lbi)]
        system: SystemArg,
        /// Also require the proof to be regimented.
        #[arg(long)]
        regimented: bool,
        #[arg(long)]
        json: bool,
    },
    /// The bounded sequent space of a sequent.
    Space {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_bounds)]
        bounds: Option<SearchBounds>,
        /// Print the number of sequents (the default).
        #[arg(long, conflicts_with = "list")]
        count: bool,
        /// Print every sequent, one per line.
        #[arg(long)]
        list: bool,
        /// Give up beyond this many sequents.
        #[arg(long, value_name = "N", default_value_t = 100_000)]
        limit: usize,
    },
    /// Transform an LBI proof in interchange JSON.
    Transform {
        /// Proof file.
        proof: PathBuf,
        #[arg(long, value_enum)]
        to: Stage,
        /// Output file (default: standard output).
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Attach well-labelling labels to the result.
        #[arg(long)]
        labels: bool,
    },
}

/// Exactly one input source: inline text or a file.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// The input text.
    text: Option<String>,
    /// Read the input from a file.
    #[arg(short, long, value_name = "FILE")]
    file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Lbi,
    Slbi,
    Dlbi,
    DlbiRad,
}

impl From<SystemArg> for System {
    fn from(s: SystemArg) -> System {
        match s {
            SystemArg::Lbi => System::Lbi,
            SystemArg::Slbi => System::Slbi,
            SystemArg::Dlbi => System::Dlbi,
            SystemArg::DlbiRad => System::DlbiRad,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Slbi,
    Regimented,
    DlbiRad,
    Dlbi,
}

enum Failure {
    Negative,
    Resource(String),
    Input(String),
}

type Outcome = Result<(), Failure>;

fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn parse_bounds(text: &str) -> Result<SearchBounds, String> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, m, d] => Ok(SearchBounds::new(a, m, d)),
        _ => Err("expected three numbers a,m,d".into()),
    }
}

impl Input {
    fn read(&self) -> Result<String, Failure> {
        match (&self.text, &self.file) {
            (Some(t), _) => Ok(t.clone()),
            (None, Some(f)) => fs::read_to_string(f)
                .map(|s| s.trim().to_string())
                .map_err(|e| input_error(format!("{}: {e}", f.display()))),
            (None, None) => Err(input_error("no input")),
        }
    }
}

fn read_proof(path: &PathBuf) -> Result<Derivation, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    from_json_str(&text).map_err(input_error)
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| input_error(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

#[allow(clippy::too_many_arguments)]
fn run_decide(
    input: &Input,
    system: SystemArg,
    bounds: Option<SearchBounds>,
    emit_proof: Option<&PathBuf>,
    json: bool,
    stats: bool,
    max_nodes: usize,
    threads: Option<usize>,
) -> Outcome {
    let system = System::from(system);
    if !matches!(system, System::Dlbi | System::DlbiRad) {
        return Err(input_error("decide emits dLBI proofs; use --system dlbi or dlbi-rad"));
    }
    let s = parse_sequent(&input.read()?).map_err(input_error)?;
    let opts = SearchOptions { bounds, max_nodes, threads };
    let out = decide(&s, &opts).map_err(|e| match e {
        SearchError::ResourceLimit { .. } => Failure::Resource(e.to_string()),
        SearchError::Threads(_) => input_error(e),
    })?;
    let provable = out.verdict.is_provable();
    if let (Verdict::Provable(d), Some(path)) = (&out.verdict, emit_proof) {
        write_out(Some(path), &pretty(&to_json(d)))?;
    }
    let space_size = stats.then(|| {
        let limit = 10_000;
        match generate_space(&out.goal, out.stats.bounds).sequents(limit) {
            Ok(v) => json!(v.len()),
            Err(_) => json!(format!(">{limit}")),
        }
    });
    if json {
        let mut v = json!({
            "sequent": s.to_string(),
            "normal_form": out.goal.to_string(),
            "verdict": if provable { "provable" } else { "unprovable" },
        });
        if let Verdict::Provable(d) = &out.verdict {
            v["proof_size"] = json!(d.size());
            v["rules"] = json!(rule_histogram(d));
        }
        if let Some(size) = &space_size {
            v["stats"] = json!({
                "bounds": out.stats.bounds,
                "widened": out.stats.widened,
                "space_size": size,
                "nodes": out.stats.nodes,
                "expanded": out.stats.expanded,
                "edges": out.stats.edges,
                "max_observed": out.stats.observed,
            });
        }
        println!("{}", pretty(&v));
    } else {
        println!("{}", if provable { "provable" } else { "unprovable" });
        if let Some(size) = space_size {
            let b = out.stats.bounds;
            let m = out.stats.observed;
            println!("bounds: a={} m={} d={}{}", b.a, b.m, b.d, if out.stats.widened { " (widened)" } else { "" });
            println!("space size: {}", size.as_str().map_or_else(|| size.to_string(), str::to_string));
            println!(
                "nodes: {} discovered, {} expanded, {} steps",
                out.stats.nodes, out.stats.expanded, out.stats.edges
            );
            println!("max observed: mu={} omega={} delta={}", m.mu, m.omega, m.delta);
        }
    }
    if provable {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn run_normalize(input: &Input, json: bool) -> Outcome {
    let g = parse_bunch(&input.read()?).map_err(input_error)?;
    let (nf, steps) = normalize(&g);
    if json {
        let steps: Vec<String> = steps.iter().map(ToString::to_string).collect();
        println!("{}", pretty(&json!({ "normal_form": nf.to_string(), "steps": steps })));
    } else {
        println!("{nf}");
        for s in &steps {
            println!("{s}");
        }
    }
    Ok(())
}

fn run_measure(input: &Input) -> Outcome {
    let text = input.read()?;
    let m = if text.contains("|-") {
        sequent_measures(&parse_sequent(&text).map_err(input_error)?)
    } else {
        bunch_measures(&parse_bunch(&text).map_err(input_error)?)
    };
    println!("{}", serde_json::to_string(&m).expect("measures serialize"));
    Ok(())
}

fn run_check(proof: &PathBuf, system: SystemArg, regimented: bool, json: bool) -> Outcome {
    let d = read_proof(proof)?;
    let system = System::from(system);
    let mut problem = check_derivation(system, &d, &[]).err().map(|e| e.to_string());
    if problem.is_none() && regimented && !is_regimented(&d) {
        problem = Some("the proof is not regimented".into());
    }
    if json {
        println!(
            "{}",
            pretty(&json!({
                "sequent": d.sequent.to_string(),
                "system": system.name(),
                "valid": problem.is_none(),
                "error": problem,
            }))
        );
    } else {
        match &problem {
            None => println!("valid {} proof of {}", system.name(), d.sequent),
            Some(e) => println!("invalid: {e}"),
        }
    }
    problem.map_or(Ok(()), |_| Err(Failure::Negative))
}

fn run_space(input: &Input, bounds: Option<SearchBounds>, list: bool, limit: usize) -> Outcome {
    let s = parse_sequent(&input.read()?).map_err(input_error)?;
    let goal = normal_sequent(&s);
    let bounds = bounds.unwrap_or_else(|| default_bounds(&goal));
    let seqs = generate_space(&goal, bounds).sequents(limit).map_err(|e| Failure::Resource(e.to_string()))?;
    if list {
        for q in &seqs {
            println!("{q}");
        }
    } else {
        println!("{}", seqs.len());
    }
    Ok(())
}

fn run_transform(proof: &PathBuf, to: Stage, output: Option<&PathBuf>, labels: bool) -> Outcome {
    let d = read_proof(proof)?;
    let fail = |e: bunched::transform::TransformError| input_error(e);
    let mut out = lbi_to_slbi(&d).map_err(fail)?;
    if !matches!(to, Stage::Slbi) {
        out = regiment(&normalize_end(out).map_err(fail)?).map_err(fail)?;
    }
    if matches!(to, Stage::DlbiRad | Stage::Dlbi) {
        out = eliminate_unit_contractions(&out).map_err(fail)?;
    }
    if matches!(to, Stage::Dlbi) {
        out = eliminate_rad(&out).map_err(fail)?;
    }
    let v = if labels { labelled_to_json(&well_label(&out).map_err(fail)?) } else { to_json(&out) };
    write_out(output, &pretty(&v))
}

fn run(cli: Cli) -> Outcome {
    match cli.verb {
        Verb::Decide { input, system, bounds, emit_proof, json, stats, max_nodes, threads } => {
            run_decide(&input, system, bounds, emit_proof.as_ref(), json, stats, max_nodes, threads)
        }
        Verb::Normalize { input, json } => run_normalize(&input, json),
        Verb::Measure { input } => run_measure(&input),
        Verb::Check { proof, system, regimented, json } => run_check(&proof, system, regimented, json),
        Verb::Space { input, bounds, count: _, list, limit } => run_space(&input, bounds, list, limit),
        Verb::Transform { proof, to, output, labels } => run_transform(&proof, to, output.as_ref(), labels),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative) => ExitCode::from(1),
        Err(Failure::Resource(msg)) => {
            eprintln!("resource limit: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

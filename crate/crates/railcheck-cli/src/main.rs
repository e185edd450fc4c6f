//! Command-line driver: validates annotation scene files against a rule
//! configuration, lists the available checks, and exposes the synthetic
//! scene generator and fault injector for manual exploration.
//!
//! Exit codes follow the pipeline contract: 0 when every scene parsed and no
//! issues were found (or `--no-fail-on-issues` was given), 1 when issues
//! were found, 2 on parse, config, or I/O errors. In a batch the worst code
//! wins, and one broken scene never stops the others from being checked.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use railcheck_core::faultlab::{
    generate_scene, inject_all_faults, inject_fault, scene_to_json, ExpectedIssue, FaultSpec,
    FaultTarget, GenParams,
};
use railcheck_core::report::{self, Verbosity};
use railcheck_core::{
    default_config, load_config, parse_scene, run_checks, IssueType, Report, RuleConfig,
};

#[derive(Parser)]
#[command(
    name = "railcheck",
    version,
    about = "Quality checks for multi-sensor railway annotation scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate scene files and report detected issues.
    Validate(ValidateArgs),
    /// List the nine issue types with one-line descriptions.
    ListChecks,
    /// Write a synthetic scene that passes every check.
    Generate(GenerateArgs),
    /// Plant a known fault in a scene file.
    Inject(InjectArgs),
    /// Print the built-in rule configuration as JSON.
    DumpConfig,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scene files or directories (directories are scanned for *.json).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// JSON rule configuration, merged over the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_enum, default_value_t = VerbosityArg::Summary)]
    verbosity: VerbosityArg,
    /// Comma-separated issue types to run (default: all nine).
    #[arg(long, value_delimiter = ',', value_parser = parse_issue_type)]
    checks: Vec<IssueType>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report issues but still exit 0 when every scene parsed.
    #[arg(long)]
    no_fail_on_issues: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerbosityArg {
    Summary,
    Full,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    frames: u32,
    #[arg(long, default_value_t = 2)]
    tracks_per_frame: u32,
    #[arg(long, default_value_t = 2)]
    cameras: u32,
    #[arg(long, default_value_t = 1)]
    persons: u32,
    #[arg(long, default_value_t = 1)]
    poles: u32,
    #[arg(long, default_value_t = 1)]
    animals: u32,
    /// Omit the lidar sensor. The default config requires ego-track evidence
    /// in the lidar, so camera-only scenes need an adjusted config.
    #[arg(long)]
    no_lidar: bool,
    /// Write the scene here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InjectArgs {
    /// The scene file to mutate (the file itself is left untouched).
    scene: PathBuf,
    /// Issue type to provoke (see list-checks).
    #[arg(long, value_parser = parse_issue_type, required_unless_present = "all", conflicts_with = "all")]
    fault: Option<IssueType>,
    /// Plant one fault of every issue type instead.
    #[arg(long, conflicts_with_all = ["frame", "annotation", "object"])]
    all: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target a specific annotation (with --annotation).
    #[arg(long, requires = "annotation")]
    frame: Option<u64>,
    /// Target a specific annotation uid (with --frame).
    #[arg(long, requires = "frame", conflicts_with = "object")]
    annotation: Option<String>,
    /// Target a specific object uid.
    #[arg(long)]
    object: Option<String>,
    /// Write the mutated scene here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the expected-issue descriptors here as JSON.
    #[arg(long)]
    expected: Option<PathBuf>,
}

fn parse_issue_type(s: &str) -> Result<IssueType, String> {
    s.parse::<IssueType>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::ListChecks => cmd_list_checks(),
        Command::Generate(args) => cmd_generate(&args),
        Command::Inject(args) => cmd_inject(&args),
        Command::DumpConfig => cmd_dump_config(),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            load_config(&text)
                .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?
        }
        None => default_config(),
    };
    if !args.checks.is_empty() {
        config.check_selection = args.checks.iter().copied().collect();
    }

    let files = expand_inputs(&args.inputs)?;
    let outcomes: Vec<(String, Result<Report, String>)> = files
        .iter()
        .map(|path| (scene_id(path), validate_one(path, &config)))
        .collect();

    for (_, result) in &outcomes {
        if let Err(message) = result {
            eprintln!("error: {message}");
        }
    }

    let rendered = match args.format {
        Format::Text => render_text(&outcomes, args.verbosity.into()),
        Format::Json => render_json(&outcomes),
    };
    match &args.output {
        Some(path) => fs::write(path, rendered)
            .with_context(|| format!("cannot write report to {}", path.display()))?,
        None => print!("{rendered}"),
    }

    let any_error = outcomes.iter().any(|(_, r)| r.is_err());
    let any_issue = outcomes
        .iter()
        .any(|(_, r)| r.as_ref().is_ok_and(|rep| !rep.issues.is_empty()));
    Ok(ExitCode::from(if any_error {
        2
    } else if any_issue && !args.no_fail_on_issues {
        1
    } else {
        0
    }))
}

impl From<VerbosityArg> for Verbosity {
    fn from(v: VerbosityArg) -> Self {
        match v {
            VerbosityArg::Summary => Verbosity::Summary,
            VerbosityArg::Full => Verbosity::Full,
        }
    }
}

fn validate_one(path: &Path, config: &RuleConfig) -> Result<Report, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let scene = parse_scene(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut report = run_checks(&scene, config);
    report.scene_id = scene_id(path);
    Ok(report)
}

fn scene_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Expands directories to their *.json files in lexicographic path order;
/// plain files pass through in the order given.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .with_context(|| format!("cannot read directory {}", input.display()))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "json"))
                .collect();
            found.sort();
            if found.is_empty() {
                bail!("no *.json files under {}", input.display());
            }
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn render_text(outcomes: &[(String, Result<Report, String>)], verbosity: Verbosity) -> String {
    let mut out = String::new();
    for (_, result) in outcomes {
        if let Ok(rep) = result {
            out.push_str(&report::to_text(rep, verbosity));
        }
    }
    if outcomes.len() > 1 {
        let failed = outcomes.iter().filter(|(_, r)| r.is_err()).count();
        let issues: usize = sum_ok(outcomes, |r| r.issues.len());
        let elements: u64 = sum_ok(outcomes, |r| r.elements.total);
        let rate = if elements == 0 {
            0.0
        } else {
            issues as f64 / elements as f64
        };
        out.push_str(&format!(
            "summary: {} scenes ({failed} failed): {issues} issues / {elements} elements ({})\n",
            outcomes.len(),
            report::format_percent(rate)
        ));
    }
    out
}

fn sum_ok<T: std::iter::Sum>(
    outcomes: &[(String, Result<Report, String>)],
    f: impl Fn(&Report) -> T,
) -> T {
    outcomes
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().map(&f))
        .sum()
}

fn render_json(outcomes: &[(String, Result<Report, String>)]) -> String {
    if outcomes.len() == 1 {
        // Single scene: the report object itself, nothing wrapped around it.
        return match &outcomes[0].1 {
            Ok(rep) => report::to_json(rep),
            Err(_) => String::new(), // the error went to standard error
        };
    }
    let reports: Vec<serde_json::Value> = outcomes
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .map(|rep| serde_json::to_value(rep).expect("report serialization"))
        .collect();
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|(_, r)| r.is_err())
        .map(|(id, _)| id.as_str())
        .collect();
    let issues: usize = sum_ok(outcomes, |r| r.issues.len());
    let elements: u64 = sum_ok(outcomes, |r| r.elements.total);
    let rate = if elements == 0 {
        0.0
    } else {
        issues as f64 / elements as f64
    };
    let envelope = serde_json::json!({
        "reports": reports,
        "summary": {
            "scenes": outcomes.len(),
            "failed": failed,
            "issues": issues,
            "elements": elements,
            "error_rate": rate,
        },
    });
    let mut text = serde_json::to_string_pretty(&envelope).expect("envelope serialization");
    text.push('\n');
    text
}

fn cmd_list_checks() -> Result<ExitCode> {
    for issue_type in IssueType::ALL {
        println!("{:<32} {}", issue_type.name(), issue_type.description());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(args: &GenerateArgs) -> Result<ExitCode> {
    let params = GenParams {
        seed: args.seed,
        frames: args.frames,
        tracks_per_frame: args.tracks_per_frame,
        cameras: args.cameras,
        persons: args.persons,
        poles: args.poles,
        animals: args.animals,
        include_lidar: !args.no_lidar,
    };
    let document = scene_to_json(&generate_scene(&params));
    write_or_print(args.output.as_deref(), &document)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_inject(args: &InjectArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.scene)
        .with_context(|| format!("cannot read scene {}", args.scene.display()))?;
    let scene = parse_scene(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.scene.display()))?;

    let (mutated, expected): (_, Vec<ExpectedIssue>) = if args.all {
        let (mutated, expected) = inject_all_faults(&scene, args.seed)?;
        (mutated, expected)
    } else {
        let target = match (&args.frame, &args.annotation, &args.object) {
            (Some(frame_index), Some(annotation_uid), None) => FaultTarget::Annotation {
                frame_index: *frame_index,
                annotation_uid: annotation_uid.clone(),
            },
            (None, None, Some(object_uid)) => FaultTarget::Object {
                object_uid: object_uid.clone(),
            },
            _ => FaultTarget::Random,
        };
        let spec = FaultSpec {
            issue_type: args.fault.expect("clap requires --fault without --all"),
            target,
        };
        let (mutated, expected) = inject_fault(&scene, &spec, args.seed)?;
        (mutated, vec![expected])
    };

    write_or_print(args.output.as_deref(), &scene_to_json(&mutated))?;
    let descriptors =
        serde_json::to_string_pretty(&expected).expect("descriptor serialization") + "\n";
    match &args.expected {
        Some(path) => fs::write(path, descriptors)
            .with_context(|| format!("cannot write descriptors to {}", path.display()))?,
        None => eprint!("{descriptors}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_dump_config() -> Result<ExitCode> {
    let mut text = serde_json::to_string_pretty(&default_config()).expect("config serialization");
    text.push('\n');
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn write_or_print(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

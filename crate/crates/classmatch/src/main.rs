//! CSV-driven command line for the assignment engine.
//!
//! Exit codes: 0 success, 1 usage or data errors, 2 model infeasibility
//! (capacity mismatch, no feasible flow, or a penalty-priced assignment in
//! the optimum), so batch scripts can fall back to a weaker model.

use clap::{Parser, Subcommand, ValueEnum};
use classmatch::analyze::{
    average_rank, average_utility, compare, necessary_condition, placement_below_lower,
    profile_by_group, profile_of, ModelOutcome,
};
use classmatch::assign::{
    detect_restricted_infeasibility, restrict, solve_assignment, AssignError, Preset,
};
use classmatch::flow::FlowError;
use classmatch::io::{generate_instance, load_instance, save_matching, write_instance, GenSpec};
use classmatch::mechanisms::{boston, deferred_acceptance, single_tie_break, MechanismOutcome};
use classmatch::model::{Instance, PenaltyConstants, Profile, UtilityVector};
use classmatch::oracle::{oracle_optimum, OracleError};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "classmatch",
    about = "Assign students to classes from ranked preference lists",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an assignment model and write the matching
    Solve {
        /// Model name, e.g. Opt67, Opt67-max3, RankMaximal, Fair, Opt67xFair
        #[arg(long)]
        model: String,
        /// Forbid ranks beyond this cutoff with penalty payoffs
        #[arg(long)]
        max_rank: Option<usize>,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        prefs: PathBuf,
        /// Matching CSV to write
        #[arg(long)]
        out: PathBuf,
        /// Optional single-row report CSV
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run deferred acceptance or the Boston mechanism under single tie-breaking
    Mechanism {
        #[arg(long, value_enum)]
        kind: MechanismKind,
        /// Seed for the tie-breaking lottery
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve several models and emit a comparison table
    Compare {
        /// Comma-separated model names
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        prefs: PathBuf,
        /// Table CSV to write (markdown goes to stdout)
        #[arg(long)]
        out: PathBuf,
    },
    /// Report classes whose top-ranked demand cannot cover their lower bound
    Check {
        #[arg(long)]
        max_rank: usize,
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        prefs: PathBuf,
    },
    /// Generate a synthetic instance
    Gen {
        #[arg(long)]
        students: usize,
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Lower bound applied to every class
        #[arg(long, default_value_t = 7)]
        lower: u32,
        #[arg(long, default_value_t = 16)]
        upper_min: u32,
        #[arg(long, default_value_t = 40)]
        upper_max: u32,
        /// Classes to mark canceled after preferences are drawn
        #[arg(long, default_value_t = 0)]
        canceled: usize,
        /// Zipf exponent for class popularity
        #[arg(long, default_value_t = 1.0)]
        skew: f64,
    },
    /// Cross-check a model against exhaustive enumeration (tiny instances)
    Verify {
        #[arg(long)]
        classes: PathBuf,
        #[arg(long)]
        prefs: PathBuf,
        #[arg(long)]
        model: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismKind {
    Da,
    Boston,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

const EXIT_INFEASIBLE: u8 = 2;

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Solve {
            model,
            max_rank,
            classes,
            prefs,
            out,
            report,
        } => {
            let instance = load_instance(&classes, &prefs).map_err(|e| e.to_string())?;
            let model = resolve_model(&model, max_rank, &instance)?;
            let name = model.name.clone();
            let (matching, total) = match solve_assignment(&instance, &model.vector) {
                Ok(result) => result,
                Err(
                    e @ (AssignError::CapacityMismatch { .. }
                    | AssignError::Flow(FlowError::Infeasible(_))),
                ) => {
                    eprintln!("{name}: infeasible: {e}");
                    return Ok(ExitCode::from(EXIT_INFEASIBLE));
                }
                Err(e) => return Err(e.to_string()),
            };
            if model.detect && detect_restricted_infeasibility(&matching, &instance, &model.vector)
            {
                eprintln!("{name}: infeasible: optimum uses penalty-priced assignments");
                return Ok(ExitCode::from(EXIT_INFEASIBLE));
            }
            save_matching(&instance, &matching, &out).map_err(|e| e.to_string())?;
            let profile = profile_of(&instance, &matching);
            let score = model.score.as_ref().unwrap_or(&model.vector);
            print_summary(
                &name,
                &instance,
                &matching,
                &profile,
                Some(score),
                Some(total),
            );
            if let Some(report_path) = report {
                let table = compare(
                    &instance,
                    vec![(
                        name,
                        ModelOutcome::Matched {
                            matching,
                            vector: model.detect.then_some(model.vector),
                            score_vector: model.score,
                        },
                    )],
                );
                std::fs::write(&report_path, table.to_csv()).map_err(|e| e.to_string())?;
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Mechanism {
            kind,
            seed,
            classes,
            prefs,
            out,
        } => {
            let instance = load_instance(&classes, &prefs).map_err(|e| e.to_string())?;
            let priority = single_tie_break(&instance, seed);
            let (name, outcome): (&str, MechanismOutcome) = match kind {
                MechanismKind::Da => (
                    "DA",
                    deferred_acceptance(&instance, &priority).map_err(|e| e.to_string())?,
                ),
                MechanismKind::Boston => (
                    "Boston",
                    boston(&instance, &priority).map_err(|e| e.to_string())?,
                ),
            };
            save_matching(&instance, &outcome.matching, &out).map_err(|e| e.to_string())?;
            let profile = profile_of(&instance, &outcome.matching);
            print_summary(name, &instance, &outcome.matching, &profile, None, None);
            let starved = placement_below_lower(&instance, &outcome.prefill);
            if !starved.is_empty() {
                let ids: Vec<String> = starved
                    .iter()
                    .map(|&(c, size)| format!("{} ({size})", instance.class(c).id))
                    .collect();
                println!(
                    "classes left below their lower bound before the fill: {}",
                    ids.join(", ")
                );
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            models,
            classes,
            prefs,
            out,
        } => {
            let instance = load_instance(&classes, &prefs).map_err(|e| e.to_string())?;
            let mut resolved = Vec::new();
            for name in &models {
                resolved.push(resolve_model(name, None, &instance)?);
            }
            let runs: Vec<(String, ModelOutcome)> = std::thread::scope(|scope| {
                let handles: Vec<_> = resolved
                    .into_iter()
                    .map(|model| {
                        let instance = &instance;
                        scope.spawn(move || {
                            let outcome = match solve_assignment(instance, &model.vector) {
                                Ok((matching, _)) => ModelOutcome::Matched {
                                    matching,
                                    vector: model.detect.then_some(model.vector),
                                    score_vector: model.score,
                                },
                                Err(
                                    AssignError::CapacityMismatch { .. }
                                    | AssignError::Flow(FlowError::Infeasible(_)),
                                ) => ModelOutcome::Infeasible,
                                Err(e) => return Err(e.to_string()),
                            };
                            Ok((model.name, outcome))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("solver thread panicked"))
                    .collect::<Result<Vec<_>, String>>()
            })?;
            let table = compare(&instance, runs);
            std::fs::write(&out, table.to_csv()).map_err(|e| e.to_string())?;
            print!("{}", table.to_markdown());
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            max_rank,
            classes,
            prefs,
        } => {
            let instance = load_instance(&classes, &prefs).map_err(|e| e.to_string())?;
            if !(1..=instance.k()).contains(&max_rank) {
                return Err(format!("--max-rank outside 1..={}", instance.k()));
            }
            let violations = necessary_condition(&instance, max_rank);
            if violations.is_empty() {
                println!(
                    "ok: every active class is ranked in the top {max_rank} by at least its lower bound"
                );
                return Ok(ExitCode::SUCCESS);
            }
            println!("class_id,top{max_rank}_count,lower");
            for (c, count) in &violations {
                let info = instance.class(*c);
                println!("{},{count},{}", info.id, info.lower);
            }
            Ok(ExitCode::from(1))
        }
        Command::Gen {
            students,
            classes,
            k,
            seed,
            out_dir,
            lower,
            upper_min,
            upper_max,
            canceled,
            skew,
        } => {
            let spec = GenSpec {
                students,
                classes,
                k,
                lower,
                upper_range: (upper_min, upper_max),
                canceled,
                skew,
                seed,
            };
            let instance = generate_instance(&spec).map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            let classes_path = out_dir.join("classes.csv");
            let prefs_path = out_dir.join("preferences.csv");
            write_instance(&instance, &classes_path, &prefs_path).map_err(|e| e.to_string())?;
            println!("wrote {}", classes_path.display());
            println!("wrote {}", prefs_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            classes,
            prefs,
            model,
        } => {
            let instance = load_instance(&classes, &prefs).map_err(|e| e.to_string())?;
            let model = resolve_model(&model, None, &instance)?;
            let name = model.name;
            let solved = match solve_assignment(&instance, &model.vector) {
                Ok((_, total)) => Some(total),
                Err(
                    AssignError::CapacityMismatch { .. }
                    | AssignError::Flow(FlowError::Infeasible(_)),
                ) => None,
                Err(e) => return Err(e.to_string()),
            };
            let best = match oracle_optimum(&instance, &model.vector) {
                Ok(best) => best.map(|(total, _)| total),
                Err(e @ OracleError::TooLarge { .. }) => return Err(e.to_string()),
            };
            match (solved, best) {
                (Some(a), Some(b)) if a == b => {
                    println!("{name}: solver and enumeration agree on total utility {a}");
                    Ok(ExitCode::SUCCESS)
                }
                (None, None) => {
                    println!("{name}: solver and enumeration agree: no feasible matching");
                    Ok(ExitCode::SUCCESS)
                }
                (a, b) => Err(format!(
                    "{name}: solver found {a:?} but enumeration found {b:?}"
                )),
            }
        }
    }
}

struct ResolvedModel {
    name: String,
    /// Solving vector.
    vector: UtilityVector,
    /// Whether a payoff at or below -m in the optimum means infeasibility.
    detect: bool,
    /// Vector for reported averages (profile-based models score on Opt67).
    score: Option<UtilityVector>,
}

/// Resolve `--model` plus an optional `--max-rank` into a solving vector,
/// naming the result `<model>-max<r>` when a cutoff is applied.
fn resolve_model(
    model: &str,
    max_rank: Option<usize>,
    instance: &Instance,
) -> Result<ResolvedModel, String> {
    let preset = Preset::from_str(model).map_err(|e| e.to_string())?;
    let vector = preset.vector(instance).map_err(|e| e.to_string())?;
    let score = preset.reporting_vector(instance);
    match max_rank {
        None => Ok(ResolvedModel {
            name: preset.to_string(),
            vector,
            detect: preset.uses_penalty_detection(),
            score,
        }),
        Some(r) => {
            if !(1..=instance.k()).contains(&r) {
                return Err(format!("--max-rank outside 1..={}", instance.k()));
            }
            let m = PenaltyConstants::for_instance(instance)
                .map_err(|e| e.to_string())?
                .m;
            Ok(ResolvedModel {
                name: format!("{preset}-max{r}"),
                vector: restrict(&vector, r, m),
                detect: true,
                score,
            })
        }
    }
}

fn print_summary(
    name: &str,
    instance: &Instance,
    matching: &classmatch::Matching,
    profile: &Profile,
    vector: Option<&UtilityVector>,
    total: Option<i64>,
) {
    let active = instance.active_classes().count();
    println!(
        "{name}: {} students, {active} active classes (of {})",
        instance.num_students(),
        instance.num_classes()
    );
    let render = |p: &Profile| {
        let counts: Vec<String> = p.counts().iter().map(|c| c.to_string()).collect();
        format!("{} | others {}", counts.join(" "), p.others_count())
    };
    println!("profile: {}", render(profile));
    if instance.has_groups() {
        for (group, group_profile) in profile_by_group(instance, matching) {
            let label = if group.is_empty() { "(none)" } else { &group };
            println!("  group {label}: {}", render(&group_profile));
        }
    }
    if let Some(total) = total {
        println!("total utility: {total}");
    }
    if let Some(vector) = vector {
        match average_utility(profile, vector) {
            Ok(avg) => println!("average utility: {avg}"),
            Err(_) => println!("average utility: --"),
        }
    }
    println!("average rank: {}", average_rank(profile));
}

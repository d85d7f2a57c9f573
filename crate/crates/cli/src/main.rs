use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use sccp::frontend::{parse_constraint, parse_program, parse_sequent, ParseError};
use sccp::interpreter::{Interpreter, Program};
use sccp::kernel::Axiom;
use sccp::laws::check_laws;
use sccp::prover::{adequacy_check, prove_with, Agreement, ProverConfig, Signature};
use sccp::semiring::{CSemiring, SemiringKind};
use sccp::store::{EntailConfig, Mode, Store};

/// Exit status for a produced verdict, true or false.
const VERDICT: u8 = 0;
/// Exit status when a bound cut the answer short.
const INCONCLUSIVE: u8 = 1;
/// Exit status for usage, input and parse errors.
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sccp",
    version,
    about = "Soft concurrent constraint programs and their SELL/SELLS encodings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Exhaustive,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a program, exhaustively or along one seeded random run.
    Run {
        program: PathBuf,
        #[arg(long, value_enum, default_value = "random")]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = Program::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether the program can reach a store entailing the goal.
    Barb {
        program: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long, default_value_t = Program::DEFAULT_MAX_STEPS)]
        max_steps: usize,
    },
    /// Decide store entailment.
    Entail {
        #[arg(long, default_value = "fuzzy")]
        semiring: String,
        #[arg(long, default_value = "sell")]
        mode: String,
        #[arg(long)]
        store: String,
        #[arg(long)]
        goal: String,
        /// `forall X. c -o d`; may be repeated.
        #[arg(long)]
        axiom: Vec<String>,
        #[arg(long, default_value_t = EntailConfig::DEFAULT_BOUND)]
        bound: usize,
        /// Print the support dump as JSON after the verdict.
        #[arg(long)]
        trace: bool,
    },
    /// Search for a cut-free proof of the sequent in a file.
    Prove {
        #[arg(long)]
        sequent: PathBuf,
        #[arg(long, default_value_t = sccp::prover::search::DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value = "fuzzy")]
        semiring: String,
        #[arg(long, default_value = "sell")]
        mode: String,
        #[arg(long, default_value_t = sccp::prover::search::DEFAULT_NODE_BUDGET)]
        budget: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run the randomised c-semiring law suite.
    CheckLaws {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Compare the barb against provability of the encoded program.
    Adequacy {
        program: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long, default_value_t = sccp::prover::search::DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = Program::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long)]
        json: bool,
    },
}

/// A failure reported with exit status 2.
struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn in_file(path: &Path) -> impl Fn(ParseError) -> Failure + '_ {
    move |e| Failure(format!("{}:{e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(in_file(path))
}

fn semiring(name: &str) -> Result<CSemiring, Failure> {
    Ok(CSemiring::new(name.parse::<SemiringKind>()?))
}

fn mode(name: &str) -> Result<Mode, Failure> {
    name.parse().map_err(Failure)
}

fn axioms(s: &CSemiring, texts: &[String]) -> Result<Vec<Axiom>, Failure> {
    let mut src = format!("semiring {s};\n");
    for t in texts {
        src.push_str(&format!("axiom {t};\n"));
    }
    src.push_str("main = tell 1;");
    Ok(parse_program(&src)
        .map_err(|e| Failure(format!("axiom: {}", e.kind)))?
        .axioms)
}

fn verdict(truncated: bool) -> u8 {
    if truncated {
        INCONCLUSIVE
    } else {
        VERDICT
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Run {
            program,
            strategy,
            seed,
            max_steps,
            json,
        } => {
            let program = load(&program)?;
            let interp = Interpreter::new(&program);
            match strategy {
                Strategy::Random => {
                    let trace = interp.random_run(seed, max_steps)?;
                    if json {
                        println!("{}", serde_json::to_string_pretty(&trace.to_json())?);
                    } else {
                        print!("{trace}");
                    }
                    Ok(verdict(trace.truncated))
                }
                Strategy::Exhaustive => {
                    let reach = interp.explore(max_steps)?;
                    let terminal: Vec<_> = reach.terminal(&interp).collect();
                    if json {
                        let configs: Vec<_> = reach
                            .configs
                            .iter()
                            .zip(&reach.depths)
                            .map(|(c, d)| json!({"depth": d, "configuration": c.to_json()}))
                            .collect();
                        let out = json!({
                            "configurations": configs,
                            "terminal": terminal.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
                            "truncated": reach.truncated,
                        });
                        println!("{}", serde_json::to_string_pretty(&out)?);
                    } else {
                        println!(
                            "{} reachable configurations, {} terminal",
                            reach.len(),
                            terminal.len()
                        );
                        for c in &terminal {
                            println!("   {c}");
                        }
                        if reach.truncated {
                            println!("(truncated)");
                        }
                    }
                    Ok(verdict(reach.truncated))
                }
            }
        }
        Command::Barb {
            program,
            goal,
            max_steps,
        } => {
            let program = load(&program)?;
            let goal = parse_constraint(&goal, &program.semiring)
                .map_err(|e| Failure(format!("goal: {e}")))?;
            let barb = Interpreter::new(&program).barb(&goal, max_steps)?;
            if barb.truncated {
                println!("truncated");
                return Ok(INCONCLUSIVE);
            }
            println!("{}", barb.holds);
            Ok(VERDICT)
        }
        Command::Entail {
            semiring: k,
            mode: m,
            store,
            goal,
            axiom,
            bound,
            trace,
        } => {
            let s = semiring(&k)?;
            let cfg = EntailConfig::new(s, mode(&m)?)
                .with_axioms(axioms(&s, &axiom)?)
                .with_bound(bound);
            let told = parse_constraint(&store, &s).map_err(|e| Failure(format!("store: {e}")))?;
            let goal = parse_constraint(&goal, &s).map_err(|e| Failure(format!("goal: {e}")))?;
            let (holds, dump) = Store::new().add(&told, &s)?.entails_traced(&cfg, &goal)?;
            println!("{holds}");
            if trace {
                println!("{}", serde_json::to_string_pretty(&dump.to_json())?);
            }
            Ok(VERDICT)
        }
        Command::Prove {
            sequent,
            depth,
            semiring: k,
            mode: m,
            budget,
            json,
        } => {
            let s = semiring(&k)?;
            let mode = mode(&m)?;
            let seq = parse_sequent(&read(&sequent)?, &s).map_err(in_file(&sequent))?;
            let out = prove_with(
                &seq,
                &Signature::new(s),
                ProverConfig::new(mode, depth).with_budget(budget),
            );
            match &out.proof {
                Some(p) if json => println!("{}", serde_json::to_string_pretty(&p.to_json())?),
                Some(p) => println!("{p}"),
                None if out.truncated => println!("NOT-PROVED (truncated)"),
                None => println!("NOT-PROVED"),
            }
            Ok(verdict(out.proof.is_none() && out.truncated))
        }
        Command::CheckLaws {
            samples,
            seed,
            json,
        } => {
            let kinds = [
                SemiringKind::Crisp,
                SemiringKind::Fuzzy,
                SemiringKind::Probabilistic,
                SemiringKind::Weighted,
            ];
            let results: Vec<_> = kinds
                .iter()
                .flat_map(|&k| check_laws(&CSemiring::new(k), samples, seed).results)
                .collect();
            if json {
                println!("{}", serde_json::to_string_pretty(&results)?);
            } else {
                for r in &results {
                    let status = if r.passed { "ok" } else { "FAILED" };
                    print!(
                        "{:<9} {status:<6} {:>6}  {}",
                        r.semiring.name(),
                        r.checked,
                        r.law
                    );
                    match &r.counterexample {
                        Some(c) => println!("  {c}"),
                        None => println!(),
                    }
                }
            }
            Ok(VERDICT)
        }
        Command::Adequacy {
            program,
            goal,
            depth,
            max_steps,
            json,
        } => {
            let program = load(&program)?;
            let goal = parse_constraint(&goal, &program.semiring)
                .map_err(|e| Failure(format!("goal: {e}")))?;
            let report = adequacy_check(&program, &goal, depth, max_steps)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                let agreement = match report.agreement {
                    Agreement::Agree => "agree",
                    Agreement::Disagree => "DISAGREE",
                    Agreement::Inconclusive => "inconclusive",
                };
                println!(
                    "barb {}{}, provable {}{}: {agreement}",
                    report.barb,
                    if report.barb_truncated {
                        " (truncated)"
                    } else {
                        ""
                    },
                    report.provable,
                    if report.prover_truncated {
                        " (truncated)"
                    } else {
                        ""
                    },
                );
            }
            Ok(verdict(report.agreement == Agreement::Inconclusive))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}

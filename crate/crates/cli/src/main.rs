//! `defect`: command-line front end for the defect-functor engine.
//!
//! Reports are plain `key: value` lines in a fixed order, so identical
//! invocations produce byte-identical output.  Exit codes: 0 = computed,
//! 1 = certified answer contradicts `--expect` (or a failed replay or
//! selftest), 2 = input error, 3 = `--require-certified` met Undetermined.

mod input;
mod run;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use run::{CliError, Outcome};

#[derive(Parser)]
#[command(name = "defect", version, about = "Defect functors over finitely presented abelian groups")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Definitions file; stdin is read when a command needs names and no
    /// file is given.
    #[arg(long, short = 'f', global = true, value_name = "PATH")]
    file: Option<PathBuf>,

    /// Truncation window for tower commands; pattern towers regenerate to
    /// it, explicit stage lists must already match.  Default 8.
    #[arg(long, global = true, value_name = "N")]
    window: Option<usize>,

    /// Seed for the selftest suites.
    #[arg(long, global = true, default_value_t = 0, value_name = "S")]
    seed: u64,

    /// Assert the primary verdict; a certified opposite exits 1.
    #[arg(long, global = true, value_enum, value_name = "yes|no")]
    expect: Option<Expect>,

    /// Exit 3 when the primary verdict is Undetermined.
    #[arg(long, global = true)]
    require_certified: bool,

    /// Re-check every certificate in the report; a failed replay exits 1.
    #[arg(long, global = true)]
    verify_witness: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Expect {
    Yes,
    No,
}

#[derive(Subcommand)]
enum Cmd {
    /// Smith normal form of a whitespace-separated integer matrix file.
    Snf { matrix_file: PathBuf },
    /// Invariant factors of a named group.
    Invariants { group: String },
    /// The group of homomorphisms SRC -> DST.
    Hom { src: String, dst: String },
    /// The group of extensions of SRC by DST.
    Ext { src: String, dst: String },
    /// The defect value of BETA at a named group.
    Dev { beta: String, at: String },
    /// Compare the defect value with its extension-group description.
    DevVsExt { beta: String, at: String },
    /// The kernel-splitting short exact sequence of defect values.
    Seq23 { beta: String, at: String },
    /// The six-node half-exact sequence over a target SES given as INCL,PROJ.
    Sixterm { beta: String, ses: String },
    /// Compare stage defect values with the defect of the tower colimit.
    Phi { beta: String, tower: String },
    /// Certified splitting checks.
    #[command(subcommand)]
    Check(CheckCmd),
    /// Built-in worked examples.
    #[command(subcommand)]
    Examples(ExampleCmd),
    /// Brute-force reference computations.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Cross-validate the engine against enumeration and counting oracles.
    Selftest,
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Does BETA paired with H give a split monomorphism into the sum?
    SplitPair { beta: String, h: String },
    /// Quotient-level left inverse of BETA lifting to the ambient groups.
    Thm41 { beta: String, subgroup: String },
    /// Pushout splitting after deleting the summands indexed by F.
    SplitSmall { beta: String, family: String, sigma: String, f: String },
    /// First index in a subgroup chain whose quotient map splits.
    DefOmega { beta: String, chain: String },
}

#[derive(Subcommand)]
enum ExampleCmd {
    /// Stagewise nonzero defects collapsing at the colimit.
    Ex32,
    /// Levelwise split towers with no certified lift.
    Ex42,
    /// Defect values against the p-divisible-part quotient.
    Devp,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Enumerate all homomorphisms SRC -> DST (both finite).
    Hom { src: String, dst: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(mut outcome) => {
            if cli.expect.is_some() && outcome.primary.is_none() {
                eprintln!("error: --expect applies only to commands that produce a verdict");
                return ExitCode::from(2);
            }
            if cli.verify_witness {
                let line = match outcome.replay {
                    Some(true) => "ok",
                    Some(false) => "FAILED",
                    None => "none",
                };
                outcome.report.push(("witness-replay".to_string(), line.to_string()));
            }
            print!("{}", defect_core::selftest::render(&outcome.report));
            exit_code(&cli, &outcome)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let verify = cli.verify_witness;
    match &cli.cmd {
        Cmd::Snf { matrix_file } => run::snf(&read_file(matrix_file)?),
        Cmd::Selftest => Ok(run::selftest_cmd(cli.seed)),
        Cmd::Examples(e) => match e {
            ExampleCmd::Ex32 => run::example_ex32(cli.window, verify),
            ExampleCmd::Ex42 => run::example_ex42(cli.window, verify),
            ExampleCmd::Devp => run::example_devp(cli.window, verify),
        },
        cmd => {
            let defs = load_definitions(cli)?;
            match cmd {
                Cmd::Invariants { group } => run::invariants(&defs, group),
                Cmd::Hom { src, dst } => run::hom(&defs, src, dst),
                Cmd::Ext { src, dst } => run::ext(&defs, src, dst),
                Cmd::Dev { beta, at } => run::dev_cmd(&defs, beta, at),
                Cmd::DevVsExt { beta, at } => run::dev_vs_ext_cmd(&defs, beta, at, verify),
                Cmd::Seq23 { beta, at } => run::seq23(&defs, beta, at, verify),
                Cmd::Sixterm { beta, ses } => run::sixterm(&defs, beta, ses, verify),
                Cmd::Phi { beta, tower } => run::phi(&defs, beta, tower, cli.window, verify),
                Cmd::Check(c) => match c {
                    CheckCmd::SplitPair { beta, h } => {
                        run::check_split_pair(&defs, beta, h, verify)
                    }
                    CheckCmd::Thm41 { beta, subgroup } => {
                        run::check_thm41(&defs, beta, subgroup, verify)
                    }
                    CheckCmd::SplitSmall { beta, family, sigma, f } => {
                        run::check_split_small(&defs, beta, family, sigma, f, verify)
                    }
                    CheckCmd::DefOmega { beta, chain } => {
                        run::check_def_omega(&defs, beta, chain, verify)
                    }
                },
                Cmd::Oracle(OracleCmd::Hom { src, dst }) => run::oracle_hom(&defs, src, dst),
                Cmd::Snf { .. } | Cmd::Selftest | Cmd::Examples(_) => unreachable!(),
            }
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_definitions(cli: &Cli) -> Result<input::Definitions, CliError> {
    let text = match &cli.file {
        Some(path) => read_file(path)?,
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::Input(format!("cannot read stdin: {e}")))?;
            buf
        }
    };
    Ok(input::parse(&text)?)
}

fn exit_code(cli: &Cli, outcome: &Outcome) -> ExitCode {
    if outcome.hard_fail {
        return ExitCode::from(1);
    }
    if let Some(v) = &outcome.primary {
        if cli.require_certified && v.is_undetermined() {
            return ExitCode::from(3);
        }
        match cli.expect {
            Some(Expect::Yes) if v.is_no() => return ExitCode::from(1),
            Some(Expect::No) if v.is_yes() => return ExitCode::from(1),
            _ => {}
        }
    }
    if outcome.replay == Some(false) {
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

//! Command-line front end.
//!
//! Every failure ends in a single line `error: <kind>: <detail>` on stderr and
//! a nonzero exit status: 1 for usage and parse errors, 2 for semantic errors
//! and 3 when a budget runs out.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::forms::{globalize_trace, hoist_delays, passify, FormsError};
use crate::lattice::{builtin_signature, Signature, SignatureError};
use crate::oracle::{check_equivalence, format_waveforms, parse_waveforms, simulate, Equivalence, OracleError, DEFAULT_BUDGET};
use crate::rewrite::{self, Engine, Mode, RewriteError, Verdict};
use crate::term::{parse, split_use, TermError};
use crate::tfpg::{readback_term, to_dot, Tfpg, TfpgError};

pub const DEFAULT_STEPS: usize = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "dcirc", version, about = "Diagrammatic rewriting semantics for digital circuits")]
pub struct Cli {
    /// Signature to use instead of the file's `use` line: bool4, mos6 or a .sig path.
    #[arg(long, global = true)]
    pub sig: Option<String>,
    /// Rewrite step budget.
    #[arg(long, global = true, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Form {
    /// Normal form of the local rewrite rules.
    Local,
    /// All feedback wires gathered in one outer trace.
    GlobalTrace,
    /// Every delay fed straight from a feedback wire.
    GlobalDelay,
    /// Constants pulled out as extra inputs.
    Passive,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a circuit and check its arity and graph invariants.
    Check { file: PathBuf },
    /// Write the circuit's graph in DOT format.
    Dot {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a closed circuit by rewriting.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        ticks: usize,
        /// Print every rule application.
        #[arg(long)]
        trace: bool,
    },
    /// Simulate a circuit with the reference stream semantics.
    Eval {
        file: PathBuf,
        /// Input waveforms: wires separated by `;`, ticks by `,`, `b` for ⊥.
        #[arg(long = "in", default_value = "")]
        inputs: String,
        #[arg(long, default_value_t = 8)]
        ticks: usize,
    },
    /// Partially evaluate a circuit, possibly open and with abstract boxes.
    Peval {
        file: PathBuf,
        /// Maximum number of loop unrollings to try.
        #[arg(long)]
        fuel: Option<usize>,
        /// Write the residual circuit here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the residual graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
    },
    /// Decide equivalence by bounded exhaustive simulation.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        /// Maximum number of evaluations.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Print a canonical form of the circuit as a term.
    Normalize {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "local")]
        form: Form,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub detail: String,
    pub code: i32,
}

impl CliError {
    fn new(kind: &'static str, code: i32, detail: impl ToString) -> Self {
        CliError { kind, detail: detail.to_string(), code }
    }
}

impl From<TermError> for CliError {
    fn from(e: TermError) -> Self {
        match e {
            TermError::Syntax { .. } | TermError::UnknownName(_) | TermError::EmptyWaveform => CliError::new("parse", 1, e),
            _ => CliError::new("arity", 2, e),
        }
    }
}

impl From<SignatureError> for CliError {
    fn from(e: SignatureError) -> Self {
        CliError::new("signature", 1, e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => CliError::new("budget", 3, e),
            OracleError::Parse(_) => CliError::new("parse", 1, e),
            OracleError::ArityMismatch { .. } | OracleError::InterfaceMismatch { .. } => CliError::new("arity", 2, e),
            _ => CliError::new("semantic", 2, e),
        }
    }
}

impl From<RewriteError> for CliError {
    fn from(e: RewriteError) -> Self {
        match e {
            RewriteError::BudgetExhausted(_) => CliError::new("budget", 3, e),
            _ => CliError::new("semantic", 2, e),
        }
    }
}

impl From<TfpgError> for CliError {
    fn from(e: TfpgError) -> Self {
        CliError::new("invariant", 2, e)
    }
}

impl From<FormsError> for CliError {
    fn from(e: FormsError) -> Self {
        CliError::new("semantic", 2, e)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new("io", 1, format!("{}: {e}", path.display()))
}

/// A parsed circuit file.
pub struct Loaded {
    pub sig: Signature,
    /// How the signature was named, for writing residual files.
    pub sig_ref: String,
    pub graph: Tfpg,
}

fn load_signature(name: &str, base: Option<&Path>) -> Result<(Signature, String), CliError> {
    if let Ok(sig) = builtin_signature(name) {
        return Ok((sig, name.to_string()));
    }
    let mut path = PathBuf::from(name);
    if path.is_relative() {
        if let Some(dir) = base {
            path = dir.join(path);
        }
    }
    let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let sig = Signature::parse(&text)?;
    let shown = path.canonicalize().unwrap_or(path);
    Ok((sig, shown.display().to_string()))
}

pub fn load(path: &Path, sig_override: Option<&str>) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let (using, body) = split_use(&text);
    let base = path.parent();
    let (sig, sig_ref) = match (sig_override, using.as_deref()) {
        (Some(s), _) => load_signature(s, None)?,
        (None, Some(s)) => load_signature(s, base)?,
        (None, None) => load_signature("bool4", None)?,
    };
    let term = parse(&body, &sig)?;
    let graph = Tfpg::from_term(&term, &sig);
    graph.validate()?;
    Ok(Loaded { sig, sig_ref, graph })
}

fn write_to(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn term_text(g: &Tfpg, sig: &Signature) -> String {
    readback_term(g).display(sig.lattice()).to_string()
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let sig_override = cli.sig.as_deref();
    let w = |r: std::io::Result<()>| r.map_err(|e| CliError::new("io", 1, e));
    match &cli.command {
        Command::Check { file } => {
            let l = load(file, sig_override)?;
            let g = &l.graph;
            let (m, n) = g.arity();
            w(writeln!(
                out,
                "ok {m} -> {n}, {} nodes, {} feedback, {} delays",
                g.node_count(),
                g.feedback().len(),
                g.delay_count()
            ))?;
        }
        Command::Dot { file, output } => {
            let l = load(file, sig_override)?;
            let dot = to_dot(&l.graph, l.sig.lattice());
            match output {
                Some(p) => write_to(p, &dot)?,
                None => w(out.write_all(dot.as_bytes()))?,
            }
        }
        Command::Run { file, ticks, trace } => {
            let l = load(file, sig_override)?;
            let res = rewrite::run(&l.graph, &l.sig, *ticks, cli.steps, *trace)?;
            if *trace {
                for line in &res.trace {
                    w(writeln!(out, "{line}"))?;
                }
            } else {
                for (i, vals) in res.emitted.iter().enumerate() {
                    let names: Vec<&str> = vals.iter().map(|&v| l.sig.lattice().symbol(v)).collect();
                    w(writeln!(out, "tick {i} emit {}", names.join(" ")))?;
                }
            }
            let verdict = match res.verdict {
                Verdict::Productive(_) => "productive",
                Verdict::Unproductive => "unproductive",
                Verdict::StepLimit => "step-limit",
            };
            w(writeln!(
                out,
                "verdict {verdict} (ticks {}, unfoldings {}, steps {})",
                res.emitted.len(),
                res.unfoldings,
                res.steps
            ))?;
            if res.verdict == Verdict::StepLimit {
                return Err(CliError::new("budget", 3, format!("step budget of {} exhausted", cli.steps)));
            }
        }
        Command::Eval { file, inputs, ticks } => {
            let l = load(file, sig_override)?;
            let ins = parse_waveforms(inputs, l.sig.lattice())?;
            let res = simulate(&l.graph, &l.sig, &ins, *ticks)?;
            w(writeln!(out, "{}", format_waveforms(&res, l.sig.lattice())))?;
        }
        Command::Peval { file, fuel, output, dot, trace } => {
            let l = load(file, sig_override)?;
            let res = rewrite::partial_evaluate(&l.graph, &l.sig, *fuel, cli.steps, *trace)?;
            if *trace {
                for line in &res.trace {
                    w(writeln!(out, "{line}"))?;
                }
            }
            let text = term_text(&res.residual, &l.sig);
            match output {
                Some(p) => write_to(p, &format!("use {}\n{text}\n", l.sig_ref))?,
                None => w(writeln!(out, "{text}"))?,
            }
            if let Some(p) = dot {
                write_to(p, &to_dot(&res.residual, l.sig.lattice()))?;
            }
        }
        Command::Equiv { left, right, budget } => {
            let a = load(left, sig_override)?;
            let b = load(right, Some(sig_override.unwrap_or(&a.sig_ref)))?;
            let lat = a.sig.lattice();
            match check_equivalence(&a.graph, &b.graph, &a.sig, *budget)? {
                Equivalence::Equal { mode, length, cases } => {
                    w(writeln!(out, "equal ({mode} bound, length {length}, {cases} cases)"))?;
                }
                Equivalence::Counterexample { inputs, left, right } => {
                    w(writeln!(out, "counterexample"))?;
                    w(writeln!(out, "  inputs {}", format_waveforms(&inputs, lat)))?;
                    w(writeln!(out, "  left   {}", format_waveforms(&left, lat)))?;
                    w(writeln!(out, "  right  {}", format_waveforms(&right, lat)))?;
                }
            }
        }
        Command::Normalize { file, form } => {
            let l = load(file, sig_override)?;
            let g = &l.graph;
            let text = match form {
                Form::Local => {
                    let mut h = g.clone();
                    let mode = if g.delay_count() == 0 { Mode::Extensional } else { Mode::Stream };
                    Engine::new(&l.sig, mode).normalize_local(&mut h, cli.steps, None)?;
                    term_text(&h, &l.sig)
                }
                Form::GlobalTrace => term_text(&globalize_trace(g)?, &l.sig),
                Form::GlobalDelay => term_text(&hoist_delays(g).graph, &l.sig),
                Form::Passive => {
                    let (p, vals) = passify(g)?;
                    let names: Vec<&str> = vals.iter().map(|&v| l.sig.lattice().name_of(v)).collect();
                    format!("# constants: {}\n{}", names.join(" "), term_text(&p, &l.sig))
                }
            };
            w(writeln!(out, "{text}"))?;
        }
    }
    Ok(0)
}

/// Runs one command line. Returns the process exit status.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(err, "error: usage: {first}");
            return 1;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {}", e.kind, e.detail);
            e.code
        }
    }
}

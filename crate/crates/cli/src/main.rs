use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use polythread::acp::{print_proc, transition_dump, translate_thread, translate_use, TlsEncoding};
use polythread::config::{
    parse_dist_config, parse_thread_vector, print_thread_vector, ThreadVector,
};
use polythread::dist::pci_d;
use polythread::dsl::{parse_thread, print_thread};
use polythread::error::Error;
use polythread::exec::{Environment, RandomReplies, ReplyScript, ReplySource, Resolver, Trace};
use polythread::fragsearch::pci_fs;
use polythread::laws::{run_suite, SUITES};
use polythread::local::pci;
use polythread::poly::{internalize, internalize_binary};
use polythread::program::{extract, parse_program, run_architecture, Architecture, Instr};
use polythread::service::{parse_services, ServiceMap};
use polythread::term::{Focus, Thread, DEFAULT_STATE_LIMIT};

#[derive(Parser)]
#[command(
    name = "polythread",
    version,
    about = "Run and check poly-threaded thread algebra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Literal,
    Pattern,
}

/// Options shared by every command that executes something.
#[derive(clap::Args)]
struct Exec {
    /// Service configuration: a JSON list of {focus, kind, params}.
    #[arg(long)]
    services: Option<PathBuf>,
    /// Replies for actions no service handles: `seed:N` or `script:T,F,2`.
    #[arg(long)]
    replies: Option<String>,
    /// External choices: `script:1,0,2`, `seed:N` or `interactive`.
    #[arg(long, default_value = "script:")]
    resolver: String,
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed used when `--replies` is not given.
    #[arg(long, env = "POLYTHREAD_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a program with its fragment vector and services.
    Run {
        #[arg(long)]
        program: PathBuf,
        /// Fragment files, or one directory whose `*.is` files are taken in
        /// name order.
        #[arg(long, num_args = 1..)]
        fragments: Vec<PathBuf>,
        #[command(flatten)]
        exec: Exec,
    },
    /// Cyclic interleaving of a thread vector file.
    Interleave {
        #[arg(long)]
        vector: PathBuf,
        #[command(flatten)]
        exec: Exec,
    },
    /// Cyclic distributed interleaving of a distributed vector file.
    Distribute {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        exec: Exec,
    },
    /// Distributed interleaving with fragment searching.
    Fragsearch {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        exec: Exec,
    },
    /// Replace external selection by an appended selector fragment.
    Internalize {
        /// Thread vector file with one thread and its fragments.
        #[arg(long)]
        vector: PathBuf,
        /// Select by halving instead of one multi-way switch.
        #[arg(long)]
        binary: bool,
    },
    /// Print the process term of a thread, or of a use composition.
    Translate {
        /// A thread in the term syntax.
        #[arg(long, conflicts_with = "vector", required_unless_present = "vector")]
        thread: Option<String>,
        /// Thread vector file: the first thread, with the fragments.
        #[arg(long)]
        vector: Option<PathBuf>,
        /// Compose with the service for this focus from `--services`.
        #[arg(long, requires = "services")]
        focus: Option<String>,
        #[arg(long)]
        services: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Encoding::Literal)]
        encoding: Encoding,
        /// Print the reachable transition system as JSON instead.
        #[arg(long)]
        dump: bool,
        #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
        limit: usize,
    },
    /// Run the randomized axiom suites.
    CheckAxioms {
        /// One of the suite names, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, env = "POLYTHREAD_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Print the thread extracted from an instruction sequence.
    Extract {
        #[arg(long)]
        program: PathBuf,
    },
}

enum Failure {
    /// Bad input: exit status 2.
    Input(String),
    /// Failure while running: exit status 3.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn say(text: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn program_file(path: &Path) -> Result<Vec<Instr>, Failure> {
    parse_program(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn fragment_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    if let [dir] = paths {
        if dir.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "is"))
                .collect();
            files.sort();
            return Ok(files);
        }
    }
    Ok(paths.to_vec())
}

fn services(path: Option<&Path>) -> Result<ServiceMap, Failure> {
    match path {
        Some(p) => Ok(parse_services(&read(p)?)?),
        None => Ok(ServiceMap::new()),
    }
}

fn reply_source(spec: &str) -> Result<Box<dyn ReplySource>, Failure> {
    if let Some(seed) = spec.strip_prefix("seed:") {
        let seed = seed.trim().parse().map_err(|_| {
            Failure::Input(format!("replies `{spec}`: seed must be a natural number"))
        })?;
        return Ok(Box::new(RandomReplies::new(seed)));
    }
    if let Some(list) = spec.strip_prefix("script:") {
        return Ok(Box::new(ReplyScript::parse(list)?));
    }
    Err(Failure::Input(format!(
        "replies `{spec}`: expected seed:N or script:..."
    )))
}

impl Exec {
    /// Services first, then the reply source.
    fn environment(&self) -> Result<Environment, Failure> {
        let fallback = match &self.replies {
            Some(spec) => reply_source(spec)?,
            None => Box::new(RandomReplies::new(self.seed)),
        };
        Ok(Environment::new(services(self.services.as_deref())?).with_fallback(fallback))
    }

    fn resolver(&self) -> Result<Resolver, Failure> {
        Ok(Resolver::parse(&self.resolver)?)
    }

    fn emit(&self, trace: &Trace) {
        match self.format {
            Format::Json => {
                say(serde_json::to_string_pretty(&trace.to_json()).expect("serializable"))
            }
            Format::Text => say(trace),
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Run {
            program,
            fragments,
            exec,
        } => {
            let arch = Architecture {
                program: program_file(&program)?,
                fragments: fragment_files(&fragments)?
                    .iter()
                    .map(|p| program_file(p))
                    .collect::<Result<_, _>>()?,
                services: services(exec.services.as_deref())?,
            };
            let fallback = exec.replies.as_deref().map(reply_source).transpose()?;
            let trace = run_architecture(&arch, fallback, &mut exec.resolver()?, exec.max_steps)?;
            exec.emit(&trace);
            Ok(true)
        }
        Command::Interleave { vector, exec } => {
            let v = parse_thread_vector(&read(&vector)?)?;
            let trace = pci(
                &v.threads,
                &v.fragments,
                &mut exec.environment()?,
                &mut exec.resolver()?,
                exec.max_steps,
            )?;
            exec.emit(&trace);
            Ok(true)
        }
        Command::Distribute { config, exec } => {
            let c = parse_dist_config(&read(&config)?)?;
            let trace = pci_d(
                &c.plain(),
                &c.alpha,
                &c.locations,
                &mut exec.environment()?,
                &mut exec.resolver()?,
                exec.max_steps,
            )?;
            exec.emit(&trace);
            Ok(true)
        }
        Command::Fragsearch { config, exec } => {
            let c = parse_dist_config(&read(&config)?)?;
            let trace = pci_fs(
                &c.vector,
                &c.alpha,
                &c.locations,
                &mut exec.environment()?,
                &mut exec.resolver()?,
                exec.max_steps,
            )?;
            exec.emit(&trace);
            Ok(true)
        }
        Command::Internalize { vector, binary } => {
            let v = parse_thread_vector(&read(&vector)?)?;
            let [p] = v.threads.as_slice() else {
                return Err(Failure::Input(
                    "internalize needs exactly one thread".into(),
                ));
            };
            let (q, qs) = if binary {
                internalize_binary(p, &v.fragments)?
            } else {
                internalize(p, &v.fragments)?
            };
            say(print_thread_vector(&ThreadVector {
                threads: vec![q],
                fragments: qs,
            }));
            Ok(true)
        }
        Command::Translate {
            thread,
            vector,
            focus,
            services: service_file,
            encoding,
            dump,
            limit,
        } => {
            let (t, alpha) = match (thread, vector) {
                (Some(src), _) => (parse_thread(&src)?, Vec::new()),
                (None, Some(path)) => {
                    let v = parse_thread_vector(&read(&path)?)?;
                    let t = v.threads.first().cloned().unwrap_or(Thread::Stop);
                    (t, v.fragments)
                }
                (None, None) => unreachable!("required by the parser"),
            };
            let encoding = match encoding {
                Encoding::Literal => TlsEncoding::Literal,
                Encoding::Pattern => TlsEncoding::Pattern,
            };
            let term = match focus {
                Some(f) => {
                    let f = Focus::new(&f)?;
                    let map = services(service_file.as_deref())?;
                    let h = map.get(&f).ok_or_else(|| {
                        Failure::Input(format!("no service configured for focus `{f}`"))
                    })?;
                    translate_use(&t, &f, h, &alpha, encoding)?.compose()
                }
                None => translate_thread(&t, &alpha, encoding)?,
            };
            if dump {
                let v = transition_dump(&term, limit)?;
                say(serde_json::to_string_pretty(&v).expect("serializable"));
            } else {
                say(print_proc(&term));
            }
            Ok(true)
        }
        Command::CheckAxioms { suite, cases, seed } => {
            let suites: Vec<&str> = if suite == "all" {
                SUITES.to_vec()
            } else {
                vec![suite.as_str()]
            };
            let mut ok = true;
            for name in suites {
                let report = run_suite(name, cases, seed).map_err(|_| {
                    Failure::Input(format!(
                        "unknown suite `{name}`; expected all or one of {}",
                        SUITES.join(", ")
                    ))
                })?;
                ok &= report.ok();
                let _ = write!(std::io::stdout().lock(), "{report}");
            }
            say(if ok {
                "all axioms hold"
            } else {
                "axiom failures found"
            });
            Ok(ok)
        }
        Command::Extract { program } => {
            say(print_thread(&extract(&program_file(&program)?)));
            Ok(true)
        }
    }
}

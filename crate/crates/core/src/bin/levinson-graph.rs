use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use levinson_graph::eigen::hermitian_eigensystem;
use levinson_graph::error::Error;
use levinson_graph::graph::{spectral_decompose, GraphSpec};
use levinson_graph::instance::{read_spec, InstanceFile};
use levinson_graph::levinson::{
    classify, fuzz, reduce_degenerate_counted, verify_with, CensusCounts, FuzzConfig, InstanceOptions,
    VerificationReport, VerifyOptions, DEFAULT_GRID,
};
use levinson_graph::rational::{build_q_rational, winding_by_argument_principle, ReflectionForm};
use levinson_graph::winding::{track, winding_by_phase_tracking};

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_AMBIGUOUS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "levinson-graph",
    version,
    about = "Scattering and bound states of a graph with one semi-infinite tail"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and summarize it.
    Validate { path: PathBuf },
    /// Sample R(e^{ik}) on a uniform momentum grid and write a CSV trace.
    Reflect {
        path: PathBuf,
        #[arg(long, default_value_t = 360)]
        samples: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Levinson identity on an instance file or a fuzz batch.
    Verify {
        #[arg(required_unless_present = "fuzz")]
        path: Option<PathBuf>,
        /// Number of generated instances to verify instead of a file.
        #[arg(long, conflicts_with = "path")]
        fuzz: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_m: usize,
        #[arg(long)]
        force_half_bound: bool,
        #[arg(long)]
        force_confined: bool,
        #[arg(long)]
        json: bool,
        /// Replace the computed census with `m,n_b,n_h,n_c` (testing hook).
        #[arg(long, hide = true)]
        census_override: Option<String>,
    },
    /// Print the bound-state census with decay rates and energies.
    Bound {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Winding number of R around the unit circle.
    Winding {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Peel degenerate attachment vertices and write the reduced instance.
    Reduce {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Phase,
    Roots,
    Both,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }

    fn numeric(e: Error) -> Self {
        let code = if e.is_ambiguity() {
            EXIT_AMBIGUOUS
        } else {
            EXIT_VIOLATION
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Reflect { path, samples, out } => cmd_reflect(&path, samples, out.as_deref()),
        Command::Verify {
            path,
            fuzz,
            seed,
            max_m,
            force_half_bound,
            force_confined,
            json,
            census_override,
        } => match (path, fuzz) {
            (_, Some(count)) => {
                let mut cfg = FuzzConfig::new(count, seed, max_m);
                cfg.options = InstanceOptions {
                    force_half_bound,
                    force_confined,
                    ..Default::default()
                };
                cmd_fuzz(&cfg, json)
            }
            (Some(path), None) => cmd_verify(&path, json, census_override.as_deref()),
            (None, None) => Err(Failure::input("verify needs an instance path or --fuzz")),
        },
        Command::Bound { path, json } => cmd_bound(&path, json),
        Command::Winding { path, method } => cmd_winding(&path, method),
        Command::Reduce { path, out } => cmd_reduce(&path, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<(InstanceFile, GraphSpec), Failure> {
    read_spec(path).map_err(Failure::input)
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_validate(path: &Path) -> CmdResult {
    let (file, spec) = load(path)?;
    let eig = hermitian_eigensystem(spec.d()).map_err(Failure::numeric)?;
    if let Some(name) = &file.name {
        println!("name: {name}");
    }
    println!("m: {}", spec.m());
    println!("a: {}", spec.a());
    println!("|b|: {}", spec.b_norm());
    match (eig.first(), eig.last()) {
        (Some(lo), Some(hi)) => println!("spectrum of D: [{}, {}]", lo.value, hi.value),
        _ => println!("spectrum of D: empty"),
    }
    if spec.is_degenerate(levinson_graph::rational::DEGENERACY_TOL) {
        println!("note: a = 0 and |b| = 1; verify reduces this instance first");
    }
    Ok(0)
}

fn cmd_reflect(path: &Path, samples: usize, out: Option<&Path>) -> CmdResult {
    let (_, spec) = load(path)?;
    if samples == 0 {
        return Err(Failure::input("--samples must be positive"));
    }
    let sd = spectral_decompose(&spec).map_err(Failure::numeric)?;
    let form = ReflectionForm::from_spectral(&spec, &sd).reduced();
    // Track on a grid containing the requested one.
    let factor = 16usize.div_ceil(samples).max(1);
    let (_, trace) = track(&form, samples * factor).map_err(Failure::numeric)?;
    let mut csv = String::from("k,re_R,im_R,phase_unwrapped\n");
    for (i, s) in trace.samples.iter().filter(|s| s.on_grid).enumerate() {
        if i % factor == 0 {
            writeln!(csv, "{},{},{},{}", s.k, s.r.re, s.r.im, s.phase).unwrap();
        }
    }
    write_out(out, &csv)?;
    Ok(0)
}

fn parse_counts(s: &str) -> Result<CensusCounts, Failure> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::input(format!("bad --census-override: {e}")))?;
    match parts[..] {
        [m, n_b, n_h, n_c] => Ok(CensusCounts { m, n_b, n_h, n_c }),
        _ => Err(Failure::input("--census-override takes m,n_b,n_h,n_c")),
    }
}

fn report_exit(r: &VerificationReport) -> u8 {
    if r.holds {
        0
    } else if r.ambiguous {
        EXIT_AMBIGUOUS
    } else {
        EXIT_VIOLATION
    }
}

fn print_report(r: &VerificationReport) {
    let show = |v: Option<i64>| v.map_or("-".to_string(), |x| x.to_string());
    if r.reduced {
        println!(
            "reduced: {} degenerate vertices peeled (m {} -> {})",
            r.peels,
            r.original_m,
            r.original_m - r.peels
        );
    }
    if let Some(c) = r.counts {
        println!("m: {}  n_b: {}  n_h: {}  n_c: {}", c.m, c.n_b, c.n_h, c.n_c);
    }
    println!(
        "w_phase: {}  w_roots: {}  rhs: {}",
        show(r.w_phase),
        show(r.w_roots),
        show(r.rhs)
    );
    println!("holds: {}", r.holds);
    for d in &r.diagnostics {
        println!("  {d}");
    }
}

fn cmd_verify(path: &Path, json: bool, census_override: Option<&str>) -> CmdResult {
    let (_, spec) = load(path)?;
    let opts = VerifyOptions {
        n_initial: DEFAULT_GRID,
        census_override: census_override.map(parse_counts).transpose()?,
    };
    let report = verify_with(&spec, &opts);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        print_report(&report);
    }
    Ok(report_exit(&report))
}

fn cmd_fuzz(cfg: &FuzzConfig, json: bool) -> CmdResult {
    let (summary, _) = fuzz(cfg);
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    } else {
        println!("{}/{} hold", summary.held, summary.total);
        println!("violated: {}  flagged: {}", summary.violated, summary.flagged);
        for (i, diags) in &summary.failures {
            let (seed, m) = cfg.instance_params(*i);
            println!("  instance {i} (seed {seed}, m {m}): {}", diags.join("; "));
        }
    }
    Ok(if summary.violated > 0 {
        EXIT_VIOLATION
    } else if summary.flagged > 0 {
        EXIT_AMBIGUOUS
    } else {
        0
    })
}

fn cmd_bound(path: &Path, json: bool) -> CmdResult {
    let (_, spec) = load(path)?;
    let (spec, peels) = reduce_degenerate_counted(&spec);
    let census = classify(&spec).map_err(Failure::numeric)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&census).unwrap());
        return Ok(0);
    }
    if peels > 0 {
        println!("reduced: {peels} degenerate vertices peeled");
    }
    println!(
        "m: {}  n_b: {}  n_h: {}  n_c: {}",
        census.m, census.n_b, census.n_h, census.n_c
    );
    for s in &census.evanescent {
        println!(
            "evanescent: sign {:+}  z {}  kappa {}  energy {}",
            s.sign, s.z, s.kappa, s.energy
        );
    }
    if census.half_bound.at_plus_one {
        println!("half-bound: z = +1 (energy 2)");
    }
    if census.half_bound.at_minus_one {
        println!("half-bound: z = -1 (energy -2)");
    }
    for c in &census.confined {
        println!("confined: lambda {}", c.lambda);
    }
    Ok(0)
}

fn cmd_winding(path: &Path, method: Method) -> CmdResult {
    let (_, spec) = load(path)?;
    let (spec, _) = reduce_degenerate_counted(&spec);
    let sd = spectral_decompose(&spec).map_err(Failure::numeric)?;
    let q = build_q_rational(&spec, &sd).map_err(Failure::numeric)?;
    let mut found = Vec::new();
    if matches!(method, Method::Roots | Method::Both) {
        let w = winding_by_argument_principle(&q).map_err(Failure::numeric)?;
        println!(
            "roots: {} (zeros inside {}, poles inside {})",
            w.winding, w.zeros_inside, w.poles_inside
        );
        found.push(w.winding);
    }
    if matches!(method, Method::Phase | Method::Both) {
        let (w, trace) = winding_by_phase_tracking(&q, DEFAULT_GRID).map_err(Failure::numeric)?;
        println!("phase: {w} ({} samples)", trace.samples.len());
        found.push(w);
    }
    if found.windows(2).any(|p| p[0] != p[1]) {
        eprintln!("methods disagree");
        return Ok(EXIT_VIOLATION);
    }
    Ok(0)
}

fn cmd_reduce(path: &Path, out: Option<&Path>) -> CmdResult {
    let (file, spec) = load(path)?;
    let (reduced, peels) = reduce_degenerate_counted(&spec);
    let mut rf = InstanceFile::from_spec(&reduced);
    rf.name = file.name;
    rf.seed = file.seed;
    eprintln!("peeled {peels} vertices: m {} -> {}", spec.m(), reduced.m());
    write_out(out, &(rf.to_json() + "\n"))?;
    Ok(0)
}

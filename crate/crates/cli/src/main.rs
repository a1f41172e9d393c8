use clap::{Args, Parser, Subcommand, ValueEnum};
use flowfire::explore::{explore, ExploreBounds};
use flowfire::render::{render, RenderStyle};
use flowfire::strategies::{
    classify, complete_to_aztec, flood_escape, min_r_exceeding, published_min_r,
    quadrant_stabilize_config, sqrt3_threshold, stabilize_any, Decomposition,
};
use flowfire::{firing, FlowError, MarkedConfig, Trace};
use serde_json::json;
use std::io::{IsTerminal, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Flow-firing on the 2D grid with a marked face.
#[derive(Parser)]
#[command(name = "flowfire", version)]
struct Cli {
    /// Accepted for script compatibility; every command is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// The pulse K(n, r): weight n on every face within distance r.
    Pulse {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[command(flatten)]
        style: StyleArg,
    },
    /// The Aztec diamond az(n).
    Aztec {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        style: StyleArg,
    },
    /// Replays a trace, checking every move.
    Fire {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        style: StyleArg,
    },
    /// Runs a firing schedule and prints the final configuration and trace.
    Stabilize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "first")]
        policy: Policy,
        /// Also write the trace here as a JSON array of moves.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Exhaustive search of every reachable configuration.
    Explore {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to n + r + 2 with r the support radius.
        #[arg(long)]
        radius_cap: Option<u32>,
        #[arg(long, default_value_t = ExploreBounds::DEFAULT_MAX_STATES)]
        max_states: usize,
        #[arg(long)]
        max_depth: Option<u32>,
        /// 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Search the full state space instead of symmetry orbits.
        #[arg(long)]
        no_symmetry: bool,
    },
    /// Regime of the pulse K(n, r) and the weights involved.
    Classify {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Least radius whose pulse outweighs the Aztec diamond, per n.
    Table {
        #[arg(long, default_value_t = 3)]
        n_min: u32,
        #[arg(long, default_value_t = 24)]
        n_max: u32,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Draws a configuration.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        style: StyleArg,
    },
}

#[derive(Args)]
struct StyleArg {
    #[arg(long, default_value = "json", value_parser = parse_style)]
    style: RenderStyle,
}

fn parse_style(s: &str) -> Result<RenderStyle, String> {
    s.parse()
}

#[derive(Args)]
struct FormatArg {
    /// `auto` prints text on a terminal and JSON otherwise.
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Auto,
    Text,
    Json,
}

impl FormatArg {
    fn json(&self) -> bool {
        match self.format {
            Format::Auto => !std::io::stdout().is_terminal(),
            Format::Text => false,
            Format::Json => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Policy {
    First,
    Flood,
    Quadrant(Decomposition),
    ToAztec,
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "first" => Ok(Policy::First),
            "flood" => Ok(Policy::Flood),
            "quadrant:d1" => Ok(Policy::Quadrant(Decomposition::D1)),
            "quadrant:d2" => Ok(Policy::Quadrant(Decomposition::D2)),
            "to-aztec" => Ok(Policy::ToAztec),
            other => Err(format!(
                "unknown policy {other:?}; expected first, flood, quadrant:d1, quadrant:d2 or to-aztec"
            )),
        }
    }
}

#[derive(Debug)]
enum CliError {
    Io(PathBuf, std::io::Error),
    Flow(FlowError),
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        CliError::Flow(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Flow(e) => write!(f, "{e}"),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Io(path.into(), e))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))
}

fn read_config(path: &Path) -> Result<MarkedConfig, CliError> {
    Ok(MarkedConfig::from_json(&read_text(path)?)?)
}

fn read_trace(path: &Path) -> Result<Trace, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Flow(e.into()))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serialization is infallible")
}

fn run(cli: Cli) -> Result<String, CliError> {
    let out = match cli.cmd {
        Cmd::Pulse { n, r, style } => render(&MarkedConfig::pulse(n, r), style.style),
        Cmd::Aztec { n, style } => render(&MarkedConfig::aztec(n), style.style),
        Cmd::Fire { config, trace, style } => {
            let c = read_config(&config)?;
            let t = read_trace(&trace)?;
            render(&firing::replay(&c, &t)?, style.style)
        }
        Cmd::Stabilize { config, policy, trace_out } => {
            let c = read_config(&config)?;
            let (end, trace, extra) = stabilize(&c, policy)?;
            if let Some(p) = trace_out {
                std::fs::write(&p, pretty(&trace)).map_err(|e| CliError::Io(p, e))?;
            }
            let mut v = json!({
                "stable": firing::is_stable(&end),
                "is_aztec": end == MarkedConfig::aztec(end.n()),
                "config": end,
                "trace": trace,
            });
            if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
                obj.extend(more);
            }
            pretty(&v)
        }
        Cmd::Explore {
            config,
            radius_cap,
            max_states,
            max_depth,
            threads,
            no_symmetry,
        } => {
            let c = read_config(&config)?;
            let mut b = ExploreBounds::for_config(&c)
                .with_max_states(max_states)
                .with_threads(threads)
                .with_symmetry(!no_symmetry);
            if let Some(cap) = radius_cap {
                b = b.with_radius_cap(cap);
            }
            if let Some(d) = max_depth {
                b = b.with_max_depth(d);
            }
            explore(&c, &b)?.to_json()
        }
        Cmd::Classify { n, r, format } => {
            let rep = classify(n, r);
            if format.json() {
                pretty(&rep)
            } else {
                format!(
                    "K({n},{r}): regime {}\npulse weight {} vs aztec weight {}{}\nceil(n/2) = {}, ceil(n/sqrt3)+1 = {}\n",
                    serde_json::to_value(rep.regime).unwrap().as_str().unwrap(),
                    rep.pulse_weight,
                    rep.aztec_weight,
                    if rep.aztec_excluded_by_weight {
                        " (the Aztec diamond is unreachable)"
                    } else {
                        ""
                    },
                    rep.half_bound,
                    rep.sqrt3_threshold,
                )
            }
        }
        Cmd::Table { n_min, n_max, format } => table(n_min, n_max, format.json()),
        Cmd::Render { config, style } => render(&read_config(&config)?, style.style),
    };
    Ok(out)
}

fn stabilize(c: &MarkedConfig, policy: Policy) -> Result<(MarkedConfig, Trace, serde_json::Value), FlowError> {
    Ok(match policy {
        Policy::First => {
            let run = stabilize_any(c)?;
            (run.config, run.trace, json!({}))
        }
        Policy::ToAztec => {
            let run = complete_to_aztec(c, c.n())?;
            (run.config, run.trace, json!({}))
        }
        Policy::Flood => {
            let flood = flood_escape(c, c.n())?;
            let rest = stabilize_any(&flood.config)?;
            let extra = json!({
                "escaped": flood.escaped,
                "flood_moves": flood.trace.len(),
                "rounds": flood.rounds,
            });
            let mut trace = flood.trace;
            trace.extend(rest.trace);
            (rest.config, trace, extra)
        }
        Policy::Quadrant(d) => {
            let run = quadrant_stabilize_config(c, d)?;
            let extra = json!({
                "rounds": run.rounds,
                "marked_moves": run.marked_moves,
                "fallback_moves": run.fallback_moves,
            });
            (run.config, run.trace, extra)
        }
    })
}

fn table(n_min: u32, n_max: u32, as_json: bool) -> String {
    let rows: Vec<_> = (n_min..=n_max)
        .map(|n| {
            let formula = min_r_exceeding(n);
            let published = published_min_r(n);
            let note = match (formula, published) {
                (Some(f), Some(p)) if f != p => Some(format!(
                    "published value {p} disagrees with the weight formula ({f})"
                )),
                _ => None,
            };
            (n, n.div_ceil(2), formula, published, sqrt3_threshold(n), note)
        })
        .collect();
    if as_json {
        let v: Vec<_> = rows
            .iter()
            .map(|(n, half, formula, published, t, note)| {
                json!({
                    "n": n,
                    "half_bound": half,
                    "min_r": formula,
                    "published_min_r": published,
                    "sqrt3_threshold": t,
                    "note": note,
                })
            })
            .collect();
        return pretty(&v);
    }
    let mut out = String::from("   n  ceil(n/2)  min r  ceil(n/sqrt3)+1\n");
    for (n, half, formula, _, t, note) in rows {
        let f = formula.map_or("-".to_string(), |f| f.to_string());
        out.push_str(&format!("{n:>4}  {half:>9}  {f:>5}  {t:>15}"));
        if let Some(note) = note {
            out.push_str(&format!("  * {note}"));
        }
        out.push('\n');
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = cli.seed;
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

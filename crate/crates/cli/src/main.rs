//! `sobext`: decomposition, functionals, extension and verification from the
//! command line.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when an internal check fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use sobext_core::instances::{self, Family};
use sobext_core::io::{self, Input};
use sobext_core::svg::{self, RenderOptions};
use sobext_core::verify::{self, quadrature::DEFAULT_REFINE};
use sobext_core::{Error, ExtensionField, Model};

#[derive(Parser, Debug)]
#[command(name = "sobext", version, about = "Sobolev extension of data on a line")]
struct Cli {
    /// Worker threads for the parallel stages.
    #[arg(long, global = true, env = "SOBEXT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SitesArg {
    /// JSON `{"sites": [...], "values": [...]}`.
    #[arg(long)]
    sites: PathBuf,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    sites: PathBuf,
    /// Values as `[...]` or `{"values": [...]}`; defaults to the sites file.
    #[arg(long)]
    values: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the CZ decomposition.
    Decompose {
        #[command(flatten)]
        input: SitesArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write groups, towers, gangs and special points.
    Groups {
        #[command(flatten)]
        input: SitesArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the functional family.
    Functionals {
        #[command(flatten)]
        input: SitesArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print Σ λ|ℓ(f)|^p, one line per p.
    Norm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "1.5")]
        p: Vec<f64>,
    },
    /// Sample the extension on a grid of user coordinates.
    Extend {
        #[command(flatten)]
        data: DataArgs,
        /// `WxH`.
        #[arg(long)]
        grid: String,
        /// `x0,y0,x1,y1`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        bbox: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the extension at one user-coordinate point.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// `x,y`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        at: Vec<f64>,
    },
    /// Quadrature and variational oracle against the functional sum.
    Verify {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "1.25,1.5,1.75")]
        p: Vec<f64>,
        /// Oracle grid sizes, odd and at least 33.
        #[arg(long, value_delimiter = ',', default_value = "129")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_REFINE)]
        refine: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw the decomposition as SVG.
    Render {
        #[command(flatten)]
        input: SitesArg,
        #[arg(long)]
        svg: PathBuf,
        /// `x0,y0,x1,y1` in the normalized frame.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        view: Option<Vec<f64>>,
        #[arg(long)]
        no_towers: bool,
        #[arg(long)]
        no_gangs: bool,
    },
    /// Generate an instance file.
    Gen {
        /// uniform | cluster | near-pair | grid
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn model_from(path: &Path) -> anyhow::Result<(Input, Model)> {
    let input = Input::read(path)?;
    let model = Model::new(input.site_set()?)?;
    model.audit().into_result()?;
    Ok((input, model))
}

/// Model plus data in sorted-site order.
fn data_from(args: &DataArgs) -> anyhow::Result<(Model, Vec<f64>)> {
    let (input, model) = model_from(&args.sites)?;
    let raw = match &args.values {
        Some(p) => io::read_values(p)?,
        None => match input.values {
            Some(v) => v,
            None => bail!(Error::input("no values: pass --values or include them in the sites file")),
        },
    };
    let sorted = model.sites.sorted_values(&raw)?;
    Ok((model, sorted))
}

fn pair(v: &[f64], what: &str) -> anyhow::Result<(f64, f64)> {
    match v {
        [a, b] if a.is_finite() && b.is_finite() => Ok((*a, *b)),
        _ => bail!(Error::input(format!("{what} needs two finite numbers"))),
    }
}

fn quad(v: &[f64], what: &str) -> anyhow::Result<[f64; 4]> {
    match v {
        [a, b, c, d] => Ok([*a, *b, *c, *d]),
        _ => bail!(Error::input(format!("{what} needs four numbers x0,y0,x1,y1"))),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Decompose { input, out } => {
            let (_, m) = model_from(&input.sites)?;
            write_out(&out, &io::to_json(&io::cz_doc(&m))?)
        }
        Command::Groups { input, out } => {
            let (_, m) = model_from(&input.sites)?;
            write_out(&out, &io::to_json(&io::groups_doc(&m))?)
        }
        Command::Functionals { input, out } => {
            let (_, m) = model_from(&input.sites)?;
            write_out(&out, &io::to_json(&io::family_doc(&m))?)
        }
        Command::Norm { data, p } => {
            let (m, values) = data_from(&data)?;
            for p in p {
                println!("{}", m.family.evaluate_norm(&values, p)?);
            }
            Ok(())
        }
        Command::Extend { data, grid, bbox, out } => {
            let (w, h) = grid
                .split_once(['x', 'X', '×'])
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| Error::input(format!("bad grid {grid:?}, expected WxH")))?;
            let bbox = quad(&bbox, "--bbox")?;
            let (m, values) = data_from(&data)?;
            let field = ExtensionField::new(&m, &values)?;
            write_out(&out, &io::to_json(&io::field_doc(&field, w, h, bbox)?)?)
        }
        Command::Eval { data, at } => {
            let (x, y) = pair(&at, "--at")?;
            let (m, values) = data_from(&data)?;
            let field = ExtensionField::new(&m, &values)?;
            let e = field.evaluate_user(x, y)?;
            let order = m.sites.order();
            let witnesses: Vec<usize> = e.witnesses.iter().map(|&k| order[k]).collect();
            let doc = serde_json::json!({ "at": [x, y], "jet": e.jet, "witnesses": witnesses });
            print!("{}", io::to_json(&doc)?);
            Ok(())
        }
        Command::Verify { data, p, grid, order, refine, out } => {
            let (m, values) = data_from(&data)?;
            let field = ExtensionField::new(&m, &values)?;
            let report = verify::comparability_report(&field, &p, &grid, order, refine)?;
            let doc = serde_json::json!({
                "rows": report.rows,
                "quadrature": report.quadrature.iter().map(|q| serde_json::json!({
                    "p": q.p, "total": q.total, "user_total": q.user_total, "order": q.order, "refine": q.refine,
                })).collect::<Vec<_>>(),
                "oracle": report.oracles,
            });
            write_out(&out, &io::to_json(&doc)?)
        }
        Command::Render { input, svg: path, view, no_towers, no_gangs } => {
            let (_, m) = model_from(&input.sites)?;
            let mut opts = RenderOptions { towers: !no_towers, gangs: !no_gangs, ..RenderOptions::default() };
            if let Some(v) = view {
                opts.view = quad(&v, "--view")?;
                if opts.view[0] >= opts.view[2] || opts.view[1] >= opts.view[3] {
                    bail!(Error::input("--view must have x0 < x1 and y0 < y1"));
                }
            }
            write_out(&path, &svg::render(&m, &opts))
        }
        Command::Gen { family, n, seed, out } => {
            let fam: Family = family.parse()?;
            let inst = instances::generate(fam, n, seed)?;
            let text = io::to_json(&inst.to_input())?;
            match out {
                Some(p) => write_out(&p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Invariant(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use scarquench::groundstate::{GroundResolution, Resolver};
use scarquench::io::{self as sio, EigenvectorFile, MapField};
use scarquench::operators::{build_local_observable, build_post_quench, build_prequench};
use scarquench::quench::{
    effective_dimension, effective_dimension_unclustered, loschmidt, observable_evolution, time_grid,
};
use scarquench::scan::{scan_grid, size_scaling, AxisRange, PrequenchSolver, ScalingMode};
use scarquench::sector::all_sectors;
use scarquench::spectra::{diagonalize_full, diagonalize_sectors, project_to_sector};
use scarquench::{
    Axis, ConstrainedBasis, Error, PostQuench, PrequenchParams, Result, Route, ScanGrid, SpectralDecomposition,
    DEFAULT_ZFIELD_EPS,
};
use serde_json::{json, Value};

use config::Settings;

/// Echo level that counts as decayed; a later maximum above it is a revival.
const REVIVAL_THRESHOLD: f64 = 0.05;

#[derive(Parser)]
#[command(name = "scarquench", version, about = "Quench dynamics of the blockaded Rydberg chain")]
struct Cli {
    /// Key-value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (env SCARQUENCH_OUT_DIR if unset).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scan and scaling; other commands run on one.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constrained basis dimension, optionally dumped as CSV to stdout.
    Basis {
        #[arg(long = "L")]
        len: Option<usize>,
        #[arg(long)]
        dump: bool,
    },
    /// Eigenvalues of the PXP or pre-quench Hamiltonian.
    Spectrum {
        #[command(flatten)]
        params: Params,
        /// pxp | prequench
        #[arg(long)]
        model: Option<String>,
        /// Also write eigenvectors.bin.
        #[arg(long)]
        vectors: bool,
        /// Also write operator.csv.
        #[arg(long)]
        dump_operator: bool,
    },
    /// Resolve the pre-quench ground state.
    Groundstate {
        #[command(flatten)]
        params: Params,
    },
    /// Quench the pre-quench ground state into PXP.
    Quench {
        #[command(flatten)]
        params: Params,
        #[arg(long, allow_negative_numbers = true)]
        t_max: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated single-site observables such as `z1,y1`.
        #[arg(long)]
        observables: Option<String>,
    },
    /// Sweep (g2x, g2y) at fixed detuning.
    Scan {
        #[arg(long = "L")]
        len: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        g2x_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        g2x_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        g2y_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        g2y_max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Effective dimension versus chain length.
    Scaling {
        /// Comma-separated chain lengths.
        #[arg(long = "L")]
        lens: Option<String>,
        /// fixed | reoptimize
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        g2x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        g2y: Option<f64>,
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        coarse_step: Option<f64>,
        #[arg(long)]
        fine_step: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Args)]
struct Params {
    #[arg(long = "L")]
    len: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    g2x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    g2y: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// full | sectors
    #[arg(long)]
    route: Option<String>,
}

struct Resolved {
    len: usize,
    pre: PrequenchParams,
    eps: f64,
    route: Route,
}

impl Params {
    fn resolve(self, s: &mut Settings, eps_default: f64) -> Result<Resolved> {
        let len = s.get("L", self.len, 12)?;
        let delta = s.get("delta", self.delta, -1.0)?;
        let g2x = s.get("g2x", self.g2x, 0.0)?;
        let g2y = s.get("g2y", self.g2y, 0.0)?;
        let eps = s.get("eps", self.eps, eps_default)?;
        let route = s.get("route", self.route, "sectors".into())?.parse()?;
        Ok(Resolved { len, pre: PrequenchParams::new(g2x, g2y, delta), eps, route })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match &e {
                Error::InvalidArgument(_) => "invalid_argument",
                Error::ResourceLimit { .. } => "resource_limit",
                Error::ResolutionAbort(_) => "resolution_abort",
                Error::SymmetryViolation(_) => "symmetry_violation",
                Error::EmptyResult => "empty_result",
                Error::Eigensolver => "eigensolver",
                Error::Io(_) | Error::Json(_) => "io",
            };
            eprintln!("{}", json!({ "error": kind, "message": e.to_string(), "exit_code": e.exit_code() }));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut s = Settings::new(cli.config.as_deref())?;
    let parallel = matches!(cli.command, Command::Scan { .. } | Command::Scaling { .. });
    let threads = match s.threads(cli.threads)? {
        Some(0) => return Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => n,
        None if parallel => std::thread::available_parallelism().map_or(1, |n| n.get()),
        None => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let out = s.out_dir(cli.out);

    match cli.command {
        Command::Basis { len, dump } => {
            s.note("command", "basis");
            let len = s.get("L", len, 12)?;
            let dump = s.switch("dump", dump)?;
            s.finish()?;
            let basis = ConstrainedBasis::new(len)?;
            let stdout = io::stdout();
            let mut w = stdout.lock();
            if dump {
                sio::write_basis_csv(&mut w, &basis, &s.echo())?;
            } else {
                writeln!(w, "L={len} dimension={}", basis.dim())?;
            }
            Ok(())
        }
        Command::Spectrum { params, model, vectors, dump_operator } => {
            s.note("command", "spectrum");
            let model = s.get("model", model, "pxp".into())?;
            let r = params.resolve(&mut s, 0.0)?;
            let vectors = s.switch("vectors", vectors)?;
            let dump_operator = s.switch("dump_operator", dump_operator)?;
            s.finish()?;
            let basis = Arc::new(ConstrainedBasis::new(r.len)?);
            let h = match model.as_str() {
                "pxp" => build_post_quench(basis.clone(), 1.0, r.eps),
                "prequench" => build_prequench(basis.clone(), r.pre),
                _ => return Err(Error::InvalidArgument(format!("unknown model {model:?} (pxp|prequench)"))),
            };
            let spectrum: SpectralDecomposition = match r.route {
                Route::Full => diagonalize_full(&h)?.into(),
                Route::Sectors => {
                    let sectors: Vec<_> = all_sectors(&basis, true)?.into_iter().map(Arc::new).collect();
                    diagonalize_sectors(&h, &basis, &sectors)?
                }
            };
            let echo = s.echo();
            fs::create_dir_all(&out)?;
            write_file(&out, "spectrum.csv", |w| sio::write_spectrum_csv(w, &spectrum, &echo))?;
            if dump_operator {
                write_file(&out, "operator.csv", |w| sio::write_operator_csv(w, &h, &echo))?;
            }
            if vectors {
                write_file(&out, "eigenvectors.bin", |w| EigenvectorFile::from_spectrum(r.len, &spectrum).write(w))?;
            }
            println!("wrote {} eigenvalues to {}", spectrum.dim(), out.display());
            Ok(())
        }
        Command::Groundstate { params } => {
            s.note("command", "groundstate");
            let r = params.resolve(&mut s, DEFAULT_ZFIELD_EPS)?;
            s.finish()?;
            let basis = Arc::new(ConstrainedBasis::new(r.len)?);
            let res = resolve_ground(&basis, &r)?;
            let report = json_report(&s.echo(), res.report_json());
            fs::create_dir_all(&out)?;
            write_json(&out, "resolution.json", &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Quench { params, t_max, dt, observables } => {
            s.note("command", "quench");
            let r = params.resolve(&mut s, DEFAULT_ZFIELD_EPS)?;
            let t_max = s.get("t_max", t_max, 40.0)?;
            let dt = s.get("dt", dt, 0.02)?;
            let observables = s.get("observables", observables, "z1,y1".into())?;
            s.finish()?;
            let times = time_grid(t_max, dt)?;
            let names: Vec<&str> = observables.split(',').map(str::trim).filter(|n| !n.is_empty()).collect();
            let obs_specs = names.iter().map(|n| parse_observable(n, r.len)).collect::<Result<Vec<_>>>()?;

            let post = PostQuench::new(r.len, r.eps, r.route)?;
            let res = resolve_ground(&post.basis, &r)?;
            let ov = post.overlaps(&res.state)?;
            let echo = s.echo();
            fs::create_dir_all(&out)?;
            let echo_series = loschmidt(&ov, &times);
            write_file(&out, "loschmidt.csv", |w| sio::write_series_csv(w, &echo_series, &echo))?;
            write_file(&out, "overlaps.csv", |w| sio::write_overlaps_csv(w, &ov, &echo))?;
            for (name, (site, axis)) in names.iter().zip(obs_specs) {
                let o = build_local_observable(post.basis.clone(), site, axis)?;
                let series = observable_evolution(&res.state, &post.spectrum, &o, &times)?;
                write_file(&out, &format!("obs_{name}.csv"), |w| sio::write_series_csv(w, &series, &echo))?;
            }
            let deff = effective_dimension(&ov);
            let body = json!({
                "gap": res.delta,
                "deff": deff,
                "deff_unclustered": effective_dimension_unclustered(&ov),
                "energy_expectation": post.pxp_energy(&res.state),
                "first_revival": echo_series.first_revival(REVIVAL_THRESHOLD),
                "max_after_decay": echo_series.max_after_decay(REVIVAL_THRESHOLD),
                "selection": res.report_json(),
            });
            write_json(&out, "report.json", &json_report(&echo, body))?;
            println!("deff={deff}");
            Ok(())
        }
        Command::Scan { len, delta, g2x_min, g2x_max, g2y_min, g2y_max, step, eps } => {
            s.note("command", "scan");
            let len = s.get("L", len, 12)?;
            let delta = s.get("delta", delta, -1.0)?;
            let step = s.get("step", step, 0.02)?;
            let grid = ScanGrid {
                len,
                delta,
                g2x: AxisRange::new(s.get("g2x_min", g2x_min, -1.0)?, s.get("g2x_max", g2x_max, 1.0)?, step)?,
                g2y: AxisRange::new(s.get("g2y_min", g2y_min, -1.0)?, s.get("g2y_max", g2y_max, 1.0)?, step)?,
            };
            let eps = s.get("eps", eps, DEFAULT_ZFIELD_EPS)?;
            s.note("threads", threads);
            s.finish()?;
            grid.validate()?;
            let post = PostQuench::new(len, eps, Route::Sectors)?;
            let solver = PrequenchSolver::new(&post);
            let result = scan_grid(&grid, &post, &solver)?;
            let echo = s.echo();
            fs::create_dir_all(&out)?;
            write_file(&out, "delta_map.csv", |w| sio::write_map_csv(w, &result, MapField::Gap, &echo))?;
            write_file(&out, "deff_map.csv", |w| sio::write_map_csv(w, &result, MapField::Deff, &echo))?;
            write_file(&out, "failures.csv", |w| sio::write_failures_csv(w, &result, &echo))?;
            let optimum = result.optimum.ok_or(Error::EmptyResult);
            let body = match &optimum {
                Ok(opt) => {
                    let rec = result
                        .points
                        .iter()
                        .find(|p| p.g2x == opt.g2x && p.g2y == opt.g2y)
                        .expect("optimum is a grid point");
                    json!({ "g2x": opt.g2x, "g2y": opt.g2y, "deff": opt.deff, "point": rec,
                            "points": result.points.len(), "failures": result.failures().count() })
                }
                Err(_) => json!({ "points": result.points.len(), "failures": result.failures().count() }),
            };
            write_json(&out, "optimum.json", &json_report(&echo, body))?;
            let opt = optimum?;
            println!("optimum g2x={} g2y={} deff={}", opt.g2x, opt.g2y, opt.deff);
            Ok(())
        }
        Command::Scaling { lens, mode, delta, g2x, g2y, half_width, coarse_step, fine_step, eps } => {
            s.note("command", "scaling");
            let lens_text = s.get("L", lens, "10,12,14,16".into())?;
            let lens = lens_text
                .split(',')
                .map(|t| {
                    t.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad chain length {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            for &l in &lens {
                scarquench::basis::check_len(l)?;
            }
            let mode_name = s.get("mode", mode, "reoptimize".into())?;
            let mode = match mode_name.as_str() {
                "fixed" => ScalingMode::Fixed(PrequenchParams::new(
                    s.get("g2x", g2x, 0.0)?,
                    s.get("g2y", g2y, 0.0)?,
                    s.get("delta", delta, -1.0)?,
                )),
                "reoptimize" => ScalingMode::Reoptimize {
                    half_width: s.get("half_width", half_width, 1.0)?,
                    coarse_step: s.get("coarse_step", coarse_step, 0.1)?,
                    fine_step: s.get("fine_step", fine_step, 0.02)?,
                },
                _ => return Err(Error::InvalidArgument(format!("unknown mode {mode_name:?} (fixed|reoptimize)"))),
            };
            let eps = s.get("eps", eps, DEFAULT_ZFIELD_EPS)?;
            s.note("threads", threads);
            s.finish()?;
            let rows = size_scaling(&lens, mode, eps)?;
            fs::create_dir_all(&out)?;
            write_file(&out, "scaling.csv", |w| sio::write_scaling_csv(w, &rows, &s.echo()))?;
            for r in &rows {
                match r.deff {
                    Some(d) => println!("L={} g2x={} g2y={} deff={d}", r.len, r.g2x, r.g2y),
                    None => println!("L={} failed: {}", r.len, r.error.as_deref().unwrap_or("")),
                }
            }
            Ok(())
        }
    }
}

fn resolve_ground(basis: &Arc<ConstrainedBasis>, r: &Resolved) -> Result<GroundResolution> {
    let h = build_prequench(basis.clone(), r.pre);
    let resolver = Resolver::new(basis.clone());
    match r.route {
        Route::Full => resolver.resolve(&h),
        Route::Sectors => {
            let sectors: Vec<_> = all_sectors(basis, true)?.into_iter().map(Arc::new).collect();
            let blocks: Vec<Vec<f64>> = sectors.iter().map(|sec| project_to_sector(&h, sec)).collect();
            resolver.resolve_blocks(&sectors, &blocks)
        }
    }
}

/// `z1` → (1, Z).
fn parse_observable(name: &str, len: usize) -> Result<(usize, Axis)> {
    let bad = || Error::InvalidArgument(format!("observable {name:?}: expected axis then site, e.g. z1"));
    let axis: Axis = name.get(..1).ok_or_else(bad)?.parse()?;
    let site: usize = name[1..].parse().map_err(|_| bad())?;
    if site == 0 || site > len {
        return Err(Error::InvalidArgument(format!("observable {name:?}: site outside 1..={len}")));
    }
    Ok((site, axis))
}

fn json_report(config: &Value, body: Value) -> Value {
    json!({ "scarquench": scarquench::VERSION, "config": config, "result": body })
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<()> {
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, v)?;
        writeln!(w)?;
        Ok(())
    })
}

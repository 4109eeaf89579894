//! Command-line front end: loads a TOML run configuration, drives the
//! library pipelines, and writes CSV artifacts plus a hash manifest.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use jumplat::conditions::{check_c2_c3_c4, check_dirichlet_route, check_semimartingale_route, check_t3_to_t6, check_ts_family};
use jumplat::config::RunConfig;
use jumplat::discretize::ConductanceMatrix;
use jumplat::expr::Expression;
use jumplat::forms::alpha0_n;
use jumplat::pipeline::{build_matrix, convergence_sweep};
use jumplat::semigroup::{strong_semigroup_error, ReferenceSemigroup};
use jumplat::{simulate_path, Error as CoreError, PathSample};

#[derive(Parser)]
#[command(name = "jumplat", version, about = "Lattice chain approximation of pure-jump processes")]
struct Cli {
    /// Run configuration (TOML). Defaults are printed by --print-defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides simulation.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print the default configuration as TOML and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the conductance matrix (one per lattice.n_list entry) plus a summary.
    Discretize,
    /// Simulate the chain ensemble from a previously exported matrix.
    Simulate {
        /// Matrix file written by `discretize`.
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Run the convergence-condition checkers and write one CSV per report.
    Check {
        /// Matrix file for the discrete checks.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Strong L2 semigroup error against the reference stable law, per lattice.
    Semigroup,
    /// Full convergence sweep over lattice.n_list.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", toml::to_string_pretty(&RunConfig::example()).expect("default config serializes"));
        return ExitCode::SUCCESS;
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Exit codes: 2 for configuration problems, 3 for numeric failures, 4 for I/O.
fn classify(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::InvalidParameter { .. } | CoreError::Parse(_) => 2,
                CoreError::Io(_) => 4,
                _ => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 4;
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return 2;
        }
    }
    3
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| anyhow!(CoreError::invalid("command", "expected one of: discretize, simulate, check, semigroup, sweep")))?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| anyhow!(CoreError::invalid("threads", e.to_string())))?;
    }
    let (mut cfg, config_path) = load_config(cli)?;
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    cfg.validate()?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;

    let mut outputs = write_resolved_config(&cfg, &cli.out)?;
    let (name, mut produced) = match command {
        Command::Discretize => ("discretize", cmd_discretize(&cfg, &cli.out)?),
        Command::Simulate { matrix } => ("simulate", cmd_simulate(&cfg, matrix, &cli.out)?),
        Command::Check { matrix } => ("check", cmd_check(&cfg, matrix.as_deref(), &cli.out)?),
        Command::Semigroup => ("semigroup", cmd_semigroup(&cfg, &cli.out)?),
        Command::Sweep => ("sweep", cmd_sweep(&cfg, &cli.out)?),
    };
    outputs.append(&mut produced);
    write_manifest(name, config_path.as_deref(), &outputs, &cli.out)?;
    Ok(())
}

fn load_config(cli: &Cli) -> anyhow::Result<(RunConfig, Option<PathBuf>)> {
    match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok((cfg, Some(path.clone())))
        }
        None => Ok((RunConfig::example(), None)),
    }
}

fn lattice_list(cfg: &RunConfig) -> Vec<u32> {
    cfg.lattice.n_list.clone().unwrap_or_else(|| vec![cfg.lattice.n])
}

fn write_resolved_config(cfg: &RunConfig, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let path = out.join("resolved_config.toml");
    fs::write(&path, toml::to_string_pretty(cfg)?)?;
    Ok(vec![path])
}

fn write_manifest(command: &str, config: Option<&Path>, outputs: &[PathBuf], out: &Path) -> anyhow::Result<()> {
    let mut entries = Vec::new();
    for p in outputs {
        entries.push(serde_json::json!({
            "path": p.file_name().and_then(|n| n.to_str()).unwrap_or_default(),
            "sha256": sha256_file(p)?,
        }));
    }
    let manifest = serde_json::json!({
        "tool": "jumplat",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "format_version": 1,
        "command": command,
        "config": config.map(|p| serde_json::json!({
            "path": p.display().to_string(),
            "sha256": sha256_file(p).unwrap_or_default(),
        })),
        "outputs": entries,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut h = Sha256::new();
    h.update(&bytes);
    let digest = h.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn cmd_discretize(cfg: &RunConfig, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut outputs = Vec::new();
    let mut summary = String::from("# per-lattice discretization summary\n");
    for n in lattice_list(cfg) {
        let c = build_matrix(cfg, n)?;
        let path = out.join(format!("matrix_n{n}.cm"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        c.export(&mut w)?;
        w.flush()?;
        let states = c.num_states();
        let (max_lost, sum_lost) = (0..states as u32).fold((0.0f64, 0.0f64), |(m, s), a| {
            let l = c.lost_rate(a);
            (m.max(l), s + l)
        });
        summary.push_str(&format!(
            "[[matrix]]\nn = {n}\nfile = \"matrix_n{n}.cm\"\nstates = {states}\nentries = {}\nmax_rate = {:.12e}\nalpha0_n = {:.12e}\nmax_lost_rate = {:.12e}\nmean_lost_rate = {:.12e}\n\n",
            c.num_entries(),
            c.max_rate(),
            alpha0_n(&c),
            max_lost,
            sum_lost / states as f64,
        ));
        println!(
            "n = {n}: {states} states, {} entries, max rate {:.6e}, alpha0_n {:.6e}",
            c.num_entries(),
            c.max_rate(),
            alpha0_n(&c)
        );
        outputs.push(path);
    }
    let spath = out.join("discretize_summary.toml");
    fs::write(&spath, summary)?;
    outputs.push(spath);
    Ok(outputs)
}

fn load_matrix(path: &Path, cfg: &RunConfig) -> anyhow::Result<ConductanceMatrix> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    let c = ConductanceMatrix::import(&mut r)?;
    if c.lattice.dim != cfg.dim() {
        return Err(anyhow!(CoreError::invalid(
            "matrix",
            format!("matrix dimension {} does not match config dimension {}", c.lattice.dim, cfg.dim()),
        )));
    }
    Ok(c)
}

fn cmd_simulate(cfg: &RunConfig, matrix: &Path, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let c = load_matrix(matrix, cfg)?;
    let scfg = cfg.simulation_config();
    scfg.validate()?;
    let paths: Vec<PathSample> = (0..scfg.n_paths as u64)
        .map(|i| simulate_path(&c, &scfg, i))
        .collect::<Result<_, _>>()?;
    let dim = c.lattice.dim;
    let mut outputs = Vec::new();
    for (j, &t) in scfg.marginal_times.iter().enumerate() {
        let path = out.join(format!("marginal_{j}.csv"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        let coords: String = (1..=dim).map(|i| format!(",x{i}")).collect();
        writeln!(w, "path,absorbed{coords}")?;
        for (i, p) in paths.iter().enumerate() {
            match p.state_at(t) {
                Some(s) => {
                    let point = c.lattice.state_point(s);
                    let cols: String = point.iter().map(|v| format!(",{v}")).collect();
                    writeln!(w, "{i},0{cols}")?;
                }
                None => writeln!(w, "{i},1{}", ",".repeat(dim))?,
            }
        }
        w.flush()?;
        outputs.push(path);
    }
    let absorbed = paths.iter().filter(|p| p.absorbed).count();
    let mean_jumps = paths.iter().map(|p| p.num_jumps() as f64).sum::<f64>() / paths.len() as f64;
    let spath = out.join("simulate_summary.toml");
    fs::write(
        &spath,
        format!(
            "n_paths = {}\nhorizon = {}\nseed = {}\nabsorbed_fraction = {}\nmean_jumps = {}\n",
            scfg.n_paths,
            scfg.horizon,
            scfg.seed,
            absorbed as f64 / paths.len() as f64,
            mean_jumps,
        ),
    )?;
    println!(
        "{} paths over [0, {}]: absorbed fraction {:.4}, mean jumps {:.2}",
        scfg.n_paths,
        scfg.horizon,
        absorbed as f64 / paths.len() as f64,
        mean_jumps
    );
    outputs.push(spath);
    Ok(outputs)
}

fn cmd_check(cfg: &RunConfig, matrix: Option<&Path>, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let probes = cfg.probe_grid();
    let cc = &cfg.conditions;
    let spec = &cfg.quadrature;
    let mut reports = Vec::new();
    match cfg.scheme.kind.as_str() {
        "dirichlet" => {
            let k = cfg.build_kernel()?.expect("validated");
            reports.push(check_dirichlet_route(&k, &cc.rho_grid, &cc.r_grid, &cc.eps_grid, &probes, spec)?);
            let matrix = matrix.ok_or_else(|| {
                anyhow!(CoreError::invalid("matrix", "the discrete checks need --matrix FILE from `discretize`"))
            })?;
            let c = load_matrix(matrix, cfg)?;
            reports.push(check_t3_to_t6(&c, cc.rho, &cc.r_grid)?);
            reports.push(check_c2_c3_c4(&k, &c, &cc.rho_grid, &probes, spec)?);
        }
        "measure" => {
            let field = cfg.build_field()?.expect("validated");
            reports.push(check_ts_family(&field, cc.rho, cfg.scheme.p, &cc.r_grid, &cc.eps_grid, &probes, spec)?);
            let matrix = matrix.ok_or_else(|| {
                anyhow!(CoreError::invalid("matrix", "the discrete checks need --matrix FILE from `discretize`"))
            })?;
            let c = load_matrix(matrix, cfg)?;
            let h = cfg.truncation_function();
            reports.push(check_semimartingale_route(&field, &c, &h, cc.probe_radius, &probes, &cc.ell_grid, spec)?);
        }
        _ => unreachable!("validated"),
    }
    let mut outputs = Vec::new();
    for report in &reports {
        let path = out.join(format!("check_{}.csv", report.id.replace([' ', '/'], "_")));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        report.to_csv(&mut w)?;
        w.flush()?;
        println!("{}: {}", report.id, if report.all_pass() { "all checks pass" } else { "violations found" });
        outputs.push(path);
    }
    Ok(outputs)
}

fn test_function(cfg: &RunConfig) -> anyhow::Result<Box<dyn Fn(&[f64]) -> f64 + Sync>> {
    let d = cfg.dim();
    match cfg.semigroup.test_function.as_str() {
        "cauchy_density" => Ok(Box::new(move |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            1.0 / (std::f64::consts::PI * (1.0 + r2))
        })),
        src => {
            let expr = Expression::parse(src, d)?;
            let zero = vec![0.0; d];
            Ok(Box::new(move |x: &[f64]| expr.eval(x, &zero)))
        }
    }
}

fn cmd_semigroup(cfg: &RunConfig, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let reference = ReferenceSemigroup::stable(cfg.semigroup.alpha)?;
    let f = test_function(cfg)?;
    let mut csv = String::from("n,l2_error,window_leakage\n");
    for n in lattice_list(cfg) {
        let c = build_matrix(cfg, n)?;
        let err = strong_semigroup_error(&c, &f, cfg.semigroup.t, &reference, &cfg.quadrature, cfg.semigroup.tol)?;
        csv.push_str(&format!("{n},{},{}\n", err.l2_error, err.window_leakage));
        println!(
            "n = {n}: L2 error {:.6e}, window leakage {:.3e}",
            err.l2_error, err.window_leakage
        );
    }
    let path = out.join("semigroup.csv");
    fs::write(&path, csv)?;
    Ok(vec![path])
}

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let d = cfg.dim();
    // CF probe frequencies along the first axis.
    let xi_grid: Vec<Vec<f64>> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&v| {
            let mut x = vec![0.0; d];
            x[0] = v;
            x
        })
        .collect();
    let table = convergence_sweep(cfg, &xi_grid)?;
    let csv_path = out.join("sweep.csv");
    fs::write(&csv_path, table.to_csv())?;
    let plot_path = out.join("sweep_plot.csv");
    fs::write(&plot_path, table.to_plot())?;
    print!("{}", table.to_csv());
    Ok(vec![csv_path, plot_path])
}

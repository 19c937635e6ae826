mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use panel_coreset::bench::{empirical_error, empirical_error_k, run_benchmark, BenchConfig, ReportFormat};
use panel_coreset::coresets::{caratheodory_olse_coreset, cglse, cglse_k, uniform_coreset, CoresetConfig};
use panel_coreset::datagen::{lower_bound_instance, random_k_queries, random_queries, synthetic_panel, ErrorDist, GenConfig};
use panel_coreset::objectives::{
    coreset_glse_objective, coreset_glsek_objective, glse_total, glsek_individual, glsek_total, GlseQuery,
};
use panel_coreset::solver::{evaluate_fit, irls_glse_fit, SolverConfig};
use panel_coreset::{Error, PanelDataset, WeightedCoreset};

use args::{BenchArgs, Cli, Command, CoresetArgs, Dist, EvalArgs, Format, GenArgs, LowerboundArgs, Method, SolveArgs};

enum Failure {
    Usage(String),
    Core(Error),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn with_path(path: &Path, e: Error) -> Failure {
    match e {
        Error::Io(e) => Failure::Runtime(format!("{}: {e}", path.display())),
        other => Failure::Core(other),
    }
}

fn load_dataset(path: &Path) -> CliResult<PanelDataset> {
    PanelDataset::load_csv(path).map_err(|e| with_path(path, e))
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| with_path(p, Error::Io(e)))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Status lines go to stdout when the payload went to a file.
fn status(to_file: bool, line: &str) {
    if to_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn gen(cli: &Cli, a: &GenArgs) -> CliResult {
    let cfg = GenConfig {
        n: a.n,
        t: a.t,
        d: a.d,
        q: a.q,
        lambda: a.lambda,
        error_dist: match a.dist {
            Dist::Gaussian => ErrorDist::Gaussian,
            Dist::Cauchy => ErrorDist::Cauchy,
        },
        seed: cli.seed,
        noise_scale: a.noise_scale,
        intercept: !a.no_intercept,
    };
    let panel = synthetic_panel(&cfg)?;
    let out = a.out.as_deref().or(cli.output.as_deref());
    let mut w = open_output(out)?;
    panel.dataset.write_csv(&mut w)?;
    w.flush()?;
    match out {
        Some(path) => {
            let mut truth = path.as_os_str().to_owned();
            truth.push(".truth");
            panel.save_truth(PathBuf::from(truth))?;
        }
        None => log::warn!("no output path; truth sidecar not written"),
    }
    Ok(())
}

fn coreset(cli: &Cli, a: &CoresetArgs) -> CliResult {
    if a.k.is_some() && a.method != Method::CglseK {
        return Err(usage("--k only applies to --method cglse-k"));
    }
    if a.period_size.is_some() && a.method != Method::CglseK {
        return Err(usage("--period-size only applies to --method cglse-k"));
    }
    if a.size.is_some() && a.method == Method::Caratheodory {
        return Err(usage("--size does not apply to --method caratheodory"));
    }
    let ds = load_dataset(&a.input)?;
    let cfg = CoresetConfig {
        epsilon: a.epsilon,
        delta: a.delta,
        lambda: a.lambda,
        q: a.q,
        k: a.k.unwrap_or(2),
        fl_constant: a.fl_constant,
        size_override: a.size,
        period_size_override: a.period_size,
        seed: cli.seed,
    };
    let result = match a.method {
        Method::Cglse => cglse(&ds, &cfg)?,
        Method::CglseK => cglse_k(&ds, &cfg)?,
        Method::Uniform => {
            let m = a.size.ok_or_else(|| usage("--method uniform needs --size"))?;
            uniform_coreset(&ds, m, cli.seed)?
        }
        Method::Caratheodory => caratheodory_olse_coreset(&ds),
    };
    let out = a.out.as_deref().or(cli.output.as_deref());
    let mut w = open_output(out)?;
    result.write_csv(&mut w, &ds)?;
    w.flush()?;
    let mut line = format!("pairs={}", result.len());
    if let Some(m) = result.meta.draws {
        line.push_str(&format!(" draws={m}"));
    }
    if let Some(g) = result.meta.total_sensitivity {
        line.push_str(&format!(" total_sensitivity={g}"));
    }
    line.push_str(&format!(" total_weight={}", result.total_weight()));
    status(out.is_some(), &line);
    Ok(())
}

fn load_coreset(path: Option<&Path>, ds: &PanelDataset) -> CliResult<Option<WeightedCoreset>> {
    path.map(|p| WeightedCoreset::load_csv(p, ds).map_err(|e| with_path(p, e))).transpose()
}

fn eval(cli: &Cli, a: &EvalArgs) -> CliResult {
    let ds = load_dataset(&a.input)?;
    let coreset = load_coreset(a.coreset.as_deref(), &ds)?;
    let d = ds.n_features();
    let mut w = open_output(a.out.as_deref().or(cli.output.as_deref()))?;
    writeln!(w, "query,full,coreset,error")?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();

    if let Some(k) = a.k {
        if a.beta.is_some() || a.rho.is_some() {
            return Err(usage("--beta/--rho cannot be combined with --k"));
        }
        for (j, z) in random_k_queries(d, a.q, a.lambda, k, a.queries, cli.seed)?.iter().enumerate() {
            let full = glsek_total(&ds, z);
            let on = coreset.as_ref().map(|c| coreset_glsek_objective(c, &ds, z));
            let err = coreset.as_ref().and_then(|c| empirical_error_k(&ds, c, z));
            writeln!(w, "{j},{full},{},{}", cell(on), cell(err))?;
        }
    } else {
        let queries = match (&a.beta, &a.rho) {
            (Some(beta), rho) => {
                let rho = rho.clone().unwrap_or_else(|| vec![0.0; a.q]);
                vec![GlseQuery::new(beta.clone(), rho, a.lambda)?]
            }
            (None, Some(_)) => return Err(usage("--rho needs --beta")),
            (None, None) => random_queries(d, a.q, a.lambda, a.queries, cli.seed)?,
        };
        for (j, z) in queries.iter().enumerate() {
            if z.beta.len() != d {
                return Err(usage(format!("β has {} entries, dataset has d = {d}", z.beta.len())));
            }
            let full = glse_total(&ds, z);
            let on = coreset.as_ref().map(|c| coreset_glse_objective(c, &ds, z));
            let err = coreset.as_ref().and_then(|c| empirical_error(&ds, c, z));
            writeln!(w, "{j},{full},{},{}", cell(on), cell(err))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn solve(cli: &Cli, a: &SolveArgs) -> CliResult {
    let ds = load_dataset(&a.input)?;
    let support = load_coreset(a.coreset.as_deref(), &ds)?;
    let cfg = SolverConfig {
        max_iterations: a.max_iter,
        tolerance: a.tol,
        lambda: a.lambda,
        q: a.q,
        ..SolverConfig::default()
    };
    let fit = match &support {
        Some(c) => irls_glse_fit(&ds, c, &cfg)?,
        None => irls_glse_fit(&ds, &WeightedCoreset::full(&ds), &cfg)?,
    };
    let mut w = open_output(a.out.as_deref().or(cli.output.as_deref()))?;
    write!(w, "{}", fit.to_report())?;
    if support.is_some() {
        writeln!(w, "full_objective={}", evaluate_fit(&ds, &fit))?;
    }
    w.flush()?;
    Ok(())
}

fn bench(cli: &Cli, a: &BenchArgs) -> CliResult {
    let ds = load_dataset(&a.input)?;
    let label = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let cfg = BenchConfig {
        epsilons: a.epsilons.clone(),
        n_queries: a.queries,
        seeds: a.seeds.clone().unwrap_or_else(|| vec![cli.seed]),
        lambda: a.lambda,
        q: a.q,
        delta: a.delta,
        fl_constant: a.fl_constant,
        size_override: a.size,
        period_size_override: a.period_size,
        k: a.k,
        solve: a.solve,
        raw: a.raw,
        query_seed: cli.seed,
        label,
    };
    let report = run_benchmark(&ds, &cfg)?;
    let format = match a.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
        Format::Markdown => ReportFormat::Markdown,
    };
    let mut w = open_output(a.out.as_deref().or(cli.output.as_deref()))?;
    report.emit(format, &mut w)?;
    w.flush()?;
    Ok(())
}

fn lowerbound(cli: &Cli, a: &LowerboundArgs) -> CliResult {
    let lb = lower_bound_instance(a.n)?;
    let ds = &lb.dataset;
    let mut w = open_output(a.out.as_deref().or(cli.output.as_deref()))?;
    writeln!(w, "individual,x_1,x_2,psi_i,total,share")?;
    for (i, cert) in lb.certificates.iter().enumerate() {
        let own = glsek_individual(ds, i, cert);
        let total = glsek_total(ds, cert);
        let x = ds.x(i, 0);
        writeln!(w, "{},{},{},{own},{total},{}", i + 1, x[0], x[1], own / total)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Gen(a) => gen(cli, a),
        Command::Coreset(a) => coreset(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Solve(a) => solve(cli, a),
        Command::Bench(a) => bench(cli, a),
        Command::Lowerbound(a) => lowerbound(cli, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

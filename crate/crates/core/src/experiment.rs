//! Parameter sweeps, convergence studies, dimension tables and timings,
//! written as CSV.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{Family, FunctionSpace, ValueRank};
use crate::interface::{Flavor, IfaceFamily, InterfaceSpace};
use crate::mesh::{build_coupled_mesh, CoupledGeometry};
use crate::solve::{MinresOptions, SpectrumOptions};
use crate::systems::mms::{run_mms, MmsProblem, MmsStudy};
use crate::systems::{
    build_darcy_subproblem, build_navier_subproblem, build_stokes_subproblem, build_strong_subproblem,
    ParameterSet, Precond, Problem, StrongKind, SubDomain, SystemBundle,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Solve,
    Cond,
    Mms,
    Dofs,
    Time,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "solve" => Mode::Solve,
            "cond" => Mode::Cond,
            "mms" => Mode::Mms,
            "dofs" => Mode::Dofs,
            "time" => Mode::Time,
            _ => return Err(Error::Config(format!("unknown mode '{s}'"))),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Solve => "solve",
            Mode::Cond => "cond",
            Mode::Mms => "mms",
            Mode::Dofs => "dofs",
            Mode::Time => "time",
        })
    }
}

/// Parses a number, accepting `2^-3` style powers and `inf`.
pub fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse number '{s}'"));
    if matches!(s, "inf" | "infinity" | "Inf" | "INF") {
        return Ok(f64::INFINITY);
    }
    if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let e: f64 = e.trim().parse().map_err(|_| bad())?;
        return Ok(b.powf(e));
    }
    s.parse().map_err(|_| bad())
}

/// Comma separated list of [`parse_value`] items.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_value)
        .collect()
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub problem: Option<Problem>,
    pub h: Vec<f64>,
    pub mu: Vec<f64>,
    pub perm: Vec<f64>,
    pub alpha_bjs: Vec<f64>,
    pub eta: Vec<f64>,
    pub k: Vec<f64>,
    pub kappa_ratio: Vec<f64>,
    pub precond: Option<Precond>,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub jobs: usize,
    pub dense_limit: usize,
    pub deflate: bool,
    /// Fill the `time_s` column; off by default so sweeps are reproducible
    /// byte for byte.
    pub timings: bool,
    pub out: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Solve,
            problem: None,
            h: vec![0.125],
            mu: vec![1.0],
            perm: vec![1.0],
            alpha_bjs: vec![1.0],
            eta: vec![f64::INFINITY],
            k: vec![1.0],
            kappa_ratio: vec![1.0],
            precond: None,
            seed: 0,
            tol: 1e-12,
            max_iter: 10_000,
            jobs: 1,
            dense_limit: 8000,
            deflate: false,
            timings: false,
            out: None,
            plot_data: None,
        }
    }
}

impl ExperimentConfig {
    /// Sets one option from its textual form; keys match the long CLI
    /// flags without dashes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let int = |v: &str| -> Result<usize> {
            v.parse().map_err(|_| Error::Config(format!("{key}: expected an integer, got '{v}'")))
        };
        match key.trim() {
            "mode" => self.mode = value.parse()?,
            "problem" => self.problem = Some(value.parse()?),
            "h" => self.h = parse_list(value)?,
            "mu" => self.mu = parse_list(value)?,
            "K" | "perm" => self.perm = parse_list(value)?,
            "alpha" | "alpha_bjs" => self.alpha_bjs = parse_list(value)?,
            "eta" => self.eta = parse_list(value)?,
            "k" => self.k = parse_list(value)?,
            "kappa-ratio" | "kappa_ratio" => self.kappa_ratio = parse_list(value)?,
            "precond" => self.precond = Some(value.parse()?),
            "seed" => self.seed = int(value)? as u64,
            "tol" => self.tol = parse_value(value)?,
            "max-iter" | "max_iter" => self.max_iter = int(value)?,
            "jobs" => self.jobs = int(value)?,
            "dense-eig-limit" | "dense_eig_limit" => self.dense_limit = int(value)?,
            "deflate" => {
                self.deflate = value
                    .parse()
                    .map_err(|_| Error::Config(format!("deflate: expected true/false, got '{value}'")))?
            }
            "timings" => {
                self.timings = value
                    .parse()
                    .map_err(|_| Error::Config(format!("timings: expected true/false, got '{value}'")))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "plot-data" | "plot_data" => self.plot_data = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let grids = [
            ("h", &self.h),
            ("mu", &self.mu),
            ("K", &self.perm),
            ("alpha", &self.alpha_bjs),
            ("eta", &self.eta),
            ("k", &self.k),
            ("kappa-ratio", &self.kappa_ratio),
        ];
        for (name, g) in grids {
            if g.is_empty() {
                return Err(Error::Config(format!("empty grid for {name}")));
            }
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        match self.mode {
            Mode::Solve | Mode::Cond if self.problem.is_none() => {
                Err(Error::Config(format!("{} mode needs a problem", self.mode)))
            }
            Mode::Mms => match self.problem {
                Some(p) => mms_problem(p).map(|_| ()),
                None => Err(Error::Config("mms mode needs a problem".into())),
            },
            _ => Ok(()),
        }
    }

    pub fn minres_options(&self) -> MinresOptions {
        MinresOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            dense_limit: self.dense_limit,
            ..SpectrumOptions::default()
        }
    }

    /// Grid points in lexicographic order of `(h, mu, K, alpha, eta, k,
    /// kappa ratio)`.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &h in &self.h {
            for &mu in &self.mu {
                for &perm in &self.perm {
                    for &alpha_bjs in &self.alpha_bjs {
                        for &eta in &self.eta {
                            for &k in &self.k {
                                for &ratio in &self.kappa_ratio {
                                    out.push(GridPoint {
                                        h,
                                        params: ParameterSet {
                                            mu,
                                            perm,
                                            alpha_bjs,
                                            eta,
                                            k,
                                            kappa1: 1.0,
                                            kappa2: ratio,
                                        },
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub h: f64,
    pub params: ParameterSet,
}

/// One CSV row of a sweep. Missing quantities stay `None` and are written
/// as empty fields.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub problem: Problem,
    pub point: GridPoint,
    pub precond: Precond,
    pub ndof: Option<usize>,
    pub iters: Option<usize>,
    pub cond: Option<f64>,
    pub time_s: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: [&str; 14] = [
    "problem", "h", "mu", "K", "alpha_bjs", "eta", "k", "precond", "ndof", "iters", "cond", "time_s",
    "kappa_ratio", "error",
];

fn fmt_f(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:e}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn record(&self, with_time: bool) -> Vec<String> {
        let p = &self.point.params;
        vec![
            self.problem.id().to_string(),
            fmt_f(self.point.h),
            fmt_f(p.mu),
            fmt_f(p.perm),
            fmt_f(p.alpha_bjs),
            fmt_f(p.eta),
            fmt_f(p.k),
            self.precond.to_string(),
            opt(self.ndof),
            opt(self.iters),
            opt(self.cond.map(|c| format!("{c:.6e}"))),
            if with_time { opt(self.time_s.map(|t| format!("{t:.4}"))) } else { String::new() },
            fmt_f(p.kappa2 / p.kappa1),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Builds and runs one grid point; failures end up in the row's error
/// field.
pub fn run_point(
    problem: Problem,
    precond: Precond,
    point: GridPoint,
    cfg: &ExperimentConfig,
    with_cond: bool,
) -> ResultRow {
    let mut row = ResultRow {
        problem,
        point,
        precond,
        ndof: None,
        iters: None,
        cond: None,
        time_s: None,
        error: None,
    };
    let bundle = match problem.build(&point.params, point.h, precond) {
        Ok(b) => b,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.ndof = Some(bundle.ndof());
    let deflate = cfg.deflate && bundle.deflation.is_some();
    match bundle.solve(&cfg.minres_options(), deflate) {
        Ok(r) if r.converged => {
            row.iters = Some(r.iterations);
            row.time_s = Some(r.time_s);
        }
        Ok(r) => {
            row.error = Some(format!(
                "not converged after {} iterations{}",
                r.iterations,
                r.breakdown.map(|b| format!(" ({b})")).unwrap_or_default()
            ))
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if with_cond {
        match bundle.condition(&cfg.spectrum_options(), deflate) {
            Ok(s) => row.cond = Some(s.cond),
            Err(e) => {
                let msg = e.to_string();
                row.error = Some(match row.error.take() {
                    Some(prev) => format!("{prev}; {msg}"),
                    None => msg,
                });
            }
        }
    }
    row
}

/// Runs the Cartesian product of the grids, `cfg.jobs` points at a time;
/// rows come back in grid order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let problem = cfg
        .problem
        .ok_or_else(|| Error::Config("sweep needs a problem".into()))?;
    let precond = cfg.precond.unwrap_or(problem.default_precond());
    let with_cond = cfg.mode == Mode::Cond;
    let grid = cfg.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| {
        grid.par_iter()
            .map(|&pt| run_point(problem, precond, pt, cfg, with_cond))
            .collect()
    }))
}

/// Writes sweep rows. Timings are machine dependent; `with_time = false`
/// leaves the column empty so output is reproducible byte for byte.
pub fn write_sweep_csv<W: Write>(rows: &[ResultRow], w: W, with_time: bool) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SWEEP_HEADER)?;
    for r in rows {
        wr.write_record(r.record(with_time))?;
    }
    wr.flush()?;
    Ok(())
}

/// Long-format plot data: one line per (series, metric, level).
pub fn write_plot_data<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["series", "metric", "log2_inv_h", "value"])?;
    for r in rows {
        let p = &r.point.params;
        let series = format!(
            "{} {} mu={} K={} alpha={} eta={} k={} kappa={}",
            r.problem,
            r.precond,
            fmt_f(p.mu),
            fmt_f(p.perm),
            fmt_f(p.alpha_bjs),
            fmt_f(p.eta),
            fmt_f(p.k),
            fmt_f(p.kappa2 / p.kappa1)
        );
        let x = format!("{}", (-r.point.h.log2()).round());
        if let Some(i) = r.iters {
            wr.write_record([series.as_str(), "iters", x.as_str(), i.to_string().as_str()])?;
        }
        if let Some(c) = r.cond {
            wr.write_record([series.as_str(), "cond", x.as_str(), format!("{c:.6e}").as_str()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

fn mms_problem(p: Problem) -> Result<MmsProblem> {
    match p {
        Problem::StokesSub => Ok(MmsProblem::Stokes),
        Problem::DarcySub => Ok(MmsProblem::Darcy),
        Problem::NavierSub => Ok(MmsProblem::Navier),
        other => Err(Error::Config(format!("no manufactured solution for {other}"))),
    }
}

/// Convergence study for every `(mu, K)` pair of the grid.
pub fn run_mms_sweep(cfg: &ExperimentConfig) -> Result<Vec<(ParameterSet, MmsStudy)>> {
    cfg.validate()?;
    let problem = mms_problem(cfg.problem.unwrap())?;
    let mut out = Vec::new();
    for &mu in &cfg.mu {
        for &perm in &cfg.perm {
            let params = ParameterSet {
                mu,
                perm,
                ..ParameterSet::default()
            };
            out.push((params, run_mms(problem, &params, &cfg.h, &cfg.minres_options())?));
        }
    }
    Ok(out)
}

pub fn write_mms_csv<W: Write>(problem: Problem, studies: &[(ParameterSet, MmsStudy)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["problem", "h", "mu", "K", "ndof", "iters", "err_u", "err_p", "err_lambda"])?;
    for (p, s) in studies {
        for l in &s.levels {
            wr.write_record([
                problem.id().to_string(),
                fmt_f(l.h),
                fmt_f(p.mu),
                fmt_f(p.perm),
                l.ndof.to_string(),
                l.iterations.to_string(),
                format!("{:.6e}", l.error("u").unwrap()),
                format!("{:.6e}", l.error("p").unwrap()),
                format!("{:.6e}", l.error("lambda").unwrap()),
            ])?;
        }
        wr.write_record([
            problem.id().to_string(),
            "rate".into(),
            fmt_f(p.mu),
            fmt_f(p.perm),
            String::new(),
            String::new(),
            format!("{:.4}", s.rate("u").unwrap()),
            format!("{:.4}", s.rate("p").unwrap()),
            format!("{:.4}", s.rate("lambda").unwrap()),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Dimensions of the coupled Darcy-Stokes spaces at one mesh size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofCounts {
    pub velocity_f: usize,
    pub pressure_f: usize,
    pub flux_p: usize,
    pub pressure_p: usize,
    pub multiplier: usize,
}

pub fn report_dofs(h: f64) -> Result<DofCounts> {
    let cm = build_coupled_mesh(h, CoupledGeometry::DarcyStokes)?;
    let mf = Arc::new(cm.fluid);
    let mp = Arc::new(cm.porous);
    let vf = FunctionSpace::new(mf.clone(), Family::P2, ValueRank::Vector2, &[])?;
    let qf = FunctionSpace::new(mf, Family::P1, ValueRank::Scalar, &[])?;
    let vp = FunctionSpace::new(mp.clone(), Family::RT0, ValueRank::Vector2, &[])?;
    let qp = FunctionSpace::new(mp, Family::P0, ValueRank::Scalar, &[])?;
    let l = InterfaceSpace::new(Arc::new(cm.interface), IfaceFamily::P0, 1)?;
    Ok(DofCounts {
        velocity_f: vf.num_dofs(),
        pressure_f: qf.num_dofs(),
        flux_p: vp.num_dofs(),
        pressure_p: qp.num_dofs(),
        multiplier: l.num_dofs(),
    })
}

pub fn write_dofs_csv<W: Write>(hs: &[f64], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["h", "V_f", "Q_f", "V_p", "Q_p", "Lambda"])?;
    for &h in hs {
        let d = report_dofs(h)?;
        wr.write_record([
            fmt_f(h),
            d.velocity_f.to_string(),
            d.pressure_f.to_string(),
            d.flux_p.to_string(),
            d.pressure_p.to_string(),
            d.multiplier.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Problems of the timing comparison: the two coupled problems and the
/// subproblems a domain decomposition would solve, on the half strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimedProblem {
    DarcyStokes,
    DarcySub,
    DarcyStrong,
    StokesSub,
    StokesStrong,
    StokesNavier,
    NavierSub,
    NavierStrong,
}

impl TimedProblem {
    pub const ALL: [TimedProblem; 8] = [
        TimedProblem::DarcyStokes,
        TimedProblem::DarcySub,
        TimedProblem::DarcyStrong,
        TimedProblem::StokesSub,
        TimedProblem::StokesStrong,
        TimedProblem::StokesNavier,
        TimedProblem::NavierSub,
        TimedProblem::NavierStrong,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TimedProblem::DarcyStokes => "darcy-stokes",
            TimedProblem::DarcySub => "darcy-sub",
            TimedProblem::DarcyStrong => "darcy-strong",
            TimedProblem::StokesSub => "stokes-sub",
            TimedProblem::StokesStrong => "stokes-strong",
            TimedProblem::StokesNavier => "stokes-navier",
            TimedProblem::NavierSub => "navier-sub",
            TimedProblem::NavierStrong => "navier-strong",
        }
    }

    pub fn build(self, params: &ParameterSet, h: f64) -> Result<SystemBundle> {
        let half = SubDomain::HalfStrip;
        match self {
            TimedProblem::DarcyStokes => Problem::DarcyStokes.build(params, h, Precond::Robust),
            TimedProblem::StokesNavier => Problem::StokesNavier.build(params, h, Precond::Robust),
            TimedProblem::DarcySub => build_darcy_subproblem(params, h, Flavor::Zero00, half),
            TimedProblem::StokesSub => build_stokes_subproblem(params, h, Flavor::Free, half),
            TimedProblem::NavierSub => build_navier_subproblem(params, h, Precond::Free, half),
            TimedProblem::DarcyStrong => build_strong_subproblem(params, h, StrongKind::Darcy),
            TimedProblem::StokesStrong => build_strong_subproblem(params, h, StrongKind::Stokes),
            TimedProblem::NavierStrong => build_strong_subproblem(params, h, StrongKind::Navier),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TimingRow {
    pub h: f64,
    pub problem: TimedProblem,
    pub ndof: usize,
    pub iters: usize,
    /// MinRes time, preconditioner factorization excluded.
    pub time_s: f64,
    pub setup_s: f64,
    /// Coupled time over the summed subproblem times (coupled rows only).
    pub ratio: Option<f64>,
}

pub fn run_timing(hs: &[f64], params: &ParameterSet, opts: &MinresOptions) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::new();
    for &h in hs {
        let start = rows.len();
        for p in TimedProblem::ALL {
            let t0 = Instant::now();
            let bundle = p.build(params, h)?;
            let fact = bundle.factorize_precond()?;
            let setup_s = t0.elapsed().as_secs_f64();
            let deflate = bundle.deflation.is_some();
            let r = bundle.solve_with(&fact, opts, deflate)?;
            rows.push(TimingRow {
                h,
                problem: p,
                ndof: bundle.ndof(),
                iters: r.iterations,
                time_s: r.time_s,
                setup_s,
                ratio: None,
            });
        }
        let time = |p: TimedProblem| rows[start..].iter().find(|r| r.problem == p).unwrap().time_s;
        let ds = time(TimedProblem::DarcyStokes) / (time(TimedProblem::DarcySub) + time(TimedProblem::StokesSub));
        let sn = time(TimedProblem::StokesNavier) / (time(TimedProblem::StokesSub) + time(TimedProblem::NavierSub));
        for r in &mut rows[start..] {
            r.ratio = match r.problem {
                TimedProblem::DarcyStokes => Some(ds),
                TimedProblem::StokesNavier => Some(sn),
                _ => None,
            };
        }
    }
    Ok(rows)
}

pub fn write_timing_csv<W: Write>(rows: &[TimingRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["h", "problem", "ndof", "iters", "time_s", "setup_s", "ratio"])?;
    for r in rows {
        wr.write_record([
            fmt_f(r.h),
            r.problem.id().to_string(),
            r.ndof.to_string(),
            r.iters.to_string(),
            format!("{:.4}", r.time_s),
            format!("{:.4}", r.setup_s),
            opt(r.ratio.map(|v| format!("{v:.3}"))),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Runs the configured mode and writes its CSV to `cfg.out` (or stdout).
/// Returns whether every grid point succeeded.
pub fn run(cfg: &ExperimentConfig) -> Result<bool> {
    cfg.validate()?;
    let sink: Box<dyn Write> = match &cfg.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    match cfg.mode {
        Mode::Solve | Mode::Cond => {
            let rows = run_sweep(cfg)?;
            write_sweep_csv(&rows, sink, cfg.timings)?;
            if let Some(p) = &cfg.plot_data {
                write_plot_data(&rows, fs::File::create(p)?)?;
            }
            Ok(rows.iter().all(|r| r.error.is_none()))
        }
        Mode::Mms => {
            let studies = run_mms_sweep(cfg)?;
            write_mms_csv(cfg.problem.unwrap(), &studies, sink)?;
            Ok(true)
        }
        Mode::Dofs => {
            write_dofs_csv(&cfg.h, sink)?;
            Ok(true)
        }
        Mode::Time => {
            let params = cfg.grid()[0].params;
            let rows = run_timing(&cfg.h, &params, &cfg.minres_options())?;
            write_timing_csv(&rows, sink)?;
            Ok(true)
        }
    }
}

//! One pipeline per experiment kind. Each writes its CSV outputs into a
//! directory and returns the numbers it wrote.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;

use ngtorus::analysis::{
    classify_field, classify_micro, collapse_error, curvature_and_speed, extract_boundary, fit_domain_size,
    fit_power_law, mean, pair_correlation, quasi_equilibrium_bins, welch_t_test, write_domain_size_csv,
    BoundarySample, Contour, CorrelationBin, CorrelationCurve, CorrelationOptions, CorrelationSource,
    DomainSizeFit, PowerLawFit, QuasiEquilibriumBin, TerminalState, WelchTest, BOUNDARY_CSV_HEADER,
    CONSENSUS_THRESHOLD, FIT_CSV_HEADER, MIN_CONTOUR_POINTS,
};
use ngtorus::geometry::{build_rgg_replica, connected_components, Graph};
use ngtorus::meanfield::{
    critical_committed_fraction, predicted_alpha, read_field_csv, slow_manifold_s, snapshot_name, write_field_csv,
    write_pgm, FieldGrid, MeanFieldSolver, SolverOptions, SolverStats,
};
use ngtorus::microsim::{
    alpha_consensus_time, local_mean_field_micro, write_observables_csv, write_spin_snapshot, Initializer,
    MicroState, Observables, Spin,
};
use ngtorus::rng::{stream_rng, Purpose};

use crate::config::{agents_for_degree, sweep_radius, Engine, ExperimentConfig, InitSpec, Kind};

/// Bins used for the quasi-equilibrium table.
pub const QUASI_EQUILIBRIUM_BINS: usize = 40;

/// A mean-field census run stops once its boundaries have formed a
/// stripe pattern for this long; stripes are stationary in the field
/// equation.
pub const STRIPE_PERSISTENCE: f64 = 200.0;

/// Committed fractions entering the `t_c ~ q^(-γ)` fit.
pub fn sweep_fit_range() -> (f64, f64) {
    (0.06, critical_committed_fraction())
}

/// Mixes extra labels into a root seed (SplitMix64 finalizer per label).
/// Used where one root seed drives several independent networks.
pub fn derive_seed(root: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(root, |s, &l| {
        let mut z = (s ^ l).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Graph(Vec<GraphSummary>),
    Micro(Vec<MicroRun>),
    Meanfield(Vec<MeanfieldRun>),
    Correlation(CorrelationReport),
    Boundary(BoundaryReport),
    Shrink(ShrinkReport),
    Sweep(SweepReport),
    Census(CensusReport),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphSummary {
    pub replica: u64,
    pub n: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub giant_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroRun {
    pub replica: u64,
    pub last: Observables,
    /// Quasi-equilibrium table per snapshot time.
    pub quasi_equilibrium: Vec<(f64, Vec<QuasiEquilibriumBin>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanfieldRun {
    pub replica: u64,
    pub t: f64,
    pub mean_s: f64,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    /// Curves pooled over replicas, one per snapshot time.
    pub curves: Vec<CorrelationCurve>,
    /// Collapse error under `l = √t`, over snapshots with `t > 1`.
    pub collapse_sqrt_t: Option<f64>,
    /// Collapse error under `l = √t / ln t`.
    pub collapse_sqrt_t_over_ln_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    /// `(t, sample)` for every tracked boundary point.
    pub samples: Vec<(f64, BoundarySample)>,
    /// `|v| ∝ |R|^(-γ)` over shrinking points with `|R| >= 2r`.
    pub speed_fit: Option<PowerLawFit>,
    /// Median of `v R` over the same points.
    pub alpha: Option<f64>,
    pub predicted_alpha: f64,
    pub domain_size: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Twin {
    pub degree: f64,
    pub n: usize,
    /// Replica mean of `S(t)`.
    pub series: Vec<(f64, f64)>,
    pub fit: DomainSizeFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkReport {
    pub meanfield: Vec<(f64, f64)>,
    pub meanfield_fit: DomainSizeFit,
    pub boundary: Option<BoundaryReport>,
    pub twins: Vec<Twin>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub degree: f64,
    pub q: f64,
    pub replica: u64,
    pub t_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// `(n, degree, fit)` over [`sweep_fit_range`].
    pub fits: Vec<(usize, f64, PowerLawFit)>,
    /// `(degree, q, n1, n2, test)` comparing the first size with each other.
    pub comparisons: Vec<(f64, f64, usize, usize, WelchTest)>,
}

impl SweepReport {
    pub fn samples(&self, n: usize, degree: f64, q: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.degree == degree && r.q == q)
            .filter_map(|r| r.t_c)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub outcomes: Vec<(u64, TerminalState, f64)>,
}

impl CensusReport {
    pub fn fraction(&self, state: TerminalState) -> f64 {
        let k = self.outcomes.iter().filter(|o| o.1 == state).count();
        k as f64 / self.outcomes.len() as f64
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

fn write_summary(dir: &Path, rows: &[(&str, String)]) -> Result<()> {
    let mut w = create(dir, "summary.csv")?;
    writeln!(w, "quantity,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    finish(w)
}

/// Runs the pipeline of `cfg.kind`, writing into `dir`.
pub fn run_pipeline(cfg: &ExperimentConfig, dir: &Path) -> Result<Report> {
    cfg.validate()?;
    Ok(match cfg.kind {
        Kind::GenerateGraph => Report::Graph(generate_graph(cfg, dir)?),
        Kind::RunMicro => Report::Micro(run_micro(cfg, dir)?),
        Kind::RunMeanfield => Report::Meanfield(run_meanfield(cfg, dir)?),
        Kind::Correlation => Report::Correlation(correlation(cfg, dir)?),
        Kind::Boundary => Report::Boundary(boundary(cfg, dir)?),
        Kind::Shrink => Report::Shrink(shrink(cfg, dir)?),
        Kind::CommittedSweep => Report::Sweep(committed_sweep(cfg, dir)?),
        Kind::TerminalCensus => Report::Census(terminal_census(cfg, dir)?),
    })
}

fn replicas(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.replicas).collect()
}

fn graph_for(cfg: &ExperimentConfig, replica: u64) -> Result<Graph> {
    Ok(build_rgg_replica(cfg.n, cfg.radius, cfg.seed, replica)?)
}

fn micro_state(cfg: &ExperimentConfig, g: &Graph, init: &Initializer, seed: u64, replica: u64) -> Result<MicroState> {
    Ok(MicroState::initialize(g, init, seed, replica)?.with_selection(cfg.pair_selection))
}

fn advance_micro_to(state: &mut MicroState, g: &Graph, t: f64) -> Result<()> {
    let target = (t * state.n() as f64).round() as u64;
    if target > state.interactions() {
        state.advance(g, target - state.interactions())?;
    }
    Ok(())
}

/// Sample grid `0, Δ, 2Δ, … ≤ t_max` merged with the snapshot times.
fn event_times(cfg: &ExperimentConfig) -> Vec<f64> {
    let steps = (cfg.t_max / cfg.sample_every + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=steps).map(|k| k as f64 * cfg.sample_every).collect();
    ts.extend(cfg.snapshots.iter().copied());
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    ts
}

fn is_snapshot(cfg: &ExperimentConfig, t: f64) -> bool {
    cfg.snapshots.iter().any(|&s| (s - t).abs() < 1e-9)
}

fn generate_graph(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<GraphSummary>> {
    let summaries: Vec<GraphSummary> = replicas(cfg)
        .into_par_iter()
        .map(|k| -> Result<GraphSummary> {
            let g = graph_for(cfg, k)?;
            let mut w = create(dir, &format!("graph_r{k}.txt"))?;
            g.write_text(&mut w)?;
            finish(w)?;
            let comp = connected_components(&g);
            if comp.sparse_warning {
                warn!("replica {k}: mean degree {:.2} is below ln n; graph may be fragmented", comp.mean_degree);
            }
            Ok(GraphSummary {
                replica: k,
                n: g.n(),
                edges: g.edge_count(),
                mean_degree: g.mean_degree(),
                giant_fraction: comp.giant_fraction,
            })
        })
        .collect::<Result<_>>()?;
    let mut w = create(dir, "graphs.csv")?;
    writeln!(w, "replica,n,edges,mean_degree,giant_fraction")?;
    for s in &summaries {
        writeln!(w, "{},{},{},{},{}", s.replica, s.n, s.edges, s.mean_degree, s.giant_fraction)?;
    }
    finish(w)?;
    Ok(summaries)
}

/// `(μ_i, s_i)` for every agent with at least one neighbor.
pub fn micro_mean_field_pairs(state: &MicroState, g: &Graph) -> Vec<(f64, f64)> {
    (0..g.n())
        .filter_map(|i| local_mean_field_micro(state, g, i).ok().map(|mu| (mu, state.spin(i).value() as f64)))
        .collect()
}

fn write_quasi_equilibrium(dir: &Path, name: &str, tables: &[(f64, Vec<QuasiEquilibriumBin>)]) -> Result<()> {
    let mut w = create(dir, name)?;
    writeln!(w, "t,mu_lo,mu_hi,mean_mu,mean_s,s_star,count")?;
    for (t, bins) in tables {
        for b in bins {
            writeln!(
                w,
                "{t},{},{},{},{},{},{}",
                b.mu_lo,
                b.mu_hi,
                b.mean_mu,
                b.mean_s,
                slow_manifold_s(b.mean_mu),
                b.count
            )?;
        }
    }
    finish(w)
}

fn run_micro(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<MicroRun>> {
    let init = cfg.initializer.micro(cfg.q);
    let times = event_times(cfg);
    replicas(cfg)
        .into_par_iter()
        .map(|k| -> Result<MicroRun> {
            let g = graph_for(cfg, k)?;
            let mut state = micro_state(cfg, &g, &init, cfg.seed, k)?;
            let sub = format!("r{k}");
            let mut samples = Vec::with_capacity(times.len());
            let mut tables = Vec::new();
            for &t in &times {
                advance_micro_to(&mut state, &g, t)?;
                samples.push(state.observables());
                if is_snapshot(cfg, t) {
                    let mut w = create(dir, &format!("{sub}/spins_t{t}.txt"))?;
                    write_spin_snapshot(&mut w, &state, &g)?;
                    finish(w)?;
                    let bins = quasi_equilibrium_bins(micro_mean_field_pairs(&state, &g), QUASI_EQUILIBRIUM_BINS);
                    tables.push((t, bins));
                }
            }
            let mut w = create(dir, &format!("{sub}/observables.csv"))?;
            write_observables_csv(&mut w, &samples)?;
            finish(w)?;
            if !tables.is_empty() {
                write_quasi_equilibrium(dir, &format!("{sub}/quasi_equilibrium.csv"), &tables)?;
            }
            Ok(MicroRun { replica: k, last: *samples.last().expect("t = 0 is always sampled"), quasi_equilibrium: tables })
        })
        .collect()
}

/// Initial field for replica `replica`, or the restart dump.
pub fn initial_field(cfg: &ExperimentConfig, replica: u64) -> Result<FieldGrid> {
    if let Some(path) = &cfg.restart {
        let f = File::open(path).with_context(|| format!("opening restart dump {}", path.display()))?;
        return Ok(read_field_csv(BufReader::new(f))?);
    }
    let (m, r, q) = (cfg.grid, cfg.radius, cfg.q);
    let field = match cfg.initializer {
        InitSpec::Random { p_a } => {
            let mut rng = stream_rng(cfg.seed, Purpose::Init, replica);
            FieldGrid::from_fn(m, r, q, |_, _| if rng.gen_bool(p_a) { (1.0, 0.0) } else { (0.0, 1.0) })?
        }
        InitSpec::Disk { cx, cy, radius } => FieldGrid::disk(m, r, q, cx, cy, radius)?,
        InitSpec::Stripe { x0, x1 } => FieldGrid::stripe(m, r, q, x0, x1)?,
        InitSpec::Uniform(Spin::A) => FieldGrid::uniform(m, r, q, 1.0, 0.0)?,
        InitSpec::Uniform(Spin::B) | InitSpec::Committed => FieldGrid::uniform(m, r, q, 0.0, 1.0)?,
        InitSpec::Uniform(Spin::AB) => FieldGrid::uniform(m, r, q, 0.0, 0.0)?,
    };
    Ok(field)
}

fn solver_for(cfg: &ExperimentConfig, field: FieldGrid) -> Result<MeanFieldSolver> {
    let opts = SolverOptions { dt: cfg.dt, integrator: cfg.integrator, convolution: cfg.convolution };
    Ok(MeanFieldSolver::new(field, opts)?)
}

fn write_snapshot(dir: &Path, prefix: &str, field: &FieldGrid, t: f64) -> Result<()> {
    let mut w = create(dir, &format!("{prefix}{}", snapshot_name(t)))?;
    write_pgm(&mut w, field)?;
    finish(w)?;
    let mut w = create(dir, &format!("{prefix}field_t{t}.csv"))?;
    write_field_csv(&mut w, field)?;
    finish(w)
}

fn run_meanfield(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<MeanfieldRun>> {
    let times = event_times(cfg);
    let runs = if cfg.restart.is_some() { vec![0] } else { replicas(cfg) };
    runs.into_par_iter()
        .map(|k| -> Result<MeanfieldRun> {
            let mut solver = solver_for(cfg, initial_field(cfg, k)?)?;
            let t0 = solver.t();
            let sub = format!("r{k}/");
            let mut w = create(dir, &format!("{sub}series.csv"))?;
            writeln!(w, "t,n_A,n_B,n_AB,mean_s,min_n_AB,mean_slow_gap")?;
            for &te in &times {
                solver.advance_to(t0 + te)?;
                let f = solver.field();
                let len = f.len() as f64;
                let a: f64 = f.n_a().iter().sum::<f64>() / len;
                let b: f64 = f.n_b().iter().sum::<f64>() / len;
                let gap = mean(&solver.slow_manifold_gap());
                writeln!(w, "{},{a},{b},{},{},{},{gap}", f.t(), 1.0 - a - b, a - b, f.min_n_ab())?;
                if is_snapshot(cfg, te) {
                    write_snapshot(dir, &sub, f, f.t())?;
                }
            }
            finish(w)?;
            let mut w = create(dir, &format!("{sub}final.csv"))?;
            write_field_csv(&mut w, solver.field())?;
            finish(w)?;
            let stats = solver.stats();
            if stats.renormalization_rate() > 1e-4 {
                warn!("replica {k}: {:.3}% of cell updates needed renormalization", 100.0 * stats.renormalization_rate());
            }
            Ok(MeanfieldRun { replica: k, t: solver.t(), mean_s: solver.field().mean_s(), stats })
        })
        .collect()
}

/// Bin-wise count-weighted average of curves measured on the same bins.
pub fn pool_curves(curves: &[CorrelationCurve]) -> CorrelationCurve {
    let first = &curves[0];
    let bins = (0..first.bins.len())
        .map(|i| {
            let count: u64 = curves.iter().map(|c| c.bins[i].count).sum();
            let sum: f64 = curves.iter().map(|c| c.bins[i].c * c.bins[i].count as f64).sum();
            CorrelationBin {
                l_center: first.bins[i].l_center,
                c: if count > 0 { sum / count as f64 } else { 0.0 },
                count,
            }
        })
        .collect();
    CorrelationCurve { t: first.t, bin_width: first.bin_width, bins }
}

fn correlation(cfg: &ExperimentConfig, dir: &Path) -> Result<CorrelationReport> {
    let options = CorrelationOptions {
        bin_width: cfg.bin_width.unwrap_or(cfg.radius / 2.0),
        n_samples: cfg.n_samples,
        max_distance: None,
    };
    let per_replica: Vec<Vec<CorrelationCurve>> = replicas(cfg)
        .into_par_iter()
        .map(|k| -> Result<Vec<CorrelationCurve>> {
            let mut rng = stream_rng(cfg.seed, Purpose::Sampling, k);
            let mut curves = Vec::with_capacity(cfg.snapshots.len());
            match cfg.engine {
                Engine::Micro => {
                    let g = graph_for(cfg, k)?;
                    let mut state = micro_state(cfg, &g, &cfg.initializer.micro(cfg.q), cfg.seed, k)?;
                    for &t in &cfg.snapshots {
                        advance_micro_to(&mut state, &g, t)?;
                        let source = CorrelationSource::Micro { state: &state, graph: &g };
                        curves.push(pair_correlation(source, &options, &mut rng)?);
                    }
                }
                Engine::Meanfield => {
                    let mut solver = solver_for(cfg, initial_field(cfg, k)?)?;
                    for &t in &cfg.snapshots {
                        solver.advance_to(t)?;
                        let mut curve = pair_correlation(CorrelationSource::Field(solver.field()), &options, &mut rng)?;
                        curve.t = t;
                        curves.push(curve);
                    }
                }
            }
            let mut w = create(dir, &format!("correlation_r{k}.csv"))?;
            for (i, c) in curves.iter().enumerate() {
                c.write_csv(&mut w, i == 0)?;
            }
            finish(w)?;
            Ok(curves)
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<CorrelationCurve> = (0..cfg.snapshots.len())
        .map(|i| {
            let at_t: Vec<CorrelationCurve> = per_replica.iter().map(|c| c[i].clone()).collect();
            let mut p = pool_curves(&at_t);
            p.t = cfg.snapshots[i];
            p
        })
        .collect();
    let mut w = create(dir, "correlation.csv")?;
    for (i, c) in pooled.iter().enumerate() {
        c.write_csv(&mut w, i == 0)?;
    }
    finish(w)?;
    let late: Vec<CorrelationCurve> = pooled.iter().filter(|c| c.t > 1.0).cloned().collect();
    let attempt = |f: fn(f64) -> f64| match collapse_error(&late, f) {
        Ok(e) => Some(e),
        Err(e) => {
            warn!("collapse not computed: {e}");
            None
        }
    };
    let collapse_sqrt_t = attempt(f64::sqrt);
    let collapse_log = attempt(|t| t.sqrt() / t.ln());
    let mut w = create(dir, "collapse.csv")?;
    writeln!(w, "length_scale,error")?;
    let fmt = |e: Option<f64>| e.map(|v| v.to_string()).unwrap_or_else(|| "nan".into());
    writeln!(w, "sqrt_t,{}", fmt(collapse_sqrt_t))?;
    writeln!(w, "sqrt_t_over_ln_t,{}", fmt(collapse_log))?;
    finish(w)?;
    Ok(CorrelationReport { curves: pooled, collapse_sqrt_t, collapse_sqrt_t_over_ln_t: collapse_log })
}

/// Tracks every boundary between consecutive frames.
fn boundary_analysis(frames: &[(f64, Vec<Contour>)]) -> Vec<(f64, BoundarySample)> {
    let mut out = Vec::new();
    for pair in frames.windows(2) {
        let ((t0, earlier), (t1, later)) = (&pair[0], &pair[1]);
        for c in earlier.iter().filter(|c| c.len() >= MIN_CONTOUR_POINTS) {
            match curvature_and_speed(c, later, t1 - t0) {
                Ok(cs) => out.extend(cs.samples.into_iter().map(|s| (*t0, s))),
                Err(e) => warn!("t = {t0}: boundary skipped: {e}"),
            }
        }
    }
    out
}

fn boundary_report(frames: &[(f64, Vec<Contour>)], r: f64, domain_size: Vec<(f64, f64)>) -> BoundaryReport {
    let samples = boundary_analysis(frames);
    let shrinking: Vec<&BoundarySample> =
        samples.iter().map(|(_, s)| s).filter(|s| s.radius * s.speed > 0.0 && s.radius.abs() >= 2.0 * r).collect();
    let points: Vec<(f64, f64)> = shrinking.iter().map(|s| (s.radius.abs(), s.speed.abs())).collect();
    let speed_fit = match fit_power_law(&points, (2.0 * r, f64::INFINITY)) {
        Ok(f) => Some(f),
        Err(e) => {
            warn!("speed-radius fit failed: {e}");
            None
        }
    };
    let products: Vec<f64> = shrinking.iter().map(|s| s.radius * s.speed).collect();
    let alpha = (!products.is_empty()).then(|| ngtorus::analysis::median(&products));
    BoundaryReport { samples, speed_fit, alpha, predicted_alpha: predicted_alpha(r), domain_size }
}

fn write_boundary(dir: &Path, rep: &BoundaryReport) -> Result<()> {
    let mut w = create(dir, "boundary.csv")?;
    writeln!(w, "{BOUNDARY_CSV_HEADER}")?;
    for (t, p) in &rep.samples {
        writeln!(w, "{t},{},{},{},{},{}", p.index, p.x, p.y, p.radius, p.speed)?;
    }
    finish(w)?;
    let mut w = create(dir, "fit.csv")?;
    writeln!(w, "{FIT_CSV_HEADER}")?;
    if let Some(f) = &rep.speed_fit {
        f.write_csv_row(&mut w, "speed_vs_radius")?;
    }
    finish(w)
}

/// Mean-field run recording `S(t)` every `sample_every` and the
/// boundaries at snapshot times. Stops once `S` falls below 5% of its
/// initial value.
fn meanfield_disk(cfg: &ExperimentConfig) -> Result<(Vec<(f64, f64)>, Vec<(f64, Vec<Contour>)>, FieldGrid)> {
    let mut solver = solver_for(cfg, initial_field(cfg, 0)?)?;
    let s0 = solver.field().domain_size_a();
    let mut series = Vec::new();
    let mut frames = Vec::new();
    for te in event_times(cfg) {
        solver.advance_to(te)?;
        let f = solver.field();
        if is_snapshot(cfg, te) {
            frames.push((te, extract_boundary(f)));
        }
        if (te / cfg.sample_every - (te / cfg.sample_every).round()).abs() < 1e-9 {
            series.push((te, f.domain_size_a()));
        }
        if f.domain_size_a() < 0.05 * s0 {
            info!("domain collapsed by t = {te}");
            break;
        }
    }
    Ok((series, frames, solver.into_field()))
}

fn boundary(cfg: &ExperimentConfig, dir: &Path) -> Result<BoundaryReport> {
    let (series, frames, _) = meanfield_disk(cfg)?;
    let rep = boundary_report(&frames, cfg.radius, series);
    write_boundary(dir, &rep)?;
    let mut w = create(dir, "domain_size.csv")?;
    write_domain_size_csv(&mut w, &rep.domain_size)?;
    finish(w)?;
    write_summary(
        dir,
        &[
            ("samples", rep.samples.len().to_string()),
            ("gamma", rep.speed_fit.map(|f| f.gamma.to_string()).unwrap_or_else(|| "nan".into())),
            ("alpha", rep.alpha.map(|a| a.to_string()).unwrap_or_else(|| "nan".into())),
            ("predicted_alpha", rep.predicted_alpha.to_string()),
        ],
    )?;
    Ok(rep)
}

fn write_fit_row(w: &mut impl Write, name: &str, f: &DomainSizeFit) -> std::io::Result<()> {
    writeln!(w, "{name},{},{},{},{},{}", f.fit.slope, f.fit.intercept, f.fit.r_squared, f.alpha, f.window_end)
}

fn shrink(cfg: &ExperimentConfig, dir: &Path) -> Result<ShrinkReport> {
    let (series, frames, _) = meanfield_disk(cfg)?;
    let mut w = create(dir, "domain_size_meanfield.csv")?;
    write_domain_size_csv(&mut w, &series)?;
    finish(w)?;
    let meanfield_fit = fit_domain_size(&series)?;
    let boundary = (frames.len() >= 2).then(|| boundary_report(&frames, cfg.radius, series.clone()));
    if let Some(rep) = &boundary {
        write_boundary(dir, rep)?;
    }
    let init = cfg.initializer.micro(cfg.q);
    let mut twins = Vec::new();
    for &k in &cfg.degrees {
        let n = agents_for_degree(k, cfg.radius);
        let root = derive_seed(cfg.seed, &[n as u64]);
        let runs: Vec<Vec<(f64, f64)>> = replicas(cfg)
            .into_par_iter()
            .map(|rep| -> Result<Vec<(f64, f64)>> {
                let g = build_rgg_replica(n, cfg.radius, root, rep)?;
                let mut state = micro_state(cfg, &g, &init, root, rep)?;
                let steps = (cfg.t_max / cfg.sample_every + 1e-9).floor() as usize;
                let mut s = Vec::with_capacity(steps + 1);
                for i in 0..=steps {
                    let t = i as f64 * cfg.sample_every;
                    if !state.is_consensus() {
                        advance_micro_to(&mut state, &g, t)?;
                    }
                    s.push((t, state.observables().domain_size_a));
                }
                let mut w = create(dir, &format!("domain_size_k{k}_r{rep}.csv"))?;
                write_domain_size_csv(&mut w, &s)?;
                finish(w)?;
                Ok(s)
            })
            .collect::<Result<_>>()?;
        let avg: Vec<(f64, f64)> = (0..runs[0].len())
            .map(|i| (runs[0][i].0, runs.iter().map(|r| r[i].1).sum::<f64>() / runs.len() as f64))
            .collect();
        let mut w = create(dir, &format!("domain_size_k{k}.csv"))?;
        write_domain_size_csv(&mut w, &avg)?;
        finish(w)?;
        let fit = fit_domain_size(&avg).with_context(|| format!("fitting S(t) at mean degree {k}"))?;
        twins.push(Twin { degree: k, n, series: avg, fit });
    }
    let mut w = create(dir, "shrink_fit.csv")?;
    writeln!(w, "name,slope,intercept,r_squared,alpha,window_end")?;
    write_fit_row(&mut w, "meanfield", &meanfield_fit)?;
    for t in &twins {
        write_fit_row(&mut w, &format!("micro_k{}", t.degree), &t.fit)?;
    }
    finish(w)?;
    Ok(ShrinkReport { meanfield: series, meanfield_fit, boundary, twins })
}

fn committed_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<SweepReport> {
    let mut jobs = Vec::new();
    for &n in &cfg.sizes {
        for &k in &cfg.degrees {
            for rep in 0..cfg.replicas {
                jobs.push((n, k, rep));
            }
        }
    }
    let per_job: Vec<Vec<SweepRow>> = jobs
        .into_par_iter()
        .map(|(n, k, rep)| -> Result<Vec<SweepRow>> {
            let root = derive_seed(cfg.seed, &[n as u64, k.to_bits()]);
            let g = build_rgg_replica(n, sweep_radius(n, k), root, rep)?;
            cfg.q_values
                .iter()
                .map(|&q| {
                    let init = Initializer::Committed { q, opinion: Spin::A };
                    let mut state = micro_state(cfg, &g, &init, root, rep)?;
                    let t_c = alpha_consensus_time(&mut state, &g, cfg.alpha, cfg.t_max)?;
                    Ok(SweepRow { n, degree: k, q, replica: rep, t_c })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = per_job.into_iter().flatten().collect();
    let mut report = SweepReport { rows, fits: Vec::new(), comparisons: Vec::new() };
    let mut fit_w = create(dir, "fit.csv")?;
    writeln!(fit_w, "{FIT_CSV_HEADER}")?;
    for &n in &cfg.sizes {
        for &k in &cfg.degrees {
            let mut w = create(dir, &format!("tc_N{n}_k{k}.csv"))?;
            writeln!(w, "q,replica,t_c")?;
            for r in report.rows.iter().filter(|r| r.n == n && r.degree == k) {
                let tc = r.t_c.map(|v| v.to_string()).unwrap_or_else(|| "nan".into());
                writeln!(w, "{},{},{tc}", r.q, r.replica)?;
            }
            finish(w)?;
            let mut points = Vec::new();
            for &q in &cfg.q_values {
                let s = report.samples(n, k, q);
                if s.len() as u64 == cfg.replicas {
                    points.push((q, mean(&s)));
                } else {
                    warn!("N = {n}, k = {k}, q = {q}: {} of {} runs missed t_max", cfg.replicas - s.len() as u64, cfg.replicas);
                }
            }
            match fit_power_law(&points, sweep_fit_range()) {
                Ok(f) => {
                    f.write_csv_row(&mut fit_w, &format!("N{n}_k{k}"))?;
                    report.fits.push((n, k, f));
                }
                Err(e) => warn!("N = {n}, k = {k}: no power-law fit: {e}"),
            }
        }
    }
    finish(fit_w)?;
    if cfg.sizes.len() >= 2 {
        let mut w = create(dir, "welch.csv")?;
        writeln!(w, "k,q,N1,N2,t,df,p_value")?;
        let n1 = cfg.sizes[0];
        for &n2 in &cfg.sizes[1..] {
            for &k in &cfg.degrees {
                for &q in &cfg.q_values {
                    let (a, b) = (report.samples(n1, k, q), report.samples(n2, k, q));
                    match welch_t_test(&a, &b) {
                        Ok(test) => {
                            writeln!(w, "{k},{q},{n1},{n2},{},{},{}", test.t, test.df, test.p_value)?;
                            report.comparisons.push((k, q, n1, n2, test));
                        }
                        Err(e) => warn!("k = {k}, q = {q}: no comparison: {e}"),
                    }
                }
            }
        }
        finish(w)?;
    }
    Ok(report)
}

fn terminal_census(cfg: &ExperimentConfig, dir: &Path) -> Result<CensusReport> {
    let outcomes: Vec<(u64, TerminalState, f64)> = replicas(cfg)
        .into_par_iter()
        .map(|k| -> Result<(u64, TerminalState, f64)> {
            match cfg.engine {
                Engine::Meanfield => {
                    let mut solver = solver_for(cfg, initial_field(cfg, k)?)?;
                    let mut t = 0.0;
                    let mut stripe_since = None;
                    while t < cfg.t_max && solver.field().mean_s().abs() <= CONSENSUS_THRESHOLD {
                        t = (t + cfg.sample_every).min(cfg.t_max);
                        solver.advance_to(t)?;
                        if classify_field(solver.field()) == TerminalState::Stripe {
                            let since = *stripe_since.get_or_insert(t);
                            if t - since >= STRIPE_PERSISTENCE {
                                break;
                            }
                        } else {
                            stripe_since = None;
                        }
                    }
                    Ok((k, classify_field(solver.field()), solver.t()))
                }
                Engine::Micro => {
                    let g = graph_for(cfg, k)?;
                    let mut state = micro_state(cfg, &g, &cfg.initializer.micro(cfg.q), cfg.seed, k)?;
                    let mut t = 0.0;
                    while t < cfg.t_max && state.observables().magnetization.abs() <= CONSENSUS_THRESHOLD {
                        t = (t + cfg.sample_every).min(cfg.t_max);
                        advance_micro_to(&mut state, &g, t)?;
                    }
                    Ok((k, classify_micro(&state, &g), state.t()))
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut w = create(dir, "census.csv")?;
    writeln!(w, "replica,state,t_end")?;
    for (k, s, t) in &outcomes {
        writeln!(w, "{k},{},{t}", s.name())?;
    }
    finish(w)?;
    let report = CensusReport { outcomes };
    let mut w = create(dir, "census_summary.csv")?;
    writeln!(w, "state,count,fraction")?;
    for s in [TerminalState::ConsensusA, TerminalState::ConsensusB, TerminalState::Stripe, TerminalState::Other] {
        let count = report.outcomes.iter().filter(|o| o.1 == s).count();
        writeln!(w, "{},{count},{}", s.name(), report.fraction(s))?;
    }
    finish(w)?;
    if report.outcomes.is_empty() {
        bail!("census produced no runs");
    }
    Ok(report)
}

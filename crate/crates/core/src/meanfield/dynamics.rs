use log::debug;

use crate::error::{invalid, Result};

use super::equilibria::slow_manifold_s;
use super::grid::FieldGrid;
use super::stencil::{Averager, Convolution};

/// Largest accepted time step.
pub const MAX_DT: f64 = 0.1;

/// Per-cell time derivative `(dn_A/dt, dn_B/dt)` for probability `f` of
/// hearing A.
pub fn rhs_cell(n_a: f64, n_b: f64, f: f64) -> (f64, f64) {
    rates(n_a, n_b, f, 1.0 - f)
}

/// `g = 1 - f` is passed separately so that swapping `(n_A, f)` with
/// `(n_B, g)` swaps the outputs bit for bit.
#[inline]
fn rates(n_a: f64, n_b: f64, f: f64, g: f64) -> (f64, f64) {
    let n_ab = 1.0 - (n_a + n_b);
    (f * n_ab - g * n_a, g * n_ab - f * n_b)
}

#[inline]
fn hearing_probabilities(mu: f64) -> (f64, f64) {
    (0.5 + 0.5 * mu, 0.5 - 0.5 * mu)
}

/// Time derivative of the whole field for a given mean field `mu`.
pub fn rhs(field: &FieldGrid, mu: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(mu.len(), field.len());
    let mut da = Vec::with_capacity(field.len());
    let mut db = Vec::with_capacity(field.len());
    for ((&a, &b), &m) in field.n_a().iter().zip(field.n_b()).zip(mu) {
        let (f, g) = hearing_probabilities(m);
        let (x, y) = rates(a, b, f, g);
        da.push(x);
        db.push(y);
    }
    (da, db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub dt: f64,
    pub integrator: Integrator,
    pub convolution: Convolution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { dt: 0.05, integrator: Integrator::Euler, convolution: Convolution::Spectral }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    pub steps: u64,
    pub cell_steps: u64,
    /// Cells that needed clamping or renormalization.
    pub renormalizations: u64,
    /// Smallest `n_AB` seen after any step, before correction.
    pub min_n_ab: f64,
}

impl SolverStats {
    pub fn renormalization_rate(&self) -> f64 {
        if self.cell_steps == 0 {
            0.0
        } else {
            self.renormalizations as f64 / self.cell_steps as f64
        }
    }
}

/// Explicit integrator for the field equation with disk-averaged coupling.
/// `μ` is recomputed from the current field after every step.
#[derive(Debug)]
pub struct MeanFieldSolver {
    field: FieldGrid,
    averager: Averager,
    options: SolverOptions,
    mu: Vec<f64>,
    src: Vec<f64>,
    stats: SolverStats,
    /// `(t, dt, k)`: the clock reads `t + k dt` while the step size stays
    /// `dt`, so repeated steps do not accumulate rounding.
    clock: (f64, f64, u64),
}

impl MeanFieldSolver {
    pub fn new(field: FieldGrid, options: SolverOptions) -> Result<Self> {
        check_dt(options.dt)?;
        let averager = Averager::new(field.m(), field.r(), options.convolution);
        let n = field.len();
        let mut solver = MeanFieldSolver {
            field,
            averager,
            options,
            mu: vec![0.0; n],
            src: vec![0.0; n],
            stats: SolverStats { min_n_ab: f64::INFINITY, ..SolverStats::default() },
            clock: (0.0, 0.0, 0),
        };
        solver.refresh_mu();
        Ok(solver)
    }

    pub fn field(&self) -> &FieldGrid {
        &self.field
    }

    pub fn into_field(self) -> FieldGrid {
        self.field
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    /// Mean field consistent with the current field.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn t(&self) -> f64 {
        self.field.t()
    }

    fn refresh_mu(&mut self) {
        fill_source(self.field.q(), self.field.n_a(), self.field.n_b(), &mut self.src);
        self.averager.apply(&self.src, &mut self.mu);
    }

    pub fn step(&mut self) -> Result<()> {
        match self.options.integrator {
            Integrator::Euler => self.step_euler(self.options.dt),
            Integrator::Rk4 => self.step_rk4(self.options.dt),
        }
    }

    pub fn step_euler(&mut self, dt: f64) -> Result<()> {
        check_dt(dt)?;
        let mu = &self.mu;
        let (n_a, n_b) = self.field.parts_mut();
        for ((a, b), &m) in n_a.iter_mut().zip(n_b.iter_mut()).zip(mu) {
            let (f, g) = hearing_probabilities(m);
            let (da, db) = rates(*a, *b, f, g);
            *a += dt * da;
            *b += dt * db;
        }
        self.finish_step(dt);
        Ok(())
    }

    /// Classical fourth-order Runge-Kutta; `μ` is recomputed at every stage.
    pub fn step_rk4(&mut self, dt: f64) -> Result<()> {
        check_dt(dt)?;
        let n = self.field.len();
        let a0 = self.field.n_a().to_vec();
        let b0 = self.field.n_b().to_vec();
        let mut acc_a = vec![0.0; n];
        let mut acc_b = vec![0.0; n];
        let mut stage_a = a0.clone();
        let mut stage_b = b0.clone();
        let mut mu = self.mu.clone();
        for (k, (weight, advance)) in [(1.0, 0.5), (2.0, 0.5), (2.0, 1.0), (1.0, 0.0)].into_iter().enumerate() {
            if k > 0 {
                fill_source(self.field.q(), &stage_a, &stage_b, &mut self.src);
                self.averager.apply(&self.src, &mut mu);
            }
            for i in 0..n {
                let (f, g) = hearing_probabilities(mu[i]);
                let (da, db) = rates(stage_a[i], stage_b[i], f, g);
                acc_a[i] += weight * da;
                acc_b[i] += weight * db;
                stage_a[i] = a0[i] + advance * dt * da;
                stage_b[i] = b0[i] + advance * dt * db;
            }
        }
        let (n_a, n_b) = self.field.parts_mut();
        for i in 0..n {
            n_a[i] = a0[i] + dt / 6.0 * acc_a[i];
            n_b[i] = b0[i] + dt / 6.0 * acc_b[i];
        }
        self.finish_step(dt);
        Ok(())
    }

    fn finish_step(&mut self, dt: f64) {
        let (n_a, n_b) = self.field.parts_mut();
        let mut events = 0u64;
        let mut min_ab = f64::INFINITY;
        for (a, b) in n_a.iter_mut().zip(n_b.iter_mut()) {
            let n_ab = 1.0 - (*a + *b);
            min_ab = min_ab.min(n_ab);
            let mut touched = false;
            if *a < 0.0 {
                touched |= *a < -1e-12;
                *a = 0.0;
            }
            if *b < 0.0 {
                touched |= *b < -1e-12;
                *b = 0.0;
            }
            let total = *a + *b;
            if total > 1.0 + 1e-12 {
                *a /= total;
                *b /= total;
                touched = true;
            }
            if touched {
                events += 1;
            }
        }
        if events > 0 {
            debug!("step {}: renormalized {events} cells", self.stats.steps + 1);
        }
        self.stats.steps += 1;
        self.stats.cell_steps += self.field.len() as u64;
        self.stats.renormalizations += events;
        self.stats.min_n_ab = self.stats.min_n_ab.min(min_ab);
        if self.clock.1 == dt {
            self.clock.2 += 1;
        } else {
            self.clock = (self.field.t(), dt, 1);
        }
        let (t0, h, k) = self.clock;
        self.field.set_t(t0 + k as f64 * h);
        self.refresh_mu();
    }

    /// Steps until `t >= t_end` (to within half a step).
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.field.t() < t_end - 0.5 * self.options.dt {
            self.step()?;
        }
        Ok(())
    }

    /// Per-cell distance from the slow manifold, `|s - 4μ/(μ²+3)|`.
    pub fn slow_manifold_gap(&self) -> Vec<f64> {
        self.field
            .n_a()
            .iter()
            .zip(self.field.n_b())
            .zip(&self.mu)
            .map(|((a, b), &m)| ((a - b) - slow_manifold_s(m)).abs())
            .collect()
    }
}

/// Order parameter entering the disk average. With committed agents the
/// average is over `(1-q)s + q`.
fn fill_source(q: f64, n_a: &[f64], n_b: &[f64], src: &mut [f64]) {
    if q > 0.0 {
        for ((s, a), b) in src.iter_mut().zip(n_a).zip(n_b) {
            *s = (1.0 - q) * (a - b) + q;
        }
    } else {
        for ((s, a), b) in src.iter_mut().zip(n_a).zip(n_b) {
            *s = a - b;
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(invalid("dt", format!("time step must lie in (0, {MAX_DT}], got {dt}")));
    }
    Ok(())
}

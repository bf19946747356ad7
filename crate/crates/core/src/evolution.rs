//! Integration of the master equation `dρ/dt = L_*(ρ)` and of the adjoint
//! equation `dx/dt = L(x)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::generator::WcltGenerator;
use crate::linalg::{
    c64, ensure_dim, frobenius, hermitian_eigenvalues, hermitian_part, to_pair_rows, trace, CMatrix, DensityMatrix,
    HermitianOperator,
};

/// Retained states may be renormalised once their trace drifts this far.
const TRACE_RENORM_TOL: f64 = 1e-10;
/// Integration aborts when a retained state has an eigenvalue below `−POSITIVITY_FLOOR`.
const POSITIVITY_FLOOR: f64 = 1e-6;
const DEFAULT_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    /// Equal steps of at most `dt` between consecutive sample times.
    Fixed { dt: f64 },
    /// Step doubling with a per-step error bound relative to `max(1, ‖y‖_F)`.
    Adaptive { tol: f64 },
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl::Adaptive { tol: 1e-11 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    pub control: StepControl,
    /// Increasing times in `(0, t_end]`; empty means uniform samples.
    pub sample_times: Vec<f64>,
    pub keep_states: bool,
}

impl EvolveOptions {
    pub fn fixed(dt: f64) -> Self {
        Self {
            control: StepControl::Fixed { dt },
            ..Self::default()
        }
    }

    pub fn adaptive(tol: f64) -> Self {
        Self {
            control: StepControl::Adaptive { tol },
            ..Self::default()
        }
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn keep_states(mut self, keep: bool) -> Self {
        self.keep_states = keep;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.control {
            StepControl::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                Err(Error::InvalidParameter(format!("step size must be positive, got {dt}")))
            }
            StepControl::Adaptive { tol } if !(tol > 0.0 && tol.is_finite()) => {
                Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")))
            }
            _ => Ok(()),
        }
    }

    fn sample_grid(&self, t_end: f64) -> Result<Vec<f64>> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
        }
        let mut grid = if self.sample_times.is_empty() {
            (1..=DEFAULT_SAMPLES).map(|k| t_end * k as f64 / DEFAULT_SAMPLES as f64).collect()
        } else {
            let t = self.sample_times.clone();
            if t.iter().any(|&x| !(x > 0.0) || x > t_end) || t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter(
                    "sample times must be increasing and lie in (0, t_end]".into(),
                ));
            }
            t
        };
        if *grid.last().unwrap() < t_end {
            grid.push(t_end);
        }
        Ok(grid)
    }
}

fn rk4_step<F: Fn(&CMatrix) -> CMatrix>(f: &F, y: &CMatrix, h: f64) -> CMatrix {
    let k1 = f(y);
    rk4_step_with(f, y, h, k1)
}

fn rk4_step_with<F: Fn(&CMatrix) -> CMatrix>(f: &F, y: &CMatrix, h: f64, k1: CMatrix) -> CMatrix {
    let half = c64(0.5 * h, 0.0);
    let k2 = f(&(y + &k1 * half));
    let k3 = f(&(y + &k2 * half));
    let k4 = f(&(y + &k3 * c64(h, 0.0)));
    y + (k1 + (k2 + k3) * c64(2.0, 0.0) + k4) * c64(h / 6.0, 0.0)
}

struct Stepper<F> {
    f: F,
    control: StepControl,
    h: f64,
    h_max: f64,
    steps: usize,
}

impl<F: Fn(&CMatrix) -> CMatrix> Stepper<F> {
    fn new(f: F, control: StepControl, norm_est: f64) -> Self {
        let (h, h_max) = if norm_est > 0.0 {
            (0.05 / norm_est, 2.0 / norm_est)
        } else {
            (1.0, f64::INFINITY)
        };
        Self {
            f,
            control,
            h,
            h_max,
            steps: 0,
        }
    }

    /// Advances `y` from `t` to `target`. `after_step` sees each accepted
    /// state and may stop early by returning `true`.
    fn advance(
        &mut self,
        y: &mut CMatrix,
        t: &mut f64,
        target: f64,
        mut after_step: impl FnMut(&CMatrix, f64) -> bool,
    ) -> Result<bool> {
        match self.control {
            StepControl::Fixed { dt } => {
                let span = target - *t;
                let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
                let h = span / n as f64;
                let t0 = *t;
                for k in 1..=n {
                    *y = rk4_step(&self.f, y, h);
                    *t = if k == n { target } else { t0 + h * k as f64 };
                    self.steps += 1;
                    if after_step(y, *t) {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            StepControl::Adaptive { tol } => {
                while *t < target {
                    let remaining = target - *t;
                    let last = self.h >= remaining;
                    let h = if last { remaining } else { self.h };
                    if h <= 1e-14 * t.abs().max(1.0) && !last {
                        return Err(Error::StepUnderflow(*t));
                    }
                    let k1 = (self.f)(y);
                    let full = rk4_step_with(&self.f, y, h, k1.clone());
                    let mid = rk4_step_with(&self.f, y, 0.5 * h, k1);
                    let two = rk4_step(&self.f, &mid, 0.5 * h);
                    let scale = frobenius(y).max(1.0);
                    let err = frobenius(&(&two - &full)) / 15.0 / scale;
                    let factor = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0) };
                    if err <= tol {
                        *y = two;
                        *t = if last { target } else { *t + h };
                        self.steps += 1;
                        if !last || factor < 1.0 {
                            self.h = (h * factor).min(self.h_max);
                        }
                        if after_step(y, *t) {
                            return Ok(true);
                        }
                    } else {
                        self.h = h * factor;
                        if self.h <= 1e-14 * t.abs().max(1.0) {
                            return Err(Error::StepUnderflow(*t));
                        }
                    }
                }
                Ok(false)
            }
        }
    }
}

/// Symmetrises, renormalises drifted traces and checks the eigenvalue floor.
/// Returns `(trace drift before renormalisation, minimum eigenvalue)`.
fn condition_state(rho: &mut CMatrix, t: f64) -> Result<(f64, f64)> {
    *rho = hermitian_part(rho);
    let tr = trace(rho).re;
    let drift = (tr - 1.0).abs();
    if drift > TRACE_RENORM_TOL {
        *rho /= c64(tr, 0.0);
    }
    let min_eig = hermitian_eigenvalues(rho)[0];
    if min_eig < -POSITIVITY_FLOOR {
        return Err(Error::PositivityViolation { t, min_eig });
    }
    Ok((drift, min_eig))
}

fn observe(rho: &CMatrix, obs: &[(String, HermitianOperator)], out: &mut [Vec<f64>]) {
    for ((_, x), col) in obs.iter().zip(out.iter_mut()) {
        col.push((x.matrix() * rho).trace().re);
    }
}

/// Sampled solution of the master equation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Present when states were retained.
    pub states: Option<Vec<DensityMatrix>>,
    pub observables: Vec<(String, Vec<f64>)>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.as_ref().and_then(|s| s.last())
    }

    /// `t,<obs1>,<obs2>,...` followed by one row per sample.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for (name, _) in &self.observables {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(s, "{t}");
            for (_, v) in &self.observables {
                let _ = write!(s, ",{}", v[i]);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    /// Retained states as JSON: a list of `{t, rho}` with `rho` in `[re, im]` rows.
    pub fn states_json(&self) -> Option<serde_json::Value> {
        let states = self.states.as_ref()?;
        let items = self
            .times
            .iter()
            .zip(states)
            .map(|(t, s)| serde_json::json!({"t": t, "rho": to_pair_rows(s.matrix())}))
            .collect();
        Some(serde_json::Value::Array(items))
    }
}

/// Integrates `dρ/dt = L_*(ρ)` on `[0, t_end]`, sampling at `t = 0` and at
/// the option's sample times.
pub fn evolve(
    gen: &WcltGenerator,
    rho0: &DensityMatrix,
    t_end: f64,
    options: &EvolveOptions,
    observables: &[(String, HermitianOperator)],
) -> Result<Trajectory> {
    options.validate()?;
    ensure_dim(rho0.matrix(), gen.dim())?;
    for (_, x) in observables {
        ensure_dim(x.matrix(), gen.dim())?;
    }
    let grid = options.sample_grid(t_end)?;

    let mut stepper = Stepper::new(|r: &CMatrix| gen.predual(r), options.control, gen.norm_estimate());
    let mut rho = rho0.matrix().clone();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut obs: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len() + 1); observables.len()];
    observe(&rho, observables, &mut obs);
    let mut states = options.keep_states.then(|| vec![rho0.clone()]);
    let mut max_drift: f64 = 0.0;
    let mut min_eig = hermitian_eigenvalues(&rho)[0];

    for &target in &grid {
        stepper.advance(&mut rho, &mut t, target, |_, _| false)?;
        let (drift, m) = condition_state(&mut rho, t)?;
        max_drift = max_drift.max(drift);
        min_eig = min_eig.min(m);
        times.push(t);
        observe(&rho, observables, &mut obs);
        if let Some(s) = states.as_mut() {
            s.push(DensityMatrix::with_tolerances(rho.clone(), 1e-8, POSITIVITY_FLOOR)?);
        }
    }

    Ok(Trajectory {
        times,
        states,
        observables: observables.iter().map(|(n, _)| n.clone()).zip(obs).collect(),
        max_trace_drift: max_drift,
        min_eigenvalue: min_eig,
        steps: stepper.steps,
    })
}

/// Integrates `dx/dt = L(x)` and returns `T_t(x₀)` at `t = 0` and each sample time.
pub fn evolve_adjoint(
    gen: &WcltGenerator,
    x0: &HermitianOperator,
    t_end: f64,
    options: &EvolveOptions,
) -> Result<Vec<(f64, HermitianOperator)>> {
    options.validate()?;
    ensure_dim(x0.matrix(), gen.dim())?;
    let grid = options.sample_grid(t_end)?;
    let mut stepper = Stepper::new(|x: &CMatrix| gen.adjoint(x), options.control, gen.norm_estimate());
    let mut x = x0.matrix().clone();
    let mut t = 0.0;
    let mut out = vec![(0.0, x0.clone())];
    for &target in &grid {
        stepper.advance(&mut x, &mut t, target, |_, _| false)?;
        x = hermitian_part(&x);
        out.push((t, HermitianOperator::from_hermitian_part(&x)?));
    }
    Ok(out)
}

/// Outcome of a long-time integration.
#[derive(Clone, Debug)]
pub struct LimitReport {
    pub state: DensityMatrix,
    /// `‖L_*(state)‖_F`
    pub residual: f64,
    pub t: f64,
    pub converged: bool,
}

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;
pub const DEFAULT_T_MAX: f64 = 1e4;

/// Integrates until `‖L_*(ρ(t))‖_F ≤ residual_tol` or `t_max` is reached; in
/// the latter case the last iterate is returned with `converged = false`.
pub fn limit_state(
    gen: &WcltGenerator,
    rho0: &DensityMatrix,
    residual_tol: f64,
    t_max: f64,
) -> Result<LimitReport> {
    limit_state_with(gen, rho0, residual_tol, t_max, StepControl::default())
}

pub fn limit_state_with(
    gen: &WcltGenerator,
    rho0: &DensityMatrix,
    residual_tol: f64,
    t_max: f64,
    control: StepControl,
) -> Result<LimitReport> {
    if !(residual_tol > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidParameter("residual_tol and t_max must be positive".into()));
    }
    ensure_dim(rho0.matrix(), gen.dim())?;
    let residual = |r: &CMatrix| frobenius(&gen.predual(r));

    let mut rho = rho0.matrix().clone();
    let mut res = residual(&rho);
    let mut t = 0.0;
    if res <= residual_tol {
        return Ok(LimitReport {
            state: rho0.clone(),
            residual: res,
            t,
            converged: true,
        });
    }
    let mut stepper = Stepper::new(|r: &CMatrix| gen.predual(r), control, gen.norm_estimate());
    // Conditioning happens at chunk boundaries; the residual is checked every
    // few steps inside a chunk.
    let chunk = 1.0_f64;
    let mut counter = 0usize;
    while t < t_max {
        let target = (t + chunk).min(t_max);
        let hit = stepper.advance(&mut rho, &mut t, target, |y, _| {
            counter += 1;
            counter.is_multiple_of(8) && residual(&hermitian_part(y)) <= residual_tol
        })?;
        condition_state(&mut rho, t)?;
        res = residual(&rho);
        if hit || res <= residual_tol {
            break;
        }
    }
    let converged = res <= residual_tol;
    Ok(LimitReport {
        state: DensityMatrix::with_tolerances(rho, 1e-8, POSITIVITY_FLOOR)?,
        residual: res,
        t,
        converged,
    })
}

//! Integration of the characteristic field, first returns and the holonomy.
//!
//! The state is `[tau, theta, psi]` with `theta` and `psi` unwrapped. Level
//! curves of `f` in the `(tau, theta)` plane wind around `L_+ = (0, 0)` on
//! `f > 0` and around `L_- = (0, pi)` on `f < 0`, and the polar angle about
//! that center (with `tau` scaled by `sqrt(t Q(0))`) is strictly monotone
//! along trajectories. A first return is one full turn of that angle; the
//! holonomy is the accumulated change of `psi`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::integrator::{Control, Dopri5, Step};
use crate::reduced::{wrap_angle, wrap_signed, LevelDatum, ReducedModel, SPoint};

pub type State = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    /// Integrator relative and absolute tolerance.
    pub tol: f64,
    /// Allowed `|f - f0| / (1 + |f0|)` before the run is declared diverged.
    pub drift_budget: f64,
    pub max_steps: usize,
    /// Width in time to which return events are localized.
    pub event_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: 1e-10, drift_budget: 1e-6, max_steps: 1_000_000, event_tol: 1e-14 }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        FlowOptions { tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopCondition {
    Time(f64),
    /// Stop after this many returns to the starting `R`-orbit.
    Returns(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajStatus {
    Running,
    Returned,
    EndpointHit,
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<(f64, SPoint)>,
    /// Unwrapped chart states matching `samples`.
    pub states: Vec<(f64, State)>,
    pub f0: f64,
    pub max_drift: f64,
    pub status: TrajStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnRecord {
    pub t_return: f64,
    /// Holonomy angle in `[0, 2 pi)` in the coordinate `exp(alpha w)`.
    pub xi_angle: f64,
    pub xi_unwrapped: f64,
    pub level: LevelDatum,
    pub max_drift: f64,
    pub steps: usize,
    pub end: State,
}

/// Which field drives the flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    W,
    /// `A_w^H + b J A_w^H`, proportional to `W` with unit `psi`-speed.
    WPrime,
}

pub fn state_of(s: &SPoint) -> State {
    [s.chart_tau(), s.theta(), s.psi()]
}

fn endpoint_error(e: Error) -> Error {
    match e {
        Error::Regularity("endpoint-adjacent level") => Error::EndpointHit,
        other => other,
    }
}

/// Chart velocity of the chosen field, scaled by `sign`.
pub fn field_rates(model: &ReducedModel, field: Field, sign: f64, y: &State) -> Result<State> {
    let s = model.chart_point(y[0], y[1], y[2])?;
    let w = model.w_field(&s).map_err(endpoint_error)?;
    let vel = match field {
        Field::W => w,
        Field::WPrime => {
            let ah = model.horizontal_aw(&s)?;
            let jah = model.j_horizontal_aw(&s)?;
            let e2 = ah.dz.norm().powi(2);
            let alpha = crate::geometry::metric_g(&w.dz, &ah.dz)? / e2;
            let beta = crate::geometry::metric_g(&w.dz, &jah.dz)? / e2;
            if !(alpha.abs() > 1e-12 * beta.abs()) {
                return Err(Error::Domain("W is proportional to J A_w^H (f vanishes)"));
            }
            let b = beta / alpha;
            crate::reduced::SVelocity {
                dz: ah.dz.add(&jah.dz.scale(num_complex::Complex64::new(b, 0.0)))?,
                dtheta: ah.dtheta + b * jah.dtheta,
            }
        }
    };
    let r = model.chart_rates(&s, &vel)?;
    Ok([sign * r.tau, sign * r.theta, sign * r.psi])
}

/// Polar-angle monitor about `L_+` or `L_-`.
#[derive(Clone, Copy, Debug)]
pub struct Winding {
    center_theta: f64,
    scale: f64,
}

impl Winding {
    pub fn new(model: &ReducedModel, positive: bool) -> Result<Self> {
        let q0 = model.gram_q(0.0)?;
        let scale = (model.fs().einstein_constant() * q0).sqrt();
        Ok(Winding { center_theta: if positive { 0.0 } else { PI }, scale })
    }

    pub fn angle(&self, y: &State) -> f64 {
        wrap_signed(y[1] - self.center_theta).atan2(self.scale * y[0])
    }

    pub fn radius(&self, y: &State) -> f64 {
        wrap_signed(y[1] - self.center_theta).hypot(self.scale * y[0])
    }
}

struct FlowEnd {
    t: f64,
    y: State,
    steps: usize,
    max_drift: f64,
    turns_reached: bool,
}

/// Core loop shared by every driver.
#[allow(clippy::too_many_arguments)]
fn flow(
    model: &ReducedModel,
    field: Field,
    sign: f64,
    y0: State,
    stop: StopCondition,
    opts: &FlowOptions,
    mut record: Option<&mut Vec<(f64, State)>>,
) -> Result<FlowEnd> {
    let f0 = model.f_value(&model.chart_point(y0[0], y0[1], y0[2])?)?;
    let winding = Winding::new(model, f0 >= 0.0)?;
    let target = match stop {
        StopCondition::Returns(q) => Some(TAU * q as f64),
        StopCondition::Time(_) => None,
    };
    let t_end = match stop {
        StopCondition::Time(t) => Some(t),
        StopCondition::Returns(_) => None,
    };
    let rhs = move |y: &State| field_rates(model, field, sign, y);
    let mut f = rhs;
    let mut g = rhs;
    let solver = Dopri5 { rtol: opts.tol, atol: opts.tol, h_max: f64::INFINITY, max_steps: opts.max_steps };
    let mut total = 0.0;
    let mut max_drift: f64 = 0.0;
    let mut event: Option<(f64, State)> = None;
    if let Some(buf) = record.as_deref_mut() {
        buf.push((0.0, y0));
    }
    let hook = |step: &Step<3>| -> Result<Control> {
        let d = wrap_signed(winding.angle(step.y1) - winding.angle(step.y0));
        if target.is_some() && d.abs() > 0.5 {
            return Ok(Control::Reject);
        }
        let f1 = model.f_value(&model.chart_point(step.y1[0], step.y1[1], step.y1[2])?)?;
        let drift = (f1 - f0).abs();
        max_drift = max_drift.max(drift);
        if drift > opts.drift_budget * (1.0 + f0.abs()) {
            return Err(Error::IntegrationDiverged { drift, budget: opts.drift_budget });
        }
        if let Some(target) = target {
            if (total + d).abs() >= target {
                let (mut lo, mut hi) = (0.0, step.h);
                let mut y_hi = *step.y1;
                while hi - lo > opts.event_tol * (1.0 + step.t0) {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let ym = solver.substep(&mut g, step.y0, mid)?;
                    let dm = wrap_signed(winding.angle(&ym) - winding.angle(step.y0));
                    if (total + dm).abs() >= target {
                        hi = mid;
                        y_hi = ym;
                    } else {
                        lo = mid;
                    }
                }
                event = Some((step.t0 + hi, y_hi));
                return Ok(Control::Stop);
            }
        }
        total += d;
        if let Some(buf) = record.as_deref_mut() {
            buf.push((step.t0 + step.h, *step.y1));
        }
        Ok(Control::Continue)
    };
    let out = solver.run(&mut f, y0, t_end, hook)?;
    match event {
        Some((t, y)) => {
            if let Some(buf) = record {
                buf.push((t, y));
            }
            Ok(FlowEnd { t, y, steps: out.steps, max_drift, turns_reached: true })
        }
        None => Ok(FlowEnd { t: out.t, y: out.y, steps: out.steps, max_drift, turns_reached: false }),
    }
}

fn check_return_seed(model: &ReducedModel, s0: &SPoint) -> Result<()> {
    let f0 = model.f_value(s0)?;
    let w = Winding::new(model, f0 >= 0.0)?;
    if w.radius(&state_of(s0)) < 1e-6 {
        return Err(Error::Domain("seed lies on L+ or L-"));
    }
    if f0.abs() < 1e-9 {
        return Err(Error::Domain("seed lies on the zero level"));
    }
    Ok(())
}

/// Integrates `W` from `s0` and records every accepted step.
pub fn integrate(
    model: &ReducedModel,
    s0: &SPoint,
    stop: StopCondition,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    integrate_signed(model, s0, stop, opts, 1.0)
}

/// As [`integrate`], flowing along `sign * W`.
pub fn integrate_signed(
    model: &ReducedModel,
    s0: &SPoint,
    stop: StopCondition,
    opts: &FlowOptions,
    sign: f64,
) -> Result<Trajectory> {
    if let StopCondition::Returns(_) = stop {
        check_return_seed(model, s0)?;
    }
    let f0 = model.f_value(s0)?;
    let mut states = Vec::new();
    let end = match flow(model, Field::W, sign, state_of(s0), stop, opts, Some(&mut states)) {
        Ok(end) => end,
        Err(Error::StepLimit(_)) => {
            return Ok(finish(model, states, f0, 0.0, TrajStatus::StepLimit));
        }
        Err(e) => return Err(e),
    };
    let status = if end.turns_reached { TrajStatus::Returned } else { TrajStatus::Running };
    Ok(finish(model, states, f0, end.max_drift, status))
}

fn finish(model: &ReducedModel, states: Vec<(f64, State)>, f0: f64, max_drift: f64, status: TrajStatus) -> Trajectory {
    let samples = states
        .iter()
        .filter_map(|(t, y)| model.chart_point(y[0], y[1], y[2]).ok().map(|s| (*t, s)))
        .collect();
    Trajectory { samples, states, f0, max_drift, status }
}

/// Flows until the `(tau, theta)` projection completes `turns` full turns.
pub fn returns(model: &ReducedModel, s0: &SPoint, turns: usize, opts: &FlowOptions) -> Result<ReturnRecord> {
    check_return_seed(model, s0)?;
    let y0 = state_of(s0);
    let end = flow(model, Field::W, 1.0, y0, StopCondition::Returns(turns), opts, None)?;
    if !end.turns_reached {
        return Err(Error::ModelViolation("flow ended without an event"));
    }
    let xi = end.y[2] - y0[2];
    Ok(ReturnRecord {
        t_return: end.t,
        xi_angle: wrap_angle(xi),
        xi_unwrapped: xi,
        level: model.level_datum(s0)?,
        max_drift: end.max_drift,
        steps: end.steps,
        end: end.y,
    })
}

pub fn first_return(model: &ReducedModel, s0: &SPoint, opts: &FlowOptions) -> Result<ReturnRecord> {
    returns(model, s0, 1, opts)
}

/// Chart state after flowing `sign * W` for time `dt` from `y`.
pub fn advance(model: &ReducedModel, y: State, dt: f64, sign: f64, opts: &FlowOptions) -> Result<State> {
    Ok(flow(model, Field::W, sign, y, StopCondition::Time(dt), opts, None)?.y)
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub s: f64,
    pub result: Result<ReturnRecord>,
}

/// Holonomy at one level, seeded on `theta = 0` (or `pi`) with `tau > 0`.
pub fn xi_at_level(model: &ReducedModel, s: f64, opts: &FlowOptions) -> Result<ReturnRecord> {
    let seed = model.seed_on_level(s)?;
    first_return(model, &seed, opts)
}

pub fn xi_scan(model: &ReducedModel, levels: &[f64], opts: &FlowOptions) -> Vec<ScanRow> {
    levels.iter().map(|&s| ScanRow { s, result: xi_at_level(model, s, opts) }).collect()
}

/// Evenly spaced levels `f_+ * [lo, hi]`.
pub fn level_grid(f_plus: f64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return alloc::vec![f_plus * 0.5 * (lo + hi)];
    }
    (0..count).map(|i| f_plus * (lo + (hi - lo) * i as f64 / (count - 1) as f64)).collect()
}

/// Reduced fractions `p/q` with `q <= q_max` inside the open interval.
pub fn rational_targets(lo: f64, hi: f64, q_max: u32) -> Vec<(i64, u32)> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        let p_lo = (lo * q as f64).floor() as i64;
        let p_hi = (hi * q as f64).ceil() as i64;
        for p in p_lo..=p_hi {
            let r = p as f64 / q as f64;
            if r > lo && r < hi && crate::linalg::gcd(p as i128, q as i128) == 1 {
                out.push((p, q));
            }
        }
    }
    out.sort_by(|a, b| (a.0 as f64 / a.1 as f64).total_cmp(&(b.0 as f64 / b.1 as f64)));
    out
}

/// Adjacent scan levels whose unwrapped holonomy straddles `2 pi p / q`.
pub fn locate_brackets(rows: &[ScanRow], p: i64, q: u32) -> Vec<(f64, f64)> {
    let target = TAU * p as f64 / q as f64;
    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|rec| (r.s, rec.xi_unwrapped.abs() - target)))
        .collect();
    ok.windows(2)
        .filter(|w| w[0].1 == 0.0 || (w[0].1 < 0.0) != (w[1].1 < 0.0))
        .map(|w| (w[0].0, w[1].0))
        .collect()
}

#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub p: i64,
    pub q: u32,
    pub level: f64,
    pub seed: SPoint,
    pub xi_unwrapped: f64,
    /// Time of one return.
    pub t_return: f64,
    /// Time of `q` returns, the period of the closed orbit in `S`.
    pub period: f64,
    pub closure: f64,
    pub max_drift: f64,
}

/// Distance in `S` between two chart states: Fubini–Study distance of the
/// base points combined with the fiber phase difference. `psi` is taken mod
/// `2 pi`, since `exp(2 pi w)` lies in `T''`.
pub fn s_distance(model: &ReducedModel, a: &State, b: &State) -> Result<f64> {
    let za = model.point_on_z(a[0], wrap_signed(a[2] - b[2]))?;
    let zb = model.point_on_z(b[0], 0.0)?;
    Ok(za.fs_distance(&zb).hypot(wrap_signed(a[1] - b[1])))
}

/// Solves `xi(s) = 2 pi p / q` (with the sign of the level) by Illinois false
/// position inside `bracket`, then verifies closure after `q` returns.
pub fn find_periodic(
    model: &ReducedModel,
    p: i64,
    q: u32,
    bracket: (f64, f64),
    opts: &FlowOptions,
) -> Result<PeriodicOrbit> {
    if q == 0 || crate::linalg::gcd(p as i128, q as i128) != 1 {
        return Err(Error::Domain("p/q must be a reduced fraction"));
    }
    let (lo, hi) = bracket;
    let sign = if lo > 0.0 { 1.0 } else { -1.0 };
    let target = sign * TAU * p as f64 / q as f64;
    let eval = |s: f64| -> Result<f64> { Ok(xi_at_level(model, s, opts)?.xi_unwrapped - target) };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        b = a;
        fb = fa;
    } else if (fa < 0.0) == (fb < 0.0) {
        return Err(Error::Bracket { lo, hi });
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if fb.abs() < 1e-10 || (b - a).abs() < 1e-15 * a.abs().max(b.abs()) {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = eval(c)?;
        if (fc < 0.0) == (fb < 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            side = 1;
        }
    }
    let level = b;
    if fb.abs() > 1e-9 {
        return Err(Error::Refinement);
    }
    let seed = model.seed_on_level(level)?;
    let one = first_return(model, &seed, opts)?;
    let all = returns(model, &seed, q as usize, opts)?;
    let y0 = state_of(&seed);
    let closure = s_distance(model, &y0, &all.end)?;
    if closure > 1e-6 {
        return Err(Error::Closure { distance: closure });
    }
    Ok(PeriodicOrbit {
        p,
        q,
        level,
        seed,
        xi_unwrapped: one.xi_unwrapped,
        t_return: one.t_return,
        period: all.t_return,
        closure,
        max_drift: all.max_drift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossCheck {
    /// Elapsed `W'`-time to the first return; equals the unwrapped holonomy.
    pub t_m: f64,
    pub angle: f64,
}

/// Holonomy from the reparametrized flow `W' = A_w^H + b J A_w^H`.
pub fn xi_crosscheck(model: &ReducedModel, s0: &SPoint, opts: &FlowOptions) -> Result<CrossCheck> {
    if !(model.f_value(s0)? > 0.0) {
        return Err(Error::Domain("cross-check needs a seed with f > 0"));
    }
    check_return_seed(model, s0)?;
    let end = flow(model, Field::WPrime, 1.0, state_of(s0), StopCondition::Returns(1), opts, None)?;
    Ok(CrossCheck { t_m: end.t, angle: wrap_angle(end.t) })
}

/// `tau` rate along `J A_w^H`.
pub fn tau_rate_along_jaw(model: &ReducedModel, s: &SPoint) -> Result<f64> {
    let v = model.j_horizontal_aw(s)?;
    Ok(model.chart_rates(s, &v)?.tau)
}

//! Dormand–Prince 5(4) with FSAL and a per-step acceptance hook.
//!
//! The hook sees every accepted step and may stop the run or veto the step,
//! which callers use for drift bookkeeping, angle-rate limits and event
//! bracketing. Events are then localized with [`Dopri5::substep`], a single
//! uncontrolled step from the last accepted state.

#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
    /// Discard the step and retry with half the step size.
    Reject,
}

#[derive(Clone, Copy, Debug)]
pub struct Step<'a, const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: &'a [f64; N],
    pub y1: &'a [f64; N],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub steps: usize,
    /// False when the run ended at `t_end` rather than by the hook.
    pub stopped: bool,
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Dopri5 { rtol: tol, atol: tol, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }

    /// One step of size `h` from `y` with `k1 = f(y)`: returns the fifth-order
    /// solution, the error estimate and `f` at the new point.
    pub fn raw_step<F, const N: usize>(
        &self,
        f: &mut F,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> Result<([f64; N], [f64; N], [f64; N])>
    where
        F: FnMut(&[f64; N]) -> Result<[f64; N]>,
    {
        let k2 = f(&axpy(y, &[(h * A21, k1)]))?;
        let k3 = f(&axpy(y, &[(h * A31, k1), (h * A32, &k2)]))?;
        let k4 = f(&axpy(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]))?;
        let k5 = f(&axpy(y, &[(h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]))?;
        let k6 = f(&axpy(
            y,
            &[(h * A61, k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
        ))?;
        let y1 = axpy(y, &[(h * B1, k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
        let k7 = f(&y1)?;
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        Ok((y1, err, k7))
    }

    /// Single uncontrolled step, used to localize events inside an accepted step.
    pub fn substep<F, const N: usize>(&self, f: &mut F, y: &[f64; N], h: f64) -> Result<[f64; N]>
    where
        F: FnMut(&[f64; N]) -> Result<[f64; N]>,
    {
        let k1 = f(y)?;
        Ok(self.raw_step(f, y, &k1, h)?.0)
    }

    fn err_norm<const N: usize>(&self, y0: &[f64; N], y1: &[f64; N], err: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y0[i].abs().max(y1[i].abs());
            s += (err[i] / sc).powi(2);
        }
        (s / N as f64).sqrt()
    }

    fn initial_step<const N: usize>(&self, y: &[f64; N], k1: &[f64; N]) -> f64 {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y[i].abs();
            d0 += (y[i] / sc).powi(2);
            d1 += (k1[i] / sc).powi(2);
        }
        let h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * (d0 / d1).sqrt() };
        h.min(self.h_max)
    }

    /// Integrates the autonomous system from `y0` until the hook stops the run,
    /// `t_end` is reached, or the step budget runs out.
    pub fn run<F, G, const N: usize>(
        &self,
        f: &mut F,
        y0: [f64; N],
        t_end: Option<f64>,
        mut hook: G,
    ) -> Result<Outcome<N>>
    where
        F: FnMut(&[f64; N]) -> Result<[f64; N]>,
        G: FnMut(&Step<N>) -> Result<Control>,
    {
        let mut y = y0;
        let mut t = 0.0;
        let mut k1 = f(&y)?;
        let mut h = self.initial_step(&y, &k1);
        let mut steps = 0;
        loop {
            if let Some(te) = t_end {
                if t >= te {
                    return Ok(Outcome { t, y, steps, stopped: false });
                }
                h = h.min(te - t);
            }
            if steps >= self.max_steps {
                return Err(Error::StepLimit(self.max_steps));
            }
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::StepUnderflow(t));
            }
            let (y1, err, k7) = self.raw_step(f, &y, &k1, h)?;
            let e = self.err_norm(&y, &y1, &err);
            if !e.is_finite() {
                h *= 0.25;
                continue;
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            if e > 1.0 {
                h *= factor.min(1.0);
                continue;
            }
            let last = t_end.is_some_and(|te| t + h >= te);
            let step = Step { t0: t, h, y0: &y, y1: &y1 };
            match hook(&step)? {
                Control::Reject => {
                    h *= 0.5;
                    continue;
                }
                ctl => {
                    t = if last { t_end.unwrap_or(t + h) } else { t + h };
                    y = y1;
                    k1 = k7;
                    steps += 1;
                    if ctl == Control::Stop {
                        return Ok(Outcome { t, y, steps, stopped: true });
                    }
                }
            }
            h = (h * factor).min(self.h_max);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let mut f = |y: &[f64; 2]| Ok([y[1], -y[0]]);
        let out = Dopri5::new(1e-12)
            .run(&mut f, [1.0, 0.0], Some(core::f64::consts::TAU), |_| Ok(Control::Continue))
            .unwrap();
        assert!((out.y[0] - 1.0).abs() < 1e-9 && out.y[1].abs() < 1e-9, "{:?}", out.y);
    }

    #[test]
    fn hook_can_stop() {
        let mut f = |y: &[f64; 1]| Ok([y[0]]);
        let out = Dopri5::new(1e-10)
            .run(&mut f, [1.0], None, |s| Ok(if s.y1[0] > 2.0 { Control::Stop } else { Control::Continue }))
            .unwrap();
        assert!(out.stopped && out.y[0] > 2.0);
    }
}

//! Dormand–Prince 5(4) with adaptive steps and continuous extension.

use crate::error::{FinslerError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Absolute and relative local error target per step.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: 1e-9,
            max_steps: 200_000,
        }
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Segment {
    fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        (0..self.r[0].len())
            .map(|i| {
                self.r[0][i]
                    + th * (self.r[1][i]
                        + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])))
            })
            .collect()
    }
}

/// Dense solution of an initial value problem.
#[derive(Clone, Debug)]
pub struct Trajectory {
    segments: Vec<Segment>,
    pub t0: f64,
    pub t_end: f64,
    pub y0: Vec<f64>,
    pub y_end: Vec<f64>,
    /// Largest normalized local error estimate among accepted steps.
    pub max_error: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    /// State at `t` from the continuous extension.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let forward = self.t_end >= self.t0;
        if (forward && t <= self.t0) || (!forward && t >= self.t0) || self.segments.is_empty() {
            return self.y0.clone();
        }
        if (forward && t >= self.t_end) || (!forward && t <= self.t_end) {
            return self.y_end.clone();
        }
        let idx = self.segments.partition_point(|s| {
            let end = s.t0 + s.h;
            if forward {
                end < t
            } else {
                end > t
            }
        });
        self.segments[idx.min(self.segments.len() - 1)].eval(t)
    }

    /// Continues this trajectory with one starting where it ends.
    pub fn append(&mut self, next: Trajectory) {
        self.segments.extend(next.segments);
        self.t_end = next.t_end;
        self.y_end = next.y_end;
        self.max_error = self.max_error.max(next.max_error);
        self.steps += next.steps;
        self.rejected += next.rejected;
    }

    /// `count + 1` evenly spaced samples including both ends.
    pub fn sample(&self, count: usize) -> Vec<(f64, Vec<f64>)> {
        let count = count.max(1);
        (0..=count)
            .map(|k| {
                let t = if k == count {
                    self.t_end
                } else {
                    self.t0 + (self.t_end - self.t0) * k as f64 / count as f64
                };
                (t, self.at(t))
            })
            .collect()
    }
}

fn axpy(y: &[f64], h: f64, ks: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, c) in ks.iter().zip(coef) {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
pub fn dopri5<F>(f: F, t0: f64, y0: &[f64], t_end: f64, opts: OdeOptions) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    if !(opts.tol > 0.0) {
        return Err(FinslerError::InvalidParams(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let mut traj = Trajectory {
        segments: Vec::new(),
        t0,
        t_end,
        y0: y0.to_vec(),
        y_end: y0.to_vec(),
        max_error: 0.0,
        steps: 0,
        rejected: 0,
    };
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(traj);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = f(t, &y)?;
    // initial step from the scale of y and y'
    let scale = |v: &[f64], w: &[f64]| -> f64 {
        let s: f64 = v
            .iter()
            .zip(w)
            .map(|(a, b)| (a / (opts.tol + opts.tol * b.abs())).powi(2))
            .sum();
        (s / v.len() as f64).sqrt()
    };
    let d0 = scale(&y, &y);
    let d1 = scale(&k1, &y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span.abs()) * dir;
    loop {
        if traj.steps + traj.rejected >= opts.max_steps {
            return Err(FinslerError::IntegrationStalled { t, state: y });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        let mut ks: Vec<Vec<f64>> = vec![k1.clone()];
        for s in 1..7 {
            let ys = axpy(&y, h, &ks, &A[s][..s]);
            ks.push(f(t + C[s] * h, &ys)?);
        }
        let y_new = axpy(&y, h, &ks[..6], &A[6][..6]);
        let err_vec = axpy(&vec![0.0; y.len()], h, &ks, &E);
        let err = err_vec
            .iter()
            .zip(y.iter().zip(&y_new))
            .map(|(e, (a, b))| e.abs() / (opts.tol + opts.tol * a.abs().max(b.abs())))
            .fold(0.0, f64::max);
        if !err.is_finite() {
            h *= 0.25;
        } else if err <= 1.0 {
            let ydiff: Vec<f64> = y_new.iter().zip(&y).map(|(a, b)| a - b).collect();
            let bspl: Vec<f64> = (0..y.len()).map(|i| h * ks[0][i] - ydiff[i]).collect();
            let r4: Vec<f64> = (0..y.len()).map(|i| ydiff[i] - h * ks[6][i] - bspl[i]).collect();
            let r5 = axpy(&vec![0.0; y.len()], h, &ks, &D);
            traj.segments.push(Segment {
                t0: t,
                h,
                r: [y.clone(), ydiff, bspl, r4, r5],
            });
            traj.max_error = traj.max_error.max(err);
            traj.steps += 1;
            t += h;
            y = y_new;
            k1 = ks.swap_remove(6);
            if (t - t_end) * dir >= 0.0 {
                traj.y_end = y;
                traj.t_end = t_end;
                return Ok(traj);
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            traj.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(FinslerError::IntegrationStalled { t, state: y });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tr = dopri5(|_, y| Ok(vec![-y[0]]), 0.0, &[1.0], 2.0, OdeOptions::default()).unwrap();
        assert!((tr.y_end[0] - (-2.0f64).exp()).abs() < 1e-9);
        // dense output between steps
        assert!((tr.at(0.77)[0] - (-0.77f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let tr = dopri5(
            |_, y| Ok(vec![y[1], -y[0]]),
            0.0,
            &[0.0, 1.0],
            -3.0,
            OdeOptions::default(),
        )
        .unwrap();
        assert!((tr.y_end[0] - (-3.0f64).sin()).abs() < 1e-8);
        assert!((tr.at(-1.3)[1] - (-1.3f64).cos()).abs() < 1e-8);
    }

    #[test]
    fn blow_up_stalls() {
        // y' = y², y(0) = 1 blows up at t = 1
        let r = dopri5(|_, y| Ok(vec![y[0] * y[0]]), 0.0, &[1.0], 2.0, OdeOptions::default());
        assert!(matches!(r, Err(FinslerError::IntegrationStalled { .. })));
    }
}

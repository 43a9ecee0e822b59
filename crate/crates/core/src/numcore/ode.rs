//! Dormand–Prince 5(4) integration with optional event location.

use super::{NumError, NumResult};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 2_000_000;

/// Sampled solution of an initial value problem.
///
/// `x` is ordered in the direction of integration, so it decreases for a
/// backward run.
#[derive(Debug, Clone, Default)]
pub struct OdeTrajectory {
    pub x: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// Largest accepted local error estimate, in tolerance-scaled units times `tol`.
    pub error_estimate: f64,
}

impl OdeTrajectory {
    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.x.len() - 1;
        (self.x[i], &self.y[i])
    }
}

/// Where an event function changed sign.
#[derive(Debug, Clone)]
pub struct OdeEvent {
    pub x: f64,
    pub y: Vec<f64>,
}

struct Stepper<'a, F: FnMut(f64, &[f64], &mut [f64])> {
    rhs: &'a mut F,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl<'a, F: FnMut(f64, &[f64], &mut [f64])> Stepper<'a, F> {
    fn new(rhs: &'a mut F, n: usize) -> Self {
        Stepper {
            rhs,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }

    /// One trial step; `k[0]` must hold f(x, y). Returns the scaled error norm.
    fn trial(&mut self, x: f64, y: &[f64], h: f64, tol: f64) -> f64 {
        let n = y.len();
        let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in rows.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in row.iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let (head, tail) = self.k.split_at_mut(s + 1);
            let _ = head;
            (self.rhs)(x + C[s + 1] * h, &self.tmp, &mut tail[0]);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += B[j] * self.k[j][i];
            }
            self.y_new[i] = y[i] + h * acc;
        }
        let (head, tail) = self.k.split_at_mut(6);
        let _ = head;
        (self.rhs)(x + h, &self.y_new, &mut tail[0]);
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..7 {
                acc += E[j] * self.k[j][i];
            }
            self.err[i] = h * acc;
            let sc = tol * (1.0 + y[i].abs().max(self.y_new[i].abs()));
            norm = norm.max((self.err[i] / sc).abs());
        }
        if norm.is_nan() {
            f64::INFINITY
        } else {
            norm
        }
    }
}

fn drive<F, G>(
    mut rhs: F,
    y0: &[f64],
    span: (f64, f64),
    tol: f64,
    record: bool,
    mut event: Option<G>,
) -> NumResult<(OdeTrajectory, Option<OdeEvent>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> f64,
{
    if !(tol > 0.0) {
        return Err(NumError::Invalid("tol must be positive".into()));
    }
    let (x0, x1) = span;
    let n = y0.len();
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let length = (x1 - x0).abs();
    let mut traj = OdeTrajectory { x: vec![x0], y: vec![y0.to_vec()], error_estimate: 0.0 };
    if length == 0.0 {
        return Ok((traj, None));
    }
    let mut st = Stepper::new(&mut rhs, n);
    let mut x = x0;
    let mut y = y0.to_vec();
    (st.rhs)(x, &y, &mut st.k[0]);
    let h_floor = 1e-13 * x0.abs().max(x1.abs()).max(1.0);
    let mut h = dir * (length * 1e-3).min(tol.powf(0.2) * 0.1).max(h_floor).min(length);
    let mut g_prev = event.as_mut().map(|g| g(x, &y));
    let mut steps = 0;
    while (x1 - x) * dir > 0.0 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(NumError::StepBudget { at: x });
        }
        if (x + h - x1) * dir > 0.0 || (x1 - x).abs() <= h_floor {
            h = x1 - x;
        }
        let err = st.trial(x, &y, h, tol);
        if err <= 1.0 {
            let x_new = if (x + h - x1) * dir >= 0.0 { x1 } else { x + h };
            if let (Some(g), Some(gp)) = (event.as_mut(), g_prev) {
                let g_new = g(x_new, &st.y_new);
                if gp != 0.0 && (g_new == 0.0 || g_new.signum() != gp.signum()) {
                    // bisect on the step length from the accepted left state
                    let k0 = st.k[0].clone();
                    let mut lo = 0.0;
                    let mut hi = h;
                    let mut y_hi = st.y_new.clone();
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        st.k[0].copy_from_slice(&k0);
                        st.trial(x, &y, mid, tol);
                        let gm = g(x + mid, &st.y_new);
                        if gm == 0.0 || gm.signum() != gp.signum() {
                            hi = mid;
                            y_hi = st.y_new.clone();
                        } else {
                            lo = mid;
                        }
                        if (hi - lo).abs() <= 4.0 * f64::EPSILON * (x.abs() + h.abs()) {
                            break;
                        }
                    }
                    if record {
                        traj.x.push(x + hi);
                        traj.y.push(y_hi.clone());
                    }
                    return Ok((traj, Some(OdeEvent { x: x + hi, y: y_hi })));
                }
                g_prev = Some(g_new);
            }
            traj.error_estimate = traj.error_estimate.max(err * tol);
            x = x_new;
            y.copy_from_slice(&st.y_new);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(NumError::NonFinite(format!("state at x = {x}")));
            }
            let (k0, rest) = st.k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);
            if record {
                traj.x.push(x);
                traj.y.push(y.clone());
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
        }
        if h.abs() < 1e-14 * x.abs().max(1.0) && (x1 - x).abs() > h_floor {
            return Err(NumError::StepUnderflow { at: x });
        }
    }
    if !record {
        traj.x.push(x);
        traj.y.push(y);
    }
    Ok((traj, None))
}

/// Integrates `y' = rhs(x, y)` from `span.0` to `span.1` (either direction).
pub fn integrate_ode<F>(rhs: F, y0: &[f64], span: (f64, f64), tol: f64) -> NumResult<OdeTrajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    drive(rhs, y0, span, tol, true, None::<fn(f64, &[f64]) -> f64>).map(|r| r.0)
}

/// Like [`integrate_ode`] but keeps only the final state.
pub fn integrate_ode_final<F>(rhs: F, y0: &[f64], span: (f64, f64), tol: f64) -> NumResult<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let (mut t, _) = drive(rhs, y0, span, tol, false, None::<fn(f64, &[f64]) -> f64>)?;
    Ok(t.y.pop().unwrap_or_default())
}

/// Integrates until `event(x, y)` changes sign or the span ends.
pub fn integrate_ode_until<F, G>(
    rhs: F,
    y0: &[f64],
    span: (f64, f64),
    tol: f64,
    event: G,
) -> NumResult<(OdeTrajectory, Option<OdeEvent>)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> f64,
{
    drive(rhs, y0, span, tol, true, Some(event))
}

/// States at the requested abscissae (must be monotone in the span direction).
pub fn integrate_ode_at<F>(mut rhs: F, y0: &[f64], x0: f64, xs: &[f64], tol: f64) -> NumResult<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut out = Vec::with_capacity(xs.len());
    let mut x = x0;
    let mut y = y0.to_vec();
    for &xt in xs {
        if xt != x {
            y = integrate_ode_final(&mut rhs, &y, (x, xt), tol)?;
            x = xt;
        }
        out.push(y.clone());
    }
    Ok(out)
}

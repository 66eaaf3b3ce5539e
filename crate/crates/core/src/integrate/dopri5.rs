use super::{check_grid, OdeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

/// States interpolated onto the requested output grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRun {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Time at which the stop predicate fired, if it did.
    pub stopped_at: Option<f64>,
    pub steps: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` and reports the state at each time in
/// `t_out` by dense-output interpolation. `stop(t, y)` is checked after every
/// accepted step; when it returns true the run ends there.
pub fn integrate<F, S>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_out: &[f64],
    opts: Dopri5Options,
    mut stop: S,
) -> Result<DenseRun, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    check_grid(t0, t_out)?;
    let n = y0.len();
    let mut run = DenseRun {
        times: Vec::with_capacity(t_out.len()),
        states: Vec::with_capacity(t_out.len()),
        stopped_at: None,
        steps: 0,
    };
    let mut next_out = 0;
    while next_out < t_out.len() && t_out[next_out] == t0 {
        run.times.push(t0);
        run.states.push(y0.to_vec());
        next_out += 1;
    }
    let Some(&t_end) = t_out.last() else {
        return Ok(run);
    };
    if next_out == t_out.len() {
        return Ok(run);
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let mut h = initial_step(&mut f, t, &y, &k[0], t_end - t, opts);
    let mut rejected_last = false;

    loop {
        if run.steps >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow(t));
        }

        stage(&mut y_stage, &y, h, &k, &[(0, A21)]);
        f(t + C2 * h, &y_stage, &mut k[1]);
        stage(&mut y_stage, &y, h, &k, &[(0, A31), (1, A32)]);
        f(t + C3 * h, &y_stage, &mut k[2]);
        stage(&mut y_stage, &y, h, &k, &[(0, A41), (1, A42), (2, A43)]);
        f(t + C4 * h, &y_stage, &mut k[3]);
        stage(&mut y_stage, &y, h, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
        f(t + C5 * h, &y_stage, &mut k[4]);
        stage(&mut y_stage, &y, h, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        f(t + h, &y_stage, &mut k[5]);
        stage(&mut y_new, &y, h, &k, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
        f(t + h, &y_new, &mut k[6]);

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / scale).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            if y_new.iter().all(|v| v.is_finite()) {
                h *= 0.1;
                rejected_last = true;
                continue;
            }
            return Err(OdeError::NonFinite(t));
        }

        if err <= 1.0 {
            run.steps += 1;
            // t + h may round short of t_end
            let t_new = if last { t_end } else { t + h };
            while next_out < t_out.len() && t_out[next_out] <= t_new {
                let theta = (t_out[next_out] - t) / h;
                run.times.push(t_out[next_out]);
                run.states.push(interpolate(&y, &y_new, &k, h, theta));
                next_out += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            if next_out == t_out.len() {
                return Ok(run);
            }
            if stop(t, &y) {
                run.stopped_at = Some(t);
                return Ok(run);
            }
            let mut fac = 0.9 * err.powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h *= fac;
            rejected_last = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            rejected_last = true;
        }
    }
}

fn stage(out: &mut [f64], y: &[f64], h: f64, k: &[Vec<f64>], coeffs: &[(usize, f64)]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for &(j, a) in coeffs {
            acc += a * k[j][i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn interpolate(y0: &[f64], y1: &[f64], k: &[Vec<f64>], h: f64, theta: f64) -> Vec<f64> {
    if theta >= 1.0 {
        return y1.to_vec();
    }
    let theta1 = 1.0 - theta;
    (0..y0.len())
        .map(|i| {
            let r1 = y0[i];
            let r2 = y1[i] - y0[i];
            let r3 = h * k[0][i] - r2;
            let r4 = r2 - h * k[6][i] - r3;
            let r5 = h
                * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
            r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)))
        })
        .collect()
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64, opts: Dopri5Options) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len().max(1) as f64;
    let scale = |v: f64| opts.atol + opts.rtol * v.abs();
    let d0 = (y.iter().map(|&v| (v / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (y
        .iter()
        .zip(f0)
        .map(|(&v, &d)| (d / scale(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(&v, &d)| v + h0 * d).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + h0, &y1, &mut f1);
    let d2 = (y
        .iter()
        .zip(f0.iter().zip(&f1))
        .map(|(&v, (&a, &b))| ((b - a) / scale(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

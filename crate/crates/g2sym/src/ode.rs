//! Adaptive Dormand–Prince 5(4) over fixed-size states, with cubic Hermite
//! dense output and an event/admissibility stop.
//!
//! The right-hand side may refuse a state (returning `None`), which is how
//! the callers express "left the admissible region"; the step is then
//! shrunk and, once the step underflows, integration stops there.

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: 1e-4,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sample<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

/// Why integration stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    Reached,
    /// The event function crossed zero at this time.
    Event(f64),
    /// The step size underflowed (usually: RHS refused states nearby).
    Underflow(f64),
    MaxSteps(f64),
}

#[derive(Clone, Debug)]
pub struct Trajectory<const N: usize> {
    pub samples: Vec<Sample<N>>,
    pub stop: Stop,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

/// One Dormand–Prince step. Returns (y_new, f(y_new), error estimate).
fn dp_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> Option<([f64; N], [f64; N], [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y1 = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    if y1.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let k7 = f(t + h, &y1)?;
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Some((y1, k7, err))
}

/// Integrate y' = f(t, y) from (t0, y0) towards t1 (either direction).
///
/// `event(t, y)` must be positive on admissible states; integration stops at
/// the first sign change, located by bisection on the Hermite interpolant.
pub fn integrate<const N: usize, F, G>(f: F, t0: f64, y0: [f64; N], t1: f64, opts: &Options, event: G) -> Option<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
    G: Fn(f64, &[f64; N]) -> f64,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let k0 = f(t0, &y0)?;
    let mut samples = vec![Sample { t: t0, y: y0, dy: k0 }];
    if t1 == t0 {
        return Some(Trajectory { samples, stop: Stop::Reached });
    }
    let mut h = opts.h_init.min((t1 - t0).abs()).min(opts.h_max);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = k0;
    let mut g_prev = event(t0, &y0);
    for _ in 0..opts.max_steps {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-15 * t1.abs().max(1.0) {
            return Some(Trajectory { samples, stop: Stop::Reached });
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        match dp_step(&f, t, &y, &k1, dir * hs) {
            None => {
                h = hs * 0.25;
                if h < opts.h_min {
                    return Some(Trajectory { samples, stop: Stop::Underflow(t) });
                }
            }
            Some((y1, k7, err)) => {
                let mut acc = 0.0;
                for i in 0..N {
                    let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
                    acc += (err[i] / sc).powi(2);
                }
                let en = (acc / N as f64).sqrt();
                if en <= 1.0 {
                    let tn = if last { t1 } else { t + dir * hs };
                    let g = event(tn, &y1);
                    if g <= 0.0 && g_prev > 0.0 {
                        // locate the crossing on the Hermite interpolant
                        let s0 = Sample { t, y, dy: k1 };
                        let s1 = Sample { t: tn, y: y1, dy: k7 };
                        let (mut a, mut b) = (t, tn);
                        for _ in 0..200 {
                            let m = 0.5 * (a + b);
                            let ym = hermite(&s0, &s1, m);
                            if event(m, &ym) > 0.0 {
                                a = m;
                            } else {
                                b = m;
                            }
                            if (b - a).abs() < 1e-12 {
                                break;
                            }
                        }
                        let ya = hermite(&s0, &s1, a);
                        if let Some(da) = f(a, &ya) {
                            if a != t {
                                samples.push(Sample { t: a, y: ya, dy: da });
                            }
                        }
                        return Some(Trajectory { samples, stop: Stop::Event(b) });
                    }
                    g_prev = g;
                    t = tn;
                    y = y1;
                    k1 = k7;
                    samples.push(Sample { t, y, dy: k1 });
                    if last {
                        return Some(Trajectory { samples, stop: Stop::Reached });
                    }
                }
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                h = (hs * fac).min(opts.h_max);
                if en > 1.0 && h < opts.h_min {
                    return Some(Trajectory { samples, stop: Stop::Underflow(t) });
                }
            }
        }
    }
    let tl = samples.last().map(|s| s.t).unwrap_or(t0);
    Some(Trajectory { samples, stop: Stop::MaxSteps(tl) })
}

/// Cubic Hermite interpolation between two samples.
pub fn hermite<const N: usize>(s0: &Sample<N>, s1: &Sample<N>, t: f64) -> [f64; N] {
    let h = s1.t - s0.t;
    if h == 0.0 {
        return s0.y;
    }
    let x = (t - s0.t) / h;
    let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
    let h10 = x * (1.0 - x) * (1.0 - x);
    let h01 = x * x * (3.0 - 2.0 * x);
    let h11 = x * x * (x - 1.0);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * s0.y[i] + h10 * h * s0.dy[i] + h01 * s1.y[i] + h11 * h * s1.dy[i];
    }
    out
}

impl<const N: usize> Trajectory<N> {
    pub fn t_first(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_last(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// (lo, hi) regardless of integration direction.
    pub fn span(&self) -> (f64, f64) {
        let (a, b) = (self.t_first(), self.t_last());
        (a.min(b), a.max(b))
    }

    /// Index k with t in [t_k, t_{k+1}] (samples monotone in either direction).
    fn bracket(&self, t: f64) -> usize {
        let n = self.samples.len();
        if n < 2 {
            return 0;
        }
        let inc = self.samples[n - 1].t >= self.samples[0].t;
        let idx = self.samples.partition_point(|s| if inc { s.t <= t } else { s.t >= t });
        idx.saturating_sub(1).min(n - 2)
    }

    /// Dense output (cubic Hermite); `None` outside the span.
    pub fn at(&self, t: f64) -> Option<[f64; N]> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return None;
        }
        if self.samples.len() == 1 {
            return Some(self.samples[0].y);
        }
        let k = self.bracket(t);
        Some(hermite(&self.samples[k], &self.samples[k + 1], t))
    }

    /// High-accuracy evaluation: re-integrate from the nearest sample with
    /// fixed Dormand–Prince sub-steps a quarter of the local accepted step.
    /// Use this where the interpolation error would be amplified, e.g.
    /// inside finite differences.
    pub fn precise<F>(&self, t: f64, f: &F) -> Option<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> Option<[f64; N]>,
    {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return None;
        }
        if self.samples.len() == 1 {
            return Some(self.samples[0].y);
        }
        let k = self.bracket(t);
        let (s0, s1) = (&self.samples[k], &self.samples[k + 1]);
        let local = (s1.t - s0.t).abs();
        let s = if (t - s0.t).abs() <= (s1.t - t).abs() { s0 } else { s1 };
        let dt = t - s.t;
        if dt == 0.0 {
            return Some(s.y);
        }
        let sub = (local / 4.0).max(1e-300);
        let n = (dt.abs() / sub).ceil().max(1.0) as usize;
        let h = dt / n as f64;
        let mut tt = s.t;
        let mut y = s.y;
        let mut k1 = s.dy;
        for _ in 0..n {
            let (y1, k7, _) = dp_step(f, tt, &y, &k1, h)?;
            tt += h;
            y = y1;
            k1 = k7;
        }
        Some(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = Options::with_tol(1e-11);
        let tr = integrate(|_, y: &[f64; 1]| Some([-y[0]]), 0.0, [1.0], 3.0, &opts, |_, _| 1.0).unwrap();
        assert_eq!(tr.stop, Stop::Reached);
        let y = tr.samples.last().unwrap().y[0];
        assert!((y - (-3.0f64).exp()).abs() < 1e-10);
        let mid = tr.precise(1.2345, &|_, y: &[f64; 1]| Some([-y[0]])).unwrap()[0];
        assert!((mid - (-1.2345f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let f = |_: f64, y: &[f64; 2]| Some([y[1], -y[0]]);
        let opts = Options::with_tol(1e-11);
        let tr = integrate(f, 2.0, [2.0f64.sin(), 2.0f64.cos()], 0.0, &opts, |_, _| 1.0).unwrap();
        let y = tr.samples.last().unwrap().y;
        assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
        let d = tr.at(1.0).unwrap();
        assert!((d[0] - 1.0f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn event_stops_at_root() {
        // y = 1 - t, event y > 0 => stop at t = 1
        let tr = integrate(|_, _: &[f64; 1]| Some([-1.0]), 0.0, [1.0], 5.0, &Options::default(), |_, y| y[0]).unwrap();
        match tr.stop {
            Stop::Event(t) => assert!((t - 1.0).abs() < 1e-11),
            s => panic!("unexpected stop {s:?}"),
        }
    }

    #[test]
    fn refusing_rhs_underflows_at_boundary() {
        // sqrt singularity at t = 1
        let f = |t: f64, _: &[f64; 1]| if t < 1.0 { Some([(1.0 - t).sqrt()]) } else { None };
        let tr = integrate(f, 0.0, [0.0], 2.0, &Options::default(), |_, _| 1.0).unwrap();
        match tr.stop {
            Stop::Underflow(t) => assert!((t - 1.0).abs() < 1e-6),
            s => panic!("unexpected stop {s:?}"),
        }
    }
}

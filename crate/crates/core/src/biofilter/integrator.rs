//! Classical fixed-step fourth-order Runge-Kutta.

/// Reusable stage buffers for [`rk4_step`].
#[derive(Debug, Clone, Default)]
pub struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    pub fn new(n: usize) -> Self {
        let mut w = Rk4Work::default();
        w.resize(n);
        w
    }

    fn resize(&mut self, n: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(n, 0.0);
        }
    }
}

/// Advances `y` from `t` to `t + dt` in place.
///
/// `f(t, y, dy)` writes the time derivative of `y` into `dy`. Any linear
/// invariant of the vector field is preserved to round-off, since the update
/// is a fixed linear combination of field evaluations.
pub fn rk4_step<F>(mut f: F, t: f64, y: &mut [f64], dt: f64, work: &mut Rk4Work)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    if work.k1.len() != n {
        work.resize(n);
    }
    let half = 0.5 * dt;
    let Rk4Work {
        k1,
        k2,
        k3,
        k4,
        tmp,
    } = work;

    f(t, y, k1);
    for i in 0..n {
        tmp[i] = y[i] + half * k1[i];
    }
    f(t + half, tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + half * k2[i];
    }
    f(t + half, tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    f(t + dt, tmp, k4);
    let sixth = dt / 6.0;
    for i in 0..n {
        y[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
}

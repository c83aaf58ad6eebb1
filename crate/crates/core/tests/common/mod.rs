#![allow(dead_code)]

use std::f64::consts::TAU;

use filmflow::{Grid, Profile};

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // split first so periodic integrands do not fool the initial estimate
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            step(f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// `h(x) = d + a sin(2 pi k x / b)` with its first two derivatives.
#[derive(Clone, Copy, Debug)]
pub struct Sine {
    pub d: f64,
    pub a: f64,
    pub k: f64,
    pub b: f64,
}

impl Sine {
    pub fn q(&self) -> f64 {
        TAU * self.k / self.b
    }
    pub fn h(&self, x: f64) -> f64 {
        self.d + self.a * (self.q() * x).sin()
    }
    pub fn h1(&self, x: f64) -> f64 {
        self.a * self.q() * (self.q() * x).cos()
    }
    pub fn h2(&self, x: f64) -> f64 {
        -self.a * self.q() * self.q() * (self.q() * x).sin()
    }
    /// `-h'' / (1 + h'^2)^{3/2}`.
    pub fn curvature(&self, x: f64) -> f64 {
        -self.h2(x) / (1.0 + self.h1(x).powi(2)).powf(1.5)
    }
    pub fn profile(&self, n: usize) -> Profile {
        let s = *self;
        Profile::from_fn(1, self.b, n, move |x, _| s.h(x)).unwrap()
    }
}

/// Smooth mean-zero direction with a few low modes (band-limited).
pub fn smooth_direction(grid: &Grid, seed: u64) -> Vec<f64> {
    let b = grid.period();
    let s = seed as f64;
    (0..grid.len())
        .map(|i| {
            let [x, y] = grid.coords(i);
            let (u, v) = (TAU * x / b, TAU * y / b);
            let mut f = (u + 0.3 * s).sin() + 0.5 * (2.0 * u + 1.1 + s).cos() - 0.25 * (3.0 * u + 0.7 * s).sin();
            if grid.m() == 2 {
                f += 0.6 * (v + 0.2 * s).cos() + 0.3 * (u + 2.0 * v + s).sin();
            }
            f
        })
        .collect()
}

/// Central difference of `f(h + t dir)` at `t = 0`.
pub fn directional_fd(f: impl Fn(&Profile) -> f64, h: &Profile, dir: &[f64], step: f64) -> f64 {
    let shift = |t: f64| h.with_values(h.values().iter().zip(dir).map(|(a, d)| a + t * d).collect()).unwrap();
    (f(&shift(step)) - f(&shift(-step))) / (2.0 * step)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

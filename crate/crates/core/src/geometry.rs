//! Periodic graph surfaces: profiles, area element, normals and curvatures.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::spectral::{Backend, Grid};

/// A positive `b`-periodic height function sampled on a uniform `n^m` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    m: usize,
    b: f64,
    n: usize,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(m: usize, b: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        // Validates m, n, b.
        let grid = Grid::new(m, n, b, Backend::Spectral)?;
        grid.validate(&values)?;
        if let Some(v) = values.iter().find(|v| **v <= 0.0) {
            return Err(FlowError::invalid(format!(
                "profile must be strictly positive, found {v}"
            )));
        }
        Ok(Profile { m, b, n, values })
    }

    pub fn flat(m: usize, b: f64, n: usize, d: f64) -> Result<Self> {
        Profile::new(m, b, n, vec![d; n.pow(m as u32)])
    }

    /// Sample `f(x1, x2)` at the nodes (`x2 = 0` when `m = 1`).
    pub fn from_fn(m: usize, b: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let grid = Grid::new(m, n, b, Backend::Spectral)?;
        let values = (0..grid.len())
            .map(|idx| {
                let [x, y] = grid.coords(idx);
                f(x, y)
            })
            .collect();
        Profile::new(m, b, n, values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Spectral grid matching this profile.
    pub fn grid(&self) -> Grid {
        Grid::new(self.m, self.n, self.b, Backend::Spectral).expect("profile dimensions validated")
    }

    pub fn grid_with(&self, backend: Backend) -> Grid {
        self.grid().with_backend(backend)
    }

    /// Same layout, new values (positivity checked).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Profile::new(self.m, self.b, self.n, values)
    }

    pub fn same_layout(&self, other: &Profile) -> bool {
        self.m == other.m && self.n == other.n && self.b == other.b
    }

    pub fn min_height(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Shift by an integer number of grid cells along axis 0.
    pub fn shifted(&self, cells: usize) -> Profile {
        let n = self.n;
        let mut values = vec![0.0; self.values.len()];
        for (idx, v) in self.values.iter().enumerate() {
            let i = idx % n;
            let row = idx - i;
            values[row + (i + cells) % n] = *v;
        }
        Profile { values, ..self.clone() }
    }

    /// Profile CSV: header line `m,b,n`, the three values, then one grid row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "m,b,n").unwrap();
        writeln!(out, "{},{:e},{}", self.m, self.b, self.n).unwrap();
        let row_len = if self.m == 1 { 1 } else { self.n };
        for row in self.values.chunks(row_len) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(",")).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| FlowError::invalid("empty profile file"))?;
        if header.replace(' ', "") != "m,b,n" {
            return Err(FlowError::invalid(format!("bad profile header '{header}'")));
        }
        let dims = lines
            .next()
            .ok_or_else(|| FlowError::invalid("missing profile dimensions"))?;
        let parts: Vec<&str> = dims.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(FlowError::invalid("dimension line must be 'm,b,n'"));
        }
        let parse_err = |what: &str| FlowError::invalid(format!("cannot parse {what}"));
        let m: usize = parts[0].parse().map_err(|_| parse_err("m"))?;
        let b: f64 = parts[1].parse().map_err(|_| parse_err("b"))?;
        let n: usize = parts[2].parse().map_err(|_| parse_err("n"))?;
        let mut values = Vec::new();
        for line in lines {
            for tok in line.split(',') {
                values.push(tok.trim().parse::<f64>().map_err(|_| parse_err("node value"))?);
            }
        }
        Profile::new(m, b, n, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| FlowError::invalid(format!("{}: {e}", path.as_ref().display())))?;
        Profile::from_csv(&text)
    }
}

/// Pointwise first- and second-order geometry of a graph surface.
#[derive(Clone, Debug)]
pub struct SurfaceMetrics {
    /// `Dh`, one vector per axis.
    pub gradient: Vec<Vec<f64>>,
    /// `J = sqrt(1 + |Dh|^2)`.
    pub area_element: Vec<f64>,
    /// Outer unit normal `(-Dh, 1)/J`, one vector per component (`m + 1` of them).
    pub normal: Vec<Vec<f64>>,
    /// Sum of principal curvatures, in conservative divergence form.
    pub mean_curvature: Vec<f64>,
    /// Sum of squared principal curvatures.
    pub shape_norm_sq: Vec<f64>,
    /// Principal curvatures `(k1, k2)` with `k1 >= k2`; `None` for curves.
    pub principal: Option<(Vec<f64>, Vec<f64>)>,
}

pub fn metrics(profile: &Profile) -> Result<SurfaceMetrics> {
    metrics_on(&profile.grid(), profile.values())
}

pub fn metrics_with_backend(profile: &Profile, backend: Backend) -> Result<SurfaceMetrics> {
    metrics_on(&profile.grid_with(backend), profile.values())
}

/// Metrics of raw grid values (no positivity requirement).
pub fn metrics_on(grid: &Grid, h: &[f64]) -> Result<SurfaceMetrics> {
    grid.validate(h)?;
    let m = grid.m();
    let gradient = grid.gradient(h);
    let area_element: Vec<f64> = (0..h.len())
        .map(|i| (1.0 + gradient.iter().map(|g| g[i] * g[i]).sum::<f64>()).sqrt())
        .collect();
    let mut normal: Vec<Vec<f64>> = gradient
        .iter()
        .map(|g| g.iter().zip(&area_element).map(|(g, j)| -g / j).collect())
        .collect();
    normal.push(area_element.iter().map(|j| 1.0 / j).collect());

    // H = -div(Dh / J)
    let flux: Vec<Vec<f64>> = normal[..m].to_vec();
    let mean_curvature = grid.divergence(&flux);

    let (shape_norm_sq, principal) = if m == 1 {
        (mean_curvature.iter().map(|h| h * h).collect(), None)
    } else {
        let h11 = grid.deriv2(h, 0, 0);
        let h22 = grid.deriv2(h, 1, 1);
        let h12 = grid.deriv2(h, 0, 1);
        let mut k1 = vec![0.0; h.len()];
        let mut k2 = vec![0.0; h.len()];
        let mut b2 = vec![0.0; h.len()];
        for i in 0..h.len() {
            let (g1, g2) = (gradient[0][i], gradient[1][i]);
            let j = area_element[i];
            let j2 = j * j;
            // S = I^{-1} II with I = Id + Dh (x) Dh and II = D^2 h / J
            let s11 = ((1.0 + g2 * g2) * h11[i] - g1 * g2 * h12[i]) / (j2 * j);
            let s22 = ((1.0 + g1 * g1) * h22[i] - g1 * g2 * h12[i]) / (j2 * j);
            let tr = s11 + s22;
            let det = (h11[i] * h22[i] - h12[i] * h12[i]) / (j2 * j2);
            let split = (tr * tr - 4.0 * det).max(0.0).sqrt();
            let hm = mean_curvature[i];
            k1[i] = 0.5 * (hm + split);
            k2[i] = 0.5 * (hm - split);
            b2[i] = k1[i] * k1[i] + k2[i] * k2[i];
        }
        (b2, Some((k1, k2)))
    };

    Ok(SurfaceMetrics {
        gradient,
        area_element,
        normal,
        mean_curvature,
        shape_norm_sq,
        principal,
    })
}

impl SurfaceMetrics {
    /// `max |Dh|` over the grid.
    pub fn max_slope(&self) -> f64 {
        self.area_element
            .iter()
            .map(|j| (j * j - 1.0).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }
}

/// `int_Q f J dx`, i.e. the integral of `f` over the graph.
pub fn surface_integral(profile: &Profile, field: &[f64]) -> Result<f64> {
    let grid = profile.grid();
    if field.len() != profile.len() {
        return Err(FlowError::invalid(format!(
            "field has {} entries, profile has {}",
            field.len(),
            profile.len()
        )));
    }
    let met = metrics_on(&grid, profile.values())?;
    Ok(grid.cell() * field.iter().zip(&met.area_element).map(|(f, j)| f * j).sum::<f64>())
}

/// `int_Q h dx`.
pub fn volume(profile: &Profile) -> f64 {
    let vals = profile.values();
    vals.iter().sum::<f64>() / vals.len() as f64 * profile.period().powi(profile.m() as i32)
}

/// Largest slope `max |Dh|` (spectral backend).
pub fn max_slope(grid: &Grid, h: &[f64]) -> f64 {
    let g = grid.gradient(h);
    (0..h.len())
        .map(|i| g.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_profile_metrics() {
        let p = Profile::flat(2, 1.5, 16, 0.7).unwrap();
        let met = metrics(&p).unwrap();
        assert!(met.mean_curvature.iter().all(|h| h.abs() < 1e-14));
        assert!(met.area_element.iter().all(|j| (j - 1.0).abs() < 1e-15));
        assert!(met.normal[2].iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(met.shape_norm_sq.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn mean_curvature_has_zero_mean() {
        for backend in [Backend::Spectral, Backend::FiniteDifference] {
            let p = Profile::from_fn(2, 2.0, 32, |x, y| {
                1.0 + 0.3 * (PI * x).sin() * (PI * y).cos() + 0.1 * (3.0 * PI * y).sin()
            })
            .unwrap();
            let met = metrics_with_backend(&p, backend).unwrap();
            let mean: f64 = met.mean_curvature.iter().sum::<f64>() / p.len() as f64;
            assert!(mean.abs() < 1e-14, "{backend:?}: {mean}");
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(Profile::new(1, 1.0, 8, vec![1.0; 7]).is_err());
        assert!(Profile::new(1, 1.0, 8, vec![-1.0; 8]).is_err());
        let mut v = vec![1.0; 8];
        v[3] = f64::NAN;
        assert!(Profile::new(1, 1.0, 8, v).is_err());
        assert!(Profile::new(1, 1.0, 12, vec![1.0; 12]).is_err());
    }

    #[test]
    fn volume_of_flat_and_sine() {
        let p = Profile::flat(2, 3.0, 8, 0.5).unwrap();
        assert!((volume(&p) - 0.5 * 9.0).abs() < 1e-14);
        let s = Profile::from_fn(1, 2.0, 64, |x, _| 1.0 + 0.2 * (PI * x).sin()).unwrap();
        assert!((volume(&s) - 2.0).abs() < 1e-14);
        let s2 = Profile::from_fn(1, 2.0, 64, |x, _| 1.0 + 0.2 * (PI * x).sin().powi(2)).unwrap();
        assert!((volume(&s2) - 1.1 * 2.0).abs() < 1e-14);
    }

    #[test]
    fn surface_integral_flat_cases() {
        let p = Profile::flat(2, 1.7, 16, 1.0).unwrap();
        let ones = vec![1.0; p.len()];
        assert!((surface_integral(&p, &ones).unwrap() - 1.7 * 1.7).abs() < 1e-13);
        let grid = p.grid();
        let s: Vec<f64> = (0..p.len())
            .map(|i| (2.0 * PI * grid.coords(i)[0] / 1.7).sin())
            .collect();
        assert!(surface_integral(&p, &s).unwrap().abs() < 1e-14);
        assert!(surface_integral(&p, &s[1..]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = Profile::from_fn(2, 1.25, 8, |x, y| 2.0 + (x + 2.0 * y).sin()).unwrap();
        let back = Profile::from_csv(&p.to_csv()).unwrap();
        assert_eq!(p, back);
        assert!(Profile::from_csv("m,b\n1,1,8\n").is_err());
    }
}

//! Top-surface temperature profiles and their fourth-order Fourier fit.
//!
//! The profile runs along `y = Y/2` on the top face. It is fitted with
//! `T(x) = a0 + Σ_{i=1..4} a_i cos(i w x) + b_i sin(i w x)`, `x` in metres
//! from the `x = 0` edge. For a fixed `w` the model is linear in the nine
//! amplitudes, so `w` is found by a one-dimensional search over the
//! least-squares residual.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{ScalarField, MM};
use crate::mesh::{FaceTag, TetMesh};

pub const DEFAULT_SAMPLES: usize = 121;
pub const MIN_SAMPLES: usize = 41;
pub const HARMONICS: usize = 4;

/// Temperatures along the centre line of the top surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceProfile {
    /// m, strictly increasing.
    pub positions: Vec<f64>,
    /// °C
    pub temps: Vec<f64>,
}

impl SurfaceProfile {
    pub fn new(positions: Vec<f64>, temps: Vec<f64>) -> Result<Self> {
        if positions.len() != temps.len() {
            return Err(Error::param("profile positions and temperatures differ in length"));
        }
        if positions.len() < MIN_SAMPLES {
            return Err(Error::param(format!(
                "profile needs at least {MIN_SAMPLES} samples, got {}",
                positions.len()
            )));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("profile positions must be strictly increasing"));
        }
        if temps.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("profile temperatures must be finite"));
        }
        Ok(Self { positions, temps })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.positions[self.len() - 1] - self.positions[0]
    }

    pub fn range(&self) -> f64 {
        let max = self.temps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.temps.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Writes `x_mm,T_celsius` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x_mm", "T_celsius"])?;
        for (x, t) in self.positions.iter().zip(&self.temps) {
            wr.write_record([format!("{:?}", x / MM), format!("{t:?}")])?;
        }
        wr.flush().map_err(|e| Error::format("profile csv", e.to_string()))?;
        Ok(())
    }
}

/// Samples `field` at `samples` evenly spaced points on `y = Y/2` of the top
/// face, spanning `x ∈ [0, X]` of the undeformed block.
///
/// The top face is located from its tagged boundary triangles, so this also
/// works on a compressed mesh whose top face has moved down.
pub fn extract_profile(mesh: &TetMesh, field: &ScalarField, x_len: f64, y_len: f64, samples: usize) -> Result<SurfaceProfile> {
    if field.values.len() != mesh.node_count() {
        return Err(Error::param("field does not match mesh"));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::param(format!("profile needs at least {MIN_SAMPLES} samples")));
    }
    let y = 0.5 * y_len;
    let strip: Vec<[usize; 3]> = mesh
        .faces
        .iter()
        .filter(|f| f.tag == FaceTag::Top)
        .map(|f| f.nodes)
        .filter(|t| {
            let ys = t.map(|n| mesh.nodes[n][1]);
            ys.iter().copied().fold(f64::INFINITY, f64::min) <= y + 1e-9
                && ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) >= y - 1e-9
        })
        .collect();

    let mut positions = Vec::with_capacity(samples);
    let mut temps = Vec::with_capacity(samples);
    for s in 0..samples {
        let x = if s + 1 == samples { x_len } else { x_len * s as f64 / (samples - 1) as f64 };
        let mut best: Option<(f64, f64)> = None;
        for t in &strip {
            let [a, b, c] = t.map(|n| mesh.nodes[n]);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            if det.abs() < 1e-300 {
                continue;
            }
            let l1 = ((x - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (y - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (y - a[1]) - (x - a[0]) * (b[1] - a[1])) / det;
            let l0 = 1.0 - l1 - l2;
            let worst = l0.min(l1).min(l2);
            if worst >= -1e-9 && best.is_none_or(|b| worst > b.0) {
                let v = l0 * field.values[t[0]] + l1 * field.values[t[1]] + l2 * field.values[t[2]];
                best = Some((worst, v));
            }
        }
        let (_, v) = best.ok_or_else(|| Error::param(format!("profile point x={x} mm lies outside the top face")))?;
        positions.push(x * MM);
        temps.push(v);
    }
    SurfaceProfile::new(positions, temps)
}

/// Fitted Fourier coefficients of one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSignature {
    pub a0: f64,
    pub a: [f64; HARMONICS],
    pub b: [f64; HARMONICS],
    /// rad/m
    pub w: f64,
    /// Fit RMSE divided by the profile's temperature range.
    pub fit_rmse_rel: f64,
}

impl FourierSignature {
    pub const FEATURE_NAMES: [&'static str; 10] = ["a0", "a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4", "w"];

    /// The ten network inputs, ordered as [`Self::FEATURE_NAMES`].
    pub fn features(&self) -> [f64; 10] {
        [
            self.a0, self.a[0], self.a[1], self.a[2], self.a[3], self.b[0], self.b[1], self.b[2], self.b[3], self.w,
        ]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut t = self.a0;
        for i in 0..HARMONICS {
            let arg = (i + 1) as f64 * self.w * x;
            t += self.a[i] * arg.cos() + self.b[i] * arg.sin();
        }
        t
    }

    /// Harmonic amplitudes `sqrt(a_i² + b_i²)`.
    pub fn amplitudes(&self) -> [f64; HARMONICS] {
        std::array::from_fn(|i| self.a[i].hypot(self.b[i]))
    }
}

/// Number of coarse `w` samples scanned before the golden-section refinement.
const W_SCAN: usize = 200;

struct LinearFit {
    coef: DVector<f64>,
    rss: f64,
}

fn design(x: &[f64], w: f64) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), 1 + 2 * HARMONICS, |r, c| {
        if c == 0 {
            return 1.0;
        }
        let i = ((c - 1) / 2 + 1) as f64;
        let arg = i * w * x[r];
        if (c - 1) % 2 == 0 {
            arg.cos()
        } else {
            arg.sin()
        }
    })
}

fn linear_fit(x: &[f64], t: &DVector<f64>, w: f64) -> Option<LinearFit> {
    let a = design(x, w);
    let qr = a.clone().qr();
    let qtb = qr.q().transpose() * t;
    let coef = qr.r().solve_upper_triangular(&qtb)?;
    let rss = (&a * &coef - t).norm_squared();
    Some(LinearFit { coef, rss })
}

/// Fits the fourth-order series by variable projection over `w`.
///
/// `w` is scanned on `[0.5, 1.5]·2π/span`; the best scan cell is refined by
/// golden-section search on the residual norm.
pub fn fit_fourier4(profile: &SurfaceProfile) -> Result<FourierSignature> {
    let range = profile.range();
    if !(range > 0.0) {
        return Err(Error::DegenerateFit("profile has zero temperature range".into()));
    }
    let x = &profile.positions;
    let t = DVector::from_column_slice(&profile.temps);
    let w0 = 2.0 * std::f64::consts::PI / profile.span();
    let (lo, hi) = (0.5 * w0, 1.5 * w0);
    let cost = |w: f64| linear_fit(x, &t, w).map(|f| f.rss.sqrt()).unwrap_or(f64::INFINITY);

    let step = (hi - lo) / W_SCAN as f64;
    let scan: Vec<f64> = (0..=W_SCAN).map(|k| cost(lo + step * k as f64)).collect();
    let best = (0..=W_SCAN).fold(0, |b, k| if scan[k] < scan[b] { k } else { b });
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = lo + step * (best + 1).min(W_SCAN) as f64;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..200 {
        if (b - a) <= 4.0 * f64::EPSILON * w0 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost(d);
        }
    }
    let mut w = if fc <= fd { c } else { d };
    if scan[best] < cost(w) {
        w = lo + step * best as f64;
    }
    let fit = linear_fit(x, &t, w).ok_or_else(|| Error::DegenerateFit(format!("rank-deficient design at w={w}")))?;
    let coef = fit.coef;
    let rmse = (fit.rss / x.len() as f64).sqrt();
    Ok(FourierSignature {
        a0: coef[0],
        a: std::array::from_fn(|i| coef[1 + 2 * i]),
        b: std::array::from_fn(|i| coef[2 + 2 * i]),
        w,
        fit_rmse_rel: rmse / range,
    })
}

/// Position (m) and value of the hottest sample; the first one on ties.
pub fn max_surface_temp(profile: &SurfaceProfile) -> (f64, f64) {
    let mut k = 0;
    for (i, &t) in profile.temps.iter().enumerate() {
        if t > profile.temps[k] {
            k = i;
        }
    }
    (profile.positions[k], profile.temps[k])
}

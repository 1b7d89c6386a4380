//! Photoresponse maps: a Gaussian spot raster-scanned over rectangular pixels.
//!
//! At every scan position the spot energy falling on each alive pixel sets
//! that pixel's mean photon number, and the count rate follows from the
//! Poissonian uneven-illumination trigger model. Light that misses every
//! pixel is lost.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::trigger::{trigger_probability_uneven, DetectorModel, IlluminationProfile, PhotonStatistics};

/// Axis-aligned rectangle in µm, given by its center and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        Self { cx, cy, width, height }
    }

    pub fn x_min(&self) -> f64 {
        self.cx - self.width / 2.0
    }
    pub fn x_max(&self) -> f64 {
        self.cx + self.width / 2.0
    }
    pub fn y_min(&self) -> f64 {
        self.cy - self.height / 2.0
    }
    pub fn y_max(&self) -> f64 {
        self.cy + self.height / 2.0
    }

    /// Closed containment.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min() && x <= self.x_max() && y >= self.y_min() && y <= self.y_max()
    }

    fn overlaps(&self, other: &Rect) -> bool {
        self.x_min() < other.x_max()
            && other.x_min() < self.x_max()
            && self.y_min() < other.y_max()
            && other.y_min() < self.y_max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub rect: Rect,
    pub alive: bool,
}

/// Where a scan position sits relative to the pixel layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Inside pixel `i` (alive or dead).
    OnPixel(usize),
    /// In the gap between two alive pixels that face each other along x or y.
    BetweenPixels(usize, usize),
    Elsewhere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelGeometry {
    pixels: Vec<Pixel>,
}

impl PixelGeometry {
    pub fn new(pixels: Vec<Pixel>) -> Result<Self, ModelError> {
        if !pixels.iter().any(|p| p.alive) {
            return Err(ModelError::Domain("geometry needs at least one alive pixel".into()));
        }
        for p in &pixels {
            if !(p.rect.width > 0.0 && p.rect.height > 0.0) {
                return Err(ModelError::Domain(format!("pixel {:?} has no area", p.rect)));
            }
        }
        for (i, a) in pixels.iter().enumerate() {
            for (j, b) in pixels.iter().enumerate().skip(i + 1) {
                if a.rect.overlaps(&b.rect) {
                    return Err(ModelError::Domain(format!("pixels {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { pixels })
    }

    /// 2x2 grid of square pixels centered on the origin, ordered top-left,
    /// top-right, bottom-left, bottom-right; `dead` lists failed pixels.
    pub fn quad(pixel_size: f64, pitch: f64, dead: &[usize]) -> Result<Self, ModelError> {
        let h = pitch / 2.0;
        let centers = [(-h, h), (h, h), (-h, -h), (h, -h)];
        let pixels = centers
            .iter()
            .enumerate()
            .map(|(i, &(cx, cy))| Pixel {
                rect: Rect::new(cx, cy, pixel_size, pixel_size),
                alive: !dead.contains(&i),
            })
            .collect();
        Self::new(pixels)
    }

    /// Four 3 µm pixels at 5 µm pitch with the bottom-right one dead.
    pub fn default_device() -> Self {
        Self::quad(3.0, 5.0, &[3]).expect("default geometry is valid")
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn alive_indices(&self) -> Vec<usize> {
        self.pixels
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.alive.then_some(i))
            .collect()
    }

    /// Bounding box of all pixels as (x_min, x_max, y_min, y_max).
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.pixels.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| {
                (
                    a.min(p.rect.x_min()),
                    b.max(p.rect.x_max()),
                    c.min(p.rect.y_min()),
                    d.max(p.rect.y_max()),
                )
            },
        )
    }

    pub fn classify(&self, x: f64, y: f64) -> Region {
        if let Some(i) = self.pixels.iter().position(|p| p.rect.contains(x, y)) {
            return Region::OnPixel(i);
        }
        let alive = self.alive_indices();
        for (ai, &i) in alive.iter().enumerate() {
            for &j in &alive[ai + 1..] {
                let (a, b) = (&self.pixels[i].rect, &self.pixels[j].rect);
                let y_lo = a.y_min().max(b.y_min());
                let y_hi = a.y_max().min(b.y_max());
                let x_lo = a.x_min().max(b.x_min());
                let x_hi = a.x_max().min(b.x_max());
                let facing_in_x = y_lo < y_hi;
                let facing_in_y = x_lo < x_hi;
                let in_x_gap = x > a.x_max().min(b.x_max()) && x < a.x_min().max(b.x_min());
                let in_y_gap = y > a.y_max().min(b.y_max()) && y < a.y_min().max(b.y_min());
                if facing_in_x && in_x_gap && y >= y_lo && y <= y_hi {
                    return Region::BetweenPixels(i, j);
                }
                if facing_in_y && in_y_gap && x >= x_lo && x <= x_hi {
                    return Region::BetweenPixels(i, j);
                }
            }
        }
        Region::Elsewhere
    }
}

/// Gaussian focal spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalSpot {
    pub fwhm: f64,
    pub center: (f64, f64),
    /// Mean photons per pulse reaching the focal plane.
    pub total_mean_photons: f64,
}

impl OpticalSpot {
    pub fn new(fwhm: f64, center: (f64, f64), total_mean_photons: f64) -> Result<Self, ModelError> {
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return Err(ModelError::invalid("fwhm", fwhm, "must be positive"));
        }
        if !(total_mean_photons >= 0.0 && total_mean_photons.is_finite()) {
            return Err(ModelError::invalid("total_mean_photons", total_mean_photons, "must be >= 0"));
        }
        Ok(Self {
            fwhm,
            center,
            total_mean_photons,
        })
    }

    /// Standard deviation, `fwhm / (2 sqrt(2 ln 2))`.
    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }

    pub fn centered_at(&self, x: f64, y: f64) -> Self {
        Self {
            center: (x, y),
            ..*self
        }
    }
}

/// Mass of a unit normal between `a` and `b` (in units of sigma * sqrt 2).
fn normal_interval(a: f64, b: f64) -> f64 {
    // erfc differences keep the far tails from cancelling to zero early.
    let v = if a >= 0.0 {
        libm::erfc(a) - libm::erfc(b)
    } else if b <= 0.0 {
        libm::erfc(-b) - libm::erfc(-a)
    } else {
        libm::erf(b) - libm::erf(a)
    };
    (0.5 * v).max(0.0)
}

/// Fraction of the spot's energy that falls inside `rect`.
pub fn spot_pixel_overlap(spot: &OpticalSpot, rect: &Rect) -> f64 {
    let s = spot.sigma() * std::f64::consts::SQRT_2;
    let (x0, y0) = spot.center;
    let fx = normal_interval((rect.x_min() - x0) / s, (rect.x_max() - x0) / s);
    let fy = normal_interval((rect.y_min() - y0) / s, (rect.y_max() - y0) / s);
    (fx * fy).clamp(0.0, 1.0)
}

/// Per-pixel mean photon numbers for the spot; dead pixels get zero.
///
/// The profile covers every pixel of the geometry. Use
/// [`IlluminationProfile::select`] with [`PixelGeometry::alive_indices`] to
/// feed a detector model whose pixel count is the alive count.
pub fn effective_illumination(
    spot: &OpticalSpot,
    geometry: &PixelGeometry,
    mu_total: f64,
) -> Result<IlluminationProfile, ModelError> {
    if !(mu_total >= 0.0 && mu_total.is_finite()) {
        return Err(ModelError::invalid("mu_total", mu_total, "must be >= 0"));
    }
    let means = geometry
        .pixels
        .iter()
        .map(|p| if p.alive { mu_total * spot_pixel_overlap(spot, &p.rect) } else { 0.0 })
        .collect();
    IlluminationProfile::new(means, PhotonStatistics::Poissonian)
}

/// Rectangular scan area in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl ScanWindow {
    pub fn square(half_width: f64) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
        }
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| lo + i as f64 * step).collect()
    }
}

/// Parameters a map was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParameters {
    pub b: u32,
    pub eta: f64,
    pub gamma: f64,
    pub pulse_freq: f64,
    pub mu_total: f64,
    pub fwhm: f64,
}

/// Grid of count rates. `grid[row][col]` is at `(xs[col], ys[row])`, rows
/// in ascending y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMap {
    pub grid: Vec<Vec<f64>>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub window: ScanWindow,
    pub step: f64,
    pub params: MapParameters,
}

/// Intensity scaling for PGM output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Linear,
    /// Four decades below the maximum map to black.
    Log,
}

impl std::str::FromStr for Normalization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Normalization::Linear),
            "log" => Ok(Normalization::Log),
            other => Err(format!("unknown normalization '{other}' (expected linear or log)")),
        }
    }
}

const LOG_DECADES: f64 = 4.0;

impl ResponseMap {
    /// Position and value of the maximum, first in row-major order on ties.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let mut best = (self.xs[0], self.ys[0], f64::NEG_INFINITY);
        for (r, row) in self.grid.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (self.xs[c], self.ys[r], v);
                }
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.argmax().2
    }

    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let nearest = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        self.grid[nearest(&self.ys, y)][nearest(&self.xs, x)]
    }

    /// CSV: `#` header lines with the grid description, then one line of
    /// comma-separated rates per row (ascending y).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let p = &self.params;
        writeln!(
            w,
            "# x_min={} x_max={} y_min={} y_max={} step={} nx={} ny={}",
            fmt_num(self.window.x_min),
            fmt_num(self.xs.last().copied().unwrap_or(self.window.x_min)),
            fmt_num(self.window.y_min),
            fmt_num(self.ys.last().copied().unwrap_or(self.window.y_min)),
            fmt_num(self.step),
            self.xs.len(),
            self.ys.len()
        )?;
        writeln!(
            w,
            "# b={} eta={} gamma={} freq={} mu_total={} fwhm={}",
            p.b,
            fmt_num(p.eta),
            fmt_num(p.gamma),
            fmt_num(p.pulse_freq),
            fmt_num(p.mu_total),
            fmt_num(p.fwhm)
        )?;
        for row in &self.grid {
            let line: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Binary 8-bit PGM, top row at maximum y.
    pub fn write_pgm<W: Write>(&self, mut w: W, norm: Normalization) -> io::Result<()> {
        let max = self.max();
        write!(w, "P5\n{} {}\n255\n", self.xs.len(), self.ys.len())?;
        let mut bytes = Vec::with_capacity(self.xs.len() * self.ys.len());
        for row in self.grid.iter().rev() {
            for &v in row {
                let level = if max <= 0.0 {
                    0.0
                } else {
                    match norm {
                        Normalization::Linear => v / max,
                        Normalization::Log => {
                            if v <= 0.0 {
                                0.0
                            } else {
                                ((v / max).log10() + LOG_DECADES) / LOG_DECADES
                            }
                        }
                    }
                };
                bytes.push((level.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        w.write_all(&bytes)
    }
}

/// Nine significant digits, the output format for every emitted number.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.8e}")
}

/// Raster-scans the spot over `window` and records `f * P(trigger)`.
///
/// `model.n_pixels()` must equal the number of alive pixels; dead pixels take
/// no part in the trigger logic. Rows are evaluated in parallel; the result
/// does not depend on scheduling.
pub fn generate_response_map(
    geometry: &PixelGeometry,
    spot: &OpticalSpot,
    window: &ScanWindow,
    step: f64,
    model: &DetectorModel,
    mu_total: f64,
) -> Result<ResponseMap, ModelError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(ModelError::invalid("step", step, "must be positive"));
    }
    if !(window.x_max > window.x_min && window.y_max > window.y_min) {
        return Err(ModelError::Domain("scan window is empty".into()));
    }
    let alive = geometry.alive_indices();
    if alive.len() != model.n_pixels() as usize {
        return Err(ModelError::Domain(format!(
            "detector model has {} pixels but the geometry has {} alive",
            model.n_pixels(),
            alive.len()
        )));
    }
    let xs = ScanWindow::axis(window.x_min, window.x_max, step);
    let ys = ScanWindow::axis(window.y_min, window.y_max, step);
    let grid = ys
        .par_iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| {
                    let here = spot.centered_at(x, y);
                    let illum = effective_illumination(&here, geometry, mu_total)?.select(&alive)?;
                    Ok(trigger_probability_uneven(model, &illum)?.rate)
                })
                .collect::<Result<Vec<f64>, ModelError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResponseMap {
        grid,
        xs,
        ys,
        window: *window,
        step,
        params: MapParameters {
            b: model.cascade_threshold(),
            eta: model.efficiency(),
            gamma: model.dark_prob(),
            pulse_freq: model.pulse_freq(),
            mu_total,
            fwhm: spot.fwhm,
        },
    })
}

//! Minimal raster output: binary PPM heatmaps of 2-d decision functions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::ModelParams;

pub type Rgb = [u8; 3];

/// Axis-aligned plotting window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    /// Bounding box of the rows of a 2-column matrix, padded by `pad` on
    /// every side.
    pub fn around(points: &Matrix, pad: f64) -> Result<Self> {
        if points.cols() != 2 || points.rows() == 0 {
            return Err(Error::invalid("need a non-empty 2-column matrix"));
        }
        let col = |j: usize| {
            let c = points.column(j);
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo - pad, hi + pad)
        };
        let (x_min, x_max) = col(0);
        let (y_min, y_max) = col(1);
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }
}

pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        if x < self.width && y < self.height {
            self.pixels[y * self.width + x] = c;
        }
    }

    /// Filled square of side `2r + 1` centred on a pixel.
    pub fn dot(&mut self, x: i64, y: i64, r: i64, c: Rgb) {
        for dy in -r..=r {
            for dx in -r..=r {
                let (px, py) = (x + dx, y + dy);
                if px >= 0 && py >= 0 {
                    self.set(px as usize, py as usize, c);
                }
            }
        }
    }

    /// Straight segment by uniform sampling.
    pub fn line(&mut self, from: (i64, i64), to: (i64, i64), c: Rgb) {
        let steps = (to.0 - from.0).abs().max((to.1 - from.1).abs()).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let x = from.0 as f64 + t * (to.0 - from.0) as f64;
            let y = from.1 as f64 + t * (to.1 - from.1) as f64;
            if x >= 0.0 && y >= 0.0 {
                self.set(x.round() as usize, y.round() as usize, c);
            }
        }
    }

    /// Binary PPM (P6).
    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        write!(w, "P6\n{} {}\n255\n", self.width, self.height).map_err(io)?;
        for p in &self.pixels {
            w.write_all(p).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Blue (0) through white (0.5) to red (1).
pub fn ramp(t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, s: f64| (a + (b - a) * s).round() as u8;
    if t < 0.5 {
        let s = t / 0.5;
        [lerp(40.0, 255.0, s), lerp(90.0, 255.0, s), lerp(200.0, 255.0, s)]
    } else {
        let s = (t - 0.5) / 0.5;
        [lerp(255.0, 200.0, s), lerp(255.0, 50.0, s), lerp(255.0, 40.0, s)]
    }
}

/// Maps a point of the window to a pixel (row 0 at the top).
pub fn to_pixel(win: &Window, width: usize, height: usize, x: f64, y: f64) -> (i64, i64) {
    let px = (x - win.x_min) / (win.x_max - win.x_min) * (width - 1) as f64;
    let py = (win.y_max - y) / (win.y_max - win.y_min) * (height - 1) as f64;
    (px.round() as i64, py.round() as i64)
}

/// Heatmap of the class-1 probability of a binary 2-d model.
pub fn decision_heatmap(model: &ModelParams, win: &Window, width: usize, height: usize) -> Result<Image> {
    if model.input_dim() != 2 || model.classes() != 2 {
        return Err(Error::invalid("heatmaps need a binary model on 2-d inputs"));
    }
    if width < 2 || height < 2 {
        return Err(Error::invalid("image must be at least 2x2"));
    }
    let grid = Matrix::from_fn(width * height, 2, |k, j| {
        let (px, py) = (k % width, k / width);
        if j == 0 {
            win.x_min + (win.x_max - win.x_min) * px as f64 / (width - 1) as f64
        } else {
            win.y_max - (win.y_max - win.y_min) * py as f64 / (height - 1) as f64
        }
    });
    let logits = model.forward_batch(&grid)?;
    let mut img = Image::new(width, height, [0, 0, 0]);
    for k in 0..width * height {
        let margin = logits.get(k, 1) - logits.get(k, 0);
        img.pixels[k] = ramp(1.0 / (1.0 + (-margin).exp()));
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_size() {
        let img = Image::new(3, 2, [1, 2, 3]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ppm");
        img.write_ppm(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(bytes.len(), b"P6\n3 2\n255\n".len() + 18);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.5), [255, 255, 255]);
        assert_eq!(ramp(-3.0), ramp(0.0));
    }

    #[test]
    fn heatmap_follows_model() {
        // class 1 above the horizontal axis
        let w = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let m = ModelParams::logistic(w, vec![0.0, 0.0]).unwrap();
        let win = Window {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        };
        let img = decision_heatmap(&m, &win, 5, 5).unwrap();
        assert!(img.get(2, 0)[0] > img.get(2, 0)[2]);
        assert!(img.get(2, 4)[2] > img.get(2, 4)[0]);
    }
}

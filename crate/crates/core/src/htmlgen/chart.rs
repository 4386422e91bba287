//! Deterministic histogram and scatter rasterizer. Geometry is computed
//! first and exposed so tests can check structure without reading pixels.

use crate::numfmt::{format_number, signif};

use super::font;
use super::HtmlError;

#[derive(Debug, Clone, PartialEq)]
pub enum ChartSpec {
    /// Density-scaled histogram with bins of equal width.
    Histogram { data: Vec<f64>, binwidth: f64 },
    Scatter { x: Vec<f64>, y: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartOptions {
    pub width_px: u32,
    pub height_px: u32,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions { width_px: 640, height_px: 480 }
    }
}

/// Pixel bounds of the plotting region, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlotArea {
    pub left: u32,
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub x0: f64,
    pub x1: f64,
    pub count: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartGeometry {
    pub width: u32,
    pub height: u32,
    pub area: PlotArea,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub x_ticks: Vec<f64>,
    pub y_ticks: Vec<f64>,
    pub bars: Vec<Bar>,
    /// Scatter points in pixel coordinates (y grows downwards).
    pub points: Vec<(i64, i64)>,
}

impl ChartGeometry {
    pub fn px_x(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.area.left as f64 + (x - lo) / (hi - lo) * (self.area.right - self.area.left) as f64
    }

    pub fn px_y(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.area.bottom as f64 - (y - lo) / (hi - lo) * (self.area.bottom - self.area.top) as f64
    }
}

const MARGIN_LEFT: u32 = 64;
const MARGIN_BOTTOM: u32 = 36;
const MARGIN_TOP: u32 = 16;
const MARGIN_RIGHT: u32 = 20;
const MAX_BINS: usize = 10_000;

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| signif(k as f64 * step, 10)).collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)))
}

pub fn chart_geometry(spec: &ChartSpec, options: &ChartOptions) -> Result<ChartGeometry, HtmlError> {
    let (w, h) = (options.width_px, options.height_px);
    if !(100..=4096).contains(&w) || !(100..=4096).contains(&h) {
        return Err(HtmlError::BadSize(w, h));
    }
    let area = PlotArea { left: MARGIN_LEFT, top: MARGIN_TOP, right: w - MARGIN_RIGHT, bottom: h - MARGIN_BOTTOM };
    let mut g = ChartGeometry {
        width: w,
        height: h,
        area,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        x_ticks: vec![],
        y_ticks: vec![],
        bars: vec![],
        points: vec![],
    };
    match spec {
        ChartSpec::Histogram { data, binwidth } => {
            if data.is_empty() {
                return Err(HtmlError::EmptyData);
            }
            if data.iter().any(|x| !x.is_finite()) {
                return Err(HtmlError::NonFinite);
            }
            if !(*binwidth > 0.0 && binwidth.is_finite()) {
                return Err(HtmlError::BadBinwidth(*binwidth));
            }
            let (lo, hi) = min_max(data);
            let start = (lo / binwidth).floor() * binwidth;
            let nbins = (((hi - start) / binwidth).floor() as usize + 1).max(1);
            if nbins > MAX_BINS {
                return Err(HtmlError::TooManyBins(nbins));
            }
            let mut counts = vec![0usize; nbins];
            for x in data {
                let i = (((x - start) / binwidth).floor() as usize).min(nbins - 1);
                counts[i] += 1;
            }
            let n = data.len() as f64;
            g.bars = counts
                .iter()
                .enumerate()
                .map(|(i, c)| Bar {
                    x0: start + i as f64 * binwidth,
                    x1: start + (i + 1) as f64 * binwidth,
                    count: *c,
                    density: *c as f64 / (n * binwidth),
                })
                .collect();
            let top = g.bars.iter().map(|b| b.density).fold(0.0, f64::max);
            g.x_range = padded(start, start + nbins as f64 * binwidth);
            g.y_range = (0.0, top * 1.05);
        }
        ChartSpec::Scatter { x, y } => {
            if x.len() != y.len() {
                return Err(HtmlError::LengthMismatch(x.len(), y.len()));
            }
            if x.is_empty() {
                return Err(HtmlError::EmptyData);
            }
            if x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(HtmlError::NonFinite);
            }
            let (xl, xh) = min_max(x);
            let (yl, yh) = min_max(y);
            g.x_range = padded(xl, xh);
            g.y_range = padded(yl, yh);
            let pts: Vec<(i64, i64)> =
                x.iter().zip(y).map(|(a, b)| (g.px_x(*a).round() as i64, g.px_y(*b).round() as i64)).collect();
            g.points = pts;
        }
    }
    g.x_ticks = ticks(g.x_range.0, g.x_range.1);
    g.y_ticks = ticks(g.y_range.0, g.y_range.1);
    Ok(g)
}

struct Canvas {
    width: u32,
    height: u32,
    rgb: Vec<u8>,
}

impl Canvas {
    fn new(width: u32, height: u32) -> Self {
        Canvas { width, height, rgb: vec![255; (width * height * 3) as usize] }
    }

    fn set(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height {
            let i = ((y as u32 * self.width + x as u32) * 3) as usize;
            self.rgb[i..i + 3].copy_from_slice(&color);
        }
    }

    fn fill(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, color: [u8; 3]) {
        for y in y0.min(y1)..=y0.max(y1) {
            for x in x0.min(x1)..=x0.max(x1) {
                self.set(x, y, color);
            }
        }
    }

    fn outline(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, color: [u8; 3]) {
        self.fill(x0, y0, x1, y0, color);
        self.fill(x0, y1, x1, y1, color);
        self.fill(x0, y0, x0, y1, color);
        self.fill(x1, y0, x1, y1, color);
    }

    fn text(&mut self, s: &str, x: i64, y: i64, color: [u8; 3]) {
        for (px, py) in font::pixels(s, x, y) {
            self.set(px, py, color);
        }
    }
}

const BLACK: [u8; 3] = [0, 0, 0];
const BAR: [u8; 3] = [190, 190, 190];
const POINT: [u8; 3] = [30, 30, 30];

fn label(v: f64) -> String {
    format_number(signif(v, 6))
}

/// Render the chart as an 8-bit RGB PNG with no ancillary chunks.
pub fn render_chart(spec: &ChartSpec, options: &ChartOptions) -> Result<Vec<u8>, HtmlError> {
    let g = chart_geometry(spec, options)?;
    let mut c = Canvas::new(g.width, g.height);
    let a = g.area;
    for bar in &g.bars {
        if bar.count == 0 {
            continue;
        }
        let (x0, x1) = (g.px_x(bar.x0).round() as i64, g.px_x(bar.x1).round() as i64);
        let y = g.px_y(bar.density).round() as i64;
        c.fill(x0, y, x1, a.bottom as i64, BAR);
        c.outline(x0, y, x1, a.bottom as i64, BLACK);
    }
    for &(x, y) in &g.points {
        for dy in -3i64..=3 {
            for dx in -3i64..=3 {
                if dx * dx + dy * dy <= 9 {
                    c.set(x + dx, y + dy, POINT);
                }
            }
        }
    }
    let (left, bottom) = (a.left as i64, a.bottom as i64);
    c.fill(left, a.top as i64, left, bottom, BLACK);
    c.fill(left, bottom, a.right as i64, bottom, BLACK);
    for t in &g.x_ticks {
        let x = g.px_x(*t).round() as i64;
        c.fill(x, bottom, x, bottom + 5, BLACK);
        let s = label(*t);
        c.text(&s, x - font::text_width(&s) as i64 / 2, bottom + 9, BLACK);
    }
    for t in &g.y_ticks {
        let y = g.px_y(*t).round() as i64;
        c.fill(left - 5, y, left, y, BLACK);
        let s = label(*t);
        c.text(&s, left - 9 - font::text_width(&s) as i64, y - font::HEIGHT as i64 / 2, BLACK);
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, g.width, g.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| HtmlError::Encode(e.to_string()))?;
        writer.write_image_data(&c.rgb).map_err(|e| HtmlError::Encode(e.to_string()))?;
        writer.finish().map_err(|e| HtmlError::Encode(e.to_string()))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize) -> Vec<f64> {
        // Deterministic, roughly bell shaped.
        (0..n).map(|i| ((i * 7919 % 1000) as f64 / 1000.0 - 0.5) * 3.0 + ((i * 104729 % 997) as f64 / 997.0 - 0.5) * 2.0).collect()
    }

    #[test]
    fn histogram_is_density_scaled() {
        let spec = ChartSpec::Histogram { data: data(1000), binwidth: 0.2 };
        let g = chart_geometry(&spec, &ChartOptions::default()).unwrap();
        let area: f64 = g.bars.iter().map(|b| b.density * (b.x1 - b.x0)).sum();
        assert!((area - 1.0).abs() < 1e-9);
        assert_eq!(g.bars.iter().map(|b| b.count).sum::<usize>(), 1000);
    }

    #[test]
    fn png_bytes_are_stable_and_minimal() {
        let spec = ChartSpec::Histogram { data: data(1000), binwidth: 0.2 };
        let a = render_chart(&spec, &ChartOptions::default()).unwrap();
        let b = render_chart(&spec, &ChartOptions::default()).unwrap();
        assert_eq!(a, b);
        let mut pos = 8;
        let mut chunks = Vec::new();
        while pos + 8 <= a.len() {
            let len = u32::from_be_bytes(a[pos..pos + 4].try_into().unwrap()) as usize;
            chunks.push(String::from_utf8_lossy(&a[pos + 4..pos + 8]).to_string());
            pos += 12 + len;
        }
        assert!(chunks.iter().all(|c| c == "IHDR" || c == "IDAT" || c == "IEND"), "{chunks:?}");
    }

    #[test]
    fn scatter_of_identity_is_monotone() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let spec = ChartSpec::Scatter { x: v.clone(), y: v };
        let g = chart_geometry(&spec, &ChartOptions::default()).unwrap();
        for w in g.points.windows(2) {
            assert!(w[1].0 > w[0].0, "x increases");
            assert!(w[1].1 < w[0].1, "y rises on screen");
        }
        render_chart(&spec, &ChartOptions::default()).unwrap();
    }

    #[test]
    fn bad_inputs() {
        let o = ChartOptions::default();
        assert_eq!(chart_geometry(&ChartSpec::Histogram { data: vec![], binwidth: 1.0 }, &o), Err(HtmlError::EmptyData));
        assert_eq!(
            chart_geometry(&ChartSpec::Histogram { data: vec![1.0], binwidth: 0.0 }, &o),
            Err(HtmlError::BadBinwidth(0.0))
        );
        assert_eq!(
            chart_geometry(&ChartSpec::Scatter { x: vec![1.0], y: vec![] }, &o),
            Err(HtmlError::LengthMismatch(1, 0))
        );
        assert!(chart_geometry(&ChartSpec::Histogram { data: vec![0.0, 1e9], binwidth: 1.0 }, &o).is_err());
    }
}

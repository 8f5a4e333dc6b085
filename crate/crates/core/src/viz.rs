//! Charts: PHATE scatter with the SA legend, 2×2 grids, the SA heatmap and
//! the tier bar chart. SVG is produced directly; PNG and PDF are converted
//! from the SVG.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::affinity::{AffinityResult, Tier};
use crate::error::{Error, Result};
use crate::lexicon::Language;
use crate::manifold::PhateLayout;

pub const DEFAULT_ANCHOR: (f64, f64) = (0.09, 0.09);
pub const DEFAULT_SIZE: (u32, u32) = (800, 800);
pub const DEFAULT_MARKER_RADIUS: f64 = 3.0;
pub const DEFAULT_MARKER_OPACITY: f64 = 0.8;
const FONT: &str = "DejaVu Sans, Arial, sans-serif";
const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Rounds half away from zero on the shortest decimal representation of `x`,
/// so 0.6625 gives "0.663" even though the nearest double is below it.
pub fn round_half_up(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let text = format!("{}", x.abs());
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    for i in 0..decimals {
        digits.push(*frac.get(i).unwrap_or(&0));
    }
    if frac.get(decimals).is_some_and(|&d| d >= 5) {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let mut out = String::new();
    if x.is_sign_negative() && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    out.extend(digits[..split].iter().map(|d| (b'0' + d) as char));
    if decimals > 0 {
        out.push('.');
        out.extend(digits[split..].iter().map(|d| (b'0' + d) as char));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaLegend {
    pub line1: String,
    pub line2: String,
    /// Fractional offsets of the box's top-right corner from the chart's
    /// top-right corner.
    pub anchor: (f64, f64),
}

impl SaLegend {
    pub fn from_values(
        sa_cosine: f64,
        sem_cosine: f64,
        sa_euclidean: f64,
        sem_euclidean: f64,
    ) -> Self {
        Self {
            line1: format!(
                "SA(cos)={} ± {}",
                round_half_up(sa_cosine, 3),
                round_half_up(sem_cosine, 3)
            ),
            line2: format!(
                "SA(eucl)={} ± {}",
                round_half_up(sa_euclidean, 3),
                round_half_up(sem_euclidean, 3)
            ),
            anchor: DEFAULT_ANCHOR,
        }
    }

    pub fn with_anchor(mut self, anchor: (f64, f64)) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn lines(&self) -> [&str; 2] {
        [&self.line1, &self.line2]
    }
}

pub fn format_sa_legend(result: &AffinityResult) -> SaLegend {
    SaLegend::from_values(
        result.sa_cosine,
        result.sem_cosine,
        result.sa_euclidean,
        result.sem_euclidean,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Svg,
    Png,
    Pdf,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Svg => "svg",
            Self::Png => "png",
            Self::Pdf => "pdf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(Self::Svg),
            "png" => Ok(Self::Png),
            "pdf" => Ok(Self::Pdf),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        Self::parse(ext)
    }
}

/// First language red, second blue, then a fixed cycle.
pub fn default_palette(languages: &[Language]) -> IndexMap<Language, String> {
    languages
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), PALETTE[i % PALETTE.len()].to_string()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub layout: PhateLayout,
    pub legend: SaLegend,
    pub title: String,
    pub palette: IndexMap<Language, String>,
    pub width: u32,
    pub height: u32,
    pub marker_radius: f64,
    pub marker_opacity: f64,
}

impl ChartSpec {
    pub fn new(layout: PhateLayout, legend: SaLegend, title: impl Into<String>) -> Self {
        let palette = default_palette(&layout.languages());
        Self {
            layout,
            legend,
            title: title.into(),
            palette,
            width: DEFAULT_SIZE.0,
            height: DEFAULT_SIZE.1,
            marker_radius: DEFAULT_MARKER_RADIUS,
            marker_opacity: DEFAULT_MARKER_OPACITY,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.layout.is_empty() {
            return Err(Error::Render("layout has no points".into()));
        }
        if self.layout.labels.len() != self.layout.coordinates.len() {
            return Err(Error::Render("label count differs from point count".into()));
        }
        for lang in self.layout.languages() {
            if !self.palette.contains_key(&lang) {
                return Err(Error::Render(format!(
                    "no palette entry for language {lang}"
                )));
            }
        }
        if self.width < 100 || self.height < 100 {
            return Err(Error::Render("chart must be at least 100×100".into()));
        }
        Ok(())
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Maps layout coordinates into the plot rectangle with one scale factor for
/// both axes, centered.
pub fn project(points: &[(f64, f64)], rect: (f64, f64, f64, f64)) -> Vec<(f64, f64)> {
    let (x0, y0, w, h) = rect;
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in points {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let (rx, ry) = (max_x - min_x, max_y - min_y);
    let scale = match (rx > 0.0, ry > 0.0) {
        (true, true) => (w / rx).min(h / ry),
        (true, false) => w / rx,
        (false, true) => h / ry,
        (false, false) => 1.0,
    };
    let (cx, cy) = ((min_x + max_x) / 2.0, (min_y + max_y) / 2.0);
    let (px, py) = (x0 + w / 2.0, y0 + h / 2.0);
    points
        .iter()
        // SVG y grows downward
        .map(|&(x, y)| (px + (x - cx) * scale, py - (y - cy) * scale))
        .collect()
}

fn scatter_body(spec: &ChartSpec, out: &mut String) {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let font = (h / 40.0).clamp(10.0, 20.0);
    let title_h = if spec.title.is_empty() {
        0.0
    } else {
        font * 2.0
    };
    let margin = 0.05 * w.min(h);
    let rect = (
        margin,
        margin + title_h,
        w - 2.0 * margin,
        h - 2.0 * margin - title_h,
    );

    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        num(w),
        num(h)
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="{FONT}" font-size="{}" text-anchor="middle">{}</text>"#,
            num(w / 2.0),
            num(margin + font * 1.2),
            num(font * 1.1),
            escape(&spec.title)
        );
    }

    let points: Vec<(f64, f64)> = spec
        .layout
        .coordinates
        .iter()
        .map(|row| {
            (
                row.first().copied().unwrap_or(0.0),
                row.get(1).copied().unwrap_or(0.0),
            )
        })
        .collect();
    let projected = project(&points, rect);
    let _ = writeln!(
        out,
        r#"<g class="markers" fill-opacity="{}">"#,
        num(spec.marker_opacity)
    );
    for ((x, y), label) in projected.iter().zip(&spec.layout.labels) {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            num(*x),
            num(*y),
            num(spec.marker_radius),
            spec.palette[&label.language]
        );
    }
    out.push_str("</g>\n");

    // color key, top-left
    let key_x = margin;
    let mut key_y = margin + title_h;
    out.push_str("<g class=\"color-key\">\n");
    for lang in spec.layout.languages() {
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            num(key_x),
            num(key_y),
            num(font * 0.8),
            num(font * 0.8),
            spec.palette[&lang]
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="{FONT}" font-size="{}">{}</text>"#,
            num(key_x + font * 1.2),
            num(key_y + font * 0.75),
            num(font),
            escape(lang.as_str())
        );
        key_y += font * 1.3;
    }
    out.push_str("</g>\n");

    // legend box: its top-right corner sits at the anchor offsets
    let chars = spec
        .legend
        .lines()
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0) as f64;
    let pad = font * 0.5;
    let box_w = chars * font * 0.62 + 2.0 * pad;
    let box_h = 2.0 * font * 1.3 + 2.0 * pad;
    let right = w * (1.0 - spec.legend.anchor.0);
    let top = h * spec.legend.anchor.1;
    let left = right - box_w;
    let _ = writeln!(
        out,
        r##"<g class="sa-legend"><rect x="{}" y="{}" width="{}" height="{}" fill="#ffffff" fill-opacity="0.85" stroke="#333333" stroke-width="1"/>"##,
        num(left),
        num(top),
        num(box_w),
        num(box_h)
    );
    for (i, line) in spec.legend.lines().iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="{FONT}" font-size="{}">{}</text>"#,
            num(left + pad),
            num(top + pad + font * (1.0 + 1.3 * i as f64)),
            num(font),
            escape(line)
        );
    }
    out.push_str("</g>\n");
}

fn svg_open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        num(w),
        num(h)
    );
}

pub fn render_svg(spec: &ChartSpec) -> Result<String> {
    spec.validate()?;
    let mut out = String::new();
    svg_open(&mut out, spec.width as f64, spec.height as f64);
    scatter_body(spec, &mut out);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Up to four charts in row-major 2×2 cells, each at its own size.
pub fn render_grid_svg(specs: &[ChartSpec]) -> Result<String> {
    if specs.is_empty() || specs.len() > 4 {
        return Err(Error::Render(format!(
            "a 2×2 grid takes 1 to 4 charts, got {}",
            specs.len()
        )));
    }
    for s in specs {
        s.validate()?;
    }
    let cell_w = specs.iter().map(|s| s.width).max().unwrap_or(0) as f64;
    let cell_h = specs.iter().map(|s| s.height).max().unwrap_or(0) as f64;
    let mut out = String::new();
    svg_open(&mut out, cell_w * 2.0, cell_h * 2.0);
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        num(cell_w * 2.0),
        num(cell_h * 2.0)
    );
    for (i, spec) in specs.iter().enumerate() {
        let (col, row) = ((i % 2) as f64, (i / 2) as f64);
        let _ = writeln!(
            out,
            r#"<g transform="translate({},{})">"#,
            num(col * cell_w),
            num(row * cell_h)
        );
        scatter_body(spec, &mut out);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn font_options() -> resvg::usvg::Options<'static> {
    static FONTS: OnceLock<Arc<resvg::usvg::fontdb::Database>> = OnceLock::new();
    let db = FONTS.get_or_init(|| {
        let mut db = resvg::usvg::fontdb::Database::new();
        db.load_system_fonts();
        Arc::new(db)
    });
    resvg::usvg::Options {
        fontdb: db.clone(),
        ..Default::default()
    }
}

pub fn svg_to_png(svg: &str) -> Result<Vec<u8>> {
    let tree = resvg::usvg::Tree::from_str(svg, &font_options())
        .map_err(|e| Error::Render(e.to_string()))?;
    let size = tree.size().to_int_size();
    let mut pixmap = resvg::tiny_skia::Pixmap::new(size.width(), size.height())
        .ok_or_else(|| Error::Render("cannot allocate pixmap".into()))?;
    resvg::render(
        &tree,
        resvg::tiny_skia::Transform::default(),
        &mut pixmap.as_mut(),
    );
    pixmap
        .encode_png()
        .map_err(|e| Error::Render(e.to_string()))
}

pub fn svg_to_pdf(svg: &str) -> Result<Vec<u8>> {
    let tree = resvg::usvg::Tree::from_str(svg, &font_options())
        .map_err(|e| Error::Render(e.to_string()))?;
    svg2pdf::to_pdf(
        &tree,
        svg2pdf::ConversionOptions::default(),
        svg2pdf::PageOptions::default(),
    )
    .map_err(|e| Error::Render(e.to_string()))
}

pub fn convert_svg(svg: &str, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Svg => Ok(svg.as_bytes().to_vec()),
        OutputFormat::Png => svg_to_png(svg),
        OutputFormat::Pdf => svg_to_pdf(svg),
    }
}

pub fn render(spec: &ChartSpec, format: OutputFormat) -> Result<Vec<u8>> {
    convert_svg(&render_svg(spec)?, format)
}

fn lerp_rgb(a: (u8, u8, u8), b: (u8, u8, u8), t: f64) -> (u8, u8, u8) {
    let f = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    (f(a.0, b.0), f(a.1, b.1), f(a.2, b.2))
}

/// Red at SA ≤ 0.4, yellow at 0.6, green at SA ≥ 0.8.
pub fn sa_color(sa: f64) -> String {
    const RED: (u8, u8, u8) = (0xd7, 0x30, 0x27);
    const YELLOW: (u8, u8, u8) = (0xfe, 0xe0, 0x8b);
    const GREEN: (u8, u8, u8) = (0x1a, 0x98, 0x50);
    let t = ((sa - 0.4) / 0.4).clamp(0.0, 1.0);
    let (r, g, b) = if t <= 0.5 {
        lerp_rgb(RED, YELLOW, t * 2.0)
    } else {
        lerp_rgb(YELLOW, GREEN, (t - 0.5) * 2.0)
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    /// `values[model][dataset]`; `None` for a failed cell.
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn render_heatmap_svg(map: &Heatmap) -> Result<String> {
    if map.values.len() != map.models.len()
        || map.values.iter().any(|r| r.len() != map.datasets.len())
    {
        return Err(Error::Render(
            "heatmap shape does not match its labels".into(),
        ));
    }
    let (cell_w, cell_h, label_w, header_h) = (90.0, 28.0, 220.0, 40.0);
    let w = label_w + cell_w * map.datasets.len() as f64 + 10.0;
    let h = header_h + cell_h * map.models.len() as f64 + 10.0;
    let mut out = String::new();
    svg_open(&mut out, w, h);
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        num(w),
        num(h)
    );
    for (j, ds) in map.datasets.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="{FONT}" font-size="12" text-anchor="middle">{}</text>"#,
            num(label_w + cell_w * (j as f64 + 0.5)),
            num(header_h - 12.0),
            escape(ds)
        );
    }
    for (i, model) in map.models.iter().enumerate() {
        let y = header_h + cell_h * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="{FONT}" font-size="12" text-anchor="end">{}</text>"#,
            num(label_w - 8.0),
            num(y + cell_h * 0.65),
            escape(model)
        );
        for (j, v) in map.values[i].iter().enumerate() {
            let x = label_w + cell_w * j as f64;
            let (fill, text) = match v {
                Some(v) => (sa_color(*v), round_half_up(*v, 3)),
                None => ("#cccccc".to_string(), "n/a".to_string()),
            };
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="#ffffff"/>"##,
                num(x),
                num(y),
                num(cell_w),
                num(cell_h)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="{FONT}" font-size="12" text-anchor="middle">{text}</text>"#,
                num(x + cell_w / 2.0),
                num(y + cell_h * 0.65)
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TierBar {
    pub model: String,
    pub avg_sa: f64,
    pub tier: Tier,
}

/// Horizontal bars in the given order, colored by SA, with tier threshold
/// guides at 0.50 and 0.60.
pub fn render_tier_chart_svg(bars: &[TierBar]) -> Result<String> {
    if bars.is_empty() {
        return Err(Error::Render("tier chart needs at least one model".into()));
    }
    let (label_w, bar_h, plot_w, top) = (220.0, 22.0, 500.0, 20.0);
    let w = label_w + plot_w + 80.0;
    let h = top + bar_h * 1.3 * bars.len() as f64 + 30.0;
    let mut out = String::new();
    svg_open(&mut out, w, h);
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        num(w),
        num(h)
    );
    for (i, bar) in bars.iter().enumerate() {
        let y = top + bar_h * 1.3 * i as f64;
        let len = bar.avg_sa.clamp(0.0, 1.0) * plot_w;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="{FONT}" font-size="12" text-anchor="end">{}</text>"#,
            num(label_w - 8.0),
            num(y + bar_h * 0.7),
            escape(&bar.model)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            num(label_w),
            num(y),
            num(len),
            num(bar_h),
            sa_color(bar.avg_sa)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="{FONT}" font-size="12">{} ({})</text>"#,
            num(label_w + len + 4.0),
            num(y + bar_h * 0.7),
            round_half_up(bar.avg_sa, 3),
            bar.tier.as_str()
        );
    }
    let bottom = top + bar_h * 1.3 * bars.len() as f64;
    for threshold in [
        crate::affinity::TIER2_THRESHOLD,
        crate::affinity::TIER1_THRESHOLD,
    ] {
        let x = label_w + threshold * plot_w;
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#555555" stroke-dasharray="4 3"/>"##,
            num(x),
            num(top - 5.0),
            num(bottom)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

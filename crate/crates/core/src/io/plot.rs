//! Static figures: SVG line plots of a sweep, PNG renderings of images.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::apps::psf::ImageGrid;
use crate::error::{Error, Result};
use crate::experiment::RunRecord;

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn line_plot(path: &Path, title: &str, ylabel: &str, pts: &[(f64, f64)]) -> Result<()> {
    let finite: Vec<(f64, f64)> = pts.iter().copied().filter(|(_, y)| y.is_finite()).collect();
    let (lo, hi) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let pad = ((hi - lo) * 0.05).max(1e-3);
    let root = SVGBackend::new(path, (640, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..1f64, (lo - pad)..(hi + pad))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("lambda / lambda_max")
        .y_desc(ylabel)
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(finite.iter().copied(), &BLUE))
        .map_err(plot_err)?;
    chart
        .draw_series(finite.iter().map(|&p| Circle::new(p, 3, BLUE.filled())))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Writes `screening_pct.svg`, `speedup.svg` and `metric.svg` into `dir`.
pub fn emit_plots(records: &[RunRecord], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let series: [(&str, &str, fn(&RunRecord) -> f64); 3] = [
        ("screening_pct", "screening percentage", |r| r.screening_pct),
        ("speedup", "speedup factor", |r| r.speedup),
        ("metric", "metric", |r| r.metric),
    ];
    let mut written = Vec::new();
    for (name, label, get) in series {
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.ratio, get(r))).collect();
        if pts.iter().all(|(_, y)| !y.is_finite()) {
            continue;
        }
        let path = dir.join(format!("{name}.svg"));
        line_plot(&path, label, label, &pts)?;
        written.push(path);
    }
    Ok(written)
}

/// Saves a grayscale PNG, mapping the image's range onto `0..=255`.
pub fn write_png(image: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (lo, hi) = (image.pixels.min(), image.pixels.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let buf = ::image::GrayImage::from_fn(image.width as u32, image.height as u32, |x, y| {
        let v = (image.get(x as usize, y as usize) - lo) / span;
        ::image::Luma([(v * 255.0).round().clamp(0.0, 255.0) as u8])
    });
    buf.save(path).map_err(plot_err)
}

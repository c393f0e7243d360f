//! Static SVG charts. Every chart is drawn from data already written to CSV.

use anyhow::{anyhow, Result};
use plotters::prelude::*;

const SIZE: (u32, u32) = (960, 640);

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Inserts the metadata as an XML comment right after the opening `<svg>` tag.
fn embed_metadata(svg: String, metadata: &[(String, String)]) -> String {
    let Some(start) = svg.find("<svg") else {
        return svg;
    };
    let Some(end) = svg[start..].find('>') else {
        return svg;
    };
    let at = start + end + 1;
    let mut comment = String::from("\n<!--\n");
    for (k, v) in metadata {
        comment.push_str(&format!("{k}: {}\n", v.replace("--", "- -")));
    }
    comment.push_str("-->");
    let mut out = svg;
    out.insert_str(at, &comment);
    out
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi + (hi - lo) * 0.02)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn draw_curves<'a, DB, X, Y>(chart: &mut ChartContext<'a, DB, Cartesian2d<X, Y>>, curves: &[Curve]) -> Result<()>
where
    DB: DrawingBackend + 'a,
    DB::ErrorType: 'static,
    X: Ranged<ValueType = f64>,
    Y: Ranged<ValueType = f64>,
{
    for (i, curve) in curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let style = ShapeStyle::from(&color).stroke_width(2);
        let series = if curve.dashed {
            chart.draw_series(DashedLineSeries::new(curve.points.iter().copied(), 8, 6, style))
        } else {
            chart.draw_series(LineSeries::new(curve.points.iter().copied(), style))
        }
        .map_err(|e| anyhow!("drawing {}: {e}", curve.label))?;
        series
            .label(curve.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()
        .map_err(|e| anyhow!("legend: {e}"))?;
    Ok(())
}

/// Relative error (log scale) against cumulative bytes.
pub fn convergence_svg(title: &str, curves: &[Curve], metadata: &[(String, String)]) -> Result<String> {
    let all = || curves.iter().flat_map(|c| c.points.iter());
    let (x_lo, x_hi) = range(all().map(|p| p.0)).ok_or_else(|| anyhow!("nothing to plot"))?;
    let (y_lo, y_hi) = range(all().map(|p| p.1).filter(|v| *v > 0.0)).ok_or_else(|| anyhow!("nothing to plot"))?;
    let (x_lo, x_hi) = widen(x_lo.min(0.0), x_hi);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(44)
            .y_label_area_size(72)
            .build_cartesian_2d(x_lo..x_hi, (y_lo * 0.5..y_hi * 2.0).log_scale())
            .map_err(|e| anyhow!("{e}"))?;
        chart
            .configure_mesh()
            .x_desc("cumulative bytes sent")
            .y_desc("relative error")
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        let positive: Vec<Curve> = curves
            .iter()
            .map(|c| Curve {
                label: c.label.clone(),
                points: c.points.iter().copied().filter(|p| p.1 > 0.0).collect(),
                dashed: c.dashed,
            })
            .collect();
        draw_curves(&mut chart, &positive)?;
        root.present().map_err(|e| anyhow!("{e}"))?;
    }
    Ok(embed_metadata(svg, metadata))
}

/// Two stacked panels sharing the x axis: iteration ratio with overlays, and total bits.
pub fn sweep_svg(
    title: &str,
    x_name: &str,
    ratios: &[Curve],
    bits: &[Curve],
    metadata: &[(String, String)],
) -> Result<String> {
    let xs = || ratios.iter().chain(bits).flat_map(|c| c.points.iter().map(|p| p.0));
    let (x_lo, x_hi) = range(xs()).ok_or_else(|| anyhow!("nothing to plot"))?;
    let (x_lo, x_hi) = widen(x_lo, x_hi);
    let (r_lo, r_hi) = range(ratios.iter().flat_map(|c| c.points.iter().map(|p| p.1))).unwrap_or((0.0, 1.0));
    let (r_lo, r_hi) = widen(r_lo.min(1.0), r_hi);
    let (b_lo, b_hi) = range(bits.iter().flat_map(|c| c.points.iter().map(|p| p.1))).unwrap_or((0.0, 1.0));
    let (b_lo, b_hi) = widen(b_lo.min(0.0), b_hi);
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (SIZE.0, SIZE.1 * 3 / 2)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
        let root = root.titled(title, ("sans-serif", 22)).map_err(|e| anyhow!("{e}"))?;
        let panels = root.split_evenly((2, 1));
        let mut top = ChartBuilder::on(&panels[0])
            .margin(16)
            .x_label_area_size(40)
            .y_label_area_size(72)
            .build_cartesian_2d(x_lo..x_hi, r_lo..r_hi)
            .map_err(|e| anyhow!("{e}"))?;
        top.configure_mesh()
            .x_desc(x_name)
            .y_desc("iterations / GD iterations")
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        draw_curves(&mut top, ratios)?;
        let mut bottom = ChartBuilder::on(&panels[1])
            .margin(16)
            .x_label_area_size(40)
            .y_label_area_size(72)
            .build_cartesian_2d(x_lo..x_hi, b_lo..b_hi)
            .map_err(|e| anyhow!("{e}"))?;
        bottom
            .configure_mesh()
            .x_desc(x_name)
            .y_desc("total bits to reach eps")
            .y_label_formatter(&|v| format!("{v:.2e}"))
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        draw_curves(&mut bottom, bits)?;
        root.present().map_err(|e| anyhow!("{e}"))?;
    }
    Ok(embed_metadata(svg, metadata))
}

//! Minimal SVG plot emission for the two standard curves: achieved
//! difficulty vs episodes, and success rate vs initial distance error.
//! Series are parsed from the metrics CSVs and echoed back losslessly.

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("nothing to plot: {0}")]
    Empty(String),
}

/// A named series of (x, y) points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Parses a CSV with a header, pulling (x, y) from two named columns.
pub fn series_from_csv(
    text: &str,
    x_col: &str,
    y_col: &str,
    name: &str,
) -> Result<Series, PlotError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| PlotError::Empty("empty csv".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |c: &str| {
        cols.iter().position(|h| *h == c).ok_or_else(|| PlotError::Parse {
            line: 1,
            message: format!("missing column {c:?} in {header:?}"),
        })
    };
    let xi = find(x_col)?;
    let yi = find(y_col)?;
    let mut points = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64, PlotError> {
            fields
                .get(idx)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| PlotError::Parse {
                    line: i + 1,
                    message: format!("bad numeric field {idx}"),
                })
        };
        points.push((parse(xi)?, parse(yi)?));
    }
    if points.is_empty() {
        return Err(PlotError::Empty(format!("no rows under {header:?}")));
    }
    Ok(Series {
        name: name.to_string(),
        points,
    })
}

/// Re-emits a series as CSV with the given column names (lossless:
/// floats are printed with shortest round-trip formatting).
pub fn series_to_csv(series: &Series, x_col: &str, y_col: &str) -> String {
    let mut s = format!("{x_col},{y_col}\n");
    for (x, y) in &series.points {
        s.push_str(&format!("{x},{y}\n"));
    }
    s
}

const PALETTE: [&str; 5] = ["#1f6fb2", "#c23b22", "#2e8540", "#8a5fbf", "#b8860b"];

/// Renders series as polylines (plus point markers) into a standalone
/// SVG file.
pub fn write_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<(), PlotError> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::Empty(title.to_string()));
    }
    let (w, h) = (720.0, 440.0);
    let (ml, mr, mt, mb) = (64.0, 20.0, 40.0, 48.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x0 == x1 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y0 == y1 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = move |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = move |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph,
        ml + pw,
        mt + ph
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph
    ));
    // Tick labels at the extremes.
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{:.3}</text>\n",
            sx(x),
            mt + ph + 16.0,
            x
        ));
    }
    for y in [y0, y1] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>\n",
            ml - 6.0,
            sy(y) + 4.0,
            y
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0,
        h - 12.0,
        xml_escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0,
        xml_escape(y_label)
    ));
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        for (x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>\n",
                sx(*x),
                sy(*y)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            ml + pw - 150.0,
            mt + 16.0 + 16.0 * i as f64,
            xml_escape(&s.name)
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Difficulty-vs-episode curve from a difficulty CSV; returns the series
/// that was plotted (the R curve).
pub fn plot_difficulty(csv_text: &str, out_svg: &Path) -> Result<Series, PlotError> {
    let r = series_from_csv(csv_text, "episode", "r", "R (m)")?;
    let phi = series_from_csv(csv_text, "episode", "phi", "phi (rad)")?;
    write_svg(
        out_svg,
        "Achieved difficulty level vs episodes",
        "episode",
        "difficulty",
        &[r.clone(), phi],
    )?;
    Ok(r)
}

/// Success-vs-distance curve from an evaluation CSV.
pub fn plot_success(csv_text: &str, out_svg: &Path) -> Result<Series, PlotError> {
    let s = series_from_csv(csv_text, "distance", "success_rate", "success rate")?;
    write_svg(
        out_svg,
        "Success rate vs initial distance error",
        "initial distance error (m)",
        "success rate",
        &[s.clone()],
    )?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_series_round_trip_is_lossless() {
        let csv = "distance,success_rate\n0.5,0.9750000000000001\n2,0.5\n2.4,0.3333333333333333\n";
        let s = series_from_csv(csv, "distance", "success_rate", "sr").unwrap();
        let back = series_to_csv(&s, "distance", "success_rate");
        assert_eq!(csv, back);
        let s2 = series_from_csv(&back, "distance", "success_rate", "sr").unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn single_level_run_plots_flat_curve() {
        let dir = tempfile::tempdir().unwrap();
        let csv = "episode,level_index,r,phi\n0,0,0.5,0\n";
        let series = plot_difficulty(csv, &dir.path().join("difficulty.svg")).unwrap();
        assert_eq!(series.points, vec![(0.0, 0.5)]);
        assert!(dir.path().join("difficulty.svg").exists());
    }

    #[test]
    fn two_bucket_eval_plots_two_points() {
        let dir = tempfile::tempdir().unwrap();
        let csv = "distance,episodes,successes,success_rate,mean_steps\n2,10,7,0.7,40\n2.4,10,4,0.4,55\n";
        let series = plot_success(csv, &dir.path().join("success.svg")).unwrap();
        assert_eq!(series.points.len(), 2);
        let svg = std::fs::read_to_string(dir.path().join("success.svg")).unwrap();
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn missing_column_is_an_error() {
        assert!(matches!(
            series_from_csv("a,b\n1,2\n", "a", "zz", "s"),
            Err(PlotError::Parse { line: 1, .. })
        ));
    }
}

//! Static SVG power curves: one file per condition group, one panel per
//! dataset, power against per-class sample size with one line per method.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::sim::ScenarioOutcome;

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct PowerPoint {
    pub dataset: String,
    pub method: String,
    pub n_cases: usize,
    pub n_controls: usize,
    pub power: f64,
}

/// Reads a power CSV, skipping error rows (power `NA`).
pub fn read_power_csv(path: &Path) -> Result<Vec<PowerPoint>> {
    #[derive(Deserialize)]
    struct Row {
        dataset: String,
        method: String,
        n_cases: usize,
        n_controls: usize,
        #[allow(dead_code)]
        alpha: String,
        power: String,
        #[allow(dead_code)]
        n_replicates: usize,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        if row.power == "NA" {
            continue;
        }
        let power = row
            .power
            .parse()
            .map_err(|_| Error::parse(path, i + 2, format!("bad power {:?}", row.power)))?;
        out.push(PowerPoint {
            dataset: row.dataset,
            method: row.method,
            n_cases: row.n_cases,
            n_controls: row.n_controls,
            power,
        });
    }
    Ok(out)
}

pub fn points_from_outcomes(outcomes: &[ScenarioOutcome]) -> Vec<PowerPoint> {
    outcomes
        .iter()
        .filter_map(|(s, o)| o.as_ref().ok().map(|r| (s, r)))
        .flat_map(|(s, r)| {
            r.rows.iter().map(move |row| PowerPoint {
                dataset: s.dataset_id.clone(),
                method: row.method.name().to_string(),
                n_cases: s.n_cases,
                n_controls: s.n_controls,
                power: row.power,
            })
        })
        .collect()
}

/// Groups comparing one factor each, mirroring the built-in design; any
/// other dataset gets a group of its own.
pub fn condition_groups(points: &[PowerPoint]) -> Vec<(String, Vec<String>)> {
    const GROUPS: [(&str, [&str; 3]); 3] = [
        ("ld", ["Dataset1", "Dataset4", "Dataset2"]),
        ("odds_ratio", ["Dataset3", "Dataset4", "Dataset5"]),
        ("maf", ["Dataset6", "Dataset7", "Dataset4"]),
    ];
    let mut seen: Vec<String> = Vec::new();
    for p in points {
        if !seen.contains(&p.dataset) {
            seen.push(p.dataset.clone());
        }
    }
    let mut groups = Vec::new();
    for (name, members) in GROUPS {
        let present: Vec<String> = members
            .iter()
            .filter(|m| seen.iter().any(|s| s == *m))
            .map(|m| m.to_string())
            .collect();
        if !present.is_empty() {
            groups.push((name.to_string(), present));
        }
    }
    let grouped: BTreeSet<&str> = GROUPS.iter().flat_map(|(_, m)| m.iter().copied()).collect();
    for d in &seen {
        if !grouped.contains(d.as_str()) {
            groups.push((d.clone(), vec![d.clone()]));
        }
    }
    groups
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];
const PANEL_W: f64 = 280.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 45.0;
const LEGEND_W: f64 = 130.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one group. Methods keep their first-seen order and colour.
pub fn render_group_svg(title: &str, datasets: &[String], points: &[PowerPoint]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for p in points.iter().filter(|p| datasets.contains(&p.dataset)) {
        if !methods.contains(&p.method.as_str()) {
            methods.push(&p.method);
        }
    }
    let width = datasets.len() as f64 * (PANEL_W + MARGIN) + MARGIN + LEGEND_W;
    let height = PANEL_H + 2.5 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" font-size="14" text-anchor="middle">Power by sample size: {}</text>"#,
        width / 2.0,
        escape(title)
    );

    for (k, dataset) in datasets.iter().enumerate() {
        let x0 = MARGIN + k as f64 * (PANEL_W + MARGIN);
        let y0 = 1.5 * MARGIN;
        let pts: Vec<&PowerPoint> = points.iter().filter(|p| &p.dataset == dataset).collect();
        let sizes: Vec<usize> = pts.iter().map(|p| p.n_cases).collect::<BTreeSet<_>>().into_iter().collect();
        let sx = |n: usize| {
            let i = sizes.iter().position(|&s| s == n).unwrap_or(0);
            if sizes.len() <= 1 {
                x0 + PANEL_W / 2.0
            } else {
                x0 + 20.0 + i as f64 * (PANEL_W - 40.0) / (sizes.len() - 1) as f64
            }
        };
        let sy = |p: f64| y0 + PANEL_H * (1.0 - p.clamp(0.0, 1.0));

        let _ = writeln!(
            svg,
            r##"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 6.0,
            escape(dataset)
        );
        for t in 0..=5 {
            let p = t as f64 / 5.0;
            let y = sy(p);
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{p:.1}</text>"##,
                x0 + PANEL_W,
                x0 - 4.0,
                y + 4.0
            );
        }
        for &n in &sizes {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{n}</text>"#,
                sx(n),
                y0 + PANEL_H + 14.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">cases per class</text>"#,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H + 30.0
        );
        for (mi, method) in methods.iter().enumerate() {
            let colour = PALETTE[mi % PALETTE.len()];
            let mut line: Vec<(f64, f64)> = pts
                .iter()
                .filter(|p| p.method == *method)
                .map(|p| (sx(p.n_cases), sy(p.power)))
                .collect();
            line.sort_by(|a, b| a.0.total_cmp(&b.0));
            if line.is_empty() {
                continue;
            }
            let path: Vec<String> = line.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                path.join(" ")
            );
            for (x, y) in &line {
                let _ = writeln!(svg, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{colour}"/>"#);
            }
        }
    }

    let lx = width - LEGEND_W + 10.0;
    for (mi, method) in methods.iter().enumerate() {
        let y = 1.5 * MARGIN + 10.0 + 18.0 * mi as f64;
        let colour = PALETTE[mi % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            y + 4.0,
            escape(method)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `power_<group>.svg` for every condition group into `dir`.
pub fn write_power_plots(points: &[PowerPoint], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    condition_groups(points)
        .into_iter()
        .map(|(name, datasets)| {
            let path = dir.join(format!("power_{name}.svg"));
            std::fs::write(&path, render_group_svg(&name, &datasets, points)).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(d: &str, m: &str, n: usize, p: f64) -> PowerPoint {
        PowerPoint {
            dataset: d.into(),
            method: m.into(),
            n_cases: n,
            n_controls: n,
            power: p,
        }
    }

    #[test]
    fn groups_follow_design() {
        let pts = vec![
            point("Dataset3", "SKAT", 100, 0.1),
            point("Dataset4", "SKAT", 100, 0.2),
            point("Null", "SKAT", 100, 0.05),
        ];
        let g = condition_groups(&pts);
        assert_eq!(g[0], ("ld".to_string(), vec!["Dataset4".to_string()]));
        assert_eq!(g[1].1, vec!["Dataset3".to_string(), "Dataset4".to_string()]);
        assert_eq!(g.last().unwrap().0, "Null");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let pts = vec![
            point("Dataset4", "SKAT", 100, 0.1),
            point("Dataset4", "SKAT", 500, 0.4),
            point("Dataset4", "SBBT", 100, 0.2),
        ];
        let svg = render_group_svg("a<b", &["Dataset4".to_string()], &pts);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn csv_round_trip_skips_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(
            &path,
            "dataset,method,n_cases,n_controls,alpha,power,n_replicates\n\
             Dataset4,SKAT,100,100,0.05,0.250,1000\n\
             Bad,ERROR: x,100,100,NA,NA,0\n",
        )
        .unwrap();
        let pts = read_power_csv(&path).unwrap();
        assert_eq!(pts, vec![point("Dataset4", "SKAT", 100, 0.25)]);
    }
}

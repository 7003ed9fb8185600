//! Result files, the run manifest and SVG plots.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    tool_version: &'a str,
    config_hash: &'a str,
    wall_time_seconds: f64,
    outputs: &'a [String],
    /// Inputs of the run; re-running with them reproduces every output.
    echo: &'a serde_json::Value,
}

/// Collects the files of one run. Without a prefix, the JSON result goes to
/// stdout and nothing is written to disk.
pub struct Sink {
    prefix: Option<PathBuf>,
    subcommand: &'static str,
    echo: serde_json::Value,
    hash: String,
    outputs: Vec<String>,
    started: Instant,
}

impl Sink {
    pub fn new(prefix: Option<PathBuf>, subcommand: &'static str, echo: serde_json::Value) -> Self {
        let canonical = serde_json::to_vec(&echo).expect("echo serialises");
        let hash = hex::encode(Sha256::digest(&canonical));
        Self {
            prefix,
            subcommand,
            echo,
            hash,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn writes_files(&self) -> bool {
        self.prefix.is_some()
    }

    fn path(&mut self, suffix: &str) -> Result<Option<PathBuf>> {
        let Some(prefix) = &self.prefix else {
            return Ok(None);
        };
        let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(suffix);
        let path = prefix.with_file_name(name);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        self.outputs.push(path.display().to_string());
        Ok(Some(path))
    }

    /// The main JSON result: `PREFIX.json`, or stdout.
    pub fn result<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        match self.path(".json")? {
            Some(path) => std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display())),
            None => stdout_line(&text),
        }
    }

    /// `PREFIX_<name>.csv`; skipped without a prefix.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let Some(path) = self.path(&format!("_{name}.csv"))? else {
            return Ok(());
        };
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// A CSV that is appended to and flushed in batches, so an interrupted
    /// run keeps the rows already finished.
    pub fn streaming_csv(&mut self, name: &str) -> Result<Option<csv::Writer<File>>> {
        match self.path(&format!("_{name}.csv"))? {
            Some(path) => Ok(Some(
                csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?,
            )),
            None => Ok(None),
        }
    }

    pub fn svg(&mut self, name: &str, body: String) -> Result<()> {
        if let Some(path) = self.path(&format!("_{name}.svg"))? {
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    /// Writes `PREFIX.manifest.json` listing everything written so far.
    pub fn finish(mut self) -> Result<()> {
        let Some(path) = self.path(".manifest.json")? else {
            return Ok(());
        };
        self.outputs.pop();
        let manifest = RunManifest {
            subcommand: self.subcommand,
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: &self.hash,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: &self.outputs,
            echo: &self.echo,
        };
        let mut f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        writeln!(f, "{}", serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
pub fn stdout_line(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn frame(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n",
            "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"20\" text-anchor=\"middle\">{title}</text>\n",
            "<rect x=\"{p}\" y=\"{p}\" width=\"{iw}\" height=\"{ih}\" fill=\"none\" stroke=\"black\"/>\n",
            "<text x=\"{cx}\" y=\"{xl}\" text-anchor=\"middle\">{x_label} [{x0:.4}, {x1:.4}]</text>\n",
            "<text x=\"15\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {cy})\">{y_label} [{y0:.4}, {y1:.4}]</text>\n",
        ),
        w = W,
        h = H,
        p = PAD,
        iw = W - 2.0 * PAD,
        ih = H - 2.0 * PAD,
        cx = W / 2.0,
        cy = H / 2.0,
        xl = H - 15.0,
        title = title,
        x_label = x_label,
        y_label = y_label,
        x0 = x.0,
        x1 = x.1,
        y0 = y.0,
        y1 = y.1,
    )
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn scale(v: f64, (lo, hi): (f64, f64), a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

/// Line plot of `points`.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let xr = range(points.iter().map(|p| p.0));
    let yr = range(points.iter().map(|p| p.1));
    let mut out = frame(title, x_label, y_label, xr, yr);
    let path: Vec<String> = points
        .iter()
        .map(|&(x, y)| {
            format!(
                "{:.2},{:.2}",
                scale(x, xr, PAD, W - PAD),
                scale(y, yr, H - PAD, PAD)
            )
        })
        .collect();
    out.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n</svg>\n",
        path.join(" ")
    ));
    out
}

/// Scatter of verdicts: green for spreading, red for vanishing, grey otherwise.
pub fn verdict_map(title: &str, x_label: &str, y_label: &str, cells: &[(f64, f64, &str)]) -> String {
    let xr = range(cells.iter().map(|c| c.0));
    let yr = range(cells.iter().map(|c| c.1));
    let mut out = frame(title, x_label, y_label, xr, yr);
    for &(x, y, kind) in cells {
        let colour = match kind {
            "spreading" => "seagreen",
            "vanishing" => "firebrick",
            _ => "grey",
        };
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{colour}\"/>\n",
            scale(x, xr, PAD + 10.0, W - PAD - 10.0),
            scale(y, yr, H - PAD - 10.0, PAD + 10.0)
        ));
    }
    out.push_str("</svg>\n");
    out
}

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::{CliError, RunConfig};

/// Collects the files written by one command.
pub(super) struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub(super) fn create(dir: &PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(CliError::Output)?;
        Ok(Self {
            dir: dir.clone(),
            files: Vec::new(),
        })
    }

    pub(super) fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(CliError::Output)?;
        let mut w = std::io::BufWriter::new(file);
        f(&mut w).map_err(CliError::Output)?;
        w.flush().map_err(CliError::Output)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub(super) fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        value: &T,
    ) -> Result<(), CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    pub(super) fn finish(
        self,
        cfg: &RunConfig,
        pass_flags: &BTreeMap<String, bool>,
    ) -> Result<(), CliError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Manifest {
            command: cfg.command.name(),
            config: cfg,
            seed: cfg.seed,
            start: cfg.start.values(),
            results_files: &self.files,
            pass_flags,
            version: env!("CARGO_PKG_VERSION"),
            timestamp,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(CliError::Output)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
    seed: u64,
    start: &'a [i64],
    results_files: &'a [String],
    pass_flags: &'a BTreeMap<String, bool>,
    version: &'a str,
    timestamp: u64,
}

/// Static bar chart of `samples` with `bins` equal-width bins.
pub fn histogram_svg(samples: &[f64], bins: usize, title: &str) -> String {
    let (w, h, pad) = (640.0, 360.0, 40.0);
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bins = bins.max(1);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let bar = (w - 2.0 * pad) / bins as f64;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <text x=\"{pad}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    );
    for (k, &c) in counts.iter().enumerate() {
        let bh = (h - 2.0 * pad) * c as f64 / top;
        s.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4a78b0\"/>\n",
            pad + k as f64 * bar,
            h - pad - bh,
            bar * 0.95,
            bh
        ));
    }
    s.push_str(&format!(
        "<text x=\"{pad}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"12\">{lo:.4}</text>\n\
         <text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{hi:.4}</text>\n</svg>\n",
        h - pad + 16.0,
        w - pad,
        h - pad + 16.0
    ));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_has_one_bar_per_bin() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let svg = histogram_svg(&xs, 10, "t");
        assert_eq!(svg.matches("<rect").count(), 10);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

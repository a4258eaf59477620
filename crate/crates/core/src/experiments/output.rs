//! CSV writers. Numbers use Rust's shortest round-trip formatting with a
//! `.` decimal separator, rows end in `\n`, and nothing depends on locale,
//! so identical results produce byte-identical files.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::AveragedCurve;
use crate::error::{Error, Result};
use crate::evolution::GenerationRecord;
use crate::experiments::histogram::Histogram;

pub const RUN_HEADER: &str = "generation,mean_fitness,best_fitness,mean_heterozygosity";

pub fn write_run_csv<W: Write>(mut w: W, records: &[GenerationRecord]) -> io::Result<()> {
    writeln!(w, "{RUN_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.generation, r.mean_fitness, r.best_fitness, r.mean_heterozygosity
        )?;
    }
    Ok(())
}

/// Parses a file written by [`write_run_csv`]. Histograms are not stored.
pub fn read_run_csv(text: &str) -> Result<Vec<GenerationRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RUN_HEADER) {
        return Err(Error::Config("not a run CSV".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Config(format!("run CSV line {}: {line:?}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(GenerationRecord {
                generation: f[0].parse().map_err(|_| bad())?,
                mean_fitness: f[1].parse().map_err(|_| bad())?,
                best_fitness: f[2].parse().map_err(|_| bad())?,
                mean_heterozygosity: f[3].parse().map_err(|_| bad())?,
                histogram: None,
            })
        })
        .collect()
}

pub fn write_histogram_csv<W: Write>(mut w: W, records: &[GenerationRecord]) -> io::Result<()> {
    writeln!(w, "bin_lower,density,generation")?;
    for r in records {
        if let Some(h) = &r.histogram {
            for (i, d) in h.density.iter().enumerate() {
                writeln!(w, "{},{},{}", Histogram::bin_lower(i), d, r.generation)?;
            }
        }
    }
    Ok(())
}

pub fn write_averaged_csv<W: Write>(mut w: W, curve: &AveragedCurve) -> io::Result<()> {
    writeln!(
        w,
        "generation,runs,mean_fitness,mean_fitness_se,best_fitness,best_fitness_se,mean_heterozygosity,mean_heterozygosity_se"
    )?;
    for g in 0..curve.generations() {
        let (m, b, h) = (
            curve.mean_fitness[g],
            curve.best_fitness[g],
            curve.mean_heterozygosity[g],
        );
        writeln!(w, "{g},{},{},{},{},{},{},{}", m.runs, m.mean, m.se, b.mean, b.se, h.mean, h.se)?;
    }
    Ok(())
}

/// Writes through a temporary sibling and renames, so a file at `path`
/// is always complete.
pub fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

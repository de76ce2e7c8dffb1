//! CSV reports, run manifests and gnuplot scripts.
//!
//! Floats are written with 17 significant digits so a CSV read back
//! reproduces the in-memory values bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convergence::ConvergenceReport;
use crate::elastodynamics::EnergyReport;
use crate::error::{Error, Result};
use crate::korn::KornEstimate;
use crate::linalg::Mandel;
use crate::trajectory::TrajectoryState;
use crate::viscoelastic::{ContractionReport, ContractionSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

/// One CSV file: a name, a fixed header and rows of the same width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: Vec<&'static str>) -> Table {
        Table { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match the header of {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Int(v) => write!(s, "{v}").unwrap(),
                    Cell::Float(v) => write!(s, "{v:.16e}").unwrap(),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Energy audit plus the node norms of the audited trajectory.
pub fn energy_table(report: &EnergyReport, traj: &TrajectoryState) -> Table {
    let mut t = Table::new(
        "energy.csv",
        vec!["t", "kinetic", "elastic", "work", "slack", "norm_u", "norm_du", "norm_v", "open"],
    );
    for k in 0..report.times.len() {
        let n = traj.node_norms(k);
        t.push(vec![
            report.times[k].into(),
            report.kinetic[k].into(),
            report.elastic[k].into(),
            report.work[k].into(),
            report.slack[k].into(),
            n.u.sqrt().into(),
            n.du.sqrt().into(),
            n.v.sqrt().into(),
            traj.nodes[k].open.into(),
        ]);
    }
    t
}

pub fn trajectory_table(traj: &TrajectoryState) -> Table {
    let mut t = Table::new("trajectory.csv", vec!["t", "norm_u", "norm_du", "norm_v", "open"]);
    for k in 0..traj.nodes.len() {
        let n = traj.node_norms(k);
        t.push(vec![traj.time(k).into(), n.u.sqrt().into(), n.du.sqrt().into(), n.v.sqrt().into(), traj.nodes[k].open.into()]);
    }
    t
}

/// Per-element memory values at every node.
pub fn memory_table(times: &[f64], memory: &[Vec<Mandel>]) -> Table {
    let mut t = Table::new("memory.csv", vec!["t", "element", "h11", "h22", "h12_sqrt2"]);
    for (time, h) in times.iter().zip(memory) {
        for (e, m) in h.iter().enumerate() {
            t.push(vec![(*time).into(), e.into(), m[0].into(), m[1].into(), m[2].into()]);
        }
    }
    t
}

pub fn picard_table(report: &ContractionReport) -> Table {
    let mut t = Table::new("picard.csv", vec!["subinterval", "t_start", "t_end", "iteration", "diff"]);
    for (i, diffs) in report.diffs.iter().enumerate() {
        for (m, d) in diffs.iter().enumerate() {
            t.push(vec![i.into(), report.boundaries[i].into(), report.boundaries[i + 1].into(), (m + 1).into(), (*d).into()]);
        }
    }
    t
}

pub fn contraction_table(samples: &[ContractionSample]) -> Table {
    let mut t = Table::new("contraction.csv", vec!["T", "rho", "input_distance", "steps"]);
    for s in samples {
        t.push(vec![s.horizon.into(), s.rho.into(), s.input_distance.into(), s.steps.into()]);
    }
    t
}

pub fn convergence_table(report: &ConvergenceReport) -> Table {
    let mut t = Table::new("convergence.csv", vec!["n", "sup_dist", "w_dist", "uniform_bound"]);
    for r in &report.rows {
        t.push(vec![r.n.into(), r.sup_dist.into(), r.w_dist.into(), r.uniform_bound.into()]);
    }
    t
}

pub fn map_convergence_table(dists: &[(usize, f64)]) -> Table {
    let mut t = Table::new("map_convergence.csv", vec!["n", "map_dist"]);
    for &(n, d) in dists {
        t.push(vec![n.into(), d.into()]);
    }
    t
}

pub fn korn_table(rows: &[(f64, bool, KornEstimate)]) -> Table {
    let mut t = Table::new("korn.csv", vec!["h", "cracked", "k", "lambda_max", "iterations"]);
    for (h, cracked, e) in rows {
        t.push(vec![(*h).into(), (*cracked as usize).into(), e.k.into(), e.lambda_max.into(), e.iterations.into()]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Resolved configuration, printed in canonical form.
    pub config: String,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(command: &str, config: String, seeds: Vec<u64>, threads: usize) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds,
            threads,
            wall_clock_seconds: 0.0,
            files: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

/// Writes every table into `dir`, records it in the manifest, then writes
/// `manifest.json` itself (which is not listed).
pub fn write_results(dir: &Path, tables: &[Table], mut manifest: RunManifest) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in tables {
        let csv = t.to_csv();
        write(dir.join(&t.name), &csv)?;
        manifest.files.push(OutputFile { name: t.name.clone(), sha256: sha256_hex(csv.as_bytes()), rows: t.rows.len() });
    }
    write(dir.join("manifest.json"), &manifest.to_json())?;
    Ok(manifest)
}

fn column(header: &[&str], name: &str, file: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| *h == name)
        .map(|i| i + 1)
        .ok_or_else(|| Error::Precondition(format!("{file}: missing column '{name}'")))
}

/// Gnuplot script for the energy, convergence and contraction files among
/// `files`. Other CSV files are skipped. The script refers to files by
/// name, so it is meant to be run from their directory.
pub fn emit_plot_script(files: &[PathBuf]) -> Result<String> {
    let mut s = String::from("# gnuplot script\nset datafile separator ','\nset terminal pngcairo size 900,600\n");
    for path in files {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
        let rows = lines.filter(|l| !l.trim().is_empty()).count();
        let file = path
            .file_name()
            .map(|s| s.to_string_lossy().replace('\'', "''"))
            .unwrap_or_default();
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let kind = if header.contains(&"kinetic") {
            "energy"
        } else if header.contains(&"sup_dist") {
            "convergence"
        } else if header.contains(&"rho") {
            "contraction"
        } else {
            continue;
        };
        writeln!(s).unwrap();
        if rows == 0 {
            writeln!(s, "# warning: {file} has no data rows, the plot below will be empty").unwrap();
        }
        writeln!(s, "set output '{stem}.png'").unwrap();
        match kind {
            "energy" => {
                let t = column(&header, "t", &file)?;
                let kin = column(&header, "kinetic", &file)?;
                let el = column(&header, "elastic", &file)?;
                let w = column(&header, "work", &file)?;
                writeln!(s, "unset logscale").unwrap();
                writeln!(s, "set xlabel 't'\nset ylabel 'energy'").unwrap();
                if rows > 0 {
                    writeln!(s, "stats '{file}' skip 1 every ::0::0 using (${kin}+${el}) nooutput\nE0 = STATS_min").unwrap();
                } else {
                    writeln!(s, "E0 = 0").unwrap();
                }
                writeln!(
                    s,
                    "plot '{file}' skip 1 using {t}:(${kin}+${el}) with lines title 'E', \\\n     '{file}' skip 1 using {t}:(E0+${w}) with lines dashtype 2 title 'E0 + W'"
                )
                .unwrap();
            }
            "convergence" => {
                let n = column(&header, "n", &file)?;
                let sup = column(&header, "sup_dist", &file)?;
                let wd = column(&header, "w_dist", &file)?;
                writeln!(s, "set logscale xy").unwrap();
                writeln!(s, "set xlabel 'n'\nset ylabel 'distance to limit'").unwrap();
                writeln!(
                    s,
                    "plot '{file}' skip 1 using {n}:{sup} with linespoints title 'sup_t', \\\n     '{file}' skip 1 using {n}:{wd} with linespoints title 'W'"
                )
                .unwrap();
            }
            _ => {
                let t = column(&header, "T", &file)?;
                let rho = column(&header, "rho", &file)?;
                writeln!(s, "set logscale xy").unwrap();
                writeln!(s, "set xlabel 'T'\nset ylabel 'rho'").unwrap();
                writeln!(s, "plot '{file}' skip 1 using {t}:{rho} with linespoints title 'rho(T)'").unwrap();
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crack::{CrackPath, Schedule, SpaceFamily};
    use crate::domain::{Domain, Side};
    use std::sync::Arc;

    fn traj(steps: usize) -> TrajectoryState {
        let domain = Domain::unit_square(&[Side::Bottom]).unwrap();
        let path = CrackPath::new(2, vec![[0.0, 0.5], [1.0, 0.5]]).unwrap();
        let fam = Arc::new(SpaceFamily::build(&domain, &path, 0.5).unwrap());
        TrajectoryState::random_smooth(fam, &Schedule::constant(0.5), 0.0, 0.1, steps, 3)
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let mut t = Table::new("x.csv", vec!["a", "b"]);
        t.push(vec![0.1.into(), 3usize.into()]);
        assert_eq!(t.to_csv(), "a,b\n1.0000000000000001e-1,3\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn node_count_rows() {
        let tr = traj(7);
        let csv = trajectory_table(&tr).to_csv();
        assert_eq!(csv.lines().count(), 8 + 1);
    }

    #[test]
    fn empty_manifest_and_repeatable_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_results(dir.path(), &[], RunManifest::new("validate", String::new(), vec![], 1)).unwrap();
        assert!(m.files.is_empty());
        let json = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let parsed: RunManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, m);

        let tables = [trajectory_table(&traj(4))];
        let a = write_results(&dir.path().join("a"), &tables, RunManifest::new("x", String::new(), vec![3], 1)).unwrap();
        let tables = [trajectory_table(&traj(4))];
        let b = write_results(&dir.path().join("b"), &tables, RunManifest::new("x", String::new(), vec![3], 1)).unwrap();
        assert_eq!(a.files, b.files);
    }

    #[test]
    fn unwritable_path_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "").unwrap();
        match write_results(&blocker.join("sub"), &[], RunManifest::new("x", String::new(), vec![], 1)) {
            Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plot_scripts() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("convergence.csv");
        fs::write(&empty, "n,sup_dist,w_dist,uniform_bound\n").unwrap();
        let s = emit_plot_script(&[empty]).unwrap();
        assert!(s.contains("# warning"));
        assert!(s.contains("set logscale xy"));

        let energy = dir.path().join("energy.csv");
        fs::write(&energy, "t,kinetic,elastic,work\n0,1,0,0\n0.1,0.5,0.5,0\n").unwrap();
        let s = emit_plot_script(&[energy]).unwrap();
        assert!(s.contains("E0 + W") && !s.contains("warning"));

        let broken = dir.path().join("bad.csv");
        fs::write(&broken, "t,kinetic,work\n").unwrap();
        assert!(emit_plot_script(&[broken]).is_err());
    }
}

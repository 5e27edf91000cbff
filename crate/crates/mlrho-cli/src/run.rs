//! The `run` subcommand.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mlrho::diagnostics::{DiagnosticsRecord, Recorder};
use mlrho::evolution::{contraction_budget, safe_duration};
use mlrho::io::{partial_path, write_atomic, write_snapshot};
use mlrho::*;

use crate::scenario::{Overrides, Scenario};

/// A text file written under `<name>.partial` and renamed on success.
struct Staged {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Staged {
    fn create(path: PathBuf, header: &str) -> Result<Self> {
        let mut out = BufWriter::new(File::create(partial_path(&path))?);
        writeln!(out, "{header}")?;
        Ok(Staged { path, out })
    }

    fn row(&mut self, fields: &[f64]) -> Result<()> {
        let mut line = String::new();
        for (i, v) in fields.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write!(line, "{v:e}").unwrap();
        }
        self.line(&line)
    }

    /// Rows are flushed as they are written so progress is visible on disk.
    fn line(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        drop(self.out);
        fs::rename(partial_path(&self.path), &self.path)?;
        Ok(())
    }
}

fn trajectory_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=n {
        for name in ["qx", "qy", "qz", "px", "py", "pz", "vx", "vy", "vz"] {
            write!(h, ",{name}{i}").unwrap();
        }
    }
    h
}

fn diagnostics_header(n: usize) -> String {
    let mut h = String::from("t,H_per,H_tot");
    for i in 1..=n {
        write!(h, ",gauss{i}").unwrap();
    }
    for i in 1..=n {
        write!(h, ",divB{i}").unwrap();
    }
    h.push_str(",phase_norm,bound_margin");
    h
}

fn diagnostics_row(r: &DiagnosticsRecord) -> Vec<f64> {
    let mut row = vec![r.t, r.h_per, r.h_tot];
    row.extend(&r.gauss);
    row.extend(&r.div_b);
    row.push(r.phase_norm);
    row.push(r.bound_margin);
    row
}

fn write_plots(dir: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (col, name) in header.split(',').enumerate().skip(1) {
        let mut text = format!("# t {name}\n");
        for row in rows {
            writeln!(text, "{:e} {:e}", row[0], row[col]).unwrap();
        }
        write_atomic(&dir.join(format!("{name}.dat")), text.as_bytes())?;
    }
    Ok(())
}

pub struct RunOptions {
    pub overrides: Overrides,
    pub emit_plots: bool,
    pub seed: u64,
}

/// Load, validate and run a scenario; returns the output directory.
pub fn run_scenario(path: &Path, opts: RunOptions) -> Result<PathBuf> {
    let mut scenario = Scenario::load(path)?;
    scenario.apply(opts.overrides);
    let base = path.parent().unwrap_or(Path::new("."));
    let prep = scenario.prepare(base)?;
    let (phi0, model, cfg) = (&prep.phi, &prep.model, &prep.cfg);
    if prep.plane_wave_corrected {
        eprintln!("warning: plane-wave polarization projected onto the transverse plane");
    }
    let dir = prep.out_dir.clone();
    fs::create_dir_all(&dir)?;
    if prep.snapshot_every > 0 {
        fs::create_dir_all(dir.join("snapshots"))?;
    }

    let n = phi0.len();
    let mut traj_out = Staged::create(dir.join("trajectory.csv"), &trajectory_header(n))?;
    let diag_header = diagnostics_header(n);
    let mut diag_out = Staged::create(dir.join("diagnostics.csv"), &diag_header)?;
    let recorder = Recorder::new(phi0, model)?;
    let mut diag_rows = Vec::new();
    let mut outputs = 0usize;
    let grid = phi0.grid.clone();

    let result = evolve(phi0, cfg, model, |t, s| {
        let mut row = vec![t];
        for p in &s.particles {
            row.extend(p.q);
            row.extend(p.p);
            row.extend(p.velocity());
        }
        traj_out.row(&row)?;
        let d = diagnostics_row(&recorder.record(t, s)?);
        diag_out.row(&d)?;
        diag_rows.push(d);
        if prep.snapshot_every > 0 && outputs.is_multiple_of(prep.snapshot_every) {
            for (i, f) in s.fields.iter().enumerate() {
                write_snapshot(
                    &dir.join("snapshots").join(format!("field{}_{outputs:06}.bin", i + 1)),
                    &grid,
                    t,
                    f,
                )?;
            }
        }
        outputs += 1;
        Ok(())
    });
    let traj = match result {
        Ok(t) => t,
        Err(aborted) => {
            // Leave what was written under the .partial names.
            let _ = traj_out.out.flush();
            let _ = diag_out.out.flush();
            return Err(aborted.error);
        }
    };
    traj_out.finish()?;
    diag_out.finish()?;

    let mut steps = Staged::create(
        dir.join("steps.csv"),
        "step,dt,iterations,worst_factor,last_difference,rejected",
    )?;
    for (k, r) in traj.reports.iter().enumerate() {
        steps.line(&format!(
            "{},{:e},{},{:e},{:e},{}",
            k + 1,
            r.dt,
            r.iterations,
            r.factors.iter().copied().fold(0.0, f64::max),
            r.differences.last().copied().unwrap_or(0.0),
            r.rejected
        ))?;
    }
    steps.finish()?;

    let budget = contraction_budget(phi0, cfg.dt, model, opts.seed)?;
    let summary = format!(
        "steps = {}\nrejected = {}\nworst_factor = {:e}\nfinal_time = {:e}\nsafe_duration = {:e}\nbudget = {:e}\nbudget_c1 = {:e}\nbudget_c2 = {:e}\ngamma = {:e}\n",
        traj.reports.len(),
        traj.rejected(),
        traj.worst_factor(),
        traj.final_time,
        safe_duration(phi0, model, cfg.dt),
        budget.value,
        budget.c1,
        budget.c2,
        budget.gamma,
    );
    write_atomic(&dir.join("summary.txt"), summary.as_bytes())?;
    if opts.emit_plots {
        write_plots(&dir.join("plots"), &diag_header, &diag_rows)?;
    }
    Ok(dir)
}

//! Drives one scene frame by frame and writes its outputs.
//!
//! Files in the output directory:
//! - `diagnostics.csv`, one row per step plus the initial state, flushed as it goes;
//! - `frame_NNNN_<field>.vxmp` dumps of every velocity and vorticity component;
//! - `frame_NNNN.png` when images are enabled;
//! - `solver.csv` with per-solve statistics when requested. It carries wall
//!   times, so unlike everything else it differs between identical runs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;
use vortexmap::dump::Dump;
use vortexmap::scenes::build_scene;
use vortexmap::simulation::{Diagnostics, DiagnosticsWriter, SimState};

use crate::config::{ConfigError, RunConfig};
use crate::render::{vorticity_image, write_png};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("nonconverged at step {step}: {source}")]
    Solver { step: usize, source: vortexmap::Error },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Core(vortexmap::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub scene: String,
    pub frames: usize,
    pub steps: usize,
    pub time: f64,
    pub wall: Duration,
    /// Resident-set high-water mark in bytes, where the platform reports it.
    pub peak_memory: Option<u64>,
}

impl RunSummary {
    pub fn line(&self) -> String {
        let mem = match self.peak_memory {
            Some(b) => format!("{:.1} MiB", b as f64 / (1024.0 * 1024.0)),
            None => "n/a".to_string(),
        };
        format!(
            "done: {} frames {} steps {} t {:.4} wall {:.2} s peak memory {}",
            self.scene,
            self.frames,
            self.steps,
            self.time,
            self.wall.as_secs_f64(),
            mem
        )
    }
}

/// Peak resident memory from `/proc/self/status`.
pub fn peak_memory() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Solver failures carry the step they happened in; anything else is fatal as is.
fn classify(e: vortexmap::Error, step: usize) -> RunError {
    match e {
        vortexmap::Error::NotConverged { .. } | vortexmap::Error::Diverged { .. } => RunError::Solver { step, source: e },
        vortexmap::Error::Io(source) => RunError::Io { path: PathBuf::new(), source },
        e => RunError::Core(e),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn field_names(dim: usize) -> (Vec<&'static str>, Vec<&'static str>) {
    if dim == 2 {
        (vec!["ux", "uy"], vec!["w"])
    } else {
        (vec!["ux", "uy", "uz"], vec!["wx", "wy", "wz"])
    }
}

struct Outputs<'a> {
    cfg: &'a RunConfig,
    scale: f64,
}

impl Outputs<'_> {
    fn frame(&self, st: &SimState, f: usize) -> Result<(), RunError> {
        let g = st.grid();
        let dir = &self.cfg.out_dir;
        let (u_names, w_names) = field_names(g.dim());
        let mut dumps: Vec<(&str, Dump)> = Vec::new();
        for (a, name) in u_names.iter().enumerate() {
            dumps.push((name, Dump::face(g, st.velocity(), a)));
        }
        for (slot, name) in w_names.iter().enumerate() {
            dumps.push((name, Dump::vort(g, st.vorticity(), slot)));
        }
        for (name, d) in dumps {
            let path = dir.join(format!("frame_{f:04}_{name}.vxmp"));
            d.save(&path).map_err(|e| match e {
                vortexmap::Error::Io(source) => RunError::Io { path: path.clone(), source },
                e => RunError::Core(e),
            })?;
        }
        if self.cfg.emit_png {
            let path = dir.join(format!("frame_{f:04}.png"));
            let img = vorticity_image(g, st.vorticity(), self.cfg.slice_axis, self.scale);
            write_png(&path, &img).map_err(io_err(&path))?;
        }
        Ok(())
    }
}

fn write_row(csv: &mut DiagnosticsWriter<BufWriter<File>>, path: &Path, d: &Diagnostics) -> Result<(), RunError> {
    csv.write(d).map_err(|e| match e {
        vortexmap::Error::Io(source) => RunError::Io { path: path.to_path_buf(), source },
        e => RunError::Core(e),
    })
}

/// Runs the configured scene to completion. Progress goes to `log`.
pub fn run(cfg: &RunConfig, log: &mut dyn Write) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let spec = cfg.scene_spec()?;
    for w in spec.warnings() {
        let _ = writeln!(log, "warning: {w}");
    }
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut st = build_scene(&spec).map_err(|e| classify(e, 0))?;
    let csv_path = dir.join("diagnostics.csv");
    let mut csv = DiagnosticsWriter::new(create(&csv_path)?).map_err(|e| classify(e, 0))?;
    let mut solver_csv = if cfg.solver_csv {
        let path = dir.join("solver.csv");
        let mut w = create(&path)?;
        writeln!(w, "step,solve,unknowns,iterations,residual,elapsed_s").map_err(io_err(&path))?;
        Some((path, w))
    } else {
        None
    };
    write_row(&mut csv, &csv_path, &st.diagnostics())?;

    let out = Outputs { cfg, scale: st.vorticity().max_abs() };
    out.frame(&st, 0)?;
    let _ = writeln!(log, "{} {:?} frame 0 written", spec.name, spec.dims);

    for f in 1..=spec.frames {
        let t_end = f as f64 * spec.frame_dt;
        let mut steps = 0;
        while steps < cfg.steps_per_frame {
            let step = st.step_count() + 1;
            let rows = st.advance_to(t_end, 1).map_err(|e| classify(e, step))?;
            let Some(d) = rows.first() else { break };
            steps += 1;
            write_row(&mut csv, &csv_path, d)?;
            if let Some((path, w)) = solver_csv.as_mut() {
                for (k, s) in st.last_solves().iter().enumerate() {
                    writeln!(w, "{},{k},{},{},{:e},{:e}", d.step, s.unknowns, s.iterations, s.residual, s.elapsed.as_secs_f64())
                        .map_err(io_err(path))?;
                }
            }
        }
        if steps == cfg.steps_per_frame && st.time() < t_end - 1e-12 * t_end.max(1.0) {
            let _ = writeln!(log, "warning: frame {f} hit the cap of {steps} steps at t = {:.6}", st.time());
        }
        if f % cfg.output_every == 0 || f == spec.frames {
            out.frame(&st, f)?;
        }
        let d = st.diagnostics();
        let _ = writeln!(log, "frame {f}/{} step {} t {:.4} max|w| {:.4e}", spec.frames, d.step, d.time, d.max_w);
    }
    if let Some((path, mut w)) = solver_csv {
        w.flush().map_err(io_err(&path))?;
    }
    Ok(RunSummary {
        scene: spec.name.clone(),
        frames: spec.frames,
        steps: st.step_count(),
        time: st.time(),
        wall: start.elapsed(),
        peak_memory: peak_memory(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_memory_is_reported_on_linux() {
        if cfg!(target_os = "linux") {
            assert!(peak_memory().unwrap() > 0);
        }
    }

    #[test]
    fn summary_line_mentions_wall_time_and_memory() {
        let s = RunSummary {
            scene: "taylor2d".into(),
            frames: 2,
            steps: 7,
            time: 0.5,
            wall: Duration::from_millis(1500),
            peak_memory: Some(3 * 1024 * 1024),
        };
        let line = s.line();
        assert!(line.contains("wall 1.50 s"));
        assert!(line.contains("3.0 MiB"));
    }

    #[test]
    fn solver_errors_keep_their_step() {
        let e = classify(vortexmap::Error::NotConverged { iterations: 1, residual: 0.5 }, 4);
        assert!(e.to_string().starts_with("nonconverged at step 4"));
        assert!(matches!(classify(vortexmap::Error::Contract("x".into()), 4), RunError::Core(_)));
    }
}

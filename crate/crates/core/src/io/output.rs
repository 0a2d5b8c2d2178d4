use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hierarchy::Trajectory;

/// 8-bit intensity image, time along x and position along y with the top row
/// at `z_max`. Normalised to the largest value in the image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    /// Row-major grey levels.
    pub pixels: Vec<u8>,
}

impl Heatmap {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let width = traj.intensity_maps.len();
        let height = traj.positions.len();
        let top = traj
            .intensity_maps
            .iter()
            .flatten()
            .cloned()
            .fold(0.0, f64::max);
        let mut pixels = vec![0u8; width * height];
        if top > 0.0 {
            for (x, map) in traj.intensity_maps.iter().enumerate() {
                for (j, &v) in map.iter().enumerate() {
                    let y = height - 1 - j;
                    pixels[y * width + x] = (255.0 * v / top).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Binary greyscale PGM.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Binary PPM with a linear blue-to-red ramp.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.pixels.len());
        for &v in &self.pixels {
            out.extend_from_slice(&[v, 0, 255 - v]);
        }
        out
    }
}

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.8e}").unwrap();
}

pub fn strength_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,I\n");
    for (&t, &i) in traj.times.iter().zip(&traj.strength_series) {
        num(&mut out, t);
        out.push(',');
        num(&mut out, i);
        out.push('\n');
    }
    out
}

/// Peak columns are empty where no pulse is present.
pub fn peaks_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,z_forward,z_backward\n");
    for ((&t, f), b) in traj
        .times
        .iter()
        .zip(&traj.forward_peaks)
        .zip(&traj.backward_peaks)
    {
        num(&mut out, t);
        for peak in [f, b] {
            out.push(',');
            if let Some(p) = peak {
                num(&mut out, p.z);
            }
        }
        out.push('\n');
    }
    out
}

pub fn intensity_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,z,value\n");
    for (&t, map) in traj.times.iter().zip(&traj.intensity_maps) {
        for (&z, &v) in traj.positions.iter().zip(map) {
            num(&mut out, t);
            out.push(',');
            num(&mut out, z);
            out.push(',');
            num(&mut out, v);
            out.push('\n');
        }
    }
    out
}

/// Writes every file or none: on failure, files already written in this
/// call are removed again.
pub fn write_files(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(Error::io(path, e));
        }
        written.push(path);
    }
    Ok(written)
}

/// Names and contents of `strength.csv`, `peaks.csv`, `intensity.csv`,
/// `intensity.pgm` and `intensity.ppm`.
pub fn trajectory_files(traj: &Trajectory) -> Vec<(&'static str, Vec<u8>)> {
    let heatmap = Heatmap::from_trajectory(traj);
    vec![
        ("strength.csv", strength_csv(traj).into_bytes()),
        ("peaks.csv", peaks_csv(traj).into_bytes()),
        ("intensity.csv", intensity_csv(traj).into_bytes()),
        ("intensity.pgm", heatmap.to_pgm()),
        ("intensity.ppm", heatmap.to_ppm()),
    ]
}

pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    write_files(dir, &trajectory_files(traj))
}

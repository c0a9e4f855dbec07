//! ONSF1 snapshot files and trajectory directories.
//!
//! A snapshot file is the ASCII magic `ONSF1\n`, one JSON header line
//! `{"n":..,"time":..,"nu":..,"layout":"full-c128-le"}` terminated by `\n`,
//! then `n³` lattice points in row-major order over `k ∈ [−n/2, n/2)³`
//! (first component slowest, each axis ascending from `−n/2`), each holding
//! three complex values as little-endian `f64` pairs `(re, im)`.
//!
//! A trajectory is a directory with `manifest.json` listing the snapshot
//! files, their times, the grid size and the viscosity.

use std::borrow::Cow;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{validate_times, Grid, SnapshotSource, Trajectory, VelocityField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"ONSF1\n";
pub const LAYOUT: &str = "full-c128-le";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    pub time: f64,
    pub nu: Option<f64>,
    pub layout: String,
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn atomic_write(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::pre(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let result = (|| {
        let file = fs::File::create(&tmp)?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn lattice_order(grid: Grid) -> impl Iterator<Item = usize> {
    let half = grid.n() as i64 / 2;
    (-half..half).flat_map(move |k0| {
        (-half..half).flat_map(move |k1| {
            (-half..half).map(move |k2| grid.index_of([k0, k1, k2]).expect("lattice point on grid"))
        })
    })
}

pub fn encode_snapshot(w: &mut dyn Write, field: &VelocityField, time: f64, nu: Option<f64>) -> std::io::Result<()> {
    let grid = field.grid();
    let header = SnapshotHeader { n: grid.n(), time, nu, layout: LAYOUT.to_string() };
    w.write_all(MAGIC)?;
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    let coeffs = field.coefficients();
    let mut buf = Vec::with_capacity(48 * grid.n() * grid.n());
    for idx in lattice_order(grid) {
        for c in coeffs.iter() {
            buf.extend_from_slice(&c[idx].re.to_le_bytes());
            buf.extend_from_slice(&c[idx].im.to_le_bytes());
        }
        if buf.len() >= 1 << 20 {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)
}

pub fn write_snapshot(path: &Path, field: &VelocityField, time: f64, nu: Option<f64>) -> Result<()> {
    atomic_write(path, |w| encode_snapshot(w, field, time, nu))
}

pub fn decode_snapshot(path: &Path, r: &mut dyn Read) -> Result<(SnapshotHeader, VelocityField)> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(Error::format(path, "missing ONSF1 magic"));
    }
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte).map_err(|e| Error::io(path, e))?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 4096 {
            return Err(Error::format(path, "header line too long"));
        }
    }
    let header: SnapshotHeader =
        serde_json::from_slice(&line).map_err(|e| Error::format(path, format!("bad header: {e}")))?;
    if header.layout != LAYOUT {
        return Err(Error::format(path, format!("unsupported layout {:?}", header.layout)));
    }
    let grid = Grid::new(header.n).map_err(|e| Error::format(path, e.to_string()))?;
    let mut raw = vec![0u8; grid.len() * 48];
    r.read_exact(&mut raw).map_err(|e| Error::format(path, format!("truncated coefficient block: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(path, "trailing bytes after coefficient block"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs = [vec![zero; grid.len()], vec![zero; grid.len()], vec![zero; grid.len()]];
    let f = |i: usize| f64::from_le_bytes(raw[i * 8..i * 8 + 8].try_into().expect("8 bytes"));
    for (slot, idx) in lattice_order(grid).enumerate() {
        for (c, comp) in coeffs.iter_mut().enumerate() {
            let base = slot * 6 + c * 2;
            comp[idx] = Complex64::new(f(base), f(base + 1));
        }
    }
    let field = VelocityField::from_coefficients(grid, coeffs).map_err(|e| Error::format(path, e.to_string()))?;
    let time = header.time;
    Ok((header, field.with_time(time)))
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, VelocityField)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(path, &mut BufReader::new(file))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub format: String,
    pub n: usize,
    pub nu: f64,
    pub snapshots: Vec<ManifestEntry>,
}

fn snapshot_name(i: usize) -> String {
    format!("snap_{i:06}.onsf")
}

fn write_manifest(dir: &Path, manifest: &TrajectoryManifest) -> Result<()> {
    atomic_write(&dir.join(MANIFEST), |w| {
        serde_json::to_writer_pretty(&mut *w, manifest)?;
        w.write_all(b"\n")
    })
}

/// Streams snapshots into a trajectory directory; the manifest is written
/// by [`TrajectoryWriter::finish`].
#[derive(Debug)]
pub struct TrajectoryWriter {
    dir: PathBuf,
    manifest: TrajectoryManifest,
}

impl TrajectoryWriter {
    pub fn create(dir: &Path, grid: Grid, nu: f64) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(TrajectoryWriter {
            dir: dir.to_path_buf(),
            manifest: TrajectoryManifest { format: "ONSF1-trajectory".into(), n: grid.n(), nu, snapshots: Vec::new() },
        })
    }

    pub fn push(&mut self, time: f64, field: &VelocityField) -> Result<()> {
        if field.grid().n() != self.manifest.n {
            return Err(Error::GridMismatch { expected: self.manifest.n, found: field.grid().n() });
        }
        let name = snapshot_name(self.manifest.snapshots.len());
        write_snapshot(&self.dir.join(&name), field, time, Some(self.manifest.nu))?;
        self.manifest.snapshots.push(ManifestEntry { file: name, time });
        Ok(())
    }

    pub fn finish(self) -> Result<TrajectoryManifest> {
        write_manifest(&self.dir, &self.manifest)?;
        Ok(self.manifest)
    }
}

pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = TrajectoryWriter::create(dir, traj.grid(), traj.nu())?;
    for s in traj.snapshots() {
        w.push(s.time, &s.field)?;
    }
    w.finish().map(|_| ())
}

/// A trajectory directory opened for lazy snapshot loading.
#[derive(Clone, Debug)]
pub struct TrajectoryDir {
    dir: PathBuf,
    grid: Grid,
    manifest: TrajectoryManifest,
}

impl TrajectoryDir {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: TrajectoryManifest =
            serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        let grid = Grid::new(manifest.n).map_err(|e| Error::format(&path, e.to_string()))?;
        if !(manifest.nu > 0.0) {
            return Err(Error::format(&path, "viscosity must be positive"));
        }
        validate_times(manifest.snapshots.iter().map(|s| s.time)).map_err(|e| Error::format(&path, e.to_string()))?;
        Ok(TrajectoryDir { dir: dir.to_path_buf(), grid, manifest })
    }

    pub fn manifest(&self) -> &TrajectoryManifest {
        &self.manifest
    }

    /// Loads every snapshot into memory.
    pub fn load_all(&self) -> Result<Trajectory> {
        let snapshots = (0..self.len())
            .map(|i| {
                let field = self.load(i)?.into_owned();
                Ok(super::Snapshot { time: self.manifest.snapshots[i].time, field })
            })
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.manifest.nu, snapshots)
    }
}

impl SnapshotSource for TrajectoryDir {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn nu(&self) -> f64 {
        self.manifest.nu
    }

    fn times(&self) -> Vec<f64> {
        self.manifest.snapshots.iter().map(|s| s.time).collect()
    }

    fn load(&self, i: usize) -> Result<Cow<'_, VelocityField>> {
        let entry = self
            .manifest
            .snapshots
            .get(i)
            .ok_or_else(|| Error::pre(format!("snapshot {i} out of range")))?;
        let path = self.dir.join(&entry.file);
        let (header, field) = read_snapshot(&path)?;
        if header.n != self.grid.n() {
            return Err(Error::GridMismatch { expected: self.grid.n(), found: header.n });
        }
        Ok(Cow::Owned(field))
    }
}

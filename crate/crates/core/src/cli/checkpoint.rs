//! Binary trajectory checkpoints.
//!
//! Layout, all little-endian: 8-byte magic `LFMHD1\0\0`, `u32` version, `u32` n1, n2, nz,
//! `u32` field count, then per field a `u32` name length, the ASCII name and
//! `n1 * n2 * nz` `f64` values in lattice order. Snapshot fields are named
//! `sNNNNN/<component>`; `rho0` is stored once; `meta/scalars` holds
//! `[meta version, dt, kappa, dealias_fraction, nsnap, t_0, t_1, ...]` padded with zeros.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::FlowMap;
use crate::grid::{Dims, GridSpec, ScalarField, VectorField};
use crate::linear_step::Trajectory;
use crate::state::FlowState;

pub const MAGIC: &[u8; 8] = b"LFMHD1\0\0";
pub const VERSION: u32 = 1;
const META_VERSION: f64 = 1.0;
const META_FIELD: &str = "meta/scalars";
const META_HEADER: usize = 5;
const COMPONENTS: [&str; 10] = ["eta1", "eta2", "eta3", "v1", "v2", "v3", "b1", "b2", "b3", "q"];

fn refuse<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Checkpoint(msg.into()))
}

fn snapshot_fields(s: &FlowState) -> [&ScalarField; 10] {
    let d = s.eta.displacement();
    [
        &d[0], &d[1], &d[2], &s.v[0], &s.v[1], &s.v[2], &s.b[0], &s.b[1], &s.b[2], &s.q,
    ]
}

fn put_field(out: &mut Vec<u8>, name: &str, data: &[f64]) {
    out.extend_from_slice(&(name.len() as u32).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    for x in data {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Serializes every snapshot of `traj`.
pub fn encode(traj: &Trajectory) -> Result<Vec<u8>> {
    if traj.is_empty() {
        return refuse("cannot write an empty trajectory");
    }
    let dims = traj.grid.dims();
    let len = dims.len();
    let nsnap = traj.len();
    if META_HEADER + nsnap > len {
        return refuse(format!("{nsnap} snapshots do not fit the {len}-value metadata field"));
    }
    let nfields = 10 * nsnap + 2;
    let mut out = Vec::with_capacity(32 + nfields * (len * 8 + 20));
    out.extend_from_slice(MAGIC);
    for v in [VERSION, dims.n1 as u32, dims.n2 as u32, dims.nz as u32, nfields as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut meta = vec![0.0; len];
    meta[..META_HEADER].copy_from_slice(&[META_VERSION, traj.dt, traj.kappa, traj.grid.dealias_fraction, nsnap as f64]);
    for (j, s) in traj.snapshots.iter().enumerate() {
        meta[META_HEADER + j] = s.t;
    }
    put_field(&mut out, META_FIELD, &meta);
    put_field(&mut out, "rho0", traj.snapshots[0].rho0.as_slice());
    for (j, s) in traj.snapshots.iter().enumerate() {
        for (c, f) in COMPONENTS.iter().zip(snapshot_fields(s)) {
            put_field(&mut out, &format!("s{j:05}/{c}"), f.as_slice());
        }
    }
    Ok(out)
}

pub fn write_checkpoint(path: &Path, traj: &Trajectory) -> Result<()> {
    let bytes = encode(traj)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return refuse(format!(
                "dimension mismatch: file ends inside {what} (need {n} bytes at offset {}, {} left)",
                self.pos,
                self.bytes.len() - self.pos
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Parses a checkpoint. If `expect` is given the stored dims must match it.
pub fn decode(bytes: &[u8], expect: Option<Dims>) -> Result<Trajectory> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(8, "magic")?;
    if magic != MAGIC {
        return refuse(format!("bad magic {magic:?}, expected {MAGIC:?}"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        if version.swap_bytes() == VERSION {
            return refuse(format!(
                "version field reads {version:#010x}; this is version {VERSION} written big-endian, \
                 but checkpoints are little-endian"
            ));
        }
        return refuse(format!("unsupported version {version}, expected {VERSION}"));
    }
    let (n1, n2, nz) = (r.u32("n1")? as usize, r.u32("n2")? as usize, r.u32("nz")? as usize);
    if nz < 2 {
        return refuse(format!("dimension mismatch: nz = {nz} < 2"));
    }
    let dims = Dims { n1, n2, nz };
    if let Some(e) = expect {
        if e != dims {
            return refuse(format!(
                "dimension mismatch: file has {n1}x{n2}x{nz}, expected {}x{}x{}",
                e.n1, e.n2, e.nz
            ));
        }
    }
    let len = dims.len();
    let nfields = r.u32("field count")? as usize;
    let mut fields: Vec<(String, Vec<f64>)> = Vec::with_capacity(nfields);
    for f in 0..nfields {
        let nlen = r.u32("field name length")? as usize;
        let name = std::str::from_utf8(r.take(nlen, "field name")?)
            .map_err(|_| Error::Checkpoint(format!("field {f}: name is not ASCII")))?
            .to_string();
        let raw = r.take(len * 8, &format!("field '{name}'"))?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        fields.push((name, data));
    }
    if r.pos != bytes.len() {
        return refuse(format!("dimension mismatch: {} trailing bytes after {nfields} fields", bytes.len() - r.pos));
    }
    let mut lookup = |name: &str| -> Result<ScalarField> {
        let i = fields
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing field '{name}'")))?;
        ScalarField::from_vec(dims, std::mem::take(&mut fields[i].1))
    };
    let meta = lookup(META_FIELD)?.into_vec();
    if meta[0] != META_VERSION {
        return refuse(format!("unsupported metadata version {}", meta[0]));
    }
    let (dt, kappa, dealias) = (meta[1], meta[2], meta[3]);
    let nsnap = meta[4] as usize;
    if meta[4] != nsnap as f64 || nsnap == 0 || META_HEADER + nsnap > len {
        return refuse(format!("invalid snapshot count {}", meta[4]));
    }
    let grid = GridSpec::with_dealias(n1, n2, nz - 1, dealias).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let rho0 = lookup("rho0")?;
    let mut snapshots = Vec::with_capacity(nsnap);
    for j in 0..nsnap {
        let mut c = Vec::with_capacity(10);
        for name in COMPONENTS {
            c.push(lookup(&format!("s{j:05}/{name}"))?);
        }
        let mut it = c.into_iter();
        let mut vec3 = || VectorField::new(it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        let eta = FlowMap::from_displacement(vec3());
        let v = vec3();
        let b = vec3();
        let q = it.next().unwrap();
        snapshots.push(FlowState { t: meta[META_HEADER + j], eta, v, b, q, rho0: rho0.clone() });
    }
    Ok(Trajectory { grid, dt, kappa, snapshots })
}

pub fn read_checkpoint(path: &Path, expect: Option<Dims>) -> Result<Trajectory> {
    let bytes = std::fs::read(path)?;
    decode(&bytes, expect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn sample() -> Trajectory {
        let spec = GridSpec::new(8, 8, 8).unwrap();
        let grid = Grid::new(spec).unwrap();
        let rho0 = grid.scalar_from_fn(|y| 1.0 + 0.1 * y[2]);
        let snapshots = (0..3)
            .map(|j| {
                let mut s = FlowState::trivial(rho0.clone());
                s.t = 0.01 * j as f64;
                s.v = grid.vector_from_fn(|y| [y[0] * j as f64, y[1], -y[2]]);
                s.q = grid.scalar_from_fn(|y| (y[0] + y[2]).sin() * j as f64);
                s
            })
            .collect();
        Trajectory { grid: spec, dt: 0.01, kappa: 0.1, snapshots }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = sample();
        let back = decode(&encode(&t).unwrap(), Some(t.grid.dims())).unwrap();
        assert_eq!(back.grid, t.grid);
        assert_eq!(back.snapshots, t.snapshots);
        assert_eq!((back.dt, back.kappa), (t.dt, t.kappa));
    }

    #[test]
    fn refusals() {
        let t = sample();
        let bytes = encode(&t).unwrap();
        let msg = |r: Result<Trajectory>| r.unwrap_err().to_string();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(msg(decode(&bad, None)).contains("magic"));

        let mut bad = bytes.clone();
        bad[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(msg(decode(&bad, None)).contains("version"));

        let mut bad = bytes.clone();
        bad[8..12].copy_from_slice(&1u32.to_be_bytes());
        assert!(msg(decode(&bad, None)).contains("endian"));

        assert!(msg(decode(&bytes[..bytes.len() - 3], None)).contains("dimension mismatch"));
        let other = Dims { n1: 8, n2: 8, nz: 5 };
        assert!(msg(decode(&bytes, Some(other))).contains("dimension mismatch"));
    }
}

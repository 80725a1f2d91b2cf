//! File formats: binary snapshots, diagnostics CSV and PGM heatmaps.
//!
//! Snapshot layout (little endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `LOGCH1\0\0` |
//! | 4     | `n` as u32 |
//! | 8     | `t` as f64 |
//! | 8·n²  | values, row-major (`y` outer, `x` inner) |

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, RealField};
use crate::timestepper::RunOutput;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"LOGCH1\0\0";
const HEADER_LEN: usize = 8 + 4 + 8;

pub fn encode_snapshot(f: &RealField, t: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * f.values().len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(f.grid().n() as u32).to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_snapshot`]; `path` only labels errors.
pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<(RealField, f64)> {
    let fail = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(fail(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(fail("bad magic (not a LOGCH1 snapshot)".into()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let grid = GridSpec::new(n).map_err(|_| fail(format!("invalid grid size {n}")))?;
    let t = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    let expected = 8 * grid.len();
    if body.len() != expected {
        return Err(fail(format!("expected {expected} data bytes for n = {n}, found {}", body.len())));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((RealField::from_vec(grid, values)?, t))
}

pub fn write_snapshot(f: &RealField, t: f64, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_snapshot(f, t))?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(RealField, f64)> {
    let path = path.as_ref();
    decode_snapshot(&fs::read(path)?, path)
}

/// Diagnostics as CSV: header row, then one row per record with 17
/// significant digits; an absent `dissipation_check` is an empty field.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = DiagnosticsRecord::COLUMNS.join(",");
    s.push('\n');
    for r in records {
        for (i, v) in r.values().iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            if let Some(v) = v {
                write!(s, "{v:.16e}").unwrap();
            }
        }
        s.push('\n');
    }
    s
}

/// Binary graymap of `u = tanh g`, mapping `[-1, 1]` linearly to `[0, 255]`.
pub fn encode_pgm(g: &RealField) -> Vec<u8> {
    let n = g.grid().n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(g.values().iter().map(|v| ((v.tanh() + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:08}.bin")
}

/// Writes `config.toml`, `diagnostics.csv` and every snapshot (plus `.pgm`
/// images if asked) into `dir`, creating it if needed. Returns the paths written.
pub fn write_run(dir: &Path, config: &RunConfig, out: &RunOutput, pgm: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path)?;
        f.write_all(bytes)?;
        written.push(path);
        Ok(())
    };
    put("config.toml".into(), config.to_toml().as_bytes())?;
    put("diagnostics.csv".into(), diagnostics_csv(&out.records).as_bytes())?;
    for s in &out.snapshots {
        put(snapshot_name(s.step), &encode_snapshot(&s.g, s.t))?;
        if pgm {
            put(format!("snap_{:08}.pgm", s.step), &encode_pgm(&s.g))?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> RealField {
        let grid = GridSpec::new(8).unwrap();
        RealField::from_fn(grid, |x, y| (x * 7.0).sin() * 1e-3 + y * 1e300 + 1.0 / 3.0)
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bin");
        let mut f = field();
        f.values_mut()[3] = -0.0;
        f.values_mut()[4] = f64::MIN_POSITIVE / 3.0;
        write_snapshot(&f, 0.125 + 1e-17, &path).unwrap();
        let (g, t) = read_snapshot(&path).unwrap();
        assert_eq!(t.to_bits(), (0.125 + 1e-17f64).to_bits());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(fs::metadata(&path).unwrap().len(), 20 + 8 * 64);
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let p = Path::new("x");
        let good = encode_snapshot(&field(), 1.0);
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_snapshot(&bad, p), Err(Error::Format { .. })));
        assert!(matches!(decode_snapshot(&good[..good.len() - 1], p), Err(Error::Format { .. })));
        assert!(matches!(decode_snapshot(&good[..10], p), Err(Error::Format { .. })));
        let mut wrong_n = good.clone();
        wrong_n[8..12].copy_from_slice(&16u32.to_le_bytes());
        assert!(matches!(decode_snapshot(&wrong_n, p), Err(Error::Format { .. })));
        let mut extra = good;
        extra.push(0);
        assert!(matches!(decode_snapshot(&extra, p), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_layout() {
        let r = DiagnosticsRecord {
            t: 0.1,
            mass_u: 1.0 / 3.0,
            energy: -1e-300,
            max_abs_u: 0.5,
            max_abs_g: 0.25,
            grad_k_l2: 0.0,
            g_mean: 2.0,
            k_mean: -3.5,
            g_fluct_l2: 1e10,
            dissipation_check: None,
        };
        let mut r2 = r.clone();
        r2.dissipation_check = Some(-2.0e-12);
        let csv = diagnostics_csv(&[r, r2]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "t,mass_u,energy,max_abs_u,max_abs_g,grad_K_L2,g_mean,K_mean,g_fluct_L2,dissipation_check"
        );
        let f: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(f.len(), 10);
        assert_eq!(f[9], "");
        assert_eq!(f[1], "3.3333333333333331e-1");
        assert_eq!(f[1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(lines[2].split(',').nth(9).unwrap().parse::<f64>().unwrap(), -2.0e-12);
    }

    #[test]
    fn pgm_maps_u_range() {
        let grid = GridSpec::new(8).unwrap();
        let mut g = RealField::zeros(grid);
        g.values_mut()[0] = 50.0;
        g.values_mut()[1] = -50.0;
        let img = encode_pgm(&g);
        let header = b"P5\n8 8\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 64);
        assert_eq!((px[0], px[1], px[2]), (255, 0, 128));
    }
}

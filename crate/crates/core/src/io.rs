//! Output formats: CSV tables, binary grid snapshots and JSON manifests.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const ENTROPY_HEADER: [&str; 5] = ["t_ps", "entropy_nats", "norm", "mean_x_a_nm", "mean_x_b_nm"];
pub const OBSERVABLES_HEADER: [&str; 5] = ["t_ps", "norm", "mean_x_nm", "mean_k_invnm", "energy_meV"];
pub const STATIONARY_HEADER: [&str; 2] = ["t_on_ps", "entropy_stationary_nats"];

/// `x` with 12 significant digits, in the shortest of fixed or exponent
/// notation (like C's `%.12g`).
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes a numeric CSV table; every row must match the header width.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let row = row.as_ref();
        if row.len() != header.len() {
            return Err(Error::Internal(format!(
                "{}: row of {} values for {} columns",
                path.display(),
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|&x| format_sig12(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut w = create(path)?;
    w.write_all(out.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// A parsed numeric CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Internal(format!("{}: bad number {c:?}", path.display())))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Table { header, rows })
}

/// A wavefunction snapshot: `dims` is `[n]` or `[n, n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: Vec<usize>,
    pub dx: f64,
    pub t: f64,
    pub amplitudes: Vec<Complex64>,
}

/// Header line `QS1 <n> <dx_nm> <t_ps>` or `QS2 <n> <n> <dx_nm> <t_ps>`, then
/// little-endian `f64` (re, im) pairs in row-major order.
pub fn write_snapshot(path: &Path, dims: &[usize], dx: f64, t: f64, amplitudes: &[Complex64]) -> Result<()> {
    let count: usize = dims.iter().product();
    if !(dims.len() == 1 || dims.len() == 2) || count != amplitudes.len() {
        return Err(Error::Internal(format!(
            "snapshot dims {dims:?} do not match {} amplitudes",
            amplitudes.len()
        )));
    }
    let mut w = create(path)?;
    let shape: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    let header = format!("QS{} {} {} {}\n", dims.len(), shape.join(" "), format_sig12(dx), format_sig12(t));
    let mut bytes = Vec::with_capacity(header.len() + 16 * amplitudes.len());
    bytes.extend_from_slice(header.as_bytes());
    for a in amplitudes {
        bytes.extend_from_slice(&a.re.to_le_bytes());
        bytes.extend_from_slice(&a.im.to_le_bytes());
    }
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bad = |m: &str| Error::Internal(format!("{}: {m}", path.display()));
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = String::new();
    r.read_line(&mut header).map_err(|e| Error::io(path, e))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let rank = match fields.first() {
        Some(&"QS1") => 1,
        Some(&"QS2") => 2,
        _ => return Err(bad("not a QS1/QS2 snapshot")),
    };
    if fields.len() != rank + 3 {
        return Err(bad("malformed header"));
    }
    let dims = fields[1..=rank]
        .iter()
        .map(|f| f.parse::<usize>().map_err(|_| bad("bad dimension")))
        .collect::<Result<Vec<_>>>()?;
    let dx = fields[rank + 1].parse().map_err(|_| bad("bad dx"))?;
    let t = fields[rank + 2].parse().map_err(|_| bad("bad t"))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    let count: usize = dims.iter().product();
    if body.len() != 16 * count {
        return Err(bad("payload length does not match header"));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    let amplitudes = body.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok(Snapshot { dims, dx, t, amplitudes })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// File-name fragment for a time, e.g. `t2.8000`.
pub fn time_tag(t: f64) -> String {
    format!("t{t:.4}")
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.69314718056), "0.69314718056");
        assert_eq!(format_sig12(std::f64::consts::LN_2), "0.69314718056");
        assert_eq!(format_sig12(-90.123456789012345), "-90.123456789");
        assert_eq!(format_sig12(1.0 / 3.0 * 1e-7), "3.33333333333e-8");
        assert_eq!(format_sig12(2.5e-4), "0.00025");
        assert_eq!(format_sig12(6.02e23), "6.02e23");
    }

    proptest! {
        #[test]
        fn sig12_round_trips_to_twelve_digits(x in -1e6f64..1e6) {
            let back: f64 = format_sig12(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_csv(&p, &OBSERVABLES_HEADER, [[0.0, 1.0, -90.0, 0.29, 10.3]]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, "t_ps,norm,mean_x_nm,mean_k_invnm,energy_meV\n0,1,-90,0.29,10.3\n");
        let t = read_csv(&p).unwrap();
        assert_eq!(t.column("energy_meV"), Some(vec![10.3]));
        assert!(write_csv(&p, &STATIONARY_HEADER, [[1.0]]).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.qs2");
        let amps: Vec<_> = (0..6).map(|i| Complex64::new(i as f64, -0.5 * i as f64)).collect();
        write_snapshot(&p, &[2, 3], 1.25, 0.6, &amps).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"QS2 2 3 1.25 0.6\n"));
        assert_eq!(bytes.len(), "QS2 2 3 1.25 0.6\n".len() + 96);
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.dims, vec![2, 3]);
        assert_eq!(s.amplitudes, amps);
        assert!(write_snapshot(&p, &[4], 1.0, 0.0, &amps).is_err());
    }
}

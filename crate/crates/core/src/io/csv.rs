//! Contact-grid and IMU-trace CSV files.

use std::path::Path;

use serde::Deserialize;

use super::{fmt_sig9, read_bytes};
use crate::error::{Error, Result};
use crate::madgwick::ImuReading;
use crate::probe::{ContactGrid, ContactSample};
use crate::Vec3;

pub const CONTACT_HEADER: [&str; 8] = ["row", "col", "x", "y", "z", "nx", "ny", "nz"];
pub const IMU_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];

#[derive(Deserialize)]
struct ContactRow {
    row: usize,
    col: usize,
    x: f64,
    y: f64,
    z: f64,
    nx: f64,
    ny: f64,
    nz: f64,
}

#[derive(Deserialize)]
struct ImuRow {
    t: f64,
    ax: f64,
    ay: f64,
    az: f64,
    gx: f64,
    gy: f64,
    gz: f64,
}

fn write_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = ::csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

fn read_rows<T: for<'de> Deserialize<'de>>(text: &[u8], header: &[&str], path: &str) -> Result<Vec<(u64, T)>> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut r = ::csv::ReaderBuilder::new().trim(::csv::Trim::All).from_reader(text);
    let got = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(parse_err(1, format!("expected header {:?}, found {:?}", header.join(","), got.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = rec.deserialize(Some(&got)).map_err(|e| parse_err(line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

pub fn contacts_to_csv(grid: &ContactGrid) -> String {
    write_rows(
        &CONTACT_HEADER,
        grid.samples.iter().map(|s| {
            let (r, c) = s.grid_index;
            let mut v = vec![r.to_string(), c.to_string()];
            v.extend([s.position, s.normal].iter().flat_map(|p| [p.x, p.y, p.z]).map(fmt_sig9));
            v
        }),
    )
}

pub fn parse_contacts(text: &[u8], path: &str) -> Result<ContactGrid> {
    let rows: Vec<(u64, ContactRow)> = read_rows(text, &CONTACT_HEADER, path)?;
    let mut samples = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let position = Vec3::new(r.x, r.y, r.z);
        let normal = Vec3::new(r.nx, r.ny, r.nz);
        if !position.iter().chain(normal.iter()).all(|c| c.is_finite()) {
            return Err(Error::Parse {
                path: path.to_string(),
                line,
                msg: "non-finite value".into(),
            });
        }
        let len = normal.norm();
        if (len - 1.0).abs() > 1e-6 {
            return Err(Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("normal has length {len}, expected 1"),
            });
        }
        samples.push(ContactSample {
            position,
            normal,
            grid_index: (r.row, r.col),
        });
    }
    ContactGrid::from_unordered(0.0, samples)
}

pub fn read_contacts(path: &Path) -> Result<ContactGrid> {
    parse_contacts(&read_bytes(path)?, &path.display().to_string())
}

/// Timestamps are cumulative `dt` starting from the first reading's `dt`.
pub fn imu_trace_to_csv(trace: &[ImuReading]) -> String {
    let mut t = 0.0;
    write_rows(
        &IMU_HEADER,
        trace.iter().map(|r| {
            t += r.dt;
            let mut v = vec![fmt_sig9(t)];
            v.extend([r.accel, r.gyro].iter().flat_map(|p| [p.x, p.y, p.z]).map(fmt_sig9));
            v
        }),
    )
}

pub fn parse_imu_trace(text: &[u8], path: &str) -> Result<Vec<ImuReading>> {
    let rows: Vec<(u64, ImuRow)> = read_rows(text, &IMU_HEADER, path)?;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        let reading = ImuReading {
            accel: Vec3::new(r.ax, r.ay, r.az),
            gyro: Vec3::new(r.gx, r.gy, r.gz),
            dt: r.t - prev,
        };
        reading.validate().map_err(|e| Error::Parse {
            path: path.to_string(),
            line,
            msg: e.to_string(),
        })?;
        prev = r.t;
        out.push(reading);
    }
    Ok(out)
}

pub fn read_imu_trace(path: &Path) -> Result<Vec<ImuReading>> {
    parse_imu_trace(&read_bytes(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ContactGrid {
        let mut s = Vec::new();
        for r in 0..2 {
            for c in 0..3 {
                s.push(ContactSample {
                    position: Vec3::new(20.0 * c as f64, 20.0 * r as f64, 0.25 * (r + c) as f64),
                    normal: Vec3::new(0.0, 0.6, 0.8),
                    grid_index: (r, c),
                });
            }
        }
        ContactGrid::new(2, 3, 20.0, s).unwrap()
    }

    #[test]
    fn contacts_round_trip() {
        let g = grid();
        let text = contacts_to_csv(&g);
        assert!(text.starts_with("row,col,x,y,z,nx,ny,nz\n"));
        let back = parse_contacts(text.as_bytes(), "mem").unwrap();
        assert_eq!(back.samples, g.samples);
        assert_eq!(contacts_to_csv(&back), text);
    }

    #[test]
    fn contact_errors_report_lines() {
        let text = "row,col,x,y,z,nx,ny,nz\n0,0,0,0,0,0,0,1\n0,1,0,abc,0,0,0,1\n";
        match parse_contacts(text.as_bytes(), "c.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "row,col,x,y,z,nx,ny,nz\n0,0,0,0,0,0,0,1\n0,1,0,0,0,0,0,2\n";
        match parse_contacts(text.as_bytes(), "c.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "row,col,x,y,z\n";
        assert!(matches!(parse_contacts(text.as_bytes(), "c.csv"), Err(Error::Parse { line: 1, .. })));
        let text = "row,col,x,y,z,nx,ny,nz\n0,0,0,0,0,0,0,1\n1,1,0,0,0,0,0,1\n";
        assert!(matches!(parse_contacts(text.as_bytes(), "c.csv"), Err(Error::IncompleteGrid(_))));
    }

    #[test]
    fn imu_round_trip() {
        let trace: Vec<ImuReading> = (0..5)
            .map(|k| ImuReading {
                accel: Vec3::new(0.0, 0.0, 1.0),
                gyro: Vec3::new(0.01 * k as f64, 0.0, -0.02),
                dt: 0.01,
            })
            .collect();
        let text = imu_trace_to_csv(&trace);
        assert!(text.starts_with("t,ax,ay,az,gx,gy,gz\n"));
        let back = parse_imu_trace(text.as_bytes(), "mem").unwrap();
        for (a, b) in back.iter().zip(&trace) {
            assert!((a.dt - b.dt).abs() < 1e-9);
            assert_eq!(a.gyro, b.gyro);
        }
    }
}

//! Run-length encoded occupancy snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! header  b"SEPS" | version: u32 | N: u32 | |V₀|: u32
//! record  replica: u32 | t: f64 | sites: u32 | first: u8 | runs: u32 | run lengths: u32 × runs
//! ```
//!
//! Runs alternate starting from the occupation value `first`.

use std::io::{self, Read, Write};

use crate::sep::Configuration;

pub const MAGIC: [u8; 4] = *b"SEPS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub n: u32,
    pub base_vertices: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub replica: u32,
    pub time: f64,
    pub configuration: Configuration,
}

pub fn runs(c: &Configuration) -> Vec<u32> {
    let mut out = Vec::new();
    let mut current = !c.is_empty() && c.get(0);
    let mut length = 0u32;
    for v in 0..c.len() {
        if c.get(v) == current {
            length += 1;
        } else {
            out.push(length);
            current = !current;
            length = 1;
        }
    }
    if length > 0 {
        out.push(length);
    }
    out
}

pub fn write_header<W: Write>(w: &mut W, header: SnapshotHeader) -> io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&header.n.to_le_bytes())?;
    w.write_all(&header.base_vertices.to_le_bytes())
}

pub fn write_record<W: Write>(w: &mut W, record: &SnapshotRecord) -> io::Result<()> {
    let c = &record.configuration;
    let runs = runs(c);
    w.write_all(&record.replica.to_le_bytes())?;
    w.write_all(&record.time.to_le_bytes())?;
    w.write_all(&(c.len() as u32).to_le_bytes())?;
    w.write_all(&[u8::from(!c.is_empty() && c.get(0))])?;
    w.write_all(&(runs.len() as u32).to_le_bytes())?;
    for r in runs {
        w.write_all(&r.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

pub fn read_snapshots<R: Read>(r: &mut R) -> io::Result<(SnapshotHeader, Vec<SnapshotRecord>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(invalid("not a snapshot file"));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(invalid("unsupported snapshot version"));
    }
    let header = SnapshotHeader {
        n: read_u32(r)?,
        base_vertices: read_u32(r)?,
    };
    let mut records = Vec::new();
    loop {
        let mut b = [0u8; 4];
        match r.read_exact(&mut b) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e),
        }
        let replica = u32::from_le_bytes(b);
        let mut t = [0u8; 8];
        r.read_exact(&mut t)?;
        let sites = read_u32(r)? as usize;
        let mut first = [0u8; 1];
        r.read_exact(&mut first)?;
        let count = read_u32(r)?;
        let mut c = Configuration::empty(sites);
        let mut pos = 0usize;
        let mut value = first[0] == 1;
        for _ in 0..count {
            let len = read_u32(r)? as usize;
            if pos + len > sites {
                return Err(invalid("run lengths exceed site count"));
            }
            if value {
                for v in pos..pos + len {
                    c.set(v, true);
                }
            }
            pos += len;
            value = !value;
        }
        if pos != sites {
            return Err(invalid("run lengths do not cover all sites"));
        }
        records.push(SnapshotRecord {
            replica,
            time: f64::from_le_bytes(t),
            configuration: c,
        });
    }
    Ok((header, records))
}

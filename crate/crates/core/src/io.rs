//! Reading and writing maps.
//!
//! Text: a `QUADMAP p=<p> in=<dart> out=<dart>` header followed by `4p`
//! lines `<id> <vertex> <opposite|-1> <next>`. Lines starting with `#` and
//! blank lines are ignored, and a stream may hold any number of maps.
//!
//! Binary: the magic `QM01`, then `p`, `in`, `out` and `4p` records of
//! `id, vertex, opposite (-1 for a leg), next`, all as 64-bit little-endian
//! integers. Records may be concatenated, each with its own magic.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::map::{Dart, QuadMap, MAX_VERTICES};

pub const MAGIC: &[u8; 4] = b"QM01";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Binary,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "binary" => Ok(Format::Binary),
            other => Err(Error::Domain(format!("unknown map format {other:?}"))),
        }
    }
}

pub fn write_text<W: Write>(w: &mut W, map: &QuadMap) -> Result<()> {
    writeln!(
        w,
        "QUADMAP p={} in={} out={}",
        map.size(),
        map.in_leg(),
        map.out_leg()
    )?;
    for d in map.darts() {
        match d.opposite {
            Some(o) => writeln!(w, "{} {} {} {}", d.id, d.vertex, o, d.next)?,
            None => writeln!(w, "{} {} -1 {}", d.id, d.vertex, d.next)?,
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(w: &mut W, map: &QuadMap) -> Result<()> {
    let mut buf = Vec::with_capacity(4 + 24 + 32 * map.dart_count());
    buf.extend_from_slice(MAGIC);
    for x in [map.size(), map.in_leg(), map.out_leg()] {
        buf.extend_from_slice(&(x as i64).to_le_bytes());
    }
    for d in map.darts() {
        let opp = d.opposite.map_or(-1, |o| o as i64);
        for x in [d.id as i64, d.vertex as i64, opp, d.next as i64] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_map<W: Write>(w: &mut W, map: &QuadMap, format: Format) -> Result<()> {
    match format {
        Format::Text => write_text(w, map),
        Format::Binary => write_binary(w, map),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_field(token: Option<&str>, key: &str, line: usize) -> Result<usize> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {key}=")))?;
    let value = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| parse_err(line, format!("expected {key}=<int>, got {token:?}")))?;
    value
        .parse()
        .map_err(|e| parse_err(line, format!("{key}: {e}")))
}

/// Reads every map of a text stream.
pub fn read_text<R: BufRead>(r: R) -> Result<Vec<QuadMap>> {
    let mut maps = Vec::new();
    let mut current: Option<(usize, usize, usize, usize, Vec<Dart>)> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        if trimmed.starts_with("QUADMAP") {
            if let Some((_, _, _, start, darts)) = &current {
                return Err(parse_err(
                    lineno,
                    format!(
                        "map starting on line {start} ended after {} darts",
                        darts.len()
                    ),
                ));
            }
            fields.next();
            let p = header_field(fields.next(), "p", lineno)?;
            let in_leg = header_field(fields.next(), "in", lineno)?;
            let out_leg = header_field(fields.next(), "out", lineno)?;
            if fields.next().is_some() {
                return Err(parse_err(lineno, "trailing fields in header"));
            }
            if p == 0 || p > MAX_VERTICES {
                return Err(parse_err(lineno, format!("size {p} out of range")));
            }
            current = Some((p, in_leg, out_leg, lineno, Vec::with_capacity(4 * p)));
            continue;
        }
        let Some((p, in_leg, out_leg, _, darts)) = current.as_mut() else {
            return Err(parse_err(lineno, "dart line before QUADMAP header"));
        };
        let mut nums = [0i64; 4];
        for (k, slot) in nums.iter_mut().enumerate() {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err(lineno, format!("expected 4 fields, got {k}")))?;
            *slot = tok
                .parse()
                .map_err(|e| parse_err(lineno, format!("field {}: {e}", k + 1)))?;
        }
        if fields.next().is_some() {
            return Err(parse_err(lineno, "more than 4 fields"));
        }
        darts.push(dart_from_fields(nums, lineno)?);
        if darts.len() == 4 * *p {
            let map = QuadMap::from_darts(*p, darts, *in_leg, *out_leg)?;
            maps.push(map);
            current = None;
        }
    }
    if let Some((_, _, _, start, darts)) = current {
        return Err(parse_err(
            start,
            format!("truncated map: {} darts read", darts.len()),
        ));
    }
    Ok(maps)
}

fn dart_from_fields([id, vertex, opp, next]: [i64; 4], line: usize) -> Result<Dart> {
    let nonneg = |x: i64, name: &str| {
        usize::try_from(x).map_err(|_| parse_err(line, format!("negative {name} {x}")))
    };
    Ok(Dart {
        id: nonneg(id, "dart id")?,
        vertex: nonneg(vertex, "vertex")?,
        opposite: match opp {
            -1 => None,
            o => Some(nonneg(o, "opposite")?),
        },
        next: nonneg(next, "next")?,
    })
}

fn read_i64<R: Read>(r: &mut R, record: usize) -> Result<i64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => parse_err(record, "truncated binary record"),
        _ => Error::Io(e),
    })?;
    Ok(i64::from_le_bytes(b))
}

/// Reads every map of a binary stream.
pub fn read_binary<R: Read>(mut r: R) -> Result<Vec<QuadMap>> {
    let mut maps = Vec::new();
    loop {
        let record = maps.len() + 1;
        let mut magic = [0u8; 4];
        let mut got = 0;
        while got < 4 {
            let n = r.read(&mut magic[got..])?;
            if n == 0 {
                break;
            }
            got += n;
        }
        match got {
            0 => return Ok(maps),
            4 if &magic == MAGIC => {}
            _ => return Err(parse_err(record, "bad magic")),
        }
        let p = read_i64(&mut r, record)?;
        if p <= 0 || p as u64 > MAX_VERTICES as u64 {
            return Err(parse_err(record, format!("size {p} out of range")));
        }
        let p = p as usize;
        let in_leg = usize::try_from(read_i64(&mut r, record)?)
            .map_err(|_| parse_err(record, "negative in leg"))?;
        let out_leg = usize::try_from(read_i64(&mut r, record)?)
            .map_err(|_| parse_err(record, "negative out leg"))?;
        let mut darts = Vec::with_capacity(4 * p);
        for _ in 0..4 * p {
            let mut f = [0i64; 4];
            for x in &mut f {
                *x = read_i64(&mut r, record)?;
            }
            darts.push(dart_from_fields(f, record)?);
        }
        maps.push(QuadMap::from_darts(p, &darts, in_leg, out_leg)?);
    }
}

/// Reads maps in either format, chosen by the leading bytes.
pub fn read_maps<R: BufRead>(mut r: R) -> Result<Vec<QuadMap>> {
    let head = r.fill_buf()?;
    if head.starts_with(MAGIC) {
        read_binary(r)
    } else {
        read_text(r)
    }
}

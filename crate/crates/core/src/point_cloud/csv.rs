//! Point-cloud CSV: a `# D=<int> d=<int> values=<0|1>` header, then one row
//! per sample with `D` coordinates and, when `values=1`, a trailing cost
//! sample. Numbers are written in shortest round-trip form.

use std::io::{BufRead, Write};

use super::SampleSet;
use crate::error::{Error, Result};

pub fn write_cloud_csv<W: Write>(set: &SampleSet, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# D={} d={} values={}",
        set.ambient_dim(),
        set.intrinsic_dim(),
        u8::from(set.values().is_some())
    )?;
    let mut line = String::new();
    for (i, p) in set.points().enumerate() {
        line.clear();
        for (k, x) in p.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&x.to_string());
        }
        if let Some(v) = set.values() {
            line.push(',');
            line.push_str(&v[i].to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Header {
    ambient: usize,
    intrinsic: usize,
    values: bool,
}

fn parse_header(line: &str) -> Option<Header> {
    let body = line.trim().strip_prefix('#')?;
    let (mut ambient, mut intrinsic, mut values) = (None, None, None);
    for tok in body.split_whitespace() {
        let (key, val) = tok.split_once('=')?;
        match key {
            "D" => ambient = val.parse().ok(),
            "d" => intrinsic = val.parse().ok(),
            "values" => values = Some(val == "1"),
            _ => {}
        }
    }
    Some(Header {
        ambient: ambient?,
        intrinsic: intrinsic?,
        values: values?,
    })
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("`{}`: {e}", tok.trim()),
            })
        })
        .collect()
}

/// Reads a cloud written by [`write_cloud_csv`]. The header is required.
pub fn read_cloud_csv<R: BufRead>(input: R) -> Result<SampleSet> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break parse_header(&line).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: "expected `# D=<int> d=<int> values=<0|1>` header".into(),
                })?;
            }
            None => return Err(Error::EmptyInput),
        }
    };
    let width = header.ambient + usize::from(header.values);
    let mut coords = Vec::new();
    let mut values = header.values.then(Vec::new);
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(line, i + 1)?;
        if row.len() != width {
            return Err(Error::RaggedInput {
                row: coords.len() / header.ambient,
                len: row.len(),
                expected: width,
            });
        }
        coords.extend_from_slice(&row[..header.ambient]);
        if let Some(v) = values.as_mut() {
            v.push(row[header.ambient]);
        }
    }
    SampleSet::from_flat(coords, header.ambient, values, header.intrinsic)
}

/// Reads query points: either a cloud file (header honored, trailing value
/// column dropped) or bare comma-separated rows of equal length.
pub fn read_points_csv<R: BufRead>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut header: Option<Header> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if rows.is_empty() && header.is_none() {
                header = parse_header(line);
            }
            continue;
        }
        let mut row = parse_row(line, i + 1)?;
        if let Some(h) = header {
            if row.len() == h.ambient + usize::from(h.values) {
                row.truncate(h.ambient);
            }
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::RaggedInput {
                    row: rows.len(),
                    len: row.len(),
                    expected: first.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(rows)
}

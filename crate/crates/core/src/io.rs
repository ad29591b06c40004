//! FLD1 field dumps and CSV export.
//!
//! An FLD1 file starts with the text lines
//!
//! ```text
//! FLD1
//! dim 2
//! n 64 64
//! origin -1 -1
//! extent 2 2
//! ```
//!
//! followed by the node values as raw little-endian `f64`, x fastest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

const MAGIC: &str = "FLD1";

pub fn write_fld<W: Write>(field: &ScalarField, mut out: W) -> Result<()> {
    let g = field.grid();
    let d = g.dim();
    let join = |xs: &[f64]| xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    let n: Vec<String> = g.cells()[..d].iter().map(|c| c.to_string()).collect();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "dim {d}")?;
    writeln!(out, "n {}", n.join(" "))?;
    writeln!(out, "origin {}", join(&g.origin().as_slice()[..d]))?;
    writeln!(out, "extent {}", join(&g.extent().as_slice()[..d]))?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_fld<R: Read>(input: R) -> Result<ScalarField> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    let mut next = |reader: &mut BufReader<R>, key: &str| -> Result<Vec<String>> {
        line.clear();
        reader.read_line(&mut line)?;
        let mut parts = line.split_whitespace().map(str::to_string);
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            _ => Err(Error::InvalidInput(format!("FLD1 header: expected `{key}`"))),
        }
    };
    next(&mut reader, MAGIC)?;
    let parse = |v: Vec<String>| -> Result<Vec<f64>> {
        v.iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::InvalidInput(format!("FLD1 header: {e}"))))
            .collect()
    };
    let dim = parse(next(&mut reader, "dim")?)?;
    let dim = *dim.first().ok_or_else(|| Error::InvalidInput("FLD1 header: empty dim".into()))? as usize;
    let n: Vec<usize> = parse(next(&mut reader, "n")?)?.iter().map(|&x| x as usize).collect();
    let origin = parse(next(&mut reader, "origin")?)?;
    let extent = parse(next(&mut reader, "extent")?)?;
    if n.len() != dim || extent.len() != dim || n.is_empty() {
        return Err(Error::InvalidInput("FLD1 header: inconsistent axis counts".into()));
    }
    let grid = Grid::new(dim, &origin, &n, extent[0] / n[0] as f64)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.node_count() {
        return Err(Error::InvalidInput(format!(
            "FLD1 payload has {} bytes, expected {}",
            bytes.len(),
            8 * grid.node_count()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::new(grid, values)
}

pub fn save_fld(field: &ScalarField, path: &Path) -> Result<()> {
    write_fld(field, BufWriter::new(File::create(path)?))
}

pub fn load_fld(path: &Path) -> Result<ScalarField> {
    read_fld(File::open(path)?)
}

/// One node per row: coordinates then value.
pub fn write_field_csv<W: Write>(field: &ScalarField, out: W) -> Result<()> {
    let g = field.grid();
    let mut w = BufWriter::new(out);
    let axes = ["x", "y", "z"];
    writeln!(w, "{},value", axes[..g.dim()].join(","))?;
    for (i, v) in field.values().iter().enumerate() {
        let p = g.node_point(i);
        for k in 0..g.dim() {
            write!(w, "{:?},", p[k])?;
        }
        writeln!(w, "{v:?}")?;
    }
    w.flush()?;
    Ok(())
}

/// Minimal CSV table writer: a header and rows of already formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fld_roundtrip_is_bitwise() {
        let g = Grid::new(2, &[-1.0, 0.5], &[16, 20], 0.1).unwrap();
        let f = ScalarField::from_fn(g, |p| (p[0] * 3.0).sin() + p[1] / 7.0);
        let mut buf = Vec::new();
        write_fld(&f, &mut buf).unwrap();
        let back = read_fld(buf.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(back.grid().same_as(f.grid()));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let g = Grid::centered(2, 1.0, 16).unwrap();
        let mut buf = Vec::new();
        write_fld(&ScalarField::zeros(g), &mut buf).unwrap();
        buf.truncate(buf.len() - 8);
        assert!(read_fld(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = Grid::centered(2, 1.0, 16).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&ScalarField::zeros(g), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), g.node_count() + 1);
        assert!(text.starts_with("x,y,value"));
    }
}

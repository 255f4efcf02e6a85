use std::io::{BufRead, Write};

use super::{Field, Grid};
use crate::error::{Error, Result};
use crate::geometry::Point;

impl Field {
    /// Writes the header rows `dim`, `origin`, `spacing`, `extent`, then one
    /// value per line in row-major order (last axis fastest).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let g = self.grid();
        writeln!(w, "dim,{}", g.dim())?;
        let join = |v: Vec<String>| v.join(",");
        writeln!(w, "origin,{}", join(g.origin().coords().iter().map(|c| c.to_string()).collect()))?;
        writeln!(w, "spacing,{}", g.spacing())?;
        writeln!(w, "extent,{}", join(g.extent().iter().map(|c| c.to_string()).collect()))?;
        for v in self.values() {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Field> {
        let mut lines = r.lines().enumerate();
        let mut header = |key: &str| -> Result<Vec<String>> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing `{key}` row")))?;
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let mut parts = line.trim().split(',').map(|s| s.trim().to_string());
            if parts.next().as_deref() != Some(key) {
                return Err(Error::Parse(format!("line {}: expected `{key}` row", no + 1)));
            }
            Ok(parts.collect())
        };
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")))
        };
        let dim_row = header("dim")?;
        let dim: usize = dim_row
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad `dim` row".into()))?;
        let origin = header("origin")?.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let spacing = header("spacing")?
            .first()
            .map(|s| num(s))
            .ok_or_else(|| Error::Parse("bad `spacing` row".into()))??;
        let extent = header("extent")?
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad extent `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if origin.len() != dim || extent.len() != dim {
            return Err(Error::Parse("header lengths disagree with `dim`".into()));
        }
        let grid = Grid::new(Point::new(&origin)?, spacing, &extent)?;
        let mut values = Vec::with_capacity(grid.len());
        for (no, line) in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad value `{t}`", no + 1)))?,
            );
        }
        Field::new(grid, values)
    }
}

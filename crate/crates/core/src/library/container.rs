//! Self-describing text container for a whole library. Line-oriented
//! metadata, one CSV block per entry, and a SHA-256 trailer over
//! everything before it.

use super::{format_float, FlameletLibrary, LibraryError, Result};
use crate::flamelet::{BoundaryConditions, ChiShape, Clustering, FlameletSolution, Grid};
use std::fmt::Write as _;
use std::path::Path;

pub const LIBRARY_MAGIC: &str = "FGM-LIBRARY 1";

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|&x| format_float(x))
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn to_text(lib: &FlameletLibrary) -> String {
    let mut s = String::new();
    let g = &lib.grid;
    let _ = writeln!(s, "{LIBRARY_MAGIC}");
    let _ = writeln!(s, "mechanism {}", lib.mechanism_fingerprint);
    let _ = writeln!(s, "species {}", lib.species.join(" "));
    let _ = writeln!(
        s,
        "chi_shape {}",
        match lib.chi_shape {
            ChiShape::Erfc => "erfc",
            ChiShape::Constant => "constant",
        }
    );
    let _ = writeln!(s, "z_st {}", format_float(lib.z_st));
    let _ = writeln!(s, "pressure {}", format_float(lib.bc.pressure));
    let _ = writeln!(s, "t_fuel {}", format_float(lib.bc.t_fuel));
    let _ = writeln!(s, "t_ox {}", format_float(lib.bc.t_ox));
    let _ = writeln!(s, "y_fuel {}", join(&lib.bc.y_fuel));
    let _ = writeln!(s, "y_ox {}", join(&lib.bc.y_ox));
    match g.clustering() {
        Some(c) => {
            let _ = writeln!(
                s,
                "grid {} clustered {} {}",
                g.len(),
                format_float(c.center),
                format_float(c.strength)
            );
        }
        None => {
            let _ = writeln!(s, "grid {} explicit", g.len());
        }
    }
    let _ = writeln!(s, "entries {}", lib.entries.len());
    for e in &lib.entries {
        let _ = writeln!(
            s,
            "entry {} converged {} residual {} steps {}",
            format_float(e.chi_st),
            e.converged,
            format_float(e.residual_norm),
            e.steps
        );
        let _ = writeln!(s, "Z,T,rho,{}", lib.species.join(","));
        for i in 0..e.grid.len() {
            let mut row = vec![
                format_float(e.grid.points()[i]),
                format_float(e.temperature[i]),
                format_float(e.density[i]),
            ];
            row.extend(e.mass_fractions[i].iter().map(|&y| format_float(y)));
            let _ = writeln!(s, "{}", row.join(","));
        }
    }
    s
}

pub fn write_library(lib: &FlameletLibrary, path: impl AsRef<Path>) -> Result<()> {
    let body = to_text(lib);
    let hash = crate::content_hash(body.as_bytes());
    std::fs::write(path, format!("{body}sha256 {hash}\n"))?;
    Ok(())
}

pub fn read_library(path: impl AsRef<Path>) -> Result<FlameletLibrary> {
    let text = std::fs::read_to_string(path)?;
    from_text(&text)
}

fn corrupt(msg: impl Into<String>) -> LibraryError {
    LibraryError::Corrupt(msg.into())
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let (i, l) = self
            .it
            .next()
            .ok_or_else(|| corrupt("unexpected end of file"))?;
        self.line = i + 1;
        Ok(l)
    }

    /// Value part of a `key value...` line.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ if l == key => Ok(""),
            _ => Err(corrupt(format!("line {}: expected '{key}'", self.line))),
        }
    }

    fn num(&self, tok: &str) -> Result<f64> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| corrupt(format!("line {}: bad number '{tok}'", self.line)))
    }

    fn nums(&self, s: &str) -> Result<Vec<f64>> {
        s.split_whitespace().map(|t| self.num(t)).collect()
    }

    fn keyed_num(&mut self, key: &str) -> Result<f64> {
        let v = self.keyed(key)?;
        self.num(v.trim())
    }

    fn keyed_nums(&mut self, key: &str) -> Result<Vec<f64>> {
        let v = self.keyed(key)?;
        self.nums(v)
    }
}

pub(crate) fn from_text(text: &str) -> Result<FlameletLibrary> {
    let body_end = text
        .rfind("sha256 ")
        .ok_or_else(|| corrupt("missing checksum trailer"))?;
    let (body, trailer) = text.split_at(body_end);
    let want = trailer["sha256 ".len()..].trim();
    if crate::content_hash(body.as_bytes()) != want {
        return Err(corrupt("checksum mismatch"));
    }
    let mut ls = Lines {
        it: body.lines().enumerate(),
        line: 0,
    };
    if ls.next()? != LIBRARY_MAGIC {
        return Err(corrupt("not a flamelet library file"));
    }
    let fingerprint = ls.keyed("mechanism")?.trim().to_string();
    let species: Vec<String> = ls
        .keyed("species")?
        .split_whitespace()
        .map(String::from)
        .collect();
    let chi_shape = match ls.keyed("chi_shape")?.trim() {
        "erfc" => ChiShape::Erfc,
        "constant" => ChiShape::Constant,
        other => return Err(corrupt(format!("unknown chi shape '{other}'"))),
    };
    let z_st = ls.keyed_num("z_st")?;
    let pressure = ls.keyed_num("pressure")?;
    let t_fuel = ls.keyed_num("t_fuel")?;
    let t_ox = ls.keyed_num("t_ox")?;
    let y_fuel = ls.keyed_nums("y_fuel")?;
    let y_ox = ls.keyed_nums("y_ox")?;
    if y_fuel.len() != species.len() || y_ox.len() != species.len() {
        return Err(corrupt(
            "boundary composition length does not match species",
        ));
    }
    let grid_line: Vec<&str> = ls.keyed("grid")?.split_whitespace().collect();
    let n_points: usize = grid_line
        .first()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| corrupt("bad grid line"))?;
    let clustering = match grid_line.get(1..) {
        Some(["explicit"]) => None,
        Some(["clustered", c, b]) => Some(Clustering {
            center: ls.num(c)?,
            strength: ls.num(b)?,
        }),
        _ => return Err(corrupt("bad grid line")),
    };
    let n_entries: usize = ls
        .keyed("entries")?
        .trim()
        .parse()
        .map_err(|_| corrupt("bad entry count"))?;
    let header = format!("Z,T,rho,{}", species.join(","));
    let mut grid: Option<Grid> = None;
    let mut entries = Vec::with_capacity(n_entries);
    for _ in 0..n_entries {
        let head: Vec<&str> = ls.keyed("entry")?.split_whitespace().collect();
        let (chi, converged, residual, steps) = match head.as_slice() {
            [chi, "converged", c, "residual", r, "steps", n] => (
                ls.num(chi)?,
                c.parse::<bool>()
                    .map_err(|_| corrupt("bad converged flag"))?,
                ls.num(r)?,
                n.parse::<usize>().map_err(|_| corrupt("bad step count"))?,
            ),
            _ => return Err(corrupt(format!("line {}: bad entry header", ls.line))),
        };
        if ls.next()? != header {
            return Err(corrupt(format!("line {}: bad column header", ls.line)));
        }
        let mut z = Vec::with_capacity(n_points);
        let mut temperature = Vec::with_capacity(n_points);
        let mut density = Vec::with_capacity(n_points);
        let mut mass_fractions = Vec::with_capacity(n_points);
        for _ in 0..n_points {
            let row: Vec<f64> = ls
                .next()?
                .split(',')
                .map(|t| ls.num(t))
                .collect::<Result<_>>()?;
            if row.len() != 3 + species.len() {
                return Err(corrupt(format!(
                    "line {}: wrong number of columns",
                    ls.line
                )));
            }
            z.push(row[0]);
            temperature.push(row[1]);
            density.push(row[2]);
            mass_fractions.push(row[3..].to_vec());
        }
        let g = match &grid {
            Some(g) if g.points() == z.as_slice() => g.clone(),
            Some(_) => return Err(corrupt("entries use different grids")),
            None => {
                let g = Grid::from_parts(z, clustering).map_err(|e| corrupt(e.to_string()))?;
                grid = Some(g.clone());
                g
            }
        };
        entries.push(FlameletSolution {
            grid: g,
            chi_st: chi,
            temperature,
            mass_fractions,
            density,
            converged,
            residual_norm: residual,
            steps,
        });
    }
    if ls.it.next().is_some() {
        return Err(corrupt("trailing data before checksum"));
    }
    let grid = grid.ok_or_else(|| corrupt("library has no entries"))?;
    Ok(FlameletLibrary {
        mechanism_fingerprint: fingerprint,
        species,
        bc: BoundaryConditions {
            t_fuel,
            t_ox,
            y_fuel,
            y_ox,
            pressure,
        },
        grid,
        chi_shape,
        z_st,
        entries,
    })
}

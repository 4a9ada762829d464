//! Plain-text mesh format.
//!
//! ```text
//! # mintori-mesh 1
//! # key value...          metadata lines (see `write`)
//! grid,i,j,re0,im0,...    one line per grid point, row-major
//! stencil,i,k,re0,im0,... optional row stencil, offset index k in 0..=8
//! ```
//!
//! Coordinates are unit representatives printed with 17 significant digits,
//! so a write/read cycle reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use mintori_core::torus::{MeshInfo, MeshKind, ParamStencil, TorusMesh, REACH};
use mintori_core::{AmbientPoint, C64};

use crate::output::{num, write_atomic};
use crate::CliError;

const MAGIC: &str = "# mintori-mesh 1";

fn kind_name(k: MeshKind) -> &'static str {
    match k {
        MeshKind::Clifford => "clifford",
        MeshKind::Orbit => "orbit",
        MeshKind::External => "external",
    }
}

fn ints(v: &[i64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn push_coords(out: &mut String, z: &[C64]) {
    for c in z {
        let _ = write!(out, ",{},{}", num(c.re), num(c.im));
    }
    out.push('\n');
}

/// Serializes a mesh; `config_hash` is recorded when given.
pub fn to_string(mesh: &TorusMesh, config_hash: Option<&str>) -> String {
    let info = &mesh.info;
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    let _ = writeln!(s, "# n {}", mesh.n());
    let _ = writeln!(s, "# rows {}", mesh.rows());
    let _ = writeln!(s, "# cols {}", mesh.cols());
    let _ = writeln!(s, "# kind {}", kind_name(info.kind));
    let _ = writeln!(s, "# weight {}", ints(&info.weight));
    let _ = writeln!(s, "# generator {}", ints(&info.generator));
    let _ = writeln!(s, "# p {}", info.p);
    let _ = writeln!(s, "# q {}", info.q);
    let _ = writeln!(s, "# level {}", num(info.level));
    let _ = writeln!(s, "# row_period {}", num(info.row_period));
    if let Some(st) = mesh.stencil() {
        let _ = writeln!(s, "# delta {}", num(st.delta));
        let g: Vec<String> = st.generator().iter().map(|&x| num(x)).collect();
        let _ = writeln!(s, "# stencil_generator {}", g.join(" "));
    }
    if let Some(h) = config_hash {
        let _ = writeln!(s, "# config_sha256 {h}");
    }
    for i in 0..mesh.rows() {
        for j in 0..mesh.cols() {
            let _ = write!(s, "grid,{i},{j}");
            push_coords(&mut s, mesh.point(i, j).coords());
        }
    }
    if let Some(st) = mesh.stencil() {
        for (i, row) in st.rows().iter().enumerate() {
            for (k, z) in row.iter().enumerate() {
                let _ = write!(s, "stencil,{i},{k}");
                push_coords(&mut s, z);
            }
        }
    }
    s
}

pub fn write(path: &Path, mesh: &TorusMesh, config_hash: Option<&str>) -> Result<(), CliError> {
    write_atomic(path, to_string(mesh, config_hash).as_bytes())?;
    Ok(())
}

pub fn read(path: &Path) -> Result<TorusMesh, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

fn bad(line: usize, m: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("mesh line {line}: {m}"))
}

fn parse_coords(fields: &[&str], line: usize, d: usize) -> Result<Vec<C64>, CliError> {
    if fields.len() != 2 * d {
        return Err(bad(line, format!("expected {} coordinates, got {}", 2 * d, fields.len())));
    }
    let vals: Vec<f64> = fields
        .iter()
        .map(|f| f.trim().parse::<f64>().map_err(|e| bad(line, e)))
        .collect::<Result<_, _>>()?;
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(bad(line, "non-finite coordinate"));
    }
    Ok(vals.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
}

pub fn parse(text: &str) -> Result<TorusMesh, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        _ => return Err(bad(1, "missing mesh header")),
    }
    let mut n = None;
    let (mut rows, mut cols) = (None, None);
    let mut info = MeshInfo::external();
    let mut delta = None;
    let mut stencil_gen: Option<Vec<f64>> = None;
    let mut grid: Vec<Option<AmbientPoint>> = Vec::new();
    let mut stencil: Vec<Vec<Option<Vec<C64>>>> = Vec::new();
    for (idx, raw) in lines {
        let ln = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix("# ") {
            let (key, val) = meta.split_once(' ').unwrap_or((meta, ""));
            let int = |v: &str| v.parse::<i64>().map_err(|e| bad(ln, e));
            let ints = |v: &str| -> Result<Vec<i64>, CliError> {
                v.split_whitespace().map(|x| x.parse::<i64>().map_err(|e| bad(ln, e))).collect()
            };
            let float = |v: &str| v.parse::<f64>().map_err(|e| bad(ln, e));
            match key {
                "n" => n = Some(int(val)? as usize),
                "rows" => rows = Some(int(val)? as usize),
                "cols" => cols = Some(int(val)? as usize),
                "kind" => {
                    info.kind = match val {
                        "clifford" => MeshKind::Clifford,
                        "orbit" => MeshKind::Orbit,
                        "external" => MeshKind::External,
                        other => return Err(bad(ln, format!("unknown kind {other}"))),
                    }
                }
                "weight" => info.weight = ints(val)?,
                "generator" => info.generator = ints(val)?,
                "p" => info.p = int(val)?,
                "q" => info.q = int(val)? as u32,
                "level" => info.level = float(val)?,
                "row_period" => info.row_period = float(val)?,
                "delta" => delta = Some(float(val)?),
                "stencil_generator" => {
                    stencil_gen = Some(val.split_whitespace().map(float).collect::<Result<_, _>>()?)
                }
                "config_sha256" => {}
                other => return Err(bad(ln, format!("unknown metadata key {other}"))),
            }
            if grid.is_empty() {
                if let (Some(r), Some(c)) = (rows, cols) {
                    grid = vec![None; r * c];
                    stencil = vec![vec![None; 2 * REACH + 1]; r];
                }
            }
            continue;
        }
        let (Some(n), Some(r), Some(c)) = (n, rows, cols) else {
            return Err(bad(ln, "data before n, rows and cols"));
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(bad(ln, "short record"));
        }
        let a: usize = fields[1].parse().map_err(|e| bad(ln, e))?;
        let b: usize = fields[2].parse().map_err(|e| bad(ln, e))?;
        let z = parse_coords(&fields[3..], ln, n + 1)?;
        match fields[0] {
            "grid" => {
                if a >= r || b >= c {
                    return Err(bad(ln, "grid index out of range"));
                }
                let p = AmbientPoint::unit(z).map_err(|e| bad(ln, e))?;
                if grid[a * c + b].replace(p).is_some() {
                    return Err(bad(ln, "duplicate grid point"));
                }
            }
            "stencil" => {
                if a >= r || b > 2 * REACH {
                    return Err(bad(ln, "stencil index out of range"));
                }
                if stencil[a][b].replace(z).is_some() {
                    return Err(bad(ln, "duplicate stencil sample"));
                }
            }
            other => return Err(bad(ln, format!("unknown record {other}"))),
        }
    }
    let (Some(r), Some(c)) = (rows, cols) else {
        return Err(CliError::Input("mesh: missing rows or cols".into()));
    };
    let points: Vec<AmbientPoint> = grid
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Input("mesh: missing grid points".into()))?;
    let mesh = TorusMesh::from_points(r, c, points, info).map_err(|e| CliError::Input(format!("mesh: {e}")))?;
    let any_stencil = stencil.iter().flatten().any(Option::is_some);
    if !any_stencil {
        return Ok(mesh);
    }
    let (Some(delta), Some(generator)) = (delta, stencil_gen) else {
        return Err(CliError::Input("mesh: stencil records without delta or generator".into()));
    };
    let rows: Vec<Vec<Vec<C64>>> = stencil
        .into_iter()
        .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Input("mesh: incomplete stencil".into()))?;
    let st = ParamStencil::new(delta, generator, rows).map_err(|e| CliError::Input(format!("mesh: {e}")))?;
    mesh.with_stencil(st).map_err(|e| CliError::Input(format!("mesh: {e}")))
}

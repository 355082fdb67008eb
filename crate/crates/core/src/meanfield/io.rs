use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::grid::FieldGrid;

/// File name for a snapshot taken at time `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("snap_t{t}.pgm")
}

/// Plain-text graymap of `s`: `-1 → 0`, `+1 → 255`. Row `j = m-1` is written
/// first so that `y` points up in image viewers.
pub fn write_pgm<W: Write>(mut w: W, field: &FieldGrid) -> std::io::Result<()> {
    let m = field.m();
    writeln!(w, "P2")?;
    writeln!(w, "{m} {m}")?;
    writeln!(w, "255")?;
    let (a, b) = (field.n_a(), field.n_b());
    for j in (0..m).rev() {
        let row: Vec<String> = (0..m)
            .map(|i| {
                let k = j * m + i;
                let s = (a[k] - b[k]).clamp(-1.0, 1.0);
                ((s + 1.0) * 0.5 * 255.0).round().to_string()
            })
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Header comment carries grid parameters so a dump is self-describing.
pub fn write_field_csv<W: Write>(mut w: W, field: &FieldGrid) -> std::io::Result<()> {
    writeln!(w, "# m={} r={} q={} t={}", field.m(), field.r(), field.q(), field.t())?;
    writeln!(w, "i,j,n_A,n_B")?;
    let m = field.m();
    for j in 0..m {
        for i in 0..m {
            let k = j * m + i;
            writeln!(w, "{i},{j},{:e},{:e}", field.n_a()[k], field.n_b()[k])?;
        }
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Inverse of [`write_field_csv`]; values round-trip exactly.
pub fn read_field_csv<R: BufRead>(reader: R) -> Result<FieldGrid> {
    let mut params: Option<(usize, f64, f64, f64)> = None;
    let mut cells: Vec<(usize, usize, f64, f64)> = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = no + 1;
        let line = line.trim();
        if line.is_empty() || line == "i,j,n_A,n_B" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut m = None;
            let (mut r, mut q, mut t) = (None, None, None);
            for kv in rest.split_whitespace() {
                let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(line_no, "expected key=value"))?;
                let bad = |_| parse_err(line_no, format!("bad value for {k}"));
                match k {
                    "m" => m = Some(v.parse::<usize>().map_err(|_| parse_err(line_no, "bad m"))?),
                    "r" => r = Some(v.parse::<f64>().map_err(bad)?),
                    "q" => q = Some(v.parse::<f64>().map_err(bad)?),
                    "t" => t = Some(v.parse::<f64>().map_err(bad)?),
                    _ => {}
                }
            }
            match (m, r, q, t) {
                (Some(m), Some(r), Some(q), Some(t)) => params = Some((m, r, q, t)),
                _ => return Err(parse_err(line_no, "header needs m, r, q and t")),
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(parse_err(line_no, "expected i,j,n_A,n_B"));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| parse_err(line_no, "bad cell index"));
        let val = |s: &str| s.parse::<f64>().map_err(|_| parse_err(line_no, "bad concentration"));
        cells.push((idx(parts[0])?, idx(parts[1])?, val(parts[2])?, val(parts[3])?));
    }
    let (m, r, q, t) = params.ok_or_else(|| parse_err(1, "missing '# m=.. r=.. q=.. t=..' header"))?;
    if cells.len() != m * m {
        return Err(parse_err(0, format!("expected {} cells, found {}", m * m, cells.len())));
    }
    let mut a = vec![f64::NAN; m * m];
    let mut b = vec![f64::NAN; m * m];
    for (i, j, x, y) in cells {
        if i >= m || j >= m {
            return Err(parse_err(0, format!("cell ({i},{j}) outside {m}x{m} grid")));
        }
        a[j * m + i] = x;
        b[j * m + i] = y;
    }
    let mut field = FieldGrid::from_fn(m, r, q, {
        let mut k = 0;
        move |_, _| {
            let v = (a[k], b[k]);
            k += 1;
            v
        }
    })?;
    field.set_t(t);
    Ok(field)
}

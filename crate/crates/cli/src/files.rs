//! Control files (`n m T` then `m` rows of `n` cell values) and path CSVs.

use std::path::Path;

use swe_ldp_core::control::Control;
use swe_ldp_core::grid::Grid;
use swe_ldp_core::path::DiscretePath;

use crate::table::{format_real, Cell, Table};

pub fn read_control(path: &Path) -> Result<Control, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_control(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse_control(text: &str) -> Result<Control, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or("empty control file")?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 3 {
        return Err("header must be `n m T`".into());
    }
    let n: usize = parts[0].parse().map_err(|_| "bad n")?;
    let m: usize = parts[1].parse().map_err(|_| "bad m")?;
    let t: f64 = parts[2].parse().map_err(|_| "bad T")?;
    let grid = Grid::new(n, m, t).map_err(|e| e.to_string())?;
    let mut values = Vec::with_capacity(n * m);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("row {}: bad number", i + 1))?;
        if row.len() != n {
            return Err(format!("row {}: expected {n} values, got {}", i + 1, row.len()));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != m {
        return Err(format!("expected {m} rows, got {rows}"));
    }
    Control::new(grid, values).map_err(|e| e.to_string())
}

pub fn format_control(h: &Control) -> String {
    let g = h.grid();
    let mut out = format!("{} {} {}\n", g.n, g.m, format_real(g.horizon));
    for i in 0..g.m {
        let row: Vec<String> = h.row(i).iter().map(|v| format_real(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Rows `t, x, f, ft` over every stored time and node.
pub fn path_table(p: &DiscretePath) -> Table {
    let g = p.grid();
    let mut t = Table::new(&["t", "x", "f", "ft"]);
    for i in 0..=g.m {
        let (pos, vel) = (p.position(i), p.velocity(i));
        for k in 0..=g.n {
            t.push(vec![
                Cell::Real(g.time(i)),
                Cell::Real(g.node(k)),
                Cell::Real(pos[k]),
                Cell::Real(vel[k]),
            ]);
        }
    }
    t
}

pub fn read_path(path: &Path) -> Result<DiscretePath, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_path(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse_path(text: &str) -> Result<DiscretePath, String> {
    let mut lines = text.lines();
    let head = lines.next().ok_or("empty path file")?;
    if head.trim() != "t,x,f,ft" {
        return Err("header must be `t,x,f,ft`".into());
    }
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("line {}: bad number", i + 2))?;
        if v.len() != 4 {
            return Err(format!("line {}: expected 4 fields", i + 2));
        }
        rows.push([v[0], v[1], v[2], v[3]]);
    }
    let t0 = rows.first().ok_or("no rows")?[0];
    let per = rows.iter().take_while(|r| r[0] == t0).count();
    if per < 3 || rows.len() % per != 0 {
        return Err("rows do not form a full time × node lattice".into());
    }
    let (n, m) = (per - 1, rows.len() / per - 1);
    let horizon = rows.last().unwrap()[0];
    let grid = Grid::new(n, m, horizon).map_err(|e| e.to_string())?;
    for (idx, r) in rows.iter().enumerate() {
        let (i, k) = (idx / per, idx % per);
        if (r[0] - grid.time(i)).abs() > 1e-12 * horizon.max(1.0) || (r[1] - grid.node(k)).abs() > 1e-12 {
            return Err(format!("row {} is not at (t_{i}, x_{k})", idx + 1));
        }
    }
    let pos = rows.iter().map(|r| r[2]).collect();
    let vel = rows.iter().map(|r| r[3]).collect();
    DiscretePath::new(grid, pos, vel).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use swe_ldp_core::problem::{Preset, ProblemSpec};
    use swe_ldp_core::skeleton::upsilon_n;

    #[test]
    fn control_file_round_trip() {
        let g = Grid::new(4, 8, 1.0).unwrap();
        let h = Control::from_fn(g, |i, k| (i as f64 + 0.1) / (k as f64 + 3.0)).unwrap();
        assert_eq!(parse_control(&format_control(&h)).unwrap(), h);
        assert!(parse_control("4 2 1\n1 2 3 4\n").is_err());
        assert!(parse_control("4 1 1\n1 2 3\n").is_err());
    }

    #[test]
    fn path_csv_round_trip() {
        let spec = ProblemSpec::preset(Preset::NonlinA);
        let g = Grid::with_default_steps(4, 1.0).unwrap();
        let p = upsilon_n(&spec, &Control::constant(g, 0.3).unwrap()).unwrap();
        let csv = path_table(&p).to_csv().unwrap();
        assert_eq!(parse_path(&csv).unwrap(), p);
    }
}

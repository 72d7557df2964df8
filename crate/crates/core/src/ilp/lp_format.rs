//! CPLEX-LP text export, readable by common MILP solvers.

use std::io::Write;

use super::{IlpModel, Integrality};
use crate::error::Result;

const LINE_WIDTH: usize = 78;

fn term(first: bool, coef: f64, name: &str) -> String {
    let sign = if coef < 0.0 { "-" } else { "+" };
    let mag = coef.abs();
    if first && coef >= 0.0 {
        format!("{mag} {name}")
    } else {
        format!("{sign} {mag} {name}")
    }
}

fn write_terms<W: Write>(out: &mut W, head: &str, terms: &[String], tail: &str) -> Result<()> {
    let mut line = format!(" {head}:");
    for t in terms {
        if line.len() + t.len() + 1 > LINE_WIDTH {
            writeln!(out, "{line}")?;
            line = "   ".to_string();
        }
        line.push(' ');
        line.push_str(t);
    }
    if terms.is_empty() {
        line.push_str(" 0");
    }
    writeln!(out, "{line}{tail}")?;
    Ok(())
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Writes the model in LP format. Column names follow [`super::VarKind::name`].
pub fn write_lp<W: Write>(model: &IlpModel, mut out: W) -> Result<()> {
    let names: Vec<String> = model.vars().map(|v| v.kind.name()).collect();
    writeln!(out, "\\ rasc backhaul model ({})", model.problem)?;
    writeln!(out, "Minimize")?;
    let obj: Vec<String> = model
        .objective()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .enumerate()
        .map(|(n, (col, &c))| term(n == 0, c, &names[col]))
        .collect();
    write_terms(&mut out, "obj", &obj, "")?;
    writeln!(out, "Subject To")?;
    for row in model.constraints() {
        let terms: Vec<String> =
            row.coeffs.iter().enumerate().map(|(n, &(col, a))| term(n == 0, a, &names[col])).collect();
        let tail = format!(" {} {}", row.sense.symbol(), row.rhs);
        write_terms(&mut out, &row.name, &terms, &tail)?;
    }
    writeln!(out, "Bounds")?;
    for (col, name) in names.iter().enumerate() {
        let (lo, hi) = (model.lower_bounds()[col], model.upper_bounds()[col]);
        let default_binary = model.integrality()[col] != Integrality::Continuous && lo == 0.0 && hi == 1.0;
        if !default_binary {
            writeln!(out, " {} <= {name} <= {}", bound(lo), bound(hi))?;
        }
    }
    let binaries: Vec<&String> = names
        .iter()
        .enumerate()
        .filter(|(c, _)| model.integrality()[*c] == Integrality::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        writeln!(out, "Binaries")?;
        let mut line = String::new();
        for n in binaries {
            if line.len() + n.len() + 1 > LINE_WIDTH {
                writeln!(out, "{line}")?;
                line.clear();
            }
            line.push(' ');
            line.push_str(n);
        }
        writeln!(out, "{line}")?;
    }
    writeln!(out, "End")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_link_table, ChannelParams};
    use crate::energy::EnergyParams;
    use crate::ilp::{build_p1, build_p2};
    use crate::scenario::{generate_manhattan, place_hotspots_seeded, GridParams, HotspotParams};

    fn text(p2: bool) -> (IlpModel, String) {
        let s = generate_manhattan(&GridParams::default()).unwrap();
        let s = place_hotspots_seeded(&s, 2, 2.0, &HotspotParams::default(), 4).unwrap();
        let t = build_link_table(&s, &ChannelParams::default()).unwrap();
        let m = if p2 {
            build_p2(&s, &t, &[2.0, 2.0], 15, &EnergyParams::default(), 1e-6).unwrap()
        } else {
            build_p1(&s, &t, &[2.0, 2.0], 15).unwrap()
        };
        let mut buf = Vec::new();
        write_lp(&m, &mut buf).unwrap();
        (m, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn sections_appear_in_order() {
        let (_, t) = text(false);
        let pos = |s: &str| t.find(s).unwrap_or_else(|| panic!("missing {s}"));
        assert!(pos("Minimize") < pos("Subject To"));
        assert!(pos("Subject To") < pos("Bounds"));
        assert!(pos("Bounds") < pos("Binaries"));
        assert!(t.trim_end().ends_with("End"));
    }

    #[test]
    fn every_row_and_binary_is_written() {
        let (m, t) = text(true);
        for row in m.constraints() {
            assert!(t.contains(&format!(" {}:", row.name)), "{}", row.name);
        }
        let bin_section = &t[t.find("Binaries").unwrap()..];
        let listed = bin_section.split_whitespace().filter(|w| w.starts_with(['x', 'y'])).count();
        assert_eq!(listed, m.count(|k| !matches!(k, crate::ilp::VarKind::E { .. })));
        assert!(t.contains("0 <= e_1_0 <= +inf"));
    }

    #[test]
    fn lines_stay_short() {
        let (_, t) = text(true);
        for line in t.lines() {
            assert!(line.len() <= LINE_WIDTH + 40, "{line}");
        }
    }
}

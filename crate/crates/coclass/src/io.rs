//! Structured-text input formats: group tables, pro-p family data, and
//! cochain tables.
//!
//! The formats are keyword-driven token streams; `#` starts a comment that
//! runs to the end of the line. Writers emit the canonical layout, so a
//! parse/write round trip is the identity on the token stream.

use crate::error::{Error, Result};
use crate::family::{IntCochainTable, ProPData};
use crate::group::FiniteGroup;
use std::sync::Arc;

struct Tokens {
    toks: Vec<String>,
    pos: usize,
}

impl Tokens {
    fn new(text: &str) -> Tokens {
        let mut toks = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            toks.extend(line.split_whitespace().map(str::to_string));
        }
        Tokens { toks, pos: 0 }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(String::as_str)
    }

    fn next(&mut self) -> Result<&str> {
        let t = self.toks.get(self.pos).ok_or_else(|| Error::Parse("unexpected end".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, kw: &str) -> Result<()> {
        let t = self.next()?;
        if t != kw {
            return Err(Error::Parse(format!("expected `{kw}`, found `{t}`")));
        }
        Ok(())
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.next()?;
        t.parse().map_err(|_| Error::Parse(format!("expected a number, found `{t}`")))
    }
}

/// Parses a group file: prime, order, optional labels, and the row-major
/// multiplication table.
pub fn parse_group(text: &str) -> Result<Arc<FiniteGroup>> {
    let mut t = Tokens::new(text);
    t.expect("prime")?;
    let _p: u64 = t.num()?;
    t.expect("order")?;
    let order: usize = t.num()?;
    let labels = if t.peek() == Some("labels") {
        t.next()?;
        let mut l = Vec::with_capacity(order);
        for _ in 0..order {
            l.push(t.next()?.to_string());
        }
        Some(l)
    } else {
        None
    };
    t.expect("table")?;
    let mut table = Vec::with_capacity(order * order);
    for _ in 0..order * order {
        table.push(t.num::<u16>()?);
    }
    FiniteGroup::from_table(table, labels)
}

pub fn write_group(g: &FiniteGroup) -> String {
    let mut out = String::new();
    out.push_str(&format!("prime {}\norder {}\n", g.prime(), g.order()));
    if let Some(labels) = g.labels() {
        out.push_str("labels ");
        out.push_str(&labels.join(" "));
        out.push('\n');
    }
    out.push_str("table\n");
    for r in 0..g.order() {
        let row: Vec<String> =
            (0..g.order()).map(|c| g.table()[r * g.order() + c].to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn parse_int_table(t: &mut Tokens, degree: usize, rank: usize) -> Result<IntCochainTable> {
    let count: usize = t.num()?;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut tuple = Vec::with_capacity(degree);
        for _ in 0..degree {
            tuple.push(t.num::<u16>()?);
        }
        let mut values = Vec::with_capacity(rank);
        for _ in 0..rank {
            values.push(t.num::<i64>()?);
        }
        entries.push((tuple, values));
    }
    Ok(IntCochainTable { degree, entries })
}

fn write_int_table(out: &mut String, kw: &str, table: &IntCochainTable) {
    out.push_str(&format!("{kw} {}\n", table.entries.len()));
    for (tuple, values) in &table.entries {
        let t: Vec<String> = tuple.iter().map(u16::to_string).collect();
        let v: Vec<String> = values.iter().map(i64::to_string).collect();
        out.push_str(&format!("{} {}\n", t.join(" "), v.join(" ")));
    }
}

/// Parses a pro-p family data file.
pub fn parse_propdata(text: &str) -> Result<ProPData> {
    let mut t = Tokens::new(text);
    t.expect("family")?;
    let name = t.next()?.to_string();
    t.expect("prime")?;
    let prime: u64 = t.num()?;
    t.expect("rank")?;
    let rank: usize = t.num()?;
    t.expect("e")?;
    let e_offset: u32 = t.num()?;
    let slack = if t.peek() == Some("slack") {
        t.next()?;
        t.num()?
    } else {
        8
    };
    t.expect("group")?;
    let order: usize = t.num()?;
    let labels = if t.peek() == Some("labels") {
        t.next()?;
        let mut l = Vec::with_capacity(order);
        for _ in 0..order {
            l.push(t.next()?.to_string());
        }
        Some(l)
    } else {
        None
    };
    let mut table = Vec::with_capacity(order * order);
    for _ in 0..order * order {
        table.push(t.num::<u16>()?);
    }
    let group = FiniteGroup::from_table(table, labels)?;
    if group.prime() != prime {
        return Err(Error::Parse(format!(
            "declared prime {prime} does not divide the group order {}",
            group.order()
        )));
    }
    t.expect("action")?;
    let mut action = Vec::with_capacity(order);
    for _ in 0..order {
        let mut mat = Vec::with_capacity(rank);
        for _ in 0..rank {
            let mut row = Vec::with_capacity(rank);
            for _ in 0..rank {
                row.push(t.num::<i64>()?);
            }
            mat.push(row);
        }
        action.push(mat);
    }
    t.expect("rho")?;
    let rho = parse_int_table(&mut t, 2, rank)?;
    t.expect("eta")?;
    let eta = parse_int_table(&mut t, 3, rank)?;
    let eta_anchor = if t.peek() == Some("eta_anchor") {
        t.next()?;
        Some(parse_int_table(&mut t, 2, rank)?)
    } else {
        None
    };
    Ok(ProPData { name, prime, group, rank, action, rho, eta, e_offset, eta_anchor, slack })
}

pub fn write_propdata(data: &ProPData) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "family {}\nprime {}\nrank {}\ne {}\nslack {}\n",
        data.name, data.prime, data.rank, data.e_offset, data.slack
    ));
    out.push_str(&format!("group {}\n", data.group.order()));
    if let Some(labels) = data.group.labels() {
        out.push_str("labels ");
        out.push_str(&labels.join(" "));
        out.push('\n');
    }
    for r in 0..data.group.order() {
        let row: Vec<String> = (0..data.group.order())
            .map(|c| data.group.table()[r * data.group.order() + c].to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("action\n");
    for mat in &data.action {
        for row in mat {
            let r: Vec<String> = row.iter().map(i64::to_string).collect();
            out.push_str(&r.join(" "));
            out.push('\n');
        }
    }
    write_int_table(&mut out, "rho", &data.rho);
    write_int_table(&mut out, "eta", &data.eta);
    if let Some(anchor) = &data.eta_anchor {
        write_int_table(&mut out, "eta_anchor", anchor);
    }
    out
}

/// A standalone cochain document: degree, precision, rank, group order,
/// and the table entries.
pub fn parse_cochain_table(text: &str) -> Result<(IntCochainTable, u32, usize)> {
    let mut t = Tokens::new(text);
    t.expect("cochain")?;
    t.expect("degree")?;
    let degree: usize = t.num()?;
    t.expect("precision")?;
    let precision: u32 = t.num()?;
    t.expect("rank")?;
    let rank: usize = t.num()?;
    t.expect("entries")?;
    let table = parse_int_table(&mut t, degree, rank)?;
    Ok((table, precision, rank))
}

pub fn write_cochain_table(table: &IntCochainTable, precision: u32, rank: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "cochain\ndegree {}\nprecision {precision}\nrank {rank}\n",
        table.degree
    ));
    write_int_table(&mut out, "entries", table);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::fixtures;

    #[test]
    fn propdata_roundtrip() {
        for name in fixtures::NAMES {
            let data = fixtures::by_name(name).unwrap();
            let text = write_propdata(&data);
            let parsed = parse_propdata(&text).unwrap();
            assert_eq!(parsed.name, data.name);
            assert_eq!(parsed.rho, data.rho);
            assert_eq!(parsed.eta, data.eta);
            assert_eq!(parsed.eta_anchor, data.eta_anchor);
            assert_eq!(parsed.action, data.action);
            assert_eq!(parsed.group.table(), data.group.table());
            // the parsed data validates and produces the same group
            parsed.validate().unwrap();
        }
    }

    #[test]
    fn group_roundtrip_with_comments() {
        let data = fixtures::dihedral2();
        let mut text = write_group(&data.group);
        text.insert_str(0, "# klein four group\n");
        let g = parse_group(&text).unwrap();
        assert_eq!(g.table(), data.group.table());
        assert_eq!(g.label(1), "a");
    }

    #[test]
    fn cochain_roundtrip() {
        let data = fixtures::quaternion2();
        let text = write_cochain_table(&data.eta, 12, 1);
        let (table, precision, rank) = parse_cochain_table(&text).unwrap();
        assert_eq!(table, data.eta);
        assert_eq!((precision, rank), (12, 1));
    }

    #[test]
    fn parse_error_includes_context() {
        let err = parse_group("prime 2\norder nope").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}

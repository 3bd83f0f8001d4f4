use std::fmt::Write as _;

use super::{BranchRecord, BusKind, BusRecord, GenRecord, NetworkCase};
use crate::error::{Error, Result};

struct Table {
    rows: Vec<(usize, Vec<f64>)>,
}

/// Parse a matrix-table case file (`mpc.bus`, `mpc.gen`, `mpc.branch`,
/// `mpc.gencost`, `mpc.baseMVA`).
pub fn parse_case(text: &str) -> Result<NetworkCase> {
    let mut base_mva = None;
    let mut bus = None;
    let mut gen = None;
    let mut branch = None;
    let mut gencost = None;

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l)));
    while let Some((lineno, line)) = lines.next() {
        let line = line.trim();
        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some((name, rhs)) = rest.split_once('=') else {
            continue;
        };
        let name = name.trim();
        let rhs = rhs.trim();
        if let Some(body) = rhs.strip_prefix('[') {
            let table = read_table(lineno, body, &mut lines)?;
            match name {
                "bus" => bus = Some(table),
                "gen" => gen = Some(table),
                "branch" => branch = Some(table),
                "gencost" => gencost = Some(table),
                _ => {}
            }
        } else if name == "baseMVA" {
            let v = rhs.trim_end_matches(';').trim();
            base_mva = Some(parse_num(lineno, v)?);
        }
    }

    let base_mva = base_mva.ok_or(Error::MissingTable("baseMVA"))?;
    let bus = bus.ok_or(Error::MissingTable("bus"))?;
    let gen = gen.ok_or(Error::MissingTable("gen"))?;
    let branch = branch.ok_or(Error::MissingTable("branch"))?;
    let gencost = gencost.ok_or(Error::MissingTable("gencost"))?;

    let buses = bus
        .rows
        .iter()
        .map(|(ln, r)| bus_row(*ln, r))
        .collect::<Result<Vec<_>>>()?;
    let branches = branch
        .rows
        .iter()
        .map(|(ln, r)| branch_row(*ln, r))
        .collect::<Result<Vec<_>>>()?;

    let ng = gen.rows.len();
    if gencost.rows.len() != ng && gencost.rows.len() != 2 * ng {
        let line = gencost.rows.first().map_or(0, |r| r.0);
        return Err(Error::Parse {
            line,
            msg: format!("gencost has {} rows for {} generators", gencost.rows.len(), ng),
        });
    }
    let gens = gen
        .rows
        .iter()
        .zip(&gencost.rows)
        .map(|((ln, g), (cln, c))| gen_row(*ln, g, *cln, c))
        .collect::<Result<Vec<_>>>()?;

    NetworkCase::new(base_mva, buses, gens, branches)
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn read_table<'a>(
    start: usize,
    first: &'a str,
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<Table> {
    let mut rows = Vec::new();
    let mut pending: Vec<f64> = Vec::new();
    let mut pending_line = start;
    let mut chunk = Some((start, first));
    while let Some((ln, text)) = chunk.take() {
        let (body, done) = match text.find(']') {
            Some(i) => (&text[..i], true),
            None => (text, false),
        };
        for (k, piece) in body.split(';').enumerate() {
            if k > 0 && !pending.is_empty() {
                rows.push((pending_line, std::mem::take(&mut pending)));
            }
            for tok in piece.split(|c: char| c.is_whitespace() || c == ',') {
                if tok.is_empty() {
                    continue;
                }
                if pending.is_empty() {
                    pending_line = ln;
                }
                pending.push(parse_num(ln, tok)?);
            }
        }
        // a newline also terminates a row
        if !pending.is_empty() {
            rows.push((pending_line, std::mem::take(&mut pending)));
        }
        if done {
            return Ok(Table { rows });
        }
        chunk = lines.next();
    }
    Err(Error::Parse {
        line: start,
        msg: "unterminated table".into(),
    })
}

fn parse_num(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: `{tok}`"),
    })
}

fn need(line: usize, row: &[f64], n: usize, what: &str) -> Result<()> {
    if row.len() < n {
        return Err(Error::Parse {
            line,
            msg: format!("{what} row has {} columns, expected at least {n}", row.len()),
        });
    }
    Ok(())
}

fn as_id(line: usize, v: f64) -> Result<u32> {
    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
        return Err(Error::Parse {
            line,
            msg: format!("invalid identifier {v}"),
        });
    }
    Ok(v as u32)
}

fn bus_row(line: usize, r: &[f64]) -> Result<BusRecord> {
    need(line, r, 13, "bus")?;
    let kind = BusKind::from_code(r[1] as i64)
        .filter(|_| r[1].fract() == 0.0)
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("unsupported bus type {}", r[1]),
        })?;
    Ok(BusRecord {
        id: as_id(line, r[0])?,
        kind,
        p_d: r[2],
        q_d: r[3],
        shunt_g: r[4],
        shunt_b: r[5],
        area: as_id(line, r[6])?,
        vm: r[7],
        va: r[8],
        base_kv: r[9],
        zone: as_id(line, r[10])?,
        v_max: r[11],
        v_min: r[12],
    })
}

fn gen_row(line: usize, g: &[f64], cline: usize, c: &[f64]) -> Result<GenRecord> {
    need(line, g, 10, "gen")?;
    need(cline, c, 4, "gencost")?;
    if c[0] != 2.0 {
        return Err(Error::Parse {
            line: cline,
            msg: "only polynomial cost models (type 2) are supported".into(),
        });
    }
    let n = c[3];
    if n.fract() != 0.0 || !(0.0..=3.0).contains(&n) || c.len() < 4 + n as usize {
        return Err(Error::Parse {
            line: cline,
            msg: format!("polynomial cost with {n} coefficients is not supported"),
        });
    }
    let coef = &c[4..4 + n as usize];
    // coefficients run from highest degree to the constant term
    let mut abc = [0.0; 3];
    for (k, &v) in coef.iter().rev().enumerate() {
        abc[2 - k] = v;
    }
    Ok(GenRecord {
        bus: as_id(line, g[0])?,
        p_g: g[1],
        q_g: g[2],
        q_max: g[3],
        q_min: g[4],
        v_set: g[5],
        m_base: g[6],
        in_service: g[7] > 0.0,
        p_max: g[8],
        p_min: g[9],
        cost_a: abc[0],
        cost_b: abc[1],
        cost_c: abc[2],
    })
}

fn branch_row(line: usize, r: &[f64]) -> Result<BranchRecord> {
    need(line, r, 11, "branch")?;
    Ok(BranchRecord {
        from: as_id(line, r[0])?,
        to: as_id(line, r[1])?,
        r: r[2],
        x: r[3],
        b_ch: r[4],
        s_rating: r[5],
        rate_b: r[6],
        rate_c: r[7],
        tap: if r[8] == 0.0 { 1.0 } else { r[8] },
        shift: r[9],
        in_service: r[10] > 0.0,
        ang_min: r.get(11).copied().unwrap_or(-360.0),
        ang_max: r.get(12).copied().unwrap_or(360.0),
    })
}

/// Canonical text form of a case. Parsing the output reproduces the case
/// field for field.
pub fn serialize_case(case: &NetworkCase) -> String {
    let mut s = String::new();
    s.push_str("function mpc = case\n");
    s.push_str("mpc.version = '2';\n\n");
    let _ = writeln!(s, "mpc.baseMVA = {};\n", case.base_mva);

    s.push_str("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n");
    s.push_str("mpc.bus = [\n");
    for b in &case.buses {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};",
            b.id,
            b.kind.code(),
            b.p_d,
            b.q_d,
            b.shunt_g,
            b.shunt_b,
            b.area,
            b.vm,
            b.va,
            b.base_kv,
            b.zone,
            b.v_max,
            b.v_min
        );
    }
    s.push_str("];\n\n");

    s.push_str("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n");
    s.push_str("mpc.gen = [\n");
    for g in &case.gens {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};",
            g.bus,
            g.p_g,
            g.q_g,
            g.q_max,
            g.q_min,
            g.v_set,
            g.m_base,
            u8::from(g.in_service),
            g.p_max,
            g.p_min
        );
    }
    s.push_str("];\n\n");

    s.push_str("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n");
    s.push_str("mpc.branch = [\n");
    for br in &case.branches {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};",
            br.from,
            br.to,
            br.r,
            br.x,
            br.b_ch,
            br.s_rating,
            br.rate_b,
            br.rate_c,
            br.tap,
            br.shift,
            u8::from(br.in_service),
            br.ang_min,
            br.ang_max
        );
    }
    s.push_str("];\n\n");

    s.push_str("%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0\n");
    s.push_str("mpc.gencost = [\n");
    for g in &case.gens {
        let _ = writeln!(s, "\t2\t0\t0\t3\t{}\t{}\t{};", g.cost_a, g.cost_b, g.cost_c);
    }
    s.push_str("];\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcase::CASE14;

    pub(crate) const TWO_BUS: &str = "\
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
    2 1 50 10 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 100 -100 1 100 1 200 0;
];
mpc.branch = [
    1 2 0.01 0.1 0.02 80 0 0 0 0 1 -360 360;
];
mpc.gencost = [
    2 0 0 3 0.02 15 1;
];
";

    #[test]
    fn two_bus_round_trip() {
        let c = parse_case(TWO_BUS).unwrap();
        assert_eq!(c.n_bus(), 2);
        assert_eq!(c.branches[0].s_rating, 80.0);
        assert_eq!(c.branches[0].tap, 1.0);
        assert_eq!(c.gens[0].cost_b, 15.0);
        let again = parse_case(&serialize_case(&c)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn case14_round_trip() {
        let c = parse_case(CASE14).unwrap();
        assert_eq!(parse_case(&serialize_case(&c)).unwrap(), c);
    }

    #[test]
    fn rejects_two_slacks() {
        let bad = TWO_BUS.replace("2 1 50 10", "2 3 50 10");
        let err = parse_case(&bad).unwrap_err();
        assert!(err.to_string().contains("multiple slack"), "{err}");
    }

    #[test]
    fn rejects_unknown_bus_and_bad_rows() {
        let bad = TWO_BUS.replace("1 2 0.01 0.1", "1 7 0.01 0.1");
        assert!(matches!(parse_case(&bad), Err(Error::UnknownBus(7))));

        let short = TWO_BUS.replace("1 0 0 100 -100 1 100 1 200 0;", "1 0 0 100;");
        assert!(matches!(parse_case(&short), Err(Error::Parse { .. })));

        let junk = TWO_BUS.replace("0.02 15 1", "0.02 fifteen 1");
        assert!(matches!(parse_case(&junk), Err(Error::Parse { .. })));

        let missing = TWO_BUS.replace("mpc.gencost", "mpc.other");
        assert!(matches!(parse_case(&missing), Err(Error::MissingTable("gencost"))));
    }

    #[test]
    fn short_polynomials_are_right_aligned() {
        let lin = TWO_BUS.replace("2 0 0 3 0.02 15 1", "2 0 0 2 12 3");
        let c = parse_case(&lin).unwrap();
        assert_eq!((c.gens[0].cost_a, c.gens[0].cost_b, c.gens[0].cost_c), (0.0, 12.0, 3.0));
    }
}

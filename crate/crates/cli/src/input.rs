//! Line-oriented definitions format.
//!
//! A definitions file is a sequence of blocks; `#` starts a comment and
//! blank lines separate nothing.  Numbers are arbitrary-precision integers.
//!
//! ```text
//! group NAME          # then `gens N`, optional `rels` + one relator line
//! gens 2              # per relation (N coefficients), then `end`
//! rels
//! 4 0
//! 0 6
//! end
//!
//! morphism NAME : SRC -> DST
//! matrix              # one line per SRC generator: its image over DST
//! 1 0
//! end
//!
//! tower NAME          # one of the pattern forms, or an explicit list
//! pattern mult 2      # pattern factorial | pattern const GROUP
//! end
//!
//! tower NAME
//! stages G0 G1 G2     # groups defined earlier
//! maps f01 f12        # morphisms G0->G1, G1->G2
//! end
//! ```
//!
//! Names must be defined before they are referenced.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use defect_core::fpab::{FpGroup, GroupRef, Morphism};
use defect_core::tower::Tower;
use defect_core::{Int, IntMatrix};

pub struct Definitions {
    pub groups: BTreeMap<String, GroupRef>,
    pub morphisms: BTreeMap<String, Morphism>,
    pub towers: BTreeMap<String, Tower>,
}

impl Definitions {
    pub fn group(&self, name: &str) -> Result<&GroupRef, ParseError> {
        self.groups
            .get(name)
            .ok_or_else(|| ParseError { line: 0, msg: format!("unknown group `{name}`") })
    }

    pub fn morphism(&self, name: &str) -> Result<&Morphism, ParseError> {
        self.morphisms
            .get(name)
            .ok_or_else(|| ParseError { line: 0, msg: format!("unknown morphism `{name}`") })
    }

    pub fn tower(&self, name: &str) -> Result<&Tower, ParseError> {
        self.towers
            .get(name)
            .ok_or_else(|| ParseError { line: 0, msg: format!("unknown tower `{name}`") })
    }
}

#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}: {}", self.line, self.msg)
        }
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, msg: msg.into() })
}

/// Numbered, comment-stripped, nonblank lines.
struct Lines<'a> {
    rows: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        let rows = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let body = raw.split('#').next().unwrap_or("");
                let tokens: Vec<&str> = body.split_whitespace().collect();
                if tokens.is_empty() {
                    None
                } else {
                    Some((i + 1, tokens))
                }
            })
            .collect();
        Lines { rows, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &[&'a str])> {
        let row = self.rows.get(self.pos)?;
        self.pos += 1;
        Some((row.0, &row.1))
    }

    fn last_line(&self) -> usize {
        self.rows.last().map(|r| r.0).unwrap_or(0)
    }
}

fn parse_int(line: usize, tok: &str) -> Result<Int, ParseError> {
    Int::from_str(tok).map_err(|_| ParseError { line, msg: format!("`{tok}` is not an integer") })
}

fn parse_usize(line: usize, tok: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>()
        .map_err(|_| ParseError { line, msg: format!("`{tok}` is not a nonnegative count") })
}

fn int_row(line: usize, tokens: &[&str], expect: usize) -> Result<Vec<Int>, ParseError> {
    if tokens.len() != expect {
        return err(line, format!("expected {expect} integers, found {}", tokens.len()));
    }
    tokens.iter().map(|t| parse_int(line, t)).collect()
}

pub fn parse(text: &str) -> Result<Definitions, ParseError> {
    let mut lines = Lines::new(text);
    let mut defs = Definitions {
        groups: BTreeMap::new(),
        morphisms: BTreeMap::new(),
        towers: BTreeMap::new(),
    };
    while let Some((line, tokens)) = lines.next() {
        let tokens = tokens.to_vec();
        match tokens[0] {
            "group" => parse_group(line, &tokens, &mut lines, &mut defs)?,
            "morphism" => parse_morphism(line, &tokens, &mut lines, &mut defs)?,
            "tower" => parse_tower(line, &tokens, &mut lines, &mut defs)?,
            other => return err(line, format!("expected a block header, found `{other}`")),
        }
    }
    Ok(defs)
}

fn block_name(
    line: usize,
    tokens: &[&str],
    kind: &str,
    defs: &Definitions,
) -> Result<String, ParseError> {
    if tokens.len() < 2 {
        return err(line, format!("`{kind}` needs a name"));
    }
    let name = tokens[1].to_string();
    if defs.groups.contains_key(&name)
        || defs.morphisms.contains_key(&name)
        || defs.towers.contains_key(&name)
    {
        return err(line, format!("`{name}` is already defined"));
    }
    Ok(name)
}

fn parse_group(
    header: usize,
    tokens: &[&str],
    lines: &mut Lines<'_>,
    defs: &mut Definitions,
) -> Result<(), ParseError> {
    let name = block_name(header, tokens, "group", defs)?;
    if tokens.len() != 2 {
        return err(header, "`group NAME` takes nothing else on its line");
    }
    let Some((gline, gtok)) = lines.next() else {
        return err(lines.last_line(), "unterminated group block");
    };
    if gtok.len() != 2 || gtok[0] != "gens" {
        return err(gline, "expected `gens N`");
    }
    let ngens = parse_usize(gline, gtok[1])?;
    let mut relators: Vec<Vec<Int>> = Vec::new();
    let mut in_rels = false;
    loop {
        let Some((line, tok)) = lines.next() else {
            return err(lines.last_line(), "unterminated group block");
        };
        match tok[0] {
            "end" if tok.len() == 1 => break,
            "rels" if tok.len() == 1 && !in_rels => in_rels = true,
            _ if in_rels => relators.push(int_row(line, tok, ngens)?),
            other => return err(line, format!("expected `rels` or `end`, found `{other}`")),
        }
    }
    // Relators are written one per line; the presentation stores them as
    // columns.
    let mut rels = IntMatrix::zeros(ngens, relators.len());
    for (j, row) in relators.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            rels[(i, j)] = v.clone();
        }
    }
    let group = FpGroup::new(ngens, rels)
        .map_err(|e| ParseError { line: header, msg: e.to_string() })?;
    defs.groups.insert(name, group);
    Ok(())
}

fn parse_morphism(
    header: usize,
    tokens: &[&str],
    lines: &mut Lines<'_>,
    defs: &mut Definitions,
) -> Result<(), ParseError> {
    // Accept `morphism f : A -> B` with or without spaces around `:`/`->`.
    let joined = tokens[1..].join(" ").replace("->", " -> ").replace(':', " : ");
    let parts: Vec<&str> = joined.split_whitespace().collect();
    if parts.len() != 5 || parts[1] != ":" || parts[3] != "->" {
        return err(header, "expected `morphism NAME : SRC -> DST`");
    }
    let name = block_name(header, &["morphism", parts[0]], "morphism", defs)?;
    let src = defs
        .group(parts[2])
        .map_err(|e| ParseError { line: header, msg: e.msg })?
        .clone();
    let dst = defs
        .group(parts[4])
        .map_err(|e| ParseError { line: header, msg: e.msg })?
        .clone();
    let Some((mline, mtok)) = lines.next() else {
        return err(lines.last_line(), "unterminated morphism block");
    };
    if mtok.len() != 1 || mtok[0] != "matrix" {
        return err(mline, "expected `matrix`");
    }
    let mut images: Vec<Vec<Int>> = Vec::new();
    loop {
        let Some((line, tok)) = lines.next() else {
            return err(lines.last_line(), "unterminated morphism block");
        };
        if tok.len() == 1 && tok[0] == "end" {
            break;
        }
        images.push(int_row(line, tok, dst.ngens())?);
    }
    if images.len() != src.ngens() {
        return err(
            header,
            format!("{} image rows for {} source generators", images.len(), src.ngens()),
        );
    }
    // One line per source generator; the mapping matrix stores images as
    // columns.
    let mut mat = IntMatrix::zeros(dst.ngens(), src.ngens());
    for (i, row) in images.iter().enumerate() {
        for (d, v) in row.iter().enumerate() {
            mat[(d, i)] = v.clone();
        }
    }
    let m = Morphism::new(&src, &dst, mat)
        .map_err(|e| ParseError { line: header, msg: e.to_string() })?;
    defs.morphisms.insert(name, m);
    Ok(())
}

fn parse_tower(
    header: usize,
    tokens: &[&str],
    lines: &mut Lines<'_>,
    defs: &mut Definitions,
) -> Result<(), ParseError> {
    let name = block_name(header, tokens, "tower", defs)?;
    if tokens.len() != 2 {
        return err(header, "`tower NAME` takes nothing else on its line");
    }
    let Some((bline, btok)) = lines.next() else {
        return err(lines.last_line(), "unterminated tower block");
    };
    let btok = btok.to_vec();
    let tower = match btok[0] {
        "pattern" => {
            let t = match btok.get(1).copied() {
                Some("mult") => {
                    if btok.len() != 3 {
                        return err(bline, "expected `pattern mult C`");
                    }
                    let c = parse_int(bline, btok[2])?;
                    Tower::mult(&c, 1).map_err(|e| ParseError { line: bline, msg: e.to_string() })?
                }
                Some("factorial") => {
                    if btok.len() != 2 {
                        return err(bline, "expected `pattern factorial`");
                    }
                    Tower::factorial(1)
                }
                Some("const") => {
                    if btok.len() != 3 {
                        return err(bline, "expected `pattern const GROUP`");
                    }
                    let g = defs
                        .group(btok[2])
                        .map_err(|e| ParseError { line: bline, msg: e.msg })?;
                    Tower::constant(g, 1)
                }
                _ => return err(bline, "expected `mult C`, `factorial` or `const GROUP`"),
            };
            expect_end(lines)?;
            t
        }
        "stages" => {
            if btok.len() < 2 {
                return err(bline, "`stages` needs at least one group name");
            }
            let mut stages = Vec::with_capacity(btok.len() - 1);
            for g in &btok[1..] {
                stages.push(
                    defs.group(g).map_err(|e| ParseError { line: bline, msg: e.msg })?.clone(),
                );
            }
            let transitions = if stages.len() == 1 {
                expect_end(lines)?;
                Vec::new()
            } else {
                let Some((mline, mtok)) = lines.next() else {
                    return err(lines.last_line(), "unterminated tower block");
                };
                if mtok[0] != "maps" || mtok.len() != stages.len() {
                    return err(
                        mline,
                        format!("expected `maps` with {} morphism names", stages.len() - 1),
                    );
                }
                let mut ms = Vec::with_capacity(mtok.len() - 1);
                for m in &mtok[1..] {
                    ms.push(
                        defs.morphism(m)
                            .map_err(|e| ParseError { line: mline, msg: e.msg })?
                            .clone(),
                    );
                }
                expect_end(lines)?;
                ms
            };
            Tower::from_stages(stages, transitions)
                .map_err(|e| ParseError { line: header, msg: e.to_string() })?
        }
        other => return err(bline, format!("expected `pattern` or `stages`, found `{other}`")),
    };
    defs.towers.insert(name, tower);
    Ok(())
}

fn expect_end(lines: &mut Lines<'_>) -> Result<(), ParseError> {
    match lines.next() {
        Some((_, tok)) if tok.len() == 1 && tok[0] == "end" => Ok(()),
        Some((line, tok)) => err(line, format!("expected `end`, found `{}`", tok[0])),
        None => err(lines.last_line(), "unterminated block"),
    }
}

/// A raw whitespace-separated matrix: one row per line.
pub fn parse_matrix(text: &str) -> Result<IntMatrix, ParseError> {
    let mut rows: Vec<Vec<Int>> = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let w = *width.get_or_insert(tokens.len());
        rows.push(int_row(i + 1, &tokens, w)?);
    }
    if rows.is_empty() {
        return err(0, "the matrix file has no rows");
    }
    let mut m = IntMatrix::zeros(rows.len(), rows[0].len());
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m[(r, c)] = v.clone();
        }
    }
    Ok(m)
}

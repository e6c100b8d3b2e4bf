//! Plain-text truss geometry.
//!
//! ```text
//! # comment
//! NODES
//! 1  2.0  2.0  0.0        id x y z (m), ids 1..N in order
//! BARS
//! 1  1  5                 id node node
//! GROUPS
//! 1  3                    bar group (1..4)
//! SUPPORTS
//! 1  1 1 1                node fixed-x fixed-y fixed-z
//! TIP
//! 49                      node carrying the lateral force
//! HANDS
//! 50                      nodes carrying the vertical loads
//! ```
//!
//! Tokens are whitespace separated and `#` starts a comment. Every bar needs
//! a GROUPS line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use alr_core::truss::{Support, TrussModel, GROUPS};

use crate::error::{io_err, BenchError, Result};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Nodes,
    Bars,
    Groups,
    Supports,
    Tip,
    Hands,
}

pub fn read_geometry(path: &Path) -> Result<TrussModel> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_geometry(&text, path)
}

/// Parses geometry text; `origin` only labels error messages.
pub fn parse_geometry(text: &str, origin: &Path) -> Result<TrussModel> {
    let err = |line: usize, msg: String| BenchError::Parse { path: PathBuf::from(origin), line, msg };
    let mut section = Section::None;
    let mut nodes = Vec::new();
    let mut bars = Vec::new();
    let mut groups: Vec<Option<usize>> = Vec::new();
    let mut supports = Vec::new();
    let mut tip = None;
    let mut hands = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let next = match body.to_ascii_uppercase().as_str() {
            "NODES" => Some(Section::Nodes),
            "BARS" => Some(Section::Bars),
            "GROUPS" => Some(Section::Groups),
            "SUPPORTS" => Some(Section::Supports),
            "TIP" => Some(Section::Tip),
            "HANDS" => Some(Section::Hands),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(ln, format!("expected an integer, found `{s}`")));
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(ln, format!("expected a number, found `{s}`")));
        let want = |n: usize| if tok.len() == n { Ok(()) } else { Err(err(ln, format!("expected {n} fields, found {}", tok.len()))) };
        // 1-based node id to index
        let node = |s: &str, count: usize| -> Result<usize> {
            let k = int(s)?;
            if k == 0 || k > count {
                return Err(err(ln, format!("node {k} not defined")));
            }
            Ok(k - 1)
        };
        match section {
            Section::None => return Err(err(ln, "data before the first section header".into())),
            Section::Nodes => {
                want(4)?;
                if int(tok[0])? != nodes.len() + 1 {
                    return Err(err(ln, format!("node ids must run 1..N in order, expected {}", nodes.len() + 1)));
                }
                nodes.push([num(tok[1])?, num(tok[2])?, num(tok[3])?]);
            }
            Section::Bars => {
                want(3)?;
                if int(tok[0])? != bars.len() + 1 {
                    return Err(err(ln, format!("bar ids must run 1..N in order, expected {}", bars.len() + 1)));
                }
                bars.push([node(tok[1], nodes.len())?, node(tok[2], nodes.len())?]);
                groups.push(None);
            }
            Section::Groups => {
                want(2)?;
                let b = int(tok[0])?;
                if b == 0 || b > bars.len() {
                    return Err(err(ln, format!("bar {b} not defined")));
                }
                let g = int(tok[1])?;
                if g == 0 || g > GROUPS {
                    return Err(err(ln, format!("group {g} outside 1..{GROUPS}")));
                }
                if groups[b - 1].replace(g - 1).is_some() {
                    return Err(err(ln, format!("bar {b} grouped twice")));
                }
            }
            Section::Supports => {
                want(4)?;
                let n = node(tok[0], nodes.len())?;
                let mut fixed = [false; 3];
                for k in 0..3 {
                    fixed[k] = match tok[k + 1] {
                        "0" => false,
                        "1" => true,
                        s => return Err(err(ln, format!("support flag must be 0 or 1, found `{s}`"))),
                    };
                }
                supports.push(Support { node: n, fixed });
            }
            Section::Tip => {
                want(1)?;
                if tip.replace(node(tok[0], nodes.len())?).is_some() {
                    return Err(err(ln, "only one tip node is allowed".into()));
                }
            }
            Section::Hands => {
                for t in tok {
                    hands.push(node(t, nodes.len())?);
                }
            }
        }
    }
    let end = text.lines().count();
    let groups = groups
        .into_iter()
        .enumerate()
        .map(|(b, g)| g.ok_or_else(|| err(end, format!("bar {} has no group", b + 1))))
        .collect::<Result<Vec<_>>>()?;
    let tip = tip.ok_or_else(|| err(end, "missing TIP section".into()))?;
    let model = TrussModel { nodes, bars, groups, supports, tip, hands };
    model.validate()?;
    Ok(model)
}

/// Writes a model in the text format; parsing the result gives the model back.
pub fn format_geometry(model: &TrussModel, comment: &str) -> String {
    let mut s = String::new();
    for line in comment.lines() {
        let _ = writeln!(s, "# {line}");
    }
    s.push_str("NODES\n");
    for (i, p) in model.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", i + 1, p[0], p[1], p[2]);
    }
    s.push_str("BARS\n");
    for (i, b) in model.bars.iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i + 1, b[0] + 1, b[1] + 1);
    }
    s.push_str("GROUPS\n");
    for (i, g) in model.groups.iter().enumerate() {
        let _ = writeln!(s, "{} {}", i + 1, g + 1);
    }
    s.push_str("SUPPORTS\n");
    for sp in &model.supports {
        let f = sp.fixed.map(|v| v as u8);
        let _ = writeln!(s, "{} {} {} {}", sp.node + 1, f[0], f[1], f[2]);
    }
    let _ = writeln!(s, "TIP\n{}", model.tip + 1);
    s.push_str("HANDS\n");
    for h in &model.hands {
        let _ = writeln!(s, "{}", h + 1);
    }
    s
}

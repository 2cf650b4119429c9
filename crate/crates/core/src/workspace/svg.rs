//! Straight-line SVG subset: `path`, `polygon` and `rect` elements with
//! absolute or relative coordinates. `polyline` is accepted when it closes.

use std::path::Path;

use super::{Workspace, WorkspaceError};
use crate::geometry::Vec2;

pub fn load_workspace(path: &Path, robot_radius: f64) -> Result<Workspace, WorkspaceError> {
    let text = std::fs::read_to_string(path).map_err(|source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_svg_workspace(&text, robot_radius)
}

pub fn parse_svg_workspace(text: &str, robot_radius: f64) -> Result<Workspace, WorkspaceError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| WorkspaceError::Malformed(e.to_string()))?;
    let mut rings = Vec::new();
    for (element, node) in doc.descendants().filter(|n| n.is_element()).enumerate() {
        match node.tag_name().name() {
            "path" => {
                let d = node
                    .attribute("d")
                    .ok_or_else(|| WorkspaceError::Malformed(format!("path element #{element} has no 'd'")))?;
                rings.extend(parse_path_data(d, element)?);
            }
            "polygon" | "polyline" => {
                let pts = node.attribute("points").unwrap_or("");
                let nums = parse_numbers(pts)?;
                if nums.len() % 2 != 0 {
                    return Err(WorkspaceError::Malformed(format!(
                        "odd coordinate count in element #{element}"
                    )));
                }
                let mut ring: Vec<Vec2> = nums.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
                if node.tag_name().name() == "polyline" {
                    if ring.len() < 2 || ring.first() != ring.last() {
                        return Err(WorkspaceError::OpenPath { element });
                    }
                    ring.pop();
                }
                rings.push(ring);
            }
            "rect" => {
                let attr = |k: &str| -> Result<f64, WorkspaceError> {
                    node.attribute(k).map_or(Ok(0.0), |s| {
                        s.trim()
                            .trim_end_matches("px")
                            .parse()
                            .map_err(|_| WorkspaceError::Malformed(format!("bad rect attribute {k}='{s}'")))
                    })
                };
                let (x, y, w, h) = (attr("x")?, attr("y")?, attr("width")?, attr("height")?);
                rings.push(vec![
                    Vec2::new(x, y),
                    Vec2::new(x + w, y),
                    Vec2::new(x + w, y + h),
                    Vec2::new(x, y + h),
                ]);
            }
            _ => {}
        }
    }
    if rings.is_empty() {
        return Err(WorkspaceError::NoClosedPath);
    }
    Workspace::from_rings(rings, robot_radius)
}

fn parse_numbers(s: &str) -> Result<Vec<f64>, WorkspaceError> {
    let mut lex = Lexer { s: s.as_bytes(), i: 0 };
    let mut out = Vec::new();
    while let Some(x) = lex.number()? {
        out.push(x);
    }
    lex.skip_sep();
    if lex.i != lex.s.len() {
        return Err(WorkspaceError::Malformed(format!("unexpected text in point list: '{s}'")));
    }
    Ok(out)
}

struct Lexer<'a> {
    s: &'a [u8],
    i: usize,
}

impl Lexer<'_> {
    fn skip_sep(&mut self) {
        while self.i < self.s.len() && (self.s[self.i].is_ascii_whitespace() || self.s[self.i] == b',') {
            self.i += 1;
        }
    }

    fn peek_command(&mut self) -> Option<u8> {
        self.skip_sep();
        self.s.get(self.i).copied().filter(|c| c.is_ascii_alphabetic() && *c != b'e' && *c != b'E')
    }

    /// Next number, or `None` if the next token is not numeric.
    fn number(&mut self) -> Result<Option<f64>, WorkspaceError> {
        self.skip_sep();
        let start = self.i;
        let s = self.s;
        let mut j = self.i;
        if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
            j += 1;
        }
        let mut digits = false;
        while j < s.len() && s[j].is_ascii_digit() {
            j += 1;
            digits = true;
        }
        if j < s.len() && s[j] == b'.' {
            j += 1;
            while j < s.len() && s[j].is_ascii_digit() {
                j += 1;
                digits = true;
            }
        }
        if !digits {
            return Ok(None);
        }
        if j < s.len() && (s[j] == b'e' || s[j] == b'E') {
            let mut k = j + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                while k < s.len() && s[k].is_ascii_digit() {
                    k += 1;
                }
                j = k;
            }
        }
        let txt = std::str::from_utf8(&s[start..j]).expect("ascii");
        self.i = j;
        txt.parse()
            .map(Some)
            .map_err(|_| WorkspaceError::Malformed(format!("bad number '{txt}'")))
    }

    fn expect_number(&mut self, cmd: u8) -> Result<f64, WorkspaceError> {
        self.number()?.ok_or_else(|| {
            WorkspaceError::Malformed(format!("command '{}' is missing a coordinate", cmd as char))
        })
    }
}

/// Splits path data into closed rings.
fn parse_path_data(d: &str, element: usize) -> Result<Vec<Vec<Vec2>>, WorkspaceError> {
    let mut lex = Lexer { s: d.as_bytes(), i: 0 };
    let mut rings = Vec::new();
    let mut current: Vec<Vec2> = Vec::new();
    let mut closed = true;
    let mut pen = Vec2::zeros();
    let mut start = Vec2::zeros();
    let mut cmd: Option<u8> = None;
    let finish = |current: &mut Vec<Vec2>, closed: bool, rings: &mut Vec<Vec<Vec2>>| -> Result<(), WorkspaceError> {
        if current.len() > 1 {
            if !closed {
                if current.first() == current.last() {
                    current.pop();
                } else {
                    return Err(WorkspaceError::OpenPath { element });
                }
            }
            rings.push(std::mem::take(current));
        }
        current.clear();
        Ok(())
    };
    loop {
        if let Some(c) = lex.peek_command() {
            lex.i += 1;
            cmd = Some(c);
            match c {
                b'Z' | b'z' => {
                    finish(&mut current, true, &mut rings)?;
                    closed = true;
                    pen = start;
                    continue;
                }
                b'M' | b'm' => {
                    finish(&mut current, closed, &mut rings)?;
                }
                b'L' | b'l' | b'H' | b'h' | b'V' | b'v' => {}
                c if b"CcSsQqTtAa".contains(&c) => {
                    return Err(WorkspaceError::CurvedPrimitive { command: c as char })
                }
                c => {
                    return Err(WorkspaceError::Malformed(format!("unknown path command '{}'", c as char)))
                }
            }
        } else if lex.i >= lex.s.len() {
            break;
        }
        let Some(c) = cmd else {
            return Err(WorkspaceError::Malformed("path data must start with a command".into()));
        };
        let rel = c.is_ascii_lowercase();
        let base = if rel { pen } else { Vec2::zeros() };
        match c.to_ascii_uppercase() {
            b'M' => {
                let p = base + Vec2::new(lex.expect_number(c)?, lex.expect_number(c)?);
                pen = p;
                start = p;
                current = vec![p];
                closed = false;
                // further coordinate pairs are implicit line-tos
                cmd = Some(if rel { b'l' } else { b'L' });
            }
            b'L' => {
                let p = base + Vec2::new(lex.expect_number(c)?, lex.expect_number(c)?);
                pen = p;
                current.push(p);
                closed = false;
            }
            b'H' => {
                let x = lex.expect_number(c)?;
                pen = Vec2::new(if rel { pen.x + x } else { x }, pen.y);
                current.push(pen);
                closed = false;
            }
            b'V' => {
                let y = lex.expect_number(c)?;
                pen = Vec2::new(pen.x, if rel { pen.y + y } else { y });
                current.push(pen);
                closed = false;
            }
            _ => {
                return Err(WorkspaceError::Malformed(format!(
                    "unexpected coordinates after '{}'",
                    c as char
                )))
            }
        }
    }
    finish(&mut current, closed, &mut rings)?;
    Ok(rings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polygon_signed_area;

    fn svg(body: &str) -> String {
        format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="10" height="10">{body}</svg>"#)
    }

    #[test]
    fn unit_square_path() {
        let ws = parse_svg_workspace(&svg(r#"<path d="M0 0 L1 0 L1 1 L0 1 Z"/>"#), 0.05).unwrap();
        assert_eq!(ws.outer.len(), 4);
        assert!(ws.holes.is_empty());
        assert!(polygon_signed_area(&ws.outer) > 0.0);
    }

    #[test]
    fn relative_and_compact_syntax() {
        let ws = parse_svg_workspace(&svg(r#"<path d="m0,0h2v2h-2z"/>"#), 0.1).unwrap();
        assert!((ws.area() - 4.0).abs() < 1e-12);
        let nums = parse_numbers("1-2.5.5e1,3").unwrap();
        assert_eq!(nums, vec![1.0, -2.5, 5.0, 3.0]);
    }

    #[test]
    fn square_with_hole_from_two_elements() {
        let doc = svg(r#"<rect x="0" y="0" width="4" height="4"/><polygon points="1,1 1,2 2,2 2,1"/>"#);
        let ws = parse_svg_workspace(&doc, 0.05).unwrap();
        assert_eq!(ws.holes.len(), 1);
        assert!(polygon_signed_area(&ws.holes[0]) < 0.0);
    }

    #[test]
    fn hole_in_same_path() {
        let doc = svg(r#"<path d="M0 0 L4 0 L4 4 L0 4 Z M1 1 L2 1 L2 2 L1 2 Z"/>"#);
        let ws = parse_svg_workspace(&doc, 0.05).unwrap();
        assert_eq!(ws.holes.len(), 1);
    }

    #[test]
    fn open_and_curved_paths_rejected() {
        assert!(matches!(
            parse_svg_workspace(&svg(r#"<path d="M0 0 L1 0 L1 1"/>"#), 0.1),
            Err(WorkspaceError::OpenPath { .. })
        ));
        assert!(matches!(
            parse_svg_workspace(&svg(r#"<path d="M0 0 C1 0 1 1 0 1 Z"/>"#), 0.1),
            Err(WorkspaceError::CurvedPrimitive { command: 'C' })
        ));
        assert!(matches!(parse_svg_workspace("<svg", 0.1), Err(WorkspaceError::Malformed(_))));
        assert!(matches!(parse_svg_workspace(&svg(""), 0.1), Err(WorkspaceError::NoClosedPath)));
    }

    #[test]
    fn self_intersecting_path_reports_segments() {
        let err = parse_svg_workspace(&svg(r#"<path d="M0 0 L1 1 L1 0 L0 1 Z"/>"#), 0.1).unwrap_err();
        assert!(matches!(err, WorkspaceError::SelfIntersecting { ring: 0, first: 0, second: 2 }));
        assert!(err.to_string().contains("segment 0 crosses segment 2"));
    }
}

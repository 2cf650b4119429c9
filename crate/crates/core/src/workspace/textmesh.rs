//! Plain-text mesh input: `V F`, then `V` lines `x y`, then `F` lines
//! `i j k` (0-based, CCW).

use std::collections::HashMap;
use std::path::Path;

use super::{Workspace, WorkspaceError};
use crate::geometry::{polygon_signed_area, Vec2};
use crate::trimesh::{TriMesh, VertexTag};

pub fn load_text_mesh(path: &Path, robot_radius: f64) -> Result<(Workspace, TriMesh), WorkspaceError> {
    let text = std::fs::read_to_string(path).map_err(|source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_text_mesh(&text, robot_radius)
}

/// Parses a text mesh; the workspace is the union of its triangles and every
/// boundary vertex becomes a fixed polygon corner.
pub fn parse_text_mesh(text: &str, robot_radius: f64) -> Result<(Workspace, TriMesh), WorkspaceError> {
    let bad = |m: String| WorkspaceError::Malformed(m);
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| bad("empty mesh file".into()))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad header '{header}'"))))
        .collect::<Result<_, _>>()?;
    let [nv, nf] = counts[..] else {
        return Err(bad(format!("header must be 'V F', got '{header}'")));
    };
    let mut pos = Vec::with_capacity(nv);
    for i in 0..nv {
        let l = lines.next().ok_or_else(|| bad(format!("missing vertex line {i}")))?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad vertex line '{l}'"))))
            .collect::<Result<_, _>>()?;
        let [x, y] = xy[..] else {
            return Err(bad(format!("vertex line needs 2 numbers: '{l}'")));
        };
        pos.push(Vec2::new(x, y));
    }
    let mut tris = Vec::with_capacity(nf);
    for i in 0..nf {
        let l = lines.next().ok_or_else(|| bad(format!("missing triangle line {i}")))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad triangle line '{l}'"))))
            .collect::<Result<_, _>>()?;
        let [a, b, c] = ids[..] else {
            return Err(bad(format!("triangle line needs 3 indices: '{l}'")));
        };
        if a.max(b).max(c) >= nv {
            return Err(bad(format!("triangle {i} references a missing vertex")));
        }
        tris.push([a, b, c]);
    }
    if lines.next().is_some() {
        return Err(bad("trailing data after triangles".into()));
    }

    // boundary half-edges: directed triangle edges without a reverse partner
    let mut directed = HashMap::new();
    for t in &tris {
        for i in 0..3 {
            directed.insert((t[i], t[(i + 1) % 3]), ());
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut starts: Vec<usize> = Vec::new();
    for t in &tris {
        for i in 0..3 {
            let (u, v) = (t[i], t[(i + 1) % 3]);
            if !directed.contains_key(&(v, u)) {
                if next.insert(u, v).is_some() {
                    return Err(bad(format!("boundary is pinched at vertex {u}")));
                }
                starts.push(u);
            }
        }
    }
    starts.sort_unstable();
    let mut loops: Vec<Vec<usize>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &s in &starts {
        if seen.contains(&s) {
            continue;
        }
        let mut lp = vec![s];
        seen.insert(s);
        let mut u = next[&s];
        while u != s {
            if !seen.insert(u) {
                return Err(bad(format!("boundary is pinched at vertex {u}")));
            }
            lp.push(u);
            u = *next.get(&u).ok_or_else(|| bad("open boundary".into()))?;
        }
        loops.push(lp);
    }
    if loops.is_empty() {
        return Err(WorkspaceError::NoClosedPath);
    }
    // outer loop first (largest positive area), holes after
    loops.sort_by(|a, b| {
        let area = |l: &Vec<usize>| polygon_signed_area(&l.iter().map(|&i| pos[i]).collect::<Vec<_>>());
        area(b).total_cmp(&area(a))
    });
    let rings: Vec<Vec<Vec2>> = loops.iter().map(|l| l.iter().map(|&i| pos[i]).collect()).collect();
    let ws = Workspace::new(rings[0].clone(), rings[1..].to_vec(), robot_radius)?;
    // the workspace normalizes orientation in the same way, so ring order and
    // vertex order match `loops`
    let mut tags = vec![VertexTag::Interior; nv];
    for (ri, l) in loops.iter().enumerate() {
        for (k, &v) in l.iter().enumerate() {
            tags[v] = VertexTag::Corner { ring: ri, index: k };
        }
    }
    let mesh = TriMesh::from_triangles(&pos, &tags, &tris, ws.ring_list(), robot_radius)
        .map_err(|e| bad(e.to_string()))?;
    if ws.ring_list() != rings {
        return Err(bad("boundary loops are not simple".into()));
    }
    Ok((ws, mesh))
}

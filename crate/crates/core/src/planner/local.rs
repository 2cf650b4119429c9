//! Breadth-first search over robot arrangements inside a small region.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use super::Direction;

const HOLE: u64 = 15;
/// Largest number of vertices a region may have (4-bit labels in a u64).
pub(crate) const MAX_REGION: usize = 16;
const MAX_STATES: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LocalMove {
    Cyclic { cell: usize, direction: Direction },
    Vacant { from: usize, to: usize },
}

/// Region structure in local vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct RegionShape {
    /// Corners of each cell fully inside the region, in corner order.
    pub cells: Vec<[usize; 3]>,
    /// Undirected edges between region vertices.
    pub edges: Vec<(usize, usize)>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    shape: RegionShape,
    holes: u16,
    u: usize,
    v: usize,
}

/// Memoized shortest move sequences that exchange the contents of two
/// region vertices and restore everything else.
#[derive(Debug, Default)]
pub(crate) struct SwapCache {
    map: HashMap<Key, Option<Vec<LocalMove>>>,
}

impl SwapCache {
    pub fn solve(&mut self, shape: &RegionShape, holes: &[bool], u: usize, v: usize) -> Option<Vec<LocalMove>> {
        let mask = holes.iter().enumerate().fold(0u16, |m, (i, &h)| if h { m | 1 << i } else { m });
        let key = Key { shape: shape.clone(), holes: mask, u, v };
        match self.map.entry(key) {
            Entry::Occupied(e) => e.get().clone(),
            Entry::Vacant(e) => e.insert(search(shape, holes, u, v)).clone(),
        }
    }
}

fn get(s: u64, i: usize) -> u64 {
    (s >> (4 * i)) & 0xf
}

fn set(s: u64, i: usize, x: u64) -> u64 {
    (s & !(0xf << (4 * i))) | (x << (4 * i))
}

fn successors(shape: &RegionShape, s: u64, out: &mut Vec<(u64, LocalMove)>) {
    out.clear();
    for (ci, c) in shape.cells.iter().enumerate() {
        for direction in [Direction::Forward, Direction::Backward] {
            let mut t = s;
            for i in 0..3 {
                t = set(t, c[(i + direction.step()) % 3], get(s, c[i]));
            }
            if t != s {
                out.push((t, LocalMove::Cyclic { cell: ci, direction }));
            }
        }
    }
    for &(a, b) in &shape.edges {
        for (x, y) in [(a, b), (b, a)] {
            if get(s, x) != HOLE && get(s, y) == HOLE {
                let t = set(set(s, y, get(s, x)), x, HOLE);
                out.push((t, LocalMove::Vacant { from: x, to: y }));
            }
        }
    }
}

/// Shortest sequence exchanging the contents of `u` and `v`; every robot is
/// distinct, so all other robots return to their vertices.
fn search(shape: &RegionShape, holes: &[bool], u: usize, v: usize) -> Option<Vec<LocalMove>> {
    assert!(shape.size <= MAX_REGION && holes.len() == shape.size);
    let mut start = 0u64;
    let mut token = 0;
    for (i, &h) in holes.iter().enumerate() {
        let label = if h {
            HOLE
        } else {
            token += 1;
            token - 1
        };
        start = set(start, i, label);
    }
    let target = set(set(start, u, get(start, v)), v, get(start, u));
    if target == start {
        return Some(Vec::new());
    }
    let mut parent: HashMap<u64, (u64, LocalMove)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut succ = Vec::new();
    parent.insert(start, (start, LocalMove::Vacant { from: 0, to: 0 }));
    while let Some(s) = queue.pop_front() {
        successors(shape, s, &mut succ);
        for &(t, mv) in &succ {
            if parent.contains_key(&t) {
                continue;
            }
            parent.insert(t, (s, mv));
            if t == target {
                let mut moves = Vec::new();
                let mut x = t;
                while x != start {
                    let (p, m) = parent[&x];
                    moves.push(m);
                    x = p;
                }
                moves.reverse();
                return Some(moves);
            }
            queue.push_back(t);
        }
        if parent.len() > MAX_STATES {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> RegionShape {
        RegionShape { cells: vec![[0, 1, 2]], edges: vec![(0, 1), (1, 2), (0, 2)], size: 3 }
    }

    fn apply(shape: &RegionShape, labels: &mut [Option<usize>], m: LocalMove) {
        match m {
            LocalMove::Cyclic { cell, direction } => {
                let c = shape.cells[cell];
                let old: Vec<_> = c.iter().map(|&i| labels[i]).collect();
                for i in 0..3 {
                    labels[c[(i + direction.step()) % 3]] = old[i];
                }
            }
            LocalMove::Vacant { from, to } => {
                assert!(labels[to].is_none() && labels[from].is_some());
                labels[to] = labels[from].take();
            }
        }
    }

    #[test]
    fn two_robots_in_a_loop_swap_in_two_moves() {
        // a rotation keeps the cyclic order and a vacant move shifts one
        // robot, so no single move exchanges two robots
        let mut cache = SwapCache::default();
        let moves = cache.solve(&triangle(), &[false, false, true], 0, 1).unwrap();
        assert_eq!(moves.len(), 2);
        let mut labels = vec![Some(0), Some(1), None];
        for m in moves {
            apply(&triangle(), &mut labels, m);
        }
        assert_eq!(labels, vec![Some(1), Some(0), None]);
    }

    #[test]
    fn full_region_without_hole_cannot_swap() {
        // cyclic moves alone only rotate, never transpose
        let mut cache = SwapCache::default();
        assert!(cache.solve(&triangle(), &[false, false, false], 0, 1).is_none());
    }

    #[test]
    fn two_cells_with_one_hole_swap_across() {
        // cells {0,1,2} and {3,4,5}, joined 0-3 and 1-5
        let shape = RegionShape {
            cells: vec![[0, 1, 2], [3, 4, 5]],
            edges: vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 5)],
            size: 6,
        };
        let mut cache = SwapCache::default();
        let holes = [false, false, false, false, true, false];
        let moves = cache.solve(&shape, &holes, 0, 3).unwrap();
        let mut labels: Vec<Option<usize>> = (0..6).map(|i| if holes[i] { None } else { Some(i) }).collect();
        for m in moves {
            apply(&shape, &mut labels, m);
        }
        assert_eq!(labels, vec![Some(3), Some(1), Some(2), Some(0), None, Some(5)]);
    }
}

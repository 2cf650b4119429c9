//! Space-time scheduling of robot exchanges between two sibling sub-graphs.
//!
//! Leaves hold two kinds of robots: misplaced ones, whose goals lie in the
//! other sub-graph, and placed ones (spare vacancies count as placed robots
//! here). A counts ledger records both numbers for
//! every leaf at the start of every round. Each selection ferries a
//! misplaced robot of each side, leaf by leaf, to a pair of adjacent leaves
//! across the cut, where the two are exchanged.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ScheduleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Token {
    Misplaced,
    Placed,
}

/// Two leaves exchanging one robot each during a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafSwap {
    pub a: usize,
    pub b: usize,
    pub a_gives: Token,
    pub b_gives: Token,
}

/// Input of one scheduling problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapProblem {
    /// Leaf adjacency over all leaves (sorted lists).
    pub adjacency: Vec<Vec<usize>>,
    /// Side of every leaf: `Some(false)` or `Some(true)`, `None` if the
    /// leaf takes no part.
    pub side: Vec<Option<bool>>,
    pub misplaced: Vec<usize>,
    pub placed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapPlan {
    pub rounds: Vec<Vec<LeafSwap>>,
}

const INITIAL_HORIZON: usize = 2;

struct Ledger {
    /// `mis[i][t]`, `ok[i][t]`: counts of leaf `i` at the start of round `t`;
    /// index `horizon` is the final state.
    mis: Vec<Vec<i64>>,
    ok: Vec<Vec<i64>>,
    busy: Vec<Vec<bool>>,
    horizon: usize,
}

impl Ledger {
    fn new(p: &SwapProblem) -> Self {
        let h = INITIAL_HORIZON;
        Ledger {
            mis: p.misplaced.iter().map(|&m| vec![m as i64; h + 1]).collect(),
            ok: p.placed.iter().map(|&m| vec![m as i64; h + 1]).collect(),
            busy: vec![vec![false; h]; p.misplaced.len()],
            horizon: h,
        }
    }

    fn extend(&mut self) {
        for v in self.mis.iter_mut().chain(self.ok.iter_mut()) {
            let last = *v.last().unwrap();
            v.push(last);
        }
        for b in &mut self.busy {
            b.push(false);
        }
        self.horizon += 1;
    }

    fn remaining(&self) -> i64 {
        self.mis.iter().map(|m| m[self.horizon]).sum()
    }

    /// Leaf `i` can hand a misplaced robot away in round `t` without any
    /// later count going negative.
    fn can_swap_out(&self, i: usize, t: usize) -> bool {
        self.mis[i][t..].iter().all(|&m| m >= 1)
    }

    fn add(v: &mut [i64], after: usize, delta: i64) {
        for x in &mut v[after + 1..] {
            *x += delta;
        }
    }

    /// Backward search from leaf `a` in round `t` over same-side leaves.
    /// Returns the hops as `(giver, receiver, round)` in time order.
    fn find_chain(&self, p: &SwapProblem, a: usize, t: usize) -> Option<Vec<(usize, usize, usize)>> {
        let side = p.side[a];
        let n = p.side.len();
        // parent[(leaf, round)] = (next leaf, next round)
        let mut parent: Vec<Vec<Option<usize>>> = vec![vec![None; t + 1]; n];
        let mut seen = vec![vec![false; t + 1]; n];
        seen[a][t] = true;
        let mut queue = VecDeque::from([(a, t)]);
        while let Some((i, s)) = queue.pop_front() {
            if self.can_swap_out(i, s) {
                let mut hops = Vec::new();
                let (mut x, mut r) = (i, s);
                while let Some(next) = parent[x][r] {
                    hops.push((x, next, r));
                    x = next;
                    r += 1;
                }
                return Some(hops);
            }
            if s == 0 || self.busy[i][s - 1] {
                continue;
            }
            // i gives a placed robot in round s - 1 and still holds one in round s
            if self.ok[i][s - 1] < 1 || self.ok[i][s] < 1 {
                continue;
            }
            for &j in &p.adjacency[i] {
                if p.side[j] != side || seen[j][s - 1] || self.busy[j][s - 1] {
                    continue;
                }
                seen[j][s - 1] = true;
                parent[j][s - 1] = Some(i);
                queue.push_back((j, s - 1));
            }
        }
        None
    }

    fn commit_chain(&mut self, hops: &[(usize, usize, usize)], rounds: &mut [Vec<LeafSwap>]) {
        for &(giver, receiver, s) in hops {
            Self::add(&mut self.mis[giver], s, -1);
            Self::add(&mut self.ok[giver], s, 1);
            Self::add(&mut self.mis[receiver], s, 1);
            Self::add(&mut self.ok[receiver], s, -1);
            self.busy[giver][s] = true;
            self.busy[receiver][s] = true;
            rounds[s].push(LeafSwap { a: giver, b: receiver, a_gives: Token::Misplaced, b_gives: Token::Placed });
        }
    }

    fn commit_cross(&mut self, a: usize, b: usize, t: usize, rounds: &mut [Vec<LeafSwap>]) {
        for x in [a, b] {
            Self::add(&mut self.mis[x], t, -1);
            Self::add(&mut self.ok[x], t, 1);
            self.busy[x][t] = true;
        }
        rounds[t].push(LeafSwap { a, b, a_gives: Token::Misplaced, b_gives: Token::Misplaced });
    }
}

/// Schedules leaf exchanges until every robot is on its goal side.
pub fn schedule_swaps(p: &SwapProblem) -> Result<SwapPlan, ScheduleError> {
    let n = p.side.len();
    let mut cross: Vec<(usize, usize)> = Vec::new();
    for a in 0..n {
        if p.side[a] != Some(false) {
            continue;
        }
        for &b in &p.adjacency[a] {
            if p.side[b] == Some(true) {
                cross.push((a, b));
            }
        }
    }
    let mut ledger = Ledger::new(p);
    let mut rounds: Vec<Vec<LeafSwap>> = vec![Vec::new(); ledger.horizon];
    let side_total = |s: bool| -> usize { (0..n).filter(|&i| p.side[i] == Some(s)).map(|i| p.misplaced[i]).sum() };
    if side_total(false) != side_total(true) {
        return Err(ScheduleError::Unbalanced);
    }
    if side_total(false) > 0 && cross.is_empty() {
        return Err(ScheduleError::Disconnected);
    }
    // every selection removes two misplaced robots; each round added without
    // a selection brings the free tail one round closer to a feasible chain
    let limit = 4 * (side_total(false) + 1) * (n + 2) + 16;
    while ledger.remaining() > 0 {
        let mut found = false;
        for t in 0..ledger.horizon {
            for &(a, b) in &cross {
                if ledger.busy[a][t] || ledger.busy[b][t] {
                    continue;
                }
                let Some(ca) = ledger.find_chain(p, a, t) else { continue };
                let Some(cb) = ledger.find_chain(p, b, t) else { continue };
                ledger.commit_chain(&ca, &mut rounds);
                ledger.commit_chain(&cb, &mut rounds);
                ledger.commit_cross(a, b, t, &mut rounds);
                found = true;
            }
        }
        if !found {
            if ledger.horizon >= limit {
                return Err(ScheduleError::NoProgress);
            }
            ledger.extend();
            rounds.push(Vec::new());
        }
    }
    while rounds.last().is_some_and(Vec::is_empty) {
        rounds.pop();
    }
    Ok(SwapPlan { rounds })
}

/// Replays a plan on the counts and checks it: each leaf joins at most one
/// exchange per round, exchanges join adjacent leaves (same side for
/// ferries, opposite sides for crossings), every handed-over robot is
/// present, and all robots end on their goal side.
pub fn audit_plan(p: &SwapProblem, plan: &SwapPlan) -> Result<(), String> {
    let mut mis: Vec<i64> = p.misplaced.iter().map(|&x| x as i64).collect();
    let mut ok: Vec<i64> = p.placed.iter().map(|&x| x as i64).collect();
    for (t, round) in plan.rounds.iter().enumerate() {
        let mut used = vec![false; p.side.len()];
        let (mut dm, mut dok) = (vec![0i64; mis.len()], vec![0i64; ok.len()]);
        for s in round {
            for x in [s.a, s.b] {
                if used[x] {
                    return Err(format!("round {t}: leaf {x} joins two exchanges"));
                }
                used[x] = true;
            }
            if p.adjacency[s.a].binary_search(&s.b).is_err() {
                return Err(format!("round {t}: leaves {} and {} are not adjacent", s.a, s.b));
            }
            let same = p.side[s.a] == p.side[s.b];
            let expected = if same { (Token::Misplaced, Token::Placed) } else { (Token::Misplaced, Token::Misplaced) };
            if p.side[s.a].is_none() || p.side[s.b].is_none() || (s.a_gives, s.b_gives) != expected {
                return Err(format!("round {t}: malformed exchange {s:?}"));
            }
            for (x, y, give) in [(s.a, s.b, s.a_gives), (s.b, s.a, s.b_gives)] {
                let have = if give == Token::Misplaced { mis[x] } else { ok[x] };
                if have < 1 {
                    return Err(format!("round {t}: leaf {x} has no {give:?} robot"));
                }
                match give {
                    Token::Misplaced => dm[x] -= 1,
                    Token::Placed => dok[x] -= 1,
                }
                // a misplaced robot crossing the cut becomes placed
                let arrives_misplaced = give == Token::Misplaced && p.side[x] == p.side[y];
                if arrives_misplaced {
                    dm[y] += 1;
                } else {
                    dok[y] += 1;
                }
            }
        }
        for i in 0..mis.len() {
            mis[i] += dm[i];
            ok[i] += dok[i];
            if mis[i] < 0 || ok[i] < 0 {
                return Err(format!("round {t}: negative count at leaf {i}"));
            }
        }
    }
    if mis.iter().any(|&m| m != 0) {
        return Err("robots remain on the wrong side".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| [i.wrapping_sub(1), i + 1].into_iter().filter(|&j| j < n).collect()).collect()
    }

    #[test]
    fn nothing_to_do() {
        let p = SwapProblem {
            adjacency: chain(2),
            side: vec![Some(false), Some(true)],
            misplaced: vec![0, 0],
            placed: vec![5, 5],
        };
        assert!(schedule_swaps(&p).unwrap().rounds.is_empty());
    }

    #[test]
    fn single_exchange() {
        let p = SwapProblem {
            adjacency: chain(2),
            side: vec![Some(false), Some(true)],
            misplaced: vec![1, 1],
            placed: vec![4, 4],
        };
        let plan = schedule_swaps(&p).unwrap();
        assert_eq!(plan.rounds.len(), 1);
        assert_eq!(plan.rounds[0].len(), 1);
        audit_plan(&p, &plan).unwrap();
    }

    #[test]
    fn ferries_along_a_chain() {
        // leaves 0-1-2 | 3-4-5, misplaced robots far from the cut
        let p = SwapProblem {
            adjacency: chain(6),
            side: vec![Some(false), Some(false), Some(false), Some(true), Some(true), Some(true)],
            misplaced: vec![2, 0, 0, 0, 0, 2],
            placed: vec![3, 5, 5, 5, 5, 3],
        };
        let plan = schedule_swaps(&p).unwrap();
        audit_plan(&p, &plan).unwrap();
        let crossings = plan.rounds.iter().flatten().filter(|s| s.b_gives == Token::Misplaced).count();
        assert_eq!(crossings, 2);
    }

    #[test]
    fn audit_catches_double_booking() {
        let p = SwapProblem {
            adjacency: chain(3),
            side: vec![Some(false), Some(true), Some(true)],
            misplaced: vec![2, 1, 1],
            placed: vec![3, 4, 4],
        };
        let bad = SwapPlan {
            rounds: vec![vec![
                LeafSwap { a: 0, b: 1, a_gives: Token::Misplaced, b_gives: Token::Misplaced },
                LeafSwap { a: 1, b: 2, a_gives: Token::Misplaced, b_gives: Token::Placed },
            ]],
        };
        assert!(audit_plan(&p, &bad).is_err());
    }

    #[test]
    fn unbalanced_sides_rejected() {
        let p = SwapProblem {
            adjacency: chain(2),
            side: vec![Some(false), Some(true)],
            misplaced: vec![1, 0],
            placed: vec![4, 5],
        };
        assert_eq!(schedule_swaps(&p), Err(ScheduleError::Unbalanced));
    }
}

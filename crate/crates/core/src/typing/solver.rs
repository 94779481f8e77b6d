//! Weighted constraint optimisation over three-valued domains.
//!
//! Every variable ranges over a subset of the three lattice elements,
//! stored as a bitmask over their positions. Constraints are unary or
//! binary relations. Search is depth-first branch and bound in variable
//! order, trying values in preference order, with arc consistency at every
//! node and the sum of per-variable minimum costs as the lower bound. The
//! first minimum found wins ties, which makes the result deterministic.

use std::collections::{HashSet, VecDeque};

/// Why a constraint exists, for violation reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tag {
    pub rule: String,
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.location.is_empty() {
            write!(f, "{}: {}", self.rule, self.message)
        } else {
            write!(f, "{} at `{}`: {}", self.rule, self.location, self.message)
        }
    }
}

/// Relation between the values of two variables, indexed by lattice
/// position.
pub type Rel = [[bool; 3]; 3];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Con {
    Unary(usize, u8),
    Binary(usize, usize, Rel),
    Fail,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub names: Vec<String>,
    /// Allowed values per variable.
    pub domains: Vec<u8>,
    /// Variables whose value counts towards the cost.
    pub costed: Vec<bool>,
    pub cons: Vec<Con>,
    pub tags: Vec<Tag>,
    /// Cost of each value, by lattice position.
    pub costs: [u32; 3],
    /// Positions in the order values are tried.
    pub preference: [usize; 3],
    seen: HashSet<Con>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<usize>,
    pub cost: u32,
}

pub const FULL: u8 = 0b111;

pub fn mask(positions: impl IntoIterator<Item = usize>) -> u8 {
    positions.into_iter().fold(0, |m, i| m | (1 << i))
}

fn members(m: u8) -> impl Iterator<Item = usize> {
    (0..3).filter(move |i| m & (1 << i) != 0)
}

impl Problem {
    pub fn new(costs: [u32; 3], preference: [usize; 3]) -> Problem {
        Problem {
            names: Vec::new(),
            domains: Vec::new(),
            costed: Vec::new(),
            cons: Vec::new(),
            tags: Vec::new(),
            costs,
            preference,
            seen: HashSet::new(),
        }
    }

    pub fn add_var(&mut self, name: &str, domain: u8, costed: bool) -> usize {
        self.names.push(name.to_string());
        self.domains.push(domain);
        self.costed.push(costed);
        self.names.len() - 1
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Adds a constraint unless an identical one is already present.
    pub fn add(&mut self, c: Con, tag: Tag) {
        let c = match c {
            Con::Binary(a, b, rel) if a == b => Con::Unary(a, mask((0..3).filter(|&i| rel[i][i]))),
            Con::Binary(a, b, rel) if a > b => {
                let mut t = [[false; 3]; 3];
                for (i, row) in t.iter_mut().enumerate() {
                    for (j, cell) in row.iter_mut().enumerate() {
                        *cell = rel[j][i];
                    }
                }
                Con::Binary(b, a, t)
            }
            c => c,
        };
        if matches!(c, Con::Fail) || self.seen.insert(c.clone()) {
            self.cons.push(c);
            self.tags.push(tag);
        }
    }

    pub fn satisfied(&self, c: &Con, values: &[usize]) -> bool {
        match c {
            Con::Unary(a, m) => m & (1 << values[*a]) != 0,
            Con::Binary(a, b, rel) => rel[values[*a]][values[*b]],
            Con::Fail => false,
        }
    }

    /// Tags of the constraints a total assignment violates, domains
    /// included.
    pub fn violations(&self, values: &[usize]) -> Vec<Tag> {
        self.cons
            .iter()
            .zip(&self.tags)
            .filter(|(c, _)| !self.satisfied(c, values))
            .map(|(_, t)| t.clone())
            .collect()
    }

    pub fn cost_of(&self, values: &[usize]) -> u32 {
        values
            .iter()
            .zip(&self.costed)
            .filter(|(_, c)| **c)
            .map(|(v, _)| self.costs[*v])
            .sum()
    }

    fn min_cost(&self, d: u8) -> u32 {
        members(d).map(|i| self.costs[i]).min().unwrap_or(u32::MAX)
    }

    /// Arc consistency; returns the index of a constraint that empties a
    /// domain on failure.
    fn propagate(&self, doms: &mut [u8], adj: &[Vec<usize>], mut queue: VecDeque<usize>) -> Result<(), usize> {
        let mut queued = vec![false; self.cons.len()];
        for &c in &queue {
            queued[c] = true;
        }
        while let Some(ci) = queue.pop_front() {
            queued[ci] = false;
            let changed: Vec<usize> = match &self.cons[ci] {
                Con::Fail => return Err(ci),
                Con::Unary(a, m) => {
                    let nd = doms[*a] & m;
                    if nd == 0 {
                        return Err(ci);
                    }
                    if nd != doms[*a] {
                        doms[*a] = nd;
                        vec![*a]
                    } else {
                        vec![]
                    }
                }
                Con::Binary(a, b, rel) => {
                    let (da, db) = (doms[*a], doms[*b]);
                    let na = mask(members(da).filter(|&x| members(db).any(|y| rel[x][y])));
                    let nb = mask(members(db).filter(|&y| members(na).any(|x| rel[x][y])));
                    if na == 0 || nb == 0 {
                        return Err(ci);
                    }
                    let mut ch = Vec::new();
                    if na != da {
                        doms[*a] = na;
                        ch.push(*a);
                    }
                    if nb != db {
                        doms[*b] = nb;
                        ch.push(*b);
                    }
                    ch
                }
            };
            for v in changed {
                for &c in &adj[v] {
                    if c != ci && !queued[c] {
                        queued[c] = true;
                        queue.push_back(c);
                    }
                }
            }
        }
        Ok(())
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.names.len()];
        for (i, c) in self.cons.iter().enumerate() {
            match c {
                Con::Unary(a, _) => adj[*a].push(i),
                Con::Binary(a, b, _) => {
                    adj[*a].push(i);
                    adj[*b].push(i);
                }
                Con::Fail => {}
            }
        }
        adj
    }

    /// Minimum-cost solution, or the tag of a constraint that fails.
    pub fn solve(&self) -> Result<Solution, Vec<Tag>> {
        self.search(true)
    }

    /// Any solution, without optimising.
    pub fn feasible(&self) -> Option<Solution> {
        self.search(false).ok()
    }

    fn search(&self, optimise: bool) -> Result<Solution, Vec<Tag>> {
        let adj = self.adjacency();
        let mut doms = self.domains.clone();
        if let Some(v) = doms.iter().position(|d| *d == 0) {
            return Err(vec![Tag {
                rule: "DOMAIN".into(),
                location: self.names[v].clone(),
                message: format!("`{}` has no admissible level", self.names[v]),
            }]);
        }
        if let Err(ci) = self.propagate(&mut doms, &adj, (0..self.cons.len()).collect()) {
            return Err(vec![self.tags[ci].clone()]);
        }
        let mut best: Option<Solution> = None;
        self.branch(&doms, &adj, optimise, &mut best);
        best.ok_or_else(|| {
            vec![Tag {
                rule: "INFER".into(),
                location: String::new(),
                message: "no level assignment satisfies every constraint".into(),
            }]
        })
    }

    fn branch(&self, doms: &[u8], adj: &[Vec<usize>], optimise: bool, best: &mut Option<Solution>) -> bool {
        let lb: u32 = doms
            .iter()
            .zip(&self.costed)
            .filter(|(_, c)| **c)
            .map(|(d, _)| self.min_cost(*d))
            .sum();
        if let Some(b) = best {
            if lb >= b.cost {
                return false;
            }
        }
        let Some(v) = doms.iter().position(|d| d.count_ones() > 1) else {
            let values: Vec<usize> = doms.iter().map(|d| d.trailing_zeros() as usize).collect();
            *best = Some(Solution { values, cost: lb });
            return !optimise;
        };
        for &x in &self.preference {
            if doms[v] & (1 << x) == 0 {
                continue;
            }
            let mut next = doms.to_vec();
            next[v] = 1 << x;
            if self.propagate(&mut next, adj, adj[v].iter().copied().collect()).is_ok()
                && self.branch(&next, adj, optimise, best)
            {
                return true;
            }
        }
        false
    }

    /// Exhaustive minimum over all assignments, same tie-break as
    /// [`Problem::solve`]. Exponential; for cross-checking only.
    pub fn brute_force(&self) -> Option<Solution> {
        let order: Vec<Vec<usize>> = self
            .domains
            .iter()
            .map(|d| self.preference.iter().copied().filter(|x| d & (1 << x) != 0).collect())
            .collect();
        if order.iter().any(|o| o.is_empty()) {
            return None;
        }
        let mut idx = vec![0usize; order.len()];
        let mut best: Option<Solution> = None;
        loop {
            let values: Vec<usize> = idx.iter().zip(&order).map(|(i, o)| o[*i]).collect();
            if self.cons.iter().all(|c| self.satisfied(c, &values)) {
                let cost = self.cost_of(&values);
                if best.as_ref().map_or(true, |b| cost < b.cost) {
                    best = Some(Solution { values, cost });
                }
            }
            // Odometer with the last variable fastest, so assignments are
            // visited in the same lexicographic order as the search.
            let mut k = order.len();
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < order[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// A small subset of constraints that is unsatisfiable on its own,
    /// found by deletion. Skipped for large problems.
    pub fn conflict(&self, limit: usize) -> Option<Vec<Tag>> {
        if self.cons.len() > limit || self.feasible().is_some() {
            return None;
        }
        let mut keep: Vec<bool> = vec![true; self.cons.len()];
        for i in 0..self.cons.len() {
            keep[i] = false;
            if self.restricted(&keep).feasible().is_some() {
                keep[i] = true;
            }
        }
        Some(
            self.tags
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(t, _)| t.clone())
                .collect(),
        )
    }

    fn restricted(&self, keep: &[bool]) -> Problem {
        let mut p = Problem::new(self.costs, self.preference);
        p.names = self.names.clone();
        p.domains = self.domains.clone();
        p.costed = self.costed.clone();
        for (i, c) in self.cons.iter().enumerate() {
            if keep[i] {
                p.cons.push(c.clone());
                p.tags.push(self.tags[i].clone());
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag() -> Tag {
        Tag {
            rule: "T".into(),
            location: String::new(),
            message: String::new(),
        }
    }

    fn leq() -> Rel {
        let mut r = [[false; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = i <= j;
            }
        }
        r
    }

    #[test]
    fn cheapest_consistent_assignment() {
        // costs 0, 2, 1 for positions 0, 1, 2, as in the base lattice
        let mut p = Problem::new([0, 2, 1], [0, 2, 1]);
        let a = p.add_var("a", mask([1]), false);
        let b = p.add_var("b", FULL, true);
        p.add(Con::Binary(a, b, leq()), tag());
        let s = p.solve().unwrap();
        assert_eq!(s.values, vec![1, 2]);
        assert_eq!(s.cost, 1);
        assert_eq!(p.brute_force(), Some(s));
    }

    #[test]
    fn failure_is_reported() {
        let mut p = Problem::new([0, 1, 2], [0, 1, 2]);
        let a = p.add_var("a", mask([2]), false);
        let b = p.add_var("b", mask([0]), false);
        p.add(Con::Binary(a, b, leq()), tag());
        assert!(p.solve().is_err());
        assert_eq!(p.conflict(100).unwrap().len(), 1);
    }
}

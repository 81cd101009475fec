//! Ground-truth distances over non-rewarding paths.
//!
//! A path from `s` to `s'` is admissible when every state strictly between
//! the endpoints is non-rewarding and non-terminal. Endpoints themselves may
//! be rewarding.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{PolicyTable, State, TabularMdp};
use crate::scalar::Real;

const UNREACHABLE: u32 = u32::MAX;

/// All-pairs shortest non-rewarding path lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceTable {
    pub fn num_states(&self) -> usize {
        self.n
    }

    /// Transition count of the shortest admissible path, `None` when no such
    /// path exists.
    pub fn get(&self, from: State, to: State) -> Option<u32> {
        let d = self.dist[from * self.n + to];
        (d != UNREACHABLE).then_some(d)
    }

    /// Largest finite distance from `from`.
    pub fn eccentricity(&self, from: State) -> u32 {
        (0..self.n)
            .filter_map(|to| self.get(from, to))
            .max()
            .unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["s".to_string()];
        header.extend((0..self.n).map(|s| s.to_string()));
        w.write_record(&header)?;
        for from in 0..self.n {
            let mut row = vec![from.to_string()];
            row.extend((0..self.n).map(|to| match self.get(from, to) {
                Some(d) => d.to_string(),
                None => "-1".to_string(),
            }));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let n = r.headers()?.len().saturating_sub(1);
        let mut dist = Vec::with_capacity(n * n);
        for record in r.records() {
            let record = record?;
            for field in record.iter().skip(1) {
                let v: i64 = field
                    .parse()
                    .map_err(|_| Error::arg(format!("bad distance entry {field:?}")))?;
                dist.push(if v < 0 { UNREACHABLE } else { v as u32 });
            }
        }
        if dist.len() != n * n {
            return Err(Error::arg("distance CSV is not square"));
        }
        Ok(Self { n, dist })
    }
}

fn expandable<T: Real>(mdp: &TabularMdp<T>, source: State, u: State) -> bool {
    !mdp.is_terminal(u) && (u == source || !mdp.is_rewarding(u))
}

fn bfs_row<T: Real>(mdp: &TabularMdp<T>, source: State) -> Vec<u32> {
    let n = mdp.num_states();
    let mut row = vec![UNREACHABLE; n];
    row[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        if !expandable(mdp, source, u) {
            continue;
        }
        for a in 0..mdp.num_actions() {
            for &(v, p) in mdp.successors(u, a) {
                if p > T::zero() && row[v] == UNREACHABLE {
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    row
}

/// Breadth-first search from every source over the transition support graph,
/// one source per worker.
pub fn shortest_distances<T: Real>(mdp: &TabularMdp<T>) -> DistanceTable {
    let n = mdp.num_states();
    let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|s| bfs_row(mdp, s)).collect();
    DistanceTable {
        n,
        dist: rows.concat(),
    }
}

/// `true` iff `D_nr(s, s2) < k + 1`.
pub fn gt_reachability(table: &DistanceTable, s: State, s2: State, k: usize) -> bool {
    matches!(table.get(s, s2), Some(d) if (d as usize) < k + 1)
}

/// States visited by some action sequence of at most `k` steps from `s`
/// using the single-step model, never continuing past a rewarding or
/// terminal state.
pub fn rollout_reachable_set<T: Real>(mdp: &TabularMdp<T>, s: State, k: usize) -> Vec<bool> {
    let n = mdp.num_states();
    let mut visited = vec![false; n];
    visited[s] = true;
    let mut frontier = vec![s];
    for _ in 0..k {
        let mut next_frontier = vec![false; n];
        for &u in &frontier {
            if !expandable(mdp, s, u) {
                continue;
            }
            for a in 0..mdp.num_actions() {
                for &(v, p) in mdp.successors(u, a) {
                    if p > T::zero() {
                        next_frontier[v] = true;
                    }
                }
            }
        }
        frontier = (0..n).filter(|&v| next_frontier[v]).collect();
        for &v in &frontier {
            visited[v] = true;
        }
        if frontier.is_empty() {
            break;
        }
    }
    visited
}

pub fn rollout_reachability<T: Real>(mdp: &TabularMdp<T>, s: State, s2: State, k: usize) -> bool {
    rollout_reachable_set(mdp, s, k)[s2]
}

/// Policy distance between two states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiDistance<T> {
    /// `None` when the policy never reaches the target along an admissible path.
    pub value: Option<T>,
    pub hit_probability: T,
}

/// Log-base-gamma of the expected `gamma^length` over admissible paths the
/// policy rolls out from `s` until first reaching `s2`, conditioned on
/// reaching it.
///
/// Solves two absorbing-chain systems: `g(u) = E[gamma^T; hit]` and
/// `p(u) = P(hit)`, where leaving the admissible set counts as a miss.
pub fn pi_distance<T: Real>(
    mdp: &TabularMdp<T>,
    policy: &PolicyTable<T>,
    s: State,
    s2: State,
    gamma: T,
) -> Result<PiDistance<T>> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(Error::arg(format!("gamma {gamma} outside (0, 1)")));
    }
    if s == s2 {
        return Ok(PiDistance {
            value: Some(T::zero()),
            hit_probability: T::one(),
        });
    }
    let n = mdp.num_states();
    // States a path may pass through on its way to the target.
    let inner = |v: State| v != s2 && !mdp.is_terminal(v) && !mdp.is_rewarding(v);
    let kernel = |u: State| -> Vec<(State, T)> {
        let probs = policy.probs(u);
        let mut out = Vec::new();
        for (a, &pa) in probs.iter().enumerate() {
            if pa <= T::zero() {
                continue;
            }
            for &(v, p) in mdp.successors(u, a) {
                if p > T::zero() {
                    out.push((v, pa * p));
                }
            }
        }
        out
    };
    let kernels: Vec<Vec<(State, T)>> = (0..n)
        .map(|u| {
            if u == s || inner(u) {
                kernel(u)
            } else {
                Vec::new()
            }
        })
        .collect();
    if mdp.is_terminal(s) {
        return Ok(PiDistance {
            value: None,
            hit_probability: T::zero(),
        });
    }

    if let Some(steps) = deterministic_hit_time(&kernels, s, s2, &inner) {
        return Ok(steps.map_or(
            PiDistance {
                value: None,
                hit_probability: T::zero(),
            },
            |t| PiDistance {
                value: Some(T::from_count(t)),
                hit_probability: T::one(),
            },
        ));
    }

    // Restrict the system to states that can still hit the target, which
    // keeps it non-singular.
    let mut can_hit = vec![false; n];
    let mut changed = true;
    while changed {
        changed = false;
        for u in 0..n {
            if !can_hit[u] && (u == s || inner(u)) {
                let hits = kernels[u]
                    .iter()
                    .any(|&(v, _)| v == s2 || (inner(v) && can_hit[v]));
                if hits {
                    can_hit[u] = true;
                    changed = true;
                }
            }
        }
    }
    if !can_hit[s] {
        return Ok(PiDistance {
            value: None,
            hit_probability: T::zero(),
        });
    }

    let mut unknowns = vec![s];
    unknowns.extend((0..n).filter(|&u| u != s && inner(u) && can_hit[u]));
    let pos = |u: State| unknowns.iter().position(|&x| x == u);
    let m = unknowns.len();
    let solve_with = |discount: T| -> Result<Vec<T>> {
        let mut a = vec![T::zero(); m * m];
        let mut b = vec![T::zero(); m];
        for (i, &u) in unknowns.iter().enumerate() {
            a[i * m + i] = T::one();
            for &(v, p) in &kernels[u] {
                if v == s2 {
                    b[i] += discount * p;
                } else if !inner(v) {
                    continue;
                } else if let Some(j) = pos(v) {
                    a[i * m + j] -= discount * p;
                }
            }
        }
        solve_linear(&mut a, &mut b, m)?;
        Ok(b)
    };
    let g = solve_with(gamma)?;
    let p = solve_with(T::one())?;
    let (g, p) = (g[0], p[0]);
    if !(p > T::zero()) || !(g > T::zero()) {
        return Ok(PiDistance {
            value: None,
            hit_probability: T::zero(),
        });
    }
    Ok(PiDistance {
        value: Some((g / p).ln() / gamma.ln()),
        hit_probability: p.min(T::one()),
    })
}

/// Follows the chain from `s` while every step is certain. Returns `None`
/// if some step is random, `Some(None)` if the chain misses `s2` and
/// `Some(Some(t))` for a hit after `t` steps.
fn deterministic_hit_time<T: Real>(
    kernels: &[Vec<(State, T)>],
    s: State,
    s2: State,
    inner: &impl Fn(State) -> bool,
) -> Option<Option<usize>> {
    let mut seen = vec![false; kernels.len()];
    let mut u = s;
    let mut steps = 0;
    loop {
        let v = match kernels[u].as_slice() {
            [(v, p)] if *p == T::one() => *v,
            _ => return None,
        };
        seen[u] = true;
        steps += 1;
        if v == s2 {
            return Some(Some(steps));
        }
        if !inner(v) || seen[v] {
            return Some(None);
        }
        u = v;
    }
}

/// Gaussian elimination with partial pivoting; the solution replaces `b`.
fn solve_linear<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> Result<()> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .abs()
                    .partial_cmp(&a[j * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty pivot range");
        if !(a[pivot * n + col].abs() > T::epsilon()) {
            return Err(Error::Numerical(format!(
                "singular absorbing-chain system at column {col}"
            )));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= factor * v;
            }
            let v = b[col];
            b[row] -= factor * v;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(())
}

//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use hyperlapse::trace::{DirectionSource, MotionLink, MotionTrace};

pub const BIG: f64 = 1e6;

/// Plain-arithmetic edge cost, written independently of the library.
pub fn oracle_link_total(trace: &MotionTrace, l: &MotionLink, alpha: f64, beta: f64, gamma: f64, c: f64, k: f64) -> f64 {
    let s = match l.source {
        DirectionSource::Missing => BIG,
        DirectionSource::Foe => l.direction[0].hypot(l.direction[1]) * c,
        DirectionSource::Epipole => l.direction[0].hypot(l.direction[1]),
    };
    let dv = l.flow_sum - k;
    let v = dv * dv;
    let mut app = 0.0;
    if let (Some(a), Some(b)) = (trace.histogram(l.src), trace.histogram(l.dst)) {
        for ch in 0..3 {
            let (x, y) = (a.channel(ch), b.channel(ch));
            let mut carry = 0.0;
            let mut work = 0.0;
            for i in 0..x.len() {
                carry += x[i] - y[i];
                work += f64::abs(carry);
            }
            app += work;
        }
    }
    alpha * s + beta * v + gamma * app
}

pub fn oracle_direction_change(a: &MotionLink, b: &MotionLink) -> f64 {
    if a.source == DirectionSource::Missing || b.source == DirectionSource::Missing {
        return BIG;
    }
    (b.direction[0] - a.direction[0]).hypot(b.direction[1] - a.direction[1])
}

/// Sums `weights` from the right, ending in the zero-cost sink edge, which
/// is how a cost-to-go recursion accumulates a path.
pub fn right_fold(weights: &[f64]) -> f64 {
    weights.iter().rev().fold(0.0, |acc, &w| w + acc)
}

/// Exhaustive minimum over every source-to-sink path of a forward DAG.
/// Returns the cost and the lexicographically smallest optimal node sequence.
pub fn brute_force_dag(
    n: usize,
    edge: &dyn Fn(usize, usize) -> Option<f64>,
    source: &dyn Fn(usize) -> Option<f64>,
    sink: &dyn Fn(usize) -> bool,
) -> Option<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut path = Vec::new();
    let mut weights = Vec::new();
    fn visit(
        n: usize,
        edge: &dyn Fn(usize, usize) -> Option<f64>,
        sink: &dyn Fn(usize) -> bool,
        src_w: f64,
        path: &mut Vec<usize>,
        weights: &mut Vec<f64>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let u = *path.last().unwrap();
        if sink(u) {
            let c = src_w + right_fold(weights);
            let better = match best {
                None => true,
                Some((bc, bp)) => c < *bc || (c == *bc && path < bp),
            };
            if better {
                *best = Some((c, path.clone()));
            }
        }
        for v in u + 1..n {
            if let Some(w) = edge(u, v) {
                path.push(v);
                weights.push(w);
                visit(n, edge, sink, src_w, path, weights, best);
                path.pop();
                weights.pop();
            }
        }
    }
    for s in 0..n {
        if let Some(w) = source(s) {
            path.push(s);
            visit(n, edge, sink, w, &mut path, &mut weights, &mut best);
            path.pop();
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSpec {
    pub tau: usize,
    pub d_start: usize,
    pub d_end: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    pub k: f64,
}

/// Optimal first-order frame sequence by exhaustive enumeration.
pub fn first_order_oracle(trace: &MotionTrace, s: &OracleSpec) -> Option<(f64, Vec<usize>)> {
    let n = trace.len();
    brute_force_dag(
        n,
        &|u, v| {
            if v - u > s.tau {
                return None;
            }
            trace
                .link(u, v)
                .map(|l| oracle_link_total(trace, l, s.alpha, s.beta, s.gamma, s.c, s.k))
        },
        &|u| (u < s.d_start).then_some(0.0),
        &|u| u + s.d_end >= n,
    )
}

/// Optimal second-order frame sequence by exhaustive enumeration of frame
/// paths with at least one transition.
pub fn second_order_oracle(trace: &MotionTrace, s: &OracleSpec, alpha2: f64) -> Option<(f64, Vec<usize>)> {
    let n = trace.len();
    let link = |u: usize, v: usize| (v > u && v - u <= s.tau).then(|| trace.link(u, v)).flatten();
    let total = |l: &MotionLink| oracle_link_total(trace, l, s.alpha, s.beta, s.gamma, s.c, s.k);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut stack: Vec<Vec<usize>> = Vec::new();
    for a in 0..n.min(s.d_start) {
        for b in a + 1..n {
            if link(a, b).is_some() {
                stack.push(vec![a, b]);
            }
        }
    }
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if last + s.d_end >= n {
            let first = total(link(path[0], path[1]).unwrap());
            let mut ws = Vec::new();
            for w in path.windows(3) {
                let (l1, l2) = (link(w[0], w[1]).unwrap(), link(w[1], w[2]).unwrap());
                ws.push(total(l2) + alpha2 * oracle_direction_change(l1, l2));
            }
            let c = first + right_fold(&ws);
            let better = match &best {
                None => true,
                Some((bc, bp)) => c < *bc || (c == *bc && path < *bp),
            };
            if better {
                best = Some((c, path.clone()));
            }
        }
        for v in last + 1..n {
            if link(last, v).is_some() {
                let mut p = path.clone();
                p.push(v);
                stack.push(p);
            }
        }
    }
    best
}

/// Jacobi iteration of the crop fixed-point relation, with the natural
/// boundary at both ends, run until it stops moving.
pub fn jacobi_crop(m: &[f64], lambda: f64) -> Vec<f64> {
    let n = m.len();
    let mut x = m.to_vec();
    for _ in 0..1_000_000 {
        let mut next = x.clone();
        let mut delta: f64 = 0.0;
        for i in 0..n {
            next[i] = if n == 1 {
                m[0]
            } else if i == 0 {
                (m[0] + lambda * x[1]) / (1.0 + lambda)
            } else if i == n - 1 {
                (m[i] + lambda * x[i - 1]) / (1.0 + lambda)
            } else {
                (lambda * (x[i - 1] + x[i + 1]) + m[i]) / (2.0 * lambda + 1.0)
            };
            delta = delta.max((next[i] - x[i]).abs());
        }
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

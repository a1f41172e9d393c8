//! Constructive firing schedules and the regime classifier.
//!
//! Every schedule returns the configuration it reaches together with the
//! exact trace of moves, so results can be replayed through
//! [`firing::replay`].

use crate::error::{FlowError, Result};
use crate::firing::{self, FireMove, Trace};
use crate::grid::{aztec_value, ring, Direction, FaceCoord, MarkedConfig};
use crate::pathfire::stabilize_forward;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Move budget used by [`stabilize_any`] when the caller has no opinion.
pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

/// A configuration reached by a schedule and the moves that reached it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Run {
    pub config: MarkedConfig,
    pub trace: Trace,
}

// ---------------------------------------------------------------------------
// Weights and regimes

/// Closed-form total weight of the Aztec diamond, marked face included.
pub fn aztec_weight(n: u32) -> u64 {
    let n = n as u64;
    n + 2 * n * (n + 1) * (n + 2) / 3
}

/// Closed-form total weight of the pulse `K(n, r)`, marked face included.
pub fn pulse_weight(n: u32, r: u32) -> u64 {
    let (n, r) = (n as u64, r as u64);
    n * (2 * r * (r + 1) + 1)
}

/// `ceil(n / sqrt(3))`, computed exactly.
pub fn ceil_div_sqrt3(n: u32) -> u32 {
    let n2 = (n as u64) * (n as u64);
    let mut c = ((n as f64) / 3f64.sqrt()).floor() as u64;
    while 3 * c * c < n2 {
        c += 1;
    }
    while c > 0 && 3 * (c - 1) * (c - 1) >= n2 {
        c -= 1;
    }
    c as u32
}

/// Radius from which the pulse is too heavy to end in the Aztec diamond.
pub fn sqrt3_threshold(n: u32) -> u32 {
    ceil_div_sqrt3(n) + 1
}

/// Least `r` whose pulse outweighs the Aztec diamond; `None` for `n = 0`,
/// where both weights vanish.
pub fn min_r_exceeding(n: u32) -> Option<u32> {
    if n == 0 {
        return None;
    }
    let target = (n as u64 + 1) * (n as u64 + 2);
    let mut r = 0u64;
    while 3 * r * (r + 1) <= target {
        r += 1;
    }
    Some(r as u32)
}

/// The "Minimum r" row of the published comparison table, for `n = 3..=24`.
pub const PUBLISHED_MIN_R: [(u32, u32); 22] = [
    (3, 2),
    (4, 3),
    (5, 4),
    (6, 4),
    (7, 5),
    (8, 6),
    (9, 6),
    (10, 7),
    (11, 7),
    (12, 8),
    (13, 8),
    (14, 9),
    (15, 10),
    (16, 10),
    (17, 11),
    (18, 11),
    (19, 12),
    (20, 12),
    (21, 13),
    (22, 14),
    (23, 14),
    (24, 15),
];

pub fn published_min_r(n: u32) -> Option<u32> {
    PUBLISHED_MIN_R
        .iter()
        .find(|&&(m, _)| m == n)
        .map(|&(_, r)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `r <= 1`: terminates uniquely in the Aztec diamond.
    R1,
    /// `2 <= r <= ceil(n/2)`: not unique, the Aztec diamond is reachable.
    R2,
    /// Between the two proven bounds.
    #[serde(rename = "GAP")]
    Gap,
    /// `r >= ceil(n/sqrt 3) + 1`: not unique, the Aztec diamond is unreachable.
    R3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegimeReport {
    pub n: u32,
    pub r: u32,
    pub regime: Regime,
    pub pulse_weight: u64,
    pub aztec_weight: u64,
    pub min_r_exceeding: Option<u32>,
    pub half_bound: u32,
    pub sqrt3_threshold: u32,
    /// The pulse outweighs the Aztec diamond. Neighbors of the marked face
    /// never exceed `n`, so total weight never drops and the Aztec diamond
    /// is out of reach.
    pub aztec_excluded_by_weight: bool,
}

pub fn classify(n: u32, r: u32) -> RegimeReport {
    let half_bound = n.div_ceil(2);
    let threshold = sqrt3_threshold(n);
    let regime = if r <= 1 {
        Regime::R1
    } else if r <= half_bound {
        Regime::R2
    } else if r >= threshold {
        Regime::R3
    } else {
        Regime::Gap
    };
    let pw = pulse_weight(n, r);
    let aw = aztec_weight(n);
    RegimeReport {
        n,
        r,
        regime,
        pulse_weight: pw,
        aztec_weight: aw,
        min_r_exceeding: min_r_exceeding(n),
        half_bound,
        sqrt3_threshold: threshold,
        aztec_excluded_by_weight: pw > aw,
    }
}

// ---------------------------------------------------------------------------
// Greedy completion to the Aztec diamond

fn require_marked(c: &MarkedConfig, n: u32) -> Result<()> {
    if c.n() != n {
        return Err(FlowError::OutOfScope(format!(
            "configuration has marked weight {}, expected {n}",
            c.n()
        )));
    }
    Ok(())
}

fn fire(c: &mut MarkedConfig, trace: &mut Trace, from: FaceCoord, to: FaceCoord) -> Result<()> {
    let m = FireMove::new(from, to)?;
    firing::apply_mut(c, m)?;
    trace.push(m);
    Ok(())
}

/// First neighbor of `g`, in E, N, W, S order, one step closer to the marked face.
fn closer_neighbor(g: FaceCoord) -> FaceCoord {
    Direction::ALL
        .into_iter()
        .map(|d| g.step(d))
        .find(|f| f.norm() + 1 == g.norm())
        .expect("every face off the marked face has a closer neighbor")
}

/// Fills every deficient face of a non-violating configuration up to the
/// Aztec diamond: repeatedly take the nearest deficient face (ties broken
/// lexicographically) and fire into it from a closer neighbor, or from the
/// marked face when adjacent.
pub fn complete_to_aztec(c: &MarkedConfig, n: u32) -> Result<Run> {
    require_marked(c, n)?;
    let violations = c.violates_aztec(n);
    if !violations.is_empty() {
        return Err(FlowError::Violation(violations.into_iter().collect()));
    }
    let mut cur = c.clone();
    let mut trace = Trace::new();
    'outer: loop {
        for d in 1..=n {
            for g in ring(d) {
                if cur.weight(g) < aztec_value(n, g) {
                    let from = if d == 1 {
                        FaceCoord::MARKED
                    } else {
                        closer_neighbor(g)
                    };
                    fire(&mut cur, &mut trace, from, g)?;
                    continue 'outer;
                }
            }
        }
        break;
    }
    Ok(Run {
        config: cur,
        trace,
    })
}

// ---------------------------------------------------------------------------
// Flooding

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FloodRun {
    pub config: MarkedConfig,
    pub trace: Trace,
    /// A positive face beyond distance `n`.
    pub escaped: FaceCoord,
    /// Number of flooding rounds performed.
    pub rounds: usize,
}

/// Monotone path from the marked face to `g` (marked face excluded) that
/// avoids `avoid`: x-first, or y-first when x-first passes through `avoid`.
fn monotone_path(g: FaceCoord, avoid: FaceCoord) -> Option<Vec<FaceCoord>> {
    let build = |x_first: bool| {
        let mut p = Vec::with_capacity(g.norm() as usize);
        let mut cur = FaceCoord::MARKED;
        let sx = g.x.signum();
        let sy = g.y.signum();
        let mut go = |dx: i32, dy: i32, steps: i32, cur: &mut FaceCoord| {
            for _ in 0..steps {
                *cur = FaceCoord::new(cur.x + dx, cur.y + dy);
                p.push(*cur);
            }
        };
        if x_first {
            go(sx, 0, g.x.abs(), &mut cur);
            go(0, sy, g.y.abs(), &mut cur);
        } else {
            go(0, sy, g.y.abs(), &mut cur);
            go(sx, 0, g.x.abs(), &mut cur);
        }
        p
    };
    [true, false]
        .into_iter()
        .map(build)
        .find(|p| !p.contains(&avoid))
}

/// Pushes the furthest violation of the Aztec diamond outward until some
/// face beyond distance `n` carries weight.
///
/// Each round takes the lexicographically least violating face `f` of
/// maximal distance and a farther neighbor `g` off the axes (first in
/// E, N, W, S order), then works along a monotone path from the marked face
/// to `g` that avoids `f`. While some path face violates, the furthest one
/// fires one step outward along the path. Once none does, the path is
/// filled to the Aztec diamond from the marked face and `f` fires into `g`.
pub fn flood_escape(c: &MarkedConfig, n: u32) -> Result<FloodRun> {
    require_marked(c, n)?;
    if c.violates_aztec(n).is_empty() {
        return Err(FlowError::NothingToFlood);
    }
    let mut cur = c.clone();
    let mut trace = Trace::new();
    let mut rounds = 0;
    loop {
        let violators = cur.violates_aztec(n);
        let f = *violators
            .iter()
            .max_by(|a, b| a.norm().cmp(&b.norm()).then(b.cmp(a)))
            .expect("a violation persists across rounds");
        if f.norm() > n {
            return Ok(FloodRun {
                config: cur,
                trace,
                escaped: f,
                rounds,
            });
        }
        rounds += 1;
        let g = Direction::ALL
            .into_iter()
            .map(|d| f.step(d))
            .find(|g| g.norm() == f.norm() + 1 && g.x != 0 && g.y != 0)
            .expect("every face has a farther neighbor off the axes");
        let path = monotone_path(g, f).ok_or_else(|| {
            FlowError::OutOfScope(format!("no monotone path to {g} avoids {f}"))
        })?;
        push_along(&mut cur, &mut trace, &path, n)?;
        if cur.weight(g) <= aztec_value(n, g) {
            standardize_path(&mut cur, &mut trace, &path, n)?;
            fire(&mut cur, &mut trace, f, g)?;
        }
        debug_assert!(cur.weight(g) > aztec_value(n, g));
    }
}

/// While some path face violates and it is not the last, fire the furthest
/// violating face one step along the path.
fn push_along(cur: &mut MarkedConfig, trace: &mut Trace, path: &[FaceCoord], n: u32) -> Result<()> {
    let last = path.len() - 1;
    while let Some(i) = path
        .iter()
        .rposition(|&p| cur.weight(p) > aztec_value(n, p))
    {
        if i == last {
            break;
        }
        fire(cur, trace, path[i], path[i + 1])?;
    }
    Ok(())
}

/// Raises every face of a non-violating monotone path to its Aztec value.
fn standardize_path(cur: &mut MarkedConfig, trace: &mut Trace, path: &[FaceCoord], n: u32) -> Result<()> {
    while let Some(i) = path
        .iter()
        .position(|&p| cur.weight(p) < aztec_value(n, p))
    {
        let from = if i == 0 { FaceCoord::MARKED } else { path[i - 1] };
        fire(cur, trace, from, path[i])?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Generic stabilization

/// Fires the first legal move in canonical order until stable.
pub fn stabilize_any(c: &MarkedConfig) -> Result<Run> {
    stabilize_with_budget(c, DEFAULT_STEP_BUDGET)
}

pub fn stabilize_with_budget(c: &MarkedConfig, budget: u64) -> Result<Run> {
    let mut cur = c.clone();
    let mut trace = Trace::new();
    while let Some(m) = firing::first_legal_move(&cur) {
        if trace.len() as u64 >= budget {
            return Err(FlowError::BudgetExhausted(budget));
        }
        firing::apply_mut(&mut cur, m)?;
        trace.push(m);
    }
    Ok(Run {
        config: cur,
        trace,
    })
}

// ---------------------------------------------------------------------------
// Quadrant decompositions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decomposition {
    D1,
    D2,
}

/// One quadrant: all faces `(x, y)` with `(x - x0) * dx >= 0` and
/// `(y - y0) * dy >= 0`. Rows run along `dx`, columns along `dy`, both
/// pointing away from the marked face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadrant {
    pub name: &'static str,
    pub x0: i32,
    pub dx: i32,
    pub y0: i32,
    pub dy: i32,
}

impl Quadrant {
    const fn new(name: &'static str, x0: i32, dx: i32, y0: i32, dy: i32) -> Self {
        Quadrant { name, x0, dx, y0, dy }
    }

    pub fn contains(&self, f: FaceCoord) -> bool {
        (f.x - self.x0) * self.dx >= 0 && (f.y - self.y0) * self.dy >= 0
    }

    /// `(row index, position along the row)` of a face in this quadrant.
    fn row_coords(&self, f: FaceCoord) -> (u32, u32) {
        (
            ((f.y - self.y0) * self.dy) as u32,
            ((f.x - self.x0) * self.dx) as u32,
        )
    }

    fn column_coords(&self, f: FaceCoord) -> (u32, u32) {
        let (row, pos) = self.row_coords(f);
        (pos, row)
    }

    fn row_face(&self, row: u32, pos: u32) -> FaceCoord {
        FaceCoord::new(self.x0 + self.dx * pos as i32, self.y0 + self.dy * row as i32)
    }

    fn column_face(&self, col: u32, pos: u32) -> FaceCoord {
        self.row_face(pos, col)
    }
}

impl Decomposition {
    pub fn quadrants(self) -> [Quadrant; 4] {
        match self {
            Decomposition::D1 => [
                Quadrant::new("N", 0, 1, 1, 1),
                Quadrant::new("W", -1, -1, 0, 1),
                Quadrant::new("S", 0, -1, -1, -1),
                Quadrant::new("E", 1, 1, 0, -1),
            ],
            Decomposition::D2 => [
                Quadrant::new("N", 0, -1, 1, 1),
                Quadrant::new("E", 1, 1, 0, 1),
                Quadrant::new("S", 0, 1, -1, -1),
                Quadrant::new("W", -1, -1, 0, -1),
            ],
        }
    }

    pub fn quadrant_of(self, f: FaceCoord) -> Option<usize> {
        if f.is_marked() {
            return None;
        }
        self.quadrants().iter().position(|q| q.contains(f))
    }

    /// Total weight of each quadrant, in the order of [`Decomposition::quadrants`].
    pub fn quadrant_weights(self, c: &MarkedConfig) -> [u64; 4] {
        let mut out = [0u64; 4];
        for (f, w) in c.faces() {
            if let Some(i) = self.quadrant_of(f) {
                out[i] += w as u64;
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LineKind {
    Rows,
    Columns,
}

/// Path-fires every line of one kind in quadrant `q` to its fixed point,
/// nearest line first. Returns the number of moves made.
fn sweep(cur: &mut MarkedConfig, trace: &mut Trace, q: &Quadrant, kind: LineKind) -> Result<usize> {
    let coords = |f| match kind {
        LineKind::Rows => q.row_coords(f),
        LineKind::Columns => q.column_coords(f),
    };
    let face = |line, pos| match kind {
        LineKind::Rows => q.row_face(line, pos),
        LineKind::Columns => q.column_face(line, pos),
    };
    // line index -> (furthest occupied position, line weight)
    let mut lines: BTreeMap<u32, (u32, u64)> = BTreeMap::new();
    for (f, w) in cur.faces() {
        if q.contains(f) {
            let (line, pos) = coords(f);
            let e = lines.entry(line).or_insert((0, 0));
            e.0 = e.0.max(pos);
            e.1 += w as u64;
        }
    }
    let mut moves = 0;
    for (line, (far, weight)) in lines {
        let len = far as usize + weight as usize + 2;
        let mut w: Vec<u32> = (0..len).map(|p| cur.weight(face(line, p as u32))).collect();
        for i in stabilize_forward(&mut w) {
            fire(cur, trace, face(line, i as u32), face(line, i as u32 + 1))?;
            moves += 1;
        }
    }
    Ok(moves)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuadrantRun {
    pub config: MarkedConfig,
    pub trace: Trace,
    /// Row-then-column rounds performed.
    pub rounds: usize,
    /// Moves that touched the marked face.
    pub marked_moves: usize,
    /// Moves made outside the quadrant schedule to finish stabilizing.
    pub fallback_moves: usize,
}

/// Alternates row sweeps and column sweeps inside every quadrant of `d`
/// until nothing moves. Any remaining instability at the marked face is
/// resolved by firing each of its neighbors once per round; anything else
/// falls back to the first legal move.
pub fn quadrant_stabilize(n: u32, r: u32, d: Decomposition) -> Result<QuadrantRun> {
    quadrant_stabilize_config(&MarkedConfig::pulse(n, r), d)
}

pub fn quadrant_stabilize_config(c: &MarkedConfig, d: Decomposition) -> Result<QuadrantRun> {
    let quadrants = d.quadrants();
    let mut cur = c.clone();
    let mut trace = Trace::new();
    let mut rounds = 0;
    let mut marked_moves = 0;
    let mut fallback_moves = 0;
    loop {
        loop {
            rounds += 1;
            let mut moved = 0;
            for kind in [LineKind::Rows, LineKind::Columns] {
                for q in &quadrants {
                    moved += sweep(&mut cur, &mut trace, q, kind)?;
                }
            }
            if moved == 0 {
                break;
            }
        }
        let marked: Vec<FireMove> = FaceCoord::MARKED
            .neighbors()
            .into_iter()
            .flat_map(|g| {
                [
                    FireMove::new(FaceCoord::MARKED, g).unwrap(),
                    FireMove::new(g, FaceCoord::MARKED).unwrap(),
                ]
            })
            .filter(|&m| firing::is_legal(&cur, m))
            .collect();
        if !marked.is_empty() {
            for m in marked {
                firing::apply_mut(&mut cur, m)?;
                trace.push(m);
                marked_moves += 1;
            }
            continue;
        }
        match firing::first_legal_move(&cur) {
            None => break,
            Some(m) => {
                firing::apply_mut(&mut cur, m)?;
                trace.push(m);
                fallback_moves += 1;
            }
        }
    }
    Ok(QuadrantRun {
        config: cur,
        trace,
        rounds,
        marked_moves,
        fallback_moves,
    })
}

// ---------------------------------------------------------------------------
// Reaching the Aztec diamond from a mid-size pulse

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Regime2Run {
    /// The configuration after row firing in every quadrant.
    pub intermediate: MarkedConfig,
    /// Number of leading trace moves spent on row firing.
    pub row_moves: usize,
    pub config: MarkedConfig,
    pub trace: Trace,
}

/// Path-fires every row of every quadrant of the pulse away from the marked
/// face, checks the result stays inside the Aztec diamond, then completes it.
pub fn regime2_reach_aztec(n: u32, r: u32) -> Result<Regime2Run> {
    if r < 2 || r > n.div_ceil(2) {
        return Err(FlowError::OutOfScope(format!(
            "row schedule needs 2 <= r <= ceil(n/2) = {}, got r = {r}",
            n.div_ceil(2)
        )));
    }
    let mut cur = MarkedConfig::pulse(n, r);
    let mut trace = Trace::new();
    for q in &Decomposition::D1.quadrants() {
        sweep(&mut cur, &mut trace, q, LineKind::Rows)?;
    }
    let violations = cur.violates_aztec(n);
    if !violations.is_empty() {
        return Err(FlowError::Violation(violations.into_iter().collect()));
    }
    let intermediate = cur.clone();
    let row_moves = trace.len();
    let rest = complete_to_aztec(&cur, n)?;
    trace.extend(rest.trace);
    Ok(Regime2Run {
        intermediate,
        row_moves,
        config: rest.config,
        trace,
    })
}

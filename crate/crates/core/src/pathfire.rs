//! Firing restricted to a path of successive faces.
//!
//! For weakly decreasing inputs every legal fire goes from a face to its
//! successor, so a path configuration is just a vector of weights and a
//! step is indexed by the firing face.

use crate::error::{FlowError, Result};
use crate::grid::FaceCoord;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};

/// Successive adjacent faces, never including the marked face.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FaceCoord>", into = "Vec<FaceCoord>")]
pub struct PathSpec {
    faces: Vec<FaceCoord>,
}

impl PathSpec {
    pub fn new(faces: Vec<FaceCoord>) -> Result<Self> {
        if faces.is_empty() {
            return Err(FlowError::OutOfScope("a path needs at least one face".into()));
        }
        if faces.iter().any(|f| f.is_marked()) {
            return Err(FlowError::OutOfScope("paths exclude the marked face".into()));
        }
        if let Some(w) = faces.windows(2).find(|w| w[0].dist(w[1]) != 1) {
            return Err(FlowError::OutOfScope(format!(
                "{} and {} are not adjacent",
                w[0], w[1]
            )));
        }
        Ok(PathSpec { faces })
    }

    pub fn faces(&self) -> &[FaceCoord] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

impl TryFrom<Vec<FaceCoord>> for PathSpec {
    type Error = FlowError;
    fn try_from(v: Vec<FaceCoord>) -> Result<Self> {
        PathSpec::new(v)
    }
}

impl From<PathSpec> for Vec<FaceCoord> {
    fn from(p: PathSpec) -> Self {
        p.faces
    }
}

/// Weights along a path; serialized as a plain JSON array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathWeights(pub Vec<u32>);

impl PathWeights {
    pub fn new(w: Vec<u32>) -> Self {
        PathWeights(w)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&w| w as u64).sum()
    }

    pub fn is_weakly_decreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    /// No forward fire is possible.
    pub fn is_path_stable(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1] + 2)
    }

    /// Number of faces up to and including the last nonzero one.
    pub fn support_len(&self) -> usize {
        self.0.iter().rposition(|&w| w != 0).map_or(0, |i| i + 1)
    }

    pub fn trimmed(&self) -> PathWeights {
        PathWeights(self.0[..self.support_len()].to_vec())
    }
}

impl From<Vec<u32>> for PathWeights {
    fn from(w: Vec<u32>) -> Self {
        PathWeights(w)
    }
}

/// The row instance `R(ℓ)`: `ℓ` faces of height `n` followed by zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalRow {
    pub n: u32,
    pub filled: u32,
}

impl CanonicalRow {
    pub fn new(n: u32, filled: u32) -> Result<Self> {
        if n == 0 || filled == 0 {
            return Err(FlowError::OutOfScope(format!(
                "row instance needs n >= 1 and at least one filled face (got n={n}, filled={filled})"
            )));
        }
        Ok(CanonicalRow { n, filled })
    }

    /// Length `n - ceil(n/2) + ℓ` of the path the row lives on.
    pub fn nominal_len(&self) -> usize {
        (self.n - self.n.div_ceil(2) + self.filled) as usize
    }

    /// The initial weights with `zeros` trailing empty faces.
    pub fn initial_with_tail(&self, zeros: usize) -> PathWeights {
        let mut w = vec![self.n; self.filled as usize];
        w.resize(self.filled as usize + zeros, 0);
        PathWeights(w)
    }

    /// The initial weights on the nominal path.
    pub fn initial(&self) -> PathWeights {
        self.initial_with_tail((self.n - self.n.div_ceil(2)) as usize)
    }
}

/// Fires face `i` into face `i + 1`.
pub fn path_fire_step(r: &PathWeights, i: usize) -> Result<PathWeights> {
    if i + 1 >= r.len() {
        return Err(FlowError::OutOfPath(i));
    }
    if r.0[i] < r.0[i + 1] + 2 {
        return Err(FlowError::IllegalPathFire(i));
    }
    let mut next = r.clone();
    next.0[i] -= 1;
    next.0[i + 1] += 1;
    Ok(next)
}

/// Fires the first fireable face repeatedly until the path is stable and
/// returns the indices fired, in order.
pub fn stabilize_forward(w: &mut [u32]) -> Vec<usize> {
    let mut fired = Vec::new();
    let mut i = 0;
    while i + 1 < w.len() {
        if w[i] >= w[i + 1] + 2 {
            w[i] -= 1;
            w[i + 1] += 1;
            fired.push(i);
            // the predecessor may have become fireable
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
    fired
}

/// Shape of the unique path-stable configuration reached from `R(ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StableShape {
    /// Leading faces of height `n` that never fire.
    pub prefix: u32,
    /// Height of the unit descent that follows the prefix.
    pub top: u32,
    /// The value occurring twice in the descent, or 0 when none does.
    pub repeat: u32,
}

impl StableShape {
    pub fn of(row: CanonicalRow) -> Self {
        let n = row.n as u64;
        let prefix = row.filled.saturating_sub(row.n / 2);
        let residual = n * (row.filled - prefix) as u64;
        let mut top = 0u64;
        while (top + 1) * (top + 2) / 2 <= residual {
            top += 1;
        }
        let repeat = residual - top * (top + 1) / 2;
        StableShape {
            prefix,
            top: top as u32,
            repeat: repeat as u32,
        }
    }

    pub fn weights(&self, n: u32) -> PathWeights {
        let mut w = vec![n; self.prefix as usize];
        for v in (1..=self.top).rev() {
            w.push(v);
            if v == self.repeat {
                w.push(v);
            }
        }
        PathWeights(w)
    }
}

/// The path-stable configuration of `R(ℓ)` in closed form, trailing zeros trimmed.
pub fn closed_form_stable(row: CanonicalRow) -> PathWeights {
    StableShape::of(row).weights(row.n)
}

/// One reachable state of exhaustive path firing, with the faces that
/// changed value and the faces that fired at some point along the way.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathState {
    pub weights: PathWeights,
    pub changed: u64,
    pub fired: u64,
}

#[derive(Debug, Clone, Default)]
pub struct PathExploration {
    pub states: HashSet<PathState>,
    pub terminals: BTreeSet<PathWeights>,
    /// Every `(terminal, fired mask)` pair observed.
    pub terminal_firings: BTreeSet<(PathWeights, u64)>,
}

/// Exhaustive search over every firing order, tracking change and fire masks.
pub fn explore_path(r0: &PathWeights) -> Result<PathExploration> {
    if !r0.is_weakly_decreasing() {
        return Err(FlowError::OutOfScope(
            "path firing is only supported on weakly decreasing inputs".into(),
        ));
    }
    if r0.len() > 64 {
        return Err(FlowError::OutOfScope("paths longer than 64 faces".into()));
    }
    let mut out = PathExploration::default();
    let start = PathState {
        weights: r0.clone(),
        changed: 0,
        fired: 0,
    };
    let mut stack = vec![start.clone()];
    out.states.insert(start);
    while let Some(s) = stack.pop() {
        let w = &s.weights.0;
        let mut terminal = true;
        for i in 0..w.len().saturating_sub(1) {
            if w[i] >= w[i + 1] + 2 {
                terminal = false;
                let mut next = s.clone();
                next.weights.0[i] -= 1;
                next.weights.0[i + 1] += 1;
                next.fired |= 1 << i;
                for j in [i, i + 1] {
                    if next.weights.0[j] != r0.0[j] {
                        next.changed |= 1 << j;
                    }
                }
                if out.states.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
        if terminal {
            out.terminals.insert(s.weights.clone());
            out.terminal_firings.insert((s.weights.clone(), s.fired));
        }
    }
    Ok(out)
}

/// Every path-stable configuration reachable from `r0` under any firing order.
pub fn simulate_all_orders(r0: &PathWeights) -> Result<BTreeSet<PathWeights>> {
    Ok(explore_path(r0)?.terminals)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LemmaViolation {
    /// `w[index] < w[index + 1]`.
    NotWeaklyDecreasing { step: usize, index: usize },
    /// Three equal positive values at `index..index + 3`, not all untouched.
    EqualTriple { step: usize, index: usize, value: u32 },
    /// Repeated pairs at `first..first + 2` and `second..second + 2`
    /// joined by a descent of exactly one per face.
    SeparatedRepeats { step: usize, first: usize, second: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaReport {
    pub configurations: usize,
    pub violations: Vec<LemmaViolation>,
}

impl LemmaReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks one configuration, where bit `i` of `changed` marks a face whose
/// value has moved away from its starting value at some point.
pub fn check_configuration(w: &[u32], changed: u64, step: usize) -> Vec<LemmaViolation> {
    let mut out = Vec::new();
    let touched = |i: usize| changed >> i & 1 == 1;
    for i in 0..w.len().saturating_sub(1) {
        if w[i] < w[i + 1] {
            out.push(LemmaViolation::NotWeaklyDecreasing { step, index: i });
        }
    }
    for i in 0..w.len().saturating_sub(2) {
        let a = w[i];
        if a > 0 && w[i + 1] == a && w[i + 2] == a && (touched(i) || touched(i + 1) || touched(i + 2))
        {
            out.push(LemmaViolation::EqualTriple {
                step,
                index: i,
                value: a,
            });
        }
    }
    let pairs: Vec<usize> = (0..w.len().saturating_sub(1))
        .filter(|&i| w[i] == w[i + 1] && touched(i) && touched(i + 1))
        .collect();
    for (k, &p) in pairs.iter().enumerate() {
        for &q in &pairs[k + 1..] {
            if q < p + 2 {
                continue;
            }
            let a = w[p] as i64;
            let descent = (p + 1..=q).all(|j| w[j] as i64 == a - (j - p - 1) as i64);
            if descent {
                out.push(LemmaViolation::SeparatedRepeats {
                    step,
                    first: p,
                    second: q,
                });
            }
        }
    }
    out
}

/// Monitors a sequence of path configurations for the structural patterns
/// that weakly decreasing path firing can never produce.
pub fn check_trace_lemmas(trace: &[PathWeights]) -> LemmaReport {
    let mut report = LemmaReport::default();
    let Some(first) = trace.first() else {
        return report;
    };
    let mut changed = 0u64;
    for (step, r) in trace.iter().enumerate() {
        for (i, (&a, &b)) in r.0.iter().zip(&first.0).enumerate().take(64) {
            if a != b {
                changed |= 1 << i;
            }
        }
        report
            .violations
            .extend(check_configuration(&r.0, changed, step));
        report.configurations += 1;
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthBounds {
    pub len: u32,
    pub m: u32,
    pub repeated: bool,
    /// The least `m` allowed for this shape.
    pub bound: i64,
}

impl LengthBounds {
    pub fn holds(&self) -> bool {
        self.m as i64 >= self.bound
    }
}

/// Support length of the stable row and the offset `m` with
/// `len = n - m` (no repeat) or `len = n - m + 1` (one repeat).
pub fn support_length_bounds(row: CanonicalRow) -> Result<LengthBounds> {
    let half_up = row.n.div_ceil(2);
    if row.filled > half_up {
        return Err(FlowError::OutOfScope(format!(
            "length bounds need filled <= ceil(n/2) = {half_up}, got {}",
            row.filled
        )));
    }
    let shape = StableShape::of(row);
    let len = shape.weights(row.n).len() as u32;
    let repeated = shape.repeat > 0;
    let (m, bound) = if repeated {
        (row.n + 1 - len, half_up as i64 - row.filled as i64 + 1)
    } else {
        (row.n - len, half_up as i64 - row.filled as i64)
    };
    Ok(LengthBounds {
        len,
        m,
        repeated,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pw(v: &[u32]) -> PathWeights {
        PathWeights(v.to_vec())
    }

    fn row(n: u32, l: u32) -> CanonicalRow {
        CanonicalRow::new(n, l).unwrap()
    }

    #[test]
    fn steps() {
        assert_eq!(path_fire_step(&pw(&[4, 0, 0]), 0).unwrap(), pw(&[3, 1, 0]));
        assert_eq!(
            path_fire_step(&pw(&[3, 1, 0]), 1),
            Err(FlowError::IllegalPathFire(1))
        );
        assert_eq!(
            path_fire_step(&pw(&[4, 4, 0, 0]), 1).unwrap(),
            pw(&[4, 3, 1, 0])
        );
        assert_eq!(path_fire_step(&pw(&[4, 0]), 1), Err(FlowError::OutOfPath(1)));
    }

    #[test]
    fn path_spec_validation() {
        let f = |x, y| FaceCoord::new(x, y);
        assert!(PathSpec::new(vec![f(0, 1), f(1, 1), f(2, 1)]).is_ok());
        assert!(PathSpec::new(vec![f(0, 1), f(2, 1)]).is_err());
        assert!(PathSpec::new(vec![f(1, 0), f(0, 0)]).is_err());
        assert!(PathSpec::new(vec![]).is_err());
        let p: PathSpec = serde_json::from_str("[[1,0],[1,1]]").unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_stable(row(4, 1)), pw(&[2, 1, 1]));
        assert_eq!(closed_form_stable(row(4, 2)), pw(&[3, 2, 2, 1]));
        assert_eq!(closed_form_stable(row(4, 3)), pw(&[4, 3, 2, 2, 1]));
        assert_eq!(closed_form_stable(row(3, 2)), pw(&[3, 2, 1]));
        assert_eq!(closed_form_stable(row(2, 1)), pw(&[1, 1]));
        assert_eq!(closed_form_stable(row(1, 3)), pw(&[1, 1, 1]));
    }

    #[test]
    fn oracle_freezes_derived_rows() {
        // exhaustive search, independent of the closed form
        let t = simulate_all_orders(&pw(&[4, 4, 4, 0, 0, 0, 0])).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.first().unwrap().trimmed(), pw(&[4, 3, 2, 2, 1]));
        let t = simulate_all_orders(&pw(&[3, 3, 0, 0])).unwrap();
        assert_eq!(t.into_iter().collect::<Vec<_>>(), vec![pw(&[3, 2, 1, 0])]);
    }

    #[test]
    fn simulate_examples() {
        let one = |v: &[u32]| -> BTreeSet<PathWeights> { [pw(v)].into_iter().collect() };
        assert_eq!(simulate_all_orders(&pw(&[4, 0, 0])).unwrap(), one(&[2, 1, 1]));
        assert_eq!(simulate_all_orders(&pw(&[1, 0])).unwrap(), one(&[1, 0]));
        assert_eq!(
            simulate_all_orders(&pw(&[4, 4, 0, 0])).unwrap(),
            one(&[3, 2, 2, 1])
        );
        assert!(matches!(
            simulate_all_orders(&pw(&[0, 2])),
            Err(FlowError::OutOfScope(_))
        ));
    }

    #[test]
    fn forward_stabilizer_matches_closed_form() {
        for n in 1..=8u32 {
            for l in 1..=n.div_ceil(2) + 2 {
                let r = row(n, l);
                let mut w = r.initial_with_tail(n as usize + 1).0;
                stabilize_forward(&mut w);
                assert_eq!(PathWeights(w).trimmed(), closed_form_stable(r), "n={n} l={l}");
            }
        }
    }

    #[test]
    fn monitor_examples() {
        let r0 = pw(&[4, 4, 0, 0]);
        let mut trace = vec![r0.clone()];
        let mut cur = r0;
        while let Some(i) = (0..cur.len() - 1).find(|&i| cur.0[i] >= cur.0[i + 1] + 2) {
            cur = path_fire_step(&cur, i).unwrap();
            trace.push(cur.clone());
        }
        assert!(check_trace_lemmas(&trace).is_clean());
        assert!(check_trace_lemmas(&[pw(&[2, 2, 2])]).is_clean());

        let injected = vec![pw(&[5, 3, 0, 0, 0]), pw(&[3, 2, 2, 1, 1])];
        let report = check_trace_lemmas(&injected);
        assert_eq!(
            report.violations,
            vec![LemmaViolation::SeparatedRepeats {
                step: 1,
                first: 1,
                second: 3
            }]
        );
        let triple = check_trace_lemmas(&[pw(&[4, 0, 0, 0]), pw(&[3, 3, 3, 1])]);
        assert!(matches!(
            triple.violations[..],
            [LemmaViolation::EqualTriple { index: 0, value: 3, .. }]
        ));
        let bumpy = check_trace_lemmas(&[pw(&[1, 2])]);
        assert!(matches!(
            bumpy.violations[..],
            [LemmaViolation::NotWeaklyDecreasing { index: 0, .. }]
        ));
    }

    #[test]
    fn length_bounds() {
        let b = support_length_bounds(row(4, 2)).unwrap();
        assert_eq!((b.len, b.m, b.repeated, b.bound), (4, 1, true, 1));
        assert!(b.holds());
        let b = support_length_bounds(row(3, 2)).unwrap();
        assert_eq!((b.len, b.m, b.repeated), (3, 0, false));
        assert!(b.holds());
        let b = support_length_bounds(row(4, 1)).unwrap();
        assert_eq!((b.len, b.m, b.repeated, b.bound), (3, 2, true, 2));
        assert!(support_length_bounds(row(4, 3)).is_err());
        for n in 1..=40u32 {
            for l in 1..=n.div_ceil(2) {
                assert!(support_length_bounds(row(n, l)).unwrap().holds(), "n={n} l={l}");
            }
        }
    }

    #[test]
    fn row_input_validation() {
        assert!(CanonicalRow::new(0, 1).is_err());
        assert!(CanonicalRow::new(3, 0).is_err());
        assert_eq!(row(4, 1).initial(), pw(&[4, 0, 0]));
        assert_eq!(row(4, 2).initial(), pw(&[4, 4, 0, 0]));
        assert_eq!(row(4, 2).nominal_len(), 4);
    }
}

//! Grid geometry and configurations in face representation.
//!
//! Faces of the grid complex are addressed by integer lattice coordinates,
//! with the marked face fixed at the origin. A [`MarkedConfig`] stores the
//! marked weight `n` separately from a sparse map of the remaining faces;
//! the map never holds zeros and never holds the origin.

use crate::error::{FlowError, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A 2-cell of the grid. Ordering is lexicographic by `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FaceCoord {
    pub x: i32,
    pub y: i32,
}

/// The four edge-adjacent directions, in canonical enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    East,
    North,
    West,
    South,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::East,
        Direction::North,
        Direction::West,
        Direction::South,
    ];

    pub const fn offset(self) -> (i32, i32) {
        match self {
            Direction::East => (1, 0),
            Direction::North => (0, 1),
            Direction::West => (-1, 0),
            Direction::South => (0, -1),
        }
    }
}

impl FaceCoord {
    pub const MARKED: FaceCoord = FaceCoord { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        FaceCoord { x, y }
    }

    pub fn is_marked(self) -> bool {
        self == Self::MARKED
    }

    /// Manhattan distance.
    pub fn dist(self, other: FaceCoord) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Distance to the marked face.
    pub fn norm(self) -> u32 {
        self.dist(Self::MARKED)
    }

    pub fn step(self, d: Direction) -> FaceCoord {
        let (dx, dy) = d.offset();
        FaceCoord::new(self.x + dx, self.y + dy)
    }

    pub fn neighbors(self) -> [FaceCoord; 4] {
        Direction::ALL.map(|d| self.step(d))
    }

    /// Quarter turn counter-clockwise about the marked face.
    pub fn rotate_quarter(self) -> FaceCoord {
        FaceCoord::new(-self.y, self.x)
    }

    /// Reflection across the vertical axis through the marked face.
    pub fn mirror_x(self) -> FaceCoord {
        FaceCoord::new(-self.x, self.y)
    }
}

impl fmt::Display for FaceCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl From<(i32, i32)> for FaceCoord {
    fn from((x, y): (i32, i32)) -> Self {
        FaceCoord::new(x, y)
    }
}

impl Serialize for FaceCoord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for FaceCoord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[i32; 2]>::deserialize(d)?;
        Ok(FaceCoord::new(x, y))
    }
}

pub fn dist(a: FaceCoord, b: FaceCoord) -> u32 {
    a.dist(b)
}

/// Weight of face `f` in the Aztec diamond of height `n`.
pub fn aztec_value(n: u32, f: FaceCoord) -> u32 {
    if f.is_marked() {
        n
    } else {
        (n + 1).saturating_sub(f.norm())
    }
}

/// Every face at distance exactly `d` from the marked face, in lexicographic order.
pub fn ring(d: u32) -> Vec<FaceCoord> {
    if d == 0 {
        return vec![FaceCoord::MARKED];
    }
    let d = d as i32;
    let mut out = Vec::with_capacity(4 * d as usize);
    for x in -d..=d {
        let rest = d - x.abs();
        out.push(FaceCoord::new(x, -rest));
        if rest != 0 {
            out.push(FaceCoord::new(x, rest));
        }
    }
    out
}

/// Every face (including the marked face) within distance `r`, in lexicographic order.
pub fn ball(r: u32) -> Vec<FaceCoord> {
    let r = r as i32;
    let mut out = Vec::new();
    for x in -r..=r {
        let rest = r - x.abs();
        for y in -rest..=rest {
            out.push(FaceCoord::new(x, y));
        }
    }
    out
}

/// A configuration around the marked face in face representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkedConfig {
    n: u32,
    weights: BTreeMap<FaceCoord, u32>,
}

impl MarkedConfig {
    /// Empty support with marked weight `n`.
    pub fn empty(n: u32) -> Self {
        MarkedConfig {
            n,
            weights: BTreeMap::new(),
        }
    }

    /// Builds a configuration from signed input, rejecting negative weights,
    /// entries for the marked face and duplicates. Zero weights are dropped.
    pub fn from_faces<I>(n: i64, faces: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FaceCoord, i64)>,
    {
        let n = to_weight(FaceCoord::MARKED, n)?;
        let mut weights = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (f, w) in faces {
            if f.is_marked() {
                return Err(FlowError::MarkedFaceInMap);
            }
            if !seen.insert(f) {
                return Err(FlowError::DuplicateFace(f));
            }
            let w = to_weight(f, w)?;
            if w != 0 {
                weights.insert(f, w);
            }
        }
        Ok(MarkedConfig { n, weights })
    }

    pub fn aztec(n: u32) -> Self {
        let weights = ball(n)
            .into_iter()
            .filter(|f| !f.is_marked())
            .map(|f| (f, aztec_value(n, f)))
            .collect();
        MarkedConfig { n, weights }
    }

    /// The pulse of height `n` and radius `r`.
    pub fn pulse(n: u32, r: u32) -> Self {
        let weights = if n == 0 {
            BTreeMap::new()
        } else {
            ball(r)
                .into_iter()
                .filter(|f| !f.is_marked())
                .map(|f| (f, n))
                .collect()
        };
        MarkedConfig { n, weights }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Weight of any face; the marked face reports `n`.
    pub fn weight(&self, f: FaceCoord) -> u32 {
        if f.is_marked() {
            self.n
        } else {
            self.weights.get(&f).copied().unwrap_or(0)
        }
    }

    /// Support faces with their weights, in lexicographic order.
    pub fn faces(&self) -> impl Iterator<Item = (FaceCoord, u32)> + '_ {
        self.weights.iter().map(|(&f, &w)| (f, w))
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    /// Marked weight plus the weights of the support.
    pub fn total_weight(&self) -> u64 {
        self.n as u64 + self.weights.values().map(|&w| w as u64).sum::<u64>()
    }

    pub fn support_radius(&self) -> u32 {
        self.weights.keys().map(|f| f.norm()).max().unwrap_or(0)
    }

    /// Largest weight over the support and the marked face.
    pub fn max_weight(&self) -> u32 {
        self.weights.values().copied().max().unwrap_or(0).max(self.n)
    }

    /// Faces whose weight exceeds the Aztec diamond of height `n`.
    pub fn violates_aztec(&self, n: u32) -> BTreeSet<FaceCoord> {
        self.faces()
            .filter(|&(f, w)| w > aztec_value(n, f))
            .map(|(f, _)| f)
            .collect()
    }

    pub(crate) fn set(&mut self, f: FaceCoord, w: u32) {
        debug_assert!(!f.is_marked());
        if w == 0 {
            self.weights.remove(&f);
        } else {
            self.weights.insert(f, w);
        }
    }

    /// Applies `g` to every face coordinate. `g` must be a bijection fixing the origin.
    pub fn map_faces(&self, g: impl Fn(FaceCoord) -> FaceCoord) -> Self {
        MarkedConfig {
            n: self.n,
            weights: self.weights.iter().map(|(&f, &w)| (g(f), w)).collect(),
        }
    }

    pub fn rotate_quarter(&self) -> Self {
        self.map_faces(FaceCoord::rotate_quarter)
    }

    pub fn mirror_x(&self) -> Self {
        self.map_faces(FaceCoord::mirror_x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serialization is infallible")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn to_weight(face: FaceCoord, w: i64) -> Result<u32> {
    if w < 0 {
        return Err(FlowError::NegativeWeight { face, weight: w });
    }
    u32::try_from(w).map_err(|_| FlowError::WeightOverflow(w))
}

#[derive(Serialize, Deserialize)]
struct ConfigJson {
    n: i64,
    faces: Vec<[i64; 3]>,
}

impl Serialize for MarkedConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigJson {
            n: self.n as i64,
            faces: self
                .faces()
                .map(|(f, w)| [f.x as i64, f.y as i64, w as i64])
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MarkedConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = ConfigJson::deserialize(d)?;
        let mut faces = Vec::with_capacity(raw.faces.len());
        for [x, y, w] in raw.faces {
            let x = i32::try_from(x).map_err(D::Error::custom)?;
            let y = i32::try_from(y).map_err(D::Error::custom)?;
            faces.push((FaceCoord::new(x, y), w));
        }
        MarkedConfig::from_faces(raw.n, faces).map_err(D::Error::custom)
    }
}

/// A lattice vertex; face `(x, y)` is the unit square with lower-left corner `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

impl Vertex {
    pub const fn new(x: i32, y: i32) -> Self {
        Vertex { x, y }
    }
}

/// Orientation of a lattice edge leaving its base vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeDir {
    Right,
    Up,
}

/// Edge representation of a flow. Positive values flow right/up.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeFlow {
    flows: BTreeMap<(Vertex, EdgeDir), i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationReport {
    pub conservative: bool,
    /// Vertices with nonzero `inflow - outflow`.
    pub imbalances: Vec<(Vertex, i64)>,
    /// Vertices whose imbalance magnitude exceeds 4; any such vertex rules out termination.
    pub exceeding: Vec<Vertex>,
}

impl EdgeFlow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: Vertex, dir: EdgeDir, value: i64) {
        let e = self.flows.entry((v, dir)).or_insert(0);
        *e += value;
        if *e == 0 {
            self.flows.remove(&(v, dir));
        }
    }

    pub fn get(&self, v: Vertex, dir: EdgeDir) -> i64 {
        self.flows.get(&(v, dir)).copied().unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, EdgeDir, i64)> + '_ {
        self.flows.iter().map(|(&(v, d), &f)| (v, d, f))
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn conservation(&self) -> ConservationReport {
        let mut balance: BTreeMap<Vertex, i64> = BTreeMap::new();
        for (v, d, f) in self.edges() {
            let head = match d {
                EdgeDir::Right => Vertex::new(v.x + 1, v.y),
                EdgeDir::Up => Vertex::new(v.x, v.y + 1),
            };
            *balance.entry(head).or_insert(0) += f;
            *balance.entry(v).or_insert(0) -= f;
        }
        let imbalances: Vec<_> = balance.into_iter().filter(|&(_, b)| b != 0).collect();
        let exceeding = imbalances
            .iter()
            .filter(|(_, b)| b.abs() > 4)
            .map(|&(v, _)| v)
            .collect();
        ConservationReport {
            conservative: imbalances.is_empty(),
            imbalances,
            exceeding,
        }
    }

    pub fn is_conservative(&self) -> bool {
        self.conservation().conservative
    }
}

/// Converts a configuration (marked face included) into its edge flow:
/// each face of weight `w` circulates `w` units clockwise around its boundary.
pub fn to_edge_representation(c: &MarkedConfig) -> EdgeFlow {
    let mut e = EdgeFlow::new();
    let all = std::iter::once((FaceCoord::MARKED, c.n())).chain(c.faces());
    for (f, w) in all {
        let w = w as i64;
        if w == 0 {
            continue;
        }
        // top edge runs right, right edge runs down, bottom runs left, left runs up
        e.add(Vertex::new(f.x, f.y + 1), EdgeDir::Right, w);
        e.add(Vertex::new(f.x + 1, f.y), EdgeDir::Up, -w);
        e.add(Vertex::new(f.x, f.y), EdgeDir::Right, -w);
        e.add(Vertex::new(f.x, f.y), EdgeDir::Up, w);
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fc(x: i32, y: i32) -> FaceCoord {
        FaceCoord::new(x, y)
    }

    #[test]
    fn distances() {
        assert_eq!(dist(fc(0, 0), fc(0, 0)), 0);
        assert_eq!(dist(fc(0, 0), fc(1, 0)), 1);
        assert_eq!(dist(fc(2, -1), fc(-1, 3)), 7);
    }

    #[test]
    fn aztec_values() {
        assert_eq!(aztec_value(2, fc(0, 0)), 2);
        assert_eq!(aztec_value(2, fc(2, 0)), 1);
        assert_eq!(aztec_value(3, fc(0, 5)), 0);
        // marked face carries n even though the ring formula would give n + 1
        assert_eq!(aztec_value(4, fc(0, 1)), 4);
    }

    #[test]
    fn rings_and_balls() {
        assert_eq!(ring(0), vec![fc(0, 0)]);
        for d in 1..8 {
            let r = ring(d);
            assert_eq!(r.len(), 4 * d as usize);
            assert!(r.iter().all(|f| f.norm() == d));
            assert!(r.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(ball(3).len(), 2 * 3 * 4 + 1);
    }

    #[test]
    fn aztec_two_matches_figure() {
        let az = MarkedConfig::aztec(2);
        assert_eq!(az.support_size(), 12);
        assert_eq!(az.total_weight(), 18);
        for f in ring(1) {
            assert_eq!(az.weight(f), 2);
        }
        for f in ring(2) {
            assert_eq!(az.weight(f), 1);
        }
        assert_eq!(MarkedConfig::aztec(0).support_size(), 0);
        assert_eq!(MarkedConfig::aztec(4).total_weight(), 84);
        assert_eq!(MarkedConfig::aztec(4).support_radius(), 4);
    }

    #[test]
    fn pulses() {
        let p = MarkedConfig::pulse(4, 2);
        assert_eq!(p.support_size(), 12);
        assert_eq!(p.total_weight(), 52);
        assert_eq!(MarkedConfig::pulse(7, 0).support_size(), 0);
        assert_eq!(MarkedConfig::pulse(7, 0).total_weight(), 7);
        assert_eq!(MarkedConfig::pulse(3, 3).total_weight(), 75);
        assert_eq!(MarkedConfig::pulse(3, 2).support_radius(), 2);
        assert_eq!(MarkedConfig::empty(5).total_weight(), 5);
    }

    #[test]
    fn violation_sets() {
        assert!(MarkedConfig::aztec(3).violates_aztec(3).is_empty());
        let v = MarkedConfig::pulse(3, 2).violates_aztec(3);
        assert_eq!(v, ring(2).into_iter().collect());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(
            MarkedConfig::from_faces(2, [(fc(0, 0), 1)]),
            Err(FlowError::MarkedFaceInMap)
        );
        assert!(matches!(
            MarkedConfig::from_faces(2, [(fc(1, 0), -1)]),
            Err(FlowError::NegativeWeight { .. })
        ));
        assert!(matches!(
            MarkedConfig::from_faces(-1, []),
            Err(FlowError::NegativeWeight { .. })
        ));
        assert_eq!(
            MarkedConfig::from_faces(2, [(fc(1, 0), 1), (fc(1, 0), 2)]),
            Err(FlowError::DuplicateFace(fc(1, 0)))
        );
        let c = MarkedConfig::from_faces(2, [(fc(1, 0), 0), (fc(0, 1), 3)]).unwrap();
        assert_eq!(c.support_size(), 1);
    }

    #[test]
    fn json_format_is_canonical() {
        let c = MarkedConfig::from_faces(3, [(fc(1, 0), 2), (fc(-1, 2), 1), (fc(-1, -2), 5)])
            .unwrap();
        assert_eq!(
            c.to_json(),
            r#"{"n":3,"faces":[[-1,-2,5],[-1,2,1],[1,0,2]]}"#
        );
        assert_eq!(MarkedConfig::from_json(&c.to_json()).unwrap(), c);
        assert!(MarkedConfig::from_json(r#"{"n":3,"faces":[[0,0,1]]}"#).is_err());
        assert!(MarkedConfig::from_json(r#"{"n":3,"faces":[[1,0,-1]]}"#).is_err());
    }

    #[test]
    fn single_face_circulates_clockwise() {
        let e = to_edge_representation(&MarkedConfig::empty(1));
        assert_eq!(e.len(), 4);
        assert_eq!(e.get(Vertex::new(0, 1), EdgeDir::Right), 1);
        assert_eq!(e.get(Vertex::new(1, 0), EdgeDir::Up), -1);
        assert_eq!(e.get(Vertex::new(0, 0), EdgeDir::Right), -1);
        assert_eq!(e.get(Vertex::new(0, 0), EdgeDir::Up), 1);
        assert!(e.is_conservative());
    }

    #[test]
    fn pulse_is_closed_curve() {
        let c = MarkedConfig::pulse(4, 2);
        let e = to_edge_representation(&c);
        assert!(e.is_conservative());
        // the radius-2 ring touches the outside along 8 * 2 + 4 edges
        assert_eq!(e.len(), 20);
        assert!(e.edges().all(|(_, _, f)| f.abs() == 4));
        for (v, d, f) in e.edges() {
            let (inside, outside) = match d {
                EdgeDir::Right => (fc(v.x, v.y - 1), fc(v.x, v.y)),
                EdgeDir::Up => (fc(v.x, v.y), fc(v.x - 1, v.y)),
            };
            let (a, b) = (c.weight(inside), c.weight(outside));
            assert_eq!(f, a as i64 - b as i64);
        }
    }

    #[test]
    fn aztec_unit_flow_off_center() {
        let c = MarkedConfig::aztec(2);
        let e = to_edge_representation(&c);
        assert!(e.is_conservative());
        // every edge of the ball carries one unit except the four around the
        // marked face, where both sides weigh 2
        assert_eq!(e.len(), 12 + 20);
        assert!(e.edges().all(|(_, _, f)| f.abs() == 1));
        assert_eq!(e.get(Vertex::new(0, 0), EdgeDir::Up), 0);
    }

    #[test]
    fn conservation_report() {
        let mut e = EdgeFlow::new();
        e.add(Vertex::new(0, 0), EdgeDir::Right, 1);
        let r = e.conservation();
        assert!(!r.conservative);
        assert_eq!(
            r.imbalances,
            vec![(Vertex::new(0, 0), -1), (Vertex::new(1, 0), 1)]
        );
        assert!(r.exceeding.is_empty());

        let mut e = EdgeFlow::new();
        e.add(Vertex::new(0, 0), EdgeDir::Up, 5);
        let r = e.conservation();
        assert_eq!(r.exceeding.len(), 2);
        assert!(r.imbalances.iter().all(|(_, b)| b.abs() == 5));
    }
}

//! Exhaustive reachability over the full firing relation, inside a radius cap.
//!
//! No move ever raises a face above `U_f = max(n - |f| + 1, max_h (K_h - |f - h|), 0)`
//! where `K` is the starting configuration: `U` is 1-Lipschitz, covers the
//! start, and is at least `n` next to the marked face. States are therefore
//! packed into words with one bit field per face of positive bound, and
//! faces with bound zero are dropped altogether.
//!
//! The search runs on orbits under the symmetries of the grid that fix the
//! starting configuration. Each BFS level is kept as a sorted array of
//! packed states; frontier expansion runs in parallel and duplicates are
//! removed by sorting and merging, so results do not depend on the thread
//! count. Witnesses are rebuilt by walking backwards one level at a time.

use crate::error::{FlowError, Result};
use crate::firing::{FireMove, Trace};
use crate::grid::{ball, Direction, FaceCoord, MarkedConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreBounds {
    /// Faces beyond this distance stay empty; moves into them are dropped.
    pub radius_cap: u32,
    /// Maximum number of stored states (orbit representatives).
    pub max_states: usize,
    pub max_depth: u32,
    /// Worker threads for frontier expansion. 0 picks rayon's default,
    /// 1 expands on the calling thread.
    pub threads: usize,
    /// Quotient by the grid symmetries that fix the starting configuration.
    pub use_symmetry: bool,
}

impl ExploreBounds {
    pub const DEFAULT_MAX_STATES: usize = 50_000_000;

    /// Radius cap `n + r + 2`, where `r` is the support radius of `c`.
    pub fn for_config(c: &MarkedConfig) -> Self {
        ExploreBounds {
            radius_cap: c.n() + c.support_radius() + 2,
            max_states: Self::DEFAULT_MAX_STATES,
            max_depth: u32::MAX,
            threads: 0,
            use_symmetry: true,
        }
    }

    pub fn with_radius_cap(mut self, cap: u32) -> Self {
        self.radius_cap = cap;
        self
    }

    pub fn with_max_states(mut self, max: usize) -> Self {
        self.max_states = max;
        self
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_symmetry(mut self, on: bool) -> Self {
        self.use_symmetry = on;
        self
    }
}

/// The symmetries of the grid fixing the marked face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    MirrorX,
    MirrorY,
    Diagonal,
    AntiDiagonal,
}

impl Symmetry {
    pub const ALL: [Symmetry; 8] = [
        Symmetry::Identity,
        Symmetry::Rot90,
        Symmetry::Rot180,
        Symmetry::Rot270,
        Symmetry::MirrorX,
        Symmetry::MirrorY,
        Symmetry::Diagonal,
        Symmetry::AntiDiagonal,
    ];

    pub fn apply(self, f: FaceCoord) -> FaceCoord {
        let (x, y) = (f.x, f.y);
        let (x, y) = match self {
            Symmetry::Identity => (x, y),
            Symmetry::Rot90 => (-y, x),
            Symmetry::Rot180 => (-x, -y),
            Symmetry::Rot270 => (y, -x),
            Symmetry::MirrorX => (-x, y),
            Symmetry::MirrorY => (x, -y),
            Symmetry::Diagonal => (y, x),
            Symmetry::AntiDiagonal => (-y, -x),
        };
        FaceCoord::new(x, y)
    }

    pub fn apply_config(self, c: &MarkedConfig) -> MarkedConfig {
        c.map_faces(|f| self.apply(f))
    }

    pub fn apply_move(self, m: FireMove) -> FireMove {
        FireMove::new(self.apply(m.from()), self.apply(m.to()))
            .expect("symmetries preserve adjacency")
    }

    /// Symmetries under which `c` is invariant, identity first.
    pub fn stabilizer(c: &MarkedConfig) -> Vec<Symmetry> {
        Symmetry::ALL
            .into_iter()
            .filter(|s| s.apply_config(c) == *c)
            .collect()
    }
}

/// Which bound cut the search short, if any.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Truncation {
    /// Some legal move would have put weight beyond the radius cap.
    pub beyond_cap: bool,
    pub max_states: bool,
    pub max_depth: bool,
}

impl Truncation {
    pub fn any(&self) -> bool {
        self.beyond_cap || self.max_states || self.max_depth
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Terminal {
    pub config: MarkedConfig,
    /// Length of the witness trace, which is a shortest one.
    pub depth: u32,
    pub witness: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExploreResult {
    pub radius_cap: u32,
    /// Number of symmetries the search was quotiented by.
    pub symmetry_order: usize,
    /// Stored states, one per orbit.
    pub states_visited: usize,
    pub depth_reached: u32,
    pub truncated: bool,
    pub truncation: Truncation,
    /// Every stable state found, orbits expanded, ordered by depth.
    pub terminals: Vec<Terminal>,
}

impl ExploreResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serialization is infallible")
    }

    pub fn terminal_configs(&self) -> impl Iterator<Item = &MarkedConfig> {
        self.terminals.iter().map(|t| &t.config)
    }
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Face(usize),
    Marked,
    Beyond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Face(usize),
    Marked,
}

/// A move in layout terms; `None` is the marked face.
type Step = (Option<usize>, Option<usize>);

/// The faces a search can touch, their bit fields and adjacency.
struct Layout {
    n: u32,
    faces: Vec<FaceCoord>,
    index: HashMap<FaceCoord, usize>,
    bound: Vec<u32>,
    word: Vec<usize>,
    shift: Vec<u32>,
    mask: Vec<u64>,
    words: usize,
    adj: Vec<[Target; 4]>,
    marked_adj: [Target; 4],
    sources: Vec<Source>,
    group: Vec<Symmetry>,
    perms: Vec<Vec<usize>>,
}

impl Layout {
    fn new(c0: &MarkedConfig, cap: u32, use_symmetry: bool) -> Self {
        let n = c0.n();
        let support: Vec<(FaceCoord, u32)> = c0.faces().collect();
        let upper = |f: FaceCoord| {
            let from_marked = (n + 1).saturating_sub(f.norm());
            support
                .iter()
                .map(|&(h, w)| w.saturating_sub(f.dist(h)))
                .fold(from_marked, u32::max)
        };
        let mut faces = Vec::new();
        let mut bound = Vec::new();
        for f in ball(cap).into_iter().filter(|f| !f.is_marked()) {
            let u = upper(f);
            if u > 0 {
                faces.push(f);
                bound.push(u);
            }
        }
        let (mut word, mut shift, mut mask) = (Vec::new(), Vec::new(), Vec::new());
        let (mut w, mut s) = (0usize, 0u32);
        for &u in &bound {
            let width = u32::BITS - u.leading_zeros();
            if s + width > 64 {
                w += 1;
                s = 0;
            }
            word.push(w);
            shift.push(s);
            mask.push(((1u128 << width) - 1) as u64);
            s += width;
        }
        let words = w + 1;

        let index: HashMap<FaceCoord, usize> =
            faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let target = |g: FaceCoord| {
            if g.is_marked() {
                Target::Marked
            } else {
                index.get(&g).map_or(Target::Beyond, |&j| Target::Face(j))
            }
        };
        let adj = faces
            .iter()
            .map(|&f| Direction::ALL.map(|d| target(f.step(d))))
            .collect();
        let marked_adj = Direction::ALL.map(|d| target(FaceCoord::MARKED.step(d)));
        let mut sources: Vec<Source> = (0..faces.len()).map(Source::Face).collect();
        let at = faces.partition_point(|&f| f < FaceCoord::MARKED);
        sources.insert(at, Source::Marked);

        let group = if use_symmetry {
            Symmetry::stabilizer(c0)
        } else {
            vec![Symmetry::Identity]
        };
        // the ball and the bound are invariant under the stabilizer
        let perms = group
            .iter()
            .map(|s| faces.iter().map(|&f| index[&s.apply(f)]).collect())
            .collect();
        Layout {
            n,
            faces,
            index,
            bound,
            word,
            shift,
            mask,
            words,
            adj,
            marked_adj,
            sources,
            group,
            perms,
        }
    }

    #[inline]
    fn get(&self, k: &[u64], i: usize) -> u32 {
        ((k[self.word[i]] >> self.shift[i]) & self.mask[i]) as u32
    }

    #[inline]
    fn bump(&self, k: &mut [u64], i: usize, up: bool) {
        let unit = 1u64 << self.shift[i];
        if up {
            k[self.word[i]] += unit;
        } else {
            k[self.word[i]] -= unit;
        }
    }

    fn apply_step(&self, k: &mut [u64], step: Step) {
        if let Some(a) = step.0 {
            self.bump(k, a, false);
        }
        if let Some(b) = step.1 {
            self.bump(k, b, true);
        }
    }

    /// Packs `c`, or `None` if some face lies outside the layout or above its bound.
    fn encode(&self, c: &MarkedConfig) -> Option<Vec<u64>> {
        if c.n() != self.n {
            return None;
        }
        let mut k = vec![0u64; self.words];
        for (f, w) in c.faces() {
            let &i = self.index.get(&f)?;
            if w > self.bound[i] {
                return None;
            }
            k[self.word[i]] |= (w as u64) << self.shift[i];
        }
        Some(k)
    }

    fn decode(&self, k: &[u64]) -> MarkedConfig {
        let mut c = MarkedConfig::empty(self.n);
        for (i, &f) in self.faces.iter().enumerate() {
            let w = self.get(k, i);
            if w > 0 {
                c.set(f, w);
            }
        }
        c
    }

    /// Images of `k` under every symmetry of the group, concatenated.
    fn images(&self, k: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; self.words * self.group.len()];
        out[..self.words].copy_from_slice(k);
        for (g, perm) in self.perms.iter().enumerate().skip(1) {
            let img = &mut out[g * self.words..(g + 1) * self.words];
            for (i, &j) in perm.iter().enumerate() {
                let w = self.get(k, i) as u64;
                if w > 0 {
                    img[self.word[j]] |= w << self.shift[j];
                }
            }
        }
        out
    }

    /// Least image, after `step`, of the state whose images are given.
    fn canonical_after(&self, images: &[u64], step: Step, scratch: &mut [u64], best: &mut [u64]) {
        let nw = self.words;
        for (g, perm) in self.perms.iter().enumerate() {
            scratch.copy_from_slice(&images[g * nw..(g + 1) * nw]);
            self.apply_step(scratch, (step.0.map(|a| perm[a]), step.1.map(|b| perm[b])));
            if g == 0 || *scratch < *best {
                best.copy_from_slice(scratch);
            }
        }
    }

    fn canonical(&self, k: &[u64]) -> Vec<u64> {
        let mut best = vec![0u64; self.words];
        let mut scratch = vec![0u64; self.words];
        self.canonical_after(&self.images(k), (None, None), &mut scratch, &mut best);
        best
    }

    /// Calls `emit` for each legal in-layout move in canonical order and
    /// reports whether some legal move would leave the cap.
    fn moves(&self, k: &[u64], mut emit: impl FnMut(Step)) -> bool {
        let n = self.n;
        let mut beyond = false;
        for &src in &self.sources {
            match src {
                Source::Marked => {
                    for t in self.marked_adj {
                        match t {
                            Target::Face(j) if self.get(k, j) < n => emit((None, Some(j))),
                            Target::Beyond if n > 0 => beyond = true,
                            _ => {}
                        }
                    }
                }
                Source::Face(i) => {
                    let w = self.get(k, i);
                    if w == 0 {
                        continue;
                    }
                    for t in self.adj[i] {
                        match t {
                            Target::Marked if w > n => emit((Some(i), None)),
                            Target::Face(j) if w >= self.get(k, j) + 2 => emit((Some(i), Some(j))),
                            // only faces past the cap are missing here: the
                            // bound keeps every other missing face empty
                            Target::Beyond if w >= 2 => beyond = true,
                            _ => {}
                        }
                    }
                }
            }
        }
        beyond
    }

    fn fire_move(&self, step: Step) -> FireMove {
        let face = |i: Option<usize>| i.map_or(FaceCoord::MARKED, |i| self.faces[i]);
        FireMove::new(face(step.0), face(step.1)).expect("layout steps are adjacent")
    }

    /// Offers every step that could have produced `k`, in canonical order,
    /// with its predecessor, until `emit` accepts one.
    fn predecessors(&self, k: &[u64], mut emit: impl FnMut(Step, &[u64]) -> bool) {
        let n = self.n;
        let room = |i: usize| self.get(k, i) < self.bound[i];
        let mut p = k.to_vec();
        let mut offer = |step: Step| {
            p.copy_from_slice(k);
            // undo the step
            self.apply_step(&mut p, (step.1, step.0));
            emit(step, &p)
        };
        for &src in &self.sources {
            match src {
                Source::Marked => {
                    for t in self.marked_adj {
                        if let Target::Face(j) = t {
                            let w = self.get(k, j);
                            if w >= 1 && w - 1 < n && offer((None, Some(j))) {
                                return;
                            }
                        }
                    }
                }
                Source::Face(i) => {
                    if !room(i) {
                        continue;
                    }
                    let wi = self.get(k, i);
                    for t in self.adj[i] {
                        let legal = match t {
                            Target::Marked => wi + 1 > n,
                            Target::Face(j) => {
                                let wj = self.get(k, j);
                                wj >= 1 && wi >= wj
                            }
                            Target::Beyond => false,
                        };
                        let step = match t {
                            Target::Face(j) => (Some(i), Some(j)),
                            _ => (Some(i), None),
                        };
                        if legal && offer(step) {
                            return;
                        }
                    }
                }
            }
        }
    }
}

/// Walks back from `k` at `depth` to the start, one level at a time.
/// `at_level(c, d)` tells whether the canonical state `c` was first seen at depth `d`.
fn rebuild_witness(layout: &Layout, k: &[u64], depth: u32, at_level: impl Fn(&[u64], u32) -> bool) -> Trace {
    let mut cur = k.to_vec();
    let mut rev = Vec::with_capacity(depth as usize);
    for level in (1..=depth).rev() {
        let mut found = None;
        layout.predecessors(&cur, |step, p| {
            let hit = at_level(&layout.canonical(p), level - 1);
            if hit {
                found = Some((step, p.to_vec()));
            }
            hit
        });
        let (step, p) = found.expect("every stored state has a predecessor one level up");
        rev.push(layout.fire_move(step));
        cur = p;
    }
    rev.reverse();
    rev
}

struct Expansion<const W: usize> {
    successors: Vec<[u64; W]>,
    any_move: bool,
    beyond: bool,
}

fn expand<const W: usize>(layout: &Layout, k: &[u64; W]) -> Expansion<W> {
    let images = layout.images(k);
    let mut scratch = [0u64; W];
    let mut successors = Vec::new();
    let mut any_move = false;
    let beyond = layout.moves(k, |step| {
        any_move = true;
        let mut best = [0u64; W];
        layout.canonical_after(&images, step, &mut scratch, &mut best);
        successors.push(best);
    });
    Expansion {
        successors,
        any_move,
        beyond,
    }
}

/// Removes from the sorted `cands` every element of the sorted `seen`.
fn subtract<K: Ord + Copy>(cands: &mut Vec<K>, seen: &[K]) {
    if seen.is_empty() || cands.is_empty() {
        return;
    }
    if cands.len() * 32 < seen.len() {
        cands.retain(|k| seen.binary_search(k).is_err());
        return;
    }
    let mut j = 0;
    cands.retain(|k| {
        while j < seen.len() && seen[j] < *k {
            j += 1;
        }
        j == seen.len() || seen[j] != *k
    });
}

/// Sorted union of two sorted, duplicate-free vectors.
fn union<K: Ord + Copy>(a: Vec<K>, b: Vec<K>) -> Vec<K> {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

const FRONTIER_CHUNK: usize = 1 << 14;
const CANDIDATE_BYTES: usize = 1 << 28;

/// Level-synchronous BFS with delayed duplicate detection: each level is a
/// sorted array, and candidate successors are sorted, deduplicated and
/// subtracted from earlier levels in bulk.
fn explore_words<const W: usize>(
    layout: &Layout,
    c0: &MarkedConfig,
    b: &ExploreBounds,
    pool: Option<&rayon::ThreadPool>,
) -> ExploreResult {
    let start: [u64; W] = layout
        .encode(c0)
        .expect("the bound covers the start")
        .try_into()
        .expect("layout width matches");
    let max_depth = b.max_depth;
    let flush_at = (CANDIDATE_BYTES / (8 * W)).max(1);
    let mut levels: Vec<Vec<[u64; W]>> = vec![vec![start]];
    let mut total = 1usize;
    let mut terminal_keys: Vec<(u32, [u64; W])> = Vec::new();
    let mut trunc = Truncation::default();

    let sort = |v: &mut Vec<[u64; W]>| {
        match pool {
            Some(p) => p.install(|| v.par_sort_unstable()),
            None => v.sort_unstable(),
        }
        v.dedup();
    };

    loop {
        let level = (levels.len() - 1) as u32;
        if levels[level as usize].is_empty() {
            levels.pop();
            break;
        }
        if level >= max_depth {
            trunc.max_depth = true;
            break;
        }
        let mut next: Vec<[u64; W]> = Vec::new();
        let mut cands: Vec<[u64; W]> = Vec::new();
        let flush = |cands: &mut Vec<[u64; W]>, next: Vec<[u64; W]>, levels: &[Vec<[u64; W]>]| {
            sort(cands);
            for seen in levels {
                subtract(cands, seen);
            }
            union(next, std::mem::take(cands))
        };
        for chunk in levels[level as usize].chunks(FRONTIER_CHUNK) {
            let expanded: Vec<Expansion<W>> = match pool {
                None => chunk.iter().map(|k| expand(layout, k)).collect(),
                Some(p) => p.install(|| chunk.par_iter().map(|k| expand(layout, k)).collect()),
            };
            for (k, exp) in chunk.iter().zip(expanded) {
                trunc.beyond_cap |= exp.beyond;
                if !exp.any_move && !exp.beyond {
                    terminal_keys.push((level, *k));
                }
                cands.extend_from_slice(&exp.successors);
            }
            if cands.len() >= flush_at {
                next = flush(&mut cands, next, &levels);
            }
        }
        next = flush(&mut cands, next, &levels);
        if total + next.len() > b.max_states {
            next.truncate(b.max_states - total);
            trunc.max_states = true;
            total += next.len();
            levels.push(next);
            break;
        }
        total += next.len();
        levels.push(next);
    }

    let at_level = |c: &[u64], d: u32| {
        levels
            .get(d as usize)
            .is_some_and(|l| l.binary_search_by(|x| x.as_slice().cmp(c)).is_ok())
    };
    let mut terminals = Vec::new();
    for (depth, rep) in terminal_keys {
        let witness = rebuild_witness(layout, &rep, depth, at_level);
        let rep_config = layout.decode(&rep);
        let mut seen = Vec::new();
        for &s in &layout.group {
            let config = s.apply_config(&rep_config);
            if seen.contains(&config) {
                continue;
            }
            seen.push(config.clone());
            terminals.push(Terminal {
                config,
                depth,
                witness: witness.iter().map(|&m| s.apply_move(m)).collect(),
            });
        }
    }
    ExploreResult {
        radius_cap: b.radius_cap,
        symmetry_order: layout.group.len(),
        states_visited: total,
        depth_reached: levels.iter().rposition(|l| !l.is_empty()).unwrap_or(0) as u32,
        truncated: trunc.any(),
        truncation: trunc,
        terminals,
    }
}

/// Widest state, in 64-bit words, the explorer handles.
pub const MAX_STATE_WORDS: usize = 8;

/// Breadth-first closure of the legal-move relation from `c0`.
pub fn explore(c0: &MarkedConfig, b: &ExploreBounds) -> Result<ExploreResult> {
    if b.radius_cap < c0.support_radius() + 1 {
        return Err(FlowError::OutOfScope(format!(
            "radius cap {} must exceed the support radius {}",
            b.radius_cap,
            c0.support_radius()
        )));
    }
    let layout = Layout::new(c0, b.radius_cap, b.use_symmetry);
    let pool = match b.threads {
        1 => None,
        t => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| FlowError::OutOfScope(format!("thread pool: {e}")))?,
        ),
    };
    let pool = pool.as_ref();
    let result = match layout.words {
        1 => explore_words::<1>(&layout, c0, b, pool),
        2 => explore_words::<2>(&layout, c0, b, pool),
        3 => explore_words::<3>(&layout, c0, b, pool),
        4 => explore_words::<4>(&layout, c0, b, pool),
        5 => explore_words::<5>(&layout, c0, b, pool),
        6 => explore_words::<6>(&layout, c0, b, pool),
        7 => explore_words::<7>(&layout, c0, b, pool),
        8 => explore_words::<8>(&layout, c0, b, pool),
        w => {
            return Err(FlowError::OutOfScope(format!(
                "states need {w} words of 64 bits; at most {MAX_STATE_WORDS} are supported"
            )))
        }
    };
    Ok(result)
}

/// `Some(true)` when exploration completed with a single terminal,
/// `Some(false)` when two distinct terminals were found (even in a
/// truncated run, since both are genuinely reachable and stable), and
/// `None` otherwise.
pub fn confluence(r: &ExploreResult) -> Option<bool> {
    if r.terminals.len() >= 2 {
        Some(false)
    } else if r.truncated {
        None
    } else {
        Some(r.terminals.len() == 1)
    }
}

pub fn is_confluent(c0: &MarkedConfig, b: &ExploreBounds) -> Result<Option<bool>> {
    Ok(confluence(&explore(c0, b)?))
}

/// Best-first search for a legal trace from `c0` to `target`, ordered by
/// depth plus the L1 distance between weight vectors. `None` means the target is
/// provably out of reach (it exceeds the weight bound) or the state budget
/// ran out first.
pub fn search_to(c0: &MarkedConfig, target: &MarkedConfig, b: &ExploreBounds) -> Result<Option<Trace>> {
    let cap = b
        .radius_cap
        .max(c0.support_radius() + 1)
        .max(target.support_radius() + 1);
    let layout = Layout::new(c0, cap, false);
    let Some(goal) = layout.encode(target) else {
        return Ok(None);
    };
    let start = layout.encode(c0).expect("the bound covers the start");
    let distance = |k: &[u64]| -> u32 {
        (0..layout.faces.len())
            .map(|i| layout.get(k, i).abs_diff(layout.get(&goal, i)))
            .sum()
    };
    let mut depth_of: HashMap<Vec<u64>, u32> = HashMap::new();
    let mut keys: Vec<Vec<u64>> = vec![start.clone()];
    depth_of.insert(start.clone(), 0);
    let mut heap = BinaryHeap::new();
    let d0 = distance(&start);
    heap.push(Reverse((d0, d0, 0usize)));
    while let Some(Reverse((_, dist, id))) = heap.pop() {
        let k = keys[id].clone();
        let depth = depth_of[&k];
        if dist == 0 {
            let at_level = |c: &[u64], d: u32| depth_of.get(c) == Some(&d);
            return Ok(Some(rebuild_witness(&layout, &k, depth, at_level)));
        }
        let mut fresh = Vec::new();
        layout.moves(&k, |step| {
            let mut t = k.clone();
            layout.apply_step(&mut t, step);
            fresh.push(t);
        });
        for t in fresh {
            if depth_of.contains_key(&t) {
                continue;
            }
            if keys.len() >= b.max_states {
                return Ok(None);
            }
            depth_of.insert(t.clone(), depth + 1);
            let d = distance(&t);
            heap.push(Reverse((depth + 1 + d, d, keys.len())));
            keys.push(t);
        }
    }
    Ok(None)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::firing;

    fn bounds(c: &MarkedConfig, cap: u32) -> ExploreBounds {
        ExploreBounds::for_config(c).with_radius_cap(cap).with_threads(1)
    }

    #[test]
    fn aztec_is_its_own_terminal() {
        let az = MarkedConfig::aztec(3);
        let r = explore(&az, &bounds(&az, 5)).unwrap();
        assert_eq!(r.states_visited, 1);
        assert_eq!(r.symmetry_order, 8);
        assert!(!r.truncated);
        assert_eq!(r.terminals.len(), 1);
        assert_eq!(r.terminals[0].config, az);
        assert!(r.terminals[0].witness.is_empty());
    }

    #[test]
    fn small_pulses_are_confluent() {
        for n in 0..=2 {
            for sym in [false, true] {
                let p = MarkedConfig::pulse(n, 0);
                let r = explore(&p, &bounds(&p, n + 3).with_symmetry(sym)).unwrap();
                assert!(!r.truncated, "n={n}");
                assert_eq!(r.terminal_configs().collect::<Vec<_>>(), vec![&MarkedConfig::aztec(n)]);
                let t = &r.terminals[0];
                assert_eq!(firing::replay(&p, &t.witness).unwrap(), t.config);
                assert_eq!(confluence(&r), Some(true));
            }
        }
    }

    #[test]
    fn symmetry_only_merges_orbits() {
        let p = MarkedConfig::pulse(2, 0);
        let full = explore(&p, &bounds(&p, 4).with_symmetry(false)).unwrap();
        let quot = explore(&p, &bounds(&p, 4)).unwrap();
        assert_eq!(full.states_visited, 9281);
        assert!(quot.states_visited * 8 >= full.states_visited);
        assert!(quot.states_visited < full.states_visited / 4);
        assert_eq!(full.terminals[0].depth, quot.terminals[0].depth);
    }

    #[test]
    fn orbits_of_terminals_are_expanded() {
        let c = MarkedConfig::from_faces(0, [(FaceCoord::new(1, 1), 3)]).unwrap();
        let r = explore(&c, &bounds(&c, 4)).unwrap();
        assert_eq!(r.symmetry_order, 2);
        for t in &r.terminals {
            assert!(firing::is_stable(&t.config));
            assert_eq!(firing::replay(&c, &t.witness).unwrap(), t.config);
        }
        let full = explore(&c, &bounds(&c, 4).with_symmetry(false)).unwrap();
        let mut a: Vec<String> = r.terminal_configs().map(|c| c.to_json()).collect();
        let mut b: Vec<String> = full.terminal_configs().map(|c| c.to_json()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(a.len() > 1);
    }

    #[test]
    fn heavy_face_near_the_cap_truncates() {
        let c = MarkedConfig::from_faces(0, [(FaceCoord::new(0, 2), 6)]).unwrap();
        let r = explore(&c, &bounds(&c, 3)).unwrap();
        assert!(r.truncation.beyond_cap);
        assert!(r.terminals.iter().all(|t| firing::is_stable(&t.config)));
    }

    #[test]
    fn bounds_truncate_without_error() {
        let p = MarkedConfig::pulse(2, 1);
        let r = explore(&p, &bounds(&p, 5).with_max_states(10)).unwrap();
        assert!(r.truncation.max_states);
        assert_eq!(r.states_visited, 10);
        assert_eq!(confluence(&r), None);
        let r = explore(&p, &bounds(&p, 5).with_max_depth(2)).unwrap();
        assert!(r.truncation.max_depth);
        assert!(r.depth_reached <= 2);
    }

    #[test]
    fn cap_must_cover_the_support() {
        let p = MarkedConfig::pulse(2, 2);
        assert!(explore(&p, &bounds(&p, 2)).is_err());
    }

    #[test]
    fn weight_bound_packing() {
        let p = MarkedConfig::pulse(3, 0);
        let layout = Layout::new(&p, 6, true);
        // only the Aztec diamond can ever fill
        assert_eq!(layout.faces.len(), 24);
        assert_eq!(layout.words, 1);
        let az = MarkedConfig::aztec(3);
        assert_eq!(layout.decode(&layout.encode(&az).unwrap()), az);
        assert!(layout.encode(&MarkedConfig::pulse(3, 2)).is_none());
    }

    #[test]
    fn search_finds_the_aztec_diamond() {
        let p = MarkedConfig::pulse(2, 1);
        let az = MarkedConfig::aztec(2);
        let trace = search_to(&p, &az, &bounds(&p, 4).with_max_states(100_000))
            .unwrap()
            .unwrap();
        assert_eq!(firing::replay(&p, &trace).unwrap(), az);
        // weight 3 two steps out never appears from this pulse
        let far = MarkedConfig::from_faces(2, [(FaceCoord::new(2, 0), 3)]).unwrap();
        assert_eq!(search_to(&p, &far, &bounds(&p, 4)).unwrap(), None);
    }
}

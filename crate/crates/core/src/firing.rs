//! Single firing moves on a [`MarkedConfig`].

use crate::error::{FlowError, Result};
use crate::grid::{Direction, FaceCoord, MarkedConfig};
use serde::{Deserialize, Serialize};

const ORDINARY_RULE: &str = "an ordinary fire needs weight(from) >= weight(to) + 2";
const FROM_MARKED_RULE: &str = "the marked face fires only into a neighbor weighing less than n";
const INTO_MARKED_RULE: &str = "a neighbor fires into the marked face only when it weighs more than n";

/// One unit of weight moved from `from` to the adjacent face `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMove")]
pub struct FireMove {
    from: FaceCoord,
    to: FaceCoord,
}

#[derive(Deserialize)]
struct RawMove {
    from: FaceCoord,
    to: FaceCoord,
}

impl TryFrom<RawMove> for FireMove {
    type Error = FlowError;
    fn try_from(raw: RawMove) -> Result<Self> {
        FireMove::new(raw.from, raw.to)
    }
}

impl FireMove {
    pub fn new(from: FaceCoord, to: FaceCoord) -> Result<Self> {
        if from.dist(to) != 1 {
            return Err(FlowError::InvalidMove {
                from,
                to,
                reason: "faces are not adjacent",
            });
        }
        Ok(FireMove { from, to })
    }

    pub fn toward(from: FaceCoord, d: Direction) -> Self {
        FireMove {
            from,
            to: from.step(d),
        }
    }

    pub fn from(&self) -> FaceCoord {
        self.from
    }

    pub fn to(&self) -> FaceCoord {
        self.to
    }

    pub fn touches_marked(&self) -> bool {
        self.from.is_marked() || self.to.is_marked()
    }
}

/// A sequence of moves, serialized as a JSON array.
pub type Trace = Vec<FireMove>;

/// Checks legality, returning the violated rule on failure.
pub fn check(c: &MarkedConfig, m: FireMove) -> Result<()> {
    let ok = legal(c, m.from, m.to);
    if ok {
        Ok(())
    } else {
        let rule = if m.from.is_marked() {
            FROM_MARKED_RULE
        } else if m.to.is_marked() {
            INTO_MARKED_RULE
        } else {
            ORDINARY_RULE
        };
        Err(FlowError::IllegalFire {
            from: m.from,
            to: m.to,
            rule,
        })
    }
}

pub fn is_legal(c: &MarkedConfig, m: FireMove) -> bool {
    legal(c, m.from, m.to)
}

#[inline]
fn legal(c: &MarkedConfig, from: FaceCoord, to: FaceCoord) -> bool {
    let n = c.n();
    if from.is_marked() {
        c.weight(to) < n
    } else if to.is_marked() {
        c.weight(from) > n
    } else {
        c.weight(from) >= c.weight(to) + 2
    }
}

/// Applies a legal move in place. The marked weight never changes.
pub fn apply_mut(c: &mut MarkedConfig, m: FireMove) -> Result<()> {
    check(c, m)?;
    if !m.from.is_marked() {
        c.set(m.from, c.weight(m.from) - 1);
    }
    if !m.to.is_marked() {
        c.set(m.to, c.weight(m.to) + 1);
    }
    Ok(())
}

pub fn apply(c: &MarkedConfig, m: FireMove) -> Result<MarkedConfig> {
    let mut next = c.clone();
    apply_mut(&mut next, m)?;
    Ok(next)
}

/// Faces that could be the source of a legal move, in lexicographic order.
/// Sources are the marked face and the support; zero-weight faces never fire.
fn sources(c: &MarkedConfig) -> impl Iterator<Item = FaceCoord> + '_ {
    let mut marked_pending = true;
    let mut support = c.faces().map(|(f, _)| f).peekable();
    std::iter::from_fn(move || {
        if marked_pending {
            match support.peek() {
                Some(&f) if f < FaceCoord::MARKED => {}
                _ => {
                    marked_pending = false;
                    return Some(FaceCoord::MARKED);
                }
            }
        }
        support.next()
    })
}

fn moves_iter(c: &MarkedConfig) -> impl Iterator<Item = FireMove> + '_ {
    sources(c).flat_map(move |f| {
        Direction::ALL
            .into_iter()
            .map(move |d| FireMove::toward(f, d))
            .filter(move |m| is_legal(c, *m))
    })
}

/// All legal moves, sorted by source face and then by direction E, N, W, S.
pub fn legal_moves(c: &MarkedConfig) -> Vec<FireMove> {
    moves_iter(c).collect()
}

/// The first move of [`legal_moves`] without building the whole list.
pub fn first_legal_move(c: &MarkedConfig) -> Option<FireMove> {
    moves_iter(c).next()
}

pub fn is_stable(c: &MarkedConfig) -> bool {
    first_legal_move(c).is_none()
}

/// Replays a trace move by move, reporting the index of the first illegal move.
pub fn replay(c: &MarkedConfig, trace: &[FireMove]) -> Result<MarkedConfig> {
    let mut cur = c.clone();
    for (index, &m) in trace.iter().enumerate() {
        apply_mut(&mut cur, m).map_err(|e| FlowError::Replay {
            index,
            source: Box::new(e),
        })?;
    }
    Ok(cur)
}

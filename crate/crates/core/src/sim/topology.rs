//! The `side x side` grid with wraparound edges.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("node count {0} is not a perfect square")]
    NotSquare(usize),
    #[error("node count {0} out of range (1..=65025)")]
    OutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: u16,
    pub y: u16,
}

/// The four walk directions: east, west, north, south.
pub const DIRECTIONS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridTopology {
    side: u16,
}

impl GridTopology {
    pub fn new(n: usize) -> Result<Self, TopologyError> {
        if n == 0 || n > 255 * 255 {
            return Err(TopologyError::OutOfRange(n));
        }
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n {
            return Err(TopologyError::NotSquare(n));
        }
        Ok(Self { side: side as u16 })
    }

    pub fn side(&self) -> u16 {
        self.side
    }

    pub fn node_count(&self) -> usize {
        usize::from(self.side) * usize::from(self.side)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count() as u16).map(NodeId)
    }

    pub fn cell(&self, id: NodeId) -> Cell {
        Cell {
            x: id.0 % self.side,
            y: id.0 / self.side,
        }
    }

    pub fn node_at(&self, c: Cell) -> NodeId {
        NodeId(c.y * self.side + c.x)
    }

    pub fn step(&self, c: Cell, (dx, dy): (i32, i32)) -> Cell {
        let s = i32::from(self.side);
        Cell {
            x: (i32::from(c.x) + dx).rem_euclid(s) as u16,
            y: (i32::from(c.y) + dy).rem_euclid(s) as u16,
        }
    }

    /// Neighbors in [`DIRECTIONS`] order. On small tori the same cell can
    /// appear more than once.
    pub fn neighbors(&self, id: NodeId) -> [NodeId; 4] {
        let c = self.cell(id);
        DIRECTIONS.map(|d| self.node_at(self.step(c, d)))
    }

    fn axis_distance(&self, a: u16, b: u16) -> u16 {
        let forward = (b + self.side - a) % self.side;
        forward.min(self.side - forward)
    }

    /// Hop count of a shortest path.
    pub fn distance(&self, a: NodeId, b: NodeId) -> usize {
        let (ca, cb) = (self.cell(a), self.cell(b));
        usize::from(self.axis_distance(ca.x, cb.x)) + usize::from(self.axis_distance(ca.y, cb.y))
    }

    pub fn diameter(&self) -> usize {
        2 * usize::from(self.side / 2)
    }

    pub fn nodes_at_distance(&self, from: NodeId, d: usize) -> Vec<NodeId> {
        self.nodes().filter(|&n| self.distance(from, n) == d).collect()
    }

    pub fn random_node(&self, rng: &mut dyn RngCore) -> NodeId {
        NodeId(rng.random_range(0..self.node_count() as u16))
    }

    /// A shortest path from `a` to `b`, both endpoints included, drawn
    /// uniformly from all shortest paths.
    pub fn shortest_path(&self, a: NodeId, b: NodeId, rng: &mut dyn RngCore) -> Vec<NodeId> {
        let (ca, cb) = (self.cell(a), self.cell(b));
        let (sx, mut nx) = self.axis_plan(ca.x, cb.x, rng);
        let (sy, mut ny) = self.axis_plan(ca.y, cb.y, rng);
        let mut path = Vec::with_capacity(usize::from(nx + ny) + 1);
        let mut cur = ca;
        path.push(a);
        // Choosing each step with probability proportional to the remaining
        // moves on that axis makes every interleaving equally likely.
        while nx + ny > 0 {
            let take_x = rng.random_range(0..u32::from(nx + ny)) < u32::from(nx);
            if take_x {
                cur = self.step(cur, (sx, 0));
                nx -= 1;
            } else {
                cur = self.step(cur, (0, sy));
                ny -= 1;
            }
            path.push(self.node_at(cur));
        }
        debug_assert_eq!(cur, cb);
        path
    }

    /// Direction and number of moves along one axis. When both directions
    /// are equally short, one is picked at random.
    fn axis_plan(&self, from: u16, to: u16, rng: &mut dyn RngCore) -> (i32, u16) {
        let forward = (to + self.side - from) % self.side;
        let backward = (self.side - forward) % self.side;
        if forward == 0 {
            (0, 0)
        } else if forward < backward {
            (1, forward)
        } else if backward < forward {
            (-1, backward)
        } else if rng.random::<bool>() {
            (1, forward)
        } else {
            (-1, backward)
        }
    }
}

//! Poisson samples conditioned on a crossing event that is too rare for
//! rejection.
//!
//! A spatial birth–death Metropolis chain targets the Poisson law on the
//! unit neighbourhood of the rectangle restricted to the event. A birth at
//! a uniform point of the window is accepted with probability
//! `min(1, λ|W| / (N + 1))`, a death of a uniform live point with
//! `min(1, N / (λ|W|))`, and either move is refused if it would leave the
//! event. This is the Poisson density restricted to the event in detailed
//! balance, so the chain is exact in the long run; burn-in and spacing
//! between recorded states control the transient.
//!
//! Only centers within distance 1 of the rectangle influence the event.
//! When a state is recorded, the rest of the sampling window is filled
//! with fresh, independent Poisson points.
//!
//! Event checks are incremental. For a vacant crossing (no occupied
//! crossing in the transposed direction) deaths are always allowed and
//! births are checked against a union-find that only ever merges, so after
//! deaths it over-connects; a birth that seems to close an occupied
//! crossing is confirmed by a directed search towards both sides, with an
//! exact rebuild when the search disagrees. For an occupied
//! crossing births are always allowed and a death is checked by a search
//! from the starting side, skipped when the point lies outside the last
//! known start-attached set.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crossing::{occupied_crossing, CrossingQuery};
use crate::error::{invalid, PercolationError, Result};
use crate::geometry::{activation_radius, boundary_activation, Orientation, Point, Rect, Segment};
use crate::rng::{substream, StreamRng};
use crate::sampler::{sample_padded, PointSample};
use crate::union_find::DisjointSets;

/// The event a chain is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingEvent {
    Occupied(Orientation),
    Vacant(Orientation),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCounters {
    pub proposals: u64,
    pub accepted: u64,
    pub rebuilds: u64,
}

const START: usize = 0;
const END: usize = 1;

pub struct ConditionedChain {
    rect: Rect<f64>,
    window: Rect<f64>,
    lambda: f64,
    event: CrossingEvent,
    sides: (Segment<f64>, Segment<f64>),
    pts: Vec<Point<f64>>,
    alive: Vec<bool>,
    /// Live slots, for uniform selection.
    live: Vec<u32>,
    /// Position of each live slot in `live`.
    pos: Vec<u32>,
    cells: Vec<Vec<u32>>,
    nx: usize,
    ny: usize,
    /// Vacant event: connectivity of slots (node `slot + 2`) and the two
    /// side nodes. Never joins START and END.
    uf: DisjointSets,
    stale: bool,
    /// Occupied event: the last known start-attached set.
    flagged: Vec<bool>,
    flagged_list: Vec<u32>,
    seen: Vec<u32>,
    epoch: u32,
    rng: StreamRng,
    pub counters: ChainCounters,
}

const CELL: f64 = 2.0;

impl ConditionedChain {
    /// Starts a chain from an unconditioned sample forced into the event:
    /// for a vacant crossing the centers near the mid-line are removed, for
    /// an occupied crossing a chain of discs is laid along it.
    pub fn new(rect: Rect<f64>, event: CrossingEvent, lambda: f64, seed: u64, stream: u64) -> Result<Self> {
        let rect = Rect::new(rect.x_min, rect.x_max, rect.y_min, rect.y_max)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid(format!("intensity must be finite and >= 0, got {lambda}")));
        }
        let occupied_orientation = match event {
            CrossingEvent::Occupied(o) => {
                if lambda == 0.0 {
                    return Err(PercolationError::Undefined(
                        "an occupied crossing has probability 0 at zero intensity".into(),
                    ));
                }
                o
            }
            CrossingEvent::Vacant(o) => o.transposed(),
        };
        let window = rect.dilate(1.0);
        let nx = (window.width() / CELL).ceil().max(1.0) as usize;
        let ny = (window.height() / CELL).ceil().max(1.0) as usize;
        let mut chain = Self {
            rect,
            window,
            lambda,
            event,
            sides: rect.sides(occupied_orientation),
            pts: Vec::new(),
            alive: Vec::new(),
            live: Vec::new(),
            pos: Vec::new(),
            cells: vec![Vec::new(); nx * ny],
            nx,
            ny,
            uf: DisjointSets::new(2),
            stale: false,
            flagged: Vec::new(),
            flagged_list: Vec::new(),
            seen: Vec::new(),
            epoch: 0,
            rng: substream(seed, stream),
            counters: ChainCounters::default(),
        };

        let initial = sample_padded(&rect, 1.0, lambda, seed, stream)?;
        let c = rect.center();
        let mut centers: Vec<Point<f64>> = initial.centers;
        match event {
            CrossingEvent::Vacant(o) => {
                // Clear a strip of half-width just over 1 around the mid-line.
                centers.retain(|p| match o {
                    Orientation::Horizontal => (p.y - c.y).abs() > 1.0 + 1e-9,
                    Orientation::Vertical => (p.x - c.x).abs() > 1.0 + 1e-9,
                });
            }
            CrossingEvent::Occupied(o) => {
                let (a, b) = match o {
                    Orientation::Horizontal => (Point::new(rect.x_min, c.y), Point::new(rect.x_max, c.y)),
                    Orientation::Vertical => (Point::new(c.x, rect.y_min), Point::new(c.x, rect.y_max)),
                };
                let links = (a.dist(&b) / 1.5).ceil() as usize;
                for k in 0..=links {
                    let t = k as f64 / links as f64;
                    centers.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
                }
            }
        }
        for p in centers {
            chain.insert(p);
        }
        chain.rebuild();
        if !chain.holds()? {
            return Err(PercolationError::Undefined("initial state is outside the event".into()));
        }
        Ok(chain)
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn event(&self) -> CrossingEvent {
        self.event
    }

    /// Current centers, in slot order.
    pub fn centers(&self) -> Vec<Point<f64>> {
        (0..self.pts.len()).filter(|&k| self.alive[k]).map(|k| self.pts[k]).collect()
    }

    /// Exact check of the event on the current state.
    pub fn holds(&self) -> Result<bool> {
        let sample = PointSample::from_centers(self.centers(), self.window, 1.0)?;
        Ok(match self.event {
            CrossingEvent::Occupied(o) => occupied_crossing(&sample, &CrossingQuery::unit(self.rect, o))?,
            CrossingEvent::Vacant(o) => !occupied_crossing(&sample, &CrossingQuery::unit(self.rect, o.transposed()))?,
        })
    }

    fn window_mass(&self) -> f64 {
        self.lambda * self.window.area()
    }

    fn cell_of(&self, p: &Point<f64>) -> (usize, usize) {
        let i = ((p.x - self.window.x_min) / CELL).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p.y - self.window.y_min) / CELL).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn insert(&mut self, p: Point<f64>) -> usize {
        let k = self.pts.len();
        self.pts.push(p);
        self.alive.push(true);
        self.pos.push(self.live.len() as u32);
        self.live.push(k as u32);
        self.flagged.push(false);
        self.seen.push(0);
        let node = self.uf.push();
        debug_assert_eq!(node, k + 2);
        let (i, j) = self.cell_of(&p);
        self.cells[j * self.nx + i].push(k as u32);
        k
    }

    fn remove(&mut self, k: usize) {
        self.alive[k] = false;
        let at = self.pos[k] as usize;
        let last = *self.live.last().expect("removing from an empty chain");
        self.live.swap_remove(at);
        if last as usize != k {
            self.pos[last as usize] = at as u32;
        }
        let (i, j) = self.cell_of(&self.pts[k]);
        let cell = &mut self.cells[j * self.nx + i];
        let idx = cell.iter().position(|&s| s as usize == k).expect("slot is in its cell");
        cell.swap_remove(idx);
        if self.flagged[k] {
            self.flagged[k] = false;
        }
    }

    /// Live slots whose clipped unit disc meets that of `p`, and whether the
    /// disc at `p` touches the start and end sides.
    fn contacts(&self, p: &Point<f64>, skip: Option<usize>, out: &mut Vec<usize>) -> (bool, bool) {
        out.clear();
        let (ci, cj) = self.cell_of(p);
        for j in cj.saturating_sub(1)..=(cj + 1).min(self.ny - 1) {
            for i in ci.saturating_sub(1)..=(ci + 1).min(self.nx - 1) {
                for &s in &self.cells[j * self.nx + i] {
                    let s = s as usize;
                    if Some(s) == skip {
                        continue;
                    }
                    let q = &self.pts[s];
                    if q.dist2(p) <= 4.0 && activation_radius(p, q, &self.rect) <= 1.0 {
                        out.push(s);
                    }
                }
            }
        }
        (
            boundary_activation(p, &self.sides.0) <= 1.0,
            boundary_activation(p, &self.sides.1) <= 1.0,
        )
    }

    /// Drops dead slots and, for the vacant event, recomputes exact
    /// connectivity.
    fn rebuild(&mut self) {
        self.counters.rebuilds += 1;
        let keep: Vec<usize> = (0..self.pts.len()).filter(|&k| self.alive[k]).collect();
        let pts: Vec<Point<f64>> = keep.iter().map(|&k| self.pts[k]).collect();
        let flagged: Vec<bool> = keep.iter().map(|&k| self.flagged[k]).collect();
        self.pts.clear();
        self.alive.clear();
        self.live.clear();
        self.pos.clear();
        self.flagged.clear();
        self.seen.clear();
        self.flagged_list.clear();
        self.epoch = 0;
        for cell in &mut self.cells {
            cell.clear();
        }
        self.uf = DisjointSets::new(2);
        for (p, f) in pts.into_iter().zip(flagged) {
            let k = self.insert(p);
            if f {
                self.flagged[k] = true;
                self.flagged_list.push(k as u32);
            }
        }
        self.stale = false;
        if let CrossingEvent::Vacant(_) = self.event {
            let mut buf = Vec::new();
            for k in 0..self.pts.len() {
                let p = self.pts[k];
                let (s, e) = self.contacts(&p, Some(k), &mut buf);
                if s {
                    self.uf.union(k + 2, START);
                }
                if e {
                    self.uf.union(k + 2, END);
                }
                for &q in &buf {
                    self.uf.union(k + 2, q + 2);
                }
            }
            debug_assert!(!self.uf.same(START, END));
        } else {
            self.refresh_flags(None);
        }
    }

    /// Search from the start side over live slots other than `skip`.
    /// Returns whether the end side is reached; on success the visited set
    /// becomes the flagged set.
    fn refresh_flags(&mut self, skip: Option<usize>) -> bool {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut queue = VecDeque::new();
        let mut visited = Vec::new();
        let mut reached = false;
        for &k in &self.live {
            let k = k as usize;
            if Some(k) != skip && boundary_activation(&self.pts[k], &self.sides.0) <= 1.0 {
                self.seen[k] = epoch;
                queue.push_back(k);
            }
        }
        let mut buf = Vec::new();
        while let Some(k) = queue.pop_front() {
            visited.push(k as u32);
            let p = self.pts[k];
            let (_, e) = self.contacts(&p, skip, &mut buf);
            reached |= e;
            for &q in &buf {
                if self.seen[q] != epoch {
                    self.seen[q] = epoch;
                    queue.push_back(q);
                }
            }
        }
        if reached {
            for &k in &self.flagged_list {
                self.flagged[k as usize] = false;
            }
            for &k in &visited {
                self.flagged[k as usize] = true;
            }
            self.flagged_list = visited;
        }
        reached
    }

    /// Whether any of `from` is connected to side `which` (0 start, 1 end)
    /// through live discs. Best-first search by distance to the side, so a
    /// connected start is typically confirmed along a short corridor.
    fn reaches_side(&mut self, from: &[usize], which: usize) -> bool {
        let side = if which == 0 { self.sides.0 } else { self.sides.1 };
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        // Distances are nonnegative, so their bit patterns order correctly.
        let mut heap = BinaryHeap::new();
        for &k in from {
            if self.seen[k] != epoch {
                self.seen[k] = epoch;
                heap.push(Reverse((boundary_activation(&self.pts[k], &side).to_bits(), k)));
            }
        }
        let mut buf = Vec::new();
        while let Some(Reverse((d, k))) = heap.pop() {
            if f64::from_bits(d) <= 1.0 {
                return true;
            }
            let p = self.pts[k];
            self.contacts(&p, None, &mut buf);
            for &q in &buf {
                if self.seen[q] != epoch {
                    self.seen[q] = epoch;
                    heap.push(Reverse((boundary_activation(&self.pts[q], &side).to_bits(), q)));
                }
            }
        }
        false
    }

    fn birth(&mut self) {
        let p = Point::new(
            self.window.x_min + self.rng.random::<f64>() * self.window.width(),
            self.window.y_min + self.rng.random::<f64>() * self.window.height(),
        );
        let ratio = self.window_mass() / (self.live.len() + 1) as f64;
        if ratio < 1.0 && self.rng.random::<f64>() >= ratio {
            return;
        }
        match self.event {
            CrossingEvent::Occupied(_) => {
                self.insert(p);
            }
            CrossingEvent::Vacant(_) => {
                let mut buf = Vec::new();
                let closes = |chain: &mut Self, buf: &mut Vec<usize>| {
                    let (s, e) = chain.contacts(&p, None, buf);
                    let rs = chain.uf.find(START);
                    let re = chain.uf.find(END);
                    let mut hit_s = s;
                    let mut hit_e = e;
                    for &q in buf.iter() {
                        let r = chain.uf.find(q + 2);
                        hit_s |= r == rs;
                        hit_e |= r == re;
                    }
                    (hit_s && hit_e, s, e)
                };
                let (mut blocked, mut s, mut e) = closes(self, &mut buf);
                if blocked && self.stale {
                    // Usually the birth really bridges the two sides; a
                    // directed search confirms that without a rebuild.
                    let contacts = buf.clone();
                    if (s || self.reaches_side(&contacts, 0)) && (e || self.reaches_side(&contacts, 1)) {
                        return;
                    }
                    self.rebuild();
                    (blocked, s, e) = closes(self, &mut buf);
                }
                if blocked {
                    return;
                }
                let k = self.insert(p);
                if s {
                    self.uf.union(k + 2, START);
                }
                if e {
                    self.uf.union(k + 2, END);
                }
                for &q in &buf {
                    self.uf.union(k + 2, q + 2);
                }
            }
        }
        self.counters.accepted += 1;
    }

    fn death(&mut self) {
        if self.live.is_empty() {
            return;
        }
        let k = self.live[self.rng.random_range(0..self.live.len())] as usize;
        let ratio = self.live.len() as f64 / self.window_mass();
        if ratio < 1.0 && self.rng.random::<f64>() >= ratio {
            return;
        }
        match self.event {
            CrossingEvent::Occupied(_) => {
                if self.flagged[k] && !self.refresh_flags(Some(k)) {
                    return;
                }
                self.remove(k);
            }
            CrossingEvent::Vacant(_) => {
                self.remove(k);
                self.stale = true;
                if self.pts.len() > 2 * self.live.len() + 1024 {
                    self.rebuild();
                }
            }
        }
        self.counters.accepted += 1;
    }

    /// One proposal.
    pub fn step(&mut self) {
        self.counters.proposals += 1;
        if self.rng.random::<bool>() {
            self.birth();
        } else {
            self.death();
        }
    }

    /// `2 λ |W|` proposals (at least one): each point of a typical state
    /// is proposed for removal about once.
    pub fn sweep(&mut self) {
        let moves = (2.0 * self.window_mass()).ceil().max(1.0) as u64;
        for _ in 0..moves {
            self.step();
        }
        if self.pts.len() > 2 * self.live.len() + 1024 {
            self.rebuild();
        }
    }

    /// The current state completed to a full sample on `rect` dilated by
    /// `margin ≥ 1`: centers beyond the chain window are fresh Poisson
    /// points from stream `stream` of `seed`.
    pub fn snapshot(&self, margin: f64, seed: u64, stream: u64) -> Result<PointSample<f64>> {
        if !(margin >= 1.0) {
            return Err(invalid(format!("snapshot margin must be >= 1, got {margin}")));
        }
        let mut outer = sample_padded(&self.rect, margin, self.lambda, seed, stream)?;
        outer.centers.retain(|p| !self.window.contains(p));
        outer.centers.extend(self.centers());
        Ok(outer)
    }
}

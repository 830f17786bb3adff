use rayon::prelude::*;

use crate::network::LaneId;

/// Frozen motion state of one driving vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub id: u64,
    pub lane: LaneId,
    pub s: f64,
    pub v: f64,
    pub length: f64,
}

/// Motion state of every vehicle slot at the start of a step. Slots that
/// are not driving hold `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub motions: Vec<Option<Motion>>,
}

impl Snapshot {
    pub fn get(&self, slot: usize) -> &Motion {
        self.motions[slot].as_ref().expect("slot is driving")
    }
}

/// Per-lane vehicle slots ordered front first: decreasing `s`, ties by
/// ascending vehicle id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaneIndex {
    lanes: Vec<Vec<usize>>,
    position: Vec<usize>,
}

impl LaneIndex {
    pub fn build(lane_count: usize, snapshot: &Snapshot) -> Self {
        let mut lanes: Vec<Vec<usize>> = vec![Vec::new(); lane_count];
        for (slot, m) in snapshot.motions.iter().enumerate() {
            if let Some(m) = m {
                lanes[m.lane as usize].push(slot);
            }
        }
        lanes.par_iter_mut().for_each(|list| {
            list.sort_by(|&a, &b| {
                let (ma, mb) = (snapshot.get(a), snapshot.get(b));
                mb.s.total_cmp(&ma.s).then(ma.id.cmp(&mb.id))
            })
        });
        let mut position = vec![usize::MAX; snapshot.motions.len()];
        for list in &lanes {
            for (i, &slot) in list.iter().enumerate() {
                position[slot] = i;
            }
        }
        Self { lanes, position }
    }

    pub fn lane(&self, lane: LaneId) -> &[usize] {
        &self.lanes[lane as usize]
    }

    pub fn count(&self, lane: LaneId) -> usize {
        self.lanes[lane as usize].len()
    }

    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    /// Position of a slot within its lane, front = 0.
    pub fn position(&self, slot: usize) -> Option<usize> {
        self.position.get(slot).copied().filter(|&p| p != usize::MAX)
    }

    /// Vehicles ahead of and behind position `s` on `lane`. A vehicle at
    /// exactly `s` counts as behind.
    pub fn neighbors_at(&self, lane: LaneId, s: f64, snapshot: &Snapshot) -> (Option<usize>, Option<usize>) {
        let list = self.lane(lane);
        let k = list.partition_point(|&slot| snapshot.get(slot).s > s);
        (k.checked_sub(1).map(|i| list[i]), list.get(k).copied())
    }

    /// Rearmost vehicle of a lane.
    pub fn last(&self, lane: LaneId) -> Option<usize> {
        self.lane(lane).last().copied()
    }
}

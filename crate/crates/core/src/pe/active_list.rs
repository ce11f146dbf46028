use std::collections::VecDeque;

/// Work handed from consumer to generator: where the vertex's edges start,
/// how many there are, and the distance accepted for it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActiveEntry {
    pub edge_offset: u64,
    pub edge_count: u32,
    pub distance: u32,
}

impl ActiveEntry {
    pub const BYTES: usize = 16;

    pub fn to_bytes(self) -> [u8; Self::BYTES] {
        let mut b = [0; Self::BYTES];
        b[..4].copy_from_slice(&self.distance.to_le_bytes());
        b[4..12].copy_from_slice(&self.edge_offset.to_le_bytes());
        b[12..].copy_from_slice(&self.edge_count.to_le_bytes());
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pushed {
    Hardware,
    /// Written to overflow slot `slot` in memory.
    Spilled { slot: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Popped {
    Hardware(ActiveEntry),
    /// Must be read back from overflow slot `slot` before use.
    Overflow { entry: ActiveEntry, slot: u64 },
}

impl Popped {
    pub fn entry(self) -> ActiveEntry {
        match self {
            Popped::Hardware(e) | Popped::Overflow { entry: e, .. } => e,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("active-list overflow region full ({slots} slots)")]
pub struct OverflowRegionFull {
    pub slots: u64,
}

/// A bounded hardware FIFO that spills to a ring of memory slots. Pops are
/// globally first-in first-out: once anything is spilled, later pushes also
/// spill until the overflow drains, and the overflow is only read once the
/// hardware FIFO is empty.
#[derive(Clone, Debug)]
pub struct ActiveList {
    hardware: VecDeque<ActiveEntry>,
    hardware_capacity: usize,
    overflow: VecDeque<(u64, ActiveEntry)>,
    overflow_slots: u64,
    next_slot: u64,
    spills: u64,
    refills: u64,
    high_water: usize,
}

impl ActiveList {
    pub fn new(hardware_capacity: usize, overflow_slots: u64) -> Self {
        assert!(hardware_capacity > 0, "active list needs at least one hardware slot");
        Self {
            hardware: VecDeque::with_capacity(hardware_capacity),
            hardware_capacity,
            overflow: VecDeque::new(),
            overflow_slots,
            next_slot: 0,
            spills: 0,
            refills: 0,
            high_water: 0,
        }
    }

    /// Never blocks; spills when the hardware FIFO is full.
    pub fn push(&mut self, entry: ActiveEntry) -> Result<Pushed, OverflowRegionFull> {
        let pushed = if self.overflow.is_empty() && self.hardware.len() < self.hardware_capacity {
            self.hardware.push_back(entry);
            Pushed::Hardware
        } else {
            if self.overflow.len() as u64 >= self.overflow_slots {
                return Err(OverflowRegionFull {
                    slots: self.overflow_slots,
                });
            }
            let slot = self.next_slot;
            self.next_slot = (self.next_slot + 1) % self.overflow_slots;
            self.overflow.push_back((slot, entry));
            self.spills += 1;
            Pushed::Spilled { slot }
        };
        self.high_water = self.high_water.max(self.len());
        Ok(pushed)
    }

    pub fn pop(&mut self) -> Option<Popped> {
        if let Some(e) = self.hardware.pop_front() {
            return Some(Popped::Hardware(e));
        }
        let (slot, entry) = self.overflow.pop_front()?;
        self.refills += 1;
        Some(Popped::Overflow { entry, slot })
    }

    pub fn len(&self) -> usize {
        self.hardware.len() + self.overflow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spills(&self) -> u64 {
        self.spills
    }

    pub fn refills(&self) -> u64 {
        self.refills
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }
}

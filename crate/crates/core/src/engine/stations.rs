//! Charging stations: a few slots each, FIFO queue for the rest.

use std::collections::VecDeque;

use crate::plant_graph::NodeId;
use crate::VehicleId;

#[derive(Debug, Clone)]
pub struct Station {
    pub node: NodeId,
    pub slots: usize,
    docked: Vec<VehicleId>,
    queue: VecDeque<VehicleId>,
}

impl Station {
    pub fn new(node: NodeId, slots: usize) -> Self {
        Self {
            node,
            slots,
            docked: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    /// Docks the vehicle if a slot is free, queues it otherwise. Returns
    /// whether it docked.
    pub fn arrive(&mut self, v: VehicleId) -> bool {
        if self.docked.len() < self.slots {
            self.docked.push(v);
            true
        } else {
            self.queue.push_back(v);
            false
        }
    }

    /// Removes the vehicle from its slot or the queue. Returns the vehicle
    /// that takes over the freed slot, if any.
    pub fn leave(&mut self, v: VehicleId) -> Option<VehicleId> {
        if let Some(pos) = self.docked.iter().position(|&d| d == v) {
            self.docked.remove(pos);
            let next = self.queue.pop_front()?;
            self.docked.push(next);
            return Some(next);
        }
        if let Some(pos) = self.queue.iter().position(|&q| q == v) {
            self.queue.remove(pos);
        }
        None
    }

    pub fn docked(&self) -> &[VehicleId] {
        &self.docked
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }
}

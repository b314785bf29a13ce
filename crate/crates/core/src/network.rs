//! Time-slotted message fabric between the workers and the master.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::compress::CompressedData;
use crate::error::{Error, Result};
use crate::model::{DecisionBlock, Vector, WorkerId};

/// Constant link delays, in slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayConfig {
    pub tau_u: usize,
    pub tau_d: usize,
    #[serde(default)]
    pub tau_l: usize,
}

impl DelayConfig {
    pub fn new(tau_u: usize, tau_d: usize, tau_l: usize) -> Result<Self> {
        let cfg = Self { tau_u, tau_d, tau_l };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Round trip with no local delay.
    pub fn round_trip(tau_r: usize) -> Result<Self> {
        Self::new(tau_r, 0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_r() == 0 {
            return Err(Error::InvalidParameter(
                "round-trip delay tau_u + tau_d must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn tau_r(&self) -> usize {
        self.tau_u + self.tau_d
    }

    pub fn tau(&self) -> usize {
        self.tau_r() + self.tau_l
    }
}

/// Worker → master: the executed decision of `slot` and the compressed local
/// data the worker holds at that slot (absent while it has none yet).
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkPayload {
    pub worker: WorkerId,
    pub slot: usize,
    pub decision: DecisionBlock,
    pub compressed: Option<CompressedData>,
    /// Slot the compressed data was collected at.
    pub data_slot: Option<usize>,
}

/// Master → worker: intermediate block and global information for `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkPayload {
    pub worker: WorkerId,
    pub target: usize,
    pub intermediate: DecisionBlock,
    pub ginfo: Vector,
    /// Slot of the data the master's estimate was built from.
    pub data_slot: usize,
    /// Slot of the decisions the master started from.
    pub decision_slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<P> {
    pub send_slot: usize,
    pub deliver_slot: usize,
    pub payload: P,
}

/// One directed link with a constant delay.
#[derive(Debug, Clone)]
pub struct Link<P> {
    delay: usize,
    queue: BTreeMap<usize, VecDeque<Envelope<P>>>,
    sent: usize,
    delivered: usize,
}

impl<P> Link<P> {
    pub fn new(delay: usize) -> Self {
        Self {
            delay,
            queue: BTreeMap::new(),
            sent: 0,
            delivered: 0,
        }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn send(&mut self, t: usize, payload: P) -> Result<()> {
        if t == 0 {
            return Err(Error::Protocol("slots start at 1".into()));
        }
        let deliver_slot = t + self.delay;
        self.queue.entry(deliver_slot).or_default().push_back(Envelope {
            send_slot: t,
            deliver_slot,
            payload,
        });
        self.sent += 1;
        Ok(())
    }

    /// Removes and returns everything due at `t`, in send order.
    pub fn deliver(&mut self, t: usize) -> Vec<Envelope<P>> {
        let out: Vec<_> = self.queue.remove(&t).map(Vec::from).unwrap_or_default();
        self.delivered += out.len();
        out
    }

    /// Everything still queued, in delivery order.
    pub fn drain(&mut self) -> Vec<Envelope<P>> {
        let queue = std::mem::take(&mut self.queue);
        let out: Vec<_> = queue.into_values().flatten().collect();
        self.delivered += out.len();
        out
    }

    pub fn pending(&self) -> usize {
        self.queue.values().map(VecDeque::len).sum()
    }

    pub fn sent(&self) -> usize {
        self.sent
    }

    pub fn delivered(&self) -> usize {
        self.delivered
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FabricStats {
    pub uplink_sent: usize,
    pub uplink_delivered: usize,
    pub downlink_sent: usize,
    pub downlink_delivered: usize,
}

/// One uplink and one downlink per worker.
#[derive(Debug, Clone)]
pub struct Fabric {
    uplinks: Vec<Link<UplinkPayload>>,
    downlinks: Vec<Link<DownlinkPayload>>,
}

impl Fabric {
    pub fn new(workers: usize, delays: &DelayConfig) -> Self {
        Self {
            uplinks: (0..workers).map(|_| Link::new(delays.tau_u)).collect(),
            downlinks: (0..workers).map(|_| Link::new(delays.tau_d)).collect(),
        }
    }

    fn check(&self, c: WorkerId) -> Result<()> {
        if c.0 < self.uplinks.len() {
            Ok(())
        } else {
            Err(Error::UnknownWorker {
                index: c.0,
                workers: self.uplinks.len(),
            })
        }
    }

    pub fn send_up(&mut self, t: usize, payload: UplinkPayload) -> Result<()> {
        self.check(payload.worker)?;
        let c = payload.worker.0;
        self.uplinks[c].send(t, payload)
    }

    pub fn send_down(&mut self, t: usize, payload: DownlinkPayload) -> Result<()> {
        self.check(payload.worker)?;
        let c = payload.worker.0;
        self.downlinks[c].send(t, payload)
    }

    /// All uplinks due at `t`, worker by worker.
    pub fn deliver_up(&mut self, t: usize) -> Vec<UplinkPayload> {
        self.uplinks
            .iter_mut()
            .flat_map(|l| l.deliver(t))
            .map(|e| e.payload)
            .collect()
    }

    pub fn deliver_down(&mut self, t: usize, c: WorkerId) -> Result<Vec<DownlinkPayload>> {
        self.check(c)?;
        Ok(self.downlinks[c.0]
            .deliver(t)
            .into_iter()
            .map(|e| e.payload)
            .collect())
    }

    /// Delivers whatever is still in flight after the horizon.
    pub fn flush(&mut self) -> usize {
        let up: usize = self.uplinks.iter_mut().map(|l| l.drain().len()).sum();
        let down: usize = self.downlinks.iter_mut().map(|l| l.drain().len()).sum();
        up + down
    }

    pub fn stats(&self) -> FabricStats {
        FabricStats {
            uplink_sent: self.uplinks.iter().map(Link::sent).sum(),
            uplink_delivered: self.uplinks.iter().map(Link::delivered).sum(),
            downlink_sent: self.downlinks.iter().map(Link::sent).sum(),
            downlink_delivered: self.downlinks.iter().map(Link::delivered).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delivers_exactly_at_send_plus_delay() {
        let mut link = Link::new(2);
        link.send(5, "m").unwrap();
        assert!(link.deliver(6).is_empty());
        let got = link.deliver(7);
        assert_eq!(got.len(), 1);
        assert_eq!((got[0].send_slot, got[0].deliver_slot), (5, 7));
        assert!(link.deliver(7).is_empty());
        assert!(link.deliver(8).is_empty());
    }

    #[test]
    fn fifo_within_a_slot() {
        let mut link = Link::new(1);
        link.send(3, 'a').unwrap();
        link.send(3, 'b').unwrap();
        let got: Vec<_> = link.deliver(4).into_iter().map(|e| e.payload).collect();
        assert_eq!(got, vec!['a', 'b']);
    }

    #[test]
    fn zero_delay_same_slot() {
        let mut link = Link::new(0);
        link.send(4, 1).unwrap();
        assert_eq!(link.deliver(4).len(), 1);
        assert!(link.send(0, 1).is_err());
    }

    #[test]
    fn delay_config_derived_values() {
        let d = DelayConfig::new(2, 1, 3).unwrap();
        assert_eq!((d.tau_r(), d.tau()), (3, 6));
        assert!(DelayConfig::new(0, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn conservation(delay in 0usize..5, sends in proptest::collection::vec(1usize..30, 0..60)) {
            let mut link = Link::new(delay);
            for (i, &t) in sends.iter().enumerate() {
                link.send(t, i).unwrap();
            }
            let mut seen = Vec::new();
            for t in 1..=40 {
                for e in link.deliver(t) {
                    prop_assert_eq!(e.deliver_slot, e.send_slot + delay);
                    seen.push(e.payload);
                }
            }
            seen.extend(link.drain().into_iter().map(|e| e.payload));
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..sends.len()).collect::<Vec<_>>());
            prop_assert_eq!(link.sent(), link.delivered());
        }
    }
}

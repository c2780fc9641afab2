use crate::cropsense::DiseaseObservation;
use crate::error::{Error, Result};
use crate::exploration::FrontierCluster;
use crate::geometry::{Pose, Twist};
use crate::mapping::OccupancyGrid;
use crate::simworld::LaserScan;
use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

/// Pose broadcast on "tf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TfFrame {
    /// Dead-reckoned pose from the vehicle's odometry, altitude included.
    Odom(Pose),
    /// Localized pose in the map frame, with the odometry pose it was
    /// computed from.
    Map { map: Pose, odom: Pose },
}

#[derive(Debug, Clone)]
pub enum Payload {
    Scan(Arc<LaserScan>),
    Tf(TfFrame),
    Map(OccupancyGrid),
    Goal(Pose),
    CmdVel(Twist),
    Frontiers(Arc<Vec<FrontierCluster>>),
    Detections(Arc<Vec<DiseaseObservation>>),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Scan(_) => "LaserScan",
            Payload::Tf(_) => "Tf",
            Payload::Map(_) => "OccupancyGrid",
            Payload::Goal(_) => "Pose",
            Payload::CmdVel(_) => "Twist",
            Payload::Frontiers(_) => "Frontiers",
            Payload::Detections(_) => "Detections",
        }
    }
}

/// The node graph's topics and their payload kinds.
pub const TOPICS: [(&str, &str); 7] = [
    ("scan", "LaserScan"),
    ("tf", "Tf"),
    ("map", "OccupancyGrid"),
    ("goal", "Pose"),
    ("cmd_vel", "Twist"),
    ("frontiers", "Frontiers"),
    ("detections", "Detections"),
];

#[derive(Debug, Clone)]
pub struct BusMessage {
    pub topic: &'static str,
    pub payload: Payload,
    pub tick: u64,
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubscriberId(usize);

#[derive(Debug)]
struct Channel {
    name: &'static str,
    kind: &'static str,
    queue: VecDeque<BusMessage>,
    next_seq: u64,
    /// Next sequence number each subscriber will read.
    cursors: BTreeMap<SubscriberId, u64>,
}

impl Channel {
    fn trim(&mut self) {
        let floor = self.cursors.values().copied().min().unwrap_or(self.next_seq);
        while self.queue.front().is_some_and(|m| m.seq < floor) {
            self.queue.pop_front();
        }
    }
}

/// Deterministic pub/sub with one-tick latency: a message published during
/// tick `t` becomes visible to polls at tick `t + 1` and later.
#[derive(Debug, Default)]
pub struct Bus {
    tick: u64,
    channels: Vec<Channel>,
    subscribers: Vec<String>,
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    /// A bus with every node-graph topic registered.
    pub fn with_standard_topics() -> Self {
        let mut bus = Bus::new();
        for (name, kind) in TOPICS {
            bus.register(name, kind);
        }
        bus
    }

    pub fn register(&mut self, topic: &'static str, kind: &'static str) {
        if self.channels.iter().any(|c| c.name == topic) {
            return;
        }
        self.channels.push(Channel {
            name: topic,
            kind,
            queue: VecDeque::new(),
            next_seq: 0,
            cursors: BTreeMap::new(),
        });
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn advance(&mut self) {
        self.tick += 1;
    }

    fn channel(&mut self, topic: &str) -> Result<&mut Channel> {
        self.channels
            .iter_mut()
            .find(|c| c.name == topic)
            .ok_or_else(|| Error::UnknownTopic(topic.to_string()))
    }

    /// New subscriber that sees messages published from now on.
    pub fn subscribe(&mut self, topic: &str, name: &str) -> Result<SubscriberId> {
        let id = SubscriberId(self.subscribers.len());
        let ch = self.channel(topic)?;
        ch.cursors.insert(id, ch.next_seq);
        self.subscribers.push(name.to_string());
        Ok(id)
    }

    pub fn subscriber_name(&self, id: SubscriberId) -> &str {
        &self.subscribers[id.0]
    }

    pub fn publish(&mut self, topic: &str, payload: Payload) -> Result<()> {
        let tick = self.tick;
        let ch = self.channel(topic)?;
        if payload.kind() != ch.kind {
            return Err(Error::TopicTypeMismatch {
                topic: topic.to_string(),
                expected: ch.kind,
                found: payload.kind(),
            });
        }
        let seq = ch.next_seq;
        ch.next_seq += 1;
        ch.queue.push_back(BusMessage {
            topic: ch.name,
            payload,
            tick,
            seq,
        });
        if ch.cursors.is_empty() {
            ch.trim();
        }
        Ok(())
    }

    /// Unread messages published before the current tick, oldest first.
    pub fn poll(&mut self, topic: &str, sub: SubscriberId) -> Result<Vec<BusMessage>> {
        let tick = self.tick;
        let ch = self.channel(topic)?;
        let cursor = *ch
            .cursors
            .get(&sub)
            .ok_or_else(|| Error::UnknownTopic(format!("{topic} (not subscribed)")))?;
        let out: Vec<BusMessage> = ch
            .queue
            .iter()
            .filter(|m| m.seq >= cursor && m.tick < tick)
            .cloned()
            .collect();
        if let Some(last) = out.last() {
            ch.cursors.insert(sub, last.seq + 1);
            ch.trim();
        }
        Ok(out)
    }

    /// Most recent visible message, marking everything before it read.
    pub fn latest(&mut self, topic: &str, sub: SubscriberId) -> Result<Option<BusMessage>> {
        Ok(self.poll(topic, sub)?.pop())
    }
}

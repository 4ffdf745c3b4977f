//! Round-based 1-hop message passing with flooding.
//!
//! A message handed to [`Network::send`] during round `r` is delivered to the
//! sender's current neighbours in round `r + 1`. Every receiver that sees a
//! message for the first time (keyed by source, kind and sequence number)
//! puts it in its inbox and, while hop budget remains, forwards it in the
//! next round.

use std::collections::HashSet;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Candidacy,
    ElectionOpen,
    WinnerAnnounce,
    PresenceQuery,
    PresenceReply,
    LambdaHat,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Candidacy => "candidacy",
            MessageKind::ElectionOpen => "election_open",
            MessageKind::WinnerAnnounce => "winner_announce",
            MessageKind::PresenceQuery => "presence_query",
            MessageKind::PresenceReply => "presence_reply",
            MessageKind::LambdaHat => "lambda_hat",
        }
    }
}

/// Message body. Small and `Copy`, like the scalar tuples a radio would carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    Empty,
    /// An election opened by the sender, identified by `epoch`.
    Open { epoch: u64 },
    /// Reply to election `(host, epoch)` with the candidate's remaining path.
    Candidacy { host: usize, epoch: u64, remaining: f64 },
    Winner { epoch: u64, winner: Option<usize> },
    /// Claim of a connector that wants to become prime traveler. Claims are
    /// ordered by `(round, remaining, src)`.
    Claim { round: u64, remaining: f64 },
    /// Answer to the claim of `to`.
    Reply { to: usize },
    Scalar(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub src: usize,
    pub kind: MessageKind,
    pub seq: u64,
    pub payload: Payload,
    /// Remaining hop budget.
    pub ttl: u32,
}

/// A message as it sits in an inbox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivered {
    pub msg: Message,
    /// The neighbour that forwarded it on the last hop.
    pub via: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub round: u64,
    pub src: usize,
    pub dst: usize,
    pub kind: &'static str,
    pub ttl: u32,
}

/// One round of pure delivery: every message in `outboxes[s]` is copied to
/// each neighbour of `s` with its hop budget decremented. Messages whose
/// budget is already spent are dropped.
pub fn deliver_round(outboxes: &[Vec<Message>], graph: &[Vec<usize>]) -> Vec<Vec<Delivered>> {
    let mut boxes = vec![Vec::new(); graph.len()];
    for (s, out) in outboxes.iter().enumerate() {
        for m in out.iter().filter(|m| m.ttl > 0) {
            for &j in &graph[s] {
                boxes[j].push(Delivered {
                    msg: Message { ttl: m.ttl - 1, ..*m },
                    via: s,
                });
            }
        }
    }
    boxes
}

/// The flooding service shared by all robots of one trial.
#[derive(Debug, Clone)]
pub struct Network {
    round: u64,
    next_seq: Vec<u64>,
    seen: Vec<HashSet<(usize, MessageKind, u64)>>,
    outbox: Vec<Vec<Message>>,
    inbox: Vec<Vec<Delivered>>,
    trace: Option<Vec<TraceRecord>>,
    foreign_reads: usize,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Self {
            round: 0,
            next_seq: vec![0; n],
            seen: vec![HashSet::new(); n],
            outbox: vec![Vec::new(); n],
            inbox: vec![Vec::new(); n],
            trace: None,
            foreign_reads: 0,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn len(&self) -> usize {
        self.outbox.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outbox.is_empty()
    }

    /// Number of completed delivery rounds.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Default hop budget: enough to reach every robot of a connected graph.
    pub fn flood_ttl(&self) -> u32 {
        self.len().saturating_sub(1).max(1) as u32
    }

    /// Queues a new message from `src` for the next round and returns its
    /// sequence number.
    pub fn send(&mut self, src: usize, kind: MessageKind, payload: Payload, ttl: u32) -> u64 {
        let seq = self.next_seq[src];
        self.next_seq[src] += 1;
        self.seen[src].insert((src, kind, seq));
        self.outbox[src].push(Message {
            src,
            kind,
            seq,
            payload,
            ttl,
        });
        seq
    }

    /// Floods a message to the whole (connected) team.
    pub fn broadcast(&mut self, src: usize, kind: MessageKind, payload: Payload) -> u64 {
        let ttl = self.flood_ttl();
        self.send(src, kind, payload, ttl)
    }

    /// Runs one delivery round over the current neighbour graph. Inboxes are
    /// replaced by this round's first-time receptions, which are also queued
    /// for forwarding.
    pub fn deliver(&mut self, graph: &[Vec<usize>]) {
        assert_eq!(graph.len(), self.len(), "graph size must match the team");
        self.round += 1;
        let outboxes = std::mem::replace(&mut self.outbox, vec![Vec::new(); graph.len()]);
        let boxes = deliver_round(&outboxes, graph);
        for (j, delivered) in boxes.into_iter().enumerate() {
            let mut fresh = Vec::new();
            for d in delivered {
                if let Some(trace) = self.trace.as_mut() {
                    trace.push(TraceRecord {
                        round: self.round,
                        src: d.msg.src,
                        dst: j,
                        kind: d.msg.kind.as_str(),
                        ttl: d.msg.ttl,
                    });
                }
                // instrumentation: the last hop must be a current neighbour
                if !graph[d.via].contains(&j) {
                    self.foreign_reads += 1;
                }
                if self.seen[j].insert((d.msg.src, d.msg.kind, d.msg.seq)) {
                    if d.msg.ttl > 0 {
                        self.outbox[j].push(d.msg);
                    }
                    fresh.push(d);
                }
            }
            self.inbox[j] = fresh;
        }
    }

    pub fn inbox(&self, i: usize) -> &[Delivered] {
        &self.inbox[i]
    }

    /// Messages read by a robot that was not adjacent to the forwarder.
    /// Always zero unless the graph handed to [`Network::deliver`] is
    /// inconsistent.
    pub fn foreign_reads(&self) -> usize {
        self.foreign_reads
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }
}

/// Outcome of flooding one message on a static graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FloodReport {
    /// Round in which each robot first received the message (0 for the
    /// source, `None` if never).
    pub received: Vec<Option<u64>>,
    pub rounds_used: u64,
}

impl FloodReport {
    pub fn complete(&self) -> bool {
        self.received.iter().all(Option::is_some)
    }
}

/// Floods one message from `src` over a static graph for at most
/// `rounds_budget` rounds.
pub fn flood(graph: &[Vec<usize>], src: usize, rounds_budget: u64) -> FloodReport {
    let n = graph.len();
    let mut net = Network::new(n);
    net.broadcast(src, MessageKind::PresenceQuery, Payload::Empty);
    let mut received = vec![None; n];
    received[src] = Some(0);
    let mut rounds_used = 0;
    for r in 1..=rounds_budget {
        if received.iter().all(Option::is_some) {
            break;
        }
        net.deliver(graph);
        rounds_used = r;
        for (j, rec) in received.iter_mut().enumerate() {
            if rec.is_none() && !net.inbox(j).is_empty() {
                *rec = Some(r);
            }
        }
    }
    FloodReport { received, rounds_used }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect()
    }

    #[test]
    fn isolated_sender_reaches_nobody() {
        let g = vec![vec![], vec![]];
        let r = flood(&g, 0, 5);
        assert_eq!(r.received, vec![Some(0), None]);
        assert!(!r.complete());
    }

    #[test]
    fn star_center_reaches_leaves_in_one_round() {
        let n = 7;
        let mut g = vec![Vec::new(); n];
        for leaf in 1..n {
            g[0].push(leaf);
            g[leaf].push(0);
        }
        let r = flood(&g, 0, 10);
        assert!(r.received[1..].iter().all(|x| *x == Some(1)));
    }

    #[test]
    fn line_of_six_takes_five_rounds() {
        let r = flood(&line(6), 0, 10);
        assert_eq!(r.received[5], Some(5));
        assert_eq!(r.rounds_used, 5);
    }

    #[test]
    fn pair_takes_one_round() {
        assert_eq!(flood(&line(2), 1, 3).received[0], Some(1));
    }

    #[test]
    fn duplicates_are_suppressed_and_budget_respected() {
        // triangle: both other nodes forward, neither re-delivers
        let g = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
        let mut net = Network::new(3);
        net.broadcast(0, MessageKind::ElectionOpen, Payload::Open { epoch: 0 });
        net.deliver(&g);
        assert_eq!(net.inbox(1).len(), 1);
        assert_eq!(net.inbox(2).len(), 1);
        net.deliver(&g);
        assert!((0..3).all(|i| net.inbox(i).is_empty()));

        let mut net = Network::new(6);
        net.send(0, MessageKind::LambdaHat, Payload::Scalar(0.5), 2);
        let g = line(6);
        let mut reached = 0;
        for _ in 0..6 {
            net.deliver(&g);
            reached += (0..6).filter(|&i| !net.inbox(i).is_empty()).count();
        }
        assert_eq!(reached, 2);
    }

    #[test]
    fn trace_is_deterministic() {
        let g = vec![vec![1, 2], vec![0, 3], vec![0, 3], vec![1, 2]];
        let run = || {
            let mut net = Network::new(4).with_trace();
            net.broadcast(2, MessageKind::PresenceQuery, Payload::Claim { round: 0, remaining: 3.0 });
            for _ in 0..4 {
                net.deliver(&g);
            }
            net.trace().unwrap().to_vec()
        };
        assert_eq!(run(), run());
        assert!(!run().is_empty());
    }
}

//! Prime-traveler election and presence checks over the flooding network.
//!
//! The host floods `ElectionOpen`, every secondary traveler answers with a
//! flooded `Candidacy` carrying its remaining path length, and after
//! `2(N−1)` rounds the host floods a `WinnerAnnounce`. The same
//! [`HostState`] drives both the simulated robots and the standalone
//! [`run_election`] used on static graphs.

use crate::netsim::{MessageKind, Network, Payload};

/// Arg-min of `(remaining, index)`; `None` for an empty candidate set.
pub fn elect_prime(candidates: &[(usize, f64)]) -> Option<usize> {
    candidates
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|c| c.0)
}

/// Number of rounds the host waits for candidacies.
pub fn election_window(n: usize) -> u64 {
    2 * n.saturating_sub(1) as u64
}

/// Election state held by the hosting robot.
#[derive(Debug, Clone, PartialEq)]
pub struct HostState {
    pub epoch: u64,
    pub opened: u64,
    pub closes: u64,
    candidates: Vec<(usize, f64)>,
}

impl HostState {
    /// Floods the opening message from `host` during round `round`.
    pub fn open(net: &mut Network, host: usize, round: u64) -> Self {
        let epoch = net.broadcast(host, MessageKind::ElectionOpen, Payload::Empty);
        Self {
            epoch,
            opened: round,
            closes: round + election_window(net.len()),
            candidates: Vec::new(),
        }
    }

    /// Records a candidacy, keeping the latest value per robot.
    pub fn add(&mut self, idx: usize, remaining: f64) {
        match self.candidates.iter_mut().find(|c| c.0 == idx) {
            Some(c) => c.1 = remaining,
            None => self.candidates.push((idx, remaining)),
        }
    }

    pub fn candidates(&self) -> &[(usize, f64)] {
        &self.candidates
    }

    /// Offers an inbox message; returns true if it was a candidacy for this
    /// election.
    pub fn offer(&mut self, host: usize, src: usize, payload: &Payload) -> bool {
        match *payload {
            Payload::Candidacy { host: h, epoch, remaining } if h == host && epoch == self.epoch => {
                self.add(src, remaining);
                true
            }
            _ => false,
        }
    }

    pub fn due(&self, round: u64) -> bool {
        round >= self.closes
    }

    /// Picks the winner and floods the announcement.
    pub fn decide(&self, net: &mut Network, host: usize) -> Option<usize> {
        let winner = elect_prime(&self.candidates);
        net.broadcast(host, MessageKind::WinnerAnnounce, Payload::Winner { epoch: self.epoch, winner });
        winner
    }
}

/// Floods a candidacy in answer to an `ElectionOpen` received from `host`.
pub fn send_candidacy(net: &mut Network, me: usize, host: usize, epoch: u64, remaining: f64) {
    net.broadcast(me, MessageKind::Candidacy, Payload::Candidacy { host, epoch, remaining });
}

/// Result of an election run on a static graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectionOutcome {
    pub winner: Option<usize>,
    /// Candidacies the host had collected when it decided.
    pub collected: Vec<(usize, f64)>,
    /// Round in which the host decided.
    pub decided: u64,
    /// Round in which the last robot learned the winner (`None` if some
    /// robot never did).
    pub announced: Option<u64>,
}

/// Runs one complete election on a static graph: `host` opens it and every
/// robot listed in `candidates` answers as soon as it hears the opening.
/// The host's own entry, if present, is recorded directly.
pub fn run_election(graph: &[Vec<usize>], host: usize, candidates: &[(usize, f64)]) -> ElectionOutcome {
    let n = graph.len();
    let mut net = Network::new(n);
    let mut state = HostState::open(&mut net, host, 0);
    if let Some(&(_, d)) = candidates.iter().find(|c| c.0 == host) {
        state.add(host, d);
    }
    let mut informed = vec![false; n];
    informed[host] = true;
    let mut decided = None;
    let mut winner = None;
    let mut collected = Vec::new();
    let mut announced = None;
    let horizon = state.closes + n as u64 + 1;
    if state.due(0) {
        winner = state.decide(&mut net, host);
        collected = state.candidates().to_vec();
        decided = Some(0);
    }
    for round in 1..=horizon {
        if decided.is_some() && informed.iter().all(|&x| x) {
            announced = decided.max(Some(round - 1));
            break;
        }
        net.deliver(graph);
        for i in 0..n {
            for d in net.inbox(i).to_vec() {
                match (d.msg.kind, d.msg.payload) {
                    (MessageKind::ElectionOpen, _) => {
                        if let Some(&(_, rem)) = candidates.iter().find(|c| c.0 == i) {
                            send_candidacy(&mut net, i, d.msg.src, d.msg.seq, rem);
                        }
                    }
                    (MessageKind::Candidacy, p) if i == host => {
                        state.offer(host, d.msg.src, &p);
                    }
                    (MessageKind::WinnerAnnounce, _) => informed[i] = true,
                    _ => {}
                }
            }
        }
        if decided.is_none() && state.due(round) {
            winner = state.decide(&mut net, host);
            collected = state.candidates().to_vec();
            decided = Some(round);
        }
        if decided.is_some() && informed.iter().all(|&x| x) {
            announced = Some(round);
            break;
        }
    }
    ElectionOutcome {
        winner,
        collected,
        decided: decided.unwrap_or(horizon),
        announced,
    }
}

/// Answer of a presence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresenceAnswer {
    pub prime_exists: bool,
    /// Round in which the reply arrived, or the full budget if none did.
    pub rounds: u64,
}

/// Asks, by flooding, whether any robot flagged in `is_prime` exists. The
/// prime answers with a flooded reply; the querier waits `2(N−1)` rounds.
pub fn presence_flood(graph: &[Vec<usize>], is_prime: &[bool], querier: usize) -> PresenceAnswer {
    let n = graph.len();
    let budget = election_window(n);
    if is_prime[querier] {
        return PresenceAnswer { prime_exists: true, rounds: 0 };
    }
    let mut net = Network::new(n);
    net.broadcast(querier, MessageKind::PresenceQuery, Payload::Claim { round: 0, remaining: 0.0 });
    for round in 1..=budget {
        net.deliver(graph);
        for i in 0..n {
            for d in net.inbox(i).to_vec() {
                match (d.msg.kind, d.msg.payload) {
                    (MessageKind::PresenceQuery, _) if is_prime[i] => {
                        net.broadcast(i, MessageKind::PresenceReply, Payload::Reply { to: d.msg.src });
                    }
                    (MessageKind::PresenceReply, Payload::Reply { to }) if i == querier && to == querier => {
                        return PresenceAnswer { prime_exists: true, rounds: round };
                    }
                    _ => {}
                }
            }
        }
    }
    PresenceAnswer { prime_exists: false, rounds: budget }
}

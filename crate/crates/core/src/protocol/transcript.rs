use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// What a transmitted message was for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Half-angle truncations sent to the leader for the branch bit.
    Bernoulli,
    /// The fair bit `S` sent out by the leader.
    Broadcast,
    /// Truncations of `cⱼ`, `sⱼ` sent to the leader.
    CsRequest,
    /// Partial products moving up the binomial tree.
    Tree,
    /// Continue / reject flags from the leader.
    Sync,
    /// Completion notice or output bits from the leader.
    Output,
}

impl Phase {
    pub const ALL: [Phase; 6] = [Phase::Bernoulli, Phase::Broadcast, Phase::CsRequest, Phase::Tree, Phase::Sync, Phase::Output];

    pub fn tag(self) -> &'static str {
        match self {
            Phase::Bernoulli => "bernoulli",
            Phase::Broadcast => "broadcast",
            Phase::CsRequest => "cs-request",
            Phase::Tree => "tree",
            Phase::Sync => "sync",
            Phase::Output => "output",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One transmission. Parties are numbered from 1; party 1 is the leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub phase: Phase,
    pub sender: usize,
    pub receiver: usize,
    pub bits: u64,
}

/// Exact cost counters of one protocol run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    pub n: usize,
    /// Bits moving toward the leader (sender index above receiver index).
    pub bits_to_leader: u64,
    /// Bits moving away from the leader.
    pub bits_from_leader: u64,
    pub random_bits: u64,
    pub outer_rounds: u32,
    /// Exit `k` of the last (accepting) acceptance loop.
    pub inner_k_final: u32,
    pub bernoulli_k_final: u32,
    pub parallel_time_steps: u64,
    /// Acceptance-loop iterations summed over all rounds.
    pub inner_iterations: u32,
    /// Exit `k` of every acceptance loop, in order.
    pub round_exit_ks: Vec<u32>,
    phase_bits: [u64; 6],
    record: bool,
    messages: Vec<Message>,
}

impl Transcript {
    pub fn new(n: usize, record: bool) -> Self {
        Transcript { n, record, ..Default::default() }
    }

    pub fn send(&mut self, phase: Phase, sender: usize, receiver: usize, bits: u64) {
        if bits == 0 {
            return;
        }
        if sender > receiver {
            self.bits_to_leader += bits;
        } else {
            self.bits_from_leader += bits;
        }
        self.phase_bits[phase.index()] += bits;
        if self.record {
            self.messages.push(Message { phase, sender, receiver, bits });
        }
    }

    /// Advances parallel time.
    pub fn tick(&mut self, steps: u64) {
        self.parallel_time_steps += steps;
    }

    pub fn phase_bits(&self, phase: Phase) -> u64 {
        self.phase_bits[phase.index()]
    }

    pub fn total_bits(&self) -> u64 {
        self.bits_to_leader + self.bits_from_leader
    }

    pub fn is_recording(&self) -> bool {
        self.record
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Writes the message log as `phase,sender,receiver,bits` lines.
    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        for m in &self.messages {
            writeln!(w, "{},{},{},{}", m.phase, m.sender, m.receiver, m.bits)?;
        }
        Ok(())
    }

    pub fn log_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_log(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii log")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_follow_direction_and_phase() {
        let mut t = Transcript::new(3, true);
        t.send(Phase::CsRequest, 2, 1, 7);
        t.send(Phase::Sync, 1, 3, 2);
        t.send(Phase::Tree, 4, 3, 5);
        t.send(Phase::Sync, 1, 2, 0);
        assert_eq!(t.bits_to_leader, 12);
        assert_eq!(t.bits_from_leader, 2);
        assert_eq!(t.phase_bits(Phase::Sync), 2);
        assert_eq!(t.messages().len(), 3);
        assert_eq!(t.log_string(), "cs-request,2,1,7\nsync,1,3,2\ntree,4,3,5\n");
        let sum: u64 = t.messages().iter().map(|m| m.bits).sum();
        assert_eq!(sum, t.total_bits());
    }
}

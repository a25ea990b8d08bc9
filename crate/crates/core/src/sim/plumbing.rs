use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::ir::Scalar;

/// One stream transaction: up to `lanes` elements moved together.
#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    /// First base tick at which the consumer may pop the word.
    pub visible_at: u64,
    pub data: Vec<Scalar>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub pushed_elements: u64,
    pub popped_elements: u64,
    pub pushed_words: u64,
    pub popped_words: u64,
    pub full_stalls: u64,
    pub empty_stalls: u64,
    pub max_occupancy: usize,
    pub final_occupancy: usize,
}

/// Bounded FIFO of words. Occupancy counts words in flight, visible or not.
#[derive(Clone, Debug)]
pub struct Channel {
    pub name: String,
    pub depth: usize,
    words: VecDeque<Word>,
    pub stats: ChannelStats,
    /// Set once the producer will never push again.
    pub closed: bool,
}

impl Channel {
    pub fn new(name: impl Into<String>, depth: usize) -> Self {
        Self {
            name: name.into(),
            depth: depth.max(1),
            words: VecDeque::new(),
            stats: ChannelStats::default(),
            closed: false,
        }
    }

    pub fn occupancy(&self) -> usize {
        self.words.len()
    }

    pub fn can_push(&self) -> bool {
        self.words.len() < self.depth
    }

    /// Returns false (and leaves the channel untouched) when full.
    pub fn push(&mut self, data: Vec<Scalar>, visible_at: u64) -> bool {
        if !self.can_push() {
            return false;
        }
        self.stats.pushed_elements += data.len() as u64;
        self.stats.pushed_words += 1;
        self.words.push_back(Word { visible_at, data });
        self.stats.max_occupancy = self.stats.max_occupancy.max(self.words.len());
        true
    }

    pub fn ready(&self, now: u64) -> bool {
        self.words.front().is_some_and(|w| w.visible_at <= now)
    }

    pub fn pop(&mut self, now: u64) -> Option<Vec<Scalar>> {
        if !self.ready(now) {
            return None;
        }
        let w = self.words.pop_front()?;
        self.stats.popped_elements += w.data.len() as u64;
        self.stats.popped_words += 1;
        Some(w.data)
    }

    /// Producer finished and nothing left to pop.
    pub fn drained(&self) -> bool {
        self.closed && self.words.is_empty()
    }
}

/// FNV-1a over the raw element bits.
pub fn payload_hash(data: &[Scalar]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for s in data {
        for b in s.bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stall {
    Full,
    Empty,
}

/// What a plumbing node did in one tick.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Activity {
    pub popped: Option<u64>,
    pub pushed: Option<u64>,
    pub stall: Option<Stall>,
}

impl Activity {
    pub fn progressed(&self) -> bool {
        self.popped.is_some() || self.pushed.is_some()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IssuerState {
    pub narrow: usize,
    pub held: VecDeque<Scalar>,
}

impl IssuerState {
    pub fn new(narrow: u32) -> Self {
        Self {
            narrow: narrow.max(1) as usize,
            held: VecDeque::new(),
        }
    }

    pub fn done(&self, input: &Channel) -> bool {
        self.held.is_empty() && input.drained()
    }
}

/// Splits wide words into `narrow`-element words, lane 0 first. A new wide
/// word is accepted only once the previous one is fully issued; accepting
/// and issuing may happen in the same tick.
pub fn step_issuer(
    state: &mut IssuerState,
    input: &mut Channel,
    output: &mut Channel,
    now: u64,
    visible_at: u64,
) -> Activity {
    let mut act = Activity::default();
    if state.held.is_empty() {
        match input.pop(now) {
            Some(w) => {
                act.popped = Some(payload_hash(&w));
                state.held.extend(w);
            }
            None => {
                if !input.drained() {
                    input.stats.empty_stalls += 1;
                    act.stall = Some(Stall::Empty);
                }
                return act;
            }
        }
    }
    if !output.can_push() {
        output.stats.full_stalls += 1;
        act.stall = Some(Stall::Full);
        return act;
    }
    let n = state.narrow.min(state.held.len());
    let word: Vec<Scalar> = state.held.drain(..n).collect();
    act.pushed = Some(payload_hash(&word));
    output.push(word, visible_at);
    act
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PackerState {
    pub wide: usize,
    pub acc: Vec<Scalar>,
}

impl PackerState {
    pub fn new(wide: u32) -> Self {
        Self {
            wide: wide.max(1) as usize,
            acc: Vec::new(),
        }
    }

    pub fn done(&self, input: &Channel) -> bool {
        self.acc.is_empty() && input.drained()
    }
}

/// Inverse of [`step_issuer`]: concatenates narrow words in arrival order and
/// emits once `wide` elements are held. A trailing partial group is never
/// emitted.
pub fn step_packer(
    state: &mut PackerState,
    input: &mut Channel,
    output: &mut Channel,
    now: u64,
    visible_at: u64,
) -> Activity {
    let mut act = Activity::default();
    if state.acc.len() < state.wide {
        match input.pop(now) {
            Some(w) => {
                act.popped = Some(payload_hash(&w));
                state.acc.extend(w);
            }
            None => {
                if !input.drained() {
                    input.stats.empty_stalls += 1;
                    act.stall = Some(Stall::Empty);
                }
            }
        }
    }
    if state.acc.len() >= state.wide {
        if output.can_push() {
            let word: Vec<Scalar> = state.acc.drain(..state.wide).collect();
            act.pushed = Some(payload_hash(&word));
            output.push(word, visible_at);
        } else {
            output.stats.full_stalls += 1;
            act.stall = Some(Stall::Full);
        }
    }
    act
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SyncState;

/// Dual-clock FIFO stage: runs on source-domain ticks and forwards one word
/// per tick, visible to the destination at `visible_at`.
pub fn step_synchronizer(
    _state: &mut SyncState,
    input: &mut Channel,
    output: &mut Channel,
    now: u64,
    visible_at: u64,
) -> Activity {
    let mut act = Activity::default();
    if !input.ready(now) {
        if !input.drained() {
            input.stats.empty_stalls += 1;
            act.stall = Some(Stall::Empty);
        }
        return act;
    }
    if !output.can_push() {
        output.stats.full_stalls += 1;
        act.stall = Some(Stall::Full);
        return act;
    }
    let w = input.pop(now).expect("ready word");
    let h = payload_hash(&w);
    act.popped = Some(h);
    act.pushed = Some(h);
    output.push(w, visible_at);
    act
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: &[f32]) -> Vec<Scalar> {
        v.iter().map(|x| Scalar::F32(*x)).collect()
    }

    #[test]
    fn issuer_splits_lane_zero_first() {
        let mut input = Channel::new("in", 4);
        let mut out = Channel::new("out", 4);
        input.push(f(&[1.0, 2.0, 3.0, 4.0]), 0);
        let mut st = IssuerState::new(2);
        step_issuer(&mut st, &mut input, &mut out, 0, 1);
        step_issuer(&mut st, &mut input, &mut out, 1, 2);
        assert_eq!(out.pop(1).unwrap(), f(&[1.0, 2.0]));
        assert_eq!(out.pop(2).unwrap(), f(&[3.0, 4.0]));
    }

    #[test]
    fn issuer_holds_when_downstream_full() {
        let mut input = Channel::new("in", 4);
        let mut out = Channel::new("out", 1);
        input.push(f(&[1.0, 2.0, 3.0, 4.0]), 0);
        let mut st = IssuerState::new(2);
        step_issuer(&mut st, &mut input, &mut out, 0, 0);
        let act = step_issuer(&mut st, &mut input, &mut out, 1, 1);
        assert_eq!(act.stall, Some(Stall::Full));
        assert_eq!(out.stats.full_stalls, 1);
        assert_eq!(st.held.len(), 2);
    }

    #[test]
    fn packer_inverts_issuer() {
        let mut input = Channel::new("in", 4);
        let mut out = Channel::new("out", 4);
        input.push(f(&[1.0, 2.0]), 0);
        input.push(f(&[3.0, 4.0]), 0);
        let mut st = PackerState::new(4);
        let a = step_packer(&mut st, &mut input, &mut out, 0, 1);
        assert!(a.pushed.is_none());
        step_packer(&mut st, &mut input, &mut out, 1, 2);
        assert_eq!(out.pop(2).unwrap(), f(&[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn pass_through_when_factor_one() {
        let mut input = Channel::new("in", 4);
        let mut mid = Channel::new("mid", 4);
        let mut out = Channel::new("out", 4);
        input.push(f(&[7.0]), 0);
        step_issuer(&mut IssuerState::new(1), &mut input, &mut mid, 0, 0);
        step_packer(&mut PackerState::new(1), &mut mid, &mut out, 0, 0);
        assert_eq!(out.pop(0).unwrap(), f(&[7.0]));
    }

    #[test]
    fn synchronizer_delays_visibility() {
        let mut input = Channel::new("in", 4);
        let mut out = Channel::new("out", 4);
        input.push(f(&[1.0]), 0);
        // slow tick t=3 on a 2:1 clock is fast tick 6; L_sync = 2 fast ticks.
        step_synchronizer(&mut SyncState, &mut input, &mut out, 6, 6 + 2);
        assert!(!out.ready(7));
        assert!(out.ready(8));
    }

    #[test]
    fn synchronizer_empty_stall() {
        let mut input = Channel::new("in", 4);
        let mut out = Channel::new("out", 4);
        let act = step_synchronizer(&mut SyncState, &mut input, &mut out, 0, 2);
        assert_eq!(act.stall, Some(Stall::Empty));
        assert_eq!(input.stats.empty_stalls, 1);
    }
}

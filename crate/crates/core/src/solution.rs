//! Call-sequence solutions.
//!
//! A solution is a single vector of calls. Order matters only between calls
//! that share a port or a vessel; the four occurrence pointers expose exactly
//! that dependency structure to the search operators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evaluator::EvalResult;
use crate::instance::{Instance, PortKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Call {
    pub port: usize,
    pub vessel: usize,
}

impl Call {
    pub fn new(port: usize, vessel: usize) -> Self {
        Call { port, vessel }
    }

    /// True when the two calls share a port or a vessel.
    pub fn conflicts(&self, other: &Call) -> bool {
        self.port == other.port || self.vessel == other.vessel
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(P{},V{})", self.port, self.vessel)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolutionError {
    #[error("position {position}: vessel {vessel} must visit a {expected:?} port next")]
    Parity {
        position: usize,
        vessel: usize,
        expected: PortKind,
    },
    #[error("call {call} references an unknown port or vessel")]
    UnknownIndex { call: Call },
    #[error("operand out of range: {0}")]
    OutOfRange(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Default)]
pub struct Solution {
    calls: Vec<Call>,
    prev_vessel: Vec<Option<usize>>,
    prev_port: Vec<Option<usize>>,
    next_vessel: Vec<Option<usize>>,
    next_port: Vec<Option<usize>>,
    last_of_port: Vec<Option<usize>>,
    last_of_vessel: Vec<Option<usize>>,
    cache: Option<Box<EvalResult>>,
    /// Number of leading positions unchanged since `cache` was computed.
    valid_prefix: usize,
}

impl PartialEq for Solution {
    fn eq(&self, other: &Self) -> bool {
        self.calls == other.calls
    }
}

impl Eq for Solution {}

impl Solution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a solution from a call list, checking indices and parity.
    pub fn from_calls(calls: Vec<Call>, inst: &Instance) -> Result<Self, SolutionError> {
        let mut s = Solution {
            calls,
            ..Default::default()
        };
        s.rebuild_pointers(inst)?;
        Ok(s)
    }

    pub fn calls(&self) -> &[Call] {
        &self.calls
    }

    pub fn len(&self) -> usize {
        self.calls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn prev_vessel(&self, i: usize) -> Option<usize> {
        self.prev_vessel[i]
    }

    pub fn prev_port(&self, i: usize) -> Option<usize> {
        self.prev_port[i]
    }

    pub fn next_vessel(&self, i: usize) -> Option<usize> {
        self.next_vessel[i]
    }

    pub fn next_port(&self, i: usize) -> Option<usize> {
        self.next_port[i]
    }

    /// Position of the most recent call of `vessel`, if any.
    pub fn last_of_vessel(&self, vessel: usize) -> Option<usize> {
        self.last_of_vessel.get(vessel).copied().flatten()
    }

    pub fn last_of_port(&self, port: usize) -> Option<usize> {
        self.last_of_port.get(port).copied().flatten()
    }

    /// Kind of port the vessel must visit next under the alternation rule.
    pub fn next_kind(&self, vessel: usize, inst: &Instance) -> PortKind {
        match self.last_of_vessel(vessel) {
            Some(i) => inst.kind(self.calls[i].port).opposite(),
            None => inst.vessels[vessel].first_kind(),
        }
    }

    pub fn can_append(&self, call: Call, inst: &Instance) -> bool {
        call.port < inst.num_ports()
            && call.vessel < inst.num_vessels()
            && inst.kind(call.port) == self.next_kind(call.vessel, inst)
    }

    /// Appends a call, back-patching the `next` pointers of the previous
    /// same-port and same-vessel occurrences.
    pub fn append(&mut self, call: Call, inst: &Instance) -> Result<(), SolutionError> {
        if call.port >= inst.num_ports() || call.vessel >= inst.num_vessels() {
            return Err(SolutionError::UnknownIndex { call });
        }
        let expected = self.next_kind(call.vessel, inst);
        if inst.kind(call.port) != expected {
            return Err(SolutionError::Parity {
                position: self.calls.len(),
                vessel: call.vessel,
                expected,
            });
        }
        self.push_unchecked(call);
        Ok(())
    }

    fn push_unchecked(&mut self, call: Call) {
        let i = self.calls.len();
        grow(&mut self.last_of_port, call.port + 1);
        grow(&mut self.last_of_vessel, call.vessel + 1);
        let pp = self.last_of_port[call.port];
        let pv = self.last_of_vessel[call.vessel];
        if let Some(k) = pp {
            self.next_port[k] = Some(i);
        }
        if let Some(k) = pv {
            self.next_vessel[k] = Some(i);
        }
        self.calls.push(call);
        self.prev_port.push(pp);
        self.prev_vessel.push(pv);
        self.next_port.push(None);
        self.next_vessel.push(None);
        self.last_of_port[call.port] = Some(i);
        self.last_of_vessel[call.vessel] = Some(i);
    }

    /// Recomputes all four pointer arrays from scratch and checks parity.
    pub fn rebuild_pointers(&mut self, inst: &Instance) -> Result<(), SolutionError> {
        for &call in &self.calls {
            if call.port >= inst.num_ports() || call.vessel >= inst.num_vessels() {
                return Err(SolutionError::UnknownIndex { call });
            }
        }
        self.rebuild_unchecked();
        self.check_parity(inst)
    }

    fn rebuild_unchecked(&mut self) {
        let calls = std::mem::take(&mut self.calls);
        self.prev_port.clear();
        self.prev_vessel.clear();
        self.next_port.clear();
        self.next_vessel.clear();
        self.last_of_port.iter_mut().for_each(|x| *x = None);
        self.last_of_vessel.iter_mut().for_each(|x| *x = None);
        self.calls.reserve(calls.len());
        for call in calls {
            self.push_unchecked(call);
        }
    }

    /// Recomputes the pointer chains of the given ports and vessels only.
    fn repair_chains(&mut self, ports: &[usize], vessels: &[usize]) {
        for &p in ports {
            let mut last = None;
            for i in 0..self.calls.len() {
                if self.calls[i].port == p {
                    self.prev_port[i] = last;
                    if let Some(k) = last {
                        self.next_port[k] = Some(i);
                    }
                    last = Some(i);
                }
            }
            if let Some(k) = last {
                self.next_port[k] = None;
            }
            grow(&mut self.last_of_port, p + 1);
            self.last_of_port[p] = last;
        }
        for &v in vessels {
            let mut last = None;
            for i in 0..self.calls.len() {
                if self.calls[i].vessel == v {
                    self.prev_vessel[i] = last;
                    if let Some(k) = last {
                        self.next_vessel[k] = Some(i);
                    }
                    last = Some(i);
                }
            }
            if let Some(k) = last {
                self.next_vessel[k] = None;
            }
            grow(&mut self.last_of_vessel, v + 1);
            self.last_of_vessel[v] = last;
        }
    }

    /// Verifies the alternation rule for every vessel chain.
    pub fn check_parity(&self, inst: &Instance) -> Result<(), SolutionError> {
        let mut expected: Vec<PortKind> = inst.vessels.iter().map(|v| v.first_kind()).collect();
        for (i, call) in self.calls.iter().enumerate() {
            let want = expected[call.vessel];
            if inst.kind(call.port) != want {
                return Err(SolutionError::Parity {
                    position: i,
                    vessel: call.vessel,
                    expected: want,
                });
            }
            expected[call.vessel] = want.opposite();
        }
        Ok(())
    }

    /// Parity check restricted to the listed vessels.
    pub fn check_vessel_parity(&self, vessels: &[usize], inst: &Instance) -> Result<(), SolutionError> {
        for &v in vessels {
            let mut want = inst.vessels[v].first_kind();
            let mut i = self.first_of_vessel(v);
            while let Some(k) = i {
                if inst.kind(self.calls[k].port) != want {
                    return Err(SolutionError::Parity {
                        position: k,
                        vessel: v,
                        expected: want,
                    });
                }
                want = want.opposite();
                i = self.next_vessel[k];
            }
        }
        Ok(())
    }

    pub fn first_of_vessel(&self, vessel: usize) -> Option<usize> {
        let mut i = self.last_of_vessel(vessel)?;
        while let Some(k) = self.prev_vessel[i] {
            i = k;
        }
        Some(i)
    }

    /// Positions of one vessel's calls in sequence order.
    pub fn vessel_chain(&self, vessel: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut i = self.first_of_vessel(vessel);
        while let Some(k) = i {
            out.push(k);
            i = self.next_vessel[k];
        }
        out
    }

    // --- evaluation cache ---------------------------------------------------

    /// Cached evaluation if it still describes every position.
    pub fn evaluation(&self) -> Option<&EvalResult> {
        match &self.cache {
            Some(e) if self.valid_prefix == self.calls.len() && e.schedule.len() == self.calls.len() => {
                Some(e)
            }
            _ => None,
        }
    }

    /// Stale or fresh cache together with the first position that changed.
    pub(crate) fn cache_with_change_point(&self) -> Option<(&EvalResult, usize)> {
        self.cache.as_deref().map(|e| (e, self.valid_prefix))
    }

    pub(crate) fn store_evaluation(&mut self, eval: EvalResult) {
        self.valid_prefix = self.calls.len();
        self.cache = Some(Box::new(eval));
    }

    pub fn clear_evaluation(&mut self) {
        self.cache = None;
        self.valid_prefix = 0;
    }

    /// First position whose call changed since the last evaluation.
    pub fn change_point(&self) -> usize {
        if self.cache.is_none() {
            0
        } else {
            self.valid_prefix
        }
    }

    fn touch(&mut self, position: usize) {
        self.valid_prefix = self.valid_prefix.min(position);
    }

    /// Per-position "beyond horizon" flags, if the solution is evaluated.
    pub fn truncation_mask(&self) -> Option<Vec<bool>> {
        self.evaluation()
            .map(|e| e.schedule.iter().map(|c| c.truncated).collect())
    }

    // --- raw edits used by the neighbourhood operators ------------------------
    //
    // These keep pointers consistent but do not check parity; callers verify
    // the affected vessels afterwards.

    pub(crate) fn swap_positions(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let (a, b) = (self.calls[i], self.calls[j]);
        self.calls.swap(i, j);
        self.repair_chains(&dedup2(a.port, b.port), &dedup2(a.vessel, b.vessel));
        self.touch(i.min(j));
    }

    pub(crate) fn relocate(&mut self, from: usize, to: usize) {
        if from == to {
            return;
        }
        let call = self.calls.remove(from);
        self.calls.insert(to, call);
        self.rebuild_unchecked();
        self.touch(from.min(to));
    }

    pub(crate) fn set_port(&mut self, i: usize, port: usize) {
        let old = self.calls[i].port;
        if old == port {
            return;
        }
        self.calls[i].port = port;
        self.repair_chains(&dedup2(old, port), &[]);
        self.touch(i);
    }

    /// Removes the positions in `positions` (any order, no duplicates).
    pub(crate) fn remove_positions(&mut self, positions: &[usize]) {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        let Some(&first) = sorted.first() else { return };
        for &p in sorted.iter().rev() {
            self.calls.remove(p);
        }
        self.rebuild_unchecked();
        self.touch(first);
    }

    pub(crate) fn push_raw(&mut self, call: Call) {
        self.push_unchecked(call);
    }

    // --- serialization ---------------------------------------------------------

    /// One `port,vessel` line per call; truncated calls carry `#truncated`
    /// when the solution is evaluated.
    pub fn to_text(&self) -> String {
        let mask = self.truncation_mask();
        let mut out = String::new();
        for (i, c) in self.calls.iter().enumerate() {
            out.push_str(&format!("{},{}", c.port, c.vessel));
            if mask.as_ref().is_some_and(|m| m[i]) {
                out.push_str(" #truncated");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str, inst: &Instance) -> Result<Self, SolutionError> {
        let calls = parse_calls(text)?;
        Self::from_calls(calls, inst)
    }
}

/// Parses the call-list format without instance checks. Blank lines and lines
/// starting with `#` are ignored; a trailing `#...` marker is accepted.
pub fn parse_calls(text: &str) -> Result<Vec<Call>, SolutionError> {
    let mut calls = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let body = line.split('#').next().unwrap_or("").trim();
        let mut fields = body.split(',').map(str::trim);
        let err = |message: &str| SolutionError::Parse {
            line: k + 1,
            message: message.to_string(),
        };
        let port = fields
            .next()
            .and_then(|f| usize::from_str(f).ok())
            .ok_or_else(|| err("expected `port_id,vessel_id`"))?;
        let vessel = fields
            .next()
            .and_then(|f| usize::from_str(f).ok())
            .ok_or_else(|| err("expected `port_id,vessel_id`"))?;
        if fields.next().is_some() {
            return Err(err("too many fields"));
        }
        calls.push(Call { port, vessel });
    }
    Ok(calls)
}

/// True iff `b` can be obtained from `a` by swapping adjacent calls that share
/// neither a port nor a vessel.
///
/// Two sequences are equivalent exactly when their projections onto every
/// port and every vessel coincide.
pub fn equivalent_under_commutation(a: &[Call], b: &[Call]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let ports = a.iter().chain(b).map(|c| c.port).max().map_or(0, |m| m + 1);
    let vessels = a.iter().chain(b).map(|c| c.vessel).max().map_or(0, |m| m + 1);
    let project = |s: &[Call]| {
        let mut by_port = vec![Vec::new(); ports];
        let mut by_vessel = vec![Vec::new(); vessels];
        for c in s {
            by_port[c.port].push(*c);
            by_vessel[c.vessel].push(*c);
        }
        (by_port, by_vessel)
    };
    project(a) == project(b)
}

fn grow(v: &mut Vec<Option<usize>>, len: usize) {
    if v.len() < len {
        v.resize(len, None);
    }
}

fn dedup2(a: usize, b: usize) -> Vec<usize> {
    if a == b {
        vec![a]
    } else {
        vec![a, b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_toy, LoadState};

    fn toy1() -> Instance {
        generate_toy(1, 1, 12).unwrap()
    }

    /// TOY1 with a second consumer and a second, loaded vessel.
    fn two_by_two() -> Instance {
        let mut inst = generate_toy(1, 2, 12).unwrap();
        let mut v1 = inst.vessels[0].clone();
        v1.id = 1;
        v1.initial_state = LoadState::Loaded;
        inst.vessels.push(v1);
        inst.validate().unwrap();
        inst
    }

    #[test]
    fn append_first_call_has_no_pointers() {
        let inst = toy1();
        let mut s = Solution::new();
        s.append(Call::new(0, 0), &inst).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(
            (s.prev_vessel(0), s.prev_port(0), s.next_vessel(0), s.next_port(0)),
            (None, None, None, None)
        );
    }

    #[test]
    fn append_links_vessel_chain() {
        let inst = toy1();
        let mut s = Solution::new();
        s.append(Call::new(0, 0), &inst).unwrap();
        s.append(Call::new(1, 0), &inst).unwrap();
        assert_eq!(s.prev_vessel(1), Some(0));
        assert_eq!(s.prev_port(1), None);
        assert_eq!(s.next_vessel(0), Some(1));
    }

    #[test]
    fn append_rejects_parity_violation() {
        let inst = toy1();
        let mut s = Solution::new();
        s.append(Call::new(0, 0), &inst).unwrap();
        let err = s.append(Call::new(0, 0), &inst).unwrap_err();
        assert!(matches!(err, SolutionError::Parity { position: 1, vessel: 0, .. }));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn loaded_vessel_starts_with_consumption() {
        let inst = two_by_two();
        let mut s = Solution::new();
        assert!(s.append(Call::new(0, 1), &inst).is_err());
        s.append(Call::new(1, 1), &inst).unwrap();
    }

    #[test]
    fn rebuild_two_vessel_sequence() {
        let inst = two_by_two();
        // V0 empty loads at P0; V1 loaded discharges at P1; V0 discharges at P1.
        let mut s = Solution::from_calls(
            vec![Call::new(0, 0), Call::new(1, 1), Call::new(1, 0)],
            &inst,
        )
        .unwrap();
        assert_eq!(s.prev_port(2), Some(1));
        assert_eq!(s.prev_vessel(2), Some(0));
        assert_eq!(s.next_port(1), Some(2));
        let before = s.clone_pointers();
        s.rebuild_pointers(&inst).unwrap();
        assert_eq!(before, s.clone_pointers());
    }

    #[test]
    fn empty_rebuild() {
        let inst = toy1();
        let mut s = Solution::new();
        s.rebuild_pointers(&inst).unwrap();
        assert!(s.is_empty());
        assert!(s.clone_pointers().0.is_empty());
    }

    #[test]
    fn commutation_examples() {
        let a = [Call::new(1, 1), Call::new(3, 2)];
        let b = [Call::new(3, 2), Call::new(1, 1)];
        assert!(equivalent_under_commutation(&a, &b));
        assert!(equivalent_under_commutation(&a, &a));
        let c = [Call::new(1, 1), Call::new(1, 2)];
        let d = [Call::new(1, 2), Call::new(1, 1)];
        assert!(!equivalent_under_commutation(&c, &d));
    }

    #[test]
    fn text_round_trip() {
        let inst = two_by_two();
        let s = Solution::from_calls(
            vec![Call::new(0, 0), Call::new(1, 1), Call::new(2, 0)],
            &inst,
        )
        .unwrap();
        let text = format!("# comment\n{}\n", s.to_text());
        let back = Solution::parse_text(&text, &inst).unwrap();
        assert_eq!(s, back);
        assert!(parse_calls("1;2").is_err());
        assert_eq!(parse_calls("0,1 #truncated").unwrap(), vec![Call::new(0, 1)]);
    }

    #[test]
    fn raw_edits_keep_pointers_consistent() {
        let inst = two_by_two();
        let mut s = Solution::from_calls(
            vec![Call::new(0, 0), Call::new(1, 1), Call::new(2, 0), Call::new(0, 1)],
            &inst,
        )
        .unwrap();
        s.swap_positions(1, 2);
        let mut fresh = Solution::from_calls(s.calls().to_vec(), &inst).unwrap();
        assert_eq!(s.clone_pointers(), fresh.clone_pointers());
        s.set_port(1, 1);
        fresh = Solution::from_calls(s.calls().to_vec(), &inst).unwrap();
        assert_eq!(s.clone_pointers(), fresh.clone_pointers());
        s.relocate(3, 0);
        s.remove_positions(&[2]);
        // parity may be broken by the removal; pointers must still agree
        let mut raw = Solution {
            calls: s.calls().to_vec(),
            ..Default::default()
        };
        raw.rebuild_unchecked();
        assert_eq!(s.clone_pointers(), raw.clone_pointers());
    }

    impl Solution {
        #[allow(clippy::type_complexity)]
        pub(crate) fn clone_pointers(
            &self,
        ) -> (Vec<Option<usize>>, Vec<Option<usize>>, Vec<Option<usize>>, Vec<Option<usize>>) {
            (
                self.prev_vessel.clone(),
                self.prev_port.clone(),
                self.next_vessel.clone(),
                self.next_port.clone(),
            )
        }
    }
}

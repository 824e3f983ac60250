//! Petri-net structure, firing semantics, and conformance-tolerant trace replay.
//!
//! The net is a plain place/transition bipartite graph. Replay is total: events
//! whose transition is not enabled are force-fired by inserting the missing
//! input tokens, and the insertions are counted so downstream metrics can
//! penalize them. Silent transitions are resolved along a shortest enabling
//! path before any force-firing happens.

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::Trace;

/// Index of a place within its net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub usize);

/// Index of a transition within its net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    /// Activity label; `None` marks a silent (routing) transition.
    pub label: Option<String>,
    pub inputs: Vec<PlaceId>,
    pub outputs: Vec<PlaceId>,
}

/// Token count per place; the state of a net.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking(pub Vec<u32>);

impl Marking {
    pub fn empty(n_places: usize) -> Self {
        Marking(vec![0; n_places])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn get(&self, p: PlaceId) -> u32 {
        self.0[p.0]
    }
}

#[derive(Debug, Error)]
pub enum PetriError {
    #[error("transition t{0} is not enabled")]
    NotEnabled(usize),
    #[error("event label {0:?} does not match any transition (strict replay)")]
    UnknownLabelPolicyViolation(String),
    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("net JSON is malformed: {0}")]
    BadJson(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    initial_marking: Marking,
    final_marking: Marking,
}

/// Incremental constructor; `build` checks the structural invariants.
#[derive(Debug, Default)]
pub struct PetriNetBuilder {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    initial: BTreeMap<usize, u32>,
    final_: BTreeMap<usize, u32>,
}

impl PetriNetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> PlaceId {
        self.places.push(Place { name: name.into() });
        PlaceId(self.places.len() - 1)
    }

    pub fn add_transition(
        &mut self,
        label: Option<&str>,
        inputs: Vec<PlaceId>,
        outputs: Vec<PlaceId>,
    ) -> TransitionId {
        self.transitions.push(Transition {
            label: label.map(str::to_owned),
            inputs,
            outputs,
        });
        TransitionId(self.transitions.len() - 1)
    }

    pub fn mark_initial(&mut self, p: PlaceId, tokens: u32) -> &mut Self {
        self.initial.insert(p.0, tokens);
        self
    }

    pub fn mark_final(&mut self, p: PlaceId, tokens: u32) -> &mut Self {
        self.final_.insert(p.0, tokens);
        self
    }

    pub fn build(self) -> Result<PetriNet, PetriError> {
        let n = self.places.len();
        for (i, t) in self.transitions.iter().enumerate() {
            if t.inputs.is_empty() || t.outputs.is_empty() {
                return Err(PetriError::InvalidNet(format!(
                    "transition t{i} must have at least one input and one output arc"
                )));
            }
            for p in t.inputs.iter().chain(t.outputs.iter()) {
                if p.0 >= n {
                    return Err(PetriError::InvalidNet(format!(
                        "transition t{i} references unknown place p{}",
                        p.0
                    )));
                }
            }
        }
        let mut initial = Marking::empty(n);
        for (p, c) in self.initial {
            initial.0[p] = c;
        }
        let mut final_ = Marking::empty(n);
        for (p, c) in self.final_ {
            final_.0[p] = c;
        }
        Ok(PetriNet {
            places: self.places,
            transitions: self.transitions,
            initial_marking: initial,
            final_marking: final_,
        })
    }
}

impl PetriNet {
    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial_marking
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.0]
    }

    /// All arcs as (from, to) strings using the `p{i}`/`t{i}` id scheme.
    pub fn arcs(&self) -> Vec<(String, String)> {
        let mut arcs = Vec::new();
        for (i, t) in self.transitions.iter().enumerate() {
            for p in &t.inputs {
                arcs.push((format!("p{}", p.0), format!("t{i}")));
            }
            for p in &t.outputs {
                arcs.push((format!("t{i}"), format!("p{}", p.0)));
            }
        }
        arcs
    }

    pub fn arc_count(&self) -> usize {
        self.transitions
            .iter()
            .map(|t| t.inputs.len() + t.outputs.len())
            .sum()
    }

    /// Labels of all visible transitions, sorted and deduplicated.
    pub fn alphabet(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .transitions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Transitions whose every input place holds at least one token, in id order.
    pub fn enabled(&self, m: &Marking) -> Vec<TransitionId> {
        (0..self.transitions.len())
            .filter(|&i| self.is_enabled(m, TransitionId(i)))
            .map(TransitionId)
            .collect()
    }

    pub fn is_enabled(&self, m: &Marking, t: TransitionId) -> bool {
        self.transitions[t.0].inputs.iter().all(|p| m.0[p.0] > 0)
    }

    /// Consume one token per input arc, produce one per output arc.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking, PetriError> {
        if !self.is_enabled(m, t) {
            return Err(PetriError::NotEnabled(t.0));
        }
        let mut out = m.clone();
        for p in &self.transitions[t.0].inputs {
            out.0[p.0] -= 1;
        }
        for p in &self.transitions[t.0].outputs {
            out.0[p.0] += 1;
        }
        Ok(out)
    }

    fn visible_transitions_with_label(&self, label: &str) -> Vec<TransitionId> {
        (0..self.transitions.len())
            .filter(|&i| self.transitions[i].label.as_deref() == Some(label))
            .map(TransitionId)
            .collect()
    }

    /// Shortest sequence of silent firings after which `target` is enabled.
    /// Breadth-first in transition-id order, so ties resolve deterministically.
    fn silent_enabling_path(&self, from: &Marking, target: TransitionId) -> Option<Vec<TransitionId>> {
        self.silent_search(from, |m| self.is_enabled(m, target))
    }

    fn silent_path_to(&self, from: &Marking, goal: &Marking) -> Option<Vec<TransitionId>> {
        self.silent_search(from, |m| m == goal)
    }

    fn silent_search<F: Fn(&Marking) -> bool>(
        &self,
        from: &Marking,
        done: F,
    ) -> Option<Vec<TransitionId>> {
        const MAX_VISITED: usize = 20_000;
        if done(from) {
            return Some(Vec::new());
        }
        let max_depth = self.transitions.len();
        let mut visited: HashSet<Marking> = HashSet::new();
        visited.insert(from.clone());
        let mut queue: VecDeque<(Marking, Vec<TransitionId>)> = VecDeque::new();
        queue.push_back((from.clone(), Vec::new()));
        while let Some((m, path)) = queue.pop_front() {
            if path.len() >= max_depth {
                continue;
            }
            for i in 0..self.transitions.len() {
                let t = TransitionId(i);
                if self.transitions[i].label.is_some() || !self.is_enabled(&m, t) {
                    continue;
                }
                let next = self.fire(&m, t).expect("enabled transition fires");
                if visited.contains(&next) {
                    continue;
                }
                let mut next_path = path.clone();
                next_path.push(t);
                if done(&next) {
                    return Some(next_path);
                }
                if visited.len() >= MAX_VISITED {
                    return None;
                }
                visited.insert(next.clone());
                queue.push_back((next, next_path));
            }
        }
        None
    }
}

/// How replay treats event labels absent from the net's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplayPolicy {
    /// Skip the event and count it.
    #[default]
    Lenient,
    /// Fail on the first unknown label.
    Strict,
}

/// Outcome of replaying one trace.
#[derive(Debug, Clone)]
pub struct ReplayResult {
    pub final_marking: Marking,
    /// Transitions fired without full enablement.
    pub forced_firings: usize,
    /// Tokens inserted to make force-firings possible.
    pub missing_tokens: usize,
    /// Tokens that entered each place during replay.
    pub produced_per_place: Vec<u64>,
    /// Events skipped under the lenient unknown-label policy.
    pub skipped_events: usize,
}

/// What a single replay step did.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Places that received tokens, with multiplicity, in firing order.
    pub entered: Vec<PlaceId>,
    /// False when the event was skipped (unknown label, lenient policy).
    pub fired: bool,
    /// True when the firing needed inserted tokens.
    pub forced: bool,
}

/// Step-by-step replay engine shared by conformance replay and the decay
/// feature extractor, so both apply the identical firing policy.
pub struct Replayer<'a> {
    net: &'a PetriNet,
    marking: Marking,
    produced: Vec<u64>,
    forced_firings: usize,
    missing_tokens: usize,
    skipped_events: usize,
    policy: ReplayPolicy,
}

impl<'a> Replayer<'a> {
    pub fn new(net: &'a PetriNet, policy: ReplayPolicy) -> Self {
        Replayer {
            net,
            marking: net.initial_marking.clone(),
            produced: vec![0; net.places.len()],
            forced_firings: 0,
            missing_tokens: 0,
            skipped_events: 0,
            policy,
        }
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    fn fire_recording(&mut self, t: TransitionId, entered: &mut Vec<PlaceId>) {
        self.marking = self.net.fire(&self.marking, t).expect("transition enabled");
        for p in &self.net.transitions[t.0].outputs {
            self.produced[p.0] += 1;
            entered.push(*p);
        }
    }

    /// Replay one event. Fires the matching visible transition, resolving
    /// silent transitions along a shortest enabling path first and inserting
    /// missing tokens as a last resort.
    pub fn step(&mut self, label: &str) -> Result<StepOutcome, PetriError> {
        let candidates = self.net.visible_transitions_with_label(label);
        if candidates.is_empty() {
            return match self.policy {
                ReplayPolicy::Strict => {
                    Err(PetriError::UnknownLabelPolicyViolation(label.to_owned()))
                }
                ReplayPolicy::Lenient => {
                    self.skipped_events += 1;
                    Ok(StepOutcome {
                        entered: Vec::new(),
                        fired: false,
                        forced: false,
                    })
                }
            };
        }

        let mut entered = Vec::new();

        // Directly enabled candidate, smallest id first.
        if let Some(&t) = candidates.iter().find(|&&t| self.net.is_enabled(&self.marking, t)) {
            self.fire_recording(t, &mut entered);
            return Ok(StepOutcome {
                entered,
                fired: true,
                forced: false,
            });
        }

        // Shortest silent enabling path over all candidates; ties fall to the
        // smaller transition id because candidates are scanned in id order.
        let mut best: Option<(usize, TransitionId, Vec<TransitionId>)> = None;
        for &t in &candidates {
            if let Some(path) = self.net.silent_enabling_path(&self.marking, t) {
                let better = match &best {
                    Some((len, _, _)) => path.len() < *len,
                    None => true,
                };
                if better {
                    best = Some((path.len(), t, path));
                }
            }
        }
        if let Some((_, t, path)) = best {
            for s in path {
                self.fire_recording(s, &mut entered);
            }
            self.fire_recording(t, &mut entered);
            return Ok(StepOutcome {
                entered,
                fired: true,
                forced: false,
            });
        }

        // Force-fire: insert the missing input tokens for the first candidate.
        let t = candidates[0];
        let mut inserted = 0u32;
        for p in &self.net.transitions[t.0].inputs {
            if self.marking.0[p.0] == 0 {
                self.marking.0[p.0] = 1;
                inserted += 1;
            }
        }
        self.forced_firings += 1;
        self.missing_tokens += inserted as usize;
        self.fire_recording(t, &mut entered);
        Ok(StepOutcome {
            entered,
            fired: true,
            forced: true,
        })
    }

    /// Try to reach the final marking by firing silent transitions only.
    pub fn complete(&mut self) -> StepOutcome {
        let mut entered = Vec::new();
        if self.marking != self.net.final_marking {
            if let Some(path) = self.net.silent_path_to(&self.marking, &self.net.final_marking) {
                for t in path {
                    self.fire_recording(t, &mut entered);
                }
            }
        }
        StepOutcome {
            entered,
            fired: false,
            forced: false,
        }
    }

    pub fn into_result(self) -> ReplayResult {
        ReplayResult {
            final_marking: self.marking,
            forced_firings: self.forced_firings,
            missing_tokens: self.missing_tokens,
            produced_per_place: self.produced,
            skipped_events: self.skipped_events,
        }
    }
}

/// Replay a trace leniently (unknown labels skipped and counted).
pub fn replay_trace(net: &PetriNet, trace: &Trace) -> Result<ReplayResult, PetriError> {
    replay_trace_with(net, trace, ReplayPolicy::Lenient)
}

pub fn replay_trace_with(
    net: &PetriNet,
    trace: &Trace,
    policy: ReplayPolicy,
) -> Result<ReplayResult, PetriError> {
    let mut replayer = Replayer::new(net, policy);
    for event in &trace.events {
        replayer.step(&event.label)?;
    }
    replayer.complete();
    Ok(replayer.into_result())
}

// --- JSON / DOT serialization ------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PlaceJson {
    id: String,
    name: String,
}

#[derive(Serialize, Deserialize)]
struct TransitionJson {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    silent: bool,
}

#[derive(Serialize, Deserialize)]
struct ArcJson {
    from: String,
    to: String,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    places: Vec<PlaceJson>,
    transitions: Vec<TransitionJson>,
    arcs: Vec<ArcJson>,
    initial_marking: BTreeMap<String, u32>,
    final_marking: BTreeMap<String, u32>,
}

impl PetriNet {
    pub fn to_json(&self) -> serde_json::Value {
        let places = self
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| PlaceJson {
                id: format!("p{i}"),
                name: p.name.clone(),
            })
            .collect();
        let transitions = self
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| TransitionJson {
                id: format!("t{i}"),
                label: t.label.clone(),
                silent: t.label.is_none(),
            })
            .collect();
        let arcs = self
            .arcs()
            .into_iter()
            .map(|(from, to)| ArcJson { from, to })
            .collect();
        let marking_map = |m: &Marking| {
            m.0.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (format!("p{i}"), c))
                .collect::<BTreeMap<_, _>>()
        };
        serde_json::to_value(NetJson {
            places,
            transitions,
            arcs,
            initial_marking: marking_map(&self.initial_marking),
            final_marking: marking_map(&self.final_marking),
        })
        .expect("net serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<PetriNet, PetriError> {
        let parsed: NetJson = serde_json::from_value(value.clone())
            .map_err(|e| PetriError::BadJson(e.to_string()))?;
        let parse_id = |id: &str, prefix: char| -> Result<usize, PetriError> {
            id.strip_prefix(prefix)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| PetriError::BadJson(format!("bad node id {id:?}")))
        };
        let mut place_index = BTreeMap::new();
        for (i, p) in parsed.places.iter().enumerate() {
            if parse_id(&p.id, 'p')? != i {
                return Err(PetriError::BadJson("places must be listed in id order".into()));
            }
            place_index.insert(p.id.clone(), i);
        }
        let mut builder = PetriNetBuilder::new();
        for p in &parsed.places {
            builder.add_place(p.name.clone());
        }
        let mut inputs: Vec<Vec<PlaceId>> = vec![Vec::new(); parsed.transitions.len()];
        let mut outputs: Vec<Vec<PlaceId>> = vec![Vec::new(); parsed.transitions.len()];
        for arc in &parsed.arcs {
            if arc.from.starts_with('p') {
                let p = parse_id(&arc.from, 'p')?;
                let t = parse_id(&arc.to, 't')?;
                if t >= parsed.transitions.len() || p >= parsed.places.len() {
                    return Err(PetriError::BadJson(format!("arc references unknown node: {} -> {}", arc.from, arc.to)));
                }
                inputs[t].push(PlaceId(p));
            } else {
                let t = parse_id(&arc.from, 't')?;
                let p = parse_id(&arc.to, 'p')?;
                if t >= parsed.transitions.len() || p >= parsed.places.len() {
                    return Err(PetriError::BadJson(format!("arc references unknown node: {} -> {}", arc.from, arc.to)));
                }
                outputs[t].push(PlaceId(p));
            }
        }
        for (i, t) in parsed.transitions.iter().enumerate() {
            if parse_id(&t.id, 't')? != i {
                return Err(PetriError::BadJson("transitions must be listed in id order".into()));
            }
            let label = if t.silent { None } else { t.label.clone() };
            if !t.silent && label.is_none() {
                return Err(PetriError::BadJson(format!("transition {} has neither label nor silent flag", t.id)));
            }
            builder.add_transition(label.as_deref(), inputs[i].clone(), outputs[i].clone());
        }
        for (id, count) in &parsed.initial_marking {
            let p = *place_index
                .get(id)
                .ok_or_else(|| PetriError::BadJson(format!("initial marking references {id:?}")))?;
            builder.mark_initial(PlaceId(p), *count);
        }
        for (id, count) in &parsed.final_marking {
            let p = *place_index
                .get(id)
                .ok_or_else(|| PetriError::BadJson(format!("final marking references {id:?}")))?;
            builder.mark_final(PlaceId(p), *count);
        }
        builder.build()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph petri_net {\n  rankdir=LR;\n");
        for (i, p) in self.places.iter().enumerate() {
            let deco = if self.initial_marking.0[i] > 0 {
                ", style=filled, fillcolor=lightgrey"
            } else {
                ""
            };
            out.push_str(&format!(
                "  p{i} [shape=circle, label=\"{}\"{}];\n",
                p.name, deco
            ));
        }
        for (i, t) in self.transitions.iter().enumerate() {
            match &t.label {
                Some(l) => out.push_str(&format!("  t{i} [shape=box, label=\"{l}\"];\n")),
                None => out.push_str(&format!(
                    "  t{i} [shape=box, label=\"\", style=filled, fillcolor=black, height=0.1];\n"
                )),
            }
        }
        for (from, to) in self.arcs() {
            out.push_str(&format!("  {from} -> {to};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Three-activity chain used across tests: source -> a -> b -> c -> sink.
pub fn sequential_net(labels: &[&str]) -> PetriNet {
    let mut b = PetriNetBuilder::new();
    let mut prev = b.add_place("source");
    b.mark_initial(prev, 1);
    for (i, label) in labels.iter().enumerate() {
        let next = if i + 1 == labels.len() {
            b.add_place("sink")
        } else {
            b.add_place(format!("p{}", i + 1))
        };
        b.add_transition(Some(label), vec![prev], vec![next]);
        prev = next;
    }
    b.mark_final(prev, 1);
    b.build().expect("chain net is valid")
}

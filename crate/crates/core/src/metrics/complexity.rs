//! Structural complexity of a net: size, control-flow complexity, and a
//! split/join matching defect count.
//!
//! Gateways are read off the net structure: a place with two or more
//! consuming transitions is an XOR-split (its fan-out adds to CFC), a
//! transition with two or more output places is an AND-split (adds 1), and
//! joins are the mirrored in-degree patterns. Structuredness is reported as
//! the number of splits in excess of joins of the same type, so 0 means every
//! split can be paired with a matching join.

use crate::petri::PetriNet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Complexity {
    /// Places + transitions + arcs.
    pub size: usize,
    pub cfc: usize,
    pub structuredness: usize,
}

pub fn complexity(net: &PetriNet) -> Complexity {
    let n_places = net.places().len();
    let mut place_out = vec![0usize; n_places];
    let mut place_in = vec![0usize; n_places];
    let mut and_splits = 0usize;
    let mut and_joins = 0usize;
    for t in net.transitions() {
        for p in &t.inputs {
            place_out[p.0] += 1;
        }
        for p in &t.outputs {
            place_in[p.0] += 1;
        }
        if t.outputs.len() >= 2 {
            and_splits += 1;
        }
        if t.inputs.len() >= 2 {
            and_joins += 1;
        }
    }
    let xor_splits = place_out.iter().filter(|&&d| d >= 2).count();
    let xor_joins = place_in.iter().filter(|&&d| d >= 2).count();
    let cfc: usize = place_out.iter().filter(|&&d| d >= 2).sum::<usize>() + and_splits;

    Complexity {
        size: n_places + net.transitions().len() + net.arc_count(),
        cfc,
        structuredness: xor_splits.saturating_sub(xor_joins) + and_splits.saturating_sub(and_joins),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::{sequential_net, PetriNetBuilder};

    #[test]
    fn sequential_three_activity_net() {
        let net = sequential_net(&["a", "b", "c"]);
        let cx = complexity(&net);
        assert_eq!(cx.size, 4 + 3 + 6);
        assert_eq!(cx.cfc, 0);
        assert_eq!(cx.structuredness, 0);
    }

    #[test]
    fn xor_split_with_matching_join() {
        let mut b = PetriNetBuilder::new();
        let src = b.add_place("source");
        let split = b.add_place("split");
        let join = b.add_place("join");
        let sink = b.add_place("sink");
        b.add_transition(Some("a"), vec![src], vec![split]);
        b.add_transition(Some("b"), vec![split], vec![join]);
        b.add_transition(Some("c"), vec![split], vec![join]);
        b.add_transition(Some("d"), vec![join], vec![sink]);
        b.mark_initial(src, 1);
        b.mark_final(sink, 1);
        let cx = complexity(&b.build().unwrap());
        assert_eq!(cx.cfc, 2);
        assert_eq!(cx.structuredness, 0);
    }

    #[test]
    fn split_without_join_counts_as_defect() {
        // split place feeding two transitions that never reconverge
        let mut b = PetriNetBuilder::new();
        let split = b.add_place("split");
        let out1 = b.add_place("out1");
        let out2 = b.add_place("out2");
        b.add_transition(Some("a"), vec![split], vec![out1]);
        b.add_transition(Some("b"), vec![split], vec![out2]);
        b.mark_initial(split, 1);
        b.mark_final(out1, 1);
        let cx = complexity(&b.build().unwrap());
        assert!(cx.structuredness >= 1);
    }

    #[test]
    fn and_block_is_structured() {
        let mut b = PetriNetBuilder::new();
        let src = b.add_place("source");
        let p1 = b.add_place("p1");
        let p2 = b.add_place("p2");
        let q1 = b.add_place("q1");
        let q2 = b.add_place("q2");
        let sink = b.add_place("sink");
        b.add_transition(None, vec![src], vec![p1, p2]);
        b.add_transition(Some("a"), vec![p1], vec![q1]);
        b.add_transition(Some("b"), vec![p2], vec![q2]);
        b.add_transition(None, vec![q1, q2], vec![sink]);
        b.mark_initial(src, 1);
        b.mark_final(sink, 1);
        let cx = complexity(&b.build().unwrap());
        assert_eq!(cx.cfc, 1);
        assert_eq!(cx.structuredness, 0);
    }

    #[test]
    fn invariant_under_renaming() {
        let n1 = sequential_net(&["a", "b"]);
        let n2 = sequential_net(&["x", "y"]);
        assert_eq!(complexity(&n1), complexity(&n2));
    }
}

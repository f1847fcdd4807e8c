//! Seeded generator for tiny verification instances.
//!
//! Used by the unit and acceptance suites to drive the exhaustive oracle:
//! at most a handful of students and classes, seat bounds small enough to
//! enumerate, lower bounds in {0, 1}. Hidden from docs but shipped so the
//! acceptance tests and the library exercise identical corpora.

use crate::flow::FlowNetwork;
use crate::model::Instance;
use crate::rng::Xoshiro256StarStar;

/// Random instance with `2..=max_students` students and `2..=max_classes`
/// active classes (upper bounds 1..=3, lower bounds 0 or 1), sometimes one
/// canceled class mixed into the preference lists. Total capacity is topped
/// up until every student fits, and lower bounds are trimmed until they are
/// coverable, so the instance always admits a matching.
pub fn random_tiny_instance(
    rng: &mut Xoshiro256StarStar,
    max_students: usize,
    max_classes: usize,
) -> Instance {
    let students = 2 + rng.bounded(max_students as u64 - 1) as usize;
    let active = 2 + rng.bounded(max_classes as u64 - 1) as usize;
    let with_canceled = rng.bounded(4) == 0;
    let total_classes = active + usize::from(with_canceled);
    let k = 3 + rng.bounded(3) as usize; // 3..=5 ranks

    let mut lowers: Vec<u32> = (0..active).map(|_| rng.bounded(2) as u32).collect();
    let mut uppers: Vec<u32> = (0..active).map(|_| 1 + rng.bounded(3) as u32).collect();
    let mut i = 0;
    while uppers.iter().sum::<u32>() < students as u32 {
        uppers[i % active] += 1;
        i += 1;
    }
    let mut i = 0;
    while lowers.iter().sum::<u32>() > students as u32 {
        lowers[i % active] = 0;
        i += 1;
    }

    let mut builder = Instance::builder(k);
    for c in 0..active {
        builder = builder.class(format!("c{c}"), lowers[c], uppers[c]);
    }
    if with_canceled {
        builder = builder.canceled_class(format!("c{active}"), 0, 3);
    }
    for s in 0..students {
        let len = 1 + rng.bounded(k.min(total_classes) as u64) as usize;
        let mut pool: Vec<usize> = (0..total_classes).collect();
        crate::rng::shuffle(&mut pool, rng);
        let choices: Vec<String> = pool[..len].iter().map(|c| format!("c{c}")).collect();
        builder = builder.student(format!("s{s}"), choices);
    }
    builder.build().expect("generated instance is valid")
}

/// Random raw flow network: up to 6 nodes with balanced supplies in
/// -2..=2, up to 10 arcs with capacities 0..=3 and costs in -10..=10.
/// Feasibility is not guaranteed.
pub fn random_flow_network(rng: &mut Xoshiro256StarStar) -> FlowNetwork {
    let nodes = 2 + rng.bounded(5) as usize;
    let arcs = 1 + rng.bounded(10) as usize;
    let mut network = FlowNetwork::new();
    let mut remaining = 0i64;
    for v in 0..nodes {
        let supply = if v == nodes - 1 {
            -remaining
        } else {
            let s = rng.bounded(5) as i64 - 2;
            remaining += s;
            s
        };
        network.add_node(supply);
    }
    for _ in 0..arcs {
        let from = rng.bounded(nodes as u64) as usize;
        let to = rng.bounded(nodes as u64) as usize;
        let capacity = rng.bounded(4) as i64;
        let cost = rng.bounded(21) as i64 - 10;
        network.add_arc(from, to, capacity, cost);
    }
    network
}

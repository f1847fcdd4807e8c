//! Student-proposing deferred acceptance and the Boston mechanism, both
//! under single tie-breaking, plus stability checking.
//!
//! Classes have no preferences of their own, so a single random permutation
//! of the students (drawn from the pinned generator in [`crate::rng`])
//! serves as every class's priority order. Both mechanisms ignore lower
//! bounds entirely; students left unplaced after a run are swept into the
//! emptiest classes by [`leftover_fill`] and report as "others".

use crate::model::{Instance, Matching, MatchingKind};
use crate::rng::{shuffle, Xoshiro256StarStar};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MechanismError {
    #[error(
        "not enough seats: {students} students but only {total_upper} seats in active classes"
    )]
    CapacityMismatch { students: usize, total_upper: u64 },
}

/// A strict priority ranking over students; earlier = higher priority.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityOrder {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl PriorityOrder {
    pub fn new(order: Vec<usize>) -> Self {
        let mut position = vec![usize::MAX; order.len()];
        for (pos, &s) in order.iter().enumerate() {
            assert!(
                position[s] == usize::MAX,
                "priority order must be a permutation"
            );
            position[s] = pos;
        }
        PriorityOrder { order, position }
    }

    /// Student indices from highest to lowest priority.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Priority position of student `s` (0 = highest).
    pub fn position(&self, s: usize) -> usize {
        self.position[s]
    }
}

/// Single tie-breaking: shuffle the student list with the pinned generator
/// and read it as a priority ranking. Same seed, same order, anywhere.
pub fn single_tie_break(instance: &Instance, seed: u64) -> PriorityOrder {
    let mut order: Vec<usize> = (0..instance.num_students()).collect();
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    shuffle(&mut order, &mut rng);
    PriorityOrder::new(order)
}

/// Outcome of a mechanism run: the pre-fill placement (students may be
/// unplaced), the total matching after [`leftover_fill`], and the students
/// the fill placed.
#[derive(Clone, Debug)]
pub struct MechanismOutcome {
    pub prefill: Vec<Option<usize>>,
    pub matching: Matching,
    pub filled: Vec<usize>,
}

fn ensure_fillable(instance: &Instance) -> Result<(), MechanismError> {
    let total_upper = instance.total_upper();
    if (instance.num_students() as u64) > total_upper {
        return Err(MechanismError::CapacityMismatch {
            students: instance.num_students(),
            total_upper,
        });
    }
    Ok(())
}

/// The proposal worklist discipline. The stable outcome is the same either
/// way (asserted in tests); this only exists to demonstrate that.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Discipline {
    Lifo,
    #[allow(dead_code)] // exercised by the order-independence test
    Fifo,
}

fn da_prefill(
    instance: &Instance,
    priority: &PriorityOrder,
    discipline: Discipline,
) -> Vec<Option<usize>> {
    let students = instance.num_students();
    // next_choice[s]: index into s's list of the next class to propose to.
    let mut next_choice = vec![0usize; students];
    let mut placed: Vec<Option<usize>> = vec![None; students];
    // Tentative admits per class, sorted by priority position.
    let mut admitted: Vec<Vec<usize>> = vec![Vec::new(); instance.num_classes()];
    let mut pending: VecDeque<usize> = (0..students).collect();

    while let Some(s) = match discipline {
        Discipline::Lifo => pending.pop_back(),
        Discipline::Fifo => pending.pop_front(),
    } {
        debug_assert!(placed[s].is_none());
        while let Some(&c) = instance.preference(s).get(next_choice[s]) {
            next_choice[s] += 1;
            let info = instance.class(c);
            if !info.active || info.upper == 0 {
                continue;
            }
            let pos = priority.position(s);
            let slot = admitted[c]
                .binary_search_by_key(&pos, |&x| priority.position(x))
                .unwrap_err();
            admitted[c].insert(slot, s);
            if admitted[c].len() > info.upper as usize {
                let bumped = admitted[c].pop().expect("class was over capacity");
                if bumped == s {
                    continue; // rejected outright, move down the list
                }
                placed[bumped] = None;
                placed[s] = Some(c);
                pending.push_back(bumped);
            } else {
                placed[s] = Some(c);
            }
            break;
        }
    }
    placed
}

/// Student-proposing deferred acceptance under one shared priority order,
/// upper bounds only. The pre-fill placement is stable (see
/// [`check_stability`]); the returned matching is total after the fill.
pub fn deferred_acceptance(
    instance: &Instance,
    priority: &PriorityOrder,
) -> Result<MechanismOutcome, MechanismError> {
    ensure_fillable(instance)?;
    let prefill = da_prefill(instance, priority, Discipline::Lifo);
    let (matching, filled) = leftover_fill(instance, &prefill, priority)?;
    Ok(MechanismOutcome {
        prefill,
        matching,
        filled,
    })
}

/// Round-by-round immediate acceptance: in round `i`, every still-unplaced
/// student applies to their i-th choice and classes admit applicants in
/// priority order up to remaining capacity. Admissions are final.
pub fn boston(
    instance: &Instance,
    priority: &PriorityOrder,
) -> Result<MechanismOutcome, MechanismError> {
    ensure_fillable(instance)?;
    let students = instance.num_students();
    let mut placed: Vec<Option<usize>> = vec![None; students];
    let mut remaining: Vec<i64> = instance
        .classes()
        .iter()
        .map(|c| if c.active { c.upper as i64 } else { 0 })
        .collect();

    for round in 0..instance.k() {
        let mut applicants: Vec<Vec<usize>> = vec![Vec::new(); instance.num_classes()];
        for &s in priority.order() {
            if placed[s].is_none() {
                if let Some(&c) = instance.preference(s).get(round) {
                    applicants[c].push(s);
                }
            }
        }
        for (c, queue) in applicants.iter().enumerate() {
            for &s in queue {
                if remaining[c] > 0 {
                    remaining[c] -= 1;
                    placed[s] = Some(c);
                }
            }
        }
    }

    let (matching, filled) = leftover_fill(instance, &placed, priority)?;
    Ok(MechanismOutcome {
        prefill: placed,
        matching,
        filled,
    })
}

/// Place every unplaced student, in priority order, into the active class
/// with the most remaining seats (ties broken by the lower class index).
/// Errors if active seats cannot hold the whole student body.
pub fn leftover_fill(
    instance: &Instance,
    prefill: &[Option<usize>],
    priority: &PriorityOrder,
) -> Result<(Matching, Vec<usize>), MechanismError> {
    ensure_fillable(instance)?;
    let mut remaining: Vec<i64> = instance
        .classes()
        .iter()
        .map(|c| if c.active { c.upper as i64 } else { 0 })
        .collect();
    for c in prefill.iter().flatten() {
        remaining[*c] -= 1;
        assert!(remaining[*c] >= 0, "prefill exceeds a class capacity");
    }
    let mut assigned: Vec<usize> = vec![usize::MAX; prefill.len()];
    for (s, c) in prefill.iter().enumerate() {
        if let Some(c) = c {
            assigned[s] = *c;
        }
    }
    let mut filled = Vec::new();
    for &s in priority.order() {
        if assigned[s] != usize::MAX {
            continue;
        }
        let (c, _) = remaining
            .iter()
            .enumerate()
            .max_by_key(|&(c, &r)| (r, std::cmp::Reverse(c)))
            .expect("instance has classes");
        remaining[c] -= 1;
        assigned[s] = c;
        filled.push(s);
    }
    let matching = Matching::new_checked(instance, assigned, MatchingKind::UpperOnly)
        .expect("fill respects upper bounds");
    Ok((matching, filled))
}

/// Every blocking pair of an upper-only placement: student `s` and class
/// `c` block when `s` ranks `c` above their current outcome (any ranked
/// class beats being unplaced or placed outside the list) and `c` either
/// has a free seat or admits a student with lower priority than `s`.
/// An empty result means the placement is stable.
pub fn check_stability(
    instance: &Instance,
    placement: &[Option<usize>],
    priority: &PriorityOrder,
) -> Vec<(usize, usize)> {
    let mut sizes = vec![0usize; instance.num_classes()];
    // Lowest-priority admit per class, as a priority position.
    let mut worst_pos = vec![0usize; instance.num_classes()];
    for (s, c) in placement.iter().enumerate() {
        if let Some(c) = *c {
            sizes[c] += 1;
            worst_pos[c] = worst_pos[c].max(priority.position(s));
        }
    }
    let mut blocking = Vec::new();
    for (s, current) in placement.iter().enumerate() {
        let current_rank = current
            .and_then(|c| instance.rank_of(s, c))
            .unwrap_or(usize::MAX);
        for &c in instance.preference(s) {
            let info = instance.class(c);
            if !info.active {
                continue;
            }
            let rank = instance.rank_of(s, c).expect("class is in the list");
            if rank >= current_rank {
                continue;
            }
            let free_seat = sizes[c] < info.upper as usize;
            let outranks_someone = sizes[c] > 0 && worst_pos[c] > priority.position(s);
            if free_seat || outranks_someone {
                blocking.push((s, c));
            }
        }
    }
    blocking
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Instance;

    fn identity_priority(instance: &Instance) -> PriorityOrder {
        PriorityOrder::new((0..instance.num_students()).collect())
    }

    #[test]
    fn tie_break_is_deterministic_per_seed() {
        let mut builder = Instance::builder(1).class("c1", 0, 100);
        for i in 0..100 {
            builder = builder.student(format!("s{i:03}"), ["c1"]);
        }
        let instance = builder.build().unwrap();
        let a = single_tie_break(&instance, 42);
        let b = single_tie_break(&instance, 42);
        assert_eq!(a, b);

        let single = Instance::builder(1)
            .class("c1", 0, 1)
            .student("only", ["c1"])
            .build()
            .unwrap();
        for seed in 0..10 {
            assert_eq!(single_tie_break(&single, seed).order(), &[0]);
        }
    }

    #[test]
    fn distinct_first_choices_all_win() {
        let instance = Instance::builder(2)
            .class("c1", 0, 5)
            .class("c2", 0, 5)
            .student("a", ["c1", "c2"])
            .student("b", ["c2", "c1"])
            .build()
            .unwrap();
        for seed in 0..6 {
            let priority = single_tie_break(&instance, seed);
            let da = deferred_acceptance(&instance, &priority).unwrap();
            assert_eq!(da.matching.class_of(0), instance.class_index("c1").unwrap());
            assert_eq!(da.matching.class_of(1), instance.class_index("c2").unwrap());
            assert!(da.filled.is_empty());
            let bo = boston(&instance, &priority).unwrap();
            assert_eq!(bo.matching, da.matching);
        }
    }

    #[test]
    fn single_rejection_fills_the_loser_elsewhere() {
        let instance = Instance::builder(1)
            .class("c1", 0, 1)
            .class("c2", 0, 5)
            .student("a", ["c1"])
            .student("b", ["c1"])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let da = deferred_acceptance(&instance, &priority).unwrap();
        let c1 = instance.class_index("c1").unwrap();
        let c2 = instance.class_index("c2").unwrap();
        assert_eq!(da.prefill, vec![Some(c1), None]);
        assert_eq!(da.matching.class_of(0), c1);
        assert_eq!(da.matching.class_of(1), c2);
        assert_eq!(da.filled, vec![1]);
    }

    #[test]
    fn boston_round_example() {
        // Priority a > b > c; a and b rank (c1, c2); c ranks (c2, c1);
        // one seat each plus an empty c3. Round 1: c1 -> a, c2 -> c.
        // Round 2: b applies to full c2, loses, gets swept into c3.
        let instance = Instance::builder(2)
            .class("c1", 0, 1)
            .class("c2", 0, 1)
            .class("c3", 0, 1)
            .student("a", ["c1", "c2"])
            .student("b", ["c1", "c2"])
            .student("c", ["c2", "c1"])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let outcome = boston(&instance, &priority).unwrap();
        let idx = |id: &str| instance.class_index(id).unwrap();
        assert_eq!(outcome.prefill[0], Some(idx("c1")));
        assert_eq!(outcome.prefill[2], Some(idx("c2")));
        assert_eq!(outcome.prefill[1], None);
        assert_eq!(outcome.matching.class_of(1), idx("c3"));
        assert_eq!(outcome.filled, vec![1]);
    }

    #[test]
    fn boston_differs_from_da_on_priority_inversion() {
        // Under DA, b displaces c from c2 after losing c1; under Boston,
        // c's round-1 admission to c2 is final.
        let instance = Instance::builder(2)
            .class("c1", 0, 1)
            .class("c2", 0, 1)
            .class("c3", 0, 1)
            .student("a", ["c1", "c2"])
            .student("b", ["c1", "c2"])
            .student("c", ["c2", "c1"])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let da = deferred_acceptance(&instance, &priority).unwrap();
        let bo = boston(&instance, &priority).unwrap();
        let idx = |id: &str| instance.class_index(id).unwrap();
        assert_eq!(da.prefill[1], Some(idx("c2")));
        assert_eq!(bo.prefill[1], None);
        // The Boston run admits a lower-priority student over b: a blocking pair.
        assert!(!check_stability(&instance, &bo.prefill, &priority).is_empty());
        assert!(check_stability(&instance, &da.prefill, &priority).is_empty());
    }

    #[test]
    fn student_ranking_only_full_classes_is_swept() {
        let instance = Instance::builder(2)
            .class("c1", 0, 1)
            .class("c2", 0, 3)
            .student("a", ["c1"])
            .student("b", ["c1"])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let outcome = boston(&instance, &priority).unwrap();
        assert_eq!(outcome.filled, vec![1]);
        assert_eq!(
            outcome.matching.class_of(1),
            instance.class_index("c2").unwrap()
        );
    }

    #[test]
    fn fill_prefers_most_residual_then_lowest_index() {
        let instance = Instance::builder(1)
            .class("full", 0, 1)
            .class("mid", 0, 3)
            .class("mid2", 0, 3)
            .student("a", ["full"])
            .student("b", [] as [&str; 0])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let prefill = vec![Some(0), None];
        let (matching, filled) = leftover_fill(&instance, &prefill, &priority).unwrap();
        assert_eq!(filled, vec![1]);
        assert_eq!(matching.class_of(1), instance.class_index("mid").unwrap());
    }

    #[test]
    fn fill_with_no_unplaced_students_is_identity() {
        let instance = Instance::builder(1)
            .class("c1", 0, 2)
            .student("a", ["c1"])
            .student("b", ["c1"])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let prefill = vec![Some(0), Some(0)];
        let (matching, filled) = leftover_fill(&instance, &prefill, &priority).unwrap();
        assert!(filled.is_empty());
        assert_eq!(matching.class_of(0), 0);
        assert_eq!(matching.class_of(1), 0);
    }

    #[test]
    fn fill_reports_capacity_mismatch() {
        let instance = Instance::builder(1)
            .class("c1", 0, 1)
            .canceled_class("c2", 0, 50)
            .student("a", ["c1"])
            .student("b", ["c1"])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let err = deferred_acceptance(&instance, &priority).unwrap_err();
        assert_eq!(
            err,
            MechanismError::CapacityMismatch {
                students: 2,
                total_upper: 1
            }
        );
    }

    #[test]
    fn stability_flags_empty_better_seat() {
        let instance = Instance::builder(2)
            .class("c1", 0, 1)
            .class("c2", 0, 1)
            .student("a", ["c1", "c2"])
            .build()
            .unwrap();
        let priority = identity_priority(&instance);
        let placement = vec![Some(instance.class_index("c2").unwrap())];
        let pairs = check_stability(&instance, &placement, &priority);
        assert_eq!(pairs, vec![(0, instance.class_index("c1").unwrap())]);
    }

    #[test]
    fn da_prefill_is_order_independent() {
        let mut rng = crate::rng::Xoshiro256StarStar::seed_from_u64(2024);
        for trial in 0..120 {
            let instance = crate::testgen::random_tiny_instance(&mut rng, 6, 3);
            let priority = single_tie_break(&instance, trial);
            let lifo = da_prefill(&instance, &priority, Discipline::Lifo);
            let fifo = da_prefill(&instance, &priority, Discipline::Fifo);
            assert_eq!(lifo, fifo);
        }
    }

    #[test]
    fn da_prefill_has_no_blocking_pairs() {
        let mut rng = crate::rng::Xoshiro256StarStar::seed_from_u64(7777);
        for trial in 0..200 {
            let instance = crate::testgen::random_tiny_instance(&mut rng, 8, 4);
            let priority = single_tie_break(&instance, trial);
            let outcome = deferred_acceptance(&instance, &priority);
            let Ok(outcome) = outcome else {
                continue; // not enough seats; nothing to check
            };
            assert!(
                check_stability(&instance, &outcome.prefill, &priority).is_empty(),
                "blocking pair in {instance:?}"
            );
        }
    }

    #[test]
    fn boston_round_one_admits_priority_top_applicants() {
        let mut rng = crate::rng::Xoshiro256StarStar::seed_from_u64(555);
        for trial in 0..100 {
            let instance = crate::testgen::random_tiny_instance(&mut rng, 7, 3);
            let priority = single_tie_break(&instance, trial);
            let Ok(outcome) = boston(&instance, &priority) else {
                continue;
            };
            for (c, info) in instance.active_classes() {
                let applicants: Vec<usize> = priority
                    .order()
                    .iter()
                    .copied()
                    .filter(|&s| instance.preference(s).first() == Some(&c))
                    .collect();
                let expected: Vec<usize> = applicants
                    .iter()
                    .copied()
                    .take(info.upper as usize)
                    .collect();
                for &s in &expected {
                    assert_eq!(outcome.prefill[s], Some(c));
                }
                for &s in applicants.iter().skip(info.upper as usize) {
                    assert_ne!(outcome.prefill[s], Some(c));
                }
            }
        }
    }

    #[test]
    fn mechanisms_ignore_lower_bounds() {
        // Two generously-sized classes with lower bounds; everyone wants c1,
        // so c2 stays under its lower bound in both mechanisms.
        let mut builder = Instance::builder(2).class("c1", 7, 20).class("c2", 7, 20);
        for i in 0..20 {
            builder = builder.student(format!("s{i:02}"), ["c1", "c2"]);
        }
        let instance = builder.build().unwrap();
        let priority = single_tie_break(&instance, 9);
        for matching in [
            deferred_acceptance(&instance, &priority).unwrap().matching,
            boston(&instance, &priority).unwrap().matching,
        ] {
            let sizes = matching.class_sizes(&instance);
            let c2 = instance.class_index("c2").unwrap();
            assert!(sizes[c2] < 7, "expected an under-filled class");
        }
    }
}

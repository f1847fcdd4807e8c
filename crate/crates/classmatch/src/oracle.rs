//! Exhaustive ground-truth solvers for tiny instances.
//!
//! Everything here is deliberately brute force: enumerate the whole search
//! space and scan it. The solvers in [`crate::assign`] and
//! [`crate::mechanisms`] are checked against these enumerations in tests and
//! in the `verify` CLI command, so this module ships with the library
//! instead of living in test code.

use crate::mechanisms::{check_stability, PriorityOrder};
use crate::model::{Instance, Matching, MatchingKind, UtilityVector};
use thiserror::Error;

/// Hard ceiling on the number of enumerated assignments.
pub const ENUMERATION_GUARD: u64 = 10_000_000;
/// Hard ceiling on the number of students.
pub const STUDENT_GUARD: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large to enumerate: {assignments} assignments for {students} students (limits: {max_assignments}, {max_students})")]
    TooLarge {
        students: usize,
        assignments: u64,
        max_assignments: u64,
        max_students: usize,
    },
}

fn enumeration_size(options_per_student: usize, students: usize) -> u64 {
    let mut total: u64 = 1;
    for _ in 0..students {
        total = match total.checked_mul(options_per_student as u64) {
            Some(t) if t <= ENUMERATION_GUARD => t,
            _ => return u64::MAX,
        };
    }
    total
}

fn guard(options_per_student: usize, students: usize) -> Result<(), OracleError> {
    let assignments = enumeration_size(options_per_student, students);
    if students > STUDENT_GUARD || assignments > ENUMERATION_GUARD {
        return Err(OracleError::TooLarge {
            students,
            assignments,
            max_assignments: ENUMERATION_GUARD,
            max_students: STUDENT_GUARD,
        });
    }
    Ok(())
}

/// Visit every capacity-respecting total assignment (lower and upper bounds
/// of all active classes honored), in lexicographic order of the assignment
/// vector over active-class indices.
pub fn enumerate_matchings(
    instance: &Instance,
    mut visit: impl FnMut(&[usize]),
) -> Result<(), OracleError> {
    let active: Vec<usize> = instance.active_classes().map(|(c, _)| c).collect();
    guard(active.len(), instance.num_students())?;

    let students = instance.num_students();
    let mut sizes = vec![0usize; instance.num_classes()];
    let mut assigned = vec![0usize; students];

    fn lower_deficit(instance: &Instance, sizes: &[usize], active: &[usize]) -> usize {
        active
            .iter()
            .map(|&c| (instance.class(c).lower as usize).saturating_sub(sizes[c]))
            .sum()
    }

    fn recurse(
        instance: &Instance,
        active: &[usize],
        s: usize,
        sizes: &mut Vec<usize>,
        assigned: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        let students = instance.num_students();
        // Remaining students must be able to cover all remaining lower bounds.
        if lower_deficit(instance, sizes, active) > students - s {
            return;
        }
        if s == students {
            visit(assigned);
            return;
        }
        for &c in active {
            if sizes[c] < instance.class(c).upper as usize {
                sizes[c] += 1;
                assigned[s] = c;
                recurse(instance, active, s + 1, sizes, assigned, visit);
                sizes[c] -= 1;
            }
        }
    }

    recurse(instance, &active, 0, &mut sizes, &mut assigned, &mut visit);
    Ok(())
}

/// Exact maximum of total utility over all capacity-respecting matchings,
/// together with every matching attaining it. `None` if no feasible
/// matching exists.
pub fn oracle_optimum(
    instance: &Instance,
    p: &UtilityVector,
) -> Result<Option<(i64, Vec<Matching>)>, OracleError> {
    let mut best: Option<i64> = None;
    let mut argmax: Vec<Vec<usize>> = Vec::new();
    enumerate_matchings(instance, |assigned| {
        let total: i64 = assigned
            .iter()
            .enumerate()
            .map(|(s, &c)| p.utility_of(instance, s, c))
            .sum();
        match best {
            Some(b) if total < b => {}
            Some(b) if total == b => argmax.push(assigned.to_vec()),
            _ => {
                best = Some(total);
                argmax = vec![assigned.to_vec()];
            }
        }
    })?;
    Ok(best.map(|b| {
        let matchings = argmax
            .into_iter()
            .map(|assigned| {
                Matching::new_checked(instance, assigned, MatchingKind::CapacityRespecting)
                    .expect("enumerated matchings are capacity-respecting")
            })
            .collect();
        (b, matchings)
    }))
}

/// All stable placements under the mechanism view: each student holds one
/// of their ranked active classes or stays unplaced, upper bounds hold, and
/// no blocking pair exists. Also identifies the student-optimal element if
/// one placement is weakly best for every student.
pub struct StableSet {
    pub placements: Vec<Vec<Option<usize>>>,
    pub student_optimal: Option<Vec<Option<usize>>>,
}

pub fn oracle_stable_set(
    instance: &Instance,
    priority: &PriorityOrder,
) -> Result<StableSet, OracleError> {
    let students = instance.num_students();
    let max_options = (0..students)
        .map(|s| {
            1 + instance
                .preference(s)
                .iter()
                .filter(|&&c| instance.class(c).active)
                .count()
        })
        .max()
        .unwrap_or(1);
    guard(max_options, students)?;

    let options: Vec<Vec<Option<usize>>> = (0..students)
        .map(|s| {
            let mut opts: Vec<Option<usize>> = vec![None];
            opts.extend(
                instance
                    .preference(s)
                    .iter()
                    .filter(|&&c| instance.class(c).active)
                    .map(|&c| Some(c)),
            );
            opts
        })
        .collect();

    let mut placements = Vec::new();
    let mut current: Vec<Option<usize>> = vec![None; students];
    let mut cursor = vec![0usize; students];
    loop {
        for s in 0..students {
            current[s] = options[s][cursor[s]];
        }
        let mut sizes = vec![0usize; instance.num_classes()];
        let mut upper_ok = true;
        for c in current.iter().flatten() {
            sizes[*c] += 1;
            if sizes[*c] > instance.class(*c).upper as usize {
                upper_ok = false;
                break;
            }
        }
        if upper_ok && check_stability(instance, &current, priority).is_empty() {
            placements.push(current.clone());
        }
        // Odometer over the option lists.
        let mut s = 0;
        loop {
            if s == students {
                let student_optimal = find_student_optimal(instance, &placements);
                return Ok(StableSet {
                    placements,
                    student_optimal,
                });
            }
            cursor[s] += 1;
            if cursor[s] < options[s].len() {
                break;
            }
            cursor[s] = 0;
            s += 1;
        }
    }
}

fn find_student_optimal(
    instance: &Instance,
    placements: &[Vec<Option<usize>>],
) -> Option<Vec<Option<usize>>> {
    let rank = |s: usize, c: Option<usize>| -> usize {
        match c {
            Some(c) => instance.rank_of(s, c).expect("placed in a ranked class"),
            None => usize::MAX,
        }
    };
    placements
        .iter()
        .find(|candidate| {
            placements.iter().all(|other| {
                (0..instance.num_students()).all(|s| rank(s, candidate[s]) <= rank(s, other[s]))
            })
        })
        .cloned()
}

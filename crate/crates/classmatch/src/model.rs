//! Domain types shared by the whole crate: instances, utility vectors,
//! penalty constants, matchings and rank profiles.
//!
//! An [`Instance`] couples a student body (each student with an ordered
//! preference list over classes) with a class list carrying lower/upper
//! enrollment bounds and an active/canceled flag. Canceled classes stay in
//! the data model — students ranked them before the cancellation and their
//! stated rank positions are kept — but they provide no seats.

use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Opaque student identifier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StudentId(String);

impl StudentId {
    pub fn new(id: impl Into<String>) -> Self {
        StudentId(id.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StudentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Opaque class identifier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(id: impl Into<String>) -> Self {
        ClassId(id.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A class with its enrollment bounds.
///
/// `lower` is the minimum enrollment an active class must reach (7 in the
/// deployments this crate models), `upper` the seat capacity. Inactive
/// (canceled) classes receive no students regardless of their bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassInfo {
    pub id: ClassId,
    pub lower: u32,
    pub upper: u32,
    pub active: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate class id `{0}`")]
    DuplicateClass(String),
    #[error("duplicate student id `{0}`")]
    DuplicateStudent(String),
    #[error("class `{id}` has lower bound {lower} > upper bound {upper}")]
    LowerExceedsUpper { id: String, lower: u32, upper: u32 },
    #[error("student `{student}` ranks unknown class `{class}`")]
    UnknownClass { student: String, class: String },
    #[error("student `{student}` ranks class `{class}` more than once")]
    DuplicateChoice { student: String, class: String },
    #[error("student `{student}` submitted {len} choices but at most {k} are allowed")]
    PreferenceTooLong {
        student: String,
        len: usize,
        k: usize,
    },
    #[error("instance has no active class")]
    NoActiveClass,
    #[error("instance has no students")]
    NoStudents,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("utility vector has {len} ranks but the instance uses k = {k}")]
    KMismatch { len: usize, k: usize },
    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),
    #[error("matching assigns student `{student}` to inactive class `{class}`")]
    InactiveAssigned { student: String, class: String },
    #[error("class `{class}` has {size} students, outside [{lower}, {upper}]")]
    CapacityViolated {
        class: String,
        size: usize,
        lower: u32,
        upper: u32,
    },
}

/// An assignment problem: students with ranked choices, classes with bounds.
///
/// Students and classes are addressed by dense indices internally; the
/// string ids are kept for I/O and reporting. Instances are immutable once
/// built and safe to share across threads.
#[derive(Clone, Debug)]
pub struct Instance {
    students: Vec<StudentId>,
    groups: Vec<Option<String>>,
    classes: Vec<ClassInfo>,
    /// Per student, the ranked class indices (position 0 = first choice).
    prefs: Vec<Vec<usize>>,
    k: usize,
    student_lookup: HashMap<String, usize>,
    class_lookup: HashMap<String, usize>,
}

impl Instance {
    pub fn builder(k: usize) -> InstanceBuilder {
        InstanceBuilder {
            k,
            classes: Vec::new(),
            students: Vec::new(),
        }
    }

    pub fn num_students(&self) -> usize {
        self.students.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Number of ranks a student may submit.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn students(&self) -> &[StudentId] {
        &self.students
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn class(&self, c: usize) -> &ClassInfo {
        &self.classes[c]
    }

    pub fn group(&self, s: usize) -> Option<&str> {
        self.groups[s].as_deref()
    }

    /// Ranked class indices of student `s`, first choice first.
    pub fn preference(&self, s: usize) -> &[usize] {
        &self.prefs[s]
    }

    /// 1-based rank of class `c` in student `s`'s list, `None` if unranked.
    /// Canceled classes keep their submitted rank position.
    pub fn rank_of(&self, s: usize, c: usize) -> Option<usize> {
        self.prefs[s].iter().position(|&x| x == c).map(|i| i + 1)
    }

    pub fn student_index(&self, id: &str) -> Option<usize> {
        self.student_lookup.get(id).copied()
    }

    pub fn class_index(&self, id: &str) -> Option<usize> {
        self.class_lookup.get(id).copied()
    }

    pub fn active_classes(&self) -> impl Iterator<Item = (usize, &ClassInfo)> {
        self.classes.iter().enumerate().filter(|(_, c)| c.active)
    }

    /// Sum of lower bounds over active classes.
    pub fn total_lower(&self) -> u64 {
        self.active_classes().map(|(_, c)| c.lower as u64).sum()
    }

    /// Sum of capacities over active classes.
    pub fn total_upper(&self) -> u64 {
        self.active_classes().map(|(_, c)| c.upper as u64).sum()
    }

    pub fn has_groups(&self) -> bool {
        self.groups.iter().any(|g| g.is_some())
    }
}

pub struct InstanceBuilder {
    k: usize,
    classes: Vec<ClassInfo>,
    students: Vec<(String, Option<String>, Vec<String>)>,
}

impl InstanceBuilder {
    /// Add an active class.
    pub fn class(self, id: impl Into<String>, lower: u32, upper: u32) -> Self {
        self.push_class(id.into(), lower, upper, true)
    }

    /// Add a canceled class. It may still appear in preference lists.
    pub fn canceled_class(self, id: impl Into<String>, lower: u32, upper: u32) -> Self {
        self.push_class(id.into(), lower, upper, false)
    }

    fn push_class(mut self, id: String, lower: u32, upper: u32, active: bool) -> Self {
        self.classes.push(ClassInfo {
            id: ClassId::new(id),
            lower,
            upper,
            active,
        });
        self
    }

    pub fn student<I, S>(self, id: impl Into<String>, choices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.push_student(id.into(), None, choices)
    }

    pub fn student_in_group<I, S>(
        self,
        id: impl Into<String>,
        group: impl Into<String>,
        choices: I,
    ) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.push_student(id.into(), Some(group.into()), choices)
    }

    fn push_student<I, S>(mut self, id: String, group: Option<String>, choices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.students
            .push((id, group, choices.into_iter().map(Into::into).collect()));
        self
    }

    pub fn build(self) -> Result<Instance, ModelError> {
        if self.k == 0 {
            return Err(ModelError::ZeroK);
        }
        if self.students.is_empty() {
            return Err(ModelError::NoStudents);
        }
        let mut class_lookup = HashMap::new();
        for (i, c) in self.classes.iter().enumerate() {
            if c.lower > c.upper {
                return Err(ModelError::LowerExceedsUpper {
                    id: c.id.as_str().to_owned(),
                    lower: c.lower,
                    upper: c.upper,
                });
            }
            if class_lookup.insert(c.id.as_str().to_owned(), i).is_some() {
                return Err(ModelError::DuplicateClass(c.id.as_str().to_owned()));
            }
        }
        if !self.classes.iter().any(|c| c.active) {
            return Err(ModelError::NoActiveClass);
        }

        let mut students = Vec::with_capacity(self.students.len());
        let mut groups = Vec::with_capacity(self.students.len());
        let mut prefs = Vec::with_capacity(self.students.len());
        let mut student_lookup = HashMap::new();
        for (i, (id, group, choices)) in self.students.into_iter().enumerate() {
            if student_lookup.insert(id.clone(), i).is_some() {
                return Err(ModelError::DuplicateStudent(id));
            }
            if choices.len() > self.k {
                return Err(ModelError::PreferenceTooLong {
                    student: id,
                    len: choices.len(),
                    k: self.k,
                });
            }
            let mut list = Vec::with_capacity(choices.len());
            for choice in &choices {
                let c =
                    *class_lookup
                        .get(choice.as_str())
                        .ok_or_else(|| ModelError::UnknownClass {
                            student: id.clone(),
                            class: choice.clone(),
                        })?;
                if list.contains(&c) {
                    return Err(ModelError::DuplicateChoice {
                        student: id,
                        class: choice.clone(),
                    });
                }
                list.push(c);
            }
            students.push(StudentId::new(id));
            groups.push(group);
            prefs.push(list);
        }

        Ok(Instance {
            students,
            groups,
            classes: self.classes,
            prefs,
            k: self.k,
            student_lookup,
            class_lookup,
        })
    }
}

/// Per-rank payoffs `p_1..p_k` plus the payoff for unranked classes.
///
/// All utilities are signed 64-bit integers. Integrality is what makes the
/// lexicographic weight constructions exact and keeps the flow solver's
/// cost arithmetic checkable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtilityVector {
    by_rank: Vec<i64>,
    others: i64,
}

/// Worst-case objective magnitude allowed: |value| * |S| must stay below 2^62.
const OBJECTIVE_BOUND: i64 = 1 << 62;

impl UtilityVector {
    pub fn new(by_rank: Vec<i64>, others: i64) -> Self {
        UtilityVector { by_rank, others }
    }

    pub fn by_rank(&self) -> &[i64] {
        &self.by_rank
    }

    pub fn others(&self) -> i64 {
        self.others
    }

    pub fn k(&self) -> usize {
        self.by_rank.len()
    }

    /// Payoff student `s` draws from being assigned to class `c`:
    /// `by_rank[i-1]` if `c` is their i-th choice, `others` otherwise.
    /// Total over all (student, class) pairs, including canceled classes.
    pub fn utility_of(&self, instance: &Instance, s: usize, c: usize) -> i64 {
        match instance.rank_of(s, c) {
            Some(rank) => self.by_rank[rank - 1],
            None => self.others,
        }
    }

    /// Check that the vector matches the instance's `k` and that no total
    /// objective can overflow: every |value| * |S| must fit below 2^62.
    pub fn validate_for(&self, instance: &Instance) -> Result<(), ModelError> {
        if self.by_rank.len() != instance.k() {
            return Err(ModelError::KMismatch {
                len: self.by_rank.len(),
                k: instance.k(),
            });
        }
        let n = instance.num_students() as i64;
        for &v in self.by_rank.iter().chain(std::iter::once(&self.others)) {
            let magnitude = v.checked_abs().ok_or(ModelError::Overflow("|utility|"))?;
            match magnitude.checked_mul(n) {
                Some(total) if total < OBJECTIVE_BOUND => {}
                _ => return Err(ModelError::Overflow("utility * |S|")),
            }
        }
        Ok(())
    }
}

/// The three big-integer penalty levels used by the weight constructions:
///
/// * `m = 100 * |S| + 1` — one unit of `-m` outweighs the best achievable
///   total of the 0..=100 utility scale,
/// * `n = |S| + 1` — base for lexicographic count stacking,
/// * `l = n^3 * |S| + 1` — outweighs any total of the `n^3`-weighted scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PenaltyConstants {
    pub m: i64,
    pub n: i64,
    pub l: i64,
}

impl PenaltyConstants {
    pub fn for_instance(instance: &Instance) -> Result<Self, ModelError> {
        Self::for_student_count(instance.num_students() as i64)
    }

    pub fn for_student_count(students: i64) -> Result<Self, ModelError> {
        assert!(students >= 1, "penalty constants need at least one student");
        let m = students
            .checked_mul(100)
            .and_then(|v| v.checked_add(1))
            .ok_or(ModelError::Overflow("m = 100 * |S| + 1"))?;
        let n = students
            .checked_add(1)
            .ok_or(ModelError::Overflow("n = |S| + 1"))?;
        let l = n
            .checked_mul(n)
            .and_then(|v| v.checked_mul(n))
            .and_then(|v| v.checked_mul(students))
            .and_then(|v| v.checked_add(1))
            .ok_or(ModelError::Overflow("l = n^3 * |S| + 1"))?;
        // The whole point of l is to dominate an l-scale total.
        if l.checked_mul(students).is_none() {
            return Err(ModelError::Overflow("l * |S|"));
        }
        Ok(PenaltyConstants { m, n, l })
    }
}

/// Whether a matching is expected to honor lower bounds.
///
/// Optimization output respects both bounds; mechanism output (deferred
/// acceptance, Boston) ignores lower bounds and is only upper-feasible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchingKind {
    CapacityRespecting,
    UpperOnly,
}

/// A total assignment of students to classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    assigned: Vec<usize>,
    kind: MatchingKind,
}

impl Matching {
    /// Wrap an assignment, checking the capacity discipline `kind` implies:
    /// inactive classes must be empty, upper bounds always hold, and lower
    /// bounds hold for `CapacityRespecting` matchings.
    pub fn new_checked(
        instance: &Instance,
        assigned: Vec<usize>,
        kind: MatchingKind,
    ) -> Result<Self, ModelError> {
        assert_eq!(assigned.len(), instance.num_students());
        let mut sizes = vec![0usize; instance.num_classes()];
        for (s, &c) in assigned.iter().enumerate() {
            if !instance.class(c).active {
                return Err(ModelError::InactiveAssigned {
                    student: instance.students()[s].as_str().to_owned(),
                    class: instance.class(c).id.as_str().to_owned(),
                });
            }
            sizes[c] += 1;
        }
        for (c, info) in instance.classes().iter().enumerate() {
            let size = sizes[c];
            let lower_ok = match kind {
                MatchingKind::CapacityRespecting => !info.active || size >= info.lower as usize,
                MatchingKind::UpperOnly => true,
            };
            if !lower_ok || size > info.upper as usize {
                return Err(ModelError::CapacityViolated {
                    class: info.id.as_str().to_owned(),
                    size,
                    lower: info.lower,
                    upper: info.upper,
                });
            }
        }
        Ok(Matching { assigned, kind })
    }

    pub fn kind(&self) -> MatchingKind {
        self.kind
    }

    /// Class index student `s` is assigned to.
    pub fn class_of(&self, s: usize) -> usize {
        self.assigned[s]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assigned.iter().copied().enumerate()
    }

    /// Enrollment per class index.
    pub fn class_sizes(&self, instance: &Instance) -> Vec<usize> {
        let mut sizes = vec![0usize; instance.num_classes()];
        for &c in &self.assigned {
            sizes[c] += 1;
        }
        sizes
    }

    /// Total utility of this matching under `p`.
    pub fn total_utility(&self, instance: &Instance, p: &UtilityVector) -> i64 {
        self.assigned
            .iter()
            .enumerate()
            .map(|(s, &c)| p.utility_of(instance, s, c))
            .sum()
    }
}

/// Counts of students by received rank: `counts[i]` students got their
/// (i+1)-th choice, `others` got a class outside their list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    counts: Vec<usize>,
    others: usize,
}

impl Profile {
    pub fn new(counts: Vec<usize>, others: usize) -> Self {
        Profile { counts, others }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn others_count(&self) -> usize {
        self.others
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.others
    }

    /// Count at 1-based rank `rank`.
    pub fn count_at(&self, rank: usize) -> usize {
        self.counts[rank - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> Instance {
        Instance::builder(2)
            .class("c1", 0, 1)
            .class("c2", 0, 1)
            .student("a", ["c1", "c2"])
            .student("b", ["c1", "c2"])
            .build()
            .unwrap()
    }

    #[test]
    fn builder_validates_preferences() {
        let err = Instance::builder(2)
            .class("c1", 0, 1)
            .student("a", ["c1", "c1"])
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateChoice { .. }));

        let err = Instance::builder(2)
            .class("c1", 0, 1)
            .student("a", ["c9"])
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::UnknownClass { .. }));

        let err = Instance::builder(1)
            .class("c1", 0, 1)
            .class("c2", 0, 1)
            .student("a", ["c1", "c2"])
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::PreferenceTooLong { .. }));
    }

    #[test]
    fn builder_requires_an_active_class() {
        let err = Instance::builder(1)
            .canceled_class("c1", 0, 5)
            .student("a", ["c1"])
            .build()
            .unwrap_err();
        assert_eq!(err, ModelError::NoActiveClass);
    }

    #[test]
    fn builder_rejects_inverted_bounds() {
        let err = Instance::builder(1)
            .class("c1", 8, 5)
            .student("a", ["c1"])
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::LowerExceedsUpper { .. }));
    }

    #[test]
    fn canceled_classes_keep_their_rank_positions() {
        let instance = Instance::builder(3)
            .class("c1", 0, 5)
            .canceled_class("c2", 0, 5)
            .class("c3", 0, 5)
            .student("a", ["c2", "c3"])
            .build()
            .unwrap();
        let c2 = instance.class_index("c2").unwrap();
        let c3 = instance.class_index("c3").unwrap();
        assert_eq!(instance.rank_of(0, c2), Some(1));
        assert_eq!(instance.rank_of(0, c3), Some(2));
    }

    #[test]
    fn utility_of_reads_rank_or_others() {
        let instance = Instance::builder(6)
            .class("c1", 0, 5)
            .class("c2", 0, 5)
            .class("c3", 0, 5)
            .class("c4", 0, 5)
            .student("a", ["c1", "c2", "c3"])
            .build()
            .unwrap();
        let opt67 = UtilityVector::new(vec![100, 67, 45, 30, 20, 0], -113_801);
        let c3 = instance.class_index("c3").unwrap();
        let c1 = instance.class_index("c1").unwrap();
        let c4 = instance.class_index("c4").unwrap();
        assert_eq!(opt67.utility_of(&instance, 0, c3), 45);
        assert_eq!(opt67.utility_of(&instance, 0, c1), 100);
        assert_eq!(opt67.utility_of(&instance, 0, c4), -113_801);
    }

    #[test]
    fn utility_order_follows_preference_order() {
        let instance = Instance::builder(3)
            .class("c1", 0, 5)
            .class("c2", 0, 5)
            .class("c3", 0, 5)
            .student("a", ["c2", "c1", "c3"])
            .build()
            .unwrap();
        let p = UtilityVector::new(vec![9, 5, 2], -100);
        let ranked: Vec<usize> = instance.preference(0).to_vec();
        for pair in ranked.windows(2) {
            assert!(p.utility_of(&instance, 0, pair[0]) > p.utility_of(&instance, 0, pair[1]));
        }
    }

    #[test]
    fn penalty_constants_match_published_sizes() {
        let m1138 = PenaltyConstants::for_student_count(1138).unwrap();
        assert_eq!(m1138.m, 113_801);
        let m1123 = PenaltyConstants::for_student_count(1123).unwrap();
        assert_eq!(m1123.n, 1124);
        let tiny = PenaltyConstants::for_student_count(1).unwrap();
        assert_eq!((tiny.m, tiny.n, tiny.l), (101, 2, 9));
    }

    #[test]
    fn penalty_constants_overflow_is_reported() {
        let err = PenaltyConstants::for_student_count(100_000).unwrap_err();
        assert!(matches!(err, ModelError::Overflow(_)));
    }

    #[test]
    fn one_penalty_outweighs_every_other_assignment() {
        // m > 100 * |S|: a single -m slot costs more than the best possible
        // total of all other students combined.
        for students in [1i64, 17, 1138, 1123] {
            let pc = PenaltyConstants::for_student_count(students).unwrap();
            assert!(pc.m > 100 * students);
            assert!(pc.n > students);
            assert!(pc.l > pc.n.pow(3) * students);
        }
    }

    #[test]
    fn utility_vector_overflow_guard() {
        let instance = two_by_two();
        let p = UtilityVector::new(vec![i64::MAX / 2, 0], 0);
        assert!(matches!(
            p.validate_for(&instance),
            Err(ModelError::Overflow(_))
        ));
        let p = UtilityVector::new(vec![100, 67, 45], 0);
        assert!(matches!(
            p.validate_for(&instance),
            Err(ModelError::KMismatch { .. })
        ));
    }

    #[test]
    fn matching_checks_capacities_by_kind() {
        let instance = Instance::builder(2)
            .class("c1", 1, 1)
            .class("c2", 0, 2)
            .student("a", ["c1"])
            .student("b", ["c2"])
            .build()
            .unwrap();
        let c2 = instance.class_index("c2").unwrap();
        // Both students in c2 leaves c1 under its lower bound.
        let err = Matching::new_checked(&instance, vec![c2, c2], MatchingKind::CapacityRespecting)
            .unwrap_err();
        assert!(matches!(err, ModelError::CapacityViolated { .. }));
        // The same assignment is fine upper-only.
        assert!(Matching::new_checked(&instance, vec![c2, c2], MatchingKind::UpperOnly).is_ok());
    }

    #[test]
    fn matching_rejects_inactive_assignment() {
        let instance = Instance::builder(1)
            .class("c1", 0, 2)
            .canceled_class("c2", 0, 2)
            .student("a", ["c1"])
            .build()
            .unwrap();
        let c2 = instance.class_index("c2").unwrap();
        let err = Matching::new_checked(&instance, vec![c2], MatchingKind::UpperOnly).unwrap_err();
        assert!(matches!(err, ModelError::InactiveAssigned { .. }));
    }

    #[test]
    fn profile_totals() {
        let p = Profile::new(vec![3, 2, 0], 1);
        assert_eq!(p.total(), 6);
        assert_eq!(p.count_at(1), 3);
        assert_eq!(p.others_count(), 1);
    }
}

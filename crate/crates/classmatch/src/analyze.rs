//! Profiles, averages, feasibility diagnostics and model comparison.
//!
//! All averages are exact rationals; decimal output truncates to three
//! places only at render time, which is the convention the published
//! aggregate tables follow. Average ranks count an out-of-list assignment
//! as rank `k + 1`, so whenever the "others" bucket is nonempty the average
//! is a lower bound and is tagged as such.

use crate::assign::detect_restricted_infeasibility;
use crate::model::{Instance, Matching, Profile, UtilityVector};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Exact ratio of two integers, always reduced, denominator positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i128;
        Rational {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn denominator(&self) -> i128 {
        self.den
    }

    /// Truncated decimal expansion with three places, e.g. `85.838`.
    pub fn to_decimal_3(&self) -> String {
        let scaled = self.num * 1000 / self.den;
        let sign = if scaled < 0 && scaled / 1000 == 0 {
            "-"
        } else {
            ""
        };
        format!("{sign}{}.{:03}", scaled / 1000, (scaled % 1000).abs())
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_3())
    }
}

/// Count students by received rank. Students in classes outside their list
/// (including leftover-filled ones) land in the "others" bucket.
pub fn profile_of(instance: &Instance, matching: &Matching) -> Profile {
    let mut counts = vec![0usize; instance.k()];
    let mut others = 0usize;
    for (s, c) in matching.iter() {
        match instance.rank_of(s, c) {
            Some(rank) => counts[rank - 1] += 1,
            None => others += 1,
        }
    }
    Profile::new(counts, others)
}

/// Profiles split by the optional student group column; ungrouped students
/// are keyed by the empty string.
pub fn profile_by_group(instance: &Instance, matching: &Matching) -> BTreeMap<String, Profile> {
    let mut buckets: BTreeMap<String, (Vec<usize>, usize)> = BTreeMap::new();
    for (s, c) in matching.iter() {
        let key = instance.group(s).unwrap_or("").to_owned();
        let bucket = buckets
            .entry(key)
            .or_insert_with(|| (vec![0usize; instance.k()], 0));
        match instance.rank_of(s, c) {
            Some(rank) => bucket.0[rank - 1] += 1,
            None => bucket.1 += 1,
        }
    }
    buckets
        .into_iter()
        .map(|(key, (counts, others))| (key, Profile::new(counts, others)))
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("average utility undefined: {students} students occupy penalty slots")]
pub struct UndefinedAverage {
    pub students: usize,
}

/// Mean utility per student, exact. Undefined (the tables print `--`) when
/// any occupied rank carries a penalty payoff at or below `-m`, m sized
/// from the profile's own total.
pub fn average_utility(profile: &Profile, p: &UtilityVector) -> Result<Rational, UndefinedAverage> {
    assert_eq!(profile.k(), p.k(), "profile and vector disagree on k");
    let total = profile.total();
    let threshold = -(100 * total as i128 + 1);
    let mut penalized = 0usize;
    let mut sum: i128 = 0;
    for (i, &count) in profile.counts().iter().enumerate() {
        let value = p.by_rank()[i] as i128;
        if count > 0 && value <= threshold {
            penalized += count;
        }
        sum += value * count as i128;
    }
    if profile.others_count() > 0 && (p.others() as i128) <= threshold {
        penalized += profile.others_count();
    }
    sum += p.others() as i128 * profile.others_count() as i128;
    if penalized > 0 {
        return Err(UndefinedAverage {
            students: penalized,
        });
    }
    Ok(Rational::new(sum, total as i128))
}

/// Mean received rank, counting "others" as rank `k + 1`. Tagged as a lower
/// bound whenever the others bucket is nonempty, since those students'
/// true displeasure is unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AverageRank {
    pub value: Rational,
    pub lower_bound: bool,
}

pub fn average_rank(profile: &Profile) -> AverageRank {
    let k = profile.k();
    let mut sum: i128 = 0;
    for (i, &count) in profile.counts().iter().enumerate() {
        sum += (i as i128 + 1) * count as i128;
    }
    sum += (k as i128 + 1) * profile.others_count() as i128;
    AverageRank {
        value: Rational::new(sum, profile.total() as i128),
        lower_bound: profile.others_count() > 0,
    }
}

impl fmt::Display for AverageRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lower_bound {
            write!(f, ">= {}", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

/// Coverage check for the rank-restricted models: every active class must
/// be ranked within the top `max_rank` choices by at least its lower bound
/// worth of students, or no restricted matching can fill it. Returns the
/// violating classes with their top-`max_rank` popularity. Necessary, not
/// sufficient.
pub fn necessary_condition(instance: &Instance, max_rank: usize) -> Vec<(usize, usize)> {
    assert!((1..=instance.k()).contains(&max_rank));
    let popularity = top_rank_popularity(instance, max_rank);
    instance
        .active_classes()
        .filter(|&(c, info)| popularity[c] < info.lower as usize)
        .map(|(c, _)| (c, popularity[c]))
        .collect()
}

fn top_rank_popularity(instance: &Instance, max_rank: usize) -> Vec<usize> {
    let mut popularity = vec![0usize; instance.num_classes()];
    for s in 0..instance.num_students() {
        for &c in instance.preference(s).iter().take(max_rank) {
            popularity[c] += 1;
        }
    }
    popularity
}

/// Per-class counts of students ranking it 1st..k-th. Canceled classes are
/// included; their rows show the demand they left behind.
pub fn rank_histogram(instance: &Instance) -> Vec<Vec<usize>> {
    let mut histogram = vec![vec![0usize; instance.k()]; instance.num_classes()];
    for s in 0..instance.num_students() {
        for (i, &c) in instance.preference(s).iter().enumerate() {
            histogram[c][i] += 1;
        }
    }
    histogram
}

/// Active classes left under their lower bound by `matching`, with sizes.
pub fn classes_below_lower(instance: &Instance, matching: &Matching) -> Vec<(usize, usize)> {
    let sizes = matching.class_sizes(instance);
    below_lower(instance, &sizes)
}

/// Same check on a pre-fill placement (mechanism output before unplaced
/// students are swept into leftover seats). This is where the mechanisms'
/// disregard for lower bounds actually shows; the fill masks it by
/// targeting the emptiest classes.
pub fn placement_below_lower(
    instance: &Instance,
    placement: &[Option<usize>],
) -> Vec<(usize, usize)> {
    let mut sizes = vec![0usize; instance.num_classes()];
    for c in placement.iter().flatten() {
        sizes[*c] += 1;
    }
    below_lower(instance, &sizes)
}

fn below_lower(instance: &Instance, sizes: &[usize]) -> Vec<(usize, usize)> {
    instance
        .active_classes()
        .filter(|&(c, info)| sizes[c] < info.lower as usize)
        .map(|(c, _)| (c, sizes[c]))
        .collect()
}

/// True when every student is at least as well off under `a` as under `b`
/// (by received rank, out-of-list counting as `k + 1`) and someone is
/// strictly better off.
pub fn pareto_dominates(instance: &Instance, a: &Matching, b: &Matching) -> bool {
    let rank = |m: &Matching, s: usize| {
        instance
            .rank_of(s, m.class_of(s))
            .unwrap_or(instance.k() + 1)
    };
    let mut strict = false;
    for s in 0..instance.num_students() {
        let (ra, rb) = (rank(a, s), rank(b, s));
        if ra > rb {
            return false;
        }
        if ra < rb {
            strict = true;
        }
    }
    strict
}

/// What a model run produced, as fed to [`compare`].
pub enum ModelOutcome {
    /// A matching, optionally with pricing information. Mechanisms carry
    /// neither vector, so their utility column prints `--`.
    Matched {
        matching: Matching,
        /// Vector the model was solved with. When present, a matching that
        /// occupies payoffs at or below `-m` renders as infeasible, so pass
        /// it only for models whose penalties are meant as hard limits.
        vector: Option<UtilityVector>,
        /// Vector for the average-utility column when it differs from the
        /// solving one; the profile-based models report their averages on
        /// a reference utility scale rather than their own weights.
        score_vector: Option<UtilityVector>,
    },
    /// The model could not produce an acceptable matching.
    Infeasible,
}

enum RowBody {
    Feasible {
        profile: Profile,
        avg_utility: Option<Rational>,
        avg_rank: AverageRank,
    },
    Infeasible,
}

pub struct ComparisonRow {
    pub name: String,
    body: RowBody,
}

/// One row per model with profile counts and averages, in input order,
/// plus the pairwise dominance relation between the feasible matchings.
pub struct ComparisonTable {
    k: usize,
    rows: Vec<ComparisonRow>,
    /// `(a, b)` means row `a`'s matching Pareto-dominates row `b`'s.
    pub dominances: Vec<(usize, usize)>,
}

/// Assemble the comparison report for named model outcomes over one
/// instance. A matching that landed students on penalty payoffs is
/// reported as infeasible, like the restricted models' published rows.
pub fn compare(instance: &Instance, outcomes: Vec<(String, ModelOutcome)>) -> ComparisonTable {
    let mut rows = Vec::new();
    let mut matchings: Vec<Option<Matching>> = Vec::new();
    for (name, outcome) in outcomes {
        match outcome {
            ModelOutcome::Matched {
                matching,
                vector,
                score_vector,
            } => {
                let infeasible = vector
                    .as_ref()
                    .is_some_and(|p| detect_restricted_infeasibility(&matching, instance, p));
                if infeasible {
                    rows.push(ComparisonRow {
                        name,
                        body: RowBody::Infeasible,
                    });
                    matchings.push(None);
                    continue;
                }
                let profile = profile_of(instance, &matching);
                let avg_utility = score_vector
                    .as_ref()
                    .or(vector.as_ref())
                    .and_then(|p| average_utility(&profile, p).ok());
                let avg_rank = average_rank(&profile);
                rows.push(ComparisonRow {
                    name,
                    body: RowBody::Feasible {
                        profile,
                        avg_utility,
                        avg_rank,
                    },
                });
                matchings.push(Some(matching));
            }
            ModelOutcome::Infeasible => {
                rows.push(ComparisonRow {
                    name,
                    body: RowBody::Infeasible,
                });
                matchings.push(None);
            }
        }
    }
    let mut dominances = Vec::new();
    for a in 0..matchings.len() {
        for b in 0..matchings.len() {
            if a == b {
                continue;
            }
            if let (Some(ma), Some(mb)) = (&matchings[a], &matchings[b]) {
                if pareto_dominates(instance, ma, mb) {
                    dominances.push((a, b));
                }
            }
        }
    }
    ComparisonTable {
        k: instance.k(),
        rows,
        dominances,
    }
}

impl ComparisonTable {
    pub fn rows(&self) -> &[ComparisonRow] {
        &self.rows
    }

    pub fn is_infeasible(&self, row: usize) -> bool {
        matches!(self.rows[row].body, RowBody::Infeasible)
    }

    pub fn profile(&self, row: usize) -> Option<&Profile> {
        match &self.rows[row].body {
            RowBody::Feasible { profile, .. } => Some(profile),
            RowBody::Infeasible => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,status");
        for i in 1..=self.k {
            out.push_str(&format!(",rank{i}"));
        }
        out.push_str(",others,avg_utility,avg_rank,rank_is_lower_bound\n");
        for row in &self.rows {
            out.push_str(&row.name);
            match &row.body {
                RowBody::Infeasible => {
                    out.push_str(",infeasible");
                    for _ in 0..self.k + 4 {
                        out.push(',');
                    }
                }
                RowBody::Feasible {
                    profile,
                    avg_utility,
                    avg_rank,
                } => {
                    out.push_str(",ok");
                    for &count in profile.counts() {
                        out.push_str(&format!(",{count}"));
                    }
                    out.push_str(&format!(",{}", profile.others_count()));
                    match avg_utility {
                        Some(u) => out.push_str(&format!(",{u}")),
                        None => out.push_str(",--"),
                    }
                    out.push_str(&format!(
                        ",{},{}",
                        avg_rank.value,
                        if avg_rank.lower_bound { "yes" } else { "no" }
                    ));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut header = vec!["model".to_owned()];
        header.extend((1..=self.k).map(ordinal));
        header.push("others".into());
        header.push("avg utility".into());
        header.push("avg rank".into());

        let mut body: Vec<Vec<String>> = Vec::new();
        for row in &self.rows {
            let mut cells = vec![row.name.clone()];
            match &row.body {
                RowBody::Infeasible => {
                    cells.push("infeasible".into());
                    cells.extend(std::iter::repeat_n(String::new(), self.k + 2));
                }
                RowBody::Feasible {
                    profile,
                    avg_utility,
                    avg_rank,
                } => {
                    cells.extend(profile.counts().iter().map(|c| c.to_string()));
                    cells.push(profile.others_count().to_string());
                    cells.push(match avg_utility {
                        Some(u) => u.to_string(),
                        None => "--".into(),
                    });
                    cells.push(avg_rank.to_string());
                }
            }
            body.push(cells);
        }

        let mut widths: Vec<usize> = header.iter().map(String::len).collect();
        for row in &body {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let render = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{:width$}", c, width = widths[i]))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut out = render(&header);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&render(&rule));
        for row in &body {
            out.push_str(&render(row));
        }
        for &(a, b) in &self.dominances {
            out.push_str(&format!(
                "{} Pareto-dominates {}\n",
                self.rows[a].name, self.rows[b].name
            ));
        }
        out
    }
}

fn ordinal(i: usize) -> String {
    match i {
        1 => "1st".into(),
        2 => "2nd".into(),
        3 => "3rd".into(),
        _ => format!("{i}th"),
    }
}

//! Assignment models solved by reduction to minimum-cost flow.
//!
//! The reduction: one node per student and per active class plus a source
//! `o` and sink `t`. Arcs `o -> s` (capacity 1, cost 0) carry each student,
//! `s -> c` (capacity 1, cost `-p_sc`) price every placement, and `c -> t`
//! (capacity `upper_c - lower_c`, cost 0) carry seats above the class's
//! guaranteed minimum. Supplies route the guaranteed seats: `b(o) = |S|`,
//! `b(c) = -lower_c`, `b(t) = sum(lower) - |S|`. An integral min-cost flow
//! then assigns every student to exactly one class, maximizing total
//! utility.
//!
//! The named utility vectors live here too: the plain `OptXX` scales, their
//! rank-restricted variants (penalties force ranks beyond a cutoff out of
//! use), and the lexicographic weight stacks for rank-maximal, fair and
//! hybrid matchings.

use crate::flow::{solve_min_cost_flow, ArcId, Flow, FlowError, FlowNetwork, NodeId};
use crate::model::{Instance, Matching, MatchingKind, ModelError, PenaltyConstants, UtilityVector};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignError {
    #[error("capacity mismatch: {students} students, but active classes guarantee {total_lower} and cap {total_upper} seats")]
    CapacityMismatch {
        students: usize,
        total_lower: u64,
        total_upper: u64,
    },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown model `{0}`")]
    UnknownPreset(String),
    #[error("model {preset} is not defined for k = {k}")]
    UnsupportedK { preset: String, k: usize },
    #[error("max rank {max_rank} outside 1..={k}")]
    BadMaxRank { max_rank: usize, k: usize },
}

/// The flow network for an instance plus the layout needed to read a
/// matching back out of a solved flow.
#[derive(Debug)]
pub struct AssignmentNetwork {
    pub network: FlowNetwork,
    pub source: NodeId,
    pub sink: NodeId,
    /// Active class indices in node order.
    active: Vec<usize>,
    /// First `s -> c` arc id; student `s`'s arcs are the contiguous block
    /// `student_arc_base + s * active.len() ..` in active-class order.
    student_arc_base: ArcId,
}

impl AssignmentNetwork {
    /// Arcs carrying student `s`, paired with the class index each targets.
    pub fn student_arcs(&self, s: usize) -> impl Iterator<Item = (ArcId, usize)> + '_ {
        let base = self.student_arc_base + s * self.active.len();
        (0..self.active.len()).map(move |j| (base + j, self.active[j]))
    }

    pub fn active_classes(&self) -> &[usize] {
        &self.active
    }
}

fn check_capacity(instance: &Instance) -> Result<(), AssignError> {
    let students = instance.num_students();
    let total_lower = instance.total_lower();
    let total_upper = instance.total_upper();
    if (students as u64) < total_lower || (students as u64) > total_upper {
        return Err(AssignError::CapacityMismatch {
            students,
            total_lower,
            total_upper,
        });
    }
    Ok(())
}

/// Build the min-cost-flow reduction for `instance` under `p`.
pub fn build_network(
    instance: &Instance,
    p: &UtilityVector,
) -> Result<AssignmentNetwork, AssignError> {
    p.validate_for(instance)?;
    check_capacity(instance)?;

    let students = instance.num_students();
    let total_lower = instance.total_lower() as i64;
    let mut network = FlowNetwork::new();
    let source = network.add_node(students as i64);
    let student_nodes: Vec<NodeId> = (0..students).map(|_| network.add_node(0)).collect();
    let mut active = Vec::new();
    let mut class_nodes = Vec::new();
    for (c, info) in instance.active_classes() {
        active.push(c);
        class_nodes.push(network.add_node(-(info.lower as i64)));
    }
    let sink = network.add_node(total_lower - students as i64);

    for &s in &student_nodes {
        network.add_arc(source, s, 1, 0);
    }
    let student_arc_base = network.arcs().len();
    for (s, &node) in student_nodes.iter().enumerate() {
        for (j, &c) in active.iter().enumerate() {
            network.add_arc(node, class_nodes[j], 1, -p.utility_of(instance, s, c));
        }
    }
    for (j, &c) in active.iter().enumerate() {
        let info = instance.class(c);
        network.add_arc(class_nodes[j], sink, (info.upper - info.lower) as i64, 0);
    }

    Ok(AssignmentNetwork {
        network,
        source,
        sink,
        active,
        student_arc_base,
    })
}

/// A solved assignment model, keeping the network and flow around so the
/// optimality certificate can be checked independently.
pub struct AssignmentSolution {
    pub matching: Matching,
    pub total_utility: i64,
    pub network: AssignmentNetwork,
    pub flow: Flow,
}

/// Solve the maximum-utility assignment and keep the flow evidence.
pub fn solve(instance: &Instance, p: &UtilityVector) -> Result<AssignmentSolution, AssignError> {
    let assignment_network = build_network(instance, p)?;
    let flow = solve_min_cost_flow(&assignment_network.network)?;
    let mut assigned = Vec::with_capacity(instance.num_students());
    for s in 0..instance.num_students() {
        let mut target = None;
        for (arc, c) in assignment_network.student_arcs(s) {
            if flow.value(arc) == 1 {
                assert!(target.is_none(), "student split across classes");
                target = Some(c);
            }
        }
        assigned.push(target.expect("every student carries one unit of flow"));
    }
    let matching = Matching::new_checked(instance, assigned, MatchingKind::CapacityRespecting)?;
    let total_utility = flow
        .total_cost()
        .checked_neg()
        .ok_or(FlowError::Overflow)
        .map_err(AssignError::Flow)?;
    Ok(AssignmentSolution {
        matching,
        total_utility,
        network: assignment_network,
        flow,
    })
}

/// Maximum-utility matching and its total utility.
pub fn solve_assignment(
    instance: &Instance,
    p: &UtilityVector,
) -> Result<(Matching, i64), AssignError> {
    let solution = solve(instance, p)?;
    Ok((solution.matching, solution.total_utility))
}

/// True when some student sits in a penalty slot (payoff at or below `-m`),
/// i.e. the model is infeasible in the restricted sense: its optimum was
/// forced to use an assignment the penalties were meant to forbid.
pub fn detect_restricted_infeasibility(
    matching: &Matching,
    instance: &Instance,
    p: &UtilityVector,
) -> bool {
    let threshold = -(100 * instance.num_students() as i128 + 1);
    matching
        .iter()
        .any(|(s, c)| (p.utility_of(instance, s, c) as i128) <= threshold)
}

/// Replace the payoffs of ranks beyond `max_rank`, and of unranked classes,
/// with `-m`, forbidding them in any matching that can avoid them.
pub fn restrict(p: &UtilityVector, max_rank: usize, m: i64) -> UtilityVector {
    let by_rank = p
        .by_rank()
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < max_rank { v } else { -m })
        .collect();
    UtilityVector::new(by_rank, -m)
}

/// The named utility vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Opt80,
    Opt75,
    Opt67,
    Opt50,
    /// Opt67 with ranks beyond the cutoff replaced by `-m`.
    Opt67Max(usize),
    RankMaximal,
    Fair,
    Opt67xFair,
}

impl Preset {
    /// Every fixed preset name (the restricted family is spelled
    /// `Opt67-maxR`).
    pub const NAMED: [Preset; 11] = [
        Preset::Opt80,
        Preset::Opt75,
        Preset::Opt67,
        Preset::Opt50,
        Preset::Opt67Max(5),
        Preset::Opt67Max(4),
        Preset::Opt67Max(3),
        Preset::Opt67Max(2),
        Preset::RankMaximal,
        Preset::Fair,
        Preset::Opt67xFair,
    ];

    fn scale_prefix(self) -> Option<[i64; 6]> {
        match self {
            Preset::Opt80 => Some([100, 80, 64, 51, 41, 0]),
            Preset::Opt75 => Some([100, 75, 56, 42, 32, 0]),
            Preset::Opt67 | Preset::Opt67Max(_) => Some([100, 67, 45, 30, 20, 0]),
            Preset::Opt50 => Some([100, 50, 25, 13, 6, 0]),
            _ => None,
        }
    }

    /// Construct the vector for `instance`, with penalty constants sized to
    /// its student count. Scale presets are published for k = 6; smaller k
    /// drops entries from the tail. The lexicographic presets are built for
    /// any k from their dominance patterns.
    pub fn vector(self, instance: &Instance) -> Result<UtilityVector, AssignError> {
        let k = instance.k();
        let students = instance.num_students() as i64;
        let pc = PenaltyConstants::for_instance(instance).map_err(AssignError::Model)?;
        let unsupported = |preset: Preset| AssignError::UnsupportedK {
            preset: preset.to_string(),
            k,
        };

        let vector = match self {
            Preset::Opt80 | Preset::Opt75 | Preset::Opt67 | Preset::Opt50 => {
                let prefix = self.scale_prefix().expect("scale preset");
                if k > prefix.len() {
                    return Err(unsupported(self));
                }
                UtilityVector::new(prefix[..k].to_vec(), -pc.m)
            }
            Preset::Opt67Max(r) => {
                if !(1..=k).contains(&r) {
                    return Err(AssignError::BadMaxRank { max_rank: r, k });
                }
                let base = Preset::Opt67.vector(instance)?;
                restrict(&base, r, pc.m)
            }
            Preset::RankMaximal => {
                if k < 2 {
                    return Err(unsupported(self));
                }
                // Ranks 1..k-1 weighted n^(k-2) down to n^0; rank k free.
                let mut by_rank = Vec::with_capacity(k);
                for i in 0..k - 1 {
                    by_rank.push(checked_pow(pc.n, (k - 2 - i) as u32)?);
                }
                by_rank.push(0);
                let top_total = by_rank[0]
                    .checked_mul(students)
                    .and_then(|v| v.checked_add(1))
                    .ok_or(ModelError::Overflow("rank-maximal penalty"))
                    .map_err(AssignError::Model)?;
                assert!(pc.n > students && top_total > by_rank[0] * students);
                UtilityVector::new(by_rank, -top_total)
            }
            Preset::Fair => {
                // Rank 1 free; rank j >= 2 costs n^(j-2); others costs n^(k-1).
                let mut by_rank = Vec::with_capacity(k);
                by_rank.push(0);
                for j in 2..=k {
                    by_rank.push(-checked_pow(pc.n, (j - 2) as u32)?);
                }
                let others = -checked_pow(pc.n, (k - 1) as u32)?;
                assert!(pc.n > students);
                UtilityVector::new(by_rank, others)
            }
            Preset::Opt67xFair => {
                if k < 3 {
                    return Err(unsupported(self));
                }
                // Opt67 payoffs on the top three ranks, then m-scale
                // penalties stacked by n: rank j >= 4 costs m * n^(j-4),
                // unranked costs m * n^(k-3).
                let mut by_rank = vec![100, 67, 45];
                for j in 4..=k {
                    by_rank.push(-checked_mul(pc.m, checked_pow(pc.n, (j - 4) as u32)?)?);
                }
                let others = -checked_mul(pc.m, checked_pow(pc.n, (k - 3) as u32)?)?;
                assert!(pc.m > 100 * students && pc.n > students);
                UtilityVector::new(by_rank, others)
            }
        };
        vector.validate_for(instance).map_err(AssignError::Model)?;
        Ok(vector)
    }
}

impl Preset {
    /// Whether a payoff at or below `-m` in this model's optimum means the
    /// model failed. True for the utility scales and their restricted
    /// variants, whose penalties are hard limits. The profile-based models
    /// use huge weights as lexicographic tie-breakers instead: their optima
    /// are the graceful fallback and always render as ordinary rows.
    pub fn uses_penalty_detection(self) -> bool {
        !matches!(
            self,
            Preset::RankMaximal | Preset::Fair | Preset::Opt67xFair
        )
    }

    /// Vector to report average utilities with: the profile-based models
    /// are scored on the plain Opt67 scale (their own weights are not
    /// utilities in any meaningful unit). `None` when no sensible scale
    /// exists for this k.
    pub fn reporting_vector(self, instance: &Instance) -> Option<UtilityVector> {
        match self {
            Preset::RankMaximal | Preset::Fair | Preset::Opt67xFair => {
                Preset::Opt67.vector(instance).ok()
            }
            _ => self.vector(instance).ok(),
        }
    }
}

fn checked_pow(base: i64, exp: u32) -> Result<i64, AssignError> {
    base.checked_pow(exp)
        .ok_or(ModelError::Overflow("lexicographic weight"))
        .map_err(AssignError::Model)
}

fn checked_mul(a: i64, b: i64) -> Result<i64, AssignError> {
    a.checked_mul(b)
        .ok_or(ModelError::Overflow("lexicographic weight"))
        .map_err(AssignError::Model)
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Opt80 => write!(f, "Opt80"),
            Preset::Opt75 => write!(f, "Opt75"),
            Preset::Opt67 => write!(f, "Opt67"),
            Preset::Opt50 => write!(f, "Opt50"),
            Preset::Opt67Max(r) => write!(f, "Opt67-max{r}"),
            Preset::RankMaximal => write!(f, "RankMaximal"),
            Preset::Fair => write!(f, "Fair"),
            Preset::Opt67xFair => write!(f, "Opt67xFair"),
        }
    }
}

impl FromStr for Preset {
    type Err = AssignError;

    fn from_str(name: &str) -> Result<Self, Self::Err> {
        let lower = name.to_ascii_lowercase();
        if let Some(rank) = lower.strip_prefix("opt67-max") {
            let r: usize = rank
                .parse()
                .map_err(|_| AssignError::UnknownPreset(name.to_owned()))?;
            return Ok(Preset::Opt67Max(r));
        }
        match lower.as_str() {
            "opt80" => Ok(Preset::Opt80),
            "opt75" => Ok(Preset::Opt75),
            "opt67" => Ok(Preset::Opt67),
            "opt50" => Ok(Preset::Opt50),
            "rankmaximal" | "rank-maximal" => Ok(Preset::RankMaximal),
            "fair" => Ok(Preset::Fair),
            "opt67xfair" => Ok(Preset::Opt67xFair),
            _ => Err(AssignError::UnknownPreset(name.to_owned())),
        }
    }
}

/// Look up a preset by name and build its vector for `instance`.
pub fn preset(name: &str, instance: &Instance) -> Result<UtilityVector, AssignError> {
    Preset::from_str(name)?.vector(instance)
}

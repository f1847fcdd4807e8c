//! CSV ingestion and emission, plus the synthetic instance generator.
//!
//! Two input files describe an instance:
//!
//! * classes: header `class_id,lower,upper,status`, one row per class,
//!   status `active` or `canceled`;
//! * preferences: header `student_id[,group],choice_1,...,choice_k`, one
//!   row per student. `k` is inferred from the header width. Trailing
//!   choices may be left empty for short lists.
//!
//! Matchings are written as `student_id,class_id,rank` with rank `1..k` or
//! `others`, rows sorted by student id.

use crate::model::{Instance, Matching, ModelError};
use crate::rng::Xoshiro256StarStar;
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unsatisfiable generator spec: {0}")]
    Unsatisfiable(String),
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Load and validate an instance from the two CSV files. `k` is inferred
/// from the preferences header.
pub fn load_instance(classes_path: &Path, prefs_path: &Path) -> Result<Instance, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(classes_path)?;
    {
        let headers = reader.headers()?;
        let expected = ["class_id", "lower", "upper", "status"];
        if headers.iter().ne(expected) {
            return Err(parse_error(
                classes_path,
                1,
                format!("expected header `{}`", expected.join(",")),
            ));
        }
    }
    struct ClassRow {
        id: String,
        lower: u32,
        upper: u32,
        active: bool,
    }
    let mut classes: Vec<ClassRow> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(parse_error(
                classes_path,
                line,
                format!("expected 4 fields, found {}", record.len()),
            ));
        }
        let id = record[0].to_owned();
        if id.is_empty() {
            return Err(parse_error(classes_path, line, "empty class_id"));
        }
        let lower: u32 = record[1]
            .parse()
            .map_err(|_| parse_error(classes_path, line, format!("bad lower `{}`", &record[1])))?;
        let upper: u32 = record[2]
            .parse()
            .map_err(|_| parse_error(classes_path, line, format!("bad upper `{}`", &record[2])))?;
        let active = match &record[3] {
            "active" => true,
            "canceled" => false,
            other => {
                return Err(parse_error(
                    classes_path,
                    line,
                    format!("status must be `active` or `canceled`, found `{other}`"),
                ))
            }
        };
        classes.push(ClassRow {
            id,
            lower,
            upper,
            active,
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(prefs_path)?;
    let (has_group, k) = {
        let headers = reader.headers()?;
        let mut fields = headers.iter();
        if fields.next() != Some("student_id") {
            return Err(parse_error(
                prefs_path,
                1,
                "first column must be `student_id`",
            ));
        }
        let rest: Vec<&str> = fields.collect();
        let has_group = rest.first() == Some(&"group");
        let choices = &rest[usize::from(has_group)..];
        for (i, name) in choices.iter().enumerate() {
            let expected = format!("choice_{}", i + 1);
            if *name != expected {
                return Err(parse_error(
                    prefs_path,
                    1,
                    format!("expected column `{expected}`, found `{name}`"),
                ));
            }
        }
        if choices.is_empty() {
            return Err(parse_error(prefs_path, 1, "no choice columns"));
        }
        (has_group, choices.len())
    };

    let mut builder = Instance::builder(k);
    for row in &classes {
        builder = if row.active {
            builder.class(row.id.clone(), row.lower, row.upper)
        } else {
            builder.canceled_class(row.id.clone(), row.lower, row.upper)
        };
    }
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fixed = 1 + usize::from(has_group);
        if record.len() < fixed || record.len() > fixed + k {
            return Err(parse_error(
                prefs_path,
                line,
                format!("expected between {} and {} fields", fixed, fixed + k),
            ));
        }
        let id = record[0].to_owned();
        if id.is_empty() {
            return Err(parse_error(prefs_path, line, "empty student_id"));
        }
        let group = if has_group && !record[1].is_empty() {
            Some(record[1].to_owned())
        } else {
            None
        };
        let mut choices = Vec::new();
        let mut seen_empty = false;
        for cell in record.iter().skip(fixed) {
            if cell.is_empty() {
                seen_empty = true;
            } else if seen_empty {
                return Err(parse_error(
                    prefs_path,
                    line,
                    format!("student `{id}` has a choice after an empty cell"),
                ));
            } else {
                choices.push(cell.to_owned());
            }
        }
        builder = match group {
            Some(g) => builder.student_in_group(id, g, choices),
            None => builder.student(id, choices),
        };
    }
    Ok(builder.build()?)
}

/// Write the instance back out in the canonical two-file layout.
pub fn write_instance(
    instance: &Instance,
    classes_path: &Path,
    prefs_path: &Path,
) -> Result<(), IoError> {
    let mut out = String::from("class_id,lower,upper,status\n");
    for class in instance.classes() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            class.id,
            class.lower,
            class.upper,
            if class.active { "active" } else { "canceled" }
        ));
    }
    fs::write(classes_path, out)?;

    let has_group = instance.has_groups();
    let mut out = String::from("student_id");
    if has_group {
        out.push_str(",group");
    }
    for i in 1..=instance.k() {
        out.push_str(&format!(",choice_{i}"));
    }
    out.push('\n');
    for (s, id) in instance.students().iter().enumerate() {
        out.push_str(id.as_str());
        if has_group {
            out.push(',');
            out.push_str(instance.group(s).unwrap_or(""));
        }
        let prefs = instance.preference(s);
        for i in 0..instance.k() {
            out.push(',');
            if let Some(&c) = prefs.get(i) {
                out.push_str(instance.class(c).id.as_str());
            }
        }
        out.push('\n');
    }
    fs::write(prefs_path, out)?;
    Ok(())
}

/// Write `student_id,class_id,rank` rows sorted by student id; leftover
/// placements print rank `others`.
pub fn save_matching(instance: &Instance, matching: &Matching, path: &Path) -> Result<(), IoError> {
    let mut rows: Vec<(String, String, String)> = matching
        .iter()
        .map(|(s, c)| {
            let rank = match instance.rank_of(s, c) {
                Some(r) => r.to_string(),
                None => "others".to_owned(),
            };
            (
                instance.students()[s].as_str().to_owned(),
                instance.class(c).id.as_str().to_owned(),
                rank,
            )
        })
        .collect();
    rows.sort();
    let mut file = fs::File::create(path)?;
    writeln!(file, "student_id,class_id,rank")?;
    for (student, class, rank) in rows {
        writeln!(file, "{student},{class},{rank}")?;
    }
    Ok(())
}

/// Read a matching CSV back against its instance.
pub fn load_matching(instance: &Instance, path: &Path) -> Result<Matching, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut assigned = vec![usize::MAX; instance.num_students()];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let s = instance
            .student_index(&record[0])
            .ok_or_else(|| parse_error(path, line, format!("unknown student `{}`", &record[0])))?;
        let c = instance
            .class_index(&record[1])
            .ok_or_else(|| parse_error(path, line, format!("unknown class `{}`", &record[1])))?;
        assigned[s] = c;
    }
    if let Some(s) = assigned.iter().position(|&c| c == usize::MAX) {
        return Err(parse_error(
            path,
            0,
            format!("student `{}` has no row", instance.students()[s]),
        ));
    }
    Ok(Matching::new_checked(
        instance,
        assigned,
        crate::model::MatchingKind::UpperOnly,
    )?)
}

/// Parameters for the synthetic instance generator.
#[derive(Clone, Debug)]
pub struct GenSpec {
    pub students: usize,
    pub classes: usize,
    pub k: usize,
    /// Lower bound applied to every class.
    pub lower: u32,
    /// Capacities are drawn uniformly from this inclusive range.
    pub upper_range: (u32, u32),
    /// Number of classes marked canceled after preferences are drawn.
    pub canceled: usize,
    /// Zipf exponent for class popularity; 0 = uniform.
    pub skew: f64,
    pub seed: u64,
}

/// Generate a deterministic synthetic instance: class popularity follows a
/// Zipf weighting over the class index, and each student samples `k`
/// distinct classes without replacement, ranked in sampling order.
/// Preferences are drawn before cancellation, so canceled classes appear
/// in lists just as they would in a real survey.
pub fn generate_instance(spec: &GenSpec) -> Result<Instance, IoError> {
    if spec.classes == 0 || spec.students == 0 {
        return Err(IoError::Unsatisfiable("need students and classes".into()));
    }
    if spec.k > spec.classes {
        return Err(IoError::Unsatisfiable(format!(
            "k = {} exceeds the {} classes",
            spec.k, spec.classes
        )));
    }
    if spec.upper_range.0 > spec.upper_range.1 {
        return Err(IoError::Unsatisfiable("empty capacity range".into()));
    }
    if spec.canceled >= spec.classes {
        return Err(IoError::Unsatisfiable("every class canceled".into()));
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(spec.seed);

    let width = spec.classes.to_string().len();
    let class_ids: Vec<String> = (1..=spec.classes)
        .map(|i| format!("c{i:0width$}"))
        .collect();
    let (lo, hi) = spec.upper_range;
    let uppers: Vec<u32> = (0..spec.classes)
        .map(|_| lo + rng.bounded((hi - lo + 1) as u64) as u32)
        .collect();

    // Canceled classes are a random draw, fixed by the seed.
    let mut order: Vec<usize> = (0..spec.classes).collect();
    crate::rng::shuffle(&mut order, &mut rng);
    let canceled: Vec<bool> = {
        let mut flags = vec![false; spec.classes];
        for &c in order.iter().take(spec.canceled) {
            flags[c] = true;
        }
        flags
    };

    let weights: Vec<f64> = (1..=spec.classes)
        .map(|i| 1.0 / (i as f64).powf(spec.skew))
        .collect();

    let student_width = spec.students.to_string().len();
    let mut builder = Instance::builder(spec.k);
    for c in 0..spec.classes {
        builder = if canceled[c] {
            builder.canceled_class(class_ids[c].clone(), spec.lower, uppers[c])
        } else {
            builder.class(class_ids[c].clone(), spec.lower, uppers[c])
        };
    }
    for s in 1..=spec.students {
        let mut available: Vec<usize> = (0..spec.classes).collect();
        let mut choices = Vec::with_capacity(spec.k);
        for _ in 0..spec.k {
            let total: f64 = available.iter().map(|&c| weights[c]).sum();
            let mut target = rng.unit_f64() * total;
            let mut picked = available.len() - 1;
            for (slot, &c) in available.iter().enumerate() {
                target -= weights[c];
                if target < 0.0 {
                    picked = slot;
                    break;
                }
            }
            choices.push(class_ids[available.remove(picked)].clone());
        }
        builder = builder.student(format!("s{s:0student_width$}"), choices);
    }
    let instance = builder.build()?;

    let (total_lower, total_upper) = (instance.total_lower(), instance.total_upper());
    if (spec.students as u64) < total_lower || (spec.students as u64) > total_upper {
        return Err(IoError::Unsatisfiable(format!(
            "{} students vs active seat bounds [{total_lower}, {total_upper}]",
            spec.students
        )));
    }
    Ok(instance)
}

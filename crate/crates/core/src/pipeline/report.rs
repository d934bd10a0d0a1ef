//! Tab-separated result tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::eval::{ClassFilter, Fold};
use crate::search::{Configuration, SearchTrace};

use super::cache::FitnessRecord;
use super::Slice;

pub const REPORT_HEADER: &str = "class\tconfiguration\trho_a\trho_b\tmean_rho\tn_scored_a\tn_scored_b\tn_total\tpairs";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub class: ClassFilter,
    pub configuration: Configuration,
    pub rho_a: f64,
    pub rho_b: f64,
    pub n_scored: [usize; 2],
    pub n_total: usize,
    pub pairs: u64,
}

impl ReportRow {
    pub fn mean_rho(&self) -> f64 {
        (self.rho_a + self.rho_b) / 2.0
    }
}

pub(crate) fn fmt_rho(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_owned()
    } else {
        format!("{:.4}", x)
    }
}

fn rank(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Collects one row per (class, configuration) with both folds cached.
/// `only` restricts rows to the given canonical configuration names.
pub fn build_report(
    records: &[FitnessRecord],
    context: &str,
    classes: &[ClassFilter],
    only: Option<&BTreeSet<String>>,
) -> Vec<ReportRow> {
    let mut by_key: BTreeMap<(String, String), &FitnessRecord> = BTreeMap::new();
    let mut configs = BTreeSet::new();
    for r in records.iter().filter(|r| r.context == context) {
        if only.is_some_and(|o| !o.contains(&r.configuration)) {
            continue;
        }
        configs.insert(r.configuration.clone());
        by_key.insert((r.configuration.clone(), r.slice.clone()), r);
    }
    let mut rows = Vec::new();
    for &class in classes {
        for name in &configs {
            let get = |fold| by_key.get(&(name.clone(), Slice { class, fold }.to_string()));
            let (Some(a), Some(b)) = (get(Fold::A), get(Fold::B)) else {
                continue;
            };
            let Ok(configuration) = name.parse::<Configuration>() else {
                continue;
            };
            rows.push(ReportRow {
                class,
                configuration,
                rho_a: a.rho,
                rho_b: b.rho,
                n_scored: [a.n_scored, b.n_scored],
                n_total: a.n_total + b.n_total,
                pairs: a.pairs,
            });
        }
    }
    sort_rows(&mut rows);
    rows
}

/// Class order, then mean rho descending, then canonical form.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|x, y| {
        x.class
            .cmp(&y.class)
            .then(rank(y.mean_rho()).total_cmp(&rank(x.mean_rho())))
            .then_with(|| x.configuration.canonical().cmp(&y.configuration.canonical()))
    });
}

pub fn report_tsv(rows: &[ReportRow]) -> String {
    let mut s = format!("{}\n", REPORT_HEADER);
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.class,
            r.configuration.canonical(),
            fmt_rho(r.rho_a),
            fmt_rho(r.rho_b),
            fmt_rho(r.mean_rho()),
            r.n_scored[0],
            r.n_scored[1],
            r.n_total,
            r.pairs
        );
    }
    s
}

pub const TRACE_HEADER: &str = "step\tconfiguration\tlevel\tfitness\tstatus\torigin";

pub fn trace_tsv(trace: &SearchTrace) -> String {
    let mut s = format!("{}\n", TRACE_HEADER);
    for (i, e) in trace.entries.iter().enumerate() {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            i,
            e.configuration.canonical(),
            e.level,
            e.fitness,
            e.status,
            e.origin.as_ref().map(|o| o.canonical()).unwrap_or_else(|| "-".into())
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::WordClass;

    fn rec(config: &str, slice: &str, rho: f64, pairs: u64) -> FitnessRecord {
        FitnessRecord {
            context: "c".into(),
            configuration: config.into(),
            slice: slice.into(),
            rho,
            n_scored: 3,
            n_total: 4,
            pairs,
            wall_ms: 1,
        }
    }

    #[test]
    fn rows_sorted_by_mean_then_name() {
        let records = vec![
            rec("amod", "A:a", 0.2, 10),
            rec("amod", "A:b", 0.4, 10),
            rec("obj", "A:a", 0.5, 7),
            rec("obj", "A:b", 0.1, 7),
            rec("amod+obj", "A:a", 0.6, 17),
            rec("amod+obj", "A:b", 0.7, 17),
            rec("subj", "A:a", 0.6, 1),
        ];
        let classes = [ClassFilter::Only(WordClass::Adjective)];
        let rows = build_report(&records, "c", &classes, None);
        let names: Vec<String> = rows.iter().map(|r| r.configuration.canonical()).collect();
        assert_eq!(names, vec!["amod+obj", "amod", "obj"]);
        assert!((rows[0].mean_rho() - 0.65).abs() < 1e-12);
        assert_eq!(rows[0].pairs, 17);
        let tsv = report_tsv(&rows);
        assert_eq!(tsv.lines().count(), 4);
        assert!(tsv.lines().nth(1).unwrap().starts_with("A\tamod+obj\t0.6000\t0.7000\t0.6500"));
    }

    #[test]
    fn empty_cache_gives_header_only() {
        let rows = build_report(&[], "c", &[ClassFilter::All], None);
        assert_eq!(report_tsv(&rows), format!("{}\n", REPORT_HEADER));
    }
}

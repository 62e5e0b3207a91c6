use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::ExperimentRecord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKey {
    Problem,
    Method,
    Policy,
    Clusterer,
    Partial,
    Fraction,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Problem => "problem",
            GroupKey::Method => "method",
            GroupKey::Policy => "policy",
            GroupKey::Clusterer => "clusterer",
            GroupKey::Partial => "partial",
            GroupKey::Fraction => "fraction",
        }
    }

    fn value(self, r: &ExperimentRecord) -> String {
        match self {
            GroupKey::Problem => r.problem.clone(),
            GroupKey::Method => r.method.clone(),
            GroupKey::Policy => r.policy.clone(),
            GroupKey::Clusterer => r.clusterer.clone(),
            GroupKey::Partial => r.partial.to_string(),
            GroupKey::Fraction => r.fraction.to_string(),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            GroupKey::Problem,
            GroupKey::Method,
            GroupKey::Policy,
            GroupKey::Clusterer,
            GroupKey::Partial,
            GroupKey::Fraction,
        ]
        .into_iter()
        .find(|k| k.name() == s.trim().to_ascii_lowercase())
        .ok_or_else(|| Error::Config(format!("unknown group key {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group: Vec<String>,
    pub n: usize,
    pub mean_ami: f64,
    pub max_ami: f64,
    /// Sample standard deviation; 0 for a single record.
    pub std_ami: f64,
}

/// Mean, max and standard deviation of AMI per group, groups in order of
/// first appearance. Records without an AMI (failures) are left out.
pub fn summarize(records: &[ExperimentRecord], keys: &[GroupKey]) -> Vec<SummaryRow> {
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<String>, Vec<f64>)> = Vec::new();
    for r in records {
        let Some(a) = r.ami else { continue };
        let key: Vec<String> = keys.iter().map(|k| k.value(r)).collect();
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(a);
    }
    groups
        .into_iter()
        .map(|(group, xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let std = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                group,
                n,
                mean_ami: mean,
                max_ami: max,
                std_ami: std,
            }
        })
        .collect()
}

/// Writes rows as CSV: one column per group key, then the statistics.
pub fn write_summary(rows: &[SummaryRow], keys: &[GroupKey], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = keys.iter().map(|k| k.name()).collect();
    header.extend(["n", "mean_ami", "max_ami", "std_ami"]);
    w.write_record(&header)?;
    for r in rows {
        let mut line = r.group.clone();
        line.extend([
            r.n.to_string(),
            format!("{:.4}", r.mean_ami),
            format!("{:.4}", r.max_ami),
            format!("{:.4}", r.std_ami),
        ]);
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}

/// Problems ranked by descending mean AMI over the selected records.
pub fn problem_order(records: &[ExperimentRecord], baseline: bool) -> Vec<(String, f64)> {
    let chosen: Vec<ExperimentRecord> = records
        .iter()
        .filter(|r| r.is_baseline() == baseline)
        .cloned()
        .collect();
    let mut rows: Vec<(String, f64)> = summarize(&chosen, &[GroupKey::Problem])
        .into_iter()
        .map(|r| (r.group[0].clone(), r.mean_ami))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::PartialMode;

    fn record(method: &str, ami: Option<f64>) -> ExperimentRecord {
        ExperimentRecord {
            problem: "Easy".into(),
            instance: 0,
            seed: 0,
            partial: PartialMode::None,
            fraction: 0.0,
            method: method.into(),
            policy: "none".into(),
            clusterer: "leiden".into(),
            gamma: None,
            n_clusters: None,
            ami,
            ari: None,
            ami_nan: None,
            modularity: None,
            tpr: None,
            assortativity: None,
            mean_path_length: None,
            mean_degree: None,
            median_degree: None,
            min_degree: None,
            iterations: None,
            error: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn twenty_records_one_group() {
        let recs: Vec<_> = (0..20).map(|i| record("mean", Some(i as f64 / 20.0))).collect();
        let rows = summarize(&recs, &[GroupKey::Method]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 20);
        // Mean of 0..19 over 20 is 9.5 / 20.
        assert!((rows[0].mean_ami - 0.475).abs() < 1e-12);
        assert_eq!(rows[0].max_ami, 0.95);
        let var: f64 = (0..20).map(|i| (i as f64 / 20.0 - 0.475).powi(2)).sum::<f64>() / 19.0;
        assert!((rows[0].std_ami - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constants_and_grouping() {
        let mut recs: Vec<_> = (0..5).map(|_| record("snf", Some(0.7))).collect();
        recs.push(record("mean", Some(0.2)));
        recs.push(record("mean", None));
        let rows = summarize(&recs, &[GroupKey::Method]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].group, vec!["snf".to_string()]);
        assert!((rows[0].mean_ami - 0.7).abs() < 1e-15 && rows[0].std_ami < 1e-12);
        assert_eq!(rows[1].n, 1);
        assert!(summarize(&[], &[GroupKey::Method]).is_empty());
    }

    #[test]
    fn table_output() {
        let rows = summarize(&[record("nemo", Some(0.5))], &[GroupKey::Problem, GroupKey::Method]);
        let mut buf = Vec::new();
        write_summary(&rows, &[GroupKey::Problem, GroupKey::Method], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "problem,method,n,mean_ami,max_ami,std_ami\nEasy,nemo,1,0.5000,0.5000,0.0000\n");
    }
}

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{baseline_method, read_records, ExperimentConfig, ExperimentRecord, PartialMode, Plan};
use crate::cluster::{run_clusterer, ClusterParams, Clusterer};
use crate::error::Result;
use crate::evalmetrics::{ami, ari};
use crate::integrate::{Fusion, PartialPolicy, Prepared};
use crate::mmgen::{build_problem, mask_cluster, mask_random, Dataset, Problem};
use crate::netgraph::{graph_stats, knn_graph, GraphStats};

/// Echo of a run written next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub instance_seeds: Vec<u64>,
    pub units: usize,
    pub records_written: usize,
    pub records_skipped: usize,
    pub errors: usize,
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

#[derive(Clone, Copy, Debug)]
struct Unit {
    problem: Problem,
    instance: usize,
    fraction: f64,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    plan: &'a Plan,
    methods: bool,
    baselines: bool,
}

impl Context<'_> {
    fn seed(&self, instance: usize) -> u64 {
        self.cfg.base_seed.wrapping_add(instance as u64)
    }

    fn blank(&self, unit: &Unit, method: &str, policy: &str, clusterer: Clusterer) -> ExperimentRecord {
        ExperimentRecord {
            problem: unit.problem.name().to_string(),
            instance: unit.instance,
            seed: self.seed(unit.instance),
            partial: self.cfg.partial,
            fraction: unit.fraction,
            method: method.to_string(),
            policy: policy.to_string(),
            clusterer: clusterer.name().to_string(),
            gamma: None,
            n_clusters: None,
            ami: None,
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

    fn baselines_apply(&self, unit: &Unit) -> bool {
        self.baselines && (self.cfg.partial == PartialMode::None || unit.fraction == 0.0)
    }

    // Every (method, policy, clusterer) this unit produces, in output order.
    fn slots(&self, unit: &Unit) -> Vec<(String, String, Clusterer)> {
        let mut out = Vec::new();
        if self.methods {
            for &(m, p) in &self.plan.runs {
                for &c in &self.plan.clusterers {
                    out.push((m.name().to_string(), p.name().to_string(), c));
                }
            }
        }
        if self.baselines_apply(unit) {
            for v in 0..unit.problem.specs(&self.cfg.shape).len() {
                for &c in &self.plan.clusterers {
                    out.push((baseline_method(v), PartialPolicy::None.name().to_string(), c));
                }
            }
        }
        out
    }

    fn keys(&self, unit: &Unit) -> Vec<String> {
        self.slots(unit)
            .into_iter()
            .map(|(m, p, c)| self.blank(unit, &m, &p, c).key())
            .collect()
    }

    fn prepare(&self, unit: &Unit) -> Result<Dataset<f64>> {
        let seed = self.seed(unit.instance);
        let ds = build_problem::<f64>(unit.problem, &self.cfg.shape, &self.cfg.generator, seed)?;
        match self.cfg.partial {
            PartialMode::None => Ok(ds),
            PartialMode::Random => mask_random(&ds, unit.fraction, seed),
            PartialMode::Cluster => mask_cluster(&ds, unit.fraction, seed),
        }
    }

    fn run(&self, unit: &Unit, done: &HashSet<String>) -> Vec<ExperimentRecord> {
        let start = Instant::now();
        let prepared = self.prepare(unit).and_then(|ds| {
            let fused = Prepared::new(&ds, &self.cfg.fusion).map(|p| (p.distances, p.affinities))?;
            Ok((ds, fused))
        });
        let setup_time = start.elapsed().as_secs_f64();
        let (ds, (distances, affinities)) = match prepared {
            Ok(v) => v,
            Err(e) => {
                warn!("{} instance {}: {e}", unit.problem, unit.instance);
                return self
                    .slots(unit)
                    .into_iter()
                    .map(|(m, p, c)| ExperimentRecord {
                        error: Some(e.to_string()),
                        wall_time: setup_time,
                        ..self.blank(unit, &m, &p, c)
                    })
                    .filter(|r| !done.contains(&r.key()))
                    .collect();
            }
        };
        let prepared = Prepared {
            dataset: &ds,
            distances,
            affinities,
        };
        let mut out = Vec::new();
        if self.methods {
            for &(method, policy) in &self.plan.runs {
                let pending: Vec<Clusterer> = self
                    .plan
                    .clusterers
                    .iter()
                    .copied()
                    .filter(|&c| !done.contains(&self.blank(unit, method.name(), policy.name(), c).key()))
                    .collect();
                if pending.is_empty() {
                    continue;
                }
                let t = Instant::now();
                let fused = prepared.fuse(method, policy, &self.cfg.fusion);
                let fuse_time = t.elapsed().as_secs_f64();
                out.extend(self.score(unit, &ds, method.name(), policy.name(), &pending, fused, fuse_time));
            }
        }
        if self.baselines_apply(unit) {
            for (v, d) in prepared.distances.iter().enumerate() {
                let name = baseline_method(v);
                let pending: Vec<Clusterer> = self
                    .plan
                    .clusterers
                    .iter()
                    .copied()
                    .filter(|&c| !done.contains(&self.blank(unit, &name, "none", c).key()))
                    .collect();
                if !pending.is_empty() {
                    let fused = Ok(Fusion::plain(d.clone()));
                    out.extend(self.score(unit, &ds, &name, "none", &pending, fused, 0.0));
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn score(
        &self,
        unit: &Unit,
        ds: &Dataset<f64>,
        method: &str,
        policy: &str,
        clusterers: &[Clusterer],
        fused: Result<Fusion<f64>>,
        fuse_time: f64,
    ) -> Vec<ExperimentRecord> {
        let t = Instant::now();
        let network = fused.and_then(|f| {
            let g = knn_graph(&f.matrix, self.cfg.knn_k)?;
            let stats = graph_stats(&g, Some(ds.truth.as_slice()))?;
            Ok((f.iterations, g, stats))
        });
        let graph_time = fuse_time + t.elapsed().as_secs_f64();
        let (iterations, g, stats) = match network {
            Ok(v) => v,
            Err(e) => {
                return clusterers
                    .iter()
                    .map(|&c| ExperimentRecord {
                        error: Some(e.to_string()),
                        wall_time: graph_time,
                        ..self.blank(unit, method, policy, c)
                    })
                    .collect();
            }
        };
        let y_nan = ds.partial_mask.as_ref().map(|m| m.as_labels());
        clusterers
            .iter()
            .map(|&c| {
                let t = Instant::now();
                let mut rec = self.blank(unit, method, policy, c);
                fill_stats(&mut rec, &stats);
                rec.iterations = iterations;
                let params = ClusterParams {
                    seed: rec.seed,
                    ..self.plan.clustering.clone()
                };
                let scored = run_clusterer(&g, c, &params).and_then(|cl| {
                    let labels = cl.labels.as_slice();
                    rec.gamma = cl.gamma;
                    rec.n_clusters = Some(cl.labels.n_clusters());
                    rec.ami = Some(ami(labels, ds.truth.as_slice())?);
                    rec.ari = Some(ari(labels, ds.truth.as_slice())?);
                    rec.ami_nan = y_nan.as_deref().map(|y| ami(labels, y)).transpose()?;
                    Ok(())
                });
                if let Err(e) = scored {
                    rec.error = Some(e.to_string());
                }
                rec.wall_time = graph_time + t.elapsed().as_secs_f64();
                rec
            })
            .collect()
    }
}

fn fill_stats(rec: &mut ExperimentRecord, s: &GraphStats) {
    rec.modularity = s.modularity;
    rec.tpr = s.tpr;
    rec.assortativity = s.assortativity;
    rec.mean_path_length = s.mean_path_length;
    rec.mean_degree = Some(s.mean_degree);
    rec.median_degree = Some(s.median_degree);
    rec.min_degree = Some(s.min_degree);
}

fn units(cfg: &ExperimentConfig, plan: &Plan) -> Vec<Unit> {
    let mut units = Vec::new();
    for &problem in &plan.problems {
        for instance in 0..cfg.n_instances {
            for &fraction in &plan.fractions {
                units.push(Unit {
                    problem,
                    instance,
                    fraction,
                });
            }
        }
    }
    units
}

/// Number of records a fresh run of `cfg` produces (baselines included when
/// `cfg.baselines` is set), without running anything.
pub fn planned_records(cfg: &ExperimentConfig) -> Result<usize> {
    let plan = cfg.resolve()?;
    let ctx = Context {
        cfg,
        plan: &plan,
        methods: true,
        baselines: cfg.baselines,
    };
    Ok(units(cfg, &plan).iter().map(|u| ctx.slots(u).len()).sum())
}

fn execute(cfg: &ExperimentConfig, methods: bool, baselines: bool) -> Result<Vec<ExperimentRecord>> {
    let plan = cfg.resolve()?;
    let ctx = Context {
        cfg,
        plan: &plan,
        methods,
        baselines,
    };
    let units = units(cfg, &plan);

    let done: HashSet<String> = match &cfg.output {
        Some(path) if cfg.resume && path.exists() => read_records(path)?.iter().map(|r| r.key()).collect(),
        _ => HashSet::new(),
    };
    let pending: Vec<Unit> = units
        .iter()
        .copied()
        .filter(|u| ctx.keys(u).iter().any(|k| !done.contains(k)))
        .collect();
    let skipped = units.iter().map(|u| ctx.keys(u).len()).sum::<usize>()
        - pending
            .iter()
            .map(|u| ctx.keys(u).iter().filter(|k| !done.contains(*k)).count())
            .sum::<usize>();
    info!("{} of {} units to run, {skipped} records already present", pending.len(), units.len());

    let mut writer = match &cfg.output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let append = cfg.resume && path.exists() && fs::metadata(path)?.len() > 0;
            let file = OpenOptions::new()
                .create(true)
                .write(true)
                .append(append)
                .truncate(!append)
                .open(path)?;
            Some(csv::WriterBuilder::new().has_headers(!append).from_writer(file))
        }
        None => None,
    };

    // Batches run in parallel but are written in unit order, so the output
    // never depends on scheduling.
    let batch = rayon::current_num_threads().max(1);
    let mut all = Vec::new();
    for chunk in pending.chunks(batch) {
        let results: Vec<Vec<ExperimentRecord>> = chunk.par_iter().map(|u| ctx.run(u, &done)).collect();
        for records in results {
            if let Some(w) = writer.as_mut() {
                for r in &records {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            all.extend(records);
        }
    }

    if let Some(path) = &cfg.output {
        let manifest = RunManifest {
            format: "simfuse-run/1".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            instance_seeds: (0..cfg.n_instances).map(|i| ctx.seed(i)).collect(),
            units: units.len(),
            records_written: all.len(),
            records_skipped: skipped,
            errors: all.iter().filter(|r| r.error.is_some()).count(),
        };
        fs::write(manifest_path(path), serde_json::to_string_pretty(&manifest)?)?;
    }
    Ok(all)
}

/// Runs the configured grid (plus baselines when `cfg.baselines` is set),
/// appending records to `cfg.output` batch by batch. Failures become records
/// with an `error` message; the run carries on.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    execute(cfg, true, cfg.baselines)
}

/// One record per (instance, modality, clusterer), each network built from a
/// single modality's distances.
pub fn single_modality_baseline(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    execute(cfg, false, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmgen::ProblemShape;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            problems: vec!["Easy".into()],
            n_instances: 1,
            methods: vec!["mean".into()],
            clusterers: vec!["leiden".into()],
            shape: ProblemShape {
                n_entities: 300,
                ..ProblemShape::desk()
            },
            ..ExperimentConfig::desk()
        }
    }

    fn without_time(mut r: Vec<ExperimentRecord>) -> Vec<ExperimentRecord> {
        for x in &mut r {
            x.wall_time = 0.0;
        }
        r
    }

    #[test]
    fn single_run_fills_every_field() {
        let recs = run_experiment(&small()).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert!(r.error.is_none(), "{:?}", r.error);
        assert_eq!((r.method.as_str(), r.clusterer.as_str()), ("mean", "leiden"));
        assert!(r.gamma.is_some() && r.n_clusters.is_some());
        assert!(r.ami.unwrap() > 0.5 && r.ari.is_some());
        assert!(r.modularity.is_some() && r.tpr.is_some() && r.assortativity.is_some());
        assert!(r.mean_path_length.is_some() && r.mean_degree.is_some() && r.median_degree.is_some());
        assert!(r.min_degree.unwrap() >= 15);
        assert!(r.ami_nan.is_none() && r.iterations.is_none());
    }

    #[test]
    fn repeat_runs_match_and_resume_skips() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        let cfg = ExperimentConfig {
            methods: vec!["mean".into(), "snf".into()],
            output: Some(out.clone()),
            ..small()
        };
        let first = run_experiment(&cfg).unwrap();
        assert_eq!(first.len(), 2);
        assert!(first.iter().all(|r| r.error.is_none()));
        assert!(first[1].iterations.is_some());
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(without_time(first.clone()), without_time(again));
        assert_eq!(without_time(read_records(&out).unwrap()), without_time(first.clone()));

        let resumed = run_experiment(&ExperimentConfig { resume: true, ..cfg.clone() }).unwrap();
        assert!(resumed.is_empty());
        assert_eq!(read_records(&out).unwrap().len(), 2);
        let manifest: RunManifest =
            serde_json::from_str(&fs::read_to_string(manifest_path(&out)).unwrap()).unwrap();
        assert_eq!((manifest.records_written, manifest.records_skipped), (0, 2));

        // Adding a method to a finished run only computes the new keys.
        let wider = ExperimentConfig {
            methods: vec!["mean".into(), "snf".into(), "nemo".into()],
            resume: true,
            ..cfg
        };
        let added = run_experiment(&wider).unwrap();
        assert_eq!(added.len(), 1);
        assert_eq!(added[0].method, "nemo");
        assert_eq!(read_records(&out).unwrap().len(), 3);
    }

    #[test]
    fn baseline_per_modality() {
        let recs = single_modality_baseline(&small()).unwrap();
        let names: Vec<_> = recs.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(names, ["modality_0", "modality_1", "modality_2"]);
        assert!(recs.iter().all(|r| r.ami.is_some() && r.is_baseline()));
    }

    #[test]
    fn planned_grid_sizes() {
        let full = ExperimentConfig::full();
        assert_eq!(planned_records(&full).unwrap(), 15 * 5 * 2 * 20);
        let with_base = ExperimentConfig {
            baselines: true,
            ..ExperimentConfig::desk()
        };
        assert_eq!(planned_records(&with_base).unwrap(), 15 * (5 + 3) * 2 * 10);
        let partial = ExperimentConfig {
            problems: vec!["partial".into()],
            partial: PartialMode::Random,
            fractions: vec![0.0, 0.2, 0.4],
            policies: vec!["partial".into()],
            baselines: true,
            ..ExperimentConfig::desk()
        };
        // Six method/policy pairs per fraction, baselines on the unmasked fraction only.
        assert_eq!(planned_records(&partial).unwrap(), 5 * 10 * (6 * 3 + 3) * 2);
    }
}

//! Qualitative symbols and the two-layer knowledge base.
//!
//! Sub-categorization clusters each property's scalar values with exact 1-D
//! K-means and names the clusters from an ordered vocabulary, so that
//! `0.76, 3.17, 7.69` with three clusters becomes `soft, medium, rigid`.
//! Conceptualization then summarizes the instances of a class as label
//! proportions per property (marginals) and per property pair (joints).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::write_atomic;
use crate::error::{Error, Result};
use crate::geometry::RansacParams;
use crate::properties::{
    derive_functional, extract_physical, normalize, ExtractionConfig, FunctionalProfile,
    NormalizationContext, PhysicalProfile,
};
use crate::sensing::{parse_json, read_json, MeasurementRecord};

pub const KB_VERSION: u32 = 1;
pub const DEFAULT_K: usize = 3;
pub const SUM_TOLERANCE: f64 = 1e-9;

pub const PHYSICAL_PROPERTIES: [&str; 6] =
    ["size", "flatness", "hollowness", "rigidity", "roughness", "weight"];
pub const FUNCTIONAL_PROPERTIES: [&str; 4] = ["support", "containment", "movability", "blockage"];
pub const SIZE_AXES: [&str; 3] = ["length", "width", "height"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// The smallest centroid gets the first label.
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// One model per property over all instances of all classes.
    #[default]
    Corpus,
    /// One model per property and class.
    Class,
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "corpus" => Ok(Scope::Corpus),
            "class" => Ok(Scope::Class),
            other => Err(format!("unknown scope `{other}` (expected corpus or class)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeModel {
    pub property: String,
    /// Set for class-scoped models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_name: Option<String>,
    pub k: usize,
    pub centroids: Vec<f64>,
    pub labels: Vec<String>,
    pub orientation: Orientation,
}

impl QualitativeModel {
    /// Index of the nearest centroid, ties to the lower one.
    pub fn cluster_of(&self, value: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centroids.iter().enumerate() {
            let d = (value - c).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn label_of_cluster(&self, cluster: usize) -> &str {
        match self.orientation {
            Orientation::Ascending => &self.labels[cluster],
            Orientation::Descending => &self.labels[self.k - 1 - cluster],
        }
    }

    pub fn label_for(&self, value: f64) -> &str {
        self.label_of_cluster(self.cluster_of(value))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subcategorization {
    pub model: QualitativeModel,
    /// `(instance_id, label)` in input order.
    pub assignments: Vec<(String, String)>,
}

/// Clusters one property's values into `k` ordered labels.
///
/// In one dimension the K-means optimum is a split of the sorted distinct
/// values into contiguous runs, so it is found exactly by dynamic programming
/// rather than by restarts. That makes the partition independent of any seed
/// and of positive affine rescaling of the values.
pub fn subcategorize(
    property: &str,
    values: &[(String, f64)],
    k: usize,
    labels: &[String],
    orientation: Orientation,
) -> Result<Subcategorization> {
    if labels.len() != k {
        return Err(Error::InsufficientData(format!(
            "{property}: {} labels given for {k} clusters",
            labels.len()
        )));
    }
    if k == 0 || values.len() < k {
        return Err(Error::InsufficientData(format!(
            "{property}: {} values cannot form {k} clusters",
            values.len()
        )));
    }
    if let Some((id, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidGeometry(format!("{property}: {id} has non-finite value {v}")));
    }
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    let mut sorted: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
    sorted.sort_by(f64::total_cmp);
    for v in sorted {
        match distinct.last_mut() {
            Some((last, n)) if *last == v => *n += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() < k {
        return Err(Error::InsufficientData(format!(
            "{property}: {} distinct values cannot form {k} clusters",
            distinct.len()
        )));
    }
    let model = QualitativeModel {
        property: property.to_owned(),
        class_name: None,
        k,
        centroids: optimal_1d_centroids(&distinct, k),
        labels: labels.to_vec(),
        orientation,
    };
    let assignments = values
        .iter()
        .map(|(id, v)| (id.clone(), model.label_for(*v).to_owned()))
        .collect();
    Ok(Subcategorization { model, assignments })
}

/// Means of the minimum-SSE split of weighted sorted `values` into `k` runs.
/// Near-equal costs (relative to the total SSE) keep the earliest split.
fn optimal_1d_centroids(values: &[(f64, usize)], k: usize) -> Vec<f64> {
    let m = values.len();
    let total_w: f64 = values.iter().map(|&(_, w)| w as f64).sum();
    let center = values.iter().map(|&(v, w)| v * w as f64).sum::<f64>() / total_w;
    // prefix sums over centered values keep the cancellation in `cost` small
    let mut w = vec![0.0; m + 1];
    let mut s1 = vec![0.0; m + 1];
    let mut s2 = vec![0.0; m + 1];
    for (i, &(v, n)) in values.iter().enumerate() {
        let (x, n) = (v - center, n as f64);
        w[i + 1] = w[i] + n;
        s1[i + 1] = s1[i] + n * x;
        s2[i + 1] = s2[i] + n * x * x;
    }
    // SSE of values[i..j]
    let cost = |i: usize, j: usize| {
        let (n, s) = (w[j] - w[i], s1[j] - s1[i]);
        (s2[j] - s2[i] - s * s / n).max(0.0)
    };
    let tol = 1e-12 * cost(0, m);

    // best[c][j]: cost of splitting values[..j] into c + 1 runs; start[c][j]: where the last run begins
    let mut best = vec![vec![f64::INFINITY; m + 1]; k];
    let mut start = vec![vec![0usize; m + 1]; k];
    for j in 1..=m {
        best[0][j] = cost(0, j);
    }
    for c in 1..k {
        for j in c + 1..=m {
            for i in c..j {
                let candidate = best[c - 1][i] + cost(i, j);
                if candidate < best[c][j] - tol {
                    best[c][j] = candidate;
                    start[c][j] = i;
                }
            }
        }
    }
    let mut bounds = vec![m];
    let mut j = m;
    for c in (1..k).rev() {
        j = start[c][j];
        bounds.push(j);
    }
    bounds.push(0);
    bounds.reverse();
    bounds
        .windows(2)
        .map(|r| {
            let run = &values[r[0]..r[1]];
            let n: f64 = run.iter().map(|&(_, w)| w as f64).sum();
            run.iter().map(|&(v, w)| v * w as f64).sum::<f64>() / n
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSymbols {
    pub instance_id: String,
    pub class_name: String,
    /// property → label
    pub labels: BTreeMap<String, String>,
    /// Retained scalars (physical, functional and auxiliary values).
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub counts: BTreeMap<String, usize>,
    pub proportions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCell {
    pub labels: [String; 2],
    pub count: usize,
    pub proportion: f64,
}

/// Joint label frequencies of one unordered property pair (`properties[0] < properties[1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub properties: [String; 2],
    pub cells: Vec<JointCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassConcept {
    pub class_name: String,
    pub instance_count: usize,
    pub marginals: BTreeMap<String, Marginal>,
    pub joints: Vec<Joint>,
}

impl ClassConcept {
    pub fn joint(&self, a: &str, b: &str) -> Option<&Joint> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.joints.iter().find(|j| j.properties[0] == a && j.properties[1] == b)
    }
}

pub fn conceptualize(instances: &[InstanceSymbols], class_name: &str) -> Result<ClassConcept> {
    let members: Vec<&InstanceSymbols> =
        instances.iter().filter(|i| i.class_name == class_name).collect();
    if members.is_empty() {
        return Err(Error::EmptyClass(class_name.to_owned()));
    }
    let n = members.len();
    let properties: BTreeSet<&String> = members.iter().flat_map(|i| i.labels.keys()).collect();

    let mut marginals = BTreeMap::new();
    for &prop in &properties {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for m in &members {
            if let Some(label) = m.labels.get(prop) {
                *counts.entry(label.clone()).or_insert(0) += 1;
            }
        }
        let proportions = counts.iter().map(|(l, c)| (l.clone(), *c as f64 / n as f64)).collect();
        marginals.insert(prop.clone(), Marginal { counts, proportions });
    }

    let props: Vec<&String> = properties.into_iter().collect();
    let mut joints = Vec::new();
    for (i, a) in props.iter().enumerate() {
        for b in &props[i + 1..] {
            let mut counts: BTreeMap<[String; 2], usize> = BTreeMap::new();
            for m in &members {
                if let (Some(la), Some(lb)) = (m.labels.get(*a), m.labels.get(*b)) {
                    *counts.entry([la.clone(), lb.clone()]).or_insert(0) += 1;
                }
            }
            joints.push(Joint {
                properties: [(*a).clone(), (*b).clone()],
                cells: counts
                    .into_iter()
                    .map(|(labels, count)| JointCell {
                        labels,
                        count,
                        proportion: count as f64 / n as f64,
                    })
                    .collect(),
            });
        }
    }
    Ok(ClassConcept {
        class_name: class_name.to_owned(),
        instance_count: n,
        marginals,
        joints,
    })
}

// ---------------------------------------------------------------------------
// Knowledge base

/// Build parameters, echoed into every knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbConfig {
    pub k: usize,
    pub scope: Scope,
    pub seed: u64,
    pub delta0_mm: f64,
    pub ransac_threshold_m: f64,
    pub ransac_iterations: usize,
    /// Also symbolize length, width and height individually.
    pub size_axes: bool,
    /// Overrides of the default vocabularies, keyed by property.
    #[serde(default)]
    pub vocabularies: BTreeMap<String, Vec<String>>,
    /// Per-property cluster counts overriding `k`.
    #[serde(default)]
    pub k_overrides: BTreeMap<String, usize>,
}

impl Default for KbConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            scope: Scope::Corpus,
            seed: crate::DEFAULT_SEED,
            delta0_mm: crate::properties::DEFAULT_DELTA0_MM,
            ransac_threshold_m: crate::geometry::DEFAULT_RANSAC_THRESHOLD_M,
            ransac_iterations: crate::geometry::DEFAULT_RANSAC_ITERATIONS,
            size_axes: false,
            vocabularies: BTreeMap::new(),
            k_overrides: BTreeMap::new(),
        }
    }
}

impl KbConfig {
    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            delta0_mm: self.delta0_mm,
            ransac: RansacParams {
                threshold_m: self.ransac_threshold_m,
                iterations: self.ransac_iterations,
                seed: self.seed,
            },
        }
    }

    pub fn properties(&self) -> Vec<&'static str> {
        let mut props: Vec<&'static str> = PHYSICAL_PROPERTIES.to_vec();
        props.extend(FUNCTIONAL_PROPERTIES);
        if self.size_axes {
            props.extend(SIZE_AXES);
        }
        props
    }

    pub fn k_for(&self, property: &str) -> usize {
        self.k_overrides.get(property).copied().unwrap_or(self.k)
    }

    /// Ordered labels for `property` with `k` clusters.
    pub fn vocabulary(&self, property: &str, k: usize) -> Vec<String> {
        let base: Vec<String> = self
            .vocabularies
            .get(property)
            .cloned()
            .unwrap_or_else(|| default_vocabulary(property).iter().map(|s| s.to_string()).collect());
        if base.len() == k {
            base
        } else if k < base.len() {
            spread(&base, k)
        } else {
            (0..k).map(|i| format!("level_{i}")).collect()
        }
    }
}

pub fn default_vocabulary(property: &str) -> [&'static str; 3] {
    match property {
        "rigidity" => ["soft", "medium", "rigid"],
        "weight" => ["light", "medium", "heavy"],
        "roughness" => ["smooth", "medium", "rough"],
        "flatness" => ["curved", "mixed", "flat"],
        "hollowness" => ["solid", "dented", "hollow"],
        "size" | "length" | "width" | "height" => ["small", "medium", "large"],
        _ => ["low", "medium", "high"],
    }
}

/// `k` labels picked evenly from an ordered vocabulary; one label picks the middle.
fn spread(vocab: &[String], k: usize) -> Vec<String> {
    let last = vocab.len() - 1;
    if k == 1 {
        return vec![vocab[last / 2].clone()];
    }
    (0..k)
        .map(|i| vocab[(i * last + (k - 1) / 2) / (k - 1)].clone())
        .collect()
}

/// Scalar used to symbolize `property`.
fn property_value(property: &str, p: &PhysicalProfile, f: &FunctionalProfile) -> f64 {
    match property {
        "size" => p.size.volume(),
        "length" => p.size.length_m,
        "width" => p.size.width_m,
        "height" => p.size.height_m,
        "flatness" => p.flatness,
        "hollowness" => p.hollowness,
        "rigidity" => p.rigidity,
        "roughness" => p.roughness_deg,
        "weight" => p.weight_g,
        "support" => f.support,
        "containment" => f.containment,
        "movability" => f.movability,
        "blockage" => f.blockage,
        other => unreachable!("unknown property {other}"),
    }
}

fn retained_values(p: &PhysicalProfile, f: &FunctionalProfile) -> BTreeMap<String, f64> {
    [
        ("length", p.size.length_m),
        ("width", p.size.width_m),
        ("height", p.size.height_m),
        ("size", p.size.volume()),
        ("footprint_area", p.size.footprint_area()),
        ("flatness", p.flatness),
        ("hollowness", p.hollowness),
        ("rigidity", p.rigidity),
        ("deformation_mm", p.deformation_mm),
        ("roughness", p.roughness_deg),
        ("weight", p.weight_g),
        ("support", f.support),
        ("containment", f.containment),
        ("movability", f.movability),
        ("blockage", f.blockage),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBase {
    pub version: u32,
    pub config: KbConfig,
    pub normalization: Option<NormalizationContext>,
    pub models: Vec<QualitativeModel>,
    pub instances: Vec<InstanceSymbols>,
    pub classes: Vec<ClassConcept>,
}

impl KnowledgeBase {
    pub fn empty(config: KbConfig) -> Self {
        KnowledgeBase {
            version: KB_VERSION,
            config,
            normalization: None,
            models: Vec::new(),
            instances: Vec::new(),
            classes: Vec::new(),
        }
    }

    pub fn class(&self, name: &str) -> Option<&ClassConcept> {
        self.classes.iter().find(|c| c.class_name == name)
    }

    pub fn model(&self, property: &str, class_name: &str) -> Option<&QualitativeModel> {
        self.models.iter().find(|m| {
            m.property == property && m.class_name.as_deref().is_none_or(|c| c == class_name)
        })
    }

    /// Checks every structural invariant. Errors carry a JSON-pointer path.
    pub fn validate(&self, source: &Path) -> Result<()> {
        let fail = |path: String, constraint: String| Err(Error::validation(source, path, constraint));
        if self.version != KB_VERSION {
            return fail("/version".into(), format!("unsupported version {}, expected {KB_VERSION}", self.version));
        }
        for (i, m) in self.models.iter().enumerate() {
            if m.k == 0 || m.labels.len() != m.k || m.centroids.len() != m.k {
                return fail(
                    format!("/models/{i}"),
                    format!("k = {} must equal the number of labels ({}) and centroids ({})", m.k, m.labels.len(), m.centroids.len()),
                );
            }
            if m.centroids.iter().any(|c| !c.is_finite()) || m.centroids.windows(2).any(|w| !(w[0] < w[1])) {
                return fail(format!("/models/{i}/centroids"), "centroids must be finite and strictly ascending".into());
            }
        }

        let mut per_class: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, inst) in self.instances.iter().enumerate() {
            *per_class.entry(inst.class_name.as_str()).or_insert(0) += 1;
            if self.class(&inst.class_name).is_none() {
                return fail(
                    format!("/instances/{i}/class_name"),
                    format!("class `{}` has no class entry", inst.class_name),
                );
            }
            for (prop, label) in &inst.labels {
                let Some(model) = self.model(prop, &inst.class_name) else {
                    return fail(format!("/instances/{i}/labels/{prop}"), format!("no model for property `{prop}`"));
                };
                if !model.labels.contains(label) {
                    return fail(
                        format!("/instances/{i}/labels/{prop}"),
                        format!("label `{label}` is not in the model vocabulary {:?}", model.labels),
                    );
                }
            }
            if let Some((k, v)) = inst.values.iter().find(|(_, v)| !v.is_finite()) {
                return fail(format!("/instances/{i}/values/{k}"), format!("must be finite, got {v}"));
            }
        }

        for (ci, class) in self.classes.iter().enumerate() {
            let base = format!("/classes/{ci}");
            if class.instance_count == 0 {
                return fail(format!("{base}/instance_count"), "instance_count must be at least 1".into());
            }
            if per_class.get(class.class_name.as_str()).copied().unwrap_or(0) != class.instance_count {
                return fail(
                    format!("{base}/instance_count"),
                    format!("{} instances recorded but {} listed for class `{}`",
                        class.instance_count, per_class.get(class.class_name.as_str()).copied().unwrap_or(0), class.class_name),
                );
            }
            for (prop, marginal) in &class.marginals {
                let path = format!("{base}/marginals/{prop}/proportions");
                check_distribution(source, &path, marginal.proportions.values().copied())?;
                let counted: usize = marginal.counts.values().sum();
                if counted != class.instance_count {
                    return fail(format!("{base}/marginals/{prop}/counts"), format!("counts sum to {counted}, expected {}", class.instance_count));
                }
            }
            for (ji, joint) in class.joints.iter().enumerate() {
                let path = format!("{base}/joints/{ji}");
                check_distribution(source, &path, joint.cells.iter().map(|c| c.proportion))?;
                for (side, prop) in joint.properties.iter().enumerate() {
                    let Some(marginal) = class.marginals.get(prop) else {
                        return fail(format!("{path}/properties/{side}"), format!("no marginal for `{prop}`"));
                    };
                    let mut summed: BTreeMap<&str, f64> = BTreeMap::new();
                    for cell in &joint.cells {
                        *summed.entry(cell.labels[side].as_str()).or_insert(0.0) += cell.proportion;
                    }
                    for (label, p) in &marginal.proportions {
                        let q = summed.get(label.as_str()).copied().unwrap_or(0.0);
                        if (p - q).abs() > SUM_TOLERANCE {
                            return fail(
                                format!("{path}/cells"),
                                format!("joint does not marginalize to `{prop}`: label `{label}` has {q}, marginal {p}"),
                            );
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_distribution(source: &Path, path: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    let values: Vec<f64> = values.collect();
    let sum: f64 = values.iter().sum();
    if !((sum - 1.0).abs() <= SUM_TOLERANCE) {
        return Err(Error::validation(
            source,
            path,
            format!("distribution-sum invariant violated: proportions sum to {sum}, expected 1 ± {SUM_TOLERANCE}"),
        ));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::validation(source, path, format!("proportion {v} outside [0, 1]")));
    }
    Ok(())
}

/// Runs extraction, normalization, sub-categorization and conceptualization.
pub fn build_kb(records: &[MeasurementRecord], config: &KbConfig) -> Result<KnowledgeBase> {
    if records.is_empty() {
        return Err(Error::EmptyInput("build_kb"));
    }
    if config.k == 0 || config.k_overrides.values().any(|&k| k == 0) {
        return Err(Error::InsufficientData("k must be at least 1".into()));
    }
    let mut records: Vec<&MeasurementRecord> = records.iter().collect();
    records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    if let Some(w) = records.windows(2).find(|w| w[0].instance_id == w[1].instance_id) {
        return Err(Error::validation("<records>", "/instance_id", format!("duplicate instance_id `{}`", w[0].instance_id)));
    }

    let extraction = config.extraction();
    let physical: Vec<PhysicalProfile> = records
        .par_iter()
        .map(|r| extract_physical(r, &extraction))
        .collect::<Result<_>>()?;
    let ctx = normalize(&physical)?;
    let functional: Vec<FunctionalProfile> = physical.iter().map(|p| derive_functional(p, &ctx)).collect();

    let mut instances: Vec<InstanceSymbols> = records
        .iter()
        .zip(physical.iter().zip(&functional))
        .map(|(r, (p, f))| InstanceSymbols {
            instance_id: r.instance_id.clone(),
            class_name: r.class_name.clone(),
            labels: BTreeMap::new(),
            values: retained_values(p, f),
        })
        .collect();

    let class_names: Vec<String> = instances
        .iter()
        .map(|i| i.class_name.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let groups: Vec<(Option<&String>, Vec<usize>)> = match config.scope {
        Scope::Corpus => vec![(None, (0..instances.len()).collect())],
        Scope::Class => class_names
            .iter()
            .map(|c| (Some(c), (0..instances.len()).filter(|&i| &instances[i].class_name == c).collect()))
            .collect(),
    };

    let properties = config.properties();
    let mut tasks = Vec::new();
    for property in &properties {
        for (class, members) in &groups {
            tasks.push((*property, *class, members));
        }
    }
    let results: Vec<Subcategorization> = tasks
        .par_iter()
        .map(|&(property, class, members)| {
            let values: Vec<(String, f64)> = members
                .iter()
                .map(|&i| (instances[i].instance_id.clone(), property_value(property, &physical[i], &functional[i])))
                .collect();
            let distinct = values.iter().map(|(_, v)| v.to_bits()).collect::<BTreeSet<_>>().len();
            let k = config.k_for(property).min(distinct);
            let labels = config.vocabulary(property, config.k_for(property));
            let labels = if k < labels.len() { spread(&labels, k) } else { labels };
            let mut sub = subcategorize(property, &values, k, &labels, Orientation::Ascending)?;
            sub.model.class_name = class.cloned();
            Ok(sub)
        })
        .collect::<Result<_>>()?;

    let index: BTreeMap<String, usize> =
        instances.iter().enumerate().map(|(i, inst)| (inst.instance_id.clone(), i)).collect();
    let mut models = Vec::with_capacity(results.len());
    for sub in results {
        for (id, label) in &sub.assignments {
            instances[index[id]].labels.insert(sub.model.property.clone(), label.clone());
        }
        models.push(sub.model);
    }

    let classes = class_names
        .iter()
        .map(|c| conceptualize(&instances, c))
        .collect::<Result<Vec<_>>>()?;
    let kb = KnowledgeBase {
        version: KB_VERSION,
        config: config.clone(),
        normalization: Some(ctx),
        models,
        instances,
        classes,
    };
    kb.validate(Path::new("<built>"))?;
    Ok(kb)
}

pub fn kb_to_json(kb: &KnowledgeBase) -> String {
    let mut text = serde_json::to_string_pretty(kb).expect("knowledge base serializes");
    text.push('\n');
    text
}

/// Validates, then writes the knowledge base atomically.
pub fn save_kb(kb: &KnowledgeBase, path: &Path) -> Result<()> {
    kb.validate(path)?;
    write_atomic(path, kb_to_json(kb).as_bytes())
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    let kb: KnowledgeBase = read_json(path)?;
    kb.validate(path)?;
    Ok(kb)
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase> {
    let source = Path::new("<kb>");
    let kb: KnowledgeBase = parse_json(text, source)?;
    kb.validate(source)?;
    Ok(kb)
}

// ---------------------------------------------------------------------------
// Queries

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult<'a> {
    pub concept: &'a ClassConcept,
    /// Other classes ordered by L1 distance between marginal vectors.
    pub nearest: Vec<(&'a str, f64)>,
}

/// L1 distance between two classes' marginals, summed over properties and labels.
pub fn marginal_distance(a: &ClassConcept, b: &ClassConcept) -> f64 {
    let props: BTreeSet<&String> = a.marginals.keys().chain(b.marginals.keys()).collect();
    let empty = BTreeMap::new();
    props
        .into_iter()
        .map(|p| {
            let pa = a.marginals.get(p).map_or(&empty, |m| &m.proportions);
            let pb = b.marginals.get(p).map_or(&empty, |m| &m.proportions);
            let labels: BTreeSet<&String> = pa.keys().chain(pb.keys()).collect();
            labels
                .into_iter()
                .map(|l| (pa.get(l).unwrap_or(&0.0) - pb.get(l).unwrap_or(&0.0)).abs())
                .sum::<f64>()
        })
        .sum()
}

pub fn query<'a>(kb: &'a KnowledgeBase, class_name: &str, nearest: usize) -> Result<QueryResult<'a>> {
    let concept = kb
        .class(class_name)
        .or_else(|| kb.classes.iter().find(|c| c.class_name.eq_ignore_ascii_case(class_name)))
        .ok_or_else(|| Error::NotFound {
            name: class_name.to_owned(),
            known: kb.classes.iter().map(|c| c.class_name.clone()).collect(),
        })?;
    let mut others: Vec<(&str, f64)> = kb
        .classes
        .iter()
        .filter(|c| c.class_name != concept.class_name)
        .map(|c| (c.class_name.as_str(), marginal_distance(concept, c)))
        .collect();
    others.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
    others.truncate(nearest);
    Ok(QueryResult {
        concept,
        nearest: others,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(v: &[f64]) -> Vec<(String, f64)> {
        v.iter().enumerate().map(|(i, x)| (format!("i{i}"), *x)).collect()
    }

    fn words(w: &[&str]) -> Vec<String> {
        w.iter().map(|s| s.to_string()).collect()
    }

    fn inst(id: &str, class: &str, labels: &[(&str, &str)]) -> InstanceSymbols {
        InstanceSymbols {
            instance_id: id.into(),
            class_name: class.into(),
            labels: labels.iter().map(|(p, l)| (p.to_string(), l.to_string())).collect(),
            values: BTreeMap::new(),
        }
    }

    #[test]
    fn rigidity_table_example() {
        let s = subcategorize(
            "rigidity",
            &vals(&[0.76, 3.17, 7.69]),
            3,
            &words(&["soft", "medium", "rigid"]),
            Orientation::Ascending,
        )
        .unwrap();
        let labels: Vec<&str> = s.assignments.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(labels, ["soft", "medium", "rigid"]);
        assert_eq!(s.model.centroids, vec![0.76, 3.17, 7.69]);
    }

    #[test]
    fn descending_orientation_reverses_labels() {
        let s = subcategorize(
            "deformation",
            &vals(&[0.5, 4.0, 9.0]),
            3,
            &words(&["rigid", "medium", "soft"]),
            Orientation::Descending,
        )
        .unwrap();
        let labels: Vec<&str> = s.assignments.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(labels, ["soft", "medium", "rigid"]);
    }

    #[test]
    fn identical_values_single_cluster() {
        let s = subcategorize("w", &vals(&[2.0; 4]), 1, &words(&["medium"]), Orientation::Ascending).unwrap();
        assert!(s.assignments.iter().all(|(_, l)| l == "medium"));
    }

    #[test]
    fn three_pairs_in_value_order() {
        let s = subcategorize(
            "x",
            &vals(&[1.0, 1.1, 5.0, 5.1, 9.0, 9.2]),
            3,
            &words(&["a", "b", "c"]),
            Orientation::Ascending,
        )
        .unwrap();
        let labels: Vec<&str> = s.assignments.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(labels, ["a", "a", "b", "b", "c", "c"]);
    }

    #[test]
    fn too_few_values() {
        let r = subcategorize("x", &vals(&[1.0, 2.0]), 3, &words(&["a", "b", "c"]), Orientation::Ascending);
        assert!(matches!(r, Err(Error::InsufficientData(_))));
        let r = subcategorize("x", &vals(&[1.0, 1.0, 2.0]), 3, &words(&["a", "b", "c"]), Orientation::Ascending);
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn cup_marginals_are_uniform() {
        let cups = [
            inst("ceramic_cup_1", "Ceramic Cup", &[("rigidity", "soft")]),
            inst("ceramic_cup_2", "Ceramic Cup", &[("rigidity", "medium")]),
            inst("ceramic_cup_3", "Ceramic Cup", &[("rigidity", "rigid")]),
        ];
        let c = conceptualize(&cups, "Ceramic Cup").unwrap();
        let m = &c.marginals["rigidity"].proportions;
        for label in ["soft", "medium", "rigid"] {
            assert_eq!(m[label], 1.0 / 3.0);
        }
    }

    #[test]
    fn single_instance_is_a_point_mass() {
        let one = [inst("b", "Ball", &[("rigidity", "soft"), ("weight", "light")])];
        let c = conceptualize(&one, "Ball").unwrap();
        assert!(c.marginals.values().all(|m| m.proportions.values().all(|&p| p == 1.0)));
        assert_eq!(c.joint("weight", "rigidity").unwrap().cells[0].proportion, 1.0);
    }

    #[test]
    fn hand_counted_joint() {
        let four = [
            inst("1", "Plank", &[("rigidity", "rigid"), ("flatness", "flat")]),
            inst("2", "Plank", &[("rigidity", "rigid"), ("flatness", "flat")]),
            inst("3", "Plank", &[("rigidity", "rigid"), ("flatness", "curved")]),
            inst("4", "Plank", &[("rigidity", "rigid"), ("flatness", "curved")]),
        ];
        let c = conceptualize(&four, "Plank").unwrap();
        let j = c.joint("rigidity", "flatness").unwrap();
        assert_eq!(j.properties, ["flatness".to_string(), "rigidity".to_string()]);
        let cell = j.cells.iter().find(|c| c.labels == ["flat".to_string(), "rigid".to_string()]).unwrap();
        assert_eq!(cell.proportion, 0.5);
        assert_eq!(cell.count, 2);
    }

    #[test]
    fn empty_class() {
        assert!(matches!(conceptualize(&[], "Cup"), Err(Error::EmptyClass(_))));
    }

    #[test]
    fn vocabulary_spreading() {
        let cfg = KbConfig::default();
        assert_eq!(cfg.vocabulary("rigidity", 3), words(&["soft", "medium", "rigid"]));
        let v = words(&["soft", "medium", "rigid"]);
        assert_eq!(spread(&v, 1), words(&["medium"]));
        assert_eq!(spread(&v, 2), words(&["soft", "rigid"]));
        assert_eq!(cfg.vocabulary("weight", 5).len(), 5);
    }

    #[test]
    fn empty_kb_is_valid() {
        let kb = KnowledgeBase::empty(KbConfig::default());
        kb.validate(Path::new("x")).unwrap();
        let text = kb_to_json(&kb);
        assert!(text.contains("\"instances\": []"));
        assert!(text.contains("\"classes\": []"));
        assert_eq!(parse_kb(&text).unwrap(), kb);
    }

    #[test]
    fn scope_parses() {
        assert_eq!("class".parse::<Scope>().unwrap(), Scope::Class);
        assert!("global".parse::<Scope>().is_err());
    }
}

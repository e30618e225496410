//! Herding-based exemplar selection and class feature means.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset, Sample};
use crate::error::{Error, Result};
use crate::model::FeatureExtractor;
use crate::nn::{l2_norm, squared_distance};

/// Arithmetic mean of equal-length vectors. Not renormalized.
pub fn class_mean(features: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = features.first().ok_or(Error::NoSamples)?;
    let mut acc = vec![0.0; first.len()];
    for f in features {
        if f.len() != acc.len() {
            return Err(Error::shape("feature length", acc.len(), f.len()));
        }
        for (a, v) in acc.iter_mut().zip(f) {
            *a += v;
        }
    }
    let n = features.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Greedy herding. At step `k` picks the not-yet-chosen sample whose
/// addition brings the running average of chosen features closest to the
/// class mean; ties go to the lowest index. Returns `min(k, n)` indices in
/// selection order.
pub fn herd_select(features: &[Vec<f64>], k: usize) -> Result<Vec<usize>> {
    if k < 1 {
        return Err(Error::Param(format!("herding needs k >= 1, got {k}")));
    }
    let mu = class_mean(features)?;
    let dim = mu.len();
    let n = features.len();
    let mut chosen = vec![false; n];
    let mut running = vec![0.0; dim];
    let mut picked = Vec::with_capacity(k.min(n));
    let mut candidate = vec![0.0; dim];

    for step in 1..=k.min(n) {
        let inv = 1.0 / step as f64;
        let mut best: Option<(f64, usize)> = None;
        for (i, f) in features.iter().enumerate() {
            if chosen[i] {
                continue;
            }
            for ((c, r), v) in candidate.iter_mut().zip(&running).zip(f) {
                *c = (r + v) * inv;
            }
            let d = squared_distance(&mu, &candidate);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        let (_, idx) = best.expect("at least one candidate remains");
        chosen[idx] = true;
        for (r, v) in running.iter_mut().zip(&features[idx]) {
            *r += v;
        }
        picked.push(idx);
    }
    Ok(picked)
}

/// Per-class exemplar lists of at most `capacity` samples, in herding order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarStore {
    capacity: usize,
    per_class: BTreeMap<ClassId, Vec<Sample>>,
    class_order: Vec<ClassId>,
    under_capacity: Vec<ClassId>,
}

impl ExemplarStore {
    pub fn new(capacity: usize) -> Self {
        ExemplarStore {
            capacity,
            per_class: BTreeMap::new(),
            class_order: Vec::new(),
            under_capacity: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn class_order(&self) -> &[ClassId] {
        &self.class_order
    }

    pub fn exemplars(&self, class: ClassId) -> &[Sample] {
        self.per_class.get(&class).map_or(&[], Vec::as_slice)
    }

    /// Classes that had fewer than `capacity` samples available.
    pub fn under_capacity(&self) -> &[ClassId] {
        &self.under_capacity
    }

    /// Total number of cached samples.
    pub fn len(&self) -> usize {
        self.per_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached samples in class-arrival order.
    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.class_order.iter().flat_map(|c| self.exemplars(*c))
    }

    /// Herds `capacity` exemplars for each new class, in the given order.
    /// Existing classes are never touched; on error the store is unchanged.
    pub fn update(&mut self, new_classes: &[(ClassId, Vec<&Sample>)], extractor: &dyn FeatureExtractor) -> Result<()> {
        for (i, (class, _)) in new_classes.iter().enumerate() {
            if self.per_class.contains_key(class) || new_classes[..i].iter().any(|(c, _)| c == class) {
                return Err(Error::DuplicateClass(*class));
            }
        }
        let mut staged = Vec::with_capacity(new_classes.len());
        for (class, samples) in new_classes {
            if samples.is_empty() {
                return Err(Error::EmptyClass(*class));
            }
            let cached: Vec<Sample> = if self.capacity == 0 {
                Vec::new()
            } else {
                let features = samples
                    .iter()
                    .map(|s| extractor.extract(s).map(|f| f.vector))
                    .collect::<Result<Vec<_>>>()?;
                herd_select(&features, self.capacity)?
                    .into_iter()
                    .map(|i| samples[i].clone())
                    .collect()
            };
            staged.push((*class, cached, samples.len() < self.capacity));
        }
        for (class, cached, under) in staged {
            if under {
                log::warn!(
                    "class {class}: only {} samples available for {} exemplar slots",
                    cached.len(),
                    self.capacity
                );
                self.under_capacity.push(class);
            }
            self.per_class.insert(class, cached);
            self.class_order.push(class);
        }
        Ok(())
    }

    pub fn to_cache(&self) -> ExemplarCache {
        ExemplarCache {
            capacity: self.capacity,
            classes: self
                .class_order
                .iter()
                .map(|&class| CachedClass {
                    class,
                    sample_ids: self.exemplars(class).iter().map(|s| s.id).collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds a store from cached ids without re-herding.
    pub fn from_cache(cache: &ExemplarCache, dataset: &Dataset) -> Result<Self> {
        let by_id: BTreeMap<u64, &Sample> = dataset.samples().iter().map(|s| (s.id, s)).collect();
        let mut store = ExemplarStore::new(cache.capacity);
        for entry in &cache.classes {
            if store.per_class.contains_key(&entry.class) {
                return Err(Error::DuplicateClass(entry.class));
            }
            let samples = entry
                .sample_ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id)
                        .map(|s| (*s).clone())
                        .ok_or_else(|| Error::Format(format!("exemplar cache names unknown sample {id}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if samples.len() < cache.capacity {
                store.under_capacity.push(entry.class);
            }
            store.per_class.insert(entry.class, samples);
            store.class_order.push(entry.class);
        }
        Ok(store)
    }
}

/// Serializable form of a store: ordered sample ids per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarCache {
    pub capacity: usize,
    pub classes: Vec<CachedClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedClass {
    pub class: ClassId,
    pub sample_ids: Vec<u64>,
}

/// One mean feature per class, in class-arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeanMatrix {
    pub class_order: Vec<ClassId>,
    pub means: Vec<Vec<f64>>,
    pub feature_dim: usize,
}

impl FeatureMeanMatrix {
    pub fn new(class_order: Vec<ClassId>, means: Vec<Vec<f64>>, feature_dim: usize) -> Result<Self> {
        if class_order.len() != means.len() {
            return Err(Error::shape("mean matrix rows", class_order.len(), means.len()));
        }
        for m in &means {
            if m.len() != feature_dim {
                return Err(Error::shape("mean length", feature_dim, m.len()));
            }
        }
        Ok(FeatureMeanMatrix {
            class_order,
            means,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn mean_of(&self, class: ClassId) -> Option<&[f64]> {
        self.class_order
            .iter()
            .position(|&c| c == class)
            .map(|i| self.means[i].as_slice())
    }
}

/// Recomputes every class mean from the cached exemplars with the current
/// extractor. `renormalize` rescales each mean to unit length.
pub fn compute_mean_matrix(
    store: &ExemplarStore,
    extractor: &dyn FeatureExtractor,
    renormalize: bool,
) -> Result<FeatureMeanMatrix> {
    if store.class_order.is_empty() {
        return Err(Error::Param("exemplar store is empty".into()));
    }
    let mut means = Vec::with_capacity(store.class_order.len());
    for &class in &store.class_order {
        let exemplars = store.exemplars(class);
        if exemplars.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        let features = exemplars
            .iter()
            .map(|s| extractor.extract(s).map(|f| f.vector))
            .collect::<Result<Vec<_>>>()?;
        let mut mu = class_mean(&features)?;
        if renormalize {
            let n = l2_norm(&mu);
            if n > 0.0 {
                mu.iter_mut().for_each(|v| *v /= n);
            }
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite mean for class {class}")));
        }
        means.push(mu);
    }
    FeatureMeanMatrix::new(store.class_order.clone(), means, extractor.feature_dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InputView, RawExtractor};
    use proptest::prelude::*;

    fn sample(id: u64, label: ClassId, v: Vec<f64>) -> Sample {
        Sample {
            id,
            label,
            group: 0,
            modalities: vec![v],
        }
    }

    fn raw(dim: usize) -> RawExtractor {
        RawExtractor {
            view: InputView::Modality(0),
            dim,
        }
    }

    /// Recomputes the greedy objective from scratch for every candidate.
    fn oracle_herd(features: &[Vec<f64>], k: usize) -> Vec<usize> {
        let n = features.len();
        let dim = features[0].len();
        let mu: Vec<f64> = (0..dim)
            .map(|d| features.iter().map(|f| f[d]).sum::<f64>() / n as f64)
            .collect();
        let mut picked: Vec<usize> = Vec::new();
        for step in 1..=k.min(n) {
            let mut best = usize::MAX;
            let mut best_val = f64::INFINITY;
            for i in 0..n {
                if picked.contains(&i) {
                    continue;
                }
                let val: f64 = (0..dim)
                    .map(|d| {
                        let s: f64 = picked.iter().map(|&p| features[p][d]).sum::<f64>() + features[i][d];
                        let e = mu[d] - s / step as f64;
                        e * e
                    })
                    .sum::<f64>()
                    .sqrt();
                if val < best_val {
                    best_val = val;
                    best = i;
                }
            }
            picked.push(best);
        }
        picked
    }

    #[test]
    fn class_mean_cases() {
        assert_eq!(class_mean(&[vec![0.3, 0.4]]).unwrap(), vec![0.3, 0.4]);
        assert_eq!(class_mean(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(class_mean(&[]), Err(Error::NoSamples)));
        assert!(class_mean(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn class_mean_matches_accumulate_and_divide() {
        let mut r = crate::rng::from_seed(17);
        use rand::Rng as _;
        let feats: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                let v: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
                let n = l2_norm(&v);
                v.iter().map(|x| x / n).collect()
            })
            .collect();
        let got = class_mean(&feats).unwrap();
        for d in 0..6 {
            let mut s = 0.0;
            for f in &feats {
                s += f[d];
            }
            assert!((got[d] - s / 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn herd_single_and_ties() {
        assert_eq!(herd_select(&[vec![1.0, 0.0]], 1).unwrap(), vec![0]);
        let same = vec![vec![0.6, 0.8]; 5];
        assert_eq!(herd_select(&same, 3).unwrap(), vec![0, 1, 2]);
        assert!(herd_select(&same, 0).is_err());
        assert_eq!(herd_select(&same[..2], 4).unwrap().len(), 2);
    }

    #[test]
    fn herd_fixed_2d_matches_oracle() {
        let feats: Vec<Vec<f64>> = [0.1f64, 0.5, 1.3, 2.0, 2.9, 4.4]
            .iter()
            .map(|a| vec![a.cos(), a.sin()])
            .collect();
        let got = herd_select(&feats, 3).unwrap();
        assert_eq!(got, oracle_herd(&feats, 3));
        assert_eq!(got.len(), 3);
    }

    proptest! {
        #[test]
        fn herd_prefix_and_oracle(seed in any::<u64>(), n in 1usize..9, dim in 1usize..5, k in 1usize..6) {
            use rand::Rng as _;
            let mut r = crate::rng::from_seed(seed);
            let feats: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
            let a = herd_select(&feats, k).unwrap();
            let b = herd_select(&feats, k + 1).unwrap();
            prop_assert_eq!(&b[..a.len()], &a[..]);
            prop_assert_eq!(a.clone(), oracle_herd(&feats, k));
            let mut sorted = a.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), a.len());
        }
    }

    #[test]
    fn update_store_behaviour() {
        let mut store = ExemplarStore::new(2);
        store.update(&[], &raw(2)).unwrap();
        assert_eq!(store, ExemplarStore::new(2));

        let a: Vec<Sample> = (0..4).map(|i| sample(i, 0, vec![1.0, i as f64 * 0.1])).collect();
        let b = [sample(10, 1, vec![0.0, 1.0])];
        store
            .update(&[(0, a.iter().collect()), (1, b.iter().collect())], &raw(2))
            .unwrap();
        assert_eq!(store.class_order(), &[0, 1]);
        assert_eq!(store.exemplars(0).len(), 2);
        assert_eq!(store.exemplars(1).len(), 1);
        assert_eq!(store.under_capacity(), &[1]);

        let before = store.clone();
        let err = store.update(&[(1, b.iter().collect())], &raw(2)).unwrap_err();
        assert!(matches!(err, Error::DuplicateClass(1)));
        assert_eq!(store, before);

        let c: Vec<Sample> = (20..25).map(|i| sample(i, 2, vec![-1.0, 0.5])).collect();
        store.update(&[(2, c.iter().collect())], &raw(2)).unwrap();
        assert_eq!(store.exemplars(0), before.exemplars(0));
        assert_eq!(store.exemplars(1), before.exemplars(1));
    }

    #[test]
    fn cache_round_trip() {
        let samples: Vec<Sample> = (0..6).map(|i| sample(i, (i % 2) as u32, vec![1.0, i as f64])).collect();
        let ds = Dataset::new(2, vec![2], samples.clone()).unwrap();
        let mut store = ExemplarStore::new(2);
        let c0: Vec<&Sample> = samples.iter().filter(|s| s.label == 0).collect();
        let c1: Vec<&Sample> = samples.iter().filter(|s| s.label == 1).collect();
        store.update(&[(1, c1), (0, c0)], &raw(2)).unwrap();
        let cache = store.to_cache();
        let json = serde_json::to_string(&cache).unwrap();
        let back: ExemplarCache = serde_json::from_str(&json).unwrap();
        assert_eq!(ExemplarStore::from_cache(&back, &ds).unwrap(), store);
    }

    #[test]
    fn mean_matrix_cases() {
        let mut store = ExemplarStore::new(3);
        let s = sample(0, 0, vec![3.0, 4.0]);
        store.update(&[(0, vec![&s])], &raw(2)).unwrap();
        let m = compute_mean_matrix(&store, &raw(2), false).unwrap();
        assert_eq!(m.means, vec![vec![0.6, 0.8]]);

        let mut store = ExemplarStore::new(3);
        let a = sample(0, 0, vec![2.0, 0.0]);
        let b = sample(1, 1, vec![0.0, 5.0]);
        store.update(&[(0, vec![&a]), (1, vec![&b])], &raw(2)).unwrap();
        let m = compute_mean_matrix(&store, &raw(2), false).unwrap();
        assert_eq!(m.means, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(m.mean_of(1), Some(&[0.0, 1.0][..]));

        assert!(compute_mean_matrix(&ExemplarStore::new(3), &raw(2), false).is_err());
        let mut empty = ExemplarStore::new(0);
        empty.update(&[(0, vec![&a])], &raw(2)).unwrap();
        assert!(matches!(
            compute_mean_matrix(&empty, &raw(2), false),
            Err(Error::EmptyClass(0))
        ));
    }

    #[test]
    fn mean_matrix_is_class_mean_per_class() {
        use rand::Rng as _;
        let mut r = crate::rng::from_seed(23);
        let samples: Vec<Sample> = (0..30)
            .map(|i| sample(i, (i % 3) as u32, (0..4).map(|_| r.random_range(-1.0..1.0)).collect()))
            .collect();
        let mut store = ExemplarStore::new(4);
        let groups: Vec<(ClassId, Vec<&Sample>)> = (0..3)
            .map(|c| (c, samples.iter().filter(|s| s.label == c).collect()))
            .collect();
        store.update(&groups, &raw(4)).unwrap();
        let m = compute_mean_matrix(&store, &raw(4), false).unwrap();
        for (i, &c) in store.class_order().iter().enumerate() {
            let feats: Vec<Vec<f64>> = store
                .exemplars(c)
                .iter()
                .map(|s| raw(4).extract(s).unwrap().vector)
                .collect();
            assert_eq!(m.means[i], class_mean(&feats).unwrap());
        }
        let renorm = compute_mean_matrix(&store, &raw(4), true).unwrap();
        for mu in &renorm.means {
            assert!((l2_norm(mu) - 1.0).abs() < 1e-12);
        }
    }
}

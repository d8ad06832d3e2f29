//! Floor classification: the accuracy oracle that scores an AP selection.
//!
//! Both classifiers see sentinel-substituted RSS (not-detected becomes
//! `rss_min - 1`), the same transform the redundancy statistics use.

mod forest;
mod knn;

pub use forest::{ForestClassifier, ForestParams};
pub use knn::KnnClassifier;

use serde::{Deserialize, Serialize};

use crate::dataset::{reduce, FingerprintDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    Knn,
    Forest,
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(ClassifierKind::Knn),
            "forest" => Ok(ClassifierKind::Forest),
            other => Err(Error::Config(format!(
                "unknown classifier {other:?} (expected knn or forest)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub k_neighbors: usize,
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            kind: ClassifierKind::Knn,
            k_neighbors: 3,
            trees: 100,
            max_depth: None,
            seed: 0,
        }
    }
}

impl ClassifierSpec {
    pub fn knn(k: usize) -> Self {
        ClassifierSpec {
            kind: ClassifierKind::Knn,
            k_neighbors: k,
            ..Self::default()
        }
    }

    pub fn forest(trees: usize, seed: u64) -> Self {
        ClassifierSpec {
            kind: ClassifierKind::Forest,
            trees,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ClassifierKind::Knn if self.k_neighbors == 0 => {
                Err(Error::Config("k_neighbors must be >= 1".into()))
            }
            ClassifierKind::Forest if self.trees == 0 => {
                Err(Error::Config("forest needs at least one tree".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
enum Model {
    Knn(KnnClassifier),
    Forest(ForestClassifier),
}

/// A trained floor classifier, tied to the AP columns it was fitted on.
#[derive(Debug, Clone)]
pub struct Classifier {
    model: Model,
    ap_ids: Vec<String>,
    floor_names: Vec<String>,
}

pub fn train(spec: &ClassifierSpec, data: &FingerprintDataset) -> Result<Classifier> {
    spec.validate()?;
    if data.n_samples() == 0 {
        return Err(Error::Localizer("empty training set".into()));
    }
    if data.floors_present() < 2 {
        return Err(Error::Localizer(
            "training set contains a single floor".into(),
        ));
    }
    let features = data.substituted_features();
    let n_features = data.n_aps();
    let labels = data.labels().to_vec();
    let n_classes = data.n_floors();
    let model = match spec.kind {
        ClassifierKind::Knn => Model::Knn(KnnClassifier::fit(
            spec.k_neighbors,
            features,
            n_features,
            labels,
            n_classes,
        )),
        ClassifierKind::Forest => Model::Forest(ForestClassifier::fit(
            &ForestParams {
                trees: spec.trees,
                max_depth: spec.max_depth,
                max_features: None,
                seed: spec.seed,
            },
            &features,
            n_features,
            &labels,
            n_classes,
        )),
    };
    Ok(Classifier {
        model,
        ap_ids: data.ap_ids().to_vec(),
        floor_names: data.floor_names().to_vec(),
    })
}

impl Classifier {
    pub fn ap_ids(&self) -> &[String] {
        &self.ap_ids
    }

    fn check_columns(&self, data: &FingerprintDataset) -> Result<()> {
        if data.ap_ids() != self.ap_ids.as_slice() {
            return Err(Error::Localizer(format!(
                "column mismatch: classifier trained on {} APs, test set has {} ({})",
                self.ap_ids.len(),
                data.n_aps(),
                if data.n_aps() == self.ap_ids.len() {
                    "different ids"
                } else {
                    "different count"
                }
            )));
        }
        if data.floor_names() != self.floor_names.as_slice() {
            return Err(Error::Localizer("floor label vocabularies differ".into()));
        }
        Ok(())
    }

    /// Predicted floor codes for every row.
    pub fn predict(&self, data: &FingerprintDataset) -> Result<Vec<usize>> {
        self.check_columns(data)?;
        let features = data.substituted_features();
        Ok(match &self.model {
            Model::Knn(m) => m.predict(&features),
            Model::Forest(m) => m.predict(&features),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorAccuracy {
    pub floor: String,
    pub support: usize,
    /// `None` when the floor has no test samples.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub per_floor: Vec<FloorAccuracy>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub n_aps_used: usize,
    pub n_test: usize,
}

pub fn evaluate(clf: &Classifier, test: &FingerprintDataset) -> Result<AccuracyReport> {
    let predicted = clf.predict(test)?;
    let f = clf.floor_names.len();
    let mut confusion = vec![vec![0u64; f]; f];
    for (&t, &p) in test.labels().iter().zip(&predicted) {
        confusion[t][p] += 1;
    }
    let total = predicted.len();
    let correct: u64 = (0..f).map(|i| confusion[i][i]).sum();
    let per_floor = (0..f)
        .map(|i| {
            let support: u64 = confusion[i].iter().sum();
            FloorAccuracy {
                floor: clf.floor_names[i].clone(),
                support: support as usize,
                accuracy: (support > 0).then(|| confusion[i][i] as f64 / support as f64),
            }
        })
        .collect();
    Ok(AccuracyReport {
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
        per_floor,
        confusion,
        n_aps_used: clf.ap_ids.len(),
        n_test: total,
    })
}

/// reduce -> train -> evaluate for one selection vector.
pub fn accuracy_report_for_selection(
    x: &[u8],
    train_set: &FingerprintDataset,
    test_set: &FingerprintDataset,
    spec: &ClassifierSpec,
) -> Result<AccuracyReport> {
    let train_r = reduce(train_set, x)?;
    let test_r = reduce(test_set, x)?;
    let clf = train(spec, &train_r)?;
    evaluate(&clf, &test_r)
}

pub fn accuracy_for_selection(
    x: &[u8],
    train_set: &FingerprintDataset,
    test_set: &FingerprintDataset,
    spec: &ClassifierSpec,
) -> Result<f64> {
    accuracy_report_for_selection(x, train_set, test_set, spec).map(|r| r.accuracy)
}

/// Scores selections. Implemented by [`Localizer`]; tests substitute their own.
pub trait AccuracyOracle: Send + Sync {
    fn n_aps(&self) -> usize;
    fn accuracy(&self, x: &[u8]) -> Result<f64>;
}

/// Held-out floor accuracy on a fixed train/test split.
#[derive(Debug, Clone)]
pub struct Localizer {
    pub train: FingerprintDataset,
    pub test: FingerprintDataset,
    pub spec: ClassifierSpec,
}

impl Localizer {
    pub fn new(
        train: FingerprintDataset,
        test: FingerprintDataset,
        spec: ClassifierSpec,
    ) -> Result<Self> {
        spec.validate()?;
        if train.ap_ids() != test.ap_ids() {
            return Err(Error::Localizer("train and test columns differ".into()));
        }
        Ok(Localizer { train, test, spec })
    }

    pub fn report(&self, x: &[u8]) -> Result<AccuracyReport> {
        accuracy_report_for_selection(x, &self.train, &self.test, &self.spec)
    }
}

impl AccuracyOracle for Localizer {
    fn n_aps(&self) -> usize {
        self.train.n_aps()
    }

    fn accuracy(&self, x: &[u8]) -> Result<f64> {
        accuracy_for_selection(x, &self.train, &self.test, &self.spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::RssRange;

    fn clustered() -> (FingerprintDataset, FingerprintDataset) {
        // two floors, far apart in RSS space
        let mut rss = Vec::new();
        let mut floors = Vec::new();
        for i in 0..40 {
            let f = i % 2;
            let base = if f == 0 { -90.0 } else { -30.0 };
            let jitter = (i as f64 * 0.37).sin() * 3.0;
            rss.extend([base + jitter, base - jitter, 100.0]);
            floors.push(f.to_string());
        }
        let d = FingerprintDataset::new(
            rss,
            vec!["A".into(), "B".into(), "C".into()],
            floors,
            RssRange::default(),
        )
        .unwrap();
        crate::dataset::split(&d, 0.25, 1).unwrap()
    }

    #[test]
    fn knn_separable_clusters() {
        let (tr, te) = clustered();
        let clf = train(&ClassifierSpec::knn(3), &tr).unwrap();
        let rep = evaluate(&clf, &te).unwrap();
        assert_eq!(rep.accuracy, 1.0);
        assert_eq!(rep.n_aps_used, 3);
        let sum: u64 = rep.confusion.iter().flatten().sum();
        assert_eq!(sum as usize, te.n_samples());
    }

    #[test]
    fn knn_self_prediction() {
        let (tr, _) = clustered();
        let clf = train(&ClassifierSpec::knn(1), &tr).unwrap();
        assert_eq!(evaluate(&clf, &tr).unwrap().accuracy, 1.0);
    }

    #[test]
    fn forest_separable_and_deterministic() {
        let (tr, te) = clustered();
        let spec = ClassifierSpec::forest(20, 4);
        let a = train(&spec, &tr).unwrap().predict(&te).unwrap();
        let b = train(&spec, &tr).unwrap().predict(&te).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, te.labels());
    }

    #[test]
    fn single_floor_training_rejected() {
        let (tr, _) = clustered();
        let rows: Vec<usize> = (0..tr.n_samples())
            .filter(|&r| tr.labels()[r] == 0)
            .collect();
        let one = tr.subset_rows(&rows);
        assert!(matches!(
            train(&ClassifierSpec::knn(3), &one),
            Err(Error::Localizer(_))
        ));
    }

    #[test]
    fn column_mismatch() {
        let (tr, te) = clustered();
        let clf = train(&ClassifierSpec::knn(3), &tr).unwrap();
        let te2 = te.select_columns(&[0, 1]);
        let err = evaluate(&clf, &te2).unwrap_err();
        assert!(matches!(err, Error::Localizer(_)));
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn selection_accuracy() {
        let (tr, te) = clustered();
        let spec = ClassifierSpec::knn(3);
        let full = accuracy_for_selection(&[1, 1, 1], &tr, &te, &spec).unwrap();
        let direct = evaluate(&train(&spec, &tr).unwrap(), &te).unwrap().accuracy;
        assert_eq!(full, direct);
        assert!(matches!(
            accuracy_for_selection(&[0, 0, 0], &tr, &te, &spec),
            Err(Error::EmptySelection)
        ));
        // the all-sentinel column alone: every query ties, first training row wins
        let only_c = accuracy_for_selection(&[0, 0, 1], &tr, &te, &spec).unwrap();
        assert!(only_c <= 0.6);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "knn".parse::<ClassifierKind>().unwrap(),
            ClassifierKind::Knn
        );
        assert!("svm".parse::<ClassifierKind>().is_err());
        assert!(ClassifierSpec::knn(0).validate().is_err());
        assert!(ClassifierSpec::forest(0, 1).validate().is_err());
    }
}

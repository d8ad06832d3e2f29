//! Synthetic fingerprints with known structure, for tests and demos.
//!
//! Columns come in three groups, in this order:
//! * informative APs: AP `j` is strong on floor `j mod f` and weak on every
//!   other floor, plus Gaussian noise. With one AP per floor the centred
//!   level vectors form a simplex, so every pair correlates equally (at most
//!   `1 / (f - 1)` before noise).
//! * redundant APs: affine copies `a * v + b + e` (`0 < a < 1`) of an
//!   informative AP `v`, with a little independent noise `e`, cycling over the
//!   informative set. The extra noise keeps each copy strictly less
//!   informative than its source while the correlation stays high.
//! * noise APs: uniform in a narrow band, independent of the floor.
//!
//! Every sample also carries a device offset shared by all of its APs (a
//! receiver gain bias). It correlates the noise APs with the rest without
//! giving them floor information, so they cost redundancy to select.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{FingerprintDataset, RssRange};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub samples: usize,
    pub floors: usize,
    pub informative: usize,
    pub redundant: usize,
    pub noise: usize,
    /// Standard deviation (dB) around each informative level.
    pub informative_noise_db: f64,
    /// Range `[lo, hi)` of the copy scale `a`.
    pub redundant_scale: [f64; 2],
    /// Independent noise (dB) added to each redundant copy.
    pub redundant_noise_db: f64,
    /// Standard deviation (dB) of the per-sample offset common to all APs.
    pub device_offset_db: f64,
    /// Band `[lo, hi]` of the noise APs.
    pub noise_band: [f64; 2],
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            samples: 2000,
            floors: 5,
            informative: 5,
            redundant: 10,
            noise: 5,
            informative_noise_db: 12.0,
            redundant_scale: [0.6, 0.7],
            redundant_noise_db: 5.0,
            device_offset_db: 6.0,
            noise_band: [-100.0, -88.0],
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: FingerprintDataset,
    pub informative: Vec<usize>,
    /// `(column, source informative column)`.
    pub redundant: Vec<(usize, usize)>,
    pub noise: Vec<usize>,
}

const STRONG_DBM: f64 = -40.0;
const WEAK_DBM: f64 = -85.0;

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    if cfg.floors < 2 {
        return Err(Error::Config("synthetic data needs >= 2 floors".into()));
    }
    if cfg.samples < 2 * cfg.floors {
        return Err(Error::Config("too few samples for the floor count".into()));
    }
    if cfg.informative == 0 && cfg.redundant > 0 {
        return Err(Error::Config(
            "redundant APs need informative sources".into(),
        ));
    }
    let n = cfg.informative + cfg.redundant + cfg.noise;
    if n == 0 {
        return Err(Error::Config("synthetic data needs at least one AP".into()));
    }
    let [scale_lo, scale_hi] = cfg.redundant_scale;
    if !(scale_lo > 0.0 && scale_lo < scale_hi && scale_hi <= 1.0) {
        return Err(Error::Config(
            "redundant scale must be an interval within (0, 1]".into(),
        ));
    }
    let [band_lo, band_hi] = cfg.noise_band;
    let range = RssRange::default();
    if !(band_lo < band_hi && band_lo >= range.min && band_hi <= range.max) {
        return Err(Error::Config(format!(
            "noise band must be an interval within [{}, {}]",
            range.min, range.max
        )));
    }
    let normal = Normal::new(0.0, cfg.informative_noise_db.max(0.0))
        .map_err(|e| Error::Config(e.to_string()))?;
    let copy_noise = Normal::new(0.0, cfg.redundant_noise_db.max(0.0))
        .map_err(|e| Error::Config(e.to_string()))?;
    let offset_noise = Normal::new(0.0, cfg.device_offset_db.max(0.0))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.samples;
    let labels: Vec<usize> = (0..m).map(|i| i % cfg.floors).collect();
    let offsets: Vec<f64> = (0..m).map(|_| offset_noise.sample(&mut rng)).collect();

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..cfg.informative {
        let home = j % cfg.floors;
        columns.push(
            labels
                .iter()
                .zip(&offsets)
                .map(|(&l, &o)| {
                    let level = if l == home { STRONG_DBM } else { WEAK_DBM };
                    let v = level + o + normal.sample(&mut rng);
                    v.clamp(range.min, range.max)
                })
                .collect(),
        );
    }
    let mut redundant = Vec::with_capacity(cfg.redundant);
    for r in 0..cfg.redundant {
        let source = r % cfg.informative;
        let a: f64 = rng.random_range(cfg.redundant_scale[0]..cfg.redundant_scale[1]);
        let b: f64 = -rng.random_range(0.0..(-range.min * (1.0 - a)));
        let copy = columns[source]
            .iter()
            .map(|v| (a * v + b + copy_noise.sample(&mut rng)).clamp(range.min, range.max))
            .collect();
        redundant.push((cfg.informative + r, source));
        columns.push(copy);
    }
    for _ in 0..cfg.noise {
        columns.push(
            offsets
                .iter()
                .map(|o| (rng.random_range(band_lo..band_hi) + o).clamp(range.min, range.max))
                .collect(),
        );
    }

    let mut rss = Vec::with_capacity(m * n);
    for r in 0..m {
        rss.extend(columns.iter().map(|c| c[r]));
    }
    let ap_ids = (1..=n).map(|i| format!("WAP{i:03}")).collect();
    let floors = labels.iter().map(|l| l.to_string()).collect();
    let dataset = FingerprintDataset::new(rss, ap_ids, floors, range)?;
    Ok(SyntheticDataset {
        dataset,
        informative: (0..cfg.informative).collect(),
        redundant,
        noise: (cfg.informative + cfg.redundant..n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::discretize;
    use crate::stats::{importance_vector, redundancy_matrix};

    #[test]
    fn layout_and_determinism() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.dataset.n_aps(), 20);
        assert_eq!(a.dataset.n_samples(), 2000);
        assert_eq!(a.dataset.n_floors(), 5);
        assert_eq!(a.informative, vec![0, 1, 2, 3, 4]);
        assert_eq!(a.noise, vec![15, 16, 17, 18, 19]);
        assert_eq!(a.redundant[0], (5, 0));
    }

    #[test]
    fn copies_are_highly_redundant() {
        let s = generate(&SyntheticConfig::default()).unwrap();
        let r = redundancy_matrix(&s.dataset);
        for &(c, src) in &s.redundant {
            assert!(r.get(c, src) > 0.9);
        }
        let imp = importance_vector(&discretize(&s.dataset, 10).unwrap());
        for &i in &s.noise {
            assert!(imp.get(i) > 0.0 && imp.get(i) < 0.1);
        }
        for &j in &s.informative {
            assert!(imp.get(j) > 0.3);
        }
    }

    #[test]
    fn bad_configs() {
        let c = SyntheticConfig {
            floors: 1,
            ..SyntheticConfig::default()
        };
        assert!(generate(&c).is_err());
        let c = SyntheticConfig {
            informative: 0,
            ..SyntheticConfig::default()
        };
        assert!(generate(&c).is_err());
        let c = SyntheticConfig {
            noise_band: [-200.0, 0.0],
            ..SyntheticConfig::default()
        };
        assert!(generate(&c).is_err());
    }
}

//! Classification datasets: MNIST ingestion from IDX files, a synthetic
//! separable generator, and the CSV cache format.

use crate::error::{Error, Result};
use crate::estimators::Instance;
use crate::rng::RngStream;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

/// Environment variable overriding the data directory used by MNIST loading.
pub const DATA_DIR_ENV: &str = "SHOTGRAD_DATA_DIR";

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Labeled instances with a train/validation split. Features are unit
/// 2-norm vectors and labels are +/-1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Instance>,
    pub validation: Vec<Instance>,
}

impl Dataset {
    pub fn feature_dim(&self) -> usize {
        self.train
            .first()
            .or(self.validation.first())
            .map_or(0, |i| i.features.len())
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.feature_dim();
        for instance in self.train.iter().chain(&self.validation) {
            if instance.features.len() != dim {
                return Err(Error::InvalidDataset("ragged feature vectors".into()));
            }
            if instance.label != 1.0 && instance.label != -1.0 {
                return Err(Error::InvalidDataset(format!(
                    "label {} is not +/-1",
                    instance.label
                )));
            }
            let norm = instance.features.iter().map(|f| f * f).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidDataset(format!(
                    "feature vector has norm {norm}"
                )));
            }
        }
        Ok(())
    }
}

/// Where classification data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Raw IDX files (`train-images-idx3-ubyte`, `train-labels-idx1-ubyte`)
    /// in the given directory; `None` falls back to the `SHOTGRAD_DATA_DIR`
    /// environment variable.
    MnistFiles { dir: Option<PathBuf> },
    /// Deterministic separable data on the unit sphere.
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub num_qubits: usize,
    pub train_per_class: usize,
    pub validation_per_class: usize,
    /// Standard deviation of the isotropic perturbation around each anchor.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_qubits: 2,
            train_per_class: 32,
            validation_per_class: 24,
            noise: 0.25,
            seed: 1,
        }
    }
}

pub fn load_classification_data(source: &DataSource) -> Result<Dataset> {
    let dataset = match source {
        DataSource::MnistFiles { dir } => {
            let dir = match dir {
                Some(d) => d.clone(),
                None => std::env::var(DATA_DIR_ENV)
                    .map(PathBuf::from)
                    .map_err(|_| {
                        Error::InvalidConfig(format!(
                            "no data directory given and {DATA_DIR_ENV} is unset"
                        ))
                    })?,
            };
            load_mnist_three_six(&dir)?
        }
        DataSource::Synthetic(config) => synthetic_separable(config)?,
    };
    dataset.validate()?;
    Ok(dataset)
}

fn read_u32_be(reader: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(u32::from_be_bytes(buf))
}

/// Reads an IDX image file: magic 0x00000803, then count, rows, cols, then
/// row-major u8 pixels.
pub fn read_idx_images(path: &Path) -> Result<Vec<Vec<u8>>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = BufReader::new(file);
    let magic = read_u32_be(&mut reader, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::InvalidDataset(format!(
            "bad image magic {magic:#010x} in {}",
            path.display()
        )));
    }
    let count = read_u32_be(&mut reader, path)? as usize;
    let rows = read_u32_be(&mut reader, path)? as usize;
    let cols = read_u32_be(&mut reader, path)? as usize;
    let mut data = vec![0u8; count * rows * cols];
    reader
        .read_exact(&mut data)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(data.chunks(rows * cols).map(<[u8]>::to_vec).collect())
}

/// Reads an IDX label file: magic 0x00000801, then count, then u8 labels.
pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = BufReader::new(file);
    let magic = read_u32_be(&mut reader, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::InvalidDataset(format!(
            "bad label magic {magic:#010x} in {}",
            path.display()
        )));
    }
    let count = read_u32_be(&mut reader, path)? as usize;
    let mut data = vec![0u8; count];
    reader
        .read_exact(&mut data)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(data)
}

/// Crops 6 pixels from every boundary (28 -> 16), keeps even-indexed rows and
/// columns (16 -> 8), flattens row-major, and normalizes to unit 2-norm.
pub fn downsample_image(pixels: &[u8], side: usize) -> Result<Vec<f64>> {
    const CROP: usize = 6;
    if pixels.len() != side * side {
        return Err(Error::InvalidDataset(format!(
            "image has {} pixels, expected {side}x{side}",
            pixels.len()
        )));
    }
    if side <= 2 * CROP {
        return Err(Error::InvalidDataset(format!(
            "side {side} too small to crop {CROP} from each boundary"
        )));
    }
    let cropped = side - 2 * CROP;
    let mut features = Vec::with_capacity((cropped / 2 + cropped % 2).pow(2));
    for r in (0..cropped).step_by(2) {
        for c in (0..cropped).step_by(2) {
            let pixel = pixels[(r + CROP) * side + (c + CROP)];
            features.push(f64::from(pixel));
        }
    }
    let norm = features.iter().map(|f| f * f).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidDataset(
            "image is all zero after downsampling".into(),
        ));
    }
    for f in &mut features {
        *f /= norm;
    }
    Ok(features)
}

const TRAIN_PER_CLASS: usize = 2000;
const VALIDATION_PER_CLASS: usize = 200;

/// Binary 3-vs-6 dataset: 3s labeled +1 and 6s labeled -1, 2000 training and
/// 200 validation images per class, downsampled to 64 features.
pub fn load_mnist_three_six(dir: &Path) -> Result<Dataset> {
    let images = read_idx_images(&dir.join("train-images-idx3-ubyte"))?;
    let labels = read_idx_labels(&dir.join("train-labels-idx1-ubyte"))?;
    if images.len() != labels.len() {
        return Err(Error::InvalidDataset(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let side = (images.first().map_or(0, Vec::len) as f64).sqrt() as usize;
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut counts = [0usize; 2]; // threes, sixes
    let budget = TRAIN_PER_CLASS + VALIDATION_PER_CLASS;
    for (pixels, &digit) in images.iter().zip(&labels) {
        let (class, label) = match digit {
            3 => (0, 1.0),
            6 => (1, -1.0),
            _ => continue,
        };
        if counts[class] >= budget {
            continue;
        }
        let instance = Instance {
            features: downsample_image(pixels, side)?,
            label,
        };
        if counts[class] < TRAIN_PER_CLASS {
            train.push(instance);
        } else {
            validation.push(instance);
        }
        counts[class] += 1;
    }
    if counts[0] < budget || counts[1] < budget {
        return Err(Error::InvalidDataset(format!(
            "need {budget} images per class, found {} threes and {} sixes",
            counts[0], counts[1]
        )));
    }
    Ok(Dataset { train, validation })
}

/// Deterministic separable dataset: class +1 clusters around the first basis
/// vector, class -1 around the second (they differ in the readout qubit), and
/// each sample is the normalized anchor plus isotropic noise.
pub fn synthetic_separable(config: &SyntheticConfig) -> Result<Dataset> {
    if config.num_qubits == 0 {
        return Err(Error::InvalidConfig("need at least one qubit".into()));
    }
    if !(config.noise >= 0.0 && config.noise < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "noise {} outside [0, 0.5)",
            config.noise
        )));
    }
    let dim = 1usize << config.num_qubits;
    let root = RngStream::from_seed(config.seed);
    let make = |class: usize, count: usize, stream: u64| -> Vec<Instance> {
        let mut rng = root.child(stream);
        (0..count)
            .map(|_| {
                let mut features = vec![0.0; dim];
                features[class] = 1.0;
                for f in features.iter_mut() {
                    *f += config.noise * rng.normal();
                }
                let norm = features.iter().map(|f| f * f).sum::<f64>().sqrt();
                for f in features.iter_mut() {
                    *f /= norm;
                }
                Instance {
                    features,
                    label: if class == 0 { 1.0 } else { -1.0 },
                }
            })
            .collect()
    };
    let mut train = make(0, config.train_per_class, 0);
    train.extend(make(1, config.train_per_class, 1));
    let mut validation = make(0, config.validation_per_class, 2);
    validation.extend(make(1, config.validation_per_class, 3));
    Ok(Dataset { train, validation })
}

/// Writes one split as CSV: one row per instance, features then label.
pub fn write_split_csv(path: &Path, instances: &[Instance]) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for instance in instances {
        let mut row = String::new();
        for f in &instance.features {
            row.push_str(&format!("{f:.17e},"));
        }
        row.push_str(&format!("{}", instance.label));
        writeln!(file, "{row}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

pub fn read_split_csv(path: &Path) -> Result<Vec<Instance>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut instances = Vec::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "line {} has {} fields",
                line_no + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidDataset(format!("bad number '{s}' on line {}", line_no + 1)))
        };
        let features = fields[..fields.len() - 1]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<f64>>>()?;
        let label = parse(fields[fields.len() - 1])?;
        instances.push(Instance { features, label });
    }
    Ok(instances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_idx_fixture(dir: &Path, images: &[(u8, Vec<u8>)], side: usize) {
        let mut img = Vec::new();
        img.extend(IDX_IMAGES_MAGIC.to_be_bytes());
        img.extend((images.len() as u32).to_be_bytes());
        img.extend((side as u32).to_be_bytes());
        img.extend((side as u32).to_be_bytes());
        for (_, pixels) in images {
            img.extend(pixels);
        }
        std::fs::write(dir.join("train-images-idx3-ubyte"), img).unwrap();

        let mut lab = Vec::new();
        lab.extend(IDX_LABELS_MAGIC.to_be_bytes());
        lab.extend((images.len() as u32).to_be_bytes());
        lab.extend(images.iter().map(|(l, _)| *l));
        std::fs::write(dir.join("train-labels-idx1-ubyte"), lab).unwrap();
    }

    #[test]
    fn downsample_arithmetic() {
        // 28 -> crop 6 each side -> 16 -> every second -> 8 per side, 64 features.
        let image = vec![1u8; 28 * 28];
        let features = downsample_image(&image, 28).unwrap();
        assert_eq!(features.len(), 64);
        // All-equal pixels normalize to 1/8 each.
        for f in &features {
            assert!((f - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn downsample_picks_even_offsets() {
        // Mark pixel (6, 8) of the raw image: cropped coordinates (0, 2),
        // kept as feature row 0 column 1.
        let mut image = vec![0u8; 28 * 28];
        image[6 * 28 + 8] = 255;
        image[27 * 28 + 27] = 255; // outside the crop, dropped
        let features = downsample_image(&image, 28).unwrap();
        assert!((features[1] - 1.0).abs() < 1e-12);
        assert_eq!(features.iter().filter(|&&f| f != 0.0).count(), 1);
    }

    #[test]
    fn idx_roundtrip_and_selection() {
        let dir = tempfile::tempdir().unwrap();
        let mut images = Vec::new();
        // Interleave labesl so selection must filter: digits 3, 6 and noise.
        for i in 0..30u8 {
            let digit = match i % 3 {
                0 => 3,
                1 => 6,
                _ => 9,
            };
            let mut pixels = vec![0u8; 28 * 28];
            pixels[14 * 28 + 14] = i + 1;
            pixels[10 * 28 + 12] = 2 * i + 1;
            images.push((digit, pixels));
        }
        write_idx_fixture(dir.path(), &images, 28);

        let imgs = read_idx_images(&dir.path().join("train-images-idx3-ubyte")).unwrap();
        assert_eq!(imgs.len(), 30);
        let labels = read_idx_labels(&dir.path().join("train-labels-idx1-ubyte")).unwrap();
        assert_eq!(labels[0], 3);
        assert_eq!(labels[1], 6);

        // Not enough per-class images for the full split.
        assert!(load_mnist_three_six(dir.path()).is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train-images-idx3-ubyte");
        std::fs::write(&path, 0x0000_0801u32.to_be_bytes()).unwrap();
        assert!(read_idx_images(&path).is_err());
    }

    #[test]
    fn synthetic_is_deterministic_and_valid() {
        let config = SyntheticConfig::default();
        let a = synthetic_separable(&config).unwrap();
        let b = synthetic_separable(&config).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_eq!(a.train.len(), 64);
        assert_eq!(a.validation.len(), 48);
        assert_eq!(a.feature_dim(), 4);

        let c = synthetic_separable(&SyntheticConfig {
            seed: 2,
            ..config
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_classes_are_separated() {
        let config = SyntheticConfig::default();
        let data = synthetic_separable(&config).unwrap();
        for instance in data.train.iter().chain(&data.validation) {
            let dominant = if instance.label > 0.0 { 0 } else { 1 };
            let other = 1 - dominant;
            assert!(instance.features[dominant].abs() > instance.features[other].abs());
        }
    }

    #[test]
    fn csv_cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let data = synthetic_separable(&SyntheticConfig::default()).unwrap();
        let path = dir.path().join("train.csv");
        write_split_csv(&path, &data.train).unwrap();
        let back = read_split_csv(&path).unwrap();
        assert_eq!(back.len(), data.train.len());
        for (a, b) in back.iter().zip(&data.train) {
            assert_eq!(a.label, b.label);
            for (x, y) in a.features.iter().zip(&b.features) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }
}

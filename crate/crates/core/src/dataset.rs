//! Getting feature vectors in: image files, two-class directory layouts,
//! stratified splits, CSV fixtures and synthetic Gaussian data.
//!
//! Images become `width * height * 3` vectors, channel-interleaved in
//! row-major pixel order (`r00 g00 b00 r01 ...`).

use std::collections::HashSet;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifiers::Label;
use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};

pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PixelScale {
    /// Bytes divided by 255.
    #[default]
    Unit,
    /// Byte values as floats in `0..=255`.
    Raw,
}

/// Geometry and scaling every image goes through before it becomes a
/// vector. Stored in trained models so inference uses the same pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub pixel_scale: PixelScale,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        PreprocessSpec {
            width: 512,
            height: 512,
            channels: 3,
            pixel_scale: PixelScale::Unit,
        }
    }
}

impl PreprocessSpec {
    pub const MIN_SIDE: u32 = 8;

    pub fn new(width: u32, height: u32, pixel_scale: PixelScale) -> Result<Self> {
        let spec = PreprocessSpec {
            width,
            height,
            channels: 3,
            pixel_scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Enforces the training-time geometry limits.
    pub fn validate(&self) -> Result<()> {
        if self.width < Self::MIN_SIDE || self.height < Self::MIN_SIDE {
            return Err(Error::invalid(format!(
                "image size {}x{} below the {m}x{m} minimum",
                self.width,
                self.height,
                m = Self::MIN_SIDE
            )));
        }
        if self.channels != 3 {
            return Err(Error::invalid("only 3-channel RGB input is supported"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.width as usize * self.height as usize * self.channels as usize
    }
}

/// Bilinear resampling of an interleaved RGB buffer using pixel-center
/// alignment: destination pixel `x` samples source coordinate
/// `(x + 0.5) * src_w / dst_w - 0.5`, clamped to the image.
pub fn resize_bilinear(src: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    const C: usize = 3;
    debug_assert_eq!(src.len(), sw * sh * C);
    if sw == dw && sh == dh {
        return src.to_vec();
    }
    let axis = |dst: usize, len_src: usize, len_dst: usize| {
        let pos = (dst as f64 + 0.5) * len_src as f64 / len_dst as f64 - 0.5;
        let pos = pos.clamp(0.0, (len_src - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(len_src - 1);
        (lo, hi, pos - lo as f64)
    };
    let mut out = Vec::with_capacity(dw * dh * C);
    for y in 0..dh {
        let (y0, y1, fy) = axis(y, sh, dh);
        for x in 0..dw {
            let (x0, x1, fx) = axis(x, sw, dw);
            for c in 0..C {
                let p = |yy: usize, xx: usize| src[(yy * sw + xx) * C + c];
                let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
                let bottom = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    out
}

/// Decodes a PNG or JPEG file, resizes it to `spec` and flattens it.
/// Grayscale and alpha inputs are converted to RGB.
#[cfg(feature = "images")]
pub fn load_image_vector(path: &Path, spec: &PreprocessSpec) -> Result<crate::linalg::Vector> {
    if spec.width == 0 || spec.height == 0 || spec.channels != 3 {
        return Err(Error::invalid("invalid preprocessing geometry"));
    }
    let reader = image::ImageReader::open(path)
        .map_err(|e| Error::input(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::input(path, e))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        Some(other) => return Err(Error::input(path, format!("unsupported format {other:?}"))),
        None => return Err(Error::input(path, "unrecognized image format")),
    }
    let img = reader.decode().map_err(|e| Error::input(path, e))?.to_rgb8();
    let (sw, sh) = (img.width() as usize, img.height() as usize);
    let scale = match spec.pixel_scale {
        PixelScale::Unit => 1.0 / 255.0,
        PixelScale::Raw => 1.0,
    };
    let raw: Vec<f64> = img.as_raw().iter().map(|&b| b as f64).collect();
    let resized = resize_bilinear(&raw, sw, sh, spec.width as usize, spec.height as usize);
    crate::linalg::Vector::new(resized.into_iter().map(|v| v * scale).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
}

/// Labelled file list, optionally produced by a seeded split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub split_seed: Option<u64>,
    pub split_ratio: Option<f64>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(&e.path) {
                return Err(Error::input(&e.path, "duplicate manifest entry"));
            }
        }
        Ok(DatasetManifest {
            entries,
            split_seed: None,
            split_ratio: None,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    pub fn paths(&self, label: Label) -> impl Iterator<Item = &Path> + '_ {
        self.entries
            .iter()
            .filter(move |e| e.label == label)
            .map(|e| e.path.as_path())
    }
}

fn is_image_path(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

/// Lists image files (by extension) in one directory, sorted by path.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::input(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| Error::input(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        if is_image_path(&path) {
            out.push(path);
        } else {
            log::warn!("skipping non-image file {}", path.display());
        }
    }
    out.sort();
    Ok(out)
}

/// Builds a manifest from a `normal` and a `rosacea` directory. Normal
/// entries come first; each class is sorted lexicographically.
pub fn scan_directories(normal_dir: &Path, rosacea_dir: &Path) -> Result<DatasetManifest> {
    let mut entries = Vec::new();
    for (dir, label) in [(normal_dir, Label::Normal), (rosacea_dir, Label::Rosacea)] {
        let files = list_images(dir)?;
        if files.is_empty() {
            return Err(Error::input(dir, format!("no {label} images found")));
        }
        entries.extend(files.into_iter().map(|path| ManifestEntry { path, label }));
    }
    DatasetManifest::new(entries)
}

/// Per-class seeded split. Each class keeps `round(ratio * size)` entries in
/// the training part; both parts preserve the manifest's order.
pub fn split(
    manifest: &DatasetManifest,
    ratio: f64,
    seed: u64,
) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; manifest.len()];
    for label in [Label::Normal, Label::Rosacea] {
        let mut idx: Vec<usize> = (0..manifest.len())
            .filter(|&i| manifest.entries[i].label == label)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let n_train = (ratio * idx.len() as f64).round() as usize;
        if n_train == 0 || n_train == idx.len() {
            return Err(Error::invalid(format!(
                "{label} class of {} entries is too small to split at ratio {ratio}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let part = |want: bool| DatasetManifest {
        entries: manifest
            .entries
            .iter()
            .zip(&in_train)
            .filter(|(_, &t)| t == want)
            .map(|(e, _)| e.clone())
            .collect(),
        split_seed: Some(seed),
        split_ratio: Some(ratio),
    };
    Ok((part(true), part(false)))
}

/// Samples of both classes loaded as matrices, with the file behind each
/// column.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub x_normal: Matrix,
    pub x_rosacea: Matrix,
    pub normal_paths: Vec<PathBuf>,
    pub rosacea_paths: Vec<PathBuf>,
}

/// Decodes every manifest entry. Files are read in parallel; column order
/// follows manifest order.
#[cfg(feature = "images")]
pub fn load_manifest(manifest: &DatasetManifest, spec: &PreprocessSpec) -> Result<LoadedDataset> {
    let load = |label: Label| -> Result<(Matrix, Vec<PathBuf>)> {
        let paths: Vec<PathBuf> = manifest.paths(label).map(Path::to_path_buf).collect();
        let vectors = crate::par::map_indices(paths.len(), |i| load_image_vector(&paths[i], spec));
        let vectors = vectors.into_iter().collect::<Result<Vec<_>>>()?;
        let x = if vectors.is_empty() {
            Matrix::zeros(spec.dim(), 0)
        } else {
            Matrix::from_columns(&vectors)?
        };
        Ok((x, paths))
    };
    let (x_normal, normal_paths) = load(Label::Normal)?;
    let (x_rosacea, rosacea_paths) = load(Label::Rosacea)?;
    Ok(LoadedDataset {
        x_normal,
        x_rosacea,
        normal_paths,
        rosacea_paths,
    })
}

/// Parameters of two isotropic Gaussian clouds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub d: usize,
    pub n: usize,
    pub m: usize,
    /// Distance between the two class centres.
    pub separation: f64,
    /// Per-coordinate standard deviation of both classes.
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub x_normal: Matrix,
    pub x_rosacea: Matrix,
    pub center_normal: Vec<f64>,
    pub center_rosacea: Vec<f64>,
}

impl SyntheticData {
    /// Truth labels in `[normal..., rosacea...]` column order.
    pub fn labels(&self) -> Vec<Label> {
        let mut l = vec![Label::Normal; self.x_normal.cols()];
        l.resize(l.len() + self.x_rosacea.cols(), Label::Rosacea);
        l
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    Ok(generate_synthetic_with_holdout(spec, 0, 0)?.0)
}

/// Draws the training clouds and then a held-out sample of `holdout_n`
/// normal and `holdout_m` rosacea vectors from the same distributions.
///
/// The centres sit at `-separation/2` and `+separation/2` along a random unit
/// direction. The training draw is identical to [`generate_synthetic`] for the
/// same spec.
pub fn generate_synthetic_with_holdout(
    spec: &SyntheticSpec,
    holdout_n: usize,
    holdout_m: usize,
) -> Result<(SyntheticData, SyntheticData)> {
    if spec.d < 2 {
        return Err(Error::invalid("synthetic dimension must be at least 2"));
    }
    if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if !(spec.separation >= 0.0 && spec.separation.is_finite()) {
        return Err(Error::invalid("separation must be non-negative"));
    }
    if spec.n == 0 || spec.m == 0 {
        return Err(Error::invalid("both classes need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;
    let mut direction: Vec<f64>;
    loop {
        direction = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let len = norm(&direction);
        if len > 1e-12 {
            direction.iter_mut().for_each(|v| *v /= len);
            break;
        }
    }
    let half = spec.separation / 2.0;
    let center_normal: Vec<f64> = direction.iter().map(|u| -half * u).collect();
    let center_rosacea: Vec<f64> = direction.iter().map(|u| half * u).collect();

    let mut draw = |center: &[f64], count: usize| -> Result<Matrix> {
        let mut data = Vec::with_capacity(d * count);
        for _ in 0..count {
            for c in center {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(c + spec.sigma * z);
            }
        }
        Matrix::new(d, count, data)
    };
    let train = SyntheticData {
        x_normal: draw(&center_normal, spec.n)?,
        x_rosacea: draw(&center_rosacea, spec.m)?,
        center_normal: center_normal.clone(),
        center_rosacea: center_rosacea.clone(),
    };
    let holdout = SyntheticData {
        x_normal: draw(&center_normal, holdout_n)?,
        x_rosacea: draw(&center_rosacea, holdout_m)?,
        center_normal,
        center_rosacea,
    };
    Ok((train, holdout))
}

/// Reads `label,v1,...,vd` rows; columns follow file order.
pub fn load_csv_vectors(path: &Path) -> Result<(Matrix, Vec<Label>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::input(path, e))?;
    read_csv_vectors(file).map_err(|e| match e {
        Error::Io(io) => Error::input(path, io),
        other => other,
    })
}

pub fn read_csv_vectors<R: Read>(reader: R) -> Result<(Matrix, Vec<Label>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut labels = Vec::new();
    let mut data = Vec::new();
    let mut dim: Option<usize> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| Error::Csv { line, message };
        let mut fields = record.iter();
        let label = fields
            .next()
            .ok_or_else(|| err("empty row".into()))?
            .parse::<Label>()
            .map_err(|e| err(e.to_string()))?;
        let before = data.len();
        for (i, f) in fields.enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| err(format!("column {}: {f:?} is not a number", i + 2)))?;
            if !v.is_finite() {
                return Err(err(format!("column {}: non-finite value", i + 2)));
            }
            data.push(v);
        }
        let len = data.len() - before;
        match dim {
            None if len == 0 => return Err(err("row has no feature values".into())),
            None => dim = Some(len),
            Some(d) if d != len => {
                return Err(err(format!("expected {d} values, found {len}")));
            }
            _ => {}
        }
        labels.push(label);
    }
    let Some(d) = dim else {
        return Err(Error::Csv {
            line: 0,
            message: "file contains no rows".into(),
        });
    };
    Ok((Matrix::new(d, labels.len(), data)?, labels))
}

/// Splits labelled columns into `(normal, rosacea)` matrices, keeping
/// relative order.
pub fn partition_by_label(x: &Matrix, labels: &[Label]) -> Result<(Matrix, Matrix)> {
    if labels.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            actual: labels.len(),
        });
    }
    let pick = |want: Label| {
        let data: Vec<f64> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == want)
            .flat_map(|(j, _)| x.column(j).iter().copied())
            .collect();
        let cols = data.len() / x.rows().max(1);
        Matrix::new(x.rows(), cols, data)
    };
    Ok((pick(Label::Normal)?, pick(Label::Rosacea)?))
}

/// Writes labelled columns in the CSV fixture format. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv_vectors<W: std::io::Write>(writer: W, x: &Matrix, labels: &[Label]) -> Result<()> {
    if labels.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            actual: labels.len(),
        });
    }
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    let csv_err = |e: csv::Error| Error::invalid(e.to_string());
    for (j, label) in labels.iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend(x.column(j).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

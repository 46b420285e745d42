//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "WCS1"            magic
//! u32               format version (1)
//! u8                kind: 0 whitened-cosine, 1 knn, 2 pca-pipeline
//! u8                1 if a preprocessing block follows, else 0
//!   u32 u32 u32 u8  width, height, channels, pixel scale (0 unit, 1 raw)
//! u64               input dimension d
//! u64               k: retained rank | stored samples | components
//! whitened-cosine:  u8 flags (bit 0: center at predict), u64 n, u64 m,
//!                   f64 M0[d], mean_normal[d], mean_rosacea[d],
//!                   eigenvalues[k], W[d*k] column-major
//! knn:              u64 neighbours, u8 metric (0 l1, 1 l2, 2 cosine),
//!                   u8 labels[k] (0 normal, 1 rosacea), f64 samples[d*k]
//! pca-pipeline:     f64 grand_mean[d], projection[d*k], u8 head, then
//!                   head 0 (knn): the knn payload above with d = k,
//!                                 prefixed by u64 sample count
//!                   head 1 (nearest mean): f64 mean_normal[k], mean_rosacea[k]
//! ```

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::classifiers::{
    train_knn, Classifier, KnnModel, Label, Metric, PcaInner, PcaPipelineModel, Prediction,
    WhitenedCosineModel,
};
use crate::dataset::{PixelScale, PreprocessSpec};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector, WhiteningMatrix};

pub const MAGIC: &[u8; 4] = b"WCS1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    WhitenedCosine(WhitenedCosineModel),
    Knn(KnnModel),
    PcaPipeline(PcaPipelineModel),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::WhitenedCosine(_) => "whitened-cosine",
            AnyModel::Knn(_) => "knn",
            AnyModel::PcaPipeline(_) => "pca-pipeline",
        }
    }
}

impl Classifier for AnyModel {
    fn dim(&self) -> usize {
        match self {
            AnyModel::WhitenedCosine(m) => m.dim(),
            AnyModel::Knn(m) => m.dim(),
            AnyModel::PcaPipeline(m) => m.dim(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            AnyModel::WhitenedCosine(m) => m.predict(x),
            AnyModel::Knn(m) => m.predict(x),
            AnyModel::PcaPipeline(m) => m.predict(x),
        }
    }
}

/// A model plus the preprocessing its inputs must go through.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub preprocess: Option<PreprocessSpec>,
    pub model: AnyModel,
}

impl From<WhitenedCosineModel> for ModelFile {
    fn from(m: WhitenedCosineModel) -> Self {
        ModelFile {
            preprocess: m.preprocess().copied(),
            model: AnyModel::WhitenedCosine(m),
        }
    }
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for &v in values {
        w.write_f64::<LE>(v)?;
    }
    Ok(())
}

fn write_labels<W: Write>(w: &mut W, labels: &[Label]) -> Result<()> {
    for l in labels {
        w.write_u8(u8::from(l.is_positive()))?;
    }
    Ok(())
}

fn metric_tag(m: Metric) -> u8 {
    match m {
        Metric::L1 => 0,
        Metric::L2 => 1,
        Metric::Cosine => 2,
    }
}

pub fn save<W: Write>(file: &ModelFile, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LE>(VERSION)?;
    let kind = match &file.model {
        AnyModel::WhitenedCosine(_) => 0,
        AnyModel::Knn(_) => 1,
        AnyModel::PcaPipeline(_) => 2,
    };
    w.write_u8(kind)?;
    match &file.preprocess {
        None => w.write_u8(0)?,
        Some(p) => {
            w.write_u8(1)?;
            w.write_u32::<LE>(p.width)?;
            w.write_u32::<LE>(p.height)?;
            w.write_u32::<LE>(p.channels)?;
            w.write_u8(match p.pixel_scale {
                PixelScale::Unit => 0,
                PixelScale::Raw => 1,
            })?;
        }
    }
    match &file.model {
        AnyModel::WhitenedCosine(m) => {
            let wm = m.whitening();
            w.write_u64::<LE>(wm.dim() as u64)?;
            w.write_u64::<LE>(wm.retained_rank() as u64)?;
            w.write_u8(u8::from(m.center_at_predict()))?;
            let (n, mm) = m.train_counts();
            w.write_u64::<LE>(n as u64)?;
            w.write_u64::<LE>(mm as u64)?;
            write_f64s(&mut w, m.grand_mean())?;
            write_f64s(&mut w, m.mean_normal())?;
            write_f64s(&mut w, m.mean_rosacea())?;
            write_f64s(&mut w, wm.eigenvalues())?;
            write_f64s(&mut w, wm.matrix().as_slice())?;
        }
        AnyModel::Knn(m) => {
            w.write_u64::<LE>(m.data().rows() as u64)?;
            w.write_u64::<LE>(m.data().cols() as u64)?;
            write_knn_body(&mut w, m)?;
        }
        AnyModel::PcaPipeline(m) => {
            let p = m.projection();
            w.write_u64::<LE>(p.rows() as u64)?;
            w.write_u64::<LE>(p.cols() as u64)?;
            write_f64s(&mut w, m.grand_mean())?;
            write_f64s(&mut w, p.as_slice())?;
            match m.inner() {
                PcaInner::Knn(knn) => {
                    w.write_u8(0)?;
                    w.write_u64::<LE>(knn.data().cols() as u64)?;
                    write_knn_body(&mut w, knn)?;
                }
                PcaInner::NearestMean {
                    mean_normal,
                    mean_rosacea,
                } => {
                    w.write_u8(1)?;
                    write_f64s(&mut w, mean_normal)?;
                    write_f64s(&mut w, mean_rosacea)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_knn_body<W: Write>(w: &mut W, m: &KnnModel) -> Result<()> {
    w.write_u64::<LE>(m.k() as u64)?;
    w.write_u8(metric_tag(m.metric()))?;
    write_labels(w, m.labels())?;
    write_f64s(w, m.data().as_slice())
}

pub fn to_bytes(file: &ModelFile) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    save(file, &mut buf)?;
    Ok(buf)
}

pub fn save_path(file: &ModelFile, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::input(path, e))?;
    save(file, std::io::BufWriter::new(f))
}

pub fn load_path(path: &Path) -> Result<ModelFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::input(path, e))?;
    from_bytes(&bytes)
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.cur.get_ref().len() - self.cur.position() as usize
    }

    fn truncated<T>(r: std::io::Result<T>) -> Result<T> {
        r.map_err(|_| fmt_err("truncated file"))
    }

    fn u8(&mut self) -> Result<u8> {
        Self::truncated(self.cur.read_u8())
    }

    fn u32(&mut self) -> Result<u32> {
        Self::truncated(self.cur.read_u32::<LE>())
    }

    fn size(&mut self) -> Result<usize> {
        let v = Self::truncated(self.cur.read_u64::<LE>())?;
        usize::try_from(v).map_err(|_| fmt_err("size field overflows"))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        if count.checked_mul(8).is_none_or(|b| b > self.remaining()) {
            return Err(fmt_err("declared sizes exceed payload length"));
        }
        let mut out = vec![0.0; count];
        Self::truncated(self.cur.read_f64_into::<LE>(&mut out))?;
        Ok(out)
    }

    fn labels(&mut self, count: usize) -> Result<Vec<Label>> {
        if count > self.remaining() {
            return Err(fmt_err("declared sizes exceed payload length"));
        }
        let mut raw = vec![0u8; count];
        Self::truncated(self.cur.read_exact(&mut raw))?;
        raw.into_iter()
            .map(|b| match b {
                0 => Ok(Label::Normal),
                1 => Ok(Label::Rosacea),
                other => Err(fmt_err(format!("invalid label tag {other}"))),
            })
            .collect()
    }
}

fn mul(a: usize, b: usize) -> Result<usize> {
    a.checked_mul(b).ok_or_else(|| fmt_err("size field overflows"))
}

fn read_knn_body(r: &mut Reader<'_>, d: usize, count: usize) -> Result<KnnModel> {
    let k = r.size()?;
    let metric = match r.u8()? {
        0 => Metric::L1,
        1 => Metric::L2,
        2 => Metric::Cosine,
        other => return Err(fmt_err(format!("invalid metric tag {other}"))),
    };
    let labels = r.labels(count)?;
    let data = Matrix::new(d, count, r.f64s(mul(d, count)?)?)?;
    train_knn(&data, &labels, k, metric)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = Reader {
        cur: Cursor::new(bytes),
    };
    let mut magic = [0u8; 4];
    Reader::truncated(r.cur.read_exact(&mut magic))?;
    if &magic != MAGIC {
        return Err(fmt_err("bad magic (not a model file)"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(fmt_err(format!("unsupported format version {version}")));
    }
    let kind = r.u8()?;
    let preprocess = match r.u8()? {
        0 => None,
        1 => {
            let width = r.u32()?;
            let height = r.u32()?;
            let channels = r.u32()?;
            let pixel_scale = match r.u8()? {
                0 => PixelScale::Unit,
                1 => PixelScale::Raw,
                other => return Err(fmt_err(format!("invalid pixel scale tag {other}"))),
            };
            Some(PreprocessSpec {
                width,
                height,
                channels,
                pixel_scale,
            })
        }
        other => return Err(fmt_err(format!("invalid preprocessing flag {other}"))),
    };
    let d = r.size()?;
    let k = r.size()?;
    if d == 0 {
        return Err(fmt_err("zero input dimension"));
    }
    if let Some(p) = &preprocess {
        if p.dim() != d {
            return Err(fmt_err(format!(
                "preprocessing yields {} values but model dimension is {d}",
                p.dim()
            )));
        }
    }

    let model = match kind {
        0 => {
            let flags = r.u8()?;
            let n = r.size()?;
            let m = r.size()?;
            let grand = Vector::new(r.f64s(d)?)?;
            let mean_normal = Vector::new(r.f64s(d)?)?;
            let mean_rosacea = Vector::new(r.f64s(d)?)?;
            let eigenvalues = r.f64s(k)?;
            let w = Matrix::new(d, k, r.f64s(mul(d, k)?)?)?;
            let whitening = WhiteningMatrix::from_parts(w, eigenvalues)?;
            let model =
                WhitenedCosineModel::from_parts(grand, mean_normal, mean_rosacea, whitening, (n, m))?
                    .with_preprocess(preprocess)
                    .with_center_at_predict(flags & 1 == 1);
            AnyModel::WhitenedCosine(model)
        }
        1 => AnyModel::Knn(read_knn_body(&mut r, d, k)?),
        2 => {
            let grand = Vector::new(r.f64s(d)?)?;
            let projection = Matrix::new(d, k, r.f64s(mul(d, k)?)?)?;
            let inner = match r.u8()? {
                0 => {
                    let count = r.size()?;
                    PcaInner::Knn(read_knn_body(&mut r, k, count)?)
                }
                1 => PcaInner::NearestMean {
                    mean_normal: r.f64s(k)?,
                    mean_rosacea: r.f64s(k)?,
                },
                other => return Err(fmt_err(format!("invalid pca head tag {other}"))),
            };
            AnyModel::PcaPipeline(PcaPipelineModel::from_parts(projection, grand, inner)?)
        }
        other => return Err(fmt_err(format!("unknown model kind {other}"))),
    };
    if r.remaining() != 0 {
        return Err(fmt_err(format!("{} trailing bytes after payload", r.remaining())));
    }
    Ok(ModelFile { preprocess, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train_pca_pipeline, train_whitened_cosine, ComponentSelection, PcaHead};
    use crate::dataset::{generate_synthetic, SyntheticSpec};
    use crate::linalg::TruncationPolicy;

    fn data() -> (Matrix, Matrix) {
        let s = generate_synthetic(&SyntheticSpec {
            d: 12,
            n: 6,
            m: 5,
            separation: 4.0,
            sigma: 1.0,
            seed: 5,
        })
        .unwrap();
        (s.x_normal, s.x_rosacea)
    }

    #[test]
    fn whitened_model_round_trips() {
        let (xn, xr) = data();
        let model = train_whitened_cosine(&xn, &xr, &TruncationPolicy::default())
            .unwrap()
            .with_center_at_predict(true);
        let file = ModelFile::from(model);
        let bytes = to_bytes(&file).unwrap();
        assert_eq!(&bytes[..4], b"WCS1");
        assert_eq!(from_bytes(&bytes).unwrap(), file);
    }

    #[test]
    fn header_fields_are_little_endian() {
        let (xn, xr) = data();
        let model = train_whitened_cosine(&xn, &xr, &TruncationPolicy::default()).unwrap();
        let k = model.retained_rank() as u64;
        let bytes = to_bytes(&ModelFile::from(model)).unwrap();
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(bytes[8], 0);
        assert_eq!(bytes[9], 0);
        assert_eq!(&bytes[10..18], &12u64.to_le_bytes());
        assert_eq!(&bytes[18..26], &k.to_le_bytes());
    }

    #[test]
    fn baselines_round_trip() {
        let (xn, xr) = data();
        let p = TruncationPolicy::default();
        let x = xn.hstack(&xr).unwrap();
        let mut labels = vec![Label::Normal; 6];
        labels.extend([Label::Rosacea; 5]);
        let spec = PreprocessSpec {
            width: 2,
            height: 2,
            channels: 3,
            pixel_scale: PixelScale::Raw,
        };
        for model in [
            AnyModel::Knn(train_knn(&x, &labels, 3, Metric::Cosine).unwrap()),
            AnyModel::PcaPipeline(
                train_pca_pipeline(&xn, &xr, ComponentSelection::Fixed(4), PcaHead::KnnL2 { k: 1 }, &p)
                    .unwrap(),
            ),
            AnyModel::PcaPipeline(
                train_pca_pipeline(&xn, &xr, ComponentSelection::Fixed(2), PcaHead::NearestMean, &p)
                    .unwrap(),
            ),
        ] {
            let file = ModelFile {
                preprocess: Some(spec),
                model,
            };
            assert_eq!(from_bytes(&to_bytes(&file).unwrap()).unwrap(), file);
        }
    }

    #[test]
    fn corrupt_files_rejected() {
        let (xn, xr) = data();
        let model = train_whitened_cosine(&xn, &xr, &TruncationPolicy::default()).unwrap();
        let bytes = to_bytes(&ModelFile::from(model)).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(from_bytes(&bad).unwrap_err().to_string().contains("magic"));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(from_bytes(&bad).unwrap_err().to_string().contains("version"));

        assert!(from_bytes(&bytes[..bytes.len() - 3]).is_err());

        let mut bad = bytes.clone();
        bad.push(0);
        assert!(from_bytes(&bad).unwrap_err().to_string().contains("trailing"));

        // absurd rank must not allocate
        let mut bad = bytes.clone();
        bad[18..26].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(from_bytes(&bad).is_err());
    }
}

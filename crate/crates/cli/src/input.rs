use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use wcs_core::dataset::{self, PreprocessSpec};
use wcs_core::Matrix;

/// Error that maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// A labelled sample source: a pair of class directories or a CSV file.
pub struct Source<'a> {
    pub normal_dir: Option<&'a Path>,
    pub rosacea_dir: Option<&'a Path>,
    pub csv: Option<&'a Path>,
    pub role: &'a str,
}

pub struct Loaded {
    pub x_normal: Matrix,
    pub x_rosacea: Matrix,
    pub from_images: bool,
}

fn require_dir(p: &Path) -> Result<()> {
    if !p.is_dir() {
        return Err(usage(format!("directory not found: {}", p.display())));
    }
    Ok(())
}

impl Source<'_> {
    pub fn load(&self, spec: Option<&PreprocessSpec>) -> Result<Loaded> {
        match (self.normal_dir, self.rosacea_dir, self.csv) {
            (Some(n), Some(r), None) => {
                require_dir(n)?;
                require_dir(r)?;
                let spec = spec.ok_or_else(|| {
                    usage(format!(
                        "{} data are images but the model was trained on raw vectors",
                        self.role
                    ))
                })?;
                let manifest = dataset::scan_directories(n, r)?;
                log::info!(
                    "{}: {} normal, {} rosacea images",
                    self.role,
                    manifest.count(wcs_core::Label::Normal),
                    manifest.count(wcs_core::Label::Rosacea)
                );
                let data = dataset::load_manifest(&manifest, spec)?;
                Ok(Loaded {
                    x_normal: data.x_normal,
                    x_rosacea: data.x_rosacea,
                    from_images: true,
                })
            }
            (None, None, Some(csv)) => {
                if !csv.is_file() {
                    return Err(usage(format!("file not found: {}", csv.display())));
                }
                let (x, labels) = dataset::load_csv_vectors(csv)
                    .with_context(|| format!("reading {}", csv.display()))?;
                let (x_normal, x_rosacea) = dataset::partition_by_label(&x, &labels)?;
                if x_normal.cols() == 0 || x_rosacea.cols() == 0 {
                    anyhow::bail!("{}: both classes need at least one sample", csv.display());
                }
                Ok(Loaded {
                    x_normal,
                    x_rosacea,
                    from_images: false,
                })
            }
            _ => Err(usage(format!(
                "{} data: give either both class directories or a CSV file",
                self.role
            ))),
        }
    }
}

pub fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Expands predict arguments: image paths pass through; each CSV row becomes
/// its own item named `file.csv:LINE`.
pub enum Item {
    Image(PathBuf),
    Vector(String, Vec<f64>),
    Failed(String, String),
}

pub fn expand_inputs(paths: &[PathBuf]) -> Vec<Item> {
    let mut out = Vec::new();
    for p in paths {
        if is_csv(p) {
            match dataset::load_csv_vectors(p) {
                Ok((x, _)) => {
                    for (j, col) in x.columns().enumerate() {
                        out.push(Item::Vector(format!("{}:{}", p.display(), j + 1), col.to_vec()));
                    }
                }
                Err(e) => out.push(Item::Failed(p.display().to_string(), e.to_string())),
            }
        } else {
            out.push(Item::Image(p.clone()));
        }
    }
    out
}

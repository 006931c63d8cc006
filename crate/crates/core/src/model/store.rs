use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{png, Annotation, ImageBuffer, ImageEntry};

/// Source of pixel data for manifest entries.
pub trait ImageStore: Sync {
    fn load_image(&self, entry: &ImageEntry) -> Result<ImageBuffer>;

    /// Contour mask for an annotation, if it carries one.
    fn load_mask(&self, _annotation: &Annotation) -> Result<Option<ImageBuffer>> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Default)]
pub struct InMemoryImages {
    pub images: BTreeMap<u64, ImageBuffer>,
    /// Contour masks keyed by the annotation's `mask` path.
    pub masks: BTreeMap<PathBuf, ImageBuffer>,
}

impl InMemoryImages {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: u64, image: ImageBuffer) {
        self.images.insert(id, image);
    }
}

impl ImageStore for InMemoryImages {
    fn load_image(&self, entry: &ImageEntry) -> Result<ImageBuffer> {
        self.images
            .get(&entry.id)
            .cloned()
            .ok_or(Error::UnknownImage(entry.id))
    }

    fn load_mask(&self, annotation: &Annotation) -> Result<Option<ImageBuffer>> {
        Ok(annotation
            .mask
            .as_ref()
            .and_then(|m| self.masks.get(m).cloned()))
    }
}

/// Files resolved relative to a root directory (usually the manifest's folder).
#[derive(Debug, Clone)]
pub struct DiskImages {
    root: PathBuf,
}

impl DiskImages {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DiskImages { root: root.into() }
    }

    /// Store rooted at the directory containing `manifest_path`.
    pub fn beside(manifest_path: &Path) -> Self {
        let root = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        DiskImages { root }
    }

    pub fn resolve(&self, file: &Path) -> PathBuf {
        if file.is_absolute() {
            file.to_path_buf()
        } else {
            self.root.join(file)
        }
    }
}

impl ImageStore for DiskImages {
    fn load_image(&self, entry: &ImageEntry) -> Result<ImageBuffer> {
        let img = png::load_rgb(self.resolve(&entry.file))?;
        if img.width() != entry.width || img.height() != entry.height {
            return Err(Error::DimensionMismatch(format!(
                "{} is {}x{}, manifest says {}x{}",
                entry.file.display(),
                img.width(),
                img.height(),
                entry.width,
                entry.height
            )));
        }
        Ok(img)
    }

    fn load_mask(&self, annotation: &Annotation) -> Result<Option<ImageBuffer>> {
        annotation
            .mask
            .as_ref()
            .map(|m| png::load_gray(self.resolve(m)))
            .transpose()
    }
}

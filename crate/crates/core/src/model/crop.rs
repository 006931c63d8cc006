use crate::error::{Error, Result};
use crate::model::{BBox, CategoryId, ImageBuffer};

/// An object patch cut from a dataset image together with its alpha mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectCrop {
    patch: ImageBuffer,
    alpha: ImageBuffer,
    category: CategoryId,
    source_image: u64,
    source_box: BBox,
}

impl ObjectCrop {
    pub fn new(
        patch: ImageBuffer,
        alpha: ImageBuffer,
        category: CategoryId,
        source_image: u64,
        source_box: BBox,
    ) -> Result<Self> {
        if alpha.channels() != 1
            || alpha.height() != patch.height()
            || alpha.width() != patch.width()
        {
            return Err(Error::DimensionMismatch(format!(
                "alpha is {}x{}x{}, patch is {}x{}",
                alpha.height(),
                alpha.width(),
                alpha.channels(),
                patch.height(),
                patch.width()
            )));
        }
        if !alpha.data().iter().any(|&a| a > 0.5) {
            return Err(Error::InvalidArgument(
                "alpha mask has no value above 0.5".into(),
            ));
        }
        Ok(ObjectCrop {
            patch,
            alpha,
            category,
            source_image,
            source_box,
        })
    }

    /// Rectangular crop: alpha is all ones.
    pub fn rectangle(
        patch: ImageBuffer,
        category: CategoryId,
        source_image: u64,
        source_box: BBox,
    ) -> Result<Self> {
        let alpha = ImageBuffer::filled(patch.height(), patch.width(), 1, 1.0);
        Self::new(patch, alpha, category, source_image, source_box)
    }

    pub fn patch(&self) -> &ImageBuffer {
        &self.patch
    }

    pub fn alpha(&self) -> &ImageBuffer {
        &self.alpha
    }

    pub fn category(&self) -> CategoryId {
        self.category
    }

    pub fn source_image(&self) -> u64 {
        self.source_image
    }

    pub fn source_box(&self) -> BBox {
        self.source_box
    }

    pub fn width(&self) -> usize {
        self.patch.width()
    }

    pub fn height(&self) -> usize {
        self.patch.height()
    }

    /// Bilinear rescale of patch and alpha to `w`×`h`.
    pub fn resized(&self, w: usize, h: usize) -> Result<ObjectCrop> {
        let mut alpha = self.alpha.resize_bilinear(h, w);
        if !alpha.data().iter().any(|&a| a > 0.5) {
            // Thin masks can fall below threshold after downscaling; keep the peak.
            let peak = alpha.data().iter().cloned().fold(f64::MIN, f64::max);
            for a in alpha.data_mut() {
                if *a == peak {
                    *a = 1.0;
                }
            }
        }
        ObjectCrop::new(
            self.patch.resize_bilinear(h, w),
            alpha,
            self.category,
            self.source_image,
            self.source_box,
        )
    }
}

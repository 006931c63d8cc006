use crate::error::{Error, Result};

/// Integer pixel rectangle, half-open: columns `x..x + w`, rows `y..y + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl PixelRect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        PixelRect { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        col >= self.x && col < self.x + self.w && row >= self.y && row < self.y + self.h
    }

    /// Intersection with a `width`×`height` image; `None` when nothing remains.
    pub fn clip(&self, width: usize, height: usize) -> Option<PixelRect> {
        let x1 = (self.x + self.w).min(width);
        let y1 = (self.y + self.h).min(height);
        if self.x >= x1 || self.y >= y1 {
            return None;
        }
        Some(PixelRect::new(self.x, self.y, x1 - self.x, y1 - self.y))
    }
}

/// H×W×C raster of `f64` samples stored row-major with interleaved channels.
///
/// Samples loaded from 8-bit files live in `[0, 1]`. Intermediate results
/// (zero-mean normalized images, unclamped Poisson solutions) may leave that
/// range; only finiteness is enforced on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        ImageBuffer {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidArgument(
                "image must have at least one channel".into(),
            ));
        }
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} image needs {} samples, got {}",
                height,
                width,
                channels,
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data"));
        }
        Ok(ImageBuffer {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        ImageBuffer {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, value: f64) {
        let i = self.index(y, x, c);
        self.data[i] = value;
    }

    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Copy of the pixels inside `rect`.
    pub fn crop(&self, rect: PixelRect) -> Result<ImageBuffer> {
        if rect.x + rect.w > self.width || rect.y + rect.h > self.height {
            return Err(Error::OutOfBounds(format!(
                "crop {:?} exceeds {}x{} image",
                rect, self.width, self.height
            )));
        }
        Ok(ImageBuffer::from_fn(
            rect.h,
            rect.w,
            self.channels,
            |y, x, c| self.get(rect.y + y, rect.x + x, c),
        ))
    }

    /// Overwrites the region starting at `(x, y)` with `patch`.
    pub fn paste(&mut self, patch: &ImageBuffer, x: usize, y: usize) -> Result<()> {
        if patch.channels != self.channels {
            return Err(Error::DimensionMismatch(format!(
                "patch has {} channels, image has {}",
                patch.channels, self.channels
            )));
        }
        if x + patch.width > self.width || y + patch.height > self.height {
            return Err(Error::OutOfBounds(format!(
                "{}x{} patch at ({x}, {y}) exceeds {}x{} image",
                patch.width, patch.height, self.width, self.height
            )));
        }
        for py in 0..patch.height {
            let src = &patch.data
                [py * patch.width * patch.channels..(py + 1) * patch.width * patch.channels];
            let start = self.index(y + py, x, 0);
            self.data[start..start + src.len()].copy_from_slice(src);
        }
        Ok(())
    }

    /// Single-channel plane `c` as its own image.
    pub fn channel(&self, c: usize) -> ImageBuffer {
        ImageBuffer::from_fn(self.height, self.width, 1, |y, x, _| self.get(y, x, c))
    }

    pub fn flip_horizontal(&self) -> ImageBuffer {
        ImageBuffer::from_fn(self.height, self.width, self.channels, |y, x, c| {
            self.get(y, self.width - 1 - x, c)
        })
    }

    /// Bilinear resample to `new_h`×`new_w` using pixel-center alignment.
    /// Resizing to the same dimensions returns an exact copy.
    pub fn resize_bilinear(&self, new_h: usize, new_w: usize) -> ImageBuffer {
        if new_h == self.height && new_w == self.width {
            return self.clone();
        }
        let sy = self.height as f64 / new_h as f64;
        let sx = self.width as f64 / new_w as f64;
        let taps = |dst: usize, scale: f64, len: usize| {
            let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(len - 1);
            (i0, i1, src - i0 as f64)
        };
        let cols: Vec<_> = (0..new_w).map(|x| taps(x, sx, self.width)).collect();
        let mut out = ImageBuffer::new(new_h, new_w, self.channels);
        for y in 0..new_h {
            let (y0, y1, fy) = taps(y, sy, self.height);
            for (x, &(x0, x1, fx)) in cols.iter().enumerate() {
                for c in 0..self.channels {
                    let top = self.get(y0, x0, c) * (1.0 - fx) + self.get(y0, x1, c) * fx;
                    let bottom = self.get(y1, x0, c) * (1.0 - fx) + self.get(y1, x1, c) * fx;
                    out.set(y, x, c, top * (1.0 - fy) + bottom * fy);
                }
            }
        }
        out
    }
}

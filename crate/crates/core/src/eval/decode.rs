use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, CategoryId};

/// Center-point head outputs on the output grid (input resolution / stride).
#[derive(Debug, Clone, PartialEq)]
pub struct HeadMaps {
    classes: usize,
    height: usize,
    width: usize,
    /// `classes × H × W`, values in `[0, 1]`.
    heat: Vec<f64>,
    /// Planes `[width, height]`, in input-pixel units.
    wh: Vec<f64>,
    /// Planes `[dx, dy]`, sub-cell center offsets.
    offset: Vec<f64>,
}

impl HeadMaps {
    pub fn new(
        classes: usize,
        height: usize,
        width: usize,
        heat: Vec<f64>,
        wh: Vec<f64>,
        offset: Vec<f64>,
    ) -> Result<Self> {
        let plane = height * width;
        if heat.len() != classes * plane || wh.len() != 2 * plane || offset.len() != 2 * plane {
            return Err(Error::DimensionMismatch(format!(
                "maps must be {classes}/2/2 planes of {height}x{width}"
            )));
        }
        if heat.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "heat values must lie in [0, 1]".into(),
            ));
        }
        if wh.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("size/offset maps"));
        }
        Ok(HeadMaps {
            classes,
            height,
            width,
            heat,
            wh,
            offset,
        })
    }

    pub fn zeros(classes: usize, height: usize, width: usize) -> Self {
        let plane = height * width;
        HeadMaps {
            classes,
            height,
            width,
            heat: vec![0.0; classes * plane],
            wh: vec![0.0; 2 * plane],
            offset: vec![0.0; 2 * plane],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn heat(&self, class: usize, i: usize, j: usize) -> f64 {
        self.heat[(class * self.height + i) * self.width + j]
    }

    /// Sets one cell of every map; panics on out-of-range indices.
    pub fn set_cell(
        &mut self,
        class: usize,
        i: usize,
        j: usize,
        heat: f64,
        wh: (f64, f64),
        offset: (f64, f64),
    ) {
        let plane = self.height * self.width;
        let cell = i * self.width + j;
        self.heat[class * plane + cell] = heat;
        self.wh[cell] = wh.0;
        self.wh[plane + cell] = wh.1;
        self.offset[cell] = offset.0;
        self.offset[plane + cell] = offset.1;
    }

    pub fn set_heat(&mut self, class: usize, i: usize, j: usize, heat: f64) {
        self.heat[(class * self.height + i) * self.width + j] = heat;
    }

    fn is_peak(&self, class: usize, i: usize, j: usize) -> bool {
        let v = self.heat(class, i, j);
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni < 0 || nj < 0 || ni >= self.height as isize || nj >= self.width as isize {
                    continue;
                }
                if self.heat(class, ni as usize, nj as usize) > v {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub top_k: usize,
    pub score_thresh: f64,
    pub stride: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            top_k: 100,
            score_thresh: 0.01,
            stride: 4.0,
        }
    }
}

/// Peaks are cells at least as hot as all 8 neighbors (plateaus yield every
/// tied cell). The `top_k` hottest peaks are kept, then those below
/// `score_thresh` dropped. Candidates whose size map gives a non-positive
/// extent are skipped.
pub fn decode(maps: &HeadMaps, params: &DecodeParams) -> Vec<Detection> {
    let plane = maps.height * maps.width;
    let mut peaks: Vec<(usize, usize, usize, f64)> = Vec::new();
    for class in 0..maps.classes {
        for i in 0..maps.height {
            for j in 0..maps.width {
                if maps.is_peak(class, i, j) {
                    peaks.push((class, i, j, maps.heat(class, i, j)));
                }
            }
        }
    }
    // Stable: equal scores stay in (class, row, col) order.
    peaks.sort_by(|a, b| b.3.total_cmp(&a.3));
    peaks.truncate(params.top_k);
    peaks
        .into_iter()
        .filter(|p| p.3 >= params.score_thresh)
        .filter_map(|(class, i, j, score)| {
            let cell = i * maps.width + j;
            let (w, h) = (maps.wh[cell], maps.wh[plane + cell]);
            if !(w > 0.0 && h > 0.0) {
                return None;
            }
            let cx = (j as f64 + maps.offset[cell]) * params.stride;
            let cy = (i as f64 + maps.offset[plane + cell]) * params.stride;
            Some(Detection {
                bbox: BBox::new(cx - w / 2.0, cy - h / 2.0, w, h, CategoryId(class)),
                score,
            })
        })
        .collect()
}

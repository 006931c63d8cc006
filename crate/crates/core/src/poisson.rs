//! Gradient-domain seamless cloning.
//!
//! For every pixel `p` inside the clone region Ω the solver enforces the
//! 5-point discrete Poisson equation
//!
//! ```text
//! Σ_{q ∈ N(p)} f(q) − 4 f(p) = div(p)
//! ```
//!
//! with `f` fixed to the background on the ring of pixels just outside Ω.
//! Moving the known ring values to the right-hand side leaves the symmetric
//! positive-definite system `4 f(p) − Σ_{q ∈ N(p) ∩ Ω} f(q) = Σ_{q ∈ N(p) \ Ω} f*(q) − div(p)`,
//! which is solved per channel with unpreconditioned conjugate gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ImageBuffer, ObjectCrop, PixelRect};

const NEIGHBORS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuidanceMode {
    /// Guidance field is the gradient of the pasted patch.
    #[default]
    SourceGradients,
    /// Per neighbor pair, keep whichever of patch/background gradients is stronger.
    MixedGradients,
}

/// Pixels whose values are re-solved. Never touches the raster border, so
/// every interior pixel has four in-grid neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct CloneMask {
    height: usize,
    width: usize,
    interior: Vec<bool>,
}

impl CloneMask {
    pub fn new(height: usize, width: usize, interior: Vec<bool>) -> Result<Self> {
        if interior.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "mask of {}x{} needs {} cells, got {}",
                height,
                width,
                height * width,
                interior.len()
            )));
        }
        if !interior.iter().any(|&b| b) {
            return Err(Error::EmptyInterior);
        }
        for y in 0..height {
            for x in 0..width {
                let on_border = y == 0 || x == 0 || y + 1 == height || x + 1 == width;
                if on_border && interior[y * width + x] {
                    return Err(Error::InteriorTouchesBorder);
                }
            }
        }
        Ok(CloneMask {
            height,
            width,
            interior,
        })
    }

    /// Threshold `alpha > 0.5`, then erode once (4-neighborhood, outside the
    /// raster counts as background). An all-ones alpha yields the rectangle
    /// minus its border ring.
    pub fn from_alpha(alpha: &ImageBuffer) -> Result<Self> {
        let (h, w) = (alpha.height(), alpha.width());
        let on = |y: isize, x: isize| {
            y >= 0
                && x >= 0
                && (y as usize) < h
                && (x as usize) < w
                && alpha.get(y as usize, x as usize, 0) > 0.5
        };
        let mut interior = vec![false; h * w];
        for y in 0..h {
            for x in 0..w {
                let (yi, xi) = (y as isize, x as isize);
                interior[y * w + x] =
                    on(yi, xi) && NEIGHBORS.iter().all(|&(dy, dx)| on(yi + dy, xi + dx));
            }
        }
        Self::new(h, w, interior)
    }

    /// Interior = `rect`, inside a `height`×`width` raster.
    pub fn from_rect(height: usize, width: usize, rect: PixelRect) -> Result<Self> {
        let mut interior = vec![false; height * width];
        for y in rect.y..(rect.y + rect.h).min(height) {
            for x in rect.x..(rect.x + rect.w).min(width) {
                interior[y * width + x] = true;
            }
        }
        Self::new(height, width, interior)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn is_interior(&self, y: usize, x: usize) -> bool {
        self.interior[y * self.width + x]
    }

    pub fn interior_len(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }

    /// Interior pixels in row-major order.
    pub fn interior_pixels(&self) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (y, x)))
            .filter(|&(y, x)| self.is_interior(y, x))
            .collect()
    }
}

/// Divergence of the guidance field, one H×W plane per channel. Only the
/// non-border pixels carry values; the border ring is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceDivergence {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl GuidanceDivergence {
    pub fn from_planes(
        height: usize,
        width: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != height * width * channels {
            return Err(Error::DimensionMismatch("divergence plane size".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("guidance divergence"));
        }
        Ok(GuidanceDivergence {
            height,
            width,
            channels,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        GuidanceDivergence {
            height,
            width,
            channels,
            values: vec![0.0; height * width * channels],
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

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[(c * self.height + y) * self.width + x]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        GuidanceDivergence {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub tolerance: f64,
    /// `None` picks `max(200, 10·√n)` for `n` unknowns.
    pub max_iterations: Option<usize>,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tolerance: 1e-8,
            max_iterations: None,
        }
    }
}

impl SolverParams {
    pub fn iteration_cap(&self, unknowns: usize) -> usize {
        self.max_iterations
            .unwrap_or_else(|| ((10.0 * (unknowns as f64).sqrt()).ceil() as usize).max(200))
    }

    fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument(
                "solver tolerance must be positive".into(),
            ));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidArgument(
                "solver needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Raster with the interior re-solved (unclamped) plus per-channel solver stats.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub image: ImageBuffer,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

/// Divergence of the guidance field built from `source` (the patch) and
/// `background` (the region it will cover).
pub fn guidance_from_images(
    source: &ImageBuffer,
    background: &ImageBuffer,
    mode: GuidanceMode,
) -> Result<GuidanceDivergence> {
    if !source.same_shape(background) {
        return Err(Error::DimensionMismatch(format!(
            "patch is {}x{}x{}, background region is {}x{}x{}",
            source.height(),
            source.width(),
            source.channels(),
            background.height(),
            background.width(),
            background.channels()
        )));
    }
    let (h, w, ch) = (source.height(), source.width(), source.channels());
    let mut values = vec![0.0; h * w * ch];
    for c in 0..ch {
        for y in 1..h.saturating_sub(1) {
            for x in 1..w.saturating_sub(1) {
                let gp = source.get(y, x, c);
                let bp = background.get(y, x, c);
                let mut div = 0.0;
                for (dy, dx) in NEIGHBORS {
                    let (qy, qx) = ((y as isize + dy) as usize, (x as isize + dx) as usize);
                    let src = source.get(qy, qx, c) - gp;
                    div += match mode {
                        GuidanceMode::SourceGradients => src,
                        GuidanceMode::MixedGradients => {
                            let bg = background.get(qy, qx, c) - bp;
                            if bg.abs() > src.abs() {
                                bg
                            } else {
                                src
                            }
                        }
                    };
                }
                values[(c * h + y) * w + x] = div;
            }
        }
    }
    Ok(GuidanceDivergence {
        height: h,
        width: w,
        channels: ch,
        values,
    })
}

pub fn build_guidance(
    crop: &ObjectCrop,
    background_region: &ImageBuffer,
    mode: GuidanceMode,
) -> Result<GuidanceDivergence> {
    guidance_from_images(crop.patch(), background_region, mode)
}

/// Solves the Dirichlet problem on the mask interior; `boundary` supplies
/// the known values (only the ring around the interior is read).
pub fn solve_dirichlet(
    div: &GuidanceDivergence,
    boundary: &ImageBuffer,
    mask: &CloneMask,
    params: &SolverParams,
) -> Result<Solution> {
    params.validate()?;
    if boundary.height() != mask.height() || boundary.width() != mask.width() {
        return Err(Error::DimensionMismatch(
            "boundary raster does not match mask".into(),
        ));
    }
    if div.height() != mask.height()
        || div.width() != mask.width()
        || div.channels() != boundary.channels()
    {
        return Err(Error::DimensionMismatch(
            "divergence does not match mask/boundary".into(),
        ));
    }
    if boundary.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("boundary values"));
    }

    let pixels = mask.interior_pixels();
    if pixels.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let w = mask.width();
    let mut slot = vec![usize::MAX; mask.height() * w];
    for (k, &(y, x)) in pixels.iter().enumerate() {
        slot[y * w + x] = k;
    }
    // Interior neighbor indices per unknown, for the matrix-vector product.
    let links: Vec<[usize; 4]> = pixels
        .iter()
        .map(|&(y, x)| {
            NEIGHBORS
                .map(|(dy, dx)| slot[(y as isize + dy) as usize * w + (x as isize + dx) as usize])
        })
        .collect();

    let cap = params.iteration_cap(pixels.len());
    let mut image = boundary.clone();
    let mut iterations = Vec::with_capacity(boundary.channels());
    let mut residuals = Vec::with_capacity(boundary.channels());

    for c in 0..boundary.channels() {
        let rhs: Vec<f64> = pixels
            .iter()
            .map(|&(y, x)| {
                let known: f64 = NEIGHBORS
                    .iter()
                    .map(|&(dy, dx)| ((y as isize + dy) as usize, (x as isize + dx) as usize))
                    .filter(|&(qy, qx)| !mask.is_interior(qy, qx))
                    .map(|(qy, qx)| boundary.get(qy, qx, c))
                    .sum();
                known - div.get(c, y, x)
            })
            .collect();
        let (x, iters, residual) = conjugate_gradient(&links, &rhs, params.tolerance, cap)?;
        for (k, &(py, px)) in pixels.iter().enumerate() {
            image.set(py, px, c, x[k]);
        }
        iterations.push(iters);
        residuals.push(residual);
    }
    Ok(Solution {
        image,
        iterations,
        residuals,
    })
}

fn apply_laplacian(links: &[[usize; 4]], v: &[f64], out: &mut [f64]) {
    for (k, nb) in links.iter().enumerate() {
        let mut acc = 4.0 * v[k];
        for &j in nb {
            if j != usize::MAX {
                acc -= v[j];
            }
        }
        out[k] = acc;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns (solution, iterations used, final relative residual).
fn conjugate_gradient(
    links: &[[usize; 4]],
    b: &[f64],
    tol: f64,
    cap: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    let mut iters = 0;

    while iters < cap {
        apply_laplacian(links, &p, &mut ap);
        let alpha = rs / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iters += 1;
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= tol * b_norm {
            // The recurrence drifts; confirm against the true residual and
            // restart from the current iterate if it disagrees.
            apply_laplacian(links, &x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            rs = dot(&r, &r);
            if rs.sqrt() <= tol * b_norm {
                return Ok((x, iters, rs.sqrt() / b_norm));
            }
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }

    apply_laplacian(links, &x, &mut ap);
    let true_res = b
        .iter()
        .zip(&ap)
        .map(|(bi, ai)| (bi - ai).powi(2))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    if true_res <= tol {
        return Ok((x, iters, true_res));
    }
    Err(Error::NoConvergence {
        iterations: iters,
        residual: true_res,
        tolerance: tol,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CloneOptions {
    pub mode: GuidanceMode,
    pub solver: SolverParams,
}

/// Seamlessly clones `crop` into `background` with its top-left corner at
/// `position = (x, y)`. Only the clone-mask interior is written; the result
/// is clamped to `[0, 1]` there.
pub fn seamless_clone(
    background: &ImageBuffer,
    crop: &ObjectCrop,
    position: (usize, usize),
    mode: GuidanceMode,
) -> Result<ImageBuffer> {
    seamless_clone_with(
        background,
        crop,
        position,
        &CloneOptions {
            mode,
            ..Default::default()
        },
    )
}

pub fn seamless_clone_with(
    background: &ImageBuffer,
    crop: &ObjectCrop,
    position: (usize, usize),
    options: &CloneOptions,
) -> Result<ImageBuffer> {
    let (x, y) = position;
    let (cw, ch) = (crop.width(), crop.height());
    if x < 1 || y < 1 || x + cw + 1 > background.width() || y + ch + 1 > background.height() {
        return Err(Error::OutOfBounds(format!(
            "{cw}x{ch} crop at ({x}, {y}) needs a 1 px margin inside a {}x{} background",
            background.width(),
            background.height()
        )));
    }
    if crop.patch().channels() != background.channels() {
        return Err(Error::DimensionMismatch(format!(
            "crop has {} channels, background has {}",
            crop.patch().channels(),
            background.channels()
        )));
    }
    let region = background.crop(PixelRect::new(x, y, cw, ch))?;
    let mask = CloneMask::from_alpha(crop.alpha())?;
    let div = build_guidance(crop, &region, options.mode)?;
    let solution = solve_dirichlet(&div, &region, &mask, &options.solver)?;

    let mut out = background.clone();
    for (py, px) in mask.interior_pixels() {
        for c in 0..background.channels() {
            out.set(
                y + py,
                x + px,
                c,
                solution.image.get(py, px, c).clamp(0.0, 1.0),
            );
        }
    }
    Ok(out)
}

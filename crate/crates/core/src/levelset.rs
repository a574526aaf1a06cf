//! Level-set evolution seeded by fuzzy clustering.
//!
//! Sign convention: `phi > 0` inside the segmented region. Each explicit step is
//!
//! ```text
//! phi += tau * ( lambda * delta(phi) * div(g * grad(phi) / |grad(phi)|)
//!              + balloon_weight * g * G * delta(phi)
//!              + reg_mu * (laplacian(phi) - div(grad(phi) / |grad(phi)|)) )
//! ```
//!
//! where `g` is the edge indicator and `G = 2 R_k - 1` is the balloon force
//! derived from the lesion-cluster memberships `R_k`. The last term keeps
//! `phi` close to a signed distance function so no reinitialization is needed;
//! setting `reg_mu = 0` drops it.

use alloc::vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fcm::{self, FcmConfig, FcmResult, MembershipMap};
use crate::imaging::{gaussian_smooth, gradient_unchecked, ImageGrid, ScalarField, SegMask, NORM_EPS};

/// The evolving surface; same layout as the image it segments.
pub type LevelSetField = ScalarField;

/// Explicit-scheme stability bound on the time step.
pub const MAX_TAU: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetParams {
    /// Weight of the edge-weighted contour-length term.
    pub lambda: f64,
    /// Width of the regularized Dirac function.
    pub dirac_eps: f64,
    /// Time step.
    pub tau: f64,
    pub iterations: usize,
    /// Distance-regularization weight.
    pub reg_mu: f64,
    pub balloon_weight: f64,
    /// Magnitude of the binary initial surface.
    pub c0: f64,
}

impl Default for LevelSetParams {
    fn default() -> Self {
        let tau = 0.1;
        Self {
            lambda: 5.0 * tau,
            dirac_eps: 1.5,
            tau,
            iterations: 100,
            reg_mu: 0.2 / tau,
            balloon_weight: 1.0,
            c0: 2.0,
        }
    }
}

impl LevelSetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be finite and non-negative"));
        }
        if !(self.dirac_eps > 0.0) || !self.dirac_eps.is_finite() {
            return Err(invalid("dirac_eps", "must be finite and positive"));
        }
        if !(self.tau > 0.0 && self.tau <= MAX_TAU) {
            return Err(invalid("tau", "must lie in (0, 0.25]"));
        }
        if !(self.reg_mu >= 0.0) || self.reg_mu * self.tau > MAX_TAU {
            return Err(invalid("reg_mu", "must be non-negative with reg_mu * tau <= 0.25"));
        }
        if !self.balloon_weight.is_finite() {
            return Err(invalid("balloon_weight", "must be finite"));
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(invalid("c0", "must be finite and positive"));
        }
        Ok(())
    }
}

/// Edge indicator `g`, in `(0, 1]`, equal to 1 on flat regions.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeIndicator {
    g: ScalarField,
}

impl EdgeIndicator {
    /// `g ≡ 1`: no edge stopping.
    pub fn uniform(width: usize, height: usize) -> Self {
        Self { g: ScalarField::filled(width, height, 1.0) }
    }

    pub fn field(&self) -> &ScalarField {
        &self.g
    }
}

/// Curvature `(φxx φy² − 2 φxy φx φy + φyy φx²) / (φx² + φy² + 1e-10)^(3/2)`
/// from central differences (neighbours clamped at the border).
pub fn curvature(phi: &LevelSetField) -> Result<ScalarField> {
    phi.check_min_size(3)?;
    let (w, h) = (phi.width(), phi.height());
    Ok(ScalarField::from_fn(w, h, |x, y| {
        let xm = x.saturating_sub(1);
        let xp = (x + 1).min(w - 1);
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        let c = phi.get(x, y);
        let fx = 0.5 * (phi.get(xp, y) - phi.get(xm, y));
        let fy = 0.5 * (phi.get(x, yp) - phi.get(x, ym));
        let fxx = phi.get(xp, y) - 2.0 * c + phi.get(xm, y);
        let fyy = phi.get(x, yp) - 2.0 * c + phi.get(x, ym);
        let fxy = 0.25 * (phi.get(xp, yp) - phi.get(xp, ym) - phi.get(xm, yp) + phi.get(xm, ym));
        let num = fxx * fy * fy - 2.0 * fxy * fx * fy + fyy * fx * fx;
        let den = libm::pow(fx * fx + fy * fy + NORM_EPS, 1.5);
        num / den
    }))
}

#[inline]
fn dirac_value(z: f64, eps: f64) -> f64 {
    if libm::fabs(z) <= eps {
        (1.0 + libm::cos(PI * z / eps)) / (2.0 * eps)
    } else {
        0.0
    }
}

/// Regularized Dirac `(1 + cos(π z / ε)) / (2ε)` on `|z| <= ε`, zero elsewhere.
pub fn dirac(phi: &LevelSetField, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid("dirac_eps", "must be finite and positive"));
    }
    Ok(phi.map(|z| dirac_value(z, eps)))
}

/// `g = 1 / (1 + |∇(G_σ * I)|²)`.
pub fn edge_indicator(image: &ImageGrid, sigma: f64) -> Result<EdgeIndicator> {
    image.check_min_size(3)?;
    let smooth = gaussian_smooth(image, sigma)?;
    let (gx, gy) = gradient_unchecked(&smooth);
    let values = gx
        .values()
        .iter()
        .zip(gy.values())
        .map(|(a, b)| 1.0 / (1.0 + a * a + b * b))
        .collect();
    Ok(EdgeIndicator { g: ScalarField::new(image.width(), image.height(), values)? })
}

fn check_points(mm: &MembershipMap, width: usize, height: usize) -> Result<()> {
    if mm.n_points() != width * height {
        return Err(Error::DimensionMismatch { expected: width * height, found: mm.n_points() });
    }
    Ok(())
}

/// Balloon force `G = 2 R_k − 1`: expands where the lesion membership exceeds
/// one half and shrinks where it is below.
pub fn balloon_force(mm: &MembershipMap, k: usize, width: usize, height: usize) -> Result<ScalarField> {
    check_points(mm, width, height)?;
    let rk = mm.column(k)?;
    ScalarField::new(width, height, rk.into_iter().map(|u| 2.0 * u - 1.0).collect())
}

/// Binary initial surface `c0 (2 B − 1)` with `B = [μ_nk >= 0.5]`.
pub fn init_from_membership(mm: &MembershipMap, k: usize, c0: f64, width: usize, height: usize) -> Result<LevelSetField> {
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(invalid("c0", "must be finite and positive"));
    }
    check_points(mm, width, height)?;
    let rk = mm.column(k)?;
    LevelSetField::new(width, height, rk.into_iter().map(|u| if u >= 0.5 { c0 } else { -c0 }).collect())
}

/// Region where `phi >= 0`.
pub fn zero_level_mask(phi: &LevelSetField) -> SegMask {
    SegMask::new(phi.width(), phi.height(), phi.values().iter().map(|&v| v >= 0.0).collect())
        .expect("grid dimensions are valid")
}

/// Runs `params.iterations` explicit Euler steps.
pub fn evolve(phi0: &LevelSetField, g: &EdgeIndicator, balloon: &ScalarField, params: &LevelSetParams) -> Result<LevelSetField> {
    evolve_with(phi0, g, balloon, params, |_, _| {})
}

/// Like [`evolve`], calling `on_step(i, phi)` after step `i` (1-based).
pub fn evolve_with(
    phi0: &LevelSetField,
    g: &EdgeIndicator,
    balloon: &ScalarField,
    params: &LevelSetParams,
    mut on_step: impl FnMut(usize, &LevelSetField),
) -> Result<LevelSetField> {
    params.validate()?;
    let (w, h) = (phi0.width(), phi0.height());
    phi0.check_min_size(3)?;
    g.g.check_shape(w, h)?;
    balloon.check_shape(w, h)?;
    if phi0.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial level set"));
    }

    let gv = g.g.values();
    let bv = balloon.values();
    let mut phi = phi0.clone();
    let n = w * h;
    let mut nx = ScalarField::filled(w, h, 0.0);
    let mut ny = ScalarField::filled(w, h, 0.0);
    let mut gnx = ScalarField::filled(w, h, 0.0);
    let mut gny = ScalarField::filled(w, h, 0.0);
    let mut next = vec![0.0; n];

    for iteration in 1..=params.iterations {
        let (px, py) = gradient_unchecked(&phi);
        for (i, &g) in gv.iter().enumerate() {
            let (a, b) = (px.values()[i], py.values()[i]);
            let norm = libm::sqrt(a * a + b * b) + NORM_EPS;
            nx.values_mut()[i] = a / norm;
            ny.values_mut()[i] = b / norm;
            gnx.values_mut()[i] = g * a / norm;
            gny.values_mut()[i] = g * b / norm;
        }
        let (dgx, _) = gradient_unchecked(&gnx);
        let (_, dgy) = gradient_unchecked(&gny);
        let (dnx, _) = gradient_unchecked(&nx);
        let (_, dny) = gradient_unchecked(&ny);

        let p = phi.values();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let delta = dirac_value(p[i], params.dirac_eps);
                let mut rhs = 0.0;
                if delta > 0.0 {
                    let div_gn = dgx.values()[i] + dgy.values()[i];
                    rhs += params.lambda * delta * div_gn + params.balloon_weight * gv[i] * bv[i] * delta;
                }
                if params.reg_mu > 0.0 {
                    let left = p[if x > 0 { i - 1 } else { i }];
                    let right = p[if x + 1 < w { i + 1 } else { i }];
                    let up = p[if y > 0 { i - w } else { i }];
                    let down = p[if y + 1 < h { i + w } else { i }];
                    let lap = left + right + up + down - 4.0 * p[i];
                    let div_n = dnx.values()[i] + dny.values()[i];
                    rhs += params.reg_mu * (lap - div_n);
                }
                next[i] = p[i] + params.tau * rhs;
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration });
        }
        phi.values_mut().copy_from_slice(&next);
        on_step(iteration, &phi);
    }
    Ok(phi)
}

/// Optional replacements for the level-set parameters used by [`fuzzy_level_set_segment`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelSetOverrides {
    pub lambda: Option<f64>,
    pub dirac_eps: Option<f64>,
    pub tau: Option<f64>,
    pub iterations: Option<usize>,
    pub reg_mu: Option<f64>,
    pub balloon_weight: Option<f64>,
    pub c0: Option<f64>,
}

impl LevelSetOverrides {
    pub fn apply(&self, params: &mut LevelSetParams) {
        if let Some(v) = self.lambda {
            params.lambda = v;
        }
        if let Some(v) = self.dirac_eps {
            params.dirac_eps = v;
        }
        if let Some(v) = self.tau {
            params.tau = v;
        }
        if let Some(v) = self.iterations {
            params.iterations = v;
        }
        if let Some(v) = self.reg_mu {
            params.reg_mu = v;
        }
        if let Some(v) = self.balloon_weight {
            params.balloon_weight = v;
        }
        if let Some(v) = self.c0 {
            params.c0 = v;
        }
    }
}

/// Settings for the full clustering + level-set segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOptions {
    pub fcm: FcmConfig,
    /// Spatial regularization window (odd).
    pub window: usize,
    /// Forces the lesion cluster instead of picking the brightest centroid.
    pub lesion_cluster: Option<usize>,
    /// Smoothing applied before the edge indicator.
    pub edge_sigma: f64,
    /// Derive level-set parameters from the clustering result.
    pub auto: bool,
    pub overrides: LevelSetOverrides,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            fcm: FcmConfig::default(),
            window: 3,
            lesion_cluster: None,
            edge_sigma: 1.0,
            auto: true,
            overrides: LevelSetOverrides::default(),
        }
    }
}

/// Level-set parameters derived from the area (pixel count) of the initial lesion region.
pub fn auto_params(initial_area: usize) -> LevelSetParams {
    let tau = 0.1;
    let side = libm::ceil(libm::sqrt(initial_area as f64)) as usize;
    LevelSetParams {
        lambda: 5.0 * tau,
        dirac_eps: 1.5,
        tau,
        iterations: (side * 5).min(1000),
        reg_mu: 0.2 / tau,
        balloon_weight: 1.0,
        c0: 2.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub mask: SegMask,
    /// Thresholded lesion memberships the evolution started from.
    pub initial_mask: SegMask,
    pub fcm: FcmResult,
    /// Spatially regularized memberships that seeded the evolution.
    pub memberships: MembershipMap,
    pub lesion_cluster: usize,
    pub params: LevelSetParams,
    pub phi: LevelSetField,
}

/// Clusters the image, seeds a level set from the lesion cluster and evolves it.
///
/// Fails with [`Error::NoLesionRegion`] when the image has fewer than two
/// intensity levels or no pixel reaches lesion membership 0.5. When the image
/// has fewer distinct levels than `options.fcm.clusters`, the cluster count is
/// reduced to the number of levels.
pub fn fuzzy_level_set_segment(image: &ImageGrid, options: &SegmentOptions) -> Result<Segmentation> {
    let (w, h) = (image.width(), image.height());
    image.check_min_size(3)?;
    let data = image.values();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("image"));
    }
    let levels = fcm::distinct_count(data);
    if levels < 2 {
        return Err(Error::NoLesionRegion);
    }
    let mut fcm_cfg = options.fcm.clone();
    fcm_cfg.clusters = fcm_cfg.clusters.min(levels);

    let fit = fcm::fcm_fit(data, &fcm_cfg)?;
    let regularized = fcm::spatial_regularize(&fit.memberships, w, h, options.window)?;
    let k = match options.lesion_cluster {
        Some(k) => {
            regularized.check_cluster(k)?;
            k
        }
        None => fcm::select_lesion_cluster(&fit),
    };

    let mut params = if options.auto { auto_params(0) } else { LevelSetParams::default() };
    options.overrides.apply(&mut params);
    let phi0 = init_from_membership(&regularized, k, params.c0, w, h)?;
    let initial_mask = zero_level_mask(&phi0);
    let area = initial_mask.area();
    if area == 0 {
        return Err(Error::NoLesionRegion);
    }
    if options.auto {
        params.iterations = auto_params(area).iterations;
        options.overrides.apply(&mut params);
    }

    let g = edge_indicator(image, options.edge_sigma)?;
    let balloon = balloon_force(&regularized, k, w, h)?;
    let phi = evolve(&phi0, &g, &balloon, &params)?;
    Ok(Segmentation {
        mask: zero_level_mask(&phi),
        initial_mask,
        fcm: fit,
        memberships: regularized,
        lesion_cluster: k,
        params,
        phi,
    })
}

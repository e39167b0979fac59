//! Material coefficients and the M1 minimum-entropy closure.
//!
//! The closure takes the relative flux `f = ψ⁽¹⁾/ψ⁽⁰⁾` to the Eddington
//! factor `χ(f) = (5 − 2√(4 − 3|f|²))/3` and the Eddington tensor
//! `D(f) = ((1−χ)/2) I + ((3χ−1)/2) f⊗f/|f|²`, the 3-D form evaluated
//! with a planar flux vector. The realizable set is `ψ⁽⁰⁾ ≥ 0`,
//! `|ψ⁽¹⁾| ≤ ψ⁽⁰⁾`.

use serde::{Deserialize, Serialize};

use crate::grid::RegionMap;
use crate::{Error, Result};

/// Density floor used when forming `f` near vacuum.
pub const VACUUM_FLOOR: f64 = 1e-30;

/// Margin keeping `|f|` strictly inside the realizable ball.
pub const FLUX_MARGIN: f64 = 1e-8;

/// Absorption/scattering pair for one material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub sigma_a: f64,
    pub sigma_s: f64,
}

/// Per-cell cross-sections with a uniform mean scattering cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    pub sigma_a: Vec<f64>,
    pub sigma_s: Vec<f64>,
    pub g: f64,
}

impl MaterialField {
    #[inline]
    pub fn sigma_t(&self, k: usize) -> f64 {
        self.sigma_a[k] + self.sigma_s[k]
    }

    pub fn n_cells(&self) -> usize {
        self.sigma_a.len()
    }
}

fn check_params(name: &str, p: MaterialParams) -> Result<()> {
    if !(p.sigma_a.is_finite() && p.sigma_s.is_finite()) {
        return Err(Error::Hypothesis(format!(
            "(H-2) {name} cross-sections must be finite: sigma_a = {}, sigma_s = {}",
            p.sigma_a, p.sigma_s
        )));
    }
    if p.sigma_a < 0.0 || p.sigma_s < 0.0 {
        return Err(Error::Hypothesis(format!(
            "(H-1) {name} cross-sections must be nonnegative: sigma_a = {}, sigma_s = {}",
            p.sigma_a, p.sigma_s
        )));
    }
    if p.sigma_a <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "(H-3) {name} must be absorbing: sigma_t - sigma_s = sigma_a = {} is not > 0",
            p.sigma_a
        )));
    }
    Ok(())
}

/// Assigns void or tissue parameters per cell from the void flag.
pub fn materials_from_regions(
    regions: &RegionMap,
    void_params: MaterialParams,
    tissue_params: MaterialParams,
    g: f64,
) -> Result<MaterialField> {
    check_params("void material", void_params)?;
    check_params("tissue material", tissue_params)?;
    if !(g.abs() <= 1.0) {
        return Err(Error::Config(format!(
            "mean scattering cosine must satisfy |g| <= 1, got {g}"
        )));
    }
    let n = regions.n_cells();
    let mut sigma_a = vec![0.0; n];
    let mut sigma_s = vec![0.0; n];
    for k in 0..n {
        let p = if regions.void[k] { void_params } else { tissue_params };
        sigma_a[k] = p.sigma_a;
        sigma_s[k] = p.sigma_s;
    }
    Ok(MaterialField { sigma_a, sigma_s, g })
}

/// Henyey-Greenstein scattering kernel
/// `(1−g²) / (4π (1+g² − 2gη)^{3/2})` for scattering cosine `η`.
///
/// Normalized so its η-integral over `[-1,1]` is `1/(2π)`. The kernel
/// never enters the moment equations (only `g` does); it backs the
/// discrete-ordinates oracle and validation tests.
pub fn hg_kernel(g: f64, eta: f64) -> Result<f64> {
    if g.abs() >= 1.0 {
        return Err(Error::Config(format!(
            "Henyey-Greenstein kernel is singular at |g| = 1, got g = {g}"
        )));
    }
    if eta.abs() > 1.0 {
        return Err(Error::Config(format!(
            "scattering cosine must satisfy |eta| <= 1, got {eta}"
        )));
    }
    let denom = 1.0 + g * g - 2.0 * g * eta;
    Ok((1.0 - g * g) / (4.0 * std::f64::consts::PI * denom.powf(1.5)))
}

/// Eddington factor `χ(f) = (5 − 2√(4 − 3f²))/3` for `f = |ψ⁽¹⁾|/ψ⁽⁰⁾`.
pub fn eddington_factor(f_mag: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_mag) {
        return Err(Error::Closure(format!(
            "relative flux magnitude {f_mag} is outside the realizable range [0, 1]"
        )));
    }
    Ok(chi_unchecked(f_mag))
}

#[inline]
pub(crate) fn chi_unchecked(f_mag: f64) -> f64 {
    (5.0 - 2.0 * (4.0 - 3.0 * f_mag * f_mag).sqrt()) / 3.0
}

/// Planar block of the Eddington tensor plus its zz entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureState {
    /// Relative flux vector.
    pub f: [f64; 2],
    pub chi: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
    pub dzz: f64,
}

/// Eddington tensor entries for a relative flux vector. At `f = 0` the
/// `f⊗f/|f|²` term contributes nothing and the tensor is `I/3`.
#[inline]
pub(crate) fn closure_unchecked(fx: f64, fy: f64) -> ClosureState {
    let f2 = fx * fx + fy * fy;
    let chi = chi_unchecked(f2.sqrt().min(1.0));
    let iso = (1.0 - chi) / 2.0;
    let aniso = (3.0 * chi - 1.0) / 2.0;
    if f2 > 0.0 {
        ClosureState {
            f: [fx, fy],
            chi,
            dxx: iso + aniso * fx * fx / f2,
            dxy: aniso * fx * fy / f2,
            dyy: iso + aniso * fy * fy / f2,
            dzz: iso,
        }
    } else {
        ClosureState {
            f: [fx, fy],
            chi,
            dxx: 1.0 / 3.0,
            dxy: 0.0,
            dyy: 1.0 / 3.0,
            dzz: 1.0 / 3.0,
        }
    }
}

/// M1 closure for a realizable moment pair: `ψ⁽²⁾ = D(f)·ψ⁽⁰⁾`.
pub fn eddington_tensor(psi0: f64, psi1: [f64; 2]) -> Result<ClosureState> {
    if !(psi0 > 0.0) {
        return Err(Error::Closure(format!(
            "zeroth moment must be positive, got {psi0}"
        )));
    }
    let mag = (psi1[0] * psi1[0] + psi1[1] * psi1[1]).sqrt();
    if mag > psi0 * (1.0 + 1e-12) {
        return Err(Error::Closure(format!(
            "unrealizable moments: |psi1| = {mag} exceeds psi0 = {psi0}"
        )));
    }
    Ok(closure_unchecked(psi1[0] / psi0, psi1[1] / psi0))
}

/// Clamps a moment pair back into the realizable set: floors `ψ⁽⁰⁾` and
/// rescales `ψ⁽¹⁾` so `|ψ⁽¹⁾| ≤ (1 − 10⁻⁸)·ψ⁽⁰⁾`. Identity on already
/// realizable input; idempotent.
#[inline]
pub fn realizability_clamp(psi0: f64, psi1: [f64; 2], floor: f64) -> (f64, [f64; 2]) {
    let p0 = psi0.max(floor);
    let mag = (psi1[0] * psi1[0] + psi1[1] * psi1[1]).sqrt();
    let limit = (1.0 - FLUX_MARGIN) * p0;
    if mag > limit {
        let s = if mag > 0.0 { limit / mag } else { 0.0 };
        (p0, [psi1[0] * s, psi1[1] * s])
    } else {
        (p0, psi1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature, used as an independent oracle for the
    /// kernel normalization identities.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        recurse(f, a, b, simpson(f, a, b), tol, 40)
    }

    #[test]
    fn hg_isotropic_limit() {
        for eta in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_relative_eq!(
                hg_kernel(0.0, eta).unwrap(),
                1.0 / (4.0 * std::f64::consts::PI)
            );
        }
    }

    #[test]
    fn hg_normalization() {
        for g in [0.0, 0.5, 0.85, 0.99] {
            let integral = adaptive_simpson(&|eta| hg_kernel(g, eta).unwrap(), -1.0, 1.0, 1e-12);
            assert!(
                (integral - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-8,
                "g = {g}: integral = {integral}"
            );
        }
    }

    #[test]
    fn hg_mean_cosine() {
        let g = 0.85;
        let mean = 2.0 * std::f64::consts::PI
            * adaptive_simpson(&|eta| eta * hg_kernel(g, eta).unwrap(), -1.0, 1.0, 1e-12);
        assert!((mean - g).abs() < 1e-6, "mean cosine = {mean}");
    }

    #[test]
    fn hg_rejects_singular_g() {
        assert!(hg_kernel(1.0, 0.0).is_err());
        assert!(hg_kernel(-1.0, 0.0).is_err());
        assert!(hg_kernel(0.5, 1.5).is_err());
    }

    #[test]
    fn chi_endpoints() {
        assert_eq!(eddington_factor(0.0).unwrap(), 1.0 / 3.0);
        assert_eq!(eddington_factor(1.0).unwrap(), 1.0);
        assert_relative_eq!(
            eddington_factor(0.5).unwrap(),
            (5.0 - 2.0 * 3.25f64.sqrt()) / 3.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(eddington_factor(0.5).unwrap(), 0.4648162415, epsilon = 1e-9);
        assert!(eddington_factor(1.1).is_err());
        assert!(eddington_factor(-0.1).is_err());
    }

    #[test]
    fn chi_monotone_and_bounded() {
        let mut prev = eddington_factor(0.0).unwrap();
        for k in 1..=1000 {
            let f = k as f64 / 1000.0;
            let chi = eddington_factor(f).unwrap();
            assert!((1.0 / 3.0..=1.0).contains(&chi));
            assert!(chi >= prev, "chi not monotone at f = {f}");
            prev = chi;
        }
    }

    #[test]
    fn tensor_isotropic_and_free_streaming() {
        let iso = eddington_tensor(1.0, [0.0, 0.0]).unwrap();
        assert_relative_eq!(iso.dxx, 1.0 / 3.0);
        assert_relative_eq!(iso.dyy, 1.0 / 3.0);
        assert_relative_eq!(iso.dzz, 1.0 / 3.0);
        assert_eq!(iso.dxy, 0.0);

        let fs = eddington_tensor(1.0, [1.0, 0.0]).unwrap();
        assert_relative_eq!(fs.dxx, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fs.dyy, 0.0, epsilon = 1e-12);
        assert_relative_eq!(fs.dzz, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tensor_half_flux() {
        let st = eddington_tensor(2.0, [1.0, 0.0]).unwrap();
        let chi = eddington_factor(0.5).unwrap();
        // xx entry equals chi when f is axis-aligned
        assert_relative_eq!(st.dxx, chi, epsilon = 1e-14);
        assert_relative_eq!(st.dyy, (1.0 - chi) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(st.dxx, 0.4648162415, epsilon = 1e-9);
        assert_relative_eq!(st.dyy, 0.2675918792, epsilon = 1e-9);
    }

    #[test]
    fn tensor_rejects_unrealizable() {
        assert!(eddington_tensor(0.0, [0.0, 0.0]).is_err());
        assert!(eddington_tensor(1.0, [1.5, 0.0]).is_err());
    }

    #[test]
    fn clamp_examples() {
        let (p0, p1) = realizability_clamp(1.0, [0.2, 0.0], VACUUM_FLOOR);
        assert_eq!((p0, p1), (1.0, [0.2, 0.0]));

        let (p0, p1) = realizability_clamp(1.0, [2.0, 0.0], VACUUM_FLOOR);
        assert_eq!(p0, 1.0);
        assert_relative_eq!(p1[0], 1.0 - FLUX_MARGIN, epsilon = 1e-12);
        assert_eq!(p1[1], 0.0);

        let (p0, p1) = realizability_clamp(-0.1, [0.0, 0.0], 1e-30);
        assert_eq!((p0, p1), (1e-30, [0.0, 0.0]));
    }

    #[test]
    fn materials_table_values() {
        let g = crate::grid::build_grid(50, 50).unwrap();
        let regions = crate::grid::classify_regions(&g, crate::grid::TargetCase::Basic);
        let mats = materials_from_regions(
            &regions,
            MaterialParams { sigma_a: 0.001, sigma_s: 0.01 },
            MaterialParams { sigma_a: 0.05, sigma_s: 0.5 },
            0.85,
        )
        .unwrap();
        for k in 0..regions.n_cells() {
            if regions.void[k] {
                assert_eq!(mats.sigma_a[k], 0.001);
                assert_eq!(mats.sigma_s[k], 0.01);
            } else {
                assert_eq!(mats.sigma_a[k], 0.05);
                assert_eq!(mats.sigma_s[k], 0.5);
            }
        }
        assert_eq!(mats.g, 0.85);
    }

    #[test]
    fn materials_reject_nonabsorbing() {
        let g = crate::grid::build_grid(10, 10).unwrap();
        let regions = crate::grid::classify_regions(&g, crate::grid::TargetCase::Basic);
        let err = materials_from_regions(
            &regions,
            MaterialParams { sigma_a: 0.001, sigma_s: 0.01 },
            MaterialParams { sigma_a: 0.0, sigma_s: 0.5 },
            0.85,
        )
        .unwrap_err();
        assert!(err.to_string().contains("H-3"), "{err}");
    }

    proptest! {
        #[test]
        fn tensor_trace_one_and_psd(psi0 in 1e-6f64..10.0, mag in 0.0f64..1.0, angle in 0.0f64..std::f64::consts::TAU) {
            let psi1 = [psi0 * mag * angle.cos(), psi0 * mag * angle.sin()];
            let st = eddington_tensor(psi0, psi1).unwrap();
            let trace = st.dxx + st.dyy + st.dzz;
            prop_assert!((trace - 1.0).abs() < 1e-12);
            // planar eigenvalues
            let mean = 0.5 * (st.dxx + st.dyy);
            let disc = (0.25 * (st.dxx - st.dyy).powi(2) + st.dxy * st.dxy).sqrt();
            for ev in [mean - disc, mean + disc, st.dzz] {
                prop_assert!(ev >= -1e-12 && ev <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn clamp_idempotent(psi0 in -2.0f64..2.0, p1x in -3.0f64..3.0, p1y in -3.0f64..3.0) {
            // idempotent up to one rounding of the rescale
            let once = realizability_clamp(psi0, [p1x, p1y], VACUUM_FLOOR);
            let twice = realizability_clamp(once.0, once.1, VACUUM_FLOOR);
            prop_assert_eq!(once.0, twice.0);
            let scale = once.0.max(1.0);
            prop_assert!((once.1[0] - twice.1[0]).abs() <= 1e-15 * scale);
            prop_assert!((once.1[1] - twice.1[1]).abs() <= 1e-15 * scale);
        }
    }
}

//! The scale function `W`: the unique absolutely continuous increasing
//! function with Laplace transform `1/psi(lambda)` for `lambda > phi(0)`,
//! together with the exit-probability and minimum-law functionals built
//! from it.
//!
//! Closed forms cover the canonical stable family (`W(x) = x^{alpha-1} /
//! Gamma(alpha)`) and Brownian motion with drift; everything else goes
//! through Gaver-Stehfest inversion on the real axis. Specs with
//! `phi(0) > 0` are inverted under the Esscher-shifted exponent and scaled
//! back by `e^{phi(0) x}`, which keeps the evaluation abscissas right of
//! the singularity of `1/psi`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::levy::ProcessSpec;
use crate::numeric;

/// Default number of Gaver-Stehfest terms. Fourteen terms in double
/// precision balance truncation against the ~1e8 growth of the weights.
pub const DEFAULT_GS_TERMS: usize = 14;

/// Relative-error estimate above which an inversion result is rejected.
pub const PRECISION_LOSS_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMethod {
    ClosedFormStable,
    ClosedFormBmDrift,
    GaverStehfest,
}

impl std::fmt::Display for ScaleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScaleMethod::ClosedFormStable => "closed_form_stable",
            ScaleMethod::ClosedFormBmDrift => "closed_form_bm_drift",
            ScaleMethod::GaverStehfest => "gaver_stehfest",
        };
        f.write_str(s)
    }
}

/// Evaluator for the scale function of one process spec.
///
/// Immutable after construction and shareable across threads.
#[derive(Debug, Clone)]
pub struct ScaleFunction {
    spec: ProcessSpec,
    method: ScaleMethod,
    gs_terms: usize,
    /// Abscissa offset: `phi(0)`, so that `1/psi(shift + .)` is evaluated
    /// right of the killing rate.
    shift: f64,
    weights: Vec<f64>,
    weights_check: Vec<f64>,
}

impl ScaleFunction {
    /// Auto-select the fastest valid method for `spec`.
    pub fn new(spec: ProcessSpec) -> Result<Self> {
        let method = if spec.canonical_stable_alpha().map_or(false, |a| a < 2.0) {
            ScaleMethod::ClosedFormStable
        } else if spec.jumps.is_none() {
            ScaleMethod::ClosedFormBmDrift
        } else {
            ScaleMethod::GaverStehfest
        };
        Self::with_method(spec, method, DEFAULT_GS_TERMS)
    }

    pub fn with_method(spec: ProcessSpec, method: ScaleMethod, gs_terms: usize) -> Result<Self> {
        if gs_terms < 4 || gs_terms % 2 != 0 {
            return Err(Error::Domain(format!(
                "Gaver-Stehfest term count must be even and >= 4, got {gs_terms}"
            )));
        }
        match method {
            ScaleMethod::ClosedFormStable => {
                if spec.canonical_stable_alpha().map_or(true, |a| a >= 2.0) {
                    return Err(Error::Unsupported(
                        "closed-form stable W requires the canonical stable family".into(),
                    ));
                }
            }
            ScaleMethod::ClosedFormBmDrift => {
                if !spec.jumps.is_none() {
                    return Err(Error::Unsupported(
                        "closed-form W requires a jump-free spec".into(),
                    ));
                }
            }
            ScaleMethod::GaverStehfest => {}
        }
        let shift = spec.phi(0.0)?;
        Ok(ScaleFunction {
            spec,
            method,
            gs_terms,
            shift,
            weights: numeric::stehfest_weights(gs_terms),
            weights_check: numeric::stehfest_weights(gs_terms - 2),
        })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn method(&self) -> ScaleMethod {
        self.method
    }

    pub fn gs_terms(&self) -> usize {
        self.gs_terms
    }

    /// `W(0)`: zero for unbounded variation, reciprocal natural drift for
    /// bounded variation.
    fn w_at_zero(&self) -> f64 {
        match self.spec.bv_drift() {
            Some(b) => 1.0 / b,
            None => 0.0,
        }
    }

    /// Evaluate `W(x)` together with a relative-error estimate.
    ///
    /// Closed forms report a zero estimate. The Gaver-Stehfest estimate is
    /// the relative gap between the n-term and (n-2)-term inversions.
    pub fn w_with_error(&self, x: f64) -> Result<(f64, f64)> {
        if x < 0.0 || !x.is_finite() {
            return Err(Error::Domain(format!("W requires x >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok((self.w_at_zero(), 0.0));
        }
        match self.method {
            ScaleMethod::ClosedFormStable => {
                let alpha = self
                    .spec
                    .canonical_stable_alpha()
                    .expect("validated at construction");
                Ok((x.powf(alpha - 1.0) / gamma(alpha), 0.0))
            }
            ScaleMethod::ClosedFormBmDrift => {
                let b = self.spec.a;
                let s2 = self.spec.sigma * self.spec.sigma;
                let w = if s2 == 0.0 {
                    1.0 / b
                } else if b == 0.0 {
                    2.0 * x / s2
                } else {
                    (1.0 - (-2.0 * b * x / s2).exp()) / b
                };
                Ok((w, 0.0))
            }
            ScaleMethod::GaverStehfest => {
                let transform = |l: f64| 1.0 / self.spec.psi_unchecked(l + self.shift);
                let main = numeric::gaver_stehfest(&transform, x, &self.weights);
                let check = numeric::gaver_stehfest(&transform, x, &self.weights_check);
                let scale = (self.shift * x).exp();
                let err = (main - check).abs() / main.abs().max(1e-300);
                Ok((scale * main, err))
            }
        }
    }

    /// `W(x)`, rejecting Gaver-Stehfest results whose error estimate
    /// exceeds [`PRECISION_LOSS_THRESHOLD`].
    pub fn w(&self, x: f64) -> Result<f64> {
        let (w, err) = self.w_with_error(x)?;
        if err > PRECISION_LOSS_THRESHOLD {
            return Err(Error::PrecisionLoss { x, estimate: err });
        }
        Ok(w)
    }

    /// Two-sided exit probability: chance that the process started at 0
    /// leaves `[-x, y]` at the top, `W(x)/W(x+y)`.
    pub fn exit_prob(&self, x: f64, y: f64) -> Result<f64> {
        if x <= 0.0 || y <= 0.0 {
            return Err(Error::Domain(format!(
                "exit_prob requires x, y > 0, got x = {x}, y = {y}"
            )));
        }
        let denom = self.w(x + y)?;
        if denom == 0.0 {
            return Err(Error::Degenerate(format!("W({}) = 0", x + y)));
        }
        Ok(self.w(x)? / denom)
    }

    /// Law of the absolute minimum of the process conditioned to stay
    /// positive and started at `x`: `P(xi_m >= y) = W(x-y)/W(x)`, clamped
    /// to 1 for `y < 0` and 0 for `y > x`.
    pub fn min_law(&self, x: f64, y: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!("min_law requires x > 0, got {x}")));
        }
        if y < 0.0 {
            return Ok(1.0);
        }
        if y > x {
            return Ok(0.0);
        }
        let denom = self.w(x)?;
        if denom == 0.0 {
            return Err(Error::Degenerate(format!("W({x}) = 0")));
        }
        Ok(self.w(x - y)? / denom)
    }

    /// Tauberian ratio `W(x) * Gamma(1+alpha) * x * psi(1/x) / alpha`,
    /// identically 1 for the exact stable family and tending to 1 as
    /// `x -> 0` whenever `psi` is regularly varying with index `alpha`.
    pub fn asymptotic_ratio(&self, x: f64) -> Result<f64> {
        let alpha = self.spec.regular_variation_index().ok_or_else(|| {
            Error::Unsupported("asymptotic ratio needs a regularly varying registry spec".into())
        })?;
        if x <= 0.0 {
            return Err(Error::Domain(format!("ratio requires x > 0, got {x}")));
        }
        Ok(self.w(x)? * gamma(1.0 + alpha) * x * self.spec.psi(1.0 / x)? / alpha)
    }

    /// Tabulate `W` over `xs` as CSV with header `x,W,method,err_estimate`.
    pub fn tabulate_csv<W: std::io::Write>(&self, xs: &[f64], out: &mut W) -> Result<()> {
        writeln!(out, "x,W,method,err_estimate")?;
        for &x in xs {
            let (w, err) = self.w_with_error(x)?;
            writeln!(out, "{x},{w},{},{err}", self.method)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::geometric_grid;
    use approx::assert_relative_eq;

    fn stable15() -> ScaleFunction {
        ScaleFunction::new(ProcessSpec::stable(1.5).unwrap()).unwrap()
    }

    #[test]
    fn closed_form_values() {
        // alpha = 2: W(x) = x.
        let bm = ScaleFunction::new(ProcessSpec::stable(2.0).unwrap()).unwrap();
        assert_eq!(bm.method(), ScaleMethod::ClosedFormBmDrift);
        assert_relative_eq!(bm.w(2.0).unwrap(), 2.0, max_relative = 1e-14);

        let sf = stable15();
        assert_eq!(sf.method(), ScaleMethod::ClosedFormStable);
        assert_relative_eq!(
            sf.w(1.0).unwrap(),
            1.0 / gamma(1.5),
            max_relative = 1e-14
        );

        // psi = l + l^2: W(x) = 1 - e^{-x}, inverted by partial fractions.
        let bmd = ScaleFunction::new(
            ProcessSpec::bm_with_drift(1.0, std::f64::consts::SQRT_2).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(
            bmd.w(1.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn gs_matches_stable_closed_form() {
        for &alpha in &[1.2, 1.5, 1.8, 2.0] {
            let spec = ProcessSpec::stable(alpha).unwrap();
            let gs = ScaleFunction::with_method(spec, ScaleMethod::GaverStehfest, 14).unwrap();
            for &x in &[0.1f64, 0.5, 1.0, 2.0, 10.0] {
                let exact = x.powf(alpha - 1.0) / gamma(alpha);
                assert_relative_eq!(gs.w(x).unwrap(), exact, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn gs_handles_positive_killing_rate_via_shift() {
        // psi = -l + l^2 has phi(0) = 1 and W(x) = e^x - 1.
        let spec = ProcessSpec::bm_with_drift(-1.0, std::f64::consts::SQRT_2).unwrap();
        let gs = ScaleFunction::with_method(spec, ScaleMethod::GaverStehfest, 14).unwrap();
        for &x in &[0.1, 1.0, 3.0] {
            assert_relative_eq!(gs.w(x).unwrap(), x.exp() - 1.0, max_relative = 1e-4);
        }
    }

    #[test]
    fn laplace_round_trip_by_quadrature() {
        // Quadrature of e^{-lambda x} W(x) reproduces 1/psi(lambda) for a
        // jump spec that has no closed form.
        let spec = ProcessSpec::bounded_variation(2.0, 1.0, 2.0).unwrap();
        let sf = ScaleFunction::new(spec.clone()).unwrap();
        assert_eq!(sf.method(), ScaleMethod::GaverStehfest);
        let phi0 = spec.phi(0.0).unwrap();
        for &lambda in &[phi0 + 1.0, phi0 + 4.0, phi0 + 10.0] {
            let integrand = |x: f64| (-lambda * x).exp() * sf.w(x).unwrap();
            let mut total = 0.0;
            let mut lo = 0.0f64;
            let step = 0.5;
            while lo < 60.0 / lambda {
                total += numeric::integrate(&integrand, lo, lo + step, 1e-10);
                lo += step;
            }
            assert_relative_eq!(
                total,
                1.0 / spec.psi(lambda).unwrap(),
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn w_zero_conventions() {
        let uv = ScaleFunction::new(ProcessSpec::stable(1.5).unwrap()).unwrap();
        assert_eq!(uv.w(0.0).unwrap(), 0.0);
        let bv = ScaleFunction::new(ProcessSpec::bounded_variation(2.0, 1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(bv.w(0.0).unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn w_monotone_on_grids() {
        let fixtures = [
            ScaleFunction::new(ProcessSpec::stable(1.3).unwrap()).unwrap(),
            ScaleFunction::new(ProcessSpec::bm_with_drift(-1.0, 1.0).unwrap()).unwrap(),
            ScaleFunction::new(ProcessSpec::bounded_variation(2.0, 1.0, 2.0).unwrap()).unwrap(),
        ];
        for sf in &fixtures {
            let mut prev = -1.0;
            for &x in &geometric_grid(1e-3, 20.0, 60) {
                let w = sf.w(x).unwrap();
                // Gaver-Stehfest carries ~1e-8 relative roundoff wiggle.
                assert!(w >= prev * (1.0 - 1e-6), "W not monotone at {x}");
                prev = w;
            }
        }
    }

    #[test]
    fn bounded_ratio_against_psi() {
        // x * W(x) * psi(1/x) stays inside a fixed positive interval.
        for spec in [
            ProcessSpec::stable(1.5).unwrap(),
            ProcessSpec::brownian(std::f64::consts::SQRT_2).unwrap(),
        ] {
            let sf = ScaleFunction::new(spec.clone()).unwrap();
            for &x in &geometric_grid(1e-4, 1e4, 40) {
                let r = sf.w(x).unwrap() * x * spec.psi(1.0 / x).unwrap();
                assert!(r > 0.05 && r < 20.0, "ratio {r} escapes at x = {x}");
            }
        }
    }

    #[test]
    fn exit_prob_examples() {
        let bm = ScaleFunction::new(ProcessSpec::stable(2.0).unwrap()).unwrap();
        assert_relative_eq!(bm.exit_prob(1.0, 1.0).unwrap(), 0.5, max_relative = 1e-14);
        let sf = stable15();
        assert_relative_eq!(
            sf.exit_prob(1.0, 1.0).unwrap(),
            (0.5f64).sqrt(),
            max_relative = 1e-12
        );
        // y -> 0+ tends to 1 by continuity of W.
        assert_relative_eq!(sf.exit_prob(1.0, 1e-12).unwrap(), 1.0, max_relative = 1e-9);
        assert!(sf.exit_prob(-1.0, 1.0).is_err());
    }

    #[test]
    fn exit_prob_chain_identity() {
        let sf = stable15();
        let (x, y, z) = (0.7, 1.3, 2.1);
        let lhs = sf.exit_prob(x, y).unwrap() * sf.exit_prob(x + y, z).unwrap();
        let rhs = sf.exit_prob(x, y + z).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn min_law_examples() {
        let sf = stable15();
        assert_relative_eq!(sf.min_law(1.0, 0.75).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(sf.min_law(1.0, 0.0).unwrap(), 1.0, max_relative = 1e-14);
        // y = x with unbounded variation: W(0) = 0.
        assert_eq!(sf.min_law(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(sf.min_law(1.0, -0.5).unwrap(), 1.0);
        assert_eq!(sf.min_law(1.0, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn asymptotic_ratio_is_one_for_stable() {
        let sf = stable15();
        for &x in &geometric_grid(1e-6, 1.0, 20) {
            assert_relative_eq!(sf.asymptotic_ratio(x).unwrap(), 1.0, max_relative = 1e-6);
        }
        let bm = ScaleFunction::new(ProcessSpec::stable(2.0).unwrap()).unwrap();
        assert_relative_eq!(bm.asymptotic_ratio(1.0).unwrap(), 1.0, max_relative = 1e-12);
        let bv = ScaleFunction::new(ProcessSpec::bounded_variation(2.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(bv.asymptotic_ratio(1.0).is_err());
    }

    #[test]
    fn csv_tabulation_header_and_rows() {
        let sf = stable15();
        let mut buf = Vec::new();
        sf.tabulate_csv(&[0.5, 1.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,W,method,err_estimate");
        assert!(lines.next().unwrap().starts_with("0.5,"));
        assert_eq!(text.lines().count(), 3);
    }
}

//! Refinement studies on flat-torus meshes comparing the finite models with
//! smooth reference forms.
//!
//! Each study builds `torus(n, d)` for the requested resolutions (in
//! parallel, results kept in resolution order), measures an error or a
//! pairing per mesh, and fits a least-squares slope of `log error` against
//! `log η`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{build_flat_torus, SimplicialComplex};
use crate::error::{Error, Result};
use crate::flow::{euler_orthogonality_defect, flow_vector_values};
use crate::hodge::{InnerProductModel, MetricKind};
use crate::solve::SolverOptions;
use crate::whitney::{
    de_rham_analytic, l2_distance, l2_inner_poly_analytic, parse_form, taylor_green, whitney_map, AnalyticForm,
    FormRef, QuadratureOptions,
};

#[derive(Clone, Copy, Debug)]
pub struct StudyOptions {
    pub metric: MetricKind,
    pub quadrature: QuadratureOptions,
    pub solver: SolverOptions,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { metric: MetricKind::Whitney, quadrature: QuadratureOptions::default(), solver: SolverOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub resolution: usize,
    pub eta: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementStudy {
    pub kind: String,
    pub measurements: Vec<Measurement>,
    /// Least-squares slope of `log error` against `log η`; absent when some
    /// error is zero.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

impl RefinementStudy {
    fn new(kind: &str, measurements: Vec<Measurement>) -> Self {
        let eta: Vec<f64> = measurements.iter().map(|m| m.eta).collect();
        let err: Vec<f64> = measurements.iter().map(|m| m.error).collect();
        let fit = fit_log_log(&eta, &err);
        Self { kind: kind.to_string(), measurements, slope: fit.map(|f| f.0), intercept: fit.map(|f| f.1) }
    }
}

/// At least three resolutions, each at least 2, strictly increasing.
pub fn validate_resolutions(resolutions: &[usize]) -> Result<()> {
    if resolutions.len() < 3 {
        return Err(Error::InvalidArgument("a refinement study needs at least 3 meshes".into()));
    }
    if resolutions.iter().any(|&n| n < 2) || resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("resolutions must be at least 2 and strictly increasing".into()));
    }
    Ok(())
}

fn torus_for(dim: usize, n: usize) -> Result<(Arc<SimplicialComplex>, f64)> {
    let cx = build_flat_torus(n, dim)?;
    let eta = cx.mesh_quality()?.eta;
    Ok((Arc::new(cx), eta))
}

fn per_mesh<T, F>(resolutions: &[usize], dim: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, Arc<SimplicialComplex>, f64) -> Result<T> + Sync,
{
    resolutions
        .par_iter()
        .map(|&n| {
            let (cx, eta) = torus_for(dim, n)?;
            f(n, cx, eta)
        })
        .collect()
}

/// `‖W R ω − ω‖_{L²}` per mesh.
pub fn converge_wr(form: &AnalyticForm, resolutions: &[usize], opts: &StudyOptions) -> Result<RefinementStudy> {
    validate_resolutions(resolutions)?;
    form.self_check()?;
    let rows = per_mesh(resolutions, form.dim(), |n, cx, eta| {
        let c = de_rham_analytic(form, &cx, &opts.quadrature)?;
        let w = whitney_map(&c)?;
        let error = l2_distance(FormRef::Poly(&w), FormRef::Analytic(form), &opts.quadrature)?;
        Ok(Measurement { resolution: n, eta, error })
    })?;
    Ok(RefinementStudy::new("whitney-de-rham", rows))
}

/// `‖W(Rω₁ ∪ Rω₂) − ω₁ ∧ ω₂‖_{L²}` per mesh.
pub fn converge_cup(
    first: &AnalyticForm,
    second: &AnalyticForm,
    resolutions: &[usize],
    opts: &StudyOptions,
) -> Result<RefinementStudy> {
    validate_resolutions(resolutions)?;
    first.self_check()?;
    second.self_check()?;
    let smooth = first.wedge(second)?;
    let rows = per_mesh(resolutions, first.dim(), |n, cx, eta| {
        let a = de_rham_analytic(first, &cx, &opts.quadrature)?;
        let b = de_rham_analytic(second, &cx, &opts.quadrature)?;
        let table = crate::cochain::CupTable::build(&cx);
        let ab = table.cup(&a, &b)?;
        let w = whitney_map(&ab)?;
        let error = l2_distance(FormRef::Poly(&w), FormRef::Analytic(&smooth), &opts.quadrature)?;
        Ok(Measurement { resolution: n, eta, error })
    })?;
    Ok(RefinementStudy::new("cup-product", rows))
}

/// `‖π(Rω) − R(π ω)‖` in the model norm per mesh: discrete against smooth
/// co-closed projection.
pub fn converge_hodge(form: &AnalyticForm, resolutions: &[usize], opts: &StudyOptions) -> Result<RefinementStudy> {
    validate_resolutions(resolutions)?;
    form.self_check()?;
    let smooth = form.project_coclosed()?;
    let rows = per_mesh(resolutions, form.dim(), |n, cx, eta| {
        let model = InnerProductModel::new(cx.clone(), opts.metric, opts.solver)?;
        let c = de_rham_analytic(form, &cx, &opts.quadrature)?;
        let p = model.project_coclosed_values(c.values())?;
        let r = de_rham_analytic(&smooth, &cx, &opts.quadrature)?;
        let error = model.norm(1, &(p - r.values()));
        Ok(Measurement { resolution: n, eta, error })
    })?;
    Ok(RefinementStudy::new("hodge-projection", rows))
}

/// Test forms used when none are given: Taylor–Green itself, two
/// non-co-closed trig forms and an exact form (which `π` should annihilate).
pub fn default_test_forms() -> Vec<(String, AnalyticForm)> {
    let parse = |s: &str| parse_form(s, 2).expect("built-in form");
    vec![
        ("taylor-green".to_string(), taylor_green()),
        ("cos(2pi x)*sin(2pi y) dx".to_string(), parse("cos(2pi x)*sin(2pi y) dx")),
        ("sin(2pi x)*cos(2pi y) dy + cos(2pi y) dx".to_string(), parse("sin(2pi x)*cos(2pi y) dy + cos(2pi y) dx")),
        ("sin(2pi x) dx".to_string(), parse("sin(2pi x) dx")),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakRow {
    pub resolution: usize,
    pub eta: f64,
    pub test_form_id: String,
    pub discrete_pairing: f64,
    pub reference_pairing: f64,
    pub gap: f64,
}

/// Facts about the smooth reference established symbolically.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleFacts {
    /// `π(T_0 ω) = 0`: the transported nonlinear term is exact.
    pub nonlinear_term_exact: bool,
    /// `π(T_ν ω) = −ν d*dω`.
    pub purely_viscous: bool,
    /// `‖π(T_ν ω)‖_{L²}`
    pub reference_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakConvergenceReport {
    pub nu: f64,
    pub rows: Vec<WeakRow>,
    pub oracle: OracleFacts,
}

impl WeakConvergenceReport {
    /// Gaps for one test form, coarsest mesh first.
    pub fn gaps(&self, test_form_id: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.test_form_id == test_form_id).map(|r| r.gap).collect()
    }

    pub fn test_form_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for r in &self.rows {
            if !ids.contains(&r.test_form_id) {
                ids.push(r.test_form_id.clone());
            }
        }
        ids
    }

    /// Gaps never grow from one mesh to the next, except by `wobble`
    /// (relative) at the coarsest pair. Gaps at roundoff level, as for test
    /// forms the reference annihilates, are treated as zero.
    pub fn gaps_non_increasing(&self, wobble: f64) -> bool {
        let roundoff = 1e-12 * self.oracle.reference_norm.max(1.0);
        self.test_form_ids().iter().all(|id| {
            let g = self.gaps(id);
            g.windows(2).enumerate().all(|(i, w)| {
                let allowance = if i == 0 { wobble * w[0] } else { 0.0 };
                w[1] <= w[0] + allowance + roundoff
            })
        })
    }
}

/// Smooth reference `π(T_ν ω)` with its symbolic self-checks.
pub fn smooth_reference(form: &AnalyticForm, nu: f64) -> Result<(AnalyticForm, OracleFacts)> {
    form.self_check()?;
    let reference = form.t_nu(nu)?.project_coclosed()?;
    reference.self_check()?;
    let tol = form.symbolic_tolerance(3);
    if !reference.codifferential()?.is_zero(form.symbolic_tolerance(4)) {
        return Err(Error::Oracle("projected reference is not co-closed".into()));
    }
    let nonlinear_term_exact = form.nonlinear_term()?.project_coclosed()?.is_zero(tol);
    let viscous = form.d()?.codifferential()?.scale(-nu);
    let purely_viscous = reference.sub(&viscous)?.is_zero(tol);
    let reference_norm = reference.l2_norm();
    Ok((reference, OracleFacts { nonlinear_term_exact, purely_viscous, reference_norm }))
}

fn check_test_forms(form: &AnalyticForm, tests: &[(String, AnalyticForm)]) -> Result<()> {
    if tests.is_empty() {
        return Err(Error::InvalidArgument("at least one test form is required".into()));
    }
    for (id, t) in tests {
        if t.degree() != 1 || t.dim() != form.dim() {
            return Err(Error::InvalidArgument(format!("test form '{id}' must be a 1-form on the same torus")));
        }
        t.self_check()?;
    }
    Ok(())
}

/// Per mesh, pairs `W π(T_ν Rω)` with each test form and compares with the
/// smooth `⟨π(T_ν ω), η⟩`.
pub fn converge_weak_flow(
    form: &AnalyticForm,
    nu: f64,
    tests: &[(String, AnalyticForm)],
    resolutions: &[usize],
    opts: &StudyOptions,
) -> Result<WeakConvergenceReport> {
    validate_resolutions(resolutions)?;
    if form.degree() != 1 {
        return Err(Error::DegreeMismatch { expected: 1, found: form.degree() });
    }
    check_test_forms(form, tests)?;
    let (reference, oracle) = smooth_reference(form, nu)?;
    let refs: Vec<f64> = tests.iter().map(|(_, t)| reference.l2_inner(t)).collect::<Result<_>>()?;
    let per = per_mesh(resolutions, form.dim(), |n, cx, eta| {
        let model = InnerProductModel::new(cx.clone(), opts.metric, opts.solver)?;
        let c = de_rham_analytic(form, &cx, &opts.quadrature)?;
        let v = c.with_values(flow_vector_values(&model, c.values(), nu)?);
        let w = whitney_map(&v)?;
        tests
            .iter()
            .zip(&refs)
            .map(|((id, t), &r)| {
                let p = l2_inner_poly_analytic(&w, t, &opts.quadrature)?;
                Ok(WeakRow {
                    resolution: n,
                    eta,
                    test_form_id: id.clone(),
                    discrete_pairing: p,
                    reference_pairing: r,
                    gap: (p - r).abs(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(WeakConvergenceReport { nu, rows: per.into_iter().flatten().collect(), oracle })
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadyRow {
    pub resolution: usize,
    pub eta: f64,
    /// `‖π T_ν(Rω)‖` in the model norm.
    pub steady_residual: f64,
    /// Norm of the projection of `δRω` onto the image of `L_{Rω}`.
    pub orthogonality_defect: f64,
    pub pairings: Vec<WeakRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadyScan {
    pub nu: f64,
    pub rows: Vec<SteadyRow>,
    pub oracle: OracleFacts,
}

/// Steady-state residual of `Rω` per mesh together with weak pairings of
/// the flow vector against the test forms.
pub fn steady_state_scan(
    form: &AnalyticForm,
    nu: f64,
    tests: &[(String, AnalyticForm)],
    resolutions: &[usize],
    opts: &StudyOptions,
) -> Result<SteadyScan> {
    let weak = converge_weak_flow(form, nu, tests, resolutions, opts)?;
    let residuals = per_mesh(resolutions, form.dim(), |_, cx, _| {
        let model = InnerProductModel::new(cx.clone(), opts.metric, opts.solver)?;
        let c = de_rham_analytic(form, &cx, &opts.quadrature)?;
        let v = flow_vector_values(&model, c.values(), nu)?;
        Ok((model.norm(1, &v), euler_orthogonality_defect(&model, &c)?))
    })?;
    let rows = resolutions
        .iter()
        .zip(residuals)
        .map(|(&n, (res, defect))| {
            let pairings: Vec<WeakRow> = weak.rows.iter().filter(|r| r.resolution == n).cloned().collect();
            SteadyRow {
                resolution: n,
                eta: pairings.first().map(|r| r.eta).unwrap_or(f64::NAN),
                steady_residual: res,
                orthogonality_defect: defect,
                pairings,
            }
        })
        .collect();
    Ok(SteadyScan { nu, rows, oracle: weak.oracle })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let x = [0.5, 0.25, 0.125, 0.0625];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        let (s, i) = fit_log_log(&x, &y).unwrap();
        assert!((s - 1.5).abs() < 1e-12);
        assert!((i - 3f64.ln()).abs() < 1e-12);
        assert!(fit_log_log(&x, &[1.0, 0.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn resolutions_are_validated() {
        assert!(validate_resolutions(&[4, 8]).is_err());
        assert!(validate_resolutions(&[4, 4, 8]).is_err());
        assert!(validate_resolutions(&[1, 4, 8]).is_err());
        assert!(validate_resolutions(&[2, 4, 8]).is_ok());
    }

    #[test]
    fn taylor_green_oracle() {
        let (_, facts) = smooth_reference(&taylor_green(), 0.01).unwrap();
        assert!(facts.nonlinear_term_exact && facts.purely_viscous);
        let generic = parse_form("sin(2pi x)*cos(4pi y) dx + cos(2pi x) dy", 2).unwrap();
        let (_, facts) = smooth_reference(&generic, 0.01).unwrap();
        assert!(!facts.purely_viscous);
    }
}

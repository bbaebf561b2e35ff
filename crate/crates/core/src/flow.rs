//! The finite-model Navier–Stokes flow `dc/dt = π(T_ν(c))` on 1-cochains.
//!
//! `T_ν(c)` is the 1-cochain with `⟨T_ν(c), b⟩ = ⟨δc, c ∪ b⟩ − ν⟨δc, δb⟩`
//! for all `b`, i.e. `M₁⁻¹ (L_cᵀ M₂ δc − ν δ₁ᵀ M₂ δc)`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::cochain::Cochain;
use crate::error::{Error, Result};
use crate::hodge::{InnerProductModel, MetricKind};
use crate::solve::conjugate_gradient;
use crate::whitney::{de_rham_analytic, AnalyticForm, QuadratureOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Rk4,
    ForwardEuler,
}

impl std::str::FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Integrator::Rk4),
            "euler" | "forward-euler" => Ok(Integrator::ForwardEuler),
            other => Err(Error::InvalidArgument(format!("unknown integrator '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowParams {
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    /// Apply `π` to the state every this many steps.
    pub reprojection_period: usize,
    /// Record diagnostics every this many steps (the final state is always recorded).
    pub record_stride: usize,
}

impl FlowParams {
    pub fn new(nu: f64, dt: f64, t_final: f64) -> Self {
        Self { nu, dt, t_final, integrator: Integrator::Rk4, reprojection_period: 1, record_stride: 1 }
    }

    /// Heuristic explicit step bound `0.1 h² / max(ν, h)` with `h` the
    /// shortest edge, capped at `1 / (ν ρ)` where `ρ` estimates the spectral
    /// radius of the viscous operator `δ*δ` (RK4 is stable on the negative
    /// axis up to about 2.78).
    pub fn default_dt(model: &InnerProductModel, nu: f64) -> Result<f64> {
        let h = model.complex().min_edge_length()?;
        let heuristic = 0.1 * h * h / nu.max(h);
        if nu == 0.0 {
            return Ok(heuristic);
        }
        let rho = viscous_spectral_radius(model)?;
        Ok(if rho > 0.0 { heuristic.min(1.0 / (nu * rho)) } else { heuristic })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("viscosity must be non-negative, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if self.reprojection_period == 0 || self.record_stride == 0 {
            return Err(Error::InvalidArgument("reprojection period and stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Current time, state and its vorticity `δc`.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub c: Cochain,
    pub vorticity: DVector<f64>,
}

impl FlowState {
    pub fn new(model: &InnerProductModel, t: f64, c: Cochain) -> Self {
        let vorticity = model.coboundary(1).mul_vec(c.values());
        Self { t, c, vorticity }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    /// `‖c‖²`
    pub energy: f64,
    /// `‖δc‖²`
    pub vorticity_sq: f64,
    /// `‖π T_ν(c)‖`
    pub steady_residual: f64,
    /// `‖δ*c‖`
    pub coclosed_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub diagnostics: Vec<Diagnostics>,
    /// Recorded `(t, values)` pairs, at the same times as `diagnostics`.
    pub states: Vec<(f64, DVector<f64>)>,
    pub final_state: FlowState,
    pub steps: usize,
    /// Largest single-step energy increase (negative when energy always drops).
    pub max_energy_increase: f64,
    /// Time at which a non-finite state appeared; `final_state` is then the
    /// last finite one.
    pub blow_up: Option<f64>,
}

fn require_one_cochain(model: &InnerProductModel, c: &DVector<f64>) -> Result<()> {
    if model.complex().dim() < 2 {
        return Err(Error::DegreeOutOfRange { degree: 2, dim: model.complex().dim() });
    }
    if c.len() != model.complex().count(1) {
        return Err(Error::InvalidArgument(format!(
            "expected a 1-cochain with {} values, found {}",
            model.complex().count(1),
            c.len()
        )));
    }
    Ok(())
}

fn mass_apply(model: &InnerProductModel, k: usize, v: &DVector<f64>) -> DVector<f64> {
    match model.kind() {
        MetricKind::Toy => v.clone(),
        MetricKind::Whitney => model.mass(k).mul_vec(v),
    }
}

/// Power-iteration estimate (padded by 20%) of the largest eigenvalue of
/// `δ₁*δ₁` on 1-cochains, self-adjoint in the model inner product.
fn viscous_spectral_radius(model: &InnerProductModel) -> Result<f64> {
    let ne = model.complex().count(1);
    require_one_cochain(model, &DVector::zeros(ne))?;
    let d1 = model.coboundary(1);
    // deterministic start with components along most eigenvectors
    let mut v = DVector::from_fn(ne, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
    let mut rho = 0.0;
    for _ in 0..60 {
        let w = model.adjoint_coboundary_values(1, &d1.mul_vec(&v))?;
        let n = model.norm(1, &w);
        if n == 0.0 {
            return Ok(0.0);
        }
        rho = n / model.norm(1, &v);
        v = w / n;
    }
    Ok(1.2 * rho)
}

/// `T_ν(c)` on raw 1-cochain values.
pub fn apply_t_nu_values(model: &InnerProductModel, c: &DVector<f64>, nu: f64) -> Result<DVector<f64>> {
    require_one_cochain(model, c)?;
    let d1 = model.coboundary(1);
    let dc = d1.mul_vec(c);
    let r = mass_apply(model, 2, &dc);
    let mut rhs = DVector::zeros(c.len());
    model.cup_table().cup_transpose_apply(c, &r, &mut rhs);
    if nu != 0.0 {
        rhs.axpy(-nu, &d1.tr_mul_vec(&r), 1.0);
    }
    model.mass_solver(1)?.solve(&rhs)
}

/// `T_ν(c)`.
pub fn apply_t_nu(model: &InnerProductModel, c: &Cochain, nu: f64) -> Result<Cochain> {
    Ok(c.with_values(apply_t_nu_values(model, c.values(), nu)?))
}

/// `π(T_ν(c))` on raw values.
pub fn flow_vector_values(model: &InnerProductModel, c: &DVector<f64>, nu: f64) -> Result<DVector<f64>> {
    let t = apply_t_nu_values(model, c, nu)?;
    model.project_coclosed_values(&t)
}

/// `π(T_ν(c))`, the right-hand side of the flow.
pub fn flow_vector(model: &InnerProductModel, c: &Cochain, nu: f64) -> Result<Cochain> {
    Ok(c.with_values(flow_vector_values(model, c.values(), nu)?))
}

/// `‖π T_ν(c)‖` in the model norm.
pub fn steady_residual(model: &InnerProductModel, c: &Cochain, nu: f64) -> Result<f64> {
    Ok(model.norm(1, &flow_vector_values(model, c.values(), nu)?))
}

/// Norm of the `M₂`-orthogonal projection of `δc` onto the image of
/// `L_c : C¹ → C²` (zero exactly when `δc ⟂ im L_c`, a sufficient condition
/// for an Euler steady state). Solved by least squares on the normal
/// equations `L_cᵀ M₂ L_c b = L_cᵀ M₂ δc`.
pub fn euler_orthogonality_defect(model: &InnerProductModel, c: &Cochain) -> Result<f64> {
    require_one_cochain(model, c.values())?;
    let lc = model.cup_table().cup_right_multiplication_matrix(c)?;
    let dc = model.coboundary(1).mul_vec(c.values());
    let rhs = lc.tr_mul_vec(&mass_apply(model, 2, &dc));
    let scale = model.norm(2, &dc);
    if rhs.norm() <= 1e-14 * scale * scale.max(1.0) {
        return Ok(0.0);
    }
    let opts = model.options();
    let apply = |b: &DVector<f64>| lc.tr_mul_vec(&mass_apply(model, 2, &lc.mul_vec(b)));
    let (b, _) = conjugate_gradient(apply, |r| r.clone(), &rhs, opts.rel_tol.max(1e-10), opts.max_iter, None)?;
    Ok(model.norm(2, &lc.mul_vec(&b)))
}

pub fn diagnostics(model: &InnerProductModel, state: &FlowState, nu: f64) -> Result<Diagnostics> {
    let c = state.c.values();
    Ok(Diagnostics {
        t: state.t,
        energy: model.inner(1, c, c),
        vorticity_sq: model.inner(2, &state.vorticity, &state.vorticity),
        steady_residual: model.norm(1, &flow_vector_values(model, c, nu)?),
        coclosed_residual: model.coclosed_residual(c)?,
    })
}

/// One time step of size `h` (the state's step counter decides reprojection).
fn advance(model: &InnerProductModel, c: &DVector<f64>, h: f64, params: &FlowParams) -> Result<DVector<f64>> {
    let f = |v: &DVector<f64>| flow_vector_values(model, v, params.nu);
    Ok(match params.integrator {
        Integrator::ForwardEuler => c + f(c)? * h,
        Integrator::Rk4 => {
            let k1 = f(c)?;
            let k2 = f(&(c + &k1 * (h / 2.0)))?;
            let k3 = f(&(c + &k2 * (h / 2.0)))?;
            let k4 = f(&(c + &k3 * h))?;
            c + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        }
    })
}

/// A single step of size `params.dt`, followed by `π` when `reproject`.
pub fn step(model: &InnerProductModel, state: &FlowState, params: &FlowParams, reproject: bool) -> Result<FlowState> {
    params.validate()?;
    let mut next = advance(model, state.c.values(), params.dt, params)?;
    if reproject {
        next = model.project_coclosed_values(&next)?;
    }
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp { t: state.t + params.dt });
    }
    Ok(FlowState::new(model, state.t + params.dt, state.c.with_values(next)))
}

/// Integrates from `initial` (projected first) to `params.t_final`.
pub fn run(model: &InnerProductModel, initial: &Cochain, params: &FlowParams) -> Result<Trajectory> {
    params.validate()?;
    if initial.degree() != 1 {
        return Err(Error::DegreeMismatch { expected: 1, found: initial.degree() });
    }
    let c0 = model.project_coclosed(initial)?;
    let mut state = FlowState::new(model, 0.0, c0);
    let ratio = params.t_final / params.dt;
    let steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let mut diagnostics = vec![diagnostics(model, &state, params.nu)?];
    let mut states = vec![(0.0, state.c.values().clone())];
    let mut energy = diagnostics[0].energy;
    let mut max_increase = f64::NEG_INFINITY;
    let mut blow_up = None;
    for i in 0..steps {
        let t_next = if i + 1 == steps { params.t_final } else { (i + 1) as f64 * params.dt };
        let h = t_next - state.t;
        let mut next = advance(model, state.c.values(), h, params)?;
        if (i + 1) % params.reprojection_period == 0 {
            next = model.project_coclosed_values(&next)?;
        }
        if next.iter().any(|v| !v.is_finite()) {
            blow_up = Some(t_next);
            break;
        }
        state = FlowState::new(model, t_next, state.c.with_values(next));
        let e = model.inner(1, state.c.values(), state.c.values());
        max_increase = max_increase.max(e - energy);
        energy = e;
        if (i + 1) % params.record_stride == 0 || i + 1 == steps {
            diagnostics.push(self::diagnostics(model, &state, params.nu)?);
            states.push((state.t, state.c.values().clone()));
        }
    }
    Ok(Trajectory { diagnostics, states, final_state: state, steps, max_energy_increase: max_increase, blow_up })
}

/// Where a simulation starts.
#[derive(Clone, Debug)]
pub enum InitialCondition {
    /// `R(ω)` of a smooth form.
    Analytic(AnalyticForm),
    /// Standard normal values from a seeded generator, projected by `π` and
    /// scaled to the given model norm.
    Random { seed: u64, norm: f64 },
    /// The `k`-th vector of the harmonic basis.
    Harmonic(usize),
}

impl InitialCondition {
    /// Parses `taylor-green`, `random:SEED`, `harmonic:K` or a form expression.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        if let Some(seed) = spec.strip_prefix("random:") {
            let seed = seed.parse().map_err(|_| Error::InvalidArgument(format!("bad seed in '{spec}'")))?;
            return Ok(InitialCondition::Random { seed, norm: 1.0 });
        }
        if let Some(k) = spec.strip_prefix("harmonic:") {
            let k = k.parse().map_err(|_| Error::InvalidArgument(format!("bad index in '{spec}'")))?;
            return Ok(InitialCondition::Harmonic(k));
        }
        Ok(InitialCondition::Analytic(crate::whitney::parse_form(spec, dim)?))
    }

    pub fn build(&self, model: &InnerProductModel, quadrature: &QuadratureOptions) -> Result<Cochain> {
        let cx = model.complex();
        match self {
            InitialCondition::Analytic(form) => de_rham_analytic(form, cx, quadrature),
            InitialCondition::Random { seed, norm } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let v = DVector::from_fn(cx.count(1), |_, _| StandardNormal.sample(&mut rng));
                let p = model.project_coclosed_values(&v)?;
                let n = model.norm(1, &p);
                if n == 0.0 {
                    return Err(Error::InvalidArgument("random state has no co-closed part".into()));
                }
                Cochain::new(cx.clone(), 1, p * (norm / n))
            }
            InitialCondition::Harmonic(k) => {
                let basis = model.harmonic_basis()?;
                basis.vectors.get(*k).cloned().ok_or_else(|| {
                    Error::InvalidArgument(format!("harmonic index {k} but dimension is {}", basis.vectors.len()))
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_flat_torus;
    use std::sync::Arc;

    fn model(kind: MetricKind) -> InnerProductModel {
        let k = Arc::new(build_flat_torus(4, 2).unwrap());
        InnerProductModel::new(k, kind, Default::default()).unwrap()
    }

    #[test]
    fn pairing_defines_t_nu() {
        for kind in [MetricKind::Toy, MetricKind::Whitney] {
            let m = model(kind);
            let c = InitialCondition::Random { seed: 4, norm: 1.0 }.build(&m, &Default::default()).unwrap();
            let b = InitialCondition::Random { seed: 5, norm: 1.0 }.build(&m, &Default::default()).unwrap();
            let nu = 0.3;
            let t = apply_t_nu(&m, &c, nu).unwrap();
            let dc = c.coboundary().unwrap();
            let db = b.coboundary().unwrap();
            let cb = m.cup_table().cup(&c, &b).unwrap();
            let lhs = m.inner_cochains(&t, &b).unwrap();
            let rhs = m.inner_cochains(&dc, &cb).unwrap() - nu * m.inner_cochains(&dc, &db).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn euler_nonlinearity_does_no_work() {
        let m = model(MetricKind::Whitney);
        let c = InitialCondition::Random { seed: 9, norm: 2.0 }.build(&m, &Default::default()).unwrap();
        let t = apply_t_nu(&m, &c, 0.0).unwrap();
        assert!(m.inner_cochains(&t, &c).unwrap().abs() < 1e-12);
        let v = flow_vector(&m, &c, 0.05).unwrap();
        let dc = c.coboundary().unwrap();
        let expect = -0.05 * m.inner_cochains(&dc, &dc).unwrap();
        assert!((m.inner_cochains(&v, &c).unwrap() - expect).abs() < 1e-9 * expect.abs());
    }

    #[test]
    fn zero_state_stays_zero() {
        let m = model(MetricKind::Toy);
        let c = Cochain::zeros(m.complex().clone(), 1).unwrap();
        let traj = run(&m, &c, &FlowParams::new(0.1, 1e-2, 0.1)).unwrap();
        assert_eq!(traj.steps, 10);
        assert!(traj.final_state.c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn params_are_validated() {
        let mut p = FlowParams::new(-1.0, 1e-3, 1.0);
        assert!(p.validate().is_err());
        p.nu = 0.0;
        p.reprojection_period = 0;
        assert!(p.validate().is_err());
    }
}

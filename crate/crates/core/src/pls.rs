//! Physical-layer security: maximise the secrecy rate between a base station
//! and a legitimate receiver (Bob) in the presence of an eavesdropper (Eve),
//! optionally helped by a friendly jammer.
//!
//! The secrecy ratio is handled by Dinkelbach iterations on the relaxed
//! matrix. The bilinear term `tr(X F_b X F_j)` is convex in `X`, so its
//! first-order expansion is a global minorizer and each inner step of the
//! sequential convex program is a linear SDP that cannot decrease the
//! parametric objective.

use nalgebra::{Complex, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{rayleigh_vector_from, sample_cn, RngSeed};
use crate::error::{Error, Result};
use crate::linalg::{db_to_linear, hermitian_part, CMatrix, CVector};
use crate::quadratic::{best_candidate, gaussian_candidates, random_feasible, HomogenizedQuadratic, SdrMatrix};
use crate::reflection::{ReflectionMode, ReflectionVector};
use crate::solvers::{solve_sdp, SdpObjective, SdpProblem, SolverOptions};

type C64 = Complex<f64>;

/// Channels involving the jammer.
#[derive(Debug, Clone, PartialEq)]
pub struct JammerChannels {
    /// Jammer to Eve.
    pub d_j: C64,
    /// Jammer to surface.
    pub g_j: CVector<f64>,
    /// Residual jammer leakage at Bob after interference cancellation.
    pub d_jb: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsInstance {
    /// Base station to Bob.
    pub d_b: C64,
    /// Base station to Eve.
    pub d_e: C64,
    /// Base station to surface.
    pub g: CVector<f64>,
    /// Surface to Bob.
    pub h_b: CVector<f64>,
    /// Surface to Eve.
    pub h_e: CVector<f64>,
    /// Receiver noise at Bob, before jammer leakage.
    pub noise_b_raw: f64,
    pub noise_e: f64,
    pub jammer: Option<JammerChannels>,
}

impl PlsInstance {
    pub fn validate(&self) -> Result<()> {
        let k = self.g.len();
        if k == 0 {
            return Err(Error::dims("g", "at least one element", 0));
        }
        if self.h_b.len() != k {
            return Err(Error::dims("h_b", k, self.h_b.len()));
        }
        if self.h_e.len() != k {
            return Err(Error::dims("h_e", k, self.h_e.len()));
        }
        if let Some(j) = &self.jammer {
            if j.g_j.len() != k {
                return Err(Error::dims("g_j", k, j.g_j.len()));
            }
        }
        if !(self.noise_b_raw >= 0.0 && self.noise_e > 0.0 && self.noise_b() > 0.0) {
            return Err(Error::InvalidArgument("noise variances must be positive".into()));
        }
        Ok(())
    }

    pub fn elements(&self) -> usize {
        self.g.len()
    }

    /// Effective noise at Bob, `|d_jb|^2 + raw noise`.
    pub fn noise_b(&self) -> f64 {
        self.noise_b_raw + self.jammer.as_ref().map_or(0.0, |j| j.d_jb.norm_sqr())
    }

    /// The same instance with the jammer switched off.
    pub fn without_jammer(&self) -> Self {
        Self { jammer: None, ..self.clone() }
    }
}

/// Channel strengths (dB) of a Rayleigh scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlsScenario {
    pub elements: usize,
    pub db_db: f64,
    pub g_db: f64,
    pub hb_db: f64,
    pub de_db: f64,
    pub he_db: f64,
    pub dj_db: f64,
    pub gj_db: f64,
    /// Strength of the residual jammer leakage at Bob; `None` means fully cancelled.
    pub jb_db: Option<f64>,
    pub noise_b: f64,
    pub noise_e: f64,
    pub jammer: bool,
}

impl PlsScenario {
    /// All links at `db` dB, unit noise, jammer present.
    pub fn uniform(elements: usize, db: f64) -> Self {
        Self {
            elements,
            db_db: db,
            g_db: db,
            hb_db: db,
            de_db: db,
            he_db: db,
            dj_db: db,
            gj_db: db,
            jb_db: None,
            noise_b: 1.0,
            noise_e: 1.0,
            jammer: true,
        }
    }
}

/// i.i.d. Rayleigh instance. Jammer channels are always drawn, so switching
/// the jammer off keeps every other channel identical.
pub fn rayleigh_instance(sc: &PlsScenario, seed: RngSeed) -> Result<PlsInstance> {
    rayleigh_instance_from(&mut seed.rng(), sc)
}

pub fn rayleigh_instance_from<R: Rng + ?Sized>(rng: &mut R, sc: &PlsScenario) -> Result<PlsInstance> {
    let k = sc.elements;
    let d_b = sample_cn(rng, db_to_linear(sc.db_db));
    let g = rayleigh_vector_from(rng, k, db_to_linear(sc.g_db))?;
    let h_b = rayleigh_vector_from(rng, k, db_to_linear(sc.hb_db))?;
    let d_e = sample_cn(rng, db_to_linear(sc.de_db));
    let h_e = rayleigh_vector_from(rng, k, db_to_linear(sc.he_db))?;
    let d_j = sample_cn(rng, db_to_linear(sc.dj_db));
    let g_j = rayleigh_vector_from(rng, k, db_to_linear(sc.gj_db))?;
    let d_jb = match sc.jb_db {
        Some(db) => sample_cn(rng, db_to_linear(db)),
        None => C64::new(0.0, 0.0),
    };
    let inst = PlsInstance {
        d_b,
        d_e,
        g,
        h_b,
        h_e,
        noise_b_raw: sc.noise_b,
        noise_e: sc.noise_e,
        jammer: sc.jammer.then_some(JammerChannels { d_j, g_j, d_jb }),
    };
    inst.validate()?;
    Ok(inst)
}

/// Homogenised quadratics of Bob's signal, Eve's signal and the jamming at Eve.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsQuadratics {
    pub bob: HomogenizedQuadratic,
    pub eve: HomogenizedQuadratic,
    pub jam: HomogenizedQuadratic,
}

pub fn build_pls_quadratics(inst: &PlsInstance) -> PlsQuadratics {
    let bob = HomogenizedQuadratic::from_cascade(&inst.g.component_mul(&inst.h_b), inst.d_b);
    let eve = HomogenizedQuadratic::from_cascade(&inst.g.component_mul(&inst.h_e), inst.d_e);
    let jam = match &inst.jammer {
        Some(j) => HomogenizedQuadratic::from_cascade(&j.g_j.component_mul(&inst.h_e), j.d_j),
        None => HomogenizedQuadratic::zero(inst.elements()),
    };
    PlsQuadratics { bob, eve, jam }
}

fn cascade(a: &CVector<f64>, b: &CVector<f64>, phi: &CVector<f64>, direct: C64) -> C64 {
    direct + a.iter().zip(b.iter()).zip(phi.iter()).map(|((x, y), p)| x * p * y).sum::<C64>()
}

pub fn sinr_bob(inst: &PlsInstance, phi: &ReflectionVector<f64>) -> f64 {
    cascade(&inst.g, &inst.h_b, phi.coeffs(), inst.d_b).norm_sqr() / inst.noise_b()
}

pub fn sinr_eve(inst: &PlsInstance, phi: &ReflectionVector<f64>) -> f64 {
    let signal = cascade(&inst.g, &inst.h_e, phi.coeffs(), inst.d_e).norm_sqr();
    let jam = inst
        .jammer
        .as_ref()
        .map_or(0.0, |j| cascade(&j.g_j, &inst.h_e, phi.coeffs(), j.d_j).norm_sqr());
    signal / (jam + inst.noise_e)
}

/// `[log2((1 + SINR_b) / (1 + SINR_e))]^+` in bits per channel use.
pub fn secrecy_rate(inst: &PlsInstance, phi: &ReflectionVector<f64>) -> f64 {
    ((1.0 + sinr_bob(inst, phi)) / (1.0 + sinr_eve(inst, phi))).log2().max(0.0)
}

/// `tr(X F_b X F_j) = |u_b^H X u_j|^2`.
pub fn bilinear(x: &CMatrix<f64>, q: &PlsQuadratics) -> f64 {
    q.bob.factor().dotc(&(x * q.jam.factor())).norm_sqr()
}

/// Numerator and denominator of the relaxed secrecy ratio.
fn ratio_parts(x: &CMatrix<f64>, q: &PlsQuadratics, noise_b: f64, noise_e: f64) -> (f64, f64) {
    let tb = q.bob.trace_with(x);
    let te = q.eve.trace_with(x);
    let tj = q.jam.trace_with(x);
    let num = noise_b * noise_e + noise_e * tb + noise_b * tj + bilinear(x, q);
    let den = noise_e + te + tj;
    (num, den)
}

/// Closed-form Dinkelbach parameter at `x`: the relaxed secrecy ratio
/// `(s_b s_e + s_e tr(X F_b) + s_b tr(X F_j) + tr(X F_b X F_j)) / (s_e + tr(X (F_e + F_j)))`.
pub fn lambda_update(x: &SdrMatrix, quads: &PlsQuadratics, noise_b: f64, noise_e: f64) -> f64 {
    let (num, den) = ratio_parts(x.as_matrix(), quads, noise_b, noise_e);
    num / den
}

/// Gradient of `tr(X F_b X F_j)` at `x0`: `F_b X0 F_j + F_j X0 F_b`.
pub fn bilinear_gradient(x0: &CMatrix<f64>, quads: &PlsQuadratics) -> CMatrix<f64> {
    let b = quads.bob.factor();
    let w = quads.jam.factor();
    let coupling = b.dotc(&(x0 * w));
    let bw = b * w.adjoint() * coupling;
    &bw + bw.adjoint()
}

/// Parametric objective `N(X) - lambda D(X)`.
pub fn parametric_objective(x: &CMatrix<f64>, quads: &PlsQuadratics, noise_b: f64, noise_e: f64, lambda: f64) -> f64 {
    let (num, den) = ratio_parts(x, quads, noise_b, noise_e);
    num - lambda * den
}

/// Surrogate of [`parametric_objective`] with the bilinear term replaced by
/// its first-order expansion at `x0`; equal to it at `x = x0` and below it elsewhere.
pub fn linearized_objective(
    x: &CMatrix<f64>,
    x0: &CMatrix<f64>,
    quads: &PlsQuadratics,
    noise_b: f64,
    noise_e: f64,
    lambda: f64,
) -> f64 {
    let tb = quads.bob.trace_with(x);
    let te = quads.eve.trace_with(x);
    let tj = quads.jam.trace_with(x);
    let grad = bilinear_gradient(x0, quads);
    let lin = bilinear(x0, quads) + crate::linalg::re_trace_product(&grad, &(x - x0));
    noise_b * noise_e + noise_e * tb + noise_b * tj + lin - lambda * (noise_e + te + tj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlsOptions {
    /// Relative change of the Dinkelbach parameter that ends the outer loop.
    pub tol: f64,
    pub max_outer: usize,
    pub inner_tol: f64,
    pub max_inner: usize,
    pub randomization_trials: usize,
    /// Random surface configurations tried, after ascent, as the first Dinkelbach point.
    pub random_starts: usize,
    /// Dinkelbach restarts from a randomized design that beats the relaxed ratio.
    pub max_restarts: usize,
    /// For the absorptive surface, also start from the phase-only design, which
    /// is feasible too, and keep the better of the two.
    pub conventional_start: bool,
    pub seed: u64,
    pub sdp: SolverOptions,
}

impl Default for PlsOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_outer: 50,
            inner_tol: 1e-6,
            max_inner: 30,
            randomization_trials: 200,
            random_starts: 8,
            max_restarts: 5,
            conventional_start: true,
            seed: 0,
            sdp: SolverOptions::sdp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlsDesign {
    pub phi: ReflectionVector<f64>,
    pub rate: f64,
    /// Secrecy rate of the final relaxed matrix, `[log2(lambda / noise_b)]^+`.
    pub sdr_rate: f64,
    /// Dinkelbach parameters, starting with the initial point.
    pub lambda_trace: Vec<f64>,
    /// Parametric objective after every inner step, one list per outer iteration.
    pub inner_traces: Vec<Vec<f64>>,
    pub relaxed: SdrMatrix,
    pub converged: bool,
}

impl PlsDesign {
    /// Outer cost `lambda / noise_b`, i.e. the relaxed `(1 + SINR_b) / (1 + SINR_e)`.
    pub fn cost_trace(&self, noise_b: f64) -> Vec<f64> {
        self.lambda_trace.iter().map(|l| l / noise_b).collect()
    }
}

/// Unit-modulus phases adding every reflected path in phase with the direct path to Bob.
pub fn aligned_with_bob(inst: &PlsInstance) -> ReflectionVector<f64> {
    let reference = if inst.d_b.norm() > 0.0 { inst.d_b.arg() } else { 0.0 };
    let phases = inst
        .g
        .iter()
        .zip(inst.h_b.iter())
        .map(|(g, h)| C64::from_polar(1.0, reference - (g * h).arg()))
        .collect::<Vec<_>>();
    ReflectionVector::new(DVector::from_vec(phases), ReflectionMode::Conventional).expect("unit phasors")
}

/// Smallest-norm coefficients cancelling Eve's signal, projected onto the mode.
pub fn nulling_eve(inst: &PlsInstance, mode: ReflectionMode) -> ReflectionVector<f64> {
    let c = inst.g.component_mul(&inst.h_e);
    let energy = c.norm_squared();
    let coeffs = if energy > 0.0 { c.map(|z| -inst.d_e * z.conj() / energy) } else { CVector::zeros(c.len()) };
    ReflectionVector::projected(coeffs, mode)
}

/// Relaxed secrecy ratio at the rank-one point `phi` and its gradient with
/// respect to `conj(phi)`.
fn ratio_and_gradient(phi: &CVector<f64>, q: &PlsQuadratics, noise_b: f64, noise_e: f64) -> (f64, CVector<f64>) {
    let k = phi.len();
    let amp = |f: &HomogenizedQuadratic| {
        let u = f.factor();
        u[k].conj() + (0..k).map(|i| u[i].conj() * phi[i]).sum::<C64>()
    };
    let (ab, ae, aj) = (amp(&q.bob), amp(&q.eve), amp(&q.jam));
    let (pb, pe, pj) = (ab.norm_sqr(), ae.norm_sqr(), aj.norm_sqr());
    let num = noise_b * noise_e + noise_e * pb + noise_b * pj + pb * pj;
    let den = noise_e + pe + pj;
    let ratio = num / den;
    let grad = |f: &HomogenizedQuadratic, a: C64, w: f64| f.factor().rows(0, k) * (a * w);
    let g = grad(&q.bob, ab, (noise_e + pj) / den) + grad(&q.jam, aj, (noise_b + pb - ratio) / den)
        - grad(&q.eve, ae, ratio / den);
    (ratio, g)
}

/// Projected gradient ascent of the rank-one secrecy ratio with backtracking.
/// Used only to pick a good first Dinkelbach parameter.
pub fn ratio_ascent(start: &ReflectionVector<f64>, q: &PlsQuadratics, noise_b: f64, noise_e: f64, iters: usize) -> ReflectionVector<f64> {
    let mode = start.mode();
    let mut phi = start.coeffs().clone();
    let (mut value, mut grad) = ratio_and_gradient(&phi, q, noise_b, noise_e);
    let mut step = 1.0 / (1.0 + grad.norm());
    for _ in 0..iters {
        let mut moved = false;
        for _ in 0..40 {
            let trial = ReflectionVector::projected(&phi + &grad * C64::new(step, 0.0), mode).into_coeffs();
            let (v, g) = ratio_and_gradient(&trial, q, noise_b, noise_e);
            if v > value {
                phi = trial;
                value = v;
                grad = g;
                step *= 2.0;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    ReflectionVector::projected(phi, mode)
}

const START_ASCENT_ITERS: usize = 25;
const EXTRAPOLATION: [f64; 4] = [0.0, 2.0, 8.0, 32.0];

/// Sequential convex maximisation of `N(X) - lambda D(X)` from `start`.
/// Returns the final matrix and the objective after every accepted step.
pub fn maximize_parametric(
    quads: &PlsQuadratics,
    noise_b: f64,
    noise_e: f64,
    lambda: f64,
    start: SdrMatrix,
    mode: ReflectionMode,
    opts: &PlsOptions,
) -> Result<(SdrMatrix, Vec<f64>)> {
    let (sb, se) = (noise_b, noise_e);
    let fj = quads.jam.matrix();
    let base_cost = quads.bob.matrix() * C64::new(se, 0.0) + &fj * C64::new(sb, 0.0);
    let leak = quads.eve.matrix() + &fj;
    let mut xi = start;
    let mut value = parametric_objective(xi.as_matrix(), quads, sb, se, lambda);
    let mut trace = vec![value];
    let mut prev: Option<CMatrix<f64>> = None;
    for inner in 0..opts.max_inner {
        let mut best: Option<(SdrMatrix, f64)> = None;
        // Expansions at the iterate and ahead of it along the last step.
        for &ahead in &EXTRAPOLATION {
            let point = match (&prev, ahead) {
                (_, 0.0) => xi.as_matrix().clone(),
                (Some(p), t) => xi.as_matrix() + (xi.as_matrix() - p) * C64::new(t, 0.0),
                (None, _) => break,
            };
            let cost = &base_cost + bilinear_gradient(&point, quads) - &leak * C64::new(lambda, 0.0);
            let problem = SdpProblem::new(SdpObjective::Linear(hermitian_part(&cost)), mode)?;
            let sol = solve_sdp(&problem, &opts.sdp).map_err(|e| e.context(format!("inner step {inner}")))?;
            let next = parametric_objective(sol.matrix.as_matrix(), quads, sb, se, lambda);
            if best.as_ref().is_none_or(|(_, v)| next > *v) {
                best = Some((sol.matrix, next));
            }
        }
        let Some((cand, next)) = best else { break };
        if !(next >= value) {
            break;
        }
        let gain = next - value;
        prev = Some(std::mem::replace(&mut xi, cand).into_matrix());
        value = next;
        trace.push(value);
        if gain <= opts.inner_tol * value.abs().max(1.0) {
            break;
        }
    }
    Ok((xi, trace))
}

/// Secrecy-rate design for the given surface type.
pub fn maximize_secrecy(inst: &PlsInstance, mode: ReflectionMode, opts: &PlsOptions) -> Result<PlsDesign> {
    if mode == ReflectionMode::Absorptive && opts.conventional_start {
        return Ok(maximize_secrecy_pair(inst, opts)?.0);
    }
    secrecy_design(inst, mode, opts, None)
}

/// Absorptive and phase-only designs of one instance; the phase-only design
/// is computed once and also used as an absorptive starting point.
pub fn maximize_secrecy_pair(inst: &PlsInstance, opts: &PlsOptions) -> Result<(PlsDesign, PlsDesign)> {
    let phase_only = secrecy_design(inst, ReflectionMode::Conventional, opts, None)?;
    let absorptive = secrecy_design(inst, ReflectionMode::Absorptive, opts, Some(&phase_only.phi))?;
    Ok((absorptive, phase_only))
}

fn secrecy_design(
    inst: &PlsInstance,
    mode: ReflectionMode,
    opts: &PlsOptions,
    extra_start: Option<&ReflectionVector<f64>>,
) -> Result<PlsDesign> {
    inst.validate()?;
    if !(opts.tol > 0.0 && opts.inner_tol > 0.0) || opts.max_outer == 0 || opts.max_inner == 0 {
        return Err(Error::InvalidArgument("secrecy options need positive tolerances and iteration limits".into()));
    }
    let k = inst.elements();
    let quads = build_pls_quadratics(inst);
    let (sb, se) = (inst.noise_b(), inst.noise_e);

    let neutral = match mode {
        ReflectionMode::Absorptive => SdrMatrix::ris_off(k),
        ReflectionMode::Conventional => SdrMatrix::identity(k),
    };
    let extra = extra_start.map(|e| ReflectionVector::projected(e.coeffs().clone(), mode));
    let mut rng = RngSeed(opts.seed).derive(&[1]).rng();
    let mut seeds = vec![ReflectionVector::projected(aligned_with_bob(inst).into_coeffs(), mode), nulling_eve(inst, mode)];
    seeds.extend(extra.iter().cloned());
    seeds.extend((0..opts.random_starts).map(|_| random_feasible(&mut rng, k, mode)));
    let ascended = seeds.iter().map(|phi| SdrMatrix::rank_one(&ratio_ascent(phi, &quads, sb, se, START_ASCENT_ITERS)));
    let (mut x, mut lambda) = std::iter::once(neutral)
        .chain(ascended)
        .map(|x| {
            let l = lambda_update(&x, &quads, sb, se);
            (x, l)
        })
        .fold(None, |best: Option<(SdrMatrix, f64)>, (x, l)| match best {
            Some((bx, bl)) if bl >= l => Some((bx, bl)),
            _ => Some((x, l)),
        })
        .expect("at least one starting point");
    let mut lambda_trace = vec![lambda];
    let mut inner_traces = Vec::new();
    let mut converged = false;
    let mut restarts = 0;

    let (mut phi, mut rate) = loop {
        while inner_traces.len() < opts.max_outer {
            let outer = inner_traces.len();
            let (xi, trace) = maximize_parametric(&quads, sb, se, lambda, x.clone(), mode, opts)
                .map_err(|e| e.context(format!("outer iteration {outer}")))?;
            inner_traces.push(trace);
            let next = lambda_update(&xi, &quads, sb, se);
            if !(next >= lambda) {
                converged = true;
                break;
            }
            let change = next - lambda;
            lambda = next;
            lambda_trace.push(lambda);
            x = xi;
            if change <= opts.tol * lambda.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        let candidates = gaussian_candidates(&x, mode, opts.randomization_trials.max(1), RngSeed(opts.seed));
        let (phi, rate) = best_candidate(candidates, |c| secrecy_rate(inst, c));
        let lifted = SdrMatrix::rank_one(&phi);
        let lifted_lambda = lambda_update(&lifted, &quads, sb, se);
        if lifted_lambda > lambda && restarts < opts.max_restarts && inner_traces.len() < opts.max_outer {
            restarts += 1;
            lambda = lifted_lambda;
            lambda_trace.push(lambda);
            x = lifted;
            converged = false;
            continue;
        }
        break (phi, rate);
    };
    if let Some(e) = extra {
        let r = secrecy_rate(inst, &e);
        if r > rate {
            phi = e;
            rate = r;
        }
    }
    Ok(PlsDesign {
        phi,
        rate,
        sdr_rate: (lambda / sb).log2().max(0.0),
        lambda_trace,
        inner_traces,
        relaxed: x,
        converged,
    })
}

/// Random Hermitian PSD matrix of size `n` with unit-order entries, for property checks.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix<f64> {
    let a = CMatrix::from_fn(n, n, |_, _| sample_cn::<f64, _>(rng, 1.0));
    &a * a.adjoint()
}

/// Random homogenised quadratic of `k` elements.
pub fn random_quadratic<R: Rng + ?Sized>(rng: &mut R, k: usize) -> HomogenizedQuadratic {
    let c = DVector::from_fn(k, |_, _| sample_cn::<f64, _>(rng, 1.0));
    HomogenizedQuadratic::from_cascade(&c, sample_cn(rng, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::quadratic::random_feasible;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn zeros(k: usize) -> CVector<f64> {
        DVector::zeros(k)
    }

    #[test]
    fn scalar_bob_quadratic() {
        let inst = PlsInstance {
            d_b: c(3.0),
            d_e: c(0.0),
            g: DVector::from_element(1, c(2.0)),
            h_b: DVector::from_element(1, c(1.0)),
            h_e: zeros(1),
            noise_b_raw: 1.0,
            noise_e: 1.0,
            jammer: None,
        };
        let q = build_pls_quadratics(&inst);
        assert_eq!(q.bob.matrix(), CMatrix::from_row_slice(2, 2, &[c(4.0), c(6.0), c(6.0), c(9.0)]));
        assert!(q.jam.matrix().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rate_examples() {
        let inst = PlsInstance {
            d_b: c(1.0),
            d_e: c(0.0),
            g: zeros(2),
            h_b: zeros(2),
            h_e: zeros(2),
            noise_b_raw: 1.0,
            noise_e: 1.0,
            jammer: None,
        };
        let phi = ReflectionVector::zeros(2);
        assert!((secrecy_rate(&inst, &phi) - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sym = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(3, 0.0)).unwrap().without_jammer();
        sym.d_e = sym.d_b;
        sym.h_e = sym.h_b.clone();
        let phi = random_feasible(&mut rng, 3, ReflectionMode::Absorptive);
        assert_eq!(secrecy_rate(&sym, &phi), 0.0);
    }

    #[test]
    fn quadratic_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(4, 0.0)).unwrap();
        let q = build_pls_quadratics(&inst);
        let j = inst.jammer.as_ref().unwrap();
        for _ in 0..100 {
            let phi = random_feasible(&mut rng, 4, ReflectionMode::Absorptive);
            let p = phi.coeffs();
            let bob: C64 = inst.d_b + (0..4).map(|k| inst.g[k] * p[k] * inst.h_b[k]).sum::<C64>();
            let eve: C64 = inst.d_e + (0..4).map(|k| inst.g[k] * p[k] * inst.h_e[k]).sum::<C64>();
            let jam: C64 = j.d_j + (0..4).map(|k| j.g_j[k] * p[k] * inst.h_e[k]).sum::<C64>();
            assert!((q.bob.eval(&phi) - bob.norm_sqr()).abs() <= 1e-12 * bob.norm_sqr().max(1.0));
            assert!((q.eve.eval(&phi) - eve.norm_sqr()).abs() <= 1e-12 * eve.norm_sqr().max(1.0));
            assert!((q.jam.eval(&phi) - jam.norm_sqr()).abs() <= 1e-12 * jam.norm_sqr().max(1.0));
        }
    }

    #[test]
    fn rate_matches_relaxed_ratio_at_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(2, 0.0)).unwrap();
        let q = build_pls_quadratics(&inst);
        for _ in 0..20 {
            let phi = random_feasible(&mut rng, 2, ReflectionMode::Absorptive);
            let lam = lambda_update(&SdrMatrix::rank_one(&phi), &q, inst.noise_b(), inst.noise_e);
            let ratio = (1.0 + sinr_bob(&inst, &phi)) / (1.0 + sinr_eve(&inst, &phi));
            assert!((lam / inst.noise_b() - ratio).abs() <= 1e-12 * ratio);
            let rate = secrecy_rate(&inst, &phi);
            assert!((rate - ratio.log2().max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_special_cases() {
        let k = 2;
        let zero = PlsQuadratics { bob: HomogenizedQuadratic::zero(k), eve: HomogenizedQuadratic::zero(k), jam: HomogenizedQuadratic::zero(k) };
        assert!((lambda_update(&SdrMatrix::identity(k), &zero, 2.0, 1.0) - 2.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = PlsQuadratics { bob: random_quadratic(&mut rng, k), eve: random_quadratic(&mut rng, k), jam: HomogenizedQuadratic::zero(k) };
        let x = SdrMatrix::identity(k);
        let expect = (2.0 * 1.5 + 1.5 * q.bob.trace_with(x.as_matrix())) / (1.5 + q.eve.trace_with(x.as_matrix()));
        assert!((lambda_update(&x, &q, 2.0, 1.5) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn lambda_matches_elementwise_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = 3;
        let q = PlsQuadratics { bob: random_quadratic(&mut rng, k), eve: random_quadratic(&mut rng, k), jam: random_quadratic(&mut rng, k) };
        let x = random_psd(&mut rng, k + 1);
        let tr = |a: &CMatrix<f64>, b: &CMatrix<f64>| -> f64 {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    s += a[(i, j)] * b[(j, i)];
                }
            }
            s.re
        };
        let (fb, fe, fj) = (q.bob.matrix(), q.eve.matrix(), q.jam.matrix());
        let (sb, se) = (1.3, 0.7);
        let num = sb * se + se * tr(&x, &fb) + sb * tr(&x, &fj) + tr(&(&x * &fb), &(&x * &fj));
        let den = se + tr(&x, &(&fe + &fj));
        let lam = num / den;
        let got = {
            let (n, d) = ratio_parts(&x, &q, sb, se);
            n / d
        };
        assert!((got - lam).abs() <= 1e-10 * lam.abs());
    }

    #[test]
    fn linearization_touches_and_minorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = 3;
        let q = PlsQuadratics { bob: random_quadratic(&mut rng, k), eve: random_quadratic(&mut rng, k), jam: random_quadratic(&mut rng, k) };
        for _ in 0..20 {
            let x0 = random_psd(&mut rng, k + 1);
            let x = random_psd(&mut rng, k + 1);
            let exact0 = parametric_objective(&x0, &q, 1.0, 1.0, 0.8);
            let lin0 = linearized_objective(&x0, &x0, &q, 1.0, 1.0, 0.8);
            assert!((exact0 - lin0).abs() <= 1e-10 * exact0.abs().max(1.0));
            let exact = parametric_objective(&x, &q, 1.0, 1.0, 0.8);
            let lin = linearized_objective(&x, &x0, &q, 1.0, 1.0, 0.8);
            assert!(lin <= exact + 1e-9 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn design_is_feasible_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(3, 0.0)).unwrap();
        for mode in [ReflectionMode::Absorptive, ReflectionMode::Conventional] {
            let d = maximize_secrecy(&inst, mode, &PlsOptions::default()).unwrap();
            assert!(ReflectionVector::new(d.phi.coeffs().clone(), mode).is_ok());
            assert!(d.lambda_trace.windows(2).all(|w| w[1] >= w[0]));
            for t in &d.inner_traces {
                assert!(t.windows(2).all(|w| w[1] >= w[0]));
            }
            assert!((d.rate - secrecy_rate(&inst, &d.phi)).abs() < 1e-12);
        }
    }

    #[test]
    fn bob_only_aligns_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(3, 0.0)).unwrap().without_jammer();
        inst.d_e = c(0.0);
        inst.h_e = zeros(3);
        for mode in [ReflectionMode::Absorptive, ReflectionMode::Conventional] {
            let d = maximize_secrecy(&inst, mode, &PlsOptions::default()).unwrap();
            for kk in 0..3 {
                let term = inst.g[kk] * d.phi.coeffs()[kk] * inst.h_b[kk];
                let diff = (term.arg() - inst.d_b.arg()).rem_euclid(std::f64::consts::TAU);
                let diff = diff.min(std::f64::consts::TAU - diff);
                assert!(diff < 1e-3, "element {kk} misaligned by {diff}");
                assert!((d.phi.coeffs()[kk].norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn aligned_phases_maximise_bob_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(5, 0.0)).unwrap();
        let phi = aligned_with_bob(&inst);
        let best = sinr_bob(&inst, &phi);
        for _ in 0..50 {
            let other = random_feasible(&mut rng, 5, ReflectionMode::Absorptive);
            assert!(sinr_bob(&inst, &other) <= best + 1e-12);
        }
    }

    #[test]
    fn ratio_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(3, 0.0)).unwrap();
        let q = build_pls_quadratics(&inst);
        let (nb, ne) = (inst.noise_b(), inst.noise_e);
        let phi = random_feasible(&mut rng, 3, ReflectionMode::Absorptive).into_coeffs();
        let (r, g) = ratio_and_gradient(&phi, &q, nb, ne);
        let x = SdrMatrix::rank_one(&ReflectionVector::projected(phi.clone(), ReflectionMode::Absorptive));
        assert!((r - lambda_update(&x, &q, nb, ne)).abs() < 1e-10 * r);
        let h = 1e-6;
        for _ in 0..5 {
            let dir = random_feasible(&mut rng, 3, ReflectionMode::Absorptive).into_coeffs();
            let fd = (ratio_and_gradient(&(&phi + &dir * C64::new(h, 0.0)), &q, nb, ne).0
                - ratio_and_gradient(&(&phi - &dir * C64::new(h, 0.0)), &q, nb, ne).0)
                / (2.0 * h);
            let analytic = 2.0 * g.dotc(&dir).re;
            assert!((fd - analytic).abs() < 1e-5 * analytic.abs().max(1.0), "{fd} vs {analytic}");
        }
    }

    #[test]
    fn ratio_ascent_never_decreases_the_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for mode in [ReflectionMode::Absorptive, ReflectionMode::Conventional] {
            let inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(4, 0.0)).unwrap();
            let q = build_pls_quadratics(&inst);
            let (nb, ne) = (inst.noise_b(), inst.noise_e);
            let start = ReflectionVector::projected(aligned_with_bob(&inst).into_coeffs(), mode);
            let end = ratio_ascent(&start, &q, nb, ne, 25);
            assert!(ReflectionVector::new(end.coeffs().clone(), mode).is_ok());
            let before = ratio_and_gradient(start.coeffs(), &q, nb, ne).0;
            let after = ratio_and_gradient(end.coeffs(), &q, nb, ne).0;
            assert!(after >= before);
        }
    }

    #[test]
    fn parametric_steps_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let inst = rayleigh_instance_from(&mut rng, &PlsScenario::uniform(3, 0.0)).unwrap();
        let q = build_pls_quadratics(&inst);
        let (nb, ne) = (inst.noise_b(), inst.noise_e);
        let start = SdrMatrix::ris_off(3);
        let lambda = lambda_update(&start, &q, nb, ne);
        let (x, trace) = maximize_parametric(&q, nb, ne, lambda, start, ReflectionMode::Absorptive, &PlsOptions::default()).unwrap();
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(*trace.last().unwrap() >= 0.0);
        assert!(lambda_update(&x, &q, nb, ne) >= lambda);
    }
}

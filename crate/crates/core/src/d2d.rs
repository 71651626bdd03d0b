//! Device-to-device interference mitigation: maximise the worst SINR of `L`
//! links by semidefinite relaxation, Dinkelbach iterations on the max-min
//! ratio and Gaussian randomization back to a rank-one design.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{rayleigh_matrix_from, RngSeed};
use crate::error::{Error, Result};
use crate::linalg::{check_matrix, db_to_linear, make_diag_channel, CMatrix, CVector};
use crate::quadratic::{best_candidate, gaussian_candidates, HomogenizedQuadratic, SdrMatrix};
use crate::reflection::{ReflectionMode, ReflectionVector};
use crate::solvers::{solve_sdp, AffineForm, SdpObjective, SdpProblem, SolverOptions};

type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct D2DInstance {
    /// Transmitters to receivers, `L x L`; the diagonal holds the desired links.
    pub direct: CMatrix<f64>,
    /// Transmitters to surface, `K x L`.
    pub to_ris: CMatrix<f64>,
    /// Surface to receivers, `L x K`.
    pub from_ris: CMatrix<f64>,
    /// Transmit amplitudes `p_l`; the SINR uses `p_l^2`.
    pub powers: Vec<f64>,
    pub noise_var: f64,
}

impl D2DInstance {
    pub fn new(direct: CMatrix<f64>, to_ris: CMatrix<f64>, from_ris: CMatrix<f64>, powers: Vec<f64>, noise_var: f64) -> Result<Self> {
        check_matrix("D", &direct)?;
        check_matrix("G", &to_ris)?;
        check_matrix("H", &from_ris)?;
        let l = direct.nrows();
        if direct.ncols() != l {
            return Err(Error::dims("D (columns)", l, direct.ncols()));
        }
        if to_ris.ncols() != l {
            return Err(Error::dims("G (columns)", l, to_ris.ncols()));
        }
        if from_ris.nrows() != l {
            return Err(Error::dims("H (rows)", l, from_ris.nrows()));
        }
        if from_ris.ncols() != to_ris.nrows() {
            return Err(Error::dims("H (columns)", to_ris.nrows(), from_ris.ncols()));
        }
        if powers.len() != l {
            return Err(Error::dims("powers", l, powers.len()));
        }
        if powers.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidArgument("transmit powers must be positive".into()));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidArgument("noise variance must be positive".into()));
        }
        Ok(Self { direct, to_ris, from_ris, powers, noise_var })
    }

    pub fn links(&self) -> usize {
        self.direct.nrows()
    }

    pub fn elements(&self) -> usize {
        self.to_ris.nrows()
    }

    /// Same channels with every amplitude multiplied by `factor`.
    pub fn with_scaled_power(&self, factor: f64) -> Self {
        Self { powers: self.powers.iter().map(|p| p * factor).collect(), ..self.clone() }
    }

    /// Same channels with every amplitude replaced by `p`.
    pub fn with_uniform_power(&self, p: f64) -> Result<Self> {
        Self::new(self.direct.clone(), self.to_ris.clone(), self.from_ris.clone(), vec![p; self.links()], self.noise_var)
    }
}

/// Channel strengths in dB and the common amplitude of a Rayleigh scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D2DScenario {
    pub links: usize,
    pub elements: usize,
    pub direct_db: f64,
    pub to_ris_db: f64,
    pub from_ris_db: f64,
    pub power: f64,
    pub noise_var: f64,
}

/// i.i.d. Rayleigh instance. Draw order: `D`, `G`, `H`.
pub fn rayleigh_instance(sc: &D2DScenario, seed: RngSeed) -> Result<D2DInstance> {
    rayleigh_instance_from(&mut seed.rng(), sc)
}

pub fn rayleigh_instance_from<R: Rng + ?Sized>(rng: &mut R, sc: &D2DScenario) -> Result<D2DInstance> {
    let d = rayleigh_matrix_from(rng, sc.links, sc.links, db_to_linear(sc.direct_db))?;
    let g = rayleigh_matrix_from(rng, sc.elements, sc.links, db_to_linear(sc.to_ris_db))?;
    let h = rayleigh_matrix_from(rng, sc.links, sc.elements, db_to_linear(sc.from_ris_db))?;
    D2DInstance::new(d, g, h, vec![sc.power; sc.links], sc.noise_var)
}

/// Quadratic `|H(l,:) diag(phi) G(:,m) + D(l,m)|^2` in `phi_bar` (0-based indices).
pub fn build_f(inst: &D2DInstance, l: usize, m: usize) -> Result<HomogenizedQuadratic> {
    let links = inst.links();
    if l >= links || m >= links {
        return Err(Error::InvalidArgument(format!("link pair ({l}, {m}) out of range for {links} links")));
    }
    let k = inst.elements();
    let cascade = DVector::from_fn(k, |i, _| inst.from_ris[(l, i)] * inst.to_ris[(i, m)]);
    Ok(HomogenizedQuadratic::from_cascade(&cascade, inst.direct[(l, m)]))
}

fn all_quadratics(inst: &D2DInstance) -> Vec<Vec<HomogenizedQuadratic>> {
    (0..inst.links())
        .map(|l| (0..inst.links()).map(|m| build_f(inst, l, m).expect("indices in range")).collect())
        .collect()
}

/// `D + H diag(phi) G`.
pub fn channel_matrix(inst: &D2DInstance, phi: &ReflectionVector<f64>) -> Result<CMatrix<f64>> {
    Ok(&inst.direct + make_diag_channel(phi, &inst.from_ris, &inst.to_ris)?)
}

fn sinr_from_channel(inst: &D2DInstance, ch: &CMatrix<f64>, l: usize) -> f64 {
    let p2 = |m: usize| inst.powers[m] * inst.powers[m];
    let signal = ch[(l, l)].norm_sqr() * p2(l);
    let interference: f64 = (0..inst.links()).filter(|&m| m != l).map(|m| ch[(l, m)].norm_sqr() * p2(m)).sum();
    signal / (interference + inst.noise_var)
}

/// SINR of link `l` (0-based).
pub fn sinr(inst: &D2DInstance, phi: &ReflectionVector<f64>, l: usize) -> Result<f64> {
    if l >= inst.links() {
        return Err(Error::InvalidArgument(format!("link {l} out of range for {} links", inst.links())));
    }
    Ok(sinr_from_channel(inst, &channel_matrix(inst, phi)?, l))
}

/// `min_l SINR_l`.
pub fn worst_sinr(inst: &D2DInstance, phi: &ReflectionVector<f64>) -> Result<f64> {
    let ch = channel_matrix(inst, phi)?;
    Ok((0..inst.links()).map(|l| sinr_from_channel(inst, &ch, l)).fold(f64::INFINITY, f64::min))
}

/// Relaxed SINR ratios `tr(X F_ll) p_l^2 / (sum tr(X F_lm) p_m^2 + sigma^2)`.
fn relaxed_ratios(inst: &D2DInstance, quads: &[Vec<HomogenizedQuadratic>], x: &CMatrix<f64>) -> Vec<f64> {
    let p2 = |m: usize| inst.powers[m] * inst.powers[m];
    (0..inst.links())
        .map(|l| {
            let signal = quads[l][l].trace_with(x) * p2(l);
            let interference: f64 = (0..inst.links()).filter(|&m| m != l).map(|m| quads[l][m].trace_with(x) * p2(m)).sum();
            signal / (interference + inst.noise_var)
        })
        .collect()
}

/// Worst relaxed SINR at `x`.
pub fn relaxed_worst_sinr(inst: &D2DInstance, x: &SdrMatrix) -> f64 {
    let quads = all_quadratics(inst);
    relaxed_ratios(inst, &quads, x.as_matrix()).into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D2DOptions {
    /// Relative change of the Dinkelbach parameter that ends the outer loop.
    pub tol: f64,
    pub max_outer: usize,
    pub randomization_trials: usize,
    /// Ascent steps per refinement stage; zero keeps the randomized design as drawn.
    pub polish_iters: usize,
    /// Best randomized candidates refined before the strongest one is kept.
    pub polish_starts: usize,
    /// Relaxed worst SINR at which refinement starts: amplitudes are first
    /// scaled down to reach it, then raised tenfold per stage.
    pub continuation_sinr: f64,
    /// For the absorptive surface, also refine the phase-only design, which is
    /// feasible too, and keep the better of the two.
    pub conventional_start: bool,
    pub seed: u64,
    pub sdp: SolverOptions,
}

impl Default for D2DOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_outer: 50,
            randomization_trials: 200,
            polish_iters: 2000,
            polish_starts: 4,
            continuation_sinr: 100.0,
            conventional_start: true,
            seed: 0,
            sdp: SolverOptions::sdp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct D2DDesign {
    pub phi: ReflectionVector<f64>,
    pub worst_sinr: f64,
    /// Worst SINR of the best randomized candidate, before refinement.
    pub randomized_sinr: f64,
    /// Worst relaxed SINR of the final relaxed matrix.
    pub sdr_value: f64,
    /// Upper bound on the relaxation optimum (hence on any feasible design).
    pub sdr_bound: f64,
    /// Dinkelbach parameters, starting with the initial point.
    pub lambda_trace: Vec<f64>,
    pub relaxed: SdrMatrix,
    pub converged: bool,
}

/// Max-min SINR design for the given surface type.
pub fn maxmin_design(inst: &D2DInstance, mode: ReflectionMode, opts: &D2DOptions) -> Result<D2DDesign> {
    if mode == ReflectionMode::Absorptive && opts.conventional_start {
        return Ok(maxmin_design_pair(inst, opts)?.0);
    }
    design_from(inst, mode, opts, None)
}

/// Absorptive and phase-only designs of one instance; the phase-only design
/// is computed once and also refined as an absorptive candidate.
pub fn maxmin_design_pair(inst: &D2DInstance, opts: &D2DOptions) -> Result<(D2DDesign, D2DDesign)> {
    let phase_only = design_from(inst, ReflectionMode::Conventional, opts, None)?;
    let absorptive = design_from(inst, ReflectionMode::Absorptive, opts, Some(&phase_only.phi))?;
    Ok((absorptive, phase_only))
}

fn design_from(
    inst: &D2DInstance,
    mode: ReflectionMode,
    opts: &D2DOptions,
    extra_start: Option<&ReflectionVector<f64>>,
) -> Result<D2DDesign> {
    if !(opts.tol > 0.0) || opts.max_outer == 0 {
        return Err(Error::InvalidArgument("Dinkelbach options need tol > 0 and max_outer >= 1".into()));
    }
    let k = inst.elements();
    let l_count = inst.links();
    let quads = all_quadratics(inst);
    let mats: Vec<Vec<CMatrix<f64>>> = quads.iter().map(|row| row.iter().map(|q| q.matrix()).collect()).collect();
    let p2: Vec<f64> = inst.powers.iter().map(|p| p * p).collect();
    let ratio_min = |x: &CMatrix<f64>| relaxed_ratios(inst, &quads, x).into_iter().fold(f64::INFINITY, f64::min);

    let mut x = match mode {
        ReflectionMode::Absorptive => SdrMatrix::ris_off(k),
        ReflectionMode::Conventional => SdrMatrix::identity(k),
    };
    let mut lambda = ratio_min(x.as_matrix());
    let mut lambda_trace = vec![lambda];
    let mut sdr_bound = f64::INFINITY;
    let mut converged = false;

    for outer in 0..opts.max_outer {
        let forms: Vec<AffineForm> = (0..l_count)
            .map(|l| {
                let mut m = &mats[l][l] * C64::new(p2[l], 0.0);
                for j in (0..l_count).filter(|&j| j != l) {
                    m -= &mats[l][j] * C64::new(lambda * p2[j], 0.0);
                }
                AffineForm { matrix: m, offset: -lambda * inst.noise_var }
            })
            .collect();
        let problem = SdpProblem::new(SdpObjective::MaxMin(forms), mode)?;
        let sol = solve_sdp(&problem, &opts.sdp).map_err(|e| e.context(format!("Dinkelbach iteration {outer}")))?;
        sdr_bound = sdr_bound.min(lambda + sol.dual_bound.max(0.0) / inst.noise_var);
        let next = ratio_min(sol.matrix.as_matrix());
        if !(next >= lambda) {
            converged = true;
            break;
        }
        let change = next - lambda;
        lambda = next;
        lambda_trace.push(lambda);
        x = sol.matrix;
        if change <= opts.tol * lambda.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let sdr_bound = sdr_bound.max(lambda);

    let candidates = gaussian_candidates(&x, mode, opts.randomization_trials.max(1), RngSeed(opts.seed));
    let (drawn, randomized_sinr) = best_candidate(candidates.clone(), |c| worst_sinr(inst, c).unwrap_or(f64::NEG_INFINITY));
    let stages = continuation_stages(lambda, opts.continuation_sinr);
    let first = inst.with_scaled_power(stages[0]);
    let mut ranked: Vec<(f64, ReflectionVector<f64>)> =
        candidates.into_iter().map(|c| (worst_sinr(&first, &c).unwrap_or(f64::NEG_INFINITY), c)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut phi = drawn.clone();
    let mut best = f64::NEG_INFINITY;
    for (_, c) in ranked.into_iter().take(opts.polish_starts) {
        let (refined, value) = polish(&first, &c, opts.polish_iters / 4)?;
        if value > best {
            phi = refined;
            best = value;
        }
    }
    for &factor in &stages {
        phi = polish(&inst.with_scaled_power(factor), &phi, opts.polish_iters)?.0;
    }
    let mut worst = worst_sinr(inst, &phi)?;
    if worst < randomized_sinr {
        phi = drawn;
        worst = randomized_sinr;
    }
    if let Some(extra) = extra_start {
        let start = ReflectionVector::projected(extra.coeffs().clone(), mode);
        let (alt, alt_worst) = polish(inst, &start, opts.polish_iters)?;
        if alt_worst > worst {
            phi = alt;
            worst = alt_worst;
        }
    }
    Ok(D2DDesign {
        phi,
        worst_sinr: worst,
        randomized_sinr,
        sdr_value: lambda,
        sdr_bound,
        lambda_trace,
        relaxed: x,
        converged,
    })
}

/// Amplitude factors of the refinement stages: the first brings the relaxed
/// worst SINR `relaxed` down to `target`, each next one is ten times larger,
/// and the last is one.
fn continuation_stages(relaxed: f64, target: f64) -> Vec<f64> {
    let mut stages = Vec::new();
    if target > 0.0 && relaxed > target {
        let mut factor = (target / relaxed).sqrt();
        while factor < 1.0 {
            stages.push(factor);
            factor *= 10.0;
        }
    }
    stages.push(1.0);
    stages
}

/// Best worst-SINR design among Gaussian draws from `phi_hat`.
pub fn randomize_rank_one(
    phi_hat: &SdrMatrix,
    inst: &D2DInstance,
    mode: ReflectionMode,
    trials: usize,
    seed: RngSeed,
) -> Result<(ReflectionVector<f64>, f64)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("randomization needs at least one trial".into()));
    }
    if phi_hat.dim() != inst.elements() + 1 {
        return Err(Error::dims("relaxed matrix", inst.elements() + 1, phi_hat.dim()));
    }
    let candidates = gaussian_candidates(phi_hat, mode, trials, seed);
    Ok(best_candidate(candidates, |c| worst_sinr(inst, c).unwrap_or(f64::NEG_INFINITY)))
}

/// Log-SINRs of every link and their gradients with respect to `conj(phi)`.
fn log_sinr_gradients(inst: &D2DInstance, quads: &[Vec<HomogenizedQuadratic>], phi: &CVector<f64>) -> (Vec<f64>, Vec<CVector<f64>>) {
    let k = phi.len();
    let links = inst.links();
    let p2 = |m: usize| inst.powers[m] * inst.powers[m];
    let mut values = Vec::with_capacity(links);
    let mut grads = Vec::with_capacity(links);
    for l in 0..links {
        let amp = |m: usize| {
            let u = quads[l][m].factor();
            u[k].conj() + (0..k).map(|i| u[i].conj() * phi[i]).sum::<C64>()
        };
        let a_sig = amp(l);
        let signal = a_sig.norm_sqr() * p2(l);
        let mut grad_int = CVector::<f64>::zeros(k);
        let mut interference = inst.noise_var;
        for m in (0..links).filter(|&m| m != l) {
            let a = amp(m);
            interference += a.norm_sqr() * p2(m);
            grad_int += quads[l][m].factor().rows(0, k) * (a * p2(m));
        }
        let grad_sig = quads[l][l].factor().rows(0, k) * (a_sig * p2(l));
        values.push((signal / interference).ln());
        grads.push(grad_sig.unscale(signal.max(f64::MIN_POSITIVE)) - grad_int.unscale(interference));
    }
    (values, grads)
}

const SOFT_MIN_SHARPNESS: f64 = 20.0;

fn soft_min(values: &[f64]) -> (f64, Vec<f64>) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = values.iter().map(|v| (-SOFT_MIN_SHARPNESS * (v - lo)).exp()).collect();
    let total: f64 = w.iter().sum();
    (lo - total.ln() / SOFT_MIN_SHARPNESS, w.into_iter().map(|x| x / total).collect())
}

/// Projected ascent of a smoothed worst log-SINR starting from `start`.
/// Returns whichever of the start and the refined design has the larger worst SINR.
pub fn polish(inst: &D2DInstance, start: &ReflectionVector<f64>, iters: usize) -> Result<(ReflectionVector<f64>, f64)> {
    let start_value = worst_sinr(inst, start)?;
    if iters == 0 {
        return Ok((start.clone(), start_value));
    }
    let quads = all_quadratics(inst);
    let mode = start.mode();
    let mut phi = start.coeffs().clone();
    let surrogate = |phi: &CVector<f64>| {
        let (values, grads) = log_sinr_gradients(inst, &quads, phi);
        let (f, w) = soft_min(&values);
        let g = grads.iter().zip(&w).fold(CVector::<f64>::zeros(phi.len()), |acc, (g, w)| acc + g * C64::new(*w, 0.0));
        (f, g)
    };
    let (mut value, mut grad) = surrogate(&phi);
    let mut step = 1.0 / (1.0 + grad.norm());
    for _ in 0..iters {
        let mut moved = false;
        for _ in 0..40 {
            let trial = ReflectionVector::projected(&phi + &grad * C64::new(step, 0.0), mode).into_coeffs();
            let (v, g) = surrogate(&trial);
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
    let refined = ReflectionVector::projected(phi, mode);
    let refined_value = worst_sinr(inst, &refined)?;
    Ok(if refined_value > start_value { (refined, refined_value) } else { (start.clone(), start_value) })
}

/// Largest off-diagonal and smallest diagonal modulus of the effective channel.
pub fn diagonal_dominance(inst: &D2DInstance, phi: &ReflectionVector<f64>) -> Result<(f64, f64)> {
    let ch = channel_matrix(inst, phi)?;
    let l = inst.links();
    let mut off = 0.0f64;
    let mut diag = f64::INFINITY;
    for i in 0..l {
        for j in 0..l {
            if i == j {
                diag = diag.min(ch[(i, j)].norm());
            } else {
                off = off.max(ch[(i, j)].norm());
            }
        }
    }
    Ok((off, diag))
}

/// Modulus of every entry of the effective channel.
pub fn channel_modulus(inst: &D2DInstance, phi: &ReflectionVector<f64>) -> Result<DMatrix<f64>> {
    Ok(channel_matrix(inst, phi)?.map(|z| z.norm()))
}

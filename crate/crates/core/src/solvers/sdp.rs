//! Small complex semidefinite programs over the homogenised reflection matrix.
//!
//! The decision variable is a Hermitian PSD `X` of size `K + 1` whose first
//! `K` diagonal entries are bounded by one (absorptive surface) or fixed to
//! one (conventional surface) and whose last diagonal entry is fixed to one.
//! Two objectives are supported: a linear `max Re tr(C X)` and a max-min
//! `max min_l (Re tr(M_l X) + o_l)`, which is rewritten in epigraph form with
//! non-negative slacks.
//!
//! The solver is a primal-dual infeasible interior-point method with the
//! HKM search direction and Mehrotra predictor-corrector steps, working
//! natively on complex Hermitian matrices.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SolverOptions;
use crate::error::{Error, Result};
use crate::linalg::{cgemm, hermitian_part, re_trace_product, CMatrix};
use crate::quadratic::SdrMatrix;
use crate::reflection::ReflectionMode;

type C64 = Complex<f64>;

const STEP_FRACTION: f64 = 0.98;
const INFEASIBLE_DUAL: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

/// `Re tr(matrix X)  (sense)  bound`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub matrix: CMatrix<f64>,
    pub sense: Sense,
    pub bound: f64,
}

/// `Re tr(matrix X) + offset`.
#[derive(Debug, Clone)]
pub struct AffineForm {
    pub matrix: CMatrix<f64>,
    pub offset: f64,
}

impl AffineForm {
    pub fn eval(&self, x: &CMatrix<f64>) -> f64 {
        re_trace_product(&self.matrix, x) + self.offset
    }
}

#[derive(Debug, Clone)]
pub enum SdpObjective {
    /// Maximise `Re tr(C X)`.
    Linear(CMatrix<f64>),
    /// Maximise the smallest of several affine forms.
    MaxMin(Vec<AffineForm>),
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: SdpObjective,
    pub mode: ReflectionMode,
    pub constraints: Vec<LinearConstraint>,
    dim: usize,
}

impl SdpProblem {
    pub fn new(objective: SdpObjective, mode: ReflectionMode) -> Result<Self> {
        let dim = match &objective {
            SdpObjective::Linear(c) => c.nrows(),
            SdpObjective::MaxMin(forms) => {
                let first = forms
                    .first()
                    .ok_or_else(|| Error::InvalidArgument("max-min objective needs at least one form".into()))?;
                first.matrix.nrows()
            }
        };
        if dim < 1 {
            return Err(Error::dims("SDP objective", "at least 1x1", dim));
        }
        match &objective {
            SdpObjective::Linear(c) => check_hermitian("objective", c, dim)?,
            SdpObjective::MaxMin(forms) => {
                for f in forms {
                    check_hermitian("max-min form", &f.matrix, dim)?;
                    if !f.offset.is_finite() {
                        return Err(Error::InvalidArgument("max-min offset must be finite".into()));
                    }
                }
            }
        }
        Ok(Self { objective, mode, constraints: Vec::new(), dim })
    }

    pub fn with_constraint(mut self, matrix: CMatrix<f64>, sense: Sense, bound: f64) -> Result<Self> {
        check_hermitian("constraint", &matrix, self.dim)?;
        if !bound.is_finite() {
            return Err(Error::InvalidArgument("constraint bound must be finite".into()));
        }
        self.constraints.push(LinearConstraint { matrix, sense, bound });
        Ok(self)
    }

    /// Size of `X`, i.e. `K + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Objective value of the original maximisation at `x`.
    pub fn value(&self, x: &CMatrix<f64>) -> f64 {
        match &self.objective {
            SdpObjective::Linear(c) => re_trace_product(c, x),
            SdpObjective::MaxMin(forms) => forms.iter().map(|f| f.eval(x)).fold(f64::INFINITY, f64::min),
        }
    }
}

fn check_hermitian(operand: &'static str, m: &CMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::dims(operand, format!("{dim}x{dim}"), format!("{}x{}", m.nrows(), m.ncols())));
    }
    let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("{operand} has non-finite entries")));
    }
    for i in 0..dim {
        for j in 0..=i {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-10 * scale.max(1.0) {
                return Err(Error::InvalidArgument(format!("{operand} is not Hermitian")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    /// Iteration budget exhausted; the best iterate is returned.
    Inaccurate,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub matrix: SdrMatrix,
    /// Objective of the original maximisation at `matrix`.
    pub objective: f64,
    /// Upper bound on the optimum from the dual iterate.
    pub dual_bound: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Complementarity `mu` after every iteration (non-increasing).
    pub gap_trace: Vec<f64>,
}

enum RowOp {
    /// `weight * X(index, index)`.
    Diag { index: usize, weight: f64 },
    Dense(CMatrix<f64>),
}

struct Row {
    op: RowOp,
    lp: Vec<(usize, f64)>,
    b: f64,
}

/// `min <C,X> + c's  s.t.  <A_i,X> + a_i's = b_i,  X psd, s >= 0`.
struct Standard {
    n: usize,
    rows: Vec<Row>,
    c_mat: CMatrix<f64>,
    c_lp: DVector<f64>,
    /// Common factor the max-min forms were divided by.
    form_scale: f64,
    /// Objective constant removed from the cost.
    offset: f64,
}

impl Standard {
    fn from_problem(p: &SdpProblem) -> Self {
        let n = p.dim;
        let k = n - 1;
        let fixed: Vec<usize> = match p.mode {
            ReflectionMode::Absorptive => vec![k],
            ReflectionMode::Conventional => (0..n).collect(),
        };
        // Entries on fixed diagonal positions are constants; they move to the offsets.
        let split = |m: &CMatrix<f64>| {
            let mut m = m.clone();
            let mut constant = 0.0;
            for &i in &fixed {
                constant += m[(i, i)].re;
                m[(i, i)] = C64::new(0.0, 0.0);
            }
            (m, constant)
        };
        let mut rows = Vec::new();
        let mut n_lp = 0;
        let mut new_slack = |coeff: f64| {
            n_lp += 1;
            vec![(n_lp - 1, coeff)]
        };
        for i in 0..k {
            let lp = match p.mode {
                ReflectionMode::Absorptive => new_slack(1.0),
                ReflectionMode::Conventional => Vec::new(),
            };
            rows.push(Row { op: RowOp::Diag { index: i, weight: 1.0 }, lp, b: 1.0 });
        }
        rows.push(Row { op: RowOp::Diag { index: k, weight: 1.0 }, lp: Vec::new(), b: 1.0 });
        for c in &p.constraints {
            let lp = match c.sense {
                Sense::Ge => new_slack(-1.0),
                Sense::Le => new_slack(1.0),
                Sense::Eq => Vec::new(),
            };
            let (m, constant) = split(&c.matrix);
            rows.push(Row { op: RowOp::Dense(m), lp, b: c.bound - constant });
        }
        let mut c_lp_entries = Vec::new();
        let mut form_scale = 1.0;
        let (c_mat, offset) = match &p.objective {
            SdpObjective::Linear(c) => {
                let (m, constant) = split(c);
                (-m, constant)
            }
            SdpObjective::MaxMin(forms) => {
                let forms: Vec<(CMatrix<f64>, f64)> = forms
                    .iter()
                    .map(|f| {
                        let (m, constant) = split(&f.matrix);
                        (m, f.offset + constant)
                    })
                    .collect();
                let largest = forms.iter().map(|(m, _)| m.norm()).fold(0.0f64, f64::max);
                if largest > 0.0 && forms.len() > 1 {
                    form_scale = largest;
                }
                let inv = C64::new(1.0 / form_scale, 0.0);
                let (m0, o0) = &forms[0];
                if forms.len() > 1 {
                    let e0 = n_lp;
                    n_lp += forms.len();
                    for (l, (m, o)) in forms.iter().enumerate().skip(1) {
                        rows.push(Row {
                            op: RowOp::Dense((m - m0) * inv),
                            lp: vec![(e0 + l, -1.0), (e0, 1.0)],
                            b: (o0 - o) / form_scale,
                        });
                    }
                    c_lp_entries.push((e0, 1.0));
                }
                (-m0 * inv, *o0)
            }
        };
        let mut c_lp = DVector::zeros(n_lp);
        for (i, v) in c_lp_entries {
            c_lp[i] = v;
        }
        Self { n, rows, c_mat, c_lp, form_scale, offset }
    }

    fn n_lp(&self) -> usize {
        self.c_lp.len()
    }

    /// Normalises rows and the cost to unit norm; returns the factor mapping
    /// normalised objective values back to the original ones.
    fn scale(&mut self) -> f64 {
        for row in &mut self.rows {
            let mat_sq = match &row.op {
                RowOp::Diag { weight, .. } => weight * weight,
                RowOp::Dense(a) => a.iter().map(|z| z.norm_sqr()).sum(),
            };
            let norm = (mat_sq + row.lp.iter().map(|(_, v)| v * v).sum::<f64>()).sqrt();
            if norm > 0.0 {
                match &mut row.op {
                    RowOp::Diag { weight, .. } => *weight /= norm,
                    RowOp::Dense(a) => *a /= C64::new(norm, 0.0),
                }
                for (_, v) in &mut row.lp {
                    *v /= norm;
                }
                row.b /= norm;
            }
        }
        let cnorm = (self.c_mat.iter().map(|z| z.norm_sqr()).sum::<f64>() + self.c_lp.norm_squared()).sqrt();
        let scale = if cnorm > 0.0 { cnorm } else { 1.0 };
        self.c_mat /= C64::new(scale, 0.0);
        self.c_lp /= scale;
        scale * self.form_scale
    }

    fn apply(&self, x: &CMatrix<f64>, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| {
                let mut v = match &row.op {
                    RowOp::Diag { index, weight } => weight * x[(*index, *index)].re,
                    RowOp::Dense(a) => re_trace_product(a, x),
                };
                for &(j, c) in &row.lp {
                    v += c * s[j];
                }
                v
            }),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> (CMatrix<f64>, DVector<f64>) {
        let mut m = DMatrix::zeros(self.n, self.n);
        let mut v = DVector::zeros(self.n_lp());
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            match &row.op {
                RowOp::Diag { index, weight } => m[(*index, *index)] += C64::new(weight * yi, 0.0),
                RowOp::Dense(a) => m += a * C64::new(yi, 0.0),
            }
            for &(j, c) in &row.lp {
                v[j] += c * yi;
            }
        }
        (m, v)
    }

    fn b(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.b))
    }

    /// Schur complement `M_ij = <A_i, X A_j Z^-1> + sum a_i a_j s / z`.
    fn schur(&self, x: &CMatrix<f64>, zinv: &CMatrix<f64>, s: &DVector<f64>, z: &DVector<f64>) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut out = DMatrix::zeros(m, m);
        for (j, rj) in self.rows.iter().enumerate() {
            match &rj.op {
                RowOp::Diag { index: l, weight: wl } => {
                    for (i, ri) in self.rows.iter().enumerate().take(j + 1) {
                        if let RowOp::Diag { index: k, weight: wk } = ri.op {
                            let v = wk * wl * (x[(k, *l)] * zinv[(*l, k)]).re;
                            out[(i, j)] = v;
                            out[(j, i)] = v;
                        }
                    }
                }
                RowOp::Dense(a) => {
                    let t = cgemm(&cgemm(x, a), zinv);
                    for (i, ri) in self.rows.iter().enumerate() {
                        let v = match &ri.op {
                            RowOp::Diag { index, weight } => weight * t[(*index, *index)].re,
                            RowOp::Dense(ai) => {
                                if i > j {
                                    continue;
                                }
                                re_trace_product(ai, &t)
                            }
                        };
                        out[(i, j)] = v;
                        out[(j, i)] = v;
                    }
                }
            }
        }
        if self.n_lp() > 0 {
            let w = s.component_div(z);
            for (i, ri) in self.rows.iter().enumerate() {
                for (j, rj) in self.rows.iter().enumerate() {
                    for &(p, ci) in &ri.lp {
                        for &(q, cj) in &rj.lp {
                            if p == q {
                                out[(i, j)] += ci * cj * w[p];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(m: DMatrix<f64>) -> Result<Self> {
        if let Some(c) = m.clone().cholesky() {
            return Ok(SchurFactor::Chol(c));
        }
        let scale = m.diagonal().amax().max(1e-300);
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-13 * scale;
        }
        if let Some(c) = reg.cholesky() {
            return Ok(SchurFactor::Chol(c));
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::Numerical("interior-point Schur complement is singular".into()));
        }
        Ok(SchurFactor::Lu(lu))
    }

    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let out = match self {
            SchurFactor::Chol(c) => c.solve(rhs),
            SchurFactor::Lu(l) => l
                .solve(rhs)
                .ok_or_else(|| Error::Numerical("interior-point Schur solve failed".into()))?,
        };
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Numerical("interior-point Schur solve produced non-finite values".into()))
        }
    }
}

struct Iterate {
    x: CMatrix<f64>,
    s: DVector<f64>,
    y: DVector<f64>,
    zm: CMatrix<f64>,
    z: DVector<f64>,
}

struct Direction {
    dx: CMatrix<f64>,
    ds: DVector<f64>,
    dy: DVector<f64>,
    dzm: CMatrix<f64>,
    dz: DVector<f64>,
}

fn identity(n: usize, v: f64) -> CMatrix<f64> {
    DMatrix::from_diagonal_element(n, n, C64::new(v, 0.0))
}

/// Inverse of the lower Cholesky factor of a Hermitian positive definite matrix.
fn chol_inv_factor(m: &CMatrix<f64>) -> Option<CMatrix<f64>> {
    let chol = hermitian_part(m).cholesky()?;
    let l = chol.l();
    l.solve_lower_triangular(&identity(m.nrows(), 1.0))
}

/// Largest `alpha` keeping `M + alpha dM` positive semidefinite, given `M^-1 = Linv^H Linv`.
fn psd_step(linv: &CMatrix<f64>, dm: &CMatrix<f64>) -> f64 {
    let s = hermitian_part(&cgemm(&cgemm(linv, dm), &linv.adjoint()));
    let lmin = s.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn lp_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

fn re_inner(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

struct Solver<'a> {
    sf: &'a Standard,
    b: DVector<f64>,
}

impl Solver<'_> {
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        it: &Iterate,
        zinv: &CMatrix<f64>,
        fac: &SchurFactor,
        rp: &DVector<f64>,
        rd_mat: &CMatrix<f64>,
        rd_lp: &DVector<f64>,
        sigma_mu: f64,
        corr: Option<(&CMatrix<f64>, &DVector<f64>)>,
    ) -> Result<Direction> {
        let n = self.sf.n;
        let mut inner = cgemm(&it.x, rd_mat);
        let mut h_lp = DVector::from_fn(it.s.len(), |i, _| sigma_mu - it.s[i] * it.z[i] - it.s[i] * rd_lp[i]);
        if let Some((cm, cv)) = corr {
            inner += cm;
            h_lp -= cv;
        }
        let h_lp = h_lp.component_div(&it.z);
        let h = zinv * C64::new(sigma_mu, 0.0) - &it.x - cgemm(&inner, zinv);
        let rhs = rp - self.sf.apply(&h, &h_lp);
        let dy = fac.solve(&rhs)?;
        let (w, w_lp) = self.sf.adjoint(&dy);
        let dx = hermitian_part(&(h + cgemm(&cgemm(&it.x, &w), zinv)));
        let ds = h_lp + it.s.component_mul(&w_lp).component_div(&it.z);
        let dzm = rd_mat - w;
        let dz = rd_lp - w_lp;
        debug_assert_eq!(dx.nrows(), n);
        Ok(Direction { dx, ds, dy, dzm, dz })
    }

    fn step_lengths(&self, it: &Iterate, lx: &CMatrix<f64>, lz: &CMatrix<f64>, d: &Direction) -> (f64, f64) {
        let ap = psd_step(lx, &d.dx).min(lp_step(&it.s, &d.ds));
        let ad = psd_step(lz, &d.dzm).min(lp_step(&it.z, &d.dz));
        (ap, ad)
    }
}

fn mu_of(x: &CMatrix<f64>, zm: &CMatrix<f64>, s: &DVector<f64>, z: &DVector<f64>, n_tot: f64) -> f64 {
    (re_inner(x, zm) + s.dot(z)) / n_tot
}

/// Takes the step, halving both lengths until `mu` does not increase.
fn advance(it: &Iterate, dir: &Direction, mut ap: f64, mut ad: f64, mu: f64, n_tot: f64, tries: usize) -> Option<(Iterate, f64)> {
    for _ in 0..tries {
        let next = Iterate {
            x: hermitian_part(&(&it.x + &dir.dx * C64::new(ap, 0.0))),
            s: &it.s + &dir.ds * ap,
            y: &it.y + &dir.dy * ad,
            zm: hermitian_part(&(&it.zm + &dir.dzm * C64::new(ad, 0.0))),
            z: &it.z + &dir.dz * ad,
        };
        let mu_next = mu_of(&next.x, &next.zm, &next.s, &next.z, n_tot);
        if mu_next.is_finite() && mu_next <= mu {
            return Some((next, mu_next));
        }
        ap *= 0.5;
        ad *= 0.5;
    }
    None
}

/// Solves the problem to relative gap and feasibility `opts.tol`.
pub fn solve_sdp(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    opts.validate()?;
    let mut sf = Standard::from_problem(problem);
    let cscale = sf.scale();
    let n = sf.n;
    let n_lp = sf.n_lp();
    let n_tot = (n + n_lp) as f64;
    let b = sf.b();
    let solver = Solver { sf: &sf, b: b.clone() };
    let bnorm = b.norm();
    let cnorm = 1.0;

    let bmax = b.iter().fold(0.0f64, |m, v| m.max(1.0 + v.abs()));
    let xi = 10f64.max((n as f64).sqrt()).max(n as f64 * bmax / 2.0);
    let eta = 10f64.max((n as f64).sqrt());
    let mut it = Iterate {
        x: identity(n, xi),
        s: DVector::from_element(n_lp, xi),
        y: DVector::zeros(sf.rows.len()),
        zm: identity(n, eta),
        z: DVector::from_element(n_lp, eta),
    };

    let mut gap_trace = Vec::new();
    let mut mu = mu_of(&it.x, &it.zm, &it.s, &it.z, n_tot);
    let mut status = SdpStatus::Inaccurate;
    let mut iterations = 0;
    let feas_tol = opts.tol.min(1e-8);

    for iter in 1..=opts.max_iters {
        iterations = iter;
        let rp = &solver.b - sf.apply(&it.x, &it.s);
        let (aty, aty_lp) = sf.adjoint(&it.y);
        let rd_mat = hermitian_part(&(&sf.c_mat - aty - &it.zm));
        let rd_lp = &sf.c_lp - aty_lp - &it.z;
        let pobj = re_trace_product(&sf.c_mat, &it.x) + sf.c_lp.dot(&it.s);
        let dobj = b.dot(&it.y);
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = (rd_mat.iter().map(|z| z.norm_sqr()).sum::<f64>() + rd_lp.norm_squared()).sqrt() / (1.0 + cnorm);
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if relgap <= opts.tol && pinf <= feas_tol && dinf <= feas_tol {
            status = SdpStatus::Optimal;
            iterations = iter - 1;
            break;
        }
        if dobj > INFEASIBLE_DUAL * (1.0 + pobj.abs().min(INFEASIBLE_DUAL)) && dinf * (1.0 + it.y.norm()) < 1e-3 * dobj {
            return Err(Error::Infeasible(format!("dual objective diverged to {dobj:.3e}")));
        }

        let lx = chol_inv_factor(&it.x).ok_or_else(|| Error::Numerical("primal iterate lost definiteness".into()))?;
        let lz = chol_inv_factor(&it.zm).ok_or_else(|| Error::Numerical("dual iterate lost definiteness".into()))?;
        let zinv = hermitian_part(&cgemm(&lz.adjoint(), &lz));
        let fac = SchurFactor::new(sf.schur(&it.x, &zinv, &it.s, &it.z))?;

        let pred = solver.direction(&it, &zinv, &fac, &rp, &rd_mat, &rd_lp, 0.0, None)?;
        let (ap, ad) = solver.step_lengths(&it, &lx, &lz, &pred);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        let x_aff = &it.x + &pred.dx * C64::new(ap, 0.0);
        let zm_aff = &it.zm + &pred.dzm * C64::new(ad, 0.0);
        let s_aff = &it.s + &pred.ds * ap;
        let z_aff = &it.z + &pred.dz * ad;
        let mu_aff = mu_of(&x_aff, &zm_aff, &s_aff, &z_aff, n_tot).max(0.0);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let corr_mat = cgemm(&pred.dx, &pred.dzm);
        let corr_lp = pred.ds.component_mul(&pred.dz);
        let dir = solver.direction(&it, &zinv, &fac, &rp, &rd_mat, &rd_lp, sigma * mu, Some((&corr_mat, &corr_lp)))?;
        let (ap_max, ad_max) = solver.step_lengths(&it, &lx, &lz, &dir);
        let ap = (STEP_FRACTION * ap_max).min(1.0);
        let ad = (STEP_FRACTION * ad_max).min(1.0);

        let mut accepted = advance(&it, &dir, ap, ad, mu, n_tot, 4);
        if accepted.is_none() {
            // Fall back to a centred step with equal lengths.
            let centred = solver.direction(&it, &zinv, &fac, &rp, &rd_mat, &rd_lp, 0.5 * mu, None)?;
            let (ap_max, ad_max) = solver.step_lengths(&it, &lx, &lz, &centred);
            let alpha = (STEP_FRACTION * ap_max.min(ad_max)).min(1.0);
            accepted = advance(&it, &centred, alpha, alpha, mu, n_tot, 40);
        }
        let Some((next, mu_next)) = accepted else {
            break;
        };
        it = next;
        mu = mu_next;
        gap_trace.push(mu * cscale);
    }

    let rp = &solver.b - sf.apply(&it.x, &it.s);
    let pinf = rp.norm() / (1.0 + bnorm);
    if status == SdpStatus::Inaccurate && pinf > 1e-3 {
        return Err(Error::Infeasible(format!("primal residual stalled at {pinf:.3e}")));
    }

    let x = clean_diagonal(hermitian_part(&it.x), problem.mode);
    let offset = sf.offset;
    let dual_bound = -(b.dot(&it.y)) * cscale + offset;
    let objective = problem.value(&x);
    Ok(SdpSolution {
        matrix: SdrMatrix::from_solver(x),
        objective,
        dual_bound: dual_bound.max(objective),
        status,
        iterations,
        gap_trace,
    })
}

/// Congruence `D X D` with diagonal `D` that restores the diagonal
/// constraints exactly; it keeps `X` positive semidefinite.
fn clean_diagonal(x: CMatrix<f64>, mode: ReflectionMode) -> CMatrix<f64> {
    let n = x.nrows();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = x[(i, i)].re.max(0.0);
            let fixed = i == n - 1 || mode == ReflectionMode::Conventional;
            if d <= 0.0 {
                1.0
            } else if fixed || d > 1.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut out = DMatrix::from_fn(n, n, |i, j| x[(i, j)] * (scale[i] * scale[j]));
    for i in 0..n {
        let fixed = i == n - 1 || mode == ReflectionMode::Conventional;
        let d = out[(i, i)].re;
        out[(i, i)] = C64::new(if fixed { 1.0 } else { d.clamp(0.0, 1.0) }, 0.0);
    }
    out
}

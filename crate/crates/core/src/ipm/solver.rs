//! Primal-dual interior-point method with Mehrotra predictor-corrector
//! steps, fraction-to-boundary rule and inertia-correcting regularization.
//!
//! Inequality rows get slack variables so that all inequalities become
//! bounds on `(x, s)`. The Newton system is reduced to
//!
//! ```text
//! [ H + Sigma_x + dw I    J^T ] [dx]   [-r_x]
//! [ J                     -D  ] [dy] = [-r_c]
//! ```
//!
//! and factored with the sparse `L D L^T` kernel.

use serde::Serialize;

use crate::ipm::problem::NlpProblem;
use crate::linalg::{Ordering, SymbolicLdl};
use crate::scalar::{norm_inf, Scalar};

#[derive(Debug, Clone)]
pub struct IpmOptions<T> {
    /// Tolerance on scaled stationarity, feasibility and complementarity.
    pub tol: T,
    pub max_iter: usize,
    pub fraction_to_boundary: T,
    /// Relative distance the starting point is pushed inside its bounds.
    pub bound_push: T,
    /// Use the Mehrotra predictor-corrector; otherwise a fixed centering.
    pub mehrotra: bool,
    /// Backtracking on barrier objective and infeasibility.
    pub line_search: bool,
    /// Static diagonal regularization; removed again by iterative refinement.
    pub static_reg: T,
    pub refinement_steps: usize,
    /// Starting value of bound multipliers.
    pub initial_multiplier: T,
}

impl<T: Scalar> Default for IpmOptions<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        let reg = (eps.sqrt() * T::of(1e-1)).max(T::of(1e-10));
        Self {
            tol: T::default_tol(),
            max_iter: 200,
            fraction_to_boundary: T::of(0.995),
            bound_push: T::of(1e-2),
            mehrotra: true,
            line_search: false,
            static_reg: reg,
            refinement_steps: 3,
            initial_multiplier: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IpmStatus {
    Converged,
    MaxIterations,
    NumericalFailure,
}

/// Final optimality residuals: stationarity and complementarity are scaled
/// by the multiplier magnitudes, feasibility is absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T> {
    pub stationarity: T,
    pub feasibility: T,
    pub complementarity: T,
}

#[derive(Debug, Clone)]
pub struct NlpSolution<T> {
    pub status: IpmStatus,
    pub x: Vec<T>,
    pub objective: T,
    /// Row multipliers: `grad f + J^T lambda - z_lower + z_upper = 0`.
    pub lambda: Vec<T>,
    pub z_lower: Vec<T>,
    pub z_upper: Vec<T>,
    pub iterations: usize,
    pub residuals: KktResiduals<T>,
    /// Barrier target per iteration.
    pub barrier_history: Vec<T>,
    pub inertia_corrections: usize,
}

impl<T: Scalar> NlpSolution<T> {
    pub fn converged(&self) -> bool {
        self.status == IpmStatus::Converged
    }
}

/// Starting primal and dual values.
#[derive(Debug, Clone)]
pub struct WarmStart<T> {
    pub x: Vec<T>,
    pub lambda: Vec<T>,
    pub z_lower: Vec<T>,
    pub z_upper: Vec<T>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Eq,
    Ineq(usize),
    Free,
}

struct Layout<T> {
    n: usize,
    m: usize,
    kinds: Vec<RowKind>,
    ineq_rows: Vec<usize>,
    fixed: Vec<bool>,
    wl: Vec<T>,
    wu: Vec<T>,
    cl: Vec<T>,
    hs: Vec<(usize, usize)>,
    js: Vec<(usize, usize)>,
}

impl<T: Scalar> Layout<T> {
    fn nw(&self) -> usize {
        self.n + self.ineq_rows.len()
    }
    fn has_l(&self, k: usize) -> bool {
        self.wl[k].is_finite() && !(k < self.n && self.fixed[k])
    }
    fn has_u(&self, k: usize) -> bool {
        self.wu[k].is_finite() && !(k < self.n && self.fixed[k])
    }
}

/// Solves `p` from its own starting point.
pub fn solve<T: Scalar, P: NlpProblem<T>>(p: &P, opts: &IpmOptions<T>) -> NlpSolution<T> {
    solve_warm(p, opts, None)
}

/// Solves `p`, optionally starting from a previous primal-dual point.
pub fn solve_warm<T: Scalar, P: NlpProblem<T>>(
    p: &P,
    opts: &IpmOptions<T>,
    warm: Option<&WarmStart<T>>,
) -> NlpSolution<T> {
    let n = p.num_vars();
    let m = p.num_cons();
    let (xl, xu) = p.var_bounds();
    let (cl, cu) = p.con_bounds();
    let mut kinds = Vec::with_capacity(m);
    let mut ineq_rows = Vec::new();
    let mut wl = xl.clone();
    let mut wu = xu.clone();
    for i in 0..m {
        if cl[i].is_finite() && cu[i].is_finite() && cl[i] >= cu[i] {
            kinds.push(RowKind::Eq);
        } else if !cl[i].is_finite() && !cu[i].is_finite() {
            kinds.push(RowKind::Free);
        } else {
            kinds.push(RowKind::Ineq(n + ineq_rows.len()));
            ineq_rows.push(i);
            wl.push(cl[i]);
            wu.push(cu[i]);
        }
    }
    let fixed: Vec<bool> = (0..n).map(|j| xl[j].is_finite() && xu[j].is_finite() && xu[j] <= xl[j]).collect();
    let lay = Layout { n, m, kinds, ineq_rows, fixed, wl, wu, cl, hs: p.hessian_structure(), js: p.jacobian_structure() };
    let mut st = State::init(p, opts, &lay, warm);
    st.run(p, opts, &lay)
}

struct State<T> {
    w: Vec<T>,
    y: Vec<T>,
    zl: Vec<T>,
    zu: Vec<T>,
    symbolic: Option<SymbolicLdl>,
    last_dw: T,
    barrier: Vec<T>,
    corrections: usize,
    nu: T,
}

struct Eval<T> {
    f: T,
    g: Vec<T>,
    c: Vec<T>,
    jv: Vec<T>,
    hv: Vec<T>,
}

struct Direction<T> {
    dw: Vec<T>,
    dy: Vec<T>,
    dzl: Vec<T>,
    dzu: Vec<T>,
}

impl<T: Scalar> State<T> {
    fn init<P: NlpProblem<T>>(p: &P, opts: &IpmOptions<T>, lay: &Layout<T>, warm: Option<&WarmStart<T>>) -> Self {
        let n = lay.n;
        let nw = lay.nw();
        let mut x = match warm {
            Some(ws) => ws.x.clone(),
            None => p.initial_point(),
        };
        for j in 0..n {
            if lay.fixed[j] {
                x[j] = lay.wl[j];
            } else {
                x[j] = push_inside(x[j], lay.wl[j], lay.wu[j], opts.bound_push);
            }
        }
        let mut c = vec![T::zero(); lay.m];
        p.constraints(&x, &mut c);
        let mut w = x;
        for &i in &lay.ineq_rows {
            let k = w.len();
            w.push(push_inside(c[i], lay.wl[k], lay.wu[k], opts.bound_push));
        }
        let z0 = opts.initial_multiplier;
        let mut zl = vec![T::zero(); nw];
        let mut zu = vec![T::zero(); nw];
        let mut y = vec![T::zero(); lay.m];
        for k in 0..nw {
            if lay.has_l(k) {
                zl[k] = z0;
            }
            if lay.has_u(k) {
                zu[k] = z0;
            }
        }
        // Row multipliers consistent with the slack bound multipliers.
        for (t, &i) in lay.ineq_rows.iter().enumerate() {
            y[i] = zu[n + t] - zl[n + t];
        }
        if let Some(ws) = warm {
            y.copy_from_slice(&ws.lambda);
            for i in 0..lay.m {
                if lay.kinds[i] == RowKind::Free {
                    y[i] = T::zero();
                }
            }
            let floor = z0 * T::of(1e-2);
            for j in 0..n {
                if lay.has_l(j) {
                    zl[j] = ws.z_lower[j].max(floor);
                }
                if lay.has_u(j) {
                    zu[j] = ws.z_upper[j].max(floor);
                }
            }
            for (t, &i) in lay.ineq_rows.iter().enumerate() {
                let k = n + t;
                if lay.has_l(k) {
                    zl[k] = (-y[i]).max(floor);
                }
                if lay.has_u(k) {
                    zu[k] = y[i].max(floor);
                }
            }
        }
        Self { w, y, zl, zu, symbolic: None, last_dw: T::zero(), barrier: Vec::new(), corrections: 0, nu: T::one() }
    }

    fn evaluate<P: NlpProblem<T>>(&self, p: &P, lay: &Layout<T>) -> Eval<T> {
        let x = &self.w[..lay.n];
        let mut g = vec![T::zero(); lay.n];
        let mut c = vec![T::zero(); lay.m];
        let mut jv = vec![T::zero(); lay.js.len()];
        let mut hv = vec![T::zero(); lay.hs.len()];
        p.gradient(x, &mut g);
        p.constraints(x, &mut c);
        p.jacobian_values(x, &mut jv);
        p.hessian_values(x, T::one(), &self.y, &mut hv);
        Eval { f: p.objective(x), g, c, jv, hv }
    }

    /// `grad f + J^T y` over x.
    fn lagrangian_gradient(&self, lay: &Layout<T>, ev: &Eval<T>) -> Vec<T> {
        let mut r = ev.g.clone();
        for (&(row, col), &v) in lay.js.iter().zip(&ev.jv) {
            if lay.kinds[row] != RowKind::Free {
                r[col] += v * self.y[row];
            }
        }
        r
    }

    fn primal_residual(&self, lay: &Layout<T>, c: &[T]) -> Vec<T> {
        (0..lay.m)
            .map(|i| match lay.kinds[i] {
                RowKind::Eq => c[i] - lay.cl[i],
                RowKind::Ineq(k) => c[i] - self.w[k],
                RowKind::Free => T::zero(),
            })
            .collect()
    }

    fn complementarity(&self, lay: &Layout<T>) -> (T, T, usize) {
        let mut sum = T::zero();
        let mut max = T::zero();
        let mut cnt = 0;
        for k in 0..lay.nw() {
            if lay.has_l(k) {
                let v = (self.w[k] - lay.wl[k]) * self.zl[k];
                sum += v;
                max = max.max(v);
                cnt += 1;
            }
            if lay.has_u(k) {
                let v = (lay.wu[k] - self.w[k]) * self.zu[k];
                sum += v;
                max = max.max(v);
                cnt += 1;
            }
        }
        (sum, max, cnt)
    }

    fn residuals(&self, lay: &Layout<T>, ev: &Eval<T>) -> (KktResiduals<T>, T) {
        let n = lay.n;
        let lg = self.lagrangian_gradient(lay, ev);
        let mut stat = T::zero();
        for j in 0..n {
            if !lay.fixed[j] {
                stat = stat.max((lg[j] - self.zl[j] + self.zu[j]).abs());
            }
        }
        for (t, &i) in lay.ineq_rows.iter().enumerate() {
            let k = n + t;
            stat = stat.max((-self.y[i] - self.zl[k] + self.zu[k]).abs());
        }
        let feas = norm_inf(&self.primal_residual(lay, &ev.c));
        let (csum, cmax, cnt) = self.complementarity(lay);
        let smax = T::of(100.0);
        let zsum: T = self.zl.iter().chain(&self.zu).map(|v| v.abs()).sum();
        let ysum: T = self.y.iter().map(|v| v.abs()).sum();
        let denom_d = T::from_usize(lay.m + cnt).unwrap().max(T::one());
        let denom_c = T::from_usize(cnt).unwrap().max(T::one());
        let sd = ((ysum + zsum) / denom_d).max(smax) / smax;
        let sc = (zsum / denom_c).max(smax) / smax;
        let mu = if cnt > 0 { csum / T::from_usize(cnt).unwrap() } else { T::zero() };
        (KktResiduals { stationarity: stat / sd, feasibility: feas, complementarity: cmax / sc }, mu)
    }

    fn run<P: NlpProblem<T>>(&mut self, p: &P, opts: &IpmOptions<T>, lay: &Layout<T>) -> NlpSolution<T> {
        let n = lay.n;
        let nw = lay.nw();
        let mut status = IpmStatus::MaxIterations;
        let mut iterations = 0;
        let mut mu_target = T::infinity();
        let mut ev = self.evaluate(p, lay);
        let (mut res, mut mu) = self.residuals(lay, &ev);
        for iter in 0..=opts.max_iter {
            iterations = iter;
            if !all_finite(&self.w) || !all_finite(&self.y) || !ev.f.is_finite() {
                status = IpmStatus::NumericalFailure;
                break;
            }
            if res.stationarity <= opts.tol && res.feasibility <= opts.tol && res.complementarity <= opts.tol {
                status = IpmStatus::Converged;
                break;
            }
            if iter == opts.max_iter {
                break;
            }
            // Barrier Hessian terms.
            let mut sigma = vec![T::zero(); nw];
            for k in 0..nw {
                if lay.has_l(k) {
                    sigma[k] += self.zl[k] / (self.w[k] - lay.wl[k]);
                }
                if lay.has_u(k) {
                    sigma[k] += self.zu[k] / (lay.wu[k] - self.w[k]);
                }
            }
            let Some(kkt) = self.factorize(lay, &ev, &sigma, mu, opts) else {
                status = IpmStatus::NumericalFailure;
                break;
            };
            let lg = self.lagrangian_gradient(lay, &ev);
            let zero = vec![T::zero(); nw];
            // Do not let the barrier outrun the infeasibilities; a collapsed
            // barrier with a large dual residual stalls.
            let mu_floor = T::of(0.1) * res.stationarity.max(res.feasibility);
            let (tl, tu) = if opts.mehrotra {
                let aff = self.direction(lay, &ev, &kkt, &sigma, &lg, &zero, &zero, opts);
                let ap = self.max_primal_step(lay, &aff.dw, T::one());
                let ad = self.max_dual_step(lay, &aff.dzl, &aff.dzu, T::one());
                let mut csum = T::zero();
                let mut cnt = 0usize;
                for k in 0..nw {
                    if lay.has_l(k) {
                        csum += (self.w[k] + ap * aff.dw[k] - lay.wl[k]) * (self.zl[k] + ad * aff.dzl[k]);
                        cnt += 1;
                    }
                    if lay.has_u(k) {
                        csum += (lay.wu[k] - self.w[k] - ap * aff.dw[k]) * (self.zu[k] + ad * aff.dzu[k]);
                        cnt += 1;
                    }
                }
                let mu_aff = if cnt > 0 { csum / T::from_usize(cnt).unwrap() } else { T::zero() };
                let ratio = if mu > T::zero() { (mu_aff / mu).max(T::zero()).min(T::one()) } else { T::zero() };
                let sigma_c = ratio * ratio * ratio;
                mu_target = (sigma_c * mu).max(mu_floor).min(mu_target).max(opts.tol * T::of(0.1));
                let mut tl = vec![T::zero(); nw];
                let mut tu = vec![T::zero(); nw];
                for k in 0..nw {
                    if lay.has_l(k) {
                        tl[k] = mu_target - aff.dw[k] * aff.dzl[k];
                    }
                    if lay.has_u(k) {
                        tu[k] = mu_target + aff.dw[k] * aff.dzu[k];
                    }
                }
                (tl, tu)
            } else {
                mu_target = (T::of(0.1) * mu).max(mu_floor).min(mu_target).max(opts.tol * T::of(0.1));
                (vec![mu_target; nw], vec![mu_target; nw])
            };
            self.barrier.push(mu_target);
            let d = self.direction(lay, &ev, &kkt, &sigma, &lg, &tl, &tu, opts);
            let tau = opts.fraction_to_boundary;
            let mut ap = self.max_primal_step(lay, &d.dw, tau);
            let ad = self.max_dual_step(lay, &d.dzl, &d.dzu, tau);
            if opts.line_search {
                ap = self.backtrack(p, lay, &d, ap, mu_target);
            }
            for k in 0..nw {
                self.w[k] += ap * d.dw[k];
                self.zl[k] += ad * d.dzl[k];
                self.zu[k] += ad * d.dzu[k];
            }
            for i in 0..lay.m {
                self.y[i] += ad * d.dy[i];
            }
            // Keep bound multipliers within a band around the central path.
            let kappa = T::of(1e10);
            for k in 0..nw {
                if lay.has_l(k) {
                    let s = self.w[k] - lay.wl[k];
                    self.zl[k] = self.zl[k].max(mu_target / (kappa * s)).min(kappa * mu_target / s);
                }
                if lay.has_u(k) {
                    let s = lay.wu[k] - self.w[k];
                    self.zu[k] = self.zu[k].max(mu_target / (kappa * s)).min(kappa * mu_target / s);
                }
            }
            ev = self.evaluate(p, lay);
            let r = self.residuals(lay, &ev);
            res = r.0;
            mu = r.1;
            log::trace!(
                "ipm it {iter}: f={:.10e} stat={:.2e} feas={:.2e} comp={:.2e} mu={:.2e} ap={:.3} ad={:.3}",
                ev.f.as_f64(),
                res.stationarity.as_f64(),
                res.feasibility.as_f64(),
                res.complementarity.as_f64(),
                mu_target.as_f64(),
                ap.as_f64(),
                ad.as_f64()
            );
        }
        if status == IpmStatus::Converged {
            self.barrier.push(mu.min(mu_target));
        }
        let x = self.w[..n].to_vec();
        let mut z_lower = self.zl[..n].to_vec();
        let mut z_upper = self.zu[..n].to_vec();
        // Fixed variables: the bound multiplier absorbs the reduced gradient.
        let lg = self.lagrangian_gradient(lay, &ev);
        for j in 0..n {
            if lay.fixed[j] {
                z_lower[j] = lg[j].max(T::zero());
                z_upper[j] = (-lg[j]).max(T::zero());
            }
        }
        NlpSolution {
            status,
            objective: ev.f,
            x,
            lambda: self.y.clone(),
            z_lower,
            z_upper,
            iterations,
            residuals: res,
            barrier_history: std::mem::take(&mut self.barrier),
            inertia_corrections: self.corrections,
        }
    }

    fn kkt_entries(lay: &Layout<T>) -> Vec<(usize, usize)> {
        let mut e = Vec::with_capacity(lay.hs.len() + lay.n + lay.js.len() + lay.m);
        e.extend(lay.hs.iter().copied());
        e.extend((0..lay.n).map(|j| (j, j)));
        e.extend(lay.js.iter().map(|&(r, c)| (lay.n + r, c)));
        e.extend((0..lay.m).map(|i| (lay.n + i, lay.n + i)));
        e
    }

    /// Assembles KKT values; `reg` is added to the primal diagonal and
    /// subtracted on the dual diagonal on top of the corrections `dw`, `dc`.
    #[allow(clippy::too_many_arguments)]
    fn kkt_values(&self, lay: &Layout<T>, ev: &Eval<T>, sigma: &[T], dw: T, dc: T, reg: T) -> Vec<T> {
        let n = lay.n;
        let mut v = Vec::with_capacity(lay.hs.len() + n + lay.js.len() + lay.m);
        for (&(r, c), &h) in lay.hs.iter().zip(&ev.hv) {
            v.push(if lay.fixed[r] || lay.fixed[c] { T::zero() } else { h });
        }
        for j in 0..n {
            v.push(if lay.fixed[j] { T::one() } else { sigma[j] + dw + reg });
        }
        for (&(r, c), &a) in lay.js.iter().zip(&ev.jv) {
            v.push(if lay.fixed[c] || lay.kinds[r] == RowKind::Free { T::zero() } else { a });
        }
        for i in 0..lay.m {
            v.push(match lay.kinds[i] {
                RowKind::Eq => -(dc + reg),
                RowKind::Ineq(k) => -(T::one() / (sigma[k] + dw) + dc + reg),
                RowKind::Free => -T::one(),
            });
        }
        v
    }

    fn factorize(&mut self, lay: &Layout<T>, ev: &Eval<T>, sigma: &[T], mu: T, opts: &IpmOptions<T>) -> Option<Kkt<T>> {
        let entries = Self::kkt_entries(lay);
        if self.symbolic.is_none() {
            self.symbolic = SymbolicLdl::analyze(lay.n + lay.m, &entries, Ordering::Amd).ok();
        }
        let sym = self.symbolic.as_ref()?;
        let mut dw = T::zero();
        let mut dc = T::zero();
        loop {
            let vals = self.kkt_values(lay, ev, sigma, dw, dc, opts.static_reg);
            match sym.factor(&vals) {
                Ok(f) if f.inertia().0 == lay.n => {
                    if dw > T::zero() {
                        self.last_dw = dw;
                    }
                    let unreg = self.kkt_values(lay, ev, sigma, dw, dc, T::zero());
                    return Some(Kkt { factor: f, entries, values: unreg, dw });
                }
                Ok(_) => {}
                Err(_) => {
                    dc = T::of(1e-8) * mu.max(T::of(1e-16)).powf(T::of(0.25));
                }
            }
            self.corrections += 1;
            if dw == T::zero() {
                dw = if self.last_dw == T::zero() { T::of(1e-4) } else { (self.last_dw / T::of(3.0)).max(T::of(1e-20)) };
            } else {
                dw *= if self.last_dw == T::zero() { T::of(100.0) } else { T::of(8.0) };
            }
            if dw > T::of(1e40) {
                return None;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        lay: &Layout<T>,
        ev: &Eval<T>,
        kkt: &Kkt<T>,
        sigma: &[T],
        lg: &[T],
        tl: &[T],
        tu: &[T],
        opts: &IpmOptions<T>,
    ) -> Direction<T> {
        let n = lay.n;
        let nw = lay.nw();
        let dw_reg = kkt.dw;
        let mut rhs = vec![T::zero(); n + lay.m];
        let mut rs = vec![T::zero(); nw];
        for j in 0..n {
            if lay.fixed[j] {
                continue;
            }
            let mut r = lg[j];
            if lay.has_l(j) {
                r -= tl[j] / (self.w[j] - lay.wl[j]);
            }
            if lay.has_u(j) {
                r += tu[j] / (lay.wu[j] - self.w[j]);
            }
            rhs[j] = -r;
        }
        for i in 0..lay.m {
            rhs[n + i] = match lay.kinds[i] {
                RowKind::Eq => -(ev.c[i] - lay.cl[i]),
                RowKind::Ineq(k) => {
                    let mut r = -self.y[i];
                    if lay.has_l(k) {
                        r -= tl[k] / (self.w[k] - lay.wl[k]);
                    }
                    if lay.has_u(k) {
                        r += tu[k] / (lay.wu[k] - self.w[k]);
                    }
                    rs[k] = r;
                    -((ev.c[i] - self.w[k]) + r / (sigma[k] + dw_reg))
                }
                RowKind::Free => T::zero(),
            };
        }
        let sol = kkt.solve(&rhs, opts.refinement_steps);
        let mut dw = vec![T::zero(); nw];
        dw[..n].copy_from_slice(&sol[..n]);
        let dy = sol[n..].to_vec();
        for i in 0..lay.m {
            if let RowKind::Ineq(k) = lay.kinds[i] {
                dw[k] = (dy[i] - rs[k]) / (sigma[k] + dw_reg);
            }
        }
        let mut dzl = vec![T::zero(); nw];
        let mut dzu = vec![T::zero(); nw];
        for k in 0..nw {
            if lay.has_l(k) {
                let s = self.w[k] - lay.wl[k];
                dzl[k] = tl[k] / s - self.zl[k] - self.zl[k] / s * dw[k];
            }
            if lay.has_u(k) {
                let s = lay.wu[k] - self.w[k];
                dzu[k] = tu[k] / s - self.zu[k] + self.zu[k] / s * dw[k];
            }
        }
        Direction { dw, dy, dzl, dzu }
    }

    fn max_primal_step(&self, lay: &Layout<T>, dw: &[T], tau: T) -> T {
        let mut a = T::one();
        for k in 0..lay.nw() {
            if lay.has_l(k) && dw[k] < T::zero() {
                a = a.min(-tau * (self.w[k] - lay.wl[k]) / dw[k]);
            }
            if lay.has_u(k) && dw[k] > T::zero() {
                a = a.min(tau * (lay.wu[k] - self.w[k]) / dw[k]);
            }
        }
        a
    }

    fn max_dual_step(&self, lay: &Layout<T>, dzl: &[T], dzu: &[T], tau: T) -> T {
        let mut a = T::one();
        for k in 0..lay.nw() {
            if lay.has_l(k) && dzl[k] < T::zero() {
                a = a.min(-tau * self.zl[k] / dzl[k]);
            }
            if lay.has_u(k) && dzu[k] < T::zero() {
                a = a.min(-tau * self.zu[k] / dzu[k]);
            }
        }
        a
    }

    fn merit<P: NlpProblem<T>>(&self, p: &P, lay: &Layout<T>, w: &[T], mu: T) -> (T, T) {
        let x = &w[..lay.n];
        let mut c = vec![T::zero(); lay.m];
        p.constraints(x, &mut c);
        let mut theta = T::zero();
        for i in 0..lay.m {
            theta += match lay.kinds[i] {
                RowKind::Eq => (c[i] - lay.cl[i]).abs(),
                RowKind::Ineq(k) => (c[i] - w[k]).abs(),
                RowKind::Free => T::zero(),
            };
        }
        let mut phi = p.objective(x);
        for k in 0..lay.nw() {
            if lay.has_l(k) {
                phi -= mu * (w[k] - lay.wl[k]).ln();
            }
            if lay.has_u(k) {
                phi -= mu * (lay.wu[k] - w[k]).ln();
            }
        }
        (phi, theta)
    }

    /// Backtracking on the exact penalty `φ + ν θ` with `ν` above the row multipliers.
    fn backtrack<P: NlpProblem<T>>(&mut self, p: &P, lay: &Layout<T>, d: &Direction<T>, amax: T, mu: T) -> T {
        let ymax = self.y.iter().zip(&d.dy).fold(T::zero(), |m, (y, dy)| m.max((*y + *dy).abs()));
        self.nu = self.nu.max(T::of(1.1) * ymax).max(T::one());
        let nu = self.nu;
        let (phi0, theta0) = self.merit(p, lay, &self.w, mu);
        let m0 = phi0 + nu * theta0;
        let slack = T::of(1e-12) * (T::one() + m0.abs());
        let mut a = amax;
        for _ in 0..30 {
            let trial: Vec<T> = self.w.iter().zip(&d.dw).map(|(w, dw)| *w + a * *dw).collect();
            let (phi, theta) = self.merit(p, lay, &trial, mu);
            let m = phi + nu * theta;
            if m.is_finite() && m <= m0 - T::of(1e-6) * a * nu * theta0 + slack {
                return a;
            }
            a *= T::of(0.5);
        }
        a
    }
}

struct Kkt<T> {
    factor: crate::linalg::LdlFactor<T>,
    entries: Vec<(usize, usize)>,
    values: Vec<T>,
    dw: T,
}

impl<T: Scalar> Kkt<T> {
    fn solve(&self, rhs: &[T], refinement: usize) -> Vec<T> {
        let mut x = self.factor.solve(rhs);
        for _ in 0..refinement {
            let ax = sym_matvec(rhs.len(), &self.entries, &self.values, &x);
            let r: Vec<T> = rhs.iter().zip(&ax).map(|(b, a)| *b - *a).collect();
            let rn = norm_inf(&r);
            if rn <= T::epsilon() * norm_inf(rhs).max(T::one()) {
                break;
            }
            let dx = self.factor.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += *di;
            }
        }
        x
    }
}

fn sym_matvec<T: Scalar>(n: usize, entries: &[(usize, usize)], values: &[T], x: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); n];
    for (&(r, c), &v) in entries.iter().zip(values) {
        y[r] += v * x[c];
        if r != c {
            y[c] += v * x[r];
        }
    }
    y
}

fn push_inside<T: Scalar>(x: T, l: T, u: T, kappa: T) -> T {
    let mut v = if x.is_finite() { x } else { T::zero() };
    match (l.is_finite(), u.is_finite()) {
        (true, true) => {
            let pl = (kappa * l.abs().max(T::one())).min(kappa * (u - l));
            let pu = (kappa * u.abs().max(T::one())).min(kappa * (u - l));
            v = v.max(l + pl).min(u - pu);
        }
        (true, false) => v = v.max(l + kappa * l.abs().max(T::one())),
        (false, true) => v = v.min(u - kappa * u.abs().max(T::one())),
        (false, false) => {}
    }
    v
}

fn all_finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

//! Primal-dual infeasible interior-point method (HKM direction, Mehrotra
//! predictor-corrector) specialised to the structured constraint form.

use nalgebra::{Cholesky, DVector, Dyn, SymmetricEigen};

use super::{Backend, BackendResult, Lmi, LmiProgram, Sense, SolveOptions};
use crate::matcore::Mat;

/// Fraction of `eps` by which non-strict blocks are relaxed in phase 1.
const PSD_RELAX: f64 = 0.05;

/// Iterations without a 10% drop of `max(gap, pinf, dinf)` before giving up.
const STAGNATION_ITERS: usize = 40;

/// Built-in SDP backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct InteriorPoint;

struct IBlock {
    n: usize,
    outer: Option<Mat>,
    /// `S = c + Oᵀ(Σ yᵢ Eᵢ)O + tau·t·I`, entries already signed.
    c: Mat,
    vars: Vec<usize>,
    starts: Vec<usize>,
    ents: Vec<(usize, usize, f64)>,
    tau: f64,
}

impl IBlock {
    fn from_lmi(l: &Lmi, phase1: bool, eps: f64) -> IBlock {
        let n = l.dim();
        let sign = match l.sense {
            Sense::NegDef => -1.0,
            Sense::PosDef | Sense::Psd => 1.0,
        };
        let mut c = l.constant_part() * sign;
        let mut tau = 0.0;
        if l.sense.is_strict() {
            if phase1 {
                tau = -1.0;
            } else {
                for i in 0..n {
                    c[(i, i)] -= eps;
                }
            }
        } else if phase1 {
            for i in 0..n {
                c[(i, i)] += PSD_RELAX * eps;
            }
        }
        let mut vars = Vec::new();
        let mut starts = Vec::new();
        let mut ents = Vec::with_capacity(l.entries().len());
        for e in l.entries() {
            if vars.last() != Some(&e.var) {
                vars.push(e.var);
                starts.push(ents.len());
            }
            ents.push((e.a, e.b, sign * e.c));
        }
        starts.push(ents.len());
        IBlock { n, outer: l.outer().cloned(), c, vars, starts, ents, tau }
    }

    fn ents(&self, i: usize) -> &[(usize, usize, f64)] {
        &self.ents[self.starts[i]..self.starts[i + 1]]
    }

    fn mid(&self) -> usize {
        self.outer.as_ref().map_or(self.n, |o| o.nrows())
    }

    /// `O W Oᵀ`.
    fn to_mid(&self, w: &Mat) -> Mat {
        match &self.outer {
            Some(o) => o * w * o.transpose(),
            None => w.clone(),
        }
    }

    /// Linear part `A(dy)` in full coordinates.
    fn apply(&self, dy: &DVector<f64>, t: Option<usize>) -> Mat {
        let nm = self.mid();
        let mut m = Mat::zeros(nm, nm);
        for (i, &v) in self.vars.iter().enumerate() {
            let yv = dy[v];
            if yv == 0.0 {
                continue;
            }
            for &(a, b, c) in self.ents(i) {
                m[(a, b)] += c * yv;
                if a != b {
                    m[(b, a)] += c * yv;
                } else {
                    m[(a, a)] += c * yv;
                }
            }
        }
        let mut f = match &self.outer {
            Some(o) => o.transpose() * m * o,
            None => m,
        };
        if let Some(ti) = t {
            if self.tau != 0.0 {
                for i in 0..self.n {
                    f[(i, i)] += self.tau * dy[ti];
                }
            }
        }
        f
    }

    /// `out += A*(W)` for symmetric `W`.
    fn adjoint(&self, w: &Mat, t: Option<usize>, out: &mut DVector<f64>) {
        let wt = self.to_mid(w);
        for (i, &v) in self.vars.iter().enumerate() {
            let mut s = 0.0;
            for &(a, b, c) in self.ents(i) {
                s += 2.0 * c * wt[(a, b)];
            }
            out[v] += s;
        }
        if let Some(ti) = t {
            if self.tau != 0.0 {
                out[ti] += self.tau * w.trace();
            }
        }
    }

    /// `H[i,k] += tr(Fᵢ X F_k S⁻¹)` over the block's variables (upper triangle).
    fn schur(&self, x: &Mat, sinv: &Mat, t: Option<usize>, h: &mut Mat) {
        let xt = self.to_mid(x);
        let st = self.to_mid(sinv);
        let nm = xt.nrows();
        let xs = xt.as_slice();
        let ss = st.as_slice();
        for ii in 0..self.vars.len() {
            let ei = self.ents(ii);
            let vi = self.vars[ii];
            for kk in ii..self.vars.len() {
                let ek = self.ents(kk);
                let vk = self.vars[kk];
                let mut acc = 0.0;
                for &(a, b, al) in ei {
                    for &(c, d, be) in ek {
                        acc += al
                            * be
                            * (xs[b + c * nm] * ss[d + a * nm]
                                + xs[b + d * nm] * ss[c + a * nm]
                                + xs[a + c * nm] * ss[d + b * nm]
                                + xs[a + d * nm] * ss[c + b * nm]);
                    }
                }
                h[(vi, vk)] += acc;
            }
        }
        if let Some(ti) = t {
            if self.tau != 0.0 {
                let w = sinv * x;
                let w = (&w + w.transpose()) * 0.5;
                let mut col = DVector::zeros(h.nrows());
                let wt = self.to_mid(&w);
                for (i, &v) in self.vars.iter().enumerate() {
                    let mut s = 0.0;
                    for &(a, b, c) in self.ents(i) {
                        s += 2.0 * c * wt[(a, b)];
                    }
                    col[v] = s * self.tau;
                }
                for &v in &self.vars {
                    h[(v.min(ti), v.max(ti))] += col[v];
                }
                h[(ti, ti)] += self.tau * self.tau * w.trace();
            }
        }
    }

    /// Squared Frobenius-norm estimate of every variable's coefficient.
    fn coef_norms(&self, out: &mut [f64]) {
        let rn: Vec<f64> = match &self.outer {
            Some(o) => (0..o.nrows()).map(|i| o.row(i).norm()).collect(),
            None => vec![1.0; self.n],
        };
        for (i, &v) in self.vars.iter().enumerate() {
            for &(a, b, c) in self.ents(i) {
                let k = if a == b { 4.0 } else { 2.0 };
                out[v] += k * (c * rn[a] * rn[b]).powi(2);
            }
        }
    }
}

/// `s = h + g·y[var] ≥ 0`.
#[derive(Clone, Copy)]
struct LpRow {
    var: usize,
    g: f64,
    h: f64,
}

struct Internal {
    m: usize,
    t: Option<usize>,
    c: DVector<f64>,
    blocks: Vec<IBlock>,
    lp: Vec<LpRow>,
    /// Internal unknowns are `ŷ` with `y = scale ∘ ŷ`.
    scale: DVector<f64>,
    /// Orthonormal basis of directions that leave every block unchanged.
    null: Option<Mat>,
}

struct Outcome {
    y: DVector<f64>,
    converged: bool,
    iterations: usize,
    message: String,
    /// Relative dual residual and dual objective at the last iterate.
    dinf: f64,
    dobj: f64,
}

fn sym(m: Mat) -> Mat {
    (&m + m.transpose()) * 0.5
}

fn chol(m: &Mat) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
}

/// Largest step `α` keeping `S + α·dS ⪰ 0`, given the Cholesky factor of `S`.
fn max_step(ch: &Cholesky<f64, Dyn>, ds: &Mat) -> f64 {
    let l = ch.l();
    let Some(a) = l.solve_lower_triangular(ds) else { return 0.0 };
    let Some(b) = l.solve_lower_triangular(&a.transpose()) else { return 0.0 };
    let b = sym(b);
    let lam = SymmetricEigen::new(b).eigenvalues.min();
    if lam < 0.0 {
        -1.0 / lam
    } else {
        f64::INFINITY
    }
}

fn lp_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut a = f64::INFINITY;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            a = a.min(-v[i] / dv[i]);
        }
    }
    a
}

impl Internal {
    fn build(p: &LmiProgram, opts: &SolveOptions, phase1: bool, eps: f64) -> Internal {
        let n0 = p.n_scalars();
        let t = if phase1 { Some(n0) } else { None };
        let m = n0 + usize::from(phase1);
        let mut c = DVector::zeros(m);
        if let Some(ti) = t {
            c[ti] = -1.0;
        } else {
            for &(v, w) in &p.objective {
                c[v] += w;
            }
        }
        let blocks = p.lmis.iter().map(|l| IBlock::from_lmi(l, phase1, eps)).collect();
        let r = opts.bound;
        let mut lp = Vec::with_capacity(2 * m + p.lower.len());
        for v in 0..n0 {
            lp.push(LpRow { var: v, g: -1.0 / r, h: 1.0 });
            lp.push(LpRow { var: v, g: 1.0 / r, h: 1.0 });
        }
        for &(v, lb) in &p.lower {
            lp.push(LpRow { var: v, g: 1.0, h: -lb });
        }
        if let Some(ti) = t {
            lp.push(LpRow { var: ti, g: -1.0, h: 1.0 });
            lp.push(LpRow { var: ti, g: 1.0 / r, h: 1.0 });
        }
        let mut prob = Internal { m, t, c, blocks, lp, scale: DVector::from_element(m, 1.0), null: None };
        prob.equilibrate();
        prob.null = prob.block_nullspace();
        prob
    }

    /// Null space of `y ↦ (A_j(y))_j`, from the Gram matrix of the coefficients.
    fn block_nullspace(&self) -> Option<Mat> {
        let mut k = Mat::zeros(self.m, self.m);
        for b in &self.blocks {
            let id = Mat::identity(b.n, b.n);
            b.schur(&id, &id, self.t, &mut k);
        }
        for i in 0..self.m {
            for j in 0..i {
                k[(i, j)] = k[(j, i)];
            }
        }
        let eig = SymmetricEigen::new(k);
        let top = eig.eigenvalues.amax();
        let idx: Vec<usize> = (0..self.m).filter(|&i| eig.eigenvalues[i] <= 1e-11 * top).collect();
        if idx.is_empty() {
            return None;
        }
        Some(Mat::from_fn(self.m, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]))
    }

    /// Rescale every unknown so that its coefficient has unit norm.
    fn equilibrate(&mut self) {
        let mut norms = vec![0.0; self.m];
        for b in &self.blocks {
            b.coef_norms(&mut norms);
        }
        let d = DVector::from_iterator(
            self.m,
            norms.iter().enumerate().map(|(v, &n2)| if Some(v) == self.t || n2 <= 0.0 { 1.0 } else { 1.0 / n2.sqrt() }),
        );
        for b in &mut self.blocks {
            for i in 0..b.vars.len() {
                let f = d[b.vars[i]];
                for e in &mut b.ents[b.starts[i]..b.starts[i + 1]] {
                    e.2 *= f;
                }
            }
        }
        for r in &mut self.lp {
            r.g *= d[r.var];
        }
        self.c.component_mul_assign(&d);
        self.scale = d;
    }

    fn lp_apply(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.lp.len(), self.lp.iter().map(|r| r.g * y[r.var]))
    }

    fn lp_adjoint(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        for (i, r) in self.lp.iter().enumerate() {
            out[r.var] += r.g * x[i];
        }
    }

    fn run(&self, opts: &SolveOptions, early: Option<&dyn Fn(&DVector<f64>) -> bool>) -> Outcome {
        let m = self.m;
        let nl = self.lp.len();
        let mut norms = vec![0.0; m];
        for b in &self.blocks {
            b.coef_norms(&mut norms);
        }
        for r in &self.lp {
            norms[r.var] += r.g * r.g;
        }
        let norms: Vec<f64> = norms.into_iter().map(f64::sqrt).collect();
        let max_norm = norms.iter().cloned().fold(0.0, f64::max);
        let ratio = (0..m).map(|i| (1.0 + self.c[i].abs()) / (1.0 + norms[i])).fold(0.0, f64::max);
        let c_norm = self.c.norm();

        let mut y = DVector::zeros(m);
        let mut xs: Vec<Mat> = Vec::with_capacity(self.blocks.len());
        let mut ss: Vec<Mat> = Vec::with_capacity(self.blocks.len());
        let mut cn2 = 0.0;
        for b in &self.blocks {
            let sq = (b.n as f64).sqrt();
            let cf = b.c.norm();
            cn2 += cf * cf;
            let xi = 10f64.max(sq).max(sq * ratio);
            let eta = 10f64.max(sq).max(cf).max(max_norm);
            xs.push(Mat::identity(b.n, b.n) * xi);
            ss.push(Mat::identity(b.n, b.n) * eta);
        }
        let h_lp = DVector::from_iterator(nl, self.lp.iter().map(|r| r.h));
        let mut xl = DVector::from_element(nl, 10.0);
        let mut sl = DVector::from_element(nl, 10.0);
        let c_scale = 1.0 + (cn2 + h_lp.norm_squared()).sqrt();
        let nu: f64 = self.blocks.iter().map(|b| b.n as f64).sum::<f64>() + nl as f64;

        let mut stalls = 0;
        let mut last = (f64::INFINITY, f64::NEG_INFINITY);
        let mut done = 0;
        let mut best_merit = f64::INFINITY;
        let mut flat = 0;
        let mut message = String::from("iteration limit");
        for it in 0..opts.max_iter {
            done = it + 1;
            // residuals
            let mut chols = Vec::with_capacity(self.blocks.len());
            let mut sinv = Vec::with_capacity(self.blocks.len());
            for s in &ss {
                match chol(s) {
                    Some(ch) => {
                        sinv.push(sym(ch.inverse()));
                        chols.push(ch);
                    }
                    None => {
                        return Outcome { y, converged: false, iterations: it, message: "lost positive definiteness".into(), dinf: last.0, dobj: last.1 };
                    }
                }
            }
            let mut rp = Vec::with_capacity(self.blocks.len());
            let mut pinf2 = 0.0;
            for (j, b) in self.blocks.iter().enumerate() {
                let r = sym(&b.c + b.apply(&y, self.t) - &ss[j]);
                pinf2 += r.norm_squared();
                rp.push(r);
            }
            let rp_lp = &h_lp + self.lp_apply(&y) - &sl;
            pinf2 += rp_lp.norm_squared();
            let mut at_x = DVector::zeros(m);
            for (j, b) in self.blocks.iter().enumerate() {
                b.adjoint(&xs[j], self.t, &mut at_x);
            }
            self.lp_adjoint(&xl, &mut at_x);
            let rd = &self.c - &at_x;
            let mut xs_dot = xl.dot(&sl);
            let mut cx = h_lp.dot(&xl);
            for (j, b) in self.blocks.iter().enumerate() {
                xs_dot += xs[j].dot(&ss[j]);
                cx += b.c.dot(&xs[j]);
            }
            let mu = xs_dot / nu;
            let pobj = self.c.dot(&y);
            let dobj = -cx;
            let rel_gap = xs_dot.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
            let pinf = pinf2.sqrt() / c_scale;
            let dinf = rd.norm() / (1.0 + c_norm);
            last = (dinf, dobj);
            if opts.verbose {
                eprintln!(
                    "ipm {it:3} pobj {pobj:+.8e} dobj {dobj:+.8e} gap {rel_gap:.2e} pinf {pinf:.2e} dinf {dinf:.2e}"
                );
            }
            if let Some(check) = early {
                if check(&y) {
                    return Outcome { y, converged: true, iterations: it, message: "verified".into(), dinf: last.0, dobj: last.1 };
                }
            }
            if rel_gap < opts.tol && pinf < opts.tol && dinf < opts.tol {
                return Outcome { y, converged: true, iterations: it, message: "converged".into(), dinf: last.0, dobj: last.1 };
            }
            let merit = rel_gap.max(pinf).max(dinf);
            if merit < 0.9 * best_merit {
                best_merit = merit;
                flat = 0;
            } else {
                flat += 1;
                if flat >= STAGNATION_ITERS {
                    message = "stagnated".into();
                    break;
                }
            }
            let xmax = xs.iter().map(|x| x.amax()).fold(xl.amax(), f64::max);
            if !xmax.is_finite() || xmax > 1e13 {
                message = "dual iterates diverged".into();
                break;
            }

            // Schur complement
            let mut h = Mat::zeros(m, m);
            for (j, b) in self.blocks.iter().enumerate() {
                b.schur(&xs[j], &sinv[j], self.t, &mut h);
            }
            for (i, r) in self.lp.iter().enumerate() {
                h[(r.var, r.var)] += r.g * r.g * xl[i] / sl[i];
            }
            for i in 0..m {
                for k in 0..i {
                    h[(i, k)] = h[(k, i)];
                }
            }
            if let Some(nb) = &self.null {
                let dmax = (0..m).map(|i| h[(i, i)].abs()).fold(0.0, f64::max);
                h += nb * nb.transpose() * dmax;
            }
            let hch = {
                let mut reg = 0.0;
                let dmax = (0..m).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
                loop {
                    let mut hh = h.clone();
                    for i in 0..m {
                        hh[(i, i)] += reg;
                    }
                    if let Some(c) = Cholesky::new(hh) {
                        if opts.verbose && reg > 0.0 {
                            eprintln!("    schur regularized by {reg:.1e} (dmax {dmax:.1e})");
                        }
                        break Some(c);
                    }
                    reg = if reg == 0.0 { 1e-14 * dmax } else { reg * 100.0 };
                    if reg > 1e-2 * dmax {
                        break None;
                    }
                }
            };
            let Some(hch) = hch else {
                message = "Schur complement not positive definite".into();
                break;
            };

            // direction for given (sigma, corrector terms)
            let direction = |sigma: f64, corr: Option<(&[Mat], &DVector<f64>)>| {
                let mut rhs = -&rd;
                let mut rprime = Vec::with_capacity(self.blocks.len());
                for (j, b) in self.blocks.iter().enumerate() {
                    let mut r = &sinv[j] * (sigma * mu) - &xs[j];
                    if let Some((cm, _)) = corr {
                        r -= &cm[j] * &sinv[j];
                    }
                    let full = &r - &xs[j] * &rp[j] * &sinv[j];
                    b.adjoint(&sym(full), self.t, &mut rhs);
                    rprime.push(r);
                }
                let mut rl = DVector::from_fn(nl, |i, _| (sigma * mu - xl[i] * sl[i]) / sl[i]);
                if let Some((_, cl)) = corr {
                    for i in 0..nl {
                        rl[i] -= cl[i] / sl[i];
                    }
                }
                let tmp = DVector::from_fn(nl, |i, _| rl[i] - xl[i] / sl[i] * rp_lp[i]);
                self.lp_adjoint(&tmp, &mut rhs);
                let dy = hch.solve(&rhs);
                let mut dss = Vec::with_capacity(self.blocks.len());
                let mut dxs = Vec::with_capacity(self.blocks.len());
                for (j, b) in self.blocks.iter().enumerate() {
                    let ds = sym(b.apply(&dy, self.t) + &rp[j]);
                    let dx = sym(&rprime[j] - &xs[j] * &ds * &sinv[j]);
                    dss.push(ds);
                    dxs.push(dx);
                }
                let dsl = self.lp_apply(&dy) + &rp_lp;
                let dxl = DVector::from_fn(nl, |i, _| rl[i] - xl[i] / sl[i] * dsl[i]);
                (dy, dss, dxs, dsl, dxl)
            };
            let steps = |dss: &[Mat], dxs: &[Mat], dsl: &DVector<f64>, dxl: &DVector<f64>| {
                let mut ap = lp_step(&sl, dsl);
                let mut ad = lp_step(&xl, dxl);
                for j in 0..self.blocks.len() {
                    ap = ap.min(max_step(&chols[j], &dss[j]));
                    if let Some(cx) = chol(&xs[j]) {
                        ad = ad.min(max_step(&cx, &dxs[j]));
                    } else {
                        ad = 0.0;
                    }
                }
                (ap, ad)
            };

            let (_, dsa, dxa, dsla, dxla) = direction(0.0, None);
            let (apa, ada) = steps(&dsa, &dxa, &dsla, &dxla);
            let (apa, ada) = (apa.min(1.0), ada.min(1.0));
            let mut mu_aff = 0.0;
            for j in 0..self.blocks.len() {
                mu_aff += (&xs[j] + &dxa[j] * ada).dot(&(&ss[j] + &dsa[j] * apa));
            }
            mu_aff += (&xl + &dxla * ada).dot(&(&sl + &dsla * apa));
            mu_aff /= nu;
            let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);
            let corr_m: Vec<Mat> = dxa.iter().zip(&dsa).map(|(dx, ds)| dx * ds).collect();
            let corr_l = dxla.component_mul(&dsla);
            let (dy, dss, dxs, dsl, dxl) = direction(sigma, Some((&corr_m, &corr_l)));
            let (ap, ad) = steps(&dss, &dxs, &dsl, &dxl);
            let gamma = 0.9 + 0.09 * apa.min(ada);
            let ap = (gamma * ap).min(1.0);
            let ad = (gamma * ad).min(1.0);
            if opts.verbose {
                eprintln!("    ap {ap:.2e} ad {ad:.2e} sigma {sigma:.2e} mu {mu:.2e} t {:.3e}", self.t.map_or(0.0, |t| y[t]));
            }
            if ap < 1e-10 && ad < 1e-10 {
                stalls += 1;
                if stalls >= 3 {
                    message = "stalled".into();
                    break;
                }
            } else {
                stalls = 0;
            }
            y += &dy * ap;
            for j in 0..self.blocks.len() {
                ss[j] = sym(&ss[j] + &dss[j] * ap);
                xs[j] = sym(&xs[j] + &dxs[j] * ad);
            }
            sl += &dsl * ap;
            xl += &dxl * ad;
        }
        if let Some(check) = early {
            if check(&y) {
                return Outcome { y, converged: true, iterations: done, message: "verified".into(), dinf: last.0, dobj: last.1 };
            }
        }
        Outcome { y, converged: false, iterations: done, message, dinf: last.0, dobj: last.1 }
    }
}

impl Backend for InteriorPoint {
    fn maximize_margin(&self, p: &LmiProgram, opts: &SolveOptions, eps: f64) -> BackendResult {
        let n0 = p.n_scalars();
        let prob = Internal::build(p, opts, true, eps);
        let verify = |y: &DVector<f64>| -> bool {
            if y[n0] < 2.0 * eps {
                return false;
            }
            let yy = y.rows(0, n0).into_owned();
            if !p.lower.iter().all(|&(v, lb)| yy[v] >= lb) {
                return false;
            }
            p.lmis.iter().zip(p.slacks(&yy)).all(|(l, s)| if l.sense.is_strict() { s >= 2.0 * eps } else { s >= -PSD_RELAX * eps })
        };
        let verify_scaled = |yh: &DVector<f64>| verify(&yh.component_mul(&prob.scale));
        let mut out = if opts.early_exit { prob.run(opts, Some(&verify_scaled)) } else { prob.run(opts, None) };
        out.y.component_mul_assign(&prob.scale);
        BackendResult {
            y: out.y.rows(0, n0).into_owned(),
            converged: out.converged,
            t: Some(out.y[n0]),
            iterations: out.iterations,
            message: out.message,
            dual_residual: out.dinf,
            dual_bound: Some(-out.dobj),
        }
    }

    fn minimize(&self, p: &LmiProgram, opts: &SolveOptions, eps: f64) -> BackendResult {
        let prob = Internal::build(p, opts, false, eps);
        let mut out = prob.run(opts, None);
        out.y.component_mul_assign(&prob.scale);
        BackendResult {
            y: out.y,
            converged: out.converged,
            t: None,
            iterations: out.iterations,
            message: out.message,
            dual_residual: out.dinf,
            dual_bound: None,
        }
    }
}

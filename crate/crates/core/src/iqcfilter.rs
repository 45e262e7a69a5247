//! IQC outer filters, the augmented and auxiliary systems, lifted filter blocks,
//! and an empirical check of the IQC inequality.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dwell::ImpulseSequence;
use crate::matcore::{hcat, kron, powers, vcat, Blocks, Mat};
use crate::model::{FeedbackForm, JumpForm};
use crate::{Error, Result};

/// State-space realization `ξ⁺ = A_Ψ ξ + B_Ψ u`, `y = C_Ψ ξ + D_Ψ u` with `u = (z; w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterPsi {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub nz: usize,
    pub nw: usize,
    /// Tap count when built by [`basis_filter`].
    pub nu: Option<usize>,
}

impl FilterPsi {
    pub fn nxi(&self) -> usize {
        self.a.nrows()
    }

    /// Output dimension `m`.
    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    /// `B_Ψ` restricted to the `z` (`top = true`) or `w` inputs.
    fn b_split(&self) -> (Mat, Mat) {
        (
            self.b.columns(0, self.nz).into_owned(),
            self.b.columns(self.nz, self.nw).into_owned(),
        )
    }

    fn d_split(&self) -> (Mat, Mat) {
        (
            self.d.columns(0, self.nz).into_owned(),
            self.d.columns(self.nz, self.nw).into_owned(),
        )
    }

    fn require_square(&self) -> Result<()> {
        if self.nz != self.nw {
            return Err(Error::Dimension(format!(
                "filter needs n_z = n_w, got {} and {}",
                self.nz, self.nw
            )));
        }
        Ok(())
    }

    /// `B_Ψ[I; 0]` and `B_Ψ[I; I]`.
    pub fn b_flow_jump(&self) -> Result<(Mat, Mat)> {
        self.require_square()?;
        let (bz, bw) = self.b_split();
        Ok((bz.clone(), bz + bw))
    }

    /// `D_Ψ[I; 0]` and `D_Ψ[I; I]`.
    pub fn d_flow_jump(&self) -> Result<(Mat, Mat)> {
        self.require_square()?;
        let (dz, dw) = self.d_split();
        Ok((dz.clone(), dz + dw))
    }
}

/// Delay-line basis `Ψ = I ⊗ [z^{−ν}, …, z^{−1}, 1]ᵀ`.
///
/// Channels are the slow index and taps the fast index; `ν = 0` gives `Ψ = I`.
pub fn basis_filter(nz: usize, nw: usize, nu: usize) -> FilterPsi {
    let ch = nz + nw;
    let mut j = Mat::zeros(nu, nu);
    for i in 0..nu.saturating_sub(1) {
        j[(i, i + 1)] = 1.0;
    }
    let mut e_nu = Mat::zeros(nu, 1);
    if nu > 0 {
        e_nu[(nu - 1, 0)] = 1.0;
    }
    let c_nu = vcat(&[&Mat::identity(nu, nu), &Mat::zeros(1, nu)]);
    let mut e_last = Mat::zeros(nu + 1, 1);
    e_last[(nu, 0)] = 1.0;
    let i = Mat::identity(ch, ch);
    FilterPsi {
        a: kron(&i, &j),
        b: kron(&i, &e_nu),
        c: kron(&i, &c_nu),
        d: kron(&i, &e_last),
        nz,
        nw,
        nu: Some(nu),
    }
}

/// Interconnection of a feedback form with the filter, state `(ξ, x)`.
///
/// Outputs are the filtered signal `y` and the performance output `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSystem {
    pub a: Mat,
    pub bw: Mat,
    pub bd: Mat,
    pub cy: Mat,
    pub dyw: Mat,
    pub dyd: Mat,
    pub c: Mat,
    pub dew: Mat,
    pub d: Mat,
    pub nxi: usize,
}

impl AugmentedSystem {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

pub fn augment(f: &FeedbackForm, psi: &FilterPsi) -> Result<AugmentedSystem> {
    f.validate()?;
    if (psi.nz, psi.nw) != (f.nz(), f.nw()) {
        return Err(Error::Dimension(format!(
            "filter channels ({}, {}) do not match system ({}, {})",
            psi.nz,
            psi.nw,
            f.nz(),
            f.nw()
        )));
    }
    let (nxi, n, nw, nd) = (psi.nxi(), f.n(), f.nw(), f.nd());
    let cz0 = vcat(&[&f.cz, &Mat::zeros(nw, n)]);
    let dzw_i = vcat(&[&f.dzw, &Mat::identity(nw, nw)]);
    let dzd0 = vcat(&[&f.dzd, &Mat::zeros(nw, nd)]);
    let a = vcat(&[
        &hcat(&[&psi.a, &(&psi.b * &cz0)]),
        &hcat(&[&Mat::zeros(n, nxi), &f.a]),
    ]);
    Ok(AugmentedSystem {
        a,
        bw: vcat(&[&(&psi.b * &dzw_i), &f.bw]),
        bd: vcat(&[&(&psi.b * &dzd0), &f.b]),
        cy: hcat(&[&psi.c, &(&psi.d * &cz0)]),
        dyw: &psi.d * &dzw_i,
        dyd: &psi.d * &dzd0,
        c: hcat(&[&Mat::zeros(f.ne(), nxi), &f.c]),
        dew: f.dew.clone(),
        d: f.d.clone(),
        nxi,
    })
}

/// The filter driven by `(z; Δ(z))` as an impulsive system with input `z`.
pub fn auxiliary_impulsive(psi: &FilterPsi) -> Result<JumpForm> {
    let (bf, bj) = psi.b_flow_jump()?;
    let (df, dj) = psi.d_flow_jump()?;
    JumpForm::new(psi.a.clone(), bf, psi.c.clone(), df, psi.a.clone(), bj, psi.c.clone(), dj)
}

/// Outer factor of the lifted multiplier inequality for dwell time `k`.
///
/// Columns: `ξ`, `z₀ … z_{k−1}` (flow), `z_k` (jump). Rows: next `ξ`, current `ξ`,
/// outputs `y₀ … y_k`. The middle matrix is `diag(Z, −Z, I_{k+1} ⊗ M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedFilter {
    pub k: usize,
    pub outer: Mat,
    pub nxi: usize,
    pub m: usize,
}

pub fn lift_filter(psi: &FilterPsi, k: usize) -> Result<LiftedFilter> {
    if k < 1 {
        return Err(Error::Invalid("lifted filter needs k ≥ 1".into()));
    }
    let (bf, bj) = psi.b_flow_jump()?;
    let (df, dj) = psi.d_flow_jump()?;
    let (nxi, nz, m) = (psi.nxi(), psi.nz, psi.m());
    let ap = powers(&psi.a, k + 1);
    let mut rows = vec![nxi, nxi];
    rows.extend(std::iter::repeat(m).take(k + 1));
    let mut cols = vec![nxi];
    cols.extend(std::iter::repeat(nz).take(k + 1));
    let mut o = Blocks::new(&rows, &cols);
    o.set(0, 0, &ap[k + 1]);
    for j in 0..k {
        o.set(0, 1 + j, &(&ap[k - j] * &bf));
    }
    o.set(0, k + 1, &bj);
    o.identity(1, 0);
    for i in 0..=k {
        o.set(2 + i, 0, &(&psi.c * &ap[i]));
        for j in 0..i {
            o.set(2 + i, 1 + j, &(&psi.c * &ap[i - 1 - j] * &bf));
        }
        if i < k {
            o.set(2 + i, 1 + i, &df);
        } else {
            o.set(2 + i, 1 + k, &dj);
        }
    }
    Ok(LiftedFilter { k, outer: o.build(), nxi, m })
}

/// Terminal-cost part of a multiplier.
#[derive(Clone, Debug, PartialEq)]
pub enum TerminalCost {
    /// One `Z` (lifting-based multipliers).
    Single(Mat),
    /// `Z₀ … Z_{Tmax}` indexed by the clock.
    Clock(Vec<Mat>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier {
    pub m: Mat,
    pub z: TerminalCost,
}

impl Multiplier {
    /// Terminal cost used right after an impulse.
    pub fn z_after_impulse(&self) -> &Mat {
        match &self.z {
            TerminalCost::Single(z) => z,
            TerminalCost::Clock(zs) => &zs[0],
        }
    }
}

/// Outcome of [`verify_iqc_empirical`].
#[derive(Clone, Debug, PartialEq)]
pub struct IqcReport {
    pub min_lhs: f64,
    pub checks: usize,
}

/// Falsification test of the IQC with terminal cost along random inputs in `[−1, 1]`.
pub fn verify_iqc_empirical(
    psi: &FilterPsi,
    mult: &Multiplier,
    seq: &ImpulseSequence,
    trials: usize,
    seed: u64,
) -> Result<IqcReport> {
    psi.require_square()?;
    let zk = mult.z_after_impulse();
    if mult.m.shape() != (psi.m(), psi.m()) || zk.shape() != (psi.nxi(), psi.nxi()) {
        return Err(Error::Dimension("multiplier does not match the filter".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = seq.horizon();
    let mut min_lhs = f64::INFINITY;
    let mut checks = 0;
    for _ in 0..trials {
        let mut xi = DVector::zeros(psi.nxi());
        let mut sum = 0.0;
        let mut comp = 0.0;
        for t in 0..=horizon {
            let z = DVector::from_fn(psi.nz, |_, _| rng.gen_range(-1.0..1.0));
            let w = if seq.is_impulse(t) { z.clone() } else { DVector::zeros(psi.nw) };
            let u = DVector::from_iterator(psi.nz + psi.nw, z.iter().chain(w.iter()).cloned());
            let y = &psi.c * &xi + &psi.d * &u;
            let q = y.dot(&(&mult.m * &y));
            // Neumaier summation
            let s = sum + q;
            comp += if sum.abs() >= q.abs() { (sum - s) + q } else { (q - s) + sum };
            sum = s;
            xi = &psi.a * &xi + &psi.b * &u;
            if seq.is_impulse(t) {
                let lhs = xi.dot(&(zk * &xi)) + sum + comp;
                min_lhs = min_lhs.min(lhs);
                checks += 1;
            }
        }
    }
    Ok(IqcReport { min_lhs, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwell::{sample_sequence, DwellSpec, Policy};
    use crate::model::jump_to_feedback;
    use crate::sim::simulate_jump;
    use rand::{Rng, SeedableRng};

    #[test]
    fn static_filter() {
        let p = basis_filter(2, 2, 0);
        assert_eq!(p.a.shape(), (0, 0));
        assert_eq!(p.b.shape(), (0, 4));
        assert_eq!(p.c.shape(), (4, 0));
        assert_eq!(p.d, Mat::identity(4, 4));
    }

    #[test]
    fn nu_one_scalar_channels() {
        let p = basis_filter(1, 1, 1);
        assert_eq!(p.a, Mat::zeros(2, 2));
        assert_eq!(p.b, Mat::identity(2, 2));
        // per channel the output is (previous input, current input)
        let c = Mat::from_row_slice(4, 2, &[1., 0., 0., 0., 0., 1., 0., 0.]);
        assert_eq!(p.c, c);
        let d = Mat::from_row_slice(4, 2, &[0., 0., 1., 0., 0., 0., 0., 1.]);
        assert_eq!(p.d, d);
    }

    #[test]
    fn taps_are_delays() {
        let nu = 3;
        let p = basis_filter(1, 1, nu);
        assert!(powers(&p.a, nu)[nu].amax() == 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let us: Vec<DVector<f64>> = (0..30).map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let mut xi = DVector::zeros(p.nxi());
        for t in 0..us.len() {
            let y = &p.c * &xi + &p.d * &us[t];
            for ch in 0..2 {
                for j in 0..=nu {
                    let lag = nu - j;
                    let want = if t >= lag { us[t - lag][ch] } else { 0.0 };
                    assert_eq!(y[ch * (nu + 1) + j], want);
                }
            }
            xi = &p.a * &xi + &p.b * &us[t];
        }
    }

    fn rand_feedback(rng: &mut ChaCha8Rng) -> FeedbackForm {
        let r = |rng: &mut ChaCha8Rng, a, b| Mat::from_fn(a, b, |_, _| rng.gen_range(-0.5..0.5));
        let j = JumpForm::new(r(rng, 2, 2), r(rng, 2, 1), r(rng, 1, 2), r(rng, 1, 1), r(rng, 2, 2), r(rng, 2, 1), r(rng, 1, 2), r(rng, 1, 1)).unwrap();
        jump_to_feedback(&j)
    }

    #[test]
    fn augment_dims_and_static_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = rand_feedback(&mut rng);
        let psi = basis_filter(f.nz(), f.nw(), 2);
        let g = augment(&f, &psi).unwrap();
        assert_eq!(g.n(), psi.nxi() + f.n());
        assert_eq!(g.cy.nrows(), psi.m());
        assert_eq!(g.c.nrows(), f.ne());
        let s = augment(&f, &basis_filter(f.nz(), f.nw(), 0)).unwrap();
        assert_eq!(s.a, f.a);
        assert_eq!(s.cy, vcat(&[&f.cz, &Mat::zeros(f.nw(), f.n())]));
        assert_eq!(s.dyw, vcat(&[&f.dzw, &Mat::identity(f.nw(), f.nw())]));
        assert!(augment(&f, &basis_filter(1, 1, 1)).is_err());
    }

    #[test]
    fn augment_of_zero_system() {
        let z = |r, c| Mat::zeros(r, c);
        let f = FeedbackForm { a: z(1, 1), bw: z(1, 1), b: z(1, 1), cz: z(1, 1), dzw: z(1, 1), dzd: z(1, 1), c: z(1, 1), dew: z(1, 1), d: z(1, 1) };
        let psi = basis_filter(1, 1, 2);
        let g = augment(&f, &psi).unwrap();
        let nxi = psi.nxi();
        assert_eq!(g.a.view((0, 0), (nxi, nxi)).into_owned(), psi.a);
        assert_eq!(g.bw.rows(0, nxi).into_owned(), psi.b.columns(1, 1).into_owned());
        assert_eq!(g.bd.amax(), 0.0);
    }

    #[test]
    fn augment_preserves_e_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = rand_feedback(&mut rng);
        let g = augment(&f, &basis_filter(f.nz(), f.nw(), 2)).unwrap();
        let mut x = DVector::zeros(f.n());
        let mut xa = DVector::zeros(g.n());
        for _ in 0..60 {
            let w = DVector::from_fn(f.nw(), |_, _| rng.gen_range(-1.0..1.0));
            let d = DVector::from_fn(f.nd(), |_, _| rng.gen_range(-1.0..1.0));
            let e1 = &f.c * &x + &f.dew * &w + &f.d * &d;
            let e2 = &g.c * &xa + &g.dew * &w + &g.d * &d;
            assert!((e1 - e2).amax() < 1e-10);
            x = &f.a * &x + &f.bw * &w + &f.b * &d;
            xa = &g.a * &xa + &g.bw * &w + &g.bd * &d;
        }
    }

    #[test]
    fn auxiliary_matches_two_stage_simulation() {
        for nu in [0usize, 1, 3] {
            let psi = basis_filter(2, 2, nu);
            let aux = auxiliary_impulsive(&psi).unwrap();
            let seq = sample_sequence(&DwellSpec::Rdt(1, 3), 200, Policy::UniformRandom { seed: nu as u64 }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let z = Mat::from_fn(2, 200, |_, _| rng.gen_range(-1.0..1.0));
            let tr = simulate_jump(&aux, &seq, &DVector::zeros(psi.nxi()), &z, 200).unwrap();
            let mut xi = DVector::zeros(psi.nxi());
            for t in 0..200 {
                let zt = z.column(t).into_owned();
                let w = if seq.is_impulse(t as i64) { zt.clone() } else { DVector::zeros(2) };
                let u = DVector::from_iterator(4, zt.iter().chain(w.iter()).cloned());
                let y = &psi.c * &xi + &psi.d * &u;
                assert!((y - tr.e.column(t)).amax() < 1e-12);
                xi = &psi.a * &xi + &psi.b * &u;
            }
        }
    }

    #[test]
    fn auxiliary_static_selections() {
        let aux = auxiliary_impulsive(&basis_filter(1, 1, 0)).unwrap();
        assert_eq!(aux.d, Mat::from_row_slice(2, 1, &[1.0, 0.0]));
        assert_eq!(aux.dj, Mat::from_row_slice(2, 1, &[1.0, 1.0]));
        assert!(auxiliary_impulsive(&basis_filter(1, 2, 1)).is_err());
    }

    #[test]
    fn lifted_static_filter() {
        let lf = lift_filter(&basis_filter(1, 1, 0), 1).unwrap();
        let want = Mat::from_row_slice(4, 2, &[1., 0., 0., 0., 0., 1., 0., 1.]);
        assert_eq!(lf.outer, want);
    }

    #[test]
    fn lifted_top_block_nilpotent() {
        let psi = basis_filter(1, 1, 2);
        let lf = lift_filter(&psi, 2).unwrap();
        assert_eq!(lf.outer.view((0, 0), (psi.nxi(), psi.nxi())).amax(), 0.0);
    }

    #[test]
    fn lifted_columns_match_simulation() {
        let psi = basis_filter(2, 2, 2);
        let aux = auxiliary_impulsive(&psi).unwrap();
        let (nxi, nz, m) = (psi.nxi(), psi.nz, psi.m());
        for k in 1..5usize {
            let lf = lift_filter(&psi, k).unwrap();
            let seq = crate::dwell::ImpulseSequence::new(vec![k as i64], k as i64).unwrap();
            let cols = nxi + (k + 1) * nz;
            for col in 0..cols {
                let mut x0 = DVector::zeros(nxi);
                let mut d = Mat::zeros(nz, k + 1);
                if col < nxi {
                    x0[col] = 1.0;
                } else {
                    let c = col - nxi;
                    d[(c % nz, c / nz)] = 1.0;
                }
                let tr = simulate_jump(&aux, &seq, &x0, &d, k + 1).unwrap();
                let o = lf.outer.column(col);
                assert!((o.rows(0, nxi) - tr.x.column(k + 1)).amax() < 1e-14);
                assert!((o.rows(nxi, nxi) - &x0).amax() < 1e-14);
                for i in 0..=k {
                    assert!((o.rows(2 * nxi + i * m, m) - tr.e.column(i)).amax() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_multiplier_gives_zero_lhs() {
        let psi = basis_filter(1, 1, 1);
        let mult = Multiplier { m: Mat::zeros(4, 4), z: TerminalCost::Single(Mat::zeros(2, 2)) };
        let seq = sample_sequence(&DwellSpec::Rdt(1, 2), 50, Policy::Minimal).unwrap();
        let r = verify_iqc_empirical(&psi, &mult, &seq, 5, 0).unwrap();
        assert_eq!(r.min_lhs, 0.0);
        assert!(r.checks > 0);
    }

    #[test]
    fn static_multiplier_partial_sums_nonnegative() {
        // [I;0]ᵀM[I;0] ⪰ 0 and [I;I]ᵀM[I;I] ⪰ 0 with M = [[1, -0.5], [-0.5, 0]]
        let psi = basis_filter(1, 1, 0);
        let m = Mat::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 0.0]);
        let mult = Multiplier { m, z: TerminalCost::Single(Mat::zeros(0, 0)) };
        let seq = sample_sequence(&DwellSpec::Rdt(1, 4), 300, Policy::UniformRandom { seed: 3 }).unwrap();
        let r = verify_iqc_empirical(&psi, &mult, &seq, 20, 1).unwrap();
        assert!(r.min_lhs >= 0.0);
    }
}

//! System descriptions, conversions and the estimation closed loop.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::matcore::{all_finite, balance_scaling, eig_extremes, hcat, rcond, vcat, Mat};
use crate::{Error, Result};

/// Reciprocal-condition threshold below which `I − D_zw` counts as singular.
pub const WELL_POSED_RCOND: f64 = 1e-12;

/// Standard impulsive system with separate flow and jump matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpForm {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub aj: Mat,
    pub bj: Mat,
    pub cj: Mat,
    pub dj: Mat,
}

/// Linear part of the interconnection with the impulsive operator.
///
/// `x⁺ = A x + B_w w + B d`, `z = C_z x + D_zw w + D_zd d`, `e = C x + D_ew w + D d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackForm {
    pub a: Mat,
    pub bw: Mat,
    pub b: Mat,
    pub cz: Mat,
    pub dzw: Mat,
    pub dzd: Mat,
    pub c: Mat,
    pub dew: Mat,
    pub d: Mat,
}

/// Plant for estimation: `z`/`w` impulsive loop, `v` to be estimated, `y` measured.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationPlant {
    pub a: Mat,
    pub bw: Mat,
    pub bd: Mat,
    pub cz: Mat,
    pub dzw: Mat,
    pub dzd: Mat,
    pub cv: Mat,
    pub dvw: Mat,
    pub dvd: Mat,
    pub cy: Mat,
    pub dyw: Mat,
    pub dyd: Mat,
}

/// Estimation plant given directly by flow and jump matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpEstimationPlant {
    pub a: Mat,
    pub bd: Mat,
    pub cv: Mat,
    pub dvd: Mat,
    pub cy: Mat,
    pub dyd: Mat,
    pub aj: Mat,
    pub bjd: Mat,
    pub cjv: Mat,
    pub djvd: Mat,
    pub cjy: Mat,
    pub djyd: Mat,
}

/// Non-impulsive LTI estimator `x_e⁺ = A_e x_e + B_e y`, `u = C_e x_e + D_e y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimator {
    pub ae: Mat,
    pub be: Mat,
    pub ce: Mat,
    pub de: Mat,
}

/// Quadratic performance index `P = [Q S; Sᵀ R]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerfIndex {
    pub q: Mat,
    pub s: Mat,
    pub r: Mat,
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Dimension(what.to_string()))
    }
}

impl JumpForm {
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat, aj: Mat, bj: Mat, cj: Mat, dj: Mat) -> Result<Self> {
        let j = JumpForm { a, b, c, d, aj, bj, cj, dj };
        j.validate()?;
        Ok(j)
    }

    /// Unforced system without performance channels.
    pub fn autonomous(a: Mat, aj: Mat) -> Result<Self> {
        let n = a.nrows();
        Self::new(
            a,
            Mat::zeros(n, 0),
            Mat::zeros(0, n),
            Mat::zeros(0, 0),
            aj,
            Mat::zeros(n, 0),
            Mat::zeros(0, n),
            Mat::zeros(0, 0),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (n, nd, ne) = (self.n(), self.nd(), self.ne());
        for (m, r, c, name) in [
            (&self.a, n, n, "A"),
            (&self.b, n, nd, "B"),
            (&self.c, ne, n, "C"),
            (&self.d, ne, nd, "D"),
            (&self.aj, n, n, "A_J"),
            (&self.bj, n, nd, "B_J"),
            (&self.cj, ne, n, "C_J"),
            (&self.dj, ne, nd, "D_J"),
        ] {
            check(m.shape() == (r, c), &format!("{name} should be {r}x{c}, got {:?}", m.shape()))?;
            if !all_finite(m) {
                return Err(Error::Invalid(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn nd(&self) -> usize {
        self.b.ncols()
    }
    pub fn ne(&self) -> usize {
        self.c.nrows()
    }

    /// Flow (`false`) or jump (`true`) matrices `(A_s, B_s, C_s, D_s)`.
    pub fn mats(&self, jump: bool) -> (&Mat, &Mat, &Mat, &Mat) {
        if jump {
            (&self.aj, &self.bj, &self.cj, &self.dj)
        } else {
            (&self.a, &self.b, &self.c, &self.d)
        }
    }

    /// Same system in coordinates `x = diag(s) x̃`.
    pub fn scale_state(&self, s: &[f64]) -> JumpForm {
        let (t, ti) = diag_pair(s);
        JumpForm {
            a: &ti * &self.a * &t,
            b: &ti * &self.b,
            c: &self.c * &t,
            aj: &ti * &self.aj * &t,
            bj: &ti * &self.bj,
            cj: &self.cj * &t,
            ..self.clone()
        }
    }

    /// Diagonal state scaling that balances the flow and jump matrices.
    pub fn balancing(&self) -> Vec<f64> {
        balance_scaling(&[&self.a, &self.aj])
    }

    /// Multiply the performance output by `s`.
    pub fn scale_output(&self, s: f64) -> JumpForm {
        JumpForm {
            c: &self.c * s,
            d: &self.d * s,
            cj: &self.cj * s,
            dj: &self.dj * s,
            ..self.clone()
        }
    }
}

impl FeedbackForm {
    pub fn validate(&self) -> Result<()> {
        let (n, nw, nd, nz, ne) = (self.n(), self.nw(), self.nd(), self.nz(), self.ne());
        for (m, r, c, name) in [
            (&self.a, n, n, "A"),
            (&self.bw, n, nw, "B_w"),
            (&self.b, n, nd, "B"),
            (&self.cz, nz, n, "C_z"),
            (&self.dzw, nz, nw, "D_zw"),
            (&self.dzd, nz, nd, "D_zd"),
            (&self.c, ne, n, "C"),
            (&self.dew, ne, nw, "D_ew"),
            (&self.d, ne, nd, "D"),
        ] {
            check(m.shape() == (r, c), &format!("{name} should be {r}x{c}, got {:?}", m.shape()))?;
            if !all_finite(m) {
                return Err(Error::Invalid(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn nw(&self) -> usize {
        self.bw.ncols()
    }
    pub fn nd(&self) -> usize {
        self.b.ncols()
    }
    pub fn nz(&self) -> usize {
        self.cz.nrows()
    }
    pub fn ne(&self) -> usize {
        self.c.nrows()
    }

    /// Same system in coordinates `x = diag(s) x̃`.
    pub fn scale_state(&self, s: &[f64]) -> FeedbackForm {
        let (t, ti) = diag_pair(s);
        FeedbackForm {
            a: &ti * &self.a * &t,
            bw: &ti * &self.bw,
            b: &ti * &self.b,
            cz: &self.cz * &t,
            c: &self.c * &t,
            ..self.clone()
        }
    }

    /// Diagonal state scaling that balances the flow matrix and `B_w C_z`.
    pub fn balancing(&self) -> Vec<f64> {
        let loop_gain = self.bw.abs() * self.cz.abs();
        balance_scaling(&[&self.a, &loop_gain])
    }

    /// Errors unless `n_z = n_w`, as required by the impulsive operator.
    pub fn require_square_loop(&self) -> Result<()> {
        check(
            self.nz() == self.nw(),
            &format!("impulsive loop needs n_z = n_w, got {} and {}", self.nz(), self.nw()),
        )
    }
}

impl EstimationPlant {
    pub fn validate(&self) -> Result<()> {
        let (n, nw, nd) = (self.a.nrows(), self.bw.ncols(), self.bd.ncols());
        let (nz, nv, ny) = (self.cz.nrows(), self.cv.nrows(), self.cy.nrows());
        for (m, r, c, name) in [
            (&self.a, n, n, "A"),
            (&self.bw, n, nw, "B_w"),
            (&self.bd, n, nd, "B_d"),
            (&self.cz, nz, n, "C_z"),
            (&self.dzw, nz, nw, "D_zw"),
            (&self.dzd, nz, nd, "D_zd"),
            (&self.cv, nv, n, "C_v"),
            (&self.dvw, nv, nw, "D_vw"),
            (&self.dvd, nv, nd, "D_vd"),
            (&self.cy, ny, n, "C_y"),
            (&self.dyw, ny, nw, "D_yw"),
            (&self.dyd, ny, nd, "D_yd"),
        ] {
            check(m.shape() == (r, c), &format!("{name} should be {r}x{c}, got {:?}", m.shape()))?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn nw(&self) -> usize {
        self.bw.ncols()
    }
    pub fn nd(&self) -> usize {
        self.bd.ncols()
    }
    pub fn nz(&self) -> usize {
        self.cz.nrows()
    }
    pub fn nv(&self) -> usize {
        self.cv.nrows()
    }
    pub fn ny(&self) -> usize {
        self.cy.nrows()
    }

    /// Measurement row `[C_y D_yw D_yd]`.
    pub fn measurement_row(&self) -> Mat {
        hcat(&[&self.cy, &self.dyw, &self.dyd])
    }
}

impl JumpEstimationPlant {
    pub fn validate(&self) -> Result<()> {
        let (n, nd, nv, ny) = (self.a.nrows(), self.bd.ncols(), self.cv.nrows(), self.cy.nrows());
        for (m, r, c, name) in [
            (&self.a, n, n, "A"),
            (&self.bd, n, nd, "B_d"),
            (&self.cv, nv, n, "C_v"),
            (&self.dvd, nv, nd, "D_vd"),
            (&self.cy, ny, n, "C_y"),
            (&self.dyd, ny, nd, "D_yd"),
            (&self.aj, n, n, "A_J"),
            (&self.bjd, n, nd, "B_Jd"),
            (&self.cjv, nv, n, "C_Jv"),
            (&self.djvd, nv, nd, "D_Jvd"),
            (&self.cjy, ny, n, "C_Jy"),
            (&self.djyd, ny, nd, "D_Jyd"),
        ] {
            check(m.shape() == (r, c), &format!("{name} should be {r}x{c}, got {:?}", m.shape()))?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn nd(&self) -> usize {
        self.bd.ncols()
    }
    pub fn nv(&self) -> usize {
        self.cv.nrows()
    }
    pub fn ny(&self) -> usize {
        self.cy.nrows()
    }

    /// Feedback description with `z = (x; d)` and `w = Δ(z)`.
    pub fn to_estimation_plant(&self) -> EstimationPlant {
        let (n, nd) = (self.n(), self.nd());
        let cz = vcat(&[&Mat::identity(n, n), &Mat::zeros(nd, n)]);
        let dzd = vcat(&[&Mat::zeros(n, nd), &Mat::identity(nd, nd)]);
        EstimationPlant {
            a: self.a.clone(),
            bw: hcat(&[&(&self.aj - &self.a), &(&self.bjd - &self.bd)]),
            bd: self.bd.clone(),
            cz,
            dzw: Mat::zeros(n + nd, n + nd),
            dzd,
            cv: self.cv.clone(),
            dvw: hcat(&[&(&self.cjv - &self.cv), &(&self.djvd - &self.dvd)]),
            dvd: self.dvd.clone(),
            cy: self.cy.clone(),
            dyw: hcat(&[&(&self.cjy - &self.cy), &(&self.djyd - &self.dyd)]),
            dyd: self.dyd.clone(),
        }
    }
}

impl Estimator {
    pub fn validate(&self) -> Result<()> {
        let (ne, ny, nu) = (self.ae.nrows(), self.be.ncols(), self.ce.nrows());
        check(self.ae.shape() == (ne, ne), "A_e must be square")?;
        check(self.be.shape() == (ne, ny), "B_e shape")?;
        check(self.ce.shape() == (nu, ne), "C_e shape")?;
        check(self.de.shape() == (nu, ny), "D_e shape")
    }

    pub fn order(&self) -> usize {
        self.ae.nrows()
    }

    pub fn zeros(order: usize, ny: usize, nu: usize) -> Self {
        Estimator {
            ae: Mat::zeros(order, order),
            be: Mat::zeros(order, ny),
            ce: Mat::zeros(nu, order),
            de: Mat::zeros(nu, ny),
        }
    }
}

impl PerfIndex {
    pub fn new(q: Mat, s: Mat, r: Mat) -> Result<Self> {
        check(q.is_square() && r.is_square(), "Q and R must be square")?;
        check(s.shape() == (q.nrows(), r.nrows()), "S must be n_e x n_d")?;
        let p = PerfIndex { q, s, r };
        let (lo, _) = eig_extremes(&p.q);
        if q_sym_err(&p.q) > 1e-12 || (p.q.nrows() > 0 && lo < -1e-10) {
            return Err(Error::Invalid("Q must be symmetric positive semidefinite".into()));
        }
        Ok(p)
    }

    /// `P_γ = diag(I, −g I)` with `g = γ²`.
    pub fn gain_index(ne: usize, nd: usize, g: f64) -> Self {
        PerfIndex {
            q: Mat::identity(ne, ne),
            s: Mat::zeros(ne, nd),
            r: Mat::identity(nd, nd) * -g,
        }
    }

    pub fn ne(&self) -> usize {
        self.q.nrows()
    }
    pub fn nd(&self) -> usize {
        self.r.nrows()
    }

    pub fn full(&self) -> Mat {
        vcat(&[&hcat(&[&self.q, &self.s]), &hcat(&[&self.s.transpose(), &self.r])])
    }

    pub fn is_nonsingular(&self) -> bool {
        rcond(&self.full()) > 1e-12
    }
}

fn q_sym_err(q: &Mat) -> f64 {
    (q - q.transpose()).amax()
}

fn diag_pair(s: &[f64]) -> (Mat, Mat) {
    let t = Mat::from_diagonal(&DVector::from_column_slice(s));
    let ti = Mat::from_diagonal(&DVector::from_iterator(s.len(), s.iter().map(|v| 1.0 / v)));
    (t, ti)
}

/// Feedback form of a jump form; `n_z = n_w = n + n_d`.
pub fn jump_to_feedback(j: &JumpForm) -> FeedbackForm {
    let (n, nd) = (j.n(), j.nd());
    FeedbackForm {
        a: j.a.clone(),
        bw: hcat(&[&(&j.aj - &j.a), &(&j.bj - &j.b)]),
        b: j.b.clone(),
        cz: vcat(&[&Mat::identity(n, n), &Mat::zeros(nd, n)]),
        dzw: Mat::zeros(n + nd, n + nd),
        dzd: vcat(&[&Mat::zeros(n, nd), &Mat::identity(nd, nd)]),
        c: j.c.clone(),
        dew: hcat(&[&(&j.cj - &j.c), &(&j.dj - &j.d)]),
        d: j.d.clone(),
    }
}

/// `(I − D_zw)⁻¹`, or `not-well-posed`.
pub fn loop_inverse(dzw: &Mat) -> Result<Mat> {
    let k = dzw.nrows();
    let m = Mat::identity(k, k) - dzw;
    let rc = rcond(&m);
    if rc < WELL_POSED_RCOND {
        return Err(Error::NotWellPosed { rcond: rc });
    }
    m.try_inverse().ok_or(Error::NotWellPosed { rcond: rc })
}

/// Jump form of a well-posed feedback form.
pub fn feedback_to_jump(f: &FeedbackForm) -> Result<JumpForm> {
    f.validate()?;
    f.require_square_loop()?;
    let inv = loop_inverse(&f.dzw)?;
    let left = vcat(&[&f.bw, &f.dew]);
    let right = hcat(&[&f.cz, &f.dzd]);
    let corr = left * inv * right;
    let (n, nd, ne) = (f.n(), f.nd(), f.ne());
    let base = vcat(&[&hcat(&[&f.a, &f.b]), &hcat(&[&f.c, &f.d])]);
    let jm = base + corr;
    Ok(JumpForm {
        a: f.a.clone(),
        b: f.b.clone(),
        c: f.c.clone(),
        d: f.d.clone(),
        aj: jm.view((0, 0), (n, n)).into_owned(),
        bj: jm.view((0, n), (n, nd)).into_owned(),
        cj: jm.view((n, 0), (ne, n)).into_owned(),
        dj: jm.view((n, n), (ne, nd)).into_owned(),
    })
}

/// Interconnection of an estimation plant with an estimator; error output `e = v − u`.
pub fn closed_loop(p: &EstimationPlant, e: &Estimator) -> Result<FeedbackForm> {
    p.validate()?;
    e.validate()?;
    check(e.be.ncols() == p.ny(), "estimator input must match n_y")?;
    check(e.ce.nrows() == p.nv(), "estimator output must match n_v")?;
    let (n, ne) = (p.n(), e.order());
    let a = vcat(&[
        &hcat(&[&p.a, &Mat::zeros(n, ne)]),
        &hcat(&[&(&e.be * &p.cy), &e.ae]),
    ]);
    Ok(FeedbackForm {
        a,
        bw: vcat(&[&p.bw, &(&e.be * &p.dyw)]),
        b: vcat(&[&p.bd, &(&e.be * &p.dyd)]),
        cz: hcat(&[&p.cz, &Mat::zeros(p.nz(), ne)]),
        dzw: p.dzw.clone(),
        dzd: p.dzd.clone(),
        c: hcat(&[&(&p.cv - &e.de * &p.cy), &(-&e.ce)]),
        dew: &p.dvw - &e.de * &p.dyw,
        d: &p.dvd - &e.de * &p.dyd,
    })
}

/// Sample-and-hold element: holds its state during flow, samples its input at impulses.
pub fn hold_system(dim: usize) -> JumpForm {
    let i = Mat::identity(dim, dim);
    let o = Mat::zeros(dim, dim);
    JumpForm {
        a: i.clone(),
        b: o.clone(),
        c: i.clone(),
        d: o.clone(),
        aj: o.clone(),
        bj: i.clone(),
        cj: o,
        dj: i,
    }
}

/// Contents of a system description file.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemFile {
    Jump(JumpForm),
    Feedback(FeedbackForm),
    Estimation(EstimationPlant),
    JumpEstimation(JumpEstimationPlant),
    Estimator(Estimator),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MatJson {
    Nested(Vec<Vec<f64>>),
    Shaped { rows: usize, cols: usize, data: Vec<f64> },
}

// (key, row dim, col dim)
type Layout = &'static [(&'static str, &'static str, &'static str)];

const JUMP: Layout = &[
    ("A", "n", "n"),
    ("B", "n", "nd"),
    ("C", "ne", "n"),
    ("D", "ne", "nd"),
    ("AJ", "n", "n"),
    ("BJ", "n", "nd"),
    ("CJ", "ne", "n"),
    ("DJ", "ne", "nd"),
];
const FEEDBACK: Layout = &[
    ("A", "n", "n"),
    ("Bw", "n", "nw"),
    ("B", "n", "nd"),
    ("Cz", "nz", "n"),
    ("Dzw", "nz", "nw"),
    ("Dzd", "nz", "nd"),
    ("C", "ne", "n"),
    ("Dew", "ne", "nw"),
    ("D", "ne", "nd"),
];
const ESTIMATION: Layout = &[
    ("A", "n", "n"),
    ("Bw", "n", "nw"),
    ("Bd", "n", "nd"),
    ("Cz", "nz", "n"),
    ("Dzw", "nz", "nw"),
    ("Dzd", "nz", "nd"),
    ("Cv", "nv", "n"),
    ("Dvw", "nv", "nw"),
    ("Dvd", "nv", "nd"),
    ("Cy", "ny", "n"),
    ("Dyw", "ny", "nw"),
    ("Dyd", "ny", "nd"),
];
const JUMP_ESTIMATION: Layout = &[
    ("A", "n", "n"),
    ("Bd", "n", "nd"),
    ("Cv", "nv", "n"),
    ("Dvd", "nv", "nd"),
    ("Cy", "ny", "n"),
    ("Dyd", "ny", "nd"),
    ("AJ", "n", "n"),
    ("BJd", "n", "nd"),
    ("CJv", "nv", "n"),
    ("DJvd", "nv", "nd"),
    ("CJy", "ny", "n"),
    ("DJyd", "ny", "nd"),
];
const ESTIMATOR: Layout = &[
    ("Ae", "ne", "ne"),
    ("Be", "ne", "ny"),
    ("Ce", "nu", "ne"),
    ("De", "nu", "ny"),
];

fn parse_mat(key: &str, v: &Value) -> Result<(Mat, bool)> {
    let mj: MatJson = serde_json::from_value(v.clone())
        .map_err(|e| Error::Invalid(format!("matrix {key}: {e}")))?;
    match mj {
        MatJson::Nested(rows) => {
            let r = rows.len();
            let c = rows.first().map_or(0, |x| x.len());
            if rows.iter().any(|x| x.len() != c) {
                return Err(Error::Invalid(format!("matrix {key}: ragged rows")));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            // an empty nested array fixes neither dimension reliably
            Ok((Mat::from_row_slice(r, c, &flat), r > 0))
        }
        MatJson::Shaped { rows, cols, data } => {
            if data.len() != rows * cols {
                return Err(Error::Invalid(format!("matrix {key}: data length mismatch")));
            }
            Ok((Mat::from_row_slice(rows, cols, &data), true))
        }
    }
}

fn read_layout(obj: &Map<String, Value>, layout: Layout) -> Result<BTreeMap<&'static str, Mat>> {
    let mut dims: BTreeMap<String, usize> = BTreeMap::new();
    if let Some(Value::Object(d)) = obj.get("dims") {
        for (k, v) in d {
            let x = v
                .as_u64()
                .ok_or_else(|| Error::Invalid(format!("dims.{k} must be a count")))?;
            dims.insert(k.clone(), x as usize);
        }
    }
    let mut parsed = BTreeMap::new();
    for &(key, rd, cd) in layout {
        if let Some(v) = obj.get(key) {
            let (m, shaped) = parse_mat(key, v)?;
            if !all_finite(&m) {
                return Err(Error::Invalid(format!("matrix {key} has non-finite entries")));
            }
            if shaped {
                for (dn, val) in [(rd, m.nrows()), (cd, m.ncols())] {
                    match dims.get(dn) {
                        Some(&old) if old != val => {
                            return Err(Error::Dimension(format!(
                                "matrix {key}: dimension {dn} is {val}, expected {old}"
                            )))
                        }
                        _ => {
                            dims.insert(dn.to_string(), val);
                        }
                    }
                }
            }
            parsed.insert(key, (m, shaped));
        }
    }
    let mut out = BTreeMap::new();
    for &(key, rd, cd) in layout {
        let r = dims.get(rd).copied().unwrap_or(0);
        let c = dims.get(cd).copied().unwrap_or(0);
        let m = match parsed.remove(key) {
            Some((m, true)) => m,
            Some((_, false)) | None => Mat::zeros(r, c),
        };
        if m.shape() != (r, c) {
            return Err(Error::Dimension(format!("matrix {key} should be {r}x{c}")));
        }
        out.insert(key, m);
    }
    Ok(out)
}

fn take(m: &mut BTreeMap<&'static str, Mat>, k: &str) -> Mat {
    m.remove(k).expect("layout key")
}

impl SystemFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s)?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Invalid("system description must be a JSON object".into()))?;
        let form = obj
            .get("form")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Invalid("missing \"form\"".into()))?;
        match form {
            "jump" => {
                let mut m = read_layout(obj, JUMP)?;
                let j = JumpForm {
                    a: take(&mut m, "A"),
                    b: take(&mut m, "B"),
                    c: take(&mut m, "C"),
                    d: take(&mut m, "D"),
                    aj: take(&mut m, "AJ"),
                    bj: take(&mut m, "BJ"),
                    cj: take(&mut m, "CJ"),
                    dj: take(&mut m, "DJ"),
                };
                j.validate()?;
                Ok(SystemFile::Jump(j))
            }
            "feedback" => {
                let mut m = read_layout(obj, FEEDBACK)?;
                let f = FeedbackForm {
                    a: take(&mut m, "A"),
                    bw: take(&mut m, "Bw"),
                    b: take(&mut m, "B"),
                    cz: take(&mut m, "Cz"),
                    dzw: take(&mut m, "Dzw"),
                    dzd: take(&mut m, "Dzd"),
                    c: take(&mut m, "C"),
                    dew: take(&mut m, "Dew"),
                    d: take(&mut m, "D"),
                };
                f.validate()?;
                Ok(SystemFile::Feedback(f))
            }
            "estimation" => {
                let mut m = read_layout(obj, ESTIMATION)?;
                let p = EstimationPlant {
                    a: take(&mut m, "A"),
                    bw: take(&mut m, "Bw"),
                    bd: take(&mut m, "Bd"),
                    cz: take(&mut m, "Cz"),
                    dzw: take(&mut m, "Dzw"),
                    dzd: take(&mut m, "Dzd"),
                    cv: take(&mut m, "Cv"),
                    dvw: take(&mut m, "Dvw"),
                    dvd: take(&mut m, "Dvd"),
                    cy: take(&mut m, "Cy"),
                    dyw: take(&mut m, "Dyw"),
                    dyd: take(&mut m, "Dyd"),
                };
                p.validate()?;
                Ok(SystemFile::Estimation(p))
            }
            "jump-estimation" => {
                let mut m = read_layout(obj, JUMP_ESTIMATION)?;
                let p = JumpEstimationPlant {
                    a: take(&mut m, "A"),
                    bd: take(&mut m, "Bd"),
                    cv: take(&mut m, "Cv"),
                    dvd: take(&mut m, "Dvd"),
                    cy: take(&mut m, "Cy"),
                    dyd: take(&mut m, "Dyd"),
                    aj: take(&mut m, "AJ"),
                    bjd: take(&mut m, "BJd"),
                    cjv: take(&mut m, "CJv"),
                    djvd: take(&mut m, "DJvd"),
                    cjy: take(&mut m, "CJy"),
                    djyd: take(&mut m, "DJyd"),
                };
                p.validate()?;
                Ok(SystemFile::JumpEstimation(p))
            }
            "estimator" => {
                let mut m = read_layout(obj, ESTIMATOR)?;
                let e = Estimator {
                    ae: take(&mut m, "Ae"),
                    be: take(&mut m, "Be"),
                    ce: take(&mut m, "Ce"),
                    de: take(&mut m, "De"),
                };
                e.validate()?;
                Ok(SystemFile::Estimator(e))
            }
            other => Err(Error::Invalid(format!("unknown form {other:?}"))),
        }
    }

    pub fn to_value(&self) -> Value {
        fn put(obj: &mut Map<String, Value>, dims: &mut Map<String, Value>, layout: Layout, mats: &[&Mat]) {
            for (&(key, rd, cd), m) in layout.iter().zip(mats) {
                dims.insert(rd.into(), m.nrows().into());
                dims.insert(cd.into(), m.ncols().into());
                obj.insert(key.into(), mat_to_json(m));
            }
        }
        let mut obj = Map::new();
        let mut dims = Map::new();
        let form = match self {
            SystemFile::Jump(j) => {
                put(&mut obj, &mut dims, JUMP, &[&j.a, &j.b, &j.c, &j.d, &j.aj, &j.bj, &j.cj, &j.dj]);
                "jump"
            }
            SystemFile::Feedback(f) => {
                put(
                    &mut obj,
                    &mut dims,
                    FEEDBACK,
                    &[&f.a, &f.bw, &f.b, &f.cz, &f.dzw, &f.dzd, &f.c, &f.dew, &f.d],
                );
                "feedback"
            }
            SystemFile::Estimation(p) => {
                put(
                    &mut obj,
                    &mut dims,
                    ESTIMATION,
                    &[
                        &p.a, &p.bw, &p.bd, &p.cz, &p.dzw, &p.dzd, &p.cv, &p.dvw, &p.dvd, &p.cy, &p.dyw,
                        &p.dyd,
                    ],
                );
                "estimation"
            }
            SystemFile::JumpEstimation(p) => {
                put(
                    &mut obj,
                    &mut dims,
                    JUMP_ESTIMATION,
                    &[
                        &p.a, &p.bd, &p.cv, &p.dvd, &p.cy, &p.dyd, &p.aj, &p.bjd, &p.cjv, &p.djvd, &p.cjy,
                        &p.djyd,
                    ],
                );
                "jump-estimation"
            }
            SystemFile::Estimator(e) => {
                put(&mut obj, &mut dims, ESTIMATOR, &[&e.ae, &e.be, &e.ce, &e.de]);
                "estimator"
            }
        };
        obj.insert("form".into(), form.into());
        obj.insert("dims".into(), Value::Object(dims));
        Value::Object(obj)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }
}

/// Row-major nested array.
pub fn mat_to_json(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| m[(i, j)].into()).collect()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn rand_jump(rng: &mut ChaCha8Rng, n: usize, nd: usize, ne: usize) -> JumpForm {
        JumpForm::new(
            rand_mat(rng, n, n),
            rand_mat(rng, n, nd),
            rand_mat(rng, ne, n),
            rand_mat(rng, ne, nd),
            rand_mat(rng, n, n),
            rand_mat(rng, n, nd),
            rand_mat(rng, ne, n),
            rand_mat(rng, ne, nd),
        )
        .unwrap()
    }

    fn rand_plant(rng: &mut ChaCha8Rng) -> EstimationPlant {
        let (n, nw, nd, nz, nv, ny) = (2, 2, 1, 2, 1, 1);
        EstimationPlant {
            a: rand_mat(rng, n, n),
            bw: rand_mat(rng, n, nw),
            bd: rand_mat(rng, n, nd),
            cz: rand_mat(rng, nz, n),
            dzw: rand_mat(rng, nz, nw) * 0.1,
            dzd: rand_mat(rng, nz, nd),
            cv: rand_mat(rng, nv, n),
            dvw: rand_mat(rng, nv, nw),
            dvd: rand_mat(rng, nv, nd),
            cy: rand_mat(rng, ny, n),
            dyw: rand_mat(rng, ny, nw),
            dyd: rand_mat(rng, ny, nd),
        }
    }

    fn rand_estimator(rng: &mut ChaCha8Rng, order: usize) -> Estimator {
        Estimator {
            ae: rand_mat(rng, order, order),
            be: rand_mat(rng, order, 1),
            ce: rand_mat(rng, 1, order),
            de: rand_mat(rng, 1, 1),
        }
    }

    #[test]
    fn coincident_flow_and_jump_have_no_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut j = rand_jump(&mut rng, 3, 1, 2);
        j.aj = j.a.clone();
        j.bj = j.b.clone();
        j.cj = j.c.clone();
        j.dj = j.d.clone();
        let f = jump_to_feedback(&j);
        assert_eq!(f.bw.amax(), 0.0);
        assert_eq!(f.dew.amax(), 0.0);
        assert_eq!((f.nz(), f.nw()), (4, 4));
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let j = rand_jump(&mut rng, 3, 2, 1);
            let back = feedback_to_jump(&jump_to_feedback(&j)).unwrap();
            for (x, y) in [(&j.aj, &back.aj), (&j.bj, &back.bj), (&j.cj, &back.cj), (&j.dj, &back.dj)] {
                assert!((x - y).amax() < 1e-14);
            }
            assert_eq!(j.a, back.a);
            assert_eq!(j.d, back.d);
        }
    }

    #[test]
    fn trivial_feedback_gives_equal_jump() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = rand_jump(&mut rng, 2, 1, 1);
        let mut f = jump_to_feedback(&j);
        f.bw.fill(0.0);
        f.dew.fill(0.0);
        let back = feedback_to_jump(&f).unwrap();
        assert_eq!(back.aj, back.a);
        assert_eq!(back.dj, back.d);
    }

    #[test]
    fn singular_loop_is_not_well_posed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut f = jump_to_feedback(&rand_jump(&mut rng, 2, 1, 1));
        f.dzw = Mat::identity(3, 3);
        assert_eq!(feedback_to_jump(&f).unwrap_err().code(), "not-well-posed");
    }

    #[test]
    fn zero_estimator_passes_v_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = rand_plant(&mut rng);
        let cl = closed_loop(&p, &Estimator::zeros(2, 1, 1)).unwrap();
        assert_eq!(cl.c.view((0, 0), (1, 2)).into_owned(), p.cv);
        assert_eq!(cl.c.view((0, 2), (1, 2)).amax(), 0.0);
        assert_eq!(cl.dew, p.dvw);
        assert_eq!(cl.d, p.dvd);
        assert_eq!(cl.n(), 4);
    }

    #[test]
    fn perfect_static_estimation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut p = rand_plant(&mut rng);
        p.cy = p.cv.clone();
        p.dyw = p.dvw.clone();
        p.dyd = p.dvd.clone();
        let e = Estimator { ae: Mat::zeros(0, 0), be: Mat::zeros(0, 1), ce: Mat::zeros(1, 0), de: Mat::identity(1, 1) };
        let cl = closed_loop(&p, &e).unwrap();
        assert!(cl.c.amax() < 1e-15 && cl.dew.amax() < 1e-15 && cl.d.amax() < 1e-15);
    }

    #[test]
    fn closed_loop_is_affine_in_estimator() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = rand_plant(&mut rng);
        let e1 = rand_estimator(&mut rng, 2);
        let e2 = rand_estimator(&mut rng, 2);
        let sum = Estimator {
            ae: &e1.ae + &e2.ae,
            be: &e1.be + &e2.be,
            ce: &e1.ce + &e2.ce,
            de: &e1.de + &e2.de,
        };
        let zero = Estimator::zeros(2, 1, 1);
        let cs = closed_loop(&p, &sum).unwrap();
        let c1 = closed_loop(&p, &e1).unwrap();
        let c2 = closed_loop(&p, &e2).unwrap();
        let c0 = closed_loop(&p, &zero).unwrap();
        for (s, a, b, z) in [(&cs.a, &c1.a, &c2.a, &c0.a), (&cs.c, &c1.c, &c2.c, &c0.c), (&cs.d, &c1.d, &c2.d, &c0.d)] {
            assert!(((s - a) - (b - z)).amax() < 1e-12);
        }
    }

    #[test]
    fn hold_system_blocks() {
        let h = hold_system(1);
        assert_eq!(h.a[(0, 0)], 1.0);
        assert_eq!(h.b[(0, 0)], 0.0);
        assert_eq!(h.c[(0, 0)], 1.0);
        assert_eq!(h.d[(0, 0)], 0.0);
        assert_eq!(h.aj[(0, 0)], 0.0);
        assert_eq!(h.bj[(0, 0)], 1.0);
        assert_eq!(h.cj[(0, 0)], 0.0);
        assert_eq!(h.dj[(0, 0)], 1.0);
        let h2 = hold_system(2);
        assert_eq!(h2.a, Mat::identity(2, 2));
        assert_eq!(h2.bj, Mat::identity(2, 2));
        assert_eq!(h2.b, Mat::zeros(2, 2));
    }

    #[test]
    fn json_round_trip_and_inference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let j = rand_jump(&mut rng, 2, 1, 1);
        let s = SystemFile::Jump(j.clone()).to_json_string();
        assert_eq!(SystemFile::from_json_str(&s).unwrap(), SystemFile::Jump(j));

        let auto = SystemFile::from_json_str(r#"{"form":"jump","A":[[0.5,0],[0,0.5]],"AJ":[[0,1],[1,0]]}"#).unwrap();
        match auto {
            SystemFile::Jump(j) => {
                assert_eq!((j.n(), j.nd(), j.ne()), (2, 0, 0));
                assert_eq!(j.b.shape(), (2, 0));
            }
            _ => panic!("wrong form"),
        }
        assert!(SystemFile::from_json_str(r#"{"form":"jump","A":[[1,2]]}"#).is_err());
        assert!(SystemFile::from_json_str("{not json").is_err());
        assert!(SystemFile::from_json_str(r#"{"form":"jump","A":[[1]],"B":[[1],[2]]}"#).is_err());
    }

    #[test]
    fn perf_index_checks() {
        let p = PerfIndex::gain_index(1, 2, 4.0);
        assert_eq!(p.full(), Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -4.0, -4.0])));
        assert!(p.is_nonsingular());
        assert!(PerfIndex::new(-Mat::identity(1, 1), Mat::zeros(1, 1), Mat::identity(1, 1)).is_err());
    }
}

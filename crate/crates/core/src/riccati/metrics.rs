//! Residual norms of the indefinite Riccati equation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{hcat, mul, mul_nt, mul_tn, norm2, spectral_norm_sym_lowrank, thin_qr, Mat};
use crate::problem::{CareProblem, Coeff, Problem};
use crate::shifted::Dae2Base;

/// Residual measures of an approximation `X = ZZᵀ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualMetrics {
    /// `‖B1ᵀ Y Yᵀ E‖₂² / ‖CCᵀ‖₂` for the last increment `Y`, if one is given.
    pub final_res: Option<f64>,
    /// `‖R(ZZᵀ)‖₂ / ‖ZᵀZ‖₂` (infinite for `Z = 0`).
    #[serde(with = "extended_float")]
    pub relative_res: f64,
    /// `‖R(ZZᵀ)‖₂ / ‖CCᵀ‖₂`.
    pub normalized_res: f64,
    /// `‖ZᵀZ‖₂`.
    pub solution_norm: f64,
    /// `‖R(ZZᵀ)‖₂`.
    pub residual_norm: f64,
    pub cc_norm: f64,
}

/// JSON has no infinity; non-finite values are written as strings.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

enum Coefficients {
    Standard { a: Coeff, e: Option<Coeff> },
    Dae2(Arc<Dae2Base>),
}

/// Evaluates `R(ZZᵀ)` for low-rank `Z` in the coordinates of the problem.
///
/// For index-2 problems the residual of the projected equation is used,
/// `ΠᵀR(ΠXΠᵀ)Π` with `C` replaced by `CΠ`.
pub struct ResidualEvaluator {
    coeffs: Coefficients,
    b1: Mat,
    b2: Mat,
    ct: Mat,
    cc_norm: f64,
}

impl ResidualEvaluator {
    pub fn new(problem: &Problem) -> Result<Self> {
        match problem {
            Problem::Standard(p) => Ok(Self::standard(p)),
            Problem::Dae2(p) => Ok(Self::dae2(Arc::new(Dae2Base::new(p.clone())?))),
        }
    }

    pub fn standard(p: &CareProblem) -> Self {
        let ct = p.c.transpose();
        let cc_norm = norm2(&mul_tn(&ct, &ct));
        Self { coeffs: Coefficients::Standard { a: p.a.clone(), e: p.e.clone() }, b1: p.b1.clone(), b2: p.b2.clone(), ct, cc_norm }
    }

    pub fn dae2(base: Arc<Dae2Base>) -> Self {
        let p = base.problem();
        let ct = base.pi_t(&p.c.transpose());
        let cc_norm = norm2(&mul_tn(&ct, &ct));
        let (b1, b2) = (p.b1.clone(), p.b2.clone());
        Self { coeffs: Coefficients::Dae2(base), b1, b2, ct, cc_norm }
    }

    pub fn cc_norm(&self) -> f64 {
        self.cc_norm
    }

    pub fn n(&self) -> usize {
        self.ct.nrows()
    }

    /// `Aᵀ Z` and `Eᵀ Z` (projected for index-2 problems).
    fn apply(&self, z: &Mat) -> (Mat, Mat) {
        match &self.coeffs {
            Coefficients::Standard { a, .. } => (a.mul_t(z), self.apply_et(z)),
            Coefficients::Dae2(base) => {
                let p = base.problem();
                (base.pi_t(&p.a.mul_dense_transpose(&base.pi(z))), p.e.mul_dense_transpose(z))
            }
        }
    }

    /// `Eᵀ Z`.
    pub fn apply_et(&self, z: &Mat) -> Mat {
        match &self.coeffs {
            Coefficients::Standard { e: Some(e), .. } => e.mul_t(z),
            Coefficients::Standard { e: None, .. } => z.clone(),
            Coefficients::Dae2(base) => base.problem().e.mul_dense_transpose(z),
        }
    }

    /// `‖R(ZZᵀ)‖₂` through `R = G S Gᵀ` with `G = [AᵀZ, EᵀZ, Cᵀ]`.
    pub fn residual_norm(&self, z: &Mat) -> f64 {
        let r = z.ncols();
        if r == 0 {
            return self.cc_norm;
        }
        let p = self.ct.ncols();
        let projected;
        let z = match &self.coeffs {
            Coefficients::Dae2(base) => {
                projected = base.pi(z);
                &projected
            }
            Coefficients::Standard { .. } => z,
        };
        let (az, ez) = self.apply(z);
        let zb1 = mul_tn(z, &self.b1);
        let zb2 = mul_tn(z, &self.b2);
        let m = mul_nt(&zb2, &zb2) - mul_nt(&zb1, &zb1);
        let g = hcat(&[&az, &ez, &self.ct]);
        let k = 2 * r + p;
        let mut s = Mat::zeros(k, k);
        for i in 0..r {
            s[(i, r + i)] = 1.0;
            s[(r + i, i)] = 1.0;
        }
        s.view_mut((r, r), (r, r)).copy_from(&(-m));
        for i in 0..p {
            s[(2 * r + i, 2 * r + i)] = 1.0;
        }
        spectral_norm_sym_lowrank(&g, &s)
    }

    /// All measures for `X = ZZᵀ`; `increment` is the factor of the last
    /// outer update, needed for `final_res`.
    pub fn metrics(&self, z: &Mat, increment: Option<&Mat>) -> ResidualMetrics {
        let residual = self.residual_norm(z);
        let solution_norm = if z.ncols() == 0 { 0.0 } else { norm2(&mul_tn(z, z)) };
        let cc = self.cc_norm.max(f64::MIN_POSITIVE);
        let final_res = increment.map(|y| {
            let g = guard_norm(&self.b1, y, &self.apply_et(y));
            g * g / cc
        });
        ResidualMetrics {
            final_res,
            relative_res: if solution_norm > 0.0 { residual / solution_norm } else { f64::INFINITY },
            normalized_res: residual / cc,
            solution_norm,
            residual_norm: residual,
            cc_norm: self.cc_norm,
        }
    }

    /// Explicit `R(X)` for a dense symmetric `X`.
    pub fn dense_residual(&self, x: &Mat) -> Mat {
        let xe = self.apply_et(x).transpose();
        let atxe = self.apply(&xe).0;
        let d = mul_nt(&self.b1, &self.b1) - mul_nt(&self.b2, &self.b2);
        let r = &atxe + atxe.transpose() + mul_tn(&xe, &mul(&d, &xe)) + mul_nt(&self.ct, &self.ct);
        (&r + r.transpose()) * 0.5
    }
}

/// `‖B1ᵀ Y Yᵀ E‖₂` from `B1`, `Y` and `EᵀY`, using `EᵀY = QR` so that
/// only the small product `(B1ᵀY) Rᵀ` enters the norm.
pub fn guard_norm(b1: &Mat, y: &Mat, et_y: &Mat) -> f64 {
    if b1.ncols() == 0 || y.ncols() == 0 {
        return 0.0;
    }
    let m = mul_tn(b1, y);
    let r = if et_y.nrows() >= et_y.ncols() { thin_qr(et_y).1 } else { et_y.transpose() };
    norm2(&mul_nt(&m, &r))
}

/// Metrics of `ZZᵀ` for a problem; `increment` is the last update factor.
pub fn outer_residual_metrics(problem: &Problem, z: &Mat, increment: Option<&Mat>) -> Result<ResidualMetrics> {
    Ok(ResidualEvaluator::new(problem)?.metrics(z, increment))
}

/// `AᵀXE + EᵀXA + EᵀX(B1B1ᵀ - B2B2ᵀ)XE + CᵀC` for dense data.
pub fn care_residual_dense(a: &Mat, e: &Mat, b1: &Mat, b2: &Mat, c: &Mat, x: &Mat) -> Mat {
    let xe = mul(x, e);
    let atxe = mul_tn(a, &xe);
    let d = mul_nt(b1, b1) - mul_nt(b2, b2);
    let r = &atxe + atxe.transpose() + mul_tn(&xe, &mul(&d, &xe)) + mul_tn(c, c);
    (&r + r.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_rank_norm_matches_dense_residual() {
        let n = 9;
        let a = Mat::from_fn(n, n, |i, j| if i == j { -3.0 } else { 0.1 * ((i + 2 * j) % 5) as f64 });
        let e = Mat::from_fn(n, n, |i, j| {
            if i == j {
                1.5
            } else if i.abs_diff(j) == 1 {
                0.2
            } else {
                0.0
            }
        });
        let b1 = Mat::from_fn(n, 1, |i, _| 0.1 * i as f64);
        let b2 = Mat::from_fn(n, 2, |i, j| ((i + j) % 3) as f64);
        let c = Mat::from_fn(2, n, |i, j| if i == j % 2 { 1.0 } else { 0.0 });
        let z = Mat::from_fn(n, 3, |i, j| ((i * j + 1) % 4) as f64 * 0.1);
        let p = CareProblem::new(Coeff::Dense(a.clone()), Some(Coeff::Dense(e.clone())), b1.clone(), b2.clone(), c.clone()).unwrap();
        let ev = ResidualEvaluator::standard(&p);
        let x = mul_nt(&z, &z);
        let dense = care_residual_dense(&a, &e, &b1, &b2, &c, &x);
        assert!((ev.residual_norm(&z) - norm2(&dense)).abs() < 1e-12 * norm2(&dense));
        assert!((&ev.dense_residual(&x) - &dense).norm() < 1e-12 * dense.norm());
        let m = ev.metrics(&z, Some(&z));
        let g = norm2(&(b1.transpose() * &x * &e));
        assert!((m.final_res.unwrap() - g * g / norm2(&(&c * c.transpose()))).abs() < 1e-12 * m.final_res.unwrap());
    }

    #[test]
    fn zero_factor_reports_unit_normalized_and_infinite_relative() {
        let p = CareProblem::new(Coeff::Dense(-Mat::identity(3, 3)), None, Mat::zeros(3, 1), Mat::identity(3, 1), Mat::from_element(1, 3, 1.0)).unwrap();
        let m = ResidualEvaluator::standard(&p).metrics(&Mat::zeros(3, 0), None);
        assert!((m.normalized_res - 1.0).abs() < 1e-15);
        assert!(m.relative_res.is_infinite());
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"relative_res\":\"inf\""), "{json}");
        let back: ResidualMetrics = serde_json::from_str(&json).unwrap();
        assert!(back.relative_res.is_infinite());
    }
}

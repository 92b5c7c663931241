//! Characteristic and transgression forms built from a modified connection.
//!
//! The first half works pointwise for any rank `n ≤ 4` on top of the
//! bigraded algebra; the second half assembles the fields on the sphere
//! bundle of a surface (`n = 2`) that enter the Gauss–Bonnet–Chern integrand.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::{berezin, exp_truncated, pfaffian, BigradedElement, SkewMatrixValuedForm};
use crate::connection::{curvature_from_partials, ConnectionModel, ConnectionPair, CurvatureData};
use crate::error::{GbcError, Result};
use crate::forms::{mask_and_sign, PointwiseForm};
use crate::manifolds::SbPoint;
use crate::metric::indicatrix::{fiber_volume, fiber_volume_form, log_volume_gradient};
use crate::quadrature::{differential_from_partials, gauss_legendre, partial_derivatives, FdConfig, FormField};

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn double_factorial(k: i64) -> f64 {
    let mut acc = 1.0;
    let mut i = k;
    while i > 1 {
        acc *= i as f64;
        i -= 2;
    }
    acc
}

/// `Γ(m/2)` for a positive integer `m`, exact up to rounding.
pub fn gamma_half(m: usize) -> f64 {
    assert!(m > 0, "Γ has a pole at 0");
    if m.is_multiple_of(2) {
        factorial(m / 2 - 1)
    } else {
        // Γ(j + ½) = (2j)! √π / (4^j j!)
        let j = (m - 1) / 2;
        factorial(2 * j) * PI.sqrt() / (4f64.powi(j as i32) * factorial(j))
    }
}

/// `∫₀^∞ t^a e^{−t²} dt` by composite Gauss–Legendre on `[0, 12]`.
pub fn gaussian_moment(a: usize) -> f64 {
    let rule = gauss_legendre(20).composite(0.0, 12.0, 48);
    let terms: Vec<f64> =
        rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * t.powi(a as i32) * (-t * t).exp()).collect();
    crate::quadrature::pairwise_sum(&terms)
}

/// `ε(n)`: `1` for even `n`, `𝕚` for odd `n`.
pub fn epsilon_n(n: usize) -> Complex64 {
    if n.is_multiple_of(2) {
        re(1.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// `vol(S^{n−1}) = 2π^{n/2}/Γ(n/2)`.
pub fn sphere_volume(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Coefficients `c_k` with `Π = Σ c_k Φ_k`, from the Γ-function expression.
pub fn pi_coefficients_gamma(n: usize) -> Vec<f64> {
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    (0..=(n - 1) / 2)
        .map(|k| {
            let m = n - 1 - 2 * k;
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / PI.powf(n as f64 / 2.0) * s * gamma_half(n - 2 * k)
                / (factorial(k) * factorial(m) * 2f64.powi(2 * k as i32 + 1))
        })
        .collect()
}

/// Coefficients `c_k` with `Π = Σ c_k Φ_k`, from the `(2π)`-normalized
/// parity-split expression.
pub fn pi_coefficients_closed(n: usize) -> Vec<f64> {
    let p = n / 2;
    if n.is_multiple_of(2) {
        (0..p)
            .map(|k| {
                let s = if k % 2 == 0 { -1.0 } else { 1.0 };
                s / ((2.0 * PI).powi(p as i32)
                    * double_factorial(2 * (p - k) as i64 - 1)
                    * factorial(k)
                    * 2f64.powi(k as i32))
            })
            .collect()
    } else {
        let binom = |k: usize| factorial(p) / (factorial(k) * factorial(p - k));
        (0..=p)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s * binom(k) / (PI.powi(p as i32) * 2f64.powi(2 * p as i32 + 1) * factorial(p))
            })
            .collect()
    }
}

/// Coefficient of `Φ₀` in `Υ₁`: `(−1)^{n−1} Γ(n/2) / (2π^{n/2}(n−1)!)`.
pub fn upsilon1_coefficient(n: usize) -> f64 {
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    sign * gamma_half(n) / (2.0 * PI.powf(n as f64 / 2.0) * factorial(n - 1))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn check_rank(n: usize, omega: &SkewMatrixValuedForm, varpi: &SkewMatrixValuedForm) -> Result<()> {
    if omega.rank() != n || varpi.rank() != n {
        return Err(GbcError::Structural(format!(
            "rank mismatch: n = {n}, curvature rank {}, connection rank {}",
            omega.rank(),
            varpi.rank()
        )));
    }
    Ok(())
}

/// `Φ_k = Σ ε_{α₁…α_{n−1}} Ω_{α₁}^{α₂} ∧ … ∧ ϖ_{α_{2k+1}}^n ∧ … ∧ ϖ_{α_{n−1}}^n`
/// by explicit enumeration of permutations.
pub fn phi_k_enumeration(
    n: usize,
    omega: &SkewMatrixValuedForm,
    varpi: &SkewMatrixValuedForm,
    k: usize,
) -> Result<PointwiseForm> {
    check_rank(n, omega, varpi)?;
    if 2 * k > n - 1 {
        return Err(GbcError::Validation(format!("Φ_{k} undefined for n = {n}")));
    }
    let dim = omega.entry(0, 0).dim();
    let mut out = PointwiseForm::zero(dim);
    for perm in permutations(n - 1) {
        let (_, sign) = mask_and_sign(&perm).expect("permutation");
        let mut acc = PointwiseForm::scalar(dim, sign);
        for j in 0..k {
            acc = acc.wedge(omega.entry(perm[2 * j], perm[2 * j + 1]));
        }
        for &a in &perm[2 * k..] {
            acc = acc.wedge(varpi.entry(a, n - 1));
        }
        out = &out + &acc;
    }
    Ok(out)
}

/// `∇ℓ = Σ_α ϖ_n^α ⊗ e_α ∈ 𝒜^{1,1}` with `ℓ = e_n`.
pub fn nabla_ell(varpi: &SkewMatrixValuedForm) -> BigradedElement {
    let n = varpi.rank();
    let mut out = BigradedElement::zero(n, varpi.entry(0, 0).dim());
    for a in 0..n - 1 {
        out = out.add(&BigradedElement::from_form(n, varpi.entry(n - 1, a), &[a])).expect("same shape");
    }
    out
}

fn ell(n: usize, dim: usize) -> BigradedElement {
    BigradedElement::term(n, dim, &[], &[n - 1], re(1.0))
}

fn power(a: &BigradedElement, k: usize) -> BigradedElement {
    let mut out = BigradedElement::one(a.rank(), a.form_dim());
    for _ in 0..k {
        out = out.product(a).expect("same shape");
    }
    out
}

/// `Φ_k = 2^k (−1)^{m(m+1)/2} 𝓑(ℓ · Ω^k · (∇ℓ)^m)` with `m = n−1−2k`,
/// evaluated in the bigraded algebra.
pub fn phi_k(n: usize, omega: &SkewMatrixValuedForm, varpi: &SkewMatrixValuedForm, k: usize) -> Result<PointwiseForm> {
    check_rank(n, omega, varpi)?;
    if 2 * k > n - 1 {
        return Err(GbcError::Validation(format!("Φ_{k} undefined for n = {n}")));
    }
    let m = n - 1 - 2 * k;
    let dim = omega.entry(0, 0).dim();
    let prod = ell(n, dim).product(&power(&omega.to_bivector(), k))?.product(&power(&nabla_ell(varpi), m))?;
    let sign = if (m * (m + 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let (form, imag) = berezin(&prod).split_real();
    debug_assert!(imag == 0.0);
    Ok(form.scale(sign * 2f64.powi(k as i32)))
}

/// All `Φ_k`, `k = 0 … ⌊(n−1)/2⌋`.
pub fn phi_all(n: usize, omega: &SkewMatrixValuedForm, varpi: &SkewMatrixValuedForm) -> Result<Vec<PointwiseForm>> {
    (0..=(n - 1) / 2).map(|k| phi_k(n, omega, varpi, k)).collect()
}

/// `ℓ·Ξ`, with `Ξ` the `𝒜^{n−1,n−1}` component of `exp(−(𝕚t∇ℓ + Ω))`.
pub fn ell_xi(n: usize, omega: &SkewMatrixValuedForm, varpi: &SkewMatrixValuedForm, t: f64) -> Result<BigradedElement> {
    check_rank(n, omega, varpi)?;
    let theta = nabla_ell(varpi).scale(Complex64::new(0.0, t)).add(&omega.to_bivector())?;
    let neg = theta.scale(re(-1.0));
    let xi = exp_truncated(&neg, neg.degree_bound()).component(n - 1, n - 1);
    ell(n, omega.entry(0, 0).dim()).product(&xi)
}

/// Right-hand side of the `ℓ·Ξ` expansion in terms of the `Φ_k`.
pub fn ell_xi_closed_form(n: usize, phis: &[PointwiseForm], t: f64) -> BigradedElement {
    let dim = phis[0].dim();
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let pre = re(sign) / epsilon_n(n + 1);
    let top: Vec<usize> = (0..n).collect();
    let mut out = BigradedElement::zero(n, dim);
    for (k, phi) in phis.iter().enumerate() {
        let m = n - 1 - 2 * k;
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = s * t.powi(m as i32) / (factorial(k) * factorial(m) * 2f64.powi(k as i32));
        out = out.add(&BigradedElement::from_form(n, phi, &top).scale(pre * c)).expect("same shape");
    }
    out
}

/// `max |ℓ·Ξ − closed form|` over all coefficients.
pub fn ell_xi_residual(n: usize, omega: &SkewMatrixValuedForm, varpi: &SkewMatrixValuedForm, t: f64) -> Result<f64> {
    let lhs = ell_xi(n, omega, varpi, t)?;
    let phis: Vec<PointwiseForm> =
        (0..=(n - 1) / 2).map(|k| phi_k_enumeration(n, omega, varpi, k)).collect::<Result<_>>()?;
    Ok(lhs.sub(&ell_xi_closed_form(n, &phis, t))?.max_abs())
}

/// `Ω^∇ = Pf(−Ω)/(2π)^{n/2}`; zero for odd `n`.
pub fn omega_pfaffian(omega: &SkewMatrixValuedForm) -> PointwiseForm {
    pfaffian(omega).scale((2.0 * PI).powf(-(omega.rank() as f64) / 2.0))
}

/// `(−1)^p/(2^{2p}π^p p!) Σ ε_{i₁…i_{2p}} Ω_{i₁}^{i₂} ∧ … ∧ Ω_{i_{2p−1}}^{i_{2p}}`
/// for `n = 2p`, and zero for odd `n`.
pub fn omega_epsilon(omega: &SkewMatrixValuedForm) -> PointwiseForm {
    let n = omega.rank();
    let dim = omega.entry(0, 0).dim();
    if n % 2 == 1 {
        return PointwiseForm::zero(dim);
    }
    let p = n / 2;
    let mut out = PointwiseForm::zero(dim);
    for perm in permutations(n) {
        let (_, sign) = mask_and_sign(&perm).expect("permutation");
        let mut acc = PointwiseForm::scalar(dim, sign);
        for j in 0..p {
            acc = acc.wedge(omega.entry(perm[2 * j], perm[2 * j + 1]));
        }
        out = &out + &acc;
    }
    let s = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    out.scale(s / (4f64.powi(p as i32) * PI.powi(p as i32) * factorial(p)))
}

/// `Π = Σ c_k Φ_k`.
pub fn pi_form(n: usize, phis: &[PointwiseForm]) -> PointwiseForm {
    let c = pi_coefficients_gamma(n);
    let mut out = PointwiseForm::zero(phis[0].dim());
    for (ck, phi) in c.iter().zip(phis) {
        out = &out + &phi.scale(*ck);
    }
    out
}

/// `Υ₁`, the `Φ₀` part of `Π`.
pub fn upsilon1(n: usize, phi0: &PointwiseForm) -> PointwiseForm {
    phi0.scale(upsilon1_coefficient(n))
}

/// `Υ₂ = Π − Υ₁`.
pub fn upsilon2(n: usize, phis: &[PointwiseForm]) -> PointwiseForm {
    &pi_form(n, phis) - &upsilon1(n, &phis[0])
}

/// `∂D_s/∂s = ½ Σ (ϖ^∇ − ϖ^D)_i^j ⊗ e_i∧e_j`.
fn connection_difference(d: &SkewMatrixValuedForm, nabla: &SkewMatrixValuedForm) -> Result<SkewMatrixValuedForm> {
    let n = d.rank();
    SkewMatrixValuedForm::new((0..n).map(|i| (0..n).map(|j| nabla.entry(i, j) - d.entry(i, j)).collect()).collect())
}

/// `Υ₀ = (2π)^{−n/2} ∫₀¹ 𝓑(exp(−Ω_s)·∂D_s/∂s) ds` along `D_s = (1−s)D + s∇`,
/// from both connection matrices and their exterior derivatives.
///
/// For `n < 4` the integrand does not depend on `s` and one node is exact;
/// otherwise Gauss–Legendre of the given order is used.
pub fn upsilon0(
    d: &SkewMatrixValuedForm,
    d_d: &[Vec<PointwiseForm>],
    nabla: &SkewMatrixValuedForm,
    d_nabla: &[Vec<PointwiseForm>],
    order: usize,
) -> Result<PointwiseForm> {
    let n = d.rank();
    if nabla.rank() != n || d_d.len() != n || d_nabla.len() != n {
        return Err(GbcError::Structural("connection matrices of different rank".into()));
    }
    let dim = d.entry(0, 0).dim();
    let diff = connection_difference(d, nabla)?.to_bivector();
    let rule = if n < 4 { crate::quadrature::Rule { nodes: vec![0.5], weights: vec![1.0] } } else { gauss_legendre(order).on(0.0, 1.0) };
    let mut out = PointwiseForm::zero(dim);
    for (s, w) in rule.nodes.iter().zip(&rule.weights) {
        let omega_s = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = &d_nabla[i][j].scale(*s) + &d_d[i][j].scale(1.0 - s);
                        for k in 0..n {
                            let a = &nabla.entry(i, k).scale(*s) + &d.entry(i, k).scale(1.0 - s);
                            let b = &nabla.entry(k, j).scale(*s) + &d.entry(k, j).scale(1.0 - s);
                            acc = &acc - &a.wedge(&b);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let neg = SkewMatrixValuedForm::antisymmetrized(omega_s)?.0.to_bivector().scale(re(-1.0));
        let integrand = exp_truncated(&neg, neg.degree_bound()).product(&diff)?;
        let (form, imag) = berezin(&integrand).split_real();
        debug_assert!(imag == 0.0);
        out = &out + &form.scale(*w);
    }
    Ok(out.scale((2.0 * PI).powf(-(n as f64) / 2.0)))
}

/// `Θ_t = t²/2 + 𝕚t∇ℓ + Ω` and `U_t = 𝓑(e^{−Θ_t})` at one point.
#[derive(Clone, Debug)]
pub struct MathaiQuillenState {
    pub t: f64,
    pub theta_t: BigradedElement,
    pub u_t: PointwiseForm,
    /// Largest imaginary coefficient discarded from `U_t`.
    pub imag_residue: f64,
}

pub fn mathai_quillen_ut(t: f64, nabla_ell: &BigradedElement, omega: &SkewMatrixValuedForm) -> Result<MathaiQuillenState> {
    let n = omega.rank();
    let dim = omega.entry(0, 0).dim();
    let rest = nabla_ell.scale(Complex64::new(0.0, t)).add(&omega.to_bivector())?;
    let theta_t = BigradedElement::scalar(n, dim, re(0.5 * t * t)).add(&rest)?;
    let neg = rest.scale(re(-1.0));
    let b = berezin(&exp_truncated(&neg, neg.degree_bound()));
    let (u, imag) = b.scale(re((-0.5 * t * t).exp())).split_real();
    Ok(MathaiQuillenState { t, theta_t, u_t: u, imag_residue: imag })
}

/// `𝓑(ℓ·e^{−Θ_t})`, the potential in `dU_t/dt = −𝕚 d𝓑(ℓ·e^{−Θ_t})`.
pub fn mathai_quillen_potential(
    t: f64,
    nabla_ell: &BigradedElement,
    omega: &SkewMatrixValuedForm,
) -> Result<PointwiseForm<Complex64>> {
    let n = omega.rank();
    let dim = omega.entry(0, 0).dim();
    let neg = nabla_ell.scale(Complex64::new(0.0, t)).add(&omega.to_bivector())?.scale(re(-1.0));
    let e = exp_truncated(&neg, neg.degree_bound());
    Ok(berezin(&ell(n, dim).product(&e)?).scale(re((-0.5 * t * t).exp())))
}

/// Numerical settings for the sphere-bundle forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormSettings {
    pub curvature: FdConfig,
    pub volume: FdConfig,
    pub fiber_order: usize,
    pub s_order: usize,
}

impl Default for FormSettings {
    fn default() -> Self {
        FormSettings { curvature: FdConfig::CURVATURE, volume: FdConfig::VOLUME, fiber_order: 64, s_order: 8 }
    }
}

/// Index of each 1-form in [`TransgressionBundle::potentials`].
pub mod slot {
    pub const NABLA: usize = 0;
    pub const D: usize = 4;
    pub const UPSILON0: usize = 8;
    pub const UPSILON1: usize = 9;
    pub const UPSILON2: usize = 10;
    pub const PI: usize = 11;
    pub const LEN: usize = 12;
}

/// Every form entering the integrand at one sphere-bundle point.
#[derive(Clone, Debug)]
pub struct FormsAtPoint {
    pub pair: ConnectionPair,
    pub curvature_nabla: CurvatureData,
    pub curvature_d: CurvatureData,
    pub phi: Vec<PointwiseForm>,
    pub pi: PointwiseForm,
    pub upsilon0: PointwiseForm,
    pub upsilon1: PointwiseForm,
    pub upsilon2: PointwiseForm,
    pub d_pi: PointwiseForm,
    pub d_upsilon0: PointwiseForm,
    pub d_upsilon2: PointwiseForm,
    pub omega_nabla: PointwiseForm,
    pub omega_d: PointwiseForm,
    pub volume: f64,
    pub dlog_volume: [f64; 2],
    pub frak_e: PointwiseForm,
    /// `(Ω^D + 𝔈)/V`.
    pub integrand: PointwiseForm,
}

/// Transgression forms of the modification `∇` of a metric-compatible `D` on
/// the sphere bundle of a Finsler surface.
#[derive(Clone, Debug)]
pub struct TransgressionBundle {
    pub model: ConnectionModel,
    pub settings: FormSettings,
    pub epsilon_n: Complex64,
}

const N: usize = 2;

fn skew_of(forms: &[PointwiseForm]) -> Result<SkewMatrixValuedForm> {
    Ok(SkewMatrixValuedForm::antisymmetrized(vec![forms[0..2].to_vec(), forms[2..4].to_vec()])?.0)
}

impl TransgressionBundle {
    pub fn new(model: ConnectionModel, settings: FormSettings) -> Self {
        TransgressionBundle { model, settings, epsilon_n: epsilon_n(N) }
    }

    /// `ϖ^∇`, `ϖ^D` (row-major), `Υ₀`, `Υ₁`, `Υ₂`, `Π` on one chart.
    pub fn potentials(&self, chart: usize) -> FormField {
        let order = self.settings.s_order;
        self.model.field(chart).map(slot::LEN, move |_, mut v| {
            let nabla = skew_of(&v[slot::NABLA..slot::NABLA + 4])?;
            let d = skew_of(&v[slot::D..slot::D + 4])?;
            // Ω_s only contributes in fiber degree ≥ 4, so dϖ is not needed for n = 2
            let zeros = vec![vec![PointwiseForm::zero(3); 2]; 2];
            let u0 = upsilon0(&d, &zeros, &nabla, &zeros, order)?;
            let phi0 = nabla.entry(0, 1).clone();
            let phis = vec![phi0.clone()];
            v.push(u0);
            v.push(upsilon1(N, &phi0));
            v.push(upsilon2(N, &phis));
            v.push(pi_form(N, &phis));
            Ok(v)
        })
    }

    pub fn volume(&self, chart: usize, x: [f64; 2]) -> Result<f64> {
        fiber_volume(&self.model.metric, chart, x, self.settings.fiber_order)
    }

    pub fn evaluate(&self, p: SbPoint) -> Result<FormsAtPoint> {
        let field = self.potentials(p.chart);
        let c = p.coords();
        let vals = field.eval(&c)?;
        let parts = partial_derivatives(&field, &c, self.settings.curvature)?;
        let pair = self.model.pair(p)?;
        let curvature_nabla = curvature_from_partials(&parts, &vals, slot::NABLA, N);
        let curvature_d = curvature_from_partials(&parts, &vals, slot::D, N);
        let omega_nabla = omega_pfaffian(&curvature_nabla.skew()?);
        let omega_d = omega_pfaffian(&curvature_d.skew()?);
        let (volume, dlog_volume) =
            log_volume_gradient(&self.model.metric, p.chart, p.x, self.settings.fiber_order, self.settings.volume)?;
        let d_upsilon0 = differential_from_partials(&parts, slot::UPSILON0);
        let d_upsilon2 = differential_from_partials(&parts, slot::UPSILON2);
        let upsilon1 = vals[slot::UPSILON1].clone();
        let dlogv = PointwiseForm::one_form(&[dlog_volume[0], dlog_volume[1], 0.0]);
        let frak_e = &(&(-d_upsilon0.clone()) - &dlogv.wedge(&upsilon1)) - &d_upsilon2;
        let integrand = (&omega_d + &frak_e).scale(1.0 / volume);
        Ok(FormsAtPoint {
            pair,
            curvature_nabla,
            curvature_d,
            phi: vec![vals[slot::NABLA + 1].clone()],
            pi: vals[slot::PI].clone(),
            upsilon0: vals[slot::UPSILON0].clone(),
            upsilon1,
            upsilon2: vals[slot::UPSILON2].clone(),
            d_pi: differential_from_partials(&parts, slot::PI),
            d_upsilon0,
            d_upsilon2,
            omega_nabla,
            omega_d,
            volume,
            dlog_volume,
            frak_e,
            integrand,
        })
    }

    /// The GBC integrand `(Ω^D + 𝔈)/V` as a field on one chart.
    pub fn integrand_field(&self, chart: usize) -> FormField {
        let me = self.clone();
        FormField::new(3, 1, move |c| {
            Ok(vec![me.evaluate(SbPoint::new(chart, [c[0], c[1]], c[2]))?.integrand])
        })
    }

    /// `Υ₁/V` as a field on one chart.
    pub fn upsilon1_over_volume(&self, chart: usize) -> FormField {
        let me = self.clone();
        self.potentials(chart).map(1, move |c, v| {
            let vol = me.volume(chart, [c[0], c[1]])?;
            Ok(vec![v[slot::UPSILON1].scale(1.0 / vol)])
        })
    }

    /// `U_t` of the modified connection as a field on one chart.
    pub fn mathai_quillen_field(&self, chart: usize, t: f64) -> FormField {
        let field = self.model.field(chart);
        let cfg = self.settings.curvature;
        FormField::new(3, 3, move |c| {
            let vals = field.eval(c)?;
            let parts = partial_derivatives(&field, c, cfg)?;
            let curv = curvature_from_partials(&parts, &vals, slot::NABLA, N).skew()?;
            let ne = nabla_ell(&skew_of(&vals[slot::NABLA..slot::NABLA + 4])?);
            let state = mathai_quillen_ut(t, &ne, &curv)?;
            let (pre, pim) = mathai_quillen_potential(t, &ne, &curv)?.split_real_imag();
            Ok(vec![state.u_t, pre, pim])
        })
    }

    /// Pointwise residuals of the transgression identities at `p`.
    pub fn identity_residuals(&self, p: SbPoint) -> Result<IdentityResiduals> {
        let f = self.evaluate(p)?;
        let c = p.coords();
        let cfg = self.settings.curvature;
        let d_pi = (&f.d_pi - &f.omega_nabla).max_abs();
        let d_u1v = partial_derivatives(&self.upsilon1_over_volume(p.chart), &c, cfg)?;
        let exactness = (&f.integrand - &differential_from_partials(&d_u1v, 0)).max_abs();
        let u0_only = self.potentials(p.chart).map(1, |_, v| Ok(vec![v[slot::UPSILON0].clone()]));
        let d_u0 = differential_from_partials(&partial_derivatives(&u0_only, &c, cfg)?, 0);
        let chern_weil = (&d_u0 - &(&f.omega_d - &f.omega_nabla)).max_abs();
        let dnu = fiber_volume_form(&self.model.metric, p.chart, p.x, p.theta)?;
        let fiber_volume = (f.phi[0].get(0b100) - dnu).abs();
        let geom = self.model.geometry(p)?;
        let nat = crate::connection::to_natural_frame(&f.pair.nabla, &geom.frame)?;
        let compatibility = crate::connection::metric_compatibility_residual(&nat, &geom);
        Ok(IdentityResiduals { d_pi, exactness, chern_weil, fiber_volume, compatibility })
    }
}

/// `max |·|` residuals of the pointwise identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    /// `dΠ − Ω^∇`.
    pub d_pi: f64,
    /// `(Ω^D + 𝔈)/V − d(Υ₁/V)`.
    pub exactness: f64,
    /// `dΥ₀ − (Ω^D − Ω^∇)`.
    pub chern_weil: f64,
    /// `Φ₀(∂_θ) − dν(∂_θ)`.
    pub fiber_volume: f64,
    /// Full metric compatibility of `∇`.
    pub compatibility: f64,
}

impl IdentityResiduals {
    pub fn max(&self, other: &Self) -> Self {
        IdentityResiduals {
            d_pi: self.d_pi.max(other.d_pi),
            exactness: self.exactness.max(other.exactness),
            chern_weil: self.chern_weil.max(other.chern_weil),
            fiber_volume: self.fiber_volume.max(other.fiber_volume),
            compatibility: self.compatibility.max(other.compatibility),
        }
    }
}

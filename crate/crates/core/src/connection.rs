//! Nonlinear connections, linear connections on the pulled-back tangent
//! bundle of a Finsler surface, their modification and curvature.
//!
//! Connection forms are stored by their components on the holonomic chart
//! coordinates `(x¹, x², θ)` of the sphere bundle. `forms[i][j]` is `θ_i^j`
//! with `∇𝔰_i = θ_i^j ⊗ 𝔰_j` (natural frame) or `ϖ_i^j` with
//! `∇e_i = ϖ_i^j ⊗ e_j` (orthonormal frame).

use serde::{Deserialize, Serialize};

use crate::algebra::SkewMatrixValuedForm;
use crate::error::{GbcError, Result};
use crate::forms::PointwiseForm;
use crate::manifolds::{Atlas, SbPoint, Surface};
use crate::metric::finsler::{FinslerMetric, MetricJet};
use crate::metric::frame::frame_rows;
use crate::metric::indicatrix::indicatrix_point;
use crate::quadrature::{differential_from_partials, partial_derivatives, FdConfig, FormField};

pub type M2 = [[f64; 2]; 2];
/// Three-index array `[a][b][c]` over `{0, 1}`.
pub type T2 = [[[f64; 2]; 2]; 2];

fn inv2(m: &M2) -> Result<(M2, f64)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(GbcError::InvalidMetric(format!("singular matrix {m:?}")));
    }
    Ok(([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]], det))
}

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Choice of nonlinear connection on the slit tangent bundle.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum EhresmannSpec {
    /// `N^i_j = ∂G^i/∂y^j` from the geodesic spray of `F`.
    #[default]
    Spray,
    /// `N^j_A = C^j_{Ak} y^k` for a constant table `c[j][A][k]`.
    Explicit { table: T2 },
}

/// Coefficients `n[j][A] = N^j_A` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EhresmannData {
    pub n: M2,
}

/// Spray coefficients `N^i_j = ∂G^i/∂y^j` with
/// `G^i = ¼ g^{il}([F²]_{x^k y^l} y^k − [F²]_{x^l})`.
pub fn spray_coefficients(jet: &MetricJet, y: [f64; 2], g_inv: &M2, dg_dy: &[M2; 2]) -> EhresmannData {
    let mut rhs = [0.0; 2];
    for l in 0..2 {
        rhs[l] = (0..2).map(|k| jet.xy[k][l] * y[k]).sum::<f64>() - jet.x[l];
    }
    let mut n = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for l in 0..2 {
                // ∂_j g^{il} = −g^{ia} ∂_j g_{ab} g^{bl}
                let mut dginv = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        dginv -= g_inv[i][a] * dg_dy[j][a][b] * g_inv[b][l];
                    }
                }
                let drhs: f64 = (0..2).map(|k| jet.xyy[k][l][j] * y[k]).sum::<f64>() + jet.xy[j][l] - jet.xy[l][j];
                acc += dginv * rhs[l] + g_inv[i][l] * drhs;
            }
            n[i][j] = 0.25 * acc;
        }
    }
    EhresmannData { n }
}

impl EhresmannSpec {
    pub fn evaluate(&self, jet: &MetricJet, y: [f64; 2], g_inv: &M2, dg_dy: &[M2; 2]) -> EhresmannData {
        match self {
            EhresmannSpec::Spray => spray_coefficients(jet, y, g_inv, dg_dy),
            EhresmannSpec::Explicit { table } => {
                let mut n = [[0.0; 2]; 2];
                for j in 0..2 {
                    for a in 0..2 {
                        n[j][a] = table[j][a][0] * y[0] + table[j][a][1] * y[1];
                    }
                }
                EhresmannData { n }
            }
        }
    }
}

/// Spray connection at an arbitrary nonzero `y` (not only on the indicatrix).
pub fn spray_connection(metric: &FinslerMetric, chart: usize, x: [f64; 2], y: [f64; 2]) -> Result<EhresmannData> {
    let jet = metric.jet(chart, x, y)?;
    let g = [[0.5 * jet.yy[0][0], 0.5 * jet.yy[0][1]], [0.5 * jet.yy[1][0], 0.5 * jet.yy[1][1]]];
    let (g_inv, _) = inv2(&g)?;
    let dg_dy = dg_from(&jet.yyy);
    Ok(spray_coefficients(&jet, y, &g_inv, &dg_dy))
}

fn dg_from(t: &T2) -> [M2; 2] {
    let mut out = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[k][i][j] = 0.5 * t[i][j][k];
            }
        }
    }
    out
}

/// Conversion between chart 1-forms on the sphere bundle and the
/// `γ_A dx^A + ϱ_k δy^k` decomposition, with `δy^k = dy^k + N^k_A dx^A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Splitting {
    pub n: M2,
    /// `∂y/∂x¹`, `∂y/∂x²`, `∂y/∂θ` of the `F = 1` representative.
    pub dy: [[f64; 2]; 3],
    /// `∂θ/∂y^k`.
    pub dtheta_dy: [f64; 2],
}

impl Splitting {
    /// Chart components of `δy^k`.
    pub fn delta_y(&self, k: usize) -> [f64; 3] {
        [self.dy[0][k] + self.n[k][0], self.dy[1][k] + self.n[k][1], self.dy[2][k]]
    }

    pub fn assemble(&self, gamma: [f64; 2], rho: [f64; 2]) -> [f64; 3] {
        let mut out = [gamma[0], gamma[1], 0.0];
        for k in 0..2 {
            let d = self.delta_y(k);
            for a in 0..3 {
                out[a] += rho[k] * d[a];
            }
        }
        out
    }

    /// `γ_A = β(δ/δx^A)` and `ϱ_k = β(∂_θ) ∂θ/∂y^k`.
    pub fn split(&self, beta: [f64; 3]) -> ([f64; 2], [f64; 2]) {
        let mut gamma = [0.0; 2];
        for a in 0..2 {
            let lift: f64 = (0..2).map(|k| self.n[k][a] * self.dtheta_dy[k]).sum();
            gamma[a] = beta[a] - lift * beta[2];
        }
        (gamma, [beta[2] * self.dtheta_dy[0], beta[2] * self.dtheta_dy[1]])
    }
}

/// The frame `e_i = B_i^k 𝔰_k` and its chart derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameJet {
    pub b: M2,
    pub b_inv: M2,
    pub db: [M2; 3],
}

/// Everything the connection constructions need at one sphere-bundle point.
#[derive(Clone, Copy, Debug)]
pub struct PointGeometry {
    pub point: SbPoint,
    pub y: [f64; 2],
    pub f: f64,
    pub jet: MetricJet,
    pub g: M2,
    pub g_inv: M2,
    pub det_g: f64,
    /// `∂g_ij/∂x^A` as `[A][i][j]`.
    pub dg_dx: [M2; 2],
    /// `∂g_ij/∂y^k` as `[k][i][j]`.
    pub dg_dy: [M2; 2],
    /// `d g_ij` along the chart directions `(x¹, x², θ)`.
    pub dg: [M2; 3],
    /// `A_ijk`.
    pub cartan: T2,
    /// `A^j_{ik}` as `[j][i][k]`.
    pub cartan_up: T2,
    pub ehresmann: EhresmannData,
    pub split: Splitting,
    pub frame: FrameJet,
}

impl PointGeometry {
    pub fn new(metric: &FinslerMetric, ehresmann: &EhresmannSpec, p: SbPoint) -> Result<Self> {
        let ip = indicatrix_point(metric, p.chart, p.x, p.theta)?;
        let jet = ip.jet;
        let y = ip.y;
        let g = [[0.5 * jet.yy[0][0], 0.5 * jet.yy[0][1]], [0.5 * jet.yy[1][0], 0.5 * jet.yy[1][1]]];
        let (g_inv, det_g) = inv2(&g)?;
        if det_g <= 0.0 || g[0][0] <= 0.0 {
            return Err(GbcError::InvalidMetric(format!("fundamental tensor not positive definite at {p:?}")));
        }
        let dg_dy = dg_from(&jet.yyy);
        let mut dg_dx = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    dg_dx[a][i][j] = 0.5 * jet.xyy[a][i][j];
                }
            }
        }
        let mut dg = [[[0.0; 2]; 2]; 3];
        for (a, dga) in dg.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    let base = if a < 2 { dg_dx[a][i][j] } else { 0.0 };
                    dga[i][j] = base + (0..2).map(|k| dg_dy[k][i][j] * ip.dy[a][k]).sum::<f64>();
                }
            }
        }
        let mut cartan = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    cartan[i][j][k] = 0.25 * jet.f * jet.yyy[i][j][k];
                }
            }
        }
        let mut cartan_up = [[[0.0; 2]; 2]; 2];
        for j in 0..2 {
            for i in 0..2 {
                for k in 0..2 {
                    cartan_up[j][i][k] = (0..2).map(|l| g_inv[j][l] * cartan[l][i][k]).sum();
                }
            }
        }
        let ehr = ehresmann.evaluate(&jet, y, &g_inv, &dg_dy);
        let r2 = y[0] * y[0] + y[1] * y[1];
        let split = Splitting { n: ehr.n, dy: ip.dy, dtheta_dy: [-y[1] / r2, y[0] / r2] };
        let frame = frame_jet(&g, &g_inv, det_g, y, jet.f, &ip.dy, &dg)?;
        Ok(PointGeometry {
            point: p,
            y,
            f: jet.f,
            jet,
            g,
            g_inv,
            det_g,
            dg_dx,
            dg_dy,
            dg,
            cartan,
            cartan_up,
            ehresmann: ehr,
            split,
            frame,
        })
    }

    /// `δg_ij/δx^A = ∂_A g_ij − N^m_A ∂_{y^m} g_ij`, as `[A][i][j]`.
    pub fn delta_g(&self) -> [M2; 2] {
        let mut out = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[a][i][j] =
                        self.dg_dx[a][i][j] - (0..2).map(|m| self.ehresmann.n[m][a] * self.dg_dy[m][i][j]).sum::<f64>();
                }
            }
        }
        out
    }
}

fn frame_jet(g: &M2, g_inv: &M2, det_g: f64, y: [f64; 2], f: f64, dy: &[[f64; 2]; 3], dg: &[M2; 3]) -> Result<FrameJet> {
    let b = frame_rows(g, y, f)?;
    let (b_inv, _) = inv2(&b)?;
    let s = det_g.sqrt();
    let w = [g[0][0] * y[0] + g[0][1] * y[1], g[1][0] * y[0] + g[1][1] * y[1]];
    let mut db = [[[0.0; 2]; 2]; 3];
    for a in 0..3 {
        // d(g y) and d√det g = ½ √det g · tr(g⁻¹ dg); F = 1 along the chart
        let mut dw = [0.0; 2];
        for i in 0..2 {
            dw[i] = (0..2).map(|k| dg[a][i][k] * y[k] + g[i][k] * dy[a][k]).sum();
        }
        let tr: f64 = (0..2).map(|i| (0..2).map(|k| g_inv[i][k] * dg[a][k][i]).sum::<f64>()).sum();
        let ds = 0.5 * s * tr;
        let v = [w[1], -w[0]];
        let dv = [dw[1], -dw[0]];
        for k in 0..2 {
            db[a][0][k] = dv[k] / (s * f) - v[k] * ds / (s * s * f);
            db[a][1][k] = dy[a][k] / f;
        }
    }
    Ok(FrameJet { b, b_inv, db })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Natural,
    Orthonormal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectionData {
    pub frame: FrameKind,
    /// Chart components `forms[i][j][a]`.
    pub forms: [[[f64; 3]; 2]; 2],
    pub split: Splitting,
}

impl ConnectionData {
    /// Builds `θ_i^j = γ[i][j][A] dx^A + ρ[i][j][k] δy^k`.
    pub fn from_parts(frame: FrameKind, gamma: &T2, rho: &T2, split: Splitting) -> Self {
        let mut forms = [[[0.0; 3]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                forms[i][j] = split.assemble(gamma[i][j], rho[i][j]);
            }
        }
        ConnectionData { frame, forms, split }
    }

    /// Horizontal coefficients `γ[i][j][A]`.
    pub fn gamma(&self) -> T2 {
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.split.split(self.forms[i][j]).0;
            }
        }
        out
    }

    /// Vertical coefficients `ϱ[i][j][k]`.
    pub fn rho(&self) -> T2 {
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.split.split(self.forms[i][j]).1;
            }
        }
        out
    }

    pub fn form(&self, i: usize, j: usize) -> PointwiseForm {
        PointwiseForm::one_form(&self.forms[i][j])
    }

    /// Row-major list of the four connection 1-forms.
    pub fn matrix_forms(&self) -> Vec<PointwiseForm> {
        (0..4).map(|m| self.form(m / 2, m % 2)).collect()
    }

    /// `max |ϖ_i^j + ϖ_j^i|` over components.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..3 {
                    worst = worst.max((self.forms[i][j][a] + self.forms[j][i][a]).abs());
                }
            }
        }
        worst
    }

    /// Antisymmetrized orthonormal-frame matrix.
    pub fn skew(&self) -> Result<SkewMatrixValuedForm> {
        if self.frame != FrameKind::Orthonormal {
            return Err(GbcError::Structural("natural-frame connection matrices are not skew".into()));
        }
        Ok(SkewMatrixValuedForm::antisymmetrized((0..2).map(|i| (0..2).map(|j| self.form(i, j)).collect()).collect())?.0)
    }
}

/// Chern horizontal coefficients `γ^i_{jk} = ½ g^{il}(δ_k g_lj + δ_j g_lk − δ_l g_jk)`,
/// as `[i][j][k]`.
pub fn chern_horizontal(geom: &PointGeometry) -> T2 {
    let dg = geom.delta_g();
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j][k] = 0.5
                    * (0..2)
                        .map(|l| geom.g_inv[i][l] * (dg[k][l][j] + dg[j][l][k] - dg[l][j][k]))
                        .sum::<f64>();
            }
        }
    }
    out
}

/// The Chern connection `θ_j^i = γ^i_{jk} dx^k` in the natural frame.
pub fn chern_connection(geom: &PointGeometry) -> ConnectionData {
    let gam = chern_horizontal(geom);
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            gamma[j][i] = gam[i][j];
        }
    }
    ConnectionData::from_parts(FrameKind::Natural, &gamma, &[[[0.0; 2]; 2]; 2], geom.split)
}

/// Keeps the horizontal part of `D` and sets the vertical part of `θ_i^j` to
/// `factor · A^j_{ik} δy^k`. Metric compatibility requires `factor = 1`.
pub fn modify_with_factor(d: &ConnectionData, geom: &PointGeometry, factor: f64) -> Result<ConnectionData> {
    if d.frame != FrameKind::Natural {
        return Err(GbcError::Structural("modification acts on natural-frame connection data".into()));
    }
    let mut rho = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                rho[i][j][k] = factor * geom.cartan_up[j][i][k];
            }
        }
    }
    Ok(ConnectionData::from_parts(FrameKind::Natural, &d.gamma(), &rho, geom.split))
}

/// The modified connection: horizontal part of `D`, vertical part `A^j_{ik} δy^k`.
pub fn modify(d: &ConnectionData, geom: &PointGeometry) -> Result<ConnectionData> {
    modify_with_factor(d, geom, 1.0)
}

/// `ϖ = (dB + Bθ)B⁻¹` in each chart direction.
pub fn to_orthonormal_frame(d: &ConnectionData, frame: &FrameJet) -> Result<ConnectionData> {
    if d.frame != FrameKind::Natural {
        return Err(GbcError::Structural("connection is already in the orthonormal frame".into()));
    }
    if frame.b[0][0] * frame.b[1][1] - frame.b[0][1] * frame.b[1][0] <= 0.0 {
        return Err(GbcError::Validation("frame orientation flipped".into()));
    }
    let mut forms = [[[0.0; 3]; 2]; 2];
    for a in 0..3 {
        let theta = [[d.forms[0][0][a], d.forms[0][1][a]], [d.forms[1][0][a], d.forms[1][1][a]]];
        let bt = mul2(&frame.b, &theta);
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for l in 0..2 {
                m[i][l] = frame.db[a][i][l] + bt[i][l];
            }
        }
        let w = mul2(&m, &frame.b_inv);
        for i in 0..2 {
            for j in 0..2 {
                forms[i][j][a] = w[i][j];
            }
        }
    }
    Ok(ConnectionData { frame: FrameKind::Orthonormal, forms, split: d.split })
}

/// `θ = B⁻¹(ϖB − dB)`.
pub fn to_natural_frame(d: &ConnectionData, frame: &FrameJet) -> Result<ConnectionData> {
    if d.frame != FrameKind::Orthonormal {
        return Err(GbcError::Structural("connection is already in the natural frame".into()));
    }
    let mut forms = [[[0.0; 3]; 2]; 2];
    for a in 0..3 {
        let w = [[d.forms[0][0][a], d.forms[0][1][a]], [d.forms[1][0][a], d.forms[1][1][a]]];
        let wb = mul2(&w, &frame.b);
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for l in 0..2 {
                m[i][l] = wb[i][l] - frame.db[a][i][l];
            }
        }
        let t = mul2(&frame.b_inv, &m);
        for i in 0..2 {
            for j in 0..2 {
                forms[i][j][a] = t[i][j];
            }
        }
    }
    Ok(ConnectionData { frame: FrameKind::Natural, forms, split: d.split })
}

/// Full metric-compatibility residual: `max |dg_ij − θ_i^k g_kj − θ_j^k g_ik|`
/// (natural frame) or the antisymmetry defect (orthonormal frame).
pub fn metric_compatibility_residual(d: &ConnectionData, geom: &PointGeometry) -> f64 {
    if d.frame == FrameKind::Orthonormal {
        return d.antisymmetry_residual();
    }
    let mut worst = 0.0f64;
    for a in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                let rhs: f64 =
                    (0..2).map(|k| d.forms[i][k][a] * geom.g[k][j] + d.forms[j][k][a] * geom.g[i][k]).sum();
                worst = worst.max((geom.dg[a][i][j] - rhs).abs());
            }
        }
    }
    worst
}

/// Partial compatibility `δg_ij/δx^A = g_ik γ^k_{jA} + g_kj γ^k_{iA}` of the
/// horizontal part, with `θ_j^k(δ/δx^A) = γ[j][k][A]`.
pub fn partial_compatibility_residual(d: &ConnectionData, geom: &PointGeometry) -> f64 {
    let gamma = d.gamma();
    let dg = geom.delta_g();
    let mut worst = 0.0f64;
    for a in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let rhs: f64 = (0..2).map(|k| geom.g[i][k] * gamma[j][k][a] + geom.g[k][j] * gamma[i][k][a]).sum();
                worst = worst.max((dg[a][i][j] - rhs).abs());
            }
        }
    }
    worst
}

/// `ϖ + P` for a skew perturbation `P` in the orthonormal frame.
pub fn perturb_metric_compatible(d: &ConnectionData, p: &SkewMatrixValuedForm) -> Result<ConnectionData> {
    if d.frame != FrameKind::Orthonormal {
        return Err(GbcError::Structural("perturbations are added in the orthonormal frame".into()));
    }
    if p.rank() != 2 {
        return Err(GbcError::Structural(format!("perturbation of rank {} on a rank-2 bundle", p.rank())));
    }
    let mut out = *d;
    for i in 0..2 {
        for j in 0..2 {
            let e = p.entry(i, j);
            if e.dim() != 3 {
                return Err(GbcError::Structural("perturbation is not a chart 1-form".into()));
            }
            for a in 0..3 {
                out.forms[i][j][a] += e.get(1 << a);
            }
        }
    }
    Ok(out)
}

/// `D_s = s∇ + (1−s)D`.
pub fn connection_family(d: &ConnectionData, nabla: &ConnectionData, s: f64) -> Result<ConnectionData> {
    if d.frame != nabla.frame {
        return Err(GbcError::Structural("connections expressed in different frames".into()));
    }
    let mut out = *d;
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..3 {
                out.forms[i][j][a] = s * nabla.forms[i][j][a] + (1.0 - s) * d.forms[i][j][a];
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationProfile {
    #[default]
    Sinusoidal,
}

/// A global 1-form `P_1^2` on the sphere bundle used to perturb the Cartan
/// connection `cartan` (orthonormal frame). On the sphere its `θ`-dependence
/// enters through the ambient direction of `y` and a multiple of `ϖ_1^2`.
pub fn perturbation_form(
    atlas: &Atlas,
    profile: PerturbationProfile,
    amplitude: f64,
    geom: &PointGeometry,
    cartan: &ConnectionData,
) -> [f64; 3] {
    let PerturbationProfile::Sinusoidal = profile;
    let p = geom.point;
    match atlas.surface {
        Surface::Sphere => {
            let (q, j) = atlas.embedding(p.chart, p.x);
            let v: Vec<f64> = (0..3).map(|c| j[c][0] * geom.y[0] + j[c][1] * geom.y[1]).collect();
            // amplitude · ((1 + q₂) sin(q₀) dq₁ + v₂ q₁ dq₂ + q₂ ϖ_1^2); the
            // (1 + q₂) factor keeps the polar caps from cancelling each other
            let (c1, c2) = ((1.0 + q[2]) * q[0].sin(), v[2] * q[1]);
            let w = cartan.forms[0][1];
            [
                amplitude * (c1 * j[1][0] + c2 * j[2][0] + q[2] * w[0]),
                amplitude * (c1 * j[1][1] + c2 * j[2][1] + q[2] * w[1]),
                amplitude * q[2] * w[2],
            ]
        }
        _ => {
            let (x, t) = (p.x, p.theta);
            [
                amplitude * x[1].cos() * t.sin(),
                amplitude * x[0].sin() * t.cos(),
                amplitude * x[0].sin() * x[1].sin() * t.cos(),
            ]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
#[derive(Default)]
pub enum ConnectionKind {
    #[default]
    Cartan,
    /// The modification of the Chern connection, which coincides with `Cartan`.
    ChernModified,
    /// Cartan connection plus a skew 1-form in the orthonormal frame.
    Perturbed {
        #[serde(rename = "perturbation_amplitude")]
        amplitude: f64,
        #[serde(rename = "perturbation_profile", default)]
        profile: PerturbationProfile,
    },
}


/// The metric-compatible connection `D` and its modification `∇`.
#[derive(Clone, Debug)]
pub struct ConnectionModel {
    pub atlas: Atlas,
    pub metric: FinslerMetric,
    pub ehresmann: EhresmannSpec,
    pub kind: ConnectionKind,
}

/// Orthonormal-frame forms of `∇` and `D` at one point.
#[derive(Clone, Copy, Debug)]
pub struct ConnectionPair {
    pub nabla: ConnectionData,
    pub d: ConnectionData,
}

impl ConnectionModel {
    pub fn new(atlas: Atlas, metric: FinslerMetric, ehresmann: EhresmannSpec, kind: ConnectionKind) -> Self {
        ConnectionModel { atlas, metric, ehresmann, kind }
    }

    pub fn geometry(&self, p: SbPoint) -> Result<PointGeometry> {
        PointGeometry::new(&self.metric, &self.ehresmann, p)
    }

    pub fn pair_at(&self, geom: &PointGeometry) -> Result<ConnectionPair> {
        let cartan_natural = modify(&chern_connection(geom), geom)?;
        let cartan = to_orthonormal_frame(&cartan_natural, &geom.frame)?;
        match &self.kind {
            ConnectionKind::Cartan | ConnectionKind::ChernModified => Ok(ConnectionPair { nabla: cartan, d: cartan }),
            ConnectionKind::Perturbed { amplitude, profile } => {
                let p = perturbation_form(&self.atlas, *profile, *amplitude, geom, &cartan);
                let pf = PointwiseForm::one_form(&p);
                let skew = SkewMatrixValuedForm::from_upper(2, 3, &[(0, 1, pf)])?;
                let d = perturb_metric_compatible(&cartan, &skew)?;
                let nabla_natural = modify(&to_natural_frame(&d, &geom.frame)?, geom)?;
                Ok(ConnectionPair { nabla: to_orthonormal_frame(&nabla_natural, &geom.frame)?, d })
            }
        }
    }

    pub fn pair(&self, p: SbPoint) -> Result<ConnectionPair> {
        self.pair_at(&self.geometry(p)?)
    }

    /// Field of the eight 1-forms `ϖ^∇` (row-major) followed by `ϖ^D` on one chart.
    pub fn field(&self, chart: usize) -> FormField {
        let model = self.clone();
        FormField::new(3, 8, move |c| {
            let pair = model.pair(SbPoint::new(chart, [c[0], c[1]], c[2]))?;
            let mut out = pair.nabla.matrix_forms();
            out.extend(pair.d.matrix_forms());
            Ok(out)
        })
    }
}

/// Curvature 2-forms `Ω_i^j` on the sphere-bundle chart.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureData {
    pub n: usize,
    pub entries: Vec<Vec<PointwiseForm>>,
}

impl CurvatureData {
    /// `Ω_i^j = dϖ_i^j − ϖ_i^k ∧ ϖ_k^j` from row-major `dϖ` and `ϖ`.
    pub fn from_parts(n: usize, dvarpi: &[PointwiseForm], varpi: &[PointwiseForm]) -> Self {
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = dvarpi[i * n + j].clone();
                        for k in 0..n {
                            acc = &acc - &varpi[i * n + k].wedge(&varpi[k * n + j]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        CurvatureData { n, entries }
    }

    /// Antisymmetrized curvature matrix; finite differences leave a small defect.
    pub fn skew(&self) -> Result<SkewMatrixValuedForm> {
        Ok(SkewMatrixValuedForm::antisymmetrized(self.entries.clone())?.0)
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((&self.entries[i][j] + &self.entries[j][i]).max_abs());
            }
        }
        worst
    }
}

/// Curvature of the connection occupying forms `offset..offset+n²` of `field`,
/// with `dϖ` from central differences.
pub fn curvature(field: &FormField, offset: usize, n: usize, c: &[f64], cfg: FdConfig) -> Result<CurvatureData> {
    let varpi = field.eval(c)?;
    let parts = partial_derivatives(field, c, cfg)?;
    Ok(curvature_from_partials(&parts, &varpi, offset, n))
}

/// Same as [`curvature`] from precomputed values and `[a][form]` partials.
pub fn curvature_from_partials(parts: &[Vec<PointwiseForm>], values: &[PointwiseForm], offset: usize, n: usize) -> CurvatureData {
    let dvarpi: Vec<PointwiseForm> = (0..n * n).map(|m| differential_from_partials(parts, offset + m)).collect();
    CurvatureData::from_parts(n, &dvarpi, &values[offset..offset + n * n])
}

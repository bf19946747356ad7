//! The modified AKV transport model.
//!
//! Basis: `e0`, `e1`, then the `P2` block `e2..e_N`, then the `P3` block
//! `e_{N+1}..e_{N+M}`; the Hilbert dimension is `N + M + 1`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{limit_state, DEFAULT_RESIDUAL_TOL};
use crate::generator::{bohr_frequencies, ChannelRates, WcltGenerator};
use crate::linalg::{
    basis_vector, c64, frobenius, identity, ket_bra, max_abs, projector_range, range, CMatrix, CVector, DensityMatrix,
    HermitianOperator, Subspace, C64, DEFAULT_CLUSTER_TOL, DEFAULT_KERNEL_TOL,
};
use crate::spectral::SpectralData;

const SUPPORT_TOL: f64 = 1e-10;

/// `g_ab = exp(2πi (a − (N−1))(b − (N+1)) / (N−1))`, stored with row
/// `b − (N+1)` and column `a − 2`.
pub fn default_interference(n: usize, m: usize) -> Result<CMatrix> {
    if n < 2 || m < 1 || m > n - 1 {
        return Err(Error::InvalidParameter(format!("interference needs 1 ≤ M ≤ N−1, got N={n}, M={m}")));
    }
    let k = (n - 1) as f64;
    Ok(CMatrix::from_fn(m, n - 1, |row, col| {
        let a = (col + 2) as f64 - k;
        let b = row as f64;
        C64::from_polar(1.0, 2.0 * PI * a * b / k)
    }))
}

/// `Γ_Re,±` and `Γ_Im,±` of one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelGammas {
    pub re_minus: f64,
    pub re_plus: f64,
    pub im_minus: f64,
    pub im_plus: f64,
}

impl ChannelGammas {
    pub fn new(re_minus: f64, re_plus: f64, im_minus: f64, im_plus: f64) -> Self {
        Self {
            re_minus,
            re_plus,
            im_minus,
            im_plus,
        }
    }
}

/// Coefficients of the three nontrivial channels `ω1 = ε1−ε2`, `ω2 = ε2−ε3`,
/// `ω3 = ε3`. For `ω3` only the `−` coefficients may be nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AkvRates {
    pub omega1: ChannelGammas,
    pub omega2: ChannelGammas,
    pub omega3: ChannelGammas,
}

impl Default for AkvRates {
    fn default() -> Self {
        Self {
            omega1: ChannelGammas::new(1.0, 1.0, 0.5, 0.5),
            omega2: ChannelGammas::new(2.0, 1.0, 0.5, 0.5),
            omega3: ChannelGammas::new(1.0, 0.0, 0.5, 0.0),
        }
    }
}

impl AkvRates {
    fn validate(&self) -> Result<()> {
        let all = [self.omega1, self.omega2, self.omega3];
        if all
            .iter()
            .flat_map(|g| [g.re_minus, g.re_plus, g.im_minus, g.im_plus])
            .any(|x| !x.is_finite() || x < 0.0)
        {
            return Err(Error::InvalidParameter("AKV rates must be finite and non-negative".into()));
        }
        if [self.omega1.re_minus, self.omega1.re_plus, self.omega2.re_minus, self.omega2.re_plus, self.omega3.re_minus]
            .iter()
            .any(|&x| x <= 0.0)
        {
            return Err(Error::InvalidParameter(
                "Γ_Re,± for ω1, ω2 and Γ_Re,− for ω3 must be positive".into(),
            ));
        }
        if self.omega3.re_plus != 0.0 || self.omega3.im_plus != 0.0 {
            return Err(Error::InvalidParameter("the ω3 channel has no + coefficients".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AkvParams {
    pub n: usize,
    pub m: usize,
    /// `(ε1, ε2, ε3)` with `ε1 > ε2 > ε3 > 0`.
    pub eps: [f64; 3],
    pub rates: AkvRates,
    /// `M × (N−1)` interference coefficients; `None` selects [`default_interference`].
    pub g: Option<CMatrix>,
}

impl Default for AkvParams {
    fn default() -> Self {
        Self {
            n: 4,
            m: 2,
            eps: [7.0, 3.0, 1.0],
            rates: AkvRates::default(),
            g: None,
        }
    }
}

impl AkvParams {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            ..Self::default()
        }
    }
}

/// Two-state random walk between `Im q` and `Z Im q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomWalk {
    /// Rate from the `P2` side to the `P3` side.
    pub a: f64,
    /// Rate back.
    pub b: f64,
}

impl RandomWalk {
    /// `(w_σ(t), w_Z(t))` starting from `(1, 0)`.
    pub fn weights(&self, t: f64) -> (f64, f64) {
        let s = self.a + self.b;
        let e = (-t * s).exp();
        ((self.b + self.a * e) / s, (self.a - self.a * e) / s)
    }

    pub fn stationary(&self) -> (f64, f64) {
        let s = self.a + self.b;
        (self.b / s, self.a / s)
    }
}

/// The AKV generator together with its distinguished operators.
#[derive(Clone, Debug)]
pub struct AkvModel {
    params: AkvParams,
    g: CMatrix,
    generator: WcltGenerator,
    z: CMatrix,
    t: CMatrix,
    psi: CVector,
    psi_prime: CVector,
    blocks: [HermitianOperator; 4],
    abs_z: HermitianOperator,
    q: HermitianOperator,
    v: Subspace,
}

impl AkvModel {
    pub fn build(params: AkvParams) -> Result<Self> {
        let (n, m) = (params.n, params.m);
        if n < 3 || m < 1 || m > n - 1 {
            return Err(Error::InvalidParameter(format!("need N ≥ 3 and 1 ≤ M ≤ N−1, got N={n}, M={m}")));
        }
        let [e1, e2, e3] = params.eps;
        if !(e1 > e2 && e2 > e3 && e3 > 0.0) || !e1.is_finite() {
            return Err(Error::InvalidParameter(format!("need ε1 > ε2 > ε3 > 0, got {:?}", params.eps)));
        }
        params.rates.validate()?;

        let g = match &params.g {
            Some(g) => g.clone(),
            None => default_interference(n, m)?,
        };
        if g.shape() != (m, n - 1) {
            return Err(Error::DimensionMismatch {
                expected: format!("{m}x{} interference matrix", n - 1),
                found: format!("{}x{}", g.nrows(), g.ncols()),
            });
        }
        let k = (n - 1) as f64;
        let dev = max_abs(&(&g * g.adjoint() / c64(k, 0.0) - identity(m)));
        if dev > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "interference rows must be orthogonal with squared norm N−1 (deviation {dev:.3e})"
            )));
        }

        let dim = n + m + 1;
        let p3_start = n + 1;
        let sd = SpectralData::from_levels(&[0.0, e1, e2, e3], &[1, 1, n - 1, m], DEFAULT_CLUSTER_TOL)?;
        let freqs = bohr_frequencies(&sd, DEFAULT_CLUSTER_TOL);
        if freqs.len() != 6 {
            return Err(Error::InvalidParameter(format!(
                "the six Bohr frequencies must be distinct, found {} after merging",
                freqs.len()
            )));
        }

        let e = |i: usize| basis_vector(dim, i);
        let sk = k.sqrt();
        let mut z = CMatrix::zeros(dim, dim);
        for row in 0..m {
            for col in 0..n - 1 {
                z[(p3_start + row, 2 + col)] = g[(row, col)] / c64(sk, 0.0);
            }
        }
        let block = |lo: usize, hi: usize| {
            let mut p = CMatrix::zeros(dim, dim);
            for i in lo..hi {
                p[(i, i)] = c64(1.0, 0.0);
            }
            HermitianOperator::from_hermitian_part(&p).expect("finite")
        };
        let blocks = [block(0, 1), block(1, 2), block(2, n + 1), block(n + 1, dim)];
        let t = blocks[0].matrix() + blocks[1].matrix() + &z + z.adjoint();

        let psi: CVector = (2..=n).map(&e).fold(CVector::zeros(dim), |acc, v| acc + v);
        let psi_prime: CVector = (p3_start..dim).map(&e).fold(CVector::zeros(dim), |acc, v| acc + v);

        let d = ket_bra(&(&t * e(n + 1)), &(&t * e(1))) + &z + ket_bra(&(&t * e(0)), &(&t * e(n - 1)));

        // The rank-one terms of D reduce to the ψ, ψ′ forms only when row N+1
        // and column N−1 of g are all ones.
        let inv = c64(1.0 / sk, 0.0);
        let id_dev = [
            (&t * e(1) - e(1)).norm(),
            (&t * e(0) - e(0)).norm(),
            (&t * e(n + 1) - &psi * inv).norm(),
            (&t * e(n - 1) - &psi_prime * inv).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if id_dev > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "interference matrix must have ones in row N+1 and column N−1 (deviation {id_dev:.3e})"
            )));
        }

        let r = &params.rates;
        let scale = 2.0 * k;
        let by_omega = |w: f64| -> ChannelRates {
            let close = |x: f64| (w - x).abs() <= DEFAULT_CLUSTER_TOL * (1.0 + x);
            if close(e1 - e2) {
                ChannelRates::new(scale * r.omega1.re_minus, scale * r.omega1.re_plus, -k * r.omega1.im_minus, k * r.omega1.im_plus)
            } else if close(e2 - e3) {
                ChannelRates::new(scale * r.omega2.re_minus, scale * r.omega2.re_plus, -k * r.omega2.im_minus, k * r.omega2.im_plus)
            } else if close(e3) {
                ChannelRates::new(scale * r.omega3.re_minus, 0.0, -k * r.omega3.im_minus, 0.0)
            } else {
                ChannelRates::default()
            }
        };
        let rates: Vec<ChannelRates> = freqs.iter().map(|f| by_omega(f.omega)).collect();
        let generator = WcltGenerator::new(sd, d, &rates)?;

        let abs_z = HermitianOperator::from_hermitian_part(&(z.adjoint() * &z))?;
        let zs_psi_prime = z.adjoint() * &psi_prime;
        let span = range(&CMatrix::from_columns(&[psi.clone(), zs_psi_prime.clone()]), DEFAULT_KERNEL_TOL)?;
        let q_mat = abs_z.matrix() * (identity(dim) - span.projector().matrix());
        let q = HermitianOperator::from_hermitian_part(&q_mat)?;
        let z_psi = &z * &psi;
        let v = range(
            &CMatrix::from_columns(&[e(0), e(1), psi.clone(), psi_prime.clone(), z_psi, zs_psi_prime]),
            DEFAULT_KERNEL_TOL,
        )?
        .complement()?;

        Ok(Self {
            params,
            g,
            generator,
            z,
            t,
            psi,
            psi_prime,
            blocks,
            abs_z,
            q,
            v,
        })
    }

    pub fn params(&self) -> &AkvParams {
        &self.params
    }

    pub fn interference(&self) -> &CMatrix {
        &self.g
    }

    pub fn generator(&self) -> &WcltGenerator {
        &self.generator
    }

    pub fn into_generator(self) -> WcltGenerator {
        self.generator
    }

    pub fn dim(&self) -> usize {
        self.params.n + self.params.m + 1
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn t(&self) -> &CMatrix {
        &self.t
    }

    pub fn psi(&self) -> &CVector {
        &self.psi
    }

    pub fn psi_prime(&self) -> &CVector {
        &self.psi_prime
    }

    /// Spectral projection `P_k`, `k ∈ {0, 1, 2, 3}`.
    pub fn p(&self, k: usize) -> &HermitianOperator {
        &self.blocks[k]
    }

    /// `|Z| = Z*Z`
    pub fn abs_z(&self) -> &HermitianOperator {
        &self.abs_z
    }

    /// `q = |Z| P_{span{ψ, Z*ψ′}^⊥}`
    pub fn q(&self) -> &HermitianOperator {
        &self.q
    }

    /// `V = {e0, e1, ψ, ψ′, Zψ, Z*ψ′}^⊥`
    pub fn v(&self) -> &Subspace {
        &self.v
    }

    pub fn p_v(&self) -> HermitianOperator {
        self.v.projector()
    }

    /// `P2 − |Z|`, the projector onto `W_D = ∩ ker D_ω ∩ ker D_ω*`.
    pub fn p_wd(&self) -> HermitianOperator {
        let m = self.blocks[2].matrix() - self.abs_z.matrix();
        HermitianOperator::from_hermitian_part(&m).expect("finite")
    }

    /// `P0 + P1 + |Z| + P3`
    pub fn p_wd_perp(&self) -> HermitianOperator {
        let m = self.blocks[0].matrix() + self.blocks[1].matrix() + self.abs_z.matrix() + self.blocks[3].matrix();
        HermitianOperator::from_hermitian_part(&m).expect("finite")
    }

    /// `P0 + (P2 − |Z|)`: every pure state on this subspace is invariant.
    /// `e0` lies outside `W_D` only through `ker D_ω3*`, and `D_ω3*` carries
    /// no rate.
    pub fn p_dark(&self) -> HermitianOperator {
        let m = self.blocks[0].matrix() + self.blocks[2].matrix() - self.abs_z.matrix();
        HermitianOperator::from_hermitian_part(&m).expect("finite")
    }

    /// Image of `q`, i.e. `V ∩ Im|Z|`.
    pub fn q_subspace(&self) -> Result<Subspace> {
        projector_range(&self.q)
    }

    /// `W_D^⊥ ∩ V`, the image of `q + ZqZ*`.
    pub fn wd_perp_v_subspace(&self) -> Result<Subspace> {
        projector_range(&HermitianOperator::from_hermitian_part(
            &(self.q.matrix() + &self.z * self.q.matrix() * self.z.adjoint()),
        )?)
    }

    /// `W_D` from its closed-form projector.
    pub fn wd_subspace(&self) -> Result<Subspace> {
        projector_range(&self.p_wd())
    }

    /// Range of [`p_dark`](Self::p_dark).
    pub fn dark_subspace(&self) -> Result<Subspace> {
        projector_range(&self.p_dark())
    }

    /// `(ω1, …, ω6) = (ε1−ε2, ε2−ε3, ε3, ε1, ε2, ε1−ε3)`
    pub fn omegas(&self) -> [f64; 6] {
        let [e1, e2, e3] = self.params.eps;
        [e1 - e2, e2 - e3, e3, e1, e2, e1 - e3]
    }

    /// Closed-form Kraus blocks for `ω1, ω2, ω3`.
    pub fn expected_kraus(&self) -> [CMatrix; 3] {
        let dim = self.dim();
        let inv = c64(1.0 / ((self.params.n - 1) as f64).sqrt(), 0.0);
        [
            ket_bra(&self.psi, &basis_vector(dim, 1)) * inv,
            self.z.clone(),
            ket_bra(&basis_vector(dim, 0), &self.psi_prime) * inv,
        ]
    }

    /// `(Γ_Re,+,ω2, Γ_Re,−,ω2)`
    fn omega2_re(&self) -> (f64, f64) {
        (self.params.rates.omega2.re_plus, self.params.rates.omega2.re_minus)
    }

    /// `(Γ₊/(Γ₊+Γ₋), Γ₋/(Γ₊+Γ₋))` for `ω2`.
    pub fn block_weights(&self) -> (f64, f64) {
        let (gp, gm) = self.omega2_re();
        (gp / (gp + gm), gm / (gp + gm))
    }

    pub fn random_walk(&self) -> RandomWalk {
        let (gp, gm) = self.omega2_re();
        let k = (self.params.n - 1) as f64;
        RandomWalk {
            a: 2.0 * k * gm,
            b: 2.0 * k * gp,
        }
    }

    /// `(N−1) Γ₋/(Γ₊+Γ₋) (Γ_Im,+ + Γ_Im,−)` at `ω2`.
    pub fn energy_gain(&self) -> f64 {
        let k = (self.params.n - 1) as f64;
        let w = self.params.rates.omega2;
        k * self.block_weights().1 * (w.im_plus + w.im_minus)
    }

    /// `Σ_ω Δ_ω`
    pub fn effective_hamiltonian(&self) -> HermitianOperator {
        self.generator.total_effective_hamiltonian()
    }

    fn check_support(&self, rho: &CMatrix, p: &CMatrix, what: &str) -> Result<()> {
        let dev = frobenius(&(p * rho * p - rho));
        if dev > SUPPORT_TOL {
            return Err(Error::Support(format!("state is not supported on {what} (deviation {dev:.3e})")));
        }
        Ok(())
    }

    /// `λ ρ_W + (1 − λ)[w₊ σ + w₋ ZσZ*]` with `σ` on `V ∩ Im|Z|` and `ρ_W`
    /// on `W_D ⊕ ℂe0`.
    pub fn invariant_state(
        &self,
        sigma: Option<&DensityMatrix>,
        lambda: f64,
        rho_wd: Option<&DensityMatrix>,
    ) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("λ must lie in [0, 1], got {lambda}")));
        }
        let dim = self.dim();
        let mut tau = CMatrix::zeros(dim, dim);
        if lambda > 0.0 {
            let r = rho_wd.ok_or_else(|| Error::InvalidParameter("λ > 0 needs a state on W_D ⊕ ℂe0".into()))?;
            self.check_support(r.matrix(), self.p_dark().matrix(), "W_D ⊕ ℂe0")?;
            tau += r.matrix() * c64(lambda, 0.0);
        }
        if lambda < 1.0 {
            let s = sigma.ok_or_else(|| Error::InvalidParameter("λ < 1 needs a state σ on V ∩ Im|Z|".into()))?;
            self.check_support(s.matrix(), self.q.matrix(), "V ∩ Im|Z|")?;
            let (wp, wm) = self.block_weights();
            let part = s.matrix() * c64(wp, 0.0) + &self.z * s.matrix() * self.z.adjoint() * c64(wm, 0.0);
            tau += part * c64(1.0 - lambda, 0.0);
        }
        DensityMatrix::new(tau)
    }

    /// The invariant state generated by the pure `σ = |u⟩⟨u|`, `u ∈ V ∩ Im|Z|`.
    pub fn extremal_state(&self, u: &CVector) -> Result<DensityMatrix> {
        let sigma = DensityMatrix::pure(u)?;
        self.invariant_state(Some(&sigma), 0.0, None)
    }

    /// Long-time limit of `η` supported on `W_D^⊥ ∩ V`:
    /// `w₊ σ + w₋ ZσZ*` with `σ = qηq + Z*P3ηP3Z`.
    pub fn limit_state(&self, eta: &DensityMatrix) -> Result<DensityMatrix> {
        let e = eta.matrix();
        let q = self.q.matrix();
        let zqz = &self.z * q * self.z.adjoint();
        self.check_support(e, &(q + &zqz), "W_D^⊥ ∩ V")?;
        let p3 = self.blocks[3].matrix();
        let sigma = q * e * q + self.z.adjoint() * p3 * e * p3 * &self.z;
        let tr = sigma.trace().re;
        if !(tr > 1e-14) {
            return Err(Error::Support("both block traces vanish".into()));
        }
        let (wp, wm) = self.block_weights();
        let out = &sigma * c64(wp, 0.0) + &self.z * &sigma * self.z.adjoint() * c64(wm, 0.0);
        DensityMatrix::new(&out / c64(out.trace().re, 0.0))
    }

    /// The state `q / tr q`.
    pub fn normalized_q(&self) -> Result<DensityMatrix> {
        DensityMatrix::normalized(self.q.matrix().clone())
    }
}

/// One point of a transport sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportPoint {
    /// `Γ_Re,+,ω2 / Γ_Re,−,ω2`
    pub ratio: f64,
    /// `tr(P3 η_∞)` from the integrator.
    pub p3_mass: f64,
    /// `Γ₋/(Γ₊+Γ₋)`
    pub predicted: f64,
    pub residual: f64,
}

/// Integrates `q/tr q` to its limit for each ratio `Γ_Re,+,ω2 / Γ_Re,−,ω2`,
/// keeping `Γ_Re,−,ω2` fixed; points run in parallel.
pub fn transport_sweep(base: &AkvParams, ratios: &[f64]) -> Result<Vec<TransportPoint>> {
    ratios
        .par_iter()
        .map(|&ratio| {
            if !(ratio > 0.0) {
                return Err(Error::InvalidParameter(format!("ratio must be positive, got {ratio}")));
            }
            let mut p = base.clone();
            p.rates.omega2.re_plus = ratio * p.rates.omega2.re_minus;
            let model = AkvModel::build(p)?;
            let eta = model.normalized_q()?;
            let rep = limit_state(model.generator(), &eta, DEFAULT_RESIDUAL_TOL, 1e4)?;
            if !rep.converged {
                return Err(Error::NotStationary {
                    residual: rep.residual,
                    t: rep.t,
                });
            }
            let p3_mass = (model.p(3).matrix() * rep.state.matrix()).trace().re;
            Ok(TransportPoint {
                ratio,
                p3_mass,
                predicted: 1.0 / (1.0 + ratio),
                residual: rep.residual,
            })
        })
        .collect()
}

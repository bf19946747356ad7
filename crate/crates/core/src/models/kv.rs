//! The KV photosynthesis model with dark states.
//!
//! Basis: `e0`, `e1`, then the degenerate level `e2..e_N`; the Hilbert
//! dimension is `N + 1`.

use crate::error::{Error, Result};
use crate::generator::{bohr_frequencies, ChannelRates, WcltGenerator};
use crate::linalg::{
    basis_vector, c64, frobenius, ket_bra, range, CMatrix, CVector, DensityMatrix, HermitianOperator, Subspace, C64,
    DEFAULT_CLUSTER_TOL, DEFAULT_KERNEL_TOL,
};
use crate::spectral::SpectralData;

/// Rates of the channels `ω1 = ε2` (`|e0⟩⟨χ|`), `ω2 = ε2 − ε1` (`|e1⟩⟨Ψ|`)
/// and `ω3 = ε1` (`|e0⟩⟨e1|`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KvRates {
    pub omega1: ChannelRates,
    pub omega2: ChannelRates,
    pub omega3: ChannelRates,
}

impl Default for KvRates {
    fn default() -> Self {
        Self {
            omega1: ChannelRates::dissipative(1.0, 0.2),
            omega2: ChannelRates::dissipative(1.0, 0.3),
            omega3: ChannelRates::dissipative(1.0, 0.1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KvParams {
    pub n: usize,
    /// `0 < ε1 < ε2`, `ε2 ≠ 2ε1`.
    pub eps1: f64,
    pub eps2: f64,
    /// Phase of `Ψ = e^{iθ}χ`.
    pub theta: f64,
    pub rates: KvRates,
}

impl Default for KvParams {
    fn default() -> Self {
        Self {
            n: 5,
            eps1: 1.0,
            eps2: 2.5,
            theta: 0.7,
            rates: KvRates::default(),
        }
    }
}

/// Components of a state along `P0`, `P1`, `|χ̂⟩⟨χ̂|` and the remainder.
#[derive(Clone, Debug)]
pub struct DarkDecomposition {
    /// `tr(P0 ρ)`
    pub c0: f64,
    /// `tr(P1 ρ)`
    pub c1: f64,
    /// `⟨χ̂|ρ|χ̂⟩`, the `λ` of the mixed-dark form.
    pub c_chi: f64,
    /// `c0/λ`, `c1/λ` when `λ > 0`.
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    /// `ρ − c0 P0 − c1 P1 − c_χ |χ̂⟩⟨χ̂|`
    pub remainder: CMatrix,
    /// `‖R − P_W R P_W‖_F` for the remainder `R`.
    pub support_residual: f64,
}

#[derive(Clone, Debug)]
pub struct KvModel {
    params: KvParams,
    generator: WcltGenerator,
    chi: CVector,
    blocks: [HermitianOperator; 3],
}

impl KvModel {
    pub fn build(params: KvParams) -> Result<Self> {
        let n = params.n;
        let (e1, e2) = (params.eps1, params.eps2);
        if n < 3 {
            return Err(Error::InvalidParameter(format!("need N ≥ 3, got {n}")));
        }
        if !(0.0 < e1 && e1 < e2 && e2.is_finite()) {
            return Err(Error::InvalidParameter(format!("need 0 < ε1 < ε2, got ε1={e1}, ε2={e2}")));
        }
        if !params.theta.is_finite() {
            return Err(Error::NonFinite);
        }
        let dim = n + 1;
        let sd = SpectralData::from_levels(&[0.0, e1, e2], &[1, 1, n - 1], DEFAULT_CLUSTER_TOL)?;
        let freqs = bohr_frequencies(&sd, DEFAULT_CLUSTER_TOL);
        if freqs.len() != 3 {
            return Err(Error::InvalidParameter("ε2 = 2ε1 merges two Bohr frequencies".into()));
        }

        let e = |i: usize| basis_vector(dim, i);
        let chi: CVector = (2..=n).map(&e).fold(CVector::zeros(dim), |acc, v| acc + v);
        let big_psi = &chi * C64::from_polar(1.0, params.theta);
        let d = ket_bra(&e(0), &chi) + ket_bra(&e(1), &big_psi) + ket_bra(&e(0), &e(1));

        let r = &params.rates;
        let close = |w: f64, x: f64| (w - x).abs() <= DEFAULT_CLUSTER_TOL * (1.0 + x);
        let rates: Vec<ChannelRates> = freqs
            .iter()
            .map(|f| {
                if close(f.omega, e2) {
                    r.omega1
                } else if close(f.omega, e2 - e1) {
                    r.omega2
                } else {
                    r.omega3
                }
            })
            .collect();
        let generator = WcltGenerator::new(sd, d, &rates)?;

        let block = |lo: usize, hi: usize| {
            let mut p = CMatrix::zeros(dim, dim);
            for i in lo..hi {
                p[(i, i)] = c64(1.0, 0.0);
            }
            HermitianOperator::from_hermitian_part(&p).expect("finite")
        };
        Ok(Self {
            params,
            generator,
            chi,
            blocks: [block(0, 1), block(1, 2), block(2, dim)],
        })
    }

    pub fn params(&self) -> &KvParams {
        &self.params
    }

    pub fn generator(&self) -> &WcltGenerator {
        &self.generator
    }

    pub fn into_generator(self) -> WcltGenerator {
        self.generator
    }

    pub fn dim(&self) -> usize {
        self.params.n + 1
    }

    /// `χ = Σ_{j≥2} e_j`
    pub fn chi(&self) -> &CVector {
        &self.chi
    }

    /// `|χ̂⟩⟨χ̂|` with `χ̂ = χ/‖χ‖`.
    pub fn chi_projector(&self) -> HermitianOperator {
        let m = ket_bra(&self.chi, &self.chi) / c64(self.chi.norm_squared(), 0.0);
        HermitianOperator::from_hermitian_part(&m).expect("finite")
    }

    pub fn p(&self, k: usize) -> &HermitianOperator {
        &self.blocks[k]
    }

    /// `{e0, e1, χ}^⊥`
    pub fn wd_closed_form(&self) -> Result<Subspace> {
        let dim = self.dim();
        let span = CMatrix::from_columns(&[basis_vector(dim, 0), basis_vector(dim, 1), self.chi.clone()]);
        range(&span, DEFAULT_KERNEL_TOL)?.complement()
    }

    /// Splits `ρ` into its `P0`, `P1`, `|χ̂⟩⟨χ̂|` components and a remainder
    /// that is supported on `W_D` for invariant states.
    pub fn dark_decomposition(&self, rho: &DensityMatrix) -> Result<DarkDecomposition> {
        let r = rho.matrix();
        let component = |p: &HermitianOperator| (p.matrix() * r).trace().re;
        let (p0, p1, pc) = (self.p(0), self.p(1), self.chi_projector());
        let (c0, c1, c_chi) = (component(p0), component(p1), component(&pc));
        let remainder = r - p0.matrix() * c64(c0, 0.0) - p1.matrix() * c64(c1, 0.0) - pc.matrix() * c64(c_chi, 0.0);
        let pw = self.wd_closed_form()?.projector().into_matrix();
        let support_residual = frobenius(&(&pw * &remainder * &pw - &remainder));
        let ratio = |c: f64| (c_chi > 1e-14).then(|| c / c_chi);
        Ok(DarkDecomposition {
            c0,
            c1,
            c_chi,
            r0: ratio(c0),
            r1: ratio(c1),
            remainder,
            support_residual,
        })
    }
}

//! Weak-coupling-limit-type generators.
//!
//! A generator is assembled from the spectral decomposition of a reference
//! Hamiltonian `H = Σ ε_k P_k`, an interaction operator `D`, and one set of
//! coefficients per Bohr frequency. For each frequency `ω` the Kraus block is
//! `D_ω = Σ_{ε_n − ε_m = ω} P_m D P_n`, and the Schrödinger-picture action is
//!
//! ```text
//! L_ω*(ρ) = −γ₋/2 {D_ω†D_ω, ρ} + γ₊ D_ω†ρD_ω − γ₊/2 {D_ωD_ω†, ρ} + γ₋ D_ωρD_ω† − i[Δ_ω, ρ]
//! Δ_ω     = ζ₋ D_ω†D_ω + ζ₊ D_ωD_ω†
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, commutator, ensure_dim, ensure_finite, ensure_square, frobenius, identity, kron, max_abs, CMatrix, HermitianOperator, C64};
use crate::spectral::SpectralData;

/// Largest Hilbert-space dimension for which the `d² × d²` superoperator is
/// materialised.
/// Kraus blocks below this fraction of `‖D‖_F` are set to zero.
pub const KRAUS_ZERO_TOL: f64 = 1e-13;

pub const DEFAULT_SUPEROPERATOR_CAP: usize = 64;

/// Dissipative rates and Hamiltonian coefficients of one frequency channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelRates {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    #[serde(default)]
    pub zeta_minus: f64,
    #[serde(default)]
    pub zeta_plus: f64,
}

impl ChannelRates {
    pub fn new(gamma_minus: f64, gamma_plus: f64, zeta_minus: f64, zeta_plus: f64) -> Self {
        Self {
            gamma_minus,
            gamma_plus,
            zeta_minus,
            zeta_plus,
        }
    }

    pub fn dissipative(gamma_minus: f64, gamma_plus: f64) -> Self {
        Self::new(gamma_minus, gamma_plus, 0.0, 0.0)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.gamma_minus, self.gamma_plus, self.zeta_minus, self.zeta_plus];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("channel coefficients must be finite".into()));
        }
        if self.gamma_minus < 0.0 || self.gamma_plus < 0.0 {
            return Err(Error::InvalidParameter("dissipative rates must be non-negative".into()));
        }
        Ok(())
    }
}

/// A positive Bohr frequency together with the eigenvalue pairs producing it.
#[derive(Clone, Debug, PartialEq)]
pub struct BohrFrequency {
    pub omega: f64,
    /// `(n, m)` level indices with `ε_n − ε_m = ω`.
    pub pairs: Vec<(usize, usize)>,
}

impl BohrFrequency {
    pub fn energy_pairs(&self, spectral: &SpectralData) -> Vec<(f64, f64)> {
        let e = spectral.eigenvalues();
        self.pairs.iter().map(|&(n, m)| (e[n], e[m])).collect()
    }
}

/// All positive eigenvalue differences, ascending, with differences that agree
/// within `tol · (1 + ω)` merged into one frequency.
pub fn bohr_frequencies(spectral: &SpectralData, tol: f64) -> Vec<BohrFrequency> {
    let e = spectral.eigenvalues();
    let mut diffs: Vec<(f64, usize, usize)> = Vec::new();
    for n in 0..e.len() {
        for m in 0..e.len() {
            if e[n] > e[m] {
                diffs.push((e[n] - e[m], n, m));
            }
        }
    }
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out: Vec<(Vec<f64>, Vec<(usize, usize)>)> = Vec::new();
    for (w, n, m) in diffs {
        if let Some((ws, pairs)) = out.last_mut() {
            let prev = *ws.last().unwrap();
            if (w - prev).abs() <= tol * (1.0 + w.abs()) {
                ws.push(w);
                pairs.push((n, m));
                continue;
            }
        }
        out.push((vec![w], vec![(n, m)]));
    }
    out.into_iter()
        .map(|(ws, mut pairs)| {
            pairs.sort();
            BohrFrequency {
                omega: ws.iter().sum::<f64>() / ws.len() as f64,
                pairs,
            }
        })
        .collect()
}

/// `D_ω = Σ_{(n,m) ∈ pairs} P_m D P_n`.
pub fn kraus_operator(d: &CMatrix, freq: &BohrFrequency, spectral: &SpectralData) -> Result<CMatrix> {
    ensure_dim(d, spectral.dim())?;
    let mut out = CMatrix::zeros(spectral.dim(), spectral.dim());
    for &(n, m) in &freq.pairs {
        out += spectral.projection(m).matrix() * d * spectral.projection(n).matrix();
    }
    // Blocks that vanish in exact arithmetic come out at rounding level when
    // the eigenbasis is not the standard one.
    if frobenius(&out) <= KRAUS_ZERO_TOL * frobenius(d) {
        out.fill(c64(0.0, 0.0));
    }
    Ok(out)
}

/// Thermal rates `(Γ₊, Γ₋) = (c/(e^{βω}−1), c·e^{βω}/(e^{βω}−1))`.
///
/// Written with `expm1` so that large `βω` degrades gracefully to `(0, c)`.
pub fn gamma_from_temperature(c: f64, beta: f64, omega: f64) -> Result<(f64, f64)> {
    let x = beta * omega;
    if !(x > 0.0) || !x.is_finite() && x != f64::INFINITY {
        return Err(Error::InvalidParameter(format!("β·ω must be positive, got {x}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c_ω must be finite and non-negative, got {c}")));
    }
    if c == 0.0 {
        return Ok((0.0, 0.0));
    }
    let gamma_plus = c / x.exp_m1();
    let gamma_minus = c / -(-x).exp_m1();
    Ok((gamma_plus, gamma_minus))
}

/// One Bohr-frequency channel of a generator.
#[derive(Clone, Debug)]
pub struct FrequencyChannel {
    freq: BohrFrequency,
    kraus: CMatrix,
    rates: ChannelRates,
    dtd: CMatrix,
    ddt: CMatrix,
    trivial: bool,
}

impl FrequencyChannel {
    pub fn new(freq: BohrFrequency, kraus: CMatrix, rates: ChannelRates) -> Result<Self> {
        ensure_square(&kraus)?;
        ensure_finite(&kraus)?;
        rates.validate()?;
        let dtd = kraus.adjoint() * &kraus;
        let ddt = &kraus * kraus.adjoint();
        let trivial = kraus.iter().all(|z| z.re == 0.0 && z.im == 0.0);
        Ok(Self {
            freq,
            kraus,
            rates,
            dtd,
            ddt,
            trivial,
        })
    }

    pub fn omega(&self) -> f64 {
        self.freq.omega
    }

    pub fn frequency(&self) -> &BohrFrequency {
        &self.freq
    }

    pub fn kraus(&self) -> &CMatrix {
        &self.kraus
    }

    pub fn rates(&self) -> &ChannelRates {
        &self.rates
    }

    /// `D_ω = 0`; such channels are kept but never applied.
    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn effective_hamiltonian(&self) -> HermitianOperator {
        effective_hamiltonian(self)
    }

    /// `γ₋/2 D†D + γ₊/2 DD† + iΔ`, so the no-jump part reads `−Kρ − ρK†`.
    fn damping_operator(&self) -> CMatrix {
        let r = &self.rates;
        let delta = &self.dtd * c64(r.zeta_minus, 0.0) + &self.ddt * c64(r.zeta_plus, 0.0);
        &self.dtd * c64(0.5 * r.gamma_minus, 0.0) + &self.ddt * c64(0.5 * r.gamma_plus, 0.0) + delta * c64(0.0, 1.0)
    }
}

/// `Δ_ω = ζ₋ D_ω†D_ω + ζ₊ D_ωD_ω†`.
pub fn effective_hamiltonian(ch: &FrequencyChannel) -> HermitianOperator {
    let r = ch.rates();
    let delta = &ch.dtd * c64(r.zeta_minus, 0.0) + &ch.ddt * c64(r.zeta_plus, 0.0);
    HermitianOperator::from_hermitian_part(&delta).expect("finite")
}

/// A frequency-keyed value, either constant or listed per frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencyValues {
    Constant(f64),
    PerFrequency(Vec<FrequencyValue>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyValue {
    pub omega: f64,
    pub value: f64,
}

/// An explicit channel entry; `omega` may be omitted only if every entry
/// omits it, in which case entries are matched to frequencies in ascending
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(flatten)]
    pub rates: ChannelRates,
}

/// How coefficients are assigned to the Bohr frequencies of a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSchedule {
    Explicit(Vec<ChannelSpec>),
    /// Thermal rates from `c_ω` and `β(ω)`; Hamiltonian coefficients are zero.
    /// Frequencies absent from a per-frequency `c` list get `c = 0`.
    Temperature { c: FrequencyValues, beta: FrequencyValues },
}

fn matches(omega: f64, target: f64, tol: f64) -> bool {
    (omega - target).abs() <= tol * (1.0 + target.abs())
}

fn lookup(values: &FrequencyValues, omega: f64, tol: f64) -> Option<f64> {
    match values {
        FrequencyValues::Constant(v) => Some(*v),
        FrequencyValues::PerFrequency(list) => list.iter().find(|fv| matches(fv.omega, omega, tol)).map(|fv| fv.value),
    }
}

fn check_listed(values: &FrequencyValues, freqs: &[BohrFrequency], tol: f64) -> Result<()> {
    if let FrequencyValues::PerFrequency(list) = values {
        for fv in list {
            if !freqs.iter().any(|f| matches(fv.omega, f.omega, tol)) {
                return Err(Error::UnmatchedFrequency(fv.omega));
            }
        }
    }
    Ok(())
}

impl RateSchedule {
    /// Coefficients for each frequency of `freqs`, in order.
    pub fn resolve(&self, freqs: &[BohrFrequency], tol: f64) -> Result<Vec<ChannelRates>> {
        match self {
            RateSchedule::Explicit(entries) => {
                let with_omega = entries.iter().filter(|e| e.omega.is_some()).count();
                if with_omega == 0 && !entries.is_empty() {
                    if entries.len() != freqs.len() {
                        return Err(Error::Spec(format!(
                            "{} positional channel entries for {} Bohr frequencies",
                            entries.len(),
                            freqs.len()
                        )));
                    }
                    return Ok(entries.iter().map(|e| e.rates).collect());
                }
                if with_omega != entries.len() {
                    return Err(Error::Spec("either all channel entries carry omega or none do".into()));
                }
                let mut out = vec![None; freqs.len()];
                for e in entries {
                    let w = e.omega.unwrap();
                    let k = freqs
                        .iter()
                        .position(|f| matches(w, f.omega, tol))
                        .ok_or(Error::UnmatchedFrequency(w))?;
                    if out[k].is_some() {
                        return Err(Error::Spec(format!("frequency {w} listed twice")));
                    }
                    out[k] = Some(e.rates);
                }
                Ok(out.into_iter().map(Option::unwrap_or_default).collect())
            }
            RateSchedule::Temperature { c, beta } => {
                check_listed(c, freqs, tol)?;
                check_listed(beta, freqs, tol)?;
                freqs
                    .iter()
                    .map(|f| {
                        let c_w = lookup(c, f.omega, tol).unwrap_or(0.0);
                        if c_w == 0.0 {
                            return Ok(ChannelRates::default());
                        }
                        let b = lookup(beta, f.omega, tol)
                            .ok_or_else(|| Error::Spec(format!("no inverse temperature for frequency {}", f.omega)))?;
                        let (gp, gm) = gamma_from_temperature(c_w, b, f.omega)?;
                        Ok(ChannelRates::dissipative(gm, gp))
                    })
                    .collect()
            }
        }
    }
}

/// A WCLT generator: spectral data, interaction operator, and one channel per
/// Bohr frequency.
#[derive(Clone, Debug)]
pub struct WcltGenerator {
    spectral: SpectralData,
    interaction: CMatrix,
    channels: Vec<FrequencyChannel>,
    commutant_term: Option<HermitianOperator>,
    // −Kρ − ρK† collects every non-jump term.
    damping: CMatrix,
    // (rate, L, L†) for the jump terms rate · LρL†.
    jumps: Vec<(f64, CMatrix, CMatrix)>,
}

impl WcltGenerator {
    /// `rates[k]` belongs to the k-th frequency of [`bohr_frequencies`].
    pub fn new(spectral: SpectralData, interaction: CMatrix, rates: &[ChannelRates]) -> Result<Self> {
        let freqs = bohr_frequencies(&spectral, spectral.cluster_tol());
        if rates.len() != freqs.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} channel rate sets", freqs.len()),
                found: format!("{}", rates.len()),
            });
        }
        ensure_dim(&interaction, spectral.dim())?;
        ensure_finite(&interaction)?;
        let channels = freqs
            .into_iter()
            .zip(rates)
            .map(|(f, r)| {
                let k = kraus_operator(&interaction, &f, &spectral)?;
                FrequencyChannel::new(f, k, *r)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut gen = Self {
            spectral,
            interaction,
            channels,
            commutant_term: None,
            damping: CMatrix::zeros(0, 0),
            jumps: Vec::new(),
        };
        gen.assemble();
        Ok(gen)
    }

    pub fn with_schedule(spectral: SpectralData, interaction: CMatrix, schedule: &RateSchedule) -> Result<Self> {
        let freqs = bohr_frequencies(&spectral, spectral.cluster_tol());
        let rates = schedule.resolve(&freqs, spectral.cluster_tol())?;
        Self::new(spectral, interaction, &rates)
    }

    /// Adds `−i[Δ₁, ρ]` with `Δ₁` in the commutant of `H` (checked to `tol`).
    pub fn with_commutant_term(mut self, delta1: HermitianOperator, tol: f64) -> Result<Self> {
        ensure_dim(delta1.matrix(), self.dim())?;
        let h = self.spectral.hamiltonian();
        let c = max_abs(&commutator(delta1.matrix(), h.matrix()));
        if c > tol {
            return Err(Error::InvalidParameter(format!(
                "commutant term does not commute with H (‖[Δ₁, H]‖ = {c:.3e})"
            )));
        }
        self.commutant_term = Some(delta1);
        self.assemble();
        Ok(self)
    }

    fn assemble(&mut self) {
        let d = self.dim();
        let mut damping = CMatrix::zeros(d, d);
        let mut jumps = Vec::new();
        for ch in self.channels.iter().filter(|c| !c.is_trivial()) {
            damping += ch.damping_operator();
            let r = ch.rates();
            if r.gamma_minus > 0.0 {
                jumps.push((r.gamma_minus, ch.kraus.clone(), ch.kraus.adjoint()));
            }
            if r.gamma_plus > 0.0 {
                jumps.push((r.gamma_plus, ch.kraus.adjoint(), ch.kraus.clone()));
            }
        }
        if let Some(d1) = &self.commutant_term {
            damping += d1.matrix() * c64(0.0, 1.0);
        }
        self.damping = damping;
        self.jumps = jumps;
    }

    pub fn dim(&self) -> usize {
        self.spectral.dim()
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn interaction(&self) -> &CMatrix {
        &self.interaction
    }

    pub fn channels(&self) -> &[FrequencyChannel] {
        &self.channels
    }

    pub fn nontrivial_channels(&self) -> impl Iterator<Item = &FrequencyChannel> {
        self.channels.iter().filter(|c| !c.is_trivial())
    }

    pub fn commutant_term(&self) -> Option<&HermitianOperator> {
        self.commutant_term.as_ref()
    }

    /// Channel whose frequency matches `omega` within the clustering tolerance.
    pub fn channel(&self, omega: f64) -> Option<&FrequencyChannel> {
        let tol = self.spectral.cluster_tol();
        self.channels.iter().find(|c| matches(omega, c.omega(), tol))
    }

    /// `Σ_ω Δ_ω` plus the commutant term, if any.
    pub fn total_effective_hamiltonian(&self) -> HermitianOperator {
        let d = self.dim();
        let mut h = CMatrix::zeros(d, d);
        for ch in self.nontrivial_channels() {
            h += ch.effective_hamiltonian().matrix();
        }
        if let Some(d1) = &self.commutant_term {
            h += d1.matrix();
        }
        HermitianOperator::from_hermitian_part(&h).expect("finite")
    }

    /// Schrödinger-picture generator `L_*(ρ)`.
    pub fn apply_predual(&self, rho: &CMatrix) -> Result<CMatrix> {
        ensure_dim(rho, self.dim())?;
        Ok(self.predual(rho))
    }

    pub(crate) fn predual(&self, rho: &CMatrix) -> CMatrix {
        let mut out = -(&self.damping * rho) - rho * self.damping.adjoint();
        for (rate, l, l_dag) in &self.jumps {
            out += l * rho * l_dag * c64(*rate, 0.0);
        }
        out
    }

    /// Heisenberg-picture generator `L(x)`, the Hilbert–Schmidt dual of `L_*`.
    pub fn apply_adjoint(&self, x: &CMatrix) -> Result<CMatrix> {
        ensure_dim(x, self.dim())?;
        Ok(self.adjoint(x))
    }

    pub(crate) fn adjoint(&self, x: &CMatrix) -> CMatrix {
        let mut out = -(self.damping.adjoint() * x) - x * &self.damping;
        for (rate, l, l_dag) in &self.jumps {
            out += l_dag * x * l * c64(*rate, 0.0);
        }
        out
    }

    /// Matrix of `L_*` acting on column-stacked density matrices.
    pub fn superoperator_matrix(&self) -> Result<CMatrix> {
        self.superoperator_matrix_capped(DEFAULT_SUPEROPERATOR_CAP)
    }

    pub fn superoperator_matrix_capped(&self, cap: usize) -> Result<CMatrix> {
        let d = self.dim();
        if d > cap {
            return Err(Error::DimensionCap { dim: d, cap });
        }
        let id = identity(d);
        // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
        let mut m = -kron(&id, &self.damping) - kron(&self.damping.conjugate(), &id);
        for (rate, l, l_dag) in &self.jumps {
            m += kron(&l_dag.transpose(), l) * c64(*rate, 0.0);
        }
        Ok(m)
    }

    /// Power-iteration estimate of the Frobenius-induced norm of `L_*`.
    pub fn norm_estimate(&self) -> f64 {
        let d = self.dim();
        let mut x = CMatrix::from_fn(d, d, |i, j| c64(1.0 + (i as f64) * 0.37, 0.11 * (j as f64) - 0.05 * (i as f64)));
        let n0 = frobenius(&x);
        x /= c64(n0, 0.0);
        let mut est = 0.0;
        for _ in 0..40 {
            let y = self.predual(&x);
            let n = frobenius(&y);
            if n == 0.0 {
                return 0.0;
            }
            est = n;
            x = y / c64(n, 0.0);
        }
        est
    }
}

impl From<&FrequencyChannel> for ChannelRates {
    fn from(ch: &FrequencyChannel) -> Self {
        ch.rates
    }
}

/// Ratio `γ₋/γ₊` of a channel, `None` when `γ₊ = 0`.
pub fn rate_ratio(ch: &FrequencyChannel) -> Option<f64> {
    let r = ch.rates();
    (r.gamma_plus > 0.0).then(|| r.gamma_minus / r.gamma_plus)
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<WcltGenerator>();
    check::<C64>();
}

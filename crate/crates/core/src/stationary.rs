//! Interaction-free subspace, annihilator and detailed-balance tests,
//! stationary states and subharmonic projections.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve_adjoint, limit_state, EvolveOptions, StepControl};
use crate::generator::{rate_ratio, WcltGenerator};
use crate::linalg::{
    c64, commutator, ensure_dim, frobenius, hermitian_eigenvalues, identity, intersect, kernel, unvec, CMatrix,
    DensityMatrix, HermitianOperator, Subspace, C64, DEFAULT_KERNEL_TOL,
};

/// How `W_D` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WdRoute {
    /// `⋂_ω ker D_ω ∩ ker D_ω†`
    KernelPairs,
    /// `⋂_ω ker(D_ωD_ω† + D_ω†D_ω)`
    Quadratic,
}

/// The interaction-free subspace `W_D`.
pub fn interaction_free_subspace(gen: &WcltGenerator, route: WdRoute) -> Result<Subspace> {
    let d = gen.dim();
    let mut parts = vec![Subspace::full(d)];
    for ch in gen.nontrivial_channels() {
        let k = ch.kraus();
        match route {
            WdRoute::KernelPairs => {
                parts.push(kernel(k, DEFAULT_KERNEL_TOL)?);
                parts.push(kernel(&k.adjoint(), DEFAULT_KERNEL_TOL)?);
            }
            WdRoute::Quadratic => {
                let q = k * k.adjoint() + k.adjoint() * k;
                parts.push(kernel(&q, DEFAULT_KERNEL_TOL)?);
            }
        }
    }
    intersect(&parts)
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnihilatorReport {
    pub member: bool,
    /// `(ω, tr(ρD_ω))` for every channel.
    pub traces: Vec<(f64, C64)>,
}

/// Whether `tr(ρD_ω) = 0` for every Bohr frequency, within `tol`.
pub fn annihilator_membership(gen: &WcltGenerator, rho: &DensityMatrix, tol: f64) -> Result<AnnihilatorReport> {
    ensure_dim(rho.matrix(), gen.dim())?;
    let traces: Vec<(f64, C64)> = gen
        .channels()
        .iter()
        .map(|ch| (ch.omega(), (rho.matrix() * ch.kraus()).trace()))
        .collect();
    let member = traces.iter().all(|(_, z)| z.norm() <= tol);
    Ok(AnnihilatorReport { member, traces })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceKind {
    Annihilating,
    Detailed,
    LocalDetailed,
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelBalance {
    pub omega: f64,
    /// Least-squares `c` with `ρD_ω ≈ c·D_ωρ`; absent when both products vanish
    /// or when only `D_ωρ` does.
    pub c: Option<C64>,
    /// `‖ρD_ω − c·D_ωρ‖ / max(‖ρD_ω‖, ‖D_ωρ‖)`
    pub residual: f64,
    /// `γ₋/γ₊`, absent when `γ₊ = 0`.
    pub rate_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BalanceClassification {
    pub kind: BalanceKind,
    pub channels: Vec<ChannelBalance>,
}

impl BalanceClassification {
    pub fn c_value(&self, omega: f64, tol: f64) -> Option<C64> {
        self.channels
            .iter()
            .find(|c| (c.omega - omega).abs() <= tol * (1.0 + omega.abs()))
            .and_then(|c| c.c)
    }
}

/// Classifies `ρ` by the relation `ρD_ω = c_ω D_ωρ` over the nontrivial channels.
pub fn detailed_balance_classify(gen: &WcltGenerator, rho: &DensityMatrix, tol: f64) -> Result<BalanceClassification> {
    ensure_dim(rho.matrix(), gen.dim())?;
    let r = rho.matrix();
    let mut channels = Vec::new();
    let mut all_vanish = true;
    let mut local = true;
    let mut detailed = true;
    for ch in gen.nontrivial_channels() {
        let k = ch.kraus();
        let scale = frobenius(k);
        let left = r * k;
        let right = k * r;
        let (nl, nr) = (frobenius(&left), frobenius(&right));
        let ratio = rate_ratio(ch);
        let vanish = |n: f64| n <= tol * scale;
        if vanish(nl) && vanish(nr) {
            channels.push(ChannelBalance {
                omega: ch.omega(),
                c: None,
                residual: 0.0,
                rate_ratio: ratio,
            });
            continue;
        }
        all_vanish = false;
        if vanish(nr) {
            local = false;
            channels.push(ChannelBalance {
                omega: ch.omega(),
                c: None,
                residual: 1.0,
                rate_ratio: ratio,
            });
            continue;
        }
        let c = right.dotc(&left) / c64(nr * nr, 0.0);
        let residual = frobenius(&(&left - &right * c)) / nl.max(nr);
        if residual > tol {
            local = false;
        }
        match ratio {
            Some(q) if (c - c64(q, 0.0)).norm() <= tol * q.max(1.0) => {}
            _ => detailed = false,
        }
        channels.push(ChannelBalance {
            omega: ch.omega(),
            c: Some(c),
            residual,
            rate_ratio: ratio,
        });
    }
    let kind = if all_vanish {
        BalanceKind::Annihilating
    } else if local && detailed {
        BalanceKind::Detailed
    } else if local {
        BalanceKind::LocalDetailed
    } else {
        BalanceKind::None
    };
    Ok(BalanceClassification { kind, channels })
}

/// Kernel of the superoperator together with the long-time limit of `I/d`.
#[derive(Clone, Debug)]
pub struct StationaryKernel {
    /// Subspace of `C^{d²}` in column-stacked coordinates.
    pub kernel: Subspace,
    /// Largest `‖L_*(unvec k)‖_F` over the kernel basis.
    pub kernel_residual: f64,
    pub canonical: DensityMatrix,
    pub canonical_residual: f64,
}

impl StationaryKernel {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Kernel basis elements as `d × d` matrices.
    pub fn operators(&self) -> Vec<CMatrix> {
        let d = self.canonical.dim();
        self.kernel.basis().column_iter().map(|c| unvec(&c.into_owned(), d)).collect()
    }
}

const STATIONARY_TOL: f64 = 1e-9;

pub fn stationary_kernel(gen: &WcltGenerator) -> Result<StationaryKernel> {
    let d = gen.dim();
    let m = gen.superoperator_matrix()?;
    let ker = kernel(&m, DEFAULT_KERNEL_TOL)?;
    let mut kernel_residual: f64 = 0.0;
    for col in ker.basis().column_iter() {
        let k = unvec(&col.into_owned(), d);
        kernel_residual = kernel_residual.max(frobenius(&gen.predual(&k)));
    }
    if kernel_residual > STATIONARY_TOL {
        return Err(Error::NotStationary {
            residual: kernel_residual,
            t: 0.0,
        });
    }
    let rep = limit_state(gen, &DensityMatrix::maximally_mixed(d), 0.1 * STATIONARY_TOL, 1e4)?;
    if rep.residual > STATIONARY_TOL {
        return Err(Error::NotStationary {
            residual: rep.residual,
            t: rep.t,
        });
    }
    Ok(StationaryKernel {
        kernel: ker,
        kernel_residual,
        canonical: rep.state,
        canonical_residual: rep.residual,
    })
}

/// `ρ = θ ρ_W + (1 − θ) ρ_⊥` with `ρ_W` supported on `W` and `ρ_⊥` on `W^⊥`.
#[derive(Clone, Debug)]
pub struct StructureDecomposition {
    pub theta: f64,
    pub rho_wd: Option<DensityMatrix>,
    pub rho_perp: Option<DensityMatrix>,
}

impl StructureDecomposition {
    pub fn reconstruct(&self, d: usize) -> CMatrix {
        let mut out = CMatrix::zeros(d, d);
        if let Some(r) = &self.rho_wd {
            out += r.matrix() * c64(self.theta, 0.0);
        }
        if let Some(r) = &self.rho_perp {
            out += r.matrix() * c64(1.0 - self.theta, 0.0);
        }
        out
    }
}

/// Splits `ρ` along `W` and `W^⊥`; refuses states that do not commute with
/// the projector onto `W`.
pub fn decompose_state(rho: &DensityMatrix, wd: &Subspace, tol: f64) -> Result<StructureDecomposition> {
    let d = rho.dim();
    if wd.ambient_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("subspace of C^{d}"),
            found: format!("subspace of C^{}", wd.ambient_dim()),
        });
    }
    let p = wd.projector().into_matrix();
    let r = rho.matrix();
    let c = frobenius(&commutator(r, &p));
    if c > tol {
        return Err(Error::MissingBlockStructure(c));
    }
    let q = identity(d) - &p;
    let theta = (&p * r).trace().re.clamp(0.0, 1.0);
    let part = |proj: &CMatrix, w: f64| -> Result<Option<DensityMatrix>> {
        if w <= tol {
            return Ok(None);
        }
        let m = proj * r * proj / c64(w, 0.0);
        DensityMatrix::with_tolerances(m, 1e-8, 1e-8).map(Some)
    };
    Ok(StructureDecomposition {
        theta,
        rho_wd: part(&p, theta)?,
        rho_perp: part(&q, 1.0 - theta)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubharmonicSample {
    pub t: f64,
    pub min_eig: f64,
    pub max_eig: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubharmonicReport {
    /// Spectrum bounds of `T_t(p) − p` at each sampled time.
    pub samples: Vec<SubharmonicSample>,
    /// Minimum eigenvalue of `L(p)` compressed to the range of `1 − p`.
    pub infinitesimal_min_eig: f64,
    pub subharmonic: bool,
    pub harmonic: bool,
}

/// Samples `T_t(p) − p` at the given times; `p` must be an orthogonal projection.
pub fn is_subharmonic(gen: &WcltGenerator, p: &HermitianOperator, times: &[f64], tol: f64) -> Result<SubharmonicReport> {
    ensure_dim(p.matrix(), gen.dim())?;
    let defect = p.projection_defect();
    if defect > 1e-10 {
        return Err(Error::NotProjection(defect));
    }
    let mut sorted: Vec<f64> = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.is_empty() || !(sorted[0] > 0.0) {
        return Err(Error::InvalidParameter("sample times must be positive".into()));
    }
    let t_end = *sorted.last().unwrap();
    let opts = EvolveOptions {
        control: StepControl::Adaptive { tol: 1e-12 },
        sample_times: sorted,
        keep_states: false,
    };
    let traj = evolve_adjoint(gen, p, t_end, &opts)?;
    let samples: Vec<SubharmonicSample> = traj
        .iter()
        .skip(1)
        .map(|(t, x)| {
            let ev = hermitian_eigenvalues(&(x.matrix() - p.matrix()));
            SubharmonicSample {
                t: *t,
                min_eig: ev[0],
                max_eig: *ev.last().unwrap(),
            }
        })
        .collect();

    let lp = gen.adjoint(p.matrix());
    let perp = kernel(p.matrix(), 1e-8)?;
    let infinitesimal_min_eig = if perp.dim() == 0 {
        0.0
    } else {
        let b = perp.basis();
        hermitian_eigenvalues(&(b.adjoint() * &lp * b))[0]
    };

    let subharmonic = samples.iter().all(|s| s.min_eig >= -tol);
    let harmonic = subharmonic && samples.iter().all(|s| s.max_eig <= tol);
    Ok(SubharmonicReport {
        samples,
        infinitesimal_min_eig,
        subharmonic,
        harmonic,
    })
}

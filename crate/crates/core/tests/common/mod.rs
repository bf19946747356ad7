//! Reference constructions built directly from definitions, used to check
//! the library against a second route.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::Rng;

pub type M = DMatrix<C>;
pub type V = DVector<C>;

pub fn re(x: f64) -> C {
    C::new(x, 0.0)
}

pub fn e(d: usize, i: usize) -> V {
    let mut v = V::zeros(d);
    v[i] = re(1.0);
    v
}

pub fn outer(u: &V, v: &V) -> M {
    u * v.adjoint()
}

pub fn fro(a: &M) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn tr(a: &M) -> C {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

pub fn eigs(a: &M) -> Vec<f64> {
    let h = (a + a.adjoint()) * re(0.5);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn trace_distance(a: &M, b: &M) -> f64 {
    0.5 * eigs(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Orthogonal projector onto the span of `vs` (modified Gram–Schmidt).
pub fn span_projector(d: usize, vs: &[V]) -> M {
    let mut basis: Vec<V> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n > 1e-9 * v.norm().max(1.0) {
            basis.push(w / re(n));
        }
    }
    basis.iter().fold(M::zeros(d, d), |acc, b| acc + outer(b, b))
}

pub fn random_complex<R: Rng>(rng: &mut R, r: usize, c: usize) -> M {
    M::from_fn(r, c, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random density matrix supported on the range of the projector `p`.
pub fn random_state_on<R: Rng>(rng: &mut R, p: &M) -> M {
    let a = random_complex(rng, p.nrows(), p.ncols());
    let s = p * &a * a.adjoint() * p;
    let s = (&s + s.adjoint()) * re(0.5);
    let t = tr(&s).re;
    s / re(t)
}

/// One dissipative channel `(ω, D_ω, γ₋, γ₊, ζ₋, ζ₊)`.
#[derive(Clone, Debug)]
pub struct Chan {
    pub omega: f64,
    pub k: M,
    pub gm: f64,
    pub gp: f64,
    pub zm: f64,
    pub zp: f64,
}

/// Splits `d` by the energy drop `E_j − E_i > 0` for diagonal `H`.
pub fn channels_diag(energies: &[f64], d: &M, rates: impl Fn(f64) -> (f64, f64, f64, f64)) -> Vec<Chan> {
    let n = energies.len();
    let mut omegas: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let w = energies[j] - energies[i];
            if w > 1e-9 && !omegas.iter().any(|o| (o - w).abs() < 1e-9) {
                omegas.push(w);
            }
        }
    }
    omegas.sort_by(f64::total_cmp);
    omegas
        .into_iter()
        .map(|w| {
            let k = M::from_fn(n, n, |i, j| if (energies[j] - energies[i] - w).abs() < 1e-9 { d[(i, j)] } else { re(0.0) });
            let (gm, gp, zm, zp) = rates(w);
            Chan { omega: w, k, gm, gp, zm, zp }
        })
        .collect()
}

pub fn interaction_free_projector(chans: &[Chan], d: usize) -> M {
    let mut cols = Vec::new();
    for c in chans {
        for k in [c.k.clone(), c.k.adjoint()] {
            cols.extend(k.column_iter().map(|v| v.into_owned()));
        }
    }
    M::identity(d, d) - span_projector(d, &cols)
}

pub fn lamb_shift(chans: &[Chan], d: usize) -> M {
    chans.iter().fold(M::zeros(d, d), |acc, c| {
        acc + c.k.adjoint() * &c.k * re(c.zm) + &c.k * c.k.adjoint() * re(c.zp)
    })
}

fn dissipator(l: &M, rho: &M) -> M {
    let ldl = l.adjoint() * l;
    l * rho * l.adjoint() - (&ldl * rho + rho * &ldl) * re(0.5)
}

fn dissipator_adj(l: &M, x: &M) -> M {
    let ldl = l.adjoint() * l;
    l.adjoint() * x * l - (&ldl * x + x * &ldl) * re(0.5)
}

/// `−i[Δ, ρ] + Σ γ₋ 𝒟[D](ρ) + γ₊ 𝒟[D†](ρ)`
pub fn schrodinger(chans: &[Chan], rho: &M) -> M {
    let d = rho.nrows();
    let delta = lamb_shift(chans, d);
    let mut out = (&delta * rho - rho * &delta) * C::new(0.0, -1.0);
    for c in chans {
        out += dissipator(&c.k, rho) * re(c.gm) + dissipator(&c.k.adjoint(), rho) * re(c.gp);
    }
    out
}

pub fn heisenberg(chans: &[Chan], x: &M) -> M {
    let d = x.nrows();
    let delta = lamb_shift(chans, d);
    let mut out = (&delta * x - x * &delta) * C::new(0.0, 1.0);
    for c in chans {
        out += dissipator_adj(&c.k, x) * re(c.gm) + dissipator_adj(&c.k.adjoint(), x) * re(c.gp);
    }
    out
}

/// Column-stacked matrix of a linear map, assembled from matrix units.
pub fn matrix_of(d: usize, f: impl Fn(&M) -> M) -> M {
    let mut out = M::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let mut u = M::zeros(d, d);
            u[(i, j)] = re(1.0);
            let img = f(&u);
            for c in 0..d {
                for r in 0..d {
                    out[(c * d + r, j * d + i)] = img[(r, c)];
                }
            }
        }
    }
    out
}

pub fn vecm(a: &M) -> V {
    V::from_iterator(a.len(), a.iter().copied())
}

pub fn unvecm(v: &V, d: usize) -> M {
    M::from_iterator(d, d, v.iter().copied())
}

/// `exp(tL)` applied to `a`, with `L` given by its column-stacked matrix.
pub fn propagate(l: &M, a: &M, t: f64) -> M {
    let d = a.nrows();
    unvecm(&((l * re(t)).exp() * vecm(a)), d)
}

/// `exp(T L) a` at `T = 20·2⁶`, computed by repeated squaring.
pub fn long_time(l: &M, a: &M) -> M {
    let d = a.nrows();
    let mut e = (l * re(20.0)).exp();
    for _ in 0..6 {
        e = &e * &e;
    }
    unvecm(&(e * vecm(a)), d)
}

/// `(Γ_Re,−, Γ_Re,+, Γ_Im,−, Γ_Im,+)` for each of the three active frequencies.
pub type Gammas = [[f64; 4]; 3];

pub const DEFAULT_GAMMAS: Gammas = [[1.0, 1.0, 0.5, 0.5], [2.0, 1.0, 0.5, 0.5], [1.0, 0.0, 0.5, 0.0]];

pub struct Akv {
    pub n: usize,
    pub m: usize,
    pub dim: usize,
    pub energies: Vec<f64>,
    pub z: M,
    pub psi: V,
    pub psi_p: V,
    pub p: [M; 4],
    pub d: M,
    pub chans: Vec<Chan>,
    pub gammas: Gammas,
}

pub fn akv(n: usize, m: usize, eps: [f64; 3], gammas: Gammas) -> Akv {
    let dim = n + m + 1;
    let mut energies = vec![0.0, eps[0]];
    energies.extend(std::iter::repeat_n(eps[1], n - 1));
    energies.extend(std::iter::repeat_n(eps[2], m));
    let k = (n - 1) as f64;
    let mut z = M::zeros(dim, dim);
    for b in n + 1..=n + m {
        for a in 2..=n {
            let phase = 2.0 * PI * (a as f64 - k) * (b as f64 - (n + 1) as f64) / k;
            z[(b, a)] = C::from_polar(1.0 / k.sqrt(), phase);
        }
    }
    let psi = (2..=n).fold(V::zeros(dim), |acc, i| acc + e(dim, i));
    let psi_p = (n + 1..dim).fold(V::zeros(dim), |acc, i| acc + e(dim, i));
    let diag = |lo: usize, hi: usize| M::from_fn(dim, dim, |i, j| if i == j && i >= lo && i < hi { re(1.0) } else { re(0.0) });
    let p = [diag(0, 1), diag(1, 2), diag(2, n + 1), diag(n + 1, dim)];
    let s = re(1.0 / k.sqrt());
    let d = outer(&psi, &e(dim, 1)) * s + &z + outer(&e(dim, 0), &psi_p) * s;
    let chans = channels_diag(&energies, &d, |w| {
        let idx = [eps[0] - eps[1], eps[1] - eps[2], eps[2]].iter().position(|x| (x - w).abs() < 1e-9);
        match idx {
            Some(i) => {
                let g = gammas[i];
                (2.0 * k * g[0], 2.0 * k * g[1], -k * g[2], k * g[3])
            }
            None => (0.0, 0.0, 0.0, 0.0),
        }
    });
    Akv { n, m, dim, energies, z, psi, psi_p, p, d, chans, gammas }
}

impl Akv {
    pub fn abs_z(&self) -> M {
        self.z.adjoint() * &self.z
    }

    pub fn q(&self) -> M {
        let span = span_projector(self.dim, &[self.psi.clone(), self.z.adjoint() * &self.psi_p]);
        let id = M::identity(self.dim, self.dim);
        let q = self.abs_z() * (id - span);
        (&q + q.adjoint()) * re(0.5)
    }

    /// `P0 + (P2 − |Z|)`
    pub fn p_dark(&self) -> M {
        &self.p[0] + &self.p[2] - self.abs_z()
    }

    /// `W_D` straight from the definition: the orthogonal complement of the
    /// ranges of every `D_ω` and `D_ω*`.
    pub fn p_wd(&self) -> M {
        interaction_free_projector(&self.chans, self.dim)
    }

    pub fn p_v(&self) -> M {
        let dim = self.dim;
        let vs = [
            e(dim, 0),
            e(dim, 1),
            self.psi.clone(),
            self.psi_p.clone(),
            &self.z * &self.psi,
            self.z.adjoint() * &self.psi_p,
        ];
        M::identity(dim, dim) - span_projector(dim, &vs)
    }

    /// `(w₊, w₋)` of the `ω2` channel.
    pub fn weights(&self) -> (f64, f64) {
        let g = self.gammas[1];
        (g[1] / (g[0] + g[1]), g[0] / (g[0] + g[1]))
    }

    pub fn superop(&self) -> M {
        matrix_of(self.dim, |r| schrodinger(&self.chans, r))
    }

    pub fn superop_adj(&self) -> M {
        matrix_of(self.dim, |x| heisenberg(&self.chans, x))
    }

    pub fn h_eff(&self) -> M {
        lamb_shift(&self.chans, self.dim)
    }
}

pub struct Kv {
    pub n: usize,
    pub dim: usize,
    pub chi: V,
    pub p0: M,
    pub p1: M,
    pub chans: Vec<Chan>,
}

/// KV model with rates `(γ₋, γ₊)` on `ω = ε2`, `ε2 − ε1`, `ε1`.
pub fn kv(n: usize, eps1: f64, eps2: f64, theta: f64, rates: [(f64, f64); 3]) -> Kv {
    let dim = n + 1;
    let mut energies = vec![0.0, eps1];
    energies.extend(std::iter::repeat_n(eps2, n - 1));
    let chi = (2..=n).fold(V::zeros(dim), |acc, i| acc + e(dim, i));
    let big_psi = &chi * C::from_polar(1.0, theta);
    let d = outer(&e(dim, 0), &chi) + outer(&e(dim, 1), &big_psi) + outer(&e(dim, 0), &e(dim, 1));
    let chans = channels_diag(&energies, &d, |w| {
        let i = [eps2, eps2 - eps1, eps1].iter().position(|x| (x - w).abs() < 1e-9).unwrap();
        (rates[i].0, rates[i].1, 0.0, 0.0)
    });
    Kv {
        n,
        dim,
        p0: outer(&e(dim, 0), &e(dim, 0)),
        p1: outer(&e(dim, 1), &e(dim, 1)),
        chi,
        chans,
    }
}

impl Kv {
    pub fn chi_projector(&self) -> M {
        outer(&self.chi, &self.chi) / re(self.chi.norm_squared())
    }

    pub fn p_wd(&self) -> M {
        M::identity(self.dim, self.dim) - &self.p0 - &self.p1 - self.chi_projector()
    }

    pub fn superop(&self) -> M {
        matrix_of(self.dim, |r| schrodinger(&self.chans, r))
    }
}

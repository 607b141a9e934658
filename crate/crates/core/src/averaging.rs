//! Ground-state averages over the auxiliary oscillators, analytic and by
//! Monte Carlo, and the effective particle Hamiltonian `⟨H_s⟩` obtained by
//! averaging the Kepler energy over the auxiliary sectors.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotinv::{nc_coordinates_generic, system_energy, ExtendedState, TensorConfig, TensorKind, Vec3};

/// Samples per independent stream.
const BLOCK: u64 = 1 << 14;
/// Draws with `|X|` below this are rejected.
pub const SINGULARITY_GUARD: f64 = 1e-6;
/// Largest tolerated fraction of rejected draws.
pub const MAX_REJECTION_RATE: f64 = 0.01;
/// Agreement criterion in standard errors.
pub const SIGMA: f64 = 3.0;
/// Coupling step of the first-order check.
pub const FD_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSpec {
    pub l_p: f64,
}

impl GroundStateSpec {
    pub fn new(l_p: f64) -> Result<Self> {
        if !(l_p > 0.0 && l_p.is_finite()) {
            return Err(Error::DegenerateSampler(l_p));
        }
        Ok(Self { l_p })
    }

    pub fn from_config(cfg: &TensorConfig) -> Result<Self> {
        Self::new(cfg.l_p())
    }

    pub fn position_variance(&self) -> f64 {
        self.l_p * self.l_p / 2.0
    }

    pub fn momentum_variance(&self) -> f64 {
        1.0 / (2.0 * self.l_p * self.l_p)
    }

    fn check(&self) -> Result<(f64, f64)> {
        if !(self.l_p > 0.0) {
            return Err(Error::DegenerateSampler(self.l_p));
        }
        let (vq, vp) = (self.position_variance(), self.momentum_variance());
        if !(vq > 0.0 && vp > 0.0 && vq.is_finite() && vp.is_finite()) {
            return Err(Error::DegenerateSampler(if vq > 0.0 { vp } else { vq }));
        }
        Ok((vq.sqrt(), vp.sqrt()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n_samples: u64,
    pub seed: u64,
}

impl MCConfig {
    pub fn new(n_samples: u64, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidInput("n_samples must be positive".into()));
        }
        Ok(Self { n_samples, seed })
    }
}

/// Running mean and centred second moment.
#[derive(Clone, Copy, Debug)]
struct Stats<const K: usize> {
    n: u64,
    mean: [f64; K],
    m2: [f64; K],
}

impl<const K: usize> Stats<K> {
    fn empty() -> Self {
        Self { n: 0, mean: [0.0; K], m2: [0.0; K] }
    }

    fn push(&mut self, v: &[f64; K]) {
        self.n += 1;
        let n = self.n as f64;
        for i in 0..K {
            let d = v[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (v[i] - self.mean[i]);
        }
    }

    fn merge(a: &Self, b: &Self) -> Self {
        if a.n == 0 {
            return *b;
        }
        if b.n == 0 {
            return *a;
        }
        let n = a.n + b.n;
        let (na, nb, nf) = (a.n as f64, b.n as f64, n as f64);
        let mut out = Self { n, mean: [0.0; K], m2: [0.0; K] };
        for i in 0..K {
            let d = b.mean[i] - a.mean[i];
            out.mean[i] = a.mean[i] + d * nb / nf;
            out.m2[i] = a.m2[i] + b.m2[i] + d * d * na * nb / nf;
        }
        out
    }

    /// Standard error of the mean.
    fn se(&self, i: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        (self.m2[i] / (n - 1.0) / n).sqrt()
    }
}

fn pairwise<const K: usize>(parts: &[Stats<K>]) -> Stats<K> {
    match parts.len() {
        0 => Stats::empty(),
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            Stats::merge(&pairwise(l), &pairwise(r))
        }
    }
}

struct Accumulated<const K: usize> {
    stats: Stats<K>,
    rejected: u64,
    attempts: u64,
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `mc.n_samples` accepted samples from independent per-block streams.
/// `sample` returns `None` to reject a draw.
fn accumulate<const K: usize, F>(mc: &MCConfig, sample: F) -> Result<Accumulated<K>>
where
    F: Fn(&mut ChaCha8Rng) -> Option<[f64; K]> + Sync,
{
    if mc.n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be positive".into()));
    }
    let blocks = mc.n_samples.div_ceil(BLOCK);
    let parts: Vec<(Stats<K>, u64)> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<(Stats<K>, u64)> {
            let quota = BLOCK.min(mc.n_samples - b * BLOCK);
            let mut rng = stream(mc.seed, b);
            let mut stats = Stats::empty();
            let mut rejected = 0_u64;
            while stats.n < quota {
                match sample(&mut rng) {
                    Some(v) => stats.push(&v),
                    None => {
                        rejected += 1;
                        let limit = MAX_REJECTION_RATE * (quota + rejected) as f64;
                        if rejected as f64 > limit && rejected > 100 {
                            return Err(Error::ExcessiveRejection { rate: rejected as f64 / (stats.n + rejected) as f64 });
                        }
                    }
                }
            }
            Ok((stats, rejected))
        })
        .collect::<Result<_>>()?;
    let stats: Vec<Stats<K>> = parts.iter().map(|p| p.0).collect();
    let rejected: u64 = parts.iter().map(|p| p.1).sum();
    let acc = Accumulated { stats: pairwise(&stats), rejected, attempts: mc.n_samples + rejected };
    let rate = acc.rejected as f64 / acc.attempts as f64;
    if rate > MAX_REJECTION_RATE {
        return Err(Error::ExcessiveRejection { rate });
    }
    Ok(acc)
}

/// One draw of the auxiliary oscillators in their ground states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxiliaryDraw {
    pub a: Vec3,
    pub pa: Vec3,
    pub b: Vec3,
    pub pb: Vec3,
}

impl AuxiliaryDraw {
    fn sample<R: Rng>(rng: &mut R, sd_q: f64, sd_p: f64) -> Self {
        let mut g = |sd: f64| -> Vec3 { std::array::from_fn(|_| sd * rng.sample::<f64, _>(StandardNormal)) };
        let a = g(sd_q);
        let pa = g(sd_p);
        let b = g(sd_q);
        let pb = g(sd_p);
        Self { a, pa, b, pb }
    }

    pub fn with_particle(&self, x: Vec3, p: Vec3) -> ExtendedState {
        ExtendedState { x, p, a: self.a, pa: self.pa, b: self.b, pb: self.pb }
    }
}

/// One row of a moment report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub name: String,
    pub analytic: f64,
    pub estimate: Option<f64>,
    pub standard_error: Option<f64>,
}

impl Moment {
    fn exact(name: impl Into<String>, analytic: f64) -> Self {
        Self { name: name.into(), analytic, estimate: None, standard_error: None }
    }

    /// `|estimate − analytic| ≤ 3 SE`; true when there is no estimate.
    pub fn agrees(&self) -> bool {
        match (self.estimate, self.standard_error) {
            (Some(e), Some(se)) => (e - self.analytic).abs() <= SIGMA * se,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub l_p: f64,
    pub tensors: TensorKind,
    pub moments: Vec<Moment>,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
    pub rejection_rate: Option<f64>,
}

impl MomentReport {
    pub fn get(&self, name: &str) -> Option<&Moment> {
        self.moments.iter().find(|m| m.name == name)
    }

    pub fn all_agree(&self) -> bool {
        self.moments.iter().all(Moment::agrees)
    }
}

/// Coupling multiplying the auxiliary variable behind `θ_i` and `η_i`, and
/// whether the `θ` source is a momentum.
fn couplings(cfg: &TensorConfig, kind: TensorKind) -> (f64, bool, f64) {
    match kind {
        TensorKind::Position => (cfg.l0, false, cfg.p0),
        TensorKind::Momentum => (cfg.c_theta, true, cfg.c_eta),
    }
}

const AXES: [&str; 3] = ["1", "2", "3"];

fn analytic_rows(spec: &GroundStateSpec, cfg: &TensorConfig, kind: TensorKind) -> Vec<Moment> {
    let (vq, vp) = (spec.position_variance(), spec.momentum_variance());
    let (ct, theta_from_momentum, ce) = couplings(cfg, kind);
    let theta_i2 = ct * ct * if theta_from_momentum { vp } else { vq };
    let eta_i2 = ce * ce * vp;
    let mut rows = Vec::new();
    for i in AXES {
        rows.push(Moment::exact(format!("a{i}"), 0.0));
    }
    for i in AXES {
        rows.push(Moment::exact(format!("pb{i}"), 0.0));
    }
    for i in AXES {
        rows.push(Moment::exact(format!("a{i}^2"), vq));
    }
    for i in AXES {
        rows.push(Moment::exact(format!("pb{i}^2"), vp));
    }
    for i in AXES {
        rows.push(Moment::exact(format!("theta{i}^2"), theta_i2));
    }
    for i in AXES {
        rows.push(Moment::exact(format!("eta{i}^2"), eta_i2));
    }
    rows.push(Moment::exact("theta^2", 3.0 * theta_i2));
    rows.push(Moment::exact("eta^2", 3.0 * eta_i2));
    rows.push(Moment::exact("uncertainty_product", vq * vp));
    rows
}

/// Closed-form ground-state moments for the position-built tensors
/// `θ_i = l₀ a_i`, `η_i = p₀ pᵇ_i`.
pub fn moments_analytic(spec: &GroundStateSpec, cfg: &TensorConfig) -> MomentReport {
    moments_analytic_of_kind(spec, cfg, TensorKind::Position)
}

/// Closed-form moments for either tensor kind.
pub fn moments_analytic_of_kind(spec: &GroundStateSpec, cfg: &TensorConfig, kind: TensorKind) -> MomentReport {
    MomentReport {
        l_p: spec.l_p,
        tensors: kind,
        moments: analytic_rows(spec, cfg, kind),
        n_samples: None,
        seed: None,
        rejection_rate: None,
    }
}

/// Monte Carlo estimates of [`moments_analytic`] with standard errors.
pub fn moments_mc(spec: &GroundStateSpec, cfg: &TensorConfig, mc: &MCConfig) -> Result<MomentReport> {
    moments_mc_of_kind(spec, cfg, TensorKind::Position, mc)
}

const N_RAW: usize = 20;

pub fn moments_mc_of_kind(spec: &GroundStateSpec, cfg: &TensorConfig, kind: TensorKind, mc: &MCConfig) -> Result<MomentReport> {
    let (sd_q, sd_p) = spec.check()?;
    let (ct, theta_from_momentum, ce) = couplings(cfg, kind);
    let acc = accumulate::<N_RAW, _>(mc, |rng| {
        let d = AuxiliaryDraw::sample(rng, sd_q, sd_p);
        let src = if theta_from_momentum { d.pa } else { d.a };
        let mut v = [0.0; N_RAW];
        for i in 0..3 {
            v[i] = d.a[i];
            v[3 + i] = d.pb[i];
            v[6 + i] = d.a[i] * d.a[i];
            v[9 + i] = d.pb[i] * d.pb[i];
            v[12 + i] = (ct * src[i]).powi(2);
            v[15 + i] = (ce * d.pb[i]).powi(2);
        }
        // pooled single-component second moments of a and pᵃ
        v[18] = (d.a.iter().map(|c| c * c).sum::<f64>()) / 3.0;
        v[19] = (d.pa.iter().map(|c| c * c).sum::<f64>()) / 3.0;
        Some(v)
    })?;
    let s = &acc.stats;

    let mut rows = analytic_rows(spec, cfg, kind);
    for (idx, row) in rows.iter_mut().take(18).enumerate() {
        row.estimate = Some(s.mean[idx]);
        row.standard_error = Some(s.se(idx));
    }
    // θ² = Σ θ_i² is a sum of the three per-axis columns; components are independent
    let summed = |base: usize| {
        let mean = (0..3).map(|i| s.mean[base + i]).sum::<f64>();
        let se = (0..3).map(|i| s.se(base + i).powi(2)).sum::<f64>().sqrt();
        (mean, se)
    };
    let (t2, t2_se) = summed(12);
    let (e2, e2_se) = summed(15);
    rows[18].estimate = Some(t2);
    rows[18].standard_error = Some(t2_se);
    rows[19].estimate = Some(e2);
    rows[19].standard_error = Some(e2_se);
    let (q2, p2) = (s.mean[18], s.mean[19]);
    let (q2_se, p2_se) = (s.se(18), s.se(19));
    rows[20].estimate = Some(q2 * p2);
    rows[20].standard_error = Some(((p2 * q2_se).powi(2) + (q2 * p2_se).powi(2)).sqrt());

    Ok(MomentReport {
        l_p: spec.l_p,
        tensors: kind,
        moments: rows,
        n_samples: Some(mc.n_samples),
        seed: Some(mc.seed),
        rejection_rate: Some(acc.rejected as f64 / acc.attempts as f64),
    })
}

/// Per-axis `⟨θ_i²⟩` estimates pairwise within 3 combined standard errors.
pub fn isotropic(report: &MomentReport, prefix: &str) -> bool {
    let rows: Vec<&Moment> = AXES.iter().filter_map(|i| report.get(&format!("{prefix}{i}^2"))).collect();
    rows.iter().enumerate().all(|(i, a)| {
        rows[i + 1..].iter().all(|b| match (a.estimate, a.standard_error, b.estimate, b.standard_error) {
            (Some(ea), Some(sa), Some(eb), Some(sb)) => (ea - eb).abs() <= SIGMA * (sa * sa + sb * sb).sqrt(),
            _ => a.analytic == b.analytic,
        })
    })
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub standard_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub rejection_rate: f64,
}

/// Particle-sector point at which `⟨H_s⟩` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParticlePoint {
    pub x: Vec3,
    pub p: Vec3,
}

/// Average of `f` over auxiliary ground-state draws at a fixed particle
/// point; `f` returns `None` to reject a draw.
pub fn average_observable_mc<const K: usize, F>(spec: &GroundStateSpec, mc: &MCConfig, f: F) -> Result<([Estimate; K], f64)>
where
    F: Fn(&AuxiliaryDraw) -> Option<[f64; K]> + Sync,
{
    let (sd_q, sd_p) = spec.check()?;
    let acc = accumulate::<K, _>(mc, |rng| f(&AuxiliaryDraw::sample(rng, sd_q, sd_p)))?;
    let rate = acc.rejected as f64 / acc.attempts as f64;
    let out = std::array::from_fn(|i| Estimate {
        mean: acc.stats.mean[i],
        standard_error: acc.stats.se(i),
        n_samples: mc.n_samples,
        seed: mc.seed,
        rejection_rate: rate,
    });
    Ok((out, rate))
}

/// `P²/2m − k/|X|` for one draw, or `None` inside the singularity guard.
fn kepler_sample(cfg: &TensorConfig, kind: TensorKind, m: f64, k: f64, s: &ExtendedState) -> Option<f64> {
    let u = s.to_array();
    let (x, _) = nc_coordinates_generic(cfg, kind, &u);
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r < SINGULARITY_GUARD {
        return None;
    }
    Some(system_energy(cfg, kind, m, k, &u))
}

fn validate_particle(m: f64, k: f64, point: &ParticlePoint) -> Result<()> {
    if !(m > 0.0 && m.is_finite() && k.is_finite()) {
        return Err(Error::InvalidInput("mass must be positive and k finite".into()));
    }
    if !point.x.iter().chain(&point.p).all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("particle point must be finite".into()));
    }
    Ok(())
}

/// `⟨H_s⟩` over the auxiliary ground states at a fixed `(x, p)`, with
/// momentum-built tensors.
pub fn effective_hamiltonian_mc(
    cfg: &TensorConfig,
    spec: &GroundStateSpec,
    m: f64,
    k: f64,
    point: &ParticlePoint,
    mc: &MCConfig,
) -> Result<Estimate> {
    effective_hamiltonian_mc_of_kind(cfg, TensorKind::Momentum, spec, m, k, point, mc)
}

pub fn effective_hamiltonian_mc_of_kind(
    cfg: &TensorConfig,
    kind: TensorKind,
    spec: &GroundStateSpec,
    m: f64,
    k: f64,
    point: &ParticlePoint,
    mc: &MCConfig,
) -> Result<Estimate> {
    cfg.validate()?;
    validate_particle(m, k, point)?;
    let (est, _) = average_observable_mc::<1, _>(spec, mc, |d| {
        kepler_sample(cfg, kind, m, k, &d.with_particle(point.x, point.p)).map(|h| [h])
    })?;
    Ok(est[0])
}

/// Paired comparison of two configurations on common random numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedCheck {
    pub first: Estimate,
    pub second: Estimate,
    /// Mean of the paired difference (scaled for derivative checks).
    pub difference: f64,
    pub standard_error: f64,
    pub passed: bool,
}

fn paired(
    lhs: &TensorConfig,
    rhs: &TensorConfig,
    kind: TensorKind,
    spec: &GroundStateSpec,
    m: f64,
    k: f64,
    point: &ParticlePoint,
    mc: &MCConfig,
    scale: f64,
) -> Result<PairedCheck> {
    lhs.validate()?;
    rhs.validate()?;
    validate_particle(m, k, point)?;
    let (est, _) = average_observable_mc::<3, _>(spec, mc, |d| {
        let s = d.with_particle(point.x, point.p);
        let h1 = kepler_sample(lhs, kind, m, k, &s)?;
        let h2 = kepler_sample(rhs, kind, m, k, &s)?;
        Some([h1, h2, (h1 - h2) * scale])
    })?;
    let [first, second, diff] = est;
    Ok(PairedCheck {
        first,
        second,
        difference: diff.mean,
        standard_error: diff.standard_error,
        passed: diff.mean.abs() <= SIGMA * diff.standard_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Theta,
    Eta,
}

fn with_coupling(cfg: &TensorConfig, which: Coupling, value: f64) -> TensorConfig {
    match which {
        Coupling::Theta => TensorConfig { c_theta: value, ..*cfg },
        Coupling::Eta => TensorConfig { c_eta: value, ..*cfg },
    }
}

/// `⟨H_s⟩(c) − ⟨H_s⟩(−c)` for the chosen coupling on common random numbers.
pub fn sign_flip_check(
    cfg: &TensorConfig,
    which: Coupling,
    spec: &GroundStateSpec,
    m: f64,
    k: f64,
    point: &ParticlePoint,
    mc: &MCConfig,
) -> Result<PairedCheck> {
    let c = match which {
        Coupling::Theta => cfg.c_theta,
        Coupling::Eta => cfg.c_eta,
    };
    paired(
        &with_coupling(cfg, which, c),
        &with_coupling(cfg, which, -c),
        TensorKind::Momentum,
        spec,
        m,
        k,
        point,
        mc,
        1.0,
    )
}

/// Central difference `d⟨H_s⟩/dc` at `c = 0` with step [`FD_STEP`] on
/// common random numbers. The current value of the coupling in `cfg` is ignored.
pub fn first_order_check(
    cfg: &TensorConfig,
    which: Coupling,
    spec: &GroundStateSpec,
    m: f64,
    k: f64,
    point: &ParticlePoint,
    mc: &MCConfig,
) -> Result<PairedCheck> {
    paired(
        &with_coupling(cfg, which, FD_STEP),
        &with_coupling(cfg, which, -FD_STEP),
        TensorKind::Momentum,
        spec,
        m,
        k,
        point,
        mc,
        1.0 / (2.0 * FD_STEP),
    )
}

/// Everything the `average` command reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub moments: MomentReport,
    pub moments_agree: bool,
    pub isotropic: bool,
    pub effective_hamiltonian: Estimate,
    pub sign_flip_theta: PairedCheck,
    pub sign_flip_eta: PairedCheck,
    pub first_order_theta: PairedCheck,
    pub first_order_eta: PairedCheck,
}

impl AveragingReport {
    pub fn passed(&self) -> bool {
        self.moments_agree
            && self.isotropic
            && self.sign_flip_theta.passed
            && self.sign_flip_eta.passed
            && self.first_order_theta.passed
            && self.first_order_eta.passed
    }
}

pub fn averaging_report(cfg: &TensorConfig, m: f64, k: f64, point: &ParticlePoint, mc: &MCConfig) -> Result<AveragingReport> {
    cfg.validate()?;
    let spec = GroundStateSpec::from_config(cfg)?;
    let moments = moments_mc(&spec, cfg, mc)?;
    Ok(AveragingReport {
        moments_agree: moments.all_agree(),
        isotropic: isotropic(&moments, "theta") && isotropic(&moments, "eta"),
        moments,
        effective_hamiltonian: effective_hamiltonian_mc(cfg, &spec, m, k, point, mc)?,
        sign_flip_theta: sign_flip_check(cfg, Coupling::Theta, &spec, m, k, point, mc)?,
        sign_flip_eta: sign_flip_check(cfg, Coupling::Eta, &spec, m, k, point, mc)?,
        first_order_theta: first_order_check(cfg, Coupling::Theta, &spec, m, k, point, mc)?,
        first_order_eta: first_order_check(cfg, Coupling::Eta, &spec, m, k, point, mc)?,
    })
}

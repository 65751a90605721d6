use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MeasureMode;
use crate::dynamics::{evolve, DrivePulse, EvolveMode, EvolveOptions, PopulationTrace, RwaHamiltonian};
use crate::error::{Error, Result};
use crate::geometry::{LocalGeometry, PairedBasis};
use crate::models::{Band, HamiltonianModel, ParameterPoint};
use crate::numerics::complex_serde;
use crate::numerics::linalg::{c, r, CMatrix, CVector};

/// Relative disagreement between plan and model frequencies that aborts a preparation.
pub const PLAN_MISMATCH_TOL: f64 = 0.05;
/// Largest degeneracy handled by [`iterate_preparation`].
pub const MAX_ITERATED_DEGENERACY: usize = 4;
/// Outcomes less likely than this are not followed in branch mode.
const BRANCH_CUTOFF: f64 = 1e-14;

/// Assignment of the plan frequencies (by position) to pairs that must complete whole cycles
/// (`even`, returning to the starting band) or half-odd cycles (`odd`, transferred).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub even: Vec<usize>,
    pub odd: Vec<usize>,
}

impl Partition {
    pub fn new(even: Vec<usize>, odd: Vec<usize>) -> Self {
        Self { even, odd }
    }

    fn validate(&self, len: usize) -> Result<()> {
        let mut seen = vec![false; len];
        for &i in self.even.iter().chain(&self.odd) {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, limit: len });
            }
            if seen[i] {
                return Err(Error::InvalidArgument(format!("pair {i} assigned twice")));
            }
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("pair {i} is not assigned to a set")));
        }
        Ok(())
    }

    fn is_even(&self, i: usize) -> bool {
        self.even.contains(&i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub t_max: f64,
    /// Restricts the grid integer `n` to `lo..=hi`.
    pub n_range: Option<(u64, u64)>,
    /// Frequencies closer than `tol` (relative) are indistinguishable.
    pub tol: f64,
    /// Population weights of the pairs; uniform when absent.
    pub weights: Option<Vec<f64>>,
}

impl PlanRequest {
    pub fn new(t_max: f64) -> Self {
        Self { t_max, n_range: None, tol: 1e-6, weights: None }
    }

    pub fn with_n(mut self, n: u64) -> Self {
        self.n_range = Some((n, n));
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreparationPlan {
    /// Pulse duration `T`.
    pub duration: f64,
    /// Amplitude Rabi frequencies, one per planned pair.
    pub omegas: Vec<f64>,
    /// Paired-basis label of each planned pair.
    pub pairs: Vec<usize>,
    pub partition: Partition,
    /// Position of the frequency whose multiples form the search grid.
    pub reference: usize,
    /// Grid integer: `T = n pi / Omega_ref` (even reference) or `(n - 1/2) pi / Omega_ref`.
    pub n: u64,
    /// Nearest whole (`n_i`, even set) or half-odd (`m_i + 1/2`, odd set) cycle count per pair,
    /// stored as `n_i` or `m_i`.
    pub cycles: Vec<i64>,
    pub weights: Vec<f64>,
    /// Probability per pair of ending in its target band.
    pub landing: Vec<f64>,
    /// `sum_even w cos^2(Omega T) + sum_odd w sin^2(Omega T)`: outcome-averaged fidelity of the
    /// post-measurement state.
    pub predicted_fidelity: f64,
    /// `|<ideal|final>|^2` before the measurement, against the whole- or half-odd-cycle rotation.
    pub overlap_fidelity: f64,
}

impl PreparationPlan {
    /// Attaches paired-basis labels to the planned frequencies (default `0..len`).
    pub fn with_pairs(mut self, pairs: Vec<usize>) -> Self {
        self.pairs = pairs;
        self
    }

    /// Rotation angle `Omega T` of the ideal pulse for planned pair `i`.
    fn ideal_angle(&self, i: usize) -> f64 {
        let k = self.cycles[i] as f64;
        if self.partition.is_even(i) {
            k * PI
        } else {
            (k + 0.5) * PI
        }
    }
}

fn evaluate(omegas: &[f64], weights: &[f64], partition: &Partition, t: f64) -> (Vec<i64>, Vec<f64>, f64, f64) {
    let mut cycles = Vec::with_capacity(omegas.len());
    let mut landing = Vec::with_capacity(omegas.len());
    let (mut fidelity, mut overlap) = (0.0, 0.0);
    for (i, (&w, &weight)) in omegas.iter().zip(weights).enumerate() {
        let x = w * t;
        let (k, land, amp) = if partition.is_even(i) {
            let k = (x / PI).round();
            (k, x.cos().powi(2), x.cos() * if k as i64 % 2 == 0 { 1.0 } else { -1.0 })
        } else {
            let k = (x / PI - 0.5).round();
            (k, x.sin().powi(2), x.sin() * if k as i64 % 2 == 0 { 1.0 } else { -1.0 })
        };
        cycles.push(k as i64);
        landing.push(land);
        fidelity += weight * land;
        overlap += weight * amp;
    }
    (cycles, landing, fidelity, overlap * overlap)
}

/// Grid search for a pulse duration that leaves the `even` pairs in their starting band and
/// transfers the `odd` pairs.
///
/// The grid is `T = n pi / Omega_ref` with `Omega_ref` the first even-set frequency (or
/// `(n - 1/2) pi / Omega_ref` with the first odd-set frequency when the even set is empty),
/// `1 <= n` and `T <= t_max`. A duration is admissible when every pair lands in its target band
/// with probability above 1/2; the admissible duration with the largest predicted fidelity wins,
/// ties going to the shorter pulse.
pub fn plan_preparation(omegas: &[f64], partition: &Partition, request: &PlanRequest) -> Result<PreparationPlan> {
    let len = omegas.len();
    if len == 0 {
        return Err(Error::InvalidArgument("no frequencies to plan for".into()));
    }
    if let Some(&w) = omegas.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidArgument(format!("Rabi frequencies must be positive, got {w}")));
    }
    for i in 0..len {
        for j in i + 1..len {
            if (omegas[i] - omegas[j]).abs() <= request.tol * omegas[i].max(omegas[j]) {
                return Err(Error::DegenerateRabi(omegas[i], omegas[j]));
            }
        }
    }
    partition.validate(len)?;
    if !(request.t_max > 0.0 && request.t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {}", request.t_max)));
    }
    let weights = match &request.weights {
        Some(w) => {
            if w.len() != len {
                return Err(Error::DimensionMismatch { expected: len, got: w.len() });
            }
            let total: f64 = w.iter().sum();
            if !(total > 0.0) || w.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::InvalidArgument("weights must be non-negative with a positive sum".into()));
            }
            w.iter().map(|x| x / total).collect()
        }
        None => vec![1.0 / len as f64; len],
    };

    let (reference, offset) = match (partition.even.first(), partition.odd.first()) {
        (Some(&e), _) => (e, 0.0),
        (None, Some(&o)) => (o, 0.5),
        (None, None) => unreachable!("validated partition covers every pair"),
    };
    let step = PI / omegas[reference];
    let n_max = (request.t_max / step + offset + 1e-9).floor().max(0.0) as u64;
    let (lo, hi) = match request.n_range {
        Some((lo, hi)) => (lo.max(1), hi.min(n_max)),
        None => (1, n_max),
    };
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty search range: n in {lo}..={hi} (T <= {})", request.t_max)));
    }

    let mut best: Option<PreparationPlan> = None;
    let mut best_any = 0.0_f64;
    for n in lo..=hi {
        let t = (n as f64 - offset) * step;
        let (cycles, landing, fidelity, overlap) = evaluate(omegas, &weights, partition, t);
        best_any = best_any.max(fidelity);
        if landing.iter().any(|&p| p <= 0.5) {
            continue;
        }
        if best.as_ref().is_none_or(|b| fidelity > b.predicted_fidelity + 1e-12) {
            best = Some(PreparationPlan {
                duration: t,
                omegas: omegas.to_vec(),
                pairs: (0..len).collect(),
                partition: partition.clone(),
                reference,
                n,
                cycles,
                weights: weights.clone(),
                landing,
                predicted_fidelity: fidelity,
                overlap_fidelity: overlap,
            });
        }
    }
    match best {
        Some(plan) if plan.predicted_fidelity >= 0.5 => Ok(plan),
        Some(plan) => Err(Error::NoPlan { best: plan.predicted_fidelity }),
        None => Err(Error::NoPlan { best: best_any }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasurementRecord {
    pub outcome: Band,
    /// `(p-, p+)`.
    pub probabilities: (f64, f64),
    /// Lab-frame state after the projection.
    #[serde(serialize_with = "complex_serde::vector")]
    pub post_state: CVector,
    /// Seed of the draw, or `None` for a deterministic branch.
    pub rng_seed: Option<u64>,
    /// Paired-basis labels the outcome should leave populated.
    pub target_pairs: Vec<usize>,
    /// Weight of the post-measurement state on the target pairs.
    pub fidelity: f64,
}

impl MeasurementRecord {
    pub fn probability(&self) -> f64 {
        match self.outcome {
            Band::Minus => self.probabilities.0,
            Band::Plus => self.probabilities.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub mode: EvolveMode,
    pub measure: MeasureMode,
    pub dt: Option<f64>,
    pub sample_stride: usize,
    pub mismatch_tol: f64,
}

impl PrepareOptions {
    pub fn new(mode: EvolveMode, measure: MeasureMode) -> Self {
        Self {
            mode,
            measure,
            dt: None,
            sample_stride: crate::dynamics::DEFAULT_SAMPLE_STRIDE,
            mismatch_tol: PLAN_MISMATCH_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PreparationOutcome {
    pub plan: PreparationPlan,
    pub pulse: DrivePulse,
    pub start_band: Band,
    /// Both branches (branch mode) or the sampled outcome.
    pub records: Vec<MeasurementRecord>,
    /// Outcome-averaged fidelity (branch mode) or the fidelity of the sampled outcome.
    pub fidelity: f64,
    /// `|<ideal|final>|^2` before the measurement.
    pub overlap_fidelity: f64,
    #[serde(skip)]
    pub trace: PopulationTrace,
}

/// Which band holds most of `psi`.
fn dominant_band(geo: &LocalGeometry, psi: &CVector) -> Band {
    let pm = (geo.bands.frame_minus.adjoint() * psi).norm_squared();
    let pp = (geo.bands.frame_plus.adjoint() * psi).norm_squared();
    if pm >= pp {
        Band::Minus
    } else {
        Band::Plus
    }
}

/// Paired-basis coefficients `(c-, c+)` of rotating-frame band coordinates.
fn pair_coefficients(pb: &PairedBasis, b: &CVector) -> (CVector, CVector) {
    let n = pb.degeneracy();
    (pb.minus_coords.adjoint() * b.rows(0, n), pb.plus_coords.adjoint() * b.rows(n, n))
}

fn check_plan(plan: &PreparationPlan, pb: &PairedBasis, amplitude: f64, tol: f64) -> Result<()> {
    if plan.pairs.len() != plan.omegas.len() {
        return Err(Error::DimensionMismatch { expected: plan.omegas.len(), got: plan.pairs.len() });
    }
    let mut deviation = 0.0_f64;
    for (&nu, &w) in plan.pairs.iter().zip(&plan.omegas) {
        if nu >= pb.degeneracy() {
            return Err(Error::IndexOutOfRange { index: nu, limit: pb.degeneracy() });
        }
        let model = amplitude * pb.q[nu].sqrt();
        deviation = deviation.max(if model > 0.0 { (w - model).abs() / model } else { f64::INFINITY });
    }
    if deviation > tol {
        return Err(Error::PlanMismatch { deviation });
    }
    Ok(())
}

/// Applies the planned pulse to `psi0` and measures the band energy.
///
/// The pulse is `template` tuned to resonance with duration `plan.duration`. After the pulse the
/// even pairs should sit in the starting band (the band holding most of `psi0`) and the odd pairs
/// in the other one; each record's fidelity is the post-measurement weight on those pairs.
pub fn prepare_eigenstate<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    template: &DrivePulse,
    psi0: &CVector,
    plan: &PreparationPlan,
    options: &PrepareOptions,
) -> Result<PreparationOutcome> {
    let geo = LocalGeometry::new(model, lambda)?;
    prepare_with(model, &geo, template, psi0, plan, options, 0)
}

fn prepare_with<M: HamiltonianModel + ?Sized>(
    model: &M,
    geo: &LocalGeometry,
    template: &DrivePulse,
    psi0: &CVector,
    plan: &PreparationPlan,
    options: &PrepareOptions,
    round: u64,
) -> Result<PreparationOutcome> {
    let pulse = template.resonant_with(&geo.bands).with_duration(plan.duration);
    let pb = geo.paired_basis(pulse.coupling())?;
    check_plan(plan, &pb, pulse.amplitude, options.mismatch_tol)?;
    let start_band = dominant_band(geo, psi0);

    let mut evolve_options = EvolveOptions::new(options.mode).with_stride(options.sample_stride);
    evolve_options.dt = options.dt;
    let trace = evolve(model, &geo.lambda, &pulse, psi0, &evolve_options)?;
    let psi = &trace.final_state;

    let rwa = RwaHamiltonian::from_geometry(geo, &pulse)?;
    let (c0m, c0p) = pair_coefficients(&pb, &rwa.from_lab(psi0, 0.0));
    let (cm, cp) = pair_coefficients(&pb, &rwa.from_lab(psi, pulse.duration));
    let mut overlap = c(0.0, 0.0);
    for (i, &nu) in plan.pairs.iter().enumerate() {
        let theta = plan.ideal_angle(i);
        let (cs, sn) = (r(theta.cos()), c(0.0, -theta.sin()));
        let ideal_m = cs * c0m[nu] + sn * c0p[nu];
        let ideal_p = cs * c0p[nu] + sn * c0m[nu];
        overlap += ideal_m.conj() * cm[nu] + ideal_p.conj() * cp[nu];
    }
    let overlap_fidelity = overlap.norm_sqr();

    let project = |band: Band| -> (f64, CVector) {
        let f = geo.bands.frame(band);
        let v = f * (f.adjoint() * psi);
        (v.norm_squared(), v)
    };
    let (pm, psi_m) = project(Band::Minus);
    let (pp, psi_p) = project(Band::Plus);
    let total = pm + pp;
    let probabilities = (pm / total, pp / total);
    let targets = |band: Band| -> Vec<usize> {
        let set = if band == start_band { &plan.partition.even } else { &plan.partition.odd };
        let mut v: Vec<usize> = set.iter().map(|&i| plan.pairs[i]).collect();
        v.sort_unstable();
        v
    };
    let record = |band: Band, seed: Option<u64>| -> MeasurementRecord {
        let (p, v, coeffs) = match band {
            Band::Minus => (pm, &psi_m, &cm),
            Band::Plus => (pp, &psi_p, &cp),
        };
        let target_pairs = targets(band);
        let on_target: f64 = target_pairs.iter().map(|&nu| coeffs[nu].norm_sqr()).sum();
        MeasurementRecord {
            outcome: band,
            probabilities,
            post_state: v / r(p.sqrt()),
            rng_seed: seed,
            target_pairs,
            fidelity: on_target / p,
        }
    };
    let (records, fidelity) = match options.measure {
        MeasureMode::Branch => {
            let records: Vec<MeasurementRecord> = [Band::Minus, Band::Plus]
                .into_iter()
                .filter(|&b| if b == Band::Minus { probabilities.0 } else { probabilities.1 } > BRANCH_CUTOFF)
                .map(|b| record(b, None))
                .collect();
            let fidelity = records.iter().map(|rec| rec.probability() * rec.fidelity).sum();
            (records, fidelity)
        }
        MeasureMode::Sample { seed } => {
            let seed = seed.wrapping_add(round);
            let u: f64 = ChaCha8Rng::seed_from_u64(seed).random();
            let band = if u < probabilities.0 { Band::Minus } else { Band::Plus };
            let rec = record(band, Some(seed));
            let fidelity = rec.fidelity;
            (vec![rec], fidelity)
        }
    };
    Ok(PreparationOutcome {
        plan: plan.clone(),
        pulse,
        start_band,
        records,
        fidelity,
        overlap_fidelity,
        trace,
    })
}

/// Partition choices for the rounds of [`iterate_preparation`], by paired-basis label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanTree {
    /// Pick the partition with the best predicted fidelity among all splits of the active pairs.
    Auto,
    Node {
        even: Vec<usize>,
        odd: Vec<usize>,
        /// Plan for the pairs kept in the starting band.
        after_even: Box<PlanTree>,
        /// Plan for the transferred pairs.
        after_odd: Box<PlanTree>,
    },
}

impl PlanTree {
    pub fn node(even: Vec<usize>, odd: Vec<usize>, after_even: PlanTree, after_odd: PlanTree) -> Self {
        PlanTree::Node { even, odd, after_even: Box::new(after_even), after_odd: Box::new(after_odd) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PreparationLeaf {
    pub records: Vec<MeasurementRecord>,
    pub plans: Vec<PreparationPlan>,
    pub probability: f64,
    /// Remaining paired-basis label and the band it was found in.
    pub pair: usize,
    pub band: Band,
    /// `|<psi~_pair^band|final>|^2`.
    pub fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationResult {
    pub leaves: Vec<PreparationLeaf>,
    /// Probability-weighted leaf fidelity.
    pub mean_fidelity: f64,
}

/// Repeats pulse and measurement, keeping after each round only the set singled out by the
/// outcome, until one pair remains. Branch mode follows every outcome; sample mode one path,
/// with round `r` drawing from `seed + r`.
pub fn iterate_preparation<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    template: &DrivePulse,
    psi0: &CVector,
    tree: &PlanTree,
    request: &PlanRequest,
    options: &PrepareOptions,
) -> Result<IterationResult> {
    let geo = LocalGeometry::new(model, lambda)?;
    let n = geo.degeneracy();
    if n > MAX_ITERATED_DEGENERACY {
        return Err(Error::InvalidArgument(format!(
            "iterated preparation supports N <= {MAX_ITERATED_DEGENERACY}, got {n}"
        )));
    }
    let pulse = template.resonant_with(&geo.bands);
    let pb = geo.paired_basis(pulse.coupling())?;
    let active: Vec<usize> = (0..pb.bright).collect();
    let ctx = Context { model, geo: &geo, pb: &pb, template, request, options };
    let mut leaves = Vec::new();
    ctx.round(psi0, &active, tree, 1.0, Vec::new(), Vec::new(), 0, &mut leaves)?;
    let total: f64 = leaves.iter().map(|l| l.probability).sum();
    let mean_fidelity = leaves.iter().map(|l| l.probability * l.fidelity).sum::<f64>() / total;
    Ok(IterationResult { leaves, mean_fidelity })
}

struct Context<'a, M: ?Sized> {
    model: &'a M,
    geo: &'a LocalGeometry,
    pb: &'a PairedBasis,
    template: &'a DrivePulse,
    request: &'a PlanRequest,
    options: &'a PrepareOptions,
}

impl<M: HamiltonianModel + ?Sized> Context<'_, M> {
    fn pair_weights(&self, psi: &CVector, pairs: &[usize]) -> Vec<f64> {
        let pm = self.pb.minus.adjoint() * psi;
        let pp = self.pb.plus.adjoint() * psi;
        pairs.iter().map(|&nu| pm[nu].norm_sqr() + pp[nu].norm_sqr()).collect()
    }

    fn plan_for(&self, psi: &CVector, even: &[usize], odd: &[usize]) -> Result<PreparationPlan> {
        let pairs: Vec<usize> = even.iter().chain(odd).copied().collect();
        let omegas: Vec<f64> = pairs.iter().map(|&nu| self.template.amplitude * self.pb.q[nu].sqrt()).collect();
        let partition = Partition::new((0..even.len()).collect(), (even.len()..pairs.len()).collect());
        let mut weights = self.pair_weights(psi, &pairs);
        if weights.iter().sum::<f64>() <= 0.0 {
            weights = vec![1.0; pairs.len()];
        }
        let request = PlanRequest { weights: Some(weights), ..self.request.clone() };
        Ok(plan_preparation(&omegas, &partition, &request)?.with_pairs(pairs))
    }

    fn auto_plan(&self, psi: &CVector, active: &[usize]) -> Result<PreparationPlan> {
        let k = active.len();
        let mut best: Option<PreparationPlan> = None;
        let mut best_failed = 0.0_f64;
        for mask in 1..(1u32 << k) - 1 {
            let even: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| active[b]).collect();
            let odd: Vec<usize> = (0..k).filter(|b| mask & (1 << b) == 0).map(|b| active[b]).collect();
            match self.plan_for(psi, &even, &odd) {
                Ok(plan) => {
                    if best.as_ref().is_none_or(|b| plan.predicted_fidelity > b.predicted_fidelity + 1e-12) {
                        best = Some(plan);
                    }
                }
                Err(Error::NoPlan { best }) => best_failed = best_failed.max(best),
                Err(e) => return Err(e),
            }
        }
        best.ok_or(Error::NoPlan { best: best_failed })
    }

    #[allow(clippy::too_many_arguments)]
    fn round(
        &self,
        psi: &CVector,
        active: &[usize],
        tree: &PlanTree,
        probability: f64,
        records: Vec<MeasurementRecord>,
        plans: Vec<PreparationPlan>,
        round: u64,
        leaves: &mut Vec<PreparationLeaf>,
    ) -> Result<()> {
        if active.len() <= 1 {
            let band = dominant_band(self.geo, psi);
            let pair = active.first().copied().unwrap_or(0);
            let fidelity = self.pb.state(band, pair).dotc(psi).norm_sqr();
            leaves.push(PreparationLeaf { records, plans, probability, pair, band, fidelity });
            return Ok(());
        }
        let (plan, after_even, after_odd) = match tree {
            PlanTree::Auto => (self.auto_plan(psi, active)?, &PlanTree::Auto, &PlanTree::Auto),
            PlanTree::Node { even, odd, after_even, after_odd } => {
                let mut given: Vec<usize> = even.iter().chain(odd).copied().collect();
                given.sort_unstable();
                if given != active {
                    return Err(Error::InvalidArgument(format!(
                        "plan tree splits {given:?} but the active pairs are {active:?}"
                    )));
                }
                (self.plan_for(psi, even, odd)?, after_even.as_ref(), after_odd.as_ref())
            }
        };
        let outcome = prepare_with(self.model, self.geo, self.template, psi, &plan, self.options, round)?;
        for rec in outcome.records {
            let next = if rec.outcome == outcome.start_band { after_even } else { after_odd };
            let mut chain = records.clone();
            chain.push(rec.clone());
            let mut chain_plans = plans.clone();
            chain_plans.push(plan.clone());
            let p = probability * rec.probability();
            self.round(&rec.post_state, &rec.target_pairs, next, p, chain, chain_plans, round + 1, leaves)?;
        }
        Ok(())
    }
}

/// Ideal Hadamard on the frame columns `mu1`, `mu2`, identity on their orthogonal complement.
pub fn hadamard_in_subspace(frame: &CMatrix, pair: (usize, usize)) -> Result<CMatrix> {
    let (m1, m2) = pair;
    let n = frame.ncols();
    for m in [m1, m2] {
        if m >= n {
            return Err(Error::IndexOutOfRange { index: m, limit: n });
        }
    }
    if m1 == m2 {
        return Err(Error::InvalidArgument(format!("Hadamard needs two distinct columns, got {m1} twice")));
    }
    let (f1, f2) = (frame.column(m1), frame.column(m2));
    let s = r(FRAC_1_SQRT_2);
    let (p11, p22) = (f1 * f1.adjoint(), f2 * f2.adjoint());
    let (p12, p21) = (f1 * f2.adjoint(), f2 * f1.adjoint());
    let d = frame.nrows();
    Ok(CMatrix::identity(d, d) - &p11 - &p22 + (p11 + p12 + p21 - p22) * s)
}

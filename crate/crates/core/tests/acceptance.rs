//! End-to-end acceptance suite. Runs as a plain binary so that every criterion prints its
//! PASS/FAIL line; exits non-zero on any failure outside [`KNOWN_UNATTAINABLE`].

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, LN_2, PI};
use std::time::Instant;

use georabi::dynamics::{
    evolve, lz_run, rwa_validity, DrivePulse, EvolveMode, EvolveOptions, LzInitial, LzSweep, ValidityOptions,
    DEFAULT_WINDOW_FACTOR,
};
use georabi::geometry::{curvature, metric, qgt_fd, Coupling, LocalGeometry};
use georabi::models::clifford::{GENERIC_REFERENCE, WEYL_REFERENCE};
use georabi::models::{builtin_model, Band, HamiltonianModel, ModelSettings, PairsModel, ParameterPoint, Regauged};
use georabi::numerics::linalg::{c, max_abs, max_diff, r};
use georabi::numerics::CMatrix;
use georabi::protocols::{
    extract_metric_curvature, plan_preparation, prepare_eigenstate, rabi_spectroscopy, tomography_mixing,
    ExtractionOptions, MeasureMode, Partition, PlanRequest, PrepareOptions, RecordLength, SpectroscopyOptions,
    TomographyOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The linear law `pi |V|^2 / alpha` differs from the exact `1 - exp(-pi |V|^2 / alpha)` by 5.1% at
/// `alpha = 30 |V|^2`, so criterion 5 cannot pass at the 5% tolerance.
const KNOWN_UNATTAINABLE: [u32; 1] = [5];

const DRIVE_RATIO: f64 = 0.02;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn generic() -> (Box<dyn HamiltonianModel>, ParameterPoint) {
    (builtin_model("dirac4_generic", &ModelSettings::default()).unwrap(), GENERIC_REFERENCE.into())
}

fn gallery() -> Vec<Box<dyn HamiltonianModel>> {
    let pairs = ModelSettings { coeff_seed: Some(3), degeneracy: Some(3), params: Some(3), ..ModelSettings::default() };
    ["spin_half", "dirac4", "dirac4_generic", "weyl4"]
        .iter()
        .map(|name| builtin_model(name, &ModelSettings::default()).unwrap())
        .chain(std::iter::once(builtin_model("pairs", &pairs).unwrap()))
        .collect()
}

fn random_point(rng: &mut ChaCha8Rng, m: usize) -> ParameterPoint {
    ParameterPoint::new((0..m).map(|_| rng.random_range(-PI..PI)).collect()).unwrap()
}

fn spectroscopy_check(m: &dyn HamiltonianModel, p: &ParameterPoint, j: usize) -> (f64, f64) {
    let w = LocalGeometry::new(m, p).unwrap().bands.gap();
    let pulse = DrivePulse::single(j, DRIVE_RATIO * w, w, 1.0);
    let err = |mode| {
        let opts = SpectroscopyOptions::new(mode).with_record(RecordLength::RabiPeriods(30.0));
        let s = rabi_spectroscopy(m, p, &pulse, &opts).unwrap();
        if s.inferred_q.len() != s.reference_q.len() {
            return f64::INFINITY;
        }
        s.inferred_q.iter().zip(&s.reference_q).map(|(q, r)| (q / r - 1.0).abs()).fold(0.0, f64::max)
    };
    (err(EvolveMode::Rwa), err(EvolveMode::Full))
}

/// Largest population leaking out of the driven pair, per mode.
fn leakage(m: &dyn HamiltonianModel, p: &ParameterPoint, j: usize) -> (f64, f64) {
    let geo = LocalGeometry::new(m, p).unwrap();
    let pb = geo.paired_basis(Coupling::Single { j }).unwrap();
    let n = geo.degeneracy();
    let cols: Vec<_> = (0..n).map(|nu| pb.state(Band::Minus, nu)).chain((0..n).map(|nu| pb.state(Band::Plus, nu))).collect();
    let reference = CMatrix::from_columns(&cols);
    let w = geo.bands.gap();
    let mut worst = (0.0_f64, 0.0_f64);
    for nu in 0..n {
        let omega_r = DRIVE_RATIO * w * pb.q[nu].sqrt();
        if omega_r == 0.0 {
            continue;
        }
        let pulse = DrivePulse::single(j, DRIVE_RATIO * w, w, 3.0 * PI / omega_r);
        for mode in [EvolveMode::Rwa, EvolveMode::Full] {
            let opts = EvolveOptions::new(mode).with_reference(reference.clone()).with_stride(1);
            let tr = evolve(m, p, &pulse, &pb.state(Band::Minus, nu), &opts).unwrap();
            let leak = tr
                .state_pop
                .iter()
                .flat_map(|row| (0..n).filter(|&mu| mu != nu).flat_map(move |mu| [row[mu], row[n + mu]]))
                .fold(0.0_f64, f64::max);
            if mode == EvolveMode::Rwa {
                worst.0 = worst.0.max(leak);
            } else {
                worst.1 = worst.1.max(leak);
            }
        }
    }
    worst
}

fn fig2_fidelity(n: u64, mode: EvolveMode) -> (f64, f64) {
    let m = PairsModel::prescribed(2.0, &[0.3, 0.3 / (PI * PI)], None).unwrap();
    let p: ParameterPoint = [0.0].into();
    let geo = LocalGeometry::new(&m, &p).unwrap();
    let w = geo.bands.gap();
    let pulse = DrivePulse::single(0, DRIVE_RATIO * w, w, 1.0);
    let pb = geo.paired_basis(pulse.coupling()).unwrap();
    // Pair 1 is the slow one (Omega_1); pair 0 runs at pi Omega_1.
    let omegas: Vec<f64> = [1, 0].iter().map(|&nu| pulse.amplitude * pb.q[nu].sqrt()).collect();
    let plan = plan_preparation(&omegas, &Partition::new(vec![0], vec![1]), &PlanRequest::new(1e6).with_n(n))
        .unwrap()
        .with_pairs(vec![1, 0]);
    let psi0 = (pb.state(Band::Minus, 0) + pb.state(Band::Minus, 1)) * r(FRAC_1_SQRT_2);
    let out = prepare_eigenstate(&m, &p, &pulse, &psi0, &plan, &PrepareOptions::new(mode, MeasureMode::Branch)).unwrap();
    (out.fidelity, plan.predicted_fidelity)
}

fn criterion_1() -> Outcome {
    let (f3, p3) = fig2_fidelity(3, EvolveMode::Rwa);
    let (f25, p25) = fig2_fidelity(25, EvolveMode::Rwa);
    let (f3_full, _) = fig2_fidelity(3, EvolveMode::Full);
    let pass = (f3 - 0.973).abs() <= 0.005 && (f25 - 0.992).abs() <= 0.005;
    outcome(
        pass,
        format!(
            "F(3pi/W1) = {f3:.5} (planner {p3:.5}, lab frame {f3_full:.5}), F(25pi/W1) = {f25:.5} (planner {p25:.5})"
        ),
    )
}

fn criterion_2() -> Outcome {
    let (m, p) = generic();
    let (rwa, full) = spectroscopy_check(m.as_ref(), &p, 0);
    outcome(rwa < 0.01 && full < 0.03, format!("max relative q error: rwa {rwa:.2e}, full {full:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    let mut points = 0;
    for m in gallery() {
        let mut done = 0;
        while done < 10 {
            let p = random_point(&mut rng, m.param_count());
            let Ok(geo) = LocalGeometry::new(m.as_ref(), &p) else { continue };
            done += 1;
            for band in [Band::Minus, Band::Plus] {
                for j in 0..m.param_count() {
                    for k in 0..m.param_count() {
                        let a = geo.qgt(band, j, k).unwrap().matrix;
                        let b = qgt_fd(m.as_ref(), &p, band, j, k, 1e-4).unwrap().matrix;
                        let scale = max_abs(&geo.qgt(band, j, j).unwrap().matrix)
                            .max(max_abs(&geo.qgt(band, k, k).unwrap().matrix))
                            .max(1e-12);
                        worst = worst.max(max_diff(&a, &b) / scale);
                    }
                }
            }
        }
        points += done;
    }
    let spin = builtin_model("spin_half", &ModelSettings::default()).unwrap();
    let mut spin_err = 0.0_f64;
    for _ in 0..10 {
        let (t, phi) = (rng.random_range(0.2..3.0), rng.random_range(-PI..PI));
        let geo = LocalGeometry::new(spin.as_ref(), &[t, phi].into()).unwrap();
        let tt = geo.qgt(Band::Minus, 0, 0).unwrap().matrix[(0, 0)].re;
        let pp = geo.qgt(Band::Minus, 1, 1).unwrap().matrix[(0, 0)].re;
        let f = curvature(&geo.qgt(Band::Minus, 0, 1).unwrap()).matrix()[(0, 0)].re;
        spin_err = spin_err.max((tt - 0.25).abs()).max((pp - t.sin().powi(2) / 4.0).abs()).max((f - t.sin() / 2.0).abs());
    }
    outcome(
        worst <= 1e-5 && spin_err <= 1e-6,
        format!("resolvent vs finite difference over {points} points: {worst:.2e}; spin-1/2 closed form: {spin_err:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let (m, _) = generic();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut algebra = 0.0_f64;
    for _ in 0..10 {
        let p = random_point(&mut rng, 4);
        let Ok(geo) = LocalGeometry::new(m.as_ref(), &p) else { continue };
        for band in [Band::Minus, Band::Plus] {
            for (j, k) in [(0, 1), (1, 3), (2, 0)] {
                let sum = geo.qgt(band, j, j).unwrap().matrix + geo.qgt(band, k, k).unwrap().matrix;
                let q = geo.qgt(band, j, k).unwrap();
                let half = geo.coupling_operator(band, Coupling::TwoTone { j, k, phase: FRAC_PI_2 }).unwrap().matrix;
                let zero = geo.coupling_operator(band, Coupling::TwoTone { j, k, phase: 0.0 }).unwrap().matrix;
                let scale = max_abs(&sum).max(1.0);
                algebra = algebra
                    .max(max_diff(&(half - &sum), &(curvature(&q).matrix() * c(band.sign(), 0.0))) / scale)
                    .max(max_diff(&(zero - &sum), &(metric(&q).matrix() * c(2.0, 0.0))) / scale);
            }
        }
    }
    let (m, p) = generic();
    let w = LocalGeometry::new(m.as_ref(), &p).unwrap().bands.gap();
    let rep = extract_metric_curvature(
        m.as_ref(),
        &p,
        0,
        1,
        DRIVE_RATIO * w,
        &ExtractionOptions::new(EvolveMode::Rwa, MeasureMode::Branch),
    )
    .unwrap();
    outcome(
        algebra <= 1e-12 && rep.curvature_error < 0.02 && rep.metric_error < 0.02,
        format!(
            "identities {algebra:.1e}; extraction error F {:.2e}, g {:.2e}",
            rep.curvature_error, rep.metric_error
        ),
    )
}

fn criterion_5() -> Outcome {
    let m = PairsModel::prescribed(2.0, &[0.5], None).unwrap();
    let p: ParameterPoint = [0.0].into();
    let pulse = DrivePulse::single(0, DRIVE_RATIO, 2.0, 1.0);
    let v2 = DRIVE_RATIO * DRIVE_RATIO * 0.5;
    let stay = |ratio: f64| {
        let alpha = ratio * v2;
        let t_edge = LzSweep::edge_time(v2.sqrt(), alpha, DEFAULT_WINDOW_FACTOR);
        lz_run(&m, &p, &LzSweep::symmetric(alpha, t_edge, pulse, LzInitial::Pair(0)), None).unwrap().p_stay
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for ratio in [30.0, 50.0, 100.0] {
        let linear = PI / ratio;
        let dev = ((1.0 - stay(ratio)) - linear).abs() / linear;
        pass &= dev <= 0.05;
        parts.push(format!("a/|V|^2={ratio}: {:.2}%", 100.0 * dev));
    }
    let ratio = PI / LN_2;
    let p_half = stay(ratio);
    let dev = ((1.0 - p_half) - (1.0 - (-PI / ratio).exp())).abs();
    pass &= dev <= 0.02;
    parts.push(format!("exponential law at |V|^2/a = ln2/pi: {dev:.1e}"));
    outcome(pass, parts.join(", "))
}

fn criterion_6() -> Outcome {
    let (m, p) = generic();
    let (rwa, full) = leakage(m.as_ref(), &p, 0);
    outcome(rwa <= 1e-8 && full <= 1e-3, format!("leakage rwa {rwa:.1e}, full {full:.1e}"))
}

fn gauge_sensitive_outputs(m: &dyn HamiltonianModel, p: &ParameterPoint) -> Vec<f64> {
    let geo = LocalGeometry::new(m, p).unwrap();
    let w = geo.bands.gap();
    let mut out = Vec::new();
    for band in [Band::Minus, Band::Plus] {
        for coupling in [Coupling::Single { j: 0 }, Coupling::TwoTone { j: 0, k: 1, phase: FRAC_PI_2 }] {
            out.extend(geo.diagonalize(&geo.coupling_operator(band, coupling).unwrap()).unwrap().eigenvalues);
        }
    }
    let single = DrivePulse::single(0, DRIVE_RATIO * w, w, 1.0);
    let tone = DrivePulse::two_tone(0, 1, FRAC_PI_2, DRIVE_RATIO * w, w, 1.0);
    let opts = SpectroscopyOptions::new(EvolveMode::Rwa).with_record(RecordLength::RabiPeriods(30.0));
    out.extend(rabi_spectroscopy(m, p, &single, &opts).unwrap().inferred_q);
    let tomo = TomographyOptions::new(EvolveMode::Rwa, MeasureMode::Branch);
    out.extend(tomography_mixing(m, p, Band::Minus, &single, &tone, &tomo).unwrap().entries.iter().map(|z| z.norm()));
    let ext = ExtractionOptions::new(EvolveMode::Rwa, MeasureMode::Branch);
    let rep = extract_metric_curvature(m, p, 0, 1, DRIVE_RATIO * w, &ext).unwrap();
    out.extend(rep.metric_eigenvalues.iter().chain(&rep.curvature_eigenvalues));
    out
}

fn criterion_7() -> Outcome {
    let (m, p) = generic();
    let base = gauge_sensitive_outputs(m.as_ref(), &p);
    let mut worst = 0.0_f64;
    for seed in 0..5 {
        let g = Regauged::random(builtin_model("dirac4_generic", &ModelSettings::default()).unwrap(), seed);
        let got = gauge_sensitive_outputs(&g, &p);
        if got.len() != base.len() {
            return outcome(false, format!("gauge {seed} changed the number of estimates"));
        }
        worst = got.iter().zip(&base).fold(worst, |a, (x, y)| a.max((x - y).abs()));
    }
    outcome(worst <= 1e-8, format!("{} estimates, largest change over 5 gauges {worst:.1e}", base.len()))
}

fn criterion_8() -> Outcome {
    let (m, p) = generic();
    let geo = LocalGeometry::new(m.as_ref(), &p).unwrap();
    let w = geo.bands.gap();
    let base = DrivePulse::single(2, 0.05 * w, w, 1.0);
    let dt = base.period() / 64.0;
    let pulse = base.with_duration(1e5 * dt);
    let psi0 = geo.bands.frame_minus.column(0).into_owned();
    let mut drift = 0.0_f64;
    for mode in [EvolveMode::Full, EvolveMode::Rwa] {
        let tr = evolve(m.as_ref(), &p, &pulse, &psi0, &EvolveOptions::new(mode).with_dt(dt).with_stride(1000)).unwrap();
        drift = drift.max(tr.norm_drift());
    }
    let body = || {
        let single = DrivePulse::single(0, DRIVE_RATIO * w, w, 1.0);
        let opts = SpectroscopyOptions::new(EvolveMode::Full).with_record(RecordLength::RabiPeriods(10.0));
        let spectrum = rabi_spectroscopy(m.as_ref(), &p, &single, &opts).unwrap();
        let tone = DrivePulse::two_tone(0, 1, FRAC_PI_2, DRIVE_RATIO * w, w, 1.0);
        let tomo = TomographyOptions::new(EvolveMode::Rwa, MeasureMode::Sample { seed: 42 });
        let mix = tomography_mixing(m.as_ref(), &p, Band::Minus, &single, &tone, &tomo).unwrap();
        serde_json::to_string(&(spectrum, mix)).unwrap()
    };
    let (a, b) = (body(), body());
    outcome(
        drift <= 1e-8 && a == b,
        format!("norm drift {drift:.1e} over 1e5 steps; repeated result bodies identical: {}", a == b),
    )
}

fn criterion_9() -> Outcome {
    let m = builtin_model("weyl4", &ModelSettings::default()).unwrap();
    let base: ParameterPoint = WEYL_REFERENCE.into();
    let geo = LocalGeometry::new(m.as_ref(), &base).unwrap();
    let w = geo.bands.gap();
    let amplitude = DRIVE_RATIO * w;
    let pulse = DrivePulse::single(1, amplitude, w, 1500.0);
    let path: Vec<ParameterPoint> =
        [0.15, 0.1, 0.05].iter().map(|s| [s * WEYL_REFERENCE[0], s * WEYL_REFERENCE[1]].into()).collect();
    let rep = rwa_validity(m.as_ref(), &path, &pulse, &ValidityOptions::default()).unwrap();
    let closed: Vec<_> = rep.points.iter().filter(|pt| pt.gap < 0.2 * w).collect();
    let hidden = !closed.is_empty() && closed.iter().all(|pt| !pt.rabi_peak_visible);
    let worst_visibility = closed.iter().map(|pt| pt.visibility).fold(0.0, f64::max);
    let (rwa, full) = spectroscopy_check(m.as_ref(), &base, 1);
    let (leak_rwa, leak_full) = leakage(m.as_ref(), &base, 1);
    let open = geo.bands.gap() > 20.0 * amplitude && rwa < 0.01 && full < 0.03 && leak_rwa <= 1e-8 && leak_full <= 1e-3;
    outcome(
        hidden && open,
        format!(
            "{} points with gap < w/5, largest peak/floor {worst_visibility:.1e}; at gap = w: q error rwa {rwa:.1e}, full {full:.1e}, leakage rwa {leak_rwa:.1e}, full {leak_full:.1e}",
            closed.len()
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 9] = [
        (1, "two-pair preparation fidelity", criterion_1),
        (2, "Rabi frequency law", criterion_2),
        (3, "oracle equivalence", criterion_3),
        (4, "two-tone identities and extraction", criterion_4),
        (5, "Landau-Zener law", criterion_5),
        (6, "pair decoupling", criterion_6),
        (7, "gauge invariance", criterion_7),
        (8, "unitarity and determinism", criterion_8),
        (9, "RWA breakdown diagnostic", criterion_9),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{status}] {name}: {} ({:.1}s)", out.detail, start.elapsed().as_secs_f64());
        if !out.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

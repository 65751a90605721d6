use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use georabi::dynamics::{probe_state, rwa_validity, DrivePulse, ValidityOptions, ValidityPoint, ValidityReport};
use georabi::geometry::{curvature, factorized_consistency, metric, qgt_fd, Coupling, LocalGeometry};
use georabi::models::{builtin_model, Band, HamiltonianModel, ParameterPoint};
use georabi::numerics::complex_serde;
use georabi::numerics::linalg::{max_abs, max_diff, r};
use georabi::numerics::{CMatrix, CVector};
use georabi::protocols::{
    extract_metric_curvature, iterate_preparation, lz_extraction, plan_preparation, prepare_eigenstate,
    rabi_spectroscopy, tomography_mixing, ExtractionOptions, LzFitOptions, MeasureMode, Partition, PlanRequest,
    PlanTree, PreparationPlan, PrepareOptions, RecordLength, SpectroscopyOptions, TomographyOptions,
};
use georabi::{Error, ErrorClass};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, Format, FrequencySource, InitialState, MeasureKind, Omega, RunConfig};
use crate::output::{blob_hash, bundle, timestamp, Csv, Outputs};

#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Core(Error),
    Protocol(String),
    Io(std::io::Error),
    Invariant(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Physics => 3,
                ErrorClass::Protocol => 4,
                ErrorClass::Internal => 5,
            },
            CmdError::Protocol(_) => 4,
            CmdError::Io(_) | CmdError::Invariant(_) => 5,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Core(e) => write!(f, "{e}"),
            CmdError::Protocol(m) => write!(f, "protocol failure: {m}"),
            CmdError::Io(e) => write!(f, "cannot write results: {e}"),
            CmdError::Invariant(m) => write!(f, "internal invariant violated: {m}"),
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Core(e)
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e.0)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e)
    }
}

type CmdResult<T> = Result<T, CmdError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Qgt,
    Rabi,
    Prep,
    Tomo,
    Extract,
    Lz,
    CheckRwa,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Qgt => "qgt",
            Command::Rabi => "rabi",
            Command::Prep => "prep",
            Command::Tomo => "tomo",
            Command::Extract => "extract",
            Command::Lz => "lz",
            Command::CheckRwa => "check-rwa",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Command::CheckRwa => "check_rwa",
            c => c.name(),
        }
    }
}

/// Everything a command needs, resolved from the config before any computation.
pub struct Run {
    pub cfg: RunConfig,
    pub force: bool,
    pub jobs: usize,
    model: Box<dyn HamiltonianModel>,
    lambda: ParameterPoint,
}

impl Run {
    pub fn new(cfg: RunConfig, force: bool, jobs: usize) -> CmdResult<Self> {
        let model = builtin_model(&cfg.model.name, &cfg.model.settings)?;
        let lambda = ParameterPoint::new(cfg.lambda.clone())?;
        model.check_point(&lambda)?;
        let m = model.param_count();
        for idx in std::iter::once(cfg.drive.j).chain(cfg.drive.k) {
            if idx >= m {
                return Err(CmdError::Config(format!("drive index {idx} out of range for {m} parameters")));
            }
        }
        Ok(Self { cfg, force, jobs: jobs.max(1), model, lambda })
    }

    fn geometry(&self) -> CmdResult<LocalGeometry> {
        Ok(LocalGeometry::new(self.model.as_ref(), &self.lambda)?)
    }

    fn omega(&self, geo: &LocalGeometry) -> f64 {
        match self.cfg.drive.omega {
            Omega::Value(w) => w,
            Omega::Named(_) => geo.bands.gap(),
        }
    }

    fn single(&self, geo: &LocalGeometry) -> DrivePulse {
        let w = self.omega(geo);
        DrivePulse::single(self.cfg.drive.j, self.cfg.amplitude_for(w), w, self.cfg.drive.duration.unwrap_or(1.0))
    }

    fn two_tone(&self, geo: &LocalGeometry, phase: f64) -> CmdResult<DrivePulse> {
        let k = self.cfg.drive.k.ok_or_else(|| CmdError::Config("`drive.k` is required by this command".into()))?;
        let w = self.omega(geo);
        let d = self.cfg.drive.duration.unwrap_or(1.0);
        Ok(DrivePulse::two_tone(self.cfg.drive.j, k, phase, self.cfg.amplitude_for(w), w, d))
    }

    /// Single drive, or the configured two-tone drive when `drive.k` is set.
    fn drive(&self, geo: &LocalGeometry) -> CmdResult<DrivePulse> {
        match self.cfg.drive.k {
            Some(_) => self.two_tone(geo, self.cfg.drive.phase),
            None => Ok(self.single(geo)),
        }
    }

    fn check(&self, pulse: &DrivePulse) -> CmdResult<()> {
        Ok(pulse.validate(self.cfg.drive.ratio_max, self.force)?)
    }

    fn dt(&self, pulse: &DrivePulse) -> f64 {
        pulse.period() / self.cfg.sim.dt_divisor
    }

    fn measure(&self) -> MeasureMode {
        match self.cfg.protocol.measure_mode {
            MeasureKind::Branch => MeasureMode::Branch,
            MeasureKind::Sample => MeasureMode::Sample { seed: self.cfg.protocol.seed },
        }
    }

    fn initial_state(&self, geo: &LocalGeometry, coupling: Coupling, band: Band) -> CmdResult<CVector> {
        Ok(match self.cfg.protocol.initial {
            InitialState::Probe => probe_state(&geo.bands, band),
            InitialState::Pairs => {
                let pb = geo.paired_basis(coupling)?;
                let n = geo.degeneracy();
                let sum = (0..n).fold(CVector::zeros(geo.bands.dim()), |acc, nu| acc + pb.state(band, nu));
                sum * r(1.0 / (n as f64).sqrt())
            }
        })
    }

    fn pool(&self) -> CmdResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CmdError::Invariant(format!("thread pool: {e}")))
    }

    /// Runs `cmd` and writes its files into `dir`. Nothing is written on failure.
    pub fn execute(&self, cmd: Command, dir: PathBuf) -> CmdResult<Vec<PathBuf>> {
        let config_text = toml::to_string(&self.cfg).map_err(|e| CmdError::Invariant(format!("config echo: {e}")))?;
        let hash = format!("sha256:{}", blob_hash(config_text.as_bytes()));
        let mut out = Outputs::new(dir);
        let stem = cmd.stem();
        let result = match cmd {
            Command::Qgt => self.qgt(&mut out, stem)?,
            Command::Rabi => self.rabi(&mut out, stem)?,
            Command::Prep => self.prep(&mut out, stem)?,
            Command::Tomo => self.tomo(&mut out, stem)?,
            Command::Extract => self.extract(&mut out, stem)?,
            Command::Lz => self.lz(&mut out, stem)?,
            Command::CheckRwa => self.check_rwa(&mut out, stem)?,
        };
        if self.cfg.wants(Format::Json) {
            let text = bundle(cmd.name(), &hash, &self.cfg, &result, &timestamp());
            if text.lines().any(non_finite) {
                return Err(CmdError::Invariant("non-finite value in result".into()));
            }
            out.add(&format!("{stem}.json"), text);
        }
        Ok(out.write()?)
    }

    fn csv(&self, out: &mut Outputs, name: String, table: Csv) {
        if self.cfg.wants(Format::Csv) {
            out.add(&name, table.render());
        }
    }

    fn qgt(&self, out: &mut Outputs, stem: &str) -> CmdResult<serde_json::Value> {
        let geo = self.geometry()?;
        let m = self.model.param_count();
        let index: Vec<(Band, usize, usize)> = [Band::Minus, Band::Plus]
            .into_iter()
            .flat_map(|b| (0..m).flat_map(move |j| (0..m).map(move |k| (b, j, k))))
            .collect();
        let model = self.model.as_ref();
        let oracle: Vec<Result<f64, Error>> = self.pool()?.install(|| {
            index
                .par_iter()
                .map(|&(band, j, k)| {
                    let a = geo.qgt(band, j, k)?.matrix;
                    let b = qgt_fd(model, &self.lambda, band, j, k, 1e-4)?.matrix;
                    let scale = max_abs(&geo.qgt(band, j, j)?.matrix).max(max_abs(&geo.qgt(band, k, k)?.matrix)).max(1e-12);
                    Ok(max_diff(&a, &b) / scale)
                })
                .collect()
        });
        let oracle_deviation = oracle.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max);

        let mut tensors = Vec::new();
        let mut eig_table = Csv::new(&["band", "j", "label", "q"]);
        let mut spectra = Vec::new();
        for band in [Band::Minus, Band::Plus] {
            for j in 0..m {
                let eig = geo.diagonalize(&geo.coupling_operator(band, Coupling::Single { j })?)?.eigenvalues;
                for (label, &q) in eig.iter().enumerate() {
                    eig_table.push(vec![band.sign(), j as f64, label as f64, q]);
                }
                spectra.push(QgtSpectrum { band, j, eigenvalues: eig });
                for k in 0..m {
                    let q = geo.qgt(band, j, k)?;
                    tensors.push(QgtEntry {
                        band,
                        j,
                        k,
                        q: q.matrix.clone(),
                        g: metric(&q).matrix().clone(),
                        f: curvature(&q).matrix().clone(),
                    });
                }
            }
        }
        let consistency = (0..m).map(|j| factorized_consistency(model, &self.lambda, j)).collect::<Result<Vec<_>, _>>()?;
        self.csv(out, format!("{stem}_eigenvalues.csv"), eig_table);
        let result = QgtResult {
            gap: geo.bands.gap(),
            energies: [geo.bands.energy(Band::Minus), geo.bands.energy(Band::Plus)],
            degeneracy: geo.degeneracy(),
            tensors,
            spectra,
            oracle: OracleReport { step: 1e-4, max_relative_deviation: oracle_deviation },
            consistency,
        };
        Ok(serde_json::to_value(result).map_err(|e| CmdError::Invariant(e.to_string()))?)
    }

    fn rabi(&self, out: &mut Outputs, stem: &str) -> CmdResult<serde_json::Value> {
        let geo = self.geometry()?;
        let mut pulse = self.drive(&geo)?;
        pulse.omega = geo.bands.gap();
        self.check(&pulse)?;
        let band = self.cfg.protocol.band;
        let mut opts = SpectroscopyOptions::new(self.cfg.sim.mode)
            .with_band(band)
            .with_state(self.initial_state(&geo, pulse.coupling(), band)?)
            .with_record(match self.cfg.drive.duration {
                Some(t) => RecordLength::Duration(t),
                None => RecordLength::RabiPeriods(self.cfg.sim.record_len),
            });
        opts.dt = Some(self.dt(&pulse));
        opts.sample_stride = self.cfg.sim.sample_stride;
        let s = rabi_spectroscopy(self.model.as_ref(), &self.lambda, &pulse, &opts)?;
        let mut trace = Csv::new(&["t", "pop_minus", "pop_plus"]);
        for i in 0..s.trace.times.len() {
            trace.push(vec![s.trace.times[i], s.trace.pop_minus[i], s.trace.pop_plus[i]]);
        }
        self.csv(out, format!("{stem}_trace.csv"), trace);
        let relative_errors: Vec<f64> =
            s.inferred_q.iter().zip(&s.reference_q).map(|(q, r)| (q - r).abs() / r.abs().max(f64::MIN_POSITIVE)).collect();
        Ok(serde_json::json!({
            "spectrum": s,
            "peak_count": s.peaks.len(),
            "relative_errors": relative_errors,
            "max_relative_error": s.max_relative_error(),
            "norm_drift": s.trace.norm_drift(),
        }))
    }

    fn prep(&self, out: &mut Outputs, stem: &str) -> CmdResult<serde_json::Value> {
        let geo = self.geometry()?;
        let mut pulse = self.single(&geo);
        pulse.omega = geo.bands.gap();
        self.check(&pulse)?;
        let coupling = pulse.coupling();
        let band = self.cfg.protocol.band;
        let psi0 = self.initial_state(&geo, coupling, band)?;
        let pb = geo.paired_basis(coupling)?;
        let n = geo.degeneracy();
        let mut options = PrepareOptions::new(self.cfg.sim.mode, self.measure());
        options.dt = Some(self.dt(&pulse));
        options.sample_stride = self.cfg.sim.sample_stride;

        let geometric: Vec<f64> = pb.q.iter().map(|&q| pulse.amplitude * q.max(0.0).sqrt()).collect();
        let omega_min = geometric.iter().copied().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
        if !omega_min.is_finite() {
            return Err(CmdError::Core(Error::NoPeaks));
        }
        let t_max = self.cfg.protocol.t_max.unwrap_or(100.0 * PI / omega_min);
        let mut request = PlanRequest::new(t_max);
        if let Some(k) = self.cfg.protocol.n {
            request = request.with_n(k);
        }

        if n != 2 || self.cfg.protocol.tree.is_some() {
            let tree = self.cfg.protocol.tree.clone().unwrap_or(PlanTree::Auto);
            let result = iterate_preparation(self.model.as_ref(), &self.lambda, &pulse, &psi0, &tree, &request, &options)?;
            for (i, leaf) in result.leaves.iter().enumerate() {
                let durations: Vec<f64> = leaf.plans.iter().map(|p| p.duration).collect();
                println!(
                    "branch {i}: rounds {} durations {durations:?} probability {:.6} fidelity {:.6}",
                    leaf.plans.len(),
                    leaf.probability,
                    leaf.fidelity
                );
            }
            return Ok(serde_json::json!({ "iteration": result }));
        }

        let omegas = match self.cfg.protocol.frequencies {
            FrequencySource::Geometry => geometric,
            FrequencySource::Spectroscopy => {
                let mut opts = SpectroscopyOptions::new(self.cfg.sim.mode)
                    .with_band(band)
                    .with_state(psi0.clone())
                    .with_record(RecordLength::RabiPeriods(self.cfg.sim.record_len));
                opts.dt = Some(self.dt(&pulse));
                let s = rabi_spectroscopy(self.model.as_ref(), &self.lambda, &pulse, &opts)?;
                if s.rabi_frequencies.len() != n {
                    return Err(CmdError::Protocol(format!(
                        "spectroscopy resolved {} of {n} pairs; preparation needs all of them",
                        s.rabi_frequencies.len()
                    )));
                }
                s.rabi_frequencies.clone()
            }
        };
        let weights: Vec<f64> = (0..n).map(|nu| pb.state(band, nu).dotc(&psi0).norm_sqr()).collect();
        let request = request.with_weights(weights);
        let partitions = match (&self.cfg.protocol.even, &self.cfg.protocol.odd) {
            (Some(e), Some(o)) => vec![Partition::new(e.clone(), o.clone())],
            _ => vec![Partition::new(vec![0], vec![1]), Partition::new(vec![1], vec![0])],
        };
        let mut best: Option<PreparationPlan> = None;
        let mut first_err = None;
        for part in &partitions {
            match plan_preparation(&omegas, part, &request) {
                Ok(p) => {
                    if best.as_ref().is_none_or(|b| p.predicted_fidelity > b.predicted_fidelity) {
                        best = Some(p);
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        let plan = match (best, first_err) {
            (Some(p), _) => p,
            (None, Some(e)) => return Err(e.into()),
            (None, None) => return Err(CmdError::Invariant("no partition evaluated".into())),
        };
        println!(
            "plan: T = {:.10} n = {} half cycles {:?} even {:?} odd {:?} predicted fidelity {:.6}",
            plan.duration, plan.n, plan.cycles, plan.partition.even, plan.partition.odd, plan.predicted_fidelity
        );
        let outcome = prepare_eigenstate(self.model.as_ref(), &self.lambda, &pulse, &psi0, &plan, &options)?;
        println!("simulated fidelity {:.6}", outcome.fidelity);
        let mut trace = Csv::new(&["t", "pop_minus", "pop_plus"]);
        for i in 0..outcome.trace.times.len() {
            trace.push(vec![outcome.trace.times[i], outcome.trace.pop_minus[i], outcome.trace.pop_plus[i]]);
        }
        self.csv(out, format!("{stem}_trace.csv"), trace);
        Ok(serde_json::json!({ "plan_frequencies": omegas, "outcome": outcome }))
    }

    fn tomo(&self, out: &mut Outputs, stem: &str) -> CmdResult<serde_json::Value> {
        let geo = self.geometry()?;
        let mut single = self.single(&geo);
        single.omega = geo.bands.gap();
        let mut tone = self.two_tone(&geo, self.cfg.protocol.two_tone_phase)?;
        tone.omega = geo.bands.gap();
        self.check(&single)?;
        self.check(&tone)?;
        let mut opts = TomographyOptions::new(self.cfg.sim.mode, self.measure());
        opts.shots = self.cfg.protocol.shots;
        opts.dt = Some(self.dt(&tone));
        let mix = tomography_mixing(self.model.as_ref(), &self.lambda, self.cfg.protocol.band, &single, &tone, &opts)?;
        let mut table = Csv::new(&["row", "col", "re", "im", "abs", "reference_abs"]);
        for i in 0..mix.entries.nrows() {
            for j in 0..mix.entries.ncols() {
                let z = mix.entries[(i, j)];
                table.push(vec![i as f64, j as f64, z.re, z.im, z.norm(), mix.reference[(i, j)].norm()]);
            }
        }
        self.csv(out, format!("{stem}_entries.csv"), table);
        Ok(serde_json::json!({
            "mixing": mix,
            "magnitude_error": mix.magnitude_error(),
            "row_norm_defect": mix.row_norm_defect(),
        }))
    }

    fn extract(&self, out: &mut Outputs, stem: &str) -> CmdResult<serde_json::Value> {
        let geo = self.geometry()?;
        let tone = self.two_tone(&geo, 0.0)?;
        let k = tone.k.expect("two-tone drive");
        let mut probe = self.single(&geo);
        probe.omega = geo.bands.gap();
        self.check(&probe)?;
        let mut opts = ExtractionOptions::new(self.cfg.sim.mode, self.measure());
        opts.band = self.cfg.protocol.band;
        opts.rabi_periods = self.cfg.sim.record_len;
        opts.tomography.shots = self.cfg.protocol.shots;
        opts.tomography.dt = Some(self.dt(&probe));
        let rep = extract_metric_curvature(self.model.as_ref(), &self.lambda, self.cfg.drive.j, k, probe.amplitude, &opts)?;
        let mut table = Csv::new(&["label", "metric", "reference_metric", "curvature", "reference_curvature"]);
        for i in 0..rep.metric_eigenvalues.len() {
            table.push(vec![
                i as f64,
                rep.metric_eigenvalues[i],
                rep.reference_metric_eigenvalues[i],
                rep.curvature_eigenvalues[i],
                rep.reference_curvature_eigenvalues[i],
            ]);
        }
        self.csv(out, format!("{stem}_eigenvalues.csv"), table);
        Ok(serde_json::json!({ "report": rep }))
    }

    fn lz(&self, out: &mut Outputs, stem: &str) -> CmdResult<serde_json::Value> {
        let geo = self.geometry()?;
        let mut pulse = self.single(&geo);
        pulse.omega = geo.bands.gap();
        self.check(&pulse)?;
        let lz = &self.cfg.lz;
        let pb = geo.paired_basis(pulse.coupling())?;
        let q = *pb.q.get(lz.nu).ok_or(Error::IndexOutOfRange { index: lz.nu, limit: pb.q.len() })?;
        let v2 = pulse.amplitude.powi(2) * q;
        let alphas: Vec<f64> = match (&lz.alpha_ratios, &lz.alphas) {
            (Some(ratios), _) => ratios.iter().map(|x| x * v2).collect(),
            (None, Some(a)) => a.clone(),
            (None, None) => unreachable!("validated"),
        };
        let mut options = LzFitOptions { t_edge: lz.t_edge, window_factor: lz.window_factor, ..LzFitOptions::default() };
        options.dt = None;
        if lz.cross_check {
            let mut opts = SpectroscopyOptions::new(self.cfg.sim.mode)
                .with_state(self.initial_state(&geo, pulse.coupling(), Band::Minus)?)
                .with_record(RecordLength::RabiPeriods(self.cfg.sim.record_len));
            opts.dt = Some(self.dt(&pulse));
            let s = rabi_spectroscopy(self.model.as_ref(), &self.lambda, &pulse, &opts)?;
            options.cross_check_q = (s.inferred_q.len() == pb.q.len()).then(|| s.inferred_q[lz.nu]);
        }
        let fit = lz_extraction(self.model.as_ref(), &self.lambda, &pulse, &alphas, lz.nu, &options)?;
        let mut table = Csv::new(&["alpha", "alpha_over_v2", "p_stay", "one_minus_p", "linear_law"]);
        for (a, p) in fit.alphas.iter().zip(&fit.p_stay) {
            table.push(vec![*a, a / v2, *p, 1.0 - p, PI * v2 / a]);
        }
        self.csv(out, format!("{stem}_sweeps.csv"), table);
        Ok(serde_json::json!({ "fit": fit, "coupling_squared": v2 }))
    }

    fn check_rwa(&self, out: &mut Outputs, stem: &str) -> CmdResult<serde_json::Value> {
        let geo = self.geometry()?;
        let mut pulse = self.drive(&geo)?;
        if matches!(self.cfg.drive.omega, Omega::Named(_)) {
            pulse.omega = geo.bands.gap();
        }
        pulse.amplitude = self.cfg.amplitude_for(pulse.omega);
        if self.cfg.drive.duration.is_none() {
            let op = geo.coupling_operator(Band::Minus, pulse.coupling())?;
            let q_max = geo.diagonalize(&op)?.eigenvalues[0].max(0.0);
            if q_max == 0.0 || pulse.amplitude == 0.0 {
                return Err(CmdError::Config("`drive.duration` is required when the drive does not couple".into()));
            }
            pulse.duration = self.cfg.sim.record_len * 2.0 * PI / (pulse.amplitude * q_max.sqrt());
        }
        self.check(&pulse)?;
        let raw: Vec<Vec<f64>> = match (&self.cfg.path.scales, &self.cfg.path.points) {
            (Some(s), _) => s.iter().map(|&x| self.cfg.lambda.iter().map(|l| x * l).collect()).collect(),
            (None, Some(p)) => p.clone(),
            (None, None) => unreachable!("validated"),
        };
        let path = raw.into_iter().map(ParameterPoint::new).collect::<Result<Vec<_>, _>>()?;
        let options = ValidityOptions { dt: Some(self.dt(&pulse)), shots: self.cfg.path.shots, ..ValidityOptions::default() };
        let model = self.model.as_ref();
        let points: Vec<Result<ValidityPoint, Error>> = self.pool()?.install(|| {
            path.par_iter()
                .map(|p| Ok(rwa_validity(model, std::slice::from_ref(p), &pulse, &options)?.points.remove(0)))
                .collect()
        });
        let report = ValidityReport {
            omega: pulse.omega,
            amplitude: pulse.amplitude,
            duration: pulse.duration,
            shots: options.shots,
            points: points.into_iter().collect::<Result<_, _>>()?,
        };
        let mut table =
            Csv::new(&["index", "gap", "gap_over_omega", "discrepancy", "visibility", "rabi_peak_visible", "flagged"]);
        for (i, p) in report.points.iter().enumerate() {
            table.push(vec![
                i as f64,
                p.gap,
                p.gap_over_omega,
                p.discrepancy,
                p.visibility,
                f64::from(u8::from(p.rabi_peak_visible)),
                f64::from(u8::from(p.flagged)),
            ]);
        }
        self.csv(out, format!("{stem}_path.csv"), table);
        let hidden: Vec<usize> = report.points.iter().enumerate().filter(|(_, p)| !p.rabi_peak_visible).map(|(i, _)| i).collect();
        Ok(serde_json::json!({ "report": report, "flagged": report.flagged(), "hidden_rabi_peaks": hidden }))
    }
}

#[derive(Serialize)]
struct QgtEntry {
    band: Band,
    j: usize,
    k: usize,
    #[serde(serialize_with = "complex_serde::matrix")]
    q: CMatrix,
    #[serde(serialize_with = "complex_serde::matrix")]
    g: CMatrix,
    #[serde(serialize_with = "complex_serde::matrix")]
    f: CMatrix,
}

#[derive(Serialize)]
struct QgtSpectrum {
    band: Band,
    j: usize,
    eigenvalues: Vec<f64>,
}

#[derive(Serialize)]
struct OracleReport {
    step: f64,
    max_relative_deviation: f64,
}

#[derive(Serialize)]
struct QgtResult {
    gap: f64,
    energies: [f64; 2],
    degeneracy: usize,
    tensors: Vec<QgtEntry>,
    spectra: Vec<QgtSpectrum>,
    oracle: OracleReport,
    consistency: Vec<georabi::geometry::ConsistencyReport>,
}

/// A JSON line whose value is a non-finite float as written by the fixed-digit formatter.
fn non_finite(line: &str) -> bool {
    let value = line.rsplit(": ").next().unwrap_or(line).trim().trim_end_matches(',');
    matches!(value, "NaN" | "inf" | "-inf")
}

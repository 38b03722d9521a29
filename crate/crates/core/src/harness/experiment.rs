use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::theory_point;
use crate::detector::{decide_value, detection_snr, ensemble_snr, DetectorParams};
use crate::error::{Error, Result};
use crate::numerics::{sin_power_integral, RngStream};
use crate::phy::{
    assemble_frame, draw_channels, generate_source_symbol, tag_receive, DofConvention,
    FrameHistory, GammaKnowledge, SnrMode, SystemConfig, ThresholdMode,
};
use crate::receiver::Receiver;

/// Output flavour of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    BerVsSnr,
    BerVsW,
    PdfCurves,
}

impl Emit {
    pub fn as_str(self) -> &'static str {
        match self {
            Emit::BerVsSnr => "ber_vs_snr",
            Emit::BerVsW => "ber_vs_w",
            Emit::PdfCurves => "pdf_curves",
        }
    }
}

impl std::str::FromStr for Emit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ber_vs_snr" => Ok(Emit::BerVsSnr),
            "ber_vs_w" => Ok(Emit::BerVsW),
            "pdf_curves" => Ok(Emit::PdfCurves),
            other => Err(Error::Parse {
                origin: "emit".into(),
                message: format!("unknown value `{other}`"),
            }),
        }
    }
}

/// A sweep over `(snr_db, W)` points sharing one base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub snr_db_list: Vec<f64>,
    pub w_list: Vec<usize>,
    pub trials_per_point: u64,
    pub output_path: String,
    pub emit: Emit,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = SystemConfig::default();
        ExperimentSpec {
            trials_per_point: base.trials,
            base,
            snr_db_list: vec![6.0, 9.0, 13.0, 16.0],
            w_list: vec![3, 12],
            output_path: "results.csv".into(),
            emit: Emit::BerVsSnr,
            workers: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db_list.is_empty() || self.w_list.is_empty() {
            return Err(Error::Config("sweep lists must not be empty".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be at least 1".into()));
        }
        for point in self.points() {
            self.point_config(&point)?;
        }
        Ok(())
    }

    /// Sweep points in emission order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let nw = self.w_list.len();
        let mut pts = Vec::with_capacity(self.snr_db_list.len() * nw);
        let at = |si: usize, wi: usize| SweepPoint {
            index: (si * nw + wi) as u64,
            snr_db: self.snr_db_list[si],
            w: self.w_list[wi],
        };
        match self.emit {
            Emit::BerVsW => {
                for si in 0..self.snr_db_list.len() {
                    for wi in 0..nw {
                        pts.push(at(si, wi));
                    }
                }
            }
            Emit::BerVsSnr | Emit::PdfCurves => {
                for wi in 0..nw {
                    for si in 0..self.snr_db_list.len() {
                        pts.push(at(si, wi));
                    }
                }
            }
        }
        pts
    }

    /// Configuration of one point. In `from-Ps` mode the source power is set
    /// so the ensemble-average detection SNR equals the point's SNR.
    pub fn point_config(&self, point: &SweepPoint) -> Result<SystemConfig> {
        let mut cfg = self.base.clone();
        cfg.w = point.w;
        cfg.gamma_db = point.snr_db;
        cfg.trials = self.trials_per_point;
        if cfg.snr_mode == SnrMode::FromPs {
            cfg.ps = 1.0;
            let unit = ensemble_snr(&cfg)?.gamma;
            if !(unit > 0.0) {
                return Err(Error::Config("tag attenuation eta must be non-zero".into()));
            }
            cfg.ps = cfg.gamma_linear() / unit;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Position in the `snr × W` grid, independent of emission order; seeds
    /// the per-trial streams.
    pub index: u64,
    pub snr_db: f64,
    pub w: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerResult {
    pub snr_db: f64,
    pub w: usize,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber_sim: f64,
    pub ci95_halfwidth: f64,
    pub ber_theory_approx: f64,
    pub ber_theory_exact: f64,
    pub threshold_used: f64,
    pub dof_convention: DofConvention,
    pub threshold_mode: ThresholdMode,
    pub seed: u64,
    pub wall_ms: u64,
}

impl BerResult {
    fn from_counts(trials: u64, bit_errors: u64) -> (f64, f64) {
        let ber = bit_errors as f64 / trials as f64;
        let ci = 1.96 * (ber * (1.0 - ber) / trials as f64).sqrt();
        (ber, ci)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub sent: u8,
    pub decided: u8,
    /// Detection SNR handed to the detector.
    pub gamma: f64,
    pub threshold: f64,
    pub gamma_t: f64,
}

/// Runs trials of one configuration, reusing the DFT plan and any threshold
/// that does not change between trials.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    config: SystemConfig,
    receiver: Receiver,
    fixed: Option<DetectorParams>,
    sin_integral: Option<f64>,
}

impl TrialRunner {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        if !(config.nw > 0.0) {
            return Err(Error::Config("Monte Carlo trials need N_w > 0".into()));
        }
        let receiver = Receiver::new(config)?;
        let dof_count = match config.dof_convention {
            DofConvention::Paper => config.w,
            DofConvention::Complex => 2 * config.w,
        };
        let sin_integral = match config.threshold_mode {
            ThresholdMode::ClosedForm => Some(sin_power_integral(dof_count)?),
            ThresholdMode::ExactRoot => None,
        };
        let mut runner = TrialRunner {
            config: config.clone(),
            receiver,
            fixed: None,
            sin_integral,
        };
        let constant_gamma = match (config.snr_mode, config.gamma_knowledge) {
            (SnrMode::DirectGamma, _) => Some(config.gamma_linear()),
            (SnrMode::FromPs, GammaKnowledge::Ensemble) => Some(ensemble_snr(config)?.gamma),
            _ => None,
        };
        if let Some(g) = constant_gamma {
            runner.fixed = Some(runner.detector_for(g)?);
        }
        Ok(runner)
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    /// Detector used when every trial sees the same SNR.
    pub fn fixed_detector(&self) -> Option<&DetectorParams> {
        self.fixed.as_ref()
    }

    fn detector_for(&self, gamma: f64) -> Result<DetectorParams> {
        let cfg = &self.config;
        match self.sin_integral {
            Some(integral) => {
                DetectorParams::closed_form_cached(cfg.w, gamma, cfg.dof_convention, integral)
            }
            None => DetectorParams::new(cfg.w, gamma, cfg.dof_convention, cfg.threshold_mode),
        }
    }

    /// One bit through channel draw, frame, reader and detector.
    pub fn run(&mut self, rng: &mut RngStream) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let history = FrameHistory::zeros(cfg);
        let channels = draw_channels(cfg, rng)?;
        let sent = rng.bit();
        let mut s = generate_source_symbol(cfg, rng);
        let mut x = tag_receive(&s, channels.g(), &history.source)?;

        let realized = match cfg.gamma_knowledge {
            GammaKnowledge::Instantaneous => self.receiver.window_snr(&x, &channels),
            GammaKnowledge::Channel => detection_snr(&channels, cfg)?.gamma,
            GammaKnowledge::Ensemble => ensemble_snr(cfg)?.gamma,
        };
        let gamma = match cfg.snr_mode {
            SnrMode::DirectGamma => {
                if !(realized > 0.0) || !realized.is_finite() {
                    return Err(Error::Config(format!(
                        "cannot scale detection SNR {realized} to the target"
                    )));
                }
                let target = cfg.gamma_linear();
                let amp = (target / realized).sqrt();
                for v in s.iter_mut().chain(x.iter_mut()) {
                    *v *= amp;
                }
                target
            }
            SnrMode::FromPs => realized,
        };

        let frame = assemble_frame(cfg, &channels, s, x, sent, rng, &history)?;
        let block = self.receiver.process(&frame.y)?;
        let stat = self.receiver.statistic(&block)?;
        let params = match self.fixed {
            Some(p) => p,
            None => self.detector_for(gamma)?,
        };
        Ok(TrialOutcome {
            sent,
            decided: decide_value(stat.gamma_t, params.threshold),
            gamma,
            threshold: params.threshold,
            gamma_t: stat.gamma_t,
        })
    }
}

/// Single trial: `(sent_bit, decided_bit)`.
pub fn run_trial(config: &SystemConfig, rng: &mut RngStream) -> Result<(u8, u8)> {
    let out = TrialRunner::new(config)?.run(rng)?;
    Ok((out.sent, out.decided))
}

/// Stream of trial `trial` at grid point `point`.
pub fn trial_stream(seed: u64, point: u64, trial: u64) -> RngStream {
    RngStream::new(seed, (point << 40) | trial)
}

const CHUNK: u64 = 2048;

fn count_errors(config: &SystemConfig, point: u64, trials: u64) -> Result<u64> {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<u64> {
            let mut runner = TrialRunner::new(config)?;
            let mut errors = 0;
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = trial_stream(config.seed, point, t);
                let out = runner.run(&mut rng)?;
                errors += u64::from(out.sent != out.decided);
            }
            Ok(errors)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

/// Simulates every sweep point and attaches the model's BER.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<BerResult>> {
    spec.validate()?;
    with_workers(spec.workers, || {
        spec.points()
            .iter()
            .map(|point| run_point(spec, point))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Simulates one sweep point.
pub fn run_point(spec: &ExperimentSpec, point: &SweepPoint) -> Result<BerResult> {
    let cfg = spec.point_config(point)?;
    let start = Instant::now();
    let errors = count_errors(&cfg, point.index, spec.trials_per_point)?;
    let wall_ms = start.elapsed().as_millis() as u64;
    let (ber_sim, ci95_halfwidth) = BerResult::from_counts(spec.trials_per_point, errors);

    // Model BER at the point's nominal SNR.
    let params = DetectorParams::new(cfg.w, cfg.gamma_linear(), cfg.dof_convention, cfg.threshold_mode)?;
    let theory = theory_point(point.snr_db, &params)?;
    Ok(BerResult {
        snr_db: point.snr_db,
        w: point.w,
        trials: spec.trials_per_point,
        bit_errors: errors,
        ber_sim,
        ci95_halfwidth,
        ber_theory_approx: theory.ber_theory_approx,
        ber_theory_exact: theory.ber_theory_exact,
        threshold_used: params.threshold,
        dof_convention: cfg.dof_convention,
        threshold_mode: cfg.threshold_mode,
        seed: cfg.seed,
        wall_ms,
    })
}

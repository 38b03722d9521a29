//! Frame generation: channels, CP-OFDM source symbol, tag gating waveform,
//! tag-received and reader-received sample streams.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian, DftPlan, RngStream};

/// How the target SNR of an experiment point is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrMode {
    /// Scale the source power so the detection SNR equals `gamma_db`.
    DirectGamma,
    /// Use the configured source power; the detection SNR follows the draw.
    FromPs,
}

/// Degrees-of-freedom model for the test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofConvention {
    /// `Γ_t ~ χ²_W(Wγ)`.
    Paper,
    /// `2Γ_t ~ χ²_{2W}(2Wγ)`: each complex bin carries two real dimensions.
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    ClosedForm,
    ExactRoot,
}

/// What the reader is told about the detection SNR of each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaKnowledge {
    /// Realized SNR of the statistic window (signal energy actually present
    /// in the `W` bins over `W · P_w`).
    Instantaneous,
    /// Closed-form γ from the drawn channel taps.
    Channel,
    /// γ with tap energies replaced by their means `M + 1` and `K + 1`.
    Ensemble,
}

macro_rules! text_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::Parse {
                        origin: stringify!($ty).to_string(),
                        message: format!("unknown value `{other}`"),
                    }),
                }
            }
        }
    };
}

text_enum!(SnrMode { DirectGamma => "direct-gamma", FromPs => "from-Ps" });
text_enum!(DofConvention { Paper => "paper", Complex => "complex" });
text_enum!(ThresholdMode { ClosedForm => "closed-form", ExactRoot => "exact-root" });
text_enum!(GammaKnowledge {
    Instantaneous => "instantaneous",
    Channel => "channel",
    Ensemble => "ensemble",
});

/// Scalar parameters of the link and of one experiment point.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Effective OFDM symbol length `N`.
    pub n: usize,
    /// Cyclic prefix length `C`.
    pub cp: usize,
    /// Channel orders; tap counts are `l + 1`, `m + 1`, `k + 1`.
    pub l: usize,
    pub m: usize,
    pub k: usize,
    /// Complex attenuation inside the tag.
    pub eta: Complex64,
    pub ps: f64,
    pub nw: f64,
    /// Samples per statistic.
    pub w: usize,
    pub trials: u64,
    pub seed: u64,
    pub snr_mode: SnrMode,
    pub gamma_db: f64,
    pub dof_convention: DofConvention,
    pub threshold_mode: ThresholdMode,
    pub gamma_knowledge: GammaKnowledge,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n: 2048,
            cp: 256,
            l: 5,
            m: 5,
            k: 5,
            eta: Complex64::new(0.5, 0.0),
            ps: 1.0,
            nw: 1.0,
            w: 3,
            trials: 100_000,
            seed: 1,
            snr_mode: SnrMode::DirectGamma,
            gamma_db: 13.0,
            dof_convention: DofConvention::Paper,
            threshold_mode: ThresholdMode::ClosedForm,
            gamma_knowledge: GammaKnowledge::Instantaneous,
        }
    }
}

impl SystemConfig {
    /// `Q = max(L, M, K)`.
    pub fn q(&self) -> usize {
        self.l.max(self.m).max(self.k)
    }

    /// `T = C − Q − 1`; the cancelled block has `T + 1` samples.
    pub fn t(&self) -> usize {
        self.cp - self.q() - 1
    }

    /// `R = C − Q − K − 1`; the folded block has `R + 1` samples.
    pub fn r(&self) -> usize {
        self.cp - self.q() - self.k - 1
    }

    pub fn frame_len(&self) -> usize {
        self.n + self.cp
    }

    /// Noise power of one DFT bin after cancellation and folding.
    pub fn pw(&self) -> f64 {
        2.0 * (self.t() + 1) as f64 * self.nw
    }

    pub fn gamma_linear(&self) -> f64 {
        10f64.powf(self.gamma_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let q = self.q();
        if self.cp <= q + self.k + 1 {
            return bad(format!(
                "C = {} must exceed Q + K + 1 = {}",
                self.cp,
                q + self.k + 1
            ));
        }
        if self.n < self.cp {
            return bad(format!("N = {} must be at least C = {}", self.n, self.cp));
        }
        if self.w == 0 || self.w > self.r() + 1 {
            return bad(format!("W = {} must lie in [1, R + 1 = {}]", self.w, self.r() + 1));
        }
        if !(self.ps > 0.0) || !self.ps.is_finite() {
            return bad(format!("P_s = {} must be positive", self.ps));
        }
        if !(self.nw >= 0.0) || !self.nw.is_finite() {
            return bad(format!("N_w = {} must be non-negative", self.nw));
        }
        if !self.eta.re.is_finite() || !self.eta.im.is_finite() {
            return bad("eta must be finite".into());
        }
        if !self.gamma_db.is_finite() {
            return bad("gamma_db must be finite".into());
        }
        Ok(())
    }
}

/// Tap vectors `h` (source→reader), `g` (source→tag), `f` (tag→reader).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    h: Vec<Complex64>,
    g: Vec<Complex64>,
    f: Vec<Complex64>,
    cp: usize,
}

impl ChannelSet {
    pub fn new(h: Vec<Complex64>, g: Vec<Complex64>, f: Vec<Complex64>, cp: usize) -> Result<Self> {
        if h.is_empty() || g.is_empty() || f.is_empty() {
            return Err(Error::Config("every channel needs at least one tap".into()));
        }
        let set = ChannelSet { h, g, f, cp };
        if cp <= set.q() + set.f.len() {
            return Err(Error::Config(format!(
                "C = {cp} too short for channel orders (Q = {}, K = {})",
                set.q(),
                set.f.len() - 1
            )));
        }
        Ok(set)
    }

    pub fn h(&self) -> &[Complex64] {
        &self.h
    }

    pub fn g(&self) -> &[Complex64] {
        &self.g
    }

    pub fn f(&self) -> &[Complex64] {
        &self.f
    }

    pub fn q(&self) -> usize {
        (self.h.len().max(self.g.len()).max(self.f.len())) - 1
    }

    pub fn t(&self) -> usize {
        self.cp - self.q() - 1
    }

    pub fn r(&self) -> usize {
        self.t() - (self.f.len() - 1)
    }

    pub fn sum_g2(&self) -> f64 {
        self.g.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn sum_f2(&self) -> f64 {
        self.f.iter().map(|c| c.norm_sqr()).sum()
    }

    fn check_against(&self, config: &SystemConfig) -> Result<()> {
        let lens = [
            ("h taps", config.l + 1, self.h.len()),
            ("g taps", config.m + 1, self.g.len()),
            ("f taps", config.k + 1, self.f.len()),
        ];
        for (context, expected, actual) in lens {
            if expected != actual {
                return Err(Error::LengthMismatch {
                    context,
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }
}

/// Samples carried over from the previous symbol period, most recent last.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameHistory {
    /// Tail of `s(n)`.
    pub source: Vec<Complex64>,
    /// Tail of the reflected product `B(n) x(n)`.
    pub reflected: Vec<Complex64>,
}

impl FrameHistory {
    /// Silence before the first frame.
    pub fn zeros(config: &SystemConfig) -> Self {
        let q = config.q();
        FrameHistory {
            source: vec![Complex64::default(); q],
            reflected: vec![Complex64::default(); q],
        }
    }

    /// History that the next frame sees after `frame`.
    pub fn after(frame: &Frame, config: &SystemConfig) -> Self {
        let q = config.q();
        let len = frame.s.len();
        FrameHistory {
            source: frame.s[len - q..].to_vec(),
            reflected: (len - q..len)
                .map(|n| frame.x[n] * f64::from(frame.gate[n]))
                .collect(),
        }
    }
}

/// One OFDM symbol period as seen by every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub s: Vec<Complex64>,
    pub x: Vec<Complex64>,
    pub gate: Vec<u8>,
    pub y: Vec<Complex64>,
    /// Reader noise `w(n)`; kept for genie-side diagnostics.
    pub noise: Vec<Complex64>,
    pub bit: u8,
}

/// Draws i.i.d. `CN(0, 1)` taps for all three channels.
pub fn draw_channels(config: &SystemConfig, rng: &mut RngStream) -> Result<ChannelSet> {
    config.validate()?;
    let mut taps = |count: usize| -> Vec<Complex64> {
        (0..count).map(|_| complex_gaussian(rng, 1.0)).collect()
    };
    let h = taps(config.l + 1);
    let g = taps(config.m + 1);
    let f = taps(config.k + 1);
    ChannelSet::new(h, g, f, config.cp)
}

/// `N` i.i.d. `CN(0, P_s)` samples with the last `C` copied in front.
pub fn generate_source_symbol(config: &SystemConfig, rng: &mut RngStream) -> Vec<Complex64> {
    let (n, cp) = (config.n, config.cp);
    let mut s = vec![Complex64::default(); n + cp];
    for v in &mut s[cp..] {
        *v = complex_gaussian(rng, config.ps);
    }
    let (prefix, body) = s.split_at_mut(cp);
    prefix.copy_from_slice(&body[n - cp..]);
    s
}

/// Reflection waveform `B(n)`: `bit` on `[Q, C − K − 1]`, zero elsewhere.
pub fn tag_gate(config: &SystemConfig, bit: u8) -> Vec<u8> {
    let mut gate = vec![0u8; config.frame_len()];
    if bit != 0 {
        let start = config.q();
        let end = config.cp - config.k;
        gate[start..end].fill(1);
    }
    gate
}

// y[n] += Σ_i taps[i] · input[n - i], reading negative indices from `history`.
fn convolve_into(
    out: &mut [Complex64],
    input: &[Complex64],
    taps: &[Complex64],
    history: &[Complex64],
) -> Result<()> {
    if taps.len() > history.len() + 1 {
        return Err(Error::LengthMismatch {
            context: "convolution history",
            expected: taps.len() - 1,
            actual: history.len(),
        });
    }
    let hist_len = history.len();
    for (i, &tap) in taps.iter().enumerate() {
        if tap == Complex64::default() {
            continue;
        }
        for (n, o) in out.iter_mut().enumerate().take(i) {
            *o += tap * history[hist_len + n - i];
        }
        for (o, &v) in out[i..].iter_mut().zip(input) {
            *o += tap * v;
        }
    }
    Ok(())
}

/// Signal at the tag antenna, `x(n) = Σ_m g_m s(n − m)`.
pub fn tag_receive(
    s: &[Complex64],
    g: &[Complex64],
    history: &[Complex64],
) -> Result<Vec<Complex64>> {
    let mut x = vec![Complex64::default(); s.len()];
    convolve_into(&mut x, s, g, history)?;
    Ok(x)
}

/// Noise-free reader signal: direct path plus gated backscatter.
pub fn observe_clean(
    s: &[Complex64],
    x: &[Complex64],
    gate: &[u8],
    channels: &ChannelSet,
    eta: Complex64,
    history: &FrameHistory,
) -> Result<Vec<Complex64>> {
    let len = s.len();
    for (context, actual) in [("x stream", x.len()), ("gate", gate.len())] {
        if actual != len {
            return Err(Error::LengthMismatch {
                context,
                expected: len,
                actual,
            });
        }
    }
    let mut y = vec![Complex64::default(); len];
    convolve_into(&mut y, s, channels.h(), &history.source)?;

    let mut backscatter = vec![Complex64::default(); len];
    convolve_gated(&mut backscatter, x, gate, channels.f(), &history.reflected)?;
    for (o, b) in y.iter_mut().zip(backscatter) {
        *o += eta * b;
    }
    Ok(y)
}

// Like `convolve_into` on `input · gate`, touching only the gated runs.
fn convolve_gated(
    out: &mut [Complex64],
    input: &[Complex64],
    gate: &[u8],
    taps: &[Complex64],
    history: &[Complex64],
) -> Result<()> {
    convolve_into(out, &[], taps, history)?;
    let len = out.len();
    let mut start = 0;
    while start < len {
        if gate[start] == 0 {
            start += 1;
            continue;
        }
        let end = gate[start..].iter().position(|&b| b == 0).map_or(len, |p| start + p);
        for (i, &tap) in taps.iter().enumerate() {
            if start + i >= len {
                break;
            }
            let stop = (end + i).min(len);
            for (o, &v) in out[start + i..stop].iter_mut().zip(&input[start..end]) {
                *o += tap * v;
            }
        }
        start = end;
    }
    Ok(())
}

/// Reader observation with additive `CN(0, N_w)` noise.
pub fn observe(
    s: &[Complex64],
    x: &[Complex64],
    gate: &[u8],
    channels: &ChannelSet,
    config: &SystemConfig,
    rng: &mut RngStream,
    history: &FrameHistory,
) -> Result<Vec<Complex64>> {
    Ok(observe_with_noise(s, x, gate, channels, config, rng, history)?.0)
}

fn observe_with_noise(
    s: &[Complex64],
    x: &[Complex64],
    gate: &[u8],
    channels: &ChannelSet,
    config: &SystemConfig,
    rng: &mut RngStream,
    history: &FrameHistory,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if s.len() != config.frame_len() {
        return Err(Error::LengthMismatch {
            context: "source stream",
            expected: config.frame_len(),
            actual: s.len(),
        });
    }
    let mut y = observe_clean(s, x, gate, channels, config.eta, history)?;
    let noise: Vec<Complex64> = (0..y.len())
        .map(|_| complex_gaussian(rng, config.nw))
        .collect();
    for (o, w) in y.iter_mut().zip(&noise) {
        *o += w;
    }
    Ok((y, noise))
}

/// Builds a frame around a given source symbol. Draws only the reader noise.
pub fn build_frame(
    config: &SystemConfig,
    channels: &ChannelSet,
    s: Vec<Complex64>,
    bit: u8,
    rng: &mut RngStream,
    history: &FrameHistory,
) -> Result<Frame> {
    channels.check_against(config)?;
    let x = tag_receive(&s, channels.g(), &history.source)?;
    assemble_frame(config, channels, s, x, bit, rng, history)
}

/// Builds a frame from a source symbol and its tag-antenna signal `x`.
/// Draws only the reader noise.
pub fn assemble_frame(
    config: &SystemConfig,
    channels: &ChannelSet,
    s: Vec<Complex64>,
    x: Vec<Complex64>,
    bit: u8,
    rng: &mut RngStream,
    history: &FrameHistory,
) -> Result<Frame> {
    channels.check_against(config)?;
    let gate = tag_gate(config, bit);
    let (y, noise) = observe_with_noise(&s, &x, &gate, channels, config, rng, history)?;
    Ok(Frame {
        s,
        x,
        gate,
        y,
        noise,
        bit,
    })
}

/// Draws a source symbol and builds the frame carrying `bit`.
pub fn generate_frame(
    config: &SystemConfig,
    channels: &ChannelSet,
    bit: u8,
    rng: &mut RngStream,
    history: &FrameHistory,
) -> Result<Frame> {
    let s = generate_source_symbol(config, rng);
    build_frame(config, channels, s, bit, rng, history)
}

/// What a legacy OFDM receiver sees: CP removed, length-`N` DFT.
pub fn legacy_demodulate(y: &[Complex64], config: &SystemConfig) -> Result<Vec<Complex64>> {
    if y.len() != config.frame_len() {
        return Err(Error::LengthMismatch {
            context: "legacy input",
            expected: config.frame_len(),
            actual: y.len(),
        });
    }
    let mut body = y[config.cp..].to_vec();
    DftPlan::new(config.n).process(&mut body);
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dft;

    fn small() -> SystemConfig {
        SystemConfig {
            n: 64,
            cp: 24,
            l: 2,
            m: 3,
            k: 2,
            ..SystemConfig::default()
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    // Direct double loop with explicit negative-index lookup.
    fn conv_oracle(input: &[Complex64], taps: &[Complex64], hist: &[Complex64]) -> Vec<Complex64> {
        (0..input.len() as isize)
            .map(|n| {
                let mut acc = Complex64::default();
                for (i, &t) in taps.iter().enumerate() {
                    let idx = n - i as isize;
                    let v = if idx >= 0 {
                        input[idx as usize]
                    } else {
                        hist[(hist.len() as isize + idx) as usize]
                    };
                    acc += t * v;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn derived_dimensions() {
        let cfg = SystemConfig::default();
        assert_eq!((cfg.q(), cfg.t(), cfg.r()), (5, 250, 245));
        let flat = SystemConfig {
            l: 0,
            m: 0,
            k: 0,
            ..SystemConfig::default()
        };
        assert_eq!((flat.q(), flat.t(), flat.r()), (0, 255, 255));
        let mut rng = RngStream::new(1, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        assert_eq!((ch.q(), ch.t(), ch.r()), (5, 250, 245));
        assert_eq!(ch.h().len(), 6);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::default().validate().is_ok());
        let short_cp = SystemConfig {
            cp: 11,
            ..SystemConfig::default()
        };
        assert!(short_cp.validate().is_err());
        let ok_cp = SystemConfig {
            cp: 12,
            n: 12,
            w: 1,
            ..SystemConfig::default()
        };
        assert!(ok_cp.validate().is_ok());
        let wide = SystemConfig {
            w: 247,
            ..SystemConfig::default()
        };
        assert!(wide.validate().is_err());
        let n_small = SystemConfig {
            n: 100,
            ..SystemConfig::default()
        };
        assert!(n_small.validate().is_err());
        let bad_ps = SystemConfig {
            ps: 0.0,
            ..SystemConfig::default()
        };
        assert!(bad_ps.validate().is_err());
    }

    #[test]
    fn mean_tap_energy() {
        let cfg = SystemConfig::default();
        let mut rng = RngStream::new(2, 0);
        let draws = 100_000;
        let total: f64 = (0..draws)
            .map(|_| draw_channels(&cfg, &mut rng).unwrap().sum_g2())
            .sum();
        let mean = total / draws as f64;
        assert!((mean - 6.0).abs() < 0.02 * 6.0, "{mean}");
    }

    #[test]
    fn source_symbol_has_cyclic_prefix() {
        let cfg = SystemConfig {
            n: 8,
            cp: 4,
            l: 0,
            m: 0,
            k: 0,
            w: 1,
            ..SystemConfig::default()
        };
        let mut rng = RngStream::new(3, 0);
        let s = generate_source_symbol(&cfg, &mut rng);
        assert_eq!(s.len(), 12);
        assert_eq!(s[0..4], s[8..12]);
    }

    #[test]
    fn source_power() {
        let cfg = SystemConfig {
            ps: 4.0,
            ..SystemConfig::default()
        };
        let mut rng = RngStream::new(4, 0);
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 1_000_000 {
            let s = generate_source_symbol(&cfg, &mut rng);
            acc += s[cfg.cp..].iter().map(|v| v.norm_sqr()).sum::<f64>();
            count += cfg.n;
        }
        let var = acc / count as f64;
        assert!((var - 4.0).abs() < 0.08, "{var}");
    }

    #[test]
    fn gate_support() {
        let cfg = SystemConfig::default();
        assert!(tag_gate(&cfg, 0).iter().all(|&b| b == 0));
        let gate = tag_gate(&cfg, 1);
        assert_eq!(gate.len(), 2304);
        for (n, &b) in gate.iter().enumerate() {
            assert_eq!(b == 1, (5..=250).contains(&n), "n={n}");
        }
        let ones = gate.iter().filter(|&&b| b == 1).count();
        assert_eq!(ones, cfg.r() + 1);
        assert_eq!(ones, 246);
    }

    #[test]
    fn tag_receive_identity_and_delay() {
        let s: Vec<Complex64> = (0..10).map(|i| c(i as f64 + 1.0)).collect();
        let x = tag_receive(&s, &[c(1.0), c(0.0), c(0.0)], &[c(9.0), c(9.0)]).unwrap();
        assert_eq!(x, s);
        let mut impulse = vec![Complex64::default(); 6];
        impulse[0] = c(1.0);
        let x = tag_receive(&impulse, &[c(0.0), c(1.0)], &[c(0.0)]).unwrap();
        let mut want = vec![Complex64::default(); 6];
        want[1] = c(1.0);
        assert_eq!(x, want);
        assert!(tag_receive(&s, &[c(1.0); 4], &[c(0.0)]).is_err());
    }

    #[test]
    fn tag_receive_matches_double_loop() {
        let cfg = small();
        let mut rng = RngStream::new(5, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let s = generate_source_symbol(&cfg, &mut rng);
        let hist: Vec<Complex64> = (0..cfg.q()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let x = tag_receive(&s, ch.g(), &hist).unwrap();
        let want = conv_oracle(&s, ch.g(), &hist);
        for (a, b) in x.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn observe_matches_double_loop() {
        let cfg = SystemConfig {
            nw: 0.0,
            eta: Complex64::new(0.3, -0.4),
            ..small()
        };
        let mut rng = RngStream::new(6, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let s = generate_source_symbol(&cfg, &mut rng);
        let history = FrameHistory {
            source: (0..cfg.q()).map(|_| complex_gaussian(&mut rng, 1.0)).collect(),
            reflected: (0..cfg.q()).map(|_| complex_gaussian(&mut rng, 1.0)).collect(),
        };
        let x = tag_receive(&s, ch.g(), &history.source).unwrap();
        let gate = tag_gate(&cfg, 1);
        let y = observe(&s, &x, &gate, &ch, &cfg, &mut rng, &history).unwrap();

        let bx: Vec<Complex64> = x.iter().zip(&gate).map(|(v, &b)| v * b as f64).collect();
        let direct = conv_oracle(&s, ch.h(), &history.source);
        let back = conv_oracle(&bx, ch.f(), &history.reflected);
        for n in 0..y.len() {
            let want = direct[n] + cfg.eta * back[n];
            assert!((y[n] - want).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn observe_degenerate_cases() {
        let cfg = SystemConfig { nw: 0.0, ..small() };
        let mut rng = RngStream::new(7, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let s = generate_source_symbol(&cfg, &mut rng);
        let hist = FrameHistory::zeros(&cfg);
        let x = tag_receive(&s, ch.g(), &hist.source).unwrap();
        let direct = conv_oracle(&s, ch.h(), &hist.source);

        let y0 = observe(&s, &x, &tag_gate(&cfg, 0), &ch, &cfg, &mut rng, &hist).unwrap();
        assert_eq!(y0, direct);

        let mute = SystemConfig {
            eta: Complex64::default(),
            ..cfg.clone()
        };
        let y1 = observe(&s, &x, &tag_gate(&cfg, 1), &ch, &mute, &mut rng, &hist).unwrap();
        assert_eq!(y1, direct);

        assert!(observe(&s[1..], &x, &tag_gate(&cfg, 0), &ch, &cfg, &mut rng, &hist).is_err());
    }

    #[test]
    fn backscatter_confined_to_prefix() {
        let cfg = SystemConfig { nw: 0.0, ..small() };
        let mut rng = RngStream::new(8, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let hist = FrameHistory::zeros(&cfg);
        let s = generate_source_symbol(&cfg, &mut rng);
        let f0 = build_frame(&cfg, &ch, s.clone(), 0, &mut rng, &hist).unwrap();
        let f1 = build_frame(&cfg, &ch, s, 1, &mut rng, &hist).unwrap();
        assert_eq!(f0.y[cfg.cp..], f1.y[cfg.cp..]);
        assert_ne!(f0.y[..cfg.cp], f1.y[..cfg.cp]);
    }

    #[test]
    fn legacy_receiver_cannot_see_tag() {
        let cfg = SystemConfig {
            nw: 0.0,
            ..SystemConfig::default()
        };
        let mut rng = RngStream::new(9, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let hist = FrameHistory::zeros(&cfg);
        let s = generate_source_symbol(&cfg, &mut rng);
        let a = build_frame(&cfg, &ch, s.clone(), 0, &mut rng, &hist).unwrap();
        let b = build_frame(&cfg, &ch, s, 1, &mut rng, &hist).unwrap();
        let da = legacy_demodulate(&a.y, &cfg).unwrap();
        let db = legacy_demodulate(&b.y, &cfg).unwrap();
        assert_eq!(da.len(), cfg.n);
        let scale = da.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (p, q) in da.iter().zip(&db) {
            assert!((p - q).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn legacy_unit_channel_returns_symbol_spectrum() {
        let cfg = SystemConfig {
            nw: 0.0,
            eta: Complex64::default(),
            ..small()
        };
        let mut rng = RngStream::new(10, 0);
        let mut ch_h = vec![Complex64::default(); cfg.l + 1];
        ch_h[0] = c(1.0);
        let ch = ChannelSet::new(
            ch_h,
            vec![c(1.0); cfg.m + 1],
            vec![c(1.0); cfg.k + 1],
            cfg.cp,
        )
        .unwrap();
        let frame = generate_frame(&cfg, &ch, 1, &mut rng, &FrameHistory::zeros(&cfg)).unwrap();
        let got = legacy_demodulate(&frame.y, &cfg).unwrap();
        let want = dft(&frame.s[cfg.cp..]);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-9);
        }
        assert!(legacy_demodulate(&frame.y[1..], &cfg).is_err());
    }

    #[test]
    fn history_carries_tails() {
        let cfg = small();
        let mut rng = RngStream::new(11, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let frame = generate_frame(&cfg, &ch, 1, &mut rng, &FrameHistory::zeros(&cfg)).unwrap();
        let next = FrameHistory::after(&frame, &cfg);
        assert_eq!(next.source, frame.s[frame.s.len() - cfg.q()..]);
        // Phase 4 never reflects
        assert!(next.reflected.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn channel_set_rejects_mismatch() {
        let cfg = small();
        let ch = ChannelSet::new(vec![c(1.0)], vec![c(1.0)], vec![c(1.0)], cfg.cp).unwrap();
        let mut rng = RngStream::new(12, 0);
        let s = generate_source_symbol(&cfg, &mut rng);
        assert!(build_frame(&cfg, &ch, s, 0, &mut rng, &FrameHistory::zeros(&cfg)).is_err());
        assert!(ChannelSet::new(vec![], vec![c(1.0)], vec![c(1.0)], 10).is_err());
    }

    #[test]
    fn enum_text_round_trip() {
        for mode in [SnrMode::DirectGamma, SnrMode::FromPs] {
            assert_eq!(mode.as_str().parse::<SnrMode>().unwrap(), mode);
        }
        assert_eq!("complex".parse::<DofConvention>().unwrap(), DofConvention::Complex);
        assert_eq!("exact-root".parse::<ThresholdMode>().unwrap(), ThresholdMode::ExactRoot);
        assert!("bogus".parse::<GammaKnowledge>().is_err());
    }
}

//! Reader front end: CP-based interference cancellation, fold to a circular
//! block, DFT, and the energy statistic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{dft, DftPlan};
use crate::phy::{ChannelSet, Frame, SystemConfig};

/// The three stages of one received block.
#[derive(Debug, Clone, PartialEq)]
pub struct CancelledBlock {
    /// `T + 1` samples after subtracting the Phase 4 window.
    pub z: Vec<Complex64>,
    /// `R + 1` samples with the convolution tail added onto the head.
    pub z_folded: Vec<Complex64>,
    pub z_tilde: Vec<Complex64>,
}

/// Genie-side split of the statistic into noise, signal and cross terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub mt: f64,
    pub jt: f64,
    pub vt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionStatistic {
    pub gamma_t: f64,
    pub pw: f64,
    pub parts: Option<Decomposition>,
}

/// Phase 2 and Phase 4 windows, `y[Q..C]` and `y[N+Q..N+C]`.
pub fn extract_windows<'a>(
    y: &'a [Complex64],
    config: &SystemConfig,
) -> Result<(&'a [Complex64], &'a [Complex64])> {
    if y.len() != config.frame_len() {
        return Err(Error::LengthMismatch {
            context: "reader observation",
            expected: config.frame_len(),
            actual: y.len(),
        });
    }
    let q = config.q();
    let (n, cp) = (config.n, config.cp);
    Ok((&y[q..cp], &y[n + q..n + cp]))
}

/// `z(n) = y₁(n) − y₂(n)`.
pub fn cancel(y1: &[Complex64], y2: &[Complex64]) -> Result<Vec<Complex64>> {
    if y1.len() != y2.len() {
        return Err(Error::LengthMismatch {
            context: "cancellation windows",
            expected: y1.len(),
            actual: y2.len(),
        });
    }
    Ok(y1.iter().zip(y2).map(|(a, b)| a - b).collect())
}

/// Adds the last `K` samples onto the first `K`, leaving `R + 1` samples.
pub fn fold(z: &[Complex64], config: &SystemConfig) -> Result<Vec<Complex64>> {
    let expected = config.t() + 1;
    if z.len() != expected {
        return Err(Error::LengthMismatch {
            context: "fold input",
            expected,
            actual: z.len(),
        });
    }
    Ok(fold_tail(z, config.k))
}

fn fold_tail(z: &[Complex64], k: usize) -> Vec<Complex64> {
    let len = z.len() - k;
    let mut out = z[..len].to_vec();
    for (o, t) in out.iter_mut().zip(&z[len..]) {
        *o += t;
    }
    out
}

pub fn transform(z_folded: &[Complex64]) -> Vec<Complex64> {
    dft(z_folded)
}

/// `Γ_t = (1/P_w) Σ_{n=offset}^{offset+W-1} |z̃(n)|²`.
pub fn test_statistic(
    z_tilde: &[Complex64],
    w: usize,
    pw: f64,
    offset: usize,
) -> Result<DetectionStatistic> {
    if w == 0 || offset + w > z_tilde.len() {
        return Err(Error::WindowOutOfRange {
            offset,
            width: w,
            len: z_tilde.len(),
        });
    }
    if !(pw > 0.0) || !pw.is_finite() {
        return Err(crate::error::domain("P_w", pw));
    }
    let energy: f64 = z_tilde[offset..offset + w].iter().map(|v| v.norm_sqr()).sum();
    Ok(DetectionStatistic {
        gamma_t: energy / pw,
        pw,
        parts: None,
    })
}

/// DFT of the zero-padded tag→reader taps, the eigenvalues of the circulant
/// that the folded block applies to the reflected samples.
pub fn channel_eigenvalues(f: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut col = vec![Complex64::default(); len];
    col[..f.len()].copy_from_slice(f);
    dft(&col)
}

/// Reader with a DFT planned for the block length of one configuration.
#[derive(Debug, Clone)]
pub struct Receiver {
    config: SystemConfig,
    plan: DftPlan,
    offset: usize,
}

impl Receiver {
    pub fn new(config: &SystemConfig) -> Result<Self> {
        config.validate()?;
        Ok(Receiver {
            config: config.clone(),
            plan: DftPlan::new(config.r() + 1),
            offset: 0,
        })
    }

    /// First DFT bin of the statistic window.
    pub fn with_offset(mut self, offset: usize) -> Result<Self> {
        if offset + self.config.w > self.config.r() + 1 {
            return Err(Error::WindowOutOfRange {
                offset,
                width: self.config.w,
                len: self.config.r() + 1,
            });
        }
        self.offset = offset;
        Ok(self)
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn process(&mut self, y: &[Complex64]) -> Result<CancelledBlock> {
        let (y1, y2) = extract_windows(y, &self.config)?;
        let z = cancel(y1, y2)?;
        let z_folded = fold_tail(&z, self.config.k);
        let mut z_tilde = z_folded.clone();
        self.plan.process(&mut z_tilde);
        Ok(CancelledBlock {
            z,
            z_folded,
            z_tilde,
        })
    }

    pub fn statistic(&self, block: &CancelledBlock) -> Result<DetectionStatistic> {
        test_statistic(&block.z_tilde, self.config.w, self.config.pw(), self.offset)
    }

    /// DFT of the `R + 1` tag-antenna samples the tag can reflect.
    pub fn reflected_spectrum(&mut self, x: &[Complex64]) -> Vec<Complex64> {
        let q = self.config.q();
        let mut buf = x[q..q + self.config.r() + 1].to_vec();
        self.plan.process(&mut buf);
        buf
    }

    /// Noise-free backscatter component of each statistic bin,
    /// `η f̃_n x̃(n)`, as if the tag reflected.
    pub fn signal_bins(&mut self, x: &[Complex64], channels: &ChannelSet) -> Vec<Complex64> {
        let x_tilde = self.reflected_spectrum(x);
        let mut f_tilde = vec![Complex64::default(); self.config.r() + 1];
        f_tilde[..channels.f().len()].copy_from_slice(channels.f());
        self.plan.process(&mut f_tilde);
        let eta = self.config.eta;
        (self.offset..self.offset + self.config.w)
            .map(|n| eta * f_tilde[n] * x_tilde[n])
            .collect()
    }

    /// Realized detection SNR of the statistic window:
    /// `Σ |η f̃_n x̃(n)|² / (W · P_w)`.
    pub fn window_snr(&mut self, x: &[Complex64], channels: &ChannelSet) -> f64 {
        let energy: f64 = self.signal_bins(x, channels).iter().map(|v| v.norm_sqr()).sum();
        energy / (self.config.w as f64 * self.config.pw())
    }

    /// Splits the statistic of `frame` into `M_t`, `J_t`, `V_t` using the
    /// frame's separated noise and tag-antenna streams.
    pub fn decompose_statistic(
        &mut self,
        frame: &Frame,
        channels: &ChannelSet,
    ) -> Result<Decomposition> {
        let pw = self.config.pw();
        let noise = self.process(&frame.noise)?;
        let noise_bins = &noise.z_tilde[self.offset..self.offset + self.config.w];
        let mt = noise_bins.iter().map(|v| v.norm_sqr()).sum::<f64>() / pw;
        if frame.bit == 0 {
            return Ok(Decomposition {
                mt,
                jt: 0.0,
                vt: 0.0,
            });
        }
        let signal = self.signal_bins(&frame.x, channels);
        let jt = signal.iter().map(|v| v.norm_sqr()).sum::<f64>() / pw;
        let vt = signal
            .iter()
            .zip(noise_bins)
            .map(|(s, w)| 2.0 * (s * w.conj()).re)
            .sum::<f64>()
            / pw;
        Ok(Decomposition { mt, jt, vt })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::phy::{draw_channels, generate_frame, FrameHistory};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn window_positions() {
        let cfg = SystemConfig::default();
        let y: Vec<Complex64> = (0..cfg.frame_len()).map(|i| c(i as f64, 0.0)).collect();
        let (y1, y2) = extract_windows(&y, &cfg).unwrap();
        assert_eq!((y1.len(), y2.len()), (251, 251));
        assert_eq!((y1[0].re, y1[250].re), (5.0, 255.0));
        assert_eq!((y2[0].re, y2[250].re), (2053.0, 2303.0));

        let flat = SystemConfig {
            l: 0,
            m: 0,
            k: 0,
            ..SystemConfig::default()
        };
        let (y1, _) = extract_windows(&y, &flat).unwrap();
        assert_eq!(y1[0].re, 0.0);
        assert!(extract_windows(&y[1..], &cfg).is_err());
    }

    #[test]
    fn cancel_elementwise() {
        let a = vec![c(1.0, 2.0), c(3.0, -1.0)];
        let b = vec![c(0.5, 0.5), c(3.0, -1.0)];
        assert_eq!(cancel(&a, &b).unwrap(), vec![c(0.5, 1.5), c(0.0, 0.0)]);
        assert!(cancel(&a, &b).unwrap().len() == 2);
        assert!(cancel(&a, &a).unwrap().iter().all(|v| v.norm() == 0.0));
        assert!(cancel(&a, &b[..1]).is_err());
    }

    #[test]
    fn fold_indexing() {
        let cfg = SystemConfig {
            n: 16,
            cp: 9,
            l: 2,
            m: 2,
            k: 2,
            w: 1,
            ..SystemConfig::default()
        };
        assert_eq!((cfg.t(), cfg.r()), (6, 4));
        let z: Vec<Complex64> = (0..7).map(|i| c(i as f64, 0.0)).collect();
        let out = fold(&z, &cfg).unwrap();
        let want: Vec<Complex64> = [0.0 + 5.0, 1.0 + 6.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&v| c(v, 0.0))
            .collect();
        assert_eq!(out, want);
        assert!(fold(&z[1..], &cfg).is_err());

        // T=5, R=3, K=2
        let z: Vec<Complex64> = (0..6).map(|i| c(i as f64, 0.0)).collect();
        assert_eq!(
            fold_tail(&z, 2),
            vec![c(4.0, 0.0), c(6.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]
        );
        let flat = SystemConfig {
            l: 0,
            m: 0,
            k: 0,
            ..SystemConfig::default()
        };
        let z: Vec<Complex64> = (0..256).map(|i| c(i as f64, 1.0)).collect();
        assert_eq!(fold(&z, &flat).unwrap(), z);
    }

    #[test]
    fn statistic_basics() {
        let zero = vec![Complex64::default(); 10];
        assert_eq!(test_statistic(&zero, 3, 2.0, 0).unwrap().gamma_t, 0.0);
        let mut v = zero.clone();
        v[4] = c(2.0_f64.sqrt(), 0.0);
        let s = test_statistic(&v, 1, 2.0, 4).unwrap();
        assert!((s.gamma_t - 1.0).abs() < 1e-15);
        assert!(test_statistic(&v, 3, 2.0, 8).is_err());
        assert!(test_statistic(&v, 3, 0.0, 0).is_err());
        assert!(test_statistic(&v, 0, 1.0, 0).is_err());
        assert!(transform(&zero).iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn noise_free_bit_zero_cancels() {
        let cfg = SystemConfig {
            nw: 0.0,
            ..SystemConfig::default()
        };
        let mut rx = Receiver::new(&cfg).unwrap();
        for trial in 0..20 {
            let mut rng = RngStream::new(21, trial);
            let ch = draw_channels(&cfg, &mut rng).unwrap();
            let frame = generate_frame(&cfg, &ch, 0, &mut rng, &FrameHistory::zeros(&cfg)).unwrap();
            let (y1, _) = extract_windows(&frame.y, &cfg).unwrap();
            let peak = y1.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let block = rx.process(&frame.y).unwrap();
            let resid = block.z.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(resid <= 1e-10 * peak);
        }
    }

    #[test]
    fn single_tap_diagonalizes_trivially() {
        let cfg = SystemConfig {
            nw: 0.0,
            l: 0,
            m: 0,
            k: 0,
            eta: c(0.4, 0.3),
            ..SystemConfig::default()
        };
        let mut rng = RngStream::new(22, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let frame = generate_frame(&cfg, &ch, 1, &mut rng, &FrameHistory::zeros(&cfg)).unwrap();
        let mut rx = Receiver::new(&cfg).unwrap();
        let block = rx.process(&frame.y).unwrap();
        let x_tilde = rx.reflected_spectrum(&frame.x);
        let scale = block.z_tilde.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (zt, xt) in block.z_tilde.iter().zip(&x_tilde) {
            let want = cfg.eta * ch.f()[0] * xt;
            assert!((zt - want).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn decomposition_identity() {
        let cfg = SystemConfig {
            eta: c(0.3, -0.4),
            w: 12,
            ..SystemConfig::default()
        };
        let mut rx = Receiver::new(&cfg).unwrap();
        for trial in 0..50 {
            let mut rng = RngStream::new(23, trial);
            let ch = draw_channels(&cfg, &mut rng).unwrap();
            let bit = (trial % 2) as u8;
            let frame = generate_frame(&cfg, &ch, bit, &mut rng, &FrameHistory::zeros(&cfg)).unwrap();
            let block = rx.process(&frame.y).unwrap();
            let stat = rx.statistic(&block).unwrap();
            let parts = rx.decompose_statistic(&frame, &ch).unwrap();
            assert!(parts.mt >= 0.0 && parts.jt >= 0.0);
            let sum = parts.mt + parts.jt + parts.vt;
            assert!((stat.gamma_t - sum).abs() < 1e-9 * stat.gamma_t, "trial {trial}");
            if bit == 0 {
                assert!((stat.gamma_t - parts.mt).abs() < 1e-9 * stat.gamma_t);
            }
        }
    }

    #[test]
    fn mute_tag_has_no_signal_terms() {
        let cfg = SystemConfig {
            eta: Complex64::default(),
            ..SystemConfig::default()
        };
        let mut rx = Receiver::new(&cfg).unwrap();
        let mut rng = RngStream::new(24, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let frame = generate_frame(&cfg, &ch, 1, &mut rng, &FrameHistory::zeros(&cfg)).unwrap();
        let parts = rx.decompose_statistic(&frame, &ch).unwrap();
        assert_eq!((parts.jt, parts.vt), (0.0, 0.0));
    }

    #[test]
    fn offset_validation() {
        let cfg = SystemConfig::default();
        assert!(Receiver::new(&cfg).unwrap().with_offset(243).is_ok());
        assert!(Receiver::new(&cfg).unwrap().with_offset(244).is_err());
    }
}

//! Active imaging: collapsing a micro-expression clip into one frame.
//!
//! A clip of frames F_1..F_tau is summarized by pairwise-accumulated
//! consecutive differences:
//!
//!   FT(t) = F_t - F_{t-1}          (t >= 2; FT(1) is a convention, below)
//!   E(t)  = FT(t-1) + FT(t)
//!   A     = sum of E(t) for t = 2..tau
//!
//! FT(1) is not defined by the difference rule, yet E(2) references it. The
//! default convention sets FT(1) to the zero image, under which the sum
//! telescopes to the closed form A = F_tau + F_{tau-1} - 2*F_1 (for
//! tau = 2, read F_{tau-1} as F_1). The implementation deliberately runs
//! the summation, not the closed form; the closed form and a brute-force
//! re-evaluation serve as independent cross-checks in the tests. An
//! alternative convention FT(1) = F_1 is selectable, which keeps some
//! first-frame appearance in the summary and breaks the telescoping.
//!
//! Differences are signed by default; an absolute-difference variant is
//! available behind a flag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagebuf::Image;

/// Convention for the undefined first difference image FT(1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ft1Mode {
    /// FT(1) = 0. The sum then telescopes to F_tau + F_{tau-1} - 2*F_1.
    #[default]
    Zero,
    /// FT(1) = F_1, retaining first-frame appearance content.
    FirstFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ActiveImagingOptions {
    pub ft1_mode: Ft1Mode,
    pub abs_diff: bool,
}

/// An ordered micro-expression clip with subject and label metadata.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    frames: Vec<Image>,
    pub subject_id: String,
    pub label: usize,
}

impl FrameSequence {
    /// Requires at least two frames, all with identical dimensions.
    pub fn new(frames: Vec<Image>, subject_id: impl Into<String>, label: usize) -> Result<FrameSequence> {
        if frames.len() < 2 {
            return Err(Error::Argument(format!(
                "a frame sequence needs tau >= 2 frames, got {}",
                frames.len()
            )));
        }
        let first = &frames[0];
        for (i, f) in frames.iter().enumerate().skip(1) {
            if !f.same_shape(first) {
                return Err(Error::dimension(format!(
                    "frame {} is {}x{}x{} but frame 0 is {}x{}x{}",
                    i,
                    f.channels(),
                    f.height(),
                    f.width(),
                    first.channels(),
                    first.height(),
                    first.width()
                )));
            }
        }
        Ok(FrameSequence { frames, subject_id: subject_id.into(), label })
    }

    pub fn tau(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn frame(&self, index_1based: usize) -> &Image {
        &self.frames[index_1based - 1]
    }
}

/// Single-frame spatiotemporal summary of a clip.
#[derive(Debug, Clone)]
pub struct ActiveImage {
    pub pixels: Image,
    pub normalized: bool,
    pub source_id: String,
}

fn check_t(seq: &FrameSequence, t: usize) -> Result<()> {
    if t < 2 || t > seq.tau() {
        return Err(Error::Index(format!(
            "frame index t={} out of range 2..={}",
            t,
            seq.tau()
        )));
    }
    Ok(())
}

/// Signed consecutive difference F_t - F_{t-1} (1-based t in 2..=tau).
pub fn frame_diff(seq: &FrameSequence, t: usize) -> Result<Image> {
    check_t(seq, t)?;
    let cur = seq.frame(t);
    let prev = seq.frame(t - 1);
    let data = cur
        .data()
        .iter()
        .zip(prev.data())
        .map(|(a, b)| a - b)
        .collect();
    Image::from_vec(cur.channels(), cur.height(), cur.width(), data)
}

/// The difference image under the configured conventions, with FT(1)
/// resolved per `opts.ft1_mode`. Valid for t in 1..=tau.
fn diff_with_convention(seq: &FrameSequence, t: usize, opts: &ActiveImagingOptions) -> Image {
    let first = seq.frame(1);
    if t == 1 {
        return match opts.ft1_mode {
            Ft1Mode::Zero => Image::zeros(first.channels(), first.height(), first.width()),
            Ft1Mode::FirstFrame => first.clone(),
        };
    }
    let cur = seq.frame(t);
    let prev = seq.frame(t - 1);
    let data = cur
        .data()
        .iter()
        .zip(prev.data())
        .map(|(a, b)| if opts.abs_diff { (a - b).abs() } else { a - b })
        .collect();
    Image::from_vec(cur.channels(), cur.height(), cur.width(), data)
        .expect("frames share validated dimensions")
}

/// Pairwise accumulation E(t) = FT(t-1) + FT(t), for t in 2..=tau.
pub fn pairwise_accum(seq: &FrameSequence, t: usize, opts: &ActiveImagingOptions) -> Result<Image> {
    check_t(seq, t)?;
    let prev = diff_with_convention(seq, t - 1, opts);
    let cur = diff_with_convention(seq, t, opts);
    let data = prev
        .data()
        .iter()
        .zip(cur.data())
        .map(|(a, b)| a + b)
        .collect();
    Image::from_vec(prev.channels(), prev.height(), prev.width(), data)
}

/// Unnormalized active image: the sum of E(t) over t = 2..=tau, evaluated
/// by streaming accumulation in ascending t.
pub fn active_image(seq: &FrameSequence, opts: &ActiveImagingOptions) -> Result<ActiveImage> {
    let first = seq.frame(1);
    let mut acc = Image::zeros(first.channels(), first.height(), first.width());
    for t in 2..=seq.tau() {
        let prev = diff_with_convention(seq, t - 1, opts);
        let cur = diff_with_convention(seq, t, opts);
        let acc_data = acc.data_mut();
        for (i, (p, c)) in prev.data().iter().zip(cur.data()).enumerate() {
            acc_data[i] += p + c;
        }
    }
    Ok(ActiveImage { pixels: acc, normalized: false, source_id: seq.subject_id.clone() })
}

/// Brute-force re-evaluation of the same definition with literal nested
/// loops and no shared helpers; exists purely to cross-check
/// `active_image` (the two must agree bit for bit).
pub fn active_image_reference(seq: &FrameSequence, opts: &ActiveImagingOptions) -> Image {
    let frames = seq.frames();
    let tau = frames.len();
    let (c, h, w) = (frames[0].channels(), frames[0].height(), frames[0].width());
    let len = c * h * w;
    let mut acc = vec![0.0; len];
    for t in 2..=tau {
        for i in 0..len {
            // FT(t-1) at this pixel.
            let ft_prev = if t - 1 == 1 {
                match opts.ft1_mode {
                    Ft1Mode::Zero => 0.0,
                    Ft1Mode::FirstFrame => frames[0].data()[i],
                }
            } else {
                let d = frames[t - 2].data()[i] - frames[t - 3].data()[i];
                if opts.abs_diff {
                    d.abs()
                } else {
                    d
                }
            };
            // FT(t) at this pixel.
            let d = frames[t - 1].data()[i] - frames[t - 2].data()[i];
            let ft_cur = if opts.abs_diff { d.abs() } else { d };
            acc[i] += ft_prev + ft_cur;
        }
    }
    Image::from_vec(c, h, w, acc).expect("frames share validated dimensions")
}

/// Min-max rescale to [0, 255], jointly over channels. A constant image
/// maps to all-128 (its range is degenerate). Idempotent on non-constant
/// images that already span [0, 255].
pub fn normalize_active(img: &ActiveImage) -> Result<ActiveImage> {
    if !img.pixels.all_finite() {
        return Err(Error::Numeric(
            "active image contains non-finite pixels; cannot normalize".into(),
        ));
    }
    let lo = img.pixels.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.pixels.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pixels = if hi > lo {
        let range = hi - lo;
        // Dividing before scaling keeps the endpoints exact: the maximum
        // maps to exactly 255 and nothing can overshoot it.
        img.pixels.map(|v| (v - lo) / range * 255.0)
    } else {
        img.pixels.map(|_| 128.0)
    };
    Ok(ActiveImage { pixels, normalized: true, source_id: img.source_id.clone() })
}

//! Training-set augmentation: rotation and histogram equalization.
//!
//! Every training active image is rotated through seven angles
//! (-45..45 in 15-degree steps) and each rotation is emitted both raw and
//! histogram-equalized, for 14 samples per image. A flag selects the
//! narrower reading in which every rotation is equalized (7 samples).
//! Test and validation images are never augmented.

use crate::error::{Error, Result};
use crate::imagebuf::Image;

/// Rotation schedule, in degrees.
pub const ROTATION_ANGLES: [f64; 7] = [-45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0];

/// Number of augmented samples emitted per image under the product scheme.
pub const AUGMENT_FACTOR: usize = 2 * ROTATION_ANGLES.len();

/// Classic 256-level histogram equalization of a single-channel image with
/// pixels in [0, 255]: each level is remapped to CDF(level) * 255.
pub fn histogram_equalization(img: &Image) -> Result<Image> {
    if img.channels() != 1 {
        return Err(Error::Argument(format!(
            "histogram equalization expects a single-channel image, got {} channels",
            img.channels()
        )));
    }
    if !img.all_finite() {
        return Err(Error::Numeric("histogram equalization received non-finite pixels".into()));
    }
    let mut counts = [0usize; 256];
    for &v in img.data() {
        let bin = v.round().clamp(0.0, 255.0) as usize;
        counts[bin] += 1;
    }
    let total = img.data().len() as f64;
    let mut cdf = [0.0f64; 256];
    let mut acc = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        acc += c;
        cdf[i] = acc as f64 / total;
    }
    Ok(img.map(|v| {
        let bin = v.round().clamp(0.0, 255.0) as usize;
        cdf[bin] * 255.0
    }))
}

/// Equalizes each channel independently; single-channel images go through
/// `histogram_equalization` unchanged.
pub fn equalize_channels(img: &Image) -> Result<Image> {
    if img.channels() == 1 {
        return histogram_equalization(img);
    }
    let (h, w) = (img.height(), img.width());
    let mut data = Vec::with_capacity(img.data().len());
    for c in 0..img.channels() {
        let chan = Image::from_vec(1, h, w, img.channel(c).to_vec())?;
        data.extend_from_slice(histogram_equalization(&chan)?.data());
    }
    Image::from_vec(img.channels(), h, w, data)
}

/// Rotates about the image center with bilinear interpolation; pixels
/// sampled outside the frame read zero and the output size equals the
/// input size. Angle zero is an exact identity. Angles are limited to
/// [-45, 45] degrees.
pub fn rotate(img: &Image, angle_degrees: f64) -> Result<Image> {
    if !(-45.0..=45.0).contains(&angle_degrees) {
        return Err(Error::Argument(format!(
            "rotation angle must lie in [-45, 45] degrees, got {angle_degrees}"
        )));
    }
    let (c, h, w) = (img.channels(), img.height(), img.width());
    let rad = angle_degrees.to_radians();
    let (sin, cos) = rad.sin_cos();
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    let mut out = Image::zeros(c, h, w);
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                // Inverse mapping: sample the source at the back-rotated
                // position of this output pixel.
                let dy = y as f64 - cy;
                let dx = x as f64 - cx;
                let sx = cx + cos * dx + sin * dy;
                let sy = cy - sin * dx + cos * dy;
                let x0 = sx.floor();
                let y0 = sy.floor();
                let fx = sx - x0;
                let fy = sy - y0;
                let sample = |yy: f64, xx: f64| -> f64 {
                    if yy < 0.0 || xx < 0.0 || yy >= h as f64 || xx >= w as f64 {
                        0.0
                    } else {
                        img.at(ch, yy as usize, xx as usize)
                    }
                };
                let v00 = sample(y0, x0);
                let v01 = sample(y0, x0 + 1.0);
                let v10 = sample(y0 + 1.0, x0);
                let v11 = sample(y0 + 1.0, x0 + 1.0);
                let v = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01)
                    + fy * ((1.0 - fx) * v10 + fx * v11);
                out.set(ch, y, x, v);
            }
        }
    }
    Ok(out)
}

/// Augmentation variant tag carried by each sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentTag {
    pub angle_deg: f64,
    pub hist_eq: bool,
}

/// All augmented variants of one active image, in a fixed order: for each
/// angle ascending, the raw rotation then its equalized copy (product
/// scheme), or only the equalized copy (single scheme).
pub fn augment_image(active: &Image, product: bool) -> Result<Vec<(AugmentTag, Image)>> {
    let mut out = Vec::with_capacity(if product { 14 } else { 7 });
    for &angle in &ROTATION_ANGLES {
        let rotated = rotate(active, angle)?;
        if product {
            out.push((AugmentTag { angle_deg: angle, hist_eq: false }, rotated.clone()));
        }
        let equalized = equalize_channels(&rotated)?;
        out.push((AugmentTag { angle_deg: angle, hist_eq: true }, equalized));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equalization_of_uniform_histogram_is_near_identity() {
        // 256 pixels covering every gray level once.
        let data: Vec<f64> = (0..256).map(|v| v as f64).collect();
        let img = Image::from_vec(1, 16, 16, data).unwrap();
        let eq = histogram_equalization(&img).unwrap();
        for (a, b) in eq.data().iter().zip(img.data()) {
            assert!((a - b).abs() <= 1.0, "{a} vs {b}");
        }
    }

    #[test]
    fn equalization_of_constant_image_is_constant() {
        let img = Image::from_vec(1, 2, 2, vec![90.0; 4]).unwrap();
        let eq = histogram_equalization(&img).unwrap();
        let first = eq.data()[0];
        assert!(eq.data().iter().all(|&v| v == first));
    }

    #[test]
    fn two_level_image_maps_to_cdf_values() {
        // 75% at level 50, 25% at level 200.
        let mut data = vec![50.0; 12];
        data.extend(vec![200.0; 4]);
        let img = Image::from_vec(1, 4, 4, data).unwrap();
        let eq = histogram_equalization(&img).unwrap();
        assert!((eq.data()[0] - 0.75 * 255.0).abs() < 1e-12);
        assert!((eq.data()[15] - 255.0).abs() < 1e-12);
    }

    #[test]
    fn equalization_rejects_multichannel() {
        let img = Image::zeros(3, 2, 2);
        assert!(histogram_equalization(&img).is_err());
        assert!(equalize_channels(&img).is_ok());
    }

    #[test]
    fn rotation_by_zero_is_bit_exact_identity() {
        let data: Vec<f64> = (0..35).map(|v| (v * 7 % 256) as f64).collect();
        let img = Image::from_vec(1, 5, 7, data).unwrap();
        let rot = rotate(&img, 0.0).unwrap();
        assert_eq!(rot.data(), img.data());
    }

    #[test]
    fn rotation_round_trip_is_close_on_smooth_images() {
        // Smooth radial gradient; rotating +15 then -15 should recover it
        // away from the zero-filled border.
        let n = 33;
        let c = (n as f64 - 1.0) / 2.0;
        let data: Vec<f64> = (0..n * n)
            .map(|i| {
                let (y, x) = ((i / n) as f64, (i % n) as f64);
                let r = ((y - c).powi(2) + (x - c).powi(2)).sqrt();
                (255.0 * (1.0 - r / (n as f64))).max(0.0)
            })
            .collect();
        let img = Image::from_vec(1, n, n, data).unwrap();
        let back = rotate(&rotate(&img, 15.0).unwrap(), -15.0).unwrap();
        let mut err_sum = 0.0;
        let mut count = 0;
        for y in 8..n - 8 {
            for x in 8..n - 8 {
                err_sum += (back.at(0, y, x) - img.at(0, y, x)).abs();
                count += 1;
            }
        }
        let mean_err = err_sum / count as f64;
        assert!(mean_err < 2.0, "mean abs error {mean_err}");
    }

    #[test]
    fn center_pixel_is_a_fixed_point() {
        let n = 21;
        let data: Vec<f64> = (0..n * n).map(|i| (i % 251) as f64).collect();
        let img = Image::from_vec(1, n, n, data).unwrap();
        for &angle in &ROTATION_ANGLES {
            let rot = rotate(&img, angle).unwrap();
            assert!(
                (rot.at(0, n / 2, n / 2) - img.at(0, n / 2, n / 2)).abs() < 1e-9,
                "angle {angle}"
            );
        }
    }

    #[test]
    fn out_of_range_angle_is_rejected() {
        let img = Image::zeros(1, 4, 4);
        assert!(rotate(&img, 45.0001).is_err());
        assert!(rotate(&img, -90.0).is_err());
    }

    #[test]
    fn augment_counts_and_zero_angle_identity() {
        let data: Vec<f64> = (0..64).map(|v| (v * 3 % 256) as f64).collect();
        let img = Image::from_vec(1, 8, 8, data).unwrap();
        let product = augment_image(&img, true).unwrap();
        assert_eq!(product.len(), 14);
        let single = augment_image(&img, false).unwrap();
        assert_eq!(single.len(), 7);
        let zero_raw = product
            .iter()
            .find(|(t, _)| t.angle_deg == 0.0 && !t.hist_eq)
            .unwrap();
        assert_eq!(zero_raw.1.data(), img.data());
        assert!(single.iter().all(|(t, _)| t.hist_eq));
    }
}

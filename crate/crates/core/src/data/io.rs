//! Frame-sequence and image file I/O.
//!
//! Two input layouts are supported:
//!   - a directory of 8-bit PNG/PGM frames, ordered by file name, or
//!   - a single raw binary file: magic "FSEQ", then height, width,
//!     channels, and frame count as little-endian u32, then f64 pixels,
//!     frame-major with planar channels.
//!
//! Single images are written as 8-bit PNG/PGM (by extension) or dumped in
//! full f64 precision as "AIMG" files with the same header layout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imagebuf::Image;

pub const RAW_SEQUENCE_MAGIC: [u8; 4] = *b"FSEQ";
pub const RAW_IMAGE_MAGIC: [u8; 4] = *b"AIMG";

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format(format!("{what} is truncated"))
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

/// Decodes one 8-bit image file into f64 pixels in [0, 255]. Grayscale
/// stays single-channel; color becomes three planar channels; alpha is
/// dropped.
pub fn load_image_file(path: &Path) -> Result<Image> {
    let dynimg = image::open(path)?;
    match dynimg {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let data = g.pixels().map(|p| p.0[0] as f64).collect();
            Image::from_vec(1, h, w, data)
        }
        image::DynamicImage::ImageLumaA8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let data = g.pixels().map(|p| p.0[0] as f64).collect();
            Image::from_vec(1, h, w, data)
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let hw = h * w;
            let mut data = vec![0.0; 3 * hw];
            for (i, p) in rgb.pixels().enumerate() {
                data[i] = p.0[0] as f64;
                data[hw + i] = p.0[1] as f64;
                data[2 * hw + i] = p.0[2] as f64;
            }
            Image::from_vec(3, h, w, data)
        }
    }
}

/// Writes an image whose pixels already live in [0, 255] as an 8-bit file.
/// `.png` handles 1 or 3 channels; `.pgm` is grayscale only.
pub fn write_image_u8(path: &Path, img: &Image) -> Result<()> {
    let to_u8 = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match (ext.as_str(), img.channels()) {
        ("png", 1) | ("pgm", 1) => {
            let buf: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
            image::save_buffer(
                path,
                &buf,
                img.width() as u32,
                img.height() as u32,
                image::ColorType::L8,
            )?;
            Ok(())
        }
        ("png", 3) => {
            let hw = img.height() * img.width();
            let mut buf = vec![0u8; 3 * hw];
            for i in 0..hw {
                buf[3 * i] = to_u8(img.data()[i]);
                buf[3 * i + 1] = to_u8(img.data()[hw + i]);
                buf[3 * i + 2] = to_u8(img.data()[2 * hw + i]);
            }
            image::save_buffer(
                path,
                &buf,
                img.width() as u32,
                img.height() as u32,
                image::ColorType::Rgb8,
            )?;
            Ok(())
        }
        ("pgm", c) => Err(Error::Argument(format!(
            "pgm output is grayscale only, image has {c} channels"
        ))),
        (other, _) => Err(Error::Argument(format!(
            "unsupported output extension `.{other}` (use .png or .pgm)"
        ))),
    }
}

/// Full-precision f64 dump of one image.
pub fn write_raw_image(path: &Path, img: &Image) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&RAW_IMAGE_MAGIC)?;
    for d in [img.height(), img.width(), img.channels()] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for &v in img.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_image(path: &Path) -> Result<Image> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "raw image")?;
    if magic != RAW_IMAGE_MAGIC {
        return Err(Error::Format(format!("bad raw-image magic {magic:?}")));
    }
    let h = read_u32(&mut r, "raw image")? as usize;
    let w = read_u32(&mut r, "raw image")? as usize;
    let c = read_u32(&mut r, "raw image")? as usize;
    if h == 0 || w == 0 || c == 0 || h * w * c > (1 << 28) {
        return Err(Error::Format(format!("implausible raw-image header {c}x{h}x{w}")));
    }
    let mut data = vec![0.0f64; c * h * w];
    let mut b = [0u8; 8];
    for v in &mut data {
        read_exact(&mut r, &mut b, "raw image")?;
        *v = f64::from_le_bytes(b);
    }
    Image::from_vec(c, h, w, data)
}

/// Writes a frame sequence as a single raw binary file.
pub fn write_raw_sequence(path: &Path, frames: &[Image]) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::Argument("cannot write an empty frame sequence".into()));
    }
    let first = &frames[0];
    for f in frames {
        if !f.same_shape(first) {
            return Err(Error::dimension("raw sequence frames must share one shape"));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&RAW_SEQUENCE_MAGIC)?;
    for d in [first.height(), first.width(), first.channels(), frames.len()] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for f in frames {
        for &v in f.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_sequence(path: &Path) -> Result<Vec<Image>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "raw sequence")?;
    if magic != RAW_SEQUENCE_MAGIC {
        return Err(Error::Format(format!("bad raw-sequence magic {magic:?}")));
    }
    let h = read_u32(&mut r, "raw sequence")? as usize;
    let w = read_u32(&mut r, "raw sequence")? as usize;
    let c = read_u32(&mut r, "raw sequence")? as usize;
    let tau = read_u32(&mut r, "raw sequence")? as usize;
    if h == 0 || w == 0 || c == 0 || tau == 0 || c * h * w * tau > (1 << 30) {
        return Err(Error::Format(format!(
            "implausible raw-sequence header {c}x{h}x{w} x {tau} frames"
        )));
    }
    let mut frames = Vec::with_capacity(tau);
    let mut b = [0u8; 8];
    for _ in 0..tau {
        let mut data = vec![0.0f64; c * h * w];
        for v in &mut data {
            read_exact(&mut r, &mut b, "raw sequence")?;
            *v = f64::from_le_bytes(b);
        }
        frames.push(Image::from_vec(c, h, w, data)?);
    }
    Ok(frames)
}

/// Loads the frames of one video: either a raw "FSEQ" file or a directory
/// of PNG/PGM frames ordered lexicographically by file name.
pub fn load_frames(path: &Path) -> Result<Vec<Image>> {
    if path.is_file() {
        return read_raw_sequence(path);
    }
    if !path.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("video source {} does not exist", path.display()),
        )));
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Argument(format!(
            "directory {} contains no .png/.pgm frames",
            path.display()
        )));
    }
    files.iter().map(|p| load_image_file(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_sequence_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.bin");
        let frames: Vec<Image> = (0..3)
            .map(|t| {
                Image::from_vec(1, 2, 2, vec![t as f64, 0.5 + t as f64, -1.25, 3.75]).unwrap()
            })
            .collect();
        write_raw_sequence(&path, &frames).unwrap();
        let back = read_raw_sequence(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in frames.iter().zip(&back) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn png_round_trip_preserves_u8_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = Image::from_vec(1, 2, 3, vec![0.0, 17.0, 255.0, 128.0, 64.0, 200.0]).unwrap();
        write_image_u8(&path, &img).unwrap();
        let back = load_image_file(&path).unwrap();
        assert_eq!(back.channels(), 1);
        assert_eq!(back.data(), img.data());
    }

    #[test]
    fn pgm_round_trip_preserves_u8_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = Image::from_vec(1, 2, 2, vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        write_image_u8(&path, &img).unwrap();
        let back = load_image_file(&path).unwrap();
        assert_eq!(back.data(), img.data());
    }

    #[test]
    fn directory_frames_load_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        for (i, v) in [(0, 10.0), (1, 20.0), (2, 30.0)] {
            let img = Image::from_vec(1, 1, 1, vec![v]).unwrap();
            write_image_u8(&dir.path().join(format!("frame_{i:03}.pgm")), &img).unwrap();
        }
        let frames = load_frames(dir.path()).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0].data(), &[10.0]);
        assert_eq!(frames[2].data(), &[30.0]);
    }

    #[test]
    fn raw_image_dump_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.aimg");
        let img = Image::from_vec(1, 1, 3, vec![0.123456789, -4.2, 1e-12]).unwrap();
        write_raw_image(&path, &img).unwrap();
        let back = read_raw_image(&path).unwrap();
        assert_eq!(back.data(), img.data());
    }

    #[test]
    fn truncated_sequence_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.bin");
        let frames = vec![Image::zeros(1, 2, 2), Image::zeros(1, 2, 2)];
        write_raw_sequence(&path, &frames).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(read_raw_sequence(&path).unwrap_err(), Error::Format(_)));
    }
}

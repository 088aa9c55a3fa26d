//! Value-semantic image grids and binary masks.
//!
//! [`ImageTensor`] is the universal carrier for images, noise fields, and
//! gradients: a row-major, channel-last `H x W x C` grid of `f64` values.
//! Each tensor carries a [`Domain`] tag. `Unit` data lives in `[0, 1]`
//! (classifier and trigger space), `Signed` data in `[-1, 1]` (diffusion
//! space). The range is enforced at conversion boundaries, not per
//! arithmetic op, so intermediate diffusion states may legitimately leave
//! `[-1, 1]`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const TENSOR_MAGIC: &[u8; 4] = b"SNCD";
pub const TENSOR_VERSION: u8 = 1;

/// Value range a tensor is tagged with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Values in `[0, 1]`.
    Unit,
    /// Values in `[-1, 1]`.
    Signed,
}

impl Domain {
    fn tag(self) -> u8 {
        match self {
            Domain::Unit => 0,
            Domain::Signed => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Domain::Unit),
            1 => Some(Domain::Signed),
            _ => None,
        }
    }
}

/// `H x W x C` grid of real values, row-major, channel-last.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    domain: Domain,
    data: Vec<f64>,
}

impl ImageTensor {
    /// Zero-filled tensor.
    pub fn zeros(height: usize, width: usize, channels: usize, domain: Domain) -> Result<Self> {
        Self::from_vec(height, width, channels, domain, vec![0.0; height * width * channels])
    }

    /// Constant-filled tensor.
    pub fn filled(
        height: usize,
        width: usize,
        channels: usize,
        domain: Domain,
        value: f64,
    ) -> Result<Self> {
        Self::from_vec(height, width, channels, domain, vec![value; height * width * channels])
    }

    /// Wrap an existing buffer. The length must be `H * W * C`.
    pub fn from_vec(
        height: usize,
        width: usize,
        channels: usize,
        domain: Domain,
        data: Vec<f64>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::param("dims", "height and width must be positive"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::param("channels", format!("must be 1 or 3, got {channels}")));
        }
        if data.len() != height * width * channels {
            return Err(Error::DimensionMismatch(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            domain,
            data,
        })
    }

    /// Tensor of i.i.d. standard normal entries.
    pub fn sample_gaussian(
        rng: &mut SeededRng,
        height: usize,
        width: usize,
        channels: usize,
        domain: Domain,
    ) -> Result<Self> {
        let mut data = vec![0.0; height * width * channels];
        for v in &mut data {
            *v = rng.normal();
        }
        Self::from_vec(height, width, channels, domain, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat index of `(y, x, c)`.
    #[inline]
    pub fn idx(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.idx(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        let i = self.idx(y, x, c);
        self.data[i] = v;
    }

    pub fn same_dims(&self, other: &ImageTensor) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn check_same_dims(&self, other: &ImageTensor, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    /// Elementwise map, keeping dims and domain tag.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = f(*v);
        }
        out
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Convert between the unit and signed domains. Unit to signed maps
    /// `v -> 2v - 1`; signed to unit maps `v -> clamp((v + 1) / 2, 0, 1)`.
    /// A round trip through signed is exact for in-range unit values.
    pub fn convert_domain(&self, target: Domain) -> Self {
        if self.domain == target {
            return self.clone();
        }
        let mut out = self.clone();
        out.domain = target;
        match target {
            Domain::Signed => {
                for v in &mut out.data {
                    *v = 2.0 * *v - 1.0;
                }
            }
            Domain::Unit => {
                for v in &mut out.data {
                    *v = ((*v + 1.0) / 2.0).clamp(0.0, 1.0);
                }
            }
        }
        out
    }

    /// Round every value through f32 precision. Generated data is snapped
    /// this way so the 32-bit on-disk representation is lossless.
    pub fn quantize_f32(&mut self) {
        for v in &mut self.data {
            *v = *v as f32 as f64;
        }
    }

    /// Serialize into a writer (magic, version, dims, domain, f32 payload).
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(TENSOR_MAGIC)?;
        w.write_all(&[TENSOR_VERSION])?;
        w.write_all(&(self.height as u32).to_le_bytes())?;
        w.write_all(&(self.width as u32).to_le_bytes())?;
        w.write_all(&(self.channels as u32).to_le_bytes())?;
        w.write_all(&[self.domain.tag()])?;
        for &v in &self.data {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    /// Deserialize from a reader. `origin` names the source in errors.
    pub fn read_from(r: &mut impl Read, origin: &Path) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, origin, "magic")?;
        if &magic != TENSOR_MAGIC {
            return Err(Error::BadMagic {
                path: origin.to_path_buf(),
                expected: "SNCD",
            });
        }
        let mut header = [0u8; 1];
        read_exact(r, &mut header, origin, "version")?;
        if header[0] != TENSOR_VERSION {
            return Err(Error::BadVersion {
                path: origin.to_path_buf(),
                found: header[0],
            });
        }
        let height = read_u32(r, origin, "height")? as usize;
        let width = read_u32(r, origin, "width")? as usize;
        let channels = read_u32(r, origin, "channels")? as usize;
        let mut tag = [0u8; 1];
        read_exact(r, &mut tag, origin, "domain tag")?;
        let domain = Domain::from_tag(tag[0]).ok_or_else(|| Error::Malformed {
            path: origin.to_path_buf(),
            detail: format!("unknown domain tag {}", tag[0]),
        })?;
        if height == 0 || width == 0 || (channels != 1 && channels != 3) {
            return Err(Error::Malformed {
                path: origin.to_path_buf(),
                detail: format!("bad dims {height}x{width}x{channels}"),
            });
        }
        let n = height * width * channels;
        let mut data = vec![0.0f64; n];
        let mut buf = [0u8; 4];
        for v in &mut data {
            read_exact(r, &mut buf, origin, "pixel data")?;
            *v = f32::from_le_bytes(buf) as f64;
        }
        ImageTensor::from_vec(height, width, channels, domain, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        Self::read_from(&mut r, path)
    }

    /// Export as binary PPM (P6) for 3-channel or PGM (P5) for 1-channel
    /// tensors. Unit-domain values map linearly onto 0..=255.
    pub fn write_pnm(&self, path: &Path) -> Result<()> {
        let unit = self.convert_domain(Domain::Unit);
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let header = if self.channels == 3 {
            format!("P6\n{} {}\n255\n", self.width, self.height)
        } else {
            format!("P5\n{} {}\n255\n", self.width, self.height)
        };
        w.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
        let bytes: Vec<u8> = unit
            .data
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Per-pixel binary mask, broadcast across channels. Value 1 marks a pixel
/// as kept (visible), 0 as replaced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![1; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "mask length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::param("mask", "values must be 0 or 1"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: u8) {
        debug_assert!(v <= 1);
        self.data[y * self.width + x] = v;
    }

    /// Flip every bit.
    pub fn complement(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    /// Fraction of kept (=1) pixels.
    pub fn density(&self) -> f64 {
        self.data.iter().map(|&v| v as u64).sum::<u64>() as f64 / self.data.len() as f64
    }

    pub fn count_zeros(&self) -> usize {
        self.data.iter().filter(|&&v| v == 0).count()
    }

    pub fn matches_image(&self, img: &ImageTensor) -> bool {
        self.height == img.height() && self.width == img.width()
    }

    /// Export as binary PGM with 0 / 255 values.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let header = format!("P5\n{} {}\n255\n", self.width, self.height);
        w.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
        let bytes: Vec<u8> = self.data.iter().map(|&v| v * 255).collect();
        w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn read_exact(
    r: &mut impl Read,
    buf: &mut [u8],
    origin: &Path,
    what: &str,
) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Truncated {
                path: origin.to_path_buf(),
                detail: format!("while reading {what}"),
            }
        } else {
            Error::io(origin, e)
        }
    })
}

pub(crate) fn read_u32(r: &mut impl Read, origin: &Path, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, origin, what)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn convert_domain_endpoints() {
        let unit = ImageTensor::from_vec(1, 3, 1, Domain::Unit, vec![0.0, 0.5, 1.0]).unwrap();
        let signed = unit.convert_domain(Domain::Signed);
        assert_eq!(signed.data(), &[-1.0, 0.0, 1.0]);
        let back = signed.convert_domain(Domain::Unit);
        assert_eq!(back.data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn signed_to_unit_clamps() {
        let signed = ImageTensor::from_vec(1, 2, 1, Domain::Signed, vec![-1.7, 2.3]).unwrap();
        let unit = signed.convert_domain(Domain::Unit);
        assert_eq!(unit.data(), &[0.0, 1.0]);
    }

    #[test]
    fn gaussian_is_deterministic_per_seed() {
        let a = ImageTensor::sample_gaussian(&mut SeededRng::new(42), 2, 2, 1, Domain::Signed)
            .unwrap();
        let b = ImageTensor::sample_gaussian(&mut SeededRng::new(42), 2, 2, 1, Domain::Signed)
            .unwrap();
        assert_eq!(a, b);
        let c = ImageTensor::sample_gaussian(&mut SeededRng::new(43), 2, 2, 1, Domain::Signed)
            .unwrap();
        assert!(a.data().iter().zip(c.data()).any(|(x, y)| x != y));
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = SeededRng::new(7);
        let t = ImageTensor::sample_gaussian(&mut rng, 1000, 1000, 1, Domain::Signed).unwrap();
        let mean = t.mean();
        let var = t.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (t.len() - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn tensor_file_round_trip() {
        let dir = std::env::temp_dir().join("sancdifi_tensor_rt");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.snc");
        let mut t =
            ImageTensor::sample_gaussian(&mut SeededRng::new(5), 4, 3, 3, Domain::Signed).unwrap();
        t.quantize_f32();
        t.save(&path).unwrap();
        let back = ImageTensor::load(&path).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn tensor_bad_magic_is_format_error() {
        let dir = std::env::temp_dir().join("sancdifi_tensor_magic");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.snc");
        std::fs::write(&path, b"XXXX rest").unwrap();
        match ImageTensor::load(&path) {
            Err(Error::BadMagic { .. }) => {}
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn tensor_truncated_is_distinct_error() {
        let dir = std::env::temp_dir().join("sancdifi_tensor_trunc");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("short.snc");
        let t = ImageTensor::zeros(4, 4, 1, Domain::Unit).unwrap();
        t.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        match ImageTensor::load(&path) {
            Err(Error::Truncated { .. }) => {}
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn mask_complement_and_density() {
        let m = BinaryMask::from_vec(2, 2, vec![1, 0, 1, 1]).unwrap();
        assert_eq!(m.density(), 0.75);
        let c = m.complement();
        assert_eq!(c.data(), &[0, 1, 0, 0]);
        assert_eq!(m.count_zeros() + c.count_zeros(), 4);
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(BinaryMask::from_vec(1, 2, vec![0, 2]).is_err());
    }

    proptest! {
        #[test]
        fn unit_signed_round_trip_is_exact(values in proptest::collection::vec(0.0f32..=1.0f32, 12)) {
            let data: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            let unit = ImageTensor::from_vec(3, 4, 1, Domain::Unit, data.clone()).unwrap();
            let back = unit.convert_domain(Domain::Signed).convert_domain(Domain::Unit);
            prop_assert_eq!(back.data(), &data[..]);
        }
    }
}

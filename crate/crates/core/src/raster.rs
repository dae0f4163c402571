//! RGB images with binary PPM and PNG output.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples, top row first.
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            rgb: vec![0; 3 * width * height],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.rgb[i..i + 3].copy_from_slice(&c);
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn write_png(&self, w: impl Write) -> Result<()> {
        let mut enc = png::Encoder::new(w, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::invalid(format!("png: {e}")))?;
        writer
            .write_image_data(&self.rgb)
            .map_err(|e| Error::invalid(format!("png: {e}")))?;
        Ok(())
    }

    /// Writes PNG for a `.png` extension and binary PPM otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            let file = std::io::BufWriter::new(std::fs::File::create(path)?);
            self.write_png(file)
        } else {
            std::fs::write(path, self.to_ppm())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_payload() {
        let mut img = Image::new(2, 1);
        img.set(1, 0, [1, 2, 3]);
        assert_eq!(img.to_ppm(), b"P6\n2 1\n255\n\x00\x00\x00\x01\x02\x03".to_vec());
    }

    #[test]
    fn png_decodes() {
        let mut img = Image::new(3, 2);
        img.set(2, 1, [200, 100, 50]);
        let mut buf = Vec::new();
        img.write_png(&mut buf).unwrap();
        let decoder = png::Decoder::new(std::io::Cursor::new(buf));
        let mut reader = decoder.read_info().unwrap();
        let mut data = vec![0; reader.output_buffer_size().unwrap()];
        reader.next_frame(&mut data).unwrap();
        assert_eq!(&data[..18], &img.rgb[..]);
    }
}

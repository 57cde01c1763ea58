//! Binary PPM (P6) and PGM (P5) reading and writing.
//!
//! These are the native interchange formats: headers are trivial to
//! tokenize and the payload is the raw byte grid, so a stage dump can be
//! diffed byte-for-byte against a golden file. Only 8-bit depth
//! (maxval 255) is supported. Header comments are tolerated and parse
//! failures carry the 1-based line number they were found on.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::frame::{ByteFrame, RgbFrame};
use crate::stream::FrameGeometry;
use crate::{Error, Result};

/// Tokenizer over a PNM header: skips whitespace and '#' comments,
/// tracks the line number for error reporting.
struct HeaderScanner<R> {
    reader: R,
    line: usize,
    /// Line the most recent token started on; errors blame this line,
    /// not wherever the delimiter pushed the cursor.
    token_line: usize,
}

impl<R: BufRead> HeaderScanner<R> {
    fn new(reader: R) -> Self {
        Self {
            reader,
            line: 1,
            token_line: 1,
        }
    }

    fn next_byte(&mut self) -> Result<Option<u8>> {
        let mut b = [0u8; 1];
        match self.reader.read(&mut b)? {
            0 => Ok(None),
            _ => {
                if b[0] == b'\n' {
                    self.line += 1;
                }
                Ok(Some(b[0]))
            }
        }
    }

    /// Next whitespace-delimited token, skipping comments.
    fn token(&mut self) -> Result<String> {
        let mut tok = Vec::new();
        loop {
            match self.next_byte()? {
                None => {
                    if tok.is_empty() {
                        return Err(Error::parse(self.line, "unexpected end of header"));
                    }
                    break;
                }
                Some(b'#') if tok.is_empty() => {
                    // Comment runs to end of line.
                    while let Some(b) = self.next_byte()? {
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(b) if b.is_ascii_whitespace() => {
                    if !tok.is_empty() {
                        break;
                    }
                }
                Some(b) => {
                    if tok.is_empty() {
                        self.token_line = self.line;
                    }
                    tok.push(b);
                }
            }
        }
        Ok(String::from_utf8_lossy(&tok).into_owned())
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::parse(self.token_line, format!("bad {what} '{tok}'")))
    }
}

/// Parse the common "magic width height maxval" header; returns geometry.
fn read_header<R: BufRead>(scanner: &mut HeaderScanner<R>, magic: &str) -> Result<FrameGeometry> {
    let found = scanner.token()?;
    if found != magic {
        return Err(Error::parse(
            scanner.token_line,
            format!("expected {magic} magic, found '{found}'"),
        ));
    }
    let width = scanner.number("width")?;
    let height = scanner.number("height")?;
    let maxval = scanner.number("maxval")?;
    if maxval != 255 {
        return Err(Error::parse(
            scanner.token_line,
            format!("unsupported maxval {maxval}; only 8-bit (255) images"),
        ));
    }
    // The single whitespace byte after maxval was consumed by the
    // tokenizer; pixel data starts now.
    FrameGeometry::new(width, height)
}

fn read_payload<R: BufRead>(scanner: &mut HeaderScanner<R>, len: usize) -> Result<Vec<u8>> {
    let mut data = vec![0u8; len];
    scanner.reader.read_exact(&mut data).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::parse(scanner.line, format!("pixel data truncated (expected {len} bytes)"))
        } else {
            Error::Io(e)
        }
    })?;
    Ok(data)
}

/// Read a binary RGB image (P6).
pub fn read_ppm(reader: impl Read) -> Result<RgbFrame> {
    let mut scanner = HeaderScanner::new(BufReader::new(reader));
    let geometry = read_header(&mut scanner, "P6")?;
    let data = read_payload(&mut scanner, geometry.pixel_count() * 3)?;
    RgbFrame::from_data(geometry, data)
}

/// Read a binary grayscale image (P5).
pub fn read_pgm(reader: impl Read) -> Result<ByteFrame> {
    let mut scanner = HeaderScanner::new(BufReader::new(reader));
    let geometry = read_header(&mut scanner, "P5")?;
    let data = read_payload(&mut scanner, geometry.pixel_count())?;
    ByteFrame::from_data(geometry, data)
}

/// Write a binary RGB image (P6).
pub fn write_ppm(mut writer: impl Write, frame: &RgbFrame) -> Result<()> {
    let g = frame.geometry;
    write!(writer, "P6\n{} {}\n255\n", g.width, g.height)?;
    writer.write_all(&frame.data)?;
    Ok(())
}

/// Write a binary grayscale image (P5).
pub fn write_pgm(mut writer: impl Write, frame: &ByteFrame) -> Result<()> {
    let g = frame.geometry;
    write!(writer, "P5\n{} {}\n255\n", g.width, g.height)?;
    writer.write_all(&frame.data)?;
    Ok(())
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<RgbFrame> {
    read_ppm(std::fs::File::open(path)?)
}

pub fn save_ppm(path: impl AsRef<Path>, frame: &RgbFrame) -> Result<()> {
    write_ppm(std::fs::File::create(path)?, frame)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<ByteFrame> {
    read_pgm(std::fs::File::open(path)?)
}

pub fn save_pgm(path: impl AsRef<Path>, frame: &ByteFrame) -> Result<()> {
    write_pgm(std::fs::File::create(path)?, frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_roundtrip_is_byte_exact() {
        let g = FrameGeometry::new(5, 4).unwrap();
        let mut frame = RgbFrame::new(g);
        for row in 0..4 {
            for col in 0..5 {
                frame.set_pixel(row, col, [row as u8 * 50, col as u8 * 40, 7]);
            }
        }
        let mut buf = Vec::new();
        write_ppm(&mut buf, &frame).unwrap();
        let back = read_ppm(buf.as_slice()).unwrap();
        assert_eq!(back.geometry, g);
        assert_eq!(back.data, frame.data);
    }

    #[test]
    fn pgm_roundtrip_is_byte_exact() {
        let g = FrameGeometry::new(3, 3).unwrap();
        let frame = ByteFrame::from_data(g, (0..9).map(|i| i * 20).collect()).unwrap();
        let mut buf = Vec::new();
        write_pgm(&mut buf, &frame).unwrap();
        let back = read_pgm(buf.as_slice()).unwrap();
        assert_eq!(back.data, frame.data);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut payload = b"P5\n# made by hand\n3 3\n# another note\n255\n".to_vec();
        payload.extend_from_slice(&[9u8; 9]);
        let frame = read_pgm(payload.as_slice()).unwrap();
        assert_eq!(frame.data, vec![9; 9]);
    }

    #[test]
    fn bad_magic_is_a_parse_error_on_line_1() {
        let err = read_ppm(&b"P5\n3 3\n255\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn wide_maxval_is_rejected() {
        let err = read_pgm(&b"P5\n3 3\n65535\n"[..]).unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("maxval")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_reported() {
        let mut payload = b"P5\n4 4\n255\n".to_vec();
        payload.extend_from_slice(&[1u8; 10]); // needs 16
        let err = read_pgm(payload.as_slice()).unwrap_err();
        match err {
            Error::Parse { message, .. } => assert!(message.contains("truncated")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn tiny_geometry_is_rejected() {
        let err = read_pgm(&b"P5\n2 2\n255\n\x00\x00\x00\x00"[..]).unwrap_err();
        assert!(matches!(err, Error::Geometry { .. }));
    }
}

//! Reader and writer for the big-endian IDX format used by the MNIST files.
//!
//! Images: magic `0x00000803`, then item count, rows and columns as `u32`,
//! then row-major pixel bytes. Labels: magic `0x00000801`, item count, then
//! one byte per label.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// One `rows * cols` byte grid per image, row-major.
    pub pixels: Vec<Vec<u8>>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

fn parse_err(offset: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        msg: msg.into(),
    }
}

fn read_u32(cur: &mut Cursor<&[u8]>, what: &str) -> Result<u32> {
    let at = cur.position();
    cur.read_u32::<BigEndian>()
        .map_err(|_| parse_err(at, format!("truncated header: missing {what}")))
}

fn check_magic(cur: &mut Cursor<&[u8]>, expected: u32) -> Result<()> {
    let magic = read_u32(cur, "magic number")?;
    if magic != expected {
        return Err(parse_err(
            0,
            format!("bad magic number {magic:#010x}, expected {expected:#010x}"),
        ));
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let mut cur = Cursor::new(bytes);
    check_magic(&mut cur, IMAGES_MAGIC)?;
    let count = read_u32(&mut cur, "image count")? as usize;
    let rows = read_u32(&mut cur, "row count")? as usize;
    let cols = read_u32(&mut cur, "column count")? as usize;
    let size = rows * cols;
    let mut pixels = Vec::with_capacity(count.min(bytes.len() / size.max(1)));
    for i in 0..count {
        let at = cur.position();
        let mut grid = vec![0u8; size];
        cur.read_exact(&mut grid).map_err(|_| {
            parse_err(
                bytes.len() as u64,
                format!("file ends inside image {i} of {count} (image starts at byte {at})"),
            )
        })?;
        pixels.push(grid);
    }
    if (cur.position() as usize) != bytes.len() {
        return Err(parse_err(cur.position(), "trailing bytes after the last image"));
    }
    Ok(IdxImages { rows, cols, pixels })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    check_magic(&mut cur, LABELS_MAGIC)?;
    let count = read_u32(&mut cur, "label count")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(parse_err(
            bytes.len() as u64,
            format!("file ends after {} of {count} labels", body.len()),
        ));
    }
    if body.len() > count {
        return Err(parse_err((8 + count) as u64, "trailing bytes after the last label"));
    }
    Ok(body.to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * images.rows * images.cols);
    out.write_u32::<BigEndian>(IMAGES_MAGIC).unwrap();
    out.write_u32::<BigEndian>(images.len() as u32).unwrap();
    out.write_u32::<BigEndian>(images.rows as u32).unwrap();
    out.write_u32::<BigEndian>(images.cols as u32).unwrap();
    for grid in &images.pixels {
        out.extend_from_slice(grid);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(LABELS_MAGIC).unwrap();
    out.write_u32::<BigEndian>(labels.len() as u32).unwrap();
    out.extend_from_slice(labels);
    out
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image file and its label file, checking that the counts agree.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<(IdxImages, Vec<u8>)> {
    let images = parse_images(&read_file(images_path)?)?;
    let labels = parse_labels(&read_file(labels_path)?)?;
    if images.len() != labels.len() {
        return Err(parse_err(
            4,
            format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            ),
        ));
    }
    Ok((images, labels))
}

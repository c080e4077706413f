//! Minimal ZIP archive access: enough of the format to read submission
//! archives (stored and deflate entries) and to write stored archives with
//! deterministic bytes.

use std::io::{Read, Seek, SeekFrom};

use flate2::read::DeflateDecoder;
use flate2::Crc;

const EOCD_SIG: u32 = 0x0605_4b50;
const CENTRAL_SIG: u32 = 0x0201_4b50;
const LOCAL_SIG: u32 = 0x0403_4b50;

#[derive(Debug, thiserror::Error)]
pub enum ZipError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("end-of-central-directory signature not found; not a ZIP archive")]
    MissingEndOfCentralDirectory,
    #[error("malformed archive: {0}")]
    Malformed(&'static str),
    #[error("entry '{name}' uses unsupported compression method {method}")]
    UnsupportedMethod { name: String, method: u16 },
    #[error("entry '{name}' is encrypted")]
    Encrypted { name: String },
    #[error("entry '{name}' fails its CRC check")]
    CrcMismatch { name: String },
    #[error("ZIP64 archives are not supported")]
    Zip64,
}

#[derive(Debug, Clone)]
pub struct ZipEntry {
    pub name: String,
    method: u16,
    flags: u16,
    crc32: u32,
    compressed_size: u32,
    uncompressed_size: u32,
    local_offset: u32,
}

impl ZipEntry {
    pub fn is_dir(&self) -> bool {
        self.name.ends_with('/')
    }
}

fn u16_at(buf: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([buf[at], buf[at + 1]])
}

fn u32_at(buf: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([buf[at], buf[at + 1], buf[at + 2], buf[at + 3]])
}

/// Parses the central directory and returns all entries in directory order.
pub fn read_directory<R: Read + Seek>(reader: &mut R) -> Result<Vec<ZipEntry>, ZipError> {
    let len = reader.seek(SeekFrom::End(0))?;
    // EOCD is 22 bytes plus a comment of at most 65535 bytes.
    let window = len.min(22 + 65_535);
    reader.seek(SeekFrom::Start(len - window))?;
    let mut tail = vec![0u8; window as usize];
    reader.read_exact(&mut tail)?;

    let eocd_at = (0..tail.len().saturating_sub(21))
        .rev()
        .find(|&i| u32_at(&tail, i) == EOCD_SIG)
        .ok_or(ZipError::MissingEndOfCentralDirectory)?;
    let eocd = &tail[eocd_at..];
    let entry_count = u16_at(eocd, 10);
    let cd_size = u32_at(eocd, 12);
    let cd_offset = u32_at(eocd, 16);
    if entry_count == 0xFFFF || cd_size == 0xFFFF_FFFF || cd_offset == 0xFFFF_FFFF {
        return Err(ZipError::Zip64);
    }

    reader.seek(SeekFrom::Start(cd_offset as u64))?;
    let mut directory = vec![0u8; cd_size as usize];
    reader.read_exact(&mut directory)?;

    let mut entries = Vec::with_capacity(entry_count as usize);
    let mut at = 0usize;
    for _ in 0..entry_count {
        if at + 46 > directory.len() || u32_at(&directory, at) != CENTRAL_SIG {
            return Err(ZipError::Malformed("truncated central directory"));
        }
        let flags = u16_at(&directory, at + 8);
        let method = u16_at(&directory, at + 10);
        let crc32 = u32_at(&directory, at + 16);
        let compressed_size = u32_at(&directory, at + 20);
        let uncompressed_size = u32_at(&directory, at + 24);
        let name_len = u16_at(&directory, at + 28) as usize;
        let extra_len = u16_at(&directory, at + 30) as usize;
        let comment_len = u16_at(&directory, at + 32) as usize;
        let local_offset = u32_at(&directory, at + 42);
        if compressed_size == 0xFFFF_FFFF || uncompressed_size == 0xFFFF_FFFF {
            return Err(ZipError::Zip64);
        }
        let name_end = at + 46 + name_len;
        if name_end > directory.len() {
            return Err(ZipError::Malformed("entry name runs past directory"));
        }
        let name = String::from_utf8_lossy(&directory[at + 46..name_end]).into_owned();
        entries.push(ZipEntry {
            name,
            method,
            flags,
            crc32,
            compressed_size,
            uncompressed_size,
            local_offset,
        });
        at = name_end + extra_len + comment_len;
    }
    Ok(entries)
}

/// Reads and decompresses one entry, verifying its CRC.
pub fn read_entry<R: Read + Seek>(reader: &mut R, entry: &ZipEntry) -> Result<Vec<u8>, ZipError> {
    if entry.flags & 0x1 != 0 {
        return Err(ZipError::Encrypted { name: entry.name.clone() });
    }
    reader.seek(SeekFrom::Start(entry.local_offset as u64))?;
    let mut header = [0u8; 30];
    reader.read_exact(&mut header)?;
    if u32_at(&header, 0) != LOCAL_SIG {
        return Err(ZipError::Malformed("bad local header signature"));
    }
    let name_len = u16_at(&header, 26) as u64;
    let extra_len = u16_at(&header, 28) as u64;
    reader.seek(SeekFrom::Current((name_len + extra_len) as i64))?;

    let mut compressed = reader.take(entry.compressed_size as u64);
    let mut data = Vec::with_capacity(entry.uncompressed_size as usize);
    match entry.method {
        0 => {
            compressed.read_to_end(&mut data)?;
        }
        8 => {
            DeflateDecoder::new(compressed).read_to_end(&mut data)?;
        }
        method => return Err(ZipError::UnsupportedMethod { name: entry.name.clone(), method }),
    }
    let mut crc = Crc::new();
    crc.update(&data);
    if crc.sum() != entry.crc32 {
        return Err(ZipError::CrcMismatch { name: entry.name.clone() });
    }
    Ok(data)
}

/// Writes a stored (uncompressed) archive with zeroed timestamps, so equal
/// inputs produce identical bytes.
pub fn write_archive(files: &[(&str, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut central = Vec::new();
    for (name, data) in files {
        let mut crc = Crc::new();
        crc.update(data);
        let crc = crc.sum();
        let offset = out.len() as u32;
        let name_bytes = name.as_bytes();
        let size = data.len() as u32;

        out.extend_from_slice(&LOCAL_SIG.to_le_bytes());
        out.extend_from_slice(&20u16.to_le_bytes()); // version needed
        out.extend_from_slice(&0u16.to_le_bytes()); // flags
        out.extend_from_slice(&0u16.to_le_bytes()); // method: stored
        out.extend_from_slice(&0u16.to_le_bytes()); // mod time
        out.extend_from_slice(&0x21u16.to_le_bytes()); // mod date (1980-01-01)
        out.extend_from_slice(&crc.to_le_bytes());
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&(name_bytes.len() as u16).to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes()); // extra len
        out.extend_from_slice(name_bytes);
        out.extend_from_slice(data);

        central.push((name_bytes.to_vec(), crc, size, offset));
    }

    let cd_offset = out.len() as u32;
    for (name, crc, size, offset) in &central {
        out.extend_from_slice(&CENTRAL_SIG.to_le_bytes());
        out.extend_from_slice(&20u16.to_le_bytes()); // version made by
        out.extend_from_slice(&20u16.to_le_bytes()); // version needed
        out.extend_from_slice(&0u16.to_le_bytes()); // flags
        out.extend_from_slice(&0u16.to_le_bytes()); // method
        out.extend_from_slice(&0u16.to_le_bytes()); // mod time
        out.extend_from_slice(&0x21u16.to_le_bytes()); // mod date
        out.extend_from_slice(&crc.to_le_bytes());
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&size.to_le_bytes());
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes()); // extra
        out.extend_from_slice(&0u16.to_le_bytes()); // comment
        out.extend_from_slice(&0u16.to_le_bytes()); // disk
        out.extend_from_slice(&0u16.to_le_bytes()); // internal attrs
        out.extend_from_slice(&0u32.to_le_bytes()); // external attrs
        out.extend_from_slice(&offset.to_le_bytes());
        out.extend_from_slice(name);
    }
    let cd_size = out.len() as u32 - cd_offset;

    out.extend_from_slice(&EOCD_SIG.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes()); // disk number
    out.extend_from_slice(&0u16.to_le_bytes()); // cd start disk
    out.extend_from_slice(&(central.len() as u16).to_le_bytes());
    out.extend_from_slice(&(central.len() as u16).to_le_bytes());
    out.extend_from_slice(&cd_size.to_le_bytes());
    out.extend_from_slice(&cd_offset.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes()); // comment len
    out
}

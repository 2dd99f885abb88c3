//! File formats.
//!
//! * EVB1 events: little-endian header `"EVB1" u16 width u16 height u64 t_begin
//!   u64 t_end u64 count` (32 bytes), then `count` 14-byte records
//!   `u64 t u16 x u16 y i8 p u8 0`.
//! * CSV events: header `t,x,y,p`, one event per line.
//! * Frames: binary 8-bit PGM (P5, maxval 255) plus `manifest.txt` with
//!   `index filename timestamp_us` lines and a `# dt_us <n>` line.
//! * MF1 motion fields: text line `MF1 <width> <height>`, row-major f32 LE
//!   `(vx, vy)` pairs, validity in `<path>.valid.pgm` (0 or 255).
//! * TF1 turbulence fields: text line `TF1 <width> <height> <frames>`, f64 LE
//!   `max_tilt`, then f64 LE `(dx, dy)` per pixel, frame-major.
//! * TFM1 tube fits: text line `TFM1 <width> <height> <t0> <unit>` where unit is
//!   `ms` or `frame:<dt_us>`, f64 LE `tol`, then per pixel f64 LE base x, base
//!   y, vx, vy, residual, u32 LE support, u8 label.
//! * Run manifests: `key=value` lines.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity};
use crate::field::{MotionField, TurbulenceField};
use crate::frame::{Frame, FrameSequence};
use crate::maps::{TubeFit, TubeFitMap, TubeLabel, VelocityUnit};

pub const EVB1_MAGIC: &[u8; 4] = b"EVB1";
pub const EVB1_HEADER_LEN: usize = 32;
pub const EVB1_RECORD_LEN: usize = 14;
pub const MANIFEST_NAME: &str = "manifest.txt";

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

/// Little-endian cursor over a byte slice.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(corrupt(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }

    /// Reads up to and including the next `\n`, returning the text before it.
    fn line(&mut self) -> Result<&'a str> {
        let rest = &self.buf[self.pos..];
        let n = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| corrupt("missing header line"))?;
        let s = std::str::from_utf8(&rest[..n]).map_err(|_| corrupt("header is not text"))?;
        self.pos += n + 1;
        Ok(s)
    }
}

// ---- EVB1 -----------------------------------------------------------------

pub fn encode_events(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(EVB1_HEADER_LEN + EVB1_RECORD_LEN * stream.len());
    out.extend_from_slice(EVB1_MAGIC);
    out.extend_from_slice(&(stream.width() as u16).to_le_bytes());
    out.extend_from_slice(&(stream.height() as u16).to_le_bytes());
    out.extend_from_slice(&stream.t_begin().to_le_bytes());
    out.extend_from_slice(&stream.t_end().to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in stream.events() {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.p.as_i8() as u8);
        out.push(0);
    }
    out
}

pub fn decode_events(buf: &[u8]) -> Result<EventStream> {
    if buf.len() < 4 || &buf[..4] != EVB1_MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = Reader::new(&buf[4..]);
    let width = r.u16()? as usize;
    let height = r.u16()? as usize;
    let t_begin = r.u64()?;
    let t_end = r.u64()?;
    let count = r.u64()?;
    let expected = (count as u128) * EVB1_RECORD_LEN as u128 + EVB1_HEADER_LEN as u128;
    if expected != buf.len() as u128 {
        return Err(corrupt(format!(
            "{count} records need {expected} bytes, file has {}",
            buf.len()
        )));
    }
    let mut events = Vec::with_capacity(count as usize);
    for i in 0..count as usize {
        let t = r.u64()?;
        let x = r.u16()?;
        let y = r.u16()?;
        let p = r.u8()? as i8;
        if r.u8()? != 0 {
            return Err(corrupt(format!("nonzero pad byte in record {i}")));
        }
        let p = Polarity::from_i8(p).map_err(|_| corrupt(format!("polarity {p} in record {i}")))?;
        if x as usize >= width || y as usize >= height {
            return Err(Error::OutOfBounds {
                x: x as usize,
                y: y as usize,
                width,
                height,
            });
        }
        events.push(Event::new(t, x, y, p));
    }
    r.finish()?;
    EventStream::from_sorted(width, height, t_begin, t_end, events)
}

pub fn write_events(path: impl AsRef<Path>, stream: &EventStream) -> Result<()> {
    Ok(fs::write(path, encode_events(stream))?)
}

pub fn read_events(path: impl AsRef<Path>) -> Result<EventStream> {
    decode_events(&fs::read(path)?)
}

// ---- CSV ------------------------------------------------------------------

pub fn write_events_csv(path: impl AsRef<Path>, stream: &EventStream) -> Result<()> {
    let mut s = String::from("t,x,y,p\n");
    for e in stream.events() {
        s.push_str(&format!("{},{},{},{}\n", e.t, e.x, e.y, e.p.as_i8()));
    }
    Ok(fs::write(path, s)?)
}

pub fn parse_event_csv_line(line: &str) -> Result<Event> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(corrupt(format!("expected 4 fields in `{line}`")));
    }
    let num = |s: &str| {
        s.parse::<i64>()
            .map_err(|_| corrupt(format!("bad number `{s}` in `{line}`")))
    };
    let (t, x, y, p) = (num(fields[0])?, num(fields[1])?, num(fields[2])?, num(fields[3])?);
    let t = u64::try_from(t).map_err(|_| corrupt(format!("negative timestamp in `{line}`")))?;
    let x = u16::try_from(x).map_err(|_| corrupt(format!("x out of range in `{line}`")))?;
    let y = u16::try_from(y).map_err(|_| corrupt(format!("y out of range in `{line}`")))?;
    Event::from_raw(t, x, y, p)
}

/// Reads a CSV event file for a `width x height` sensor; the span is the
/// min/max timestamp.
pub fn read_events_csv(path: impl AsRef<Path>, width: usize, height: usize) -> Result<EventStream> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "t,x,y,p" => {}
        _ => return Err(corrupt("missing `t,x,y,p` header")),
    }
    let events = lines.map(parse_event_csv_line).collect::<Result<Vec<_>>>()?;
    EventStream::new(width, height, events)
}

// ---- PGM ------------------------------------------------------------------

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Rounds every pixel to the nearest multiple of 1/255.
pub fn quantize_frame(frame: &Frame) -> Frame {
    let data = frame.pixels().iter().map(|&v| quantize(v) as f64 / 255.0).collect();
    Frame::new(frame.width(), frame.height(), data).expect("quantized values are in range")
}

fn pgm_header(width: usize, height: usize, maxval: u32) -> Vec<u8> {
    format!("P5\n{width} {height}\n{maxval}\n").into_bytes()
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = pgm_header(frame.width(), frame.height(), 255);
    out.extend(frame.pixels().iter().map(|&v| quantize(v)));
    out
}

/// 16-bit big-endian PGM (maxval 65535).
pub fn encode_pgm16(width: usize, height: usize, values: &[u16]) -> Result<Vec<u8>> {
    if values.len() != width * height {
        return Err(Error::LengthMismatch {
            expected: width * height,
            found: values.len(),
        });
    }
    let mut out = pgm_header(width, height, 65535);
    for v in values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    Ok(out)
}

/// Parses a binary PGM into `(width, height, maxval, samples)`.
pub fn decode_pgm_raw(buf: &[u8]) -> Result<(usize, usize, u32, Vec<u16>)> {
    if buf.len() < 2 || &buf[..2] != b"P5" {
        return Err(Error::BadMagic);
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for f in fields.iter_mut() {
        loop {
            match buf.get(pos) {
                Some(b'#') => {
                    while buf.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while buf.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt("malformed PGM header"));
        }
        *f = std::str::from_utf8(&buf[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| corrupt("PGM header number out of range"))?;
    }
    if !buf.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(corrupt("malformed PGM header"));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(corrupt(format!("PGM header {w}x{h} maxval {maxval}")));
    }
    let (w, h) = (w as usize, h as usize);
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let n = w.checked_mul(h).ok_or_else(|| corrupt("PGM too large"))?;
    if buf.len() - pos != n * bytes_per {
        return Err(corrupt(format!(
            "PGM payload has {} bytes, expected {}",
            buf.len() - pos,
            n * bytes_per
        )));
    }
    let data = &buf[pos..];
    let samples: Vec<u16> = if bytes_per == 1 {
        data.iter().map(|&b| b as u16).collect()
    } else {
        data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    if let Some(s) = samples.iter().find(|&&s| s as u64 > maxval) {
        return Err(corrupt(format!("PGM sample {s} above maxval {maxval}")));
    }
    Ok((w, h, maxval as u32, samples))
}

/// Any-depth PGM to a `[0, 1]` frame.
pub fn decode_pgm(buf: &[u8]) -> Result<Frame> {
    let (w, h, maxval, samples) = decode_pgm_raw(buf)?;
    let m = maxval as f64;
    Frame::new(w, h, samples.iter().map(|&s| s as f64 / m).collect())
}

pub fn write_pgm(path: impl AsRef<Path>, frame: &Frame) -> Result<()> {
    Ok(fs::write(path, encode_pgm(frame))?)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm16(path: impl AsRef<Path>, width: usize, height: usize, values: &[u16]) -> Result<()> {
    Ok(fs::write(path, encode_pgm16(width, height, values)?)?)
}

// ---- Frame directories ----------------------------------------------------

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:04}.pgm")
}

/// Writes every frame as 8-bit PGM plus the manifest.
pub fn write_frames(dir: impl AsRef<Path>, seq: &FrameSequence) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = format!("# dt_us {}\n", seq.dt());
    for (k, f) in seq.frames().iter().enumerate() {
        let name = frame_file_name(k);
        write_pgm(dir.join(&name), f)?;
        manifest.push_str(&format!("{k} {name} {}\n", seq.time_of(k)));
    }
    Ok(fs::write(dir.join(MANIFEST_NAME), manifest)?)
}

/// Reads a frame directory. Indices must run `0..n` with uniformly spaced
/// timestamps; a single-frame directory takes its interval from `# dt_us`.
pub fn read_frames(dir: impl AsRef<Path>) -> Result<FrameSequence> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let mut dt_hint = None;
    let mut entries: Vec<(usize, String, u64)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let mut it = c.split_whitespace();
            if it.next() == Some("dt_us") {
                let v = it.next().and_then(|v| v.parse::<u64>().ok());
                dt_hint = Some(v.ok_or_else(|| corrupt(format!("bad manifest line `{line}`")))?);
            }
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || corrupt(format!("bad manifest line `{line}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let index = parts[0].parse().map_err(|_| bad())?;
        let t = parts[2].parse().map_err(|_| bad())?;
        entries.push((index, parts[1].to_string(), t));
    }
    if entries.is_empty() {
        return Err(corrupt("manifest lists no frames"));
    }
    entries.sort_by_key(|e| e.0);
    for (k, e) in entries.iter().enumerate() {
        if e.0 != k {
            return Err(corrupt(format!("manifest has no entry for frame {k}")));
        }
    }
    let t0 = entries[0].2;
    let dt = if entries.len() > 1 {
        entries[1].2.checked_sub(t0).filter(|&d| d > 0)
    } else {
        dt_hint
    }
    .ok_or_else(|| corrupt("cannot determine frame interval"))?;
    for (k, e) in entries.iter().enumerate() {
        if e.2 != t0 + k as u64 * dt {
            return Err(corrupt(format!("frame {k} timestamp {} is not uniform", e.2)));
        }
    }
    let frames = entries
        .iter()
        .map(|(_, name, _)| {
            if name.contains('/') || name.contains('\\') {
                return Err(corrupt(format!("frame name `{name}` must be a plain file name")));
            }
            read_pgm(dir.join(name))
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, t0, dt)
}

// ---- MF1 ------------------------------------------------------------------

pub fn validity_path(path: impl AsRef<Path>) -> PathBuf {
    let mut s = path.as_ref().as_os_str().to_owned();
    s.push(".valid.pgm");
    PathBuf::from(s)
}

pub fn encode_motion_field(field: &MotionField) -> Vec<u8> {
    let mut out = format!("MF1 {} {}\n", field.width(), field.height()).into_bytes();
    for v in field.velocity() {
        out.extend_from_slice(&v[0].to_le_bytes());
        out.extend_from_slice(&v[1].to_le_bytes());
    }
    out
}

fn parse_header<const N: usize>(line: &str, magic: &str) -> Result<[u64; N]> {
    let mut it = line.split_whitespace();
    if it.next() != Some(magic) {
        return Err(Error::BadMagic);
    }
    let mut out = [0u64; N];
    for v in out.iter_mut() {
        *v = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt(format!("bad {magic} header `{line}`")))?;
    }
    if it.next().is_some() {
        return Err(corrupt(format!("bad {magic} header `{line}`")));
    }
    Ok(out)
}

pub fn decode_motion_field(buf: &[u8], validity: &[u8]) -> Result<MotionField> {
    let mut r = Reader::new(buf);
    let [w, h] = parse_header::<2>(r.line()?, "MF1")?;
    let (w, h) = (w as usize, h as usize);
    let n = w.checked_mul(h).ok_or_else(|| corrupt("MF1 too large"))?;
    let mut velocity = Vec::with_capacity(n);
    for _ in 0..n {
        velocity.push([r.f32()?, r.f32()?]);
    }
    r.finish()?;
    let (vw, vh, _, samples) = decode_pgm_raw(validity)?;
    if (vw, vh) != (w, h) {
        return Err(Error::GeometryMismatch {
            expected: (w, h),
            found: (vw, vh),
        });
    }
    let valid = samples
        .iter()
        .map(|&s| match s {
            0 => Ok(false),
            255 => Ok(true),
            s => Err(corrupt(format!("validity sample {s} is neither 0 nor 255"))),
        })
        .collect::<Result<Vec<_>>>()?;
    MotionField::new(w, h, velocity, valid).map_err(|e| corrupt(e.to_string()))
}

pub fn write_motion_field(path: impl AsRef<Path>, field: &MotionField) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_motion_field(field))?;
    let mask: Vec<u8> = field.valid().iter().map(|&v| if v { 255 } else { 0 }).collect();
    let mut pgm = pgm_header(field.width(), field.height(), 255);
    pgm.extend_from_slice(&mask);
    Ok(fs::write(validity_path(path), pgm)?)
}

pub fn read_motion_field(path: impl AsRef<Path>) -> Result<MotionField> {
    let path = path.as_ref();
    decode_motion_field(&fs::read(path)?, &fs::read(validity_path(path))?)
}

// ---- TF1 ------------------------------------------------------------------

pub fn encode_turbulence_field(field: &TurbulenceField) -> Vec<u8> {
    let mut out = format!("TF1 {} {} {}\n", field.width(), field.height(), field.n_frames()).into_bytes();
    out.extend_from_slice(&field.max_tilt().to_le_bytes());
    for d in field.displacement() {
        out.extend_from_slice(&d[0].to_le_bytes());
        out.extend_from_slice(&d[1].to_le_bytes());
    }
    out
}

pub fn decode_turbulence_field(buf: &[u8]) -> Result<TurbulenceField> {
    let mut r = Reader::new(buf);
    let [w, h, n] = parse_header::<3>(r.line()?, "TF1")?;
    let (w, h, n) = (w as usize, h as usize, n as usize);
    let total = w
        .checked_mul(h)
        .and_then(|v| v.checked_mul(n))
        .ok_or_else(|| corrupt("TF1 too large"))?;
    let max_tilt = r.f64()?;
    let mut disp = Vec::with_capacity(total);
    for _ in 0..total {
        disp.push([r.f64()?, r.f64()?]);
    }
    r.finish()?;
    TurbulenceField::new(w, h, n, disp, max_tilt).map_err(|e| corrupt(e.to_string()))
}

pub fn write_turbulence_field(path: impl AsRef<Path>, field: &TurbulenceField) -> Result<()> {
    Ok(fs::write(path, encode_turbulence_field(field))?)
}

pub fn read_turbulence_field(path: impl AsRef<Path>) -> Result<TurbulenceField> {
    decode_turbulence_field(&fs::read(path)?)
}

// ---- TFM1 -----------------------------------------------------------------

pub fn encode_tube_fits(fits: &TubeFitMap) -> Vec<u8> {
    let unit = match fits.unit() {
        VelocityUnit::PxPerMs => "ms".to_string(),
        VelocityUnit::PxPerFrame { dt_us } => format!("frame:{dt_us}"),
    };
    let mut out = format!("TFM1 {} {} {} {unit}\n", fits.width(), fits.height(), fits.t0()).into_bytes();
    out.extend_from_slice(&fits.tol().to_le_bytes());
    for i in 0..fits.width() * fits.height() {
        let f = fits.fit(i);
        for v in [f.base[0], f.base[1], f.velocity[0], f.velocity[1], f.residual] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&f.support.to_le_bytes());
        out.push(f.label.code());
    }
    out
}

pub fn decode_tube_fits(buf: &[u8]) -> Result<TubeFitMap> {
    let mut r = Reader::new(buf);
    let line = r.line()?;
    let mut parts: Vec<&str> = line.split_whitespace().collect();
    let unit = match parts.pop() {
        Some("ms") => VelocityUnit::PxPerMs,
        Some(u) => match u.strip_prefix("frame:").and_then(|d| d.parse().ok()) {
            Some(dt_us) => VelocityUnit::PxPerFrame { dt_us },
            None => return Err(corrupt(format!("bad velocity unit `{u}`"))),
        },
        None => return Err(Error::BadMagic),
    };
    let [w, h, t0] = parse_header::<3>(&parts.join(" "), "TFM1")?;
    let (w, h) = (w as usize, h as usize);
    let n = w.checked_mul(h).ok_or_else(|| corrupt("TFM1 too large"))?;
    let tol = r.f64()?;
    let mut fits = Vec::with_capacity(n);
    for _ in 0..n {
        let base = [r.f64()?, r.f64()?];
        let velocity = [r.f64()?, r.f64()?];
        let residual = r.f64()?;
        let support = r.u32()?;
        let label = TubeLabel::from_code(r.u8()?)?;
        fits.push(TubeFit {
            base,
            velocity,
            residual,
            support,
            label,
        });
    }
    r.finish()?;
    TubeFitMap::new(w, h, t0, fits, tol, unit).map_err(|e| corrupt(e.to_string()))
}

pub fn write_tube_fits(path: impl AsRef<Path>, fits: &TubeFitMap) -> Result<()> {
    Ok(fs::write(path, encode_tube_fits(fits))?)
}

pub fn read_tube_fits(path: impl AsRef<Path>) -> Result<TubeFitMap> {
    decode_tube_fits(&fs::read(path)?)
}

// ---- Run manifest ---------------------------------------------------------

pub fn format_run_manifest(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn write_run_manifest(path: impl AsRef<Path>, entries: &[(String, String)]) -> Result<()> {
    Ok(fs::write(path, format_run_manifest(entries))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_stream() -> EventStream {
        let ev = vec![
            Event::from_raw(5, 1, 2, -1).unwrap(),
            Event::from_raw(5, 0, 0, 1).unwrap(),
            Event::from_raw(90, 3, 3, 1).unwrap(),
        ];
        EventStream::with_span(4, 4, 0, 100, ev).unwrap()
    }

    #[test]
    fn empty_evb1_is_32_bytes() {
        let s = EventStream::empty(10, 7, 0, 35_000).unwrap();
        let b = encode_events(&s);
        assert_eq!(b.len(), 4 + 2 + 2 + 8 + 8 + 8);
        assert_eq!(&b[..4], b"EVB1");
        assert_eq!(decode_events(&b).unwrap(), s);
    }

    #[test]
    fn evb1_layout_and_round_trip() {
        let s = sample_stream();
        let b = encode_events(&s);
        assert_eq!(b.len(), 32 + 3 * 14);
        // First record is (5, 0, 0, +1) after canonical ordering.
        assert_eq!(&b[32..46], &[5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0]);
        assert_eq!(b[32 + 14 + 12], 0xff);
        assert_eq!(decode_events(&b).unwrap(), s);
    }

    #[test]
    fn evb1_rejections() {
        let good = encode_events(&sample_stream());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_events(&bad), Err(Error::BadMagic)));
        assert!(matches!(decode_events(&good[..good.len() - 1]), Err(Error::Corrupt(_))));
        let mut pad = good.clone();
        pad[32 + 13] = 1;
        assert!(matches!(decode_events(&pad), Err(Error::Corrupt(_))));
        let mut oob = good.clone();
        oob[32 + 8] = 9;
        assert!(matches!(decode_events(&oob), Err(Error::OutOfBounds { x: 9, .. })));
        let mut unsorted = good.clone();
        unsorted[32 + 2 * 14] = 1;
        assert!(matches!(decode_events(&unsorted), Err(Error::Unsorted(2))));
    }

    #[test]
    fn csv_lines() {
        assert_eq!(
            parse_event_csv_line("5,1,2,-1").unwrap(),
            Event::new(5, 1, 2, Polarity::Negative)
        );
        assert!(matches!(parse_event_csv_line("5,1,2,0"), Err(Error::BadPolarity(0))));
        assert!(parse_event_csv_line("5,1,2").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let s = sample_stream();
        write_events_csv(&p, &s).unwrap();
        assert!(fs::read_to_string(&p).unwrap().starts_with("t,x,y,p\n5,0,0,1\n"));
        let back = read_events_csv(&p, 4, 4).unwrap();
        assert_eq!(back.events(), s.events());
    }

    #[test]
    fn pgm_two_by_two_layout() {
        let f = Frame::new(2, 2, vec![0.0, 1.0, 0.5, 0.2]).unwrap();
        let b = encode_pgm(&f);
        assert_eq!(&b[..11], b"P5\n2 2\n255\n");
        assert_eq!(&b[11..], &[0, 255, 128, 51]);
        assert_eq!(b.len(), 11 + 4);
        let back = decode_pgm(&b).unwrap();
        assert_eq!(back, quantize_frame(&f));
        assert_eq!(encode_pgm(&back), b);
    }

    #[test]
    fn pgm_header_with_comment_and_16_bit() {
        let b = b"P5\n# note\n2 1\n255\n\x07\x08";
        assert_eq!(decode_pgm_raw(b).unwrap(), (2, 1, 255, vec![7, 8]));
        let b16 = encode_pgm16(2, 1, &[1, 65535]).unwrap();
        assert_eq!(decode_pgm_raw(&b16).unwrap(), (2, 1, 65535, vec![1, 65535]));
        assert!(matches!(decode_pgm_raw(b"P6\n1 1\n255\n\x00"), Err(Error::BadMagic)));
        assert!(matches!(decode_pgm_raw(b"P5\n2 2\n255\n\x00"), Err(Error::Corrupt(_))));
    }

    #[test]
    fn frames_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<Frame> = (0..3)
            .map(|k| Frame::from_fn(5, 4, |x, y| ((x + y + k) % 7) as f64 / 6.3).unwrap())
            .collect();
        let seq = FrameSequence::new(frames, 1000, 5000).unwrap();
        write_frames(dir.path(), &seq).unwrap();
        let back = read_frames(dir.path()).unwrap();
        assert_eq!((back.t0(), back.dt(), back.len()), (1000, 5000, 3));
        for (a, b) in back.frames().iter().zip(seq.frames()) {
            for (x, y) in a.pixels().iter().zip(b.pixels()) {
                assert!((x - y).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
        let dir2 = tempfile::tempdir().unwrap();
        write_frames(dir2.path(), &back).unwrap();
        assert_eq!(read_frames(dir2.path()).unwrap(), back);
    }

    #[test]
    fn missing_manifest_entry_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let seq = FrameSequence::new(vec![Frame::filled(2, 2, 0.5).unwrap(); 3], 0, 10).unwrap();
        write_frames(dir.path(), &seq).unwrap();
        let m = dir.path().join(MANIFEST_NAME);
        let text = fs::read_to_string(&m).unwrap();
        let kept: String = text
            .lines()
            .filter(|l| !l.starts_with("1 "))
            .map(|l| format!("{l}\n"))
            .collect();
        fs::write(&m, kept).unwrap();
        assert!(matches!(read_frames(dir.path()), Err(Error::Corrupt(_))));
    }

    #[test]
    fn motion_field_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mf1");
        let f = MotionField::new(
            3,
            2,
            vec![
                [1.5, -0.25],
                [0.0, 0.0],
                [f32::MIN_POSITIVE, 3.0],
                [0.0; 2],
                [0.0; 2],
                [7.0, 7.0],
            ],
            vec![true, false, true, false, false, true],
        )
        .unwrap();
        write_motion_field(&p, &f).unwrap();
        assert!(validity_path(&p).exists());
        assert_eq!(read_motion_field(&p).unwrap(), f);
        let inv = MotionField::invalid(4, 4);
        write_motion_field(&p, &inv).unwrap();
        assert_eq!(read_motion_field(&p).unwrap().valid_count(), 0);
        let b = fs::read(&p).unwrap();
        fs::write(&p, &b[..b.len() - 3]).unwrap();
        assert!(matches!(read_motion_field(&p), Err(Error::Corrupt(_))));
    }

    #[test]
    fn tube_fits_round_trip() {
        let mut fits = vec![TubeFit::EMPTY; 4];
        fits[1] = TubeFit {
            base: [1.25, 0.5],
            velocity: [2.0, -0.1],
            residual: 0.03,
            support: 9,
            label: TubeLabel::Tube,
        };
        fits[2] = TubeFit {
            residual: f64::INFINITY,
            support: 4,
            label: TubeLabel::Turbulence,
            ..TubeFit::EMPTY
        };
        for unit in [VelocityUnit::PxPerMs, VelocityUnit::PxPerFrame { dt_us: 5000 }] {
            let m = TubeFitMap::new(2, 2, 17_500, fits.clone(), 1.0, unit).unwrap();
            assert_eq!(decode_tube_fits(&encode_tube_fits(&m)).unwrap(), m);
        }
    }

    #[test]
    fn run_manifest_lines() {
        let e = vec![
            ("seed".to_string(), "7".to_string()),
            ("preset".to_string(), "bar".to_string()),
        ];
        assert_eq!(format_run_manifest(&e), "seed=7\npreset=bar\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn evb1_round_trips(raw in proptest::collection::vec((0u64..1_000_000, 0u16..40, 0u16..30, any::<bool>()), 0..200)) {
            let ev: Vec<Event> = raw.iter().map(|&(t, x, y, p)| Event::from_raw(t, x, y, if p { 1 } else { -1 }).unwrap()).collect();
            let s = EventStream::with_span(40, 30, 0, 1_000_000, ev).unwrap();
            let b = encode_events(&s);
            prop_assert_eq!(b.len(), 32 + 14 * s.len());
            prop_assert_eq!(decode_events(&b).unwrap(), s);
        }

        #[test]
        fn turbulence_field_round_trips(vals in proptest::collection::vec(-2.0f64..2.0, 12)) {
            // Two frames with opposite displacements keep the temporal mean at zero.
            let mut disp: Vec<[f64; 2]> = vals.chunks(2).map(|c| [c[0], c[1]]).collect();
            let neg: Vec<[f64; 2]> = disp.iter().map(|d| [-d[0], -d[1]]).collect();
            disp.extend(neg);
            let max = disp.iter().map(|d| d[0].hypot(d[1])).fold(0.0, f64::max);
            let f = TurbulenceField::new(3, 2, 2, disp, max).unwrap();
            prop_assert_eq!(decode_turbulence_field(&encode_turbulence_field(&f)).unwrap(), f);
        }
    }
}

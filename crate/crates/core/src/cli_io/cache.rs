//! The LPFG1 frame cache.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "LPFG1"                 magic and version
//! u32 L, L bytes          JSON header (FrameHeader)
//! per grid node:
//!   u8 flags              bit 0: loop present, bit 1: plus constant present
//!   f64 condition         NaN for failed nodes
//!   loop record           TwistedLoop::write_bytes, if bit 0
//!   d×d (re, im) f64      the node's plus constant, row-major, if bit 1
//! ```
//!
//! Node failures travel in the header so that a read-back frame is complete.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{GroupSpec, Mat};
use crate::error::{Error, Result};
use crate::frames::{ExtendedFrame, GridSpec, NodeFailure};
use crate::loops::TwistedLoop;

use super::SpaceSpec;

pub const MAGIC: &[u8; 5] = b"LPFG1";

const HAS_LOOP: u8 = 1;
const HAS_PLUS: u8 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameHeader {
    pub potential_id: String,
    pub group: GroupSpec,
    pub space: SpaceSpec,
    pub grid: GridSpec,
    pub band: i32,
    pub gauge_applied: bool,
    /// (node index, reason)
    pub failures: Vec<(usize, String)>,
}

/// JSON-friendly frame overview, used for `.json` outputs of frame runs.
#[derive(Clone, Debug, Serialize)]
pub struct FrameSummary {
    pub potential_id: String,
    pub grid: GridSpec,
    pub band: i32,
    pub valid_nodes: usize,
    pub failures: Vec<(usize, String)>,
    pub worst_condition: f64,
}

impl FrameSummary {
    pub fn of(f: &ExtendedFrame) -> Self {
        FrameSummary {
            potential_id: f.potential_id.clone(),
            grid: f.grid.clone(),
            band: f.band,
            valid_nodes: f.valid_count(),
            failures: f.failures.iter().map(|n| (n.index, n.reason.clone())).collect(),
            worst_condition: f.conditions.iter().copied().filter(|c| c.is_finite()).fold(0.0, f64::max),
        }
    }
}

pub fn write_frame_cache(frame: &ExtendedFrame) -> Vec<u8> {
    let header = FrameHeader {
        potential_id: frame.potential_id.clone(),
        group: frame.group(),
        space: SpaceSpec::from_space(&frame.space),
        grid: frame.grid.clone(),
        band: frame.band,
        gauge_applied: frame.gauge_applied,
        failures: frame.failures.iter().map(|n| (n.index, n.reason.clone())).collect(),
    };
    let json = serde_json::to_vec(&header).expect("headers always serialize");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for i in 0..frame.grid.len() {
        let l = frame.loops[i].as_ref();
        let h = frame.plus_constants.get(i).and_then(|h| h.as_ref());
        out.push(if l.is_some() { HAS_LOOP } else { 0 } | if h.is_some() { HAS_PLUS } else { 0 });
        out.extend_from_slice(&frame.conditions.get(i).copied().unwrap_or(f64::NAN).to_le_bytes());
        if let Some(l) = l {
            l.write_bytes(&mut out);
        }
        if let Some(h) = h {
            for r in 0..h.dim() {
                for z in h.row(r) {
                    out.extend_from_slice(&z.re.to_le_bytes());
                    out.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
    }
    out
}

fn take<'a>(buf: &'a [u8], pos: &mut usize, k: usize) -> Result<&'a [u8]> {
    let s = buf.get(*pos..*pos + k).ok_or_else(|| Error::Format("truncated".into()))?;
    *pos += k;
    Ok(s)
}

fn read_f64(buf: &[u8], pos: &mut usize) -> Result<f64> {
    Ok(f64::from_le_bytes(take(buf, pos, 8)?.try_into().unwrap()))
}

pub fn read_frame_cache(buf: &[u8]) -> Result<ExtendedFrame> {
    let mut pos = 0;
    if take(buf, &mut pos, MAGIC.len())? != MAGIC {
        return Err(Error::Format("not an LPFG1 file".into()));
    }
    let len = u32::from_le_bytes(take(buf, &mut pos, 4)?.try_into().unwrap()) as usize;
    let header: FrameHeader = serde_json::from_slice(take(buf, &mut pos, len)?).map_err(|e| Error::Format(format!("header: {e}")))?;
    header.grid.validate().map_err(|e| Error::Format(e.to_string()))?;
    let space = header.space.to_space(header.group).map_err(|e| Error::Format(e.to_string()))?;
    let d = header.group.dim();
    let n = header.grid.len();
    let (mut loops, mut plus, mut conditions) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let flags = take(buf, &mut pos, 1)?[0];
        conditions.push(read_f64(buf, &mut pos)?);
        loops.push(if flags & HAS_LOOP != 0 {
            let l = TwistedLoop::read_bytes(buf, &mut pos)?;
            if l.group() != header.group {
                return Err(Error::Format("loop group differs from the header".into()));
            }
            Some(l)
        } else {
            None
        });
        plus.push(if flags & HAS_PLUS != 0 {
            let mut m = Mat::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] = C64::new(read_f64(buf, &mut pos)?, read_f64(buf, &mut pos)?);
                }
            }
            Some(m)
        } else {
            None
        });
    }
    if pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - pos)));
    }
    Ok(ExtendedFrame {
        grid: header.grid,
        space,
        potential_id: header.potential_id,
        band: header.band,
        loops,
        failures: header.failures.into_iter().map(|(index, reason)| NodeFailure { index, reason }).collect(),
        conditions,
        plus_constants: plus,
        gauge_applied: header.gauge_applied,
    })
}

//! Flat binary observation dump.
//!
//! ```text
//! "MRTO" major:u16 minor:u16 patch:u16
//! channels:u32 height:u32 width:u32 unit_features:u32
//! tick:u32 n_my:u32 n_enemy:u32 n_resources:u32 n_extra:u32
//! spatial     f32[channels*height*width]   channel-major, then y, then x
//! my rows     f32[n_my * (1 + unit_features)]    id, features
//! enemy rows  f32[n_enemy * (1 + unit_features)]
//! resources   f32[n_resources * 4]         id, x, y, remaining
//! extra       f32[n_extra]                 money, 13 enemy averages,
//!                                          ticks since instruction (-1 none)
//! ```
//!
//! Everything is little-endian. Ids are stored as exact `f32` integers.

use super::encode::{EntityRow, Observation, ResourceRow, NUM_CHANNELS, SPATIAL_LEN, UNIT_FEATURES};
use crate::types::{EntityId, UnitType, MAP_SIZE};

pub const OBS_MAGIC: &[u8; 4] = b"MRTO";
pub const OBS_VERSION: [u16; 3] = [1, 0, 0];
pub const EXTRA_LEN: usize = 1 + UnitType::COUNT + 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DumpError {
    #[error("not an observation dump")]
    BadMagic,
    #[error("unsupported dump version {0}")]
    Version(u16),
    #[error("dump truncated")]
    Truncated,
    #[error("unexpected dimensions")]
    Dimensions,
}

pub fn write_observation(obs: &Observation, out: &mut Vec<u8>) {
    out.extend_from_slice(OBS_MAGIC);
    for v in OBS_VERSION {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let dims = [
        NUM_CHANNELS as u32,
        MAP_SIZE as u32,
        MAP_SIZE as u32,
        UNIT_FEATURES as u32,
        obs.tick,
        obs.my_units.len() as u32,
        obs.enemy_units.len() as u32,
        obs.resources.len() as u32,
        EXTRA_LEN as u32,
    ];
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    let mut put = |v: f32| out.extend_from_slice(&v.to_le_bytes());
    for &v in &obs.spatial {
        put(v);
    }
    for r in obs.my_units.iter().chain(&obs.enemy_units) {
        put(r.id.0 as f32);
        for &v in &r.features {
            put(v);
        }
    }
    for r in &obs.resources {
        put(r.id.0 as f32);
        put(r.x);
        put(r.y);
        put(r.remaining as f32);
    }
    put(obs.money as f32);
    for v in obs.enemy_average {
        put(v);
    }
    put(obs.ticks_since_instruction as f32);
}

/// The numeric content of one dump; instruction texts are not included.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationDump {
    pub tick: u32,
    pub spatial: Vec<f32>,
    pub my_units: Vec<EntityRow>,
    pub enemy_units: Vec<EntityRow>,
    pub resources: Vec<ResourceRow>,
    pub extra: Vec<f32>,
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], DumpError> {
        if self.buf.len() < n {
            return Err(DumpError::Truncated);
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u16(&mut self) -> Result<u16, DumpError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, DumpError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32, DumpError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, DumpError> {
        (0..n).map(|_| self.f32()).collect()
    }
}

/// Parses one dump from the front of `bytes`; returns it and the number of
/// bytes consumed, so concatenated dumps can be walked.
pub fn read_observation(bytes: &[u8]) -> Result<(ObservationDump, usize), DumpError> {
    let mut c = Cursor { buf: bytes };
    if c.take(4).map_err(|_| DumpError::BadMagic)? != OBS_MAGIC {
        return Err(DumpError::BadMagic);
    }
    let major = c.u16()?;
    if major != OBS_VERSION[0] {
        return Err(DumpError::Version(major));
    }
    c.u16()?;
    c.u16()?;
    let (ch, h, w, uf) = (c.u32()?, c.u32()?, c.u32()?, c.u32()? as usize);
    if (ch * h * w) as usize != SPATIAL_LEN || uf != UNIT_FEATURES {
        return Err(DumpError::Dimensions);
    }
    let tick = c.u32()?;
    let (n_my, n_enemy, n_res, n_extra) = (c.u32()?, c.u32()?, c.u32()?, c.u32()? as usize);
    let spatial = c.f32s(SPATIAL_LEN)?;
    let rows = |n: u32, c: &mut Cursor| -> Result<Vec<EntityRow>, DumpError> {
        (0..n)
            .map(|_| {
                let id = EntityId(c.f32()? as u32);
                Ok(EntityRow {
                    id,
                    features: c.f32s(uf)?,
                })
            })
            .collect()
    };
    let my_units = rows(n_my, &mut c)?;
    let enemy_units = rows(n_enemy, &mut c)?;
    let resources = (0..n_res)
        .map(|_| {
            Ok(ResourceRow {
                id: EntityId(c.f32()? as u32),
                x: c.f32()?,
                y: c.f32()?,
                remaining: c.f32()? as u32,
            })
        })
        .collect::<Result<Vec<_>, DumpError>>()?;
    let extra = c.f32s(n_extra)?;
    let used = bytes.len() - c.buf.len();
    Ok((
        ObservationDump {
            tick,
            spatial,
            my_units,
            enemy_units,
            resources,
            extra,
        },
        used,
    ))
}

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array3, ArrayView2};

use super::manifest::{manifest_path, ModelManifest};
use super::ReprError;

pub const MAGIC: &[u8; 4] = b"RPRS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;
const DTYPE_F32: u32 = 0;

/// Per-block hidden states for one (model, dataset) pair.
///
/// Layer index 0 is the pre-block representation and index `L` the output of
/// the final encoder block, so the first axis has length `L + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorStack {
    data: Array3<f32>,
    frame_rate_hz: f64,
}

impl TensorStack {
    pub fn new(data: Array3<f32>, frame_rate_hz: f64) -> Result<Self, ReprError> {
        let (layers, frames, hidden) = data.dim();
        if layers < 2 {
            return Err(ReprError::Shape(format!("stack needs at least 2 layers (L >= 1), got {layers}")));
        }
        if frames == 0 || hidden == 0 {
            return Err(ReprError::Shape(format!("empty stack: {frames} frames x {hidden} hidden")));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(ReprError::Data(format!("frame rate must be positive, got {frame_rate_hz}")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(ReprError::Data(format!("non-finite value at flat offset {pos}")));
        }
        Ok(Self { data, frame_rate_hz })
    }

    pub fn data(&self) -> &Array3<f32> {
        &self.data
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn num_layers_plus_1(&self) -> usize {
        self.data.dim().0
    }

    /// Encoder block count `L`.
    pub fn num_blocks(&self) -> usize {
        self.num_layers_plus_1() - 1
    }

    pub fn num_frames(&self) -> usize {
        self.data.dim().1
    }

    pub fn hidden_dim(&self) -> usize {
        self.data.dim().2
    }

    /// `frames x hidden` view of one layer.
    pub fn layer(&self, index: usize) -> ArrayView2<'_, f32> {
        self.data.index_axis(ndarray::Axis(0), index)
    }
}

/// Normalized depth `layer / L` of a layer index.
pub fn normalized_depth(layer: usize, num_blocks: usize) -> f64 {
    layer as f64 / num_blocks as f64
}

fn encode(stack: &TensorStack) -> Vec<u8> {
    let (layers, frames, hidden) = stack.data.dim();
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * stack.data.len());
    buf.extend_from_slice(MAGIC);
    for word in [VERSION, DTYPE_F32, layers as u32, frames as u32, hidden as u32] {
        buf.extend_from_slice(&word.to_le_bytes());
    }
    // iter() walks in logical (row-major) order regardless of memory layout
    for v in stack.data.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn decode(bytes: &[u8], frame_rate_hz: f64) -> Result<TensorStack, ReprError> {
    if bytes.len() < HEADER_LEN {
        return Err(ReprError::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(ReprError::Format(format!("bad magic {:?}", String::from_utf8_lossy(&bytes[0..4]))));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(ReprError::Format(format!("unsupported version {version}")));
    }
    let dtype = word(8);
    if dtype != DTYPE_F32 {
        return Err(ReprError::Format(format!("unsupported dtype code {dtype}")));
    }
    let (layers, frames, hidden) = (word(12) as usize, word(16) as usize, word(20) as usize);
    let count = layers
        .checked_mul(frames)
        .and_then(|n| n.checked_mul(hidden))
        .ok_or_else(|| ReprError::Format("declared shape overflows".into()))?;
    let expected = count
        .checked_mul(4)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| ReprError::Format("declared shape overflows".into()))?;
    if bytes.len() != expected {
        return Err(ReprError::Format(format!(
            "header declares {layers}x{frames}x{hidden} ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let values: Vec<f32> =
        bytes[HEADER_LEN..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let data = Array3::from_shape_vec((layers, frames, hidden), values)
        .map_err(|e| ReprError::Format(e.to_string()))?;
    TensorStack::new(data, frame_rate_hz)
}

fn check_pairing(stack: &TensorStack, manifest: &ModelManifest) -> Result<(), ReprError> {
    if manifest.num_blocks + 1 != stack.num_layers_plus_1() {
        return Err(ReprError::Shape(format!(
            "manifest declares {} blocks, so the stack needs {} layers, got {}",
            manifest.num_blocks,
            manifest.num_blocks + 1,
            stack.num_layers_plus_1()
        )));
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReprError> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| ReprError::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| ReprError::io(&tmp, e))?;
    file.sync_all().map_err(|e| ReprError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| ReprError::io(path, e))
}

/// Writes `stack` as REPR1 at `path` and the manifest as `<stem>.manifest.json`.
pub fn write_stack(
    stack: &TensorStack,
    manifest: &ModelManifest,
    path: impl AsRef<Path>,
) -> Result<(), ReprError> {
    let path = path.as_ref();
    check_pairing(stack, manifest)?;
    manifest.check()?;
    write_atomic(path, &encode(stack))?;
    let json = serde_json::to_vec_pretty(manifest).map_err(|e| ReprError::Data(e.to_string()))?;
    write_atomic(&manifest_path(path), &json)
}

/// Reads a REPR1 file and its sidecar manifest.
pub fn read_stack(path: impl AsRef<Path>) -> Result<(TensorStack, ModelManifest), ReprError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| ReprError::io(path, e))?;
    let manifest = ModelManifest::load(manifest_path(path))?;
    let stack = decode(&bytes, manifest.frame_rate_hz)?;
    check_pairing(&stack, &manifest)?;
    Ok((stack, manifest))
}

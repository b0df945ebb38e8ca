use std::io::Write;
use std::path::Path;

use crate::error::{Result, ShredError};

/// Viridis samples at 0, 1/4, 1/2, 3/4 and 1; the 256-entry map
/// interpolates linearly between them.
const ANCHORS: [[u8; 3]; 5] = [
    [0x44, 0x01, 0x54],
    [0x3b, 0x52, 0x8b],
    [0x21, 0x91, 0x8c],
    [0x5e, 0xc9, 0x62],
    [0xfd, 0xe7, 0x25],
];

const GAP: usize = 2;
const GAP_COLOR: [u8; 3] = [255, 255, 255];

pub fn colormap() -> [[u8; 3]; 256] {
    let mut map = [[0u8; 3]; 256];
    for (i, entry) in map.iter_mut().enumerate() {
        let pos = i as f64 / 255.0 * 4.0;
        let seg = (pos.floor() as usize).min(3);
        let frac = pos - seg as f64;
        for c in 0..3 {
            let a = ANCHORS[seg][c] as f64;
            let b = ANCHORS[seg + 1][c] as f64;
            entry[c] = (a + frac * (b - a)).round() as u8;
        }
    }
    map
}

/// Panel geometry: the first grid axis runs down, the remaining axes are
/// flattened across. Each node is drawn as a `scale × scale` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriptychLayout {
    pub rows: usize,
    pub cols: usize,
    pub scale: usize,
}

impl TriptychLayout {
    pub fn for_grid(shape: &[usize], scale: usize) -> Self {
        let (rows, cols) = match shape {
            [n] => (1, *n),
            [first, rest @ ..] => (*first, rest.iter().product()),
            [] => (0, 0),
        };
        TriptychLayout {
            rows,
            cols,
            scale: scale.max(1),
        }
    }

    pub fn width(&self) -> usize {
        3 * self.cols * self.scale + 2 * GAP
    }

    pub fn height(&self) -> usize {
        self.rows * self.scale
    }
}

fn shade(map: &[[u8; 3]; 256], v: f64, lo: f64, hi: f64) -> [u8; 3] {
    let t = if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    map[(t * 255.0).round() as usize]
}

/// Writes ground truth, reconstruction and absolute error side by side as a
/// binary PPM. Truth and reconstruction share one color range; the error
/// panel spans `[0, max error]`.
pub fn write_triptych(path: &Path, truth: &[f64], recon: &[f64], layout: TriptychLayout) -> Result<()> {
    let n = layout.rows * layout.cols;
    if truth.len() != n || recon.len() != n || n == 0 {
        return Err(ShredError::Shape(format!(
            "triptych of {}x{} needs {n} values, got {} and {}",
            layout.rows,
            layout.cols,
            truth.len(),
            recon.len()
        )));
    }
    let map = colormap();
    let lo = truth.iter().chain(recon).copied().fold(f64::INFINITY, f64::min);
    let hi = truth.iter().chain(recon).copied().fold(f64::NEG_INFINITY, f64::max);
    let err: Vec<f64> = truth.iter().zip(recon).map(|(a, b)| (a - b).abs()).collect();
    let err_hi = err.iter().copied().fold(0.0, f64::max);

    let (w, h) = (layout.width(), layout.height());
    let mut pixels = Vec::with_capacity(w * h * 3);
    let panel_w = layout.cols * layout.scale;
    for y in 0..h {
        let r = y / layout.scale;
        for x in 0..w {
            let panel = x / (panel_w + GAP);
            let px = x % (panel_w + GAP);
            let rgb = if px >= panel_w {
                GAP_COLOR
            } else {
                let node = r * layout.cols + px / layout.scale;
                match panel {
                    0 => shade(&map, truth[node], lo, hi),
                    1 => shade(&map, recon[node], lo, hi),
                    _ => shade(&map, err[node], 0.0, err_hi),
                }
            };
            pixels.extend_from_slice(&rgb);
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(file, "P6\n{w} {h}\n255\n")?;
    file.write_all(&pixels)?;
    file.flush()?;
    Ok(())
}

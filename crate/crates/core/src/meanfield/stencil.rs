use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Disk-average stencil on a periodic `m × m` grid: every cell whose center
/// lies strictly within `r` of the target cell center, equally weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskStencil {
    m: usize,
    offsets: Vec<(i32, i32)>,
    weight: f64,
}

impl DiskStencil {
    pub fn new(m: usize, r: f64) -> Self {
        let reach = r * m as f64;
        let k = reach.ceil() as i32;
        let mut offsets = Vec::new();
        for dj in -k..=k {
            for di in -k..=k {
                if ((di * di + dj * dj) as f64) < reach * reach {
                    offsets.push((di, dj));
                }
            }
        }
        let weight = 1.0 / offsets.len() as f64;
        DiskStencil { m, offsets, weight }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// `(di, dj, weight)` triples; the weights sum to one.
    pub fn entries(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        self.offsets.iter().map(move |&(di, dj)| (di, dj, self.weight))
    }
}

/// Direct stencil sum: `μ(i,j) = Σ w · s(i+di, j+dj)` with periodic wrap.
/// Cost is `m² × |stencil|`.
pub fn disk_average(s: &[f64], stencil: &DiskStencil) -> Vec<f64> {
    let m = stencil.m;
    assert_eq!(s.len(), m * m, "field and stencil disagree on grid size");
    let mi = m as i32;
    let mut out = vec![0.0; m * m];
    // offsets reduced to [0, m) once
    let wrapped: Vec<(usize, usize)> = stencil
        .offsets
        .iter()
        .map(|&(di, dj)| (di.rem_euclid(mi) as usize, dj.rem_euclid(mi) as usize))
        .collect();
    for j in 0..m {
        for i in 0..m {
            let mut acc = 0.0;
            for &(di, dj) in &wrapped {
                let ii = if i + di >= m { i + di - m } else { i + di };
                let jj = if j + dj >= m { j + dj - m } else { j + dj };
                acc += s[jj * m + ii];
            }
            out[j * m + i] = acc * stencil.weight;
        }
    }
    out
}

/// Same average computed as a circular convolution through 2D FFTs.
pub struct SpectralAverager {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel: Vec<Complex64>,
    buf: Vec<Complex64>,
    tmp: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralAverager {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralAverager").field("m", &self.m).finish()
    }
}

impl SpectralAverager {
    pub fn new(stencil: &DiskStencil) -> Self {
        let m = stencil.m;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let mut avg = SpectralAverager {
            m,
            forward,
            inverse,
            kernel: vec![Complex64::new(0.0, 0.0); m * m],
            buf: vec![Complex64::new(0.0, 0.0); m * m],
            tmp: vec![Complex64::new(0.0, 0.0); m * m],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        };
        let mi = m as i32;
        let mut kernel = vec![Complex64::new(0.0, 0.0); m * m];
        for (di, dj, w) in stencil.entries() {
            let k = dj.rem_euclid(mi) as usize * m + di.rem_euclid(mi) as usize;
            kernel[k].re += w;
        }
        avg.forward_transform(&mut kernel);
        // fold in the 1/m² normalization of the inverse transform
        let norm = 1.0 / (m * m) as f64;
        for c in &mut kernel {
            *c *= norm;
        }
        avg.kernel = kernel;
        avg
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Rows, transpose, rows: the spectrum is left in transposed layout.
    fn forward_transform(&mut self, data: &mut Vec<Complex64>) {
        self.forward.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.tmp, self.m);
        self.forward.process_with_scratch(&mut self.tmp, &mut self.scratch);
        std::mem::swap(data, &mut self.tmp);
    }

    fn inverse_transform(&mut self, data: &mut Vec<Complex64>) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.tmp, self.m);
        self.inverse.process_with_scratch(&mut self.tmp, &mut self.scratch);
        std::mem::swap(data, &mut self.tmp);
    }

    pub fn apply(&mut self, s: &[f64], out: &mut [f64]) {
        let n = self.m * self.m;
        assert_eq!(s.len(), n);
        assert_eq!(out.len(), n);
        let mut buf = std::mem::take(&mut self.buf);
        for (b, &v) in buf.iter_mut().zip(s) {
            *b = Complex64::new(v, 0.0);
        }
        self.forward_transform(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= *k;
        }
        self.inverse_transform(&mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re;
        }
        self.buf = buf;
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    const BLOCK: usize = 32;
    for jb in (0..m).step_by(BLOCK) {
        for ib in (0..m).step_by(BLOCK) {
            for j in jb..(jb + BLOCK).min(m) {
                for i in ib..(ib + BLOCK).min(m) {
                    dst[i * m + j] = src[j * m + i];
                }
            }
        }
    }
}

/// Disk averaging by either route.
#[derive(Debug)]
pub enum Averager {
    Direct(DiskStencil),
    Spectral(Box<SpectralAverager>),
}

/// Which averaging route a solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convolution {
    Direct,
    #[default]
    Spectral,
}

impl Averager {
    pub fn new(m: usize, r: f64, kind: Convolution) -> Self {
        let stencil = DiskStencil::new(m, r);
        match kind {
            Convolution::Direct => Averager::Direct(stencil),
            Convolution::Spectral => Averager::Spectral(Box::new(SpectralAverager::new(&stencil))),
        }
    }

    pub fn apply(&mut self, s: &[f64], out: &mut [f64]) {
        match self {
            Averager::Direct(st) => out.copy_from_slice(&disk_average(s, st)),
            Averager::Spectral(sp) => sp.apply(s, out),
        }
    }
}

//! Shared-trunk neural parameterization of the transformed pressure and the
//! velocity, with Fourier-feature input lifting and exact derivatives.
//!
//! Spatial derivatives are obtained by forward tangent propagation (one tangent
//! column per coordinate, nd <= 3); parameter gradients by a reverse sweep
//! through the stored forward state, including the tangent recurrence. Both are
//! exact up to floating point, no finite differences anywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    /// (sigma, sigma', sigma'') at z.
    #[inline]
    fn eval(&self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            Activation::Relu => {
                if z > 0.0 {
                    (z, 1.0, 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
        }
    }
}

/// Architecture description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Hidden layer count L >= 1.
    pub depth: usize,
    /// Neurons per hidden layer m >= 1.
    pub width: usize,
    /// Fourier frequencies omega_1..omega_nf (possibly empty).
    pub frequencies: Vec<f64>,
    pub activation: Activation,
    /// Spatial dimension, 2 or 3.
    pub nd: usize,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 || self.width < 1 {
            return Err(Error::Config("network depth and width must be >= 1".into()));
        }
        if !(self.nd == 2 || self.nd == 3) {
            return Err(Error::Config(format!("nd must be 2 or 3, got {}", self.nd)));
        }
        if self.frequencies.iter().any(|&w| w <= 0.0) {
            return Err(Error::Config("Fourier frequencies must be > 0".into()));
        }
        Ok(())
    }

    /// Default frequency ladder `omega_k = k*pi/ell` for a domain with
    /// bounding-box diagonal `ell`.
    pub fn default_frequencies(n_f: usize, diagonal: f64) -> Vec<f64> {
        (1..=n_f)
            .map(|k| k as f64 * std::f64::consts::PI / diagonal)
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.nd * (1 + 2 * self.frequencies.len())
    }
}

/// Network outputs and exact spatial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEval {
    /// Transformed pressure.
    pub p: f64,
    /// Velocity (first nd components).
    pub u: [f64; 3],
    pub grad_p: [f64; 3],
    pub div_u: f64,
}

/// Seed vector for the reverse sweep: the partial derivatives of some scalar
/// with respect to each [`FieldEval`] component.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldSensitivity {
    pub d_p: f64,
    pub d_u: [f64; 3],
    pub d_grad_p: [f64; 3],
    pub d_div_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Weight,
    Bias,
}

/// One contiguous block of the flat parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeEntry {
    /// "trunk<l>", "head_p", or "head_u".
    pub layer: String,
    pub kind: ParamKind,
    pub start: usize,
    pub len: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Flat trainable parameters plus their shape map.
#[derive(Debug, Clone)]
pub struct ParameterVector {
    pub data: Vec<f64>,
    pub shape: Vec<ShapeEntry>,
}

struct LayerLayout {
    w_off: usize,
    b_off: usize,
    rows: usize,
    cols: usize,
}

/// Shared-trunk network: `depth` hidden layers of `width` neurons over the
/// Fourier-lifted input, a scalar affine head for P and an `nd`-vector affine
/// head for u.
pub struct Network {
    pub config: NetworkConfig,
    trunk: Vec<LayerLayout>,
    head_p: LayerLayout,
    head_u: LayerLayout,
    n_params: usize,
}

impl Network {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut off = 0usize;
        let mut trunk = Vec::with_capacity(config.depth);
        let mut in_dim = config.input_dim();
        for _ in 0..config.depth {
            let rows = config.width;
            let layout = LayerLayout {
                w_off: off,
                b_off: off + rows * in_dim,
                rows,
                cols: in_dim,
            };
            off = layout.b_off + rows;
            trunk.push(layout);
            in_dim = config.width;
        }
        let head_p = LayerLayout {
            w_off: off,
            b_off: off + config.width,
            rows: 1,
            cols: config.width,
        };
        off = head_p.b_off + 1;
        let head_u = LayerLayout {
            w_off: off,
            b_off: off + config.nd * config.width,
            rows: config.nd,
            cols: config.width,
        };
        off = head_u.b_off + config.nd;
        Ok(Network {
            config,
            trunk,
            head_p,
            head_u,
            n_params: off,
        })
    }

    pub fn param_count(&self) -> usize {
        self.n_params
    }

    pub fn shape_map(&self) -> Vec<ShapeEntry> {
        let mut out = Vec::new();
        let mut push = |layer: &str, l: &LayerLayout| {
            out.push(ShapeEntry {
                layer: layer.to_string(),
                kind: ParamKind::Weight,
                start: l.w_off,
                len: l.rows * l.cols,
                rows: l.rows,
                cols: l.cols,
            });
            out.push(ShapeEntry {
                layer: layer.to_string(),
                kind: ParamKind::Bias,
                start: l.b_off,
                len: l.rows,
                rows: l.rows,
                cols: 1,
            });
        };
        for (i, l) in self.trunk.iter().enumerate() {
            push(&format!("trunk{i}"), l);
        }
        push("head_p", &self.head_p);
        push("head_u", &self.head_u);
        out
    }

    /// Fan-in scaled uniform weights, zero biases; deterministic per seed.
    pub fn init_parameters(&self, seed: u64) -> ParameterVector {
        let mut data = vec![0.0; self.n_params];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |l: &LayerLayout, data: &mut Vec<f64>| {
            let bound = (6.0 / (l.cols + l.rows) as f64).sqrt();
            for w in &mut data[l.w_off..l.w_off + l.rows * l.cols] {
                *w = (rng.gen::<f64>() * 2.0 - 1.0) * bound;
            }
        };
        for l in &self.trunk {
            fill(l, &mut data);
        }
        fill(&self.head_p, &mut data);
        fill(&self.head_u, &mut data);
        ParameterVector {
            data,
            shape: self.shape_map(),
        }
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.n_params,
                theta.len()
            )));
        }
        Ok(())
    }

    pub fn workspace(&self) -> Workspace {
        let nd = self.config.nd;
        let m = self.config.width;
        let input = self.config.input_dim();
        Workspace {
            phi: vec![0.0; input],
            phi_jac: vec![0.0; input * nd],
            a: (0..self.config.depth).map(|_| vec![0.0; m]).collect(),
            z: (0..self.config.depth).map(|_| vec![0.0; m]).collect(),
            ja: (0..self.config.depth).map(|_| vec![0.0; m * nd]).collect(),
            jz: (0..self.config.depth).map(|_| vec![0.0; m * nd]).collect(),
            abar: vec![0.0; m],
            jabar: vec![0.0; m * nd],
            zbar: vec![0.0; m],
            jzbar: vec![0.0; m * nd],
            abar_prev: vec![0.0; m],
            jabar_prev: vec![0.0; m * nd],
        }
    }

    fn lift(&self, x: &Point, ws: &mut Workspace) {
        let nd = self.config.nd;
        for i in 0..nd {
            ws.phi[i] = x[i];
        }
        for e in ws.phi_jac.iter_mut() {
            *e = 0.0;
        }
        for i in 0..nd {
            ws.phi_jac[i * nd + i] = 1.0;
        }
        for (k, &w) in self.config.frequencies.iter().enumerate() {
            let base = nd * (1 + 2 * k);
            for i in 0..nd {
                let (s, c) = (w * x[i]).sin_cos();
                ws.phi[base + i] = s;
                ws.phi[base + nd + i] = c;
                ws.phi_jac[(base + i) * nd + i] = w * c;
                ws.phi_jac[(base + nd + i) * nd + i] = -w * s;
            }
        }
    }

    /// Forward pass storing activations and spatial tangents in `ws`.
    /// The stored state is consumed by [`Network::backprop`].
    pub fn forward_with_spatial_derivs(&self, theta: &[f64], x: &Point, ws: &mut Workspace) -> FieldEval {
        debug_assert_eq!(theta.len(), self.n_params);
        let nd = self.config.nd;
        self.lift(x, ws);
        for (l, layout) in self.trunk.iter().enumerate() {
            let (a_prev_part, a_curr_part) = ws.a.split_at_mut(l);
            let (ja_prev_part, ja_curr_part) = ws.ja.split_at_mut(l);
            let (prev_a, prev_ja): (&[f64], &[f64]) = if l == 0 {
                (&ws.phi, &ws.phi_jac)
            } else {
                (&a_prev_part[l - 1], &ja_prev_part[l - 1])
            };
            let a_l = &mut a_curr_part[0];
            let ja_l = &mut ja_curr_part[0];
            let z_l = &mut ws.z[l];
            let jz_l = &mut ws.jz[l];
            let w = &theta[layout.w_off..layout.w_off + layout.rows * layout.cols];
            let b = &theta[layout.b_off..layout.b_off + layout.rows];
            let cols = layout.cols;
            for j in 0..layout.rows {
                let wrow = &w[j * cols..(j + 1) * cols];
                let mut s = b[j];
                let mut t = [0.0f64; 3];
                for (k, &wv) in wrow.iter().enumerate() {
                    s += wv * prev_a[k];
                    for (ti, t_slot) in t.iter_mut().enumerate().take(nd) {
                        *t_slot += wv * prev_ja[k * nd + ti];
                    }
                }
                z_l[j] = s;
                let (act, d, _) = self.config.activation.eval(s);
                a_l[j] = act;
                for i in 0..nd {
                    jz_l[j * nd + i] = t[i];
                    ja_l[j * nd + i] = d * t[i];
                }
            }
        }
        self.heads(theta, ws)
    }

    fn heads(&self, theta: &[f64], ws: &Workspace) -> FieldEval {
        let nd = self.config.nd;
        let m = self.config.width;
        let a = &ws.a[self.config.depth - 1];
        let ja = &ws.ja[self.config.depth - 1];
        let wp = &theta[self.head_p.w_off..self.head_p.w_off + m];
        let mut p = theta[self.head_p.b_off];
        let mut grad_p = [0.0f64; 3];
        for j in 0..m {
            p += wp[j] * a[j];
            for i in 0..nd {
                grad_p[i] += wp[j] * ja[j * nd + i];
            }
        }
        let wu = &theta[self.head_u.w_off..self.head_u.w_off + nd * m];
        let bu = &theta[self.head_u.b_off..self.head_u.b_off + nd];
        let mut u = [0.0f64; 3];
        let mut div_u = 0.0;
        for i in 0..nd {
            let row = &wu[i * m..(i + 1) * m];
            let mut s = bu[i];
            for j in 0..m {
                s += row[j] * a[j];
                // only the diagonal of the velocity Jacobian enters div u
            }
            for j in 0..m {
                div_u += row[j] * ja[j * nd + i];
            }
            u[i] = s;
        }
        FieldEval { p, u, grad_p, div_u }
    }

    /// Plain forward evaluation (no derivatives).
    pub fn forward(&self, theta: &[f64], x: &Point, ws: &mut Workspace) -> (f64, [f64; 3]) {
        let eval = self.forward_with_spatial_derivs(theta, x, ws);
        (eval.p, eval.u)
    }

    /// Reverse sweep through the state stored by the last call to
    /// [`Network::forward_with_spatial_derivs`] on `ws`. Accumulates
    /// `d(sens . FieldEval)/d theta` into `grad` (same length as theta).
    pub fn backprop(&self, theta: &[f64], ws: &mut Workspace, sens: &FieldSensitivity, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.n_params);
        let nd = self.config.nd;
        let m = self.config.width;
        let last = self.config.depth - 1;

        // heads
        {
            let a = &ws.a[last];
            let ja = &ws.ja[last];
            let wp = &theta[self.head_p.w_off..self.head_p.w_off + m];
            let wu = &theta[self.head_u.w_off..self.head_u.w_off + nd * m];
            for j in 0..m {
                let mut ab = sens.d_p * wp[j];
                let mut gwp = sens.d_p * a[j];
                for i in 0..nd {
                    gwp += ws.ja[last][j * nd + i] * sens.d_grad_p[i];
                }
                let mut jb = [0.0f64; 3];
                for i in 0..nd {
                    jb[i] = wp[j] * sens.d_grad_p[i] + sens.d_div_u * wu[i * m + j];
                    ab += sens.d_u[i] * wu[i * m + j];
                }
                ws.abar[j] = ab;
                for i in 0..nd {
                    ws.jabar[j * nd + i] = jb[i];
                }
                grad[self.head_p.w_off + j] += gwp;
            }
            grad[self.head_p.b_off] += sens.d_p;
            for i in 0..nd {
                let row = self.head_u.w_off + i * m;
                for j in 0..m {
                    grad[row + j] += sens.d_u[i] * a[j] + sens.d_div_u * ja[j * nd + i];
                }
                grad[self.head_u.b_off + i] += sens.d_u[i];
            }
        }

        // trunk, last layer down to the first
        for l in (0..self.config.depth).rev() {
            let layout = &self.trunk[l];
            let cols = layout.cols;
            let w = &theta[layout.w_off..layout.w_off + layout.rows * cols];
            // zbar and jzbar from the activation rule a = sigma(z), A = sigma'(z) Z
            for j in 0..layout.rows {
                let (_, d, dd) = self.config.activation.eval(ws.z[l][j]);
                let mut curv = 0.0;
                for i in 0..nd {
                    let jzb = d * ws.jabar[j * nd + i];
                    curv += ws.jz[l][j * nd + i] * ws.jabar[j * nd + i];
                    ws.jzbar[j * nd + i] = jzb;
                }
                ws.zbar[j] = d * ws.abar[j] + dd * curv;
            }
            let (prev_a, prev_ja): (&[f64], &[f64]) = if l == 0 {
                (&ws.phi, &ws.phi_jac)
            } else {
                (&ws.a[l - 1], &ws.ja[l - 1])
            };
            // parameter gradients for this layer
            for j in 0..layout.rows {
                let zb = ws.zbar[j];
                let grow = &mut grad[layout.w_off + j * cols..layout.w_off + (j + 1) * cols];
                match nd {
                    2 => {
                        let (jb0, jb1) = (ws.jzbar[j * nd], ws.jzbar[j * nd + 1]);
                        for (k, g) in grow.iter_mut().enumerate() {
                            *g += zb * prev_a[k] + jb0 * prev_ja[k * nd] + jb1 * prev_ja[k * nd + 1];
                        }
                    }
                    _ => {
                        let (jb0, jb1, jb2) =
                            (ws.jzbar[j * nd], ws.jzbar[j * nd + 1], ws.jzbar[j * nd + 2]);
                        for (k, g) in grow.iter_mut().enumerate() {
                            *g += zb * prev_a[k]
                                + jb0 * prev_ja[k * nd]
                                + jb1 * prev_ja[k * nd + 1]
                                + jb2 * prev_ja[k * nd + 2];
                        }
                    }
                }
                grad[layout.b_off + j] += zb;
            }
            if l == 0 {
                break; // the lifted input does not depend on theta
            }
            // propagate adjoints to the previous layer
            for k in 0..cols {
                ws.abar_prev[k] = 0.0;
                for i in 0..nd {
                    ws.jabar_prev[k * nd + i] = 0.0;
                }
            }
            for j in 0..layout.rows {
                let zb = ws.zbar[j];
                let wrow = &w[j * cols..(j + 1) * cols];
                for (k, &wv) in wrow.iter().enumerate() {
                    ws.abar_prev[k] += wv * zb;
                    for i in 0..nd {
                        ws.jabar_prev[k * nd + i] += wv * ws.jzbar[j * nd + i];
                    }
                }
            }
            std::mem::swap(&mut ws.abar, &mut ws.abar_prev);
            std::mem::swap(&mut ws.jabar, &mut ws.jabar_prev);
        }
    }
}

/// Reusable per-thread evaluation buffers; holds the forward state consumed by
/// the reverse sweep.
pub struct Workspace {
    phi: Vec<f64>,
    phi_jac: Vec<f64>,
    a: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    ja: Vec<Vec<f64>>,
    jz: Vec<Vec<f64>>,
    abar: Vec<f64>,
    jabar: Vec<f64>,
    zbar: Vec<f64>,
    jzbar: Vec<f64>,
    abar_prev: Vec<f64>,
    jabar_prev: Vec<f64>,
}

/// Field evaluations exposed to a taped functional.
pub struct TapedField {
    pub p: Var,
    pub u: [Var; 3],
    pub grad_p: [Var; 3],
    pub div_u: Var,
}

/// Exact gradient of an arbitrary scalar functional of the network fields.
///
/// `f` receives one [`TapedField`] per evaluation point and must return the
/// functional value as a tape variable; any finite composition of field
/// components, arithmetic, and the tape's smooth scalar maps is admissible.
/// Returns the functional value and writes its parameter gradient into `grad`.
pub fn functional_gradient<F>(
    network: &Network,
    theta: &[f64],
    points: &[Point],
    f: F,
    grad: &mut [f64],
) -> Result<f64>
where
    F: FnOnce(&mut Tape, &[TapedField]) -> Var,
{
    network.check_theta(theta)?;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut ws = network.workspace();
    let evals: Vec<FieldEval> = points
        .iter()
        .map(|x| network.forward_with_spatial_derivs(theta, x, &mut ws))
        .collect();
    let mut tape = Tape::new();
    let taped: Vec<TapedField> = evals
        .iter()
        .map(|e| TapedField {
            p: tape.leaf(e.p),
            u: [tape.leaf(e.u[0]), tape.leaf(e.u[1]), tape.leaf(e.u[2])],
            grad_p: [
                tape.leaf(e.grad_p[0]),
                tape.leaf(e.grad_p[1]),
                tape.leaf(e.grad_p[2]),
            ],
            div_u: tape.leaf(e.div_u),
        })
        .collect();
    let out = f(&mut tape, &taped);
    let adj = tape.backward(out);
    for (x, t) in points.iter().zip(&taped) {
        let sens = FieldSensitivity {
            d_p: adj[t.p.0 as usize],
            d_u: [
                adj[t.u[0].0 as usize],
                adj[t.u[1].0 as usize],
                adj[t.u[2].0 as usize],
            ],
            d_grad_p: [
                adj[t.grad_p[0].0 as usize],
                adj[t.grad_p[1].0 as usize],
                adj[t.grad_p[2].0 as usize],
            ],
            d_div_u: adj[t.div_u.0 as usize],
        };
        // redo the forward pass to restore the stored state for this point
        network.forward_with_spatial_derivs(theta, x, &mut ws);
        network.backprop(theta, &mut ws, &sens, grad);
    }
    Ok(tape.val(out))
}

/// Fourier-feature lifting of a point (standalone helper mirroring the
/// network's internal input map).
pub fn fourier_features(x: &Point, config: &NetworkConfig) -> Vec<f64> {
    let nd = config.nd;
    let mut out = vec![0.0; config.input_dim()];
    out[..nd].copy_from_slice(&x[..nd]);
    for (k, &w) in config.frequencies.iter().enumerate() {
        let base = nd * (1 + 2 * k);
        for i in 0..nd {
            out[base + i] = (w * x[i]).sin();
            out[base + nd + i] = (w * x[i]).cos();
        }
    }
    out
}

// --- checkpoint serialization (.dlsp) ------------------------------------

#[derive(Serialize, Deserialize)]
struct DlspHeader {
    config: NetworkConfig,
    shape: Vec<ShapeEntry>,
    param_count: usize,
}

/// Write parameters as a JSON shape-map header followed by the flat
/// little-endian f64 array. Layout: u64-LE header length, header JSON, data.
pub fn save_checkpoint(path: &std::path::Path, network: &Network, params: &ParameterVector) -> Result<()> {
    let header = DlspHeader {
        config: network.config.clone(),
        shape: params.shape.clone(),
        param_count: params.data.len(),
    };
    let hjson = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(8 + hjson.len() + params.data.len() * 8);
    bytes.extend_from_slice(&(hjson.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&hjson);
    for v in &params.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Read a `.dlsp` checkpoint back into a network and parameter vector.
pub fn load_checkpoint(path: &std::path::Path) -> Result<(Network, ParameterVector)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 {
        return Err(Error::Config("truncated checkpoint".into()));
    }
    let hlen = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let header: DlspHeader = serde_json::from_slice(&bytes[8..8 + hlen])?;
    let data_bytes = &bytes[8 + hlen..];
    if data_bytes.len() != header.param_count * 8 {
        return Err(Error::Config("checkpoint data length mismatch".into()));
    }
    let data: Vec<f64> = data_bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let network = Network::new(header.config)?;
    network.check_theta(&data)?;
    Ok((
        network,
        ParameterVector {
            data,
            shape: header.shape,
        },
    ))
}

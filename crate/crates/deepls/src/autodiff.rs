//! Minimal reverse-mode tape for scalar functionals.
//!
//! Used to differentiate arbitrary smooth compositions of field evaluations
//! (see [`crate::network::functional_gradient`]); the training hot path uses
//! the network's hand-derived backward pass instead.

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) u32);

#[derive(Clone, Copy)]
struct Node {
    val: f64,
    parents: [u32; 2],
    partials: [f64; 2],
    n_parents: u8,
}

/// Recording tape. Nodes are appended in evaluation order; `backward` runs a
/// single reverse sweep.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn val(&self, v: Var) -> f64 {
        self.nodes[v.0 as usize].val
    }

    fn push(&mut self, val: f64, parents: [u32; 2], partials: [f64; 2], n: u8) -> Var {
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node {
            val,
            parents,
            partials,
            n_parents: n,
        });
        Var(idx)
    }

    /// Leaf variable (an input the functional is differentiated against).
    pub fn leaf(&mut self, val: f64) -> Var {
        self.push(val, [0; 2], [0.0; 2], 0)
    }

    /// Constant: recorded as a leaf whose adjoint is simply never read.
    pub fn constant(&mut self, val: f64) -> Var {
        self.leaf(val)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.push(self.val(a) + self.val(b), [a.0, b.0], [1.0, 1.0], 2)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.push(self.val(a) - self.val(b), [a.0, b.0], [1.0, -1.0], 2)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.val(a), self.val(b));
        self.push(va * vb, [a.0, b.0], [vb, va], 2)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.val(a), self.val(b));
        self.push(va / vb, [a.0, b.0], [1.0 / vb, -va / (vb * vb)], 2)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.push(-self.val(a), [a.0, 0], [-1.0, 0.0], 1)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.push(self.val(a) * c, [a.0, 0], [c, 0.0], 1)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        self.push(self.val(a) + c, [a.0, 0], [1.0, 0.0], 1)
    }

    pub fn sq(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v * v, [a.0, 0], [2.0 * v, 0.0], 1)
    }

    pub fn powi(&mut self, a: Var, n: i32) -> Var {
        let v = self.val(a);
        self.push(v.powi(n), [a.0, 0], [n as f64 * v.powi(n - 1), 0.0], 1)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let e = self.val(a).exp();
        self.push(e, [a.0, 0], [e, 0.0], 1)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v.ln(), [a.0, 0], [1.0 / v, 0.0], 1)
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let s = self.val(a).sqrt();
        self.push(s, [a.0, 0], [0.5 / s, 0.0], 1)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.val(a).tanh();
        self.push(t, [a.0, 0], [1.0 - t * t, 0.0], 1)
    }

    pub fn sin(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v.sin(), [a.0, 0], [v.cos(), 0.0], 1)
    }

    pub fn cos(&mut self, a: Var) -> Var {
        let v = self.val(a);
        self.push(v.cos(), [a.0, 0], [-v.sin(), 0.0], 1)
    }

    /// Sum of a slice of variables.
    pub fn sum(&mut self, vars: &[Var]) -> Var {
        match vars {
            [] => self.constant(0.0),
            [v] => *v,
            _ => {
                let mut acc = self.add(vars[0], vars[1]);
                for v in &vars[2..] {
                    acc = self.add(acc, *v);
                }
                acc
            }
        }
    }

    /// Adjoints of every node with respect to `output`.
    pub fn backward(&self, output: Var) -> Vec<f64> {
        let mut adj = vec![0.0; self.nodes.len()];
        adj[output.0 as usize] = 1.0;
        for i in (0..self.nodes.len()).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = &self.nodes[i];
            for k in 0..node.n_parents as usize {
                adj[node.parents[k] as usize] += a * node.partials[k];
            }
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_product_and_chain() {
        // f(x, y) = tanh(x*y) + x^2
        let mut t = Tape::new();
        let (x0, y0) = (0.7, -0.4);
        let x = t.leaf(x0);
        let y = t.leaf(y0);
        let xy = t.mul(x, y);
        let th = t.tanh(xy);
        let x2 = t.sq(x);
        let f = t.add(th, x2);
        let adj = t.backward(f);
        let sech2 = 1.0 - (x0 * y0).tanh().powi(2);
        assert!((adj[x.0 as usize] - (sech2 * y0 + 2.0 * x0)).abs() < 1e-14);
        assert!((adj[y.0 as usize] - sech2 * x0).abs() < 1e-14);
    }

    #[test]
    fn finite_difference_agreement() {
        let eval = |x: f64| -> (f64, f64) {
            let mut t = Tape::new();
            let v = t.leaf(x);
            let s = t.sin(v);
            let e = t.exp(s);
            let l = t.ln(e); // = sin(x)
            let q = t.mul(l, e);
            let adj = t.backward(q);
            (t.val(q), adj[v.0 as usize])
        };
        let x = 0.9;
        let h = 1e-6;
        let (_, g) = eval(x);
        let fd = (eval(x + h).0 - eval(x - h).0) / (2.0 * h);
        assert!((g - fd).abs() < 1e-8 * (1.0 + fd.abs()));
    }
}

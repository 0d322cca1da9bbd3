//! Truncated Taylor series ("jets") for exact derivatives of the bump.

/// Coefficients `c[r] = f^{(r)}(s₀) / r!` up to a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Jet(c)
    }

    /// The identity function at `s0`.
    pub fn variable(s0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = s0;
        if order > 0 {
            c[1] = 1.0;
        }
        Jet(c)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.0.len();
        let mut c = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(c)
    }

    pub fn scale(&self, a: f64) -> Jet {
        Jet(self.0.iter().map(|x| x * a).collect())
    }

    pub fn add_const(&self, a: f64) -> Jet {
        let mut c = self.0.clone();
        c[0] += a;
        Jet(c)
    }

    pub fn recip(&self) -> Jet {
        let n = self.0.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / self.0[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| self.0[i] * r[k - i]).sum();
            r[k] = -s / self.0[0];
        }
        Jet(r)
    }

    pub fn exp(&self) -> Jet {
        let n = self.0.len();
        let mut e = vec![0.0; n];
        e[0] = self.0[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|i| i as f64 * self.0[i] * e[k - i]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    /// `f^{(r)}(s₀)`.
    pub fn derivative(&self, r: usize) -> f64 {
        let fact: f64 = (1..=r).map(|i| i as f64).product();
        self.0.get(r).copied().unwrap_or(0.0) * fact
    }
}

/// Derivatives `ψ^{(r)}(s)`, `r = 0..=order`, of `ψ(s) = exp(−1/(s(1−s)))` on
/// `(0, 1)`, zero outside.
pub fn psi_derivatives(s: f64, order: usize) -> Vec<f64> {
    if s <= 0.0 || s >= 1.0 {
        return vec![0.0; order + 1];
    }
    let x = Jet::variable(s, order);
    let one_minus = x.scale(-1.0).add_const(1.0);
    let g = x.mul(&one_minus).recip().scale(-1.0);
    let e = g.exp();
    (0..=order).map(|r| e.derivative(r)).collect()
}

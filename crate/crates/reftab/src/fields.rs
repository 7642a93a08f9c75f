//! Built-in named fields used by the experiments.

use std::fmt;
use std::str::FromStr;

use reftab_core::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedField {
    /// `1 / (1 + 12.5 (x^2 + y^2))` on the biunit square.
    Runge2d,
    /// `1 / (1 + (25/3) |x|^2)` on the biunit cube.
    Runge3d,
    /// A divergence-free vector field, the curl of [`NamedField::Smooth3d`].
    Curl3d,
    /// `(y sin x e^z, x y sin z, x cos y)`.
    Smooth3d,
}

impl NamedField {
    pub const ALL: [NamedField; 4] = [NamedField::Runge2d, NamedField::Runge3d, NamedField::Curl3d, NamedField::Smooth3d];

    pub fn name(self) -> &'static str {
        match self {
            NamedField::Runge2d => "runge2d",
            NamedField::Runge3d => "runge3d",
            NamedField::Curl3d => "curl3d",
            NamedField::Smooth3d => "smooth3d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            NamedField::Runge2d => 2,
            _ => 3,
        }
    }

    /// Runge function of the given dimension.
    pub fn runge(dim: usize) -> Option<NamedField> {
        match dim {
            2 => Some(NamedField::Runge2d),
            3 => Some(NamedField::Runge3d),
            _ => None,
        }
    }
}

impl fmt::Display for NamedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamedField::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| format!("unknown field {s:?}"))
    }
}

fn runge_coefficient(dim: usize) -> f64 {
    if dim == 2 {
        12.5
    } else {
        25.0 / 3.0
    }
}

impl Field for NamedField {
    fn value_size(&self) -> usize {
        match self {
            NamedField::Runge2d | NamedField::Runge3d => 1,
            _ => 3,
        }
    }

    fn eval(&self, x: &[f64], o: &mut [f64]) {
        match self {
            NamedField::Runge2d | NamedField::Runge3d => {
                let r2: f64 = x.iter().map(|t| t * t).sum();
                o[0] = 1.0 / (1.0 + runge_coefficient(x.len()) * r2);
            }
            NamedField::Curl3d => {
                let (a, b, c) = (x[0], x[1], x[2]);
                o[0] = -a * b.sin() - a * b * c.cos();
                o[1] = b * a.sin() * c.exp() - b.cos();
                o[2] = b * c.sin() - a.sin() * c.exp();
            }
            NamedField::Smooth3d => {
                let (a, b, c) = (x[0], x[1], x[2]);
                o[0] = b * a.sin() * c.exp();
                o[1] = a * b * c.sin();
                o[2] = a * b.cos();
            }
        }
    }

    fn divergence(&self, x: &[f64]) -> Option<f64> {
        match self {
            NamedField::Curl3d => Some(0.0),
            NamedField::Smooth3d => Some(x[1] * x[0].cos() * x[2].exp() + x[0] * x[2].sin()),
            _ => None,
        }
    }

    fn curl(&self, x: &[f64], o: &mut [f64]) -> bool {
        match self {
            NamedField::Smooth3d => {
                NamedField::Curl3d.eval(x, o);
                true
            }
            _ => false,
        }
    }

    fn gradient(&self, x: &[f64], o: &mut [f64]) -> bool {
        match self {
            NamedField::Runge2d | NamedField::Runge3d => {
                let c = runge_coefficient(x.len());
                let r2: f64 = x.iter().map(|t| t * t).sum();
                let f = 1.0 / (1.0 + c * r2);
                for (k, t) in x.iter().enumerate() {
                    o[k] = -2.0 * c * t * f * f;
                }
            }
            NamedField::Curl3d => {
                let (a, b, c) = (x[0], x[1], x[2]);
                let (sa, ca, sb, cb, sc, cc, ec) = (a.sin(), a.cos(), b.sin(), b.cos(), c.sin(), c.cos(), c.exp());
                o.copy_from_slice(&[
                    -sb - b * cc,
                    -a * cb - a * cc,
                    a * b * sc,
                    b * ca * ec,
                    sa * ec + sb,
                    b * sa * ec,
                    -ca * ec,
                    sc,
                    b * cc - sa * ec,
                ]);
            }
            NamedField::Smooth3d => {
                let (a, b, c) = (x[0], x[1], x[2]);
                let (sa, ca, ec) = (a.sin(), a.cos(), c.exp());
                o.copy_from_slice(&[
                    b * ca * ec,
                    sa * ec,
                    b * sa * ec,
                    b * c.sin(),
                    a * c.sin(),
                    a * b * c.cos(),
                    b.cos(),
                    -a * b.sin(),
                    0.0,
                ]);
            }
        }
        true
    }
}

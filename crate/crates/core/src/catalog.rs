//! Built-in hypersurfaces and curved test metrics.

use asc_jets::{parse, ExprAst};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Geometry, MAX_DIM};

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    Plane,
    Sphere { radius: f64 },
    /// `S¹(r) × ℝ^{d−2}`.
    Cylinder { radius: f64 },
    Ellipsoid { axes: [f64; 3] },
    Torus { major: f64, minor: f64 },
    /// `x_d = f(x_1, …, x_{d−1})`.
    Graph { height: ExprAst },
}

/// A hypersurface of Euclidean `ℝ^d` given by a defining function.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    dim: usize,
    kind: SurfaceKind,
}

fn check_dim(d: usize) -> Result<()> {
    if !(3..=MAX_DIM).contains(&d) {
        return Err(Error::UnsupportedDimension { got: d, max: MAX_DIM });
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

impl Surface {
    pub fn plane(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { dim: d, kind: SurfaceKind::Plane })
    }

    pub fn sphere(d: usize, radius: f64) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { dim: d, kind: SurfaceKind::Sphere { radius: positive("radius", radius)? } })
    }

    pub fn cylinder(d: usize, radius: f64) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { dim: d, kind: SurfaceKind::Cylinder { radius: positive("radius", radius)? } })
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<Self> {
        let axes = [positive("a", a)?, positive("b", b)?, positive("c", c)?];
        Ok(Self { dim: 3, kind: SurfaceKind::Ellipsoid { axes } })
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        let (major, minor) = (positive("R", major)?, positive("r", minor)?);
        if minor >= major {
            return Err(Error::Domain(format!("torus needs r < R, got r = {minor}, R = {major}")));
        }
        Ok(Self { dim: 3, kind: SurfaceKind::Torus { major, minor } })
    }

    pub fn graph(d: usize, height: ExprAst) -> Result<Self> {
        check_dim(d)?;
        if height.arity() >= d {
            return Err(Error::Domain(format!("graph height may only use x1..x{}", d - 1)));
        }
        Ok(Self { dim: d, kind: SurfaceKind::Graph { height } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        let d = self.dim;
        match &self.kind {
            SurfaceKind::Plane => format!("plane(d={d})"),
            SurfaceKind::Sphere { radius } => format!("sphere(d={d}, r={radius})"),
            SurfaceKind::Cylinder { radius } => format!("cylinder(d={d}, r={radius})"),
            SurfaceKind::Ellipsoid { axes: [a, b, c] } => format!("ellipsoid({a}, {b}, {c})"),
            SurfaceKind::Torus { major, minor } => format!("torus({major}, {minor})"),
            SurfaceKind::Graph { height } => format!("graph(d={d}, f={height})"),
        }
    }

    pub fn defining_function(&self) -> ExprAst {
        let d = self.dim;
        let sum_sq = |n: usize| (1..=n).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join("+");
        let text = match &self.kind {
            SurfaceKind::Plane => format!("x{d}"),
            SurfaceKind::Sphere { radius } => format!("sqrt({}) - {radius:?}", sum_sq(d)),
            SurfaceKind::Cylinder { radius } => format!("sqrt(x1^2+x2^2) - {radius:?}"),
            SurfaceKind::Ellipsoid { axes: [a, b, c] } => {
                format!("x1^2/{:?} + x2^2/{:?} + x3^2/{:?} - 1", a * a, b * b, c * c)
            }
            SurfaceKind::Torus { major, minor } => {
                format!("sqrt((sqrt(x1^2+x2^2) - {major:?})^2 + x3^2) - {minor:?}")
            }
            SurfaceKind::Graph { height } => {
                return ExprAst::var(d - 1) - height.clone();
            }
        };
        parse(&text).expect("catalog expressions are well formed")
    }

    /// Closed-form value of the obstruction density where one is known.
    pub fn known_obstruction(&self) -> Option<f64> {
        match (&self.kind, self.dim) {
            (SurfaceKind::Plane, _) => Some(0.0),
            (SurfaceKind::Sphere { .. }, 3 | 4) => Some(0.0),
            (SurfaceKind::Cylinder { radius }, 3) => Some(-1.0 / (12.0 * radius.powi(3))),
            (SurfaceKind::Cylinder { radius }, 4) => Some(2.0 / (27.0 * radius.powi(4))),
            _ => None,
        }
    }

    /// A point of the surface from parameters in `[0, 1)^{d−1}`.
    pub fn point_from_params(&self, t: &[f64]) -> Vec<f64> {
        use std::f64::consts::TAU;
        let d = self.dim;
        assert!(t.len() >= d - 1, "need {} parameters", d - 1);
        let centred = |u: f64| 2.0 * u - 1.0;
        match &self.kind {
            SurfaceKind::Plane => {
                let mut p: Vec<f64> = t[..d - 1].iter().map(|&u| centred(u)).collect();
                p.push(0.0);
                p
            }
            SurfaceKind::Sphere { radius } => {
                // Hyperspherical angles, kept away from the coordinate poles.
                let mut p = vec![*radius; d];
                for (i, &u) in t[..d - 1].iter().enumerate() {
                    let angle = if i == d - 2 { TAU * u } else { 0.2 + 2.7 * u };
                    let (s, c) = angle.sin_cos();
                    p[i] *= c;
                    for q in p.iter_mut().skip(i + 1) {
                        *q *= s;
                    }
                }
                p
            }
            SurfaceKind::Cylinder { radius } => {
                let (s, c) = (TAU * t[0]).sin_cos();
                let mut p = vec![radius * c, radius * s];
                p.extend(t[1..d - 1].iter().map(|&u| centred(u)));
                p
            }
            SurfaceKind::Ellipsoid { axes } => {
                let theta = 0.2 + 2.7 * t[0];
                let phi = TAU * t[1];
                let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                (0..3).map(|i| axes[i] * u[i]).collect()
            }
            SurfaceKind::Torus { major, minor } => {
                let (st, ct) = (TAU * t[0]).sin_cos();
                let (sp, cp) = (TAU * t[1]).sin_cos();
                let rho = major + minor * cp;
                vec![rho * ct, rho * st, minor * sp]
            }
            SurfaceKind::Graph { height } => {
                let mut p: Vec<f64> = t[..d - 1].iter().map(|&u| 0.5 * centred(u)).collect();
                p.push(0.0);
                p[d - 1] = height.eval(&p);
                p
            }
        }
    }

    /// `n` reproducible points of the surface.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let t: Vec<f64> = (0..self.dim - 1).map(|_| rng.gen::<f64>()).collect();
                self.point_from_params(&t)
            })
            .collect()
    }
}

/// Default instances of every preset.
pub fn catalog() -> Vec<Surface> {
    let graph3 = parse("0.5*x1^2 - 0.3*x2^2 + 0.2*x1*x2 + 0.1*x1^3").expect("valid");
    let graph4 = parse("0.4*x1^2 - 0.2*x2^2 + 0.3*x3^2 + 0.1*x1*x3 + 0.15*x2^3").expect("valid");
    vec![
        Surface::plane(3).expect("valid"),
        Surface::sphere(3, 1.0).expect("valid"),
        Surface::cylinder(3, 1.0).expect("valid"),
        Surface::ellipsoid(1.0, 1.3, 0.7).expect("valid"),
        Surface::graph(3, graph3).expect("valid"),
        Surface::torus(2.0, 1.0).expect("valid"),
        Surface::sphere(4, 1.0).expect("valid"),
        Surface::cylinder(4, 1.0).expect("valid"),
        Surface::graph(4, graph4).expect("valid"),
    ]
}

/// Names accepted by [`curved_metric`].
pub const CURVED_METRICS: [&str; 3] = ["warped", "conformal", "shear"];

/// Curved metrics used by the identity battery.
pub fn curved_metric(name: &str, d: usize) -> Result<Geometry> {
    check_dim(d)?;
    match name {
        "warped" => {
            let mut comps = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let text = if a == b {
                        format!("1 + 0.2*sin(x{} + 0.5*x{})", (a + 1) % d + 1, (a + 2) % d + 1)
                    } else {
                        format!("0.07*x{}*x{}", a.min(b) + 1, a.max(b) + 1)
                    };
                    comps.push(parse(&text)?);
                }
            }
            Geometry::explicit(d, comps)
        }
        "conformal" => Geometry::conformally_flat(d, parse("exp(0.2*x1 - 0.1*x2*x3)")?),
        "shear" => {
            let mut comps = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let text = match (a, b) {
                        (0, 1) | (1, 0) => "0.15*cos(x3)".to_string(),
                        (x, y) if x == y && x == d - 1 => "1 + 0.1*x1^2".to_string(),
                        (x, y) if x == y => "1".to_string(),
                        _ => "0".to_string(),
                    };
                    comps.push(parse(&text)?);
                }
            }
            Geometry::explicit(d, comps)
        }
        other => Err(Error::Domain(format!("unknown curved metric '{other}'"))),
    }
}

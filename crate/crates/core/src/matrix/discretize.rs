use num_complex::Complex64;

use super::banded::BandedOperator;
use crate::error::{Error, Result};
use crate::shooting::{BoundaryCondition, TruncatedProblem};

/// Smallest accepted number of unknowns.
pub const MIN_UNKNOWNS: usize = 16;

/// Second-order finite differences for a truncated problem with `n` unknowns.
///
/// Cartesian forms use the standard three-point stencil; radial forms use
/// the flux form `−r^{−k}(r^k f′)′` with `k = 1` (2-D) or `k = 2` (3-D).
/// With `regular_origin` the mesh is offset by `h/2` from `r = 0` and the
/// right boundary sits midway between the last node and a ghost node.
/// Robin ends keep the boundary node and eliminate a ghost node through the
/// central-difference normal derivative.
pub fn discretize(p: &TruncatedProblem, n: usize) -> Result<BandedOperator> {
    if n < MIN_UNKNOWNS {
        return Err(Error::MeshTooCoarse(n));
    }
    p.validate()?;
    let len = p.right - p.left;
    let origin = p.left_bc == BoundaryCondition::RegularOrigin;
    let (h, nodes): (f64, Vec<f64>) = if origin {
        let h = len / n as f64;
        (h, (0..n).map(|j| (j as f64 + 0.5) * h).collect())
    } else {
        let dl = matches!(p.left_bc, BoundaryCondition::Dirichlet) as usize;
        let dr = matches!(p.right_bc, BoundaryCondition::Dirichlet) as usize;
        let intervals = n - 1 + dl + dr;
        let h = len / intervals as f64;
        (h, (0..n).map(|j| p.left + (j + dl) as f64 * h).collect())
    };
    let k = p.form.kind.weight_exponent();
    let h2 = h * h;
    // flux weights (r_{j∓1/2}/r_j)^k
    let weight = |x: f64, off: f64| -> f64 {
        if k == 0 {
            1.0
        } else {
            ((x + off) / x).powi(k)
        }
    };
    let mut lower = vec![Complex64::default(); n];
    let mut diag = vec![Complex64::default(); n];
    let mut upper = vec![Complex64::default(); n];
    for (j, &x) in nodes.iter().enumerate() {
        let wl = weight(x, -0.5 * h);
        let wu = weight(x, 0.5 * h);
        lower[j] = Complex64::new(-wl / h2, 0.0);
        upper[j] = Complex64::new(-wu / h2, 0.0);
        let v = p.form.potential_at(x);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFiniteCoefficient(x));
        }
        diag[j] = Complex64::new((wl + wu) / h2, 0.0) + v;
    }
    // left end
    match p.left_bc {
        BoundaryCondition::Dirichlet | BoundaryCondition::RegularOrigin => {}
        BoundaryCondition::Robin { a } => {
            // f_{-1} = f_1 - 2 h a f_0
            let l = lower[0];
            upper[0] += l;
            diag[0] -= l * a * (2.0 * h);
        }
    }
    // right end
    let last = n - 1;
    match (origin, p.right_bc) {
        (false, BoundaryCondition::Dirichlet) => {}
        (false, BoundaryCondition::Robin { a }) => {
            // f_n = f_{n-2} - 2 h a f_{n-1}
            let u = upper[last];
            lower[last] += u;
            diag[last] -= u * a * (2.0 * h);
        }
        (true, bc) => {
            // boundary midway: f_n = γ f_{n-1}
            let gamma = match bc {
                BoundaryCondition::Robin { a } => (1.0 - a * (h / 2.0)) / (1.0 + a * (h / 2.0)),
                _ => Complex64::new(-1.0, 0.0),
            };
            diag[last] += upper[last] * gamma;
        }
        (false, BoundaryCondition::RegularOrigin) => unreachable!("validated"),
    }
    for i in &p.interfaces {
        let (j, dist) = nodes
            .iter()
            .enumerate()
            .map(|(j, x)| (j, (x - i.site).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("n >= 16");
        if dist > 0.5 * h * (1.0 + 1e-9) {
            return Err(Error::SiteOffMesh(i.site));
        }
        diag[j] += i.coupling / h;
    }
    let sub = lower[1..].to_vec();
    let sup = upper[..last].to_vec();
    let mut op = BandedOperator::new(sub, diag, sup, h)?;
    op.nodes = nodes;
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{OdeForm, OdeKind};
    use crate::potentials::{PotentialSpec, SingularPart};
    use std::f64::consts::PI;

    fn spec(q: &str) -> PotentialSpec {
        PotentialSpec::new(q, "0", SingularPart::None, 1).unwrap()
    }

    #[test]
    fn too_coarse() {
        let p = TruncatedProblem::symmetric(spec("0"), 1.0, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(discretize(&p, 8), Err(Error::MeshTooCoarse(8)));
    }

    #[test]
    fn dirichlet_laplacian_rows() {
        let d = BoundaryCondition::Dirichlet;
        let p = TruncatedProblem::new(OdeForm::cartesian(spec("0")), 0.0, PI, d, d).unwrap();
        let a = discretize(&p, 200).unwrap();
        assert!((a.h - PI / 201.0).abs() < 1e-15);
        assert!((a.nodes[0] - a.h).abs() < 1e-15);
        assert!((a.diag[0].re - 2.0 / (a.h * a.h)).abs() < 1e-9);
        assert_eq!(a.sub[0], a.sup[0]);
    }

    #[test]
    fn delta_site_must_be_near_a_node() {
        let w = SingularPart::Delta { site: 0.0, coupling: Complex64::new(0.0, 1.0) };
        let s = PotentialSpec::new("x^2", "0", w, 1).unwrap();
        let p = TruncatedProblem::symmetric(s, 8.0, BoundaryCondition::Dirichlet).unwrap();
        let a = discretize(&p, 101).unwrap();
        assert!((a.diag[50].im - 1.0 / a.h).abs() < 1e-9);
        assert!(discretize(&p, 100).is_ok());
        let shifted = p.clone().with_interfaces(vec![crate::shooting::Interface { site: 0.3, coupling: 1.0.into() }]).unwrap();
        assert!(discretize(&shifted, 16).is_ok());
        // a site outside every cell half-width is rejected
        let mut far = p;
        far.interfaces[0].site = 7.99;
        assert!(matches!(discretize(&far, 16), Err(Error::SiteOffMesh(_))));
    }

    #[test]
    fn radial_offset_mesh() {
        let s = PotentialSpec::new("r^2", "0", SingularPart::None, 3).unwrap();
        let p = TruncatedProblem::radial(OdeForm::new(OdeKind::Radial3d { l: 0 }, s), 8.0, BoundaryCondition::Dirichlet)
            .unwrap();
        let a = discretize(&p, 64).unwrap();
        assert!((a.nodes[0] - a.h / 2.0).abs() < 1e-15);
        // no flux through r = 0
        assert!((a.diag[0].re - 4.0 / (a.h * a.h) - a.nodes[0].powi(2)).abs() < 1e-9);
    }
}

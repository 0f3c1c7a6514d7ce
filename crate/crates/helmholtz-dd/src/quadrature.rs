//! Gauss-Legendre quadrature and 1-D Lagrange shape functions on the
//! reference interval `[0, 1]`.

/// Gauss-Legendre nodes and weights on `[-1, 1]` for 1..=6 points.
const GL: [&[(f64, f64)]; 6] = [
    &[(0.0, 2.0)],
    &[
        (-0.5773502691896257, 1.0),
        (0.5773502691896257, 1.0),
    ],
    &[
        (-0.7745966692414834, 0.5555555555555556),
        (0.0, 0.8888888888888888),
        (0.7745966692414834, 0.5555555555555556),
    ],
    &[
        (-0.8611363115940526, 0.3478548451374538),
        (-0.3399810435848563, 0.6521451548625461),
        (0.3399810435848563, 0.6521451548625461),
        (0.8611363115940526, 0.3478548451374538),
    ],
    &[
        (-0.906179845938664, 0.23692688505618908),
        (-0.5384693101056831, 0.47862867049936647),
        (0.0, 0.5688888888888889),
        (0.5384693101056831, 0.47862867049936647),
        (0.906179845938664, 0.23692688505618908),
    ],
    &[
        (-0.9324695142031521, 0.17132449237917036),
        (-0.6612093864662645, 0.3607615730481386),
        (-0.2386191860831969, 0.46791393457269104),
        (0.2386191860831969, 0.46791393457269104),
        (0.6612093864662645, 0.3607615730481386),
        (0.9324695142031521, 0.17132449237917036),
    ],
];

/// Quadrature points mapped to `[0, 1]`; weights sum to 1.
pub fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    assert!((1..=6).contains(&n), "quadrature order {n} not tabulated");
    GL[n - 1]
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Value of the `i`-th Lagrange basis of degree `p` (equispaced nodes
/// `0, 1/p, ..., 1`) at `t`.
pub fn lagrange(p: usize, i: usize, t: f64) -> f64 {
    match (p, i) {
        (1, 0) => 1.0 - t,
        (1, 1) => t,
        (2, 0) => (1.0 - t) * (1.0 - 2.0 * t),
        (2, 1) => 4.0 * t * (1.0 - t),
        (2, 2) => t * (2.0 * t - 1.0),
        _ => panic!("degree {p} not supported"),
    }
}

/// Derivative of [`lagrange`] with respect to `t`.
pub fn lagrange_deriv(p: usize, i: usize, t: f64) -> f64 {
    match (p, i) {
        (1, 0) => -1.0,
        (1, 1) => 1.0,
        (2, 0) => 4.0 * t - 3.0,
        (2, 1) => 4.0 - 8.0 * t,
        (2, 2) => 4.0 * t - 1.0,
        _ => panic!("degree {p} not supported"),
    }
}

/// Precomputed shape values at quadrature points for one direction.
#[derive(Debug, Clone)]
pub struct ShapeTable {
    pub degree: usize,
    /// Quadrature points and weights on `[0, 1]`.
    pub points: Vec<(f64, f64)>,
    /// `values[q][i]` = `N_i` at point `q`.
    pub values: Vec<Vec<f64>>,
    /// `derivs[q][i]` = `N_i'` at point `q` (reference coordinates).
    pub derivs: Vec<Vec<f64>>,
}

impl ShapeTable {
    pub fn new(degree: usize, n_quad: usize) -> Self {
        let points = gauss_unit(n_quad);
        let values = points
            .iter()
            .map(|&(t, _)| (0..=degree).map(|i| lagrange(degree, i, t)).collect())
            .collect();
        let derivs = points
            .iter()
            .map(|&(t, _)| {
                (0..=degree)
                    .map(|i| lagrange_deriv(degree, i, t))
                    .collect()
            })
            .collect();
        ShapeTable {
            degree,
            points,
            values,
            derivs,
        }
    }
}

//! Independent reference solvers and random problem generators shared by
//! the integration tests.

#![allow(dead_code)]

use hydrate_core::{
    DiscreteOperator, Field, Grid, KinkedGraph, OperatorCoefficients, PhaseLaw, Profile,
};
use rand::Rng;

/// Dense row-major copy of the matrix part of `op`.
pub fn dense_matrix(op: &DiscreteOperator) -> Vec<Vec<f64>> {
    let m = op.matrix();
    let n = m.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = m.diag[i];
        if i > 0 {
            a[i][i - 1] = m.lower[i];
        }
        if i + 1 < n {
            a[i][i + 1] = m.upper[i];
        }
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

pub fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// `(I + λA)⁻¹ f` by dense elimination.
pub fn dense_resolvent(op: &DiscreteOperator, lambda: f64, f: &[f64]) -> Vec<f64> {
    let mut a = dense_matrix(op);
    for (i, row) in a.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v *= lambda;
        }
        row[i] += 1.0;
    }
    let rhs = f.iter().zip(op.offset()).map(|(fi, b)| fi - lambda * b).collect();
    dense_solve(a, rhs).expect("nonsingular")
}

fn inverse(g: &KinkedGraph, u: f64) -> f64 {
    if u < g.lo {
        g.kink + (u - g.lo) / g.slope_below
    } else if u > g.hi {
        g.kink + (u - g.hi) / g.slope_above
    } else {
        g.kink
    }
}

fn inverse_slope(g: &KinkedGraph, u: f64) -> f64 {
    if u < g.lo {
        1.0 / g.slope_below
    } else if u > g.hi {
        1.0 / g.slope_above
    } else {
        0.0
    }
}

/// `u + λ (M β⁻¹(u) + b) - f`.
fn u_residual(a: &[Vec<f64>], b: &[f64], graphs: &[KinkedGraph], lambda: f64, f: &[f64], u: &[f64]) -> Vec<f64> {
    let chi: Vec<f64> = u.iter().zip(graphs).map(|(ui, g)| inverse(g, *ui)).collect();
    let ac = dense_mul(a, &chi);
    (0..u.len()).map(|i| u[i] + lambda * (ac[i] + b[i]) - f[i]).collect()
}

/// Damped semismooth Newton on the dense `u`-formulation, run until the
/// max-norm residual is below `1e-13` or no progress is possible.
pub fn dense_newton(
    op: &DiscreteOperator,
    graphs: &[KinkedGraph],
    lambda: f64,
    f: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let a = dense_matrix(op);
    let b = op.offset().to_vec();
    let n = f.len();
    let norm = |r: &[f64]| r.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut u = f.to_vec();
    let mut r = u_residual(&a, &b, graphs, lambda, f, &u);
    for _ in 0..500 {
        if norm(&r) < 1e-13 {
            break;
        }
        // Try both one-sided slopes at kinks: any element works, but
        // alternating avoids cycling on degenerate data.
        let slopes: Vec<f64> = u.iter().zip(graphs).map(|(ui, g)| inverse_slope(g, *ui)).collect();
        let mut jac = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                jac[i][j] = lambda * a[i][j] * slopes[j];
            }
            jac[i][i] += 1.0;
        }
        let step = dense_solve(jac, r.iter().map(|v| -v).collect()).expect("nonsingular");
        let mut t = 1.0;
        let current = norm(&r);
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x + t * d).collect();
            let tr = u_residual(&a, &b, graphs, lambda, f, &trial);
            if norm(&tr) < current || t < 1e-12 {
                u = trial;
                r = tr;
                break;
            }
            t *= 0.5;
        }
    }
    let chi = u.iter().zip(graphs).map(|(ui, g)| inverse(g, *ui)).collect();
    (u, chi)
}

/// Exhaustive search over the branch (below / segment / above) of every
/// cell: each choice makes the system linear; the consistent choice is
/// the solution. Exponential, meant for `n ≤ 8`.
pub fn enumerate_branches(
    op: &DiscreteOperator,
    graphs: &[KinkedGraph],
    lambda: f64,
    f: &[f64],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let a = dense_matrix(op);
    let b = op.offset();
    let n = f.len();
    let total = 3usize.pow(n as u32);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for code in 0..total {
        let mut branch = vec![0u8; n];
        let mut c = code;
        for br in branch.iter_mut() {
            *br = (c % 3) as u8;
            c /= 3;
        }
        // Unknown z_j: χ_j on the sloped branches, u_j on the segment.
        // χ_j = kink + (u_j - lo)/s (below) or kink + (u_j - hi)/s (above),
        // equivalently u_j = lo + s (χ_j - kink) etc.
        let mut m = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = f[i] - lambda * b[i];
            for j in 0..n {
                let g = &graphs[j];
                match branch[j] {
                    1 => {
                        // χ_j = kink fixed, z_j = u_j
                        rhs[i] -= lambda * a[i][j] * g.kink;
                        if i == j {
                            m[i][j] += 1.0;
                        }
                    }
                    _ => {
                        // z_j = χ_j, u_j = base + s (χ_j - kink)
                        m[i][j] += lambda * a[i][j];
                        if i == j {
                            let (base, s) = if branch[j] == 0 {
                                (g.lo, g.slope_below)
                            } else {
                                (g.hi, g.slope_above)
                            };
                            m[i][j] += s;
                            rhs[i] -= base - s * g.kink;
                        }
                    }
                }
            }
        }
        let Some(z) = dense_solve(m, rhs) else { continue };
        let mut u = vec![0.0; n];
        let mut chi = vec![0.0; n];
        let mut violation: f64 = 0.0;
        for j in 0..n {
            let g = &graphs[j];
            match branch[j] {
                0 => {
                    chi[j] = z[j];
                    u[j] = g.lo + g.slope_below * (z[j] - g.kink);
                    violation = violation.max(z[j] - g.kink);
                }
                1 => {
                    chi[j] = g.kink;
                    u[j] = z[j];
                    violation = violation.max(g.lo - z[j]).max(z[j] - g.hi);
                }
                _ => {
                    chi[j] = z[j];
                    u[j] = g.hi + g.slope_above * (z[j] - g.kink);
                    violation = violation.max(g.kink - z[j]);
                }
            }
        }
        if best.as_ref().is_none_or(|(v, _, _)| violation < *v) {
            best = Some((violation, u, chi));
        }
    }
    best.filter(|(v, _, _)| *v <= 1e-12).map(|(_, u, chi)| (u, chi))
}

/// Root of `v + λ·sel β(v) = r` by bisection over `v`, treating the
/// segment as the interval it is.
pub fn bisect_resolvent(g: &KinkedGraph, lambda: f64, r: f64) -> f64 {
    // F(v) = v + λβ(v) is a set-valued increasing map; find v with
    // min F(v) ≤ r ≤ max F(v).
    let below = |v: f64| -> bool {
        let val = if v < g.kink {
            g.lo + g.slope_below * (v - g.kink)
        } else if v > g.kink {
            g.hi + g.slope_above * (v - g.kink)
        } else {
            g.hi
        };
        v + lambda * val < r
    };
    let mut lo = -1e6;
    let mut hi = 1e6;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Affine decreasing solubility on `(0, 1)` with random parameters.
pub fn random_law(rng: &mut impl Rng) -> PhaseLaw {
    let top = rng.gen_range(0.005..0.03);
    let bottom = top + rng.gen_range(0.0..0.04);
    let ceiling = bottom + rng.gen_range(0.02..0.1);
    let phi = rng.gen_range(0.3..1.0);
    let slope = rng.gen_range(0.3..2.0);
    PhaseLaw::new(
        Profile::Affine { intercept: bottom, slope: top - bottom },
        ceiling,
        Profile::Constant(phi),
        slope,
    )
    .unwrap()
}

/// Random operator satisfying the assembly hypotheses.
pub fn random_operator(rng: &mut impl Rng, n: usize, boundary: bool) -> DiscreteOperator {
    let grid = Grid::new(0.0, 1.0, n).unwrap();
    let d = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.5) };
    let q = rng.gen_range(-2.0..2.0);
    let a: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..3.0) }).collect();
    let (l, r) = if boundary {
        (rng.gen_range(0.0..0.06), rng.gen_range(0.0..0.06))
    } else {
        (0.0, 0.0)
    };
    let coeffs = OperatorCoefficients::new(d, q, l, r)
        .with_reaction(hydrate_core::Coefficient::Values(a));
    DiscreteOperator::assemble(grid, coeffs).unwrap()
}

pub fn random_field(rng: &mut impl Rng, grid: Grid, lo: f64, hi: f64) -> Field {
    Field::new(grid, (0..grid.len()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

pub fn l1(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.l1_diff(a, b)
}

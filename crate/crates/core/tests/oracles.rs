//! Independent recomputations of derived values, written without the
//! library's own helpers where practical.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use infocap::fisher::{expected_fisher, stam_information};
use infocap::fourier::{forward_transform, free_particle_capacity, PhysicalConstants};
use infocap::grid::{Boundary, GridSpec, Stencil};
use infocap::kinematic::{
    boost_invariance, capacity_from_amplitudes, maxwell_capacity, AmplitudeField, AxisProfile,
    ComponentSpec, GaugeField,
};
use infocap::metric::{BoostParameters, MetricSignature};
use infocap::statmodel::{ExpectationMethod, ParameterVector, ParametricModel};
use nalgebra::DMatrix;

fn gaussian_log_pdf(y: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> f64 {
    let k = y.len();
    let d = DMatrix::from_fn(k, 1, |i, _| y[i] - mean[i]);
    let inv = cov.clone().try_inverse().unwrap();
    let q = (d.transpose() * inv * &d)[(0, 0)];
    -0.5 * q - 0.5 * (k as f64 * (2.0 * PI).ln() + cov.determinant().ln())
}

#[test]
fn gaussian_fisher_matches_brute_force_score_outer_products() {
    // E[s sᵀ] from a hand-rolled 1D product Simpson rule over finite-difference scores.
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let mean = [0.2, -0.4];
    let model = ParametricModel::gaussian(1, cov.clone()).unwrap();
    let theta = ParameterVector::from_flat(2, mean.to_vec()).unwrap();
    let fim = expected_fisher(&model, &theta, &ExpectationMethod::Analytic).unwrap();

    let (n, lo, hi) = (400usize, -8.0, 8.0);
    let h = (hi - lo) / n as f64;
    let eps = 1e-5;
    let mut acc = DMatrix::<f64>::zeros(2, 2);
    for i in 0..=n {
        for j in 0..=n {
            let y = [mean[0] + lo + i as f64 * h, mean[1] + lo + j as f64 * h];
            let w = |k: usize| {
                if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                }
            };
            let p = gaussian_log_pdf(&y, &mean, &cov).exp();
            let s: Vec<f64> = (0..2)
                .map(|a| {
                    let mut up = mean;
                    let mut dn = mean;
                    up[a] += eps;
                    dn[a] -= eps;
                    (gaussian_log_pdf(&y, &up, &cov) - gaussian_log_pdf(&y, &dn, &cov))
                        / (2.0 * eps)
                })
                .collect();
            let weight = w(i) * w(j) * h * h / 9.0 * p;
            for a in 0..2 {
                for b in 0..2 {
                    acc[(a, b)] += weight * s[a] * s[b];
                }
            }
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            assert_relative_eq!(fim.matrix[(a, b)], acc[(a, b)], max_relative = 1e-6);
        }
    }
}

#[test]
fn correlated_pair_inverse_diagonal_by_hand() {
    // Σ = [[1, ρ],[ρ, 1]] gives I = Σ⁻¹, [I⁻¹]₀₀ = 1, 1/I₀₀ = 1 − ρ².
    let rho = 0.5;
    let model =
        ParametricModel::gaussian(1, DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
    let theta = ParameterVector::from_flat(2, vec![0.0, 0.0]).unwrap();
    let fim = expected_fisher(&model, &theta, &ExpectationMethod::Analytic).unwrap();
    assert_relative_eq!(fim.matrix[(0, 0)], 1.0 / (1.0 - rho * rho), epsilon = 1e-12);
    assert_relative_eq!(
        fim.matrix[(0, 1)],
        -rho / (1.0 - rho * rho),
        epsilon = 1e-12
    );
}

#[test]
fn stam_harmonic_sum() {
    assert_relative_eq!(
        stam_information(&[1.0, 0.5, 0.25]).unwrap(),
        7.0,
        epsilon = 1e-14
    );
}

#[test]
fn forward_transform_matches_naive_sum() {
    let grid = GridSpec::new(
        vec![-3.0, -2.0],
        vec![3.0, 2.0],
        vec![6, 5],
        Boundary::Periodic,
    )
    .unwrap();
    let values: Vec<f64> = (0..grid.len())
        .map(|i| ((i * 7 % 11) as f64 - 4.0) / 5.0)
        .collect();
    let f = AmplitudeField::new(grid.clone(), vec![values.clone()]).unwrap();
    let hbar = 0.7;
    let k = PhysicalConstants::new(hbar, 1.0).unwrap();
    let field = forward_transform(&f, k).unwrap();
    let (nt, nx) = (6usize, 5usize);
    let (ht, hx) = (1.0, 0.8);
    let scale = ht * hx / (2.0 * PI * hbar);
    for st in 0..nt {
        for sx in 0..nx {
            let pt = 2.0 * PI * hbar * st as f64 / 6.0;
            let px = 2.0 * PI * hbar * sx as f64 / 4.0;
            let (mut re, mut im) = (0.0, 0.0);
            for jt in 0..nt {
                for jx in 0..nx {
                    let phase = (jt as f64 * ht * pt - jx as f64 * hx * px) / hbar;
                    let v = values[jt * nx + jx];
                    re += v * phase.cos();
                    im += v * phase.sin();
                }
            }
            let got = field.component(0)[st * nx + sx];
            assert!((got.re - scale * re).abs() < 1e-12, "bin ({st},{sx})");
            assert!((got.im - scale * im).abs() < 1e-12, "bin ({st},{sx})");
        }
    }
}

#[test]
fn free_particle_closed_form() {
    let k = PhysicalConstants::new(0.5, 3.0).unwrap();
    // 4 N m² c² / ħ² with N = 2, m = 1.5
    assert_relative_eq!(
        free_particle_capacity(1.5, 2, k).unwrap(),
        4.0 * 2.0 * 2.25 * 9.0 / 0.25,
        epsilon = 1e-12
    );
}

#[test]
fn separable_gaussian_minkowski_capacity() {
    // For p with standard deviations σ_t, σ_x: 1/σ_t² − 1/σ_x².
    let bump = |boundary| {
        AmplitudeField::from_specs(
            GridSpec::cube(2, -16.0, 16.0, 256, boundary).unwrap(),
            &[ComponentSpec::Gaussian {
                axes: vec![
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 1.0,
                    },
                    AxisProfile::Gaussian {
                        center: 0.0,
                        sigma: 2.0,
                    },
                ],
            }],
        )
        .unwrap()
    };
    let m = MetricSignature::minkowski(2).unwrap();
    let value = capacity_from_amplitudes(&bump(Boundary::Periodic), &m, Stencil::Spectral).unwrap();
    assert!((value - 0.75).abs() < 1e-8, "{value}");
    let r = boost_invariance(
        &bump(Boundary::Truncated),
        &BoostParameters::new(0.3, 1).unwrap(),
        Stencil::Central,
    )
    .unwrap();
    assert!((r.after - 0.75).abs() < 1e-2, "{}", r.after);
}

#[test]
fn plane_gauge_wave_by_direct_quadrature() {
    // A = ε cos(k·x), ε = e_2: only ν = 1 contributes, η^{11}·(∂_1A_2)(∂_1A^2) = k_x² sin².
    let two_pi = 2.0 * PI;
    let grid = GridSpec::new(
        vec![0.0; 4],
        vec![two_pi; 4],
        vec![4, 96, 4, 4],
        Boundary::Periodic,
    )
    .unwrap();
    let a = 1.5;
    let g = GaugeField::plane_wave(grid.clone(), [0.0, 0.0, 1.0, 0.0], [0, 2, 0, 0], a).unwrap();
    let kx = 2.0;
    let mut integral = 0.0;
    for i in 0..grid.len() {
        let x = grid.position(i);
        let s = (kx * x[1]).sin();
        integral += s * s * grid.cell_volume();
    }
    let oracle = 4.0 * a * a * kx * kx * integral;
    let got = maxwell_capacity(&g, Stencil::Spectral).unwrap();
    assert!(((got - oracle) / oracle).abs() < 1e-10, "{got} vs {oracle}");
}

//! Execution of each scenario kind against the library.

use std::path::Path;

use infocap::fisher::{
    capacity_sweep, channel_capacity, crlb_check, estimation_report, expected_fisher,
    outer_form_fisher, stam_capacity_check, Estimator, NoisyEstimator, SampleMeanEstimator,
};
use infocap::fourier::{
    forward_transform, fourier_information, momentum_capacity, parseval_check, tachyon_check,
    MassSource, MomentumField,
};
use infocap::grid::{Boundary, Stencil};
use infocap::kinematic::{
    boost_invariance, capacity_from_amplitudes, capacity_from_probabilities,
    lorentz_condition_residual, maxwell_capacity, maxwell_capacity_dual, plane_wave_capacity,
    statistical_kinematic_consistency, AmplitudeField, GaugeField,
};
use infocap::metric::{BoostParameters, MetricSignature};
use infocap::verify::Check;
use serde_json::{json, Value};

use crate::config::{
    ConfigError, ConsistencyScenario, EstimatorConfig, FisherScenario, FourierScenario,
    GaugeConfig, KinematicScenario, MaxwellScenario, ScenarioConfig, SweepScenario,
};

/// A CSV table emitted next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// A field written in the binary layout.
pub enum FieldOutput {
    Amplitude(String, AmplitudeField),
    Momentum(String, MomentumField),
}

pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub fields: Vec<FieldOutput>,
}

impl Outcome {
    fn new(result: Value, checks: Vec<Check>) -> Self {
        Self {
            result,
            checks,
            tables: Vec::new(),
            fields: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] infocap::Error),
}

type Result<T> = std::result::Result<T, RunError>;

pub fn execute(config: &ScenarioConfig, base: &Path) -> Result<Outcome> {
    config.validate(base)?;
    match config {
        ScenarioConfig::Fisher(s) => fisher(s),
        ScenarioConfig::Kinematic(s) => kinematic(s, base),
        ScenarioConfig::Fourier(s) => fourier(s, base),
        ScenarioConfig::Maxwell(s) => maxwell(s),
        ScenarioConfig::Consistency(s) => consistency(s),
        ScenarioConfig::Sweep(s) => sweep(s, s.n_max),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn fisher(s: &FisherScenario) -> Result<Outcome> {
    let (model, theta) = s.model.build()?;
    let metric = s.metric.build(s.model.dim)?;
    let fim = expected_fisher(&model, &theta, &s.method)?;
    let outer = outer_form_fisher(
        &model,
        &theta,
        &infocap::statmodel::ExpectationMethod::quadrature(),
    )?;
    let quad = expected_fisher(
        &model,
        &theta,
        &infocap::statmodel::ExpectationMethod::quadrature(),
    )?;
    let diff = (&quad.matrix - &outer.matrix).amax();
    let capacity = channel_capacity(&model, &theta, &metric, &s.method)?;
    let mut checks = vec![
        Check::le(
            "regularity: expected vs outer form",
            diff,
            0.0,
            s.tolerances.regularity,
        ),
        Check::flag("fisher matrix symmetric", fim.is_symmetric(1e-12)),
        Check::le(
            "fisher matrix min eigenvalue >= 0",
            -fim.min_eigenvalue(),
            0.0,
            1e-8,
        ),
    ];
    let mut result = json!({
        "fisher": fim.report(),
        "capacity": capacity,
    });
    let mut tables = vec![Table {
        name: "channels".into(),
        headers: vec!["channel".into(), "fisher".into()],
        rows: capacity
            .per_channel
            .iter()
            .enumerate()
            .map(|(n, v)| vec![n as f64, *v])
            .collect(),
    }];
    if let Some(e) = &s.estimation {
        let estimator: Box<dyn Estimator> = match e.estimator {
            EstimatorConfig::SampleMean => Box::new(SampleMeanEstimator),
            EstimatorConfig::Noisy { noise_sd } => Box::new(NoisyEstimator {
                noise_sd,
                seed: s.seed.wrapping_add(1),
            }),
        };
        let batch = model.sample(&theta, s.seed, e.draws)?;
        let analytic = expected_fisher(
            &model,
            &theta,
            &infocap::statmodel::ExpectationMethod::Analytic,
        )?;
        let mut crlb = Vec::new();
        for i in 0..model.param_dim() {
            let r = crlb_check(&analytic, estimator.as_ref(), &model, i, &batch)?;
            checks.push(Check::flag(
                format!("crlb[{i}]: estimator unbiased at 4 SE"),
                r.applicable,
            ));
            checks.push(Check::le(
                format!("crlb[{i}]: [I^-1]_ii <= variance"),
                r.variance_bound.lhs,
                r.variance_bound.rhs,
                r.variance_bound.tolerance,
            ));
            checks.push(Check::le(
                format!("crlb[{i}]: 1/I_ii <= [I^-1]_ii"),
                r.crlb_bound.lhs,
                r.crlb_bound.rhs,
                r.crlb_bound.tolerance,
            ));
            crlb.push(r);
        }
        let report = estimation_report(
            &analytic,
            estimator.as_ref(),
            &model,
            &metric,
            e.axes,
            &batch,
        )?;
        let stam = if report.stam.is_some() {
            let st = stam_capacity_check(&report)?;
            checks.push(Check::le("stam: 0 <= I_S", 0.0, st.lower.rhs, 0.0));
            checks.push(Check::le(
                "stam: I_S <= I",
                st.upper.lhs,
                st.upper.rhs,
                st.upper.tolerance,
            ));
            Some(st)
        } else {
            None
        };
        tables[0]
            .headers
            .extend(["variance".into(), "variance_se".into(), "causal".into()]);
        for (row, ch) in tables[0].rows.iter_mut().zip(&report.channels) {
            row.extend([
                ch.variance,
                ch.variance_standard_error,
                if ch.causal { 1.0 } else { 0.0 },
            ]);
        }
        result["estimation"] = json!({
            "draws": e.draws,
            "crlb": crlb,
            "report": report,
            "stam_check": stam,
            "causality": {
                "non_causal_channels": report.non_causal_channels,
                "stam_defined": report.stam.is_some(),
            },
        });
    }
    let mut out = Outcome::new(result, checks);
    out.tables = tables;
    Ok(out)
}

fn default_forms_tolerance(stencil: Stencil) -> f64 {
    match stencil {
        Stencil::Spectral => 1e-9,
        Stencil::Central => 5e-3,
    }
}

fn slices(name: &str, f: &AmplitudeField) -> Vec<Table> {
    let g = f.grid();
    let centre: Vec<usize> = g.points().iter().map(|n| n / 2).collect();
    (0..g.dim())
        .map(|axis| {
            let mut headers = vec![format!("x{axis}")];
            headers.extend((0..f.channel_count()).map(|n| format!("q{n}")));
            let rows = (0..g.points()[axis])
                .map(|i| {
                    let mut m = centre.clone();
                    m[axis] = i;
                    let idx = g.ravel(&m);
                    let mut row = vec![g.coordinate(axis, i)];
                    row.extend((0..f.channel_count()).map(|n| f.component(n)[idx]));
                    row
                })
                .collect();
            Table {
                name: format!("{name}_slice_axis{axis}"),
                headers,
                rows,
            }
        })
        .collect()
}

fn kinematic(s: &KinematicScenario, base: &Path) -> Result<Outcome> {
    let f = s.field.build(s.grid.as_ref(), base)?;
    let metric = s.metric.build(f.grid().dim())?;
    let amplitude = capacity_from_amplitudes(&f, &metric, s.stencil)?;
    let prob = capacity_from_probabilities(f.grid(), &f.probabilities(), &metric, s.stencil)?;
    let tol = s
        .tolerances
        .forms
        .unwrap_or(default_forms_tolerance(s.stencil));
    let mut checks = vec![
        Check::eq(
            "amplitude form vs probability form",
            amplitude,
            prob.value,
            tol,
        ),
        Check::le(
            "probability-floor skipped mass",
            prob.skipped_mass,
            1e-9,
            0.0,
        ),
    ];
    let mut result = json!({
        "norm": f.norm(),
        "amplitude_form": amplitude,
        "probability_form": prob,
        "stencil": s.stencil,
        "wrap_jump": f.wrap_jump,
    });
    if let Some(b) = &s.boost {
        let r = boost_invariance(&f, &BoostParameters::new(b.beta, b.axis)?, s.stencil)?;
        checks.push(Check::le(
            "boost relative change",
            r.relative_change,
            s.tolerances.boost,
            0.0,
        ));
        result["boost"] = to_value(&r);
    }
    let mut out = Outcome::new(result, checks);
    if s.output.slices {
        out.tables = slices("amplitude", &f);
    }
    if s.output.fields {
        out.fields
            .push(FieldOutput::Amplitude("amplitude".into(), f));
    }
    Ok(out)
}

fn fourier(s: &FourierScenario, base: &Path) -> Result<Outcome> {
    let f = s.field.build(s.grid.as_ref(), base)?;
    let field = forward_transform(&f, s.constants)?;
    let parseval = parseval_check(&f, &field)?;
    let info = fourier_information(&f, s.constants, s.mass)?;
    let tachyon = tachyon_check(&field)?;
    let scale = info.position_capacity.abs().max(1.0);
    let mut checks = vec![
        Check::le("parseval", parseval.diff, 0.0, s.tolerances.parseval),
        Check::le(
            "round trip",
            parseval.round_trip,
            0.0,
            s.tolerances.round_trip,
        ),
        Check::le(
            "position vs momentum capacity",
            (info.position_capacity - info.momentum_capacity).abs(),
            0.0,
            s.tolerances.k_f * scale,
        ),
    ];
    match s.mass {
        MassSource::SelfConsistent => checks.push(Check::le(
            "|K_F|",
            info.k_f.abs(),
            0.0,
            s.tolerances.k_f * scale,
        )),
        MassSource::External { .. } => checks.push(Check::eq(
            "K_F vs 4N(m_field^2 - m^2)c^2/hbar^2",
            info.k_f,
            info.predicted,
            s.tolerances.k_f * scale,
        )),
    }
    checks.push(Check::flag(
        "m^2 >= 0 iff I >= 0",
        tachyon.equivalence_holds,
    ));
    let result = json!({
        "parseval": parseval,
        "information": info,
        "momentum_capacity": momentum_capacity(&field),
        "tachyon": tachyon,
        "momentum_spacing": (0..f.grid().dim()).map(|a| field.spacing(a)).collect::<Vec<_>>(),
        "warnings": field.warnings,
    });
    let mut out = Outcome::new(result, checks);
    if s.output.slices {
        out.tables = slices("amplitude", &f);
    }
    if s.output.fields {
        out.fields
            .push(FieldOutput::Amplitude("amplitude".into(), f));
        out.fields
            .push(FieldOutput::Momentum("momentum".into(), field));
    }
    Ok(out)
}

fn maxwell(s: &MaxwellScenario) -> Result<Outcome> {
    let grid = s.grid.build()?;
    let GaugeConfig::GaugeMode {
        polarization,
        modes,
    } = s.gauge;
    let g = GaugeField::plane_wave(grid.clone(), polarization, modes, s.a)?;
    let value = maxwell_capacity(&g, s.stencil)?;
    let dual = maxwell_capacity_dual(&g, s.stencil)?;
    let lorentz = lorentz_condition_residual(&g)?;
    let mut checks = vec![Check::le(
        "channel-sum vs index-contracted forms",
        (value - dual).abs(),
        0.0,
        1e-9 * value.abs().max(1.0),
    )];
    let closed = if grid.boundary() == Boundary::Periodic {
        let k = GaugeField::wavevector(&grid, modes)?;
        let exact = plane_wave_capacity(polarization, k, s.a, grid.volume());
        let rel = if exact == 0.0 {
            value.abs()
        } else {
            ((value - exact) / exact).abs()
        };
        checks.push(Check::le(
            "relative error vs closed form",
            rel,
            0.0,
            s.tolerances.plane_wave,
        ));
        let eta = MetricSignature::minkowski(4)?;
        let divergence: f64 = (0..4).map(|a| eta.sign(a) * polarization[a] * k[a]).sum();
        if divergence == 0.0 {
            checks.push(Check::le(
                "transverse Lorentz residual",
                lorentz.l2,
                0.0,
                s.tolerances.lorentz,
            ));
        }
        Some(exact)
    } else {
        None
    };
    let result = json!({
        "capacity": value,
        "capacity_dual": dual,
        "closed_form": closed,
        "lorentz_residual": lorentz,
        "stencil": s.stencil,
    });
    Ok(Outcome::new(result, checks))
}

fn consistency(s: &ConsistencyScenario) -> Result<Outcome> {
    let (model, theta) = s.model.build()?;
    let metric = s.metric.build(s.model.dim)?;
    let grid = s.grid.build()?;
    let r = statistical_kinematic_consistency(
        &model,
        &theta,
        &grid,
        &metric,
        &s.method,
        s.stencil,
        s.tolerance,
    )?;
    let checks = vec![
        Check::eq(
            "statistical vs kinematic",
            r.kinematic,
            r.statistical,
            s.tolerance,
        ),
        Check::eq(
            "kinematic vs amplitude form",
            r.amplitude,
            r.kinematic,
            s.tolerance,
        ),
    ];
    Ok(Outcome::new(to_value(&r), checks))
}

pub fn sweep(s: &SweepScenario, n_max: usize) -> Result<Outcome> {
    let metric = s.metric.build(s.model.dim)?;
    let mut config_error = None;
    let table = capacity_sweep(n_max, &metric, &s.method, |n| {
        s.model.build_with(n).map_err(|e| {
            let msg = e.0.clone();
            config_error = Some(e);
            infocap::Error::InvalidArgument(msg)
        })
    });
    if let Some(e) = config_error {
        return Err(e.into());
    }
    let table = table?;
    let width = table.rows.last().map_or(0, |r| r.per_channel.len());
    let mut headers = vec!["channels".to_string(), "capacity".to_string()];
    headers.extend((0..width).map(|n| format!("fisher{n}")));
    let rows = table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.channels as f64, r.capacity];
            row.extend(r.per_channel.iter().copied());
            row.resize(width + 2, f64::NAN);
            row
        })
        .collect();
    let monotone_ok = !matches!(
        table.monotonicity,
        infocap::fisher::Monotonicity::Violated { .. }
    );
    let mut out = Outcome::new(
        json!({ "n_max": n_max, "sweep": table }),
        vec![Check::flag(
            "capacity nondecreasing where applicable",
            monotone_ok,
        )],
    );
    out.tables.push(Table {
        name: "sweep".into(),
        headers,
        rows,
    });
    Ok(out)
}

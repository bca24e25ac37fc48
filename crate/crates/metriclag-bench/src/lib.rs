//! Shared fixtures for the engine benchmarks.

use metriclag::{
    Complex64, DeformationParams, FieldLagrangian, FieldVariant, Measure, MechLagrangian,
    Potential, VariationalOption, WaveFunction,
};

pub fn operator_kinds() -> Vec<(&'static str, DeformationParams)> {
    vec![
        ("classical", DeformationParams::classical()),
        ("conformable", DeformationParams::conformable(0.7).unwrap()),
        ("hausdorff", DeformationParams::hausdorff(0.7, 1.3).unwrap()),
        ("katugampola", DeformationParams::katugampola(0.7).unwrap()),
        ("q_deriv", DeformationParams::q_deriv(0.7).unwrap()),
        ("scale_q", DeformationParams::scale_q(0.7, 0.9).unwrap()),
    ]
}

pub fn free_wave(n: usize) -> (FieldLagrangian, WaveFunction) {
    let l = FieldLagrangian::new(
        FieldVariant::TimeDeformed,
        1.0,
        Potential::zero(),
        1.0,
        DeformationParams::conformable(0.7).unwrap(),
    )
    .unwrap();
    let x: Vec<f64> = (0..n).map(|i| 6.0 * i as f64 / (n - 1) as f64).collect();
    let norm = (std::f64::consts::PI * 0.25).powf(-0.25);
    let mut psi: Vec<Complex64> = x
        .iter()
        .map(|&xv| {
            Complex64::new(0.0, 2.0 * xv).exp()
                * (norm * (-(xv - 3.0) * (xv - 3.0) / 0.5).exp())
        })
        .collect();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    let wf = WaveFunction::new(x, psi, Measure::Plain).unwrap();
    (l, wf)
}

pub fn oscillator() -> MechLagrangian {
    MechLagrangian::new(
        1.0,
        Potential::harmonic(1.0),
        DeformationParams::conformable(0.7).unwrap(),
        VariationalOption::Opt1,
    )
    .unwrap()
}

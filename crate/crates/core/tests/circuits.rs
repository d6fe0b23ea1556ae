use ncfet_core::circuits::{
    inverter_vtc, ro_metrics, ro_transient, vtc_metrics, Inverter, RingOscillator, TransientConfig,
};
use ncfet_core::fet::Polarity;
use ncfet_core::nc_device::{Direction, SweepWindow, Transistor};
use ncfet_core::presets;

fn nc_inverter(a_fe_nm2: f64, v_dd: f64) -> Inverter {
    Inverter::new(
        Transistor::NegativeCapacitance(presets::nc_fet(Polarity::N, a_fe_nm2).unwrap()),
        Transistor::NegativeCapacitance(presets::nc_fet(Polarity::P, a_fe_nm2).unwrap()),
        v_dd,
    )
    .unwrap()
}

fn conventional_inverter(v_dd: f64) -> Inverter {
    Inverter::new(
        Transistor::Conventional(presets::fet(Polarity::N).unwrap()),
        Transistor::Conventional(presets::fet(Polarity::P).unwrap()),
        v_dd,
    )
    .unwrap()
}

#[test]
fn conventional_vtc_balances_currents() {
    let inv = conventional_inverter(0.7);
    let w = SweepWindow::new(0.0, 0.7, 1e-2).unwrap();
    for r in inverter_vtc(&inv, &w, Direction::Up).unwrap() {
        let n = inv.nfet.eval(r.v_in, r.v_out, None).unwrap();
        let p = inv.pfet.eval(r.v_in - 0.7, r.v_out - 0.7, None).unwrap();
        assert!(
            (n.ids + p.ids).abs() <= 1e-15_f64.max(1e-9 * n.ids.abs()),
            "v_in = {}",
            r.v_in
        );
    }
}

#[test]
fn nc_vtc_is_reproducible_and_steeper() {
    let w = SweepWindow::new(0.0, 0.7, 2e-3).unwrap();
    let inv = nc_inverter(presets::A_FE_NM2, 0.7);
    let up = inverter_vtc(&inv, &w, Direction::Up).unwrap();
    let down = inverter_vtc(&inv, &w, Direction::Down).unwrap();
    assert_eq!(up, inverter_vtc(&inv, &w, Direction::Up).unwrap());
    assert!(up.iter().chain(&down).all(|r| r.converged));
    let nc = vtc_metrics(&up, &down, 0.7).unwrap();
    let conv_inv = conventional_inverter(0.7);
    let conv = vtc_metrics(
        &inverter_vtc(&conv_inv, &w, Direction::Up).unwrap(),
        &inverter_vtc(&conv_inv, &w, Direction::Down).unwrap(),
        0.7,
    )
    .unwrap();
    assert!(nc.gain_max > conv.gain_max);
    assert!(nc.vtc_hysteresis >= conv.vtc_hysteresis);
}

#[test]
fn nc_ring_film_charge_is_periodic() {
    let ro = RingOscillator::new(presets::STAGES, presets::C_WIRE, nc_inverter(presets::A_FE_NM2, 0.5)).unwrap();
    let cfg = TransientConfig::for_ring(&ro).unwrap();
    let tr = ro_transient(&ro, &cfg).unwrap();
    assert_eq!(tr.q_fe.len(), 2 * ro.stages);
    assert!(tr.residual.iter().all(|&r| r <= cfg.newton_tol));
    let m = ro_metrics(&tr, &ro).unwrap();
    // switching energy of the wire load is a floor for the supply energy
    assert!(m.energy_per_cycle > ro.stages as f64 * ro.c_wire * 0.5 * 0.5);
    let t_end = *tr.t.last().unwrap();
    let at = |series: &[f64], t: f64| {
        let k = tr.t.partition_point(|&x| x < t).max(1);
        let (ta, tb) = (tr.t[k - 1], tr.t[k]);
        series[k - 1] + (series[k] - series[k - 1]) * (t - ta) / (tb - ta)
    };
    for q in &tr.q_fe {
        let swing = q.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - q.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let t0 = 0.6 * t_end;
        assert!((at(q, t0 + m.period) - at(q, t0)).abs() < 0.01 * swing);
    }
}

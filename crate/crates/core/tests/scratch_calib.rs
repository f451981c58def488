// Temporary calibration probes; not part of the suite.
use ndarray::{s, Array2};
use sentry_core::balanced::{
    actuator_cost_inverted_gaussian, balance, build_spring_mass, enumerate_proxy, gramians,
    h2_proxy_actuators, h2_proxy_sensors, sensor_cost_gaussian, velocity_block,
};
use sentry_core::pivoting::{qr_pivot_select_cost, restrict_candidates, translate_selection};

#[test]
#[ignore]
fn sensor_variants() {
    let sys = build_spring_mass(16, 1.0, 1.0, 1.0).unwrap();
    let full = sys.with_identity_io();
    let (wc, wo) = gramians(&full).unwrap();
    let s_enum = enumerate_proxy(32, 6, &wc.view()).unwrap();

    let s_cost = sensor_cost_gaussian(16, 0.0).unwrap();
    for r in [6usize, 8, 12, 16, 32] {
        let modes = balance(&full, r).unwrap();
        for scaled in [false, true] {
            let mut v: Array2<f64> = modes.psi_r.t().to_owned();
            if scaled {
                for (i, mut row) in v.rows_mut().into_iter().enumerate() {
                    row *= modes.hsv[i].sqrt();
                }
            }
            let sel = qr_pivot_select_cost(&v.view(), &s_cost, 6).unwrap();
            let val = h2_proxy_sensors(&wc.view(), &sel.indices);
            println!(
                "sensors r={r:2} scaled={scaled:5}: pct {:.6} rank {:6} idx {:?}",
                s_enum.percentile_of(val),
                s_enum.rank_of(val),
                sel.indices
            );
        }
    }

    let a_enum = enumerate_proxy(16, 4, &wo.slice(s![16.., 16..])).unwrap();
    let a_cost = actuator_cost_inverted_gaussian(16, 0.0).unwrap();
    let allowed = velocity_block(32).unwrap();
    for r in [8usize, 16, 32] {
        let modes = balance(&full, r).unwrap();
        for scaled in [false, true] {
            let mut v: Array2<f64> = modes.phi_r.t().to_owned();
            if scaled {
                for (i, mut row) in v.rows_mut().into_iter().enumerate() {
                    row *= modes.hsv[i].sqrt();
                }
            }
            let (restricted, map) = restrict_candidates(&v.view(), &allowed).unwrap();
            let sub = a_cost.subset(&allowed).unwrap();
            let sel = qr_pivot_select_cost(&restricted.view(), &sub, 4).unwrap();
            let sel = translate_selection(&sel, &map).unwrap();
            let val = h2_proxy_actuators(&wo.view(), &sel.indices);
            println!(
                "actuators r={r:2} scaled={scaled:5}: rank {:4} of {} idx {:?}",
                a_enum.rank_of(val),
                a_enum.count(),
                sel.indices
            );
        }
    }
}

#[test]
#[ignore]
fn lqg_gap_new_selections() {
    use ndarray::Array1;
    use sentry_core::balanced::{select_actuators, select_sensors, LqgDesign, LqgOptions};
    let sys = build_spring_mass(16, 1.0, 1.0, 1.0).unwrap();
    let velocities = velocity_block(32).unwrap();
    let mut x0 = Array1::zeros(32);
    x0[0] = 1.0;
    let mut means = Vec::new();
    for g in [0.0f64, 10.0] {
        let s_cost = sensor_cost_gaussian(16, g).unwrap();
        let sens = select_sensors(&sys, 12, &s_cost, 6).unwrap();
        let a_cost = actuator_cost_inverted_gaussian(16, g).unwrap();
        let acts = select_actuators(&sys, 8, &a_cost, 4, Some(&velocities)).unwrap();
        println!("gamma {g}: sensors {:?} cost {:.5} | actuators {:?} cost {:.5}",
                 sens.indices, sens.total_cost, acts.indices, acts.total_cost);
        let design = LqgDesign::new(&sys, &sens.indices, &acts.indices, LqgOptions::default()).unwrap();
        let mut err = 0.0;
        for trial in 0..25u64 {
            err += design.simulate(&x0.view(), 1000 + trial).unwrap().recon_error;
        }
        means.push(err / 25.0);
    }
    println!("gap: g0 {:.4} g10 {:.4} diff {:+.2} pp", means[0], means[1], (means[1] - means[0]) * 100.0);
}

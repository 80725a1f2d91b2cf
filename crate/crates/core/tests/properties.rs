//! Property tests for the invariants of each module.

use std::f64::consts::PI;
use std::path::Path;

use logch::config::{make_initial, ICSpec, RunConfig};
use logch::diagnostics::{bulk_energy_g, energy, mass, mass_drift};
use logch::dynamics::{rhs_g, PotentialMode};
use logch::io::{decode_snapshot, diagnostics_csv, encode_snapshot};
use logch::potential::{f_of_u, fpp_of_u, free_energy_f, PotentialParams};
use logch::spectral::{Axis, GridSpec, RealField, SpectralGrid};
use logch::timestepper::{run, Formulation, SchemeKind, SchemeSpec, State, Stepper};
use logch::transform::{cosh2, g_of_u, sech2, u_of_g, G_MAX};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = PotentialParams> {
    (0.2f64..2.0, 1.05f64..4.0, 0.05f64..5.0)
        .prop_map(|(theta, ratio, nu)| PotentialParams::new(theta, theta * ratio, nu).unwrap())
}

fn scheme_kind() -> impl Strategy<Value = SchemeKind> {
    prop_oneof![Just(SchemeKind::Etd1), Just(SchemeKind::Etdrk2)]
}

fn field(n: usize, band: usize, sup: f64, seed: u64) -> RealField {
    make_initial(
        &ICSpec::RandomPerturbation {
            mean_u: 0.0,
            amplitude: sup,
            band,
        },
        GridSpec::new(n).unwrap(),
        seed,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_is_derivative_of_free_energy(u in -0.99f64..0.99, p in params()) {
        let h = 1e-5 * (1.0 - u.abs());
        let fd = (free_energy_f(u + h, &p).unwrap() - free_energy_f(u - h, &p).unwrap()) / (2.0 * h);
        let f = f_of_u(u, &p).unwrap();
        prop_assert!((fd - f).abs() <= 1e-8 * f.abs().max(1.0), "fd {fd} f {f}");
        let fd2 = (f_of_u(u + h, &p).unwrap() - f_of_u(u - h, &p).unwrap()) / (2.0 * h);
        let fpp = fpp_of_u(u, &p).unwrap();
        prop_assert!((fd2 - fpp).abs() <= 1e-8 * fpp.abs().max(1.0), "fd {fd2} fpp {fpp}");
    }

    #[test]
    fn free_energy_is_even(u in -0.999f64..0.999, p in params()) {
        prop_assert_eq!(free_energy_f(u, &p).unwrap(), free_energy_f(-u, &p).unwrap());
        prop_assert_eq!(f_of_u(u, &p).unwrap(), -f_of_u(-u, &p).unwrap());
    }

    #[test]
    fn g_round_trip(g in -9.0f64..9.0) {
        let back = g_of_u(u_of_g(g)).unwrap();
        prop_assert!((back - g).abs() <= 1e-9 * g.abs().max(1e-300) || back == g);
    }

    #[test]
    fn u_round_trip(u in -(1.0 - 1e-6)..(1.0 - 1e-6)) {
        prop_assert!((u_of_g(g_of_u(u).unwrap()) - u).abs() <= 1e-12);
    }

    #[test]
    fn sech2_and_cosh2_are_reciprocal(g in -G_MAX..G_MAX) {
        let s = sech2(g);
        prop_assert!(s > 0.0 && s <= 1.0);
        prop_assert!((cosh2(g).unwrap() * s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn stable_energy_form(g in -5.0f64..5.0, p in params()) {
        let direct = free_energy_f(g.tanh(), &p).unwrap();
        prop_assert!((bulk_energy_g(g, &p) - direct).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(seed in any::<u64>(), band in 1usize..10, log_n in 3u32..7) {
        let n = 1usize << log_n;
        let band = band.min(n / 3);
        let f = field(n, band, 1.0, seed);
        let sg = SpectralGrid::new(f.grid());
        let fh = sg.forward(&f).unwrap();
        let spec: f64 = fh.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() / (n * n) as f64;
        let phys: f64 = f.values().iter().map(|v| v * v).sum();
        prop_assert!((spec - phys).abs() <= 1e-12 * phys);
        let back = sg.inverse(&fh).unwrap();
        prop_assert!(back.max_abs_diff(&f) <= 1e-14 * f.max_abs().max(1.0));
    }

    #[test]
    fn derivative_eigenvalues(mx in -10i64..=10, my in -10i64..=10, phase in 0.0f64..6.3) {
        let grid = GridSpec::new(32).unwrap();
        let sg = SpectralGrid::new(grid);
        let arg = |x: f64, y: f64| 2.0 * PI * (mx as f64 * x + my as f64 * y) + phase;
        let f = RealField::from_fn(grid, |x, y| arg(x, y).cos());
        let dx = sg.derivative(&f, Axis::X).unwrap();
        let dy = sg.derivative(&f, Axis::Y).unwrap();
        let lap = sg.laplacian(&f).unwrap();
        let ex = RealField::from_fn(grid, |x, y| -2.0 * PI * mx as f64 * arg(x, y).sin());
        let ey = RealField::from_fn(grid, |x, y| -2.0 * PI * my as f64 * arg(x, y).sin());
        let k2 = 4.0 * PI * PI * (mx * mx + my * my) as f64;
        let el = f.map(|v| -k2 * v);
        let scale = 2.0 * PI * 10.0;
        prop_assert!(dx.max_abs_diff(&ex) <= 1e-10 * scale);
        prop_assert!(dy.max_abs_diff(&ey) <= 1e-10 * scale);
        prop_assert!(lap.max_abs_diff(&el) <= 1e-10 * scale * scale);
    }

    #[test]
    fn semigroup_multiplier_bounds(log_dt in -9.0f64..-3.0, nu in 0.01f64..10.0, log_n in 3u32..8) {
        let sg = SpectralGrid::new(GridSpec::new(1 << log_n).unwrap());
        let dt = 10f64.powf(log_dt);
        let e = sg.semigroup_multiplier(dt, nu);
        prop_assert_eq!(e.at(0, 0), 1.0);
        for (&v, &k2) in e.values().iter().zip(sg.k_squared()) {
            prop_assert!((0.0..=1.0).contains(&v));
            // positive wherever the exponent is representable
            if nu * k2 * k2 * dt < 700.0 {
                prop_assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn rhs_is_odd_in_g(seed in any::<u64>(), band in 1usize..4, sup in 0.1f64..3.0, p in params()) {
        let g = field(32, band, sup, seed);
        let sg = SpectralGrid::new(g.grid());
        let a = rhs_g(&sg, &g, &p).unwrap().total;
        let b = rhs_g(&sg, &g.map(|v| -v), &p).unwrap().total;
        let scale = a.max_abs().max(1.0);
        prop_assert!(a.zip_map(&b, |x, y| x + y).unwrap().max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn rhs_commutes_with_grid_shifts(seed in any::<u64>(), sx in 0usize..32, sy in 0usize..32) {
        let g = field(32, 3, 2.0, seed);
        let grid = g.grid();
        let n = grid.n();
        let shift = |f: &RealField| {
            let v: Vec<f64> = (0..n * n)
                .map(|i| {
                    let (iy, ix) = (i / n, i % n);
                    f.values()[((iy + sy) % n) * n + (ix + sx) % n]
                })
                .collect();
            RealField::from_vec(grid, v).unwrap()
        };
        let sg = SpectralGrid::new(grid);
        let p = PotentialParams::default();
        let a = shift(&rhs_g(&sg, &g, &p).unwrap().total);
        let b = rhs_g(&sg, &shift(&g), &p).unwrap().total;
        prop_assert!(a.max_abs_diff(&b) <= 1e-10 * a.max_abs());
    }

    #[test]
    fn breakdown_sums_to_total(seed in any::<u64>(), band in 1usize..4, p in params()) {
        let g = field(32, band, 2.0, seed);
        let sg = SpectralGrid::new(g.grid());
        let b = rhs_g(&sg, &g, &p).unwrap();
        let mut sum = RealField::zeros(g.grid());
        for (_, t) in b.terms() {
            sum = sum.zip_map(t, |a, c| a + c).unwrap();
        }
        prop_assert!(sum.max_abs_diff(&b.total) <= 1e-13 * b.total.max_abs().max(1.0));
    }

    #[test]
    fn constants_are_fixed_points(c in -15.0f64..15.0, kind in scheme_kind(), log_dt in -7.0f64..-3.0, p in params()) {
        let grid = GridSpec::new(16).unwrap();
        let sg = SpectralGrid::new(grid);
        let mut st = Stepper::new(&sg, SchemeSpec::new(kind, 10f64.powf(log_dt)).unwrap(), p.nu).unwrap();
        let mut s = State::initial(RealField::constant(grid, c));
        for _ in 0..5 {
            let next = st.step(&s, Formulation::Transformed, &p).unwrap();
            prop_assert!(next.g.max_abs_diff(&s.g) <= 1e-14);
            s = next;
        }
    }

    #[test]
    fn odd_fields_carry_no_mass(seed in any::<u64>(), sup in 0.1f64..10.0) {
        // g(-x, -y) = -g(x, y)
        let g = field(32, 4, sup, seed);
        let n = g.grid().n();
        let v: Vec<f64> = (0..n * n)
            .map(|i| {
                let (iy, ix) = (i / n, i % n);
                let j = ((n - iy) % n) * n + (n - ix) % n;
                0.5 * (g.values()[i] - g.values()[j])
            })
            .collect();
        let odd = RealField::from_vec(g.grid(), v).unwrap();
        prop_assert!(mass(&odd).abs() <= 1e-14);
    }

    #[test]
    fn energy_of_constants(c in -8.0f64..8.0, p in params()) {
        let grid = GridSpec::new(16).unwrap();
        let sg = SpectralGrid::new(grid);
        let e = energy(&sg, &RealField::constant(grid, c), &p).unwrap();
        prop_assert!((e - bulk_energy_g(c, &p)).abs() <= 1e-13 * (1.0 + e.abs()));
    }
}

fn ic() -> impl Strategy<Value = ICSpec> {
    prop_oneof![
        (-0.95f64..0.95, 1e-4f64..2.0, 1usize..5).prop_map(|(mean_u, amplitude, band)| ICSpec::RandomPerturbation {
            mean_u,
            amplitude,
            band
        }),
        (0.01f64..5.0).prop_map(|width| ICSpec::TanhStripe { width }),
        (-3i64..=3, -3i64..=3, -5.0f64..5.0).prop_map(|(a, b, amplitude)| ICSpec::SingleMode { m: [a, b], amplitude }),
    ]
}

fn config() -> impl Strategy<Value = RunConfig> {
    (params(), 3u32..8, scheme_kind(), 1u64..1000, ic(), any::<u64>(), 1u64..50, 1u64..50).prop_map(
        |(params, log_n, kind, steps, ic, seed, record_every, snapshot_every)| {
            let dt = 1e-5;
            let grid = GridSpec::new(1 << log_n).unwrap();
            let ic = match ic {
                ICSpec::RandomPerturbation { mean_u, amplitude, band } => ICSpec::RandomPerturbation {
                    mean_u,
                    amplitude,
                    band: band.min(grid.dealias_cutoff()),
                },
                other => other,
            };
            RunConfig {
                params,
                grid,
                scheme: SchemeSpec::new(kind, dt).unwrap(),
                t_end: steps as f64 * dt,
                ic,
                seed,
                record_every,
                snapshot_every,
                out_dir: format!("out/{seed}").into(),
            }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip(cfg in config()) {
        let text = cfg.to_toml();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn initial_data_is_deterministic(cfg in config()) {
        let a = make_initial(&cfg.ic, cfg.grid, cfg.seed).unwrap();
        let b = make_initial(&cfg.ic, cfg.grid, cfg.seed).unwrap();
        prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(a.is_finite());
    }

    #[test]
    fn snapshot_round_trip(bits in prop::collection::vec(any::<u64>(), 64), t in any::<f64>()) {
        let values: Vec<f64> = bits.into_iter().map(f64::from_bits).collect();
        let f = RealField::from_vec(GridSpec::new(8).unwrap(), values).unwrap();
        let (g, t2) = decode_snapshot(&encode_snapshot(&f, t), Path::new("mem")).unwrap();
        prop_assert_eq!(t.to_bits(), t2.to_bits());
        prop_assert!(f.values().iter().zip(g.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncated_snapshots_are_rejected(cut in 0usize..532) {
        let f = RealField::constant(GridSpec::new(8).unwrap(), 0.5);
        let bytes = encode_snapshot(&f, 1.0);
        prop_assert!(decode_snapshot(&bytes[..cut], Path::new("mem")).is_err());
    }

    #[test]
    fn potential_mode_round_trip(n in 0usize..500, eps in 1e-12f64..0.5) {
        for m in [PotentialMode::ExactLog, PotentialMode::Truncated(n), PotentialMode::PhiEps(eps)] {
            prop_assert_eq!(m.to_string().parse::<PotentialMode>().unwrap(), m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn short_runs_keep_invariants(seed in any::<u64>(), kind in scheme_kind(), mean_u in -0.6f64..0.6) {
        let cfg = RunConfig {
            grid: GridSpec::new(32).unwrap(),
            scheme: SchemeSpec::new(kind, 1e-5).unwrap(),
            t_end: 2e-3,
            ic: ICSpec::RandomPerturbation { mean_u, amplitude: 0.05, band: 2 },
            seed,
            record_every: 20,
            ..RunConfig::default()
        };
        let out = run(&cfg).unwrap();
        for r in &out.records {
            prop_assert!(r.max_abs_u < 1.0);
            prop_assert!((r.max_abs_u - r.max_abs_g.tanh()).abs() <= 1e-12);
        }
        for w in out.records.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy + 1e-10 * (1.0 + w[0].energy.abs()));
        }
        // CSV carries every value exactly
        let csv = diagnostics_csv(&out.records);
        for (line, r) in csv.lines().skip(1).zip(&out.records) {
            let parsed: Vec<f64> = line.split(',').filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
            prop_assert_eq!(parsed[0], r.t);
            prop_assert_eq!(parsed[2], r.energy);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn mass_drift_shrinks_at_scheme_order(seed in any::<u64>(), kind in scheme_kind()) {
        let drift = |dt: f64| {
            let cfg = RunConfig {
                grid: GridSpec::new(32).unwrap(),
                scheme: SchemeSpec::new(kind, dt).unwrap(),
                t_end: 2e-3,
                ic: ICSpec::RandomPerturbation { mean_u: 0.25, amplitude: 0.05, band: 2 },
                seed,
                record_every: 20,
                ..RunConfig::default()
            };
            mass_drift(&run(&cfg).unwrap().records)
        };
        let order = (drift(1e-5) / drift(5e-6)).log2();
        let p = kind.order() as f64;
        prop_assert!((order - p).abs() <= 0.3, "{kind}: observed {order}");
    }
}

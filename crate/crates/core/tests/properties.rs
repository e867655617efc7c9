//! Property tests for the invariants each module promises.

use num_complex::Complex64;
use proptest::prelude::*;

use nibplan::access::{capped_rates, sca_allocate, AccessCell, BackhaulCap};
use nibplan::association::{associate_max_sinr, associate_nearest, CandidateLink};
use nibplan::backhaul::noma_closed_form;
use nibplan::beamopt::{min_enclosing_circle, optimize_beam, BeamGeometry};
use nibplan::channel::{access_channel_with_fading, al_beam_gain, al_path_loss_db, BeamPose};
use nibplan::deployment::{cover_lower_bound, coverage_matrix, gdc_exact, gdc_greedy, uncovered_users};
use nibplan::metrics::jain_index;
use nibplan::scenario::{generate_users, CapMode, Environment, GroundUser, NibConfig, ScenarioConfig};
use nibplan::units::{db_to_lin, dbm_to_w, lin_to_db, w_to_dbm};
use nibplan::Point2;

fn pts(max: usize, side: f64) -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec((0.0..side, 0.0..side).prop_map(|(x, y)| Point2::new(x, y)), 1..max)
}

fn user(id: usize, p: Point2) -> GroundUser {
    GroundUser {
        id,
        position: p,
        rat: 0,
        noise_figure_db: 7.0,
        backhaul_dependent: false,
        assoc_nib: None,
        power_coeff: 0.0,
    }
}

fn env_strategy() -> impl Strategy<Value = Environment> {
    prop_oneof![
        Just(Environment::sub_urban()),
        Just(Environment::urban()),
        Just(Environment::dense_urban()),
        Just(Environment::high_rise()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn users_inside_coverage_and_reproducible(seed in 0u64..1000, density in 0.0f64..30.0, radius in 100.0f64..3000.0) {
        let mut cfg = ScenarioConfig::default();
        cfg.seed = seed;
        cfg.user_density_per_km2 = density;
        cfg.haps.coverage_radius_m = radius;
        let a = generate_users(&cfg).unwrap();
        let b = generate_users(&cfg).unwrap();
        prop_assert_eq!(&a, &b);
        for u in &a.users {
            prop_assert!(u.position.dist(cfg.haps.center) <= radius * (1.0 + 1e-12));
            prop_assert!(u.rat < cfg.rats.len());
        }
    }

    #[test]
    fn db_round_trips(x in -200.0f64..200.0) {
        prop_assert!((lin_to_db(db_to_lin(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
        prop_assert!((w_to_dbm(dbm_to_w(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn beam_gain_peaks_at_boresight_and_falls(hpbw in 2.0f64..60.0, g_db in 0.0f64..30.0) {
        let g_max = db_to_lin(g_db);
        let mut prev = al_beam_gain(0.0, hpbw, g_max).unwrap();
        prop_assert_eq!(prev, g_max);
        // main lobe: out to the first null, a bit past the half-power angle
        let edge = (hpbw * 1.8).min(89.0);
        for i in 1..=200 {
            let g = al_beam_gain(edge * i as f64 / 200.0, hpbw, g_max).unwrap();
            prop_assert!(g <= prev * (1.0 + 1e-12));
            prev = g;
        }
    }

    #[test]
    fn path_loss_increases_with_distance(env in env_strategy(), h in 50.0f64..5000.0, d in 1.0f64..10.0, k in 1.001f64..3.0) {
        let a = al_path_loss_db(h * d, h, 2e9, &env).unwrap();
        let b = al_path_loss_db(h * d * k, h, 2e9, &env).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn plans_cover_everyone(points in pts(40, 10.0), r in 0.5f64..4.0) {
        let d = coverage_matrix(&points, r).unwrap();
        let g = gdc_greedy(&d);
        prop_assert!(uncovered_users(&points, &g.centers, r).is_empty());
        if points.len() <= 16 {
            let e = gdc_exact(&d, 20).unwrap();
            prop_assert!(uncovered_users(&points, &e.centers, r).is_empty());
            prop_assert!(g.count() >= e.count());
            prop_assert!(e.count() >= cover_lower_bound(&d).unwrap());
        }
    }

    #[test]
    fn exact_count_non_increasing_in_radius(points in pts(14, 10.0), r in 0.5f64..3.0, grow in 1.0f64..2.0) {
        let small = gdc_exact(&coverage_matrix(&points, r).unwrap(), 20).unwrap().count();
        let large = gdc_exact(&coverage_matrix(&points, r * grow).unwrap(), 20).unwrap().count();
        prop_assert!(large <= small);
    }

    #[test]
    fn mec_contains_and_ignores_interior_points(points in pts(30, 100.0)) {
        let c = min_enclosing_circle(&points).unwrap();
        let tol = 1e-9 * (c.radius + 100.0);
        for p in &points {
            prop_assert!(p.dist(c.center) <= c.radius + tol);
        }
        // dropping a point strictly inside leaves the circle unchanged
        if let Some(i) = points.iter().position(|p| p.dist(c.center) < c.radius - 1e-6 * (c.radius + 1.0)) {
            let mut rest = points.clone();
            rest.remove(i);
            let c2 = min_enclosing_circle(&rest).unwrap();
            prop_assert!((c2.radius - c.radius).abs() <= tol);
            prop_assert!(c2.center.dist(c.center) <= 1e-6 * (c.radius + 1.0));
        }
    }

    #[test]
    fn optimized_beam_covers_members(points in pts(20, 2000.0), env in env_strategy()) {
        let nib = NibConfig { ..ScenarioConfig::default().nib };
        if let Ok(g) = optimize_beam(&points, &env, 2e9, &nib, 0.15, 1) {
            for p in &points {
                prop_assert!(p.dist(g.center) <= g.radius_m * (1.0 + 1e-9) + 1e-6);
            }
            prop_assert!(g.hpbw_deg >= nib.hpbw_bounds_deg[0] * (1.0 - 1e-9));
            prop_assert!(g.hpbw_deg <= nib.hpbw_bounds_deg[1] * (1.0 + 1e-9));
            prop_assert!(g.altitude_m <= nib.altitude_bounds_m[1] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn noma_budget_and_sic_order(
        mut aleph in prop::collection::vec(1e-3f64..3.0, 1..8),
        r_th in 0.0f64..2e8,
    ) {
        aleph.sort_by(|a, b| b.total_cmp(a));
        let a = noma_closed_form(&aleph, r_th, 1e8).unwrap();
        prop_assert!((a.fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(a.fractions.iter().all(|&f| f >= -1e-15));
        if let Some(s) = a.pivot {
            prop_assert!(a.f_hat.iter().sum::<f64>() + a.leftover <= 1.0 + 1e-12);
            for j in 0..s {
                prop_assert_eq!(a.fractions[j], 0.0);
            }
            // weaker served NIBs get more power, the strongest excepted
            let n = aleph.len();
            for j in s..n.saturating_sub(2) {
                prop_assert!(a.fractions[j] >= a.fractions[j + 1] * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn lower_threshold_never_raises_pivot(
        mut aleph in prop::collection::vec(1e-3f64..3.0, 1..8),
        r_th in 1e6f64..2e8,
        shrink in 0.0f64..1.0,
    ) {
        aleph.sort_by(|a, b| b.total_cmp(a));
        let hi = noma_closed_form(&aleph, r_th, 1e8).unwrap().pivot.unwrap_or(aleph.len());
        let lo = noma_closed_form(&aleph, r_th * shrink, 1e8).unwrap().pivot.unwrap_or(aleph.len());
        prop_assert!(lo <= hi);
    }

    #[test]
    fn sca_certificates(
        gains in prop::collection::vec(1.0f64..1e4, 1..10),
        capped_bits in prop::collection::vec(any::<bool>(), 10),
        floor_frac in 0.0f64..0.9,
        cap_frac in 0.3f64..2.0,
    ) {
        let n = gains.len();
        let bw = 1e7;
        let min_rate = gains.iter().map(|&c| bw * (1.0 + c * floor_frac / n as f64).log2()).fold(f64::INFINITY, f64::min);
        let cell = AccessCell {
            nib: 0,
            rat: 0,
            users: (0..n).collect(),
            gain: gains.clone(),
            capped: capped_bits[..n].to_vec(),
            bandwidth_hz: bw,
            min_rate_bps: min_rate,
        };
        let uniform: f64 = (0..n).filter(|&k| cell.capped[k]).map(|k| cell.rate(k, 1.0 / n as f64)).sum();
        let cap = BackhaulCap { mode: CapMode::Global, caps: vec![if uniform > 0.0 { uniform * cap_frac } else { f64::INFINITY }] };
        let cells = [cell];
        if let Ok(a) = sca_allocate(&cells, &cap, 100, 1e-10) {
            prop_assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
            // independent re-check of the constraints
            let p = &a.p[0];
            prop_assert!(p.iter().all(|&x| (-1e-15..=1.0 + 1e-12).contains(&x)));
            prop_assert!(p.iter().sum::<f64>() <= 1.0 + 1e-9);
            for k in 0..n {
                let r = bw * (1.0 + cells[0].gain[k] * p[k]).log2();
                prop_assert!(r >= min_rate * (1.0 - 1e-9));
            }
            let used: f64 = (0..n).filter(|&k| cells[0].capped[k]).map(|k| bw * (1.0 + cells[0].gain[k] * p[k]).log2()).sum();
            prop_assert!(used <= cap.caps[0] * (1.0 + 1e-9) + 1e-6);
            prop_assert!((capped_rates(&cells, &a.p, &cap)[0] - used).abs() <= 1e-6 * used.max(1.0));
        }
    }

    #[test]
    fn jain_scale_invariant_and_bounded(rates in prop::collection::vec(0.0f64..1e9, 1..50), k in 1e-6f64..1e6) {
        let a = jain_index(&rates);
        let scaled: Vec<f64> = rates.iter().map(|r| r * k).collect();
        let b = jain_index(&scaled);
        prop_assert!((a.index - b.index).abs() <= 1e-9);
        prop_assert!(a.index <= 1.0 + 1e-12);
        prop_assert!(a.index >= 1.0 / rates.len() as f64 - 1e-12);
        prop_assert_eq!(jain_index(&rates), a);
    }

    #[test]
    fn association_is_exactly_one_and_scale_invariant(
        xs in prop::collection::vec(0.0f64..3000.0, 1..30),
        scale in 1e-3f64..1e3,
        seed in 0u64..100,
    ) {
        let users: Vec<GroundUser> = xs.iter().enumerate().map(|(i, &x)| user(i, Point2::new(x, 0.0))).collect();
        let beams: Vec<BeamGeometry> = [0.0, 1000.0, 2000.0, 3000.0]
            .iter()
            .map(|&c| BeamGeometry { center: Point2::new(c, 0.0), radius_m: 1100.0, elevation_deg: 45.0, altitude_m: 1100.0, hpbw_deg: 45.0, clamped: false })
            .collect();
        let env = Environment::sub_urban();
        let mut links = Vec::new();
        let mut sinr = Vec::new();
        let mut state = seed;
        for u in &users {
            let mut ls = Vec::new();
            let mut ss = Vec::new();
            for (j, b) in beams.iter().enumerate() {
                if u.position.dist(b.center) <= b.radius_m {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let f = Complex64::new(((state >> 33) as f64 / (1u64 << 31) as f64) + 0.1, 0.0);
                    let ch = access_channel_with_fading(u.position, &b.pose(), 2e9, &env, 10.0, vec![f]).unwrap();
                    ss.push(ch.norm_sqr());
                    ls.push(CandidateLink { nib: j, channel: ch });
                }
            }
            links.push(ls);
            sinr.push(ss);
        }
        let m = associate_max_sinr(&users, &links, &sinr, beams.len(), 1).unwrap();
        let scaled: Vec<Vec<f64>> = sinr.iter().map(|v| v.iter().map(|s| s * scale).collect()).collect();
        let m2 = associate_max_sinr(&users, &links, &scaled, beams.len(), 1).unwrap();
        prop_assert_eq!(&m.nib_of, &m2.nib_of);
        let total: usize = m.members.iter().map(Vec::len).sum();
        prop_assert_eq!(total, users.len());
        for (k, &j) in m.nib_of.iter().enumerate() {
            prop_assert!(users[k].position.dist(beams[j].center) <= beams[j].radius_m);
            // brute-force argmax, lowest id on ties
            let best = links[k].iter().zip(&sinr[k]).fold((f64::NEG_INFINITY, usize::MAX), |acc, (l, &s)| if s > acc.0 { (s, l.nib) } else { acc });
            prop_assert_eq!(j, best.1);
        }
    }
}

#[test]
fn unit_fading_max_sinr_matches_nearest() {
    // identical beams and unit fading: gain falls with distance, so both rules agree
    let env = Environment::sub_urban();
    let beams: Vec<BeamGeometry> = (0..5)
        .map(|j| BeamGeometry {
            center: Point2::new(700.0 * j as f64, 0.0),
            radius_m: 800.0,
            elevation_deg: 45.0,
            altitude_m: 800.0,
            hpbw_deg: 45.0,
            clamped: false,
        })
        .collect();
    let users: Vec<GroundUser> = (0..60).map(|i| user(i, Point2::new(47.0 * i as f64 + 3.0, 120.0))).collect();
    let mut links = Vec::new();
    let mut sinr = Vec::new();
    for u in &users {
        let mut ls = Vec::new();
        let mut ss = Vec::new();
        for (j, b) in beams.iter().enumerate() {
            if u.position.dist(b.center) <= b.radius_m {
                let pose = BeamPose { center: b.center, altitude_m: b.altitude_m, hpbw_deg: b.hpbw_deg };
                let ch = access_channel_with_fading(u.position, &pose, 2e9, &env, 10.0, vec![Complex64::new(1.0, 0.0)]).unwrap();
                ss.push(ch.norm_sqr());
                ls.push(CandidateLink { nib: j, channel: ch });
            }
        }
        links.push(ls);
        sinr.push(ss);
    }
    let a = associate_max_sinr(&users, &links, &sinr, beams.len(), 1).unwrap();
    let b = associate_nearest(&users, &beams, 1).unwrap();
    assert_eq!(a.nib_of, b.nib_of);
}

#[test]
fn rat_frequencies_match_demand() {
    let mut cfg = ScenarioConfig::default();
    cfg.user_density_per_km2 = 200.0;
    let users = generate_users(&cfg).unwrap();
    let k = users.users.len();
    assert!(k >= 10_000, "{k}");
    let mut counts = vec![0usize; cfg.rats.len()];
    for u in &users.users {
        counts[u.rat] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&cfg.rats)
        .map(|(&c, r)| {
            let e = r.demand_prob * k as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 95% quantile of chi-square with 3 degrees of freedom
    assert!(chi2 < 7.815, "chi2 = {chi2}");
}

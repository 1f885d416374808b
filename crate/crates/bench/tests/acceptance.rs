//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion outside `KNOWN_FAILING` fails. Set
//! `ACCEPTANCE_STRICT=1` to fail on every criterion.

use std::f64::consts::PI;
use std::time::Instant;

use push_bench::suite::{run_cell, Cell, CellSummary};
use push_bench::{summarize, EstimatorMode, GoalRegion, TaskKind, TrialRecord};
use push_core::dynamics::{
    motion_cone, predict_one_step, push_substep, rollout, stick_twist, substep_motion, ContactMode,
    ObjectState, PushAction, PLANNER_SUBSTEP, SIM_SUBSTEP,
};
use push_core::estimation::{
    default_prior, init_belief, observation_covariance, predict_action, process_jacobian, update,
    vector_to_state, EkfConfig, StateVector, STATE_DIM,
};
use push_core::geometry::{cross, rotate, wrap_angle, Pose2, ShapeContour, ShapeLibrary, SurfaceContact, Vec2};
use push_core::planner::{OptimizerKind, SamplerKind};
use push_core::sim::{sample_inside, ComMode, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Criteria that are recorded as not reproducible in this simulator.
const KNOWN_FAILING: &[u32] = &[4];

const BENCH_OBJECTS: [&str; 3] = ["triangle", "butter", "hexagon"];
const TRIALS: usize = 60;
const SEED: u64 = 0;
/// Softmax temperature used for every affordance-sampled cell.
const TEMPERATURE: f64 = 0.1;

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec2 {
    let a: f64 = rng.random_range(-PI..PI);
    Vec2::new(a.cos(), a.sin())
}

// ---------------------------------------------------------------------------
// 1. Dynamics properties

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let cases = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lib = ShapeLibrary::builtin();
    let contours: Vec<ShapeContour> = lib.names().iter().map(|n| lib.contour(n).unwrap()).collect();
    let mut failures = Vec::new();

    // Frame equivariance of a full substep on a real contour.
    let mut bad = 0;
    for _ in 0..cases {
        let c = &contours[rng.random_range(0..contours.len())];
        let com = sample_inside(c, &mut rng);
        let s = ObjectState::new(
            Pose2::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-PI..PI)),
            com,
            rng.random_range(0.02..0.06),
            rng.random_range(0.1..1.0),
        )
        .unwrap();
        let contact = SurfaceContact {
            segment: rng.random_range(0..c.len()),
            offset: 0.0,
        };
        let n = s.pose.transform_vector(&c.normals[contact.segment]);
        let u = rotate(&(-n), rng.random_range(-1.3..1.3)) * rng.random_range(1e-4..2e-3);
        let phi: f64 = rng.random_range(-PI..PI);
        let t = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let moved = ObjectState {
            pose: Pose2 {
                position: rotate(&s.pose.position, phi) + t,
                theta: s.pose.theta + phi,
            },
            ..s
        };
        let a = push_substep(&s, c, &contact, &u).unwrap();
        let b = push_substep(&moved, c, &contact, &rotate(&u, phi)).unwrap();
        let dv_a = rotate(&(a.state.pose.position - s.pose.position), phi);
        let dv_b = b.state.pose.position - moved.pose.position;
        let dw = wrap_angle((a.state.pose.theta - s.pose.theta) - (b.state.pose.theta - moved.pose.theta));
        if (dv_a - dv_b).norm() > 1e-9 || dw.abs() > 1e-9 || a.mode != b.mode {
            bad += 1;
        }
    }
    if bad > 0 {
        failures.push(format!("equivariance {bad}/{cases}"));
    }

    // Sticking consistency and the quasi-static bound.
    let mut bad = 0;
    let mut sticking = 0;
    while sticking < cases {
        let r = random_unit(&mut rng) * rng.random_range(0.005..0.1);
        let n = random_unit(&mut rng);
        let mu = rng.random_range(0.1..1.0);
        let l = rng.random_range(0.02..0.06);
        let cone = motion_cone(&r, &n, mu, l);
        // Random direction between the cone edges.
        let t: f64 = rng.random_range(0.0..1.0);
        let dir = (cone.right * (1.0 - t) + cone.left * t).normalize();
        if dir.dot(&n) >= -1e-3 {
            continue;
        }
        sticking += 1;
        let u = dir * rng.random_range(1e-4..2e-3);
        let m = substep_motion(&r, &n, &u, mu, l);
        let w = m.twist.point_velocity(&r);
        if m.mode != ContactMode::Sticking
            || (w - u).norm() > 1e-9
            || (w.norm() - u.norm()).abs() > 1e-9
            || m.twist.v.norm() > u.norm() + 1e-9
        {
            bad += 1;
        }
    }
    if bad > 0 {
        failures.push(format!("sticking {bad}/{cases}"));
    }

    // Sliding: normal components agree and the force lies on a cone edge.
    let mut bad = 0;
    let mut sliding = 0;
    while sliding < cases {
        let r = random_unit(&mut rng) * rng.random_range(0.005..0.1);
        let n = random_unit(&mut rng);
        let mu = rng.random_range(0.05..1.0);
        let l = rng.random_range(0.02..0.06);
        let u = rotate(&(-n), rng.random_range(-1.5..1.5)) * rng.random_range(1e-4..2e-3);
        let m = substep_motion(&r, &n, &u, mu, l);
        if !matches!(m.mode, ContactMode::SlidingLeft | ContactMode::SlidingRight) {
            continue;
        }
        sliding += 1;
        let cone = motion_cone(&r, &n, mu, l);
        let w = m.twist.point_velocity(&r);
        let on_edge = cross(&m.force, &cone.left_force).abs() < 1e-12 && m.force.dot(&cone.left_force) > 0.0
            || cross(&m.force, &cone.right_force).abs() < 1e-12 && m.force.dot(&cone.right_force) > 0.0;
        if (w.dot(&n) - u.dot(&n)).abs() > 1e-9 || !on_edge {
            bad += 1;
        }
    }
    if bad > 0 {
        failures.push(format!("sliding {bad}/{cases}"));
    }

    // ω sign for pushes along the inward normal.
    let mut bad = 0;
    let mut signed = 0;
    while signed < cases {
        let r = random_unit(&mut rng) * rng.random_range(0.005..0.1);
        let n = random_unit(&mut rng);
        let lever = cross(&r, &(-n));
        if lever.abs() < 1e-6 {
            continue;
        }
        signed += 1;
        let u = -n * rng.random_range(1e-4..2e-3);
        let m = substep_motion(&r, &n, &u, rng.random_range(0.05..1.0), rng.random_range(0.02..0.06));
        if m.twist.omega * lever <= 0.0 {
            bad += 1;
        }
    }
    if bad > 0 {
        failures.push(format!("omega sign {bad}/{cases}"));
    }

    // Stand-alone check of the sticking closed form against its definition.
    for _ in 0..cases {
        let r = random_unit(&mut rng) * rng.random_range(0.0..0.1);
        let u = random_unit(&mut rng) * rng.random_range(0.0..2e-3);
        let tw = stick_twist(&r, &u, 0.04);
        if (tw.point_velocity(&r) - u).norm() > 1e-9 {
            failures.push("stick_twist reconstruction".into());
            break;
        }
    }

    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        failures.push(format!("runtime {secs:.1} s"));
    }
    Verdict {
        id: 1,
        name: "dynamics property suite",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("5 properties x {cases} cases, {secs:.2} s")
        } else {
            failures.join(", ")
        },
    }
}

// ---------------------------------------------------------------------------
// 2. One-step vs rollout

fn criterion_2() -> Verdict {
    let lib = ShapeLibrary::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let names = lib.names();
    while cases < 100 {
        let c = lib.contour(names[rng.random_range(0..names.len())]).unwrap();
        let idx = rng.random_range(0..c.len());
        let mu: f64 = rng.random_range(0.2..0.8);
        // Push direction inside the friction cone; COM placed on the push
        // line, so the push is a rotation-free sticking translation.
        let angle = rng.random_range(-0.8..0.8) * mu.atan();
        let dir_local = rotate(&(-c.normals[idx]), angle);
        let depth = rng.random_range(0.005..0.05);
        let com = c.points[idx] + dir_local * depth;
        if !c.contains(&com) {
            continue;
        }
        // Skip contacts whose neighbouring sample lies on a different edge.
        if !c.same_normal(idx, c.next_index(idx)) || !c.same_normal(idx, c.prev_index(idx)) {
            continue;
        }
        let s = ObjectState::new(
            Pose2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-PI..PI)),
            com,
            rng.random_range(0.02..0.06),
            mu,
        )
        .unwrap();
        let action = PushAction::new(idx, angle, rng.random_range(0.01..0.05));
        let one = predict_one_step(&s, &c, &action).unwrap();
        for substep in [PLANNER_SUBSTEP, SIM_SUBSTEP] {
            let fine = rollout(&s, &c, &action, substep).unwrap();
            if one.contact_lost || fine.contact_lost {
                worst = f64::INFINITY;
            }
            worst = worst
                .max((one.delta_position - fine.delta_position).norm())
                .max((one.delta_theta - fine.delta_theta).abs());
        }
        cases += 1;
    }
    let agree = worst <= 1e-6;

    // Near-corner divergence, one constructed case per object: search the
    // contour for a ±60° push that slides off under the fine rollout.
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for name in &names {
        let c = lib.contour(name).unwrap();
        let mut hit = None;
        'search: for mu in [0.2, 0.1, 0.05] {
            let s = ObjectState::new(Pose2::identity(), Vec2::zeros(), 0.04, mu).unwrap();
            for idx in 0..c.len() {
                for angle in [60f64.to_radians(), -60f64.to_radians()] {
                    let action = PushAction::new(idx, angle, 0.05);
                    let one = predict_one_step(&s, &c, &action).unwrap();
                    let fine = rollout(&s, &c, &action, SIM_SUBSTEP).unwrap();
                    if fine.contact_lost && !one.contact_lost {
                        hit = Some((idx, angle.to_degrees(), mu));
                        break 'search;
                    }
                }
            }
        }
        match hit {
            Some((idx, a, mu)) => found.push(format!("{name}@{idx}/{a:+.0}deg/mu{mu}")),
            None => missing.push(name.to_string()),
        }
    }
    Verdict {
        id: 2,
        name: "one-step vs rollout",
        pass: agree && missing.is_empty(),
        detail: format!(
            "flat-edge max deviation {worst:.2e} over 100 cases; divergence cases: {}{}",
            found.join(" "),
            if missing.is_empty() { String::new() } else { format!("; none for {}", missing.join(",")) }
        ),
    }
}

// ---------------------------------------------------------------------------
// Pooling helpers for the closed-loop criteria.

struct Pooled {
    trials: usize,
    successes: usize,
    steps_all: f64,
    final_error_mm: f64,
}

fn pool(records: &[&TrialRecord]) -> Pooled {
    let trials = records.len();
    let wins: Vec<&&TrialRecord> = records.iter().filter(|r| r.success).collect();
    let mean = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    Pooled {
        trials,
        successes: wins.len(),
        steps_all: mean(records.iter().map(|r| r.steps_taken as f64).collect()),
        final_error_mm: mean(records.iter().map(|r| r.final_error_mm).collect()),
    }
}

impl Pooled {
    fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

fn cell(object: &str, task: TaskKind, sampler: SamplerKind, k: usize) -> Cell {
    Cell {
        temperature: TEMPERATURE,
        ..Cell::new(object, task, sampler, k)
    }
}

/// Runs `make(object)` for each benchmark object and concatenates the records.
fn run_objects(lib: &ShapeLibrary, make: impl Fn(&str) -> Cell) -> Vec<TrialRecord> {
    BENCH_OBJECTS
        .iter()
        .flat_map(|o| run_cell(&make(o), lib, TRIALS, SEED).unwrap())
        .collect()
}

fn refs(r: &[TrialRecord]) -> Vec<&TrialRecord> {
    r.iter().collect()
}

// ---------------------------------------------------------------------------
// 3. Sampler comparison

fn criterion_3(lib: &ShapeLibrary) -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    let mut steps = std::collections::HashMap::new();
    for task in TaskKind::ALL {
        for (sampler, ks) in [
            (SamplerKind::Ana, vec![1, 3, 10]),
            (SamplerKind::Geo, vec![1, 3]),
            (SamplerKind::Rdn, vec![1, 3]),
        ] {
            for k in ks {
                let records = run_objects(lib, |o| cell(o, task, sampler, k));
                steps.insert((task, sampler, k), pool(&refs(&records)));
            }
        }
    }
    // (a)
    for task in TaskKind::ALL {
        let r = steps[&(task, SamplerKind::Ana, 1)].rate();
        if r < 0.9 {
            pass = false;
            notes.push(format!("(a) ana k=1 {task} {:.0}%", r * 100.0));
        }
    }
    let a_min = TaskKind::ALL
        .iter()
        .map(|t| steps[&(*t, SamplerKind::Ana, 1)].rate())
        .fold(1.0, f64::min);
    // (b)
    let ana_t = steps[&(TaskKind::Translation, SamplerKind::Ana, 1)].rate();
    let rdn_t = steps[&(TaskKind::Translation, SamplerKind::Rdn, 1)].rate();
    if ana_t - rdn_t < 0.2 {
        pass = false;
        notes.push(format!("(b) gap {:.0} pts", (ana_t - rdn_t) * 100.0));
    }
    // (c) mean steps over all trials (failures count the full budget).
    for task in TaskKind::ALL {
        for k in [1, 3] {
            let rdn = steps[&(task, SamplerKind::Rdn, k)].steps_all;
            let geo = steps[&(task, SamplerKind::Geo, k)].steps_all;
            let ana = steps[&(task, SamplerKind::Ana, k)].steps_all;
            if !(rdn > geo && geo >= ana - 1.0) {
                pass = false;
                notes.push(format!("(c) {task} k={k}: rdn {rdn:.2} geo {geo:.2} ana {ana:.2}"));
            }
        }
    }
    // (d) relative difference of ana k=3 and k=10 mean steps, per task.
    let mut worst_d: f64 = 0.0;
    for task in TaskKind::ALL {
        let s3 = steps[&(task, SamplerKind::Ana, 3)].steps_all;
        let s10 = steps[&(task, SamplerKind::Ana, 10)].steps_all;
        let rel = (s3 - s10).abs() / s3.max(s10);
        worst_d = worst_d.max(rel);
        if rel >= 0.10 {
            pass = false;
            notes.push(format!("(d) {task}: k3 {s3:.2} vs k10 {s10:.2}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 1800.0 {
        pass = false;
        notes.push(format!("runtime {secs:.0} s"));
    }
    let table: Vec<String> = TaskKind::ALL
        .iter()
        .map(|t| {
            format!(
                "{t}: ana1 {:.1} geo1 {:.1} rdn1 {:.1} / ana3 {:.1} geo3 {:.1} rdn3 {:.1} / ana10 {:.1}",
                steps[&(*t, SamplerKind::Ana, 1)].steps_all,
                steps[&(*t, SamplerKind::Geo, 1)].steps_all,
                steps[&(*t, SamplerKind::Rdn, 1)].steps_all,
                steps[&(*t, SamplerKind::Ana, 3)].steps_all,
                steps[&(*t, SamplerKind::Geo, 3)].steps_all,
                steps[&(*t, SamplerKind::Rdn, 3)].steps_all,
                steps[&(*t, SamplerKind::Ana, 10)].steps_all,
            )
        })
        .collect();
    Verdict {
        id: 3,
        name: "sampler trends",
        pass,
        detail: format!(
            "ana k=1 min success {:.0}%, translation ana-rdn gap {:.0} pts, k3/k10 max rel diff {:.1}%; steps {}; {secs:.0} s{}",
            a_min * 100.0,
            (ana_t - rdn_t) * 100.0,
            worst_d * 100.0,
            table.join("; "),
            if notes.is_empty() { String::new() } else { format!("; violations: {}", notes.join(", ")) }
        ),
    }
}

// ---------------------------------------------------------------------------
// 4. Direct optimizer

fn criterion_4(lib: &ShapeLibrary) -> Verdict {
    let run = |object: &str, optimizer: OptimizerKind| {
        let c = Cell {
            optimizer,
            ..cell(object, TaskKind::Mixed, SamplerKind::Ana, 3)
        };
        run_cell(&c, lib, TRIALS, SEED).unwrap()
    };
    let stats = |r: &[TrialRecord]| {
        let xs: Vec<f64> = r.iter().map(|t| t.steps_taken as f64).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (tri_r, _) = stats(&run("triangle", OptimizerKind::Rollout));
    let (tri_d, _) = stats(&run("triangle", OptimizerKind::Direct));
    let corner_ok = tri_d - tri_r >= 0.5;
    let mut flat = Vec::new();
    let mut flat_ok = true;
    for object in ["square", "butter"] {
        let (r, se_r) = stats(&run(object, OptimizerKind::Rollout));
        let (d, se_d) = stats(&run(object, OptimizerKind::Direct));
        let noise = (0.5f64).max(2.0 * (se_r * se_r + se_d * se_d).sqrt());
        flat_ok &= (d - r).abs() <= noise;
        flat.push(format!("{object} {r:.2}->{d:.2} (noise {noise:.2})"));
    }
    Verdict {
        id: 4,
        name: "direct optimizer degradation",
        pass: corner_ok && flat_ok,
        detail: format!(
            "triangle mixed steps rollout {tri_r:.2} -> direct {tri_d:.2} (need +0.5); {}",
            flat.join(", ")
        ),
    }
}

// ---------------------------------------------------------------------------
// 5. EKF

fn criterion_5(lib: &ShapeLibrary) -> Verdict {
    let cfg = EkfConfig::default();
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let obs = |x: f64, y: f64, t: f64| Observation {
        pose: Pose2::new(x, y, t),
        step_index: 0,
    };

    // Covariance SPD over 1000 predict/update cycles.
    let c = lib.contour("triangle").unwrap();
    let r = observation_covariance(0.002, 1f64.to_radians());
    let mut b = init_belief(&obs(0.0, 0.0, 0.0), 0.04, 0.3, &default_prior(0.002, 1f64.to_radians())).unwrap();
    let mut spd = true;
    for _ in 0..1000 {
        let action = PushAction::new(rng.random_range(0..c.len()), rng.random_range(-1.0..1.0), rng.random_range(0.0..0.05));
        b = predict_action(&b, &action, &c, &cfg).unwrap().belief;
        let p = b.pose();
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let nt: f64 = rng.sample(StandardNormal);
        let o = obs(p.position.x + 0.002 * nx, p.position.y + 0.002 * ny, p.theta + 0.0175 * nt);
        b = update(&b, &o, &r, &cfg).unwrap().belief;
        spd &= (b.covariance - b.covariance.transpose()).abs().max() <= 1e-9 && b.min_eigenvalue() > 0.0;
    }
    if !spd {
        notes.push("covariance lost SPD".to_string());
    }

    // Finite-difference step-size sweep.
    let butter = lib.contour("butter").unwrap();
    const SAMPLES: usize = 200;
    let mut converged = 0;
    let mut jumps = 0;
    for _ in 0..SAMPLES {
        let x = StateVector::from_column_slice(&[
            rng.random_range(-0.1..0.1),
            rng.random_range(-0.1..0.1),
            rng.random_range(-PI..PI),
            rng.random_range(-0.01..0.01),
            rng.random_range(-0.01..0.01),
            rng.random_range(0.03..0.05),
            rng.random_range(0.5..0.9),
        ]);
        let state = vector_to_state(&x);
        let cmd = PushAction::new(rng.random_range(0..butter.len()), 0.0, 0.02)
            .command(&state.pose, &butter)
            .unwrap();
        let js: Vec<_> = [1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&h| process_jacobian(&x, &cmd, &butter, &cfg, &[h; STATE_DIM]))
            .collect();
        let scale = 1.0 + js[3].abs().max();
        let d: Vec<f64> = js.windows(2).map(|w| (&w[0] - &w[1]).abs().max() / scale).collect();
        // A sample either converges under refinement or sits on a jump of
        // the map, where the differences grow as 1/h.
        if d.windows(2).all(|w| w[1] <= 0.5 * w[0] + 1e-9) {
            converged += 1;
        } else if d.windows(2).all(|w| w[1] > 2.0 * w[0]) {
            jumps += 1;
        }
    }
    if converged + jumps < SAMPLES {
        notes.push(format!("jacobian: {} samples neither converge nor jump", SAMPLES - converged - jumps));
    }

    // Angle wrap.
    let b0 = init_belief(&obs(0.0, 0.0, -PI + 0.01), 0.04, 0.3, &default_prior(0.002, 0.02)).unwrap();
    let out = update(&b0, &obs(0.0, 0.0, PI - 0.01), &observation_covariance(0.002, 0.02), &cfg).unwrap();
    if (out.innovation[2].abs() - 0.02).abs() > 1e-12 {
        notes.push(format!("wrap innovation {}", out.innovation[2]));
    }

    // COM estimation in closed loop, per benchmark object.
    let mut com_parts = Vec::new();
    for object in BENCH_OBJECTS {
        let c = Cell {
            estimator: EstimatorMode::Ekf,
            com_mode: ComMode::UniformRandomInside,
            noise: true,
            ..cell(object, TaskKind::Mixed, SamplerKind::Ana, 3)
        };
        let records = run_cell(&c, lib, TRIALS, SEED).unwrap();
        let better = records
            .iter()
            .filter(|r| r.final_com_error_mm() < r.true_com_norm_mm())
            .count();
        let summary: CellSummary = summarize(&c, &records);
        let frac = better as f64 / records.len() as f64;
        if frac < 0.8 || summary.median_com_error_mm > 25.0 {
            notes.push(format!("{object} COM"));
        }
        com_parts.push(format!(
            "{object} improved {:.0}% median {:.1} mm",
            frac * 100.0,
            summary.median_com_error_mm
        ));
    }
    Verdict {
        id: 5,
        name: "EKF suite",
        pass: notes.is_empty(),
        detail: format!(
            "SPD over 1000 cycles {}, FD sweep converges on {converged}/{SAMPLES} samples ({jumps} on jumps), wrap ok; {}{}",
            if spd { "ok" } else { "FAILED" },
            com_parts.join(", "),
            if notes.is_empty() { String::new() } else { format!("; violations: {}", notes.join(", ")) }
        ),
    }
}

// ---------------------------------------------------------------------------
// 6. Filtering cost

fn criterion_6(lib: &ShapeLibrary) -> Verdict {
    let mut truth = Vec::new();
    let mut filtered = Vec::new();
    for task in TaskKind::ALL {
        truth.extend(run_objects(lib, |o| cell(o, task, SamplerKind::Ana, 3)));
        filtered.extend(run_objects(lib, |o| Cell {
            estimator: EstimatorMode::Ekf,
            noise: true,
            ..cell(o, task, SamplerKind::Ana, 3)
        }));
    }
    let gt = pool(&refs(&truth));
    let stopped: Vec<&TrialRecord> = filtered.iter().filter(|r| r.stopped_on_estimate).collect();
    let ekf = pool(&stopped);
    let limit = 2.0 * GoalRegion::Small.tolerances().0 * 1e3;
    Verdict {
        id: 6,
        name: "filtering cost",
        pass: ekf.final_error_mm > gt.final_error_mm && ekf.final_error_mm <= limit,
        detail: format!(
            "mean true end error: ground truth {:.2} mm, filtered {:.2} mm over {} estimate-stopped trials (limit {limit:.1} mm)",
            gt.final_error_mm,
            ekf.final_error_mm,
            stopped.len()
        ),
    }
}

// ---------------------------------------------------------------------------
// 7. Goal-region sweep

fn criterion_7(lib: &ShapeLibrary) -> Verdict {
    let mut rates = std::collections::HashMap::new();
    for sampler in [SamplerKind::Ana, SamplerKind::Geo, SamplerKind::Rdn] {
        for region in GoalRegion::ALL {
            let mut all = Vec::new();
            for task in TaskKind::ALL {
                // Full system: unknown COM estimated by the filter.
                all.extend(run_objects(lib, |o| Cell {
                    region,
                    estimator: EstimatorMode::Ekf,
                    com_mode: ComMode::UniformRandomInside,
                    noise: true,
                    ..cell(o, task, sampler, 3)
                }));
            }
            rates.insert((sampler, region), pool(&refs(&all)).rate());
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for sampler in [SamplerKind::Ana, SamplerKind::Geo, SamplerKind::Rdn] {
        let r: Vec<f64> = GoalRegion::ALL.iter().map(|g| rates[&(sampler, *g)]).collect();
        pass &= r.windows(2).all(|w| w[1] >= w[0]);
        parts.push(format!(
            "{sampler} {:.0}/{:.0}/{:.0}%",
            r[0] * 100.0,
            r[1] * 100.0,
            r[2] * 100.0
        ));
    }
    let spread: Vec<f64> = GoalRegion::ALL
        .iter()
        .map(|g| rates[&(SamplerKind::Ana, *g)] - rates[&(SamplerKind::Rdn, *g)])
        .collect();
    pass &= spread[0] > spread[1] && spread[0] > spread[2];
    Verdict {
        id: 7,
        name: "goal-region sweep",
        pass,
        detail: format!(
            "success small/medium/large: {}; ana-rdn spread {:.0}/{:.0}/{:.0} pts",
            parts.join(", "),
            spread[0] * 100.0,
            spread[1] * 100.0,
            spread[2] * 100.0
        ),
    }
}

// ---------------------------------------------------------------------------
// 8. Determinism

fn criterion_8(lib: &ShapeLibrary) -> Verdict {
    let mut identical = 0;
    let mut total = 0;
    for sampler in [SamplerKind::Ana, SamplerKind::Geo, SamplerKind::Rdn] {
        let c = Cell {
            estimator: EstimatorMode::Ekf,
            com_mode: ComMode::UniformRandomInside,
            noise: true,
            ..cell("butter", TaskKind::Mixed, sampler, 3)
        };
        let a = run_cell(&c, lib, 10, 99).unwrap();
        // Second run on a single thread, so scheduling cannot leak in.
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_cell(&c, lib, 10, 99).unwrap());
        for (x, y) in a.iter().zip(&b) {
            total += 1;
            if serde_json::to_string(x).unwrap() == serde_json::to_string(y).unwrap() && x == y {
                identical += 1;
            }
        }
    }
    Verdict {
        id: 8,
        name: "determinism",
        pass: identical == total,
        detail: format!("{identical}/{total} trial records bit-identical across runs"),
    }
}

fn main() {
    let lib = ShapeLibrary::builtin();
    let start = Instant::now();
    let verdicts = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(&lib),
        criterion_4(&lib),
        criterion_5(&lib),
        criterion_6(&lib),
        criterion_7(&lib),
        criterion_8(&lib),
    ];
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut unexpected = 0;
    println!();
    for v in &verdicts {
        let known = KNOWN_FAILING.contains(&v.id);
        let tag = match (v.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if !v.pass && (strict || !known) {
            unexpected += 1;
        }
        println!("criterion {} [{}]: {tag} -- {}", v.id, v.name, v.detail);
    }
    println!("acceptance finished in {:.0} s", start.elapsed().as_secs_f64());
    if unexpected > 0 {
        std::process::exit(1);
    }
}

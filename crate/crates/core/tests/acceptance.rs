//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vhrd::analytic::{constant_case_report, reference_eigenvalue_dirichlet, ConstantParams};
use vhrd::dynamics::{check_threshold_dynamics, full_orbit, PredictedCase, Verdict};
use vhrd::model::{BoundaryCondition, HeterogeneityParams, ModelSpec, Species};
use vhrd::periodic::DEFAULT_TOL as ORBIT_TOL;
use vhrd::sampling::{Discretized, Numerics};
use vhrd::solver::{simulate_full, FullSystem, LogisticSystem, ScalarState, StateField, Stepper, SystemState};
use vhrd::spectral::{level_result, principal_eigenvalue_autonomous, spectral_report, totals, SpectralOptions};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn err(e: vhrd::Error) -> String {
    e.to_string()
}

fn rel(num: f64, exact: f64) -> f64 {
    (num - exact).abs() / exact.abs()
}

fn hetero(p: f64) -> ModelSpec {
    ModelSpec::section5(&HeterogeneityParams::new([p; 4], [0.0; 4])).unwrap()
}

fn r0_window(p: f64, lo: f64, hi: f64, budget: Duration) -> Outcome {
    let start = Instant::now();
    let rep = spectral_report(&hetero(p), Numerics::new(200, 1000), &SpectralOptions::default()).map_err(err)?;
    let took = start.elapsed();
    let r0 = rep.r0.ok_or("R0 undefined")?;
    let ok = (lo..=hi).contains(&r0) && took < budget;
    Ok((
        ok,
        format!("R0 = {r0:.6} (window [{lo}, {hi}]), {:.1} s", took.as_secs_f64()),
    ))
}

fn baseline_threshold() -> Outcome {
    r0_window(0.0, 0.99, 1.01, Duration::from_secs(120))
}

fn heterogeneous_anchor() -> Outcome {
    r0_window(0.5, 1.10, 1.18, Duration::from_secs(300))
}

fn random_constant(rng: &mut ChaCha8Rng) -> ConstantParams {
    let mut side = || {
        let a = rng.gen_range(1.0..4.0);
        let b = rng.gen_range(0.1..a - 0.2);
        [a, b, rng.gen_range(0.5..2.0), rng.gen_range(0.5..4.0)]
    };
    let host = side();
    ConstantParams::new(host, side())
}

fn constant_gaps(p: &ConstantParams, numerics: Numerics) -> Result<f64, String> {
    let exact = constant_case_report(p).map_err(err)?;
    let spec = ModelSpec::constant_neumann(p, 0.1, 0.2, 1.0).map_err(err)?;
    let rep = spectral_report(&spec, numerics, &SpectralOptions::default()).map_err(err)?;
    let pairs = [
        (Some(rep.zeta1), Some(exact.zeta1)),
        (Some(rep.zeta2), Some(exact.zeta2)),
        (rep.lambda, exact.lambda),
        (rep.r0, exact.r0),
    ];
    let mut worst = 0.0f64;
    for (n, e) in pairs {
        match (n, e) {
            (Some(n), Some(e)) => worst = worst.max(rel(n, e)),
            _ => return Err(format!("quantity missing for {p:?}")),
        }
    }
    Ok(worst)
}

fn constant_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let base = Numerics::new(20, 200);
    let (mut coarse, mut fine) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let p = random_constant(&mut rng);
        coarse = coarse.max(constant_gaps(&p, base)?);
        fine = fine.max(constant_gaps(&p, base.refined())?);
    }
    let ratio = coarse / fine;
    let ok = coarse < 1e-3 && fine < 1e-3 && ratio >= 2.0;
    Ok((
        ok,
        format!("20 sets, max rel gap {coarse:.3e} -> {fine:.3e} (ratio {ratio:.2})"),
    ))
}

fn equilibrium() -> Outcome {
    let p = ConstantParams::parse_list("2,1,1,3,3,1,1,2").map_err(err)?;
    let spec = ModelSpec::constant_neumann(&p, 0.1, 0.2, 1.0).map_err(err)?;
    let disc = Discretized::new(&spec, Numerics::new(50, 1000)).map_err(err)?;
    let nodes = disc.grid.nodes();
    let init = StateField::from_fn(&nodes, |x| {
        let s = 1.0 + 0.5 * (std::f64::consts::PI * x).cos();
        [s, 0.2 * s, 2.0 - s, 0.5]
    });
    let tr = simulate_full(&disc, init, 500.0, usize::MAX).map_err(err)?;
    let eq = [0.625, 0.375, 1.6, 0.4];
    let gap = tr
        .last()
        .components()
        .iter()
        .zip(eq)
        .flat_map(|((_, u), e)| u.iter().map(move |v| (v - e).abs()))
        .fold(0.0f64, f64::max);
    Ok((gap < 1e-3, format!("sup gap at t = 500: {gap:.3e}")))
}

fn threshold_dynamics() -> Outcome {
    let numerics = Numerics::new(40, 200);
    let opts = SpectralOptions::default();
    let scenarios = [
        ("2,1,1,3,3,1,1,2", PredictedCase::Endemic),
        ("2,1,1,1,3,2,1,1", PredictedCase::DiseaseFree),
        ("1,2,1,3,3,1,1,2", PredictedCase::HostExtinct),
        ("1,2,1,3,1,2,1,2", PredictedCase::AllExtinct),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (list, expected) in scenarios {
        let p = ConstantParams::parse_list(list).map_err(err)?;
        let spec = ModelSpec::constant_neumann(&p, 0.1, 0.2, 1.0).map_err(err)?;
        let disc = Discretized::new(&spec, numerics).map_err(err)?;
        let nodes = disc.grid.nodes();
        let inits = [
            StateField::from_fn(&nodes, |x| [1.0 + x, 0.1, 0.5, 0.2 * (1.0 - x) + 0.05]),
            StateField::from_fn(&nodes, |x| [0.2, 1.5 - x, 2.0 + x * x, 0.8]),
        ];
        let runs = if expected == PredictedCase::Endemic { 2 } else { 1 };
        let mut finals = Vec::new();
        for init in inits.into_iter().take(runs) {
            let r = check_threshold_dynamics(&spec, init, 500, 1e-3, numerics, &opts).map_err(err)?;
            let pass = r.predicted_case == expected && r.verdict == Verdict::Pass;
            ok &= pass;
            notes.push(format!("{} gap {:.1e}", r.label, r.measured_gap.unwrap_or(f64::NAN)));
            finals.push(r.final_state);
        }
        if finals.len() == 2 {
            let d = finals[0].sup_distance(&finals[1]);
            ok &= d < 1e-2;
            notes.push(format!("init independence {d:.1e}"));
        }
    }
    Ok((ok, notes.join(", ")))
}

fn sum_identity() -> Outcome {
    let disc = Discretized::new(&hetero(0.5), Numerics::new(200, 1000)).map_err(err)?;
    let nodes = disc.grid.nodes();
    let mut full = FullSystem::new(&disc);
    let mut host = LogisticSystem::new(&disc, Species::Host);
    let mut vector = LogisticSystem::new(&disc, Species::Vector);
    let mut state = StateField::from_fn(&nodes, |x| [1.0 + 0.5 * x, 0.3 * (1.0 - x) + 0.1, 2.0, 0.4 * x]);
    let mut h = ScalarState {
        u: state.host_total(),
        t: 0.0,
    };
    let mut v = ScalarState {
        u: state.vector_total(),
        t: 0.0,
    };
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let mut worst = 0.0f64;
    for _ in 0..10 * disc.steps_per_period() {
        state = full.step(&state).map_err(err)?;
        h = host.step(&h).map_err(err)?;
        v = vector.step(&v).map_err(err)?;
        worst = worst
            .max(dev(&state.host_total(), &h.u))
            .max(dev(&state.vector_total(), &v.u));
    }
    Ok((
        worst <= 1e-10,
        format!("max step deviation over 10 periods {worst:.2e}"),
    ))
}

fn sign_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let numerics = Numerics::new(20, 50);
    let opts = SpectralOptions::default();
    let (mut accepted, mut drawn, mut exceptions, mut below, mut scalar) = (0, 0, 0, 0, 0);
    while accepted < 50 && drawn < 1000 {
        drawn += 1;
        // odd draws modulate time only, which tends to push R0 below 1
        let space = if drawn % 2 == 0 { 0.9 } else { 0.0 };
        let mut draw = |w: f64| if w > 0.0 { rng.gen_range(-w..w) } else { 0.0 };
        let hp = HeterogeneityParams::new(
            [draw(space), draw(space), draw(0.9), draw(0.9)],
            [draw(space), draw(space), draw(0.9), draw(0.9)],
        );
        let spec = ModelSpec::section5(&hp).map_err(err)?;
        let lv = level_result(&spec, numerics, &opts).map_err(err)?;
        let (Some(r0), Some(lam)) = (lv.r0, lv.lambda) else {
            continue;
        };
        if (r0 - 1.0).abs() <= 1e-3 {
            continue;
        }
        accepted += 1;
        below += usize::from(r0 < 1.0);
        if (r0 > 1.0) != (lam < 0.0) {
            exceptions += 1;
        }
        for (r, z) in [(lv.r01, lv.zeta1), (lv.r02, lv.zeta2)] {
            scalar += 1;
            if (r > 1.0) != (z < 0.0) {
                exceptions += 1;
            }
        }
    }
    let ok = accepted >= 50 && exceptions == 0;
    Ok((
        ok,
        format!("{accepted} sets ({below} with R0 < 1), {scalar} scalar pairs, {exceptions} exceptions"),
    ))
}

fn dirichlet_constant(p: &ConstantParams, intervals: usize) -> Result<Discretized, String> {
    let mut spec = ModelSpec::constant_neumann(p, 0.1, 0.2, 1.0).map_err(err)?;
    spec.bc_host = BoundaryCondition::dirichlet(1.0, 1.0);
    spec.bc_vector = BoundaryCondition::dirichlet(1.0, 1.0);
    Discretized::new(&spec, Numerics::new(intervals, 10)).map_err(err)
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn discretization_orders() -> Outcome {
    let p = ConstantParams::parse_list("2,1,1,3,3,1,1,2").map_err(err)?;
    let exact = reference_eigenvalue_dirichlet(0.1, p.b1 - p.a1, 1.0);
    let mut space = Vec::new();
    for n in [50, 100, 200, 400] {
        let (eig, _) = principal_eigenvalue_autonomous(&dirichlet_constant(&p, n)?, Species::Host).map_err(err)?;
        space.push((eig - exact).abs());
    }

    let spec = hetero(0.5);
    let solve = |steps: usize| -> Result<StateField, String> {
        let disc = Discretized::new(&spec, Numerics::new(50, steps)).map_err(err)?;
        let init = StateField::from_fn(&disc.grid.nodes(), |x| [1.0 + 0.5 * x, 0.5, 2.0 - x, 0.3]);
        Ok(simulate_full(&disc, init, 1.0, usize::MAX).map_err(err)?.last().clone())
    };
    let reference = solve(32_000)?;
    let mut time = Vec::new();
    for steps in [250, 500, 1000, 2000] {
        time.push(solve(steps)?.sup_distance(&reference));
    }
    let (so, to) = (orders(&space), orders(&time));
    let ok = so.iter().all(|o| (o - 2.0).abs() <= 0.3) && to.iter().all(|o| (o - 1.0).abs() <= 0.3);
    let fmt = |v: &[f64]| v.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(", ");
    Ok((
        ok,
        format!("spatial orders [{}], temporal orders [{}]", fmt(&so), fmt(&to)),
    ))
}

fn ordering_and_uniqueness() -> Outcome {
    let opts = SpectralOptions::default();
    let numerics = Numerics::new(50, 200);
    let endemic = ConstantParams::parse_list("2,1,1,3,3,1,1,2").map_err(err)?;
    let cases = [
        ("p = 0.5", hetero(0.5)),
        (
            "constant endemic",
            ModelSpec::constant_neumann(&endemic, 0.1, 0.2, 1.0).map_err(err)?,
        ),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, spec) in cases {
        let rep = spectral_report(&spec, numerics, &opts).map_err(err)?;
        let r0 = rep.r0.ok_or("R0 undefined")?;
        if r0 <= 1.0 {
            ok = false;
            notes.push(format!("{name}: R0 = {r0:.4} not above 1"));
            continue;
        }
        let disc = Discretized::new(&spec, numerics).map_err(err)?;
        let nodes = disc.grid.nodes();
        let a = full_orbit(
            &disc,
            StateField::constant(nodes.len(), [1.0, 0.2, 1.0, 0.2]),
            ORBIT_TOL,
            5000,
        )
        .map_err(err)?;
        let b = full_orbit(
            &disc,
            StateField::from_fn(&nodes, |x| [0.1 + x, 1.0, 3.0, 0.05 + x]),
            ORBIT_TOL,
            5000,
        )
        .map_err(err)?;
        let (h, v) = totals(&disc, &opts).map_err(err)?;
        let ordered = a.snapshots.iter().enumerate().all(|(k, s)| {
            let (hk, vk) = (&h.snapshots[k].u, &v.snapshots[k].u);
            (0..nodes.len()).all(|i| s.hi[i] > 0.0 && s.hi[i] < hk[i] && s.vi[i] > 0.0 && s.vi[i] < vk[i])
        });
        let gap = a
            .snapshots
            .iter()
            .zip(&b.snapshots)
            .fold(0.0f64, |m, (x, y)| m.max(x.sup_distance(y)));
        let pass = ordered && gap <= 10.0 * ORBIT_TOL;
        ok &= pass;
        notes.push(format!(
            "{name}: R0 = {r0:.4}, ordered = {ordered}, two-init gap {gap:.1e}"
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("baseline threshold", baseline_threshold),
        ("heterogeneous anchor", heterogeneous_anchor),
        ("constant-case oracle", constant_oracle),
        ("equilibrium reproduction", equilibrium),
        ("threshold dynamics", threshold_dynamics),
        ("sum identity", sum_identity),
        ("sign consistency", sign_consistency),
        ("discretization orders", discretization_orders),
        ("ordering and uniqueness", ordering_and_uniqueness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {} {:<26} {} ({:.1} s) {}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

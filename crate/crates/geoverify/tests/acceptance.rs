// End-to-end acceptance battery. Each test guards one published guarantee of
// the tool and prints a single PASS/FAIL line with the measured numbers, so a
// test run doubles as a certification record. Tolerances are pinned here on
// purpose; loosening one is a contract change, not a test fix.

use std::collections::BTreeMap;
use std::time::Instant;

use geoverify::catalog::{self, lie_point_data};
use geoverify::chart::{MetricSpec, SparseFormEntry};
use geoverify::check::{manifest_or_default, run_checks, CheckReport};
use geoverify::connection::{at_point, fd_nabla_curvature, form3_jets, Part};
use geoverify::expr::Expr;
use geoverify::geodesic::{
    energy, fit_blowup, integrate, BlowupModel, GeodesicTrace, TraceStatus, TrackField,
};
use geoverify::lorentz::{
    annihilator, multivector_action, stabilizer_basis, LorentzBivector, StabilizerKind,
};
use geoverify::sample::{sample_point, SplitMix64};
use geoverify::synth::{random_chart_with_form, random_form3, random_metric};
use geoverify::tensor::{MultiForm, Tensor3};
use geoverify::torsion::{
    decompose_torsion, recompose_torsion, sigma_tau, sigma_tau_dense, skew_point_residuals,
    ParallelismVerdict, TorsionParts,
};
use nalgebra::{DMatrix, DVector};

fn criterion(n: usize, label: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {n:02} {verdict} {label} ({detail})");
    assert!(pass, "acceptance {n:02} {label}: {detail}");
}

fn no_overrides() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

fn build(name: &str) -> MetricSpec {
    catalog::build(name, &no_overrides()).expect("catalog entry builds with defaults")
}

fn outcome<'a>(report: &'a CheckReport, id: &str) -> &'a geoverify::check::CheckOutcome {
    report
        .checks
        .iter()
        .find(|c| c.check_id == id)
        .unwrap_or_else(|| panic!("report lists no check '{id}'"))
}

// -- 1 ------------------------------------------------------------------

// Fifty random affine 3-forms over ten random polynomial Lorentzian charts,
// twenty points each: the exterior-derivative identity, the gradient
// comparison identity, the contraction identity, and the four-form property
// all hold at once, inside a minute of wall time.
#[test]
fn skew_identity_battery_holds_on_random_charts() {
    let started = Instant::now();
    let mut rng = SplitMix64::substream(2026, "acceptance identity battery");
    let mut worst_dt1: f64 = 0.0;
    let mut worst_dt2: f64 = 0.0;
    let mut worst_action: f64 = 0.0;
    let mut worst_four_form: f64 = 0.0;
    let mut forms = 0usize;

    for m in 0..10usize {
        let dim = 3 + (m % 4);
        let spec = random_metric(dim, &mut rng);
        for _ in 0..5 {
            let entries = random_form3(dim, &mut rng);
            let pairs: Vec<([usize; 3], &Expr)> =
                entries.iter().map(|e| (e.idx, &e.expr)).collect();
            forms += 1;
            for _ in 0..20 {
                let x = sample_point(&spec, &mut rng, 0.05);
                let pd = at_point(&spec, &x).expect("random chart evaluates");
                let (tau, dtau) = form3_jets(&pairs, dim, &x, &spec.param_values)
                    .expect("random form evaluates");
                let r = skew_point_residuals(&pd, &tau, &dtau);
                worst_dt1 = worst_dt1.max(r.dt1_residual);
                worst_dt2 = worst_dt2.max(r.dt2_residual);
                worst_action = worst_action.max(r.action_residual);
                worst_four_form = worst_four_form.max(r.four_form_defect);
            }
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    let pass = forms == 50
        && worst_dt1 < 1e-7
        && worst_dt2 < 1e-7
        && worst_action < 1e-10
        && worst_four_form < 1e-10
        && elapsed < 60.0;
    criterion(
        1,
        "skew torsion identity battery",
        pass,
        &format!(
            "50 forms, 1000 points: exterior {worst_dt1:.2e}, gradient {worst_dt2:.2e}, \
             contraction {worst_action:.2e}, four-form {worst_four_form:.2e}, {elapsed:.1}s"
        ),
    );
}

// -- 2 ------------------------------------------------------------------

// The 3d Kundt chart with defaults (a = 1, profile sin(x) u) certifies its
// whole manifest at 100 seeded points: the isotropic congruence conditions,
// both parallelism displays, and the curvature symmetry.
#[test]
fn kundt_chart_certifies_its_manifest() {
    let spec = build("kundt3");
    let ids = manifest_or_default(&spec);
    let report = run_checks(&spec, &ids, 7, 100, &no_overrides()).expect("kundt3 checks run");

    let tight = [
        "kundt_expansion",
        "kundt_geodesic",
        "kundt_p_condition",
        "kundt_shear",
        "kundt_twist",
        "nabla_s",
        "nabla_xi",
    ];
    let worst_tight = tight
        .iter()
        .map(|id| outcome(&report, id).max_residual)
        .fold(0.0, f64::max);
    let bianchi = outcome(&report, "bianchi_cyclic").max_residual;

    let pass = report.overall_pass && worst_tight < 1e-9 && bianchi < 1e-7;
    criterion(
        2,
        "Kundt chart certification",
        pass,
        &format!(
            "congruence and parallelism {worst_tight:.2e} (< 1e-9), \
             curvature symmetry {bianchi:.2e} (< 1e-7), overall {}",
            report.overall_pass
        ),
    );
}

// -- 3 ------------------------------------------------------------------

// The rotating plane wave keeps both torsion generators parallel; with the
// homogeneous profile (eigenvalues 1 and 2, frequency 1) its curvature is
// parallel too, while the quartic profile breaks that decisively.
#[test]
fn plane_wave_separates_homogeneous_from_generic() {
    let spec = build("plane_wave");
    let ids: Vec<String> = ["nabla_curvature", "nabla_s", "nabla_xi"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let report = run_checks(&spec, &ids, 7, 100, &no_overrides()).expect("plane wave checks run");
    let gen_worst = outcome(&report, "nabla_xi")
        .max_residual
        .max(outcome(&report, "nabla_s").max_residual);
    let homog = outcome(&report, "nabla_curvature").max_residual;

    let generic = build("plane_wave_generic");
    let mut rng = SplitMix64::substream(7, "generic wave probe");
    let mut generic_max: f64 = 0.0;
    for _ in 0..20 {
        let x = sample_point(&generic, &mut rng, 0.05);
        let dr = fd_nabla_curvature(&generic, &x, Part::Full, 1e-4)
            .expect("generic wave curvature gradient evaluates");
        generic_max = generic_max.max(dr.max_abs());
    }

    let pass = gen_worst < 1e-9 && homog < 1e-5 && generic_max > 1e-2;
    criterion(
        3,
        "plane wave parallelism contrast",
        pass,
        &format!(
            "generators {gen_worst:.2e} (< 1e-9), homogeneous curvature gradient \
             {homog:.2e} (< 1e-5), quartic profile {generic_max:.2e} (> 1e-2)"
        ),
    );
}

// -- 4 ------------------------------------------------------------------

// The two product constructions keep their full torsion parallel end to end:
// the warped line with scaled volume skew part and the nondegenerate
// isotropic product.
#[test]
fn product_constructions_keep_torsion_parallel() {
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["warped_vol", "nondeg_product"] {
        let spec = build(name);
        let report = run_checks(
            &spec,
            &["parallel_torsion".to_string()],
            11,
            100,
            &no_overrides(),
        )
        .expect("parallel torsion check runs");
        let res = outcome(&report, "parallel_torsion").max_residual;
        pass &= res < 1e-8;
        details.push(format!("{name} {res:.2e}"));
    }
    criterion(
        4,
        "parallel torsion end to end",
        pass,
        &format!("{} (< 1e-8 at 100 points each)", details.join(", ")),
    );
}

// -- 5 ------------------------------------------------------------------

fn halt_time(trace: &GeodesicTrace) -> Option<f64> {
    match trace.status {
        TraceStatus::BlowUp { t_est } => Some(t_est),
        // the exit happened within one step after the last kept sample, so
        // the last time underestimates the halt and is safe for upper bounds
        TraceStatus::LeftDomain => trace.times.last().copied(),
        TraceStatus::Completed => None,
    }
}

// Every incompleteness law in the catalog: the reciprocal law on the Kundt
// chart, exp-affine transforms on both wave-type charts, the arctan and
// log-ratio laws on the warped chart. Each geodesic must also halt before
// its singular time plus 0.05, and the kinetic scalar stays conserved on
// every catalog entry.
#[test]
fn geodesic_blowup_laws_hold_and_traces_halt_in_time() {
    let mut notes = Vec::new();
    let mut pass = true;

    // reciprocal law: alpha = 1/(t + c) with c = 1/alpha(0) = 0.5
    let kundt = build("kundt3");
    let x0 = [0.0, 0.0, 0.0];
    let v0 = [0.2275, 0.3, 2.0];
    let trace = integrate(&kundt, &x0, &v0, 0.45, 1e-3, &TrackField::Xi).unwrap();
    assert_eq!(trace.status, TraceStatus::Completed);
    assert!((trace.alpha[0] - 2.0).abs() < 1e-12, "alpha(0) = {}", trace.alpha[0]);
    let law_defect = trace
        .times
        .iter()
        .zip(&trace.alpha)
        .map(|(t, a)| (a - 1.0 / (t + 0.5)).abs())
        .fold(0.0, f64::max);
    pass &= law_defect < 1e-5;
    notes.push(format!("reciprocal {law_defect:.2e}"));
    let back = integrate(&kundt, &x0, &v0, -0.6, 1e-3, &TrackField::Xi).unwrap();
    let halt = halt_time(&back).expect("backward Kundt trace must not complete");
    pass &= halt.abs() <= 0.55;
    notes.push(format!("halt {halt:.3}<=0.55"));

    // exp-affine law on the degenerate isotropic chart, slope g(v0, p0)
    let walkerish = build("deg_isotropic_walker");
    let wx0 = [0.0, 0.0, 0.0, 1.0];
    let wv0 = [0.2, 0.1, 0.0, 0.5];
    let pairing = integrate(&walkerish, &wx0, &wv0, 0.1, 1e-3, &TrackField::P0)
        .unwrap()
        .alpha[0];
    let track = TrackField::Scalar(Expr::coord(3).log());
    let wtrace = integrate(&walkerish, &wx0, &wv0, 2.0, 1e-3, &track).unwrap();
    let wfit = fit_blowup(
        &wtrace.times,
        &wtrace.alpha,
        &BlowupModel::ExpLinear { slope: pairing },
    )
    .unwrap();
    pass &= (wfit.slope - pairing).abs() < 1e-4;
    notes.push(format!("exp slope defect {:.2e}", (wfit.slope - pairing).abs()));
    let wback = integrate(&walkerish, &wx0, &wv0, -2.05, 1e-3, &track).unwrap();
    let whalt = halt_time(&wback).expect("backward trace must leave before e^phi hits zero");
    pass &= whalt.abs() <= 2.05;
    notes.push(format!("halt {whalt:.3}<=2.05"));

    // exp-affine law on the rotating wave, slope g(v0, p0) = 1
    let wave = build("plane_wave");
    let px0 = [0.0; 4];
    let pv0 = [0.3, 0.2, -0.1, -1.0];
    let ptrace =
        integrate(&wave, &px0, &pv0, 2.0, 1e-3, &TrackField::Scalar(Expr::coord(3).neg()))
            .unwrap();
    let pfit =
        fit_blowup(&ptrace.times, &ptrace.alpha, &BlowupModel::ExpLinear { slope: 1.0 }).unwrap();
    pass &= (pfit.slope - 1.0).abs() < 1e-4;
    let pback = integrate(&wave, &px0, &pv0, -1.1, 1e-3, &TrackField::P0).unwrap();
    let phalt = halt_time(&pback).expect("backward wave trace must not complete");
    pass &= phalt.abs() <= 1.05;
    notes.push(format!("wave slope defect {:.2e}, halt {phalt:.3}<=1.05", (pfit.slope - 1.0).abs()));

    // arctan law on the warped chart, slope -1, pole at pi/2 + arctan(alpha(0))
    let warped = catalog::build("de_sitter", &no_overrides()).unwrap();
    let ss = (1.25f64).sqrt();
    let dv0 = [0.5, ss, 0.0, 0.0];
    let dtrace = integrate(&warped, &[0.0; 4], &dv0, 1.0, 1e-3, &TrackField::Xi).unwrap();
    let dfit = fit_blowup(&dtrace.times, &dtrace.alpha, &BlowupModel::Arctan).unwrap();
    pass &= (dfit.slope + 1.0).abs() < 1e-4;
    let t_star = std::f64::consts::FRAC_PI_2 + (-0.5f64).atan();
    let dlong = integrate(&warped, &[0.0; 4], &dv0, 1.3, 1e-3, &TrackField::Xi).unwrap();
    let dhalt = halt_time(&dlong).expect("timelike trace must halt at the pole");
    pass &= dhalt <= t_star + 0.05;
    notes.push(format!("arctan slope defect {:.2e}, halt {dhalt:.3}<={:.3}", (dfit.slope + 1.0).abs(), t_star + 0.05));

    // log-ratio law for fast spacelike starts, alpha(0) = 1.25 > 1
    let sv0 = [-1.25, 0.75, 0.0, 0.0];
    let strace = integrate(&warped, &[0.0; 4], &sv0, -1.0, 1e-3, &TrackField::Xi).unwrap();
    assert!((strace.alpha[0] - 1.25).abs() < 1e-12);
    let sfit =
        fit_blowup(&strace.times, &strace.alpha, &BlowupModel::LogRatio { scale: 1.0 }).unwrap();
    pass &= sfit.residual < 1e-4;
    let t_sing = -(3.0f64).ln();
    let slong = integrate(&warped, &[0.0; 4], &sv0, -1.3, 1e-3, &TrackField::Xi).unwrap();
    let shalt = halt_time(&slong).expect("spacelike trace must halt at blow-up");
    pass &= shalt.abs() <= t_sing.abs() + 0.05;
    notes.push(format!("log-ratio residual {:.2e}, halt {shalt:.3}<={:.3}", sfit.residual, t_sing.abs() + 0.05));

    // the kinetic scalar is conserved along traces on every catalog entry
    let mut worst_drift: f64 = 0.0;
    for entry in catalog::entries() {
        let spec = build(entry.name);
        let center: Vec<f64> =
            spec.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let mut scale = 0.25;
        let mut settled = None;
        for _ in 0..7 {
            let v0: Vec<f64> = (0..spec.dim)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -0.8 };
                    scale * sign * (1.0 + 0.25 * k as f64)
                })
                .collect();
            let trace =
                integrate(&spec, &center, &v0, 1.0, 1e-3, &TrackField::Velocity(0)).unwrap();
            if trace.times.len() >= 500 {
                settled = Some(trace);
                break;
            }
            scale *= 0.5;
        }
        let trace = settled.unwrap_or_else(|| {
            panic!("no velocity scale keeps a long trace inside '{}'", entry.name)
        });
        let eta = energy(&spec, &trace).unwrap();
        let drift = eta.iter().map(|e| (e - eta[0]).abs()).fold(0.0, f64::max);
        worst_drift = worst_drift.max(drift);
    }
    pass &= worst_drift < 1e-8;
    notes.push(format!("kinetic drift {worst_drift:.2e}"));

    criterion(5, "geodesic blow-up laws", pass, &notes.join(", "));
}

// -- 6 ------------------------------------------------------------------

// One hundred random generator pairs survive the recompose/decompose round
// trip with no twistorial remainder, and each projector kills the other
// part's image.
#[test]
fn torsion_decomposition_round_trips() {
    let mut rng = SplitMix64::substream(31, "decomposition round trip");
    let mut worst_round: f64 = 0.0;
    let mut worst_twistor: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;

    let random_form = |dim: usize, rng: &mut SplitMix64| {
        let mut s = MultiForm::zeros(dim, 3);
        for tuple in MultiForm::increasing_tuples(dim, 3) {
            s.set_antisym(&tuple, rng.uniform(-1.0, 1.0));
        }
        s
    };

    for k in 0..100usize {
        let dim = 3 + (k % 4);
        let spec = random_metric(dim, &mut rng);
        let x = sample_point(&spec, &mut rng, 0.05);
        let mv = spec.metric_at(&x).unwrap();

        let xi = DVector::from_fn(dim, |_, _| rng.uniform(-1.0, 1.0));
        let s = random_form(dim, &mut rng);
        let parts = TorsionParts { xi: xi.clone(), s: s.clone(), q: Tensor3::zeros(dim) };
        let t = recompose_torsion(&mv, &parts);
        let back = decompose_torsion(&mv, &t);

        let xi_err = (&back.xi - &xi).amax();
        let s_err = back.s.max_abs_diff(&s);
        worst_round = worst_round.max(xi_err).max(s_err);
        worst_twistor = worst_twistor.max(back.q.max_abs());
    }

    for k in 0..50usize {
        let dim = 3 + (k % 4);
        let spec = random_metric(dim, &mut rng);
        let x = sample_point(&spec, &mut rng, 0.05);
        let mv = spec.metric_at(&x).unwrap();
        if k % 2 == 0 {
            // purely vectorial input: the skew and twistor projectors see nothing
            let xi = DVector::from_fn(dim, |_, _| rng.uniform(-1.0, 1.0));
            let parts =
                TorsionParts { xi, s: MultiForm::zeros(dim, 3), q: Tensor3::zeros(dim) };
            let back = decompose_torsion(&mv, &recompose_torsion(&mv, &parts));
            worst_cross = worst_cross.max(back.s.max_abs()).max(back.q.max_abs());
        } else {
            // purely skew input: the vector and twistor projectors see nothing
            let s = random_form(dim, &mut rng);
            let parts = TorsionParts { xi: DVector::zeros(dim), s, q: Tensor3::zeros(dim) };
            let back = decompose_torsion(&mv, &recompose_torsion(&mv, &parts));
            worst_cross = worst_cross.max(back.xi.amax()).max(back.q.max_abs());
        }
    }

    let pass = worst_round < 1e-10 && worst_twistor < 1e-10 && worst_cross < 1e-9;
    criterion(
        6,
        "torsion decomposition round trip",
        pass,
        &format!(
            "100 pairs: round trip {worst_round:.2e}, twistor remainder {worst_twistor:.2e} \
             (< 1e-10), cross projections {worst_cross:.2e} (< 1e-9)"
        ),
    );
}

// -- 7 ------------------------------------------------------------------

// The quadratic four-form: identically zero in dimension three with exact
// IEEE cancellation, zero on the bi-invariant form of su(2) x su(2) by the
// Jacobi identity, and equal to an independently coded dense oracle on the
// five-dimensional two-block form, where it does not vanish.
#[test]
fn sigma_four_form_battery() {
    // dimension three: every component cancels in pairs across transposed
    // contraction cells, so a bitwise-symmetric inverse metric gives exact
    // zeros, not just small ones
    let mut rng = SplitMix64::substream(47, "sigma battery");
    let mut inverses = vec![
        DMatrix::identity(3, 3),
        DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0])),
    ];
    for _ in 0..3 {
        let mut m = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in i..3 {
                let v = rng.uniform(-2.0, 2.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        inverses.push(m);
    }
    let mut dim3_worst: f64 = 0.0;
    for c in [1.0, 0.1, -2.5, 1e3, 1e-3, rng.uniform(-4.0, 4.0)] {
        let mut tau = MultiForm::zeros(3, 3);
        tau.set_antisym(&[0, 1, 2], c);
        for g_inv in &inverses {
            dim3_worst = dim3_worst.max(sigma_tau_dense(g_inv, &tau).max_abs());
            dim3_worst = dim3_worst.max(sigma_tau(g_inv, &tau).max_abs());
        }
    }

    // bi-invariant three-form of su(2) x su(2): the contraction is a Jacobi sum
    let lie = lie_point_data("su2xsu2").unwrap();
    let lie_sigma = sigma_tau(&lie.inner, &lie.tau).max_abs();

    // two-block form on R^5 with the identity metric, against a dense oracle
    // written with plain arrays and permutation loops
    let mut tau5 = MultiForm::zeros(5, 3);
    tau5.set_antisym(&[0, 1, 2], 1.0);
    tau5.set_antisym(&[0, 3, 4], 1.0);
    let mut dense = [[[0.0f64; 5]; 5]; 5];
    for (idx, val) in [([0usize, 1, 2], 1.0f64), ([0, 3, 4], 1.0)] {
        let [a, b, c] = idx;
        for (p, sign) in [
            ([a, b, c], 1.0),
            ([b, c, a], 1.0),
            ([c, a, b], 1.0),
            ([b, a, c], -1.0),
            ([a, c, b], -1.0),
            ([c, b, a], -1.0),
        ] {
            dense[p[0]][p[1]][p[2]] = sign * val;
        }
    }
    let mut oracle_defect: f64 = 0.0;
    let mut oracle_max: f64 = 0.0;
    let id5 = DMatrix::identity(5, 5);
    let sigma5 = sigma_tau_dense(&id5, &tau5);
    let form5 = sigma_tau(&id5, &tau5);
    for x in 0..5 {
        for y in 0..5 {
            for z in 0..5 {
                for v in 0..5 {
                    let mut o = 0.0;
                    for w in 0..5 {
                        o += dense[x][y][w] * dense[w][z][v]
                            + dense[y][z][w] * dense[w][x][v]
                            + dense[z][x][w] * dense[w][y][v];
                    }
                    oracle_defect = oracle_defect.max((sigma5.get(x, y, z, v) - o).abs());
                    oracle_defect =
                        oracle_defect.max((form5.get(&[x, y, z, v]) - o).abs());
                    oracle_max = oracle_max.max(o.abs());
                }
            }
        }
    }

    let pass =
        dim3_worst == 0.0 && lie_sigma < 1e-12 && oracle_defect < 1e-12 && oracle_max >= 0.5;
    criterion(
        7,
        "sigma four-form battery",
        pass,
        &format!(
            "dim-3 max {dim3_worst:.1e} (exact 0), su(2)xsu(2) {lie_sigma:.1e} (< 1e-12), \
             dense oracle defect {oracle_defect:.1e} with peak {oracle_max:.2}"
        ),
    );
}

// -- 8 ------------------------------------------------------------------

// The flag stabilizer subalgebras have the right dimensions for every screen
// size, the bivector/matrix translation is bitwise invertible on dyadic
// data, and the annihilator of a 3-vector matches an SVD rank count.
#[test]
fn stabilizer_dimensions_and_annihilators() {
    let mut pass = true;
    let mut notes = Vec::new();

    for n in 0..=6usize {
        let line = stabilizer_basis(StabilizerKind::Line, n).len();
        let vector = stabilizer_basis(StabilizerKind::Vector, n).len();
        let so_dim = n * n.saturating_sub(1) / 2;
        pass &= line == 1 + so_dim + n;
        pass &= vector == so_dim + n;
    }
    notes.push("dims 0..=6 ok".to_string());

    // dyadic entries make every translation step exact in IEEE arithmetic
    let mut rng = SplitMix64::substream(53, "bivector round trip");
    let mut dyadic = |rng: &mut SplitMix64| (rng.below(257) as f64 - 128.0) / 64.0;
    let mut action_defect: f64 = 0.0;
    for n in 0..=5usize {
        for _ in 0..5 {
            let a = dyadic(&mut rng);
            let mut so_part = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = dyadic(&mut rng);
                    so_part[(i, j)] = v;
                    so_part[(j, i)] = -v;
                }
            }
            let x = DVector::from_fn(n, |_, _| dyadic(&mut rng));
            let b = LorentzBivector::new(n, a, so_part, x);
            let back = LorentzBivector::from_matrix(&b.matrix()).unwrap();
            pass &= back.a == b.a && back.x == b.x && back.so_part == b.so_part;

            let m = b.matrix();
            for _ in 0..3 {
                let v = DVector::from_fn(n + 2, |_, _| rng.uniform(-1.0, 1.0));
                action_defect = action_defect.max((&m * &v - b.bivector_action(&v)).amax());
            }
        }
    }
    pass &= action_defect < 1e-12;
    notes.push(format!("round trip exact, action defect {action_defect:.1e}"));

    // ten seeded 3-vectors on the n = 3 line stabilizer: every annihilator
    // output kills the form, and the count matches 7 minus the SVD rank of
    // the action matrix
    let subalg = stabilizer_basis(StabilizerKind::Line, 3);
    assert_eq!(subalg.len(), 7);
    let tuples = MultiForm::increasing_tuples(5, 3);
    let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut worst_kill: f64 = 0.0;
    for case in 0..10usize {
        let mut tau = MultiForm::zeros(5, 3);
        match case {
            0 => {}
            1 => tau.set_antisym(&[0, 1, 2], 1.0),
            2 => {
                tau.set_antisym(&[0, 1, 2], 1.0);
                tau.set_antisym(&[0, 3, 4], 1.0);
            }
            _ => {
                for tuple in &tuples {
                    tau.set_antisym(tuple, levels[rng.below(5)]);
                }
            }
        }
        let ann = annihilator(&tau, &subalg, 1e-10);
        for lam in &ann {
            worst_kill = worst_kill.max(multivector_action(&lam.matrix(), &tau).max_abs());
        }
        let mut action = DMatrix::zeros(tuples.len(), subalg.len());
        for (j, b) in subalg.iter().enumerate() {
            let acted = multivector_action(&b.matrix(), &tau);
            for (r, t) in tuples.iter().enumerate() {
                action[(r, j)] = acted.get(t);
            }
        }
        let sv = action.svd(false, false).singular_values;
        let top = sv.iter().fold(0.0f64, |m, s| m.max(*s));
        let rank = sv.iter().filter(|s| **s > 1e-10 * top.max(1e-300)).count();
        pass &= ann.len() == subalg.len() - rank;
    }
    pass &= worst_kill < 1e-10;
    notes.push(format!("annihilator kill {worst_kill:.1e}, ranks agree"));

    criterion(8, "stabilizer algebra dimensions", pass, &notes.join("; "));
}

// -- 9 ------------------------------------------------------------------

// The three parallelism conditions for a skew 3-form (closed and parallel /
// parallel with vanishing sigma / metric-parallel with vanishing sigma) are
// provably equivalent; on twenty instances spanning catalog charts, two flat
// hand-built charts, and random perturbations, the three verdicts always
// agree, and both the all-true and all-false patterns occur.
#[test]
fn parallelism_equivalence_pattern_is_uniform() {
    let mut rng = SplitMix64::substream(61, "equivalence pattern");
    let mut verdicts: Vec<(String, ParallelismVerdict)> = Vec::new();

    let mut judge = |name: &str, spec: &MetricSpec, x: &[f64]| {
        let pd = at_point(spec, x).expect("chart evaluates");
        let (tau, dtau) = pd.s.clone().expect("chart declares a skew part");
        let r = skew_point_residuals(&pd, &tau, &dtau);
        let v = ParallelismVerdict::from_maxima(r.nabla_tau, r.nabla_g_tau, r.dtau, r.sigma, 1e-8);
        (format!("{name}@{x:.3?}"), v)
    };

    for name in [
        "warped_vol",
        "warped_mink_vol",
        "kundt3",
        "plane_wave",
        "deg_isotropic_walker",
        "nondeg_product",
    ] {
        let spec = build(name);
        for _ in 0..2 {
            let x = sample_point(&spec, &mut rng, 0.1);
            verdicts.push(judge(name, &spec, &x));
        }
    }

    // flat chart with a constant screen-volume slice: all three conditions hold
    let coords = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let flat4 = MetricSpec::new(
        "flat_parallel_slice",
        coords(&["t", "x", "y", "z"]),
        vec![],
        vec![],
        vec![
            (0, 0, Expr::constant(-1.0)),
            (1, 1, Expr::constant(1.0)),
            (2, 2, Expr::constant(1.0)),
            (3, 3, Expr::constant(1.0)),
        ],
        None,
        Some(vec![SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(0.8) }]),
        vec![(-2.0, 2.0); 4],
        None,
    )
    .unwrap();
    verdicts.push(judge("flat_parallel_slice", &flat4, &[0.3, -0.4, 0.9, 1.1]));

    // flat chart with a two-block form: constant and metric-parallel, but its
    // sigma is nonzero, so no condition holds
    let flat5 = MetricSpec::new(
        "flat_two_block",
        coords(&["t", "x", "y", "z", "w"]),
        vec![],
        vec![],
        (0..5)
            .map(|i| (i, i, Expr::constant(if i == 0 { -1.0 } else { 1.0 })))
            .collect(),
        None,
        Some(vec![
            SparseFormEntry { idx: [0, 1, 2], expr: Expr::constant(1.0) },
            SparseFormEntry { idx: [0, 3, 4], expr: Expr::constant(1.0) },
        ]),
        vec![(-2.0, 2.0); 5],
        None,
    )
    .unwrap();
    verdicts.push(judge("flat_two_block", &flat5, &[0.1, 0.2, -0.3, 0.5, -0.7]));

    for dim in [3usize, 4, 5, 3, 4, 5] {
        let spec = random_chart_with_form(dim, &mut rng);
        let x = sample_point(&spec, &mut rng, 0.1);
        verdicts.push(judge(&format!("random_dim{dim}"), &spec, &x));
    }

    assert_eq!(verdicts.len(), 20);
    let disagreements: Vec<&String> = verdicts
        .iter()
        .filter(|(_, v)| !v.agree())
        .map(|(name, _)| name)
        .collect();
    let trues = verdicts.iter().filter(|(_, v)| v.closed_parallel).count();
    let pass = disagreements.is_empty() && trues > 0 && trues < verdicts.len();
    criterion(
        9,
        "parallelism equivalence pattern",
        pass,
        &format!(
            "20 instances, {} disagreements, {} all-true / {} all-false",
            disagreements.len(),
            trues,
            verdicts.len() - trues
        ),
    );
}

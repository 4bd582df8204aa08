//! Acceptance criteria, evaluated at their stated tolerances. Every
//! criterion prints one `PASS` or `FAIL` line; a failing criterion does not
//! abort the run.

mod common;

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use chainent::entanglement::{
    concurrence, ls_decompose, ppt_check, LsDecomposition, SEPARABLE_CONCURRENCE,
};
use chainent::ground_solver::lanczos_ground_state;
use chainent::observables::{reduced_density_matrix, TwoQubitDensityMatrix, RDM_TOL};
use chainent::oracle::{dense_ground_state, ls_grid_search, werner_state, werner_values};
use chainent::spin_model::{build_hamiltonian, classical_point, Boundary, ModelParams};
use chainent::sweep::{render_csv, run_sweep, Backend, SweepConfig, SweepOutput, SweepRow};
use chainent::Error;
use common::{max_diff, random_params, random_state};
use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const H_P: f64 = 0.5;
const GRID_EPS: f64 = 1e-9;
const GOLDEN: &str = "tests/data/ising_n16.csv";

struct Report {
    lines: Vec<String>,
    passed: usize,
}

impl Report {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        let line = format!("criterion {id:>2} {}: {detail}", if pass { "PASS" } else { "FAIL" });
        // Bypasses the test harness capture so the lines reach the log.
        let _ = writeln!(std::io::stderr(), "{line}");
        self.passed += usize::from(pass);
        self.lines.push(line);
    }
}

fn ising(n: usize) -> SweepConfig {
    SweepConfig { j_par: 0.0, j_perp: 1.0, h_min: 0.0, h_max: 1.0, h_steps: 101, n_sites: n, ..Default::default() }
}

fn xy(n: usize) -> SweepConfig {
    SweepConfig { j_par: 1.0, j_perp: 0.0, h_min: 0.0, h_max: 2.0, h_steps: 101, n_sites: n, ..Default::default() }
}

fn single(base: &SweepConfig, h: f64, backend: Backend) -> SweepRow {
    let cfg = SweepConfig { h_min: h, h_max: h, h_steps: 1, backend, ..base.clone() };
    run_sweep(&cfg).expect("valid config").rows.remove(0)
}

fn row_at(out: &SweepOutput, h: f64) -> &SweepRow {
    out.rows.iter().find(|r| (r.h - h).abs() < GRID_EPS).expect("grid point")
}

fn fmt(x: Option<f64>) -> String {
    x.map_or("none".into(), |v| format!("{v:.4}"))
}

fn decompose(rho: &TwoQubitDensityMatrix) -> LsDecomposition {
    match ls_decompose(rho) {
        Ok(d) => d,
        Err(Error::Certificate { best, .. }) => *best,
        Err(e) => panic!("decomposition failed: {e}"),
    }
}

fn random_unitary<R: Rng>(rng: &mut R) -> Matrix2<Complex64> {
    let g = Matrix2::from_fn(|_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}

fn kron(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

#[test]
fn acceptance() {
    let mut report = Report { lines: Vec::new(), passed: 0 };

    // Shared sweeps.
    let start = Instant::now();
    let ising16 = run_sweep(&ising(16)).unwrap();
    let ising16_time = start.elapsed();
    let ising12 = run_sweep(&ising(12)).unwrap();
    let ising8 = run_sweep(&ising(8)).unwrap();
    let xy16 = run_sweep(&xy(16)).unwrap();
    let nnn16 = run_sweep(&SweepConfig { pair_separation: 2, h_steps: 51, ..ising(16) }).unwrap();

    // 1. Singularity location and finite-size sharpening.
    {
        let dist = |o: &SweepOutput| {
            (
                o.summary.argmax_c_rho_e.map(|h| (h - H_P).abs()),
                o.summary.argmin_one_minus_lambda.map(|h| (h - H_P).abs()),
            )
        };
        let (d8, d12, d16) = (dist(&ising8), dist(&ising12), dist(&ising16));
        let near = |d: Option<f64>| d.is_some_and(|d| d <= 0.02 + GRID_EPS);
        let monotone = |a: Option<f64>, b: Option<f64>, c: Option<f64>| match (a, b, c) {
            (Some(a), Some(b), Some(c)) => a + GRID_EPS >= b && b + GRID_EPS >= c,
            _ => false,
        };
        let located = near(d16.0) && near(d16.1);
        let sharpening = monotone(d8.0, d12.0, d16.0) && monotone(d8.1, d12.1, d16.1);
        let fast = ising16_time <= Duration::from_secs(600);
        let s = |o: &SweepOutput| {
            format!("{}/{}", fmt(o.summary.argmax_c_rho_e), fmt(o.summary.argmin_one_minus_lambda))
        };
        report.record(
            "1",
            located && sharpening && fast,
            format!(
                "argmax C(rho_e)/argmin 1-Lambda: N=8 {}, N=12 {}, N=16 {} (target 0.5 +- 0.02); \
                 sharpening monotone: {sharpening}; N=16 sweep {:.0} s",
                s(&ising8),
                s(&ising12),
                s(&ising16),
                ising16_time.as_secs_f64()
            ),
        );
    }

    // 2. The concurrence maximum is shifted above the transition.
    {
        let (c, ce) = (ising16.summary.argmax_c_rho, ising16.summary.argmax_c_rho_e);
        let pass = matches!((c, ce), (Some(c), Some(ce)) if (c - ce).abs() > GRID_EPS && c > H_P + GRID_EPS);
        report.record("2", pass, format!("argmax C(rho) = {}, argmax C(rho_e) = {}", fmt(c), fmt(ce)));
    }

    // 3. a² as an order parameter.
    {
        let window: Vec<&SweepRow> =
            ising16.rows.iter().filter(|r| r.h >= 0.4 - GRID_EPS && r.h <= 0.6 + GRID_EPS).collect();
        let monotone = window.windows(2).all(|w| match (w[0].a2, w[1].a2) {
            (Some(a), Some(b)) => b <= a + 1e-12,
            _ => false,
        });
        let tail: Vec<&SweepRow> = ising16.rows.iter().filter(|r| r.h >= 0.55 - GRID_EPS).collect();
        let tail_max = tail.iter().filter_map(|r| r.a2).fold(0.0, f64::max);
        let tail_ok = tail.iter().all(|r| r.error.is_none() && r.a2.is_none_or(|a| a < 0.02));
        let crossing = xy16.summary.a2_vanishes_at;
        let crossing_ok = crossing.is_some_and(|h| (1.40 - GRID_EPS..=1.52 + GRID_EPS).contains(&h));
        report.record(
            "3",
            monotone && tail_ok && crossing_ok,
            format!(
                "Ising a2 nonincreasing on [0.4, 0.6]: {monotone}; max a2 for h >= 0.55: {tail_max:.3e}; \
                 XY a2 < 1e-3 first at h = {}",
                fmt(crossing)
            ),
        );
    }

    // 4. Classical point of the XY model, in the bulk; open-chain ED values
    //    are listed for comparison.
    {
        let base = xy(16);
        let h_cl = classical_point(&ModelParams::xy(0.0, 2));
        let check = |backend: Backend| {
            let at = single(&base, h_cl, backend);
            let c = at.c_rho.unwrap_or(f64::NAN);
            let moment = at.sx.zip(at.sz_stag).map_or(f64::NAN, |(x, z)| x.hypot(z));
            let mut ok = c <= 1e-3 && (moment - 0.5).abs() <= 1e-3;
            let mut sides = Vec::new();
            for h in [h_cl - 0.05, h_cl + 0.05] {
                let r = single(&base, h, backend);
                let w = r.weights();
                let near = w.is_some_and(|w| {
                    (w[0] - 0.25).abs() <= 0.02 && (w[1] - 0.5).abs() <= 0.02 && (w[3] - 0.25).abs() <= 0.02
                });
                ok &= near;
                sides.push(match w {
                    Some(w) => format!("h={h:.4}: a2={:.3} b2={:.3} d2={:.3}", w[0], w[1], w[3]),
                    None => format!("h={h:.4}: separable"),
                });
            }
            (ok, format!("C={c:.2e} |m|={moment:.5}; {}", sides.join("; ")))
        };
        let (bulk_ok, bulk) = check(Backend::Idmrg);
        let (_, ed) = check(Backend::Ed);
        report.record("4", bulk_ok, format!("idmrg: {bulk} | ed N=16: {ed}"));
    }

    // Random states shared by criteria 5 and 10.
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let randoms: Vec<(TwoQubitDensityMatrix, LsDecomposition)> = (0..1000)
        .map(|_| {
            let rho = random_state(&mut rng, 4, false);
            let d = decompose(&rho);
            (rho, d)
        })
        .collect();

    // 5. Certificate identity over sweep rows and random states.
    {
        let sweeps = [&ising16, &ising12, &ising8, &xy16, &nnn16];
        let mut row_gaps = Vec::new();
        let mut row_errors = 0;
        for r in sweeps.iter().flat_map(|o| o.rows.iter()) {
            if r.error.is_some() {
                row_errors += 1;
            } else if r.separable == Some(false) {
                row_gaps.push(r.certificate_gap().unwrap());
            }
        }
        let random_gaps: Vec<f64> = randoms.iter().map(|(_, d)| d.certificate_gap()).collect();
        let count = |g: &[f64]| g.iter().filter(|&&x| x > 1e-5).count();
        let max = |g: &[f64]| g.iter().copied().fold(0.0, f64::max);
        let rank_deficient = randoms
            .iter()
            .filter(|(_, d)| d.certificate_gap() > 1e-5 && !d.certificate_applies())
            .count();
        let pass = row_errors == 0 && count(&row_gaps) == 0 && count(&random_gaps) == 0;
        report.record(
            "5",
            pass,
            format!(
                "sweep rows: {} of {} above 1e-5 (max {:.2e}), {row_errors} error rows; random states: {} of {} \
                 above 1e-5 (max {:.2e}), {rank_deficient} of them with rank-deficient rho_s",
                count(&row_gaps),
                row_gaps.len(),
                max(&row_gaps),
                count(&random_gaps),
                random_gaps.len(),
                max(&random_gaps)
            ),
        );
    }

    // 6. Werner family against the closed form and the grid oracle.
    {
        let mut pass = true;
        let mut parts = Vec::new();
        for p in [0.4, 0.6, 0.8, 1.0] {
            let rho = werner_state(p);
            let (expected, _) = werner_values(p).unwrap();
            let grid = ls_grid_search(&rho, 17).unwrap();
            let d = ls_decompose(&rho).unwrap();
            let a2 = d.bell.map_or(0.0, |b| b.weights()[0]);
            let ok = (grid.one_minus_lambda() - expected).abs() <= 1e-4
                && (d.one_minus_lambda() - expected).abs() <= 1e-4
                && a2 >= 0.999;
            pass &= ok;
            parts.push(format!("p={p}: 1-Lambda={:.6} grid={:.6} a2={a2:.6}", d.one_minus_lambda(), grid.one_minus_lambda()));
        }
        report.record("6", pass, parts.join("; "));
    }

    // 7. |c|² vanishes for nearest neighbours and tracks the order for
    //    next-nearest neighbours.
    {
        let nn_max = [&ising16, &xy16]
            .iter()
            .flat_map(|o| o.rows.iter())
            .filter(|r| r.separable == Some(false))
            .filter_map(|r| r.c2)
            .fold(0.0, f64::max);
        let low: Vec<&SweepRow> =
            nnn16.rows.iter().filter(|r| r.h < 0.4 - GRID_EPS && r.separable == Some(false)).collect();
        let low_min = low.iter().filter_map(|r| r.c2).fold(f64::INFINITY, f64::min);
        let high_max = nnn16
            .rows
            .iter()
            .filter(|r| r.h >= 0.55 - GRID_EPS)
            .filter_map(|r| r.c2)
            .fold(0.0, f64::max);
        let high_ok = nnn16.rows.iter().filter(|r| r.h >= 0.55 - GRID_EPS).all(|r| r.error.is_none());
        let pass = nn_max <= 1e-6 && !low.is_empty() && low_min > 0.01 && high_ok && high_max < 1e-3;
        report.record(
            "7",
            pass,
            format!(
                "max nearest-neighbour c2 {nn_max:.2e}; next-nearest: min c2 for h < 0.4 {low_min:.4}, \
                 max c2 for h >= 0.55 {high_max:.2e}"
            ),
        );
    }

    // 8. Small-field limit of the Ising Bell amplitudes.
    {
        let r = single(&ising(16), 0.02, Backend::Ed);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pass = r.weights().is_some_and(|w| {
            let amp = w.map(f64::sqrt);
            (amp[0] - s).abs() <= 0.03 && (amp[1] - s).abs() <= 0.03 && amp[2] <= 1e-3 && amp[3] <= 1e-3
        });
        let detail = match r.weights() {
            Some(w) => {
                let a = w.map(f64::sqrt);
                format!("|a|={:.4} |b|={:.4} |c|={:.2e} |d|={:.2e}", a[0], a[1], a[2], a[3])
            }
            None => "no entangled part".into(),
        };
        report.record("8", pass, format!("h=0.02: {detail}"));
    }

    // 9. Solver equivalence.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut worst_energy = 0.0f64;
        for draw in 0..20 {
            let p = random_params(&mut rng, 10);
            let h = build_hamiltonian(&p).unwrap();
            let ours = lanczos_ground_state(&h, 1e-10, draw).unwrap();
            let dense = dense_ground_state(&h).unwrap();
            worst_energy = worst_energy.max((ours.energy - dense.energy).abs());
        }
        let mut worst_c = 0.0f64;
        let mut parts = Vec::new();
        // Not judged: the same comparison against a periodic chain, which has
        // no boundary-induced bond alternation.
        let mut periodic = Vec::new();
        for (name, cfg, sweep, fields) in [
            ("ising", ising(16), &ising16, [0.1, 0.3, 0.7, 0.85, 1.0]),
            ("xy", xy(16), &xy16, [0.4, 0.8, 1.0, 1.8, 2.0]),
        ] {
            for h in fields {
                let ed = row_at(sweep, h).c_rho.unwrap_or(f64::NAN);
                let bulk = single(&cfg, h, Backend::Idmrg).c_rho.unwrap_or(f64::NAN);
                let diff = (ed - bulk).abs();
                worst_c = if diff.is_nan() { f64::INFINITY } else { worst_c.max(diff) };
                parts.push(format!("{name} h={h}: {diff:.1e}"));
                let ring = SweepConfig { boundary: Boundary::Periodic, ..cfg.clone() };
                let ring_c = single(&ring, h, Backend::Ed).c_rho.unwrap_or(f64::NAN);
                periodic.push(format!("{:.1e}", (ring_c - bulk).abs()));
            }
        }
        report.record(
            "9",
            worst_energy <= 1e-10 && worst_c <= 2e-2,
            format!(
                "max |E_lanczos - E_dense| {worst_energy:.1e}; |C_idmrg - C_ed|: {} (periodic ed, same points: {})",
                parts.join(", "),
                periodic.join(", ")
            ),
        );
    }

    // 10. Property suites.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut rdm_worst = 0.0f64;
        for draw in 0..20 {
            let p = random_params(&mut rng, 12);
            let g = lanczos_ground_state(&build_hamiltonian(&p).unwrap(), 1e-10, draw).unwrap();
            for i in 0..p.n_sites - 2 {
                for j in [i + 1, i + 2] {
                    let r = reduced_density_matrix(&g, i, j).unwrap();
                    rdm_worst = rdm_worst
                        .max(r.hermiticity_error())
                        .max((r.trace() - 1.0).abs())
                        .max(-r.min_eigenvalue());
                }
            }
        }

        let mut ppt_mismatch = 0;
        for _ in 0..10_000 {
            let rank = rng.gen_range(1..=4);
            let rho = random_state(&mut rng, rank, false);
            let c = concurrence(&rho).unwrap();
            ppt_mismatch += usize::from(ppt_check(&rho).separable != (c < SEPARABLE_CONCURRENCE));
        }

        let mut lu_worst = 0.0f64;
        for _ in 0..1000 {
            let rank = rng.gen_range(1..=4);
            let rho = random_state(&mut rng, rank, false);
            let u = kron(&random_unitary(&mut rng), &random_unitary(&mut rng));
            let rotated = TwoQubitDensityMatrix::from_matrix(u * rho.elements * u.adjoint(), (0, 1));
            lu_worst = lu_worst.max((concurrence(&rotated).unwrap() - concurrence(&rho).unwrap()).abs());
        }

        let recon_worst = randoms
            .iter()
            .filter_map(|(rho, d)| d.reconstruct().map(|m| max_diff(&m, &rho.elements)))
            .fold(0.0, f64::max);

        let rerun = run_sweep(&ising(8)).unwrap();
        let deterministic = render_csv(&rerun.rows) == render_csv(&ising8.rows);

        let pass = rdm_worst <= RDM_TOL
            && ppt_mismatch == 0
            && lu_worst <= 1e-10
            && recon_worst <= 1e-9
            && deterministic;
        report.record(
            "10",
            pass,
            format!(
                "RDM invariant violation {rdm_worst:.1e}; PPT/C mismatches {ppt_mismatch} of 10000; \
                 LU invariance {lu_worst:.1e}; reconstruction {recon_worst:.1e}; byte-identical rerun {deterministic}"
            ),
        );
    }

    // Regression against the stored Ising sweep.
    {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(GOLDEN);
        let current = render_csv(&ising16.rows);
        let detail = match std::fs::read_to_string(&path) {
            Ok(golden) => format!("matches {GOLDEN}: {}", golden == current),
            Err(_) => format!("{GOLDEN} missing"),
        };
        let _ = writeln!(std::io::stderr(), "golden: {detail}");
    }

    let _ = writeln!(std::io::stderr(), "acceptance: {} of {} criteria pass", report.passed, report.lines.len());
    assert_eq!(report.lines.len(), 10);
}

//! Quick end-to-end runs on coarse grids (full studies live in the
//! acceptance suite).

use cfm_maxwell::fdtd::{run, RunOptions, SchemeConfig};
use cfm_maxwell::grid::GridSpec;
use cfm_maxwell::problems::make_problem;

#[test]
fn circle_order4_coarse_pair_converges() {
    let problem = make_problem("circle").unwrap();
    let mut results = Vec::new();
    for n in [20usize, 40] {
        let grid = GridSpec::unit_square(n);
        let cfg = SchemeConfig {
            order: 4,
            dt: grid.h() / 2.0,
            physics: problem.physics,
            degree: 3,
        };
        let out = run(&problem, &grid, &cfg, 0.5, RunOptions::standard()).unwrap();
        println!(
            "n={n}: corrected={} L1={:?} Linf={:?} div=({:.3e},{:.3e}) drift={:.3e}",
            out.n_corrected, out.l1, out.linf, out.div_linf, out.div_l1, out.single_sided_drift
        );
        results.push(out);
    }
    // L1 error of Ez should drop by roughly 2^4
    let ratio = results[0].l1[2] / results[1].l1[2];
    println!("Ez L1 ratio (h -> h/2): {ratio}");
    assert!(ratio > 8.0, "expected near-16x drop, got {ratio}");
    // single-sided corners keep their discrete divergence
    assert!(results[0].single_sided_drift <= 1e-9);
}

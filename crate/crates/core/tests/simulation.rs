use skillband::simulation::{run_coverage_experiment, Bootstrap, CoverageCell, CoverageGrid};
use skillband::{BandType, Target};

fn coverage(cells: &[CoverageCell], dim: usize, ar: f64, t: BandType) -> f64 {
    cells
        .iter()
        .find(|c| c.dim == dim && c.ar == ar && c.band_type == t)
        .unwrap()
        .coverage
}

#[test]
fn simultaneous_bands_beat_pointwise() {
    let grid = CoverageGrid {
        ar: vec![0.0, 0.6],
        dims: vec![2, 5, 10],
        n_times: vec![200],
        bootstraps: vec![Bootstrap::Block { q: 3 }],
        replications: 300,
        bootstrap_replicates: 999,
        seed: 3,
        ..CoverageGrid::default()
    };
    let cells = run_coverage_experiment(&grid).unwrap();
    assert!(cells
        .iter()
        .all(|c| c.failed == 0 && c.target == Target::Skill));
    for ar in [0.0, 0.6] {
        for dim in [5, 10] {
            let pw = coverage(&cells, dim, ar, BandType::Pointwise);
            assert!(pw < coverage(&cells, dim, ar, BandType::Supt) + 0.02);
            assert!(pw < coverage(&cells, dim, ar, BandType::Bonferroni) + 0.02);
        }
        let pw: Vec<f64> = [2, 5, 10]
            .iter()
            .map(|&d| coverage(&cells, d, ar, BandType::Pointwise))
            .collect();
        assert!(pw[1] <= pw[0] + 0.02 && pw[2] <= pw[1] + 0.02, "{pw:?}");
    }
}

#[test]
fn cells_do_not_depend_on_grid_composition() {
    let base = CoverageGrid {
        dims: vec![3],
        n_times: vec![60],
        bootstraps: vec![Bootstrap::Iid],
        replications: 25,
        bootstrap_replicates: 200,
        seed: 8,
        ..CoverageGrid::default()
    };
    let alone = run_coverage_experiment(&base).unwrap();
    let wider = run_coverage_experiment(&CoverageGrid {
        dims: vec![2, 3],
        bootstraps: vec![Bootstrap::Block { q: 2 }, Bootstrap::Iid],
        ..base.clone()
    })
    .unwrap();
    for cell in &alone {
        assert!(wider.contains(cell));
    }
}

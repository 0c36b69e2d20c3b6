mod common;

use pointscatter::dynamics::{evolve, evolve_with, EvolutionSettings, GaussianPacket};
use pointscatter::{Geometry, InteractionParams, Lattice, PlacedInteraction, WallCondition};

use common::uniform;

fn barrier() -> Lattice {
    Lattice::new(vec![
        PlacedInteraction::new(InteractionParams::delta(1.0).unwrap(), 0.0).unwrap(),
        PlacedInteraction::new(InteractionParams::new(1.2, 0.3, 0.1, (1.0 + 0.3 * 0.1) / 1.2, 0.4).unwrap(), 1.5).unwrap(),
    ])
    .unwrap()
}

#[test]
fn free_spreading_follows_the_dispersion_law() {
    let sigma = 1.0;
    let p = GaussianPacket::new(0.0, 2.0, sigma).unwrap();
    let (grid, h) = uniform(-25.0, 35.0, 1201);
    let times = [0.0, 1.0, 2.0];
    let r = evolve(&Geometry::Line, &Lattice::empty(), &p, &times, &grid).unwrap();
    for (i, &t) in times.iter().enumerate() {
        let prob: Vec<f64> = r.values[i].iter().map(|v| v.norm_sqr()).collect();
        let mass: f64 = prob.iter().sum::<f64>() * h;
        let mean: f64 = grid.iter().zip(&prob).map(|(x, p)| x * p).sum::<f64>() * h / mass;
        let var: f64 = grid.iter().zip(&prob).map(|(x, p)| (x - mean).powi(2) * p).sum::<f64>() * h / mass;
        let expect = sigma * sigma * (1.0 + (t / (sigma * sigma)).powi(2));
        assert!((var / expect - 1.0).abs() < 0.01, "t = {t}: {var} vs {expect}");
        assert!((mean - 4.0 * t).abs() < 1e-6);
    }
}

#[test]
fn scattering_conserves_norm_and_energy() {
    let p = GaussianPacket::new(-8.0, 2.0, 1.0).unwrap();
    let (grid, _) = uniform(-20.0, 20.0, 81);
    let times = [0.0, 1.0, 2.0, 3.0];
    let r = evolve(&Geometry::Line, &barrier(), &p, &times, &grid).unwrap();
    assert!(r.norms.iter().all(|n| (n - 1.0).abs() <= 1e-4), "{:?}", r.norms);
    assert!(r.energies.iter().all(|e| (e - r.energies[0]).abs() <= 1e-10 * r.energies[0].abs()));
    // <H> of the initial packet is k0^2 + 1/(4 sigma^2)
    assert!((r.energies[0] - 4.25).abs() < 1e-3, "{}", r.energies[0]);
}

#[test]
fn refined_quadrature_does_not_degrade_norms() {
    let geom = Geometry::HalfLine { wall: WallCondition::Neumann };
    let p = GaussianPacket::new(10.0, -1.5, 1.0).unwrap();
    let lat = barrier().translated(4.0).unwrap();
    let (grid, _) = uniform(0.5, 20.0, 40);
    let times = [0.0, 2.0, 4.0];
    let drift = |s: &EvolutionSettings| {
        let r = evolve_with(&geom, &lat, &p, &times, &grid, s).unwrap();
        r.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    };
    let coarse = drift(&EvolutionSettings::default());
    let fine = drift(&EvolutionSettings { resolution: 0.5, momentum_cutoff: 12.0, ..Default::default() });
    assert!(coarse <= 1e-4, "{coarse:e}");
    assert!(fine <= coarse.max(1e-9), "{fine:e} vs {coarse:e}");
}

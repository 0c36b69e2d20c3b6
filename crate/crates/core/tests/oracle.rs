mod common;

use num_complex::Complex64;
use pointscatter::composition::compose_block;
use pointscatter::greens::green;
use pointscatter::oracle::{oracle_block_amplitudes, oracle_green};
use pointscatter::{Geometry, InteractionParams, Lattice, PlacedInteraction, Wavenumber};
use rand::Rng;

use common::*;

fn lattice(sites: &[(f64, f64, f64, f64, f64, f64)], shift: f64) -> Lattice {
    Lattice::new(
        sites
            .iter()
            .map(|&(a, b, c, d, phase, y)| PlacedInteraction::new(InteractionParams::new(a, b, c, d, phase).unwrap(), y + shift).unwrap())
            .collect(),
    )
    .unwrap()
}

// strongly reflecting ring; reference value from 60-digit arithmetic
#[test]
fn stiff_ring_matches_high_precision() {
    let length = 2.584419104600495 + 1.0579775864934082;
    let lat = lattice(
        &[
            (1.0, -1.2675460807414205, 0.0, 1.0, 0.0, 0.4),
            (-0.5513273872833966, 1.0826337865467501, -0.8562087200990162, -0.13247938152455951, 0.0, 0.7),
            (1.8341209660694064, 0.2, -22.6349961198174, -1.922991606994155, 0.0, 1.604913368626248),
            (0.0, 0.2, -5.0, 0.0, 0.0, 1.904913368626248),
            (-1.7656967592197947, -1.5006163771095784, 0.6663928338075027, 0.0, -0.7940835337448203, 2.284419104600495),
            (1.0, -1.2773781641944173, 0.0, 1.0, 0.0, 2.584419104600495),
        ],
        -0.5 * length,
    );
    let geom = Geometry::Ring { length };
    let k = Wavenumber::new(Complex64::new(2.993937900030921, 0.4750356999263301)).unwrap();
    let (x_f, x_i) = (-1.8201983455469517, 0.5121670640374825);
    let exact = Complex64::new(-0.0071146690785250673, 0.014423605865889637);
    let closed = green(&geom, &lat, x_f, x_i, k).unwrap().value;
    let oracle = oracle_green(&geom, &lat, x_f, x_i, k).unwrap();
    assert!(rel(closed, exact) < 1e-13, "{closed}");
    assert!(rel(oracle, exact) < 1e-10, "{oracle}");
}

// transmission near 1e-6 through seven sites; reference from 50-digit arithmetic
#[test]
fn opaque_block_transmission() {
    let lat = lattice(
        &[
            (0.0, 0.962341020826344, -1.0391326757964854, 0.0, 0.0, -2.0),
            (1.0, 0.0, -0.782132815304561, 1.0, 0.0, -1.6838028821694355),
            (1.0, 1.3683423616917247, 0.0, 1.0, 0.0, -1.3838028821694355),
            (0.0, 1.9748021178486144, -0.506379849890691, 0.0, 2.357812699919402, -0.5336731294667597),
            (1.7621260373658738, 1.7113510484384888, -0.5843336473322897, 0.0, 0.0, 0.32092677827080074),
            (-0.9413972652630702, -1.509422832459519, 0.6625048849768337, 0.0, 0.0, 1.1484946357225638),
            (1.0, 1.4790173396098873, 0.0, 1.0, 0.0, 2.0203232955824912),
        ],
        0.0,
    );
    let k = Wavenumber::real(9.108343723576107).unwrap();
    let exact = Complex64::new(4.7208824009076173e-7, 4.2197611203193293e-7);
    let ours = compose_block(&lat, 1, 7, k).unwrap().t_plus;
    let theirs = oracle_block_amplitudes(&lat, 1, 7, k).unwrap().t_plus;
    assert!(rel(ours, exact) < 1e-12, "{ours}");
    assert!(rel(theirs, exact) < 1e-10, "{theirs}");
}

#[test]
fn oracle_satisfies_defect_and_jump() {
    let mut rng = rng(21);
    for i in 0..200 {
        let n = rng.random_range(0..=4);
        let (geom, lat) = instance(&mut rng, i % 4, n);
        let k = Wavenumber::new(Complex64::new(rng.random_range(0.3..4.0), rng.random_range(0.05..0.5))).unwrap();
        let kv = k.value();
        let x_i = point(&mut rng, &geom, &lat, 0.05);
        let x_f = point(&mut rng, &geom, &lat, 0.05);
        if (x_f - x_i).abs() < 0.05 {
            continue;
        }
        let g = |x: f64| oracle_green(&geom, &lat, x, x_i, k).unwrap();
        let h = 1e-4 * 2.0 * std::f64::consts::PI / kv.norm();
        let second = (-g(x_f + 2.0 * h) + 16.0 * g(x_f + h) - 30.0 * g(x_f) + 16.0 * g(x_f - h) - g(x_f - 2.0 * h)) / (12.0 * h * h);
        let slope = (g(x_f + h) - g(x_f - h)) / (2.0 * h);
        let scale = kv.norm_sqr() * g(x_f).norm().max(slope.norm() / kv.norm());
        assert!((second + kv * kv * g(x_f)).norm() <= 1e-6 * scale, "{} case {i}", geom.name());
        let right = (-3.0 * g(x_i) + 4.0 * g(x_i + h) - g(x_i + 2.0 * h)) / (2.0 * h);
        let left = (3.0 * g(x_i) - 4.0 * g(x_i - h) + g(x_i - 2.0 * h)) / (2.0 * h);
        assert!((right - left - 1.0).norm() <= 1e-6, "{} case {i}", geom.name());
    }
}

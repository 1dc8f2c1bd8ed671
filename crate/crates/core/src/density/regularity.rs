//! Numerical surrogates for the smoothness and decay each process type asks of
//! the density pair.

use super::{Density, DensityPair};
use crate::levy::{ProcessClass, ProcessType};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SurrogateCheck {
    pub name: String,
    /// `h0`, `h1` or `g_hat`.
    pub target: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub process_type: ProcessType,
    pub passed: bool,
    pub checks: Vec<SurrogateCheck>,
    /// Radius beyond which `|ĝ| < 1e-10` was observed (type D only).
    pub compact_radius: Option<f64>,
}

const LADDER_LEVELS: u32 = 5;
const LADDER_GROWTH: f64 = 2.0;
const TABLE_EDGE_DECAY: f64 = 1e-8;
const DERIVATIVE_EDGE_DECAY: f64 = 1e-6;
const G_HAT_ZERO: f64 = 1e-10;
const XI_SCAN: f64 = 100.0;

pub fn check_regularity(pair: &DensityPair, cls: &ProcessClass) -> RegularityReport {
    let mut checks = Vec::new();
    let mut compact_radius = None;
    match cls.tag {
        ProcessType::S => {
            for (name, h) in [("h0", &pair.h0), ("h1", &pair.h1)] {
                continuity_checks(name, h, &mut checks);
            }
        }
        ProcessType::Zero => {
            for (name, h) in [("h0", &pair.h0), ("h1", &pair.h1)] {
                derivative_checks(name, h, &mut checks);
            }
        }
        ProcessType::D => {
            let (check, radius) = compact_transform_check(pair);
            compact_radius = radius;
            checks.push(check);
        }
    }
    RegularityReport { process_type: cls.tag, passed: checks.iter().all(|c| c.passed), checks, compact_radius }
}

/// Sampling window and base step for finite differences.
fn window(h: &Density) -> (f64, f64, f64) {
    match h.table_nodes() {
        Some(nodes) => {
            let d = h.table_spacing().unwrap();
            (nodes[0] - 4.0 * d, nodes[nodes.len() - 1] + 4.0 * d, d * (1 << (LADDER_LEVELS - 1)) as f64)
        }
        None => {
            let c = h.center();
            let w = h.tail_extent(1e-12).min(1e3 * h.core_scale());
            (c - w, c + w, h.core_scale() / 8.0)
        }
    }
}

struct LadderLevel {
    sup_d1: f64,
    sup_d2: f64,
    l1_d1: f64,
    l1_d2: f64,
    edge_d1: f64,
    edge_d2: f64,
}

fn ladder(h: &Density) -> Vec<LadderLevel> {
    let (lo, hi, s0) = window(h);
    (0..LADDER_LEVELS)
        .map(|k| {
            let s = s0 / (1u64 << k) as f64;
            let n = ((hi - lo) / s).ceil() as usize;
            let mut lvl = LadderLevel { sup_d1: 0.0, sup_d2: 0.0, l1_d1: 0.0, l1_d2: 0.0, edge_d1: 0.0, edge_d2: 0.0 };
            for j in 0..=n {
                let x = lo + s * j as f64;
                let (a, b, c) = (h.pdf(x - s), h.pdf(x), h.pdf(x + s));
                let d1 = ((c - a) / (2.0 * s)).abs();
                let d2 = ((c - 2.0 * b + a) / (s * s)).abs();
                lvl.sup_d1 = lvl.sup_d1.max(d1);
                lvl.sup_d2 = lvl.sup_d2.max(d2);
                lvl.l1_d1 += d1 * s;
                lvl.l1_d2 += d2 * s;
                if j == 0 || j == n {
                    lvl.edge_d1 = lvl.edge_d1.max(d1);
                    lvl.edge_d2 = lvl.edge_d2.max(d2);
                }
            }
            lvl
        })
        .collect()
}

fn growth(first: f64, last: f64) -> f64 {
    if first > 0.0 {
        last / first
    } else if last > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

fn continuity_checks(name: &str, h: &Density, out: &mut Vec<SurrogateCheck>) {
    if !h.is_tabulated() {
        out.push(SurrogateCheck {
            name: "continuity".into(),
            target: name.into(),
            passed: true,
            measured: 0.0,
            threshold: 0.0,
            note: "closed form, continuous and vanishing at infinity".into(),
        });
        return;
    }
    let lv = ladder(h);
    let g = growth(lv[0].sup_d1, lv[lv.len() - 1].sup_d1);
    out.push(SurrogateCheck {
        name: "continuity".into(),
        target: name.into(),
        passed: g <= LADDER_GROWTH,
        measured: g,
        threshold: LADDER_GROWTH,
        note: "growth of sup|h'| under 16x step refinement".into(),
    });
    let nodes = h.table_nodes().unwrap();
    let edge = h.pdf(nodes[0]).max(h.pdf(nodes[nodes.len() - 1]));
    out.push(SurrogateCheck {
        name: "decay".into(),
        target: name.into(),
        passed: edge < TABLE_EDGE_DECAY,
        measured: edge,
        threshold: TABLE_EDGE_DECAY,
        note: "density at the table edges".into(),
    });
}

fn derivative_checks(name: &str, h: &Density, out: &mut Vec<SurrogateCheck>) {
    let lv = ladder(h);
    let (first, last) = (&lv[0], &lv[lv.len() - 1]);
    for (order, sup0, sup1, l10, l11, edge) in [
        (1, first.sup_d1, last.sup_d1, first.l1_d1, last.l1_d1, last.edge_d1),
        (2, first.sup_d2, last.sup_d2, first.l1_d2, last.l1_d2, last.edge_d2),
    ] {
        let g = growth(sup0, sup1).max(growth(l10, l11));
        out.push(SurrogateCheck {
            name: format!("derivative-{order}"),
            target: name.into(),
            passed: g <= LADDER_GROWTH && l11.is_finite(),
            measured: g,
            threshold: LADDER_GROWTH,
            note: format!("growth of sup and L1 norm of h^({order}) under 16x step refinement; L1 = {l11:.3e}"),
        });
        let rel = if sup1 > 0.0 { edge / sup1 } else { 0.0 };
        out.push(SurrogateCheck {
            name: format!("derivative-{order}-decay"),
            target: name.into(),
            passed: rel < DERIVATIVE_EDGE_DECAY,
            measured: rel,
            threshold: DERIVATIVE_EDGE_DECAY,
            note: "|h^(k)| at the window edges relative to its supremum".into(),
        });
    }
}

fn compact_transform_check(pair: &DensityPair) -> (SurrogateCheck, Option<f64>) {
    if pair.identical() {
        let c = SurrogateCheck {
            name: "compact-transform".into(),
            target: "g_hat".into(),
            passed: true,
            measured: 0.0,
            threshold: G_HAT_ZERO,
            note: "identical densities, g_hat vanishes".into(),
        };
        return (c, Some(0.0));
    }
    if !pair.h0.is_tabulated() && !pair.h1.is_tabulated() {
        let c = SurrogateCheck {
            name: "compact-transform".into(),
            target: "g_hat".into(),
            passed: false,
            measured: f64::INFINITY,
            threshold: G_HAT_ZERO,
            note: "distinct closed-form densities have transforms of full support".into(),
        };
        return (c, None);
    }
    let step = 0.05;
    let n = (XI_SCAN / step) as usize;
    let mut radius = 0.0;
    for k in 1..=n {
        let xi = step * k as f64;
        if pair.g_hat(xi).norm().max(pair.g_hat(-xi).norm()) >= G_HAT_ZERO {
            radius = xi;
        }
    }
    let passed = radius < 0.5 * XI_SCAN;
    let c = SurrogateCheck {
        name: "compact-transform".into(),
        target: "g_hat".into(),
        passed,
        measured: radius,
        threshold: 0.5 * XI_SCAN,
        note: format!("last frequency with |g_hat| >= {G_HAT_ZERO:e} on a scan up to {XI_SCAN}"),
    };
    (c, passed.then_some(radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensitySpec;
    use crate::levy::{classify, LevyTriplet};

    fn class_of(tag: ProcessType) -> ProcessClass {
        let t = match tag {
            ProcessType::S => LevyTriplet::brownian(1.0),
            ProcessType::Zero => LevyTriplet::symmetric_stable(0.8, 1.0),
            ProcessType::D => LevyTriplet::compound_poisson(&[(1.0, 1.0)], 1.0),
        };
        let c = classify(&t).unwrap();
        assert_eq!(c.tag, tag);
        c
    }

    fn gaussians() -> DensityPair {
        DensityPair::from_specs(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 2.0)).unwrap()
    }

    fn step_table() -> DensitySpec {
        let grid: Vec<f64> = (0..=400).map(|i| -4.0 + 0.02 * i as f64).collect();
        let values = grid.iter().map(|&x| if x < 0.0 { 0.5 } else { 1.0 } * (-0.5 * x * x).exp()).collect();
        DensitySpec::Tabulated { grid, values }
    }

    #[test]
    fn gaussian_pair_passes_type_s_and_zero() {
        assert!(check_regularity(&gaussians(), &class_of(ProcessType::S)).passed);
        let r = check_regularity(&gaussians(), &class_of(ProcessType::Zero));
        assert!(r.passed, "{r:#?}");
    }

    #[test]
    fn jump_in_table_fails_derivative_surrogate() {
        let pair = DensityPair::from_specs(DensitySpec::gaussian(0.0, 1.0), step_table()).unwrap();
        let r = check_regularity(&pair, &class_of(ProcessType::Zero));
        assert!(!r.passed);
        let bad = r.checks.iter().find(|c| c.target == "h1" && c.name == "derivative-1").unwrap();
        assert!(!bad.passed && bad.measured > 8.0, "{bad:?}");
    }

    #[test]
    fn smooth_table_passes_type_zero() {
        let grid: Vec<f64> = (0..=1200).map(|i| -12.0 + 0.02 * i as f64).collect();
        let values = grid.iter().map(|&x| (-0.5 * x * x).exp()).collect();
        let pair = DensityPair::from_specs(DensitySpec::gaussian(0.0, 2.0), DensitySpec::Tabulated { grid, values }).unwrap();
        let r = check_regularity(&pair, &class_of(ProcessType::Zero));
        assert!(r.passed, "{r:#?}");
    }

    #[test]
    fn laplace_kink_fails_second_derivative() {
        let pair = DensityPair::from_specs(DensitySpec::gaussian(0.0, 1.0), DensitySpec::Laplace { location: 0.0, scale: 1.0 }).unwrap();
        let r = check_regularity(&pair, &class_of(ProcessType::Zero));
        let c = r.checks.iter().find(|c| c.target == "h1" && c.name == "derivative-2").unwrap();
        assert!(!c.passed);
    }

    #[test]
    fn truncated_table_fails_type_s_decay() {
        let grid: Vec<f64> = (0..=100).map(|i| 0.01 * i as f64).collect();
        let pair = DensityPair::from_specs(DensitySpec::gaussian(0.5, 1.0), DensitySpec::Tabulated { grid, values: vec![1.0; 101] }).unwrap();
        let r = check_regularity(&pair, &class_of(ProcessType::S));
        assert!(!r.passed);
        assert!(r.checks.iter().any(|c| c.name == "decay" && !c.passed));
    }

    #[test]
    fn gaussian_pair_fails_type_d() {
        let r = check_regularity(&gaussians(), &class_of(ProcessType::D));
        assert!(!r.passed);
        assert!(r.compact_radius.is_none());
        let same = DensityPair::from_specs(DensitySpec::gaussian(0.0, 1.0), DensitySpec::gaussian(0.0, 1.0)).unwrap();
        assert!(check_regularity(&same, &class_of(ProcessType::D)).passed);
    }
}

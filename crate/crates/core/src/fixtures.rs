//! Reference maps used throughout the tests and the CLI examples.

use crate::map::{build_map, MapSpec, PiecewiseMap};

/// Feigenbaum parameter used for the Cantor fixture.
pub const FEIGENBAUM_A: f64 = 3.569945672;

/// Width of the outer full branches of [`neutral_core`].
pub const NEUTRAL_CORE_W: f64 = 0.05;

pub fn tent_spec() -> MapSpec {
    MapSpec::new([0.0, 1.0], &[((0.0, 0.5), "2*x"), ((0.5, 1.0), "2-2*x")])
}

pub fn doubling_spec() -> MapSpec {
    MapSpec::new([0.0, 1.0], &[((0.0, 0.5), "2*x"), ((0.5, 1.0), "2*x-1")])
}

/// `a x (1 - x)` split at the critical point.
pub fn logistic_spec(a: f64) -> MapSpec {
    let e = format!("{a:?}*x*(1-x)");
    MapSpec::new([0.0, 1.0], &[((0.0, 0.5), &e), ((0.5, 1.0), &e)])
}

/// Continuous map with `c = 0.5` fixed from both sides: `f(x) > x` on the
/// left branch, `f(x) < x` on the right one, so `{c}` attracts everything.
pub fn fixed_like_spec() -> MapSpec {
    MapSpec::new(
        [0.0, 1.0],
        &[((0.0, 0.5), "1.5*x - x^2"), ((0.5, 1.0), "x - 0.5*(x-0.5)")],
    )
}

/// Three full branches; the middle one is orientation reversing and fixes
/// 0.5 with derivative -1, so the return map to (0, 1) has a neutral core.
pub fn neutral_core_spec() -> MapSpec {
    let w = NEUTRAL_CORE_W;
    let s = 0.5 - w;
    let k = w / (s * s * s);
    let mid = format!("1 - x - {k:?}*(x-0.5)^3");
    let left = format!("x/{w:?}");
    let right = format!("(x-{:?})/{w:?}", 1.0 - w);
    MapSpec::new(
        [0.0, 1.0],
        &[((0.0, w), &left), ((w, 1.0 - w), &mid), ((1.0 - w, 1.0), &right)],
    )
}

fn built(spec: MapSpec) -> PiecewiseMap {
    build_map(&spec).expect("fixture map is valid")
}

pub fn tent() -> PiecewiseMap {
    built(tent_spec())
}

pub fn doubling() -> PiecewiseMap {
    built(doubling_spec())
}

pub fn logistic(a: f64) -> PiecewiseMap {
    built(logistic_spec(a))
}

pub fn fixed_like() -> PiecewiseMap {
    built(fixed_like_spec())
}

pub fn neutral_core() -> PiecewiseMap {
    built(neutral_core_spec())
}

/// Named fixtures, as shipped under `fixtures/` in the repository.
pub fn named() -> Vec<(&'static str, MapSpec)> {
    vec![
        ("tent", tent_spec()),
        ("doubling", doubling_spec()),
        ("logistic4", logistic_spec(4.0)),
        ("logistic3.2", logistic_spec(3.2)),
        ("logistic2", logistic_spec(2.0)),
        ("feigenbaum", logistic_spec(FEIGENBAUM_A)),
        ("fixed_like", fixed_like_spec()),
        ("neutral_core", neutral_core_spec()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_build() {
        for (name, spec) in named() {
            assert!(build_map(&spec).is_ok(), "{name}");
        }
    }

    #[test]
    fn neutral_core_middle_branch_is_full() {
        let m = neutral_core();
        let b = &m.branches()[1];
        assert!((b.eval(NEUTRAL_CORE_W).unwrap() - 1.0).abs() < 1e-15);
        assert!(b.eval(1.0 - NEUTRAL_CORE_W).unwrap().abs() < 1e-15);
        assert_eq!(m.eval(0.5).unwrap(), 0.5);
        assert_eq!(m.deriv(0.5).unwrap(), -1.0);
    }

    #[test]
    fn fixed_like_lateral_values_return_to_c() {
        let m = fixed_like();
        for v in m.lateral_values() {
            assert_eq!(v.value, 0.5);
        }
    }
}

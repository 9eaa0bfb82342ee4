//! Seeded random charts and form fields for identity batteries.
//!
//! The metrics are small polynomial perturbations of the flat Lorentzian
//! matrix on the unit box, sized so the signature cannot drift; the forms are
//! sparse alternating 3-forms with affine coefficients so their exterior
//! derivatives and covariant derivatives are all nonzero in general.

use crate::chart::{MetricSpec, SparseFormEntry};
use crate::expr::Expr;
use crate::sample::SplitMix64;
use crate::tensor::MultiForm;

/// Uniform coefficient scale of the form entries.
const FORM_AMP: f64 = 1.0;

/// A Lorentzian polynomial chart on the unit box: eta plus quadratic
/// perturbations with amplitude 0.02 / dim, which keeps every row sum far
/// from flipping an eigenvalue.
pub fn random_metric(dim: usize, rng: &mut SplitMix64) -> MetricSpec {
    assert!(dim >= 2, "a Lorentzian chart needs at least two dimensions");
    let amp = 0.02 / dim as f64;
    let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let mut metric = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            let eta = if i != j {
                0.0
            } else if i == 0 {
                -1.0
            } else {
                1.0
            };
            let mut e = Expr::constant(eta);
            let terms = 1 + rng.below(3);
            for _ in 0..terms {
                let c = rng.uniform(-amp, amp);
                let a = rng.below(dim);
                let b = rng.below(dim);
                e = e + Expr::constant(c) * Expr::coord(a) * Expr::coord(b);
            }
            metric.push((i, j, e));
        }
    }
    MetricSpec::new(
        format!("random_{dim}d"),
        coords,
        vec![],
        vec![],
        metric,
        None,
        None,
        vec![(-1.0, 1.0); dim],
        None,
    )
    .expect("perturbed flat chart parts are well formed")
}

/// A sparse alternating 3-form with affine coefficients; every increasing
/// triple is included with probability one half, and at least one triple is
/// always present.
pub fn random_form3(dim: usize, rng: &mut SplitMix64) -> Vec<SparseFormEntry> {
    assert!(dim >= 3, "a 3-form needs at least three dimensions");
    let mut entries = Vec::new();
    for tuple in MultiForm::increasing_tuples(dim, 3) {
        if rng.next_u64() % 2 == 0 {
            continue;
        }
        entries.push(affine_entry(&tuple, dim, rng));
    }
    if entries.is_empty() {
        let tuple: Vec<usize> = (0..3).collect();
        entries.push(affine_entry(&tuple, dim, rng));
    }
    entries
}

fn affine_entry(tuple: &[usize], dim: usize, rng: &mut SplitMix64) -> SparseFormEntry {
    let mut e = Expr::constant(rng.uniform(-FORM_AMP, FORM_AMP));
    // two affine terms keep the gradient generic without deep expression trees
    for _ in 0..2 {
        let c = rng.uniform(-FORM_AMP, FORM_AMP);
        let a = rng.below(dim);
        e = e + Expr::constant(c) * Expr::coord(a);
    }
    SparseFormEntry { idx: [tuple[0], tuple[1], tuple[2]], expr: e }
}

/// The random chart with a random 3-form attached as its skew field.
pub fn random_chart_with_form(dim: usize, rng: &mut SplitMix64) -> MetricSpec {
    let bare = random_metric(dim, rng);
    let form = random_form3(dim, rng);
    MetricSpec::new(
        bare.name.clone(),
        bare.coords.clone(),
        vec![],
        vec![],
        bare.metric_entries().into_iter().map(|(i, j, e)| (i, j, e.clone())).collect(),
        None,
        Some(form),
        bare.domain.clone(),
        None,
    )
    .expect("random chart parts are well formed")
}

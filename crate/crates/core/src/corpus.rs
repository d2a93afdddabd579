//! Reference subspaces and a seeded family of random two-generator
//! subspaces, with the forward-direction evaluation run over each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blh;
use crate::error::Result;
use crate::grade::{Grade, MultiIndex};
use crate::hardy::HardyVector;
use crate::linalg::{self, c};
use crate::operators;
use crate::par::{self, Execution};
use crate::parse::parse_polynomial;
use crate::subspace;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusEntry {
    pub label: String,
    pub grade: Grade,
    pub generators: Vec<String>,
    pub working_margin: usize,
}

impl CorpusEntry {
    pub fn new(label: &str, grade: Grade, generators: &[&str], working_margin: usize) -> Self {
        CorpusEntry {
            label: label.into(),
            grade,
            generators: generators.iter().map(|s| s.to_string()).collect(),
            working_margin,
        }
    }

    pub fn parsed_generators(&self) -> Result<Vec<HardyVector>> {
        self.generators.iter().map(|t| parse_polynomial(t, self.grade)).collect()
    }
}

fn grade(n: usize, d: usize, cap: usize) -> Grade {
    Grade::new(n, d, cap, 1).expect("static grade")
}

/// The named reference subspaces. Outer caps leave room for `deg Θ` plus the
/// safe margin so every wandering basis is certified.
pub fn standard() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry::new("ambient", grade(1, 4, 4), &["1"], 2),
        CorpusEntry::new("z-ambient", grade(1, 4, 4), &["z"], 2),
        CorpusEntry::new("z1-ambient", grade(1, 4, 4), &["z1"], 2),
        CorpusEntry::new("z-minus-z1", grade(1, 4, 4), &["z - z1"], 2),
        CorpusEntry::new("z2-minus-z-z1", grade(1, 5, 4), &["z^2 - z*z1"], 2),
        CorpusEntry::new("two-differences", grade(2, 4, 2), &["z - z1", "z - z2"], 2),
    ]
}

/// Generators `c·z + (three terms of outer degree ≤ 1, each containing an
/// inner variable)`. Such generators give polynomial Θ of low degree.
pub fn random_two_generator(count: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|t| {
            let n = 1 + t % 2;
            let g = grade(n, 4, if n == 1 { 3 } else { 2 });
            let gens: Vec<String> = (0..2)
                .map(|_| {
                    let mut v = HardyVector::zero(g);
                    let coef = |rng: &mut ChaCha8Rng| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let lead = coef(&mut rng);
                    v.add_term(MultiIndex::new(1, vec![0; n], 0), lead).expect("in caps");
                    for _ in 0..3 {
                        let a = rng.random_range(0..2);
                        let mut b: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
                        if b.iter().all(|&x| x == 0) {
                            b[0] = 1;
                        }
                        let val = coef(&mut rng);
                        v.add_term(MultiIndex::new(a, b, 0), val).expect("in caps");
                    }
                    v.to_string()
                })
                .collect();
            CorpusEntry { label: format!("random-{t:02}"), grade: g, generators: gens, working_margin: 2 }
        })
        .collect()
}

/// Residuals of the forward direction for one subspace.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub label: String,
    pub working_grade: Grade,
    pub dim_s: usize,
    pub dim_w: usize,
    pub certified: bool,
    pub trusted_degree: usize,
    pub intertwining: f64,
    pub theta_isometry: f64,
    pub phi_commutation: f64,
    pub phi_agreement: f64,
    pub compressed_symbol: f64,
    pub rebuild_angle: f64,
    pub rebuild_invariance: f64,
    pub wold: f64,
}

pub fn evaluate(entry: &CorpusEntry, exec: Execution) -> Result<Evaluation> {
    let gens = entry.parsed_generators()?;
    let s = subspace::orbit_span(&gens, entry.grade, entry.working_margin, exec)?;
    let g = *s.grade();
    let trusted = g.trusted_degree().unwrap_or(0);
    let w = subspace::wandering_subspace(&s)?;
    let theta = blh::extract_theta(&s, &w, false)?;
    let phis = blh::extract_phi_all(&s, &w, exec)?;

    let mut intertwining: f64 = 0.0;
    let mut phi_agreement: f64 = 0.0;
    let mut compressed_symbol: f64 = 0.0;
    for (i, phi) in phis.iter().enumerate() {
        let k = blh::kappa(g, i + 1)?;
        intertwining = intertwining.max(blh::verify_intertwining(&k, &theta, phi, trusted)?.max_residual());
        let alt = blh::extract_phi_via_theta(&theta, &s, &w, i + 1)?;
        for (a, b) in phi.coeffs().iter().zip(alt.coeffs()) {
            phi_agreement = phi_agreement.max(linalg::op_norm(&(a - b)));
        }
        compressed_symbol =
            compressed_symbol.max(blh::compressed_symbol_residual(&theta, phi, g, i + 1)?.max_residual());
    }
    let mut phi_commutation: f64 = 0.0;
    for i in 0..phis.len() {
        for j in i + 1..phis.len() {
            phi_commutation = phi_commutation.max(blh::multiplier_commutation(&phis[i], &phis[j], trusted)?.max_residual());
        }
    }
    let rebuilt = subspace::build_from_theta(&theta, g)?;
    let rebuild_angle = if rebuilt.dim() == s.dim() {
        subspace::principal_angles(&s, &rebuilt)?.last().copied().unwrap_or(0.0)
    } else {
        f64::INFINITY
    };
    let inv = subspace::check_invariant(&rebuilt, &operators::model_tuple(g))?;
    let wold = subspace::wold_reconstruction(&s, &w)?.max_residual();
    Ok(Evaluation {
        label: entry.label.clone(),
        working_grade: g,
        dim_s: s.dim(),
        dim_w: w.dim(),
        certified: w.certified(),
        trusted_degree: trusted,
        intertwining,
        theta_isometry: blh::is_isometric_multiplier(&theta, None).max_residual(),
        phi_commutation,
        phi_agreement,
        compressed_symbol,
        rebuild_angle,
        rebuild_invariance: inv.safe_residuals.iter().copied().fold(0.0, f64::max),
        wold,
    })
}

/// Evaluates entries independently; results keep the input order.
pub fn evaluate_all(entries: &[CorpusEntry], exec: Execution) -> Vec<Result<Evaluation>> {
    par::map(exec, entries, |e| evaluate(e, exec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_family_is_deterministic() {
        assert_eq!(random_two_generator(4, 9), random_two_generator(4, 9));
        assert_ne!(random_two_generator(4, 9), random_two_generator(4, 10));
    }

    #[test]
    fn random_generators_parse_back() {
        for e in random_two_generator(4, 1) {
            let gens = e.parsed_generators().unwrap();
            assert_eq!(gens.len(), 2);
            assert!(gens.iter().all(|g| g.terms().count() >= 2));
        }
    }

    #[test]
    fn modes_give_identical_results() {
        let entries = &standard()[..3];
        let a = evaluate_all(entries, Execution::Sequential);
        let b = evaluate_all(entries, Execution::Parallel);
        for (x, y) in a.iter().zip(&b) {
            let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
            assert_eq!(x.intertwining.to_bits(), y.intertwining.to_bits());
            assert_eq!(x.dim_w, y.dim_w);
        }
    }
}

//! Per-robot fuzzy inference and the flat genome used to evolve a fleet.
//!
//! Each robot maps its four features (ρ, φ, v_Bx, v_By) to a voltage. Every
//! input has three triangular membership functions defined by five tunable
//! points `a..e`:
//!
//! ```text
//! mf1 = (x_min, x_min, a)    mf2 = (b, c, d)    mf3 = (e, x_max, x_max)
//! ```
//!
//! The 3⁴ = 81 rules are indexed `27·i_ρ + 9·i_φ + 3·i_vx + i_vy`; each rule
//! names one of five output triangles. Rules fire with the minimum of their
//! antecedent degrees and the output is the firing-weighted mean of the
//! consequent centroids.

use serde::{Deserialize, Serialize};

use crate::sim::{Controller, Features, WorldConfig};

pub const N_INPUTS: usize = 4;
pub const MFS_PER_INPUT: usize = 3;
pub const N_OUTPUT_MFS: usize = 5;
pub const N_RULES: usize = 81;

pub const INPUT_GENES: usize = N_INPUTS * 5;
pub const OUTPUT_GENES: usize = N_OUTPUT_MFS * 3;
pub const REAL_GENES: usize = INPUT_GENES + OUTPUT_GENES;
pub const ROBOT_GENES: usize = REAL_GENES + N_RULES;

/// Fraction of the domain width kept as overlap when repair closes a gap.
const COVERAGE_MARGIN: f64 = 1e-3;

/// Absolute speed bound (m/s) of the velocity input domains.
pub const SPEED_DOMAIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FuzzyError {
    #[error("no rule fired (sum of firing strengths is zero)")]
    ZeroCoverage,
    #[error("genome length mismatch: expected {expected} genes, got {actual}")]
    GenomeLength { expected: usize, actual: usize },
    #[error("invalid fuzzy system: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub min: f64,
    pub max: f64,
}

impl Domain {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn clamp(&self, x: f64) -> f64 {
        if x.is_nan() {
            return 0.5 * (self.min + self.max);
        }
        x.clamp(self.min, self.max)
    }
}

/// Input domains for (ρ, φ, v_Bx, v_By) and the output voltage domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisDomains {
    pub inputs: [Domain; N_INPUTS],
    pub output: Domain,
}

impl FisDomains {
    pub fn for_world(cfg: &WorldConfig) -> Self {
        let r = 2.0 * cfg.anchor_radius;
        Self {
            inputs: [
                Domain::new(-r, r),
                Domain::new(-std::f64::consts::PI, std::f64::consts::PI),
                Domain::new(-SPEED_DOMAIN, SPEED_DOMAIN),
                Domain::new(-SPEED_DOMAIN, SPEED_DOMAIN),
            ],
            output: Domain::new(-cfg.v_max, cfg.v_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularMF {
    pub left: f64,
    pub peak: f64,
    pub right: f64,
}

impl TriangularMF {
    pub const fn new(left: f64, peak: f64, right: f64) -> Self {
        Self { left, peak, right }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.left == self.right {
            // singleton
            return if x == self.peak { 1.0 } else { 0.0 };
        }
        if x < self.left || x > self.right {
            0.0
        } else if x == self.peak {
            1.0
        } else if x < self.peak {
            (x - self.left) / (self.peak - self.left)
        } else {
            (self.right - x) / (self.right - self.peak)
        }
    }

    pub fn centroid(&self) -> f64 {
        (self.left + self.peak + self.right) / 3.0
    }

    fn is_ordered(&self) -> bool {
        self.left <= self.peak && self.peak <= self.right
    }
}

/// Three triangles over one input domain, defined by the points `a..e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputPartition {
    pub domain: Domain,
    /// `[a, b, c, d, e]`
    pub points: [f64; 5],
}

impl InputPartition {
    pub fn new(domain: Domain, points: [f64; 5]) -> Self {
        Self { domain, points }
    }

    /// Evenly spread partition: mf2 peaks at the domain midpoint and each
    /// shoulder reaches the midpoint.
    pub fn uniform(domain: Domain) -> Self {
        let mid = 0.5 * (domain.min + domain.max);
        Self::new(domain, [mid, domain.min, mid, domain.max, mid])
    }

    pub fn mfs(&self) -> [TriangularMF; 3] {
        let [a, b, c, d, e] = self.points;
        [
            TriangularMF::new(self.domain.min, self.domain.min, a),
            TriangularMF::new(b, c, d),
            TriangularMF::new(e, self.domain.max, self.domain.max),
        ]
    }

    /// Membership degrees of `x`, clamped into the domain first.
    pub fn memberships(&self, x: f64) -> [f64; 3] {
        let x = self.domain.clamp(x);
        let [a, b, c, d, e] = self.points;
        let (lo, hi) = (self.domain.min, self.domain.max);
        [
            TriangularMF::new(lo, lo, a).eval(x),
            TriangularMF::new(b, c, d).eval(x),
            TriangularMF::new(e, hi, hi).eval(x),
        ]
    }

    /// Every point of the domain has positive membership in some triangle.
    /// The uncovered candidates are exactly `[a, e]`, which mf2 must contain.
    pub fn covers_domain(&self) -> bool {
        let [a, b, c, d, e] = self.points;
        if a > e {
            true
        } else if a == e {
            (b < a && a < d) || a == c
        } else {
            b < a && e < d
        }
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        let [a, b, c, d, e] = self.points;
        let (lo, hi) = (self.domain.min, self.domain.max);
        let ok = self.points.iter().all(|p| p.is_finite())
            && lo <= b
            && b <= c
            && c <= d
            && d <= hi
            && lo < a
            && a <= hi
            && lo <= e
            && e < hi;
        if !ok {
            return Err(FuzzyError::Invalid(format!(
                "input partition points {:?} out of order for domain [{lo}, {hi}]",
                self.points
            )));
        }
        if !self.covers_domain() {
            return Err(FuzzyError::Invalid(format!(
                "input partition {:?} leaves part of [{lo}, {hi}] uncovered",
                self.points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputPartition {
    pub domain: Domain,
    pub mfs: [TriangularMF; N_OUTPUT_MFS],
}

impl OutputPartition {
    /// Five evenly spaced triangles across the voltage domain.
    pub fn uniform(domain: Domain) -> Self {
        let step = domain.width() / (N_OUTPUT_MFS - 1) as f64;
        let mfs = std::array::from_fn(|k| {
            let peak = domain.min + step * k as f64;
            TriangularMF::new(
                (peak - step).max(domain.min),
                peak,
                (peak + step).min(domain.max),
            )
        });
        Self { domain, mfs }
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        for mf in &self.mfs {
            let inside = [mf.left, mf.peak, mf.right]
                .iter()
                .all(|v| v.is_finite() && *v >= self.domain.min && *v <= self.domain.max);
            if !inside || !mf.is_ordered() {
                return Err(FuzzyError::Invalid(format!("output triangle {mf:?} invalid")));
            }
        }
        Ok(())
    }
}

/// Consequent output-triangle index for each of the 81 rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleBase(pub [u8; N_RULES]);

impl RuleBase {
    pub fn index(i_rho: usize, i_phi: usize, i_vx: usize, i_vy: usize) -> usize {
        27 * i_rho + 9 * i_phi + 3 * i_vx + i_vy
    }

    pub fn constant(consequent: u8) -> Self {
        Self([consequent; N_RULES])
    }
}

impl Serialize for RuleBase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RuleBase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u8>::deserialize(d)?;
        let rules: [u8; N_RULES] = v.try_into().map_err(|v: Vec<u8>| {
            serde::de::Error::invalid_length(v.len(), &"81 rule consequents")
        })?;
        Ok(Self(rules))
    }
}

/// One robot's fuzzy controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotFis {
    pub inputs: [InputPartition; N_INPUTS],
    pub output: OutputPartition,
    pub rules: RuleBase,
}

impl RobotFis {
    /// Uniform partitions and every rule pointing at the same output set.
    pub fn uniform(domains: &FisDomains, consequent: u8) -> Self {
        Self {
            inputs: domains.inputs.map(InputPartition::uniform),
            output: OutputPartition::uniform(domains.output),
            rules: RuleBase::constant(consequent),
        }
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        for input in &self.inputs {
            input.validate()?;
        }
        self.output.validate()?;
        if let Some(bad) = self.rules.0.iter().find(|&&r| r as usize >= N_OUTPUT_MFS) {
            return Err(FuzzyError::Invalid(format!("rule consequent {bad} out of range 0..5")));
        }
        Ok(())
    }
}

/// Degrees of every input in each of its three sets.
pub fn fuzzify(features: &Features, fis: &RobotFis) -> [[f64; MFS_PER_INPUT]; N_INPUTS] {
    let x = features.to_array();
    std::array::from_fn(|j| fis.inputs[j].memberships(x[j]))
}

/// Crisp voltage for one robot. Only rules whose antecedents all have
/// nonzero degree are visited.
pub fn infer(fis: &RobotFis, features: &Features) -> Result<f64, FuzzyError> {
    let degrees = fuzzify(features, fis);
    let centroids = fis.output.mfs.map(|mf| mf.centroid());

    let mut active = [[(0usize, 0.0f64); MFS_PER_INPUT]; N_INPUTS];
    let mut counts = [0usize; N_INPUTS];
    for j in 0..N_INPUTS {
        for (k, &mu) in degrees[j].iter().enumerate() {
            if mu > 0.0 {
                active[j][counts[j]] = (k, mu);
                counts[j] += 1;
            }
        }
    }

    let (mut num, mut den) = (0.0, 0.0);
    for &(i0, m0) in &active[0][..counts[0]] {
        for &(i1, m1) in &active[1][..counts[1]] {
            let w01 = m0.min(m1);
            for &(i2, m2) in &active[2][..counts[2]] {
                let w012 = w01.min(m2);
                for &(i3, m3) in &active[3][..counts[3]] {
                    let w = w012.min(m3);
                    let consequent = fis.rules.0[RuleBase::index(i0, i1, i2, i3)] as usize;
                    num += w * centroids[consequent];
                    den += w;
                }
            }
        }
    }
    if den <= 0.0 {
        return Err(FuzzyError::ZeroCoverage);
    }
    Ok(fis.output.domain.clamp(num / den))
}

impl Controller for RobotFis {
    /// Zero coverage surfaces as NaN, which the simulator reports as a
    /// controller fault.
    fn voltage(&self, features: &Features) -> f64 {
        infer(self, features).unwrap_or(f64::NAN)
    }
}

/// Flat fleet genome: per robot, 20 input points, 15 output vertices and 81
/// rule consequents. Consequents are stored as whole-valued reals so the
/// genome is a single `Vec<f64>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetGenome {
    pub genes: Vec<f64>,
}

impl FleetGenome {
    pub fn n_robots(&self) -> usize {
        self.genes.len() / ROBOT_GENES
    }

    pub fn robot(&self, i: usize) -> &[f64] {
        &self.genes[i * ROBOT_GENES..(i + 1) * ROBOT_GENES]
    }
}

pub fn encode(fleet: &[RobotFis]) -> FleetGenome {
    let mut genes = Vec::with_capacity(fleet.len() * ROBOT_GENES);
    for fis in fleet {
        for input in &fis.inputs {
            genes.extend_from_slice(&input.points);
        }
        for mf in &fis.output.mfs {
            genes.extend_from_slice(&[mf.left, mf.peak, mf.right]);
        }
        genes.extend(fis.rules.0.iter().map(|&r| r as f64));
    }
    FleetGenome { genes }
}

/// Inverse of [`encode`]. The genome must be valid (see [`repair`]).
pub fn decode(
    genome: &FleetGenome,
    n_robots: usize,
    domains: &FisDomains,
) -> Result<Vec<RobotFis>, FuzzyError> {
    let expected = n_robots * ROBOT_GENES;
    if genome.genes.len() != expected {
        return Err(FuzzyError::GenomeLength { expected, actual: genome.genes.len() });
    }
    genome
        .genes
        .chunks_exact(ROBOT_GENES)
        .map(|g| {
            let inputs = std::array::from_fn(|j| {
                let p = &g[5 * j..5 * j + 5];
                InputPartition::new(domains.inputs[j], [p[0], p[1], p[2], p[3], p[4]])
            });
            let mfs = std::array::from_fn(|k| {
                let v = &g[INPUT_GENES + 3 * k..INPUT_GENES + 3 * k + 3];
                TriangularMF::new(v[0], v[1], v[2])
            });
            let mut rules = [0u8; N_RULES];
            for (r, &gene) in rules.iter_mut().zip(&g[REAL_GENES..]) {
                if gene.fract() != 0.0 || !(0.0..N_OUTPUT_MFS as f64).contains(&gene) {
                    return Err(FuzzyError::Invalid(format!("rule gene {gene} is not in 0..5")));
                }
                *r = gene as u8;
            }
            let fis = RobotFis {
                inputs,
                output: OutputPartition { domain: domains.output, mfs },
                rules: RuleBase(rules),
            };
            fis.validate()?;
            Ok(fis)
        })
        .collect()
}

fn sort3(v: &mut [f64]) {
    v.sort_by(f64::total_cmp);
}

/// Repair one robot's segment in place. Idempotent.
pub fn repair_robot(genes: &mut [f64], domains: &FisDomains) {
    debug_assert_eq!(genes.len(), ROBOT_GENES);
    for (j, domain) in domains.inputs.iter().enumerate() {
        let p = &mut genes[5 * j..5 * j + 5];
        for v in p.iter_mut() {
            *v = domain.clamp(*v);
        }
        sort3(&mut p[1..4]);
        let delta = COVERAGE_MARGIN * domain.width();
        let (b, d) = (p[1], p[3]);
        p[0] = p[0].max(b + delta).min(domain.max);
        p[4] = p[4].min(d - delta).max(domain.min);
    }
    for v in genes[INPUT_GENES..REAL_GENES].chunks_exact_mut(3) {
        for x in v.iter_mut() {
            *x = domains.output.clamp(*x);
        }
        sort3(v);
    }
    for r in &mut genes[REAL_GENES..] {
        *r = if r.is_nan() { 0.0 } else { r.round().clamp(0.0, (N_OUTPUT_MFS - 1) as f64) };
    }
}

/// Clamp, reorder and widen so that every robot's controller decodes to a
/// valid system with full input coverage.
pub fn repair(genome: &FleetGenome, domains: &FisDomains) -> FleetGenome {
    let mut out = genome.clone();
    repair_in_place(&mut out.genes, domains);
    out
}

pub fn repair_in_place(genes: &mut [f64], domains: &FisDomains) {
    for robot in genes.chunks_exact_mut(ROBOT_GENES) {
        repair_robot(robot, domains);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn domains() -> FisDomains {
        FisDomains::for_world(&WorldConfig::default_preset(3))
    }

    /// Straight loop over all 81 rules, no pruning.
    fn naive_infer(fis: &RobotFis, features: &Features) -> Option<f64> {
        let x = features.to_array();
        let mut mu = [[0.0; 3]; 4];
        for j in 0..4 {
            let xj = x[j].clamp(fis.inputs[j].domain.min, fis.inputs[j].domain.max);
            for (k, mf) in fis.inputs[j].mfs().iter().enumerate() {
                mu[j][k] = mf.eval(xj);
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for r in 0..81 {
            let idx = [r / 27, (r / 9) % 3, (r / 3) % 3, r % 3];
            let w = (0..4).map(|j| mu[j][idx[j]]).fold(f64::INFINITY, f64::min);
            let mf = fis.output.mfs[fis.rules.0[r] as usize];
            num += w * (mf.left + mf.peak + mf.right) / 3.0;
            den += w;
        }
        (den > 0.0).then(|| (num / den).clamp(fis.output.domain.min, fis.output.domain.max))
    }

    fn random_fis(rng: &mut ChaCha8Rng, domains: &FisDomains) -> RobotFis {
        let mut genes: Vec<f64> = (0..ROBOT_GENES)
            .map(|g| {
                if g < INPUT_GENES {
                    let d = domains.inputs[g / 5];
                    rng.gen_range(d.min..=d.max)
                } else if g < REAL_GENES {
                    rng.gen_range(domains.output.min..=domains.output.max)
                } else {
                    rng.gen_range(0..5) as f64
                }
            })
            .collect();
        repair_robot(&mut genes, domains);
        decode(&FleetGenome { genes }, 1, domains).unwrap().remove(0)
    }

    fn random_features(rng: &mut ChaCha8Rng) -> Features {
        Features::new(
            rng.gen_range(-3.5..3.5),
            rng.gen_range(-3.2..3.2),
            rng.gen_range(-0.7..0.7),
            rng.gen_range(-0.7..0.7),
        )
    }

    #[test]
    fn triangle_eval() {
        let mf = TriangularMF::new(0.0, 1.0, 2.0);
        assert_eq!(mf.eval(1.0), 1.0);
        assert_eq!(mf.eval(0.5), 0.5);
        assert_eq!(mf.eval(3.0), 0.0);
        assert_eq!(mf.eval(-0.1), 0.0);
        assert_eq!(mf.eval(1.5), 0.5);
    }

    #[test]
    fn shoulders_and_singletons() {
        let left = TriangularMF::new(-1.0, -1.0, 0.0);
        assert_eq!(left.eval(-1.0), 1.0);
        let right = TriangularMF::new(0.0, 1.0, 1.0);
        assert_eq!(right.eval(1.0), 1.0);
        let single = TriangularMF::new(0.3, 0.3, 0.3);
        assert_eq!(single.eval(0.3), 1.0);
        assert_eq!(single.eval(0.30001), 0.0);
    }

    #[test]
    fn fuzzify_edges_and_peaks() {
        let d = domains();
        let fis = RobotFis::uniform(&d, 2);
        let at_min = fuzzify(&Features::new(-3.0, -10.0, -0.5, -1.0), &fis);
        for row in at_min {
            assert_eq!(row[0], 1.0);
        }
        // midpoint is mf2's peak in the uniform partition
        let mid = fuzzify(&Features::new(0.0, 0.0, 0.0, 0.0), &fis);
        for row in mid {
            assert_eq!(row, [0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn constant_zero_consequent_gives_zero() {
        let d = domains();
        // output mf 2 of the uniform partition is (-6, 0, 6)
        let fis = RobotFis::uniform(&d, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v = infer(&fis, &random_features(&mut rng)).unwrap();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn single_rule_dominates() {
        let d = domains();
        let mut fis = RobotFis::uniform(&d, 0);
        fis.output.mfs[3] = TriangularMF::new(3.0, 4.0, 5.0);
        // all features at midpoint: only the (1,1,1,1) rule fires, weight 1
        fis.rules.0[RuleBase::index(1, 1, 1, 1)] = 3;
        let v = infer(&fis, &Features::default()).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_coverage_is_an_error() {
        let d = domains();
        let mut fis = RobotFis::uniform(&d, 0);
        // mf1 ends at -2, mf2 is a singleton at 0, mf3 starts at 2
        fis.inputs[0].points = [-2.0, 0.0, 0.0, 0.0, 2.0];
        assert!(!fis.inputs[0].covers_domain());
        assert_eq!(infer(&fis, &Features::new(1.0, 0.0, 0.0, 0.0)), Err(FuzzyError::ZeroCoverage));
        assert!(fis.voltage(&Features::new(1.0, 0.0, 0.0, 0.0)).is_nan());
    }

    #[test]
    fn optimized_matches_naive_reference() {
        let d = domains();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let fis = random_fis(&mut rng, &d);
            let f = random_features(&mut rng);
            let fast = infer(&fis, &f).unwrap();
            let slow = naive_infer(&fis, &f).unwrap();
            assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}");
        }
    }

    #[test]
    fn genome_counts() {
        assert_eq!(ROBOT_GENES, 116);
        let fleet = vec![RobotFis::uniform(&domains(), 1); 5];
        assert_eq!(encode(&fleet).genes.len(), 580);
    }

    #[test]
    fn decode_rejects_wrong_length() {
        let g = FleetGenome { genes: vec![0.0; 115] };
        assert_eq!(
            decode(&g, 1, &domains()),
            Err(FuzzyError::GenomeLength { expected: 116, actual: 115 })
        );
    }

    #[test]
    fn repair_sorts_triangle_vertices() {
        let d = domains();
        let mut genes = encode(&[RobotFis::uniform(&d, 0)]).genes;
        genes[INPUT_GENES..INPUT_GENES + 3].copy_from_slice(&[2.0, 0.0, 1.0]);
        repair_in_place(&mut genes, &d);
        assert_eq!(&genes[INPUT_GENES..INPUT_GENES + 3], &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn repair_leaves_valid_genome_unchanged() {
        let d = domains();
        let g = encode(&[RobotFis::uniform(&d, 3), RobotFis::uniform(&d, 1)]);
        assert_eq!(repair(&g, &d), g);
    }

    #[test]
    fn repair_closes_coverage_gap() {
        let d = domains();
        let mut genes = encode(&[RobotFis::uniform(&d, 0)]).genes;
        // a < b: nothing covers (-1, 0.5) before repair
        genes[0..5].copy_from_slice(&[-1.0, 0.5, 1.0, 2.0, 2.5]);
        let before = InputPartition::new(d.inputs[0], [-1.0, 0.5, 1.0, 2.0, 2.5]);
        assert!(!before.covers_domain());
        repair_in_place(&mut genes, &d);
        let p = InputPartition::new(d.inputs[0], genes[0..5].try_into().unwrap());
        let (lo, hi) = (d.inputs[0].min, d.inputs[0].max);
        for k in 0..=1000 {
            let x = lo + (hi - lo) * k as f64 / 1000.0;
            let m = p.memberships(x);
            assert!(m.iter().cloned().fold(0.0, f64::max) > 0.0, "x = {x}");
        }
    }

    fn gene_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-20.0f64..20.0, ROBOT_GENES * 2)
    }

    proptest! {
        #[test]
        fn repair_is_idempotent_and_yields_valid_fleet(genes in gene_strategy()) {
            let d = domains();
            let once = repair(&FleetGenome { genes }, &d);
            let twice = repair(&once, &d);
            prop_assert_eq!(&once, &twice);
            let fleet = decode(&once, 2, &d).unwrap();
            prop_assert_eq!(encode(&fleet), once);
            for fis in &fleet {
                for input in &fis.inputs {
                    prop_assert!(input.covers_domain());
                }
            }
        }

        #[test]
        fn inference_bounded_and_defined(seed in any::<u64>()) {
            let d = domains();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fis = random_fis(&mut rng, &d);
            for _ in 0..20 {
                let v = infer(&fis, &random_features(&mut rng)).unwrap();
                prop_assert!(v.abs() <= 12.0);
            }
        }
    }

    #[test]
    fn inference_is_lipschitz_on_random_probes() {
        let d = domains();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let eps = 1e-7;
        let mut max_slope: f64 = 0.0;
        for _ in 0..10_000 {
            let fis = random_fis(&mut rng, &d);
            let f = random_features(&mut rng);
            let j = rng.gen_range(0..4);
            let mut g = f.to_array();
            g[j] += eps;
            let dv = infer(&fis, &Features::from_array(g)).unwrap() - infer(&fis, &f).unwrap();
            max_slope = max_slope.max(dv.abs() / eps);
        }
        // steepest possible triangle edge is bounded by the repair margin;
        // the slope stays finite and far below a jump (24 V over 1e-7)
        assert!(max_slope < 1e5, "max slope {max_slope}");
    }
}

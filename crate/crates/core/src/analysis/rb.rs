//! Randomized benchmarking on the single-qubit Clifford group.
//!
//! Cliffords act on the Bloch sphere as the 24 rotational symmetries of
//! the octahedron, represented exactly as signed permutation matrices.
//! The group is generated from the primitive gate set {I, X, Y, +-X/2,
//! +-Y/2}; inverses and compositions are exact table lookups, so the
//! recovery gate always returns the ideal state to the singlet.

use std::collections::HashMap;

use rand::Rng;

use crate::analysis::visibility::SpinOutcomeModel;
use crate::error::{Error, Result};
use crate::levmar::{self, LmOptions};
use crate::qubit::sample_outcome;
use crate::readout::{single_shot, ReadoutConfig, ShotSynthesis};
use crate::rng::stream;

/// Primitive gates implemented as calibrated bursts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimitiveGate {
    Identity,
    X,
    Y,
    XHalf,
    XHalfNeg,
    YHalf,
    YHalfNeg,
}

impl PrimitiveGate {
    pub const ALL: [PrimitiveGate; 7] = [
        PrimitiveGate::Identity,
        PrimitiveGate::X,
        PrimitiveGate::Y,
        PrimitiveGate::XHalf,
        PrimitiveGate::XHalfNeg,
        PrimitiveGate::YHalf,
        PrimitiveGate::YHalfNeg,
    ];

    /// Exact Bloch-sphere rotation of the gate.
    pub fn rotation(self) -> Rot3 {
        match self {
            PrimitiveGate::Identity => Rot3::IDENTITY,
            // Pi about x: (x, y, z) -> (x, -y, -z).
            PrimitiveGate::X => Rot3::new([[1, 0, 0], [0, -1, 0], [0, 0, -1]]),
            // Pi about y.
            PrimitiveGate::Y => Rot3::new([[-1, 0, 0], [0, 1, 0], [0, 0, -1]]),
            // +pi/2 about x: y -> z, z -> -y.
            PrimitiveGate::XHalf => Rot3::new([[1, 0, 0], [0, 0, -1], [0, 1, 0]]),
            PrimitiveGate::XHalfNeg => Rot3::new([[1, 0, 0], [0, 0, 1], [0, -1, 0]]),
            // +pi/2 about y: z -> x, x -> -z.
            PrimitiveGate::YHalf => Rot3::new([[0, 0, 1], [0, 1, 0], [-1, 0, 0]]),
            PrimitiveGate::YHalfNeg => Rot3::new([[0, 0, -1], [0, 1, 0], [1, 0, 0]]),
        }
    }
}

/// Exact rotation matrix with entries in {-1, 0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rot3([[i8; 3]; 3]);

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);

    fn new(m: [[i8; 3]; 3]) -> Self {
        Rot3(m)
    }

    pub fn compose(&self, rhs: &Rot3) -> Rot3 {
        let mut out = [[0i8; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Rot3(out)
    }

    /// Rotations invert by transposition.
    pub fn inverse(&self) -> Rot3 {
        let mut out = [[0i8; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[j][i];
            }
        }
        Rot3(out)
    }

    /// z-component of the rotated unit-z vector.
    pub fn z_of_rotated_z(&self) -> f64 {
        f64::from(self.0[2][2])
    }
}

/// The 24-element single-qubit Clifford group with primitive
/// decompositions.
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    elements: Vec<Rot3>,
    words: Vec<Vec<PrimitiveGate>>,
    index: HashMap<Rot3, usize>,
}

impl CliffordGroup {
    /// Breadth-first closure of the primitive generators; shortest
    /// primitive word kept per element.
    pub fn build() -> Self {
        let mut elements = vec![Rot3::IDENTITY];
        let mut words: Vec<Vec<PrimitiveGate>> = vec![vec![]];
        let mut index = HashMap::new();
        index.insert(Rot3::IDENTITY, 0);
        let mut frontier = vec![0usize];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &i in &frontier {
                for gate in PrimitiveGate::ALL {
                    let candidate = gate.rotation().compose(&elements[i]);
                    if let std::collections::hash_map::Entry::Vacant(slot) = index.entry(candidate)
                    {
                        let mut word = words[i].clone();
                        word.push(gate);
                        slot.insert(elements.len());
                        next.push(elements.len());
                        elements.push(candidate);
                        words.push(word);
                    }
                }
            }
            frontier = next;
        }
        assert_eq!(
            elements.len(),
            24,
            "single-qubit Clifford group has 24 elements"
        );
        Self {
            elements,
            words,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Rot3 {
        &self.elements[i]
    }

    pub fn word(&self, i: usize) -> &[PrimitiveGate] {
        &self.words[i]
    }

    pub fn index_of(&self, rot: &Rot3) -> Option<usize> {
        self.index.get(rot).copied()
    }

    pub fn compose_indices(&self, a: usize, b: usize) -> usize {
        self.index[&self.elements[a].compose(&self.elements[b])]
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.index[&self.elements[i].inverse()]
    }
}

/// Randomized-benchmarking run settings.
#[derive(Debug, Clone)]
pub struct RbConfig {
    /// Clifford sequence lengths m.
    pub m_list: Vec<u32>,
    /// Random sequences per length.
    pub sequences_per_length: u32,
    /// Single-shot measurements per sequence.
    pub reps_per_sequence: u32,
    /// Depolarizing parameter applied per Clifford (1 = noiseless).
    pub p_clifford: f64,
    /// Interleaved gate and its extra depolarizing parameter.
    pub interleaved: Option<(PrimitiveGate, f64)>,
    /// Burst duration per primitive, ns (timing accounting only).
    pub gate_time_ns: f64,
    /// Idle gap between bursts, ns.
    pub idle_ns: f64,
}

impl Default for RbConfig {
    fn default() -> Self {
        Self {
            m_list: vec![1, 2, 4, 8, 16, 32, 64, 128, 256],
            sequences_per_length: 30,
            reps_per_sequence: 1000,
            p_clifford: 0.936,
            interleaved: None,
            gate_time_ns: 82.6,
            idle_ns: 16.0,
        }
    }
}

/// One row of the measured decay table.
#[derive(Debug, Clone, Copy)]
pub struct RbRow {
    pub m: u32,
    /// Triplet-return probability.
    pub p1: f64,
    /// Binomial standard error of `p1`.
    pub std_err: f64,
    pub shots: u64,
    /// Mean sequence duration including idle gaps, us.
    pub mean_duration_us: f64,
}

#[derive(Debug, Clone)]
pub struct RbTable {
    pub rows: Vec<RbRow>,
}

/// Simulate randomized benchmarking.
///
/// Random Cliffords (optionally interleaved with a fixed gate) are
/// composed exactly; the recovery gate is the exact group inverse, so the
/// ideal final state is the singlet. Depolarizing noise contracts the
/// Bloch vector by `p_clifford` per Clifford (and by the interleaved
/// parameter per interleaved gate); outcomes go through the measurement
/// model.
pub fn rb_simulate(
    group: &CliffordGroup,
    cfg: &RbConfig,
    model: &SpinOutcomeModel<f64>,
    readout: &ReadoutConfig,
    seed: u64,
) -> Result<RbTable> {
    model.validate()?;
    let interleaved_index = cfg.interleaved.map(|(gate, _)| {
        group
            .index_of(&gate.rotation())
            .expect("primitive is a Clifford")
    });
    let mut rows = Vec::with_capacity(cfg.m_list.len());
    for (mi, &m) in cfg.m_list.iter().enumerate() {
        let mut hits = 0u64;
        let mut shots = 0u64;
        let mut duration_ns = 0.0;
        for s in 0..cfg.sequences_per_length {
            let mut rng = stream(seed, &[mi as u64, s as u64]);
            let mut net = 0usize; // identity
            let mut contraction = 1.0f64;
            let mut primitives = 0usize;
            for _ in 0..m {
                let c = rng.random_range(0..group.len());
                net = group.compose_indices(c, net);
                contraction *= cfg.p_clifford;
                primitives += group.word(c).len().max(1);
                if let Some((_, p_gate)) = cfg.interleaved {
                    let gi = interleaved_index.unwrap();
                    net = group.compose_indices(gi, net);
                    contraction *= p_gate;
                    primitives += group.word(gi).len().max(1);
                }
            }
            let recovery = group.inverse_index(net);
            net = group.compose_indices(recovery, net);
            contraction *= cfg.p_clifford;
            primitives += group.word(recovery).len().max(1);
            debug_assert_eq!(group.element(net), &Rot3::IDENTITY);

            // Ideal recovery returns +z; noise contracts toward the
            // maximally mixed state.
            let z = contraction * group.element(net).z_of_rotated_z();
            let p_t0 = (1.0 - z) / 2.0;
            for _ in 0..cfg.reps_per_sequence {
                let label = sample_outcome(p_t0, model, &mut rng)?;
                let bit = single_shot(label, model, readout, ShotSynthesis::Analytic, &mut rng);
                hits += u64::from(bit);
                shots += 1;
            }
            duration_ns += primitives as f64 * (cfg.gate_time_ns + cfg.idle_ns);
        }
        let p1 = hits as f64 / shots as f64;
        rows.push(RbRow {
            m,
            p1,
            std_err: (p1 * (1.0 - p1) / shots as f64).sqrt(),
            shots,
            mean_duration_us: duration_ns / cfg.sequences_per_length as f64 * 1e-3,
        });
    }
    Ok(RbTable { rows })
}

/// Exponential-decay fit of a benchmarking table.
#[derive(Debug, Clone, Copy)]
pub struct RBResult {
    pub a: f64,
    /// Depolarizing parameter per Clifford.
    pub p: f64,
    pub b: f64,
    /// Average Clifford fidelity, (1 + p) / 2.
    pub f_avg: f64,
}

/// Fit P1(m) = A p^m + B.
///
/// A coarse scan over p (with A and B solved linearly at each candidate)
/// seeds a damped least-squares polish. Data without a decaying trend is
/// rejected.
pub fn fit_rb(table: &RbTable) -> Result<RBResult> {
    if table.rows.len() < 4 {
        return Err(Error::InvalidConfig(
            "benchmarking fit needs at least 4 sequence lengths".into(),
        ));
    }
    let ms: Vec<f64> = table.rows.iter().map(|r| f64::from(r.m)).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r.p1).collect();

    // Linear solve for (A, B) given p.
    let solve_ab = |p: f64| -> (f64, f64, f64) {
        let n = ms.len() as f64;
        let x: Vec<f64> = ms.iter().map(|&m| p.powf(m)).collect();
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sy: f64 = ys.iter().sum();
        let sxy: f64 = x.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-300 {
            return (0.0, sy / n, f64::INFINITY);
        }
        let a = (n * sxy - sx * sy) / denom;
        let b = (sy - a * sx) / n;
        let sse: f64 = x
            .iter()
            .zip(&ys)
            .map(|(&xv, &yv)| (a * xv + b - yv).powi(2))
            .sum();
        (a, b, sse)
    };

    let mut best = (0.5f64, f64::INFINITY, 0.0, 0.0);
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        let (a, b, sse) = solve_ab(p);
        if sse < best.1 {
            best = (p, sse, a, b);
        }
    }
    let residuals = |prm: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for (&m, &y) in ms.iter().zip(&ys) {
            out.push(prm[0] * prm[1].abs().powf(m) + prm[2] - y);
        }
    };
    let res = levmar::fit(
        &residuals,
        ms.len(),
        &[best.2, best.0, best.3],
        LmOptions::default(),
    );
    let (a, p, b) = (res.params[0], res.params[1].abs(), res.params[2]);
    if !(0.0..1.0).contains(&p) || a.abs() < 1e-9 {
        return Err(Error::NonDecayingData);
    }
    Ok(RBResult {
        a,
        p,
        b,
        f_avg: (1.0 + p) / 2.0,
    })
}

/// Interleaved gate fidelity, (1 + p_gate / p_avg) / 2, where `p_gate` is
/// the decay of the interleaved run and `p_avg` the reference decay.
pub fn irb_fidelity(p_gate: f64, p_avg: f64) -> f64 {
    (1.0 + p_gate / p_avg) / 2.0
}

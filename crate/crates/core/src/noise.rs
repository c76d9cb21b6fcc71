//! Space-time white noise on the grid, drawn from a counter-based stream.
//!
//! The increment of the nodal Wiener process over one fine step is
//! `sqrt(dt_fine / dx) * xi` with i.i.d. standard normal `xi` per node. Each
//! block is a pure function of `(master_seed, replica_id, dt_fine, step)`:
//! the first three form the ChaCha key and the step selects the stream, so
//! any block can be regenerated independently of every other one. Coarser
//! levels are exact pairwise sums of finer ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::grid::{DiscreteOperator, GridFunction, Mesh};

const TAG_INCREMENT: u64 = 0x5749_454e_4552_0001;
const TAG_CONVOLUTION: u64 = 0x4f55_4e43_4f4e_0002;

/// What a block of noise represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Wiener increment `W(t + dt) - W(t)`.
    Increment,
    /// Stochastic convolution `int_t^{t+dt} exp((t + dt - s) A_h) dW(s)`.
    Convolution,
}

/// One step's worth of noise at a given dyadic level.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBlock {
    pub level: u32,
    pub step_index: u64,
    pub dt: f64,
    pub kind: NoiseKind,
    pub values: GridFunction,
}

impl IncrementBlock {
    pub fn zeros(mesh: Mesh, level: u32, step_index: u64, dt: f64, kind: NoiseKind) -> Self {
        IncrementBlock {
            level,
            step_index,
            dt,
            kind,
            values: GridFunction::zeros(mesh),
        }
    }
}

/// Seeded description of the noise for one Monte Carlo replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePlan {
    master_seed: u64,
    replica_id: u64,
    mesh: Mesh,
    dt_fine: f64,
    n_levels: u32,
}

impl NoisePlan {
    pub fn new(
        master_seed: u64,
        replica_id: u64,
        mesh: Mesh,
        dt_fine: f64,
        n_levels: u32,
    ) -> Result<Self> {
        if !(dt_fine > 0.0 && dt_fine.is_finite()) {
            return Err(invalid(format!(
                "fine time step must be positive, got {dt_fine}"
            )));
        }
        if n_levels == 0 || n_levels > 62 {
            return Err(invalid(format!(
                "n_levels must be in 1..=62, got {n_levels}"
            )));
        }
        Ok(NoisePlan {
            master_seed,
            replica_id,
            mesh,
            dt_fine,
            n_levels,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replica_id(&self) -> u64 {
        self.replica_id
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn dt_fine(&self) -> f64 {
        self.dt_fine
    }

    pub fn n_levels(&self) -> u32 {
        self.n_levels
    }

    /// Time step of blocks at `level`.
    pub fn dt_at(&self, level: u32) -> f64 {
        self.dt_fine * (1u64 << level) as f64
    }

    /// Level whose step equals `dt`, if any.
    pub fn level_of(&self, dt: f64) -> Option<u32> {
        (0..=self.n_levels).find(|&l| {
            let d = self.dt_at(l);
            (d - dt).abs() <= 1e-12 * d
        })
    }

    /// Same plan with another replica id.
    pub fn replica_stream(&self, new_replica: u64) -> NoisePlan {
        NoisePlan {
            replica_id: new_replica,
            ..*self
        }
    }

    fn rng(&self, tag: u64, step: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let words = [
            self.master_seed,
            self.replica_id,
            self.dt_fine.to_bits(),
            tag,
        ];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(step);
        rng
    }

    /// Fills `out` with the level-0 Wiener increment of step `n`.
    pub fn fill_fine_increment(&self, n: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.mesh.n_interior());
        let sigma = (self.dt_fine / self.mesh.dx()).sqrt();
        let mut rng = self.rng(TAG_INCREMENT, n);
        for v in out.iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *v = sigma * xi;
        }
    }

    pub fn fine_increment(&self, n: u64) -> IncrementBlock {
        let mut block = IncrementBlock::zeros(self.mesh, 0, n, self.dt_fine, NoiseKind::Increment);
        self.fill_fine_increment(n, block.values.values_mut());
        block
    }

    /// Wiener increment of step `n` at `level`, built by repeated pairwise
    /// coarsening of level-0 blocks.
    pub fn increment(&self, level: u32, n: u64) -> Result<IncrementBlock> {
        if level > self.n_levels {
            return Err(invalid(format!(
                "level {level} exceeds the plan's {} coarsenings",
                self.n_levels
            )));
        }
        if level == 0 {
            return Ok(self.fine_increment(n));
        }
        let a = self.increment(level - 1, 2 * n)?;
        let b = self.increment(level - 1, 2 * n + 1)?;
        coarsen(&a, &b)
    }

    /// Fills `out` with the level-0 stochastic convolution of step `n`,
    /// sampled exactly mode by mode: coefficient `k` has variance
    /// `(1 - exp(-2 dt lambda_k)) / (2 lambda_k dx)`.
    pub fn fill_fine_convolution(&self, op: &DiscreteOperator, n: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.mesh.n_interior());
        let dx = self.mesh.dx();
        let dt = self.dt_fine;
        let mut rng = self.rng(TAG_CONVOLUTION, n);
        for (v, &lambda) in out.iter_mut().zip(op.eigenvalues()) {
            let var = -(-2.0 * dt * lambda).exp_m1() / (2.0 * lambda * dx);
            let xi: f64 = StandardNormal.sample(&mut rng);
            *v = var.sqrt() * xi;
        }
        op.transform().apply(out);
    }

    pub fn fine_convolution(&self, op: &DiscreteOperator, n: u64) -> IncrementBlock {
        let mut block =
            IncrementBlock::zeros(self.mesh, 0, n, self.dt_fine, NoiseKind::Convolution);
        self.fill_fine_convolution(op, n, block.values.values_mut());
        block
    }

    /// Stochastic convolution of step `n` at `level`.
    pub fn convolution(&self, op: &DiscreteOperator, level: u32, n: u64) -> Result<IncrementBlock> {
        if level > self.n_levels {
            return Err(invalid(format!(
                "level {level} exceeds the plan's {} coarsenings",
                self.n_levels
            )));
        }
        if level == 0 {
            return Ok(self.fine_convolution(op, n));
        }
        let a = self.convolution(op, level - 1, 2 * n)?;
        let b = self.convolution(op, level - 1, 2 * n + 1)?;
        coarsen_convolution(op, &a, &b)
    }
}

fn check_pair(a: &IncrementBlock, b: &IncrementBlock, kind: NoiseKind) -> Result<()> {
    if a.kind != kind || b.kind != kind {
        return Err(invalid("coarsening blocks of the wrong kind"));
    }
    if a.level != b.level {
        return Err(invalid(format!(
            "cannot coarsen blocks from levels {} and {}",
            a.level, b.level
        )));
    }
    if !a.step_index.is_multiple_of(2) || b.step_index != a.step_index + 1 {
        return Err(invalid(format!(
            "coarsening needs steps 2n and 2n+1, got {} and {}",
            a.step_index, b.step_index
        )));
    }
    a.values.mesh().check_same(&b.values.mesh())
}

/// Wiener increment over the union of two consecutive steps.
pub fn coarsen(a: &IncrementBlock, b: &IncrementBlock) -> Result<IncrementBlock> {
    check_pair(a, b, NoiseKind::Increment)?;
    Ok(IncrementBlock {
        level: a.level + 1,
        step_index: a.step_index / 2,
        dt: a.dt + b.dt,
        kind: NoiseKind::Increment,
        values: a.values.add(&b.values)?,
    })
}

/// Stochastic convolution over two consecutive steps:
/// `exp(dt_b A_h) a + b`.
pub fn coarsen_convolution(
    op: &DiscreteOperator,
    a: &IncrementBlock,
    b: &IncrementBlock,
) -> Result<IncrementBlock> {
    check_pair(a, b, NoiseKind::Convolution)?;
    let carried = op.apply_semigroup(b.dt, &a.values)?;
    Ok(IncrementBlock {
        level: a.level + 1,
        step_index: a.step_index / 2,
        dt: a.dt + b.dt,
        kind: NoiseKind::Convolution,
        values: carried.add(&b.values)?,
    })
}

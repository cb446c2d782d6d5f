//! One-dimensional sweeps over every line of a field along one axis.
//!
//! All advection steps are expressed as a [`LineKernel`] applied to each 1D
//! line. With [`LayoutStrategy::Transpose`] the field is first reordered so
//! that lines are contiguous; with [`LayoutStrategy::Strided`] lines are
//! gathered from strided memory in blocks of `cache_block` neighbouring lines.
//! Both strategies hand the kernel identical input, so their results agree
//! bitwise. Each line is processed by exactly one worker.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DistributionField, LayoutStrategy};

/// Position of a line within the field.
#[derive(Debug)]
pub struct LineContext<'a> {
    pub axis: usize,
    /// Multi-index of the line; the entry for `axis` is zero.
    pub index: &'a [usize],
}

pub trait LineKernel: Sync {
    /// Per-worker scratch storage, reused across lines.
    type Scratch: Send;

    fn scratch(&self, len: usize) -> Self::Scratch;

    fn apply(
        &self,
        ctx: &LineContext<'_>,
        input: &[f64],
        output: &mut [f64],
        scratch: &mut Self::Scratch,
    ) -> Result<()>;
}

/// Adapts a closure returning a fresh line into a [`LineKernel`].
pub struct FnKernel<F>(pub F);

impl<F> LineKernel for FnKernel<F>
where
    F: Fn(&LineContext<'_>, &[f64]) -> Vec<f64> + Sync,
{
    type Scratch = ();

    fn scratch(&self, _len: usize) {}

    fn apply(&self, ctx: &LineContext<'_>, input: &[f64], output: &mut [f64], _: &mut ()) -> Result<()> {
        let line = (self.0)(ctx, input);
        if line.len() != output.len() {
            return Err(Error::LineLengthMismatch { expected: output.len(), got: line.len() });
        }
        output.copy_from_slice(&line);
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct SharedMut(*mut f64);

// Blocks write disjoint index sets; see `sweep_strided`.
unsafe impl Send for SharedMut {}
unsafe impl Sync for SharedMut {}

/// Replaces every line along `axis` by the kernel's output.
pub fn line_sweep<K: LineKernel>(field: &mut DistributionField, axis: usize, kernel: &K) -> Result<()> {
    if axis >= field.grid.ndim() {
        return Err(Error::DimensionMismatch(format!(
            "axis {axis} out of range for {}-dimensional field",
            field.grid.ndim()
        )));
    }
    match field.layout.strategy {
        LayoutStrategy::Transpose => {
            if field.layout.dim_order[0] != axis {
                let mut order = vec![axis];
                order.extend(field.layout.dim_order.iter().copied().filter(|&a| a != axis));
                field.transpose_to(&order)?;
            }
            sweep_contiguous(field, axis, kernel)
        }
        LayoutStrategy::Strided => sweep_strided(field, axis, kernel),
    }
}

fn sweep_contiguous<K: LineKernel>(field: &mut DistributionField, axis: usize, kernel: &K) -> Result<()> {
    let dofs = field.grid.dofs();
    let n = dofs[axis];
    let rest: Vec<usize> = field.layout.dim_order[1..].to_vec();
    let ndim = dofs.len();
    field.data.par_chunks_mut(n).enumerate().try_for_each_init(
        || (kernel.scratch(n), vec![0.0; n], vec![0usize; ndim]),
        |(scratch, input, index), (line, chunk)| {
            let mut rem = line;
            for &a in &rest {
                index[a] = rem % dofs[a];
                rem /= dofs[a];
            }
            index[axis] = 0;
            input.copy_from_slice(chunk);
            kernel.apply(&LineContext { axis, index }, input, chunk, scratch)
        },
    )
}

fn sweep_strided<K: LineKernel>(field: &mut DistributionField, axis: usize, kernel: &K) -> Result<()> {
    let dofs = field.grid.dofs();
    let ndim = dofs.len();
    let n = dofs[axis];
    let order = &field.layout.dim_order;
    let pos = order.iter().position(|&a| a == axis).expect("axis is in dim_order");
    let inner_axes: Vec<usize> = order[..pos].to_vec();
    let outer_axes: Vec<usize> = order[pos + 1..].to_vec();
    let inner = field.layout.strides[axis];
    let outer = field.data.len() / (n * inner);
    let block = field.layout.cache_block.min(inner);
    let blocks_per_slab = inner.div_ceil(block);
    let ptr = SharedMut(field.data.as_mut_ptr());

    (0..outer * blocks_per_slab).into_par_iter().try_for_each_init(
        || (kernel.scratch(n), vec![0.0; block * n], vec![0.0; block * n], vec![0usize; ndim]),
        |(scratch, gathered, produced, index), block_id| {
            let ptr = ptr;
            let o = block_id / blocks_per_slab;
            let j0 = (block_id % blocks_per_slab) * block;
            let width = block.min(inner - j0);
            let base = o * n * inner + j0;

            // SAFETY: block (o, j0..j0+width) owns exactly the elements
            // base + i*inner + b for i < n, b < width; no other block touches them.
            unsafe {
                for i in 0..n {
                    let row = ptr.0.add(base + i * inner);
                    for b in 0..width {
                        gathered[b * n + i] = *row.add(b);
                    }
                }
            }

            let mut rem = o;
            for &a in &outer_axes {
                index[a] = rem % dofs[a];
                rem /= dofs[a];
            }
            index[axis] = 0;
            for b in 0..width {
                let mut rem = j0 + b;
                for &a in &inner_axes {
                    index[a] = rem % dofs[a];
                    rem /= dofs[a];
                }
                kernel.apply(
                    &LineContext { axis, index },
                    &gathered[b * n..(b + 1) * n],
                    &mut produced[b * n..(b + 1) * n],
                    scratch,
                )?;
            }

            unsafe {
                for i in 0..n {
                    let row = ptr.0.add(base + i * inner);
                    for b in 0..width {
                        *row.add(b) = produced[b * n + i];
                    }
                }
            }
            Ok(())
        },
    )
}

//! Execution strategy for the data-parallel inner loops.
//!
//! With the `parallel` feature the row sweeps, pointwise phases and sweep
//! runs go through rayon; without it, or with [`Execution::Sequential`],
//! the same loops run on the calling thread.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// The strategy actually used once the feature set is taken into account.
    pub fn effective(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }

    pub(crate) fn faer_par(self) -> faer::Par {
        match self.effective() {
            Execution::Sequential => faer::Par::Seq,
            #[cfg(feature = "parallel")]
            Execution::Parallel => faer::Par::rayon(0),
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => faer::Par::Seq,
        }
    }

    /// Runs `f(row_index, row)` over consecutive `width`-sized rows of `data`.
    pub fn for_each_row<T, F>(self, data: &mut [T], width: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self.effective() {
            #[cfg(feature = "parallel")]
            Execution::Parallel => data
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| f(i, row)),
            _ => data
                .chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| f(i, row)),
        }
    }

    /// Like [`for_each_row`](Self::for_each_row) with a per-worker scratch
    /// value created by `init`.
    pub fn for_each_row_with<T, S, I, F>(self, data: &mut [T], width: usize, init: I, f: F)
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
    {
        match self.effective() {
            #[cfg(feature = "parallel")]
            Execution::Parallel => data
                .par_chunks_mut(width)
                .enumerate()
                .for_each_init(&init, |s, (i, row)| f(s, i, row)),
            _ => {
                let mut s = init();
                data.chunks_mut(width)
                    .enumerate()
                    .for_each(|(i, row)| f(&mut s, i, row))
            }
        }
    }

    /// Consumes independent work items, `f(index, item)`.
    pub fn for_each_owned<T, F>(self, items: Vec<T>, f: F)
    where
        T: Send,
        F: Fn(usize, T) + Sync + Send,
    {
        match self.effective() {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.into_par_iter().enumerate().for_each(|(i, t)| f(i, t)),
            _ => items.into_iter().enumerate().for_each(|(i, t)| f(i, t)),
        }
    }

    /// Ordered map over a slice of independent jobs.
    pub fn map<A, B, F>(self, items: &[A], f: F) -> Vec<B>
    where
        A: Sync,
        B: Send,
        F: Fn(&A) -> B + Sync + Send,
    {
        match self.effective() {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }
}

/// Ordered map over independent jobs with at most `threads` running at once
/// (`None` uses the global pool). Sequential without the `parallel` feature.
pub fn map_with_threads<A, B, F>(threads: Option<usize>, items: &[A], f: F) -> Vec<B>
where
    A: Sync,
    B: Send,
    F: Fn(&A) -> B + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(1) => items.iter().map(f).collect(),
            Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
                Err(_) => items.iter().map(f).collect(),
            },
            None => items.par_iter().map(f).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_visit_every_row() {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let mut data = vec![0usize; 12];
            exec.for_each_row(&mut data, 3, |i, row| row.iter_mut().for_each(|v| *v = i));
            assert_eq!(data, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]);
            assert_eq!(exec.map(&[1, 2, 3], |v| v * 2), vec![2, 4, 6]);
        }
    }
}

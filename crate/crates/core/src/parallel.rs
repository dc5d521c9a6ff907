//! Runs independent sub-schemes on forked oracles.
//!
//! With the `parallel` feature the children run on the rayon pool; without it
//! they run one after another. Forking happens up front and the ledgers are
//! merged in input order, so results are identical either way.

use crate::error::Result;
use crate::oracle::MeasurementOracle;

pub(crate) fn run_forked<I, T, F>(oracle: &mut MeasurementOracle, items: Vec<I>, f: F) -> Result<Vec<T>>
where
    I: Send,
    T: Send,
    F: Fn(&mut MeasurementOracle, I) -> Result<T> + Sync + Send,
{
    let mut children: Vec<MeasurementOracle> = (0..items.len()).map(|_| oracle.fork()).collect();
    let results = map_pairs(&mut children, items, &f);
    let values = results.into_iter().collect::<Result<Vec<T>>>()?;
    oracle.join_parallel(children)?;
    Ok(values)
}

#[cfg(feature = "parallel")]
fn map_pairs<I, T, F>(children: &mut [MeasurementOracle], items: Vec<I>, f: &F) -> Vec<Result<T>>
where
    I: Send,
    T: Send,
    F: Fn(&mut MeasurementOracle, I) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    children
        .par_iter_mut()
        .zip(items.into_par_iter())
        .map(|(child, item)| f(child, item))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn map_pairs<I, T, F>(children: &mut [MeasurementOracle], items: Vec<I>, f: &F) -> Vec<Result<T>>
where
    F: Fn(&mut MeasurementOracle, I) -> Result<T>,
{
    children.iter_mut().zip(items).map(|(child, item)| f(child, item)).collect()
}

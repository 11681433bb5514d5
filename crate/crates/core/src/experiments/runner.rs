//! Ordered parallel map over sample indices.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::thread;

use crate::error::Error;

/// Evaluate `work(i)` for `i in 0..count` on up to `workers` threads and hand
/// the results to `sink` in index order. The first failure in index order
/// stops the run; everything before it has already reached `sink`.
pub fn ordered_map<T, E>(
    count: u64,
    workers: usize,
    work: impl Fn(u64) -> Result<T, Error> + Sync,
    mut sink: impl FnMut(u64, T) -> Result<(), E>,
) -> Result<(), E>
where
    T: Send,
    E: From<Error>,
{
    let workers = workers.clamp(1, count.max(1).try_into().unwrap_or(usize::MAX));
    if workers == 1 {
        for i in 0..count {
            sink(i, work(i)?)?;
        }
        return Ok(());
    }

    let next = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let (work, next, stop) = (&work, &next, &stop);
    thread::scope(|scope| {
        let (tx, rx) = mpsc::sync_channel::<(u64, Result<T, Error>)>(workers * 4);
        for _ in 0..workers {
            let tx = tx.clone();
            scope.spawn(move || {
                while !stop.load(Ordering::Relaxed) {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= count {
                        break;
                    }
                    let out = work(i);
                    let failed = out.is_err();
                    if tx.send((i, out)).is_err() || failed {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut expected = 0u64;
        for (i, out) in rx.into_iter() {
            pending.insert(i, out);
            while let Some(out) = pending.remove(&expected) {
                let delivered = match out {
                    Ok(t) => sink(expected, t),
                    Err(e) => Err(E::from(e)),
                };
                if let Err(e) = delivered {
                    stop.store(true, Ordering::Relaxed);
                    return Err(e);
                }
                expected += 1;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Invariant;

    #[test]
    fn results_arrive_in_order() {
        for workers in [1, 2, 5] {
            let mut seen = Vec::new();
            ordered_map::<_, Error>(
                50,
                workers,
                |i| {
                    // Uneven work so completion order differs from index order.
                    let spin = (50 - i) * 2000;
                    Ok((0..spin).fold(i, |a, b| a ^ b) ^ (0..spin).fold(0, |a, b| a ^ b))
                },
                |i, v| {
                    seen.push((i, v));
                    Ok(())
                },
            )
            .unwrap();
            assert_eq!(seen, (0..50).map(|i| (i, i)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn first_failure_in_order_wins() {
        for workers in [1, 3] {
            let mut seen = Vec::new();
            let err = ordered_map::<u64, Error>(
                100,
                workers,
                |i| {
                    if i == 17 || i == 40 {
                        Err(Error::violation(Invariant::Other, format!("at {i}")))
                    } else {
                        Ok(i)
                    }
                },
                |i, _| {
                    seen.push(i);
                    Ok(())
                },
            )
            .unwrap_err();
            assert_eq!(err, Error::violation(Invariant::Other, "at 17"));
            assert_eq!(seen, (0..17).collect::<Vec<_>>());
        }
    }

    #[derive(Debug, PartialEq)]
    enum SinkError {
        Core,
        Full,
    }

    impl From<Error> for SinkError {
        fn from(_: Error) -> Self {
            SinkError::Core
        }
    }

    #[test]
    fn sink_errors_stop_the_run() {
        let err = ordered_map(1000, 4, Ok, |i, _| if i == 3 { Err(SinkError::Full) } else { Ok(()) })
            .unwrap_err();
        assert_eq!(err, SinkError::Full);
    }

    #[test]
    fn zero_items() {
        ordered_map::<u64, Error>(0, 8, Ok, |_, _| panic!("nothing to deliver")).unwrap();
    }
}

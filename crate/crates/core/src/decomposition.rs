//! Contiguous domain decomposition with guard-node density exchange and
//! particle migration over in-process channels.

use std::ops::Range;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Mutex;

use picmc_scheduler::{Queue, Scheduler};

use crate::error::{PicError, Result};
use crate::fields::{stitch_pieces, FieldBoundary};
use crate::mover::{insert_transfers, Transfer};
use crate::species::SpeciesTable;
use crate::store::CellSortedStore;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    nc: usize,
    ranges: Vec<Range<usize>>,
}

/// Splits `nc` cells into `workers` contiguous ranges; the first
/// `nc % workers` ranges get one extra cell.
pub fn partition_grid(nc: usize, workers: usize) -> Result<Partition> {
    if workers == 0 || workers > nc {
        return Err(PicError::InvalidConfig(format!("cannot split {nc} cells over {workers} workers")));
    }
    let base = nc / workers;
    let extra = nc % workers;
    let mut ranges = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < extra);
        ranges.push(start..start + len);
        start += len;
    }
    Ok(Partition { nc, ranges })
}

impl Partition {
    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn workers(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn range(&self, w: usize) -> Range<usize> {
        self.ranges[w].clone()
    }

    pub fn owner(&self, cell: usize) -> usize {
        self.ranges.partition_point(|r| r.end <= cell)
    }

    /// Whether `a` and `b` are equal or neighbours on the periodic ring.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let w = self.workers();
        a == b || (a + 1) % w == b || (b + 1) % w == a
    }
}

/// Sums the boundary-node contributions of neighbouring workers, lower worker
/// first, into the global node array.
pub fn exchange_guard_density(pieces: &[Vec<f64>], partition: &Partition, bc: FieldBoundary) -> Result<Vec<f64>> {
    if pieces.len() != partition.workers() {
        return Err(PicError::Contract(format!("{} pieces for {} workers", pieces.len(), partition.workers())));
    }
    for (p, r) in pieces.iter().zip(partition.ranges()) {
        if p.len() != r.len() + 1 {
            return Err(PicError::Contract(format!("piece of {} nodes for range {r:?}", p.len())));
        }
    }
    Ok(stitch_pieces(pieces, bc))
}

/// Particles handed from one worker to another.
#[derive(Debug, Clone, PartialEq)]
pub struct MigrationMsg {
    pub from: usize,
    pub to: usize,
    /// Offsets are already relative to the destination cell.
    pub particles: Vec<Transfer>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MigrationTally {
    pub messages: u64,
    pub sent: u64,
    pub received: u64,
    /// Transfers whose destination stayed on the same worker.
    pub local: u64,
}

/// Splits a worker's outgoing transfers into those it keeps and one message
/// per neighbour (possibly empty).
pub fn route_transfers(
    worker: usize,
    transfers: Vec<Transfer>,
    partition: &Partition,
    species: &SpeciesTable,
) -> Result<(Vec<Transfer>, Vec<MigrationMsg>)> {
    let w = partition.workers();
    let mut neighbours = vec![(worker + w - 1) % w, (worker + 1) % w];
    neighbours.retain(|n| *n != worker);
    neighbours.dedup();
    let mut msgs: Vec<MigrationMsg> =
        neighbours.iter().map(|&to| MigrationMsg { from: worker, to, particles: Vec::new() }).collect();
    let mut local = Vec::new();
    for t in transfers {
        let to = partition.owner(t.dest);
        if to == worker {
            local.push(t);
        } else if let Some(m) = msgs.iter_mut().find(|m| m.to == to) {
            m.particles.push(t);
        } else {
            return Err(PicError::NonAdjacentMigration {
                species: species.defs[t.species].name.clone(),
                from: worker,
                to,
            });
        }
    }
    Ok((local, msgs))
}

/// Delivers every worker's pending transfers over channels and inserts them,
/// together with the worker's own local transfers, in one batch per worker.
pub fn migrate_particles(
    stores: &mut [CellSortedStore],
    pending: Vec<Vec<Transfer>>,
    partition: &Partition,
    species: &SpeciesTable,
    sched: &Scheduler,
) -> Result<MigrationTally> {
    let w = partition.workers();
    if stores.len() != w || pending.len() != w {
        return Err(PicError::Contract("one store and one transfer list per worker required".into()));
    }
    let (senders, receivers): (Vec<Sender<MigrationMsg>>, Vec<Receiver<MigrationMsg>>) =
        (0..w).map(|_| channel()).unzip();
    let failure: Mutex<Option<PicError>> = Mutex::new(None);
    let tally = Mutex::new(MigrationTally::default());
    let fail = |e: PicError| {
        failure.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
    };

    let mut locals: Vec<Vec<Transfer>> = vec![Vec::new(); w];
    sched.scope(|s| {
        for ((worker, out), keep) in pending.into_iter().enumerate().zip(locals.iter_mut()) {
            let senders = &senders;
            let (fail, tally) = (&fail, &tally);
            s.spawn(format!("send[{worker}]"), Queue(worker as u32), &[], move || {
                match route_transfers(worker, out, partition, species) {
                    Ok((local, msgs)) => {
                        let mut t = MigrationTally { local: local.len() as u64, ..Default::default() };
                        for m in msgs {
                            t.messages += 1;
                            t.sent += m.particles.len() as u64;
                            senders[m.to].send(m).expect("receiver alive");
                        }
                        *keep = local;
                        let mut g = tally.lock().unwrap_or_else(|p| p.into_inner());
                        g.messages += t.messages;
                        g.sent += t.sent;
                        g.local += t.local;
                    }
                    Err(e) => fail(e),
                }
            })
            .expect("scheduler running");
        }
    });
    drop(senders);
    if let Some(e) = failure.lock().unwrap_or_else(|p| p.into_inner()).take() {
        return Err(e);
    }

    sched.scope(|s| {
        for (((worker, store), rx), mut batch) in
            stores.iter_mut().enumerate().zip(receivers).zip(locals)
        {
            let (fail, tally) = (&fail, &tally);
            s.spawn(format!("recv[{worker}]"), Queue(worker as u32), &[], move || {
                let mut received = 0;
                for m in rx.try_iter() {
                    received += m.particles.len() as u64;
                    batch.extend(m.particles);
                }
                tally.lock().unwrap_or_else(|p| p.into_inner()).received += received;
                if let Err(e) = insert_transfers(store, batch) {
                    fail(e);
                }
            })
            .expect("scheduler running");
        }
    });
    if let Some(e) = failure.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e);
    }
    Ok(tally.into_inner().unwrap_or_else(|p| p.into_inner()))
}

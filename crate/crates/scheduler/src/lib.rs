//! Task-dependency runtime for a multicore host.
//!
//! Work is expressed as tasks that declare the named data regions they read
//! or write. A task becomes runnable once every previously submitted task with
//! a conflicting access to one of its regions has finished; tasks without
//! conflicts run concurrently on a fixed worker pool. Submission never blocks
//! on task execution.
//!
//! Queues are ordering scopes only: [`Scheduler::wait`] blocks until every task
//! submitted to the listed queues has completed, but queues do not own threads.
//!
//! [`Scheduler::scope`] allows tasks that borrow from the caller's stack, and
//! [`Scheduler::parallel_for_blocks`] / [`Scheduler::parallel_chunks_mut`]
//! split an index range into contiguous blocks of a fixed grainsize, one task
//! per block.

mod region;
mod trace;

pub use region::{Access, DataRegion, RegionId};
pub use trace::{max_concurrency, write_trace_csv, TraceEvent};

use std::cell::Cell;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::marker::PhantomData;
use std::ops::Range;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::Instant;

use thiserror::Error;

/// GPU launch geometry used by the offloaded mover this runtime models.
/// These have no host analog and are not consulted anywhere.
pub mod launch_constants {
    pub const THREAD_LIMIT: u32 = 256;
    pub const NUM_TEAMS: u32 = 391;
}

/// Identifier of an ordering queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Queue(pub u32);

impl fmt::Display for Queue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type TaskId = u64;

type Job = Box<dyn FnOnce() + Send + 'static>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("scheduler has been shut down")]
    ShutDown,
    #[error("region `{0}` listed more than once in a single task")]
    DuplicateRegion(RegionId),
    #[error("data region exit for `{0}` without a matching enter")]
    UnmatchedExit(RegionId),
    #[error("grainsize must be at least 1")]
    ZeroGrainsize,
    #[error("worker count must be at least 1")]
    ZeroWorkers,
}

/// A unit of work with its declared data accesses and target queue.
pub struct TaskSpec {
    pub tag: String,
    pub queue: Queue,
    pub regions: Vec<DataRegion>,
    pub work: Job,
}

impl TaskSpec {
    pub fn new(tag: impl Into<String>, work: impl FnOnce() + Send + 'static) -> Self {
        TaskSpec {
            tag: tag.into(),
            queue: Queue::default(),
            regions: Vec::new(),
            work: Box::new(work),
        }
    }

    pub fn queue(mut self, queue: Queue) -> Self {
        self.queue = queue;
        self
    }

    pub fn region(mut self, region: DataRegion) -> Self {
        self.regions.push(region);
        self
    }

    pub fn reads(self, id: impl Into<RegionId>) -> Self {
        self.region(DataRegion::read(id))
    }

    pub fn writes(self, id: impl Into<RegionId>) -> Self {
        self.region(DataRegion::write(id))
    }

    pub fn updates(self, id: impl Into<RegionId>) -> Self {
        self.region(DataRegion::read_write(id))
    }
}

impl fmt::Debug for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaskSpec")
            .field("tag", &self.tag)
            .field("queue", &self.queue)
            .field("regions", &self.regions)
            .finish_non_exhaustive()
    }
}

thread_local! {
    static WORKER_ID: Cell<Option<usize>> = const { Cell::new(None) };
}

struct ScopeState {
    remaining: AtomicUsize,
    panic: Mutex<Option<String>>,
}

struct Node {
    job: Option<Job>,
    tag: Arc<str>,
    queue: Queue,
    unmet: usize,
    dependents: Vec<TaskId>,
    scope: Option<Arc<ScopeState>>,
}

#[derive(Default)]
struct RegionState {
    last_writer: Option<TaskId>,
    readers: Vec<TaskId>,
}

#[derive(Default)]
struct State {
    next_id: TaskId,
    nodes: HashMap<TaskId, Node>,
    ready: VecDeque<TaskId>,
    regions: HashMap<RegionId, RegionState>,
    queue_pending: HashMap<Queue, usize>,
    pending: usize,
    entered: HashMap<RegionId, usize>,
    shutdown: bool,
    trace: Vec<TraceEvent>,
    tracing: bool,
    detached_panics: Vec<String>,
}

struct Shared {
    state: Mutex<State>,
    work_cv: Condvar,
    done_cv: Condvar,
    epoch: Instant,
    workers: usize,
}

impl Shared {
    fn lock(&self) -> MutexGuard<'_, State> {
        // A panicking task never holds the lock, so poisoning only happens on
        // internal bugs; recover the guard rather than cascading.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn enqueue(
        &self,
        tag: Arc<str>,
        queue: Queue,
        regions: &[DataRegion],
        job: Job,
        scope: Option<Arc<ScopeState>>,
    ) -> Result<TaskId, SchedulerError> {
        let mut seen = HashSet::with_capacity(regions.len());
        for r in regions {
            if !seen.insert(&r.id) {
                return Err(SchedulerError::DuplicateRegion(r.id.clone()));
            }
        }

        let mut st = self.lock();
        if st.shutdown {
            return Err(SchedulerError::ShutDown);
        }
        let id = st.next_id;
        st.next_id += 1;

        let mut deps: Vec<TaskId> = Vec::new();
        {
            let State { nodes, regions: region_map, .. } = &mut *st;
            for r in regions {
                let entry = region_map.entry(r.id.clone()).or_default();
                if let Some(w) = entry.last_writer {
                    if nodes.contains_key(&w) {
                        deps.push(w);
                    }
                }
                entry.readers.retain(|t| nodes.contains_key(t));
                if r.access.writes() {
                    deps.extend(entry.readers.iter().copied());
                    entry.readers.clear();
                    entry.last_writer = Some(id);
                } else {
                    entry.readers.push(id);
                }
            }
            deps.sort_unstable();
            deps.dedup();
            for d in &deps {
                nodes
                    .get_mut(d)
                    .expect("live dependency")
                    .dependents
                    .push(id);
            }
        }

        let unmet = deps.len();
        st.nodes.insert(
            id,
            Node {
                job: Some(job),
                tag,
                queue,
                unmet,
                dependents: Vec::new(),
                scope,
            },
        );
        st.pending += 1;
        *st.queue_pending.entry(queue).or_insert(0) += 1;
        if unmet == 0 {
            st.ready.push_back(id);
            drop(st);
            self.work_cv.notify_one();
        }
        Ok(id)
    }

    /// Runs one ready task with the lock released, then records completion.
    fn run_one<'a>(
        &'a self,
        mut st: MutexGuard<'a, State>,
        id: TaskId,
        worker: usize,
    ) -> MutexGuard<'a, State> {
        let (job, tag, queue) = {
            let node = st.nodes.get_mut(&id).expect("ready task is live");
            (node.job.take().expect("task runs once"), node.tag.clone(), node.queue)
        };
        drop(st);

        let start = self.epoch.elapsed().as_nanos() as u64;
        let outcome = panic::catch_unwind(AssertUnwindSafe(job));
        let end = self.epoch.elapsed().as_nanos() as u64;

        let mut st = self.lock();
        let node = st.nodes.remove(&id).expect("running task is live");
        let mut woke = 0usize;
        for d in &node.dependents {
            let dep = st.nodes.get_mut(d).expect("dependent is live");
            dep.unmet -= 1;
            if dep.unmet == 0 {
                st.ready.push_back(*d);
                woke += 1;
            }
        }
        if let Err(payload) = outcome {
            let msg = panic_message(&*payload);
            match &node.scope {
                Some(scope) => {
                    let mut slot = scope.panic.lock().unwrap_or_else(|e| e.into_inner());
                    slot.get_or_insert(msg);
                }
                None => st.detached_panics.push(msg),
            }
        }
        if let Some(scope) = &node.scope {
            scope.remaining.fetch_sub(1, Ordering::AcqRel);
        }
        st.pending -= 1;
        if let Some(n) = st.queue_pending.get_mut(&queue) {
            *n -= 1;
        }
        if st.tracing {
            st.trace.push(TraceEvent {
                task: id,
                tag: tag.to_string(),
                queue,
                worker,
                start_ns: start,
                end_ns: end.max(start),
            });
        }
        match woke {
            0 => {}
            1 => self.work_cv.notify_one(),
            _ => self.work_cv.notify_all(),
        }
        self.done_cv.notify_all();
        st
    }

    /// Blocks until `done` holds. On a worker thread the caller executes ready
    /// tasks while it waits so that nested waits cannot starve the pool.
    fn block_until(&self, mut done: impl FnMut(&State) -> bool) {
        let helper = WORKER_ID.with(|w| w.get());
        let mut st = self.lock();
        loop {
            if done(&st) {
                return;
            }
            if let Some(worker) = helper {
                if let Some(id) = st.ready.pop_front() {
                    st = self.run_one(st, id, worker);
                    continue;
                }
            }
            st = self.done_cv.wait(st).unwrap_or_else(|e| e.into_inner());
        }
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "task panicked".to_string()
    }
}

fn worker_loop(shared: Arc<Shared>, worker: usize) {
    WORKER_ID.with(|w| w.set(Some(worker)));
    let mut st = shared.lock();
    loop {
        if let Some(id) = st.ready.pop_front() {
            st = shared.run_one(st, id, worker);
            continue;
        }
        if st.shutdown && st.pending == 0 {
            break;
        }
        st = shared.work_cv.wait(st).unwrap_or_else(|e| e.into_inner());
    }
}

/// Handle to a submitted task.
#[derive(Clone)]
pub struct TaskHandle {
    id: TaskId,
    shared: Arc<Shared>,
}

impl TaskHandle {
    pub fn id(&self) -> TaskId {
        self.id
    }

    pub fn is_finished(&self) -> bool {
        !self.shared.lock().nodes.contains_key(&self.id)
    }

    /// Blocks until this task has completed.
    pub fn join(&self) {
        let id = self.id;
        self.shared.block_until(|st| !st.nodes.contains_key(&id));
    }
}

impl fmt::Debug for TaskHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaskHandle").field("id", &self.id).finish()
    }
}

/// Cloneable submission handle, usable from inside running tasks.
#[derive(Clone)]
pub struct SchedulerHandle {
    shared: Arc<Shared>,
}

impl SchedulerHandle {
    pub fn submit(&self, task: TaskSpec) -> Result<TaskHandle, SchedulerError> {
        let id = self.shared.enqueue(
            Arc::from(task.tag),
            task.queue,
            &task.regions,
            task.work,
            None,
        )?;
        Ok(TaskHandle {
            id,
            shared: self.shared.clone(),
        })
    }

    pub fn wait(&self, queues: &[Queue]) {
        self.shared.block_until(|st| {
            queues
                .iter()
                .all(|q| st.queue_pending.get(q).copied().unwrap_or(0) == 0)
        });
    }

    pub fn taskwait_all(&self) {
        self.shared.block_until(|st| st.pending == 0);
    }
}

/// Fixed-size worker pool executing region-ordered tasks.
pub struct Scheduler {
    handle: SchedulerHandle,
    threads: Vec<JoinHandle<()>>,
}

impl Scheduler {
    pub fn new(workers: usize) -> Result<Self, SchedulerError> {
        if workers == 0 {
            return Err(SchedulerError::ZeroWorkers);
        }
        let shared = Arc::new(Shared {
            state: Mutex::new(State {
                tracing: true,
                ..State::default()
            }),
            work_cv: Condvar::new(),
            done_cv: Condvar::new(),
            epoch: Instant::now(),
            workers,
        });
        let threads = (0..workers)
            .map(|w| {
                let shared = shared.clone();
                thread::Builder::new()
                    .name(format!("picmc-worker-{w}"))
                    .spawn(move || worker_loop(shared, w))
                    .expect("spawn worker thread")
            })
            .collect();
        Ok(Scheduler {
            handle: SchedulerHandle { shared },
            threads,
        })
    }

    pub fn workers(&self) -> usize {
        self.handle.shared.workers
    }

    pub fn handle(&self) -> SchedulerHandle {
        self.handle.clone()
    }

    /// Enqueues a task and returns immediately.
    pub fn submit(&self, task: TaskSpec) -> Result<TaskHandle, SchedulerError> {
        self.handle.submit(task)
    }

    /// Blocks until every task submitted to any of `queues` has completed.
    pub fn wait(&self, queues: &[Queue]) {
        self.handle.wait(queues)
    }

    /// Global barrier over all queues, including tasks submitted by tasks.
    pub fn taskwait_all(&self) {
        self.handle.taskwait_all()
    }

    /// Orders a no-op write on each region ahead of later users of the region.
    pub fn data_region_enter(&self, regions: &[RegionId]) -> Result<TaskHandle, SchedulerError> {
        self.region_marker("enter", regions, false)
    }

    /// Orders a no-op write on each region after every earlier user.
    pub fn data_region_exit(&self, regions: &[RegionId]) -> Result<TaskHandle, SchedulerError> {
        self.region_marker("exit", regions, true)
    }

    fn region_marker(
        &self,
        kind: &str,
        regions: &[RegionId],
        exit: bool,
    ) -> Result<TaskHandle, SchedulerError> {
        {
            let mut st = self.handle.shared.lock();
            if exit {
                if let Some(r) = regions
                    .iter()
                    .find(|r| st.entered.get(*r).copied().unwrap_or(0) == 0)
                {
                    return Err(SchedulerError::UnmatchedExit(r.clone()));
                }
                for r in regions {
                    *st.entered.get_mut(r).expect("checked above") -= 1;
                }
            } else {
                for r in regions {
                    *st.entered.entry(r.clone()).or_insert(0) += 1;
                }
            }
        }
        let names: Vec<&str> = regions.iter().map(|r| r.as_str()).collect();
        let mut spec = TaskSpec::new(format!("{kind}({})", names.join(",")), || {});
        spec.regions = regions.iter().cloned().map(DataRegion::write).collect();
        self.submit(spec)
    }

    /// Runs `f` with a [`Scope`] whose tasks may borrow from the enclosing
    /// stack frame. Returns after every task spawned in the scope finished;
    /// a panic in any scoped task is resumed here.
    pub fn scope<'env, R>(&self, f: impl FnOnce(&Scope<'env>) -> R) -> R {
        let state = Arc::new(ScopeState {
            remaining: AtomicUsize::new(0),
            panic: Mutex::new(None),
        });
        let scope = Scope {
            shared: self.handle.shared.clone(),
            state: state.clone(),
            _env: PhantomData,
        };

        struct WaitOnDrop<'a>(&'a Shared, &'a ScopeState);
        impl Drop for WaitOnDrop<'_> {
            fn drop(&mut self) {
                let scope = self.1;
                self.0
                    .block_until(|_| scope.remaining.load(Ordering::Acquire) == 0);
            }
        }

        let result = {
            let _guard = WaitOnDrop(&self.handle.shared, &state);
            f(&scope)
        };
        let panicked = state.panic.lock().unwrap_or_else(|e| e.into_inner()).take();
        if let Some(msg) = panicked {
            panic!("scoped task panicked: {msg}");
        }
        result
    }

    /// Splits `range` into `ceil(len / grainsize)` contiguous blocks and runs
    /// `body` once per block as an independent task. Returns the block count.
    pub fn parallel_for_blocks<F>(
        &self,
        tag: &str,
        range: Range<usize>,
        grainsize: usize,
        body: F,
    ) -> Result<usize, SchedulerError>
    where
        F: Fn(Range<usize>) + Sync,
    {
        let blocks = block_ranges(range, grainsize)?;
        let n = blocks.len();
        if n == 0 {
            return Ok(0);
        }
        let body = &body;
        self.scope(|s| {
            for (i, block) in blocks.into_iter().enumerate() {
                s.spawn(format!("{tag}[{i}]"), Queue::default(), &[], move || body(block))?;
            }
            Ok::<_, SchedulerError>(())
        })?;
        Ok(n)
    }

    /// Like [`parallel_for_blocks`](Self::parallel_for_blocks) over the index
    /// range of `data`, handing each block its disjoint mutable sub-slice along
    /// with the block's starting index.
    pub fn parallel_chunks_mut<T, F>(
        &self,
        tag: &str,
        data: &mut [T],
        grainsize: usize,
        body: F,
    ) -> Result<usize, SchedulerError>
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync,
    {
        if grainsize == 0 {
            return Err(SchedulerError::ZeroGrainsize);
        }
        if data.is_empty() {
            return Ok(0);
        }
        let body = &body;
        let mut count = 0;
        self.scope(|s| {
            for (i, chunk) in data.chunks_mut(grainsize).enumerate() {
                let start = i * grainsize;
                s.spawn(format!("{tag}[{i}]"), Queue::default(), &[], move || {
                    body(start, chunk)
                })?;
                count += 1;
            }
            Ok::<_, SchedulerError>(())
        })?;
        Ok(count)
    }

    pub fn set_tracing(&self, enabled: bool) {
        self.handle.shared.lock().tracing = enabled;
    }

    /// Returns the recorded trace sorted by start time and clears it.
    pub fn take_trace(&self) -> Vec<TraceEvent> {
        let mut events = std::mem::take(&mut self.handle.shared.lock().trace);
        events.sort_by_key(|e| (e.start_ns, e.task));
        events
    }

    /// Panic messages from tasks submitted outside any scope, drained.
    pub fn take_panics(&self) -> Vec<String> {
        std::mem::take(&mut self.handle.shared.lock().detached_panics)
    }

    /// Nanoseconds since the scheduler was created, on the trace clock.
    pub fn now_ns(&self) -> u64 {
        self.handle.shared.epoch.elapsed().as_nanos() as u64
    }

    /// Rejects further submissions, drains outstanding work and joins the pool.
    pub fn shutdown(&mut self) {
        {
            let mut st = self.handle.shared.lock();
            st.shutdown = true;
        }
        self.handle.shared.work_cv.notify_all();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for Scheduler {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl fmt::Debug for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scheduler")
            .field("workers", &self.workers())
            .finish_non_exhaustive()
    }
}

/// Spawning context for tasks that borrow data living at least for `'env`.
pub struct Scope<'env> {
    shared: Arc<Shared>,
    state: Arc<ScopeState>,
    _env: PhantomData<&'env mut &'env ()>,
}

impl<'env> Scope<'env> {
    pub fn spawn<F>(
        &self,
        tag: impl Into<String>,
        queue: Queue,
        regions: &[DataRegion],
        f: F,
    ) -> Result<TaskId, SchedulerError>
    where
        F: FnOnce() + Send + 'env,
    {
        let job: Box<dyn FnOnce() + Send + 'env> = Box::new(f);
        // SAFETY: `Scheduler::scope` does not return (or unwind past its frame)
        // until `remaining` reaches zero, i.e. until this job has run and been
        // dropped, so every borrow captured for `'env` outlives the job.
        let job: Job = unsafe { std::mem::transmute::<Box<dyn FnOnce() + Send + 'env>, Job>(job) };
        self.state.remaining.fetch_add(1, Ordering::AcqRel);
        let tag: String = tag.into();
        match self
            .shared
            .enqueue(Arc::from(tag), queue, regions, job, Some(self.state.clone()))
        {
            Ok(id) => Ok(id),
            Err(e) => {
                self.state.remaining.fetch_sub(1, Ordering::AcqRel);
                Err(e)
            }
        }
    }
}

/// Contiguous block partition used by the loop helpers.
pub fn block_ranges(range: Range<usize>, grainsize: usize) -> Result<Vec<Range<usize>>, SchedulerError> {
    if grainsize == 0 {
        return Err(SchedulerError::ZeroGrainsize);
    }
    let mut out = Vec::with_capacity(range.len().div_ceil(grainsize));
    let mut start = range.start;
    while start < range.end {
        let end = (start + grainsize).min(range.end);
        out.push(start..end);
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicU64;
    use std::time::Duration;

    #[test]
    fn block_counts() {
        assert_eq!(block_ranges(0..1000, 500).unwrap().len(), 2);
        assert_eq!(block_ranges(0..7, 1).unwrap().len(), 7);
        assert_eq!(block_ranges(0..10, 3).unwrap().last(), Some(&(9..10)));
        assert!(block_ranges(5..5, 4).unwrap().is_empty());
        assert_eq!(block_ranges(0..3, 0), Err(SchedulerError::ZeroGrainsize));
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(matches!(Scheduler::new(0), Err(SchedulerError::ZeroWorkers)));
    }

    #[test]
    fn duplicate_region_rejected() {
        let s = Scheduler::new(1).unwrap();
        let err = s.submit(TaskSpec::new("dup", || {}).reads("x").writes("x"));
        assert_eq!(err.unwrap_err(), SchedulerError::DuplicateRegion("x".into()));
    }

    #[test]
    fn submit_after_shutdown_fails() {
        let mut s = Scheduler::new(2).unwrap();
        let h = s.handle();
        s.shutdown();
        assert_eq!(
            h.submit(TaskSpec::new("late", || {})).unwrap_err(),
            SchedulerError::ShutDown
        );
    }

    #[test]
    fn parallel_for_blocks_block_count() {
        let s = Scheduler::new(3).unwrap();
        let hits = AtomicU64::new(0);
        let n = s
            .parallel_for_blocks("b", 0..1000, 500, |r| {
                hits.fetch_add(r.len() as u64, Ordering::Relaxed);
            })
            .unwrap();
        assert_eq!(n, 2);
        assert_eq!(hits.load(Ordering::Relaxed), 1000);
        assert_eq!(s.parallel_for_blocks("e", 3..3, 10, |_| panic!()).unwrap(), 0);
    }

    #[test]
    fn scope_waits_for_borrowing_tasks() {
        let s = Scheduler::new(2).unwrap();
        let mut slots = vec![0u64; 8];
        s.scope(|sc| {
            for (i, slot) in slots.iter_mut().enumerate() {
                sc.spawn("slot", Queue(0), &[], move || {
                    thread::sleep(Duration::from_millis(2));
                    *slot = i as u64 * 3;
                })
                .unwrap();
            }
        });
        assert_eq!(slots, (0..8).map(|i| i * 3).collect::<Vec<_>>());
    }

    #[test]
    #[should_panic(expected = "scoped task panicked: boom")]
    fn scoped_panic_is_resumed() {
        let s = Scheduler::new(1).unwrap();
        s.scope(|sc| {
            sc.spawn("p", Queue(0), &[], || panic!("boom")).unwrap();
        });
    }

    #[test]
    fn nested_parallel_loop_inside_task_completes_with_one_worker() {
        let s = Scheduler::new(1).unwrap();
        let total = AtomicU64::new(0);
        let s = &s;
        // The outer task occupies the only worker; its inner loop must be
        // executed by the waiting task itself.
        s.scope(|sc| {
            sc.spawn("outer", Queue(0), &[], || {
                s.parallel_for_blocks("inner", 0..100, 7, |r| {
                    total.fetch_add(r.len() as u64, Ordering::Relaxed);
                })
                .unwrap();
            })
            .unwrap();
        });
        assert_eq!(total.load(Ordering::Relaxed), 100);
    }

    #[test]
    fn unmatched_exit_is_an_error() {
        let s = Scheduler::new(1).unwrap();
        assert_eq!(
            s.data_region_exit(&["x".into()]).unwrap_err(),
            SchedulerError::UnmatchedExit("x".into())
        );
        s.data_region_enter(&["x".into()]).unwrap();
        s.data_region_exit(&["x".into()]).unwrap();
        assert!(s.data_region_exit(&["x".into()]).is_err());
    }

    #[test]
    fn taskwait_all_is_idempotent() {
        let s = Scheduler::new(2).unwrap();
        s.taskwait_all();
        s.submit(TaskSpec::new("t", || thread::sleep(Duration::from_millis(5))))
            .unwrap();
        s.taskwait_all();
        s.taskwait_all();
        assert_eq!(s.take_trace().len(), 1);
    }
}

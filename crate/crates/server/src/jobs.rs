//! In-memory store of simulation jobs.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;
use skbd_core::sim::OCSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

/// Completed replicates out of the job total, updated from worker threads.
#[derive(Debug, Default)]
pub struct Progress {
    done: AtomicUsize,
    total: AtomicUsize,
}

impl Progress {
    pub fn set_total(&self, total: usize) {
        self.total.store(total, Ordering::Relaxed);
    }

    /// Replicate callbacks can arrive out of order; keep the largest.
    pub fn advance(&self, done: usize) {
        self.done.fetch_max(done, Ordering::Relaxed);
    }

    pub fn fraction(&self) -> f64 {
        let total = self.total.load(Ordering::Relaxed);
        if total == 0 {
            return 0.0;
        }
        (self.done.load(Ordering::Relaxed) as f64 / total as f64).min(1.0)
    }
}

#[derive(Debug)]
pub struct Job {
    pub status: JobStatus,
    pub progress: Arc<Progress>,
    pub result: Option<Vec<OCSummary>>,
    pub error: Option<String>,
    finished: Option<Instant>,
}

/// What a poll returns.
#[derive(Debug, Clone, Serialize)]
pub struct JobView {
    pub id: String,
    pub status: JobStatus,
    pub progress: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Vec<OCSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Jobs are dropped `ttl` after they finish.
#[derive(Debug, Clone)]
pub struct JobStore {
    jobs: Arc<Mutex<HashMap<String, Job>>>,
    ttl: Duration,
}

impl JobStore {
    pub fn new(ttl: Duration) -> Self {
        JobStore {
            jobs: Arc::default(),
            ttl,
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, Job>> {
        self.jobs.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn purge(&self, jobs: &mut HashMap<String, Job>) {
        let now = Instant::now();
        jobs.retain(|_, j| j.finished.is_none_or(|t| now.duration_since(t) < self.ttl));
    }

    pub fn create(&self) -> (String, Arc<Progress>) {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let progress = Arc::new(Progress::default());
        let mut jobs = self.lock();
        self.purge(&mut jobs);
        jobs.insert(
            id.clone(),
            Job {
                status: JobStatus::Queued,
                progress: progress.clone(),
                result: None,
                error: None,
                finished: None,
            },
        );
        (id, progress)
    }

    pub fn start(&self, id: &str) {
        if let Some(j) = self.lock().get_mut(id) {
            j.status = JobStatus::Running;
        }
    }

    pub fn finish(&self, id: &str, outcome: Result<Vec<OCSummary>, String>) {
        if let Some(j) = self.lock().get_mut(id) {
            j.finished = Some(Instant::now());
            match outcome {
                Ok(r) => {
                    j.progress.advance(usize::MAX);
                    j.status = JobStatus::Done;
                    j.result = Some(r);
                }
                Err(e) => {
                    j.status = JobStatus::Failed;
                    j.error = Some(e);
                }
            }
        }
    }

    pub fn view(&self, id: &str) -> Option<JobView> {
        let mut jobs = self.lock();
        self.purge(&mut jobs);
        jobs.get(id).map(|j| JobView {
            id: id.to_string(),
            status: j.status,
            progress: if j.status == JobStatus::Done {
                1.0
            } else {
                j.progress.fraction()
            },
            result: j.result.clone(),
            error: j.error.clone(),
        })
    }
}

use serde::{Deserialize, Serialize};

/// Suspends updates while performance stays at the target and keeps a
/// snapshot of the parameters at the longest success streak.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FreezeState {
    pub frozen: bool,
    pub count: u64,
    pub best_count: u64,
    /// Actor and critic parameters at the best streak.
    pub best: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreezeEvent {
    Unchanged,
    Frozen,
    Unfrozen,
}

impl FreezeState {
    /// Episode-end update. A reward at `threshold` freezes and extends the
    /// streak (snapshotting when it is the longest so far); a trailing mean
    /// below `threshold` then unfreezes and resets the streak.
    pub fn observe(
        &mut self,
        reward: f64,
        trailing_mean: f64,
        threshold: f64,
        snapshot: impl FnOnce() -> (Vec<f64>, Vec<f64>),
    ) -> FreezeEvent {
        let was = self.frozen;
        if reward >= threshold {
            self.frozen = true;
            self.count += 1;
            if self.count > self.best_count {
                self.best_count = self.count;
                self.best = Some(snapshot());
            }
        }
        if trailing_mean < threshold {
            self.frozen = false;
            self.count = 0;
        }
        match (was, self.frozen) {
            (false, true) => FreezeEvent::Frozen,
            (true, false) => FreezeEvent::Unfrozen,
            _ => FreezeEvent::Unchanged,
        }
    }
}

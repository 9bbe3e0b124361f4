use std::collections::HashMap;
use std::future::Future;
use std::sync::{Arc, Mutex};

use tokio::sync::OnceCell;

/// Keyed get-or-init where concurrent misses on one key share a single
/// initialization. A failed init leaves the key empty so a later call retries.
pub(crate) struct SingleFlight<V> {
    cells: Mutex<HashMap<String, Arc<OnceCell<V>>>>,
}

impl<V> Default for SingleFlight<V> {
    fn default() -> Self {
        Self {
            cells: Mutex::new(HashMap::new()),
        }
    }
}

impl<V: Clone> SingleFlight<V> {
    /// Returns the value and whether this call ran `init`.
    pub(crate) async fn get_or_try_init<E, F, Fut>(&self, key: &str, init: F) -> Result<(V, bool), E>
    where
        F: FnOnce() -> Fut,
        Fut: Future<Output = Result<V, E>>,
    {
        let cell = {
            let mut cells = self.cells.lock().expect("single-flight map poisoned");
            cells.entry(key.to_string()).or_default().clone()
        };
        let mut ran = false;
        let value = cell
            .get_or_try_init(|| {
                ran = true;
                init()
            })
            .await?;
        Ok((value.clone(), ran))
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::bn::Evidence;
use crate::metrics::EvidenceReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Evidence on any variable.
    Analytic,
    /// Evidence restricted to the target's Markov blanket.
    Exploratory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub mode: Mode,
    pub target: Option<String>,
    pub evidence: Evidence,
    /// Extracted project values, shown alongside evidence but never propagated.
    pub project_values: Option<EvidenceReport>,
    /// Variables that may carry evidence in exploratory mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blanket: Option<BTreeSet<String>>,
}

/// Concurrent session map. Each session sits behind its own mutex, so updates to one session
/// are serialized while different sessions proceed independently.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    pub fn insert(&self, session: Session) {
        let id = session.id.clone();
        self.sessions
            .write()
            .expect("session store lock")
            .insert(id, Arc::new(Mutex::new(session)));
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.read().expect("session store lock").get(id).cloned()
    }

    pub fn remove(&self, id: &str) -> bool {
        self.sessions.write().expect("session store lock").remove(id).is_some()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copies of all sessions, ordered by id.
    pub fn snapshot(&self) -> Vec<Session> {
        let map = self.sessions.read().expect("session store lock");
        let ordered: BTreeMap<&String, &Arc<Mutex<Session>>> = map.iter().collect();
        ordered
            .values()
            .map(|s| s.lock().expect("session lock").clone())
            .collect()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(&self.snapshot()).map_err(std::io::Error::other)?;
        std::fs::write(path, json)
    }

    /// Loads sessions written by [`SessionStore::save`]. A missing file yields an empty store.
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let store = SessionStore::default();
        if !path.exists() {
            return Ok(store);
        }
        let text = std::fs::read_to_string(path)?;
        let sessions: Vec<Session> = serde_json::from_str(&text).map_err(std::io::Error::other)?;
        for s in sessions {
            store.insert(s);
        }
        Ok(store)
    }
}

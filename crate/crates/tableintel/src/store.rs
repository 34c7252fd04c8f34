//! Append-only hand store: a JSON-lines log plus an index sidecar.
//!
//! `hands.jsonl` holds one `{"hash", "hand"}` entry per stored hand and is
//! only ever appended to. `index.jsonl` maps each content hash to its
//! session, hand id and byte range in the log; it can always be rebuilt
//! from the log. A hand whose hash is already stored is skipped.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tableintel_core::HandRecord;

use crate::error::CliError;
use crate::jsonl::{self, header_line};

pub const LOG_KIND: &str = "store";
pub const INDEX_KIND: &str = "store-index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredHand {
    pub hash: String,
    pub hand: HandRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub hash: String,
    pub session: String,
    pub hand_id: u64,
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AppendSummary {
    pub added: usize,
    pub duplicates: usize,
}

/// SHA-256 of the record's JSON form, hex encoded.
pub fn content_hash(hand: &HandRecord) -> String {
    let bytes = serde_json::to_vec(hand).expect("hand records serialize");
    hex::encode(Sha256::digest(&bytes))
}

pub struct Store {
    dir: PathBuf,
    index: Vec<IndexEntry>,
    hashes: BTreeSet<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::internal(format!("{}: {e}", path.display()))
}

impl Store {
    pub fn log_path(&self) -> PathBuf {
        self.dir.join("hands.jsonl")
    }

    pub fn index_path(&self) -> PathBuf {
        self.dir.join("index.jsonl")
    }

    /// Open a store directory, creating it if needed. A missing or stale
    /// index is rebuilt from the log.
    pub fn open(dir: &Path) -> Result<Store, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
        let mut store = Store {
            dir: dir.to_path_buf(),
            index: Vec::new(),
            hashes: BTreeSet::new(),
        };
        let log = store.log_path();
        if !log.exists() {
            fs::write(&log, format!("{}\n", header_line(LOG_KIND))).map_err(|e| io_err(&log, e))?;
        }
        let index = store.index_path();
        let fresh = if index.exists() {
            let (entries, diags) = jsonl::read_file::<IndexEntry>(&index, INDEX_KIND)?;
            let log_len = fs::metadata(&log).map_err(|e| io_err(&log, e))?.len();
            let end = entries.last().map_or(0, |e| e.offset + e.len);
            let header_end = header_line(LOG_KIND).len() as u64 + 1;
            (diags.is_empty() && end.max(header_end) == log_len).then_some(entries)
        } else {
            None
        };
        match fresh {
            Some(entries) => store.set_index(entries),
            None => store.rebuild_index()?,
        }
        Ok(store)
    }

    fn set_index(&mut self, entries: Vec<IndexEntry>) {
        self.hashes = entries.iter().map(|e| e.hash.clone()).collect();
        self.index = entries;
    }

    /// Rewrite the index from the log.
    pub fn rebuild_index(&mut self) -> Result<(), CliError> {
        let log = self.log_path();
        let mut text = String::new();
        File::open(&log)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| io_err(&log, e))?;
        let mut entries = Vec::new();
        let mut offset = 0u64;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let len = line.len() as u64;
            if i > 0 && !line.trim().is_empty() {
                let stored: StoredHand = serde_json::from_str(line.trim())
                    .map_err(|e| CliError::input(format!("{}: line {}: {e}", log.display(), i + 1)))?;
                entries.push(IndexEntry {
                    hash: stored.hash,
                    session: stored.hand.session,
                    hand_id: stored.hand.hand_id,
                    offset,
                    len,
                });
            }
            offset += len;
        }
        let index = self.index_path();
        jsonl::write_file(&index, INDEX_KIND, &entries)?;
        self.set_index(entries);
        Ok(())
    }

    pub fn index(&self) -> &[IndexEntry] {
        &self.index
    }

    pub fn contains(&self, hash: &str) -> bool {
        self.hashes.contains(hash)
    }

    /// Append hands not already stored, in the order given.
    pub fn append(&mut self, hands: &[HandRecord]) -> Result<AppendSummary, CliError> {
        let log = self.log_path();
        let index = self.index_path();
        let mut log_file = OpenOptions::new()
            .append(true)
            .open(&log)
            .map_err(|e| io_err(&log, e))?;
        let mut index_file = OpenOptions::new()
            .append(true)
            .open(&index)
            .map_err(|e| io_err(&index, e))?;
        let mut offset = log_file.seek(SeekFrom::End(0)).map_err(|e| io_err(&log, e))?;
        let mut summary = AppendSummary::default();
        for hand in hands {
            let hash = content_hash(hand);
            if self.hashes.contains(&hash) {
                summary.duplicates += 1;
                continue;
            }
            let mut line = serde_json::to_string(&StoredHand {
                hash: hash.clone(),
                hand: hand.clone(),
            })
            .map_err(CliError::internal)?;
            line.push('\n');
            log_file.write_all(line.as_bytes()).map_err(|e| io_err(&log, e))?;
            let entry = IndexEntry {
                hash: hash.clone(),
                session: hand.session.clone(),
                hand_id: hand.hand_id,
                offset,
                len: line.len() as u64,
            };
            let mut idx = serde_json::to_string(&entry).map_err(CliError::internal)?;
            idx.push('\n');
            index_file.write_all(idx.as_bytes()).map_err(|e| io_err(&index, e))?;
            offset += entry.len;
            self.hashes.insert(hash);
            self.index.push(entry);
            summary.added += 1;
        }
        log_file.flush().map_err(|e| io_err(&log, e))?;
        Ok(summary)
    }

    /// Stored hands, in storage order, optionally for one session.
    pub fn hands(&self, session: Option<&str>) -> Result<Vec<HandRecord>, CliError> {
        let log = self.log_path();
        let (entries, diags) = jsonl::read_file::<StoredHand>(&log, LOG_KIND)?;
        if let Some(d) = diags.first() {
            return Err(CliError::input(format!("{}: {d}", log.display())));
        }
        Ok(entries
            .into_iter()
            .map(|s| s.hand)
            .filter(|h| session.is_none_or(|s| h.session == s))
            .collect())
    }

    /// Distinct session ids, sorted.
    pub fn sessions(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.index.iter().map(|e| e.session.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tableintel_core::record::DealerRecord;

    fn hand(id: u64, session: &str) -> HandRecord {
        HandRecord {
            hand_id: id,
            session: session.into(),
            shoe: 1,
            seats: Vec::new(),
            dealer: DealerRecord::default(),
            complete: false,
            flags: Vec::new(),
        }
    }

    #[test]
    fn append_dedupes_and_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        let hands = [hand(1, "a"), hand(2, "a"), hand(1, "b")];
        assert_eq!(
            s.append(&hands).unwrap(),
            AppendSummary {
                added: 3,
                duplicates: 0
            }
        );
        assert_eq!(
            s.append(&hands[..2]).unwrap(),
            AppendSummary {
                added: 0,
                duplicates: 2
            }
        );
        let s = Store::open(dir.path()).unwrap();
        assert_eq!(s.index().len(), 3);
        assert_eq!(s.sessions(), ["a", "b"]);
        assert_eq!(s.hands(Some("a")).unwrap(), hands[..2]);
    }

    #[test]
    fn index_rebuild_matches_incremental_index() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        s.append(&[hand(1, "a"), hand(2, "a")]).unwrap();
        s.append(&[hand(3, "a")]).unwrap();
        let incremental = fs::read(s.index_path()).unwrap();
        fs::remove_file(s.index_path()).unwrap();
        let s = Store::open(dir.path()).unwrap();
        assert_eq!(fs::read(s.index_path()).unwrap(), incremental);
    }

    #[test]
    fn index_offsets_point_at_their_lines() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        s.append(&[hand(1, "a"), hand(7, "b")]).unwrap();
        let log = fs::read(s.log_path()).unwrap();
        for e in s.index() {
            let line = &log[e.offset as usize..(e.offset + e.len) as usize];
            let stored: StoredHand = serde_json::from_slice(line).unwrap();
            assert_eq!(stored.hash, e.hash);
            assert_eq!(stored.hand.hand_id, e.hand_id);
        }
    }
}

//! Corpus loading and chunking.
//!
//! A corpus is a UTF-8 file with one song record per line (JSON object with
//! the fields `song_id`, `title`, `album`, `year`, `lyrics`). Songs are split
//! into overlapping character windows before extraction so that long lyrics
//! fit a provider's context budget; window boundaries snap backward to line
//! breaks to keep lyric lines intact.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One dated song.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Song {
    pub song_id: String,
    pub title: String,
    pub album: String,
    pub year: i32,
    pub lyrics: String,
}

/// Half-open interval of character offsets into a song's lyrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// One extraction window over a song's lyrics.
///
/// Per song, `chunk_index` runs contiguously from 0, spans cover the full
/// lyrics, and consecutive spans overlap by exactly the configured overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LyricChunk {
    pub song_id: String,
    pub chunk_index: usize,
    pub text: String,
    pub span: CharSpan,
}

/// Validated chunking parameters: window size and overlap, in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkParams {
    max_chars: usize,
    overlap: usize,
}

impl ChunkParams {
    pub const DEFAULT_MAX_CHARS: usize = 4000;
    pub const DEFAULT_OVERLAP: usize = 200;

    pub fn new(max_chars: usize, overlap: usize) -> Result<Self, CorpusError> {
        if max_chars == 0 {
            return Err(CorpusError::InvalidChunkParams(
                "max_chars must be positive".into(),
            ));
        }
        if overlap >= max_chars {
            return Err(CorpusError::InvalidChunkParams(format!(
                "overlap ({overlap}) must be smaller than max_chars ({max_chars})"
            )));
        }
        Ok(Self { max_chars, overlap })
    }

    pub fn max_chars(&self) -> usize {
        self.max_chars
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }
}

impl Default for ChunkParams {
    fn default() -> Self {
        Self {
            max_chars: Self::DEFAULT_MAX_CHARS,
            overlap: Self::DEFAULT_OVERLAP,
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: unknown field `{field}`")]
    UnknownField { line: usize, field: String },
    #[error("line {line}: duplicate song_id `{song_id}`")]
    DuplicateSongId { line: usize, song_id: String },
    #[error("line {line}: invalid song: {message}")]
    InvalidSong { line: usize, message: String },
    #[error("invalid chunk parameters: {0}")]
    InvalidChunkParams(String),
}

const SONG_FIELDS: [&str; 5] = ["song_id", "title", "album", "year", "lyrics"];

/// Load and validate a line-delimited corpus file.
///
/// In strict mode unknown fields are rejected; otherwise they are ignored
/// with a warning. Songs are returned in file order.
pub fn load_corpus(path: &Path, strict: bool) -> Result<Vec<Song>, CorpusError> {
    let file = File::open(path)?;
    parse_corpus(BufReader::new(file), strict)
}

/// Parse a corpus from any reader; see [`load_corpus`].
pub fn parse_corpus<R: BufRead>(reader: R, strict: bool) -> Result<Vec<Song>, CorpusError> {
    let mut songs = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let song = parse_song_line(&line, line_no, strict)?;
        if !seen_ids.insert(song.song_id.clone()) {
            return Err(CorpusError::DuplicateSongId {
                line: line_no,
                song_id: song.song_id,
            });
        }
        songs.push(song);
    }
    Ok(songs)
}

fn parse_song_line(line: &str, line_no: usize, strict: bool) -> Result<Song, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::Malformed {
        line: line_no,
        message: "record is not a JSON object".into(),
    })?;

    for key in obj.keys() {
        if !SONG_FIELDS.contains(&key.as_str()) {
            if strict {
                return Err(CorpusError::UnknownField {
                    line: line_no,
                    field: key.clone(),
                });
            }
            log::warn!("corpus line {line_no}: ignoring unknown field `{key}`");
        }
    }

    let text_field = |field: &'static str| -> Result<String, CorpusError> {
        let v = obj
            .get(field)
            .ok_or(CorpusError::MissingField { line: line_no, field })?;
        v.as_str()
            .map(str::to_owned)
            .ok_or_else(|| CorpusError::Malformed {
                line: line_no,
                message: format!("field `{field}` must be a string"),
            })
    };

    let year_value = obj
        .get("year")
        .ok_or(CorpusError::MissingField { line: line_no, field: "year" })?;
    let year = year_value
        .as_i64()
        .ok_or_else(|| CorpusError::Malformed {
            line: line_no,
            message: "field `year` must be an integer".into(),
        })?;

    let song = Song {
        song_id: text_field("song_id")?,
        title: text_field("title")?,
        album: text_field("album")?,
        year: year as i32,
        lyrics: text_field("lyrics")?,
    };
    validate_song(&song).map_err(|message| CorpusError::InvalidSong { line: line_no, message })?;
    Ok(song)
}

/// Check the per-song invariants (non-empty id and lyrics, sane year).
pub fn validate_song(song: &Song) -> Result<(), String> {
    if song.song_id.trim().is_empty() {
        return Err("song_id must be non-empty".into());
    }
    if song.lyrics.trim().is_empty() {
        return Err("lyrics must be non-empty after trimming".into());
    }
    if !(1900..=2100).contains(&song.year) {
        return Err(format!("year {} outside the sane range [1900, 2100]", song.year));
    }
    Ok(())
}

/// Split a song's lyrics into overlapping windows.
///
/// Windows are `max_chars` characters long. A non-final boundary moves
/// backward to the last line break found in the final 20% of the window, so
/// lyric lines are not cut mid-line; the line break itself starts the next
/// window. Each successive window starts `overlap` characters before the
/// previous one ended. Offsets are character counts, not bytes.
pub fn chunk_lyrics(song: &Song, params: &ChunkParams) -> Vec<LyricChunk> {
    let chars: Vec<char> = song.lyrics.chars().collect();
    let total = chars.len();
    let mut chunks = Vec::new();
    let mut start = 0usize;
    loop {
        let tentative_end = (start + params.max_chars).min(total);
        let end = if tentative_end == total {
            total
        } else {
            snap_to_line_break(&chars, start, tentative_end, params)
        };
        chunks.push(LyricChunk {
            song_id: song.song_id.clone(),
            chunk_index: chunks.len(),
            text: chars[start..end].iter().collect(),
            span: CharSpan { start, end },
        });
        if end == total {
            break;
        }
        start = end - params.overlap;
    }
    chunks
}

/// Move a window boundary back to the last newline in the window's final
/// 20%, provided the move keeps the next window strictly advancing.
fn snap_to_line_break(chars: &[char], start: usize, tentative_end: usize, params: &ChunkParams) -> usize {
    let snap_len = params.max_chars / 5;
    if snap_len == 0 {
        return tentative_end;
    }
    let search_from = tentative_end - snap_len;
    match chars[search_from..tentative_end].iter().rposition(|&c| c == '\n') {
        Some(offset) => {
            let pos = search_from + offset;
            if pos > start && pos > start + params.overlap {
                pos
            } else {
                tentative_end
            }
        }
        None => tentative_end,
    }
}

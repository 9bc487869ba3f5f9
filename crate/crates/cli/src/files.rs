use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::failure::{AtPath, CliResult};

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case(ext))
        {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes through a temporary file in the destination directory so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).at(&dir)?;
    tmp.write_all(bytes).at(path)?;
    tmp.persist(path).map_err(|e| e.error).at(path)?;
    Ok(())
}

/// Runs `job` on `input` (a file, or every `in_ext` file of a directory)
/// and writes the results. Directory inputs are processed in parallel and
/// land in `out/<stem>.<out_ext>`; nothing is written unless every item
/// succeeds. Returns the number of outputs.
pub fn run_batch<F>(
    input: &Path,
    in_ext: &str,
    out: &Path,
    out_ext: &str,
    job: F,
) -> CliResult<usize>
where
    F: Fn(&Path) -> CliResult<Vec<u8>> + Sync,
{
    if !input.is_dir() {
        let bytes = job(input).at(input)?;
        write_atomic(out, &bytes)?;
        return Ok(1);
    }
    let files = list_files(input, in_ext)?;
    let results: Vec<CliResult<Vec<u8>>> = files.par_iter().map(|p| job(p).at(p)).collect();
    let outputs = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    fs::create_dir_all(out).at(out)?;
    for (path, bytes) in files.iter().zip(&outputs) {
        write_atomic(&out.join(format!("{}.{out_ext}", stem(path))), bytes)?;
    }
    Ok(files.len())
}

/// Parses `HxW`.
pub fn parse_canvas(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let dim = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("invalid canvas dimension {v:?}"))
    };
    Ok((dim(h)?, dim(w)?))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).at(path)
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).at(path)
}

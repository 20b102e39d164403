//! Artifact writing: `summary.json`, `trace.csv` and `fields/*.csv`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use mems_core::grid::sig17;
use mems_core::Field;

/// Pretty JSON with every float printed to 17 significant digits.
struct Sig17Formatter<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17Formatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(sig17(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with sorted keys and 17-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    // Going through `Value` sorts object keys.
    let tree = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, Sig17Formatter(PrettyFormatter::new()));
    tree.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

/// The output directory with its fixed layout.
pub struct Artifacts {
    root: PathBuf,
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root.join("fields"))
            .with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn open(&self, rel: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(rel);
        let f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn summary<T: Serialize>(&self, summary: &T) -> Result<()> {
        let text = to_json(summary)?;
        let path = self.root.join("summary.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes `trace.csv` through `body`, which gets the open file.
    pub fn trace(&self, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        let mut w = self.open("trace.csv")?;
        body(&mut w)
            .and_then(|_| w.flush())
            .context("writing trace.csv")
    }

    pub fn field(&self, name: &str, field: &Field) -> Result<()> {
        let rel = format!("fields/{name}.csv");
        let mut w = self.open(&rel)?;
        field
            .write_csv(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {rel}"))
    }
}

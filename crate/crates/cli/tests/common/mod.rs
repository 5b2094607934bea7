#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semtune::embed_io::{write_dataset, write_embeddings, write_matrix};
use semtune::matan::gaussian_matrix;
use semtune::{EmbeddingTable, KnowledgeItem, LocalityProbe, Rephrase, TokenMatrix};
use tempfile::TempDir;

/// Two token rows whose mean is a unit vector at cosine distance `d` from
/// `[1, 0, 0]`.
pub fn tokens_at(d: f64) -> TokenMatrix {
    let a = (1.0 - d).acos();
    let (c, s) = (a.cos() as f32, a.sin() as f32);
    TokenMatrix::from_rows(&[[0.5 * c, 0.5 * s, 0.25], [1.5 * c, 1.5 * s, -0.25]]).unwrap()
}

pub fn plant(table: &mut EmbeddingTable, item: &KnowledgeItem, old: f64, new: Option<f64>) {
    table
        .insert(format!("{}#target", item.id), tokens_at(0.0))
        .unwrap();
    table
        .insert(format!("{}#old", item.id), tokens_at(old))
        .unwrap();
    if let Some(d) = new {
        table
            .insert(format!("{}#new", item.id), tokens_at(d))
            .unwrap();
    }
}

pub const WORKING_OLD: [f64; 6] = [0.9, 0.7, 0.85, 0.3, 0.6, 0.75];
pub const WORKING_NEW: [f64; 6] = [0.95, 0.2, 0.05, 0.4, 0.6, 0.5];
pub const POOL_OLD: [f64; 10] = [0.1, 0.15, 0.22, 0.35, 0.45, 0.5, 0.62, 0.8, 0.92, 0.3];

pub struct Fixture {
    pub dir: TempDir,
    pub dataset: PathBuf,
    pub pool: PathBuf,
    pub embeddings: PathBuf,
    pub w: PathBuf,
    pub dw: PathBuf,
    pub features: PathBuf,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn working_items() -> Vec<KnowledgeItem> {
    let answers = ["Paris", "Rome", "wrong", "Oslo", "nope", "Lima"];
    (0..6)
        .map(|i| {
            let mut item =
                KnowledgeItem::new(format!("w{i}"), format!("question {i}"), answers[i], "old")
                    .with_new(if i % 2 == 0 { answers[i] } else { "other" });
            item.rephrases.push(Rephrase {
                prompt: format!("rephrased {i}"),
                answer: answers[i].to_string(),
            });
            if i % 3 == 0 {
                item.locality_probes.push(LocalityProbe {
                    prompt: "unrelated".into(),
                    old_answer: "x".into(),
                    new_answer: if i == 0 { "x" } else { "y" }.into(),
                });
            }
            item
        })
        .collect()
}

fn pool_items() -> Vec<KnowledgeItem> {
    (0..10)
        .map(|i| KnowledgeItem::new(format!("p{i}"), format!("pool question {i}"), "t", "o"))
        .collect()
}

/// Dataset of 6 working items, a pool of 10, their embeddings, and three
/// small matrices, written into a fresh temporary directory.
pub fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let working = working_items();
    let pool = pool_items();
    let mut table = EmbeddingTable::new(3).unwrap();
    for (i, item) in working.iter().enumerate() {
        plant(&mut table, item, WORKING_OLD[i], Some(WORKING_NEW[i]));
    }
    for (i, item) in pool.iter().enumerate() {
        plant(&mut table, item, POOL_OLD[i], None);
    }

    let f = Fixture {
        dataset: dir.path().join("working.jsonl"),
        pool: dir.path().join("pool.jsonl"),
        embeddings: dir.path().join("answers.semb"),
        w: dir.path().join("w.smat"),
        dw: dir.path().join("dw.smat"),
        features: dir.path().join("features.smat"),
        dir,
    };
    write_dataset(&working, &f.dataset).unwrap();
    write_dataset(&pool, &f.pool).unwrap();
    write_embeddings(&table, &f.embeddings).unwrap();

    let w = gaussian_matrix(12, 10, 1);
    let dw = gaussian_matrix(12, 3, 2)
        .matmul(&gaussian_matrix(3, 10, 3))
        .unwrap();
    write_matrix(&w, &f.w).unwrap();
    write_matrix(&dw, &f.dw).unwrap();
    write_matrix(&gaussian_matrix(30, 6, 4), &f.features).unwrap();
    f
}

pub fn semtune<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_semtune"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

/// Argument lists for every subcommand against `f`, writing into `out`.
pub fn all_subcommands(f: &Fixture, out: &Path) -> Vec<(&'static str, Vec<String>)> {
    let out = arg(out);
    let data = |cmd: &str| {
        vec![
            cmd.to_string(),
            "--dataset".into(),
            arg(&f.dataset),
            "--embeddings".into(),
            arg(&f.embeddings),
            "--out-dir".into(),
            out.clone(),
        ]
    };
    let with = |mut base: Vec<String>, extra: &[&str]| {
        base.extend(extra.iter().map(|s| s.to_string()));
        base
    };
    vec![
        ("distance", data("distance")),
        (
            "score",
            vec![
                "score".into(),
                "--dataset".into(),
                arg(&f.dataset),
                "--out-dir".into(),
                out.clone(),
            ],
        ),
        ("deviation", data("deviation")),
        (
            "bin-report",
            with(data("bin-report"), &["--bin-width", "0.1"]),
        ),
        (
            "filter",
            with(
                data("filter"),
                &[
                    "--pool",
                    &arg(&f.pool),
                    "--lambda",
                    "0.5",
                    "--replace-fraction",
                    "0.5",
                    "--baseline",
                    "random",
                    "--seed",
                    "7",
                ],
            ),
        ),
        ("reweight", with(data("reweight"), &["--gamma", "2"])),
        (
            "svd-project",
            vec![
                "svd-project".into(),
                "--w".into(),
                arg(&f.w),
                "--dw".into(),
                arg(&f.dw),
                "--rank".into(),
                "3".into(),
                "--seed".into(),
                "11".into(),
                "--out-dir".into(),
                out.clone(),
            ],
        ),
        (
            "pca",
            vec![
                "pca".into(),
                "--features".into(),
                arg(&f.features),
                "--components".into(),
                "4".into(),
                "--projections".into(),
                "--out-dir".into(),
                out.clone(),
            ],
        ),
        (
            "validate",
            with(
                data("validate"),
                &["--matrix", &arg(&f.w), "--matrix", &arg(&f.dw)],
            ),
        ),
    ]
}

use semtune::embed_io::{decode_dataset, encode_dataset};
use semtune::{
    binned_report, deviation_analysis, score_dataset, EmbeddingTable, KnowledgeItem, LocalityProbe,
    Rephrase, StatSet, TokenMatrix,
};

/// Unit vector whose cosine distance to `[1, 0]` is `d`.
fn at_distance(d: f64) -> TokenMatrix {
    let angle = (1.0 - d).acos();
    TokenMatrix::from_rows(&[[angle.cos() as f32, angle.sin() as f32]]).unwrap()
}

fn plant(table: &mut EmbeddingTable, id: &str, d_old: f64, d_new: Option<f64>) {
    table
        .insert(format!("{id}#target"), at_distance(0.0))
        .unwrap();
    table
        .insert(format!("{id}#old"), at_distance(d_old))
        .unwrap();
    if let Some(d) = d_new {
        table.insert(format!("{id}#new"), at_distance(d)).unwrap();
    }
}

fn rephrase(answer: &str) -> Rephrase {
    Rephrase {
        prompt: "rephrased".into(),
        answer: answer.into(),
    }
}

fn probe(old: &str, new: &str) -> LocalityProbe {
    LocalityProbe {
        prompt: "unrelated".into(),
        old_answer: old.into(),
        new_answer: new.into(),
    }
}

#[test]
fn ten_item_hand_counts() {
    // correct: k0 k2 k4 k5 k9 -> 5/10
    // rephrases: 14 total, 10 matching (" T" trims to "T")
    // probes: 8 total, 6 unchanged
    type Row<'a> = (&'a str, &'a [&'a str], &'a [(&'a str, &'a str)]);
    let spec: [Row; 10] = [
        ("T", &["T", "T"], &[("a", "a")]),
        ("X", &["T"], &[]),
        ("T", &["X", "T", "T"], &[("a", "b")]),
        ("x", &[], &[("a", "a"), ("b", "b")]),
        (" T ", &["T"], &[]),
        ("T", &["T", "t"], &[("c", "c")]),
        ("Y", &[], &[("a", "z")]),
        ("Z", &["T", " T"], &[]),
        ("t", &["Y"], &[("q", "q"), ("r", "r")]),
        ("T", &["T", "X"], &[]),
    ];
    let items: Vec<KnowledgeItem> = spec
        .iter()
        .enumerate()
        .map(|(i, (new, reph, probes))| {
            let mut item = KnowledgeItem::new(format!("k{i}"), "p", "T", "O").with_new(*new);
            item.rephrases = reph.iter().map(|a| rephrase(a)).collect();
            item.locality_probes = probes.iter().map(|(o, n)| probe(o, n)).collect();
            item
        })
        .collect();
    let r = score_dataset(&items).unwrap();
    assert_eq!(r.n_items, 10);
    assert_eq!(r.accuracy, 5.0 / 10.0);
    assert_eq!(r.n_rephrases, 14);
    assert_eq!(r.generality, Some(10.0 / 14.0));
    assert_eq!(r.n_probes, 8);
    assert_eq!(r.locality, Some(6.0 / 8.0));
}

#[test]
fn twenty_items_thirteen_deviate() {
    let mut table = EmbeddingTable::new(2).unwrap();
    let mut items = Vec::new();
    for i in 0..20 {
        let id = format!("k{i:02}");
        let d_old = 0.2 + 0.03 * i as f64;
        let d_new = if i < 13 { d_old + 0.1 } else { d_old - 0.1 };
        plant(&mut table, &id, d_old, Some(d_new));
        items.push(KnowledgeItem::new(id, "p", "T", "O").with_new("wrong"));
    }
    let rep = deviation_analysis(&items, &table).unwrap();
    assert_eq!(rep.summary.n_deviated, 13);
    assert_eq!(rep.summary.proportion_all, 0.65);
    assert_eq!(rep.summary.proportion_bad_cases, Some(0.65));
    for rec in &rep.records {
        assert_eq!(rec.deviated, rec.rd.unwrap() > 0.0);
    }
}

#[test]
fn planted_bin_accuracies() {
    // Ten items per 0.1-wide bin over [0, 1); bin b has b correct answers
    // and its first (b % 3) items deviate.
    let mut table = EmbeddingTable::new(2).unwrap();
    let mut items = Vec::new();
    for b in 0..10 {
        for j in 0..10 {
            let id = format!("b{b}j{j}");
            let d_old = 0.1 * b as f64 + 0.02 + 0.006 * j as f64;
            let d_new = if j < b % 3 { d_old + 0.5 } else { d_old * 0.5 };
            plant(&mut table, &id, d_old, Some(d_new));
            let new = if j < b { "T" } else { "nope" };
            items.push(KnowledgeItem::new(id, "p", "T", "O").with_new(new));
        }
    }
    let rep = binned_report(&items, &table, 0.1, StatSet::default()).unwrap();
    assert_eq!(rep.bins.len(), 20);
    assert_eq!(rep.bins.iter().map(|b| b.n_items).sum::<usize>(), 100);
    for (b, bin) in rep.bins.iter().enumerate() {
        if b < 10 {
            assert_eq!(bin.n_items, 10, "bin {b}");
            assert_eq!(bin.accuracy, Some(b as f64 / 10.0));
            assert_eq!(bin.deviation_proportion, Some((b % 3) as f64 / 10.0));
        } else {
            assert_eq!(bin.n_items, 0);
            assert_eq!(bin.accuracy, None);
            assert_eq!(bin.mean_rd, None);
        }
    }
}

#[test]
fn merging_adjacent_bins_matches_double_width() {
    let mut table = EmbeddingTable::new(2).unwrap();
    let mut items = Vec::new();
    for i in 0..120 {
        let id = format!("k{i:03}");
        plant(&mut table, &id, (i as f64 * 0.0161) % 1.99, None);
        items.push(KnowledgeItem::new(id, "p", "T", "O"));
    }
    let counts_only = StatSet {
        accuracy: false,
        deviation: false,
    };
    for m in 1..=10 {
        let w = 1.0 / (2 * m) as f64;
        let fine = binned_report(&items, &table, w, counts_only).unwrap();
        let coarse = binned_report(&items, &table, 2.0 * w, counts_only).unwrap();
        assert_eq!(fine.bins.len(), 2 * coarse.bins.len());
        for (i, bin) in coarse.bins.iter().enumerate() {
            let merged = fine.bins[2 * i].n_items + fine.bins[2 * i + 1].n_items;
            assert_eq!(bin.n_items, merged, "width {w}, bin {i}");
        }
    }
}

#[test]
fn hundred_item_dataset_keeps_order() {
    let items: Vec<KnowledgeItem> = (0..100)
        .rev()
        .map(|i| {
            let mut item = KnowledgeItem::new(format!("q{i}"), format!("prompt {i}"), "T", "O");
            if i % 2 == 0 {
                item.new = Some(format!("answer {i}"));
            }
            if i % 5 == 0 {
                item.rephrases.push(rephrase("T"));
            }
            item
        })
        .collect();
    let text = encode_dataset(&items);
    let back = decode_dataset(&text).unwrap();
    assert_eq!(back.len(), 100);
    let ids: Vec<_> = back.iter().map(|i| i.id.as_str()).collect();
    let expected: Vec<String> = (0..100).rev().map(|i| format!("q{i}")).collect();
    assert_eq!(ids, expected);
    assert_eq!(back, items);
}

use std::collections::BTreeSet;
use std::io::{BufReader, Cursor, Read};

use proptest::prelude::*;

use lexcorpus::corpus::{ingest_stream, reservoir_indices, split_validation, CorpusStats, RawDocument};

proptest! {
    #[test]
    fn split_partitions_the_input(len in 0usize..200, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let n = (len as f64 * frac).floor() as usize;
        let ids: Vec<String> = (0..len).map(|i| format!("d{i}")).collect();
        let (train, val) = split_validation(ids.clone(), n, seed).unwrap();
        prop_assert_eq!(val.len(), n);
        prop_assert_eq!(train.len() + val.len(), len);
        let a: BTreeSet<_> = train.iter().collect();
        let b: BTreeSet<_> = val.iter().collect();
        prop_assert!(a.is_disjoint(&b));
        let all: BTreeSet<_> = ids.iter().collect();
        prop_assert_eq!(a.union(&b).copied().collect::<BTreeSet<_>>(), all);
        // Both halves keep input order.
        let pos = |s: &String| ids.iter().position(|x| x == s).unwrap();
        prop_assert!(train.windows(2).all(|w| pos(&w[0]) < pos(&w[1])));
        prop_assert!(val.windows(2).all(|w| pos(&w[0]) < pos(&w[1])));
    }

    #[test]
    fn split_is_reproducible(len in 1usize..100, seed in any::<u64>()) {
        let n = len / 3;
        let ids: Vec<usize> = (0..len).collect();
        prop_assert_eq!(
            split_validation(ids.clone(), n, seed).unwrap(),
            split_validation(ids, n, seed).unwrap()
        );
    }

    #[test]
    fn oversized_request_fails(len in 0usize..50, extra in 1usize..10) {
        prop_assert!(split_validation(vec![0; len], len + extra, 1).is_err());
    }

    #[test]
    fn stats_merge_like_a_single_pass(texts in prop::collection::vec(("[a-z ]{0,20}", "[A-C]?"), 0..40), cut in any::<prop::sample::Index>()) {
        let docs: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, (t, r))| RawDocument::new(format!("d{i}"), t.clone()).with_region(r.clone()))
            .collect();
        let k = if docs.is_empty() { 0 } else { cut.index(docs.len() + 1) };
        let whole = lexcorpus::compute_stats(&docs);
        let merged = lexcorpus::compute_stats(&docs[..k]).merge(lexcorpus::compute_stats(&docs[k..]));
        prop_assert_eq!(&whole, &merged);
        prop_assert_eq!(whole.document_count as usize, docs.len());
        prop_assert_eq!(whole.total_bytes as usize, texts.iter().map(|(t, _)| t.len()).sum::<usize>());
    }
}

#[test]
fn reservoir_is_roughly_uniform() {
    // Each of 20 items should be drawn about n/20 of the time.
    let mut hits = [0u32; 20];
    for seed in 0..4000 {
        for i in reservoir_indices(0..20, 5, seed).unwrap() {
            hits[i] += 1;
        }
    }
    let expected = 4000.0 * 5.0 / 20.0;
    for h in hits {
        assert!((h as f64 - expected).abs() < 0.1 * expected, "{hits:?}");
    }
}

/// Generates JSONL documents on demand so the stream never exists in memory.
struct SyntheticCorpus {
    next: u64,
    total: u64,
    line: Vec<u8>,
    pos: usize,
}

impl Read for SyntheticCorpus {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.pos == self.line.len() {
            if self.next == self.total {
                return Ok(0);
            }
            let region = ["AN", "CT", "GA", "PV"][(self.next % 4) as usize];
            self.line = format!(
                "{{\"id\":\"s{}\",\"source\":\"gen\",\"region\":\"{region}\",\"text\":\"{}\"}}\n",
                self.next,
                "Se acuerda la publicación de la presente resolución. ".repeat(8)
            )
            .into_bytes();
            self.pos = 0;
            self.next += 1;
        }
        let n = buf.len().min(self.line.len() - self.pos);
        buf[..n].copy_from_slice(&self.line[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

#[test]
fn stats_stream_over_a_large_generated_corpus() {
    let total = 200_000;
    let source = SyntheticCorpus { next: 0, total, line: Vec::new(), pos: 0 };
    let mut stats = CorpusStats::default();
    for doc in ingest_stream(BufReader::new(source), false) {
        stats.push(&doc.unwrap());
    }
    assert_eq!(stats.document_count, total);
    assert_eq!(stats.per_region_counts["CT"], total / 4);
    assert_eq!(stats.total_bytes, total * 8 * "Se acuerda la publicación de la presente resolución. ".len() as u64);
}

#[test]
fn lenient_ingest_counts_the_malformed_line() {
    let input = "{\"id\":\"a\",\"text\":\"x\"}\nnot json\n{\"id\":\"b\",\"text\":\"y\"}\n";
    let mut reader = ingest_stream(Cursor::new(input), false);
    let ids: Vec<_> = reader.by_ref().map(|d| d.unwrap().id).collect();
    assert_eq!(ids, ["a", "b"]);
    assert_eq!(reader.skipped(), 1);
    assert_eq!(reader.skipped_lines(), &[2]);
}

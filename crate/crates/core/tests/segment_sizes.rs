mod common;

use morphtok::bpe::{train, Algorithm};
use morphtok::metrics::segment_size_by_length;
use morphtok::ScriptProfile;

use common::{hindi_frequencies, sample_text, word_counts};

#[test]
fn cbpe_splits_long_words_into_fewer_pieces() {
    let freqs = hindi_frequencies();
    let counts = word_counts(&sample_text(&freqs, 256 << 10, 3));
    let p = ScriptProfile::devanagari();
    let bpe = train(counts.clone(), 2000, Algorithm::Bpe, None).unwrap().model;
    let cbpe = train(counts.clone(), 2000, Algorithm::Cbpe, Some(&p)).unwrap().model;
    let held_out: Vec<String> = word_counts(&sample_text(&freqs, 128 << 10, 4)).into_keys().collect();

    let table = segment_size_by_length(&held_out, &bpe, &cbpe).unwrap();
    let (mean_bpe, mean_cbpe) = table.overall().expect("some words differ");
    assert!(mean_cbpe < mean_bpe, "BPE {mean_bpe:.3} vs CBPE {mean_cbpe:.3}");
    assert_eq!(table.compared() + table.excluded, held_out.len());
    for row in table.rows.iter().filter(|r| r.words >= 20) {
        assert!(row.mean_b <= row.mean_a, "length {}: {row:?}", row.length);
    }
}

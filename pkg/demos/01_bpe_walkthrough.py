"""Walk through BPE training on the classic four-word frequency table.

Shows each learned merge, then segments unseen words with the model and
inverts the segmentation.
"""

from tigmt.subword import apply_bpe, count_words, decode_bpe, train_bpe, vocabulary

counts = {"low": 5, "lower": 2, "newest": 6, "widest": 3}
print("word frequency table:", counts)

model = train_bpe(counts, num_merges=5)
print("\nlearned merges (in order):")
for i, (left, right) in enumerate(model.merges, 1):
    print(f"  {i}. {left!r} + {right!r} -> {left + right!r}")

print("\nsegmenting unseen text:")
for sentence in (["lowest", "newer"], ["wide", "low"]):
    segmented = apply_bpe(sentence, model)
    restored = decode_bpe(segmented, model.eow_marker)
    print(f"  {sentence} -> {segmented} -> {restored}")
    assert restored == sentence

vocab = vocabulary(model, counts)
print(f"\nvocabulary ({len(vocab)} symbols): {vocab}")

# counting straight from raw text works too
lines = ["low low lower", "newest newest widest"]
print("\ncounts from text:", dict(count_words(line.split() for line in lines)))

#pragma once
// Shared data model: byte spans anchored to the source text, scored tokens,
// lexical units, run configuration, and compression results. Everything is
// immutable after construction; documents are validated, not mutated.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ctxpress {

// Byte offsets into the source text, end exclusive. Offsets must land on
// UTF-8 character boundaries.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool empty() const { return start == end; }
  bool operator==(const Span&) const = default;
};

enum class UnitKind { token, phrase, sentence };
enum class ScoringMode { sentence_wise, whole_context };
enum class JoinerMode { source_whitespace, single_space };

const char* to_string(UnitKind kind);
const char* to_string(ScoringMode mode);
const char* to_string(JoinerMode joiner);
UnitKind unit_kind_from_string(std::string_view s);
ScoringMode scoring_mode_from_string(std::string_view s);
JoinerMode joiner_from_string(std::string_view s);

// One provider token re-based to absolute document offsets. logprob_nat is
// the natural-log probability (<= 0) and may be absent when the provider
// does not score the first token of a request; self_info_bits is then
// imputed and the conversion invariant does not apply.
struct Token {
  Span span;
  std::string text;
  std::optional<double> logprob_nat;
  double self_info_bits = 0.0;
};

// Contiguous half-open index range into a document's token sequence.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool operator==(const TokenRange&) const = default;
};

// The filtering granule: a token, noun phrase, or sentence. self_info_bits
// is the sum over the tokens in token_range.
struct LexicalUnit {
  UnitKind kind = UnitKind::phrase;
  Span span;
  TokenRange token_range;
  double self_info_bits = 0.0;
};

struct ScoredDocument {
  std::string source;
  std::vector<Token> tokens;
  std::vector<LexicalUnit> units;
  std::vector<Span> sentence_spans;
  std::string model_id;
  ScoringMode scoring_mode = ScoringMode::sentence_wise;
};

struct CompressionConfig {
  // Percentile p in [0, 100]; the CLI's --ratio r maps to p = 100 * r.
  double reduction_ratio_p = 50.0;
  UnitKind unit_kind = UnitKind::phrase;
  ScoringMode scoring_mode = ScoringMode::sentence_wise;
  // Percentile method is fixed to linear interpolation between closest ranks.
  std::uint64_t seed = 0;
  JoinerMode joiner = JoinerMode::source_whitespace;
};

struct CompressionStats {
  std::size_t units_total = 0;
  std::size_t units_retained = 0;
  std::size_t tokens_total = 0;
  std::size_t tokens_retained = 0;
  std::size_t chars_total = 0;
  std::size_t chars_retained = 0;

  bool operator==(const CompressionStats&) const = default;
};

struct CompressionResult {
  std::vector<std::size_t> retained_unit_indices;
  std::string compressed_text;
  // NaN when selection was random (no percentile threshold).
  double threshold_bits = 0.0;
  CompressionStats stats;
};

// Relative-tolerance comparison used throughout: |a - b| <= tol * max(1, |b|).
bool within_rel(double a, double b, double tol);

// True when pos is 0, source.size(), or the byte at pos starts a UTF-8
// character (not a continuation byte).
bool is_char_boundary(std::string_view source, std::size_t pos);

std::size_t count_chars(std::string_view text);

// Exact substring at span. Throws std::out_of_range for out-of-bounds spans
// or spans that split a multi-byte character.
std::string_view slice(std::string_view source, Span span);

// Returns one message per violated invariant; empty means the document is
// well formed. Violations are data, not errors.
std::vector<std::string> validate_document(const ScoredDocument& doc);

// The byte region the token sequence is expected to tile. In sentence_wise
// mode tokens tile each sentence span exactly; in whole_context mode the
// single request covers the contiguous hull of the sentence spans, so the
// inter-sentence whitespace belongs to tokens as well.
std::vector<Span> scored_regions(const std::vector<Span>& sentence_spans, ScoringMode mode);

// Canonical JSON: spans and token ranges as two-element arrays, reals as
// JSON numbers at full precision, absent logprobs omitted. One document per
// line in .jsonl files.
nlohmann::json to_json(const ScoredDocument& doc);
nlohmann::json to_json(const CompressionResult& result);
ScoredDocument document_from_json(const nlohmann::json& j);
CompressionResult result_from_json(const nlohmann::json& j);

}  // namespace ctxpress

#include "ctxpress/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ctxpress {

namespace {

constexpr double kSumRelTol = 1e-9;
constexpr double kConvRelTol = 1e-12;

bool is_continuation_byte(unsigned char c) { return (c & 0xC0) == 0x80; }

void require_valid_span(std::string_view source, Span span) {
  if (span.start > span.end || span.end > source.size()) {
    throw std::out_of_range("span [" + std::to_string(span.start) + "," +
                            std::to_string(span.end) + ") out of bounds for source of size " +
                            std::to_string(source.size()));
  }
  if (!is_char_boundary(source, span.start) || !is_char_boundary(source, span.end)) {
    throw std::out_of_range("span [" + std::to_string(span.start) + "," +
                            std::to_string(span.end) + ") splits a multi-byte character");
  }
}

bool span_ok(std::string_view source, Span span) {
  return span.start <= span.end && span.end <= source.size() &&
         is_char_boundary(source, span.start) && is_char_boundary(source, span.end);
}

}  // namespace

const char* to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::token: return "token";
    case UnitKind::phrase: return "phrase";
    case UnitKind::sentence: return "sentence";
  }
  return "phrase";
}

const char* to_string(ScoringMode mode) {
  return mode == ScoringMode::sentence_wise ? "sentence_wise" : "whole_context";
}

const char* to_string(JoinerMode joiner) {
  return joiner == JoinerMode::source_whitespace ? "source_whitespace" : "single_space";
}

UnitKind unit_kind_from_string(std::string_view s) {
  if (s == "token") return UnitKind::token;
  if (s == "phrase") return UnitKind::phrase;
  if (s == "sentence") return UnitKind::sentence;
  throw std::invalid_argument("unknown unit kind: " + std::string(s));
}

ScoringMode scoring_mode_from_string(std::string_view s) {
  if (s == "sentence_wise") return ScoringMode::sentence_wise;
  if (s == "whole_context") return ScoringMode::whole_context;
  throw std::invalid_argument("unknown scoring mode: " + std::string(s));
}

JoinerMode joiner_from_string(std::string_view s) {
  if (s == "source_whitespace") return JoinerMode::source_whitespace;
  if (s == "single_space") return JoinerMode::single_space;
  throw std::invalid_argument("unknown joiner: " + std::string(s));
}

bool within_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

bool is_char_boundary(std::string_view source, std::size_t pos) {
  if (pos == 0 || pos == source.size()) return true;
  if (pos > source.size()) return false;
  return !is_continuation_byte(static_cast<unsigned char>(source[pos]));
}

std::size_t count_chars(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if (!is_continuation_byte(c)) ++n;
  }
  return n;
}

std::string_view slice(std::string_view source, Span span) {
  require_valid_span(source, span);
  return source.substr(span.start, span.size());
}

std::vector<Span> scored_regions(const std::vector<Span>& sentence_spans, ScoringMode mode) {
  if (sentence_spans.empty()) return {};
  if (mode == ScoringMode::whole_context) {
    return {Span{sentence_spans.front().start, sentence_spans.back().end}};
  }
  return sentence_spans;
}

std::vector<std::string> validate_document(const ScoredDocument& doc) {
  std::vector<std::string> violations;
  auto report = [&](std::string msg) { violations.push_back(std::move(msg)); };

  for (std::size_t i = 0; i < doc.sentence_spans.size(); ++i) {
    const Span s = doc.sentence_spans[i];
    if (!span_ok(doc.source, s)) {
      report("sentence span " + std::to_string(i) + " invalid");
      return violations;  // offsets unusable, later checks would be noise
    }
    if (i > 0 && s.start < doc.sentence_spans[i - 1].end) {
      report("sentence spans overlap at index " + std::to_string(i));
    }
  }

  for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
    const Token& t = doc.tokens[i];
    if (!span_ok(doc.source, t.span)) {
      report("token " + std::to_string(i) + " span invalid");
      continue;
    }
    if (t.text != slice(doc.source, t.span)) {
      report("token " + std::to_string(i) + " text does not match source slice");
    }
    if (t.self_info_bits < 0.0) {
      report("token " + std::to_string(i) + " has negative self-information");
    }
    if (t.logprob_nat.has_value()) {
      if (*t.logprob_nat > 0.0) {
        report("token " + std::to_string(i) + " has positive log-probability");
      } else if (!within_rel(t.self_info_bits, -*t.logprob_nat / std::numbers::ln2, kConvRelTol)) {
        report("token " + std::to_string(i) + " bits disagree with logprob conversion");
      }
    }
    if (i > 0 && t.span.start < doc.tokens[i - 1].span.end) {
      report("tokens overlap at index " + std::to_string(i));
    }
  }

  // Tokens tile the scored region of their mode, in order and gap free.
  const std::vector<Span> regions = scored_regions(doc.sentence_spans, doc.scoring_mode);
  std::size_t ti = 0;
  bool tiling_ok = true;
  for (const Span& region : regions) {
    std::size_t pos = region.start;
    while (pos < region.end) {
      if (ti >= doc.tokens.size() || doc.tokens[ti].span.start != pos ||
          doc.tokens[ti].span.end > region.end || doc.tokens[ti].span.empty()) {
        tiling_ok = false;
        break;
      }
      pos = doc.tokens[ti].span.end;
      ++ti;
    }
    if (!tiling_ok) break;
  }
  if (tiling_ok && ti != doc.tokens.size()) tiling_ok = false;
  if (!tiling_ok) report("tokens do not tile the scored region");

  for (std::size_t i = 0; i < doc.units.size(); ++i) {
    const LexicalUnit& u = doc.units[i];
    if (!span_ok(doc.source, u.span)) {
      report("unit " + std::to_string(i) + " span invalid");
      continue;
    }
    if (i > 0 && u.span.start < doc.units[i - 1].span.end) {
      report("units overlap at index " + std::to_string(i));
    }
    if (u.token_range.empty()) {
      report("unit " + std::to_string(i) + " has empty token range");
      continue;
    }
    if (u.token_range.end > doc.tokens.size() || u.token_range.begin > u.token_range.end) {
      report("unit " + std::to_string(i) + " token range out of bounds");
      continue;
    }
    double sum = 0.0;
    for (std::size_t k = u.token_range.begin; k < u.token_range.end; ++k) {
      sum += doc.tokens[k].self_info_bits;
      const Span ts = doc.tokens[k].span;
      if (ts.end <= u.span.start || ts.start >= u.span.end) {
        report("unit " + std::to_string(i) + " token " + std::to_string(k) +
               " lies outside the unit span");
      }
    }
    if (u.self_info_bits < 0.0) {
      report("unit " + std::to_string(i) + " has negative self-information");
    }
    if (!within_rel(u.self_info_bits, sum, kSumRelTol)) {
      report("unit " + std::to_string(i) + " additivity violated");
    }
  }

  // Token ranges must partition the token sequence.
  std::size_t expected = doc.units.empty() ? 0 : doc.units.front().token_range.begin;
  if (!doc.units.empty() && expected != 0) {
    report("unit 0 token range does not start at token 0");
  }
  for (std::size_t i = 0; i < doc.units.size(); ++i) {
    const TokenRange r = doc.units[i].token_range;
    if (r.begin != expected) {
      report("unit " + std::to_string(i) + " token range not contiguous with predecessor");
      break;
    }
    expected = r.end;
  }
  if (!doc.units.empty() && violations.empty() && expected != doc.tokens.size()) {
    report("unit token ranges do not cover all tokens");
  }

  return violations;
}

namespace {

nlohmann::json span_to_json(Span s) { return nlohmann::json::array({s.start, s.end}); }

Span span_from_json(const nlohmann::json& j) {
  return Span{j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
}

}  // namespace

nlohmann::json to_json(const ScoredDocument& doc) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const Token& t : doc.tokens) {
    nlohmann::json jt{{"span", span_to_json(t.span)},
                      {"text", t.text},
                      {"self_info_bits", t.self_info_bits}};
    if (t.logprob_nat.has_value()) jt["logprob_nat"] = *t.logprob_nat;
    tokens.push_back(std::move(jt));
  }
  nlohmann::json units = nlohmann::json::array();
  for (const LexicalUnit& u : doc.units) {
    units.push_back({{"kind", to_string(u.kind)},
                     {"span", span_to_json(u.span)},
                     {"token_range", nlohmann::json::array({u.token_range.begin, u.token_range.end})},
                     {"self_info_bits", u.self_info_bits}});
  }
  nlohmann::json sentences = nlohmann::json::array();
  for (const Span& s : doc.sentence_spans) sentences.push_back(span_to_json(s));
  return nlohmann::json{{"source", doc.source},
                        {"tokens", std::move(tokens)},
                        {"units", std::move(units)},
                        {"sentence_spans", std::move(sentences)},
                        {"model_id", doc.model_id},
                        {"scoring_mode", to_string(doc.scoring_mode)}};
}

ScoredDocument document_from_json(const nlohmann::json& j) {
  ScoredDocument doc;
  doc.source = j.at("source").get<std::string>();
  doc.model_id = j.at("model_id").get<std::string>();
  doc.scoring_mode = scoring_mode_from_string(j.at("scoring_mode").get<std::string>());
  for (const auto& jt : j.at("tokens")) {
    Token t;
    t.span = span_from_json(jt.at("span"));
    t.text = jt.at("text").get<std::string>();
    t.self_info_bits = jt.at("self_info_bits").get<double>();
    if (jt.contains("logprob_nat")) t.logprob_nat = jt.at("logprob_nat").get<double>();
    doc.tokens.push_back(std::move(t));
  }
  for (const auto& ju : j.at("units")) {
    LexicalUnit u;
    u.kind = unit_kind_from_string(ju.at("kind").get<std::string>());
    u.span = span_from_json(ju.at("span"));
    u.token_range = TokenRange{ju.at("token_range").at(0).get<std::size_t>(),
                               ju.at("token_range").at(1).get<std::size_t>()};
    u.self_info_bits = ju.at("self_info_bits").get<double>();
    doc.units.push_back(u);
  }
  for (const auto& js : j.at("sentence_spans")) doc.sentence_spans.push_back(span_from_json(js));
  return doc;
}

nlohmann::json to_json(const CompressionResult& result) {
  nlohmann::json j{{"retained_unit_indices", result.retained_unit_indices},
                   {"compressed_text", result.compressed_text},
                   {"stats",
                    {{"units_total", result.stats.units_total},
                     {"units_retained", result.stats.units_retained},
                     {"tokens_total", result.stats.tokens_total},
                     {"tokens_retained", result.stats.tokens_retained},
                     {"chars_total", result.stats.chars_total},
                     {"chars_retained", result.stats.chars_retained}}}};
  if (std::isnan(result.threshold_bits)) {
    j["threshold_bits"] = nullptr;
  } else {
    j["threshold_bits"] = result.threshold_bits;
  }
  return j;
}

CompressionResult result_from_json(const nlohmann::json& j) {
  CompressionResult r;
  r.retained_unit_indices = j.at("retained_unit_indices").get<std::vector<std::size_t>>();
  r.compressed_text = j.at("compressed_text").get<std::string>();
  const auto& jt = j.at("threshold_bits");
  r.threshold_bits = jt.is_null() ? std::numeric_limits<double>::quiet_NaN() : jt.get<double>();
  const auto& js = j.at("stats");
  r.stats.units_total = js.at("units_total").get<std::size_t>();
  r.stats.units_retained = js.at("units_retained").get<std::size_t>();
  r.stats.tokens_total = js.at("tokens_total").get<std::size_t>();
  r.stats.tokens_retained = js.at("tokens_retained").get<std::size_t>();
  r.stats.chars_total = js.at("chars_total").get<std::size_t>();
  r.stats.chars_retained = js.at("chars_retained").get<std::size_t>();
  return r;
}

}  // namespace ctxpress

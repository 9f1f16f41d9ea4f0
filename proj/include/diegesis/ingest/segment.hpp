#pragma once

#include <cstddef>
#include <cstdio>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "diegesis/core/error.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/core/utf8.hpp"
#include "diegesis/ingest/types.hpp"

namespace diegesis {

struct SegmentOptions {
  std::size_t span_budget = 4000;  // in Unicode scalar values
};

struct Chapter {
  std::size_t index = 0;
  std::string heading;  // heading line, trimmed; empty for the fallback chapter
  CharRange body;
};

struct Segmentation {
  std::vector<Chapter> chapters;
  std::vector<Span> spans;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string span_id(std::size_t chapter, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%03zu-s%03zu", chapter, index);
  return buf;
}

// Byte offset reached after advancing `count` scalar values from `from`.
inline std::size_t advance_scalars(std::string_view doc, std::size_t from, std::size_t count) {
  std::size_t i = from;
  while (i < doc.size() && count > 0) {
    ++i;
    while (i < doc.size() && utf8::is_continuation(doc[i])) ++i;
    --count;
  }
  return i;
}

// Non-blank paragraphs of doc[range), separated by blank lines, trimmed.
inline std::vector<CharRange> paragraphs(std::string_view doc, CharRange range) {
  std::vector<CharRange> out;
  std::size_t pos = range.start;
  std::size_t para_start = std::string_view::npos;
  std::size_t para_end = 0;
  while (pos < range.end) {
    std::size_t eol = doc.find('\n', pos);
    if (eol == std::string_view::npos || eol > range.end) eol = range.end;
    const auto line = doc.substr(pos, eol - pos);
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) {
      if (para_start != std::string_view::npos) out.push_back({para_start, para_end});
      para_start = std::string_view::npos;
    } else {
      const std::size_t ls = static_cast<std::size_t>(trimmed.data() - doc.data());
      if (para_start == std::string_view::npos) para_start = ls;
      para_end = ls + trimmed.size();
    }
    pos = eol + 1;
  }
  if (para_start != std::string_view::npos) out.push_back({para_start, para_end});
  return out;
}

// Splits an over-long paragraph into pieces of at most `budget` scalars,
// preferring the last whitespace inside the window.
inline std::vector<CharRange> split_long(std::string_view doc, CharRange para, std::size_t budget) {
  std::vector<CharRange> out;
  std::size_t start = para.start;
  while (start < para.end) {
    std::size_t limit = advance_scalars(doc, start, budget);
    if (limit >= para.end) {
      out.push_back({start, para.end});
      break;
    }
    std::size_t cut = limit;
    while (cut > start && !text::is_space(doc[cut])) --cut;
    if (cut == start) cut = limit;  // single word longer than the budget
    const auto piece = text::trim(doc.substr(start, cut - start));
    const std::size_t ps = static_cast<std::size_t>(piece.data() - doc.data());
    out.push_back({ps, ps + piece.size()});
    start = cut;
    while (start < para.end && text::is_space(doc[start])) ++start;
  }
  return out;
}

}  // namespace detail

// Splits a plain-text novel into chapters (lines matching chapter_pattern)
// and each chapter into paragraph-aligned spans within the budget. Text
// before the first heading is front matter and is skipped.
inline Segmentation segment_novel(std::string_view document, std::string_view chapter_pattern,
                                  const SegmentOptions& options = {}) {
  if (text::trim(document).empty()) fail(ErrorKind::invalid_argument, "empty document");
  if (options.span_budget == 0) fail(ErrorKind::invalid_argument, "span budget must be positive");
  std::regex pattern;
  try {
    pattern = std::regex(std::string(chapter_pattern), std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    fail(ErrorKind::invalid_argument, "chapter pattern does not compile: " + std::string(e.what()));
  }

  Segmentation out;
  struct Heading {
    std::size_t line_start, line_end;
  };
  std::vector<Heading> headings;
  std::size_t pos = 0;
  while (pos < document.size()) {
    std::size_t eol = document.find('\n', pos);
    if (eol == std::string_view::npos) eol = document.size();
    std::string line(document.substr(pos, eol - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::regex_search(line, pattern)) headings.push_back({pos, eol});
    pos = eol + 1;
  }

  if (headings.empty()) {
    out.warnings.push_back("no line matched the chapter pattern; treating the document as one chapter");
    out.chapters.push_back({0, "", {0, document.size()}});
  } else {
    if (!text::trim(document.substr(0, headings.front().line_start)).empty()) {
      out.warnings.push_back("text before the first chapter heading was skipped");
    }
    for (std::size_t i = 0; i < headings.size(); ++i) {
      const std::size_t body_start = std::min(headings[i].line_end + 1, document.size());
      const std::size_t body_end =
          i + 1 < headings.size() ? headings[i + 1].line_start : document.size();
      const auto heading = text::trim(
          document.substr(headings[i].line_start, headings[i].line_end - headings[i].line_start));
      out.chapters.push_back({i, std::string(heading), {body_start, std::max(body_start, body_end)}});
    }
  }

  for (const auto& chapter : out.chapters) {
    std::vector<CharRange> pieces;
    for (const auto& para : detail::paragraphs(document, chapter.body)) {
      if (utf8::length(document.substr(para.start, para.end - para.start)) > options.span_budget) {
        for (const auto& p : detail::split_long(document, para, options.span_budget)) pieces.push_back(p);
      } else {
        pieces.push_back(para);
      }
    }
    std::size_t index = 0;
    std::size_t i = 0;
    while (i < pieces.size()) {
      const std::size_t start = pieces[i].start;
      std::size_t end = pieces[i].end;
      std::size_t j = i + 1;
      while (j < pieces.size() &&
             utf8::length(document.substr(start, pieces[j].end - start)) <= options.span_budget) {
        end = pieces[j].end;
        ++j;
      }
      out.spans.push_back(Span{detail::span_id(chapter.index, index++), chapter.index,
                               std::string(document.substr(start, end - start)),
                               CharRange{start, end}});
      i = j;
    }
    if (index == 0) {
      out.warnings.push_back("chapter " + std::to_string(chapter.index) + " has no text");
    }
  }
  return out;
}

}  // namespace diegesis

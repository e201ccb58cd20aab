#pragma once

#include <cstdint>
#include <span>

namespace r4style::detail {

struct CodeRange {
  char32_t first;
  char32_t last;
};

struct CaseMapping {
  char32_t from;
  char32_t to;
};

// Sorted, non-overlapping. See tools/gen_unicode_tables.py.
std::span<const CodeRange> punctuation_ranges();
std::span<const CodeRange> space_ranges();
std::span<const CaseMapping> lowercase_map();

}  // namespace r4style::detail

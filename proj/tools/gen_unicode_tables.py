#!/usr/bin/env python3
"""Regenerate src/unicode_tables.cpp from Python's unicodedata."""
import sys
import unicodedata


def ranges(pred):
    out, start = [], None
    for cp in range(0x110000):
        if pred(cp):
            if start is None:
                start = cp
        elif start is not None:
            out.append((start, cp - 1))
            start = None
    if start is not None:
        out.append((start, 0x10FFFF))
    return out


def main():
    punct = ranges(lambda c: unicodedata.category(chr(c)).startswith("P"))
    space = ranges(lambda c: unicodedata.category(chr(c)) in ("Zs", "Zl", "Zp")
                   or c in (0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x85))
    lower = []
    for c in range(0x80, 0x110000):
        lo = chr(c).lower()
        if len(lo) == 1 and ord(lo) != c:
            lower.append((c, ord(lo)))

    w = sys.stdout.write
    w("// Generated by tools/gen_unicode_tables.py (Unicode %s). Do not edit.\n\n"
      % unicodedata.unidata_version)
    w('#include "unicode_tables.hpp"\n\n#include <array>\n\nnamespace r4style::detail {\nnamespace {\n\n')

    def emit(name, rs):
        w("const std::array<CodeRange, %d> %s{{\n" % (len(rs), name))
        for a, b in rs:
            w("    {0x%04X, 0x%04X},\n" % (a, b))
        w("}};\n\n")

    emit("kPunctuationRanges", punct)
    emit("kSpaceRanges", space)
    w("const std::array<CaseMapping, %d> kLowercaseMap{{\n" % len(lower))
    for a, b in lower:
        w("    {0x%04X, 0x%04X},\n" % (a, b))
    w("}};\n\n}  // namespace\n\n")
    w("std::span<const CodeRange> punctuation_ranges() { return kPunctuationRanges; }\n")
    w("std::span<const CodeRange> space_ranges() { return kSpaceRanges; }\n")
    w("std::span<const CaseMapping> lowercase_map() { return kLowercaseMap; }\n\n")
    w("}  // namespace r4style::detail\n")


if __name__ == "__main__":
    main()

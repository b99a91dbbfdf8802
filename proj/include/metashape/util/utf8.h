#ifndef METASHAPE_UTIL_UTF8_H_
#define METASHAPE_UTIL_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace metashape {
namespace utf8 {

// Decodes UTF-8 into Unicode scalar values. Throws std::invalid_argument on
// malformed input (overlong forms, surrogates, truncated sequences).
std::u32string Decode(std::string_view text);

std::string Encode(std::u32string_view scalars);
void Append(std::string* out, char32_t c);

// Byte offset of every scalar boundary: result[i] is the byte offset where
// scalar i starts; result.back() == text.size().
std::vector<size_t> ScalarOffsets(std::string_view text);

size_t ScalarLength(std::string_view text);

bool IsWhitespace(char32_t c);
bool IsPunctuation(char32_t c);
bool IsAlnum(char32_t c);

// Simple one-to-one case folding for Latin, Greek and Cyrillic letters.
char32_t FoldCase(char32_t c);
std::string FoldCase(std::string_view text);

// Case-fold, trim, and collapse runs of Unicode whitespace to one space.
std::string NormalizeSurface(std::string_view text);

}  // namespace utf8
}  // namespace metashape

#endif  // METASHAPE_UTIL_UTF8_H_

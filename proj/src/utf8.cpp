#include "prefcon/utf8.hpp"

namespace prefcon::utf8 {

namespace {

// Returns the scalar starting at `pos` and advances it.
char32_t next_scalar(std::string_view s, std::size_t & pos)
{
    auto const byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char const lead = byte(pos);
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    int extra = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((lead & 0xE0) == 0xC0) {
        extra = 1;
        cp = lead & 0x1F;
        min = 0x80;
    } else if ((lead & 0xF0) == 0xE0) {
        extra = 2;
        cp = lead & 0x0F;
        min = 0x800;
    } else if ((lead & 0xF8) == 0xF0) {
        extra = 3;
        cp = lead & 0x07;
        min = 0x10000;
    } else {
        throw InvalidUtf8("invalid UTF-8 lead byte at offset " + std::to_string(pos));
    }
    if (pos + static_cast<std::size_t>(extra) >= s.size()) {
        throw InvalidUtf8("truncated UTF-8 sequence at offset " + std::to_string(pos));
    }
    for (int i = 1; i <= extra; ++i) {
        unsigned char const cont = byte(pos + static_cast<std::size_t>(i));
        if ((cont & 0xC0) != 0x80) {
            throw InvalidUtf8("invalid UTF-8 continuation byte at offset " + std::to_string(pos + i));
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        throw InvalidUtf8("invalid UTF-8 scalar at offset " + std::to_string(pos));
    }
    pos += static_cast<std::size_t>(extra) + 1;
    return cp;
}

} // namespace

std::u32string decode(std::string_view bytes)
{
    std::u32string out;
    out.reserve(bytes.size());
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        out.push_back(next_scalar(bytes, pos));
    }
    return out;
}

std::string encode(std::u32string_view scalars)
{
    std::string out;
    out.reserve(scalars.size());
    for (char32_t cp : scalars) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

std::vector<std::size_t> boundaries(std::string_view bytes)
{
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        out.push_back(pos);
        next_scalar(bytes, pos);
    }
    out.push_back(bytes.size());
    return out;
}

} // namespace prefcon::utf8

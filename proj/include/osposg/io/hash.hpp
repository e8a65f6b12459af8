#pragma once

#include <cstdint>
#include <string>

namespace osposg::io {

/// SHA-1 of a byte string as a lowercase hex digest, used as a content hash to
/// tie bounds files to the game they were computed for.
inline std::string sha1_hex(const std::string& data) {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                          0xC3D2E1F0u};
    std::string msg = data;
    std::uint64_t bits = std::uint64_t(data.size()) * 8;
    msg.push_back(char(0x80));
    while (msg.size() % 64 != 56)
        msg.push_back(char(0));
    for (int i = 7; i >= 0; i--)
        msg.push_back(char((bits >> (8 * i)) & 0xFF));

    auto rol = [](std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); };
    for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; i++)
            w[i] = (std::uint32_t(std::uint8_t(msg[chunk + 4 * i])) << 24) |
                   (std::uint32_t(std::uint8_t(msg[chunk + 4 * i + 1])) << 16) |
                   (std::uint32_t(std::uint8_t(msg[chunk + 4 * i + 2])) << 8) |
                   std::uint32_t(std::uint8_t(msg[chunk + 4 * i + 3]));
        for (int i = 16; i < 80; i++)
            w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; i++) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            std::uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = t;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (std::uint32_t v : h)
        for (int i = 7; i >= 0; i--)
            out.push_back(hex[(v >> (4 * i)) & 0xF]);
    return out;
}

} // namespace osposg::io

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tearnet/core/tensor.hpp"

namespace tearnet {

// .dsec binary array container.
//
// Layout (little endian):
//   bytes 0..3   magic "DSEC"
//   byte  4      format version (1)
//   byte  5      dtype code (1 = f32, 2 = f64, 3 = u8)
//   bytes 6..7   rank (u16)
//   bytes 8..15  reserved (zero)
//   rank * u32   dims
//   payload      row-major values
struct DsecError : std::runtime_error {
    explicit DsecError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace dsec {

constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kF32 = 1;
constexpr std::uint8_t kF64 = 2;
constexpr std::uint8_t kU8 = 3;

template <typename T> struct dtype_code;
template <> struct dtype_code<float> { static constexpr std::uint8_t value = kF32; };
template <> struct dtype_code<double> { static constexpr std::uint8_t value = kF64; };
template <> struct dtype_code<std::uint8_t> { static constexpr std::uint8_t value = kU8; };

template <typename T>
inline void write(const std::string& path, const TensorT<T>& t) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DsecError("dsec: cannot open for write: " + path);
    char header[16] = {'D', 'S', 'E', 'C', 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    header[4] = static_cast<char>(kVersion);
    header[5] = static_cast<char>(dtype_code<T>::value);
    const std::uint16_t rank = static_cast<std::uint16_t>(t.rank());
    std::memcpy(header + 6, &rank, 2);
    f.write(header, 16);
    for (std::size_t d : t.dims) {
        const std::uint32_t u = static_cast<std::uint32_t>(d);
        f.write(reinterpret_cast<const char*>(&u), 4);
    }
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(T)));
    if (!f) throw DsecError("dsec: write failed: " + path);
}

template <typename T>
inline TensorT<T> read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DsecError("dsec: cannot open for read: " + path);
    char header[16];
    f.read(header, 16);
    if (!f || std::memcmp(header, "DSEC", 4) != 0)
        throw DsecError("dsec: bad magic in " + path);
    if (static_cast<std::uint8_t>(header[4]) != kVersion)
        throw DsecError("dsec: unsupported version in " + path);
    if (static_cast<std::uint8_t>(header[5]) != dtype_code<T>::value)
        throw DsecError("dsec: dtype mismatch in " + path);
    std::uint16_t rank = 0;
    std::memcpy(&rank, header + 6, 2);
    std::vector<std::size_t> dims(rank);
    for (std::uint16_t i = 0; i < rank; ++i) {
        std::uint32_t u = 0;
        f.read(reinterpret_cast<char*>(&u), 4);
        if (!f) throw DsecError("dsec: truncated dims in " + path);
        dims[i] = u;
    }
    TensorT<T> t(dims);
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(T)));
    if (!f || static_cast<std::size_t>(f.gcount()) != t.data.size() * sizeof(T))
        throw DsecError("dsec: truncated payload in " + path);
    return t;
}

}  // namespace dsec

// FNV-1a 64-bit over a file's bytes; manifests store this as a hex string so
// corruption is caught on read.
inline std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DsecError("checksum: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        const std::streamsize n = f.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<std::uint8_t>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace tearnet

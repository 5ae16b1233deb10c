#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tearnet/core/dsec.hpp"
#include "tearnet/core/rng.hpp"
#include "tearnet/core/tensor.hpp"

using namespace tearnet;
namespace fs = std::filesystem;

TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3}, 1.5);
    REQUIRE(t.numel() == 6);
    REQUIRE(t.at2(1, 2) == 1.5);
    REQUIRE_THROWS_AS(Tensor(std::vector<std::size_t>{2, 0}), std::invalid_argument);
    REQUIRE_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("matmul against scalar loops") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> dist(-1, 1);
    const std::size_t ra = 5, ca = 7, cb = 4;
    std::vector<double> a(ra * ca), b(ca * cb), y(ra * cb), ref(ra * cb, 0.0);
    for (auto& v : a) v = dist(rng);
    for (auto& v : b) v = dist(rng);
    matmul(a.data(), ra, ca, b.data(), cb, y.data());
    for (std::size_t i = 0; i < ra; ++i)
        for (std::size_t j = 0; j < cb; ++j)
            for (std::size_t k = 0; k < ca; ++k) ref[i * cb + j] += a[i * ca + k] * b[k * cb + j];
    for (std::size_t i = 0; i < y.size(); ++i)
        REQUIRE(y[i] == Catch::Approx(ref[i]).margin(1e-14));

    // transposed variants agree with the plain product of transposed inputs
    std::vector<double> bt(cb * ca);
    for (std::size_t i = 0; i < ca; ++i)
        for (std::size_t j = 0; j < cb; ++j) bt[j * ca + i] = b[i * cb + j];
    std::vector<double> y2(ra * cb);
    matmul_bt(a.data(), ra, ca, bt.data(), cb, y2.data());
    for (std::size_t i = 0; i < y.size(); ++i) REQUIRE(y2[i] == Catch::Approx(ref[i]).margin(1e-14));
}

TEST_CASE("rng stream derivation is stable and spread out") {
    const auto s1 = derive_seed(42, 0);
    const auto s2 = derive_seed(42, 1);
    REQUIRE(s1 != s2);
    REQUIRE(s1 == derive_seed(42, 0));
}

TEST_CASE("dsec round-trip is bit exact") {
    const fs::path dir = fs::temp_directory_path() / "tearnet_dsec_test";
    fs::create_directories(dir);
    const std::string path = (dir / "t.dsec").string();

    Tensor t({3, 4, 5});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-10, 10);
    for (auto& v : t.data) v = dist(rng);
    t.data[0] = 0.1;  // not exactly representable; survives anyway

    dsec::write(path, t);
    const Tensor back = dsec::read<double>(path);
    REQUIRE(back.dims == t.dims);
    for (std::size_t i = 0; i < t.numel(); ++i) {
        // bit comparison, not approx
        REQUIRE(std::memcmp(&back.data[i], &t.data[i], sizeof(double)) == 0);
    }

    // second write produces identical bytes
    const std::string path2 = (dir / "t2.dsec").string();
    dsec::write(path2, t);
    REQUIRE(fnv1a_file(path) == fnv1a_file(path2));
}

TEST_CASE("dsec rejects corruption") {
    const fs::path dir = fs::temp_directory_path() / "tearnet_dsec_test";
    fs::create_directories(dir);
    const std::string path = (dir / "trunc.dsec").string();
    TensorF t({8, 8}, 1.0f);
    dsec::write(path, t);

    // truncate payload
    fs::resize_file(path, fs::file_size(path) - 17);
    REQUIRE_THROWS_AS(dsec::read<float>(path), DsecError);

    // wrong dtype requested
    const std::string path3 = (dir / "dt.dsec").string();
    dsec::write(path3, t);
    REQUIRE_THROWS_AS(dsec::read<double>(path3), DsecError);

    // bad magic
    std::ofstream f(path3, std::ios::binary | std::ios::in);
    f.seekp(0);
    f.write("XXXX", 4);
    f.close();
    REQUIRE_THROWS_AS(dsec::read<float>(path3), DsecError);
}

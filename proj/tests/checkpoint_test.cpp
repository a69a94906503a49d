#include "tracecast/checkpoint.hpp"
#include "tracecast/errors.hpp"

#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace tracecast;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(bool(f));
    return std::string(std::istreambuf_iterator<char>(f),
                       std::istreambuf_iterator<char>());
}

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.seed = 0xDEADBEEFCAFEF00Dull;
    c.descriptor = R"({"kind":"demo","lookback":10})";
    c.tensors.emplace_back("w", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    c.tensors.emplace_back("b", Tensor({3}, {-0.5, 0.0, 0.5}));
    c.tensors.emplace_back("scalar", Tensor::scalar(42.0));
    return c;
}

} // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round trip preserves seed, descriptor and tensors") {
    const fs::path p = temp_file("ckpt_roundtrip.bin");
    Checkpoint orig = sample_checkpoint();
    save_checkpoint(orig, p.string());

    Checkpoint back = load_checkpoint(p.string());
    CHECK(back.format_version == 1);
    CHECK(back.seed == orig.seed);
    CHECK(back.descriptor == orig.descriptor);
    REQUIRE(back.tensors.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.tensors[i].first == orig.tensors[i].first);
        CHECK(back.tensors[i].second.shape() == orig.tensors[i].second.shape());
        CHECK(back.tensors[i].second.values() == orig.tensors[i].second.values());
    }
    fs::remove(p);
}

TEST_CASE("save, load, save reproduces the file byte for byte") {
    const fs::path p1 = temp_file("ckpt_bytes_1.bin");
    const fs::path p2 = temp_file("ckpt_bytes_2.bin");
    save_checkpoint(sample_checkpoint(), p1.string());
    save_checkpoint(load_checkpoint(p1.string()), p2.string());
    CHECK(slurp(p1) == slurp(p2));
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("tensor lookup by name") {
    Checkpoint c = sample_checkpoint();
    CHECK(c.has_tensor("b"));
    CHECK_FALSE(c.has_tensor("missing"));
    CHECK(c.tensor("scalar").item() == 42.0);
    CHECK_THROWS_AS(c.tensor("missing"), DataError);
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/nope.bin"), DataError);
}

TEST_CASE("bad magic") {
    const fs::path p = temp_file("ckpt_bad_magic.bin");
    std::ofstream(p, std::ios::binary) << "THIS IS NOT A CHECKPOINT AT ALL";
    CHECK_THROWS_AS(load_checkpoint(p.string()), DataError);
    fs::remove(p);
}

TEST_CASE("unsupported version") {
    const fs::path p = temp_file("ckpt_bad_version.bin");
    save_checkpoint(sample_checkpoint(), p.string());
    std::string bytes = slurp(p);
    bytes[8] = 9;  // version field sits right after the 8-byte magic
    std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;

    std::string msg;
    try {
        load_checkpoint(p.string());
    } catch (const DataError& e) {
        msg = e.what();
    }
    CHECK(msg.find("version") != std::string::npos);
    fs::remove(p);
}

TEST_CASE("truncation anywhere in the payload") {
    const fs::path p = temp_file("ckpt_truncated.bin");
    save_checkpoint(sample_checkpoint(), p.string());
    const std::string full = slurp(p);

    // Chop at a few depths: inside the header, the descriptor, a tensor name
    // and the trailing value block.
    for (std::size_t keep : {4ul, 16ul, 40ul, full.size() - 3}) {
        std::ofstream(p, std::ios::binary | std::ios::trunc)
            << full.substr(0, keep);
        CHECK_THROWS_AS(load_checkpoint(p.string()), DataError);
    }
    fs::remove(p);
}

TEST_CASE("trailing bytes are rejected") {
    const fs::path p = temp_file("ckpt_trailing.bin");
    save_checkpoint(sample_checkpoint(), p.string());
    std::ofstream(p, std::ios::binary | std::ios::app) << "junk";

    std::string msg;
    try {
        load_checkpoint(p.string());
    } catch (const DataError& e) {
        msg = e.what();
    }
    CHECK(msg.find("trailing") != std::string::npos);
    fs::remove(p);
}

TEST_CASE("empty tensor list and empty descriptor survive") {
    const fs::path p = temp_file("ckpt_empty.bin");
    Checkpoint c;
    c.seed = 7;
    save_checkpoint(c, p.string());
    Checkpoint back = load_checkpoint(p.string());
    CHECK(back.seed == 7);
    CHECK(back.descriptor.empty());
    CHECK(back.tensors.empty());
    fs::remove(p);
}

} // TEST_SUITE

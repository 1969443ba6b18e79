// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>

#include "lrvae/data.hpp"
#include "support/testutil.hpp"

using namespace lrvae;
using namespace lrvae::data;

namespace {

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> be32(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
            static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

std::vector<std::uint8_t> idx_image_bytes(std::uint32_t n, std::uint32_t r, std::uint32_t c,
                                          const std::vector<std::uint8_t>& pixels,
                                          std::uint32_t magic = kIdxImagesMagic) {
    std::vector<std::uint8_t> out;
    for (auto part : {be32(magic), be32(n), be32(r), be32(c)})
        out.insert(out.end(), part.begin(), part.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("handcrafted 2-image 2x2 IDX file parses byte-exactly") {
    testutil::TempDir dir("idx");
    const std::string path = dir.str() + "/two.idx";
    write_bytes(path, idx_image_bytes(2, 2, 2, {0, 0, 0, 0, 255, 255, 255, 255}));
    Dataset ds = load_idx(path);
    CHECK(ds.n() == 2);
    CHECK(ds.dim() == 4);
    CHECK(ds.img_rows == 2);
    CHECK(ds.img_cols == 2);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(ds.x(0, j) == 0.0);
        CHECK(ds.x(1, j) == 1.0);
    }

    // byte-determinism: loading the identical file twice gives identical tensors
    Dataset ds2 = load_idx(path);
    CHECK(testutil::max_abs_diff(ds.x, ds2.x) == 0.0);
}

TEST_CASE("IDX error paths: magic, truncation, trailing bytes, label mismatch") {
    testutil::TempDir dir("idxerr");
    const std::string bad_magic = dir.str() + "/bad_magic.idx";
    write_bytes(bad_magic, idx_image_bytes(1, 2, 2, {1, 2, 3, 4}, 0xDEADBEEF));
    try {
        load_idx(bad_magic);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("0xDEADBEEF") != std::string::npos);
    }

    const std::string truncated = dir.str() + "/truncated.idx";
    write_bytes(truncated, idx_image_bytes(3, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8}));  // 8 of 12
    try {
        load_idx(truncated);
        FAIL("expected LengthError");
    } catch (const LengthError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("12") != std::string::npos);
        CHECK(msg.find("8") != std::string::npos);
    }

    const std::string trailing = dir.str() + "/trailing.idx";
    write_bytes(trailing, idx_image_bytes(1, 2, 2, {1, 2, 3, 4, 99}));
    CHECK_THROWS_AS(load_idx(trailing), LengthError);

    const std::string imgs = dir.str() + "/imgs.idx";
    write_bytes(imgs, idx_image_bytes(2, 1, 1, {7, 8}));
    const std::string labels = dir.str() + "/labels.idx";
    std::vector<std::uint8_t> lb;
    for (auto part : {be32(kIdxLabelsMagic), be32(3)}) lb.insert(lb.end(), part.begin(), part.end());
    lb.insert(lb.end(), {1, 2, 3});
    write_bytes(labels, lb);
    CHECK_THROWS_AS(load_idx(imgs, labels), LengthError);  // 3 labels vs 2 images

    CHECK_THROWS_AS(load_idx(dir.str() + "/missing.idx"), IoError);
}

TEST_CASE("IDX writer round-trips u8 images and labels") {
    testutil::TempDir dir("idxrt");
    Rng rng(5);
    Tensor x({6, 9});
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = static_cast<double>(rng.index(256)) / 255.0;
    save_idx_images(dir.str() + "/x.idx", x, 3, 3);
    save_idx_labels(dir.str() + "/y.idx", {0, 9, 3, 1, 4, 7});
    Dataset ds = load_idx(dir.str() + "/x.idx", dir.str() + "/y.idx");
    CHECK(testutil::max_abs_diff(ds.x, x) == 0.0);
    REQUIRE(ds.labels.has_value());
    CHECK(ds.labels->at(1) == 9);
    for (int l : *ds.labels) {
        CHECK(l >= 0);
        CHECK(l <= 9);
    }
    for (std::size_t i = 0; i < ds.x.size(); ++i) {
        CHECK(ds.x[i] >= 0.0);
        CHECK(ds.x[i] <= 1.0);
    }
}

TEST_CASE("synthetic generation is deterministic with the declared shape") {
    SyntheticSpec spec;
    spec.mixture = {2, 3, {{0.0, 1.0, -1.0}, {4.0, 4.0, 4.0}}, {0.5, 0.25}};
    Dataset a = gen_synthetic(spec, 100, 9);
    Dataset b = gen_synthetic(spec, 100, 9);
    CHECK(testutil::max_abs_diff(a.x, b.x) == 0.0);
    CHECK(a.n() == 100);
    CHECK(a.dim() == 3);
    CHECK(a.seed_of_origin == 9);

    Dataset c = gen_synthetic(spec, 100, 10);
    CHECK(testutil::max_abs_diff(a.x, c.x) > 0.0);

    SyntheticSpec pw;
    pw.kind = SyntheticSpec::Kind::pinwheel;
    pw.pinwheel.arms = 4;
    Dataset d = gen_synthetic(pw, 64, 3);
    CHECK(d.dim() == 2);
    CHECK(d.n() == 64);

    CHECK_THROWS_AS(gen_synthetic(spec, 0, 1), ContractError);
}

TEST_CASE("single-component mixture mean obeys the CLT bound") {
    SyntheticSpec spec;
    spec.mixture = {1, 2, {{2.0, -3.0}}, {0.7}};
    const std::size_t n = 4096;
    Dataset ds = gen_synthetic(spec, n, 21);
    for (std::size_t j = 0; j < 2; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += ds.x(i, j);
        mean /= static_cast<double>(n);
        CHECK(std::abs(mean - spec.mixture.means[0][j]) <=
              4.0 * 0.7 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("batch_iter partitions the index set and is seeded per epoch") {
    for (auto [n, bs] : std::vector<std::pair<std::size_t, std::size_t>>{
             {10, 3}, {8, 8}, {9, 1}, {1000, 128}}) {
        auto batches = batch_iter(n, bs, 5, 0);
        std::set<std::size_t> seen;
        std::size_t count = 0;
        for (const auto& b : batches) {
            CHECK(b.size() <= bs);
            for (std::size_t i : b) {
                CHECK(seen.insert(i).second);  // each index exactly once
                ++count;
            }
        }
        CHECK(count == n);
        CHECK(*seen.rbegin() == n - 1);
    }

    auto a = batch_iter(1000, 128, 7, 0);
    auto b = batch_iter(1000, 128, 7, 0);
    CHECK(a == b);
    auto c = batch_iter(1000, 128, 7, 1);
    CHECK(a != c);

    CHECK_THROWS_AS(batch_iter(10, 0, 1, 0), ContractError);
}

TEST_CASE("binarize thresholds at 0.5") {
    Tensor x({1, 4}, {0.0, 0.499, 0.5, 1.0});
    binarize(x);
    CHECK(x[0] == 0.0);
    CHECK(x[1] == 0.0);
    CHECK(x[2] == 1.0);
    CHECK(x[3] == 1.0);
}

TEST_CASE("train/val split is 90/10 and covers all rows") {
    Rng rng(3);
    Tensor x = testutil::random_tensor({100, 4}, rng);
    Split s = train_val_split(x, 11);
    CHECK(s.train.rows() == 90);
    CHECK(s.val.rows() == 10);
}

TEST_SUITE_END();

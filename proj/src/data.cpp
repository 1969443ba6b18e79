// SPDX-License-Identifier: Apache-2.0
#include "lrvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lrvae/rng.hpp"

namespace lrvae::data {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw LengthError("idx: truncated while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t expected,
                                        const std::string& path) {
    std::vector<unsigned char> payload(expected);
    if (expected > 0 && !in.read(reinterpret_cast<char*>(payload.data()), expected)) {
        const std::size_t got = static_cast<std::size_t>(in.gcount());
        throw LengthError("idx: " + path + ": expected " + std::to_string(expected) +
                          " payload bytes, got " + std::to_string(got));
    }
    // Trailing bytes also violate the declared length.
    char extra;
    if (in.read(&extra, 1))
        throw LengthError("idx: " + path + ": payload longer than declared " +
                          std::to_string(expected) + " bytes");
    return payload;
}

}  // namespace

Dataset load_idx(const std::string& image_path, const std::optional<std::string>& label_path) {
    std::ifstream in(image_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + image_path);
    const std::uint32_t magic = read_be32(in, "magic");
    if (magic != kIdxImagesMagic)
        throw FormatError("idx: " + image_path + ": bad magic " + hex32(magic) +
                          ", expected " + hex32(kIdxImagesMagic));
    const std::uint32_t n = read_be32(in, "count");
    const std::uint32_t rows = read_be32(in, "rows");
    const std::uint32_t cols = read_be32(in, "cols");
    const std::size_t d = std::size_t(rows) * cols;
    auto payload = read_payload(in, std::size_t(n) * d, image_path);

    Dataset ds;
    ds.name = image_path;
    ds.img_rows = rows;
    ds.img_cols = cols;
    ds.x = Tensor({n, d});
    for (std::size_t i = 0; i < payload.size(); ++i)
        ds.x[i] = static_cast<double>(payload[i]) / 255.0;

    if (label_path) {
        std::ifstream lin(*label_path, std::ios::binary);
        if (!lin) throw IoError("cannot open " + *label_path);
        const std::uint32_t lmagic = read_be32(lin, "magic");
        if (lmagic != kIdxLabelsMagic)
            throw FormatError("idx: " + *label_path + ": bad magic " + hex32(lmagic) +
                              ", expected " + hex32(kIdxLabelsMagic));
        const std::uint32_t ln = read_be32(lin, "count");
        if (ln != n)
            throw LengthError("idx: label count " + std::to_string(ln) +
                              " != image count " + std::to_string(n));
        auto lpayload = read_payload(lin, ln, *label_path);
        ds.labels = std::vector<int>(lpayload.begin(), lpayload.end());
    }
    return ds;
}

void save_idx_images(const std::string& path, const Tensor& x, std::size_t rows,
                     std::size_t cols) {
    if (x.cols() != rows * cols)
        throw ShapeError("save_idx_images: D " + std::to_string(x.cols()) + " != rows*cols " +
                         std::to_string(rows * cols));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_be32(out, kIdxImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(x.rows()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = std::clamp(x[i], 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_be32(out, kIdxLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.put(static_cast<char>(static_cast<unsigned char>(l)));
    if (!out) throw IoError("write failed: " + path);
}

Dataset gen_synthetic(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ContractError("gen_synthetic: n must be >= 1");
    Rng rng(seed, 0xda7aULL);
    Dataset ds;
    ds.seed_of_origin = seed;
    if (spec.kind == SyntheticSpec::Kind::gaussian_mixture) {
        const auto& g = spec.mixture;
        if (g.k == 0 || g.means.size() != g.k || g.scales.size() != g.k)
            throw ContractError("gen_synthetic: mixture spec needs k means and scales");
        ds.name = "gaussian_mixture";
        ds.x = Tensor({n, g.dim});
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t comp = g.k == 1 ? 0 : rng.index(g.k);
            for (std::size_t j = 0; j < g.dim; ++j)
                ds.x(i, j) = g.means[comp][j] + g.scales[comp] * rng.normal();
        }
    } else {
        const std::size_t arms = spec.pinwheel.arms;
        if (arms == 0) throw ContractError("gen_synthetic: pinwheel needs arms >= 1");
        ds.name = "pinwheel";
        ds.x = Tensor({n, 2});
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t arm = rng.index(arms);
            const double radius = 1.0 + 0.25 * rng.normal();
            const double swirl = 2.0 * M_PI * static_cast<double>(arm) / arms +
                                 0.35 * rng.normal() + (radius - 1.0);
            ds.x(i, 0) = radius * std::cos(swirl);
            ds.x(i, 1) = radius * std::sin(swirl);
        }
    }
    return ds;
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size == 0) throw ContractError("batch_iter: batch_size must be >= 1");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed, 0xba7cULL + epoch);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return batches;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
    const std::size_t d = x.cols();
    Tensor out({idx.size(), d});
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(x.data() + idx[i] * d, x.data() + (idx[i] + 1) * d, out.data() + i * d);
    return out;
}

void binarize(Tensor& x, double threshold) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] >= threshold ? 1.0 : 0.0;
}

Split train_val_split(const Tensor& x, std::uint64_t seed) {
    const std::size_t n = x.rows();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed, 0x59e1ULL);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const std::size_t ntrain = n - n / 10;
    Split s;
    s.train = gather_rows(x, {perm.begin(), perm.begin() + ntrain});
    s.val = gather_rows(x, {perm.begin() + ntrain, perm.end()});
    return s;
}

}  // namespace lrvae::data

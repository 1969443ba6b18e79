// SPDX-License-Identifier: Apache-2.0
#include "lrvae/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload writer assumes a little-endian host");

namespace lrvae::cli {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string layer_line(const nn::Layer& l) {
    std::ostringstream os;
    os << l.spec.in_dim << "," << l.spec.out_dim << "," << act_name(l.spec.act) << ","
       << fmt17(l.spec.leaky_slope);
    return os.str();
}

nn::LayerSpec parse_layer_line(const std::string& s) {
    std::istringstream in(s);
    std::string tok;
    std::vector<std::string> parts;
    while (std::getline(in, tok, ',')) parts.push_back(tok);
    if (parts.size() != 4) throw FormatError("checkpoint: bad layer line: " + s);
    nn::LayerSpec spec;
    spec.in_dim = std::stoul(parts[0]);
    spec.out_dim = std::stoul(parts[1]);
    spec.act = act_from_name(parts[2]);
    spec.leaky_slope = std::stod(parts[3]);
    return spec;
}

}  // namespace

void checkpoint_save(const nn::Model& model, int epoch, const std::string& path) {
    std::ostringstream header;
    header << "format=" << kCheckpointVersion << "\n";
    header << "data_dim=" << model.data_dim << "\n";
    header << "latent_dim=" << model.latent_dim << "\n";
    header << "likelihood=" << nn::likelihood_name(model.likelihood.kind) << "\n";
    header << "sigma2=" << fmt17(model.likelihood.sigma2) << "\n";
    header << "epoch=" << epoch << "\n";
    header << "enc_trunk=" << model.encoder_trunk.size() << "\n";
    for (std::size_t i = 0; i < model.encoder_trunk.size(); ++i)
        header << "enc_trunk" << i << "=" << layer_line(model.encoder_trunk[i]) << "\n";
    header << "mu_head=" << layer_line(model.mu_head) << "\n";
    header << "logvar_head=" << layer_line(model.logvar_head) << "\n";
    header << "decoder=" << model.decoder.size() << "\n";
    for (std::size_t i = 0; i < model.decoder.size(); ++i)
        header << "decoder" << i << "=" << layer_line(model.decoder[i]) << "\n";
    header << "payload_bytes=" << model.param_count() * sizeof(double) << "\n";
    header << "\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path);
    out.write(kCheckpointMagic, 4);
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const Tensor* p : model.params())
        out.write(reinterpret_cast<const char*>(p->data()),
                  static_cast<std::streamsize>(p->size() * sizeof(double)));
    if (!out) throw IoError("checkpoint write failed: " + path);
}

LoadedCheckpoint checkpoint_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    char magic[4];
    if (!in.read(magic, 4)) throw FormatError("checkpoint: file too short for magic");
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError(std::string("checkpoint: bad magic '") + std::string(magic, 4) + "'");

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("checkpoint: malformed header line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw FormatError("checkpoint: missing header key " + k);
        return it->second;
    };

    if (std::stoi(need("format")) != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported format version " + need("format"));

    LoadedCheckpoint out;
    nn::Model& m = out.model;
    m.data_dim = std::stoul(need("data_dim"));
    m.latent_dim = std::stoul(need("latent_dim"));
    m.likelihood.kind = nn::likelihood_from_name(need("likelihood"));
    m.likelihood.sigma2 = std::stod(need("sigma2"));
    out.epoch = std::stoi(need("epoch"));

    auto make_layer = [](const nn::LayerSpec& spec) {
        nn::Layer l;
        l.spec = spec;
        l.w = Tensor({spec.in_dim, spec.out_dim});
        l.b = Tensor({1, spec.out_dim});
        return l;
    };
    const std::size_t n_trunk = std::stoul(need("enc_trunk"));
    for (std::size_t i = 0; i < n_trunk; ++i)
        m.encoder_trunk.push_back(
            make_layer(parse_layer_line(need("enc_trunk" + std::to_string(i)))));
    m.mu_head = make_layer(parse_layer_line(need("mu_head")));
    m.logvar_head = make_layer(parse_layer_line(need("logvar_head")));
    const std::size_t n_dec = std::stoul(need("decoder"));
    for (std::size_t i = 0; i < n_dec; ++i)
        m.decoder.push_back(make_layer(parse_layer_line(need("decoder" + std::to_string(i)))));

    const std::size_t declared = std::stoul(need("payload_bytes"));
    const std::size_t expected = m.param_count() * sizeof(double);
    if (declared != expected)
        throw LengthError("checkpoint: declared payload " + std::to_string(declared) +
                          " bytes != architecture size " + std::to_string(expected));

    for (Tensor* p : m.params()) {
        const std::streamsize bytes = static_cast<std::streamsize>(p->size() * sizeof(double));
        if (!in.read(reinterpret_cast<char*>(p->data()), bytes)) {
            throw LengthError("checkpoint: truncated payload, expected " +
                              std::to_string(expected) + " bytes, got " +
                              std::to_string(in.gcount() >= 0 ? in.gcount() : 0) +
                              " at final read");
        }
    }
    char extra;
    if (in.read(&extra, 1))
        throw LengthError("checkpoint: payload longer than declared " +
                          std::to_string(declared) + " bytes");
    return out;
}

}  // namespace lrvae::cli

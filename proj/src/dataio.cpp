#include "cpx/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include "cpx/errors.hpp"
#include "cpx/rng.hpp"

namespace cpx {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& buf, std::size_t off) {
    return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) | (std::uint32_t{buf[off + 2]} << 8) |
           std::uint32_t{buf[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                           static_cast<char>(v)};
    out.write(bytes, 4);
}

std::string hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

void need_bytes(const std::vector<std::uint8_t>& buf, std::size_t expected, const std::filesystem::path& path) {
    if (buf.size() < expected) {
        throw FormatError(path.string() + ": truncated, expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(buf.size()));
    }
}

}  // namespace

SparseRows IdxImageSet::features(const std::vector<std::size_t>& which) const {
    SparseRows s;
    s.cols = pixels_per_image();
    const std::size_t p = pixels_per_image();
    for (std::size_t img : which) {
        if (img >= count) throw InputError("image index out of range");
        for (std::size_t j = 0; j < p; ++j) {
            if (pixels[img * p + j] != 0) {
                s.index.push_back(static_cast<std::uint32_t>(j));
                s.value.push_back(pixel(img, j));
            }
        }
        s.row_ptr.push_back(s.index.size());
    }
    return s;
}

SparseRows IdxImageSet::all_features() const {
    std::vector<std::size_t> all(count);
    for (std::size_t i = 0; i < count; ++i) all[i] = i;
    return features(all);
}

IdxImageSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto ib = read_file(images);
    need_bytes(ib, 16, images);
    if (be32(ib, 0) != kIdxImageMagic) {
        throw FormatError(images.string() + ": bad image magic " + hex(be32(ib, 0)) + ", expected " +
                          hex(kIdxImageMagic));
    }
    IdxImageSet set;
    set.count = be32(ib, 4);
    set.rows = be32(ib, 8);
    set.cols = be32(ib, 12);
    if (set.rows == 0 || set.cols == 0) throw FormatError(images.string() + ": zero image dimension");
    need_bytes(ib, 16 + set.count * set.rows * set.cols, images);
    set.pixels.assign(ib.begin() + 16, ib.begin() + 16 + static_cast<std::ptrdiff_t>(set.count * set.rows * set.cols));

    const auto lb = read_file(labels);
    need_bytes(lb, 8, labels);
    if (be32(lb, 0) != kIdxLabelMagic) {
        throw FormatError(labels.string() + ": bad label magic " + hex(be32(lb, 0)) + ", expected " +
                          hex(kIdxLabelMagic));
    }
    const std::size_t nl = be32(lb, 4);
    if (nl != set.count) {
        throw FormatError("image/label count mismatch: " + std::to_string(set.count) + " images, " +
                          std::to_string(nl) + " labels");
    }
    need_bytes(lb, 8 + nl, labels);
    set.labels.assign(lb.begin() + 8, lb.begin() + 8 + static_cast<std::ptrdiff_t>(nl));
    return set;
}

void write_idx(const IdxImageSet& set, const std::filesystem::path& images, const std::filesystem::path& labels) {
    if (set.pixels.size() != set.count * set.rows * set.cols || set.labels.size() != set.count) {
        throw InputError("write_idx: inconsistent image set");
    }
    std::ofstream io(images, std::ios::binary);
    if (!io) throw InputError("cannot write " + images.string());
    put_be32(io, kIdxImageMagic);
    put_be32(io, static_cast<std::uint32_t>(set.count));
    put_be32(io, static_cast<std::uint32_t>(set.rows));
    put_be32(io, static_cast<std::uint32_t>(set.cols));
    io.write(reinterpret_cast<const char*>(set.pixels.data()), static_cast<std::streamsize>(set.pixels.size()));

    std::ofstream lo(labels, std::ios::binary);
    if (!lo) throw InputError("cannot write " + labels.string());
    put_be32(lo, kIdxLabelMagic);
    put_be32(lo, static_cast<std::uint32_t>(set.count));
    for (int y : set.labels) {
        if (y < 0 || y > 255) throw InputError("write_idx: label does not fit a byte");
        lo.put(static_cast<char>(y));
    }
}

std::vector<std::vector<std::size_t>> class_partition(const IdxImageSet& data, std::size_t num_clients) {
    const std::set<int> distinct(data.labels.begin(), data.labels.end());
    if (distinct.size() != num_clients) {
        throw ConfigError("class partition: " + std::to_string(num_clients) + " clients requested but data has " +
                          std::to_string(distinct.size()) + " distinct labels");
    }
    if (*distinct.begin() != 0 || *distinct.rbegin() != static_cast<int>(num_clients) - 1) {
        throw ConfigError("class partition: labels must be 0..m-1");
    }
    std::vector<std::vector<std::size_t>> parts(num_clients);
    for (std::size_t i = 0; i < data.count; ++i) parts[static_cast<std::size_t>(data.labels[i])].push_back(i);
    return parts;
}

std::vector<SoftmaxObjective> partition_by_class(const IdxImageSet& data, std::size_t num_clients,
                                                 std::size_t batch_size, double regularizer) {
    const auto parts = class_partition(data, num_clients);
    std::vector<SoftmaxObjective> out;
    out.reserve(num_clients);
    for (const auto& idx : parts) {
        std::vector<int> labels;
        labels.reserve(idx.size());
        for (std::size_t i : idx) labels.push_back(data.labels[i]);
        out.emplace_back(data.features(idx), std::move(labels), static_cast<int>(num_clients), batch_size,
                         regularizer);
    }
    return out;
}

SyntheticLs gen_synthetic_ls(const SyntheticLsSpec& spec, bool certify) {
    if (spec.m == 0 || spec.n == 0 || spec.d == 0) throw InputError("synthetic LS: m, n, d must be positive");
    if (spec.noise_std < 0.0) throw InputError("synthetic LS: negative noise_std");
    SyntheticLs out;
    out.y0.resize(spec.d);
    for (std::size_t j = 0; j < spec.d; ++j) out.y0[j] = rng::normal(spec.seed, 0, rng::Role::target, j);
    std::vector<ClientObjective> clients;
    clients.reserve(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        const auto stream = static_cast<std::uint32_t>(i);
        Matrix a(spec.n, spec.d);
        for (std::size_t e = 0; e < spec.n * spec.d; ++e) a.data()[e] = rng::normal(spec.seed, stream, rng::Role::matrix, e);
        Vector b = matvec(a, out.y0);
        for (std::size_t r = 0; r < spec.n; ++r) b[r] += spec.noise_std * rng::normal(spec.seed, stream, rng::Role::noise, r);
        clients.emplace_back(QuadraticObjective(std::move(a), std::move(b)));
    }
    out.problem = make_problem(std::move(clients));
    if (certify) certify_optimum(out.problem, 1e-8);
    return out;
}

FederatedProblem gen_synthetic_softmax(const SyntheticSoftmaxSpec& spec) {
    if (spec.m == 0 || spec.samples == 0 || spec.features == 0 || spec.classes < 2) {
        throw InputError("synthetic softmax: degenerate spec");
    }
    std::vector<ClientObjective> clients;
    for (std::size_t i = 0; i < spec.m; ++i) {
        const auto stream = static_cast<std::uint32_t>(i);
        Matrix feats(spec.samples, spec.features);
        std::vector<int> labels(spec.samples);
        for (std::size_t s = 0; s < spec.samples; ++s) {
            // Skewed labels: each client favours one class.
            const double u = rng::uniform(spec.seed, stream, rng::Role::misc, s);
            const int favoured = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
            labels[s] = u < 0.6 ? favoured : static_cast<int>(std::floor(u * 1e6)) % spec.classes;
            for (std::size_t j = 0; j < spec.features; ++j) {
                const double shift = (static_cast<int>(j) % spec.classes == labels[s]) ? 1.0 : 0.0;
                feats(s, j) = shift + rng::normal(spec.seed, stream, rng::Role::matrix, s * spec.features + j);
            }
        }
        clients.emplace_back(SoftmaxObjective(feats, std::move(labels), spec.classes, spec.batch, spec.regularizer));
    }
    FederatedProblem p = make_problem(std::move(clients));
    certify_optimum(p, 1e-10);
    return p;
}

}  // namespace cpx

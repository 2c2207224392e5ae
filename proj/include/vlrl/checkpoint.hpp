#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "vlrl/tensor.hpp"

namespace vlrl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian and this code writes raw bytes");

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'V', 'L', 'R', 'L'};

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
        throw IoError("checkpoint truncated while reading " + what);
    }
    return v;
}

}  // namespace detail

/// Writes named parameter tensors. Values are stored as 64-bit reals
/// regardless of the training precision, so checkpoints from either
/// precision are interchangeable.
template <class Real>
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<Real>>>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, 4);
    detail::write_u32(os, kCheckpointVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) detail::write_u32(os, static_cast<std::uint32_t>(d));
        for (auto v : t.data()) {
            const double dv = static_cast<double>(v);
            os.write(reinterpret_cast<const char*>(&dv), sizeof dv);
        }
    }
    if (!os) throw IoError("checkpoint write failed: " + path);
}

template <class Real>
std::vector<std::pair<std::string, Tensor<Real>>> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4] = {};
    if (!is.read(magic, 4) || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
        throw IoError("bad checkpoint magic in " + path);
    }
    const auto version = detail::read_u32(is, "version");
    if (version != kCheckpointVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = detail::read_u32(is, "tensor count");
    std::vector<std::pair<std::string, Tensor<Real>>> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = detail::read_u32(is, "name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw IoError("checkpoint truncated in name");
        const auto rank = detail::read_u32(is, "rank");
        Shape shape(rank);
        for (auto& d : shape) d = detail::read_u32(is, "dim");
        const auto n = shape_numel(shape);
        std::vector<Real> data(static_cast<std::size_t>(n));
        for (auto& v : data) {
            double dv = 0.0;
            if (!is.read(reinterpret_cast<char*>(&dv), sizeof dv)) {
                throw IoError("checkpoint truncated in tensor data");
            }
            v = static_cast<Real>(dv);
        }
        out.emplace_back(std::move(name), Tensor<Real>::from(std::move(data), std::move(shape)));
    }
    return out;
}

}  // namespace vlrl

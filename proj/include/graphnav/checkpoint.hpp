#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "graphnav/autodiff.hpp"
#include "graphnav/optimizer.hpp"

namespace graphnav {

// Binary checkpoint: parameter map (name -> shape -> values), a JSON metadata
// string (config echo, iteration counter, ablation flags), and optionally the
// optimizer moments. Round-trips are byte-exact: doubles are written raw.
namespace checkpoint {

inline constexpr char kMagic[8] = {'G', 'N', 'A', 'V', 'C', 'K', '1', '\n'};

namespace detail {

inline void write_u64(std::ostream& os, uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    os.write(buf, 8);
}

inline uint64_t read_u64(std::istream& is) {
    char buf[8];
    is.read(buf, 8);
    require(bool(is), "checkpoint: truncated file");
    uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    require(bool(is), "checkpoint: truncated string");
    return s;
}

inline void write_tensor(std::ostream& os, const Tensor& t) {
    write_u64(os, t.shape.size());
    for (int e : t.shape) write_u64(os, static_cast<uint64_t>(e));
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

inline Tensor read_tensor(std::istream& is) {
    const uint64_t rank = read_u64(is);
    require(rank >= 1 && rank <= 2, "checkpoint: bad tensor rank");
    std::vector<int> shape;
    for (uint64_t i = 0; i < rank; ++i) shape.push_back(static_cast<int>(read_u64(is)));
    Tensor t = Tensor::zeros(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    require(bool(is), "checkpoint: truncated tensor data");
    return t;
}

}  // namespace detail

inline void save(const std::string& path, const ParameterStore& ps, const std::string& meta_json,
                 const AdamOptimizer* opt = nullptr) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    require(bool(os), "checkpoint: cannot open '" + path + "' for writing");
    os.write(kMagic, 8);
    detail::write_string(os, meta_json);
    detail::write_u64(os, ps.size());
    for (const auto& [name, e] : ps) {
        detail::write_string(os, name);
        detail::write_u64(os, static_cast<uint64_t>(e.fan_in));
        detail::write_tensor(os, e.value);
    }
    if (opt) {
        detail::write_u64(os, 1);
        detail::write_u64(os, static_cast<uint64_t>(opt->steps_taken()));
        detail::write_u64(os, opt->state().size());
        for (const auto& [name, mo] : opt->state()) {
            detail::write_string(os, name);
            detail::write_tensor(os, mo.m);
            detail::write_tensor(os, mo.v);
        }
    } else {
        detail::write_u64(os, 0);
    }
    require(bool(os), "checkpoint: write failed for '" + path + "'");
}

struct Loaded {
    std::string meta_json;
    bool has_optimizer = false;
};

// Loads parameters into `ps` (entries are created with the stored shapes) and,
// when present and requested, the optimizer moments into `opt`.
inline Loaded load(const std::string& path, ParameterStore& ps, AdamOptimizer* opt = nullptr) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "checkpoint: cannot open '" + path + "'");
    char magic[8];
    is.read(magic, 8);
    require(bool(is) && std::memcmp(magic, kMagic, 8) == 0,
            "checkpoint: '" + path + "' is not a checkpoint file");
    Loaded out;
    out.meta_json = detail::read_string(is);
    const uint64_t n = detail::read_u64(is);
    for (uint64_t i = 0; i < n; ++i) {
        const std::string name = detail::read_string(is);
        const int fan_in = static_cast<int>(detail::read_u64(is));
        Tensor t = detail::read_tensor(is);
        ParameterStore::Entry& e = ps.get_or_create(name, t.shape, fan_in);
        e.value = std::move(t);
        e.grad = Tensor::zeros(e.value.shape);
    }
    const uint64_t has_opt = detail::read_u64(is);
    out.has_optimizer = has_opt != 0;
    if (out.has_optimizer && opt) {
        opt->set_steps_taken(static_cast<int64_t>(detail::read_u64(is)));
        const uint64_t k = detail::read_u64(is);
        for (uint64_t i = 0; i < k; ++i) {
            const std::string name = detail::read_string(is);
            AdamOptimizer::Moments mo;
            mo.m = detail::read_tensor(is);
            mo.v = detail::read_tensor(is);
            opt->state()[name] = std::move(mo);
        }
    }
    return out;
}

}  // namespace checkpoint
}  // namespace graphnav

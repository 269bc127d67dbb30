#pragma once

#include <random>

#include "ksnh/model.hpp"

namespace testing {

inline ksnh::FieldPoint random_point(const ksnh::Model& m, std::mt19937_64& rng, double lo = -1.0,
                                     double hi = 1.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    ksnh::FieldPoint w{ksnh::Vec(m.n()), ksnh::Vec(m.n() * m.k())};
    for (auto& x : w.q) x = U(rng);
    for (auto& x : w.v) x = U(rng);
    return w;
}

inline std::string model_path(const std::string& name) {
    return std::string(KSNH_SOURCE_DIR) + "/models/" + name + ".json";
}

}  // namespace testing

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "voyagecast/matrix.hpp"
#include "voyagecast/rng.hpp"

namespace fixture {

struct Labeled {
    voyagecast::Matrix x;
    std::vector<int> y;
};

/// Gaussian blobs in `dims` dimensions, one per center, `per_class` points
/// each, interleaved by class.
inline Labeled blobs(const std::vector<std::vector<double>>& centers, int per_class, double sigma,
                     std::uint64_t seed) {
    voyagecast::Rng rng(seed);
    Labeled out;
    for (int i = 0; i < per_class; ++i) {
        for (std::size_t c = 0; c < centers.size(); ++c) {
            std::vector<double> row;
            for (double m : centers[c]) row.push_back(rng.normal(m, sigma));
            out.x.append_row(row);
            out.y.push_back(static_cast<int>(c));
        }
    }
    return out;
}

/// Two separable classes split by the sign of the first coordinate, plus
/// two noise columns.
inline Labeled separable(int n, std::uint64_t seed) {
    return blobs({{-2.0, 0.0, 0.0}, {2.0, 0.0, 0.0}}, n / 2, 0.5, seed);
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace fixture

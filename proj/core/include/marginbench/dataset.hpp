#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "marginbench/tensor.hpp"

namespace marginbench {

struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;
  std::vector<Tensor> xs;  // each in [0,1]^feature_dim
  std::vector<std::size_t> ys;

  std::size_t size() const { return xs.size(); }
};

enum class SynthKind { blobs, rings, moons };

const char* to_string(SynthKind kind);
std::optional<SynthKind> synth_kind_from_string(const std::string& name);

// CSV rows `label,f1,...,fn` with an optional header. Features must lie in
// [0,1]; violations raise ParseError with the 1-based row number.
Dataset dataset_from_csv(const std::string& text);
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& data, const std::string& path);

// Deterministic 2-D generators. blobs: class centers on a circle; rings:
// concentric circles; moons: two interleaved half-circles (class_count must
// be 2). Features always land in [0,1].
Dataset synth_dataset(SynthKind kind, std::size_t n_per_class, std::size_t class_count,
                      double noise, std::uint64_t seed);

}  // namespace marginbench

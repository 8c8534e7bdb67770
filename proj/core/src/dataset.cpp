#include "marginbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "marginbench/errors.hpp"
#include "marginbench/rng.hpp"

namespace marginbench {

const char* to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::blobs: return "blobs";
    case SynthKind::rings: return "rings";
    case SynthKind::moons: return "moons";
  }
  return "?";
}

std::optional<SynthKind> synth_kind_from_string(const std::string& name) {
  if (name == "blobs") return SynthKind::blobs;
  if (name == "rings") return SynthKind::rings;
  if (name == "moons") return SynthKind::moons;
  return std::nullopt;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (std::string& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.pop_back();
  }
  return out;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    *out = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

bool parse_label(const std::string& s, std::size_t* out) {
  if (s.empty() || s[0] == '-') return false;
  std::size_t pos = 0;
  try {
    *out = std::stoul(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

Dataset dataset_from_csv(const std::string& text) {
  Dataset data;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  bool header_checked = false;
  std::size_t max_label = 0;

  while (std::getline(in, line)) {
    ++row;
    std::string stripped = line;
    while (!stripped.empty() && (stripped.back() == '\r' || stripped.back() == ' ')) {
      stripped.pop_back();
    }
    if (stripped.empty()) continue;

    std::vector<std::string> fields = split_fields(stripped);
    if (!header_checked) {
      header_checked = true;
      std::size_t probe;
      if (!parse_label(fields[0], &probe)) continue;  // header row
    }
    if (fields.size() < 2) {
      throw ParseError("dataset row " + std::to_string(row) + ": needs label and features");
    }
    std::size_t label;
    if (!parse_label(fields[0], &label)) {
      throw ParseError("dataset row " + std::to_string(row) + ": bad label \"" + fields[0] + "\"");
    }
    std::vector<double> features(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v;
      if (!parse_double(fields[i], &v)) {
        throw ParseError("dataset row " + std::to_string(row) + ": bad feature \"" + fields[i] +
                         "\"");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ParseError("dataset row " + std::to_string(row) + ": feature " +
                         std::to_string(i) + " = " + fields[i] + " outside [0,1]");
      }
      features[i - 1] = v;
    }
    if (data.feature_dim == 0 && data.xs.empty()) {
      data.feature_dim = features.size();
    } else if (features.size() != data.feature_dim) {
      throw ParseError("dataset row " + std::to_string(row) + ": expected " +
                       std::to_string(data.feature_dim) + " features, got " +
                       std::to_string(features.size()));
    }
    max_label = std::max(max_label, label);
    data.xs.push_back(Tensor::vector(std::move(features)));
    data.ys.push_back(label);
  }
  data.class_count = data.xs.empty() ? 0 : max_label + 1;
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_csv(ss.str());
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "label";
  for (std::size_t i = 1; i <= data.feature_dim; ++i) out << ",f" << i;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.ys[r];
    for (std::size_t i = 0; i < data.feature_dim; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.xs[r][i]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset synth_dataset(SynthKind kind, std::size_t n_per_class, std::size_t class_count,
                      double noise, std::uint64_t seed) {
  if (class_count < 2) throw UsageError("synth_dataset: class_count must be >= 2");
  if (kind == SynthKind::moons && class_count != 2) {
    throw UsageError("synth_dataset: moons is a 2-class generator");
  }
  if (noise < 0.0) throw UsageError("synth_dataset: noise must be >= 0");

  Dataset data;
  data.feature_dim = 2;
  data.class_count = class_count;
  data.xs.reserve(n_per_class * class_count);
  data.ys.reserve(n_per_class * class_count);

  Rng rng(stream_key(seed, 0x64617461ULL, static_cast<std::uint64_t>(kind)));

  for (std::size_t c = 0; c < class_count; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      double px = 0.5, py = 0.5;
      switch (kind) {
        case SynthKind::blobs: {
          double ang = kTwoPi * static_cast<double>(c) / static_cast<double>(class_count);
          px = 0.5 + 0.32 * std::cos(ang) + noise * rng.normal();
          py = 0.5 + 0.32 * std::sin(ang) + noise * rng.normal();
          break;
        }
        case SynthKind::rings: {
          double radius = 0.45 * static_cast<double>(c + 1) / static_cast<double>(class_count);
          double ang = rng.uniform(0.0, kTwoPi);
          double r = radius + noise * rng.normal();
          px = 0.5 + r * std::cos(ang);
          py = 0.5 + r * std::sin(ang);
          break;
        }
        case SynthKind::moons: {
          double t = rng.uniform(0.0, 3.141592653589793);
          double mx = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
          double my = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
          px = 0.5 + 0.26 * (mx - 0.5) + noise * rng.normal();
          py = 0.5 + 0.26 * (my - 0.25) + noise * rng.normal();
          break;
        }
      }
      data.xs.push_back(Tensor::vector({clamp01(px), clamp01(py)}));
      data.ys.push_back(c);
    }
  }
  return data;
}

}  // namespace marginbench
